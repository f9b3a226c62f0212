//! Block-parallel sampling with per-block random streams.

use matprod_core::haar::RngState;
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "MATPROD_THREADS";
/// Samples per random stream.
pub const BLOCK: usize = 1000;

pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| CliError::validation(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        Err(_) => Ok(None),
    }
}

/// Sizes the global worker pool from `threads`, then the environment. Has no
/// effect once the pool exists.
pub fn init_threads(threads: Option<usize>) -> Result<()> {
    let t = match threads {
        Some(t) => Some(t),
        None => threads_from_env()?,
    };
    if let Some(t) = t {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

/// Produces `count` items in blocks of `block`; block `b` draws from stream `b`
/// of `seed`, so the output does not depend on the number of workers.
pub fn run_blocks<T, F>(count: usize, block: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut RngState) -> Result<Vec<T>> + Sync,
{
    let block = block.max(1);
    let nblocks = count.div_ceil(block);
    let parts: Vec<Result<Vec<T>>> = (0..nblocks)
        .into_par_iter()
        .map(|b| {
            let len = block.min(count - b * block);
            let mut rng = RngState::new(seed, b as u64);
            let out = f(len, &mut rng)?;
            if out.len() != len {
                return Err(CliError::Numerical(format!("block {b} produced {} of {len} items", out.len())));
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(count);
    for p in parts {
        all.extend(p?);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_are_deterministic() {
        let f = |len: usize, rng: &mut RngState| Ok((0..len).map(|_| rng.uniform()).collect());
        let a = run_blocks(2500, 1000, 3, f).unwrap();
        let b = run_blocks(2500, 1000, 3, f).unwrap();
        assert_eq!(a.len(), 2500);
        assert_eq!(a, b);
        let c = run_blocks(1000, 1000, 3, f).unwrap();
        assert_eq!(&a[..1000], &c[..]);
    }
}
