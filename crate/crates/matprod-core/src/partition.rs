//! Integer partitions (Young diagrams).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// A weakly decreasing sequence of positive integers; trailing zeros are stripped.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: &[usize]) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParams(alloc::format!(
                "partition parts must be weakly decreasing: {parts:?}"
            )));
        }
        let len = parts.iter().rposition(|&p| p > 0).map_or(0, |i| i + 1);
        Ok(Partition { parts: parts[..len].to_vec() })
    }

    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    /// Rectangle with `rows` rows of `cols` boxes.
    pub fn rectangle(rows: usize, cols: usize) -> Self {
        if cols == 0 {
            return Self::empty();
        }
        Partition { parts: vec![cols; rows] }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// Part `i` (0-based), zero beyond the length.
    pub fn part(&self, i: usize) -> usize {
        self.parts.get(i).copied().unwrap_or(0)
    }

    /// Number of nonzero parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Number of boxes.
    pub fn weight(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn conjugate(&self) -> Partition {
        let w = self.part(0);
        let parts = (0..w).map(|j| self.parts.iter().filter(|&&p| p > j).count()).collect();
        Partition { parts }
    }

    /// Arm length of box `(i, j)` (0-based row, column).
    pub fn arm(&self, i: usize, j: usize) -> usize {
        self.part(i) - j - 1
    }

    /// Leg length of box `(i, j)`; needs the conjugate column length.
    pub fn leg(&self, conj: &Partition, i: usize, j: usize) -> usize {
        conj.part(j) - i - 1
    }

    pub fn contains(&self, other: &Partition) -> bool {
        other.len() <= self.len() && other.parts.iter().enumerate().all(|(i, &p)| p <= self.part(i))
    }

    /// Dominance order: `self ≥ other` with equal weights.
    pub fn dominates(&self, other: &Partition) -> bool {
        if self.weight() != other.weight() {
            return false;
        }
        let (mut a, mut b) = (0, 0);
        for i in 0..self.len().max(other.len()) {
            a += self.part(i);
            b += other.part(i);
            if a < b {
                return false;
            }
        }
        true
    }

    /// All `μ` with `λ/μ` a horizontal strip and `ℓ(μ) ≤ max_len`.
    pub fn horizontal_strip_predecessors(&self, max_len: usize) -> Vec<Partition> {
        let l = self.len();
        if l > max_len + 1 {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut cur = vec![0usize; l];
        self.strip_rec(0, max_len, &mut cur, &mut out);
        out
    }

    fn strip_rec(&self, i: usize, max_len: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if i == cur.len() {
            if let Ok(p) = Partition::new(cur) {
                if p.len() <= max_len {
                    out.push(p);
                }
            }
            return;
        }
        let hi = self.part(i);
        let lo = self.part(i + 1);
        for v in lo..=hi {
            cur[i] = v;
            self.strip_rec(i + 1, max_len, cur, out);
        }
    }

    /// Partitions of `k` in reverse lexicographic order (largest first).
    pub fn all_of_weight(k: usize) -> Vec<Partition> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if rem == 0 {
                out.push(Partition { parts: cur.clone() });
                return;
            }
            for p in (1..=rem.min(max)).rev() {
                cur.push(p);
                rec(rem - p, p, cur, out);
                cur.pop();
            }
        }
        rec(k, k, &mut cur, &mut out);
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_trailing_zeros() {
        let p = Partition::new(&[3, 1, 0, 0]).unwrap();
        assert_eq!(p.parts(), &[3, 1]);
        assert_eq!(p.weight(), 4);
        assert!(Partition::new(&[1, 2]).is_err());
    }

    #[test]
    fn conjugate_and_hooks() {
        let p = Partition::new(&[3, 1]).unwrap();
        let c = p.conjugate();
        assert_eq!(c.parts(), &[2, 1, 1]);
        assert_eq!(p.arm(0, 0), 2);
        assert_eq!(p.leg(&c, 0, 0), 1);
    }

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (0..8).map(|k| Partition::all_of_weight(k).len()).collect();
        assert_eq!(counts, [1, 1, 2, 3, 5, 7, 11, 15]);
    }

    #[test]
    fn strips() {
        let p = Partition::new(&[2, 1]).unwrap();
        let preds = p.horizontal_strip_predecessors(1);
        let w: Vec<_> = preds.iter().map(|q| q.parts().to_vec()).collect();
        assert_eq!(w, [vec![1], vec![2]]);
        assert_eq!(p.horizontal_strip_predecessors(3).len(), 4);
    }
}
