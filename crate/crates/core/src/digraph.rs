//! Directed graphs on a fixed actor set, stored as row and column bitsets.
//!
//! Both orientations are kept so that the triad counts needed by the change
//! statistics reduce to popcounts of word-wise ANDs.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// An irreflexive digraph on `n` actors. Row `i` holds the ties sent by `i`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Digraph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    cols: Vec<u64>,
}

#[inline]
fn popcount_and(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

impl Digraph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(WORD).max(1);
        Digraph { n, words, rows: vec![0; n * words], cols: vec![0; n * words] }
    }

    pub fn from_arcs<I: IntoIterator<Item = (usize, usize)>>(n: usize, arcs: I) -> Result<Self> {
        let mut g = Digraph::empty(n);
        for (i, j) in arcs {
            if i >= n || j >= n {
                return Err(Error::InvalidData(alloc::format!("arc ({i}, {j}) outside 0..{n}")));
            }
            if i == j {
                return Err(Error::InvalidData(alloc::format!("self-tie at actor {i}")));
            }
            g.set(i, j, true);
        }
        Ok(g)
    }

    /// Builds a digraph from an adjacency matrix of 0/1 entries.
    pub fn from_matrix(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut g = Digraph::empty(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len(), what: "adjacency row" });
            }
            for (j, &v) in row.iter().enumerate() {
                match (v, i == j) {
                    (0, _) => {}
                    (1, false) => g.set(i, j, true),
                    (1, true) => {
                        return Err(Error::InvalidData(alloc::format!(
                            "diagonal entry ({}, {}) is 1",
                            i + 1,
                            j + 1
                        )))
                    }
                    _ => {
                        return Err(Error::InvalidData(alloc::format!(
                            "entry ({}, {}) is {v}, expected 0 or 1",
                            i + 1,
                            j + 1
                        )))
                    }
                }
            }
        }
        Ok(g)
    }

    pub fn to_matrix(&self) -> Vec<Vec<u8>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.tie(i, j)).collect()).collect()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_tie(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / WORD] >> (j % WORD) & 1 == 1
    }

    #[inline]
    pub fn tie(&self, i: usize, j: usize) -> u8 {
        self.has_tie(i, j) as u8
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i != j, "self-ties are structurally zero");
        if self.has_tie(i, j) != value {
            self.flip(i, j);
        }
    }

    /// Flips tie variable `(i, j)`; applying it twice restores the digraph.
    #[inline]
    pub fn toggle(&mut self, i: usize, j: usize) {
        assert!(i != j, "self-ties are structurally zero");
        self.flip(i, j);
    }

    #[inline]
    fn flip(&mut self, i: usize, j: usize) {
        self.rows[i * self.words + j / WORD] ^= 1 << (j % WORD);
        self.cols[j * self.words + i / WORD] ^= 1 << (i % WORD);
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[u64] {
        &self.cols[j * self.words..(j + 1) * self.words]
    }

    #[inline]
    pub fn out_degree(&self, i: usize) -> u32 {
        self.row(i).iter().map(|w| w.count_ones()).sum()
    }

    #[inline]
    pub fn in_degree(&self, j: usize) -> u32 {
        self.col(j).iter().map(|w| w.count_ones()).sum()
    }

    /// Number of reciprocated ties of `i`.
    #[inline]
    pub fn reciprocated_degree(&self, i: usize) -> u32 {
        popcount_and(self.row(i), self.col(i))
    }

    /// `sum_k x_ik x_hk`: actors that both `i` and `h` send ties to.
    #[inline]
    pub fn shared_out(&self, i: usize, h: usize) -> u32 {
        popcount_and(self.row(i), self.row(h))
    }

    /// `sum_k x_ik x_kh`: two-paths from `i` to `h`.
    #[inline]
    pub fn two_paths(&self, i: usize, h: usize) -> u32 {
        popcount_and(self.row(i), self.col(h))
    }

    pub fn arc_count(&self) -> usize {
        self.rows.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            (0..self.n).filter(move |&j| self.has_tie(i, j)).map(move |j| (i, j))
        })
    }

    /// Number of tie variables on which the two digraphs differ.
    pub fn hamming(&self, other: &Digraph) -> usize {
        debug_assert_eq!(self.n, other.n);
        self.rows.iter().zip(&other.rows).map(|(a, b)| (a ^ b).count_ones() as usize).sum()
    }

    /// Tie variables on which the two digraphs differ, in row-major order.
    pub fn differences(&self, other: &Digraph) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.has_tie(i, j) != other.has_tie(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.arc_count() as f64 / (self.n * (self.n - 1)) as f64
    }

    /// Packs the off-diagonal tie variables into an integer, row-major.
    /// Only meaningful for `n * (n - 1) <= 64`.
    pub fn to_code(&self) -> u64 {
        let mut code = 0u64;
        let mut bit = 0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    if self.has_tie(i, j) {
                        code |= 1 << bit;
                    }
                    bit += 1;
                }
            }
        }
        code
    }

    pub fn from_code(n: usize, code: u64) -> Self {
        let mut g = Digraph::empty(n);
        let mut bit = 0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    if code >> bit & 1 == 1 {
                        g.flip(i, j);
                    }
                    bit += 1;
                }
            }
        }
        g
    }
}

impl fmt::Debug for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digraph(n={}, arcs=[", self.n)?;
        for (k, (i, j)) in self.arcs().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({i},{j})")?;
        }
        write!(f, "])")
    }
}

/// Tie variables that may never be present. The diagonal is always masked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieMask {
    n: usize,
    forbidden: Vec<bool>,
}

impl TieMask {
    pub fn none(n: usize) -> Self {
        let mut forbidden = vec![false; n * n];
        for i in 0..n {
            forbidden[i * n + i] = true;
        }
        TieMask { n, forbidden }
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(n: usize, pairs: I) -> Self {
        let mut mask = TieMask::none(n);
        for (i, j) in pairs {
            mask.forbidden[i * n + j] = true;
        }
        mask
    }

    /// Reads a 0/1 matrix where 1 marks a structural zero. Diagonal entries are
    /// forced to 1 regardless of the input.
    pub fn from_matrix(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut mask = TieMask::none(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len(), what: "mask row" });
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => mask.forbidden[i * n + j] = true,
                    _ => return Err(Error::InvalidData(alloc::format!("mask entry ({}, {}) is {v}", i + 1, j + 1))),
                }
            }
        }
        Ok(mask)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_forbidden(&self, i: usize, j: usize) -> bool {
        self.forbidden[i * self.n + j]
    }

    /// Off-diagonal pairs that are masked.
    pub fn forbidden_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            (0..self.n).filter(move |&j| j != i && self.is_forbidden(i, j)).map(move |j| (i, j))
        })
    }
}
