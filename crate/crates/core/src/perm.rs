//! Permutations of a deck of `n` cards.
//!
//! A [`Permutation`] stores `map[card] = position`. When a permutation is used
//! as a shuffle step it reads as a position map: the card sitting at position
//! `x` moves to position `map[x]`. Products are written left to right,
//! `compose(p, q)` meaning "apply `p`, then `q`", so a deck in state `p`
//! shuffled by the step `q` ends in state `compose(p, q)`.
//!
//! Card `x` is the card that starts at position `x`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bijection on `{0, .., n-1}`; `map[i]` is the position of card `i`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.map, f)
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(map: Vec<usize>) -> Result<Self> {
        Permutation::from_vec(map)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.map
    }
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n).collect(),
        }
    }

    /// Validates that `map` hits every value in `0..map.len()` exactly once.
    pub fn from_vec(map: Vec<usize>) -> Result<Self> {
        if map.is_empty() {
            return Err(Error::InvalidPermutation("empty deck".into()));
        }
        let n = map.len();
        let mut seen = vec![false; n];
        for &x in &map {
            if x >= n {
                return Err(Error::InvalidPermutation(format!(
                    "value {x} out of range for n = {n}"
                )));
            }
            if std::mem::replace(&mut seen[x], true) {
                return Err(Error::InvalidPermutation(format!("value {x} repeated")));
            }
        }
        Ok(Permutation { map })
    }

    pub(crate) fn from_vec_unchecked(map: Vec<usize>) -> Self {
        debug_assert!(Permutation::from_vec(map.clone()).is_ok());
        Permutation { map }
    }

    /// The transposition exchanging positions `a` and `b`.
    pub fn swap(n: usize, a: usize, b: usize) -> Result<Self> {
        if a >= n || b >= n {
            return Err(Error::OutOfRange(format!("swap({a}, {b}) on n = {n}")));
        }
        let mut map: Vec<usize> = (0..n).collect();
        map.swap(a, b);
        Ok(Permutation { map })
    }

    /// Reverses the cyclic interval of positions `v, v+1, .., v+l` (mod n).
    pub fn reversal(n: usize, v: usize, l: usize) -> Result<Self> {
        if n == 0 || v >= n {
            return Err(Error::OutOfRange(format!("start {v} on n = {n}")));
        }
        if l >= n {
            return Err(Error::OutOfRange(format!(
                "reversal length offset {l} would wrap onto itself (n = {n})"
            )));
        }
        let map = (0..n).map(|x| reversal_image(n, v, l, x)).collect();
        Ok(Permutation { map })
    }

    pub fn n(&self) -> usize {
        self.map.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    /// Position of card `card` (or, for a step, where position `card` goes).
    #[inline]
    pub fn image(&self, card: usize) -> usize {
        self.map[card]
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// `p` then `q`: `result[i] = q[p[i]]`.
    pub fn compose(&self, q: &Permutation) -> Result<Permutation> {
        if self.n() != q.n() {
            return Err(Error::SizeMismatch {
                left: self.n(),
                right: q.n(),
            });
        }
        Ok(self.then(q))
    }

    /// Unchecked [`compose`](Self::compose); panics on size mismatch.
    pub fn then(&self, q: &Permutation) -> Permutation {
        assert_eq!(self.n(), q.n(), "composing permutations of different sizes");
        Permutation {
            map: self.map.iter().map(|&x| q.map[x]).collect(),
        }
    }

    /// `result[p[i]] = i`. For a deck state this is the position-to-card view.
    pub fn invert(&self) -> Permutation {
        let mut inv = vec![0; self.n()];
        for (i, &x) in self.map.iter().enumerate() {
            inv[x] = i;
        }
        Permutation { map: inv }
    }

    /// Lehmer (lexicographic) rank of `map`.
    pub fn rank(&self) -> PermRank {
        PermRank {
            n: self.n(),
            rank: lehmer_rank(&self.map),
        }
    }

    pub fn unrank(r: PermRank) -> Permutation {
        Permutation {
            map: lehmer_unrank(r.n, r.rank),
        }
    }
}

/// Index of a permutation in lexicographic order of its `map`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PermRank {
    n: usize,
    rank: u64,
}

impl PermRank {
    pub fn new(n: usize, rank: u64) -> Result<Self> {
        let total = factorial(n)?;
        if rank >= total {
            return Err(Error::OutOfRange(format!(
                "rank {rank} outside [0, {total}) for n = {n}"
            )));
        }
        Ok(PermRank { n, rank })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self) -> u64 {
        self.rank
    }
}

/// `n!`, rejecting values that overflow `u64`.
pub fn factorial(n: usize) -> Result<u64> {
    if n > 20 {
        return Err(Error::OutOfRange(format!("{n}! overflows u64")));
    }
    Ok((1..=n as u64).product())
}

/// Where position `x` goes when positions `v..=v+l` (mod n) are reversed.
#[inline]
pub fn reversal_image(n: usize, v: usize, l: usize, x: usize) -> usize {
    let s = (x + n - v) % n;
    if s <= l {
        (v + l - s) % n
    } else {
        x
    }
}

pub(crate) fn lehmer_rank(map: &[usize]) -> u64 {
    let n = map.len();
    let mut rank = 0u64;
    for i in 0..n {
        let smaller_after = map[i + 1..].iter().filter(|&&y| y < map[i]).count() as u64;
        rank = rank * (n - i) as u64 + smaller_after;
    }
    rank
}

pub(crate) fn lehmer_unrank(n: usize, mut rank: u64) -> Vec<usize> {
    let mut digits = vec![0usize; n];
    for i in (0..n).rev() {
        let base = (n - i) as u64;
        digits[i] = (rank % base) as usize;
        rank /= base;
    }
    let mut pool: Vec<usize> = (0..n).collect();
    digits.into_iter().map(|d| pool.remove(d)).collect()
}

/// All permutations of `n` in rank order.
pub fn all_permutations(n: usize) -> Result<impl Iterator<Item = Permutation>> {
    let total = factorial(n)?;
    Ok((0..total).map(move |r| Permutation::from_vec_unchecked(lehmer_unrank(n, r))))
}
