//! Cached flat tables over all of S_n, shared by the exact engines.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::perm::{factorial, lehmer_rank, lehmer_unrank, Permutation};

/// Every permutation of `n` in rank order, stored flat.
pub(crate) struct GroupTable {
    pub n: usize,
    pub size: usize,
    /// `maps[r*n + card]` = position of `card` in the permutation of rank `r`.
    maps: Vec<u8>,
    /// `inv[r*n + pos]` = card at `pos`.
    inv: Vec<u8>,
    suffix: OnceLock<Vec<SuffixPlan>>,
}

/// Ranks grouped by the cards at positions `k+1..n`, and within a group
/// sorted by the card at position `k`.
pub(crate) struct SuffixPlan {
    pub order: Vec<u32>,
    pub card: Vec<u8>,
    /// Boundaries into `order`; group `g` is `starts[g]..starts[g+1]`.
    pub starts: Vec<u32>,
}

impl GroupTable {
    fn build(n: usize) -> Self {
        let size = factorial(n).expect("cap keeps n small") as usize;
        let mut maps = Vec::with_capacity(size * n);
        let mut inv = vec![0u8; size * n];
        for r in 0..size {
            let m = lehmer_unrank(n, r as u64);
            for (card, &pos) in m.iter().enumerate() {
                inv[r * n + pos] = card as u8;
            }
            maps.extend(m.into_iter().map(|x| x as u8));
        }
        GroupTable {
            n,
            size,
            maps,
            inv,
            suffix: OnceLock::new(),
        }
    }

    #[inline]
    pub fn map(&self, r: usize) -> &[u8] {
        &self.maps[r * self.n..(r + 1) * self.n]
    }

    #[inline]
    pub fn inv(&self, r: usize) -> &[u8] {
        &self.inv[r * self.n..(r + 1) * self.n]
    }

    #[cfg(test)]
    pub fn perm(&self, r: usize) -> Permutation {
        Permutation::from_vec_unchecked(self.map(r).iter().map(|&x| x as usize).collect())
    }

    /// Rank of `compose(perm(r), step)`.
    pub fn rank_then(&self, r: usize, step: &Permutation) -> usize {
        let mut buf = [0usize; 32];
        let out = &mut buf[..self.n];
        for (o, &x) in out.iter_mut().zip(self.map(r)) {
            *o = step.image(x as usize);
        }
        lehmer_rank(out) as usize
    }

    pub fn suffix_plans(&self) -> &[SuffixPlan] {
        self.suffix
            .get_or_init(|| (0..self.n).map(|k| self.plan(k)).collect())
    }

    fn plan(&self, k: usize) -> SuffixPlan {
        let n = self.n;
        let key = |r: usize| -> u64 {
            self.inv(r)[k + 1..]
                .iter()
                .fold(0u64, |acc, &c| acc * n as u64 + c as u64)
        };
        let mut entries: Vec<(u64, u8, u32)> = (0..self.size)
            .map(|r| (key(r), self.inv(r)[k], r as u32))
            .collect();
        entries.sort_unstable();
        let mut starts = vec![0u32];
        for i in 1..entries.len() {
            if entries[i].0 != entries[i - 1].0 {
                starts.push(i as u32);
            }
        }
        starts.push(entries.len() as u32);
        SuffixPlan {
            order: entries.iter().map(|e| e.2).collect(),
            card: entries.iter().map(|e| e.1).collect(),
            starts,
        }
    }
}

pub(crate) fn table(n: usize) -> Arc<GroupTable> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GroupTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("group table cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(GroupTable::build(n)))
        .clone()
}
