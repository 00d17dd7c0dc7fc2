//! One-step samplers in Monte form: a base permutation followed by
//! independent collisions on disjoint position pairs.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::config::check_exact;
use crate::error::{Error, Result};
use crate::group::table;
use crate::kernel::TransitionMatrix;
use crate::perm::{reversal_image, Permutation};
use crate::scalar::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrevForm {
    Plain,
    Monte,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShuffleKind {
    ThorpForward,
    ThorpReverse,
    LrevPlain,
    LrevMonte,
}

impl ShuffleKind {
    pub fn name(self) -> &'static str {
        match self {
            ShuffleKind::ThorpForward => "thorp_forward",
            ShuffleKind::ThorpReverse => "thorp_reverse",
            ShuffleKind::LrevPlain => "lrev_plain",
            ShuffleKind::LrevMonte => "lrev_monte",
        }
    }

    pub fn is_thorp(self) -> bool {
        matches!(self, ShuffleKind::ThorpForward | ShuffleKind::ThorpReverse)
    }
}

impl fmt::Display for ShuffleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ShuffleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "thorp_forward" => ShuffleKind::ThorpForward,
            "thorp_reverse" => ShuffleKind::ThorpReverse,
            "lrev_plain" => ShuffleKind::LrevPlain,
            "lrev_monte" => ShuffleKind::LrevMonte,
            other => return Err(Error::InvalidModel(format!("unknown model kind `{other}`"))),
        })
    }
}

/// A validated shuffle: kind, deck size, and `L` for the reversal chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ShuffleModel {
    kind: ShuffleKind,
    n: usize,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    l: Option<usize>,
}

impl ShuffleModel {
    pub fn new(kind: ShuffleKind, n: usize, l: Option<usize>) -> Result<Self> {
        if kind.is_thorp() {
            if n < 2 || !n.is_multiple_of(2) {
                return Err(Error::InvalidModel(format!(
                    "{kind} needs an even deck, got n = {n}"
                )));
            }
            if l.is_some() {
                return Err(Error::InvalidModel(format!("{kind} takes no L")));
            }
        } else {
            let l = l.ok_or_else(|| Error::InvalidModel(format!("{kind} needs L")))?;
            if n < 2 || l < 1 || l >= n {
                return Err(Error::InvalidModel(format!(
                    "{kind} needs 1 <= L <= n-1, got n = {n}, L = {l}"
                )));
            }
        }
        Ok(ShuffleModel { kind, n, l })
    }

    pub fn thorp(n: usize, direction: Direction) -> Result<Self> {
        let kind = match direction {
            Direction::Forward => ShuffleKind::ThorpForward,
            Direction::Reverse => ShuffleKind::ThorpReverse,
        };
        ShuffleModel::new(kind, n, None)
    }

    pub fn lrev(n: usize, l: usize, form: LrevForm) -> Result<Self> {
        let kind = match form {
            LrevForm::Plain => ShuffleKind::LrevPlain,
            LrevForm::Monte => ShuffleKind::LrevMonte,
        };
        ShuffleModel::new(kind, n, Some(l))
    }

    pub fn kind(&self) -> ShuffleKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> Option<usize> {
        self.l
    }

    /// Set when an L-reversal lies outside the analysed regime `n >= 4L`.
    pub fn regime_warning(&self) -> Option<String> {
        match self.l {
            Some(l) if self.n < 4 * l => Some(format!(
                "n = {} < 4L = {}: outside the regime the bounds are stated for",
                self.n,
                4 * l
            )),
            _ => None,
        }
    }

    pub fn sample_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> StepDraw {
        let n = self.n;
        match self.kind {
            ShuffleKind::ThorpForward | ShuffleKind::ThorpReverse => {
                let half = n / 2;
                let mut coins = SmallVec::new();
                for w in 0..half.div_ceil(64) {
                    let bits = (half - 64 * w).min(64);
                    let word: u64 = rng.random();
                    coins.push(if bits == 64 {
                        word
                    } else {
                        word & ((1u64 << bits) - 1)
                    });
                }
                let direction = if self.kind == ShuffleKind::ThorpForward {
                    Direction::Forward
                } else {
                    Direction::Reverse
                };
                StepDraw::Thorp { direction, coins }
            }
            ShuffleKind::LrevPlain => {
                let l = self.l.expect("validated");
                let idx = rng.random_range(0..n * (l + 1));
                StepDraw::Reversal {
                    start: idx / (l + 1),
                    len: idx % (l + 1),
                }
            }
            ShuffleKind::LrevMonte => {
                let l = self.l.expect("validated");
                let start = rng.random_range(0..n);
                let u = rng.random_range(0..2 * (l + 1));
                match u {
                    0 => StepDraw::Reversal { start, len: l },
                    1 => StepDraw::Reversal { start, len: l - 1 },
                    _ => StepDraw::ReversalCollision {
                        start,
                        offset: rng.random_range(1..=l),
                        coin: rng.random(),
                    },
                }
            }
        }
    }

    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R) -> MonteStep {
        self.sample_draw(rng).to_monte_step(self.n)
    }

    /// Every outcome of one step with its probability, merged by realized
    /// permutation and listed in rank order.
    pub fn step_law<W: Weight>(&self) -> Result<Vec<(Permutation, W)>> {
        let n = self.n;
        let mut outcomes: Vec<(Permutation, W)> = Vec::new();
        match self.kind {
            ShuffleKind::ThorpForward | ShuffleKind::ThorpReverse => {
                let half = n / 2;
                if half > 20 {
                    return Err(Error::InvalidArgument(format!(
                        "enumerating 2^{half} coin patterns is not supported"
                    )));
                }
                let w = W::ratio(1, 1u64 << half);
                let direction = if self.kind == ShuffleKind::ThorpForward {
                    Direction::Forward
                } else {
                    Direction::Reverse
                };
                for mask in 0..(1u64 << half) {
                    let draw = StepDraw::Thorp {
                        direction,
                        coins: SmallVec::from_slice(&[mask]),
                    };
                    outcomes.push((draw.realize(n), w));
                }
            }
            ShuffleKind::LrevPlain => {
                let l = self.l.expect("validated");
                let w = W::ratio(1, (n * (l + 1)) as u64);
                for start in 0..n {
                    for len in 0..=l {
                        outcomes.push((StepDraw::Reversal { start, len }.realize(n), w));
                    }
                }
            }
            ShuffleKind::LrevMonte => {
                let l = self.l.expect("validated");
                let branch = W::ratio(1, (2 * n * (l + 1)) as u64);
                let coin = W::ratio(1, (2 * n * (l + 1)) as u64);
                for start in 0..n {
                    outcomes.push((StepDraw::Reversal { start, len: l }.realize(n), branch));
                    outcomes.push((StepDraw::Reversal { start, len: l - 1 }.realize(n), branch));
                    for offset in 1..=l {
                        for c in [false, true] {
                            let d = StepDraw::ReversalCollision {
                                start,
                                offset,
                                coin: c,
                            };
                            outcomes.push((d.realize(n), coin));
                        }
                    }
                }
            }
        }
        let mut merged: BTreeMap<u64, (Permutation, W)> = BTreeMap::new();
        for (p, w) in outcomes {
            merged
                .entry(p.rank().value())
                .and_modify(|e| e.1 = e.1 + w)
                .or_insert((p, w));
        }
        Ok(merged.into_values().collect())
    }
}

impl fmt::Display for ShuffleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.l {
            Some(l) => write!(f, "{}(n={}, L={})", self.kind, self.n, l),
            None => write!(f, "{}(n={})", self.kind, self.n),
        }
    }
}

/// A compact record of one step's randomness, with O(1) position lookups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepDraw {
    /// Bit `x` of `coins` resolves the collision with coin index `x`.
    Thorp {
        direction: Direction,
        coins: SmallVec<[u64; 2]>,
    },
    /// Reverse positions `start..=start+len` (mod n).
    Reversal { start: usize, len: usize },
    /// Reverse `start..=start+offset`, then collide positions `start` and
    /// `start+offset`.
    ReversalCollision {
        start: usize,
        offset: usize,
        coin: bool,
    },
}

impl StepDraw {
    fn thorp_coin(coins: &[u64], i: usize) -> bool {
        (coins[i / 64] >> (i % 64)) & 1 == 1
    }

    /// Where the base map (before any collision) sends position `x`.
    pub fn base_image(&self, n: usize, x: usize) -> usize {
        let half = n / 2;
        match self {
            StepDraw::Thorp {
                direction: Direction::Forward,
                ..
            } => {
                if x < half {
                    2 * x
                } else {
                    2 * (x - half) + 1
                }
            }
            StepDraw::Thorp {
                direction: Direction::Reverse,
                ..
            } => {
                if x.is_multiple_of(2) {
                    x / 2
                } else {
                    x / 2 + half
                }
            }
            StepDraw::Reversal { start, len } => reversal_image(n, *start, *len, x),
            StepDraw::ReversalCollision { start, offset, .. } => {
                reversal_image(n, *start, *offset, x)
            }
        }
    }

    /// Where the card at position `x` ends up.
    pub fn position_image(&self, n: usize, x: usize) -> usize {
        match self {
            StepDraw::Thorp { direction, coins } => {
                let half = n / 2;
                match direction {
                    Direction::Forward => {
                        let (base, idx) = if x < half {
                            (2 * x, x)
                        } else {
                            (2 * (x - half) + 1, x - half)
                        };
                        if Self::thorp_coin(coins, idx) {
                            base ^ 1
                        } else {
                            base
                        }
                    }
                    Direction::Reverse => {
                        let idx = x / 2;
                        let base = if x.is_multiple_of(2) { idx } else { idx + half };
                        if Self::thorp_coin(coins, idx) {
                            if base < half {
                                base + half
                            } else {
                                base - half
                            }
                        } else {
                            base
                        }
                    }
                }
            }
            StepDraw::Reversal { start, len } => reversal_image(n, *start, *len, x),
            StepDraw::ReversalCollision {
                start,
                offset,
                coin,
            } => {
                let y = reversal_image(n, *start, *offset, x);
                if !coin {
                    y
                } else if y == *start {
                    (start + offset) % n
                } else if y == (start + offset) % n {
                    *start
                } else {
                    y
                }
            }
        }
    }

    /// Colliding position pairs (after the base map), with their coins.
    pub fn collisions(&self, n: usize) -> SmallVec<[(usize, usize, bool); 4]> {
        match self {
            StepDraw::Thorp { direction, coins } => {
                let half = n / 2;
                (0..half)
                    .map(|x| {
                        let c = Self::thorp_coin(coins, x);
                        match direction {
                            Direction::Forward => (2 * x, 2 * x + 1, c),
                            Direction::Reverse => (x, x + half, c),
                        }
                    })
                    .collect()
            }
            StepDraw::Reversal { .. } => SmallVec::new(),
            StepDraw::ReversalCollision {
                start,
                offset,
                coin,
            } => {
                let b = (start + offset) % n;
                SmallVec::from_slice(&[((*start).min(b), (*start).max(b), *coin)])
            }
        }
    }

    pub fn realize(&self, n: usize) -> Permutation {
        Permutation::from_vec_unchecked((0..n).map(|x| self.position_image(n, x)).collect())
    }

    pub fn to_monte_step(&self, n: usize) -> MonteStep {
        let base = match self {
            StepDraw::Thorp { direction, .. } => thorp_base(n, *direction),
            StepDraw::Reversal { start, len } => Permutation::from_vec_unchecked(
                (0..n).map(|x| reversal_image(n, *start, *len, x)).collect(),
            ),
            StepDraw::ReversalCollision { start, offset, .. } => Permutation::from_vec_unchecked(
                (0..n)
                    .map(|x| reversal_image(n, *start, *offset, x))
                    .collect(),
            ),
        };
        let cs = self.collisions(n);
        MonteStep {
            base,
            pairs: cs.iter().map(|c| (c.0, c.1)).collect(),
            coins: cs.iter().map(|c| c.2).collect(),
        }
    }
}

/// The deterministic part `ν` of a Thorp step.
pub fn thorp_base(n: usize, direction: Direction) -> Permutation {
    let half = n / 2;
    let map = (0..n)
        .map(|x| match direction {
            Direction::Forward if x < half => 2 * x,
            Direction::Forward => 2 * (x - half) + 1,
            Direction::Reverse if x % 2 == 0 => x / 2,
            Direction::Reverse => x / 2 + half,
        })
        .collect();
    Permutation::from_vec_unchecked(map)
}

/// One step in Monte form: `base`, then a collision on each pair, applied
/// iff its coin is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteStep {
    base: Permutation,
    pairs: Vec<(usize, usize)>,
    coins: Vec<bool>,
}

impl MonteStep {
    pub fn new(base: Permutation, pairs: Vec<(usize, usize)>, coins: Vec<bool>) -> Result<Self> {
        let n = base.n();
        if pairs.len() != coins.len() {
            return Err(Error::SizeMismatch {
                left: pairs.len(),
                right: coins.len(),
            });
        }
        let mut used = vec![false; n];
        for &(a, b) in &pairs {
            if a >= n || b >= n {
                return Err(Error::OutOfRange(format!("pair ({a}, {b}) on n = {n}")));
            }
            if a == b
                || std::mem::replace(&mut used[a], true)
                || std::mem::replace(&mut used[b], true)
            {
                return Err(Error::InvalidArgument(format!(
                    "collision pairs overlap at ({a}, {b})"
                )));
            }
        }
        Ok(MonteStep { base, pairs, coins })
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn base(&self) -> &Permutation {
        &self.base
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn coins(&self) -> &[bool] {
        &self.coins
    }

    pub fn realize(&self) -> Permutation {
        let mut map = self.base.as_slice().to_vec();
        let mut swap_to: Vec<usize> = (0..self.n()).collect();
        for (&(a, b), &c) in self.pairs.iter().zip(&self.coins) {
            if c {
                swap_to[a] = b;
                swap_to[b] = a;
            }
        }
        for y in map.iter_mut() {
            *y = swap_to[*y];
        }
        Permutation::from_vec_unchecked(map)
    }
}

/// Free-function form of [`MonteStep::realize`].
pub fn realize(step: &MonteStep) -> Permutation {
    step.realize()
}

/// The identity or the transposition of positions `a` and `b`, each with
/// probability one half.
pub fn sample_collision<R: Rng + ?Sized>(
    n: usize,
    a: usize,
    b: usize,
    rng: &mut R,
) -> Result<Permutation> {
    if a == b {
        return Err(Error::InvalidArgument(format!(
            "collision of position {a} with itself"
        )));
    }
    let swap = Permutation::swap(n, a, b)?;
    Ok(if rng.random::<bool>() {
        swap
    } else {
        Permutation::identity(n)
    })
}

pub fn thorp_step<R: Rng + ?Sized>(
    n: usize,
    direction: Direction,
    rng: &mut R,
) -> Result<MonteStep> {
    Ok(ShuffleModel::thorp(n, direction)?.sample_step(rng))
}

pub fn lrev_step<R: Rng + ?Sized>(
    n: usize,
    l: usize,
    form: LrevForm,
    rng: &mut R,
) -> Result<MonteStep> {
    Ok(ShuffleModel::lrev(n, l, form)?.sample_step(rng))
}

/// Exact one-step transition matrix on `S_n` (rank-indexed): row `σ` is the
/// law of `σ` followed by one step.
pub fn step_kernel<W: Weight>(model: &ShuffleModel) -> Result<TransitionMatrix<W>> {
    check_exact(model.n())?;
    let law = model.step_law::<W>()?;
    let t = table(model.n());
    let rows = (0..t.size)
        .into_par_iter()
        .map(|r| law.iter().map(|(s, w)| (t.rank_then(r, s), *w)).collect())
        .collect();
    TransitionMatrix::from_rows(t.size, rows)
}

/// Exact law of one tracked card's position after one step: row `x` is
/// where a card at position `x` goes. No cap on `n`.
pub fn single_card_kernel<W: Weight>(model: &ShuffleModel) -> Result<TransitionMatrix<W>> {
    let n = model.n();
    let mut rows: Vec<Vec<(usize, W)>> = vec![Vec::new(); n];
    match model.kind() {
        ShuffleKind::ThorpForward | ShuffleKind::ThorpReverse => {
            let direction = if model.kind() == ShuffleKind::ThorpForward {
                Direction::Forward
            } else {
                Direction::Reverse
            };
            let nu = thorp_base(n, direction);
            let half = W::ratio(1, 2);
            for (x, row) in rows.iter_mut().enumerate() {
                let y = nu.image(x);
                let partner = match direction {
                    Direction::Forward => y ^ 1,
                    Direction::Reverse => (y + n / 2) % n,
                };
                row.push((y, half));
                row.push((partner, half));
            }
        }
        ShuffleKind::LrevPlain | ShuffleKind::LrevMonte => {
            let l = model.l().expect("validated");
            let w = W::ratio(1, (n * (l + 1)) as u64);
            for (x, row) in rows.iter_mut().enumerate() {
                for v in 0..n {
                    for len in 0..=l {
                        row.push((reversal_image(n, v, len, x), w));
                    }
                }
            }
        }
    }
    TransitionMatrix::from_rows(n, rows)
}
