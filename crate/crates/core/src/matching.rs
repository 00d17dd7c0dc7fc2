//! Collision logs and the match `m(x)`: the first card `x` collides with
//! after a cut time `T`, kept only when the choice is mutual.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::seeding::{run_trials, tag, TrialSeeder};
use crate::shuffle::ShuffleModel;
use crate::stats::{Proportion, Z99};
use crate::table::{fmt_f64, fmt_opt_bool, fmt_opt_f64, Table};

/// Fewest trials accepted by [`estimate_match_probs`].
pub const MIN_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CollisionEvent {
    /// Step number, starting at 1.
    pub step: usize,
    /// The two cards, smaller label first.
    pub cards: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CollisionLog {
    pub n: usize,
    pub t: usize,
    pub events: Vec<CollisionEvent>,
}

impl CollisionLog {
    /// Validates time order, the horizon, and disjointness within a step.
    pub fn new(n: usize, t: usize, events: Vec<CollisionEvent>) -> Result<Self> {
        let mut last_step = 0;
        let mut seen = vec![usize::MAX; n];
        for e in &events {
            let (x, y) = e.cards;
            if e.step == 0 || e.step > t || e.step < last_step {
                return Err(Error::InvalidArgument(format!(
                    "event at step {} out of order",
                    e.step
                )));
            }
            if x >= n || y >= n || x == y {
                return Err(Error::InvalidArgument(format!("bad card pair ({x}, {y})")));
            }
            for c in [x, y] {
                if seen[c] == e.step {
                    return Err(Error::InvalidArgument(format!(
                        "card {c} collides twice in step {}",
                        e.step
                    )));
                }
                seen[c] = e.step;
            }
            last_step = e.step;
        }
        Ok(CollisionLog { n, t, events })
    }
}

/// Runs `t` steps from `start` and records, for every collision, the two
/// cards sitting on the colliding positions once the base map has acted.
pub fn run_with_log_from<R: Rng + ?Sized>(
    model: &ShuffleModel,
    start: &Permutation,
    t: usize,
    rng: &mut R,
) -> Result<(Permutation, CollisionLog)> {
    let n = model.n();
    if start.n() != n {
        return Err(Error::SizeMismatch {
            left: start.n(),
            right: n,
        });
    }
    let mut card_at = start.invert().as_slice().to_vec();
    let mut mid = vec![0; n];
    let mut events = Vec::new();
    for step in 1..=t {
        let draw = model.sample_draw(rng);
        for (x, &c) in card_at.iter().enumerate() {
            mid[draw.base_image(n, x)] = c;
        }
        for (a, b, coin) in draw.collisions(n) {
            let (x, y) = (mid[a], mid[b]);
            events.push(CollisionEvent {
                step,
                cards: (x.min(y), x.max(y)),
            });
            if coin {
                mid.swap(a, b);
            }
        }
        std::mem::swap(&mut card_at, &mut mid);
    }
    let mut pos = vec![0; n];
    for (x, &c) in card_at.iter().enumerate() {
        pos[c] = x;
    }
    Ok((Permutation::from_vec(pos)?, CollisionLog { n, t, events }))
}

/// [`run_with_log_from`] starting from the identity.
pub fn run_with_log<R: Rng + ?Sized>(
    model: &ShuffleModel,
    t: usize,
    rng: &mut R,
) -> Result<(Permutation, CollisionLog)> {
    if t == 0 {
        return Err(Error::InvalidArgument(
            "horizon t must be at least 1".into(),
        ));
    }
    run_with_log_from(model, &Permutation::identity(model.n()), t, rng)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchRecord {
    pub n: usize,
    #[serde(rename = "T")]
    pub cut: usize,
    pub t: usize,
    pub matches: Vec<usize>,
}

impl MatchRecord {
    pub fn is_involution(&self) -> bool {
        self.matches
            .iter()
            .enumerate()
            .all(|(x, &y)| self.matches[y] == x)
    }
}

fn matches_from_first(first: &[Option<usize>]) -> Vec<usize> {
    first
        .iter()
        .enumerate()
        .map(|(x, b)| match *b {
            Some(y) if first[y] == Some(x) => y,
            _ => x,
        })
        .collect()
}

/// `b(x)` is the partner in `x`'s earliest collision at a step in `T+1..=t`;
/// `m(x) = b(x)` when `b(b(x)) = x`, else `x`.
pub fn compute_matches(log: &CollisionLog, cut: usize, t: usize) -> Result<MatchRecord> {
    if cut > t {
        return Err(Error::InvalidArgument(format!("T = {cut} exceeds t = {t}")));
    }
    let mut first: Vec<Option<usize>> = vec![None; log.n];
    for e in &log.events {
        if e.step <= cut || e.step > t {
            continue;
        }
        let (x, y) = e.cards;
        if first[x].is_none() {
            first[x] = Some(y);
        }
        if first[y].is_none() {
            first[y] = Some(x);
        }
    }
    Ok(MatchRecord {
        n: log.n,
        cut,
        t,
        matches: matches_from_first(&first),
    })
}

/// `T = m - G` for a geometric `G` with `P(G = g) = 2^{-g-1}` when
/// `1 ≤ G ≤ m`, else `T = m`. So `P(T = r) = 2^{r-m-1}` for `r < m` and
/// `P(T = m) = 1/2 + 2^{-m-1}`.
pub fn sample_t_thorp<R: Rng + ?Sized>(m: usize, rng: &mut R) -> usize {
    let g = rng.random::<u64>().trailing_zeros() as usize;
    if g >= 1 && g <= m {
        m - g
    } else {
        m
    }
}

/// Closed-form law of [`sample_t_thorp`] over `0..=m`.
pub fn thorp_t_law(m: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..m).map(|r| 0.5f64.powi((m - r + 1) as i32)).collect();
    p.push(0.5 + 0.5f64.powi(m as i32 + 1));
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TSampler {
    Fixed { value: usize },
    Thorp { m: usize },
}

impl TSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match *self {
            TSampler::Fixed { value } => value,
            TSampler::Thorp { m } => sample_t_thorp(m, rng),
        }
    }

    pub fn max_value(&self) -> usize {
        match *self {
            TSampler::Fixed { value } => value,
            TSampler::Thorp { m } => m,
        }
    }
}

/// Lower bound on `P(m(i) = j)` for `j < i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatchBound {
    None,
    /// `2^{-m-2}` for `i ∈ I_m = {2^{m-1}, .., 2^m - 1}`.
    Thorp,
    /// `α (t/n ∧ 1) / i`: an `α (t/n ∧ 1)`-uniform law over `{0, .., i-1}`.
    Lrev {
        alpha: f64,
        t: usize,
        n: usize,
    },
}

impl MatchBound {
    pub fn bound(&self, i: usize, j: usize) -> Option<f64> {
        if j >= i {
            return None;
        }
        match *self {
            MatchBound::None => None,
            MatchBound::Thorp => {
                let m = (usize::BITS - i.leading_zeros()) as i32;
                Some(0.5f64.powi(m + 2))
            }
            MatchBound::Lrev { alpha, t, n } => {
                Some(alpha * (t as f64 / n as f64).min(1.0) / i as f64)
            }
        }
    }
}

/// Thorp interval `I_m = {2^{m-1}, .., 2^m - 1} ∩ {0, .., n-1}` (`I_0 = {0}`).
pub fn thorp_interval(m: usize, n: usize) -> Vec<usize> {
    if m == 0 {
        return vec![0];
    }
    ((1usize << (m - 1))..(1usize << m))
        .filter(|&i| i < n)
        .collect()
}

/// L-reversal interval `I_k = {2^{k-1} L + 1, .., 2^k L} ∩ {0, .., n-1}`.
pub fn lrev_interval(k: usize, l: usize, n: usize) -> Vec<usize> {
    if k == 0 {
        return (0..=l).filter(|&i| i < n).collect();
    }
    ((1usize << (k - 1)) * l + 1..=(1usize << k) * l)
        .filter(|&i| i < n)
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchTarget {
    pub j: usize,
    pub freq: Proportion,
    pub bound: Option<f64>,
    /// Whether the upper 99% limit reaches the bound.
    pub meets_bound: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AUniformityReport {
    pub card: usize,
    pub trials: u64,
    pub targets: Vec<MatchTarget>,
}

impl AUniformityReport {
    /// `i · min_{j<i} P̂(m(i) = j)`, clamped to `[0, 1]`; 0 for card 0.
    pub fn a_estimate(&self) -> f64 {
        let i = self.card;
        if i == 0 {
            return 0.0;
        }
        let min = self.targets[..i]
            .iter()
            .map(|t| t.freq.estimate)
            .fold(f64::INFINITY, f64::min);
        (i as f64 * min).clamp(0.0, 1.0)
    }

    /// Targets whose point estimate falls below the bound.
    pub fn below_bound(&self) -> Vec<&MatchTarget> {
        self.targets
            .iter()
            .filter(|t| t.bound.is_some_and(|b| t.freq.estimate < b))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchExperiment {
    pub model: ShuffleModel,
    pub t: usize,
    pub sampler: TSampler,
    pub trials: u64,
    pub seed: u64,
    pub bound: MatchBound,
    pub reports: Vec<AUniformityReport>,
}

impl MatchExperiment {
    pub fn all_meet_bound(&self) -> bool {
        self.reports
            .iter()
            .flat_map(|r| &r.targets)
            .all(|t| t.meets_bound != Some(false))
    }

    pub fn to_table(&self) -> Table {
        let mut tab = Table::new([
            "i",
            "j",
            "count",
            "freq",
            "ci99_halfwidth",
            "bound",
            "meets_bound",
        ]);
        for r in &self.reports {
            for t in &r.targets {
                tab.push(vec![
                    r.card.to_string(),
                    t.j.to_string(),
                    t.freq.count.to_string(),
                    fmt_f64(t.freq.estimate),
                    fmt_f64(t.freq.halfwidth()),
                    fmt_opt_f64(t.bound),
                    fmt_opt_bool(t.meets_bound),
                ]);
            }
        }
        tab
    }
}

/// One trajectory's matches, computed on the fly without storing the log.
fn simulate_matches<R: Rng + ?Sized>(
    model: &ShuffleModel,
    cut: usize,
    t: usize,
    rng: &mut R,
) -> Vec<usize> {
    let n = model.n();
    let mut card_at: Vec<usize> = (0..n).collect();
    let mut mid = vec![0; n];
    let mut first: Vec<Option<usize>> = vec![None; n];
    for step in 1..=t {
        let draw = model.sample_draw(rng);
        for (x, &c) in card_at.iter().enumerate() {
            mid[draw.base_image(n, x)] = c;
        }
        for (a, b, coin) in draw.collisions(n) {
            if step > cut {
                let (x, y) = (mid[a], mid[b]);
                first[x].get_or_insert(y);
                first[y].get_or_insert(x);
            }
            if coin {
                mid.swap(a, b);
            }
        }
        std::mem::swap(&mut card_at, &mut mid);
    }
    matches_from_first(&first)
}

/// Empirical law of `m(i)` for each requested card over independent
/// trajectories, each with its own `T`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_match_probs(
    model: &ShuffleModel,
    cards: &[usize],
    sampler: TSampler,
    t: usize,
    trials: u64,
    seed: u64,
    workers: usize,
    bound: MatchBound,
) -> Result<MatchExperiment> {
    let n = model.n();
    if cards.is_empty() {
        return Err(Error::InvalidArgument("no cards requested".into()));
    }
    if let Some(&c) = cards.iter().find(|&&c| c >= n) {
        return Err(Error::OutOfRange(format!("card {c} on n = {n}")));
    }
    if trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    if t == 0 || sampler.max_value() > t {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= t and T <= t, got t = {t}, T up to {}",
            sampler.max_value()
        )));
    }
    let seeder = TrialSeeder::new(seed, tag("match"));
    let counts = run_trials(
        trials,
        workers,
        &seeder,
        || vec![0u64; cards.len() * n],
        |_, rng, acc| {
            let cut = sampler.sample(rng);
            let m = simulate_matches(model, cut, t, rng);
            for (k, &i) in cards.iter().enumerate() {
                acc[k * n + m[i]] += 1;
            }
        },
    )?;
    let reports = cards
        .iter()
        .enumerate()
        .map(|(k, &i)| AUniformityReport {
            card: i,
            trials,
            targets: (0..n)
                .map(|j| {
                    let freq = Proportion::new(counts[k * n + j], trials, Z99);
                    let b = bound.bound(i, j);
                    MatchTarget {
                        j,
                        freq,
                        bound: b,
                        meets_bound: b.map(|b| freq.ci_high >= b),
                    }
                })
                .collect(),
        })
        .collect();
    Ok(MatchExperiment {
        model: *model,
        t,
        sampler,
        trials,
        seed,
        bound,
        reports,
    })
}
