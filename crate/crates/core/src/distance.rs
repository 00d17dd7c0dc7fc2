//! The distance between two tracked cards under the L-reversal chain, its
//! exact kernel, and the variant stopped at the first cut.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::perm::reversal_image;
use crate::scalar::{weight_sum, Weight};
use crate::seeding::{run_trials, tag, Tally, TrialSeeder};
use crate::stats::{Proportion, Z99};
use crate::table::{fmt_f64, Table};

/// Tolerance on cumulative sums in the dominance check.
pub const DOMINANCE_TOL: f64 = 1e-12;

/// Graph distance on the `n`-cycle.
pub fn cycle_distance(n: usize, x: usize, y: usize) -> usize {
    let d = x.abs_diff(y) % n;
    d.min(n - d)
}

fn check_lrev(n: usize, l: usize) -> Result<()> {
    if n < 2 || l < 1 || l >= n {
        return Err(Error::InvalidModel(format!(
            "need 1 <= L <= n-1, got n = {n}, L = {l}"
        )));
    }
    Ok(())
}

fn check_regime(n: usize, l: usize) -> Result<()> {
    check_lrev(n, l)?;
    if n < 4 * l {
        return Err(Error::NotApplicable(format!(
            "closed form needs n >= 4L, got n = {n}, L = {l}"
        )));
    }
    Ok(())
}

/// Number of intervals of length offset at most `L` moving position `a` to
/// `u` while fixing position 0, from the closed form (clamped at 0).
pub fn count_n(n: usize, l: usize, a: usize, u: usize) -> Result<u64> {
    check_regime(n, l)?;
    if a < 1 || a > n / 2 || u == a {
        return Err(Error::OutOfRange(format!(
            "count_n needs 1 <= a <= n/2 and u != a, got a = {a}, u = {u}"
        )));
    }
    let (l, a, u) = (l as i64, a as i64, u as i64);
    let v = if u < a {
        u.min((l - a + u).div_euclid(2) + 1)
    } else {
        a.min((l - u + a).div_euclid(2) + 1)
    };
    Ok(v.max(0) as u64)
}

/// [`count_n`] by enumerating every `(v, l)` draw.
pub fn count_n_oracle(n: usize, l: usize, a: usize, u: usize) -> u64 {
    let mut c = 0;
    for v in 0..n {
        for len in 0..=l {
            if reversal_image(n, v, len, 0) == 0 && reversal_image(n, v, len, a % n) == u % n {
                c += 1;
            }
        }
    }
    c
}

/// Whether the card at position `x` is cut by reversing `v..=v+len`: its pair
/// of neighbours changes.
pub fn is_cut(n: usize, v: usize, len: usize, x: usize) -> bool {
    if len == 0 {
        return false;
    }
    let y = reversal_image(n, v, len, x);
    // reversal is an involution, so the card now beside y came from img(y±1)
    let after = [
        reversal_image(n, v, len, (y + n - 1) % n),
        reversal_image(n, v, len, (y + 1) % n),
    ];
    let before = [(x + n - 1) % n, (x + 1) % n];
    !((after[0] == before[0] && after[1] == before[1])
        || (after[0] == before[1] && after[1] == before[0]))
}

/// Fraction of a card's steps that move it: intervals containing it, minus
/// those that leave it fixed at their centre.
pub fn move_probability(n: usize, l: usize) -> Result<f64> {
    check_lrev(n, l)?;
    let moving = (0..n)
        .flat_map(|v| (0..=l).map(move |len| (v, len)))
        .filter(|&(v, len)| reversal_image(n, v, len, 0) != 0)
        .count();
    Ok(moving as f64 / (n * (l + 1)) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DistanceState {
    #[serde(rename = "S0")]
    Absorb0,
    Dist(usize),
    #[serde(rename = "Sinf")]
    AbsorbInf,
}

impl DistanceState {
    pub fn label(&self) -> String {
        match self {
            DistanceState::Absorb0 => "S0".into(),
            DistanceState::Dist(d) => d.to_string(),
            DistanceState::AbsorbInf => "Sinf".into(),
        }
    }
}

/// Row-stochastic kernel on totally ordered distance states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceKernel<W> {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub states: Vec<DistanceState>,
    pub matrix: Vec<Vec<W>>,
}

impl<W: Weight> DistanceKernel<W> {
    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, s: DistanceState) -> Option<usize> {
        self.states.iter().position(|&x| x == s)
    }

    pub fn rows_stochastic(&self, tol: f64) -> bool {
        self.matrix.iter().all(|r| {
            r.iter().all(|&w| w >= W::zero())
                && weight_sum(r.iter().copied()).abs_diff(W::one()).as_f64() <= tol
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.states != other.states {
            return Err(Error::SizeMismatch {
                left: self.size(),
                right: other.size(),
            });
        }
        Ok(self
            .matrix
            .iter()
            .flatten()
            .zip(other.matrix.iter().flatten())
            .map(|(&a, &b)| a.abs_diff(b).as_f64())
            .fold(0.0, f64::max))
    }

    pub fn to_table(&self) -> Table {
        let mut header = vec!["from".to_string()];
        header.extend(self.states.iter().map(|s| s.label()));
        let mut t = Table::new(header);
        for (s, row) in self.states.iter().zip(&self.matrix) {
            let mut r = vec![s.label()];
            r.extend(row.iter().map(|w| fmt_f64(w.as_f64())));
            t.push(r);
        }
        t
    }
}

fn plain_states(n: usize) -> Vec<DistanceState> {
    (0..=n / 2).map(DistanceState::Dist).collect()
}

/// Closed-form kernel of the distance chain on states `0..=n/2`:
/// off-diagonal `M(a, u) / (n(L+1))` with `M(a, u) = 2(N(a, u) + N(a, n-u))`.
/// At `u = n/2` the two terms name the same position and are counted once.
/// State 0 is unreachable and kept as a fixed point.
#[allow(clippy::needless_range_loop)]
pub fn distance_kernel<W: Weight>(n: usize, l: usize) -> Result<DistanceKernel<W>> {
    check_regime(n, l)?;
    let h = n / 2;
    let denom = (n * (l + 1)) as u64;
    let mut matrix = vec![vec![W::zero(); h + 1]; h + 1];
    matrix[0][0] = W::one();
    for a in 1..=h {
        let mut off = W::zero();
        for u in 0..=h {
            if u == a {
                continue;
            }
            let mut m = count_n(n, l, a, u)?;
            if n - u != u && n - u != a {
                m += count_n(n, l, a, n - u)?;
            }
            let w = W::ratio(2 * m, denom);
            matrix[a][u] = w;
            off = off + w;
        }
        matrix[a][a] = W::one() - off;
    }
    Ok(DistanceKernel {
        n,
        l,
        states: plain_states(n),
        matrix,
    })
}

/// The same kernel by applying every draw to cards at positions `c` and
/// `c + a`.
#[allow(clippy::needless_range_loop)]
pub fn distance_kernel_brute<W: Weight>(
    n: usize,
    l: usize,
    offset: usize,
) -> Result<DistanceKernel<W>> {
    check_lrev(n, l)?;
    let h = n / 2;
    let denom = (n * (l + 1)) as u64;
    let mut counts = vec![vec![0u64; h + 1]; h + 1];
    counts[0][0] = denom;
    for a in 1..=h {
        let (x, y) = (offset % n, (offset + a) % n);
        for v in 0..n {
            for len in 0..=l {
                let d = cycle_distance(
                    n,
                    reversal_image(n, v, len, x),
                    reversal_image(n, v, len, y),
                );
                counts[a][d] += 1;
            }
        }
    }
    Ok(DistanceKernel {
        n,
        l,
        states: plain_states(n),
        matrix: counts
            .into_iter()
            .map(|r| r.into_iter().map(|c| W::ratio(c, denom)).collect())
            .collect(),
    })
}

/// Tallies for one row of the cut-stopped kernel.
fn cut_stopped_counts(n: usize, l: usize, a: usize, h: usize) -> (Vec<u64>, u64) {
    // index 0 = S0, 1..=h distances, h+1 = Sinf
    let mut row = vec![0u64; h + 2];
    let mut cutting = 0;
    for v in 0..n {
        for len in 0..=l {
            if is_cut(n, v, len, 0) || is_cut(n, v, len, a) {
                cutting += 1;
                if a <= l {
                    row[0] += 1;
                } else {
                    row[h + 1] += 1;
                }
            } else {
                row[cycle_distance(
                    n,
                    reversal_image(n, v, len, 0),
                    reversal_image(n, v, len, a),
                )] += 1;
            }
        }
    }
    (row, cutting)
}

/// Distance chain stopped at the first cut of either card: absorbed in
/// `S0` if the pair was within `L` when cut, else in `Sinf`. States are
/// ordered `S0 < 1 < .. < n/2 < Sinf`.
#[allow(clippy::needless_range_loop)]
pub fn cut_stopped_kernel<W: Weight>(n: usize, l: usize) -> Result<DistanceKernel<W>> {
    check_regime(n, l)?;
    let h = n / 2;
    let denom = (n * (l + 1)) as u64;
    let mut states = vec![DistanceState::Absorb0];
    states.extend((1..=h).map(DistanceState::Dist));
    states.push(DistanceState::AbsorbInf);
    let mut matrix = vec![vec![W::zero(); h + 2]; h + 2];
    matrix[0][0] = W::one();
    matrix[h + 1][h + 1] = W::one();
    for a in 1..=h {
        let (row, _) = cut_stopped_counts(n, l, a, h);
        matrix[a] = row.into_iter().map(|c| W::ratio(c, denom)).collect();
    }
    Ok(DistanceKernel {
        n,
        l,
        states,
        matrix,
    })
}

/// Probability that one uniform draw cuts the card at 0 or the one at `a`.
pub fn cut_probability(n: usize, l: usize, a: usize) -> Result<f64> {
    check_lrev(n, l)?;
    let (_, cutting) = cut_stopped_counts(n, l, a % n, n / 2);
    Ok(cutting as f64 / (n * (l + 1)) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceViolation {
    pub lower: String,
    pub upper: String,
    pub threshold: String,
    /// How far the upper row's tail falls short.
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneCheck {
    pub monotone: bool,
    pub first_violation: Option<DominanceViolation>,
    pub worst_deficit: f64,
}

/// Stochastic monotonicity: for states `a ≤ b` and every threshold `z`,
/// `Σ_{u ≥ z} P(b, u) ≥ Σ_{u ≥ z} P(a, u) - tol`.
#[allow(clippy::needless_range_loop)]
pub fn check_monotone<W: Weight>(kernel: &DistanceKernel<W>) -> MonotoneCheck {
    let m = kernel.size();
    let tails: Vec<Vec<f64>> = kernel
        .matrix
        .iter()
        .map(|r| {
            let mut t = vec![0.0; m + 1];
            for z in (0..m).rev() {
                t[z] = t[z + 1] + r[z].as_f64();
            }
            t
        })
        .collect();
    let mut first = None;
    let mut worst = 0.0f64;
    for a in 0..m {
        for b in a + 1..m {
            for z in 0..m {
                let deficit = tails[a][z] - tails[b][z];
                if deficit > DOMINANCE_TOL {
                    worst = worst.max(deficit);
                    if first.is_none() {
                        first = Some(DominanceViolation {
                            lower: kernel.states[a].label(),
                            upper: kernel.states[b].label(),
                            threshold: kernel.states[z].label(),
                            deficit,
                        });
                    }
                }
            }
        }
    }
    MonotoneCheck {
        monotone: first.is_none(),
        first_violation: first,
        worst_deficit: worst,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProximityEstimate {
    pub distance: usize,
    pub freq: Proportion,
    /// `min(1, 8 t' / n)`.
    pub upper_bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairedDifference {
    pub nearer: usize,
    pub farther: usize,
    /// `f(nearer) - f(farther)` on shared randomness.
    pub diff: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProximityReport {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub m_prime: usize,
    pub t_prime: usize,
    pub trials: u64,
    pub estimates: Vec<ProximityEstimate>,
    pub paired: Vec<PairedDifference>,
}

impl ProximityReport {
    /// Consecutive distances never gain more than `k` paired standard errors.
    pub fn nonincreasing_within(&self, k: f64) -> bool {
        self.paired
            .iter()
            .all(|p| p.diff >= -k * p.stderr.max(1.0 / self.trials as f64))
    }
}

#[derive(Default)]
struct ProximityTally {
    hits: Vec<u64>,
    /// For consecutive pairs: (nearer hit only, farther hit only).
    discord: Vec<(u64, u64)>,
}

impl Tally for ProximityTally {
    fn merge(&mut self, other: Self) {
        self.hits.merge(other.hits);
        for (a, b) in self.discord.iter_mut().zip(other.discord) {
            a.0 += b.0;
            a.1 += b.1;
        }
    }
}

/// One trajectory of two cards: `m'` free steps, then up to `t'` steps until
/// either card is cut. True when the pair was within `L` at that cut.
fn first_cut_close<R: Rng + ?Sized>(
    n: usize,
    l: usize,
    d0: usize,
    m_prime: usize,
    t_prime: usize,
    rng: &mut R,
) -> bool {
    let (mut x, mut y) = (0usize, d0 % n);
    let draws = n * (l + 1);
    for step in 1..=m_prime + t_prime {
        let idx = rng.random_range(0..draws);
        let (v, len) = (idx / (l + 1), idx % (l + 1));
        if step > m_prime && (is_cut(n, v, len, x) || is_cut(n, v, len, y)) {
            return cycle_distance(n, x, y) <= l;
        }
        x = reversal_image(n, v, len, x);
        y = reversal_image(n, v, len, y);
    }
    false
}

/// Monte Carlo estimate of the probability that the first cut after `m'`
/// (within `t'` further steps) finds the pair within distance `L`, for each
/// starting distance, on shared random streams.
#[allow(clippy::too_many_arguments)]
pub fn first_cut_proximity_estimate(
    n: usize,
    l: usize,
    distances: &[usize],
    m_prime: usize,
    t_prime: usize,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<ProximityReport> {
    check_lrev(n, l)?;
    if distances.is_empty() || distances.iter().any(|&d| d == 0 || d > n / 2) {
        return Err(Error::InvalidArgument(
            "distances must lie in 1..=n/2".into(),
        ));
    }
    if trials < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 10000 trials, got {trials}"
        )));
    }
    let k = distances.len();
    let seeder = TrialSeeder::new(seed, tag("first_cut"));
    let tally = run_trials(
        trials,
        workers,
        &seeder,
        || ProximityTally {
            hits: vec![0; k],
            discord: vec![(0, 0); k.saturating_sub(1)],
        },
        |_, rng, acc| {
            let outcomes: Vec<bool> = distances
                .iter()
                .map(|&d| {
                    let mut r = rng.clone();
                    first_cut_close(n, l, d, m_prime, t_prime, &mut r)
                })
                .collect();
            for (i, &o) in outcomes.iter().enumerate() {
                acc.hits[i] += o as u64;
            }
            for i in 0..k.saturating_sub(1) {
                match (outcomes[i], outcomes[i + 1]) {
                    (true, false) => acc.discord[i].0 += 1,
                    (false, true) => acc.discord[i].1 += 1,
                    _ => {}
                }
            }
        },
    )?;
    let bound = (8.0 * t_prime as f64 / n as f64).min(1.0);
    let estimates = distances
        .iter()
        .zip(&tally.hits)
        .map(|(&d, &h)| {
            let freq = Proportion::new(h, trials, Z99);
            ProximityEstimate {
                distance: d,
                freq,
                upper_bound: bound,
                within_bound: freq.estimate <= bound + 4.0 * freq.robust_stderr(),
            }
        })
        .collect();
    let tn = trials as f64;
    let paired = tally
        .discord
        .iter()
        .enumerate()
        .map(|(i, &(pos, neg))| {
            let diff = (pos as f64 - neg as f64) / tn;
            let second = (pos + neg) as f64 / tn;
            PairedDifference {
                nearer: distances[i],
                farther: distances[i + 1],
                diff,
                stderr: ((second - diff * diff) / tn).max(0.0).sqrt(),
            }
        })
        .collect();
    Ok(ProximityReport {
        n,
        l,
        m_prime,
        t_prime,
        trials,
        estimates,
        paired,
    })
}
