//! Monte Carlo estimators for decks too large for exact analysis.
//!
//! Full TV over `S_n` is out of reach, so these estimate TV of a projected
//! statistic. Projection never increases TV, so each estimate is a lower
//! bound proxy for the full distance.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::TransitionMatrix;
use crate::perm::reversal_image;
use crate::seeding::{run_trials, splitmix64, tag, TrialSeeder};
use crate::shuffle::{single_card_kernel, LrevForm, ShuffleModel};
use crate::stats::{Proportion, Z99};
use crate::table::{fmt_f64, Table};

/// Largest projected state space accepted.
pub const MAX_PROJECTED_STATES: usize = 1_000_000;

/// Fewest trials accepted by the estimators.
pub const MIN_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectionSpec {
    /// Position of one card.
    SingleCard { card: usize },
    /// Joint positions of two cards.
    CardPair { first: usize, second: usize },
    /// Whether cards `0..n/2` occupy positions `0..n/2`.
    RetentionSet,
}

impl ProjectionSpec {
    fn tracked(&self, n: usize) -> Vec<usize> {
        match *self {
            ProjectionSpec::SingleCard { card } => vec![card],
            ProjectionSpec::CardPair { first, second } => vec![first, second],
            ProjectionSpec::RetentionSet => (0..n / 2).collect(),
        }
    }

    /// Size of the index space used for counting.
    fn slots(&self, n: usize) -> usize {
        match self {
            ProjectionSpec::SingleCard { .. } => n,
            ProjectionSpec::CardPair { .. } => n * n,
            ProjectionSpec::RetentionSet => 2,
        }
    }

    /// Number of reachable projected states: `n`, `n(n-1)` or 2.
    pub fn state_count(&self, n: usize) -> usize {
        match self {
            ProjectionSpec::SingleCard { .. } => n,
            ProjectionSpec::CardPair { .. } => n * (n - 1),
            ProjectionSpec::RetentionSet => 2,
        }
    }

    fn index(&self, n: usize, pos: &[usize]) -> usize {
        match self {
            ProjectionSpec::SingleCard { .. } => pos[0],
            ProjectionSpec::CardPair { .. } => pos[0] * n + pos[1],
            ProjectionSpec::RetentionSet => pos.iter().all(|&p| p < n / 2) as usize,
        }
    }

    /// Law of the projected statistic under the uniform deck.
    pub fn uniform_law(&self, n: usize) -> Vec<f64> {
        match self {
            ProjectionSpec::SingleCard { .. } => vec![1.0 / n as f64; n],
            ProjectionSpec::CardPair { .. } => {
                let w = 1.0 / (n * (n - 1)) as f64;
                (0..n * n)
                    .map(|i| if i / n == i % n { 0.0 } else { w })
                    .collect()
            }
            ProjectionSpec::RetentionSet => {
                // (n/2)!² / n! = 1 / C(n, n/2)
                let h = n / 2;
                let q = (1..=h).fold(1.0, |acc, k| acc * k as f64 / (h + k) as f64);
                vec![1.0 - q, q]
            }
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let ok = match *self {
            ProjectionSpec::SingleCard { card } => card < n,
            ProjectionSpec::CardPair { first, second } => {
                first < n && second < n && first != second
            }
            ProjectionSpec::RetentionSet => n.is_multiple_of(2),
        };
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "projection {self:?} invalid for n = {n}"
            )));
        }
        if self.state_count(n) > MAX_PROJECTED_STATES {
            return Err(Error::InvalidArgument(format!(
                "projected state space {} exceeds {MAX_PROJECTED_STATES}",
                self.state_count(n)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectedTv {
    pub t: usize,
    pub trials: u64,
    /// L1 distance of the empirical projected law from its uniform law.
    pub estimate: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub counts: Vec<u64>,
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    Ok(())
}

/// Counts of the projected statistic after `t` steps from the identity.
fn projected_counts(
    model: &ShuffleModel,
    projection: &ProjectionSpec,
    t: usize,
    trials: u64,
    seeder: &TrialSeeder,
    workers: usize,
) -> Result<Vec<u64>> {
    let n = model.n();
    let tracked = projection.tracked(n);
    run_trials(
        trials,
        workers,
        seeder,
        || vec![0u64; projection.slots(n)],
        |_, rng, acc| {
            let mut pos = tracked.clone();
            for _ in 0..t {
                let draw = model.sample_draw(rng);
                for p in pos.iter_mut() {
                    *p = draw.position_image(n, *p);
                }
            }
            acc[projection.index(n, &pos)] += 1;
        },
    )
}

fn l1_with_stderr(counts: &[u64], uniform: &[f64], trials: u64) -> (f64, f64) {
    let nt = trials as f64;
    let mut l1 = 0.0;
    let mut signed = 0.0;
    for (&c, &u) in counts.iter().zip(uniform) {
        let p = c as f64 / nt;
        l1 += (p - u).abs();
        signed += if p >= u { p } else { -p };
    }
    // Var of Σ sign·p̂ for a single multinomial draw, over trials
    let se = ((1.0 - signed * signed).max(0.0) / nt).sqrt();
    (l1, se.max(1.0 / nt))
}

pub fn estimate_projected_tv(
    model: &ShuffleModel,
    projection: &ProjectionSpec,
    t: usize,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<ProjectedTv> {
    estimate_projected_tv_tagged(
        model,
        projection,
        t,
        trials,
        seed,
        workers,
        tag("projected_tv"),
    )
}

fn estimate_projected_tv_tagged(
    model: &ShuffleModel,
    projection: &ProjectionSpec,
    t: usize,
    trials: u64,
    seed: u64,
    workers: usize,
    stream_tag: u64,
) -> Result<ProjectedTv> {
    let n = model.n();
    projection.validate(n)?;
    check_trials(trials)?;
    let seeder = TrialSeeder::new(seed, stream_tag);
    let counts = projected_counts(model, projection, t, trials, &seeder, workers)?;
    let (estimate, stderr) = l1_with_stderr(&counts, &projection.uniform_law(n), trials);
    Ok(ProjectedTv {
        t,
        trials,
        estimate,
        stderr,
        ci_low: (estimate - Z99 * stderr).max(0.0),
        ci_high: (estimate + Z99 * stderr).min(2.0),
        counts,
    })
}

/// Exact L1 distance of one card's position law from uniform for
/// `t = 0..=steps`, from the single-card chain.
pub fn exact_single_card_tv(model: &ShuffleModel, card: usize, steps: usize) -> Result<Vec<f64>> {
    let n = model.n();
    if card >= n {
        return Err(Error::OutOfRange(format!("card {card} on n = {n}")));
    }
    let k: TransitionMatrix<f64> = single_card_kernel(model)?;
    let mut p = vec![0.0; n];
    p[card] = 1.0;
    let u = 1.0 / n as f64;
    let mut out = Vec::with_capacity(steps + 1);
    for s in 0..=steps {
        if s > 0 {
            p = k.apply(&p)?;
        }
        out.push(p.iter().map(|&x| (x - u).abs()).sum());
    }
    Ok(out)
}

/// Smallest `t` with exact single-card TV at most `target`.
pub fn exact_single_card_tstar(model: &ShuffleModel, target: f64, horizon: usize) -> Result<usize> {
    let n = model.n();
    let k: TransitionMatrix<f64> = single_card_kernel(model)?;
    let mut p = vec![0.0; n];
    p[0] = 1.0;
    let u = 1.0 / n as f64;
    for t in 0..=horizon {
        if t > 0 {
            p = k.apply(&p)?;
        }
        if p.iter().map(|&x| (x - u).abs()).sum::<f64>() <= target {
            return Ok(t);
        }
    }
    Err(Error::HorizonExhausted { horizon })
}

#[derive(Debug, Clone, Serialize)]
pub struct RetentionEstimate {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub t: usize,
    pub freq: Proportion,
    /// `(1 - 2L/n)^t`.
    pub lower_bound: f64,
    /// `estimate + 3 stderr ≥ lower_bound`.
    pub consistent: bool,
}

/// Probability that after `t` plain L-reversal steps from the identity the
/// cards `0..n/2` still occupy positions `0..n/2`.
pub fn estimate_retention(
    n: usize,
    l: usize,
    t: usize,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<RetentionEstimate> {
    ShuffleModel::lrev(n, l, LrevForm::Plain)?;
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "retention needs even n, got {n}"
        )));
    }
    check_trials(trials)?;
    let seeder = TrialSeeder::new(seed, tag("retention"));
    let hits: u64 = run_trials(
        trials,
        workers,
        &seeder,
        || 0u64,
        |_, rng, acc| {
            let draws = n * (l + 1);
            let mut pos: Vec<usize> = (0..n / 2).collect();
            for _ in 0..t {
                let idx = rng.random_range(0..draws);
                let (v, len) = (idx / (l + 1), idx % (l + 1));
                for p in pos.iter_mut() {
                    *p = reversal_image(n, v, len, *p);
                }
            }
            *acc += pos.iter().all(|&p| p < n / 2) as u64;
        },
    )?;
    let freq = Proportion::new(hits, trials, Z99);
    let lower_bound = (1.0 - 2.0 * l as f64 / n as f64).max(0.0).powi(t as i32);
    Ok(RetentionEstimate {
        n,
        l,
        t,
        freq,
        lower_bound,
        consistent: freq.estimate + 3.0 * freq.robust_stderr() >= lower_bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub param_name: String,
    pub param_value: usize,
    pub model: ShuffleModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFlag {
    Ok,
    /// No `t` up to the horizon reached the target.
    Horizon,
    /// The re-validation interval lies wholly above the target.
    Revalidation,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub param_name: String,
    pub param_value: usize,
    pub t_star: Option<usize>,
    pub tv_at_t_star: Option<f64>,
    /// 99% half-width of the re-validation estimate.
    pub ci: Option<f64>,
    pub trials: u64,
    pub seed: u64,
    pub probes: usize,
    pub flag: SweepFlag,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub projection: ProjectionSpec,
    pub tv_target: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new([
            "param_name",
            "param_value",
            "t_star",
            "tv_at_t_star",
            "ci",
            "trials",
            "seed",
            "flag",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.param_name.clone(),
                r.param_value.to_string(),
                r.t_star.map(|x| x.to_string()).unwrap_or_default(),
                r.tv_at_t_star.map(fmt_f64).unwrap_or_default(),
                r.ci.map(fmt_f64).unwrap_or_default(),
                r.trials.to_string(),
                r.seed.to_string(),
                serde_json::to_value(r.flag)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default(),
            ]);
        }
        t
    }
}

/// Options for [`scaling_sweep`].
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub tv_target: f64,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub horizon: usize,
}

/// For each grid point, the smallest `t` whose projected TV estimate is at
/// most the target: doubling, then bisection, each probe on a fresh stream,
/// then an independent re-validation batch at the answer.
pub fn scaling_sweep(
    grid: &[SweepPoint],
    projection: &ProjectionSpec,
    opts: SweepOptions,
) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty parameter grid".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for point in grid {
        let mut probes = 0usize;
        let mut probe = |t: usize| -> Result<ProjectedTv> {
            probes += 1;
            let stream = splitmix64(
                tag(&point.param_name) ^ (point.param_value as u64) << 20 ^ probes as u64,
            );
            estimate_projected_tv_tagged(
                &point.model,
                projection,
                t,
                opts.trials,
                opts.seed,
                opts.workers,
                stream,
            )
        };
        let mut found = None;
        let mut lo = 0usize; // largest t known to miss
        if probe(0)?.estimate <= opts.tv_target {
            found = Some(0);
        } else {
            let mut hi = 1usize;
            while hi <= opts.horizon {
                if probe(hi)?.estimate <= opts.tv_target {
                    found = Some(hi);
                    break;
                }
                lo = hi;
                hi *= 2;
            }
            if let Some(mut hi) = found {
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if probe(mid)?.estimate <= opts.tv_target {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                found = Some(hi);
            }
        }
        let row = match found {
            Some(t_star) => {
                let check = estimate_projected_tv_tagged(
                    &point.model,
                    projection,
                    t_star,
                    opts.trials,
                    opts.seed,
                    opts.workers,
                    tag("revalidate") ^ (point.param_value as u64),
                )?;
                SweepRow {
                    param_name: point.param_name.clone(),
                    param_value: point.param_value,
                    t_star: Some(t_star),
                    tv_at_t_star: Some(check.estimate),
                    ci: Some(Z99 * check.stderr),
                    trials: opts.trials,
                    seed: opts.seed,
                    probes,
                    flag: if check.ci_low <= opts.tv_target {
                        SweepFlag::Ok
                    } else {
                        SweepFlag::Revalidation
                    },
                }
            }
            None => SweepRow {
                param_name: point.param_name.clone(),
                param_value: point.param_value,
                t_star: None,
                tv_at_t_star: None,
                ci: None,
                trials: opts.trials,
                seed: opts.seed,
                probes,
                flag: SweepFlag::Horizon,
            },
        };
        rows.push(row);
    }
    Ok(SweepTable {
        projection: *projection,
        tv_target: opts.tv_target,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shuffle::Direction;

    #[test]
    fn uniform_laws_sum_to_one() {
        for p in [
            ProjectionSpec::SingleCard { card: 0 },
            ProjectionSpec::CardPair {
                first: 0,
                second: 1,
            },
            ProjectionSpec::RetentionSet,
        ] {
            let s: f64 = p.uniform_law(8).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!((ProjectionSpec::RetentionSet.uniform_law(4)[1] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn zero_steps_is_a_point_mass() {
        let m = ShuffleModel::thorp(8, Direction::Reverse).unwrap();
        let r = estimate_projected_tv(&m, &ProjectionSpec::SingleCard { card: 3 }, 0, 10_000, 1, 1)
            .unwrap();
        assert!((r.estimate - 2.0 * (1.0 - 1.0 / 8.0)).abs() < 1e-12);
    }

    #[test]
    fn retention_at_time_zero() {
        let r = estimate_retention(16, 2, 0, 10_000, 1, 1).unwrap();
        assert_eq!(r.freq.estimate, 1.0);
        assert!(r.consistent);
    }

    #[test]
    fn exact_single_card_start() {
        let m = ShuffleModel::lrev(10, 2, LrevForm::Plain).unwrap();
        let tv = exact_single_card_tv(&m, 0, 3).unwrap();
        assert!((tv[0] - 1.8).abs() < 1e-12);
        assert!(tv.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn rejects_too_few_trials() {
        let m = ShuffleModel::thorp(4, Direction::Forward).unwrap();
        assert!(
            estimate_projected_tv(&m, &ProjectionSpec::SingleCard { card: 0 }, 1, 10, 1, 1)
                .is_err()
        );
    }
}
