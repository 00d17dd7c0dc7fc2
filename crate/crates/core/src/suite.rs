//! The invariant suite: numbered checks with measured values attached.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;
use serde_json::json;

use crate::distance::{
    check_monotone, count_n, count_n_oracle, cut_stopped_kernel, distance_kernel,
    distance_kernel_brute, DistanceKernel,
};
use crate::entropy::{d_dist, position_entropy, relative_entropy, tv_to_uniform, SnDistribution};
use crate::error::{Error, Result};
use crate::exact::{contraction_estimate, mixing_time_exact, warmup_check, DEFAULT_HORIZON};
use crate::kernel::TransitionMatrix;
use crate::matching::{estimate_match_probs, thorp_interval, MatchBound, TSampler};
use crate::mc::{estimate_retention, scaling_sweep, ProjectionSpec, SweepOptions, SweepPoint};
use crate::seeding::splitmix64;
use crate::shuffle::{step_kernel, Direction, LrevForm, ShuffleModel};

/// Highest criterion number handled here.
pub const LAST: u8 = 12;

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub summary: String,
    pub metrics: serde_json::Value,
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub seed: u64,
    pub workers: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 2024,
            workers: 0,
        }
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "monte-form equivalence",
        2 => "time reversal",
        3 => "chain rule",
        4 => "pinsker-type bound",
        5 => "projection property",
        6 => "warm-up inequality",
        7 => "counting formula",
        8 => "monotonicity",
        9 => "A-uniformity",
        10 => "retention event",
        11 => "entropy contraction",
        12 => "single-card scaling",
        _ => "unknown",
    }
}

pub fn run(id: u8, opts: SuiteOptions) -> Result<Outcome> {
    let rng = || ChaCha8Rng::seed_from_u64(splitmix64(opts.seed ^ id as u64));
    let (pass, summary, metrics) = match id {
        1 => monte_form()?,
        2 => time_reversal()?,
        3 => chain_rule(&mut rng())?,
        4 => pinsker(&mut rng())?,
        5 => projection(&mut rng())?,
        6 => warmup(&mut rng())?,
        7 => counting()?,
        8 => monotonicity()?,
        9 => a_uniformity(opts)?,
        10 => retention(opts)?,
        11 => contraction()?,
        12 => single_card_scaling(opts)?,
        _ => return Err(Error::OutOfRange(format!("no check numbered {id}"))),
    };
    Ok(Outcome {
        id,
        title: title(id),
        pass,
        summary,
        metrics,
    })
}

type Checked = (bool, String, serde_json::Value);

fn random_probs<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    // a third of the draws get holes in their support
    if rng.random_bool(1.0 / 3.0) {
        for x in w.iter_mut() {
            if rng.random_bool(0.5) {
                *x = 0.0;
            }
        }
        w[rng.random_range(0..len)] += 1.0;
    }
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn random_dist<R: Rng>(rng: &mut R, n: usize) -> Result<SnDistribution<f64>> {
    let size = (1..=n).product();
    SnDistribution::new(n, random_probs(rng, size))
}

fn kernel(model: &ShuffleModel) -> Result<TransitionMatrix<f64>> {
    step_kernel(model)
}

fn monte_form() -> Result<Checked> {
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for n in 4..=6 {
        for l in 1..n {
            let p = kernel(&ShuffleModel::lrev(n, l, LrevForm::Plain)?)?;
            let m = kernel(&ShuffleModel::lrev(n, l, LrevForm::Monte)?)?;
            worst = worst.max(p.max_abs_diff(&m)?);
            pairs += 1;
        }
    }
    Ok((
        worst <= 1e-12,
        format!("{pairs} (n, L) pairs, max entry difference {worst:.3e}"),
        json!({ "pairs": pairs, "max_abs_diff": worst }),
    ))
}

fn time_reversal() -> Result<Checked> {
    let mut worst = 0.0f64;
    let mut doubly = true;
    for n in [2, 4] {
        let f = kernel(&ShuffleModel::thorp(n, Direction::Forward)?)?;
        let r = kernel(&ShuffleModel::thorp(n, Direction::Reverse)?)?;
        worst = worst.max(r.max_abs_diff(&f.transpose())?);
        doubly &= f.is_doubly_stochastic(1e-12) && r.is_doubly_stochastic(1e-12);
    }
    Ok((
        worst <= 1e-12 && doubly,
        format!("max |R - F^T| = {worst:.3e}, doubly stochastic: {doubly}"),
        json!({ "max_abs_diff": worst, "doubly_stochastic": doubly }),
    ))
}

fn chain_rule(rng: &mut ChaCha8Rng) -> Result<Checked> {
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let p = random_dist(rng, 5)?;
        let sum: f64 = position_entropy(&p).values.iter().sum();
        worst = worst.max((relative_entropy(&p) - sum).abs());
    }
    Ok((
        worst <= 1e-10,
        format!("500 distributions on S_5, max |ENT - sum| = {worst:.3e}"),
        json!({ "samples": 500, "max_abs_gap": worst }),
    ))
}

fn pinsker(rng: &mut ChaCha8Rng) -> Result<Checked> {
    let mut violations = 0;
    let mut worst_excess = 0.0f64;
    let mut half_violations = 0;
    for _ in 0..1000 {
        let p = random_dist(rng, 4)?;
        let tv = tv_to_uniform(&p);
        let bound = (0.5 * relative_entropy(&p)).sqrt();
        if tv > bound {
            violations += 1;
            worst_excess = worst_excess.max(tv - bound);
        }
        if tv / 2.0 > bound {
            half_violations += 1;
        }
    }
    Ok((
        violations == 0,
        format!(
            "{violations}/1000 violations of L1 <= sqrt(ENT/2) (worst excess {worst_excess:.4}); \
             {half_violations} on the half-L1 scale"
        ),
        json!({ "samples": 1000, "violations": violations, "worst_excess": worst_excess,
                "half_l1_violations": half_violations }),
    ))
}

fn projection(rng: &mut ChaCha8Rng) -> Result<Checked> {
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let p = random_probs(rng, 24);
        let q = random_probs(rng, 24);
        let blocks = rng.random_range(1..=24);
        let map: Vec<usize> = (0..24).map(|_| rng.random_range(0..blocks)).collect();
        let (mut pp, mut qq) = (vec![0.0; blocks], vec![0.0; blocks]);
        for (k, &b) in map.iter().enumerate() {
            pp[b] += p[k];
            qq[b] += q[k];
        }
        let gap = d_dist(&pp, &qq)? - d_dist(&p, &q)?;
        worst = worst.max(gap);
        if gap > 1e-12 {
            violations += 1;
        }
    }
    Ok((
        violations == 0,
        format!("{violations}/1000 violations, max d(P,Q) - d(p,q) = {worst:.3e}"),
        json!({ "samples": 1000, "violations": violations, "max_gap": worst }),
    ))
}

fn warmup(rng: &mut ChaCha8Rng) -> Result<Checked> {
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let mu = random_dist(rng, 4)?;
        for j in 0..4 {
            let c = warmup_check(&mu, j)?;
            worst = worst.max(c.lhs - c.rhs);
            if c.lhs > c.rhs + 1e-10 {
                violations += 1;
            }
        }
    }
    Ok((
        violations == 0,
        format!(
            "{violations} violations over 200 measures x 4 positions, max lhs - rhs = {worst:.3e}"
        ),
        json!({ "samples": 200, "violations": violations, "max_excess": worst }),
    ))
}

fn counting() -> Result<Checked> {
    let mut mismatches = 0;
    let mut compared = 0;
    for n in [12, 16, 20] {
        for l in 2..=5 {
            if n < 4 * l {
                continue;
            }
            for a in 1..=n / 2 {
                for u in (0..=n / 2).filter(|&u| u != a) {
                    compared += 1;
                    if count_n(n, l, a, u)? != count_n_oracle(n, l, a, u) {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    let mut kernel_gap = 0.0f64;
    for (n, l) in [(16, 3), (20, 5)] {
        let a: DistanceKernel<f64> = distance_kernel(n, l)?;
        let b: DistanceKernel<f64> = distance_kernel_brute(n, l, 0)?;
        kernel_gap = kernel_gap.max(a.max_abs_diff(&b)?);
    }
    Ok((
        mismatches == 0 && kernel_gap <= 1e-12,
        format!("{mismatches}/{compared} count mismatches, kernel gap {kernel_gap:.3e}"),
        json!({ "compared": compared, "mismatches": mismatches, "kernel_max_abs_diff": kernel_gap }),
    ))
}

fn monotonicity() -> Result<Checked> {
    let mut rows = Vec::new();
    let mut pass = true;
    let mut failing = Vec::new();
    for (n, l) in [(16, 3), (20, 4), (20, 5)] {
        let plain = check_monotone(&distance_kernel::<f64>(n, l)?);
        let stopped = check_monotone(&cut_stopped_kernel::<f64>(n, l)?);
        pass &= plain.monotone && stopped.monotone;
        if !plain.monotone {
            failing.push(format!("plain({n},{l})"));
        }
        if !stopped.monotone {
            failing.push(format!(
                "cut_stopped({n},{l}) deficit {:.4}",
                stopped.worst_deficit
            ));
        }
        rows.push(json!({ "n": n, "L": l, "plain": plain, "cut_stopped": stopped }));
    }
    let summary = if failing.is_empty() {
        "all kernels monotone".to_string()
    } else {
        format!("not monotone: {}", failing.join(", "))
    };
    Ok((pass, summary, json!(rows)))
}

fn a_uniformity(opts: SuiteOptions) -> Result<Checked> {
    let model = ShuffleModel::thorp(8, Direction::Reverse)?;
    let cards = thorp_interval(2, 8);
    let exp = estimate_match_probs(
        &model,
        &cards,
        TSampler::Thorp { m: 2 },
        3,
        1_000_000,
        opts.seed,
        opts.workers,
        MatchBound::Thorp,
    )?;
    let mut below = Vec::new();
    let mut min_upper = f64::INFINITY;
    for rep in &exp.reports {
        for t in rep.targets.iter().filter(|t| t.j < rep.card) {
            min_upper = min_upper.min(t.freq.ci_high);
            if t.bound.is_some_and(|b| t.freq.estimate < b) {
                below.push(format!(
                    "P(m({})={}) = {:.4}",
                    rep.card, t.j, t.freq.estimate
                ));
            }
        }
    }
    let pass = exp.all_meet_bound();
    let summary = if below.is_empty() {
        format!(
            "cards {cards:?}: min upper 99% limit {min_upper:.4} vs 1/16, no point estimate below"
        )
    } else {
        format!("point estimates below 1/16: {}", below.join(", "))
    };
    Ok((
        pass,
        summary,
        json!({ "min_ci_high": min_upper, "below_bound": below, "experiment": exp }),
    ))
}

fn retention(opts: SuiteOptions) -> Result<Checked> {
    let r = estimate_retention(32, 2, 10, 100_000, opts.seed, opts.workers)?;
    Ok((
        r.consistent,
        format!(
            "estimate {:.4} +/- {:.4} (3 se) vs (7/8)^10 = {:.4}",
            r.freq.estimate,
            3.0 * r.freq.robust_stderr(),
            r.lower_bound
        ),
        serde_json::to_value(&r)?,
    ))
}

fn contraction() -> Result<Checked> {
    let mut rows = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [4, 6, 8] {
        let model = ShuffleModel::thorp(n, Direction::Reverse)?;
        let rep = contraction_estimate::<f64>(&model, None, DEFAULT_HORIZON)?;
        let mix = mixing_time_exact::<f64>(&model, 0.25, DEFAULT_HORIZON)?;
        pass &= rep.strictly_contracting();
        parts.push(format!(
            "n={n}: worst factor {:.4}, C {:.3}, t_mix {}",
            rep.worst_factor, rep.implied_c, mix.t_mix
        ));
        rows.push(
            json!({ "n": n, "block": rep.block, "worst_factor": rep.worst_factor,
                          "implied_c": rep.implied_c, "factors": rep.factors, "t_mix": mix.t_mix }),
        );
    }
    Ok((pass, parts.join("; "), json!(rows)))
}

fn single_card_scaling(opts: SuiteOptions) -> Result<Checked> {
    let grid: Vec<SweepPoint> = [3usize, 6]
        .iter()
        .map(|&l| {
            Ok(SweepPoint {
                param_name: "L".into(),
                param_value: l,
                model: ShuffleModel::lrev(60, l, LrevForm::Plain)?,
            })
        })
        .collect::<Result<_>>()?;
    let sweep = scaling_sweep(
        &grid,
        &ProjectionSpec::SingleCard { card: 0 },
        SweepOptions {
            tv_target: 0.25,
            trials: 100_000,
            seed: opts.seed,
            workers: opts.workers,
            horizon: 1 << 16,
        },
    )?;
    let ts: Vec<Option<usize>> = sweep.rows.iter().map(|r| r.t_star).collect();
    let (pass, summary, ratio) = match (ts[0], ts[1]) {
        (Some(a), Some(b)) if b > 0 => {
            let ratio = a as f64 / b as f64;
            (
                (4.0..=16.0).contains(&ratio),
                format!("t*(L=3) = {a}, t*(L=6) = {b}, ratio {ratio:.3}"),
                Some(ratio),
            )
        }
        _ => (false, format!("t* not found: {ts:?}"), None),
    };
    Ok((pass, summary, json!({ "ratio": ratio, "sweep": sweep })))
}
