use montemix::distance::{
    check_monotone, cut_stopped_kernel, distance_kernel, distance_kernel_brute,
    first_cut_proximity_estimate,
};
use montemix::entropy::SnDistribution;
use montemix::exact::{contraction_estimate, default_block, evolve_exact, mixing_time_exact};
use montemix::matching::{
    estimate_match_probs, lrev_interval, thorp_interval, MatchBound, TSampler,
};
use montemix::mc::{
    estimate_projected_tv, estimate_retention, scaling_sweep, ProjectionSpec, SweepOptions,
    SweepPoint,
};
use montemix::shuffle::{ShuffleKind, ShuffleModel};
use montemix::suite::{self, SuiteOptions};
use montemix::table::{fmt_f64, Table};
use montemix::Permutation;
use serde_json::json;

use crate::args::*;
use crate::output::{emit, Artifact, ExperimentSpec};
use crate::CliError;

fn spec_err(msg: impl Into<String>) -> CliError {
    CliError::Spec(msg.into())
}

fn build_model(m: &ModelArgs, default: Option<ShuffleKind>) -> Result<ShuffleModel, CliError> {
    let kind = m
        .model
        .or(default)
        .ok_or_else(|| spec_err("--model is required"))?;
    Ok(ShuffleModel::new(
        kind,
        m.n,
        if kind.is_thorp() { None } else { m.l },
    )?)
}

fn check_threshold(x: f64) -> Result<(), CliError> {
    if !(x > 0.0 && x <= 2.0) {
        return Err(spec_err(format!("threshold must lie in (0, 2], got {x}")));
    }
    Ok(())
}

pub fn exact(a: &ExactArgs) -> Result<bool, CliError> {
    let model = build_model(&a.model, None)?;
    check_threshold(a.threshold)?;
    let mix = mixing_time_exact::<f64>(&model, a.threshold, a.horizon)?;
    let steps = a.t.unwrap_or(mix.t_mix.max(1));
    let n = model.n();
    let start = SnDistribution::point_mass(&Permutation::identity(n))?;
    let traj = evolve_exact::<f64>(&start, &model, steps)?;
    let contraction = contraction_estimate::<f64>(&model, a.block, a.horizon)?;

    let mut header = vec!["t".to_string(), "tv".into(), "entropy".into()];
    header.extend((0..n).map(|k| format!("position_entropy_{k}")));
    let mut table = Table::new(header);
    for r in &traj.records {
        let mut row = vec![r.t.to_string(), fmt_f64(r.tv), fmt_f64(r.entropy)];
        row.extend(r.position_entropy.iter().map(|&x| fmt_f64(x)));
        table.push(row);
    }
    let summary = json!({
        "t_mix": mix.t_mix,
        "tv_at_t_mix": mix.tv_at_t_mix,
        "spot_check_max_dev": mix.spot_check_max_dev,
        "max_entropy_increase": traj.max_entropy_increase(),
        "contraction": {
            "block": contraction.block,
            "worst_factor": contraction.worst_factor,
            "implied_c": contraction.implied_c,
            "strictly_contracting": contraction.strictly_contracting(),
        },
        "regime_warning": model.regime_warning(),
    });
    let params = json!({
        "t": a.t,
        "threshold": a.threshold,
        "block": a.block.unwrap_or_else(|| default_block(n)),
        "horizon": a.horizon,
    });
    let spec = ExperimentSpec::new("exact", Some(model), params, &a.common);
    emit(&spec, &Artifact { table, summary }, &a.common)?;
    Ok(true)
}

/// `⌈4^k C n / L³⌉`.
fn lrev_preset_time(k: usize, c: f64, n: usize, l: usize) -> Result<usize, CliError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(spec_err(format!("--C must be positive, got {c}")));
    }
    let t = (4f64.powi(k as i32) * c * n as f64 / (l as f64).powi(3)).ceil();
    if t > 1e9 {
        return Err(spec_err(format!("preset time {t} is too large")));
    }
    Ok((t as usize).max(1))
}

pub fn matching(a: &MatchArgs) -> Result<bool, CliError> {
    let n = a.model.n;
    let (model, t, sampler, cards, bound, params) = match a.preset {
        Some(Preset::Thorp) => {
            let model = build_model(&a.model, Some(ShuffleKind::ThorpReverse))?;
            if !model.kind().is_thorp() {
                return Err(spec_err("the thorp preset needs a Thorp model"));
            }
            let t = default_block(n);
            let m = a.m.unwrap_or(t.saturating_sub(1).max(1));
            if m == 0 || m > t {
                return Err(spec_err(format!("--m must lie in 1..={t}")));
            }
            let cards = thorp_interval(m, n);
            let params =
                json!({ "preset": "thorp", "t": t, "m": m, "cards": cards, "trials": a.trials });
            (
                model,
                t,
                TSampler::Thorp { m },
                cards,
                MatchBound::Thorp,
                params,
            )
        }
        Some(Preset::Lrev) => {
            let model = build_model(&a.model, Some(ShuffleKind::LrevMonte))?;
            if model.kind() != ShuffleKind::LrevMonte {
                return Err(spec_err(
                    "the lrev preset needs lrev_monte: the plain form has no collisions",
                ));
            }
            let l = model.l().expect("reversal model has L");
            let t = lrev_preset_time(a.k, a.c, n, l)?;
            let cards = lrev_interval(a.k, l, n);
            let bound = match a.alpha {
                Some(alpha) => MatchBound::Lrev { alpha, t, n },
                None => MatchBound::None,
            };
            let params = json!({ "preset": "lrev", "t": t, "T": t / 2, "k": a.k, "C": a.c,
                                 "alpha": a.alpha, "cards": cards, "trials": a.trials });
            (
                model,
                t,
                TSampler::Fixed { value: t / 2 },
                cards,
                bound,
                params,
            )
        }
        None => {
            let model = build_model(&a.model, None)?;
            let t =
                a.t.ok_or_else(|| spec_err("--t is required without a preset"))?;
            let cut = a
                .cut
                .ok_or_else(|| spec_err("--T is required without a preset"))?;
            let cards = a.cards.clone().unwrap_or_else(|| (0..n).collect());
            let bound = match (model.kind().is_thorp(), a.alpha) {
                (true, _) => MatchBound::Thorp,
                (false, Some(alpha)) => MatchBound::Lrev { alpha, t, n },
                (false, None) => MatchBound::None,
            };
            let params =
                json!({ "t": t, "T": cut, "alpha": a.alpha, "cards": cards, "trials": a.trials });
            (
                model,
                t,
                TSampler::Fixed { value: cut },
                cards,
                bound,
                params,
            )
        }
    };
    if cards.is_empty() {
        return Err(spec_err(format!(
            "no cards in the requested interval for n = {n}"
        )));
    }
    let exp = estimate_match_probs(
        &model,
        &cards,
        sampler,
        t,
        a.trials,
        a.common.seed,
        a.common.workers,
        bound,
    )?;
    let summary = json!({
        "t": t,
        "cards": cards,
        "all_meet_bound": exp.all_meet_bound(),
        "a_estimates": exp.reports.iter().map(|r| json!({ "card": r.card, "a": r.a_estimate() })).collect::<Vec<_>>(),
        "below_bound": exp.reports.iter().flat_map(|r| r.below_bound().into_iter().map(move |t| json!({
            "i": r.card, "j": t.j, "freq": t.freq.estimate, "bound": t.bound,
        }))).collect::<Vec<_>>(),
    });
    let spec = ExperimentSpec::new("match", Some(model), params, &a.common);
    emit(
        &spec,
        &Artifact {
            table: exp.to_table(),
            summary,
        },
        &a.common,
    )?;
    Ok(true)
}

pub fn lrev_kernel(a: &KernelArgs) -> Result<bool, CliError> {
    let (table, summary, params) = match a.estimator {
        KernelEstimator::Kernel => {
            let k = match a.kernel {
                KernelKind::Distance => distance_kernel::<f64>(a.n, a.l)?,
                KernelKind::CutStopped => cut_stopped_kernel::<f64>(a.n, a.l)?,
                KernelKind::Brute => distance_kernel_brute::<f64>(a.n, a.l, 0)?,
            };
            let summary = json!({
                "rows_stochastic": k.rows_stochastic(1e-12),
                "monotone": check_monotone(&k),
            });
            (k.to_table(), summary, json!({ "kernel": a.kernel }))
        }
        KernelEstimator::FirstCut => {
            let t_prime = a
                .t_prime
                .ok_or_else(|| spec_err("--t-prime is required for first_cut"))?;
            let distances = a
                .distances
                .clone()
                .unwrap_or_else(|| (1..=a.n / 2).collect());
            let rep = first_cut_proximity_estimate(
                a.n,
                a.l,
                &distances,
                a.m_prime,
                t_prime,
                a.trials,
                a.common.seed,
                a.common.workers,
            )?;
            let mut table = Table::new([
                "distance",
                "count",
                "trials",
                "freq",
                "stderr",
                "ci_low",
                "ci_high",
                "upper_bound",
                "within_bound",
            ]);
            for e in &rep.estimates {
                table.push(vec![
                    e.distance.to_string(),
                    e.freq.count.to_string(),
                    e.freq.trials.to_string(),
                    fmt_f64(e.freq.estimate),
                    fmt_f64(e.freq.robust_stderr()),
                    fmt_f64(e.freq.ci_low),
                    fmt_f64(e.freq.ci_high),
                    fmt_f64(e.upper_bound),
                    e.within_bound.to_string(),
                ]);
            }
            let summary = json!({ "nonincreasing_within_4se": rep.nonincreasing_within(4.0), "paired": rep.paired });
            let params = json!({ "estimator": "first_cut", "distances": distances, "m_prime": a.m_prime,
                                 "t_prime": t_prime, "trials": a.trials });
            (table, summary, params)
        }
    };
    let params = json!({ "n": a.n, "L": a.l, "run": params });
    let spec = ExperimentSpec::new("lrev-kernel", None, params, &a.common);
    emit(&spec, &Artifact { table, summary }, &a.common)?;
    Ok(true)
}

fn projection(a: &McArgs) -> Result<ProjectionSpec, CliError> {
    let cards = a.cards.clone().unwrap_or_default();
    Ok(match a.projection {
        ProjectionKind::SingleCard => ProjectionSpec::SingleCard {
            card: cards.first().copied().unwrap_or(0),
        },
        ProjectionKind::CardPair => match cards.as_slice() {
            [] => ProjectionSpec::CardPair {
                first: 0,
                second: 1,
            },
            [f, s] => ProjectionSpec::CardPair {
                first: *f,
                second: *s,
            },
            _ => return Err(spec_err("card_pair needs exactly two --cards")),
        },
        ProjectionKind::RetentionSet => ProjectionSpec::RetentionSet,
    })
}

pub fn mc(a: &McArgs) -> Result<bool, CliError> {
    let (model, table, summary, params) = match a.estimator {
        McEstimator::ProjectedTv => {
            let model = build_model(&a.model, None)?;
            let t = a.t.ok_or_else(|| spec_err("--t is required"))?;
            let proj = projection(a)?;
            let r =
                estimate_projected_tv(&model, &proj, t, a.trials, a.common.seed, a.common.workers)?;
            let mut table = Table::new(["t", "trials", "estimate", "stderr", "ci_low", "ci_high"]);
            table.push(vec![
                r.t.to_string(),
                r.trials.to_string(),
                fmt_f64(r.estimate),
                fmt_f64(r.stderr),
                fmt_f64(r.ci_low),
                fmt_f64(r.ci_high),
            ]);
            let summary =
                json!({ "estimate": r.estimate, "stderr": r.stderr, "lower_bound_proxy": true });
            (
                Some(model),
                table,
                summary,
                json!({ "estimator": a.estimator, "projection": proj, "t": t, "trials": a.trials }),
            )
        }
        McEstimator::Retention => {
            if a.model.model.is_some_and(|k| k != ShuffleKind::LrevPlain) {
                return Err(spec_err("retention runs the plain L-reversal chain"));
            }
            let l = a.model.l.ok_or_else(|| spec_err("--L is required"))?;
            let t = a.t.ok_or_else(|| spec_err("--t is required"))?;
            let r = estimate_retention(a.model.n, l, t, a.trials, a.common.seed, a.common.workers)?;
            let mut table = Table::new([
                "n",
                "L",
                "t",
                "trials",
                "estimate",
                "stderr",
                "ci_low",
                "ci_high",
                "lower_bound",
                "consistent",
            ]);
            table.push(vec![
                r.n.to_string(),
                r.l.to_string(),
                r.t.to_string(),
                r.freq.trials.to_string(),
                fmt_f64(r.freq.estimate),
                fmt_f64(r.freq.robust_stderr()),
                fmt_f64(r.freq.ci_low),
                fmt_f64(r.freq.ci_high),
                fmt_f64(r.lower_bound),
                r.consistent.to_string(),
            ]);
            let summary = json!({ "estimate": r.freq.estimate, "lower_bound": r.lower_bound, "consistent": r.consistent });
            let model = ShuffleModel::new(ShuffleKind::LrevPlain, a.model.n, Some(l))?;
            (
                Some(model),
                table,
                summary,
                json!({ "estimator": a.estimator, "t": t, "trials": a.trials }),
            )
        }
        McEstimator::Sweep => {
            let kind = a
                .model
                .model
                .ok_or_else(|| spec_err("--model is required"))?;
            let param = a
                .param
                .ok_or_else(|| spec_err("--param is required for a sweep"))?;
            let grid = a
                .grid
                .clone()
                .ok_or_else(|| spec_err("--grid is required for a sweep"))?;
            check_threshold(a.threshold)?;
            let points = grid
                .iter()
                .map(|&v| {
                    let model = match param {
                        SweepParam::N => ShuffleModel::new(kind, v, a.model.l)?,
                        SweepParam::L => ShuffleModel::new(kind, a.model.n, Some(v))?,
                    };
                    Ok(SweepPoint {
                        param_name: match param {
                            SweepParam::N => "n".into(),
                            SweepParam::L => "L".into(),
                        },
                        param_value: v,
                        model,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let proj = projection(a)?;
            let sweep = scaling_sweep(
                &points,
                &proj,
                SweepOptions {
                    tv_target: a.threshold,
                    trials: a.trials,
                    seed: a.common.seed,
                    workers: a.common.workers,
                    horizon: a.horizon,
                },
            )?;
            let summary = json!({
                "t_star": sweep.rows.iter().map(|r| json!({ "param_value": r.param_value, "t_star": r.t_star, "flag": r.flag })).collect::<Vec<_>>(),
                "lower_bound_proxy": true,
            });
            let params = json!({ "estimator": a.estimator, "projection": proj, "param": param, "grid": grid,
                                 "kind": kind.name(), "n": a.model.n, "L": a.model.l,
                                 "tv_target": a.threshold, "trials": a.trials, "horizon": a.horizon });
            (None, sweep.to_table(), summary, params)
        }
    };
    let spec = ExperimentSpec::new("mc", model, params, &a.common);
    emit(&spec, &Artifact { table, summary }, &a.common)?;
    Ok(true)
}

pub fn check(a: &CheckArgs) -> Result<bool, CliError> {
    let ids: Vec<u8> = match &a.only {
        Some(v) => v
            .iter()
            .map(|&i| {
                u8::try_from(i)
                    .ok()
                    .filter(|&i| (1..=suite::LAST).contains(&i))
                    .ok_or_else(|| spec_err(format!("no criterion {i}")))
            })
            .collect::<Result<_, _>>()?,
        None => (1..=suite::LAST).collect(),
    };
    let opts = SuiteOptions {
        seed: a.common.seed,
        workers: a.common.workers,
    };
    let mut table = Table::new(["criterion", "title", "pass", "summary"]);
    let mut outcomes = Vec::new();
    for id in ids {
        let o = suite::run(id, opts)?;
        eprintln!(
            "criterion {:>2} {} {}: {}",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.title,
            o.summary
        );
        table.push(vec![
            o.id.to_string(),
            o.title.to_string(),
            o.pass.to_string(),
            o.summary.clone(),
        ]);
        outcomes.push(o);
    }
    let all = outcomes.iter().all(|o| o.pass);
    let summary = json!({
        "passed": outcomes.iter().filter(|o| o.pass).count(),
        "failed": outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect::<Vec<_>>(),
        "outcomes": outcomes,
    });
    let spec = ExperimentSpec::new("check", None, json!({ "only": a.only }), &a.common);
    emit(&spec, &Artifact { table, summary }, &a.common)?;
    Ok(all)
}
