//! Exact evolution of distributions over `S_n` for small decks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::entropy::{
    conditional_groups, d_dist, position_entropy, relative_entropy, tv_to_uniform, SnDistribution,
};
use crate::error::{Error, Result};
use crate::kernel::Propagator;
use crate::perm::{factorial, Permutation};
use crate::scalar::{compensated_sum, Scalar};
use crate::shuffle::{step_kernel, ShuffleModel};

/// Default number of steps searched before giving up.
pub const DEFAULT_HORIZON: usize = 5000;

/// Entropy below which a trajectory counts as mixed for contraction purposes.
pub const ENTROPY_FLOOR: f64 = 1e-9;

const SPOT_CHECKS: usize = 3;
const SPOT_SEED: u64 = 0x5eed_0003;

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord<S> {
    pub t: usize,
    pub tv: S,
    pub entropy: S,
    pub position_entropy: Vec<S>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryReport<S> {
    pub model: ShuffleModel,
    pub steps: usize,
    pub records: Vec<StepRecord<S>>,
}

impl<S: Scalar> TrajectoryReport<S> {
    /// Largest increase of entropy between consecutive steps (0 if none).
    pub fn max_entropy_increase(&self) -> S {
        self.records
            .windows(2)
            .map(|w| w[1].entropy - w[0].entropy)
            .fold(S::zero(), S::max)
    }
}

/// Repeated distribution-kernel products for one model.
pub struct Evolver<S> {
    model: ShuffleModel,
    propagator: Propagator<S>,
}

impl<S: Scalar> Evolver<S> {
    pub fn new(model: &ShuffleModel) -> Result<Self> {
        let kernel = step_kernel::<S>(model)?;
        Ok(Evolver {
            model: *model,
            propagator: Propagator::new(&kernel),
        })
    }

    pub fn model(&self) -> &ShuffleModel {
        &self.model
    }

    pub fn step(&self, dist: &SnDistribution<S>) -> Result<SnDistribution<S>> {
        check_model_size(&self.model, dist)?;
        let probs = self.propagator.step(dist.probs())?;
        Ok(SnDistribution::from_raw(dist.n(), probs))
    }
}

fn check_model_size<S: Scalar>(model: &ShuffleModel, dist: &SnDistribution<S>) -> Result<()> {
    if model.n() != dist.n() {
        return Err(Error::SizeMismatch {
            left: dist.n(),
            right: model.n(),
        });
    }
    Ok(())
}

fn record<S: Scalar>(t: usize, dist: &SnDistribution<S>) -> StepRecord<S> {
    StepRecord {
        t,
        tv: tv_to_uniform(dist),
        entropy: relative_entropy(dist),
        position_entropy: position_entropy(dist).values,
    }
}

/// Applies the one-step kernel `steps` times, recording metrics at every
/// `t = 0..=steps`.
pub fn evolve_exact<S: Scalar>(
    dist: &SnDistribution<S>,
    model: &ShuffleModel,
    steps: usize,
) -> Result<TrajectoryReport<S>> {
    check_model_size(model, dist)?;
    let ev = Evolver::new(model)?;
    let mut cur = dist.clone();
    let mut records = vec![record(0, &cur)];
    for t in 1..=steps {
        cur = ev.step(&cur)?;
        records.push(record(t, &cur));
    }
    Ok(TrajectoryReport {
        model: *model,
        steps,
        records,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingReport {
    pub model: ShuffleModel,
    pub threshold: f64,
    pub t_mix: usize,
    pub tv_at_t_mix: f64,
    /// TV trajectory from the identity, `t = 0..=t_mix`.
    pub tv_trajectory: Vec<f64>,
    /// Ranks of the extra starting states checked against the identity.
    pub spot_check_starts: Vec<u64>,
    /// Largest TV discrepancy between those starts and the identity.
    pub spot_check_max_dev: f64,
}

/// Smallest `t` with `tv(identity after t steps, uniform) ≤ threshold`.
///
/// The walks are translation invariant, so the identity start stands for
/// every start; three random starts are evolved alongside and must produce
/// the same TV trajectory.
pub fn mixing_time_exact<S: Scalar>(
    model: &ShuffleModel,
    threshold: f64,
    horizon: usize,
) -> Result<MixingReport> {
    let n = model.n();
    let ev = Evolver::<S>::new(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SPOT_SEED);
    let size = factorial(n)?;
    let starts: Vec<u64> = (0..SPOT_CHECKS)
        .map(|_| rng.random_range(0..size))
        .collect();

    let mut cur = SnDistribution::<S>::point_mass(&Permutation::identity(n))?;
    let mut others = starts
        .iter()
        .map(|&r| {
            SnDistribution::<S>::point_mass(&Permutation::unrank(crate::PermRank::new(n, r)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut traj = Vec::new();
    let mut dev = 0.0f64;
    for t in 0..=horizon {
        if t > 0 {
            cur = ev.step(&cur)?;
            for o in others.iter_mut() {
                *o = ev.step(o)?;
            }
        }
        let tv = tv_to_uniform(&cur).as_f64();
        for o in &others {
            dev = dev.max((tv_to_uniform(o).as_f64() - tv).abs());
        }
        traj.push(tv);
        if tv <= threshold {
            if dev > 1e-9 {
                return Err(Error::NotApplicable(format!(
                    "TV from random starts deviates from the identity start by {dev:e}"
                )));
            }
            return Ok(MixingReport {
                model: *model,
                threshold,
                t_mix: t,
                tv_at_t_mix: tv,
                tv_trajectory: traj,
                spot_check_starts: starts,
                spot_check_max_dev: dev,
            });
        }
    }
    Err(Error::HorizonExhausted { horizon })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub model: ShuffleModel,
    pub block: usize,
    /// Entropy from a point mass, `t = 0, 1, ..` until it drops below the floor
    /// and `block` more steps have been taken.
    pub entropies: Vec<f64>,
    /// `ENT(t + block) / ENT(t)` for every `t` with `ENT(t)` above the floor.
    pub factors: Vec<f64>,
    pub worst_factor: f64,
    /// `C` in `1 - C / log² n` implied by the worst factor.
    pub implied_c: f64,
}

impl ContractionReport {
    pub fn strictly_contracting(&self) -> bool {
        self.factors.iter().all(|&f| f < 1.0)
    }
}

/// `⌈log₂ n⌉`, at least 1.
pub fn default_block(n: usize) -> usize {
    (usize::BITS - (n.max(2) - 1).leading_zeros()) as usize
}

/// Worst observed per-block entropy contraction from a point mass.
pub fn contraction_estimate<S: Scalar>(
    model: &ShuffleModel,
    block: Option<usize>,
    horizon: usize,
) -> Result<ContractionReport> {
    let n = model.n();
    let block = block.unwrap_or_else(|| default_block(n));
    if block == 0 {
        return Err(Error::InvalidArgument("block must be at least 1".into()));
    }
    let ev = Evolver::<S>::new(model)?;
    let mut cur = SnDistribution::<S>::point_mass(&Permutation::identity(n))?;
    let mut entropies = vec![relative_entropy(&cur).as_f64()];
    if entropies[0] <= ENTROPY_FLOOR {
        return Err(Error::NotApplicable("entropy already at zero".into()));
    }
    let mut below_at: Option<usize> = None;
    for t in 1..=horizon {
        cur = ev.step(&cur)?;
        let e = relative_entropy(&cur).as_f64();
        entropies.push(e);
        if below_at.is_none() && e <= ENTROPY_FLOOR {
            below_at = Some(t);
        }
        if let Some(b) = below_at {
            if t >= b + block {
                break;
            }
        }
    }
    let last = below_at.ok_or(Error::HorizonExhausted { horizon })?;
    let factors: Vec<f64> = (0..last)
        .filter(|&t| t + block < entropies.len())
        .map(|t| entropies[t + block] / entropies[t])
        .collect();
    let worst = factors.iter().copied().fold(0.0, f64::max);
    let log_n = (n as f64).ln();
    Ok(ContractionReport {
        model: *model,
        block,
        entropies,
        factors,
        worst_factor: worst,
        implied_c: (1.0 - worst) * log_n * log_n,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WarmupCheck {
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Both sides of the averaged collision inequality at position `j`:
///
/// `lhs = (j+1)⁻¹ Σ_{i ≤ j} ENT(μ c(i, j))`,
/// `rhs = ENT(μ) − E d(U, L(card at j | cards at j+1..))`,
///
/// where `U` is uniform over the `j+1` cards not yet placed.
pub fn warmup_check<S: Scalar>(mu: &SnDistribution<S>, j: usize) -> Result<WarmupCheck> {
    let n = mu.n();
    if j >= n {
        return Err(Error::OutOfRange(format!("position {j} on n = {n}")));
    }
    let mut terms = Vec::with_capacity(j + 1);
    for i in 0..=j {
        let after = if i == j {
            mu.clone()
        } else {
            mu.after_collision(i, j)?
        };
        terms.push(relative_entropy(&after));
    }
    let lhs = compensated_sum(terms) / S::of((j + 1) as f64);

    let mut expected_d = Vec::new();
    for g in conditional_groups(mu, j) {
        if g.mass <= S::zero() {
            continue;
        }
        let slots = S::of(g.remaining.len() as f64);
        let law: Vec<S> = g
            .remaining
            .iter()
            .map(|&c| g.card_mass[c] / g.mass)
            .collect();
        let uniform = vec![S::one() / slots; law.len()];
        expected_d.push(g.mass * d_dist(&uniform, &law)?);
    }
    let rhs = relative_entropy(mu) - compensated_sum(expected_d);
    let (lhs, rhs) = (lhs.as_f64(), rhs.as_f64());
    Ok(WarmupCheck {
        j,
        lhs,
        rhs,
        pass: lhs <= rhs + 1e-10,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MainTheoremRatio {
    pub t: usize,
    pub entropy_before: f64,
    pub entropy_after: f64,
    pub weighted_sum: f64,
    /// `-(ENT after - ENT before) log n / Σ A_k E_k`.
    pub implied_c: f64,
}

/// Implied constant of the per-position contraction inequality, pairing
/// `A[k]` with `E_k` index by index.
pub fn main_theorem_ratio<S: Scalar>(
    mu: &SnDistribution<S>,
    model: &ShuffleModel,
    t: usize,
    a: &[f64],
) -> Result<MainTheoremRatio> {
    let n = mu.n();
    if a.len() != n {
        return Err(Error::SizeMismatch {
            left: a.len(),
            right: n,
        });
    }
    if a.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::InvalidArgument(
            "A entries must lie in [0, 1]".into(),
        ));
    }
    let profile = position_entropy(mu);
    let weighted: f64 = a
        .iter()
        .zip(&profile.values)
        .map(|(&ak, &ek)| ak * ek.as_f64())
        .sum();
    if weighted <= 0.0 {
        return Err(Error::NotApplicable("Σ A_k E_k = 0".into()));
    }
    let traj = evolve_exact(mu, model, t)?;
    let before = traj.records[0].entropy.as_f64();
    let after = traj.records[t].entropy.as_f64();
    Ok(MainTheoremRatio {
        t,
        entropy_before: before,
        entropy_after: after,
        weighted_sum: weighted,
        implied_c: -(after - before) * (n as f64).ln() / weighted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shuffle::{Direction, LrevForm};

    #[test]
    fn default_block_is_ceil_log2() {
        assert_eq!(default_block(2), 1);
        assert_eq!(default_block(4), 2);
        assert_eq!(default_block(6), 3);
        assert_eq!(default_block(8), 3);
        assert_eq!(default_block(9), 4);
    }

    #[test]
    fn two_card_thorp_mixes_in_one_step() {
        let m = ShuffleModel::thorp(2, Direction::Forward).unwrap();
        let r = mixing_time_exact::<f64>(&m, 0.25, 10).unwrap();
        assert_eq!(r.t_mix, 1);
        let c = contraction_estimate::<f64>(&m, Some(1), 10).unwrap();
        assert_eq!(c.worst_factor, 0.0);
    }

    #[test]
    fn vacuous_threshold() {
        let m = ShuffleModel::lrev(4, 1, LrevForm::Plain).unwrap();
        assert_eq!(mixing_time_exact::<f64>(&m, 2.0, 10).unwrap().t_mix, 0);
    }

    #[test]
    fn uniform_is_fixed() {
        let m = ShuffleModel::thorp(4, Direction::Reverse).unwrap();
        let u = SnDistribution::<f64>::uniform(4).unwrap();
        let tr = evolve_exact(&u, &m, 3).unwrap();
        for r in &tr.records {
            assert!(r.tv.abs() < 1e-12 && r.entropy.abs() < 1e-12);
        }
    }

    #[test]
    fn warmup_uniform_is_tight() {
        let u = SnDistribution::<f64>::uniform(4).unwrap();
        for j in 0..4 {
            let w = warmup_check(&u, j).unwrap();
            assert!(w.lhs.abs() < 1e-12 && w.rhs.abs() < 1e-12 && w.pass);
        }
    }
}
