//! Distributions over S_n and the entropy functionals used to measure mixing.
//!
//! All logarithms are natural. Total variation is the full L1 sum
//! `Σ |p - q|` (range `[0, 2]`), so the usual "mixed" threshold of one quarter
//! is taken on that scale.

use serde::Serialize;

use crate::config::check_exact;
use crate::error::{Error, Result};
use crate::group::table;
use crate::perm::{factorial, Permutation};
use crate::scalar::{compensated_sum, weight_sum, xlogx, CompensatedSum, Scalar, Weight};

/// Conditional groups with less total mass than this contribute nothing.
const NEGLIGIBLE_MASS: f64 = 1e-15;

/// A probability vector over all `n!` permutations, indexed by
/// [`PermRank`](crate::PermRank).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnDistribution<W> {
    n: usize,
    probs: Vec<W>,
}

impl<W: Weight> SnDistribution<W> {
    pub fn new(n: usize, probs: Vec<W>) -> Result<Self> {
        check_exact(n)?;
        let size = factorial(n)? as usize;
        if probs.len() != size {
            return Err(Error::SizeMismatch {
                left: probs.len(),
                right: size,
            });
        }
        if probs.iter().any(|&p| p < W::zero()) {
            return Err(Error::InvalidDistribution("negative entry".into()));
        }
        let total = weight_sum(probs.iter().copied());
        let dev = total.abs_diff(W::one()).as_f64();
        if dev.is_nan() || dev > W::NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "total mass deviates from 1 by {dev:e}"
            )));
        }
        Ok(SnDistribution { n, probs })
    }

    pub(crate) fn from_raw(n: usize, probs: Vec<W>) -> Self {
        SnDistribution { n, probs }
    }

    pub fn uniform(n: usize) -> Result<Self> {
        check_exact(n)?;
        let size = factorial(n)?;
        Ok(SnDistribution {
            n,
            probs: vec![W::ratio(1, size); size as usize],
        })
    }

    pub fn point_mass(p: &Permutation) -> Result<Self> {
        let n = p.n();
        check_exact(n)?;
        let size = factorial(n)? as usize;
        let mut probs = vec![W::zero(); size];
        probs[p.rank().value() as usize] = W::one();
        Ok(SnDistribution { n, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[W] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<W> {
        self.probs
    }

    pub fn prob(&self, p: &Permutation) -> W {
        self.probs[p.rank().value() as usize]
    }

    /// Law of `compose(π, sigma)` for `π` drawn from `self`.
    pub fn right_multiply(&self, sigma: &Permutation) -> Result<Self> {
        if sigma.n() != self.n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: sigma.n(),
            });
        }
        let t = table(self.n);
        let mut out = vec![W::zero(); self.probs.len()];
        for (r, &p) in self.probs.iter().enumerate() {
            out[t.rank_then(r, sigma)] = p;
        }
        Ok(SnDistribution::from_raw(self.n, out))
    }

    /// Law of `compose(π, c(i, j))` where `c(i, j)` is an independent
    /// collision of positions `i` and `j`.
    pub fn after_collision(&self, i: usize, j: usize) -> Result<Self> {
        if i >= self.n || j >= self.n {
            return Err(Error::OutOfRange(format!(
                "collision ({i}, {j}) on n = {}",
                self.n
            )));
        }
        let swapped = self.right_multiply(&Permutation::swap(self.n, i, j)?)?;
        let half = W::ratio(1, 2);
        let probs = self
            .probs
            .iter()
            .zip(swapped.probs.iter())
            .map(|(&a, &b)| half * a + half * b)
            .collect();
        Ok(SnDistribution::from_raw(self.n, probs))
    }
}

impl<S: Scalar> SnDistribution<S> {
    /// Pushforward onto the position of one card.
    pub fn card_position_law(&self, card: usize) -> Result<Vec<S>> {
        if card >= self.n {
            return Err(Error::OutOfRange(format!("card {card} on n = {}", self.n)));
        }
        let t = table(self.n);
        let mut out = vec![CompensatedSum::new(); self.n];
        for (r, &p) in self.probs.iter().enumerate() {
            out[t.map(r)[card] as usize].add(p);
        }
        Ok(out.iter().map(|s| s.total()).collect())
    }
}

/// Relative entropy from uniform of an arbitrary probability vector.
pub fn relative_entropy_of<S: Scalar>(p: &[S]) -> Result<S> {
    if p.iter().any(|&x| x < S::zero()) {
        return Err(Error::InvalidDistribution("negative entry".into()));
    }
    let size = S::of(p.len() as f64);
    // Σ u g(p/u) has nonnegative terms, so it keeps precision near uniform
    let u = S::one() / size;
    Ok(compensated_sum(p.iter().map(|&x| u * g_excess(x * size))))
}

/// `ENT(p) = Σ p log(n! p)` in nats.
pub fn relative_entropy<S: Scalar>(p: &SnDistribution<S>) -> S {
    relative_entropy_of(&p.probs).expect("validated distribution")
}

/// `Σ |p - q|` over all permutations.
pub fn tv_distance<S: Scalar>(p: &SnDistribution<S>, q: &SnDistribution<S>) -> Result<S> {
    l1_distance(&p.probs, &q.probs)
}

/// Total variation from uniform (L1 scale).
pub fn tv_to_uniform<S: Scalar>(p: &SnDistribution<S>) -> S {
    let u = S::one() / S::of(p.probs.len() as f64);
    compensated_sum(p.probs.iter().map(|&x| (x - u).abs()))
}

pub fn l1_distance<S: Scalar>(p: &[S], q: &[S]) -> Result<S> {
    if p.len() != q.len() {
        return Err(Error::SizeMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(compensated_sum(
        p.iter().zip(q).map(|(&a, &b)| (a - b).abs()),
    ))
}

/// `f(Δ) = ½(1+Δ)log(1+Δ) + ½(1-Δ)log(1-Δ)` on `[-1, 1]`.
pub fn f_delta<S: Scalar>(delta: S) -> S {
    let one = S::one();
    let half = S::of(0.5);
    let a = delta.abs();
    if a >= one {
        return S::of(std::f64::consts::LN_2);
    }
    if a < S::of(1e-3) {
        // Σ Δ^{2k} / (2k(2k-1))
        let d2 = delta * delta;
        return d2
            * (half
                + d2 * (S::of(1.0 / 12.0) + d2 * (S::of(1.0 / 30.0) + d2 * S::of(1.0 / 56.0))));
    }
    half * ((one + delta) * delta.ln_1p() + (one - delta) * (-delta).ln_1p())
}

fn d_unchecked<S: Scalar>(p: S, q: S) -> S {
    let half = S::of(0.5);
    let m = (p + q) * half;
    (half * xlogx(p) + half * xlogx(q) - xlogx(m)).max(S::zero())
}

/// `d(p, q) = ½ p log p + ½ q log q - m log m` with `m = (p + q)/2`.
pub fn d_scalar<S: Scalar>(p: S, q: S) -> Result<S> {
    if p < S::zero() || q < S::zero() {
        return Err(Error::InvalidArgument(format!(
            "d(p, q) needs nonnegative inputs, got ({p:?}, {q:?})"
        )));
    }
    Ok(d_unchecked(p, q))
}

/// The same quantity through `((p+q)/2) f((p-q)/(p+q))`.
pub fn d_scalar_via_f<S: Scalar>(p: S, q: S) -> Result<S> {
    if p < S::zero() || q < S::zero() {
        return Err(Error::InvalidArgument("negative input".into()));
    }
    let s = p + q;
    if s == S::zero() {
        return Ok(S::zero());
    }
    Ok(s * S::of(0.5) * f_delta((p - q) / s))
}

/// `d(p, q) = Σ_i d(p_i, q_i)` over a common index set.
pub fn d_dist<S: Scalar>(p: &[S], q: &[S]) -> Result<S> {
    if p.len() != q.len() {
        return Err(Error::SizeMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if p.iter().chain(q).any(|&x| x < S::zero()) {
        return Err(Error::InvalidArgument("negative probability".into()));
    }
    Ok(compensated_sum(
        p.iter().zip(q).map(|(&a, &b)| d_unchecked(a, b)),
    ))
}

/// Per-position entropy: `values[k]` is the expected relative entropy of the
/// card at position `k` given the cards at positions `k+1..n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionEntropyProfile<S> {
    pub n: usize,
    pub values: Vec<S>,
}

impl<S: Scalar> PositionEntropyProfile<S> {
    pub fn total(&self) -> S {
        compensated_sum(self.values.iter().copied())
    }
}

/// One suffix group: mass and the (unnormalized) law of the card at the
/// conditioning position, indexed by card.
pub(crate) struct ConditionalGroup<S> {
    pub mass: S,
    pub card_mass: Vec<S>,
    /// Cards still unplaced (those at positions `0..=k`).
    pub remaining: Vec<usize>,
}

pub(crate) fn conditional_groups<S: Scalar>(
    p: &SnDistribution<S>,
    k: usize,
) -> Vec<ConditionalGroup<S>> {
    let n = p.n;
    let t = table(n);
    let plan = &t.suffix_plans()[k];
    let mut out = Vec::with_capacity(plan.starts.len() - 1);
    for g in plan.starts.windows(2) {
        let (a, b) = (g[0] as usize, g[1] as usize);
        let mut card_mass = vec![CompensatedSum::new(); n];
        let mut present = vec![false; n];
        for idx in a..b {
            let c = plan.card[idx] as usize;
            present[c] = true;
            card_mass[c].add(p.probs[plan.order[idx] as usize]);
        }
        let card_mass: Vec<S> = card_mass.iter().map(|s| s.total()).collect();
        let mass = compensated_sum(card_mass.iter().copied());
        let remaining = (0..n).filter(|&c| present[c]).collect();
        out.push(ConditionalGroup {
            mass,
            card_mass,
            remaining,
        });
    }
    out
}

pub fn position_entropy<S: Scalar>(p: &SnDistribution<S>) -> PositionEntropyProfile<S> {
    let n = p.n;
    let values = (0..n)
        .map(|k| {
            let slots = S::of((k + 1) as f64);
            let mut acc = CompensatedSum::new();
            for g in conditional_groups(p, k) {
                if g.mass < S::of(NEGLIGIBLE_MASS) {
                    continue;
                }
                for &c in &g.remaining {
                    let pc = g.card_mass[c];
                    if pc > S::zero() {
                        acc.add(pc * (slots * pc / g.mass).ln());
                    }
                }
            }
            acc.total().max(S::zero())
        })
        .collect();
    PositionEntropyProfile { n, values }
}

/// `true` iff `ent ≤ 1/8`.
///
/// By Pinsker, `ENT ≤ 1/8` bounds the half-L1 distance `½ Σ|p - U|` by ¼,
/// i.e. the L1 sum by ½.
pub fn entropy_certifies_mixed<S: Scalar>(ent: S) -> bool {
    ent <= S::of(0.125)
}

/// Pinsker: `Σ |p - U| ≤ sqrt(2 ENT(p))`.
pub fn l1_bound_from_entropy<S: Scalar>(ent: S) -> S {
    (S::of(2.0) * ent.max(S::zero())).sqrt()
}

/// `g(x) = x log x - (x - 1)`.
fn g_excess<S: Scalar>(x: S) -> S {
    let h = x - S::one();
    if h.abs() < S::of(1e-2) {
        // Σ_{k≥2} (-1)^k h^k / (k(k-1))
        let mut term = h * h;
        let mut acc = S::zero();
        for k in 2..=12 {
            let kf = S::of(k as f64);
            let sign = if k % 2 == 0 { S::one() } else { -S::one() };
            acc = acc + sign * term / (kf * (kf - S::one()));
            term = term * h;
        }
        return acc;
    }
    xlogx(x) - h
}

/// `R(x) = g(x) / [((x+1)/2) f((x-1)/(x+1))]`, with `R(1) = 4`.
pub fn dent_ratio<S: Scalar>(x: S) -> S {
    let one = S::one();
    if x == one {
        return S::of(4.0);
    }
    let denom = (x + one) * S::of(0.5) * f_delta((x - one) / (x + one));
    g_excess(x) / denom
}

/// Result of scanning `R` over `[0, v_size]`.
#[derive(Debug, Clone, Serialize)]
pub struct DentScan {
    pub v_size: usize,
    pub grid: usize,
    pub max_on_0_2: f64,
    pub argmax_on_0_2: f64,
    pub max_overall: f64,
    pub argmax_overall: f64,
    /// `2 log v / f(1/3)`, the closed-form ceiling for `x ∈ [2, v]`.
    pub tail_bound: f64,
    pub max_on_2_v: f64,
    /// `log v / max R`: the constant the scan certifies for this `v`.
    pub implied_c: f64,
    /// `min(log v / max_{[0,2]} R, f(1/3)/2)`: constant from the piecewise argument.
    pub proof_c: f64,
}

pub fn dent_ratio_scan(v_size: usize, grid: usize) -> Result<DentScan> {
    if v_size < 2 {
        return Err(Error::InvalidArgument("v_size must be at least 2".into()));
    }
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()));
    }
    let v = v_size as f64;
    let mut best02 = (f64::NEG_INFINITY, 0.0);
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut best2v = f64::NEG_INFINITY;
    for i in 0..=grid {
        let x = v * i as f64 / grid as f64;
        let r = dent_ratio(x);
        if r > best.0 {
            best = (r, x);
        }
        if x <= 2.0 && r > best02.0 {
            best02 = (r, x);
        }
        if x >= 2.0 && r > best2v {
            best2v = r;
        }
    }
    // the [0, 2] maximum must also see x = 1 and x = 2 exactly
    for x in [1.0, 2.0_f64.min(v)] {
        let r = dent_ratio(x);
        if r > best02.0 {
            best02 = (r, x);
        }
        if r > best.0 {
            best = (r, x);
        }
    }
    let log_v = v.ln();
    let f_third = f_delta(1.0 / 3.0);
    Ok(DentScan {
        v_size,
        grid,
        max_on_0_2: best02.0,
        argmax_on_0_2: best02.1,
        max_overall: best.0,
        argmax_overall: best.1,
        tail_bound: 2.0 * log_v / f_third,
        max_on_2_v: best2v,
        implied_c: log_v / best.0,
        proof_c: (log_v / best02.0).min(f_third / 2.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Exp1;

    fn random_probs(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
        let sparse = rng.random_bool(0.3);
        let raw: Vec<f64> = (0..len)
            .map(|_| {
                if sparse && rng.random_bool(0.7) {
                    0.0
                } else {
                    rng.sample::<f64, _>(Exp1)
                }
            })
            .collect();
        let mut raw = raw;
        if raw.iter().all(|&x| x == 0.0) {
            raw[0] = 1.0;
        }
        let s: f64 = raw.iter().sum();
        raw.iter().map(|x| x / s).collect()
    }

    fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> SnDistribution<f64> {
        let size = factorial(n).unwrap() as usize;
        let p = random_probs(rng, size);
        let s: f64 = compensated_sum(p.iter().copied());
        SnDistribution::new(n, p.iter().map(|x| x / s).collect()).unwrap()
    }

    #[test]
    fn validation_rejects_bad_input() {
        assert!(SnDistribution::new(2, vec![0.5, 0.4]).is_err());
        assert!(SnDistribution::new(2, vec![1.5, -0.5]).is_err());
        assert!(SnDistribution::new(3, vec![0.5, 0.5]).is_err());
        assert!(matches!(
            SnDistribution::<f64>::uniform(30),
            Err(Error::ExactCapExceeded { .. })
        ));
    }

    #[test]
    fn relative_entropy_examples() {
        let u = SnDistribution::<f64>::uniform(4).unwrap();
        assert_abs_diff_eq!(relative_entropy(&u), 0.0, epsilon = 1e-14);
        let pm = SnDistribution::<f64>::point_mass(&Permutation::identity(4)).unwrap();
        assert_abs_diff_eq!(relative_entropy(&pm), 24f64.ln(), epsilon = 1e-14);
        let p = SnDistribution::new(2, vec![0.75, 0.25]).unwrap();
        let want = 0.75 * (1.5f64).ln() + 0.25 * (0.5f64).ln();
        assert_abs_diff_eq!(relative_entropy(&p), want, epsilon = 1e-15);
    }

    #[test]
    fn tv_examples() {
        let pm = SnDistribution::<f64>::point_mass(&Permutation::identity(2)).unwrap();
        let u = SnDistribution::<f64>::uniform(2).unwrap();
        assert_abs_diff_eq!(tv_distance(&pm, &u).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(tv_distance(&pm, &pm).unwrap(), 0.0);
        assert_abs_diff_eq!(tv_to_uniform(&pm), 1.0, epsilon = 1e-15);
        let u3 = SnDistribution::<f64>::uniform(3).unwrap();
        assert!(tv_distance(&pm, &u3).is_err());
    }

    #[test]
    fn pinsker_bound_holds_on_l1_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = SnDistribution::<f64>::uniform(4).unwrap();
        for _ in 0..300 {
            let p = random_dist(&mut rng, 4);
            let tv = tv_distance(&p, &u).unwrap();
            assert!(tv <= l1_bound_from_entropy(relative_entropy(&p)) + 1e-12);
            assert!(0.5 * tv <= (0.5 * relative_entropy(&p)).sqrt() + 1e-12);
        }
    }

    #[test]
    fn half_entropy_root_does_not_bound_full_l1() {
        // sqrt(ENT/2) only bounds the half-L1 distance: a point mass on S_2
        // has Σ|p - U| = 1 but sqrt(log(2)/2) ≈ 0.589.
        let pm = SnDistribution::<f64>::point_mass(&Permutation::identity(2)).unwrap();
        let ent = relative_entropy(&pm);
        assert!(tv_to_uniform(&pm) > (0.5 * ent).sqrt());
        assert!(tv_to_uniform(&pm) <= l1_bound_from_entropy(ent));
    }

    #[test]
    fn d_scalar_examples() {
        for x in [0.0, 0.1, 1.0, 7.5] {
            assert_eq!(d_scalar(x, x).unwrap(), 0.0);
        }
        assert_abs_diff_eq!(
            d_scalar(1.0, 0.0).unwrap(),
            0.5 * 2f64.ln(),
            epsilon = 1e-15
        );
        assert!(d_scalar(-0.1, 0.2).is_err());
    }

    #[test]
    fn d_scalar_dual_formula_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..2000 {
            let p: f64 = rng.random();
            let q: f64 = if rng.random_bool(0.1) {
                0.0
            } else {
                rng.random()
            };
            let a = d_scalar(p, q).unwrap();
            let b = d_scalar_via_f(p, q).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            assert!(a >= 0.0);
        }
    }

    #[test]
    fn d_is_average_entropy_minus_entropy_of_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let p = random_probs(&mut rng, 24);
            let q = random_probs(&mut rng, 24);
            let mid: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
            let rhs = 0.5 * relative_entropy_of(&p).unwrap()
                + 0.5 * relative_entropy_of(&q).unwrap()
                - relative_entropy_of(&mid).unwrap();
            assert_abs_diff_eq!(d_dist(&p, &q).unwrap(), rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn d_dist_examples() {
        let p = vec![0.2, 0.3, 0.5];
        assert_eq!(d_dist(&p, &p).unwrap(), 0.0);
        let a = vec![1.0, 0.0, 0.0];
        let b = vec![0.0, 1.0, 0.0];
        assert_abs_diff_eq!(d_dist(&a, &b).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert!(d_dist(&a, &p[..2]).is_err());
    }

    #[test]
    fn projection_never_increases_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..200 {
            let p = random_probs(&mut rng, 24);
            let q = random_probs(&mut rng, 24);
            let g: Vec<usize> = (0..24).map(|_| rng.random_range(0..5)).collect();
            let mut pp = vec![0.0; 5];
            let mut qq = vec![0.0; 5];
            for i in 0..24 {
                pp[g[i]] += p[i];
                qq[g[i]] += q[i];
            }
            assert!(d_dist(&p, &q).unwrap() >= d_dist(&pp, &qq).unwrap() - 1e-12);
        }
    }

    #[test]
    fn f_properties() {
        assert_eq!(f_delta(0.0_f64), 0.0);
        assert_abs_diff_eq!(f_delta(1.0_f64), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(f_delta(-1.0_f64), 2f64.ln(), epsilon = 1e-15);
        let h = 1e-3;
        let mut x = -1.0 + h;
        while x < 1.0 - h {
            let second = (f_delta(x + h) - 2.0 * f_delta(x) + f_delta(x - h)) / (h * h);
            assert!(second >= -1e-9, "f'' < 0 at {x}");
            x += 0.01;
        }
        // series branch joins the closed form smoothly
        let a = f_delta(0.000_999_9_f64);
        let b = f_delta(0.001_000_1_f64);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn position_entropy_examples() {
        let u = SnDistribution::<f64>::uniform(4).unwrap();
        assert!(position_entropy(&u).values.iter().all(|&v| v.abs() < 1e-14));
        let pm = SnDistribution::<f64>::point_mass(&Permutation::identity(3)).unwrap();
        let prof = position_entropy(&pm);
        for k in 0..3 {
            assert_abs_diff_eq!(prof.values[k], ((k + 1) as f64).ln(), epsilon = 1e-14);
        }
        assert_abs_diff_eq!(prof.total(), 6f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn chain_rule_on_random_s5() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let p = random_dist(&mut rng, 5);
            let prof = position_entropy(&p);
            assert!(prof.values.iter().all(|&v| v >= 0.0));
            assert!((prof.total() - relative_entropy(&p)).abs() <= 1e-10);
        }
    }

    #[test]
    fn entropy_invariant_under_fixed_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sigmas: Vec<Permutation> = crate::perm::all_permutations(4).unwrap().collect();
        for _ in 0..20 {
            let p = random_dist(&mut rng, 4);
            let e = relative_entropy(&p);
            for s in &sigmas {
                let q = p.right_multiply(s).unwrap();
                assert_abs_diff_eq!(relative_entropy(&q), e, epsilon = 1e-12);
            }
            // a random collision step never raises entropy
            for i in 0..4 {
                for j in 0..4 {
                    let q = p.after_collision(i, j).unwrap();
                    assert!(relative_entropy(&q) <= e + 1e-12);
                }
            }
        }
    }

    #[test]
    fn certifies_mixed_threshold() {
        assert!(entropy_certifies_mixed(0.0_f64));
        assert!(entropy_certifies_mixed(0.125_f64));
        assert!(!entropy_certifies_mixed(0.2_f64));
    }

    #[test]
    fn dent_ratio_special_points() {
        assert_abs_diff_eq!(dent_ratio(0.0_f64), 2.0 / 2f64.ln(), epsilon = 1e-12);
        assert_eq!(dent_ratio(1.0_f64), 4.0);
        // continuity through the removable singularity
        assert_abs_diff_eq!(dent_ratio(1.0 + 1e-6_f64), 4.0, epsilon = 1e-5);
        assert_abs_diff_eq!(dent_ratio(1.0 - 1e-6_f64), 4.0, epsilon = 1e-5);
        assert_abs_diff_eq!(
            dent_ratio(1.02_f64),
            dent_ratio(1.0099999_f64),
            epsilon = 1e-2
        );
    }

    #[test]
    fn dent_scan_tail_bound() {
        for v in [2usize, 10, 100, 10_000] {
            let scan = dent_ratio_scan(v, 20_000).unwrap();
            assert!(scan.max_on_2_v <= scan.tail_bound || v == 2);
            assert!(scan.implied_c > 0.0);
            assert!(scan.max_on_0_2 >= 4.0 - 1e-12);
        }
        assert!(dent_ratio_scan(1, 10).is_err());
    }

    #[test]
    fn f32_path_agrees_with_f64() {
        let p32 = SnDistribution::<f32>::new(2, vec![0.75, 0.25]).unwrap();
        let p64 = SnDistribution::<f64>::new(2, vec![0.75, 0.25]).unwrap();
        assert!((relative_entropy(&p32) as f64 - relative_entropy(&p64)).abs() < 1e-6);
        assert!(
            (d_scalar(0.3_f32, 0.6).unwrap() as f64 - d_scalar(0.3, 0.6).unwrap()).abs() < 1e-6
        );
    }

    #[test]
    fn card_position_law_of_point_mass() {
        let perm = Permutation::from_vec(vec![2, 0, 3, 1]).unwrap();
        let pm = SnDistribution::<f64>::point_mass(&perm).unwrap();
        let law = pm.card_position_law(0).unwrap();
        assert_eq!(law, vec![0.0, 0.0, 1.0, 0.0]);
    }
}
