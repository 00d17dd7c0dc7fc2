use montemix::entropy::*;
use montemix::exact::*;
use montemix::perm::all_permutations;
use montemix::shuffle::*;
use montemix::{Permutation, SnDistributionF64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

fn random_dist(n: usize, rng: &mut ChaCha8Rng) -> SnDistributionF64 {
    let size = (1..=n).product::<usize>();
    let mut w: Vec<f64> = (0..size).map(|_| Exp1.sample(rng)).collect();
    // sparse supports exercise the zero-mass branches
    if rng.random_bool(0.3) {
        for x in w.iter_mut() {
            if rng.random_bool(0.5) {
                *x = 0.0;
            }
        }
        w[0] += 1.0;
    }
    let s: f64 = w.iter().sum();
    SnDistribution::new(n, w.into_iter().map(|x| x / s).collect()).unwrap()
}

fn small_models() -> Vec<ShuffleModel> {
    let mut v = Vec::new();
    for n in [2, 4, 6] {
        v.push(ShuffleModel::thorp(n, Direction::Forward).unwrap());
        v.push(ShuffleModel::thorp(n, Direction::Reverse).unwrap());
    }
    for n in 3..=6 {
        for l in 1..n {
            v.push(ShuffleModel::lrev(n, l, LrevForm::Plain).unwrap());
            v.push(ShuffleModel::lrev(n, l, LrevForm::Monte).unwrap());
        }
    }
    v
}

#[test]
fn trajectories_are_nonincreasing() {
    for model in small_models() {
        let start = SnDistribution::point_mass(&Permutation::identity(model.n())).unwrap();
        let rep = evolve_exact::<f64>(&start, &model, 25).unwrap();
        for w in rep.records.windows(2) {
            assert!(w[1].tv <= w[0].tv + 1e-12, "{model} tv at t = {}", w[1].t);
            assert!(
                w[1].entropy <= w[0].entropy + 1e-12,
                "{model} entropy at t = {}",
                w[1].t
            );
        }
    }
}

#[test]
fn position_entropies_sum_to_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let p = random_dist(5, &mut rng);
        let total: f64 = position_entropy(&p).values.iter().sum();
        assert!((total - relative_entropy(&p)).abs() <= 1e-10);
    }
}

#[test]
fn mixing_time_nonincreasing_in_threshold() {
    for model in small_models().into_iter().filter(|m| m.n() >= 4) {
        let mut last = usize::MAX;
        for th in [0.05, 0.1, 0.25, 0.5, 1.0] {
            let t = mixing_time_exact::<f64>(&model, th, DEFAULT_HORIZON)
                .unwrap()
                .t_mix;
            assert!(t <= last, "{model} threshold {th}");
            last = t;
        }
    }
}

#[test]
fn entropy_certificate_bounds_half_l1_on_trajectories() {
    for model in small_models() {
        let start = SnDistribution::point_mass(&Permutation::identity(model.n())).unwrap();
        for r in evolve_exact::<f64>(&start, &model, 30).unwrap().records {
            if entropy_certifies_mixed(r.entropy) {
                assert!(r.tv / 2.0 <= 0.25 + 1e-9, "{model} t = {}", r.t);
            }
            assert!(
                r.tv <= l1_bound_from_entropy(r.entropy) + 1e-12,
                "{model} t={} tv={} ent={}",
                r.t,
                r.tv,
                r.entropy
            );
        }
    }
}

#[test]
fn warmup_inequality_on_random_measures() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let mu = random_dist(4, &mut rng);
        for j in 0..4 {
            let c = warmup_check(&mu, j).unwrap();
            assert!(c.lhs <= c.rhs + 1e-10, "j = {j}: {} > {}", c.lhs, c.rhs);
        }
    }
}

#[test]
fn entropy_invariant_under_fixed_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let perms: Vec<_> = all_permutations(4).unwrap().collect();
    for _ in 0..50 {
        let p = random_dist(4, &mut rng);
        let sigma = &perms[rng.random_range(0..perms.len())];
        let q = p.right_multiply(sigma).unwrap();
        assert!((relative_entropy(&p) - relative_entropy(&q)).abs() < 1e-12);
    }
}

#[test]
fn collisions_never_raise_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let p = random_dist(4, &mut rng);
        let (i, j) = (rng.random_range(0..4), rng.random_range(0..4));
        if i == j {
            continue;
        }
        let q = p.after_collision(i, j).unwrap();
        assert!(relative_entropy(&q) <= relative_entropy(&p) + 1e-12);
    }
}

#[test]
fn contraction_on_reverse_thorp() {
    for n in [4, 6, 8] {
        let m = ShuffleModel::thorp(n, Direction::Reverse).unwrap();
        let rep = contraction_estimate::<f64>(&m, None, DEFAULT_HORIZON).unwrap();
        assert!(rep.strictly_contracting(), "n = {n}: {}", rep.worst_factor);
        assert!(rep.implied_c > 0.0);
    }
}

#[test]
fn f32_and_f64_agree_on_small_trajectories() {
    let m = ShuffleModel::thorp(4, Direction::Reverse).unwrap();
    let a = evolve_exact::<f64>(
        &SnDistribution::point_mass(&Permutation::identity(4)).unwrap(),
        &m,
        6,
    )
    .unwrap();
    let b = evolve_exact::<f32>(
        &SnDistribution::point_mass(&Permutation::identity(4)).unwrap(),
        &m,
        6,
    )
    .unwrap();
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!((x.tv - y.tv as f64).abs() < 1e-5);
        assert!((x.entropy - y.entropy as f64).abs() < 1e-5);
    }
}
