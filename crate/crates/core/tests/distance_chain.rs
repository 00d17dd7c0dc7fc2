use montemix::distance::*;
use montemix::scalar::Rational;
use montemix::{DistanceKernelF64, DistanceKernelQ, Permutation};

const GRID: [(usize, usize); 9] = [
    (12, 2),
    (12, 3),
    (16, 2),
    (16, 3),
    (16, 4),
    (20, 2),
    (20, 3),
    (20, 4),
    (20, 5),
];

#[test]
fn counting_formula_matches_enumeration() {
    for (n, l) in GRID {
        for a in 1..=n / 2 {
            for u in 0..=n / 2 {
                if u == a {
                    continue;
                }
                assert_eq!(
                    count_n(n, l, a, u).unwrap(),
                    count_n_oracle(n, l, a, u),
                    "n={n} L={l} a={a} u={u}"
                );
            }
        }
    }
}

#[test]
fn counting_formula_holds_for_mirrored_targets() {
    // the kernel also asks for N(a, n - u) with n - u != a
    for (n, l) in GRID {
        for a in 1..=n / 2 {
            for u in 1..n / 2 {
                if u != a && n - u != a {
                    assert_eq!(
                        count_n(n, l, a, n - u).unwrap(),
                        count_n_oracle(n, l, a, n - u)
                    );
                }
            }
        }
    }
}

#[test]
fn closed_form_kernel_matches_brute_force() {
    for (n, l) in [(16, 3), (20, 5), (12, 2)] {
        let a: DistanceKernelF64 = distance_kernel(n, l).unwrap();
        let b: DistanceKernelF64 = distance_kernel_brute(n, l, 0).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-12, "n={n} L={l}");
        assert!(a.rows_stochastic(1e-12));
    }
    let a: DistanceKernelQ = distance_kernel(20, 5).unwrap();
    let b: DistanceKernelQ = distance_kernel_brute(20, 5, 0).unwrap();
    assert_eq!(a.matrix, b.matrix);
    assert!(a
        .matrix
        .iter()
        .all(|r| r.iter().copied().sum::<Rational>() == Rational::from_integer(1)));
}

#[test]
fn brute_kernel_is_rotation_invariant() {
    for (n, l) in [(16, 3), (13, 2)] {
        let base: DistanceKernelQ = distance_kernel_brute(n, l, 0).unwrap();
        for c in 1..n {
            let moved: DistanceKernelQ = distance_kernel_brute(n, l, c).unwrap();
            assert_eq!(base.matrix, moved.matrix, "offset {c}");
        }
    }
}

/// Neighbour set of `card` in the deck whose card-to-position map is `p`.
fn neighbours(p: &Permutation, card: usize) -> [usize; 2] {
    let n = p.n();
    let inv = p.invert();
    let x = p.image(card);
    let mut v = [inv.image((x + n - 1) % n), inv.image((x + 1) % n)];
    v.sort();
    v
}

#[test]
fn absorption_mass_is_cut_probability() {
    for (n, l) in [(16, 3), (20, 4), (20, 5)] {
        let k: DistanceKernelF64 = cut_stopped_kernel(n, l).unwrap();
        let id = Permutation::identity(n);
        for a in 1..=n / 2 {
            let mut cutting = 0;
            for v in 0..n {
                for len in 0..=l {
                    let r = Permutation::reversal(n, v, len).unwrap();
                    if [0, a]
                        .iter()
                        .any(|&c| neighbours(&r, c) != neighbours(&id, c))
                    {
                        cutting += 1;
                    }
                }
            }
            let oracle = cutting as f64 / (n * (l + 1)) as f64;
            let row = &k.matrix[a];
            let absorbed = row[0] + row[row.len() - 1];
            assert!((absorbed - oracle).abs() < 1e-12, "n={n} L={l} a={a}");
            assert!((cut_probability(n, l, a).unwrap() - oracle).abs() < 1e-12);
        }
    }
}

#[test]
fn move_probability_counts_moving_intervals() {
    for (n, l) in GRID {
        // len + 1 intervals of each length cover a card; an even length leaves the centre fixed
        let moving: usize = (1..=l).map(|len| len + 1 - (len % 2 == 0) as usize).sum();
        let expect = moving as f64 / (n * (l + 1)) as f64;
        assert!((move_probability(n, l).unwrap() - expect).abs() < 1e-15);
    }
}

#[test]
fn plain_distance_kernel_is_monotone() {
    for (n, l) in [(16, 3), (20, 4), (20, 5)] {
        let k: DistanceKernelQ = distance_kernel(n, l).unwrap();
        let check = check_monotone(&k);
        assert!(check.monotone, "n={n} L={l}: {:?}", check.first_violation);
    }
}

#[test]
fn cut_stopped_rows_are_stochastic() {
    for (n, l) in [(16, 3), (20, 4), (20, 5)] {
        let k: DistanceKernelF64 = cut_stopped_kernel(n, l).unwrap();
        assert!(k.rows_stochastic(1e-12));
        assert_eq!(
            k.to_table().header.first().map(String::as_str),
            Some("from")
        );
    }
}

#[test]
fn proximity_estimate_replays_and_respects_its_bound() {
    let a = first_cut_proximity_estimate(32, 2, &[3, 6, 12], 5, 40, 20_000, 3, 1).unwrap();
    let b = first_cut_proximity_estimate(32, 2, &[3, 6, 12], 5, 40, 20_000, 3, 4).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert!(a.nonincreasing_within(4.0));
}
