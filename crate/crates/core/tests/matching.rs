use montemix::matching::*;
use montemix::shuffle::*;
use montemix::Permutation;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn t_law_frequencies_at_m3() {
    let law = thorp_t_law(3);
    assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    let samples = 1_000_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut counts = [0u64; 4];
    for _ in 0..samples {
        counts[sample_t_thorp(3, &mut rng)] += 1;
    }
    for (r, (&c, &p)) in counts.iter().zip(&law).enumerate() {
        let se = (p * (1.0 - p) / samples as f64).sqrt();
        assert!((c as f64 / samples as f64 - p).abs() <= 4.0 * se, "T = {r}");
        if r < 3 {
            assert!(p >= 2f64.powi(r as i32 - 4));
        }
    }
}

fn models(n: usize) -> Vec<ShuffleModel> {
    vec![
        ShuffleModel::thorp(n, Direction::Forward).unwrap(),
        ShuffleModel::thorp(n, Direction::Reverse).unwrap(),
        ShuffleModel::lrev(n, 2, LrevForm::Plain).unwrap(),
        ShuffleModel::lrev(n, 3, LrevForm::Monte).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_are_involutions(seed in any::<u64>(), which in 0usize..4, t in 1usize..12, cut_frac in 0.0f64..1.0) {
        let model = models(8)[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, log) = run_with_log(&model, t, &mut rng).unwrap();
        let cut = ((t as f64) * cut_frac) as usize;
        let rec = compute_matches(&log, cut, t).unwrap();
        prop_assert!(rec.is_involution());
    }

    #[test]
    fn matching_ignores_the_starting_arrangement(seed in any::<u64>(), which in 0usize..4, t in 1usize..10) {
        let n = 8;
        let model = models(n)[which];
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let sigma = Permutation::from_vec(perm).unwrap();
        let inv = sigma.invert();

        let (_, base_log) = run_with_log(&model, t, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let (_, moved_log) =
            run_with_log_from(&model, &sigma, t, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(base_log.events.len(), moved_log.events.len());
        for (a, b) in base_log.events.iter().zip(&moved_log.events) {
            let (x, y) = (inv.image(a.cards.0), inv.image(a.cards.1));
            prop_assert_eq!(b.cards, (x.min(y), x.max(y)));
        }
        let cut = t / 2;
        let m0 = compute_matches(&base_log, cut, t).unwrap().matches;
        let m1 = compute_matches(&moved_log, cut, t).unwrap().matches;
        for x in 0..n {
            prop_assert_eq!(m1[inv.image(x)], inv.image(m0[x]));
        }
    }
}

#[test]
fn strict_cut_excludes_step_t() {
    let log = CollisionLog::new(
        4,
        3,
        vec![
            CollisionEvent {
                step: 1,
                cards: (0, 1),
            },
            CollisionEvent {
                step: 2,
                cards: (0, 2),
            },
            CollisionEvent {
                step: 3,
                cards: (1, 2),
            },
        ],
    )
    .unwrap();
    assert_eq!(
        compute_matches(&log, 1, 3).unwrap().matches,
        vec![2, 1, 0, 3]
    );
    assert_eq!(
        compute_matches(&log, 2, 3).unwrap().matches,
        vec![0, 2, 1, 3]
    );
    assert_eq!(
        compute_matches(&log, 0, 3).unwrap().matches,
        vec![1, 0, 2, 3]
    );
}

#[test]
fn reverse_thorp_partners_sit_half_a_deck_apart() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [4, 8, 16, 64, 130] {
        let model = ShuffleModel::thorp(n, Direction::Reverse).unwrap();
        for _ in 0..50 {
            let draw = model.sample_draw(&mut rng);
            let pairs = draw.collisions(n);
            assert_eq!(pairs.len(), n / 2);
            assert!(pairs.iter().all(|&(a, b, _)| b == a + n / 2));
        }
    }
}

#[test]
fn monte_reversal_collision_rate() {
    let steps = 400_000usize;
    for l in [1usize, 2, 4] {
        let model = ShuffleModel::lrev(20, l, LrevForm::Monte).unwrap();
        let (_, log) =
            run_with_log(&model, steps, &mut ChaCha8Rng::seed_from_u64(l as u64)).unwrap();
        let p = l as f64 / (l + 1) as f64;
        let f = log.events.len() as f64 / steps as f64;
        let se = (p * (1.0 - p) / steps as f64).sqrt();
        assert!((f - p).abs() <= 4.0 * se, "L = {l}: {f} vs {p}");
    }
}

#[test]
fn a_uniformity_estimate_is_reproducible_across_workers() {
    let model = ShuffleModel::thorp(8, Direction::Reverse).unwrap();
    let run = |w| {
        estimate_match_probs(
            &model,
            &[2, 3],
            TSampler::Thorp { m: 2 },
            3,
            20_000,
            17,
            w,
            MatchBound::Thorp,
        )
        .unwrap()
        .to_table()
    };
    assert_eq!(run(1), run(4));
}
