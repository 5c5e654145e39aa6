use matchscore::*;
use proptest::prelude::*;

fn small(seed: u64) -> EstimationConfig {
    EstimationConfig {
        runs: 6,
        population: 60,
        max_generations: 40,
        seed,
        ..EstimationConfig::default()
    }
}

fn market(n: usize, sd: f64, seed: u64) -> (Market, MatchList) {
    let spec = SyntheticSpec {
        shock_sd: sd,
        ..SyntheticSpec::new(n, ParamVector::new(1.0, 5.0, -2.0), seed)
    };
    generate_market(&spec).unwrap()
}

#[test]
fn de_is_deterministic_per_seed() {
    let (m, ml) = market(12, 0.3, 1);
    let a = maximize_score_de(&m, &ml, &small(9)).unwrap();
    let b = maximize_score_de(&m, &ml, &small(9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fit_report_rescoring_matches() {
    let (m, ml) = market(10, 0.0, 3);
    let set = maximize_score_de(&m, &ml, &small(1)).unwrap();
    let fit = fit_report(&m, &ml, &set).unwrap();
    assert_eq!(fit.max_score, set.max_score);
    assert_eq!(fit.n_matches, ml.len());
    for beta in &set.maximizers {
        assert_eq!(score(&m, &ml, beta).unwrap(), set.max_score);
    }
    assert!(set.maximizers.iter().all(|b| b.beta1 == 1.0));
}

#[test]
fn noisy_markets_still_agree_with_grid() {
    for seed in 0..6 {
        let (m, ml) = market(12, 1.0, 40 + seed);
        let de = maximize_score_de(
            &m,
            &ml,
            &EstimationConfig {
                runs: 10,
                population: 100,
                ..small(seed)
            },
        )
        .unwrap();
        let grid = maximize_score_grid(&m, &ml, [(-10.0, 10.0); 2], 0.1).unwrap();
        assert!(
            de.max_score >= grid.max_score,
            "seed {seed}: DE {} < grid {}",
            de.max_score,
            grid.max_score
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn match_order_does_not_matter(seed in any::<u64>(), rot in 0usize..20) {
        let (m, ml) = market(10, 0.4, seed);
        prop_assume!(ml.len() >= 2);
        let mut pairs = ml.pairs().to_vec();
        let k = rot % pairs.len();
        pairs.rotate_left(k);
        pairs.reverse();
        let shuffled = MatchList::new(pairs).unwrap();
        let a = maximize_score_grid(&m, &ml, [(-5.0, 5.0); 2], 0.25).unwrap();
        let b = maximize_score_grid(&m, &shuffled, [(-5.0, 5.0); 2], 0.25).unwrap();
        prop_assert_eq!(a.max_score, b.max_score);
        prop_assert_eq!(a.bounds, b.bounds);
    }

    #[test]
    fn every_maximizer_lies_in_bounds(seed in any::<u64>()) {
        let (m, ml) = market(8, 0.5, seed);
        prop_assume!(ml.len() >= 2);
        let cfg = EstimationConfig { bounds: [(-3.0, 2.0), (-1.0, 4.0)], runs: 3, population: 30, max_generations: 20, seed, ..EstimationConfig::default() };
        let set = maximize_score_de(&m, &ml, &cfg).unwrap();
        for b in &set.maximizers {
            prop_assert!((-3.0..=2.0).contains(&b.beta2) && (-1.0..=4.0).contains(&b.beta3));
        }
        prop_assert!(set.max_score <= set.n_matches as u64 * (set.n_matches as u64 - 1) / 2);
    }
}
