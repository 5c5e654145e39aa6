// Compare the DE search against an exhaustive grid on the same market.
use std::time::Instant;

use matchscore::{
    generate_market, maximize_score_de, maximize_score_grid, EstimationConfig, ParamVector,
    SyntheticSpec,
};

fn main() -> matchscore::Result<()> {
    let spec = SyntheticSpec {
        shock_sd: 0.5,
        ..SyntheticSpec::new(16, ParamVector::new(1.0, 3.0, -1.0), 5)
    };
    let (market, matches) = generate_market(&spec)?;

    let cfg = EstimationConfig {
        runs: 10,
        population: 100,
        max_generations: 50,
        ..EstimationConfig::default()
    };
    let t = Instant::now();
    let de = maximize_score_de(&market, &matches, &cfg)?;
    let t_de = t.elapsed();
    let t = Instant::now();
    let grid = maximize_score_grid(&market, &matches, cfg.bounds, 0.05)?;
    let t_grid = t.elapsed();

    for (name, set, took) in [("de", &de, t_de), ("grid 0.05", &grid, t_grid)] {
        println!(
            "{name:>9}: score {}/{}  beta2 [{:.3},{:.3}]  beta3 [{:.3},{:.3}]  ({took:.2?})",
            set.max_score,
            set.n_matches * (set.n_matches - 1) / 2,
            set.bounds[1].0,
            set.bounds[1].1,
            set.bounds[2].0,
            set.bounds[2].1,
        );
    }
    Ok(())
}
