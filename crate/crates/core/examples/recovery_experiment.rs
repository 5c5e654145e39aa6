// How often does the estimator recover the signs of (beta2, beta3)?
use matchscore::{recovery_experiment, EstimationConfig, ParamVector, SyntheticSpec};

fn main() -> matchscore::Result<()> {
    let cfg = EstimationConfig {
        runs: 6,
        population: 80,
        max_generations: 40,
        ..EstimationConfig::default()
    };
    for sd in [0.0, 0.5, 2.0] {
        let spec = SyntheticSpec {
            shock_sd: sd,
            ..SyntheticSpec::new(20, ParamVector::new(1.0, 5.0, -2.0), 3)
        };
        let s = recovery_experiment(&spec, 20, &cfg)?;
        println!(
            "shock sd {sd:>3}: signs recovered {:.2}, median width beta2 {:.3} beta3 {:.3}",
            s.sign_recovery_fraction, s.median_width_beta2, s.median_width_beta3
        );
    }
    Ok(())
}
