// Generate a noiseless market from known parameters and estimate them back
// with differential evolution.
use matchscore::estimator::render_estimate_table;
use matchscore::{
    fit_report, generate_market, maximize_score_de, EstimationConfig, ParamVector, SyntheticSpec,
};

fn main() -> matchscore::Result<()> {
    let truth = ParamVector::new(1.0, 5.0, -2.0);
    let (market, matches) = generate_market(&SyntheticSpec::new(20, truth, 42))?;
    println!("{} buyers, {} observed matches", market.n(), matches.len());

    let cfg = EstimationConfig {
        runs: 20,
        population: 200,
        max_generations: 60,
        seed: 7,
        ..EstimationConfig::default()
    };
    let set = maximize_score_de(&market, &matches, &cfg)?;
    let fit = fit_report(&market, &matches, &set)?;
    print!("{}", render_estimate_table(&[fit]));
    println!("truth: {truth}");
    println!(
        "maximizers stored: {} of {} found",
        set.maximizers.len(),
        set.n_found
    );
    Ok(())
}
