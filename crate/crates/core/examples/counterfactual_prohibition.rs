// Re-solve a market with same-country mergers prohibited and compare the
// simulated matchings with the observed one.
use matchscore::counterfactual::render_counterfactual_table;
use matchscore::{generate_market, simulate, CounterfactualConfig, ParamVector, SyntheticSpec};

fn main() -> matchscore::Result<()> {
    let beta = ParamVector::new(1.0, 5.0, -2.0);
    let spec = SyntheticSpec {
        country_count: 3,
        shock_sd: 1.0,
        ..SyntheticSpec::new(14, beta, 9)
    };
    let (market, matches) = generate_market(&spec)?;
    let same: usize = matches
        .pairs()
        .iter()
        .filter(|&&(b, s)| market.same_country(b, s))
        .count();
    println!(
        "observed: {} matches, {same} within one country",
        matches.len()
    );

    let mut rows = Vec::new();
    for prohibit in [true, false] {
        let cfg = CounterfactualConfig {
            seed: 7,
            prohibit_same_country: prohibit,
            ..CounterfactualConfig::new(beta)
        };
        let stats = simulate(&market, &matches, &cfg)?;
        let worst = stats
            .per_draw
            .iter()
            .map(|d| d.same_country)
            .max()
            .unwrap_or(0);
        println!("prohibit={prohibit}: at most {worst} same-country pairs in a draw");
        rows.push(stats);
    }
    print!("{}", render_counterfactual_table(&rows));
    Ok(())
}
