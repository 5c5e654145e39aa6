// Write a synthetic market as CSV files, read it back, and score it.
use matchscore::ingest::{load_regime, write_fixture, COORDS_FILE, MERGERS_FILE, PANEL_FILE};
use matchscore::synthetic::generate;
use matchscore::{percent_correct, ParamVector, SyntheticSpec};

fn main() -> matchscore::Result<()> {
    let dir = std::env::temp_dir().join("matchscore-fixture");
    let fx = generate(&SyntheticSpec::new(10, ParamVector::new(1.0, 5.0, -2.0), 1))?;
    write_fixture(&dir, &fx.market, &fx.matches, &fx.coords, 2000)?;
    println!("wrote fixture to {}", dir.display());

    let data = load_regime(
        &dir.join(MERGERS_FILE),
        &dir.join(PANEL_FILE),
        &dir.join(COORDS_FILE),
        "2000-2000",
    )?;
    println!(
        "regime {}: {} agents per side, {} matches",
        data.market.regime(),
        data.market.n(),
        data.matches.len()
    );
    for n in &data.diagnostics.notices {
        println!("note: {n:?}");
    }
    let pc = percent_correct(
        &data.market,
        &data.matches,
        &ParamVector::new(1.0, 5.0, -2.0),
    )?;
    println!("percent correct at the true parameters: {pc:.3}");
    Ok(())
}
