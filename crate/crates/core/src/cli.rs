//! `matchscore` command line: `estimate`, `counterfactual` and `synthetic`.
//!
//! Every command writes a JSON result document carrying a run manifest and
//! prints a text table to standard output. Exit codes: 0 success, 1 input or
//! validation failure, 2 numerical failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::counterfactual::{
    render_counterfactual_table, simulate, CounterfactualConfig, CounterfactualStats,
};
use crate::error::{Error, Result};
use crate::estimator::{
    fit_report, maximize_score_de, maximize_score_grid, render_estimate_table, EstimationConfig,
    FitReport, IdentifiedSet,
};
use crate::ingest::{self, Diagnostic, COORDS_FILE, MERGERS_FILE, PANEL_FILE};
use crate::score::{score, ParamVector};
use crate::synthetic::{generate, recovery_experiment, RecoverySummary, SyntheticSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "matchscore",
    version,
    about = "Matching maximum score estimation and merger counterfactuals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate (beta2, beta3) with beta1 = 1 and report identified-set brackets.
    Estimate(EstimateArgs),
    /// Simulate equilibria with same-country mergers prohibited.
    Counterfactual(CounterfactualArgs),
    /// Generate synthetic fixtures and run a parameter recovery experiment.
    Synthetic(SyntheticArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub mergers: PathBuf,
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long)]
    pub coords: PathBuf,
    /// Year range such as 1991-2005.
    #[arg(long)]
    pub regime: String,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, default_value_t = 1000)]
    pub population: usize,
    #[arg(long, default_value_t = 100)]
    pub generations: usize,
    /// Search interval for beta2 and beta3, as LO,HI.
    #[arg(long, default_value = "-10,10", allow_hyphen_values = true)]
    pub bounds: String,
    /// Use the exhaustive grid with this step instead of DE.
    #[arg(long)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value = "estimate.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CounterfactualArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Estimate result document to take beta from (upper bounds by default).
    #[arg(long, conflicts_with = "beta")]
    pub beta_from: Option<PathBuf>,
    /// Explicit beta as B1,B2,B3.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Take the lower instead of the upper bracket ends from --beta-from.
    #[arg(long)]
    pub use_lower_bounds: bool,
    #[arg(long, default_value_t = 100)]
    pub draws: usize,
    #[arg(long, default_value_t = 1.0)]
    pub shock_sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Allow same-country mergers.
    #[arg(long)]
    pub no_prohibit: bool,
    /// Remove agents of observed same-country matches from the market.
    #[arg(long)]
    pub drop_same_country_agents: bool,
    #[arg(long, default_value = "counterfactual.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SyntheticArgs {
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// True parameters as B1,B2,B3.
    #[arg(long, default_value = "1,5,-2", allow_hyphen_values = true)]
    pub beta: String,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.0)]
    pub shock_sd: f64,
    #[arg(long, default_value_t = 5)]
    pub countries: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 100)]
    pub population: usize,
    #[arg(long, default_value_t = 50)]
    pub generations: usize,
    #[arg(long, default_value = "-10,10", allow_hyphen_values = true)]
    pub bounds: String,
    /// Also check the first fixture against the exhaustive grid at this step.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Directory for fixture CSVs and the summary document.
    #[arg(long, default_value = "synthetic")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub input_digests: BTreeMap<String, String>,
    pub seed: u64,
    pub tool_version: String,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument<T> {
    pub schema_version: u32,
    pub manifest: RunManifest,
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub regime: String,
    pub method: String,
    pub fit: FitReport,
    pub lower: ParamVector,
    pub upper: ParamVector,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualResult {
    pub beta: ParamVector,
    pub beta_source: String,
    pub prohibit_same_country: bool,
    pub drop_same_country_agents: bool,
    pub stats: CounterfactualStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    pub grid_step: f64,
    pub truth_score: u64,
    pub grid_max_score: u64,
    pub truth_is_maximal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticResult {
    pub fixture_dir: String,
    pub fixture_regime: String,
    pub fixture_matches: usize,
    pub recovery: RecoverySummary,
    pub grid_check: Option<GridCheck>,
}

pub fn parse_list(s: &str, len: usize, what: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::validation(format!("{what}: cannot parse {s:?}")))?;
    if vals.len() != len || vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation(format!(
            "{what}: expected {len} finite comma-separated numbers, got {s:?}"
        )));
    }
    Ok(vals)
}

fn parse_beta(s: &str) -> Result<ParamVector> {
    let v = parse_list(s, 3, "--beta")?;
    Ok(ParamVector::new(v[0], v[1], v[2]))
}

fn digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn digests(input: &InputArgs) -> Result<BTreeMap<String, String>> {
    let mut m = BTreeMap::new();
    m.insert("mergers".into(), digest(&input.mergers)?);
    m.insert("panel".into(), digest(&input.panel)?);
    m.insert("coords".into(), digest(&input.coords)?);
    Ok(m)
}

fn write_document<T: Serialize>(path: &Path, doc: &ResultDocument<T>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_document<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<ResultDocument<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: ResultDocument<T> = serde_json::from_str(&text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::validation(format!(
            "{}: schema version {} unsupported (expected {SCHEMA_VERSION})",
            path.display(),
            doc.schema_version
        )));
    }
    Ok(doc)
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn search_config(s: &SearchArgs) -> Result<EstimationConfig> {
    let b = parse_list(&s.bounds, 2, "--bounds")?;
    let cfg = EstimationConfig {
        bounds: [(b[0], b[1]); 2],
        runs: s.runs,
        population: s.population,
        max_generations: s.generations,
        seed: s.seed,
        grid_step: s.grid_step,
        ..EstimationConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn identified_set(
    market: &crate::Market,
    matches: &crate::MatchList,
    cfg: &EstimationConfig,
) -> Result<IdentifiedSet> {
    match cfg.grid_step {
        Some(step) => maximize_score_grid(market, matches, cfg.bounds, step),
        None => maximize_score_de(market, matches, cfg),
    }
}

pub fn cmd_estimate(
    args: &EstimateArgs,
    out: &mut dyn Write,
) -> Result<ResultDocument<EstimateResult>> {
    let t0 = Instant::now();
    let cfg = search_config(&args.search)?;
    let input_digests = digests(&args.input)?;
    let data = ingest::load_regime(
        &args.input.mergers,
        &args.input.panel,
        &args.input.coords,
        &args.input.regime,
    )?;
    let t_load = ms(t0);

    let t1 = Instant::now();
    let set = identified_set(&data.market, &data.matches, &cfg)?;
    let fit = fit_report(&data.market, &data.matches, &set)?;
    let t_search = ms(t1);

    let doc = ResultDocument {
        schema_version: SCHEMA_VERSION,
        manifest: RunManifest {
            command: "estimate".into(),
            config: serde_json::json!({ "regime": args.input.regime, "estimation": cfg }),
            input_digests,
            seed: cfg.seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            timings_ms: BTreeMap::from([("load".into(), t_load), ("search".into(), t_search)]),
        },
        result: EstimateResult {
            regime: data.market.regime().to_string(),
            method: if cfg.grid_step.is_some() {
                "grid"
            } else {
                "de"
            }
            .into(),
            lower: set.lower(),
            upper: set.upper(),
            fit,
            diagnostics: data.diagnostics.notices,
        },
    };
    write_document(&args.out, &doc)?;
    write!(
        out,
        "{}",
        render_estimate_table(std::slice::from_ref(&doc.result.fit))
    )
    .map_err(|e| Error::io("<stdout>", e))?;
    Ok(doc)
}

pub fn cmd_counterfactual(
    args: &CounterfactualArgs,
    out: &mut dyn Write,
) -> Result<ResultDocument<CounterfactualResult>> {
    let t0 = Instant::now();
    let mut input_digests = digests(&args.input)?;
    let (beta, beta_source) = match (&args.beta, &args.beta_from) {
        (Some(b), None) => (parse_beta(b)?, "explicit".to_string()),
        (None, Some(path)) => {
            let doc: ResultDocument<EstimateResult> = read_document(path)?;
            input_digests.insert("beta_from".into(), digest(path)?);
            if args.use_lower_bounds {
                (doc.result.lower, "estimate lower bounds".to_string())
            } else {
                (doc.result.upper, "estimate upper bounds".to_string())
            }
        }
        _ => {
            return Err(Error::validation(
                "exactly one of --beta or --beta-from is required",
            ))
        }
    };
    let data = ingest::load_regime(
        &args.input.mergers,
        &args.input.panel,
        &args.input.coords,
        &args.input.regime,
    )?;
    let cfg = CounterfactualConfig {
        beta,
        draws: args.draws,
        shock_sd: args.shock_sd,
        seed: args.seed,
        prohibit_same_country: !args.no_prohibit,
        drop_same_country_agents: args.drop_same_country_agents,
    };
    let t_load = ms(t0);
    let t1 = Instant::now();
    let stats = simulate(&data.market, &data.matches, &cfg)?;
    let t_sim = ms(t1);

    let doc = ResultDocument {
        schema_version: SCHEMA_VERSION,
        manifest: RunManifest {
            command: "counterfactual".into(),
            config: serde_json::json!({ "regime": args.input.regime, "counterfactual": cfg }),
            input_digests,
            seed: cfg.seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            timings_ms: BTreeMap::from([("load".into(), t_load), ("simulate".into(), t_sim)]),
        },
        result: CounterfactualResult {
            beta,
            beta_source,
            prohibit_same_country: cfg.prohibit_same_country,
            drop_same_country_agents: cfg.drop_same_country_agents,
            stats,
        },
    };
    write_document(&args.out, &doc)?;
    write!(
        out,
        "{}",
        render_counterfactual_table(std::slice::from_ref(&doc.result.stats))
    )
    .map_err(|e| Error::io("<stdout>", e))?;
    Ok(doc)
}

pub const SUMMARY_FILE: &str = "recovery.json";

pub fn cmd_synthetic(
    args: &SyntheticArgs,
    out: &mut dyn Write,
) -> Result<ResultDocument<SyntheticResult>> {
    let t0 = Instant::now();
    let beta_true = parse_beta(&args.beta)?;
    let b = parse_list(&args.bounds, 2, "--bounds")?;
    let spec = SyntheticSpec {
        shock_sd: args.shock_sd,
        country_count: args.countries,
        ..SyntheticSpec::new(args.n, beta_true, args.seed)
    };
    let cfg = EstimationConfig {
        bounds: [(b[0], b[1]); 2],
        runs: args.runs,
        population: args.population,
        max_generations: args.generations,
        seed: args.seed,
        ..EstimationConfig::default()
    };
    cfg.validate()?;

    let fixture = generate(&spec)?;
    ingest::write_fixture(
        &args.out,
        &fixture.market,
        &fixture.matches,
        &fixture.coords,
        spec.year,
    )?;
    let grid_check = match args.grid_step {
        Some(step) if fixture.matches.len() >= 2 => {
            let grid = maximize_score_grid(&fixture.market, &fixture.matches, cfg.bounds, step)?;
            let truth_score = score(&fixture.market, &fixture.matches, &beta_true)?;
            Some(GridCheck {
                grid_step: step,
                truth_score,
                grid_max_score: grid.max_score,
                truth_is_maximal: truth_score >= grid.max_score,
            })
        }
        _ => None,
    };
    let recovery = recovery_experiment(&spec, args.trials, &cfg)?;

    let mut input_digests = BTreeMap::new();
    for f in [MERGERS_FILE, PANEL_FILE, COORDS_FILE] {
        input_digests.insert(f.to_string(), digest(&args.out.join(f))?);
    }
    let doc = ResultDocument {
        schema_version: SCHEMA_VERSION,
        manifest: RunManifest {
            command: "synthetic".into(),
            config: serde_json::json!({ "spec": spec, "trials": args.trials, "estimation": cfg, "grid_step": args.grid_step }),
            input_digests,
            seed: args.seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            timings_ms: BTreeMap::from([("total".into(), ms(t0))]),
        },
        result: SyntheticResult {
            fixture_dir: args.out.display().to_string(),
            fixture_regime: format!("{}-{}", spec.year, spec.year),
            fixture_matches: fixture.matches.len(),
            recovery,
            grid_check,
        },
    };
    write_document(&args.out.join(SUMMARY_FILE), &doc)?;

    let r = &doc.result;
    let mut text = format!(
        "fixture: {} ({} buyers, {} matched pairs, regime {})\n",
        r.fixture_dir, spec.n, r.fixture_matches, r.fixture_regime
    );
    text.push_str(&format!("trials: {}\n", r.recovery.trials));
    text.push_str(&format!(
        "sign recovery fraction: {:.3}\n",
        r.recovery.sign_recovery_fraction
    ));
    text.push_str(&format!(
        "median bracket width: beta2 {:.3}, beta3 {:.3}\n",
        r.recovery.median_width_beta2, r.recovery.median_width_beta3
    ));
    if let Some(g) = &r.grid_check {
        text.push_str(&format!(
            "grid check (step {}): score at truth {} / grid max {} -> {}\n",
            g.grid_step,
            g.truth_score,
            g.grid_max_score,
            if g.truth_is_maximal {
                "maximal"
            } else {
                "NOT maximal"
            }
        ));
    }
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))?;
    Ok(doc)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, out).map(|_| ()),
        Command::Counterfactual(a) => cmd_counterfactual(a, out).map(|_| ()),
        Command::Synthetic(a) => cmd_synthetic(a, out).map(|_| ()),
    }
}

/// Parse `args` (including the program name) and run. Returns the exit code;
/// errors go to `err`.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 1;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
