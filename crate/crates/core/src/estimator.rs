//! Maximization of the matching maximum score objective and construction of
//! the identified set.
//!
//! The objective is an integer-valued, piecewise-constant function of
//! `(beta2, beta3)` with `beta1 = 1`. Differential evolution restarts search
//! the box; every evaluated point that attains the best score is kept. A
//! lattice walk then pushes the extreme maximizers outward along each axis
//! until the score drops or the box edge is reached, so the reported brackets
//! reach the edge of the plateau rather than stopping at the last DE sample.
//! [`maximize_score_grid`] is the exhaustive counterpart used as an oracle.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Market, MatchList};
use crate::rng::{self, Purpose};
use crate::score::{fraction_correct, max_possible_score, InequalitySet, ParamVector};

/// Largest grid `maximize_score_grid` will enumerate.
pub const MAX_GRID_POINTS: u64 = 10_000_000;

/// Points closer than this in every coordinate are the same maximizer.
pub const DEDUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    /// Search interval for `beta2` and `beta3`.
    pub bounds: [(f64, f64); 2],
    /// Independent DE restarts.
    pub runs: usize,
    /// DE population per restart.
    pub population: usize,
    pub max_generations: usize,
    pub seed: u64,
    /// When set, callers use the exhaustive grid instead of DE.
    pub grid_step: Option<f64>,
    /// Differential weight is drawn per generation from this interval.
    pub mutation: (f64, f64),
    pub crossover: f64,
    /// Step of the outward lattice walk around extreme maximizers.
    pub refine_step: f64,
    /// Cap on stored maximizers. Extreme points are always kept.
    pub max_stored: usize,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            bounds: [(-10.0, 10.0); 2],
            runs: 100,
            population: 1000,
            max_generations: 100,
            seed: 0,
            grid_step: None,
            mutation: (0.5, 1.0),
            crossover: 0.9,
            refine_step: 1e-3,
            max_stored: 4096,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::validation(format!("bad search bounds [{lo}, {hi}]")));
            }
        }
        if self.runs == 0 {
            return Err(Error::validation("runs must be at least 1"));
        }
        if self.population < 4 {
            return Err(Error::validation("DE population must be at least 4"));
        }
        if let Some(step) = self.grid_step {
            if !(step.is_finite() && step > 0.0) {
                return Err(Error::validation(format!(
                    "grid step must be positive, got {step}"
                )));
            }
        }
        let (f_lo, f_hi) = self.mutation;
        if !(f_lo > 0.0 && f_lo <= f_hi && f_hi <= 2.0) {
            return Err(Error::validation("mutation interval must lie in (0, 2]"));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(Error::validation("crossover rate must lie in [0, 1]"));
        }
        if self.refine_step.is_nan() || self.refine_step <= 0.0 || self.max_stored == 0 {
            return Err(Error::validation(
                "refine_step and max_stored must be positive",
            ));
        }
        Ok(())
    }
}

/// Set of score maximizers found by a search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiedSet {
    pub maximizers: Vec<ParamVector>,
    pub max_score: u64,
    /// Per-coordinate `(lower, upper)` for `beta1`, `beta2`, `beta3`.
    pub bounds: [(f64, f64); 3],
    pub percent_correct: f64,
    pub n_matches: usize,
    /// Distinct maximizers encountered, including ones not stored.
    pub n_found: usize,
}

impl IdentifiedSet {
    pub fn lower(&self) -> ParamVector {
        ParamVector::new(self.bounds[0].0, self.bounds[1].0, self.bounds[2].0)
    }

    pub fn upper(&self) -> ParamVector {
        ParamVector::new(self.bounds[0].1, self.bounds[1].1, self.bounds[2].1)
    }

    pub fn point_identified(&self, coord: usize) -> bool {
        self.bounds[coord].0 == self.bounds[coord].1
    }
}

type Point = [f64; 2];

fn quantize(p: &Point) -> (i64, i64) {
    (
        (p[0] / DEDUP_TOL).round() as i64,
        (p[1] / DEDUP_TOL).round() as i64,
    )
}

/// Running record of the best score and the points attaining it.
#[derive(Debug, Clone)]
struct Tracker {
    best: Option<u64>,
    points: Vec<Point>,
    seen: HashSet<(i64, i64)>,
    /// argmin/argmax of each coordinate among all points attaining `best`.
    extremes: [Option<Point>; 4],
    found: usize,
    cap: usize,
}

impl Tracker {
    fn new(cap: usize) -> Self {
        Tracker {
            best: None,
            points: Vec::new(),
            seen: HashSet::new(),
            extremes: [None; 4],
            found: 0,
            cap,
        }
    }

    fn reset(&mut self, score: u64) {
        self.best = Some(score);
        self.points.clear();
        self.seen.clear();
        self.extremes = [None; 4];
        self.found = 0;
    }

    /// Returns true if the point raised the best score.
    fn offer(&mut self, p: Point, score: u64) -> bool {
        let improved = match self.best {
            Some(b) if score < b => return false,
            Some(b) => score > b,
            None => true,
        };
        if improved {
            self.reset(score);
        }
        if !self.seen.insert(quantize(&p)) {
            return improved;
        }
        self.found += 1;
        if self.points.len() < self.cap {
            self.points.push(p);
        }
        for k in 0..2 {
            let lo = &mut self.extremes[2 * k];
            if lo.is_none_or(|q| p[k] < q[k]) {
                *lo = Some(p);
            }
            let hi = &mut self.extremes[2 * k + 1];
            if hi.is_none_or(|q| p[k] > q[k]) {
                *hi = Some(p);
            }
        }
        improved
    }

    fn merge(&mut self, other: Tracker) {
        let Some(ob) = other.best else { return };
        match self.best {
            Some(b) if ob < b => return,
            Some(b) if ob == b => {}
            _ => self.reset(ob),
        }
        for p in other.points.iter().chain(other.extremes.iter().flatten()) {
            self.offer(*p, ob);
        }
        // Points the other tracker saw but did not store are lost for the
        // sample; account for them in the count.
        self.found += other.found.saturating_sub(other.points.len());
    }

    fn extreme_points(&self) -> Vec<Point> {
        let mut out: Vec<Point> = Vec::new();
        for p in self.extremes.iter().flatten() {
            if !out.iter().any(|q| quantize(q) == quantize(p)) {
                out.push(*p);
            }
        }
        out
    }

    fn into_set(self, n_matches: usize) -> Result<IdentifiedSet> {
        let max_score = self
            .best
            .ok_or_else(|| Error::solver("search evaluated no points"))?;
        let mut stored: Vec<Point> = self.points.clone();
        let mut keys: HashSet<(i64, i64)> = stored.iter().map(quantize).collect();
        for p in self.extreme_points() {
            if keys.insert(quantize(&p)) {
                stored.push(p);
            }
        }
        let mut bounds = [
            (1.0, 1.0),
            (f64::INFINITY, f64::NEG_INFINITY),
            (f64::INFINITY, f64::NEG_INFINITY),
        ];
        for p in &stored {
            for k in 0..2 {
                bounds[k + 1].0 = bounds[k + 1].0.min(p[k]);
                bounds[k + 1].1 = bounds[k + 1].1.max(p[k]);
            }
        }
        Ok(IdentifiedSet {
            maximizers: stored
                .iter()
                .map(|p| ParamVector::normalized(p[0], p[1]))
                .collect(),
            max_score,
            bounds,
            percent_correct: if n_matches >= 2 {
                fraction_correct(max_score, n_matches)
            } else {
                0.0
            },
            n_matches,
            n_found: self.found.max(stored.len()),
        })
    }
}

fn eval(ineq: &InequalitySet, p: &Point) -> u64 {
    let s = ineq.score(&ParamVector::normalized(p[0], p[1]));
    debug_assert!(s <= ineq.max_score());
    s
}

fn inequalities(market: &Market, matches: &MatchList) -> Result<InequalitySet> {
    if matches.len() < 2 {
        return Err(Error::validation(format!(
            "estimation needs at least 2 matched pairs, got {}",
            matches.len()
        )));
    }
    InequalitySet::new(market, matches)
}

/// One DE restart: rand/1/bin with a dithered differential weight and
/// generation-synchronous replacement. Trials replace their target on ties so
/// the population drifts across plateaus.
fn de_run(ineq: &InequalitySet, cfg: &EstimationConfig, run: usize) -> Tracker {
    let mut rng = rng::stream(cfg.seed, Purpose::EstimatorRun, run as u64);
    let np = cfg.population;
    let bounds = cfg.bounds;
    let mut tracker = Tracker::new(cfg.max_stored);

    let mut pop: Vec<Point> = (0..np)
        .map(|_| {
            [
                rng.random_range(bounds[0].0..=bounds[0].1),
                rng.random_range(bounds[1].0..=bounds[1].1),
            ]
        })
        .collect();
    let mut fit: Vec<u64> = pop.iter().map(|p| eval(ineq, p)).collect();
    for (p, &f) in pop.iter().zip(&fit) {
        tracker.offer(*p, f);
    }

    let mut trials = vec![[0.0; 2]; np];
    for _ in 0..cfg.max_generations {
        let weight = rng.random_range(cfg.mutation.0..=cfg.mutation.1);
        for (i, trial) in trials.iter_mut().enumerate() {
            let mut pick = || loop {
                let r = rng.random_range(0..np);
                if r != i {
                    break r;
                }
            };
            let r1 = pick();
            let r2 = loop {
                let r = pick();
                if r != r1 {
                    break r;
                }
            };
            let r3 = loop {
                let r = pick();
                if r != r1 && r != r2 {
                    break r;
                }
            };
            let forced = rng.random_range(0..2);
            for k in 0..2 {
                let target = pop[i][k];
                trial[k] = if k == forced || rng.random::<f64>() < cfg.crossover {
                    let v = pop[r1][k] + weight * (pop[r2][k] - pop[r3][k]);
                    let (lo, hi) = bounds[k];
                    if v < lo {
                        0.5 * (lo + target)
                    } else if v > hi {
                        0.5 * (hi + target)
                    } else {
                        v
                    }
                } else {
                    target
                };
            }
        }
        for i in 0..np {
            let f = eval(ineq, &trials[i]);
            tracker.offer(trials[i], f);
            if f >= fit[i] {
                pop[i] = trials[i];
                fit[i] = f;
            }
        }
    }
    tracker
}

/// Walk outward from the extreme maximizers along each axis in steps of
/// `refine_step`, keeping every point that still attains the best score.
fn refine(ineq: &InequalitySet, cfg: &EstimationConfig, tracker: &mut Tracker) {
    const MAX_ROUNDS: usize = 20;
    for _ in 0..MAX_ROUNDS {
        let before = tracker.extremes;
        let best_before = tracker.best;
        'walks: for start in tracker.extreme_points() {
            for k in 0..2 {
                let (lo, hi) = cfg.bounds[k];
                for dir in [-1.0, 1.0] {
                    let edge = if dir < 0.0 { lo } else { hi };
                    let mut t = 1.0;
                    loop {
                        let mut q = start;
                        q[k] = start[k] + dir * t * cfg.refine_step;
                        let at_edge = (dir < 0.0 && q[k] <= lo) || (dir > 0.0 && q[k] >= hi);
                        if at_edge {
                            q[k] = edge;
                        }
                        let s = eval(ineq, &q);
                        let best = tracker.best.unwrap_or(0);
                        if s < best {
                            break;
                        }
                        if tracker.offer(q, s) {
                            // Found a strictly better point; restart from it.
                            break 'walks;
                        }
                        if at_edge {
                            break;
                        }
                        t += 1.0;
                    }
                }
            }
        }
        if tracker.extremes == before && tracker.best == best_before {
            break;
        }
    }
}

/// Maximize the score over `(beta2, beta3)` in the configured box with
/// `beta1 = 1`, using `config.runs` independent DE restarts in parallel.
/// Deterministic given `config.seed`; restart `r` always uses stream `r`.
pub fn maximize_score_de(
    market: &Market,
    matches: &MatchList,
    config: &EstimationConfig,
) -> Result<IdentifiedSet> {
    config.validate()?;
    let ineq = inequalities(market, matches)?;
    let trackers: Vec<Tracker> = (0..config.runs)
        .into_par_iter()
        .map(|run| de_run(&ineq, config, run))
        .collect();
    let mut merged = Tracker::new(config.max_stored);
    for t in trackers {
        merged.merge(t);
    }
    refine(&ineq, config, &mut merged);
    merged.into_set(matches.len())
}

/// Axis values `lo, lo+step, ...` with the last one clamped to `hi`.
pub fn grid_axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil() as usize;
    (0..=n).map(|i| (lo + i as f64 * step).min(hi)).collect()
}

/// Score every point of a regular grid over the box. Exact on the grid.
pub fn maximize_score_grid(
    market: &Market,
    matches: &MatchList,
    bounds: [(f64, f64); 2],
    grid_step: f64,
) -> Result<IdentifiedSet> {
    let cfg = EstimationConfig {
        bounds,
        grid_step: Some(grid_step),
        ..EstimationConfig::default()
    };
    cfg.validate()?;
    let per_axis: Vec<u64> = bounds
        .iter()
        .map(|(lo, hi)| ((hi - lo) / grid_step).ceil() as u64 + 1)
        .collect();
    let total = per_axis[0].saturating_mul(per_axis[1]);
    if total > MAX_GRID_POINTS {
        return Err(Error::validation(format!(
            "grid of {} x {} = {total} points exceeds the limit of {MAX_GRID_POINTS}",
            per_axis[0], per_axis[1]
        )));
    }
    let ineq = inequalities(market, matches)?;
    let xs = grid_axis(bounds[0].0, bounds[0].1, grid_step);
    let ys = grid_axis(bounds[1].0, bounds[1].1, grid_step);
    let rows: Vec<Tracker> = xs
        .par_iter()
        .map(|&x| {
            let mut t = Tracker::new(cfg.max_stored);
            for &y in &ys {
                let p = [x, y];
                t.offer(p, eval(&ineq, &p));
            }
            t
        })
        .collect();
    let mut merged = Tracker::new(cfg.max_stored);
    for t in rows {
        merged.merge(t);
    }
    merged.into_set(matches.len())
}

/// One coefficient's bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
    pub point_identified: bool,
}

impl Bracket {
    pub fn new(lower: f64, upper: f64) -> Self {
        Bracket {
            lower,
            upper,
            point_identified: lower == upper,
        }
    }
}

impl std::fmt::Display for Bracket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{:.3},{:.3}]", self.lower, self.upper)
    }
}

/// Per-regime estimation summary: coefficient brackets and the fit statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub regime: String,
    pub beta1: f64,
    pub beta2: Bracket,
    pub beta3: Bracket,
    pub max_score: u64,
    pub max_possible: u64,
    pub n_matches: usize,
    pub percent_correct: f64,
    pub n_maximizers: usize,
}

/// Re-score every stored maximizer and summarize. Disagreement among
/// maximizers is an internal consistency error.
pub fn fit_report(market: &Market, matches: &MatchList, set: &IdentifiedSet) -> Result<FitReport> {
    let ineq = inequalities(market, matches)?;
    if set.maximizers.is_empty() {
        return Err(Error::solver("identified set has no maximizers"));
    }
    for beta in &set.maximizers {
        let s = ineq.score(beta);
        if s != set.max_score {
            return Err(Error::solver(format!(
                "maximizer {beta} scores {s}, identified set claims {}",
                set.max_score
            )));
        }
    }
    let max_possible = max_possible_score(matches.len());
    Ok(FitReport {
        regime: market.regime().to_string(),
        beta1: 1.0,
        beta2: Bracket::new(set.bounds[1].0, set.bounds[1].1),
        beta3: Bracket::new(set.bounds[2].0, set.bounds[2].1),
        max_score: set.max_score,
        max_possible,
        n_matches: matches.len(),
        percent_correct: fraction_correct(set.max_score, matches.len()),
        n_maximizers: set.n_found,
    })
}

/// Side-by-side text table of fit reports, one column per regime.
pub fn render_estimate_table(reports: &[FitReport]) -> String {
    let mut rows: Vec<(String, Vec<String>)> = vec![
        (
            "Regime".into(),
            reports.iter().map(|r| r.regime.clone()).collect(),
        ),
        (
            "Firm age: beta1".into(),
            reports.iter().map(|r| format!("{}", r.beta1)).collect(),
        ),
        (
            "Firm size (TEU): beta2".into(),
            reports.iter().map(|r| r.beta2.to_string()).collect(),
        ),
        (
            "Distance: beta3".into(),
            reports.iter().map(|r| r.beta3.to_string()).collect(),
        ),
        (
            "% of correct matches".into(),
            reports
                .iter()
                .map(|r| format!("{:.3}", r.percent_correct))
                .collect(),
        ),
    ];
    rows.push((
        "Score (satisfied/total)".into(),
        reports
            .iter()
            .map(|r| format!("{}/{}", r.max_score, r.max_possible))
            .collect(),
    ));
    render_rows(&rows)
}

pub(crate) fn render_rows(rows: &[(String, Vec<String>)]) -> String {
    let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let ncol = rows.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    let col_w: Vec<usize> = (0..ncol)
        .map(|j| {
            rows.iter()
                .filter_map(|(_, c)| c.get(j))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for (i, (label, cells)) in rows.iter().enumerate() {
        out.push_str(&format!("{label:<label_w$}"));
        for (j, w) in col_w.iter().enumerate() {
            let cell = cells.get(j).map(String::as_str).unwrap_or("");
            out.push_str(&format!("  {cell:>w$}"));
        }
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(label_w + col_w.iter().map(|w| w + 2).sum::<usize>()));
            out.push('\n');
        }
    }
    out
}
