//! Synthetic markets with known parameters. The observed matching of a
//! generated market is the assignment-game equilibrium under the true
//! parameters, so the estimator can be checked for recovery.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{solve_assignment, ValueMatrix};
use crate::counterfactual::draw_shocks;
use crate::error::{Error, Result};
use crate::estimator::{maximize_score_de, EstimationConfig, IdentifiedSet};
use crate::market::{build_market, Capital, CoordTable, Firm, Market, MatchList, Side};
use crate::rng::{self, Purpose};
use crate::score::{joint_production, ParamVector};

const MAX_ATTEMPTS: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub beta_true: ParamVector,
    /// Raw ages are uniform on this interval.
    pub age_range: (f64, f64),
    /// Raw sizes are uniform on this interval.
    pub size_range: (f64, f64),
    pub country_count: usize,
    pub shock_sd: f64,
    pub seed: u64,
    /// Coefficient on an extra squared-distance term in the generating values.
    /// Zero means the generating model is the estimated one.
    pub misspecification: f64,
    /// Year stamped on persisted fixtures.
    pub year: i32,
}

impl SyntheticSpec {
    pub fn new(n: usize, beta_true: ParamVector, seed: u64) -> Self {
        SyntheticSpec {
            n,
            beta_true,
            age_range: (0.0, 1.0),
            size_range: (0.0, 1.0),
            country_count: 5,
            shock_sd: 0.0,
            seed,
            misspecification: 0.0,
            year: 2000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::validation(format!(
                "synthetic market needs n >= 2, got {}",
                self.n
            )));
        }
        if self.country_count == 0 {
            return Err(Error::validation("country_count must be at least 1"));
        }
        for (lo, hi) in [self.age_range, self.size_range] {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                return Err(Error::validation(format!(
                    "bad characteristic range [{lo}, {hi}]"
                )));
            }
        }
        if !(self.shock_sd.is_finite() && self.shock_sd >= 0.0) {
            return Err(Error::validation("shock_sd must be finite and >= 0"));
        }
        if !self.beta_true.is_finite() || !self.misspecification.is_finite() {
            return Err(Error::validation("non-finite generating parameters"));
        }
        Ok(())
    }
}

/// A generated market, its equilibrium matching, and the values that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub market: Market,
    pub matches: MatchList,
    pub values: ValueMatrix,
    pub coords: CoordTable,
}

pub fn country_code(i: usize) -> String {
    format!("C{i:02}")
}

fn draw_once(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticMarket> {
    let mut rng = rng::stream(seed, Purpose::SyntheticMarket, 0);
    let mut coords = CoordTable::new();
    for c in 0..spec.country_count {
        let cap = Capital::new(
            rng.random_range(-60.0..=60.0),
            rng.random_range(-180.0..=180.0),
        )?;
        coords.insert(&country_code(c), &country_code(c), cap);
    }
    let mut uniform = |(lo, hi): (f64, f64)| {
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        }
    };
    let mut firms = |side: Side, tag: &str| -> Vec<Firm> {
        (0..spec.n)
            .map(|i| {
                let age = uniform(spec.age_range);
                let size = uniform(spec.size_range);
                Firm::new(
                    format!("{tag}{i:03}"),
                    format!("{tag}{i:03}"),
                    side,
                    age,
                    size,
                    "",
                )
            })
            .collect()
    };
    let mut buyers = firms(Side::Buyer, "B");
    let mut sellers = firms(Side::Seller, "S");
    for f in buyers.iter_mut().chain(sellers.iter_mut()) {
        f.country = country_code(rng.random_range(0..spec.country_count));
    }
    let market = build_market(
        buyers,
        sellers,
        &coords,
        &format!("{}-{}", spec.year, spec.year),
    )?;

    let n = spec.n;
    let shocks = draw_shocks(n, spec.shock_sd, seed, 0);
    let mut values = Vec::with_capacity(n * n);
    for b in 0..n {
        for s in 0..n {
            let d = market.distance(b, s);
            values.push(
                joint_production(b, s, &market, &spec.beta_true, shocks[b * n + s])
                    + spec.misspecification * d * d,
            );
        }
    }
    let values = ValueMatrix::from_flat(n, values, vec![false; n * n])?;
    let eq = solve_assignment(&values)?;
    let matches = MatchList::new(eq.matching)?;
    Ok(SyntheticMarket {
        market,
        matches,
        values,
        coords,
    })
}

/// Generate a market and its equilibrium matching. A draw with an empty
/// equilibrium is retried with the next sub-seed, up to 10 attempts.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticMarket> {
    spec.validate()?;
    for attempt in 0..MAX_ATTEMPTS {
        let seed = rng::derive_seed(spec.seed, Purpose::SyntheticMarket, attempt);
        let draw = draw_once(spec, seed)?;
        if !draw.matches.is_empty() {
            return Ok(draw);
        }
    }
    Err(Error::solver(format!(
        "no non-empty equilibrium matching in {MAX_ATTEMPTS} attempts"
    )))
}

pub fn generate_market(spec: &SyntheticSpec) -> Result<(Market, MatchList)> {
    generate(spec).map(|g| (g.market, g.matches))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub n_matches: usize,
    pub max_score: u64,
    pub percent_correct: f64,
    pub beta2: (f64, f64),
    pub beta3: (f64, f64),
    pub signs_recovered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub trials: usize,
    pub sign_recovery_fraction: f64,
    pub median_width_beta2: f64,
    pub median_width_beta3: f64,
    pub per_trial: Vec<TrialOutcome>,
}

/// Whether every maximizer carries the sign of the true coefficient. For a
/// zero true coefficient the bracket must contain zero instead.
fn sign_recovered(truth: f64, values: impl Iterator<Item = f64>, bracket: (f64, f64)) -> bool {
    if truth == 0.0 {
        return bracket.0 <= 0.0 && 0.0 <= bracket.1;
    }
    let mut values = values;
    values.all(|v| v != 0.0 && v.signum() == truth.signum())
}

/// Whether all maximizers of `set` recover the signs of `beta_true`'s
/// `beta2` and `beta3`.
pub fn signs_recovered(set: &IdentifiedSet, beta_true: &ParamVector) -> bool {
    sign_recovered(
        beta_true.beta2,
        set.maximizers.iter().map(|b| b.beta2),
        set.bounds[1],
    ) && sign_recovered(
        beta_true.beta3,
        set.maximizers.iter().map(|b| b.beta3),
        set.bounds[2],
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Generate `trials` markets from `spec` (each on its own derived seed),
/// estimate each with DE, and summarize sign recovery and bracket widths.
/// Trials with fewer than two matches count as not recovered.
pub fn recovery_experiment(
    spec: &SyntheticSpec,
    trials: usize,
    config: &EstimationConfig,
) -> Result<RecoverySummary> {
    if trials == 0 {
        return Err(Error::validation("trials must be at least 1"));
    }
    spec.validate()?;
    config.validate()?;
    let per_trial: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<TrialOutcome> {
            let seed = rng::derive_seed(spec.seed, Purpose::RecoveryTrial, t as u64);
            let g = generate(&SyntheticSpec {
                seed,
                ..spec.clone()
            })?;
            if g.matches.len() < 2 {
                return Ok(TrialOutcome {
                    seed,
                    n_matches: g.matches.len(),
                    max_score: 0,
                    percent_correct: 0.0,
                    beta2: config.bounds[0],
                    beta3: config.bounds[1],
                    signs_recovered: false,
                });
            }
            let cfg = EstimationConfig {
                seed,
                ..config.clone()
            };
            let set = maximize_score_de(&g.market, &g.matches, &cfg)?;
            Ok(TrialOutcome {
                seed,
                n_matches: g.matches.len(),
                max_score: set.max_score,
                percent_correct: set.percent_correct,
                beta2: set.bounds[1],
                beta3: set.bounds[2],
                signs_recovered: signs_recovered(&set, &spec.beta_true),
            })
        })
        .collect::<Result<_>>()?;
    let recovered = per_trial.iter().filter(|t| t.signs_recovered).count();
    Ok(RecoverySummary {
        trials,
        sign_recovery_fraction: recovered as f64 / trials as f64,
        median_width_beta2: median(per_trial.iter().map(|t| t.beta2.1 - t.beta2.0).collect()),
        median_width_beta3: median(per_trial.iter().map(|t| t.beta3.1 - t.beta3.0).collect()),
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::verify_stability;

    #[test]
    fn two_firm_assortative_market() {
        // Ages 1 and 0.5 on both sides, sizes constant, everyone in one country.
        let spec = SyntheticSpec {
            age_range: (0.0, 1.0),
            size_range: (1.0, 1.0),
            country_count: 1,
            ..SyntheticSpec::new(2, ParamVector::new(1.0, 0.0, 0.0), 4)
        };
        let g = generate(&spec).unwrap();
        let ages = g.market.age_b().to_vec();
        let ages_s = g.market.age_s().to_vec();
        // The equilibrium pairs the older buyer with the older seller.
        let older_b = if ages[0] >= ages[1] { 0 } else { 1 };
        let older_s = if ages_s[0] >= ages_s[1] { 0 } else { 1 };
        assert!(g.matches.contains(older_b, older_s));
        assert_eq!(g.matches.len(), 2);
    }

    #[test]
    fn generated_matching_is_an_equilibrium() {
        for seed in 0..10 {
            let spec = SyntheticSpec {
                shock_sd: 0.5,
                ..SyntheticSpec::new(5, ParamVector::new(1.0, 2.0, -1.0), seed)
            };
            let g = generate(&spec).unwrap();
            let res = solve_assignment(&g.values).unwrap();
            assert_eq!(res.matching, g.matches.pairs());
            assert!(verify_stability(&g.values, &res).is_stable());
            g.market.check_invariants().unwrap();
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let spec = SyntheticSpec::new(8, ParamVector::new(1.0, 5.0, -2.0), 21);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.market, b.market);
        assert_eq!(a.matches, b.matches);
        let c = generate(&SyntheticSpec { seed: 22, ..spec }).unwrap();
        assert_ne!(a.market, c.market);
    }

    #[test]
    fn all_negative_values_exhaust_attempts() {
        let spec = SyntheticSpec::new(3, ParamVector::new(-1.0, -1.0, -1.0), 0);
        assert!(matches!(generate(&spec), Err(Error::Solver(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(SyntheticSpec::new(1, ParamVector::new(1.0, 0.0, 0.0), 0)
            .validate()
            .is_err());
        let s = SyntheticSpec {
            country_count: 0,
            ..SyntheticSpec::new(3, ParamVector::new(1.0, 0.0, 0.0), 0)
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn zero_coefficients_bracket_zero_neighbourhood() {
        // Noiseless age-only sorting: the identified set is a small cell
        // around the origin, not a point.
        let spec = SyntheticSpec::new(10, ParamVector::new(1.0, 0.0, 0.0), 3);
        let cfg = EstimationConfig {
            runs: 4,
            population: 60,
            max_generations: 40,
            ..EstimationConfig::default()
        };
        let sum = recovery_experiment(&spec, 3, &cfg).unwrap();
        assert_eq!(sum.trials, 3);
        for t in &sum.per_trial {
            assert_eq!(t.max_score, 45);
            assert!(t.beta2.0 < 0.01 && t.beta2.1 > -0.01, "{t:?}");
            assert!(t.beta3.0 < 0.01 && t.beta3.1 > -0.01, "{t:?}");
        }
        assert!(sum.median_width_beta2 > 0.0 && sum.median_width_beta3 > 0.0);
    }
}
