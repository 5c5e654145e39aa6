//! Counterfactual equilibria when mergers between firms of the same country
//! are prohibited, under i.i.d. normal pair-level shocks.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{solve_assignment, ValueMatrix};
use crate::error::{Error, Result};
use crate::estimator::render_rows;
use crate::market::{Market, MatchList};
use crate::rng::{self, Purpose};
use crate::score::{joint_production, ParamVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualConfig {
    pub beta: ParamVector,
    pub draws: usize,
    pub shock_sd: f64,
    pub seed: u64,
    pub prohibit_same_country: bool,
    /// Remove both agents of every observed same-country match from the
    /// market instead of only masking same-country pairs.
    pub drop_same_country_agents: bool,
}

impl CounterfactualConfig {
    pub fn new(beta: ParamVector) -> Self {
        CounterfactualConfig {
            beta,
            draws: 100,
            shock_sd: 1.0,
            seed: 0,
            prohibit_same_country: true,
            drop_same_country_agents: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.draws == 0 {
            return Err(Error::validation("draws must be at least 1"));
        }
        if !(self.shock_sd.is_finite() && self.shock_sd >= 0.0) {
            return Err(Error::validation(format!(
                "shock_sd must be finite and >= 0, got {}",
                self.shock_sd
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::validation(format!("non-finite beta {}", self.beta)));
        }
        Ok(())
    }
}

/// Outcome of one shock draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawOutcome {
    /// Matched pairs in the counterfactual equilibrium.
    pub total: usize,
    /// Of those, pairs identical to an observed match.
    pub same: usize,
    /// Of those, pairs whose firms share a country.
    pub same_country: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualStats {
    pub regime: String,
    pub matching_num_data: usize,
    pub prop_total: (f64, f64),
    pub prop_same: (f64, f64),
    pub per_draw: Vec<DrawOutcome>,
}

/// Values with shocks added; under prohibition same-country pairs are blocked.
pub fn counterfactual_values(
    market: &Market,
    beta: &ParamVector,
    shocks: &[f64],
    prohibit: bool,
) -> Result<ValueMatrix> {
    let n = market.n();
    if shocks.len() != n * n {
        return Err(Error::validation(format!(
            "expected {} shocks, got {}",
            n * n,
            shocks.len()
        )));
    }
    if let Some(bad) = shocks.iter().find(|v| !v.is_finite()) {
        return Err(Error::validation(format!("non-finite shock {bad}")));
    }
    let mut values = Vec::with_capacity(n * n);
    let mut blocked = Vec::with_capacity(n * n);
    for b in 0..n {
        for s in 0..n {
            values.push(joint_production(b, s, market, beta, shocks[b * n + s]));
            blocked.push(prohibit && market.same_country(b, s));
        }
    }
    ValueMatrix::from_flat(n, values, blocked)
}

/// Row-major `n x n` i.i.d. `N(0, sd^2)` shocks.
pub fn draw_shocks(n: usize, sd: f64, seed: u64, draw: usize) -> Vec<f64> {
    if sd == 0.0 {
        return vec![0.0; n * n];
    }
    let mut rng = rng::stream(seed, Purpose::CounterfactualDraw, draw as u64);
    let normal = Normal::new(0.0, sd).expect("sd validated finite and positive");
    (0..n * n).map(|_| normal.sample(&mut rng)).collect()
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    })
}

/// Simulate `config.draws` counterfactual equilibria and summarize them
/// relative to the observed matching.
pub fn simulate(
    market: &Market,
    matches: &MatchList,
    config: &CounterfactualConfig,
) -> Result<CounterfactualStats> {
    config.validate()?;
    matches.check_against(market)?;
    if matches.is_empty() {
        return Err(Error::validation(
            "counterfactual needs at least one observed match",
        ));
    }
    let n = market.n();

    let (keep_b, keep_s): (Vec<usize>, Vec<usize>) = if config.drop_same_country_agents {
        let dropped: Vec<(usize, usize)> = matches
            .pairs()
            .iter()
            .copied()
            .filter(|&(b, s)| market.same_country(b, s))
            .collect();
        (
            (0..n)
                .filter(|b| !dropped.iter().any(|d| d.0 == *b))
                .collect(),
            (0..n)
                .filter(|s| !dropped.iter().any(|d| d.1 == *s))
                .collect(),
        )
    } else {
        ((0..n).collect(), (0..n).collect())
    };

    let per_draw: Vec<DrawOutcome> = (0..config.draws)
        .into_par_iter()
        .map(|d| -> Result<DrawOutcome> {
            let shocks = draw_shocks(n, config.shock_sd, config.seed, d);
            let full =
                counterfactual_values(market, &config.beta, &shocks, config.prohibit_same_country)?;
            if keep_b.is_empty() {
                return Ok(DrawOutcome {
                    total: 0,
                    same: 0,
                    same_country: 0,
                });
            }
            let vm = if keep_b.len() == n {
                full
            } else {
                full.submatrix(&keep_b, &keep_s)?
            };
            let res = solve_assignment(&vm)?;
            let pairs = res.matching.iter().map(|&(b, s)| (keep_b[b], keep_s[s]));
            let mut out = DrawOutcome {
                total: 0,
                same: 0,
                same_country: 0,
            };
            for (b, s) in pairs {
                out.total += 1;
                out.same += usize::from(matches.contains(b, s));
                out.same_country += usize::from(market.same_country(b, s));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let denom = matches.len() as f64;
    Ok(CounterfactualStats {
        regime: market.regime().to_string(),
        matching_num_data: matches.len(),
        prop_total: min_max(per_draw.iter().map(|o| o.total as f64 / denom)),
        prop_same: min_max(per_draw.iter().map(|o| o.same as f64 / denom)),
        per_draw,
    })
}

/// Side-by-side text table, one column per regime.
pub fn render_counterfactual_table(stats: &[CounterfactualStats]) -> String {
    let br = |(lo, hi): (f64, f64)| format!("[{lo:.3},{hi:.3}]");
    let rows = vec![
        (
            "Regime".to_string(),
            stats.iter().map(|s| s.regime.clone()).collect(),
        ),
        (
            "Matching Num (data)".to_string(),
            stats
                .iter()
                .map(|s| s.matching_num_data.to_string())
                .collect(),
        ),
        (
            "Prop total match (counterfactual/data)".to_string(),
            stats.iter().map(|s| br(s.prop_total)).collect(),
        ),
        (
            "Prop same match (counterfactual/data)".to_string(),
            stats.iter().map(|s| br(s.prop_same)).collect(),
        ),
    ];
    render_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::NORM_FLOOR;

    fn market(distance: Vec<Vec<f64>>) -> Market {
        let n = distance.len();
        let ages: Vec<f64> = (0..n).map(|i| 1.0 - 0.2 * i as f64).collect();
        Market::from_normalized(
            "cf",
            ages.clone(),
            ages,
            vec![0.5; n],
            vec![0.5; n],
            distance,
        )
        .unwrap()
    }

    #[test]
    fn values_without_prohibition() {
        let m = market(vec![vec![NORM_FLOOR, 1.0], vec![0.5, NORM_FLOOR]]);
        let beta = ParamVector::new(1.0, 2.0, -1.0);
        let vm = counterfactual_values(&m, &beta, &[0.0; 4], false).unwrap();
        for b in 0..2 {
            for s in 0..2 {
                assert!(!vm.is_blocked(b, s));
                assert_eq!(vm.value(b, s), joint_production(b, s, &m, &beta, 0.0));
            }
        }
        let vm = counterfactual_values(&m, &beta, &[0.0; 4], true).unwrap();
        assert!(vm.is_blocked(0, 0) && vm.is_blocked(1, 1));
        assert!(!vm.is_blocked(0, 1) && !vm.is_blocked(1, 0));
    }

    #[test]
    fn single_same_country_pair_is_the_only_block() {
        let m = market(vec![vec![NORM_FLOOR, 1.0], vec![0.5, 0.7]]);
        let vm =
            counterfactual_values(&m, &ParamVector::new(1.0, 0.0, 0.0), &[0.0; 4], true).unwrap();
        let blocked: Vec<bool> = (0..4).map(|i| vm.is_blocked(i / 2, i % 2)).collect();
        assert_eq!(blocked, vec![true, false, false, false]);
    }

    #[test]
    fn fully_prohibited_market_matches_nobody() {
        let m = market(vec![vec![NORM_FLOOR; 2]; 2]);
        let ml = MatchList::new(vec![(0, 0), (1, 1)]).unwrap();
        let mut cfg = CounterfactualConfig::new(ParamVector::new(1.0, 1.0, 1.0));
        cfg.draws = 5;
        let st = simulate(&m, &ml, &cfg).unwrap();
        assert_eq!(st.prop_total, (0.0, 0.0));
        assert_eq!(st.prop_same, (0.0, 0.0));
    }

    #[test]
    fn zero_noise_draws_are_identical() {
        let m = market(vec![
            vec![NORM_FLOOR, 0.4, 0.9],
            vec![0.3, NORM_FLOOR, 1.0],
            vec![0.8, 0.2, NORM_FLOOR],
        ]);
        let ml = MatchList::new(vec![(0, 1), (1, 0), (2, 2)]).unwrap();
        let mut cfg = CounterfactualConfig::new(ParamVector::new(1.0, 1.0, -0.1));
        cfg.shock_sd = 0.0;
        cfg.draws = 7;
        let st = simulate(&m, &ml, &cfg).unwrap();
        assert_eq!(st.prop_total.0, st.prop_total.1);
        assert_eq!(st.prop_same.0, st.prop_same.1);
        assert!(st.per_draw.iter().all(|o| o.same_country == 0));
    }

    #[test]
    fn prohibition_and_bounds_under_noise() {
        let m = market(vec![
            vec![NORM_FLOOR, 0.4, 0.9],
            vec![0.3, NORM_FLOOR, 1.0],
            vec![0.8, 0.2, NORM_FLOOR],
        ]);
        let ml = MatchList::new(vec![(0, 0), (1, 2), (2, 1)]).unwrap();
        let mut cfg = CounterfactualConfig::new(ParamVector::new(1.0, 1.0, -0.1));
        cfg.draws = 50;
        cfg.seed = 11;
        let st = simulate(&m, &ml, &cfg).unwrap();
        assert!(st.per_draw.iter().all(|o| o.same_country == 0));
        // (0,0) is same-country and can never be reproduced
        assert!(st.prop_same.1 <= 2.0 / 3.0);
        assert!(st.prop_same.0 <= st.prop_same.1 && st.prop_same.1 <= st.prop_total.1);
        assert_eq!(st, simulate(&m, &ml, &cfg).unwrap());

        // more draws under the same seed only widen the intervals
        let wider = simulate(
            &m,
            &ml,
            &CounterfactualConfig {
                draws: 100,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert!(wider.prop_same.0 <= st.prop_same.0 && wider.prop_same.1 >= st.prop_same.1);
        assert_eq!(&wider.per_draw[..50], &st.per_draw[..]);

        let dropped = simulate(
            &m,
            &ml,
            &CounterfactualConfig {
                drop_same_country_agents: true,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(dropped.matching_num_data, 3);
        assert!(dropped.per_draw.iter().all(|o| o.total <= 2));
    }

    #[test]
    fn rejects_bad_config() {
        let m = market(vec![vec![0.5]]);
        let ml = MatchList::new(vec![(0, 0)]).unwrap();
        let mut cfg = CounterfactualConfig::new(ParamVector::new(1.0, 0.0, 0.0));
        cfg.draws = 0;
        assert!(simulate(&m, &ml, &cfg).is_err());
        cfg.draws = 1;
        cfg.shock_sd = -1.0;
        assert!(simulate(&m, &ml, &cfg).is_err());
        cfg.shock_sd = 1.0;
        assert!(simulate(&m, &MatchList::default(), &cfg).is_err());
    }

    #[test]
    fn table_shape() {
        let st = CounterfactualStats {
            regime: "1991-2005".into(),
            matching_num_data: 14,
            prop_total: (1.0, 1.0),
            prop_same: (3.0 / 14.0, 9.0 / 14.0),
            per_draw: vec![],
        };
        let t = render_counterfactual_table(&[st]);
        assert!(t.contains("[1.000,1.000]"));
        assert!(t.contains("[0.214,0.643]"));
    }
}
