//! Joint production function and the matching maximum score objective.
//!
//! For every unordered pair of observed matches `(b, s)`, `(b', s')` the
//! objective counts whether
//!
//! ```text
//! f(b, s) + f(b', s') >= f(b, s') + f(b', s)
//! ```
//!
//! holds at a candidate parameter vector. Ties count as satisfied. Since `f` is
//! linear in the parameters, each inequality reduces to `beta . delta >= 0` for
//! a fixed difference vector `delta`, which [`InequalitySet`] precomputes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Market, MatchList};

/// Coefficients on `Age_b*Age_s`, `Size_b*Size_s` and `Distance_bs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
}

impl ParamVector {
    pub fn new(beta1: f64, beta2: f64, beta3: f64) -> Self {
        ParamVector {
            beta1,
            beta2,
            beta3,
        }
    }

    /// Estimation-mode vector: the age coefficient is fixed to 1.
    pub fn normalized(beta2: f64, beta3: f64) -> Self {
        ParamVector::new(1.0, beta2, beta3)
    }

    pub fn scaled(self, c: f64) -> Self {
        ParamVector::new(c * self.beta1, c * self.beta2, c * self.beta3)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.beta1, self.beta2, self.beta3]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    fn dot(&self, x: &[f64; 3]) -> f64 {
        self.beta1 * x[0] + self.beta2 * x[1] + self.beta3 * x[2]
    }
}

impl std::fmt::Display for ParamVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.beta1, self.beta2, self.beta3)
    }
}

/// `beta1*Age_b*Age_s + beta2*Size_b*Size_s + beta3*Distance_bs + shock`.
pub fn joint_production(
    b: usize,
    s: usize,
    market: &Market,
    beta: &ParamVector,
    shock: f64,
) -> f64 {
    beta.dot(&market.features(b, s)) + shock
}

/// Number of unordered pairs of matches, i.e. the maximum attainable score.
pub fn max_possible_score(n_matches: usize) -> u64 {
    let n = n_matches as u64;
    n * n.saturating_sub(1) / 2
}

/// Precomputed pairwise-stability inequalities for a market and observed
/// matching.
#[derive(Debug, Clone)]
pub struct InequalitySet {
    deltas: Vec<[f64; 3]>,
    n_matches: usize,
}

impl InequalitySet {
    pub fn new(market: &Market, matches: &MatchList) -> Result<Self> {
        matches.check_against(market)?;
        let pairs = matches.pairs();
        let mut deltas = Vec::with_capacity(pairs.len() * pairs.len().saturating_sub(1) / 2);
        for (i, &(b, s)) in pairs.iter().enumerate() {
            let own = market.features(b, s);
            for &(b2, s2) in &pairs[i + 1..] {
                let other = market.features(b2, s2);
                let swap1 = market.features(b, s2);
                let swap2 = market.features(b2, s);
                let mut d = [0.0; 3];
                for k in 0..3 {
                    d[k] = (own[k] + other[k]) - (swap1[k] + swap2[k]);
                }
                deltas.push(d);
            }
        }
        Ok(InequalitySet {
            deltas,
            n_matches: pairs.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn n_matches(&self) -> usize {
        self.n_matches
    }

    pub fn deltas(&self) -> &[[f64; 3]] {
        &self.deltas
    }

    pub fn score(&self, beta: &ParamVector) -> u64 {
        self.deltas.iter().filter(|d| beta.dot(d) >= 0.0).count() as u64
    }

    pub fn max_score(&self) -> u64 {
        self.deltas.len() as u64
    }
}

/// Number of satisfied pairwise-stability inequalities among observed matches.
/// Fewer than two matches make the objective vacuous: the score is 0 and a
/// warning is logged.
pub fn score(market: &Market, matches: &MatchList, beta: &ParamVector) -> Result<u64> {
    if matches.len() < 2 {
        log::warn!(
            "score over {} matched pair(s) is vacuous; returning 0",
            matches.len()
        );
        matches.check_against(market)?;
        return Ok(0);
    }
    Ok(InequalitySet::new(market, matches)?.score(beta))
}

/// Share of satisfied inequalities, `score / C(|matches|, 2)`.
pub fn percent_correct(market: &Market, matches: &MatchList, beta: &ParamVector) -> Result<f64> {
    if matches.len() < 2 {
        return Err(Error::validation(format!(
            "percent of correct matches needs at least 2 matched pairs, got {}",
            matches.len()
        )));
    }
    let s = score(market, matches, beta)?;
    Ok(fraction_correct(s, matches.len()))
}

pub fn fraction_correct(score: u64, n_matches: usize) -> f64 {
    score as f64 / max_possible_score(n_matches) as f64
}
