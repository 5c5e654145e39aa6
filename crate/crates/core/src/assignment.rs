//! The Shapley–Shubik assignment game: choose a one-to-one matching that
//! maximizes total surplus when every agent may also stay unmatched with payoff
//! zero, and recover equilibrium payoffs from the dual LP.
//!
//! The primal is solved as a square `2n x 2n` assignment: buyer `b` may take
//! seller `s` or its private null partner, and seller `s` may take buyer `b` or
//! its own null partner; null partners match each other at zero. The shortest
//! augmenting path method with row/column potentials gives an integral optimum.
//! Given that optimum, buyer payoffs `u` and seller prices `p` solve a system of
//! difference constraints, found with Bellman–Ford.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for dual feasibility and complementary slackness.
pub const DUAL_TOL: f64 = 1e-9;

/// Largest market the exhaustive oracle accepts.
pub const BRUTE_FORCE_MAX_N: usize = 8;

/// Surplus of each buyer-seller pair. Blocked pairs are infeasible, which is
/// how a value of minus infinity is represented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueMatrix {
    n: usize,
    values: Vec<f64>,
    blocked: Vec<bool>,
}

impl ValueMatrix {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.len();
        Self::with_blocked(values, vec![vec![false; n]; n])
    }

    pub fn with_blocked(values: Vec<Vec<f64>>, blocked: Vec<Vec<bool>>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::validation("value matrix must be at least 1x1"));
        }
        if values.iter().any(|r| r.len() != n)
            || blocked.len() != n
            || blocked.iter().any(|r| r.len() != n)
        {
            return Err(Error::validation(
                "value matrix and mask must be square and of equal size",
            ));
        }
        Self::from_flat(
            n,
            values.into_iter().flatten().collect(),
            blocked.into_iter().flatten().collect(),
        )
    }

    /// Row-major constructor.
    pub fn from_flat(n: usize, values: Vec<f64>, blocked: Vec<bool>) -> Result<Self> {
        if n == 0 || values.len() != n * n || blocked.len() != n * n {
            return Err(Error::validation("value matrix must be n x n with n >= 1"));
        }
        for (i, (v, b)) in values.iter().zip(&blocked).enumerate() {
            if !b && !v.is_finite() {
                return Err(Error::validation(format!(
                    "non-finite value {v} at unblocked pair ({}, {})",
                    i / n,
                    i % n
                )));
            }
        }
        Ok(ValueMatrix { n, values, blocked })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, b: usize, s: usize) -> f64 {
        self.values[b * self.n + s]
    }

    pub fn is_blocked(&self, b: usize, s: usize) -> bool {
        self.blocked[b * self.n + s]
    }

    pub fn block(&mut self, b: usize, s: usize) {
        self.blocked[b * self.n + s] = true;
    }

    /// Sub-problem on the listed buyers and sellers, in the given order.
    pub fn submatrix(&self, buyers: &[usize], sellers: &[usize]) -> Result<Self> {
        if buyers.len() != sellers.len() {
            return Err(Error::validation("submatrix must be square"));
        }
        let mut values = Vec::with_capacity(buyers.len() * sellers.len());
        let mut blocked = Vec::with_capacity(values.capacity());
        for &b in buyers {
            for &s in sellers {
                values.push(self.value(b, s));
                blocked.push(self.is_blocked(b, s));
            }
        }
        Self::from_flat(buyers.len(), values, blocked)
    }
}

/// Equilibrium payoffs: buyer surplus `u_b` and seller price `p_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPrices {
    pub buyer: Vec<f64>,
    pub seller: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResult {
    /// Matched `(buyer, seller)` pairs in increasing buyer order.
    pub matching: Vec<(usize, usize)>,
    pub unmatched_buyers: Vec<usize>,
    pub unmatched_sellers: Vec<usize>,
    pub objective: f64,
    /// Absent for the brute-force oracle.
    pub duals: Option<DualPrices>,
}

impl AssignmentResult {
    fn from_matching(
        vm: &ValueMatrix,
        mut matching: Vec<(usize, usize)>,
        duals: Option<DualPrices>,
    ) -> Self {
        matching.sort_unstable();
        let n = vm.n();
        let mut b_used = vec![false; n];
        let mut s_used = vec![false; n];
        for &(b, s) in &matching {
            b_used[b] = true;
            s_used[s] = true;
        }
        let objective = matching.iter().map(|&(b, s)| vm.value(b, s)).sum();
        AssignmentResult {
            matching,
            unmatched_buyers: (0..n).filter(|&b| !b_used[b]).collect(),
            unmatched_sellers: (0..n).filter(|&s| !s_used[s]).collect(),
            objective,
            duals,
        }
    }

    pub fn dual_objective(&self) -> Option<f64> {
        self.duals
            .as_ref()
            .map(|d| d.buyer.iter().sum::<f64>() + d.seller.iter().sum::<f64>())
    }
}

/// Minimum-cost perfect assignment on a square cost matrix with `None` marking
/// forbidden cells. Returns `col_of_row`. A perfect assignment must exist.
fn min_cost_assignment(m: usize, cost: impl Fn(usize, usize) -> Option<f64>) -> Result<Vec<usize>> {
    const INF: f64 = f64::INFINITY;
    // 1-based with a virtual column 0, as in the classic potentials formulation.
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of_col = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = INF;
            let mut j1 = usize::MAX;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                if let Some(c) = cost(i0 - 1, j - 1) {
                    let cur = c - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if j1 == usize::MAX || !delta.is_finite() {
                return Err(Error::solver("no augmenting path: assignment infeasible"));
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0; m];
    for j in 1..=m {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    Ok(col_of_row)
}

/// Equilibrium payoffs supporting `matching`, via shortest paths over the
/// difference constraints implied by dual feasibility and complementary
/// slackness. Returns the seller-optimal price vector.
fn supporting_duals(vm: &ValueMatrix, matching: &[(usize, usize)]) -> Result<DualPrices> {
    let n = vm.n();
    let mut partner_of_buyer = vec![None; n];
    let mut seller_matched = vec![false; n];
    for &(b, s) in matching {
        partner_of_buyer[b] = Some(s);
        seller_matched[s] = true;
    }

    // Node 0 anchors zero; node s+1 carries p_s. Edge (from, to, w) encodes
    // x_to <= x_from + w.
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for (b, partner) in partner_of_buyer.iter().enumerate() {
        match *partner {
            Some(s) => {
                let own = vm.value(b, s);
                edges.push((0, s + 1, own)); // u_b >= 0
                for s2 in (0..n).filter(|&s2| s2 != s && !vm.is_blocked(b, s2)) {
                    edges.push((s2 + 1, s + 1, own - vm.value(b, s2)));
                }
            }
            None => {
                for s2 in (0..n).filter(|&s2| !vm.is_blocked(b, s2)) {
                    edges.push((s2 + 1, 0, -vm.value(b, s2))); // p_s2 >= value
                }
            }
        }
    }
    for (s, &matched) in seller_matched.iter().enumerate() {
        edges.push((s + 1, 0, 0.0)); // p_s >= 0
        if !matched {
            edges.push((0, s + 1, 0.0)); // p_s <= 0
        }
    }

    let mut dist = vec![f64::INFINITY; n + 1];
    dist[0] = 0.0;
    for _ in 0..=n {
        let mut changed = false;
        for &(from, to, w) in &edges {
            if dist[from].is_finite() && dist[from] + w < dist[to] {
                dist[to] = dist[from] + w;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if dist[0] < -DUAL_TOL {
        return Err(Error::solver(format!(
            "matching is not optimal: negative cycle of weight {} in the price constraints",
            dist[0]
        )));
    }
    let anchor = dist[0];
    let seller: Vec<f64> = dist[1..].iter().map(|d| (d - anchor).max(0.0)).collect();
    let buyer = partner_of_buyer
        .iter()
        .enumerate()
        .map(|(b, p)| p.map_or(0.0, |s| (vm.value(b, s) - seller[s]).max(0.0)))
        .collect();
    Ok(DualPrices { buyer, seller })
}

/// Optimal one-to-one assignment with an unmatched option at zero payoff,
/// together with supporting equilibrium payoffs.
pub fn solve_assignment(vm: &ValueMatrix) -> Result<AssignmentResult> {
    let n = vm.n();
    let m = 2 * n;
    let col_of_row = min_cost_assignment(m, |r, c| match (r < n, c < n) {
        (true, true) => (!vm.is_blocked(r, c)).then(|| -vm.value(r, c)),
        (true, false) => (c - n == r).then_some(0.0),
        (false, true) => (r - n == c).then_some(0.0),
        (false, false) => Some(0.0),
    })?;
    let matching: Vec<(usize, usize)> = col_of_row[..n]
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c < n)
        .map(|(b, &s)| (b, s))
        .collect();
    let duals = supporting_duals(vm, &matching)?;
    Ok(AssignmentResult::from_matching(vm, matching, Some(duals)))
}

/// Exhaustive search over all partial one-to-one matchings. Among optimal
/// matchings the lexicographically smallest pair list wins. No duals.
pub fn brute_force_assignment(vm: &ValueMatrix) -> Result<AssignmentResult> {
    let n = vm.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::validation(format!(
            "brute-force assignment limited to n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }

    struct Search<'a> {
        vm: &'a ValueMatrix,
        used: Vec<bool>,
        current: Vec<(usize, usize)>,
        best: Option<(f64, Vec<(usize, usize)>)>,
    }

    impl Search<'_> {
        fn go(&mut self, b: usize, total: f64) {
            if b == self.vm.n() {
                let better = match &self.best {
                    None => true,
                    Some((v, pairs)) => total > *v || (total == *v && self.current < *pairs),
                };
                if better {
                    self.best = Some((total, self.current.clone()));
                }
                return;
            }
            for s in 0..self.vm.n() {
                if !self.used[s] && !self.vm.is_blocked(b, s) {
                    self.used[s] = true;
                    self.current.push((b, s));
                    self.go(b + 1, total + self.vm.value(b, s));
                    self.current.pop();
                    self.used[s] = false;
                }
            }
            self.go(b + 1, total);
        }
    }

    let mut search = Search {
        vm,
        used: vec![false; n],
        current: Vec::with_capacity(n),
        best: None,
    };
    search.go(0, 0.0);
    let (_, pairs) = search.best.expect("the empty matching is always feasible");
    Ok(AssignmentResult::from_matching(vm, pairs, None))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    Dimension(String),
    NotOneToOne(String),
    BlockedPairMatched {
        buyer: usize,
        seller: usize,
    },
    ObjectiveMismatch {
        reported: f64,
        recomputed: f64,
    },
    MissingDuals,
    NegativeDual {
        side: crate::market::Side,
        index: usize,
        value: f64,
    },
    DualInfeasible {
        buyer: usize,
        seller: usize,
        slack: f64,
    },
    SlacknessMatched {
        buyer: usize,
        seller: usize,
        gap: f64,
    },
    SlacknessUnmatched {
        side: crate::market::Side,
        index: usize,
        value: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub violations: Vec<Violation>,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Certify a matching as a competitive equilibrium of the assignment game:
/// non-negative payoffs, no pair able to do better together than apart
/// (`u_b + p_s >= value`), exact split on matched pairs and zero payoff for
/// unmatched agents.
pub fn verify_stability(vm: &ValueMatrix, result: &AssignmentResult) -> StabilityReport {
    use crate::market::Side;

    let n = vm.n();
    let mut violations = Vec::new();
    let mut partner_b = vec![None; n];
    let mut partner_s = vec![None; n];
    for &(b, s) in &result.matching {
        if b >= n || s >= n {
            violations.push(Violation::Dimension(format!(
                "pair ({b}, {s}) outside {n}x{n}"
            )));
            continue;
        }
        if partner_b[b].is_some() || partner_s[s].is_some() {
            violations.push(Violation::NotOneToOne(format!(
                "pair ({b}, {s}) reuses an agent"
            )));
        }
        partner_b[b] = Some(s);
        partner_s[s] = Some(b);
        if vm.is_blocked(b, s) {
            violations.push(Violation::BlockedPairMatched {
                buyer: b,
                seller: s,
            });
        }
    }
    if !violations.is_empty() {
        return StabilityReport { violations };
    }

    let recomputed: f64 = result.matching.iter().map(|&(b, s)| vm.value(b, s)).sum();
    if (recomputed - result.objective).abs() > DUAL_TOL * (1.0 + recomputed.abs()) {
        violations.push(Violation::ObjectiveMismatch {
            reported: result.objective,
            recomputed,
        });
    }

    let Some(duals) = &result.duals else {
        violations.push(Violation::MissingDuals);
        return StabilityReport { violations };
    };
    if duals.buyer.len() != n || duals.seller.len() != n {
        violations.push(Violation::Dimension(
            "dual vectors do not match market size".into(),
        ));
        return StabilityReport { violations };
    }

    for (side, vals) in [(Side::Buyer, &duals.buyer), (Side::Seller, &duals.seller)] {
        for (i, &v) in vals.iter().enumerate() {
            if v.is_nan() || v < -DUAL_TOL {
                violations.push(Violation::NegativeDual {
                    side,
                    index: i,
                    value: v,
                });
            }
        }
    }
    for b in 0..n {
        for s in 0..n {
            if vm.is_blocked(b, s) {
                continue;
            }
            let slack = duals.buyer[b] + duals.seller[s] - vm.value(b, s);
            if slack < -DUAL_TOL {
                violations.push(Violation::DualInfeasible {
                    buyer: b,
                    seller: s,
                    slack,
                });
            }
        }
    }
    for &(b, s) in &result.matching {
        let gap = duals.buyer[b] + duals.seller[s] - vm.value(b, s);
        if gap.abs() > DUAL_TOL {
            violations.push(Violation::SlacknessMatched {
                buyer: b,
                seller: s,
                gap,
            });
        }
    }
    for b in (0..n).filter(|&b| partner_b[b].is_none()) {
        if duals.buyer[b].abs() > DUAL_TOL {
            violations.push(Violation::SlacknessUnmatched {
                side: Side::Buyer,
                index: b,
                value: duals.buyer[b],
            });
        }
    }
    for s in (0..n).filter(|&s| partner_s[s].is_none()) {
        if duals.seller[s].abs() > DUAL_TOL {
            violations.push(Violation::SlacknessUnmatched {
                side: Side::Seller,
                index: s,
                value: duals.seller[s],
            });
        }
    }
    StabilityReport { violations }
}
