//! Market data model: firms, per-regime normalized characteristics and the
//! buyer-by-seller distance matrix.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower end of the normalized range. The upper end is 1.
pub const NORM_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buyer,
    Seller,
}

/// Capital-city coordinates of a flag country, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capital {
    pub lat: f64,
    pub lon: f64,
}

impl Capital {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(lat.is_finite() && (-90.0..=90.0).contains(&lat)) {
            return Err(Error::validation(format!(
                "latitude {lat} outside [-90, 90]"
            )));
        }
        if !(lon.is_finite() && (-180.0..=180.0).contains(&lon)) {
            return Err(Error::validation(format!(
                "longitude {lon} outside [-180, 180]"
            )));
        }
        Ok(Capital { lat, lon })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Firm {
    pub id: String,
    pub name: String,
    pub side: Side,
    /// Years in the industry.
    pub age_raw: f64,
    /// Operated capacity in TEU.
    pub size_raw: f64,
    pub country: String,
    pub capital: Option<Capital>,
}

impl Firm {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        side: Side,
        age_raw: f64,
        size_raw: f64,
        country: impl Into<String>,
    ) -> Self {
        Firm {
            id: id.into(),
            name: name.into(),
            side,
            age_raw,
            size_raw,
            country: country.into(),
            capital: None,
        }
    }

    pub fn with_capital(mut self, capital: Capital) -> Self {
        self.capital = Some(capital);
        self
    }

    fn validate(&self) -> Result<()> {
        for (what, v) in [("age", self.age_raw), ("size", self.size_raw)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::validation(format!(
                    "firm {:?}: {what} must be finite and non-negative, got {v}",
                    self.name
                )));
            }
        }
        if let Some(c) = self.capital {
            Capital::new(c.lat, c.lon)
                .map_err(|e| Error::validation(format!("firm {:?}: {e}", self.name)))?;
        }
        Ok(())
    }
}

/// Country code to capital-city coordinates. Codes are compared after trimming
/// and upper-casing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoordTable {
    entries: BTreeMap<String, (String, Capital)>,
}

impl CoordTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn key(country: &str) -> String {
        country.trim().to_uppercase()
    }

    pub fn insert(&mut self, country: &str, capital_name: &str, capital: Capital) {
        self.entries
            .insert(Self::key(country), (capital_name.to_string(), capital));
    }

    pub fn get(&self, country: &str) -> Option<Capital> {
        self.entries.get(&Self::key(country)).map(|(_, c)| *c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, Capital)> {
        self.entries
            .iter()
            .map(|(k, (name, c))| (k.as_str(), name.as_str(), *c))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Affine map of `raw` onto `[1e-6, 1]`: the minimum goes to 1e-6 and the
/// maximum to 1. An all-equal vector maps to all ones.
pub fn normalize_vector(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::validation("cannot normalize an empty vector"));
    }
    if let Some(bad) = raw.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::validation(format!(
            "normalization input must be finite and non-negative, got {bad}"
        )));
    }
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![1.0; raw.len()]);
    }
    let range = max - min;
    Ok(raw
        .iter()
        .map(|&x| {
            if x == max {
                1.0
            } else {
                NORM_FLOOR + (1.0 - NORM_FLOOR) * ((x - min) / range)
            }
        })
        .collect())
}

fn same_country(a: &str, b: &str) -> bool {
    CoordTable::key(a) == CoordTable::key(b)
}

/// Raw planar distance between the capitals of two firms' flag countries, in
/// degrees. Firms from the same country are at distance zero.
pub fn pair_distance(b: &Firm, s: &Firm) -> Result<f64> {
    if same_country(&b.country, &s.country) {
        return Ok(0.0);
    }
    match (b.capital, s.capital) {
        (Some(cb), Some(cs)) => Ok((cb.lat - cs.lat).hypot(cb.lon - cs.lon)),
        _ => Err(Error::validation(format!(
            "missing capital coordinates for {:?} ({}) or {:?} ({})",
            b.name, b.country, s.name, s.country
        ))),
    }
}

/// One regime's matching market. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Market {
    regime: String,
    buyers: Vec<Firm>,
    sellers: Vec<Firm>,
    age_b: Vec<f64>,
    age_s: Vec<f64>,
    size_b: Vec<f64>,
    size_s: Vec<f64>,
    /// Row-major `n x n`, buyer-major.
    distance: Vec<f64>,
    same_country: Vec<bool>,
}

/// Build a market from equal-length buyer and seller lists. Ages and sizes are
/// normalized on a scale pooled over both sides; distances are normalized over
/// all `n^2` buyer-seller pairs.
pub fn build_market(
    buyers: Vec<Firm>,
    sellers: Vec<Firm>,
    coords: &CoordTable,
    regime: &str,
) -> Result<Market> {
    if buyers.len() != sellers.len() {
        return Err(Error::validation(format!(
            "market {regime}: {} buyers but {} sellers",
            buyers.len(),
            sellers.len()
        )));
    }
    if buyers.is_empty() {
        return Err(Error::validation(format!("market {regime}: no firms")));
    }
    let n = buyers.len();

    let resolve = |mut f: Firm, side: Side| -> Result<Firm> {
        let cap = coords.get(&f.country).ok_or_else(|| {
            Error::validation(format!(
                "firm {:?}: country code {:?} not in coordinate table",
                f.name, f.country
            ))
        })?;
        f.capital = Some(cap);
        f.side = side;
        f.validate()?;
        Ok(f)
    };
    let buyers = buyers
        .into_iter()
        .map(|f| resolve(f, Side::Buyer))
        .collect::<Result<Vec<_>>>()?;
    let sellers = sellers
        .into_iter()
        .map(|f| resolve(f, Side::Seller))
        .collect::<Result<Vec<_>>>()?;

    let pooled = |get: fn(&Firm) -> f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let raw: Vec<f64> = buyers.iter().chain(sellers.iter()).map(get).collect();
        let mut norm = normalize_vector(&raw)?;
        let s = norm.split_off(n);
        Ok((norm, s))
    };
    let (age_b, age_s) = pooled(|f| f.age_raw)?;
    let (size_b, size_s) = pooled(|f| f.size_raw)?;

    let mut raw_dist = Vec::with_capacity(n * n);
    let mut same = Vec::with_capacity(n * n);
    for b in &buyers {
        for s in &sellers {
            raw_dist.push(pair_distance(b, s)?);
            same.push(same_country(&b.country, &s.country));
        }
    }
    let mut distance = normalize_vector(&raw_dist)?;
    // Same-country pairs sit at the floor whenever the matrix is not degenerate.
    if same.iter().any(|s| !s) {
        for (d, &sc) in distance.iter_mut().zip(&same) {
            if sc {
                *d = NORM_FLOOR;
            }
        }
    }

    let market = Market {
        regime: regime.to_string(),
        buyers,
        sellers,
        age_b,
        age_s,
        size_b,
        size_s,
        distance,
        same_country: same,
    };
    market.check_invariants()?;
    Ok(market)
}

impl Market {
    pub fn regime(&self) -> &str {
        &self.regime
    }

    /// Number of buyers, equal to the number of sellers.
    pub fn n(&self) -> usize {
        self.buyers.len()
    }

    pub fn buyers(&self) -> &[Firm] {
        &self.buyers
    }

    pub fn sellers(&self) -> &[Firm] {
        &self.sellers
    }

    pub fn age_b(&self) -> &[f64] {
        &self.age_b
    }

    pub fn age_s(&self) -> &[f64] {
        &self.age_s
    }

    pub fn size_b(&self) -> &[f64] {
        &self.size_b
    }

    pub fn size_s(&self) -> &[f64] {
        &self.size_s
    }

    pub fn distance(&self, b: usize, s: usize) -> f64 {
        self.distance[b * self.n() + s]
    }

    pub fn same_country(&self, b: usize, s: usize) -> bool {
        self.same_country[b * self.n() + s]
    }

    /// Normalized `(age_b*age_s, size_b*size_s, distance)` for a pair, the
    /// regressors of the joint production function.
    pub fn features(&self, b: usize, s: usize) -> [f64; 3] {
        [
            self.age_b[b] * self.age_s[s],
            self.size_b[b] * self.size_s[s],
            self.distance(b, s),
        ]
    }

    /// Market from already-normalized characteristics, bypassing raw data.
    /// Firms get placeholder names and countries: same-country pairs are
    /// exactly those whose distance is 1e-6.
    pub fn from_normalized(
        regime: &str,
        age_b: Vec<f64>,
        age_s: Vec<f64>,
        size_b: Vec<f64>,
        size_s: Vec<f64>,
        distance: Vec<Vec<f64>>,
    ) -> Result<Market> {
        let n = age_b.len();
        if [age_s.len(), size_b.len(), size_s.len(), distance.len()]
            .iter()
            .any(|&l| l != n)
            || distance.iter().any(|row| row.len() != n)
            || n == 0
        {
            return Err(Error::validation(
                "inconsistent normalized market dimensions",
            ));
        }
        let distance: Vec<f64> = distance.into_iter().flatten().collect();
        let same_country = distance.iter().map(|&d| d == NORM_FLOOR).collect();
        let placeholder = |side: Side, i: usize, age: f64, size: f64| {
            let tag = if side == Side::Buyer { "b" } else { "s" };
            Firm::new(
                format!("{tag}{i}"),
                format!("{tag}{i}"),
                side,
                age,
                size,
                "",
            )
        };
        let buyers = (0..n)
            .map(|i| placeholder(Side::Buyer, i, age_b[i], size_b[i]))
            .collect();
        let sellers = (0..n)
            .map(|i| placeholder(Side::Seller, i, age_s[i], size_s[i]))
            .collect();
        let market = Market {
            regime: regime.to_string(),
            buyers,
            sellers,
            age_b,
            age_s,
            size_b,
            size_s,
            distance,
            same_country,
        };
        market.check_invariants()?;
        Ok(market)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n();
        if self.sellers.len() != n {
            return Err(Error::validation("unequal market sides"));
        }
        let in_range = |v: &f64| (NORM_FLOOR..=1.0).contains(v);
        for (name, vals) in [
            ("age_b", &self.age_b),
            ("age_s", &self.age_s),
            ("size_b", &self.size_b),
            ("size_s", &self.size_s),
            ("distance", &self.distance),
        ] {
            if let Some(v) = vals.iter().find(|v| !in_range(v)) {
                return Err(Error::validation(format!(
                    "{name} entry {v} outside [1e-6, 1]"
                )));
            }
        }
        if self.same_country.iter().any(|s| !s) {
            for (d, &sc) in self.distance.iter().zip(&self.same_country) {
                if sc && *d != NORM_FLOOR {
                    return Err(Error::validation(
                        "same-country pair off the distance floor",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Observed one-to-one matching as `(buyer_index, seller_index)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchList {
    pairs: Vec<(usize, usize)>,
}

impl MatchList {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen_b = BTreeSet::new();
        let mut seen_s = BTreeSet::new();
        for &(b, s) in &pairs {
            if !seen_b.insert(b) {
                return Err(Error::validation(format!("buyer {b} matched twice")));
            }
            if !seen_s.insert(s) {
                return Err(Error::validation(format!("seller {s} matched twice")));
            }
        }
        Ok(MatchList { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, b: usize, s: usize) -> bool {
        self.pairs.contains(&(b, s))
    }

    /// Error unless every index is valid for `market`.
    pub fn check_against(&self, market: &Market) -> Result<()> {
        let n = market.n();
        match self.pairs.iter().find(|(b, s)| *b >= n || *s >= n) {
            Some((b, s)) => Err(Error::validation(format!(
                "matched pair ({b}, {s}) out of range for a market of size {n}"
            ))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn firm(name: &str, side: Side, age: f64, size: f64, country: &str) -> Firm {
        Firm::new(name, name, side, age, size, country)
    }

    fn coords() -> CoordTable {
        let mut t = CoordTable::new();
        t.insert("JP", "Tokyo", Capital::new(35.68, 139.69).unwrap());
        t.insert("KR", "Seoul", Capital::new(37.57, 126.98).unwrap());
        t.insert("A", "a", Capital::new(0.0, 0.0).unwrap());
        t.insert("B", "b", Capital::new(3.0, 4.0).unwrap());
        t
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_vector(&[10.0]).unwrap(), vec![1.0]);
        assert_eq!(normalize_vector(&[10.0, 30.0]).unwrap(), vec![1e-6, 1.0]);
        let v = normalize_vector(&[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(v[0], 1e-6);
        assert!((v[1] - 0.5000005).abs() < 1e-15);
        assert_eq!(v[2], 1.0);
    }

    #[test]
    fn normalize_rejects_bad_input() {
        assert!(normalize_vector(&[]).is_err());
        assert!(normalize_vector(&[1.0, f64::NAN]).is_err());
        assert!(normalize_vector(&[1.0, f64::INFINITY]).is_err());
        assert!(normalize_vector(&[-1.0, 2.0]).is_err());
    }

    #[test]
    fn distance_examples() {
        let a = firm("a", Side::Buyer, 1.0, 1.0, "A").with_capital(Capital::new(0.0, 0.0).unwrap());
        let b =
            firm("b", Side::Seller, 1.0, 1.0, "B").with_capital(Capital::new(3.0, 4.0).unwrap());
        assert_eq!(pair_distance(&a, &b).unwrap(), 5.0);

        let tokyo = firm("t", Side::Buyer, 1.0, 1.0, "JP")
            .with_capital(Capital::new(35.68, 139.69).unwrap());
        let seoul = firm("s", Side::Seller, 1.0, 1.0, "KR")
            .with_capital(Capital::new(37.57, 126.98).unwrap());
        // sqrt(1.89^2 + 12.71^2)
        let d = pair_distance(&tokyo, &seoul).unwrap();
        assert!((d - 12.849_754_86).abs() < 1e-6, "{d}");

        // same country: coordinates irrelevant, even absent
        let x = firm("x", Side::Buyer, 1.0, 1.0, "JP");
        let y = firm("y", Side::Seller, 1.0, 1.0, "jp ");
        assert_eq!(pair_distance(&x, &y).unwrap(), 0.0);
        let z = firm("z", Side::Seller, 1.0, 1.0, "KR");
        assert!(pair_distance(&x, &z).is_err());
    }

    #[test]
    fn all_same_country_gives_degenerate_distance() {
        let m = build_market(
            vec![
                firm("b0", Side::Buyer, 1.0, 2.0, "JP"),
                firm("b1", Side::Buyer, 3.0, 4.0, "JP"),
            ],
            vec![
                firm("s0", Side::Seller, 5.0, 6.0, "JP"),
                firm("s1", Side::Seller, 7.0, 8.0, "JP"),
            ],
            &coords(),
            "r",
        )
        .unwrap();
        for b in 0..2 {
            for s in 0..2 {
                assert_eq!(m.distance(b, s), 1.0);
                assert!(m.same_country(b, s));
            }
        }
    }

    #[test]
    fn mixed_countries_hit_both_endpoints() {
        let m = build_market(
            vec![
                firm("b0", Side::Buyer, 1.0, 2.0, "JP"),
                firm("b1", Side::Buyer, 3.0, 4.0, "KR"),
            ],
            vec![
                firm("s0", Side::Seller, 5.0, 6.0, "JP"),
                firm("s1", Side::Seller, 7.0, 8.0, "A"),
            ],
            &coords(),
            "r",
        )
        .unwrap();
        assert_eq!(m.distance(0, 0), 1e-6);
        let max = (0..2)
            .flat_map(|b| (0..2).map(move |s| (b, s)))
            .map(|(b, s)| m.distance(b, s))
            .fold(0.0, f64::max);
        assert_eq!(max, 1.0);
        // pooled normalization: min age over both sides is buyer 0, max is seller 1
        assert_eq!(m.age_b()[0], 1e-6);
        assert_eq!(m.age_s()[1], 1.0);
    }

    #[test]
    fn build_market_errors() {
        let c = coords();
        assert!(build_market(
            vec![firm("b", Side::Buyer, 1.0, 1.0, "JP")],
            vec![],
            &c,
            "r"
        )
        .is_err());
        assert!(build_market(
            vec![firm("b", Side::Buyer, 1.0, 1.0, "XX")],
            vec![firm("s", Side::Seller, 1.0, 1.0, "JP")],
            &c,
            "r"
        )
        .is_err());
    }

    #[test]
    fn match_list_rejects_repeats() {
        assert!(MatchList::new(vec![(0, 0), (0, 1)]).is_err());
        assert!(MatchList::new(vec![(0, 1), (1, 1)]).is_err());
        assert!(MatchList::new(vec![(0, 1), (1, 0)]).is_ok());
    }

    proptest! {
        #[test]
        fn normalize_is_monotone_and_affine_invariant(
            raw in prop::collection::vec(0.0f64..1e4, 1..30),
            a in 0.1f64..10.0,
            c in 0.0f64..100.0,
        ) {
            let out = normalize_vector(&raw).unwrap();
            for i in 0..raw.len() {
                prop_assert!((1e-6..=1.0).contains(&out[i]));
                for j in 0..raw.len() {
                    if raw[i] <= raw[j] {
                        prop_assert!(out[i] <= out[j]);
                    }
                }
            }
            let moved: Vec<f64> = raw.iter().map(|x| a * x + c).collect();
            let out2 = normalize_vector(&moved).unwrap();
            for (x, y) in out.iter().zip(&out2) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
