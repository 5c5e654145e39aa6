//! CSV inputs: merger lists, firm-year panels and capital coordinates.
//!
//! ```text
//! mergers.csv  id,seller,buyer,year,type
//! panel.csv    firm,year,age_years,size_teu,country
//! coords.csv   country,capital,lat,lon
//! ```
//!
//! Columns are matched by header name. Each merger row contributes one buyer
//! and one seller to its regime's market, in row-id order, so a firm that buys
//! twice appears as two agents with its characteristics at each merger year.
//! `type` is `merger`, `acquisition`, `consolidation` (the buyer is a newly
//! formed entity and takes the regime's minimum age and size) or `unmatched`
//! (exactly one of seller/buyer is given: an agent present in the market that
//! did not merge).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{build_market, Capital, CoordTable, Firm, Market, MatchList, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergerType {
    Merger,
    Acquisition,
    Consolidation,
    Unmatched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergerRecord {
    pub id: String,
    pub seller: String,
    pub buyer: String,
    pub year: i32,
    #[serde(rename = "type")]
    pub merger_type: MergerType,
}

impl MergerRecord {
    pub fn is_match(&self) -> bool {
        self.merger_type != MergerType::Unmatched
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmYearRecord {
    pub firm: String,
    pub year: i32,
    pub age_years: f64,
    pub size_teu: f64,
    pub country: String,
}

#[derive(Debug, Deserialize)]
struct CoordRow {
    country: String,
    capital: String,
    lat: f64,
    lon: f64,
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn check_headers<R: Read>(rdr: &mut csv::Reader<R>, required: &[&str], what: &str) -> Result<()> {
    let headers = rdr.headers()?.clone();
    let missing: Vec<&str> = required
        .iter()
        .copied()
        .filter(|h| !headers.iter().any(|x| x == *h))
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "{what}: missing column(s) {}",
            missing.join(", ")
        )))
    }
}

pub fn read_mergers<R: Read>(r: R) -> Result<Vec<MergerRecord>> {
    let mut rdr = reader(r);
    check_headers(
        &mut rdr,
        &["id", "seller", "buyer", "year", "type"],
        "mergers",
    )?;
    let records: Vec<MergerRecord> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    for rec in &records {
        let ok = match rec.merger_type {
            MergerType::Unmatched => rec.seller.is_empty() != rec.buyer.is_empty(),
            _ => !rec.seller.is_empty() && !rec.buyer.is_empty(),
        };
        if !ok {
            return Err(Error::validation(format!(
                "merger {}: seller/buyer names are inconsistent with type {:?}",
                rec.id, rec.merger_type
            )));
        }
    }
    Ok(records)
}

pub fn read_panel<R: Read>(r: R) -> Result<Vec<FirmYearRecord>> {
    let mut rdr = reader(r);
    check_headers(
        &mut rdr,
        &["firm", "year", "age_years", "size_teu", "country"],
        "panel",
    )?;
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_coords<R: Read>(r: R) -> Result<CoordTable> {
    let mut rdr = reader(r);
    check_headers(&mut rdr, &["country", "capital", "lat", "lon"], "coords")?;
    let mut table = CoordTable::new();
    for row in rdr.deserialize::<CoordRow>() {
        let row = row?;
        let cap = Capital::new(row.lat, row.lon)
            .map_err(|e| Error::validation(format!("coords {}: {e}", row.country)))?;
        table.insert(&row.country, &row.capital, cap);
    }
    Ok(table)
}

pub fn load_mergers(path: &Path) -> Result<Vec<MergerRecord>> {
    read_mergers(open(path)?)
}

pub fn load_panel(path: &Path) -> Result<Vec<FirmYearRecord>> {
    read_panel(open(path)?)
}

pub fn load_coords(path: &Path) -> Result<CoordTable> {
    read_coords(open(path)?)
}

/// Inclusive year range from a label like `1991-2005`.
pub fn parse_regime(label: &str) -> Result<(i32, i32)> {
    let bad = || Error::validation(format!("regime {label:?} is not of the form YYYY-YYYY"));
    let (a, b) = label.trim().split_once('-').ok_or_else(bad)?;
    let lo: i32 = a.trim().parse().map_err(|_| bad())?;
    let hi: i32 = b.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn firm_key(name: &str) -> String {
    name.trim().to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    Gap {
        firm: String,
        missing_years: Vec<i32>,
    },
    NegativeValue {
        firm: String,
        year: i32,
        field: String,
        value: f64,
    },
    NeverActive {
        firm: String,
    },
    CarryForward {
        firm: String,
        merger_year: i32,
        used_year: i32,
    },
    DuplicateRow {
        firm: String,
        year: i32,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PanelDiagnostics {
    /// Informational: the data is usable but a rule was applied.
    pub notices: Vec<Diagnostic>,
    /// Hard problems that make the panel unusable.
    pub violations: Vec<Diagnostic>,
}

impl PanelDiagnostics {
    pub fn is_empty(&self) -> bool {
        self.notices.is_empty() && self.violations.is_empty()
    }
}

struct PanelIndex<'a> {
    by_firm: HashMap<String, Vec<&'a FirmYearRecord>>,
}

impl<'a> PanelIndex<'a> {
    fn new(panel: &'a [FirmYearRecord]) -> Self {
        let mut by_firm: HashMap<String, Vec<&FirmYearRecord>> = HashMap::new();
        for row in panel {
            by_firm.entry(firm_key(&row.firm)).or_default().push(row);
        }
        for rows in by_firm.values_mut() {
            rows.sort_by_key(|r| r.year);
        }
        PanelIndex { by_firm }
    }

    /// Latest row at or before `year`.
    fn at_or_before(&self, firm: &str, year: i32) -> Option<&'a FirmYearRecord> {
        self.by_firm
            .get(&firm_key(firm))?
            .iter()
            .rev()
            .find(|r| r.year <= year)
            .copied()
    }

    /// Earliest row after `year`.
    fn after(&self, firm: &str, year: i32) -> Option<&'a FirmYearRecord> {
        self.by_firm
            .get(&firm_key(firm))?
            .iter()
            .find(|r| r.year > year)
            .copied()
    }
}

/// Participants of a merger record as `(side, name)`.
fn participants(rec: &MergerRecord) -> impl Iterator<Item = (Side, &str)> {
    [
        (Side::Buyer, rec.buyer.as_str()),
        (Side::Seller, rec.seller.as_str()),
    ]
    .into_iter()
    .filter(|(_, n)| !n.is_empty())
}

/// Check a panel for internal gaps, negative values, firms never active and
/// duplicate firm-years, and report where merger participants rely on
/// carry-forward of an earlier year.
pub fn validate_panel(panel: &[FirmYearRecord], mergers: &[MergerRecord]) -> PanelDiagnostics {
    let mut diag = PanelDiagnostics::default();
    let mut firms: BTreeMap<String, (String, Vec<&FirmYearRecord>)> = BTreeMap::new();
    for row in panel {
        firms
            .entry(firm_key(&row.firm))
            .or_insert_with(|| (row.firm.trim().to_string(), Vec::new()))
            .1
            .push(row);
        for (field, value) in [("age_years", row.age_years), ("size_teu", row.size_teu)] {
            if !value.is_finite() || value < 0.0 {
                diag.violations.push(Diagnostic::NegativeValue {
                    firm: row.firm.clone(),
                    year: row.year,
                    field: field.into(),
                    value,
                });
            }
        }
    }
    for (name, rows) in firms.values() {
        let years: BTreeSet<i32> = rows.iter().map(|r| r.year).collect();
        if years.len() != rows.len() {
            let mut seen = BTreeSet::new();
            for r in rows {
                if !seen.insert(r.year) {
                    diag.violations.push(Diagnostic::DuplicateRow {
                        firm: name.clone(),
                        year: r.year,
                    });
                }
            }
        }
        let (first, last) = (*years.first().unwrap(), *years.last().unwrap());
        let missing: Vec<i32> = (first..=last).filter(|y| !years.contains(y)).collect();
        if !missing.is_empty() {
            diag.notices.push(Diagnostic::Gap {
                firm: name.clone(),
                missing_years: missing,
            });
        }
        if rows.iter().all(|r| r.size_teu == 0.0) {
            diag.notices
                .push(Diagnostic::NeverActive { firm: name.clone() });
        }
    }

    let index = PanelIndex::new(panel);
    for rec in mergers {
        for (side, name) in participants(rec) {
            if side == Side::Buyer && rec.merger_type == MergerType::Consolidation {
                continue;
            }
            if let Some(row) = index.at_or_before(name, rec.year) {
                if row.year < rec.year {
                    diag.notices.push(Diagnostic::CarryForward {
                        firm: name.to_string(),
                        merger_year: rec.year,
                        used_year: row.year,
                    });
                }
            }
        }
    }
    diag
}

/// One regime's market and observed matching, with the panel diagnostics.
#[derive(Debug, Clone)]
pub struct RegimeData {
    pub market: Market,
    pub matches: MatchList,
    pub records: Vec<MergerRecord>,
    pub diagnostics: PanelDiagnostics,
}

/// Assemble a regime from parsed inputs. Records outside the regime's years
/// are ignored; the rest are ordered by id.
pub fn assemble_regime(
    mergers: &[MergerRecord],
    panel: &[FirmYearRecord],
    coords: &CoordTable,
    regime: &str,
) -> Result<RegimeData> {
    let (lo, hi) = parse_regime(regime)?;
    let mut records: Vec<MergerRecord> = mergers
        .iter()
        .filter(|r| (lo..=hi).contains(&r.year))
        .cloned()
        .collect();
    if records.is_empty() {
        return Err(Error::validation(format!(
            "no merger records in regime {regime}"
        )));
    }
    records.sort_by(|a, b| match (a.id.parse::<u64>(), b.id.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.id.cmp(&b.id),
    });

    let mut offenders = Vec::new();
    let mut ids = BTreeSet::new();
    let mut rows = BTreeSet::new();
    for r in &records {
        if !ids.insert(r.id.clone()) {
            offenders.push(format!("duplicate id {}", r.id));
        }
        if !rows.insert((firm_key(&r.seller), firm_key(&r.buyer), r.year)) {
            offenders.push(format!(
                "duplicate record {} ({} -> {}, {})",
                r.id, r.seller, r.buyer, r.year
            ));
        }
    }
    if !offenders.is_empty() {
        return Err(Error::validation(format!(
            "regime {regime}: {}",
            offenders.join("; ")
        )));
    }

    let diagnostics = validate_panel(panel, &records);
    if !diagnostics.violations.is_empty() {
        return Err(Error::validation(format!(
            "panel has {} hard violation(s): {:?}",
            diagnostics.violations.len(),
            diagnostics.violations
        )));
    }

    let index = PanelIndex::new(panel);
    let mut unresolved = Vec::new();
    let mut resolve = |name: &str, year: i32, forward_ok: bool| -> Option<&FirmYearRecord> {
        let row = index.at_or_before(name, year).or_else(|| {
            if forward_ok {
                index.after(name, year)
            } else {
                None
            }
        });
        if row.is_none() {
            unresolved.push(format!("{name} ({year})"));
        }
        row
    };

    // Consolidation buyers take the regime minimum over all other participants.
    let mut raw: Vec<(Side, &MergerRecord, Option<&FirmYearRecord>, bool)> = Vec::new();
    for rec in &records {
        for (side, name) in participants(rec) {
            let consolidation = side == Side::Buyer && rec.merger_type == MergerType::Consolidation;
            raw.push((
                side,
                rec,
                resolve(name, rec.year, consolidation),
                consolidation,
            ));
        }
    }
    if !unresolved.is_empty() {
        return Err(Error::validation(format!(
            "regime {regime}: firm(s) not found in panel: {}",
            unresolved.join(", ")
        )));
    }
    let regular = raw.iter().filter(|r| !r.3).filter_map(|r| r.2);
    let (min_age, min_size) = regular.fold((f64::INFINITY, f64::INFINITY), |(a, s), row| {
        (a.min(row.age_years), s.min(row.size_teu))
    });

    let mut buyers = Vec::new();
    let mut sellers = Vec::new();
    let mut pairs = Vec::new();
    let mut pending: Option<(usize, usize)> = None;
    for (side, rec, row, consolidation) in raw {
        let row = row.expect("unresolved rows rejected above");
        let (age, size) = if consolidation {
            if min_age.is_finite() {
                (min_age, min_size)
            } else {
                (0.0, 0.0)
            }
        } else {
            (row.age_years, row.size_teu)
        };
        let name = match side {
            Side::Buyer => &rec.buyer,
            Side::Seller => &rec.seller,
        };
        let firm = Firm::new(
            format!("{}:{}", rec.id, name),
            name.clone(),
            side,
            age,
            size,
            row.country.clone(),
        );
        match side {
            Side::Buyer => buyers.push(firm),
            Side::Seller => sellers.push(firm),
        }
        if rec.is_match() {
            let entry = pending.get_or_insert((usize::MAX, usize::MAX));
            match side {
                Side::Buyer => entry.0 = buyers.len() - 1,
                Side::Seller => entry.1 = sellers.len() - 1,
            }
            if entry.0 != usize::MAX && entry.1 != usize::MAX {
                pairs.push(*entry);
                pending = None;
            }
        }
    }

    let market = build_market(buyers, sellers, coords, regime)?;
    let matches = MatchList::new(pairs)?;
    Ok(RegimeData {
        market,
        matches,
        records,
        diagnostics,
    })
}

/// Read the three CSV files and assemble one regime.
pub fn load_regime(
    mergers: &Path,
    panel: &Path,
    coords: &Path,
    regime: &str,
) -> Result<RegimeData> {
    let m = load_mergers(mergers)?;
    let p = load_panel(panel)?;
    let c = load_coords(coords)?;
    assemble_regime(&m, &p, &c, regime)
}

/// File names used by [`write_fixture`].
pub const MERGERS_FILE: &str = "mergers.csv";
pub const PANEL_FILE: &str = "panel.csv";
pub const COORDS_FILE: &str = "coords.csv";

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

/// Persist a market and its matching in the three CSV formats under `dir`,
/// stamping every row with `year`. Loading the result with regime
/// `"{year}-{year}"` reproduces the market's characteristics, with buyers in
/// the same order.
pub fn write_fixture(
    dir: &Path,
    market: &Market,
    matches: &MatchList,
    coords: &CoordTable,
    year: i32,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let n = market.n();
    let mut seller_of = vec![None; n];
    let mut seller_used = vec![false; n];
    for &(b, s) in matches.pairs() {
        seller_of[b] = Some(s);
        seller_used[s] = true;
    }

    let mut w = csv::Writer::from_writer(create(&dir.join(MERGERS_FILE))?);
    let mut id = 0;
    let mut row =
        |w: &mut csv::Writer<File>, seller: &str, buyer: &str, t: MergerType| -> Result<()> {
            id += 1;
            w.serialize(MergerRecord {
                id: id.to_string(),
                seller: seller.to_string(),
                buyer: buyer.to_string(),
                year,
                merger_type: t,
            })?;
            Ok(())
        };
    for (buyer, seller) in market.buyers().iter().zip(&seller_of) {
        let buyer = &buyer.name;
        match *seller {
            Some(s) => row(&mut w, &market.sellers()[s].name, buyer, MergerType::Merger)?,
            None => row(&mut w, "", buyer, MergerType::Unmatched)?,
        }
    }
    for s in (0..n).filter(|&s| !seller_used[s]) {
        row(&mut w, &market.sellers()[s].name, "", MergerType::Unmatched)?;
    }
    w.flush()
        .map_err(|e| Error::io(dir.join(MERGERS_FILE), e))?;

    let mut w = csv::Writer::from_writer(create(&dir.join(PANEL_FILE))?);
    for f in market.buyers().iter().chain(market.sellers()) {
        w.serialize(FirmYearRecord {
            firm: f.name.clone(),
            year,
            age_years: f.age_raw,
            size_teu: f.size_raw,
            country: f.country.clone(),
        })?;
    }
    w.flush().map_err(|e| Error::io(dir.join(PANEL_FILE), e))?;

    let path = dir.join(COORDS_FILE);
    let mut out = create(&path)?;
    let mut text = String::from("country,capital,lat,lon\n");
    for (code, name, cap) in coords.iter() {
        text.push_str(&format!("{code},{name},{:?},{:?}\n", cap.lat, cap.lon));
    }
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io(&path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const COORDS: &str = "country,capital,lat,lon\nKR,Seoul,37.57,126.98\nJP,Tokyo,35.68,139.69\nDK,Copenhagen,55.68,12.57\n";

    #[test]
    fn parses_table_row() {
        let csv = "id,seller,buyer,year,type\n6,KSC,Hanjin,1988,merger\n";
        let recs = read_mergers(csv.as_bytes()).unwrap();
        assert_eq!(
            recs[0],
            MergerRecord {
                id: "6".into(),
                seller: "KSC".into(),
                buyer: "Hanjin".into(),
                year: 1988,
                merger_type: MergerType::Merger,
            }
        );
    }

    #[test]
    fn columns_matched_by_name() {
        let csv = "type,year,buyer,seller,id\nacquisition,1996, A P MOLLER ,SVITZER AS,1\n";
        let recs = read_mergers(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].buyer, "A P MOLLER");
        assert_eq!(recs[0].merger_type, MergerType::Acquisition);
        assert!(read_mergers("id,seller,year,type\n1,a,1990,merger\n".as_bytes()).is_err());
        assert!(read_mergers("id,seller,buyer,year,type\n1,a,b,1990,swap\n".as_bytes()).is_err());
    }

    fn panel(rows: &[(&str, i32, f64, f64, &str)]) -> Vec<FirmYearRecord> {
        rows.iter()
            .map(|&(f, y, a, s, c)| FirmYearRecord {
                firm: f.into(),
                year: y,
                age_years: a,
                size_teu: s,
                country: c.into(),
            })
            .collect()
    }

    fn rec(id: &str, seller: &str, buyer: &str, year: i32, t: MergerType) -> MergerRecord {
        MergerRecord {
            id: id.into(),
            seller: seller.into(),
            buyer: buyer.into(),
            year,
            merger_type: t,
        }
    }

    #[test]
    fn diagnostics() {
        let clean = panel(&[("A", 1990, 5.0, 100.0, "JP"), ("A", 1991, 6.0, 120.0, "JP")]);
        let m = [rec("1", "A", "A", 1991, MergerType::Merger)];
        assert!(validate_panel(&clean, &m).is_empty());

        let earlier = panel(&[("A", 1990, 5.0, 100.0, "JP")]);
        let d = validate_panel(&earlier, &[rec("1", "A", "Z", 1992, MergerType::Merger)]);
        assert_eq!(
            d.notices,
            vec![Diagnostic::CarryForward {
                firm: "A".into(),
                merger_year: 1992,
                used_year: 1990
            }]
        );
        assert!(d.violations.is_empty());

        let neg = panel(&[("A", 1990, 5.0, -1.0, "JP")]);
        let d = validate_panel(&neg, &[]);
        assert_eq!(d.violations.len(), 1);

        let gappy = panel(&[
            ("A", 1990, 5.0, 1.0, "JP"),
            ("A", 1993, 8.0, 1.0, "JP"),
            ("B", 1990, 1.0, 0.0, "KR"),
        ]);
        let d = validate_panel(&gappy, &[]);
        assert!(d.notices.contains(&Diagnostic::Gap {
            firm: "A".into(),
            missing_years: vec![1991, 1992]
        }));
        assert!(d
            .notices
            .contains(&Diagnostic::NeverActive { firm: "B".into() }));
    }

    fn sample_panel() -> Vec<FirmYearRecord> {
        panel(&[
            ("Hanjin", 1987, 10.0, 50_000.0, "KR"),
            ("KSC", 1988, 20.0, 10_000.0, "KR"),
            ("NLS", 1988, 1.0, 30_000.0, "JP"),
            ("Y-S Line", 1988, 15.0, 8_000.0, "JP"),
            ("Japan Line", 1986, 25.0, 12_000.0, "JP"),
            ("Maersk", 1986, 30.0, 90_000.0, "DK"),
            ("Franco-Belgian Services", 1986, 18.0, 5_000.0, "DK"),
        ])
    }

    #[test]
    fn assembles_regime_with_repeat_buyers_and_carry_forward() {
        let coords = read_coords(COORDS.as_bytes()).unwrap();
        let mergers = vec![
            rec("6", "KSC", "Hanjin", 1988, MergerType::Merger),
            rec("4", "Y-S Line", "NLS", 1988, MergerType::Merger),
            rec("5", "Japan Line", "NLS", 1988, MergerType::Merger),
            rec(
                "3",
                "Franco-Belgian Services",
                "Maersk",
                1986,
                MergerType::Merger,
            ),
            rec("9", "X", "Y", 1995, MergerType::Merger), // outside the regime
        ];
        let r = assemble_regime(&mergers, &sample_panel(), &coords, "1966-1990").unwrap();
        assert_eq!(r.matches.len(), 4);
        assert_eq!(r.matches.pairs(), &[(0, 0), (1, 1), (2, 2), (3, 3)]);
        // ordered by numeric id: 3, 4, 5, 6
        assert_eq!(r.market.buyers()[0].name, "Maersk");
        assert_eq!(r.market.sellers()[3].name, "KSC");
        // Hanjin carried forward from 1987, Japan Line from 1986
        assert!(r.diagnostics.notices.len() >= 2);
        // NLS buys twice and is two agents
        assert_eq!(r.market.buyers()[1].name, r.market.buyers()[2].name);
        // Same-country pairs sit at the floor.
        assert_eq!(r.market.distance(3, 3), 1e-6);
    }

    #[test]
    fn consolidation_buyer_takes_regime_minimum() {
        let coords = read_coords(COORDS.as_bytes()).unwrap();
        let mut p = sample_panel();
        p.push(FirmYearRecord {
            firm: "ONE".into(),
            year: 1990,
            age_years: 0.0,
            size_teu: 0.0,
            country: "JP".into(),
        });
        let mergers = vec![
            rec("1", "KSC", "Hanjin", 1988, MergerType::Merger),
            rec("2", "Japan Line", "ONE", 1988, MergerType::Consolidation),
            rec(
                "3",
                "Franco-Belgian Services",
                "Maersk",
                1986,
                MergerType::Merger,
            ),
        ];
        let r = assemble_regime(&mergers, &p, &coords, "1966-1990").unwrap();
        assert_eq!(r.market.age_b()[1], 1e-6);
        assert_eq!(r.market.size_b()[1], 1e-6);
        assert_eq!(r.market.buyers()[1].age_raw, 10.0);
        assert_eq!(r.market.buyers()[1].size_raw, 5_000.0);
    }

    #[test]
    fn hard_errors() {
        let coords = read_coords(COORDS.as_bytes()).unwrap();
        let p = sample_panel();
        let unknown = vec![rec("1", "Nobody", "Hanjin", 1988, MergerType::Merger)];
        let e = assemble_regime(&unknown, &p, &coords, "1966-1990").unwrap_err();
        assert!(e.to_string().contains("Nobody"));

        let dup = vec![
            rec("1", "KSC", "Hanjin", 1988, MergerType::Merger),
            rec("1", "Y-S Line", "NLS", 1988, MergerType::Merger),
        ];
        assert!(assemble_regime(&dup, &p, &coords, "1966-1990").is_err());
        let dup_row = vec![
            rec("1", "KSC", "Hanjin", 1988, MergerType::Merger),
            rec("2", "KSC", "Hanjin", 1988, MergerType::Merger),
        ];
        assert!(assemble_regime(&dup_row, &p, &coords, "1966-1990").is_err());

        let no_coords =
            read_coords("country,capital,lat,lon\nKR,Seoul,37.57,126.98\n".as_bytes()).unwrap();
        let m = vec![rec("1", "Y-S Line", "Hanjin", 1988, MergerType::Merger)];
        assert!(assemble_regime(&m, &p, &no_coords, "1966-1990").is_err());

        assert!(parse_regime("1991").is_err());
        assert!(parse_regime("2005-1991").is_err());
        assert_eq!(parse_regime("1991-2005").unwrap(), (1991, 2005));
    }

    #[test]
    fn unmatched_rows_add_agents_without_matches() {
        let coords = read_coords(COORDS.as_bytes()).unwrap();
        let m = vec![
            rec("1", "KSC", "Hanjin", 1988, MergerType::Merger),
            rec("2", "", "Maersk", 1988, MergerType::Unmatched),
            rec("3", "Y-S Line", "", 1988, MergerType::Unmatched),
        ];
        let r = assemble_regime(&m, &sample_panel(), &coords, "1966-1990").unwrap();
        assert_eq!(r.market.n(), 2);
        assert_eq!(r.matches.pairs(), &[(0, 0)]);
    }
}
