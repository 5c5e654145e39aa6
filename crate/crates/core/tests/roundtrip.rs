use matchscore::ingest::{load_regime, write_fixture, COORDS_FILE, MERGERS_FILE, PANEL_FILE};
use matchscore::synthetic::generate;
use matchscore::*;
use proptest::prelude::*;

fn assert_close(a: &[f64], b: &[f64], what: &str) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= 1e-12, "{what}: {x} vs {y}");
    }
}

fn roundtrip(spec: &SyntheticSpec) {
    let fx = generate(spec).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    write_fixture(tmp.path(), &fx.market, &fx.matches, &fx.coords, spec.year).unwrap();
    let regime = format!("{0}-{0}", spec.year);
    let data = load_regime(
        &tmp.path().join(MERGERS_FILE),
        &tmp.path().join(PANEL_FILE),
        &tmp.path().join(COORDS_FILE),
        &regime,
    )
    .unwrap();
    let (m0, m1) = (&fx.market, &data.market);
    assert_eq!(m1.n(), m0.n());
    assert_eq!(m1.regime(), regime);

    // agents may be reordered; compare by name
    let pos = |firms: &[Firm], name: &str| firms.iter().position(|f| f.name == name).unwrap();
    let bmap: Vec<usize> = m0
        .buyers()
        .iter()
        .map(|f| pos(m1.buyers(), &f.name))
        .collect();
    let smap: Vec<usize> = m0
        .sellers()
        .iter()
        .map(|f| pos(m1.sellers(), &f.name))
        .collect();
    let pick = |v: &[f64], map: &[usize]| map.iter().map(|&i| v[i]).collect::<Vec<_>>();
    assert_close(m0.age_b(), &pick(m1.age_b(), &bmap), "age_b");
    assert_close(m0.size_b(), &pick(m1.size_b(), &bmap), "size_b");
    assert_close(m0.age_s(), &pick(m1.age_s(), &smap), "age_s");
    assert_close(m0.size_s(), &pick(m1.size_s(), &smap), "size_s");
    for (b, &b1) in bmap.iter().enumerate() {
        for (s, &s1) in smap.iter().enumerate() {
            let (d0, d1) = (m0.distance(b, s), m1.distance(b1, s1));
            assert!((d0 - d1).abs() <= 1e-12, "distance ({b},{s}): {d0} vs {d1}");
            assert_eq!(m0.same_country(b, s), m1.same_country(b1, s1));
        }
    }
    assert_eq!(data.matches.len(), fx.matches.len());
    for &(b, s) in fx.matches.pairs() {
        assert!(data.matches.contains(bmap[b], smap[s]));
    }
    if fx.matches.len() >= 2 {
        let beta = ParamVector::new(1.0, 3.0, -1.0);
        assert_eq!(
            score(m0, &fx.matches, &beta).unwrap(),
            score(m1, &data.matches, &beta).unwrap()
        );
    }
}

#[test]
fn noiseless_fixture_roundtrips() {
    roundtrip(&SyntheticSpec::new(
        20,
        ParamVector::new(1.0, 5.0, -2.0),
        11,
    ));
}

#[test]
fn single_country_fixture_roundtrips() {
    roundtrip(&SyntheticSpec {
        country_count: 1,
        ..SyntheticSpec::new(6, ParamVector::new(1.0, 5.0, -2.0), 12)
    });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_fixtures_roundtrip(n in 2usize..16, countries in 1usize..6, sd in 0.0f64..1.5, seed in any::<u64>()) {
        roundtrip(&SyntheticSpec {
            country_count: countries,
            shock_sd: sd,
            ..SyntheticSpec::new(n, ParamVector::new(1.0, 4.0, -1.0), seed)
        });
    }
}
