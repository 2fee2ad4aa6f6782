use chrono::{TimeDelta, TimeZone, Utc};
use polarscope::coordination::{co_activity, co_activity_oracle, CoActivityParams, CoKind};
use polarscope::corpus::{assign_phases, PhaseConfig};
use polarscope::fixture::{corpus, TweetBuilder};
use polarscope::inauthenticity::{classify_text, jaccard, TextPattern};
use polarscope::metrics::{ei_index, EiCombine, EiOptions, EiVariant};
use polarscope::report::Table;
use polarscope::{Affiliation, AffiliationMap};
use proptest::prelude::*;

fn group(i: u8) -> Affiliation {
    match i % 3 {
        0 => Affiliation::Supporter,
        1 => Affiliation::Opposer,
        _ => Affiliation::Unaffiliated,
    }
}

prop_compose! {
    fn labeled_edges()(n in 2u32..20)(
        edges in prop::collection::vec((0..n, 0..n, 1u64..10), 0..60),
        labels in prop::collection::vec(0u8..3, n as usize),
    ) -> (Vec<(u32, u32, u64)>, Vec<Affiliation>) {
        (edges, labels.into_iter().map(group).collect())
    }
}

proptest! {
    #[test]
    fn ei_bounded_and_extreme((edges, groups) in labeled_edges()) {
        for variant in [EiVariant::Classic, EiVariant::Modified] {
            let opts = EiOptions { variant, ..Default::default() };
            if let Ok(v) = ei_index::<f64>(&edges, &groups, &opts) {
                prop_assert!((-1.0..=1.0).contains(&v));
            }
        }
        let qualifying: Vec<_> = edges
            .iter()
            .filter(|(s, t, _)| s != t && groups[*s as usize].is_labeled() && groups[*t as usize].is_labeled())
            .collect();
        if !qualifying.is_empty() {
            let v = ei_index::<f64>(&edges, &groups, &EiOptions::default()).unwrap();
            let all_internal = qualifying.iter().all(|(s, t, _)| groups[*s as usize] == groups[*t as usize]);
            let all_external = qualifying.iter().all(|(s, t, _)| groups[*s as usize] != groups[*t as usize]);
            prop_assert_eq!(v == -1.0, all_internal);
            prop_assert_eq!(v == 1.0, all_external);
        }
    }

    #[test]
    fn modified_ei_scale_invariant((edges, groups) in labeled_edges(), k in 2u64..50) {
        let scaled: Vec<_> = edges.iter().map(|&(s, t, w)| (s, t, w * k)).collect();
        for combine in [EiCombine::GroupMean, EiCombine::Pooled] {
            let opts = EiOptions { variant: EiVariant::Modified, combine, ..Default::default() };
            match (ei_index::<f64>(&edges, &groups, &opts), ei_index::<f64>(&scaled, &groups, &opts)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
                (Err(_), Err(_)) => {}
                other => prop_assert!(false, "{other:?}"),
            }
        }
    }

    #[test]
    fn tables_round_trip(
        comments in prop::collection::vec("[^\n\r]{0,20}", 0..3),
        rows in prop::collection::vec(prop::collection::vec(any::<String>(), 3), 0..10),
    ) {
        let mut t = Table::new(&["a", "b", "c"]);
        for c in comments {
            t = t.comment(c);
        }
        for r in rows {
            t.push(r);
        }
        let bytes = t.to_csv().unwrap();
        let back = Table::from_csv(&bytes).unwrap();
        prop_assert_eq!(back.to_csv().unwrap(), bytes);
    }

    #[test]
    fn phases_are_monotone(offsets in prop::collection::vec(0i64..1_000_000, 0..6), probes in prop::collection::vec(0i64..1_000_000, 1..40)) {
        let base = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let mut b: Vec<i64> = offsets;
        b.sort_unstable();
        b.dedup();
        let cfg = PhaseConfig::new(b.iter().map(|&s| base + TimeDelta::seconds(s)).collect(), vec![]).unwrap();
        let mut probes = probes;
        probes.sort_unstable();
        let phases: Vec<usize> = probes.iter().map(|&s| cfg.phase_of(base + TimeDelta::seconds(s))).collect();
        prop_assert!(phases.windows(2).all(|w| w[0] <= w[1]));
        for &s in &b {
            prop_assert_eq!(cfg.phase_of(base + TimeDelta::seconds(s)), cfg.phase_of(base + TimeDelta::seconds(s) - TimeDelta::seconds(1)) + 1);
        }
    }

    #[test]
    fn text_classification_total(text in any::<String>()) {
        let p = classify_text(&text);
        prop_assert!(TextPattern::ALL.contains(&p));
    }

    #[test]
    fn jaccard_symmetric_bounded(a in prop::collection::btree_set("[a-c]{1,2}", 0..6), b in prop::collection::btree_set("[a-c]{1,2}", 0..6)) {
        let x = jaccard(&a, &b);
        prop_assert_eq!(x, jaccard(&b, &a));
        prop_assert!((0.0..=1.0).contains(&x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn co_activity_agrees_with_all_pairs(
        events in prop::collection::vec((0u8..12, 0u8..4, 0i64..600), 0..80),
        gamma in 1i64..120,
        kind in prop::sample::select(vec![CoKind::CoRetweet, CoKind::CoHashtag, CoKind::CoUrl, CoKind::CoDomain, CoKind::CoMention]),
    ) {
        let tweets = events.iter().enumerate().map(|(i, &(a, r, secs))| {
            let b = TweetBuilder::new(&format!("{i:04}"), &format!("a{a}"), secs);
            match kind {
                CoKind::CoRetweet => b.retweet(&format!("orig{r}"), "src"),
                CoKind::CoHashtag => b.hashtags(&[&format!("tag{r}")]),
                CoKind::CoUrl | CoKind::CoDomain => b.urls(&[&format!("https://site{}.example.com/p/{r}", r % 2)]),
                CoKind::CoMention => b.mentions(&[&format!("m{r}")]),
            }
        });
        let phased = assign_phases(corpus(tweets), PhaseConfig::single()).unwrap();
        let params = CoActivityParams::new(kind, TimeDelta::seconds(gamma));
        let g = co_activity(&phased, &AffiliationMap::new("none"), &params).unwrap();
        prop_assert_eq!(g.edge_map(), co_activity_oracle(&phased, &params));
    }
}
