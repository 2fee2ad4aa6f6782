mod common;

use common::*;
use polarscope::metrics::{
    assortativity, betweenness, centralities, closeness, ei_index, kcore, CentralityOptions,
    ClosenessConvention, EiCombine, EiOptions, EiScope, EiVariant, Orientation,
};
use polarscope::{Affiliation, InteractionKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labels<R: Rng>(rng: &mut R, n: usize, unlabeled: bool) -> Vec<Affiliation> {
    (0..n)
        .map(|_| match rng.gen_range(0..if unlabeled { 3 } else { 2 }) {
            0 => Affiliation::Supporter,
            1 => Affiliation::Opposer,
            _ => Affiliation::Unaffiliated,
        })
        .collect()
}

#[test]
fn centralities_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..30 {
        let n = rng.gen_range(3..=40);
        let p = rng.gen_range(0.0..0.15);
        let net = network(InteractionKind::Reply, &random_connected(&mut rng, n, p));
        let (n, arcs) = arcs_of(&net);
        let rep = centralities::<f64>(&net, &CentralityOptions::default()).unwrap();
        let get = |f: fn(&polarscope::NodeCentrality) -> f64| {
            rep.nodes.iter().map(|(_, c)| f(c)).collect::<Vec<_>>()
        };
        let bet = get(|c| c.betweenness);
        assert!(
            max_abs_diff(&bet, &common::betweenness(n, &arcs, true)) < 1e-9,
            "round {round}"
        );
        assert!(
            max_abs_diff(&get(|c| c.closeness), &closeness_wf(n, &arcs)) < 1e-9,
            "round {round}"
        );
        assert_eq!(get(|c| c.degree), degree(n, &arcs), "round {round}");
        assert!(
            max_abs_diff(&get(|c| c.eigenvector), &eigenvector(n, &arcs)) < 1e-6,
            "round {round}"
        );
    }
}

#[test]
fn undirected_betweenness_and_disconnected_closeness() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let n = rng.gen_range(3..=30);
        let net = network(InteractionKind::Mention, &random_digraph(&mut rng, n, 0.08));
        let (n, arcs) = arcs_of(&net);
        let lib = betweenness::<f64>(&net, Orientation::Undirected);
        assert!(max_abs_diff(&lib, &common::betweenness(n, &arcs, false)) < 1e-9);
        let lib = closeness::<f64>(
            &net,
            ClosenessConvention::WassermanFaust,
            Orientation::Undirected,
        );
        assert!(max_abs_diff(&lib, &closeness_wf(n, &arcs)) < 1e-9);
    }
}

#[test]
fn kcore_matches_peeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..60 {
        let n = rng.gen_range(2..=50);
        let p = rng.gen_range(0.0..0.3);
        let net = network(InteractionKind::Quote, &random_digraph(&mut rng, n, p));
        let (n, arcs) = arcs_of(&net);
        let lib: Vec<u32> = kcore(&net).cores.iter().map(|(_, k)| *k).collect();
        assert_eq!(lib, core_numbers(n, &arcs));
    }
}

#[test]
fn classic_ei_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..300 {
        let n = rng.gen_range(2..=30);
        let p = rng.gen_range(0.0..0.4);
        let arcs = random_digraph(&mut rng, n, p);
        let groups = labels(&mut rng, n, true);
        let edges: Vec<(u32, u32, u64)> = arcs
            .iter()
            .map(|&(s, t, w)| (s as u32, t as u32, w))
            .collect();
        let lib = ei_index::<f64>(&edges, &groups, &EiOptions::default()).ok();
        assert_eq!(lib, ei_classic(&arcs, &groups));
    }
}

#[test]
fn ei_exact_rationals_agree_with_f64() {
    use num_rational::Ratio;
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..100 {
        let n = rng.gen_range(2..=20);
        let edges: Vec<(u32, u32, u64)> = random_digraph(&mut rng, n, 0.3)
            .into_iter()
            .map(|(s, t, w)| (s as u32, t as u32, w))
            .collect();
        let groups = labels(&mut rng, n, false);
        for variant in [EiVariant::Classic, EiVariant::Modified] {
            for combine in [EiCombine::GroupMean, EiCombine::Pooled] {
                let opts = EiOptions {
                    variant,
                    combine,
                    weighted: true,
                    scope: EiScope::LabeledOnly,
                };
                let exact = ei_index::<Ratio<i64>>(&edges, &groups, &opts).ok();
                let float = ei_index::<f64>(&edges, &groups, &opts).ok();
                match (exact, float) {
                    (Some(r), Some(f)) => {
                        assert!((*r.numer() as f64 / *r.denom() as f64 - f).abs() < 1e-12)
                    }
                    (None, None) => {}
                    other => panic!("{other:?}"),
                }
            }
        }
    }
}

#[test]
fn assortativity_matches_newman_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..100 {
        let n = rng.gen_range(2..=25);
        let arcs = random_digraph(&mut rng, n, 0.3);
        let mut net = network(InteractionKind::Retweet, &arcs);
        let (n, arcs) = arcs_of(&net);
        let groups = labels(&mut rng, n, true);
        let mut map = polarscope::AffiliationMap::new("test");
        for (i, g) in groups.iter().enumerate() {
            map.insert(net.node_id(i).to_owned(), *g);
        }
        net = net.with_affiliations(&map);
        // e_ij over both edge directions
        let mut e = [[0.0f64; 2]; 2];
        let mut total = 0.0;
        for &(s, t, w) in &arcs {
            if s == t || !groups[s].is_labeled() || !groups[t].is_labeled() {
                continue;
            }
            let (a, b) = (groups[s].index(), groups[t].index());
            e[a][b] += w as f64;
            e[b][a] += w as f64;
            total += 2.0 * w as f64;
        }
        let lib = assortativity::<f64>(&net).ok();
        if total == 0.0 {
            assert!(lib.is_none());
            continue;
        }
        let tr = (e[0][0] + e[1][1]) / total;
        let a0 = (e[0][0] + e[0][1]) / total;
        let a1 = (e[1][0] + e[1][1]) / total;
        let sq = a0 * a0 + a1 * a1;
        if (1.0 - sq).abs() < 1e-15 {
            assert!(lib.is_none());
        } else {
            assert!((lib.unwrap() - (tr - sq) / (1.0 - sq)).abs() < 1e-12);
        }
    }
}

#[test]
fn f32_centralities_track_f64() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let net = network(InteractionKind::Reply, &random_connected(&mut rng, 30, 0.1));
    let a = centralities::<f64>(&net, &CentralityOptions::default()).unwrap();
    let b = centralities::<f32>(&net, &CentralityOptions::default()).unwrap();
    for ((_, x), (_, y)) in a.nodes.iter().zip(&b.nodes) {
        assert!((x.betweenness - y.betweenness as f64).abs() < 1e-4);
        assert!((x.closeness - y.closeness as f64).abs() < 1e-4);
        assert!((x.eigenvector - y.eigenvector as f64).abs() < 1e-3);
    }
}
