//! Brute-force reference implementations shared by the oracle and
//! acceptance tests. Everything here works from a plain arc list and
//! deliberately avoids the library's own graph code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use nalgebra::{DMatrix, SymmetricEigen};
use polarscope::network::InteractionNetwork;
use polarscope::{Affiliation, InteractionKind};
use rand::Rng;

pub type Arc = (usize, usize, u64);

/// Random weighted digraph on `n` nodes whose undirected projection is
/// connected: a random spanning tree with random orientation, plus extra
/// arcs with probability `p`.
pub fn random_connected<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<Arc> {
    let mut arcs = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        let w = rng.gen_range(1..=3);
        if rng.gen_bool(0.5) {
            arcs.push((u, v, w));
        } else {
            arcs.push((v, u, w));
        }
    }
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(p) {
                arcs.push((u, v, rng.gen_range(1..=3)));
            }
        }
    }
    arcs
}

/// Random digraph with no connectivity guarantee, including self-loops.
pub fn random_digraph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<Arc> {
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if rng.gen_bool(p) {
                arcs.push((u, v, rng.gen_range(1..=5)));
            }
        }
    }
    arcs
}

pub fn node_name(i: usize) -> String {
    format!("n{i:03}")
}

/// Network whose node `i` is `node_name(i)`. Library indices equal ours
/// only when every node has an arc; use [`arcs_of`] otherwise.
pub fn network(kind: InteractionKind, arcs: &[Arc]) -> InteractionNetwork {
    InteractionNetwork::from_weighted_edges(
        kind,
        None,
        arcs.iter()
            .map(|&(s, t, w)| (node_name(s), node_name(t), w)),
        |_| true,
    )
}

/// Relabels arcs into the network's node indices (nodes without arcs vanish).
pub fn arcs_of(net: &InteractionNetwork) -> (usize, Vec<Arc>) {
    (
        net.node_count(),
        net.edges()
            .iter()
            .map(|e| (e.source as usize, e.target as usize, e.weight))
            .collect(),
    )
}

fn adjacency_matrix(n: usize, arcs: &[Arc], directed: bool) -> Vec<Vec<bool>> {
    let mut a = vec![vec![false; n]; n];
    for &(s, t, _) in arcs {
        if s == t {
            continue;
        }
        a[s][t] = true;
        if !directed {
            a[t][s] = true;
        }
    }
    a
}

/// Floyd–Warshall hop distances.
pub fn distances(n: usize, arcs: &[Arc], directed: bool) -> Vec<Vec<Option<u32>>> {
    let a = adjacency_matrix(n, arcs, directed);
    let mut d = vec![vec![None; n]; n];
    for i in 0..n {
        d[i][i] = Some(0);
        for j in 0..n {
            if a[i][j] {
                d[i][j] = Some(1);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(x), Some(y)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| x + y < c) {
                        d[i][j] = Some(x + y);
                    }
                }
            }
        }
    }
    d
}

/// Shortest-path counts `sigma[s][t]`, by dynamic programming over
/// predecessors at distance `d(s,t) − 1`.
fn path_counts(n: usize, arcs: &[Arc], directed: bool, d: &[Vec<Option<u32>>]) -> Vec<Vec<f64>> {
    let a = adjacency_matrix(n, arcs, directed);
    let mut sigma = vec![vec![0.0; n]; n];
    for s in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&t| d[s][t].is_some()).collect();
        order.sort_by_key(|&t| d[s][t]);
        for &t in &order {
            if t == s {
                sigma[s][t] = 1.0;
                continue;
            }
            let dt = d[s][t].unwrap();
            sigma[s][t] = (0..n)
                .filter(|&u| a[u][t] && d[s][u] == Some(dt - 1))
                .map(|u| sigma[s][u])
                .sum();
        }
    }
    sigma
}

/// Betweenness over ordered pairs, normalized by `(n−1)(n−2)`.
pub fn betweenness(n: usize, arcs: &[Arc], directed: bool) -> Vec<f64> {
    if n < 3 {
        return vec![0.0; n];
    }
    let d = distances(n, arcs, directed);
    let sigma = path_counts(n, arcs, directed, &d);
    let norm = ((n - 1) * (n - 2)) as f64;
    (0..n)
        .map(|v| {
            let mut total = 0.0;
            for s in 0..n {
                for t in 0..n {
                    if s == t || s == v || t == v {
                        continue;
                    }
                    if let (Some(st), Some(sv), Some(vt)) = (d[s][t], d[s][v], d[v][t]) {
                        if sv + vt == st {
                            total += sigma[s][v] * sigma[v][t] / sigma[s][t];
                        }
                    }
                }
            }
            total / norm
        })
        .collect()
}

/// Wasserman–Faust closeness on the undirected projection.
pub fn closeness_wf(n: usize, arcs: &[Arc]) -> Vec<f64> {
    let d = distances(n, arcs, false);
    (0..n)
        .map(|v| {
            let reach: Vec<u32> = (0..n).filter(|&u| u != v).filter_map(|u| d[v][u]).collect();
            let total: u32 = reach.iter().sum();
            if total == 0 {
                0.0
            } else {
                let r = reach.len() as f64;
                r * r / ((n - 1) as f64 * total as f64)
            }
        })
        .collect()
}

pub fn degree(n: usize, arcs: &[Arc]) -> Vec<f64> {
    let a = adjacency_matrix(n, arcs, false);
    (0..n)
        .map(|v| a[v].iter().filter(|&&x| x).count() as f64 / (n - 1) as f64)
        .collect()
}

/// Core numbers by repeatedly peeling every node of degree `< k`.
pub fn core_numbers(n: usize, arcs: &[Arc]) -> Vec<u32> {
    let a = adjacency_matrix(n, arcs, false);
    let mut core = vec![0u32; n];
    let mut alive: BTreeSet<usize> = (0..n).collect();
    let mut k = 0u32;
    while !alive.is_empty() {
        k += 1;
        loop {
            let drop: Vec<usize> = alive
                .iter()
                .copied()
                .filter(|&v| {
                    (a[v]
                        .iter()
                        .enumerate()
                        .filter(|(u, &x)| x && alive.contains(u))
                        .count() as u32)
                        < k
                })
                .collect();
            if drop.is_empty() {
                break;
            }
            for v in drop {
                alive.remove(&v);
                core[v] = k - 1;
            }
        }
    }
    core
}

/// Principal eigenvector of the weight-symmetrized adjacency, unit norm,
/// non-negative.
pub fn eigenvector(n: usize, arcs: &[Arc]) -> Vec<f64> {
    let mut m = DMatrix::<f64>::zeros(n, n);
    for &(s, t, w) in arcs {
        if s != t {
            m[(s, t)] += w as f64;
            m[(t, s)] += w as f64;
        }
    }
    let eig = SymmetricEigen::new(m);
    let (k, _) =
        eig.eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bk, bv), (k, &v)| {
                if v > bv {
                    (k, v)
                } else {
                    (bk, bv)
                }
            });
    let v = eig.eigenvectors.column(k);
    let sign = if v.sum() < 0.0 { -1.0 } else { 1.0 };
    let norm = v.norm();
    v.iter().map(|x| sign * x / norm).collect()
}

/// Classic E-I over labeled, non-loop arcs, counting edges.
pub fn ei_classic(arcs: &[Arc], groups: &[Affiliation]) -> Option<f64> {
    let (mut e, mut i) = (0i64, 0i64);
    for &(s, t, _) in arcs {
        if s == t || !groups[s].is_labeled() || !groups[t].is_labeled() {
            continue;
        }
        if groups[s] == groups[t] {
            i += 1;
        } else {
            e += 1;
        }
    }
    (e + i > 0).then(|| (e - i) as f64 / (e + i) as f64)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
