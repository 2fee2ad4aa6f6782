use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affiliation::Affiliation;
use crate::error::{Error, Result};
use crate::graph::Adjacency;
use crate::network::InteractionNetwork;
use crate::scalar::RealScalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosenessConvention {
    /// `(r−1)² / ((n−1)·Σd)` over the `r` nodes reachable (including self).
    #[default]
    WassermanFaust,
    /// `Σ 1/d / (n−1)` over reachable nodes.
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Directed,
    #[default]
    Undirected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CentralityOptions {
    pub closeness: ClosenessConvention,
    pub closeness_orientation: Orientation,
    pub betweenness_orientation: Orientation,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for CentralityOptions {
    fn default() -> Self {
        CentralityOptions {
            closeness: ClosenessConvention::WassermanFaust,
            closeness_orientation: Orientation::Undirected,
            betweenness_orientation: Orientation::Directed,
            max_iterations: 100_000,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeCentrality<T> {
    pub betweenness: T,
    pub closeness: T,
    pub degree: T,
    pub eigenvector: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupMean<T> {
    pub members: usize,
    pub mean: NodeCentrality<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityReport<T> {
    pub network: String,
    pub nodes: Vec<(String, NodeCentrality<T>)>,
    pub group_means: BTreeMap<Affiliation, GroupMean<T>>,
}

fn lift<T: RealScalar>(x: f64) -> T {
    T::from_f64(x).expect("finite")
}

/// Distinct undirected neighbours over `n − 1`.
pub fn degree_centrality<T: RealScalar>(net: &InteractionNetwork) -> Vec<T> {
    let n = net.node_count();
    let adj = net.undirected_adjacency();
    (0..n)
        .map(|v| {
            if n > 1 {
                T::from_ratio_parts(adj.degree(v) as u64, n as u64 - 1)
            } else {
                T::zero()
            }
        })
        .collect()
}

fn bfs_distances(adj: &Adjacency, source: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) {
    dist.iter_mut().for_each(|d| *d = u32::MAX);
    dist[source] = 0;
    queue.clear();
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        for &u in adj.neighbors(v) {
            let u = u as usize;
            if dist[u] == u32::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
}

/// Exact shortest-path betweenness (unweighted hops), normalized by
/// `(n−1)(n−2)` for directed graphs and `(n−1)(n−2)/2` for undirected.
pub fn betweenness<T: RealScalar>(net: &InteractionNetwork, orientation: Orientation) -> Vec<T> {
    let n = net.node_count();
    if n < 3 {
        return vec![T::zero(); n];
    }
    let adj = match orientation {
        Orientation::Directed => net.directed_adjacency(),
        Orientation::Undirected => net.undirected_adjacency(),
    };
    let raw: Vec<T> = (0..n)
        .into_par_iter()
        .fold(
            || BrandesState::<T>::new(n),
            |mut st, s| {
                st.accumulate(&adj, s);
                st
            },
        )
        .map(|st| st.centrality)
        .reduce(
            || vec![T::zero(); n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x = *x + y);
                a
            },
        );
    // Undirected sources visit each unordered pair from both ends, which
    // cancels the factor 2 in the undirected normalization.
    let scale = T::one() / lift::<T>(((n - 1) * (n - 2)) as f64);
    raw.into_iter().map(|c| c * scale).collect()
}

struct BrandesState<T> {
    centrality: Vec<T>,
    sigma: Vec<T>,
    delta: Vec<T>,
    dist: Vec<u32>,
    preds: Vec<Vec<u32>>,
    stack: Vec<usize>,
    queue: VecDeque<usize>,
}

impl<T: RealScalar> BrandesState<T> {
    fn new(n: usize) -> Self {
        BrandesState {
            centrality: vec![T::zero(); n],
            sigma: vec![T::zero(); n],
            delta: vec![T::zero(); n],
            dist: vec![u32::MAX; n],
            preds: vec![Vec::new(); n],
            stack: Vec::with_capacity(n),
            queue: VecDeque::new(),
        }
    }

    fn accumulate(&mut self, adj: &Adjacency, s: usize) {
        for v in 0..self.sigma.len() {
            self.sigma[v] = T::zero();
            self.delta[v] = T::zero();
            self.dist[v] = u32::MAX;
            self.preds[v].clear();
        }
        self.stack.clear();
        self.sigma[s] = T::one();
        self.dist[s] = 0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.stack.push(v);
            for &w in adj.neighbors(v) {
                let w = w as usize;
                if w == v {
                    continue;
                }
                if self.dist[w] == u32::MAX {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] = self.sigma[w] + self.sigma[v];
                    self.preds[w].push(v as u32);
                }
            }
        }
        while let Some(w) = self.stack.pop() {
            for &v in &self.preds[w] {
                let v = v as usize;
                self.delta[v] =
                    self.delta[v] + self.sigma[v] / self.sigma[w] * (T::one() + self.delta[w]);
            }
            if w != s {
                self.centrality[w] = self.centrality[w] + self.delta[w];
            }
        }
    }
}

pub fn closeness<T: RealScalar>(
    net: &InteractionNetwork,
    convention: ClosenessConvention,
    orientation: Orientation,
) -> Vec<T> {
    let n = net.node_count();
    if n < 2 {
        return vec![T::zero(); n];
    }
    let adj = match orientation {
        Orientation::Directed => net.directed_adjacency(),
        Orientation::Undirected => net.undirected_adjacency(),
    };
    let n1 = lift::<T>((n - 1) as f64);
    (0..n)
        .into_par_iter()
        .map_init(
            || (vec![u32::MAX; n], VecDeque::new()),
            |(dist, queue), v| {
                bfs_distances(&adj, v, dist, queue);
                let reach = dist.iter().filter(|&&d| d != u32::MAX && d > 0);
                match convention {
                    ClosenessConvention::WassermanFaust => {
                        let (r, total) =
                            reach.fold((0u64, 0u64), |(r, s), &d| (r + 1, s + d as u64));
                        if total == 0 {
                            T::zero()
                        } else {
                            let r = lift::<T>(r as f64);
                            r * r / (n1 * lift::<T>(total as f64))
                        }
                    }
                    ClosenessConvention::Harmonic => {
                        reach
                            .map(|&d| T::one() / lift::<T>(d as f64))
                            .fold(T::zero(), |a, b| a + b)
                            / n1
                    }
                }
            },
        )
        .collect()
}

/// Principal eigenvector of the weight-symmetrized adjacency, unit L2 norm,
/// by power iteration on `A + I`.
pub fn eigenvector<T: RealScalar>(
    net: &InteractionNetwork,
    max_iterations: usize,
    tolerance: f64,
) -> Result<Vec<T>> {
    let n = net.node_count();
    let adj = net.undirected_adjacency();
    if adj.arc_count() == 0 {
        return Ok(vec![T::zero(); n]);
    }
    let weights: Vec<T> = (0..n)
        .flat_map(|v| {
            adj.weights(v)
                .iter()
                .map(|&w| lift::<T>(w as f64))
                .collect::<Vec<_>>()
        })
        .collect();
    let tol = T::tolerance(tolerance);
    let mut x = vec![T::one() / lift::<T>((n as f64).sqrt()); n];
    let mut next = vec![T::zero(); n];
    let mut offset = vec![0usize; n + 1];
    for v in 0..n {
        offset[v + 1] = offset[v] + adj.degree(v);
    }
    for _ in 0..max_iterations {
        for v in 0..n {
            let mut acc = x[v];
            for (k, &u) in adj.neighbors(v).iter().enumerate() {
                acc = acc + weights[offset[v] + k] * x[u as usize];
            }
            next[v] = acc;
        }
        let norm = next.iter().map(|&a| a * a).sum::<T>().sqrt();
        next.iter_mut().for_each(|a| *a = *a / norm);
        let change = next
            .iter()
            .zip(&x)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), |m, d| m.max(d));
        std::mem::swap(&mut x, &mut next);
        if change < tol {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        network: net.kind.to_string(),
        iterations: max_iterations,
    })
}

/// All four centralities plus per-affiliation means over the labeled
/// members present in the network.
pub fn centralities<T: RealScalar>(
    net: &InteractionNetwork,
    opts: &CentralityOptions,
) -> Result<CentralityReport<T>> {
    let name = match net.phase {
        Some(p) => format!("{}/phase{}", net.kind, p + 1),
        None => net.kind.to_string(),
    };
    let eig = eigenvector::<T>(net, opts.max_iterations, opts.tolerance).map_err(|e| match e {
        Error::NonConvergence { iterations, .. } => Error::NonConvergence {
            network: name.clone(),
            iterations,
        },
        other => other,
    })?;
    let bet = betweenness::<T>(net, opts.betweenness_orientation);
    let clo = closeness::<T>(net, opts.closeness, opts.closeness_orientation);
    let deg = degree_centrality::<T>(net);
    let nodes: Vec<(String, NodeCentrality<T>)> = net
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, node)| {
            (
                node.id.clone(),
                NodeCentrality {
                    betweenness: bet[i],
                    closeness: clo[i],
                    degree: deg[i],
                    eigenvector: eig[i],
                },
            )
        })
        .collect();

    let mut group_means = BTreeMap::new();
    for group in Affiliation::ALL {
        let members: Vec<usize> = net
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, n)| n.affiliation == Some(group))
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        let k = lift::<T>(members.len() as f64);
        let mean = |f: &dyn Fn(&NodeCentrality<T>) -> T| {
            members.iter().map(|&i| f(&nodes[i].1)).sum::<T>() / k
        };
        group_means.insert(
            group,
            GroupMean {
                members: members.len(),
                mean: NodeCentrality {
                    betweenness: mean(&|c| c.betweenness),
                    closeness: mean(&|c| c.closeness),
                    degree: mean(&|c| c.degree),
                    eigenvector: mean(&|c| c.eigenvector),
                },
            },
        );
    }
    Ok(CentralityReport {
        network: name,
        nodes,
        group_means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::InteractionKind;

    fn undirected(edges: &[(&str, &str)]) -> InteractionNetwork {
        let both = edges.iter().flat_map(|&(a, b)| [(a, b, 1), (b, a, 1)]);
        InteractionNetwork::from_weighted_edges(InteractionKind::Reply, None, both, |_| true)
    }

    #[test]
    fn path_graph() {
        let net = undirected(&[("a", "b"), ("b", "c")]);
        let b = net.node_index("b").unwrap();
        assert!((betweenness::<f64>(&net, Orientation::Directed)[b] - 1.0).abs() < 1e-12);
        assert!((betweenness::<f64>(&net, Orientation::Undirected)[b] - 1.0).abs() < 1e-12);
        assert_eq!(degree_centrality::<f64>(&net)[b], 1.0);
    }

    #[test]
    fn single_directed_path_halves_directed_betweenness() {
        let net = InteractionNetwork::from_weighted_edges(
            InteractionKind::Reply,
            None,
            [("a", "b", 1), ("b", "c", 1)],
            |_| true,
        );
        let b = net.node_index("b").unwrap();
        assert!((betweenness::<f64>(&net, Orientation::Directed)[b] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_node_is_all_zero() {
        let net = InteractionNetwork::from_weighted_edges(
            InteractionKind::Retweet,
            None,
            [("a", "a", 1)],
            |_| true,
        );
        let r = centralities::<f64>(&net, &CentralityOptions::default()).unwrap();
        let c = r.nodes[0].1;
        assert_eq!(
            (c.betweenness, c.closeness, c.degree, c.eigenvector),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn star_closeness() {
        let net = undirected(&[("c", "l1"), ("c", "l2"), ("c", "l3"), ("c", "l4")]);
        let c = net.node_index("c").unwrap();
        let l = net.node_index("l1").unwrap();
        let harmonic =
            closeness::<f64>(&net, ClosenessConvention::Harmonic, Orientation::Undirected);
        assert!((harmonic[c] - 1.0).abs() < 1e-12);
        assert!((harmonic[l] - 5.0 / 8.0).abs() < 1e-12);
        let wf = closeness::<f64>(
            &net,
            ClosenessConvention::WassermanFaust,
            Orientation::Undirected,
        );
        assert!((wf[c] - 1.0).abs() < 1e-12);
        assert!((wf[l] - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn wf_scales_by_reachable_fraction() {
        // a-b connected, c isolated via self-loop only
        let net = InteractionNetwork::from_weighted_edges(
            InteractionKind::Reply,
            None,
            [("a", "b", 1), ("c", "c", 1)],
            |_| true,
        );
        let wf = closeness::<f64>(
            &net,
            ClosenessConvention::WassermanFaust,
            Orientation::Undirected,
        );
        // r-1 = 1 reachable, n-1 = 2, sum d = 1 -> 1/2
        assert!((wf[0] - 0.5).abs() < 1e-12);
        assert_eq!(wf[2], 0.0);
    }

    #[test]
    fn eigenvector_of_symmetric_pair() {
        let net = undirected(&[("a", "b")]);
        let e = eigenvector::<f64>(&net, 1000, 1e-12).unwrap();
        let expected = 1.0 / 2f64.sqrt();
        assert!(e.iter().all(|x| (x - expected).abs() < 1e-9));
    }

    #[test]
    fn eigenvector_non_convergence_names_network() {
        let net = undirected(&[("a", "b"), ("b", "c"), ("c", "d")]);
        let opts = CentralityOptions {
            max_iterations: 1,
            ..Default::default()
        };
        let err = centralities::<f64>(&net, &opts).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { ref network, .. } if network == "reply"));
    }

    #[test]
    fn works_in_f32() {
        let net = undirected(&[("a", "b"), ("b", "c"), ("c", "a"), ("c", "d")]);
        let r = centralities::<f32>(&net, &CentralityOptions::default()).unwrap();
        let r64 = centralities::<f64>(&net, &CentralityOptions::default()).unwrap();
        for (a, b) in r.nodes.iter().zip(&r64.nodes) {
            assert!((a.1.eigenvector as f64 - b.1.eigenvector).abs() < 1e-5);
            assert!((a.1.betweenness as f64 - b.1.betweenness).abs() < 1e-6);
        }
    }
}
