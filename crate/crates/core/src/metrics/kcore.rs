use std::collections::BTreeMap;

use serde::Serialize;

use crate::affiliation::Affiliation;
use crate::graph::Adjacency;
use crate::network::InteractionNetwork;

/// Core numbers by bucket-based iterative pruning (Batagelj–Zaversnik) on
/// the undirected projection; parallel edges and self-loops are ignored.
pub fn core_numbers(adj: &Adjacency) -> Vec<u32> {
    let n = adj.node_count();
    let mut degree: Vec<usize> = (0..n).map(|v| adj.degree(v)).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    let mut bin = vec![0usize; max_deg + 1];
    for &d in &degree {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut pos = vec![0usize; n];
    let mut order = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[degree[v]];
        order[pos[v]] = v;
        bin[degree[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bin[d] = bin[d - 1];
    }
    if max_deg > 0 || n > 0 {
        bin[0] = 0;
    }
    for i in 0..n {
        let v = order[i];
        for &u in adj.neighbors(v) {
            let u = u as usize;
            if degree[u] > degree[v] {
                let du = degree[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = order[pw];
                if u != w {
                    order.swap(pu, pw);
                    pos[u] = pw;
                    pos[w] = pu;
                }
                bin[du] += 1;
                degree[u] -= 1;
            }
        }
    }
    degree.into_iter().map(|d| d as u32).collect()
}

/// Fraction of a group's members present in the network at each core number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoreHistogram {
    pub group: Affiliation,
    pub members: usize,
    pub proportions: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KCoreReport {
    pub cores: Vec<(String, u32)>,
    pub histograms: Vec<CoreHistogram>,
}

pub fn core_histogram(net: &InteractionNetwork, cores: &[u32]) -> Vec<CoreHistogram> {
    let mut out = Vec::new();
    for group in Affiliation::ALL {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        let mut members = 0;
        for (node, &k) in net.nodes().iter().zip(cores) {
            if node.affiliation.unwrap_or(Affiliation::Unaffiliated) == group {
                *counts.entry(k).or_default() += 1;
                members += 1;
            }
        }
        if members == 0 {
            continue;
        }
        out.push(CoreHistogram {
            group,
            members,
            proportions: counts
                .into_iter()
                .map(|(k, c)| (k, c as f64 / members as f64))
                .collect(),
        });
    }
    out
}

pub fn kcore(net: &InteractionNetwork) -> KCoreReport {
    let cores = core_numbers(&net.undirected_adjacency());
    KCoreReport {
        histograms: core_histogram(net, &cores),
        cores: net
            .nodes()
            .iter()
            .zip(&cores)
            .map(|(n, &k)| (n.id.clone(), k))
            .collect(),
    }
}
