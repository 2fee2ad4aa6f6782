//! Polarised community detection on the retweet network by recursive
//! minimum-conductance spectral bisection, and seed-driven affiliation
//! labeling of the resulting clusters.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use chrono::{DateTime, TimeDelta};

use crate::affiliation::{Affiliation, AffiliationMap};
use crate::corpus::{format_timestamp, Corpus};
use crate::error::{Error, Result};
use crate::graph::{components, Adjacency};
use crate::network::{InteractionKind, InteractionNetwork};
use crate::report::Table;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterParams {
    pub target_clusters: usize,
    pub min_cluster_size: usize,
    pub max_iterations: usize,
    /// Cuts above this conductance are not taken.
    pub conductance_threshold: f64,
    /// Use retweet counts as edge weights; otherwise every connected pair weighs 1.
    pub weighted: bool,
    pub seed: u64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            target_clusters: 2,
            min_cluster_size: 5,
            max_iterations: 10_000,
            conductance_threshold: 0.4,
            weighted: true,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    /// Disjoint account-id sets, largest first; members sorted.
    pub clusters: Vec<Vec<String>>,
    /// Conductance of each cut taken, in order.
    pub cut_conductance: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Partition {
    pub fn cluster_of(&self, account_id: &str) -> Option<usize> {
        self.clusters
            .iter()
            .position(|c| c.binary_search_by(|m| m.as_str().cmp(account_id)).is_ok())
    }
}

/// `cut(S) / min(vol(S), vol(V∖S))` on an undirected weighted adjacency.
/// Returns `None` when either side has zero volume.
pub fn conductance<T: Scalar>(adj: &Adjacency, in_set: &[bool]) -> Option<T> {
    let mut cut = 0u64;
    let mut vol_in = 0u64;
    let mut vol_out = 0u64;
    for v in 0..adj.node_count() {
        for (u, w) in adj.arcs(v) {
            if in_set[v] {
                vol_in += w;
                if !in_set[u] {
                    cut += w;
                }
            } else {
                vol_out += w;
            }
        }
    }
    let denom = vol_in.min(vol_out);
    (denom > 0).then(|| T::from_ratio_parts(cut, denom))
}

struct Cut {
    conductance: f64,
    side: Vec<u32>,
    rest: Vec<u32>,
}

/// Local view of an induced subgraph with its own 0..k numbering.
fn induced_adjacency(adj: &Adjacency, members: &[u32]) -> Adjacency {
    let local: HashMap<u32, u32> = members
        .iter()
        .enumerate()
        .map(|(i, &m)| (m, i as u32))
        .collect();
    let arcs = members.iter().enumerate().flat_map(|(i, &m)| {
        let local = &local;
        adj.arcs(m as usize)
            .filter_map(move |(u, w)| local.get(&(u as u32)).map(|&j| (i as u32, j, w)))
    });
    Adjacency::from_arcs(members.len(), arcs)
}

/// Second eigenvector of the normalized adjacency, mapped back through
/// `D^{-1/2}` to give the sweep ordering.
fn fiedler_order(adj: &Adjacency, rng: &mut ChaCha8Rng, max_iterations: usize) -> Vec<f64> {
    let n = adj.node_count();
    let strength: Vec<f64> = (0..n).map(|v| adj.strength(v) as f64).collect();
    let inv_sqrt: Vec<f64> = strength
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let top: Vec<f64> = {
        let raw: Vec<f64> = strength.iter().map(|d| d.sqrt()).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        raw.into_iter().map(|x| x / norm).collect()
    };
    let deflate = |x: &mut [f64]| {
        let dot: f64 = x.iter().zip(&top).map(|(a, b)| a * b).sum();
        for (xi, ti) in x.iter_mut().zip(&top) {
            *xi -= dot * ti;
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|v| *v /= norm);
        }
    };
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    deflate(&mut x);
    let mut next = vec![0.0; n];
    for _ in 0..max_iterations {
        // next = (I + D^-1/2 A D^-1/2) x / 2
        for v in 0..n {
            let mut acc = 0.0;
            for (u, w) in adj.arcs(v) {
                acc += w as f64 * inv_sqrt[u] * x[u];
            }
            next[v] = 0.5 * (x[v] + inv_sqrt[v] * acc);
        }
        deflate(&mut next);
        let delta = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        std::mem::swap(&mut x, &mut next);
        if delta < 1e-10 {
            break;
        }
    }
    x.iter().zip(&inv_sqrt).map(|(xi, s)| xi * s).collect()
}

/// Best sweep cut with both sides at least `min_size`.
fn sweep_cut(
    adj: &Adjacency,
    members: &[u32],
    params: &ClusterParams,
    rng: &mut ChaCha8Rng,
) -> Option<Cut> {
    let local = induced_adjacency(adj, members);
    let n = local.node_count();
    if n < 2 * params.min_cluster_size.max(1) {
        return None;
    }
    let comps = components(&local);
    if comps.len() > 1 {
        // Already disconnected: peel off the largest piece at zero conductance.
        let big = &comps[0];
        if big.len() >= params.min_cluster_size && n - big.len() >= params.min_cluster_size {
            let mut in_big = vec![false; n];
            big.iter().for_each(|&v| in_big[v as usize] = true);
            let (side, rest) = split_members(members, &in_big);
            return Some(Cut {
                conductance: 0.0,
                side,
                rest,
            });
        }
        return None;
    }

    let score = fiedler_order(&local, rng, params.max_iterations);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        score[a]
            .total_cmp(&score[b])
            .then(members[a].cmp(&members[b]))
    });

    let total: u64 = (0..n).map(|v| local.strength(v)).sum();
    let mut in_set = vec![false; n];
    let mut vol = 0u64;
    let mut cut: i128 = 0;
    let mut best: Option<(f64, usize)> = None;
    for (k, &v) in order.iter().enumerate().take(n - 1) {
        let mut inside = 0u64;
        for (u, w) in local.arcs(v) {
            if in_set[u] {
                inside += w;
            }
        }
        in_set[v] = true;
        let s = local.strength(v);
        vol += s;
        cut += s as i128 - 2 * inside as i128;
        let size = k + 1;
        if size < params.min_cluster_size || n - size < params.min_cluster_size {
            continue;
        }
        let denom = vol.min(total - vol);
        if denom == 0 {
            continue;
        }
        let phi = cut as f64 / denom as f64;
        if best.is_none_or(|(b, _)| phi < b) {
            best = Some((phi, size));
        }
    }
    let (phi, size) = best?;
    let mut mask = vec![false; n];
    order[..size].iter().for_each(|&v| mask[v] = true);
    let (side, rest) = split_members(members, &mask);
    Some(Cut {
        conductance: phi,
        side,
        rest,
    })
}

fn split_members(members: &[u32], mask: &[bool]) -> (Vec<u32>, Vec<u32>) {
    let mut side = Vec::new();
    let mut rest = Vec::new();
    for (i, &m) in members.iter().enumerate() {
        if mask[i] {
            side.push(m)
        } else {
            rest.push(m)
        }
    }
    (side, rest)
}

/// Recursively bisects the largest weakly connected component of the
/// retweet network at its minimum-conductance sweep cut until
/// `target_clusters` clusters exist or no admissible cut has conductance at
/// or below the threshold.
pub fn cluster_retweet_network(
    net: &InteractionNetwork,
    params: &ClusterParams,
) -> Result<Partition> {
    if net.kind != InteractionKind::Retweet {
        return Err(Error::Config(format!(
            "clustering expects a retweet network, got {}",
            net.kind
        )));
    }
    if net.is_empty() {
        return Err(Error::Config(
            "cannot cluster an empty retweet network".into(),
        ));
    }
    let adj = if params.weighted {
        net.undirected_adjacency()
    } else {
        Adjacency::undirected(net.node_count(), net.arcs().map(|(s, t, _)| (s, t, 1))).binarized()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut warnings = Vec::new();
    let start = components(&adj).swap_remove(0);
    if start.len() < 2 * params.min_cluster_size {
        warnings.push(format!(
            "largest component has {} nodes, fewer than 2 x min_cluster_size ({}); returning a single cluster",
            start.len(),
            params.min_cluster_size
        ));
    }

    let mut clusters: Vec<Vec<u32>> = vec![start];
    let mut pending: Vec<Option<Option<Cut>>> = vec![None];
    let mut cut_conductance = Vec::new();
    while clusters.len() < params.target_clusters.max(1) {
        for (i, c) in clusters.iter().enumerate() {
            if pending[i].is_none() {
                pending[i] = Some(sweep_cut(&adj, c, params, &mut rng));
            }
        }
        let best = pending
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                p.as_ref()
                    .and_then(|c| c.as_ref())
                    .map(|c| (i, c.conductance))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let Some((i, phi)) = best else { break };
        if phi > params.conductance_threshold {
            break;
        }
        let cut = pending[i].take().flatten().expect("cut present");
        cut_conductance.push(cut.conductance);
        clusters[i] = cut.side;
        clusters.push(cut.rest);
        pending.push(None);
    }

    let mut named: Vec<Vec<String>> = clusters
        .into_iter()
        .map(|c| {
            let mut ids: Vec<String> = c
                .iter()
                .map(|&v| net.node_id(v as usize).to_owned())
                .collect();
            ids.sort();
            ids
        })
        .collect();
    named.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    Ok(Partition {
        clusters: named,
        cut_conductance,
        warnings,
    })
}

impl Adjacency {
    fn binarized(self) -> Self {
        let n = self.node_count();
        let arcs: Vec<(u32, u32, u64)> = (0..n)
            .flat_map(|v| {
                self.neighbors(v)
                    .iter()
                    .map(move |&u| (v as u32, u, 1))
                    .collect::<Vec<_>>()
            })
            .collect();
        Adjacency::from_arcs(n, arcs)
    }
}

/// Per cluster, the `k` accounts with the highest weighted indegree, ties by id.
pub fn top_retweeted(
    net: &InteractionNetwork,
    partition: &Partition,
    k: usize,
) -> Vec<Vec<(String, u64)>> {
    let indeg = net.in_strength();
    partition
        .clusters
        .iter()
        .map(|cluster| {
            let mut ranked: Vec<(String, u64)> = cluster
                .iter()
                .map(|id| {
                    let d = net.node_index(id).map(|i| indeg[i]).unwrap_or(0);
                    (id.clone(), d)
                })
                .collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ranked.truncate(k);
            ranked
        })
        .collect()
}

pub fn read_seed_labels<R: std::io::Read>(input: R) -> Result<Vec<(String, Affiliation)>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let (Some(id), Some(label)) = (row.get(0), row.get(1)) else {
            return Err(Error::Config("seed row needs account_id,label".into()));
        };
        let label: Affiliation = label.parse()?;
        if !label.is_labeled() {
            return Err(Error::Config(format!(
                "seed {id} must be Supporter or Opposer"
            )));
        }
        out.push((id.to_owned(), label));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffiliationOutcome {
    pub map: AffiliationMap,
    /// Supporter / Opposer / Unaffiliated counts over the given accounts.
    pub group_sizes: [usize; 3],
    pub warnings: Vec<String>,
}

/// Labels each of the two largest clusters with its seeds' common label.
/// Every account in `accounts` appears in the resulting map.
pub fn assign_affiliations<'a>(
    partition: &Partition,
    seeds: &[(String, Affiliation)],
    accounts: impl IntoIterator<Item = &'a str>,
    provenance: impl Into<String>,
) -> Result<AffiliationOutcome> {
    let candidates = partition.clusters.len().min(2);
    let mut cluster_labels: BTreeMap<usize, BTreeMap<Affiliation, Vec<&str>>> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (id, label) in seeds {
        match partition.cluster_of(id).filter(|&c| c < candidates) {
            Some(c) => cluster_labels
                .entry(c)
                .or_default()
                .entry(*label)
                .or_default()
                .push(id),
            None => warnings.push(format!("seed {id} is not in a labelable cluster")),
        }
    }
    let conflicts: Vec<String> = cluster_labels
        .iter()
        .filter(|(_, labels)| labels.len() > 1)
        .map(|(c, labels)| {
            let parts: Vec<String> = labels
                .iter()
                .map(|(l, ids)| format!("{l}: {}", ids.join(",")))
                .collect();
            format!("cluster {c} has {}", parts.join(" vs "))
        })
        .collect();
    if !conflicts.is_empty() {
        return Err(Error::SeedConflict(conflicts));
    }

    let mut map = AffiliationMap::new(provenance);
    let mut listed = Vec::new();
    for a in accounts {
        map.insert(a, Affiliation::Unaffiliated);
        listed.push(a);
    }
    for (c, labels) in &cluster_labels {
        let label = *labels.keys().next().expect("nonempty");
        for member in &partition.clusters[*c] {
            map.insert(member.clone(), label);
        }
    }
    let mut group_sizes = [0; 3];
    for a in listed {
        group_sizes[map.get(a).index()] += 1;
    }
    Ok(AffiliationOutcome {
        map,
        group_sizes,
        warnings,
    })
}

/// Tweets per group in buckets aligned to multiples of `bucket` since the
/// Unix epoch, covering the corpus span with explicit zeros.
pub fn community_timeline(
    corpus: &Corpus,
    affiliations: &AffiliationMap,
    bucket: TimeDelta,
) -> Result<Table> {
    let width = bucket.num_seconds();
    if width <= 0 {
        return Err(Error::Config(
            "timeline bucket must be at least one second".into(),
        ));
    }
    let mut t = Table::new(&["timestamp_bucket", "group", "tweet_count"])
        .comment("timestamp_bucket: bucket start (UTC)")
        .comment("tweet_count: tweets posted by the group in the bucket");
    let (Some(first), Some(last)) = (corpus.first_time(), corpus.last_time()) else {
        return Ok(t);
    };
    let origin = first.timestamp().div_euclid(width) * width;
    let n = ((last.timestamp() - origin).div_euclid(width) + 1) as usize;
    let mut counts = vec![[0u64; 3]; n];
    for tw in corpus.tweets() {
        let k = ((tw.created_at.timestamp() - origin).div_euclid(width)) as usize;
        counts[k][affiliations.get(tw.author_id()).index()] += 1;
    }
    for (k, row) in counts.iter().enumerate() {
        let start = DateTime::from_timestamp(origin + k as i64 * width, 0).expect("in range");
        for g in Affiliation::ALL {
            t.push([
                format_timestamp(start),
                g.to_string(),
                row[g.index()].to_string(),
            ]);
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(edges: &[(String, String, u64)]) -> InteractionNetwork {
        InteractionNetwork::from_weighted_edges(
            InteractionKind::Retweet,
            None,
            edges.iter().cloned(),
            |_| true,
        )
    }

    fn clique(prefix: &str, n: usize) -> Vec<(String, String, u64)> {
        let mut e = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                e.push((format!("{prefix}{i:02}"), format!("{prefix}{j:02}"), 1));
            }
        }
        e
    }

    #[test]
    fn complete_graph_stays_whole() {
        let p = cluster_retweet_network(&net(&clique("k", 10)), &ClusterParams::default()).unwrap();
        assert_eq!(p.clusters.len(), 1);
        assert_eq!(p.clusters[0].len(), 10);
        assert!(p.cut_conductance.is_empty());
    }

    #[test]
    fn barbell_splits_at_bridge() {
        let mut e = clique("a", 20);
        e.extend(clique("b", 20));
        e.push(("a00".into(), "b00".into(), 1));
        let p = cluster_retweet_network(&net(&e), &ClusterParams::default()).unwrap();
        assert_eq!(p.clusters.len(), 2);
        assert!(p.clusters.iter().all(|c| c.len() == 20));
        assert!(p
            .clusters
            .iter()
            .all(|c| c.iter().all(|id| id.starts_with(&c[0][..1]))));
        let expected = 1.0 / (2.0 * 190.0 + 1.0);
        assert!((p.cut_conductance[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn small_network_single_cluster_with_warning() {
        let p = cluster_retweet_network(&net(&clique("s", 4)), &ClusterParams::default()).unwrap();
        assert_eq!(p.clusters.len(), 1);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn rejects_non_retweet_networks() {
        let n = InteractionNetwork::from_weighted_edges(
            InteractionKind::Reply,
            None,
            [("a", "b", 1)],
            |_| true,
        );
        assert!(cluster_retweet_network(&n, &ClusterParams::default()).is_err());
    }

    #[test]
    fn conductance_of_simple_cut() {
        let adj = Adjacency::undirected(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)]);
        let phi: f64 = conductance(&adj, &[true, true, false, false]).unwrap();
        assert!((phi - 1.0 / 3.0).abs() < 1e-12);
        assert!(conductance::<f64>(&adj, &[true; 4]).is_none());
    }

    fn partition(clusters: &[&[&str]]) -> Partition {
        Partition {
            clusters: clusters
                .iter()
                .map(|c| {
                    let mut v: Vec<String> = c.iter().map(|s| s.to_string()).collect();
                    v.sort();
                    v
                })
                .collect(),
            cut_conductance: vec![],
            warnings: vec![],
        }
    }

    #[test]
    fn top_retweeted_breaks_ties_by_id() {
        let n = InteractionNetwork::from_weighted_edges(
            InteractionKind::Retweet,
            None,
            [("x", "B", 5), ("y", "A", 5), ("z", "C", 2)],
            |_| true,
        );
        let p = partition(&[&["A", "B", "C", "x", "y", "z"]]);
        let top = top_retweeted(&n, &p, 2);
        assert_eq!(top[0], vec![("A".to_string(), 5), ("B".to_string(), 5)]);
    }

    #[test]
    fn seeds_label_whole_clusters() {
        let p = partition(&[&["a", "b", "c"], &["d", "e"]]);
        let seeds = vec![
            ("a".to_string(), Affiliation::Supporter),
            ("e".to_string(), Affiliation::Opposer),
        ];
        let out =
            assign_affiliations(&p, &seeds, ["a", "b", "c", "d", "e", "iso"], "test").unwrap();
        assert_eq!(out.map.get("b"), Affiliation::Supporter);
        assert_eq!(out.map.get("d"), Affiliation::Opposer);
        assert_eq!(out.map.get("iso"), Affiliation::Unaffiliated);
        assert_eq!(out.group_sizes, [3, 2, 1]);
    }

    #[test]
    fn empty_seeds_leave_everyone_unaffiliated() {
        let p = partition(&[&["a", "b"], &["c"]]);
        let out = assign_affiliations(&p, &[], ["a", "b", "c"], "").unwrap();
        assert_eq!(out.group_sizes, [0, 0, 3]);
    }

    #[test]
    fn conflicting_seeds_are_an_error() {
        let p = partition(&[&["a", "b"]]);
        let seeds = vec![
            ("a".to_string(), Affiliation::Supporter),
            ("b".to_string(), Affiliation::Opposer),
        ];
        let err = assign_affiliations(&p, &seeds, ["a", "b"], "").unwrap_err();
        assert!(matches!(err, Error::SeedConflict(ref c) if c.len() == 1));
    }

    #[test]
    fn seed_csv() {
        let s = read_seed_labels("account_id,label\n1, Supporter\n2,Opposer\n".as_bytes()).unwrap();
        assert_eq!(s[1], ("2".to_string(), Affiliation::Opposer));
        assert!(read_seed_labels("account_id,label\n1,Unaffiliated\n".as_bytes()).is_err());
    }

    #[test]
    fn timeline_has_zero_buckets() {
        use crate::fixture::{corpus, TweetBuilder};
        let c = corpus([
            TweetBuilder::new("1", "s", 0),
            TweetBuilder::new("2", "o", 7300),
        ]);
        let aff = AffiliationMap::from_pairs([
            ("s", Affiliation::Supporter),
            ("o", Affiliation::Opposer),
        ]);
        let t = community_timeline(&c, &aff, TimeDelta::hours(1)).unwrap();
        assert_eq!(t.rows.len(), 9);
        assert_eq!(t.rows[0], ["2020-01-01T00:00:00Z", "Supporter", "1"]);
        assert_eq!(t.rows[3], ["2020-01-01T01:00:00Z", "Supporter", "0"]);
        assert_eq!(t.rows[7], ["2020-01-01T02:00:00Z", "Opposer", "1"]);
        assert!(
            community_timeline(&Corpus::empty(), &aff, TimeDelta::hours(1))
                .unwrap()
                .rows
                .is_empty()
        );
    }
}
