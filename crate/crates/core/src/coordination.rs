//! Time-windowed co-activity networks and account/reason bigraphs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, TimeDelta, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affiliation::{Affiliation, AffiliationMap};
use crate::content::{canonical_url, registered_domain};
use crate::corpus::{PhasedCorpus, TweetRecord};
use crate::error::{Error, Result};
use crate::export::{GraphmlDoc, GraphmlEdge, GraphmlNode, KeyDef, KeyDomain};
use crate::graph::{components, Adjacency};
use crate::report::Table;
use crate::timeutil::duration_serde;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoKind {
    CoRetweet,
    CoHashtag,
    CoUrl,
    CoDomain,
    CoMention,
}

impl CoKind {
    pub const ALL: [CoKind; 5] = [
        CoKind::CoRetweet,
        CoKind::CoHashtag,
        CoKind::CoUrl,
        CoKind::CoDomain,
        CoKind::CoMention,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CoKind::CoRetweet => "co_retweet",
            CoKind::CoHashtag => "co_hashtag",
            CoKind::CoUrl => "co_url",
            CoKind::CoDomain => "co_domain",
            CoKind::CoMention => "co_mention",
        }
    }

    /// What a reason node stands for.
    pub fn reason_type(self) -> &'static str {
        match self {
            CoKind::CoRetweet => "tweet",
            CoKind::CoHashtag => "hashtag",
            CoKind::CoUrl => "url",
            CoKind::CoDomain => "domain",
            CoKind::CoMention => "account",
        }
    }

    fn normalize(self, item: &str) -> String {
        match self {
            CoKind::CoHashtag => item.trim().trim_start_matches('#').to_lowercase(),
            CoKind::CoUrl => canonical_url(item),
            CoKind::CoDomain => item.trim().to_ascii_lowercase(),
            CoKind::CoRetweet | CoKind::CoMention => item.trim().to_owned(),
        }
    }

    /// Distinct reasons carried by one tweet.
    fn reasons(self, corpus: &crate::corpus::Corpus, t: &TweetRecord) -> Vec<String> {
        let mut out: Vec<String> = match self {
            CoKind::CoRetweet => t
                .retweet_of
                .as_ref()
                .map(|r| corpus.root_original(r).tweet_id.clone())
                .into_iter()
                .collect(),
            CoKind::CoHashtag => t.hashtags.clone(),
            CoKind::CoUrl => t.urls.iter().map(|u| canonical_url(u)).collect(),
            CoKind::CoDomain => t.urls.iter().filter_map(|u| registered_domain(u)).collect(),
            CoKind::CoMention => t.mentions.clone(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl fmt::Display for CoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        CoKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::Config(format!("unknown co-activity kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Windowing {
    /// Any two uses at most γ apart.
    #[default]
    Sliding,
    /// Consecutive γ-wide bins from an origin.
    FixedBins,
}

impl FromStr for Windowing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "sliding" => Ok(Windowing::Sliding),
            "fixed-bins" | "fixed" => Ok(Windowing::FixedBins),
            other => Err(Error::Config(format!("unknown windowing `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoActivityParams {
    pub kind: CoKind,
    #[serde(with = "duration_serde")]
    pub gamma: TimeDelta,
    #[serde(default)]
    pub exclusions: BTreeSet<String>,
    #[serde(default)]
    pub windowing: Windowing,
    #[serde(default = "one")]
    pub min_edge_weight: u64,
    /// Fixed-bin origin; the first tweet in the corpus when unset.
    #[serde(default)]
    pub bin_origin: Option<DateTime<Utc>>,
    #[serde(default)]
    pub phase: Option<usize>,
    /// Bigraphs only: keep reason edges for accounts that co-acted on that reason.
    #[serde(default)]
    pub coactive_only: bool,
}

fn one() -> u64 {
    1
}

impl CoActivityParams {
    pub fn new(kind: CoKind, gamma: TimeDelta) -> Self {
        CoActivityParams {
            kind,
            gamma,
            exclusions: BTreeSet::new(),
            windowing: Windowing::Sliding,
            min_edge_weight: 1,
            bin_origin: None,
            phase: None,
            coactive_only: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma <= TimeDelta::zero() {
            return Err(Error::Config(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoNode {
    pub id: String,
    pub affiliation: Affiliation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReasonNode {
    pub id: String,
    pub degree: usize,
}

/// Account–account co-activity network; with reason nodes it is a bigraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoActivityGraph {
    pub kind: CoKind,
    pub gamma_secs: i64,
    pub windowing: Windowing,
    pub accounts: Vec<CoNode>,
    /// Undirected, `source < target`.
    pub edges: Vec<(u32, u32, u64)>,
    pub reasons: Vec<ReasonNode>,
    /// `(account, reason, uses)`.
    pub reason_edges: Vec<(u32, u32, u64)>,
}

/// One use of a reason by an account.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub reason: u32,
    pub millis: i64,
    pub account: u32,
}

/// Interned event stream for one co-activity kind.
#[derive(Debug, Clone, Default)]
pub struct EventSet {
    pub accounts: Vec<String>,
    pub reasons: Vec<String>,
    /// Sorted by `(reason, millis, account)`.
    pub events: Vec<Event>,
}

pub fn collect_events(corpus: &PhasedCorpus, params: &CoActivityParams) -> EventSet {
    let kind = params.kind;
    let excluded: BTreeSet<String> = params
        .exclusions
        .iter()
        .map(|e| kind.normalize(e))
        .collect();
    let mut account_ids: HashMap<&str, u32> = HashMap::new();
    let mut reason_ids: HashMap<String, u32> = HashMap::new();
    let mut set = EventSet::default();
    for (_, t) in corpus.tweets_in(params.phase) {
        let reasons = kind.reasons(corpus.corpus(), t);
        if reasons.is_empty() {
            continue;
        }
        let next = account_ids.len() as u32;
        let account = *account_ids.entry(t.author_id()).or_insert_with(|| {
            set.accounts.push(t.author_id().to_owned());
            next
        });
        for r in reasons {
            if excluded.contains(&r) {
                continue;
            }
            let next = reason_ids.len() as u32;
            let reason = *reason_ids.entry(r).or_insert_with_key(|k| {
                set.reasons.push(k.clone());
                next
            });
            set.events.push(Event {
                reason,
                millis: t.created_at.timestamp_millis(),
                account,
            });
        }
    }
    set.events.par_sort_unstable();
    set
}

fn pack(a: u32, b: u32) -> u64 {
    let (x, y) = (a.min(b), a.max(b));
    ((x as u64) << 32) | y as u64
}

fn unpack(k: u64) -> (u32, u32) {
    ((k >> 32) as u32, k as u32)
}

/// Per-reason slices of the sorted event list.
fn reason_runs(events: &[Event]) -> Vec<&[Event]> {
    events.chunk_by(|a, b| a.reason == b.reason).collect()
}

/// Distinct account pairs within γ of each other for one reason's events.
fn sliding_pairs(run: &[Event], gamma: i64) -> Vec<u64> {
    let mut out = Vec::new();
    for (i, e) in run.iter().enumerate() {
        for f in &run[i + 1..] {
            if f.millis - e.millis > gamma {
                break;
            }
            if f.account != e.account {
                out.push(pack(e.account, f.account));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Distinct account pairs per `(reason, bin)`.
fn binned_pairs(run: &[Event], origin: i64, gamma: i64) -> Vec<u64> {
    let mut out = Vec::new();
    for bin in run.chunk_by(|a, b| {
        (a.millis - origin).div_euclid(gamma) == (b.millis - origin).div_euclid(gamma)
    }) {
        let mut accts: Vec<u32> = bin.iter().map(|e| e.account).collect();
        accts.sort_unstable();
        accts.dedup();
        for (i, &a) in accts.iter().enumerate() {
            for &b in &accts[i + 1..] {
                out.push(pack(a, b));
            }
        }
    }
    out
}

/// Co-activity pairs per reason, in reason order.
fn pairs_by_reason(set: &EventSet, params: &CoActivityParams, origin: i64) -> Vec<Vec<u64>> {
    let gamma = params.gamma.num_milliseconds();
    reason_runs(&set.events)
        .par_iter()
        .map(|run| match params.windowing {
            Windowing::Sliding => sliding_pairs(run, gamma),
            Windowing::FixedBins => binned_pairs(run, origin, gamma),
        })
        .collect()
}

/// Summed pair weights, sorted by pair.
fn count_pairs(mut keys: Vec<u64>) -> Vec<(u32, u32, u64)> {
    keys.par_sort_unstable();
    keys.chunk_by(|a, b| a == b)
        .map(|run| {
            let (a, b) = unpack(run[0]);
            (a, b, run.len() as u64)
        })
        .collect()
}

fn origin_millis(corpus: &PhasedCorpus, params: &CoActivityParams) -> i64 {
    params
        .bin_origin
        .or_else(|| corpus.corpus().first_time())
        .map_or(0, |t| t.timestamp_millis())
}

/// Builds the graph from raw pair weights, relabelling accounts by id.
fn assemble(
    set: &EventSet,
    params: &CoActivityParams,
    affiliations: &AffiliationMap,
    weights: Vec<(u32, u32, u64)>,
    reason_edges: Vec<(u32, u32, u64)>,
) -> CoActivityGraph {
    let mut used = vec![false; set.accounts.len()];
    let weights: Vec<_> = weights
        .into_iter()
        .filter(|&(_, _, w)| w >= params.min_edge_weight)
        .collect();
    for &(a, b, _) in &weights {
        used[a as usize] = true;
        used[b as usize] = true;
    }
    for &(a, _, _) in &reason_edges {
        used[a as usize] = true;
    }
    let mut order: Vec<u32> = (0..set.accounts.len() as u32)
        .filter(|&a| used[a as usize])
        .collect();
    order.sort_unstable_by_key(|&a| &set.accounts[a as usize]);
    let mut remap = vec![u32::MAX; set.accounts.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old as usize] = new as u32;
    }
    let accounts = order
        .iter()
        .map(|&a| {
            let id = &set.accounts[a as usize];
            CoNode {
                id: id.clone(),
                affiliation: affiliations.get(id),
            }
        })
        .collect();
    let mut edges: Vec<(u32, u32, u64)> = weights
        .into_iter()
        .map(|(a, b, w)| {
            let (x, y) = (remap[a as usize], remap[b as usize]);
            (x.min(y), x.max(y), w)
        })
        .collect();
    edges.sort_unstable();

    let mut reason_order: Vec<u32> = reason_edges.iter().map(|e| e.1).collect();
    reason_order.sort_unstable_by_key(|&r| &set.reasons[r as usize]);
    reason_order.dedup();
    let mut reason_remap = HashMap::new();
    for (new, &old) in reason_order.iter().enumerate() {
        reason_remap.insert(old, new as u32);
    }
    let mut redges: Vec<(u32, u32, u64)> = reason_edges
        .into_iter()
        .map(|(a, r, w)| (remap[a as usize], reason_remap[&r], w))
        .collect();
    redges.sort_unstable();
    let mut degree = vec![0usize; reason_order.len()];
    for &(_, r, _) in &redges {
        degree[r as usize] += 1;
    }
    let reasons = reason_order
        .iter()
        .zip(degree)
        .map(|(&r, degree)| ReasonNode {
            id: set.reasons[r as usize].clone(),
            degree,
        })
        .collect();
    CoActivityGraph {
        kind: params.kind,
        gamma_secs: params.gamma.num_seconds(),
        windowing: params.windowing,
        accounts,
        edges,
        reasons,
        reason_edges: redges,
    }
}

/// Accounts gain one unit of edge weight per shared reason (sliding) or per
/// shared `(reason, bin)` (fixed bins).
pub fn co_activity(
    corpus: &PhasedCorpus,
    affiliations: &AffiliationMap,
    params: &CoActivityParams,
) -> Result<CoActivityGraph> {
    params.validate()?;
    let set = collect_events(corpus, params);
    let per_reason = pairs_by_reason(&set, params, origin_millis(corpus, params));
    let weights = count_pairs(per_reason.into_iter().flatten().collect());
    Ok(assemble(&set, params, affiliations, weights, Vec::new()))
}

/// Co-activity network plus reason nodes. Each account links to every
/// reason it used, weighted by its uses in the analysed tweets.
pub fn bigraph(
    corpus: &PhasedCorpus,
    affiliations: &AffiliationMap,
    params: &CoActivityParams,
) -> Result<CoActivityGraph> {
    params.validate()?;
    let set = collect_events(corpus, params);
    let per_reason = pairs_by_reason(&set, params, origin_millis(corpus, params));
    let mut reason_edges = Vec::new();
    for (run, pairs) in reason_runs(&set.events).into_iter().zip(&per_reason) {
        let coactive: BTreeSet<u32> = pairs
            .iter()
            .flat_map(|&k| {
                let (a, b) = unpack(k);
                [a, b]
            })
            .collect();
        let mut uses: BTreeMap<u32, u64> = BTreeMap::new();
        for e in run.iter() {
            if !params.coactive_only || coactive.contains(&e.account) {
                *uses.entry(e.account).or_default() += 1;
            }
        }
        reason_edges.extend(uses.into_iter().map(|(a, n)| (a, run[0].reason, n)));
    }
    let weights = count_pairs(per_reason.into_iter().flatten().collect());
    Ok(assemble(&set, params, affiliations, weights, reason_edges))
}

/// All-pairs reference implementation of sliding co-activity: every pair of
/// events on the same reason is compared directly.
pub fn co_activity_oracle(
    corpus: &PhasedCorpus,
    params: &CoActivityParams,
) -> BTreeMap<(String, String), u64> {
    let set = collect_events(corpus, params);
    let gamma = params.gamma.num_milliseconds();
    let mut by_reason: BTreeMap<u32, Vec<&Event>> = BTreeMap::new();
    for e in &set.events {
        by_reason.entry(e.reason).or_default().push(e);
    }
    let mut out: BTreeMap<(String, String), u64> = BTreeMap::new();
    for events in by_reason.values() {
        let mut seen = BTreeSet::new();
        for a in events {
            for b in events {
                if a.account != b.account && (a.millis - b.millis).abs() <= gamma {
                    let (x, y) = (
                        &set.accounts[a.account as usize],
                        &set.accounts[b.account as usize],
                    );
                    seen.insert(if x < y {
                        (x.clone(), y.clone())
                    } else {
                        (y.clone(), x.clone())
                    });
                }
            }
        }
        for pair in seen {
            *out.entry(pair).or_default() += 1;
        }
    }
    out.retain(|_, w| *w >= params.min_edge_weight);
    out
}

impl CoActivityGraph {
    pub fn account_index(&self, id: &str) -> Option<usize> {
        self.accounts
            .binary_search_by(|n| n.id.as_str().cmp(id))
            .ok()
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<u64> {
        let (x, y) = (self.account_index(a)? as u32, self.account_index(b)? as u32);
        let key = (x.min(y), x.max(y));
        self.edges
            .binary_search_by(|&(s, t, _)| (s, t).cmp(&key))
            .ok()
            .map(|i| self.edges[i].2)
    }

    /// Edges keyed by account ids, for comparisons.
    pub fn edge_map(&self) -> BTreeMap<(String, String), u64> {
        self.edges
            .iter()
            .map(|&(a, b, w)| {
                (
                    (
                        self.accounts[a as usize].id.clone(),
                        self.accounts[b as usize].id.clone(),
                    ),
                    w,
                )
            })
            .collect()
    }

    pub fn to_graphml(&self) -> GraphmlDoc {
        let mut doc = GraphmlDoc::new(&format!("{}_{}s", self.kind, self.gamma_secs), false);
        doc.keys
            .push(KeyDef::new("kind", KeyDomain::Graph, "string"));
        doc.keys
            .push(KeyDef::new("gamma_secs", KeyDomain::Graph, "long"));
        doc.keys
            .push(KeyDef::new("node_kind", KeyDomain::Node, "string"));
        doc.keys
            .push(KeyDef::new("reason_type", KeyDomain::Node, "string"));
        doc.keys
            .push(KeyDef::new("affiliation", KeyDomain::Node, "string"));
        doc.keys
            .push(KeyDef::new("edge_kind", KeyDomain::Edge, "string"));
        doc.keys
            .push(KeyDef::new("weight", KeyDomain::Edge, "long"));
        doc.graph_data.push(("kind".into(), self.kind.to_string()));
        doc.graph_data
            .push(("gamma_secs".into(), self.gamma_secs.to_string()));
        let reason_id = |r: u32| {
            format!(
                "{}:{}",
                self.kind.reason_type(),
                self.reasons[r as usize].id
            )
        };
        for n in &self.accounts {
            doc.nodes.push(GraphmlNode {
                id: n.id.clone(),
                data: vec![
                    ("node_kind".into(), "account".into()),
                    ("affiliation".into(), n.affiliation.to_string()),
                ],
            });
        }
        for (i, _) in self.reasons.iter().enumerate() {
            doc.nodes.push(GraphmlNode {
                id: reason_id(i as u32),
                data: vec![
                    ("node_kind".into(), "reason".into()),
                    ("reason_type".into(), self.kind.reason_type().into()),
                ],
            });
        }
        for &(a, b, w) in &self.edges {
            doc.edges.push(GraphmlEdge {
                source: self.accounts[a as usize].id.clone(),
                target: self.accounts[b as usize].id.clone(),
                data: vec![
                    ("edge_kind".into(), "coactivity".into()),
                    ("weight".into(), w.to_string()),
                ],
            });
        }
        for &(a, r, w) in &self.reason_edges {
            doc.edges.push(GraphmlEdge {
                source: self.accounts[a as usize].id.clone(),
                target: reason_id(r),
                data: vec![
                    ("edge_kind".into(), "uses".into()),
                    ("weight".into(), w.to_string()),
                ],
            });
        }
        doc
    }
}

// ---------------------------------------------------------------------------
// Component and clique report

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub rank: usize,
    pub nodes: usize,
    pub edges: usize,
    pub affiliation_counts: BTreeMap<Affiliation, usize>,
    pub affiliation_proportions: BTreeMap<Affiliation, f64>,
    /// Maximal cliques with at least three members, by size; larger sizes
    /// than `max_census_size` are pooled at that size.
    pub clique_census: BTreeMap<usize, u64>,
    pub maximal_cliques: u64,
    pub largest_clique: Vec<String>,
    /// The clique search stopped at the cap.
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinationReport {
    pub kind: CoKind,
    pub gamma_secs: i64,
    pub component_count: usize,
    pub components: Vec<ComponentSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportOptions {
    pub top_components: usize,
    pub clique_cap: u64,
    pub max_census_size: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            top_components: 5,
            clique_cap: 100_000,
            max_census_size: 6,
        }
    }
}

struct CliqueSearch<'a> {
    adj: &'a [Vec<u32>],
    cap: u64,
    found: u64,
    census: BTreeMap<usize, u64>,
    max_size: usize,
    largest: Vec<u32>,
    capped: bool,
}

impl CliqueSearch<'_> {
    /// Bron–Kerbosch with Tomita pivoting over sorted neighbour lists.
    fn expand(&mut self, r: &mut Vec<u32>, mut p: Vec<u32>, mut x: Vec<u32>) {
        if self.capped {
            return;
        }
        if p.is_empty() && x.is_empty() {
            if r.len() >= 3 {
                *self.census.entry(r.len().min(self.max_size)).or_default() += 1;
                self.found += 1;
                self.capped = self.found >= self.cap;
            }
            if r.len() > self.largest.len() {
                self.largest = r.clone();
            }
            return;
        }
        let pivot = p
            .iter()
            .chain(&x)
            .copied()
            .max_by_key(|&u| intersect(&p, &self.adj[u as usize]).len())
            .unwrap();
        let candidates: Vec<u32> = p
            .iter()
            .copied()
            .filter(|v| self.adj[pivot as usize].binary_search(v).is_err())
            .collect();
        for v in candidates {
            let nv = &self.adj[v as usize];
            r.push(v);
            self.expand(r, intersect(&p, nv), intersect(&x, nv));
            r.pop();
            p.retain(|&u| u != v);
            let pos = x.binary_search(&v).unwrap_or_else(|e| e);
            x.insert(pos, v);
            if self.capped {
                return;
            }
        }
    }
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Largest connected components of the account–account graph with their
/// affiliation mix and maximal-clique census.
pub fn coordination_report(graph: &CoActivityGraph, opts: &ReportOptions) -> CoordinationReport {
    let n = graph.accounts.len();
    let adj = Adjacency::undirected(n, graph.edges.iter().copied());
    let lists: Vec<Vec<u32>> = (0..n).map(|v| adj.neighbors(v).to_vec()).collect();
    let comps: Vec<Vec<u32>> = components(&adj)
        .into_iter()
        .filter(|c| c.len() > 1)
        .collect();
    let summaries = comps
        .iter()
        .take(opts.top_components)
        .enumerate()
        .map(|(rank, members)| {
            let mut counts: BTreeMap<Affiliation, usize> =
                Affiliation::ALL.iter().map(|a| (*a, 0)).collect();
            for &m in members {
                *counts
                    .get_mut(&graph.accounts[m as usize].affiliation)
                    .unwrap() += 1;
            }
            let edges = members
                .iter()
                .map(|&m| lists[m as usize].len())
                .sum::<usize>()
                / 2;
            let mut search = CliqueSearch {
                adj: &lists,
                cap: opts.clique_cap.max(1),
                found: 0,
                census: BTreeMap::new(),
                max_size: opts.max_census_size.max(3),
                largest: Vec::new(),
                capped: false,
            };
            search.expand(&mut Vec::new(), members.clone(), Vec::new());
            let mut largest: Vec<String> = search
                .largest
                .iter()
                .map(|&v| graph.accounts[v as usize].id.clone())
                .collect();
            largest.sort();
            ComponentSummary {
                rank: rank + 1,
                nodes: members.len(),
                edges,
                affiliation_proportions: counts
                    .iter()
                    .map(|(a, c)| (*a, *c as f64 / members.len() as f64))
                    .collect(),
                affiliation_counts: counts,
                clique_census: search.census,
                maximal_cliques: search.found,
                largest_clique: largest,
                capped: search.capped,
            }
        })
        .collect();
    CoordinationReport {
        kind: graph.kind,
        gamma_secs: graph.gamma_secs,
        component_count: comps.len(),
        components: summaries,
    }
}

impl CoordinationReport {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "kind",
            "gamma_secs",
            "rank",
            "nodes",
            "edges",
            "supporters",
            "opposers",
            "unaffiliated",
            "maximal_cliques",
            "largest_clique",
            "capped",
        ])
        .comment("one row per connected component of the co-activity graph, largest first")
        .comment("maximal_cliques: maximal cliques with at least 3 accounts; capped: search stopped at the cap");
        for c in &self.components {
            let count = |a| {
                c.affiliation_counts
                    .get(&a)
                    .copied()
                    .unwrap_or(0)
                    .to_string()
            };
            t.push([
                self.kind.to_string(),
                self.gamma_secs.to_string(),
                c.rank.to_string(),
                c.nodes.to_string(),
                c.edges.to_string(),
                count(Affiliation::Supporter),
                count(Affiliation::Opposer),
                count(Affiliation::Unaffiliated),
                c.maximal_cliques.to_string(),
                c.largest_clique.len().to_string(),
                c.capped.to_string(),
            ]);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assign_phases, PhaseConfig};
    use crate::fixture::{corpus, TweetBuilder};

    fn phased(b: Vec<TweetBuilder>) -> PhasedCorpus {
        assign_phases(corpus(b), PhaseConfig::single()).unwrap()
    }

    fn rt(id: &str, who: &str, secs: i64, orig: &str) -> TweetBuilder {
        TweetBuilder::new(id, who, secs).retweet(orig, "author")
    }

    fn params(kind: CoKind, secs: i64) -> CoActivityParams {
        CoActivityParams::new(kind, TimeDelta::seconds(secs))
    }

    #[test]
    fn sliding_and_fixed_windows() {
        let c = phased(vec![rt("1", "a", 10, "T"), rt("2", "b", 50, "T")]);
        let none = AffiliationMap::default();
        let g = co_activity(&c, &none, &params(CoKind::CoRetweet, 60)).unwrap();
        assert_eq!(g.weight("a", "b"), Some(1));
        let mut fixed = params(CoKind::CoRetweet, 60);
        fixed.windowing = Windowing::FixedBins;
        fixed.bin_origin = Some(crate::fixture::at(0));
        assert_eq!(
            co_activity(&c, &none, &fixed).unwrap().weight("a", "b"),
            Some(1)
        );

        let c = phased(vec![rt("1", "a", 50, "T"), rt("2", "b", 70, "T")]);
        assert_eq!(
            co_activity(&c, &none, &fixed).unwrap().weight("a", "b"),
            None
        );
        let g = co_activity(&c, &none, &params(CoKind::CoRetweet, 60)).unwrap();
        assert_eq!(g.weight("a", "b"), Some(1));
    }

    #[test]
    fn fixed_bins_default_to_corpus_start() {
        let c = phased(vec![rt("1", "a", 50, "T"), rt("2", "b", 70, "T")]);
        let mut fixed = params(CoKind::CoRetweet, 60);
        fixed.windowing = Windowing::FixedBins;
        let g = co_activity(&c, &AffiliationMap::default(), &fixed).unwrap();
        assert_eq!(g.weight("a", "b"), Some(1));
    }

    #[test]
    fn lone_account_has_no_edges() {
        let c = phased(vec![rt("1", "a", 0, "T"), rt("2", "a", 1, "T")]);
        let g = co_activity(
            &c,
            &AffiliationMap::default(),
            &params(CoKind::CoRetweet, 60),
        )
        .unwrap();
        assert!(g.edges.is_empty() && g.accounts.is_empty());
    }

    #[test]
    fn one_unit_per_reason_in_sliding_mode() {
        let c = phased(vec![
            TweetBuilder::new("1", "a", 0).hashtags(&["x", "y"]),
            TweetBuilder::new("2", "b", 5).hashtags(&["x", "y"]),
            TweetBuilder::new("3", "a", 10).hashtags(&["x"]),
            TweetBuilder::new("4", "b", 12).hashtags(&["x", "focal"]),
        ]);
        let mut p = params(CoKind::CoHashtag, 60);
        p.exclusions.insert("#Focal".into());
        let g = co_activity(&c, &AffiliationMap::default(), &p).unwrap();
        assert_eq!(g.weight("a", "b"), Some(2));
        let b = bigraph(&c, &AffiliationMap::default(), &p).unwrap();
        assert!(b.reasons.iter().all(|r| r.id != "focal"));
    }

    #[test]
    fn chain_is_a_path_not_a_triangle() {
        let c = phased(vec![
            rt("1", "a", 0, "T"),
            rt("2", "b", 50, "T"),
            rt("3", "c", 100, "T"),
        ]);
        let g = co_activity(
            &c,
            &AffiliationMap::default(),
            &params(CoKind::CoRetweet, 60),
        )
        .unwrap();
        assert_eq!(g.edges.len(), 2);
        assert_eq!(g.weight("a", "c"), None);
        let r = coordination_report(&g, &ReportOptions::default());
        assert_eq!(r.components[0].maximal_cliques, 0);
        assert_eq!(r.components[0].largest_clique.len(), 2);
    }

    #[test]
    fn retweets_of_retweets_key_on_root() {
        let c = phased(vec![
            TweetBuilder::new("root", "author", 0),
            rt("r1", "a", 10, "root"),
            rt("r2", "b", 20, "r1"),
        ]);
        let g = co_activity(
            &c,
            &AffiliationMap::default(),
            &params(CoKind::CoRetweet, 60),
        )
        .unwrap();
        assert_eq!(g.weight("a", "b"), Some(1));
    }

    #[test]
    fn comention_bigraph() {
        let c = phased(vec![
            TweetBuilder::new("1", "a", 0).mentions(&["M"]),
            TweetBuilder::new("2", "b", 20).mentions(&["M"]),
            TweetBuilder::new("3", "c", 40).mentions(&["M"]),
        ]);
        let g = bigraph(
            &c,
            &AffiliationMap::default(),
            &params(CoKind::CoMention, 60),
        )
        .unwrap();
        assert_eq!(
            g.reasons,
            vec![ReasonNode {
                id: "M".into(),
                degree: 3
            }]
        );
        assert_eq!(g.edges.len(), 3);
        let doc = g.to_graphml();
        assert_eq!(doc.nodes.len(), 4);
        assert_eq!(doc.edges.len(), 6);
    }

    #[test]
    fn single_account_bigraph_is_a_star() {
        let c = phased(vec![
            TweetBuilder::new("1", "a", 0).hashtags(&["x", "y"]),
            TweetBuilder::new("2", "a", 5).hashtags(&["z", "x"]),
        ]);
        let g = bigraph(
            &c,
            &AffiliationMap::default(),
            &params(CoKind::CoHashtag, 60),
        )
        .unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(g.reason_edges, vec![(0, 0, 2), (0, 1, 1), (0, 2, 1)]);
        let mut p = params(CoKind::CoHashtag, 60);
        p.coactive_only = true;
        assert!(bigraph(&c, &AffiliationMap::default(), &p)
            .unwrap()
            .reason_edges
            .is_empty());
    }

    #[test]
    fn domains_and_urls() {
        let c = phased(vec![
            TweetBuilder::new("1", "a", 0).urls(&["https://www.abc.net.au/a"]),
            TweetBuilder::new("2", "b", 30).urls(&["https://abc.net.au/b/"]),
        ]);
        let none = AffiliationMap::default();
        assert!(co_activity(&c, &none, &params(CoKind::CoUrl, 60))
            .unwrap()
            .edges
            .is_empty());
        let g = co_activity(&c, &none, &params(CoKind::CoDomain, 60)).unwrap();
        assert_eq!(g.weight("a", "b"), Some(1));
    }

    #[test]
    fn clique_report() {
        let mut b = Vec::new();
        for i in 0..10 {
            b.push(rt(&format!("c{i}"), &format!("m{i}"), i * 3, "T"));
        }
        b.push(rt("x", "loner", 10_000, "T"));
        let c = phased(b);
        let aff =
            AffiliationMap::from_pairs((0..5).map(|i| (format!("m{i}"), Affiliation::Supporter)));
        let g = co_activity(&c, &aff, &params(CoKind::CoRetweet, 60)).unwrap();
        assert_eq!(g.edges.len(), 45);
        let r = coordination_report(&g, &ReportOptions::default());
        assert_eq!(r.component_count, 1);
        let comp = &r.components[0];
        assert_eq!(comp.largest_clique.len(), 10);
        assert_eq!(comp.maximal_cliques, 1);
        assert_eq!(comp.clique_census.get(&6), Some(&1));
        assert_eq!(comp.affiliation_proportions[&Affiliation::Supporter], 0.5);
    }

    #[test]
    fn matches_oracle_and_is_monotone_in_gamma() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut b = Vec::new();
        for i in 0..400 {
            let who = format!("u{}", rng.gen_range(0..30));
            let orig = format!("o{}", rng.gen_range(0..15));
            b.push(rt(&format!("t{i}"), &who, rng.gen_range(0..3_000), &orig));
        }
        let c = phased(b);
        let none = AffiliationMap::default();
        let mut prev: Option<BTreeMap<(String, String), u64>> = None;
        for gamma in [1, 10, 60, 300, 3_000] {
            let p = params(CoKind::CoRetweet, gamma);
            let got = co_activity(&c, &none, &p).unwrap().edge_map();
            assert_eq!(got, co_activity_oracle(&c, &p));
            if let Some(prev) = prev {
                for (k, w) in prev {
                    assert!(got.get(&k).copied().unwrap_or(0) >= w);
                }
            }
            prev = Some(got);
        }
    }

    #[test]
    fn unknown_kind_is_config_error() {
        assert!(matches!(
            "co_vibes".parse::<CoKind>(),
            Err(Error::Config(_))
        ));
        assert_eq!("co-url".parse::<CoKind>().unwrap(), CoKind::CoUrl);
    }
}
