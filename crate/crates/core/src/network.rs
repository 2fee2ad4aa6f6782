//! Weighted directed account networks, one per interaction kind.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::affiliation::{Affiliation, AffiliationMap};
use crate::corpus::{Corpus, PhasedCorpus, TweetRecord};
use crate::error::{Error, Result};
use crate::export::{
    edgelist_csv, lookup, GraphmlDoc, GraphmlEdge, GraphmlNode, KeyDef, KeyDomain,
};
use crate::graph::{components, strong_components, Adjacency};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Retweet,
    Reply,
    Mention,
    Quote,
}

impl InteractionKind {
    pub const ALL: [InteractionKind; 4] = [
        InteractionKind::Retweet,
        InteractionKind::Reply,
        InteractionKind::Mention,
        InteractionKind::Quote,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InteractionKind::Retweet => "retweet",
            InteractionKind::Reply => "reply",
            InteractionKind::Mention => "mention",
            InteractionKind::Quote => "quote",
        }
    }

    /// Interaction targets of this kind carried by one tweet, with multiplicity.
    pub fn targets(self, t: &TweetRecord) -> impl Iterator<Item = &str> {
        let single = match self {
            InteractionKind::Retweet => t.retweet_of.as_ref(),
            InteractionKind::Reply => t.reply_to.as_ref(),
            InteractionKind::Quote => t.quote_of.as_ref(),
            InteractionKind::Mention => None,
        };
        let mentions: &[String] = if self == InteractionKind::Mention {
            &t.mentions
        } else {
            &[]
        };
        single
            .map(|r| r.account_id.as_str())
            .into_iter()
            .chain(mentions.iter().map(String::as_str))
    }
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InteractionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "retweet" | "retweets" => Ok(InteractionKind::Retweet),
            "reply" | "replies" => Ok(InteractionKind::Reply),
            "mention" | "mentions" => Ok(InteractionKind::Mention),
            "quote" | "quotes" => Ok(InteractionKind::Quote),
            other => Err(Error::Config(format!("unknown interaction kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkNode {
    pub id: String,
    pub affiliation: Option<Affiliation>,
    /// Interaction target that never authored a tweet in the corpus.
    pub observed_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub source: u32,
    pub target: u32,
    pub weight: u64,
}

/// Directed weighted network. Nodes are sorted by id and edges by
/// `(source, target)`, so iteration order is stable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionNetwork {
    pub kind: InteractionKind,
    pub phase: Option<usize>,
    nodes: Vec<NetworkNode>,
    index: HashMap<String, u32>,
    edges: Vec<Edge>,
}

impl InteractionNetwork {
    /// Assembles a network from `(source, target, weight)` triples; repeated
    /// pairs accumulate.
    pub fn from_weighted_edges<S: AsRef<str>>(
        kind: InteractionKind,
        phase: Option<usize>,
        edges: impl IntoIterator<Item = (S, S, u64)>,
        is_author: impl Fn(&str) -> bool,
    ) -> Self {
        let mut pairs: HashMap<(String, String), u64> = HashMap::new();
        for (s, t, w) in edges {
            *pairs
                .entry((s.as_ref().to_owned(), t.as_ref().to_owned()))
                .or_default() += w;
        }
        Self::from_pair_map(kind, phase, pairs, &[], is_author)
    }

    fn from_pair_map(
        kind: InteractionKind,
        phase: Option<usize>,
        pairs: HashMap<(String, String), u64>,
        extra_nodes: &[&str],
        is_author: impl Fn(&str) -> bool,
    ) -> Self {
        let mut ids: Vec<&str> = pairs
            .keys()
            .flat_map(|(s, t)| [s.as_str(), t.as_str()])
            .chain(extra_nodes.iter().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        let nodes: Vec<NetworkNode> = ids
            .iter()
            .map(|id| NetworkNode {
                id: (*id).to_owned(),
                affiliation: None,
                observed_only: !is_author(id),
            })
            .collect();
        let index: HashMap<String, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i as u32))
            .collect();
        let mut edges: Vec<Edge> = pairs
            .iter()
            .filter(|(_, &w)| w > 0)
            .map(|((s, t), &w)| Edge {
                source: index[s],
                target: index[t],
                weight: w,
            })
            .collect();
        edges.sort_unstable();
        InteractionNetwork {
            kind,
            phase,
            nodes,
            index,
            edges,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NetworkNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| i as usize)
    }

    pub fn node_id(&self, index: usize) -> &str {
        &self.nodes[index].id
    }

    pub fn weight(&self, source: &str, target: &str) -> Option<u64> {
        let s = *self.index.get(source)?;
        let t = *self.index.get(target)?;
        self.edges
            .binary_search_by(|e| (e.source, e.target).cmp(&(s, t)))
            .ok()
            .map(|i| self.edges[i].weight)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn self_loops(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.source == e.target)
    }

    /// Weighted indegree per node (for retweets: times retweeted).
    pub fn in_strength(&self) -> Vec<u64> {
        let mut out = vec![0; self.nodes.len()];
        for e in &self.edges {
            out[e.target as usize] += e.weight;
        }
        out
    }

    pub fn out_strength(&self) -> Vec<u64> {
        let mut out = vec![0; self.nodes.len()];
        for e in &self.edges {
            out[e.source as usize] += e.weight;
        }
        out
    }

    pub fn arcs(&self) -> impl Iterator<Item = (u32, u32, u64)> + '_ {
        self.edges.iter().map(|e| (e.source, e.target, e.weight))
    }

    pub fn directed_adjacency(&self) -> Adjacency {
        Adjacency::from_arcs(self.node_count(), self.arcs())
    }

    /// Weight-symmetrized undirected projection without self-loops.
    pub fn undirected_adjacency(&self) -> Adjacency {
        Adjacency::undirected(self.node_count(), self.arcs())
    }

    /// Node affiliations, Unaffiliated where not set.
    pub fn affiliations(&self) -> Vec<Affiliation> {
        self.nodes
            .iter()
            .map(|n| n.affiliation.unwrap_or(Affiliation::Unaffiliated))
            .collect()
    }

    pub fn with_affiliations(mut self, map: &AffiliationMap) -> Self {
        for n in &mut self.nodes {
            n.affiliation = Some(map.get(&n.id));
        }
        self
    }

    /// Subgraph induced by the given node indices.
    pub fn induced(&self, keep: &[u32]) -> Self {
        let mut mask = vec![false; self.nodes.len()];
        for &k in keep {
            mask[k as usize] = true;
        }
        let mut remap = vec![u32::MAX; self.nodes.len()];
        let mut nodes = Vec::with_capacity(keep.len());
        for (i, n) in self.nodes.iter().enumerate() {
            if mask[i] {
                remap[i] = nodes.len() as u32;
                nodes.push(n.clone());
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| mask[e.source as usize] && mask[e.target as usize])
            .map(|e| Edge {
                source: remap[e.source as usize],
                target: remap[e.target as usize],
                weight: e.weight,
            })
            .collect();
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n): (usize, &NetworkNode)| (n.id.clone(), i as u32))
            .collect();
        InteractionNetwork {
            kind: self.kind,
            phase: self.phase,
            nodes,
            index,
            edges,
        }
    }
}

/// Builds the `kind` network over tweets in `phase` (all phases when `None`).
/// Edges run from the acting account to the target account; mention edges
/// count every mention occurrence.
pub fn build_network(
    corpus: &PhasedCorpus,
    kind: InteractionKind,
    phase: Option<usize>,
) -> InteractionNetwork {
    build_from_tweets(
        corpus.corpus(),
        kind,
        phase,
        corpus.tweets_in(phase).map(|(_, t)| t),
    )
}

pub fn build_from_tweets<'a>(
    corpus: &Corpus,
    kind: InteractionKind,
    phase: Option<usize>,
    tweets: impl Iterator<Item = &'a TweetRecord>,
) -> InteractionNetwork {
    // Intern ids locally to keep the pair map small on large corpora.
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut names: Vec<&str> = Vec::new();
    let mut intern = |s: &'a str| -> u32 {
        *ids.entry(s).or_insert_with(|| {
            names.push(s);
            (names.len() - 1) as u32
        })
    };
    let mut pairs: HashMap<(u32, u32), u64> = HashMap::new();
    for t in tweets {
        let src = intern(t.author_id());
        for target in kind.targets(t) {
            let dst = intern(target);
            *pairs.entry((src, dst)).or_default() += 1;
        }
    }
    let mut order: Vec<u32> = pairs.keys().flat_map(|&(s, t)| [s, t]).collect();
    order.sort_unstable_by_key(|&i| names[i as usize]);
    order.dedup();
    let mut remap = vec![u32::MAX; names.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old as usize] = new as u32;
    }
    let nodes: Vec<NetworkNode> = order
        .iter()
        .map(|&i| {
            let id = names[i as usize];
            NetworkNode {
                id: id.to_owned(),
                affiliation: None,
                observed_only: !corpus.is_author(id),
            }
        })
        .collect();
    let index = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.clone(), i as u32))
        .collect();
    let mut edges: Vec<Edge> = pairs
        .into_iter()
        .map(|((s, t), w)| Edge {
            source: remap[s as usize],
            target: remap[t as usize],
            weight: w,
        })
        .collect();
    edges.sort_unstable();
    InteractionNetwork {
        kind,
        phase,
        nodes,
        index,
        edges,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    #[default]
    Weak,
    Strong,
}

#[derive(Debug, Clone)]
pub struct Component {
    pub network: InteractionNetwork,
    /// Component nodes divided by all nodes; 0 for an empty network.
    pub coverage: f64,
}

pub fn largest_component(net: &InteractionNetwork, mode: Connectivity) -> Component {
    if net.is_empty() {
        return Component {
            network: net.clone(),
            coverage: 0.0,
        };
    }
    let comps = match mode {
        Connectivity::Weak => components(&net.undirected_adjacency()),
        Connectivity::Strong => strong_components(&net.directed_adjacency()),
    };
    let largest = &comps[0];
    Component {
        network: net.induced(largest),
        coverage: largest.len() as f64 / net.node_count() as f64,
    }
}

// ---------------------------------------------------------------------------
// Export

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    Graphml,
    EdgelistCsv,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graphml" => Ok(ExportFormat::Graphml),
            "edgelist-csv" | "csv" => Ok(ExportFormat::EdgelistCsv),
            other => Err(Error::Config(format!("unknown export format `{other}`"))),
        }
    }
}

/// Optional per-node attributes added to GraphML exports.
#[derive(Debug, Clone, Default)]
pub struct ExportAttributes {
    pub degree: bool,
    pub kcore: Option<Vec<u32>>,
}

impl InteractionNetwork {
    pub fn to_graphml(&self, attrs: &ExportAttributes) -> GraphmlDoc {
        let mut doc = GraphmlDoc::new(self.kind.as_str(), true);
        doc.keys.extend([
            KeyDef::new("kind", KeyDomain::Graph, "string"),
            KeyDef::new("phase", KeyDomain::Graph, "string"),
            KeyDef::new("node_count", KeyDomain::Graph, "long"),
            KeyDef::new("edge_count", KeyDomain::Graph, "long"),
            KeyDef::new("affiliation", KeyDomain::Node, "string"),
            KeyDef::new("observed_only", KeyDomain::Node, "boolean"),
        ]);
        if attrs.degree {
            doc.keys
                .push(KeyDef::new("degree", KeyDomain::Node, "long"));
        }
        if attrs.kcore.is_some() {
            doc.keys.push(KeyDef::new("kcore", KeyDomain::Node, "long"));
        }
        doc.keys
            .push(KeyDef::new("weight", KeyDomain::Edge, "long"));
        doc.graph_data = vec![
            ("kind".into(), self.kind.as_str().into()),
            (
                "phase".into(),
                self.phase
                    .map(|p| p.to_string())
                    .unwrap_or_else(|| "all".into()),
            ),
            ("node_count".into(), self.node_count().to_string()),
            ("edge_count".into(), self.edge_count().to_string()),
        ];
        let undirected = attrs.degree.then(|| self.undirected_adjacency());
        for (i, n) in self.nodes.iter().enumerate() {
            let mut data = Vec::new();
            if let Some(a) = n.affiliation {
                data.push(("affiliation".into(), a.as_str().into()));
            }
            data.push(("observed_only".into(), n.observed_only.to_string()));
            if let Some(adj) = &undirected {
                data.push(("degree".into(), adj.degree(i).to_string()));
            }
            if let Some(k) = &attrs.kcore {
                data.push(("kcore".into(), k[i].to_string()));
            }
            doc.nodes.push(GraphmlNode {
                id: n.id.clone(),
                data,
            });
        }
        for e in &self.edges {
            doc.edges.push(GraphmlEdge {
                source: self.nodes[e.source as usize].id.clone(),
                target: self.nodes[e.target as usize].id.clone(),
                data: vec![("weight".into(), e.weight.to_string())],
            });
        }
        doc
    }

    pub fn from_graphml(doc: &GraphmlDoc) -> Result<Self> {
        let kind: InteractionKind = doc.graph_value("kind").unwrap_or(&doc.graph_id).parse()?;
        let phase = match doc.graph_value("phase") {
            None | Some("all") => None,
            Some(p) => Some(
                p.parse()
                    .map_err(|_| Error::Graphml(format!("bad phase `{p}`")))?,
            ),
        };
        let mut pairs = HashMap::new();
        for e in &doc.edges {
            let w = lookup(&e.data, "weight")
                .unwrap_or("1")
                .parse::<u64>()
                .map_err(|_| Error::Graphml("bad edge weight".into()))?;
            *pairs
                .entry((e.source.clone(), e.target.clone()))
                .or_default() += w;
        }
        let observed: HashMap<&str, bool> = doc
            .nodes
            .iter()
            .map(|n| {
                (
                    n.id.as_str(),
                    lookup(&n.data, "observed_only") == Some("true"),
                )
            })
            .collect();
        let extra: Vec<&str> = doc.nodes.iter().map(|n| n.id.as_str()).collect();
        let mut net = Self::from_pair_map(kind, phase, pairs, &extra, |id| {
            !observed.get(id).copied().unwrap_or(false)
        });
        let affil: HashMap<&str, Option<Affiliation>> = doc
            .nodes
            .iter()
            .map(|n| {
                (
                    n.id.as_str(),
                    lookup(&n.data, "affiliation").and_then(|a| a.parse().ok()),
                )
            })
            .collect();
        for n in &mut net.nodes {
            n.affiliation = affil.get(n.id.as_str()).copied().flatten();
        }
        Ok(net)
    }

    pub fn to_edgelist_csv(&self) -> Result<Vec<u8>> {
        edgelist_csv(self.edges.iter().map(|e| {
            (
                self.nodes[e.source as usize].id.as_str(),
                self.nodes[e.target as usize].id.as_str(),
                e.weight,
            )
        }))
    }

    pub fn export(&self, format: ExportFormat, attrs: &ExportAttributes) -> Result<Vec<u8>> {
        match format {
            ExportFormat::Graphml => Ok(self.to_graphml(attrs).to_xml().into_bytes()),
            ExportFormat::EdgelistCsv => self.to_edgelist_csv(),
        }
    }

    pub fn export_to(
        &self,
        path: &std::path::Path,
        format: ExportFormat,
        attrs: &ExportAttributes,
    ) -> Result<()> {
        crate::export::write_atomic(path, &self.export(format, attrs)?)
    }
}
