//! Hashtag and URL content analyses: co-mention networks, Eq.-style
//! account/hashtag networks, partisan hashtags, URL categories and
//! self-reported locations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::affiliation::{Affiliation, AffiliationMap};
use crate::corpus::{Corpus, PhasedCorpus, TweetRecord};
use crate::error::{Error, Result};
use crate::export::{
    edgelist_csv, sha256_hex, GraphmlDoc, GraphmlEdge, GraphmlNode, KeyDef, KeyDomain,
};
use crate::metrics::PhaseSlot;
use crate::report::{opt, ratio, Table};

/// Undirected weighted graph over string-labelled nodes. Edges are stored
/// once with `source < target`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WeightedGraph {
    pub label: String,
    pub nodes: Vec<String>,
    pub edges: Vec<(u32, u32, u64)>,
}

impl WeightedGraph {
    fn from_pairs<S: AsRef<str> + Ord>(
        label: &str,
        nodes: impl IntoIterator<Item = S>,
        pairs: HashMap<(S, S), u64>,
    ) -> Self {
        let mut names: Vec<String> = nodes.into_iter().map(|s| s.as_ref().to_owned()).collect();
        for (a, b) in pairs.keys() {
            names.push(a.as_ref().to_owned());
            names.push(b.as_ref().to_owned());
        }
        names.sort_unstable();
        names.dedup();
        let idx = |s: &str| names.binary_search_by(|n| n.as_str().cmp(s)).unwrap() as u32;
        let mut edges: Vec<(u32, u32, u64)> = pairs
            .iter()
            .map(|((a, b), &w)| {
                let (x, y) = (idx(a.as_ref()), idx(b.as_ref()));
                (x.min(y), x.max(y), w)
            })
            .collect();
        edges.sort_unstable();
        WeightedGraph {
            label: label.to_owned(),
            nodes: names,
            edges,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(id)).ok()
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<u64> {
        let (x, y) = (self.node_index(a)? as u32, self.node_index(b)? as u32);
        let key = (x.min(y), x.max(y));
        self.edges
            .binary_search_by(|&(s, t, _)| (s, t).cmp(&key))
            .ok()
            .map(|i| self.edges[i].2)
    }

    pub fn groups(&self, map: &AffiliationMap) -> Vec<Affiliation> {
        self.nodes.iter().map(|n| map.get(n)).collect()
    }

    pub fn to_graphml(&self, affiliations: Option<&AffiliationMap>) -> GraphmlDoc {
        let mut doc = GraphmlDoc::new(&self.label, false);
        doc.keys
            .push(KeyDef::new("node_count", KeyDomain::Graph, "long"));
        doc.keys
            .push(KeyDef::new("edge_count", KeyDomain::Graph, "long"));
        if affiliations.is_some() {
            doc.keys
                .push(KeyDef::new("affiliation", KeyDomain::Node, "string"));
        }
        doc.keys
            .push(KeyDef::new("weight", KeyDomain::Edge, "long"));
        doc.graph_data
            .push(("node_count".into(), self.node_count().to_string()));
        doc.graph_data
            .push(("edge_count".into(), self.edge_count().to_string()));
        for n in &self.nodes {
            let data = affiliations
                .map(|m| vec![("affiliation".to_owned(), m.get(n).to_string())])
                .unwrap_or_default();
            doc.nodes.push(GraphmlNode {
                id: n.clone(),
                data,
            });
        }
        for &(s, t, w) in &self.edges {
            doc.edges.push(GraphmlEdge {
                source: self.nodes[s as usize].clone(),
                target: self.nodes[t as usize].clone(),
                data: vec![("weight".into(), w.to_string())],
            });
        }
        doc
    }

    pub fn to_edgelist_csv(&self) -> Result<Vec<u8>> {
        edgelist_csv(self.edges.iter().map(|&(s, t, w)| {
            (
                self.nodes[s as usize].as_str(),
                self.nodes[t as usize].as_str(),
                w,
            )
        }))
    }
}

fn in_group(map: &AffiliationMap, group: Option<Affiliation>, account: &str) -> bool {
    group.is_none_or(|g| map.get(account) == g)
}

/// Hashtags linked by the number of distinct accounts (of `group`, or all
/// accounts when `None`) that used both, in any tweets. Edges lighter than
/// `min_weight` are dropped; nodes are the endpoints of surviving edges.
pub fn hashtag_comention(
    corpus: &Corpus,
    affiliations: &AffiliationMap,
    group: Option<Affiliation>,
    min_weight: u64,
    exclude: &BTreeSet<String>,
) -> WeightedGraph {
    let mut pairs: HashMap<(&str, &str), u64> = HashMap::new();
    for account in corpus.accounts() {
        if !in_group(affiliations, group, account) {
            continue;
        }
        let tags: BTreeSet<&str> = corpus
            .tweets_by(account)
            .iter()
            .flat_map(|&i| corpus.tweets()[i].hashtags.iter().map(String::as_str))
            .filter(|h| !exclude.contains(*h))
            .collect();
        let tags: Vec<&str> = tags.into_iter().collect();
        for (i, a) in tags.iter().enumerate() {
            for b in &tags[i + 1..] {
                *pairs.entry((a, b)).or_default() += 1;
            }
        }
    }
    pairs.retain(|_, w| *w >= min_weight.max(1));
    let label = group.map_or_else(|| "all".to_owned(), |g| g.to_string());
    WeightedGraph::from_pairs(
        &format!("hashtag_comention_{label}"),
        std::iter::empty(),
        pairs,
    )
}

/// Account network in which `w(u,v) = Σ_i h_u(i)·h_v(i)` over hashtags in
/// `universe`, counting uses within `tweets`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AccountHashtagNetwork {
    pub graph: WeightedGraph,
    pub hashtags: Vec<String>,
}

pub fn account_cohashtag_network<'a>(
    tweets: impl IntoIterator<Item = &'a TweetRecord>,
    universe: &BTreeSet<String>,
) -> Result<AccountHashtagNetwork> {
    if universe.is_empty() {
        return Err(Error::Config(
            "account/hashtag network needs a nonempty hashtag set".into(),
        ));
    }
    let mut uses: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    let mut accounts: BTreeSet<&str> = BTreeSet::new();
    for t in tweets {
        for h in t.hashtags.iter().filter(|h| universe.contains(*h)) {
            *uses.entry(h).or_default().entry(t.author_id()).or_default() += 1;
            accounts.insert(t.author_id());
        }
    }
    let mut pairs: HashMap<(&str, &str), u64> = HashMap::new();
    for users in uses.values() {
        let users: Vec<(&str, u64)> = users.iter().map(|(a, c)| (*a, *c)).collect();
        for (i, &(u, hu)) in users.iter().enumerate() {
            for &(v, hv) in &users[i + 1..] {
                *pairs.entry((u, v)).or_default() += hu * hv;
            }
        }
    }
    Ok(AccountHashtagNetwork {
        graph: WeightedGraph::from_pairs("account_hashtag", accounts, pairs),
        hashtags: universe.iter().cloned().collect(),
    })
}

fn hashtag_uses<'a>(tweets: impl IntoIterator<Item = &'a TweetRecord>) -> BTreeMap<&'a str, u64> {
    let mut counts = BTreeMap::new();
    for t in tweets {
        for h in &t.hashtags {
            *counts.entry(h.as_str()).or_default() += 1;
        }
    }
    counts
}

/// Items ordered by count descending, then name ascending.
fn ranked<'a>(counts: &BTreeMap<&'a str, u64>) -> Vec<(&'a str, u64)> {
    let mut v: Vec<(&str, u64)> = counts.iter().map(|(k, c)| (*k, *c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartisanHashtags {
    pub supporter_seeds: Vec<(String, u64)>,
    pub opposer_seeds: Vec<(String, u64)>,
    pub globally_excluded: Vec<String>,
    pub universe: BTreeSet<String>,
    /// Corpus indices of tweets containing any seed hashtag.
    pub tweets: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Seeds from the `k` most used hashtags exclusive to each labeled group,
/// widened to every hashtag co-occurring with a seed, minus the corpus-wide
/// top `global_exclude_k`.
pub fn partisan_hashtags(
    corpus: &Corpus,
    affiliations: &AffiliationMap,
    k: usize,
    global_exclude_k: usize,
) -> Result<PartisanHashtags> {
    let by_group = |g: Affiliation| {
        hashtag_uses(
            corpus
                .tweets()
                .iter()
                .filter(move |t| affiliations.get(t.author_id()) == g),
        )
    };
    let (sup, opp) = (
        by_group(Affiliation::Supporter),
        by_group(Affiliation::Opposer),
    );
    for g in Affiliation::LABELED {
        if !corpus.accounts().any(|a| affiliations.get(a) == g) {
            return Err(Error::Config(format!("no {g} accounts in the corpus")));
        }
    }
    let mut warnings = Vec::new();
    let mut exclusive =
        |mine: &BTreeMap<&str, u64>, theirs: &BTreeMap<&str, u64>, g: Affiliation| {
            let only: BTreeMap<&str, u64> = mine
                .iter()
                .filter(|(h, _)| !theirs.contains_key(*h))
                .map(|(h, c)| (*h, *c))
                .collect();
            let top: Vec<(String, u64)> = ranked(&only)
                .into_iter()
                .take(k)
                .map(|(h, c)| (h.to_owned(), c))
                .collect();
            if top.len() < k {
                warnings.push(format!(
                    "only {} exclusive {g} hashtags (wanted {k})",
                    top.len()
                ));
            }
            top
        };
    let supporter_seeds = exclusive(&sup, &opp, Affiliation::Supporter);
    let opposer_seeds = exclusive(&opp, &sup, Affiliation::Opposer);
    let seeds: BTreeSet<&str> = supporter_seeds
        .iter()
        .chain(&opposer_seeds)
        .map(|(h, _)| h.as_str())
        .collect();
    let tweets: Vec<usize> = corpus
        .tweets()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.hashtags.iter().any(|h| seeds.contains(h.as_str())))
        .map(|(i, _)| i)
        .collect();
    let globally_excluded: Vec<String> = ranked(&hashtag_uses(corpus.tweets()))
        .into_iter()
        .take(global_exclude_k)
        .map(|(h, _)| h.to_owned())
        .collect();
    let universe = tweets
        .iter()
        .flat_map(|&i| corpus.tweets()[i].hashtags.iter())
        .filter(|h| !globally_excluded.contains(h))
        .cloned()
        .collect();
    Ok(PartisanHashtags {
        supporter_seeds,
        opposer_seeds,
        globally_excluded,
        universe,
        tweets,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// URLs

const TRACKING_PARAMS: [&str; 2] = ["fbclid", "gclid"];

/// Lowercase scheme and host, no fragment, no tracking parameters
/// (`utm_*`, `fbclid`, `gclid`), no trailing slash. Unparseable input is
/// returned trimmed.
pub fn canonical_url(raw: &str) -> String {
    let Ok(mut u) = Url::parse(raw.trim()) else {
        return raw.trim().to_owned();
    };
    u.set_fragment(None);
    if u.query().is_some() {
        let pairs: Vec<(String, String)> = u
            .query_pairs()
            .map(|(k, v)| (k.into_owned(), v.into_owned()))
            .collect();
        let kept: Vec<&(String, String)> = pairs
            .iter()
            .filter(|(k, _)| {
                let k = k.to_ascii_lowercase();
                !k.starts_with("utm_") && !TRACKING_PARAMS.contains(&k.as_str())
            })
            .collect();
        if kept.is_empty() {
            u.set_query(None);
        } else if kept.len() < pairs.len() {
            u.query_pairs_mut()
                .clear()
                .extend_pairs(kept.iter().map(|(k, v)| (k, v)));
        }
    }
    let path = u.path().to_owned();
    if path.len() > 1 && path.ends_with('/') {
        u.set_path(path.trim_end_matches('/'));
    }
    let mut s = String::from(u);
    if s.ends_with('/') {
        s.pop();
    }
    s
}

fn host_of(url: &str) -> Option<String> {
    Url::parse(url.trim())
        .ok()?
        .host_str()
        .map(|h| h.to_ascii_lowercase())
}

/// Registered domain (public suffix + one label), or the bare host when no
/// suffix rule applies.
pub fn registered_domain(url: &str) -> Option<String> {
    let host = host_of(url)?;
    let host = host.trim_end_matches('.');
    Some(psl::domain_str(host).unwrap_or(host).to_owned())
}

/// Links to tweets on the platform itself.
pub fn is_internal_url(url: &str) -> bool {
    let Ok(u) = Url::parse(url.trim()) else {
        return false;
    };
    let Some(host) = u.host_str() else {
        return false;
    };
    let host = host.to_ascii_lowercase();
    let platform = ["twitter.com", "x.com"]
        .iter()
        .any(|d| host == *d || host.ends_with(&format!(".{d}")));
    platform && u.path().contains("/status/")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum UrlCategory {
    Narrative,
    Conspiracy,
    Debunking,
    Other,
    Uncategorized,
}

impl UrlCategory {
    pub const ALL: [UrlCategory; 5] = [
        UrlCategory::Narrative,
        UrlCategory::Conspiracy,
        UrlCategory::Debunking,
        UrlCategory::Other,
        UrlCategory::Uncategorized,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UrlCategory::Narrative => "NARRATIVE",
            UrlCategory::Conspiracy => "CONSPIRACY",
            UrlCategory::Debunking => "DEBUNKING",
            UrlCategory::Other => "OTHER",
            UrlCategory::Uncategorized => "UNCATEGORIZED",
        }
    }
}

impl fmt::Display for UrlCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UrlCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NARRATIVE" => Ok(UrlCategory::Narrative),
            "CONSPIRACY" => Ok(UrlCategory::Conspiracy),
            "DEBUNKING" => Ok(UrlCategory::Debunking),
            "OTHER" => Ok(UrlCategory::Other),
            other => Err(Error::Config(format!("unknown URL category `{other}`"))),
        }
    }
}

/// Canonical URL → category, read from a `url,category` CSV.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UrlCategoryMap {
    map: BTreeMap<String, UrlCategory>,
    pub provenance: String,
}

impl UrlCategoryMap {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, UrlCategory)>) -> Self {
        UrlCategoryMap {
            map: pairs
                .into_iter()
                .map(|(u, c)| (canonical_url(u), c))
                .collect(),
            provenance: String::new(),
        }
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        let mut map = BTreeMap::new();
        for row in r.records() {
            let row = row?;
            let (Some(url), Some(cat)) = (row.get(0), row.get(1)) else {
                return Err(Error::Config(format!("short URL category row {row:?}")));
            };
            map.insert(canonical_url(url), cat.parse()?);
        }
        Ok(UrlCategoryMap {
            map,
            provenance: sha256_hex(bytes),
        })
    }

    pub fn category(&self, url: &str) -> UrlCategory {
        self.map
            .get(&canonical_url(url))
            .copied()
            .unwrap_or(UrlCategory::Uncategorized)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UrlCategoryRow {
    pub group: Affiliation,
    pub phase: PhaseSlot,
    pub external_uses: u64,
    pub counts: BTreeMap<UrlCategory, u64>,
}

/// External-URL uses per category for every group × phase cell.
pub fn categorize_urls(
    corpus: &PhasedCorpus,
    affiliations: &AffiliationMap,
    map: &UrlCategoryMap,
) -> Vec<UrlCategoryRow> {
    let mut cells: BTreeMap<(Affiliation, PhaseSlot), BTreeMap<UrlCategory, u64>> = BTreeMap::new();
    for (i, t) in corpus.tweets_in(None) {
        let g = affiliations.get(t.author_id());
        for url in t.urls.iter().filter(|u| !is_internal_url(u)) {
            let c = map.category(url);
            for slot in [
                PhaseSlot::Phase(corpus.phase_of_tweet(i)),
                PhaseSlot::Overall,
            ] {
                *cells.entry((g, slot)).or_default().entry(c).or_default() += 1;
            }
        }
    }
    let mut rows = Vec::new();
    for group in Affiliation::ALL {
        for slot in PhaseSlot::all(corpus.phase_count()) {
            let found = cells.remove(&(group, slot)).unwrap_or_default();
            let counts: BTreeMap<UrlCategory, u64> = UrlCategory::ALL
                .iter()
                .map(|c| (*c, found.get(c).copied().unwrap_or(0)))
                .collect();
            rows.push(UrlCategoryRow {
                group,
                phase: slot,
                external_uses: counts.values().sum(),
                counts,
            });
        }
    }
    rows
}

pub fn url_category_table(rows: &[UrlCategoryRow]) -> Table {
    let mut t = Table::new(&["group", "phase", "category", "uses", "proportion"])
        .comment("uses: external URL uses in the group x phase cell mapped to the category")
        .comment("proportion: uses / external URL uses in the cell; empty when the cell has none");
    for r in rows {
        for (c, n) in &r.counts {
            t.push([
                r.group.to_string(),
                r.phase.to_string(),
                c.to_string(),
                n.to_string(),
                opt(ratio(*n, r.external_uses)),
            ]);
        }
    }
    t
}

// ---------------------------------------------------------------------------
// Usage distributions and top hashtags

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedUse {
    pub item: String,
    pub uses: u64,
    pub per_tweet: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UsageDistribution {
    pub group: Affiliation,
    pub tweets: u64,
    pub hashtag_uses: u64,
    pub top_hashtags: Vec<RankedUse>,
    pub external_url_uses: u64,
    pub distinct_external_urls: u64,
    pub mean_url_reuse: Option<f64>,
    /// Canonical external URLs ranked by use.
    pub url_ranks: Vec<(String, u64)>,
}

pub fn usage_distributions(
    corpus: &Corpus,
    affiliations: &AffiliationMap,
    top_n: usize,
    exclude: &BTreeSet<String>,
) -> Vec<UsageDistribution> {
    Affiliation::ALL
        .iter()
        .map(|&group| {
            let tweets: Vec<&TweetRecord> = corpus
                .tweets()
                .iter()
                .filter(|t| affiliations.get(t.author_id()) == group)
                .collect();
            let n = tweets.len() as u64;
            let mut tags = hashtag_uses(tweets.iter().copied());
            let hashtag_uses = tags.values().sum();
            tags.retain(|h, _| !exclude.contains(*h));
            let top_hashtags = ranked(&tags)
                .into_iter()
                .take(top_n)
                .map(|(h, c)| RankedUse {
                    item: h.to_owned(),
                    uses: c,
                    per_tweet: c as f64 / n as f64,
                })
                .collect();
            let mut urls: BTreeMap<String, u64> = BTreeMap::new();
            for t in &tweets {
                for u in t.urls.iter().filter(|u| !is_internal_url(u)) {
                    *urls.entry(canonical_url(u)).or_default() += 1;
                }
            }
            let external_url_uses: u64 = urls.values().sum();
            let distinct = urls.len() as u64;
            let borrowed: BTreeMap<&str, u64> =
                urls.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            UsageDistribution {
                group,
                tweets: n,
                hashtag_uses,
                top_hashtags,
                external_url_uses,
                distinct_external_urls: distinct,
                mean_url_reuse: ratio(external_url_uses, distinct),
                url_ranks: ranked(&borrowed)
                    .into_iter()
                    .map(|(u, c)| (u.to_owned(), c))
                    .collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopHashtagRow {
    pub group: Affiliation,
    pub phase: PhaseSlot,
    pub rank: usize,
    pub hashtag: String,
    pub count: u64,
    /// Included only because it ties the count at rank `k`.
    pub tie_extension: bool,
}

/// The `k` most used hashtags per group × phase; rows tied with rank `k`
/// are kept and flagged.
pub fn top_hashtag_table(
    corpus: &PhasedCorpus,
    affiliations: &AffiliationMap,
    k: usize,
) -> Vec<TopHashtagRow> {
    let mut rows = Vec::new();
    for group in Affiliation::ALL {
        for slot in PhaseSlot::all(corpus.phase_count()) {
            let counts = hashtag_uses(
                corpus
                    .tweets_in(slot.filter())
                    .map(|(_, t)| t)
                    .filter(|t| affiliations.get(t.author_id()) == group),
            );
            let ranked = ranked(&counts);
            let cutoff = ranked.get(k.saturating_sub(1)).map(|r| r.1);
            for (i, (h, c)) in ranked.into_iter().enumerate() {
                let beyond = i >= k;
                if beyond && Some(c) != cutoff || k == 0 {
                    break;
                }
                rows.push(TopHashtagRow {
                    group,
                    phase: slot,
                    rank: i + 1,
                    hashtag: h.to_owned(),
                    count: c,
                    tie_extension: beyond,
                });
            }
        }
    }
    rows
}

pub fn top_hashtag_csv(rows: &[TopHashtagRow]) -> Table {
    let mut t = Table::new(&[
        "group",
        "phase",
        "rank",
        "hashtag",
        "count",
        "tie_extension",
    ])
    .comment("count: hashtag occurrences in the group x phase cell")
    .comment("tie_extension: row beyond rank k kept because its count ties rank k");
    for r in rows {
        t.push([
            r.group.to_string(),
            r.phase.to_string(),
            r.rank.to_string(),
            r.hashtag.clone(),
            r.count.to_string(),
            r.tie_extension.to_string(),
        ]);
    }
    t
}

// ---------------------------------------------------------------------------
// Locations

pub const UNCODED: &str = "UNCODED";

fn location_key(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Free-text location → country, read from a `location_text,country` CSV.
/// Matching ignores case and surrounding whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LocationCoding {
    map: BTreeMap<String, String>,
    pub provenance: String,
}

impl LocationCoding {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        LocationCoding {
            map: pairs
                .into_iter()
                .map(|(l, c)| (location_key(l), c.trim().to_owned()))
                .collect(),
            provenance: String::new(),
        }
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        let mut map = BTreeMap::new();
        for row in r.records() {
            let row = row?;
            let (Some(loc), Some(country)) = (row.get(0), row.get(1)) else {
                return Err(Error::Config(format!("short location coding row {row:?}")));
            };
            map.insert(location_key(loc), country.trim().to_owned());
        }
        Ok(LocationCoding {
            map,
            provenance: sha256_hex(bytes),
        })
    }

    pub fn country(&self, location: &str) -> &str {
        self.map
            .get(&location_key(location))
            .map_or(UNCODED, String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocationOptions {
    /// Unaffiliated locations must be shared by at least this many accounts.
    pub min_unaffiliated_uses: usize,
    /// Unaffiliated accounts must have posted at least this many tweets.
    pub min_unaffiliated_tweets: usize,
}

impl Default for LocationOptions {
    fn default() -> Self {
        LocationOptions {
            min_unaffiliated_uses: 2,
            min_unaffiliated_tweets: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationGroup {
    pub group: Affiliation,
    pub evaluated: u64,
    /// `(country, accounts, proportion)` ordered by accounts descending.
    pub countries: Vec<(String, u64, f64)>,
}

pub fn location_summary(
    corpus: &Corpus,
    affiliations: &AffiliationMap,
    coding: &LocationCoding,
    opts: &LocationOptions,
) -> Vec<LocationGroup> {
    let mut located: BTreeMap<Affiliation, Vec<String>> = BTreeMap::new();
    for account in corpus.accounts() {
        let group = affiliations.get(account);
        if group == Affiliation::Unaffiliated
            && corpus.tweets_by(account).len() < opts.min_unaffiliated_tweets
        {
            continue;
        }
        let Some(loc) = corpus
            .latest_snapshot(account)
            .and_then(|s| s.location_text.as_deref())
            .map(str::trim)
            .filter(|l| !l.is_empty())
        else {
            continue;
        };
        located.entry(group).or_default().push(location_key(loc));
    }
    if let Some(unaff) = located.get_mut(&Affiliation::Unaffiliated) {
        let mut uses: HashMap<String, usize> = HashMap::new();
        for l in unaff.iter() {
            *uses.entry(l.clone()).or_default() += 1;
        }
        unaff.retain(|l| uses[l] >= opts.min_unaffiliated_uses);
    }
    Affiliation::ALL
        .iter()
        .map(|&group| {
            let locs = located.remove(&group).unwrap_or_default();
            let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
            for l in &locs {
                *counts.entry(coding.country(l)).or_default() += 1;
            }
            let evaluated = locs.len() as u64;
            LocationGroup {
                group,
                evaluated,
                countries: ranked(&counts)
                    .into_iter()
                    .map(|(c, n)| (c.to_owned(), n, n as f64 / evaluated as f64))
                    .collect(),
            }
        })
        .collect()
}

pub fn location_table(groups: &[LocationGroup]) -> Table {
    let mut t = Table::new(&["group", "country", "accounts", "proportion", "evaluated"])
        .comment("proportion: accounts / evaluated accounts with a nonempty location");
    for g in groups {
        for (c, n, p) in &g.countries {
            t.push([
                g.group.to_string(),
                c.clone(),
                n.to_string(),
                p.to_string(),
                g.evaluated.to_string(),
            ]);
        }
    }
    t
}
