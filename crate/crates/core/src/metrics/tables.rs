use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::affiliation::{Affiliation, AffiliationMap};
use crate::corpus::{PhasedCorpus, TweetRecord};
use crate::network::InteractionKind;
use crate::report::{opt, ratio, Table};

/// A single phase or the whole corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PhaseSlot {
    Phase(usize),
    Overall,
}

impl PhaseSlot {
    pub fn all(phase_count: usize) -> impl Iterator<Item = PhaseSlot> {
        (0..phase_count)
            .map(PhaseSlot::Phase)
            .chain([PhaseSlot::Overall])
    }

    pub fn filter(self) -> Option<usize> {
        match self {
            PhaseSlot::Phase(p) => Some(p),
            PhaseSlot::Overall => None,
        }
    }

    pub fn label(self, corpus: &PhasedCorpus) -> String {
        match self {
            PhaseSlot::Phase(p) => corpus.phases().name(p),
            PhaseSlot::Overall => "Overall".into(),
        }
    }
}

impl fmt::Display for PhaseSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseSlot::Phase(p) => write!(f, "Phase {}", p + 1),
            PhaseSlot::Overall => f.write_str("Overall"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivityMetric {
    Tweets,
    Accounts,
    Hashtags,
    Mentions,
    Quotes,
    Replies,
    Retweets,
    Urls,
}

impl ActivityMetric {
    pub const ALL: [ActivityMetric; 8] = [
        ActivityMetric::Tweets,
        ActivityMetric::Accounts,
        ActivityMetric::Hashtags,
        ActivityMetric::Mentions,
        ActivityMetric::Quotes,
        ActivityMetric::Replies,
        ActivityMetric::Retweets,
        ActivityMetric::Urls,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityMetric::Tweets => "tweets",
            ActivityMetric::Accounts => "accounts",
            ActivityMetric::Hashtags => "hashtags",
            ActivityMetric::Mentions => "mentions",
            ActivityMetric::Quotes => "quotes",
            ActivityMetric::Replies => "replies",
            ActivityMetric::Retweets => "retweets",
            ActivityMetric::Urls => "urls",
        }
    }

    fn count(self, t: &TweetRecord) -> u64 {
        match self {
            ActivityMetric::Tweets => 1,
            ActivityMetric::Accounts => 0,
            ActivityMetric::Hashtags => t.hashtags.len() as u64,
            ActivityMetric::Mentions => t.mentions.len() as u64,
            ActivityMetric::Quotes => t.quote_of.is_some() as u64,
            ActivityMetric::Replies => t.reply_to.is_some() as u64,
            ActivityMetric::Retweets => t.retweet_of.is_some() as u64,
            ActivityMetric::Urls => t.urls.len() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivityCell {
    pub group: Affiliation,
    pub phase: PhaseSlot,
    pub metric: ActivityMetric,
    pub raw: u64,
    pub per_account: Option<f64>,
    pub per_tweet: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivityTable {
    pub cells: Vec<ActivityCell>,
}

impl ActivityTable {
    pub fn get(
        &self,
        group: Affiliation,
        phase: PhaseSlot,
        metric: ActivityMetric,
    ) -> Option<&ActivityCell> {
        self.cells
            .iter()
            .find(|c| c.group == group && c.phase == phase && c.metric == metric)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["group", "phase", "metric", "raw", "per_account", "per_tweet"])
            .comment("raw: count in the group x phase cell")
            .comment("per_account: raw / active accounts in the cell; per_tweet: raw / tweets in the cell; empty when undefined");
        for c in &self.cells {
            t.push([
                c.group.to_string(),
                c.phase.to_string(),
                c.metric.as_str().to_owned(),
                c.raw.to_string(),
                opt(c.per_account),
                opt(c.per_tweet),
            ]);
        }
        t
    }
}

fn group_of(map: &AffiliationMap, t: &TweetRecord) -> Affiliation {
    map.get(t.author_id())
}

/// Raw, per-account and per-tweet activity for every group × phase cell,
/// plus an overall row per group.
pub fn activity_table(corpus: &PhasedCorpus, affiliations: &AffiliationMap) -> ActivityTable {
    let slots: Vec<PhaseSlot> = PhaseSlot::all(corpus.phase_count()).collect();
    let mut raw: BTreeMap<(Affiliation, PhaseSlot), [u64; 8]> = BTreeMap::new();
    let mut accounts: BTreeMap<(Affiliation, PhaseSlot), BTreeSet<&str>> = BTreeMap::new();
    for (i, t) in corpus.tweets_in(None) {
        let g = group_of(affiliations, t);
        for slot in [
            PhaseSlot::Phase(corpus.phase_of_tweet(i)),
            PhaseSlot::Overall,
        ] {
            let counts = raw.entry((g, slot)).or_default();
            for (k, m) in ActivityMetric::ALL.iter().enumerate() {
                counts[k] += m.count(t);
            }
            accounts.entry((g, slot)).or_default().insert(t.author_id());
        }
    }
    let mut cells = Vec::new();
    for group in Affiliation::ALL {
        for &slot in &slots {
            let mut counts = raw.get(&(group, slot)).copied().unwrap_or_default();
            let active = accounts.get(&(group, slot)).map_or(0, |s| s.len() as u64);
            counts[1] = active;
            let tweets = counts[0];
            for (k, &metric) in ActivityMetric::ALL.iter().enumerate() {
                let (per_account, per_tweet) = match metric {
                    ActivityMetric::Accounts => (None, None),
                    ActivityMetric::Tweets => (ratio(tweets, active), None),
                    _ => (ratio(counts[k], active), ratio(counts[k], tweets)),
                };
                cells.push(ActivityCell {
                    group,
                    phase: slot,
                    metric,
                    raw: counts[k],
                    per_account,
                    per_tweet,
                });
            }
        }
    }
    ActivityTable { cells }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub group: Affiliation,
    pub phase: PhaseSlot,
    pub retweets: u64,
    pub retweeted_accounts: u64,
    pub ratio: Option<f64>,
}

/// Retweets, distinct retweeted accounts and their ratio per group × phase.
pub fn retweet_concentration(
    corpus: &PhasedCorpus,
    affiliations: &AffiliationMap,
) -> Vec<ConcentrationRow> {
    let mut cells: BTreeMap<(Affiliation, PhaseSlot), (u64, BTreeSet<&str>)> = BTreeMap::new();
    for (i, t) in corpus.tweets_in(None) {
        let Some(orig) = &t.retweet_of else { continue };
        let g = group_of(affiliations, t);
        for slot in [
            PhaseSlot::Phase(corpus.phase_of_tweet(i)),
            PhaseSlot::Overall,
        ] {
            let cell = cells.entry((g, slot)).or_default();
            cell.0 += 1;
            cell.1.insert(orig.account_id.as_str());
        }
    }
    let mut rows = Vec::new();
    for group in Affiliation::ALL {
        for slot in PhaseSlot::all(corpus.phase_count()) {
            let (retweets, distinct) = cells
                .get(&(group, slot))
                .map_or((0, 0), |(n, s)| (*n, s.len() as u64));
            rows.push(ConcentrationRow {
                group,
                phase: slot,
                retweets,
                retweeted_accounts: distinct,
                ratio: ratio(retweets, distinct),
            });
        }
    }
    rows
}

pub fn concentration_table(rows: &[ConcentrationRow]) -> Table {
    let mut t = Table::new(&[
        "group",
        "phase",
        "retweets",
        "retweeted_accounts",
        "retweets_per_account",
    ])
    .comment("retweets_per_account: retweets / distinct retweeted accounts; empty when undefined");
    for r in rows {
        t.push([
            r.group.to_string(),
            r.phase.to_string(),
            r.retweets.to_string(),
            r.retweeted_accounts.to_string(),
            opt(r.ratio),
        ]);
    }
    t
}

/// Source-group → target-group interaction counts, with row-normalized
/// proportions (`None` for rows without interactions).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMatrix {
    pub kind: InteractionKind,
    pub phase: Option<usize>,
    pub counts: [[u64; 3]; 3],
    pub proportions: [[Option<f64>; 3]; 3],
}

impl GroupMatrix {
    pub fn row_total(&self, g: Affiliation) -> u64 {
        self.counts[g.index()].iter().sum()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "kind",
            "phase",
            "source_group",
            "target_group",
            "count",
            "proportion",
        ])
        .comment("count: interactions from source group to target group")
        .comment("proportion: count / source row total; empty when the row has no interactions");
        let phase = self
            .phase
            .map_or_else(|| "Overall".to_owned(), |p| format!("Phase {}", p + 1));
        for s in Affiliation::ALL {
            for d in Affiliation::ALL {
                t.push([
                    self.kind.to_string(),
                    phase.clone(),
                    s.to_string(),
                    d.to_string(),
                    self.counts[s.index()][d.index()].to_string(),
                    opt(self.proportions[s.index()][d.index()]),
                ]);
            }
        }
        t
    }
}

pub fn group_matrix(
    corpus: &PhasedCorpus,
    affiliations: &AffiliationMap,
    kind: InteractionKind,
    phase: Option<usize>,
) -> GroupMatrix {
    let mut counts = [[0u64; 3]; 3];
    for (_, t) in corpus.tweets_in(phase) {
        let s = group_of(affiliations, t).index();
        for target in kind.targets(t) {
            counts[s][affiliations.get(target).index()] += 1;
        }
    }
    let mut proportions = [[None; 3]; 3];
    for (row, out) in counts.iter().zip(proportions.iter_mut()) {
        let total: u64 = row.iter().sum();
        for (c, p) in row.iter().zip(out.iter_mut()) {
            *p = ratio(*c, total);
        }
    }
    GroupMatrix {
        kind,
        phase,
        counts,
        proportions,
    }
}
