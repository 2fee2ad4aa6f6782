//! Text patterns, reply bursts, reputation and bot-score bucketing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::str::FromStr;
use std::sync::LazyLock;

use chrono::{DateTime, TimeDelta, Utc};
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::affiliation::{Affiliation, AffiliationMap};
use crate::corpus::{Corpus, PhasedCorpus, TweetRecord};
use crate::error::{Error, Result};
use crate::metrics::PhaseSlot;
use crate::report::{opt, ratio, Table};
use crate::scalar::Scalar;

// ---------------------------------------------------------------------------
// Text patterns

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TextPattern {
    HashtagsOnly,
    HashtagsUrl,
    MentionsHashtags,
    MentionsHashtagsUrl,
    Other,
}

impl TextPattern {
    pub const ALL: [TextPattern; 5] = [
        TextPattern::HashtagsOnly,
        TextPattern::HashtagsUrl,
        TextPattern::MentionsHashtags,
        TextPattern::MentionsHashtagsUrl,
        TextPattern::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TextPattern::HashtagsOnly => "HASHTAGS_ONLY",
            TextPattern::HashtagsUrl => "HASHTAGS_URL",
            TextPattern::MentionsHashtags => "MENTIONS_HASHTAGS",
            TextPattern::MentionsHashtagsUrl => "MENTIONS_HASHTAGS_URL",
            TextPattern::Other => "OTHER",
        }
    }
}

impl fmt::Display for TextPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

static RT_PREFIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*RT\s+@\w+:\s*").unwrap());
static URL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"https?://\S+").unwrap());
static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").unwrap());
static HASHTAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"#[\p{L}\p{N}_]+").unwrap());
static CONTENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[^\s\p{P}]").unwrap());

/// Classifies tweet text. A retweet's `RT @user:` prefix is dropped so the
/// retweeted text is what gets classified.
pub fn classify_text(text: &str) -> TextPattern {
    let body = RT_PREFIX.replace(text, "");
    let has_url = URL.is_match(&body);
    let rest = URL.replace_all(&body, " ");
    let has_mention = MENTION.is_match(&rest);
    let rest = MENTION.replace_all(&rest, " ");
    let has_hashtag = HASHTAG.is_match(&rest);
    let rest = HASHTAG.replace_all(&rest, " ");
    if !has_hashtag || CONTENT.is_match(&rest) {
        return TextPattern::Other;
    }
    match (has_mention, has_url) {
        (false, false) => TextPattern::HashtagsOnly,
        (false, true) => TextPattern::HashtagsUrl,
        (true, false) => TextPattern::MentionsHashtags,
        (true, true) => TextPattern::MentionsHashtagsUrl,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternCell {
    pub group: Affiliation,
    pub phase: PhaseSlot,
    pub total: u64,
    pub counts: BTreeMap<TextPattern, u64>,
}

impl PatternCell {
    pub fn count(&self, p: TextPattern) -> u64 {
        self.counts.get(&p).copied().unwrap_or(0)
    }

    /// Percentage of the cell's tweets, `None` for an empty cell.
    pub fn percent(&self, p: TextPattern) -> Option<f64> {
        ratio(self.count(p), self.total).map(|r| r * 100.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternReport {
    pub cells: Vec<PatternCell>,
}

impl PatternReport {
    pub fn get(&self, group: Affiliation, phase: PhaseSlot) -> Option<&PatternCell> {
        self.cells
            .iter()
            .find(|c| c.group == group && c.phase == phase)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["group", "phase", "pattern", "count", "total", "percent"])
            .comment(
                "pattern: text reduced to hashtags, mentions and URLs only; OTHER absorbs the rest",
            )
            .comment(
                "percent: count / total tweets of the group in the phase, empty when total is 0",
            );
        for c in &self.cells {
            for p in TextPattern::ALL {
                t.push([
                    c.group.to_string(),
                    c.phase.to_string(),
                    p.to_string(),
                    c.count(p).to_string(),
                    c.total.to_string(),
                    opt(c.percent(p).map(|v| format!("{v:.1}"))),
                ]);
            }
        }
        t
    }
}

pub fn classify_patterns(phased: &PhasedCorpus, affiliations: &AffiliationMap) -> PatternReport {
    let labels: Vec<(Affiliation, usize, TextPattern)> = phased
        .corpus()
        .tweets()
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            (
                affiliations.get(t.author_id()),
                phased.phase_of_tweet(i),
                classify_text(&t.text),
            )
        })
        .collect();
    let mut cells = Vec::new();
    for group in Affiliation::ALL {
        for slot in PhaseSlot::all(phased.phase_count()) {
            let mut counts: BTreeMap<TextPattern, u64> =
                TextPattern::ALL.iter().map(|&p| (p, 0)).collect();
            let mut total = 0;
            for &(g, p, label) in &labels {
                if g == group && slot.filter().is_none_or(|s| s == p) {
                    total += 1;
                    *counts.get_mut(&label).unwrap() += 1;
                }
            }
            cells.push(PatternCell {
                group,
                phase: slot,
                total,
                counts,
            });
        }
    }
    PatternReport { cells }
}

// ---------------------------------------------------------------------------
// Reply bursts

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstParams {
    #[serde(with = "crate::timeutil::duration_serde")]
    pub window: TimeDelta,
    pub min_count: usize,
    /// Token-set Jaccard threshold for two replies to count as near-duplicates.
    pub similarity: f64,
}

impl Default for BurstParams {
    fn default() -> Self {
        BurstParams {
            window: TimeDelta::minutes(9),
            min_count: 10,
            similarity: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BurstReport {
    pub source: String,
    pub target: String,
    pub count: usize,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub tweet_ids: Vec<String>,
    pub sample_texts: Vec<String>,
}

impl BurstReport {
    pub fn span(&self) -> TimeDelta {
        self.end - self.start
    }
}

fn tokens(text: &str) -> BTreeSet<String> {
    let stripped = URL.replace_all(text, " ");
    stripped
        .split(|c: char| !(c.is_alphanumeric() || c == '#' || c == '@' || c == '_'))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Replies from one account to one target that are pairwise near-duplicates
/// and at least `min_count` strong within some window. Overlapping windows
/// merge into one burst.
pub fn detect_reply_bursts(corpus: &Corpus, params: &BurstParams) -> Result<Vec<BurstReport>> {
    if params.window <= TimeDelta::zero() {
        return Err(Error::Config("burst window must be positive".into()));
    }
    if params.min_count == 0 {
        return Err(Error::Config("burst min_count must be at least 1".into()));
    }
    let mut groups: BTreeMap<(&str, &str), Vec<&TweetRecord>> = BTreeMap::new();
    for t in corpus.tweets() {
        if let Some(r) = &t.reply_to {
            groups
                .entry((t.author_id(), r.account_id.as_str()))
                .or_default()
                .push(t);
        }
    }
    let mut bursts: Vec<BurstReport> = groups
        .into_par_iter()
        .flat_map_iter(|((source, target), mut replies)| {
            replies.sort_by(|a, b| (a.created_at, &a.tweet_id).cmp(&(b.created_at, &b.tweet_id)));
            bursts_in_group(source, target, &replies, params)
        })
        .collect();
    bursts.sort_by(|a, b| (a.start, &a.source, &a.target).cmp(&(b.start, &b.source, &b.target)));
    Ok(bursts)
}

fn bursts_in_group(
    source: &str,
    target: &str,
    replies: &[&TweetRecord],
    params: &BurstParams,
) -> Vec<BurstReport> {
    if replies.len() < params.min_count {
        return Vec::new();
    }
    // greedy clustering in time order; a reply joins the first cluster it is
    // similar to in full
    let toks: Vec<BTreeSet<String>> = replies.iter().map(|t| tokens(&t.text)).collect();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..replies.len() {
        match clusters.iter_mut().find(|c| {
            c.iter()
                .all(|&j| jaccard(&toks[i], &toks[j]) >= params.similarity)
        }) {
            Some(c) => c.push(i),
            None => clusters.push(vec![i]),
        }
    }
    let mut out = Vec::new();
    for members in clusters.into_iter().filter(|c| c.len() >= params.min_count) {
        let mut runs: Vec<(usize, usize)> = Vec::new();
        let mut hi = 0;
        for lo in 0..members.len() {
            hi = hi.max(lo);
            while hi + 1 < members.len()
                && replies[members[hi + 1]].created_at - replies[members[lo]].created_at
                    <= params.window
            {
                hi += 1;
            }
            if hi + 1 - lo >= params.min_count {
                match runs.last_mut() {
                    Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                    _ => runs.push((lo, hi)),
                }
            }
        }
        for (lo, hi) in runs {
            let picked: Vec<&TweetRecord> = members[lo..=hi].iter().map(|&k| replies[k]).collect();
            out.push(BurstReport {
                source: source.to_owned(),
                target: target.to_owned(),
                count: picked.len(),
                start: picked[0].created_at,
                end: picked[picked.len() - 1].created_at,
                tweet_ids: picked.iter().map(|t| t.tweet_id.clone()).collect(),
                sample_texts: picked.iter().take(3).map(|t| t.text.clone()).collect(),
            });
        }
    }
    out
}

pub fn burst_table(bursts: &[BurstReport]) -> Table {
    let mut t = Table::new(&[
        "source",
        "target",
        "count",
        "start",
        "end",
        "span_secs",
        "sample_text",
    ])
    .comment("one row per burst of near-duplicate replies from source to target");
    for b in bursts {
        t.push([
            b.source.clone(),
            b.target.clone(),
            b.count.to_string(),
            b.start.to_rfc3339(),
            b.end.to_rfc3339(),
            b.span().num_seconds().to_string(),
            b.sample_texts.first().cloned().unwrap_or_default(),
        ]);
    }
    t
}

// ---------------------------------------------------------------------------
// Reputation and lifetime rates

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReputationInputs {
    pub friends: u64,
    pub followers: u64,
}

/// `followers / (friends + followers)`.
pub fn reputation<T: Scalar>(inputs: ReputationInputs) -> Result<T> {
    let total = inputs.friends + inputs.followers;
    if total == 0 {
        return Err(Error::Undefined(
            "reputation with no friends and no followers".into(),
        ));
    }
    Ok(T::from_ratio_parts(inputs.followers, total))
}

/// Statuses per day of account age; `None` for a zero age.
pub fn lifetime_rate(statuses: u64, age_days: u64) -> Option<f64> {
    ratio(statuses, age_days)
}

// ---------------------------------------------------------------------------
// Bot scores

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CapBucket {
    Human,
    Undecided,
    Bot,
}

impl CapBucket {
    pub const ALL: [CapBucket; 3] = [CapBucket::Human, CapBucket::Undecided, CapBucket::Bot];

    /// Human below 0.2, Bot above 0.6, Undecided otherwise (boundaries included).
    pub fn from_cap(cap: f64) -> Self {
        if cap < 0.2 {
            CapBucket::Human
        } else if cap > 0.6 {
            CapBucket::Bot
        } else {
            CapBucket::Undecided
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CapBucket::Human => "Human",
            CapBucket::Undecided => "Undecided",
            CapBucket::Bot => "Bot",
        }
    }

    pub fn range(self) -> &'static str {
        match self {
            CapBucket::Human => "0.0-0.2",
            CapBucket::Undecided => "0.2-0.6",
            CapBucket::Bot => "0.6-1.0",
        }
    }
}

impl fmt::Display for CapBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BotScore {
    pub account_id: String,
    pub cap: f64,
    pub english_score: Option<f64>,
    pub bucket: CapBucket,
    pub source: String,
}

impl BotScore {
    pub fn new(
        account_id: &str,
        cap: f64,
        english_score: Option<f64>,
        source: &str,
    ) -> Result<Self> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(cap) || english_score.is_some_and(|e| !in_unit(e)) {
            return Err(Error::Config(format!(
                "score for `{account_id}` outside [0, 1]"
            )));
        }
        Ok(BotScore {
            account_id: account_id.to_owned(),
            cap,
            english_score,
            bucket: CapBucket::from_cap(cap),
            source: source.to_owned(),
        })
    }
}

/// A source of bot scores. Implementations may call out to a live service;
/// an `Err` for one account marks that account's score as missing.
pub trait BotScoreClient: Sync {
    fn source(&self) -> &str;
    fn score(&self, account_id: &str) -> Result<BotScore>;
}

/// Scores read from a CSV of `account_id,cap,english_score`.
#[derive(Debug, Clone, Default)]
pub struct OfflineScores {
    source: String,
    scores: HashMap<String, (f64, Option<f64>)>,
}

#[derive(Deserialize)]
struct ScoreRow {
    account_id: String,
    cap: f64,
    #[serde(default)]
    english_score: Option<f64>,
}

impl OfflineScores {
    pub fn from_pairs<'a>(source: &str, scores: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        OfflineScores {
            source: source.to_owned(),
            scores: scores
                .into_iter()
                .map(|(a, c)| (a.to_owned(), (c, None)))
                .collect(),
        }
    }

    pub fn from_csv<R: Read>(input: R, source: &str) -> Result<Self> {
        let mut scores = HashMap::new();
        for row in csv::Reader::from_reader(input).deserialize() {
            let row: ScoreRow = row?;
            // validates the range
            BotScore::new(&row.account_id, row.cap, row.english_score, source)?;
            scores.insert(row.account_id, (row.cap, row.english_score));
        }
        Ok(OfflineScores {
            source: source.to_owned(),
            scores,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl BotScoreClient for OfflineScores {
    fn source(&self) -> &str {
        &self.source
    }

    fn score(&self, account_id: &str) -> Result<BotScore> {
        let &(cap, english) = self
            .scores
            .get(account_id)
            .ok_or_else(|| Error::Undefined(format!("no score for `{account_id}`")))?;
        BotScore::new(account_id, cap, english, &self.source)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    /// At least `min_unaffiliated_tweets` in the whole corpus.
    #[default]
    Total,
    /// At least `min_unaffiliated_tweets` on each side of the split phase.
    EachSide,
}

/// Which accounts get scored: every labeled account, plus Unaffiliated
/// accounts active enough.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringSelection {
    pub min_unaffiliated_tweets: usize,
    pub mode: SelectionMode,
    /// First phase of the "after" side; defaults to the last phase.
    pub split_phase: Option<usize>,
}

impl Default for ScoringSelection {
    fn default() -> Self {
        ScoringSelection {
            min_unaffiliated_tweets: 3,
            mode: SelectionMode::Total,
            split_phase: None,
        }
    }
}

pub fn select_accounts(
    phased: &PhasedCorpus,
    affiliations: &AffiliationMap,
    sel: &ScoringSelection,
) -> Vec<String> {
    let split = sel
        .split_phase
        .unwrap_or(phased.phase_count().saturating_sub(1));
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (i, t) in phased.tweets_in(None) {
        let c = counts.entry(t.author_id()).or_default();
        if phased.phase_of_tweet(i) < split {
            c.0 += 1;
        } else {
            c.1 += 1;
        }
    }
    counts
        .into_iter()
        .filter(|&(a, (before, after))| {
            affiliations.get(a).is_labeled()
                || match sel.mode {
                    SelectionMode::Total => before + after >= sel.min_unaffiliated_tweets,
                    SelectionMode::EachSide => {
                        before >= sel.min_unaffiliated_tweets
                            && after >= sel.min_unaffiliated_tweets
                    }
                }
        })
        .map(|(a, _)| a.to_owned())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketRow {
    pub bucket: CapBucket,
    pub total: u64,
    /// Per phase: accounts with at least one tweet.
    pub active: Vec<u64>,
    /// Per phase: tweets contributed.
    pub tweets: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoringReport {
    pub selected: usize,
    pub scores: Vec<BotScore>,
    pub missing: Vec<String>,
    pub rows: Vec<BucketRow>,
}

impl ScoringReport {
    pub fn row(&self, bucket: CapBucket) -> &BucketRow {
        &self.rows[bucket as usize]
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "bucket",
            "cap_range",
            "total",
            "phase",
            "accounts_active",
            "tweets",
        ])
        .comment("bucket: Human when cap < 0.2, Bot when cap > 0.6, Undecided otherwise")
        .comment(format!(
            "selected {} accounts, {} without a score",
            self.selected,
            self.missing.len()
        ));
        for r in &self.rows {
            for (p, (a, tw)) in r.active.iter().zip(&r.tweets).enumerate() {
                t.push([
                    r.bucket.to_string(),
                    r.bucket.range().to_owned(),
                    r.total.to_string(),
                    PhaseSlot::Phase(p).to_string(),
                    a.to_string(),
                    tw.to_string(),
                ]);
            }
        }
        t
    }

    pub fn scores_table(&self) -> Table {
        let mut t = Table::new(&["account_id", "cap", "english_score", "bucket", "source"]);
        for s in &self.scores {
            t.push([
                s.account_id.clone(),
                s.cap.to_string(),
                opt(s.english_score),
                s.bucket.to_string(),
                s.source.clone(),
            ]);
        }
        t
    }
}

pub fn score_accounts(
    client: &dyn BotScoreClient,
    phased: &PhasedCorpus,
    affiliations: &AffiliationMap,
    selection: &ScoringSelection,
) -> ScoringReport {
    let accounts = select_accounts(phased, affiliations, selection);
    let results: Vec<(String, Result<BotScore>)> = accounts
        .par_iter()
        .map(|a| (a.clone(), client.score(a)))
        .collect();
    let mut scores = Vec::new();
    let mut missing = Vec::new();
    for (a, r) in results {
        match r {
            Ok(s) => scores.push(s),
            Err(e) => {
                log::debug!("no bot score for {a}: {e}");
                missing.push(a);
            }
        }
    }
    let bucket_of: HashMap<&str, CapBucket> = scores
        .iter()
        .map(|s| (s.account_id.as_str(), s.bucket))
        .collect();
    let n = phased.phase_count();
    let mut rows: Vec<BucketRow> = CapBucket::ALL
        .iter()
        .map(|&bucket| BucketRow {
            bucket,
            total: 0,
            active: vec![0; n],
            tweets: vec![0; n],
        })
        .collect();
    for s in &scores {
        rows[s.bucket as usize].total += 1;
    }
    let mut seen: BTreeSet<(&str, usize)> = BTreeSet::new();
    for (i, t) in phased.tweets_in(None) {
        if let Some(&b) = bucket_of.get(t.author_id()) {
            let p = phased.phase_of_tweet(i);
            rows[b as usize].tweets[p] += 1;
            if seen.insert((t.author_id(), p)) {
                rows[b as usize].active[p] += 1;
            }
        }
    }
    ScoringReport {
        selected: accounts.len(),
        scores,
        missing,
        rows,
    }
}

// ---------------------------------------------------------------------------
// Activity profiles

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivityProfile {
    pub account_id: String,
    /// `(bucket_start, tweets)` covering the whole corpus span.
    pub series: Vec<(DateTime<Utc>, u64)>,
    pub corpus_tweets: u64,
    pub statuses: Option<u64>,
    pub friends: Option<u64>,
    pub followers: Option<u64>,
    /// Age at the account's last tweet in the corpus.
    pub age_days: Option<u64>,
    pub lifetime_rate: Option<f64>,
    pub reputation: Option<f64>,
}

/// Per-account tweet counts in buckets aligned to multiples of `bucket`
/// since the Unix epoch (UTC midnight for days), plus lifetime statistics
/// from the account's latest snapshot.
pub fn account_activity_profile(
    corpus: &Corpus,
    account_ids: &[&str],
    bucket: TimeDelta,
) -> Result<Vec<ActivityProfile>> {
    let width = bucket.num_seconds();
    if width <= 0 {
        return Err(Error::Config(
            "activity bucket must be at least one second".into(),
        ));
    }
    let span = corpus
        .first_time()
        .zip(corpus.last_time())
        .map(|(first, last)| {
            let origin = first.timestamp().div_euclid(width) * width;
            let n = (last.timestamp() - origin).div_euclid(width) as usize + 1;
            (origin, n)
        });
    let mut out = Vec::with_capacity(account_ids.len());
    for &account in account_ids {
        let mut series: Vec<(DateTime<Utc>, u64)> = match span {
            Some((origin, n)) => (0..n as i64)
                .map(|k| (DateTime::from_timestamp(origin + k * width, 0).unwrap(), 0))
                .collect(),
            None => Vec::new(),
        };
        let indices = corpus.tweets_by(account);
        if let Some((origin, _)) = span {
            for &i in indices {
                let k =
                    (corpus.tweets()[i].created_at.timestamp() - origin).div_euclid(width) as usize;
                series[k].1 += 1;
            }
        }
        let snap = corpus.latest_snapshot(account);
        let last_seen = indices.last().map(|&i| corpus.tweets()[i].created_at);
        let age_days = snap.zip(last_seen).map(|(s, t)| s.age_days(t));
        out.push(ActivityProfile {
            account_id: account.to_owned(),
            series,
            corpus_tweets: indices.len() as u64,
            statuses: snap.map(|s| s.statuses_count),
            friends: snap.map(|s| s.friends_count),
            followers: snap.map(|s| s.followers_count),
            age_days,
            lifetime_rate: snap
                .zip(age_days)
                .and_then(|(s, a)| lifetime_rate(s.statuses_count, a)),
            reputation: snap.and_then(|s| {
                reputation(ReputationInputs {
                    friends: s.friends_count,
                    followers: s.followers_count,
                })
                .ok()
            }),
        });
    }
    Ok(out)
}

pub fn activity_profile_tables(profiles: &[ActivityProfile]) -> (Table, Table) {
    let mut series = Table::new(&["account_id", "bucket_start", "tweets"]);
    let mut summary = Table::new(&[
        "account_id",
        "corpus_tweets",
        "age_days",
        "lifetime_tweets",
        "tweets_per_day",
        "friends",
        "followers",
        "reputation",
    ])
    .comment("age_days: account age at its last tweet in the corpus; tweets_per_day: lifetime_tweets / age_days");
    for p in profiles {
        for (t, n) in &p.series {
            series.push([p.account_id.clone(), t.to_rfc3339(), n.to_string()]);
        }
        summary.push([
            p.account_id.clone(),
            p.corpus_tweets.to_string(),
            opt(p.age_days),
            opt(p.statuses),
            opt(p.lifetime_rate.map(|r| format!("{r:.2}"))),
            opt(p.friends),
            opt(p.followers),
            opt(p.reputation.map(|r| format!("{r:.3}"))),
        ]);
    }
    (series, summary)
}

// ---------------------------------------------------------------------------
// Hashtag and mention use per tweet

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entity {
    Hashtags,
    Mentions,
}

impl Entity {
    pub fn as_str(self) -> &'static str {
        match self {
            Entity::Hashtags => "hashtags",
            Entity::Mentions => "mentions",
        }
    }
}

/// Tweets per group keyed by how many of the entity they carry.
pub fn entity_use_distribution(
    corpus: &Corpus,
    affiliations: &AffiliationMap,
    entity: Entity,
) -> BTreeMap<Affiliation, BTreeMap<usize, u64>> {
    let mut out: BTreeMap<Affiliation, BTreeMap<usize, u64>> = BTreeMap::new();
    for t in corpus.tweets() {
        let k = match entity {
            Entity::Hashtags => t.hashtags.len(),
            Entity::Mentions => t.mentions.len(),
        };
        *out.entry(affiliations.get(t.author_id()))
            .or_default()
            .entry(k)
            .or_insert(0) += 1;
    }
    out
}

pub fn entity_use_table(corpus: &Corpus, affiliations: &AffiliationMap) -> Table {
    let mut t = Table::new(&["group", "entity", "per_tweet", "tweets"])
        .comment("tweets: tweets by the group carrying exactly per_tweet of the entity");
    for entity in [Entity::Hashtags, Entity::Mentions] {
        for (g, dist) in entity_use_distribution(corpus, affiliations, entity) {
            for (k, n) in dist {
                t.push([
                    g.to_string(),
                    entity.as_str().to_owned(),
                    k.to_string(),
                    n.to_string(),
                ]);
            }
        }
    }
    t
}

impl FromStr for CapBucket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "human" => Ok(CapBucket::Human),
            "undecided" => Ok(CapBucket::Undecided),
            "bot" => Ok(CapBucket::Bot),
            other => Err(Error::Config(format!("unknown bucket `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assign_phases, PhaseConfig};
    use crate::fixture::{at, corpus, TweetBuilder};
    use num_rational::Ratio;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use Affiliation::{Opposer as O, Supporter as S};

    #[test]
    fn pattern_rules() {
        use TextPattern::*;
        let cases = [
            ("#a #b", HashtagsOnly),
            ("  #a \n ", HashtagsOnly),
            ("#a https://t.co/x", HashtagsUrl),
            ("https://t.co/x #a", HashtagsUrl),
            ("@u #a", MentionsHashtags),
            ("@a @b #x #y https://t.co/z", MentionsHashtagsUrl),
            ("RT @someone: #a #b", HashtagsOnly),
            ("just a normal sentence #tag", Other),
            ("@u https://t.co/x", Other),
            ("", Other),
            ("#a!!! ...", HashtagsOnly),
            ("#a 🔥", Other),
        ];
        for (text, want) in cases {
            assert_eq!(classify_text(text), want, "{text:?}");
        }
    }

    #[test]
    fn pattern_cells_cover_all_tweets() {
        let c = corpus([
            TweetBuilder::new("1", "s", 0).text("#a"),
            TweetBuilder::new("2", "s", 10).text("#a https://x.co/1"),
            TweetBuilder::new("3", "s", 20).text("hello"),
            TweetBuilder::new("4", "o", 30).text("@s #b"),
        ]);
        let phased = assign_phases(c, PhaseConfig::new(vec![at(15)], vec![]).unwrap()).unwrap();
        let aff = AffiliationMap::from_pairs([("s", S), ("o", O)]);
        let r = classify_patterns(&phased, &aff);
        let overall = r.get(S, PhaseSlot::Overall).unwrap();
        assert_eq!(overall.total, 3);
        assert_eq!(overall.counts.values().sum::<u64>(), 3);
        assert_eq!(overall.count(TextPattern::HashtagsUrl), 1);
        assert_eq!(r.get(S, PhaseSlot::Phase(0)).unwrap().total, 2);
        assert_eq!(
            r.get(O, PhaseSlot::Overall)
                .unwrap()
                .count(TextPattern::MentionsHashtags),
            1
        );
        assert_eq!(
            r.get(Affiliation::Unaffiliated, PhaseSlot::Overall)
                .unwrap()
                .percent(TextPattern::Other),
            None
        );
        let t = r.to_table();
        assert_eq!(Table::from_csv(&t.to_csv().unwrap()).unwrap(), t);
    }

    fn replies(n: usize, spacing: i64, target: &str, start_id: usize) -> Vec<TweetBuilder> {
        (0..n)
            .map(|k| {
                TweetBuilder::new(&format!("r{}", start_id + k), "troll", k as i64 * spacing)
                    .text(&format!("@{target} #arsonemergency https://t.co/{k}"))
                    .reply("orig", target)
            })
            .collect()
    }

    #[test]
    fn planted_burst_is_found_in_any_order() {
        let mut tweets = replies(26, 20, "victim", 0);
        tweets.push(
            TweetBuilder::new("x", "troll", 400)
                .text("something else entirely")
                .reply("orig", "victim"),
        );
        let expected =
            detect_reply_bursts(&corpus(tweets.clone()), &BurstParams::default()).unwrap();
        assert_eq!(expected.len(), 1);
        assert_eq!(expected[0].count, 26);
        assert_eq!(expected[0].target, "victim");
        assert!(expected[0].span() <= TimeDelta::minutes(9));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            tweets.shuffle(&mut rng);
            assert_eq!(
                detect_reply_bursts(&corpus(tweets.clone()), &BurstParams::default()).unwrap(),
                expected
            );
        }
    }

    #[test]
    fn spread_out_replies_are_not_a_burst() {
        let c = corpus(replies(2, 3600, "v", 0));
        let p = BurstParams {
            min_count: 2,
            ..Default::default()
        };
        assert!(detect_reply_bursts(&c, &p).unwrap().is_empty());
    }

    #[test]
    fn grouping_is_per_target() {
        let mut tweets: Vec<TweetBuilder> = (0..12)
            .map(|k| {
                let target = if k % 2 == 0 { "a" } else { "b" };
                TweetBuilder::new(&format!("r{k}"), "troll", k * 25)
                    .text("#same")
                    .reply("orig", target)
            })
            .collect();
        assert!(
            detect_reply_bursts(&corpus(tweets.clone()), &BurstParams::default())
                .unwrap()
                .is_empty()
        );
        tweets
            .iter_mut()
            .for_each(|t| *t = t.clone().reply("orig", "a"));
        assert_eq!(
            detect_reply_bursts(&corpus(tweets), &BurstParams::default()).unwrap()[0].count,
            12
        );
    }

    #[test]
    fn long_runs_merge() {
        let c = corpus(replies(40, 30, "v", 0));
        let b = detect_reply_bursts(&c, &BurstParams::default()).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].count, 40);
    }

    #[test]
    fn reputation_values() {
        let r: f64 = reputation(ReputationInputs {
            friends: 17_590,
            followers: 16_507,
        })
        .unwrap();
        assert!((r - 0.484).abs() < 5e-4);
        let r: Ratio<u64> = reputation(ReputationInputs {
            friends: 0,
            followers: 100,
        })
        .unwrap();
        assert_eq!(r, Ratio::from_integer(1));
        let a: Ratio<u64> = reputation(ReputationInputs {
            friends: 3,
            followers: 5,
        })
        .unwrap();
        let b: Ratio<u64> = reputation(ReputationInputs {
            friends: 30,
            followers: 50,
        })
        .unwrap();
        assert_eq!(a, b);
        assert!(reputation::<f64>(ReputationInputs {
            friends: 0,
            followers: 0
        })
        .is_err());
        assert_eq!(lifetime_rate(10, 0), None);
    }

    #[test]
    fn entity_distribution() {
        let c = corpus([
            TweetBuilder::new("1", "s", 0).hashtags(&["a", "b"]),
            TweetBuilder::new("2", "s", 1)
                .hashtags(&["a", "b"])
                .mentions(&["x"]),
            TweetBuilder::new("3", "u", 2),
        ]);
        let aff = AffiliationMap::from_pairs([("s", S)]);
        let d = entity_use_distribution(&c, &aff, Entity::Hashtags);
        assert_eq!(d[&S][&2], 2);
        assert_eq!(d[&Affiliation::Unaffiliated][&0], 1);
        assert_eq!(entity_use_table(&c, &aff).rows.len(), 5);
    }

    #[test]
    fn cap_boundaries() {
        assert_eq!(CapBucket::from_cap(0.0), CapBucket::Human);
        assert_eq!(CapBucket::from_cap(0.2), CapBucket::Undecided);
        assert_eq!(CapBucket::from_cap(0.6), CapBucket::Undecided);
        assert_eq!(CapBucket::from_cap(0.600001), CapBucket::Bot);
        assert!(BotScore::new("a", 1.2, None, "t").is_err());
    }

    #[test]
    fn scoring_buckets_and_missing() {
        let names = ["a", "b", "c", "d", "e", "f"];
        let c = corpus(
            names
                .iter()
                .enumerate()
                .map(|(i, n)| TweetBuilder::new(&format!("t{i}"), n, i as i64)),
        );
        let phased = assign_phases(c, PhaseConfig::single()).unwrap();
        let aff = AffiliationMap::from_pairs(names.iter().map(|n| (*n, S)));
        let client = OfflineScores::from_pairs(
            "stub",
            [("a", 0.1), ("b", 0.3), ("c", 0.7), ("d", 0.05), ("e", 0.61)],
        );
        let r = score_accounts(&client, &phased, &aff, &ScoringSelection::default());
        let totals: Vec<u64> = r.rows.iter().map(|r| r.total).collect();
        assert_eq!(totals, [2, 1, 2]);
        assert_eq!(r.missing, ["f"]);
        assert_eq!(r.row(CapBucket::Bot).tweets, [2]);
        let t = r.to_table();
        assert_eq!(Table::from_csv(&t.to_csv().unwrap()).unwrap(), t);
    }

    #[test]
    fn offline_csv() {
        let s = OfflineScores::from_csv(
            "account_id,cap,english_score\na,0.5,\nb,0.9,0.8\n".as_bytes(),
            "f",
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.score("b").unwrap().english_score, Some(0.8));
        assert_eq!(s.score("a").unwrap().bucket, CapBucket::Undecided);
        assert!(s.score("z").is_err());
        assert!(
            OfflineScores::from_csv("account_id,cap,english_score\na,2,\n".as_bytes(), "f")
                .is_err()
        );
    }

    #[test]
    fn unaffiliated_selection() {
        let mut tweets = Vec::new();
        for k in 0..4 {
            tweets.push(TweetBuilder::new(&format!("u{k}"), "u", [0, 10, 30, 40][k]));
        }
        tweets.push(TweetBuilder::new("w", "w", 0));
        tweets.push(TweetBuilder::new("s", "s", 0));
        let phased = assign_phases(
            corpus(tweets),
            PhaseConfig::new(vec![at(25)], vec![]).unwrap(),
        )
        .unwrap();
        let aff = AffiliationMap::from_pairs([("s", S)]);
        assert_eq!(
            select_accounts(&phased, &aff, &ScoringSelection::default()),
            ["s", "u"]
        );
        let each = ScoringSelection {
            mode: SelectionMode::EachSide,
            min_unaffiliated_tweets: 2,
            ..Default::default()
        };
        assert_eq!(select_accounts(&phased, &aff, &each), ["s", "u"]);
        let each3 = ScoringSelection {
            min_unaffiliated_tweets: 3,
            ..each
        };
        assert_eq!(select_accounts(&phased, &aff, &each3), ["s"]);
    }

    #[test]
    fn activity_series_and_rates() {
        let day = 86_400;
        let mut tweets: Vec<TweetBuilder> = (0..10)
            .map(|k| TweetBuilder::new(&format!("t{k}"), "a", (k / 5) * day + k * 60))
            .collect();
        tweets.push(
            TweetBuilder::new("b1", "b", 100)
                .counts(392, 55, 74)
                .created(at(100) - TimeDelta::days(925)),
        );
        let c = corpus(tweets);
        let p = account_activity_profile(&c, &["a", "b", "nobody"], TimeDelta::days(1)).unwrap();
        assert_eq!(p[0].series.iter().map(|x| x.1).collect::<Vec<_>>(), [5, 5]);
        assert_eq!(p[1].age_days, Some(925));
        assert!((p[1].lifetime_rate.unwrap() - 0.08).abs() < 0.005);
        assert!((p[1].reputation.unwrap() - 0.123).abs() < 5e-4);
        assert_eq!(p[2].series.iter().map(|x| x.1).collect::<Vec<_>>(), [0, 0]);
        assert_eq!(p[2].lifetime_rate, None);
        let (series, summary) = activity_profile_tables(&p);
        assert_eq!(series.rows.len(), 6);
        assert_eq!(summary.rows[2][4], "");
    }
}
