//! Tweet corpus model, JSONL ingestion, phase segmentation and corpus-level
//! summaries (growth curves, meta-discussion counts).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use chrono::{DateTime, NaiveDate, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeutil::bucket_index;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountSnapshot {
    pub account_id: String,
    pub screen_name: String,
    pub location_text: Option<String>,
    pub friends_count: u64,
    pub followers_count: u64,
    pub statuses_count: u64,
    pub account_created_at: DateTime<Utc>,
}

impl AccountSnapshot {
    /// Whole days between account creation and `observed_at`, never negative.
    pub fn age_days(&self, observed_at: DateTime<Utc>) -> u64 {
        let secs = (observed_at - self.account_created_at).num_seconds();
        if secs <= 0 {
            0
        } else {
            (secs / 86_400) as u64
        }
    }
}

/// Reference to another tweet and its author.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TweetRef {
    pub tweet_id: String,
    pub account_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub created_at: DateTime<Utc>,
    pub author: AccountSnapshot,
    pub text: String,
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
    pub urls: Vec<String>,
    pub retweet_of: Option<TweetRef>,
    pub reply_to: Option<TweetRef>,
    pub quote_of: Option<TweetRef>,
    pub lang: Option<String>,
}

impl TweetRecord {
    pub fn author_id(&self) -> &str {
        &self.author.account_id
    }

    pub fn is_retweet(&self) -> bool {
        self.retweet_of.is_some()
    }

    pub fn is_self_retweet(&self) -> bool {
        self.retweet_of
            .as_ref()
            .is_some_and(|r| r.account_id == self.author.account_id)
    }
}

// ---------------------------------------------------------------------------
// Wire schema

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawUser {
    pub id: String,
    pub screen_name: String,
    #[serde(default)]
    pub location: Option<String>,
    pub friends_count: u64,
    pub followers_count: u64,
    pub statuses_count: u64,
    pub created_at: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawEntities {
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub mentions: Vec<String>,
    #[serde(default)]
    pub urls: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRef {
    pub id: String,
    pub user_id: String,
}

/// One line of the canonical JSONL format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTweet {
    pub id: String,
    pub created_at: String,
    pub user: RawUser,
    pub text: String,
    #[serde(default)]
    pub lang: Option<String>,
    #[serde(default)]
    pub entities: RawEntities,
    #[serde(default)]
    pub retweet_of: Option<RawRef>,
    #[serde(default)]
    pub reply_to: Option<RawRef>,
    #[serde(default)]
    pub quote_of: Option<RawRef>,
}

fn parse_timestamp(s: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| Error::Config(format!("bad timestamp `{s}`: {e}")))
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn normalize_hashtag(tag: &str) -> String {
    tag.trim().trim_start_matches('#').to_lowercase()
}

impl RawTweet {
    pub fn into_record(self) -> Result<TweetRecord> {
        if self.id.is_empty() {
            return Err(Error::Config("empty tweet id".into()));
        }
        if self.user.id.is_empty() {
            return Err(Error::Config(format!(
                "tweet {} has empty user id",
                self.id
            )));
        }
        let into_ref = |r: Option<RawRef>| {
            r.map(|r| TweetRef {
                tweet_id: r.id,
                account_id: r.user_id,
            })
        };
        Ok(TweetRecord {
            created_at: parse_timestamp(&self.created_at)?,
            author: AccountSnapshot {
                account_created_at: parse_timestamp(&self.user.created_at)?,
                account_id: self.user.id,
                screen_name: self.user.screen_name,
                location_text: self.user.location,
                friends_count: self.user.friends_count,
                followers_count: self.user.followers_count,
                statuses_count: self.user.statuses_count,
            },
            tweet_id: self.id,
            text: self.text,
            hashtags: self
                .entities
                .hashtags
                .iter()
                .map(|h| normalize_hashtag(h))
                .collect(),
            mentions: self.entities.mentions,
            urls: self.entities.urls,
            retweet_of: into_ref(self.retweet_of),
            reply_to: into_ref(self.reply_to),
            quote_of: into_ref(self.quote_of),
            lang: self.lang,
        })
    }

    pub fn from_record(t: &TweetRecord) -> Self {
        let into_raw = |r: &Option<TweetRef>| {
            r.as_ref().map(|r| RawRef {
                id: r.tweet_id.clone(),
                user_id: r.account_id.clone(),
            })
        };
        RawTweet {
            id: t.tweet_id.clone(),
            created_at: format_timestamp(t.created_at),
            user: RawUser {
                id: t.author.account_id.clone(),
                screen_name: t.author.screen_name.clone(),
                location: t.author.location_text.clone(),
                friends_count: t.author.friends_count,
                followers_count: t.author.followers_count,
                statuses_count: t.author.statuses_count,
                created_at: format_timestamp(t.author.account_created_at),
            },
            text: t.text.clone(),
            lang: t.lang.clone(),
            entities: RawEntities {
                hashtags: t.hashtags.clone(),
                mentions: t.mentions.clone(),
                urls: t.urls.clone(),
            },
            retweet_of: into_raw(&t.retweet_of),
            reply_to: into_raw(&t.reply_to),
            quote_of: into_raw(&t.quote_of),
        }
    }
}

/// Writes records in the canonical JSONL format, one object per line.
pub fn write_jsonl<'a, W: Write>(
    mut out: W,
    tweets: impl IntoIterator<Item = &'a TweetRecord>,
) -> Result<()> {
    for t in tweets {
        serde_json::to_writer(&mut out, &RawTweet::from_record(t))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Maps a platform v1.1-style status payload onto the canonical schema.
pub fn adapt_platform_v1(payload: &serde_json::Value) -> Result<RawTweet> {
    use serde_json::Value;

    fn s(v: &Value, key: &str) -> Option<String> {
        match v.get(key)? {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        }
    }
    fn n(v: &Value, key: &str) -> u64 {
        v.get(key).and_then(Value::as_u64).unwrap_or(0)
    }
    fn ts(v: &Value, key: &str) -> Result<String> {
        let raw = s(v, key).ok_or_else(|| Error::Config(format!("payload missing `{key}`")))?;
        let parsed = DateTime::parse_from_str(&raw, "%a %b %d %H:%M:%S %z %Y")
            .or_else(|_| DateTime::parse_from_rfc3339(&raw))
            .map_err(|e| Error::Config(format!("bad timestamp `{raw}`: {e}")))?;
        Ok(format_timestamp(parsed.with_timezone(&Utc)))
    }
    let id_of = |v: &Value| s(v, "id_str").or_else(|| s(v, "id"));

    let user = payload
        .get("user")
        .ok_or_else(|| Error::Config("payload missing `user`".into()))?;
    let entities = payload.get("entities").cloned().unwrap_or(Value::Null);
    let list = |key: &str, field: &[&str]| -> Vec<String> {
        entities
            .get(key)
            .and_then(Value::as_array)
            .map(|items| {
                items
                    .iter()
                    .filter_map(|item| field.iter().find_map(|f| s(item, f)))
                    .collect()
            })
            .unwrap_or_default()
    };
    let retweeted = payload.get("retweeted_status").filter(|v| !v.is_null());
    let quoted = payload.get("quoted_status").filter(|v| !v.is_null());
    let reference = |v: &Value| -> Option<RawRef> {
        Some(RawRef {
            id: id_of(v)?,
            user_id: v.get("user").and_then(id_of)?,
        })
    };
    let reply_to = match (
        s(payload, "in_reply_to_status_id_str"),
        s(payload, "in_reply_to_user_id_str"),
    ) {
        (Some(id), Some(user_id)) => Some(RawRef { id, user_id }),
        _ => None,
    };
    let text = retweeted
        .and_then(|rt| s(rt, "full_text").or_else(|| s(rt, "text")))
        .map(|t| {
            let author = retweeted
                .and_then(|rt| rt.get("user"))
                .and_then(|u| s(u, "screen_name"))
                .unwrap_or_default();
            format!("RT @{author}: {t}")
        })
        .or_else(|| s(payload, "full_text"))
        .or_else(|| s(payload, "text"))
        .unwrap_or_default();

    Ok(RawTweet {
        id: id_of(payload).ok_or_else(|| Error::Config("payload missing id".into()))?,
        created_at: ts(payload, "created_at")?,
        user: RawUser {
            id: id_of(user).ok_or_else(|| Error::Config("user missing id".into()))?,
            screen_name: s(user, "screen_name").unwrap_or_default(),
            location: s(user, "location").filter(|l| !l.is_empty()),
            friends_count: n(user, "friends_count"),
            followers_count: n(user, "followers_count"),
            statuses_count: n(user, "statuses_count"),
            created_at: ts(user, "created_at")?,
        },
        text,
        lang: s(payload, "lang"),
        entities: RawEntities {
            hashtags: list("hashtags", &["text"]),
            mentions: list("user_mentions", &["id_str", "id"]),
            urls: list("urls", &["expanded_url", "url"]),
        },
        retweet_of: retweeted.and_then(reference),
        reply_to,
        quote_of: quoted.and_then(reference),
    })
}

// ---------------------------------------------------------------------------
// Corpus

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

/// What happened to each input line during parsing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub parsed: usize,
    pub malformed: Vec<SkippedLine>,
    pub duplicates: Vec<String>,
}

impl ParseReport {
    pub fn skipped(&self) -> usize {
        self.malformed.len() + self.duplicates.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusSummary {
    pub tweets: usize,
    pub accounts: usize,
    pub retweets: usize,
    pub replies: usize,
    pub quotes: usize,
    pub first_tweet: Option<DateTime<Utc>>,
    pub last_tweet: Option<DateTime<Utc>>,
}

/// Immutable, indexed tweet collection ordered by `(created_at, tweet_id)`.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    tweets: Vec<TweetRecord>,
    by_id: HashMap<String, usize>,
    by_account: BTreeMap<String, Vec<usize>>,
    by_hashtag: BTreeMap<String, Vec<usize>>,
    by_url: BTreeMap<String, Vec<usize>>,
    retweets_of: BTreeMap<String, Vec<usize>>,
    source: String,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.tweets == other.tweets && self.source == other.source
    }
}

impl Corpus {
    /// Builds a corpus, keeping the first occurrence of each tweet id.
    /// Returns the ids that were dropped as duplicates.
    pub fn from_tweets(tweets: Vec<TweetRecord>, source: impl Into<String>) -> (Self, Vec<String>) {
        let mut seen = HashSet::with_capacity(tweets.len());
        let mut duplicates = Vec::new();
        let mut kept = Vec::with_capacity(tweets.len());
        for t in tweets {
            if seen.contains(t.tweet_id.as_str()) {
                duplicates.push(t.tweet_id);
            } else {
                seen.insert(t.tweet_id.clone());
                kept.push(t);
            }
        }
        drop(seen);
        kept.sort_by(|a, b| {
            a.created_at
                .cmp(&b.created_at)
                .then_with(|| a.tweet_id.cmp(&b.tweet_id))
        });

        let mut corpus = Corpus {
            tweets: kept,
            source: source.into(),
            ..Default::default()
        };
        corpus.by_id.reserve(corpus.tweets.len());
        for (i, t) in corpus.tweets.iter().enumerate() {
            corpus.by_id.insert(t.tweet_id.clone(), i);
            push_index(&mut corpus.by_account, &t.author.account_id, i);
            let mut tags: Vec<&str> = t.hashtags.iter().map(String::as_str).collect();
            tags.sort_unstable();
            tags.dedup();
            for tag in tags {
                push_index(&mut corpus.by_hashtag, tag, i);
            }
            let mut urls: Vec<&str> = t.urls.iter().map(String::as_str).collect();
            urls.sort_unstable();
            urls.dedup();
            for url in urls {
                push_index(&mut corpus.by_url, url, i);
            }
            if let Some(rt) = &t.retweet_of {
                push_index(&mut corpus.retweets_of, &rt.tweet_id, i);
            }
        }
        (corpus, duplicates)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn tweets(&self) -> &[TweetRecord] {
        &self.tweets
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tweet(&self, tweet_id: &str) -> Option<&TweetRecord> {
        self.by_id.get(tweet_id).map(|&i| &self.tweets[i])
    }

    pub fn position(&self, tweet_id: &str) -> Option<usize> {
        self.by_id.get(tweet_id).copied()
    }

    /// Distinct authors in ascending id order.
    pub fn accounts(&self) -> impl Iterator<Item = &str> {
        self.by_account.keys().map(String::as_str)
    }

    pub fn account_count(&self) -> usize {
        self.by_account.len()
    }

    pub fn is_author(&self, account_id: &str) -> bool {
        self.by_account.contains_key(account_id)
    }

    pub fn tweets_by(&self, account_id: &str) -> &[usize] {
        self.by_account
            .get(account_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Snapshot carried by the account's most recent tweet.
    pub fn latest_snapshot(&self, account_id: &str) -> Option<&AccountSnapshot> {
        self.tweets_by(account_id)
            .last()
            .map(|&i| &self.tweets[i].author)
    }

    /// Case-insensitive hashtag lookup; a leading `#` is ignored.
    pub fn tweets_with_hashtag(&self, tag: &str) -> &[usize] {
        self.by_hashtag
            .get(&normalize_hashtag(tag))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn hashtags(&self) -> impl Iterator<Item = &str> {
        self.by_hashtag.keys().map(String::as_str)
    }

    pub fn tweets_with_url(&self, url: &str) -> &[usize] {
        self.by_url.get(url).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn retweets_of(&self, tweet_id: &str) -> &[usize] {
        self.retweets_of
            .get(tweet_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Follows `retweet_of` links through in-corpus retweets to the root original.
    pub fn root_original<'a>(&'a self, reference: &'a TweetRef) -> &'a TweetRef {
        let mut current = reference;
        for _ in 0..64 {
            match self
                .tweet(&current.tweet_id)
                .and_then(|t| t.retweet_of.as_ref())
            {
                Some(next) if next.tweet_id != current.tweet_id => current = next,
                _ => break,
            }
        }
        current
    }

    pub fn first_time(&self) -> Option<DateTime<Utc>> {
        self.tweets.first().map(|t| t.created_at)
    }

    pub fn last_time(&self) -> Option<DateTime<Utc>> {
        self.tweets.last().map(|t| t.created_at)
    }

    pub fn summary(&self) -> CorpusSummary {
        let count = |f: fn(&TweetRecord) -> bool| self.tweets.iter().filter(|t| f(t)).count();
        CorpusSummary {
            tweets: self.tweets.len(),
            accounts: self.by_account.len(),
            retweets: count(|t| t.retweet_of.is_some()),
            replies: count(|t| t.reply_to.is_some()),
            quotes: count(|t| t.quote_of.is_some()),
            first_tweet: self.first_time(),
            last_tweet: self.last_time(),
        }
    }
}

fn push_index(index: &mut BTreeMap<String, Vec<usize>>, key: &str, i: usize) {
    match index.get_mut(key) {
        Some(v) => v.push(i),
        None => {
            index.insert(key.to_owned(), vec![i]);
        }
    }
}

/// Parses canonical JSONL. Malformed lines and duplicate ids are reported,
/// not fatal; only read failures abort.
pub fn parse_corpus<R: BufRead>(
    reader: R,
    source: impl Into<String>,
) -> Result<(Corpus, ParseReport)> {
    let mut report = ParseReport::default();
    let mut tweets = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawTweet>(&line)
            .map_err(Error::from)
            .and_then(RawTweet::into_record);
        match parsed {
            Ok(t) => tweets.push(t),
            Err(e) => report.malformed.push(SkippedLine {
                line: n + 1,
                reason: e.to_string(),
            }),
        }
    }
    let (corpus, duplicates) = Corpus::from_tweets(tweets, source);
    if !duplicates.is_empty() {
        log::warn!("{} duplicate tweet ids dropped", duplicates.len());
    }
    if !report.malformed.is_empty() {
        log::warn!("{} malformed lines skipped", report.malformed.len());
    }
    report.parsed = corpus.len();
    report.duplicates = duplicates;
    Ok((corpus, report))
}

// ---------------------------------------------------------------------------
// Phases

/// `N` strictly increasing boundaries define `N + 1` phases. A boundary
/// instant belongs to the later phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub boundaries: Vec<DateTime<Utc>>,
    #[serde(default)]
    pub phase_names: Vec<String>,
}

impl PhaseConfig {
    pub fn new(boundaries: Vec<DateTime<Utc>>, phase_names: Vec<String>) -> Result<Self> {
        let cfg = PhaseConfig {
            boundaries,
            phase_names,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn single() -> Self {
        PhaseConfig {
            boundaries: Vec::new(),
            phase_names: vec!["Phase 1".into()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "phase boundaries must be strictly increasing".into(),
            ));
        }
        if !self.phase_names.is_empty() && self.phase_names.len() != self.boundaries.len() + 1 {
            return Err(Error::Config(format!(
                "{} boundaries need {} phase names, got {}",
                self.boundaries.len(),
                self.boundaries.len() + 1,
                self.phase_names.len()
            )));
        }
        Ok(())
    }

    pub fn phase_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn phase_of(&self, t: DateTime<Utc>) -> usize {
        self.boundaries.partition_point(|b| *b <= t)
    }

    pub fn name(&self, phase: usize) -> String {
        self.phase_names
            .get(phase)
            .cloned()
            .unwrap_or_else(|| format!("Phase {}", phase + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhaseCounts {
    pub tweets: usize,
    pub accounts: usize,
}

/// A corpus together with the phase index of every tweet.
#[derive(Debug, Clone)]
pub struct PhasedCorpus {
    corpus: Corpus,
    phases: PhaseConfig,
    tweet_phase: Vec<u16>,
}

pub fn assign_phases(corpus: Corpus, phases: PhaseConfig) -> Result<PhasedCorpus> {
    phases.validate()?;
    let tweet_phase = corpus
        .tweets()
        .iter()
        .map(|t| phases.phase_of(t.created_at) as u16)
        .collect();
    Ok(PhasedCorpus {
        corpus,
        phases,
        tweet_phase,
    })
}

impl PhasedCorpus {
    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn phases(&self) -> &PhaseConfig {
        &self.phases
    }

    pub fn phase_count(&self) -> usize {
        self.phases.phase_count()
    }

    pub fn phase_of_tweet(&self, index: usize) -> usize {
        self.tweet_phase[index] as usize
    }

    /// Tweets (with their indices) in the given phase, or all when `None`.
    pub fn tweets_in(&self, phase: Option<usize>) -> impl Iterator<Item = (usize, &TweetRecord)> {
        self.corpus
            .tweets()
            .iter()
            .enumerate()
            .filter(move |(i, _)| phase.is_none_or(|p| self.tweet_phase[*i] as usize == p))
    }

    pub fn phase_counts(&self) -> Vec<PhaseCounts> {
        let mut tweets = vec![0usize; self.phase_count()];
        let mut accounts: Vec<HashSet<&str>> = vec![HashSet::new(); self.phase_count()];
        for (i, t) in self.corpus.tweets().iter().enumerate() {
            let p = self.tweet_phase[i] as usize;
            tweets[p] += 1;
            accounts[p].insert(t.author_id());
        }
        tweets
            .into_iter()
            .zip(accounts)
            .map(|(tweets, a)| PhaseCounts {
                tweets,
                accounts: a.len(),
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Growth and meta-discussion

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GrowthPoint {
    pub bucket_start: DateTime<Utc>,
    pub cumulative_accounts: usize,
}

/// Cumulative distinct-author count at the end of each bucket, anchored at
/// the first tweet. A tweet on a bucket edge counts towards the later bucket.
pub fn growth_curve(corpus: &Corpus, bucket: TimeDelta) -> Result<Vec<GrowthPoint>> {
    if bucket <= TimeDelta::zero() {
        return Err(Error::Config("growth bucket must be positive".into()));
    }
    let (Some(origin), Some(last)) = (corpus.first_time(), corpus.last_time()) else {
        return Ok(Vec::new());
    };
    let n_buckets = bucket_index(origin, last, bucket) as usize + 1;
    let mut new_accounts = vec![0usize; n_buckets];
    let mut seen = HashSet::new();
    for t in corpus.tweets() {
        if seen.insert(t.author_id()) {
            new_accounts[bucket_index(origin, t.created_at, bucket) as usize] += 1;
        }
    }
    let mut total = 0;
    Ok(new_accounts
        .into_iter()
        .enumerate()
        .map(|(i, added)| {
            total += added;
            GrowthPoint {
                bucket_start: origin + bucket * i as i32,
                cumulative_accounts: total,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetaDay {
    pub day: NaiveDate,
    pub meta_tweets: usize,
    pub total_tweets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetaReport {
    pub term: String,
    pub days: Vec<MetaDay>,
    pub meta_tweets: usize,
    pub total_tweets: usize,
    /// `meta_tweets / total_tweets`; `None` for an empty corpus.
    pub ratio: Option<f64>,
}

/// True when `text` mentions `term` (case-insensitively) somewhere other
/// than directly after a `#`.
pub fn is_meta_mention(text: &str, term: &str) -> bool {
    let hay = text.to_lowercase();
    let needle = term.trim_start_matches('#').to_lowercase();
    if needle.is_empty() {
        return false;
    }
    hay.match_indices(&needle)
        .any(|(pos, _)| !hay[..pos].ends_with('#'))
}

pub fn meta_discussion_report(corpus: &Corpus, term: &str) -> Result<MetaReport> {
    if term.trim_start_matches('#').is_empty() {
        return Err(Error::Config(
            "meta-discussion term must be nonempty".into(),
        ));
    }
    let mut days: BTreeMap<NaiveDate, (usize, usize)> = BTreeMap::new();
    let mut meta = 0;
    for t in corpus.tweets() {
        let entry = days.entry(t.created_at.date_naive()).or_default();
        entry.1 += 1;
        if is_meta_mention(&t.text, term) {
            entry.0 += 1;
            meta += 1;
        }
    }
    let total = corpus.len();
    Ok(MetaReport {
        term: term.to_owned(),
        days: days
            .into_iter()
            .map(|(day, (meta_tweets, total_tweets))| MetaDay {
                day,
                meta_tweets,
                total_tweets,
            })
            .collect(),
        meta_tweets: meta,
        total_tweets: total,
        ratio: (total > 0).then(|| meta as f64 / total as f64),
    })
}

/// Distinct accounts, used by several reports.
pub fn distinct_authors<'a>(
    tweets: impl IntoIterator<Item = &'a TweetRecord>,
) -> BTreeSet<&'a str> {
    tweets.into_iter().map(TweetRecord::author_id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{at, tweet, At};
    use chrono::TimeZone;

    fn jsonl(lines: &[&str]) -> (Corpus, ParseReport) {
        parse_corpus(lines.join("\n").as_bytes(), "test").unwrap()
    }

    fn line(id: &str, user: &str) -> String {
        let t = tweet(id, user, 0);
        serde_json::to_string(&RawTweet::from_record(&t)).unwrap()
    }

    #[test]
    fn empty_stream_is_empty_corpus() {
        let (c, report) = jsonl(&[]);
        assert_eq!(c.summary().tweets, 0);
        assert_eq!(c.summary().accounts, 0);
        assert_eq!(report.skipped(), 0);
    }

    #[test]
    fn duplicate_ids_keep_first() {
        let mut dup = tweet("t1", "other", 5);
        dup.text = "second copy".into();
        let lines = [
            line("t1", "a"),
            line("t2", "b"),
            serde_json::to_string(&RawTweet::from_record(&dup)).unwrap(),
        ];
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let (c, report) = jsonl(&refs);
        assert_eq!(c.len(), 2);
        assert_eq!(report.duplicates, vec!["t1".to_string()]);
        assert_eq!(c.tweet("t1").unwrap().author_id(), "a");
    }

    #[test]
    fn malformed_lines_are_reported_not_fatal() {
        let good = line("t1", "a");
        let (c, report) = jsonl(&[&good, "{not json", r#"{"id": ""}"#]);
        assert_eq!(c.len(), 1);
        assert_eq!(report.malformed.len(), 2);
        assert_eq!(report.malformed[0].line, 2);
    }

    #[test]
    fn hashtag_lookup_is_case_insensitive() {
        let mut t = tweet("t1", "a", 0);
        t.hashtags = vec!["AuSpOl".into()];
        let raw = serde_json::to_string(&RawTweet::from_record(&t)).unwrap();
        let (c, _) = jsonl(&[&raw]);
        assert_eq!(c.tweets_with_hashtag("auspol"), &[0]);
        assert_eq!(c.tweets_with_hashtag("#AUSPOL"), &[0]);
    }

    #[test]
    fn ordering_breaks_ties_by_id() {
        let (c, _) = Corpus::from_tweets(
            vec![tweet("b", "x", 0), tweet("a", "x", 0), tweet("c", "x", -1)],
            "",
        );
        let ids: Vec<&str> = c.tweets().iter().map(|t| t.tweet_id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
    }

    fn three_phases() -> PhaseConfig {
        PhaseConfig::new(
            vec![
                Utc.with_ymd_and_hms(2020, 1, 7, 6, 0, 0).unwrap(),
                Utc.with_ymd_and_hms(2020, 1, 7, 19, 0, 0).unwrap(),
            ],
            vec!["Phase 1".into(), "Phase 2".into(), "Phase 3".into()],
        )
        .unwrap()
    }

    #[test]
    fn phase_boundaries() {
        let p = three_phases();
        assert_eq!(
            p.phase_of(Utc.with_ymd_and_hms(2020, 1, 7, 5, 59, 0).unwrap()),
            0
        );
        assert_eq!(
            p.phase_of(Utc.with_ymd_and_hms(2020, 1, 7, 6, 0, 0).unwrap()),
            1
        );
        assert_eq!(
            p.phase_of(Utc.with_ymd_and_hms(2020, 1, 9, 0, 0, 0).unwrap()),
            2
        );
        assert_eq!(
            p.phase_of(Utc.with_ymd_and_hms(2019, 12, 1, 0, 0, 0).unwrap()),
            0
        );
    }

    #[test]
    fn phase_config_validation() {
        let t = Utc.with_ymd_and_hms(2020, 1, 7, 6, 0, 0).unwrap();
        assert!(PhaseConfig::new(vec![t, t], vec![]).is_err());
        assert!(PhaseConfig::new(vec![t], vec!["only one".into()]).is_err());
    }

    #[test]
    fn per_phase_counts() {
        let p = three_phases();
        let b0 = p.boundaries[0];
        let b1 = p.boundaries[1];
        let mut tweets = Vec::new();
        for i in 0..10 {
            tweets.push(tweet(&format!("a{i}"), "u1", 0).at(b0 - TimeDelta::minutes(i + 1)));
        }
        for i in 0..20 {
            tweets.push(
                tweet(&format!("b{i}"), &format!("u{}", i % 3), 0).at(b0 + TimeDelta::minutes(i)),
            );
        }
        for i in 0..30 {
            tweets.push(tweet(&format!("c{i}"), "u9", 0).at(b1 + TimeDelta::minutes(i)));
        }
        let (c, _) = Corpus::from_tweets(tweets, "");
        let phased = assign_phases(c, p).unwrap();
        let counts = phased.phase_counts();
        let tweets: Vec<usize> = counts.iter().map(|c| c.tweets).collect();
        assert_eq!(tweets, [10, 20, 30]);
        assert_eq!(counts[1].accounts, 3);
    }

    #[test]
    fn growth_single_account_is_flat() {
        let tweets = (0..100)
            .map(|i| tweet(&format!("t{i}"), "solo", i * 600))
            .collect();
        let (c, _) = Corpus::from_tweets(tweets, "");
        let curve = growth_curve(&c, TimeDelta::hours(1)).unwrap();
        assert!(curve.iter().all(|p| p.cumulative_accounts == 1));
        assert!(growth_curve(&c, TimeDelta::zero()).is_err());
    }

    #[test]
    fn growth_bucket_edge_goes_to_later_bucket() {
        let (c, _) = Corpus::from_tweets(vec![tweet("a", "x", 0), tweet("b", "y", 3600)], "");
        let curve = growth_curve(&c, TimeDelta::hours(1)).unwrap();
        assert_eq!(curve.len(), 2);
        assert_eq!(curve[0].cumulative_accounts, 1);
        assert_eq!(curve[1].cumulative_accounts, 2);
    }

    #[test]
    fn meta_rule() {
        let texts = ["#X", "X", "# X", "\\#!X"];
        let n = texts.iter().filter(|t| is_meta_mention(t, "x")).count();
        assert_eq!(n, 3);
        assert!(!is_meta_mention(
            "loving #ArsonEmergency today",
            "ArsonEmergency"
        ));
        assert!(is_meta_mention(
            "the arsonemergency tag is a mess",
            "ArsonEmergency"
        ));
        assert!(is_meta_mention(
            "#arsonemergency vs arsonemergency",
            "arsonemergency"
        ));
    }

    #[test]
    fn meta_report_all_hashtagged() {
        let tweets = (0..5)
            .map(|i| {
                let mut t = tweet(&format!("t{i}"), "a", i);
                t.text = "#ArsonEmergency".into();
                t
            })
            .collect();
        let (c, _) = Corpus::from_tweets(tweets, "");
        let r = meta_discussion_report(&c, "ArsonEmergency").unwrap();
        assert_eq!(r.ratio, Some(0.0));
        assert!(meta_discussion_report(&c, "").is_err());
    }

    #[test]
    fn account_age_floors_days() {
        let mut t = tweet("t", "a", 0);
        t.author.account_created_at = at(0) - TimeDelta::seconds(86_400 * 3 - 1);
        assert_eq!(t.author.age_days(at(0)), 2);
        assert_eq!(t.author.age_days(at(0) - TimeDelta::days(10)), 0);
    }

    #[test]
    fn root_original_follows_chain() {
        let orig = tweet("o", "author", 0);
        let mut rt1 = tweet("r1", "x", 10);
        rt1.retweet_of = Some(TweetRef {
            tweet_id: "o".into(),
            account_id: "author".into(),
        });
        let mut rt2 = tweet("r2", "y", 20);
        rt2.retweet_of = Some(TweetRef {
            tweet_id: "r1".into(),
            account_id: "x".into(),
        });
        let (c, _) = Corpus::from_tweets(vec![orig, rt1, rt2.clone()], "");
        assert_eq!(
            c.root_original(rt2.retweet_of.as_ref().unwrap()).tweet_id,
            "o"
        );
    }

    #[test]
    fn adapts_platform_payload() {
        let payload = serde_json::json!({
            "id_str": "99",
            "created_at": "Tue Jan 07 05:59:00 +0000 2020",
            "full_text": "hello #Fires @bob",
            "lang": "en",
            "user": {"id_str": "1", "screen_name": "alice", "location": "", "friends_count": 3,
                      "followers_count": 4, "statuses_count": 5,
                      "created_at": "Mon Jan 02 00:00:00 +0000 2017"},
            "entities": {"hashtags": [{"text": "Fires"}], "user_mentions": [{"id_str": "2"}],
                          "urls": [{"expanded_url": "https://example.com/a"}]},
            "in_reply_to_status_id_str": "98",
            "in_reply_to_user_id_str": "2"
        });
        let raw = adapt_platform_v1(&payload).unwrap();
        let rec = raw.into_record().unwrap();
        assert_eq!(rec.hashtags, ["fires"]);
        assert_eq!(rec.mentions, ["2"]);
        assert_eq!(rec.author.location_text, None);
        assert_eq!(rec.reply_to.unwrap().account_id, "2");
        assert_eq!(format_timestamp(rec.created_at), "2020-01-07T05:59:00Z");
    }
}
