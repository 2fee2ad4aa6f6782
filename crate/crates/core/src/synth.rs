//! Synthetic corpora with planted ground truth.
//!
//! Generation is single-threaded and driven by one seeded ChaCha8 stream,
//! so a config fully determines the output bytes. Background tweets are
//! written as they are produced; only a bounded pool of recent originals
//! per group is kept in memory.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, TimeDelta, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::affiliation::{Affiliation, AffiliationMap};
use crate::coordination::CoKind;
use crate::corpus::{AccountSnapshot, Corpus, RawTweet, TweetRecord, TweetRef};
use crate::error::{Error, Result};
use crate::export::write_atomic;
use crate::inauthenticity::TextPattern;

const POOL: usize = 1000;
const FILLER: [&str; 16] = [
    "fires", "smoke", "town", "today", "they", "said", "the", "report", "look", "again", "nobody",
    "why", "this", "just", "read", "people",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupBehaviour {
    /// Share of background tweets authored by this group.
    pub tweet_share: f64,
    pub retweet_rate: f64,
    pub reply_rate: f64,
    pub quote_rate: f64,
    pub hashtags_mean: f64,
    pub mentions_mean: f64,
    pub url_rate: f64,
    /// Chance an original is reduced to entities only.
    pub pattern_rate: f64,
    /// Chance a hashtag comes from the group's exclusive list.
    pub partisan_rate: f64,
    /// Per-phase activity multipliers; missing phases default to 1.
    pub phase_multipliers: Vec<f64>,
}

impl Default for GroupBehaviour {
    fn default() -> Self {
        GroupBehaviour {
            tweet_share: 1.0,
            retweet_rate: 0.5,
            reply_rate: 0.1,
            quote_rate: 0.05,
            hashtags_mean: 1.5,
            mentions_mean: 0.5,
            url_rate: 0.3,
            pattern_rate: 0.05,
            partisan_rate: 0.3,
            phase_multipliers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Vocabulary {
    pub shared_hashtags: Vec<String>,
    pub supporter_hashtags: Vec<String>,
    pub opposer_hashtags: Vec<String>,
    pub supporter_domains: Vec<String>,
    pub opposer_domains: Vec<String>,
    pub shared_domains: Vec<String>,
    /// Distinct article paths per domain.
    pub paths_per_domain: usize,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| (*s).to_owned()).collect()
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            shared_hashtags: strings(&[
                "arsonemergency",
                "australiafires",
                "bushfires",
                "auspol",
                "nswfires",
                "smoke",
            ]),
            supporter_hashtags: strings(&[
                "arsonists",
                "climatehoax",
                "backburning",
                "greensfault",
                "fuelload",
            ]),
            opposer_hashtags: strings(&[
                "climateemergency",
                "climatecrisis",
                "factcheck",
                "disinformation",
            ]),
            supporter_domains: strings(&["dailyclaims.com.au", "skyreport.net"]),
            opposer_domains: strings(&["factcheck.org", "abc.net.au"]),
            shared_domains: strings(&["news.com.au", "bbc.co.uk", "rfs.nsw.gov.au"]),
            paths_per_domain: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueSpec {
    pub kind: CoKind,
    pub group: Affiliation,
    pub size: usize,
    /// Distinct shared reasons (tweets, hashtags, ...).
    pub reasons: usize,
    /// Members act pairwise within this many seconds for each reason.
    pub gamma_true_secs: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstSpec {
    pub source_group: Affiliation,
    pub target_group: Affiliation,
    pub count: usize,
    pub span_secs: i64,
    pub hashtag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BotSpec {
    pub group: Affiliation,
    pub friends: u64,
    pub followers: u64,
    pub statuses: u64,
    pub age_days: u64,
    /// Retweets the bot contributes to the corpus.
    pub tweets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_supporters: usize,
    pub n_opposers: usize,
    pub n_unaffiliated: usize,
    pub start: DateTime<Utc>,
    pub days: u32,
    pub phase_boundaries: Vec<DateTime<Utc>>,
    /// Overall activity multiplier per phase.
    pub phase_volume: Vec<f64>,
    /// Probability of a morning/evening peak timestamp rather than a uniform one.
    pub diurnal_amplitude: f64,
    /// Planted-partition retweet edge probabilities between labeled accounts.
    pub p_in: f64,
    pub p_out: f64,
    pub background_tweets: usize,
    pub supporters: GroupBehaviour,
    pub opposers: GroupBehaviour,
    pub unaffiliated: GroupBehaviour,
    pub vocabulary: Vocabulary,
    pub cliques: Vec<CliqueSpec>,
    pub bursts: Vec<BurstSpec>,
    pub bots: Vec<BotSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let start = Utc.with_ymd_and_hms(2019, 12, 31, 0, 0, 0).unwrap();
        ScenarioConfig {
            seed: 42,
            n_supporters: 250,
            n_opposers: 250,
            n_unaffiliated: 2000,
            start,
            days: 18,
            phase_boundaries: vec![
                Utc.with_ymd_and_hms(2020, 1, 7, 6, 0, 0).unwrap(),
                Utc.with_ymd_and_hms(2020, 1, 7, 19, 0, 0).unwrap(),
            ],
            phase_volume: vec![0.3, 1.0, 1.5],
            diurnal_amplitude: 0.7,
            p_in: 0.1,
            p_out: 0.001,
            background_tweets: 20_000,
            supporters: GroupBehaviour {
                tweet_share: 0.2,
                retweet_rate: 0.3,
                reply_rate: 0.15,
                quote_rate: 0.1,
                hashtags_mean: 2.0,
                mentions_mean: 1.0,
                pattern_rate: 0.12,
                ..Default::default()
            },
            opposers: GroupBehaviour {
                tweet_share: 0.15,
                retweet_rate: 0.6,
                ..Default::default()
            },
            unaffiliated: GroupBehaviour {
                tweet_share: 0.65,
                partisan_rate: 0.0,
                ..Default::default()
            },
            vocabulary: Vocabulary::default(),
            cliques: vec![CliqueSpec {
                kind: CoKind::CoRetweet,
                group: Affiliation::Supporter,
                size: 10,
                reasons: 5,
                gamma_true_secs: 30,
            }],
            bursts: vec![BurstSpec {
                source_group: Affiliation::Supporter,
                target_group: Affiliation::Opposer,
                count: 26,
                span_secs: 520,
                hashtag: "arsonemergency".into(),
            }],
            bots: vec![
                BotSpec {
                    group: Affiliation::Supporter,
                    friends: 25_457,
                    followers: 24_873,
                    statuses: 349_989,
                    age_days: 1087,
                    tweets: 59,
                },
                BotSpec {
                    group: Affiliation::Opposer,
                    friends: 392,
                    followers: 55,
                    statuses: 74,
                    age_days: 925,
                    tweets: 4,
                },
            ],
        }
    }
}

impl ScenarioConfig {
    pub fn group_size(&self, g: Affiliation) -> usize {
        match g {
            Affiliation::Supporter => self.n_supporters,
            Affiliation::Opposer => self.n_opposers,
            Affiliation::Unaffiliated => self.n_unaffiliated,
        }
    }

    pub fn behaviour(&self, g: Affiliation) -> &GroupBehaviour {
        match g {
            Affiliation::Supporter => &self.supporters,
            Affiliation::Opposer => &self.opposers,
            Affiliation::Unaffiliated => &self.unaffiliated,
        }
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.start + TimeDelta::days(self.days as i64)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.days == 0 {
            return bad("days must be positive".into());
        }
        if self.phase_boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return bad("phase boundaries must be strictly increasing".into());
        }
        for (name, p) in [
            ("p_in", self.p_in),
            ("p_out", self.p_out),
            ("diurnal_amplitude", self.diurnal_amplitude),
        ] {
            if !unit(p) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if self.phase_volume.iter().any(|v| *v < 0.0)
            || self.phase_volume.iter().all(|v| *v == 0.0) && !self.phase_volume.is_empty()
        {
            return bad("phase_volume needs nonnegative values, not all zero".into());
        }
        for g in Affiliation::ALL {
            let b = self.behaviour(g);
            let rates = [
                b.retweet_rate,
                b.reply_rate,
                b.quote_rate,
                b.url_rate,
                b.pattern_rate,
                b.partisan_rate,
            ];
            if rates.iter().any(|r| !unit(*r)) || b.retweet_rate + b.reply_rate + b.quote_rate > 1.0
            {
                return bad(format!(
                    "{g} rates must lie in [0, 1] and retweet+reply+quote must not exceed 1"
                ));
            }
            if b.tweet_share < 0.0 || b.hashtags_mean < 0.0 || b.mentions_mean < 0.0 {
                return bad(format!("{g} means and shares must be nonnegative"));
            }
            if b.phase_multipliers.iter().any(|m| *m < 0.0) {
                return bad(format!("{g} phase multipliers must be nonnegative"));
            }
        }
        if self.background_tweets > 0 {
            let live: f64 = Affiliation::ALL
                .iter()
                .filter(|g| self.group_size(**g) > 0)
                .map(|g| self.behaviour(*g).tweet_share)
                .sum();
            if live <= 0.0 {
                return bad(
                    "background tweets need a nonempty group with a positive tweet_share".into(),
                );
            }
        }
        if self.vocabulary.shared_hashtags.is_empty() || self.vocabulary.shared_domains.is_empty() {
            return bad("shared hashtag and domain vocabularies must be nonempty".into());
        }
        if self.vocabulary.paths_per_domain == 0 {
            return bad("paths_per_domain must be positive".into());
        }
        for c in &self.cliques {
            if c.size < 2 {
                return bad("a clique needs at least two members".into());
            }
            if c.size > self.group_size(c.group) {
                return bad(format!(
                    "clique of {} exceeds the {} {} accounts",
                    c.size,
                    self.group_size(c.group),
                    c.group
                ));
            }
            if c.reasons == 0 || c.gamma_true_secs <= 0 {
                return bad("a clique needs reasons and a positive gamma_true_secs".into());
            }
        }
        for b in &self.bursts {
            if self.group_size(b.source_group) == 0 || self.group_size(b.target_group) == 0 {
                return bad("burst source and target groups must be nonempty".into());
            }
            if b.count == 0 || b.span_secs < 0 {
                return bad("a burst needs a positive count and nonnegative span".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedClique {
    pub kind: CoKind,
    pub members: Vec<String>,
    /// Reason identifiers as the coordination stage keys them.
    pub reasons: Vec<String>,
    pub gamma_true_secs: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedBurst {
    pub source: String,
    pub target: String,
    pub count: usize,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub tweet_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedBot {
    pub account_id: String,
    pub group: Affiliation,
    pub friends: u64,
    pub followers: u64,
    pub statuses: u64,
    pub age_days: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub tweets: u64,
    pub phase_boundaries: Vec<DateTime<Utc>>,
    pub affiliations: BTreeMap<String, Affiliation>,
    pub partition_edges: u64,
    pub partition_cross_edges: u64,
    pub cliques: Vec<PlantedClique>,
    pub bursts: Vec<PlantedBurst>,
    pub bots: Vec<PlantedBot>,
    pub partisan_hashtags: BTreeMap<Affiliation, Vec<String>>,
    /// Pattern label of every emitted tweet's text, per author group.
    pub pattern_counts: BTreeMap<Affiliation, BTreeMap<TextPattern, u64>>,
}

impl GroundTruth {
    pub fn affiliation_map(&self) -> AffiliationMap {
        let mut m = AffiliationMap::new(format!("synthetic seed {}", self.seed));
        for (a, g) in &self.affiliations {
            if g.is_labeled() {
                m.insert(a.clone(), *g);
            }
        }
        m
    }
}

struct Account {
    id: String,
    group: Affiliation,
    snapshot: AccountSnapshot,
}

#[derive(Clone)]
struct Original {
    tweet_id: String,
    author: usize,
    text: String,
    hashtags: Vec<String>,
    urls: Vec<String>,
    pattern: TextPattern,
}

struct Generator<'a, W: Write> {
    cfg: &'a ScenarioConfig,
    rng: ChaCha8Rng,
    out: W,
    accounts: Vec<Account>,
    /// Account indices per group.
    members: [Vec<usize>; 3],
    pools: [VecDeque<Original>; 3],
    next_id: u64,
    truth: GroundTruth,
}

fn pattern_of(hashtags: usize, mentions: usize, url: bool, filler: bool) -> TextPattern {
    if filler || hashtags == 0 {
        return TextPattern::Other;
    }
    match (mentions > 0, url) {
        (false, false) => TextPattern::HashtagsOnly,
        (false, true) => TextPattern::HashtagsUrl,
        (true, false) => TextPattern::MentionsHashtags,
        (true, true) => TextPattern::MentionsHashtagsUrl,
    }
}

fn with_mention(p: TextPattern) -> TextPattern {
    match p {
        TextPattern::HashtagsOnly => TextPattern::MentionsHashtags,
        TextPattern::HashtagsUrl => TextPattern::MentionsHashtagsUrl,
        other => other,
    }
}

impl<W: Write> Generator<'_, W> {
    fn new_id(&mut self) -> String {
        self.next_id += 1;
        format!("{:012}", self.next_id)
    }

    fn add_account(&mut self, id: String, group: Affiliation, profile: Option<&BotSpec>) -> usize {
        let (friends, followers, statuses, age) = match profile {
            Some(b) => (b.friends, b.followers, b.statuses, b.age_days),
            None => {
                let friends = (10f64.powf(self.rng.gen_range(1.0..4.0))) as u64;
                let followers = (10f64.powf(self.rng.gen_range(0.5..4.5))) as u64;
                let age = self.rng.gen_range(30..4000);
                let statuses = age * self.rng.gen_range(1..40);
                (friends, followers, statuses, age)
            }
        };
        let snapshot = AccountSnapshot {
            account_id: id.clone(),
            screen_name: id.clone(),
            location_text: None,
            friends_count: friends,
            followers_count: followers,
            statuses_count: statuses,
            account_created_at: self.cfg.start - TimeDelta::days(age as i64),
        };
        self.truth.affiliations.insert(id.clone(), group);
        self.members[group.index()].push(self.accounts.len());
        self.accounts.push(Account {
            id,
            group,
            snapshot,
        });
        self.accounts.len() - 1
    }

    fn phase_of(&self, secs: i64) -> usize {
        self.cfg
            .phase_boundaries
            .partition_point(|b| b.timestamp() <= secs)
    }

    fn volume(&self, phase: usize) -> f64 {
        self.cfg.phase_volume.get(phase).copied().unwrap_or(1.0)
    }

    /// A timestamp in the scenario span with diurnal peaks, accepted in
    /// proportion to the phase volume.
    fn timestamp(&mut self) -> i64 {
        let start = self.cfg.start.timestamp();
        let max_volume = (0..=self.cfg.phase_boundaries.len())
            .map(|p| self.volume(p))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let peaks = [
            Normal::new(10.0 * 3600.0, 2.5 * 3600.0).unwrap(),
            Normal::new(20.0 * 3600.0, 2.5 * 3600.0).unwrap(),
        ];
        loop {
            let day = self.rng.gen_range(0..self.cfg.days as i64);
            let offset = if self.rng.gen_bool(self.cfg.diurnal_amplitude) {
                let peak = &peaks[self.rng.gen_range(0..2)];
                (peak.sample(&mut self.rng) as i64).rem_euclid(86_400)
            } else {
                self.rng.gen_range(0..86_400)
            };
            let t = start + day * 86_400 + offset;
            if self
                .rng
                .gen_bool((self.volume(self.phase_of(t)) / max_volume).min(1.0))
            {
                return t;
            }
        }
    }

    fn url(&mut self, group: Affiliation) -> String {
        let v = &self.cfg.vocabulary;
        let partisan = match group {
            Affiliation::Supporter => &v.supporter_domains,
            Affiliation::Opposer => &v.opposer_domains,
            Affiliation::Unaffiliated => &v.shared_domains,
        };
        let list = if !partisan.is_empty() && self.rng.gen_bool(0.5) {
            partisan
        } else {
            &v.shared_domains
        };
        let domain = list[self.rng.gen_range(0..list.len())].clone();
        let path = self.rng.gen_range(0..v.paths_per_domain);
        format!("https://{domain}/article/{path}")
    }

    fn hashtag(&mut self, group: Affiliation) -> String {
        let v = &self.cfg.vocabulary;
        let partisan = match group {
            Affiliation::Supporter => &v.supporter_hashtags,
            Affiliation::Opposer => &v.opposer_hashtags,
            Affiliation::Unaffiliated => &v.shared_hashtags,
        };
        let rate = self.cfg.behaviour(group).partisan_rate;
        let list = if !partisan.is_empty() && self.rng.gen_bool(rate) {
            partisan
        } else {
            &v.shared_hashtags
        };
        list[self.rng.gen_range(0..list.len())].clone()
    }

    fn poisson(&mut self, mean: f64) -> usize {
        if mean <= 0.0 {
            return 0;
        }
        Poisson::new(mean).unwrap().sample(&mut self.rng) as usize
    }

    fn emit(&mut self, t: &TweetRecord, pattern: TextPattern, group: Affiliation) -> Result<()> {
        serde_json::to_writer(&mut self.out, &RawTweet::from_record(t))?;
        self.out.write_all(b"\n")?;
        self.truth.tweets += 1;
        *self
            .truth
            .pattern_counts
            .entry(group)
            .or_default()
            .entry(pattern)
            .or_insert(0) += 1;
        Ok(())
    }

    fn record(&self, id: String, author: usize, secs: i64, text: String) -> TweetRecord {
        TweetRecord {
            tweet_id: id,
            created_at: DateTime::from_timestamp(secs, 0).unwrap(),
            author: self.accounts[author].snapshot.clone(),
            text,
            hashtags: Vec::new(),
            mentions: Vec::new(),
            urls: Vec::new(),
            retweet_of: None,
            reply_to: None,
            quote_of: None,
            lang: Some("en".into()),
        }
    }

    fn random_account(&mut self, group: Affiliation) -> Option<usize> {
        let m = &self.members[group.index()];
        (!m.is_empty()).then(|| m[self.rng.gen_range(0..m.len())])
    }

    /// An original tweet: optional leading mentions, filler words unless
    /// reduced to entities, hashtags, optional trailing URL.
    fn original(
        &mut self,
        author: usize,
        secs: i64,
        extra_url: Option<String>,
    ) -> (TweetRecord, Original) {
        let group = self.accounts[author].group;
        let b = self.cfg.behaviour(group).clone();
        let n_tags = self.poisson(b.hashtags_mean);
        let n_mentions = self.poisson(b.mentions_mean);
        let filler = !self.rng.gen_bool(b.pattern_rate);
        let mut mentions = Vec::with_capacity(n_mentions);
        for _ in 0..n_mentions {
            let g = Affiliation::ALL[self.rng.gen_range(0..3)];
            if let Some(a) = self.random_account(g) {
                mentions.push(self.accounts[a].id.clone());
            }
        }
        let hashtags: Vec<String> = (0..n_tags).map(|_| self.hashtag(group)).collect();
        let mut urls = Vec::new();
        if self.rng.gen_bool(b.url_rate) {
            urls.push(self.url(group));
        }
        urls.extend(extra_url);
        let mut words: Vec<String> = mentions.iter().map(|m| format!("@{m}")).collect();
        if filler {
            let n = self.rng.gen_range(3..9);
            words.extend((0..n).map(|_| FILLER[self.rng.gen_range(0..FILLER.len())].to_owned()));
        }
        words.extend(hashtags.iter().map(|h| format!("#{h}")));
        words.extend(urls.iter().cloned());
        let pattern = pattern_of(hashtags.len(), mentions.len(), !urls.is_empty(), filler);
        let id = self.new_id();
        let mut t = self.record(id.clone(), author, secs, words.join(" "));
        t.hashtags = hashtags.clone();
        t.mentions = mentions;
        t.urls = urls.clone();
        let o = Original {
            tweet_id: id,
            author,
            text: t.text.clone(),
            hashtags,
            urls,
            pattern,
        };
        (t, o)
    }

    fn retweet_of(&self, author: usize, secs: i64, o: &Original) -> (TweetRecord, TextPattern) {
        let src = &self.accounts[o.author].id;
        let mut t = self.record(
            String::new(),
            author,
            secs,
            format!("RT @{src}: {}", o.text),
        );
        t.hashtags = o.hashtags.clone();
        t.urls = o.urls.clone();
        t.mentions = vec![src.clone()];
        t.retweet_of = Some(TweetRef {
            tweet_id: o.tweet_id.clone(),
            account_id: src.clone(),
        });
        (t, o.pattern)
    }

    /// Target group for a labeled account's retweet, matching the planted
    /// partition's expected in/out ratio.
    fn target_group(&mut self, group: Affiliation) -> Affiliation {
        if !group.is_labeled() {
            return Affiliation::ALL[self.rng.gen_range(0..3)];
        }
        let other = if group == Affiliation::Supporter {
            Affiliation::Opposer
        } else {
            Affiliation::Supporter
        };
        let w_in = self.cfg.p_in * self.cfg.group_size(group) as f64;
        let w_out = self.cfg.p_out * self.cfg.group_size(other) as f64;
        if w_in + w_out <= 0.0 || self.rng.gen_bool(w_in / (w_in + w_out)) {
            group
        } else {
            other
        }
    }

    fn pick_pool(&mut self, group: Affiliation) -> Option<Original> {
        let pool = &self.pools[group.index()];
        (!pool.is_empty()).then(|| pool[self.rng.gen_range(0..pool.len())].clone())
    }

    fn push_pool(&mut self, o: Original) {
        let g = self.accounts[o.author].group.index();
        if self.pools[g].len() == POOL {
            self.pools[g].pop_front();
        }
        self.pools[g].push_back(o);
    }

    fn background(&mut self) -> Result<()> {
        let mut times: Vec<i64> = (0..self.cfg.background_tweets)
            .map(|_| self.timestamp())
            .collect();
        times.sort_unstable();
        for secs in times {
            let phase = self.phase_of(secs);
            let weights: Vec<f64> = Affiliation::ALL
                .iter()
                .map(|&g| {
                    let b = self.cfg.behaviour(g);
                    let m = b.phase_multipliers.get(phase).copied().unwrap_or(1.0);
                    if self.members[g.index()].is_empty() {
                        0.0
                    } else {
                        b.tweet_share * m
                    }
                })
                .collect();
            let total: f64 = weights.iter().sum();
            let group = if total <= 0.0 {
                // all multipliers zero in this phase: fall back to shares
                Affiliation::ALL
                    .into_iter()
                    .find(|g| {
                        !self.members[g.index()].is_empty()
                            && self.cfg.behaviour(*g).tweet_share > 0.0
                    })
                    .unwrap()
            } else {
                let mut x = self.rng.gen_range(0.0..total);
                let mut pick = Affiliation::Unaffiliated;
                for (g, w) in Affiliation::ALL.iter().zip(&weights) {
                    if x < *w {
                        pick = *g;
                        break;
                    }
                    x -= w;
                }
                if weights[pick.index()] == 0.0 {
                    pick = *Affiliation::ALL
                        .iter()
                        .rev()
                        .find(|g| weights[g.index()] > 0.0)
                        .unwrap();
                }
                pick
            };
            let author = self.random_account(group).unwrap();
            let b = self.cfg.behaviour(group).clone();
            let roll: f64 = self.rng.gen();
            let target_group = self.target_group(group);
            let referenced = self.pick_pool(target_group);
            match referenced {
                Some(o) if roll < b.retweet_rate => {
                    let (mut t, p) = self.retweet_of(author, secs, &o);
                    t.tweet_id = self.new_id();
                    self.emit(&t, p, group)?;
                }
                Some(o) if roll < b.retweet_rate + b.reply_rate => {
                    let target = self.accounts[o.author].id.clone();
                    let (mut t, mut orig) = self.original(author, secs, None);
                    t.text = format!("@{target} {}", t.text);
                    t.mentions.insert(0, target.clone());
                    t.reply_to = Some(TweetRef {
                        tweet_id: o.tweet_id.clone(),
                        account_id: target,
                    });
                    orig.pattern = with_mention(orig.pattern);
                    orig.text = t.text.clone();
                    self.emit(&t, orig.pattern, group)?;
                    self.push_pool(orig);
                }
                Some(o) if roll < b.retweet_rate + b.reply_rate + b.quote_rate => {
                    let src = self.accounts[o.author].id.clone();
                    let link = format!("https://twitter.com/{src}/status/{}", o.tweet_id);
                    let (mut t, orig) = self.original(author, secs, Some(link));
                    t.quote_of = Some(TweetRef {
                        tweet_id: o.tweet_id.clone(),
                        account_id: src,
                    });
                    self.emit(&t, orig.pattern, group)?;
                    self.push_pool(orig);
                }
                _ => {
                    let (t, orig) = self.original(author, secs, None);
                    self.emit(&t, orig.pattern, group)?;
                    self.push_pool(orig);
                }
            }
        }
        Ok(())
    }

    /// One seed original per labeled account, retweeted along planted
    /// partition edges drawn with geometric skipping.
    fn partition(&mut self) -> Result<()> {
        let labeled: Vec<usize> = [Affiliation::Supporter, Affiliation::Opposer]
            .iter()
            .flat_map(|g| self.members[g.index()].clone())
            .filter(|&a| {
                !self
                    .truth
                    .bots
                    .iter()
                    .any(|b| b.account_id == self.accounts[a].id)
            })
            .collect();
        if labeled.is_empty() {
            return Ok(());
        }
        let start = self.cfg.start.timestamp();
        let span = self.cfg.days as i64 * 86_400;
        let mut seeds: BTreeMap<usize, Original> = BTreeMap::new();
        for &a in &labeled {
            let secs = start + self.rng.gen_range(0..span / 10);
            let (t, o) = self.original(a, secs, None);
            self.emit(&t, o.pattern, self.accounts[a].group)?;
            seeds.insert(a, o);
        }
        for &u in &labeled {
            let gu = self.accounts[u].group;
            for g in [Affiliation::Supporter, Affiliation::Opposer] {
                let p = if g == gu {
                    self.cfg.p_in
                } else {
                    self.cfg.p_out
                };
                if p <= 0.0 {
                    continue;
                }
                let targets: Vec<usize> = labeled
                    .iter()
                    .copied()
                    .filter(|&v| self.accounts[v].group == g)
                    .collect();
                let geo = Geometric::new(p).unwrap();
                let mut i = geo.sample(&mut self.rng) as usize;
                while i < targets.len() {
                    let v = targets[i];
                    if v != u {
                        let secs = start + span / 10 + self.rng.gen_range(0..span - span / 10);
                        let (mut t, pat) = self.retweet_of(u, secs, &seeds[&v]);
                        t.tweet_id = self.new_id();
                        self.emit(&t, pat, gu)?;
                        self.truth.partition_edges += 1;
                        if g != gu {
                            self.truth.partition_cross_edges += 1;
                        }
                    }
                    i += 1 + geo.sample(&mut self.rng) as usize;
                }
            }
        }
        Ok(())
    }

    fn cliques(&mut self) -> Result<()> {
        let start = self.cfg.start.timestamp();
        let span = self.cfg.days as i64 * 86_400;
        for (c, spec) in self.cfg.cliques.clone().into_iter().enumerate() {
            let mut pool = self.members[spec.group.index()].clone();
            pool.shuffle(&mut self.rng);
            let members: Vec<usize> = pool.into_iter().take(spec.size).collect();
            let poster = self.add_account(format!("src{c}"), Affiliation::Unaffiliated, None);
            let mut reasons = Vec::new();
            for r in 0..spec.reasons {
                let t0 = start + self.rng.gen_range(0..span - spec.gamma_true_secs);
                let mut times: Vec<i64> = members
                    .iter()
                    .map(|_| t0 + self.rng.gen_range(0..spec.gamma_true_secs))
                    .collect();
                times.sort_unstable();
                debug_assert!(times[times.len() - 1] - times[0] < spec.gamma_true_secs);
                match spec.kind {
                    CoKind::CoRetweet => {
                        let (t, o) = self.original(poster, t0 - 60, None);
                        self.emit(&t, o.pattern, Affiliation::Unaffiliated)?;
                        reasons.push(o.tweet_id.clone());
                        for (&m, &secs) in members.iter().zip(&times) {
                            let (mut rt, p) = self.retweet_of(m, secs, &o);
                            rt.tweet_id = self.new_id();
                            self.emit(&rt, p, spec.group)?;
                        }
                    }
                    kind => {
                        let reason = match kind {
                            CoKind::CoHashtag => format!("coord{c}x{r}"),
                            CoKind::CoUrl => format!("https://planted{c}.org/story/{r}"),
                            CoKind::CoDomain => format!("planted{c}x{r}.org"),
                            _ => format!("target{c}x{r}"),
                        };
                        for (k, (&m, &secs)) in members.iter().zip(&times).enumerate() {
                            let id = self.new_id();
                            let mut t = self.record(id, m, secs, String::new());
                            match kind {
                                CoKind::CoHashtag => {
                                    t.hashtags = vec![reason.clone()];
                                    t.text = format!("look at this #{reason}");
                                }
                                CoKind::CoUrl => {
                                    t.urls = vec![reason.clone()];
                                    t.text = format!("read this {reason}");
                                }
                                CoKind::CoDomain => {
                                    let u = format!("https://{reason}/p/{k}");
                                    t.text = format!("read this {u}");
                                    t.urls = vec![u];
                                }
                                _ => {
                                    t.mentions = vec![reason.clone()];
                                    t.text = format!("@{reason} answer this");
                                }
                            }
                            self.emit(&t, TextPattern::Other, spec.group)?;
                        }
                        reasons.push(reason);
                    }
                }
            }
            self.truth.cliques.push(PlantedClique {
                kind: spec.kind,
                members: members
                    .iter()
                    .map(|&m| self.accounts[m].id.clone())
                    .collect(),
                reasons,
                gamma_true_secs: spec.gamma_true_secs,
            });
        }
        Ok(())
    }

    fn bursts(&mut self) -> Result<()> {
        let start = self.cfg.start.timestamp();
        let span = self.cfg.days as i64 * 86_400;
        for spec in self.cfg.bursts.clone() {
            let source = self.random_account(spec.source_group).unwrap();
            let mut target = self.random_account(spec.target_group).unwrap();
            while target == source && self.members[spec.target_group.index()].len() > 1 {
                target = self.random_account(spec.target_group).unwrap();
            }
            let target_id = self.accounts[target].id.clone();
            let t0 = start + self.rng.gen_range(0..(span - spec.span_secs).max(1));
            let (root, o) = self.original(target, t0 - 300, None);
            self.emit(&root, o.pattern, spec.target_group)?;
            let step = if spec.count > 1 {
                spec.span_secs / (spec.count as i64 - 1)
            } else {
                0
            };
            let mut ids = Vec::new();
            for k in 0..spec.count {
                let id = self.new_id();
                let secs = t0 + k as i64 * step;
                let mut t = self.record(
                    id.clone(),
                    source,
                    secs,
                    format!("@{target_id} #{}", spec.hashtag),
                );
                t.hashtags = vec![spec.hashtag.to_lowercase()];
                t.mentions = vec![target_id.clone()];
                t.reply_to = Some(TweetRef {
                    tweet_id: o.tweet_id.clone(),
                    account_id: target_id.clone(),
                });
                self.emit(&t, TextPattern::MentionsHashtags, spec.source_group)?;
                ids.push(id);
            }
            self.truth.bursts.push(PlantedBurst {
                source: self.accounts[source].id.clone(),
                target: target_id,
                count: spec.count,
                start: DateTime::from_timestamp(t0, 0).unwrap(),
                end: DateTime::from_timestamp(t0 + (spec.count as i64 - 1) * step, 0).unwrap(),
                tweet_ids: ids,
            });
        }
        Ok(())
    }

    fn bots(&mut self, bot_accounts: &[usize]) -> Result<()> {
        for (&a, spec) in bot_accounts.iter().zip(self.cfg.bots.clone()) {
            for _ in 0..spec.tweets {
                let secs = self.timestamp();
                let target = self.target_group(spec.group);
                let o = match self.pick_pool(target) {
                    Some(o) => o,
                    None => {
                        let (t, o) = self.original(a, secs, None);
                        self.emit(&t, o.pattern, spec.group)?;
                        continue;
                    }
                };
                let (mut t, p) = self.retweet_of(a, secs, &o);
                t.tweet_id = self.new_id();
                self.emit(&t, p, spec.group)?;
            }
        }
        Ok(())
    }
}

/// Streams the corpus as JSONL into `out` and returns the ground truth.
pub fn generate<W: Write>(cfg: &ScenarioConfig, out: W) -> Result<GroundTruth> {
    cfg.validate()?;
    let mut partisan = BTreeMap::new();
    partisan.insert(
        Affiliation::Supporter,
        cfg.vocabulary.supporter_hashtags.clone(),
    );
    partisan.insert(
        Affiliation::Opposer,
        cfg.vocabulary.opposer_hashtags.clone(),
    );
    let mut g = Generator {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        out,
        accounts: Vec::new(),
        members: [Vec::new(), Vec::new(), Vec::new()],
        pools: [VecDeque::new(), VecDeque::new(), VecDeque::new()],
        next_id: 0,
        truth: GroundTruth {
            seed: cfg.seed,
            tweets: 0,
            phase_boundaries: cfg.phase_boundaries.clone(),
            affiliations: BTreeMap::new(),
            partition_edges: 0,
            partition_cross_edges: 0,
            cliques: Vec::new(),
            bursts: Vec::new(),
            bots: Vec::new(),
            partisan_hashtags: partisan,
            pattern_counts: BTreeMap::new(),
        },
    };
    for (g_, n, prefix) in [
        (Affiliation::Supporter, cfg.n_supporters, "s"),
        (Affiliation::Opposer, cfg.n_opposers, "o"),
        (Affiliation::Unaffiliated, cfg.n_unaffiliated, "u"),
    ] {
        for i in 0..n {
            g.add_account(format!("{prefix}{i}"), g_, None);
        }
    }
    let mut bot_accounts = Vec::new();
    for (i, spec) in cfg.bots.iter().enumerate() {
        let id = format!("bot{i}");
        let a = g.add_account(id.clone(), spec.group, Some(spec));
        g.truth.bots.push(PlantedBot {
            account_id: id,
            group: spec.group,
            friends: spec.friends,
            followers: spec.followers,
            statuses: spec.statuses,
            age_days: spec.age_days,
        });
        bot_accounts.push(a);
    }
    g.partition()?;
    g.background()?;
    g.bots(&bot_accounts)?;
    g.cliques()?;
    g.bursts()?;
    g.out.flush()?;
    Ok(g.truth)
}

/// In-memory generation for tests and small scenarios.
pub fn generate_corpus(cfg: &ScenarioConfig) -> Result<(Corpus, GroundTruth)> {
    let mut buf = Vec::new();
    let truth = generate(cfg, &mut buf)?;
    let (corpus, report) =
        crate::corpus::parse_corpus(buf.as_slice(), format!("synthetic seed {}", cfg.seed))?;
    if report.skipped() > 0 {
        return Err(Error::Scenario(format!(
            "generated corpus had {} unparseable lines",
            report.skipped()
        )));
    }
    Ok((corpus, truth))
}

/// Writes the corpus and ground truth files atomically.
pub fn generate_files(
    cfg: &ScenarioConfig,
    corpus_path: &Path,
    truth_path: &Path,
) -> Result<GroundTruth> {
    let tmp = corpus_path.with_extension("jsonl.partial");
    let file = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let truth = generate(cfg, std::io::BufWriter::with_capacity(1 << 20, file))?;
    std::fs::rename(&tmp, corpus_path).map_err(|e| Error::io(corpus_path, e))?;
    write_atomic(truth_path, &serde_json::to_vec_pretty(&truth)?)?;
    Ok(truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::assign_phases;
    use crate::inauthenticity::classify_text;
    use crate::PhaseConfig;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            n_supporters: 40,
            n_opposers: 40,
            n_unaffiliated: 200,
            background_tweets: 3000,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_bytes() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        generate(&small(), &mut a).unwrap();
        generate(&small(), &mut b).unwrap();
        assert_eq!(a, b);
        let mut c = Vec::new();
        generate(&ScenarioConfig { seed: 7, ..small() }, &mut c).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn parses_cleanly_and_truth_matches() {
        let (corpus, truth) = generate_corpus(&small()).unwrap();
        assert_eq!(corpus.len() as u64, truth.tweets);
        let total: u64 = truth.pattern_counts.values().flat_map(|m| m.values()).sum();
        assert_eq!(total, truth.tweets);
        // every emitted text carries the label the generator assigned
        let mut seen: BTreeMap<Affiliation, BTreeMap<TextPattern, u64>> = BTreeMap::new();
        for t in corpus.tweets() {
            *seen
                .entry(truth.affiliations[t.author_id()])
                .or_default()
                .entry(classify_text(&t.text))
                .or_insert(0) += 1;
        }
        assert_eq!(seen, truth.pattern_counts);
        assert_eq!(truth.bursts[0].count, 26);
        assert!(truth.bursts[0].end - truth.bursts[0].start <= TimeDelta::minutes(9));
    }

    #[test]
    fn planted_cliques_stay_within_gamma() {
        let (corpus, truth) = generate_corpus(&small()).unwrap();
        let clique = &truth.cliques[0];
        assert_eq!(clique.members.len(), 10);
        for reason in &clique.reasons {
            let times: Vec<i64> = corpus
                .retweets_of(reason)
                .iter()
                .map(|&i| corpus.tweets()[i].created_at.timestamp())
                .collect();
            assert_eq!(times.len(), 10);
            let (lo, hi) = (times.iter().min().unwrap(), times.iter().max().unwrap());
            assert!(hi - lo < clique.gamma_true_secs);
        }
    }

    #[test]
    fn oversized_clique_is_rejected() {
        let cfg = ScenarioConfig {
            n_supporters: 5,
            ..small()
        };
        assert!(matches!(
            generate(&cfg, Vec::new()),
            Err(Error::Scenario(_))
        ));
    }

    #[test]
    fn partition_cross_fraction() {
        let cfg = ScenarioConfig {
            n_unaffiliated: 0,
            background_tweets: 0,
            cliques: vec![],
            bursts: vec![],
            bots: vec![],
            ..Default::default()
        };
        let truth = generate(&cfg, Vec::new()).unwrap();
        let n = 250.0;
        let expected_in = cfg.p_in * 2.0 * n * (n - 1.0);
        let expected_out = cfg.p_out * 2.0 * n * n;
        let expected = expected_out / (expected_in + expected_out);
        let measured = truth.partition_cross_edges as f64 / truth.partition_edges as f64;
        assert!(
            (measured - expected).abs() / expected <= 0.2,
            "{measured} vs {expected}"
        );
        assert!(
            (truth.partition_edges as f64 - expected_in - expected_out).abs() < 0.05 * expected_in
        );
    }

    #[test]
    fn behaviour_rates_near_configured() {
        let cfg = ScenarioConfig {
            n_supporters: 100,
            n_opposers: 100,
            n_unaffiliated: 500,
            background_tweets: 20_000,
            p_in: 0.0,
            p_out: 0.0,
            cliques: vec![],
            bursts: vec![],
            bots: vec![],
            ..Default::default()
        };
        let (corpus, truth) = generate_corpus(&cfg).unwrap();
        for g in Affiliation::ALL {
            let b = cfg.behaviour(g);
            let tweets: Vec<&TweetRecord> = corpus
                .tweets()
                .iter()
                .filter(|t| truth.affiliations[t.author_id()] == g)
                .collect();
            let n = tweets.len() as f64;
            let rt = tweets.iter().filter(|t| t.is_retweet()).count() as f64 / n;
            let se = (b.retweet_rate * (1.0 - b.retweet_rate) / n).sqrt();
            // early tweets have no pool to retweet from
            assert!((rt - b.retweet_rate).abs() < 3.0 * se + 0.01, "{g}: {rt}");
            // retweets carry the source's hashtags, so only authored text counts
            let authored: Vec<_> = tweets.iter().filter(|t| !t.is_retweet()).collect();
            let m = authored.len() as f64;
            let tags = authored.iter().map(|t| t.hashtags.len()).sum::<usize>() as f64 / m;
            let se = (b.hashtags_mean / m).sqrt();
            assert!((tags - b.hashtags_mean).abs() < 3.0 * se, "{g}: {tags}");
        }
    }

    #[test]
    fn phase_volume_shapes_activity() {
        let (corpus, _) = generate_corpus(&small()).unwrap();
        let phased = assign_phases(
            corpus,
            PhaseConfig::new(small().phase_boundaries, vec![]).unwrap(),
        )
        .unwrap();
        let counts = phased.phase_counts();
        assert_eq!(counts.len(), 3);
        assert!(counts[2].tweets > counts[1].tweets);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = small();
        let back: ScenarioConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let partial: ScenarioConfig =
            serde_json::from_str(r#"{"seed": 9, "n_unaffiliated": 10}"#).unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.n_supporters, 250);
    }
}
