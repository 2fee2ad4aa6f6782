//! Small builders for hand-made corpora.

use chrono::{DateTime, TimeDelta, TimeZone, Utc};

use crate::corpus::{AccountSnapshot, Corpus, TweetRecord, TweetRef};

/// 2020-01-01T00:00:00Z, the anchor used by fixture timestamps.
pub fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()
}

pub fn at(secs: i64) -> DateTime<Utc> {
    epoch() + TimeDelta::seconds(secs)
}

pub fn snapshot(account_id: &str) -> AccountSnapshot {
    AccountSnapshot {
        account_id: account_id.to_owned(),
        screen_name: format!("user_{account_id}"),
        location_text: None,
        friends_count: 100,
        followers_count: 100,
        statuses_count: 1000,
        account_created_at: epoch() - TimeDelta::days(1000),
    }
}

#[derive(Debug, Clone)]
pub struct TweetBuilder(TweetRecord);

impl TweetBuilder {
    pub fn new(tweet_id: &str, author: &str, secs: i64) -> Self {
        TweetBuilder(TweetRecord {
            tweet_id: tweet_id.to_owned(),
            created_at: at(secs),
            author: snapshot(author),
            text: format!("tweet {tweet_id}"),
            hashtags: Vec::new(),
            mentions: Vec::new(),
            urls: Vec::new(),
            retweet_of: None,
            reply_to: None,
            quote_of: None,
            lang: Some("en".into()),
        })
    }

    pub fn at(mut self, t: DateTime<Utc>) -> Self {
        self.0.created_at = t;
        self
    }

    pub fn text(mut self, text: &str) -> Self {
        self.0.text = text.to_owned();
        self
    }

    pub fn hashtags(mut self, tags: &[&str]) -> Self {
        self.0.hashtags = tags.iter().map(|t| t.to_lowercase()).collect();
        self
    }

    pub fn mentions(mut self, ids: &[&str]) -> Self {
        self.0.mentions = ids.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn urls(mut self, urls: &[&str]) -> Self {
        self.0.urls = urls.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn retweet(mut self, tweet_id: &str, account_id: &str) -> Self {
        self.0.retweet_of = Some(TweetRef {
            tweet_id: tweet_id.into(),
            account_id: account_id.into(),
        });
        self
    }

    pub fn reply(mut self, tweet_id: &str, account_id: &str) -> Self {
        self.0.reply_to = Some(TweetRef {
            tweet_id: tweet_id.into(),
            account_id: account_id.into(),
        });
        self
    }

    pub fn quote(mut self, tweet_id: &str, account_id: &str) -> Self {
        self.0.quote_of = Some(TweetRef {
            tweet_id: tweet_id.into(),
            account_id: account_id.into(),
        });
        self
    }

    pub fn location(mut self, loc: &str) -> Self {
        self.0.author.location_text = Some(loc.to_owned());
        self
    }

    pub fn counts(mut self, friends: u64, followers: u64, statuses: u64) -> Self {
        self.0.author.friends_count = friends;
        self.0.author.followers_count = followers;
        self.0.author.statuses_count = statuses;
        self
    }

    pub fn created(mut self, t: DateTime<Utc>) -> Self {
        self.0.author.account_created_at = t;
        self
    }

    pub fn build(self) -> TweetRecord {
        self.0
    }
}

pub fn corpus(tweets: impl IntoIterator<Item = TweetBuilder>) -> Corpus {
    Corpus::from_tweets(
        tweets.into_iter().map(TweetBuilder::build).collect(),
        "fixture",
    )
    .0
}
