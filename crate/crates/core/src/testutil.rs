use chrono::{DateTime, Utc};

use crate::corpus::TweetRecord;
pub use crate::fixture::{at, corpus, TweetBuilder};

pub fn tweet(id: &str, user: &str, secs: i64) -> TweetRecord {
    TweetBuilder::new(id, user, secs).build()
}

pub trait At {
    fn at(self, t: DateTime<Utc>) -> Self;
}

impl At for TweetRecord {
    fn at(mut self, t: DateTime<Utc>) -> Self {
        self.created_at = t;
        self
    }
}
