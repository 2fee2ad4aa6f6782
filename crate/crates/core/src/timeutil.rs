use chrono::{DateTime, TimeDelta, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Parses `600s`, `10min`, `1day`, `9m 30s`, or a bare number of seconds.
pub fn parse_duration(text: &str) -> Result<TimeDelta> {
    let text = text.trim();
    if let Ok(secs) = text.parse::<i64>() {
        return Ok(TimeDelta::seconds(secs));
    }
    let std = humantime::parse_duration(text)
        .map_err(|e| Error::Config(format!("invalid duration `{text}`: {e}")))?;
    TimeDelta::from_std(std)
        .map_err(|e| Error::Config(format!("duration `{text}` out of range: {e}")))
}

pub fn format_duration(d: TimeDelta) -> String {
    format!("{}s", d.num_seconds())
}

/// Floor division of an instant into buckets anchored at `origin`.
pub fn bucket_index(origin: DateTime<Utc>, t: DateTime<Utc>, bucket: TimeDelta) -> i64 {
    let ms = (t - origin).num_milliseconds();
    ms.div_euclid(bucket.num_milliseconds())
}

/// Serde adapter: durations travel as strings like `"600s"` or as integer seconds.
pub mod duration_serde {
    use super::*;

    pub fn serialize<S: Serializer>(d: &TimeDelta, s: S) -> std::result::Result<S::Ok, S::Error> {
        format_duration(*d).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<TimeDelta, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Secs(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Secs(s) => Ok(TimeDelta::seconds(s)),
            Repr::Text(t) => parse_duration(&t).map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn durations() {
        assert_eq!(parse_duration("600s").unwrap(), TimeDelta::seconds(600));
        assert_eq!(parse_duration("9min").unwrap(), TimeDelta::minutes(9));
        assert_eq!(parse_duration("1day").unwrap(), TimeDelta::days(1));
        assert_eq!(parse_duration("45").unwrap(), TimeDelta::seconds(45));
        assert!(parse_duration("soon").is_err());
    }

    #[test]
    fn buckets_floor_before_origin() {
        let o = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let b = TimeDelta::seconds(60);
        assert_eq!(bucket_index(o, o + TimeDelta::seconds(59), b), 0);
        assert_eq!(bucket_index(o, o + TimeDelta::seconds(60), b), 1);
        assert_eq!(bucket_index(o, o - TimeDelta::seconds(1), b), -1);
    }
}
