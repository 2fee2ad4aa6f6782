use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Affiliation {
    Supporter,
    Opposer,
    Unaffiliated,
}

impl Affiliation {
    pub const ALL: [Affiliation; 3] = [
        Affiliation::Supporter,
        Affiliation::Opposer,
        Affiliation::Unaffiliated,
    ];
    pub const LABELED: [Affiliation; 2] = [Affiliation::Supporter, Affiliation::Opposer];

    pub fn is_labeled(self) -> bool {
        !matches!(self, Affiliation::Unaffiliated)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Affiliation::Supporter => "Supporter",
            Affiliation::Opposer => "Opposer",
            Affiliation::Unaffiliated => "Unaffiliated",
        }
    }
}

impl fmt::Display for Affiliation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Affiliation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "supporter" | "supporters" => Ok(Affiliation::Supporter),
            "opposer" | "opposers" => Ok(Affiliation::Opposer),
            "unaffiliated" => Ok(Affiliation::Unaffiliated),
            other => Err(Error::Config(format!("unknown affiliation `{other}`"))),
        }
    }
}

/// Account → affiliation. Accounts not present are Unaffiliated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffiliationMap {
    labels: BTreeMap<String, Affiliation>,
    pub provenance: String,
}

impl AffiliationMap {
    pub fn new(provenance: impl Into<String>) -> Self {
        AffiliationMap {
            labels: BTreeMap::new(),
            provenance: provenance.into(),
        }
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Affiliation)>,
        S: Into<String>,
    {
        let mut map = AffiliationMap::default();
        for (id, a) in pairs {
            map.insert(id, a);
        }
        map
    }

    pub fn insert(&mut self, account_id: impl Into<String>, affiliation: Affiliation) {
        self.labels.insert(account_id.into(), affiliation);
    }

    pub fn get(&self, account_id: &str) -> Affiliation {
        self.labels
            .get(account_id)
            .copied()
            .unwrap_or(Affiliation::Unaffiliated)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Affiliation)> {
        self.labels.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn members(&self, group: Affiliation) -> impl Iterator<Item = &str> {
        self.iter()
            .filter(move |(_, a)| *a == group)
            .map(|(id, _)| id)
    }

    /// Group sizes indexed by [`Affiliation::index`].
    pub fn group_sizes(&self) -> [usize; 3] {
        let mut sizes = [0; 3];
        for a in self.labels.values() {
            sizes[a.index()] += 1;
        }
        sizes
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["account_id", "affiliation"])?;
        for (id, a) in self.iter() {
            w.write_record([id, a.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R, provenance: impl Into<String>) -> Result<Self> {
        let mut map = AffiliationMap::new(provenance);
        let mut r = csv::Reader::from_reader(input);
        for row in r.records() {
            let row = row?;
            let (Some(id), Some(label)) = (row.get(0), row.get(1)) else {
                return Err(Error::Config(
                    "affiliation row needs account_id,affiliation".into(),
                ));
            };
            map.insert(id, label.parse()?);
        }
        Ok(map)
    }
}
