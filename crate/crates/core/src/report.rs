//! Long-format CSV tables with `#` comment headers.

use std::fmt::Display;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            comments: Vec::new(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for c in &self.comments {
            out.extend_from_slice(b"# ");
            out.extend_from_slice(c.as_bytes());
            out.push(b'\n');
        }
        let mut w = csv::WriterBuilder::new().from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Stream(e.into_error()))
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self> {
        let mut comments = Vec::new();
        let mut rest = bytes;
        while rest.starts_with(b"#") {
            let end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
            let line = String::from_utf8_lossy(&rest[1..end]);
            comments.push(line.strip_prefix(' ').unwrap_or(&line).to_owned());
            rest = &rest[(end + 1).min(rest.len())..];
        }
        let mut r = csv::ReaderBuilder::new().from_reader(rest);
        let columns = r.headers()?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(str::to_owned).collect());
        }
        Ok(Table {
            comments,
            columns,
            rows,
        })
    }
}

/// Undefined values serialize as empty fields, never as zero.
pub fn opt<T: Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `num / den`, or `None` when the denominator is zero.
pub fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_comments_and_quotes() {
        let mut t = Table::new(&["a", "b"])
            .comment("a: first")
            .comment("b: second");
        t.push(["x,y", ""]);
        t.push(["\"q\"", "1.5"]);
        let bytes = t.to_csv().unwrap();
        let back = Table::from_csv(&bytes).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_csv().unwrap(), bytes);
    }

    #[test]
    fn headers_only() {
        let t = Table::new(&["x"]);
        assert_eq!(t.to_csv().unwrap(), b"x\n");
        assert_eq!(Table::from_csv(b"x\n").unwrap(), t);
    }

    #[test]
    fn undefined_ratio_is_empty() {
        assert_eq!(opt(ratio(1, 0)), "");
        assert_eq!(opt(ratio(1, 4)), "0.25");
    }
}
