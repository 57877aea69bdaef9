//! Flat `key=value` text records.
//!
//! One entry per line, keys in insertion order. Vectors are comma-separated.
//! Floats are written with Rust's shortest round-trip formatting, so
//! `parse(render(x))` reproduces every value bit for bit.

use std::fmt::{self, Display};

use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvRecord {
    entries: Vec<(String, String)>,
}

impl KvRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn push_list<T: Display>(&mut self, key: impl Into<String>, values: &[T]) -> &mut Self {
        let joined = values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        self.entries.push((key.into(), joined));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn get_f64_list(&self, key: &str) -> Option<Vec<f64>> {
        let v = self.get(key)?;
        if v.is_empty() {
            return Some(Vec::new());
        }
        v.split(',').map(|s| s.parse().ok()).collect()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    context: format!("record line {}", lineno + 1),
                    message: "expected key=value".into(),
                });
            };
            entries.push((k.to_string(), v.to_string()));
        }
        Ok(Self { entries })
    }
}

impl Display for KvRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn floats_round_trip(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..8)) {
            let mut r = KvRecord::new();
            r.push_list("v", &values);
            let back = KvRecord::parse(&r.to_string()).unwrap();
            let got = back.get_f64_list("v").unwrap();
            prop_assert_eq!(got.len(), values.len());
            for (a, b) in got.iter().zip(&values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn rejects_lines_without_separator() {
        assert!(KvRecord::parse("a=1\nbogus\n").is_err());
    }
}
