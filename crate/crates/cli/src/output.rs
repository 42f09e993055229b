//! Result rows and their CSV/JSON emission.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::Format;

pub const CSV_HEADER: [&str; 7] = ["campaign", "scheme", "family", "epsilon", "seed", "horizon", "throughput"];

/// One measured throughput together with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub campaign: String,
    pub scheme: String,
    pub family: String,
    pub epsilon: f64,
    pub seed: u64,
    /// Simulated slots, or 0 for exact model evaluations.
    pub horizon: usize,
    /// Mbps.
    pub throughput: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

impl ResultRow {
    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.insert(key.to_string(), value.to_string());
        self
    }
}

/// Order rows by scheme, then epsilon, then seed (family breaks the
/// remaining ties).
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.scheme
            .cmp(&b.scheme)
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.seed.cmp(&b.seed))
            .then(a.family.cmp(&b.family))
    });
}

pub fn to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.campaign.clone(),
            r.scheme.clone(),
            r.family.clone(),
            r.epsilon.to_string(),
            r.seed.to_string(),
            r.horizon.to_string(),
            r.throughput.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn to_json(rows: &[ResultRow]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(rows)?;
    s.push('\n');
    Ok(s)
}

pub fn render(rows: &[ResultRow], format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows),
    }
}

/// Write `rows` to `path`, or to stdout when `path` is `None`.
pub fn emit_results(rows: &[ResultRow], format: Format, path: Option<&Path>) -> Result<()> {
    if rows.is_empty() {
        bail!("no result rows to write");
    }
    let text = render(rows, format)?;
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scheme: &str, eps: f64, seed: u64) -> ResultRow {
        ResultRow {
            campaign: "sweep".into(),
            scheme: scheme.into(),
            family: "type2".into(),
            epsilon: eps,
            seed,
            horizon: 2000,
            throughput: 2.25,
            extra: BTreeMap::new(),
        }
    }

    #[test]
    fn one_row_gives_two_lines() {
        let csv = to_csv(&[row("static", 1.0, 3)]).unwrap();
        assert_eq!(csv, "campaign,scheme,family,epsilon,seed,horizon,throughput\nsweep,static,type2,1,3,2000,2.25\n");
    }

    #[test]
    fn json_round_trip() {
        let rows = vec![row("mras", 2.0, 1).with("iterations", 17), row("random", 4.0, 0)];
        let back: Vec<ResultRow> = serde_json::from_str(&to_json(&rows).unwrap()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn sorting_is_by_scheme_epsilon_seed() {
        let mut rows = vec![row("static", 2.0, 0), row("mras", 4.0, 1), row("mras", 2.0, 5), row("mras", 2.0, 1)];
        sort_rows(&mut rows);
        let keys: Vec<(String, f64, u64)> = rows.iter().map(|r| (r.scheme.clone(), r.epsilon, r.seed)).collect();
        assert_eq!(
            keys,
            vec![("mras".into(), 2.0, 1), ("mras".into(), 2.0, 5), ("mras".into(), 4.0, 1), ("static".into(), 2.0, 0)]
        );
    }

    #[test]
    fn empty_rows_are_an_error() {
        assert!(emit_results(&[], Format::Csv, None).is_err());
    }
}
