//! Report serialization: a JSON tree or a CSV table with one row per check.

use std::io::Write;

use fkm_core::{Bound, CheckRecord, Status};
use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::{RunError, RunOutcome};

fn bound_kind(b: &Bound) -> &'static str {
    match b {
        Bound::Below(_) => "below",
        Bound::Above(_) => "above",
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Inconclusive => "inconclusive",
        Status::Fail => "fail",
    }
}

fn record_json(rec: &CheckRecord) -> Value {
    json!({
        "name": rec.name,
        "anchor": rec.anchor,
        "residual": rec.value,
        "tolerance": rec.bound.threshold(),
        "bound": bound_kind(&rec.bound),
        "pass": rec.status != Status::Fail,
        "status": status_name(rec.status),
        "points": rec.points,
    })
}

/// The tree format. Keys keep insertion order; wall time is only included
/// when requested because it differs between runs.
pub fn render_tree(outcome: &RunOutcome) -> String {
    let report = &outcome.report;
    let mut root = Map::new();
    root.insert(
        "tool".into(),
        json!({ "name": "fkm", "version": env!("CARGO_PKG_VERSION") }),
    );
    root.insert(
        "config".into(),
        serde_json::to_value(&outcome.config).expect("config serializes"),
    );
    root.insert(
        "summary".into(),
        json!({
            "checks": report.checks.len(),
            "passed": report.count(Status::Pass),
            "failed": report.count(Status::Fail),
            "inconclusive": report.count(Status::Inconclusive),
        }),
    );
    root.insert(
        "checks".into(),
        Value::Array(report.checks.iter().map(record_json).collect()),
    );
    if outcome.config.timing {
        root.insert("timing".into(), json!({ "wall_seconds": outcome.wall_seconds }));
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("report serializes");
    text.push('\n');
    text
}

/// The table format: `name,anchor,residual,tolerance,pass`.
pub fn render_table(outcome: &RunOutcome) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "anchor", "residual", "tolerance", "pass"])
        .expect("in-memory write");
    for rec in &outcome.report.checks {
        w.write_record([
            rec.name.clone(),
            rec.anchor.clone(),
            format!("{:e}", rec.value),
            format!("{:e}", rec.bound.threshold()),
            (rec.status != Status::Fail).to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn render(outcome: &RunOutcome, format: Format) -> String {
    match format {
        Format::Tree => render_tree(outcome),
        Format::Table => render_table(outcome),
    }
}

/// Writes the report to the configured path, or to stdout.
pub fn emit_report(outcome: &RunOutcome) -> Result<(), RunError> {
    let text = render(outcome, outcome.config.format);
    match &outcome.config.output {
        Some(path) => std::fs::write(path, text).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| RunError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{RunConfig, Suite};
    use fkm_core::VerificationReport;

    fn outcome() -> RunOutcome {
        let mut report = VerificationReport::new();
        report.below("a/x", "with, comma", 1e-13, 1e-12);
        report.check("a/y", "frac", 0.5, Bound::Above(0.9));
        RunOutcome {
            config: RunConfig::new(Suite::Clifford),
            report,
            wall_seconds: 1.5,
        }
    }

    #[test]
    fn table_has_one_row_per_check() {
        let table = render_table(&outcome());
        let mut rd = csv::Reader::from_reader(table.as_bytes());
        let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(&rows[0][1], "with, comma");
        assert_eq!(&rows[0][4], "true");
        assert_eq!(&rows[1][4], "false");
    }

    #[test]
    fn tree_has_stable_keys_and_no_timing_by_default() {
        let text = render_tree(&outcome());
        let v: Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["tool", "config", "summary", "checks"]);
        assert_eq!(v["summary"]["failed"], 1);
        assert_eq!(v["config"]["suite"], "clifford");
        assert!(v["config"].get("workers").is_none());
        let mut timed = outcome();
        timed.config.timing = true;
        assert!(render_tree(&timed).contains("wall_seconds"));
    }
}
