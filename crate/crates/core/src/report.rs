//! Report rendering: JSON at full precision, CSV with one row per group and a
//! markdown table rounded to three decimals.

use std::fmt::Write as _;

use crate::metrics::{EvalReport, GroupScores};

/// Row labels shared by every group of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportLabels {
    pub opinion_extraction: bool,
    pub model: String,
}

impl ReportLabels {
    fn oe(&self) -> &'static str {
        if self.opinion_extraction {
            "yes"
        } else {
            "no"
        }
    }
}

fn columns(s: &GroupScores) -> [f64; 7] {
    [
        s.s_sentiment,
        s.rouge1.f1,
        s.rouge1.precision,
        s.rouge1.recall,
        s.rouge2.f1,
        s.rouge2.precision,
        s.rouge2.recall,
    ]
}

pub fn to_json(report: &EvalReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn to_csv(report: &EvalReport, labels: &ReportLabels) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "type", "oe", "model", "s_sentiment", "r1_f1", "r1_p", "r1_r", "r2_f1", "r2_p", "r2_r",
    ])?;
    for (key, group) in &report.per_group {
        let mut row = vec![key.clone(), labels.oe().to_string(), labels.model.clone()];
        row.extend(columns(&group.scores).iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_markdown(report: &EvalReport, labels: &ReportLabels) -> String {
    let mut out = String::new();
    out.push_str("| Type | OE | model | S | R1 F1 | R1 P | R1 R | R2 F1 | R2 P | R2 R |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    let mut row = |name: &str, scores: &GroupScores| {
        let _ = write!(out, "| {name} | {} | {} |", labels.oe(), labels.model);
        for v in columns(scores) {
            let _ = write!(out, " {v:.3} |");
        }
        out.push('\n');
    };
    for (key, group) in &report.per_group {
        row(key, &group.scores);
    }
    row("aggregate", &report.aggregate);
    out
}
