//! Result tables rendered as CSV and aligned markdown.
//!
//! Both renderers format every number with four decimal places so the
//! same run always produces byte-identical output.

use crate::classification::ClassificationReport;

/// One classifier's row in the accuracy table.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub model: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl AccuracyRow {
    pub fn from_report(model: impl Into<String>, report: &ClassificationReport) -> Self {
        Self {
            model: model.into(),
            accuracy: report.accuracy,
            precision: report.macro_precision,
            recall: report.macro_recall,
            f1: report.macro_f1,
        }
    }
}

/// One embedding's row in the cluster-quality table.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteRow {
    pub model: String,
    pub kmeans: f64,
    pub gmm: f64,
}

const ACCURACY_HEADER: [&str; 5] = ["Model", "Accuracy", "Precision", "Recall", "F1-score"];
const SILHOUETTE_HEADER: [&str; 3] = ["Model", "K-Means", "GMM"];

pub fn accuracy_table_csv(rows: &[AccuracyRow]) -> String {
    let mut out = ACCURACY_HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{:.4}\n",
            csv_field(&r.model),
            r.accuracy,
            r.precision,
            r.recall,
            r.f1
        ));
    }
    out
}

pub fn accuracy_table_markdown(rows: &[AccuracyRow]) -> String {
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.model.clone(),
                format!("{:.4}", r.accuracy),
                format!("{:.4}", r.precision),
                format!("{:.4}", r.recall),
                format!("{:.4}", r.f1),
            ]
        })
        .collect();
    render_markdown(&ACCURACY_HEADER, &cells)
}

pub fn silhouette_table_csv(rows: &[SilhouetteRow]) -> String {
    let mut out = SILHOUETTE_HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:.4},{:.4}\n",
            csv_field(&r.model),
            r.kmeans,
            r.gmm
        ));
    }
    out
}

pub fn silhouette_table_markdown(rows: &[SilhouetteRow]) -> String {
    let cells: Vec<[String; 3]> = rows
        .iter()
        .map(|r| {
            [
                r.model.clone(),
                format!("{:.4}", r.kmeans),
                format!("{:.4}", r.gmm),
            ]
        })
        .collect();
    render_markdown(&SILHOUETTE_HEADER, &cells)
}

/// Quote a CSV field only when it needs it.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_markdown<const W: usize>(header: &[&str; W], rows: &[[String; W]]) -> String {
    let mut widths = [0usize; W];
    for (w, h) in widths.iter_mut().zip(header.iter()) {
        *w = h.len();
    }
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    out.push('|');
    for (h, w) in header.iter().zip(widths) {
        out.push_str(&format!(" {h:<w$} |"));
    }
    out.push('\n');
    out.push('|');
    for w in widths {
        out.push_str(&format!("{}|", "-".repeat(w + 2)));
    }
    out.push('\n');
    for row in rows {
        out.push('|');
        for (cell, w) in row.iter().zip(widths) {
            out.push_str(&format!(" {cell:<w$} |"));
        }
        out.push('\n');
    }
    out
}
