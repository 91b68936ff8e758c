use serde::{Deserialize, Serialize};

use super::{DetectionMetrics, FieldMetrics, SchemaMetrics};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Row label, typically the model id.
    pub label: String,
    pub detection: DetectionMetrics,
    pub fields: FieldMetrics,
    pub schema: SchemaMetrics,
}

/// Two-decimal percentage with a trailing ".00" dropped: `0.9612` gives
/// `96.12%`, `1.0` gives `100%`, an undefined value gives `n/a`.
pub fn format_percent(value: Option<f64>) -> String {
    match value {
        None => "n/a".into(),
        Some(v) => {
            let text = format!("{:.2}", v * 100.0);
            format!("{}%", text.strip_suffix(".00").unwrap_or(&text))
        }
    }
}

const COLUMNS: [&str; 9] = [
    "Model",
    "Accuracy",
    "Recall",
    "Precision",
    "F1-Score",
    "Number of Lanes",
    "Driving Lane Status",
    "Cause Code",
    "Message Schema",
];

fn render_text(report: &EvalReport) -> String {
    let d = &report.detection;
    let f = &report.fields;
    let s = &report.schema;
    let cells = [
        report.label.clone(),
        format_percent(d.accuracy),
        format_percent(d.recall),
        format_percent(d.precision),
        format_percent(d.f1),
        format_percent(f.lanes_accuracy),
        format_percent(f.lane_status_accuracy),
        format_percent(f.cause_accuracy),
        format_percent(s.accuracy),
    ];
    let widths: Vec<usize> = COLUMNS.iter().zip(&cells).map(|(h, c)| h.len().max(c.len())).collect();
    let row = |items: &mut dyn Iterator<Item = &str>| {
        let body: Vec<String> = items.zip(&widths).map(|(c, w)| format!(" {c:<w$} ")).collect();
        format!("|{}|\n", body.join("|"))
    };

    let mut out = format!("Pipeline evaluation over {} images\n\n", d.total());
    out.push_str(&row(&mut COLUMNS.iter().copied()));
    out.push_str(&format!(
        "|{}|\n",
        widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("|")
    ));
    out.push_str(&row(&mut cells.iter().map(String::as_str)));
    out.push('\n');
    out.push_str(&format!(
        "detection: tp={} fp={} tn={} fn={}\n",
        d.tp, d.fp, d.tn, d.fn_
    ));
    out.push_str(&format!(
        "fields (denominator {}): lanes={} lane_status={} cause={}\n",
        f.denominator, f.lanes_correct, f.lane_status_correct, f.cause_correct
    ));
    out.push_str(&format!("schema: {}/{} valid\n", s.valid_count, s.total_generated));
    for (id, reason) in &s.invalid {
        out.push_str(&format!("  invalid {id}: {reason}\n"));
    }
    out
}

/// Renders the metric suite as a text table or as JSON with sorted keys.
pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(report),
        ReportFormat::Json => {
            // serde_json::Value objects are BTreeMap-backed, so keys come out sorted
            let value = serde_json::to_value(report).expect("report serializes");
            let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
            text.push('\n');
            text
        }
    }
}
