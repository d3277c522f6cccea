use std::fmt::Write;
use std::path::Path;

use super::{
    category_dir, read_category_summary, read_metrics_table, read_shap_summary, METRICS_TABLE_FILE,
    SHAP_SUMMARY_FILE, SUMMARY_FILE,
};
use crate::error::{Error, Result};
use crate::ingest::Category;

/// Column titles of the metrics table, in order.
pub const REPORT_COLUMNS: [&str; 5] = ["Category", "Ratio of Impacts", "Accuracy", "Recall", "F2 Score"];

const TOP_FEATURES: usize = 5;

/// Aligned-text report of the metrics table and SHAP feature rankings.
///
/// The ratio of impacts is recomputed as positives / total from the category
/// summary written by `prepare`.
pub fn render_report(out: &Path, only: Option<Category>) -> Result<String> {
    let required = [SUMMARY_FILE, METRICS_TABLE_FILE];
    let missing: Vec<&str> = required.iter().copied().filter(|f| !out.join(f).exists()).collect();
    if !missing.is_empty() {
        return Err(Error::io(
            out,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!(
                    "missing {}; a report needs {} (run `run-all`, or `prepare` then `train` and `evaluate`)",
                    missing.join(", "),
                    required.join(" and ")
                ),
            ),
        ));
    }
    let stats = read_category_summary(&out.join(SUMMARY_FILE))?;
    let rows = read_metrics_table(&out.join(METRICS_TABLE_FILE))?;
    let rows: Vec<_> = rows.into_iter().filter(|r| only.is_none_or(|c| c == r.category)).collect();

    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            let ratio = stats
                .iter()
                .find(|s| s.category == r.category)
                .map(|s| s.ratio())
                .unwrap_or(r.ratio_of_impacts);
            [
                r.category.title().to_string(),
                format!("{ratio:.2}"),
                format!("{:.2}", r.accuracy),
                format!("{:.2}", r.recall),
                format!("{:.2}", r.f2_score),
            ]
        })
        .collect();
    let mut widths = REPORT_COLUMNS.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }

    let mut s = String::new();
    let line = |s: &mut String, row: [&str; 5]| {
        let _ = write!(s, "{:<w$}", row[0], w = widths[0]);
        for (c, w) in row.iter().zip(widths).skip(1) {
            let _ = write!(s, "  {c:>w$}");
        }
        s.push('\n');
    };
    line(&mut s, REPORT_COLUMNS);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut s, std::array::from_fn(|i| rule[i].as_str()));
    for row in &cells {
        line(&mut s, std::array::from_fn(|i| row[i].as_str()));
    }

    let dropped: Vec<String> = stats
        .iter()
        .filter(|st| !st.retained)
        .map(|st| format!("{} ({:.2})", st.category.title(), st.ratio()))
        .collect();
    if !dropped.is_empty() && only.is_none() {
        let _ = writeln!(s, "\nDropped for too few impacts: {}", dropped.join(", "));
    }

    for r in &rows {
        let path = category_dir(out, r.category).join(SHAP_SUMMARY_FILE);
        if !path.exists() {
            continue;
        }
        let ranking = read_shap_summary(&path)?;
        let _ = writeln!(s, "\n{}: features by mean |SHAP|", r.category.title());
        let name_w = ranking.iter().take(TOP_FEATURES).map(|f| f.0.len()).max().unwrap_or(0);
        for (i, (name, v)) in ranking.iter().take(TOP_FEATURES).enumerate() {
            let _ = writeln!(s, "  {:>2}. {name:<name_w$}  {v:.4}", i + 1);
        }
    }
    Ok(s)
}
