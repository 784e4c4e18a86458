//! Text and CSV rendering shared by the commands.

use std::fmt::Write as _;

use verdict_loss_core::{ConfusionMatrix, EvalReport, McNemarResult, VerdictLabel};

/// Confusion matrix with gold rows, prediction columns and a `Total` row of
/// prediction counts.
pub fn confusion_table(cm: &ConfusionMatrix) -> String {
    let width = cm
        .counts()
        .iter()
        .flatten()
        .chain(cm.prediction_totals().iter())
        .map(|n| n.to_string().len())
        .max()
        .unwrap_or(1)
        .max(5);
    let mut s = String::new();
    let _ = writeln!(s, "{:<8}{:<4}{:>w$}", "", "", "Prediction", w = 3 * (width + 2));
    let _ = write!(s, "{:<8}{:<4}", "", "");
    for l in VerdictLabel::ALL {
        let _ = write!(s, "  {:>width$}", l.symbol());
    }
    s.push('\n');
    for gold in VerdictLabel::ALL {
        let head = if gold == VerdictLabel::Refuted { "Gold" } else { "" };
        let _ = write!(s, "{head:<8}{:<4}", gold.symbol());
        for pred in VerdictLabel::ALL {
            let _ = write!(s, "  {:>width$}", cm.get(gold, pred));
        }
        s.push('\n');
    }
    let _ = write!(s, "{:<8}{:<4}", "Total", "");
    for n in cm.prediction_totals() {
        let _ = write!(s, "  {n:>width$}");
    }
    s.push('\n');
    s
}

/// `LA=77.81` and, when scored, `FS=75.75`, one per line.
pub fn score_lines(report: &EvalReport) -> String {
    let mut s = format!("LA={}\n", report.label_accuracy_percent());
    if let Some(fs) = report.fever_score_percent() {
        let _ = writeln!(s, "FS={fs}");
    }
    s
}

/// Long-format CSV (`metric,value`) of an evaluation.
pub fn eval_csv(report: &EvalReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut row = |k: &str, v: String| w.write_record([k, v.as_str()]).expect("in-memory write");
    row("metric", "value".into());
    row("claims", report.total.to_string());
    row("label_accuracy", report.label_accuracy_percent());
    if let Some(fs) = report.fever_score_percent() {
        row("fever_score", fs);
    }
    for gold in VerdictLabel::ALL {
        for pred in VerdictLabel::ALL {
            row(&format!("gold_{}_pred_{}", gold.symbol(), pred.symbol()), report.confusion.get(gold, pred).to_string());
        }
    }
    for (l, n) in VerdictLabel::ALL.iter().zip(report.prediction_totals) {
        row(&format!("total_pred_{}", l.symbol()), n.to_string());
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

/// `100 * diff / denom` percentage points with an explicit sign and two
/// decimals; halves round away from zero.
pub fn signed_points(diff: i64, denom: u64) -> String {
    assert!(denom > 0, "percentage of an empty set");
    let (n, d) = (diff.unsigned_abs() as u128, denom as u128);
    let hundredths = (2 * n * 10_000 + d) / (2 * d);
    let sign = if hundredths == 0 { '+' } else if diff < 0 { '-' } else { '+' };
    format!("{sign}{}.{:02}", hundredths / 100, hundredths % 100)
}

/// p-value for tables; `*` marks significance at the 5% level.
pub fn p_value_cell(r: &McNemarResult) -> String {
    let star = if r.is_significant() { "*" } else { "" };
    if r.p_value < 1e-4 {
        format!("<0.0001{star}")
    } else {
        format!("{:.4}{star}", r.p_value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use verdict_loss_core::{mcnemar_from_counts, McNemarMethod};

    #[test]
    fn confusion_table_layout() {
        let cm = ConfusionMatrix::from_counts([[5976, 222, 468], [470, 5153, 1043], [1051, 1184, 4431]]);
        let expected = concat!(
            "                       Prediction\n",
            "                  S      R      N\n",
            "        S      5976    222    468\n",
            "Gold    R       470   5153   1043\n",
            "        N      1051   1184   4431\n",
            "Total          7497   6559   5942\n",
        );
        assert_eq!(confusion_table(&cm), expected);
    }

    #[test]
    fn signed_points_rounding() {
        assert_eq!(signed_points(0, 7), "+0.00");
        assert_eq!(signed_points(1, 19_998), "+0.01");
        assert_eq!(signed_points(-1, 19_998), "-0.01");
        assert_eq!(signed_points(-1, 20_000), "-0.01");
        assert_eq!(signed_points(1, 40_000), "+0.00");
        assert_eq!(signed_points(-1, 1_000_000), "+0.00");
        assert_eq!(signed_points(-50, 200), "-25.00");
    }

    #[test]
    fn p_value_cells() {
        assert_eq!(p_value_cell(&mcnemar_from_counts(5, 15, McNemarMethod::Auto)), "0.0414*");
        assert_eq!(p_value_cell(&mcnemar_from_counts(0, 0, McNemarMethod::Auto)), "1.0000");
        assert_eq!(p_value_cell(&mcnemar_from_counts(0, 200, McNemarMethod::Auto)), "<0.0001*");
    }
}
