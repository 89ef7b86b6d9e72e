//! Classification metrics: confusion matrices, per-class
//! precision/recall/F1, accuracy, macro-F1, and fold aggregation.
//! Zero-denominator cells report 0 with a `degenerate` flag instead of
//! NaN, because cross-corpus confusions genuinely produce empty
//! prediction columns.

use super::EvalError;
use crate::raster::Raster;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// true when any of the three ratios had a zero denominator
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldStats {
    pub mean: f64,
    pub stddev: f64,
    pub max: f64,
    pub accuracies: Vec<f64>,
}

impl FoldStats {
    pub fn from_accuracies(accuracies: Vec<f64>) -> FoldStats {
        let n = accuracies.len().max(1) as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let var = accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        let max = accuracies.iter().cloned().fold(0.0f64, f64::max);
        FoldStats {
            mean,
            stddev: var.sqrt(),
            max,
            accuracies,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub experiment: String,
    pub config_digest: String,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// rows = true label, cols = predicted label
    pub confusion: Vec<Vec<usize>>,
    pub labels: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fold_stats: Option<FoldStats>,
}

pub fn confusion_matrix(truths: &[usize], preds: &[usize], classes: usize) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0usize; classes]; classes];
    for (&t, &p) in truths.iter().zip(preds) {
        m[t][p] += 1;
    }
    m
}

/// Derive the full report from a confusion matrix; also the shared
/// path for fold aggregation so that "aggregate = metrics of summed
/// confusions" holds by construction.
pub fn report_from_confusion(confusion: Vec<Vec<usize>>, labels: &[String]) -> EvalReport {
    let k = labels.len();
    assert_eq!(confusion.len(), k, "one confusion row per label");
    for row in &confusion {
        assert_eq!(row.len(), k, "square confusion matrix");
    }
    let total: usize = confusion.iter().flatten().sum();
    let trace: usize = (0..k).map(|i| confusion[i][i]).sum();

    let mut per_class = Vec::with_capacity(k);
    for i in 0..k {
        let tp = confusion[i][i];
        let support: usize = confusion[i].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[i]).sum();
        let mut degenerate = false;
        let precision = if predicted == 0 {
            degenerate = true;
            0.0
        } else {
            tp as f64 / predicted as f64
        };
        let recall = if support == 0 {
            degenerate = true;
            0.0
        } else {
            tp as f64 / support as f64
        };
        let f1 = if precision + recall == 0.0 {
            degenerate = true;
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics {
            label: labels[i].clone(),
            precision,
            recall,
            f1,
            support,
            degenerate,
        });
    }
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / k.max(1) as f64;
    EvalReport {
        experiment: String::new(),
        config_digest: String::new(),
        accuracy: if total == 0 {
            0.0
        } else {
            trace as f64 / total as f64
        },
        macro_f1,
        per_class,
        confusion,
        labels: labels.to_vec(),
        fold_stats: None,
    }
}

/// Metrics from paired label sequences over a fixed label set.
pub fn compute_metrics(
    truths: &[usize],
    preds: &[usize],
    labels: &[String],
) -> Result<EvalReport, EvalError> {
    if truths.len() != preds.len() {
        return Err(EvalError::LengthMismatch {
            truths: truths.len(),
            preds: preds.len(),
        });
    }
    let k = labels.len();
    for &v in truths.iter().chain(preds) {
        assert!(v < k, "label index {v} outside the {k}-label set");
    }
    Ok(report_from_confusion(confusion_matrix(truths, preds, k), labels))
}

/// Elementwise sum of per-fold confusions plus fold statistics.
pub fn aggregate_reports(folds: &[EvalReport], labels: &[String]) -> EvalReport {
    let k = labels.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for fold in folds {
        for (acc_row, row) in confusion.iter_mut().zip(&fold.confusion) {
            for (a, v) in acc_row.iter_mut().zip(row) {
                *a += v;
            }
        }
    }
    let mut report = report_from_confusion(confusion, labels);
    report.fold_stats = Some(FoldStats::from_accuracies(
        folds.iter().map(|f| f.accuracy).collect(),
    ));
    report
}

/// Human-readable table in the usual classification-report layout.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let width = report
        .labels
        .iter()
        .map(|l| l.len())
        .max()
        .unwrap_or(5)
        .max(5);
    out.push_str(&format!(
        "{:width$}  precision  recall  f1-score  support\n",
        "label"
    ));
    for c in &report.per_class {
        out.push_str(&format!(
            "{:width$}  {:>9.3}  {:>6.3}  {:>8.3}  {:>7}{}\n",
            c.label,
            c.precision,
            c.recall,
            c.f1,
            c.support,
            if c.degenerate { "  (degenerate)" } else { "" },
        ));
    }
    out.push_str(&format!(
        "\naccuracy {:.4}  macro-f1 {:.4}\n",
        report.accuracy, report.macro_f1
    ));
    if let Some(fs) = &report.fold_stats {
        out.push_str(&format!(
            "folds: mean {:.4}  stddev {:.4}  max {:.4}\n",
            fs.mean, fs.stddev, fs.max
        ));
    }
    out
}

/// Confusion matrix as CSV with a header row of predicted labels.
pub fn confusion_csv(report: &EvalReport) -> String {
    let mut out = String::from("true\\pred");
    for l in &report.labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (label, row) in report.labels.iter().zip(&report.confusion) {
        out.push_str(label);
        for v in row {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

/// Grayscale heatmap of a confusion matrix, `cell` pixels per entry,
/// normalized by the largest count.
pub fn confusion_heatmap(confusion: &[Vec<usize>], cell: usize) -> Result<Raster, crate::raster::RasterError> {
    assert!(cell > 0);
    let k = confusion.len();
    let max = confusion.iter().flatten().copied().max().unwrap_or(0).max(1) as f32;
    let mut img = Raster::new(k * cell, k * cell)?;
    for (i, row) in confusion.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let shade = v as f32 / max;
            for dy in 0..cell {
                for dx in 0..cell {
                    img.set(i * cell + dy, j * cell + dx, [shade, shade, shade]);
                }
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn three_decimal_triple_from_constructed_counts() {
        // build integer counts whose precision and recall are exactly
        // 0.732 and 0.809, then check the implied f1 rounds to 0.769
        let (pn, pd) = (183usize, 250usize); // 732/1000 reduced
        let (rn, rd) = (809usize, 1000usize);
        let tp = pn * rn;
        let fp = rn * pd - tp;
        let fn_ = pn * rd - tp;
        let mut truths = vec![0usize; tp + fn_];
        truths.extend(vec![1usize; fp + 1]);
        let mut preds = vec![0usize; tp];
        preds.extend(vec![1usize; fn_]);
        preds.extend(vec![0usize; fp]);
        preds.push(1);
        let report = compute_metrics(&truths, &preds, &names(2)).unwrap();
        let c0 = &report.per_class[0];
        assert!((c0.precision - 0.732).abs() < 1e-12);
        assert!((c0.recall - 0.809).abs() < 1e-12);
        assert_eq!((c0.f1 * 1000.0).round() as i64, 769);
    }

    #[test]
    fn hand_counted_two_class_matrix() {
        let report = report_from_confusion(vec![vec![2, 0], vec![1, 1]], &names(2));
        assert_eq!(report.accuracy, 0.75);
        assert!((report.per_class[0].precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(report.per_class[0].recall, 1.0);
        assert_eq!(report.per_class[1].recall, 0.5);
        assert_eq!(report.per_class[0].support, 2);
    }

    #[test]
    fn perfect_predictions_score_one_everywhere() {
        let truths = vec![0, 1, 2, 1, 0, 2];
        let report = compute_metrics(&truths, &truths, &names(3)).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_f1, 1.0);
        for (i, c) in report.per_class.iter().enumerate() {
            assert_eq!(c.f1, 1.0);
            assert!(!c.degenerate);
            assert_eq!(report.confusion[i][i], c.support);
        }
    }

    #[test]
    fn zero_denominators_flag_degenerate() {
        // class 2 never appears and is never predicted
        let report = compute_metrics(&[0, 1], &[0, 0], &names(3)).unwrap();
        let c2 = &report.per_class[2];
        assert!(c2.degenerate);
        assert_eq!(c2.f1, 0.0);
        // class 1 exists but is never predicted
        let c1 = &report.per_class[1];
        assert!(c1.degenerate);
        assert_eq!(c1.precision, 0.0);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(matches!(
            compute_metrics(&[0, 1], &[0], &names(2)),
            Err(EvalError::LengthMismatch { truths: 2, preds: 1 })
        ));
    }

    #[test]
    fn constant_predictor_on_balanced_data_scores_one_over_k() {
        let k = 7;
        let truths: Vec<usize> = (0..70).map(|i| i % k).collect();
        let preds = vec![0usize; 70];
        let report = compute_metrics(&truths, &preds, &names(k)).unwrap();
        assert!((report.accuracy - 1.0 / k as f64).abs() < 1e-12);
    }

    #[test]
    fn aggregation_sums_confusions_and_tracks_fold_stats() {
        let labels = names(2);
        let a = compute_metrics(&[0, 1], &[0, 1], &labels).unwrap();
        let b = compute_metrics(&[0, 1], &[1, 1], &labels).unwrap();
        let agg = aggregate_reports(&[a.clone(), b], &labels);
        assert_eq!(agg.confusion, vec![vec![1, 1], vec![0, 2]]);
        let fs = agg.fold_stats.unwrap();
        assert_eq!(fs.accuracies, vec![1.0, 0.5]);
        assert!((fs.mean - 0.75).abs() < 1e-15);
        assert_eq!(fs.max, 1.0);
    }

    #[test]
    fn confusion_row_sums_equal_support() {
        let truths = vec![0, 0, 1, 2, 2, 2];
        let preds = vec![0, 1, 1, 2, 0, 2];
        let report = compute_metrics(&truths, &preds, &names(3)).unwrap();
        for (row, c) in report.confusion.iter().zip(&report.per_class) {
            assert_eq!(row.iter().sum::<usize>(), c.support);
        }
    }

    #[test]
    fn render_and_csv_are_stable() {
        let report = compute_metrics(&[0, 1, 1], &[0, 1, 0], &names(2)).unwrap();
        let table = render_table(&report);
        assert!(table.contains("precision"));
        let csv = confusion_csv(&report);
        assert_eq!(csv, "true\\pred,c0,c1\nc0,1,0\nc1,1,1\n");
    }

    #[test]
    fn heatmap_of_identity_confusion_is_diagonal() {
        let confusion = vec![vec![3, 0], vec![0, 3]];
        let img = confusion_heatmap(&confusion, 2).unwrap();
        assert_eq!(img.height(), 4);
        assert_eq!(img.get(0, 0)[0], 1.0);
        assert_eq!(img.get(0, 2)[0], 0.0);
        assert_eq!(img.get(3, 3)[0], 1.0);
    }

    #[test]
    fn json_round_trip_keeps_schema_fields() {
        let mut report = compute_metrics(&[0, 1], &[0, 1], &names(2)).unwrap();
        report.experiment = "cv".into();
        report.config_digest = "abc123".into();
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"experiment\""));
        assert!(json.contains("\"config_digest\""));
        assert!(json.contains("\"per_class\""));
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    proptest! {
        #[test]
        fn micro_recall_equals_accuracy(
            pairs in prop::collection::vec((0usize..5, 0usize..5), 1..200)
        ) {
            let truths: Vec<usize> = pairs.iter().map(|(t, _)| *t).collect();
            let preds: Vec<usize> = pairs.iter().map(|(_, p)| *p).collect();
            let report = compute_metrics(&truths, &preds, &names(5)).unwrap();
            let tp: usize = (0..5).map(|i| report.confusion[i][i]).sum();
            let support: usize = report.per_class.iter().map(|c| c.support).sum();
            let micro_recall = tp as f64 / support as f64;
            prop_assert!((micro_recall - report.accuracy).abs() < 1e-12);
        }
    }
}
