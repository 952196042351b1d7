//! Per-class and averaged precision/recall/F1 over predicted vs true label
//! masks, plus the binary-task accuracy.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvgReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<ClassReport>,
    pub micro: AvgReport,
    pub macro_avg: AvgReport,
    pub weighted: AvgReport,
    pub samples: AvgReport,
    /// Exact-match accuracy; reported for the binary (2-class) task.
    pub accuracy: Option<f64>,
    /// Number of 0/0 divisions resolved to 0.
    pub zero_division_hits: u32,
}

fn ratio(num: f64, den: f64, hits: &mut u32) -> f64 {
    if den == 0.0 {
        *hits += 1;
        0.0
    } else {
        num / den
    }
}

fn f1_of(p: f64, r: f64, hits: &mut u32) -> f64 {
    ratio(2.0 * p * r, p + r, hits)
}

/// Computes the full report from per-row label masks (bit i = class i).
pub fn evaluate(pred: &[u32], truth: &[u32], class_names: &[String]) -> EvalReport {
    assert_eq!(pred.len(), truth.len());
    let n_classes = class_names.len();
    let mut hits = 0u32;

    let mut classes = Vec::with_capacity(n_classes);
    let (mut tp_all, mut fp_all, mut fn_all) = (0u64, 0u64, 0u64);
    for c in 0..n_classes {
        let bit = 1u32 << c;
        let mut tp = 0u64;
        let mut fp = 0u64;
        let mut fneg = 0u64;
        for (&p, &t) in pred.iter().zip(truth) {
            match (p & bit != 0, t & bit != 0) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                (false, false) => {}
            }
        }
        tp_all += tp;
        fp_all += fp;
        fn_all += fneg;
        let precision = ratio(tp as f64, (tp + fp) as f64, &mut hits);
        let recall = ratio(tp as f64, (tp + fneg) as f64, &mut hits);
        let f1 = f1_of(precision, recall, &mut hits);
        classes.push(ClassReport {
            name: class_names[c].clone(),
            precision,
            recall,
            f1,
            support: tp + fneg,
        });
    }

    let total_support: u64 = classes.iter().map(|c| c.support).sum();
    let micro_p = ratio(tp_all as f64, (tp_all + fp_all) as f64, &mut hits);
    let micro_r = ratio(tp_all as f64, (tp_all + fn_all) as f64, &mut hits);
    let micro = AvgReport {
        precision: micro_p,
        recall: micro_r,
        f1: f1_of(micro_p, micro_r, &mut hits),
        support: total_support,
    };

    let k = n_classes as f64;
    let macro_avg = AvgReport {
        precision: classes.iter().map(|c| c.precision).sum::<f64>() / k,
        recall: classes.iter().map(|c| c.recall).sum::<f64>() / k,
        f1: classes.iter().map(|c| c.f1).sum::<f64>() / k,
        support: total_support,
    };

    let weight = |f: &dyn Fn(&ClassReport) -> f64| -> f64 {
        if total_support == 0 {
            0.0
        } else {
            classes.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / total_support as f64
        }
    };
    let weighted = AvgReport {
        precision: weight(&|c| c.precision),
        recall: weight(&|c| c.recall),
        f1: weight(&|c| c.f1),
        support: total_support,
    };

    // samples average: per-row P/R/F1 on label sets, averaged across rows
    let n_rows = pred.len().max(1) as f64;
    let (mut sp, mut sr, mut sf) = (0.0, 0.0, 0.0);
    for (&p, &t) in pred.iter().zip(truth) {
        let inter = (p & t).count_ones() as f64;
        let row_p = ratio(inter, p.count_ones() as f64, &mut hits);
        let row_r = ratio(inter, t.count_ones() as f64, &mut hits);
        sp += row_p;
        sr += row_r;
        sf += f1_of(row_p, row_r, &mut hits);
    }
    let samples = AvgReport {
        precision: sp / n_rows,
        recall: sr / n_rows,
        f1: sf / n_rows,
        support: total_support,
    };

    let accuracy = if n_classes == 2 {
        Some(pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / n_rows)
    } else {
        None
    };

    EvalReport {
        classes,
        micro,
        macro_avg,
        weighted,
        samples,
        accuracy,
        zero_division_hits: hits,
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<20} {:>10} {:>10} {:>10} {:>10}",
            "class", "precision", "recall", "f1-score", "support"
        )?;
        for c in &self.classes {
            writeln!(
                f,
                "{:<20} {:>10.2} {:>10.2} {:>10.2} {:>10}",
                c.name, c.precision, c.recall, c.f1, c.support
            )?;
        }
        for (name, a) in [
            ("micro avg", &self.micro),
            ("macro avg", &self.macro_avg),
            ("weighted avg", &self.weighted),
            ("samples avg", &self.samples),
        ] {
            writeln!(
                f,
                "{:<20} {:>10.2} {:>10.2} {:>10.2} {:>10}",
                name, a.precision, a.recall, a.f1, a.support
            )?;
        }
        if let Some(acc) = self.accuracy {
            writeln!(f, "{:<20} {:>10.2}", "accuracy", acc)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn perfect_predictions_all_ones() {
        let masks = vec![0b01, 0b10, 0b11, 0b01];
        let report = evaluate(&masks, &masks, &names(2));
        for c in &report.classes {
            assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(report.micro.f1, 1.0);
        assert_eq!(report.samples.f1, 1.0);
        assert_eq!(report.accuracy, Some(1.0));
    }

    #[test]
    fn single_class_confusion_counts() {
        // TP=87, FP=11, FN=13 in class 1
        let mut pred = Vec::new();
        let mut truth = Vec::new();
        for _ in 0..87 {
            pred.push(0b10);
            truth.push(0b10);
        }
        for _ in 0..11 {
            pred.push(0b10);
            truth.push(0b01);
        }
        for _ in 0..13 {
            pred.push(0b01);
            truth.push(0b10);
        }
        let report = evaluate(&pred, &truth, &names(2));
        let c = &report.classes[1];
        assert_relative_eq!(c.precision, 87.0 / 98.0, epsilon = 1e-12); // 0.8878...
        assert_relative_eq!(c.recall, 0.87, epsilon = 1e-12);
        assert_relative_eq!(c.f1, 2.0 * c.precision * c.recall / (c.precision + c.recall));
        assert_eq!(c.support, 100);
    }

    #[test]
    fn samples_average_hand_example() {
        // true {a},{b}; pred {a},{a}
        let truth = vec![0b01, 0b10];
        let pred = vec![0b01, 0b01];
        let report = evaluate(&pred, &truth, &names(2));
        assert_relative_eq!(report.samples.precision, 0.5);
        assert_relative_eq!(report.samples.recall, 0.5);
    }

    #[test]
    fn micro_identity_for_single_label_rows() {
        // one true and one predicted label per row: micro P = R = F1
        let truth = vec![0b001, 0b010, 0b100, 0b001, 0b010];
        let pred = vec![0b001, 0b100, 0b100, 0b010, 0b010];
        let report = evaluate(&pred, &truth, &names(3));
        assert_eq!(report.micro.precision, report.micro.recall);
        assert_eq!(report.micro.precision, report.micro.f1);
    }

    #[test]
    fn zero_division_convention() {
        // class 1 never predicted nor present
        let truth = vec![0b01, 0b01];
        let pred = vec![0b01, 0b01];
        let report = evaluate(&pred, &truth, &names(2));
        assert_eq!(report.classes[1].precision, 0.0);
        assert_eq!(report.classes[1].f1, 0.0);
        assert!(report.zero_division_hits > 0);
    }
}
