use crate::error::{MetricsError, Result};

/// Count matrix with actual categories as rows and predictions as columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<usize>,
    classes: usize,
}

impl ConfusionMatrix {
    pub fn from_labels(actual: &[usize], predicted: &[usize], classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(MetricsError::InvalidArgument(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        if actual.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch {
                left: "actual has",
                left_len: actual.len(),
                right: "predicted has",
                right_len: predicted.len(),
            });
        }
        if actual.is_empty() {
            return Err(MetricsError::InvalidArgument(
                "cannot score an empty label set".into(),
            ));
        }
        let mut counts = vec![0usize; classes * classes];
        for (&a, &p) in actual.iter().zip(predicted) {
            for label in [a, p] {
                if label >= classes {
                    return Err(MetricsError::LabelOutOfRange { label, classes });
                }
            }
            counts[a * classes + p] += 1;
        }
        Ok(Self { counts, classes })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn count(&self, actual: usize, predicted: usize) -> usize {
        self.counts[actual * self.classes + predicted]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Correctly classified count (the diagonal).
    pub fn hits(&self) -> usize {
        (0..self.classes).map(|i| self.count(i, i)).sum()
    }

    fn row_sum(&self, actual: usize) -> usize {
        (0..self.classes).map(|p| self.count(actual, p)).sum()
    }

    fn col_sum(&self, predicted: usize) -> usize {
        (0..self.classes).map(|a| self.count(a, predicted)).sum()
    }
}

/// One-vs-rest scores for a single category.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of actual samples in the category.
    pub support: usize,
}

/// Accuracy plus per-category and macro-averaged precision/recall/F1.
///
/// Every ratio with a zero denominator is defined as 0: a category that
/// was never predicted has precision 0, one that never occurs has recall
/// 0, and F1 is 0 whenever precision + recall is. Macro averages weight
/// categories equally regardless of support.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub per_category: Vec<CategoryScores>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

pub fn classification_report(
    actual: &[usize],
    predicted: &[usize],
    classes: usize,
) -> Result<ClassificationReport> {
    let matrix = ConfusionMatrix::from_labels(actual, predicted, classes)?;
    Ok(report_from_confusion(&matrix))
}

pub fn report_from_confusion(matrix: &ConfusionMatrix) -> ClassificationReport {
    let classes = matrix.classes();
    let mut per_category = Vec::with_capacity(classes);
    for k in 0..classes {
        let tp = matrix.count(k, k) as f64;
        let predicted = matrix.col_sum(k) as f64;
        let support = matrix.row_sum(k);
        let precision = ratio_or_zero(tp, predicted);
        let recall = ratio_or_zero(tp, support as f64);
        let f1 = ratio_or_zero(2.0 * precision * recall, precision + recall);
        per_category.push(CategoryScores {
            precision,
            recall,
            f1,
            support,
        });
    }
    let inv = 1.0 / classes as f64;
    ClassificationReport {
        accuracy: matrix.hits() as f64 / matrix.total() as f64,
        macro_precision: per_category.iter().map(|c| c.precision).sum::<f64>() * inv,
        macro_recall: per_category.iter().map(|c| c.recall).sum::<f64>() * inv,
        macro_f1: per_category.iter().map(|c| c.f1).sum::<f64>() * inv,
        per_category,
    }
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}
