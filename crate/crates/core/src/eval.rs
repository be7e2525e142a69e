//! Cross-validation splitting and classification metrics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row = true class, column = predicted class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn increment(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.classes + predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let diag: u64 = (0..self.classes).map(|i| self.count(i, i)).sum();
        diag as f64 / total as f64
    }

    /// CSV with a header row of predicted-class names.
    pub fn to_csv(&self, class_names: &[String]) -> String {
        let mut out = String::from("true\\predicted");
        for name in class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for t in 0..self.classes {
            out.push_str(&class_names[t]);
            for p in 0..self.classes {
                out.push_str(&format!(",{}", self.count(t, p)));
            }
            out.push('\n');
        }
        out
    }
}

/// One-vs-rest metrics for a single class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when the class never occurs as truth or prediction, making
    /// precision and recall undefined (reported as 0).
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

impl MetricsReport {
    /// Per-class rows plus `macro_avg` and `accuracy` summary rows.
    pub fn to_csv(&self, class_names: &[String]) -> String {
        let mut out = String::from("class,precision,recall,f1,excluded\n");
        for (name, m) in class_names.iter().zip(&self.per_class) {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{}\n",
                name, m.precision, m.recall, m.f1, m.excluded
            ));
        }
        out.push_str(&format!(
            "macro_avg,{:.6},{:.6},{:.6},\n",
            self.macro_precision, self.macro_recall, self.macro_f1
        ));
        out.push_str(&format!("accuracy,{:.6},,,\n", self.accuracy));
        out
    }
}

/// Computes the confusion matrix and one-vs-rest metrics.
///
/// Undefined precision or recall (zero denominator) is reported as 0; macro
/// averages are unweighted means over the whole class universe.
pub fn evaluate(
    truths: &[usize],
    predictions: &[usize],
    classes: usize,
) -> Result<(ConfusionMatrix, MetricsReport)> {
    if truths.len() != predictions.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            got: predictions.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut matrix = ConfusionMatrix::new(classes);
    for (&t, &p) in truths.iter().zip(predictions) {
        if t >= classes || p >= classes {
            return Err(Error::InvalidParameter(format!(
                "label outside the class universe of size {classes}"
            )));
        }
        matrix.increment(t, p);
    }
    let mut per_class = Vec::with_capacity(classes);
    for c in 0..classes {
        let tp = matrix.count(c, c);
        let predicted: u64 = (0..classes).map(|t| matrix.count(t, c)).sum();
        let actual: u64 = (0..classes).map(|p| matrix.count(c, p)).sum();
        let precision = if predicted > 0 {
            tp as f64 / predicted as f64
        } else {
            0.0
        };
        let recall = if actual > 0 {
            tp as f64 / actual as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            excluded: predicted == 0 && actual == 0,
        });
    }
    let n = classes as f64;
    let report = MetricsReport {
        macro_precision: per_class.iter().map(|m| m.precision).sum::<f64>() / n,
        macro_recall: per_class.iter().map(|m| m.recall).sum::<f64>() / n,
        macro_f1: per_class.iter().map(|m| m.f1).sum::<f64>() / n,
        accuracy: matrix.accuracy(),
        per_class,
    };
    Ok((matrix, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitStrategy {
    LeaveOneSubjectOut,
    KFold(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// A cross-validation plan over dataset item indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub strategy: SplitStrategy,
    pub folds: Vec<Fold>,
}

impl SplitPlan {
    /// Checks that folds are disjoint and the test sets partition `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for fold in &self.folds {
            for &i in &fold.test {
                if i >= n || seen[i] {
                    return Err(Error::InvalidDataset(
                        "test folds do not partition the dataset".into(),
                    ));
                }
                seen[i] = true;
                if fold.train.contains(&i) {
                    return Err(Error::InvalidDataset(
                        "train and test overlap within a fold".into(),
                    ));
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidDataset(
                "some items appear in no test fold".into(),
            ));
        }
        Ok(())
    }
}

/// Builds a deterministic split plan.
///
/// Leave-one-subject-out yields one fold per distinct subject (sorted);
/// k-fold shuffles item indices with the seed and deals them into k
/// near-equal parts.
pub fn make_splits(subjects: &[String], strategy: SplitStrategy, seed: u64) -> Result<SplitPlan> {
    if subjects.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = subjects.len();
    let folds = match strategy {
        SplitStrategy::LeaveOneSubjectOut => {
            let mut distinct: Vec<&String> = subjects.iter().collect();
            distinct.sort();
            distinct.dedup();
            if distinct.len() < 2 {
                return Err(Error::InvalidParameter(
                    "leave-one-subject-out needs at least 2 distinct subjects".into(),
                ));
            }
            distinct
                .into_iter()
                .map(|subject| {
                    let (test, train): (Vec<usize>, Vec<usize>) =
                        (0..n).partition(|&i| &subjects[i] == subject);
                    Fold { train, test }
                })
                .collect()
        }
        SplitStrategy::KFold(k) => {
            if k < 2 || k > n {
                return Err(Error::InvalidParameter(format!(
                    "k must be in [2, {n}], got {k}"
                )));
            }
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            order.shuffle(&mut rng);
            let base = n / k;
            let extra = n % k;
            let mut folds = Vec::with_capacity(k);
            let mut start = 0;
            for f in 0..k {
                let size = base + usize::from(f < extra);
                let mut test: Vec<usize> = order[start..start + size].to_vec();
                test.sort_unstable();
                let mut train: Vec<usize> = order[..start]
                    .iter()
                    .chain(&order[start + size..])
                    .copied()
                    .collect();
                train.sort_unstable();
                folds.push(Fold { train, test });
                start += size;
            }
            folds
        }
    };
    let plan = SplitPlan { strategy, folds };
    plan.validate(n)?;
    Ok(plan)
}
