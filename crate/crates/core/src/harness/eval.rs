use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::team::{Assignment, MemberKind};

/// Scores of one allocation policy on one test split. Accuracies are
/// percentages; cells over an empty subset are `None` (`null` in JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub team_accuracy: f64,
    pub members: Vec<String>,
    pub assigned_counts: Vec<usize>,
    /// Accuracy of member `r` on the instances routed to `r`.
    pub per_member_accuracy_on_assigned: Vec<Option<f64>>,
    /// Cell `(r, c)`: accuracy of member `c` on the instances routed to `r`.
    pub allocation_matrix: Vec<Vec<Option<f64>>>,
    /// Fraction of instances routed to a classifier.
    pub coverage: f64,
    /// Share of instances on which at least one member is right.
    pub oracle_accuracy: f64,
    /// Every non-empty row peaks (possibly jointly) on its diagonal.
    pub diagonal_dominant: bool,
}

pub fn member_name(kind: &MemberKind, classifiers: usize) -> String {
    match kind {
        MemberKind::Expert(j) => format!("expert{}", j + 1),
        MemberKind::Classifier(_) if classifiers == 1 => "classifier".into(),
        MemberKind::Classifier(j) => format!("classifier{}", j + 1),
    }
}

fn percent(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| 100.0 * hits as f64 / total as f64)
}

pub fn evaluate(a: &Assignment, labels: &[usize]) -> Result<EvalReport> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::Data("cannot evaluate on an empty test split".into()));
    }
    if a.len() != n {
        return Err(Error::Dimension(format!(
            "{} assignments for {n} labels",
            a.len()
        )));
    }
    let r = a.num_members();
    let mut counts = vec![0usize; r];
    let mut hits = vec![vec![0usize; r]; r];
    for i in 0..n {
        let row = a.assigned[i];
        counts[row] += 1;
        for c in 0..r {
            if a.member_predictions[c][i] == labels[i] {
                hits[row][c] += 1;
            }
        }
    }
    let team_hits = a.predicted.iter().zip(labels).filter(|(p, y)| p == y).count();
    let matrix: Vec<Vec<Option<f64>>> = (0..r)
        .map(|row| (0..r).map(|c| percent(hits[row][c], counts[row])).collect())
        .collect();
    let diagonal_dominant = (0..r).filter(|&row| counts[row] > 0).all(|row| {
        let diag = hits[row][row];
        (0..r).all(|c| hits[row][c] <= diag)
    });
    let n_classifiers = a.members.iter().filter(|m| m.is_classifier()).count();
    let to_classifier: usize = (0..r)
        .filter(|&row| a.members[row].is_classifier())
        .map(|row| counts[row])
        .sum();
    Ok(EvalReport {
        n,
        team_accuracy: 100.0 * team_hits as f64 / n as f64,
        members: a.members.iter().map(|m| member_name(m, n_classifiers)).collect(),
        assigned_counts: counts,
        per_member_accuracy_on_assigned: (0..r).map(|row| matrix[row][row]).collect(),
        allocation_matrix: matrix,
        coverage: to_classifier as f64 / n as f64,
        oracle_accuracy: 100.0 * evaluate_oracle(&a.member_predictions, labels)?,
        diagonal_dominant,
    })
}

/// Fraction of instances on which at least one member predicts the label.
pub fn evaluate_oracle(member_predictions: &[Vec<usize>], labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty test split".into()));
    }
    if member_predictions.iter().any(|p| p.len() != labels.len()) {
        return Err(Error::Dimension("member predictions and labels differ in length".into()));
    }
    let covered = (0..labels.len())
        .filter(|&i| member_predictions.iter().any(|p| p[i] == labels[i]))
        .count();
    Ok(covered as f64 / labels.len() as f64)
}

/// Mean, sample standard deviation and standard error of per-seed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedStats {
    pub per_seed_values: Vec<f64>,
    pub mean: f64,
    /// `None` with fewer than two values.
    pub std_dev: Option<f64>,
    pub standard_error: Option<f64>,
}

impl SeedStats {
    pub fn new(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std_dev = (values.len() > 1).then(|| {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        });
        Self {
            standard_error: std_dev.map(|s| s / n.sqrt()),
            std_dev,
            mean,
            per_seed_values: values,
        }
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (average ranks for ties). `None` when either
/// input is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}
