use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::write_lines;
use crate::error::{Error, Result};
use crate::team::Assignment;

/// Per-instance routing record. Labels, predictions and member indices are
/// 1-based so they match the dataset files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationRecord {
    /// Row of the instance within the exported split.
    pub row: usize,
    pub label: usize,
    /// Member the allocator picked, in `1..=m+1`.
    pub assigned: usize,
    pub member_predictions: Vec<usize>,
    pub member_correct: Vec<bool>,
    pub team_prediction: usize,
    pub team_correct: bool,
}

pub fn allocation_records(a: &Assignment, labels: &[usize]) -> Result<Vec<AllocationRecord>> {
    if a.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} assignments for {} labels",
            a.len(),
            labels.len()
        )));
    }
    Ok((0..labels.len())
        .map(|i| {
            let preds: Vec<usize> = a.member_predictions.iter().map(|p| p[i]).collect();
            AllocationRecord {
                row: i + 1,
                label: labels[i] + 1,
                assigned: a.assigned[i] + 1,
                member_correct: preds.iter().map(|&p| p == labels[i]).collect(),
                member_predictions: preds.iter().map(|p| p + 1).collect(),
                team_prediction: a.predicted[i] + 1,
                team_correct: a.predicted[i] == labels[i],
            }
        })
        .collect())
}

/// Writes one JSON record per instance to `path`.
pub fn export_allocation_records(a: &Assignment, labels: &[usize], path: &Path) -> Result<usize> {
    let rows = allocation_records(a, labels)?;
    write_lines(path, &rows)?;
    Ok(rows.len())
}
