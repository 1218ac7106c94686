use std::collections::BTreeMap;

use super::svm::{accuracy, predict, train_linear_svm};
use crate::error::{Error, Result};
use crate::math::{Matrix, RandomSource};
use crate::par;

/// Stratified fold assignment: each class's indices are shuffled and dealt
/// round-robin, with the dealing position carried over from one class to the
/// next so fold sizes differ by at most one. Folds are returned sorted.
pub fn stratified_folds(labels: &[usize], folds: usize, rng: &mut RandomSource) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidArgument("cross validation needs >= 2 folds".into()));
    }
    if labels.len() < folds {
        return Err(Error::InvalidArgument(format!(
            "{} samples cannot fill {folds} folds",
            labels.len()
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if let Some((c, idx)) = by_class.iter().find(|(_, idx)| idx.len() < folds) {
        return Err(Error::InvalidArgument(format!(
            "class {c} has {} samples, fewer than {folds} folds",
            idx.len()
        )));
    }
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for idx in by_class.values_mut() {
        rng.shuffle(idx);
        for &i in idx.iter() {
            out[next].push(i);
            next = (next + 1) % folds;
        }
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}

/// One train/validation partition handed to the scoring closure.
#[derive(Debug, Clone)]
pub struct Split {
    pub fold: usize,
    pub train_x: Matrix,
    pub train_y: Vec<usize>,
    pub val_x: Matrix,
    pub val_y: Vec<usize>,
    /// Seed for any randomness inside the fit; the same for every grid point.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome<H> {
    pub best: H,
    pub best_index: usize,
    /// Mean validation score per grid point, in grid order.
    pub mean_scores: Vec<f64>,
}

/// Grid search by `folds`-fold stratified cross validation. `fit_score`
/// trains on `split.train_*` and returns a validation score (higher is
/// better). Ties go to the earliest grid point. Grid points and folds are
/// evaluated in parallel.
pub fn cross_validate<H, F>(
    x: &Matrix,
    labels: &[usize],
    grid: &[H],
    folds: usize,
    seed: u64,
    fit_score: F,
) -> Result<CvOutcome<H>>
where
    H: Clone + Sync,
    F: Fn(&H, &Split) -> Result<f64> + Sync + Send,
{
    if grid.is_empty() {
        return Err(Error::Empty("hyperparameter grid"));
    }
    if labels.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            context: "labels",
            expected: x.rows(),
            actual: labels.len(),
        });
    }
    let parts = stratified_folds(labels, folds, &mut RandomSource::derive(seed, 0))?;
    let splits: Vec<Split> = (0..folds)
        .map(|f| {
            let val = &parts[f];
            let train: Vec<usize> = parts
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, p)| p.iter().copied())
                .collect();
            Split {
                fold: f,
                train_x: x.select_rows(&train),
                train_y: train.iter().map(|&i| labels[i]).collect(),
                val_x: x.select_rows(val),
                val_y: val.iter().map(|&i| labels[i]).collect(),
                seed: RandomSource::derive(seed, f as u64 + 1).next_u64(),
            }
        })
        .collect();
    let scores = par::map_indexed(grid.len() * folds, |job| {
        fit_score(&grid[job / folds], &splits[job % folds])
    });
    let mut mean_scores = Vec::with_capacity(grid.len());
    for g in 0..grid.len() {
        let mut s = 0.0;
        for f in 0..folds {
            match &scores[g * folds + f] {
                Ok(v) => s += v,
                Err(e) => return Err(Error::InvalidArgument(format!("fold {f}: {e}"))),
            }
        }
        mean_scores.push(s / folds as f64);
    }
    let mut best_index = 0;
    for (i, &s) in mean_scores.iter().enumerate() {
        if s > mean_scores[best_index] {
            best_index = i;
        }
    }
    Ok(CvOutcome {
        best: grid[best_index].clone(),
        best_index,
        mean_scores,
    })
}

/// Cross-validated choice of the SVM regularization constant.
pub fn cross_validate_svm(
    x: &Matrix,
    labels: &[usize],
    c_grid: &[f64],
    epochs: usize,
    folds: usize,
    seed: u64,
) -> Result<CvOutcome<f64>> {
    cross_validate(x, labels, c_grid, folds, seed, |&c, s| {
        let m = train_linear_svm(&s.train_x, &s.train_y, c, epochs, s.seed)?;
        Ok(accuracy(&predict(&m, &s.val_x)?, &s.val_y))
    })
}
