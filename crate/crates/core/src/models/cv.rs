use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logreg::{train_logreg_l2, LogregOptions};
use super::metrics::auc;
use super::predict_score;
use crate::error::{CloakError, Result};
use crate::rng;

/// Stratified fold assignment: positives and negatives are shuffled
/// separately and dealt round-robin, so every fold sees both classes
/// whenever each class has at least `k` members.
pub fn cv_folds(y: &[bool], k: usize, seed: u64) -> Vec<usize> {
    let mut fold = vec![0; y.len()];
    let mut r = rng::stream(seed, 0);
    let mut next = 0usize;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut r);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best_c: f64,
    pub grid: Vec<f64>,
    /// Mean validation AUC per grid value; `None` when all its folds were skipped.
    pub mean_auc: Vec<Option<f64>>,
    pub skipped_folds: usize,
}

/// k-fold grid search over C, maximizing mean validation AUC.
/// Ties resolve to the smallest C.
pub fn grid_search_cv(
    x: &[&[usize]],
    y: &[bool],
    n_features: usize,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(CloakError::InvalidArgument("empty C grid".into()));
    }
    if folds < 2 {
        return Err(CloakError::InvalidArgument("need at least 2 folds".into()));
    }
    let assignment = cv_folds(y, folds, seed);
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..folds).map(move |f| (g, f)))
        .collect();
    let results: Vec<Result<Option<f64>>> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let (mut tx, mut ty, mut vx, mut vy) = (vec![], vec![], vec![], vec![]);
            for (i, &a) in assignment.iter().enumerate() {
                if a == f {
                    vx.push(x[i]);
                    vy.push(y[i]);
                } else {
                    tx.push(x[i]);
                    ty.push(y[i]);
                }
            }
            let both = |v: &[bool]| v.iter().any(|&b| b) && v.iter().any(|&b| !b);
            if !both(&ty) || !both(&vy) {
                return Ok(None);
            }
            let model = train_logreg_l2(&tx, &ty, n_features, grid[g], &LogregOptions::default())?;
            let scores: Vec<f64> = vx.iter().map(|r| predict_score(&model, r)).collect();
            Ok(Some(auc(&scores, &vy)?))
        })
        .collect();

    let mut per_grid: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
    let mut skipped = 0;
    for ((g, _), r) in jobs.iter().zip(results) {
        match r? {
            Some(a) => per_grid[*g].push(a),
            None => skipped += 1,
        }
    }
    let mean_auc: Vec<Option<f64>> = per_grid
        .iter()
        .map(|v| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64))
        .collect();

    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    let mut best: Option<(usize, f64)> = None;
    for g in order {
        if let Some(m) = mean_auc[g] {
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((g, m));
            }
        }
    }
    let (best_g, _) = best.ok_or(CloakError::AllFoldsSkipped)?;
    if skipped > 0 {
        log::warn!("{skipped} cross-validation folds skipped (single class)");
    }
    Ok(CvResult {
        best_c: grid[best_g],
        grid: grid.to_vec(),
        mean_auc,
        skipped_folds: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<Vec<usize>>, Vec<bool>) {
        let data: Vec<Vec<usize>> = (0..30).map(|i| vec![i % 3, 3 + i % 2]).collect();
        let y: Vec<bool> = (0..30).map(|i| i % 3 == 0 || i % 7 == 0).collect();
        (data, y)
    }

    #[test]
    fn folds_are_stratified() {
        let y: Vec<bool> = (0..20).map(|i| i < 6).collect();
        let f = cv_folds(&y, 3, 9);
        for k in 0..3 {
            assert_eq!((0..20).filter(|&i| f[i] == k && y[i]).count(), 2);
        }
        assert_eq!(f, cv_folds(&y, 3, 9));
    }

    #[test]
    fn singleton_grid() {
        let (data, y) = toy();
        let x: Vec<&[usize]> = data.iter().map(Vec::as_slice).collect();
        assert_eq!(grid_search_cv(&x, &y, 5, &[0.3], 3, 1).unwrap().best_c, 0.3);
    }

    #[test]
    fn ties_pick_smallest_c() {
        // Feature 0 marks exactly the positives: every C ranks perfectly.
        let data: Vec<Vec<usize>> = (0..30).map(|i| if i % 3 == 0 { vec![0] } else { vec![] }).collect();
        let y: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let x: Vec<&[usize]> = data.iter().map(Vec::as_slice).collect();
        let r = grid_search_cv(&x, &y, 1, &[10.0, 0.1], 3, 1).unwrap();
        assert_eq!(r.mean_auc, vec![Some(1.0), Some(1.0)]);
        assert_eq!(r.best_c, 0.1);
    }

    #[test]
    fn all_folds_skipped() {
        // Two positives cannot cover three validation folds.
        let data: Vec<Vec<usize>> = (0..9).map(|i| vec![i % 2]).collect();
        let y: Vec<bool> = (0..9).map(|i| i < 2).collect();
        let x: Vec<&[usize]> = data.iter().map(Vec::as_slice).collect();
        let r = grid_search_cv(&x, &y, 2, &[1.0], 3, 1).unwrap();
        assert_eq!(r.skipped_folds, 1);
        let y1: Vec<bool> = (0..9).map(|i| i < 1).collect();
        assert!(matches!(
            grid_search_cv(&x, &y1, 2, &[1.0], 3, 1),
            Err(CloakError::AllFoldsSkipped)
        ));
    }
}
