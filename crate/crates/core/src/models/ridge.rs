use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::cv_folds;
use super::metrics::pearson;
use super::{predict_value, LinearModel, ModelKind};
use crate::error::{CloakError, Result};

const CG_MAX_ITER: usize = 2_000;
const CG_TOL: f64 = 1e-10;

/// Ridge regression on binary rows with an unpenalized intercept.
///
/// Solves (XcᵀXc + αI)w = Xcᵀ(y − ȳ) by conjugate gradients, where Xc is the
/// column-centered design, applied implicitly so X stays sparse.
pub fn fit_ridge(x: &[&[usize]], y: &[f64], n_features: usize, alpha: f64) -> Result<LinearModel> {
    if x.len() != y.len() || x.is_empty() {
        return Err(CloakError::InvalidArgument(
            "ridge needs matching, non-empty rows and targets".into(),
        ));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(CloakError::InvalidArgument(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let n = x.len() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let mut col_mean = vec![0.0; n_features];
    for row in x {
        for &j in row.iter() {
            col_mean[j] += 1.0;
        }
    }
    col_mean.iter_mut().for_each(|v| *v /= n);

    // Xᵀu for a vector u over rows.
    let xt = |u: &[f64]| {
        let mut out = vec![0.0; n_features];
        for (row, &ui) in x.iter().zip(u) {
            for &j in row.iter() {
                out[j] += ui;
            }
        }
        out
    };
    // (XcᵀXc + αI)v
    let apply = |v: &[f64]| {
        let shift: f64 = col_mean.iter().zip(v).map(|(m, vi)| m * vi).sum();
        let xv: Vec<f64> = x
            .iter()
            .map(|row| row.iter().map(|&j| v[j]).sum::<f64>() - shift)
            .collect();
        let mut out = xt(&xv);
        out.iter_mut().zip(v).for_each(|(o, vi)| *o += alpha * vi);
        out
    };

    let centered: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let rhs = xt(&centered);
    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut w = vec![0.0; n_features];
    if rhs_norm > 0.0 {
        let mut r = rhs.clone();
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        for _ in 0..CG_MAX_ITER {
            if rr.sqrt() <= CG_TOL * rhs_norm {
                break;
            }
            let ap = apply(&p);
            let step = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            w.iter_mut().zip(&p).for_each(|(wi, pi)| *wi += step * pi);
            r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= step * ai);
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            let beta = rr_new / rr;
            p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
            rr = rr_new;
        }
    }
    let intercept = y_mean - col_mean.iter().zip(&w).map(|(m, wi)| m * wi).sum::<f64>();
    Ok(LinearModel {
        weights: w,
        intercept,
        c: alpha,
        kind: ModelKind::ContinuousRegressor,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub model: LinearModel,
    pub alpha: f64,
    pub cv: RidgeCv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeCv {
    pub grid: Vec<f64>,
    pub mean_pearson: Vec<Option<f64>>,
}

/// Picks alpha by k-fold CV on validation Pearson r (ties → smallest alpha),
/// then refits on all rows.
pub fn train_ridge(
    x: &[&[usize]],
    y: &[f64],
    n_features: usize,
    alpha_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<RidgeFit> {
    if alpha_grid.is_empty() || folds < 2 {
        return Err(CloakError::InvalidArgument(
            "ridge needs a non-empty grid and at least 2 folds".into(),
        ));
    }
    if x.len() < folds + 1 {
        return Err(CloakError::InvalidArgument(format!(
            "ridge needs at least {} labeled users, found {}",
            folds + 1,
            x.len()
        )));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(CloakError::ConstantInput);
    }
    let assignment = cv_folds(&vec![false; y.len()], folds, seed);
    let jobs: Vec<(usize, usize)> = (0..alpha_grid.len())
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
            let model = fit_ridge(&tx, &ty, n_features, alpha_grid[g])?;
            let pred: Vec<f64> = vx.iter().map(|r| predict_value(&model, r)).collect();
            Ok(pearson(&pred, &vy).ok())
        })
        .collect();
    let mut per_grid = vec![Vec::new(); alpha_grid.len()];
    for ((g, _), r) in jobs.iter().zip(results) {
        if let Some(p) = r? {
            per_grid[*g].push(p);
        }
    }
    let mean_pearson: Vec<Option<f64>> = per_grid
        .iter()
        .map(|v: &Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    let mut order: Vec<usize> = (0..alpha_grid.len()).collect();
    order.sort_by(|&a, &b| alpha_grid[a].total_cmp(&alpha_grid[b]));
    let mut best: Option<(usize, f64)> = None;
    for g in order {
        if let Some(m) = mean_pearson[g] {
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((g, m));
            }
        }
    }
    let (best_g, _) = best.ok_or(CloakError::AllFoldsSkipped)?;
    let alpha = alpha_grid[best_g];
    Ok(RidgeFit {
        model: fit_ridge(x, y, n_features, alpha)?,
        alpha,
        cv: RidgeCv {
            grid: alpha_grid.to_vec(),
            mean_pearson,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn random_rows(n: usize, d: usize, p: f64, seed: u64) -> Vec<Vec<usize>> {
        let mut rng = crate::rng::stream(seed, 1);
        (0..n)
            .map(|_| (0..d).filter(|_| rng.random_bool(p)).collect())
            .collect()
    }

    #[test]
    fn noiseless_linear_target_is_recovered() {
        let train = random_rows(300, 20, 0.3, 1);
        let test = random_rows(200, 20, 0.3, 2);
        let target = |r: &Vec<usize>| 2.0 + 3.0 * f64::from(u8::from(r.contains(&4)));
        let x: Vec<&[usize]> = train.iter().map(Vec::as_slice).collect();
        let y: Vec<f64> = train.iter().map(target).collect();
        let fit = train_ridge(&x, &y, 20, &[1e-6, 1e-4], 3, 0).unwrap();
        let pred: Vec<f64> = test.iter().map(|r| predict_value(&fit.model, r)).collect();
        let actual: Vec<f64> = test.iter().map(target).collect();
        assert!(pearson(&pred, &actual).unwrap() >= 0.999);
    }

    #[test]
    fn pure_noise_gives_small_correlation() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        for seed in 0..5u64 {
            let rows = random_rows(2000, 50, 0.1, 10 + seed);
            let mut rng = crate::rng::stream(seed, 99);
            let y: Vec<f64> = (0..2000).map(|_| normal.sample(&mut rng)).collect();
            let (tr, te) = rows.split_at(1320);
            let x: Vec<&[usize]> = tr.iter().map(Vec::as_slice).collect();
            let fit = train_ridge(&x, &y[..1320], 50, &crate::models::DEFAULT_ALPHA_GRID, 3, seed)
                .unwrap();
            let pred: Vec<f64> = te.iter().map(|r| predict_value(&fit.model, r)).collect();
            let r = pearson(&pred, &y[1320..]).unwrap_or(0.0);
            assert!(r.abs() < 0.1, "seed {seed}: r = {r}");
        }
    }

    #[test]
    fn huge_alpha_predicts_mean() {
        let rows = random_rows(100, 10, 0.4, 3);
        let x: Vec<&[usize]> = rows.iter().map(Vec::as_slice).collect();
        let y: Vec<f64> = (0..100).map(|i| (i % 7) as f64).collect();
        let m = fit_ridge(&x, &y, 10, 1e12).unwrap();
        let mean = y.iter().sum::<f64>() / 100.0;
        assert!(m.weights.iter().all(|w| w.abs() < 1e-8));
        assert!((predict_value(&m, &rows[0]) - mean).abs() < 1e-6);
    }

    #[test]
    fn constant_target_rejected() {
        let rows = random_rows(10, 3, 0.5, 4);
        let x: Vec<&[usize]> = rows.iter().map(Vec::as_slice).collect();
        assert!(matches!(
            train_ridge(&x, &[1.0; 10], 3, &[1.0], 3, 0),
            Err(CloakError::ConstantInput)
        ));
    }
}
