//! Metafeatures: exclusive groupings of items, either learned with
//! non-negative matrix factorization or read from a domain category mapping.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::FootprintMatrix;
use crate::error::{CloakError, Result};
use crate::rng;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetafeatureSource {
    Nmf,
    Domain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetafeatureModel {
    pub k: usize,
    /// k×m row-major loadings (NMF only).
    pub loadings: Option<Vec<f64>>,
    /// Metafeature of every item.
    pub assignment: Vec<usize>,
    /// Items that must never be swept by a metafeature cloak: zero-loading
    /// NMF columns and uncategorized domain items.
    pub exempt: Vec<bool>,
    pub source: MetafeatureSource,
    pub labels: Option<Vec<String>>,
}

impl MetafeatureModel {
    pub fn n_items(&self) -> usize {
        self.assignment.len()
    }

    /// The metafeature `item` is swept with, if any.
    pub fn group_of(&self, item: usize) -> Option<usize> {
        match (self.assignment.get(item), self.exempt.get(item)) {
            (Some(&g), Some(false)) => Some(g),
            _ => None,
        }
    }

    pub fn from_nmf(fit: &NmfFit) -> Self {
        let a = assign_exclusive(&fit.h, fit.k, fit.m);
        MetafeatureModel {
            k: fit.k,
            loadings: Some(fit.h.clone()),
            assignment: a.assignment,
            exempt: a.degenerate,
            source: MetafeatureSource::Nmf,
            labels: None,
        }
    }

    /// Top-`n` items per metafeature by loading (NMF) or by item order (domain),
    /// restricted to items assigned to that metafeature.
    pub fn report(&self, item_ids: &[String], n: usize) -> MetafeatureReport {
        let mut groups: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for (j, &g) in self.assignment.iter().enumerate() {
            if self.exempt[j] {
                continue;
            }
            let w = self
                .loadings
                .as_ref()
                .map_or(1.0, |h| h[g * self.n_items() + j]);
            groups.entry(g).or_default().push((j, w));
        }
        let metafeatures = groups
            .into_iter()
            .map(|(g, mut items)| {
                items.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                let size = items.len();
                items.truncate(n);
                MetafeatureEntry {
                    id: g,
                    label: self.labels.as_ref().map(|l| l[g].clone()),
                    size,
                    top_items: items
                        .into_iter()
                        .map(|(j, w)| TopItem {
                            item_id: item_ids[j].clone(),
                            weight: w,
                        })
                        .collect(),
                }
            })
            .collect();
        MetafeatureReport {
            source: self.source,
            k: self.k,
            exempt_items: self.exempt.iter().filter(|&&e| e).count(),
            metafeatures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetafeatureReport {
    pub source: MetafeatureSource,
    pub k: usize,
    pub exempt_items: usize,
    pub metafeatures: Vec<MetafeatureEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetafeatureEntry {
    pub id: usize,
    pub label: Option<String>,
    pub size: usize,
    pub top_items: Vec<TopItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopItem {
    pub item_id: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NmfOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for NmfOptions {
    fn default() -> Self {
        NmfOptions {
            max_iters: 500,
            tol: 1e-4,
            seed: 0,
        }
    }
}

/// Result of X ≈ WH with W n×k and H k×m, both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NmfFit {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub w: Vec<f64>,
    pub h: Vec<f64>,
    /// ‖X − WH‖²_F after initialization and after each iteration.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

/// ‖X − WH‖²_F for binary X, using ‖X‖² − 2⟨X, WH⟩ + ⟨WᵀW, HHᵀ⟩.
fn objective(x: &FootprintMatrix, w: &[f64], h: &[f64], k: usize) -> f64 {
    let m = x.n_items();
    let mut cross = 0.0;
    for (i, row) in x.rows().iter().enumerate() {
        let wi = &w[i * k..(i + 1) * k];
        for &j in row {
            cross += (0..k).map(|r| wi[r] * h[r * m + j]).sum::<f64>();
        }
    }
    let wtw = gram_rows(w, x.n_users(), k);
    let hht = gram_cols(h, k, m);
    let quad: f64 = wtw.iter().zip(&hht).map(|(a, b)| a * b).sum();
    (x.nnz() as f64 - 2.0 * cross + quad).max(0.0)
}

/// WᵀW (k×k) for W stored n×k.
fn gram_rows(w: &[f64], n: usize, k: usize) -> Vec<f64> {
    let mut g = vec![0.0; k * k];
    for i in 0..n {
        let wi = &w[i * k..(i + 1) * k];
        for a in 0..k {
            for b in 0..k {
                g[a * k + b] += wi[a] * wi[b];
            }
        }
    }
    g
}

/// HHᵀ (k×k) for H stored k×m.
fn gram_cols(h: &[f64], k: usize, m: usize) -> Vec<f64> {
    let mut g = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let v: f64 = (0..m).map(|j| h[a * m + j] * h[b * m + j]).sum();
            g[a * k + b] = v;
            g[b * k + a] = v;
        }
    }
    g
}

/// Frobenius NMF by Lee–Seung multiplicative updates.
pub fn nmf_fit(x: &FootprintMatrix, k: usize, opts: &NmfOptions) -> Result<NmfFit> {
    let (n, m) = (x.n_users(), x.n_items());
    if k == 0 || n == 0 || m == 0 {
        return Err(CloakError::InvalidArgument(
            "NMF needs k ≥ 1 and a non-empty matrix".into(),
        ));
    }
    if k > n.min(m) {
        return Err(CloakError::InvalidArgument(format!(
            "k = {k} exceeds min(n, m) = {}",
            n.min(m)
        )));
    }
    // Uniform(0,1) draws scaled so WH starts at the magnitude of X.
    let scale = (x.nnz() as f64 / (n * m) as f64 / k as f64).sqrt();
    let mut r = rng::stream(opts.seed, 0);
    let mut w: Vec<f64> = (0..n * k).map(|_| scale * r.random::<f64>()).collect();
    let mut h: Vec<f64> = (0..k * m).map(|_| scale * r.random::<f64>()).collect();

    let mut trace = vec![objective(x, &w, &h, k)];
    let mut iterations = 0;
    for _ in 0..opts.max_iters {
        iterations += 1;

        // H ← H ∘ (WᵀX) / (WᵀW H)
        let mut wtx = vec![0.0; k * m];
        for (i, row) in x.rows().iter().enumerate() {
            let wi = &w[i * k..(i + 1) * k];
            for &j in row {
                for a in 0..k {
                    wtx[a * m + j] += wi[a];
                }
            }
        }
        let wtw = gram_rows(&w, n, k);
        for j in 0..m {
            for a in 0..k {
                let den: f64 = (0..k).map(|b| wtw[a * k + b] * h[b * m + j]).sum();
                h[a * m + j] *= wtx[a * m + j] / (den + EPS);
            }
        }

        // W ← W ∘ (XHᵀ) / (W HHᵀ)
        let hht = gram_cols(&h, k, m);
        for (i, row) in x.rows().iter().enumerate() {
            let mut xht = vec![0.0; k];
            for &j in row {
                for (a, v) in xht.iter_mut().enumerate() {
                    *v += h[a * m + j];
                }
            }
            let wi: Vec<f64> = w[i * k..(i + 1) * k].to_vec();
            for a in 0..k {
                let den: f64 = (0..k).map(|b| wi[b] * hht[b * k + a]).sum();
                w[i * k + a] = wi[a] * xht[a] / (den + EPS);
            }
        }

        let obj = objective(x, &w, &h, k);
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(obj);
        if prev > 0.0 && (prev - obj).abs() / prev < opts.tol {
            break;
        }
    }
    Ok(NmfFit {
        n,
        m,
        k,
        w,
        h,
        objective: trace,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub assignment: Vec<usize>,
    /// Items whose column of H is entirely zero (assigned to 0 by convention).
    pub degenerate: Vec<bool>,
}

/// Column-wise argmax of H (k×m); ties go to the lowest metafeature index.
pub fn assign_exclusive(h: &[f64], k: usize, m: usize) -> Assignment {
    let mut assignment = vec![0; m];
    let mut degenerate = vec![false; m];
    for j in 0..m {
        let mut best = 0;
        for a in 1..k {
            if h[a * m + j] > h[best * m + j] {
                best = a;
            }
        }
        assignment[j] = best;
        degenerate[j] = h[best * m + j] <= 0.0;
    }
    let flagged = degenerate.iter().filter(|&&d| d).count();
    if flagged > 0 {
        log::info!("{flagged} items have an all-zero loading column");
    }
    Assignment {
        assignment,
        degenerate,
    }
}

pub const UNCATEGORIZED: &str = "uncategorized";

/// `item_id → category` mapping as read from disk.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainMapping {
    pub categories: BTreeMap<String, String>,
}

impl DomainMapping {
    pub fn read(path: impl AsRef<Path>) -> Result<DomainMapping> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CloakError::io(path, e))?;
        let mut categories = BTreeMap::new();
        let mut first = true;
        for (i, line) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let delim = if trimmed.contains('\t') { '\t' } else { ',' };
            let parts: Vec<&str> = trimmed.splitn(2, delim).map(str::trim).collect();
            if parts.len() != 2 || parts[0].is_empty() || parts[1].is_empty() {
                return Err(CloakError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("expected `item_id,category`, found `{trimmed}`"),
                });
            }
            if std::mem::take(&mut first) && parts[0].eq_ignore_ascii_case("item_id") {
                continue;
            }
            categories.insert(parts[0].to_string(), parts[1].to_string());
        }
        Ok(DomainMapping { categories })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("item_id,category\n");
        for (item, cat) in &self.categories {
            out.push_str(&format!("{item},{cat}\n"));
        }
        std::fs::write(path, out).map_err(|e| CloakError::io(path, e))
    }

    /// Metafeatures over `item_ids`: one per category, ids in sorted category
    /// order, plus a trailing reserved "uncategorized" group that is exempt
    /// from sweeping.
    pub fn to_model(&self, item_ids: &[String]) -> MetafeatureModel {
        let mut labels: Vec<String> = self
            .categories
            .values()
            .cloned()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let reserved = labels.len();
        let mut assignment = Vec::with_capacity(item_ids.len());
        let mut exempt = Vec::with_capacity(item_ids.len());
        for id in item_ids {
            match self.categories.get(id) {
                Some(cat) => {
                    assignment.push(index[cat.as_str()]);
                    exempt.push(false);
                }
                None => {
                    assignment.push(reserved);
                    exempt.push(true);
                }
            }
        }
        labels.push(UNCATEGORIZED.to_string());
        MetafeatureModel {
            k: labels.len(),
            loadings: None,
            assignment,
            exempt,
            source: MetafeatureSource::Domain,
            labels: Some(labels),
        }
    }
}

pub fn load_domain_categories(path: impl AsRef<Path>, item_ids: &[String]) -> Result<MetafeatureModel> {
    Ok(DomainMapping::read(path)?.to_model(item_ids))
}

/// Majority-label purity of `assignment` against `truth`, over `items`.
pub fn purity(assignment: &[usize], truth: &[usize], items: &[usize]) -> f64 {
    if items.is_empty() {
        return 1.0;
    }
    let mut counts: HashMap<usize, HashMap<usize, usize>> = HashMap::new();
    for &j in items {
        *counts.entry(assignment[j]).or_default().entry(truth[j]).or_default() += 1;
    }
    let majority: usize = counts
        .values()
        .map(|c| c.values().copied().max().unwrap_or(0))
        .sum();
    majority as f64 / items.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn matrix(rows: Vec<Vec<usize>>, m: usize) -> FootprintMatrix {
        FootprintMatrix::new(ids("u", rows.len()), ids("i", m), rows).unwrap()
    }

    #[test]
    fn rank_one_all_ones() {
        let x = matrix(vec![vec![0, 1, 2, 3]; 4], 4);
        let fit = nmf_fit(&x, 1, &NmfOptions { max_iters: 2000, tol: 0.0, seed: 1 }).unwrap();
        assert!(*fit.objective.last().unwrap() < 1e-6);
    }

    #[test]
    fn two_blocks_are_separated() {
        let mut rows = vec![vec![0, 1, 2]; 5];
        rows.extend(vec![vec![3, 4, 5, 6]; 5]);
        let x = matrix(rows, 7);
        let fit = nmf_fit(&x, 2, &NmfOptions { max_iters: 1000, tol: 1e-10, seed: 3 }).unwrap();
        let mf = MetafeatureModel::from_nmf(&fit);
        let truth = [0, 0, 0, 1, 1, 1, 1];
        assert_eq!(purity(&mf.assignment, &truth, &(0..7).collect::<Vec<_>>()), 1.0);
        assert_ne!(mf.assignment[0], mf.assignment[3]);
    }

    #[test]
    fn objective_never_increases() {
        let rows: Vec<Vec<usize>> = (0..12).map(|i| (0..9).filter(|j| (i * j + i) % 4 != 0).collect()).collect();
        let x = matrix(rows, 9);
        let fit = nmf_fit(&x, 3, &NmfOptions { max_iters: 300, tol: 0.0, seed: 5 }).unwrap();
        for w in fit.objective.windows(2) {
            assert!(w[1] <= w[0], "{} > {}", w[1], w[0]);
        }
        assert!(fit.w.iter().chain(&fit.h).all(|&v| v >= 0.0));
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let x = matrix(vec![vec![0, 2], vec![1, 2], vec![0, 1]], 3);
        let opts = NmfOptions { max_iters: 50, tol: 0.0, seed: 9 };
        assert_eq!(nmf_fit(&x, 2, &opts).unwrap(), nmf_fit(&x, 2, &opts).unwrap());
    }

    #[test]
    fn k_too_large() {
        let x = matrix(vec![vec![0], vec![1]], 2);
        assert!(nmf_fit(&x, 3, &NmfOptions::default()).is_err());
    }

    #[test]
    fn argmax_assignment() {
        // H is 2×3: columns [0.9,0.2], [0.1,0.8], [0.5,0.5]; plus a zero column.
        let h = [0.9, 0.1, 0.5, 0.0, 0.2, 0.8, 0.5, 0.0];
        let a = assign_exclusive(&h, 2, 4);
        assert_eq!(a.assignment, vec![0, 1, 0, 0]);
        assert_eq!(a.degenerate, vec![false, false, false, true]);
    }

    #[test]
    fn domain_categories() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "item_id,category\ni0,Musician/Band\ni1,Musician/Band\ni2,Public Figure").unwrap();
        let m = load_domain_categories(f.path(), &ids("i", 4)).unwrap();
        assert_eq!(m.assignment[0], m.assignment[1]);
        assert_ne!(m.assignment[0], m.assignment[2]);
        assert_eq!(m.k, 3);
        assert_eq!(m.labels.as_ref().unwrap()[m.assignment[3]], UNCATEGORIZED);
        assert_eq!(m.group_of(3), None);
        assert_eq!(m.group_of(0), Some(m.assignment[0]));
    }

    #[test]
    fn domain_single_category() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "i0,Any\ni1,Any").unwrap();
        let m = load_domain_categories(f.path(), &ids("i", 2)).unwrap();
        assert_eq!(m.k, 2); // one category plus the reserved group
        assert_eq!(m.assignment, vec![0, 0]);
    }

    #[test]
    fn domain_malformed_row() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "i0,Any\ni1\n").unwrap();
        assert!(matches!(
            load_domain_categories(f.path(), &ids("i", 2)),
            Err(CloakError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn report_lists_top_items() {
        let h = [0.9, 0.1, 0.7, 0.2, 0.8, 0.1];
        let mf = MetafeatureModel {
            k: 2,
            loadings: Some(h.to_vec()),
            assignment: assign_exclusive(&h, 2, 3).assignment,
            exempt: vec![false; 3],
            source: MetafeatureSource::Nmf,
            labels: None,
        };
        let r = mf.report(&ids("i", 3), 10);
        assert_eq!(r.metafeatures.len(), 2);
        let first = &r.metafeatures[0];
        assert_eq!(first.top_items[0].item_id, "i0");
        assert_eq!(first.top_items[1].item_id, "i2");
    }
}
