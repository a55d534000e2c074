//! Synthetic footprints with planted topic structure.
//!
//! Items are partitioned into topics. Each user draws topic affinities from a
//! symmetric Dirichlet, a like count from a Poisson, and then likes items by
//! picking a topic in proportion to affinity and an item within it in
//! proportion to a Zipf popularity. Binary traits follow a logistic link on
//! the affinities, continuous traits a linear link plus Gaussian noise.
//! Because likes are i.i.d. given a user's affinities, any random half of a
//! user's likes is distributed like the other half.

use std::collections::{BTreeMap, HashSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::{FootprintMatrix, LabelTable};
use crate::error::{CloakError, Result};
use crate::metafeatures::DomainMapping;
use crate::models::sigmoid;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryLink {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousLink {
    pub weights: Vec<f64>,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub k_topics: usize,
    pub dirichlet_alpha: f64,
    pub popularity_exponent: f64,
    pub mean_likes: f64,
    pub binary_tasks: BTreeMap<String, BinaryLink>,
    pub continuous_traits: BTreeMap<String, ContinuousLink>,
    /// Share of items whose domain category ignores their topic.
    pub category_noise: f64,
    /// Share of items left without a domain category.
    pub uncategorized_share: f64,
    pub seed: u64,
}

pub const DEFAULT_BINARY_TASKS: [&str; 3] = ["male", "republican", "homosexual"];
pub const DEFAULT_TRAITS: [&str; 5] = [
    "openness",
    "conscientiousness",
    "extraversion",
    "agreeableness",
    "neuroticism",
];

/// Vector of length `k` with `entries` placed at `topic % k` (accumulating).
fn topic_vector(k: usize, entries: &[(usize, f64)]) -> Vec<f64> {
    let mut v = vec![0.0; k];
    for &(t, w) in entries {
        v[t % k] += w;
    }
    v
}

impl SynthConfig {
    /// Default population with the three binary tasks and five traits wired
    /// to a `k_topics`-topic space.
    pub fn with_topics(k_topics: usize, seed: u64) -> Self {
        let k = k_topics.max(1);
        let bin = |entries: &[(usize, f64)], intercept: f64| BinaryLink {
            weights: topic_vector(k, entries),
            intercept,
        };
        let cont = |entries: &[(usize, f64)]| ContinuousLink {
            weights: topic_vector(k, entries),
            noise_sd: 0.15,
        };
        let binary_tasks = BTreeMap::from([
            ("male".to_string(), bin(&[(0, 9.0), (1, 6.0), (2, -4.0)], -2.0)),
            ("republican".to_string(), bin(&[(3, 10.0), (4, 6.0)], -2.5)),
            ("homosexual".to_string(), bin(&[(5, 12.0), (6, 4.0)], -2.8)),
        ]);
        let continuous_traits = BTreeMap::from([
            ("openness".to_string(), cont(&[(0, 1.0), (5, 1.0), (7, 1.0), (4, -1.0)])),
            ("conscientiousness".to_string(), cont(&[(3, 1.0), (8, 1.0), (6, -1.0)])),
            ("extraversion".to_string(), cont(&[(1, 1.0), (9, 1.0), (10, -1.0)])),
            ("agreeableness".to_string(), cont(&[(4, 1.0), (2, 1.0), (11, -1.0)])),
            ("neuroticism".to_string(), cont(&[(6, 1.0), (10, 1.0), (0, -1.0)])),
        ]);
        SynthConfig {
            n_users: 2000,
            n_items: 5000,
            k_topics: k,
            dirichlet_alpha: 0.3,
            popularity_exponent: 1.1,
            mean_likes: 100.0,
            binary_tasks,
            continuous_traits,
            category_noise: 0.1,
            uncategorized_share: 0.05,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CloakError::InvalidArgument(msg));
        if self.n_users == 0 || self.n_items == 0 || self.k_topics == 0 {
            return bad("n_users, n_items and k_topics must be ≥ 1".into());
        }
        if self.k_topics > self.n_items {
            return bad("more topics than items".into());
        }
        if !(self.mean_likes >= 1.0 && self.mean_likes <= self.n_items as f64) {
            return bad(format!(
                "mean_likes must be in [1, n_items], got {}",
                self.mean_likes
            ));
        }
        if !(self.dirichlet_alpha > 0.0 && self.popularity_exponent >= 0.0) {
            return bad("dirichlet_alpha must be positive, popularity_exponent non-negative".into());
        }
        for (name, l) in &self.binary_tasks {
            if l.weights.len() != self.k_topics {
                return bad(format!("binary task `{name}` has a wrong weight length"));
            }
        }
        for (name, l) in &self.continuous_traits {
            if l.weights.len() != self.k_topics || l.noise_sd < 0.0 {
                return bad(format!("trait `{name}` has a wrong weight length or noise"));
            }
        }
        Ok(())
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig::with_topics(12, 0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthDiagnostics {
    /// Users whose like count exceeded what topic sampling could supply and
    /// were topped up uniformly.
    pub resampled_users: usize,
    pub mean_likes: f64,
    pub sparsity: f64,
    pub positive_rates: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub footprints: FootprintMatrix,
    pub labels: LabelTable,
    pub item_topic: Vec<usize>,
    pub affinities: Vec<Vec<f64>>,
    pub domain: DomainMapping,
    pub diagnostics: SynthDiagnostics,
}

/// Ground truth sidecar, keyed by external ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: SynthConfig,
    pub item_topic: BTreeMap<String, usize>,
    pub user_affinities: BTreeMap<String, Vec<f64>>,
    pub diagnostics: SynthDiagnostics,
}

impl SynthData {
    pub fn ground_truth(&self, config: &SynthConfig) -> GroundTruth {
        let m = &self.footprints;
        GroundTruth {
            config: config.clone(),
            item_topic: m
                .item_ids()
                .iter()
                .cloned()
                .zip(self.item_topic.iter().copied())
                .collect(),
            user_affinities: m
                .user_ids()
                .iter()
                .cloned()
                .zip(self.affinities.iter().cloned())
                .collect(),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

fn dirichlet(alpha: f64, k: usize, r: &mut impl Rng) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated positive");
    let mut v: Vec<f64> = (0..k).map(|_| gamma.sample(r)).collect();
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        v.iter_mut().for_each(|x| *x = 1.0 / k as f64);
    }
    v
}

pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    config.validate()?;
    let k = config.k_topics;
    let n_items = config.n_items;
    let width = |n: usize| n.to_string().len();
    let user_ids: Vec<String> = (0..config.n_users)
        .map(|u| format!("u{:0w$}", u, w = width(config.n_users)))
        .collect();
    let item_ids: Vec<String> = (0..n_items)
        .map(|j| format!("p{:0w$}", j, w = width(n_items)))
        .collect();

    // Topic partition: shuffled, near-equal blocks. Within a topic, rank order
    // is the shuffled order and drives Zipf popularity.
    let mut global = rng::stream(config.seed, 0);
    let mut perm: Vec<usize> = (0..n_items).collect();
    perm.shuffle(&mut global);
    let mut item_topic = vec![0; n_items];
    let mut topic_items: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (pos, &j) in perm.iter().enumerate() {
        let t = pos * k / n_items;
        item_topic[j] = t;
        topic_items[t].push(j);
    }
    let popularity: Vec<WeightedIndex<f64>> = topic_items
        .iter()
        .map(|items| {
            let w = (1..=items.len()).map(|r| (r as f64).powf(-config.popularity_exponent));
            WeightedIndex::new(w).expect("topics are non-empty")
        })
        .collect();

    let poisson = Poisson::new(config.mean_likes).expect("mean_likes validated");
    let mut resampled = 0usize;
    let mut rows = Vec::with_capacity(config.n_users);
    let mut affinities = Vec::with_capacity(config.n_users);
    for u in 0..config.n_users {
        let mut r = rng::stream(config.seed, 1 + u as u64);
        let theta = dirichlet(config.dirichlet_alpha, k, &mut r);
        let n_likes = (poisson.sample(&mut r) as usize).clamp(1, n_items);
        let topic_pick = WeightedIndex::new(&theta).expect("affinities sum to one");
        let mut liked: HashSet<usize> = HashSet::with_capacity(n_likes);
        let mut row = Vec::with_capacity(n_likes);
        let mut attempts = 0usize;
        let budget = 50 * n_likes + 1000;
        while row.len() < n_likes && attempts < budget {
            attempts += 1;
            let t = topic_pick.sample(&mut r);
            let j = topic_items[t][popularity[t].sample(&mut r)];
            if liked.insert(j) {
                row.push(j);
            }
        }
        if row.len() < n_likes {
            resampled += 1;
            let mut rest: Vec<usize> = (0..n_items).filter(|j| !liked.contains(j)).collect();
            rest.shuffle(&mut r);
            row.extend(rest.into_iter().take(n_likes - row.len()));
        }
        rows.push(row);
        affinities.push(theta);
    }
    if resampled > 0 {
        log::warn!("{resampled} users exhausted their topic inventory and were topped up uniformly");
    }

    let footprints = FootprintMatrix::new(user_ids, item_ids.clone(), rows)?;
    let n = config.n_users;
    let mut labels = LabelTable::default();
    let mut positive_rates = BTreeMap::new();
    for (ti, (name, link)) in config.binary_tasks.iter().enumerate() {
        let mut r = rng::stream(rng::derive_seed(config.seed, "binary"), ti as u64);
        let col: Vec<Option<bool>> = affinities
            .iter()
            .map(|theta| {
                let z = link.intercept + dot(&link.weights, theta);
                Some(r.random_bool(sigmoid(z)))
            })
            .collect();
        let rate = col.iter().filter(|v| **v == Some(true)).count() as f64 / n as f64;
        positive_rates.insert(name.clone(), rate);
        labels.binary.insert(name.clone(), col);
    }
    for (ti, (name, link)) in config.continuous_traits.iter().enumerate() {
        let mut r = rng::stream(rng::derive_seed(config.seed, "continuous"), ti as u64);
        let noise = Normal::new(0.0, link.noise_sd.max(f64::MIN_POSITIVE))
            .expect("noise validated non-negative");
        let raw: Vec<f64> = affinities
            .iter()
            .map(|theta| dot(&link.weights, theta) + if link.noise_sd > 0.0 { noise.sample(&mut r) } else { 0.0 })
            .collect();
        let (lo, hi) = raw
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let col = raw
            .iter()
            .map(|&x| Some(if hi > lo { 1.0 + 4.0 * (x - lo) / (hi - lo) } else { 3.0 }))
            .collect();
        labels.continuous.insert(name.clone(), col);
    }

    // Domain categories: pairs of topics, with some noise and some items left out.
    let mut r = rng::stream(rng::derive_seed(config.seed, "domain"), 0);
    let n_categories = k.div_ceil(2);
    let mut categories = BTreeMap::new();
    for (j, id) in item_ids.iter().enumerate() {
        if r.random_bool(config.uncategorized_share.clamp(0.0, 1.0)) {
            continue;
        }
        let c = if r.random_bool(config.category_noise.clamp(0.0, 1.0)) {
            r.random_range(0..n_categories)
        } else {
            item_topic[j] / 2
        };
        categories.insert(id.clone(), format!("category_{c:02}"));
    }

    let diagnostics = SynthDiagnostics {
        resampled_users: resampled,
        mean_likes: footprints.nnz() as f64 / n as f64,
        sparsity: footprints.sparsity(),
        positive_rates,
    };
    Ok(SynthData {
        footprints,
        labels,
        item_topic,
        affinities,
        domain: DomainMapping { categories },
        diagnostics,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_users: 200,
            n_items: 500,
            mean_likes: 30.0,
            ..SynthConfig::with_topics(12, seed)
        }
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(generate(&small(4)).unwrap(), generate(&small(4)).unwrap());
        assert_ne!(
            generate(&small(4)).unwrap().footprints,
            generate(&small(5)).unwrap().footprints
        );
    }

    #[test]
    fn single_topic_degenerates() {
        let cfg = SynthConfig {
            n_users: 50,
            n_items: 100,
            mean_likes: 10.0,
            ..SynthConfig::with_topics(1, 2)
        };
        let data = generate(&cfg).unwrap();
        assert!(data.item_topic.iter().all(|&t| t == 0));
        assert!(data.affinities.iter().all(|a| a == &vec![1.0]));
    }

    #[test]
    fn labels_cover_all_users_and_traits_are_on_scale() {
        let data = generate(&small(1)).unwrap();
        for col in data.labels.binary.values() {
            assert!(col.iter().all(Option::is_some));
        }
        for col in data.labels.continuous.values() {
            assert!(col.iter().all(|v| v.is_some_and(|x| (1.0..=5.0).contains(&x))));
        }
        assert_eq!(data.labels.continuous.len(), 5);
    }

    #[test]
    fn inventory_exhaustion_is_topped_up() {
        // One topic of 20 items, 15 likes each: sampling by popularity may stall.
        let cfg = SynthConfig {
            n_users: 5,
            n_items: 20,
            mean_likes: 20.0,
            popularity_exponent: 6.0,
            ..SynthConfig::with_topics(1, 3)
        };
        let data = generate(&cfg).unwrap();
        assert!(data.diagnostics.resampled_users > 0);
        for (u, row) in data.footprints.rows().iter().enumerate() {
            assert!(!row.is_empty(), "user {u}");
        }
    }

    #[test]
    fn invalid_config() {
        let mut cfg = small(0);
        cfg.mean_likes = 1e9;
        assert!(generate(&cfg).is_err());
    }
}
