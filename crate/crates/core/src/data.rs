//! Sparse binary footprint matrices, trait labels, and the temporal
//! drop / re-add manipulation used to simulate users acquiring new footprints.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{CloakError, Result};
use crate::{rng, round_count};

/// Binary user×item matrix stored as one ascending list of active items per user.
#[derive(Debug, Clone, PartialEq)]
pub struct FootprintMatrix {
    rows: Vec<Vec<usize>>,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
}

fn index_map(ids: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), i).is_some() {
            return Err(CloakError::InvalidArgument(format!(
                "duplicate {what} id `{id}`"
            )));
        }
    }
    Ok(map)
}

impl FootprintMatrix {
    /// Builds a matrix from per-user rows. Rows are sorted and deduplicated.
    pub fn new(
        user_ids: Vec<String>,
        item_ids: Vec<String>,
        mut rows: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if rows.len() != user_ids.len() {
            return Err(CloakError::InvalidArgument(format!(
                "{} rows for {} users",
                rows.len(),
                user_ids.len()
            )));
        }
        let n_items = item_ids.len();
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            if row.last().is_some_and(|&j| j >= n_items) {
                return Err(CloakError::InvalidArgument(format!(
                    "item index out of range (n_items = {n_items})"
                )));
            }
        }
        let user_index = index_map(&user_ids, "user")?;
        let item_index = index_map(&item_ids, "item")?;
        Ok(FootprintMatrix {
            rows,
            user_ids,
            item_ids,
            user_index,
            item_index,
        })
    }

    pub fn n_users(&self) -> usize {
        self.rows.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn row(&self, user: usize) -> &[usize] {
        &self.rows[user]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).copied()
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).copied()
    }

    /// Number of active entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Share of zero entries.
    pub fn sparsity(&self) -> f64 {
        let cells = self.n_users() as f64 * self.n_items() as f64;
        if cells == 0.0 {
            return 1.0;
        }
        1.0 - self.nnz() as f64 / cells
    }

    /// Occurrence count of every item.
    pub fn item_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_items()];
        for row in &self.rows {
            for &j in row {
                counts[j] += 1;
            }
        }
        counts
    }

    /// Same users and items, different rows.
    pub fn with_rows(&self, rows: Vec<Vec<usize>>) -> Result<Self> {
        FootprintMatrix::new(self.user_ids.clone(), self.item_ids.clone(), rows)
    }

    /// Row slices for a subset of users, in the given order.
    pub fn row_slices<'a>(&'a self, users: &[usize]) -> Vec<&'a [usize]> {
        users.iter().map(|&u| self.rows[u].as_slice()).collect()
    }

    /// A new matrix holding only the given users (item space unchanged).
    pub fn select_users(&self, users: &[usize]) -> FootprintMatrix {
        let user_ids: Vec<String> = users.iter().map(|&u| self.user_ids[u].clone()).collect();
        let rows = users.iter().map(|&u| self.rows[u].clone()).collect();
        let user_index = user_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        FootprintMatrix {
            rows,
            user_ids,
            item_ids: self.item_ids.clone(),
            user_index,
            item_index: self.item_index.clone(),
        }
    }

    pub fn external_items(&self, items: &[usize]) -> Vec<String> {
        items.iter().map(|&j| self.item_ids[j].clone()).collect()
    }
}

fn sniff_delimiter(first_line: &str) -> u8 {
    if first_line.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn first_line(path: &Path) -> Result<Option<String>> {
    let file = File::open(path).map_err(|e| CloakError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let n = reader
        .read_line(&mut line)
        .map_err(|e| CloakError::io(path, e))?;
    Ok((n > 0).then_some(line))
}

fn csv_reader(path: &Path) -> Result<Option<csv::Reader<File>>> {
    let Some(first) = first_line(path)? else {
        return Ok(None);
    };
    let reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .delimiter(sniff_delimiter(&first))
        .from_path(path)
        .map_err(|e| CloakError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?;
    Ok(Some(reader))
}

const USER_HEADERS: &[&str] = &["user", "user_id", "userid", "uid"];

fn is_header(record: &csv::StringRecord, second: &[&str]) -> bool {
    let lower = |i: usize| record.get(i).map(str::to_ascii_lowercase);
    lower(0).is_some_and(|s| USER_HEADERS.contains(&s.as_str()))
        && lower(1).is_some_and(|s| second.contains(&s.as_str()))
}

/// Iterates records of a small delimited file, skipping a recognised header.
fn for_each_record(
    path: &Path,
    header_second: &[&str],
    fields: usize,
    mut f: impl FnMut(u64, &csv::StringRecord) -> Result<()>,
) -> Result<()> {
    let Some(mut reader) = csv_reader(path)? else {
        return Ok(());
    };
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| CloakError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if first {
            first = false;
            if is_header(&record, header_second) {
                continue;
            }
        }
        if record.len() != fields || record.iter().any(str::is_empty) {
            return Err(CloakError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {fields} non-empty fields, found {:?}", record),
            });
        }
        f(line, &record)?;
    }
    Ok(())
}

/// Reads `user_id,item_id` records (comma or tab separated, optional header).
///
/// Duplicate pairs collapse; ids are indexed in first-seen order.
pub fn load_triplets(path: impl AsRef<Path>) -> Result<FootprintMatrix> {
    let path = path.as_ref();
    let mut user_ids = Vec::new();
    let mut item_ids = Vec::new();
    let mut users: HashMap<String, usize> = HashMap::new();
    let mut items: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<usize>> = Vec::new();
    for_each_record(
        path,
        &["item", "item_id", "itemid", "page", "page_id", "like"],
        2,
        |_, rec| {
            let u = *users.entry(rec[0].to_string()).or_insert_with(|| {
                user_ids.push(rec[0].to_string());
                rows.push(Vec::new());
                user_ids.len() - 1
            });
            let i = *items.entry(rec[1].to_string()).or_insert_with(|| {
                item_ids.push(rec[1].to_string());
                item_ids.len() - 1
            });
            rows[u].push(i);
            Ok(())
        },
    )?;
    FootprintMatrix::new(user_ids, item_ids, rows)
}

pub fn write_triplets(m: &FootprintMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("user_id,item_id\n");
    for (u, row) in m.rows.iter().enumerate() {
        for &j in row {
            out.push_str(&m.user_ids[u]);
            out.push(',');
            out.push_str(&m.item_ids[j]);
            out.push('\n');
        }
    }
    std::fs::write(path, out).map_err(|e| CloakError::io(path, e))
}

/// Binary task labels and continuous trait scores aligned with matrix users.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelTable {
    pub binary: BTreeMap<String, Vec<Option<bool>>>,
    pub continuous: BTreeMap<String, Vec<Option<f64>>>,
}

impl LabelTable {
    pub fn empty(n_users: usize, binary: &[&str], continuous: &[&str]) -> Self {
        LabelTable {
            binary: binary
                .iter()
                .map(|t| (t.to_string(), vec![None; n_users]))
                .collect(),
            continuous: continuous
                .iter()
                .map(|t| (t.to_string(), vec![None; n_users]))
                .collect(),
        }
    }

    pub fn binary(&self, task: &str) -> Result<&[Option<bool>]> {
        self.binary
            .get(task)
            .map(Vec::as_slice)
            .ok_or_else(|| CloakError::UnknownTask(task.to_string()))
    }

    pub fn continuous(&self, task: &str) -> Result<&[Option<f64>]> {
        self.continuous
            .get(task)
            .map(Vec::as_slice)
            .ok_or_else(|| CloakError::UnknownTask(task.to_string()))
    }

    pub fn select_users(&self, users: &[usize]) -> LabelTable {
        LabelTable {
            binary: self
                .binary
                .iter()
                .map(|(k, v)| (k.clone(), users.iter().map(|&u| v[u]).collect()))
                .collect(),
            continuous: self
                .continuous
                .iter()
                .map(|(k, v)| (k.clone(), users.iter().map(|&u| v[u]).collect()))
                .collect(),
        }
    }

    /// Reads `user_id,task_name,value` records. A task whose every value is
    /// literally `0` or `1` is binary; any other task is continuous.
    /// Labels of users absent from `m` are ignored.
    pub fn load(path: impl AsRef<Path>, m: &FootprintMatrix) -> Result<LabelTable> {
        let path = path.as_ref();
        let mut raw: BTreeMap<String, Vec<(usize, String, u64)>> = BTreeMap::new();
        let mut unknown = 0usize;
        for_each_record(path, &["task", "task_name", "trait"], 3, |line, rec| {
            match m.user_index(&rec[0]) {
                Some(u) => raw
                    .entry(rec[1].to_string())
                    .or_default()
                    .push((u, rec[2].to_string(), line)),
                None => unknown += 1,
            }
            Ok(())
        })?;
        if unknown > 0 {
            log::warn!("{unknown} label records refer to users not in the footprint matrix");
        }
        let mut table = LabelTable::default();
        for (task, values) in raw {
            let is_binary = values.iter().all(|(_, v, _)| v == "0" || v == "1");
            if is_binary {
                let mut col = vec![None; m.n_users()];
                for (u, v, _) in values {
                    col[u] = Some(v == "1");
                }
                table.binary.insert(task, col);
            } else {
                let mut col = vec![None; m.n_users()];
                for (u, v, line) in values {
                    let x: f64 = v.parse().ok().filter(|x: &f64| x.is_finite()).ok_or_else(|| {
                        CloakError::Parse {
                            path: path.to_path_buf(),
                            line,
                            message: format!("label value `{v}` is not a finite number"),
                        }
                    })?;
                    col[u] = Some(x);
                }
                table.continuous.insert(task, col);
            }
        }
        Ok(table)
    }

    pub fn write(&self, m: &FootprintMatrix, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("user_id,task_name,value\n");
        for (task, col) in &self.binary {
            for (u, v) in col.iter().enumerate() {
                if let Some(v) = v {
                    out.push_str(&format!("{},{},{}\n", m.user_ids[u], task, u8::from(*v)));
                }
            }
        }
        for (task, col) in &self.continuous {
            for (u, v) in col.iter().enumerate() {
                if let Some(v) = v {
                    out.push_str(&format!("{},{},{:.6}\n", m.user_ids[u], task, v));
                }
            }
        }
        std::fs::write(path, out).map_err(|e| CloakError::io(path, e))
    }
}

/// Removes items with fewer than `min_item` occurrences, then users with fewer
/// than `min_user` remaining likes. One pass each, in that order.
pub fn filter_min_activity(
    m: &FootprintMatrix,
    labels: &LabelTable,
    min_user: usize,
    min_item: usize,
) -> (FootprintMatrix, LabelTable) {
    let counts = m.item_counts();
    let mut item_map = vec![usize::MAX; m.n_items()];
    let mut item_ids = Vec::new();
    for (j, &c) in counts.iter().enumerate() {
        if c >= min_item {
            item_map[j] = item_ids.len();
            item_ids.push(m.item_ids[j].clone());
        }
    }
    let mut kept_users = Vec::new();
    let mut rows = Vec::new();
    for (u, row) in m.rows.iter().enumerate() {
        let new_row: Vec<usize> = row
            .iter()
            .filter_map(|&j| (item_map[j] != usize::MAX).then_some(item_map[j]))
            .collect();
        if new_row.len() >= min_user {
            kept_users.push(u);
            rows.push(new_row);
        }
    }
    let user_ids = kept_users.iter().map(|&u| m.user_ids[u].clone()).collect();
    let matrix = FootprintMatrix::new(user_ids, item_ids, rows)
        .expect("filtered ids stay unique and rows stay in range");
    (matrix, labels.select_users(&kept_users))
}

/// Disjoint train/test partition of user indices (each sorted ascending).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Random user partition with `round(n·train_frac)` training users.
pub fn split_train_test(m: &FootprintMatrix, train_frac: f64, seed: u64) -> Result<Split> {
    let n = m.n_users();
    if n < 2 {
        return Err(CloakError::InvalidArgument(format!(
            "need at least 2 users to split, found {n}"
        )));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(CloakError::InvalidArgument(format!(
            "train_frac must be in (0,1), got {train_frac}"
        )));
    }
    let n_train = round_count(n as f64 * train_frac).clamp(1, n - 1);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(seed, 0));
    let mut train = perm[..n_train].to_vec();
    let mut test = perm[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Per-user dropped items, in a fixed random order so re-adds are nested.
#[derive(Debug, Clone, PartialEq)]
pub struct DropPlan {
    pub seed: u64,
    pub drop_fraction: f64,
    /// `dropped[u]` lists the dropped items of user `u` in re-add order.
    pub dropped: Vec<Vec<usize>>,
}

pub fn make_drop_plan(m: &FootprintMatrix, drop_fraction: f64, seed: u64) -> Result<DropPlan> {
    if !(0.0..=1.0).contains(&drop_fraction) {
        return Err(CloakError::InvalidArgument(format!(
            "drop_fraction must be in [0,1], got {drop_fraction}"
        )));
    }
    let dropped = m
        .rows
        .iter()
        .enumerate()
        .map(|(u, row)| {
            let mut perm = row.clone();
            perm.shuffle(&mut rng::stream(seed, u as u64));
            perm.truncate(round_count(drop_fraction * row.len() as f64));
            perm
        })
        .collect();
    Ok(DropPlan {
        seed,
        drop_fraction,
        dropped,
    })
}

#[derive(Serialize, Deserialize)]
struct DropPlanFile {
    seed: u64,
    drop_fraction: f64,
    users: Vec<DropPlanUser>,
}

#[derive(Serialize, Deserialize)]
struct DropPlanUser {
    user_id: String,
    dropped: Vec<String>,
}

impl DropPlan {
    /// The matrix with every planned item removed.
    pub fn reduced(&self, m: &FootprintMatrix) -> FootprintMatrix {
        let rows = m
            .rows
            .iter()
            .zip(&self.dropped)
            .map(|(row, dropped)| {
                let mut d = dropped.clone();
                d.sort_unstable();
                row.iter()
                    .copied()
                    .filter(|j| d.binary_search(j).is_err())
                    .collect()
            })
            .collect();
        m.with_rows(rows).expect("subset rows stay valid")
    }

    /// The plan restricted to a subset of users (same order as `users`).
    pub fn select_users(&self, users: &[usize]) -> DropPlan {
        DropPlan {
            seed: self.seed,
            drop_fraction: self.drop_fraction,
            dropped: users.iter().map(|&u| self.dropped[u].clone()).collect(),
        }
    }

    pub fn to_json(&self, m: &FootprintMatrix) -> Result<String> {
        let file = DropPlanFile {
            seed: self.seed,
            drop_fraction: self.drop_fraction,
            users: self
                .dropped
                .iter()
                .enumerate()
                .map(|(u, d)| DropPlanUser {
                    user_id: m.user_ids[u].clone(),
                    dropped: m.external_items(d),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(json: &str, m: &FootprintMatrix) -> Result<DropPlan> {
        let file: DropPlanFile = serde_json::from_str(json)?;
        let mut dropped = vec![Vec::new(); m.n_users()];
        for user in file.users {
            let u = m
                .user_index(&user.user_id)
                .ok_or_else(|| CloakError::UnknownUser(user.user_id.clone()))?;
            dropped[u] = user
                .dropped
                .iter()
                .map(|id| {
                    m.item_index(id).ok_or_else(|| {
                        CloakError::InvalidArgument(format!("unknown item `{id}` in drop plan"))
                    })
                })
                .collect::<Result<_>>()?;
        }
        Ok(DropPlan {
            seed: file.seed,
            drop_fraction: file.drop_fraction,
            dropped,
        })
    }
}

/// Re-adds the first `round(fraction·|dropped|)` planned items of every user.
pub fn readd(m_reduced: &FootprintMatrix, plan: &DropPlan, fraction: f64) -> Result<FootprintMatrix> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CloakError::InvalidArgument(format!(
            "re-add fraction must be in [0,1], got {fraction}"
        )));
    }
    if plan.dropped.len() != m_reduced.n_users() {
        return Err(CloakError::InvalidArgument(
            "drop plan does not match matrix users".into(),
        ));
    }
    let rows = m_reduced
        .rows
        .iter()
        .zip(&plan.dropped)
        .map(|(row, dropped)| {
            let n = round_count(fraction * dropped.len() as f64);
            let mut r = row.clone();
            r.extend_from_slice(&dropped[..n]);
            r
        })
        .collect();
    m_reduced.with_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn triplets_basic() {
        let f = write_tmp("u1,a\nu1,b\nu2,a\n");
        let m = load_triplets(f.path()).unwrap();
        assert_eq!((m.n_users(), m.n_items()), (2, 2));
        assert_eq!(m.row(0), &[0, 1]);
        assert_eq!(m.row(1), &[0]);
        assert_eq!(m.user_ids(), &["u1", "u2"]);
    }

    #[test]
    fn triplets_duplicates_and_header() {
        let f = write_tmp("user_id\titem_id\nu1\ta\nu1\ta\n");
        let m = load_triplets(f.path()).unwrap();
        assert_eq!(m.n_users(), 1);
        assert_eq!(m.row(0), &[0]);
    }

    #[test]
    fn triplets_empty_file() {
        let f = write_tmp("");
        let m = load_triplets(f.path()).unwrap();
        assert_eq!((m.n_users(), m.n_items()), (0, 0));
    }

    #[test]
    fn triplets_malformed_line_is_reported() {
        let f = write_tmp("u1,a\nu2\nu3,b\n");
        match load_triplets(f.path()) {
            Err(CloakError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn labels_binary_and_continuous() {
        let m = FootprintMatrix::new(ids("u", 2), ids("i", 1), vec![vec![0], vec![0]]).unwrap();
        let f = write_tmp("user_id,task_name,value\nu0,male,1\nu1,male,0\nu0,open,3.5\nzz,male,1\n");
        let t = LabelTable::load(f.path(), &m).unwrap();
        assert_eq!(t.binary("male").unwrap(), &[Some(true), Some(false)]);
        assert_eq!(t.continuous("open").unwrap(), &[Some(3.5), None]);
        assert!(t.binary("open").is_err());
    }

    #[test]
    fn labels_non_numeric_value() {
        let m = FootprintMatrix::new(ids("u", 1), ids("i", 1), vec![vec![0]]).unwrap();
        let f = write_tmp("u0,open,3.5\nu0,open,abc\n");
        assert!(matches!(
            LabelTable::load(f.path(), &m),
            Err(CloakError::Parse { line: 2, .. })
        ));
    }

    /// `n_users` users, each liking all of `items` plus nothing else.
    fn dense(n_users: usize, n_items: usize) -> FootprintMatrix {
        let rows = vec![(0..n_items).collect(); n_users];
        FootprintMatrix::new(ids("u", n_users), ids("i", n_items), rows).unwrap()
    }

    #[test]
    fn filter_removes_light_user() {
        // 10 heavy users like items 0..12; user 10 likes 9 of them.
        let mut rows: Vec<Vec<usize>> = vec![(0..12).collect(); 10];
        rows.push((0..9).collect());
        let m = FootprintMatrix::new(ids("u", 11), ids("i", 12), rows).unwrap();
        let labels = LabelTable::empty(11, &["t"], &[]);
        let (f, l) = filter_min_activity(&m, &labels, 10, 10);
        assert_eq!(f.n_users(), 10);
        assert_eq!(f.n_items(), 12);
        assert_eq!(l.binary("t").unwrap().len(), 10);
    }

    #[test]
    fn filter_keeps_boundary_item() {
        let m = dense(10, 10);
        let labels = LabelTable::default();
        let (f, _) = filter_min_activity(&m, &labels, 10, 10);
        assert_eq!(f, m);
    }

    #[test]
    fn filter_items_before_users() {
        // Item 10 is liked by one user only; that user drops to 10 likes, kept.
        let mut rows: Vec<Vec<usize>> = vec![(0..10).collect(); 10];
        rows[0].push(10);
        let m = FootprintMatrix::new(ids("u", 10), ids("i", 11), rows).unwrap();
        let (f, _) = filter_min_activity(&m, &LabelTable::default(), 10, 10);
        assert_eq!(f.n_items(), 10);
        assert_eq!(f.n_users(), 10);
        assert!(f.item_index("i10").is_none());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let m = dense(100, 1);
        let s = split_train_test(&m, 0.66, 7).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (66, 34));
        assert_eq!(s, split_train_test(&m, 0.66, 7).unwrap());
        let small = split_train_test(&dense(2, 1), 0.5, 1).unwrap();
        assert_eq!((small.train.len(), small.test.len()), (1, 1));
        assert!(split_train_test(&dense(1, 1), 0.5, 1).is_err());
    }

    #[test]
    fn drop_sizes() {
        let m = dense(1, 4);
        assert_eq!(make_drop_plan(&m, 0.5, 3).unwrap().dropped[0].len(), 2);
        assert!(make_drop_plan(&m, 0.0, 3).unwrap().dropped[0].is_empty());
        let full = make_drop_plan(&m, 1.0, 3).unwrap();
        assert_eq!(full.dropped[0].len(), 4);
        assert!(full.reduced(&m).row(0).is_empty());
    }

    #[test]
    fn readd_follows_permutation() {
        let m = dense(1, 8);
        let plan = make_drop_plan(&m, 0.5, 11).unwrap();
        let reduced = plan.reduced(&m);
        assert_eq!(readd(&reduced, &plan, 0.0).unwrap(), reduced);
        assert_eq!(readd(&reduced, &plan, 1.0).unwrap(), m);
        let half = readd(&reduced, &plan, 0.5).unwrap();
        let mut expected = reduced.row(0).to_vec();
        expected.extend_from_slice(&plan.dropped[0][..2]);
        expected.sort_unstable();
        assert_eq!(half.row(0), expected.as_slice());
        assert!(readd(&reduced, &plan, 1.5).is_err());
    }

    #[test]
    fn drop_plan_json_replays() {
        let m = dense(3, 6);
        let plan = make_drop_plan(&m, 0.5, 5).unwrap();
        let json = plan.to_json(&m).unwrap();
        assert_eq!(DropPlan::from_json(&json, &m).unwrap(), plan);
    }

    fn arb_matrix() -> impl Strategy<Value = FootprintMatrix> {
        (1usize..8, 1usize..20).prop_flat_map(|(n, m)| {
            prop::collection::vec(prop::collection::btree_set(0..m, 0..=m), n).prop_map(
                move |rows| {
                    FootprintMatrix::new(
                        ids("u", n),
                        ids("i", m),
                        rows.into_iter().map(|r| r.into_iter().collect()).collect(),
                    )
                    .unwrap()
                },
            )
        })
    }

    proptest! {
        #[test]
        fn readd_is_nested_and_invertible(
            m in arb_matrix(),
            f in 0.0f64..=1.0,
            a in 0.0f64..=1.0,
            b in 0.0f64..=1.0,
            seed in any::<u64>(),
        ) {
            let plan = make_drop_plan(&m, f, seed).unwrap();
            let reduced = plan.reduced(&m);
            for (row, d) in reduced.rows().iter().zip(&plan.dropped) {
                prop_assert!(d.iter().all(|j| row.binary_search(j).is_err()));
            }
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let small = readd(&reduced, &plan, lo).unwrap();
            let large = readd(&reduced, &plan, hi).unwrap();
            for (s, l) in small.rows().iter().zip(large.rows()) {
                prop_assert!(s.iter().all(|j| l.binary_search(j).is_ok()));
            }
            prop_assert_eq!(readd(&reduced, &plan, 1.0).unwrap(), m);
        }
    }
}
