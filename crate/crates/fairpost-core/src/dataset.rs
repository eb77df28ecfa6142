//! In-memory dataset with a binary protected attribute and binary label,
//! stratified splitting, and train-fitted standardization.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng;

/// Row-major feature matrix plus protected attribute and label vectors.
///
/// `a` and `y` are binary; by convention `a = 1` is the privileged group
/// and `y = 1` the favorable outcome. `numeric_mask` marks which columns
/// the standardizer may rescale — one-hot indicator columns stay raw.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    a: Vec<u8>,
    y: Vec<u8>,
    feature_names: Vec<String>,
    numeric_mask: Vec<bool>,
    n: usize,
    d: usize,
}

impl Dataset {
    /// Validates shapes and value ranges; both groups and both labels must
    /// be present. Loaded benchmark data always satisfies this.
    pub fn new(
        x: Vec<f64>,
        a: Vec<u8>,
        y: Vec<u8>,
        feature_names: Vec<String>,
        numeric_mask: Vec<bool>,
    ) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let ds = Self::from_parts(x, a, y, feature_names, numeric_mask)?;
        for v in 0..2u8 {
            if !ds.a.contains(&v) {
                return Err(Error::MissingGroup(v));
            }
            if !ds.y.contains(&v) {
                return Err(Error::MissingLabel(v));
            }
        }
        Ok(ds)
    }

    /// Like [`Dataset::new`] but permitting degenerate inputs — an empty
    /// set, or one missing a group or label (e.g. a pure-label training
    /// set). Consumers that need a cell report its absence at use time.
    pub fn from_parts(
        x: Vec<f64>,
        a: Vec<u8>,
        y: Vec<u8>,
        feature_names: Vec<String>,
        numeric_mask: Vec<bool>,
    ) -> Result<Self> {
        let n = a.len();
        let d = feature_names.len();
        if y.len() != n {
            return Err(Error::ShapeMismatch { expected: n, got: y.len() });
        }
        if x.len() != n * d {
            return Err(Error::ShapeMismatch { expected: n * d, got: x.len() });
        }
        if numeric_mask.len() != d {
            return Err(Error::ShapeMismatch { expected: d, got: numeric_mask.len() });
        }
        for (i, v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i / d, col: i % d });
            }
        }
        for group in [&a, &y] {
            if group.iter().any(|&v| v > 1) {
                return Err(Error::InvalidConfig(String::from(
                    "protected attribute and label must be 0 or 1",
                )));
            }
        }
        Ok(Self { x, a, y, feature_names, numeric_mask, n, d })
    }

    /// Builds without the group/label presence checks. Split halves of a
    /// degenerate dataset may lack a cell; metrics report that at use time.
    fn from_rows(parent: &Dataset, rows: &[usize]) -> Self {
        let d = parent.d;
        let mut x = Vec::with_capacity(rows.len() * d);
        let mut a = Vec::with_capacity(rows.len());
        let mut y = Vec::with_capacity(rows.len());
        for &i in rows {
            x.extend_from_slice(parent.row(i));
            a.push(parent.a[i]);
            y.push(parent.y[i]);
        }
        Self {
            x,
            a,
            y,
            feature_names: parent.feature_names.clone(),
            numeric_mask: parent.numeric_mask.clone(),
            n: rows.len(),
            d,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn a(&self) -> &[u8] {
        &self.a
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn numeric_mask(&self) -> &[bool] {
        &self.numeric_mask
    }

    /// Counts per (a, y) cell, indexed `a * 2 + y`.
    pub fn cell_counts(&self) -> [usize; 4] {
        let mut c = [0usize; 4];
        for i in 0..self.n {
            c[(self.a[i] * 2 + self.y[i]) as usize] += 1;
        }
        c
    }

    /// Group sizes `(n_{a=0}, n_{a=1})`.
    pub fn group_counts(&self) -> (usize, usize) {
        let n1 = self.a.iter().filter(|&&ai| ai == 1).count();
        (self.n - n1, n1)
    }

    fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x[i * self.d + j])
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.x[i * self.d + j] = v;
    }
}

/// Result of a stratified split.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    /// True when some (a, y) cell had fewer than two members and the
    /// stratification fell back to labels only. Callers should surface
    /// this as a warning.
    pub label_only_fallback: bool,
}

/// Splits rows into train/test, stratified on the (a, y) cells.
///
/// The train side gets `floor(train_fraction * n + 0.5)` rows overall.
/// Each cell contributes `floor(train_fraction * cell_n)` rows, and the
/// remainder is distributed to cells by descending fractional remainder
/// (ties to the lower cell index), so every cell with at least two members
/// appears on both sides. Cells with fewer than two members trigger a
/// label-only fallback. Row order within each half follows the parent.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(String::from(
            "train_fraction must lie strictly between 0 and 1",
        )));
    }
    let counts = dataset.cell_counts();
    let fallback = counts.iter().any(|&c| c < 2);
    let cell_of: fn(u8, u8) -> usize = if fallback {
        |_a, y| y as usize
    } else {
        |a, y| (a * 2 + y) as usize
    };
    let n_cells = if fallback { 2 } else { 4 };

    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); n_cells];
    for i in 0..dataset.n {
        cells[cell_of(dataset.a[i], dataset.y[i])].push(i);
    }

    let total_train = libm::floor(train_fraction * dataset.n as f64 + 0.5) as usize;
    let total_train = total_train.min(dataset.n);
    let mut takes: Vec<usize> = cells
        .iter()
        .map(|c| libm::floor(train_fraction * c.len() as f64) as usize)
        .collect();
    let mut remainders: Vec<(usize, f64)> = cells
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let exact = train_fraction * c.len() as f64;
            (k, exact - libm::floor(exact))
        })
        .collect();
    // Descending remainder, ties to the smaller cell index.
    remainders.sort_by(|l, r| r.1.partial_cmp(&l.1).unwrap().then(l.0.cmp(&r.0)));
    let mut assigned: usize = takes.iter().sum();
    for &(k, _) in remainders.iter().cycle().take(2 * n_cells) {
        if assigned >= total_train {
            break;
        }
        if takes[k] < cells[k].len() {
            takes[k] += 1;
            assigned += 1;
        }
    }

    let mut rng = rng::seeded(seed);
    let mut train_rows = Vec::with_capacity(total_train);
    let mut test_rows = Vec::with_capacity(dataset.n - total_train);
    for (k, cell) in cells.iter().enumerate() {
        let mut order = cell.clone();
        let len = order.len();
        rng::partial_shuffle(&mut rng, &mut order, len);
        train_rows.extend_from_slice(&order[..takes[k]]);
        test_rows.extend_from_slice(&order[takes[k]..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();

    Ok(Split {
        train: Dataset::from_rows(dataset, &train_rows),
        test: Dataset::from_rows(dataset, &test_rows),
        label_only_fallback: fallback,
    })
}

/// Column-wise affine transform fitted on training data.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Fits means and population standard deviations of the masked columns.
pub fn fit_standardizer(train: &Dataset) -> Standardizer {
    let d = train.d;
    let n = train.n as f64;
    let mut means = vec![0.0; d];
    let mut sds = vec![0.0; d];
    for j in 0..d {
        if !train.numeric_mask[j] {
            continue;
        }
        let mean = train.column(j).sum::<f64>() / n;
        let var = train.column(j).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        means[j] = mean;
        sds[j] = libm::sqrt(var);
    }
    Standardizer { means, sds, mask: train.numeric_mask.clone() }
}

impl Standardizer {
    /// Rescales masked columns in place; constant columns map to zero,
    /// unmasked columns pass through untouched.
    pub fn apply(&self, dataset: &mut Dataset) -> Result<()> {
        if self.mask.len() != dataset.d {
            return Err(Error::ShapeMismatch { expected: self.mask.len(), got: dataset.d });
        }
        for j in 0..dataset.d {
            if !self.mask[j] {
                continue;
            }
            for i in 0..dataset.n {
                let v = dataset.x[i * dataset.d + j];
                let z = if self.sds[j] > 0.0 { (v - self.means[j]) / self.sds[j] } else { 0.0 };
                dataset.set(i, j, z);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// n rows with the requested (a, y) cell sizes and one index feature.
    fn toy(cells: [usize; 4]) -> Dataset {
        let mut x = Vec::new();
        let mut a = Vec::new();
        let mut y = Vec::new();
        let mut i = 0.0;
        for (k, &c) in cells.iter().enumerate() {
            for _ in 0..c {
                x.push(i);
                a.push((k / 2) as u8);
                y.push((k % 2) as u8);
                i += 1.0;
            }
        }
        Dataset::new(x, a, y, vec![String::from("f0")], vec![true]).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        let err = Dataset::new(vec![1.0, 2.0], vec![0, 1], vec![0], vec![], vec![]).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
        assert!(matches!(
            Dataset::new(vec![], vec![], vec![], vec![], vec![]),
            Err(Error::EmptyDataset)
        ));
        let err =
            Dataset::new(vec![f64::NAN], vec![0], vec![0], vec![String::from("f")], vec![true])
                .unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 0 }));
    }

    #[test]
    fn constructor_requires_both_groups_and_labels() {
        let err = Dataset::new(
            vec![0.0, 1.0],
            vec![0, 0],
            vec![0, 1],
            vec![String::from("f")],
            vec![true],
        )
        .unwrap_err();
        assert_eq!(err, Error::MissingGroup(1));
        let err = Dataset::new(
            vec![0.0, 1.0],
            vec![0, 1],
            vec![1, 1],
            vec![String::from("f")],
            vec![true],
        )
        .unwrap_err();
        assert_eq!(err, Error::MissingLabel(0));
    }

    #[test]
    fn split_seventy_thirty() {
        let ds = toy([25, 25, 25, 25]);
        let s = split(&ds, 0.7, 0).unwrap();
        assert_eq!(s.train.n(), 70);
        assert_eq!(s.test.n(), 30);
        assert!(!s.label_only_fallback);
    }

    #[test]
    fn split_each_cell_seven_three() {
        let ds = toy([10, 10, 10, 10]);
        let s = split(&ds, 0.7, 123).unwrap();
        assert_eq!(s.train.cell_counts(), [7, 7, 7, 7]);
        assert_eq!(s.test.cell_counts(), [3, 3, 3, 3]);
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let ds = toy([13, 9, 21, 17]);
        let s1 = split(&ds, 0.7, 5).unwrap();
        let s2 = split(&ds, 0.7, 5).unwrap();
        assert_eq!(s1.train, s2.train);
        assert_eq!(s1.test, s2.test);
        let s3 = split(&ds, 0.7, 6).unwrap();
        assert_ne!(s1.train, s3.train);
    }

    #[test]
    fn split_falls_back_when_a_cell_is_singleton() {
        let ds = toy([1, 20, 20, 20]);
        let s = split(&ds, 0.7, 0).unwrap();
        assert!(s.label_only_fallback);
        assert_eq!(s.train.n() + s.test.n(), 61);
        // Label stratification still holds: 21 negatives, 40 positives.
        let train_pos = s.train.y().iter().filter(|&&y| y == 1).count();
        assert_eq!(train_pos, 28);
    }

    #[test]
    fn split_rejects_degenerate_fraction() {
        let ds = toy([5, 5, 5, 5]);
        assert!(split(&ds, 0.0, 0).is_err());
        assert!(split(&ds, 1.0, 0).is_err());
    }

    #[test]
    fn standardizer_hand_example() {
        let ds = Dataset::new(
            vec![1.0, 2.0, 3.0],
            vec![0, 1, 1],
            vec![0, 1, 1],
            vec![String::from("f")],
            vec![true],
        )
        .unwrap();
        let st = fit_standardizer(&ds);
        let mut out = ds.clone();
        st.apply(&mut out).unwrap();
        // Population variance of [1,2,3] is 2/3; +-1/sqrt(2/3).
        assert!((out.row(0)[0] - (-1.224_744_871_391_589)).abs() < 1e-12);
        assert!(out.row(1)[0].abs() < 1e-12);
        assert!((out.row(2)[0] - 1.224_744_871_391_589).abs() < 1e-12);
    }

    #[test]
    fn standardizer_constant_column_maps_to_zero() {
        let ds = Dataset::new(
            vec![4.0, 4.0, 4.0],
            vec![0, 1, 1],
            vec![0, 1, 1],
            vec![String::from("f")],
            vec![true],
        )
        .unwrap();
        let st = fit_standardizer(&ds);
        let mut out = ds.clone();
        st.apply(&mut out).unwrap();
        assert_eq!(out.row(0)[0], 0.0);
        assert_eq!(out.row(2)[0], 0.0);
    }

    #[test]
    fn standardizer_skips_unmasked_columns() {
        let ds = Dataset::new(
            vec![1.0, 0.0, 5.0, 1.0, 9.0, 0.0],
            vec![0, 1, 1],
            vec![0, 0, 1],
            vec![String::from("num"), String::from("onehot")],
            vec![true, false],
        )
        .unwrap();
        let st = fit_standardizer(&ds);
        let mut out = ds.clone();
        st.apply(&mut out).unwrap();
        assert_eq!(out.row(0)[1], 0.0);
        assert_eq!(out.row(1)[1], 1.0);
        assert!((out.row(0)[0] + 1.224_744_871_391_589).abs() < 1e-12);
    }

    #[test]
    fn standardized_train_has_zero_mean_unit_sd() {
        let ds = toy([10, 15, 20, 5]);
        let st = fit_standardizer(&ds);
        let mut out = ds.clone();
        st.apply(&mut out).unwrap();
        let n = out.n() as f64;
        let mean: f64 = (0..out.n()).map(|i| out.row(i)[0]).sum::<f64>() / n;
        let var: f64 = (0..out.n()).map(|i| out.row(i)[0] * out.row(i)[0]).sum::<f64>() / n;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn split_partitions_rows(
            c00 in 2usize..30, c01 in 2usize..30,
            c10 in 2usize..30, c11 in 2usize..30,
            frac in 0.2f64..0.9, seed in 0u64..1000,
        ) {
            let ds = toy([c00, c01, c10, c11]);
            let s = split(&ds, frac, seed).unwrap();
            prop_assert_eq!(s.train.n() + s.test.n(), ds.n());
            let expected = libm::floor(frac * ds.n() as f64 + 0.5) as usize;
            prop_assert_eq!(s.train.n(), expected);
            // Row identity is preserved: multiset of feature values matches.
            let mut all: Vec<f64> = (0..s.train.n()).map(|i| s.train.row(i)[0]).collect();
            all.extend((0..s.test.n()).map(|i| s.test.row(i)[0]));
            all.sort_by(|l, r| l.partial_cmp(r).unwrap());
            let orig: Vec<f64> = (0..ds.n()).map(|i| ds.row(i)[0]).collect();
            prop_assert_eq!(all, orig);
            // Per-cell take differs from the exact fraction by less than one.
            let cells = ds.cell_counts();
            let got = s.train.cell_counts();
            for k in 0..4 {
                let exact = frac * cells[k] as f64;
                prop_assert!((got[k] as f64 - exact).abs() < 1.0 + 1e-9);
            }
        }
    }
}
