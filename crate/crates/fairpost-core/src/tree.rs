//! Random forests and gradient-boosted trees over one flat tree layout.
//!
//! Both learners assemble axis-aligned CART trees from presorted
//! per-feature row lists: the candidate thresholds at a node are the
//! midpoints between consecutive distinct sorted values, and the chosen
//! split stably partitions every feature's list so children inherit sorted
//! order without re-sorting. Bootstrap resampling enters as integer row
//! multiplicities, never row copies.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::sigmoid;
use crate::rng::{self, ChaCha8Rng};

/// Flat tree node; `feature < 0` marks a leaf carrying `value`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Node {
    pub feature: i32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub value: f64,
}

impl Node {
    fn leaf(value: f64) -> Self {
        Self { feature: -1, threshold: 0.0, left: 0, right: 0, value }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl DecisionTree {
    /// Routes one full input row (features with the protected column last).
    pub fn eval(&self, row: &[f64]) -> f64 {
        let mut idx = 0usize;
        loop {
            let n = self.nodes[idx];
            if n.feature < 0 {
                return n.value;
            }
            idx = if row[n.feature as usize] <= n.threshold { n.left } else { n.right } as usize;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Fraction of input columns tried per split; `None` means `sqrt(d)/d`.
    pub feature_subsample: Option<f64>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: 12,
            min_samples_leaf: 5,
            feature_subsample: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub tree_seeds: Vec<u64>,
    pub feature_subsample: f64,
    pub n_inputs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GbtConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        Self { n_trees: 200, max_depth: 3, learning_rate: 0.1, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GbtModel {
    pub trees: Vec<DecisionTree>,
    pub learning_rate: f64,
    /// Initial log-odds of the training positive rate.
    pub base_score: f64,
    pub n_inputs: usize,
}

/// Input column `j` of row `i`: the features, then the protected attribute.
fn input_val(ds: &Dataset, i: usize, j: usize) -> f64 {
    if j < ds.d() { ds.row(i)[j] } else { ds.a()[i] as f64 }
}

/// Per-feature row ids sorted by value (ties by row id), built once per fit.
struct Presort {
    rows: Vec<Vec<u32>>,
    vals: Vec<Vec<f64>>,
}

fn presort(ds: &Dataset) -> Presort {
    let n = ds.n();
    let d = ds.d() + 1;
    let mut rows = Vec::with_capacity(d);
    let mut vals = Vec::with_capacity(d);
    for j in 0..d {
        let mut idx: Vec<u32> = (0..n as u32).collect();
        idx.sort_unstable_by(|&l, &r| {
            input_val(ds, l as usize, j)
                .partial_cmp(&input_val(ds, r as usize, j))
                .unwrap()
                .then(l.cmp(&r))
        });
        let v: Vec<f64> = idx.iter().map(|&i| input_val(ds, i as usize, j)).collect();
        rows.push(idx);
        vals.push(v);
    }
    Presort { rows, vals }
}

enum Target<'a> {
    Gini { y: &'a [u8] },
    Variance { r: &'a [f64], h: &'a [f64] },
}

impl Target<'_> {
    fn value(&self, row: usize) -> f64 {
        match self {
            Target::Gini { y } => y[row] as f64,
            Target::Variance { r, .. } => r[row],
        }
    }
}

struct NodeAgg {
    w: f64,
    t: f64, // weighted positive count (Gini) or weighted residual sum
    h: f64, // weighted hessian sum (Variance only)
    t_min: f64,
    t_max: f64,
}

struct Builder<'a> {
    d: usize,
    msl: f64,
    max_depth: usize,
    mtry: usize,
    weights: &'a [f64],
    target: Target<'a>,
    rows: Vec<Vec<u32>>,
    vals: Vec<Vec<f64>>,
    aux_rows: Vec<u32>,
    aux_vals: Vec<f64>,
    feats: Vec<u32>,
    go_left: Vec<bool>,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
}

struct BestSplit {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    /// Weighted impurity contribution of one side (lower is better).
    fn side_score(&self, w: f64, t: f64) -> f64 {
        match self.target {
            // w * Gini = w - (pos^2 + neg^2) / w
            Target::Gini { .. } => w - (t * t + (w - t) * (w - t)) / w,
            // Negated between-sum term of the weighted SSE decomposition.
            Target::Variance { .. } => -(t * t) / w,
        }
    }

    fn aggregate(&self, lo: usize, hi: usize) -> NodeAgg {
        let mut agg =
            NodeAgg { w: 0.0, t: 0.0, h: 0.0, t_min: f64::INFINITY, t_max: f64::NEG_INFINITY };
        for &row in &self.rows[0][lo..hi] {
            let row = row as usize;
            let w = self.weights[row];
            let t = self.target.value(row);
            agg.w += w;
            agg.t += w * t;
            if let Target::Variance { h, .. } = self.target {
                agg.h += w * h[row];
            }
            agg.t_min = agg.t_min.min(t);
            agg.t_max = agg.t_max.max(t);
        }
        agg
    }

    fn is_pure(&self, agg: &NodeAgg) -> bool {
        match self.target {
            Target::Gini { .. } => agg.t == 0.0 || agg.t == agg.w,
            Target::Variance { .. } => agg.t_min == agg.t_max,
        }
    }

    fn leaf_value(&self, agg: &NodeAgg) -> f64 {
        match self.target {
            Target::Gini { .. } => agg.t / agg.w,
            // Newton step on log-loss: residual sum over hessian sum.
            Target::Variance { .. } => agg.t / agg.h.max(1e-12),
        }
    }

    /// Samples `mtry` candidate features into the sorted prefix of
    /// `self.feats`; with full mtry the identity order is kept untouched.
    fn select_features(&mut self) -> usize {
        if self.mtry >= self.d {
            return self.d;
        }
        rng::partial_shuffle(&mut self.rng, &mut self.feats, self.mtry);
        self.feats[..self.mtry].sort_unstable();
        self.mtry
    }

    /// Best split over the sampled features, or `None` when nothing beats
    /// the unsplit node. Ties keep the first candidate found, i.e. the
    /// lowest feature index, then the lowest threshold.
    fn scan(&self, lo: usize, hi: usize, agg: &NodeAgg, n_feats: usize) -> Option<BestSplit> {
        let parent = self.side_score(agg.w, agg.t);
        let mut best =
            BestSplit { score: parent, feature: usize::MAX, threshold: 0.0 };
        for &f in &self.feats[..n_feats] {
            let f = f as usize;
            let rs = &self.rows[f][lo..hi];
            let vs = &self.vals[f][lo..hi];
            let mut wl = 0.0;
            let mut tl = 0.0;
            let mut prev = vs[0];
            for k in 0..rs.len() {
                let v = vs[k];
                if v > prev {
                    let wr = agg.w - wl;
                    if wl >= self.msl && wr >= self.msl {
                        let score = self.side_score(wl, tl) + self.side_score(wr, agg.t - tl);
                        if score < best.score {
                            best = BestSplit {
                                score,
                                feature: f,
                                threshold: 0.5 * (prev + v),
                            };
                        }
                    }
                    prev = v;
                }
                let row = rs[k] as usize;
                let w = self.weights[row];
                wl += w;
                tl += w * self.target.value(row);
            }
        }
        (best.feature != usize::MAX).then_some(best)
    }

    /// Marks rows routed left and returns how many list slots they occupy.
    fn mark(&mut self, feature: usize, threshold: f64, lo: usize, hi: usize) -> usize {
        let mut n_left = 0;
        for k in lo..hi {
            let row = self.rows[feature][k] as usize;
            let left = self.vals[feature][k] <= threshold;
            self.go_left[row] = left;
            n_left += usize::from(left);
        }
        n_left
    }

    /// Stable-partitions every feature list so left-routed rows occupy
    /// `[lo, lo + n_left)`, preserving sorted order on both sides.
    fn partition(&mut self, lo: usize, hi: usize, n_left: usize) {
        let len = hi - lo;
        for f in 0..self.d {
            let mut li = 0;
            let mut ri = n_left;
            for k in lo..hi {
                let row = self.rows[f][k];
                let v = self.vals[f][k];
                if self.go_left[row as usize] {
                    self.aux_rows[li] = row;
                    self.aux_vals[li] = v;
                    li += 1;
                } else {
                    self.aux_rows[ri] = row;
                    self.aux_vals[ri] = v;
                    ri += 1;
                }
            }
            self.rows[f][lo..hi].copy_from_slice(&self.aux_rows[..len]);
            self.vals[f][lo..hi].copy_from_slice(&self.aux_vals[..len]);
        }
    }

    fn build(&mut self, lo: usize, hi: usize, depth: usize) -> u32 {
        let agg = self.aggregate(lo, hi);
        let idx = self.nodes.len() as u32;
        if depth >= self.max_depth || agg.w < 2.0 * self.msl || self.is_pure(&agg) {
            self.nodes.push(Node::leaf(self.leaf_value(&agg)));
            return idx;
        }
        let n_feats = self.select_features();
        let Some(split) = self.scan(lo, hi, &agg, n_feats) else {
            self.nodes.push(Node::leaf(self.leaf_value(&agg)));
            return idx;
        };
        let n_left = self.mark(split.feature, split.threshold, lo, hi);
        self.partition(lo, hi, n_left);
        self.nodes.push(Node {
            feature: split.feature as i32,
            threshold: split.threshold,
            left: 0,
            right: 0,
            value: self.leaf_value(&agg),
        });
        let left = self.build(lo, lo + n_left, depth + 1);
        let right = self.build(lo + n_left, hi, depth + 1);
        self.nodes[idx as usize].left = left;
        self.nodes[idx as usize].right = right;
        idx
    }
}

/// Root lists: the presorted lists restricted to rows with weight > 0.
fn in_bag_lists(pre: &Presort, weights: &[f64]) -> (Vec<Vec<u32>>, Vec<Vec<f64>>, usize) {
    let d = pre.rows.len();
    let mut rows = Vec::with_capacity(d);
    let mut vals = Vec::with_capacity(d);
    let mut m = 0;
    for f in 0..d {
        let mut rf = Vec::new();
        let mut vf = Vec::new();
        for k in 0..pre.rows[f].len() {
            let row = pre.rows[f][k];
            if weights[row as usize] > 0.0 {
                rf.push(row);
                vf.push(pre.vals[f][k]);
            }
        }
        m = rf.len();
        rows.push(rf);
        vals.push(vf);
    }
    (rows, vals, m)
}

fn mtry_from_fraction(frac: Option<f64>, d: usize) -> usize {
    let frac = frac.unwrap_or_else(|| libm::sqrt(d as f64) / d as f64);
    let raw = libm::floor(frac * d as f64 + 1e-9) as usize;
    raw.clamp(1, d)
}

/// CART forest with Gini impurity and bootstrap multiset weights.
pub fn train_forest(train: &Dataset, cfg: &ForestConfig) -> Result<ForestModel> {
    if train.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if cfg.n_trees == 0 {
        return Err(Error::InvalidConfig(alloc::string::String::from(
            "forest needs at least one tree",
        )));
    }
    let n = train.n();
    let d = train.d() + 1;
    let pre = presort(train);
    let frac = cfg.feature_subsample.unwrap_or_else(|| libm::sqrt(d as f64) / d as f64);
    let mtry = mtry_from_fraction(cfg.feature_subsample, d);

    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut tree_seeds = Vec::with_capacity(cfg.n_trees);
    let mut weights = vec![0.0f64; n];
    for t in 0..cfg.n_trees {
        let seed = cfg.seed.wrapping_add(t as u64);
        let mut tree_rng = rng::seeded(seed);
        if cfg.bootstrap {
            weights.fill(0.0);
            for _ in 0..n {
                weights[rng::index(&mut tree_rng, n)] += 1.0;
            }
        } else {
            weights.fill(1.0);
        }
        let (rows, vals, m) = in_bag_lists(&pre, &weights);
        let mut builder = Builder {
            d,
            msl: cfg.min_samples_leaf as f64,
            max_depth: cfg.max_depth,
            mtry,
            weights: &weights,
            target: Target::Gini { y: train.y() },
            rows,
            vals,
            aux_rows: vec![0; m],
            aux_vals: vec![0.0; m],
            feats: (0..d as u32).collect(),
            go_left: vec![false; n],
            nodes: Vec::new(),
            rng: tree_rng,
        };
        builder.build(0, m, 0);
        trees.push(DecisionTree {
            nodes: builder.nodes,
            max_depth: cfg.max_depth,
            min_samples_leaf: cfg.min_samples_leaf,
        });
        tree_seeds.push(seed);
    }
    Ok(ForestModel { trees, tree_seeds, feature_subsample: frac, n_inputs: d })
}

impl ForestModel {
    /// Mean of per-tree leaf fractions; always inside [0, 1].
    pub fn predict_proba(&self, x: &[f64], a: u8) -> Result<f64> {
        if x.len() + 1 != self.n_inputs {
            return Err(Error::ShapeMismatch { expected: self.n_inputs - 1, got: x.len() });
        }
        let mut row = Vec::with_capacity(self.n_inputs);
        row.extend_from_slice(x);
        row.push(a as f64);
        let sum: f64 = self.trees.iter().map(|t| t.eval(&row)).sum();
        Ok(sum / self.trees.len() as f64)
    }
}

/// Stagewise regression trees on log-loss residuals `y − p` with Newton
/// leaf values, no bootstrap, and all features at every split.
pub fn train_gbt(train: &Dataset, cfg: &GbtConfig) -> Result<GbtModel> {
    if train.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = train.n();
    let d = train.d() + 1;
    let pos_rate = train.y().iter().map(|&y| y as f64).sum::<f64>() / n as f64;
    let p0 = pos_rate.clamp(1e-6, 1.0 - 1e-6);
    let base_score = libm::log(p0 / (1.0 - p0));

    let mut model =
        GbtModel { trees: Vec::with_capacity(cfg.n_trees), learning_rate: cfg.learning_rate, base_score, n_inputs: d };
    if cfg.n_trees == 0 {
        return Ok(model);
    }

    let pre = presort(train);
    // Dense design rows for evaluating each new tree on the training set.
    let mut design = Vec::with_capacity(n * d);
    for i in 0..n {
        design.extend_from_slice(train.row(i));
        design.push(train.a()[i] as f64);
    }
    let weights = vec![1.0f64; n];
    let mut f_vals = vec![base_score; n];
    let mut resid = vec![0.0f64; n];
    let mut hess = vec![0.0f64; n];

    for _ in 0..cfg.n_trees {
        for i in 0..n {
            let p = sigmoid(f_vals[i]);
            resid[i] = train.y()[i] as f64 - p;
            hess[i] = p * (1.0 - p);
        }
        let (rows, vals, m) = in_bag_lists(&pre, &weights);
        let mut builder = Builder {
            d,
            msl: 1.0,
            max_depth: cfg.max_depth,
            mtry: d,
            weights: &weights,
            target: Target::Variance { r: &resid, h: &hess },
            rows,
            vals,
            aux_rows: vec![0; m],
            aux_vals: vec![0.0; m],
            feats: (0..d as u32).collect(),
            go_left: vec![false; n],
            nodes: Vec::new(),
            rng: rng::seeded(cfg.seed),
        };
        builder.build(0, m, 0);
        let tree =
            DecisionTree { nodes: builder.nodes, max_depth: cfg.max_depth, min_samples_leaf: 1 };
        for i in 0..n {
            f_vals[i] += cfg.learning_rate * tree.eval(&design[i * d..(i + 1) * d]);
        }
        model.trees.push(tree);
    }
    Ok(model)
}

impl GbtModel {
    pub fn predict_proba(&self, x: &[f64], a: u8) -> Result<f64> {
        if x.len() + 1 != self.n_inputs {
            return Err(Error::ShapeMismatch { expected: self.n_inputs - 1, got: x.len() });
        }
        let mut row = Vec::with_capacity(self.n_inputs);
        row.extend_from_slice(x);
        row.push(a as f64);
        let mut z = self.base_score;
        for t in &self.trees {
            z += self.learning_rate * t.eval(&row);
        }
        Ok(sigmoid(z))
    }
}
