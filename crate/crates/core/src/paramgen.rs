//! Hidden-node weight and bias generation.
//!
//! Three schemes are implemented:
//!
//! - [`gen_sm`] draws weights and biases uniformly from `[-u, u]`;
//! - [`gen_pmu`] draws weights the same way but anchors each bias with
//!   `b = -a·x*`, forcing the node's sigmoid to 0.5 at an anchor point `x*`;
//! - [`gen_pmalpha`] draws per-dimension slope angles uniformly, converts
//!   them to weights via `a = ±4·tan α`, and anchors biases the same way.
//!
//! Anchor points come from [`select_anchors`]: uniform draws in the input
//! hypercube, training samples, or k-means cluster prototypes. Each node is
//! generated from its own seed substream, so layers are reproducible and
//! independent of generation order.

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::seeding::{self, seed_serde};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const TAG_NODE: u64 = 0x10;
const TAG_ANCHOR: u64 = 0x11;
const TAG_KMEANS: u64 = 0x12;

/// Slope at a sigmoid's inflection point is `a/4`; hence `a = 4·tan α`.
const SLOPE_FACTOR: f64 = 4.0;

/// Parameter-generation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Weights and biases uniform on `[-u, u]`.
    #[serde(rename = "sm")]
    Sm,
    /// Weights uniform on `[-u, u]`, biases anchored.
    #[serde(rename = "pmu")]
    PmU,
    /// Per-dimension slope angles uniform on `[α_min, α_max]`, biases anchored.
    #[serde(rename = "pma")]
    PmAlpha,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Sm => "sm",
            Method::PmU => "pmu",
            Method::PmAlpha => "pma",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How anchor points are chosen for the anchored schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnchorStrategy {
    /// Uniform per coordinate inside the input hypercube.
    #[serde(rename = "uniform")]
    UniformInH,
    /// A training input drawn uniformly with replacement.
    #[serde(rename = "sample")]
    TrainingSample,
    /// Centroids of a k-means clustering of the training inputs (k = nodes).
    #[serde(rename = "prototype")]
    ClusterPrototype,
}

/// Hyperparameters of a generation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub method: Method,
    /// Weight bound for `Sm`/`PmU`; unused by `PmAlpha`.
    pub u: f64,
    /// Angle bounds in degrees for `PmAlpha`; unused otherwise.
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub anchor_strategy: AnchorStrategy,
    /// `Sm` variant with biases from `U(0, u)` instead of `U(-u, u)`.
    pub bias_nonnegative: bool,
    #[serde(with = "seed_serde")]
    pub seed: u64,
}

impl GenConfig {
    pub fn sm(u: f64, seed: u64) -> Self {
        GenConfig {
            method: Method::Sm,
            u,
            alpha_min: 0.0,
            alpha_max: 0.0,
            anchor_strategy: AnchorStrategy::TrainingSample,
            bias_nonnegative: false,
            seed,
        }
    }

    pub fn pmu(u: f64, anchor_strategy: AnchorStrategy, seed: u64) -> Self {
        GenConfig {
            method: Method::PmU,
            u,
            alpha_min: 0.0,
            alpha_max: 0.0,
            anchor_strategy,
            bias_nonnegative: false,
            seed,
        }
    }

    pub fn pm_alpha(
        alpha_min: f64,
        alpha_max: f64,
        anchor_strategy: AnchorStrategy,
        seed: u64,
    ) -> Self {
        GenConfig {
            method: Method::PmAlpha,
            u: 0.0,
            alpha_min,
            alpha_max,
            anchor_strategy,
            bias_nonnegative: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Sm | Method::PmU => {
                if !(self.u > 0.0) || !self.u.is_finite() {
                    return Err(Error::invalid(format!(
                        "weight bound u must be finite and positive, got {}",
                        self.u
                    )));
                }
            }
            Method::PmAlpha => {
                if !(self.alpha_min > 0.0
                    && self.alpha_min < self.alpha_max
                    && self.alpha_max <= 90.0)
                {
                    return Err(Error::invalid(format!(
                        "angle bounds must satisfy 0 < alpha_min < alpha_max <= 90, got [{}, {}]",
                        self.alpha_min, self.alpha_max
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A frozen hidden layer: `n×m` weights (column i = node i), `m` biases, and
/// for anchored schemes the `m×n` anchor matrix (row i = anchor of node i).
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    weights: DMatrix<f64>,
    biases: DVector<f64>,
    anchors: Option<DMatrix<f64>>,
    config: GenConfig,
}

impl HiddenLayer {
    pub fn from_parts(
        weights: DMatrix<f64>,
        biases: DVector<f64>,
        anchors: Option<DMatrix<f64>>,
        config: GenConfig,
    ) -> Result<Self> {
        if weights.ncols() != biases.len() {
            return Err(Error::dims(format!(
                "{} weight columns vs {} biases",
                weights.ncols(),
                biases.len()
            )));
        }
        if let Some(a) = &anchors {
            if a.nrows() != weights.ncols() || a.ncols() != weights.nrows() {
                return Err(Error::dims(format!(
                    "anchor matrix is {}x{}, expected {}x{}",
                    a.nrows(),
                    a.ncols(),
                    weights.ncols(),
                    weights.nrows()
                )));
            }
        }
        Ok(HiddenLayer {
            weights,
            biases,
            anchors,
            config,
        })
    }

    /// Number of hidden nodes `m`.
    pub fn nodes(&self) -> usize {
        self.weights.ncols()
    }

    /// Input dimension `n`.
    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn biases(&self) -> &DVector<f64> {
        &self.biases
    }

    pub fn anchors(&self) -> Option<&DMatrix<f64>> {
        self.anchors.as_ref()
    }

    pub fn config(&self) -> &GenConfig {
        &self.config
    }

    /// Weight vector of node `i` as a slice (contiguous column).
    pub fn node_weights(&self, i: usize) -> &[f64] {
        let n = self.weights.nrows();
        &self.weights.as_slice()[i * n..(i + 1) * n]
    }
}

/// Generates a layer according to `config`. Anchored methods require the
/// dataset the anchors are drawn from.
pub fn generate(
    nodes: usize,
    dim: usize,
    config: &GenConfig,
    dataset: Option<&Dataset>,
) -> Result<HiddenLayer> {
    config.validate()?;
    let need_data = || {
        dataset.ok_or_else(|| {
            Error::invalid("anchored generation requires a dataset for anchor selection")
        })
    };
    match config.method {
        Method::Sm => gen_sm_with(nodes, dim, config.u, config.bias_nonnegative, config.seed),
        Method::PmU => gen_pmu(
            nodes,
            dim,
            config.u,
            config.anchor_strategy,
            need_data()?,
            config.seed,
        ),
        Method::PmAlpha => gen_pmalpha(
            nodes,
            dim,
            config.alpha_min,
            config.alpha_max,
            config.anchor_strategy,
            need_data()?,
            config.seed,
        ),
    }
}

fn check_shape(nodes: usize, dim: usize) -> Result<()> {
    if nodes == 0 {
        return Err(Error::invalid("node count must be positive"));
    }
    if dim == 0 {
        return Err(Error::invalid("input dimension must be positive"));
    }
    Ok(())
}

/// Standard scheme: every weight and bias i.i.d. uniform on `[-u, u]`.
pub fn gen_sm(nodes: usize, dim: usize, u: f64, seed: u64) -> Result<HiddenLayer> {
    gen_sm_with(nodes, dim, u, false, seed)
}

/// [`gen_sm`] with the optional nonnegative-bias variant (`b ~ U(0, u)`).
pub fn gen_sm_with(
    nodes: usize,
    dim: usize,
    u: f64,
    bias_nonnegative: bool,
    seed: u64,
) -> Result<HiddenLayer> {
    check_shape(nodes, dim)?;
    let mut config = GenConfig::sm(u, seed);
    config.bias_nonnegative = bias_nonnegative;
    config.validate()?;

    let mut weights = vec![0.0; nodes * dim];
    let mut biases = DVector::zeros(nodes);
    for i in 0..nodes {
        let mut rng = seeding::substream(seed, TAG_NODE, i as u64);
        for w in &mut weights[i * dim..(i + 1) * dim] {
            *w = rng.random_range(-u..u);
        }
        biases[i] = if bias_nonnegative {
            rng.random_range(0.0..u)
        } else {
            rng.random_range(-u..u)
        };
    }
    HiddenLayer::from_parts(
        DMatrix::from_column_slice(dim, nodes, &weights),
        biases,
        None,
        config,
    )
}

/// Draws `count` anchor points from the dataset per `strategy`; returns a
/// `count×n` matrix with one anchor per row.
pub fn select_anchors(
    strategy: AnchorStrategy,
    count: usize,
    dataset: &Dataset,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if count == 0 {
        return Err(Error::invalid("anchor count must be positive"));
    }
    let dim = dataset.dim();
    match strategy {
        AnchorStrategy::UniformInH => {
            let cube = dataset.hypercube();
            let mut flat = vec![0.0; count * dim];
            for i in 0..count {
                let mut rng = seeding::substream(seed, TAG_ANCHOR, i as u64);
                for (j, v) in flat[i * dim..(i + 1) * dim].iter_mut().enumerate() {
                    let (lo, hi) = (cube.lower()[j], cube.upper()[j]);
                    *v = lo + (hi - lo) * rng.random::<f64>();
                }
            }
            Ok(DMatrix::from_row_slice(count, dim, &flat))
        }
        AnchorStrategy::TrainingSample => {
            let mut flat = vec![0.0; count * dim];
            for i in 0..count {
                let mut rng = seeding::substream(seed, TAG_ANCHOR, i as u64);
                let l = rng.random_range(0..dataset.n_points());
                for (j, v) in flat[i * dim..(i + 1) * dim].iter_mut().enumerate() {
                    *v = dataset.inputs()[(l, j)];
                }
            }
            Ok(DMatrix::from_row_slice(count, dim, &flat))
        }
        AnchorStrategy::ClusterPrototype => {
            if dataset.n_points() < count {
                return Err(Error::invalid(format!(
                    "cannot form {count} cluster prototypes from {} points",
                    dataset.n_points()
                )));
            }
            kmeans(
                dataset.inputs(),
                count,
                DEFAULT_KMEANS_ITERS,
                seeding::derive_seed(&[seed, TAG_KMEANS]),
            )
        }
    }
}

/// Bias that places a node's sigmoid midpoint at `anchor`: `b = -a·x*`.
pub fn compute_bias(weights: &[f64], anchor: &[f64]) -> Result<f64> {
    if weights.len() != anchor.len() {
        return Err(Error::dims(format!(
            "{}-dimensional weights vs {}-dimensional anchor",
            weights.len(),
            anchor.len()
        )));
    }
    let mut dot = 0.0;
    for (w, x) in weights.iter().zip(anchor) {
        dot += w * x;
    }
    Ok(-dot)
}

/// Anchored scheme with uniform weights: weights i.i.d. `U(-u, u)`, biases
/// from [`compute_bias`] against anchors chosen by `strategy`.
pub fn gen_pmu(
    nodes: usize,
    dim: usize,
    u: f64,
    strategy: AnchorStrategy,
    dataset: &Dataset,
    seed: u64,
) -> Result<HiddenLayer> {
    check_shape(nodes, dim)?;
    if dataset.dim() != dim {
        return Err(Error::dims(format!(
            "{dim}-dimensional layer vs {}-dimensional dataset",
            dataset.dim()
        )));
    }
    let config = GenConfig::pmu(u, strategy, seed);
    config.validate()?;

    let mut weights = vec![0.0; nodes * dim];
    for i in 0..nodes {
        let mut rng = seeding::substream(seed, TAG_NODE, i as u64);
        for w in &mut weights[i * dim..(i + 1) * dim] {
            *w = rng.random_range(-u..u);
        }
    }
    anchored_layer(weights, nodes, dim, strategy, dataset, config)
}

/// Converts a slope angle in degrees to a weight: `(-1)^sign · 4·tan α`.
pub fn angle_to_weight(alpha_deg: f64, sign: u8) -> Result<f64> {
    if !(alpha_deg > 0.0 && alpha_deg < 90.0) {
        return Err(Error::invalid(format!(
            "slope angle must lie strictly inside (0, 90) degrees, got {alpha_deg}"
        )));
    }
    if sign > 1 {
        return Err(Error::invalid(format!("sign selector must be 0 or 1, got {sign}")));
    }
    let magnitude = SLOPE_FACTOR * alpha_deg.to_radians().tan();
    Ok(if sign == 0 { magnitude } else { -magnitude })
}

/// Slope angle in degrees of a sigmoid with weight `a`: `arctan(a/4)`.
pub fn weight_to_angle(weight: f64) -> f64 {
    (weight / SLOPE_FACTOR).atan().to_degrees()
}

/// Anchored scheme with uniform slope angles: per dimension,
/// `α ~ U(alpha_min, alpha_max)` and a fair random sign give the weight
/// `(-1)^q · 4·tan α`; biases are anchored as in [`gen_pmu`].
pub fn gen_pmalpha(
    nodes: usize,
    dim: usize,
    alpha_min: f64,
    alpha_max: f64,
    strategy: AnchorStrategy,
    dataset: &Dataset,
    seed: u64,
) -> Result<HiddenLayer> {
    check_shape(nodes, dim)?;
    if dataset.dim() != dim {
        return Err(Error::dims(format!(
            "{dim}-dimensional layer vs {}-dimensional dataset",
            dataset.dim()
        )));
    }
    let config = GenConfig::pm_alpha(alpha_min, alpha_max, strategy, seed);
    config.validate()?;

    let mut weights = vec![0.0; nodes * dim];
    for i in 0..nodes {
        let mut rng = seeding::substream(seed, TAG_NODE, i as u64);
        for w in &mut weights[i * dim..(i + 1) * dim] {
            // Half-open draw keeps the tangent away from its pole at 90°;
            // a rounding hit on the bound is rejected and redrawn.
            let alpha = loop {
                let a = rng.random_range(alpha_min..alpha_max);
                if a < 90.0 {
                    break a;
                }
            };
            let q = rng.random_range(0..2u8);
            *w = angle_to_weight(alpha, q).expect("alpha in (0, 90) by construction");
        }
    }
    anchored_layer(weights, nodes, dim, strategy, dataset, config)
}

fn anchored_layer(
    weights: Vec<f64>,
    nodes: usize,
    dim: usize,
    strategy: AnchorStrategy,
    dataset: &Dataset,
    config: GenConfig,
) -> Result<HiddenLayer> {
    let anchors = select_anchors(
        strategy,
        nodes,
        dataset,
        seeding::derive_seed(&[config.seed, TAG_ANCHOR]),
    )?;
    let mut anchors_flat = vec![0.0; nodes * dim];
    for i in 0..nodes {
        for j in 0..dim {
            anchors_flat[i * dim + j] = anchors[(i, j)];
        }
    }
    let mut biases = DVector::zeros(nodes);
    for i in 0..nodes {
        biases[i] = compute_bias(
            &weights[i * dim..(i + 1) * dim],
            &anchors_flat[i * dim..(i + 1) * dim],
        )?;
    }
    HiddenLayer::from_parts(
        DMatrix::from_column_slice(dim, nodes, &weights),
        biases,
        Some(anchors),
        config,
    )
}

const DEFAULT_KMEANS_ITERS: usize = 100;

/// Lloyd's algorithm with k-means++ seeding. Returns a `k×n` centroid matrix.
/// Empty clusters are re-seeded to the point farthest from its centroid.
pub fn kmeans(
    points: &DMatrix<f64>,
    k: usize,
    max_iters: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let n_points = points.nrows();
    let dim = points.ncols();
    if k == 0 {
        return Err(Error::invalid("cluster count must be positive"));
    }
    if n_points < k {
        return Err(Error::invalid(format!(
            "cannot form {k} clusters from {n_points} points"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point_row = |l: usize| -> Vec<f64> { (0..dim).map(|j| points[(l, j)]).collect() };
    let dist2 = |l: usize, c: &[f64]| -> f64 {
        (0..dim)
            .map(|j| {
                let d = points[(l, j)] - c[j];
                d * d
            })
            .sum()
    };

    // k-means++ seeding: next centroid picked with probability proportional
    // to squared distance from the chosen set.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(point_row(rng.random_range(0..n_points)));
    let mut d2 = vec![f64::INFINITY; n_points];
    while centroids.len() < k {
        let last = centroids.last().unwrap();
        for (l, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(l, last));
        }
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n_points - 1;
            for (l, &w) in d2.iter().enumerate() {
                acc += w;
                if r < acc {
                    pick = l;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n_points)
        };
        centroids.push(point_row(pick));
    }

    let mut assign = vec![usize::MAX; n_points];
    for _ in 0..max_iters {
        let mut changed = false;
        for (l, slot) in assign.iter_mut().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = dist2(l, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if *slot != best {
                *slot = best;
                changed = true;
            }
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (l, &c) in assign.iter().enumerate() {
            counts[c] += 1;
            for (j, s) in sums[c].iter_mut().enumerate() {
                *s += points[(l, j)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (j, s) in sums[c].iter().enumerate() {
                    centroids[c][j] = s / counts[c] as f64;
                }
            } else {
                // Re-seed to the point farthest from its assigned centroid.
                let far = (0..n_points)
                    .max_by(|&a, &b| {
                        let da = dist2(a, &centroids[assign[a]]);
                        let db = dist2(b, &centroids[assign[b]]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centroids[c] = point_row(far);
                assign[far] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let flat: Vec<f64> = centroids.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(k, dim, &flat))
}
