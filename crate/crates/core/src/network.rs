//! Sigmoid hidden-layer evaluation, inflection-point geometry, and model
//! prediction.

use crate::datagen::Hypercube;
use crate::error::{Error, Result};
use crate::paramgen::{GenConfig, HiddenLayer};
use crate::seeding::seed_serde;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Logistic sigmoid `1/(1+e^{-z})`, evaluated on a branch that cannot
/// overflow for any finite input.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Activation matrix: entry `(l, i)` is `sigmoid(a_i · x_l + b_i)`.
///
/// The dot product accumulates coordinates in ascending order, matching
/// [`crate::paramgen::compute_bias`], so an anchored node evaluates to
/// exactly 0.5 at its own anchor.
pub fn hidden_matrix(inputs: &DMatrix<f64>, layer: &HiddenLayer) -> Result<DMatrix<f64>> {
    if inputs.ncols() != layer.input_dim() {
        return Err(Error::dims(format!(
            "{}-dimensional inputs vs {}-dimensional layer",
            inputs.ncols(),
            layer.input_dim()
        )));
    }
    let n_points = inputs.nrows();
    let nodes = layer.nodes();
    let mut h = DMatrix::zeros(n_points, nodes);
    for i in 0..nodes {
        let mut col = h.column_mut(i);
        for j in 0..layer.input_dim() {
            let w = layer.weights()[(j, i)];
            let x = inputs.column(j);
            for l in 0..n_points {
                col[l] += w * x[l];
            }
        }
        let b = layer.biases()[i];
        for l in 0..n_points {
            col[l] = sigmoid(col[l] + b);
        }
    }
    Ok(h)
}

/// Input at which a one-dimensional sigmoid crosses 0.5: `χ = -b/a`.
pub fn inflection_point_1d(a: f64, b: f64) -> Result<f64> {
    if a == 0.0 {
        return Err(Error::invalid(
            "zero weight: the node is constant and has no inflection point",
        ));
    }
    Ok(-b / a)
}

/// Whether the locus `a·x + b = 0` meets the box. Exact: the affine form's
/// range over the box is `[b + Σ min(a_j·lo_j, a_j·hi_j), b + Σ max(...)]`
/// and the locus intersects iff that range contains zero.
pub fn inflection_hyperplane_intersects(
    weights: &[f64],
    bias: f64,
    cube: &Hypercube,
) -> Result<bool> {
    if weights.len() != cube.dim() {
        return Err(Error::dims(format!(
            "{}-dimensional weights vs {}-dimensional box",
            weights.len(),
            cube.dim()
        )));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::invalid(
            "zero weight vector: no inflection hyperplane exists",
        ));
    }
    let mut lo = bias;
    let mut hi = bias;
    for (j, &w) in weights.iter().enumerate() {
        let a = w * cube.lower()[j];
        let b = w * cube.upper()[j];
        lo += a.min(b);
        hi += a.max(b);
    }
    Ok(lo <= 0.0 && 0.0 <= hi)
}

/// Checks that every anchored node evaluates to 0.5 at its anchor, within
/// `tol`. Layers without anchors pass trivially.
pub fn audit_anchoring(layer: &HiddenLayer, tol: f64) -> Result<()> {
    let Some(anchors) = layer.anchors() else {
        return Ok(());
    };
    for i in 0..layer.nodes() {
        let mut dot = 0.0;
        for (j, w) in layer.node_weights(i).iter().enumerate() {
            dot += w * anchors[(i, j)];
        }
        let h = sigmoid(dot + layer.biases()[i]);
        if (h - 0.5).abs() > tol {
            return Err(Error::invalid(format!(
                "node {i} evaluates to {h} at its anchor (tolerance {tol})"
            )));
        }
    }
    Ok(())
}

/// A fitted network: frozen hidden layer plus least-squares output weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub hidden: HiddenLayer,
    pub output_weights: DVector<f64>,
    pub ridge_lambda: f64,
    pub train_rmse: f64,
}

impl Model {
    pub fn new(
        hidden: HiddenLayer,
        output_weights: DVector<f64>,
        ridge_lambda: f64,
        train_rmse: f64,
    ) -> Result<Self> {
        if output_weights.len() != hidden.nodes() {
            return Err(Error::dims(format!(
                "{} output weights vs {} hidden nodes",
                output_weights.len(),
                hidden.nodes()
            )));
        }
        Ok(Model {
            hidden,
            output_weights,
            ridge_lambda,
            train_rmse,
        })
    }

    /// Writes the model as a TOML document; see [`Model::load`].
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_toml_string()?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let file = ModelFile::from(self);
        toml::to_string(&file).map_err(|e| Error::Parse(format!("model serialization: {e}")))
    }

    pub fn load(path: &Path) -> Result<Model> {
        let text = std::fs::read_to_string(path)?;
        let file: ModelFile =
            toml::from_str(&text).map_err(|e| Error::Parse(format!("model file: {e}")))?;
        file.into_model()
    }
}

/// Predictions `H(inputs)·β`.
pub fn predict(model: &Model, inputs: &DMatrix<f64>) -> Result<DVector<f64>> {
    let h = hidden_matrix(inputs, &model.hidden)?;
    Ok(&h * &model.output_weights)
}

/// On-disk schema. Weights are a column-major list (node after node);
/// anchors are row-major (anchor after anchor).
#[derive(Serialize, Deserialize)]
struct ModelFile {
    hidden: HiddenSection,
    output: OutputSection,
}

#[derive(Serialize, Deserialize)]
struct HiddenSection {
    method: crate::paramgen::Method,
    u: f64,
    alpha_min: f64,
    alpha_max: f64,
    anchor_strategy: crate::paramgen::AnchorStrategy,
    bias_nonnegative: bool,
    #[serde(with = "seed_serde")]
    seed: u64,
    inputs: usize,
    nodes: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    anchors: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct OutputSection {
    weights: Vec<f64>,
    ridge_lambda: f64,
    train_rmse: f64,
}

impl From<&Model> for ModelFile {
    fn from(model: &Model) -> Self {
        let layer = &model.hidden;
        let cfg = layer.config();
        let anchors = layer.anchors().map(|a| {
            let mut flat = Vec::with_capacity(a.nrows() * a.ncols());
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    flat.push(a[(i, j)]);
                }
            }
            flat
        });
        ModelFile {
            hidden: HiddenSection {
                method: cfg.method,
                u: cfg.u,
                alpha_min: cfg.alpha_min,
                alpha_max: cfg.alpha_max,
                anchor_strategy: cfg.anchor_strategy,
                bias_nonnegative: cfg.bias_nonnegative,
                seed: cfg.seed,
                inputs: layer.input_dim(),
                nodes: layer.nodes(),
                weights: layer.weights().as_slice().to_vec(),
                biases: layer.biases().as_slice().to_vec(),
                anchors,
            },
            output: OutputSection {
                weights: model.output_weights.as_slice().to_vec(),
                ridge_lambda: model.ridge_lambda,
                train_rmse: model.train_rmse,
            },
        }
    }
}

impl ModelFile {
    fn into_model(self) -> Result<Model> {
        let h = self.hidden;
        let (n, m) = (h.inputs, h.nodes);
        if h.weights.len() != n * m || h.biases.len() != m {
            return Err(Error::Parse(format!(
                "model file shape mismatch: {} weights, {} biases for {n}x{m}",
                h.weights.len(),
                h.biases.len()
            )));
        }
        let anchors = match h.anchors {
            Some(flat) => {
                if flat.len() != n * m {
                    return Err(Error::Parse(format!(
                        "model file has {} anchor values, expected {}",
                        flat.len(),
                        n * m
                    )));
                }
                Some(DMatrix::from_row_slice(m, n, &flat))
            }
            None => None,
        };
        let config = GenConfig {
            method: h.method,
            u: h.u,
            alpha_min: h.alpha_min,
            alpha_max: h.alpha_max,
            anchor_strategy: h.anchor_strategy,
            bias_nonnegative: h.bias_nonnegative,
            seed: h.seed,
        };
        let layer = HiddenLayer::from_parts(
            DMatrix::from_column_slice(n, m, &h.weights),
            DVector::from_vec(h.biases),
            anchors,
            config,
        )?;
        Model::new(
            layer,
            DVector::from_vec(self.output.weights),
            self.output.ridge_lambda,
            self.output.train_rmse,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{make_dataset, NormalizationOrder};
    use crate::paramgen::{gen_pmu, gen_sm, AnchorStrategy, GenConfig};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sigmoid_basics() {
        assert_eq!(sigmoid(0.0), 0.5);
        for z in [0.1, 1.0, 7.5, 35.0] {
            assert_abs_diff_eq!(sigmoid(z) + sigmoid(-z), 1.0, epsilon = 1e-12);
            assert!(sigmoid(z) > 0.5 && sigmoid(-z) < 0.5);
        }
        // Saturates without overflow or NaN at extreme arguments.
        assert_eq!(sigmoid(710.0), 1.0);
        assert!(sigmoid(-710.0) >= 0.0 && sigmoid(-710.0) < 1e-300);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert!(sigmoid(f64::MAX).is_finite());
        assert!(sigmoid(f64::MIN).is_finite());
    }

    #[test]
    fn sigmoid_derivative_matches_closed_form() {
        // Central difference of h(x) = sigmoid(a x + b) against a·h·(1-h).
        let h_step = 1e-5;
        for (a, b, x) in [(2.0, -0.3, 0.4), (-4.0, 1.0, 0.2), (10.0, -5.0, 0.5)] {
            let z = a * x + b;
            let numeric = (sigmoid(a * (x + h_step) + b) - sigmoid(a * (x - h_step) + b))
                / (2.0 * h_step);
            let closed = a * sigmoid(z) * (1.0 - sigmoid(z));
            assert_abs_diff_eq!(numeric, closed, epsilon = 1e-6);
        }
    }

    #[test]
    fn hidden_matrix_of_zero_layer_is_all_half() {
        let layer = HiddenLayer::from_parts(
            DMatrix::zeros(2, 3),
            DVector::zeros(3),
            None,
            GenConfig::sm(1.0, 0),
        )
        .unwrap();
        let inputs = DMatrix::from_row_slice(4, 2, &[0.1, 0.9, 0.5, 0.5, 0.0, 1.0, 0.3, 0.7]);
        let h = hidden_matrix(&inputs, &layer).unwrap();
        assert!(h.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn hidden_matrix_matches_scalar_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inputs = DMatrix::from_fn(5, 2, |_, _| rng.random::<f64>());
        let weights = DMatrix::from_fn(2, 3, |_, _| rng.random_range(-10.0..10.0));
        let biases = DVector::from_fn(3, |_, _| rng.random_range(-10.0..10.0));
        let layer =
            HiddenLayer::from_parts(weights.clone(), biases.clone(), None, GenConfig::sm(10.0, 0))
                .unwrap();
        let h = hidden_matrix(&inputs, &layer).unwrap();
        for l in 0..5 {
            for i in 0..3 {
                let mut dot = 0.0;
                for j in 0..2 {
                    dot += weights[(j, i)] * inputs[(l, j)];
                }
                assert_eq!(h[(l, i)], sigmoid(dot + biases[i]));
            }
        }
        assert!(h.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn hidden_matrix_is_exactly_half_at_anchors() {
        let ds = make_dataset(2, 100, 0.0, 3, NormalizationOrder::NormalizeThenNoise, false)
            .unwrap();
        let layer = gen_pmu(8, 2, 10.0, AnchorStrategy::TrainingSample, &ds, 4).unwrap();
        let anchors = layer.anchors().unwrap().clone();
        let h = hidden_matrix(&anchors, &layer).unwrap();
        for i in 0..layer.nodes() {
            assert_eq!(h[(i, i)], 0.5, "node {i} not exactly 0.5 at its anchor");
        }
        audit_anchoring(&layer, 1e-12).unwrap();
    }

    #[test]
    fn hidden_matrix_rejects_dimension_mismatch() {
        let layer = gen_sm(3, 2, 1.0, 1).unwrap();
        let inputs = DMatrix::zeros(4, 3);
        assert!(hidden_matrix(&inputs, &layer).is_err());
    }

    #[test]
    fn inflection_point_formula() {
        assert_eq!(inflection_point_1d(5.0, 0.0).unwrap(), 0.0);
        assert_eq!(inflection_point_1d(2.0, -1.0).unwrap(), 0.5);
        let chi = inflection_point_1d(-3.0, 1.5).unwrap();
        assert_eq!(chi, 0.5);
        assert_eq!(sigmoid(-3.0 * chi + 1.5), 0.5);
        assert!(inflection_point_1d(0.0, 1.0).is_err());
    }

    #[test]
    fn hyperplane_box_intersection_basics() {
        let square = Hypercube::unit(2);
        // x + y = 1 crosses the unit square.
        assert!(inflection_hyperplane_intersects(&[1.0, 1.0], -1.0, &square).unwrap());
        // x + y = 3 does not.
        assert!(!inflection_hyperplane_intersects(&[1.0, 1.0], -3.0, &square).unwrap());
        assert!(inflection_hyperplane_intersects(&[0.0, 0.0], 1.0, &square).is_err());
        assert!(inflection_hyperplane_intersects(&[1.0], 0.0, &square).is_err());
    }

    #[test]
    fn hyperplane_reduces_to_inflection_point_in_1d() {
        let interval = Hypercube::unit(1);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..2000 {
            let a = rng.random_range(-5.0..5.0);
            let b = rng.random_range(-5.0..5.0);
            if a == 0.0 {
                continue;
            }
            let inside = (0.0..=1.0).contains(&inflection_point_1d(a, b).unwrap());
            let hit = inflection_hyperplane_intersects(&[a], b, &interval).unwrap();
            assert_eq!(inside, hit, "disagreement at a={a}, b={b}");
        }
    }

    /// Grid oracle: sign change of a·x + b over a 200×200 lattice implies a
    /// true crossing; a miss is only allowed when the plane passes within a
    /// lattice cell of every grid point.
    #[test]
    fn hyperplane_agrees_with_grid_sign_oracle() {
        let square = Hypercube::unit(2);
        let grid = 200usize;
        let step = 1.0 / (grid - 1) as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut misses = 0;
        for _ in 0..10_000 {
            let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let b = rng.random_range(-1.0..1.0);
            if a[0] == 0.0 && a[1] == 0.0 {
                continue;
            }
            let exact = inflection_hyperplane_intersects(&a, b, &square).unwrap();
            let mut any_nonneg = false;
            let mut any_nonpos = false;
            let mut min_abs = f64::INFINITY;
            for gx in 0..grid {
                for gy in 0..grid {
                    let f = a[0] * (gx as f64 * step) + a[1] * (gy as f64 * step) + b;
                    any_nonneg |= f >= 0.0;
                    any_nonpos |= f <= 0.0;
                    min_abs = min_abs.min(f.abs());
                }
            }
            let grid_hit = any_nonneg && any_nonpos;
            if grid_hit {
                assert!(exact, "grid found a crossing the exact test missed");
            } else if exact {
                // The plane clips a sliver smaller than the lattice spacing:
                // its distance to the nearest grid point is at most half a
                // cell diagonal.
                let norm = (a[0] * a[0] + a[1] * a[1]).sqrt();
                assert!(
                    min_abs / norm <= step * std::f64::consts::SQRT_2 / 2.0 + 1e-12,
                    "exact hit but plane is far from every grid point"
                );
                misses += 1;
            }
        }
        // Sliver misses must stay rare.
        assert!(misses < 200, "too many grid misses: {misses}");
    }

    #[test]
    fn predict_matches_scalar_recomputation() {
        let layer = gen_sm(3, 2, 5.0, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let inputs = DMatrix::from_fn(4, 2, |_, _| rng.random::<f64>());
        let beta = DVector::from_vec(vec![0.5, -1.5, 2.0]);
        let model = Model::new(layer.clone(), beta.clone(), 0.0, 0.0).unwrap();
        let pred = predict(&model, &inputs).unwrap();
        let h = hidden_matrix(&inputs, &layer).unwrap();
        for l in 0..4 {
            let mut acc = 0.0;
            for i in 0..3 {
                acc += h[(l, i)] * beta[i];
            }
            assert_abs_diff_eq!(pred[l], acc, epsilon = 1e-14);
        }

        let zero = Model::new(layer.clone(), DVector::zeros(3), 0.0, 0.0).unwrap();
        assert!(predict(&zero, &inputs).unwrap().iter().all(|&v| v == 0.0));

        let single_layer = gen_sm(1, 2, 5.0, 6).unwrap();
        let single = Model::new(single_layer.clone(), DVector::from_vec(vec![1.0]), 0.0, 0.0)
            .unwrap();
        let p = predict(&single, &inputs).unwrap();
        let h1 = hidden_matrix(&inputs, &single_layer).unwrap();
        for l in 0..4 {
            assert_eq!(p[l], h1[(l, 0)]);
        }
    }

    #[test]
    fn model_file_round_trip() {
        let ds = make_dataset(2, 60, 0.0, 3, NormalizationOrder::NormalizeThenNoise, false)
            .unwrap();
        let layer = gen_pmu(5, 2, 10.0, AnchorStrategy::TrainingSample, &ds, 4).unwrap();
        let beta = DVector::from_vec(vec![1.0, -2.0, 0.25, 3.5, -0.125]);
        let model = Model::new(layer, beta, 0.5, 0.0123).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.toml");
        model.save(&path).unwrap();
        let back = Model::load(&path).unwrap();
        assert_eq!(model, back);
        audit_anchoring(&back.hidden, 1e-12).unwrap();

        let sm_model = Model::new(gen_sm(3, 1, 2.0, 9).unwrap(), DVector::zeros(3), 0.0, 1.0)
            .unwrap();
        let path2 = dir.path().join("sm.toml");
        sm_model.save(&path2).unwrap();
        assert_eq!(Model::load(&path2).unwrap(), sm_model);
    }
}
