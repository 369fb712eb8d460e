//! Synthetic regression datasets.
//!
//! Inputs are drawn i.i.d. uniform per coordinate inside the unit hypercube;
//! targets come from an oscillatory benchmark function, are min-max
//! normalized onto `[-1, 1]`, and optionally distorted with uniform noise.
//! Train sets carry noise, test sets do not. Generation is keyed to a seed
//! with one substream per point, so datasets are bit-reproducible and
//! independent of evaluation order.

use crate::error::{Error, Result};
use crate::seeding;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

const TAG_POINT: u64 = 0x01;

/// Axis-aligned box bounding the input data.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypercube {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Hypercube {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::dims(format!(
                "hypercube bounds must be nonempty and equal length, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) {
                return Err(Error::invalid(format!(
                    "hypercube requires lower < upper per axis, axis {j} has [{lo}, {hi}]"
                )));
            }
        }
        Ok(Hypercube { lower, upper })
    }

    /// The unit cube `[0, 1]^n` used by all shipped experiments.
    pub fn unit(dim: usize) -> Self {
        Hypercube {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Inclusive membership test.
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }
}

/// Where min-max normalization sits relative to noise injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalizationOrder {
    /// Noise first, then the noisy targets are mapped onto `[-1, 1]`.
    #[serde(rename = "noise-first")]
    NoiseThenNormalize,
    /// Clean targets are mapped onto `[-1, 1]`, then noise is added.
    #[serde(rename = "normalize-first")]
    NormalizeThenNoise,
    /// Raw targets, no rescaling.
    #[serde(rename = "none")]
    None,
}

/// Provenance of a generated dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetMeta {
    pub seed: u64,
    pub noise_amplitude: f64,
    pub order: NormalizationOrder,
    pub noisy: bool,
}

/// An immutable regression dataset: `N×n` inputs and `N` targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: DMatrix<f64>,
    targets: DVector<f64>,
    hypercube: Hypercube,
    meta: DatasetMeta,
}

impl Dataset {
    /// Builds a dataset from raw parts, validating shape and membership.
    pub fn from_parts(
        inputs: DMatrix<f64>,
        targets: DVector<f64>,
        hypercube: Hypercube,
        meta: DatasetMeta,
    ) -> Result<Self> {
        if inputs.nrows() != targets.len() {
            return Err(Error::dims(format!(
                "{} input rows vs {} targets",
                inputs.nrows(),
                targets.len()
            )));
        }
        if inputs.nrows() == 0 {
            return Err(Error::invalid("dataset must contain at least one point"));
        }
        if inputs.ncols() != hypercube.dim() {
            return Err(Error::dims(format!(
                "{}-dimensional inputs vs {}-dimensional hypercube",
                inputs.ncols(),
                hypercube.dim()
            )));
        }
        let mut row = vec![0.0; inputs.ncols()];
        for l in 0..inputs.nrows() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = inputs[(l, j)];
            }
            if !hypercube.contains(&row) {
                return Err(Error::invalid(format!(
                    "input row {l} lies outside the hypercube"
                )));
            }
        }
        Ok(Dataset {
            inputs,
            targets,
            hypercube,
            meta,
        })
    }

    pub fn n_points(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    pub fn hypercube(&self) -> &Hypercube {
        &self.hypercube
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    /// Copies input row `l` into a plain vector.
    pub fn input_row(&self, l: usize) -> Vec<f64> {
        (0..self.dim()).map(|j| self.inputs[(l, j)]).collect()
    }

    /// The first `count` points as a standalone dataset (for holdout splits).
    pub fn head(&self, count: usize) -> Result<Dataset> {
        if count == 0 || count > self.n_points() {
            return Err(Error::invalid(format!(
                "cannot take {count} of {} points",
                self.n_points()
            )));
        }
        Ok(Dataset {
            inputs: self.inputs.rows(0, count).into_owned(),
            targets: self.targets.rows(0, count).into_owned(),
            hypercube: self.hypercube.clone(),
            meta: self.meta,
        })
    }

    /// The points from `start` on, as a standalone dataset.
    pub fn tail(&self, start: usize) -> Result<Dataset> {
        if start >= self.n_points() {
            return Err(Error::invalid(format!(
                "tail start {start} out of {} points",
                self.n_points()
            )));
        }
        Ok(Dataset {
            inputs: self.inputs.rows(start, self.n_points() - start).into_owned(),
            targets: self.targets.rows(start, self.n_points() - start).into_owned(),
            hypercube: self.hypercube.clone(),
            meta: self.meta,
        })
    }
}

/// The single-variable benchmark target `sin(20·eˣ)·x²`.
pub fn target_1d(x: f64) -> f64 {
    (20.0 * x.exp()).sin() * x * x
}

/// The multivariate benchmark target, the sum of [`target_1d`] per coordinate.
pub fn target_nd(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::invalid("target function undefined for 0 dimensions"));
    }
    Ok(x.iter().map(|&v| target_1d(v)).sum())
}

/// Generates the standard benchmark dataset; see [`make_dataset_with`].
pub fn make_dataset(
    dim: usize,
    points: usize,
    noise_amplitude: f64,
    seed: u64,
    order: NormalizationOrder,
    with_noise: bool,
) -> Result<Dataset> {
    make_dataset_with(dim, points, noise_amplitude, seed, order, with_noise, |x| {
        target_nd(x).expect("dim >= 1 checked")
    })
}

/// Generates a dataset for an arbitrary target function on the unit cube.
///
/// Inputs are U(0,1) per coordinate; noise is U(-amp, amp), applied only when
/// `with_noise` is set. Equal arguments produce bit-identical datasets.
pub fn make_dataset_with(
    dim: usize,
    points: usize,
    noise_amplitude: f64,
    seed: u64,
    order: NormalizationOrder,
    with_noise: bool,
    target: impl Fn(&[f64]) -> f64,
) -> Result<Dataset> {
    if dim == 0 {
        return Err(Error::invalid("dimension count must be positive"));
    }
    if points == 0 {
        return Err(Error::invalid("point count must be positive"));
    }
    if !(noise_amplitude >= 0.0) || !noise_amplitude.is_finite() {
        return Err(Error::invalid(format!(
            "noise amplitude must be finite and >= 0, got {noise_amplitude}"
        )));
    }

    let mut inputs = DMatrix::zeros(points, dim);
    let mut raw = DVector::zeros(points);
    let mut noise = vec![0.0; points];
    let mut row = vec![0.0; dim];
    for l in 0..points {
        let mut rng = seeding::substream(seed, TAG_POINT, l as u64);
        for (j, v) in row.iter_mut().enumerate() {
            *v = rng.random::<f64>();
            inputs[(l, j)] = *v;
        }
        // Drawn unconditionally so inputs do not depend on the noise flag.
        noise[l] = noise_amplitude * (2.0 * rng.random::<f64>() - 1.0);
        raw[l] = target(&row);
    }

    let targets = match order {
        NormalizationOrder::NoiseThenNormalize => {
            let mut t = raw;
            if with_noise {
                for (v, xi) in t.iter_mut().zip(&noise) {
                    *v += xi;
                }
            }
            normalize_in_place(&mut t);
            t
        }
        NormalizationOrder::NormalizeThenNoise => {
            let mut t = raw;
            normalize_in_place(&mut t);
            if with_noise {
                for (v, xi) in t.iter_mut().zip(&noise) {
                    *v += xi;
                }
            }
            t
        }
        NormalizationOrder::None => {
            let mut t = raw;
            if with_noise {
                for (v, xi) in t.iter_mut().zip(&noise) {
                    *v += xi;
                }
            }
            t
        }
    };

    Dataset::from_parts(
        inputs,
        targets,
        Hypercube::unit(dim),
        DatasetMeta {
            seed,
            noise_amplitude,
            order,
            noisy: with_noise,
        },
    )
}

/// Min-max affine map onto `[-1, 1]`; a constant vector maps to all zeros.
fn normalize_in_place(values: &mut DVector<f64>) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let range = hi - lo;
    if range == 0.0 {
        values.fill(0.0);
        return;
    }
    for v in values.iter_mut() {
        *v = -1.0 + 2.0 * (*v - lo) / range;
    }
}

/// Full-precision decimal form used in every CSV this crate writes; 17
/// significant digits, enough to reconstruct the exact f64.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `x1,...,xn,y` CSV rows for a dataset.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for j in 0..dataset.dim() {
        let _ = write!(out, "x{},", j + 1);
    }
    out.push_str("y\n");
    for l in 0..dataset.n_points() {
        for j in 0..dataset.dim() {
            out.push_str(&fmt_f64(dataset.inputs[(l, j)]));
            out.push(',');
        }
        out.push_str(&fmt_f64(dataset.targets[l]));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// CSV with one prediction column appended: `x1,...,xn,y,prediction`.
pub fn predictions_csv(dataset: &Dataset, predictions: &[f64]) -> Result<String> {
    if predictions.len() != dataset.n_points() {
        return Err(Error::dims(format!(
            "{} predictions vs {} points",
            predictions.len(),
            dataset.n_points()
        )));
    }
    let mut out = String::new();
    for j in 0..dataset.dim() {
        let _ = write!(out, "x{},", j + 1);
    }
    out.push_str("y,prediction\n");
    for l in 0..dataset.n_points() {
        for j in 0..dataset.dim() {
            out.push_str(&fmt_f64(dataset.inputs[(l, j)]));
            out.push(',');
        }
        let _ = writeln!(out, "{},{}", fmt_f64(dataset.targets[l]), fmt_f64(predictions[l]));
    }
    Ok(out)
}

/// Reads a dataset written by [`write_csv`]. The hypercube is taken to be the
/// unit cube and provenance metadata is not recoverable from CSV.
pub fn read_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty dataset file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[cols.len() - 1] != "y" {
        return Err(Error::Parse(format!("unexpected dataset header: {header}")));
    }
    let dim = cols.len() - 1;
    let mut values: Vec<f64> = Vec::new();
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(Error::Parse(format!(
                "row {} has {} fields, expected {}",
                i + 2,
                fields.len(),
                dim + 1
            )));
        }
        for f in fields {
            values.push(
                f.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", i + 2)))?,
            );
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse("dataset file has no rows".into()));
    }
    let mut inputs = DMatrix::zeros(rows, dim);
    let mut targets = DVector::zeros(rows);
    for l in 0..rows {
        for j in 0..dim {
            inputs[(l, j)] = values[l * (dim + 1) + j];
        }
        targets[l] = values[l * (dim + 1) + dim];
    }
    Dataset::from_parts(
        inputs,
        targets,
        Hypercube::unit(dim),
        DatasetMeta {
            seed: 0,
            noise_amplitude: 0.0,
            order: NormalizationOrder::None,
            noisy: false,
        },
    )
}
