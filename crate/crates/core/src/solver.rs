//! Output-weight fitting by linear least squares.
//!
//! The solve is factorization-based throughout: tall systems are reduced by a
//! Householder QR and the triangular factor is then decomposed by SVD, which
//! keeps pseudoinverse (minimum-norm) semantics for rank-deficient activation
//! matrices without ever forming normal equations. Sigmoid feature matrices
//! with steep, near-saturated nodes routinely carry near-duplicate columns,
//! so the rank cutoff matters in practice.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Least-squares options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Ridge penalty λ in `min ‖Hβ - y‖² + λ‖β‖²`; 0 gives the plain
    /// minimum-norm least-squares solution.
    pub ridge_lambda: f64,
    /// Singular values below `rank_tolerance · σ_max` are treated as zero
    /// when λ = 0.
    pub rank_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            ridge_lambda: 0.0,
            rank_tolerance: 1e-10,
        }
    }
}

impl FitOptions {
    pub fn ridge(lambda: f64) -> Self {
        FitOptions {
            ridge_lambda: lambda,
            ..Default::default()
        }
    }
}

/// Solves for output weights β.
///
/// With `ridge_lambda = 0` this is the minimum-norm least-squares solution;
/// with `ridge_lambda > 0` the ridge-regularized solution. Inputs containing
/// NaN or infinity are rejected.
pub fn fit_output_weights(
    hmatrix: &DMatrix<f64>,
    targets: &DVector<f64>,
    opts: &FitOptions,
) -> Result<DVector<f64>> {
    if hmatrix.nrows() == 0 || hmatrix.ncols() == 0 {
        return Err(Error::invalid("activation matrix must be nonempty"));
    }
    if hmatrix.nrows() != targets.len() {
        return Err(Error::dims(format!(
            "{} activation rows vs {} targets",
            hmatrix.nrows(),
            targets.len()
        )));
    }
    if !(opts.ridge_lambda >= 0.0) || !opts.ridge_lambda.is_finite() {
        return Err(Error::invalid(format!(
            "ridge parameter must be finite and >= 0, got {}",
            opts.ridge_lambda
        )));
    }
    if hmatrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("activation matrix".into()));
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("target vector".into()));
    }

    // For tall systems, QR first: H = QR, then SVD of the small R. With
    // R = UΣVᵀ, H = (QU)ΣVᵀ is an SVD of H, so filtering Σ below yields
    // exactly the pseudoinverse / ridge solution of H.
    let (svd, projected) = if hmatrix.nrows() >= hmatrix.ncols() {
        let qr = hmatrix.clone().qr();
        let r = qr.r();
        let mut qty = targets.clone();
        qr.q_tr_mul(&mut qty);
        let svd = r.svd(true, true);
        (svd, qty.rows(0, hmatrix.ncols()).into_owned())
    } else {
        (hmatrix.clone().svd(true, true), targets.clone())
    };

    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0f64, f64::max);

    let mut coeffs = u.tr_mul(&projected);
    for (i, c) in coeffs.iter_mut().enumerate() {
        let s = sigma[i];
        *c *= if opts.ridge_lambda > 0.0 {
            s / (s * s + opts.ridge_lambda)
        } else if s > opts.rank_tolerance * sigma_max && s > 0.0 {
            1.0 / s
        } else {
            0.0
        };
    }
    Ok(v_t.tr_mul(&coeffs))
}

/// Root-mean-square error between two equal-length vectors.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.is_empty() {
        return Err(Error::invalid("rmse of empty vectors is undefined"));
    }
    if predicted.len() != actual.len() {
        return Err(Error::dims(format!(
            "{} predictions vs {} actuals",
            predicted.len(),
            actual.len()
        )));
    }
    let sum: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((sum / predicted.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent reference solve of (HᵀH + λI)β = Hᵀy by Gaussian
    /// elimination with partial pivoting. Deliberately shares no code with
    /// the QR/SVD path it checks.
    pub(crate) fn normal_equation_solve(
        h: &DMatrix<f64>,
        y: &DVector<f64>,
        lambda: f64,
    ) -> Vec<f64> {
        let m = h.ncols();
        let mut g = vec![vec![0.0; m + 1]; m];
        for r in 0..m {
            for c in 0..m {
                let mut s = 0.0;
                for l in 0..h.nrows() {
                    s += h[(l, r)] * h[(l, c)];
                }
                g[r][c] = s + if r == c { lambda } else { 0.0 };
            }
            let mut s = 0.0;
            for l in 0..h.nrows() {
                s += h[(l, r)] * y[l];
            }
            g[r][m] = s;
        }
        for col in 0..m {
            let pivot = (col..m)
                .max_by(|&a, &b| g[a][col].abs().partial_cmp(&g[b][col].abs()).unwrap())
                .unwrap();
            g.swap(col, pivot);
            for row in col + 1..m {
                let f = g[row][col] / g[col][col];
                for c in col..=m {
                    g[row][c] -= f * g[col][c];
                }
            }
        }
        let mut beta = vec![0.0; m];
        for row in (0..m).rev() {
            let mut s = g[row][m];
            for c in row + 1..m {
                s -= g[row][c] * beta[c];
            }
            beta[row] = s / g[row][row];
        }
        beta
    }

    fn random_system(rows: usize, cols: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(rows, |_, _| rng.random_range(-1.0..1.0));
        (h, y)
    }

    #[test]
    fn identity_system_returns_targets() {
        let h = DMatrix::<f64>::identity(6, 6);
        let y = DVector::from_vec(vec![3.0, -1.0, 0.5, 2.0, 0.0, -4.0]);
        let beta = fit_output_weights(&h, &y, &FitOptions::default()).unwrap();
        for i in 0..6 {
            assert_relative_eq!(beta[i], y[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn duplicated_column_yields_minimum_norm_solution() {
        // Both columns equal: residual-minimizing solutions satisfy
        // β1 + β2 = 2; the minimum-norm one splits evenly.
        let h = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let y = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        let beta = fit_output_weights(&h, &y, &FitOptions::default()).unwrap();
        assert_relative_eq!(beta[0], 1.0, max_relative = 1e-8);
        assert_relative_eq!(beta[1], 1.0, max_relative = 1e-8);
    }

    #[test]
    fn matches_normal_equations_on_well_conditioned_systems() {
        for seed in 0..20 {
            let (h, y) = random_system(50, 10, seed);
            let beta = fit_output_weights(&h, &y, &FitOptions::default()).unwrap();
            let reference = normal_equation_solve(&h, &y, 0.0);
            for i in 0..10 {
                assert_relative_eq!(beta[i], reference[i], max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn ridge_matches_regularized_normal_equations() {
        let (h, y) = random_system(40, 8, 77);
        for lambda in [1e-6, 1e-2, 1.0] {
            let beta = fit_output_weights(&h, &y, &FitOptions::ridge(lambda)).unwrap();
            let reference = normal_equation_solve(&h, &y, lambda);
            for i in 0..8 {
                assert_relative_eq!(beta[i], reference[i], max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn normal_equation_residual_is_tiny() {
        let (h, y) = random_system(60, 12, 5);
        let beta = fit_output_weights(&h, &y, &FitOptions::default()).unwrap();
        let residual = h.tr_mul(&(&h * &beta - &y));
        let scale = h.tr_mul(&y).norm();
        assert!(residual.norm() <= 1e-8 * scale);
    }

    #[test]
    fn ridge_shrinks_the_solution_monotonically() {
        let (h, y) = random_system(30, 6, 9);
        let mut last = f64::INFINITY;
        for lambda in [0.0, 1e-4, 1e-2, 1.0, 100.0] {
            let beta = fit_output_weights(&h, &y, &FitOptions::ridge(lambda)).unwrap();
            let norm = beta.norm();
            assert!(norm <= last + 1e-12, "norm grew at lambda={lambda}");
            last = norm;
        }
    }

    #[test]
    fn fit_never_beats_zero_baseline() {
        for seed in 30..40 {
            let (h, y) = random_system(25, 10, seed);
            let beta = fit_output_weights(&h, &y, &FitOptions::default()).unwrap();
            assert!((&h * &beta - &y).norm() <= y.norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn wide_system_is_interpolating_and_minimum_norm() {
        let (h, y) = random_system(4, 9, 3);
        let beta = fit_output_weights(&h, &y, &FitOptions::default()).unwrap();
        assert!((&h * &beta - &y).norm() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (h, y) = random_system(10, 3, 1);
        let mut h_bad = h.clone();
        h_bad[(0, 0)] = f64::NAN;
        assert!(fit_output_weights(&h_bad, &y, &FitOptions::default()).is_err());
        let mut y_bad = y.clone();
        y_bad[2] = f64::INFINITY;
        assert!(fit_output_weights(&h, &y_bad, &FitOptions::default()).is_err());
        assert!(fit_output_weights(&h, &y, &FitOptions::ridge(-1.0)).is_err());
        let y_short = DVector::zeros(9);
        assert!(fit_output_weights(&h, &y_short, &FitOptions::default()).is_err());
    }

    #[test]
    fn rmse_basics() {
        assert_eq!(rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        let shifted: Vec<f64> = [1.0, 2.0, 3.0].iter().map(|v| v + 0.75).collect();
        assert_relative_eq!(
            rmse(&shifted, &[1.0, 2.0, 3.0]).unwrap(),
            0.75,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 5.0]).unwrap(),
            (4.0f64 / 3.0).sqrt(),
            max_relative = 1e-12
        );
        assert!(rmse(&[], &[]).is_err());
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }
}
