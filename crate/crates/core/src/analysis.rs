//! Distributional diagnostics for random sigmoid parameters.
//!
//! Closed forms for the inflection-point density and its CDF, Monte Carlo
//! estimation of the probability that a random inflection hyperplane meets
//! the input hypercube, slope-angle histograms, and a one-sample
//! Kolmogorov-Smirnov statistic for goodness-of-fit checks.

use crate::datagen::{fmt_f64, Hypercube};
use crate::error::{Error, Result};
use crate::network;
use crate::seeding;
use rand::Rng;
use std::fmt::Write as _;

const TAG_BOX_SAMPLE: u64 = 0x20;
const TAG_CHI_SAMPLE: u64 = 0x21;
const TAG_ANGLE_SAMPLE: u64 = 0x22;

/// Density of the inflection point `χ = -b/a` when `a, b ~ U(-u, u)`:
/// `1/4` inside `(-1, 1)`, `1/(4χ²)` outside. Independent of `u`.
pub fn chi_pdf(chi: f64) -> f64 {
    if chi.abs() < 1.0 {
        0.25
    } else {
        0.25 / (chi * chi)
    }
}

/// CDF of [`chi_pdf`] in closed form.
pub fn chi_cdf(chi: f64) -> f64 {
    if chi <= -1.0 {
        -0.25 / chi
    } else if chi < 1.0 {
        0.5 + 0.25 * chi
    } else {
        1.0 - 0.25 / chi
    }
}

/// A Monte Carlo estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Estimates the probability that the inflection hyperplane of a random node
/// (all of `a` and `b` i.i.d. `U(-u, u)`) intersects the unit hypercube
/// `[0,1]^n`. The event is scale-free in `(a, b)`, so the estimate should not
/// depend on `u`; the parameter is exposed precisely so that invariance can
/// be checked.
pub fn prob_inflection_in_box(dim: usize, u: f64, samples: u64, seed: u64) -> Result<McEstimate> {
    if dim == 0 {
        return Err(Error::invalid("dimension count must be positive"));
    }
    if samples == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::invalid(format!("bound u must be positive, got {u}")));
    }
    let cube = Hypercube::unit(dim);
    let mut weights = vec![0.0; dim];
    let mut hits = 0u64;
    for s in 0..samples {
        let mut rng = seeding::substream(seed, TAG_BOX_SAMPLE, s);
        for w in &mut weights {
            *w = rng.random_range(-u..u);
        }
        let bias = rng.random_range(-u..u);
        let hit = match network::inflection_hyperplane_intersects(&weights, bias, &cube) {
            Ok(h) => h,
            // All-zero weight draw: the locus is empty unless b = 0 too.
            Err(_) => bias == 0.0,
        };
        if hit {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(McEstimate {
        value: p,
        stderr: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        seed,
    })
}

/// Draws `samples` inflection points `χ = -b/a` with `a, b ~ U(-u, u)`.
/// Exact-zero weight draws are redrawn.
pub fn sample_inflection_points(u: f64, samples: u64, seed: u64) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::invalid(format!("bound u must be positive, got {u}")));
    }
    let mut out = Vec::with_capacity(samples as usize);
    for s in 0..samples {
        let mut rng = seeding::substream(seed, TAG_CHI_SAMPLE, s);
        let a = loop {
            let a: f64 = rng.random_range(-u..u);
            if a != 0.0 {
                break a;
            }
        };
        let b: f64 = rng.random_range(-u..u);
        out.push(-b / a);
    }
    Ok(out)
}

/// Histogram of slope angles over `[-90°, 90°]` in fixed 1° bins.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleHistogram {
    counts: Vec<u64>,
    samples: u64,
    seed: u64,
}

impl AngleHistogram {
    pub const BIN_WIDTH_DEG: f64 = 1.0;
    pub const BINS: usize = 180;

    fn from_angles(angles: impl Iterator<Item = f64>, seed: u64) -> Self {
        let mut counts = vec![0u64; Self::BINS];
        let mut samples = 0u64;
        for alpha in angles {
            let idx = ((alpha + 90.0).floor() as isize).clamp(0, Self::BINS as isize - 1);
            counts[idx as usize] += 1;
            samples += 1;
        }
        AngleHistogram {
            counts,
            samples,
            seed,
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// Lower edge of bin `i`, in degrees.
    pub fn bin_lower(&self, i: usize) -> f64 {
        -90.0 + i as f64 * Self::BIN_WIDTH_DEG
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.bin_lower(i) + Self::BIN_WIDTH_DEG / 2.0
    }

    /// Empirical density of bin `i` (count over samples·width).
    pub fn density(&self, i: usize) -> f64 {
        self.counts[i] as f64 / (self.samples as f64 * Self::BIN_WIDTH_DEG)
    }

    /// Fraction of samples with `|α|` above `threshold_deg` (a whole number
    /// of degrees, so the threshold falls on bin edges).
    pub fn fraction_abs_above(&self, threshold_deg: f64) -> f64 {
        let mut n = 0u64;
        for i in 0..Self::BINS {
            let lower = self.bin_lower(i);
            let upper = lower + Self::BIN_WIDTH_DEG;
            if lower >= threshold_deg || upper <= -threshold_deg {
                n += self.counts[i];
            }
        }
        n as f64 / self.samples as f64
    }

    /// Smallest and largest bin center with nonzero count, in degrees.
    pub fn support(&self) -> Option<(f64, f64)> {
        let first = self.counts.iter().position(|&c| c > 0)?;
        let last = self.counts.iter().rposition(|&c| c > 0)?;
        Some((self.bin_center(first), self.bin_center(last)))
    }
}

/// Histogram of `α = arctan(a/4)` for `a ~ U(-u, u)`.
pub fn angle_distribution(u: f64, samples: u64, seed: u64) -> Result<AngleHistogram> {
    if samples == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::invalid(format!("bound u must be positive, got {u}")));
    }
    let angles = (0..samples).map(|s| {
        let mut rng = seeding::substream(seed, TAG_ANGLE_SAMPLE, s);
        let a: f64 = rng.random_range(-u..u);
        crate::paramgen::weight_to_angle(a)
    });
    Ok(AngleHistogram::from_angles(angles, seed))
}

/// Half-width and bin width of the inflection-point histogram emitted by
/// [`chi_pdf_report`]. Fixed so report CSVs diff cleanly across runs.
pub const CHI_HIST_HALF_RANGE: f64 = 5.0;
pub const CHI_HIST_BIN_WIDTH: f64 = 0.1;

/// CSV report `chi,density_closed_form,density_empirical`: the closed-form
/// density against a histogram of sampled `-b/a` over `[-5, 5]`.
pub fn chi_pdf_report(u: f64, samples: u64, seed: u64) -> Result<String> {
    let chis = sample_inflection_points(u, samples, seed)?;
    let bins = (2.0 * CHI_HIST_HALF_RANGE / CHI_HIST_BIN_WIDTH).round() as usize;
    let mut counts = vec![0u64; bins];
    for chi in chis {
        let idx = ((chi + CHI_HIST_HALF_RANGE) / CHI_HIST_BIN_WIDTH).floor();
        if idx >= 0.0 && (idx as usize) < bins {
            counts[idx as usize] += 1;
        }
    }
    let mut out = String::from("chi,density_closed_form,density_empirical\n");
    for (i, &count) in counts.iter().enumerate() {
        let center = -CHI_HIST_HALF_RANGE + (i as f64 + 0.5) * CHI_HIST_BIN_WIDTH;
        let empirical = count as f64 / (samples as f64 * CHI_HIST_BIN_WIDTH);
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(center),
            fmt_f64(chi_pdf(center)),
            fmt_f64(empirical)
        );
    }
    Ok(out)
}

/// CSV report `n,probability,stderr`: the in-box probability curve for
/// dimensions `1..=max_dim`. Rows share the sample substreams (common random
/// numbers), which tightens comparisons across dimensions.
pub fn in_box_report(max_dim: usize, u: f64, samples: u64, seed: u64) -> Result<String> {
    if max_dim == 0 {
        return Err(Error::invalid("dimension count must be positive"));
    }
    let mut out = String::from("n,probability,stderr\n");
    for dim in 1..=max_dim {
        let est = prob_inflection_in_box(dim, u, samples, seed)?;
        let _ = writeln!(
            out,
            "{dim},{},{}",
            fmt_f64(est.value),
            fmt_f64(est.stderr)
        );
    }
    Ok(out)
}

/// CSV report `bin_center_deg,density`: slope-angle histogram for weights
/// drawn from `U(-u, u)`.
pub fn angle_dist_report(u: f64, samples: u64, seed: u64) -> Result<String> {
    let hist = angle_distribution(u, samples, seed)?;
    let mut out = String::from("bin_center_deg,density\n");
    for i in 0..AngleHistogram::BINS {
        let _ = writeln!(
            out,
            "{},{}",
            fmt_f64(hist.bin_center(i)),
            fmt_f64(hist.density(i))
        );
    }
    Ok(out)
}

/// One-sample Kolmogorov-Smirnov statistic: the sup distance between the
/// empirical CDF of `sorted` (ascending) and `cdf`.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::invalid("KS statistic of an empty sample is undefined"));
    }
    if sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("KS statistic requires an ascending sample"));
    }
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn chi_pdf_reference_values() {
        assert_eq!(chi_pdf(0.0), 0.25);
        assert_eq!(chi_pdf(2.0), 1.0 / 16.0);
        assert_eq!(chi_pdf(-2.0), 1.0 / 16.0);
        // Continuous at the junction.
        assert_abs_diff_eq!(chi_pdf(1.0 - 1e-12), chi_pdf(1.0 + 1e-12), epsilon = 1e-9);
        assert_eq!(chi_pdf(1.0), 0.25);
    }

    /// Adaptive Simpson quadrature, used only as an independent oracle.
    fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let simpson = |a: f64, b: f64| {
            let m = 0.5 * (a + b);
            (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
        };
        let whole = simpson(a, b);
        let halves = simpson(a, m) + simpson(m, b);
        if depth == 0 || (whole - halves).abs() < 15.0 * tol {
            halves
        } else {
            integrate(f, a, m, tol / 2.0, depth - 1) + integrate(f, m, b, tol / 2.0, depth - 1)
        }
    }

    #[test]
    fn chi_pdf_integrates_to_one() {
        let total = integrate(&chi_pdf, -1e6, 1e6, 1e-7, 48);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn chi_cdf_reference_values_and_limits() {
        assert_eq!(chi_cdf(0.0), 0.5);
        assert_eq!(chi_cdf(1.0), 0.75);
        assert_eq!(chi_cdf(-1.0), 0.25);
        assert!(chi_cdf(-1e9).abs() < 1e-8);
        assert!((chi_cdf(1e9) - 1.0).abs() < 1e-8);
        // Nondecreasing across the junctions.
        let grid: Vec<f64> = (-4000..=4000).map(|i| i as f64 / 1000.0).collect();
        for w in grid.windows(2) {
            assert!(chi_cdf(w[0]) <= chi_cdf(w[1]));
        }
    }

    #[test]
    fn chi_cdf_is_the_antiderivative_of_chi_pdf() {
        for (a, b) in [(-3.0, -0.5), (-0.5, 0.5), (0.5, 4.0), (-8.0, 8.0)] {
            let mass = integrate(&chi_pdf, a, b, 1e-10, 40);
            assert_abs_diff_eq!(mass, chi_cdf(b) - chi_cdf(a), epsilon = 1e-8);
        }
    }

    #[test]
    fn in_box_probability_matches_known_one_dimensional_value() {
        let est = prob_inflection_in_box(1, 1.0, 200_000, 5).unwrap();
        assert!(
            (est.value - 0.25).abs() < 4.0 * est.stderr.max(1e-4),
            "P = {} +- {}",
            est.value,
            est.stderr
        );
        assert!(est.stderr > 0.0 && est.samples == 200_000);
    }

    #[test]
    fn in_box_probability_is_scale_free() {
        let a = prob_inflection_in_box(1, 1.0, 200_000, 6).unwrap();
        let b = prob_inflection_in_box(1, 100.0, 200_000, 7).unwrap();
        let combined = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!((a.value - b.value).abs() < 3.0 * combined);
    }

    #[test]
    fn in_box_rejects_degenerate_arguments() {
        assert!(prob_inflection_in_box(0, 1.0, 10, 1).is_err());
        assert!(prob_inflection_in_box(1, 1.0, 0, 1).is_err());
        assert!(prob_inflection_in_box(1, 0.0, 10, 1).is_err());
    }

    #[test]
    fn inflection_samples_follow_the_closed_form_cdf() {
        let mut chis = sample_inflection_points(1.0, 100_000, 9).unwrap();
        chis.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d = ks_statistic(&chis, chi_cdf).unwrap();
        assert!(d < 0.01, "KS distance {d}");
    }

    #[test]
    fn angle_histogram_supports_match_weight_bounds() {
        // arctan(u/4): 14.04° for u=1, 68.2° for u=10.
        let h1 = angle_distribution(1.0, 50_000, 3).unwrap();
        let (lo, hi) = h1.support().unwrap();
        assert!(lo >= -14.1 - 0.5 && hi <= 14.1 + 0.5, "support [{lo}, {hi}]");

        let h10 = angle_distribution(10.0, 50_000, 4).unwrap();
        let (lo, hi) = h10.support().unwrap();
        assert!(lo >= -68.3 - 0.5 && hi <= 68.3 + 0.5, "support [{lo}, {hi}]");

        // Densities integrate to one over the binned range.
        let total: f64 = (0..AngleHistogram::BINS)
            .map(|i| h10.density(i) * AngleHistogram::BIN_WIDTH_DEG)
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn wide_weight_interval_concentrates_angles_near_the_poles() {
        let h = angle_distribution(100.0, 200_000, 5).unwrap();
        let frac = h.fraction_abs_above(80.0);
        // True fraction is 1 - 4·tan(80°)/100 = 0.7731.
        assert!(frac > 0.77, "fraction above 80° = {frac}");
        assert!(frac < 0.78);
    }

    #[test]
    fn ks_statistic_bounds() {
        // Samples placed exactly at inverse-CDF quantiles.
        let n = 1000;
        let uniform_cdf = |x: f64| x.clamp(0.0, 1.0);
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&samples, uniform_cdf).unwrap();
        assert!(d <= 1.0 / n as f64 + 1e-12);

        // A point mass against a continuous CDF.
        let constant = vec![0.3; 50];
        let d = ks_statistic(&constant, uniform_cdf).unwrap();
        assert!(d >= 0.7 - 1e-12);

        assert!(ks_statistic(&[], uniform_cdf).is_err());
        assert!(ks_statistic(&[0.5, 0.1], uniform_cdf).is_err());
    }
}
