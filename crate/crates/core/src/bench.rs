//! Experiment harness: method-comparison grids over synthetic fitting tasks.
//!
//! A grid run sweeps (method × node count × bound) cells, repeats each cell
//! over seeded trials, and reports per (method, node count) the bound with
//! the lowest mean test RMSE. Dataset seeds are derived per trial and shared
//! by every cell of that trial, so methods compete on identical data; layer
//! seeds are derived from the full cell coordinates. Cells are independent
//! jobs and may run on any number of threads without changing a single bit
//! of the report.

use crate::datagen::{self, Dataset, NormalizationOrder};
use crate::error::{Error, Result};
use crate::network::{self, hidden_matrix};
use crate::paramgen::{self, AnchorStrategy, Method};
use crate::seeding::{self, seed_serde};
use crate::solver::{fit_output_weights, rmse, FitOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

const TAG_TRAIN: u64 = 0x30;
const TAG_TEST: u64 = 0x31;
const TAG_LAYER: u64 = 0x32;

/// Angle grids may list 0°, which the angle-uniform scheme cannot accept
/// (its tangent-based weights need a strictly positive lower bound); such
/// entries are raised to this floor.
pub const ALPHA_MIN_FLOOR_DEG: f64 = 0.5;

/// How the best bound per (method, node count) is selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    /// Pick the bound with the lowest mean test RMSE (oracle selection;
    /// matches how the comparison curves are usually reported).
    #[serde(rename = "test")]
    Test,
    /// Pick by mean RMSE on a held-out tail of the training set; test RMSE
    /// is still what gets reported.
    #[serde(rename = "holdout")]
    Holdout,
}

/// Target function used by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetKind {
    /// The oscillatory benchmark target (see [`datagen::target_nd`]).
    #[serde(rename = "standard")]
    Standard,
    /// Identically zero; a smoke-test target every method fits exactly.
    #[serde(rename = "zero")]
    Zero,
}

/// Full description of a comparison experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dims: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub noise: f64,
    pub order: NormalizationOrder,
    pub methods: Vec<Method>,
    pub node_counts: Vec<usize>,
    /// Bound grid for the uniform-weight methods.
    pub u_grid: Vec<f64>,
    /// Lower-angle grid (degrees) for the angle-uniform method.
    pub alpha_min_grid: Vec<f64>,
    pub alpha_max: f64,
    pub anchor_strategy: AnchorStrategy,
    pub trials: u32,
    #[serde(with = "seed_serde")]
    pub seed: u64,
    pub selection: Selection,
    /// Fraction of the training set held out when `selection = "holdout"`.
    pub holdout_fraction: f64,
    pub target: TargetKind,
    pub ridge: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dims: 1,
            train_size: 5000,
            test_size: 5000,
            noise: 0.2,
            order: NormalizationOrder::NormalizeThenNoise,
            methods: vec![Method::Sm, Method::PmU, Method::PmAlpha],
            node_counts: vec![25, 50, 100],
            u_grid: vec![
                1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 20.0, 50.0, 100.0,
            ],
            alpha_min_grid: vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0],
            alpha_max: 90.0,
            anchor_strategy: AnchorStrategy::TrainingSample,
            trials: 20,
            seed: 42,
            selection: Selection::Test,
            holdout_fraction: 0.2,
            target: TargetKind::Standard,
            ridge: 0.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 || self.train_size == 0 || self.test_size == 0 {
            return Err(Error::invalid("dims and set sizes must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trial count must be positive"));
        }
        if self.methods.is_empty() || self.node_counts.is_empty() {
            return Err(Error::invalid("methods and node_counts must be nonempty"));
        }
        if self.node_counts.iter().any(|&m| m == 0) {
            return Err(Error::invalid("node counts must be positive"));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::invalid("noise amplitude must be >= 0"));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::invalid("ridge parameter must be >= 0"));
        }
        for method in &self.methods {
            if self.grid_for(*method).is_empty() {
                return Err(Error::invalid(format!(
                    "method {method} has an empty hyperparameter grid"
                )));
            }
        }
        if !(self.alpha_max > 0.0 && self.alpha_max <= 90.0) {
            return Err(Error::invalid(format!(
                "alpha_max must lie in (0, 90], got {}",
                self.alpha_max
            )));
        }
        if self.selection == Selection::Holdout
            && !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0)
        {
            return Err(Error::invalid(format!(
                "holdout fraction must lie in (0, 1), got {}",
                self.holdout_fraction
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Parse(format!("experiment config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// The hyperparameter grid a method sweeps, with angle floors applied.
    pub fn grid_for(&self, method: Method) -> Vec<f64> {
        match method {
            Method::Sm | Method::PmU => self.u_grid.clone(),
            Method::PmAlpha => self
                .alpha_min_grid
                .iter()
                .map(|&a| a.max(ALPHA_MIN_FLOOR_DEG))
                .collect(),
        }
    }

    fn target_fn(&self) -> fn(&[f64]) -> f64 {
        match self.target {
            TargetKind::Standard => |x| datagen::target_nd(x).expect("dims >= 1"),
            TargetKind::Zero => |_| 0.0,
        }
    }

    fn train_dataset(&self, trial: u32) -> Result<Dataset> {
        let seed = seeding::derive_seed(&[
            self.seed,
            TAG_TRAIN,
            self.dims as u64,
            self.train_size as u64,
            trial as u64,
        ]);
        datagen::make_dataset_with(
            self.dims,
            self.train_size,
            self.noise,
            seed,
            self.order,
            true,
            self.target_fn(),
        )
    }

    fn test_dataset(&self, trial: u32) -> Result<Dataset> {
        let seed = seeding::derive_seed(&[
            self.seed,
            TAG_TEST,
            self.dims as u64,
            self.test_size as u64,
            trial as u64,
        ]);
        datagen::make_dataset_with(
            self.dims,
            self.test_size,
            self.noise,
            seed,
            self.order,
            false,
            self.target_fn(),
        )
    }

    fn layer_seed(&self, method: Method, nodes: usize, hyper: f64, trial: u32) -> u64 {
        let method_id = match method {
            Method::Sm => 1u64,
            Method::PmU => 2,
            Method::PmAlpha => 3,
        };
        seeding::derive_seed(&[
            self.seed,
            TAG_LAYER,
            method_id,
            nodes as u64,
            hyper.to_bits(),
            trial as u64,
        ])
    }
}

/// Test RMSE (and holdout RMSE when configured) of one fitted cell.
#[derive(Debug, Clone, Copy)]
struct CellOutcome {
    test_rmse: f64,
    selection_rmse: f64,
}

/// Runs a single (method, node count, bound, trial) cell end to end:
/// fresh train/test data, layer generation, least-squares fit, test RMSE.
pub fn run_cell(
    config: &ExperimentConfig,
    method: Method,
    nodes: usize,
    hyper: f64,
    trial: u32,
) -> Result<f64> {
    Ok(run_cell_full(config, method, nodes, hyper, trial)?.test_rmse)
}

fn run_cell_full(
    config: &ExperimentConfig,
    method: Method,
    nodes: usize,
    hyper: f64,
    trial: u32,
) -> Result<CellOutcome> {
    config.validate()?;
    if nodes == 0 {
        return Err(Error::invalid("at least one hidden node is required"));
    }
    let train = config.train_dataset(trial)?;
    let test = config.test_dataset(trial)?;

    // In holdout mode the tail of the training set is reserved for bound
    // selection; anchors and the fit only ever see the head.
    let (fit_set, holdout) = match config.selection {
        Selection::Test => (train, None),
        Selection::Holdout => {
            let keep = ((train.n_points() as f64) * (1.0 - config.holdout_fraction)).ceil()
                as usize;
            let keep = keep.clamp(1, train.n_points() - 1);
            (train.head(keep)?, Some(train.tail(keep)?))
        }
    };

    let seed = config.layer_seed(method, nodes, hyper, trial);
    let layer = match method {
        Method::Sm => paramgen::gen_sm(nodes, config.dims, hyper, seed)?,
        Method::PmU => paramgen::gen_pmu(
            nodes,
            config.dims,
            hyper,
            config.anchor_strategy,
            &fit_set,
            seed,
        )?,
        Method::PmAlpha => paramgen::gen_pmalpha(
            nodes,
            config.dims,
            hyper,
            config.alpha_max,
            config.anchor_strategy,
            &fit_set,
            seed,
        )?,
    };
    network::audit_anchoring(&layer, 1e-12)?;

    let h = hidden_matrix(fit_set.inputs(), &layer)?;
    let beta = fit_output_weights(
        &h,
        fit_set.targets(),
        &FitOptions {
            ridge_lambda: config.ridge,
            ..Default::default()
        },
    )?;

    let eval = |ds: &Dataset| -> Result<f64> {
        let h = hidden_matrix(ds.inputs(), &layer)?;
        let pred = &h * &beta;
        rmse(pred.as_slice(), ds.targets().as_slice())
    };
    let test_rmse = eval(&test)?;
    let selection_rmse = match &holdout {
        Some(val) => eval(val)?,
        None => test_rmse,
    };
    Ok(CellOutcome {
        test_rmse,
        selection_rmse,
    })
}

/// Statistics of the winning bound for one (method, node count) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub method: Method,
    pub nodes: usize,
    /// The selected bound: `u` for the uniform-weight methods, `α_min` in
    /// degrees for the angle-uniform method (floored value, as executed).
    pub hyperparam: f64,
    pub mean_rmse: f64,
    pub std_rmse: f64,
    pub trial_rmses: Vec<f64>,
}

/// All cells of a grid run, in method-major, node-count-minor config order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn cell(&self, method: Method, nodes: usize) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.nodes == nodes)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

/// Sweeps the full grid, in parallel over cells, and selects the best bound
/// per (method, node count). Deterministic for a given config regardless of
/// thread count.
pub fn run_grid(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;

    struct Job {
        method: Method,
        nodes: usize,
        hyper: f64,
        trial: u32,
    }
    let mut jobs = Vec::new();
    for &method in &config.methods {
        for &nodes in &config.node_counts {
            for &hyper in &config.grid_for(method) {
                for trial in 0..config.trials {
                    jobs.push(Job {
                        method,
                        nodes,
                        hyper,
                        trial,
                    });
                }
            }
        }
    }

    let outcomes: Result<Vec<CellOutcome>> = jobs
        .par_iter()
        .map(|job| run_cell_full(config, job.method, job.nodes, job.hyper, job.trial))
        .collect();
    let outcomes = outcomes?;

    let mut cells = Vec::new();
    let mut cursor = 0usize;
    for &method in &config.methods {
        for &nodes in &config.node_counts {
            let mut best: Option<(f64, CellReport)> = None;
            for &hyper in &config.grid_for(method) {
                let chunk = &outcomes[cursor..cursor + config.trials as usize];
                cursor += config.trials as usize;
                let test_rmses: Vec<f64> = chunk.iter().map(|o| o.test_rmse).collect();
                let (sel_mean, _) =
                    mean_std(&chunk.iter().map(|o| o.selection_rmse).collect::<Vec<_>>());
                let (mean, std) = mean_std(&test_rmses);
                let better = match &best {
                    None => true,
                    Some((score, _)) => sel_mean < *score,
                };
                if better {
                    best = Some((
                        sel_mean,
                        CellReport {
                            method,
                            nodes,
                            hyperparam: hyper,
                            mean_rmse: mean,
                            std_rmse: std,
                            trial_rmses: test_rmses,
                        },
                    ));
                }
            }
            cells.push(best.expect("nonempty grid").1);
        }
    }
    Ok(ExperimentReport { cells })
}

/// Writes the report as CSV: `method,nodes,hyperparam,mean_rmse,std_rmse,trials`.
pub fn emit_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    std::fs::write(path, report_to_csv(report))?;
    Ok(())
}

pub fn report_to_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("method,nodes,hyperparam,mean_rmse,std_rmse,trials\n");
    for cell in &report.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            cell.method,
            cell.nodes,
            datagen::fmt_f64(cell.hyperparam),
            datagen::fmt_f64(cell.mean_rmse),
            datagen::fmt_f64(cell.std_rmse),
            cell.trial_rmses.len()
        );
    }
    out
}

/// One parsed row of a report CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: Method,
    pub nodes: usize,
    pub hyperparam: f64,
    pub mean_rmse: f64,
    pub std_rmse: f64,
    pub trials: usize,
}

/// Parses a CSV written by [`emit_report`].
pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("method,nodes,hyperparam,mean_rmse,std_rmse,trials") => {}
        other => {
            return Err(Error::Parse(format!(
                "unexpected report header: {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse(format!(
                "report row {} has {} fields",
                i + 2,
                fields.len()
            )));
        }
        let method = match fields[0] {
            "sm" => Method::Sm,
            "pmu" => Method::PmU,
            "pma" => Method::PmAlpha,
            other => return Err(Error::Parse(format!("unknown method {other:?}"))),
        };
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| Error::Parse(format!("report row {}: {e}", i + 2)))
        };
        rows.push(ReportRow {
            method,
            nodes: fields[1]
                .parse()
                .map_err(|e| Error::Parse(format!("report row {}: {e}", i + 2)))?,
            hyperparam: parse(fields[2])?,
            mean_rmse: parse(fields[3])?,
            std_rmse: parse(fields[4])?,
            trials: fields[5]
                .parse()
                .map_err(|e| Error::Parse(format!("report row {}: {e}", i + 2)))?,
        });
    }
    Ok(rows)
}
