//! Experiment harness: single-parameter sweeps and the four-topology
//! comparison, with deterministic positional seeding and MSE scoring.
//!
//! One trial is the full observer pipeline: integrate the Rossler system,
//! wash the reservoir out on `[0, T0)`, train the readout on `[T0, T1)`,
//! then estimate `(y, z)` from the measured `x` on `[T1, T2]` and score the
//! estimates against the ground truth. Trials are independent; per-trial
//! seeds depend only on the master seed and the trial's position in the
//! plan, so a sweep's records do not depend on execution order or worker
//! count.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{generate_trajectory, RosslerParams, StateVec3, Trajectory};
use crate::reservoir::{collect_states, drive, init_observer, predict, ReservoirConfig, ReservoirState};
use crate::seeding::derive_trial_seed;
use crate::topology::TopologyKind;

/// Input channel driving the observer.
pub const INPUT_CHANNELS: [&str; 1] = ["x"];
/// Hidden channels the observer estimates.
pub const TARGET_CHANNELS: [&str; 2] = ["y", "z"];

/// Published single-run reference MSE per topology, kept for annotating
/// comparison reports. These are not reproduction targets; see
/// [`compare_topologies`].
pub const REFERENCE_MSE: [(TopologyKind, f64); 4] = [
    (TopologyKind::ErdosRenyi, 0.0669),
    (TopologyKind::RandomMatrix, 0.1811),
    (TopologyKind::BarabasiAlbert, 0.0808),
    (TopologyKind::SmallWorld, 0.1638),
];

/// Reference MSE for one topology kind.
pub fn reference_mse(kind: TopologyKind) -> f64 {
    REFERENCE_MSE
        .iter()
        .find(|(k, _)| *k == kind)
        .map(|(_, v)| *v)
        .expect("all kinds have a reference value")
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("shape mismatch: predicted {predicted} vs truth {truth}")]
    ShapeMismatch { predicted: String, truth: String },
    #[error("all {count} trials failed; first failure: {first}")]
    AllTrialsFailed { count: usize, first: String },
    #[error("worker pool: {0}")]
    WorkerPool(String),
}

/// The experiment time windows and sampling step: washout on `[0, t0)`,
/// training on `[t0, t1)`, prediction on `[t1, t2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindows {
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
    pub dt: f64,
}

impl Default for TimeWindows {
    fn default() -> Self {
        Self { t0: 100.0, t1: 260.0, t2: 500.0, dt: 0.1 }
    }
}

impl TimeWindows {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(HarnessError::InvalidPlan(format!(
                "dt must be positive and finite (got {})",
                self.dt
            )));
        }
        if !(self.t0 >= 0.0) {
            return Err(HarnessError::InvalidPlan(format!(
                "t0 must be non-negative (got {})",
                self.t0
            )));
        }
        if !(self.t0 < self.t1 && self.t1 < self.t2) {
            return Err(HarnessError::InvalidPlan(format!(
                "time windows must satisfy t0 < t1 < t2 (got {}, {}, {})",
                self.t0, self.t1, self.t2
            )));
        }
        Ok(())
    }
}

/// Which scalar a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweptParameter {
    /// Reservoir size.
    N,
    /// Mean degree.
    D,
    /// Start of the training window (washout end).
    T0,
    /// End of training / start of prediction.
    T1,
    /// End of prediction.
    T2,
    /// Data-generation time step (the trajectory is regenerated per value).
    Delta,
}

impl SweptParameter {
    pub const ALL: [SweptParameter; 6] = [
        SweptParameter::N,
        SweptParameter::D,
        SweptParameter::T0,
        SweptParameter::T1,
        SweptParameter::T2,
        SweptParameter::Delta,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweptParameter::N => "N",
            SweptParameter::D => "D",
            SweptParameter::T0 => "T0",
            SweptParameter::T1 => "T1",
            SweptParameter::T2 => "T2",
            SweptParameter::Delta => "delta",
        }
    }

    /// The default value list swept for this parameter.
    pub fn default_values(&self) -> Vec<f64> {
        let (a, inc, b) = match self {
            SweptParameter::N => (50.0, 50.0, 2000.0),
            SweptParameter::D => (10.0, 20.0, 390.0),
            SweptParameter::T0 => (10.0, 10.0, 200.0),
            SweptParameter::T1 => (260.0, 10.0, 450.0),
            SweptParameter::T2 => (450.0, 10.0, 800.0),
            SweptParameter::Delta => (0.02, 0.02, 0.4),
        };
        range_list(a, inc, b).expect("default lists are valid ranges")
    }
}

impl fmt::Display for SweptParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweptParameter {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "n" => Ok(SweptParameter::N),
            "d" => Ok(SweptParameter::D),
            "t0" => Ok(SweptParameter::T0),
            "t1" => Ok(SweptParameter::T1),
            "t2" => Ok(SweptParameter::T2),
            "delta" => Ok(SweptParameter::Delta),
            other => Err(HarnessError::InvalidPlan(format!(
                "unknown sweep parameter `{other}` (expected one of N, D, T0, T1, T2, delta)"
            ))),
        }
    }
}

/// A full experiment description: the base configuration, the dynamical
/// system, the time windows, and (for sweeps) the varied parameter with its
/// value list.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub base_config: ReservoirConfig,
    pub rossler: RosslerParams,
    pub s0: StateVec3,
    pub times: TimeWindows,
    pub swept: Option<SweptParameter>,
    pub values: Vec<f64>,
    pub seeds_per_value: usize,
    pub master_seed: u64,
    /// Score predictions against themselves instead of the ground truth;
    /// the resulting MSE is exactly zero on a healthy pipeline.
    pub self_test: bool,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            base_config: ReservoirConfig::default(),
            rossler: RosslerParams::default(),
            s0: StateVec3::default(),
            times: TimeWindows::default(),
            swept: None,
            values: Vec::new(),
            seeds_per_value: 10,
            master_seed: 42,
            self_test: false,
        }
    }
}

impl ExperimentPlan {
    /// A sweep plan over `parameter` with its default value list.
    pub fn sweep(parameter: SweptParameter) -> Self {
        Self {
            swept: Some(parameter),
            values: parameter.default_values(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.times.validate()?;
        self.base_config
            .validate()
            .map_err(|e| HarnessError::InvalidPlan(e.to_string()))?;
        if self.swept.is_some() && self.values.is_empty() {
            return Err(HarnessError::InvalidPlan(
                "sweep plan has a swept parameter but no values".into(),
            ));
        }
        if self.seeds_per_value < 1 {
            return Err(HarnessError::InvalidPlan(
                "seeds_per_value must be at least 1".into(),
            ));
        }
        if !self.s0.is_finite() {
            return Err(HarnessError::InvalidPlan("initial state must be finite".into()));
        }
        Ok(())
    }

    /// Reservoir configuration and time windows with `value` applied to the
    /// swept parameter.
    fn specialize(&self, value: f64) -> Result<(ReservoirConfig, TimeWindows), HarnessError> {
        let mut config = self.base_config.clone();
        let mut times = self.times;
        match self.swept {
            None => {}
            Some(SweptParameter::N) => {
                if value.fract() != 0.0 || value < 2.0 {
                    return Err(HarnessError::InvalidPlan(format!(
                        "N must be an integer >= 2 (got {value})"
                    )));
                }
                config.n = value as usize;
            }
            Some(SweptParameter::D) => {
                config.mean_degree = value;
            }
            Some(SweptParameter::T0) => times.t0 = value,
            Some(SweptParameter::T1) => times.t1 = value,
            Some(SweptParameter::T2) => times.t2 = value,
            Some(SweptParameter::Delta) => times.dt = value,
        }
        times.validate()?;
        config
            .validate()
            .map_err(|e| HarnessError::InvalidPlan(e.to_string()))?;
        Ok((config, times))
    }
}

/// One (parameter value, seed) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub parameter: String,
    pub value: f64,
    pub seed: u64,
    /// Mean squared error; `f64::INFINITY` marks a failed trial.
    pub mse: f64,
    /// Wall-clock duration of the trial in seconds.
    pub wall_seconds: f64,
    /// Failure description for diagnostics; `None` on success.
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn is_ok(&self) -> bool {
        self.mse.is_finite()
    }
}

/// Per-topology comparison statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRecord {
    pub kind: TopologyKind,
    pub seeds: Vec<u64>,
    /// Per-seed MSE, `f64::INFINITY` marking failures; trial order.
    pub mses: Vec<f64>,
    /// Median over the successful trials (NaN if none succeeded).
    pub median_mse: f64,
    /// Mean over the successful trials (NaN if none succeeded).
    pub mean_mse: f64,
    pub n_failed: usize,
}

impl ComparisonRecord {
    pub fn n_ok(&self) -> usize {
        self.mses.len() - self.n_failed
    }
}

/// Inclusive arithmetic progression `a, a + inc, ..` up to `b`; the final
/// value snaps to `b` exactly when the progression lands on it (up to a
/// relative slack of 1e-9, so fractional increments do not drop the
/// endpoint to rounding dust).
pub fn range_list(a: f64, inc: f64, b: f64) -> Result<Vec<f64>, HarnessError> {
    if !(inc > 0.0) || !inc.is_finite() {
        return Err(HarnessError::InvalidRange(format!(
            "increment must be positive and finite (got {inc})"
        )));
    }
    if !a.is_finite() || !b.is_finite() || a > b {
        return Err(HarnessError::InvalidRange(format!(
            "range must satisfy a <= b with both finite (got a = {a}, b = {b})"
        )));
    }
    let count = ((b - a) / inc + 1e-9).floor() as usize + 1;
    let snap_tol = 1e-9 * b.abs().max(1.0);
    Ok((0..count)
        .map(|k| {
            let v = a + k as f64 * inc;
            if (v - b).abs() <= snap_tol {
                b
            } else {
                v
            }
        })
        .collect())
}

/// Mean squared error over all steps and channels of two equally shaped
/// trajectories.
pub fn mse(predicted: &Trajectory, truth: &Trajectory) -> Result<f64, HarnessError> {
    let p = predicted.samples();
    let t = truth.samples();
    if p.nrows() != t.nrows() || p.ncols() != t.ncols() {
        return Err(HarnessError::ShapeMismatch {
            predicted: format!("{}x{}", p.nrows(), p.ncols()),
            truth: format!("{}x{}", t.nrows(), t.ncols()),
        });
    }
    if p.is_empty() {
        return Err(HarnessError::ShapeMismatch {
            predicted: "0x0".into(),
            truth: "0x0".into(),
        });
    }
    let sum: f64 = p
        .iter()
        .zip(t.iter())
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum();
    Ok(sum / (p.nrows() * p.ncols()) as f64)
}

/// Median of the finite entries; `None` when there are none.
pub fn median_finite(values: &[f64]) -> Option<f64> {
    let mut ok: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if ok.is_empty() {
        return None;
    }
    ok.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    let mid = ok.len() / 2;
    Some(if ok.len() % 2 == 1 {
        ok[mid]
    } else {
        0.5 * (ok[mid - 1] + ok[mid])
    })
}

fn mean_finite(values: &[f64]) -> Option<f64> {
    let ok: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if ok.is_empty() {
        return None;
    }
    Some(ok.iter().sum::<f64>() / ok.len() as f64)
}

/// The full observer pipeline for one configuration. Returns the held-out
/// MSE on the prediction window.
fn run_pipeline(
    config: &ReservoirConfig,
    rossler: &RosslerParams,
    s0: StateVec3,
    times: &TimeWindows,
    self_test: bool,
) -> Result<f64, crate::Error> {
    let traj = generate_trajectory(rossler, s0, times.dt, times.t2)?;
    let i0 = traj.index_at_or_after(times.t0);
    let i1 = traj.index_at_or_after(times.t1);
    let i2 = traj.index_at_or_before(times.t2);
    if i0 >= i1 || i1 > i2 {
        return Err(crate::Error::Harness(HarnessError::InvalidPlan(format!(
            "time windows leave no samples to work with (indices {i0}, {i1}, {i2} at dt = {})",
            times.dt
        ))));
    }

    let mut obs = init_observer(config, INPUT_CHANNELS.len(), TARGET_CHANNELS.len())?;
    obs.set_channels(
        INPUT_CHANNELS.iter().map(|s| s.to_string()).collect(),
        TARGET_CHANNELS.iter().map(|s| s.to_string()).collect(),
    )?;

    let washout_input = obs.input_matrix(&traj, 0..i0)?;
    let r_washed = drive(&obs, washout_input.view(), &ReservoirState::zeros(config.n));

    let train_input = obs.input_matrix(&traj, i0..i1)?;
    let (states, r_trained) = collect_states(&obs, train_input.view(), &r_washed);
    let targets = obs.target_matrix(&traj, i0..i1)?;
    obs.fit(states.view(), targets.view())?;

    let (pred, _) = predict(&obs, &traj, i1..(i2 + 1), &r_trained)?;
    let truth = traj
        .window(&TARGET_CHANNELS, i1..(i2 + 1))
        .map_err(crate::Error::Dynamics)?;
    let score = if self_test { mse(&pred, &pred)? } else { mse(&pred, &truth)? };
    Ok(score)
}

/// Runs one trial of `plan` with `value` applied to the swept parameter.
/// Pipeline failures become a record with infinite MSE and an error note
/// rather than aborting the sweep.
pub fn run_trial(plan: &ExperimentPlan, value: f64, seed: u64) -> SweepRecord {
    let started = Instant::now();
    let parameter = plan.swept.map(|p| p.name().to_string()).unwrap_or_else(|| "base".into());
    let outcome = plan.specialize(value).map_err(crate::Error::Harness).and_then(
        |(mut config, times)| {
            config.seed = seed;
            run_pipeline(&config, &plan.rossler, plan.s0, &times, plan.self_test)
        },
    );
    let wall_seconds = started.elapsed().as_secs_f64();
    match outcome {
        Ok(mse) => SweepRecord { parameter, value, seed, mse, wall_seconds, error: None },
        Err(e) => SweepRecord {
            parameter,
            value,
            seed,
            mse: f64::INFINITY,
            wall_seconds,
            error: Some(e.to_string()),
        },
    }
}

fn install_pool<T: Send>(
    workers: usize,
    run: impl FnOnce() -> T + Send,
) -> Result<T, HarnessError> {
    if workers == 0 {
        Ok(run())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| HarnessError::WorkerPool(e.to_string()))?;
        Ok(pool.install(run))
    }
}

/// Runs every (value, seed) trial of a sweep plan. Records come back in
/// deterministic value-major, trial-minor order regardless of the worker
/// count; a worker count of zero uses the global thread pool.
pub fn run_sweep(plan: &ExperimentPlan, workers: usize) -> Result<Vec<SweepRecord>, HarnessError> {
    plan.validate()?;
    let parameter = plan
        .swept
        .ok_or_else(|| HarnessError::InvalidPlan("run_sweep needs a swept parameter".into()))?;
    let jobs: Vec<(f64, u64)> = plan
        .values
        .iter()
        .enumerate()
        .flat_map(|(value_idx, &value)| {
            (0..plan.seeds_per_value).map(move |trial_idx| {
                (value, derive_trial_seed(plan.master_seed, parameter.name(), value_idx, trial_idx))
            })
        })
        .collect();
    let records: Vec<SweepRecord> = install_pool(workers, || {
        jobs.par_iter().map(|&(value, seed)| run_trial(plan, value, seed)).collect()
    })?;
    if let Some(first_failed) = records.iter().find(|r| !r.is_ok()) {
        if records.iter().all(|r| !r.is_ok()) {
            return Err(HarnessError::AllTrialsFailed {
                count: records.len(),
                first: first_failed.error.clone().unwrap_or_else(|| "unknown".into()),
            });
        }
    }
    Ok(records)
}

/// Runs `seeds_per_value` trials of the base configuration for each
/// topology kind. Per-trial seeds are derived from the kind's name, so the
/// results do not depend on the order of `kinds`.
pub fn compare_topologies(
    plan: &ExperimentPlan,
    kinds: &[TopologyKind],
    workers: usize,
) -> Result<Vec<ComparisonRecord>, HarnessError> {
    plan.validate()?;
    if kinds.is_empty() {
        return Err(HarnessError::InvalidPlan("no topology kinds requested".into()));
    }
    let jobs: Vec<(TopologyKind, u64)> = kinds
        .iter()
        .flat_map(|&kind| {
            (0..plan.seeds_per_value).map(move |trial_idx| {
                (
                    kind,
                    derive_trial_seed(
                        plan.master_seed,
                        &format!("topology:{}", kind.name()),
                        0,
                        trial_idx,
                    ),
                )
            })
        })
        .collect();
    let outcomes: Vec<(TopologyKind, u64, Result<f64, String>)> = install_pool(workers, || {
        jobs.par_iter()
            .map(|&(kind, seed)| {
                let mut config = plan.base_config.clone();
                config.topology = kind;
                config.seed = seed;
                let result =
                    run_pipeline(&config, &plan.rossler, plan.s0, &plan.times, plan.self_test)
                        .map_err(|e| e.to_string());
                (kind, seed, result)
            })
            .collect()
    })?;

    if outcomes.iter().all(|(_, _, r)| r.is_err()) {
        let first = outcomes
            .first()
            .and_then(|(_, _, r)| r.as_ref().err().cloned())
            .unwrap_or_else(|| "unknown".into());
        return Err(HarnessError::AllTrialsFailed { count: outcomes.len(), first });
    }

    let mut records = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let mut seeds = Vec::with_capacity(plan.seeds_per_value);
        let mut mses = Vec::with_capacity(plan.seeds_per_value);
        let mut n_failed = 0;
        for (k, seed, result) in &outcomes {
            if *k != kind {
                continue;
            }
            seeds.push(*seed);
            match result {
                Ok(v) => mses.push(*v),
                Err(_) => {
                    mses.push(f64::INFINITY);
                    n_failed += 1;
                }
            }
        }
        records.push(ComparisonRecord {
            kind,
            median_mse: median_finite(&mses).unwrap_or(f64::NAN),
            mean_mse: mean_finite(&mses).unwrap_or(f64::NAN),
            n_failed,
            seeds,
            mses,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan() -> ExperimentPlan {
        ExperimentPlan {
            base_config: ReservoirConfig {
                n: 50,
                mean_degree: 6.0,
                ..ReservoirConfig::default()
            },
            times: TimeWindows { t0: 10.0, t1: 30.0, t2: 45.0, dt: 0.1 },
            seeds_per_value: 2,
            ..ExperimentPlan::default()
        }
    }

    fn traj_of(rows: Vec<[f64; 2]>) -> Trajectory {
        let n = rows.len();
        let mut samples = ndarray::Array2::zeros((n, 2));
        for (i, r) in rows.iter().enumerate() {
            samples[[i, 0]] = r[0];
            samples[[i, 1]] = r[1];
        }
        Trajectory::new(0.0, 0.1, vec!["y".into(), "z".into()], samples).unwrap()
    }

    #[test]
    fn range_list_matches_published_sweeps() {
        let n = range_list(50.0, 50.0, 2000.0).unwrap();
        assert_eq!(n.len(), 40);
        assert_eq!(n[0], 50.0);
        assert_eq!(*n.last().unwrap(), 2000.0);

        let d = range_list(10.0, 20.0, 390.0).unwrap();
        assert_eq!(d.len(), 20);
        assert_eq!(d[2], 50.0);
        assert_eq!(*d.last().unwrap(), 390.0);

        assert_eq!(range_list(5.0, 10.0, 5.0).unwrap(), vec![5.0]);
    }

    #[test]
    fn range_list_snaps_fractional_endpoint() {
        let delta = range_list(0.02, 0.02, 0.4).unwrap();
        assert_eq!(delta.len(), 20);
        assert_eq!(*delta.last().unwrap(), 0.4);
    }

    #[test]
    fn range_list_rejects_bad_parameters() {
        assert!(range_list(1.0, 0.0, 5.0).is_err());
        assert!(range_list(1.0, -1.0, 5.0).is_err());
        assert!(range_list(5.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn default_sweeps_use_published_lists() {
        assert_eq!(SweptParameter::N.default_values().len(), 40);
        assert_eq!(SweptParameter::D.default_values().len(), 20);
        assert_eq!(
            SweptParameter::T0.default_values(),
            range_list(10.0, 10.0, 200.0).unwrap()
        );
        assert_eq!(
            SweptParameter::T1.default_values(),
            range_list(260.0, 10.0, 450.0).unwrap()
        );
        assert_eq!(
            SweptParameter::T2.default_values(),
            range_list(450.0, 10.0, 800.0).unwrap()
        );
        assert_eq!(SweptParameter::Delta.default_values().len(), 20);
    }

    #[test]
    fn mse_of_identical_series_is_zero() {
        let a = traj_of(vec![[1.0, 2.0], [3.0, -1.0]]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn mse_of_unit_offset_is_one() {
        let a = traj_of(vec![[1.0, 2.0], [3.0, -1.0]]);
        let b = traj_of(vec![[2.0, 3.0], [4.0, 0.0]]);
        assert_eq!(mse(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn mse_hand_computed_case() {
        let a = traj_of(vec![[0.0, 0.0], [0.0, 0.0]]);
        let b = traj_of(vec![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(mse(&a, &b).unwrap(), 7.5);
    }

    #[test]
    fn mse_is_symmetric_and_scales_quadratically() {
        let a = traj_of(vec![[0.4, -0.2], [1.1, 0.0], [2.0, -3.0]]);
        let b = traj_of(vec![[0.1, 0.3], [1.0, -0.5], [1.5, -2.0]]);
        assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
        let doubled_a = traj_of(vec![[0.8, -0.4], [2.2, 0.0], [4.0, -6.0]]);
        let doubled_b = traj_of(vec![[0.2, 0.6], [2.0, -1.0], [3.0, -4.0]]);
        let base = mse(&a, &b).unwrap();
        let scaled = mse(&doubled_a, &doubled_b).unwrap();
        assert!((scaled - 4.0 * base).abs() < 1e-12 * scaled.max(1.0));
    }

    #[test]
    fn mse_rejects_shape_mismatch() {
        let a = traj_of(vec![[1.0, 2.0]]);
        let b = traj_of(vec![[1.0, 2.0], [3.0, 4.0]]);
        assert!(mse(&a, &b).is_err());
    }

    #[test]
    fn trials_are_deterministic() {
        let plan = small_plan();
        let a = run_trial(&plan, 0.0, 1234);
        let b = run_trial(&plan, 0.0, 1234);
        assert!(a.is_ok(), "trial failed: {:?}", a.error);
        assert_eq!(a.mse.to_bits(), b.mse.to_bits(), "same trial must reproduce bit-identically");
    }

    #[test]
    fn self_test_mode_scores_zero() {
        let plan = ExperimentPlan { self_test: true, ..small_plan() };
        let rec = run_trial(&plan, 0.0, 7);
        assert!(rec.is_ok(), "trial failed: {:?}", rec.error);
        assert_eq!(rec.mse, 0.0);
    }

    #[test]
    fn degenerate_sweep_has_single_record() {
        let plan = ExperimentPlan {
            swept: Some(SweptParameter::D),
            values: vec![6.0],
            seeds_per_value: 1,
            ..small_plan()
        };
        let records = run_sweep(&plan, 0).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].parameter, "D");
        assert_eq!(records[0].value, 6.0);
        assert!(records[0].is_ok());
    }

    #[test]
    fn sweep_records_are_worker_count_invariant() {
        let plan = ExperimentPlan {
            swept: Some(SweptParameter::D),
            values: vec![4.0, 8.0],
            seeds_per_value: 2,
            ..small_plan()
        };
        let serial = run_sweep(&plan, 1).unwrap();
        let parallel = run_sweep(&plan, 4).unwrap();
        assert_eq!(serial.len(), parallel.len());
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.value, b.value);
            assert_eq!(a.seed, b.seed);
            assert_eq!(a.mse.to_bits(), b.mse.to_bits());
        }
    }

    #[test]
    fn sweep_record_round_trips_to_same_mse() {
        let plan = ExperimentPlan {
            swept: Some(SweptParameter::D),
            values: vec![4.0, 8.0],
            seeds_per_value: 2,
            ..small_plan()
        };
        let records = run_sweep(&plan, 0).unwrap();
        for rec in &records {
            let again = run_trial(&plan, rec.value, rec.seed);
            assert_eq!(rec.mse.to_bits(), again.mse.to_bits());
        }
    }

    #[test]
    fn invalid_time_window_value_becomes_failure_record() {
        // T0 beyond T1 violates t0 < t1 and must not crash the sweep.
        let plan = ExperimentPlan {
            swept: Some(SweptParameter::T0),
            values: vec![10.0, 500.0],
            seeds_per_value: 1,
            ..small_plan()
        };
        let records = run_sweep(&plan, 0).unwrap();
        assert!(records[0].is_ok());
        assert!(!records[1].is_ok());
        assert_eq!(records[1].mse, f64::INFINITY);
        assert!(records[1].error.as_deref().unwrap_or("").contains("t0 < t1"));
    }

    #[test]
    fn all_failed_sweep_is_an_error() {
        let plan = ExperimentPlan {
            swept: Some(SweptParameter::T0),
            values: vec![400.0],
            seeds_per_value: 2,
            ..small_plan()
        };
        let err = run_sweep(&plan, 0).unwrap_err();
        assert!(matches!(err, HarnessError::AllTrialsFailed { count: 2, .. }));
    }

    #[test]
    fn single_kind_comparison_wraps_one_trial() {
        let plan = ExperimentPlan { seeds_per_value: 1, ..small_plan() };
        let records = compare_topologies(&plan, &[TopologyKind::ErdosRenyi], 0).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].mses.len(), 1);
        assert_eq!(records[0].n_failed, 0);
        assert_eq!(records[0].median_mse, records[0].mses[0]);
    }

    #[test]
    fn comparison_statistics_are_consistent_with_lists() {
        let plan = ExperimentPlan { seeds_per_value: 3, ..small_plan() };
        let records =
            compare_topologies(&plan, &[TopologyKind::ErdosRenyi, TopologyKind::RandomMatrix], 0)
                .unwrap();
        for rec in &records {
            assert_eq!(rec.mses.len(), 3);
            assert_eq!(rec.n_ok(), 3);
            let expect_median = median_finite(&rec.mses).unwrap();
            assert_eq!(rec.median_mse, expect_median);
        }
    }

    #[test]
    fn comparison_seeds_do_not_depend_on_kind_order() {
        let plan = ExperimentPlan { seeds_per_value: 2, ..small_plan() };
        let ab = compare_topologies(
            &plan,
            &[TopologyKind::ErdosRenyi, TopologyKind::SmallWorld],
            0,
        )
        .unwrap();
        let ba = compare_topologies(
            &plan,
            &[TopologyKind::SmallWorld, TopologyKind::ErdosRenyi],
            0,
        )
        .unwrap();
        let er_ab = ab.iter().find(|r| r.kind == TopologyKind::ErdosRenyi).unwrap();
        let er_ba = ba.iter().find(|r| r.kind == TopologyKind::ErdosRenyi).unwrap();
        assert_eq!(er_ab.seeds, er_ba.seeds);
        assert_eq!(er_ab.mses, er_ba.mses);
    }

    #[test]
    fn reference_values_cover_all_kinds() {
        assert_eq!(reference_mse(TopologyKind::ErdosRenyi), 0.0669);
        assert_eq!(reference_mse(TopologyKind::RandomMatrix), 0.1811);
        assert_eq!(reference_mse(TopologyKind::BarabasiAlbert), 0.0808);
        assert_eq!(reference_mse(TopologyKind::SmallWorld), 0.1638);
    }

    #[test]
    fn median_handles_even_odd_and_infinite() {
        assert_eq!(median_finite(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median_finite(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median_finite(&[1.0, f64::INFINITY, 3.0]), Some(2.0));
        assert_eq!(median_finite(&[f64::INFINITY]), None);
        assert_eq!(median_finite(&[]), None);
    }

    #[test]
    fn plan_sweep_constructor_uses_default_lists() {
        let plan = ExperimentPlan::sweep(SweptParameter::N);
        assert_eq!(plan.swept, Some(SweptParameter::N));
        assert_eq!(plan.values.len(), 40);
        plan.validate().unwrap();
    }
}
