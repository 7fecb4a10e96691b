//! The ESN core: reservoir state evolution, ridge-regression readout
//! training, and observer-mode inference.
//!
//! The state update is
//!
//! ```text
//! r(t+1) = (1 - alpha) r(t) + alpha tanh(W r(t) + W_in x(t) + zeta)
//! ```
//!
//! with the bias `zeta` added to every pre-activation component, and the
//! output is the affine readout `y(t) = W_out r(t) + c`. Only the readout
//! is ever trained. In observer mode the measured input keeps driving the
//! reservoir while the readout estimates the hidden variables.

use ndarray::{Array1, Array2, ArrayView2};
use thiserror::Error;

use crate::dynamics::Trajectory;
use crate::seeding::derive_seed;
use crate::topology::{
    build_skeleton, scale_to_radius, TopologyError, TopologyKind, TopologySpec, WeightedMatrix,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Error)]
pub enum ReservoirError {
    #[error("invalid reservoir parameter: {0}")]
    InvalidParameter(String),
    #[error("readout is untrained; call train_readout first")]
    Untrained,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("normal matrix is singular with ridge_beta = 0; set ridge_beta > 0")]
    SingularNormalMatrix,
    #[error("ridge solve failed: normal matrix is not positive definite (pivot {pivot:e} at column {column})")]
    NotPositiveDefinite { pivot: f64, column: usize },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("trajectory error: {0}")]
    Trajectory(String),
}

/// All scalar hyperparameters of one ESN instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirConfig {
    /// Reservoir size N.
    pub n: usize,
    /// Target spectral radius of W.
    pub rho: f64,
    /// Target average degree D of the reservoir network.
    pub mean_degree: f64,
    /// Bias constant added to every pre-activation component.
    pub zeta: f64,
    /// Leakage rate, in (0, 1].
    pub alpha: f64,
    /// W_in entries are uniform on [-input_scale, input_scale].
    pub input_scale: f64,
    /// Ridge regularization strength for readout training.
    pub ridge_beta: f64,
    /// Which network model builds the reservoir skeleton.
    pub topology: TopologyKind,
    /// Watts-Strogatz rewiring probability (small_world only).
    pub rewire_prob: f64,
    /// Seed for all random draws of this instance.
    pub seed: u64,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        Self {
            n: 400,
            rho: 1.0,
            mean_degree: 20.0,
            zeta: 1.0,
            alpha: 1.0,
            input_scale: 1.0,
            ridge_beta: 1e-6,
            topology: TopologyKind::ErdosRenyi,
            rewire_prob: 0.1,
            seed: 42,
        }
    }
}

impl ReservoirConfig {
    pub fn validate(&self) -> Result<(), ReservoirError> {
        if self.n < 2 {
            return Err(ReservoirError::InvalidParameter(format!(
                "n must be at least 2 (got {})",
                self.n
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(ReservoirError::InvalidParameter(format!(
                "alpha must satisfy 0 < alpha <= 1 (got {})",
                self.alpha
            )));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(ReservoirError::InvalidParameter(format!(
                "rho must be positive and finite (got {})",
                self.rho
            )));
        }
        if !(self.ridge_beta >= 0.0) || !self.ridge_beta.is_finite() {
            return Err(ReservoirError::InvalidParameter(format!(
                "ridge_beta must be finite and >= 0 (got {})",
                self.ridge_beta
            )));
        }
        if !(self.input_scale >= 0.0) || !self.input_scale.is_finite() {
            return Err(ReservoirError::InvalidParameter(format!(
                "input_scale must be finite and >= 0 (got {})",
                self.input_scale
            )));
        }
        if !self.zeta.is_finite() {
            return Err(ReservoirError::InvalidParameter(format!(
                "zeta must be finite (got {})",
                self.zeta
            )));
        }
        self.topology_spec().validate()?;
        Ok(())
    }

    /// The network specification implied by this configuration.
    pub fn topology_spec(&self) -> TopologySpec {
        TopologySpec::new(self.topology, self.n, self.mean_degree, self.rewire_prob)
    }
}

/// Reservoir activation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState(Vec<f64>);

impl ReservoirState {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn from_vec(v: Vec<f64>) -> Self {
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Trained affine readout: `y = w_out r + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    /// L x N weight matrix.
    pub w_out: Array2<f64>,
    /// L-dimensional offset.
    pub c: Array1<f64>,
}

/// A reservoir observer: the frozen matrices plus the configuration that
/// produced them. Immutable once trained; shareable read-only across
/// threads.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedObserver {
    config: ReservoirConfig,
    w: WeightedMatrix,
    w_in: Array2<f64>,
    readout: Option<Readout>,
    input_channels: Vec<String>,
    target_channels: Vec<String>,
}

impl TrainedObserver {
    /// Assembles an observer from already-built parts, checking that all
    /// dimensions agree. Used by snapshot loading and tests; everyday
    /// construction goes through [`init_observer`].
    pub fn from_parts(
        config: ReservoirConfig,
        w: WeightedMatrix,
        w_in: Array2<f64>,
        input_channels: Vec<String>,
        target_channels: Vec<String>,
        readout: Option<Readout>,
    ) -> Result<Self, ReservoirError> {
        if w.n() != config.n {
            return Err(ReservoirError::DimensionMismatch(format!(
                "W is {}x{} but config.n = {}",
                w.n(),
                w.n(),
                config.n
            )));
        }
        if w_in.nrows() != config.n || w_in.ncols() != input_channels.len() {
            return Err(ReservoirError::DimensionMismatch(format!(
                "W_in is {}x{} but expected {}x{}",
                w_in.nrows(),
                w_in.ncols(),
                config.n,
                input_channels.len()
            )));
        }
        if let Some(r) = &readout {
            if r.w_out.ncols() != config.n || r.w_out.nrows() != target_channels.len() {
                return Err(ReservoirError::DimensionMismatch(format!(
                    "W_out is {}x{} but expected {}x{}",
                    r.w_out.nrows(),
                    r.w_out.ncols(),
                    target_channels.len(),
                    config.n
                )));
            }
            if r.c.len() != target_channels.len() {
                return Err(ReservoirError::DimensionMismatch(format!(
                    "readout offset has length {} but expected {}",
                    r.c.len(),
                    target_channels.len()
                )));
            }
        }
        Ok(Self { config, w, w_in, readout, input_channels, target_channels })
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.config
    }

    pub fn w(&self) -> &WeightedMatrix {
        &self.w
    }

    pub fn w_in(&self) -> &Array2<f64> {
        &self.w_in
    }

    pub fn readout(&self) -> Option<&Readout> {
        self.readout.as_ref()
    }

    pub fn k_inputs(&self) -> usize {
        self.input_channels.len()
    }

    pub fn l_outputs(&self) -> usize {
        self.target_channels.len()
    }

    pub fn input_channels(&self) -> &[String] {
        &self.input_channels
    }

    pub fn target_channels(&self) -> &[String] {
        &self.target_channels
    }

    /// Renames the input/target channels; lengths must match K and L.
    pub fn set_channels(
        &mut self,
        inputs: Vec<String>,
        targets: Vec<String>,
    ) -> Result<(), ReservoirError> {
        if inputs.len() != self.k_inputs() || targets.len() != self.l_outputs() {
            return Err(ReservoirError::DimensionMismatch(format!(
                "channel map {}+{} does not match observer dimensions {}+{}",
                inputs.len(),
                targets.len(),
                self.k_inputs(),
                self.l_outputs()
            )));
        }
        self.input_channels = inputs;
        self.target_channels = targets;
        Ok(())
    }

    pub fn set_readout(&mut self, readout: Readout) -> Result<(), ReservoirError> {
        let rebuilt = Self::from_parts(
            self.config.clone(),
            self.w.clone(),
            self.w_in.clone(),
            self.input_channels.clone(),
            self.target_channels.clone(),
            Some(readout),
        )?;
        *self = rebuilt;
        Ok(())
    }

    /// Trains the readout from a state matrix and matching targets.
    pub fn fit(
        &mut self,
        states: ArrayView2<'_, f64>,
        targets: ArrayView2<'_, f64>,
    ) -> Result<(), ReservoirError> {
        if targets.ncols() != self.l_outputs() {
            return Err(ReservoirError::DimensionMismatch(format!(
                "target width {} does not match observer outputs {}",
                targets.ncols(),
                self.l_outputs()
            )));
        }
        let readout = train_readout(states, targets, self.config.ridge_beta)?;
        self.set_readout(readout)
    }

    /// Input columns of `traj` over `rows`, in the observer's channel order.
    pub fn input_matrix(
        &self,
        traj: &Trajectory,
        rows: std::ops::Range<usize>,
    ) -> Result<Array2<f64>, ReservoirError> {
        let names: Vec<&str> = self.input_channels.iter().map(|s| s.as_str()).collect();
        traj.select(&names, rows)
            .map_err(|e| ReservoirError::Trajectory(e.to_string()))
    }

    /// Target columns of `traj` over `rows`, in the observer's channel order.
    pub fn target_matrix(
        &self,
        traj: &Trajectory,
        rows: std::ops::Range<usize>,
    ) -> Result<Array2<f64>, ReservoirError> {
        let names: Vec<&str> = self.target_channels.iter().map(|s| s.as_str()).collect();
        traj.select(&names, rows)
            .map_err(|e| ReservoirError::Trajectory(e.to_string()))
    }
}

static RHO_WARNING: std::sync::Once = std::sync::Once::new();

/// Builds an observer with an untrained readout: the reservoir matrix from
/// the configured topology rescaled to `rho`, and W_in drawn uniform on
/// [-input_scale, input_scale]. Deterministic in `config.seed`.
pub fn init_observer(
    config: &ReservoirConfig,
    k_inputs: usize,
    l_outputs: usize,
) -> Result<TrainedObserver, ReservoirError> {
    config.validate()?;
    if k_inputs < 1 || l_outputs < 1 {
        return Err(ReservoirError::InvalidParameter(format!(
            "observer needs at least one input and one output channel (got {k_inputs}, {l_outputs})"
        )));
    }
    if config.rho >= 1.0 {
        let rho = config.rho;
        RHO_WARNING.call_once(|| {
            log::warn!(
                "spectral radius {rho} >= 1: the echo property is not guaranteed (reported once per process)"
            );
        });
    }
    let skeleton = build_skeleton(&config.topology_spec(), config.seed)?;
    let weighted = crate::topology::assign_weights(&skeleton, config.seed)?;
    let w = scale_to_radius(&weighted, config.rho)?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "reservoir.w_in"));
    let scale = config.input_scale;
    let w_in = Array2::from_shape_fn((config.n, k_inputs), |_| rng.random_range(-scale..=scale));

    let input_channels = (0..k_inputs).map(|k| format!("in_{k}")).collect();
    let target_channels = (0..l_outputs).map(|l| format!("out_{l}")).collect();
    TrainedObserver::from_parts(config.clone(), w, w_in, input_channels, target_channels, None)
}

fn step_into(obs: &TrainedObserver, cur: &[f64], x: &[f64], pre: &mut [f64], next: &mut [f64]) {
    let cfg = obs.config();
    obs.w().matvec_into(cur, pre);
    for (k, &xk) in x.iter().enumerate() {
        let col = obs.w_in.column(k);
        for (p, w) in pre.iter_mut().zip(col.iter()) {
            *p += w * xk;
        }
    }
    let alpha = cfg.alpha;
    let zeta = cfg.zeta;
    for i in 0..cur.len() {
        next[i] = (1.0 - alpha) * cur[i] + alpha * (pre[i] + zeta).tanh();
    }
}

/// One state update `r' = (1 - alpha) r + alpha tanh(W r + W_in x + zeta)`.
pub fn update_state(obs: &TrainedObserver, r: &ReservoirState, x: &[f64]) -> ReservoirState {
    assert_eq!(r.len(), obs.config().n, "state length must match reservoir size");
    assert_eq!(x.len(), obs.k_inputs(), "input length must match observer inputs");
    let mut pre = vec![0.0; r.len()];
    let mut next = vec![0.0; r.len()];
    step_into(obs, r.as_slice(), x, &mut pre, &mut next);
    ReservoirState(next)
}

/// Drives the reservoir over every row of `input`, recording the state at
/// each step. Returns the collected states and the final state.
pub fn collect_states(
    obs: &TrainedObserver,
    input: ArrayView2<'_, f64>,
    r0: &ReservoirState,
) -> (Array2<f64>, ReservoirState) {
    let n = obs.config().n;
    assert_eq!(r0.len(), n, "state length must match reservoir size");
    assert_eq!(input.ncols(), obs.k_inputs(), "input width must match observer inputs");
    let steps = input.nrows();
    let mut states = Array2::zeros((steps, n));
    let mut cur = r0.as_slice().to_vec();
    let mut pre = vec![0.0; n];
    let mut next = vec![0.0; n];
    for (t, row) in input.rows().into_iter().enumerate() {
        step_into(obs, &cur, row.as_slice().expect("input rows are contiguous"), &mut pre, &mut next);
        std::mem::swap(&mut cur, &mut next);
        states.row_mut(t).assign(&ndarray::ArrayView1::from(&cur[..]));
    }
    (states, ReservoirState(cur))
}

/// Drives the reservoir without recording states (washout).
pub fn drive(
    obs: &TrainedObserver,
    input: ArrayView2<'_, f64>,
    r0: &ReservoirState,
) -> ReservoirState {
    let n = obs.config().n;
    assert_eq!(r0.len(), n, "state length must match reservoir size");
    assert_eq!(input.ncols(), obs.k_inputs(), "input width must match observer inputs");
    let mut cur = r0.as_slice().to_vec();
    let mut pre = vec![0.0; n];
    let mut next = vec![0.0; n];
    for row in input.rows() {
        step_into(obs, &cur, row.as_slice().expect("input rows are contiguous"), &mut pre, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    ReservoirState(cur)
}

/// Solves the regularized least-squares readout
/// `min |S w_out^T + 1 c^T - Y|^2 + beta |w_out|^2`
/// through the augmented normal equations; the bias column is not
/// regularized. Deterministic.
pub fn train_readout(
    states: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    ridge_beta: f64,
) -> Result<Readout, ReservoirError> {
    let rows = states.nrows();
    let n = states.ncols();
    let l = targets.ncols();
    if targets.nrows() != rows {
        return Err(ReservoirError::DimensionMismatch(format!(
            "states have {rows} rows but targets have {}",
            targets.nrows()
        )));
    }
    if rows == 0 {
        return Err(ReservoirError::InvalidParameter(
            "cannot train a readout from zero rows".into(),
        ));
    }
    if !(ridge_beta >= 0.0) || !ridge_beta.is_finite() {
        return Err(ReservoirError::InvalidParameter(format!(
            "ridge_beta must be finite and >= 0 (got {ridge_beta})"
        )));
    }
    if rows < n + 1 {
        log::warn!(
            "readout training with {rows} rows for {n} states is underdetermined; at least {} rows are recommended",
            n + 1
        );
    }

    // Augmented normal matrix A = [S 1]^T [S 1] + beta diag(I, 0), laid out
    // flat row-major with m = n + 1.
    let m = n + 1;
    let gram = states.t().dot(&states);
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            a[i * m + j] = gram[[i, j]];
        }
        a[i * m + i] += ridge_beta;
    }
    let col_sums: Vec<f64> = (0..n).map(|j| states.column(j).sum()).collect();
    for j in 0..n {
        a[n * m + j] = col_sums[j];
        a[j * m + n] = col_sums[j];
    }
    a[n * m + n] = rows as f64;

    // Right-hand side B = [S 1]^T Y, m x L.
    let sty = states.t().dot(&targets);
    let mut b = vec![0.0; m * l];
    for i in 0..n {
        for j in 0..l {
            b[i * l + j] = sty[[i, j]];
        }
    }
    for j in 0..l {
        b[n * l + j] = targets.column(j).sum();
    }

    let theta = cholesky_solve(a, b, m, l).map_err(|e| match e {
        CholeskyFailure { pivot, column } if ridge_beta == 0.0 => {
            let _ = (pivot, column);
            ReservoirError::SingularNormalMatrix
        }
        CholeskyFailure { pivot, column } => ReservoirError::NotPositiveDefinite { pivot, column },
    })?;

    let mut w_out = Array2::zeros((l, n));
    for i in 0..n {
        for j in 0..l {
            w_out[[j, i]] = theta[i * l + j];
        }
    }
    let c = Array1::from_iter((0..l).map(|j| theta[n * l + j]));
    Ok(Readout { w_out, c })
}

struct CholeskyFailure {
    pivot: f64,
    column: usize,
}

/// Solves `A X = B` for symmetric positive definite `A` (m x m, row-major)
/// by an in-place Cholesky factorization; `B` is m x l row-major.
fn cholesky_solve(
    mut a: Vec<f64>,
    mut b: Vec<f64>,
    m: usize,
    l: usize,
) -> Result<Vec<f64>, CholeskyFailure> {
    let orig_diag: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    for j in 0..m {
        let row_j = &a[j * m..j * m + j];
        let d = a[j * m + j] - row_j.iter().map(|x| x * x).sum::<f64>();
        // Relative pivot test: rank deficiency shows up as a pivot that has
        // lost essentially all of the original diagonal mass.
        if d <= 1e-13 * orig_diag[j].max(f64::MIN_POSITIVE) {
            return Err(CholeskyFailure { pivot: d, column: j });
        }
        let ljj = d.sqrt();
        a[j * m + j] = ljj;
        for i in (j + 1)..m {
            let (lo, hi) = a.split_at_mut(i * m);
            let row_j = &lo[j * m..j * m + j];
            let row_i = &mut hi[..=j];
            let s: f64 = row_i[..j].iter().zip(row_j).map(|(x, y)| x * y).sum();
            row_i[j] = (row_i[j] - s) / ljj;
        }
    }
    // Forward substitution L Z = B.
    for i in 0..m {
        for k in 0..i {
            let lik = a[i * m + k];
            for j in 0..l {
                b[i * l + j] -= lik * b[k * l + j];
            }
        }
        let lii = a[i * m + i];
        for j in 0..l {
            b[i * l + j] /= lii;
        }
    }
    // Backward substitution L^T X = Z.
    for i in (0..m).rev() {
        for k in (i + 1)..m {
            let lki = a[k * m + i];
            for j in 0..l {
                b[i * l + j] -= lki * b[k * l + j];
            }
        }
        let lii = a[i * m + i];
        for j in 0..l {
            b[i * l + j] /= lii;
        }
    }
    Ok(b)
}

/// Observer inference over `rows` of `traj`: the reservoir is driven by the
/// measured input channels while the readout emits the target estimates.
/// Returns the estimates as a trajectory on the same time grid, plus the
/// final reservoir state.
pub fn predict(
    obs: &TrainedObserver,
    traj: &Trajectory,
    rows: std::ops::Range<usize>,
    r0: &ReservoirState,
) -> Result<(Trajectory, ReservoirState), ReservoirError> {
    let readout = obs.readout().ok_or(ReservoirError::Untrained)?;
    let n = obs.config().n;
    assert_eq!(r0.len(), n, "state length must match reservoir size");
    let t0 = traj.time(rows.start);
    let input = obs.input_matrix(traj, rows)?;
    let steps = input.nrows();
    let l = obs.l_outputs();
    let mut outputs = Array2::zeros((steps, l));
    let mut cur = r0.as_slice().to_vec();
    let mut pre = vec![0.0; n];
    let mut next = vec![0.0; n];
    for (t, row) in input.rows().into_iter().enumerate() {
        step_into(obs, &cur, row.as_slice().expect("input rows are contiguous"), &mut pre, &mut next);
        std::mem::swap(&mut cur, &mut next);
        for j in 0..l {
            let w_row = readout.w_out.row(j);
            let mut acc = readout.c[j];
            for (w, r) in w_row.iter().zip(&cur) {
                acc += w * r;
            }
            outputs[[t, j]] = acc;
        }
    }
    let out_traj = Trajectory::new(t0, traj.dt(), obs.target_channels().to_vec(), outputs)
        .map_err(|e| ReservoirError::Trajectory(e.to_string()))?;
    Ok((out_traj, ReservoirState(cur)))
}
