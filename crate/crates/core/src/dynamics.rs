//! Rossler trajectory generation by fixed-step fourth-order Runge-Kutta.

use ndarray::{Array2, ArrayView2};
use thiserror::Error;

/// Relative slack used when converting continuous times to grid indices, so
/// that boundaries like `t = 100.0` on a `dt = 0.1` grid are not lost to
/// floating-point dust in `i * dt`.
const GRID_EPS: f64 = 1e-9;

/// Any component of this magnitude is treated as a diverged integration.
const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("integration diverged at step {step} (|state| > {limit:e})")]
    Diverged { step: usize, limit: f64 },
    #[error("invalid trajectory parameter: {0}")]
    InvalidParameter(String),
}

/// Coefficients of the Rossler system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosslerParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for RosslerParams {
    fn default() -> Self {
        Self { a: 0.5, b: 2.0, c: 4.0 }
    }
}

/// One point of the three-dimensional Rossler state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl StateVec3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    fn from_array(a: [f64; 3]) -> Self {
        Self { x: a[0], y: a[1], z: a[2] }
    }
}

impl Default for StateVec3 {
    /// The experiments start from (1, 1, 1); the washout window makes the
    /// attractor reached insensitive to this choice.
    fn default() -> Self {
        Self { x: 1.0, y: 1.0, z: 1.0 }
    }
}

/// Rossler vector field: (-y - z, x + a y, b + z (x - c)).
pub fn rossler_deriv(s: StateVec3, p: &RosslerParams) -> StateVec3 {
    StateVec3 {
        x: -s.y - s.z,
        y: s.x + p.a * s.y,
        z: p.b + s.z * (s.x - p.c),
    }
}

/// One classical RK4 step of an autonomous system `dy/dt = f(y)`.
///
/// Shared kernel for the Rossler stepper and for test systems of other
/// dimensions.
pub fn rk4_step_system<const D: usize>(
    f: impl Fn(&[f64; D]) -> [f64; D],
    y: &[f64; D],
    dt: f64,
) -> [f64; D] {
    let k1 = f(y);
    let mut stage = [0.0; D];
    for i in 0..D {
        stage[i] = y[i] + 0.5 * dt * k1[i];
    }
    let k2 = f(&stage);
    for i in 0..D {
        stage[i] = y[i] + 0.5 * dt * k2[i];
    }
    let k3 = f(&stage);
    for i in 0..D {
        stage[i] = y[i] + dt * k3[i];
    }
    let k4 = f(&stage);
    let mut out = [0.0; D];
    for i in 0..D {
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// One RK4 step of the Rossler system.
pub fn rk4_step(s: StateVec3, p: &RosslerParams, dt: f64) -> StateVec3 {
    let next = rk4_step_system(
        |y| rossler_deriv(StateVec3::from_array(*y), p).to_array(),
        &s.to_array(),
        dt,
    );
    StateVec3::from_array(next)
}

/// A uniformly sampled multivariate time series.
///
/// Sample `i` is taken at exactly `t0 + i * dt`; times are always computed
/// from the index, never by repeated addition.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    channels: Vec<String>,
    samples: Array2<f64>,
}

impl Trajectory {
    pub fn new(
        t0: f64,
        dt: f64,
        channels: Vec<String>,
        samples: Array2<f64>,
    ) -> Result<Self, DynamicsError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(DynamicsError::InvalidParameter(format!(
                "trajectory dt must be positive and finite (got {dt})"
            )));
        }
        if samples.ncols() != channels.len() {
            return Err(DynamicsError::InvalidParameter(format!(
                "sample width {} does not match channel count {}",
                samples.ncols(),
                channels.len()
            )));
        }
        Ok(Self { t0, dt, channels, samples })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }

    pub fn samples(&self) -> ArrayView2<'_, f64> {
        self.samples.view()
    }

    /// Time of sample `i`, exactly `t0 + i * dt`.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }

    /// Index of the first sample with time >= `t` (up to grid slack).
    pub fn index_at_or_after(&self, t: f64) -> usize {
        let raw = (t - self.t0) / self.dt;
        let idx = (raw - GRID_EPS).ceil();
        idx.max(0.0) as usize
    }

    /// Index of the last sample with time <= `t` (up to grid slack),
    /// clamped to the final sample.
    pub fn index_at_or_before(&self, t: f64) -> usize {
        let raw = (t - self.t0) / self.dt;
        let idx = (raw + GRID_EPS).floor().max(0.0) as usize;
        idx.min(self.len().saturating_sub(1))
    }

    /// Column view of the named channels over `rows`.
    pub fn select(
        &self,
        names: &[&str],
        rows: std::ops::Range<usize>,
    ) -> Result<Array2<f64>, DynamicsError> {
        let mut cols = Vec::with_capacity(names.len());
        for name in names {
            cols.push(self.channel_index(name).ok_or_else(|| {
                DynamicsError::InvalidParameter(format!("no channel named `{name}`"))
            })?);
        }
        let mut out = Array2::zeros((rows.len(), names.len()));
        for (k, &c) in cols.iter().enumerate() {
            out.column_mut(k)
                .assign(&self.samples.slice(ndarray::s![rows.clone(), c]));
        }
        Ok(out)
    }

    /// Sub-trajectory of the named channels over `rows`, keeping the grid.
    pub fn window(
        &self,
        names: &[&str],
        rows: std::ops::Range<usize>,
    ) -> Result<Trajectory, DynamicsError> {
        let t0 = self.time(rows.start);
        let samples = self.select(names, rows)?;
        Trajectory::new(t0, self.dt, names.iter().map(|s| s.to_string()).collect(), samples)
    }
}

/// Number of grid samples on `[0, t_end]` with step `dt`, inclusive of the
/// largest multiple of `dt` that is `<= t_end` (up to grid slack).
pub fn grid_len(dt: f64, t_end: f64) -> usize {
    (t_end / dt + GRID_EPS).floor() as usize + 1
}

/// Integrates the Rossler system from `s0` over `[0, t_end]`.
///
/// Returns a trajectory with channels `x, y, z` sampled at `0, dt, ...`;
/// the first sample is `s0` itself. Divergence (a non-finite component or
/// one beyond 1e6 in magnitude) aborts with the offending step index.
pub fn generate_trajectory(
    p: &RosslerParams,
    s0: StateVec3,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory, DynamicsError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(DynamicsError::InvalidParameter(format!(
            "dt must be positive and finite (got {dt})"
        )));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(DynamicsError::InvalidParameter(format!(
            "t_end must be positive and finite (got {t_end})"
        )));
    }
    let n = grid_len(dt, t_end);
    let mut samples = Array2::zeros((n, 3));
    let mut s = s0;
    for i in 0..n {
        if !s.is_finite() || s.max_abs() > DIVERGENCE_LIMIT {
            return Err(DynamicsError::Diverged { step: i, limit: DIVERGENCE_LIMIT });
        }
        samples[[i, 0]] = s.x;
        samples[[i, 1]] = s.y;
        samples[[i, 2]] = s.z;
        if i + 1 < n {
            s = rk4_step(s, p, dt);
        }
    }
    Trajectory::new(
        0.0,
        dt,
        vec!["x".to_string(), "y".to_string(), "z".to_string()],
        samples,
    )
}
