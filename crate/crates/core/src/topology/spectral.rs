//! Spectral radius estimation and rescaling.
//!
//! The workhorse is a power iteration that fits the dominant eigenvalue
//! pair from the Krylov triple (v, Wv, W^2 v) each sweep. The two-term fit
//! also converges when the dominant eigenvalue is a complex-conjugate pair,
//! where the classical Rayleigh quotient would oscillate forever. Small
//! matrices and non-converged cases go through a dense Schur decomposition.

use nalgebra::DMatrix;

use super::{TopologyError, WeightedMatrix};

/// Relative tolerance on the radius estimate between successive sweeps.
const POWER_TOL: f64 = 1e-10;

/// Matrices up to this dimension skip straight to the dense eigensolver.
const DENSE_CUTOFF: usize = 64;

/// Outcome of [`power_iteration`]: the best radius estimate, whether the
/// tolerance was reached, and the number of matrix-vector products spent.
#[derive(Debug, Clone, Copy)]
pub struct PowerIterationResult {
    pub estimate: f64,
    pub converged: bool,
    pub matvecs: usize,
}

/// Deterministic pseudo-random start vector (splitmix64 stream), so the
/// iteration never aligns with a structured eigenvector by accident and
/// identical matrices always produce identical estimates.
fn start_vector(n: usize, stream: u64) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1));
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        // map to [-0.5, 0.5)
        v.push((z >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
    }
    normalize(&mut v);
    v
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest eigenvalue magnitude by deflation-free power iteration, capped
/// at 10 n iterations. One iteration applies the matrix twice and reads the
/// dominant pair off the quadratic `z^2 + p z + q` fitted to the Krylov
/// triple (v, Wv, W^2 v); that fit also resolves complex-conjugate dominant
/// pairs, which a plain Rayleigh quotient cannot. The magnitude estimate is
/// compared across iterations at 1e-10 relative tolerance.
pub fn power_iteration(w: &WeightedMatrix) -> PowerIterationResult {
    let n = w.n();
    let cap = 10 * n;
    let mut iterations = 0;
    let mut matvecs = 0;
    // A couple of restarts guard against a start vector inside an invariant
    // subspace that the matrix annihilates.
    for stream in 0..3u64 {
        let mut v = start_vector(n, stream);
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut prev: Option<f64> = None;
        let mut stable_passes = 0;
        while iterations < cap {
            iterations += 1;
            w.matvec_into(&v, &mut u1);
            w.matvec_into(&u1, &mut u2);
            matvecs += 2;

            let a11 = dot(&u1, &u1);
            if a11 == 0.0 {
                // v is annihilated; restart, or report radius zero if that
                // keeps happening (zero or nilpotent matrix).
                break;
            }
            let a12 = dot(&u1, &v);
            let b1 = dot(&u2, &u1);
            let b2 = dot(&u2, &v);
            // Least squares for min |u2 + p u1 + q v| (v has unit norm).
            let det = a11 - a12 * a12;
            let estimate = if det > 1e-12 * a11 {
                let p = (-b1 + b2 * a12) / det;
                let q = (-b2 * a11 + b1 * a12) / det;
                let disc = p * p - 4.0 * q;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    (0.5 * (-p + s)).abs().max((0.5 * (-p - s)).abs())
                } else {
                    // Complex pair; q is the squared magnitude.
                    q.sqrt()
                }
            } else {
                // u1 is already parallel to v: plain Rayleigh quotient.
                a12.abs()
            };

            if let Some(prev_est) = prev {
                let scale = estimate.abs().max(prev_est.abs()).max(f64::MIN_POSITIVE);
                if (estimate - prev_est).abs() <= POWER_TOL * scale {
                    stable_passes += 1;
                    if stable_passes >= 2 {
                        return PowerIterationResult { estimate, converged: true, matvecs };
                    }
                } else {
                    stable_passes = 0;
                }
            }
            prev = Some(estimate);

            let u2_norm = normalize(&mut u2);
            if u2_norm == 0.0 {
                break;
            }
            std::mem::swap(&mut v, &mut u2);
        }
        if let Some(estimate) = prev {
            if iterations >= cap {
                return PowerIterationResult { estimate, converged: false, matvecs };
            }
            // restart due to annihilation: try the next start vector
            continue;
        }
    }
    // Every start vector was annihilated immediately: the matrix acts as
    // zero on all of them, so report radius zero.
    PowerIterationResult { estimate: 0.0, converged: true, matvecs }
}

/// Brute-force spectral radius via a dense Schur decomposition.
pub fn dense_spectral_radius(w: &WeightedMatrix) -> Result<f64, TopologyError> {
    let n = w.n();
    let mut dense = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in w.entries() {
        dense[(i, j)] = v;
    }
    let schur = nalgebra::linalg::Schur::try_new(dense, f64::EPSILON, 200 * n.max(10))
        .ok_or(TopologyError::NonConvergence { n })?;
    let eigs = schur.complex_eigenvalues();
    Ok(eigs.iter().map(|e| e.norm()).fold(0.0, f64::max))
}

/// Largest eigenvalue magnitude of `w`.
///
/// Dimensions up to 64 use the dense method directly; larger matrices use
/// [`power_iteration`] and only fall back to the dense method when the
/// iteration budget runs out without convergence.
pub fn spectral_radius(w: &WeightedMatrix) -> Result<f64, TopologyError> {
    if w.n() <= DENSE_CUTOFF {
        return dense_spectral_radius(w);
    }
    let result = power_iteration(w);
    if result.converged {
        Ok(result.estimate)
    } else {
        log::debug!(
            "power iteration stalled at {} after {} matvecs (n = {}); using dense fallback",
            result.estimate,
            result.matvecs,
            w.n()
        );
        dense_spectral_radius(w)
    }
}

/// Rescales `w` so its spectral radius equals `rho_target`, preserving the
/// sparsity structure exactly.
pub fn scale_to_radius(w: &WeightedMatrix, rho_target: f64) -> Result<WeightedMatrix, TopologyError> {
    if !(rho_target > 0.0) || !rho_target.is_finite() {
        return Err(TopologyError::InvalidParameter(format!(
            "target spectral radius must be positive and finite (got {rho_target})"
        )));
    }
    let rho = spectral_radius(w)?;
    if rho <= f64::MIN_POSITIVE {
        return Err(TopologyError::ZeroSpectralRadius { target: rho_target });
    }
    Ok(w.scaled(rho_target / rho))
}
