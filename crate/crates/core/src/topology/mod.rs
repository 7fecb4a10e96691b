//! Reservoir topology: complex-network skeletons, weight assignment, and
//! spectral-radius rescaling.
//!
//! A reservoir coupling matrix is built in three steps: [`build_skeleton`]
//! realizes the 0/1 adjacency structure of one of four network models,
//! [`assign_weights`] draws an independent uniform weight for every stored
//! entry, and [`scale_to_radius`] rescales the whole matrix so its spectral
//! radius hits a target value.

mod spectral;

pub use spectral::{
    dense_spectral_radius, power_iteration, scale_to_radius, spectral_radius,
    PowerIterationResult,
};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid topology parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot scale matrix with zero spectral radius to {target}")]
    ZeroSpectralRadius { target: f64 },
    #[error("spectral radius did not converge for n = {n} (power iteration and dense fallback both failed)")]
    NonConvergence { n: usize },
}

/// The four reservoir network models compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    ErdosRenyi,
    BarabasiAlbert,
    SmallWorld,
    RandomMatrix,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 4] = [
        TopologyKind::ErdosRenyi,
        TopologyKind::BarabasiAlbert,
        TopologyKind::SmallWorld,
        TopologyKind::RandomMatrix,
    ];

    /// Stable snake_case name used in config files, CSV output and seeds.
    pub fn name(&self) -> &'static str {
        match self {
            TopologyKind::ErdosRenyi => "erdos_renyi",
            TopologyKind::BarabasiAlbert => "barabasi_albert",
            TopologyKind::SmallWorld => "small_world",
            TopologyKind::RandomMatrix => "random_matrix",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "erdos_renyi" => Ok(TopologyKind::ErdosRenyi),
            "barabasi_albert" => Ok(TopologyKind::BarabasiAlbert),
            "small_world" => Ok(TopologyKind::SmallWorld),
            "random_matrix" => Ok(TopologyKind::RandomMatrix),
            other => Err(TopologyError::InvalidParameter(format!(
                "unknown topology `{other}` (expected one of erdos_renyi, barabasi_albert, small_world, random_matrix)"
            ))),
        }
    }
}

/// Which network model builds the reservoir skeleton, and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    /// Node count (reservoir size).
    pub n: usize,
    /// Target average degree D. Ignored by `RandomMatrix`, which is dense
    /// by construction.
    pub mean_degree: f64,
    /// Watts-Strogatz rewiring probability; ignored by the other kinds.
    pub rewire_prob: f64,
}

impl TopologySpec {
    pub fn new(kind: TopologyKind, n: usize, mean_degree: f64, rewire_prob: f64) -> Self {
        Self { kind, n, mean_degree, rewire_prob }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.n < 2 {
            return Err(TopologyError::InvalidParameter(format!(
                "node count must be at least 2 (got {})",
                self.n
            )));
        }
        if self.kind != TopologyKind::RandomMatrix {
            if !(self.mean_degree > 0.0) || !self.mean_degree.is_finite() {
                return Err(TopologyError::InvalidParameter(format!(
                    "mean_degree must be positive and finite (got {})",
                    self.mean_degree
                )));
            }
            if self.mean_degree >= self.n as f64 {
                return Err(TopologyError::InvalidParameter(format!(
                    "mean_degree {} must be below the node count {}",
                    self.mean_degree, self.n
                )));
            }
        }
        if self.kind == TopologyKind::SmallWorld {
            let d = self.mean_degree;
            if d.fract() != 0.0 || (d as u64) % 2 != 0 {
                return Err(TopologyError::InvalidParameter(format!(
                    "small_world mean_degree must be an even integer (got {d}); the ring lattice needs D/2 neighbours per side"
                )));
            }
            if !(0.0..=1.0).contains(&self.rewire_prob) {
                return Err(TopologyError::InvalidParameter(format!(
                    "rewire_prob must lie in [0, 1] (got {})",
                    self.rewire_prob
                )));
            }
        }
        Ok(())
    }
}

/// Square sparse matrix in compressed-row form. Immutable after
/// construction; entry order is row-major and deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl WeightedMatrix {
    /// Builds from (row, col, value) triplets. Rejects out-of-range
    /// indices, duplicates and non-finite values.
    pub fn from_triplets(
        n: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self, TopologyError> {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(i, j, v) in &triplets {
            if i >= n || j >= n {
                return Err(TopologyError::InvalidParameter(format!(
                    "entry ({i}, {j}) outside {n}x{n} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(TopologyError::InvalidParameter(format!(
                    "non-finite value at ({i}, {j})"
                )));
            }
            if prev == Some((i, j)) {
                return Err(TopologyError::InvalidParameter(format!(
                    "duplicate entry at ({i}, {j})"
                )));
            }
            prev = Some((i, j));
            row_ptr[i + 1] += 1;
            cols.push(j as u32);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { n, row_ptr, cols, vals })
    }

    /// Fully dense matrix with every entry set to `value`.
    fn dense_filled(n: usize, value: f64) -> Self {
        let row_ptr = (0..=n).map(|i| i * n).collect();
        let cols = (0..n).flat_map(|_| 0..n as u32).collect();
        let vals = vec![value; n * n];
        Self { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored value at (i, j), or 0 for a structural zero.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.cols[lo..hi].binary_search(&(j as u32)) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    /// y = W x.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n, "input length must match matrix dimension");
        assert_eq!(y.len(), self.n, "output length must match matrix dimension");
        for i in 0..self.n {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            let mut acc = 0.0;
            for (c, v) in self.cols[lo..hi].iter().zip(&self.vals[lo..hi]) {
                acc += v * x[*c as usize];
            }
            y[i] = acc;
        }
    }

    /// Stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            self.cols[lo..hi]
                .iter()
                .zip(&self.vals[lo..hi])
                .map(move |(c, v)| (i, *c as usize, *v))
        })
    }

    /// Same structure, every stored value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= factor;
        }
        out
    }

    /// Same structure, values replaced by `f(row, col, value)`.
    fn map_entries(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[k] = f(i, self.cols[k] as usize, self.vals[k]);
            }
        }
        out
    }

    pub fn to_dense(&self) -> ndarray::Array2<f64> {
        let mut out = ndarray::Array2::zeros((self.n, self.n));
        for (i, j, v) in self.entries() {
            out[[i, j]] = v;
        }
        out
    }

    /// Number of stored entries in row `i`.
    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Builds the 0/1 adjacency structure for `spec`, deterministic in `seed`.
///
/// The three graph models produce symmetric structures without self-loops;
/// `RandomMatrix` is fully dense (all n^2 positions, diagonal included).
pub fn build_skeleton(spec: &TopologySpec, seed: u64) -> Result<WeightedMatrix, TopologyError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seeding::derive_seed(seed, "topology.skeleton"));
    let edges = match spec.kind {
        TopologyKind::ErdosRenyi => erdos_renyi_edges(spec, &mut rng),
        TopologyKind::BarabasiAlbert => barabasi_albert_edges(spec, &mut rng)?,
        TopologyKind::SmallWorld => small_world_edges(spec, &mut rng),
        TopologyKind::RandomMatrix => {
            return Ok(WeightedMatrix::dense_filled(spec.n, 1.0));
        }
    };
    let mut triplets = Vec::with_capacity(edges.len() * 2);
    for (i, j) in edges {
        triplets.push((i, j, 1.0));
        triplets.push((j, i, 1.0));
    }
    WeightedMatrix::from_triplets(spec.n, triplets)
}

/// G(n, p) with p = D / (n - 1), so the expected degree is D.
fn erdos_renyi_edges(spec: &TopologySpec, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let p = (spec.mean_degree / (spec.n as f64 - 1.0)).min(1.0);
    let mut edges = Vec::new();
    for i in 0..spec.n {
        for j in (i + 1)..spec.n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Preferential attachment adding m = round(D / 2) edges per new node, so
/// the asymptotic mean degree is D.
fn barabasi_albert_edges(
    spec: &TopologySpec,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>, TopologyError> {
    let m = (spec.mean_degree / 2.0).round() as usize;
    if m == 0 {
        return Err(TopologyError::InvalidParameter(format!(
            "barabasi_albert needs mean_degree >= 1 so that at least one edge is attached per node (got {})",
            spec.mean_degree
        )));
    }
    if m >= spec.n {
        return Err(TopologyError::InvalidParameter(format!(
            "barabasi_albert attachment count m = {m} must be below the node count {}",
            spec.n
        )));
    }
    // Repeated-endpoints list: each stored node id appears once per incident
    // edge, so uniform sampling from it is degree-proportional.
    let mut edges = Vec::with_capacity((spec.n - m) * m);
    let mut repeated: Vec<usize> = Vec::with_capacity(2 * (spec.n - m) * m);
    let mut targets: Vec<usize> = (0..m).collect();
    for v in m..spec.n {
        for &t in &targets {
            edges.push((t.min(v), t.max(v)));
        }
        repeated.extend_from_slice(&targets);
        repeated.extend(std::iter::repeat(v).take(m));
        if v + 1 < spec.n {
            targets.clear();
            while targets.len() < m {
                let pick = repeated[rng.random_range(0..repeated.len())];
                if !targets.contains(&pick) {
                    targets.push(pick);
                }
            }
        }
    }
    Ok(edges)
}

/// Watts-Strogatz: ring lattice of degree D, each rightward edge rewired
/// with probability `rewire_prob`.
fn small_world_edges(spec: &TopologySpec, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let n = spec.n;
    let half = (spec.mean_degree as usize) / 2;
    let norm = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut set: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..n {
        for off in 1..=half {
            set.insert(norm(i, (i + off) % n));
        }
    }
    if spec.rewire_prob > 0.0 {
        let mut degree = vec![spec.mean_degree as usize; n];
        for i in 0..n {
            for off in 1..=half {
                let j = (i + off) % n;
                if !rng.random_bool(spec.rewire_prob) {
                    continue;
                }
                if degree[i] >= n - 1 {
                    continue; // node saturated, nothing to rewire to
                }
                let w = loop {
                    let w = rng.random_range(0..n);
                    if w != i && !set.contains(&norm(i, w)) {
                        break w;
                    }
                };
                set.remove(&norm(i, j));
                set.insert(norm(i, w));
                degree[j] -= 1;
                degree[w] += 1;
            }
        }
    }
    set.into_iter().collect()
}

/// Replaces every stored entry of a 0/1 skeleton with an independent draw
/// from uniform [-1, 1]; structural zeros stay zero.
pub fn assign_weights(skeleton: &WeightedMatrix, seed: u64) -> Result<WeightedMatrix, TopologyError> {
    for (i, j, v) in skeleton.entries() {
        if v != 1.0 && v != 0.0 {
            return Err(TopologyError::InvalidParameter(format!(
                "skeleton entry at ({i}, {j}) is {v}, expected 0 or 1"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seeding::derive_seed(seed, "topology.weights"));
    Ok(skeleton.map_entries(|_, _, _| rng.random_range(-1.0..=1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn er_spec(n: usize, d: f64) -> TopologySpec {
        TopologySpec::new(TopologyKind::ErdosRenyi, n, d, 0.1)
    }

    #[test]
    fn random_matrix_is_fully_dense() {
        let spec = TopologySpec::new(TopologyKind::RandomMatrix, 5, 20.0, 0.1);
        let m = build_skeleton(&spec, 1).unwrap();
        assert_eq!(m.nnz(), 25);
    }

    #[test]
    fn small_world_without_rewiring_is_exact_ring_lattice() {
        let spec = TopologySpec::new(TopologyKind::SmallWorld, 10, 4.0, 0.0);
        let m = build_skeleton(&spec, 3).unwrap();
        for i in 0..10 {
            assert_eq!(m.row_nnz(i), 4, "node {i} degree");
            for off in [1usize, 2] {
                assert_eq!(m.get(i, (i + off) % 10), 1.0);
                assert_eq!(m.get((i + off) % 10, i), 1.0);
            }
        }
    }

    #[test]
    fn small_world_rewiring_preserves_edge_count() {
        let spec = TopologySpec::new(TopologyKind::SmallWorld, 50, 6.0, 0.5);
        let m = build_skeleton(&spec, 9).unwrap();
        // 50 * 6 / 2 undirected edges, stored twice.
        assert_eq!(m.nnz(), 300);
        for i in 0..50 {
            assert_eq!(m.get(i, i), 0.0, "self-loop at {i}");
        }
    }

    #[test]
    fn small_world_requires_even_degree() {
        let spec = TopologySpec::new(TopologyKind::SmallWorld, 10, 3.0, 0.1);
        assert!(build_skeleton(&spec, 0).is_err());
    }

    #[test]
    fn barabasi_rejects_attachment_beyond_node_count() {
        let spec = TopologySpec::new(TopologyKind::BarabasiAlbert, 5, 12.0, 0.1);
        // m = 6 >= n = 5; mean_degree < n holds but attachment is invalid.
        let err = build_skeleton(&spec, 0);
        assert!(err.is_err());
    }

    #[test]
    fn barabasi_mean_degree_tracks_target() {
        let spec = TopologySpec::new(TopologyKind::BarabasiAlbert, 400, 20.0, 0.1);
        let m = build_skeleton(&spec, 11).unwrap();
        let mean = m.nnz() as f64 / 400.0;
        // 2 m (n - m) / n = 19.5 at n = 400, m = 10.
        assert!((mean - 19.5).abs() < 0.2, "mean degree {mean}");
    }

    #[test]
    fn erdos_renyi_realized_degree_concentrates() {
        let mut hits = 0;
        for seed in 0..100 {
            let m = build_skeleton(&er_spec(400, 20.0), seed).unwrap();
            let mean = m.nnz() as f64 / 400.0;
            if (18.0..=22.0).contains(&mean) {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {hits}/100 seeds inside the [18, 22] band");
    }

    #[test]
    fn erdos_renyi_edge_count_within_binomial_band() {
        // Mean over seeds vs the binomial model n_pairs * p, within 3 sigma
        // of the seed-averaged estimator.
        let n = 400.0;
        let pairs = n * (n - 1.0) / 2.0;
        let p = 20.0 / (n - 1.0);
        let seeds = 50;
        let mut total = 0.0;
        for seed in 0..seeds {
            let m = build_skeleton(&er_spec(400, 20.0), seed).unwrap();
            total += (m.nnz() / 2) as f64;
        }
        let observed_mean = total / seeds as f64;
        let expected = pairs * p;
        let sigma_of_mean = (pairs * p * (1.0 - p) / seeds as f64).sqrt();
        assert!(
            (observed_mean - expected).abs() < 3.0 * sigma_of_mean,
            "edge count mean {observed_mean} vs binomial {expected} (sigma {sigma_of_mean})"
        );
    }

    #[test]
    fn skeletons_are_seed_deterministic() {
        for kind in TopologyKind::ALL {
            let spec = TopologySpec::new(kind, 60, 8.0, 0.2);
            let a = build_skeleton(&spec, 77).unwrap();
            let b = build_skeleton(&spec, 77).unwrap();
            assert_eq!(a, b, "{kind} skeleton changed between identical builds");
            let w1 = assign_weights(&a, 5).unwrap();
            let w2 = assign_weights(&b, 5).unwrap();
            assert_eq!(w1, w2, "{kind} weights changed between identical builds");
        }
    }

    #[test]
    fn weights_stay_inside_unit_interval_and_structure() {
        let skel = build_skeleton(&er_spec(200, 10.0), 4).unwrap();
        let w = assign_weights(&skel, 4).unwrap();
        assert_eq!(w.nnz(), skel.nnz());
        for (i, j, v) in w.entries() {
            assert!((-1.0..=1.0).contains(&v));
            assert_eq!(skel.get(i, j), 1.0, "weight outside skeleton at ({i}, {j})");
        }
    }

    #[test]
    fn zero_skeleton_yields_zero_matrix() {
        let skel = WeightedMatrix::from_triplets(8, vec![]).unwrap();
        let w = assign_weights(&skel, 0).unwrap();
        assert_eq!(w.nnz(), 0);
    }

    #[test]
    fn weight_mean_is_near_zero() {
        let skel = build_skeleton(&er_spec(400, 20.0), 21).unwrap();
        let w = assign_weights(&skel, 21).unwrap();
        let (sum, count) = w
            .entries()
            .fold((0.0, 0usize), |(s, c), (_, _, v)| (s + v, c + 1));
        let mean = sum / count as f64;
        assert!(mean.abs() < 0.05, "weight mean {mean} too far from zero");
    }

    #[test]
    fn directed_weights_are_independent() {
        let skel = build_skeleton(&er_spec(100, 10.0), 2).unwrap();
        let w = assign_weights(&skel, 2).unwrap();
        let mut asymmetric = 0;
        let mut pairs = 0;
        for (i, j, v) in w.entries() {
            if i < j {
                pairs += 1;
                if (v - w.get(j, i)).abs() > 1e-12 {
                    asymmetric += 1;
                }
            }
        }
        assert!(pairs > 100);
        assert_eq!(asymmetric, pairs, "mirrored entries should be independent draws");
    }

    #[test]
    fn triplet_construction_rejects_bad_input() {
        assert!(WeightedMatrix::from_triplets(2, vec![(0, 2, 1.0)]).is_err());
        assert!(WeightedMatrix::from_triplets(2, vec![(0, 1, f64::NAN)]).is_err());
        assert!(WeightedMatrix::from_triplets(2, vec![(0, 1, 1.0), (0, 1, 1.0)]).is_err());
    }

    #[test]
    fn matvec_matches_dense_product() {
        let skel = build_skeleton(&er_spec(30, 6.0), 8).unwrap();
        let w = assign_weights(&skel, 8).unwrap();
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y = vec![0.0; 30];
        w.matvec_into(&x, &mut y);
        let dense = w.to_dense();
        for i in 0..30 {
            let expect: f64 = (0..30).map(|j| dense[[i, j]] * x[j]).sum();
            assert!((y[i] - expect).abs() < 1e-12);
        }
    }
}
