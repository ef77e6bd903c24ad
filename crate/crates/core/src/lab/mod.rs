//! Desk-scale discretization of the linearized operator `L0 + K` and the
//! numerical checks built on it: skewness of `L0`, zero-mean range and
//! singular-value decay of `K`, the co-area identity, and Weyl packets.

pub mod coarea;
pub mod grid;
pub mod operators;
pub mod weyl;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use coarea::{bounded_regions, coarea_check, CoareaRegion, CoareaResult, TestFunction};
pub use grid::{Grid2D, Neighbor};
pub use operators::{discretize_k, discretize_l0, DiscreteOperator, PoissonSolution, PoissonSystem, DIMENSION_CAP};
pub use weyl::{bump, weyl_residual, WeylPacket, WeylResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OperatorReport {
    pub dimension: usize,
    /// `||M + M^T||_F / ||M||_F` for the discrete `L0`.
    pub skewness_norm: f64,
    pub eig_samples: Vec<Complex>,
    pub eig_samples_full: Vec<Complex>,
    /// `max |Re lambda|` over `eig_samples`.
    pub max_real_part: Option<f64>,
    /// `max |sum_c A (K w)_c| / ||w||` over the probe set.
    pub zero_mean_residual: f64,
    pub probes: usize,
    pub k_singular_values: Vec<f64>,
    /// `sigma_32 / sigma_8`.
    pub k_tail_ratio: Option<f64>,
    pub k_singular_values_monotone: bool,
    pub coarea_error: Vec<CoareaResult>,
    pub weyl_residuals: Vec<WeylResult>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsOptions {
    pub seed: u64,
    pub probes: usize,
    pub eigenvalues: bool,
    /// How many leading singular values of `K` to keep; 0 skips the SVD.
    pub singular_values: usize,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self { seed: 0, probes: 100, eigenvalues: true, singular_values: 64 }
    }
}

fn to_complex(v: Vec<faer::c64>) -> Vec<Complex> {
    let mut out: Vec<Complex> = v.into_iter().map(|z| Complex { re: z.re, im: z.im }).collect();
    out.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    out
}

/// Relative skewness `||M + M^T||_F / ||M||_F`; zero for the zero matrix.
pub fn skewness(m: &Mat<f64>) -> f64 {
    let n = m.norm_l2();
    if n == 0.0 {
        return 0.0;
    }
    (m + m.transpose()).norm_l2() / n
}

/// Seeded probe vectors: half uniform noise, half narrow Gaussian bumps.
pub fn probe_vectors(grid: &Grid2D, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = grid.centers();
    let h = grid.dx.max(grid.dy);
    (0..count)
        .map(|i| {
            if i % 2 == 0 {
                (0..centers.len()).map(|_| rng.random_range(-1.0..1.0)).collect()
            } else {
                let c = centers[rng.random_range(0..centers.len())];
                centers
                    .iter()
                    .map(|&p| {
                        let d = grid.domain.displacement(c, p);
                        (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * h * h)).exp()
                    })
                    .collect()
            }
        })
        .collect()
}

/// `max |sum A (K w)| / sqrt(sum A w^2)` over the probes.
pub fn zero_mean_residual(k: &DiscreteOperator, grid: &Grid2D, probes: &[Vec<f64>]) -> f64 {
    let a = grid.cell_area();
    probes
        .iter()
        .map(|w| {
            let kw = k.apply(w);
            let mean = a * kw.iter().sum::<f64>();
            let norm = (a * w.iter().map(|x| x * x).sum::<f64>()).sqrt();
            mean.abs() / norm
        })
        .fold(0.0, f64::max)
}

/// Skewness, spectra, zero-mean range and singular-value decay. Failures of
/// the dense eigen/SVD routines are recorded and the rest is kept.
pub fn operator_diagnostics(
    l0: &DiscreteOperator,
    k: &DiscreteOperator,
    grid: &Grid2D,
    opts: &DiagnosticsOptions,
) -> OperatorReport {
    let mut r = OperatorReport {
        dimension: l0.dimension(),
        skewness_norm: skewness(&l0.matrix),
        probes: opts.probes,
        ..Default::default()
    };
    let probes = probe_vectors(grid, opts.probes, opts.seed);
    r.zero_mean_residual = zero_mean_residual(k, grid, &probes);
    match (opts.singular_values > 0).then(|| k.matrix.singular_values()).transpose() {
        Ok(None) => {}
        Ok(Some(mut s)) => {
            s.sort_by(|a, b| b.total_cmp(a));
            s.truncate(opts.singular_values);
            r.k_singular_values_monotone = s.windows(2).all(|w| w[1] <= w[0]);
            r.k_tail_ratio = (s.len() >= 32 && s[7] > 0.0).then(|| s[31] / s[7]);
            r.k_singular_values = s;
        }
        Err(e) => r.errors.push(format!("K: singular values did not converge: {e:?}")),
    }
    if opts.eigenvalues {
        match l0.matrix.eigenvalues() {
            Ok(v) => {
                r.eig_samples = to_complex(v);
                r.max_real_part = Some(r.eig_samples.iter().map(|z| z.re.abs()).fold(0.0, f64::max));
            }
            Err(e) => r.errors.push(format!("L0: eigensolver did not converge: {e:?}")),
        }
        let full = l0.sum(k, "L0+K");
        match full.matrix.eigenvalues() {
            Ok(v) => r.eig_samples_full = to_complex(v),
            Err(e) => r.errors.push(format!("L0+K: eigensolver did not converge: {e:?}")),
        }
    }
    r
}
