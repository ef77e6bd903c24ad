//! Finite-volume realizations of `L0 = perp(grad psi0) . grad` and
//! `K = -grad omega0 . curl^{-1}` on the masked cell grid.
//!
//! Face fluxes come from differences of a corner stream function, so every
//! cell's fluxes sum to zero. The centred flux form `F_f (w_c + w_n) / 2A`
//! then equals the skew split `(u.grad w + div(u w)) / 2` and its matrix is
//! exactly antisymmetric. On the staircase boundary the corner values are
//! pinned to the boundary component's constant, which closes the boundary
//! to flux without breaking antisymmetry.

use faer::prelude::*;
use faer::Mat;

use super::grid::{Grid2D, Neighbor};
use crate::error::{Error, Result};
use crate::field::{DomainSpec, StreamField};
use crate::tolerances::Tolerances;

pub const DIMENSION_CAP: usize = 4096;

const DIRS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// A dense operator on masked-cell vectors.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub name: String,
    pub matrix: Mat<f64>,
    /// Inputs are projected to zero mean before the action.
    pub projects_mean: bool,
    pub notes: Vec<String>,
}

impl DiscreteOperator {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dimension();
        assert_eq!(v.len(), n);
        let x = Mat::from_fn(n, 1, |i, _| v[i]);
        let y = &self.matrix * &x;
        (0..n).map(|i| y[(i, 0)]).collect()
    }

    /// Like [`apply`](Self::apply), also reporting whether the input had a
    /// mean the operator projected away.
    pub fn apply_checked(&self, v: &[f64]) -> (Vec<f64>, bool) {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
        let flagged = self.projects_mean && mean.abs() > 1e-12 * norm.max(f64::MIN_POSITIVE);
        (self.apply(v), flagged)
    }

    pub fn sum(&self, other: &DiscreteOperator, name: &str) -> DiscreteOperator {
        DiscreteOperator {
            name: name.into(),
            matrix: &self.matrix + &other.matrix,
            projects_mean: false,
            notes: Vec::new(),
        }
    }
}

fn check_cap(grid: &Grid2D) -> Result<()> {
    let dim = grid.dimension();
    if dim > DIMENSION_CAP {
        return Err(Error::DimensionCap { dim, cap: DIMENSION_CAP });
    }
    if dim == 0 {
        return Err(Error::Empty("grid has no interior cells".into()));
    }
    Ok(())
}

/// Mean of psi over each boundary component.
fn boundary_constants(field: &StreamField) -> Vec<f64> {
    let d = &field.domain;
    d.boundary_components()
        .iter()
        .map(|c| {
            let s = d.boundary_samples(c.index, 256);
            s.iter().map(|(p, _)| field.psi(*p)).sum::<f64>() / s.len() as f64
        })
        .collect()
}

fn is_boundary_corner(grid: &Grid2D, i: usize, j: usize) -> bool {
    grid.cells_at_corner(i, j).iter().any(Option::is_none)
}

/// Outward flux through face `dir` of cell `(i, j)` for the stream
/// function with corner values `s`.
fn face_flux(s: &impl Fn(usize, usize) -> f64, i: usize, j: usize, dir: (i64, i64)) -> f64 {
    match dir {
        (1, 0) => -(s(i + 1, j + 1) - s(i + 1, j)),
        (-1, 0) => s(i, j + 1) - s(i, j),
        (0, 1) => s(i + 1, j + 1) - s(i, j + 1),
        _ => -(s(i + 1, j) - s(i, j)),
    }
}

fn face_midpoint(grid: &Grid2D, cell: usize, dir: (i64, i64)) -> [f64; 2] {
    let c = grid.center(cell);
    [c[0] + 0.5 * dir.0 as f64 * grid.dx, c[1] + 0.5 * dir.1 as f64 * grid.dy]
}

/// Discretize `L0 = perp(grad psi0) . grad`.
pub fn discretize_l0(field: &StreamField, grid: &Grid2D) -> Result<DiscreteOperator> {
    check_cap(grid)?;
    let mut notes = Vec::new();
    if field.domain.has_boundary() {
        let speed = field.scales(&Tolerances::default()).median_speed;
        let r = field.boundary_tangency_residual(256)?;
        if r > 1e-4 * speed.max(f64::MIN_POSITIVE) {
            return Err(Error::NotTangent(r));
        }
        notes.push(format!("boundary tangency residual {r:.3e}"));
    }
    let consts = boundary_constants(field);
    let ncorner = grid.corner_count();
    let mut psi_c = vec![0.0; ncorner];
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            let p = grid.corner(i, j);
            psi_c[grid.corner_id(i, j)] = if is_boundary_corner(grid, i, j) && !consts.is_empty() {
                consts[field.domain.nearest_component(p)]
            } else {
                field.psi(p)
            };
        }
    }
    let s = |i: usize, j: usize| psi_c[grid.corner_id(i, j)];
    let n = grid.dimension();
    let a2 = 2.0 * grid.cell_area();
    let mut m = Mat::<f64>::zeros(n, n);
    for (k, &cell) in grid.cells.iter().enumerate() {
        let (i, j) = (cell % grid.nx, cell / grid.nx);
        for dir in [(1, 0), (0, 1)] {
            if let Neighbor::Inside(nb) = grid.neighbor(i, j, dir.0, dir.1) {
                let f = face_flux(&s, i, j, dir) / a2;
                m[(k, nb)] += f;
                m[(nb, k)] -= f;
            }
        }
    }
    if matches!(field.domain, DomainSpec::Disk { .. } | DomainSpec::Annulus { .. }) {
        notes.push("staircase boundary with pinned corner stream values".into());
    } else if matches!(field.domain, DomainSpec::Rectangle { .. }) {
        notes.push("boundary corner stream values pinned".into());
    }
    Ok(DiscreteOperator { name: "L0".into(), matrix: m, projects_mean: false, notes })
}

/// Bordered system for `lap phi = omega` with one unknown constant per
/// boundary component, zero net flux through all but the last component
/// and the gauge `c_last = 0`; on the torus a Lagrange row fixes the mean.
pub struct PoissonSystem {
    n: usize,
    components: usize,
    torus: bool,
    lu: faer::linalg::solvers::PartialPivLu<f64>,
    matrix: Mat<f64>,
    /// Per-component boundary faces: (unknown, coefficient `len / (h / 2)`).
    flux_faces: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub phi: Vec<f64>,
    pub constants: Vec<f64>,
    /// Net flux `oint dphi/dn` through each boundary component.
    pub fluxes: Vec<f64>,
    /// `max |P x - b|` of the bordered system.
    pub residual: f64,
    pub input_mean: f64,
}

impl PoissonSystem {
    pub fn assemble(grid: &Grid2D) -> Result<Self> {
        check_cap(grid)?;
        let n = grid.dimension();
        let torus = !grid.domain.has_boundary();
        let m = grid.domain.boundary_components().len();
        let size = if torus { n + 1 } else { n + m };
        let mut p = Mat::<f64>::zeros(size, size);
        let mut flux_faces = vec![Vec::new(); m];
        for (k, &cell) in grid.cells.iter().enumerate() {
            let (i, j) = (cell % grid.nx, cell / grid.nx);
            for dir in DIRS {
                let (h, len) = if dir.0 != 0 { (grid.dx, grid.dy) } else { (grid.dy, grid.dx) };
                let w = 1.0 / (h * h);
                match grid.neighbor(i, j, dir.0, dir.1) {
                    Neighbor::Inside(nb) => {
                        p[(k, nb)] += w;
                        p[(k, k)] -= w;
                    }
                    Neighbor::Outside(b) => {
                        p[(k, n + b)] += 2.0 * w;
                        p[(k, k)] -= 2.0 * w;
                        flux_faces[b].push((k, 2.0 * len / h));
                    }
                }
            }
        }
        if torus {
            for k in 0..n {
                p[(k, n)] = 1.0;
                p[(n, k)] = 1.0;
            }
        } else {
            for (b, faces) in flux_faces.iter().enumerate().take(m - 1) {
                for &(k, c) in faces {
                    p[(n + b, n + b)] += c;
                    p[(n + b, k)] -= c;
                }
            }
            p[(n + m - 1, n + m - 1)] = 1.0;
        }
        let lu = p.partial_piv_lu();
        Ok(Self { n, components: m, torus, lu, matrix: p, flux_faces })
    }

    fn rhs(&self, omega: &[f64]) -> (Mat<f64>, f64) {
        let mean = omega.iter().sum::<f64>() / self.n as f64;
        let size = self.matrix.nrows();
        (Mat::from_fn(size, 1, |i, _| if i < self.n { omega[i] - mean } else { 0.0 }), mean)
    }

    /// Solve for zero-mean projected `omega`.
    pub fn solve(&self, omega: &[f64]) -> Result<PoissonSolution> {
        if omega.len() != self.n {
            return Err(Error::InvalidParameter { name: "omega".into(), reason: "length mismatch".into() });
        }
        let (b, input_mean) = self.rhs(omega);
        let x = self.lu.solve(&b);
        if !(0..x.nrows()).all(|i| x[(i, 0)].is_finite()) {
            return Err(Error::Solve(format!(
                "Poisson system is singular ({} boundary components, torus = {})",
                self.components, self.torus
            )));
        }
        let r = &self.matrix * &x - &b;
        let residual = (0..r.nrows()).map(|i| r[(i, 0)].abs()).fold(0.0, f64::max);
        let phi: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        let constants: Vec<f64> = if self.torus { Vec::new() } else { (0..self.components).map(|b| x[(self.n + b, 0)]).collect() };
        let fluxes = self
            .flux_faces
            .iter()
            .enumerate()
            .map(|(b, faces)| faces.iter().map(|&(k, c)| c * (constants[b] - phi[k])).sum())
            .collect();
        Ok(PoissonSolution { phi, constants, fluxes, residual, input_mean })
    }
}

/// How each corner's value follows from the cell solution.
#[derive(Clone, Copy)]
enum CornerRule {
    Average([usize; 4]),
    Boundary(usize),
}

/// Discretize `K omega = -grad omega0 . perp(grad lap^{-1} omega)` in the
/// conservative form `-(1/A) sum_f omega0_f q_f`, where `q_f` is the flux of
/// `perp(grad phi)` through face `f`. Boundary faces carry no flux, so the
/// range has zero mean exactly.
pub fn discretize_k(field: &StreamField, grid: &Grid2D) -> Result<DiscreteOperator> {
    let sys = PoissonSystem::assemble(grid)?;
    let n = grid.dimension();
    let rules: Vec<CornerRule> = {
        let mut r = vec![CornerRule::Boundary(0); grid.corner_count()];
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                let cs = grid.cells_at_corner(i, j);
                r[grid.corner_id(i, j)] = match cs {
                    [Some(a), Some(b), Some(c), Some(d)] => CornerRule::Average([a, b, c, d]),
                    _ => CornerRule::Boundary(field.domain.nearest_component(grid.corner(i, j))),
                };
            }
        }
        r
    };
    let w0: Vec<f64> = grid.centers().iter().map(|&p| field.vorticity(p)).collect();
    let w0_mean = w0.iter().sum::<f64>() / n as f64;
    struct Face {
        k: usize,
        nb: usize,
        i: usize,
        j: usize,
        dir: (i64, i64),
        weight: f64,
    }
    let mut faces = Vec::new();
    let area = grid.cell_area();
    for (k, &cell) in grid.cells.iter().enumerate() {
        let (i, j) = (cell % grid.nx, cell / grid.nx);
        for dir in [(1, 0), (0, 1)] {
            if let Neighbor::Inside(nb) = grid.neighbor(i, j, dir.0, dir.1) {
                let w = (field.vorticity(face_midpoint(grid, cell, dir)) - w0_mean) / area;
                faces.push(Face { k, nb, i, j, dir, weight: w });
            }
        }
    }
    let all_zero = faces.iter().all(|f| f.weight == 0.0) && w0_mean == 0.0;
    let mut kmat = Mat::<f64>::zeros(n, n);
    let mut notes = Vec::new();
    if all_zero {
        notes.push("grad omega0 vanishes: K = 0".into());
        return Ok(DiscreteOperator { name: "K".into(), matrix: kmat, projects_mean: true, notes });
    }
    let size = sys.matrix.nrows();
    let block = 256;
    let mut worst_residual: f64 = 0.0;
    for start in (0..n).step_by(block) {
        let cols = block.min(n - start);
        let inv_n = 1.0 / n as f64;
        let b = Mat::from_fn(size, cols, |i, c| {
            if i < n {
                f64::from(u8::from(i == start + c)) - inv_n
            } else {
                0.0
            }
        });
        let x = sys.lu.solve(&b);
        let r = &sys.matrix * &x - &b;
        for c in 0..cols {
            for i in 0..size {
                worst_residual = worst_residual.max(r[(i, c)].abs());
            }
        }
        for c in 0..cols {
            let col = x.col(c);
            let corner = |ci: usize, cj: usize| -> f64 {
                match rules[grid.corner_id(ci, cj)] {
                    CornerRule::Average(cs) => 0.25 * cs.iter().map(|&q| col[q]).sum::<f64>(),
                    CornerRule::Boundary(b) => {
                        if sys.torus {
                            0.0
                        } else {
                            col[n + b]
                        }
                    }
                }
            };
            for f in &faces {
                let q = face_flux(&corner, f.i, f.j, f.dir);
                let v = f.weight * q;
                kmat[(f.k, start + c)] -= v;
                kmat[(f.nb, start + c)] += v;
            }
        }
        if !worst_residual.is_finite() {
            return Err(Error::Solve("Poisson solve produced non-finite values".into()));
        }
    }
    notes.push(format!("Poisson residual {worst_residual:.3e}"));
    Ok(DiscreteOperator { name: "K".into(), matrix: kmat, projects_mean: true, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_builtin_flow;
    use std::collections::BTreeMap;

    fn flow(name: &str) -> StreamField {
        make_builtin_flow(name, &BTreeMap::new()).unwrap()
    }

    fn skew(m: &Mat<f64>) -> f64 {
        (m + m.transpose()).norm_l2() / m.norm_l2()
    }

    #[test]
    fn flux_form_is_exactly_skew() {
        for (name, n) in [("couette", 24), ("shear_quadratic", 24), ("rigid", 24), ("cellular", 20)] {
            let f = flow(name);
            let g = Grid2D::new(&f.domain, n, n).unwrap();
            let l0 = discretize_l0(&f, &g).unwrap();
            assert!(skew(&l0.matrix) < 1e-14, "{name}");
        }
    }

    #[test]
    fn constant_stream_gives_zero_operator() {
        let f = flow("couette").affine(0.0, 3.0);
        let g = Grid2D::new(&f.domain, 16, 16).unwrap();
        let l0 = discretize_l0(&f, &g).unwrap();
        assert_eq!(l0.matrix.norm_max(), 0.0);
    }

    #[test]
    fn couette_k_vanishes() {
        let f = flow("couette");
        let g = Grid2D::new(&f.domain, 16, 16).unwrap();
        assert_eq!(discretize_k(&f, &g).unwrap().matrix.norm_max(), 0.0);
    }

    #[test]
    fn disk_poisson_matches_radial_solution() {
        // lap phi = 4 r^2 - 2 has zero mean on the unit disk; with phi = 0 on
        // the circle the solution is (r^2 - 1)^2 / 4.
        let d = crate::field::DomainSpec::Disk { radius: 1.0 };
        let mut errs = Vec::new();
        for n in [32, 64] {
            let g = Grid2D::new(&d, n, n).unwrap();
            let pts = g.centers();
            let om: Vec<f64> = pts.iter().map(|p| 4.0 * (p[0] * p[0] + p[1] * p[1]) - 2.0).collect();
            let s = PoissonSystem::assemble(&g).unwrap().solve(&om).unwrap();
            let err = pts
                .iter()
                .zip(&s.phi)
                .map(|(p, v)| {
                    let r2 = p[0] * p[0] + p[1] * p[1];
                    (v - s.constants[0] - 0.25 * (r2 - 1.0).powi(2)).abs()
                })
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[1] < 0.7 * errs[0] && errs[1] < 2e-2, "{errs:?}");
    }
}
