//! Fixed points of the flow: zeros of grad psi.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::StreamField;
use crate::tolerances::Tolerances;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Elliptic,
    Hyperbolic,
    Degenerate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: Point,
    pub classification: CriticalKind,
    pub hessian_det: f64,
    pub psi: f64,
    /// Sample of a curve of fixed points rather than an isolated zero.
    pub non_isolated: bool,
    pub on_boundary: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPointScan {
    pub points: Vec<CriticalPoint>,
    /// Centres of flagged cells where Newton did not converge.
    pub unresolved_cells: Vec<Point>,
    pub cell_size: f64,
}

impl FixedPointScan {
    /// Discs that orbit tracing treats as saddle neighbourhoods: hyperbolic
    /// points and isolated degenerate points.
    pub fn saddle_zones(&self, radius: f64) -> Vec<(Point, f64)> {
        self.points
            .iter()
            .filter(|c| match c.classification {
                CriticalKind::Hyperbolic => true,
                CriticalKind::Degenerate => !c.non_isolated,
                CriticalKind::Elliptic => false,
            })
            .map(|c| (c.location, radius))
            .collect()
    }
}

/// Eigenvalues (ascending) and the unit eigenvector of the larger one.
pub(crate) fn sym_eigen(h: [f64; 3]) -> ([f64; 2], Point) {
    let (a, b, c) = (h[0], h[1], h[2]);
    let m = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (l1, l2) = (m - r, m + r);
    let v = if b.abs() > 1e-300 {
        let v = [l2 - c, b];
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    } else if a >= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    ([l1, l2], v)
}

/// Classify a Hessian `[xx, xy, yy]`. The degeneracy test is relative to
/// the Hessian's own magnitude so that it is invariant under scaling psi.
pub fn classify_hessian(h: [f64; 3], tol: &Tolerances) -> (CriticalKind, f64) {
    let det = h[0] * h[2] - h[1] * h[1];
    let norm2 = h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2];
    let kind = if norm2 == 0.0 || det.abs() <= tol.degeneracy_tol * norm2 {
        CriticalKind::Degenerate
    } else if det > 0.0 {
        CriticalKind::Elliptic
    } else {
        CriticalKind::Hyperbolic
    };
    (kind, det)
}

/// Newton iteration with a pseudo-inverse Hessian and a capped step length.
pub(crate) fn newton_zero(field: &StreamField, start: Point, max_step: f64, tol: f64) -> Option<Point> {
    let mut p = start;
    for _ in 0..80 {
        let g = field.grad(p);
        if g[0].hypot(g[1]) < tol {
            return Some(p);
        }
        let h = field.hessian(p);
        let ([l1, l2], v2) = sym_eigen(h);
        let v1 = [-v2[1], v2[0]];
        let lmax = l1.abs().max(l2.abs());
        if lmax == 0.0 {
            return None;
        }
        let mut d = [0.0, 0.0];
        for (l, v) in [(l1, v1), (l2, v2)] {
            if l.abs() > 1e-10 * lmax {
                let c = (g[0] * v[0] + g[1] * v[1]) / l;
                d[0] -= c * v[0];
                d[1] -= c * v[1];
            }
        }
        let n = d[0].hypot(d[1]);
        if n > max_step {
            d = [d[0] * max_step / n, d[1] * max_step / n];
        }
        if n == 0.0 {
            return None;
        }
        p = [p[0] + d[0], p[1] + d[1]];
    }
    let g = field.grad(p);
    (g[0].hypot(g[1]) < tol).then_some(p)
}

/// Scan an `n x n` cell grid over the bounding box for cells where both
/// gradient components change sign (inclusively), then polish by Newton.
pub fn find_fixed_points(field: &StreamField, scan_resolution: usize, tol: &Tolerances) -> Result<FixedPointScan> {
    if scan_resolution < 32 {
        return Err(Error::InvalidParameter {
            name: "scan_resolution".into(),
            reason: "need at least 32 cells per axis".into(),
        });
    }
    let n = scan_resolution;
    let dom = &field.domain;
    let [x0, x1, y0, y1] = dom.bounding_box();
    let (hx, hy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
    let cell = hx.max(hy);
    let diam = dom.diameter();
    let corner = |i: usize, j: usize| [x0 + i as f64 * hx, y0 + j as f64 * hy];
    let grads: Vec<Point> = (0..(n + 1) * (n + 1))
        .into_par_iter()
        .map(|k| field.grad(corner(k % (n + 1), k / (n + 1))))
        .collect();
    let slack = 1e-9 * diam;
    // Exact zeros on the box edge come out as rounding noise.
    let gzero = 1e-12 * grads.iter().map(|g| g[0].abs().max(g[1].abs())).fold(0.0, f64::max);
    let outcomes: Vec<Option<std::result::Result<Point, Point>>> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let centre = [x0 + (i as f64 + 0.5) * hx, y0 + (j as f64 + 0.5) * hy];
            let cs = [corner(i, j), corner(i + 1, j), corner(i, j + 1), corner(i + 1, j + 1)];
            if !dom.contains_with_slack(centre, 0.75 * cell) && !cs.iter().any(|&c| dom.contains_with_slack(c, slack)) {
                return None;
            }
            let gs = [
                grads[j * (n + 1) + i],
                grads[j * (n + 1) + i + 1],
                grads[(j + 1) * (n + 1) + i],
                grads[(j + 1) * (n + 1) + i + 1],
            ];
            let change = |c: usize| {
                let lo = gs.iter().map(|g| g[c]).fold(f64::INFINITY, f64::min);
                let hi = gs.iter().map(|g| g[c]).fold(f64::NEG_INFINITY, f64::max);
                lo <= gzero && hi >= -gzero
            };
            if !(change(0) && change(1)) {
                return None;
            }
            match newton_zero(field, centre, 2.0 * cell, tol.newton_tol) {
                Some(p) if dom.contains_with_slack(p, slack) => Some(Ok(p)),
                Some(_) => None,
                None => Some(Err(centre)),
            }
        })
        .collect();

    let dedup = 1e-6 * diam;
    let mut points: Vec<CriticalPoint> = Vec::new();
    let mut unresolved_cells = Vec::new();
    for o in outcomes.into_iter().flatten() {
        match o {
            Ok(p) => {
                let p = dom.wrap(p);
                if points.iter().any(|c| dom.distance(c.location, p) < dedup) {
                    continue;
                }
                let (classification, hessian_det) = classify_hessian(field.hessian(p), tol);
                points.push(CriticalPoint {
                    location: p,
                    classification,
                    hessian_det,
                    psi: field.psi(p),
                    non_isolated: false,
                    on_boundary: dom.has_boundary() && !dom.contains_with_slack(p, -1e-7 * diam),
                });
            }
            Err(c) => unresolved_cells.push(c),
        }
    }
    let degenerate: Vec<Point> = points
        .iter()
        .filter(|c| c.classification == CriticalKind::Degenerate)
        .map(|c| c.location)
        .collect();
    for c in points.iter_mut().filter(|c| c.classification == CriticalKind::Degenerate) {
        c.non_isolated = degenerate
            .iter()
            .any(|&q| q != c.location && dom.distance(q, c.location) < 2.5 * cell);
    }
    Ok(FixedPointScan { points, unresolved_cells, cell_size: cell })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_builtin_flow;
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    fn scan(name: &str) -> FixedPointScan {
        let f = make_builtin_flow(name, &BTreeMap::new()).unwrap();
        find_fixed_points(&f, 64, &Tolerances::default()).unwrap()
    }

    #[test]
    fn rigid_has_one_elliptic_point() {
        let s = scan("rigid");
        assert_eq!(s.points.len(), 1);
        let c = &s.points[0];
        assert_eq!(c.classification, CriticalKind::Elliptic);
        assert!(c.location[0].hypot(c.location[1]) < 1e-10);
    }

    #[test]
    fn radial_cos_origin_and_circle() {
        let s = scan("radial_cos");
        let origin: Vec<_> = s.points.iter().filter(|c| c.location[0].hypot(c.location[1]) < 1e-6).collect();
        assert_eq!(origin.len(), 1);
        assert_eq!(origin[0].classification, CriticalKind::Elliptic);
        let ring: Vec<_> = s
            .points
            .iter()
            .filter(|c| (c.location[0].hypot(c.location[1]) - PI).abs() < 1e-8)
            .collect();
        assert!(ring.len() > 20);
        assert!(ring.iter().all(|c| c.non_isolated && c.classification == CriticalKind::Degenerate));
    }

    #[test]
    fn cellular_centre_and_corner_saddles() {
        let s = scan("cellular");
        let centre = s.points.iter().find(|c| (c.location[0] - PI / 2.0).hypot(c.location[1] - PI / 2.0) < 1e-8);
        assert_eq!(centre.unwrap().classification, CriticalKind::Elliptic);
        let corners: Vec<_> = s.points.iter().filter(|c| c.on_boundary).collect();
        assert_eq!(corners.len(), 4, "{:#?}", s.points);
        assert!(corners.iter().all(|c| c.classification == CriticalKind::Hyperbolic));
    }

    #[test]
    fn parallel_shears_have_none() {
        assert!(scan("couette").points.is_empty());
        assert!(scan("shear_quadratic").points.is_empty());
    }

    #[test]
    fn resolution_floor() {
        let f = make_builtin_flow("rigid", &BTreeMap::new()).unwrap();
        assert!(find_fixed_points(&f, 16, &Tolerances::default()).is_err());
    }
}
