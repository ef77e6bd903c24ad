//! Level-curve tracing by arclength continuation.
//!
//! Independent of the time integrator: the curve is followed with RK4 on the
//! unit tangent field and projected back onto `psi = rho` by Newton steps
//! along the gradient.

use crate::error::{Error, Result};
use crate::field::StreamField;
use crate::ode::rk4;
use crate::tolerances::Scales;
use crate::Point;

use super::orbit::Section;

#[derive(Debug, Clone)]
pub struct LevelCurve {
    pub level: f64,
    /// Unwrapped points; the last one is the seed again (up to a period shift).
    pub points: Vec<Point>,
    pub length: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ContourOpts {
    /// Bound on turning angle and on relative change of |grad psi| per step.
    pub resolution: f64,
    pub ds_max: f64,
    pub max_length: f64,
    pub guard: f64,
}

impl ContourOpts {
    pub fn from_scales(s: &Scales) -> Self {
        Self {
            resolution: s.tol.contour_resolution,
            ds_max: 1e-2 * s.diameter,
            max_length: s.tol.cap_time_factor * s.diameter,
            guard: s.fixed_point_guard(),
        }
    }
}

fn project(field: &StreamField, mut p: Point, rho: f64) -> Point {
    for _ in 0..4 {
        let (v, g) = field.psi_grad(p);
        let g2 = g[0] * g[0] + g[1] * g[1];
        if g2 == 0.0 {
            break;
        }
        let d = (v - rho) / g2;
        p = [p[0] - d * g[0], p[1] - d * g[1]];
        if d.abs() * g2.sqrt() < 1e-15 * (1.0 + p[0].abs() + p[1].abs()) {
            break;
        }
    }
    p
}

/// Trace the closed component of `{psi = psi(seed)}` through `seed`.
pub fn trace_level_curve(field: &StreamField, seed: Point, opts: &ContourOpts) -> Result<LevelCurve> {
    let rho = field.psi(seed);
    let g0 = field.grad(seed);
    if g0[0].hypot(g0[1]) <= opts.guard {
        return Err(Error::NearFixedPoint(seed[0], seed[1]));
    }
    let section = Section::new(field, seed);
    let tangent = |p: Point| {
        let g = field.grad(p);
        let n = g[0].hypot(g[1]).max(f64::MIN_POSITIVE);
        [-g[1] / n, g[0] / n]
    };
    let mut pts = vec![seed];
    let mut x = seed;
    let mut length = 0.0;
    while length < opts.max_length {
        let g = field.grad(x);
        let gn = g[0].hypot(g[1]);
        if gn <= opts.guard {
            return Err(Error::GrazesFixedPoint(x[0], x[1]));
        }
        let h = field.hessian(x);
        let t = [-g[1] / gn, g[0] / gn];
        let htt = t[0] * t[0] * h[0] + 2.0 * t[0] * t[1] * h[1] + t[1] * t[1] * h[2];
        let htg = (t[0] * (h[0] * g[0] + h[1] * g[1]) + t[1] * (h[1] * g[0] + h[2] * g[1])) / gn;
        let kappa = htt.abs() / gn;
        let mut ds = opts.ds_max;
        if kappa > 0.0 {
            ds = ds.min(opts.resolution / kappa);
        }
        if htg != 0.0 {
            ds = ds.min(opts.resolution * gn / htg.abs());
        }
        let xn = project(field, rk4(&tangent, x, ds), rho);
        if section.crossed(field, x, xn) {
            let d = field.domain.displacement(x, seed);
            let close = [x[0] + d[0], x[1] + d[1]];
            length += d[0].hypot(d[1]);
            pts.push(close);
            return Ok(LevelCurve { level: rho, points: pts, length });
        }
        length += (xn[0] - x[0]).hypot(xn[1] - x[1]);
        pts.push(xn);
        x = xn;
    }
    Err(Error::NotPeriodic(format!(
        "level curve through ({:.6}, {:.6}) did not close within length {:.3e}",
        seed[0], seed[1], opts.max_length
    )))
}

/// `sum |segment| / |grad psi(midpoint)|` over a closed polyline, and the
/// same sum over every other vertex.
pub fn contour_period(field: &StreamField, polyline: &[Point], guard: f64) -> Result<(f64, f64)> {
    if polyline.len() < 3 {
        return Err(Error::Empty("polyline needs at least three points".into()));
    }
    let rho = field.psi(polyline[0]);
    let seg = |a: Point, b: Point| -> Result<f64> {
        let (m, len) = arc_midpoint(field, a, b, rho);
        let g = field.grad(m);
        let gn = g[0].hypot(g[1]);
        if gn <= guard {
            return Err(Error::GrazesFixedPoint(m[0], m[1]));
        }
        Ok(len / gn)
    };
    let mut fine = 0.0;
    for w in polyline.windows(2) {
        fine += seg(w[0], w[1])?;
    }
    let mut coarse = 0.0;
    let mut i = 0;
    while i + 2 < polyline.len() {
        coarse += seg(polyline[i], polyline[i + 2])?;
        i += 2;
    }
    if i + 1 < polyline.len() {
        coarse += seg(polyline[i], polyline[i + 1])?;
    }
    Ok((fine, coarse))
}

/// Chord midpoint pushed back onto the level set, and the length of the
/// two-piece path through it. Without the projection the chord sagitta
/// biases `1 / |grad psi|` wherever the gradient is small.
fn arc_midpoint(field: &StreamField, a: Point, b: Point, rho: f64) -> (Point, f64) {
    let m = project(field, [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])], rho);
    let len = (m[0] - a[0]).hypot(m[1] - a[1]) + (b[0] - m[0]).hypot(b[1] - m[1]);
    (m, len)
}

/// `oint f(x) / |grad psi| ds` by the midpoint rule.
pub fn contour_integral(field: &StreamField, polyline: &[Point], f: impl Fn(Point) -> f64) -> f64 {
    let Some(&first) = polyline.first() else { return 0.0 };
    let rho = field.psi(first);
    polyline
        .windows(2)
        .map(|w| {
            let (m, len) = arc_midpoint(field, w[0], w[1], rho);
            let g = field.grad(m);
            len * f(m) / g[0].hypot(g[1])
        })
        .sum()
}

/// Distance from `p` to a polyline, with periodic minimum image.
pub fn distance_to_polyline(field: &StreamField, p: Point, polyline: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for w in polyline.windows(2) {
        let a = w[0];
        let ab = [w[1][0] - a[0], w[1][1] - a[1]];
        let ap = field.domain.displacement(a, p);
        let l2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = if l2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
        let d = (ap[0] - t * ab[0]).hypot(ap[1] - t * ab[1]);
        best = best.min(d);
    }
    best
}
