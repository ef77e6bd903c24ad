//! Orbit tracing with a Poincaré-section return test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{perp, StreamField};
use crate::ode::{dopri_step, Stepper};
use crate::tolerances::Scales;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKind {
    Periodic,
    Fixed,
    AperiodicOrLong,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub seed: Point,
    pub kind: OrbitKind,
    /// Unwrapped positions; for a periodic trace the last point is the
    /// return to the section (equal to the seed up to a period shift).
    pub polyline: Vec<Point>,
    pub psi_value: f64,
    pub arclength: f64,
    /// Return time when periodic, elapsed time otherwise.
    pub time: f64,
    pub psi_drift: f64,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone)]
pub struct TraceCaps {
    pub max_time: f64,
    pub max_arclength: f64,
    pub max_steps: usize,
    pub rtol: f64,
    /// Discs around saddles; entering one ends the trace as aperiodic_or_long.
    pub saddle_zones: Vec<(Point, f64)>,
    pub record_polyline: bool,
}

impl TraceCaps {
    pub fn from_scales(s: &Scales) -> Self {
        Self {
            max_time: s.max_time(),
            max_arclength: s.tol.cap_time_factor * s.diameter,
            max_steps: 2_000_000,
            rtol: s.tol.period_rtol,
            saddle_zones: Vec::new(),
            record_polyline: true,
        }
    }
}

/// Poincaré section through a seed: the line along grad psi.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Section {
    pub seed: Point,
    pub tangent: Point,
    pub normal: Point,
    /// Crossings farther than this from the seed along the section are ignored.
    pub window: f64,
}

impl Section {
    pub fn new(field: &StreamField, seed: Point) -> Self {
        let g = field.grad(seed);
        let n = g[0].hypot(g[1]);
        let h = field.hessian(seed);
        let hn = ((h[0] - h[2]).powi(2) + 4.0 * h[1] * h[1]).sqrt() * 0.5 + 0.5 * (h[0] + h[2]).abs();
        let diam = field.domain.diameter();
        let local = if hn > 0.0 { n / hn } else { diam };
        Self {
            seed,
            tangent: [-g[1] / n, g[0] / n],
            normal: [g[0] / n, g[1] / n],
            window: 0.5 * local.min(diam),
        }
    }

    /// (along-flow coordinate, along-gradient coordinate) of `p`.
    pub fn coords(&self, field: &StreamField, p: Point) -> (f64, f64) {
        let d = field.domain.displacement(self.seed, p);
        (d[0] * self.tangent[0] + d[1] * self.tangent[1], d[0] * self.normal[0] + d[1] * self.normal[1])
    }

    /// Does the step from `a` to `b` cross the section near the seed in the
    /// flow direction?
    pub fn crossed(&self, field: &StreamField, a: Point, b: Point) -> bool {
        let (sa, _) = self.coords(field, a);
        let (sb, nb) = self.coords(field, b);
        let chord = (b[0] - a[0]).hypot(b[1] - a[1]);
        sa < 0.0 && sb >= 0.0 && (sb - sa) <= 2.0 * chord + 1e-300 && nb.abs() < self.window
    }
}

/// Integrate `x' = perp(grad psi)` from `seed` until the first return to the
/// section through the seed, or until a cap is exhausted.
pub fn trace_orbit(field: &StreamField, seed: Point, caps: &TraceCaps, scales: &Scales) -> Result<OrbitTrace> {
    let g0 = field.grad(seed);
    let speed0 = g0[0].hypot(g0[1]);
    if speed0 <= scales.fixed_point_guard() {
        return Err(Error::NearFixedPoint(seed[0], seed[1]));
    }
    let rho = field.psi(seed);
    let section = Section::new(field, seed);
    let length_scale = (2.0 * section.window).min(scales.diameter);
    let rhs = |y: &[f64; 3]| {
        let g = field.grad([y[0], y[1]]);
        [-g[1], g[0], g[0].hypot(g[1])]
    };
    let mut stepper = Stepper::new(caps.rtol, caps.rtol * length_scale, 1e-3 * length_scale / speed0);
    let mut y = [seed[0], seed[1], 0.0];
    let mut t = 0.0;
    let mut polyline = vec![seed];
    let mut drift: f64 = 0.0;
    let finish = |kind, polyline: Vec<Point>, t: f64, s: f64, drift: f64, diag: Option<String>| OrbitTrace {
        seed,
        kind,
        polyline,
        psi_value: rho,
        arclength: s,
        time: t,
        psi_drift: drift,
        diagnostic: diag,
    };
    for _ in 0..caps.max_steps {
        // A step shorter than its distance to the section cannot jump it.
        let here = [y[0], y[1]];
        let reach = (0.5 * section.window).max(field.domain.distance(here, seed) - section.window);
        let g = field.grad(here);
        let h_max = reach / g[0].hypot(g[1]).max(f64::MIN_POSITIVE);
        let (yn, h) = match stepper.step(&rhs, &y, h_max) {
            Ok(v) => v,
            Err(e) => {
                return Ok(finish(OrbitKind::AperiodicOrLong, polyline, t, y[2], drift, Some(e.to_string())));
            }
        };
        let a = [y[0], y[1]];
        let b = [yn[0], yn[1]];
        if section.crossed(field, a, b) {
            let tau = refine_crossing(field, &section, &rhs, &y, h);
            let (yc, _) = dopri_step(&rhs, &y, tau);
            let close = [a[0] + field.domain.displacement(a, seed)[0], a[1] + field.domain.displacement(a, seed)[1]];
            let miss = field.domain.distance([yc[0], yc[1]], seed);
            if caps.record_polyline {
                polyline.push(close);
            }
            let diag = (miss > scales.closure_tol()).then(|| format!("return misses the seed by {miss:.3e}"));
            return Ok(finish(OrbitKind::Periodic, polyline, t + tau, yc[2], drift, diag));
        }
        y = yn;
        t += h;
        drift = drift.max((field.psi(b) - rho).abs());
        if caps.record_polyline {
            polyline.push(b);
        }
        // Boundary-tangent flows only leak out by integration error; a
        // trajectory this far outside crossed the boundary for real.
        if !field.domain.contains_with_slack(b, 0.05 * scales.diameter) {
            let msg = format!("left the domain at ({:.4}, {:.4})", b[0], b[1]);
            return Ok(finish(OrbitKind::AperiodicOrLong, polyline, t, y[2], drift, Some(msg)));
        }
        if let Some((c, _)) = caps.saddle_zones.iter().find(|(c, r)| field.domain.distance(*c, b) < *r) {
            let msg = format!("entered saddle neighbourhood at ({:.4}, {:.4})", c[0], c[1]);
            return Ok(finish(OrbitKind::AperiodicOrLong, polyline, t, y[2], drift, Some(msg)));
        }
        if t > caps.max_time || y[2] > caps.max_arclength {
            let msg = format!("cap exhausted at t = {t:.4e}, arclength = {:.4e}", y[2]);
            return Ok(finish(OrbitKind::AperiodicOrLong, polyline, t, y[2], drift, Some(msg)));
        }
    }
    Ok(finish(OrbitKind::AperiodicOrLong, polyline, t, y[2], drift, Some("step cap exhausted".into())))
}

/// Newton iteration on the step length so that the end of a single step
/// lies on the section.
fn refine_crossing(
    field: &StreamField,
    section: &Section,
    rhs: &impl Fn(&[f64; 3]) -> [f64; 3],
    y: &[f64; 3],
    h: f64,
) -> f64 {
    let a = [y[0], y[1]];
    let (sa, _) = section.coords(field, a);
    let (yb, _) = dopri_step(rhs, y, h);
    let (sb, _) = section.coords(field, [yb[0], yb[1]]);
    let mut tau = (h * sa / (sa - sb)).clamp(0.0, h);
    for _ in 0..40 {
        let (yt, _) = dopri_step(rhs, y, tau);
        let p = [yt[0], yt[1]];
        let (s, _) = section.coords(field, p);
        let v = perp(field.grad(p));
        let ds = v[0] * section.tangent[0] + v[1] * section.tangent[1];
        if ds.abs() < 1e-300 {
            break;
        }
        let step = s / ds;
        tau = (tau - step).clamp(0.0, h);
        if step.abs() <= 4.0 * f64::EPSILON * tau.max(h * 1e-3) {
            break;
        }
    }
    tau
}
