//! Domains and steady stream functions.
//!
//! The velocity is `perp(grad psi) = (-psi_y, psi_x)` everywhere in the
//! crate. Periods and the spectrum do not depend on this sign.

pub mod catalog;
pub mod domain;
pub mod grid;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use catalog::CatalogFlow;
pub use domain::{BoundaryComponent, DomainSpec};
pub use grid::GridData;

use crate::error::{Error, Result};
use crate::tolerances::{Scales, Tolerances};
use crate::Point;

#[inline]
pub fn perp(g: Point) -> Point {
    [-g[1], g[0]]
}

#[derive(Debug, Clone)]
pub enum FieldSource {
    Analytic { flow: CatalogFlow, params: BTreeMap<String, f64> },
    Grid { data: Arc<GridData>, vorticity: Arc<GridData> },
}

/// Pointwise evaluation of psi, its gradient and the velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub point: Point,
    pub psi: f64,
    pub grad: Point,
    pub velocity: Point,
}

/// A steady stream function on a typed domain. Immutable; cheap to clone.
#[derive(Debug, Clone)]
pub struct StreamField {
    pub domain: DomainSpec,
    pub source: FieldSource,
    scale: f64,
    offset: f64,
    pub regularity_note: String,
}

pub fn make_builtin_flow(name: &str, params: &BTreeMap<String, f64>) -> Result<StreamField> {
    let flow = CatalogFlow::from_name(name)?;
    let params = flow.resolve_params(params)?;
    let domain = flow.domain(&params)?;
    let (scale, offset) = (params["scale"], params["offset"]);
    Ok(StreamField {
        domain,
        source: FieldSource::Analytic { flow, params },
        scale,
        offset,
        regularity_note: "closed-form catalog entry, smooth on the closed domain".into(),
    })
}

pub fn load_grid_field(text: &str, domain: DomainSpec) -> Result<StreamField> {
    domain.validate()?;
    let data = GridData::parse(text, &domain)?;
    Ok(StreamField::from_grid(data, domain))
}

pub fn load_grid_file(path: &Path, domain: DomainSpec) -> Result<StreamField> {
    let text = std::fs::read_to_string(path)?;
    load_grid_field(&text, domain)
}

impl StreamField {
    pub fn from_grid(data: GridData, domain: DomainSpec) -> Self {
        let omega: Vec<f64> = data.laplacian_nodes().into_iter().map(|v| -v).collect();
        let vorticity = data.with_values(omega);
        StreamField {
            domain,
            source: FieldSource::Grid { data: Arc::new(data), vorticity: Arc::new(vorticity) },
            scale: 1.0,
            offset: 0.0,
            regularity_note: "sampled grid, C1 bicubic Hermite interpolant; steadiness is user-asserted".into(),
        }
    }

    /// `c * psi + offset` on the same domain.
    pub fn affine(&self, c: f64, offset: f64) -> Self {
        let mut out = self.clone();
        out.scale *= c;
        out.offset = c * self.offset + offset;
        out
    }

    pub fn name(&self) -> String {
        match &self.source {
            FieldSource::Analytic { flow, .. } => flow.name().to_string(),
            FieldSource::Grid { .. } => "grid".to_string(),
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.source, FieldSource::Analytic { .. })
    }

    fn raw(&self, p: Point) -> (f64, Point, [f64; 3]) {
        let p = self.domain.wrap(p);
        match &self.source {
            FieldSource::Analytic { flow, .. } => (flow.psi(p), flow.grad(p), flow.hessian(p)),
            FieldSource::Grid { data, .. } => data.eval(p),
        }
    }

    pub fn psi(&self, p: Point) -> f64 {
        let p = self.domain.wrap(p);
        let v = match &self.source {
            FieldSource::Analytic { flow, .. } => flow.psi(p),
            FieldSource::Grid { data, .. } => data.eval(p).0,
        };
        self.scale * v + self.offset
    }

    pub fn grad(&self, p: Point) -> Point {
        let p = self.domain.wrap(p);
        let g = match &self.source {
            FieldSource::Analytic { flow, .. } => flow.grad(p),
            FieldSource::Grid { data, .. } => data.eval(p).1,
        };
        [self.scale * g[0], self.scale * g[1]]
    }

    pub fn psi_grad(&self, p: Point) -> (f64, Point) {
        let (v, g, _) = self.raw(p);
        (self.scale * v + self.offset, [self.scale * g[0], self.scale * g[1]])
    }

    /// `[psi_xx, psi_xy, psi_yy]`.
    pub fn hessian(&self, p: Point) -> [f64; 3] {
        let h = self.raw(p).2;
        [self.scale * h[0], self.scale * h[1], self.scale * h[2]]
    }

    pub fn velocity(&self, p: Point) -> Point {
        perp(self.grad(p))
    }

    /// `omega0 = -lap psi`.
    pub fn vorticity(&self, p: Point) -> f64 {
        let p = self.domain.wrap(p);
        let w = match &self.source {
            FieldSource::Analytic { flow, .. } => flow.vorticity(p),
            FieldSource::Grid { vorticity, .. } => vorticity.eval(p).0,
        };
        self.scale * w
    }

    pub fn eval(&self, p: Point) -> Result<FieldSample> {
        if !p.iter().all(|v| v.is_finite()) || !self.domain.contains(p) {
            return Err(Error::OutsideDomain(p[0], p[1]));
        }
        let (psi, grad) = self.psi_grad(p);
        Ok(FieldSample { point: p, psi, grad, velocity: perp(grad) })
    }

    /// Domain points on a regular `n x n` lattice over the bounding box.
    pub fn lattice_points(&self, n: usize) -> Vec<Point> {
        let [x0, x1, y0, y1] = self.domain.bounding_box();
        let mut pts = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let p = [
                    x0 + (x1 - x0) * (i as f64 + 0.5) / n as f64,
                    y0 + (y1 - y0) * (j as f64 + 0.5) / n as f64,
                ];
                if self.domain.contains(p) {
                    pts.push(p);
                }
            }
        }
        pts
    }

    /// Diameter, oscillation of psi and median speed, measured on a lattice.
    pub fn scales(&self, tol: &Tolerances) -> Scales {
        let pts = self.lattice_points(64);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut speeds = Vec::with_capacity(pts.len());
        for &p in &pts {
            let (v, g) = self.psi_grad(p);
            lo = lo.min(v);
            hi = hi.max(v);
            speeds.push(g[0].hypot(g[1]));
        }
        for (comp, _) in self.domain.boundary_components().iter().enumerate() {
            for (p, _) in self.domain.boundary_samples(comp, 64) {
                let v = self.psi(p);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        speeds.sort_by(f64::total_cmp);
        let median_speed = if speeds.is_empty() { 0.0 } else { speeds[speeds.len() / 2] };
        Scales {
            diameter: self.domain.diameter(),
            oscillation: if hi > lo { hi - lo } else { 0.0 },
            median_speed,
            tol: *tol,
        }
    }

    /// `max |perp(grad psi) . n|` over `n_samples` points per boundary component.
    pub fn boundary_tangency_residual(&self, n_samples: usize) -> Result<f64> {
        if !self.domain.has_boundary() {
            return Err(Error::NotApplicable("torus has no boundary".into()));
        }
        if n_samples < 16 {
            return Err(Error::InvalidParameter {
                name: "n_samples".into(),
                reason: "need at least 16 samples per component".into(),
            });
        }
        let mut worst: f64 = 0.0;
        for c in self.domain.boundary_components() {
            for (p, n) in self.domain.boundary_samples(c.index, n_samples) {
                let v = self.velocity(p);
                worst = worst.max((v[0] * n[0] + v[1] * n[1]).abs());
            }
        }
        Ok(worst)
    }
}
