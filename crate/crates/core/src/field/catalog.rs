//! Closed-form steady flows.
//!
//! Every entry is a steady Euler solution: radial profiles and parallel
//! shears are steady for any profile, and the cellular flow has
//! `omega = 2 psi`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogFlow {
    /// psi = r^2/2 on a disk: rigid rotation.
    Rigid,
    /// psi = cos r on a disk.
    RadialCos,
    /// psi = y on a cylinder.
    Couette,
    /// psi = y^2/2 on a cylinder.
    ShearQuadratic,
    /// psi = sin x sin y on [0, pi]^2, or on the 2 pi torus.
    Cellular,
    /// psi = r^3/3 on an annulus.
    AnnulusShear,
}

impl CatalogFlow {
    pub const ALL: [CatalogFlow; 6] = [
        CatalogFlow::Rigid,
        CatalogFlow::RadialCos,
        CatalogFlow::Couette,
        CatalogFlow::ShearQuadratic,
        CatalogFlow::Cellular,
        CatalogFlow::AnnulusShear,
    ];

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "rigid" => CatalogFlow::Rigid,
            "radial_cos" => CatalogFlow::RadialCos,
            "couette" => CatalogFlow::Couette,
            "shear_quadratic" => CatalogFlow::ShearQuadratic,
            "cellular" => CatalogFlow::Cellular,
            "annulus_shear" => CatalogFlow::AnnulusShear,
            other => return Err(Error::UnknownFlow(other.to_string())),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            CatalogFlow::Rigid => "rigid",
            CatalogFlow::RadialCos => "radial_cos",
            CatalogFlow::Couette => "couette",
            CatalogFlow::ShearQuadratic => "shear_quadratic",
            CatalogFlow::Cellular => "cellular",
            CatalogFlow::AnnulusShear => "annulus_shear",
        }
    }

    /// Parameter names and defaults.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            CatalogFlow::Rigid => &[("R", 1.0)],
            CatalogFlow::RadialCos => &[("R", TAU)],
            CatalogFlow::Couette => &[("L", TAU), ("a", 0.0), ("b", 1.0)],
            CatalogFlow::ShearQuadratic => &[("L", TAU), ("a", 1.0), ("b", 2.0)],
            CatalogFlow::Cellular => &[("periodic", 0.0)],
            CatalogFlow::AnnulusShear => &[("r_in", 1.0), ("r_out", 2.0)],
        }
    }

    /// Fill defaults, reject unknown names. `scale` and `offset` are accepted
    /// for every flow.
    pub fn resolve_params(self, given: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
        let mut out: BTreeMap<String, f64> =
            self.defaults().iter().map(|(k, v)| (k.to_string(), *v)).collect();
        out.insert("scale".into(), 1.0);
        out.insert("offset".into(), 0.0);
        for (k, v) in given {
            if !out.contains_key(k) {
                return Err(Error::InvalidParameter {
                    name: k.clone(),
                    reason: format!("not a parameter of {}", self.name()),
                });
            }
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name: k.clone(), reason: "not finite".into() });
            }
            out.insert(k.clone(), *v);
        }
        if out["scale"] <= 0.0 {
            return Err(Error::InvalidParameter { name: "scale".into(), reason: "must be positive".into() });
        }
        Ok(out)
    }

    pub fn domain(self, p: &BTreeMap<String, f64>) -> Result<DomainSpec> {
        let d = match self {
            CatalogFlow::Rigid | CatalogFlow::RadialCos => DomainSpec::Disk { radius: p["R"] },
            CatalogFlow::Couette | CatalogFlow::ShearQuadratic => {
                DomainSpec::Cylinder { length: p["L"], a: p["a"], b: p["b"] }
            }
            CatalogFlow::Cellular => {
                if p["periodic"] != 0.0 {
                    DomainSpec::Torus { lx: TAU, ly: TAU }
                } else {
                    DomainSpec::Rectangle { x0: 0.0, x1: PI, y0: 0.0, y1: PI }
                }
            }
            CatalogFlow::AnnulusShear => DomainSpec::Annulus { r_in: p["r_in"], r_out: p["r_out"] },
        };
        d.validate()?;
        Ok(d)
    }

    pub fn psi(self, p: Point) -> f64 {
        let [x, y] = p;
        match self {
            CatalogFlow::Rigid => 0.5 * (x * x + y * y),
            CatalogFlow::RadialCos => x.hypot(y).cos(),
            CatalogFlow::Couette => y,
            CatalogFlow::ShearQuadratic => 0.5 * y * y,
            CatalogFlow::Cellular => x.sin() * y.sin(),
            CatalogFlow::AnnulusShear => x.hypot(y).powi(3) / 3.0,
        }
    }

    pub fn grad(self, p: Point) -> Point {
        let [x, y] = p;
        match self {
            CatalogFlow::Couette => [0.0, 1.0],
            CatalogFlow::ShearQuadratic => [0.0, y],
            CatalogFlow::Cellular => [x.cos() * y.sin(), x.sin() * y.cos()],
            radial => {
                let (g1r, _) = radial_profile(radial, x.hypot(y));
                [g1r * x, g1r * y]
            }
        }
    }

    /// `[psi_xx, psi_xy, psi_yy]`.
    pub fn hessian(self, p: Point) -> [f64; 3] {
        let [x, y] = p;
        match self {
            CatalogFlow::Couette => [0.0; 3],
            CatalogFlow::ShearQuadratic => [0.0, 0.0, 1.0],
            CatalogFlow::Cellular => {
                let s = x.sin() * y.sin();
                [-s, x.cos() * y.cos(), -s]
            }
            radial => {
                let r2 = x * x + y * y;
                let (g1r, g2) = radial_profile(radial, r2.sqrt());
                if r2 < 1e-300 {
                    return [g2, 0.0, g2];
                }
                let c = (g2 - g1r) / r2;
                [g1r + c * x * x, c * x * y, g1r + c * y * y]
            }
        }
    }

    /// Vorticity `omega0 = -lap psi`.
    pub fn vorticity(self, p: Point) -> f64 {
        let [x, y] = p;
        match self {
            CatalogFlow::Rigid => -2.0,
            CatalogFlow::RadialCos => {
                let r = x.hypot(y);
                r.cos() + sinc(r)
            }
            CatalogFlow::Couette => 0.0,
            CatalogFlow::ShearQuadratic => -1.0,
            CatalogFlow::Cellular => 2.0 * x.sin() * y.sin(),
            CatalogFlow::AnnulusShear => -3.0 * x.hypot(y),
        }
    }
}

fn sinc(r: f64) -> f64 {
    if r < 1e-4 {
        let r2 = r * r;
        1.0 - r2 / 6.0 + r2 * r2 / 120.0
    } else {
        r.sin() / r
    }
}

/// `(g'(r)/r, g''(r))` for the radial profiles.
fn radial_profile(flow: CatalogFlow, r: f64) -> (f64, f64) {
    match flow {
        CatalogFlow::Rigid => (1.0, 1.0),
        CatalogFlow::RadialCos => (-sinc(r), -r.cos()),
        CatalogFlow::AnnulusShear => (r, 2.0 * r),
        _ => unreachable!("not a radial flow"),
    }
}
