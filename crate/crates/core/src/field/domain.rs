use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point;

/// One of the admissible flow domains. Disks and annuli are centred at the
/// origin; cylinders are periodic in `x` with period `length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Disk { radius: f64 },
    Annulus { r_in: f64, r_out: f64 },
    Cylinder { length: f64, a: f64, b: f64 },
    Torus { lx: f64, ly: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
}

/// A labelled connected component of the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryComponent {
    pub index: usize,
    pub label: String,
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DomainSpec::Disk { radius } => radius > 0.0 && radius.is_finite(),
            DomainSpec::Annulus { r_in, r_out } => 0.0 < r_in && r_in < r_out && r_out.is_finite(),
            DomainSpec::Cylinder { length, a, b } => {
                length > 0.0 && a < b && length.is_finite() && a.is_finite() && b.is_finite()
            }
            DomainSpec::Torus { lx, ly } => lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite(),
            DomainSpec::Rectangle { x0, x1, y0, y1 } => {
                x0 < x1 && y0 < y1 && [x0, x1, y0, y1].iter().all(|v| v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDomain(format!("{self:?}")))
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DomainSpec::Disk { .. } => "disk",
            DomainSpec::Annulus { .. } => "annulus",
            DomainSpec::Cylinder { .. } => "cylinder",
            DomainSpec::Torus { .. } => "torus",
            DomainSpec::Rectangle { .. } => "rectangle",
        }
    }

    /// `[xmin, xmax, ymin, ymax]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        match *self {
            DomainSpec::Disk { radius } => [-radius, radius, -radius, radius],
            DomainSpec::Annulus { r_out, .. } => [-r_out, r_out, -r_out, r_out],
            DomainSpec::Cylinder { length, a, b } => [0.0, length, a, b],
            DomainSpec::Torus { lx, ly } => [0.0, lx, 0.0, ly],
            DomainSpec::Rectangle { x0, x1, y0, y1 } => [x0, x1, y0, y1],
        }
    }

    /// Periods in x and y, if the direction is periodic.
    pub fn periods(&self) -> (Option<f64>, Option<f64>) {
        match *self {
            DomainSpec::Cylinder { length, .. } => (Some(length), None),
            DomainSpec::Torus { lx, ly } => (Some(lx), Some(ly)),
            _ => (None, None),
        }
    }

    pub fn diameter(&self) -> f64 {
        let [x0, x1, y0, y1] = self.bounding_box();
        (x1 - x0).hypot(y1 - y0)
    }

    pub fn area(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            DomainSpec::Disk { radius } => PI * radius * radius,
            DomainSpec::Annulus { r_in, r_out } => PI * (r_out * r_out - r_in * r_in),
            _ => {
                let [x0, x1, y0, y1] = self.bounding_box();
                (x1 - x0) * (y1 - y0)
            }
        }
    }

    /// Map periodic coordinates into the fundamental cell.
    pub fn wrap(&self, p: Point) -> Point {
        let (px, py) = self.periods();
        let [x0, _, y0, _] = self.bounding_box();
        let mut q = p;
        if let Some(l) = px {
            q[0] = x0 + (q[0] - x0).rem_euclid(l);
        }
        if let Some(l) = py {
            q[1] = y0 + (q[1] - y0).rem_euclid(l);
        }
        q
    }

    /// Minimum-image displacement `b - a`.
    pub fn displacement(&self, a: Point, b: Point) -> Point {
        let (px, py) = self.periods();
        let mut d = [b[0] - a[0], b[1] - a[1]];
        if let Some(l) = px {
            d[0] -= l * (d[0] / l).round();
        }
        if let Some(l) = py {
            d[1] -= l * (d[1] / l).round();
        }
        d
    }

    pub fn distance(&self, a: Point, b: Point) -> f64 {
        let d = self.displacement(a, b);
        d[0].hypot(d[1])
    }

    /// Closed-domain membership with a relative slack of `1e-12 * diameter`.
    pub fn contains(&self, p: Point) -> bool {
        self.contains_with_slack(p, 1e-12 * self.diameter())
    }

    pub fn contains_with_slack(&self, p: Point, slack: f64) -> bool {
        let p = self.wrap(p);
        match *self {
            DomainSpec::Disk { radius } => p[0].hypot(p[1]) <= radius + slack,
            DomainSpec::Annulus { r_in, r_out } => {
                let r = p[0].hypot(p[1]);
                r >= r_in - slack && r <= r_out + slack
            }
            DomainSpec::Cylinder { a, b, .. } => p[1] >= a - slack && p[1] <= b + slack,
            DomainSpec::Torus { .. } => true,
            DomainSpec::Rectangle { x0, x1, y0, y1 } => {
                p[0] >= x0 - slack && p[0] <= x1 + slack && p[1] >= y0 - slack && p[1] <= y1 + slack
            }
        }
    }

    pub fn has_boundary(&self) -> bool {
        !matches!(self, DomainSpec::Torus { .. })
    }

    pub fn boundary_components(&self) -> Vec<BoundaryComponent> {
        let labels: &[&str] = match self {
            DomainSpec::Disk { .. } => &["circle"],
            DomainSpec::Annulus { .. } => &["inner", "outer"],
            DomainSpec::Cylinder { .. } => &["bottom", "top"],
            DomainSpec::Torus { .. } => &[],
            DomainSpec::Rectangle { .. } => &["boundary"],
        };
        labels
            .iter()
            .enumerate()
            .map(|(index, l)| BoundaryComponent { index, label: l.to_string() })
            .collect()
    }

    /// `n` points on boundary component `component` with their outward unit normals.
    pub fn boundary_samples(&self, component: usize, n: usize) -> Vec<(Point, Point)> {
        use std::f64::consts::TAU;
        let circle = |r: f64, sign: f64| -> Vec<(Point, Point)> {
            (0..n)
                .map(|i| {
                    let t = TAU * (i as f64 + 0.5) / n as f64;
                    let (s, c) = t.sin_cos();
                    ([r * c, r * s], [sign * c, sign * s])
                })
                .collect()
        };
        match *self {
            DomainSpec::Disk { radius } => circle(radius, 1.0),
            DomainSpec::Annulus { r_in, r_out } => {
                if component == 0 {
                    circle(r_in, -1.0)
                } else {
                    circle(r_out, 1.0)
                }
            }
            DomainSpec::Cylinder { length, a, b } => (0..n)
                .map(|i| {
                    let x = length * (i as f64 + 0.5) / n as f64;
                    if component == 0 {
                        ([x, a], [0.0, -1.0])
                    } else {
                        ([x, b], [0.0, 1.0])
                    }
                })
                .collect(),
            DomainSpec::Torus { .. } => Vec::new(),
            DomainSpec::Rectangle { x0, x1, y0, y1 } => {
                let per = n.div_ceil(4).max(1);
                let mut out = Vec::with_capacity(4 * per);
                for i in 0..per {
                    let t = (i as f64 + 0.5) / per as f64;
                    out.push(([x0 + t * (x1 - x0), y0], [0.0, -1.0]));
                    out.push(([x1, y0 + t * (y1 - y0)], [1.0, 0.0]));
                    out.push(([x0 + t * (x1 - x0), y1], [0.0, 1.0]));
                    out.push(([x0, y0 + t * (y1 - y0)], [-1.0, 0.0]));
                }
                out
            }
        }
    }

    /// Which boundary component lies closest to `p`.
    pub fn nearest_component(&self, p: Point) -> usize {
        match *self {
            DomainSpec::Annulus { r_in, r_out } => {
                usize::from(p[0].hypot(p[1]) > 0.5 * (r_in + r_out))
            }
            DomainSpec::Cylinder { a, b, .. } => usize::from(p[1] > 0.5 * (a + b)),
            _ => 0,
        }
    }

    /// Unit inward normal of the boundary closest to `p`.
    pub fn inward_normal(&self, p: Point) -> Point {
        let radial = |s: f64| {
            let r = p[0].hypot(p[1]).max(f64::MIN_POSITIVE);
            [s * p[0] / r, s * p[1] / r]
        };
        match *self {
            DomainSpec::Disk { .. } => radial(-1.0),
            DomainSpec::Annulus { .. } => {
                if self.nearest_component(p) == 0 {
                    radial(1.0)
                } else {
                    radial(-1.0)
                }
            }
            DomainSpec::Cylinder { .. } => {
                if self.nearest_component(p) == 0 {
                    [0.0, 1.0]
                } else {
                    [0.0, -1.0]
                }
            }
            DomainSpec::Torus { .. } => [0.0, 0.0],
            DomainSpec::Rectangle { x0, x1, y0, y1 } => {
                let d = [p[0] - x0, x1 - p[0], p[1] - y0, y1 - p[1]];
                let k = (0..4).min_by(|&i, &j| d[i].total_cmp(&d[j])).unwrap_or(0);
                [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]][k]
            }
        }
    }

    /// Boundary crossing on the segment from `inside` to `outside`, by bisection.
    pub fn exit_point(&self, inside: Point, outside: Point) -> Point {
        let (mut a, mut b) = (inside, outside);
        for _ in 0..60 {
            let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            if self.contains_with_slack(m, 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_counts_match_kind() {
        let cases = [
            (DomainSpec::Disk { radius: 1.0 }, 1),
            (DomainSpec::Annulus { r_in: 1.0, r_out: 2.0 }, 2),
            (DomainSpec::Cylinder { length: 1.0, a: 0.0, b: 1.0 }, 2),
            (DomainSpec::Torus { lx: 1.0, ly: 1.0 }, 0),
        ];
        for (d, n) in cases {
            d.validate().unwrap();
            assert_eq!(d.boundary_components().len(), n, "{d:?}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DomainSpec::Disk { radius: 0.0 }.validate().is_err());
        assert!(DomainSpec::Annulus { r_in: 2.0, r_out: 1.0 }.validate().is_err());
        assert!(DomainSpec::Cylinder { length: 1.0, a: 2.0, b: 1.0 }.validate().is_err());
        assert!(DomainSpec::Torus { lx: -1.0, ly: 1.0 }.validate().is_err());
    }

    #[test]
    fn wrap_and_min_image() {
        let d = DomainSpec::Cylinder { length: 2.0, a: 0.0, b: 1.0 };
        assert_eq!(d.wrap([2.5, 0.3]), [0.5, 0.3]);
        assert_eq!(d.wrap([-0.5, 0.3]), [1.5, 0.3]);
        let disp = d.displacement([1.9, 0.0], [0.1, 0.0]);
        assert!((disp[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn exit_point_lies_on_circle() {
        let d = DomainSpec::Disk { radius: 1.0 };
        let p = d.exit_point([0.0, 0.0], [2.0, 1.0]);
        assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
    }
}
