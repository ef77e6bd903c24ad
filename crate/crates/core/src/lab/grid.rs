//! Cell-centred grid over the domain's bounding box with an inside mask and
//! exact cut-cell quadrature weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DomainSpec;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Inside(usize),
    /// Beyond the boundary component with this index.
    Outside(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid2D {
    pub domain: DomainSpec,
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    /// Cell `i + nx * j` is an unknown iff its centre lies in the domain.
    pub mask: Vec<bool>,
    /// `|cell ∩ domain|` for every cell, masked or not.
    pub weights: Vec<f64>,
    /// Unknown index of each cell.
    pub index: Vec<Option<usize>>,
    /// Cell of each unknown.
    pub cells: Vec<usize>,
}

fn disk_rect_area(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let (a, b) = (x0.max(-r), x1.min(r));
    if a >= b || y0 >= y1 {
        return 0.0;
    }
    let g = |x: f64| (r * r - x * x).max(0.0).sqrt();
    let anti = |x: f64| {
        let s = (x / r).clamp(-1.0, 1.0);
        0.5 * (x * g(x) + r * r * s.asin())
    };
    let mut cuts = vec![a, b];
    for y in [y0, y1] {
        if y.abs() < r {
            let s = (r * r - y * y).sqrt();
            cuts.extend([-s, s].into_iter().filter(|&x| x > a && x < b));
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (l, h) = (w[0], w[1]);
        if h <= l {
            continue;
        }
        let m = 0.5 * (l + h);
        let gm = g(m);
        // Chord in [y0, y1]: top is min(y1, g), bottom is max(y0, -g).
        if y1.min(gm) <= y0.max(-gm) {
            continue;
        }
        let ig = anti(h) - anti(l);
        let top = if y1 < gm { y1 * (h - l) } else { ig };
        let bottom = if y0 > -gm { y0 * (h - l) } else { -ig };
        area += top - bottom;
    }
    area
}

impl Grid2D {
    pub fn new(domain: &DomainSpec, nx: usize, ny: usize) -> Result<Self> {
        domain.validate()?;
        if nx < 16 || ny < 16 {
            return Err(Error::InvalidParameter { name: "grid".into(), reason: "need at least 16x16 cells".into() });
        }
        let [xa, xb, ya, yb] = domain.bounding_box();
        let (dx, dy) = ((xb - xa) / nx as f64, (yb - ya) / ny as f64);
        let mut mask = vec![false; nx * ny];
        let mut weights = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let (cx0, cy0) = (xa + i as f64 * dx, ya + j as f64 * dy);
                let (cx1, cy1) = (cx0 + dx, cy0 + dy);
                let c = i + nx * j;
                mask[c] = domain.contains_with_slack([cx0 + 0.5 * dx, cy0 + 0.5 * dy], 0.0);
                weights[c] = match *domain {
                    DomainSpec::Disk { radius } => disk_rect_area(radius, cx0, cx1, cy0, cy1),
                    DomainSpec::Annulus { r_in, r_out } => {
                        disk_rect_area(r_out, cx0, cx1, cy0, cy1) - disk_rect_area(r_in, cx0, cx1, cy0, cy1)
                    }
                    _ => dx * dy,
                };
            }
        }
        let mut index = vec![None; nx * ny];
        let mut cells = Vec::new();
        for (c, &m) in mask.iter().enumerate() {
            if m {
                index[c] = Some(cells.len());
                cells.push(c);
            }
        }
        Ok(Self { domain: domain.clone(), nx, ny, x0: xa, y0: ya, dx, dy, mask, weights, index, cells })
    }

    pub fn dimension(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn center(&self, cell: usize) -> Point {
        let (i, j) = (cell % self.nx, cell / self.nx);
        [self.x0 + (i as f64 + 0.5) * self.dx, self.y0 + (j as f64 + 0.5) * self.dy]
    }

    pub fn corner(&self, i: usize, j: usize) -> Point {
        [self.x0 + i as f64 * self.dx, self.y0 + j as f64 * self.dy]
    }

    /// Centres of all unknowns, in unknown order.
    pub fn centers(&self) -> Vec<Point> {
        self.cells.iter().map(|&c| self.center(c)).collect()
    }

    fn periodic(&self) -> (bool, bool) {
        let (px, py) = self.domain.periods();
        (px.is_some(), py.is_some())
    }

    /// Neighbour of cell `(i, j)` shifted by `(di, dj)`, one of the four axis directions.
    pub fn neighbor(&self, i: usize, j: usize, di: i64, dj: i64) -> Neighbor {
        let (px, py) = self.periodic();
        let (ni, nj) = (i as i64 + di, j as i64 + dj);
        let wrap = |v: i64, n: usize, p: bool| -> Option<usize> {
            if (0..n as i64).contains(&v) {
                Some(v as usize)
            } else if p {
                Some(v.rem_euclid(n as i64) as usize)
            } else {
                None
            }
        };
        let face = {
            let c = self.center(i + self.nx * j);
            [c[0] + 0.5 * di as f64 * self.dx, c[1] + 0.5 * dj as f64 * self.dy]
        };
        match (wrap(ni, self.nx, px), wrap(nj, self.ny, py)) {
            (Some(a), Some(b)) => match self.index[a + self.nx * b] {
                Some(k) => Neighbor::Inside(k),
                None => Neighbor::Outside(self.domain.nearest_component(face)),
            },
            _ => Neighbor::Outside(self.domain.nearest_component(face)),
        }
    }

    /// Corner `(i, j)` with `0 <= i <= nx`, `0 <= j <= ny`, reduced on periodic axes.
    pub fn corner_id(&self, i: usize, j: usize) -> usize {
        let (px, py) = self.periodic();
        let i = if px { i % self.nx } else { i };
        let j = if py { j % self.ny } else { j };
        i + (self.nx + 1) * j
    }

    pub fn corner_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    /// The up-to-four cells around corner `(i, j)`; `None` entries are
    /// outside the mask or beyond a non-periodic edge.
    pub fn cells_at_corner(&self, i: usize, j: usize) -> [Option<usize>; 4] {
        let (px, py) = self.periodic();
        let pick = |ci: i64, cj: i64| -> Option<usize> {
            let ci = if px { ci.rem_euclid(self.nx as i64) } else { ci };
            let cj = if py { cj.rem_euclid(self.ny as i64) } else { cj };
            if ci < 0 || cj < 0 || ci >= self.nx as i64 || cj >= self.ny as i64 {
                return None;
            }
            self.index[ci as usize + self.nx * cj as usize]
        };
        let (i, j) = (i as i64, j as i64);
        [pick(i - 1, j - 1), pick(i, j - 1), pick(i - 1, j), pick(i, j)]
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cut_cell_weights_sum_to_area() {
        for (d, n) in [
            (DomainSpec::Disk { radius: 1.0 }, 37),
            (DomainSpec::Annulus { r_in: 1.0, r_out: 2.0 }, 48),
            (DomainSpec::Cylinder { length: 2.0 * PI, a: 1.0, b: 2.0 }, 20),
        ] {
            let g = Grid2D::new(&d, n, n).unwrap();
            let rel = (g.total_weight() - d.area()).abs() / d.area();
            assert!(rel < 1e-12, "{d:?}: {rel:e}");
        }
    }

    #[test]
    fn quarter_disk_cell() {
        assert!((disk_rect_area(1.0, 0.0, 2.0, 0.0, 2.0) - PI / 4.0).abs() < 1e-15);
        assert!((disk_rect_area(1.0, -0.1, 0.1, -0.1, 0.1) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn periodic_neighbors_wrap() {
        let g = Grid2D::new(&DomainSpec::Torus { lx: 1.0, ly: 1.0 }, 16, 16).unwrap();
        assert_eq!(g.neighbor(0, 0, -1, 0), Neighbor::Inside(15));
        assert_eq!(g.neighbor(3, 15, 0, 1), Neighbor::Inside(3));
        let c = Grid2D::new(&DomainSpec::Cylinder { length: 1.0, a: 0.0, b: 1.0 }, 16, 16).unwrap();
        assert_eq!(c.neighbor(0, 0, 0, -1), Neighbor::Outside(0));
        assert_eq!(c.neighbor(0, 15, 0, 1), Neighbor::Outside(1));
    }
}
