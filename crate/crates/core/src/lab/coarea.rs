//! Both sides of `int_{region} f^2 = int (oint_{psi = rho} f^2 / |grad psi| ds) drho`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::StreamField;
use crate::period::PeriodFunction;
use crate::quad::{gauss_legendre, graded};
use crate::tolerances::Scales;
use crate::topology::{contour_integral, trace_level_curve, ContourOpts, OrbitFamily};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    One,
    Psi,
    Bump,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [TestFunction::One, TestFunction::Psi, TestFunction::Bump];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::One => "1",
            TestFunction::Psi => "psi",
            TestFunction::Bump => "bump",
        }
    }
}

/// The part of a family with `rho` in `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoareaRegion {
    pub family: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoareaResult {
    pub test_fn: TestFunction,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_error: f64,
    pub regions: Vec<CoareaRegion>,
}

/// Families whose periods stay bounded, in full; a family with one
/// unbounded end keeps the half of its range away from that end; families
/// unbounded at both ends are skipped.
pub fn bounded_regions(pfs: &[PeriodFunction]) -> Vec<CoareaRegion> {
    let mut out = Vec::new();
    for pf in pfs {
        let (a, b) = pf.psi_range;
        let lo_unb = pf.lower_evidence.as_ref().is_some_and(|e| e.unbounded);
        let hi_unb = pf.upper_evidence.as_ref().is_some_and(|e| e.unbounded);
        let mid = 0.5 * (a + b);
        match (lo_unb, hi_unb) {
            (false, false) => out.push(CoareaRegion { family: pf.family, lo: a, hi: b }),
            (true, false) => out.push(CoareaRegion { family: pf.family, lo: mid, hi: b }),
            (false, true) => out.push(CoareaRegion { family: pf.family, lo: a, hi: mid }),
            (true, true) => {}
        }
    }
    out
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn test_value(field: &StreamField, f: TestFunction, bump: (Point, f64), p: Point) -> f64 {
    match f {
        TestFunction::One => 1.0,
        TestFunction::Psi => field.psi(p),
        TestFunction::Bump => {
            let d = field.domain.displacement(bump.0, p);
            (-(d[0] * d[0] + d[1] * d[1]) / (bump.1 * bump.1)).exp()
        }
    }
}

/// `int f^2` over the region by cell quadrature on an `n x n` grid: a 3x3
/// Gauss rule on cells whose corners all lie in the region, 16x16 midpoint
/// supersampling on cells the region boundary crosses.
fn region_integral(
    field: &StreamField,
    family: &OrbitFamily,
    region: &CoareaRegion,
    f: &(dyn Fn(Point) -> f64 + Sync),
    n: usize,
) -> Result<f64> {
    let dom = &field.domain;
    let [x0, x1, y0, y1] = dom.bounding_box();
    let (hx, hy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
    let (px, py) = dom.periods();
    let inside = |p: Point| {
        if !dom.contains_with_slack(p, 0.0) {
            return false;
        }
        let v = field.psi(p);
        v > region.lo && v < region.hi
    };
    let m = n + 1;
    let flags: Vec<bool> = (0..m * m)
        .into_par_iter()
        .map(|id| inside([x0 + (id % m) as f64 * hx, y0 + (id / m) as f64 * hy]))
        .collect();
    let mut uf = UnionFind((0..m * m).collect());
    for j in 0..m {
        for i in 0..m {
            let id = i + m * j;
            if !flags[id] {
                continue;
            }
            if i + 1 < m && flags[id + 1] {
                uf.union(id, id + 1);
            }
            if j + 1 < m && flags[id + m] {
                uf.union(id, id + m);
            }
        }
    }
    // Identify the periodic seams.
    if px.is_some() {
        for j in 0..m {
            if flags[m * j] && flags[n + m * j] {
                uf.union(m * j, n + m * j);
            }
        }
    }
    if py.is_some() {
        for i in 0..m {
            if flags[i] && flags[i + m * n] {
                uf.union(i, i + m * n);
            }
        }
    }
    let mid = 0.5 * (region.lo + region.hi);
    let seed = dom.wrap(family.seed_at(field, mid)?);
    let (si, sj) = (((seed[0] - x0) / hx).round() as i64, ((seed[1] - y0) / hy).round() as i64);
    let mut target = None;
    'search: for r in 0..4i64 {
        for dj in -r..=r {
            for di in -r..=r {
                let (i, j) = (si + di, sj + dj);
                if i < 0 || j < 0 || i >= m as i64 || j >= m as i64 {
                    continue;
                }
                let id = i as usize + m * j as usize;
                if flags[id] {
                    target = Some(uf.find(id));
                    break 'search;
                }
            }
        }
    }
    let target = target.ok_or_else(|| Error::Empty("family region not resolved by the co-area grid".into()))?;
    let labels: Vec<bool> = (0..m * m).map(|id| flags[id] && uf.find(id) == target).collect();
    let (gx, gw) = gauss_legendre(3);
    let total: f64 = (0..n * n)
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c % n, c / n);
            let ids = [i + m * j, i + 1 + m * j, i + m * (j + 1), i + 1 + m * (j + 1)];
            let hits = ids.iter().filter(|&&id| labels[id]).count();
            let (cx, cy) = (x0 + i as f64 * hx, y0 + j as f64 * hy);
            if hits == 4 {
                let mut s = 0.0;
                for (a, wa) in gx.iter().zip(&gw) {
                    for (b, wb) in gx.iter().zip(&gw) {
                        let p = [cx + 0.5 * hx * (a + 1.0), cy + 0.5 * hy * (b + 1.0)];
                        s += wa * wb * f(p).powi(2);
                    }
                }
                s * 0.25 * hx * hy
            } else if hits > 0 {
                let k = 16;
                let mut s = 0.0;
                for b in 0..k {
                    for a in 0..k {
                        let p = [cx + (a as f64 + 0.5) * hx / k as f64, cy + (b as f64 + 0.5) * hy / k as f64];
                        if inside(p) {
                            s += f(p).powi(2);
                        }
                    }
                }
                s * hx * hy / (k * k) as f64
            } else {
                0.0
            }
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(total)
}

/// `int_lo^hi oint f^2 / |grad psi| ds drho`, with level nodes clustered at
/// both ends of the range.
fn level_integral(
    field: &StreamField,
    family: &OrbitFamily,
    region: &CoareaRegion,
    f: &(dyn Fn(Point) -> f64 + Sync),
    scales: &Scales,
) -> Result<f64> {
    let mut opts = ContourOpts::from_scales(scales);
    opts.resolution = opts.resolution.min(2e-3);
    let nodes = graded(region.lo, region.hi, 16, 8);
    let parts: Vec<f64> = nodes
        .par_iter()
        .map(|&(rho, w)| -> Result<f64> {
            let seed = family.seed_at(field, rho)?;
            let c = trace_level_curve(field, seed, &opts)?;
            Ok(w * contour_integral(field, &c.points, |p| f(p).powi(2)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.iter().sum())
}

/// Relative co-area mismatch `|LHS - RHS| / LHS` summed over `regions`.
pub fn coarea_check(
    field: &StreamField,
    families: &[OrbitFamily],
    regions: &[CoareaRegion],
    test_fn: TestFunction,
    n: usize,
    scales: &Scales,
) -> Result<CoareaResult> {
    if regions.is_empty() {
        return Err(Error::Empty("no bounded-period region for the co-area check".into()));
    }
    if n < 16 {
        return Err(Error::InvalidParameter { name: "n".into(), reason: "need at least 16 cells".into() });
    }
    let fam = |r: &CoareaRegion| {
        families.get(r.family).ok_or_else(|| Error::InvalidParameter {
            name: "family".into(),
            reason: format!("no family {}", r.family),
        })
    };
    let first = &regions[0];
    let centre = fam(first)?.seed_at(field, 0.5 * (first.lo + first.hi))?;
    let bump = (centre, 0.15 * field.domain.diameter());
    let f = move |p: Point| test_value(field, test_fn, bump, p);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for r in regions {
        let family = fam(r)?;
        lhs += region_integral(field, family, r, &f, n)?;
        rhs += level_integral(field, family, r, &f, scales)?;
    }
    let rel_error = if lhs != 0.0 { (lhs - rhs).abs() / lhs.abs() } else { (lhs - rhs).abs() };
    Ok(CoareaResult { test_fn, lhs, rhs, rel_error, regions: regions.to_vec() })
}
