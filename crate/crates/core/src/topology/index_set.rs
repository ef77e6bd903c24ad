//! Periodic-orbit families and the index set.
//!
//! Families are discovered by walking gradient arcs (curves transverse to
//! the streamlines) out of elliptic points, boundary components and curves
//! of fixed points. Orbits are seeded at evenly spaced levels along each arc
//! and classified; maximal runs of periodic levels become candidate families.
//! Candidates from different arcs are merged only when their orbits at a
//! common level coincide, so equal psi-ranges in different components stay
//! separate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contour::{distance_to_polyline, trace_level_curve, ContourOpts};
use super::fixed_points::{classify_hessian, newton_zero, sym_eigen, CriticalKind, FixedPointScan};
use super::orbit::{trace_orbit, OrbitKind, TraceCaps};
use crate::error::{Error, Result};
use crate::field::StreamField;
use crate::ode::rk4;
use crate::tolerances::Scales;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointSource {
    CriticalValue,
    BoundaryValue,
    /// Located by bisection between periodic and non-periodic levels.
    Refined,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Endpoint {
    pub value: f64,
    pub source: EndpointSource,
    pub critical_kind: Option<CriticalKind>,
    /// A hyperbolic or degenerate fixed point sits on this level.
    pub separatrix: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitFamily {
    pub component_id: usize,
    pub psi_range: (f64, f64),
    pub lower: Endpoint,
    pub upper: Endpoint,
    pub representative_seeds: Vec<Point>,
    /// +1 when orbits run counter-clockwise (or in +x / +y when they wrap).
    pub orientation: i8,
    /// Gradient arcs crossing every orbit of the family once, as
    /// `(point, psi)` lists monotone in psi.
    #[serde(skip)]
    pub transversals: Vec<Vec<(Point, f64)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexSet {
    pub families: Vec<OrbitFamily>,
    pub topology_note: String,
    pub diagnostics: Vec<String>,
}

impl OrbitFamily {
    pub fn contains(&self, rho: f64) -> bool {
        self.psi_range.0 < rho && rho < self.psi_range.1
    }

    pub fn width(&self) -> f64 {
        self.psi_range.1 - self.psi_range.0
    }

    /// A point on the family's orbit at level `rho`.
    pub fn seed_at(&self, field: &StreamField, rho: f64) -> Result<Point> {
        for t in &self.transversals {
            let Some(p) = point_on_arc(t, rho) else { continue };
            return Ok(newton_to_level(field, p, rho));
        }
        Err(Error::OutsideRange(rho, rho))
    }
}

fn point_on_arc(arc: &[(Point, f64)], rho: f64) -> Option<Point> {
    for w in arc.windows(2) {
        let ((a, va), (b, vb)) = (w[0], w[1]);
        let (lo, hi) = if va <= vb { (va, vb) } else { (vb, va) };
        if lo <= rho && rho <= hi {
            let t = if vb != va { (rho - va) / (vb - va) } else { 0.5 };
            return Some([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    None
}

pub(crate) fn newton_to_level(field: &StreamField, mut p: Point, rho: f64) -> Point {
    for _ in 0..50 {
        let (v, g) = field.psi_grad(p);
        let g2 = g[0] * g[0] + g[1] * g[1];
        if g2 == 0.0 || v == rho {
            break;
        }
        let d = (rho - v) / g2;
        p = [p[0] + d * g[0], p[1] + d * g[1]];
        if (d * g2.sqrt()).abs() < 1e-15 * (1.0 + p[0].abs() + p[1].abs()) {
            break;
        }
    }
    p
}

struct Arc {
    points: Vec<(Point, f64)>,
    start: Endpoint,
    end: Endpoint,
}

fn endpoint(value: f64, source: EndpointSource, kind: Option<CriticalKind>) -> Endpoint {
    Endpoint { value, source, critical_kind: kind, separatrix: false }
}

struct Walker<'a> {
    field: &'a StreamField,
    fps: &'a FixedPointScan,
    scales: &'a Scales,
    ds_max: f64,
    stop: f64,
}

impl Walker<'_> {
    fn critical_end(&self, q: Point) -> Endpoint {
        let near = self
            .fps
            .points
            .iter()
            .filter(|c| self.field.domain.distance(c.location, q) < 2.0 * self.fps.cell_size)
            .min_by(|a, b| {
                let da = self.field.domain.distance(a.location, q);
                let db = self.field.domain.distance(b.location, q);
                da.total_cmp(&db)
            });
        let kind = match near {
            Some(c) => c.classification,
            None => classify_hessian(self.field.hessian(q), &self.scales.tol).0,
        };
        endpoint(self.field.psi(q), EndpointSource::CriticalValue, Some(kind))
    }

    /// Follow `sign * grad psi / |grad psi|` from `p0` until a fixed point,
    /// the boundary, or the step cap.
    fn walk(&self, origin: (Point, f64), p0: Point, sign: f64, start: Endpoint) -> Arc {
        let f = self.field;
        let dir = |p: Point| {
            let g = f.grad(p);
            let n = g[0].hypot(g[1]).max(f64::MIN_POSITIVE);
            [sign * g[0] / n, sign * g[1] / n]
        };
        let mut pts = vec![origin, (p0, f.psi(p0))];
        let mut p = p0;
        let mut psi_p = f.psi(p0);
        let min_step = 1e-11 * self.scales.diameter;
        for _ in 0..50_000 {
            let (_, g) = f.psi_grad(p);
            let gn = g[0].hypot(g[1]);
            let h = f.hessian(p);
            let ([l1, l2], _) = sym_eigen(h);
            let hn = l1.abs().max(l2.abs());
            let ds = if hn > 0.0 { self.ds_max.min(0.5 * gn / hn) } else { self.ds_max };
            if gn < self.stop || ds < min_step {
                return self.snap(pts, p, start);
            }
            let q = rk4(&dir, p, ds);
            if !f.domain.contains(q) {
                let e = f.domain.exit_point(p, q);
                let v = f.psi(e);
                if sign * (v - psi_p) > 0.0 {
                    pts.push((e, v));
                }
                let end = if f.grad(e)[0].hypot(f.grad(e)[1]) < self.stop {
                    self.critical_end(e)
                } else {
                    endpoint(v, EndpointSource::BoundaryValue, None)
                };
                return Arc { points: pts, start, end };
            }
            let psi_q = f.psi(q);
            if sign * (psi_q - psi_p) <= 0.0 {
                return self.snap(pts, p, start);
            }
            pts.push((q, psi_q));
            p = q;
            psi_p = psi_q;
        }
        let end = endpoint(psi_p, EndpointSource::Refined, None);
        Arc { points: pts, start, end }
    }

    fn snap(&self, mut pts: Vec<(Point, f64)>, p: Point, start: Endpoint) -> Arc {
        let last = pts.last().map(|x| x.1).unwrap_or(f64::NAN);
        let rising = pts.len() >= 2 && pts[pts.len() - 1].1 > pts[0].1;
        match newton_zero(self.field, p, 4.0 * self.ds_max, self.scales.tol.newton_tol) {
            Some(q) if self.field.domain.contains(q) => {
                let v = self.field.psi(q);
                if (rising && v >= last) || (!rising && v <= last) {
                    pts.push((q, v));
                }
                let mut end = self.critical_end(q);
                end.value = v;
                Arc { points: pts, start, end }
            }
            _ => Arc { points: pts, start, end: endpoint(last, EndpointSource::Refined, None) },
        }
    }
}

struct Candidate {
    lower: Endpoint,
    upper: Endpoint,
    transversal: Vec<(Point, f64)>,
    seeds: Vec<Point>,
}

/// Build the index set: one open psi-interval per connected component of
/// the periodic region.
pub fn build_index_set(
    field: &StreamField,
    fps: &FixedPointScan,
    resolution: usize,
    scales: &Scales,
) -> Result<IndexSet> {
    if resolution < 64 {
        return Err(Error::InvalidParameter { name: "resolution".into(), reason: "need at least 64 levels".into() });
    }
    let mut diagnostics = Vec::new();
    let osc = scales.oscillation;
    let note = "each family is one open interval of a disjoint union; equal ranges in different components are not merged"
        .to_string();
    if osc == 0.0 {
        diagnostics.push("stream function is constant: no periodic orbits".into());
        return Ok(IndexSet { families: Vec::new(), topology_note: note, diagnostics });
    }
    let dom = &field.domain;
    let cell = fps.cell_size;
    let walker = Walker {
        field,
        fps,
        scales,
        ds_max: 0.25 * cell,
        stop: 1e-7 * osc / scales.diameter,
    };
    let eps = 1e-3 * cell;

    // Arc starts: (origin point, first step point, sign, start endpoint).
    let mut starts: Vec<(Point, Point, f64, Endpoint)> = Vec::new();
    for c in fps.points.iter().filter(|c| !c.on_boundary) {
        let h = field.hessian(c.location);
        let ([l1, l2], v) = sym_eigen(h);
        match c.classification {
            CriticalKind::Elliptic => {
                let p0 = [c.location[0] + eps * v[0], c.location[1] + eps * v[1]];
                let sign = if l1 + l2 < 0.0 { -1.0 } else { 1.0 };
                starts.push((c.location, p0, sign, endpoint(c.psi, EndpointSource::CriticalValue, Some(c.classification))));
            }
            CriticalKind::Degenerate if c.non_isolated => {}
            _ => {}
        }
    }
    // Curves of fixed points: a couple of representatives per cluster, both sides.
    let curve: Vec<&super::fixed_points::CriticalPoint> = fps
        .points
        .iter()
        .filter(|c| c.non_isolated && !c.on_boundary)
        .collect();
    let mut cluster_of = vec![usize::MAX; curve.len()];
    let mut n_clusters = 0;
    for i in 0..curve.len() {
        if cluster_of[i] != usize::MAX {
            continue;
        }
        cluster_of[i] = n_clusters;
        let mut stack = vec![i];
        while let Some(a) = stack.pop() {
            for b in 0..curve.len() {
                if cluster_of[b] == usize::MAX && dom.distance(curve[a].location, curve[b].location) < 2.5 * cell {
                    cluster_of[b] = n_clusters;
                    stack.push(b);
                }
            }
        }
        n_clusters += 1;
    }
    for k in 0..n_clusters {
        let members: Vec<usize> = (0..curve.len()).filter(|&i| cluster_of[i] == k).collect();
        for &i in [members[0], members[members.len() / 2]].iter().take(if members.len() > 1 { 2 } else { 1 }) {
            let c = curve[i];
            let ([l1, l2], v2) = sym_eigen(field.hessian(c.location));
            let n = if l2.abs() >= l1.abs() { v2 } else { [-v2[1], v2[0]] };
            for s in [1.0, -1.0] {
                let mut p0 = c.location;
                let mut e = eps;
                while e <= cell {
                    p0 = [c.location[0] + s * e * n[0], c.location[1] + s * e * n[1]];
                    let g = field.grad(p0);
                    if g[0].hypot(g[1]) > 10.0 * walker.stop {
                        break;
                    }
                    e *= 4.0;
                }
                if !dom.contains(p0) {
                    continue;
                }
                let g = field.grad(p0);
                let sign = (g[0] * n[0] + g[1] * n[1]).signum() * s;
                if sign != 0.0 {
                    starts.push((c.location, p0, sign, endpoint(c.psi, EndpointSource::CriticalValue, Some(c.classification))));
                }
            }
        }
    }
    for comp in dom.boundary_components() {
        for (b, nout) in dom.boundary_samples(comp.index, 4) {
            let nin = [-nout[0], -nout[1]];
            let mut e = eps;
            let mut p0 = b;
            while e <= cell {
                p0 = [b[0] + e * nin[0], b[1] + e * nin[1]];
                let g = field.grad(p0);
                if g[0].hypot(g[1]) > 10.0 * walker.stop {
                    break;
                }
                e *= 4.0;
            }
            let g = field.grad(p0);
            let sign = (g[0] * nin[0] + g[1] * nin[1]).signum();
            if sign != 0.0 {
                starts.push((b, p0, sign, endpoint(field.psi(b), EndpointSource::BoundaryValue, None)));
            }
        }
    }
    if starts.is_empty() {
        // No landmarks at all: start from the steepest lattice point, both ways.
        if let Some(p) = field.lattice_points(32).into_iter().max_by(|a, b| {
            let ga = field.grad(*a);
            let gb = field.grad(*b);
            ga[0].hypot(ga[1]).total_cmp(&gb[0].hypot(gb[1]))
        }) {
            for s in [1.0, -1.0] {
                starts.push((p, p, s, endpoint(field.psi(p), EndpointSource::Refined, None)));
            }
        }
    }

    let arcs: Vec<Arc> = starts
        .par_iter()
        .map(|(o, p0, s, e)| walker.walk((*o, field.psi(*o)), *p0, *s, e.clone()))
        .collect();

    let mut caps = TraceCaps::from_scales(scales);
    caps.rtol = scales.tol.classify_rtol;
    caps.record_polyline = false;
    caps.saddle_zones = fps.saddle_zones(0.5 * cell);
    let classify = |p: Point| -> bool {
        matches!(trace_orbit(field, p, &caps, scales), Ok(t) if t.kind == OrbitKind::Periodic)
    };

    let mut candidates: Vec<Candidate> = Vec::new();
    for arc in &arcs {
        let (va, vb) = (arc.start.value, arc.end.value);
        if !(va.is_finite() && vb.is_finite()) || (vb - va).abs() < 1e-6 * osc {
            continue;
        }
        let levels: Vec<f64> = (0..resolution).map(|j| va + (vb - va) * (j as f64 + 0.5) / resolution as f64).collect();
        let seeds: Vec<Option<Point>> = levels
            .iter()
            .map(|&r| point_on_arc(&arc.points, r).map(|p| newton_to_level(field, p, r)))
            .collect();
        let periodic: Vec<bool> = seeds.par_iter().map(|s| s.is_some_and(classify)).collect();
        let mut j = 0;
        while j < resolution {
            if !periodic[j] {
                j += 1;
                continue;
            }
            let j0 = j;
            while j < resolution && periodic[j] {
                j += 1;
            }
            let j1 = j - 1;
            let step = (vb - va) / resolution as f64;
            let near = if j0 == 0 {
                arc.start.clone()
            } else {
                interior_break(field, fps, levels[j0], levels[j0 - 1], step, arc, &classify)
            };
            let far = if j1 == resolution - 1 {
                arc.end.clone()
            } else {
                interior_break(field, fps, levels[j1], levels[j1 + 1], step, arc, &classify)
            };
            let (lower, upper) = if near.value <= far.value { (near, far) } else { (far, near) };
            if upper.value - lower.value <= 0.0 {
                continue;
            }
            let picks = [j0, (j0 + j1) / 2, j1];
            let mut reps: Vec<Point> = Vec::new();
            for &k in &picks {
                if let Some(p) = seeds[k] {
                    if !reps.contains(&p) {
                        reps.push(dom.wrap(p));
                    }
                }
            }
            candidates.push(Candidate { lower, upper, transversal: arc.points.clone(), seeds: reps });
        }
    }

    // Merge candidates whose orbits coincide at a shared level.
    let copts = ContourOpts::from_scales(scales);
    let mut families: Vec<OrbitFamily> = Vec::new();
    for c in candidates {
        let fam = OrbitFamily {
            component_id: 0,
            psi_range: (c.lower.value, c.upper.value),
            lower: c.lower,
            upper: c.upper,
            representative_seeds: c.seeds,
            orientation: 0,
            transversals: vec![c.transversal],
        };
        let mut merged = false;
        for f in families.iter_mut() {
            let lo = f.psi_range.0.max(fam.psi_range.0);
            let hi = f.psi_range.1.min(fam.psi_range.1);
            if hi <= lo {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            let (Ok(a), Ok(b)) = (f.seed_at(field, mid), fam.seed_at(field, mid)) else { continue };
            let Ok(curve) = trace_level_curve(field, a, &copts) else { continue };
            if distance_to_polyline(field, b, &curve.points) < 1e-4 * scales.diameter {
                if fam.psi_range.0 < f.psi_range.0 {
                    f.lower = fam.lower.clone();
                    f.psi_range.0 = fam.psi_range.0;
                }
                if fam.psi_range.1 > f.psi_range.1 {
                    f.upper = fam.upper.clone();
                    f.psi_range.1 = fam.psi_range.1;
                }
                f.transversals.extend(fam.transversals.iter().cloned());
                merged = true;
                break;
            }
        }
        if !merged {
            families.push(fam);
        }
    }

    let crit_tol = 1e-7 * osc;
    for f in families.iter_mut() {
        for e in [&mut f.lower, &mut f.upper] {
            e.separatrix = fps.points.iter().any(|c| {
                c.classification != CriticalKind::Elliptic && (c.psi - e.value).abs() <= crit_tol
            });
            if e.critical_kind == Some(CriticalKind::Degenerate) || (e.separatrix && e.source != EndpointSource::CriticalValue) {
                if let Some(c) = fps.points.iter().find(|c| {
                    c.classification == CriticalKind::Degenerate && (c.psi - e.value).abs() <= crit_tol
                }) {
                    e.critical_kind = Some(c.classification);
                }
            }
        }
        let mid = 0.5 * (f.psi_range.0 + f.psi_range.1);
        f.orientation = f.seed_at(field, mid).ok().and_then(|s| orientation(field, s, &copts)).unwrap_or(0);
        if f.lower.critical_kind == Some(CriticalKind::Degenerate) || f.upper.critical_kind == Some(CriticalKind::Degenerate) {
            let seed = f.representative_seeds.first().copied().unwrap_or([f64::NAN; 2]);
            diagnostics.push(format!(
                "family ({:.6}, {:.6}) seeded at ({:.4}, {:.4}) ends on a degenerate critical value",
                f.psi_range.0, f.psi_range.1, seed[0], seed[1]
            ));
        }
    }
    families.sort_by(|a, b| {
        a.psi_range
            .0
            .total_cmp(&b.psi_range.0)
            .then(a.psi_range.1.total_cmp(&b.psi_range.1))
            .then_with(|| {
                let sa = a.representative_seeds.first().copied().unwrap_or([0.0; 2]);
                let sb = b.representative_seeds.first().copied().unwrap_or([0.0; 2]);
                sa[0].total_cmp(&sb[0]).then(sa[1].total_cmp(&sb[1]))
            })
    });
    for (i, f) in families.iter_mut().enumerate() {
        f.component_id = i;
    }
    if families.is_empty() {
        diagnostics.push("no periodic orbits found".into());
    }
    // Fixed-point diagnostics are reported once here for the run report.
    if !fps.unresolved_cells.is_empty() {
        diagnostics.push(format!("{} scan cells with unresolved Newton iterations", fps.unresolved_cells.len()));
    }
    Ok(IndexSet { families, topology_note: note, diagnostics })
}

/// Endpoint between a periodic level and a non-periodic neighbour: prefer a
/// critical value of a non-elliptic fixed point nearby, else bisect.
fn interior_break(
    field: &StreamField,
    fps: &FixedPointScan,
    periodic_level: f64,
    other_level: f64,
    step: f64,
    arc: &Arc,
    classify: &(impl Fn(Point) -> bool + Sync),
) -> Endpoint {
    let dir = (other_level - periodic_level).signum();
    let reach = (other_level - periodic_level).abs() + 2.0 * step.abs();
    let best = fps
        .points
        .iter()
        .filter(|c| c.classification != CriticalKind::Elliptic)
        .filter(|c| {
            let d = (c.psi - periodic_level) * dir;
            d >= 0.0 && d <= reach
        })
        .min_by(|a, b| (a.psi - periodic_level).abs().total_cmp(&(b.psi - periodic_level).abs()));
    if let Some(c) = best {
        return endpoint(c.psi, EndpointSource::CriticalValue, Some(c.classification));
    }
    let (mut good, mut bad) = (periodic_level, other_level);
    for _ in 0..30 {
        let mid = 0.5 * (good + bad);
        let ok = point_on_arc(&arc.points, mid).map(|p| newton_to_level(field, p, mid)).is_some_and(classify);
        if ok {
            good = mid;
        } else {
            bad = mid;
        }
    }
    endpoint(good, EndpointSource::Refined, None)
}

fn orientation(field: &StreamField, seed: Point, opts: &ContourOpts) -> Option<i8> {
    let c = trace_level_curve(field, seed, opts).ok()?;
    let first = c.points[0];
    let last = *c.points.last()?;
    let shift = [last[0] - first[0], last[1] - first[1]];
    if shift[0].abs() > 1e-6 * field.domain.diameter() {
        return Some(shift[0].signum() as i8);
    }
    if shift[1].abs() > 1e-6 * field.domain.diameter() {
        return Some(shift[1].signum() as i8);
    }
    let area: f64 = c.points.windows(2).map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1]).sum();
    Some(if area >= 0.0 { 1 } else { -1 })
}
