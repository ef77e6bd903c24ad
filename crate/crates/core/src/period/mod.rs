//! The period function of each orbit family, computed twice: by first
//! return of the flow and by the line integral `oint ds / |grad psi|`.

pub mod pchip;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::StreamField;
use crate::tolerances::Scales;
use crate::topology::contour::{contour_period, trace_level_curve, ContourOpts};
use crate::topology::orbit::{trace_orbit, OrbitKind, TraceCaps};
use crate::topology::OrbitFamily;
use crate::Point;
pub use pchip::Pchip;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodMethod {
    OdeReturn,
    ContourIntegral,
}

impl PeriodMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            PeriodMethod::OdeReturn => "ode_return",
            PeriodMethod::ContourIntegral => "contour_integral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodSample {
    pub rho: f64,
    #[serde(rename = "T")]
    pub period: f64,
    pub method: PeriodMethod,
    pub err_est: f64,
}

/// Both period estimates at one level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelPeriods {
    pub rho: f64,
    pub seed: Point,
    pub ode: PeriodSample,
    pub contour: PeriodSample,
    pub arclength: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointEvidence {
    /// Distance in psi from the endpoint, T and orbit length, innermost last.
    pub distance: Vec<f64>,
    pub period: Vec<f64>,
    pub arclength: Vec<f64>,
    pub separatrix: bool,
    pub unbounded: bool,
    /// Which test fired: `cap_growth` or `separatrix_growth`.
    pub criterion: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodFunction {
    pub family: usize,
    pub psi_range: (f64, f64),
    pub levels: Vec<LevelPeriods>,
    #[serde(rename = "T_lo")]
    pub t_lo: f64,
    /// `None` when unbounded.
    #[serde(rename = "T_hi")]
    pub t_hi: Option<f64>,
    pub unbounded: bool,
    pub median_period: f64,
    pub lower_evidence: Option<EndpointEvidence>,
    pub upper_evidence: Option<EndpointEvidence>,
    pub interpolant: Pchip,
    pub notes: Vec<String>,
}

fn ode_once(field: &StreamField, seed: Point, rtol: f64, scales: &Scales) -> Result<(f64, f64)> {
    let mut caps = TraceCaps::from_scales(scales);
    caps.rtol = rtol;
    caps.record_polyline = false;
    let t = trace_orbit(field, seed, &caps, scales)?;
    if t.kind != OrbitKind::Periodic {
        return Err(Error::NotPeriodic(t.diagnostic.unwrap_or_default()));
    }
    Ok((t.time, t.arclength))
}

/// First-return time to the section through `seed`; `err_est` compares
/// against a run with a 100x looser tolerance.
pub fn period_ode(field: &StreamField, seed: Point, scales: &Scales) -> Result<PeriodSample> {
    period_ode_with(field, seed, scales.tol.period_rtol, scales).map(|(s, _)| s)
}

fn period_ode_with(field: &StreamField, seed: Point, rtol: f64, scales: &Scales) -> Result<(PeriodSample, f64)> {
    let (t, len) = ode_once(field, seed, rtol, scales)?;
    let (t2, _) = ode_once(field, seed, 100.0 * rtol, scales)?;
    Ok((
        PeriodSample { rho: field.psi(seed), period: t, method: PeriodMethod::OdeReturn, err_est: (t - t2).abs() },
        len,
    ))
}

/// `sum |segment| / |grad psi(midpoint)|` over a closed polyline; `err_est`
/// is the change when every other vertex is dropped.
pub fn period_contour(field: &StreamField, polyline: &[Point], scales: &Scales) -> Result<PeriodSample> {
    let first = *polyline.first().ok_or_else(|| Error::Empty("polyline".into()))?;
    let last = *polyline.last().unwrap_or(&first);
    if field.domain.distance(first, last) > scales.closure_tol() {
        return Err(Error::NotPeriodic("polyline is not closed".into()));
    }
    let rho = field.psi(first);
    let drift = polyline.iter().map(|&p| (field.psi(p) - rho).abs()).fold(0.0, f64::max);
    if drift > 100.0 * scales.level_tol() {
        return Err(Error::NotPeriodic(format!("psi varies by {drift:.3e} along the polyline")));
    }
    let (fine, coarse) = contour_period(field, polyline, scales.fixed_point_guard())?;
    Ok(PeriodSample { rho, period: fine, method: PeriodMethod::ContourIntegral, err_est: (fine - coarse).abs() })
}

fn contour_at(field: &StreamField, seed: Point, scales: &Scales, refine: f64) -> Result<PeriodSample> {
    let mut opts = ContourOpts::from_scales(scales);
    opts.resolution /= refine;
    opts.ds_max /= refine;
    let c = trace_level_curve(field, seed, &opts)?;
    period_contour(field, &c.points, scales)
}

/// Bounded by ten times the larger error estimate, and never looser than
/// `1e-5` relative.
fn agree(a: &PeriodSample, b: &PeriodSample) -> bool {
    let tol = (10.0 * a.err_est.max(b.err_est)).max(1e-9 * a.period.abs());
    let d = (a.period - b.period).abs();
    d <= tol && d <= AGREEMENT_RTOL * a.period.abs()
}

fn level(field: &StreamField, family: &OrbitFamily, rho: f64, scales: &Scales) -> Result<LevelPeriods> {
    let seed = family.seed_at(field, rho)?;
    let rho = field.psi(seed);
    let (mut ode, mut arclength) = period_ode_with(field, seed, scales.tol.period_rtol, scales)?;
    let mut contour = contour_at(field, seed, scales, 1.0)?;
    let mut flagged = false;
    if !agree(&ode, &contour) {
        let (o, l) = period_ode_with(field, seed, 0.1 * scales.tol.period_rtol, scales)?;
        ode = o;
        arclength = l;
        contour = contour_at(field, seed, scales, 4.0)?;
        flagged = !agree(&ode, &contour);
    }
    Ok(LevelPeriods { rho, seed, ode, contour, arclength, flagged })
}

fn chebyshev(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (a + b) + 0.5 * (b - a) * (std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos())
        .collect()
}

const MAX_LEVELS: usize = 256;
/// Largest relative ODE/contour mismatch of an unflagged sample.
pub const AGREEMENT_RTOL: f64 = 1e-5;

const ENDPOINT_DECADES: i32 = 9;

/// Sample T over the family's range at Chebyshev levels plus geometric
/// refinements toward both endpoints, then bisect until neighbouring
/// periods differ by less than 5% or the gap reaches the refinement floor.
pub fn sample_period_function(
    field: &StreamField,
    family: &OrbitFamily,
    n: usize,
    scales: &Scales,
) -> Result<PeriodFunction> {
    if n < 16 {
        return Err(Error::InvalidParameter { name: "n".into(), reason: "need at least 16 samples".into() });
    }
    let (a, b) = family.psi_range;
    let w = b - a;
    let mut rhos = chebyshev(a, b, n);
    for m in 1..=ENDPOINT_DECADES {
        let d = w * 10f64.powi(-m);
        rhos.push(a + d);
        rhos.push(b - d);
    }
    rhos.sort_by(f64::total_cmp);
    rhos.dedup();
    let near_end = |r: f64| (r - a).min(b - r) < 0.5 * w * 10f64.powi(-1);
    let results: Vec<(f64, Result<LevelPeriods>)> =
        rhos.par_iter().map(|&r| (r, level(field, family, r, scales))).collect();
    let mut levels = Vec::with_capacity(results.len());
    let mut notes = Vec::new();
    // Outermost failing distance from each end, for refinement levels that
    // could not be traced (typically: the period exceeds the time cap).
    let mut failed: [Option<f64>; 2] = [None, None];
    for (r, res) in results {
        match res {
            Ok(l) => levels.push(l),
            Err(e) if near_end(r) => {
                let side = usize::from(b - r < r - a);
                let d = (r - a).min(b - r);
                failed[side] = Some(failed[side].map_or(d, |x: f64| x.max(d)));
                notes.push(format!("level {r:.12e} dropped: {e}"));
            }
            Err(e) => return Err(e),
        }
    }
    if levels.len() < 2 {
        return Err(Error::Empty("fewer than two period samples".into()));
    }

    loop {
        levels.sort_by(|x, y| x.rho.total_cmp(&y.rho));
        if levels.len() >= MAX_LEVELS {
            break;
        }
        let mut inserts = Vec::new();
        for pair in levels.windows(2) {
            let (t0, t1) = (pair[0].ode.period, pair[1].ode.period);
            if (t1 - t0).abs() <= 0.05 * t0.min(t1) {
                continue;
            }
            let mid = 0.5 * (pair[0].rho + pair[1].rho);
            let floor = (1e-7 * w).max(0.1 * (mid - a).min(b - mid));
            if pair[1].rho - pair[0].rho > floor {
                inserts.push(mid);
            }
        }
        if inserts.is_empty() {
            break;
        }
        inserts.truncate(MAX_LEVELS - levels.len());
        let extra: Vec<LevelPeriods> = inserts
            .par_iter()
            .map(|&r| level(field, family, r, scales))
            .collect::<Result<Vec<_>>>()?;
        levels.extend(extra);
    }
    levels.sort_by(|x, y| x.rho.total_cmp(&y.rho));
    let flagged = levels.iter().filter(|l| l.flagged).count();
    if flagged > 0 {
        notes.push(format!("{flagged} samples failed the ODE/contour cross-check after refinement"));
    }

    let mut ts: Vec<f64> = levels.iter().map(|l| l.ode.period).collect();
    ts.sort_by(f64::total_cmp);
    let median = ts[ts.len() / 2];

    let lower_evidence = endpoint_growth(field, family, a, 1.0, median, family.lower.separatrix, failed[0], scales, &levels);
    let upper_evidence = endpoint_growth(field, family, b, -1.0, median, family.upper.separatrix, failed[1], scales, &levels);
    let unbounded = lower_evidence.unbounded || upper_evidence.unbounded;

    let (t_lo, t_hi_bounded) = range_with_margin(&levels);
    let interpolant = Pchip::new(levels.iter().map(|l| l.rho).collect(), levels.iter().map(|l| l.ode.period).collect());
    Ok(PeriodFunction {
        family: family.component_id,
        psi_range: family.psi_range,
        levels,
        t_lo,
        t_hi: if unbounded { None } else { Some(t_hi_bounded) },
        unbounded,
        median_period: median,
        lower_evidence: Some(lower_evidence),
        upper_evidence: Some(upper_evidence),
        interpolant,
        notes,
    })
}

/// Extreme sampled periods widened by the local spread: at an end sample
/// by the jump to its neighbour, in the interior by twice the distance to
/// the vertex of the parabola through the three nearest samples.
fn range_with_margin(levels: &[LevelPeriods]) -> (f64, f64) {
    let t: Vec<f64> = levels.iter().map(|l| l.ode.period).collect();
    let r: Vec<f64> = levels.iter().map(|l| l.rho).collect();
    let n = t.len();
    let margin = |i: usize| -> f64 {
        if n < 2 {
            return 0.0;
        }
        if i == 0 {
            return (t[0] - t[1]).abs();
        }
        if i == n - 1 {
            return (t[n - 1] - t[n - 2]).abs();
        }
        let (x0, x1, x2) = (r[i - 1], r[i], r[i + 1]);
        let (y0, y1, y2) = (t[i - 1], t[i], t[i + 1]);
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let c2 = (d12 - d01) / (x2 - x0);
        if c2 == 0.0 {
            return 0.0;
        }
        let c1 = d01 - c2 * (x0 + x1);
        let xv = -c1 / (2.0 * c2);
        let yv = y0 + d01 * (xv - x0) + c2 * (xv - x0) * (xv - x1);
        2.0 * (yv - y1).abs()
    };
    let imin = (0..n).min_by(|&i, &j| t[i].total_cmp(&t[j])).unwrap_or(0);
    let imax = (0..n).max_by(|&i, &j| t[i].total_cmp(&t[j])).unwrap_or(0);
    ((t[imin] - margin(imin)).max(0.0), t[imax] + margin(imax))
}

/// Push two further decades toward an endpoint, past the innermost traced
/// level, and test for divergence. Where the return-time trace exceeds the
/// time cap the contour period (no time cap) is used instead.
#[allow(clippy::too_many_arguments)]
fn endpoint_growth(
    field: &StreamField,
    family: &OrbitFamily,
    end: f64,
    inward: f64,
    median: f64,
    separatrix: bool,
    failed_at: Option<f64>,
    scales: &Scales,
    levels: &[LevelPeriods],
) -> EndpointEvidence {
    let innermost = levels
        .iter()
        .min_by(|x, y| (x.rho - end).abs().total_cmp(&(y.rho - end).abs()))
        .expect("levels are non-empty");
    let d0 = (innermost.rho - end).abs();
    let mut distance = vec![d0];
    let mut period = vec![innermost.ode.period];
    let mut arclength = vec![innermost.arclength];
    let opts = ContourOpts::from_scales(scales);
    for m in 1..=2 {
        let d = d0 * 10f64.powi(-m);
        let r = end + inward * d;
        let Ok(seed) = family.seed_at(field, r) else { break };
        let got = ode_once(field, seed, scales.tol.period_rtol, scales).or_else(|_| {
            let c = trace_level_curve(field, seed, &opts)?;
            let (t, _) = contour_period(field, &c.points, scales.fixed_point_guard())?;
            Ok::<_, Error>((t, c.length))
        });
        match got {
            Ok((t, l)) => {
                distance.push(d);
                period.push(t);
                arclength.push(l);
            }
            Err(_) => break,
        }
    }
    let mut criterion = None;
    if period.len() == 3 {
        let g1 = period[1] / period[0];
        let g2 = period[2] / period[1];
        let grow = scales.tol.unbounded_growth;
        let above_cap = period[0] > scales.tol.unbounded_cap_factor * median || failed_at.is_some();
        if above_cap && g1 >= grow && g2 >= grow {
            criterion = Some("cap_growth".to_string());
        } else if separatrix && g1 >= 1.05 && g2 >= 1.05 {
            criterion = Some("separatrix_growth".to_string());
        }
    }
    EndpointEvidence { distance, period, arclength, separatrix, unbounded: criterion.is_some(), criterion }
}

impl PeriodFunction {
    /// Interpolated period at `rho`.
    pub fn period_at(&self, rho: f64) -> f64 {
        self.interpolant.eval(rho)
    }

    /// `T_hi`, or infinity when unbounded.
    pub fn t_hi_or_inf(&self) -> f64 {
        self.t_hi.unwrap_or(f64::INFINITY)
    }

    pub fn flagged_count(&self) -> usize {
        self.levels.iter().filter(|l| l.flagged).count()
    }

    /// Both methods per level, as (rho, T, method, err_est) rows.
    pub fn samples(&self) -> Vec<PeriodSample> {
        self.levels.iter().flat_map(|l| [l.ode, l.contour]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("family,rho,T,method,err_est\n");
        for p in self.samples() {
            s.push_str(&format!("{},{:.17e},{:.17e},{},{:.6e}\n", self.family, p.rho, p.period, p.method.as_str(), p.err_est));
        }
        s
    }

    /// A period function with known range, for exercising the spectrum
    /// stage without a flow: `T` rises linearly from `t_lo` to `t_hi` over
    /// psi in (0, 1), or like `t_lo / (1 - psi)` when `t_hi` is `None`.
    pub fn synthetic(family: usize, t_lo: f64, t_hi: Option<f64>) -> Self {
        let xs: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
        let f = |x: f64| match t_hi {
            Some(h) => t_lo + (h - t_lo) * x,
            None => t_lo.max(1e-300) / (1.0 - x).max(1e-9),
        };
        let levels: Vec<LevelPeriods> = xs
            .iter()
            .map(|&x| {
                let s = PeriodSample { rho: x, period: f(x), method: PeriodMethod::OdeReturn, err_est: 0.0 };
                LevelPeriods {
                    rho: x,
                    seed: [0.0, 0.0],
                    ode: s,
                    contour: PeriodSample { method: PeriodMethod::ContourIntegral, ..s },
                    arclength: 0.0,
                    flagged: false,
                }
            })
            .collect();
        let ev = |unbounded: bool| EndpointEvidence {
            distance: vec![],
            period: vec![],
            arclength: vec![],
            separatrix: false,
            unbounded,
            criterion: unbounded.then(|| "synthetic".to_string()),
        };
        Self {
            family,
            psi_range: (0.0, 1.0),
            interpolant: Pchip::new(xs.clone(), xs.iter().map(|&x| f(x)).collect()),
            levels,
            t_lo,
            t_hi,
            unbounded: t_hi.is_none(),
            median_period: f(0.5),
            lower_evidence: Some(ev(false)),
            upper_evidence: Some(ev(t_hi.is_none())),
            notes: vec!["synthetic".into()],
        }
    }
}

/// `int T(rho) / 2 pi d rho` over `[lo, hi]` on the interpolant.
pub fn mu_measure(pf: &PeriodFunction, lo: f64, hi: f64) -> Result<f64> {
    let (a, b) = pf.psi_range;
    let slack = 1e-12 * (b - a).abs().max(1.0);
    if lo < a - slack || hi > b + slack {
        return Err(Error::OutsideRange(lo, hi));
    }
    if hi <= lo {
        return Ok(0.0);
    }
    Ok(pf.interpolant.integral(lo.max(a), hi.min(b)) / std::f64::consts::TAU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_builtin_flow;
    use crate::tolerances::Tolerances;
    use std::collections::BTreeMap;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn ode_examples() {
        let tol = Tolerances::default();
        let f = make_builtin_flow("rigid", &BTreeMap::new()).unwrap();
        let s = f.scales(&tol);
        let p = period_ode(&f, [0.3, 0.2], &s).unwrap();
        assert!((p.period - TAU).abs() < 1e-8 * TAU);
        let f = make_builtin_flow("radial_cos", &BTreeMap::new()).unwrap();
        let s = f.scales(&tol);
        let p = period_ode(&f, [PI / 2.0, 0.0], &s).unwrap();
        assert!((p.period / (PI * PI) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn synthetic_measure_is_additive() {
        let pf = PeriodFunction::synthetic(0, 2.0, Some(4.0));
        let whole = mu_measure(&pf, 0.0, 1.0).unwrap();
        let parts = mu_measure(&pf, 0.0, 0.37).unwrap() + mu_measure(&pf, 0.37, 1.0).unwrap();
        assert!((whole - parts).abs() < 1e-14);
        assert!((whole - 3.0 / TAU).abs() < 1e-13);
        assert_eq!(mu_measure(&pf, 0.5, 0.5).unwrap(), 0.0);
        assert!(mu_measure(&pf, -0.5, 0.5).is_err());
    }
}
