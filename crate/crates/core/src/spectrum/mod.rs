//! The essential spectrum `i * closure{2 pi k / T(rho)}` assembled from
//! period data, its gaps, and the membership test via the measure `mu`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::period::{mu_measure, PeriodFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    FullLine,
    Lattice { step: f64 },
    Bands,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Contributor {
    pub family: usize,
    pub k: i64,
}

/// Closed interval `[lo, hi]` of the imaginary coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub contributors: Vec<Contributor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyPeriods {
    pub family: usize,
    #[serde(rename = "T_lo")]
    pub t_lo: f64,
    /// `None` when unbounded.
    #[serde(rename = "T_hi")]
    pub t_hi: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSet {
    pub shape: Shape,
    pub window: f64,
    /// Sorted, pairwise disjoint, symmetric, within `[-window, window]`.
    pub bands: Vec<Band>,
    pub families: Vec<FamilyPeriods>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    pub gaps: Vec<Gap>,
    pub total_in_window: usize,
    pub finite_total: bool,
    /// Total number of gaps on the whole axis when finite.
    pub total: Option<usize>,
    /// `2 * #{k >= 0 : k T_hi < (k + 1) T_lo}` for a single family with
    /// `0 < T_lo < T_hi < inf`.
    pub closed_form_total: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    pub isochronous_tol: f64,
    /// Orbit classification found aperiodic or long orbits on a set of
    /// positive area.
    pub aperiodic_positive_measure: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { isochronous_tol: 1e-6, aperiodic_positive_measure: false }
    }
}

fn is_isochronous(t_lo: f64, t_hi: f64, tol: f64) -> bool {
    t_lo > 0.0 && (t_hi - t_lo) / t_lo < tol
}

/// Per-family period range, collapsed to a single period when isochronous.
fn effective_range(f: &FamilyPeriods, tol: f64) -> Option<(f64, f64)> {
    let hi = f.t_hi?;
    if is_isochronous(f.t_lo, hi, tol) {
        let t = 0.5 * (f.t_lo + hi);
        Some((t, t))
    } else {
        Some((f.t_lo, hi))
    }
}

/// Union of closed intervals with provenance; touching intervals merge.
fn merge(mut raw: Vec<Band>) -> Vec<Band> {
    raw.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let mut out: Vec<Band> = Vec::with_capacity(raw.len());
    for b in raw {
        match out.last_mut() {
            Some(last) if b.lo <= last.hi => {
                last.hi = last.hi.max(b.hi);
                last.contributors.extend(b.contributors);
            }
            _ => out.push(b),
        }
    }
    for b in &mut out {
        b.contributors.sort();
        b.contributors.dedup();
    }
    out
}

/// Positive-axis bands `[2 pi k / T_hi, 2 pi k / T_lo]`, k >= 1, clipped to `(0, window]`.
fn positive_bands(families: &[FamilyPeriods], window: f64, tol: f64) -> Vec<Band> {
    let mut raw = Vec::new();
    for f in families {
        let Some((lo_t, hi_t)) = effective_range(f, tol) else { continue };
        let mut k: i64 = 1;
        loop {
            let lo = TAU * k as f64 / hi_t;
            if lo > window {
                break;
            }
            let hi = if lo_t > 0.0 { (TAU * k as f64 / lo_t).min(window) } else { window };
            raw.push(Band { lo, hi, contributors: vec![Contributor { family: f.family, k }] });
            if lo_t == 0.0 {
                break;
            }
            k += 1;
        }
    }
    merge(raw)
}

fn mirrored(positive: &[Band], families: &[FamilyPeriods]) -> Vec<Band> {
    let mut out: Vec<Band> = positive
        .iter()
        .rev()
        .map(|b| Band {
            lo: -b.hi,
            hi: -b.lo,
            contributors: b.contributors.iter().map(|c| Contributor { family: c.family, k: -c.k }).collect(),
        })
        .collect();
    out.push(Band {
        lo: 0.0,
        hi: 0.0,
        contributors: families.iter().map(|f| Contributor { family: f.family, k: 0 }).collect(),
    });
    out.extend(positive.iter().cloned());
    out
}

pub fn family_periods(pfs: &[PeriodFunction]) -> Vec<FamilyPeriods> {
    pfs.iter().map(|p| FamilyPeriods { family: p.family, t_lo: p.t_lo, t_hi: p.t_hi }).collect()
}

/// Assemble the spectrum within `[-window, window]`.
pub fn assemble_spectrum(pfs: &[PeriodFunction], window: f64, opts: &SpectrumOptions) -> Result<SpectrumSet> {
    assemble_from_ranges(&family_periods(pfs), window, opts)
}

pub fn assemble_from_ranges(families: &[FamilyPeriods], window: f64, opts: &SpectrumOptions) -> Result<SpectrumSet> {
    if families.is_empty() {
        return Err(Error::Empty("no period functions".into()));
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidParameter { name: "window".into(), reason: "must be positive and finite".into() });
    }
    let mut notes = Vec::new();
    let unbounded: Vec<usize> = families.iter().filter(|f| f.t_hi.is_none()).map(|f| f.family).collect();
    if !unbounded.is_empty() || opts.aperiodic_positive_measure {
        if !unbounded.is_empty() {
            notes.push(format!(
                "families {unbounded:?} have unbounded periods: the flow has arbitrarily long trajectories, so the spectrum is the whole imaginary axis"
            ));
        }
        if opts.aperiodic_positive_measure {
            notes.push("aperiodic or long orbits fill a set of positive area: the spectrum is the whole imaginary axis".into());
        }
        return Ok(SpectrumSet {
            shape: Shape::FullLine,
            window,
            bands: vec![Band {
                lo: -window,
                hi: window,
                contributors: unbounded.iter().map(|&f| Contributor { family: f, k: 0 }).collect(),
            }],
            families: families.to_vec(),
            notes,
        });
    }
    let tol = opts.isochronous_tol;
    let tmin = families.iter().map(|f| f.t_lo).fold(f64::INFINITY, f64::min);
    let tmax = families.iter().filter_map(|f| f.t_hi).fold(0.0, f64::max);
    let positive = positive_bands(families, window, tol);
    let bands = mirrored(&positive, families);
    if is_isochronous(tmin, tmax, tol) {
        let t = 0.5 * (tmin + tmax);
        notes.push(format!("isochronous: every orbit has period {t:.12}"));
        return Ok(SpectrumSet { shape: Shape::Lattice { step: TAU / t }, window, bands, families: families.to_vec(), notes });
    }
    Ok(SpectrumSet { shape: Shape::Bands, window, bands, families: families.to_vec(), notes })
}

/// Window beyond which every family with a genuine period spread covers
/// the axis, so no gaps lie further out. `None` if no such family exists.
fn covering_window(families: &[FamilyPeriods], tol: f64) -> Option<f64> {
    families
        .iter()
        .filter_map(|f| effective_range(f, tol))
        .filter(|(lo, hi)| hi > lo)
        .map(|(lo, hi)| {
            if lo == 0.0 {
                return TAU / hi;
            }
            let kstar = closed_form_positive(lo, hi) as f64;
            TAU * kstar / hi
        })
        .reduce(f64::min)
}

/// `#{k >= 0 : k T_hi < (k + 1) T_lo}`, i.e. the integers below `T_lo / (T_hi - T_lo)`.
pub fn closed_form_positive(t_lo: f64, t_hi: f64) -> usize {
    let x = t_lo / (t_hi - t_lo);
    let c = x.ceil();
    // Guard the strict inequality against rounding in x.
    let mut k = c.max(0.0) as usize;
    while k > 0 && ((k - 1) as f64 * t_hi >= k as f64 * t_lo) {
        k -= 1;
    }
    while (k as f64) * t_hi < (k + 1) as f64 * t_lo {
        k += 1;
    }
    k
}

pub fn gap_report(spec: &SpectrumSet, opts: &SpectrumOptions) -> Result<GapReport> {
    if spec.shape == Shape::FullLine {
        return Err(Error::FullLine);
    }
    let gaps = gaps_between(&spec.bands);
    let total_in_window = gaps.len();
    let tol = opts.isochronous_tol;
    let cover = covering_window(&spec.families, tol);
    let (finite_total, total) = match (spec.shape, cover) {
        (Shape::Lattice { .. }, _) | (_, None) => (false, None),
        (_, Some(c)) => {
            let wide = assemble_from_ranges(&spec.families, c.max(spec.window) * 1.5 + 1.0, opts)?;
            (true, Some(gaps_between(&wide.bands).len()))
        }
    };
    let closed_form_total = match spec.families.as_slice() {
        [f] => match effective_range(f, tol) {
            Some((lo, hi)) if lo > 0.0 && hi > lo => Some(2 * closed_form_positive(lo, hi)),
            _ => None,
        },
        _ => None,
    };
    Ok(GapReport { gaps, total_in_window, finite_total, total, closed_form_total })
}

fn gaps_between(bands: &[Band]) -> Vec<Gap> {
    bands.windows(2).filter(|w| w[1].lo > w[0].hi).map(|w| Gap { lo: w[0].hi, hi: w[1].lo }).collect()
}

impl SpectrumSet {
    /// Is `lambda` (imaginary coordinate) in the set?
    pub fn contains(&self, lambda: f64) -> bool {
        match self.shape {
            Shape::FullLine => true,
            _ => self.bands.iter().any(|b| b.lo <= lambda && lambda <= b.hi),
        }
    }

    pub fn positive_bands(&self) -> Vec<(f64, f64)> {
        self.bands.iter().filter(|b| b.hi >= 0.0).map(|b| (b.lo.max(0.0), b.hi)).collect()
    }
}

/// Corollary test: periods not all equal, or unbounded.
pub fn unit_circle_predicate(pfs: &[PeriodFunction], tol: f64) -> Result<bool> {
    if pfs.is_empty() {
        return Err(Error::Empty("no period functions".into()));
    }
    if pfs.iter().any(|p| p.unbounded) {
        return Ok(true);
    }
    let tmin = pfs.iter().map(|p| p.t_lo).fold(f64::INFINITY, f64::min);
    let tmax = pfs.iter().filter_map(|p| p.t_hi).fold(0.0, f64::max);
    Ok(!is_isochronous(tmin, tmax, tol))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub family: usize,
    pub k: i64,
    pub rho_lo: f64,
    pub rho_hi: f64,
    /// `None` for a tail beyond the last sample toward an unbounded end.
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Membership {
    pub lambda: f64,
    pub eps: f64,
    pub member: bool,
    pub witnesses: Vec<Witness>,
    /// The scan over `k` stopped early; more witnesses exist.
    pub truncated: bool,
}

/// Open interval of periods `T > 0` with `2 pi k / T` in `(lambda - eps, lambda + eps)`.
fn period_window(k: i64, lambda: f64, eps: f64) -> Option<(f64, f64)> {
    if k == 0 {
        return (lambda.abs() < eps).then_some((0.0, f64::INFINITY));
    }
    // Reduce to k > 0 by symmetry.
    let (k, lambda) = if k < 0 { (-k, -lambda) } else { (k, lambda) };
    let (a, b) = (lambda - eps, lambda + eps);
    if b <= 0.0 {
        return None;
    }
    let two_pi_k = TAU * k as f64;
    let t_lo = two_pi_k / b;
    let t_hi = if a <= 0.0 { f64::INFINITY } else { two_pi_k / a };
    Some((t_lo, t_hi))
}

/// Sub-intervals of `[r0, r1]` where the interpolated period lies in `(lo, hi)`.
fn preimage(pf: &PeriodFunction, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let x = &pf.interpolant.x;
    if x.is_empty() {
        return Vec::new();
    }
    let inside = |r: f64| {
        let t = pf.period_at(r);
        t > lo && t < hi
    };
    let mut grid = Vec::new();
    for w in x.windows(2) {
        for j in 0..16 {
            grid.push(w[0] + (w[1] - w[0]) * j as f64 / 16.0);
        }
    }
    grid.push(*x.last().unwrap_or(&0.0));
    let refine = |mut a: f64, mut b: f64| {
        // a inside-state differs from b; return the crossing.
        let sa = inside(a);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if inside(m) == sa {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let mut out = Vec::new();
    let mut start = if inside(grid[0]) { Some(grid[0]) } else { None };
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        match (inside(a), inside(b)) {
            (false, true) => start = Some(refine(a, b)),
            (true, false) => {
                if let Some(s) = start.take() {
                    out.push((s, refine(a, b)));
                }
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, *grid.last().unwrap_or(&s)));
    }
    out.retain(|(a, b)| b > a);
    out
}

/// Integers `k` whose period window for `(lambda, eps)` can meet periods in
/// `[t_min, t_max]`, at most `MAX_K_PER_SIGN` per sign.
fn candidate_ks(lambda: f64, eps: f64, t_min: f64, t_max: f64) -> (Vec<i64>, bool) {
    let mut ks = Vec::new();
    let mut truncated = false;
    if lambda.abs() < eps {
        ks.push(0);
    }
    for sign in [1i64, -1] {
        let l = sign as f64 * lambda;
        let (a, b) = (l - eps, l + eps);
        if b <= 0.0 {
            continue;
        }
        // 2 pi k / b < t_max and (a <= 0 or 2 pi k / a > t_min).
        let k_hi = (b * t_max / TAU).ceil() as i64;
        let k_lo = if a <= 0.0 { 1 } else { ((a * t_min / TAU).floor() as i64).max(1) };
        let mut k = k_lo;
        while k <= k_hi {
            if k - k_lo >= MAX_K_PER_SIGN {
                truncated = true;
                break;
            }
            ks.push(sign * k);
            k += 1;
        }
    }
    (ks, truncated)
}

const MAX_K_PER_SIGN: i64 = 64;

/// Is there `k` with `mu{rho : |2 pi k / T(rho) - lambda| < eps} > 0`?
pub fn membership(pfs: &[PeriodFunction], lambda: f64, eps: f64) -> Result<Membership> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter { name: "eps".into(), reason: "must be positive".into() });
    }
    let mut witnesses = Vec::new();
    let mut truncated = false;
    for pf in pfs {
        let ys = &pf.interpolant.y;
        let t_min = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let t_max = ys.iter().copied().fold(0.0, f64::max);
        let unbounded_end = [&pf.lower_evidence, &pf.upper_evidence]
            .iter()
            .any(|e| e.as_ref().is_some_and(|e| e.unbounded));
        // An unbounded end reaches every period above the last sample.
        let t_top = if unbounded_end { f64::INFINITY } else { t_max };
        let (ks, cut) = candidate_ks(lambda, eps, t_min, if t_top.is_finite() { t_top } else { t_max * 2.0 });
        truncated |= cut;
        let (a, b) = pf.psi_range;
        for k in ks {
            let Some((tl, th)) = period_window(k, lambda, eps) else { continue };
            for (r0, r1) in preimage(pf, tl, th) {
                let mu = mu_measure(pf, r0.max(a), r1.min(b))?;
                if mu > 0.0 {
                    witnesses.push(Witness { family: pf.family, k, rho_lo: r0, rho_hi: r1, mu: Some(mu) });
                }
            }
            for (ev, end, outer) in [
                (&pf.lower_evidence, a, pf.interpolant.x.first().copied()),
                (&pf.upper_evidence, b, pf.interpolant.x.last().copied()),
            ] {
                let (Some(ev), Some(outer)) = (ev, outer) else { continue };
                if ev.unbounded && th > pf.period_at(outer) && k != 0 {
                    let (lo, hi) = if end < outer { (end, outer) } else { (outer, end) };
                    witnesses.push(Witness { family: pf.family, k, rho_lo: lo, rho_hi: hi, mu: None });
                }
            }
        }
        if unbounded_end && witnesses.iter().all(|w| w.family != pf.family) && lambda.abs() >= eps {
            // Periods grow without bound, so 2 pi k / T sweeps every small
            // positive value; the window is met for some large k.
            let k = (lambda.signum() as i64) * (((lambda.abs() * t_max) / TAU).ceil() as i64 + 1);
            let (lo, hi) = match (&pf.lower_evidence, &pf.upper_evidence) {
                (Some(e), _) if e.unbounded => (a, pf.interpolant.x.first().copied().unwrap_or(a)),
                _ => (pf.interpolant.x.last().copied().unwrap_or(b), b),
            };
            witnesses.push(Witness { family: pf.family, k, rho_lo: lo, rho_hi: hi, mu: None });
        }
    }
    Ok(Membership { lambda, eps, member: !witnesses.is_empty(), witnesses, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ranges(t_lo: f64, t_hi: f64) -> Vec<FamilyPeriods> {
        vec![FamilyPeriods { family: 0, t_lo, t_hi: Some(t_hi) }]
    }

    #[test]
    fn shear_range_bands() {
        let s = assemble_from_ranges(&ranges(PI, TAU), 20.0, &SpectrumOptions::default()).unwrap();
        assert_eq!(s.shape, Shape::Bands);
        let pos = s.positive_bands();
        assert_eq!(pos.len(), 2);
        assert_eq!(pos[0], (0.0, 0.0));
        assert!((pos[1].0 - 1.0).abs() < 1e-15 && pos[1].1 == 20.0);
        let g = gap_report(&s, &SpectrumOptions::default()).unwrap();
        assert_eq!(g.total_in_window, 2);
        assert_eq!(g.closed_form_total, Some(2));
        assert_eq!(g.total, Some(2));
    }

    #[test]
    fn three_four_has_six_gaps() {
        let s = assemble_from_ranges(&ranges(3.0, 4.0), 20.0, &SpectrumOptions::default()).unwrap();
        let g = gap_report(&s, &SpectrumOptions::default()).unwrap();
        assert_eq!(g.closed_form_total, Some(6));
        assert_eq!(g.total_in_window, 6);
        assert_eq!(closed_form_positive(3.0, 4.0), 3);
    }

    #[test]
    fn lattice_and_full_line() {
        let s = assemble_from_ranges(&ranges(TAU, TAU), 20.0, &SpectrumOptions::default()).unwrap();
        assert!(matches!(s.shape, Shape::Lattice { step } if (step - 1.0).abs() < 1e-15));
        assert_eq!(s.bands.len(), 41);
        assert!(!gap_report(&s, &SpectrumOptions::default()).unwrap().finite_total);
        let fam = vec![FamilyPeriods { family: 0, t_lo: TAU, t_hi: None }];
        let s = assemble_from_ranges(&fam, 20.0, &SpectrumOptions::default()).unwrap();
        assert_eq!(s.shape, Shape::FullLine);
        assert!(matches!(gap_report(&s, &SpectrumOptions::default()), Err(Error::FullLine)));
    }

    #[test]
    fn zero_minimum_period() {
        let t_max = 2.0;
        let s = assemble_from_ranges(&ranges(0.0, t_max), 20.0, &SpectrumOptions::default()).unwrap();
        let pos = s.positive_bands();
        assert_eq!(pos, vec![(0.0, 0.0), (PI, 20.0)]);
    }

    #[test]
    fn membership_examples() {
        let pf = PeriodFunction::synthetic(0, PI, Some(TAU));
        assert!(membership(std::slice::from_ref(&pf), 0.0, 0.01).unwrap().member);
        let m = membership(std::slice::from_ref(&pf), 1.5, 0.01).unwrap();
        assert!(m.member);
        assert!(m.witnesses.iter().any(|w| w.k == 1));
        assert!(!membership(&[pf], 0.5, 0.01).unwrap().member);
    }

    #[test]
    fn unbounded_family_is_member_everywhere() {
        let pf = PeriodFunction::synthetic(0, 1.0, None);
        for lam in [0.3, 2.0, -7.5, 19.0] {
            assert!(membership(std::slice::from_ref(&pf), lam, 0.01).unwrap().member, "{lam}");
        }
    }
}
