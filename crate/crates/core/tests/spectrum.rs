mod common;

use std::f64::consts::{PI, TAU};

use common::{flow, periods, topology};
use eulerspec_core::spectrum::{
    assemble_from_ranges, assemble_spectrum, closed_form_positive, gap_report, membership, unit_circle_predicate,
    FamilyPeriods, Shape, SpectrumOptions, SpectrumSet,
};
use eulerspec_core::PeriodFunction;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLES: usize = 10_000;
/// Clustering gap for the sampled oracle; well above the point spacing of
/// every case generated below.
const TAU_CLUSTER: f64 = 5e-3;

/// Closure of `{2 pi k / T_i : k in Z}` within `[-w, w]` from a finite
/// sample of periods, as clusters of points no further than `TAU_CLUSTER`
/// apart. A cluster crossing the window edge gets the edge itself.
fn sampled_bands(ts: &[f64], w: f64) -> Vec<(f64, f64)> {
    let tmax = ts.iter().copied().fold(0.0, f64::max);
    let mut pts = vec![0.0];
    let mut k = 1.0;
    while TAU * k / tmax <= w {
        let mut crosses = false;
        for &t in ts {
            let v = TAU * k / t;
            if v <= w {
                pts.push(v);
                pts.push(-v);
            } else {
                crosses = true;
            }
        }
        if crosses {
            pts.push(w);
            pts.push(-w);
        }
        k += 1.0;
    }
    pts.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        match out.last_mut() {
            Some(last) if p - last.1 <= TAU_CLUSTER => last.1 = p,
            _ => out.push((p, p)),
        }
    }
    out
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// `sup_{x in a} dist(x, b)` for unions of closed intervals.
fn directed(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let dist = |x: f64| {
        b.iter()
            .map(|&(lo, hi)| if x < lo { lo - x } else if x > hi { x - hi } else { 0.0 })
            .fold(f64::INFINITY, f64::min)
    };
    let mut worst: f64 = 0.0;
    for &(lo, hi) in a {
        worst = worst.max(dist(lo)).max(dist(hi));
        for g in b.windows(2) {
            let m = 0.5 * (g[0].1 + g[1].0);
            if m > lo && m < hi {
                worst = worst.max(dist(m));
            }
        }
    }
    worst
}

fn hausdorff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    directed(a, b).max(directed(b, a))
}

fn bands_of(s: &SpectrumSet) -> Vec<(f64, f64)> {
    s.bands.iter().map(|b| (b.lo, b.hi)).collect()
}

fn single(t_lo: f64, t_hi: f64) -> Vec<FamilyPeriods> {
    vec![FamilyPeriods { family: 0, t_lo, t_hi: Some(t_hi) }]
}

/// Signed widths `2 pi ((k+1)/T_hi - k/T_lo)` of the would-be gaps for
/// `k = 0..=kmax`; negative means the bands overlap.
fn gap_widths(t_lo: f64, t_hi: f64, kmax: usize) -> Vec<f64> {
    (0..=kmax).map(|k| TAU * ((k + 1) as f64 / t_hi - k as f64 / t_lo)).collect()
}

/// A period range whose gaps and overlaps are all resolvable by the sampled
/// oracle, with no band end near the window edge.
fn random_case(rng: &mut ChaCha8Rng, window: f64) -> (f64, f64) {
    loop {
        let t_lo: f64 = rng.random_range(1.0..6.0);
        let t_hi = t_lo * (1.0 + rng.random_range(0.02f64..0.6));
        let kmax = (t_lo / (t_hi - t_lo)).ceil() as usize + 3;
        let clear_gaps = gap_widths(t_lo, t_hi, kmax).iter().all(|g| g.abs() > 4.0 * TAU_CLUSTER);
        let ends_clear = (1..=kmax + 40).all(|k| {
            let k = k as f64;
            (TAU * k / t_hi - window).abs() > 4.0 * TAU_CLUSTER && (TAU * k / t_lo - window).abs() > 4.0 * TAU_CLUSTER
        });
        if clear_gaps && ends_clear {
            return (t_lo, t_hi);
        }
    }
}

#[test]
fn random_ranges_match_sampled_closure() {
    let window = 20.0;
    let opts = SpectrumOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..25 {
        let (t_lo, t_hi) = random_case(&mut rng, window);
        let ts = linspace(t_lo, t_hi, SAMPLES);
        let spec = assemble_from_ranges(&single(t_lo, t_hi), window, &opts).unwrap();
        assert_eq!(spec.shape, Shape::Bands);
        let oracle = sampled_bands(&ts, window);
        let h = hausdorff(&bands_of(&spec), &oracle);
        assert!(h < 1e-6, "case {case} [{t_lo}, {t_hi}]: hausdorff {h:e}");

        let rep = gap_report(&spec, &opts).unwrap();
        assert_eq!(rep.total_in_window, oracle.len() - 1, "case {case}: gaps in window");
        // Past k > T_lo / (T_hi - T_lo) consecutive bands overlap, so a
        // window a few bands beyond that holds every gap.
        let kmax = (t_lo / (t_hi - t_lo)).ceil() + 3.0;
        let wide = sampled_bands(&ts, TAU * kmax / t_lo);
        assert_eq!(rep.total, Some(wide.len() - 1), "case {case}: total");
        assert_eq!(rep.closed_form_total, Some(wide.len() - 1), "case {case}: closed form");
    }
}

#[test]
fn closed_form_gap_count_example() {
    assert_eq!(closed_form_positive(3.0, 4.0), 3);
    let opts = SpectrumOptions::default();
    let spec = assemble_from_ranges(&single(3.0, 4.0), 20.0, &opts).unwrap();
    let rep = gap_report(&spec, &opts).unwrap();
    assert_eq!(rep.closed_form_total, Some(6));
    assert_eq!(rep.total, Some(6));
}

#[test]
fn shear_spectrum_matches_sampled_closure() {
    let p = topology(flow("shear_quadratic"));
    let pfs = periods(&p);
    let opts = SpectrumOptions::default();
    let spec = assemble_spectrum(&pfs, 20.0, &opts).unwrap();
    assert_eq!(spec.shape, Shape::Bands);
    // T(y) = 2 pi / y on 1 < y < 2.
    let ts: Vec<f64> = linspace(1.0, 2.0, SAMPLES).iter().map(|y| TAU / y).collect();
    let h = hausdorff(&bands_of(&spec), &sampled_bands(&ts, 20.0));
    assert!(h < 1e-6, "hausdorff {h:e}");
    assert!(unit_circle_predicate(&pfs, opts.isochronous_tol).unwrap());
    let rep = gap_report(&spec, &opts).unwrap();
    assert!(rep.total.unwrap() >= 2);
    // [pi, 2 pi]: #{k : 2 pi k < pi (k + 1)} = {0}, so one gap each side of 0.
    assert_eq!(rep.closed_form_total, Some(2));
}

#[test]
fn unbounded_family_gives_full_line() {
    let opts = SpectrumOptions::default();
    let fams = vec![FamilyPeriods { family: 0, t_lo: 2.0, t_hi: None }];
    let spec = assemble_from_ranges(&fams, 20.0, &opts).unwrap();
    assert_eq!(spec.shape, Shape::FullLine);
    assert!(gap_report(&spec, &opts).is_err());
    let aperiodic = SpectrumOptions { aperiodic_positive_measure: true, ..opts };
    let spec = assemble_from_ranges(&single(2.0, 3.0), 20.0, &aperiodic).unwrap();
    assert_eq!(spec.shape, Shape::FullLine);
    assert!(spec.contains(13.7) && spec.contains(-0.01));
}

#[test]
fn isochronous_range_gives_lattice() {
    let opts = SpectrumOptions::default();
    let spec = assemble_from_ranges(&single(TAU, TAU * (1.0 + 1e-8)), 20.0, &opts).unwrap();
    match spec.shape {
        Shape::Lattice { step } => assert!((step - 1.0).abs() < 1e-7),
        s => panic!("{s:?}"),
    }
    assert!(spec.bands.iter().all(|b| b.hi - b.lo < 1e-7));
    assert_eq!(spec.bands.len(), 2 * 20 + 1);
}

#[test]
fn two_families_merge_into_one_union() {
    let opts = SpectrumOptions::default();
    let fams = vec![
        FamilyPeriods { family: 0, t_lo: 3.0, t_hi: Some(3.2) },
        FamilyPeriods { family: 1, t_lo: 5.0, t_hi: Some(5.5) },
    ];
    let spec = assemble_from_ranges(&fams, 20.0, &opts).unwrap();
    let mut ts = linspace(3.0, 3.2, SAMPLES);
    ts.extend(linspace(5.0, 5.5, SAMPLES));
    let h = hausdorff(&bands_of(&spec), &sampled_bands(&ts, 20.0));
    assert!(h < 1e-6, "{h:e}");
    let rep = gap_report(&spec, &opts).unwrap();
    assert!(rep.finite_total);
    assert_eq!(rep.closed_form_total, None);
}

fn synthetic(t_lo: f64, t_hi: f64) -> PeriodFunction {
    PeriodFunction::synthetic(0, t_lo, Some(t_hi))
}

#[test]
fn membership_in_bands_and_gaps() {
    let pf = synthetic(3.0, 4.0);
    let opts = SpectrumOptions::default();
    let spec = assemble_spectrum(std::slice::from_ref(&pf), 20.0, &opts).unwrap();
    for b in spec.bands.iter().filter(|b| b.hi > b.lo) {
        let m = membership(std::slice::from_ref(&pf), 0.5 * (b.lo + b.hi), 1e-3).unwrap();
        assert!(m.member, "band [{}, {}]", b.lo, b.hi);
        assert!(m.witnesses.iter().all(|w| w.mu.unwrap() > 0.0));
    }
    for g in gap_report(&spec, &opts).unwrap().gaps {
        let eps = 0.25 * (g.hi - g.lo);
        let m = membership(std::slice::from_ref(&pf), 0.5 * (g.lo + g.hi), eps).unwrap();
        assert!(!m.member, "gap [{}, {}]", g.lo, g.hi);
    }
    let m = membership(std::slice::from_ref(&pf), 0.0, 1e-3).unwrap();
    assert!(m.member);
}

#[test]
fn membership_toward_unbounded_end() {
    let pf = PeriodFunction::synthetic(0, 2.0, None);
    let m = membership(std::slice::from_ref(&pf), 0.3, 1e-4).unwrap();
    assert!(m.member);
    assert!(m.witnesses.iter().any(|w| w.mu.is_none()));
}

fn range() -> impl Strategy<Value = (f64, f64)> {
    (0.5f64..8.0, 0.0f64..1.0).prop_map(|(lo, s)| (lo, lo * (1.0 + s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bands_are_symmetric_and_contain_zero((lo, hi) in range(), w in 1.0f64..40.0) {
        let spec = assemble_from_ranges(&single(lo, hi), w, &SpectrumOptions::default()).unwrap();
        prop_assert!(spec.contains(0.0));
        let b = bands_of(&spec);
        let n = b.len();
        for i in 0..n {
            let (a, c) = (b[i], b[n - 1 - i]);
            prop_assert!((a.0 + c.1).abs() <= 1e-12 * w && (a.1 + c.0).abs() <= 1e-12 * w);
        }
        for p in b.windows(2) {
            prop_assert!(p[0].1 < p[1].0);
        }
        prop_assert!(b.iter().all(|&(l, h)| l <= h && l >= -w && h <= w));
    }

    #[test]
    fn scaling_periods_scales_the_spectrum((lo, hi) in range(), c in prop::sample::select(vec![0.5, 2.0])) {
        let opts = SpectrumOptions::default();
        let w = 15.0;
        let a = assemble_from_ranges(&single(lo, hi), w, &opts).unwrap();
        let b = assemble_from_ranges(&single(c * lo, c * hi), w / c, &opts).unwrap();
        let (ba, bb) = (bands_of(&a), bands_of(&b));
        prop_assert_eq!(ba.len(), bb.len());
        for (x, y) in ba.iter().zip(&bb) {
            prop_assert!((x.0 / c - y.0).abs() <= 1e-12 * w && (x.1 / c - y.1).abs() <= 1e-12 * w);
        }
    }

    #[test]
    fn wider_period_range_gives_larger_spectrum((lo, hi) in range(), d_lo in 0.0f64..0.5, d_hi in 0.0f64..2.0) {
        let opts = SpectrumOptions::default();
        let small = assemble_from_ranges(&single(lo, hi), 20.0, &opts).unwrap();
        let big = assemble_from_ranges(&single(lo * (1.0 - d_lo), hi + d_hi), 20.0, &opts).unwrap();
        let bb = bands_of(&big);
        for (l, h) in bands_of(&small) {
            prop_assert!(bb.iter().any(|&(a, b)| a <= l + 1e-12 && h <= b + 1e-12), "[{l}, {h}]");
        }
    }

    #[test]
    fn gap_count_matches_closed_form((lo, hi) in range()) {
        prop_assume!(hi > lo * (1.0 + 1e-3));
        let opts = SpectrumOptions::default();
        let spec = assemble_from_ranges(&single(lo, hi), 5.0, &opts).unwrap();
        let rep = gap_report(&spec, &opts).unwrap();
        prop_assert_eq!(rep.total, rep.closed_form_total);
        prop_assert!(rep.total_in_window <= rep.total.unwrap());
    }
}

#[test]
fn rigid_is_a_lattice_and_fails_the_predicate() {
    let p = topology(flow("rigid"));
    let pfs = periods(&p);
    let spec = assemble_spectrum(&pfs, 20.0, &SpectrumOptions::default()).unwrap();
    assert_eq!(spec.shape, Shape::Lattice { step: TAU / (0.5 * (pfs[0].t_lo + pfs[0].t_hi.unwrap())) });
    assert!(!unit_circle_predicate(&pfs, 1e-6).unwrap());
    // Point bands at the integers, up to the period error.
    assert!(spec.bands.len() >= 39);
    for b in &spec.bands {
        assert!((b.lo - b.lo.round()).abs() < 1e-6 && b.hi - b.lo < 1e-6, "[{}, {}]", b.lo, b.hi);
    }
    assert!(!spec.contains(PI / 2.0));
}
