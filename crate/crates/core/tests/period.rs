mod common;

use std::f64::consts::{PI, TAU};

use common::{flow, flow_with, periods, topology};
use eulerspec_core::period::{mu_measure, period_contour, period_ode};
use eulerspec_core::topology::{trace_level_curve, ContourOpts};

/// Closed-form period and a seed at the given sample index.
fn oracle(name: &str, i: usize) -> ([f64; 2], f64) {
    let s = (i as f64 + 0.5) / 20.0;
    match name {
        "rigid" => {
            let r = 0.05 + 0.9 * s;
            ([r * (3.0 * s).cos(), r * (3.0 * s).sin()], TAU)
        }
        "couette" => ([TAU * s, 0.05 + 0.9 * s], TAU),
        "shear_quadratic" => {
            let y = 1.02 + 0.96 * s;
            ([1.0, y], TAU / y)
        }
        _ => {
            // Stay clear of r = pi where the period diverges.
            let r = if i < 10 { 0.2 + 2.6 * s } else { PI + 0.3 + 2.6 * (s - 0.5) };
            let t = TAU * r / r.sin().abs();
            ([r * (2.0 * s).cos(), r * (2.0 * s).sin()], t)
        }
    }
}

#[test]
fn both_methods_match_closed_forms() {
    for name in ["rigid", "couette", "shear_quadratic", "radial_cos"] {
        let f = flow(name);
        let sc = f.scales(&Default::default());
        let opts = ContourOpts::from_scales(&sc);
        for i in 0..20 {
            let (seed, t) = oracle(name, i);
            let ode = period_ode(&f, seed, &sc).unwrap();
            assert!((ode.period - t).abs() / t < 1e-6, "{name} ode {i}: {} vs {t}", ode.period);
            let c = trace_level_curve(&f, seed, &opts).unwrap();
            let con = period_contour(&f, &c.points, &sc).unwrap();
            assert!((con.period - t).abs() / t < 1e-3, "{name} contour {i}: {} vs {t}", con.period);
        }
    }
}

#[test]
fn sampled_levels_agree_across_methods() {
    for name in ["rigid", "couette", "shear_quadratic", "radial_cos"] {
        let p = topology(flow(name));
        for pf in periods(&p) {
            let n = pf.levels.len();
            assert!(pf.flagged_count() * 20 <= n, "{name}: {} of {n} flagged", pf.flagged_count());
            for l in pf.levels.iter().filter(|l| !l.flagged) {
                let rel = (l.ode.period - l.contour.period).abs() / l.ode.period;
                assert!(rel < 1e-5, "{name} rho {}: {rel:e}", l.rho);
            }
        }
    }
}

#[test]
fn shear_period_range() {
    let p = topology(flow("shear_quadratic"));
    let pf = &periods(&p)[0];
    assert!(!pf.unbounded);
    let hi = pf.t_hi.unwrap();
    assert!(pf.t_lo <= PI && pf.t_lo > PI * (1.0 - 1e-3), "{}", pf.t_lo);
    assert!((TAU..TAU * (1.0 + 1e-3)).contains(&hi), "{hi}");
    assert!((mu_measure(pf, 0.5, 2.0).unwrap() - 1.0).abs() < 1e-4);
    assert_eq!(mu_measure(pf, 1.0, 1.0).unwrap(), 0.0);
    assert!(pf.levels.iter().all(|l| !l.flagged));
    for w in pf.levels.windows(2) {
        let (a, b) = (w[0].ode.period, w[1].ode.period);
        assert!((a - b).abs() <= 0.05 * a.min(b) + 1e-12);
    }
}

#[test]
fn radial_cos_inner_family_is_unbounded_at_the_fixed_circle() {
    let p = topology(flow("radial_cos"));
    let pfs = periods(&p);
    assert!(pfs.iter().all(|pf| pf.unbounded && pf.t_hi.is_none()));
    let inner = pfs
        .iter()
        .zip(&p.index.families)
        .find(|(_, f)| {
            let s = f.seed_at(&p.field, 0.0).unwrap();
            s[0].hypot(s[1]) < PI
        })
        .unwrap()
        .0;
    assert!((inner.t_lo - TAU).abs() / TAU < 1e-3, "{}", inner.t_lo);
    // The elliptic end (rho = 1) is bounded, the fixed-circle end (rho = -1) is not.
    assert!(inner.lower_evidence.as_ref().unwrap().unbounded);
    assert!(!inner.upper_evidence.as_ref().unwrap().unbounded);
}

#[test]
fn couette_is_isochronous() {
    let p = topology(flow("couette"));
    let pf = &periods(&p)[0];
    let hi = pf.t_hi.unwrap();
    assert!((hi - pf.t_lo) / pf.t_lo < 1e-6, "{} {hi}", pf.t_lo);
    assert!((pf.t_lo - TAU).abs() < 1e-6);
}

#[test]
fn rigid_measure_and_area_identity() {
    for (name, area) in [("rigid", PI), ("shear_quadratic", TAU), ("annulus_shear", 3.0 * PI)] {
        let p = topology(flow(name));
        let pfs = periods(&p);
        let total: f64 = pfs.iter().map(|pf| mu_measure(pf, pf.psi_range.0, pf.psi_range.1).unwrap()).sum();
        assert!((TAU * total - area).abs() / area < 1e-3, "{name}: {}", TAU * total);
    }
    let p = topology(flow("rigid"));
    let pf = &periods(&p)[0];
    assert!((mu_measure(pf, 0.0, 0.5).unwrap() - 0.5).abs() < 1e-6);
    assert!(mu_measure(pf, 0.0, 0.7).is_err());
}

#[test]
fn scaling_divides_periods() {
    let f = flow_with("shear_quadratic", &[("scale", 2.0)]);
    let g = flow("shear_quadratic");
    let (sf, sg) = (f.scales(&Default::default()), g.scales(&Default::default()));
    for y in [1.1, 1.5, 1.9] {
        let a = period_ode(&f, [0.0, y], &sf).unwrap().period;
        let b = period_ode(&g, [0.0, y], &sg).unwrap().period;
        assert!((a - b / 2.0).abs() / a < 1e-8);
    }
}

#[test]
fn tighter_tolerance_stays_within_error_estimate() {
    let f = flow("radial_cos");
    let mut s = f.scales(&Default::default());
    let a = period_ode(&f, [2.0, 0.0], &s).unwrap();
    s.tol.period_rtol *= 0.5;
    let b = period_ode(&f, [2.0, 0.0], &s).unwrap();
    assert!((a.period - b.period).abs() <= a.err_est.max(1e-14 * a.period), "{a:?} {b:?}");
}

#[test]
fn period_csv_has_both_methods() {
    let p = topology(flow("rigid"));
    let pf = &periods(&p)[0];
    let csv = pf.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "family,rho,T,method,err_est");
    assert!(csv.contains("ode_return") && csv.contains("contour_integral"));
}
