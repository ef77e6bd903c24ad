mod common;

use std::f64::consts::TAU;

use common::{flow, periods, topology};
use eulerspec_core::lab::{
    bounded_regions, coarea_check, discretize_k, discretize_l0, operator_diagnostics, probe_vectors, skewness,
    weyl_residual, zero_mean_residual, CoareaRegion, DiagnosticsOptions, Grid2D, PoissonSystem, TestFunction,
    WeylPacket,
};
use eulerspec_core::StreamField;
use proptest::prelude::*;

fn grid(f: &StreamField, nx: usize, ny: usize) -> Grid2D {
    Grid2D::new(&f.domain, nx, ny).unwrap()
}

#[test]
fn couette_eigenvalues_match_centred_difference_symbols() {
    // u = (-1, 0): every row is a periodic centred difference -d/dx, whose
    // eigenvalues are -i sin(2 pi m / nx) / dx, once per row.
    let f = flow("couette");
    let g = grid(&f, 64, 16);
    let l0 = discretize_l0(&f, &g).unwrap();
    assert!(skewness(&l0.matrix) < 1e-14);
    let mut got: Vec<f64> = l0.matrix.eigenvalues().unwrap().iter().map(|z| z.im).collect();
    let re = l0.matrix.eigenvalues().unwrap().iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    assert!(re < 1e-10, "{re:e}");
    let mut want: Vec<f64> = (0..64)
        .flat_map(|m| std::iter::repeat_n(-(TAU * m as f64 / 64.0).sin() / g.dx, 16))
        .collect();
    got.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err:e}");
}

#[test]
fn rigid_disk_is_skew_and_annihilates_functions_of_psi() {
    let f = flow("rigid");
    let mut res = Vec::new();
    for n in [32, 64] {
        let g = grid(&f, n, n);
        let l0 = discretize_l0(&f, &g).unwrap();
        assert!(skewness(&l0.matrix) < 1e-10);
        // f(psi) = psi^2 restricted to the interior away from the staircase.
        let w: Vec<f64> = g.centers().iter().map(|&p| f.psi(p).powi(2) * (0.4 - f.psi(p)).max(0.0)).collect();
        let lw = l0.apply(&w);
        let num = lw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let den = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        res.push(num / den);
    }
    assert!(res[1] < 0.7 * res[0], "{res:?}");
}

#[test]
fn shear_eigenvalues_are_imaginary() {
    let f = flow("shear_quadratic");
    let g = grid(&f, 64, 32);
    let l0 = discretize_l0(&f, &g).unwrap();
    let re = l0.matrix.eigenvalues().unwrap().iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    assert!(re < 1e-10, "{re:e}");
}

#[test]
fn k_range_has_zero_mean() {
    for (name, n) in [("cellular", 48), ("radial_cos", 48), ("annulus_shear", 48)] {
        let f = flow(name);
        let g = grid(&f, n, n);
        let k = discretize_k(&f, &g).unwrap();
        assert!(k.matrix.norm_max() > 0.0, "{name}: K vanished");
        let probes = probe_vectors(&g, 100, 3);
        let r = zero_mean_residual(&k, &g, &probes);
        assert!(r < 1e-8, "{name}: {r:e}");
    }
}

#[test]
fn annulus_poisson_meets_flux_constraints() {
    let f = flow("annulus_shear");
    let g = grid(&f, 48, 48);
    let sys = PoissonSystem::assemble(&g).unwrap();
    for w in probe_vectors(&g, 6, 11) {
        let s = sys.solve(&w).unwrap();
        let scale = w.iter().map(|x| x.abs()).fold(0.0, f64::max) * f.domain.area();
        assert!(s.residual < 1e-8 * scale, "{:e}", s.residual);
        assert_eq!(s.fluxes.len(), 2);
        // The inner flux is constrained; the outer follows from the zero mean.
        for q in &s.fluxes {
            assert!(q.abs() < 1e-8 * scale, "{:?}", s.fluxes);
        }
    }
}

#[test]
fn cellular_diagnostics() {
    let f = flow("cellular");
    let g = grid(&f, 48, 48);
    let l0 = discretize_l0(&f, &g).unwrap();
    let k = discretize_k(&f, &g).unwrap();
    let rep = operator_diagnostics(&l0, &k, &g, &DiagnosticsOptions { eigenvalues: false, ..Default::default() });
    assert!(rep.errors.is_empty(), "{:?}", rep.errors);
    assert!(rep.skewness_norm < 1e-10);
    assert!(rep.zero_mean_residual < 1e-8);
    assert!(rep.k_singular_values_monotone);
    let t = rep.k_tail_ratio.unwrap();
    assert!(t < 1.0, "{t}");
}

#[test]
fn torus_l0_is_skew() {
    let f = common::flow_with("cellular", &[("periodic", 1.0)]);
    let g = grid(&f, 32, 32);
    let l0 = discretize_l0(&f, &g).unwrap();
    assert!(skewness(&l0.matrix) < 1e-10);
    let k = discretize_k(&f, &g).unwrap();
    assert!(zero_mean_residual(&k, &g, &probe_vectors(&g, 20, 0)) < 1e-8);
}

#[test]
fn coarea_on_rigid_matches_closed_forms() {
    let p = topology(flow("rigid"));
    let pfs = periods(&p);
    let regions = bounded_regions(&pfs);
    assert_eq!(regions.len(), 1);
    // psi = r^2 / 2 on the unit disk: int 1 = pi, int psi^2 = pi / 12.
    for (tf, want) in [(TestFunction::One, std::f64::consts::PI), (TestFunction::Psi, std::f64::consts::PI / 12.0)] {
        let r = coarea_check(&p.field, &p.index.families, &regions, tf, 256, &p.scales).unwrap();
        assert!(r.rel_error < 1e-3, "{tf:?}: {r:?}");
        assert!((r.lhs - want).abs() / want < 1e-3, "{tf:?}: lhs {}", r.lhs);
        assert!((r.rhs - want).abs() / want < 1e-3, "{tf:?}: rhs {}", r.rhs);
    }
}

#[test]
fn coarea_on_shear_and_radial_cos() {
    for name in ["shear_quadratic", "radial_cos"] {
        let p = topology(flow(name));
        let pfs = periods(&p);
        let regions = bounded_regions(&pfs);
        assert!(!regions.is_empty(), "{name}");
        if name == "radial_cos" {
            // Only the halves away from the fixed circle r = pi survive.
            assert!(regions.iter().all(|r| r.hi - r.lo < 1.0 + 1e-9));
        }
        for tf in TestFunction::ALL {
            let r = coarea_check(&p.field, &p.index.families, &regions, tf, 256, &p.scales).unwrap();
            assert!(r.rel_error < 1e-3, "{name} {tf:?}: {r:?}");
        }
    }
}

#[test]
fn coarea_rejects_empty_regions() {
    let p = topology(flow("rigid"));
    let none: [CoareaRegion; 0] = [];
    assert!(coarea_check(&p.field, &p.index.families, &none, TestFunction::One, 64, &p.scales).is_err());
}

#[test]
fn weyl_residual_vanishes_for_couette() {
    let p = topology(flow("couette"));
    let pfs = periods(&p);
    let fam = &p.index.families[0];
    for (rho, k, delta) in [(0.5, 1, 0.2), (0.3, 3, 0.05), (0.7, -2, 0.1)] {
        let w = weyl_residual(&p.field, fam, &WeylPacket { family: 0, rho, k, delta }, &pfs[0], &p.scales).unwrap();
        assert!((w.lambda - k as f64).abs() < 1e-9, "{}", w.lambda);
        assert!(w.residual < 1e-8, "rho {rho} k {k}: {:e}", w.residual);
    }
}

#[test]
fn weyl_residual_decays_under_halving_on_shear() {
    let p = topology(flow("shear_quadratic"));
    let pfs = periods(&p);
    let fam = &p.index.families[0];
    let res = |rho: f64, k: i64, delta: f64| {
        weyl_residual(&p.field, fam, &WeylPacket { family: 0, rho, k, delta }, &pfs[0], &p.scales).unwrap()
    };
    for y in [1.2, 1.4, 1.5, 1.6, 1.8f64] {
        let rho = 0.5 * y * y;
        let r: Vec<_> = [0.05, 0.025, 0.0125].iter().map(|&d| res(rho, 1, d)).collect();
        // lambda = 2 pi / T = y.
        assert!((r[0].lambda - y).abs() < 1e-4 * y, "y {y}: lambda {}", r[0].lambda);
        for w in r.windows(2) {
            let ratio = w[1].residual / w[0].residual;
            assert!(ratio <= 0.7, "y {y}: ratio {ratio}");
        }
        assert!(r[2].residual < 0.05 * r[2].lambda.abs(), "y {y}: {}", r[2].residual);
        let r2 = res(rho, 2, 0.05);
        let ratio = r2.residual / r[0].residual;
        assert!((ratio - 2.0).abs() < 0.05, "y {y}: k ratio {ratio}");
    }
}

#[test]
fn weyl_rejects_tube_outside_family() {
    let p = topology(flow("shear_quadratic"));
    let pfs = periods(&p);
    let packet = WeylPacket { family: 0, rho: 0.52, k: 1, delta: 0.05 };
    assert!(weyl_residual(&p.field, &p.index.families[0], &packet, &pfs[0], &p.scales).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn operators_are_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
        let f = flow("cellular");
        let g = grid(&f, 16, 16);
        let l0 = discretize_l0(&f, &g).unwrap();
        let pr = probe_vectors(&g, 2, seed);
        let combo: Vec<f64> = pr[0].iter().zip(&pr[1]).map(|(x, y)| a * x + b * y).collect();
        let (u, v, w) = (l0.apply(&pr[0]), l0.apply(&pr[1]), l0.apply(&combo));
        for i in 0..w.len() {
            prop_assert!((w[i] - a * u[i] - b * v[i]).abs() < 1e-10);
        }
    }
}
