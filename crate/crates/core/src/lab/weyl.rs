//! Tube-supported approximate eigenfunctions `chi((psi - rho) / delta) e^{ik theta}`
//! and their residual `||(L0 - i lambda) w|| / ||w||`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::field::StreamField;
use crate::ode::Stepper;
use crate::period::PeriodFunction;
use crate::quad::composite;
use crate::tolerances::Scales;
use crate::topology::{trace_orbit, OrbitFamily, OrbitKind, TraceCaps};

/// Samples per orbit.
const SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylPacket {
    pub family: usize,
    pub rho: f64,
    pub k: i64,
    /// Tube half-width in psi units.
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylResult {
    pub family: usize,
    pub rho: f64,
    pub k: i64,
    pub delta: f64,
    pub lambda: f64,
    pub residual: f64,
}

/// `exp(-1 / (1 - s^2))` on `(-1, 1)`, zero outside.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Positions at `SAMPLES` equally spaced times over one period from `seed`,
/// and the period.
fn orbit_samples(field: &StreamField, seed: [f64; 2], scales: &Scales) -> Result<(Vec<[f64; 2]>, f64)> {
    let mut caps = TraceCaps::from_scales(scales);
    caps.record_polyline = false;
    let tr = trace_orbit(field, seed, &caps, scales)?;
    if tr.kind != OrbitKind::Periodic {
        return Err(Error::GrazesFixedPoint(seed[0], seed[1]));
    }
    let period = tr.time;
    let rhs = |y: &[f64; 2]| field.velocity(*y);
    let speed = {
        let v = field.velocity(seed);
        v[0].hypot(v[1])
    };
    let length = tr.arclength.max(f64::MIN_POSITIVE);
    let mut stepper = Stepper::new(scales.tol.period_rtol, scales.tol.period_rtol * length, 1e-3 * length / speed);
    let mut out = Vec::with_capacity(SAMPLES);
    let mut y = seed;
    let mut t = 0.0;
    for j in 0..SAMPLES {
        let target = period * j as f64 / SAMPLES as f64;
        while target - t > 1e-15 * period {
            let (yn, h) = stepper.step(&rhs, &y, target - t)?;
            y = yn;
            t += h;
        }
        out.push(y);
    }
    Ok((out, period))
}

/// Residual of the packet by streamline quadrature: Gauss–Legendre nodes
/// across the tube, and on each orbit the flow derivative `d/dt` taken
/// spectrally from equally spaced time samples. The angle on each orbit is
/// the time of flight from the family's transversal, scaled by `2 pi / T`.
pub fn weyl_residual(
    field: &StreamField,
    family: &OrbitFamily,
    packet: &WeylPacket,
    pf: &PeriodFunction,
    scales: &Scales,
) -> Result<WeylResult> {
    let WeylPacket { rho, k, delta, .. } = *packet;
    let (a, b) = family.psi_range;
    if !(delta > 0.0) || rho - delta <= a || rho + delta >= b {
        return Err(Error::TubeOutsideFamily(format!(
            "tube ({:.6}, {:.6}) is not inside the family range ({a:.6}, {b:.6})",
            rho - delta,
            rho + delta
        )));
    }
    let lambda = TAU * k as f64 / pf.period_at(rho);
    let nodes = composite(rho - delta, rho + delta, 8, 8);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(SAMPLES);
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(SAMPLES);
    let per_level: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|&(s, w)| -> Result<(f64, f64)> {
            let seed = family.seed_at(field, s)?;
            let (pts, period) = orbit_samples(field, seed, scales)?;
            let mut wv: Vec<Complex64> = pts
                .iter()
                .enumerate()
                .map(|(j, &p)| {
                    let theta = TAU * j as f64 / SAMPLES as f64;
                    Complex64::from_polar(bump((field.psi(p) - rho) / delta), k as f64 * theta)
                })
                .collect();
            let orig = wv.clone();
            fft.process(&mut wv);
            let half = SAMPLES as i64 / 2;
            for (m, c) in wv.iter_mut().enumerate() {
                let m = m as i64;
                let freq = if m < half { m } else if m == half { 0 } else { m - SAMPLES as i64 };
                *c *= Complex64::new(0.0, TAU * freq as f64 / period) / SAMPLES as f64;
            }
            ifft.process(&mut wv);
            let dt = period / SAMPLES as f64;
            let mut num = 0.0;
            let mut den = 0.0;
            for (d, o) in wv.iter().zip(&orig) {
                let r = d - Complex64::new(0.0, lambda) * o;
                num += r.norm_sqr();
                den += o.norm_sqr();
            }
            Ok((w * dt * num, w * dt * den))
        })
        .collect::<Result<Vec<_>>>()?;
    let num: f64 = per_level.iter().map(|x| x.0).sum();
    let den: f64 = per_level.iter().map(|x| x.1).sum();
    if den <= 0.0 {
        return Err(Error::Empty("packet has zero norm".into()));
    }
    Ok(WeylResult { family: packet.family, rho, k, delta, lambda, residual: (num / den).sqrt() })
}
