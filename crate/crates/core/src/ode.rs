//! Adaptive Dormand–Prince 5(4) stepping for small autonomous systems.

use crate::error::{Error, Result};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One explicit Dormand–Prince step of size `h`; returns the fifth-order
/// solution and the embedded error vector.
pub fn dopri_step<const N: usize>(f: &impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], h: f64) -> ([f64; N], [f64; N]) {
    let mut k = [[0.0f64; N]; 7];
    k[0] = f(y);
    for s in 1..7 {
        let mut yi = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for i in 0..N {
                yi[i] += h * A[s][j] * kj[i];
            }
        }
        k[s] = f(&yi);
    }
    let mut yn = *y;
    let mut err = [0.0; N];
    for s in 0..7 {
        for i in 0..N {
            yn[i] += h * B[s] * k[s][i];
            err[i] += h * E[s] * k[s][i];
        }
    }
    (yn, err)
}

/// Error-controlled stepper. Only the first `controlled` components enter
/// the error norm; `atol` is absolute in state units.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub rtol: f64,
    pub atol: f64,
    pub h: f64,
    pub h_min: f64,
    pub controlled: usize,
}

impl Stepper {
    pub fn new(rtol: f64, atol: f64, h0: f64) -> Self {
        Self { rtol, atol, h: h0, h_min: h0 * 1e-12, controlled: 2 }
    }

    /// Take one accepted step from `y`. Returns the new state and the step
    /// size used; the next proposal is stored in `self.h`.
    pub fn step<const N: usize>(
        &mut self,
        f: &impl Fn(&[f64; N]) -> [f64; N],
        y: &[f64; N],
        h_max: f64,
    ) -> Result<([f64; N], f64)> {
        let mut h = self.h.min(h_max);
        let m = self.controlled.min(N);
        loop {
            let (yn, e) = dopri_step(f, y, h);
            let mut norm = 0.0;
            for i in 0..m {
                let sc = self.atol + self.rtol * y[i].abs().max(yn[i].abs());
                norm += (e[i] / sc).powi(2);
            }
            let norm = (norm / m as f64).sqrt();
            if !norm.is_finite() {
                h *= 0.2;
            } else if norm <= 1.0 {
                let fac = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                self.h = h * fac;
                return Ok((yn, h));
            } else {
                h *= (0.9 * norm.powf(-0.2)).clamp(0.2, 1.0);
            }
            if h < self.h_min {
                return Err(Error::Integrator(format!("step size underflow at {:?}", &y[..m])));
            }
        }
    }
}

/// Classical fixed-step RK4 for planar systems.
pub fn rk4(f: &impl Fn([f64; 2]) -> [f64; 2], y: [f64; 2], h: f64) -> [f64; 2] {
    let k1 = f(y);
    let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
    let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
    let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_returns_after_two_pi() {
        let f = |p: &[f64; 2]| [-p[1], p[0]];
        let mut s = Stepper::new(1e-12, 1e-14, 0.01);
        let mut y = [1.0, 0.0];
        let mut t = 0.0;
        let t_end = std::f64::consts::TAU;
        while t < t_end {
            let (yn, h) = s.step(&f, &y, t_end - t).unwrap();
            y = yn;
            t += h;
        }
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10, "{y:?}");
    }

    #[test]
    fn single_step_is_fifth_order() {
        let f = |p: &[f64; 1]| [p[0]];
        let e = |h: f64| (dopri_step(&f, &[1.0], h).0[0] - h.exp()).abs();
        let ratio = e(0.1) / e(0.05);
        assert!(ratio > 50.0, "{ratio}");
    }
}
