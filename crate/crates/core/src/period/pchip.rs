//! Monotone piecewise cubic Hermite interpolation. Node slopes come from
//! the three-point parabola and are clipped by the Hyman filter, so monotone
//! data stay monotone and smooth data are reproduced to third order.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pchip {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d: Vec<f64>,
}

impl Pchip {
    /// `x` strictly increasing, at least one node.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 1 && y.len() == n);
        let mut d = vec![0.0; n];
        if n == 1 {
            return Self { x, y, d };
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let s: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        if n == 2 {
            d[0] = s[0];
            d[1] = s[0];
            return Self { x, y, d };
        }
        for i in 1..n - 1 {
            if s[i - 1] * s[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                let p = (h[i] * s[i - 1] + h[i - 1] * s[i]) / (h[i - 1] + h[i]);
                let cap = 3.0 * s[i - 1].abs().min(s[i].abs());
                d[i] = p.signum() * p.abs().min(cap);
            }
        }
        let end = |h0: f64, h1: f64, s0: f64, s1: f64| {
            let mut v = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
            if v * s0 <= 0.0 {
                v = 0.0;
            } else if s0 * s1 <= 0.0 && v.abs() > 3.0 * s0.abs() {
                v = 3.0 * s0;
            }
            v
        };
        d[0] = end(h[0], h[1], s[0], s[1]);
        d[n - 1] = end(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
        Self { x, y, d }
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k => (k - 1).min(self.x.len().saturating_sub(2)),
        }
    }

    /// Value at `t`; constant extension outside the nodes.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if n == 1 || t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.y[i]
            + (s3 - 2.0 * s2 + s) * h * self.d[i]
            + (-2.0 * s3 + 3.0 * s2) * self.y[i + 1]
            + (s3 - s2) * h * self.d[i + 1]
    }

    /// `int_a^b eval(t) dt`, exact for the piecewise cubic.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut cuts = vec![a];
        cuts.extend(self.x.iter().copied().filter(|&v| v > a && v < b));
        cuts.push(b);
        let g = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
        let w = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        cuts.windows(2)
            .map(|c| {
                let (lo, hi) = (c[0], c[1]);
                let m = 0.5 * (lo + hi);
                let r = 0.5 * (hi - lo);
                (0..3).map(|k| w[k] * self.eval(m + r * g[k])).sum::<f64>() * r
            })
            .sum()
    }
}
