//! Sampled stream functions with bicubic Hermite interpolation.
//!
//! Node derivatives come from fourth-order finite differences (one-sided
//! near non-periodic edges), so the interpolant is C¹ and `O(h^4)` accurate
//! for smooth data.

use std::fmt::Write as _;

use super::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::Point;

#[derive(Debug, Clone)]
pub struct GridData {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub periodic_x: bool,
    pub periodic_y: bool,
    values: Vec<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
    fxy: Vec<f64>,
}

/// First derivative of a 1D line of samples, fourth order.
fn fd1(f: &[f64], h: f64, periodic: bool) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if periodic {
        for i in 0..n {
            let at = |k: isize| f[(i as isize + k).rem_euclid(n as isize) as usize];
            out[i] = (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h);
        }
        return out;
    }
    for i in 2..n - 2 {
        out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    }
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
    let m = n - 1;
    out[m] = (25.0 * f[m] - 48.0 * f[m - 1] + 36.0 * f[m - 2] - 16.0 * f[m - 3] + 3.0 * f[m - 4]) / (12.0 * h);
    out[m - 1] = (3.0 * f[m] + 10.0 * f[m - 1] - 18.0 * f[m - 2] + 6.0 * f[m - 3] - f[m - 4]) / (12.0 * h);
    out
}

fn diff_x(v: &[f64], nx: usize, ny: usize, h: f64, periodic: bool) -> Vec<f64> {
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        let row = &v[j * nx..(j + 1) * nx];
        out[j * nx..(j + 1) * nx].copy_from_slice(&fd1(row, h, periodic));
    }
    out
}

fn diff_y(v: &[f64], nx: usize, ny: usize, h: f64, periodic: bool) -> Vec<f64> {
    let mut out = vec![0.0; nx * ny];
    let mut col = vec![0.0; ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = v[j * nx + i];
        }
        for (j, d) in fd1(&col, h, periodic).into_iter().enumerate() {
            out[j * nx + i] = d;
        }
    }
    out
}

// Cubic Hermite basis and derivatives on [0, 1].
fn hermite(s: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        [2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2],
        [6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s],
        [12.0 * s - 6.0, 6.0 * s - 4.0, -12.0 * s + 6.0, 6.0 * s - 2.0],
    )
}

impl GridData {
    /// Build from node values, `values[j * nx + i]` at `(x0 + i dx, y0 + j dy)`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_samples(
        domain: &DomainSpec,
        nx: usize,
        ny: usize,
        x0: f64,
        y0: f64,
        dx: f64,
        dy: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if nx < 8 || ny < 8 {
            return Err(Error::GridFormat(format!("grid must be at least 8x8, got {nx}x{ny}")));
        }
        if values.len() != nx * ny {
            return Err(Error::GridFormat(format!("expected {} values, got {}", nx * ny, values.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::GridFormat(format!("non-finite value at index {k}")));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite() && x0.is_finite() && y0.is_finite()) {
            return Err(Error::GridFormat("cell size must be positive and finite".into()));
        }
        let (px, py) = domain.periods();
        let [bx0, bx1, by0, by1] = domain.bounding_box();
        let check = |periodic: Option<f64>, n: usize, o: f64, h: f64, lo: f64, hi: f64, axis: &str| -> Result<()> {
            let slack = 1e-9 * (hi - lo);
            match periodic {
                Some(l) => {
                    if ((n as f64) * h - l).abs() > slack {
                        return Err(Error::GridFormat(format!(
                            "periodic {axis}: n*d = {} does not match period {l}",
                            n as f64 * h
                        )));
                    }
                }
                None => {
                    if o > lo + slack || o + (n - 1) as f64 * h < hi - slack {
                        return Err(Error::GridFormat(format!("grid does not cover the domain in {axis}")));
                    }
                }
            }
            Ok(())
        };
        check(px, nx, x0, dx, bx0, bx1, "x")?;
        check(py, ny, y0, dy, by0, by1, "y")?;
        let periodic_x = px.is_some();
        let periodic_y = py.is_some();
        let fx = diff_x(&values, nx, ny, dx, periodic_x);
        let fy = diff_y(&values, nx, ny, dy, periodic_y);
        let fxy = diff_x(&fy, nx, ny, dx, periodic_x);
        Ok(Self { nx, ny, x0, y0, dx, dy, periodic_x, periodic_y, values, fx, fy, fxy })
    }

    /// Sample `f` at the nodes of a grid that covers `domain`. Non-periodic
    /// directions get `n` nodes spanning the bounding box.
    pub fn sample(domain: &DomainSpec, nx: usize, ny: usize, f: impl Fn(Point) -> f64) -> Result<Self> {
        let [bx0, bx1, by0, by1] = domain.bounding_box();
        let (px, py) = domain.periods();
        let dx = if px.is_some() { (bx1 - bx0) / nx as f64 } else { (bx1 - bx0) / (nx - 1) as f64 };
        let dy = if py.is_some() { (by1 - by0) / ny as f64 } else { (by1 - by0) / (ny - 1) as f64 };
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f([bx0 + i as f64 * dx, by0 + j as f64 * dy]));
            }
        }
        Self::from_samples(domain, nx, ny, bx0, by0, dx, dy, values)
    }

    /// Parse the text format, checking the declared kind against `domain`.
    pub fn parse(text: &str, domain: &DomainSpec) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::GridFormat("empty file".into()))?;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("grid") || tokens.next() != Some("v1") {
            return Err(Error::GridFormat("header must start with `grid v1`".into()));
        }
        let mut kind = None;
        let mut nums = std::collections::BTreeMap::new();
        for t in tokens {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| Error::GridFormat(format!("malformed header token `{t}`")))?;
            if k == "kind" {
                kind = Some(v.to_string());
            } else {
                let x: f64 = v.parse().map_err(|_| Error::GridFormat(format!("bad number for `{k}`")))?;
                nums.insert(k.to_string(), x);
            }
        }
        let kind = kind.ok_or_else(|| Error::GridFormat("header is missing kind".into()))?;
        if kind != domain.kind_name() {
            return Err(Error::GridFormat(format!(
                "header kind `{kind}` does not match domain `{}`",
                domain.kind_name()
            )));
        }
        let get = |k: &str| nums.get(k).copied().ok_or_else(|| Error::GridFormat(format!("header is missing {k}")));
        let nx = get("nx")?;
        let ny = get("ny")?;
        if nx.fract() != 0.0 || ny.fract() != 0.0 || nx < 0.0 || ny < 0.0 {
            return Err(Error::GridFormat("nx and ny must be non-negative integers".into()));
        }
        let mut values = Vec::new();
        for line in lines {
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::GridFormat(format!("bad value `{tok}`")))?;
                values.push(v);
            }
        }
        Self::from_samples(domain, nx as usize, ny as usize, get("x0")?, get("y0")?, get("dx")?, get("dy")?, values)
    }

    pub fn to_text(&self, domain: &DomainSpec) -> String {
        let mut s = format!(
            "grid v1 kind={} nx={} ny={} x0={:e} y0={:e} dx={:e} dy={:e}\n",
            domain.kind_name(),
            self.nx,
            self.ny,
            self.x0,
            self.y0,
            self.dx,
            self.dy
        );
        for row in self.values.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Node values of `-(d/dx psi_x + d/dy psi_y)`, used as the vorticity of a
    /// sampled field.
    pub fn laplacian_nodes(&self) -> Vec<f64> {
        let fxx = diff_x(&self.fx, self.nx, self.ny, self.dx, self.periodic_x);
        let fyy = diff_y(&self.fy, self.nx, self.ny, self.dy, self.periodic_y);
        fxx.iter().zip(&fyy).map(|(a, b)| a + b).collect()
    }

    /// Same node layout with different values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        let fx = diff_x(&values, self.nx, self.ny, self.dx, self.periodic_x);
        let fy = diff_y(&values, self.nx, self.ny, self.dy, self.periodic_y);
        let fxy = diff_x(&fy, self.nx, self.ny, self.dx, self.periodic_x);
        Self { values, fx, fy, fxy, ..self.clone() }
    }

    fn locate(n: usize, o: f64, h: f64, periodic: bool, x: f64) -> (usize, usize, f64) {
        let u = (x - o) / h;
        if periodic {
            let c = u.floor();
            let i = (c as i64).rem_euclid(n as i64) as usize;
            (i, (i + 1) % n, u - c)
        } else {
            let c = u.floor().clamp(0.0, (n - 2) as f64);
            let i = c as usize;
            (i, i + 1, u - c)
        }
    }

    /// `(psi, [psi_x, psi_y], [psi_xx, psi_xy, psi_yy])` at `p`.
    pub fn eval(&self, p: Point) -> (f64, Point, [f64; 3]) {
        let (i0, i1, s) = Self::locate(self.nx, self.x0, self.dx, self.periodic_x, p[0]);
        let (j0, j1, t) = Self::locate(self.ny, self.y0, self.dy, self.periodic_y, p[1]);
        let (hs, dhs, ddhs) = hermite(s);
        let (ht, dht, ddht) = hermite(t);
        let (dx, dy) = (self.dx, self.dy);
        let mut out = [0.0f64; 6];
        for (a, i) in [i0, i1].into_iter().enumerate() {
            for (b, j) in [j0, j1].into_iter().enumerate() {
                let k = j * self.nx + i;
                // Coefficients against (value basis, slope basis) in each direction.
                let c = [
                    (self.values[k], 2 * a, 2 * b),
                    (self.fx[k] * dx, 2 * a + 1, 2 * b),
                    (self.fy[k] * dy, 2 * a, 2 * b + 1),
                    (self.fxy[k] * dx * dy, 2 * a + 1, 2 * b + 1),
                ];
                for (coef, bs, bt) in c {
                    out[0] += coef * hs[bs] * ht[bt];
                    out[1] += coef * dhs[bs] * ht[bt];
                    out[2] += coef * hs[bs] * dht[bt];
                    out[3] += coef * ddhs[bs] * ht[bt];
                    out[4] += coef * dhs[bs] * dht[bt];
                    out[5] += coef * hs[bs] * ddht[bt];
                }
            }
        }
        (
            out[0],
            [out[1] / dx, out[2] / dy],
            [out[3] / (dx * dx), out[4] / (dx * dy), out[5] / (dy * dy)],
        )
    }
}
