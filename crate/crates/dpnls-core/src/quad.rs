//! Quadrature helpers: Gauss-Legendre panels and Cauchy-circle derivatives.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::{Error, Result, C64};

pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on [-1, 1] by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> C64>(&self, mut f: F, a: f64, b: f64) -> C64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }
}

pub fn gl16() -> &'static GaussLegendre {
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(16))
}

/// One panel, bisected while it is long compared with its distance to `near`
/// (a point where the integrand varies rapidly).
pub fn panel_near<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64, near: Option<C64>, depth: u32) -> C64 {
    if let Some(z) = near {
        let len = b - a;
        let dx = if z.re < a { a - z.re } else if z.re > b { z.re - b } else { 0.0 };
        let dist = dx.hypot(z.im);
        if depth < 60 && len > 0.5 * dist && len > 1e-14 {
            let m = 0.5 * (a + b);
            return panel_near(f, a, m, near, depth + 1) + panel_near(f, m, b, near, depth + 1);
        }
    }
    gl16().integrate(|x| f(x), a, b)
}

/// Taylor data f(c), f'(c), ..., f^(n)(c) from m trapezoid samples on a circle.
pub fn cauchy_derivatives<F>(f: &mut F, center: C64, radius: f64, m: usize, n_max: usize) -> Result<Vec<C64>>
where
    F: FnMut(C64) -> Result<C64>,
{
    let samples: Vec<C64> = (0..m)
        .map(|j| f(center + C64::from_polar(radius, 2.0 * PI * j as f64 / m as f64)))
        .collect::<Result<_>>()?;
    Ok(taylor_from_samples(&samples, radius, n_max))
}

fn taylor_from_samples(samples: &[C64], radius: f64, n_max: usize) -> Vec<C64> {
    let m = samples.len();
    let mut out = Vec::with_capacity(n_max + 1);
    let mut fact = 1.0;
    for n in 0..=n_max {
        if n > 0 {
            fact *= n as f64;
        }
        let mut acc = C64::new(0.0, 0.0);
        for (j, s) in samples.iter().enumerate() {
            acc += s * C64::from_polar(1.0, -2.0 * PI * (n * j) as f64 / m as f64);
        }
        out.push(acc / m as f64 * fact / radius.powi(n as i32));
    }
    out
}

/// Derivatives at two radii (r and 0.6 r) with node doubling until both agree
/// to `tol` relative to max(1, |f^(n)|). Returns the values from radius r.
pub fn circle_derivatives<F>(f: &mut F, center: C64, radius: f64, n_max: usize, tol: f64) -> Result<Vec<C64>>
where
    F: FnMut(C64) -> Result<C64>,
{
    let radii = [radius, 0.6 * radius];
    let mut samples: [Vec<C64>; 2] = [Vec::new(), Vec::new()];
    let mut m = 32usize;
    let mut achieved = f64::INFINITY;
    while m <= 512 {
        for (s, r) in samples.iter_mut().zip(radii) {
            // reuse the previous nodes: they are the even nodes of the refined set
            let old = std::mem::take(s);
            let mut fresh = Vec::with_capacity(m);
            for j in 0..m {
                if !old.is_empty() && j % 2 == 0 {
                    fresh.push(old[j / 2]);
                } else {
                    fresh.push(f(center + C64::from_polar(r, 2.0 * PI * j as f64 / m as f64))?);
                }
            }
            *s = fresh;
        }
        let d0 = taylor_from_samples(&samples[0], radii[0], n_max);
        let d1 = taylor_from_samples(&samples[1], radii[1], n_max);
        achieved = d0
            .iter()
            .zip(&d1)
            .map(|(a, b)| (a - b).norm() / a.norm().max(1.0))
            .fold(0.0, f64::max);
        if achieved <= tol {
            return Ok(d0);
        }
        m *= 2;
    }
    Err(Error::CircleQuadrature { z: center, achieved })
}

/// Winding number of f around a circle, from m samples (refined while any
/// consecutive phase jump exceeds 0.5 rad).
pub fn circle_winding<F>(f: &mut F, center: C64, radius: f64, m: usize) -> Result<i64>
where
    F: FnMut(C64) -> Result<C64>,
{
    let mut m = m.max(8);
    loop {
        let vals: Vec<C64> = (0..m)
            .map(|j| f(center + C64::from_polar(radius, 2.0 * PI * j as f64 / m as f64)))
            .collect::<Result<_>>()?;
        let mut total = 0.0;
        let mut max_jump = 0.0f64;
        for j in 0..m {
            let d = (vals[(j + 1) % m] / vals[j]).arg();
            max_jump = max_jump.max(d.abs());
            total += d;
        }
        if max_jump < 0.5 || m >= 4096 {
            return Ok((total / (2.0 * PI)).round() as i64);
        }
        m *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(16);
        let v = gl.integrate(|x| C64::new(x.powi(30), 0.0), -1.0, 1.0);
        assert!((v.re - 2.0 / 31.0).abs() < 1e-15);
        let w: f64 = gl.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomial_stub_derivatives() {
        let i = C64::new(0.0, 1.0);
        let mut f = |z: C64| Ok((z - i) * (z - i));
        let d = circle_derivatives(&mut f, i, 0.25, 3, 1e-12).unwrap();
        assert!(d[0].norm() < 1e-14);
        assert!(d[1].norm() < 1e-13);
        assert!((d[2] - 2.0).norm() < 1e-12);
        assert!(d[3].norm() < 1e-10);
    }

    #[test]
    fn exponential_derivatives() {
        let z0 = C64::new(0.3, 0.7);
        let mut f = |z: C64| Ok((2.0 * z).exp());
        let d = circle_derivatives(&mut f, z0, 0.3, 3, 1e-10).unwrap();
        for (n, dn) in d.iter().enumerate() {
            let exact = (2.0 * z0).exp() * 2f64.powi(n as i32);
            assert!((dn - exact).norm() < 1e-10 * exact.norm());
        }
    }

    #[test]
    fn winding_counts_double_zero() {
        let z0 = C64::new(0.1, 1.0);
        let mut f = |z: C64| Ok((z - z0) * (z - z0) * (z + 3.0));
        assert_eq!(circle_winding(&mut f, z0, 0.5, 16).unwrap(), 2);
    }
}
