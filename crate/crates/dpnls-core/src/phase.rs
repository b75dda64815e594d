//! Phase function, partial transmission delta and T, stationary-point data,
//! spectrum and cone partitions, and the modulated reflection amplitude.

use std::f64::consts::PI;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::io::fmt17;
use crate::quad::panel_near;
use crate::scattering::{natural_spline, DiscreteDatum, ScatteringData};
use crate::{Error, Result, C64, I};

/// theta = z^2 + x z / t and its z-derivative.
pub fn theta(z: C64, x: f64, t: f64) -> Result<(C64, C64)> {
    if t == 0.0 {
        return Err(Error::ZeroTime);
    }
    Ok((z * z + z * (x / t), 2.0 * z + x / t))
}

/// nu = -log(1 + |r|^2) / (2 pi)
pub fn nu_of(r_abs: f64) -> f64 {
    -(r_abs * r_abs).ln_1p() / (2.0 * PI)
}

/// Boundary value selector on the cut (-inf, z0].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy)]
struct Tail {
    value: f64,
    kappa: f64,
    length: f64,
}

/// nu(s) on the real line: spline through the grid samples and exponential
/// tails beyond the grid ends.
#[derive(Debug, Clone)]
pub struct NuField {
    s0: f64,
    h: f64,
    nu: Vec<f64>,
    m2: Vec<f64>,
    left: Option<Tail>,
    right: Option<Tail>,
}

fn tail(end: f64, inner: f64, h: f64) -> Option<Tail> {
    if end == 0.0 {
        return None;
    }
    let kappa = if inner / end > 1.0 { ((inner / end).ln() / h).max(0.5) } else { 1.0 / h };
    Some(Tail { value: end, kappa, length: 36.0 / kappa })
}

impl NuField {
    pub fn new(scattering: &ScatteringData) -> Self {
        let n = scattering.z_grid.len();
        if n < 2 {
            return Self { s0: 0.0, h: 1.0, nu: Vec::new(), m2: Vec::new(), left: None, right: None };
        }
        let s0 = scattering.z_grid[0];
        let h = (scattering.z_grid[n - 1] - s0) / (n - 1) as f64;
        let nu: Vec<f64> = scattering.r.iter().map(|r| nu_of(r.norm())).collect();
        let as_c: Vec<C64> = nu.iter().map(|v| C64::new(*v, 0.0)).collect();
        let m2 = natural_spline(&as_c, h).iter().map(|c| c.re).collect();
        let left = tail(nu[0], nu[1], h);
        let right = tail(nu[n - 1], nu[n - 2], h);
        Self { s0, h, nu, m2, left, right }
    }

    pub fn is_zero(&self) -> bool {
        self.nu.iter().all(|v| *v == 0.0)
    }

    fn grid_end(&self) -> f64 {
        self.s0 + self.h * (self.nu.len().max(1) - 1) as f64
    }

    /// Support including the tails.
    pub fn support(&self) -> (f64, f64) {
        let lo = self.s0 - self.left.map_or(0.0, |t| t.length);
        let hi = self.grid_end() + self.right.map_or(0.0, |t| t.length);
        (lo, hi)
    }

    pub fn value(&self, s: f64) -> f64 {
        self.value_and_slope(s).0
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.value_and_slope(s).1
    }

    fn value_and_slope(&self, s: f64) -> (f64, f64) {
        let n = self.nu.len();
        if n < 2 {
            return (0.0, 0.0);
        }
        let end = self.grid_end();
        if s < self.s0 {
            return match self.left {
                Some(t) if self.s0 - s <= t.length => {
                    let v = t.value * (-t.kappa * (self.s0 - s)).exp();
                    (v, t.kappa * v)
                }
                _ => (0.0, 0.0),
            };
        }
        if s > end {
            return match self.right {
                Some(t) if s - end <= t.length => {
                    let v = t.value * (-t.kappa * (s - end)).exp();
                    (v, -t.kappa * v)
                }
                _ => (0.0, 0.0),
            };
        }
        let u = (s - self.s0) / self.h;
        let j = (u.floor() as usize).min(n - 2);
        let b = u - j as f64;
        let a = 1.0 - b;
        let h = self.h;
        let v = a * self.nu[j]
            + b * self.nu[j + 1]
            + ((a * a * a - a) * self.m2[j] + (b * b * b - b) * self.m2[j + 1]) * h * h / 6.0;
        let dv = (self.nu[j + 1] - self.nu[j]) / h
            + h / 6.0 * (-(3.0 * a * a - 1.0) * self.m2[j] + (3.0 * b * b - 1.0) * self.m2[j + 1]);
        (v, dv)
    }

    /// Panel breakpoints on [a, b]: grid nodes plus geometrically growing tail panels.
    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pts = vec![a, b];
        let n = self.nu.len();
        for j in 0..n {
            pts.push(self.s0 + self.h * j as f64);
        }
        let end = self.grid_end();
        for (base, tl, sign) in [(self.s0, self.left, -1.0), (end, self.right, 1.0)] {
            if let Some(t) = tl {
                let mut step = self.h;
                let mut off = step;
                while off < t.length {
                    pts.push(base + sign * off);
                    step *= 2.0;
                    off += step;
                }
                pts.push(base + sign * t.length);
            }
        }
        pts.retain(|p| *p >= a && *p <= b);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        pts
    }

    fn integrate<F: FnMut(f64) -> C64>(&self, mut f: F, a: f64, b: f64, near: Option<C64>) -> C64 {
        if !(b > a) {
            return C64::new(0.0, 0.0);
        }
        let pts = self.breakpoints(a, b);
        let mut acc = C64::new(0.0, 0.0);
        for w in pts.windows(2) {
            acc += panel_near(&mut f, w[0], w[1], near, 0);
        }
        acc
    }

    /// Integral of nu over (-inf, upper].
    pub fn integral(&self, upper: f64) -> f64 {
        let (lo, hi) = self.support();
        self.integrate(|s| C64::new(self.value(s), 0.0), lo, upper.min(hi), None).re
    }

    /// C(z) = int_{-inf}^{upper} nu(s) / (s - z) ds, with Plemelj boundary values on the cut.
    pub fn cauchy(&self, z: C64, upper: f64, side: Option<Side>) -> Result<C64> {
        let on_cut = z.im == 0.0 && z.re < upper;
        if on_cut && side.is_none() {
            return Err(Error::OnCut(z));
        }
        if self.is_zero() {
            return Ok(C64::new(0.0, 0.0));
        }
        let (lo, sup_hi) = self.support();
        let hi = upper.min(sup_hi);
        if !(hi > lo) {
            return Ok(C64::new(0.0, 0.0));
        }
        if on_cut {
            let s = z.re;
            if s > lo && s < hi {
                let ns = self.value(s);
                let dns = self.derivative(s);
                let pv = self.integrate(
                    |u| {
                        let d = u - s;
                        C64::new(if d.abs() < 1e-300 { dns } else { (self.value(u) - ns) / d }, 0.0)
                    },
                    lo,
                    hi,
                    None,
                ) + ns * ((hi - s) / (s - lo)).ln();
                let sign = if side == Some(Side::Plus) { 1.0 } else { -1.0 };
                return Ok(pv + I * (sign * PI * ns));
            }
            return Ok(self.integrate(|u| C64::new(self.value(u) / (u - s), 0.0), lo, hi, Some(z)));
        }
        let ns = self.value(z.re.clamp(lo, hi));
        let body = self.integrate(|u| (self.value(u) - ns) / (u - z), lo, hi, Some(z));
        Ok(body + ns * ((hi - z).ln() - (lo - z).ln()))
    }

    /// int_{-inf}^{upper} nu(s) / (s - z)^2 ds for z off the real line.
    pub fn cauchy2(&self, z: C64, upper: f64) -> C64 {
        let (lo, sup_hi) = self.support();
        self.integrate(|u| self.value(u) / ((u - z) * (u - z)), lo, upper.min(sup_hi), Some(z))
    }

    /// beta(z0, z0) = int_{-inf}^{z0} (nu(s) - chi(s) nu(z0)) / (s - z0) ds,
    /// chi the indicator of (z0 - 1, z0).
    pub fn beta_at(&self, z0: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let (lo, _) = self.support();
        let n0 = self.value(z0);
        let dn0 = self.derivative(z0);
        let far = self.integrate(|s| C64::new(self.value(s) / (s - z0), 0.0), lo, (z0 - 1.0).max(lo), None);
        let near = self.integrate(
            |s| {
                let d = s - z0;
                C64::new(if d.abs() < 1e-300 { dn0 } else { (self.value(s) - n0) / d }, 0.0)
            },
            z0 - 1.0,
            z0,
            None,
        );
        (far + near).re
    }

    /// Stieltjes integral int_{-inf}^{z0} ln|s - z0| nu'(s) ds, on panels graded toward z0.
    pub fn log_stieltjes(&self, z0: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let (lo, _) = self.support();
        if !(z0 > lo) {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut b = z0;
        let mut len = 1e-14;
        // geometric panels [z0 - 2 len, z0 - len] near the log singularity
        let mut edges = vec![z0];
        while len < 1.0 {
            edges.push(z0 - len);
            len *= 2.0;
        }
        edges.retain(|e| *e > lo);
        for &a in edges.iter().skip(1) {
            acc += self.integrate(|s| C64::new((z0 - s).ln() * self.derivative(s), 0.0), a, b, None).re;
            b = a;
        }
        acc + self.integrate(|s| C64::new((z0 - s).abs().ln() * self.derivative(s), 0.0), lo, b, None).re
    }
}

/// Stationary point and boundary data at (x, t).
#[derive(Debug, Clone)]
pub struct PhaseContext {
    pub x: f64,
    pub t: f64,
    pub z0: f64,
    pub nu0: f64,
    pub t0_z0: C64,
    pub r_at_z0: C64,
    pub delta_minus: Vec<usize>,
}

impl PhaseContext {
    /// Uses the discrete data carried by `scattering` for the partition.
    pub fn new(x: f64, t: f64, scattering: &ScatteringData) -> Result<Self> {
        if t == 0.0 {
            return Err(Error::ZeroTime);
        }
        let z0 = -x / (2.0 * t);
        let r_at_z0 = scattering.r_at(z0)?;
        let part = partition(&scattering.discrete, z0, None)?;
        let nu = NuField::new(scattering);
        let t0_z0 = t0_with(&nu, z0, &part.delta_minus, &scattering.discrete)?;
        Ok(Self { x, t, z0, nu0: nu_of(r_at_z0.norm()), t0_z0, r_at_z0, delta_minus: part.delta_minus })
    }
}

/// delta(z) = exp(i int_{-inf}^{z0} nu(s)/(s - z) ds).
pub fn delta_fn(z: C64, scattering: &ScatteringData, z0: f64, side: Option<Side>) -> Result<C64> {
    delta_with(&NuField::new(scattering), z, z0, side)
}

pub fn delta_with(nu: &NuField, z: C64, z0: f64, side: Option<Side>) -> Result<C64> {
    Ok((I * nu.cauchy(z, z0, side)?).exp())
}

/// delta'(z)/delta(z) = i int nu(s)/(s - z)^2 ds, z off the real line.
pub fn delta_log_derivative(nu: &NuField, z: C64, z0: f64) -> Result<C64> {
    if z.im == 0.0 {
        return Err(Error::OnCut(z));
    }
    Ok(I * nu.cauchy2(z, z0))
}

fn guard_radius(zk: C64) -> f64 {
    1e-9 * zk.norm().max(1.0)
}

fn blaschke(z: C64, delta_minus: &[usize], data: &[DiscreteDatum]) -> Result<C64> {
    let mut p = C64::new(1.0, 0.0);
    for &k in delta_minus {
        let zk = data[k].z;
        if (z - zk).norm() < guard_radius(zk) {
            return Err(Error::NearPole { z, pole: zk });
        }
        p *= ((z - zk.conj()) / (z - zk)).powi(data[k].order as i32);
    }
    Ok(p)
}

/// T(z) = prod_{k in delta_minus} ((z - conj z_k)/(z - z_k))^{n_k} delta(z),
/// n_k the pole order.
#[allow(non_snake_case)]
pub fn T_fn(
    z: C64,
    delta_minus: &[usize],
    data: &[DiscreteDatum],
    scattering: &ScatteringData,
    z0: f64,
    side: Option<Side>,
) -> Result<C64> {
    t_with(&NuField::new(scattering), z, delta_minus, data, z0, side)
}

pub fn t_with(
    nu: &NuField,
    z: C64,
    delta_minus: &[usize],
    data: &[DiscreteDatum],
    z0: f64,
    side: Option<Side>,
) -> Result<C64> {
    Ok(blaschke(z, delta_minus, data)? * delta_with(nu, z, z0, side)?)
}

/// T0(z0) = prod_{k in delta_minus} ((z0 - conj z_k)/(z0 - z_k))^{n_k} e^{i beta(z0, z0)}.
#[allow(non_snake_case)]
pub fn T0_at_z0(delta_minus: &[usize], data: &[DiscreteDatum], scattering: &ScatteringData, z0: f64) -> Result<C64> {
    if !scattering.z_grid.is_empty() {
        scattering.r_at(z0)?;
    }
    t0_with(&NuField::new(scattering), z0, delta_minus, data)
}

pub fn t0_with(nu: &NuField, z0: f64, delta_minus: &[usize], data: &[DiscreteDatum]) -> Result<C64> {
    let p = blaschke(C64::new(z0, 0.0), delta_minus, data)?;
    Ok(p * (I * nu.beta_at(z0)).exp())
}

/// Space-time cone x = x0 + v t with x0 in [x1, x2], v in [v1, v2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub x1: f64,
    pub x2: f64,
    pub v1: f64,
    pub v2: f64,
}

impl Cone {
    pub fn new(x1: f64, x2: f64, v1: f64, v2: f64) -> Result<Self> {
        if !(x1 <= x2 && v1 <= v2) {
            return Err(Error::Grid(format!("cone not ordered: x1={x1} x2={x2} v1={v1} v2={v2}")));
        }
        Ok(Self { x1, x2, v1, v2 })
    }

    /// I = [-v2/2, -v1/2]
    pub fn interval(&self) -> (f64, f64) {
        (-self.v2 / 2.0, -self.v1 / 2.0)
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        let eps = 1e-12 * (1.0 + x.abs());
        let (lo, hi) = if t >= 0.0 {
            (self.x1 + self.v1 * t, self.x2 + self.v2 * t)
        } else {
            (self.x1 + self.v2 * t, self.x2 + self.v1 * t)
        };
        x >= lo - eps && x <= hi + eps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConePartition {
    pub cone: Option<Cone>,
    pub interval: Option<(f64, f64)>,
    pub delta_minus: Vec<usize>,
    pub delta_plus: Vec<usize>,
    pub z_i: Vec<usize>,
    /// +inf when every point lies in Z(I)
    pub mu_i: f64,
}

/// Split the spectrum by Re z_k against z0, and against the cone interval.
pub fn partition(data: &[DiscreteDatum], z0: f64, cone: Option<&Cone>) -> Result<ConePartition> {
    let mut delta_minus = Vec::new();
    let mut delta_plus = Vec::new();
    for (k, d) in data.iter().enumerate() {
        if d.z.re < z0 {
            delta_minus.push(k);
        } else {
            if d.z.re == z0 {
                warn!("spectral point {} has Re z = z0 = {z0}; assigned to the upper set", d.z);
            }
            delta_plus.push(k);
        }
    }
    let interval = cone.map(|c| c.interval());
    let mut z_i = Vec::new();
    let mut mu_i = f64::INFINITY;
    for (k, d) in data.iter().enumerate() {
        match interval {
            Some((a, b)) if d.z.re < a || d.z.re > b => {
                let dist = if d.z.re < a { a - d.z.re } else { d.z.re - b };
                mu_i = mu_i.min(d.z.im * dist);
            }
            _ => z_i.push(k),
        }
    }
    Ok(ConePartition { cone: cone.copied(), interval, delta_minus, delta_plus, z_i, mu_i })
}

/// r0 = r(z0) T0(z0)^{-2} e^{2i(nu(z0) log(2 sqrt t) - t z0^2)}.
pub fn r0_modulated(ctx: &PhaseContext, t: f64) -> Result<C64> {
    if !(t > 0.0) {
        return Err(Error::TimeGuard { t, min: 0.0 });
    }
    if ctx.r_at_z0 == C64::new(0.0, 0.0) {
        return Ok(C64::new(0.0, 0.0));
    }
    let phase = 2.0 * (ctx.nu0 * (2.0 * t.sqrt()).ln() - t * ctx.z0 * ctx.z0);
    Ok(ctx.r_at_z0 / (ctx.t0_z0 * ctx.t0_z0) * C64::from_polar(1.0, phase))
}

/// Linear-interpolation error estimate for r at z0: full grid vs every other sample.
pub fn interpolation_check(scattering: &ScatteringData, z0: f64) -> Result<f64> {
    let full = scattering.r_at(z0)?;
    let coarse = ScatteringData {
        z_grid: scattering.z_grid.iter().step_by(2).copied().collect(),
        r: scattering.r.iter().step_by(2).copied().collect(),
        discrete: Vec::new(),
    };
    match coarse.r_at(z0) {
        Ok(c) => Ok((c - full).norm()),
        Err(_) => Ok(f64::INFINITY),
    }
}

/// Debug dump of delta and T at the given points: z, delta, T (real/imag pairs).
pub fn dump_delta_csv(
    path: &Path,
    points: &[C64],
    delta_minus: &[usize],
    data: &[DiscreteDatum],
    scattering: &ScatteringData,
    z0: f64,
) -> Result<()> {
    let nu = NuField::new(scattering);
    let mut out = String::from("re_z,im_z,re_delta,im_delta,re_T,im_T\n");
    for &z in points {
        let side = (z.im == 0.0 && z.re < z0).then_some(Side::Plus);
        let d = delta_with(&nu, z, z0, side)?;
        let t = t_with(&nu, z, delta_minus, data, z0, side)?;
        out.push_str(&[z.re, z.im, d.re, d.im, t.re, t.im].map(fmt17).join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c;

    fn bump(scale: f64) -> ScatteringData {
        let z_grid: Vec<f64> = (0..=1200).map(|j| -6.0 + 0.01 * j as f64).collect();
        let r = z_grid.iter().map(|z| c(scale * (-z * z).exp(), 0.3 * scale * z * (-z * z).exp())).collect();
        ScatteringData { z_grid, r, discrete: Vec::new() }
    }

    #[test]
    fn theta_identities() {
        let (th, dth) = theta(c(0.0, 1.0), 0.0, 1.0).unwrap();
        assert!((th + 1.0).norm() < 1e-15);
        assert!((dth - c(0.0, 2.0)).norm() < 1e-15);
        let (x, t) = (1.3, 0.7);
        let z0 = -x / (2.0 * t);
        let (th, dth) = theta(c(z0, 0.0), x, t).unwrap();
        assert!((th + z0 * z0).norm() < 1e-14 && dth.norm() < 1e-14);
        let z = c(0.4, 0.9);
        let (th, _) = theta(z, x, t).unwrap();
        assert!(((I * th).re + 2.0 * z.im * (z.re - z0)).abs() < 1e-14);
        assert!(theta(z, x, 0.0).is_err());
    }

    #[test]
    fn nu_values() {
        assert_eq!(nu_of(0.0), 0.0);
        assert!((nu_of(1.0) + 2f64.ln() / (2.0 * PI)).abs() < 1e-16);
        assert!((nu_of(1.0) + 0.1103178).abs() < 1e-7);
        assert!((nu_of(3.0) + 10f64.ln() / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn delta_trivial_for_zero_r() {
        let s = ScatteringData::default();
        assert_eq!(delta_fn(c(0.3, 0.2), &s, 0.0, None).unwrap(), c(1.0, 0.0));
        assert!(delta_fn(c(-0.3, 0.0), &s, 0.0, None).is_err());
        assert_eq!(delta_fn(c(-0.3, 0.0), &s, 0.0, Some(Side::Plus)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn delta_jump_on_cut() {
        let s = bump(0.8);
        let z0 = 0.4;
        for &u in &[-1.3, -0.5, 0.0, 0.21] {
            let dp = delta_fn(c(u, 0.0), &s, z0, Some(Side::Plus)).unwrap();
            let dm = delta_fn(c(u, 0.0), &s, z0, Some(Side::Minus)).unwrap();
            let r = s.r_at(u).unwrap();
            let expect = (-2.0 * PI * NuField::new(&s).value(u)).exp();
            assert!((dp / dm - expect).norm() < 1e-10, "u={u}");
            assert!(((dp / dm).re - (1.0 + r.norm_sqr())).abs() < 1e-4);
        }
    }

    #[test]
    fn boundary_values_are_limits() {
        let s = bump(0.8);
        let z0 = 0.4;
        let u = -0.37;
        let dp = delta_fn(c(u, 0.0), &s, z0, Some(Side::Plus)).unwrap();
        let near = delta_fn(c(u, 1e-7), &s, z0, None).unwrap();
        assert!((dp - near).norm() < 1e-5);
        let dm = delta_fn(c(u, 0.0), &s, z0, Some(Side::Minus)).unwrap();
        let near = delta_fn(c(u, -1e-7), &s, z0, None).unwrap();
        assert!((dm - near).norm() < 1e-5);
    }

    #[test]
    fn delta_decays_to_one() {
        let s = bump(0.5);
        let nu = NuField::new(&s);
        let z0 = 0.5;
        let total = nu.integral(z0);
        for &r in &[50.0, 200.0] {
            let z = c(0.0, r);
            let d = delta_with(&nu, z, z0, None).unwrap();
            // z (delta - 1) -> -i int nu
            let coef = z * (d - 1.0);
            assert!((coef - (-I * total)).norm() < 5.0 / r);
        }
    }

    #[test]
    fn t_schwarz_symmetry() {
        let s = bump(0.7);
        let data = vec![DiscreteDatum::double(c(-0.5, 0.7), c(1.0, 0.0), c(0.0, 0.0))];
        for &z in &[c(0.3, 0.4), c(-1.1, 0.05), c(2.0, -0.6)] {
            let t = T_fn(z, &[0], &data, &s, 0.2, None).unwrap();
            let tb = T_fn(z.conj(), &[0], &data, &s, 0.2, None).unwrap();
            assert!((tb.conj() * t - 1.0).norm() < 1e-10);
        }
        assert!(matches!(T_fn(c(-0.5, 0.7), &[0], &data, &s, 0.2, None), Err(Error::NearPole { .. })));
    }

    #[test]
    fn beta_matches_stieltjes() {
        let s = bump(0.9);
        let nu = NuField::new(&s);
        for &z0 in &[-0.7, 0.0, 0.35] {
            assert!((nu.beta_at(z0) + nu.log_stieltjes(z0)).abs() < 1e-9, "z0={z0}");
        }
    }

    #[test]
    fn partition_examples() {
        let data = vec![
            DiscreteDatum::simple(c(1.0, 0.5), c(1.0, 0.0)),
            DiscreteDatum::simple(c(-1.0, 0.5), c(1.0, 0.0)),
        ];
        let p = partition(&data, 0.0, None).unwrap();
        assert_eq!(p.delta_minus, vec![1]);
        assert_eq!(p.delta_plus, vec![0]);
        assert!(p.mu_i.is_infinite());

        let data = vec![DiscreteDatum::simple(c(1.0, 1.0), c(1.0, 0.0))];
        let cone = Cone::new(0.0, 0.0, -1.0, 1.0).unwrap();
        let p = partition(&data, 0.0, Some(&cone)).unwrap();
        assert!(p.z_i.is_empty());
        assert!((p.mu_i - 0.5).abs() < 1e-15);
    }

    #[test]
    fn t0_trivial_cases() {
        let s = ScatteringData::default();
        let data = vec![DiscreteDatum::double(c(-0.5, 0.7), c(1.0, 0.0), c(0.0, 0.0))];
        assert_eq!(T0_at_z0(&[], &data, &s, 0.3).unwrap(), c(1.0, 0.0));
        let t0 = T0_at_z0(&[0], &data, &s, 0.3).unwrap();
        assert!((t0.norm() - 1.0).abs() < 1e-14);
        let zk = data[0].z;
        let expect = ((c(0.3, 0.0) - zk.conj()) / (c(0.3, 0.0) - zk)).powi(2);
        assert!((t0 - expect).norm() < 1e-14);
    }
}
