//! Forward Zakharov-Shabat scattering for decaying profiles.
//!
//! Jost columns are normalized as mu = Phi e^{izx sigma3} and satisfy
//! `mu_x = -iz [sigma3, mu] + Q mu` with `Q = [[0, q], [-conj q, 0]]`.
//! The Volterra equations become initial-value problems started at the
//! grid ends, where the potential is treated as zero.

use std::fmt;
use std::sync::Arc;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ode::Dopri5;
use crate::quad::{circle_derivatives, circle_winding};
use crate::{Error, Mat2, Result, C64, I};

/// One discrete eigenvalue with its time-independent norming data.
/// For order 2, `c1 = A` and `c0 = A B`; for order 1, `c0` is the classical
/// norming constant and `c1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDatum {
    pub z: C64,
    pub order: u8,
    pub c0: C64,
    pub c1: C64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<C64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<C64>,
}

impl DiscreteDatum {
    pub fn new(z: C64, order: u8, c0: C64, c1: C64) -> Result<Self> {
        let d = Self { z, order, c0, c1, b: None, d: None };
        d.validate()?;
        Ok(d)
    }

    /// Double pole from the pair (A, B).
    pub fn double(z: C64, a: C64, b: C64) -> Self {
        Self { z, order: 2, c0: a * b, c1: a, b: None, d: None }
    }

    pub fn simple(z: C64, c0: C64) -> Self {
        Self { z, order: 1, c0, c1: C64::new(0.0, 0.0), b: None, d: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z.im > 0.0) || !self.z.re.is_finite() || !self.z.im.is_finite() {
            return Err(Error::InvalidDatum(format!("Im z must be positive, got {}", self.z)));
        }
        match self.order {
            1 if self.c1 != C64::new(0.0, 0.0) => {
                Err(Error::InvalidDatum(format!("order-1 point {} must have c1 = 0", self.z)))
            }
            1 if self.c0 == C64::new(0.0, 0.0) => {
                Err(Error::InvalidDatum(format!("order-1 point {} has c0 = 0", self.z)))
            }
            2 if self.c1 == C64::new(0.0, 0.0) => {
                Err(Error::InvalidDatum(format!("order-2 point {} has c1 = 0", self.z)))
            }
            1 | 2 => Ok(()),
            o => Err(Error::InvalidDatum(format!("order must be 1 or 2, got {o}"))),
        }
    }

    /// A_k of a double pole.
    pub fn a_const(&self) -> C64 {
        self.c1
    }

    /// B_k of a double pole.
    pub fn b_const(&self) -> C64 {
        self.c0 / self.c1
    }
}

/// Reflection coefficient samples plus discrete data.
/// An empty grid means r vanishes identically.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScatteringData {
    pub z_grid: Vec<f64>,
    pub r: Vec<C64>,
    pub discrete: Vec<DiscreteDatum>,
}

impl ScatteringData {
    pub fn reflectionless(discrete: Vec<DiscreteDatum>) -> Self {
        Self { z_grid: Vec::new(), r: Vec::new(), discrete }
    }

    pub fn validate(&self) -> Result<()> {
        if self.z_grid.len() != self.r.len() {
            return Err(Error::Grid("z_grid and r differ in length".into()));
        }
        if !self.z_grid.is_empty() {
            check_uniform(&self.z_grid).map_err(Error::Grid)?;
        }
        for d in &self.discrete {
            d.validate()?;
        }
        Ok(())
    }

    /// r(z) by linear interpolation on the grid.
    pub fn r_at(&self, z: f64) -> Result<C64> {
        if self.z_grid.is_empty() {
            return Ok(C64::new(0.0, 0.0));
        }
        let lo = self.z_grid[0];
        let hi = *self.z_grid.last().unwrap();
        if !(z >= lo && z <= hi) {
            return Err(Error::GridBracket { lo, hi, z0: z });
        }
        let h = (hi - lo) / (self.z_grid.len() - 1) as f64;
        let s = (z - lo) / h;
        let j = (s.floor() as usize).min(self.z_grid.len() - 2);
        let w = s - j as f64;
        Ok(self.r[j] * (1.0 - w) + self.r[j + 1] * w)
    }
}

pub(crate) fn check_uniform(x: &[f64]) -> std::result::Result<f64, String> {
    if x.len() < 2 {
        return Err("grid needs at least two points".into());
    }
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if !(h > 0.0) {
        return Err("grid must be strictly increasing".into());
    }
    for (j, w) in x.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-8 * h.max(1.0) {
            return Err(format!("grid not uniform at index {j}"));
        }
    }
    Ok(h)
}

type ExactFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Sampled initial profile q0(x). Between samples the profile is a natural
/// cubic spline unless an exact closure was supplied.
#[derive(Clone)]
pub struct InitialProfile {
    pub x_grid: Vec<f64>,
    pub q0: Vec<C64>,
    spline: Vec<C64>,
    h: f64,
    exact: Option<ExactFn>,
}

impl fmt::Debug for InitialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialProfile")
            .field("points", &self.x_grid.len())
            .field("x_min", &self.x_grid.first())
            .field("x_max", &self.x_grid.last())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl InitialProfile {
    pub fn new(x_grid: Vec<f64>, q0: Vec<C64>) -> Result<Self> {
        if x_grid.len() != q0.len() {
            return Err(Error::InvalidProfile("x and q lengths differ".into()));
        }
        if x_grid.len() < 4 {
            return Err(Error::InvalidProfile("need at least 4 samples".into()));
        }
        let h = check_uniform(&x_grid).map_err(Error::InvalidProfile)?;
        if q0.iter().any(|q| !q.re.is_finite() || !q.im.is_finite()) {
            return Err(Error::InvalidProfile("non-finite sample".into()));
        }
        let spline = natural_spline(&q0, h);
        Ok(Self { x_grid, q0, spline, h, exact: None })
    }

    /// Profile sampled from a closure that is also used for evaluation between samples.
    pub fn from_fn<F>(x_min: f64, x_max: f64, points: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        if points < 4 || !(x_max > x_min) {
            return Err(Error::InvalidProfile("bad grid specification".into()));
        }
        let x: Vec<f64> = (0..points)
            .map(|j| x_min + (x_max - x_min) * j as f64 / (points - 1) as f64)
            .collect();
        let q = x.iter().map(|&x| f(x)).collect();
        let mut p = Self::new(x, q)?;
        p.exact = Some(Arc::new(f));
        Ok(p)
    }

    /// amplitude * sech(x)
    pub fn sech(amplitude: f64, x_min: f64, x_max: f64, points: usize) -> Result<Self> {
        Self::from_fn(x_min, x_max, points, move |x| C64::new(amplitude / x.cosh(), 0.0))
    }

    /// amplitude * exp(-x^2)
    pub fn gaussian(amplitude: f64, x_min: f64, x_max: f64, points: usize) -> Result<Self> {
        Self::from_fn(x_min, x_max, points, move |x| C64::new(amplitude * (-x * x).exp(), 0.0))
    }

    pub fn zero(x_min: f64, x_max: f64, points: usize) -> Result<Self> {
        Self::from_fn(x_min, x_max, points, |_| C64::new(0.0, 0.0))
    }

    pub fn x_min(&self) -> f64 {
        self.x_grid[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x_grid[self.x_grid.len() - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.q0.iter().all(|q| *q == C64::new(0.0, 0.0))
    }

    pub fn check_tails(&self, tol: f64) -> Result<()> {
        let peak = self.q0.iter().map(|q| q.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Ok(());
        }
        let n = self.q0.len();
        for j in [0, n - 1] {
            let v = self.q0[j].norm();
            if v > tol * peak {
                return Err(Error::TailTruncation { x: self.x_grid[j], value: v, tol });
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> C64 {
        if let Some(f) = &self.exact {
            return f(x);
        }
        let n = self.x_grid.len();
        let s = ((x - self.x_grid[0]) / self.h).clamp(0.0, (n - 1) as f64);
        let j = (s.floor() as usize).min(n - 2);
        let b = s - j as f64;
        let a = 1.0 - b;
        let h2 = self.h * self.h / 6.0;
        self.q0[j] * a
            + self.q0[j + 1] * b
            + (self.spline[j] * (a * a * a - a) + self.spline[j + 1] * (b * b * b - b)) * h2
    }
}

pub(crate) fn natural_spline(y: &[C64], h: f64) -> Vec<C64> {
    let n = y.len();
    let mut m = vec![C64::new(0.0, 0.0); n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm for M_{i-1} + 4 M_i + M_{i+1} = 6 (second difference)/h^2
    let mut cp = vec![0.0; n];
    let mut dp = vec![C64::new(0.0, 0.0); n];
    for i in 1..n - 1 {
        let rhs = (y[i + 1] - y[i] * 2.0 + y[i - 1]) * (6.0 / (h * h));
        let denom = 4.0 - if i > 1 { cp[i - 1] } else { 0.0 };
        cp[i] = 1.0 / denom;
        dp[i] = (rhs - if i > 1 { dp[i - 1] } else { C64::new(0.0, 0.0) }) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = dp[i] - m[i + 1] * cp[i];
    }
    m
}

#[derive(Debug, Clone, Copy)]
pub struct JostSettings {
    pub rtol: f64,
    pub atol: f64,
    pub tail_tol: f64,
    /// |s11| below this on the real line is reported as a spectral singularity
    pub singular_threshold: f64,
}

impl Default for JostSettings {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, tail_tol: 1e-10, singular_threshold: 1e-8 }
    }
}

/// Jost matrices at the far ends of the grid: mu_minus at the right end,
/// mu_plus at the left end (rows are components, columns are solutions).
/// For non-real z only the analytic columns mu1^- and mu2^+ are defined;
/// the other columns are NaN and `s21` is `None`.
#[derive(Debug, Clone, Copy)]
pub struct JostPair {
    pub z: C64,
    pub x_left: f64,
    pub x_right: f64,
    pub mu_minus: Mat2,
    pub mu_plus: Mat2,
    pub s11: C64,
    pub s21: Option<C64>,
}

/// Analytic Jost columns and their z-derivatives at a common matching point.
#[derive(Debug, Clone, Copy)]
pub struct MatchedColumns {
    pub x: f64,
    pub mu1_minus: [C64; 2],
    pub mu2_plus: [C64; 2],
    pub dmu1_minus: [C64; 2],
    pub dmu2_plus: [C64; 2],
}

impl MatchedColumns {
    pub fn s11(&self) -> C64 {
        self.mu1_minus[0] * self.mu2_plus[1] - self.mu1_minus[1] * self.mu2_plus[0]
    }
}

/// Anything that can produce s11 and the analytic Jost columns in the upper half plane.
pub trait JostSource: Sync {
    fn s11(&self, z: C64) -> Result<C64>;
    fn s11_with_derivative(&self, z: C64) -> Result<(C64, C64)>;
    fn matched_columns(&self, z: C64) -> Result<MatchedColumns>;
}

/// A validated profile together with integration settings.
#[derive(Debug, Clone)]
pub struct Scatterer {
    pub profile: InitialProfile,
    pub settings: JostSettings,
    x_match: f64,
}

impl Scatterer {
    pub fn new(profile: InitialProfile, settings: JostSettings) -> Result<Self> {
        profile.check_tails(settings.tail_tol)?;
        let (mut w, mut wx) = (0.0, 0.0);
        for (x, q) in profile.x_grid.iter().zip(&profile.q0) {
            w += q.norm_sqr();
            wx += x * q.norm_sqr();
        }
        let x_match = if w > 0.0 { wx / w } else { 0.5 * (profile.x_min() + profile.x_max()) };
        Ok(Self { profile, settings, x_match })
    }

    pub fn x_match(&self) -> f64 {
        self.x_match
    }

    fn ode(&self) -> Dopri5 {
        Dopri5::new(self.settings.rtol, self.settings.atol)
    }

    /// First column, started at (1, 0) on the left end.
    fn col1_from_left(&self, z: C64, x_end: f64) -> Result<[C64; 2]> {
        let p = &self.profile;
        self.ode().integrate(
            |x, y: &[C64; 2]| {
                let q = p.eval(x);
                [q * y[1], 2.0 * I * z * y[1] - q.conj() * y[0]]
            },
            p.x_min(),
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            x_end,
        )
    }

    fn col2_from_left(&self, z: C64, x_end: f64) -> Result<[C64; 2]> {
        let p = &self.profile;
        self.ode().integrate(
            |x, y: &[C64; 2]| {
                let q = p.eval(x);
                [-2.0 * I * z * y[0] + q * y[1], -q.conj() * y[0]]
            },
            p.x_min(),
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            x_end,
        )
    }

    fn col1_from_right(&self, z: C64, x_end: f64) -> Result<[C64; 2]> {
        let p = &self.profile;
        self.ode().integrate(
            |x, y: &[C64; 2]| {
                let q = p.eval(x);
                [q * y[1], 2.0 * I * z * y[1] - q.conj() * y[0]]
            },
            p.x_max(),
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            x_end,
        )
    }

    /// First column and its z-derivative, from the left end.
    fn col1_var(&self, z: C64, x_end: f64) -> Result<[C64; 4]> {
        let p = &self.profile;
        let zero = C64::new(0.0, 0.0);
        self.ode().integrate(
            |x, y: &[C64; 4]| {
                let q = p.eval(x);
                let qb = q.conj();
                [
                    q * y[1],
                    2.0 * I * z * y[1] - qb * y[0],
                    q * y[3],
                    2.0 * I * z * y[3] + 2.0 * I * y[1] - qb * y[2],
                ]
            },
            p.x_min(),
            [C64::new(1.0, 0.0), zero, zero, zero],
            x_end,
        )
    }

    /// Second column and its z-derivative, from the right end.
    fn col2_var(&self, z: C64, x_end: f64) -> Result<[C64; 4]> {
        let p = &self.profile;
        let zero = C64::new(0.0, 0.0);
        self.ode().integrate(
            |x, y: &[C64; 4]| {
                let q = p.eval(x);
                let qb = q.conj();
                [
                    -2.0 * I * z * y[0] + q * y[1],
                    -qb * y[0],
                    -2.0 * I * z * y[2] - 2.0 * I * y[0] + q * y[3],
                    -qb * y[2],
                ]
            },
            p.x_max(),
            [zero, C64::new(1.0, 0.0), zero, zero],
            x_end,
        )
    }

    pub fn integrate_jost(&self, z: C64) -> Result<JostPair> {
        if z.im < 0.0 {
            return Err(Error::InvalidBox(format!("z = {z} lies in the lower half plane")));
        }
        let (xl, xr) = (self.profile.x_min(), self.profile.x_max());
        let nan = C64::new(f64::NAN, f64::NAN);
        let m1 = self.col1_from_left(z, xr)?;
        let p2 = self.col2_var(z, xl)?;
        let real = z.im == 0.0;
        let (m2, p1) = if real {
            (self.col2_from_left(z, xr)?, self.col1_from_right(z, xl)?)
        } else {
            ([nan; 2], [nan; 2])
        };
        let s21 = real.then(|| m1[1] * (-2.0 * I * z * xr).exp());
        Ok(JostPair {
            z,
            x_left: xl,
            x_right: xr,
            mu_minus: [[m1[0], m2[0]], [m1[1], m2[1]]],
            mu_plus: [[p1[0], p2[0]], [p1[1], p2[1]]],
            s11: m1[0],
            s21,
        })
    }

    /// (s11, s21) on the real line.
    pub fn transmission(&self, z: f64) -> Result<(C64, C64)> {
        let xr = self.profile.x_max();
        let m1 = self.col1_from_left(C64::new(z, 0.0), xr)?;
        Ok((m1[0], m1[1] * (-2.0 * I * z * xr).exp()))
    }

    /// r = s21/s11 on a real grid; the discrete list is left empty.
    pub fn reflection_coefficient(&self, z_grid: &[f64]) -> Result<ScatteringData> {
        if self.profile.is_zero() {
            return Ok(ScatteringData {
                z_grid: z_grid.to_vec(),
                r: vec![C64::new(0.0, 0.0); z_grid.len()],
                discrete: Vec::new(),
            });
        }
        let r = z_grid
            .par_iter()
            .map(|&z| {
                let (s11, s21) = self.transmission(z)?;
                if s11.norm() < self.settings.singular_threshold {
                    return Err(Error::SpectralSingularity { z, value: s11.norm() });
                }
                Ok(s21 / s11)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScatteringData { z_grid: z_grid.to_vec(), r, discrete: Vec::new() })
    }
}

impl JostSource for Scatterer {
    fn s11(&self, z: C64) -> Result<C64> {
        Ok(self.col1_from_left(z, self.profile.x_max())?[0])
    }

    fn s11_with_derivative(&self, z: C64) -> Result<(C64, C64)> {
        let y = self.col1_var(z, self.profile.x_max())?;
        Ok((y[0], y[2]))
    }

    fn matched_columns(&self, z: C64) -> Result<MatchedColumns> {
        let xm = self.x_match;
        let a = self.col1_var(z, xm)?;
        let b = self.col2_var(z, xm)?;
        Ok(MatchedColumns {
            x: xm,
            mu1_minus: [a[0], a[1]],
            mu2_plus: [b[0], b[1]],
            dmu1_minus: [a[2], a[3]],
            dmu2_plus: [b[2], b[3]],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let b = Self { re_min, re_max, im_min, im_max };
        if !(re_max > re_min && im_max > im_min) {
            return Err(Error::InvalidBox(format!("degenerate box {b:?}")));
        }
        if !(im_min > 0.0) {
            return Err(Error::InvalidBox("box must lie in the open upper half plane".into()));
        }
        Ok(b)
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn diag(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }

    fn contains(&self, z: C64, slack: f64) -> bool {
        let sr = slack * (self.re_max - self.re_min);
        let si = slack * (self.im_max - self.im_min);
        z.re >= self.re_min - sr && z.re <= self.re_max + sr && z.im >= self.im_min - si && z.im <= self.im_max + si
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_max, self.im_max),
            C64::new(self.re_min, self.im_max),
        ]
    }

    fn split(&self, fr: f64, fi: f64) -> [SearchBox; 4] {
        let rm = self.re_min + fr * (self.re_max - self.re_min);
        let im = self.im_min + fi * (self.im_max - self.im_min);
        [
            Self { re_min: self.re_min, re_max: rm, im_min: self.im_min, im_max: im },
            Self { re_min: rm, re_max: self.re_max, im_min: self.im_min, im_max: im },
            Self { re_min: self.re_min, re_max: rm, im_min: im, im_max: self.im_max },
            Self { re_min: rm, re_max: self.re_max, im_min: im, im_max: self.im_max },
        ]
    }

    fn grown(&self, f: f64) -> Self {
        let dr = f * (self.re_max - self.re_min);
        let di = f * (self.im_max - self.im_min);
        Self {
            re_min: self.re_min - dr,
            re_max: self.re_max + dr,
            im_min: (self.im_min - di).max(0.5 * self.im_min),
            im_max: self.im_max + di,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroSettings {
    /// order-2 criterion: |s11'| < double_tol |s11''| at the refined zero
    pub double_tol: f64,
    /// simple zeros closer than this are reported with a warning
    pub merge_radius: f64,
    /// boxes holding two zeros are analysed as a pair below this diagonal
    pub pair_box: f64,
    pub max_depth: u32,
}

impl Default for ZeroSettings {
    fn default() -> Self {
        Self { double_tol: 1e-6, merge_radius: 1e-3, pair_box: 0.1, max_depth: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocatedZero {
    pub z: C64,
    pub multiplicity: usize,
}

fn edge_phase<S: JostSource + ?Sized>(src: &S, a: C64, fa: C64, b: C64, fb: C64, depth: u32) -> Result<f64> {
    let d = (fb / fa).arg();
    if d.abs() < 0.4 {
        return Ok(d);
    }
    if depth > 40 || (b - a).norm() < 1e-10 {
        return Err(Error::ContourTooClose { z: 0.5 * (a + b) });
    }
    let m = 0.5 * (a + b);
    let fm = src.s11(m)?;
    Ok(edge_phase(src, a, fa, m, fm, depth + 1)? + edge_phase(src, m, fm, b, fb, depth + 1)?)
}

/// Zero count (with multiplicity) of s11 inside the box.
pub fn contour_count<S: JostSource + ?Sized>(src: &S, bx: &SearchBox) -> Result<usize> {
    let corners = bx.corners();
    let per_edge = 16;
    let mut total = 0.0;
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        let pts: Vec<C64> = (0..=per_edge).map(|j| a + (b - a) * (j as f64 / per_edge as f64)).collect();
        let vals = pts.par_iter().map(|&z| src.s11(z)).collect::<Result<Vec<_>>>()?;
        for (j, v) in vals.iter().enumerate() {
            if v.norm() < 1e-12 {
                return Err(Error::ContourTooClose { z: pts[j] });
            }
        }
        for j in 0..per_edge {
            total += edge_phase(src, pts[j], vals[j], pts[j + 1], vals[j + 1], 0)?;
        }
    }
    let w = total / (2.0 * std::f64::consts::PI);
    let n = w.round();
    if (w - n).abs() > 0.1 || n < 0.0 {
        return Err(Error::ContourTooClose { z: bx.center() });
    }
    Ok(n as usize)
}

fn newton<S: JostSource + ?Sized>(src: &S, start: C64, mult: f64) -> Result<Option<C64>> {
    let mut z = start;
    for _ in 0..60 {
        let (f, df) = src.s11_with_derivative(z)?;
        if df.norm() == 0.0 {
            return Ok(None);
        }
        let dz = mult * f / df;
        z -= dz;
        if !(z.im > 0.0) || !z.re.is_finite() {
            return Ok(None);
        }
        if dz.norm() < 1e-14 * z.norm().max(1.0) {
            return Ok(Some(z));
        }
    }
    Ok(None)
}

/// Critical point of s11 by the secant method applied to s11'.
fn critical_point<S: JostSource + ?Sized>(src: &S, start: C64, step: f64) -> Result<Option<C64>> {
    let mut za = start;
    let mut ga = src.s11_with_derivative(za)?.1;
    let mut zb = start + C64::new(step, 0.3 * step);
    let mut gb = src.s11_with_derivative(zb)?.1;
    for _ in 0..80 {
        let denom = gb - ga;
        if denom.norm() == 0.0 {
            return Ok(if gb.norm() == 0.0 { Some(zb) } else { None });
        }
        let zn = zb - gb * (zb - za) / denom;
        if !(zn.im > 0.0) {
            return Ok(None);
        }
        za = zb;
        ga = gb;
        zb = zn;
        gb = src.s11_with_derivative(zb)?.1;
        if (zb - za).norm() < 1e-14 * zb.norm().max(1.0) {
            return Ok(Some(zb));
        }
    }
    Ok(None)
}

fn circle_radius(z: C64) -> f64 {
    (0.5 * z.im).min(0.25)
}

/// Two zeros in a small box: one double zero or two simple ones.
fn analyse_pair<S: JostSource + ?Sized>(
    src: &S,
    bx: &SearchBox,
    settings: &ZeroSettings,
) -> Result<Option<Vec<LocatedZero>>> {
    let Some(zc) = critical_point(src, bx.center(), 1e-2 * bx.diag())? else {
        return Ok(None);
    };
    if !bx.contains(zc, 0.25) {
        return Ok(None);
    }
    let rho = circle_radius(zc);
    let mut f = |z: C64| src.s11(z);
    let taylor = circle_derivatives(&mut f, zc, rho, 3, 1e-7)?;
    let (f0, f2, f3) = (taylor[0], taylor[2], taylor[3]);
    if f2.norm() == 0.0 {
        return Ok(None);
    }
    let delta = (-2.0 * f0 / f2).sqrt();
    // s11' and s11'' at the candidate zc + delta, from the local Taylor model
    let d1 = taylor[1] + f2 * delta + f3 * delta * delta / 2.0;
    let d2 = f2 + f3 * delta;
    let winding = circle_winding(&mut f, zc, (4.0 * delta.norm()).max(settings.merge_radius).min(rho), 64)?;
    if d1.norm() < settings.double_tol * d2.norm() && winding == 2 {
        return Ok(Some(vec![LocatedZero { z: zc, multiplicity: 2 }]));
    }
    let a = newton(src, zc + delta, 1.0)?;
    let b = newton(src, zc - delta, 1.0)?;
    match (a, b) {
        (Some(a), Some(b)) if (a - b).norm() > 1e-12 => {
            if (a - b).norm() < settings.merge_radius {
                warn!("near-degenerate pair of simple zeros {a} and {b} (separation {:.3e})", (a - b).norm());
            }
            Ok(Some(vec![LocatedZero { z: a, multiplicity: 1 }, LocatedZero { z: b, multiplicity: 1 }]))
        }
        _ => Ok(None),
    }
}

fn search<S: JostSource + ?Sized>(
    src: &S,
    bx: &SearchBox,
    count: usize,
    depth: u32,
    settings: &ZeroSettings,
    out: &mut Vec<LocatedZero>,
) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    if count == 1 {
        if let Some(z) = newton(src, bx.center(), 1.0)? {
            if bx.contains(z, 1e-9) {
                out.push(LocatedZero { z, multiplicity: 1 });
                return Ok(());
            }
        }
    }
    if count == 2 && bx.diag() < settings.pair_box {
        if let Some(zs) = analyse_pair(src, bx, settings)? {
            out.extend(zs);
            return Ok(());
        }
    }
    if depth >= settings.max_depth {
        return Err(Error::CountMismatch { contour: count, refined: 0 });
    }
    for (fr, fi) in [(0.5, 0.5), (0.5371, 0.4613), (0.4417, 0.5523)] {
        let kids = bx.split(fr, fi);
        let counts: Result<Vec<usize>> = kids.iter().map(|k| contour_count(src, k)).collect();
        match counts {
            Ok(cs) if cs.iter().sum::<usize>() == count => {
                for (k, c) in kids.iter().zip(cs) {
                    search(src, k, c, depth + 1, settings, out)?;
                }
                return Ok(());
            }
            Ok(_) | Err(Error::ContourTooClose { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::CountMismatch { contour: count, refined: 0 })
}

/// Zeros of s11 inside the box, with multiplicity.
pub fn locate_zeros<S: JostSource + ?Sized>(
    src: &S,
    bx: &SearchBox,
    settings: &ZeroSettings,
) -> Result<Vec<LocatedZero>> {
    SearchBox::new(bx.re_min, bx.re_max, bx.im_min, bx.im_max)?;
    let mut current = *bx;
    let mut count = None;
    for attempt in 0..4 {
        match contour_count(src, &current) {
            Ok(n) => {
                count = Some(n);
                break;
            }
            Err(Error::ContourTooClose { z }) if attempt < 3 => {
                warn!("box contour passes near a zero at {z}; perturbing the box");
                current = current.grown(0.0137 * (attempt + 1) as f64);
            }
            Err(e) => return Err(e),
        }
    }
    let count = count.unwrap_or(0);
    let mut out = Vec::new();
    search(src, &current, count, 0, settings, &mut out)?;
    let refined: usize = out.iter().map(|z| z.multiplicity).sum();
    if refined != count {
        return Err(Error::CountMismatch { contour: count, refined });
    }
    out.sort_by(|a, b| a.z.im.total_cmp(&b.z.im).then(a.z.re.total_cmp(&b.z.re)));
    Ok(out)
}

/// Default Cauchy-circle radius: a fraction of the distance to the real axis
/// and to the nearest other zero.
pub fn derivative_radius(zk: C64, others: &[C64], fraction: f64) -> f64 {
    let mut d = zk.im;
    for z in others {
        let s = (zk - z).norm();
        if s > 0.0 {
            d = d.min(s);
        }
    }
    fraction * d
}

/// [s11, s11', s11'', s11'''] at zk by Cauchy integrals at two radii.
pub fn s11_derivatives<S: JostSource + ?Sized>(src: &S, zk: C64, radius: f64, tol: f64) -> Result<[C64; 4]> {
    let mut f = |z: C64| src.s11(z);
    let d = circle_derivatives(&mut f, zk, radius, 3, tol)?;
    Ok([d[0], d[1], d[2], d[3]])
}

fn pick_component(v: &[C64; 2]) -> (usize, bool) {
    let (a, b) = (v[0].norm(), v[1].norm());
    let big = if a >= b { 0 } else { 1 };
    let both = a.min(b) > 1e-6 * a.max(b);
    (big, both)
}

/// Norming data at a confirmed zero of the stated order (extracted at t = 0).
pub fn norming_constants<S: JostSource + ?Sized>(src: &S, zk: C64, order: u8, radius: f64) -> Result<DiscreteDatum> {
    if order != 1 && order != 2 {
        return Err(Error::InvalidDatum(format!("order must be 1 or 2, got {order}")));
    }
    let cols = src.matched_columns(zk)?;
    let e = (2.0 * I * zk * cols.x).exp();
    let ratio = |j: usize| cols.mu1_minus[j] / (e * cols.mu2_plus[j]);
    let (j, both) = pick_component(&cols.mu2_plus);
    let b = ratio(j);
    if both {
        let other = ratio(1 - j);
        if (other - b).norm() > 1e-6 * b.norm().max(1e-300) {
            return Err(Error::NormingMismatch { z: zk, first: b, second: other });
        }
    }
    let derivs = s11_derivatives(src, zk, radius, 1e-8)?;
    if order == 1 {
        let mut out = DiscreteDatum::simple(zk, b / derivs[1]);
        out.b = Some(b);
        return Ok(out);
    }
    let x = cols.x;
    let d = ((-2.0 * I * zk * x).exp() * cols.dmu1_minus[j] - b * cols.dmu2_plus[j]) / cols.mu2_plus[j]
        - 2.0 * I * x * b;
    let a_k = 2.0 * b / derivs[2];
    let b_k = d / b - derivs[3] / (3.0 * derivs[2]);
    let mut out = DiscreteDatum::double(zk, a_k, b_k);
    out.b = Some(b);
    out.d = Some(d);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// mu1^- = 2 mu2^+ e^{2izx} exactly, with s11 = (z - i)^2.
    struct Stub;

    impl JostSource for Stub {
        fn s11(&self, z: C64) -> Result<C64> {
            Ok((z - I) * (z - I))
        }
        fn s11_with_derivative(&self, z: C64) -> Result<(C64, C64)> {
            Ok(((z - I) * (z - I), 2.0 * (z - I)))
        }
        fn matched_columns(&self, z: C64) -> Result<MatchedColumns> {
            let x = 0.7;
            let v = [C64::new(0.3, 0.1), C64::new(-1.2, 0.5)];
            let e = (2.0 * I * z * x).exp();
            Ok(MatchedColumns {
                x,
                mu1_minus: [2.0 * e * v[0], 2.0 * e * v[1]],
                mu2_plus: v,
                dmu1_minus: [C64::new(0.0, 0.0); 2],
                dmu2_plus: [C64::new(0.0, 0.0); 2],
            })
        }
    }

    #[test]
    fn stub_norming_ratio_is_two() {
        let d = norming_constants(&Stub, I, 2, 0.2).unwrap();
        assert!((d.b.unwrap() - 2.0).norm() < 1e-14);
        // A = 2 b / s11'' with s11'' = 2
        assert!((d.a_const() - 2.0).norm() < 1e-10);
    }

    #[test]
    fn stub_derivatives() {
        let d = s11_derivatives(&Stub, I, 0.25, 1e-10).unwrap();
        assert!((d[2] - 2.0).norm() < 1e-12);
        assert!(d[3].norm() < 1e-10);
    }

    #[test]
    fn stub_double_zero_located() {
        let bx = SearchBox::new(-1.0, 1.3, 0.2, 2.1).unwrap();
        let z = locate_zeros(&Stub, &bx, &ZeroSettings::default()).unwrap();
        assert_eq!(z.len(), 1);
        assert_eq!(z[0].multiplicity, 2);
        assert!((z[0].z - I).norm() < 1e-10);
    }

    #[test]
    fn spline_reproduces_smooth_profile() {
        let x: Vec<f64> = (0..401).map(|j| -10.0 + 0.05 * j as f64).collect();
        let q: Vec<C64> = x.iter().map(|x| C64::new((-x * x).exp(), 0.5 / x.cosh())).collect();
        let p = InitialProfile::new(x, q).unwrap();
        for &s in &[-1.234f64, 0.01, 2.71] {
            let exact = C64::new((-s * s).exp(), 0.5 / s.cosh());
            assert!((p.eval(s) - exact).norm() < 1e-5);
        }
    }

    #[test]
    fn zero_profile_is_trivial() {
        let sc = Scatterer::new(InitialProfile::zero(-5.0, 5.0, 101).unwrap(), JostSettings::default()).unwrap();
        let jp = sc.integrate_jost(C64::new(0.7, 0.0)).unwrap();
        assert_eq!(jp.s11, C64::new(1.0, 0.0));
        assert_eq!(jp.s21.unwrap(), C64::new(0.0, 0.0));
        let data = sc.reflection_coefficient(&[-1.0, 0.0, 1.0]).unwrap();
        assert!(data.r.iter().all(|r| *r == C64::new(0.0, 0.0)));
    }

    #[test]
    fn tail_check_rejects_truncated_profile() {
        let p = InitialProfile::sech(1.0, -3.0, 3.0, 101).unwrap();
        assert!(matches!(Scatterer::new(p, JostSettings::default()), Err(Error::TailTruncation { .. })));
    }
}
