//! Reflectionless solutions with simple and double poles.
//!
//! Every spectral point z_k carries an orientation. A lower point has its
//! pole at z_k in the first column of m (residue data `gamma e^{2it theta}`),
//! an upper point has its pole at z_k in the second column (data carrying
//! `e^{-2it theta}`). Unknowns of the linear system are the Laurent
//! coefficients of m11 and m12 at their poles:
//!
//! ```text
//! m11(z) = 1 + sum_j [ alpha1_j/(z - p_j) + alpha2_j/(z - p_j)^2 ]      p_j = z_j (lower) or conj z_j (upper)
//! m12(z) =     sum_j s_j [ v1_j/(z - p'_j) + v2_j/(z - p'_j)^2 ]        p'_j = conj z_j, s_j = -1 (lower)
//!                                                                       p'_j = z_j,      s_j = +1 (upper)
//! ```
//!
//! with `beta = conj(v)`, and the remaining entries follow from
//! m(z) = sigma2 conj(m(conj z)) sigma2. For all-lower data the system is
//! `[[I, 0, A, B], [0, I, C, D], [-conj A, -conj B, I, 0], [-conj C, -conj D, 0, I]]`
//! with right-hand side `(0, 0, conj gamma0, conj gamma1)`.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::phase::ConePartition;
use crate::scattering::DiscreteDatum;
use crate::{Error, Mat2, Result, C64, I};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Condition estimates above this are flagged (not rejected).
pub const CONDITION_WARNING: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Lower,
    Upper,
}

/// A spectral point with constants already expressed for its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedDatum {
    pub z: C64,
    pub order: u8,
    pub orientation: Orientation,
    pub c0: C64,
    pub c1: C64,
}

impl OrientedDatum {
    pub fn lower(d: &DiscreteDatum) -> Self {
        Self { z: d.z, order: d.order, orientation: Orientation::Lower, c0: d.c0, c1: d.c1 }
    }

    fn is_upper(&self) -> bool {
        self.orientation == Orientation::Upper
    }
}

/// (gamma0, gamma1) at (x, t). Lower: gamma1 = c1 E, gamma0 = (c0 + c1 tau) E;
/// upper: gamma1 = c1 / E, gamma0 = (c0 - c1 tau) / E, where
/// E = e^{2it theta(z_k)} and tau = 2it theta'(z_k) = 2i(2 z_k t + x).
pub fn gamma_coeffs(d: &OrientedDatum, x: f64, t: f64) -> (C64, C64) {
    let z = d.z;
    let arg = 2.0 * I * (z * z * t + z * x);
    let tau = 2.0 * I * (2.0 * z * t + x);
    match d.orientation {
        Orientation::Lower => {
            let e = arg.exp();
            ((d.c0 + d.c1 * tau) * e, d.c1 * e)
        }
        Orientation::Upper => {
            let e = (-arg).exp();
            ((d.c0 - d.c1 * tau) * e, d.c1 * e)
        }
    }
}

/// Finite product prod_i (z - w_i)^{e_i} with integer exponents.
#[derive(Debug, Clone, Default)]
pub struct RationalProduct {
    pub factors: Vec<(C64, i32)>,
}

impl RationalProduct {
    /// a(z) = prod_{j in set} ((z - z_j)/(z - conj z_j))^{n_j}
    pub fn blaschke<'a>(points: impl IntoIterator<Item = (C64, u8)>) -> Self {
        let mut factors = Vec::new();
        for (z, n) in points {
            factors.push((z, n as i32));
            factors.push((z.conj(), -(n as i32)));
        }
        Self { factors }
    }

    /// The product with the factor (z - w)^e removed: h with a = (z - w)^e h.
    pub fn without(&self, w: C64) -> Self {
        Self { factors: self.factors.iter().copied().filter(|(p, _)| *p != w).collect() }
    }

    pub fn value(&self, z: C64) -> C64 {
        self.factors.iter().fold(ONE, |acc, (w, e)| acc * (z - w).powi(*e))
    }

    /// [a, a', a'', a'''] by logarithmic-derivative recursion (z not a zero or pole).
    pub fn derivatives(&self, z: C64) -> [C64; 4] {
        let a = self.value(z);
        let (mut l1, mut l2, mut l3) = (ZERO, ZERO, ZERO);
        for (w, e) in &self.factors {
            let r = 1.0 / (z - w);
            let e = *e as f64;
            l1 += e * r;
            l2 -= e * r * r;
            l3 += 2.0 * e * r * r * r;
        }
        [a, a * l1, a * (l1 * l1 + l2), a * (l1 * l1 * l1 + 3.0 * l1 * l2 + l3)]
    }

    /// a'/a at z.
    pub fn log_derivative(&self, z: C64) -> C64 {
        self.factors.iter().fold(ZERO, |acc, (w, e)| acc + *e as f64 / (z - w))
    }

    /// Derivatives [a, a', a'', a'''] at one of its own zeros w of order n,
    /// via a = (z - w)^n h and Leibniz.
    pub fn derivatives_at_zero(&self, w: C64) -> [C64; 4] {
        let n = self.factors.iter().filter(|(p, _)| *p == w).map(|(_, e)| *e).sum::<i32>();
        let h = self.without(w).derivatives(w);
        let mut out = [ZERO; 4];
        for (m, slot) in out.iter_mut().enumerate() {
            let m = m as i32;
            if n >= 0 && m >= n {
                // a^(m)(w) = m!/(m-n)! h^(m-n)(w)
                let coef: f64 = ((m - n + 1)..=m).map(|k| k as f64).product();
                *slot = coef * h[(m - n) as usize];
            }
        }
        out
    }
}

/// Re-express lower-oriented constants for the orientation in which the points
/// of `upper` carry upper data (m is gauged by a(z)^{sigma3},
/// a(z) = prod_{j in upper} ((z - z_j)/(z - conj z_j))^{n_j}).
pub fn orient(data: &[DiscreteDatum], upper: &[usize]) -> Result<Vec<OrientedDatum>> {
    let a = RationalProduct::blaschke(upper.iter().map(|&k| (data[k].z, data[k].order)));
    data.iter()
        .enumerate()
        .map(|(k, d)| {
            d.validate()?;
            if !upper.contains(&k) {
                let av = a.value(d.z);
                let l1 = a.log_derivative(d.z);
                let a2 = av * av;
                let (c0, c1) = if d.order == 2 { (a2 * (d.c0 + 2.0 * d.c1 * l1), a2 * d.c1) } else { (a2 * d.c0, ZERO) };
                return Ok(OrientedDatum { z: d.z, order: d.order, orientation: Orientation::Lower, c0, c1 });
            }
            let hp = a.without(d.z);
            let h = hp.value(d.z);
            let hl = hp.log_derivative(d.z);
            let h2 = h * h;
            let (c0, c1) = if d.order == 2 {
                (-(d.c0 + 2.0 * d.c1 * hl) / (h2 * d.c1 * d.c1), 1.0 / (h2 * d.c1))
            } else {
                (1.0 / (h2 * d.c0), ZERO)
            };
            Ok(OrientedDatum { z: d.z, order: d.order, orientation: Orientation::Upper, c0, c1 })
        })
        .collect()
}

/// Points whose exponential e^{2it theta(z_k)} grows at (x, t): 2 t Re z_k + x < 0.
pub fn growing_set(data: &[DiscreteDatum], x: f64, t: f64) -> Vec<usize> {
    (0..data.len()).filter(|&k| 2.0 * t * data[k].z.re + x < 0.0).collect()
}

/// The 4N x 4N system at one (x, t). Unknown order: alpha1, alpha2, v1, v2.
#[derive(Debug, Clone)]
pub struct SolitonSystem {
    pub points: Vec<OrientedDatum>,
    pub gamma0: Vec<C64>,
    pub gamma1: Vec<C64>,
    pub a_blk: DMatrix<C64>,
    pub b_blk: DMatrix<C64>,
    pub c_blk: DMatrix<C64>,
    pub d_blk: DMatrix<C64>,
    /// lower-left blocks; the elementwise negated conjugates of A..D for all-lower data
    pub e_blk: DMatrix<C64>,
    pub f_blk: DMatrix<C64>,
    pub g_blk: DMatrix<C64>,
    pub h_blk: DMatrix<C64>,
    pub rhs: DVector<C64>,
}

fn m11_pole(d: &OrientedDatum) -> C64 {
    if d.is_upper() { d.z.conj() } else { d.z }
}

fn m12_pole(d: &OrientedDatum) -> (C64, f64) {
    if d.is_upper() { (d.z, 1.0) } else { (d.z.conj(), -1.0) }
}

pub fn assemble_system(points: &[OrientedDatum], x: f64, t: f64) -> Result<SolitonSystem> {
    let n = points.len();
    for (i, a) in points.iter().enumerate() {
        if !(a.z.im > 0.0) {
            return Err(Error::InvalidDatum(format!("Im z must be positive, got {}", a.z)));
        }
        for b in &points[i + 1..] {
            if (a.z - b.z).norm() < 1e-12 * a.z.norm().max(1.0) {
                return Err(Error::Coincident(a.z, b.z));
            }
        }
    }
    let (gamma0, gamma1): (Vec<C64>, Vec<C64>) = points.iter().map(|d| gamma_coeffs(d, x, t)).unzip();
    let z = |r, c| DMatrix::<C64>::zeros(r, c);
    let (mut a_blk, mut b_blk, mut c_blk, mut d_blk) = (z(n, n), z(n, n), z(n, n), z(n, n));
    let (mut e_blk, mut f_blk, mut g_blk, mut h_blk) = (z(n, n), z(n, n), z(n, n), z(n, n));
    let mut rhs = DVector::<C64>::zeros(4 * n);
    for k in 0..n {
        let pk = &points[k];
        let (g0, g1) = (gamma0[k], gamma1[k]);
        // m12 equations (alpha rows) and m11 equations (v rows)
        let (w, u0, u1, sigma) = if pk.is_upper() {
            (pk.z.conj(), g0.conj(), g1.conj(), -1.0)
        } else {
            (pk.z, g0, g1, 1.0)
        };
        let (wv, v0, v1) = if pk.is_upper() { (pk.z, g0, g1) } else { (pk.z.conj(), g0.conj(), g1.conj()) };
        for j in 0..n {
            let (p, s) = m12_pole(&points[j]);
            let d = w - p;
            let f = -sigma * s;
            a_blk[(k, j)] = f * (u0 / d - u1 / (d * d));
            b_blk[(k, j)] = f * (u0 / (d * d) - 2.0 * u1 / (d * d * d));
            c_blk[(k, j)] = f * (u1 / d);
            d_blk[(k, j)] = f * (u1 / (d * d));
            let d = wv - m11_pole(&points[j]);
            e_blk[(k, j)] = -(v0 / d - v1 / (d * d));
            f_blk[(k, j)] = -(v0 / (d * d) - 2.0 * v1 / (d * d * d));
            g_blk[(k, j)] = -(v1 / d);
            h_blk[(k, j)] = -(v1 / (d * d));
        }
        rhs[2 * n + k] = v0;
        rhs[3 * n + k] = v1;
    }
    Ok(SolitonSystem {
        points: points.to_vec(),
        gamma0,
        gamma1,
        a_blk,
        b_blk,
        c_blk,
        d_blk,
        e_blk,
        f_blk,
        g_blk,
        h_blk,
        rhs,
    })
}

impl SolitonSystem {
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        let n = self.size();
        let mut m = DMatrix::<C64>::identity(4 * n, 4 * n);
        let blocks = [
            (0, 2, &self.a_blk),
            (0, 3, &self.b_blk),
            (1, 2, &self.c_blk),
            (1, 3, &self.d_blk),
            (2, 0, &self.e_blk),
            (2, 1, &self.f_blk),
            (3, 0, &self.g_blk),
            (3, 1, &self.h_blk),
        ];
        for (bi, bj, blk) in blocks {
            m.view_mut((bi * n, bj * n), (n, n)).copy_from(blk);
        }
        m
    }

    /// Dense pivoted LU solve; returns (solution, relative residual, 1-norm condition estimate).
    pub fn solve(&self) -> Result<(DVector<C64>, f64, f64)> {
        let n = self.size();
        if n == 0 {
            return Ok((DVector::zeros(0), 0.0, 1.0));
        }
        let m = self.matrix();
        let lu = m.clone().lu();
        let sol = lu.solve(&self.rhs).ok_or(Error::Singular { cond: f64::INFINITY })?;
        let inv = lu.try_inverse().ok_or(Error::Singular { cond: f64::INFINITY })?;
        let cond = norm1(&m) * norm1(&inv);
        if !cond.is_finite() {
            return Err(Error::Singular { cond });
        }
        if cond > CONDITION_WARNING {
            warn!("soliton system condition estimate {cond:.3e} exceeds {CONDITION_WARNING:.0e}");
        }
        let res = &m * &sol - &self.rhs;
        let scale = norm_inf_mat(&m) * norm_inf(&sol) + norm_inf(&self.rhs);
        let rel = if scale > 0.0 { norm_inf(&res) / scale } else { 0.0 };
        Ok((sol, rel, cond))
    }
}

fn norm1(m: &DMatrix<C64>) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn norm_inf_mat(m: &DMatrix<C64>) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn norm_inf(v: &DVector<C64>) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Solved system at one (x, t).
#[derive(Debug, Clone)]
pub struct SolitonState {
    pub x: f64,
    pub t: f64,
    pub points: Vec<OrientedDatum>,
    pub alpha1: Vec<C64>,
    pub alpha2: Vec<C64>,
    pub beta1: Vec<C64>,
    pub beta2: Vec<C64>,
    pub q: C64,
    /// normwise relative residual of the linear solve
    pub residual: f64,
    pub condition: f64,
}

impl SolitonState {
    fn pole_guard(&self, z: C64) -> Result<()> {
        for d in &self.points {
            for p in [d.z, d.z.conj()] {
                if (z - p).norm() < 1e-12 * p.norm().max(1.0) {
                    return Err(Error::PoleEvaluation(z));
                }
            }
        }
        Ok(())
    }

    fn row_unchecked(&self, z: C64) -> (C64, C64) {
        let mut m11 = ONE;
        let mut m12 = ZERO;
        for (j, d) in self.points.iter().enumerate() {
            let r = 1.0 / (z - m11_pole(d));
            m11 += self.alpha1[j] * r + self.alpha2[j] * r * r;
            let (p, s) = m12_pole(d);
            let r = 1.0 / (z - p);
            m12 += s * (self.beta1[j].conj() * r + self.beta2[j].conj() * r * r);
        }
        (m11, m12)
    }

    /// First row (m11, m12) at z.
    pub fn m_row(&self, z: C64) -> Result<(C64, C64)> {
        self.pole_guard(z)?;
        Ok(self.row_unchecked(z))
    }

    pub fn m_matrix(&self, z: C64) -> Result<Mat2> {
        self.pole_guard(z)?;
        let (m11, m12) = self.row_unchecked(z);
        let (b11, b12) = self.row_unchecked(z.conj());
        Ok([[m11, m12], [-b12.conj(), b11.conj()]])
    }
}

pub fn solve_oriented(points: &[OrientedDatum], x: f64, t: f64) -> Result<SolitonState> {
    let sys = assemble_system(points, x, t)?;
    let n = sys.size();
    let (sol, residual, condition) = sys.solve()?;
    let v1: Vec<C64> = (0..n).map(|j| sol[2 * n + j]).collect();
    let mut q = ZERO;
    for (j, d) in points.iter().enumerate() {
        q += m12_pole(d).1 * v1[j];
    }
    Ok(SolitonState {
        x,
        t,
        points: points.to_vec(),
        alpha1: (0..n).map(|j| sol[j]).collect(),
        alpha2: (0..n).map(|j| sol[n + j]).collect(),
        beta1: v1.iter().map(|v| v.conj()).collect(),
        beta2: (0..n).map(|j| sol[3 * n + j].conj()).collect(),
        q: 2.0 * I * q,
        residual,
        condition,
    })
}

/// q_sol at (x, t); points with growing exponentials are flipped to upper
/// orientation first, which keeps the system well conditioned for large |t|.
pub fn solve_soliton(data: &[DiscreteDatum], x: f64, t: f64) -> Result<SolitonState> {
    let upper = growing_set(data, x, t);
    solve_oriented(&orient(data, &upper)?, x, t)
}

/// The unflipped system (every point lower).
pub fn solve_lower(data: &[DiscreteDatum], x: f64, t: f64) -> Result<SolitonState> {
    for d in data {
        d.validate()?;
    }
    let pts: Vec<OrientedDatum> = data.iter().map(OrientedDatum::lower).collect();
    solve_oriented(&pts, x, t)
}

/// First row of m at z_eval for the orientation in which `upper` points are flipped.
pub fn outer_matrix_row(data: &[DiscreteDatum], upper: &[usize], x: f64, t: f64, z_eval: C64) -> Result<(C64, C64)> {
    solve_oriented(&orient(data, upper)?, x, t)?.m_row(z_eval)
}

/// delta(z_k) and delta'(z_k)/delta(z_k) for each point.
#[derive(Debug, Clone, Copy)]
pub struct DeltaAt {
    pub value: C64,
    pub log_derivative: C64,
}

/// Data seen by the outer model after removing the scalar factor delta:
/// c1 -> c1 delta^{-2}, c0 -> delta^{-2} (c0 - 2 c1 delta'/delta).
/// Returns the data together with the upper set (the points left of z0).
pub fn transform_out(
    data: &[DiscreteDatum],
    delta_minus: &[usize],
    deltas: &[DeltaAt],
) -> Result<(Vec<DiscreteDatum>, Vec<usize>)> {
    if deltas.len() != data.len() {
        return Err(Error::InvalidDatum("one delta value per spectral point required".into()));
    }
    let out = data
        .iter()
        .zip(deltas)
        .map(|(d, dv)| {
            let w = 1.0 / (dv.value * dv.value);
            let mut n = *d;
            n.c1 = d.c1 * w;
            n.c0 = if d.order == 2 { w * (d.c0 - 2.0 * d.c1 * dv.log_derivative) } else { d.c0 * w };
            n
        })
        .collect();
    Ok((out, delta_minus.to_vec()))
}

/// Reduced data for the cone: keep Z(I); absorb the removed points to the
/// left of I into the retained constants through
/// a_L(z) = prod_{j removed, Re z_j < I_lo} ((z - z_j)/(z - conj z_j))^{n_j};
/// points to the right of I are dropped.
pub fn transform_interval(data: &[DiscreteDatum], part: &ConePartition) -> Result<Vec<DiscreteDatum>> {
    let Some((lo, _)) = part.interval else {
        return Ok(data.to_vec());
    };
    let left: Vec<usize> = (0..data.len()).filter(|k| !part.z_i.contains(k) && data[*k].z.re < lo).collect();
    for &k in &part.z_i {
        for &j in &left {
            if (data[k].z - data[j].z.conj()).norm() < 1e-12 {
                return Err(Error::Coincident(data[k].z, data[j].z.conj()));
            }
        }
    }
    let a = RationalProduct::blaschke(left.iter().map(|&j| (data[j].z, data[j].order)));
    Ok(part
        .z_i
        .iter()
        .map(|&k| {
            let d = data[k];
            let av = a.value(d.z);
            let a2 = av * av;
            let mut n = d;
            if d.order == 2 {
                n.c0 = a2 * (d.c0 + 2.0 * d.c1 * a.log_derivative(d.z));
                n.c1 = a2 * d.c1;
            } else {
                n.c0 = a2 * d.c0;
            }
            n
        })
        .collect())
}
