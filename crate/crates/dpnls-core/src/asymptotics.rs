//! Long-time asymptotics inside a cone: q ~ q_sol(sigma_I) + t^{-1/2} f.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;

use crate::io::write_rows;
use crate::phase::{
    delta_log_derivative, delta_with, nu_of, partition, r0_modulated, Cone, NuField, PhaseContext,
};
use crate::scattering::{DiscreteDatum, ScatteringData};
use crate::soliton::{outer_matrix_row, solve_soliton, transform_interval, transform_out, DeltaAt};
use crate::{Error, Mat2, Result, C64, I};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma(w): Lanczos (g = 7, 9 terms) for Re w >= 1/2, reflection otherwise.
pub fn complex_gamma(w: C64) -> Result<C64> {
    if w.re <= 0.0 && w.im == 0.0 && w.re == w.re.round() {
        return Err(Error::GammaPole(w));
    }
    if w.re < 0.5 {
        let s = (PI * w).sin();
        if s.norm() == 0.0 {
            return Err(Error::GammaPole(w));
        }
        return Ok(PI / (s * complex_gamma(1.0 - w)?));
    }
    let w = w - 1.0;
    let mut acc = C64::new(LANCZOS[0], 0.0);
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (w + k as f64);
    }
    let t = w + LANCZOS_G + 0.5;
    // sqrt(2 pi) t^{w + 1/2} e^{-t} acc, through logs to avoid overflow
    Ok(((0.5 * (2.0 * PI).ln()) + (w + 0.5) * t.ln() - t).exp() * acc)
}

/// O(1/lambda) coefficient data of the parabolic-cylinder model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PCCoefficients {
    pub nu: f64,
    pub r0: C64,
    pub beta12: C64,
    pub beta21: C64,
}

impl PCCoefficients {
    /// [[0, -i beta12], [i beta21, 0]]
    pub fn m1(&self) -> Mat2 {
        let z = C64::new(0.0, 0.0);
        [[z, -I * self.beta12], [I * self.beta21, z]]
    }
}

pub fn pc_coefficients(r0: C64, nu: f64) -> Result<PCCoefficients> {
    if nu == 0.0 {
        return Err(Error::ZeroNu(r0));
    }
    let g = complex_gamma(C64::new(0.0, -nu))?;
    let beta12 =
        (2.0 * PI).sqrt() * C64::from_polar(1.0, PI / 4.0) * (-PI * nu / 2.0).exp() / (r0 * g);
    Ok(PCCoefficients { nu, r0, beta12, beta21: nu / beta12 })
}

/// alpha(z0) with |alpha|^2 = |nu(z0)| and
/// arg alpha = pi/4 + arg Gamma(i nu) - arg r(z0) - 4 sum_{k in delta_minus} n_k arg(z0 - z_k)
///             - 2 int_{-inf}^{z0} ln|s - z0| d nu(s).
pub fn alpha_z0(
    ctx: &PhaseContext,
    delta_minus: &[usize],
    data: &[DiscreteDatum],
    scattering: &ScatteringData,
) -> Result<C64> {
    let r = scattering.r_at(ctx.z0)?;
    let nu0 = nu_of(r.norm());
    if nu0 == 0.0 {
        return Err(Error::ZeroNu(r));
    }
    let nu = NuField::new(scattering);
    let mut arg = PI / 4.0 + complex_gamma(C64::new(0.0, nu0))?.arg() - r.arg();
    for &k in delta_minus {
        arg -= 4.0 * data[k].order as f64 * C64::new(ctx.z0 - data[k].z.re, -data[k].z.im).arg();
    }
    arg -= 2.0 * nu.log_stieltjes(ctx.z0);
    Ok(C64::from_polar(nu0.abs().sqrt(), arg))
}

/// x^2/(2t) - nu log(4t)
pub fn phase_shift(x: f64, t: f64, nu: f64) -> f64 {
    x * x / (2.0 * t) - nu * (4.0 * t).ln()
}

/// E1 = m_out m1 m_out^{-1} / (2 i sqrt t), inverse by adjugate.
pub fn e1_matrix(m_out: &Mat2, pc: &PCCoefficients, t: f64) -> Result<Mat2> {
    if !(t > 0.0) {
        return Err(Error::TimeGuard { t, min: 0.0 });
    }
    let det = m_out[0][0] * m_out[1][1] - m_out[0][1] * m_out[1][0];
    if (det - 1.0).norm() > 1e-6 {
        return Err(Error::NearSingular(det));
    }
    let inv = [[m_out[1][1], -m_out[0][1]], [-m_out[1][0], m_out[0][0]]];
    let p = mat_mul(&mat_mul(m_out, &pc.m1()), &inv);
    let s = 1.0 / (2.0 * I * t.sqrt());
    Ok([[p[0][0] * s, p[0][1] * s], [p[1][0] * s, p[1][1] * s]])
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Scalar f from the (1,2) entry of E1: f = i * (2 i sqrt(t) (E1)_12).
/// The extra factor i relative to the bare reconstruction is pinned by the
/// small-data limit (see the README).
pub fn f_from_e1(e1: &Mat2, t: f64) -> C64 {
    I * (2.0 * I * t.sqrt() * e1[0][1])
}

/// f = beta12 eta11^2 + beta21 eta12^2
pub fn f_scalar(pc: &PCCoefficients, eta: (C64, C64)) -> C64 {
    pc.beta12 * eta.0 * eta.0 + pc.beta21 * eta.1 * eta.1
}

#[derive(Debug, Clone, Copy)]
pub struct AsymptoticSettings {
    pub t_min: f64,
    /// below this |r(z0)| the dispersive term is zero
    pub r_floor: f64,
}

impl Default for AsymptoticSettings {
    fn default() -> Self {
        Self { t_min: 5.0, r_floor: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticValue {
    pub x: f64,
    pub t: f64,
    pub z0: f64,
    pub nu: f64,
    pub q_sol_part: C64,
    pub f_part: C64,
    pub q_total: C64,
    /// size of the neglected remainder, t^{-3/4}
    pub error_order: f64,
}

/// Reduced discrete data for the cone at (x, t), and the indices (into the
/// reduced list) of points carrying upper orientation.
pub fn cone_data(
    x: f64,
    t: f64,
    scattering: &ScatteringData,
    cone: Option<&Cone>,
) -> Result<(Vec<DiscreteDatum>, Vec<usize>)> {
    let z0 = -x / (2.0 * t);
    let data = &scattering.discrete;
    let part = partition(data, z0, cone)?;
    let nu = NuField::new(scattering);
    let deltas = data
        .iter()
        .map(|d| {
            Ok(DeltaAt { value: delta_with(&nu, d.z, z0, None)?, log_derivative: delta_log_derivative(&nu, d.z, z0)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let (out, _) = transform_out(data, &part.delta_minus, &deltas)?;
    let reduced = transform_interval(&out, &part)?;
    let upper = part
        .z_i
        .iter()
        .enumerate()
        .filter(|(_, k)| part.delta_minus.contains(k))
        .map(|(i, _)| i)
        .collect();
    Ok((reduced, upper))
}

/// q_asym(x, t) = q_sol(x, t; sigma_I) + t^{-1/2} f.
pub fn q_asymptotic(
    x: f64,
    t: f64,
    scattering: &ScatteringData,
    cone: Option<&Cone>,
    settings: &AsymptoticSettings,
) -> Result<AsymptoticValue> {
    if !(t > 0.0) || t < settings.t_min {
        return Err(Error::TimeGuard { t, min: settings.t_min.max(0.0) });
    }
    if let Some(c) = cone {
        if !c.contains(x, t) {
            return Err(Error::OutsideCone { x, t });
        }
    }
    let z0 = -x / (2.0 * t);
    let (reduced, upper) = cone_data(x, t, scattering, cone)?;
    let q_sol_part = solve_soliton(&reduced, x, t)?.q;
    let r = if scattering.z_grid.is_empty() { C64::new(0.0, 0.0) } else { scattering.r_at(z0)? };
    let nu0 = nu_of(r.norm());
    let f_part = if r.norm() < settings.r_floor {
        C64::new(0.0, 0.0)
    } else {
        let ctx = PhaseContext::new(x, t, scattering)?;
        let pc = pc_coefficients(r0_modulated(&ctx, t)?, ctx.nu0)?;
        let eta = outer_matrix_row(&reduced, &upper, x, t, C64::new(z0, 0.0))?;
        f_scalar(&pc, eta)
    };
    Ok(AsymptoticValue {
        x,
        t,
        z0,
        nu: nu0,
        q_sol_part,
        f_part,
        q_total: q_sol_part + f_part / t.sqrt(),
        error_order: t.powf(-0.75),
    })
}

/// Parallel evaluation over (x, t) points; output order follows the input.
pub fn asymptotic_sweep(
    points: &[(f64, f64)],
    scattering: &ScatteringData,
    cone: Option<&Cone>,
    settings: &AsymptoticSettings,
) -> Result<Vec<AsymptoticValue>> {
    points.par_iter().map(|&(x, t)| q_asymptotic(x, t, scattering, cone, settings)).collect()
}

pub fn write_asymptotic_csv(path: &Path, values: &[AsymptoticValue]) -> Result<()> {
    let rows: Vec<Vec<f64>> = values
        .iter()
        .map(|v| {
            vec![v.x, v.t, v.q_sol_part.re, v.q_sol_part.im, v.f_part.re, v.f_part.im, v.q_total.re, v.q_total.im]
        })
        .collect();
    write_rows(path, &["x", "t", "re_q_sol", "im_q_sol", "re_f", "im_f", "re_q_total", "im_q_total"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c;

    #[test]
    fn gamma_special_values() {
        assert!((complex_gamma(c(1.0, 0.0)).unwrap() - 1.0).norm() < 1e-14);
        assert!((complex_gamma(c(0.5, 0.0)).unwrap() - PI.sqrt()).norm() < 1e-14);
        assert!((complex_gamma(c(5.0, 0.0)).unwrap() - 24.0).norm() < 1e-12);
        assert!(complex_gamma(c(0.0, 0.0)).is_err());
        assert!(complex_gamma(c(-3.0, 0.0)).is_err());
    }

    #[test]
    fn gamma_against_reference_values() {
        // reference values from an arbitrary-precision evaluation
        let cases = [
            (c(0.0, 0.3), c(-0.502_830_752_942_961_99, -3.060_910_077_970_461_7)),
            (c(0.5, -2.0), c(0.089_855_176_706_431_636, 0.060_493_760_292_887_568)),
            (c(-1.3, 4.7), c(7.720_207_734_741_664_2e-5, -5.089_690_762_031_500_7e-5)),
            (c(3.2, 1.1), c(0.838_645_512_690_457_4, 1.763_559_209_748_764_1)),
        ];
        for (w, g) in cases {
            let v = complex_gamma(w).unwrap();
            assert!((v - g).norm() < 1e-12 * g.norm(), "{w}: {v} vs {g}");
        }
    }

    #[test]
    fn gamma_modulus_identity() {
        for y in [0.3, -0.11, 1.7, 4.9] {
            let g = complex_gamma(c(0.0, y)).unwrap().norm_sqr();
            let exact = PI / (y * (PI * y).sinh());
            assert!((g - exact).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn beta_modulus_and_product() {
        for nu in [-0.05, -0.11, -0.3] {
            let r_abs = ((-2.0 * PI * nu).exp() - 1.0).sqrt();
            let r0 = C64::from_polar(r_abs, 0.77);
            let pc = pc_coefficients(r0, nu).unwrap();
            assert!((pc.beta12.norm_sqr() - nu.abs()).abs() < 1e-12);
            assert!((pc.beta12 * pc.beta21 - nu).norm() < 1e-15);
            assert!((pc.beta21 + pc.beta12.conj()).norm() < 1e-12);
            let rot = pc_coefficients(r0 * C64::from_polar(1.0, 0.4), nu).unwrap();
            assert!((rot.beta12 - pc.beta12 * C64::from_polar(1.0, -0.4)).norm() < 1e-14);
        }
        assert!(pc_coefficients(c(0.1, 0.0), 0.0).is_err());
    }

    #[test]
    fn e1_identity_conjugation() {
        let pc = pc_coefficients(c(0.3, 0.2), nu_of(c(0.3, 0.2).norm())).unwrap();
        let id = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        let t = 9.0;
        let e1 = e1_matrix(&id, &pc, t).unwrap();
        assert!((e1[0][1] - (-I * pc.beta12) / (2.0 * I * 3.0)).norm() < 1e-15);
        assert!((f_from_e1(&e1, t) - pc.beta12).norm() < 1e-14);
    }

    #[test]
    fn e1_matrix_matches_scalar_route() {
        let pc = pc_coefficients(c(-0.2, 0.5), nu_of(c(-0.2, 0.5).norm())).unwrap();
        // a unimodular first row on the real axis: [[a, b], [-conj b, conj a]]
        let (a, b) = (c(0.6, 0.3), c(0.2, -0.4));
        let s = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (a, b) = (a / s, b / s);
        let m = [[a, b], [-b.conj(), a.conj()]];
        let t = 20.0;
        let e1 = e1_matrix(&m, &pc, t).unwrap();
        assert!((e1[0][0] + e1[1][1]).norm() < 1e-15);
        assert!((f_from_e1(&e1, t) - f_scalar(&pc, (a, b))).norm() < 1e-14);
        let bad = [[c(2.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(2.0, 0.0)]];
        assert!(e1_matrix(&bad, &pc, t).is_err());
    }

    fn gaussian_r() -> ScatteringData {
        let z_grid: Vec<f64> = (0..=1200).map(|j| -6.0 + 0.01 * j as f64).collect();
        let r = z_grid.iter().map(|z| c(0.4 * (-z * z).exp(), 0.1 * z * (-z * z).exp())).collect();
        ScatteringData { z_grid, r, discrete: Vec::new() }
    }

    #[test]
    fn alpha_cross_route() {
        let mut s = gaussian_r();
        s.discrete.push(DiscreteDatum::double(c(-0.8, 0.6), c(1.0, 0.2), c(0.3, -0.1)));
        s.discrete.push(DiscreteDatum::simple(c(0.9, 0.4), c(0.5, 0.5)));
        for (x, t) in [(0.0, 10.0), (12.0, 10.0), (-7.0, 30.0)] {
            let ctx = PhaseContext::new(x, t, &s).unwrap();
            let a = alpha_z0(&ctx, &ctx.delta_minus, &s.discrete, &s).unwrap();
            assert!((a.norm_sqr() - ctx.nu0.abs()).abs() < 1e-12);
            let pc = pc_coefficients(r0_modulated(&ctx, t).unwrap(), ctx.nu0).unwrap();
            let expect = a * C64::from_polar(1.0, phase_shift(x, t, ctx.nu0));
            assert!((pc.beta12 - expect).norm() < 1e-8, "x={x}: {} vs {}", pc.beta12, expect);
        }
    }

    #[test]
    fn reflectionless_has_no_dispersive_part() {
        let d = DiscreteDatum::new(c(0.0, 1.0), 2, c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let s = ScatteringData::reflectionless(vec![d]);
        let v = q_asymptotic(0.3, 6.0, &s, None, &AsymptoticSettings::default()).unwrap();
        assert_eq!(v.f_part, c(0.0, 0.0));
        assert_eq!(v.q_total, v.q_sol_part);
        assert_eq!(v.q_sol_part, solve_soliton(&s.discrete, 0.3, 6.0).unwrap().q);
    }

    #[test]
    fn pure_radiation_modulus() {
        let s = gaussian_r();
        for (x, t) in [(0.0, 10.0), (5.0, 20.0)] {
            let v = q_asymptotic(x, t, &s, None, &AsymptoticSettings::default()).unwrap();
            assert!((v.q_total.norm() - (v.nu.abs() / t).sqrt()).abs() < 1e-12);
            let ctx = PhaseContext::new(x, t, &s).unwrap();
            let a = alpha_z0(&ctx, &[], &[], &s).unwrap();
            let ph = (v.f_part / a).arg() - phase_shift(x, t, v.nu);
            assert!((ph - (ph / (2.0 * PI)).round() * 2.0 * PI).abs() < 1e-8);
        }
    }

    #[test]
    fn guards() {
        let s = gaussian_r();
        assert!(matches!(q_asymptotic(0.0, 2.0, &s, None, &AsymptoticSettings::default()), Err(Error::TimeGuard { .. })));
        let cone = Cone::new(-1.0, 1.0, -0.2, 0.2).unwrap();
        assert!(matches!(
            q_asymptotic(10.0, 6.0, &s, Some(&cone), &AsymptoticSettings::default()),
            Err(Error::OutsideCone { .. })
        ));
    }
}
