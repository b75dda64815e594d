//! Acceptance suite run by `dpnls verify`. Each criterion reports the
//! measured value, its threshold and the wall time. Problems inside a
//! criterion (an unreadable fixture, a failed solve) turn into a named
//! failure; a missing fixture file is an input error.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dpnls_core::asymptotics::{cone_data, pc_coefficients, q_asymptotic, AsymptoticSettings};
use dpnls_core::io::{read_profile_csv, read_scattering};
use dpnls_core::pde_oracle::{compare, pde_residual_fn, PeriodicGrid, Reference, Region, SplitStep};
use dpnls_core::phase::{nu_of, partition, t_with, Cone, NuField, Side};
use dpnls_core::scattering::{
    derivative_radius, locate_zeros, norming_constants, DiscreteDatum, InitialProfile, JostSettings, Scatterer,
    ScatteringData, SearchBox, ZeroSettings,
};
use dpnls_core::soliton::solve_soliton;
use dpnls_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DOUBLE_POLE: &str = "double_pole.json";
pub const CONE_PAIR: &str = "cone_pair.json";
pub const GAUSSIAN: &str = "gaussian.csv";
pub const TWO_SECH: &str = "two_sech.csv";

const FIXTURE_FILES: [&str; 4] = [DOUBLE_POLE, CONE_PAIR, GAUSSIAN, TWO_SECH];

pub fn shipped_fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
}

impl Comparison {
    fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Below => value < threshold,
            Comparison::AtMost => value <= threshold,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Comparison::Below => "<",
            Comparison::AtMost => "<=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: String,
    pub name: String,
    /// NaN (null in JSON) when the measurement itself failed
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub runtime_s: f64,
    pub runtime_limit_s: f64,
    pub pass: bool,
    pub detail: String,
}

impl Criterion {
    /// One line for humans.
    pub fn line(&self) -> String {
        format!(
            "[{}] {} {}: value {:.4e} {} {:.4e}, {:.1} s (limit {:.0} s){}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.value,
            self.comparison.symbol(),
            self.threshold,
            self.runtime_s,
            self.runtime_limit_s,
            if self.detail.is_empty() { String::new() } else { format!(" | {}", self.detail) }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub fixtures: PathBuf,
    pub criteria: Vec<Criterion>,
    pub all_pass: bool,
}

/// A fixture directory known to hold every required file.
#[derive(Debug, Clone)]
pub struct Fixtures {
    dir: PathBuf,
}

impl Fixtures {
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        for f in FIXTURE_FILES {
            let p = dir.join(f);
            if !p.is_file() {
                return Err(CliError::MissingFixture(p));
            }
        }
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn scattering(&self, name: &str) -> Result<ScatteringData, String> {
        read_scattering(&self.dir.join(name)).map_err(|e| format!("fixture {name}: {e}"))
    }

    fn profile(&self, name: &str) -> Result<InitialProfile, String> {
        read_profile_csv(&self.dir.join(name)).map_err(|e| format!("fixture {name}: {e}"))
    }

    /// The single double pole of the double-pole fixture.
    fn double_pole(&self) -> Result<DiscreteDatum, String> {
        let s = self.scattering(DOUBLE_POLE)?;
        match s.discrete.as_slice() {
            [d] if d.order == 2 && s.z_grid.is_empty() => Ok(*d),
            _ => Err(format!("fixture {DOUBLE_POLE}: expected one reflectionless double pole")),
        }
    }
}

struct Spec {
    id: &'static str,
    name: &'static str,
    threshold: f64,
    comparison: Comparison,
    limit_s: f64,
    run: fn(&Fixtures) -> Result<Measured, String>,
}

struct Measured {
    value: f64,
    detail: String,
}

fn measured(value: f64, detail: impl Into<String>) -> Result<Measured, String> {
    Ok(Measured { value, detail: detail.into() })
}

fn err(e: dpnls_core::Error) -> String {
    e.to_string()
}

const SPECS: [Spec; 10] = [
    Spec { id: "1", name: "double-pole PDE residual", threshold: 1e-6, comparison: Comparison::Below, limit_s: 30.0, run: double_pole_residual },
    Spec { id: "2", name: "split-step agreement to t = 10", threshold: 1e-6, comparison: Comparison::Below, limit_s: 120.0, run: split_step_agreement },
    Spec { id: "3", name: "cone localization slope", threshold: f64::NAN, comparison: Comparison::AtMost, limit_s: 60.0, run: cone_localization },
    Spec { id: "4", name: "dispersive remainder growth ratio", threshold: 3.0, comparison: Comparison::Below, limit_s: 600.0, run: dispersive_remainder },
    Spec { id: "5a", name: "|beta12|^2 = |nu|", threshold: 1e-10, comparison: Comparison::Below, limit_s: 60.0, run: beta_modulus },
    Spec { id: "5b", name: "T jump on the cut", threshold: 1e-6, comparison: Comparison::Below, limit_s: 60.0, run: t_jump },
    Spec { id: "5c", name: "T 1/z coefficient", threshold: 1e-6, comparison: Comparison::Below, limit_s: 60.0, run: t_expansion },
    Spec { id: "5d", name: "2 sech unitarity", threshold: 1e-8, comparison: Comparison::Below, limit_s: 60.0, run: unitarity },
    Spec { id: "6", name: "double-pole scattering round trip", threshold: 1.0, comparison: Comparison::AtMost, limit_s: 300.0, run: round_trip },
    Spec { id: "7", name: "random system residual", threshold: 1e-10, comparison: Comparison::Below, limit_s: 30.0, run: random_systems },
];

fn selected(id: &str, only: &[String]) -> bool {
    // "5" selects 5a..5d
    only.is_empty() || only.iter().any(|o| o == id || id.strip_prefix(o.as_str()).is_some_and(|r| r.chars().all(|c| c.is_ascii_lowercase())))
}

/// Criterion 3 has a data-dependent threshold, -2 mu(I).
const CONE: Cone = Cone { x1: 0.0, x2: 0.0, v1: -0.2, v2: 0.2 };

fn cone_threshold(f: &Fixtures) -> f64 {
    f.scattering(CONE_PAIR)
        .and_then(|s| partition(&s.discrete, f64::NEG_INFINITY, Some(&CONE)).map_err(err))
        .map(|p| -2.0 * p.mu_i)
        .unwrap_or(f64::NAN)
}

pub fn run_suite(fixtures: &Fixtures, only: &[String]) -> Result<Report, CliError> {
    for o in only {
        if !SPECS.iter().any(|s| selected(s.id, std::slice::from_ref(o))) {
            return Err(CliError::Config(format!("unknown criterion id '{o}'")));
        }
    }
    let mut criteria = Vec::new();
    for spec in SPECS.iter().filter(|s| selected(s.id, only)) {
        log::info!("criterion {}: {}", spec.id, spec.name);
        let start = Instant::now();
        let outcome = (spec.run)(fixtures);
        let runtime_s = start.elapsed().as_secs_f64();
        let threshold = if spec.id == "3" { cone_threshold(fixtures) } else { spec.threshold };
        let (value, detail, ok) = match outcome {
            Ok(m) => (m.value, m.detail, spec.comparison.holds(m.value, threshold)),
            Err(msg) => (f64::NAN, msg, false),
        };
        let in_time = runtime_s <= spec.limit_s;
        let detail = if in_time || !ok { detail } else { format!("{detail}; over the runtime limit") };
        criteria.push(Criterion {
            id: spec.id.to_string(),
            name: spec.name.to_string(),
            value,
            threshold,
            comparison: spec.comparison,
            runtime_s,
            runtime_limit_s: spec.limit_s,
            pass: ok && in_time,
            detail,
        });
    }
    let all_pass = criteria.iter().all(|c| c.pass);
    Ok(Report { fixtures: fixtures.dir.clone(), criteria, all_pass })
}

fn closure(d: DiscreteDatum) -> impl Fn(f64, f64) -> dpnls_core::Result<C64> + Sync {
    move |x, t| Ok(solve_soliton(&[d], x, t)?.q)
}

fn double_pole_residual(f: &Fixtures) -> Result<Measured, String> {
    let d = f.double_pole()?;
    let grid = PeriodicGrid::new(-20.0, 20.0, 4096).map_err(err)?;
    let r = pde_residual_fn(closure(d), grid, 0.0, 1.0, 11, 1e-3).map_err(err)?;
    measured(r.max, format!("worst at x = {:.3}, t = {:.2}", r.x, r.t))
}

fn split_step_agreement(f: &Fixtures) -> Result<Measured, String> {
    let d = f.double_pole()?;
    // 1024 modes already resolve the field; 512 add spatial error of ~2e-6
    let grid = PeriodicGrid::new(-20.0, 20.0, 1024).map_err(err)?;
    let exact = closure(d);
    let q0 = grid.points().iter().map(|&x| exact(x, 0.0)).collect::<dpnls_core::Result<Vec<_>>>().map_err(err)?;
    let times: Vec<f64> = (0..=10).map(|j| j as f64).collect();
    // Strang error is about 6.5e3 dt^2 at t = 10 for this field
    let dt = 1e-5;
    let field = SplitStep::new(grid, dt).map_err(err)?.evolve(&q0, &times).map_err(err)?;
    let rows = compare(&field, Reference::Fn(&exact), Region::Whole, 0.0).map_err(err)?;
    let worst = rows.iter().map(|r| r.linf).fold(0.0, f64::max);
    let last = rows.last().map_or(f64::NAN, |r| r.linf);
    measured(worst, format!("dt = {dt:e}, L-inf at t = 10: {last:.3e}"))
}

fn cone_localization(f: &Fixtures) -> Result<Measured, String> {
    let s = f.scattering(CONE_PAIR)?;
    if !s.z_grid.is_empty() || s.discrete.len() != 2 {
        return Err(format!("fixture {CONE_PAIR}: expected two reflectionless points"));
    }
    let times: Vec<f64> = (0..=20).map(|j| 2.0 + 0.5 * j as f64).collect();
    let mut logs = Vec::new();
    for &t in &times {
        let (lo, hi) = (CONE.x1 + CONE.v1 * t, CONE.x2 + CONE.v2 * t);
        let mut worst = 0.0f64;
        for j in 0..100 {
            let x = lo + (hi - lo) * j as f64 / 99.0;
            let full = solve_soliton(&s.discrete, x, t).map_err(err)?.q;
            let (reduced, _) = cone_data(x, t, &s, Some(&CONE)).map_err(err)?;
            let local = solve_soliton(&reduced, x, t).map_err(err)?.q;
            worst = worst.max((full - local).norm());
        }
        if !(worst > 0.0) {
            return Err(format!("difference vanished at t = {t}; no decay to fit"));
        }
        logs.push(worst.ln());
    }
    let slope = fit_slope(&times, &logs);
    measured(
        slope,
        format!("L-inf {:.3e} at t = 2, {:.3e} at t = 12", logs[0].exp(), logs[logs.len() - 1].exp()),
    )
}

fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn dispersive_remainder(f: &Fixtures) -> Result<Measured, String> {
    let profile = f.profile(GAUSSIAN)?;
    let sc = Scatterer::new(profile.clone(), JostSettings::default()).map_err(err)?;
    let bx = SearchBox::new(-3.0, 3.0, 0.05, 2.0).map_err(err)?;
    let zeros = locate_zeros(&sc, &bx, &ZeroSettings::default()).map_err(err)?;
    if !zeros.is_empty() {
        return Err(format!("expected an empty discrete spectrum, found {zeros:?}"));
    }
    let zg: Vec<f64> = (0..=1200).map(|j| -6.0 + 0.01 * j as f64).collect();
    let data = sc.reflection_coefficient(&zg).map_err(err)?;

    let grid = PeriodicGrid::new(-1024.0, 1024.0, 16384).map_err(err)?;
    let xs = grid.points();
    let q0: Vec<C64> = xs.iter().map(|&x| if x < profile.x_min() || x > profile.x_max() { C64::new(0.0, 0.0) } else { profile.eval(x) }).collect();
    let times = [20.0, 40.0, 80.0];
    let field = SplitStep::new(grid, 0.01).map_err(err)?.evolve(&q0, &times).map_err(err)?;
    let j0 = xs.iter().position(|x| *x == 0.0).ok_or("grid misses x = 0")?;
    let mut scaled = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let v = q_asymptotic(0.0, t, &data, None, &AsymptoticSettings::default()).map_err(err)?;
        scaled.push(t.powf(0.75) * (field.q[k][j0] - v.q_total).norm());
    }
    let hi = scaled.iter().copied().fold(0.0, f64::max);
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    measured(hi / lo, format!("t^(3/4) |q - q_asym| at t = 20, 40, 80: {:.3e}, {:.3e}, {:.3e}", scaled[0], scaled[1], scaled[2]))
}

fn beta_modulus(_: &Fixtures) -> Result<Measured, String> {
    let mut worst = 0.0f64;
    for nu in [-0.05, -0.11, -0.3] {
        // |r| from nu = -ln(1 + |r|^2) / (2 pi)
        let r_abs = ((-2.0 * PI * nu).exp() - 1.0).sqrt();
        let nu_back = nu_of(r_abs);
        for phase in [0.0, 1.1, -2.5] {
            let pc = pc_coefficients(C64::from_polar(r_abs, phase), nu_back).map_err(err)?;
            worst = worst.max((pc.beta12.norm_sqr() - nu_back.abs()).abs());
        }
    }
    measured(worst, "")
}

/// Gaussian reflection data plus the two cone-fixture points.
fn mixed_scattering(f: &Fixtures) -> Result<ScatteringData, String> {
    let sc = Scatterer::new(f.profile(GAUSSIAN)?, JostSettings::default()).map_err(err)?;
    let zg: Vec<f64> = (0..=300).map(|j| -6.0 + 0.04 * j as f64).collect();
    let mut s = sc.reflection_coefficient(&zg).map_err(err)?;
    s.discrete = f.scattering(CONE_PAIR)?.discrete;
    Ok(s)
}

fn t_jump(f: &Fixtures) -> Result<Measured, String> {
    let s = mixed_scattering(f)?;
    let nu = NuField::new(&s);
    let z0 = 0.3;
    let part = partition(&s.discrete, z0, None).map_err(err)?;
    let mut worst = 0.0f64;
    // grid nodes left of z0, where r and nu are sampled exactly
    for (&u, r) in s.z_grid.iter().zip(&s.r).filter(|(u, _)| **u < z0 - 1e-9).step_by(7) {
        let tp = t_with(&nu, C64::new(u, 0.0), &part.delta_minus, &s.discrete, z0, Some(Side::Plus)).map_err(err)?;
        let tm = t_with(&nu, C64::new(u, 0.0), &part.delta_minus, &s.discrete, z0, Some(Side::Minus)).map_err(err)?;
        let expect = tm * (1.0 + r.norm_sqr());
        worst = worst.max((tp - expect).norm() / expect.norm());
    }
    measured(worst, format!("relative, z0 = {z0}, delta_minus = {:?}", part.delta_minus))
}

fn t_expansion(f: &Fixtures) -> Result<Measured, String> {
    let s = mixed_scattering(f)?;
    let nu = NuField::new(&s);
    let z0 = 0.3;
    let part = partition(&s.discrete, z0, None).map_err(err)?;
    let poles: f64 = part.delta_minus.iter().map(|&k| s.discrete[k].order as f64 * s.discrete[k].z.im).sum();
    let expect = C64::new(0.0, 2.0 * poles - nu.integral(z0));
    let coef = |r: f64| -> Result<C64, String> {
        let z = C64::from_polar(r, 0.9);
        Ok(z * (t_with(&nu, z, &part.delta_minus, &s.discrete, z0, None).map_err(err)? - 1.0))
    };
    // z (T - 1) = c + d/z + e/z^2 + ...; three radii remove d and e
    let r = 200.0;
    let c = (coef(r)? - 6.0 * coef(2.0 * r)? + 8.0 * coef(4.0 * r)?) / 3.0;
    measured((c - expect).norm(), format!("coefficient {c:.8}, expected {expect:.8}"))
}

fn unitarity(f: &Fixtures) -> Result<Measured, String> {
    let sc = Scatterer::new(f.profile(TWO_SECH)?, JostSettings::default()).map_err(err)?;
    let mut worst = 0.0f64;
    for j in 0..=40 {
        let z = -4.0 + 0.2 * j as f64;
        let (s11, s21) = sc.transmission(z).map_err(err)?;
        worst = worst.max((s11.norm_sqr() + s21.norm_sqr() - 1.0).abs());
    }
    measured(worst, "41 points on [-4, 4]")
}

fn round_trip(f: &Fixtures) -> Result<Measured, String> {
    let d = f.double_pole()?;
    // the t = 0 slice, evaluated through the closure rather than a spline
    let profile = InitialProfile::from_fn(-18.0, 18.0, 3601, move |x| {
        solve_soliton(&[d], x, 0.0).map(|s| s.q).unwrap_or(C64::new(f64::NAN, f64::NAN))
    })
    .map_err(err)?;
    let settings = JostSettings { rtol: 1e-13, atol: 1e-15, ..JostSettings::default() };
    let sc = Scatterer::new(profile, settings).map_err(err)?;
    let bx = SearchBox::new(d.z.re - 0.8, d.z.re + 0.8, 0.3 * d.z.im, 1.7 * d.z.im).map_err(err)?;
    let zeros = locate_zeros(&sc, &bx, &ZeroSettings::default()).map_err(err)?;
    let [z] = zeros.as_slice() else {
        return Err(format!("expected one zero, found {zeros:?}"));
    };
    if z.multiplicity != 2 {
        return Err(format!("zero at {} has multiplicity {}", z.z, z.multiplicity));
    }
    let got = norming_constants(&sc, z.z, 2, derivative_radius(z.z, &[], 0.4)).map_err(err)?;
    let rel = |a: C64, b: C64| (a - b).norm() / b.norm().max(1.0);
    let dz = (z.z - d.z).norm();
    let da = rel(got.a_const(), d.a_const());
    let db = rel(got.b_const(), d.b_const());
    let value = (dz / 1e-4).max(da / 1e-3).max(db / 1e-3);
    measured(value, format!("|z - z1| = {dz:.2e} (tol 1e-4), A rel {da:.2e}, B rel {db:.2e} (tol 1e-3)"))
}

fn random_systems(_: &Fixtures) -> Result<Measured, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240607);
    let mut worst = 0.0f64;
    let mut worst_cond = 0.0f64;
    for case in 0..200 {
        let n = rng.random_range(1..=4);
        let mut data: Vec<DiscreteDatum> = Vec::new();
        while data.len() < n {
            let z = C64::new(rng.random_range(-2.0..2.0), rng.random_range(0.2..2.0));
            if data.iter().any(|d| (d.z - z).norm() < 0.05) {
                continue;
            }
            let mut c = || C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let (c0, c1) = (c(), c());
            let d = if rng.random_bool(0.7) && c1.norm() > 1e-3 {
                DiscreteDatum::double(z, c1, c0 / c1)
            } else if c0.norm() > 1e-3 {
                DiscreteDatum::simple(z, c0)
            } else {
                continue;
            };
            data.push(d);
        }
        let (x, t) = (rng.random_range(-5.0..5.0), rng.random_range(-2.0..2.0));
        let s = solve_soliton(&data, x, t).map_err(|e| format!("case {case} not solvable: {e}"))?;
        if !s.q.re.is_finite() || !s.q.im.is_finite() {
            return Err(format!("case {case}: non-finite q"));
        }
        worst = worst.max(s.residual);
        worst_cond = worst_cond.max(s.condition);
    }
    measured(worst, format!("200 solvable, worst condition estimate {worst_cond:.2e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_by_id_and_group() {
        let only = vec!["5".to_string()];
        let ids: Vec<&str> = SPECS.iter().filter(|s| selected(s.id, &only)).map(|s| s.id).collect();
        assert_eq!(ids, ["5a", "5b", "5c", "5d"]);
        assert!(selected("7", &[]));
        assert!(!selected("1", &["7".to_string()]));
    }

    #[test]
    fn slope_of_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 - 0.4 * v).collect();
        assert!((fit_slope(&x, &y) + 0.4).abs() < 1e-14);
    }
}
