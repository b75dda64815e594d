use std::fs;
use std::path::Path;

use dpnls_core::asymptotics::{asymptotic_sweep, write_asymptotic_csv, AsymptoticSettings, AsymptoticValue};
use dpnls_core::io::{read_profile_csv, read_scattering, write_rows, write_scattering};
use dpnls_core::pde_oracle::{compare, conserved, CompareRow, PeriodicGrid, Reference, Region, SpaceTimeField, SplitStep};
use dpnls_core::scattering::{derivative_radius, locate_zeros, norming_constants, InitialProfile, ScatteringData, Scatterer};
use dpnls_core::soliton::solve_soliton;
use dpnls_core::C64;
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{linspace, DataSource, ProfileKind, RegionKind, RunConfig};
use crate::suite::{run_suite, shipped_fixtures, Fixtures, Report};
use crate::CliError;

fn load_profile(cfg: &RunConfig) -> Result<InitialProfile, CliError> {
    match cfg.data_source()? {
        DataSource::Profile(p) => Ok(read_profile_csv(&p)?),
        DataSource::Builtin(b) => Ok(match b.kind {
            ProfileKind::Sech => InitialProfile::sech(b.amplitude, b.x_min, b.x_max, b.points)?,
            ProfileKind::Gaussian => InitialProfile::gaussian(b.amplitude, b.x_min, b.x_max, b.points)?,
            ProfileKind::Zero => InitialProfile::zero(b.x_min, b.x_max, b.points)?,
        }),
        DataSource::Scattering(_) => Err(CliError::Config("this command needs a profile, not a scattering document".into())),
    }
}

fn load_scattering(cfg: &RunConfig) -> Result<ScatteringData, CliError> {
    match cfg.data_source()? {
        DataSource::Scattering(p) => Ok(read_scattering(&p)?),
        _ => Err(CliError::Config("this command needs a scattering document".into())),
    }
}

/// Zeros, norming data and r on the real grid. Writes `scattering.json`
/// and `reflection.csv` (z, re r, im r, |r|).
pub fn cmd_scatter(cfg: &RunConfig, out: &Path) -> Result<ScatteringData, CliError> {
    let profile = load_profile(cfg)?;
    let sc = Scatterer::new(profile, cfg.scatter.jost())?;
    let zeros = locate_zeros(&sc, &cfg.scatter.search_box()?, &cfg.scatter.zeros())?;
    let zs: Vec<C64> = zeros.iter().map(|z| z.z).collect();
    let mut discrete = Vec::new();
    for z in &zeros {
        info!("zero at {} with multiplicity {}", z.z, z.multiplicity);
        let order = u8::try_from(z.multiplicity)
            .ok()
            .filter(|m| *m <= 2)
            .ok_or_else(|| CliError::Config(format!("zero at {} has multiplicity {}", z.z, z.multiplicity)))?;
        discrete.push(norming_constants(&sc, z.z, order, derivative_radius(z.z, &zs, 0.4))?);
    }
    let mut data = sc.reflection_coefficient(&cfg.scatter.r_grid())?;
    data.discrete = discrete;
    write_scattering(&out.join("scattering.json"), &data)?;
    let rows: Vec<Vec<f64>> = data.z_grid.iter().zip(&data.r).map(|(z, r)| vec![*z, r.re, r.im, r.norm()]).collect();
    write_rows(&out.join("reflection.csv"), &["z", "re_r", "im_r", "abs_r"], &rows)?;
    Ok(data)
}

/// q_sol over the configured (x, t) grid, written to `soliton.csv`.
pub fn cmd_soliton(cfg: &RunConfig, out: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let data = load_scattering(cfg)?;
    if !data.z_grid.is_empty() {
        warn!("the soliton sweep uses the discrete data only; r is ignored");
    }
    let g = &cfg.grid;
    let xs = linspace(g.x_min, g.x_max, g.x_points);
    let ts = linspace(g.t_min, g.t_max, g.t_points);
    let points: Vec<(f64, f64)> = ts.iter().flat_map(|&t| xs.iter().map(move |&x| (x, t))).collect();
    let rows = points
        .par_iter()
        .map(|&(x, t)| {
            let q = solve_soliton(&data.discrete, x, t)?.q;
            Ok(vec![x, t, q.re, q.im, q.norm()])
        })
        .collect::<dpnls_core::Result<Vec<_>>>()?;
    write_rows(&out.join("soliton.csv"), &["x", "t", "re_q", "im_q", "abs_q"], &rows)?;
    Ok(rows)
}

/// q_asym = q_sol(sigma_I) + t^{-1/2} f over the cone (or the grid's x range
/// without a cone), written to `asymptote.csv`.
pub fn cmd_asymptote(cfg: &RunConfig, out: &Path) -> Result<Vec<AsymptoticValue>, CliError> {
    let data = load_scattering(cfg)?;
    let a = &cfg.asymptote;
    let cone = cfg.cone()?;
    let settings = AsymptoticSettings { t_min: a.time_guard, r_floor: a.r_floor };
    let mut points = Vec::new();
    for t in linspace(a.t_min, a.t_max, a.t_points) {
        let (lo, hi) = match &cone {
            Some(c) if t >= 0.0 => (c.x1 + c.v1 * t, c.x2 + c.v2 * t),
            Some(c) => (c.x1 + c.v2 * t, c.x2 + c.v1 * t),
            None => (cfg.grid.x_min, cfg.grid.x_max),
        };
        points.extend(linspace(lo, hi, a.x_points).into_iter().map(|x| (x, t)));
    }
    let values = asymptotic_sweep(&points, &data, cone.as_ref(), &settings)?;
    write_asymptotic_csv(&out.join("asymptote.csv"), &values)?;
    Ok(values)
}

/// Split-step evolution saved under `field/`, invariants in `conserved.csv`.
/// With a scattering source the initial data is the soliton field at t = 0.
pub fn cmd_evolve(cfg: &RunConfig, out: &Path) -> Result<SpaceTimeField, CliError> {
    let e = &cfg.evolve;
    let grid = PeriodicGrid::new(e.x_min, e.x_max, e.modes)?;
    let xs = grid.points();
    let q0: Vec<C64> = match cfg.data_source()? {
        DataSource::Scattering(p) => {
            let data = read_scattering(&p)?;
            if !data.z_grid.is_empty() {
                warn!("initial data built from the discrete part only; r is ignored");
            }
            xs.par_iter().map(|&x| Ok(solve_soliton(&data.discrete, x, 0.0)?.q)).collect::<dpnls_core::Result<_>>()?
        }
        _ => {
            let p = load_profile(cfg)?;
            let (lo, hi) = (p.x_min(), p.x_max());
            xs.iter().map(|&x| if x < lo || x > hi { C64::new(0.0, 0.0) } else { p.eval(x) }).collect()
        }
    };
    let times = linspace(0.0, e.t_end, e.t_slices.max(2));
    let field = SplitStep::new(grid, e.dt)?.evolve(&q0, &times)?;
    field.save(&out.join("field"))?;
    let rows: Vec<Vec<f64>> =
        field.t_samples.iter().zip(conserved(&field)).map(|(t, (m, p, h))| vec![*t, m, p, h]).collect();
    write_rows(&out.join("conserved.csv"), &["t", "mass", "momentum", "energy"], &rows)?;
    Ok(field)
}

/// Per-slice errors of a saved field against a second field or the soliton
/// closure, written to `compare.csv`.
pub fn cmd_compare(cfg: &RunConfig, out: &Path) -> Result<Vec<CompareRow>, CliError> {
    let c = &cfg.compare;
    let field = SpaceTimeField::load(&c.field)?;
    let region = match c.region {
        RegionKind::Whole => Region::Whole,
        RegionKind::Window => Region::Window { x_lo: c.window[0], x_hi: c.window[1] },
        RegionKind::Cone => Region::Cone(cfg.cone()?.expect("validated")),
    };
    let rows = if c.reference_field.as_os_str().is_empty() {
        let data = load_scattering(cfg)?;
        let exact = move |x: f64, t: f64| Ok(solve_soliton(&data.discrete, x, t)?.q);
        compare(&field, Reference::Fn(&exact), region, c.scale_exponent)?
    } else {
        let reference = SpaceTimeField::load(&c.reference_field)?;
        compare(&field, Reference::Field(&reference), region, c.scale_exponent)?
    };
    let table: Vec<Vec<f64>> =
        rows.iter().map(|r| vec![r.t, r.linf, r.l2, r.linf_scaled, r.l2_scaled, r.points as f64]).collect();
    write_rows(&out.join("compare.csv"), &["t", "linf", "l2", "linf_scaled", "l2_scaled", "points"], &table)?;
    Ok(rows)
}

/// Runs the acceptance suite and writes the JSON report.
pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    let dir = if cfg.verify.fixtures.as_os_str().is_empty() { shipped_fixtures() } else { cfg.verify.fixtures.clone() };
    let fixtures = Fixtures::open(&dir)?;
    let report = run_suite(&fixtures, &cfg.verify.only)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    fs::write(out.join(&cfg.verify.report), text + "\n")?;
    Ok(report)
}
