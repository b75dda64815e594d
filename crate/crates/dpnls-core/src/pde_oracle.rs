//! Split-step Fourier integrator, conserved quantities, PDE residuals and
//! field comparisons. This is the independent check on everything else.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use log::warn;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::io::fmt17;
use crate::phase::Cone;
use crate::{Error, Result, C64, I};

/// Uniform periodic grid x_j = x_min + j L / N, j < N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    pub x_min: f64,
    pub length: f64,
    pub modes: usize,
}

impl PeriodicGrid {
    pub fn new(x_min: f64, x_max: f64, modes: usize) -> Result<Self> {
        if !(x_max > x_min) || modes < 8 || !modes.is_power_of_two() {
            return Err(Error::Grid(format!("need x_min < x_max and a power-of-two mode count, got [{x_min}, {x_max}) / {modes}")));
        }
        Ok(Self { x_min, length: x_max - x_min, modes })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.modes as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.modes).map(|j| self.x_min + j as f64 * self.dx()).collect()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.modes;
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * m / self.length
            })
            .collect()
    }
}

/// q sampled on a periodic grid at increasing times.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    pub grid: PeriodicGrid,
    pub t_samples: Vec<f64>,
    pub q: Vec<Vec<C64>>,
    /// time step used to produce the field (0 for sampled closed forms)
    pub dt: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    grid: PeriodicGrid,
    dt: f64,
    t_samples: Vec<f64>,
    files: Vec<String>,
}

struct Spectral {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl Spectral {
    fn new(grid: &PeriodicGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(grid.modes),
            inv: planner.plan_fft_inverse(grid.modes),
            k: grid.wavenumbers(),
        }
    }

    /// d^order/dx^order by multiplying the spectrum with (ik)^order.
    /// The Nyquist mode is zeroed for odd orders.
    fn derivative(&self, q: &[C64], order: u32) -> Vec<C64> {
        let n = q.len();
        let mut buf = q.to_vec();
        self.fwd.process(&mut buf);
        for (j, v) in buf.iter_mut().enumerate() {
            if order % 2 == 1 && j == n / 2 {
                *v = C64::new(0.0, 0.0);
            } else {
                *v *= (I * self.k[j]).powu(order) / n as f64;
            }
        }
        self.inv.process(&mut buf);
        buf
    }
}

impl SpaceTimeField {
    /// Samples q(x, t) on the grid at the given times; rows in parallel.
    pub fn from_fn<F>(grid: PeriodicGrid, t_samples: &[f64], f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<C64> + Sync,
    {
        let xs = grid.points();
        let q = t_samples
            .iter()
            .map(|&t| xs.par_iter().map(|&x| f(x, t)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, t_samples: t_samples.to_vec(), q, dt: 0.0 })
    }

    pub fn slice_at(&self, t: f64) -> Option<&[C64]> {
        self.t_samples.iter().position(|s| (s - t).abs() <= 1e-9 * t.abs().max(1.0)).map(|j| self.q[j].as_slice())
    }

    /// Trigonometric interpolant of slice j at x.
    pub fn interpolate(&self, j: usize, x: f64) -> C64 {
        let n = self.grid.modes;
        let mut spec = self.q[j].clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut spec);
        eval_spectrum(&spec, &self.grid, x)
    }

    /// Fraction of the mass in the outer 5% of the domain on each side, per slice.
    pub fn edge_mass(&self) -> Vec<f64> {
        let n = self.grid.modes;
        let m = (n / 20).max(1);
        self.q
            .iter()
            .map(|row| {
                let total: f64 = row.iter().map(|v| v.norm_sqr()).sum();
                let edge: f64 = row[..m].iter().chain(&row[n - m..]).map(|v| v.norm_sqr()).sum();
                if total > 0.0 { edge / total } else { 0.0 }
            })
            .collect()
    }

    /// One CSV per slice (x, re q, im q) plus manifest.json.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let xs = self.grid.points();
        let mut files = Vec::new();
        for (j, row) in self.q.iter().enumerate() {
            let name = format!("slice_{j:05}.csv");
            let mut out = String::from("x,re_q,im_q\n");
            for (x, v) in xs.iter().zip(row) {
                out.push_str(&format!("{},{},{}\n", fmt17(*x), fmt17(v.re), fmt17(v.im)));
            }
            fs::write(dir.join(&name), out)?;
            files.push(name);
        }
        let m = Manifest { grid: self.grid, dt: self.dt, t_samples: self.t_samples.clone(), files };
        let text = serde_json::to_string_pretty(&m).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
        if m.files.len() != m.t_samples.len() {
            return Err(Error::Parse("manifest lists a different number of files and times".into()));
        }
        let mut q = Vec::new();
        for name in &m.files {
            let mut rdr = csv::Reader::from_path(dir.join(name)).map_err(|e| Error::Parse(format!("{name}: {e}")))?;
            let mut row = Vec::with_capacity(m.grid.modes);
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::Parse(format!("{name}: {e}")))?;
                let v = |i: usize| -> Result<f64> {
                    rec.get(i)
                        .and_then(|s| s.trim().parse().ok())
                        .ok_or_else(|| Error::Parse(format!("{name}: bad row")))
                };
                row.push(C64::new(v(1)?, v(2)?));
            }
            if row.len() != m.grid.modes {
                return Err(Error::Parse(format!("{name}: expected {} rows", m.grid.modes)));
            }
            q.push(row);
        }
        Ok(Self { grid: m.grid, t_samples: m.t_samples, q, dt: m.dt })
    }
}

fn eval_spectrum(spec: &[C64], grid: &PeriodicGrid, x: f64) -> C64 {
    let n = spec.len();
    let k = grid.wavenumbers();
    let u = x - grid.x_min;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        if j == n / 2 {
            // split the Nyquist mode symmetrically
            acc += spec[j] * (k[j] * u).cos();
        } else {
            acc += spec[j] * C64::from_polar(1.0, k[j] * u);
        }
    }
    acc / n as f64
}

#[derive(Debug, Clone, Copy)]
pub struct SplitStep {
    pub grid: PeriodicGrid,
    pub dt: f64,
    /// relative edge mass above which a warning is logged
    pub edge_guard: f64,
}

impl SplitStep {
    pub fn new(grid: PeriodicGrid, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Grid(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { grid, dt, edge_guard: 1e-10 })
    }

    /// Strang splitting: linear half step e^{-i k^2 h/4}, exact nonlinear
    /// rotation q e^{i |q|^2 h}, linear half step. Each interval between
    /// output times uses the largest step <= dt that divides it evenly.
    pub fn evolve(&self, q0: &[C64], t_samples: &[f64]) -> Result<SpaceTimeField> {
        let n = self.grid.modes;
        if q0.len() != n {
            return Err(Error::Grid(format!("initial data has {} samples, grid has {n}", q0.len())));
        }
        if t_samples.windows(2).any(|w| w[1] <= w[0]) || t_samples.first().is_some_and(|t| *t < 0.0) {
            return Err(Error::Grid("output times must be increasing and non-negative".into()));
        }
        let sp = Spectral::new(&self.grid);
        let mut q = q0.to_vec();
        let mut t = 0.0;
        let mut out = Vec::with_capacity(t_samples.len());
        for &ts in t_samples {
            let span = ts - t;
            if span > 0.0 {
                let steps = (span / self.dt).ceil().max(1.0) as usize;
                self.advance(&sp, &mut q, span / steps as f64, steps);
                if let Some(v) = q.iter().find(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    let _ = v;
                    return Err(Error::Blowup(ts));
                }
            }
            t = ts;
            out.push(q.clone());
        }
        let field = SpaceTimeField { grid: self.grid, t_samples: t_samples.to_vec(), q: out, dt: self.dt };
        if let Some((j, e)) = field.edge_mass().iter().enumerate().find(|(_, e)| **e > self.edge_guard) {
            warn!("edge mass fraction {e:.2e} at t = {} exceeds the aliasing guard", field.t_samples[j]);
        }
        Ok(field)
    }

    fn advance(&self, sp: &Spectral, q: &mut [C64], h: f64, steps: usize) {
        let n = q.len();
        let half: Vec<C64> = sp.k.iter().map(|k| C64::from_polar(1.0 / n as f64, -k * k * h / 4.0)).collect();
        let full: Vec<C64> = sp.k.iter().map(|k| C64::from_polar(1.0 / n as f64, -k * k * h / 2.0)).collect();
        let mut scratch = vec![C64::new(0.0, 0.0); sp.fwd.get_inplace_scratch_len().max(sp.inv.get_inplace_scratch_len())];
        sp.fwd.process_with_scratch(q, &mut scratch);
        for (v, m) in q.iter_mut().zip(&half) {
            *v *= m;
        }
        for s in 0..steps {
            sp.inv.process_with_scratch(q, &mut scratch);
            for v in q.iter_mut() {
                *v *= cis(v.norm_sqr() * h);
            }
            sp.fwd.process_with_scratch(q, &mut scratch);
            // consecutive linear half steps merge into one full step
            let m = if s + 1 == steps { &half } else { &full };
            for (v, f) in q.iter_mut().zip(m) {
                *v *= f;
            }
        }
        // the fused multipliers carry 1/n once per forward-inverse pair
        sp.inv.process_with_scratch(q, &mut scratch);
    }
}

/// e^{i phi}. Small angles, the common case with fine steps, use the Taylor
/// series; the truncation error is below phi^8 / 8! < 3e-21.
fn cis(phi: f64) -> C64 {
    if phi.abs() < 1e-2 {
        let p2 = phi * phi;
        let c = 1.0 - p2 / 2.0 * (1.0 - p2 / 12.0 * (1.0 - p2 / 30.0));
        let s = phi * (1.0 - p2 / 6.0 * (1.0 - p2 / 20.0 * (1.0 - p2 / 42.0)));
        C64::new(c, s)
    } else {
        C64::from_polar(1.0, phi)
    }
}

/// (mass, momentum, energy) with mass = int |q|^2, momentum = Im int conj(q) q_x,
/// energy = int (|q_x|^2 - |q|^4)/2; all three are constant for the equation.
pub fn conserved(field: &SpaceTimeField) -> Vec<(f64, f64, f64)> {
    let sp = Spectral::new(&field.grid);
    let dx = field.grid.dx();
    field
        .q
        .iter()
        .map(|q| {
            let qx = sp.derivative(q, 1);
            let mut mass = 0.0;
            let mut mom = 0.0;
            let mut energy = 0.0;
            for (v, d) in q.iter().zip(&qx) {
                let a = v.norm_sqr();
                mass += a;
                mom += (v.conj() * d).im;
                energy += 0.5 * (d.norm_sqr() - a * a);
            }
            (mass * dx, mom * dx, energy * dx)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub max: f64,
    pub x: f64,
    pub t: f64,
}

/// max |i q_t + q_xx/2 + |q|^2 q| over the interior slices of an equally
/// spaced field (fourth-order central differences in t, spectral in x).
/// Residuals are reported for slices 2..n-2.
pub fn pde_residual(field: &SpaceTimeField) -> Result<Residual> {
    let n = field.t_samples.len();
    if n < 5 {
        return Err(Error::TooFewSlices(n));
    }
    let h = field.t_samples[1] - field.t_samples[0];
    if field.t_samples.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs()) {
        return Err(Error::Grid("residual needs equally spaced time slices".into()));
    }
    let sp = Spectral::new(&field.grid);
    let xs = field.grid.points();
    let per_slice: Vec<Residual> = (2..n - 2)
        .into_par_iter()
        .map(|j| {
            let q = &field.q[j];
            let qxx = sp.derivative(q, 2);
            let mut best = Residual { max: 0.0, x: xs[0], t: field.t_samples[j] };
            for i in 0..q.len() {
                let qt = (field.q[j - 2][i] - 8.0 * field.q[j - 1][i] + 8.0 * field.q[j + 1][i] - field.q[j + 2][i])
                    / (12.0 * h);
                let r = (I * qt + 0.5 * qxx[i] + q[i].norm_sqr() * q[i]).norm();
                if r > best.max || r.is_nan() {
                    best = Residual { max: r, x: xs[i], t: field.t_samples[j] };
                }
            }
            best
        })
        .collect();
    Ok(per_slice.into_iter().fold(Residual { max: 0.0, x: 0.0, t: 0.0 }, |a, b| if b.max > a.max || b.max.is_nan() { b } else { a }))
}

/// Residual of a closure at `times` evenly spaced evaluation times in
/// [t0, t1]; each gets its own five-slice stencil of spacing h.
pub fn pde_residual_fn<F>(f: F, grid: PeriodicGrid, t0: f64, t1: f64, times: usize, h: f64) -> Result<Residual>
where
    F: Fn(f64, f64) -> Result<C64> + Sync,
{
    if times < 1 {
        return Err(Error::TooFewSlices(times));
    }
    let step = if times > 1 { (t1 - t0) / (times - 1) as f64 } else { 0.0 };
    let mut worst = Residual { max: 0.0, x: 0.0, t: t0 };
    for j in 0..times {
        let tc = t0 + j as f64 * step;
        let ts: Vec<f64> = (-2..=2).map(|k| tc + k as f64 * h).collect();
        let r = pde_residual(&SpaceTimeField::from_fn(grid, &ts, &f)?)?;
        if r.max > worst.max || r.max.is_nan() {
            worst = r;
        }
    }
    Ok(worst)
}

/// Spatial region for comparisons.
#[derive(Debug, Clone, Copy)]
pub enum Region {
    Window { x_lo: f64, x_hi: f64 },
    Cone(Cone),
    Whole,
}

impl Region {
    fn contains(&self, x: f64, t: f64) -> bool {
        match self {
            Region::Window { x_lo, x_hi } => x >= *x_lo && x <= *x_hi,
            Region::Cone(c) => c.contains(x, t),
            Region::Whole => true,
        }
    }
}

pub enum Reference<'a> {
    Field(&'a SpaceTimeField),
    Fn(&'a (dyn Fn(f64, f64) -> Result<C64> + Sync)),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub t: f64,
    pub linf: f64,
    pub l2: f64,
    /// errors times t^scale_exponent
    pub linf_scaled: f64,
    pub l2_scaled: f64,
    pub points: usize,
}

/// Per-slice errors of `a` against `b` inside `region`. A reference field on
/// a different grid is evaluated by trigonometric interpolation; slices of
/// `a` without a matching reference time are skipped.
pub fn compare(a: &SpaceTimeField, b: Reference<'_>, region: Region, scale_exponent: f64) -> Result<Vec<CompareRow>> {
    let xs = a.grid.points();
    let mut rows = Vec::new();
    let mut planner = FftPlanner::new();
    for (j, &t) in a.t_samples.iter().enumerate() {
        let idx: Vec<usize> = (0..xs.len()).filter(|&i| region.contains(xs[i], t)).collect();
        if idx.is_empty() {
            continue;
        }
        let reference: Vec<C64> = match &b {
            Reference::Fn(f) => idx.par_iter().map(|&i| f(xs[i], t)).collect::<Result<_>>()?,
            Reference::Field(bf) => {
                let Some(slice) = bf.slice_at(t) else { continue };
                if bf.grid == a.grid {
                    idx.iter().map(|&i| slice[i]).collect()
                } else {
                    let mut spec = slice.to_vec();
                    planner.plan_fft_forward(spec.len()).process(&mut spec);
                    idx.par_iter().map(|&i| eval_spectrum(&spec, &bf.grid, xs[i])).collect()
                }
            }
        };
        let mut linf = 0.0f64;
        let mut l2 = 0.0;
        for (&i, r) in idx.iter().zip(&reference) {
            let e = (a.q[j][i] - r).norm();
            linf = linf.max(e);
            l2 += e * e;
        }
        let l2 = (l2 * a.grid.dx()).sqrt();
        let s = if scale_exponent == 0.0 { 1.0 } else { t.powf(scale_exponent) };
        rows.push(CompareRow { t, linf, l2, linf_scaled: linf * s, l2_scaled: l2 * s, points: idx.len() });
    }
    if rows.is_empty() {
        return Err(Error::Grid("no overlap between the field, the reference and the region".into()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sech_soliton(a: f64) -> impl Fn(f64, f64) -> Result<C64> + Sync {
        move |x, t| Ok(C64::from_polar(a / (a * x).cosh(), a * a * t / 2.0))
    }

    #[test]
    fn small_angle_rotation() {
        for phi in [0.0, 1e-9, -3e-5, 2e-3, 9.99e-3, 0.01, 0.7] {
            assert!((cis(phi) - C64::from_polar(1.0, phi)).norm() < 2e-16, "{phi}");
        }
    }

    #[test]
    fn zero_stays_zero() {
        let g = PeriodicGrid::new(-10.0, 10.0, 64).unwrap();
        let f = SplitStep::new(g, 0.01).unwrap().evolve(&vec![C64::new(0.0, 0.0); 64], &[0.0, 1.0]).unwrap();
        assert!(f.q[1].iter().all(|v| v.norm() == 0.0));
        assert_eq!(conserved(&f)[1], (0.0, 0.0, 0.0));
    }

    #[test]
    fn sech_soliton_evolution_and_invariants() {
        let g = PeriodicGrid::new(-40.0 * PI, 40.0 * PI, 4096).unwrap();
        let exact = sech_soliton(1.0);
        let q0: Vec<C64> = g.points().iter().map(|&x| exact(x, 0.0).unwrap()).collect();
        let f = SplitStep::new(g, 1e-3).unwrap().evolve(&q0, &[0.0, 1.0]).unwrap();
        let err = g.points().iter().zip(&f.q[1]).map(|(&x, v)| (v - exact(x, 1.0).unwrap()).norm()).fold(0.0, f64::max);
        assert!(err < 1e-6, "error {err}");
        let c = conserved(&f);
        assert!((c[0].0 - 2.0).abs() < 1e-8);
        assert!(((c[1].0 - c[0].0) / c[0].0).abs() < 1e-10);
        assert!((c[1].2 - c[0].2).abs() < 1e-8 * c[0].2.abs());
    }

    #[test]
    fn strang_is_second_order() {
        let g = PeriodicGrid::new(-20.0 * PI, 20.0 * PI, 2048).unwrap();
        let exact = sech_soliton(1.5);
        let q0: Vec<C64> = g.points().iter().map(|&x| exact(x, 0.0).unwrap()).collect();
        let err = |dt: f64| {
            let f = SplitStep::new(g, dt).unwrap().evolve(&q0, &[1.0]).unwrap();
            g.points().iter().zip(&f.q[0]).map(|(&x, v)| (v - exact(x, 1.0).unwrap()).norm()).fold(0.0, f64::max)
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn residual_of_exact_and_perturbed_fields() {
        let g = PeriodicGrid::new(-32.0, 32.0, 2048).unwrap();
        let r = pde_residual_fn(sech_soliton(1.0), g, 0.0, 1.0, 11, 1e-3).unwrap();
        assert!(r.max < 1e-8, "{r:?}");
        let bent = |x: f64, t: f64| Ok(C64::from_polar(1.0 / x.cosh(), 0.3 * t) * (1.0 + 0.5 * (-x * x).exp()));
        let r = pde_residual_fn(bent, g, 0.0, 1.0, 5, 1e-3).unwrap();
        assert!(r.max > 0.1);
        let f = SpaceTimeField::from_fn(g, &[0.0, 0.1, 0.2, 0.3], sech_soliton(1.0)).unwrap();
        assert!(matches!(pde_residual(&f), Err(Error::TooFewSlices(4))));
    }

    #[test]
    fn compare_self_and_resampled() {
        let g = PeriodicGrid::new(-20.0, 20.0, 512).unwrap();
        let f = SpaceTimeField::from_fn(g, &[0.0, 0.5], sech_soliton(1.0)).unwrap();
        let rows = compare(&f, Reference::Field(&f), Region::Whole, 0.0).unwrap();
        assert!(rows.iter().all(|r| r.linf == 0.0 && r.l2 == 0.0));
        let fine = SpaceTimeField::from_fn(PeriodicGrid::new(-20.0, 20.0, 1024).unwrap(), &[0.0, 0.5], sech_soliton(1.0)).unwrap();
        let rows = compare(&f, Reference::Field(&fine), Region::Window { x_lo: -5.0, x_hi: 5.0 }, 0.75).unwrap();
        assert!(rows.iter().all(|r| r.linf < 1e-12), "{rows:?}");
        let disjoint = Region::Window { x_lo: 30.0, x_hi: 40.0 };
        assert!(compare(&f, Reference::Field(&f), disjoint, 0.0).is_err());
    }

    #[test]
    fn field_round_trip_on_disk() {
        let g = PeriodicGrid::new(-5.0, 5.0, 16).unwrap();
        let f = SpaceTimeField::from_fn(g, &[0.0, 0.25], sech_soliton(1.0)).unwrap();
        let dir = std::env::temp_dir().join(format!("dpnls-field-{}", std::process::id()));
        f.save(&dir).unwrap();
        let back = SpaceTimeField::load(&dir).unwrap();
        assert_eq!(back.q, f.q);
        assert_eq!(back.t_samples, f.t_samples);
        fs::remove_dir_all(&dir).ok();
    }
}
