//! Run configuration: one TOML file, `--set key=value` overrides, and the
//! DPNLS_OUTPUT_DIR environment variable for the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use dpnls_core::phase::Cone;
use dpnls_core::scattering::{JostSettings, SearchBox, ZeroSettings};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const OUTPUT_DIR_ENV: &str = "DPNLS_OUTPUT_DIR";

/// Annotated defaults, printed by `dpnls defaults`. A unit test keeps this
/// text and `RunConfig::default()` in agreement.
pub const REFERENCE: &str = r#"# dpnls run configuration. Every key is optional; the values shown are the
# defaults. Command-line `--set section.key=value` overrides any key.

# Directory receiving all outputs. Overridden by DPNLS_OUTPUT_DIR, which is
# in turn overridden by --output-dir.
output_dir = "dpnls-out"

# Exactly one data source must be given, either here or via --profile /
# --scattering:
#   profile = "q0.csv"          columns x, re q, im q (scatter, evolve)
#   scattering = "data.json"    scattering document (soliton, asymptote,
#                               evolve, compare)
#   [source.builtin]            analytic profile (scatter, evolve)
#   kind = "sech"               sech | gaussian | zero
#   amplitude = 2.0
#   x_min = -30.0
#   x_max = 30.0
#   points = 6001
[source]

[scatter]
# search rectangle for zeros of s11: re_min, re_max, im_min, im_max
search_box = [-2.0, 2.0, 0.05, 2.5]
# real grid for the reflection coefficient
r_min = -8.0
r_max = 8.0
r_points = 1601
# Jost integrator tolerances
rtol = 1e-12
atol = 1e-14
# profile tail must fall below this fraction of the peak
tail_tol = 1e-10
# |s11| below this on the real line is a spectral singularity (exit 2)
singular_threshold = 1e-8
# order-2 criterion |s11'| < double_tol |s11''| at a refined zero
double_tol = 1e-6

# (x, t) grid for the soliton sweep, and the x range of `asymptote` when no
# cone is given
[grid]
x_min = -20.0
x_max = 20.0
x_points = 401
t_min = 0.0
t_max = 1.0
t_points = 11

# Optional space-time cone x = x0 + v t, x0 in [x1, x2], v in [v1, v2].
#   [cone]
#   x1 = 0.0
#   x2 = 0.0
#   v1 = -0.2
#   v2 = 0.2

[asymptote]
t_min = 10.0
t_max = 40.0
t_points = 4
# samples across each cone cross-section
x_points = 41
# smallest admissible t; requests below it exit with code 2
time_guard = 5.0
# below this |r(z0)| the dispersive term is taken as zero
r_floor = 1e-12

[evolve]
# periodic domain [x_min, x_max), default [-40 pi, 40 pi)
x_min = -125.66370614359172
x_max = 125.66370614359172
# number of Fourier modes (power of two)
modes = 4096
dt = 1e-3
t_end = 1.0
# saved slices, uniform on [0, t_end]
t_slices = 11

[compare]
# directory of a saved field (manifest.json plus slice CSVs)
field = "dpnls-out/field"
# second saved field; when empty, the soliton closure of the scattering
# source is the reference
reference_field = ""
# whole | window | cone
region = "whole"
window = [-10.0, 10.0]
# errors are also reported times t^scale_exponent
scale_exponent = 0.0

[verify]
# fixture directory; empty means the fixtures shipped with the crate
fixtures = ""
# criterion ids to run; empty runs all
only = []
report = "verify_report.json"
"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub source: SourceConfig,
    pub scatter: ScatterConfig,
    pub grid: GridConfig,
    pub cone: Option<ConeConfig>,
    pub asymptote: AsymptoteConfig,
    pub evolve: EvolveConfig,
    pub compare: CompareConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("dpnls-out"),
            source: SourceConfig::default(),
            scatter: ScatterConfig::default(),
            grid: GridConfig::default(),
            cone: None,
            asymptote: AsymptoteConfig::default(),
            evolve: EvolveConfig::default(),
            compare: CompareConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub profile: Option<PathBuf>,
    pub scattering: Option<PathBuf>,
    pub builtin: Option<BuiltinProfile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Sech,
    Gaussian,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinProfile {
    pub kind: ProfileKind,
    #[serde(default = "one")]
    pub amplitude: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

fn one() -> f64 {
    1.0
}

/// The single data source of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Profile(PathBuf),
    Scattering(PathBuf),
    Builtin(BuiltinProfile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterConfig {
    pub search_box: [f64; 4],
    pub r_min: f64,
    pub r_max: f64,
    pub r_points: usize,
    pub rtol: f64,
    pub atol: f64,
    pub tail_tol: f64,
    pub singular_threshold: f64,
    pub double_tol: f64,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        let j = JostSettings::default();
        Self {
            search_box: [-2.0, 2.0, 0.05, 2.5],
            r_min: -8.0,
            r_max: 8.0,
            r_points: 1601,
            rtol: j.rtol,
            atol: j.atol,
            tail_tol: j.tail_tol,
            singular_threshold: j.singular_threshold,
            double_tol: ZeroSettings::default().double_tol,
        }
    }
}

impl ScatterConfig {
    pub fn jost(&self) -> JostSettings {
        JostSettings {
            rtol: self.rtol,
            atol: self.atol,
            tail_tol: self.tail_tol,
            singular_threshold: self.singular_threshold,
        }
    }

    pub fn zeros(&self) -> ZeroSettings {
        ZeroSettings { double_tol: self.double_tol, ..ZeroSettings::default() }
    }

    pub fn search_box(&self) -> Result<SearchBox, CliError> {
        let [a, b, c, d] = self.search_box;
        Ok(SearchBox::new(a, b, c, d)?)
    }

    pub fn r_grid(&self) -> Vec<f64> {
        linspace(self.r_min, self.r_max, self.r_points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { x_min: -20.0, x_max: 20.0, x_points: 401, t_min: 0.0, t_max: 1.0, t_points: 11 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeConfig {
    pub x1: f64,
    pub x2: f64,
    pub v1: f64,
    pub v2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoteConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub x_points: usize,
    pub time_guard: f64,
    pub r_floor: f64,
}

impl Default for AsymptoteConfig {
    fn default() -> Self {
        Self { t_min: 10.0, t_max: 40.0, t_points: 4, x_points: 41, time_guard: 5.0, r_floor: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub modes: usize,
    pub dt: f64,
    pub t_end: f64,
    pub t_slices: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        let l = 40.0 * std::f64::consts::PI;
        Self { x_min: -l, x_max: l, modes: 4096, dt: 1e-3, t_end: 1.0, t_slices: 11 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Whole,
    Window,
    Cone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub field: PathBuf,
    pub reference_field: PathBuf,
    pub region: RegionKind,
    pub window: [f64; 2],
    pub scale_exponent: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            field: PathBuf::from("dpnls-out/field"),
            reference_field: PathBuf::new(),
            region: RegionKind::Whole,
            window: [-10.0, 10.0],
            scale_exponent: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub fixtures: PathBuf,
    pub only: Vec<String>,
    pub report: PathBuf,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { fixtures: PathBuf::new(), only: Vec::new(), report: PathBuf::from("verify_report.json") }
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|j| a + (b - a) * j as f64 / (n - 1) as f64).collect(),
    }
}

/// Parses `value` as a TOML literal, falling back to a bare string.
fn parse_literal(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.to_string())),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

/// Applies one `a.b.c=value` override to a TOML table.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{assignment}' is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad key in override '{assignment}'")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("'{p}' in '{key}' is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_literal(value.trim()));
    Ok(())
}

impl RunConfig {
    /// Reads the optional config file, then applies the overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg = from_table(table)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("scatter.rtol", self.scatter.rtol),
            ("scatter.atol", self.scatter.atol),
            ("scatter.tail_tol", self.scatter.tail_tol),
            ("scatter.singular_threshold", self.scatter.singular_threshold),
            ("scatter.double_tol", self.scatter.double_tol),
            ("asymptote.r_floor", self.asymptote.r_floor),
            ("evolve.dt", self.evolve.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(c) = &self.cone {
            self.cone_checked(c)?;
        }
        if self.compare.region == RegionKind::Cone && self.cone.is_none() {
            return Err(CliError::Config("compare.region = \"cone\" needs a [cone] section".into()));
        }
        Ok(())
    }

    fn cone_checked(&self, c: &ConeConfig) -> Result<Cone, CliError> {
        Cone::new(c.x1, c.x2, c.v1, c.v2).map_err(|_| {
            CliError::Config(format!("cone must satisfy x1 <= x2 and v1 <= v2, got {c:?}"))
        })
    }

    pub fn cone(&self) -> Result<Option<Cone>, CliError> {
        self.cone.as_ref().map(|c| self.cone_checked(c)).transpose()
    }

    /// Exactly one configured data source.
    pub fn data_source(&self) -> Result<DataSource, CliError> {
        let s = &self.source;
        let mut found = Vec::new();
        if let Some(p) = &s.profile {
            found.push(DataSource::Profile(p.clone()));
        }
        if let Some(p) = &s.scattering {
            found.push(DataSource::Scattering(p.clone()));
        }
        if let Some(b) = &s.builtin {
            found.push(DataSource::Builtin(*b));
        }
        match found.len() {
            1 => Ok(found.pop().unwrap()),
            0 => Err(CliError::Config("no data source: give a profile, a scattering document or a builtin profile".into())),
            _ => Err(CliError::Config("more than one data source configured".into())),
        }
    }
}

fn from_table(table: toml::Table) -> Result<RunConfig, CliError> {
    toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_text_matches_defaults() {
        let table: toml::Table = REFERENCE.parse().unwrap();
        let cfg = from_table(table).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn overrides_win_over_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        fs::write(&p, "[grid]\nx_min = -5.0\nx_points = 11\n").unwrap();
        let cfg = RunConfig::load(Some(&p), &["grid.x_min=-7.5".into(), "source.profile=q0.csv".into()]).unwrap();
        assert_eq!(cfg.grid.x_min, -7.5);
        assert_eq!(cfg.grid.x_points, 11);
        assert_eq!(cfg.data_source().unwrap(), DataSource::Profile("q0.csv".into()));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::load(None, &["scatter.rtol=-1.0".into()]).is_err());
        assert!(RunConfig::load(None, &["cone.x1=1.0".into(), "cone.x2=0.0".into(), "cone.v1=0.0".into(), "cone.v2=0.0".into()]).is_err());
        assert!(RunConfig::load(None, &["grid.nonsense=1".into()]).is_err());
        assert!(RunConfig::load(None, &["grid".into()]).is_err());
        let two = RunConfig::load(None, &["source.profile=a.csv".into(), "source.scattering=b.json".into()]).unwrap();
        assert!(two.data_source().is_err());
        assert!(RunConfig::default().data_source().is_err());
    }
}
