use crate::C64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("profile tail not decayed: |q| = {value:.3e} at x = {x} exceeds {tol:.1e} of the peak")]
    TailTruncation { x: f64, value: f64, tol: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("integrator step failure at x = {x}: worst local error {err:.3e}")]
    StepFailure { x: f64, err: f64 },

    #[error("spectral singularity at z = {z}: |s11| = {value:.3e} (no zeros of s11 on the real line allowed)")]
    SpectralSingularity { z: f64, value: f64 },

    #[error("invalid search box: {0}")]
    InvalidBox(String),

    #[error("contour passes too close to a zero of s11 near {z}")]
    ContourTooClose { z: C64 },

    #[error("zero count mismatch: argument principle gives {contour}, refinement found {refined}")]
    CountMismatch { contour: usize, refined: usize },

    #[error("circle quadrature at {z} did not converge: radii disagree by {achieved:.3e}")]
    CircleQuadrature { z: C64, achieved: f64 },

    #[error("norming ratios at {z} disagree: {first} vs {second}")]
    NormingMismatch { z: C64, first: C64, second: C64 },

    #[error("t must be nonzero")]
    ZeroTime,

    #[error("z = {0} lies on the cut (-inf, z0]; a side must be selected")]
    OnCut(C64),

    #[error("z = {z} is within the guard radius of the pole {pole}")]
    NearPole { z: C64, pole: C64 },

    #[error("r grid [{lo}, {hi}] does not bracket z0 = {z0}")]
    GridBracket { lo: f64, hi: f64, z0: f64 },

    #[error("coincident spectral points {0} and {1}")]
    Coincident(C64, C64),

    #[error("invalid discrete datum: {0}")]
    InvalidDatum(String),

    #[error("linear solve failed (condition estimate {cond:.3e})")]
    Singular { cond: f64 },

    #[error("z = {0} is a pole of m")]
    PoleEvaluation(C64),

    #[error("Gamma has a pole at {0}")]
    GammaPole(C64),

    #[error("nu = 0 with r0 = {0} nonzero")]
    ZeroNu(C64),

    #[error("outer matrix is near singular: det = {0}")]
    NearSingular(C64),

    #[error("(x, t) = ({x}, {t}) lies outside the cone")]
    OutsideCone { x: f64, t: f64 },

    #[error("t = {t} is below the asymptotic guard {min}")]
    TimeGuard { t: f64, min: f64 },

    #[error("split-step produced a non-finite field at t = {0}")]
    Blowup(f64),

    #[error("need at least 5 uniform time slices, got {0}")]
    TooFewSlices(usize),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
