//! Experiment configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficients::{
    AffineVolatility, CoefficientSet, DriftFn, InterfaceIndex, InterfaceRate, TruncationSpec,
};
use crate::error::{Error, Result};
use crate::grid::{check_window, Grid, GridFunction, State, WINDOW_RESOLUTION};
use crate::noise::{AmbientGrid, ColoredNoise, GaussianKernel};
use crate::solver::SolveConfig;
use crate::spectral::SpectralOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Converge,
    StefanOracle,
    LemmaSuite,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Simulate => "simulate",
            Mode::Converge => "converge",
            Mode::StefanOracle => "stefan-oracle",
            Mode::LemmaSuite => "lemma-suite",
        })
    }
}

/// Drift `μ±(x, v, v')`, the same form on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftSpec {
    Zero,
    /// `μ(x, v, v') = value·v + gradient·v'`
    Linear { value: f64, gradient: f64 },
    /// `μ(x, v, v') = coef·v²`; slopes are unbounded.
    Quadratic { coef: f64 },
}

/// Volatility `σ±(x, v) = base·|x|·e^{−decay·|x|} + multiplier·v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VolatilitySpec {
    Zero,
    Affine { base: f64, decay: f64, multiplier: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RateSpec {
    Zero,
    Constant { value: f64 },
    Linear { alpha: f64, beta: f64 },
    Tanh { scale: f64, alpha: f64, beta: f64 },
    /// `ϱ(a, b) = ϱ₀ (a − b)`, the classical Stefan condition.
    Stefan { rho0: f64 },
}

impl RateSpec {
    pub fn build(&self) -> InterfaceRate {
        match *self {
            RateSpec::Zero => InterfaceRate::zero(),
            RateSpec::Constant { value } => InterfaceRate::constant(value),
            RateSpec::Linear { alpha, beta } => InterfaceRate::linear(alpha, beta),
            RateSpec::Tanh { scale, alpha, beta } => InterfaceRate::tanh(scale, alpha, beta),
            RateSpec::Stefan { rho0 } => InterfaceRate::linear(rho0, -rho0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub mu: DriftSpec,
    pub sigma: VolatilitySpec,
    pub rho: RateSpec,
    pub kernel: KernelSpec,
}

impl ModelSpec {
    pub fn build(&self) -> Result<CoefficientSet> {
        let mut b = CoefficientSet::builder(self.eta_plus, self.eta_minus).rho(self.rho.build());
        match self.mu {
            DriftSpec::Zero => {}
            DriftSpec::Linear { value, gradient } => {
                let f: DriftFn = Arc::new(move |_, v, dv| value * v + gradient * dv);
                b = b.mu(f.clone(), f, true);
            }
            DriftSpec::Quadratic { coef } => {
                let f: DriftFn = Arc::new(move |_, v, _| coef * v * v);
                b = b.mu(f.clone(), f, false);
            }
        }
        if let VolatilitySpec::Affine { base, decay, multiplier } = self.sigma {
            let side = AffineVolatility {
                base: Arc::new(move |x: f64| base * x.abs() * (-decay * x.abs()).exp()),
                multiplier: Arc::new(move |_| multiplier),
            };
            b = b.sigma_affine(side.clone(), side);
        }
        b.build()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub length: f64,
    pub interior: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientSpec {
    /// Room for the boundary to move in either direction.
    pub pad: f64,
    /// Noise grid spacing; the solution grid spacing `h` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

impl Default for AmbientSpec {
    fn default() -> Self {
        Self { pad: 1.0, spacing: None }
    }
}

/// Initial data; all shapes vanish at `0` and `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Zero { p0: f64 },
    /// `u₁ = a₊ sin(kπx/L)`, `u₂ = a₋ sin(kπx/L)`.
    Sine { mode: usize, amplitude_plus: f64, amplitude_minus: f64, p0: f64 },
    /// `u = a·x·e^{−x/width}·(1 − x/L)`.
    Bump { amplitude_plus: f64, amplitude_minus: f64, width: f64, p0: f64 },
}

impl InitialSpec {
    pub fn build(&self, grid: Grid) -> State {
        let l = grid.length();
        let (f1, f2, p0): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>, f64) = match *self {
            InitialSpec::Zero { p0 } => (Box::new(|_| 0.0), Box::new(|_| 0.0), p0),
            InitialSpec::Sine { mode, amplitude_plus, amplitude_minus, p0 } => {
                let k = mode as f64 * std::f64::consts::PI / l;
                (Box::new(move |x| amplitude_plus * (k * x).sin()), Box::new(move |x| amplitude_minus * (k * x).sin()), p0)
            }
            InitialSpec::Bump { amplitude_plus, amplitude_minus, width, p0 } => {
                let shape = move |x: f64| x * (-x / width).exp() * (1.0 - x / l);
                (Box::new(move |x| amplitude_plus * shape(x)), Box::new(move |x| amplitude_minus * shape(x)), p0)
            }
        };
        State { u1: GridFunction::from_fn(grid, f1), u2: GridFunction::from_fn(grid, f2), p: p0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default = "default_radius")]
    pub explosion_radius: f64,
    #[serde(default)]
    pub truncation: Option<f64>,
    /// Noise increments per step are sums of this many finer increments.
    #[serde(default = "one_u32")]
    pub noise_substeps: u32,
}

fn one() -> usize {
    1
}

fn one_u32() -> u32 {
    1
}

fn default_radius() -> f64 {
    1e6
}

impl SolveSpec {
    pub fn build(&self, interface: InterfaceIndex) -> Result<SolveConfig> {
        let mut cfg = SolveConfig::new(self.dt, self.horizon, interface);
        cfg.record_every = self.record_every;
        cfg.explosion_radius = self.explosion_radius;
        cfg.truncation = self.truncation.map(TruncationSpec::new).transpose()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default)]
    pub finite: Vec<u32>,
    #[serde(default = "yes")]
    pub include_infinity: bool,
}

fn yes() -> bool {
    true
}

impl FamilySpec {
    /// Finite indices in increasing order, then `∞`.
    pub fn members(&self) -> Vec<InterfaceIndex> {
        let mut finite = self.finite.clone();
        finite.sort_unstable();
        finite.dedup();
        let mut out: Vec<InterfaceIndex> = finite.into_iter().map(InterfaceIndex::Window).collect();
        if self.include_infinity {
            out.push(InterfaceIndex::Stefan);
        }
        out
    }
}

/// Half-open seed range `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedRange {
    pub start: u64,
    pub end: u64,
}

impl SeedRange {
    pub fn seeds(&self) -> Vec<u64> {
        (self.start..self.end).collect()
    }
}

impl FromStr for SeedRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("seeds", format!("expected `a..b`, got `{s}`"));
        let (a, b) = s.split_once("..").ok_or_else(bad)?;
        let start = a.trim().parse().map_err(|_| bad())?;
        let end = b.trim().parse().map_err(|_| bad())?;
        if end <= start {
            return Err(Error::config("seeds", format!("empty range `{s}`")));
        }
        Ok(Self { start, end })
    }
}

/// Seeds as an explicit list or a `"a..b"` range string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range(String),
}

impl SeedSpec {
    pub fn resolve(&self) -> Result<Vec<u64>> {
        match self {
            SeedSpec::List(v) => Ok(v.clone()),
            SeedSpec::Range(s) => Ok(s.parse::<SeedRange>()?.seeds()),
        }
    }
}

impl From<SeedRange> for SeedSpec {
    fn from(r: SeedRange) -> Self {
        SeedSpec::List(r.seeds())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Write moving-frame profiles at every recorded time.
    #[serde(default)]
    pub profiles: bool,
    /// Write full-state float64 dumps.
    #[serde(default)]
    pub binary: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), profiles: false, binary: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StefanSpec {
    /// Far-field value `V` of the one-phase profile.
    pub far_value: f64,
    pub rho0: f64,
    /// Time at which the exact profile is imposed as initial data.
    pub t0: f64,
    /// Also rerun on the refined grid and report the error ratio.
    #[serde(default)]
    pub refine: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Window indices checked by the window properties; all must be resolvable.
    #[serde(default = "default_windows")]
    pub windows: Vec<u32>,
}

fn default_samples() -> usize {
    200
}

fn default_windows() -> Vec<u32> {
    vec![1, 2, 4, 8, 16, 32]
}

impl Default for LemmaSpec {
    fn default() -> Self {
        Self { samples: default_samples(), seed: 0, windows: default_windows() }
    }
}

fn default_q() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub model: ModelSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub ambient: AmbientSpec,
    pub initial: InitialSpec,
    pub solve: SolveSpec,
    pub family: FamilySpec,
    pub seeds: SeedSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    /// Exponent of the `(E sup_t d^q)^{1/q}` means.
    #[serde(default = "default_q")]
    pub q: f64,
    /// Converge mode: also rerun with `dt/2` and the refined grid.
    #[serde(default)]
    pub refine: bool,
    #[serde(default)]
    pub stefan: Option<StefanSpec>,
    #[serde(default)]
    pub lemma: LemmaSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config("<toml>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.length, self.grid.interior).map_err(|e| Error::config("grid", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        let m = &self.model;
        for (field, v) in [("model.eta_plus", m.eta_plus), ("model.eta_minus", m.eta_minus), ("model.kernel.scale", m.kernel.scale)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        if !(self.ambient.pad.is_finite() && self.ambient.pad > 0.0) {
            return Err(Error::config("ambient.pad", format!("must be positive, got {}", self.ambient.pad)));
        }
        let s = &self.solve;
        if !(s.dt.is_finite() && s.dt > 0.0) {
            return Err(Error::config("solve.dt", format!("must be positive, got {}", s.dt)));
        }
        if !(s.horizon.is_finite() && s.horizon >= s.dt) {
            return Err(Error::config("solve.horizon", format!("must satisfy dt <= T, got T = {}", s.horizon)));
        }
        if s.record_every == 0 {
            return Err(Error::config("solve.record_every", "must be at least 1"));
        }
        if s.noise_substeps == 0 {
            return Err(Error::config("solve.noise_substeps", "must be at least 1"));
        }
        if let Some(dy) = self.ambient.spacing {
            if !(dy.is_finite() && dy > 0.0) {
                return Err(Error::config("ambient.spacing", format!("must be positive, got {dy}")));
            }
        }
        if !(s.explosion_radius > 0.0) {
            return Err(Error::config("solve.explosion_radius", format!("must be positive, got {}", s.explosion_radius)));
        }
        if let Some(r) = s.truncation {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::config("solve.truncation", format!("must be positive, got {r}")));
            }
        }
        if !(self.q.is_finite() && self.q >= 1.0) {
            return Err(Error::config("q", format!("must be at least 1, got {}", self.q)));
        }
        if self.mode != Mode::LemmaSuite {
            for &n in &self.family.finite {
                check_window(&grid, n, WINDOW_RESOLUTION)
                    .map_err(|_| Error::config("family.finite", format!("n = {n} needs 1/n >= 2h = {} and 1/n < L", 2.0 * grid.h())))?;
            }
            if self.family.members().is_empty() {
                return Err(Error::config("family", "no members"));
            }
            if self.seeds.resolve()?.is_empty() {
                return Err(Error::config("seeds", "no seeds"));
            }
        }
        match self.mode {
            Mode::Converge => {
                if !self.family.include_infinity {
                    return Err(Error::config("family.include_infinity", "converge mode compares against n = inf"));
                }
                if self.family.members().len() < 4 {
                    return Err(Error::config("family.finite", "converge mode needs at least 3 finite n values"));
                }
            }
            Mode::StefanOracle => {
                let st = self.stefan.as_ref().ok_or_else(|| Error::config("stefan", "required in stefan-oracle mode"))?;
                if self.model.sigma != VolatilitySpec::Zero {
                    return Err(Error::config("model.sigma", "stefan-oracle needs sigma = zero"));
                }
                if self.model.mu != DriftSpec::Zero {
                    return Err(Error::config("model.mu", "stefan-oracle needs mu = zero"));
                }
                if !(st.far_value.is_finite() && st.far_value > 0.0) {
                    return Err(Error::config("stefan.far_value", "must be positive"));
                }
                if !(st.rho0.is_finite() && st.rho0 >= 0.0) {
                    return Err(Error::config("stefan.rho0", "must be nonnegative"));
                }
                if !(st.t0.is_finite() && st.t0 > 0.0 && st.t0 < s.horizon) {
                    return Err(Error::config("stefan.t0", "must lie in (0, T)"));
                }
            }
            Mode::Simulate | Mode::LemmaSuite => {}
        }
        Ok(())
    }

    /// Operator, coefficients, noise and initial state shared by all cells.
    pub fn setup(&self) -> Result<Setup> {
        let grid = self.grid()?;
        let op = SpectralOperator::new(grid, self.model.eta_plus, self.model.eta_minus)?;
        let coefficients = self.model.build()?;
        let x0 = self.initial.build(grid);
        let spacing = self.ambient.spacing.unwrap_or(grid.h());
        let ambient = AmbientGrid::covering_with_spacing(&grid, x0.p, self.ambient.pad, spacing)?;
        let noise = ColoredNoise::gaussian(GaussianKernel::new(self.model.kernel.scale)?, ambient)?;
        Ok(Setup { grid, op, coefficients, noise, x0 })
    }

    /// Same experiment with `dt/2` and twice the spatial resolution.
    pub fn refined(&self) -> Self {
        let mut out = self.clone();
        out.grid.interior = 2 * (self.grid.interior + 1) - 1;
        out.solve.dt = self.solve.dt / 2.0;
        out.solve.record_every = self.solve.record_every * 2;
        out.solve.noise_substeps = (self.solve.noise_substeps / 2).max(1);
        out
    }

    /// A coarse run and its refinement driven by the same Brownian path: the
    /// noise grid is pinned to the coarse spacing and every coarse increment
    /// sums two fine ones.
    pub fn refinement_pair(&self) -> Result<(Self, Self)> {
        let mut coarse = self.clone();
        coarse.ambient.spacing = Some(self.ambient.spacing.unwrap_or(self.grid()?.h()));
        coarse.solve.noise_substeps = self.solve.noise_substeps * 2;
        let fine = coarse.refined();
        Ok((coarse, fine))
    }
}

#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Grid,
    pub op: SpectralOperator,
    pub coefficients: CoefficientSet,
    pub noise: ColoredNoise,
    pub x0: State,
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"
mode = "converge"
seeds = "0..4"
q = 2.0

[model]
eta_plus = 1.0
eta_minus = 0.5
mu = { kind = "linear", value = -0.5, gradient = 0.0 }
sigma = { kind = "affine", base = 0.3, decay = 1.0, multiplier = 0.2 }
rho = { kind = "tanh", scale = 1.0, alpha = 1.0, beta = 1.0 }
kernel = { scale = 0.25 }

[grid]
length = 2.0
interior = 127

[initial]
kind = "bump"
amplitude_plus = 1.0
amplitude_minus = 0.5
width = 0.5
p0 = 0.0

[solve]
dt = 2e-3
horizon = 0.5
truncation = 10.0

[family]
finite = [4, 8, 16, 32]
"#;

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.mode, Mode::Converge);
        assert_eq!(cfg.seeds.resolve().unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(cfg.family.members().len(), 5);
        assert_eq!(cfg.solve.record_every, 1);
        assert!(cfg.model.build().unwrap().flags().global());
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    fn field_of(text: &str) -> String {
        match ExperimentConfig::from_toml(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn diagnostics_name_the_field() {
        assert_eq!(field_of(&SAMPLE.replace("finite = [4, 8, 16, 32]", "finite = [4, 8, 16, 64]")), "family.finite");
        assert_eq!(field_of(&SAMPLE.replace("finite = [4, 8, 16, 32]", "finite = [4, 8]")), "family.finite");
        assert_eq!(field_of(&SAMPLE.replace("dt = 2e-3", "dt = -1.0")), "solve.dt");
        assert_eq!(field_of(&SAMPLE.replace("scale = 0.25", "scale = 0.0")), "model.kernel.scale");
        assert_eq!(field_of(&SAMPLE.replace("seeds = \"0..4\"", "seeds = \"4..4\"")), "seeds");
        assert_eq!(field_of(&SAMPLE.replace("interior = 127", "interior = 2")), "grid");
        assert_eq!(field_of(&SAMPLE.replace("q = 2.0", "q = 2.0\nbogus = 1")), "<toml>");
        assert_eq!(field_of(&SAMPLE.replace("mode = \"converge\"", "mode = \"stefan-oracle\"")), "stefan");
    }

    #[test]
    fn seed_ranges() {
        assert_eq!("3..6".parse::<SeedRange>().unwrap().seeds(), vec![3, 4, 5]);
        assert!("6..3".parse::<SeedRange>().is_err());
        assert!("x".parse::<SeedRange>().is_err());
    }

    #[test]
    fn refined_halves_steps() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap().refined();
        assert_eq!(cfg.grid.interior, 255);
        assert_eq!(cfg.solve.dt, 1e-3);
        let g = cfg.grid().unwrap();
        assert_eq!(g.h(), 2.0 / 256.0);
    }

    #[test]
    fn refinement_pair_shares_the_noise_grid() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let (coarse, fine) = cfg.refinement_pair().unwrap();
        assert_eq!(coarse.ambient.spacing, Some(2.0 / 128.0));
        assert_eq!(fine.ambient.spacing, coarse.ambient.spacing);
        assert_eq!((coarse.solve.noise_substeps, fine.solve.noise_substeps), (2, 1));
        assert_eq!(fine.solve.dt, coarse.solve.dt / 2.0);
        let (a, b) = (coarse.setup().unwrap(), fine.setup().unwrap());
        assert_eq!(a.noise.ambient(), b.noise.ambient());
    }

    #[test]
    fn initial_shapes_vanish_at_ends() {
        let g = Grid::new(2.0, 63).unwrap();
        for spec in [
            InitialSpec::Sine { mode: 2, amplitude_plus: 1.0, amplitude_minus: -1.0, p0: 0.3 },
            InitialSpec::Bump { amplitude_plus: 1.0, amplitude_minus: 2.0, width: 0.5, p0: 0.0 },
        ] {
            let x = spec.build(g);
            assert!(x.u1.values()[0].abs() < 0.1 && x.u1.values()[62].abs() < 0.1);
        }
    }
}
