//! Deterministic one-phase Stefan problem against its similarity solution.
//!
//! With `u₂ ≡ 0`, `μ = σ = 0` and `ϱ(a, b) = ϱ₀ (a − b)` the moving-frame
//! profile solves `v_t = η v_xx` on `x > p(t)`, `v(p) = 0`, `v(∞) = V`,
//! `p' = ϱ₀ v_x(p+)`. The similarity solution is
//! `v = A (erf(x / 2√(ηt)) − erf λ)`, `A = V / erfc λ`, `p = 2λ√(ηt)`, where
//! `λ e^{λ²} erfc λ = ϱ₀ V / (η √π)`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};

use super::config::{ExperimentConfig, RateSpec, StefanSpec};
use super::simulate::{write_json, Manifest};
use crate::coefficients::InterfaceIndex;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, State};
use crate::noise::{AmbientGrid, ColoredNoise, GaussianKernel, NoiseStream};
use crate::solver::{solve, SolveConfig};
use crate::spectral::SpectralOperator;

/// `λ e^{λ²} erfc λ`, increasing from 0 towards `1/√π`.
pub fn similarity_lhs(lambda: f64) -> f64 {
    lambda * (lambda * lambda).exp() * erfc(lambda)
}

/// Root of `λ e^{λ²} erfc λ = β` by bisection on `[0, 20]`.
pub fn similarity_lambda(beta: f64) -> Result<f64> {
    if beta == 0.0 {
        return Ok(0.0);
    }
    let sup = 1.0 / std::f64::consts::PI.sqrt();
    if !(beta > 0.0 && beta < sup) {
        return Err(Error::RootFinding(format!("need 0 <= beta < 1/sqrt(pi), got {beta}")));
    }
    let (mut lo, mut hi) = (0.0f64, 20.0f64);
    if similarity_lhs(hi) < beta {
        return Err(Error::RootFinding(format!("no root below {hi} for beta = {beta}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if similarity_lhs(mid) < beta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exact one-phase solution for given `η`, `ϱ₀`, `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub eta: f64,
    pub rho0: f64,
    pub far_value: f64,
    pub lambda: f64,
}

impl Similarity {
    pub fn new(eta: f64, rho0: f64, far_value: f64) -> Result<Self> {
        let beta = rho0 * far_value / (eta * std::f64::consts::PI.sqrt());
        Ok(Self { eta, rho0, far_value, lambda: similarity_lambda(beta)? })
    }

    pub fn front(&self, t: f64) -> f64 {
        2.0 * self.lambda * (self.eta * t).sqrt()
    }

    /// `v(t, x)` for `x ≥ p(t)`.
    pub fn profile(&self, t: f64, x: f64) -> f64 {
        let a = self.far_value / erfc(self.lambda);
        a * (erf(x / (2.0 * (self.eta * t).sqrt())) - erf(self.lambda))
    }

    /// Fixed-frame state at time `t`; the truncation at `L` only matters far
    /// from the front.
    pub fn state(&self, grid: Grid, t: f64) -> State {
        let p = self.front(t);
        State { u1: GridFunction::from_fn(grid, |x| self.profile(t, p + x)), u2: GridFunction::zeros(grid), p }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRun {
    pub interior: usize,
    pub h: f64,
    /// `max |p − p*| / p*` over `t ∈ [T/2, T]`.
    pub max_rel_error: f64,
    pub rel_error_at_horizon: f64,
    pub max_abs_error: f64,
    /// `(t, p, p*)` at every step.
    pub series: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StefanReport {
    pub similarity: Similarity,
    pub t0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub run: FrontRun,
    /// Same run with `h` and `dt` halved.
    pub refined: Option<FrontRun>,
}

impl StefanReport {
    /// Refined (`h` and `dt` halved) over coarse error in the front; `≤ 0.5`
    /// when refinement at least halves it.
    pub fn refinement_ratio(&self) -> Option<f64> {
        Some(self.refined.as_ref()?.max_abs_error / self.run.max_abs_error)
    }
}

fn run_front(cfg: &ExperimentConfig, st: &StefanSpec, sim: &Similarity, grid: Grid) -> Result<FrontRun> {
    let op = SpectralOperator::new(grid, cfg.model.eta_plus, cfg.model.eta_minus)?;
    let c = cfg.model.build()?.with_rho(RateSpec::Stefan { rho0: st.rho0 }.build());
    let x0 = sim.state(grid, st.t0);
    let ambient = AmbientGrid::covering(&grid, x0.p, cfg.ambient.pad)?;
    let noise = ColoredNoise::gaussian(GaussianKernel::new(cfg.model.kernel.scale)?, ambient)?;
    let horizon = cfg.solve.horizon;
    let steps = ((horizon - st.t0) / cfg.solve.dt).round() as usize;
    let mut solve_cfg = SolveConfig::new(cfg.solve.dt, steps as f64 * cfg.solve.dt, InterfaceIndex::Stefan);
    solve_cfg.explosion_radius = cfg.solve.explosion_radius;
    let traj = solve(&op, &c, &noise, &solve_cfg, &x0, &NoiseStream::new(0))?;
    if traj.exit.exited() {
        return Err(Error::Assumption(format!("Stefan run stopped early: {:?}", traj.exit)));
    }
    let series: Vec<(f64, f64, f64)> =
        traj.times.iter().zip(&traj.states).map(|(s, x)| (st.t0 + s, x.p, sim.front(st.t0 + s))).collect();
    let t_end = series.last().map_or(horizon, |r| r.0);
    let rel = |&(_, p, q): &(f64, f64, f64)| if q == 0.0 { (p - q).abs() } else { ((p - q) / q).abs() };
    let late = series.iter().filter(|r| r.0 >= 0.5 * t_end);
    Ok(FrontRun {
        interior: grid.len(),
        h: grid.h(),
        max_rel_error: late.clone().map(rel).fold(0.0, f64::max),
        rel_error_at_horizon: series.last().map_or(0.0, rel),
        max_abs_error: late.map(|r| (r.1 - r.2).abs()).fold(0.0, f64::max),
        series,
    })
}

pub fn stefan_report(cfg: &ExperimentConfig) -> Result<StefanReport> {
    let st = cfg.stefan.as_ref().ok_or_else(|| Error::config("stefan", "required in stefan-oracle mode"))?;
    let sim = Similarity::new(cfg.model.eta_plus, st.rho0, st.far_value)?;
    let grid = cfg.grid()?;
    let run = run_front(cfg, st, &sim, grid)?;
    let refined = if st.refine {
        let fine = cfg.refined();
        Some(run_front(&fine, st, &sim, fine.grid()?)?)
    } else {
        None
    };
    Ok(StefanReport { similarity: sim, t0: st.t0, horizon: cfg.solve.horizon, dt: cfg.solve.dt, run, refined })
}

/// Writes `stefan.json` and `front.csv` (`t,p,p_exact`).
pub fn run_stefan_oracle(cfg: &ExperimentConfig, out: &Path) -> Result<StefanReport> {
    let report = stefan_report(cfg)?;
    fs::create_dir_all(out)?;
    Manifest::new(cfg, &[]).write(out)?;
    let mut csv = BufWriter::new(File::create(out.join("front.csv"))?);
    writeln!(csv, "t,p,p_exact")?;
    for (t, p, q) in &report.run.series {
        writeln!(csv, "{t},{p},{q}")?;
    }
    csv.flush()?;
    let mut summary = report.clone();
    summary.run.series.clear();
    if let Some(r) = summary.refined.as_mut() {
        r.series.clear();
    }
    write_json(&out.join("stefan.json"), &summary)?;
    Ok(report)
}
