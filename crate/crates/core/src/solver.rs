//! Exponential-Euler integration of the mild equation
//! `X(t) = S_t X₀ + ∫ S_{t−s} B(X) ds + ∫ S_{t−s} C(X) dW`,
//! with exit-time bookkeeping and explosion detection.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::coefficients::{
    diffusion_c_scaled, drift_b_scaled, CoefficientSet, InterfaceIndex, TruncationSpec,
};
use crate::error::{Error, Result};
use crate::grid::{norm, state_norm_sq, trace_grad, Norm, State};
use crate::noise::{ColoredNoise, NoiseDigest, NoiseIncrement, NoiseStream};
use crate::spectral::{Propagator, SpectralOperator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub dt: f64,
    pub horizon: f64,
    pub interface: InterfaceIndex,
    pub truncation: Option<TruncationSpec>,
    /// Explosion is declared once `‖X‖_{H²}` exceeds this radius.
    pub explosion_radius: f64,
    pub record_every: usize,
}

impl SolveConfig {
    pub fn new(dt: f64, horizon: f64, interface: InterfaceIndex) -> Self {
        Self { dt, horizon, interface, truncation: None, explosion_radius: 1e6, record_every: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidTimeStep(self.dt));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(Error::config("solve.horizon", format!("need dt <= T, got T = {}", self.horizon)));
        }
        if !(self.explosion_radius > 0.0) {
            return Err(Error::config("solve.explosion_radius", "must be positive"));
        }
        if self.record_every == 0 {
            return Err(Error::config("solve.record_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// How a trajectory stopped before the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Exit {
    None,
    /// `‖X‖_{H²}` exceeded the explosion radius after `step` steps.
    NormExceeded { step: usize, time: f64, threshold: f64 },
    /// A non-finite value appeared in step `step`; the last finite state is kept.
    NonFinite { step: usize, time: f64 },
    /// The boundary left the ambient noise window.
    LeftWindow { step: usize, time: f64 },
}

impl Exit {
    pub fn exited(&self) -> bool {
        !matches!(self, Exit::None)
    }

    /// Time of the last valid state.
    pub fn time(&self) -> Option<f64> {
        match *self {
            Exit::None => None,
            Exit::NormExceeded { time, .. } | Exit::NonFinite { time, .. } | Exit::LeftWindow { time, .. } => {
                Some(time)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub interface: InterfaceIndex,
    /// Sampled every `record_every` steps, plus the final state.
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// `(t_k, ‖X(t_k)‖_{H²})` at every step, `k = 0..`.
    pub norms: Vec<(f64, f64)>,
    pub exit: Exit,
    pub noise_digest: u64,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Time up to which the path is valid (the horizon or the exit time).
    pub fn survival_time(&self) -> f64 {
        self.norms.last().map(|n| n.0).unwrap_or(0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.norms.iter().fold(0.0, |a, &(_, n)| a.max(n))
    }

    /// CSV rows `t,p,norm_L2,norm_H1,norm_H2,trace_grad_u1,trace_grad_u2`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "t,p,norm_L2,norm_H1,norm_H2,trace_grad_u1,trace_grad_u2")?;
        for (t, x) in self.times.iter().zip(&self.states) {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                t,
                x.p,
                crate::grid::state_norm(x, Norm::L2),
                crate::grid::state_norm(x, Norm::H1),
                crate::grid::state_norm(x, Norm::H2),
                trace_grad(&x.u1),
                trace_grad(&x.u2)
            )?;
        }
        Ok(())
    }

    /// Little-endian float64 dump, `[time][slot][node]`: `u1` (M values),
    /// `u2` (M values), then `p` as a single value.
    pub fn write_states_binary<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for x in &self.states {
            for v in x.u1.values().iter().chain(x.u2.values()).chain(std::iter::once(&x.p)) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Everything a step needs besides the state and the increment.
pub struct Stepper<'a> {
    op: &'a SpectralOperator,
    coefficients: &'a CoefficientSet,
    noise: &'a ColoredNoise,
    config: &'a SolveConfig,
    propagator: Propagator,
    integrator: Propagator,
}

impl<'a> Stepper<'a> {
    pub fn new(
        op: &'a SpectralOperator,
        coefficients: &'a CoefficientSet,
        noise: &'a ColoredNoise,
        config: &'a SolveConfig,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            op,
            coefficients,
            noise,
            config,
            propagator: op.propagator(config.dt),
            integrator: op.integrated_propagator(config.dt),
        })
    }

    /// `X⁺ = S_dt (X + C(X) ΔW) + ∫₀^dt S_s ds · B(X)`. The drift is frozen
    /// over the step and integrated exactly through the semigroup; the
    /// diffusion is evaluated at the left endpoint.
    pub fn step(&self, x: &State, inc: Option<&NoiseIncrement>) -> Result<State> {
        if *x.grid() != *self.op.grid() {
            return Err(Error::GridMismatch);
        }
        let factor = self.config.truncation.as_ref().map_or(1.0, |t| t.h_r(state_norm_sq(x, Norm::H2)));
        let drift = drift_b_scaled(self.coefficients, x, self.config.interface, factor)?;
        let mut y = x.clone();
        if let Some(inc) = inc {
            let diff = diffusion_c_scaled(self.coefficients, x, inc, self.noise, factor)?;
            y.axpy(1.0, &diff);
        }
        let out = self.propagator.apply_with_source(&y, &self.integrator, &drift);
        if !out.is_finite() {
            return Err(Error::NonFinite(inc.map_or(0, |i| i.step_index as usize)));
        }
        Ok(out)
    }
}

/// One exponential-Euler step; see [`Stepper::step`].
pub fn step(
    op: &SpectralOperator,
    c: &CoefficientSet,
    noise: &ColoredNoise,
    cfg: &SolveConfig,
    x: &State,
    inc: Option<&NoiseIncrement>,
) -> Result<State> {
    Stepper::new(op, c, noise, cfg)?.step(x, inc)
}

/// Integrates up to the horizon, stopping early on explosion.
///
/// Noise is drawn from `stream` one increment per step; when the volatility
/// is identically zero the increments are skipped altogether.
pub fn solve(
    op: &SpectralOperator,
    c: &CoefficientSet,
    noise: &ColoredNoise,
    cfg: &SolveConfig,
    x0: &State,
    stream: &NoiseStream,
) -> Result<Trajectory> {
    let stepper = Stepper::new(op, c, noise, cfg)?;
    let steps = cfg.steps();
    let mut digest = NoiseDigest::default();
    let h2 = |x: &State| state_norm_sq(x, Norm::H2).sqrt();

    let mut traj = Trajectory {
        interface: cfg.interface,
        times: vec![0.0],
        states: vec![x0.clone()],
        norms: vec![(0.0, h2(x0))],
        exit: Exit::None,
        noise_digest: 0,
    };
    let mut x = x0.clone();
    for k in 0..steps {
        let t_next = (k + 1) as f64 * cfg.dt;
        let t_now = k as f64 * cfg.dt;
        let inc = if c.sigma_is_zero() {
            None
        } else {
            let inc = stream.sample_increment(k as u64, cfg.dt, noise.ambient())?;
            digest.absorb(&inc);
            Some(inc)
        };
        let next = match stepper.step(&x, inc.as_ref()) {
            Ok(next) => next,
            Err(Error::NonFinite(_)) => {
                traj.exit = Exit::NonFinite { step: k, time: t_now };
                break;
            }
            Err(Error::BoundaryLeftWindow { .. }) => {
                traj.exit = Exit::LeftWindow { step: k, time: t_now };
                break;
            }
            Err(e) => return Err(e),
        };
        let n = h2(&next);
        if !n.is_finite() {
            traj.exit = Exit::NonFinite { step: k, time: t_now };
            break;
        }
        x = next;
        traj.norms.push((t_next, n));
        let last = k + 1 == steps;
        if n > cfg.explosion_radius {
            traj.exit = Exit::NormExceeded { step: k + 1, time: t_next, threshold: cfg.explosion_radius };
        }
        if (k + 1) % cfg.record_every == 0 || last || traj.exit.exited() {
            traj.times.push(t_next);
            traj.states.push(x.clone());
        }
        if traj.exit.exited() {
            break;
        }
    }
    if traj.exit.exited() && *traj.times.last().unwrap() != traj.survival_time() {
        traj.times.push(traj.survival_time());
        traj.states.push(x);
    }
    traj.noise_digest = digest.finish();
    Ok(traj)
}

/// First passage times of the recorded norm sequence through `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitTimes {
    /// `inf { t : ‖X(t)‖ ≥ r }`, `∞` if never.
    pub sigma: f64,
    /// `inf { t : ‖X(t)‖ > r }`, `∞` if never.
    pub tau: f64,
}

pub fn exit_times_of(norms: &[(f64, f64)], r: f64) -> ExitTimes {
    let first = |pred: &dyn Fn(f64) -> bool| norms.iter().find(|(_, n)| pred(*n)).map_or(f64::INFINITY, |(t, _)| *t);
    ExitTimes { sigma: first(&|n| n >= r), tau: first(&|n| n > r) }
}

pub fn exit_times(traj: &Trajectory, r: f64) -> ExitTimes {
    exit_times_of(&traj.norms, r)
}

/// `‖u₁‖` of the first block; convenience for examples and tests.
pub fn first_block_norm(x: &State, order: Norm) -> f64 {
    norm(&x.u1, order)
}
