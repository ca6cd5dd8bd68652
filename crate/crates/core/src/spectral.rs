//! The linear part `A = diag(η₊Δ_D, η₋Δ_D, 0) − Id` and its semigroup,
//! diagonalized exactly in the discrete sine basis.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{d2, norm, state_norm, Grid, GridFunction, Norm, State};

/// Discrete sine transform of type I, `c_k = Σ_i v_i sin(π i k / (M+1))`,
/// evaluated through a complex FFT of length `2(M+1)`.
#[derive(Clone)]
pub struct SineTransform {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SineTransform").field("len", &self.len).finish()
    }
}

impl SineTransform {
    pub fn new(len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (len + 1));
        Self { len, fft }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, values: &mut [f64]) {
        assert_eq!(values.len(), self.len);
        let n = 2 * (self.len + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (i, &v) in values.iter().enumerate() {
            buf[i + 1].re = v;
            buf[n - 1 - i].re = -v;
        }
        self.fft.process(&mut buf);
        for (k, v) in values.iter_mut().enumerate() {
            *v = -0.5 * buf[k + 1].im;
        }
    }

    /// Inverse of [`forward`](Self::forward): the same transform scaled by `2/(M+1)`.
    pub fn inverse(&self, values: &mut [f64]) {
        self.forward(values);
        let scale = 2.0 / (self.len as f64 + 1.0);
        values.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Discrete Dirichlet Laplacian eigenvalue `λ_k = (4/h²) sin²(kπh/(2L))`.
pub fn laplacian_eigenvalue(grid: &Grid, k: usize) -> f64 {
    let h = grid.h();
    let s = (k as f64 * std::f64::consts::PI * h / (2.0 * grid.length())).sin();
    4.0 / (h * h) * s * s
}

#[derive(Debug, Clone)]
pub struct SpectralOperator {
    grid: Grid,
    eta_plus: f64,
    eta_minus: f64,
    eigenvalues_plus: Vec<f64>,
    eigenvalues_minus: Vec<f64>,
    dst: SineTransform,
}

impl SpectralOperator {
    pub fn new(grid: Grid, eta_plus: f64, eta_minus: f64) -> Result<Self> {
        for (name, eta) in [("eta_plus", eta_plus), ("eta_minus", eta_minus)] {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(Error::Assumption(format!("{name} must be positive, got {eta}")));
            }
        }
        let lambdas: Vec<f64> = (1..=grid.len()).map(|k| laplacian_eigenvalue(&grid, k)).collect();
        Ok(Self {
            grid,
            eta_plus,
            eta_minus,
            eigenvalues_plus: lambdas.iter().map(|l| -eta_plus * l - 1.0).collect(),
            eigenvalues_minus: lambdas.iter().map(|l| -eta_minus * l - 1.0).collect(),
            dst: SineTransform::new(grid.len()),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eta_plus(&self) -> f64 {
        self.eta_plus
    }

    pub fn eta_minus(&self) -> f64 {
        self.eta_minus
    }

    /// Eigenvalues of the first block, `−η₊λ_k − 1`, `k = 1..M`.
    pub fn eigenvalues_plus(&self) -> &[f64] {
        &self.eigenvalues_plus
    }

    pub fn eigenvalues_minus(&self) -> &[f64] {
        &self.eigenvalues_minus
    }

    pub fn sine_transform(&self) -> &SineTransform {
        &self.dst
    }

    fn check(&self, x: &State) -> Result<()> {
        if *x.grid() != self.grid || x.u2.grid() != x.u1.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn apply_a(&self, x: &State) -> Result<State> {
        self.check(x)?;
        let block = |u: &GridFunction, eta: f64| {
            let mut out = d2(u).scaled(eta);
            out.axpy(-1.0, u);
            out
        };
        Ok(State { u1: block(&x.u1, self.eta_plus), u2: block(&x.u2, self.eta_minus), p: -x.p })
    }

    /// `e^{tA} X`, exact in the sine basis.
    pub fn semigroup(&self, t: f64, x: &State) -> Result<State> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        self.check(x)?;
        if t == 0.0 {
            return Ok(x.clone());
        }
        Ok(self.propagator(t).apply(x))
    }

    /// Precomputed `e^{tA}` for repeated application with a fixed `t`.
    pub fn propagator(&self, t: f64) -> Propagator {
        let decay = |eigs: &[f64]| eigs.iter().map(|e| (t * e).exp()).collect();
        Propagator {
            factors_plus: decay(&self.eigenvalues_plus),
            factors_minus: decay(&self.eigenvalues_minus),
            scalar: (-t).exp(),
            dst: self.dst.clone(),
        }
    }

    /// `∫₀ᵗ e^{sA} ds`, the exact integrator of a drift frozen over `[0, t]`.
    pub fn integrated_propagator(&self, t: f64) -> Propagator {
        let phi = |e: f64| if (t * e).abs() < 1e-8 { t * (1.0 + 0.5 * t * e) } else { (t * e).exp_m1() / e };
        let weights = |eigs: &[f64]| eigs.iter().map(|&e| phi(e)).collect();
        Propagator {
            factors_plus: weights(&self.eigenvalues_plus),
            factors_minus: weights(&self.eigenvalues_minus),
            scalar: phi(-1.0),
            dst: self.dst.clone(),
        }
    }

    /// `k`-th discrete sine mode `sin(kπx/L)` on the grid.
    pub fn mode(&self, k: usize) -> GridFunction {
        let l = self.grid.length();
        GridFunction::from_fn(self.grid, |x| (k as f64 * std::f64::consts::PI * x / l).sin())
    }

    /// Graph-norm equivalence constant `sup ‖u‖_{H²} / ‖Au‖`, swept over the
    /// sine modes of both blocks and the scalar direction.
    pub fn k_a(&self) -> f64 {
        let mut best: f64 = 1.0; // (0, 0, 1): ‖·‖_{H²} = 1 = ‖A·‖
        for k in 1..=self.grid.len() {
            let phi = self.mode(k);
            let h2 = norm(&phi, Norm::H2);
            let l2 = norm(&phi, Norm::L2);
            let lam = laplacian_eigenvalue(&self.grid, k);
            for eta in [self.eta_plus, self.eta_minus] {
                best = best.max(h2 / ((eta * lam + 1.0) * l2));
            }
        }
        best
    }

    /// `(‖S_t X‖_α, t^{β−α} ‖X‖_β)` for the smoothing estimate of the
    /// analytic semigroup; orders map `0 → L2`, `1/2 → H1`, `1 → H2`.
    pub fn smoothing_check(&self, t: f64, x: &State, alpha: Norm, beta: Norm) -> Result<(f64, f64)> {
        let order = |n: Norm| match n {
            Norm::L2 => 0.0,
            Norm::H1 => 0.5,
            Norm::H2 => 1.0,
        };
        if order(alpha) < order(beta) {
            return Err(Error::config("alpha", "smoothing order alpha must be >= beta"));
        }
        if !(t > 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let lhs = state_norm(&self.semigroup(t, x)?, alpha);
        let rhs = t.powf(order(beta) - order(alpha)) * state_norm(x, beta);
        Ok((lhs, rhs))
    }
}

/// `e^{tA}` for a fixed `t`, with the sine transform plan attached.
#[derive(Debug, Clone)]
pub struct Propagator {
    factors_plus: Vec<f64>,
    factors_minus: Vec<f64>,
    scalar: f64,
    dst: SineTransform,
}

impl Propagator {
    fn block(&self, u: &GridFunction, factors: &[f64]) -> GridFunction {
        let mut v = u.values().to_vec();
        self.dst.forward(&mut v);
        v.iter_mut().zip(factors).for_each(|(c, f)| *c *= f);
        self.dst.inverse(&mut v);
        GridFunction::from_values(*u.grid(), v).expect("length preserved")
    }

    /// `e^{tA} x + W b` with `W` another diagonal operator, sharing one
    /// inverse transform per block.
    pub fn apply_with_source(&self, x: &State, weights: &Propagator, b: &State) -> State {
        let block = |u: &GridFunction, f: &[f64], v: &GridFunction, w: &[f64]| {
            let mut a = u.values().to_vec();
            let mut c = v.values().to_vec();
            self.dst.forward(&mut a);
            self.dst.forward(&mut c);
            for (((a, c), f), w) in a.iter_mut().zip(&c).zip(f).zip(w) {
                *a = *a * f + c * w;
            }
            self.dst.inverse(&mut a);
            GridFunction::from_values(*u.grid(), a).expect("length preserved")
        };
        State {
            u1: block(&x.u1, &self.factors_plus, &b.u1, &weights.factors_plus),
            u2: block(&x.u2, &self.factors_minus, &b.u2, &weights.factors_minus),
            p: self.scalar * x.p + weights.scalar * b.p,
        }
    }

    pub fn apply(&self, x: &State) -> State {
        State {
            u1: self.block(&x.u1, &self.factors_plus),
            u2: self.block(&x.u2, &self.factors_minus),
            p: self.scalar * x.p,
        }
    }
}
