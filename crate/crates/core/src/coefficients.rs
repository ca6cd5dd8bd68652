//! Model coefficients and the nonlinear maps built from them: `N_μ`, the
//! interface functionals `Ψ_n` / `Ψ_∞`, the drift `B_n`, the diffusion `C`,
//! and the smooth cutoff `h_r`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    check_window, d1, free_norm_sq, norm, state_free_norm, state_norm, state_norm_sq, trace_grad, window_mean,
    GridFunction, Norm, State,
};
use crate::noise::{ColoredNoise, NoiseIncrement};

pub type DriftFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type VolatilityFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type InterfaceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Radius → Lipschitz constant on the ball of that radius.
pub type LipschitzFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Interface index `n ∈ {1, 2, …} ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InterfaceIndex {
    Window(u32),
    Stefan,
}

impl InterfaceIndex {
    pub fn label(&self) -> String {
        match self {
            InterfaceIndex::Window(n) => n.to_string(),
            InterfaceIndex::Stefan => "inf".into(),
        }
    }
}

impl fmt::Display for InterfaceIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// The interface speed map `ϱ` with its local Lipschitz bound.
#[derive(Clone)]
pub struct InterfaceRate {
    pub rate: InterfaceFn,
    pub lipschitz: LipschitzFn,
    pub bounded: bool,
}

impl InterfaceRate {
    pub fn new(
        rate: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        lipschitz: impl Fn(f64) -> f64 + Send + Sync + 'static,
        bounded: bool,
    ) -> Self {
        Self { rate: Arc::new(rate), lipschitz: Arc::new(lipschitz), bounded }
    }

    pub fn zero() -> Self {
        Self::new(|_, _| 0.0, |_| 0.0, true)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_, _| c, |_| 0.0, true)
    }

    /// `ϱ(a, b) = α a + β b`.
    pub fn linear(alpha: f64, beta: f64) -> Self {
        let lip = alpha.hypot(beta);
        Self::new(move |a, b| alpha * a + beta * b, move |_| lip, alpha == 0.0 && beta == 0.0)
    }

    /// `ϱ(a, b) = c · tanh(α a + β b)`.
    pub fn tanh(scale: f64, alpha: f64, beta: f64) -> Self {
        let lip = scale.abs() * alpha.hypot(beta);
        Self::new(move |a, b| scale * (alpha * a + beta * b).tanh(), move |_| lip, true)
    }

    #[inline]
    pub fn eval(&self, a: f64, b: f64) -> f64 {
        (self.rate)(a, b)
    }
}

/// Which growth/boundedness assumptions the coefficient set satisfies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionFlags {
    pub rho_bounded: bool,
    pub sigma_affine: bool,
    pub mu_bounded_slopes: bool,
}

impl AssumptionFlags {
    /// All of the linear-growth conditions that give global solutions.
    pub fn global(&self) -> bool {
        self.rho_bounded && self.sigma_affine && self.mu_bounded_slopes
    }
}

/// Affine volatility `σ(x, v) = σ¹(x) + σ²(x) v`.
#[derive(Clone)]
pub struct AffineVolatility {
    pub base: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub multiplier: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl AffineVolatility {
    pub fn into_fn(self) -> VolatilityFn {
        Arc::new(move |x, v| (self.base)(x) + (self.multiplier)(x) * v)
    }
}

#[derive(Clone)]
pub struct CoefficientSet {
    eta_plus: f64,
    eta_minus: f64,
    mu_plus: DriftFn,
    mu_minus: DriftFn,
    sigma_plus: VolatilityFn,
    sigma_minus: VolatilityFn,
    rho: InterfaceRate,
    flags: AssumptionFlags,
    sigma_zero: bool,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("eta_plus", &self.eta_plus)
            .field("eta_minus", &self.eta_minus)
            .field("flags", &self.flags)
            .finish_non_exhaustive()
    }
}

/// Builder for [`CoefficientSet`]; unset coefficients are zero.
#[derive(Clone)]
pub struct CoefficientBuilder {
    eta_plus: f64,
    eta_minus: f64,
    mu_plus: Option<DriftFn>,
    mu_minus: Option<DriftFn>,
    mu_bounded_slopes: bool,
    sigma: Option<(VolatilityFn, VolatilityFn, bool)>,
    rho: InterfaceRate,
}

impl CoefficientBuilder {
    pub fn mu(mut self, plus: DriftFn, minus: DriftFn, bounded_slopes: bool) -> Self {
        self.mu_plus = Some(plus);
        self.mu_minus = Some(minus);
        self.mu_bounded_slopes = bounded_slopes;
        self
    }

    pub fn sigma(mut self, plus: VolatilityFn, minus: VolatilityFn) -> Self {
        self.sigma = Some((plus, minus, false));
        self
    }

    pub fn sigma_affine(mut self, plus: AffineVolatility, minus: AffineVolatility) -> Self {
        self.sigma = Some((plus.into_fn(), minus.into_fn(), true));
        self
    }

    pub fn rho(mut self, rho: InterfaceRate) -> Self {
        self.rho = rho;
        self
    }

    /// Validates positivity of `η±` and the boundary condition `σ±(0,0) = 0`.
    pub fn build(self) -> Result<CoefficientSet> {
        for (name, eta) in [("eta_plus", self.eta_plus), ("eta_minus", self.eta_minus)] {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(Error::Assumption(format!("{name} must be positive, got {eta}")));
            }
        }
        let zero_drift: DriftFn = Arc::new(|_, _, _| 0.0);
        let zero_vol: VolatilityFn = Arc::new(|_, _| 0.0);
        let sigma_zero = self.sigma.is_none();
        let (sigma_plus, sigma_minus, sigma_affine) = self.sigma.unwrap_or((zero_vol.clone(), zero_vol, true));
        for (name, s) in [("sigma_plus", &sigma_plus), ("sigma_minus", &sigma_minus)] {
            let at_origin = s(0.0, 0.0);
            if at_origin != 0.0 {
                return Err(Error::Assumption(format!("{name}(0, 0) = {at_origin}, boundary condition needs 0")));
            }
        }
        let mu_zero = self.mu_plus.is_none();
        Ok(CoefficientSet {
            eta_plus: self.eta_plus,
            eta_minus: self.eta_minus,
            mu_plus: self.mu_plus.unwrap_or_else(|| zero_drift.clone()),
            mu_minus: self.mu_minus.unwrap_or(zero_drift),
            sigma_plus,
            sigma_minus,
            flags: AssumptionFlags {
                rho_bounded: self.rho.bounded,
                sigma_affine,
                mu_bounded_slopes: mu_zero || self.mu_bounded_slopes,
            },
            rho: self.rho,
            sigma_zero,
        })
    }
}

impl CoefficientSet {
    pub fn builder(eta_plus: f64, eta_minus: f64) -> CoefficientBuilder {
        CoefficientBuilder {
            eta_plus,
            eta_minus,
            mu_plus: None,
            mu_minus: None,
            mu_bounded_slopes: false,
            sigma: None,
            rho: InterfaceRate::zero(),
        }
    }

    pub fn eta_plus(&self) -> f64 {
        self.eta_plus
    }

    pub fn eta_minus(&self) -> f64 {
        self.eta_minus
    }

    pub fn rho(&self) -> &InterfaceRate {
        &self.rho
    }

    pub fn flags(&self) -> AssumptionFlags {
        self.flags
    }

    /// True when no volatility was configured; the noise term is skipped.
    pub fn sigma_is_zero(&self) -> bool {
        self.sigma_zero
    }

    pub fn with_rho(&self, rho: InterfaceRate) -> Self {
        let mut out = self.clone();
        out.flags.rho_bounded = rho.bounded;
        out.rho = rho;
        out
    }

    pub fn sigma_plus(&self, x: f64, v: f64) -> f64 {
        (self.sigma_plus)(x, v)
    }

    pub fn sigma_minus(&self, x: f64, v: f64) -> f64 {
        (self.sigma_minus)(x, v)
    }
}

/// `N_μ(u) = (μ₊(x, u₁, ∂u₁), μ₋(−x, u₂, −∂u₂), 0)`; the second slot is the
/// reflected left phase.
pub fn n_mu(c: &CoefficientSet, x: &State) -> State {
    n_mu_with(c, x, &d1(&x.u1), &d1(&x.u2))
}

fn n_mu_with(c: &CoefficientSet, x: &State, du1: &GridFunction, du2: &GridFunction) -> State {
    let grid = *x.grid();
    let mut u1 = GridFunction::zeros(grid);
    let mut u2 = GridFunction::zeros(grid);
    for (i, xi) in grid.nodes().enumerate() {
        u1.values_mut()[i] = (c.mu_plus)(xi, x.u1.values()[i], du1.values()[i]);
        u2.values_mut()[i] = (c.mu_minus)(-xi, x.u2.values()[i], -du2.values()[i]);
    }
    State { u1, u2, p: 0.0 }
}

/// Arguments handed to `ϱ`: windowed means for finite `n`, one-sided
/// gradients for `n = ∞`; the second entry carries the reflection sign.
pub fn interface_arguments(x: &State, n: InterfaceIndex) -> Result<(f64, f64)> {
    match n {
        InterfaceIndex::Window(n) => Ok((window_mean(&x.u1, n)?, -window_mean(&x.u2, n)?)),
        InterfaceIndex::Stefan => Ok((trace_grad(&x.u1), -trace_grad(&x.u2))),
    }
}

pub fn psi(c: &CoefficientSet, x: &State, n: InterfaceIndex) -> Result<f64> {
    let (a, b) = interface_arguments(x, n)?;
    Ok(c.rho.eval(a, b))
}

/// Smooth cutoff of the squared norm: `1` on `[0, r²]`, `0` on
/// `[(r+1)², ∞)`, quintic smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    r: f64,
}

impl TruncationSpec {
    pub fn new(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::config("truncation", format!("radius must be positive, got {r}")));
        }
        Ok(Self { r })
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn h_r(&self, s: f64) -> f64 {
        let lo = self.r * self.r;
        let hi = (self.r + 1.0) * (self.r + 1.0);
        if s <= lo {
            1.0
        } else if s >= hi {
            0.0
        } else {
            let t = (s - lo) / (hi - lo);
            1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        }
    }

    /// `sup |h_r'| = 15 / (8 (2r + 1))`, attained mid-transition.
    pub fn max_slope(&self) -> f64 {
        15.0 / (8.0 * (2.0 * self.r + 1.0))
    }
}

/// `B_n(X) = N_μ(X) + Ψ_n(X) ∇̄X + X`, times `h_r(‖X‖²_{H²})` when truncated.
pub fn drift_b(c: &CoefficientSet, x: &State, n: InterfaceIndex, trunc: Option<&TruncationSpec>) -> Result<State> {
    let factor = cutoff(x, trunc);
    drift_b_scaled(c, x, n, factor)
}

fn cutoff(x: &State, trunc: Option<&TruncationSpec>) -> f64 {
    trunc.map_or(1.0, |t| t.h_r(state_norm_sq(x, Norm::H2)))
}

pub(crate) fn drift_b_scaled(c: &CoefficientSet, x: &State, n: InterfaceIndex, factor: f64) -> Result<State> {
    let rate = psi(c, x, n)?;
    if factor == 0.0 {
        return Ok(State::zeros(*x.grid()));
    }
    let du1 = d1(&x.u1);
    let du2 = d1(&x.u2);
    let mut out = n_mu_with(c, x, &du1, &du2);
    out.u1.axpy(rate, &du1);
    out.u2.axpy(-rate, &du2);
    out.p += rate;
    out.axpy(1.0, x);
    if factor != 1.0 {
        out = out.scaled(factor);
    }
    Ok(out)
}

/// `C(X) dW = (σ₊(x, u₁) ξ(p + x), σ₋(−x, u₂) ξ(p − x), 0)` for one increment.
pub fn diffusion_c(
    c: &CoefficientSet,
    x: &State,
    inc: &NoiseIncrement,
    noise: &ColoredNoise,
    trunc: Option<&TruncationSpec>,
) -> Result<State> {
    diffusion_c_scaled(c, x, inc, noise, cutoff(x, trunc))
}

pub(crate) fn diffusion_c_scaled(
    c: &CoefficientSet,
    x: &State,
    inc: &NoiseIncrement,
    noise: &ColoredNoise,
    factor: f64,
) -> Result<State> {
    let grid = *x.grid();
    let (xi_plus, xi_minus) = noise.color_field(inc, x.p, &grid)?;
    let mut out = State::zeros(grid);
    for (i, xi) in grid.nodes().enumerate() {
        out.u1.values_mut()[i] = factor * (c.sigma_plus)(xi, x.u1.values()[i]) * xi_plus[i];
        out.u2.values_mut()[i] = factor * (c.sigma_minus)(-xi, x.u2.values()[i]) * xi_minus[i];
    }
    Ok(out)
}

/// Hilbert–Schmidt size of `C(X)` into `L²`:
/// `(Σ_i h σ(x_i, u_i)² ‖ζ(p ± x_i, ·)‖²)^{1/2}` over both sides.
pub fn diffusion_hs_norm(c: &CoefficientSet, x: &State, noise: &ColoredNoise) -> f64 {
    let grid = *x.grid();
    let h = grid.h();
    let mut acc = 0.0;
    for (i, xi) in grid.nodes().enumerate() {
        let a = (c.sigma_plus)(xi, x.u1.values()[i]) * noise.l2_at(x.p + xi);
        let b = (c.sigma_minus)(-xi, x.u2.values()[i]) * noise.l2_at(x.p - xi);
        acc += h * (a * a + b * b);
    }
    acc.sqrt()
}

/// Minimum window width, in cells, for [`psi_gap_bound`].
pub const GAP_RESOLUTION: f64 = 10.0;

/// `(‖B_n(X) − B_∞(X)‖_{H¹}, n^{−1/2} [ϱ]_{2‖X‖} ‖X‖_{H²}(1 + ‖X‖_{H²})(1 + 10h))`.
pub fn psi_gap_bound(c: &CoefficientSet, x: &State, n: u32) -> Result<(f64, f64)> {
    check_window(x.grid(), n, GAP_RESOLUTION)?;
    let h = x.grid().h();
    let bn = drift_b(c, x, InterfaceIndex::Window(n), None)?;
    let binf = drift_b(c, x, InterfaceIndex::Stefan, None)?;
    let gap = state_free_norm(&bn.sub(&binf), Norm::H1);
    let r = state_norm(x, Norm::H2);
    let bound = (n as f64).powf(-0.5) * (c.rho.lipschitz)(2.0 * r) * r * (1.0 + r) * (1.0 + 10.0 * h);
    Ok((gap, bound))
}

/// `‖∇̄X‖_{H¹}` where `∇̄X = (∂u₁, −∂u₂, 1)`.
pub fn grad_bar_h1(x: &State) -> f64 {
    (free_norm_sq(&d1(&x.u1), Norm::H1) + free_norm_sq(&d1(&x.u2), Norm::H1) + 1.0).sqrt()
}

/// Same as `norm(u, H2)`; the bound used for the window argument is `2‖u‖_{H²}`.
pub fn window_bound(u: &GridFunction) -> f64 {
    2.0 * norm(u, Norm::H2) * (1.0 + 10.0 * u.grid().h())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::noise::{AmbientGrid, GaussianKernel, NoiseStream};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(2.0, 255).unwrap()
    }

    fn linear_state(g: Grid) -> State {
        State::new(GridFunction::from_fn(g, |x| x), GridFunction::zeros(g), 0.3).unwrap()
    }

    #[test]
    fn n_mu_cases() {
        let g = grid();
        let f = GridFunction::from_fn(g, |x| (PI * x / 2.0).sin());
        let x = State::new(f.clone(), f.scaled(0.5), 1.0).unwrap();
        let zero = CoefficientSet::builder(1.0, 1.0).build().unwrap();
        assert_eq!(n_mu(&zero, &x), State::zeros(g));
        let ident = CoefficientSet::builder(1.0, 1.0)
            .mu(Arc::new(|_, v, _| v), Arc::new(|_, _, _| 0.0), true)
            .build()
            .unwrap();
        let out = n_mu(&ident, &x);
        assert_eq!(out.u1, f);
        assert_eq!(out.u2, GridFunction::zeros(g));
        assert_eq!(out.p, 0.0);
        let slope = CoefficientSet::builder(1.0, 1.0)
            .mu(Arc::new(|_, _, dv| dv), Arc::new(|_, _, dv| dv), true)
            .build()
            .unwrap();
        let out = n_mu(&slope, &x);
        assert_eq!(out.u1, d1(&f));
        // reflected slot carries the sign flip of the slope
        assert_eq!(out.u2, d1(&f.scaled(0.5)).scaled(-1.0));
    }

    #[test]
    fn n_mu_reflects_spatial_argument() {
        let g = Grid::new(1.0, 9).unwrap();
        let c = CoefficientSet::builder(1.0, 1.0)
            .mu(Arc::new(|x, _, _| x), Arc::new(|x, _, _| x), true)
            .build()
            .unwrap();
        let out = n_mu(&c, &State::zeros(g));
        for (i, x) in g.nodes().enumerate() {
            assert_eq!(out.u1.values()[i], x);
            assert_eq!(out.u2.values()[i], -x);
        }
    }

    #[test]
    fn psi_cases() {
        let g = grid();
        let rho = InterfaceRate::linear(1.0, -1.0);
        let c = CoefficientSet::builder(1.0, 1.0).rho(rho).build().unwrap();
        assert_eq!(psi(&c, &State::zeros(g), InterfaceIndex::Stefan).unwrap(), 0.0);
        let x = linear_state(g);
        for n in [1u32, 2, 4, 16, 64] {
            assert_relative_eq!(psi(&c, &x, InterfaceIndex::Window(n)).unwrap(), 1.0, epsilon = 1e-12);
        }
        assert_relative_eq!(psi(&c, &x, InterfaceIndex::Stefan).unwrap(), 1.0, epsilon = 1e-12);
        // u2(y) = y enters with a minus sign in both functionals
        let y = State::new(GridFunction::zeros(g), GridFunction::from_fn(g, |x| x), 0.0).unwrap();
        assert_relative_eq!(psi(&c, &y, InterfaceIndex::Window(4)).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(psi(&c, &y, InterfaceIndex::Stefan).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn psi_gap_on_quadratic_data() {
        let g = grid();
        let h = g.h();
        let c = CoefficientSet::builder(1.0, 1.0).rho(InterfaceRate::linear(1.0, 0.0)).build().unwrap();
        let x = State::new(GridFunction::from_fn(g, |x| x * x), GridFunction::zeros(g), 0.0).unwrap();
        for n in [2u32, 8, 32] {
            let got = psi(&c, &x, InterfaceIndex::Window(n)).unwrap();
            assert!((got - 2.0 / (3.0 * n as f64)).abs() <= n as f64 * h * h);
        }
        assert!(psi(&c, &x, InterfaceIndex::Stefan).unwrap().abs() < 1e-12);
        let coarse = State::zeros(Grid::new(1.0, 7).unwrap());
        assert!(matches!(psi(&c, &coarse, InterfaceIndex::Window(8)), Err(Error::WindowUnresolved { .. })));
    }

    #[test]
    fn drift_cases() {
        let g = grid();
        let x0 = State::zeros(g);
        let c = CoefficientSet::builder(1.0, 1.0).rho(InterfaceRate::linear(1.0, 1.0)).build().unwrap();
        assert_eq!(drift_b(&c, &x0, InterfaceIndex::Stefan, None).unwrap(), x0);

        let transport = CoefficientSet::builder(1.0, 1.0).rho(InterfaceRate::constant(1.0)).build().unwrap();
        let f = GridFunction::from_fn(g, |x| x * (2.0 - x) * x);
        let x = State::new(f.clone(), f.scaled(2.0), 0.7).unwrap();
        let got = drift_b(&transport, &x, InterfaceIndex::Window(8), None).unwrap();
        let mut want = State::new(d1(&f), d1(&f.scaled(2.0)).scaled(-1.0), 1.0).unwrap();
        want.axpy(1.0, &x);
        assert!(state_norm(&got.sub(&want), Norm::L2) < 1e-14);

        let t = TruncationSpec::new(0.5).unwrap();
        let big = x.scaled(100.0);
        assert!(state_norm_sq(&big, Norm::H2) >= 1.5f64.powi(2));
        assert_eq!(drift_b(&transport, &big, InterfaceIndex::Stefan, Some(&t)).unwrap(), State::zeros(g));
    }

    #[test]
    fn volatility_boundary_condition_is_enforced() {
        let bad = CoefficientSet::builder(1.0, 1.0).sigma(Arc::new(|_, _| 1.0), Arc::new(|_, _| 0.0)).build();
        assert!(matches!(bad, Err(Error::Assumption(_))));
        assert!(CoefficientSet::builder(0.0, 1.0).build().is_err());
    }

    #[test]
    fn diffusion_cases() {
        let g = Grid::new(1.0, 63).unwrap();
        let a = AmbientGrid::covering(&g, 0.0, 1.0).unwrap();
        let noise = ColoredNoise::gaussian(GaussianKernel::new(0.2).unwrap(), a).unwrap();
        let inc = NoiseStream::new(4).sample_increment(0, 0.01, &a).unwrap();
        let f = GridFunction::from_fn(g, |x| (PI * x).sin());
        let x = State::new(f.clone(), f.clone(), 0.1).unwrap();

        let zero = CoefficientSet::builder(1.0, 1.0).build().unwrap();
        assert_eq!(diffusion_c(&zero, &x, &inc, &noise, None).unwrap(), State::zeros(g));

        let mult = CoefficientSet::builder(1.0, 1.0).sigma(Arc::new(|_, v| v), Arc::new(|_, v| v)).build().unwrap();
        let out = diffusion_c(&mult, &x, &inc, &noise, None).unwrap();
        let (xi_p, _) = noise.color_field(&inc, x.p, &g).unwrap();
        let max_xi = xi_p.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(out.u1.values()[0].abs() <= f.values()[0].abs() * max_xi);
        assert!(f.values()[0] <= PI * g.h());
        assert_eq!(out.p, 0.0);

        let far = State::new(f.clone(), f, 5.0).unwrap();
        assert!(matches!(diffusion_c(&mult, &far, &inc, &noise, None), Err(Error::BoundaryLeftWindow { .. })));
    }

    #[test]
    fn h_r_endpoints_and_slope() {
        for r in [0.5, 1.0, 3.0, 10.0] {
            let t = TruncationSpec::new(r).unwrap();
            assert_eq!(t.h_r(r * r), 1.0);
            assert_eq!(t.h_r(0.0), 1.0);
            assert_eq!(t.h_r((r + 1.0) * (r + 1.0)), 0.0);
            // dense sampling of the difference quotient
            let (lo, hi) = (r * r, (r + 1.0) * (r + 1.0));
            let k = 20_000;
            let ds = (hi - lo) / k as f64;
            let slope = (0..k)
                .map(|i| {
                    let s = lo + i as f64 * ds;
                    (t.h_r(s + ds) - t.h_r(s)).abs() / ds
                })
                .fold(0.0, f64::max);
            assert!((slope - t.max_slope()).abs() <= 1e-3 * t.max_slope(), "r = {r}");
            assert!(t.max_slope() <= 15.0 / 8.0);
        }
        assert!(TruncationSpec::new(0.0).is_err());
    }

    #[test]
    fn psi_gap_bound_cases() {
        let g = Grid::new(1.0, 1023).unwrap();
        let c = CoefficientSet::builder(1.0, 1.0).rho(InterfaceRate::linear(1.0, -1.0)).build().unwrap();
        assert_eq!(psi_gap_bound(&c, &State::zeros(g), 4).unwrap(), (0.0, 0.0));
        let lin = State::new(GridFunction::from_fn(g, |x| x), GridFunction::zeros(g), 0.0).unwrap();
        let (gap, bound) = psi_gap_bound(&c, &lin, 16).unwrap();
        assert!(gap < 1e-10 && bound > 0.0);
        assert!(psi_gap_bound(&c, &lin, 200).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn h_r_monotone(r in 0.1f64..20.0, a in 0.0f64..600.0, b in 0.0f64..600.0) {
            let t = TruncationSpec::new(r).unwrap();
            let (s1, s2) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(t.h_r(s1) >= t.h_r(s2));
            prop_assert!((0.0..=1.0).contains(&t.h_r(a)));
        }

        #[test]
        fn truncated_drift_matches_inside_ball(amp in 0.0f64..0.05, p in -0.5f64..0.5) {
            let g = Grid::new(1.0, 63).unwrap();
            let c = CoefficientSet::builder(1.0, 1.0)
                .mu(Arc::new(|_, v, dv| v * v - 0.1 * dv), Arc::new(|_, v, _| -v), false)
                .rho(InterfaceRate::tanh(1.0, 1.0, 1.0))
                .build().unwrap();
            let f = GridFunction::from_fn(g, |x| amp * (PI * x).sin());
            let x = State::new(f.clone(), f.scaled(-1.0), p).unwrap();
            let t = TruncationSpec::new(2.0).unwrap();
            prop_assume!(state_norm_sq(&x, Norm::H2) <= 4.0);
            let a = drift_b(&c, &x, InterfaceIndex::Window(4), Some(&t)).unwrap();
            let b = drift_b(&c, &x, InterfaceIndex::Window(4), None).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
