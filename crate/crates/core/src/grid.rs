//! Grid functions on the truncated half-line `[0, L]`.
//!
//! A [`GridFunction`] stores values at the interior nodes `x_i = i h`,
//! `i = 1..=M`; the boundary nodes `x_0 = 0` and `x_{M+1} = L` carry an
//! implicit zero. All stencils below read those implicit zeros, which is how
//! the Dirichlet constraint enters the discrete operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform discretization of `[0, L]` with `M` interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    length: f64,
    interior: usize,
}

impl Grid {
    pub const MIN_INTERIOR: usize = 4;

    pub fn new(length: f64, interior: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidLength(length));
        }
        if interior < Self::MIN_INTERIOR {
            return Err(Error::GridTooSmall(interior));
        }
        Ok(Self { length, interior })
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of interior nodes `M`.
    #[inline]
    pub fn len(&self) -> usize {
        self.interior
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.length / (self.interior as f64 + 1.0)
    }

    /// Position of node `i` (0 and `M+1` are the boundary nodes).
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    /// Interior node positions `x_1..x_M`.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.interior).map(move |i| self.node(i))
    }

    /// Grid with twice the resolution on the same interval.
    pub fn refined(&self) -> Self {
        Self { length: self.length, interior: 2 * (self.interior + 1) - 1 }
    }
}

/// Discrete norm selector: `L2`, `H1` and `H2` surrogates built from the
/// same stencils used by the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    L2,
    H1,
    H2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at the interior nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, values: grid.nodes().map(f).collect() }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at node `i` in `0..=M+1`, with the boundary zeros.
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        if i == 0 || i > self.values.len() {
            0.0
        } else {
            self.values[i - 1]
        }
    }

    /// Piecewise-linear interpolant; zero outside `(0, L)`.
    pub fn eval(&self, x: f64) -> f64 {
        let h = self.grid.h();
        if !(x > 0.0 && x < self.grid.length()) {
            return 0.0;
        }
        let s = x / h;
        let k = (s.floor() as usize).min(self.values.len());
        let frac = s - k as f64;
        let a = self.at(k);
        if frac == 0.0 {
            return a;
        }
        a + (self.at(k + 1) - a) * frac
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &GridFunction) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
    }

    pub fn sub(&self, other: &GridFunction) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Discrete inner product `h Σ f_i g_i`.
    pub fn inner(&self, other: &GridFunction) -> f64 {
        self.grid.h() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Centered first difference with the implicit boundary zeros.
pub fn d1(f: &GridFunction) -> GridFunction {
    let m = f.values.len();
    let inv = 0.5 / f.grid.h();
    let values = (1..=m).map(|i| (f.at(i + 1) - f.at(i - 1)) * inv).collect();
    GridFunction { grid: f.grid, values }
}

/// Three-point second difference with the implicit boundary zeros.
pub fn d2(f: &GridFunction) -> GridFunction {
    let m = f.values.len();
    let h = f.grid.h();
    let inv = 1.0 / (h * h);
    let values = (1..=m).map(|i| (f.at(i + 1) - 2.0 * f.at(i) + f.at(i - 1)) * inv).collect();
    GridFunction { grid: f.grid, values }
}

/// One-sided second-order estimate of `f'(0+)` using `f(0) = 0`.
pub fn trace_grad(f: &GridFunction) -> f64 {
    (4.0 * f.at(1) - f.at(2)) / (2.0 * f.grid.h())
}

/// Smallest window width (in units of `h`) accepted by [`window_mean`].
pub const WINDOW_RESOLUTION: f64 = 2.0;

/// Returns an error unless `1/n >= factor * h` and `1/n < L`.
pub fn check_window(grid: &Grid, n: u32, factor: f64) -> Result<()> {
    let width = 1.0 / n as f64;
    let h = grid.h();
    if n == 0 || width < factor * h || width >= grid.length() {
        return Err(Error::WindowUnresolved { n, width, h, factor });
    }
    Ok(())
}

/// `2 n² ∫₀^{1/n} f(y) dy` by the trapezoid rule, interpolating `f`
/// linearly at the off-grid endpoint `1/n`.
pub fn window_mean(f: &GridFunction, n: u32) -> Result<f64> {
    check_window(&f.grid, n, WINDOW_RESOLUTION)?;
    let z = 1.0 / n as f64;
    let h = f.grid.h();
    let k = ((z / h).floor() as usize).min(f.values.len());
    // full cells [x_{i-1}, x_i], i = 1..=k, with f(x_0) = 0
    let mut integral = 0.0;
    for i in 1..=k {
        integral += 0.5 * h * (f.at(i - 1) + f.at(i));
    }
    let rest = z - f.grid.node(k);
    if rest > 0.0 {
        let fk = f.at(k);
        let fz = fk + (f.at(k + 1) - fk) * (rest / h);
        integral += 0.5 * rest * (fk + fz);
    }
    let nf = n as f64;
    Ok(2.0 * nf * nf * integral)
}

fn sq_l2(f: &GridFunction) -> f64 {
    f.inner(f)
}

/// Squared discrete norm; used where the square is what is needed (truncation).
pub fn norm_sq(f: &GridFunction, order: Norm) -> f64 {
    let mut s = sq_l2(f);
    if matches!(order, Norm::H1 | Norm::H2) {
        s += sq_l2(&d1(f));
    }
    if order == Norm::H2 {
        s += sq_l2(&d2(f));
    }
    s
}

pub fn norm(f: &GridFunction, order: Norm) -> f64 {
    norm_sq(f, order).sqrt()
}

/// Squared norm without boundary conditions: differences are taken between
/// interior nodes only. For grid functions that need not vanish at `0` and
/// `L`, such as `∂u` or the drift `B(X)`.
pub fn free_norm_sq(f: &GridFunction, order: Norm) -> f64 {
    let h = f.grid.h();
    let v = &f.values;
    let mut s = f.inner(f);
    if matches!(order, Norm::H1 | Norm::H2) {
        s += h * v.windows(2).map(|w| ((w[1] - w[0]) / h).powi(2)).sum::<f64>();
    }
    if order == Norm::H2 {
        s += h * v.windows(3).map(|w| ((w[2] - 2.0 * w[1] + w[0]) / (h * h)).powi(2)).sum::<f64>();
    }
    s
}

/// [`free_norm_sq`] summed over the blocks plus `p²`.
pub fn state_free_norm(x: &State, order: Norm) -> f64 {
    (free_norm_sq(&x.u1, order) + free_norm_sq(&x.u2, order) + x.p * x.p).sqrt()
}

/// Discrete element `(u1, u2, p)` of the product space; `u2` is the left
/// phase reflected onto the positive half-line.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u1: GridFunction,
    pub u2: GridFunction,
    pub p: f64,
}

impl State {
    pub fn new(u1: GridFunction, u2: GridFunction, p: f64) -> Result<Self> {
        if u1.grid != u2.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self { u1, u2, p })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { u1: GridFunction::zeros(grid), u2: GridFunction::zeros(grid), p: 0.0 }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    pub fn axpy(&mut self, a: f64, other: &State) {
        self.u1.axpy(a, &other.u1);
        self.u2.axpy(a, &other.u2);
        self.p += a * other.p;
    }

    pub fn sub(&self, other: &State) -> State {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn scaled(&self, c: f64) -> State {
        State { u1: self.u1.scaled(c), u2: self.u2.scaled(c), p: c * self.p }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.u1.is_finite() && self.u2.is_finite()
    }
}

pub fn state_norm_sq(x: &State, order: Norm) -> f64 {
    norm_sq(&x.u1, order) + norm_sq(&x.u2, order) + x.p * x.p
}

/// Direct-sum norm `√(‖u1‖² + ‖u2‖² + p²)`.
pub fn state_norm(x: &State, order: Norm) -> f64 {
    state_norm_sq(x, order).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_grid() -> Grid {
        Grid::new(1.0, 127).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = Grid::new(3.0, 99).unwrap();
        assert!((g.h() * 100.0 - 3.0).abs() <= f64::EPSILON * 3.0);
        assert!(matches!(Grid::new(1.0, 3), Err(Error::GridTooSmall(3))));
        assert!(Grid::new(-1.0, 10).is_err());
        assert_eq!(g.refined().len(), 199);
    }

    #[test]
    fn zero_function_everywhere_zero() {
        let f = GridFunction::zeros(unit_grid());
        assert!(d1(&f).values().iter().all(|&v| v == 0.0));
        assert!(d2(&f).values().iter().all(|&v| v == 0.0));
        assert_eq!(trace_grad(&f), 0.0);
        assert_eq!(window_mean(&f, 4).unwrap(), 0.0);
        for o in [Norm::L2, Norm::H1, Norm::H2] {
            assert_eq!(norm(&f, o), 0.0);
        }
    }

    #[test]
    fn d1_on_sine_is_second_order() {
        let g = unit_grid();
        let h = g.h();
        let f = GridFunction::from_fn(g, |x| (PI * x).sin());
        let df = d1(&f);
        for (x, v) in g.nodes().zip(df.values()) {
            // leading error h²/6 · f'''
            assert!((v - PI * (PI * x).cos()).abs() <= 1.01 * PI.powi(3) / 6.0 * h * h, "x = {x}");
        }
    }

    #[test]
    fn stencils_exact_on_quadratic() {
        let g = Grid::new(1.0, 31).unwrap();
        let l = g.length();
        let f = GridFunction::from_fn(g, |x| x * (l - x));
        for (x, v) in g.nodes().zip(d1(&f).values()) {
            assert_relative_eq!(*v, l - 2.0 * x, epsilon = 1e-12);
        }
        for v in d2(&f).values() {
            assert_relative_eq!(*v, -2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn d2_sine_is_discrete_eigenvector() {
        let g = unit_grid();
        let h = g.h();
        let f = GridFunction::from_fn(g, |x| (PI * x).sin());
        let lambda = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        for (a, b) in d2(&f).values().iter().zip(f.values()) {
            // rounding in the stencil is O(ε/h²)
            assert!((a + lambda * b).abs() <= 1e-9);
        }
    }

    #[test]
    fn trace_grad_cases() {
        let g = unit_grid();
        let h = g.h();
        let f = GridFunction::from_fn(g, |x| (PI * x).sin());
        // f(h) and f(2h) expansions give an error of h²/3 · f''' (f'' vanishes at 0)
        assert!((trace_grad(&f) - PI).abs() <= 1.01 * PI.powi(3) / 3.0 * h * h);
        let q = GridFunction::from_fn(g, |x| x * x);
        assert!(trace_grad(&q).abs() < 1e-12);
    }

    #[test]
    fn window_mean_cases() {
        let g = Grid::new(2.0, 255).unwrap();
        let h = g.h();
        let lin = GridFunction::from_fn(g, |x| x);
        for n in [1, 3, 4, 7, 16, 64] {
            assert_relative_eq!(window_mean(&lin, n).unwrap(), 1.0, epsilon = 1e-12);
        }
        let quad = GridFunction::from_fn(g, |x| x * x);
        for n in [1u32, 4, 16, 64] {
            let exact = 2.0 / (3.0 * n as f64);
            // trapezoid error: 2n² · (z/12) h² f'' = n h² / 3
            let err = (window_mean(&quad, n).unwrap() - exact).abs();
            assert!(err <= n as f64 * h * h / 3.0 + 1e-12, "n = {n}, err = {err}");
        }
    }

    #[test]
    fn window_mean_rejects_unresolved() {
        let g = Grid::new(1.0, 15).unwrap(); // h = 1/16
        let f = GridFunction::zeros(g);
        assert!(window_mean(&f, 8).is_ok());
        assert!(matches!(window_mean(&f, 9), Err(Error::WindowUnresolved { n: 9, .. })));
        assert!(window_mean(&f, 1).is_err()); // width equals L
    }

    #[test]
    fn sine_l2_norm_matches_continuum() {
        let f = GridFunction::from_fn(unit_grid(), |x| (PI * x).sin());
        assert!((norm(&f, Norm::L2).powi(2) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn norms_are_homogeneous() {
        let f = GridFunction::from_fn(unit_grid(), |x| (3.0 * x).sin() * x * (1.0 - x));
        for o in [Norm::L2, Norm::H1, Norm::H2] {
            assert_relative_eq!(norm(&f.scaled(-3.5), o), 3.5 * norm(&f, o), max_relative = 1e-12);
        }
    }

    #[test]
    fn state_norm_cases() {
        let g = unit_grid();
        assert_eq!(state_norm(&State::zeros(g), Norm::H2), 0.0);
        let mut x = State::zeros(g);
        x.p = -2.5;
        assert_eq!(state_norm(&x, Norm::H1), 2.5);
        let f = GridFunction::from_fn(g, |x| (PI * x).sin());
        let x = State::new(f.clone(), f.clone(), 0.0).unwrap();
        for o in [Norm::L2, Norm::H1, Norm::H2] {
            assert_relative_eq!(state_norm(&x, o), 2f64.sqrt() * norm(&f, o), max_relative = 1e-14);
        }
    }

    #[test]
    fn eval_interpolates_and_vanishes_outside() {
        let g = Grid::new(1.0, 9).unwrap();
        let f = GridFunction::from_fn(g, |x| x);
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(1.0), 0.0);
        assert_eq!(f.eval(-0.3), 0.0);
        assert_relative_eq!(f.eval(0.25), 0.25, epsilon = 1e-14);
        assert_relative_eq!(f.eval(g.node(3)), f.at(3), epsilon = 1e-15);
        // last cell interpolates towards the implicit zero at L
        assert_relative_eq!(f.eval(0.95), 0.45, epsilon = 1e-12);
    }

    #[test]
    fn free_norm_ignores_boundary_jump() {
        let g = unit_grid();
        // constant 1 has no interior differences, unlike the Dirichlet norm
        let one = GridFunction::from_fn(g, |_| 1.0);
        assert_relative_eq!(free_norm_sq(&one, Norm::H2), one.inner(&one), epsilon = 1e-14);
        assert!(norm_sq(&one, Norm::H1) > 50.0);
        let f = GridFunction::from_fn(g, |x| (PI * x).cos());
        assert!((free_norm_sq(&f, Norm::H1) - (0.5 + PI * PI / 2.0)).abs() < 0.1);
    }

    #[test]
    fn state_rejects_mismatched_grids() {
        let a = GridFunction::zeros(Grid::new(1.0, 8).unwrap());
        let b = GridFunction::zeros(Grid::new(1.0, 9).unwrap());
        assert!(matches!(State::new(a, b, 0.0), Err(Error::GridMismatch)));
    }
}
