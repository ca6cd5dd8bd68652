//! Cylindrical Wiener increments on an ambient grid of the real line and the
//! coloring operator `T_ζ w(x) = ∫ ζ(x, y) w(y) dy`.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Uniform grid `y_j = x_lo + j dy`, `j = 0..J`, on a window of `ℝ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientGrid {
    x_lo: f64,
    dy: f64,
    nodes: usize,
}

impl AmbientGrid {
    pub fn new(x_lo: f64, dy: f64, nodes: usize) -> Result<Self> {
        if !(dy.is_finite() && dy > 0.0) || !x_lo.is_finite() || nodes < 2 {
            return Err(Error::config("ambient", format!("bad ambient grid (x_lo={x_lo}, dy={dy}, J={nodes})")));
        }
        Ok(Self { x_lo, dy, nodes })
    }

    /// Window covering `[p0 − L − pad, p0 + L + pad]` with spacing equal to
    /// the grid spacing `h`, anchored so that `p0` sits on a node.
    pub fn covering(grid: &Grid, p0: f64, pad: f64) -> Result<Self> {
        Self::covering_with_spacing(grid, p0, pad, grid.h())
    }

    /// Same window with spacing `dy`; keeping `dy` fixed while `h` is
    /// refined keeps the noise realization of a seed unchanged.
    pub fn covering_with_spacing(grid: &Grid, p0: f64, pad: f64, dy: f64) -> Result<Self> {
        if !(pad.is_finite() && pad > 0.0) {
            return Err(Error::config("ambient.pad", format!("pad must be positive, got {pad}")));
        }
        if !(dy.is_finite() && dy > 0.0) {
            return Err(Error::config("ambient.spacing", format!("must be positive, got {dy}")));
        }
        let half = ((grid.length() + pad) / dy).ceil() as usize;
        Self::new(p0 - half as f64 * dy, dy, 2 * half + 1)
    }

    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }

    pub fn x_hi(&self) -> f64 {
        self.x_lo + (self.nodes - 1) as f64 * self.dy
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        self.x_lo + j as f64 * self.dy
    }

    pub fn contains(&self, lo: f64, hi: f64) -> bool {
        lo >= self.x_lo && hi <= self.x_hi()
    }
}

/// Integral kernel `ζ(x, y)` of the coloring operator.
pub trait Kernel: Send + Sync {
    fn eval(&self, x: f64, y: f64) -> f64;

    /// `∂ⁱ/∂xⁱ ζ(x, y)` for `i ≤ 3`.
    fn dx(&self, order: u8, x: f64, y: f64) -> f64;

    /// Beyond `|x − y| > support_radius()` the kernel is treated as zero.
    fn support_radius(&self) -> f64 {
        f64::INFINITY
    }

    fn name(&self) -> String {
        "custom".into()
    }
}

/// `ζ(x, y) = (2πs²)^{−1/2} exp(−(x−y)²/(2s²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    scale: f64,
    norm: f64,
    radius: f64,
}

impl GaussianKernel {
    /// Kernel values below `exp(−CUTOFF²/2)` relative to the peak are dropped.
    const CUTOFF: f64 = 9.0;

    pub fn new(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::config("kernel.scale", format!("must be positive, got {scale}")));
        }
        let norm = 1.0 / (2.0 * std::f64::consts::PI * scale * scale).sqrt();
        Ok(Self { scale, norm, radius: Self::CUTOFF * scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Closed form `‖ζ(x, ·)‖²_{L²} = 1/(2s√π)`.
    pub fn l2_norm_sq(&self) -> f64 {
        1.0 / (2.0 * self.scale * std::f64::consts::PI.sqrt())
    }

    #[inline]
    fn profile(&self, d: f64) -> f64 {
        let z = d / self.scale;
        self.norm * (-0.5 * z * z).exp()
    }
}

impl Kernel for GaussianKernel {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self.profile(x - y)
    }

    fn dx(&self, order: u8, x: f64, y: f64) -> f64 {
        // Hermite polynomials in z = (x − y)/s
        let s = self.scale;
        let z = (x - y) / s;
        let g = self.profile(x - y);
        match order {
            0 => g,
            1 => -z / s * g,
            2 => (z * z - 1.0) / (s * s) * g,
            3 => -(z * z * z - 3.0 * z) / (s * s * s) * g,
            _ => panic!("only derivatives up to order 3 are available"),
        }
    }

    fn support_radius(&self) -> f64 {
        self.radius
    }

    fn name(&self) -> String {
        format!("gaussian(s={})", self.scale)
    }
}

/// User kernel backed by closures; derivatives must be supplied.
pub struct FnKernel<F, D>
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
    D: Fn(u8, f64, f64) -> f64 + Send + Sync,
{
    pub value: F,
    pub derivative: D,
    pub radius: f64,
}

impl<F, D> Kernel for FnKernel<F, D>
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
    D: Fn(u8, f64, f64) -> f64 + Send + Sync,
{
    fn eval(&self, x: f64, y: f64) -> f64 {
        (self.value)(x, y)
    }

    fn dx(&self, order: u8, x: f64, y: f64) -> f64 {
        (self.derivative)(order, x, y)
    }

    fn support_radius(&self) -> f64 {
        self.radius
    }
}

/// A kernel together with the ambient grid it is integrated on, validated
/// at construction.
#[derive(Clone)]
pub struct ColoredNoise {
    kernel: Arc<dyn Kernel>,
    gaussian: Option<GaussianKernel>,
    ambient: AmbientGrid,
    l2_profile: Vec<f64>,
}

impl fmt::Debug for ColoredNoise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ColoredNoise")
            .field("kernel", &self.kernel.name())
            .field("ambient", &self.ambient)
            .finish()
    }
}

impl ColoredNoise {
    pub fn gaussian(kernel: GaussianKernel, ambient: AmbientGrid) -> Result<Self> {
        let mut out = Self::new(Arc::new(kernel), ambient)?;
        out.gaussian = Some(kernel);
        Ok(out)
    }

    /// Scans `‖∂ⁱζ(x, ·)‖_{L²}`, `i = 0..3`, for every ambient node `x`.
    pub fn new(kernel: Arc<dyn Kernel>, ambient: AmbientGrid) -> Result<Self> {
        let dy = ambient.dy();
        let mut out = Self { kernel, gaussian: None, ambient, l2_profile: Vec::with_capacity(ambient.len()) };
        for a in 0..ambient.len() {
            let x = ambient.node(a);
            let (lo, hi) = out.node_range(x);
            for order in 0..=3u8 {
                let sq: f64 = (lo..hi).map(|j| out.kernel.dx(order, x, ambient.node(j)).powi(2)).sum::<f64>() * dy;
                if !sq.is_finite() {
                    return Err(Error::KernelUnbounded(x));
                }
                if order == 0 {
                    out.l2_profile.push(sq.sqrt());
                }
            }
        }
        Ok(out)
    }

    pub fn kernel(&self) -> &dyn Kernel {
        self.kernel.as_ref()
    }

    pub fn ambient(&self) -> &AmbientGrid {
        &self.ambient
    }

    /// Quadrature `‖ζ(x, ·)‖_{L²}` at each ambient node.
    pub fn l2_profile(&self) -> &[f64] {
        &self.l2_profile
    }

    pub fn sup_l2(&self) -> f64 {
        self.l2_profile.iter().fold(0.0, |a, &b| a.max(b))
    }

    /// `‖ζ(x, ·)‖_{L²}` by quadrature on the ambient grid.
    pub fn l2_at(&self, x: f64) -> f64 {
        let dy = self.ambient.dy();
        let (lo, hi) = self.node_range(x);
        ((lo..hi).map(|j| self.kernel.eval(x, self.ambient.node(j)).powi(2)).sum::<f64>() * dy).sqrt()
    }

    fn node_range(&self, x: f64) -> (usize, usize) {
        let r = self.kernel.support_radius();
        let a = &self.ambient;
        if !r.is_finite() {
            return (0, a.len());
        }
        let lo = ((x - r - a.x_lo()) / a.dy()).floor().max(0.0) as usize;
        let hi = (((x + r - a.x_lo()) / a.dy()).ceil() as usize + 1).min(a.len());
        (lo.min(hi), hi)
    }

    /// Increment of `ξ(x)` over one step: `Σ_j ζ(x, y_j) dW_j dy`.
    pub fn color_at(&self, inc: &NoiseIncrement, x: f64) -> f64 {
        let (lo, hi) = self.node_range(x);
        let dy = self.ambient.dy();
        let mut acc = 0.0;
        for j in lo..hi {
            acc += self.kernel.eval(x, self.ambient.node(j)) * inc.dw[j];
        }
        acc * dy
    }

    /// Colored increments at `p + x_i` and `p − x_i`.
    pub fn color_field(&self, inc: &NoiseIncrement, p: f64, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
        let (lo, hi) = (p - grid.length(), p + grid.length());
        if !self.ambient.contains(lo, hi) {
            return Err(Error::BoundaryLeftWindow {
                lo,
                hi,
                window_lo: self.ambient.x_lo(),
                window_hi: self.ambient.x_hi(),
            });
        }
        if let Some(g) = self.gaussian {
            let ratio = self.ambient.dy() / grid.h();
            let stride = ratio.round();
            if stride >= 1.0 && (ratio - stride).abs() <= 1e-9 * ratio {
                return Ok(self.color_field_aligned(&g, inc, p, grid, stride as i64));
            }
        }
        let plus = grid.nodes().map(|x| self.color_at(inc, p + x)).collect();
        let minus = grid.nodes().map(|x| self.color_at(inc, p - x)).collect();
        Ok((plus, minus))
    }

    /// Same quadrature as [`color_at`](Self::color_at) when `dy = k h` and
    /// the kernel is a Gaussian convolution: every offset `p ± x_i − y_j` is
    /// of the form `φ + m h`, so the kernel is evaluated once per offset `m`.
    fn color_field_aligned(
        &self,
        g: &GaussianKernel,
        inc: &NoiseIncrement,
        p: f64,
        grid: &Grid,
        stride: i64,
    ) -> (Vec<f64>, Vec<f64>) {
        let h = grid.h();
        let dy = self.ambient.dy();
        let shift = (p - self.ambient.x_lo()) / h;
        let k0 = shift.floor() as i64;
        let phi = (shift - k0 as f64) * h;
        let r = (g.support_radius() / h).ceil() as i64 + 1;
        // table[m + r] = g(φ + m h), m = −r..=r
        let table: Vec<f64> = (-r..=r).map(|m| g.profile(phi + m as f64 * h)).collect();
        let j_max = self.ambient.len() as i64 - 1;
        let convolve = |center: i64| -> f64 {
            // Σ_j g(φ + (center − k j) h) dW_j over |center − k j| ≤ r
            let lo = (center - r).div_euclid(stride).max(0);
            let hi = (center + r).div_euclid(stride).min(j_max);
            let mut acc = 0.0;
            for j in lo..=hi {
                let m = center - stride * j;
                if m.abs() <= r {
                    acc += table[(m + r) as usize] * inc.dw[j as usize];
                }
            }
            acc * dy
        };
        let m = grid.len() as i64;
        let plus = (1..=m).map(|i| convolve(k0 + i)).collect();
        let minus = (1..=m).map(|i| convolve(k0 - i)).collect();
        (plus, minus)
    }
}

/// One step of the cylindrical Wiener process on the ambient grid: entries
/// are iid `N(0, dt/dy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    pub dw: Vec<f64>,
    pub step_index: u64,
    pub dt: f64,
}

impl NoiseIncrement {
    pub fn zeros(ambient: &AmbientGrid, step_index: u64, dt: f64) -> Self {
        Self { dw: vec![0.0; ambient.len()], step_index, dt }
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &NoiseIncrement, b: f64) -> Self {
        Self {
            dw: self.dw.iter().zip(&other.dw).map(|(x, y)| a * x + b * y).collect(),
            step_index: self.step_index,
            dt: self.dt,
        }
    }
}

/// Replayable source of increments keyed by `(seed, trajectory, step)`.
///
/// Paths meant to share noise (the whole `n`-family of one seed) use the
/// same `(seed, trajectory)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseStream {
    pub seed: u64,
    pub trajectory: u64,
    /// Each increment is the sum of this many sub-increments, drawn as the
    /// stream with `dt / substeps` would draw them.
    pub substeps: u32,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, trajectory: 0, substeps: 1 }
    }

    pub fn with_trajectory(seed: u64, trajectory: u64) -> Self {
        Self { seed, trajectory, substeps: 1 }
    }

    /// Same stream, coarsened in time: step `k` with step size `dt` sums the
    /// increments of steps `k s .. (k + 1) s` of size `dt / s`.
    pub fn with_substeps(self, substeps: u32) -> Self {
        Self { substeps: substeps.max(1), ..self }
    }

    fn rng(&self, step_index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.trajectory.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(step_index);
        rng
    }

    pub fn sample_increment(&self, step_index: u64, dt: f64, ambient: &AmbientGrid) -> Result<NoiseIncrement> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidTimeStep(dt));
        }
        let s = self.substeps.max(1) as u64;
        let sd = (dt / s as f64 / ambient.dy()).sqrt();
        let mut dw = vec![0.0; ambient.len()];
        for sub in 0..s {
            let mut rng = self.rng(step_index * s + sub);
            for w in dw.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *w += sd * z;
            }
        }
        Ok(NoiseIncrement { dw, step_index, dt })
    }
}

/// Order-sensitive digest of consumed increments; equal digests on two
/// paths mean they were driven by the same noise.
#[derive(Debug, Clone)]
pub struct NoiseDigest(std::collections::hash_map::DefaultHasher);

impl Default for NoiseDigest {
    fn default() -> Self {
        Self(std::collections::hash_map::DefaultHasher::new())
    }
}

impl NoiseDigest {
    pub fn absorb(&mut self, inc: &NoiseIncrement) {
        inc.step_index.hash(&mut self.0);
        for v in &inc.dw {
            v.to_bits().hash(&mut self.0);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0.finish()
    }
}

/// Writes increments as little-endian float64, row-major `[step][node]`.
pub fn dump_increments<W: Write>(out: &mut W, increments: &[NoiseIncrement]) -> std::io::Result<()> {
    for inc in increments {
        for v in &inc.dw {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ambient() -> AmbientGrid {
        AmbientGrid::new(-3.0, 0.05, 121).unwrap()
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let s = NoiseStream::new(1);
        assert!(matches!(s.sample_increment(0, 0.0, &ambient()), Err(Error::InvalidTimeStep(_))));
        assert!(s.sample_increment(0, -1.0, &ambient()).is_err());
    }

    #[test]
    fn replay_is_deterministic() {
        let a = ambient();
        let s = NoiseStream::new(42);
        assert_eq!(s.sample_increment(7, 0.01, &a).unwrap(), s.sample_increment(7, 0.01, &a).unwrap());
        assert_ne!(s.sample_increment(7, 0.01, &a).unwrap().dw, s.sample_increment(8, 0.01, &a).unwrap().dw);
        let other = NoiseStream::with_trajectory(42, 1);
        assert_ne!(s.sample_increment(7, 0.01, &a).unwrap().dw, other.sample_increment(7, 0.01, &a).unwrap().dw);
    }

    #[test]
    fn entry_variance_is_dt_over_dy() {
        let a = AmbientGrid::new(0.0, 0.1, 10).unwrap();
        let dt = 0.02;
        let s = NoiseStream::new(3);
        let draws = 100_000u64;
        let xs: Vec<f64> = (0..draws).map(|k| s.sample_increment(k, dt, &a).unwrap().dw[4]).collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let target = dt / a.dy();
        // standard error of a Gaussian sample variance: σ²√(2/(N−1))
        let se = target * (2.0 / (draws - 1) as f64).sqrt();
        assert!((var - target).abs() <= 3.0 * se, "var {var} target {target}");
    }

    #[test]
    fn distinct_steps_are_uncorrelated() {
        let a = AmbientGrid::new(0.0, 0.1, 4).unwrap();
        let draws = 100_000u64;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for k in 0..draws {
            let x = NoiseStream::new(k).sample_increment(0, 1.0, &a).unwrap().dw[1];
            let y = NoiseStream::new(k).sample_increment(1, 1.0, &a).unwrap().dw[1];
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let corr = sxy / (sxx * syy).sqrt();
        assert!(corr.abs() <= 3.0 / (draws as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn coloring_zero_and_linear() {
        let a = ambient();
        let noise = ColoredNoise::gaussian(GaussianKernel::new(0.3).unwrap(), a).unwrap();
        let zero = NoiseIncrement::zeros(&a, 0, 0.1);
        assert_eq!(noise.color_at(&zero, 0.4), 0.0);
        let s = NoiseStream::new(9);
        let i1 = s.sample_increment(0, 0.1, &a).unwrap();
        let i2 = s.sample_increment(1, 0.1, &a).unwrap();
        let mix = i1.combine(2.0, &i2, -0.5);
        for x in [-1.0, 0.0, 0.37, 2.2] {
            let lhs = noise.color_at(&mix, x);
            let rhs = 2.0 * noise.color_at(&i1, x) - 0.5 * noise.color_at(&i2, x);
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn unit_time_variance_matches_kernel_norm() {
        let a = AmbientGrid::new(-3.0, 0.05, 121).unwrap();
        let kernel = GaussianKernel::new(0.3).unwrap();
        let noise = ColoredNoise::gaussian(kernel, a).unwrap();
        let x = 0.2;
        let draws = 100_000u64;
        let s = NoiseStream::new(11);
        let sum_sq: f64 = (0..draws).map(|k| noise.color_at(&s.sample_increment(k, 1.0, &a).unwrap(), x).powi(2)).sum();
        let var = sum_sq / draws as f64;
        // oracle: discrete ‖ζ(x,·)‖² on the ambient grid, and the closed form
        let oracle = noise.l2_at(x).powi(2);
        assert_relative_eq!(oracle, kernel.l2_norm_sq(), max_relative = 1e-6);
        assert!((var / oracle - 1.0).abs() < 0.05, "var {var} oracle {oracle}");
    }

    #[test]
    fn far_points_decorrelate() {
        let a = AmbientGrid::new(-4.0, 0.05, 161).unwrap();
        let noise = ColoredNoise::gaussian(GaussianKernel::new(0.2).unwrap(), a).unwrap();
        let draws = 20_000u64;
        let s = NoiseStream::new(5);
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for k in 0..draws {
            let inc = s.sample_increment(k, 1.0, &a).unwrap();
            let (x, y) = (noise.color_at(&inc, -1.5), noise.color_at(&inc, 1.5));
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let corr = sxy / (sxx * syy).sqrt();
        assert!(corr.abs() <= 3.0 / (draws as f64).sqrt());
    }

    #[test]
    fn aligned_fast_path_matches_direct_quadrature() {
        let grid = Grid::new(1.0, 39).unwrap();
        let a = AmbientGrid::covering(&grid, 0.3, 1.0).unwrap();
        let noise = ColoredNoise::gaussian(GaussianKernel::new(0.15).unwrap(), a).unwrap();
        let inc = NoiseStream::new(2).sample_increment(0, 0.01, &a).unwrap();
        for p in [0.3, 0.3 + 0.4 * grid.h(), -0.55] {
            let (plus, minus) = noise.color_field(&inc, p, &grid).unwrap();
            for (i, x) in grid.nodes().enumerate() {
                assert!((plus[i] - noise.color_at(&inc, p + x)).abs() <= 1e-13);
                assert!((minus[i] - noise.color_at(&inc, p - x)).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn strided_fast_path_matches_direct_quadrature() {
        let coarse = Grid::new(1.0, 39).unwrap();
        let fine = coarse.refined();
        let a = AmbientGrid::covering(&coarse, 0.3, 1.0).unwrap();
        let noise = ColoredNoise::gaussian(GaussianKernel::new(0.15).unwrap(), a).unwrap();
        let inc = NoiseStream::new(2).sample_increment(0, 0.01, &a).unwrap();
        for p in [0.3, 0.3 + 0.4 * fine.h(), -0.55] {
            let (plus, minus) = noise.color_field(&inc, p, &fine).unwrap();
            for (i, x) in fine.nodes().enumerate() {
                assert!((plus[i] - noise.color_at(&inc, p + x)).abs() <= 1e-13);
                assert!((minus[i] - noise.color_at(&inc, p - x)).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn substeps_sum_the_finer_stream() {
        let a = AmbientGrid::new(-1.0, 0.1, 21).unwrap();
        let fine = NoiseStream::new(4);
        let coarse = fine.with_substeps(2);
        for k in 0..5u64 {
            let c = coarse.sample_increment(k, 0.02, &a).unwrap();
            let f0 = fine.sample_increment(2 * k, 0.01, &a).unwrap();
            let f1 = fine.sample_increment(2 * k + 1, 0.01, &a).unwrap();
            for j in 0..a.len() {
                assert_eq!(c.dw[j], f0.dw[j] + f1.dw[j]);
            }
        }
        assert_eq!(fine.with_substeps(1), fine);
    }

    #[test]
    fn color_field_cases() {
        let grid = Grid::new(1.0, 19).unwrap();
        let a = AmbientGrid::covering(&grid, 0.0, 0.5).unwrap();
        let noise = ColoredNoise::gaussian(GaussianKernel::new(0.2).unwrap(), a).unwrap();
        let (p, m) = noise.color_field(&NoiseIncrement::zeros(&a, 0, 0.1), 0.0, &grid).unwrap();
        assert!(p.iter().chain(&m).all(|&v| v == 0.0));
        assert!(matches!(
            noise.color_field(&NoiseIncrement::zeros(&a, 0, 0.1), 0.6, &grid),
            Err(Error::BoundaryLeftWindow { .. })
        ));
        // even kernel, p = 0: reversing the increment about 0 swaps the sides
        let inc = NoiseStream::new(1).sample_increment(0, 0.1, &a).unwrap();
        let mut rev = inc.clone();
        rev.dw.reverse();
        let (p1, m1) = noise.color_field(&inc, 0.0, &grid).unwrap();
        let (p2, m2) = noise.color_field(&rev, 0.0, &grid).unwrap();
        for i in 0..grid.len() {
            assert!((p1[i] - m2[i]).abs() <= 1e-13);
            assert!((m1[i] - p2[i]).abs() <= 1e-13);
        }
        // translation: the field at p + δ is the field at p evaluated at shifted points
        let delta = 0.137;
        let (pd, _) = noise.color_field(&inc, delta, &grid).unwrap();
        for (i, x) in grid.nodes().enumerate() {
            assert!((pd[i] - noise.color_at(&inc, x + delta)).abs() <= 1e-13);
        }
    }

    #[test]
    fn unbounded_kernel_is_rejected() {
        let k = FnKernel {
            value: |x: f64, _y: f64| x.exp() * 1e300,
            derivative: |_o: u8, x: f64, _y: f64| x.exp() * 1e300,
            radius: f64::INFINITY,
        };
        let a = AmbientGrid::new(0.0, 0.5, 10).unwrap();
        assert!(matches!(ColoredNoise::new(Arc::new(k), a), Err(Error::KernelUnbounded(_))));
    }

    #[test]
    fn gaussian_derivatives_match_finite_differences() {
        let k = GaussianKernel::new(0.4).unwrap();
        let (x, y, e) = (0.37, -0.1, 1e-5);
        for order in 1..=3u8 {
            let fd = (k.dx(order - 1, x + e, y) - k.dx(order - 1, x - e, y)) / (2.0 * e);
            assert_relative_eq!(k.dx(order, x, y), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn dump_layout_is_row_major() {
        let a = AmbientGrid::new(0.0, 1.0, 3).unwrap();
        let incs = vec![
            NoiseIncrement { dw: vec![1.0, 2.0, 3.0], step_index: 0, dt: 1.0 },
            NoiseIncrement { dw: vec![4.0, 5.0, 6.0], step_index: 1, dt: 1.0 },
        ];
        let mut buf = Vec::new();
        dump_increments(&mut buf, &incs).unwrap();
        assert_eq!(buf.len(), 6 * 8);
        assert_eq!(f64::from_le_bytes(buf[32..40].try_into().unwrap()), 5.0);
        let _ = a;
    }
}
