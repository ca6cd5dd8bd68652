//! Maps between the fixed frame `(u₁, u₂, p)` and moving-frame profiles
//! `v(x) = ι(u₁, u₂)(x − p)` on the real line.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, State};

/// `ι(u₁, u₂)`: `u₁` on `(0, ∞)`, `u₂(−·)` on `(−∞, 0)`, zero at `0` and
/// outside `[−L, L]`; linear between nodes.
#[derive(Debug, Clone, Copy)]
pub struct Glued<'a> {
    u1: &'a GridFunction,
    u2: &'a GridFunction,
}

pub fn iota<'a>(u1: &'a GridFunction, u2: &'a GridFunction) -> Result<Glued<'a>> {
    if u1.grid() != u2.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(Glued { u1, u2 })
}

impl Glued<'_> {
    pub fn eval(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.u1.eval(x)
        } else if x < 0.0 {
            self.u2.eval(-x)
        } else {
            0.0
        }
    }

    /// Exact `∫ ι(u₁,u₂)²` of the piecewise-linear interpolant.
    pub fn l2_norm_sq(&self) -> f64 {
        let side = |u: &GridFunction| {
            let h = u.grid().h();
            (0..=u.grid().len())
                .map(|i| {
                    let (a, b) = (u.at(i), u.at(i + 1));
                    h * (a * a + a * b + b * b) / 3.0
                })
                .sum::<f64>()
        };
        side(self.u1) + side(self.u2)
    }
}

/// Samples of `v(t, ·)` on an evaluation grid together with the interface.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingProfile {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub p_star: f64,
}

impl MovingProfile {
    /// Piecewise-linear reconstruction in which `p_star` is a node with
    /// value `0`, so `eval(p_star) == 0` exactly.
    pub fn eval(&self, x: f64) -> f64 {
        if x == self.p_star {
            return 0.0;
        }
        let pts = &self.points;
        let right = pts.partition_point(|&q| q < x);
        if right < pts.len() && pts[right] == x {
            return self.values[right];
        }
        if right == 0 || right == pts.len() {
            return 0.0;
        }
        let (mut xa, mut va) = (pts[right - 1], self.values[right - 1]);
        let (mut xb, mut vb) = (pts[right], self.values[right]);
        if xa < self.p_star && self.p_star < xb {
            if x < self.p_star {
                (xb, vb) = (self.p_star, 0.0);
            } else {
                (xa, va) = (self.p_star, 0.0);
            }
        }
        va + (vb - va) * (x - xa) / (xb - xa)
    }

    /// CSV rows `x,v`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "x,v")?;
        for (x, v) in self.points.iter().zip(&self.values) {
            writeln!(out, "{x},{v}")?;
        }
        Ok(())
    }

    /// `∫ v²` of the reconstruction, with `p_star` inserted as a zero node.
    pub fn l2_norm_sq(&self) -> f64 {
        let mut nodes: Vec<(f64, f64)> = self.points.iter().copied().zip(self.values.iter().copied()).collect();
        if !self.points.contains(&self.p_star) {
            let at = self.points.partition_point(|&q| q < self.p_star);
            nodes.insert(at, (self.p_star, 0.0));
        }
        nodes.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 * w[0].1 + w[0].1 * w[1].1 + w[1].1 * w[1].1) / 3.0).sum()
    }
}

/// `F(u₁, u₂, p) = ι(u₁, u₂)(· − p)` sampled at `eval_points` (sorted).
pub fn f_transform(x: &State, eval_points: &[f64]) -> MovingProfile {
    let glued = Glued { u1: &x.u1, u2: &x.u2 };
    let values = eval_points.iter().map(|&e| if e == x.p { 0.0 } else { glued.eval(e - x.p) }).collect();
    MovingProfile { points: eval_points.to_vec(), values, p_star: x.p }
}

/// Tolerance on `v(p*)` when an evaluation point coincides with `p*`.
pub const INTERFACE_TOLERANCE: f64 = 1e-9;

/// Recovers `(u₁, u₂)` on `grid` from a profile: `u₁(x_i) = v(p* + x_i)`,
/// `u₂(x_i) = v(p* − x_i)`.
pub fn f_inverse(profile: &MovingProfile, grid: Grid) -> Result<State> {
    let p = profile.p_star;
    let scale = 1.0 + p.abs();
    if let Some(i) = profile.points.iter().position(|&q| (q - p).abs() <= 1e-12 * scale) {
        let v = profile.values[i];
        if v.abs() > INTERFACE_TOLERANCE {
            return Err(Error::InterfaceNotZero(v));
        }
    }
    let u1 = GridFunction::from_fn(grid, |x| profile.eval(p + x));
    let u2 = GridFunction::from_fn(grid, |x| profile.eval(p - x));
    State::new(u1, u2, p)
}

/// Evaluation grid `p ± x_i` for `i = 0..=M+1`; on it [`f_transform`] and
/// [`f_inverse`] are exact inverses.
pub fn aligned_points(grid: &Grid, p: f64) -> Vec<f64> {
    let m = grid.len();
    let mut pts: Vec<f64> = (1..=m + 1).rev().map(|i| p - grid.node(i)).collect();
    pts.push(p);
    pts.extend((1..=m + 1).map(|i| p + grid.node(i)));
    pts
}
