//! Randomized checks of the analytic inequalities and structural properties,
//! reported as a table of worst observed statistics.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::simulate::{write_json, Manifest};
use crate::coefficients::{
    diffusion_c, diffusion_hs_norm, drift_b, psi, AffineVolatility, CoefficientSet, DriftFn, InterfaceIndex,
    InterfaceRate, TruncationSpec,
};
use crate::error::Result;
use crate::frame::{aligned_points, f_transform, iota};
use crate::grid::{check_window, d2, norm, norm_sq, state_free_norm, state_norm, window_mean, Grid, GridFunction, Norm, State, WINDOW_RESOLUTION};
use crate::noise::{AmbientGrid, ColoredNoise, FnKernel, GaussianKernel, NoiseStream};
use crate::spectral::SpectralOperator;

/// One property: passes when `worst <= limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub module: String,
    pub property: String,
    pub samples: usize,
    pub worst: f64,
    pub limit: f64,
    pub passed: bool,
    pub detail: String,
}

impl LemmaRow {
    fn new(module: &str, property: &str, samples: usize, worst: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self {
            module: module.into(),
            property: property.into(),
            samples,
            worst,
            limit,
            passed: worst <= limit,
            detail: detail.into(),
        }
    }

    fn failure(module: &str, property: &str, detail: impl Into<String>) -> Self {
        Self {
            module: module.into(),
            property: property.into(),
            samples: 0,
            worst: f64::INFINITY,
            limit: 0.0,
            passed: false,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaTable {
    pub rows: Vec<LemmaRow>,
}

impl LemmaTable {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "module,property,samples,worst,limit,passed,detail")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:e},{:e},{},\"{}\"",
                r.module,
                r.property,
                r.samples,
                r.worst,
                r.limit,
                r.passed,
                r.detail.replace('"', "'")
            )?;
        }
        Ok(())
    }
}

/// Random grid function mixing smooth modes, bumps, a boundary-singular
/// `H²` profile and rough nodal noise.
pub fn random_function(rng: &mut ChaCha8Rng, grid: Grid) -> GridFunction {
    let l = grid.length();
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    let f = match rng.random_range(0..4) {
        0 => {
            let amps: Vec<f64> = (1..=8).map(|k| rng.random_range(-1.0..1.0) / (k * k) as f64).collect();
            GridFunction::from_fn(grid, |x| {
                amps.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * x / l).sin()).sum()
            })
        }
        1 => {
            let w = rng.random_range(0.05..1.0);
            let s = rng.random_range(-1.0..1.0);
            GridFunction::from_fn(grid, |x| s * x * (-x / w).exp() * (1.0 - x / l))
        }
        2 => {
            let delta = rng.random_range(0.05..0.5);
            GridFunction::from_fn(grid, |x| x.powf(1.5 + delta) * (-x).exp() * (1.0 - x / l))
        }
        _ => {
            let v = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            GridFunction::from_values(grid, v).expect("length matches")
        }
    };
    f.scaled(scale)
}

fn random_state(rng: &mut ChaCha8Rng, grid: Grid) -> State {
    State { u1: random_function(rng, grid), u2: random_function(rng, grid), p: rng.random_range(-1.0..1.0) }
}

/// Random state rescaled to `‖X‖_{H²} = target`, with `|p| ≤ 1/2`.
fn state_with_norm(rng: &mut ChaCha8Rng, grid: Grid, target: f64) -> State {
    let x = random_state(rng, grid);
    let p = rng.random_range(-0.5..0.5) * target.min(1.0);
    let su = norm_sq(&x.u1, Norm::H2) + norm_sq(&x.u2, Norm::H2);
    let s = ((target * target - p * p).max(0.0) / su).sqrt();
    State { u1: x.u1.scaled(s), u2: x.u2.scaled(s), p }
}

/// Smooth state from a few low sine modes.
fn smooth_state(rng: &mut ChaCha8Rng, grid: Grid) -> State {
    let l = grid.length();
    let mut side = || {
        let amps: Vec<f64> = (1..=4).map(|_| rng.random_range(-1.0..1.0)).collect();
        GridFunction::from_fn(grid, move |x| {
            amps.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * x / l).sin()).sum()
        })
    };
    let (u1, u2) = (side(), side());
    State { u1, u2, p: rng.random_range(-1.0..1.0) }
}

fn lemma_model(rate: InterfaceRate) -> CoefficientSet {
    let mu: DriftFn = Arc::new(|_, v, dv| -0.7 * v + 0.3 * dv);
    let side = AffineVolatility { base: Arc::new(|x: f64| 0.5 * x.abs() * (-x.abs()).exp()), multiplier: Arc::new(|_| 0.4) };
    CoefficientSet::builder(1.0, 0.5)
        .mu(mu.clone(), mu, true)
        .sigma_affine(side.clone(), side)
        .rho(rate)
        .build()
        .expect("valid lemma model")
}

struct Ctx {
    rng: ChaCha8Rng,
    samples: usize,
    grid: Grid,
    windows: Vec<u32>,
}

fn grid_rows(ctx: &mut Ctx) -> Vec<LemmaRow> {
    let (k, g) = (ctx.samples, ctx.grid);
    let mut rows = Vec::new();

    let mut worst = f64::NEG_INFINITY;
    for _ in 0..k {
        let f = random_function(&mut ctx.rng, g);
        let (a, b, c) = (norm(&f, Norm::L2), norm(&f, Norm::H1), norm(&f, Norm::H2));
        worst = worst.max((a - b).max(b - c) / c.max(f64::MIN_POSITIVE));
    }
    rows.push(LemmaRow::new("grid-functions", "norm-ordering", k, worst, 0.0, "max of (L2 - H1, H1 - H2) / H2"));

    for grid in [g, g.refined()] {
        let mut worst = 0.0f64;
        for _ in 0..k {
            let f = random_function(&mut ctx.rng, grid);
            let r = norm(&f, Norm::H2) * (1.0 + 10.0 * grid.h());
            for &n in &ctx.windows {
                let z = 1.0 / n as f64;
                let integral = window_mean(&f, n).expect("windows checked") * z * z / 2.0;
                worst = worst.max(integral.abs() / (z * z * r));
            }
        }
        rows.push(LemmaRow::new(
            "grid-functions",
            "window-integral-bound",
            k,
            worst,
            1.0,
            format!("|int_0^z f| / (z^2 |f|_H2 (1 + 10h)), M = {}", grid.len()),
        ));
    }

    let mut worst = 0.0f64;
    for _ in 0..k {
        let f = random_function(&mut ctx.rng, g);
        worst = worst.max(f.max_abs() / (2.0 * norm(&f, Norm::H2) * (1.0 + 10.0 * g.h())));
    }
    rows.push(LemmaRow::new("grid-functions", "sup-bound", k, worst, 1.0, "max|f| / (2 |f|_H2 (1 + 10h))"));

    let (mut sym, mut sign) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..k {
        let f = random_function(&mut ctx.rng, g);
        let h = random_function(&mut ctx.rng, g);
        let (df, dh) = (d2(&f), d2(&h));
        let scale = norm(&df, Norm::L2) * norm(&h, Norm::L2) + norm(&f, Norm::L2) * norm(&dh, Norm::L2);
        sym = sym.max((df.inner(&h) - f.inner(&dh)).abs() / (1e-10 * scale));
        sign = sign.max(df.inner(&f) / (norm(&df, Norm::L2) * norm(&f, Norm::L2)));
    }
    rows.push(LemmaRow::new("grid-functions", "d2-symmetric", k, sym, 1.0, "|<d2 f, g> - <f, d2 g>| / 1e-10 scale"));
    rows.push(LemmaRow::new("grid-functions", "d2-nonpositive", k, sign, 0.0, "<d2 f, f> / (|d2 f| |f|)"));
    rows
}

fn operator_rows(ctx: &mut Ctx) -> Vec<LemmaRow> {
    let k = ctx.samples;
    // a coarse grid keeps the rounding in d2 below the 1e-12 target
    let grid = Grid::new(1.0, 63).expect("valid grid");
    let mut rows = Vec::new();
    let mut ops = Vec::new();
    for _ in 0..4 {
        let (a, b) = (ctx.rng.random_range(0.2..3.0), ctx.rng.random_range(0.2..3.0));
        ops.push(SpectralOperator::new(grid, a, b).expect("positive eta"));
    }

    let mut worst = 0.0f64;
    for i in 0..k {
        let op = &ops[i % ops.len()];
        let m = ctx.rng.random_range(1..=grid.len());
        let phi = op.mode(m);
        let x = State { u1: phi.clone(), u2: phi.scaled(-2.0), p: 0.0 };
        let ax = op.apply_a(&x).expect("same grid");
        let (ep, em) = (op.eigenvalues_plus()[m - 1], op.eigenvalues_minus()[m - 1]);
        let e1 = ax.u1.sub(&phi.scaled(ep)).max_abs() / (ep.abs() * phi.max_abs());
        let e2 = ax.u2.sub(&phi.scaled(-2.0 * em)).max_abs() / (2.0 * em.abs() * phi.max_abs());
        worst = worst.max(e1.max(e2) / 1e-12);
    }
    rows.push(LemmaRow::new("linear-operators", "eigen-exactness", k, worst, 1.0, "relative error / 1e-12, M = 63"));

    let mut worst = 0.0f64;
    for i in 0..k {
        let op = &ops[i % ops.len()];
        let x = random_state(&mut ctx.rng, grid);
        let (t, s) = (ctx.rng.random_range(0.0..0.1), ctx.rng.random_range(0.0..0.1));
        let lhs = op.semigroup(t, &op.semigroup(s, &x).unwrap()).unwrap();
        let rhs = op.semigroup(t + s, &x).unwrap();
        let scale = state_norm(&rhs, Norm::L2).max(1e-3 * state_norm(&x, Norm::L2));
        worst = worst.max(state_norm(&lhs.sub(&rhs), Norm::L2) / (1e-12 * scale));
    }
    rows.push(LemmaRow::new("linear-operators", "semigroup-property", k, worst, 1.0, "relative L2 error / 1e-12"));

    let mut worst = 0.0f64;
    for i in 0..k {
        let op = &ops[i % ops.len()];
        let x = smooth_state(&mut ctx.rng, grid);
        let ax = op.apply_a(&x).unwrap();
        let err = |e: f64| {
            let q = op.semigroup(e, &x).unwrap().sub(&x).scaled(1.0 / e);
            state_norm(&q.sub(&ax), Norm::L2)
        };
        let ratio = err(1e-4) / err(5e-5);
        worst = worst.max((ratio - 2.0).abs());
    }
    rows.push(LemmaRow::new("linear-operators", "generator-first-order", k, worst, 0.2, "|err(eps)/err(eps/2) - 2|"));

    let mut worst = f64::NEG_INFINITY;
    for i in 0..k {
        let op = &ops[i % ops.len()];
        let x = random_state(&mut ctx.rng, grid);
        let t = ctx.rng.random_range(0.0..2.0);
        let ratio = state_norm(&op.semigroup(t, &x).unwrap(), Norm::L2) / ((-t).exp() * state_norm(&x, Norm::L2));
        worst = worst.max(ratio - 1.0);
    }
    rows.push(LemmaRow::new("linear-operators", "negative-type", k, worst, 1e-12, "|S_t X| / (e^-t |X|) - 1"));
    rows
}

fn noise_rows(ctx: &mut Ctx) -> Vec<LemmaRow> {
    let k = ctx.samples;
    let mut rows = Vec::new();
    let ambient = AmbientGrid::new(-2.0, 0.05, 81).expect("valid ambient grid");
    let kernel = GaussianKernel::new(0.25).unwrap();
    let noise = ColoredNoise::gaussian(kernel, ambient).unwrap();

    if k > 0 {
        // the variance ratio needs many more paths than the other checks
        let paths = 50 * k;
        let (steps, dt, x) = (5usize, 0.01, 0.3);
        let seed = ctx.rng.random::<u64>();
        let (mut s1, mut s2) = (Vec::with_capacity(paths), Vec::with_capacity(paths));
        for path in 0..paths {
            let stream = NoiseStream::with_trajectory(seed, path as u64);
            let mut acc = 0.0;
            for step in 0..2 * steps {
                acc += noise.color_at(&stream.sample_increment(step as u64, dt, &ambient).unwrap(), x);
                if step + 1 == steps {
                    s1.push(acc);
                }
            }
            s2.push(acc);
        }
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        let ratio = var(&s2) / var(&s1);
        rows.push(LemmaRow::new(
            "noise",
            "variance-linear-in-time",
            paths,
            (ratio / 2.0 - 1.0).abs(),
            0.05,
            format!("Var(2T)/Var(T) = {ratio:.4}"),
        ));
    }

    let mut worst = 0.0f64;
    for step in 0..k {
        let stream = NoiseStream::new(ctx.rng.random());
        let i1 = stream.sample_increment(step as u64, 0.01, &ambient).unwrap();
        let i2 = stream.sample_increment(step as u64 + 1, 0.01, &ambient).unwrap();
        let (a, b) = (ctx.rng.random_range(-3.0..3.0), ctx.rng.random_range(-3.0..3.0));
        let x = ctx.rng.random_range(-1.5..1.5);
        let (c1, c2) = (noise.color_at(&i1, x), noise.color_at(&i2, x));
        let lhs = noise.color_at(&i1.combine(a, &i2, b), x);
        let scale = (a * c1).abs() + (b * c2).abs() + f64::MIN_POSITIVE;
        worst = worst.max((lhs - a * c1 - b * c2).abs() / (1e-12 * scale));
    }
    rows.push(LemmaRow::new("noise", "coloring-linear", k, worst, 1.0, "error / 1e-12 scale"));

    let mut worst = 0.0f64;
    for _ in 0..k {
        let s = ctx.rng.random_range(0.1..0.5);
        let kern = GaussianKernel::new(s).unwrap();
        let amb = AmbientGrid::new(-3.0, s / 8.0, (6.0 / (s / 8.0)) as usize + 1).unwrap();
        let sup = ColoredNoise::gaussian(kern, amb).unwrap().sup_l2();
        worst = worst.max((sup * sup / kern.l2_norm_sq() - 1.0).abs());
    }
    let unbounded = FnKernel {
        value: |x: f64, _y: f64| 1.0 / x,
        derivative: |_o: u8, x: f64, _y: f64| -1.0 / (x * x),
        radius: f64::INFINITY,
    };
    let rejected = ColoredNoise::new(Arc::new(unbounded), AmbientGrid::new(-1.0, 0.5, 5).unwrap()).is_err();
    if !rejected {
        worst = f64::INFINITY;
    }
    rows.push(LemmaRow::new(
        "noise",
        "kernel-norm-finite",
        k,
        worst,
        1e-6,
        format!("relative error of sup |zeta(x,.)|^2 against 1/(2 s sqrt(pi)); singular kernel rejected: {rejected}"),
    ));
    rows
}

fn coefficient_rows(ctx: &mut Ctx) -> Vec<LemmaRow> {
    let (k, g) = (ctx.samples, ctx.grid);
    let mut rows = Vec::new();
    let rates = [InterfaceRate::tanh(1.0, 1.0, 1.0), InterfaceRate::linear(0.7, -0.4), InterfaceRate::tanh(2.0, 0.5, -1.5)];
    let k_a = SpectralOperator::new(g, 1.0, 0.5).unwrap().k_a();

    let mut worst = 0.0f64;
    for i in 0..k {
        let c = CoefficientSet::builder(1.0, 0.5).rho(rates[i % rates.len()].clone()).build().unwrap();
        let r = ctx.rng.random_range(0.5..5.0);
        let mut draw = || {
            let x = random_state(&mut ctx.rng, g);
            let s = ctx.rng.random_range(0.0..1.0) * r / state_norm(&x, Norm::H2);
            x.scaled(s)
        };
        let (x, y) = (draw(), draw());
        let dist = state_norm(&x.sub(&y), Norm::H2) * (1.0 + 10.0 * g.h());
        let lip = (c.rho().lipschitz)(2.0 * k_a * r);
        for &n in &ctx.windows {
            let n = InterfaceIndex::Window(n);
            let gap = (psi(&c, &x, n).unwrap() - psi(&c, &y, n).unwrap()).abs();
            worst = worst.max(gap / (2.0 * k_a * lip * dist));
        }
    }
    rows.push(LemmaRow::new(
        "coefficients",
        "interface-lipschitz",
        k,
        worst,
        1.0,
        format!("|Psi_n(X) - Psi_n(Y)| / (2 K_A Lip |X - Y|_H2 (1 + 10h)), K_A = {k_a}"),
    ));

    let mut worst = 0.0f64;
    for _ in 0..k {
        let u = random_function(&mut ctx.rng, g);
        let bound = 2.0 * norm(&u, Norm::H2) * (1.0 + 10.0 * g.h());
        for &n in &ctx.windows {
            worst = worst.max(window_mean(&u, n).unwrap().abs() / bound);
        }
    }
    rows.push(LemmaRow::new("coefficients", "window-argument-bound", k, worst, 1.0, "|window_mean| / (2 |u|_H2 (1 + 10h))"));

    let ambient = AmbientGrid::covering(&g, 0.0, 2.0).unwrap();
    let noise = ColoredNoise::gaussian(GaussianKernel::new(0.25).unwrap(), ambient).unwrap();
    let c = lemma_model(InterfaceRate::tanh(1.0, 1.0, 1.0));
    let mut worst = 0.0f64;
    let (mut inside, mut outside) = (0usize, 0usize);
    for i in 0..k {
        let r = ctx.rng.random_range(0.5..5.0);
        let t = TruncationSpec::new(r).unwrap();
        let target = if i % 2 == 0 { ctx.rng.random_range(0.0..r) } else { ctx.rng.random_range(r + 1.0..3.0 * r + 3.0) };
        let x = state_with_norm(&mut ctx.rng, g, target);
        let s = state_norm(&x, Norm::H2).powi(2);
        let inc = NoiseStream::new(i as u64).sample_increment(0, 0.01, &ambient).unwrap();
        let n = InterfaceIndex::Window(*ctx.windows.last().unwrap_or(&1));
        let (b0, bt) = (drift_b(&c, &x, n, None).unwrap(), drift_b(&c, &x, n, Some(&t)).unwrap());
        let (c0, ct) = (diffusion_c(&c, &x, &inc, &noise, None).unwrap(), diffusion_c(&c, &x, &inc, &noise, Some(&t)).unwrap());
        if s <= r * r {
            inside += 1;
            if b0 != bt || c0 != ct {
                worst = f64::INFINITY;
            }
        } else if s >= (r + 1.0) * (r + 1.0) {
            outside += 1;
            worst = worst.max(state_norm(&bt, Norm::L2) + state_norm(&ct, Norm::L2));
        }
    }
    rows.push(LemmaRow::new(
        "coefficients",
        "truncation-support",
        k,
        worst,
        0.0,
        format!("{inside} draws inside r^2 (bitwise equal), {outside} outside (r+1)^2 (exactly zero)"),
    ));

    let radii = [1.0, 10.0, 100.0];
    let mut ks = [0.0f64; 3];
    for (j, &r) in radii.iter().enumerate() {
        for _ in 0..k {
            let x = state_with_norm(&mut ctx.rng, g, r);
            let hs = diffusion_hs_norm(&c, &x, &noise);
            let base = 1.0 + state_norm(&x, Norm::H2);
            for &n in &ctx.windows {
                let b = drift_b(&c, &x, InterfaceIndex::Window(n), None).unwrap();
                ks[j] = ks[j].max((state_free_norm(&b, Norm::H1) + hs) / base);
            }
        }
    }
    rows.push(LemmaRow::new(
        "coefficients",
        "linear-growth",
        k,
        ks[2] / ks[0].max(ks[1]),
        1.5,
        format!("K(r) at r = 1, 10, 100: {:.3}, {:.3}, {:.3}", ks[0], ks[1], ks[2]),
    ));
    rows
}

fn frame_rows(ctx: &mut Ctx) -> Vec<LemmaRow> {
    let (k, g) = (ctx.samples, ctx.grid);
    let mut rows = Vec::new();
    let (mut interface, mut isometry, mut continuity) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..k {
        let x = random_state(&mut ctx.rng, g);
        let offset = ctx.rng.random_range(-0.5..0.5) * g.h();
        let pts: Vec<f64> = (0..=400).map(|j| x.p - 1.2 * g.length() + offset + j as f64 * 2.4 * g.length() / 400.0).collect();
        let prof = f_transform(&x, &pts);
        interface = interface.max(prof.eval(x.p).abs());

        let exact = iota(&x.u1, &x.u2).unwrap().l2_norm_sq();
        let aligned = f_transform(&x, &aligned_points(&g, x.p)).l2_norm_sq();
        isometry = isometry.max((aligned - exact).abs() / exact.max(f64::MIN_POSITIVE));

        let y = smooth_state(&mut ctx.rng, g);
        let fine: Vec<f64> = (0..=4000).map(|j| y.p - 1.5 * g.length() + j as f64 * 3.0 * g.length() / 4000.0).collect();
        let base = f_transform(&y, &fine);
        let diff = |dp: f64| {
            let moved = f_transform(&State { p: y.p + dp, ..y.clone() }, &fine);
            moved.values.iter().zip(&base.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        };
        continuity = continuity.max(diff(0.005) / diff(0.01));
    }
    rows.push(LemmaRow::new("frame-transform", "interface-zero", k, interface, 0.0, "max |v(p*)|"));
    rows.push(LemmaRow::new("frame-transform", "l2-isometry", k, isometry, 1e-10, "relative error of the profile norm"));
    rows.push(LemmaRow::new("frame-transform", "continuity-in-p", k, continuity, 0.6, "|F(p + d/2) - F(p)| / |F(p + d) - F(p)|"));
    rows
}

/// Runs every property with the configured sample count. Windows that the
/// grid cannot resolve produce failure rows and are skipped elsewhere.
pub fn lemma_table(cfg: &ExperimentConfig) -> Result<LemmaTable> {
    let grid = cfg.grid()?;
    let spec = &cfg.lemma;
    let mut rows = Vec::new();
    if spec.samples == 0 {
        return Ok(LemmaTable { rows });
    }
    let mut windows = Vec::new();
    for &n in &spec.windows {
        match check_window(&grid, n, WINDOW_RESOLUTION) {
            Ok(()) => windows.push(n),
            Err(e) => rows.push(LemmaRow::failure("grid-functions", "window-resolution", e.to_string())),
        }
    }
    let mut ctx = Ctx { rng: ChaCha8Rng::seed_from_u64(spec.seed), samples: spec.samples, grid, windows };
    rows.extend(grid_rows(&mut ctx));
    rows.extend(operator_rows(&mut ctx));
    rows.extend(noise_rows(&mut ctx));
    rows.extend(coefficient_rows(&mut ctx));
    rows.extend(frame_rows(&mut ctx));
    Ok(LemmaTable { rows })
}

/// Writes `lemma_suite.csv` and `lemma_suite.json`.
pub fn run_lemma_suite(cfg: &ExperimentConfig, out: &Path) -> Result<LemmaTable> {
    let table = lemma_table(cfg)?;
    std::fs::create_dir_all(out)?;
    Manifest::new(cfg, &[]).write(out)?;
    let mut csv = std::io::BufWriter::new(std::fs::File::create(out.join("lemma_suite.csv"))?);
    table.write_csv(&mut csv)?;
    csv.flush()?;
    write_json(&out.join("lemma_suite.json"), &table)?;
    Ok(table)
}
