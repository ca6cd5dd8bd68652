//! Pathwise comparison of `X_n` against `X_∞` under common noise.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::pool::map_cells;
use super::simulate::{run_cell, write_json, Manifest};
use crate::coefficients::InterfaceIndex;
use crate::error::{Error, Result};
use crate::grid::{d2, norm_sq, state_norm, Norm};
use crate::solver::Trajectory;

/// Sup-in-time distances of one `(n, seed)` path from the `∞` path with the
/// same seed, over the common pre-exit window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellDistance {
    pub n: u32,
    pub seed: u64,
    pub h1: f64,
    pub d2_l2: f64,
    pub p: f64,
    /// `X_n` stopped before the horizon.
    pub exited: bool,
    /// End of the comparison window (exclusive when a path exited).
    pub window_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: u32,
    pub mean_h1: f64,
    pub mean_d2_l2: f64,
    pub mean_p: f64,
    pub n_exploded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub q: f64,
    pub seeds: Vec<u64>,
    pub rows: Vec<ReportRow>,
    pub cells: Vec<CellDistance>,
    /// Explosions of the `∞` path.
    pub n_exploded_inf: usize,
    /// Least-squares slope of `log mean_h1` against `log n`; `None` when a
    /// mean vanishes.
    pub slope_h1: Option<f64>,
    pub slope_d2_l2: Option<f64>,
    pub slope_p: Option<f64>,
    /// Truncation or the global-growth assumptions hold, so a rate is
    /// meaningful.
    pub rate_assertable: bool,
    pub warnings: Vec<String>,
    pub refined: Option<Box<ConvergenceReport>>,
}

impl ConvergenceReport {
    /// `slope_refined − slope`, when both exist.
    pub fn refinement_shift(&self) -> Option<f64> {
        Some(self.refined.as_ref()?.slope_h1? - self.slope_h1?)
    }

    /// `report.csv`: `n,mean_H1_dist,mean_d2L2_dist,mean_p_dist,n_exploded`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "n,mean_H1_dist,mean_d2L2_dist,mean_p_dist,n_exploded")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.n, r.mean_h1, r.mean_d2_l2, r.mean_p, r.n_exploded)?;
        }
        writeln!(out, "inf,0,0,0,{}", self.n_exploded_inf)
    }

    pub fn write_cells_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "n,seed,sup_H1_dist,sup_d2L2_dist,sup_p_dist,exited,window_end")?;
        for c in &self.cells {
            writeln!(out, "{},{},{},{},{},{},{}", c.n, c.seed, c.h1, c.d2_l2, c.p, c.exited, c.window_end)?;
        }
        Ok(())
    }
}

/// `(sup_t ‖X_∞ − X_n‖_{H¹}, sup_t ‖d2(u_∞ − u_n)‖_{L²}, sup_t |p_∞ − p_n|, window end)`
/// over recorded times before either path exits.
pub fn path_distance(inf: &Trajectory, fin: &Trajectory) -> (f64, f64, f64, f64) {
    let stop = match (inf.exit.time(), fin.exit.time()) {
        (None, None) => f64::INFINITY,
        (a, b) => a.unwrap_or(f64::INFINITY).min(b.unwrap_or(f64::INFINITY)),
    };
    let (mut h1, mut d2l2, mut dp) = (0.0f64, 0.0f64, 0.0f64);
    let mut end = 0.0;
    for ((t, a), (s, b)) in inf.times.iter().zip(&inf.states).zip(fin.times.iter().zip(&fin.states)) {
        debug_assert_eq!(t, s);
        if *t >= stop {
            break;
        }
        let diff = a.sub(b);
        h1 = h1.max(state_norm(&diff, Norm::H1));
        d2l2 = d2l2.max((norm_sq(&d2(&diff.u1), Norm::L2) + norm_sq(&d2(&diff.u2), Norm::L2)).sqrt());
        dp = dp.max(diff.p.abs());
        end = *t;
    }
    if stop.is_finite() {
        end = stop;
    }
    (h1, d2l2, dp, end)
}

/// `(mean of v^q)^{1/q}`
pub fn q_mean(values: impl Iterator<Item = f64>, q: f64) -> f64 {
    let (mut s, mut k) = (0.0, 0usize);
    for v in values {
        s += v.powf(q);
        k += 1;
    }
    if k == 0 {
        return f64::NAN;
    }
    (s / k as f64).powf(1.0 / q)
}

/// Least-squares slope of `log y` against `log x`; `None` if any `y` is not
/// positive or fewer than two points are given.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && y.is_finite())) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

struct SeedResult {
    cells: Vec<CellDistance>,
    inf_exited: bool,
}

fn run_seed(cfg: &ExperimentConfig, setup: &super::config::Setup, finite: &[u32], seed: u64) -> Result<SeedResult> {
    let inf = run_cell(setup, cfg, InterfaceIndex::Stefan, seed)?;
    let mut cells = Vec::with_capacity(finite.len());
    for &n in finite {
        let fin = run_cell(setup, cfg, InterfaceIndex::Window(n), seed)?;
        if !inf.exit.exited() && !fin.exit.exited() && inf.noise_digest != fin.noise_digest {
            return Err(Error::Assumption(format!("noise streams for n = {n} and n = inf differ at seed {seed}")));
        }
        let (h1, d2_l2, p, window_end) = path_distance(&inf, &fin);
        cells.push(CellDistance { n, seed, h1, d2_l2, p, exited: fin.exit.exited(), window_end });
    }
    Ok(SeedResult { cells, inf_exited: inf.exit.exited() })
}

/// Runs the study in memory; see [`run_converge`] for the on-disk version.
/// With refinement on, both levels share one Brownian path per seed (see
/// [`ExperimentConfig::refinement_pair`]).
pub fn converge_report(cfg: &ExperimentConfig, jobs: usize) -> Result<ConvergenceReport> {
    if !cfg.refine {
        return single_report(cfg, jobs);
    }
    let (coarse, fine) = cfg.refinement_pair()?;
    let mut report = single_report(&coarse, jobs)?;
    report.refined = Some(Box::new(single_report(&fine, jobs)?));
    Ok(report)
}

fn single_report(cfg: &ExperimentConfig, jobs: usize) -> Result<ConvergenceReport> {
    let setup = cfg.setup()?;
    let seeds = cfg.seeds.resolve()?;
    let finite: Vec<u32> = cfg
        .family
        .members()
        .into_iter()
        .filter_map(|n| match n {
            InterfaceIndex::Window(n) => Some(n),
            InterfaceIndex::Stefan => None,
        })
        .collect();
    let results = map_cells(&seeds, jobs, |&seed| run_seed(cfg, &setup, &finite, seed))?;
    let cells: Vec<CellDistance> = results.iter().flat_map(|r| r.cells.iter().copied()).collect();
    let n_exploded_inf = results.iter().filter(|r| r.inf_exited).count();
    let rows: Vec<ReportRow> = finite
        .iter()
        .map(|&n| {
            let of_n = || cells.iter().filter(move |c| c.n == n);
            ReportRow {
                n,
                mean_h1: q_mean(of_n().map(|c| c.h1), cfg.q),
                mean_d2_l2: q_mean(of_n().map(|c| c.d2_l2), cfg.q),
                mean_p: q_mean(of_n().map(|c| c.p), cfg.q),
                n_exploded: of_n().filter(|c| c.exited).count(),
            }
        })
        .collect();
    let slope = |f: fn(&ReportRow) -> f64| log_log_slope(&rows.iter().map(|r| (r.n as f64, f(r))).collect::<Vec<_>>());

    let truncated = cfg.solve.truncation.is_some();
    let global = setup.coefficients.flags().global();
    let mut warnings = Vec::new();
    if !truncated && !global {
        warnings.push(
            "no truncation and the growth assumptions fail: the fitted slope is reported but no rate is asserted".into(),
        );
    } else if !truncated {
        warnings.push("untruncated run: convergence holds in probability, the slope is informative only".into());
    }
    let exploded = n_exploded_inf + rows.iter().map(|r| r.n_exploded).sum::<usize>();
    if exploded > 0 {
        warnings.push(format!("{exploded} paths exited early; distances use the common pre-exit window"));
    }
    Ok(ConvergenceReport {
        q: cfg.q,
        seeds,
        slope_h1: slope(|r| r.mean_h1),
        slope_d2_l2: slope(|r| r.mean_d2_l2),
        slope_p: slope(|r| r.mean_p),
        rows,
        cells,
        n_exploded_inf,
        rate_assertable: truncated || global,
        warnings,
        refined: None,
    })
}

fn write_report(dir: &Path, report: &ConvergenceReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut out = BufWriter::new(File::create(dir.join("report.csv"))?);
    report.write_csv(&mut out)?;
    out.flush()?;
    let mut out = BufWriter::new(File::create(dir.join("distances.csv"))?);
    report.write_cells_csv(&mut out)?;
    out.flush()?;
    let mut summary = report.clone();
    summary.cells.clear();
    summary.refined = None;
    write_json(&dir.join("report.json"), &summary)
}

/// Writes `manifest.json`, `report.csv`, `distances.csv`, `report.json`,
/// and the same under `refined/` when refinement is on.
pub fn run_converge(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<ConvergenceReport> {
    let report = converge_report(cfg, jobs)?;
    Manifest::new(cfg, &report.seeds).write(out)?;
    write_report(out, &report)?;
    if let Some(fine) = &report.refined {
        write_report(&out.join("refined"), fine)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-0.5))).collect();
        assert!((log_log_slope(&pts).unwrap() + 0.5).abs() < 1e-12);
        assert!(log_log_slope(&[(4.0, 0.0), (8.0, 1.0)]).is_none());
        assert!(log_log_slope(&[(4.0, 1.0)]).is_none());
    }

    #[test]
    fn q_means() {
        assert_eq!(q_mean([3.0, 4.0].into_iter(), 2.0), 12.5f64.sqrt());
        assert_eq!(q_mean([1.0, 3.0].into_iter(), 1.0), 2.0);
        assert!(q_mean(std::iter::empty(), 2.0).is_nan());
    }
}
