//! One path per `(n, seed)` cell, written to disk.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Setup};
use super::pool::map_cells;
use crate::coefficients::InterfaceIndex;
use crate::error::Result;
use crate::frame::{aligned_points, f_transform};
use crate::noise::NoiseStream;
use crate::solver::{solve, Exit, Trajectory};

/// Runs one cell. Every `n` sharing a seed consumes the same noise stream.
pub fn run_cell(setup: &Setup, cfg: &ExperimentConfig, n: InterfaceIndex, seed: u64) -> Result<Trajectory> {
    let solve_cfg = cfg.solve.build(n)?;
    let stream = NoiseStream::new(seed).with_substeps(cfg.solve.noise_substeps);
    solve(&setup.op, &setup.coefficients, &setup.noise, &solve_cfg, &setup.x0, &stream)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: String,
    pub seed: u64,
    pub exit: Exit,
    pub survival_time: f64,
    pub sup_norm_h2: f64,
    pub final_p: f64,
    pub noise_digest: u64,
}

impl CellSummary {
    pub fn of(traj: &Trajectory, seed: u64) -> Self {
        Self {
            n: traj.interface.label(),
            seed,
            exit: traj.exit,
            survival_time: traj.survival_time(),
            sup_norm_h2: traj.sup_norm(),
            final_p: traj.final_state().p,
            noise_digest: traj.noise_digest,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub mode: String,
    pub seeds: Vec<u64>,
    pub family: Vec<String>,
    /// The fully resolved configuration, as TOML.
    pub config: String,
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig, seeds: &[u64]) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            mode: cfg.mode.to_string(),
            seeds: seeds.to_vec(),
            family: cfg.family.members().iter().map(|n| n.label()).collect(),
            config: cfg.to_toml(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("manifest.json"), self)
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

pub fn cell_dir(root: &Path, n: InterfaceIndex, seed: u64) -> PathBuf {
    root.join(format!("n_{}", n.label())).join(format!("seed_{seed}"))
}

/// Writes `trajectory.csv`, `exit.json` and, if configured, `profiles/` and
/// `states.bin` for one cell.
pub fn write_cell(dir: &Path, cfg: &ExperimentConfig, traj: &Trajectory, seed: u64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut csv = BufWriter::new(File::create(dir.join("trajectory.csv"))?);
    traj.write_csv(&mut csv)?;
    csv.flush()?;
    write_json(&dir.join("exit.json"), &CellSummary::of(traj, seed))?;
    if cfg.outputs.profiles {
        let pdir = dir.join("profiles");
        fs::create_dir_all(&pdir)?;
        for (k, x) in traj.states.iter().enumerate() {
            let prof = f_transform(x, &aligned_points(x.grid(), x.p));
            let mut out = BufWriter::new(File::create(pdir.join(format!("profile_{k:06}.csv")))?);
            writeln!(out, "# t = {}, p = {}", traj.times[k], x.p)?;
            prof.write_csv(&mut out)?;
            out.flush()?;
        }
    }
    if cfg.outputs.binary {
        let mut out = BufWriter::new(File::create(dir.join("states.bin"))?);
        traj.write_states_binary(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

/// Runs every cell of the family and writes its artifacts under `out`.
pub fn run_simulate(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<Vec<CellSummary>> {
    let setup = cfg.setup()?;
    let seeds = cfg.seeds.resolve()?;
    let cells: Vec<(InterfaceIndex, u64)> =
        cfg.family.members().into_iter().flat_map(|n| seeds.iter().map(move |&s| (n, s))).collect();
    Manifest::new(cfg, &seeds).write(out)?;
    let summaries = map_cells(&cells, jobs, |&(n, seed)| {
        let traj = run_cell(&setup, cfg, n, seed)?;
        write_cell(&cell_dir(out, n, seed), cfg, &traj, seed)?;
        Ok(CellSummary::of(&traj, seed))
    })?;
    write_json(&out.join("summary.json"), &summaries)?;
    Ok(summaries)
}
