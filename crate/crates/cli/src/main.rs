use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use stefan_core::experiments::config::{SeedSpec, SeedRange};
use stefan_core::experiments::{run_converge, run_lemma_suite, run_simulate, run_stefan_oracle, ExperimentConfig, Mode};

#[derive(Parser)]
#[command(name = "stefan", version, about = "Stochastic moving boundary simulations and convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (n, seed) cell and write trajectories.
    Simulate(Common),
    /// Compare the volume-imbalance family against the Stefan limit.
    Converge(Common),
    /// Check the deterministic front against the similarity solution.
    StefanOracle(Common),
    /// Evaluate the property table.
    LemmaSuite(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `outputs.dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed range `a..b`, overriding the config.
    #[arg(long)]
    seeds: Option<SeedRange>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl Common {
    fn load(&self, mode: Mode) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::load(&self.config).with_context(|| format!("loading {}", self.config.display()))?;
        if cfg.mode != mode {
            eprintln!("note: config mode is `{}`, running `{mode}`", cfg.mode);
            cfg.mode = mode;
        }
        if let Some(r) = &self.seeds {
            cfg.seeds = SeedSpec::Range(format!("{}..{}", r.start, r.end));
        }
        cfg.validate()?;
        let out = self.out.clone().unwrap_or_else(|| cfg.outputs.dir.clone());
        Ok((cfg, out))
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(c) => {
            let (cfg, out) = c.load(Mode::Simulate)?;
            let cells = run_simulate(&cfg, &out, c.jobs)?;
            let exited = cells.iter().filter(|s| s.exit.exited()).count();
            println!("{} cells written to {} ({exited} exited early)", cells.len(), out.display());
        }
        Command::Converge(c) => {
            let (cfg, out) = c.load(Mode::Converge)?;
            let report = run_converge(&cfg, &out, c.jobs)?;
            println!("n,mean_H1_dist,mean_d2L2_dist,mean_p_dist,n_exploded");
            for r in &report.rows {
                println!("{},{:.6e},{:.6e},{:.6e},{}", r.n, r.mean_h1, r.mean_d2_l2, r.mean_p, r.n_exploded);
            }
            let fmt = |s: Option<f64>| s.map_or("n/a".to_string(), |s| format!("{s:.3}"));
            println!("slope (H1): {}", fmt(report.slope_h1));
            if let Some(fine) = &report.refined {
                println!("refined slope (H1): {}, shift {}", fmt(fine.slope_h1), fmt(report.refinement_shift()));
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("report written to {}", out.display());
        }
        Command::StefanOracle(c) => {
            let (cfg, out) = c.load(Mode::StefanOracle)?;
            if c.seeds.is_some() {
                bail!("--seeds has no effect on the deterministic Stefan run");
            }
            let report = run_stefan_oracle(&cfg, &out)?;
            println!("lambda = {:.8}", report.similarity.lambda);
            println!("relative front error at T: {:.4e}", report.run.rel_error_at_horizon);
            println!("max relative front error on [T/2, T]: {:.4e}", report.run.max_rel_error);
            if let Some(ratio) = report.refinement_ratio() {
                println!("refinement error ratio: {ratio:.3}");
            }
        }
        Command::LemmaSuite(c) => {
            let (cfg, out) = c.load(Mode::LemmaSuite)?;
            let table = run_lemma_suite(&cfg, &out)?;
            for r in &table.rows {
                let mark = if r.passed { "ok  " } else { "FAIL" };
                println!("{mark} {:<18} {:<26} worst {:.4e} limit {:.4e}", r.module, r.property, r.worst, r.limit);
            }
            println!(
                "{}/{} properties passed",
                table.rows.iter().filter(|r| r.passed).count(),
                table.rows.len()
            );
        }
    }
    Ok(())
}
