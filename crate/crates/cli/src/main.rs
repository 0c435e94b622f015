//! `ars`: run, compare and accept adaptive-control scenarios.
//!
//! Exit codes: 0 success, 1 acceptance failure or I/O error, 2 invalid
//! config, 3 numerical blowup, 4 some laws of a comparison failed.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{Context, Result};
use ars_core::acceptance::Suite;
use ars_core::{LawKind, Scenario, Trajectory};
use clap::{Args, Parser, Subcommand};

use config::{ConfigError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "ars", version, about = "Composite MRAC with resetting regression filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Output directory; overrides ARS_OUT_DIR and the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Integration step.
    #[arg(long, global = true)]
    step: Option<f64>,
    /// Records are kept every `n` steps.
    #[arg(long, global = true)]
    decimation: Option<usize>,
    /// Seed of the randomized property checks.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its trajectory and summary.
    Run { config: PathBuf },
    /// Simulate several laws on the same scenario.
    Compare {
        config: PathBuf,
        /// Comma-separated law names; the `[compare]` table otherwise.
        #[arg(long, value_delimiter = ',')]
        laws: Option<Vec<String>>,
    },
    /// Run the acceptance suite, on the wing-rock scenario by default.
    Accept {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Step of the law comparison runs.
        #[arg(long)]
        compare_step: Option<f64>,
        /// Comma-separated criterion ids; all when omitted.
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<u8>>,
    },
}

/// Non-error outcomes that still need a non-zero exit code.
#[derive(Debug)]
struct Status(u8);

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit status {}", self.0)
    }
}

impl std::error::Error for Status {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(s) = e.downcast_ref::<Status>() {
        return s.0;
    }
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<ars_core::Error>() {
        Some(ars_core::Error::Blowup { .. }) => 3,
        Some(ars_core::Error::InvalidScenario(_)) => 2,
        _ => 1,
    }
}

fn load(path: &Path, common: &Common) -> Result<(ScenarioConfig, Scenario)> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(h) = common.step {
        cfg.sim.h = h;
    }
    if let Some(d) = common.decimation {
        cfg.sim.decimation = d;
    }
    let sc = cfg.scenario_at(path)?;
    Ok((cfg, sc))
}

fn out_dir(cfg: Option<&ScenarioConfig>, common: &Common) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var_os("ARS_OUT_DIR").map(PathBuf::from))
        .or_else(|| cfg.map(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn stem(cfg: &ScenarioConfig, law: LawKind) -> String {
    if cfg.output.name.is_empty() {
        law.name().to_string()
    } else {
        cfg.output.name.clone()
    }
}

fn write_outputs(
    dir: &Path,
    stem: &str,
    cfg: &ScenarioConfig,
    sc: &Scenario,
    tr: &Trajectory,
    secs: f64,
) -> Result<()> {
    if cfg.output.csv {
        report::write_csv(&report::output_path(dir, stem, "csv"), tr)?;
    }
    if cfg.output.json {
        report::write_json(
            &report::output_path(dir, stem, "json"),
            &report::summarize(sc, tr, secs),
        )?;
    }
    Ok(())
}

fn cmd_run(path: &Path, common: &Common) -> Result<()> {
    let (cfg, sc) = load(path, common)?;
    let dir = out_dir(Some(&cfg), common);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let start = Instant::now();
    let tr = ars_core::run(&sc).with_context(|| format!("simulating {}", sc.law))?;
    let secs = start.elapsed().as_secs_f64();
    write_outputs(&dir, &stem(&cfg, sc.law), &cfg, &sc, &tr, secs)?;
    let last = tr.last();
    println!(
        "{}: {} records in {secs:.2} s, resets {:?}, final |e_ref| {:.3e}, |Theta~| {:.3e}",
        sc.law,
        tr.records.len(),
        tr.resets,
        last.e_ref_norm(),
        last.theta_tilde_norm()
    );
    Ok(())
}

/// A law run with its wall-clock time, or the error text.
type TimedRun = std::result::Result<(Trajectory, f64), String>;

fn cmd_compare(path: &Path, laws: Option<&[String]>, common: &Common) -> Result<()> {
    let (cfg, base) = load(path, common)?;
    let laws: Vec<LawKind> = match laws {
        Some(names) => names
            .iter()
            .map(|n| LawKind::from_str(n.trim()))
            .collect::<ars_core::Result<_>>()
            .map_err(|e| ConfigError {
                path: path.to_path_buf(),
                message: format!("--laws: {e}"),
            })?,
        None => cfg.compare_laws(),
    };
    let dir = out_dir(Some(&cfg), common);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let runs: Vec<(LawKind, TimedRun)> = std::thread::scope(|s| {
        let handles: Vec<_> = laws
            .iter()
            .map(|&law| {
                let sc = base.clone().with_law(law);
                s.spawn(move || {
                    let start = Instant::now();
                    let r = ars_core::run(&sc).map(|t| (t, start.elapsed().as_secs_f64()));
                    (law, r.map_err(|e| e.to_string()))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });

    let mut failed = 0;
    for (law, r) in &runs {
        match r {
            Ok((tr, secs)) => {
                let sc = base.clone().with_law(*law);
                let name = if laws.len() == 1 {
                    stem(&cfg, *law)
                } else {
                    law.name().to_string()
                };
                write_outputs(&dir, &name, &cfg, &sc, tr, *secs)?;
            }
            Err(e) => {
                failed += 1;
                eprintln!("{law}: {e}");
            }
        }
    }
    let trajs: Vec<(LawKind, std::result::Result<Trajectory, String>)> =
        runs.into_iter().map(|(l, r)| (l, r.map(|(t, _)| t))).collect();
    let metrics = report::Metrics {
        intervals: base.intervals(),
        checkpoints: report::checkpoints(&base),
        laws: trajs.iter().map(|(l, r)| report::law_metrics(&base, *l, r)).collect(),
    };
    report::write_json(&dir.join("compare_metrics.json"), &metrics)?;
    let table = report::metrics_table(&metrics);
    std::fs::write(dir.join("compare_metrics.txt"), &table)?;
    report::write_xi_csv(&dir.join("compare_xi.csv"), &trajs)?;
    print!("{table}");
    if failed > 0 {
        return Err(Status(4).into());
    }
    Ok(())
}

fn cmd_accept(
    config: Option<&Path>,
    compare_step: Option<f64>,
    criteria: Option<&[u8]>,
    common: &Common,
) -> Result<()> {
    let mut base = match config {
        Some(p) => load(p, common)?.1,
        None => Scenario::wing_rock(LawKind::Proposed)?,
    };
    if config.is_none() {
        if let Some(h) = common.step {
            base.step = h;
        }
        if let Some(d) = common.decimation {
            base.decimation = d;
        }
    }
    let mut suite = Suite::new(base).with_seed(common.seed);
    if let Some(h) = compare_step {
        suite = suite.with_compare_step(h);
    }
    let start = Instant::now();
    let outcomes = match criteria {
        Some(ids) => ids.iter().map(|&id| suite.criterion(id)).collect(),
        None => suite.run_all(),
    };
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| format!("{} ({})", o.id, o.name))
        .collect();
    println!(
        "{} of {} criteria passed in {:.1} s",
        outcomes.len() - failed.len(),
        outcomes.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {}", failed.join(", "));
        return Err(Status(1).into());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Run { config } => cmd_run(config, &cli.common),
        Command::Compare { config, laws } => cmd_compare(config, laws.as_deref(), &cli.common),
        Command::Accept {
            config,
            compare_step,
            criteria,
        } => cmd_accept(config.as_deref(), *compare_step, criteria.as_deref(), &cli.common),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if e.downcast_ref::<Status>().is_none() {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
