use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use hypcert::certifier::acceptance::{run_acceptance, Tolerances, CRITERIA};
use hypcert::certifier::{emit_plot, emit_report, load_config, run_pipeline, RunConfig};

#[derive(Parser)]
#[command(name = "hypcert", version, about = "Certify expansion and hyperbolicity from periodic-orbit data")]
struct Cli {
    /// Override the seed given in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for report.json and the CSV summaries.
    #[arg(long, global = true)]
    report_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the certification pipeline on a TOML configuration.
    Certify { config: PathBuf },
    /// SVG plot: lift of a circle map, periodic points of a torus map.
    Plot {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in acceptance criteria.
    Selftest {
        /// Comma-separated criterion ids.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u32>>,
        /// Divide every tolerance by this factor.
        #[arg(long, default_value_t = 1.0, hide = true)]
        tighten: f64,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = load_config(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn report_dir(cli_dir: Option<PathBuf>, cfg: &RunConfig, config_path: &Path) -> PathBuf {
    if let Some(d) = cli_dir.or_else(|| cfg.output.report_dir.clone()) {
        return d;
    }
    let name = cfg.output.name.clone().unwrap_or_else(|| {
        config_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
    });
    PathBuf::from("reports").join(name)
}

fn certify(path: &Path, seed: Option<u64>, dir: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = load(path, seed)?;
    let dir = report_dir(dir, &cfg, path);
    let out = run_pipeline(&cfg)?;
    let written = emit_report(&out, &dir).with_context(|| format!("writing reports to {}", dir.display()))?;
    for c in &out.report.checks {
        println!("{:<16} {:<8} {}", c.id, c.status, c.detail);
    }
    println!("verdict: {}", out.report.verdict.verdict);
    println!("rule: {}", out.report.verdict.rule);
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn plot(path: &Path, seed: Option<u64>, out: &Path) -> Result<ExitCode> {
    let cfg = load(path, seed)?;
    let model = cfg.model.build()?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    emit_plot(&model, BufWriter::new(file))?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn selftest(only: Option<Vec<u32>>, tighten: f64) -> Result<ExitCode> {
    if let Some(ids) = &only {
        for id in ids {
            if !CRITERIA.iter().any(|(c, _)| c == id) {
                bail!("unknown criterion {id}");
            }
        }
    }
    if !(tighten.is_finite() && tighten > 0.0) {
        bail!("--tighten must be positive");
    }
    let outcomes = run_acceptance(only.as_deref(), Tolerances { tighten });
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    for o in &outcomes {
        println!("{o}");
    }
    println!("{} passed, {} failed", outcomes.len() - failed, failed);
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Certify { config } => certify(&config, cli.seed, cli.report_dir),
        Command::Plot { config, out } => plot(&config, cli.seed, &out),
        Command::Selftest { only, tighten } => selftest(only, tighten),
    }
}
