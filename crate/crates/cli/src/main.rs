mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use isotns::experiments::{self, Curve, Scale};
use isotns::sweep::{optimize, SweepSummary};

use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "isotns", version, about = "Hybrid isoTNS ground-state optimization")]
struct Cli {
    /// Caps the worker threads used by the estimators.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs one optimization and writes the per-step CSV and a JSON summary.
    Run(RunArgs),
    /// Runs the preset curves of a benchmark figure.
    Reproduce {
        figure: Figure,
        #[arg(long, default_value = "small")]
        scale: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Figure {
    Fig2,
    Fig3,
}

#[derive(Args, Default)]
pub struct RunArgs {
    /// JSON config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Physical lattice as COLSxROWS.
    #[arg(long)]
    lattice: Option<String>,
    #[arg(long = "D")]
    d: Option<usize>,
    #[arg(long)]
    g: Option<f64>,
    /// exact, tomography or lanczos.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    sweeps: Option<usize>,
    /// Initial shots per measurement setting.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    krylov_k: Option<usize>,
    /// Double the shots whenever a step's energy estimate rises.
    #[arg(long)]
    adaptive: bool,
    /// Center tomography observables on pooled marginal means.
    #[arg(long)]
    pooled_shift: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for sweep.csv and summary.json.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Largest physical register allowed.
    #[arg(long)]
    max_qubits: Option<usize>,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    config: &'a RunConfig,
    isotns_grid: (usize, usize),
    n_qubits: usize,
    shots_per_setting: u64,
    result: SweepSummary,
}

#[derive(Serialize)]
struct ManifestEntry {
    name: String,
    file: String,
    curve: Curve,
    final_energy: f64,
    final_relative_error: Option<f64>,
    total_shots: u64,
}

#[derive(Serialize)]
struct Manifest<T: Serialize> {
    figure: &'static str,
    scale: Scale,
    curves: Vec<ManifestEntry>,
    check: T,
}

enum Failure {
    Config(String),
    Guard(String),
    Other(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invalid(m) => Failure::Config(m),
            ConfigError::Guard(m) => Failure::Guard(m),
        }
    }
}

impl From<isotns::Error> for Failure {
    fn from(e: isotns::Error) -> Self {
        if e.is_guard() {
            Failure::Guard(e.to_string())
        } else {
            Failure::Other(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let out = match cli.command {
        Command::Run(args) => run(args),
        Command::Reproduce { figure, scale, out_dir } => reproduce(figure, &scale, &out_dir),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Guard(m)) => {
            eprintln!("guard violation: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let cfg = RunConfig::resolve(&args)?;
    let checked = cfg.check()?;
    let mut state = checked.state;
    let h = checked.hamiltonian;
    let mut sweep = cfg.sweep_config();
    sweep.reference_energy = experiments::reference_energy(cfg.lattice.pair(), cfg.g)?;
    let report = optimize(&mut state, &h, &sweep)?;

    for p in [&cfg.csv, &cfg.summary] {
        ensure_parent(p)?;
    }
    report.save_csv(&cfg.csv)?;
    let summary = RunSummary {
        config: &cfg,
        isotns_grid: (state.lx(), state.ly()),
        n_qubits: state.n_qubits(),
        shots_per_setting: cfg.shots,
        result: report.summary(),
    };
    write_json(&cfg.summary, &summary)?;

    let s = &summary.result;
    println!("final energy: {}", s.final_energy);
    if let Some(e) = s.final_exact_energy {
        println!("final exact energy: {e}");
    }
    match s.final_relative_error {
        Some(e) => println!("relative error: {e:.6e}"),
        None => println!("relative error: unavailable (reference out of range)"),
    }
    println!("total shots: {}", s.total_shots);
    Ok(())
}

fn reproduce(figure: Figure, scale: &str, out_dir: &Path) -> Result<(), Failure> {
    let scale: Scale = scale.parse().map_err(|e: isotns::Error| Failure::Config(e.to_string()))?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let (name, curves) = match figure {
        Figure::Fig2 => ("fig2", experiments::fig2(scale)),
        Figure::Fig3 => ("fig3", experiments::fig3(scale)),
    };
    let mut references = std::collections::HashMap::new();
    let mut results = Vec::with_capacity(curves.len());
    let mut entries = Vec::with_capacity(curves.len());
    for curve in curves {
        let key = (curve.lattice, curve.g.to_bits());
        let reference = match references.get(&key) {
            Some(&e) => e,
            None => {
                let e = experiments::reference_energy(curve.lattice, curve.g)?;
                references.insert(key, e);
                e
            }
        };
        let report = experiments::run_curve(&curve, reference)?;
        let file = format!("{name}_{}.csv", curve.name);
        report.save_csv(out_dir.join(&file))?;
        let s = report.summary();
        println!(
            "{}: final energy {} relative error {} shots {}",
            curve.name,
            s.final_energy,
            s.final_relative_error.map_or("n/a".into(), |e| format!("{e:.4e}")),
            s.total_shots
        );
        entries.push(ManifestEntry {
            name: curve.name.clone(),
            file,
            curve: curve.clone(),
            final_energy: s.final_energy,
            final_relative_error: s.final_relative_error,
            total_shots: s.total_shots,
        });
        results.push((curve, report));
    }
    let path = out_dir.join(format!("{name}_manifest.json"));
    match figure {
        Figure::Fig2 => {
            let check = experiments::fig2_check(&results)?;
            println!(
                "10^5-shot / exact final error ratio: {:.3} (within 2x: {}), 10^3 shots worse: {}",
                check.ratio, check.within_two_x, check.low_shot_worse
            );
            write_json(&path, &Manifest { figure: name, scale, curves: entries, check })?;
        }
        Figure::Fig3 => {
            let check = experiments::fig3_check(&results)?;
            println!(
                "shots to reach {:.0e}: lanczos {:?}, tomography {:?}, ratio {:?}",
                check.target_error, check.lanczos_shots, check.tomography_shots, check.ratio
            );
            write_json(&path, &Manifest { figure: name, scale, curves: entries, check })?;
        }
    }
    Ok(())
}

fn ensure_parent(p: &Path) -> anyhow::Result<()> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

impl RunConfig {
    fn sweep_config(&self) -> isotns::sweep::SweepConfig {
        isotns::sweep::SweepConfig {
            method: self.method,
            sweeps: self.sweeps,
            shots: self.shots,
            adaptive_doubling: self.adaptive,
            krylov_k: self.krylov_k,
            seed: self.seed,
            reference_energy: None,
            pooled_shift: self.pooled_shift,
        }
    }
}
