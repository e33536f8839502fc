//! `sadic`: command-line front end for quadratic forms over S-adic rings and counting
//! experiments. Every run writes a manifest recording its inputs, seed and output hash.

mod commands;
mod io;
mod manifest;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use commands::{exit_code, fail, usage, Run, EXIT_IO, EXIT_MISMATCH};
use manifest::{hash_file, sha256_hex, InputHash, Manifest, OutputHash};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "sadic", version, about = "Quadratic forms over S-adic rings and integer point counts")]
struct Cli {
    /// Worker threads for the parallel kernels.
    #[arg(long, global = true, env = "SADIC_WORKERS")]
    workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Manifest path; defaults to `<out>.manifest.json`, or stderr without `--out`.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Local invariants and isotropy of an S-form.
    Classify {
        #[arg(long)]
        form: PathBuf,
    },
    /// Transition to the standard shape `x_1 x_n + Σ a_i x_i²` at one prime.
    Standardize {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 20)]
        prec: u32,
    },
    /// Element of `K_p` sending `e_1` to a target vector.
    WittLift {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        p: u64,
        /// JSON vector, inline or as a file path.
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 20)]
        prec: u32,
    },
    /// Successive-minima functions `α_i` of a unimodular S-lattice.
    Alpha {
        #[arg(long)]
        lattice: PathBuf,
        /// Single index; all of `1..=n` when absent.
        #[arg(long)]
        i: Option<usize>,
    },
    /// Real lattice `π(Δ)` attached to a unimodular S-lattice.
    Project {
        #[arg(long)]
        lattice: PathBuf,
    },
    /// Constants `λ_p`, `λ_∞` and their product.
    Lambda {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        region: Option<PathBuf>,
        /// Monte Carlo samples; scientific notation is accepted.
        #[arg(long, default_value_t = 1e6)]
        samples: f64,
        #[arg(long)]
        batches: Option<usize>,
        #[arg(long)]
        seed: u64,
    },
    /// Exact count `N(q, I, Ω, T)`.
    Count {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        interval: PathBuf,
        #[arg(long)]
        region: Option<PathBuf>,
        /// Such as `inf=200,3=9,5=5`.
        #[arg(long = "T")]
        t: String,
    },
    #[command(subcommand)]
    Experiment(Experiment),
    /// Repeats the run recorded in a manifest and checks the output hash.
    Rerun {
        manifest_path: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// CSV of `N`, `V` and the `λ` prediction over a sweep of `T`.
    Asymptotics(SweepArgs),
    /// CSV of `V` against the `λ` prediction over a sweep of `T`.
    VolumeSweep(SweepArgs),
    /// Growth of the constructed counterexample family.
    Counterexample {
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long = "T", required = true)]
        t: Vec<String>,
        /// Unit `u` with `β_p² ≡ α²(1 + p^{2n_p} u)`, as `p=u`.
        #[arg(long = "unit")]
        units: Vec<String>,
    },
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    sweep: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Fill the `wall_ms` column.
    #[arg(long)]
    timing: bool,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Classify { .. } => "classify",
            Cmd::Standardize { .. } => "standardize",
            Cmd::WittLift { .. } => "witt-lift",
            Cmd::Alpha { .. } => "alpha",
            Cmd::Project { .. } => "project",
            Cmd::Lambda { .. } => "lambda",
            Cmd::Count { .. } => "count",
            Cmd::Experiment(Experiment::Asymptotics(_)) => "experiment asymptotics",
            Cmd::Experiment(Experiment::VolumeSweep(_)) => "experiment volume-sweep",
            Cmd::Experiment(Experiment::Counterexample { .. }) => "experiment counterexample",
            Cmd::Rerun { .. } => "rerun",
        }
    }
}

fn execute(cmd: &Cmd) -> Result<Run> {
    match cmd {
        Cmd::Classify { form } => commands::classify(form),
        Cmd::Standardize { form, p, prec } => commands::standardize(form, *p, *prec),
        Cmd::WittLift { form, p, target, prec } => commands::witt_lift(form, *p, target, *prec),
        Cmd::Alpha { lattice, i } => commands::alpha_cmd(lattice, *i),
        Cmd::Project { lattice } => commands::project(lattice),
        Cmd::Lambda { form, region, samples, batches, seed } => {
            commands::lambda_cmd(form, region.as_deref(), *samples, *batches, *seed)
        }
        Cmd::Count { form, interval, region, t } => commands::count_cmd(form, interval, region.as_deref(), t),
        Cmd::Experiment(Experiment::Asymptotics(a)) => commands::asymptotics(&a.sweep, a.seed, a.timing),
        Cmd::Experiment(Experiment::VolumeSweep(a)) => commands::volume_sweep(&a.sweep, a.seed),
        Cmd::Experiment(Experiment::Counterexample { alpha, epsilon, t, units }) => {
            commands::counterexample(alpha, *epsilon, t, units)
        }
        Cmd::Rerun { .. } => Err(usage(anyhow!("rerun cannot be nested"))),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| fail(EXIT_IO, anyhow!("writing {}: {}", path.display(), e)))
}

fn run(cli: Cli, args: Vec<String>) -> Result<()> {
    if let Cmd::Rerun { manifest_path } = &cli.cmd {
        return rerun(manifest_path, cli.workers);
    }
    let result = sadic_core::exec::with_workers(cli.workers, || execute(&cli.cmd))?;
    let out_sha = sha256_hex(&result.output);
    match &cli.out {
        Some(path) => write_file(path, &result.output)?,
        None => std::io::stdout().write_all(&result.output).map_err(|e| fail(EXIT_IO, e))?,
    }
    let inputs = result
        .inputs
        .iter()
        .map(|p| Ok(InputHash { path: p.clone(), sha256: hash_file(p).map_err(|e| fail(EXIT_IO, e))? }))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        tool: "sadic".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.cmd.name().into(),
        args,
        inputs,
        seed: result.seed,
        workers: cli.workers,
        output: OutputHash { path: cli.out.clone(), sha256: out_sha },
        metadata: result.metadata,
    };
    let manifest_path = cli.manifest.clone().or_else(|| {
        cli.out.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    match manifest_path {
        Some(path) => write_file(&path, manifest.to_json().as_bytes()),
        None => std::io::stderr().write_all(manifest.to_json().as_bytes()).map_err(|e| fail(EXIT_IO, e)),
    }
}

/// Checks the recorded inputs, runs the command again and compares output hashes.
fn rerun(path: &Path, workers: Option<usize>) -> Result<()> {
    let m = commands::read_manifest(path)?;
    for input in &m.inputs {
        let got = hash_file(&input.path).map_err(|e| fail(EXIT_IO, e))?;
        if got != input.sha256 {
            return Err(fail(EXIT_MISMATCH, anyhow!("input {} changed since the recorded run", input.path.display())));
        }
    }
    let mut argv = vec!["sadic".to_string()];
    argv.extend(m.args.iter().cloned());
    let cli = Cli::try_parse_from(&argv).map_err(|e| usage(anyhow!("recorded arguments: {}", e)))?;
    let result = sadic_core::exec::with_workers(workers.or(m.workers), || execute(&cli.cmd))?;
    let got = sha256_hex(&result.output);
    if got != m.output.sha256 {
        return Err(fail(EXIT_MISMATCH, anyhow!("output hash {} differs from the recorded {}", got, m.output.sha256)));
    }
    eprintln!("rerun of {} reproduced output {}", m.command, got);
    Ok(())
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    if let Err(e) = run(cli, args) {
        eprintln!("error: {:#}", e);
        std::process::exit(exit_code(&e));
    }
}
