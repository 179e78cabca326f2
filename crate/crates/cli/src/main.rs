use clap::Parser;
use repnet_cli::{run, CliError, Experiment, Settings};
use std::path::PathBuf;
use std::process::ExitCode;

/// Run a representation-learning experiment and write its CSV tables.
#[derive(Debug, Parser)]
#[command(name = "repnet", version)]
struct Args {
    /// One of: binexp, translation, symmetric, rep_vs_full, directrep1,
    /// directrep2, quantize_quadratic, rho_validate, bounds_sweep.
    experiment: Option<Experiment>,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated list; `a..=b` or `a..=b:step` ranges allowed.
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long)]
    m_list: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "REPNET_THREADS")]
    threads: Option<usize>,
    /// Any other setting, as KEY=VALUE. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn settings(args: &Args) -> Result<Settings, CliError> {
    let mut s = match &args.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    if let Some(e) = args.experiment {
        if let Some(prev) = s.get("experiment") {
            if prev != e.name() {
                return Err(CliError::Config(format!("config is for {prev}, command line asks for {e}")));
            }
        }
        s.set("experiment", e.name());
    }
    if let Some(v) = args.seed {
        s.set("seed", &v.to_string());
    }
    if let Some(v) = &args.out {
        s.set("out", &v.to_string_lossy());
    }
    if let Some(v) = &args.n_list {
        s.set("n_list", v);
    }
    if let Some(v) = &args.m_list {
        s.set("m_list", v);
    }
    if let Some(v) = args.replicates {
        s.set("replicates", &v.to_string());
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        s.set(k.trim(), v.trim());
    }
    Ok(s)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = settings(&args).and_then(|s| s.resolve()).and_then(|cfg| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?;
        pool.install(|| run(&cfg))
    });
    match result {
        Ok(out) => {
            for f in out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
