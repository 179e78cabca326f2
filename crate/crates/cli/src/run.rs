//! Experiment dispatch and CSV output.

use crate::config::{Experiment, ExperimentConfig};
use crate::persist::{save_multitask, save_net};
use crate::CliError;
use rand::Rng as _;
use repnet::binexp::{run_binary_experiment, summarize, BinaryExperiment};
use repnet::bounds::{deviation_bound, multitask_m, representation_impedance, transfer_nm, BoundInputs};
use repnet::cdm::{abs_diff, quad_optimal_quantization, rho_closed, rho_mc, ClosedKind};
use repnet::directrep::{run_direct_experiment, train_direct, DirectRecord};
use repnet::envs::{EnvKind, Environment};
use repnet::replearn::{
    find_perfect_representation, generalisation_surface, rep_vs_full_curves, train_representation, Architecture,
};
use repnet::rng;
use std::path::{Path, PathBuf};

/// Files written by a run, in write order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

/// Locale-independent shortest round-trip decimal, exponent form for very
/// small or large magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

struct Out<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Out<'_> {
    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn file(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        path
    }
}

/// Runs the configured experiment, writing CSVs and a manifest into
/// `cfg.out`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    std::fs::create_dir_all(&cfg.out)?;
    let mut out = Out {
        dir: &cfg.out,
        files: Vec::new(),
    };
    match cfg.experiment {
        Experiment::Binexp => binexp(cfg, &mut out)?,
        Experiment::Translation => surface(cfg, EnvKind::Translation10, Architecture::translation(), &mut out)?,
        Experiment::Symmetric => surface(cfg, EnvKind::Symmetric10, Architecture::symmetric(), &mut out)?,
        Experiment::RepVsFull => rep_vs_full(cfg, &mut out)?,
        Experiment::Directrep1 => directrep(cfg, 10, 4, &mut out)?,
        Experiment::Directrep2 => directrep(cfg, 30, 10, &mut out)?,
        Experiment::QuantizeQuadratic => quantize(cfg, &mut out)?,
        Experiment::RhoValidate => rho_validate(cfg, &mut out)?,
        Experiment::BoundsSweep => bounds_sweep(cfg, &mut out)?,
    }
    let manifest = cfg.out.join("manifest.txt");
    let names: Vec<String> = out
        .files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let text = format!(
        "repnet {}\n{}files = {}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.echo(),
        names.join(",")
    );
    std::fs::write(&manifest, text)?;
    out.files.push(manifest);
    Ok(RunOutput { files: out.files })
}

fn binexp(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), CliError> {
    let exp = BinaryExperiment {
        env_seed: cfg.extra("env_seed")?,
        n_list: cfg.n_list.clone(),
        m_list: cfg.m_list.clone(),
        m1_list: cfg.extra_list("m1_list")?,
        new_tasks: cfg.extra("new_tasks")?,
        replicates: cfg.replicates,
        cap: cfg.extra("cap")?,
        seed: cfg.seed,
    };
    let records = run_binary_experiment(&exp)?;
    out.csv(
        "records.csv",
        &["n", "m", "replicate", "m1", "zero_loss_count", "evaluated", "rep_error", "exact_error", "ord_error"],
        records.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.m.to_string(),
                r.replicate.to_string(),
                r.m1.to_string(),
                r.zero_loss_count.to_string(),
                r.evaluated.to_string(),
                num(r.rep_error),
                num(r.exact_error),
                num(r.ord_error),
            ]
        }),
    )?;
    out.csv(
        "curves.csv",
        &["curve", "n", "m", "m1", "mean_error", "stderr"],
        summarize(&records).iter().map(|p| {
            vec![
                p.curve.name().to_string(),
                p.n.to_string(),
                p.m.to_string(),
                p.m1.to_string(),
                num(p.mean_error),
                num(p.stderr),
            ]
        }),
    )
}

fn surface(cfg: &ExperimentConfig, kind: EnvKind, arch: Architecture, out: &mut Out<'_>) -> Result<(), CliError> {
    let env = Environment::build(kind)?;
    let cells = generalisation_surface(&env, &arch, &cfg.n_list, &cfg.m_list, cfg.replicates, &cfg.policy, cfg.seed)?;
    out.csv(
        "surface.csv",
        &["n", "m", "replicate", "train_mse", "true_mse", "true_linf", "restarts", "halt", "error"],
        cells.iter().map(|c| {
            vec![
                c.n.to_string(),
                c.m.to_string(),
                c.replicate.to_string(),
                num(c.train_mse),
                num(c.true_mse),
                num(c.true_linf),
                c.restarts.to_string(),
                c.halt.name().to_string(),
                c.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    // weights of the largest cell's first replicate; the surface itself does
    // not keep networks, so retrain it from the same seed
    let (n, m) = (*cfg.n_list.iter().max().unwrap(), *cfg.m_list.iter().max().unwrap());
    let mut r = rng::child(cfg.seed, &[n as u64, m as u64, 0]);
    if let Ok((mt, _, _)) = train_representation(&env, n, m, &arch, &cfg.policy, &mut r) {
        save_multitask(&out.file("network.txt"), &mt)?;
    }
    Ok(())
}

fn rep_vs_full(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), CliError> {
    let env = Environment::build(EnvKind::Translation10)?;
    let arch = Architecture::translation();
    let n = cfg.n_list[0];
    let rep_m: usize = cfg.extra("rep_m")?;
    let threshold: f64 = cfg.extra("threshold")?;
    let attempts: usize = cfg.extra("attempts")?;
    let found = find_perfect_representation(&env, &arch, n, rep_m, threshold, attempts, &cfg.policy, rng::split(cfg.seed, 0))?;
    let (f, mse, attempt) = found.ok_or_else(|| {
        CliError::Experiment(format!("no representation with true mse < {threshold} in {attempts} attempts"))
    })?;
    save_net(&out.file("representation.txt"), &f)?;
    out.csv(
        "representation.csv",
        &["n", "m", "attempt", "true_mse"],
        [vec![n.to_string(), rep_m.to_string(), attempt.to_string(), num(mse)]],
    )?;
    let tasks = cfg.extra_list("tasks")?;
    let points = rep_vs_full_curves(&env, &f, &arch, &tasks, &cfg.m_list, cfg.replicates, &cfg.policy, rng::split(cfg.seed, 1))?;
    out.csv(
        "curves.csv",
        &["mode", "task", "m", "mean_true_error", "stderr", "failures"],
        points.iter().map(|p| {
            vec![
                p.mode.name().to_string(),
                p.task.to_string(),
                p.m.to_string(),
                num(p.mean_true_error),
                num(p.stderr),
                p.failures.to_string(),
            ]
        }),
    )
}

fn directrep(cfg: &ExperimentConfig, pixels: usize, objects: usize, out: &mut Out<'_>) -> Result<(), CliError> {
    let env = Environment::build(EnvKind::Classifier { pixels, objects })?;
    let t: f64 = cfg.extra("temperature")?;
    let records = run_direct_experiment(&env, &cfg.n_list, cfg.replicates, t, &cfg.policy, cfg.seed)?;
    out.csv(
        "records.csv",
        &["n", "replicate", "misclassified", "avg_within_variance", "final_value", "restarts", "halt", "error"],
        records.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.replicate.to_string(),
                r.misclassified.to_string(),
                num(r.avg_within_variance),
                num(r.final_value),
                r.restarts.to_string(),
                r.halt.name().to_string(),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    out.csv(
        "summary.csv",
        &["n", "runs", "perfect_fraction", "mean_misclassified", "mean_variance", "mean_restarts"],
        cfg.n_list.iter().map(|&n| {
            let ok: Vec<&DirectRecord> = records.iter().filter(|r| r.n == n && r.error.is_none()).collect();
            let k = ok.len().max(1) as f64;
            let perfect = ok.iter().filter(|r| r.misclassified == 0 && r.avg_within_variance < 1e-2).count();
            vec![
                n.to_string(),
                ok.len().to_string(),
                num(perfect as f64 / k),
                num(ok.iter().map(|r| r.misclassified as f64).sum::<f64>() / k),
                num(ok.iter().map(|r| r.avg_within_variance).sum::<f64>() / k),
                num(ok.iter().map(|r| r.restarts as f64).sum::<f64>() / k),
            ]
        }),
    )?;
    // replicate 0 of the largest training size, retrained from its seed
    let n = *cfg.n_list.iter().max().unwrap();
    if let Ok(run) = train_direct(&env, n, t, &cfg.policy, &mut rng::child(cfg.seed, &[n as u64, 0])) {
        save_net(&out.file("representation.txt"), &run.f)?;
    }
    Ok(())
}

fn quantize(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), CliError> {
    let rows = cfg
        .n_list
        .iter()
        .map(|&k| {
            let q = quad_optimal_quantization(k)?;
            let pts: Vec<String> = q.points.iter().map(|&p| num(p)).collect();
            Ok(vec![
                k.to_string(),
                q.sweeps.to_string(),
                q.sweeps_to(1e-6).map(|s| s.to_string()).unwrap_or_default(),
                pts.join(" "),
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    out.csv("quantization.csv", &["k", "sweeps", "sweeps_to_1e-6", "points"], rows)
}

fn rho_validate(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), CliError> {
    let pairs = cfg.n_list[0];
    let samples = cfg.m_list[0];
    let mut rows = Vec::new();
    for name in cfg.extra.get("kinds").map(String::as_str).unwrap_or("").split(',').map(str::trim) {
        let (ki, kind) = match name {
            "linear01" => (0, ClosedKind::Linear01),
            "quadratic11" => (1, ClosedKind::Quadratic11),
            "cubic11" => (2, ClosedKind::Cubic11),
            _ => return Err(CliError::Config(format!("unknown distortion kind {name:?}"))),
        };
        let (lo, hi) = kind.domain();
        for p in 0..pairs {
            let mut r = rng::child(cfg.seed, &[ki, p as u64]);
            let (x, y) = (r.gen_range(lo..=hi), r.gen_range(lo..=hi));
            let est = rho_mc(&kind.sampler(), abs_diff, &x, &y, samples, rng::split_path(cfg.seed, &[ki, p as u64, 1]))?;
            let exact = rho_closed(kind, x, y)?;
            rows.push(vec![
                name.to_string(),
                p.to_string(),
                num(x),
                num(y),
                num(est),
                num(exact),
                num((est - exact).abs()),
            ]);
        }
    }
    out.csv("rho.csv", &["kind", "pair", "x", "y", "rho_mc", "rho_closed", "abs_error"], rows)
}

fn bounds_sweep(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), CliError> {
    let base = BoundInputs {
        loss_bound: cfg.extra("loss_bound")?,
        alpha: cfg.extra("alpha")?,
        nu: cfg.extra("nu")?,
        delta: cfg.extra("delta")?,
        ln_c_g: cfg.extra("ln_c_g")?,
        ln_cstar_f: cfg.extra("ln_cstar_f")?,
        ..BoundInputs::default()
    };
    if base.ln_cstar_f.is_nan() || base.ln_cstar_f <= 0.0 {
        return Err(CliError::Config("ln_cstar_f must be positive".into()));
    }
    let r = base.ln_c_g / base.ln_cstar_f;
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        for &m in &cfg.m_list {
            let b = BoundInputs { n, m, ..base.clone() };
            let (n_req, m_req) = transfer_nm(&b)?;
            // joint capacity of n heads over one representation
            let ln_joint = n as f64 * b.ln_c_g + b.ln_cstar_f;
            rows.push(vec![
                n.to_string(),
                m.to_string(),
                num(multitask_m(&b)?),
                num(n_req),
                num(m_req),
                num(deviation_bound(&b, ln_joint)?),
                num(representation_impedance(r, n)?),
            ]);
        }
    }
    out.csv(
        "bounds.csv",
        &["n", "m", "multitask_m", "n_req", "m_req", "deviation_bound", "impedance"],
        rows,
    )
}
