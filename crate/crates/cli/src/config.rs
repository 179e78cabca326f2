//! Flat `key = value` experiment configuration.
//!
//! Files hold one setting per line; `#` starts a comment. Command-line
//! overrides are applied on top in order, so the last assignment wins.

use crate::CliError;
use repnet::optim::TrainPolicy;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Binexp,
    Translation,
    Symmetric,
    RepVsFull,
    Directrep1,
    Directrep2,
    QuantizeQuadratic,
    RhoValidate,
    BoundsSweep,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Binexp,
        Experiment::Translation,
        Experiment::Symmetric,
        Experiment::RepVsFull,
        Experiment::Directrep1,
        Experiment::Directrep2,
        Experiment::QuantizeQuadratic,
        Experiment::RhoValidate,
        Experiment::BoundsSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Binexp => "binexp",
            Experiment::Translation => "translation",
            Experiment::Symmetric => "symmetric",
            Experiment::RepVsFull => "rep_vs_full",
            Experiment::Directrep1 => "directrep1",
            Experiment::Directrep2 => "directrep2",
            Experiment::QuantizeQuadratic => "quantize_quadratic",
            Experiment::RhoValidate => "rho_validate",
            Experiment::BoundsSweep => "bounds_sweep",
        }
    }

    /// Default `(n_list, m_list, replicates)`.
    fn default_grid(self) -> (Vec<usize>, Vec<usize>, usize) {
        match self {
            Experiment::Binexp => ((1..=9).collect(), vec![2, 6, 10, 14, 18, 22], 10),
            Experiment::Translation | Experiment::Symmetric => (vec![1, 5, 9], vec![1, 21, 41, 81], 3),
            Experiment::RepVsFull => (vec![9], vec![1, 5, 10, 20, 40], 4),
            Experiment::Directrep1 => (vec![5, 10, 20, 40], vec![1], 20),
            Experiment::Directrep2 => (vec![2, 5, 10, 15, 20, 25, 30, 35, 40], vec![1], 24),
            Experiment::QuantizeQuadratic => (vec![6], vec![1], 1),
            Experiment::RhoValidate => (vec![100], vec![100_000], 1),
            Experiment::BoundsSweep => ((1..=20).collect(), vec![100, 1_000, 10_000, 100_000], 1),
        }
    }

    /// Extra keys the experiment reads, with their defaults.
    fn extra_defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Experiment::Binexp => &[
                ("env_seed", "0"),
                ("m1_list", "2,6,10,14,18,22"),
                ("new_tasks", "10"),
                ("cap", "512"),
            ],
            Experiment::Translation | Experiment::Symmetric => &[],
            Experiment::RepVsFull => &[
                ("rep_m", "81"),
                ("threshold", "0.01"),
                ("attempts", "5"),
                ("tasks", "0,4,8,12"),
            ],
            Experiment::Directrep1 | Experiment::Directrep2 => &[("temperature", "0.01")],
            Experiment::QuantizeQuadratic => &[],
            Experiment::RhoValidate => &[("kinds", "linear01,quadratic11")],
            Experiment::BoundsSweep => &[
                ("loss_bound", "1"),
                ("alpha", "0.1"),
                ("nu", "0.1"),
                ("delta", "0.01"),
                ("ln_c_g", "10"),
                ("ln_cstar_f", "100"),
            ],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment {s:?}")))
    }
}

const POLICY_KEYS: [&str; 10] = [
    "mse_halt",
    "linf_halt",
    "plateau_window",
    "plateau_rel_improvement",
    "weight_clip",
    "threshold_clip",
    "max_restarts",
    "max_iterations",
    "init_lo",
    "init_hi",
];

const CORE_KEYS: [&str; 6] = ["experiment", "seed", "out", "n_list", "m_list", "replicates"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n_list: Vec<usize>,
    pub m_list: Vec<usize>,
    pub replicates: usize,
    pub policy: TrainPolicy,
    pub out: PathBuf,
    pub seed: u64,
    /// Experiment-specific settings, defaults filled in.
    pub extra: BTreeMap<String, String>,
}

/// Raw settings before resolution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Parse {
                    line: i + 1,
                    msg: format!("expected key = value, got {line:?}"),
                })?;
            s.set(k.trim(), v.trim());
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Settings::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Resolves against the defaults of the named experiment.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let experiment: Experiment = self
            .get("experiment")
            .ok_or_else(|| CliError::Config("experiment not set".into()))?
            .parse()?;
        let seed = parse_value::<u64>("seed", self.get("seed").ok_or_else(|| CliError::Config("seed is mandatory".into()))?)?;
        let out = PathBuf::from(self.get("out").unwrap_or("out"));
        let (n0, m0, r0) = experiment.default_grid();
        let n_list = self.get("n_list").map(|v| parse_list("n_list", v)).transpose()?.unwrap_or(n0);
        let m_list = self.get("m_list").map(|v| parse_list("m_list", v)).transpose()?.unwrap_or(m0);
        let replicates = self.get("replicates").map(|v| parse_value("replicates", v)).transpose()?.unwrap_or(r0);
        if n_list.is_empty() || m_list.is_empty() {
            return Err(CliError::Config("grids must be nonempty".into()));
        }
        if replicates == 0 {
            return Err(CliError::Config("replicates must be positive".into()));
        }

        let mut policy = match experiment {
            Experiment::Directrep1 | Experiment::Directrep2 => TrainPolicy::metric_matching(),
            _ => TrainPolicy::default(),
        };
        policy.master_seed = seed;
        let defaults = experiment.extra_defaults();
        let mut extra: BTreeMap<String, String> = defaults.iter().map(|&(k, v)| (k.to_string(), v.to_string())).collect();
        for (k, v) in &self.0 {
            if CORE_KEYS.contains(&k.as_str()) {
                continue;
            }
            if POLICY_KEYS.contains(&k.as_str()) {
                apply_policy(&mut policy, k, v)?;
            } else if extra.contains_key(k) {
                extra.insert(k.clone(), v.clone());
            } else {
                return Err(CliError::Config(format!("unknown key {k:?} for {experiment}")));
            }
        }
        policy.validate()?;
        Ok(ExperimentConfig {
            experiment,
            n_list,
            m_list,
            replicates,
            policy,
            out,
            seed,
            extra,
        })
    }
}

fn apply_policy(p: &mut TrainPolicy, key: &str, v: &str) -> Result<(), CliError> {
    match key {
        "mse_halt" => p.mse_halt = parse_value(key, v)?,
        "linf_halt" => p.linf_halt = parse_value(key, v)?,
        "plateau_window" => p.plateau_window = parse_value(key, v)?,
        "plateau_rel_improvement" => p.plateau_rel_improvement = parse_value(key, v)?,
        "weight_clip" => p.weight_clip = parse_value(key, v)?,
        "threshold_clip" => p.threshold_clip = parse_value(key, v)?,
        "max_restarts" => p.max_restarts = parse_value(key, v)?,
        "max_iterations" => p.max_iterations = parse_value(key, v)?,
        "init_lo" => p.init_range.0 = parse_value(key, v)?,
        "init_hi" => p.init_range.1 = parse_value(key, v)?,
        _ => unreachable!("not a policy key: {key}"),
    }
    Ok(())
}

pub fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad value for {key}: {v:?}")))
}

/// Comma-separated values; `a..=b` and `a..=b:step` ranges are expanded.
pub fn parse_list(key: &str, v: &str) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, rest)) = part.split_once("..=") {
            let (hi, step) = match rest.split_once(':') {
                Some((h, s)) => (h, parse_value::<usize>(key, s)?),
                None => (rest, 1),
            };
            if step == 0 {
                return Err(CliError::Config(format!("zero step in {key}")));
            }
            let (lo, hi) = (parse_value::<usize>(key, lo)?, parse_value::<usize>(key, hi)?);
            out.extend((lo..=hi).step_by(step));
        } else {
            out.push(parse_value(key, part)?);
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn extra<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self
            .extra
            .get(key)
            .ok_or_else(|| CliError::Config(format!("{key} not set")))?;
        parse_value(key, v)
    }

    pub fn extra_list(&self, key: &str) -> Result<Vec<usize>, CliError> {
        parse_list(key, self.extra.get(key).map(String::as_str).unwrap_or(""))
    }

    /// Canonical `key = value` echo, sorted by key.
    pub fn echo(&self) -> String {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let p = &self.policy;
        let mut lines: BTreeMap<&str, String> = BTreeMap::new();
        lines.insert("experiment", self.experiment.to_string());
        lines.insert("seed", self.seed.to_string());
        lines.insert("n_list", join(&self.n_list));
        lines.insert("m_list", join(&self.m_list));
        lines.insert("replicates", self.replicates.to_string());
        lines.insert("mse_halt", p.mse_halt.to_string());
        lines.insert("linf_halt", p.linf_halt.to_string());
        lines.insert("plateau_window", p.plateau_window.to_string());
        lines.insert("plateau_rel_improvement", p.plateau_rel_improvement.to_string());
        lines.insert("weight_clip", p.weight_clip.to_string());
        lines.insert("threshold_clip", p.threshold_clip.to_string());
        lines.insert("max_restarts", p.max_restarts.to_string());
        lines.insert("max_iterations", p.max_iterations.to_string());
        lines.insert("init_lo", p.init_range.0.to_string());
        lines.insert("init_hi", p.init_range.1.to_string());
        let mut s = String::new();
        for (k, v) in lines.iter().map(|(k, v)| (*k, v.as_str())).chain(self.extra.iter().map(|(k, v)| (k.as_str(), v.as_str()))) {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_resolve() {
        let s = Settings::parse("# demo\nexperiment = translation\nseed=3\nn_list = 1,5\nm_list = 1..=21:10\nmax_restarts = 7 # inline\n").unwrap();
        let c = s.resolve().unwrap();
        assert_eq!(c.experiment, Experiment::Translation);
        assert_eq!(c.n_list, vec![1, 5]);
        assert_eq!(c.m_list, vec![1, 11, 21]);
        assert_eq!(c.policy.max_restarts, 7);
        assert_eq!(c.policy.master_seed, 3);
        assert_eq!(c.replicates, 3);
    }

    #[test]
    fn seed_is_mandatory() {
        let s = Settings::parse("experiment = binexp").unwrap();
        assert!(matches!(s.resolve(), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let s = Settings::parse("experiment = binexp\nseed = 1\ncapp = 3").unwrap();
        assert!(s.resolve().is_err());
        let e = Settings::parse("experiment = binexp\nnonsense").unwrap_err();
        assert!(matches!(e, CliError::Parse { line: 2, .. }));
        let s = Settings::parse("experiment = binexp\nseed = 1\nn_list = ").unwrap();
        assert!(s.resolve().is_err());
        let s = Settings::parse("experiment = nope\nseed = 1").unwrap();
        assert!(s.resolve().is_err());
    }

    #[test]
    fn extras_have_defaults() {
        let s = Settings::parse("experiment = binexp\nseed = 1\ncap = 64").unwrap();
        let c = s.resolve().unwrap();
        assert_eq!(c.extra::<usize>("cap").unwrap(), 64);
        assert_eq!(c.extra_list("m1_list").unwrap(), vec![2, 6, 10, 14, 18, 22]);
        assert!(c.echo().contains("cap = 64\n"));
    }

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }
}
