//! Direct representation learning for classifier environments by metric
//! matching.
//!
//! A representation `f` is trained so that the surrogate distance
//! `1 − exp(−‖f(x) − f(x')‖²/T)` reproduces the target distance `ρ̂(x, x')`,
//! which is 0 for inputs of the same class and 1 otherwise:
//!
//! ```text
//! E(f) = Σ_{i,j} [1 − exp(−‖f(x_i) − f(x_j)‖²/T) − ρ̂(x_i, x_j)]²
//! ```
//!
//! The sum runs over ordered pairs, so every unordered pair counts twice and
//! the diagonal contributes nothing.

use crate::envs::Environment;
use crate::nnet::{Activation, GradientVector, Network};
use crate::optim::{cg_minimize, Evaluation, HaltReason, Objective, TrainPolicy, TrainTrace};
use crate::rng::{self, Rng};
use crate::{par, Error, Result};

/// Default surrogate temperature.
pub const DEFAULT_TEMPERATURE: f64 = 0.01;

/// Inputs with class labels; `ρ̂` is 1 exactly when labels differ.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl LabeledSet {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: labels.len(),
            });
        }
        Ok(LabeledSet { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn target(&self, i: usize, j: usize) -> f64 {
        if self.labels[i] == self.labels[j] {
            0.0
        } else {
            1.0
        }
    }

    /// `n` inputs drawn from a classifier environment, labelled by class.
    pub fn draw(env: &Environment, n: usize, rng: &mut Rng) -> Result<Self> {
        let classes = env
            .classes()
            .ok_or_else(|| Error::InvalidInput("environment has no class labels".into()))?;
        let idx: Vec<usize> = (0..n).map(|_| env.sample_input(rng)).collect();
        LabeledSet::new(
            idx.iter().map(|&i| env.input(i).to_vec()).collect(),
            idx.iter().map(|&i| classes[i]).collect(),
        )
    }
}

/// `1 − exp(−d²/T)`.
pub fn surrogate_distance(d2: f64, temperature: f64) -> f64 {
    1.0 - (-d2 / temperature).exp()
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("temperature must be positive, got {t}")));
    }
    Ok(())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Value and largest absolute residual over pairs.
fn error_and_linf(outs: &[Vec<f64>], s: &LabeledSet, t: f64) -> (f64, f64) {
    let mut e = 0.0;
    let mut linf: f64 = 0.0;
    for i in 0..outs.len() {
        for j in 0..i {
            let r = surrogate_distance(sq_dist(&outs[i], &outs[j]), t) - s.target(i, j);
            e += 2.0 * r * r;
            linf = linf.max(r.abs());
        }
    }
    (e, linf)
}

pub fn metric_match_error(f: &Network, s: &LabeledSet, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    let outs = s.inputs.iter().map(|x| f.forward(x)).collect::<Result<Vec<_>>>()?;
    Ok(error_and_linf(&outs, s, temperature).0)
}

/// Value, pairwise L∞ residual and gradient. With `e = exp(−d²/T)` and
/// residual `r = 1 − e − ρ̂`, `∂E/∂f(x_i) = (8/T) Σ_j r_ij e_ij (f(x_i) − f(x_j))`.
fn value_linf_gradient(f: &Network, s: &LabeledSet, t: f64) -> Result<(f64, f64, GradientVector)> {
    let traces = s.inputs.iter().map(|x| f.trace(x)).collect::<Result<Vec<_>>>()?;
    let outs: Vec<&Vec<f64>> = traces.iter().map(|tr| tr.last().unwrap()).collect();
    let n = outs.len();
    let dim = f.out_dim();
    let mut d_out = vec![vec![0.0; dim]; n];
    let mut e_total = 0.0;
    let mut linf: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            let d2 = sq_dist(outs[i], outs[j]);
            let e = (-d2 / t).exp();
            let r = 1.0 - e - s.target(i, j);
            e_total += 2.0 * r * r;
            linf = linf.max(r.abs());
            let c = 8.0 / t * r * e;
            for k in 0..dim {
                let g = c * (outs[i][k] - outs[j][k]);
                d_out[i][k] += g;
                d_out[j][k] -= g;
            }
        }
    }
    let mut grad = GradientVector::zeros(f.num_params());
    for (tr, d) in traces.iter().zip(&d_out) {
        f.backward(tr, d, &mut grad);
    }
    Ok((e_total, linf, grad))
}

pub fn metric_match_gradient(f: &Network, s: &LabeledSet, temperature: f64) -> Result<GradientVector> {
    check_temperature(temperature)?;
    Ok(value_linf_gradient(f, s, temperature)?.2)
}

/// Metric-matching training objective. Halting compares `E/N`.
pub struct MetricObjective<'a> {
    template: Network,
    set: &'a LabeledSet,
    temperature: f64,
}

impl<'a> MetricObjective<'a> {
    pub fn new(template: Network, set: &'a LabeledSet, temperature: f64) -> Result<Self> {
        check_temperature(temperature)?;
        Ok(MetricObjective {
            template,
            set,
            temperature,
        })
    }

    fn net(&self, p: &[f64]) -> Network {
        self.template.with_params(p).expect("parameter count checked by optimiser")
    }
}

impl Objective for MetricObjective<'_> {
    fn dim(&self) -> usize {
        self.template.num_params()
    }

    fn value(&self, p: &[f64]) -> f64 {
        metric_match_error(&self.net(p), self.set, self.temperature).unwrap_or(f64::NAN)
    }

    fn evaluate(&self, p: &[f64], grad: &mut [f64]) -> Evaluation {
        match value_linf_gradient(&self.net(p), self.set, self.temperature) {
            Ok((value, linf, g)) => {
                grad.copy_from_slice(&g);
                Evaluation { value, linf }
            }
            Err(_) => Evaluation {
                value: f64::NAN,
                linf: f64::NAN,
            },
        }
    }

    fn halt_value(&self, value: f64) -> f64 {
        value / self.set.len() as f64
    }

    fn param_caps(&self, policy: &TrainPolicy) -> Vec<f64> {
        self.template.param_caps(policy.weight_clip, policy.threshold_clip)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectRun {
    pub f: Network,
    pub trace: TrainTrace,
    pub set: LabeledSet,
}

/// Draws `n` labelled inputs and fits a representation with node counts
/// `dims` by metric matching.
pub fn train_direct_with(
    env: &Environment,
    dims: &[usize],
    activation: Activation,
    n: usize,
    temperature: f64,
    policy: &TrainPolicy,
    rng: &mut Rng,
) -> Result<DirectRun> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least two training inputs".into()));
    }
    if dims.first() != Some(&env.input_dim()) {
        return Err(Error::DimensionMismatch {
            expected: env.input_dim(),
            got: dims.first().copied().unwrap_or(0),
        });
    }
    let set = LabeledSet::draw(env, n, rng)?;
    let (lo, hi) = policy.init_range;
    let template = Network::random(dims, activation, lo, hi, rng)?;
    let obj = MetricObjective::new(template.clone(), &set, temperature)?;
    let (p, trace) = cg_minimize(&obj, &template.params(), policy, rng)?;
    Ok(DirectRun {
        f: template.with_params(&p)?,
        trace,
        set,
    })
}

/// [`train_direct_with`] using a single linear output node.
pub fn train_direct(env: &Environment, n: usize, temperature: f64, policy: &TrainPolicy, rng: &mut Rng) -> Result<DirectRun> {
    train_direct_with(env, &[env.input_dim(), 1], Activation::Identity, n, temperature, policy, rng)
}

/// One centroid per class in representation space.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    pub classes: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
}

impl CentroidModel {
    /// Centroids of `f` over each class's inputs, classes in increasing order.
    pub fn fit(f: &Network, inputs: &[Vec<f64>], labels: &[usize]) -> Result<Self> {
        let mut classes: Vec<usize> = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        let mut sums = vec![vec![0.0; f.out_dim()]; classes.len()];
        let mut counts = vec![0usize; classes.len()];
        for (x, l) in inputs.iter().zip(labels) {
            let c = classes.binary_search(l).expect("label listed");
            for (s, v) in sums[c].iter_mut().zip(f.forward(x)?) {
                *s += v;
            }
            counts[c] += 1;
        }
        let centroids = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
            .collect();
        Ok(CentroidModel { classes, centroids })
    }

    /// Class of the nearest centroid; ties go to the lowest class.
    pub fn classify(&self, v: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.centroids.iter().enumerate() {
            let d = sq_dist(v, c);
            if d < best.1 {
                best = (i, d);
            }
        }
        self.classes[best.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectEvaluation {
    pub misclassified: usize,
    pub avg_within_variance: f64,
}

/// Scores `f` on every input of a classifier environment: inputs whose
/// nearest class centroid is not their own, and the average over classes of
/// `(1/P) √(Σ_j Σ_k ‖f(x_j) − f(x_k)‖²)` with `j, k` ranging over the `P`
/// inputs of the class.
pub fn evaluate_direct(f: &Network, env: &Environment) -> Result<DirectEvaluation> {
    let labels = env
        .classes()
        .ok_or_else(|| Error::InvalidInput("environment has no class labels".into()))?;
    let model = CentroidModel::fit(f, env.inputs(), labels)?;
    let outs = env.inputs().iter().map(|x| f.forward(x)).collect::<Result<Vec<_>>>()?;
    let misclassified = outs
        .iter()
        .zip(labels)
        .filter(|(v, &l)| model.classify(v) != l)
        .count();
    let mut total = 0.0;
    for &c in &model.classes {
        let members: Vec<&Vec<f64>> = outs.iter().zip(labels).filter(|(_, &l)| l == c).map(|(v, _)| v).collect();
        let mut s = 0.0;
        for a in &members {
            for b in &members {
                s += sq_dist(a, b);
            }
        }
        total += s.sqrt() / members.len() as f64;
    }
    Ok(DirectEvaluation {
        misclassified,
        avg_within_variance: total / model.classes.len() as f64,
    })
}

/// One replicate of the metric-matching experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectRecord {
    pub n: usize,
    pub replicate: usize,
    pub misclassified: usize,
    pub avg_within_variance: f64,
    pub final_value: f64,
    pub restarts: usize,
    pub halt: HaltReason,
    pub error: Option<String>,
}

/// Trains and evaluates a linear representation for each training size and
/// replicate, in parallel. Output is ordered by `n`, then replicate.
pub fn run_direct_experiment(
    env: &Environment,
    n_list: &[usize],
    replicates: usize,
    temperature: f64,
    policy: &TrainPolicy,
    seed: u64,
) -> Result<Vec<DirectRecord>> {
    if n_list.is_empty() || replicates == 0 {
        return Err(Error::InvalidInput("grid must be nonempty".into()));
    }
    check_temperature(temperature)?;
    let keys: Vec<(usize, usize)> = n_list
        .iter()
        .flat_map(|&n| (0..replicates).map(move |r| (n, r)))
        .collect();
    Ok(par::map_slice(&keys, |&(n, r)| {
        let mut rng = rng::child(seed, &[n as u64, r as u64]);
        let res = train_direct(env, n, temperature, policy, &mut rng)
            .and_then(|run| evaluate_direct(&run.f, env).map(|e| (run, e)));
        match res {
            Ok((run, e)) => DirectRecord {
                n,
                replicate: r,
                misclassified: e.misclassified,
                avg_within_variance: e.avg_within_variance,
                final_value: run.trace.final_value,
                restarts: run.trace.restarts,
                halt: run.trace.halt,
                error: None,
            },
            Err(e) => DirectRecord {
                n,
                replicate: r,
                misclassified: 0,
                avg_within_variance: f64::NAN,
                final_value: f64::NAN,
                restarts: 0,
                halt: HaltReason::RestartsExhausted,
                error: Some(e.to_string()),
            },
        }
    }))
}
