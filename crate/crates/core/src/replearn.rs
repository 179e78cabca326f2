//! Shared-representation multi-task learning.
//!
//! A [`MultiTaskNet`] is one representation network `f` (the trunk) and one
//! output network `g_i` per sampled task. Training minimises the mean
//! squared error over the whole `(n, m)` sample,
//!
//! ```text
//! E = (1/n) Σ_i (1/m) Σ_j (g_i(f(x_ij)) - y_ij)²
//! ```
//!
//! where the error of example `(i, j)` backpropagates through head `g_i` and
//! the trunk only. Minimising `E` jointly over trunk and heads is equivalent
//! to minimising the empirical representation loss, so no inner per-task
//! optimisation is needed.

use std::collections::BTreeMap;

use crate::envs::{Environment, NMSample};
use crate::nnet::{Activation, GradientVector, Network};
use crate::optim::{cg_minimize, Evaluation, HaltReason, Objective, TrainPolicy, TrainTrace};
use crate::rng::{self, Rng};
use crate::{par, Error, Result};

/// Node counts of the trunk and of every head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub trunk: Vec<usize>,
    pub head: Vec<usize>,
    pub activation: Activation,
}

impl Architecture {
    /// 10-3-2 sigmoid trunk with 2-2-1 heads.
    pub fn translation() -> Self {
        Architecture {
            trunk: vec![10, 3, 2],
            head: vec![2, 2, 1],
            activation: Activation::Sigmoid,
        }
    }

    /// 10→3 trunk and 3→1 heads, no hidden layers.
    pub fn symmetric() -> Self {
        Architecture {
            trunk: vec![10, 3],
            head: vec![3, 1],
            activation: Activation::Sigmoid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trunk.len() < 2 || self.head.len() < 2 {
            return Err(Error::InvalidInput("trunk and head need input and output sizes".into()));
        }
        if self.trunk.last() != self.head.first() {
            return Err(Error::DimensionMismatch {
                expected: *self.trunk.last().unwrap(),
                got: self.head[0],
            });
        }
        if *self.head.last().unwrap() != 1 {
            return Err(Error::InvalidInput("heads must have a single output".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiTaskNet {
    trunk: Network,
    heads: Vec<Network>,
}

impl MultiTaskNet {
    pub fn new(trunk: Network, heads: Vec<Network>) -> Result<Self> {
        if heads.is_empty() {
            return Err(Error::InvalidInput("need at least one head".into()));
        }
        for h in &heads {
            if h.in_dim() != trunk.out_dim() {
                return Err(Error::DimensionMismatch {
                    expected: trunk.out_dim(),
                    got: h.in_dim(),
                });
            }
            if h.out_dim() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    got: h.out_dim(),
                });
            }
        }
        Ok(MultiTaskNet { trunk, heads })
    }

    pub fn random(arch: &Architecture, n_heads: usize, range: (f64, f64), rng: &mut Rng) -> Result<Self> {
        arch.validate()?;
        let trunk = Network::random(&arch.trunk, arch.activation, range.0, range.1, rng)?;
        let heads = (0..n_heads)
            .map(|_| Network::random(&arch.head, arch.activation, range.0, range.1, rng))
            .collect::<Result<Vec<_>>>()?;
        MultiTaskNet::new(trunk, heads)
    }

    pub fn trunk(&self) -> &Network {
        &self.trunk
    }

    pub fn heads(&self) -> &[Network] {
        &self.heads
    }

    pub fn num_params(&self) -> usize {
        self.trunk.num_params() + self.heads.iter().map(Network::num_params).sum::<usize>()
    }

    /// Trunk parameters followed by each head's, in head order.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.trunk.params();
        for h in &self.heads {
            p.extend(h.params());
        }
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                got: params.len(),
            });
        }
        let mut off = self.trunk.num_params();
        self.trunk.set_params(&params[..off])?;
        for h in &mut self.heads {
            let k = h.num_params();
            h.set_params(&params[off..off + k])?;
            off += k;
        }
        Ok(())
    }

    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        let mut mt = self.clone();
        mt.set_params(params)?;
        Ok(mt)
    }

    /// `g_head(f(x))`.
    pub fn predict(&self, head: usize, x: &[f64]) -> Result<f64> {
        let h = self.heads.get(head).ok_or(Error::UnknownTask(head))?;
        let v = self.trunk.forward(x)?;
        Ok(h.forward(&v)?[0])
    }
}

/// Gradient of the multi-task objective, split by network.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTaskGradient {
    pub trunk: GradientVector,
    pub heads: Vec<GradientVector>,
}

impl MultiTaskGradient {
    /// Flattened in [`MultiTaskNet::params`] order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.trunk.0.clone();
        for h in &self.heads {
            v.extend_from_slice(h);
        }
        v
    }
}

/// A row's examples grouped by distinct `(input, target)`.
#[derive(Debug, Clone)]
struct Group {
    slot: usize,
    y: f64,
    weight: f64,
}

/// The sample reorganised so each distinct input goes through the trunk once.
#[derive(Debug, Clone)]
struct Compiled {
    inputs: Vec<Vec<f64>>,
    rows: Vec<Vec<Group>>,
}

impl Compiled {
    fn new(z: &NMSample) -> Self {
        let n = z.n() as f64;
        let mut slot_of: BTreeMap<usize, usize> = BTreeMap::new();
        let mut inputs = Vec::new();
        let rows = z
            .rows
            .iter()
            .map(|row| {
                let m = row.len() as f64;
                let mut groups: BTreeMap<(usize, u64), f64> = BTreeMap::new();
                for e in row {
                    let slot = *slot_of.entry(e.input).or_insert_with(|| {
                        inputs.push(e.x.clone());
                        inputs.len() - 1
                    });
                    *groups.entry((slot, e.y.to_bits())).or_insert(0.0) += 1.0 / (n * m);
                }
                groups
                    .into_iter()
                    .map(|((slot, yb), weight)| Group {
                        slot,
                        y: f64::from_bits(yb),
                        weight,
                    })
                    .collect()
            })
            .collect();
        Compiled { inputs, rows }
    }

    fn value(&self, mt: &MultiTaskNet) -> Result<(f64, f64)> {
        let feats = self
            .inputs
            .iter()
            .map(|x| mt.trunk.forward(x))
            .collect::<Result<Vec<_>>>()?;
        let mut loss = 0.0;
        let mut linf: f64 = 0.0;
        for (row, head) in self.rows.iter().zip(&mt.heads) {
            for g in row {
                let e = head.forward(&feats[g.slot])?[0] - g.y;
                loss += g.weight * e * e;
                linf = linf.max(e.abs());
            }
        }
        Ok((loss, linf))
    }

    fn value_and_gradient(&self, mt: &MultiTaskNet) -> Result<(f64, f64, MultiTaskGradient)> {
        let traces = self
            .inputs
            .iter()
            .map(|x| mt.trunk.trace(x))
            .collect::<Result<Vec<_>>>()?;
        let v_dim = mt.trunk.out_dim();
        let mut d_feat = vec![vec![0.0; v_dim]; self.inputs.len()];
        let mut heads = Vec::with_capacity(mt.heads.len());
        let mut loss = 0.0;
        let mut linf: f64 = 0.0;
        for (row, head) in self.rows.iter().zip(&mt.heads) {
            let mut hg = GradientVector::zeros(head.num_params());
            for g in row {
                let acts = head.trace(traces[g.slot].last().unwrap())?;
                let e = acts.last().unwrap()[0] - g.y;
                loss += g.weight * e * e;
                linf = linf.max(e.abs());
                let dv = head.backward(&acts, &[2.0 * g.weight * e], &mut hg);
                for (a, b) in d_feat[g.slot].iter_mut().zip(&dv) {
                    *a += b;
                }
            }
            heads.push(hg);
        }
        let mut trunk = GradientVector::zeros(mt.trunk.num_params());
        for (tr, dv) in traces.iter().zip(&d_feat) {
            if dv.iter().any(|&v| v != 0.0) {
                mt.trunk.backward(tr, dv, &mut trunk);
            }
        }
        Ok((loss, linf, MultiTaskGradient { trunk, heads }))
    }
}

/// Mean squared error of `mt` on `z` and its gradient.
pub fn multitask_objective(mt: &MultiTaskNet, z: &NMSample) -> Result<(f64, MultiTaskGradient)> {
    if z.n() != mt.heads.len() {
        return Err(Error::DimensionMismatch {
            expected: mt.heads.len(),
            got: z.n(),
        });
    }
    if z.m() == 0 {
        return Err(Error::InvalidInput("sample has no columns".into()));
    }
    let (loss, _, grad) = Compiled::new(z).value_and_gradient(mt)?;
    Ok((loss, grad))
}

/// Training objective over the flattened parameters of a [`MultiTaskNet`].
pub struct MultiTaskObjective {
    template: MultiTaskNet,
    compiled: Compiled,
}

impl MultiTaskObjective {
    pub fn new(template: MultiTaskNet, z: &NMSample) -> Result<Self> {
        if z.n() != template.heads.len() {
            return Err(Error::DimensionMismatch {
                expected: template.heads.len(),
                got: z.n(),
            });
        }
        if let Some(e) = z.rows.iter().flatten().find(|e| e.x.len() != template.trunk.in_dim()) {
            return Err(Error::DimensionMismatch {
                expected: template.trunk.in_dim(),
                got: e.x.len(),
            });
        }
        Ok(MultiTaskObjective {
            template,
            compiled: Compiled::new(z),
        })
    }

    fn net(&self, params: &[f64]) -> MultiTaskNet {
        self.template.with_params(params).expect("parameter count checked by optimiser")
    }
}

impl Objective for MultiTaskObjective {
    fn dim(&self) -> usize {
        self.template.num_params()
    }

    fn value(&self, params: &[f64]) -> f64 {
        self.compiled.value(&self.net(params)).map_or(f64::NAN, |v| v.0)
    }

    fn evaluate(&self, params: &[f64], grad: &mut [f64]) -> Evaluation {
        match self.compiled.value_and_gradient(&self.net(params)) {
            Ok((value, linf, g)) => {
                grad.copy_from_slice(&g.flatten());
                Evaluation { value, linf }
            }
            Err(_) => Evaluation {
                value: f64::NAN,
                linf: f64::NAN,
            },
        }
    }

    fn param_caps(&self, policy: &TrainPolicy) -> Vec<f64> {
        let mut caps = self.template.trunk.param_caps(policy.weight_clip, policy.threshold_clip);
        for h in &self.template.heads {
            caps.extend(h.param_caps(policy.weight_clip, policy.threshold_clip));
        }
        caps
    }
}

/// Fits `mt` to `z` by conjugate gradients, starting from its current
/// parameters.
pub fn fit_multitask(mt: &MultiTaskNet, z: &NMSample, policy: &TrainPolicy, rng: &mut Rng) -> Result<(MultiTaskNet, TrainTrace)> {
    let obj = MultiTaskObjective::new(mt.clone(), z)?;
    let (params, trace) = cg_minimize(&obj, &mt.params(), policy, rng)?;
    Ok((mt.with_params(&params)?, trace))
}

/// Draws an `(n, m)` sample from `env` and trains a fresh multi-task network
/// on it.
pub fn train_representation(
    env: &Environment,
    n: usize,
    m: usize,
    arch: &Architecture,
    policy: &TrainPolicy,
    rng: &mut Rng,
) -> Result<(MultiTaskNet, TrainTrace, NMSample)> {
    arch.validate()?;
    if arch.trunk[0] != env.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: env.input_dim(),
            got: arch.trunk[0],
        });
    }
    let z = env.draw_nm_sample(n, m, rng)?;
    let mt = MultiTaskNet::random(arch, n, policy.init_range, rng)?;
    let (mt, trace) = fit_multitask(&mt, &z, policy, rng)?;
    Ok((mt, trace, z))
}

/// Exact error of a predictor against one task table, weighting inputs by
/// their probability. Returns `(mse, linf)`.
fn table_error<F: Fn(&[f64]) -> Result<f64>>(predict: F, env: &Environment, task: usize) -> Result<(f64, f64)> {
    let table = env.task(task)?;
    let mut mse = 0.0;
    let mut linf: f64 = 0.0;
    for ((x, &w), &y) in env.inputs().iter().zip(env.input_weights()).zip(table) {
        let e = predict(x)? - y;
        mse += w * e * e;
        linf = linf.max(e.abs());
    }
    Ok((mse, linf))
}

/// Exact true error of `mt`: head `i` is scored against task `task_ids[i]`.
/// The squared error is averaged over heads and (probability-weighted)
/// inputs; the L∞ error is the maximum deviation anywhere.
pub fn true_error(mt: &MultiTaskNet, env: &Environment, task_ids: &[usize]) -> Result<(f64, f64)> {
    if task_ids.len() != mt.heads.len() {
        return Err(Error::DimensionMismatch {
            expected: mt.heads.len(),
            got: task_ids.len(),
        });
    }
    let feats = env
        .inputs()
        .iter()
        .map(|x| mt.trunk.forward(x))
        .collect::<Result<Vec<_>>>()?;
    let mut mse = 0.0;
    let mut linf: f64 = 0.0;
    for (head, &t) in mt.heads.iter().zip(task_ids) {
        let table = env.task(t)?;
        for ((v, &w), &y) in feats.iter().zip(env.input_weights()).zip(table) {
            let e = head.forward(v)?[0] - y;
            mse += w * e * e;
            linf = linf.max(e.abs());
        }
    }
    Ok((mse / task_ids.len() as f64, linf))
}

/// Exact true error of a single scalar network on one task.
pub fn true_error_single(net: &Network, env: &Environment, task: usize) -> Result<(f64, f64)> {
    table_error(|x| Ok(net.forward(x)?[0]), env, task)
}

/// Weighted squared error of a head over fixed features.
struct HeadObjective<'a> {
    template: Network,
    feats: &'a [Vec<f64>],
    targets: &'a [f64],
    weights: &'a [f64],
}

impl HeadObjective<'_> {
    fn net(&self, p: &[f64]) -> Network {
        self.template.with_params(p).expect("parameter count checked by optimiser")
    }
}

impl Objective for HeadObjective<'_> {
    fn dim(&self) -> usize {
        self.template.num_params()
    }

    fn value(&self, p: &[f64]) -> f64 {
        let net = self.net(p);
        let mut s = 0.0;
        for ((v, &y), &w) in self.feats.iter().zip(self.targets).zip(self.weights) {
            match net.forward(v) {
                Ok(o) => s += w * (o[0] - y).powi(2),
                Err(_) => return f64::NAN,
            }
        }
        s
    }

    fn evaluate(&self, p: &[f64], grad: &mut [f64]) -> Evaluation {
        let net = self.net(p);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        let mut linf: f64 = 0.0;
        for ((v, &y), &w) in self.feats.iter().zip(self.targets).zip(self.weights) {
            if w == 0.0 {
                continue;
            }
            let acts = match net.trace(v) {
                Ok(a) => a,
                Err(_) => {
                    return Evaluation {
                        value: f64::NAN,
                        linf: f64::NAN,
                    }
                }
            };
            let e = acts.last().unwrap()[0] - y;
            value += w * e * e;
            linf = linf.max(e.abs());
            net.backward(&acts, &[2.0 * w * e], grad);
        }
        Evaluation { value, linf }
    }

    fn param_caps(&self, policy: &TrainPolicy) -> Vec<f64> {
        self.template.param_caps(policy.weight_clip, policy.threshold_clip)
    }
}

/// Trains a head over the fixed representation `f` on weighted examples
/// given as `(input, target, weight)` triples. Weights are normalised to sum
/// to one.
pub fn fit_head(
    f: &Network,
    head_dims: &[usize],
    activation: Activation,
    examples: &[(Vec<f64>, f64, f64)],
    policy: &TrainPolicy,
    rng: &mut Rng,
) -> Result<(Network, TrainTrace)> {
    if head_dims.first() != Some(&f.out_dim()) {
        return Err(Error::DimensionMismatch {
            expected: f.out_dim(),
            got: head_dims.first().copied().unwrap_or(0),
        });
    }
    let feats = examples
        .iter()
        .map(|(x, _, _)| f.forward(x))
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<f64> = examples.iter().map(|e| e.1).collect();
    let total: f64 = examples.iter().map(|e| e.2).sum();
    let weights: Vec<f64> = examples.iter().map(|e| e.2 / total).collect();
    let (lo, hi) = policy.init_range;
    let template = Network::random(head_dims, activation, lo, hi, rng)?;
    let obj = HeadObjective {
        template: template.clone(),
        feats: &feats,
        targets: &targets,
        weights: &weights,
    };
    let (p, trace) = cg_minimize(&obj, &template.params(), policy, rng)?;
    Ok((template.with_params(&p)?, trace))
}

/// Quality of a representation on every task of an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationLoss {
    /// Mean over tasks and (weighted) inputs of the best head's squared error.
    pub mse: f64,
    /// Largest absolute error of the best heads.
    pub linf: f64,
    /// Best squared error per task.
    pub per_task: Vec<f64>,
    /// Tasks whose head training stopped on restart exhaustion in every seed.
    pub unconverged: Vec<usize>,
}

/// Empirical true loss of the representation `f`: for every task in `env` a
/// fresh head is trained on the full enumerated input set with `f` frozen,
/// keeping the best of `restarts` initialisations.
///
/// Seeds are derived from `seed`, task and restart index, so the result for
/// `k` restarts is the best over a prefix of the seeds used for `k + 1`.
pub fn rep_true_loss(
    f: &Network,
    env: &Environment,
    head_dims: &[usize],
    restarts: usize,
    policy: &TrainPolicy,
    seed: u64,
) -> Result<RepresentationLoss> {
    if restarts == 0 {
        return Err(Error::InvalidInput("need at least one restart".into()));
    }
    let single = TrainPolicy {
        max_restarts: 0,
        ..policy.clone()
    };
    let n_tasks = env.num_tasks();
    let runs = par::map_range(n_tasks * restarts, |job| -> Result<(f64, f64, bool)> {
        let (t, k) = (job / restarts, job % restarts);
        let table = env.task(t)?;
        let examples: Vec<_> = env
            .inputs()
            .iter()
            .zip(table)
            .zip(env.input_weights())
            .map(|((x, &y), &w)| (x.clone(), y, w))
            .collect();
        let mut r = rng::child(seed, &[t as u64, k as u64]);
        let (g, trace) = fit_head(f, head_dims, f.activation_for_heads(), &examples, &single, &mut r)?;
        let (mse, linf) = table_error(|x| Ok(g.forward(&f.forward(x)?)?[0]), env, t)?;
        Ok((mse, linf, trace.halt.by_criterion()))
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let mut per_task = Vec::with_capacity(n_tasks);
    let mut linf: f64 = 0.0;
    let mut unconverged = Vec::new();
    for t in 0..n_tasks {
        let slice = &runs[t * restarts..(t + 1) * restarts];
        let best = slice
            .iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("restarts > 0");
        per_task.push(best.0);
        linf = linf.max(best.1);
        if slice.iter().all(|r| !r.2) {
            unconverged.push(t);
        }
    }
    let mse = per_task.iter().sum::<f64>() / n_tasks as f64;
    Ok(RepresentationLoss {
        mse,
        linf,
        per_task,
        unconverged,
    })
}

trait HeadActivation {
    fn activation_for_heads(&self) -> Activation;
}

impl HeadActivation for Network {
    /// Heads over a linear representation still need a squashing output.
    fn activation_for_heads(&self) -> Activation {
        match self.activation() {
            Activation::Sign => Activation::Sigmoid,
            Activation::Identity => Activation::Sigmoid,
            a => a,
        }
    }
}

/// One trained cell of a generalisation surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCell {
    pub n: usize,
    pub m: usize,
    pub replicate: usize,
    pub train_mse: f64,
    pub true_mse: f64,
    pub true_linf: f64,
    pub restarts: usize,
    pub halt: HaltReason,
    /// Set when training failed outright; the error columns are then NaN.
    pub error: Option<String>,
}

/// Trains a fresh network for every `(n, m, replicate)` and records its
/// exact generalisation error. Cells are independent and run in parallel;
/// the output is ordered by `n`, then `m`, then replicate.
pub fn generalisation_surface(
    env: &Environment,
    arch: &Architecture,
    n_list: &[usize],
    m_list: &[usize],
    replicates: usize,
    policy: &TrainPolicy,
    seed: u64,
) -> Result<Vec<SurfaceCell>> {
    if n_list.is_empty() || m_list.is_empty() || replicates == 0 {
        return Err(Error::InvalidInput("grid must be nonempty".into()));
    }
    arch.validate()?;
    let mut keys = Vec::new();
    for &n in n_list {
        for &m in m_list {
            for r in 0..replicates {
                keys.push((n, m, r));
            }
        }
    }
    Ok(par::map_slice(&keys, |&(n, m, r)| {
        let mut rng = rng::child(seed, &[n as u64, m as u64, r as u64]);
        match train_representation(env, n, m, arch, policy, &mut rng)
            .and_then(|(mt, trace, z)| true_error(&mt, env, &z.task_ids).map(|e| (trace, e)))
        {
            Ok((trace, (true_mse, true_linf))) => SurfaceCell {
                n,
                m,
                replicate: r,
                train_mse: trace.final_value,
                true_mse,
                true_linf,
                restarts: trace.restarts,
                halt: trace.halt,
                error: None,
            },
            Err(e) => SurfaceCell {
                n,
                m,
                replicate: r,
                train_mse: f64::NAN,
                true_mse: f64::NAN,
                true_linf: f64::NAN,
                restarts: 0,
                halt: HaltReason::RestartsExhausted,
                error: Some(e.to_string()),
            },
        }
    }))
}

/// Which hypothesis space a rep-vs-full curve point was learnt with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceMode {
    /// Heads over a fixed representation (`G ∘ f`).
    WithRepresentation,
    /// Trunk and head trained together (`G ∘ F`).
    Full,
}

impl SpaceMode {
    pub fn name(self) -> &'static str {
        match self {
            SpaceMode::WithRepresentation => "Gof",
            SpaceMode::Full => "GoF",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub mode: SpaceMode,
    pub task: usize,
    pub m: usize,
    pub mean_true_error: f64,
    pub stderr: f64,
    /// Replicates that failed outright and were left out of the mean.
    pub failures: usize,
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Generalisation curves for learning each task with the fixed
/// representation `f` versus learning it from scratch.
///
/// For every task, training size `m` and replicate, `m` examples are drawn;
/// a head is trained over `f`, and separately a full trunk+head network is
/// trained on the same examples. Both are scored by exact true MSE.
#[allow(clippy::too_many_arguments)]
pub fn rep_vs_full_curves(
    env: &Environment,
    f: &Network,
    arch: &Architecture,
    tasks: &[usize],
    m_list: &[usize],
    replicates: usize,
    policy: &TrainPolicy,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if m_list.is_empty() || tasks.is_empty() || replicates == 0 {
        return Err(Error::InvalidInput("grid must be nonempty".into()));
    }
    arch.validate()?;
    if f.out_dim() != arch.head[0] {
        return Err(Error::DimensionMismatch {
            expected: arch.head[0],
            got: f.out_dim(),
        });
    }
    for &t in tasks {
        env.task(t)?;
    }
    let mut keys = Vec::new();
    for &t in tasks {
        for &m in m_list {
            for r in 0..replicates {
                keys.push((t, m, r));
            }
        }
    }
    let results = par::map_slice(&keys, |&(t, m, r)| -> (Option<f64>, Option<f64>) {
        let mut rng = rng::child(seed, &[t as u64, m as u64, r as u64]);
        let row = env.draw_row(t, m, &mut rng);
        let mut rng_rep = rng::child(seed, &[t as u64, m as u64, r as u64, 1]);
        let mut rng_full = rng::child(seed, &[t as u64, m as u64, r as u64, 2]);
        let examples: Vec<_> = row.iter().map(|e| (e.x.clone(), e.y, 1.0)).collect();
        let with_rep = fit_head(f, &arch.head, arch.activation, &examples, policy, &mut rng_rep)
            .and_then(|(g, _)| table_error(|x| Ok(g.forward(&f.forward(x)?)?[0]), env, t))
            .ok()
            .map(|e| e.0);
        let z = NMSample {
            task_ids: vec![t],
            rows: vec![row],
        };
        let full = MultiTaskNet::random(arch, 1, policy.init_range, &mut rng_full)
            .and_then(|mt| fit_multitask(&mt, &z, policy, &mut rng_full))
            .and_then(|(mt, _)| true_error(&mt, env, &[t]))
            .ok()
            .map(|e| e.0);
        (with_rep, full)
    });
    let mut out = Vec::new();
    for (ti, &t) in tasks.iter().enumerate() {
        for (mi, &m) in m_list.iter().enumerate() {
            let base = (ti * m_list.len() + mi) * replicates;
            let slice = &results[base..base + replicates];
            for mode in [SpaceMode::WithRepresentation, SpaceMode::Full] {
                let vals: Vec<f64> = slice
                    .iter()
                    .filter_map(|(a, b)| match mode {
                        SpaceMode::WithRepresentation => *a,
                        SpaceMode::Full => *b,
                    })
                    .collect();
                let (mean, se) = mean_stderr(&vals);
                out.push(CurvePoint {
                    mode,
                    task: t,
                    m,
                    mean_true_error: mean,
                    stderr: se,
                    failures: replicates - vals.len(),
                });
            }
        }
    }
    Ok(out)
}

/// Mode-specific inputs of [`learning_curves`].
#[derive(Debug, Clone)]
pub enum CurveMode<'a> {
    Surface {
        n_list: Vec<usize>,
        m_list: Vec<usize>,
    },
    RepVsFull {
        representation: &'a Network,
        tasks: Vec<usize>,
        m_list: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveOutput {
    Surface(Vec<SurfaceCell>),
    RepVsFull(Vec<CurvePoint>),
}

pub fn learning_curves(
    env: &Environment,
    arch: &Architecture,
    mode: CurveMode<'_>,
    replicates: usize,
    policy: &TrainPolicy,
    seed: u64,
) -> Result<CurveOutput> {
    match mode {
        CurveMode::Surface { n_list, m_list } => {
            generalisation_surface(env, arch, &n_list, &m_list, replicates, policy, seed).map(CurveOutput::Surface)
        }
        CurveMode::RepVsFull {
            representation,
            tasks,
            m_list,
        } => rep_vs_full_curves(env, representation, arch, &tasks, &m_list, replicates, policy, seed)
            .map(CurveOutput::RepVsFull),
    }
}

/// Searches for a representation with true MSE below `threshold` by training
/// on `(n, m)` samples with successive seeds. Returns the representation,
/// its true MSE and the attempt that produced it.
#[allow(clippy::too_many_arguments)]
pub fn find_perfect_representation(
    env: &Environment,
    arch: &Architecture,
    n: usize,
    m: usize,
    threshold: f64,
    attempts: usize,
    policy: &TrainPolicy,
    seed: u64,
) -> Result<Option<(Network, f64, usize)>> {
    for a in 0..attempts {
        let mut rng = rng::child(seed, &[a as u64]);
        let (mt, _, z) = train_representation(env, n, m, arch, policy, &mut rng)?;
        let (mse, _) = true_error(&mt, env, &z.task_ids)?;
        if mse < threshold {
            return Ok(Some((mt.trunk.clone(), mse, a)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{build_env, EnvKind};
    use crate::nnet::{loss_and_gradient, Layer, Loss};

    /// `g ∘ f` as one network (both must share an activation).
    fn compose(f: &Network, g: &Network) -> Network {
        let mut layers = f.layers().to_vec();
        layers.extend(g.layers().iter().cloned());
        Network::from_layers(layers, f.activation()).unwrap()
    }

    fn seeded(n: usize, m: usize, seed: u64) -> (Environment, MultiTaskNet, NMSample) {
        let env = build_env(EnvKind::Translation10).unwrap();
        let mut r = rng::stream(seed);
        let z = env.draw_nm_sample(n, m, &mut r).unwrap();
        let mt = MultiTaskNet::random(&Architecture::translation(), n, (-1.0, 1.0), &mut r).unwrap();
        (env, mt, z)
    }

    #[test]
    fn objective_is_mean_of_row_mses() {
        let (_, mt, z) = seeded(4, 7, 1);
        let (loss, _) = multitask_objective(&mt, &z).unwrap();
        let mut direct = 0.0;
        for (i, row) in z.rows.iter().enumerate() {
            let mse: f64 = row
                .iter()
                .map(|e| (mt.predict(i, &e.x).unwrap() - e.y).powi(2))
                .sum::<f64>()
                / row.len() as f64;
            direct += mse / z.n() as f64;
        }
        assert!((loss - direct).abs() < 1e-12);
    }

    #[test]
    fn trunk_gradient_is_average_of_per_task_gradients() {
        let (_, mt, z) = seeded(3, 6, 2);
        let (_, grad) = multitask_objective(&mt, &z).unwrap();
        let nt = mt.trunk().num_params();
        let mut avg = vec![0.0; nt];
        for (i, row) in z.rows.iter().enumerate() {
            let net = compose(mt.trunk(), &mt.heads()[i]);
            for e in row {
                let (_, g) = loss_and_gradient(&net, &e.x, e.y, Loss::Squared).unwrap();
                for k in 0..nt {
                    avg[k] += g[k] / (row.len() * z.n()) as f64;
                }
            }
        }
        for k in 0..nt {
            assert!((grad.trunk[k] - avg[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn head_gradient_is_scaled_ordinary_gradient() {
        let (_, mt, z) = seeded(3, 5, 3);
        let (_, grad) = multitask_objective(&mt, &z).unwrap();
        let nt = mt.trunk().num_params();
        for (i, row) in z.rows.iter().enumerate() {
            let net = compose(mt.trunk(), &mt.heads()[i]);
            let mut ord = vec![0.0; net.num_params() - nt];
            for e in row {
                let (_, g) = loss_and_gradient(&net, &e.x, e.y, Loss::Squared).unwrap();
                for (o, v) in ord.iter_mut().zip(&g[nt..]) {
                    *o += v / row.len() as f64;
                }
            }
            for (a, b) in grad.heads[i].iter().zip(&ord) {
                assert!((a - b / z.n() as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_task_reduces_to_ordinary_backprop() {
        let (_, mt, z) = seeded(1, 9, 4);
        let (loss, grad) = multitask_objective(&mt, &z).unwrap();
        let net = compose(mt.trunk(), &mt.heads()[0]);
        let mut l = 0.0;
        let mut g = vec![0.0; net.num_params()];
        for e in &z.rows[0] {
            let (li, gi) = loss_and_gradient(&net, &e.x, e.y, Loss::Squared).unwrap();
            l += li / 9.0;
            for (a, b) in g.iter_mut().zip(gi.iter()) {
                *a += b / 9.0;
            }
        }
        assert!((loss - l).abs() < 1e-12);
        for (a, b) in grad.flatten().iter().zip(&g) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (_, mt, z) = seeded(3, 4, 5);
        let (_, grad) = multitask_objective(&mt, &z).unwrap();
        let flat = grad.flatten();
        let p = mt.params();
        let h = 1e-5;
        for k in 0..p.len() {
            let mut q = p.clone();
            q[k] += h;
            let lp = multitask_objective(&mt.with_params(&q).unwrap(), &z).unwrap().0;
            q[k] -= 2.0 * h;
            let lm = multitask_objective(&mt.with_params(&q).unwrap(), &z).unwrap().0;
            let fd = (lp - lm) / (2.0 * h);
            let scale = flat[k].abs().max(fd.abs()).max(1e-4);
            assert!((flat[k] - fd).abs() / scale < 1e-5, "param {k}: {} vs {fd}", flat[k]);
        }
    }

    #[test]
    fn permuting_rows_with_heads_leaves_objective_unchanged() {
        let (_, mt, z) = seeded(4, 5, 6);
        let (loss, _) = multitask_objective(&mt, &z).unwrap();
        let perm = [2, 0, 3, 1];
        let heads: Vec<Network> = perm.iter().map(|&i| mt.heads()[i].clone()).collect();
        let mt2 = MultiTaskNet::new(mt.trunk().clone(), heads).unwrap();
        let z2 = NMSample::from_rows(
            perm.iter().map(|&i| z.task_ids[i]).collect(),
            perm.iter().map(|&i| z.rows[i].clone()).collect(),
        )
        .unwrap();
        let (loss2, _) = multitask_objective(&mt2, &z2).unwrap();
        assert!((loss - loss2).abs() < 1e-14);
    }

    #[test]
    fn row_count_must_match_heads() {
        let (_, mt, z) = seeded(3, 2, 7);
        assert!(multitask_objective(&mt, &z.first_rows(2)).is_err());
        let bad_head = Network::zeros(&[3, 1], Activation::Sigmoid).unwrap();
        assert!(MultiTaskNet::new(mt.trunk().clone(), vec![bad_head]).is_err());
    }

    /// Trunk = thermometer code of the object size; heads fit exactly.
    fn object_detector() -> Network {
        let mut w = Vec::new();
        let mut t = Vec::new();
        for k in 0..4 {
            w.extend(std::iter::repeat_n(20.0, 10));
            t.push(-20.0 * (k as f64 + 0.5));
        }
        let l = Layer::new(10, 4, w, t).unwrap();
        Network::from_layers(vec![l], Activation::Sigmoid).unwrap()
    }

    /// Identity trunk and heads, for an env whose inputs are the targets.
    fn perfect_mt(task_ids: &[usize]) -> MultiTaskNet {
        let trunk = Network::from_layers(vec![Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap()], Activation::Identity).unwrap();
        let heads = task_ids
            .iter()
            .map(|_| Network::from_layers(vec![Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap()], Activation::Identity).unwrap())
            .collect();
        MultiTaskNet::new(trunk, heads).unwrap()
    }

    #[test]
    fn true_error_of_exact_net_is_zero() {
        let env = Environment::custom(vec![vec![0.0], vec![1.0]], vec![1.0, 1.0], vec![vec![0.0, 1.0]]).unwrap();
        let mt = perfect_mt(&[0]);
        assert_eq!(true_error(&mt, &env, &[0]).unwrap(), (0.0, 0.0));
        assert!(matches!(true_error(&mt, &env, &[5]), Err(Error::UnknownTask(5))));
    }

    #[test]
    fn constant_half_output_has_quarter_mse() {
        let env = build_env(EnvKind::Translation10).unwrap();
        let trunk = Network::zeros(&[10, 2], Activation::Sigmoid).unwrap();
        let heads = vec![Network::zeros(&[2, 1], Activation::Sigmoid).unwrap(); 2];
        let mt = MultiTaskNet::new(trunk, heads).unwrap();
        let (mse, linf) = true_error(&mt, &env, &[0, 13]).unwrap();
        assert!((mse - 0.25).abs() < 1e-15);
        assert!((linf - 0.5).abs() < 1e-15);
    }

    #[test]
    fn true_error_matches_brute_force() {
        let (env, mt, z) = seeded(5, 8, 9);
        let (mse, linf) = true_error(&mt, &env, &z.task_ids).unwrap();
        let mut s = 0.0;
        let mut mx: f64 = 0.0;
        for (i, &t) in z.task_ids.iter().enumerate() {
            for k in 0..40 {
                let e = mt.predict(i, env.input(k)).unwrap() - env.tasks()[t][k];
                s += e * e;
                mx = mx.max(e.abs());
            }
        }
        assert!((mse - s / (40.0 * 5.0)).abs() < 1e-12);
        assert!((linf - mx).abs() < 1e-12);
    }

    #[test]
    fn identity_representation_on_realizable_task() {
        let env = Environment::custom(vec![vec![0.0], vec![1.0]], vec![1.0, 1.0], vec![vec![0.0, 1.0]]).unwrap();
        let f = Network::from_layers(vec![Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap()], Activation::Identity).unwrap();
        let loss = rep_true_loss(&f, &env, &[1, 1], 4, &TrainPolicy::default(), 3).unwrap();
        assert!(loss.mse < 1e-6, "{loss:?}");
    }

    #[test]
    fn object_detector_representation_is_good() {
        let env = build_env(EnvKind::Translation10).unwrap();
        let f = object_detector();
        let loss = rep_true_loss(&f, &env, &[4, 1], 4, &TrainPolicy::default(), 11).unwrap();
        assert!(loss.mse < 1e-3, "{loss:?}");
    }

    #[test]
    fn rep_true_loss_monotone_in_restarts() {
        let env = build_env(EnvKind::Translation10).unwrap();
        let mut r = rng::stream(12);
        let f = Network::random(&[10, 3, 2], Activation::Sigmoid, -1.0, 1.0, &mut r).unwrap();
        let policy = TrainPolicy {
            max_iterations: 200,
            ..TrainPolicy::default()
        };
        let mut prev = f64::INFINITY;
        for k in [1, 2, 4] {
            let l = rep_true_loss(&f, &env, &[2, 2, 1], k, &policy, 5).unwrap();
            assert!(l.mse <= prev);
            prev = l.mse;
        }
    }

    #[test]
    fn constant_task_is_learnt_quickly() {
        let env = Environment::custom(
            vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![1.0; 3],
            vec![vec![0.0; 3]],
        )
        .unwrap();
        let arch = Architecture {
            trunk: vec![2, 2],
            head: vec![2, 1],
            activation: Activation::Sigmoid,
        };
        let mut r = rng::stream(13);
        let (mt, trace, _) = train_representation(&env, 1, 5, &arch, &TrainPolicy::default(), &mut r).unwrap();
        assert!(trace.halt.by_criterion());
        assert!(trace.final_value < 1e-6 || trace.final_linf < 0.01);
        assert_eq!(mt.heads()[0].in_dim(), mt.trunk().out_dim());
    }

    #[test]
    fn trained_net_respects_architecture_and_improves() {
        let env = build_env(EnvKind::Translation10).unwrap();
        let mut r = rng::stream(14);
        let (mt, trace, z) = train_representation(&env, 3, 21, &Architecture::translation(), &TrainPolicy::default(), &mut r).unwrap();
        assert_eq!(mt.heads().len(), 3);
        assert_eq!(z.n(), 3);
        for run in trace.runs() {
            assert!(run.windows(2).all(|w| w[1] <= w[0]));
        }
        let (loss, _) = multitask_objective(&mt, &z).unwrap();
        assert!((loss - trace.final_value).abs() < 1e-12);
    }

    #[test]
    fn surface_grid_of_one_cell() {
        let env = build_env(EnvKind::Translation10).unwrap();
        let policy = TrainPolicy {
            max_restarts: 2,
            ..TrainPolicy::default()
        };
        let cells = generalisation_surface(&env, &Architecture::translation(), &[1], &[1], 2, &policy, 1).unwrap();
        assert_eq!(cells.len(), 2);
        assert!(cells.iter().all(|c| c.n == 1 && c.m == 1 && c.true_mse >= 0.0));
        let again = generalisation_surface(&env, &Architecture::translation(), &[1], &[1], 2, &policy, 1).unwrap();
        assert_eq!(cells, again);
    }
}
