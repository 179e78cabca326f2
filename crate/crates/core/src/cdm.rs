//! Canonical distortion measures and distortion-optimal quantization.
//!
//! An environment of functions `f` drawn from `Q` induces the distortion
//! `ρ(x, y) = E_Q σ(f(x), f(y))` on its input space. This module evaluates
//! `ρ` in closed form for a few environments, estimates it by sampling
//! functions or from trained heads, and quantizes a one-dimensional domain
//! under it.

use std::fmt;
use std::sync::Arc;

use rand::Rng as _;

use crate::envs::Environment;
use crate::replearn::MultiTaskNet;
use crate::rng::{self, Rng};
use crate::{par, Error, Result};

/// `σ(a, b) = |a - b|`.
pub fn abs_diff(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

/// `σ(a, b) = (a - b)²`.
pub fn squared_diff(a: f64, b: f64) -> f64 {
    (a - b) * (a - b)
}

/// Environments with a closed-form distortion (all with `σ = |·|`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedKind {
    /// `x ↦ a·x` on `[0, 1]`, `a ~ U[0, 1]`: `ρ = ½|x − y|`.
    Linear01,
    /// `x ↦ a·x²` on `[−1, 1]`, `a ~ U[−1, 1]`: `ρ = ½|x − y||x + y|`.
    Quadratic11,
    /// `x ↦ a·x³` on `[−1, 1]`, `a ~ U[−1, 1]`: `ρ = ½|x³ − y³|`.
    /// Experimental: only checked against sampling.
    Cubic11,
}

impl ClosedKind {
    pub fn domain(self) -> (f64, f64) {
        match self {
            ClosedKind::Linear01 => (0.0, 1.0),
            ClosedKind::Quadratic11 | ClosedKind::Cubic11 => (-1.0, 1.0),
        }
    }

    /// The matching function sampler.
    pub fn sampler(self) -> Polynomial {
        match self {
            ClosedKind::Linear01 => Polynomial::new(1, 0.0, 1.0),
            ClosedKind::Quadratic11 => Polynomial::new(2, -1.0, 1.0),
            ClosedKind::Cubic11 => Polynomial::new(3, -1.0, 1.0),
        }
    }
}

pub fn rho_closed(kind: ClosedKind, x: f64, y: f64) -> Result<f64> {
    let (lo, hi) = kind.domain();
    for v in [x, y] {
        if !(lo..=hi).contains(&v) {
            return Err(Error::InvalidInput(format!("{v} outside [{lo}, {hi}]")));
        }
    }
    Ok(match kind {
        ClosedKind::Linear01 => 0.5 * (x - y).abs(),
        ClosedKind::Quadratic11 => 0.5 * (x - y).abs() * (x + y).abs(),
        ClosedKind::Cubic11 => 0.5 * (x.powi(3) - y.powi(3)).abs(),
    })
}

/// A distribution over functions that can be sampled and evaluated.
pub trait FunctionSampler: Sync {
    type Input: ?Sized;
    type Function: Send;

    fn draw(&self, rng: &mut Rng) -> Self::Function;
    fn eval(&self, f: &Self::Function, x: &Self::Input) -> f64;
}

/// `x ↦ a·x^degree` with `a` uniform on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polynomial {
    pub degree: i32,
    pub lo: f64,
    pub hi: f64,
}

impl Polynomial {
    pub fn new(degree: i32, lo: f64, hi: f64) -> Self {
        Polynomial { degree, lo, hi }
    }
}

impl FunctionSampler for Polynomial {
    type Input = f64;
    type Function = f64;

    fn draw(&self, rng: &mut Rng) -> f64 {
        rng.gen_range(self.lo..=self.hi)
    }

    fn eval(&self, a: &f64, x: &f64) -> f64 {
        a * x.powi(self.degree)
    }
}

/// Uniform draws from an environment's task tables; inputs are indices.
#[derive(Debug, Clone, Copy)]
pub struct TaskSampler<'a> {
    pub env: &'a Environment,
}

impl FunctionSampler for TaskSampler<'_> {
    type Input = usize;
    type Function = usize;

    fn draw(&self, rng: &mut Rng) -> usize {
        self.env.sample_task(rng)
    }

    fn eval(&self, t: &usize, x: &usize) -> f64 {
        self.env.tasks()[*t][*x]
    }
}

/// Functions drawn per chunk; each chunk has its own seed so the estimate
/// does not depend on the thread count.
const MC_CHUNK: usize = 4096;

/// Monte-Carlo estimate `(1/M) Σ_k σ(f_k(x), f_k(y))`.
pub fn rho_mc<S, G>(sampler: &S, sigma: G, x: &S::Input, y: &S::Input, m: usize, seed: u64) -> Result<f64>
where
    S: FunctionSampler,
    S::Input: Sync,
    G: Fn(f64, f64) -> f64 + Sync,
{
    if m == 0 {
        return Err(Error::InvalidInput("need at least one sampled function".into()));
    }
    let chunks = m.div_ceil(MC_CHUNK);
    let partial = par::map_range(chunks, |c| {
        let mut r = rng::child(seed, &[c as u64]);
        let len = MC_CHUNK.min(m - c * MC_CHUNK);
        (0..len)
            .map(|_| {
                let f = sampler.draw(&mut r);
                sigma(sampler.eval(&f, x), sampler.eval(&f, y))
            })
            .sum::<f64>()
    });
    Ok(partial.iter().sum::<f64>() / m as f64)
}

/// Exact `ρ` of an environment with a uniform distribution over its task
/// tables, between input indices `a` and `b`.
pub fn rho_tables<G: Fn(f64, f64) -> f64>(env: &Environment, sigma: G, a: usize, b: usize) -> f64 {
    let tasks = env.tasks();
    tasks.iter().map(|t| sigma(t[a], t[b])).sum::<f64>() / tasks.len() as f64
}

/// Estimate of `ρ` from a trained multi-task network: the average of `σ`
/// over its heads.
pub fn rho_learner<G: Fn(f64, f64) -> f64>(mt: &MultiTaskNet, sigma: G, x: &[f64], y: &[f64]) -> Result<f64> {
    let fx = mt.trunk().forward(x)?;
    let fy = mt.trunk().forward(y)?;
    let mut s = 0.0;
    for h in mt.heads() {
        s += sigma(h.forward(&fx)?[0], h.forward(&fy)?[0]);
    }
    Ok(s / mt.heads().len() as f64)
}

/// Output-function families on a representation space with closed-form `ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GKind {
    /// Linear maps with coefficients uniform on `[−α, α]^d`, `σ = (·)²`.
    LinearCube { alpha: f64 },
    /// Thresholded linear maps with coefficients on the unit ball.
    ThresholdBall,
}

pub fn rho_g(kind: GKind, v: &[f64], w: &[f64]) -> Result<f64> {
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: w.len(),
        });
    }
    match kind {
        GKind::LinearCube { alpha } => {
            let d2: f64 = v.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok(alpha * alpha / 3.0 * d2)
        }
        GKind::ThresholdBall => {
            let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let nw = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            if nv == 0.0 || nw == 0.0 {
                return Err(Error::InvalidInput("angle with a zero vector is undefined".into()));
            }
            let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
            let cos = (dot / (nv * nw)).clamp(-1.0, 1.0);
            Ok(cos.acos() / std::f64::consts::PI)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistortionKind {
    ClosedLinear,
    ClosedQuadratic,
    ClosedCubic,
    McEstimate,
    LearnerEstimate,
    Table,
}

/// A distortion measure on a one-dimensional domain.
#[derive(Clone)]
pub struct Distortion {
    kind: DistortionKind,
    eval: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Distortion").field("kind", &self.kind).finish()
    }
}

impl Distortion {
    pub fn from_fn<F>(kind: DistortionKind, eval: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Distortion {
            kind,
            eval: Arc::new(eval),
        }
    }

    /// Closed form; points outside the domain evaluate to NaN.
    pub fn closed(kind: ClosedKind) -> Self {
        let k = match kind {
            ClosedKind::Linear01 => DistortionKind::ClosedLinear,
            ClosedKind::Quadratic11 => DistortionKind::ClosedQuadratic,
            ClosedKind::Cubic11 => DistortionKind::ClosedCubic,
        };
        Self::from_fn(k, move |x, y| rho_closed(kind, x, y).unwrap_or(f64::NAN))
    }

    /// Estimate from `m` functions drawn once and shared by every pair, so
    /// the result is symmetric and zero on the diagonal.
    pub fn sampled<S, G>(sampler: S, sigma: G, m: usize, seed: u64) -> Result<Self>
    where
        S: FunctionSampler<Input = f64> + Send + 'static,
        S::Function: Sync,
        G: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if m == 0 {
            return Err(Error::InvalidInput("need at least one sampled function".into()));
        }
        let fs = sampled_functions(&sampler, m, seed);
        Ok(Self::from_fn(DistortionKind::McEstimate, move |x, y| {
            fs.iter().map(|f| sigma(sampler.eval(f, &x), sampler.eval(f, &y))).sum::<f64>() / fs.len() as f64
        }))
    }

    /// Lookup into a symmetric matrix over a fixed grid; points off the grid
    /// evaluate to NaN.
    pub fn table(grid: Vec<f64>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        if matrix.len() != grid.len() || matrix.iter().any(|r| r.len() != grid.len()) {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: matrix.len(),
            });
        }
        let pos = move |v: f64| grid.iter().position(|&g| g == v);
        Ok(Self::from_fn(DistortionKind::Table, move |x, y| match (pos(x), pos(y)) {
            (Some(i), Some(j)) => matrix[i][j],
            _ => f64::NAN,
        }))
    }

    pub fn kind(&self) -> DistortionKind {
        self.kind
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.eval)(x, y)
    }
}

/// `m` functions from `sampler`, drawn in seeded chunks.
pub fn sampled_functions<S: FunctionSampler>(sampler: &S, m: usize, seed: u64) -> Vec<S::Function> {
    let chunks = m.div_ceil(MC_CHUNK);
    par::map_range(chunks, |c| {
        let mut r = rng::child(seed, &[c as u64]);
        let len = MC_CHUNK.min(m - c * MC_CHUNK);
        (0..len).map(|_| sampler.draw(&mut r)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Quantization points with the distortion that induces their partition.
#[derive(Debug, Clone)]
pub struct Quantization {
    pub points: Vec<f64>,
    pub distortion: Distortion,
}

impl Quantization {
    pub fn new(points: Vec<f64>, distortion: Distortion) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("need at least one quantization point".into()));
        }
        Ok(Quantization { points, distortion })
    }

    /// Induced partition of `xs`: the nearest point of each.
    pub fn partition(&self, xs: &[f64]) -> Vec<usize> {
        xs.iter().map(|&x| quantize(self, x).0).collect()
    }
}

/// Index of the nearest point under the distortion and the distortion to
/// it. Ties go to the lowest index.
pub fn quantize(q: &Quantization, x: f64) -> (usize, f64) {
    let mut best = (0, q.distortion.eval(x, q.points[0]));
    for (i, &p) in q.points.iter().enumerate().skip(1) {
        let d = q.distortion.eval(x, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn check_weights(xs: &[f64], weights: &[f64]) -> Result<f64> {
    if xs.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: weights.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    if xs.is_empty() || !(total > 0.0) {
        return Err(Error::InvalidInput("need inputs with positive total weight".into()));
    }
    Ok(total)
}

/// `E_ρ(points)`: weighted mean over `xs` of the distortion to the nearest
/// point.
pub fn reconstruction_error(points: &[f64], distortion: &Distortion, xs: &[f64], weights: &[f64]) -> Result<f64> {
    let total = check_weights(xs, weights)?;
    let q = Quantization::new(points.to_vec(), distortion.clone())?;
    Ok(xs
        .iter()
        .zip(weights)
        .map(|(&x, &w)| w * quantize(&q, x).1)
        .sum::<f64>()
        / total)
}

/// `E_F`: mean over `functions` of the weighted deviation between `f` and its
/// piecewise-constant approximation `f(points[partition[j]])` at `xs[j]`.
///
/// The partition must be faithful: an input equal to a point belongs to that
/// point's cell.
pub fn function_reconstruction_error<F, G>(
    points: &[f64],
    partition: &[usize],
    xs: &[f64],
    weights: &[f64],
    functions: &[F],
    sigma: G,
) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
    G: Fn(f64, f64) -> f64 + Sync,
{
    let total = check_weights(xs, weights)?;
    if points.is_empty() || functions.is_empty() {
        return Err(Error::InvalidInput("need points and functions".into()));
    }
    if partition.len() != xs.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: partition.len(),
        });
    }
    for (&x, &cell) in xs.iter().zip(partition) {
        if cell >= points.len() {
            return Err(Error::InvalidInput(format!("cell {cell} has no point")));
        }
        if let Some(i) = points.iter().position(|&p| p == x) {
            if points[cell] != x {
                return Err(Error::UnfaithfulPartition(i));
            }
        }
    }
    let per_f = par::map_slice(functions, |f| {
        xs.iter()
            .zip(weights)
            .zip(partition)
            .map(|((&x, &w), &c)| w * sigma(f(x), f(points[c])))
            .sum::<f64>()
    });
    Ok(per_f.iter().sum::<f64>() / (functions.len() as f64 * total))
}

/// `n` cell midpoints of `[lo, hi]`.
pub fn midpoint_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

/// Result of the quadratic-environment fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadQuantization {
    /// Increasing positive points.
    pub points: Vec<f64>,
    pub sweeps: usize,
    /// Largest relative point change in each sweep.
    pub changes: Vec<f64>,
}

impl QuadQuantization {
    /// First sweep (1-based) whose largest relative change is below `tol`.
    pub fn sweeps_to(&self, tol: f64) -> Option<usize> {
        self.changes.iter().position(|&c| c < tol).map(|i| i + 1)
    }
}

pub const QUAD_TOLERANCE: f64 = 1e-9;
pub const QUAD_MAX_SWEEPS: usize = 10_000;
const CYCLE_PERIOD: usize = 4;

/// Optimal `k`-point quantization of `[0, 1]` for the quadratic
/// environment, by updating points in index order with their stationarity
/// relations from `x_i = i/k` until no point moves more than 1e-9.
pub fn quad_optimal_quantization(k: usize) -> Result<QuadQuantization> {
    if k < 2 {
        return Err(Error::InvalidInput("need at least two points".into()));
    }
    let mut x: Vec<f64> = (1..=k).map(|i| i as f64 / k as f64).collect();
    let mut history: Vec<Vec<f64>> = Vec::new();
    let mut changes = Vec::new();
    let sqrt7 = 7f64.sqrt();
    for sweep in 1..=QUAD_MAX_SWEEPS {
        let prev = x.clone();
        x[0] = x[1] / sqrt7;
        for i in 1..k - 1 {
            let (a, b) = (x[i - 1] * x[i - 1], x[i + 1] * x[i + 1]);
            let s = 0.25 * (a + b) + (a * a + 6.0 * a * b + b * b).sqrt() / (4.0 * 2f64.sqrt());
            x[i] = s.sqrt();
        }
        x[k - 1] = (4.0 + (2.0 + 7.0 * x[k - 2] * x[k - 2]).sqrt()) / 7.0;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                value: f64::NAN,
                step: sweep as f64,
            });
        }
        let abs = x.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let rel = x.iter().zip(&prev).map(|(a, b)| ((a - b) / a).abs()).fold(0.0, f64::max);
        changes.push(rel);
        if abs < QUAD_TOLERANCE {
            return Ok(QuadQuantization {
                points: x,
                sweeps: sweep,
                changes,
            });
        }
        if let Some(p) = history.iter().rev().position(|h| *h == x) {
            return Err(Error::LimitCycle { period: p + 1, last: x });
        }
        history.push(x.clone());
        if history.len() > CYCLE_PERIOD {
            history.remove(0);
        }
    }
    Err(Error::NoConvergence {
        sweeps: QUAD_MAX_SWEEPS,
        last_change: *changes.last().unwrap(),
        last: x,
    })
}
