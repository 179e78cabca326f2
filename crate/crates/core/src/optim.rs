//! Conjugate-gradient training with exact line search.
//!
//! [`cg_minimize`] runs Polak–Ribière (PR+) conjugate gradients. Every step
//! is an exact line search: bracketing followed by golden-section reduction
//! to a relative bracket width of `1e-8`.
//!
//! Parameters whose magnitude reaches their cap are frozen exactly at the cap
//! and removed from the search subspace. A frozen parameter is released again
//! as soon as the downhill direction would shrink its magnitude. If the
//! relative improvement over the last `plateau_window` iterations falls below
//! `plateau_rel_improvement`, the run is declared stuck and all parameters are
//! redrawn uniformly from `init_range`.

use rand::Rng as _;

use crate::rng::Rng;
use crate::{Error, Result};

const GOLDEN: f64 = 1.618_033_988_749_895;
const INV_GOLDEN: f64 = 0.618_033_988_749_895;
const LINE_SEARCH_REL_WIDTH: f64 = 1e-8;
const MAX_BRACKET_EXPANSIONS: usize = 200;
const MAX_GOLDEN_ITERATIONS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainPolicy {
    /// Halt when the objective's halting value falls below this.
    pub mse_halt: f64,
    /// Halt when the maximum absolute training error falls below this.
    pub linf_halt: f64,
    pub plateau_window: usize,
    pub plateau_rel_improvement: f64,
    pub weight_clip: f64,
    pub threshold_clip: f64,
    pub max_restarts: usize,
    /// Iteration cap for a single run; reaching it counts as a plateau.
    pub max_iterations: usize,
    pub init_range: (f64, f64),
    pub master_seed: u64,
}

impl Default for TrainPolicy {
    fn default() -> Self {
        TrainPolicy {
            mse_halt: 1e-6,
            linf_halt: 0.01,
            plateau_window: 5,
            plateau_rel_improvement: 1e-4,
            weight_clip: 20.0,
            threshold_clip: 80.0,
            max_restarts: 50,
            max_iterations: 5000,
            init_range: (-1.0, 1.0),
            master_seed: 0,
        }
    }
}

impl TrainPolicy {
    /// Settings for metric-matching training: stop at `E/N < 1e-7` or a
    /// pairwise L∞ mismatch below `1e-3`, weights drawn from `[0, 0.1]`.
    pub fn metric_matching() -> Self {
        TrainPolicy {
            mse_halt: 1e-7,
            linf_halt: 1e-3,
            init_range: (0.0, 0.1),
            ..TrainPolicy::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mse_halt", self.mse_halt),
            ("linf_halt", self.linf_halt),
            ("plateau_rel_improvement", self.plateau_rel_improvement),
            ("weight_clip", self.weight_clip),
            ("threshold_clip", self.threshold_clip),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if self.plateau_window == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidInput(
                "plateau_window and max_iterations must be positive".into(),
            ));
        }
        if !(self.init_range.0 < self.init_range.1) {
            return Err(Error::InvalidInput(format!(
                "init_range must satisfy lo < hi, got {:?}",
                self.init_range
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HaltReason {
    Mse,
    Linf,
    RestartsExhausted,
}

impl HaltReason {
    pub fn name(self) -> &'static str {
        match self {
            HaltReason::Mse => "mse",
            HaltReason::Linf => "linf",
            HaltReason::RestartsExhausted => "restarts-exhausted",
        }
    }

    pub fn by_criterion(self) -> bool {
        !matches!(self, HaltReason::RestartsExhausted)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Objective value after every accepted iterate, all runs concatenated.
    pub objective: Vec<f64>,
    /// Index into `objective` where each run starts.
    pub run_starts: Vec<usize>,
    /// Indices of the parameters frozen at their cap, per entry of `objective`.
    pub clipped: Vec<Vec<usize>>,
    pub restarts: usize,
    pub halt: HaltReason,
    /// Objective value of the returned parameters.
    pub final_value: f64,
    /// Training L∞ error of the returned parameters (infinite if the
    /// objective does not report one).
    pub final_linf: f64,
}

impl TrainTrace {
    /// Objective values of each run between restarts.
    pub fn runs(&self) -> impl Iterator<Item = &[f64]> {
        let ends = self
            .run_starts
            .iter()
            .skip(1)
            .copied()
            .chain(std::iter::once(self.objective.len()));
        self.run_starts
            .iter()
            .zip(ends)
            .map(move |(&s, e)| &self.objective[s..e])
    }
}

/// Objective value plus the training L∞ error used by the halting rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub linf: f64,
}

/// A differentiable training objective.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, params: &[f64]) -> f64;

    /// Writes the gradient into `grad` (overwriting it) and returns the value.
    fn evaluate(&self, params: &[f64], grad: &mut [f64]) -> Evaluation;

    /// The quantity compared against [`TrainPolicy::mse_halt`].
    fn halt_value(&self, value: f64) -> f64 {
        value
    }

    /// Magnitude cap of every parameter.
    fn param_caps(&self, policy: &TrainPolicy) -> Vec<f64> {
        vec![policy.weight_clip; self.dim()]
    }
}

/// Minimises `phi` over `t ≥ 0` (see [`line_search_bounded`]).
pub fn line_search<F: FnMut(f64) -> f64>(phi: F, hint: f64) -> Result<f64> {
    line_search_bounded(phi, hint, f64::INFINITY)
}

/// Minimises `phi` over `0 ≤ t ≤ max_step`.
///
/// Starting from `hint`, the step is expanded by the golden ratio until the
/// minimum is bracketed, then the bracket is reduced by golden sections until
/// its width is below `1e-8` relative to the step. Returns `0` when no point
/// improves on `phi(0)`.
pub fn line_search_bounded<F: FnMut(f64) -> f64>(mut phi: F, hint: f64, max_step: f64) -> Result<f64> {
    let mut eval = |t: f64| -> Result<f64> {
        let v = phi(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { value: v, step: t })
        }
    };
    if !(max_step > 0.0) {
        return Ok(0.0);
    }
    let f0 = eval(0.0)?;
    let mut hint = if hint.is_finite() && hint > 0.0 { hint } else { 1.0 };
    hint = hint.min(max_step);

    // bracket (lo, mid, hi) with phi(mid) below both ends
    let (lo, mid, hi, fmid);
    let fh = eval(hint)?;
    if fh >= f0 {
        // minimum (if any) lies inside (0, hint)
        lo = 0.0;
        hi = hint;
        mid = hint * (1.0 - INV_GOLDEN);
        fmid = eval(mid)?;
    } else {
        let (mut a, mut b, mut fb) = (0.0, hint, fh);
        let mut found = None;
        for _ in 0..MAX_BRACKET_EXPANSIONS {
            if b >= max_step {
                break;
            }
            let c = (b + GOLDEN * (b - a)).min(max_step);
            let fc = eval(c)?;
            if fc > fb {
                found = Some((a, b, c, fb));
                break;
            }
            a = b;
            b = c;
            fb = fc;
        }
        match found {
            Some((a, b, c, fb)) => {
                lo = a;
                mid = b;
                hi = c;
                fmid = fb;
            }
            // still descending at the boundary (or expansion budget spent)
            None => return Ok(b),
        }
    }

    let (x, fx) = golden_section(&mut eval, lo, mid, hi, fmid)?;
    if fx < f0 {
        Ok(x)
    } else {
        Ok(0.0)
    }
}

fn golden_section<E: FnMut(f64) -> Result<f64>>(
    eval: &mut E,
    mut a: f64,
    b: f64,
    mut c: f64,
    fb: f64,
) -> Result<(f64, f64)> {
    let (mut x, mut fx) = (b, fb);
    // second interior point in the larger sub-interval
    for _ in 0..MAX_GOLDEN_ITERATIONS {
        let width = c - a;
        let scale = 0.5 * (a.abs() + c.abs());
        if width <= LINE_SEARCH_REL_WIDTH * scale || width <= f64::MIN_POSITIVE {
            break;
        }
        let u = if (c - x) > (x - a) {
            x + (1.0 - INV_GOLDEN) * (c - x)
        } else {
            x - (1.0 - INV_GOLDEN) * (x - a)
        };
        let fu = eval(u)?;
        if fu < fx {
            if u > x {
                a = x;
            } else {
                c = x;
            }
            x = u;
            fx = fu;
        } else if u > x {
            c = u;
        } else {
            a = u;
        }
    }
    Ok((x, fx))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Run<'a> {
    caps: &'a [f64],
    frozen: Vec<bool>,
}

impl Run<'_> {
    fn freeze_at_caps(&mut self, x: &mut [f64]) {
        for i in 0..x.len() {
            if x[i].abs() >= self.caps[i] {
                x[i] = self.caps[i].copysign(x[i]);
                self.frozen[i] = true;
            }
        }
    }

    fn frozen_indices(&self) -> Vec<usize> {
        self.frozen
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
            .collect()
    }

    /// Releases frozen parameters whose magnitude would shrink downhill.
    fn reintroduce(&mut self, x: &[f64], g: &[f64]) -> bool {
        let mut changed = false;
        for i in 0..x.len() {
            // downhill is -g; it shrinks |x| when x and g share a sign
            if self.frozen[i] && x[i] * g[i] > 0.0 {
                self.frozen[i] = false;
                changed = true;
            }
        }
        changed
    }

    /// Largest step along `d` before a free parameter reaches its cap, and
    /// the parameter that gets there first.
    fn max_step(&self, x: &[f64], d: &[f64]) -> (f64, Option<usize>) {
        let mut best = (f64::INFINITY, None);
        for i in 0..x.len() {
            if self.frozen[i] || d[i] == 0.0 {
                continue;
            }
            let bound = self.caps[i].copysign(d[i]);
            let t = ((bound - x[i]) / d[i]).max(0.0);
            if t < best.0 {
                best = (t, Some(i));
            }
        }
        best
    }
}

fn check_halt<O: Objective + ?Sized>(obj: &O, ev: Evaluation, policy: &TrainPolicy) -> Option<HaltReason> {
    if obj.halt_value(ev.value) < policy.mse_halt {
        Some(HaltReason::Mse)
    } else if ev.linf < policy.linf_halt {
        Some(HaltReason::Linf)
    } else {
        None
    }
}

/// Minimises `obj` from `initial` with restarts drawn from `rng`.
///
/// Returns the final parameters and the trace. When the restart budget is
/// exhausted the best parameters seen across all runs are returned.
pub fn cg_minimize<O: Objective + ?Sized>(
    obj: &O,
    initial: &[f64],
    policy: &TrainPolicy,
    rng: &mut Rng,
) -> Result<(Vec<f64>, TrainTrace)> {
    policy.validate()?;
    let n = obj.dim();
    if initial.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: initial.len(),
        });
    }
    let caps = obj.param_caps(policy);
    let mut trace = TrainTrace {
        objective: Vec::new(),
        run_starts: Vec::new(),
        clipped: Vec::new(),
        restarts: 0,
        halt: HaltReason::RestartsExhausted,
        final_value: f64::INFINITY,
        final_linf: f64::INFINITY,
    };
    let mut best: Option<(Vec<f64>, Evaluation)> = None;
    let mut x = initial.to_vec();
    let mut g = vec![0.0; n];
    let mut g_prev = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut trial = vec![0.0; n];

    loop {
        let mut run = Run {
            caps: &caps,
            frozen: vec![false; n],
        };
        run.freeze_at_caps(&mut x);
        let mut ev = obj.evaluate(&x, &mut g);
        if !ev.value.is_finite() {
            return Err(Error::NonFinite {
                value: ev.value,
                step: 0.0,
            });
        }
        trace.run_starts.push(trace.objective.len());
        let run_start = trace.objective.len();
        trace.objective.push(ev.value);
        trace.clipped.push(run.frozen_indices());
        if best.as_ref().is_none_or(|(_, b)| ev.value < b.value) {
            best = Some((x.clone(), ev));
        }
        if let Some(reason) = check_halt(obj, ev, policy) {
            trace.halt = reason;
            trace.final_value = ev.value;
            trace.final_linf = ev.linf;
            return Ok((x, trace));
        }

        let mut reset = true;
        let mut since_reset = 0usize;
        let mut last_step = 0.0;
        for _iter in 0..policy.max_iterations {
            if run.reintroduce(&x, &g) {
                reset = true;
            }
            // masked steepest descent or PR+ update
            let mut use_steepest = reset || since_reset >= n;
            if !use_steepest {
                let gg_prev = dot(&g_prev, &g_prev);
                let beta = if gg_prev > 0.0 {
                    let num: f64 = (0..n)
                        .filter(|&i| !run.frozen[i])
                        .map(|i| g[i] * (g[i] - g_prev[i]))
                        .sum();
                    num / gg_prev
                } else {
                    0.0
                };
                if beta <= 0.0 {
                    use_steepest = true;
                } else {
                    for i in 0..n {
                        d[i] = if run.frozen[i] { 0.0 } else { -g[i] + beta * d[i] };
                    }
                    if dot(&d, &g) >= 0.0 {
                        use_steepest = true;
                    }
                }
            }
            if use_steepest {
                for i in 0..n {
                    d[i] = if run.frozen[i] { 0.0 } else { -g[i] };
                }
                since_reset = 0;
            }
            reset = false;
            since_reset += 1;
            for i in 0..n {
                g_prev[i] = if run.frozen[i] { 0.0 } else { g[i] };
            }

            let dnorm = dot(&d, &d).sqrt();
            if dnorm == 0.0 {
                break;
            }
            let (t_max, hit) = run.max_step(&x, &d);
            let hint = if last_step > 0.0 { last_step } else { 1.0 / dnorm };
            let step = line_search_bounded(
                |t| {
                    for i in 0..n {
                        trial[i] = x[i] + t * d[i];
                    }
                    obj.value(&trial)
                },
                hint,
                t_max,
            )?;
            if step > 0.0 {
                for i in 0..n {
                    x[i] += step * d[i];
                }
                if step >= t_max {
                    if let Some(i) = hit {
                        x[i] = caps[i].copysign(d[i]);
                        run.frozen[i] = true;
                    }
                }
                for i in 0..n {
                    if !run.frozen[i] && x[i].abs() > caps[i] {
                        x[i] = caps[i].copysign(x[i]);
                        run.frozen[i] = true;
                    }
                }
                last_step = step;
            } else {
                // no progress along a conjugate direction: retry downhill
                if !use_steepest {
                    reset = true;
                }
                last_step = 0.0;
            }
            ev = obj.evaluate(&x, &mut g);
            if !ev.value.is_finite() {
                return Err(Error::NonFinite {
                    value: ev.value,
                    step,
                });
            }
            trace.objective.push(ev.value);
            trace.clipped.push(run.frozen_indices());
            if ev.value < best.as_ref().map_or(f64::INFINITY, |(_, b)| b.value) {
                best = Some((x.clone(), ev));
            }
            if let Some(reason) = check_halt(obj, ev, policy) {
                trace.halt = reason;
                trace.final_value = ev.value;
                trace.final_linf = ev.linf;
                return Ok((x, trace));
            }
            let k = trace.objective.len() - 1;
            if k - run_start >= policy.plateau_window {
                let old = trace.objective[k - policy.plateau_window];
                let rel = (old - ev.value) / old.abs();
                if !(rel >= policy.plateau_rel_improvement) {
                    break;
                }
            }
        }

        if trace.restarts >= policy.max_restarts {
            let (bx, bev) = best.expect("at least one evaluation");
            trace.halt = HaltReason::RestartsExhausted;
            trace.final_value = bev.value;
            trace.final_linf = bev.linf;
            return Ok((bx, trace));
        }
        trace.restarts += 1;
        let (lo, hi) = policy.init_range;
        for v in x.iter_mut() {
            *v = rng.gen_range(lo..hi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::{loss_and_gradient, Activation, Loss, Network};
    use crate::rng;

    #[test]
    fn quadratic_vertex() {
        let t = line_search(|t| (t - 3.0).powi(2), 1.0).unwrap();
        assert!((t - 3.0).abs() < 1e-6, "{t}");
        let t = line_search(|t| (t - 3.0).powi(2), 100.0).unwrap();
        assert!((t - 3.0).abs() < 1e-6, "{t}");
    }

    #[test]
    fn quartic_minimum() {
        let t = line_search(|t| t.powi(4) - t, 0.01).unwrap();
        let expect = 0.25f64.powf(1.0 / 3.0);
        assert!((t - expect).abs() < 1e-6, "{t} vs {expect}");
    }

    #[test]
    fn increasing_function_gives_zero_step() {
        assert_eq!(line_search(|t| t, 1.0).unwrap(), 0.0);
        assert_eq!(line_search(|t| t.exp(), 5.0).unwrap(), 0.0);
    }

    #[test]
    fn bounded_search_stops_at_boundary() {
        let t = line_search_bounded(|t| -t, 1.0, 7.5).unwrap();
        assert_eq!(t, 7.5);
    }

    #[test]
    fn non_finite_objective_aborts() {
        let r = line_search(|t| if t > 0.5 { f64::NAN } else { -t }, 1.0);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    struct Quadratic {
        diag: Vec<f64>,
        center: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.diag.len()
        }
        fn value(&self, p: &[f64]) -> f64 {
            p.iter()
                .zip(&self.diag)
                .zip(&self.center)
                .map(|((x, a), c)| 0.5 * a * (x - c).powi(2))
                .sum()
        }
        fn evaluate(&self, p: &[f64], g: &mut [f64]) -> Evaluation {
            for i in 0..p.len() {
                g[i] = self.diag[i] * (p[i] - self.center[i]);
            }
            Evaluation {
                value: self.value(p),
                linf: f64::INFINITY,
            }
        }
    }

    #[test]
    fn convex_quadratic_converges_without_restarts() {
        let q = Quadratic {
            diag: (1..=10).map(|i| i as f64).collect(),
            center: (0..10).map(|i| (i as f64 * 0.7).cos()).collect(),
        };
        let policy = TrainPolicy {
            mse_halt: 1e-24,
            ..TrainPolicy::default()
        };
        let mut r = rng::stream(1);
        let (x, trace) = cg_minimize(&q, &[0.0; 10], &policy, &mut r).unwrap();
        let mut g = vec![0.0; 10];
        q.evaluate(&x, &mut g);
        let gn = dot(&g, &g).sqrt();
        assert!(gn < 1e-8, "gradient norm {gn}");
        assert_eq!(trace.restarts, 0);
        assert_eq!(trace.halt, HaltReason::Mse);
        for run in trace.runs() {
            assert!(run.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    /// `exp(-x0) + x1²`: x0 wants to run off to infinity.
    struct Runaway;

    impl Objective for Runaway {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, p: &[f64]) -> f64 {
            (-p[0]).exp() + p[1] * p[1]
        }
        fn evaluate(&self, p: &[f64], g: &mut [f64]) -> Evaluation {
            g[0] = -(-p[0]).exp();
            g[1] = 2.0 * p[1];
            Evaluation {
                value: self.value(p),
                linf: f64::INFINITY,
            }
        }
    }

    #[test]
    fn drifting_parameter_is_frozen_at_cap() {
        let policy = TrainPolicy {
            mse_halt: 1e-300,
            max_restarts: 0,
            ..TrainPolicy::default()
        };
        let mut r = rng::stream(2);
        let (x, trace) = cg_minimize(&Runaway, &[0.0, 0.5], &policy, &mut r).unwrap();
        assert_eq!(x[0], 20.0);
        assert_eq!(trace.halt, HaltReason::RestartsExhausted);
        let first = trace.clipped.iter().position(|c| c.contains(&0)).unwrap();
        assert!(trace.clipped[first..].iter().all(|c| c.contains(&0)));
    }

    /// `(x - (30 - 20y))² + 4(y - 1)²`: x first heads past the cap of 20, then
    /// has to come back once y moves towards 1.
    struct Receding;

    impl Objective for Receding {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, p: &[f64]) -> f64 {
            (p[0] - 30.0 + 20.0 * p[1]).powi(2) + 4.0 * (p[1] - 1.0).powi(2)
        }
        fn evaluate(&self, p: &[f64], g: &mut [f64]) -> Evaluation {
            let r = p[0] - 30.0 + 20.0 * p[1];
            g[0] = 2.0 * r;
            g[1] = 40.0 * r + 8.0 * (p[1] - 1.0);
            Evaluation {
                value: self.value(p),
                linf: f64::INFINITY,
            }
        }
    }

    #[test]
    fn clipped_weight_is_reintroduced() {
        let policy = TrainPolicy {
            mse_halt: 1e-16,
            max_restarts: 0,
            ..TrainPolicy::default()
        };
        let mut r = rng::stream(3);
        let (x, trace) = cg_minimize(&Receding, &[25.0, 0.0], &policy, &mut r).unwrap();
        assert!(trace.clipped[0].contains(&0));
        assert!(trace.clipped.last().unwrap().is_empty());
        assert_eq!(trace.halt, HaltReason::Mse);
        assert!((x[0] - 10.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6, "{x:?}");
    }

    struct Xor {
        net: Network,
    }

    const XOR: [([f64; 2], f64); 4] = [
        ([0.0, 0.0], 0.0),
        ([0.0, 1.0], 1.0),
        ([1.0, 0.0], 1.0),
        ([1.0, 1.0], 0.0),
    ];

    impl Objective for Xor {
        fn dim(&self) -> usize {
            self.net.num_params()
        }
        fn value(&self, p: &[f64]) -> f64 {
            let net = self.net.with_params(p).unwrap();
            XOR.iter()
                .map(|(x, y)| (net.forward(x).unwrap()[0] - y).powi(2))
                .sum::<f64>()
                / 4.0
        }
        fn evaluate(&self, p: &[f64], g: &mut [f64]) -> Evaluation {
            let net = self.net.with_params(p).unwrap();
            g.iter_mut().for_each(|v| *v = 0.0);
            let mut value = 0.0;
            let mut linf: f64 = 0.0;
            for (x, y) in XOR {
                let (l, gr) = loss_and_gradient(&net, &x, y, Loss::Squared).unwrap();
                value += l / 4.0;
                linf = linf.max(l.sqrt());
                for (a, b) in g.iter_mut().zip(gr.iter()) {
                    *a += b / 4.0;
                }
            }
            Evaluation { value, linf }
        }
        fn param_caps(&self, policy: &TrainPolicy) -> Vec<f64> {
            self.net.param_caps(policy.weight_clip, policy.threshold_clip)
        }
    }

    #[test]
    fn xor_fit_reaches_halting_criterion() {
        let mut r = rng::stream(2024);
        let net = Network::random(&[2, 2, 1], Activation::Sigmoid, -1.0, 1.0, &mut r).unwrap();
        let obj = Xor { net: net.clone() };
        let policy = TrainPolicy::default();
        let (p, trace) = cg_minimize(&obj, &net.params(), &policy, &mut r).unwrap();
        assert!(trace.halt.by_criterion(), "{:?}", trace.halt);
        assert!(trace.restarts <= 10, "restarts {}", trace.restarts);
        assert!(obj.value(&p) < 1e-6 || trace.final_linf < 0.01);
        for run in trace.runs() {
            assert!(run.windows(2).all(|w| w[1] <= w[0]));
        }
        // same seed, same trace
        let mut r2 = rng::stream(2024);
        let net2 = Network::random(&[2, 2, 1], Activation::Sigmoid, -1.0, 1.0, &mut r2).unwrap();
        let (p2, trace2) = cg_minimize(&Xor { net: net2.clone() }, &net2.params(), &policy, &mut r2).unwrap();
        assert_eq!(p, p2);
        assert_eq!(trace, trace2);
    }

    #[test]
    fn policy_validation() {
        assert!(TrainPolicy::default().validate().is_ok());
        let bad = TrainPolicy {
            init_range: (1.0, 1.0),
            ..TrainPolicy::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainPolicy {
            mse_halt: 0.0,
            ..TrainPolicy::default()
        };
        assert!(bad.validate().is_err());
    }
}
