//! Enumerable toy environments and `(n, m)` samples.
//!
//! Every environment lists its admissible inputs, their probabilities and the
//! full truth table of every task, so true errors can be computed exactly.
//!
//! Targets are stored in `{0, 1}` for the retina environments (they are fitted
//! with sigmoid outputs) and in `{-1, +1}` for the binary environment, which
//! is consumed directly by [`crate::binexp`].

use std::collections::HashMap;

use rand::seq::index;
use rand::Rng as _;

use crate::nnet::{unpack_pm1, BinaryNetwork, BINARY_FAMILY_SIZE, BINARY_INPUTS};
use crate::rng::{self, Rng};
use crate::{Error, Result};

pub const RETINA_PIXELS: usize = 10;
pub const RETINA_OBJECTS: usize = 4;
/// Number of Boolean functions on the 8 codes of `{±1}^3`.
pub const OUTPUT_FUNCTIONS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvKind {
    /// 10-pixel circular retina showing runs of 1–4 adjacent pixels; tasks
    /// are the 14 non-constant translation-invariant Boolean functions.
    Translation10,
    /// Inputs with 1–4 active pixels out of 10; tasks are the 14 non-constant
    /// functions of the pixel count.
    Symmetric10,
    /// `{±1}^5` inputs; tasks are `g ∘ f*` for every Boolean `g` on `{±1}^3`
    /// and a binary network `f*` drawn from `seed`.
    Binary5x3 { seed: u64 },
    /// `pixels`-pixel circular retina with `objects` runs of 1..=`objects`
    /// adjacent pixels; one classifier task per object.
    Classifier { pixels: usize, objects: usize },
    /// Built from explicit tables.
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    kind: EnvKind,
    inputs: Vec<Vec<f64>>,
    input_weights: Vec<f64>,
    tasks: Vec<Vec<f64>>,
    /// Object / class of each input where the environment has one.
    classes: Option<Vec<usize>>,
    generator: Option<BinaryNetwork>,
    index_of: HashMap<u64, usize>,
}

fn run_bits(start: usize, len: usize, pixels: usize) -> u64 {
    (0..len).fold(0u64, |b, k| b | 1 << ((start + k) % pixels))
}

fn bits_to_vec(bits: u64, pixels: usize) -> Vec<f64> {
    (0..pixels).map(|p| (bits >> p & 1) as f64).collect()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

impl Environment {
    pub fn build(kind: EnvKind) -> Result<Self> {
        match kind {
            EnvKind::Translation10 => Ok(Self::translation10()),
            EnvKind::Symmetric10 => Ok(Self::symmetric10()),
            EnvKind::Binary5x3 { seed } => Ok(Self::binary5x3(seed)),
            EnvKind::Classifier { pixels, objects } => Self::classifier(pixels, objects),
            EnvKind::Custom => Err(Error::InvalidInput(
                "custom environments are built with Environment::custom".into(),
            )),
        }
    }

    fn with_bits(
        kind: EnvKind,
        bits: Vec<u64>,
        pixels: usize,
        input_weights: Vec<f64>,
        tasks: Vec<Vec<f64>>,
        classes: Option<Vec<usize>>,
    ) -> Self {
        let index_of = bits.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        Environment {
            kind,
            inputs: bits.iter().map(|&b| bits_to_vec(b, pixels)).collect(),
            input_weights,
            tasks,
            classes,
            generator: None,
            index_of,
        }
    }

    fn retina(pixels: usize, objects: usize) -> (Vec<u64>, Vec<usize>) {
        let mut bits = Vec::with_capacity(pixels * objects);
        let mut classes = Vec::with_capacity(pixels * objects);
        for o in 0..objects {
            for p in 0..pixels {
                bits.push(run_bits(p, o + 1, pixels));
                classes.push(o);
            }
        }
        (bits, classes)
    }

    /// Truth tables of every non-constant Boolean function of the class.
    fn class_functions(classes: &[usize], n_classes: usize) -> Vec<Vec<f64>> {
        (1..(1usize << n_classes) - 1)
            .map(|mask| classes.iter().map(|&c| (mask >> c & 1) as f64).collect())
            .collect()
    }

    fn translation10() -> Self {
        let kind = EnvKind::Translation10;
        let (bits, classes) = Self::retina(RETINA_PIXELS, RETINA_OBJECTS);
        let n = bits.len();
        let tasks = Self::class_functions(&classes, RETINA_OBJECTS);
        Self::with_bits(kind, bits, RETINA_PIXELS, vec![1.0 / n as f64; n], tasks, Some(classes))
    }

    fn symmetric10() -> Self {
        let mut bits = Vec::new();
        let mut classes = Vec::new();
        let mut weights = Vec::new();
        for b in 0u64..(1 << RETINA_PIXELS) {
            let k = b.count_ones() as usize;
            if (1..=4).contains(&k) {
                bits.push(b);
                classes.push(k - 1);
                // count drawn uniformly from 1..=4, then positions uniformly
                weights.push(1.0 / (4.0 * binomial(RETINA_PIXELS, k) as f64));
            }
        }
        let tasks = Self::class_functions(&classes, 4);
        Self::with_bits(
            EnvKind::Symmetric10,
            bits,
            RETINA_PIXELS,
            weights,
            tasks,
            Some(classes),
        )
    }

    fn binary5x3(seed: u64) -> Self {
        let mut r = rng::stream(seed);
        let generator = BinaryNetwork::from_index(r.gen_range(0..BINARY_FAMILY_SIZE))
            .expect("index in range");
        let codes = generator.code_table();
        let n_inputs = 1 << BINARY_INPUTS;
        let tasks = (0..OUTPUT_FUNCTIONS)
            .map(|g| {
                codes
                    .iter()
                    .map(|&c| if g >> c & 1 == 1 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        let bits: Vec<u64> = (0..n_inputs as u64).collect();
        let index_of = bits.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        Environment {
            kind: EnvKind::Binary5x3 { seed },
            inputs: (0..n_inputs).map(unpack_pm1).collect(),
            input_weights: vec![1.0 / n_inputs as f64; n_inputs],
            tasks,
            classes: None,
            generator: Some(generator),
            index_of,
        }
    }

    fn classifier(pixels: usize, objects: usize) -> Result<Self> {
        if objects == 0 || objects >= pixels || pixels > 64 {
            return Err(Error::InvalidInput(format!(
                "classifier needs 0 < objects < pixels <= 64, got {objects} objects on {pixels} pixels"
            )));
        }
        let kind = EnvKind::Classifier { pixels, objects };
        let (bits, classes) = Self::retina(pixels, objects);
        let n = bits.len();
        let tasks = (0..objects)
            .map(|o| classes.iter().map(|&c| (c == o) as u8 as f64).collect())
            .collect();
        Ok(Self::with_bits(kind, bits, pixels, vec![1.0 / n as f64; n], tasks, Some(classes)))
    }

    /// Environment from explicit inputs, input probabilities and task tables.
    pub fn custom(inputs: Vec<Vec<f64>>, input_weights: Vec<f64>, tasks: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.is_empty() || tasks.is_empty() {
            return Err(Error::InvalidInput("need at least one input and one task".into()));
        }
        if input_weights.len() != inputs.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: input_weights.len(),
            });
        }
        if let Some(t) = tasks.iter().find(|t| t.len() != inputs.len()) {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: t.len(),
            });
        }
        let total: f64 = input_weights.iter().sum();
        if !(total > 0.0) || input_weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidInput("input weights must be nonnegative with positive sum".into()));
        }
        Ok(Environment {
            kind: EnvKind::Custom,
            input_weights: input_weights.iter().map(|w| w / total).collect(),
            index_of: HashMap::new(),
            inputs,
            tasks,
            classes: None,
            generator: None,
        })
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i]
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.input_weights
    }

    pub fn tasks(&self) -> &[Vec<f64>] {
        &self.tasks
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn task(&self, id: usize) -> Result<&[f64]> {
        self.tasks.get(id).map(Vec::as_slice).ok_or(Error::UnknownTask(id))
    }

    pub fn classes(&self) -> Option<&[usize]> {
        self.classes.as_deref()
    }

    /// The generating representation `f*` of a binary environment.
    pub fn generator(&self) -> Option<BinaryNetwork> {
        self.generator
    }

    /// Index of a pixel pattern (bit `p` set means pixel `p` is on; for the
    /// binary environment bit `c` set means `x_c = +1`).
    pub fn index_of_bits(&self, bits: u64) -> Option<usize> {
        self.index_of.get(&bits).copied()
    }

    /// Draws one input index from the environment's input distribution.
    pub fn sample_input(&self, rng: &mut Rng) -> usize {
        match self.kind {
            EnvKind::Symmetric10 => {
                let k = rng.gen_range(1..=4);
                let bits = index::sample(rng, RETINA_PIXELS, k)
                    .into_iter()
                    .fold(0u64, |b, p| b | 1 << p);
                self.index_of[&bits]
            }
            EnvKind::Custom => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (i, w) in self.input_weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return i;
                    }
                }
                self.inputs.len() - 1
            }
            // uniform over the listed inputs (object and position uniform)
            _ => rng.gen_range(0..self.inputs.len()),
        }
    }

    pub fn sample_task(&self, rng: &mut Rng) -> usize {
        rng.gen_range(0..self.tasks.len())
    }

    /// Draws an `(n, m)` sample: `n` tasks uniformly with replacement, then
    /// `m` inputs per task from the input distribution.
    pub fn draw_nm_sample(&self, n: usize, m: usize, rng: &mut Rng) -> Result<NMSample> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput(format!("n and m must be at least 1, got ({n}, {m})")));
        }
        let task_ids: Vec<usize> = (0..n).map(|_| self.sample_task(rng)).collect();
        let rows = task_ids
            .iter()
            .map(|&t| self.draw_row(t, m, rng))
            .collect();
        Ok(NMSample { task_ids, rows })
    }

    /// `m` labelled examples of task `task`.
    pub fn draw_row(&self, task: usize, m: usize, rng: &mut Rng) -> Vec<Entry> {
        (0..m)
            .map(|_| {
                let i = self.sample_input(rng);
                self.entry(task, i)
            })
            .collect()
    }

    pub fn entry(&self, task: usize, input: usize) -> Entry {
        Entry {
            input,
            x: self.inputs[input].clone(),
            y: self.tasks[task][input],
        }
    }
}

/// Convenience wrapper for [`Environment::build`].
pub fn build_env(kind: EnvKind) -> Result<Environment> {
    Environment::build(kind)
}

/// Convenience wrapper for [`Environment::draw_nm_sample`].
pub fn draw_nm_sample(env: &Environment, n: usize, m: usize, rng: &mut Rng) -> Result<NMSample> {
    env.draw_nm_sample(n, m, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    /// Index into the environment's input list.
    pub input: usize,
    pub x: Vec<f64>,
    pub y: f64,
}

/// An `n × m` matrix of labelled examples, one row per sampled task.
#[derive(Debug, Clone, PartialEq)]
pub struct NMSample {
    pub task_ids: Vec<usize>,
    pub rows: Vec<Vec<Entry>>,
}

impl NMSample {
    pub fn from_rows(task_ids: Vec<usize>, rows: Vec<Vec<Entry>>) -> Result<Self> {
        if task_ids.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: task_ids.len(),
            });
        }
        if let Some(first) = rows.first() {
            if let Some(r) = rows.iter().find(|r| r.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: r.len(),
                });
            }
        }
        Ok(NMSample { task_ids, rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn m(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// The first `m` columns.
    pub fn prefix(&self, m: usize) -> NMSample {
        NMSample {
            task_ids: self.task_ids.clone(),
            rows: self.rows.iter().map(|r| r[..m.min(r.len())].to_vec()).collect(),
        }
    }

    /// The first `n` rows.
    pub fn first_rows(&self, n: usize) -> NMSample {
        NMSample {
            task_ids: self.task_ids[..n].to_vec(),
            rows: self.rows[..n].to_vec(),
        }
    }
}
