//! Representation learning over the 5×3 binary network family by exhaustive
//! search.
//!
//! For a fixed representation `f` the best output function `g` labels each of
//! the 8 output codes by majority vote, so the empirical representation loss
//! is a count: for every row and code cell, the minority label count. Losses
//! are kept as integer counts and divided once.
//!
//! Targets are ±1 here; the binary environment stores them that way, so no
//! conversion happens in this module.

use rand::seq::index;

use crate::envs::{Entry, Environment, NMSample};
use crate::nnet::{pack_pm1, BinaryNetwork, BINARY_FAMILY_SIZE, BINARY_INPUTS, BINARY_OUTPUTS};
use crate::rng::{self, Rng};
use crate::{par, Error, Result};

const CODES: usize = 1 << BINARY_OUTPUTS;
const INPUTS: usize = 1 << BINARY_INPUTS;

/// Output function `g: {±1}^3 → {±1}` as a label per output code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OutputTable([i8; CODES]);

impl OutputTable {
    pub fn new(labels: [i8; CODES]) -> Result<Self> {
        if let Some(&l) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::InvalidInput(format!("label {l} is not ±1")));
        }
        Ok(OutputTable(labels))
    }

    /// Bit `c` of `mask` set means code `c` is labelled `+1`.
    pub fn from_mask(mask: u8) -> Self {
        let mut l = [-1i8; CODES];
        for (c, v) in l.iter_mut().enumerate() {
            if mask >> c & 1 == 1 {
                *v = 1;
            }
        }
        OutputTable(l)
    }

    pub fn mask(&self) -> u8 {
        self.0
            .iter()
            .enumerate()
            .fold(0u8, |m, (c, &l)| if l == 1 { m | 1 << c } else { m })
    }

    pub fn label(&self, code: u8) -> i8 {
        self.0[code as usize]
    }

    pub fn labels(&self) -> [i8; CODES] {
        self.0
    }

    pub fn inverted(&self) -> Self {
        OutputTable(self.0.map(|l| -l))
    }

    /// `g(f(x))` for packed input bits.
    pub fn predict(&self, f: &BinaryNetwork, input_bits: usize) -> i8 {
        self.label(f.code_of_bits(input_bits))
    }
}

/// Positive and negative label counts per packed input for one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RowCounts {
    plus: [u32; INPUTS],
    minus: [u32; INPUTS],
}

impl RowCounts {
    fn new(row: &[Entry]) -> Result<Self> {
        let mut c = RowCounts {
            plus: [0; INPUTS],
            minus: [0; INPUTS],
        };
        for e in row {
            let bits = pack_pm1(&e.x)?;
            if e.y == 1.0 {
                c.plus[bits] += 1;
            } else if e.y == -1.0 {
                c.minus[bits] += 1;
            } else {
                return Err(Error::InvalidInput(format!("target {} is not ±1", e.y)));
            }
        }
        Ok(c)
    }

    fn cells(&self, codes: &[u8; INPUTS]) -> ([u32; CODES], [u32; CODES]) {
        let mut plus = [0u32; CODES];
        let mut minus = [0u32; CODES];
        for (b, &code) in codes.iter().enumerate() {
            plus[code as usize] += self.plus[b];
            minus[code as usize] += self.minus[b];
        }
        (plus, minus)
    }

    fn loss_count(&self, codes: &[u8; INPUTS]) -> u64 {
        let (p, m) = self.cells(codes);
        p.iter().zip(&m).map(|(&a, &b)| a.min(b) as u64).sum()
    }
}

fn compile(z: &NMSample) -> Result<Vec<RowCounts>> {
    z.rows.iter().map(|r| RowCounts::new(r)).collect()
}

/// Number of misclassified examples when `f` uses its best output table on
/// every row: `Σ_i Σ_a min(plus(S_a^i), minus(S_a^i))`.
pub fn rep_empirical_loss_count(f: &BinaryNetwork, z: &NMSample) -> Result<u64> {
    let codes = f.code_table();
    Ok(compile(z)?.iter().map(|r| r.loss_count(&codes)).sum())
}

/// Empirical representation loss of `f` on `z`, in `[0, 1]`. An empty sample
/// has loss 0.
pub fn rep_empirical_loss(f: &BinaryNetwork, z: &NMSample) -> Result<f64> {
    let count = rep_empirical_loss_count(f, z)?;
    let total = z.n() * z.m();
    Ok(if total == 0 { 0.0 } else { count as f64 / total as f64 })
}

/// Majority label per code cell; empty and tied cells get `+1`.
pub fn best_output_table(f: &BinaryNetwork, row: &[Entry]) -> Result<OutputTable> {
    let (p, m) = RowCounts::new(row)?.cells(&f.code_table());
    let mut l = [1i8; CODES];
    for c in 0..CODES {
        if m[c] > p[c] {
            l[c] = -1;
        }
    }
    Ok(OutputTable(l))
}

/// Examples of `row` that `g ∘ f` gets wrong.
pub fn table_errors(f: &BinaryNetwork, table: &OutputTable, row: &[Entry]) -> Result<u64> {
    let mut n = 0;
    for e in row {
        if f64::from(table.predict(f, pack_pm1(&e.x)?)) != e.y {
            n += 1;
        }
    }
    Ok(n)
}

/// Every binary network with zero empirical representation loss on `z`, in
/// increasing index order.
pub fn zero_loss_search(z: &NMSample) -> Result<Vec<BinaryNetwork>> {
    let rows = compile(z)?;
    let hits = par::map_range(BINARY_FAMILY_SIZE, |i| {
        let f = BinaryNetwork::from_index(i).expect("index in range");
        let codes = f.code_table();
        rows.iter().all(|r| r.loss_count(&codes) == 0).then_some(f)
    });
    Ok(hits.into_iter().flatten().collect())
}

/// Disagreements between `table ∘ f` and a ±1 task table over all 32
/// inputs (task entry `b` is the value at packed input `b`).
pub fn binary_true_error(f: &BinaryNetwork, table: &OutputTable, task: &[f64]) -> Result<u32> {
    if task.len() != INPUTS {
        return Err(Error::DimensionMismatch {
            expected: INPUTS,
            got: task.len(),
        });
    }
    Ok(task
        .iter()
        .enumerate()
        .filter(|&(b, &y)| f64::from(table.predict(f, b)) != y)
        .count() as u32)
}

/// Expected true error (out of 32) of a uniformly chosen zero-loss network
/// from the full family `G ∘ F` on one training row.
///
/// For each `f` consistent with the row, cells seen in the row are forced
/// and the `u` unseen cells are free, giving `2^u` zero-loss networks; over
/// those, an input in a free cell is wrong exactly half the time. Networks
/// are weighted accordingly. Returns `None` if nothing fits the row.
pub fn ordinary_expected_error(row: &[Entry], task: &[f64]) -> Result<Option<f64>> {
    if task.len() != INPUTS {
        return Err(Error::DimensionMismatch {
            expected: INPUTS,
            got: task.len(),
        });
    }
    let counts = RowCounts::new(row)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..BINARY_FAMILY_SIZE {
        let f = BinaryNetwork::from_index(i).expect("index in range");
        let codes = f.code_table();
        let (p, m) = counts.cells(&codes);
        if (0..CODES).any(|c| p[c] > 0 && m[c] > 0) {
            continue;
        }
        let free = (0..CODES).filter(|&c| p[c] == 0 && m[c] == 0).count();
        let mut err = 0.0;
        for (b, &code) in codes.iter().enumerate() {
            let c = code as usize;
            if p[c] == 0 && m[c] == 0 {
                err += 0.5;
            } else {
                let label = if p[c] > 0 { 1.0 } else { -1.0 };
                if label != task[b] {
                    err += 1.0;
                }
            }
        }
        let w = (free as f64).exp2();
        num += w * err;
        den += w;
    }
    Ok((den > 0.0).then(|| num / den))
}

/// Settings for the binary generalisation-curve experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryExperiment {
    /// Seed of the environment's generating representation.
    pub env_seed: u64,
    pub n_list: Vec<usize>,
    pub m_list: Vec<usize>,
    /// Training sizes for the new tasks.
    pub m1_list: Vec<usize>,
    pub new_tasks: usize,
    pub replicates: usize,
    /// Largest number of zero-loss networks evaluated per sample; larger sets
    /// are subsampled uniformly.
    pub cap: usize,
    pub seed: u64,
}

impl Default for BinaryExperiment {
    fn default() -> Self {
        BinaryExperiment {
            env_seed: 0,
            n_list: (1..=9).collect(),
            m_list: vec![2, 6, 10, 14, 18, 22],
            m1_list: vec![2, 6, 10, 14, 18, 22],
            new_tasks: 10,
            replicates: 10,
            cap: 512,
            seed: 0,
        }
    }
}

/// Result of one `(n, m, replicate, m1)` cell. Errors are fractions of the
/// 32 inputs, averaged over the new tasks (and for `rep_error` over the
/// evaluated zero-loss networks).
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryRecord {
    pub n: usize,
    pub m: usize,
    pub replicate: usize,
    pub m1: usize,
    pub zero_loss_count: usize,
    pub evaluated: usize,
    pub rep_error: f64,
    pub exact_error: f64,
    pub ord_error: f64,
}

/// The new tasks and their training rows for one replicate.
struct NewTasks {
    tasks: Vec<usize>,
    /// `rows[task][m1 index]`
    rows: Vec<Vec<Vec<Entry>>>,
}

fn new_tasks(env: &Environment, cfg: &BinaryExperiment, rng: &mut Rng) -> NewTasks {
    let tasks: Vec<usize> = (0..cfg.new_tasks).map(|_| env.sample_task(rng)).collect();
    let rows = tasks
        .iter()
        .map(|&t| cfg.m1_list.iter().map(|&m1| env.draw_row(t, m1, rng)).collect())
        .collect();
    NewTasks { tasks, rows }
}

/// Mean error fraction of `reps`, each with its best table per training row.
fn rep_curve(env: &Environment, reps: &[BinaryNetwork], nt: &NewTasks, k: usize) -> Result<f64> {
    let mut total = 0u64;
    for f in reps {
        for (ti, &t) in nt.tasks.iter().enumerate() {
            let table = best_output_table(f, &nt.rows[ti][k])?;
            total += binary_true_error(f, &table, env.task(t)?)? as u64;
        }
    }
    Ok(total as f64 / (reps.len() * nt.tasks.len() * INPUTS) as f64)
}

fn validate(cfg: &BinaryExperiment) -> Result<()> {
    if cfg.n_list.is_empty() || cfg.m_list.is_empty() || cfg.m1_list.is_empty() {
        return Err(Error::InvalidInput("grids must be nonempty".into()));
    }
    if cfg.n_list.contains(&0) || cfg.m_list.contains(&0) {
        return Err(Error::InvalidInput("n and m must be positive".into()));
    }
    if cfg.new_tasks == 0 || cfg.replicates == 0 || cfg.cap == 0 {
        return Err(Error::InvalidInput("new_tasks, replicates and cap must be positive".into()));
    }
    Ok(())
}

/// Runs the experiment. Each replicate draws one sample of the largest
/// `(n, m)` and uses its leading rows and columns for smaller cells, so
/// cells of a replicate are nested and comparisons across `n` are paired.
/// New tasks and their training rows depend on the replicate only.
///
/// Records are ordered by replicate, `n`, `m`, then `m1`.
pub fn run_binary_experiment(cfg: &BinaryExperiment) -> Result<Vec<BinaryRecord>> {
    validate(cfg)?;
    let env = Environment::build(crate::envs::EnvKind::Binary5x3 { seed: cfg.env_seed })?;
    let fstar = env.generator().expect("binary environment has a generator");
    let n_max = *cfg.n_list.iter().max().unwrap();
    let m_max = *cfg.m_list.iter().max().unwrap();

    let per_rep = par::map_range(cfg.replicates, |r| -> Result<_> {
        let z = env.draw_nm_sample(n_max, m_max, &mut rng::child(cfg.seed, &[r as u64, 0]))?;
        let nt = new_tasks(&env, cfg, &mut rng::child(cfg.seed, &[r as u64, 1]));
        let mut exact = Vec::with_capacity(cfg.m1_list.len());
        let mut ord = Vec::with_capacity(cfg.m1_list.len());
        for k in 0..cfg.m1_list.len() {
            exact.push(rep_curve(&env, &[fstar], &nt, k)?);
            let mut s = 0.0;
            for (ti, &t) in nt.tasks.iter().enumerate() {
                s += ordinary_expected_error(&nt.rows[ti][k], env.task(t)?)?
                    .expect("the generating network always fits");
            }
            ord.push(s / (nt.tasks.len() * INPUTS) as f64);
        }
        Ok((z, nt, exact, ord))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for r in 0..cfg.replicates {
        for &n in &cfg.n_list {
            for &m in &cfg.m_list {
                cells.push((r, n, m));
            }
        }
    }
    let out = par::map_slice(&cells, |&(r, n, m)| -> Result<Vec<BinaryRecord>> {
        let (z, nt, exact, ord) = &per_rep[r];
        let sub = z.first_rows(n).prefix(m);
        let zero = zero_loss_search(&sub)?;
        let reps: Vec<BinaryNetwork> = if zero.len() > cfg.cap {
            let mut rr = rng::child(cfg.seed, &[r as u64, 2, n as u64, m as u64]);
            let mut idx = index::sample(&mut rr, zero.len(), cfg.cap).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| zero[i]).collect()
        } else {
            zero.clone()
        };
        cfg.m1_list
            .iter()
            .enumerate()
            .map(|(k, &m1)| {
                Ok(BinaryRecord {
                    n,
                    m,
                    replicate: r,
                    m1,
                    zero_loss_count: zero.len(),
                    evaluated: reps.len(),
                    rep_error: rep_curve(&env, &reps, nt, k)?,
                    exact_error: exact[k],
                    ord_error: ord[k],
                })
            })
            .collect()
    });
    let mut records = Vec::new();
    for cell in out {
        records.extend(cell?);
    }
    Ok(records)
}

/// Which generalisation curve a summary point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryCurve {
    /// Zero-loss learned representations.
    Rep,
    /// The generating representation.
    Exact,
    /// No representation: the whole network family.
    Ordinary,
}

impl BinaryCurve {
    pub fn name(self) -> &'static str {
        match self {
            BinaryCurve::Rep => "rep",
            BinaryCurve::Exact => "exact",
            BinaryCurve::Ordinary => "ord",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryCurvePoint {
    pub curve: BinaryCurve,
    pub n: usize,
    pub m: usize,
    pub m1: usize,
    pub mean_error: f64,
    pub stderr: f64,
}

/// Averages records over replicates. Exact and ordinary points do not depend
/// on `(n, m)` and are reported with `n = m = 0`.
pub fn summarize(records: &[BinaryRecord]) -> Vec<BinaryCurvePoint> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(BinaryCurve, usize, usize, usize), Vec<f64>> = BTreeMap::new();
    let mut seen_base: std::collections::BTreeSet<(usize, usize)> = Default::default();
    for r in records {
        groups.entry((BinaryCurve::Rep, r.n, r.m, r.m1)).or_default().push(r.rep_error);
        if seen_base.insert((r.replicate, r.m1)) {
            groups.entry((BinaryCurve::Exact, 0, 0, r.m1)).or_default().push(r.exact_error);
            groups.entry((BinaryCurve::Ordinary, 0, 0, r.m1)).or_default().push(r.ord_error);
        }
    }
    groups
        .into_iter()
        .map(|((curve, n, m, m1), v)| {
            let k = v.len() as f64;
            let mean = v.iter().sum::<f64>() / k;
            let se = if v.len() > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
            } else {
                0.0
            };
            BinaryCurvePoint {
                curve,
                n,
                m,
                m1,
                mean_error: mean,
                stderr: se,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvKind;
    use crate::nnet::unpack_pm1;
    use rand::Rng as _;

    fn env(seed: u64) -> Environment {
        Environment::build(EnvKind::Binary5x3 { seed }).unwrap()
    }

    fn entry(bits: usize, y: f64) -> Entry {
        Entry {
            input: bits,
            x: unpack_pm1(bits),
            y,
        }
    }

    /// Empirical loss of `g ∘ f` on a row, from scratch.
    fn ordinary_loss(f: &BinaryNetwork, mask: u8, row: &[Entry]) -> u64 {
        row.iter()
            .filter(|e| {
                let bits = pack_pm1(&e.x).unwrap();
                let code = f.code_of_bits(bits);
                let pred = if mask >> code & 1 == 1 { 1.0 } else { -1.0 };
                pred != e.y
            })
            .count() as u64
    }

    fn random_sample(rng: &mut Rng, n: usize, m: usize) -> NMSample {
        let rows = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| entry(rng.gen_range(0..32), if rng.gen() { 1.0 } else { -1.0 }))
                    .collect()
            })
            .collect();
        NMSample::from_rows(vec![0; n], rows).unwrap()
    }

    #[test]
    fn loss_equals_brute_force_over_all_tables() {
        let mut rng = rng::stream(1);
        for trial in 0..100 {
            let f = BinaryNetwork::from_index(rng.gen_range(0..BINARY_FAMILY_SIZE)).unwrap();
            let z = if trial % 2 == 0 {
                let (n, m) = (rng.gen_range(1..5), rng.gen_range(1..12));
                random_sample(&mut rng, n, m)
            } else {
                let e = env(trial);
                e.draw_nm_sample(3, 8, &mut rng).unwrap()
            };
            let brute: u64 = z
                .rows
                .iter()
                .map(|row| (0..=255u8).map(|mask| ordinary_loss(&f, mask, row)).min().unwrap())
                .sum();
            assert_eq!(rep_empirical_loss_count(&f, &z).unwrap(), brute);
        }
    }

    #[test]
    fn realizable_sample_has_zero_loss() {
        let e = env(3);
        let z = e.draw_nm_sample(4, 20, &mut rng::stream(2)).unwrap();
        assert_eq!(rep_empirical_loss(&e.generator().unwrap(), &z).unwrap(), 0.0);
    }

    #[test]
    fn conflicting_duplicate_costs_one() {
        let z = NMSample::from_rows(vec![0], vec![vec![entry(5, 1.0), entry(5, -1.0)]]).unwrap();
        let f = BinaryNetwork::from_index(0).unwrap();
        assert_eq!(rep_empirical_loss(&f, &z).unwrap(), 0.5);
        assert_eq!(rep_empirical_loss_count(&f, &z).unwrap(), 1);
    }

    #[test]
    fn best_table_majority_and_default() {
        let f = BinaryNetwork::from_index(0).unwrap();
        let b = 3;
        let code = f.code_of_bits(b);
        let row = vec![entry(b, 1.0), entry(b, 1.0), entry(b, 1.0), entry(b, -1.0)];
        let t = best_output_table(&f, &row).unwrap();
        assert_eq!(t.label(code), 1);
        let row = vec![entry(b, -1.0), entry(b, -1.0)];
        let t = best_output_table(&f, &row).unwrap();
        assert_eq!(t.label(code), -1);
        for c in 0..8u8 {
            if c != code {
                assert_eq!(t.label(c), 1);
            }
        }
    }

    #[test]
    fn best_table_achieves_the_loss() {
        let mut rng = rng::stream(4);
        for _ in 0..50 {
            let f = BinaryNetwork::from_index(rng.gen_range(0..BINARY_FAMILY_SIZE)).unwrap();
            let z = random_sample(&mut rng, 1, 15);
            let t = best_output_table(&f, &z.rows[0]).unwrap();
            assert_eq!(table_errors(&f, &t, &z.rows[0]).unwrap(), rep_empirical_loss_count(&f, &z).unwrap());
        }
    }

    #[test]
    fn search_contains_generator() {
        for seed in 0..5 {
            let e = env(seed);
            let z = e.draw_nm_sample(3, 10, &mut rng::stream(seed)).unwrap();
            let found = zero_loss_search(&z).unwrap();
            assert!(found.contains(&e.generator().unwrap()));
            assert!(found.windows(2).all(|w| w[0].index() < w[1].index()));
        }
    }

    #[test]
    fn empty_sample_keeps_everything() {
        let z = NMSample::from_rows(vec![], vec![]).unwrap();
        assert_eq!(zero_loss_search(&z).unwrap().len(), BINARY_FAMILY_SIZE);
        let z = NMSample::from_rows(vec![0], vec![vec![]]).unwrap();
        assert_eq!(zero_loss_search(&z).unwrap().len(), BINARY_FAMILY_SIZE);
    }

    #[test]
    fn search_shrinks_on_nested_samples() {
        let e = env(7);
        let z = e.draw_nm_sample(9, 22, &mut rng::stream(7)).unwrap();
        let mut prev = usize::MAX;
        for m in [2, 6, 10, 14, 18, 22] {
            let k = zero_loss_search(&z.prefix(m)).unwrap().len();
            assert!(k <= prev);
            prev = k;
        }
        // regression value for this seed
        assert_eq!(prev, REGRESSION_ZERO_LOSS_9_22);
    }

    // 3! output permutations times 2^3 output sign flips of the generator
    const REGRESSION_ZERO_LOSS_9_22: usize = 48;

    #[test]
    fn search_ignores_row_order() {
        let e = env(8);
        let z = e.draw_nm_sample(4, 6, &mut rng::stream(8)).unwrap();
        let mut rev = z.clone();
        rev.rows.reverse();
        rev.task_ids.reverse();
        assert_eq!(zero_loss_search(&z).unwrap(), zero_loss_search(&rev).unwrap());
    }

    #[test]
    fn true_error_cases() {
        let e = env(9);
        let f = e.generator().unwrap();
        let mut rng = rng::stream(9);
        for _ in 0..20 {
            let t = e.sample_task(&mut rng);
            let full: Vec<Entry> = (0..32).map(|b| e.entry(t, b)).collect();
            let table = best_output_table(&f, &full).unwrap();
            assert_eq!(binary_true_error(&f, &table, e.task(t).unwrap()).unwrap(), 0);
            let inv = table.inverted();
            // every input is misclassified once every label flips
            assert_eq!(binary_true_error(&f, &inv, e.task(t).unwrap()).unwrap(), 32);
        }
        let other = BinaryNetwork::from_index(12345).unwrap();
        let v = binary_true_error(&other, &OutputTable::from_mask(0x5a), e.task(3).unwrap()).unwrap();
        assert!(v <= 32);
    }

    #[test]
    fn hand_enumerated_true_error() {
        // all weights +1: output code is 7 iff more than half the inputs are +1
        let f = BinaryNetwork::from_index(BINARY_FAMILY_SIZE - 1).unwrap();
        let table = OutputTable::from_mask(1 << 7);
        let task = vec![1.0; 32];
        // inputs with at most two +1 components: 1 + 5 + 10 = 16
        assert_eq!(binary_true_error(&f, &table, &task).unwrap(), 16);
    }

    #[test]
    fn table_mask_round_trip() {
        for m in 0..=255u8 {
            assert_eq!(OutputTable::from_mask(m).mask(), m);
        }
        assert!(OutputTable::new([1, 1, 1, 1, 1, 1, 1, 0]).is_err());
    }

    #[test]
    fn ordinary_error_matches_enumeration_on_tiny_case() {
        // brute force over every (f, g) pair that fits the row
        let e = env(10);
        let t = 17;
        let row: Vec<Entry> = [0usize, 31, 9].iter().map(|&b| e.entry(t, b)).collect();
        let task = e.task(t).unwrap();
        let mut num = 0u64;
        let mut den = 0u64;
        for i in 0..BINARY_FAMILY_SIZE {
            let f = BinaryNetwork::from_index(i).unwrap();
            for mask in 0..=255u8 {
                let tb = OutputTable::from_mask(mask);
                if table_errors(&f, &tb, &row).unwrap() == 0 {
                    num += binary_true_error(&f, &tb, task).unwrap() as u64;
                    den += 1;
                }
            }
        }
        let want = num as f64 / den as f64;
        let got = ordinary_expected_error(&row, task).unwrap().unwrap();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn non_pm1_target_rejected() {
        let z = NMSample::from_rows(vec![0], vec![vec![entry(1, 0.0)]]).unwrap();
        assert!(rep_empirical_loss(&BinaryNetwork::from_index(0).unwrap(), &z).is_err());
    }

    #[test]
    fn small_experiment_shape_and_determinism() {
        let cfg = BinaryExperiment {
            n_list: vec![1, 3],
            m_list: vec![6],
            m1_list: vec![2, 22],
            new_tasks: 3,
            replicates: 2,
            cap: 64,
            seed: 5,
            ..BinaryExperiment::default()
        };
        let a = run_binary_experiment(&cfg).unwrap();
        assert_eq!(a.len(), 2 * 2 * 2);
        for r in &a {
            assert!(r.evaluated <= 64 && r.evaluated >= 1);
            assert!((0.0..=1.0).contains(&r.rep_error));
            assert!((0.0..=1.0).contains(&r.exact_error));
        }
        assert_eq!(a, run_binary_experiment(&cfg).unwrap());
        let s = summarize(&a);
        assert_eq!(s.iter().filter(|p| p.curve == BinaryCurve::Exact).count(), 2);
        assert_eq!(s.iter().filter(|p| p.curve == BinaryCurve::Rep).count(), 4);
    }
}
