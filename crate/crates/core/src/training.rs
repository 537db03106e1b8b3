//! Objective, Adam optimiser and the epoch loop.
//!
//! The objective is the mean squared error of the predictions plus an L1
//! penalty on the fuzzy weights normalised by `1 / (k n)`:
//!
//! ```text
//! L(W) = 1/N sum_s (y_s - t_s)^2 + lambda / (k n) * sum_ij |sigmoid(W_ij)|
//! ```
//!
//! Since `sigmoid(W) > 0` the penalty is smooth and its derivative is
//! `lambda / (k n) * W' (1 - W')`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fuzzy::check_unit;
use crate::matrix::Matrix;
use crate::network::{accumulate_fuzzy_grad, ForwardTrace, Gradient, RuleNetwork, Scratch};
use crate::scalar::Scalar;

/// Patterns processed per parallel work item; fixed so that the reduction
/// order does not depend on the thread count.
const CHUNK: usize = 2048;

/// Stream offset separating the shuffling RNG from the initialisation RNG.
const SHUFFLE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    /// One gradient step per epoch over the whole training set.
    Full,
    Mini(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub rules: usize,
    pub learning_rate: T,
    pub epochs: usize,
    pub lambda: T,
    pub batch_size: BatchSize,
    pub seed: u64,
    pub adam_beta1: T,
    pub adam_beta2: T,
    pub adam_eps: T,
    /// Initial weights are drawn from `U[-h, h]`.
    pub init_half_width: T,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            rules: 4,
            learning_rate: T::lit(0.05),
            epochs: 300,
            lambda: T::lit(0.2),
            batch_size: BatchSize::Full,
            seed: 0,
            adam_beta1: T::lit(0.9),
            adam_beta2: T::lit(0.999),
            adam_eps: T::lit(1e-8),
            init_half_width: T::lit(crate::network::DEFAULT_INIT_HALF_WIDTH),
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    /// k = 4, lr = 0.05, 300 epochs, lambda = 0.2.
    pub fn synthetic() -> Self {
        Self::default()
    }

    /// k = 4, lr = 0.05, 150 epochs, lambda = 0.1.
    pub fn movielens() -> Self {
        Self {
            epochs: 150,
            lambda: T::lit(0.1),
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.rules == 0 {
            return bad("k must be positive".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if !(self.learning_rate > T::zero()) || !self.learning_rate.is_finite() {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        for (name, beta) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(beta >= T::zero() && beta < T::one()) {
                return bad(format!("{name} must lie in [0, 1), got {beta}"));
            }
        }
        if !(self.adam_eps > T::zero()) {
            return bad(format!("adam_eps must be > 0, got {}", self.adam_eps));
        }
        if self.batch_size == BatchSize::Mini(0) {
            return bad("batch_size must be positive".into());
        }
        Ok(())
    }
}

/// First and second moment estimates of Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Matrix<T>,
    pub v: Matrix<T>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(rules: usize, atoms: usize) -> Self {
        Self {
            m: Matrix::zeros(rules, atoms),
            v: Matrix::zeros(rules, atoms),
            t: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory<T> {
    /// Objective on the training set, one entry per epoch (mean over batches
    /// in mini-batch mode).
    pub train_loss: Vec<T>,
    /// Objective on the validation set after each epoch; empty without one.
    pub validation_loss: Vec<T>,
    pub final_fuzzy: Matrix<T>,
}

/// Atom vectors with binary targets, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledAtoms<T> {
    atoms_per_sample: usize,
    atoms: Vec<T>,
    labels: Vec<T>,
}

impl<T: Scalar> LabeledAtoms<T> {
    pub fn new(atoms_per_sample: usize) -> Self {
        Self {
            atoms_per_sample,
            atoms: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn push(&mut self, atoms: &[T], label: bool) -> Result<()> {
        if atoms.len() != self.atoms_per_sample {
            return Err(Error::LengthMismatch {
                expected: self.atoms_per_sample,
                actual: atoms.len(),
            });
        }
        check_unit(atoms)?;
        self.atoms.extend_from_slice(atoms);
        self.labels.push(if label { T::one() } else { T::zero() });
        Ok(())
    }

    /// Wraps a row-major atom buffer of `labels.len()` samples.
    pub fn from_parts(atoms_per_sample: usize, atoms: Vec<T>, labels: &[bool]) -> Result<Self> {
        if atoms.len() != atoms_per_sample * labels.len() {
            return Err(Error::LengthMismatch {
                expected: atoms_per_sample * labels.len(),
                actual: atoms.len(),
            });
        }
        check_unit(&atoms)?;
        Ok(Self {
            atoms_per_sample,
            atoms,
            labels: labels.iter().map(|&l| if l { T::one() } else { T::zero() }).collect(),
        })
    }

    pub fn atoms_per_sample(&self) -> usize {
        self.atoms_per_sample
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, index: usize) -> &[T] {
        let n = self.atoms_per_sample;
        &self.atoms[index * n..(index + 1) * n]
    }

    pub fn label(&self, index: usize) -> T {
        self.labels[index]
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], T)> {
        self.atoms
            .chunks_exact(self.atoms_per_sample)
            .zip(self.labels.iter().copied())
    }
}

/// Distinct (atoms, label) rows with multiplicities, in first-seen order.
/// The full-batch objective is a weighted sum over these rows.
struct PatternTable<T> {
    n: usize,
    atoms: Vec<T>,
    labels: Vec<T>,
    counts: Vec<T>,
    total: usize,
}

impl<T: Scalar> PatternTable<T> {
    fn compress(data: &LabeledAtoms<T>, indices: impl Iterator<Item = usize>) -> Self {
        let n = data.atoms_per_sample;
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut table = Self {
            n,
            atoms: Vec::new(),
            labels: Vec::new(),
            counts: Vec::new(),
            total: 0,
        };
        let mut key = Vec::with_capacity(n + 1);
        for s in indices {
            key.clear();
            key.extend(data.sample(s).iter().map(|x| x.as_f64().to_bits()));
            key.push(data.label(s).as_f64().to_bits());
            table.total += 1;
            if let Some(&slot) = index.get(&key) {
                table.counts[slot] += T::one();
            } else {
                index.insert(key.clone(), table.labels.len());
                table.atoms.extend_from_slice(data.sample(s));
                table.labels.push(data.label(s));
                table.counts.push(T::one());
            }
        }
        table
    }

    fn uncompressed(data: &LabeledAtoms<T>, indices: &[usize]) -> Self {
        let n = data.atoms_per_sample;
        let mut atoms = Vec::with_capacity(indices.len() * n);
        let mut labels = Vec::with_capacity(indices.len());
        for &s in indices {
            atoms.extend_from_slice(data.sample(s));
            labels.push(data.label(s));
        }
        Self {
            n,
            atoms,
            counts: vec![T::one(); labels.len()],
            labels,
            total: indices.len(),
        }
    }

    fn rows(&self) -> usize {
        self.labels.len()
    }
}

fn check_targets<T: Scalar>(targets: &[T]) -> Result<()> {
    match targets
        .iter()
        .find(|&&y| y != T::zero() && y != T::one())
    {
        Some(bad) => Err(Error::Format(format!("target {bad} is not 0 or 1"))),
        None => Ok(()),
    }
}

fn l1_term<T: Scalar>(fuzzy: &Matrix<T>, lambda: T) -> T {
    let kn = T::from_usize(fuzzy.rows() * fuzzy.cols()).expect("size fits scalar");
    lambda / kn * fuzzy.as_slice().iter().map(|w| w.abs()).sum::<T>()
}

/// Full objective for precomputed predictions.
pub fn loss<T: Scalar>(predictions: &[T], targets: &[T], fuzzy: &Matrix<T>, lambda: T) -> Result<T> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: targets.len(),
            actual: predictions.len(),
        });
    }
    if targets.is_empty() {
        return Err(Error::Empty("loss over zero samples"));
    }
    check_targets(targets)?;
    let n = T::from_usize(targets.len()).expect("size fits scalar");
    let sse: T = predictions
        .iter()
        .zip(targets)
        .map(|(&p, &y)| (p - y) * (p - y))
        .sum();
    Ok(sse / n + l1_term(fuzzy, lambda))
}

/// Gradient of [`loss`] with respect to `W`, assembled from per-sample
/// backward passes in sample order.
pub fn loss_gradient<T: Scalar>(
    traces: &[ForwardTrace<T>],
    targets: &[T],
    net: &RuleNetwork<T>,
    lambda: T,
) -> Result<Gradient<T>> {
    if traces.len() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: targets.len(),
            actual: traces.len(),
        });
    }
    if traces.is_empty() {
        return Err(Error::Empty("gradient over zero samples"));
    }
    let (k, n) = net.shape();
    let two_over_n = T::lit(2.0) / T::from_usize(traces.len()).expect("size fits scalar");
    let mut grad = Gradient::zeros(k, n);
    for (trace, &y) in traces.iter().zip(targets) {
        grad.add_assign(&net.backward(trace, two_over_n * (trace.output - y))?);
    }
    add_l1_gradient(&mut grad.dw, net.fuzzify(), lambda);
    Ok(grad)
}

fn add_l1_gradient<T: Scalar>(dw: &mut Matrix<T>, fuzzy: &Matrix<T>, lambda: T) {
    let scale = lambda / T::from_usize(fuzzy.rows() * fuzzy.cols()).expect("size fits scalar");
    for (g, &w) in dw.as_mut_slice().iter_mut().zip(fuzzy.as_slice()) {
        *g += scale * w * (T::one() - w);
    }
}

/// Objective value and gradient over a pattern table in one pass.
fn objective_and_gradient<T: Scalar>(
    net: &RuleNetwork<T>,
    table: &PatternTable<T>,
    lambda: T,
) -> (T, Gradient<T>) {
    let (k, n) = net.shape();
    let fuzzy = net.fuzzify();
    let total = T::from_usize(table.total).expect("size fits scalar");
    let two_over_n = T::lit(2.0) / total;

    let partials: Vec<(T, Vec<T>)> = (0..table.rows())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut scratch = Scratch::new(k, n);
            let mut acc = vec![T::zero(); k * n];
            let mut sse = T::zero();
            for &p in chunk {
                let atoms = &table.atoms[p * table.n..(p + 1) * table.n];
                let (y, c) = (table.labels[p], table.counts[p]);
                accumulate_fuzzy_grad(fuzzy, atoms, &mut scratch, &mut acc, |pred| {
                    let err = pred - y;
                    sse += c * err * err;
                    two_over_n * c * err
                });
            }
            (sse, acc)
        })
        .collect();

    let mut sse = T::zero();
    let mut acc = vec![T::zero(); k * n];
    for (part_sse, part) in partials {
        sse += part_sse;
        for (a, b) in acc.iter_mut().zip(part) {
            *a += b;
        }
    }
    let mut dw = Matrix::from_vec(k, n, acc).expect("shape");
    for (g, &w) in dw.as_mut_slice().iter_mut().zip(fuzzy.as_slice()) {
        *g *= w * (T::one() - w);
    }
    add_l1_gradient(&mut dw, fuzzy, lambda);
    (sse / total + l1_term(fuzzy, lambda), Gradient { dw })
}

/// Objective of `net` on a labelled set, evaluated in parallel with an
/// ordered reduction.
pub fn evaluate_loss<T: Scalar>(net: &RuleNetwork<T>, data: &LabeledAtoms<T>, lambda: T) -> Result<T> {
    if data.is_empty() {
        return Err(Error::Empty("loss over zero samples"));
    }
    if data.atoms_per_sample() != net.atoms() {
        return Err(Error::LengthMismatch {
            expected: net.atoms(),
            actual: data.atoms_per_sample(),
        });
    }
    let n = data.atoms_per_sample();
    let sums: Vec<T> = data
        .atoms
        .par_chunks(CHUNK * n)
        .zip(data.labels.par_chunks(CHUNK))
        .map(|(atoms, labels)| {
            atoms
                .chunks_exact(n)
                .zip(labels)
                .map(|(a, &y)| {
                    let e = net.predict_unchecked(a) - y;
                    e * e
                })
                .sum::<T>()
        })
        .collect();
    let sse: T = sums.into_iter().sum();
    Ok(sse / T::from_usize(data.len()).expect("size fits scalar") + l1_term(net.fuzzify(), lambda))
}

/// One bias-corrected Adam update of the raw weights.
pub fn adam_step<T: Scalar>(
    state: &mut AdamState<T>,
    grad: &Gradient<T>,
    net: &mut RuleNetwork<T>,
    cfg: &TrainConfig<T>,
) -> Result<()> {
    let shape = net.shape();
    grad.dw.ensure_shape(shape)?;
    state.m.ensure_shape(shape)?;
    state.v.ensure_shape(shape)?;
    if !grad.dw.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    state.t += 1;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let m_correction = T::one() - b1.powi(t);
    let v_correction = T::one() - b2.powi(t);
    let (m, v) = (state.m.as_mut_slice(), state.v.as_mut_slice());
    net.update_raw(|raw| {
        for (((w, &g), m), v) in raw
            .as_mut_slice()
            .iter_mut()
            .zip(grad.dw.as_slice())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let m_hat = *m / m_correction;
            let v_hat = *v / v_correction;
            *w -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
        }
    })
}

/// Trains a fresh network on `data`, recording the objective per epoch.
pub fn train<T: Scalar>(
    data: &LabeledAtoms<T>,
    validation: Option<&LabeledAtoms<T>>,
    cfg: &TrainConfig<T>,
) -> Result<(RuleNetwork<T>, TrainHistory<T>)> {
    cfg.validate()?;
    let net = RuleNetwork::init_with_half_width(
        cfg.rules,
        data.atoms_per_sample(),
        cfg.seed,
        cfg.init_half_width,
    )?;
    fit(net, data, validation, cfg)
}

/// Continues training from `net`; `cfg.rules` and the init settings are ignored.
pub fn fit<T: Scalar>(
    mut net: RuleNetwork<T>,
    data: &LabeledAtoms<T>,
    validation: Option<&LabeledAtoms<T>>,
    cfg: &TrainConfig<T>,
) -> Result<(RuleNetwork<T>, TrainHistory<T>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    check_targets(data.labels())?;
    if data.atoms_per_sample() != net.atoms() {
        return Err(Error::LengthMismatch {
            expected: net.atoms(),
            actual: data.atoms_per_sample(),
        });
    }
    if let Some(val) = validation {
        if val.atoms_per_sample() != net.atoms() {
            return Err(Error::LengthMismatch {
                expected: net.atoms(),
                actual: val.atoms_per_sample(),
            });
        }
    }
    let (k, n) = net.shape();
    let mut state = AdamState::new(k, n);
    let mut history = TrainHistory {
        train_loss: Vec::with_capacity(cfg.epochs),
        validation_loss: Vec::new(),
        final_fuzzy: net.fuzzify().clone(),
    };

    match cfg.batch_size {
        BatchSize::Full => {
            let table = PatternTable::compress(data, 0..data.len());
            log::debug!("full batch: {} samples in {} distinct rows", table.total, table.rows());
            for epoch in 0..cfg.epochs {
                let (loss, grad) = objective_and_gradient(&net, &table, cfg.lambda);
                adam_step(&mut state, &grad, &mut net, cfg)?;
                history.train_loss.push(loss);
                record_validation(&net, validation, cfg, &mut history)?;
                log::trace!("epoch {epoch}: loss {loss}");
            }
        }
        BatchSize::Mini(size) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_STREAM);
            let mut order: Vec<usize> = (0..data.len()).collect();
            for _ in 0..cfg.epochs {
                order.shuffle(&mut rng);
                let mut sum = T::zero();
                let mut batches = 0usize;
                for batch in order.chunks(size) {
                    let table = PatternTable::uncompressed(data, batch);
                    let (loss, grad) = objective_and_gradient(&net, &table, cfg.lambda);
                    adam_step(&mut state, &grad, &mut net, cfg)?;
                    sum += loss;
                    batches += 1;
                }
                history
                    .train_loss
                    .push(sum / T::from_usize(batches).expect("size fits scalar"));
                record_validation(&net, validation, cfg, &mut history)?;
            }
        }
    }
    history.final_fuzzy = net.fuzzify().clone();
    Ok((net, history))
}

fn record_validation<T: Scalar>(
    net: &RuleNetwork<T>,
    validation: Option<&LabeledAtoms<T>>,
    cfg: &TrainConfig<T>,
    history: &mut TrainHistory<T>,
) -> Result<()> {
    if let Some(val) = validation.filter(|v| !v.is_empty()) {
        history.validation_loss.push(evaluate_loss(net, val, cfg.lambda)?);
    }
    Ok(())
}
