//! Finite-difference check of the analytic gradient of the training objective.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::matrix::Matrix;
use crate::network::RuleNetwork;
use crate::training::loss_gradient;

/// Central-difference step.
pub const STEP: f64 = 1e-6;

/// Below this magnitude the comparison switches to absolute error.
pub const ABSOLUTE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckConfig {
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub max_rules: usize,
    pub max_atoms: usize,
    pub max_samples: usize,
    pub lambda_max: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            tolerance: 1e-5,
            seed: 0,
            max_rules: 4,
            max_atoms: 10,
            max_samples: 8,
            lambda_max: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub trials: usize,
    pub entries: usize,
    pub max_error: f64,
    /// `(trial, rule, atom, analytic, numeric)` for every entry over tolerance.
    pub failures: Vec<(usize, usize, usize, f64, f64)>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Relative error, or absolute error when the analytic value is tiny.
pub fn gradient_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if analytic.abs() < ABSOLUTE_FLOOR {
        diff
    } else {
        diff / analytic.abs().max(numeric.abs())
    }
}

struct Instance {
    raw: Matrix<f64>,
    atoms: Vec<Vec<f64>>,
    targets: Vec<f64>,
    lambda: f64,
}

fn random_instance(rng: &mut ChaCha8Rng, cfg: &GradcheckConfig) -> Instance {
    let k = rng.gen_range(1..=cfg.max_rules);
    let n = rng.gen_range(1..=cfg.max_atoms);
    let samples = rng.gen_range(1..=cfg.max_samples);
    let raw: Vec<f64> = (0..k * n).map(|_| rng.gen_range(-3.0..=3.0)).collect();
    let atoms = (0..samples)
        .map(|_| (0..n).map(|_| rng.gen_range(0.05..0.95)).collect())
        .collect();
    let targets = (0..samples).map(|_| f64::from(u8::from(rng.gen_bool(0.5)))).collect();
    Instance {
        raw: Matrix::from_vec(k, n, raw).expect("shape"),
        atoms,
        targets,
        lambda: rng.gen_range(0.0..=cfg.lambda_max),
    }
}

/// `L(W + h e_ij) - L(W - h e_ij)`, with the squared errors differenced
/// per sample so the large common part of the loss cancels exactly.
fn objective_difference(inst: &Instance, i: usize, j: usize, h: f64) -> Result<f64> {
    let shifted = |d: f64| -> Result<RuleNetwork<f64>> {
        let mut raw = inst.raw.clone();
        raw.set(i, j, raw.get(i, j) + d);
        RuleNetwork::from_raw(raw)
    };
    let (plus, minus) = (shifted(h)?, shifted(-h)?);
    let mut mse = 0.0;
    for (a, &y) in inst.atoms.iter().zip(&inst.targets) {
        let p = plus.predict(a)?.value();
        let m = minus.predict(a)?.value();
        mse += (p - m) * (p + m - 2.0 * y);
    }
    mse /= inst.targets.len() as f64;
    let (k, n) = inst.raw.shape();
    let penalty = inst.lambda / (k * n) as f64 * (plus.fuzzify().get(i, j) - minus.fuzzify().get(i, j));
    Ok(mse + penalty)
}

pub fn run_gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = GradcheckReport {
        trials: cfg.trials,
        entries: 0,
        max_error: 0.0,
        failures: Vec::new(),
    };
    for trial in 0..cfg.trials {
        let inst = random_instance(&mut rng, cfg);
        let net = RuleNetwork::from_raw(inst.raw.clone())?;
        let traces = inst
            .atoms
            .iter()
            .map(|a| net.forward(a))
            .collect::<Result<Vec<_>>>()?;
        let grad = loss_gradient(&traces, &inst.targets, &net, inst.lambda)?;
        let (k, n) = net.shape();
        for i in 0..k {
            for j in 0..n {
                let numeric = objective_difference(&inst, i, j, STEP)? / (2.0 * STEP);
                let analytic = grad.dw.get(i, j);
                let err = gradient_error(analytic, numeric);
                report.entries += 1;
                report.max_error = report.max_error.max(err);
                if !(err < cfg.tolerance) {
                    report.failures.push((trial, i, j, analytic, numeric));
                }
            }
        }
    }
    Ok(report)
}
