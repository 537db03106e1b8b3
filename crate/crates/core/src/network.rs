//! The k-rule fuzzy network.
//!
//! Each rule `i` holds a real weight row `w_i`; its fuzzy weights are
//! `w'_i = sigmoid(w_i)`. For an atom vector `a` the rule computes the
//! weighted atoms `a'_ij = OR(a_j, 1 - w'_ij)`, conjoins them into
//! `r_i = prod_j a'_ij`, and the prediction is `y = OR(r_1, ..., r_k)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fuzzy::{check_unit, not_raw, or_all_raw, or_raw, FuzzyValue};
use crate::matrix::Matrix;
use crate::scalar::{logit, sigmoid, Scalar};

/// Default half-width of the uniform initialisation interval for `W`.
pub const DEFAULT_INIT_HALF_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RuleNetwork<T> {
    raw: Matrix<T>,
    fuzzy: Matrix<T>,
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace<T> {
    pub atoms: Vec<T>,
    /// `a'_ij`, one row per rule.
    pub weighted: Matrix<T>,
    /// Rule activations `r_i`.
    pub rules: Vec<T>,
    pub output: T,
}

/// Gradient with respect to the real weights `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub dw: Matrix<T>,
}

impl<T: Scalar> Gradient<T> {
    pub fn zeros(rules: usize, atoms: usize) -> Self {
        Self {
            dw: Matrix::zeros(rules, atoms),
        }
    }

    pub fn add_assign(&mut self, other: &Gradient<T>) {
        for (a, &b) in self.dw.as_mut_slice().iter_mut().zip(other.dw.as_slice()) {
            *a += b;
        }
    }
}

impl<T: Scalar> RuleNetwork<T> {
    /// `rules x atoms` network with `W ~ U[-0.5, 0.5]` drawn from a seeded ChaCha stream.
    pub fn init(rules: usize, atoms: usize, seed: u64) -> Result<Self> {
        Self::init_with_half_width(rules, atoms, seed, T::lit(DEFAULT_INIT_HALF_WIDTH))
    }

    pub fn init_with_half_width(
        rules: usize,
        atoms: usize,
        seed: u64,
        half_width: T,
    ) -> Result<Self> {
        if rules == 0 || atoms == 0 {
            return Err(Error::Config(format!(
                "network needs at least one rule and one atom, got {rules}x{atoms}"
            )));
        }
        if !(half_width >= T::zero()) || !half_width.is_finite() {
            return Err(Error::Config(format!("invalid init half-width {half_width}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hw = half_width.as_f64();
        let data = (0..rules * atoms)
            .map(|_| T::lit(rng.gen_range(-hw..=hw)))
            .collect();
        Self::from_raw(Matrix::from_vec(rules, atoms, data)?)
    }

    /// Wraps a real weight matrix `W`.
    pub fn from_raw(raw: Matrix<T>) -> Result<Self> {
        if raw.rows() == 0 || raw.cols() == 0 {
            return Err(Error::Empty("weight matrix"));
        }
        if !raw.is_finite() {
            return Err(Error::NonFinite("weight matrix"));
        }
        let fuzzy = raw.map(sigmoid);
        Ok(Self { raw, fuzzy })
    }

    /// Builds a network whose fuzzy weights are exactly `fuzzy`; entries must
    /// lie strictly inside (0, 1).
    pub fn from_fuzzy(fuzzy: Matrix<T>) -> Result<Self> {
        if fuzzy.rows() == 0 || fuzzy.cols() == 0 {
            return Err(Error::Empty("fuzzy weight matrix"));
        }
        if let Some(&bad) = fuzzy
            .as_slice()
            .iter()
            .find(|&&w| !(w > T::zero() && w < T::one()))
        {
            return Err(Error::OutOfRange(bad.as_f64()));
        }
        let raw = fuzzy.map(logit);
        Ok(Self { raw, fuzzy })
    }

    pub fn rules(&self) -> usize {
        self.raw.rows()
    }

    pub fn atoms(&self) -> usize {
        self.raw.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.raw.shape()
    }

    pub fn raw_weights(&self) -> &Matrix<T> {
        &self.raw
    }

    /// `W' = sigmoid(W)`.
    pub fn fuzzify(&self) -> &Matrix<T> {
        &self.fuzzy
    }

    /// Applies `f` to the raw weights and refreshes the fuzzy weights.
    pub(crate) fn update_raw(&mut self, f: impl FnOnce(&mut Matrix<T>)) -> Result<()> {
        f(&mut self.raw);
        if !self.raw.is_finite() {
            return Err(Error::NonFinite("weight matrix after update"));
        }
        self.fuzzy = self.raw.map(sigmoid);
        Ok(())
    }

    fn check_atoms(&self, atoms: &[T]) -> Result<()> {
        if atoms.len() != self.atoms() {
            return Err(Error::LengthMismatch {
                expected: self.atoms(),
                actual: atoms.len(),
            });
        }
        check_unit(atoms)
    }

    pub fn forward(&self, atoms: &[T]) -> Result<ForwardTrace<T>> {
        self.check_atoms(atoms)?;
        let (k, n) = self.shape();
        let mut weighted = Matrix::zeros(k, n);
        let mut rules = Vec::with_capacity(k);
        for i in 0..k {
            let w = self.fuzzy.row(i);
            let row = weighted.row_mut(i);
            let mut r = T::one();
            for j in 0..n {
                row[j] = or_raw(atoms[j], not_raw(w[j]));
                r *= row[j];
            }
            rules.push(r);
        }
        let output = or_all_raw(&rules);
        Ok(ForwardTrace {
            atoms: atoms.to_vec(),
            weighted,
            rules,
            output,
        })
    }

    pub fn predict(&self, atoms: &[T]) -> Result<FuzzyValue<T>> {
        self.check_atoms(atoms)?;
        Ok(FuzzyValue::new(self.predict_unchecked(atoms)).expect("prediction in unit interval"))
    }

    /// Prediction without input validation or trace allocation.
    pub(crate) fn predict_unchecked(&self, atoms: &[T]) -> T {
        let mut y: Option<T> = None;
        for w in self.fuzzy.iter_rows() {
            let mut r = T::one();
            for (&a, &wj) in atoms.iter().zip(w) {
                r *= or_raw(a, not_raw(wj));
            }
            y = Some(y.map_or(r, |acc| or_raw(acc, r)));
        }
        y.expect("network has at least one rule")
    }

    /// Exact reverse-mode gradient of `dL/dy * y` with respect to `W`.
    ///
    /// Leave-one-out products use prefix/suffix scans so saturated factors
    /// (`r_m = 1`, `a'_im = 0`) never divide by zero.
    pub fn backward(&self, trace: &ForwardTrace<T>, dl_dy: T) -> Result<Gradient<T>> {
        let (k, n) = self.shape();
        trace.weighted.ensure_shape((k, n))?;
        if trace.rules.len() != k || trace.atoms.len() != n {
            return Err(Error::ShapeMismatch {
                expected: (k, n),
                actual: (trace.rules.len(), trace.atoms.len()),
            });
        }
        let mut grad = Gradient::zeros(k, n);
        if dl_dy == T::zero() {
            return Ok(grad);
        }
        let miss: Vec<T> = trace.rules.iter().map(|&r| T::one() - r).collect();
        let dy_dr = leave_one_out_products(&miss);
        let mut dr_da = vec![T::zero(); n];
        for i in 0..k {
            leave_one_out_into(trace.weighted.row(i), &mut dr_da);
            let w = self.fuzzy.row(i);
            let upstream = dl_dy * dy_dr[i];
            let out = grad.dw.row_mut(i);
            for j in 0..n {
                let da_dw = -(T::one() - trace.atoms[j]);
                out[j] = upstream * dr_da[j] * da_dw * w[j] * (T::one() - w[j]);
            }
        }
        Ok(grad)
    }
}

/// `out[i] = prod_{m != i} x[m]`.
pub fn leave_one_out_products<T: Scalar>(x: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); x.len()];
    leave_one_out_into(x, &mut out);
    out
}

pub(crate) fn leave_one_out_into<T: Scalar>(x: &[T], out: &mut [T]) {
    let mut prefix = T::one();
    for (o, &v) in out.iter_mut().zip(x) {
        *o = prefix;
        prefix *= v;
    }
    let mut suffix = T::one();
    for (o, &v) in out.iter_mut().zip(x).rev() {
        *o *= suffix;
        suffix *= v;
    }
}

/// Reusable buffers for the fused training kernel.
pub(crate) struct Scratch<T> {
    weighted: Vec<T>,
    rules: Vec<T>,
    miss: Vec<T>,
    dy_dr: Vec<T>,
    dr_da: Vec<T>,
}

impl<T: Scalar> Scratch<T> {
    pub(crate) fn new(k: usize, n: usize) -> Self {
        Self {
            weighted: vec![T::zero(); k * n],
            rules: vec![T::zero(); k],
            miss: vec![T::zero(); k],
            dy_dr: vec![T::zero(); k],
            dr_da: vec![T::zero(); n],
        }
    }
}

/// Forward pass plus accumulation of `scale(y) * dy/dW'` into `acc`
/// (gradient with respect to the fuzzy weights, before the sigmoid factor).
/// `scale` receives the prediction and returns the upstream derivative.
pub(crate) fn accumulate_fuzzy_grad<T: Scalar>(
    fuzzy: &Matrix<T>,
    atoms: &[T],
    scratch: &mut Scratch<T>,
    acc: &mut [T],
    scale: impl FnOnce(T) -> T,
) -> T {
    let (k, n) = fuzzy.shape();
    for i in 0..k {
        let w = fuzzy.row(i);
        let row = &mut scratch.weighted[i * n..(i + 1) * n];
        let mut r = T::one();
        for j in 0..n {
            row[j] = or_raw(atoms[j], not_raw(w[j]));
            r *= row[j];
        }
        scratch.rules[i] = r;
        scratch.miss[i] = T::one() - r;
    }
    let y = or_all_raw(&scratch.rules);
    let upstream = scale(y);
    if upstream == T::zero() {
        return y;
    }
    leave_one_out_into(&scratch.miss, &mut scratch.dy_dr);
    for i in 0..k {
        let g = upstream * scratch.dy_dr[i];
        if g == T::zero() {
            continue;
        }
        leave_one_out_into(&scratch.weighted[i * n..(i + 1) * n], &mut scratch.dr_da);
        let out = &mut acc[i * n..(i + 1) * n];
        for j in 0..n {
            out[j] -= g * scratch.dr_da[j] * (T::one() - atoms[j]);
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Reference synthetic weights in their published column order: RECENT GENRE CAST DIRECTOR HIGH COOKIES.
    fn reference_weights() -> Matrix<f64> {
        Matrix::from_rows(&[
            vec![0.994, 0.987, 0.013, 0.004, 0.008, 0.003],
            vec![0.005, 0.009, 0.019, 0.008, 0.993, 0.013],
            vec![0.986, 0.002, 0.927, 0.915, 0.002, 0.005],
            vec![0.029, 0.003, 0.020, 0.003, 0.990, 0.004],
        ])
        .unwrap()
    }

    fn central_difference(net: &RuleNetwork<f64>, atoms: &[f64], i: usize, j: usize) -> f64 {
        let h = 1e-6;
        let shifted = |d: f64| {
            let mut raw = net.raw_weights().clone();
            raw.set(i, j, raw.get(i, j) + d);
            RuleNetwork::from_raw(raw).unwrap().forward(atoms).unwrap().output
        };
        (shifted(h) - shifted(-h)) / (2.0 * h)
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = RuleNetwork::<f64>::init(4, 6, 17).unwrap();
        let b = RuleNetwork::<f64>::init(4, 6, 17).unwrap();
        assert_eq!(a.raw_weights().as_slice(), b.raw_weights().as_slice());
        let one = RuleNetwork::<f64>::init(1, 1, 3).unwrap();
        assert!(one.raw_weights().get(0, 0).abs() <= 0.5);
        // sigmoid(+-0.5) = 0.3775 / 0.6225
        let wide = RuleNetwork::<f64>::init(4, 80, 5).unwrap();
        assert!(wide
            .fuzzify()
            .as_slice()
            .iter()
            .all(|&w| (0.3775..=0.6225).contains(&w)));
        assert!(RuleNetwork::<f64>::init(0, 3, 1).is_err());
    }

    #[test]
    fn fuzzify_is_sigmoid() {
        let net = RuleNetwork::from_raw(Matrix::from_vec(1, 3, vec![0.0f64, 2.0, 800.0]).unwrap())
            .unwrap();
        let w = net.fuzzify();
        assert_eq!(w.get(0, 0), 0.5);
        assert!((w.get(0, 1) - 0.880_797_077_977_882_3).abs() < 1e-15);
        assert_eq!(w.get(0, 2), 1.0);
        assert!(RuleNetwork::from_raw(Matrix::from_vec(1, 1, vec![f64::NAN]).unwrap()).is_err());
    }

    #[test]
    fn forward_saturation_cases() {
        let net = RuleNetwork::<f64>::init(3, 5, 9).unwrap();
        assert_eq!(net.forward(&[1.0; 5]).unwrap().output, 1.0);

        let vacuous =
            RuleNetwork::from_raw(Matrix::filled(3, 4, -1000.0)).unwrap();
        let trace = vacuous.forward(&[0.0, 0.3, 0.0, 0.9]).unwrap();
        assert!(trace.rules.iter().all(|&r| r == 1.0));
        assert_eq!(trace.output, 1.0);
    }

    #[test]
    fn forward_with_reference_weights() {
        let net = RuleNetwork::from_fuzzy(reference_weights()).unwrap();
        let atoms = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let trace = net.forward(&atoms).unwrap();
        let by_hand = 0.995 * 0.991 * 0.981 * 0.992 * 1.0 * 0.987;
        assert!((trace.rules[1] - by_hand).abs() < 1e-12);
        assert!((trace.rules[1] - 0.947).abs() < 5e-4);
        assert!(trace.output >= trace.rules[1]);
        assert_eq!(net.predict(&atoms).unwrap().value(), trace.output);
    }

    #[test]
    fn forward_rejects_bad_atoms() {
        let net = RuleNetwork::<f64>::init(2, 3, 1).unwrap();
        assert!(matches!(net.forward(&[0.1, 0.2]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(net.forward(&[0.1, 0.2, 1.2]), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn backward_trivial_cases() {
        let net = RuleNetwork::<f64>::init(2, 3, 4).unwrap();
        let trace = net.forward(&[0.2, 1.0, 0.6]).unwrap();
        let zero = net.backward(&trace, 0.0).unwrap();
        assert!(zero.dw.as_slice().iter().all(|&g| g == 0.0));
        let g = net.backward(&trace, 1.0).unwrap();
        for i in 0..2 {
            assert_eq!(g.dw.get(i, 1), 0.0);
        }
    }

    #[test]
    fn backward_matches_finite_differences_small() {
        let net = RuleNetwork::from_raw(
            Matrix::from_rows(&[vec![0.3, -1.2, 2.0], vec![-0.4, 0.8, 1.1]]).unwrap(),
        )
        .unwrap();
        let atoms = [0.25, 0.6, 0.1];
        let g = net.backward(&net.forward(&atoms).unwrap(), 1.0).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                let fd = central_difference(&net, &atoms, i, j);
                let an = g.dw.get(i, j);
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "{i},{j}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn backward_exact_at_saturation() {
        // One rule fully fires (r = 1) and one weighted atom is exactly 0.
        let net = RuleNetwork::from_raw(
            Matrix::from_rows(&[vec![-800.0, -800.0], vec![800.0, 0.5]]).unwrap(),
        )
        .unwrap();
        let trace = net.forward(&[0.0, 0.5]).unwrap();
        assert_eq!(trace.rules[0], 1.0);
        assert_eq!(trace.weighted.get(1, 0), 0.0);
        let g = net.backward(&trace, 1.0).unwrap();
        assert!(g.dw.is_finite());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = RuleNetwork::<f64>::init(2, 3, 1).unwrap();
        let b = RuleNetwork::<f64>::init(3, 3, 1).unwrap();
        let trace = a.forward(&[0.1, 0.2, 0.3]).unwrap();
        assert!(b.backward(&trace, 1.0).is_err());
    }

    #[test]
    fn fused_kernel_agrees_with_backward() {
        let net = RuleNetwork::<f64>::init_with_half_width(3, 5, 11, 2.0).unwrap();
        let atoms = [0.1, 0.9, 0.4, 0.0, 0.7];
        let mut scratch = Scratch::new(3, 5);
        let mut acc = vec![0.0; 15];
        let y = accumulate_fuzzy_grad(net.fuzzify(), &atoms, &mut scratch, &mut acc, |_| 0.7);
        let trace = net.forward(&atoms).unwrap();
        assert_eq!(y, trace.output);
        let g = net.backward(&trace, 0.7).unwrap();
        for (idx, &a) in acc.iter().enumerate() {
            let w = net.fuzzify().as_slice()[idx];
            let expect = g.dw.as_slice()[idx];
            assert!((a * w * (1.0 - w) - expect).abs() <= 1e-15 + 1e-12 * expect.abs());
        }
    }

    #[test]
    fn single_precision_network() {
        let net = RuleNetwork::<f32>::init(2, 3, 1).unwrap();
        let y = net.predict(&[0.5, 0.5, 0.5]).unwrap().value();
        assert!((0.0..=1.0).contains(&y));
    }

    proptest! {
        #[test]
        fn trace_is_internally_consistent(
            seed in any::<u64>(),
            atoms in prop::collection::vec(0.0..=1.0f64, 4),
        ) {
            let net = RuleNetwork::<f64>::init_with_half_width(3, 4, seed, 3.0).unwrap();
            let t = net.forward(&atoms).unwrap();
            for i in 0..3 {
                let prod: f64 = t.weighted.row(i).iter().product();
                prop_assert!((prod - t.rules[i]).abs() < 1e-12);
            }
            let closed = 1.0 - t.rules.iter().map(|r| 1.0 - r).product::<f64>();
            prop_assert!((closed - t.output).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&t.output));
        }

        #[test]
        fn prediction_monotone_in_atoms(
            seed in any::<u64>(),
            atoms in prop::collection::vec(0.0..=1.0f64, 5),
            idx in 0usize..5,
            bump in 0.0..0.5f64,
        ) {
            let net = RuleNetwork::<f64>::init_with_half_width(3, 5, seed, 3.0).unwrap();
            let mut up = atoms.clone();
            up[idx] = (up[idx] + bump).min(1.0);
            let lo = net.predict(&atoms).unwrap().value();
            let hi = net.predict(&up).unwrap().value();
            prop_assert!(hi >= lo - 1e-15);
        }

        #[test]
        fn rule_order_is_irrelevant(
            seed in any::<u64>(),
            atoms in prop::collection::vec(0.0..=1.0f64, 4),
        ) {
            let net = RuleNetwork::<f64>::init_with_half_width(4, 4, seed, 3.0).unwrap();
            let mut rows = net.raw_weights().to_rows();
            rows.reverse();
            rows.swap(0, 2);
            let permuted = RuleNetwork::from_raw(Matrix::from_rows(&rows).unwrap()).unwrap();
            let a = net.predict(&atoms).unwrap().value();
            let b = permuted.predict(&atoms).unwrap().value();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
