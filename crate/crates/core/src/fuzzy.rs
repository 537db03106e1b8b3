//! Fuzzy logic over the product t-norm.
//!
//! `NOT(a) = 1 - a`, `AND(a, b) = a * b` and `OR(a, b) = a + b - a * b`, plus
//! the vectorised reductions and the weighted-atom combinator used by every
//! rule of the network. All operators are smooth in their arguments.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rounding slack tolerated before clamping back into the unit interval.
const BAND_SLACK: f64 = 1e-12;

/// Truth degree in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct FuzzyValue<T>(T);

impl<T: Scalar> FuzzyValue<T> {
    pub fn new(value: T) -> Result<Self> {
        if value >= T::zero() && value <= T::one() {
            Ok(Self(value))
        } else {
            Err(Error::OutOfRange(value.to_f64().unwrap_or(f64::NAN)))
        }
    }

    pub fn zero() -> Self {
        Self(T::zero())
    }

    pub fn one() -> Self {
        Self(T::one())
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// Non-empty sequence of truth degrees with a fixed length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FuzzyVector<T>(Vec<T>);

impl<T: Scalar> FuzzyVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("fuzzy vector"));
        }
        check_unit(&values)?;
        Ok(Self(values))
    }

    pub fn from_values(values: &[FuzzyValue<T>]) -> Result<Self> {
        Self::new(values.iter().map(|v| v.0).collect())
    }

    pub fn get(&self, index: usize) -> FuzzyValue<T> {
        FuzzyValue(self.0[index])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T> Deref for FuzzyVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

pub(crate) fn check_unit<T: Scalar>(values: &[T]) -> Result<()> {
    match values.iter().find(|&&v| !(v >= T::zero() && v <= T::one())) {
        Some(bad) => Err(Error::OutOfRange(bad.to_f64().unwrap_or(f64::NAN))),
        None => Ok(()),
    }
}

/// Clamps a result that may have drifted past the band by rounding.
#[inline]
pub(crate) fn settle<T: Scalar>(x: T) -> T {
    debug_assert!(
        x >= -T::lit(BAND_SLACK) && x <= T::one() + T::lit(BAND_SLACK),
        "fuzzy result {x} escaped the unit interval"
    );
    x.max(T::zero()).min(T::one())
}

#[inline]
pub(crate) fn not_raw<T: Scalar>(a: T) -> T {
    T::one() - a
}

#[inline]
pub(crate) fn and_raw<T: Scalar>(a: T, b: T) -> T {
    a * b
}

#[inline]
pub(crate) fn or_raw<T: Scalar>(a: T, b: T) -> T {
    // Same value as a + b - ab, but exact whenever either argument is 0 or 1.
    settle(a + b * (T::one() - a))
}

pub fn fnot<T: Scalar>(a: FuzzyValue<T>) -> FuzzyValue<T> {
    FuzzyValue(not_raw(a.0))
}

pub fn fand<T: Scalar>(a: FuzzyValue<T>, b: FuzzyValue<T>) -> FuzzyValue<T> {
    FuzzyValue(and_raw(a.0, b.0))
}

pub fn f_or<T: Scalar>(a: FuzzyValue<T>, b: FuzzyValue<T>) -> FuzzyValue<T> {
    FuzzyValue(or_raw(a.0, b.0))
}

/// Product of all elements.
pub fn fand_reduce<T: Scalar>(a: &[T]) -> Result<FuzzyValue<T>> {
    if a.is_empty() {
        return Err(Error::Empty("AND reduction"));
    }
    check_unit(a)?;
    Ok(FuzzyValue(and_all_raw(a)))
}

/// Left fold of binary OR; equals `1 - prod(1 - a_i)`.
pub fn for_reduce<T: Scalar>(a: &[T]) -> Result<FuzzyValue<T>> {
    if a.is_empty() {
        return Err(Error::Empty("OR reduction"));
    }
    check_unit(a)?;
    Ok(FuzzyValue(or_all_raw(a)))
}

#[inline]
pub(crate) fn and_all_raw<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::one(), |acc, &x| acc * x)
}

#[inline]
pub(crate) fn or_all_raw<T: Scalar>(a: &[T]) -> T {
    let mut it = a.iter();
    let first = *it.next().expect("non-empty");
    it.fold(first, |acc, &x| or_raw(acc, x))
}

/// Elementwise `OR(a_j, 1 - w_j)`: a full weight passes the atom through, a
/// zero weight turns it into a tautology under AND.
pub fn weighted_atoms<T: Scalar>(
    atoms: &FuzzyVector<T>,
    weights: &FuzzyVector<T>,
) -> Result<FuzzyVector<T>> {
    if atoms.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: atoms.len(),
            actual: weights.len(),
        });
    }
    Ok(FuzzyVector(
        atoms
            .iter()
            .zip(weights.iter())
            .map(|(&a, &w)| or_raw(a, not_raw(w)))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fv(x: f64) -> FuzzyValue<f64> {
        FuzzyValue::new(x).unwrap()
    }

    fn vec(xs: &[f64]) -> FuzzyVector<f64> {
        FuzzyVector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn not_examples() {
        assert_eq!(fnot(fv(0.0)).value(), 1.0);
        assert_eq!(fnot(fv(1.0)).value(), 0.0);
        assert!((fnot(fv(0.3)).value() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn and_examples() {
        assert_eq!(fand(fv(1.0), fv(0.37)).value(), 0.37);
        assert_eq!(fand(fv(0.0), fv(0.37)).value(), 0.0);
        assert_eq!(fand(fv(0.5), fv(0.5)).value(), 0.25);
    }

    #[test]
    fn or_examples() {
        assert_eq!(f_or(fv(0.0), fv(0.37)).value(), 0.37);
        assert_eq!(f_or(fv(1.0), fv(0.37)).value(), 1.0);
        assert!((f_or(fv(0.2), fv(0.3)).value() - 0.44).abs() < 1e-15);
    }

    #[test]
    fn reductions() {
        assert_eq!(fand_reduce(&[1.0, 1.0, 1.0]).unwrap().value(), 1.0);
        assert_eq!(fand_reduce(&[0.9, 0.0]).unwrap().value(), 0.0);
        assert!((fand_reduce(&[0.9f64, 0.8, 0.5]).unwrap().value() - 0.36).abs() < 1e-15);

        assert_eq!(for_reduce(&[0.0, 0.0, 0.0]).unwrap().value(), 0.0);
        assert!((for_reduce(&[0.2f64, 0.3, 0.4]).unwrap().value() - 0.664).abs() < 1e-15);
        assert_eq!(for_reduce(&[0.4, 1.0, 0.7]).unwrap().value(), 1.0);
    }

    #[test]
    fn empty_reductions_rejected() {
        assert!(matches!(fand_reduce::<f64>(&[]), Err(Error::Empty(_))));
        assert!(matches!(for_reduce::<f64>(&[]), Err(Error::Empty(_))));
        assert!(FuzzyVector::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn out_of_band_rejected() {
        assert!(FuzzyValue::new(1.0 + 1e-9).is_err());
        assert!(FuzzyValue::new(-0.1).is_err());
        assert!(FuzzyValue::new(f64::NAN).is_err());
        assert!(for_reduce(&[0.2, 1.5]).is_err());
    }

    #[test]
    fn weighted_atom_examples() {
        let a = vec(&[0.2, 0.7, 1.0]);
        assert_eq!(weighted_atoms(&a, &vec(&[1.0, 1.0, 1.0])).unwrap(), a);
        assert_eq!(
            weighted_atoms(&a, &vec(&[0.0, 0.0, 0.0])).unwrap().as_slice(),
            &[1.0, 1.0, 1.0]
        );
        let out = weighted_atoms(&vec(&[0.0, 1.0]), &vec(&[0.9, 0.5])).unwrap();
        assert!((out[0] - 0.1).abs() < 1e-15);
        assert_eq!(out[1], 1.0);
        assert!(matches!(
            weighted_atoms(&vec(&[0.1]), &vec(&[0.1, 0.2])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let a = FuzzyValue::new(0.2f32).unwrap();
        let b = FuzzyValue::new(0.3f32).unwrap();
        assert!((f_or(a, b).value() - 0.44).abs() < 1e-6);
    }

    fn unit() -> impl Strategy<Value = f64> {
        0.0..=1.0f64
    }

    proptest! {
        #[test]
        fn binary_ops_close_over_unit(a in unit(), b in unit()) {
            for v in [fnot(fv(a)), fand(fv(a), fv(b)), f_or(fv(a), fv(b))] {
                prop_assert!((0.0..=1.0).contains(&v.value()));
            }
        }

        #[test]
        fn de_morgan(a in unit(), b in unit()) {
            let lhs = fnot(fand(fv(a), fv(b))).value();
            let rhs = f_or(fnot(fv(a)), fnot(fv(b))).value();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn or_reduce_closed_form(xs in prop::collection::vec(unit(), 1..64)) {
            let folded = for_reduce(&xs).unwrap().value();
            let closed = 1.0 - xs.iter().map(|x| 1.0 - x).product::<f64>();
            prop_assert!((folded - closed).abs() < 1e-12);
        }

        #[test]
        fn monotone_in_each_argument(a in unit(), b in unit(), d in 0.0..0.2f64) {
            let a2 = (a + d).min(1.0);
            prop_assert!(fand(fv(a2), fv(b)).value() >= fand(fv(a), fv(b)).value());
            prop_assert!(f_or(fv(a2), fv(b)).value() >= f_or(fv(a), fv(b)).value());
            let w = vec(&[b, 0.5]);
            let lo = weighted_atoms(&vec(&[a, 0.3]), &w).unwrap();
            let hi = weighted_atoms(&vec(&[a2, 0.3]), &w).unwrap();
            prop_assert!(hi[0] >= lo[0]);
            prop_assert!(fand_reduce(&[a2, b]).unwrap() >= fand_reduce(&[a, b]).unwrap());
            prop_assert!(for_reduce(&[a2, b]).unwrap() >= for_reduce(&[a, b]).unwrap());
        }
    }
}
