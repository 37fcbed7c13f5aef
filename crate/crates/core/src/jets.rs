//! Truncated Taylor polynomials in three variables, total order at most four.
//!
//! A [`Jet`] stores the Taylor coefficients `∂^α f / α!` of a scalar function
//! at a base point, for every multi-index `α = (a, b, c)` with
//! `a + b + c <= order`. Multiplication is a plain truncated convolution;
//! factorials only appear when a raw partial derivative is extracted.
//!
//! Storage is dense over the 35 monomials of degree `<= 4`, laid out in graded
//! order so that the monomials of degree `<= d` are always a prefix.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

/// Highest supported total order.
pub const MAX_ORDER: u8 = 4;

/// Number of monomials of total degree `<= MAX_ORDER` in three variables.
pub const NUM_COEFFS: usize = 35;

/// Number of monomials of total degree `<= d` in three variables.
const fn prefix_len(d: u8) -> usize {
    let d = d as usize;
    (d + 1) * (d + 2) * (d + 3) / 6
}

const fn build_monomials() -> [[u8; 3]; NUM_COEFFS] {
    let mut out = [[0u8; 3]; NUM_COEFFS];
    let mut n = 0;
    let mut d = 0u8;
    while d <= MAX_ORDER {
        let mut a = d as i32;
        while a >= 0 {
            let mut b = d as i32 - a;
            while b >= 0 {
                let c = d as i32 - a - b;
                out[n] = [a as u8, b as u8, c as u8];
                n += 1;
                b -= 1;
            }
            a -= 1;
        }
        d += 1;
    }
    out
}

const MONOMIALS: [[u8; 3]; NUM_COEFFS] = build_monomials();

const NO_INDEX: u8 = u8::MAX;

const fn build_index() -> [[[u8; 5]; 5]; 5] {
    let mut out = [[[NO_INDEX; 5]; 5]; 5];
    let mut n = 0;
    while n < NUM_COEFFS {
        let m = MONOMIALS[n];
        out[m[0] as usize][m[1] as usize][m[2] as usize] = n as u8;
        n += 1;
    }
    out
}

const INDEX: [[[u8; 5]; 5]; 5] = build_index();

const fn degree(n: usize) -> u8 {
    let m = MONOMIALS[n];
    m[0] + m[1] + m[2]
}

/// `SUM[i][j]` is the index of monomial `i` times monomial `j`, when that
/// product still has degree `<= MAX_ORDER`.
const fn build_sum() -> [[u8; NUM_COEFFS]; NUM_COEFFS] {
    let mut out = [[NO_INDEX; NUM_COEFFS]; NUM_COEFFS];
    let mut i = 0;
    while i < NUM_COEFFS {
        let mut j = 0;
        while j < NUM_COEFFS {
            if degree(i) + degree(j) <= MAX_ORDER {
                let a = MONOMIALS[i];
                let b = MONOMIALS[j];
                out[i][j] =
                    INDEX[(a[0] + b[0]) as usize][(a[1] + b[1]) as usize][(a[2] + b[2]) as usize];
            }
            j += 1;
        }
        i += 1;
    }
    out
}

const SUM: [[u8; NUM_COEFFS]; NUM_COEFFS] = build_sum();

const FACTORIAL: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];

/// Analytic functions that can be composed with a jet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Reciprocal,
    Sqrt,
    Exp,
    Sin,
    Cos,
    PowInt(i32),
}

impl fmt::Display for UnaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnaryOp::Reciprocal => f.write_str("reciprocal"),
            UnaryOp::Sqrt => f.write_str("sqrt"),
            UnaryOp::Exp => f.write_str("exp"),
            UnaryOp::Sin => f.write_str("sin"),
            UnaryOp::Cos => f.write_str("cos"),
            UnaryOp::PowInt(n) => write!(f, "pow_int({n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet order {0} is outside 0..={MAX_ORDER}")]
    InvalidOrder(u8),
    #[error("variable index {0} is outside 0..=2")]
    InvalidVariable(usize),
    #[error("multi-index {index:?} exceeds jet order {order}")]
    IndexBeyondOrder { index: [u8; 3], order: u8 },
    #[error("{op} is singular at base value {value}")]
    Singular { op: UnaryOp, value: f64 },
}

/// Truncated Taylor expansion of a scalar function of `(x, y, z)`.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    order: u8,
    coeffs: [f64; NUM_COEFFS],
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (n, c) in self.active().iter().enumerate() {
            if *c != 0.0 {
                let m = MONOMIALS[n];
                map.entry(&(m[0], m[1], m[2]), c);
            }
        }
        map.finish()
    }
}

fn check_order(order: u8) -> Result<(), JetError> {
    if order > MAX_ORDER {
        Err(JetError::InvalidOrder(order))
    } else {
        Ok(())
    }
}

impl Jet {
    /// The zero jet. Panics if `order > MAX_ORDER`.
    pub fn zero(order: u8) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} out of range");
        Jet { order, coeffs: [0.0; NUM_COEFFS] }
    }

    /// A constant function. Panics if `order > MAX_ORDER`.
    pub fn constant(value: f64, order: u8) -> Self {
        let mut j = Self::zero(order);
        j.coeffs[0] = value;
        j
    }

    /// The coordinate function `x_variable` at a point where it equals `value`.
    pub fn seed(value: f64, variable: usize, order: u8) -> Result<Self, JetError> {
        check_order(order)?;
        if variable > 2 {
            return Err(JetError::InvalidVariable(variable));
        }
        let mut j = Self::constant(value, order);
        if order >= 1 {
            // degree-one monomials are x, y, z at positions 1, 2, 3
            j.coeffs[1 + variable] = 1.0;
        }
        Ok(j)
    }

    /// Builds a jet from `(multi_index, taylor_coefficient)` pairs.
    pub fn from_coeffs<I>(order: u8, coeffs: I) -> Result<Self, JetError>
    where
        I: IntoIterator<Item = ([u8; 3], f64)>,
    {
        check_order(order)?;
        let mut j = Self::zero(order);
        for (index, value) in coeffs {
            let n = Self::slot(index, order)?;
            j.coeffs[n] = value;
        }
        Ok(j)
    }

    fn slot(index: [u8; 3], order: u8) -> Result<usize, JetError> {
        let total = index.iter().map(|&v| v as u32).sum::<u32>();
        if total > order as u32 {
            return Err(JetError::IndexBeyondOrder { index, order });
        }
        Ok(INDEX[index[0] as usize][index[1] as usize][index[2] as usize] as usize)
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    /// Constant term, i.e. the value at the base point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of `x^a y^b z^c`; zero for indices beyond the order.
    pub fn coeff(&self, index: [u8; 3]) -> f64 {
        Self::slot(index, self.order).map_or(0.0, |n| self.coeffs[n])
    }

    /// Non-zero-able coefficients, in graded order.
    fn active(&self) -> &[f64] {
        &self.coeffs[..prefix_len(self.order)]
    }

    /// Iterator over `(multi_index, coefficient)` for every in-range index.
    pub fn terms(&self) -> impl Iterator<Item = ([u8; 3], f64)> + '_ {
        self.active().iter().enumerate().map(|(n, &c)| (MONOMIALS[n], c))
    }

    /// Raw partial derivative `∂^(a+b+c) f / ∂x^a ∂y^b ∂z^c` at the base point.
    pub fn derivative(&self, index: [u8; 3]) -> Result<f64, JetError> {
        let n = Self::slot(index, self.order)?;
        let scale: f64 = index.iter().map(|&k| FACTORIAL[k as usize]).product();
        Ok(self.coeffs[n] * scale)
    }

    /// Drops every term of degree above `order`.
    pub fn truncate(&self, order: u8) -> Self {
        let order = order.min(self.order);
        let mut j = Self::zero(order);
        let len = prefix_len(order);
        j.coeffs[..len].copy_from_slice(&self.coeffs[..len]);
        j
    }

    /// Jet of `∂f/∂x_variable`, one order lower.
    ///
    /// Panics on an order-zero jet, whose derivative carries no information.
    pub fn partial(&self, variable: usize) -> Self {
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        assert!(variable < 3);
        let mut j = Self::zero(self.order - 1);
        for n in 0..prefix_len(j.order) {
            let mut m = MONOMIALS[n];
            m[variable] += 1;
            let src = INDEX[m[0] as usize][m[1] as usize][m[2] as usize] as usize;
            j.coeffs[n] = m[variable] as f64 * self.coeffs[src];
        }
        j
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut j = *self;
        for c in &mut j.coeffs[..prefix_len(self.order)] {
            *c *= factor;
        }
        j
    }

    pub fn add_constant(&self, value: f64) -> Self {
        let mut j = *self;
        j.coeffs[0] += value;
        j
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let mut out = Jet::zero(order);
        for i in 0..prefix_len(order) {
            let a = self.coeffs[i];
            if a == 0.0 {
                continue;
            }
            let rest = order - degree(i);
            for j in 0..prefix_len(rest) {
                out.coeffs[SUM[i][j] as usize] += a * other.coeffs[j];
            }
        }
        out
    }

    /// Composition `f ∘ self` for one of the supported analytic functions.
    pub fn unary(&self, op: UnaryOp) -> Result<Jet, JetError> {
        let a0 = self.value();
        let singular = || JetError::Singular { op, value: a0 };
        let k_max = self.order as usize;
        let mut series = [0.0; MAX_ORDER as usize + 1];
        match op {
            UnaryOp::Reciprocal => {
                if a0 == 0.0 || !a0.is_finite() {
                    return Err(singular());
                }
                let inv = 1.0 / a0;
                let mut term = inv;
                for c in series.iter_mut().take(k_max + 1) {
                    *c = term;
                    term *= -inv;
                }
            }
            UnaryOp::Sqrt => {
                if !(a0 > 0.0) || !a0.is_finite() {
                    return Err(singular());
                }
                // sqrt(a0) * binom(1/2, k) / a0^k
                let mut term = a0.sqrt();
                for (k, c) in series.iter_mut().enumerate().take(k_max + 1) {
                    *c = term;
                    term *= (0.5 - k as f64) / ((k + 1) as f64) / a0;
                }
            }
            UnaryOp::Exp => {
                let e = a0.exp();
                for (k, c) in series.iter_mut().enumerate().take(k_max + 1) {
                    *c = e / FACTORIAL[k];
                }
            }
            UnaryOp::Sin | UnaryOp::Cos => {
                let (s, c0) = a0.sin_cos();
                let cycle = match op {
                    UnaryOp::Sin => [s, c0, -s, -c0],
                    _ => [c0, -s, -c0, s],
                };
                for (k, c) in series.iter_mut().enumerate().take(k_max + 1) {
                    *c = cycle[k % 4] / FACTORIAL[k];
                }
            }
            UnaryOp::PowInt(n) => return self.pow_int(n),
        }
        // Horner in h = self - a0, which has no constant term.
        let mut h = *self;
        h.coeffs[0] = 0.0;
        let mut acc = Jet::constant(series[k_max], self.order);
        for k in (0..k_max).rev() {
            acc = acc.mul_jet(&h);
            acc.coeffs[0] += series[k];
        }
        Ok(acc)
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        self.unary(UnaryOp::Reciprocal)
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        self.unary(UnaryOp::Sqrt)
    }

    /// Integer power by repeated squaring; negative exponents take the
    /// reciprocal of the positive power, matching `f64::powi` at order zero.
    pub fn pow_int(&self, n: i32) -> Result<Jet, JetError> {
        let mut e = n.unsigned_abs();
        let mut acc = Jet::constant(1.0, self.order);
        let mut sq = *self;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_jet(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_jet(&sq);
            }
        }
        if n < 0 {
            acc = acc.recip().map_err(|_| JetError::Singular {
                op: UnaryOp::PowInt(n),
                value: self.value(),
            })?;
        }
        Ok(acc)
    }

    /// Quotient `self / rhs`; the constant term is the plain `f64` quotient.
    pub fn div(&self, rhs: &Jet) -> Result<Jet, JetError> {
        let mut out = self.mul_jet(&rhs.recip()?);
        out.coeffs[0] = self.value() / rhs.value();
        Ok(out)
    }

    /// Largest coefficient magnitude difference, over the common order.
    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        let len = prefix_len(self.order.min(other.order));
        self.coeffs[..len]
            .iter()
            .zip(&other.coeffs[..len])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = self.truncate(order);
        for n in 0..prefix_len(order) {
            out.coeffs[n] += rhs.coeffs[n];
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = self.truncate(order);
        for n in 0..prefix_len(order) {
            out.coeffs[n] -= rhs.coeffs[n];
        }
        out
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_jet(&rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

/// Coordinate jet; see [`Jet::seed`].
pub fn jet_seed(value: f64, variable: usize, order: u8) -> Result<Jet, JetError> {
    Jet::seed(value, variable, order)
}

pub fn jet_mul(a: &Jet, b: &Jet) -> Jet {
    a.mul_jet(b)
}

pub fn jet_add(a: &Jet, b: &Jet) -> Jet {
    *a + *b
}

pub fn jet_sub(a: &Jet, b: &Jet) -> Jet {
    *a - *b
}

pub fn jet_scale(a: &Jet, factor: f64) -> Jet {
    a.scale(factor)
}

pub fn jet_unary(op: UnaryOp, a: &Jet) -> Result<Jet, JetError> {
    a.unary(op)
}

pub fn jet_derivative(a: &Jet, index: [u8; 3]) -> Result<f64, JetError> {
    a.derivative(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coeffs_of(j: &Jet) -> Vec<([u8; 3], f64)> {
        j.terms().filter(|(_, c)| *c != 0.0).collect()
    }

    #[test]
    fn layout_is_graded_and_consistent() {
        assert_eq!(MONOMIALS[0], [0, 0, 0]);
        assert_eq!(MONOMIALS[1..4], [[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        for d in 0..=MAX_ORDER {
            for n in 0..prefix_len(d) {
                assert!(degree(n) <= d);
            }
        }
        for (n, m) in MONOMIALS.iter().enumerate() {
            assert_eq!(INDEX[m[0] as usize][m[1] as usize][m[2] as usize] as usize, n);
        }
    }

    #[test]
    fn seed_examples() {
        let x = jet_seed(3.0, 0, 2).unwrap();
        assert_eq!(coeffs_of(&x), vec![([0, 0, 0], 3.0), ([1, 0, 0], 1.0)]);
        let z = jet_seed(0.0, 2, 4).unwrap();
        assert_eq!(coeffs_of(&z), vec![([0, 0, 1], 1.0)]);
        let sq = jet_mul(&x, &x);
        assert_eq!(
            coeffs_of(&sq),
            vec![([0, 0, 0], 9.0), ([1, 0, 0], 6.0), ([2, 0, 0], 1.0)]
        );
        assert_eq!(jet_seed(1.0, 0, 5), Err(JetError::InvalidOrder(5)));
        assert_eq!(jet_seed(1.0, 3, 2), Err(JetError::InvalidVariable(3)));
    }

    #[test]
    fn mul_add_examples() {
        let j = Jet::from_coeffs(3, [([0, 0, 0], 1.5), ([1, 2, 0], -2.0), ([0, 0, 2], 0.25)]).unwrap();
        assert_eq!(jet_mul(&Jet::constant(1.0, 4), &j), j);
        assert_eq!(jet_add(&j, &(-j)), Jet::zero(3));

        let x = jet_seed(2.0, 0, 4).unwrap();
        let y = jet_seed(5.0, 1, 4).unwrap();
        assert_eq!(
            coeffs_of(&(x * y)),
            vec![([0, 0, 0], 10.0), ([1, 0, 0], 5.0), ([0, 1, 0], 2.0), ([1, 1, 0], 1.0)]
        );
    }

    #[test]
    fn mixed_orders_truncate_to_smaller() {
        let a = jet_seed(1.0, 0, 4).unwrap();
        let b = jet_seed(1.0, 1, 2).unwrap();
        assert_eq!((a * b).order(), 2);
        assert_eq!((a + b).order(), 2);
        assert_eq!((b - a).order(), 2);
    }

    #[test]
    fn unary_examples() {
        let half = jet_unary(UnaryOp::Reciprocal, &Jet::constant(2.0, 4)).unwrap();
        assert_eq!(half, Jet::constant(0.5, 4));

        let x = jet_seed(0.0, 0, 2).unwrap();
        let one_plus_x2 = (x * x).add_constant(1.0);
        let r = jet_unary(UnaryOp::Reciprocal, &one_plus_x2).unwrap();
        assert_eq!(coeffs_of(&r), vec![([0, 0, 0], 1.0), ([2, 0, 0], -1.0)]);

        let err = jet_unary(UnaryOp::Sqrt, &Jet::constant(-1.0, 3)).unwrap_err();
        assert!(matches!(err, JetError::Singular { op: UnaryOp::Sqrt, .. }));
        let err = jet_unary(UnaryOp::Reciprocal, &jet_seed(0.0, 1, 3).unwrap()).unwrap_err();
        assert!(matches!(err, JetError::Singular { op: UnaryOp::Reciprocal, .. }));
        let err = jet_seed(0.0, 1, 3).unwrap().pow_int(-2).unwrap_err();
        assert!(matches!(err, JetError::Singular { op: UnaryOp::PowInt(-2), .. }));
    }

    #[test]
    fn univariate_series_match_known_expansions() {
        let x = jet_seed(0.0, 0, 4).unwrap();
        let e = x.unary(UnaryOp::Exp).unwrap();
        let s = x.unary(UnaryOp::Sin).unwrap();
        let c = x.unary(UnaryOp::Cos).unwrap();
        let r = x.add_constant(1.0).sqrt().unwrap();
        for (k, (ev, sv, cv, rv)) in [
            (1.0, 0.0, 1.0, 1.0),
            (1.0, 1.0, 0.0, 0.5),
            (0.5, 0.0, -0.5, -0.125),
            (1.0 / 6.0, -1.0 / 6.0, 0.0, 0.0625),
            (1.0 / 24.0, 0.0, 1.0 / 24.0, -0.0390625),
        ]
        .into_iter()
        .enumerate()
        {
            let idx = [k as u8, 0, 0];
            assert!((e.coeff(idx) - ev).abs() < 1e-15);
            assert!((s.coeff(idx) - sv).abs() < 1e-15);
            assert!((c.coeff(idx) - cv).abs() < 1e-15);
            assert!((r.coeff(idx) - rv).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_examples() {
        let x = jet_seed(3.0, 0, 2).unwrap();
        assert_eq!(jet_derivative(&(x * x), [2, 0, 0]).unwrap(), 2.0);
        let j = Jet::from_coeffs(2, [([0, 0, 0], 7.5), ([0, 1, 1], 3.0)]).unwrap();
        assert_eq!(jet_derivative(&j, [0, 0, 0]).unwrap(), 7.5);

        let x = jet_seed(0.0, 0, 4).unwrap();
        let y = jet_seed(0.0, 1, 4).unwrap();
        let f = (x * x + y * y).add_constant(1.0);
        assert_eq!(jet_derivative(&f, [0, 2, 0]).unwrap(), 2.0);
        assert!(matches!(
            jet_derivative(&x.truncate(2), [1, 1, 1]),
            Err(JetError::IndexBeyondOrder { .. })
        ));
    }

    #[test]
    fn partial_lowers_order() {
        // f = x^2 y at (1, 2, 0): ∂_x f = 2xy
        let x = jet_seed(1.0, 0, 4).unwrap();
        let y = jet_seed(2.0, 1, 4).unwrap();
        let f = x * x * y;
        let fx = f.partial(0);
        assert_eq!(fx.order(), 3);
        assert_eq!(fx.value(), 4.0);
        assert_eq!(fx.derivative([1, 0, 0]).unwrap(), 4.0);
        assert_eq!(fx.derivative([0, 1, 0]).unwrap(), 2.0);
        assert_eq!(fx.derivative([1, 1, 0]).unwrap(), 2.0);
    }

    fn arb_jet() -> impl Strategy<Value = Jet> {
        (0..=MAX_ORDER, prop::array::uniform32(-2.0f64..2.0)).prop_map(|(order, c)| {
            let mut j = Jet::zero(order);
            for n in 0..prefix_len(order) {
                j.coeffs[n] = c[n % 32];
            }
            j
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_jet(), b in arb_jet(), c in arb_jet()) {
            prop_assert!(((a + b) + c).max_abs_diff(&(a + (b + c))) < 1e-14);
            prop_assert!((a + b).max_abs_diff(&(b + a)) < 1e-14);
            prop_assert!((a * b).max_abs_diff(&(b * a)) < 1e-14);
            // products of three coefficients bounded by 2 in magnitude, summed
            // over at most 35 terms, keep rounding well under 1e-13
            prop_assert!(((a * b) * c).max_abs_diff(&(a * (b * c))) < 1e-12);
            prop_assert!((a * (b + c)).max_abs_diff(&(a * b + a * c)) < 1e-13);
        }

        #[test]
        fn reciprocal_inverts(j in arb_jet(), c0 in 0.5f64..2.0) {
            let mut j = j.scale(0.25);
            j.coeffs[0] = c0;
            let one = j.recip().unwrap() * j;
            prop_assert!(one.max_abs_diff(&Jet::constant(1.0, j.order())) < 1e-12);
        }

        #[test]
        fn polynomial_derivatives(
            p in prop::array::uniform5(-3.0f64..3.0),
            x0 in -2.0f64..2.0,
            var in 0usize..3,
        ) {
            let x = Jet::seed(x0, var, 4).unwrap();
            let mut acc = Jet::constant(p[4], 4);
            for k in (0..4).rev() {
                acc = (acc * x).add_constant(p[k]);
            }
            // differentiate the coefficient list by hand
            let mut poly = p.to_vec();
            for k in 0..=4u8 {
                let expected: f64 = poly.iter().enumerate().map(|(i, c)| c * x0.powi(i as i32)).sum();
                let mut idx = [0u8; 3];
                idx[var] = k;
                let got = acc.derivative(idx).unwrap();
                prop_assert!((got - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
                poly = poly.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
            }
        }
    }
}
