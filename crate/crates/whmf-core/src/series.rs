//! Truncated Laurent series in q over arbitrary-precision rationals.
//!
//! A [`QSeries`] stores the coefficients of q^v, …, q^(P−1) together with the
//! pair (v, P): the series is known modulo O(q^P) and nothing beyond P is
//! ever invented. Binary operations propagate precision by the min-rule:
//!
//! - add/sub: P = min(P_a, P_b)
//! - mul:     P = min(P_a + v_b, P_b + v_a), v = v_a + v_b
//! - invert:  P = P_a − 2 v_a, v = −v_a
//!
//! so the reported precision of a composite expression is never larger than
//! what the operands justify. Coefficients are exact `BigRational`s; no
//! floating point enters this module.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::par;

/// Exact rational coefficient type: reduced fraction with positive denominator.
pub type Rat = num_rational::BigRational;

/// Parse "a" or "a/b" into a rational.
pub fn rat_from_str(s: &str) -> Result<Rat, SeriesError> {
    let mk_err = || SeriesError::Parse(s.to_string());
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.parse().map_err(|_| mk_err())?;
            let d: BigInt = d.parse().map_err(|_| mk_err())?;
            if d.is_zero() {
                return Err(mk_err());
            }
            Ok(Rat::new(n, d))
        }
        None => {
            let n: BigInt = s.parse().map_err(|_| mk_err())?;
            Ok(Rat::from_integer(n))
        }
    }
}

/// Render a rational as "a" (denominator 1) or "a/b".
pub fn rat_to_str(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeriesError {
    /// Inversion of a series that is zero to its tracked precision.
    #[error("cannot invert: series is zero up to O(q^{0})")]
    ZeroLeadingCoefficient(i64),
    /// integrate_theta hit a nonzero q^0 coefficient.
    #[error("cannot integrate against theta: nonzero constant term {0}")]
    NonzeroConstantTerm(String),
    /// A denominator in bivariate division whose leading outer coefficient
    /// is not an invertible inner series.
    #[error("bivariate division by a non-unit leading coefficient")]
    NonUnitDenominator,
    /// Malformed textual rational or series.
    #[error("malformed rational or series literal: {0}")]
    Parse(String),
}

/// Truncated Laurent series Σ_{n=v}^{P−1} a_n q^n + O(q^P).
///
/// Invariants: the first stored coefficient is nonzero unless the series is
/// identically zero up to its precision (then `coeffs` is empty and v = P);
/// `coeffs.len() == P − v`; trailing stored zeros are meaningful (they are
/// known-zero coefficients, not absence of knowledge).
#[derive(Clone, PartialEq, Eq)]
pub struct QSeries {
    val: i64,
    prec: i64,
    coeffs: Vec<Rat>,
}

impl QSeries {
    /// Build from the coefficients of q^val, q^{val+1}, …; trims leading
    /// zeros and truncates or zero-pads so that exactly P − v coefficients
    /// are stored.
    pub fn new(val: i64, mut coeffs: Vec<Rat>, prec: i64) -> Self {
        assert!(val <= prec, "valuation {val} beyond precision {prec}");
        let want = (prec - val) as usize;
        coeffs.truncate(want);
        coeffs.resize(want, Rat::zero());
        let lead = coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => Self { val: prec, prec, coeffs: Vec::new() },
            Some(k) => {
                coeffs.drain(..k);
                Self { val: val + k as i64, prec, coeffs }
            }
        }
    }

    /// The zero series, known to O(q^prec).
    pub fn zero(prec: i64) -> Self {
        Self { val: prec, prec, coeffs: Vec::new() }
    }

    /// The constant series c + O(q^prec).
    pub fn constant(c: Rat, prec: i64) -> Self {
        Self::monomial(0, c, prec)
    }

    /// The series 1 + O(q^prec).
    pub fn one(prec: i64) -> Self {
        Self::constant(Rat::one(), prec)
    }

    /// c·q^exp + O(q^prec).
    pub fn monomial(exp: i64, c: Rat, prec: i64) -> Self {
        if c.is_zero() || exp >= prec {
            return Self::zero(prec);
        }
        let mut coeffs = vec![Rat::zero(); (prec - exp) as usize];
        coeffs[0] = c;
        Self { val: exp, prec, coeffs }
    }

    /// Convenience constructor from small integers (tests, generators).
    pub fn from_integers(val: i64, ints: &[i64], prec: i64) -> Self {
        Self::new(val, ints.iter().map(|&n| Rat::from_integer(n.into())).collect(), prec)
    }

    pub fn valuation(&self) -> i64 {
        self.val
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of q^n; panics if n is at or beyond the tracked precision.
    pub fn coeff(&self, n: i64) -> Rat {
        self.try_coeff(n)
            .unwrap_or_else(|| panic!("coefficient of q^{n} beyond tracked precision O(q^{})", self.prec))
    }

    /// Coefficient of q^n, or None if it is not determined at this precision.
    pub fn try_coeff(&self, n: i64) -> Option<Rat> {
        if n >= self.prec {
            return None;
        }
        if n < self.val {
            return Some(Rat::zero());
        }
        Some(self.coeffs[(n - self.val) as usize].clone())
    }

    /// Stored (exponent, coefficient) pairs including known zeros.
    pub fn iter_known(&self) -> impl Iterator<Item = (i64, &Rat)> {
        self.coeffs.iter().enumerate().map(move |(i, c)| (self.val + i as i64, c))
    }

    /// True if every coefficient up to the precision is an integer.
    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.denom().is_one())
    }

    /// First exponent whose coefficient is non-integral, if any.
    pub fn first_non_integral(&self) -> Option<(i64, Rat)> {
        self.iter_known().find(|(_, c)| !c.denom().is_one()).map(|(n, c)| (n, c.clone()))
    }

    /// Lower the precision to new_prec (≤ current).
    pub fn truncate(&self, new_prec: i64) -> Self {
        assert!(new_prec <= self.prec, "cannot extend precision {} to {new_prec}", self.prec);
        if new_prec <= self.val {
            return Self::zero(new_prec);
        }
        let keep = (new_prec - self.val) as usize;
        Self::new(self.val, self.coeffs[..keep].to_vec(), new_prec)
    }

    /// Multiply by q^e.
    pub fn shift(&self, e: i64) -> Self {
        Self { val: self.val + e, prec: self.prec + e, coeffs: self.coeffs.clone() }
    }

    /// Multiply every coefficient by a scalar.
    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero(self.prec);
        }
        Self {
            val: self.val,
            prec: self.prec,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Substitute q ↦ q^l for l ≥ 1. Knowing a(q) mod q^P determines a(q^l)
    /// mod q^{lP}: exponents that are not multiples of l are known zeros.
    pub fn substitute_power(&self, l: i64) -> Self {
        assert!(l >= 1);
        if self.is_zero() {
            return Self::zero(self.prec * l);
        }
        let mut coeffs = vec![Rat::zero(); ((self.prec - self.val) as usize - 1) * l as usize + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i * l as usize] = c.clone();
        }
        Self::new(self.val * l, coeffs, self.prec * l)
    }

    /// Product with min-rule precision min(P_a + v_b, P_b + v_a).
    pub fn mul(&self, rhs: &Self) -> Self {
        let prec = (self.prec + rhs.val).min(rhs.prec + self.val);
        if self.is_zero() || rhs.is_zero() {
            return Self::zero(prec);
        }
        let val = self.val + rhs.val;
        let n_out = (prec - val) as usize;
        let (a, b) = (&self.coeffs, &rhs.coeffs);
        let conv = |n: usize| -> Rat {
            let lo = n.saturating_sub(b.len() - 1);
            let hi = n.min(a.len() - 1);
            let mut acc = Rat::zero();
            for i in lo..=hi {
                if !a[i].is_zero() && !b[n - i].is_zero() {
                    acc += &a[i] * &b[n - i];
                }
            }
            acc
        };
        let coeffs = par::map_indexed_auto(n_out, a.len().min(b.len()), conv);
        Self::new(val, coeffs, prec)
    }

    /// Sequential product, for benchmarking against the parallel path.
    pub fn mul_sequential(&self, rhs: &Self) -> Self {
        let prec = (self.prec + rhs.val).min(rhs.prec + self.val);
        if self.is_zero() || rhs.is_zero() {
            return Self::zero(prec);
        }
        let val = self.val + rhs.val;
        let n_out = (prec - val) as usize;
        let (a, b) = (&self.coeffs, &rhs.coeffs);
        let coeffs = (0..n_out)
            .map(|n| {
                let lo = n.saturating_sub(b.len() - 1);
                let hi = n.min(a.len() - 1);
                let mut acc = Rat::zero();
                for i in lo..=hi {
                    if !a[i].is_zero() && !b[n - i].is_zero() {
                        acc += &a[i] * &b[n - i];
                    }
                }
                acc
            })
            .collect();
        Self::new(val, coeffs, prec)
    }

    /// Multiplicative inverse: valuation −v, precision P − 2v.
    pub fn invert(&self) -> Result<Self, SeriesError> {
        if self.is_zero() {
            return Err(SeriesError::ZeroLeadingCoefficient(self.prec));
        }
        let len = self.coeffs.len();
        let a0 = &self.coeffs[0];
        let inv0 = a0.recip();
        let mut b: Vec<Rat> = Vec::with_capacity(len);
        b.push(inv0.clone());
        for n in 1..len {
            let mut acc = Rat::zero();
            for j in 1..=n {
                if !self.coeffs[j].is_zero() && !b[n - j].is_zero() {
                    acc += &self.coeffs[j] * &b[n - j];
                }
            }
            b.push(-(acc * &inv0));
        }
        Ok(Self::new(-self.val, b, self.prec - 2 * self.val))
    }

    /// The operator q·d/dq: multiplies the coefficient of q^n by n.
    pub fn theta(&self) -> Self {
        let coeffs = self
            .iter_known()
            .map(|(n, c)| c * Rat::from_integer(n.into()))
            .collect();
        Self::new(self.val, coeffs, self.prec)
    }

    /// Inverse of [`theta`](Self::theta) on series with zero constant term:
    /// divides the coefficient of q^n by n and forces the constant term to 0.
    pub fn integrate_theta(&self) -> Result<Self, SeriesError> {
        if let Some(c0) = self.try_coeff(0) {
            if !c0.is_zero() {
                return Err(SeriesError::NonzeroConstantTerm(rat_to_str(&c0)));
            }
        }
        let coeffs = self
            .iter_known()
            .map(|(n, c)| if n == 0 { Rat::zero() } else { c / Rat::from_integer(n.into()) })
            .collect();
        Ok(Self::new(self.val, coeffs, self.prec))
    }

    /// Integer power; negative exponents go through [`invert`](Self::invert).
    /// The zeroth power is 1 carried to the relative precision P − v.
    pub fn pow(&self, e: i64) -> Result<Self, SeriesError> {
        if e == 0 {
            return Ok(Self::one(self.prec - self.val));
        }
        let (mut base, mut e) = if e < 0 { (self.invert()?, (-e) as u64) } else { (self.clone(), e as u64) };
        let mut acc: Option<Self> = None;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base),
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.mul(&base);
        }
        Ok(acc.unwrap())
    }

    /// Serializable form: (valuation, precision, decimal coefficient strings).
    pub fn to_repr(&self) -> QSeriesRepr {
        QSeriesRepr {
            valuation: self.val,
            precision: self.prec,
            coefficients: self.coeffs.iter().map(rat_to_str).collect(),
        }
    }

    pub fn from_repr(repr: &QSeriesRepr) -> Result<Self, SeriesError> {
        let coeffs = repr
            .coefficients
            .iter()
            .map(|s| rat_from_str(s))
            .collect::<Result<Vec<_>, _>>()?;
        if repr.valuation + coeffs.len() as i64 != repr.precision && !(coeffs.is_empty() && repr.valuation == repr.precision) {
            return Err(SeriesError::Parse(format!(
                "coefficient count {} inconsistent with (valuation {}, precision {})",
                coeffs.len(),
                repr.valuation,
                repr.precision
            )));
        }
        Ok(Self::new(repr.valuation, coeffs, repr.precision))
    }
}

/// Wire form of a [`QSeries`]: rationals as "a" or "a/b" decimal strings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct QSeriesRepr {
    pub valuation: i64,
    pub precision: i64,
    pub coefficients: Vec<String>,
}

fn add_impl(a: &QSeries, b: &QSeries, negate_b: bool) -> QSeries {
    let prec = a.prec.min(b.prec);
    let val = a.val.min(b.val).min(prec);
    let mut coeffs = vec![Rat::zero(); (prec - val) as usize];
    for (n, c) in a.iter_known() {
        if n < prec {
            coeffs[(n - val) as usize] += c;
        }
    }
    for (n, c) in b.iter_known() {
        if n < prec {
            if negate_b {
                coeffs[(n - val) as usize] -= c;
            } else {
                coeffs[(n - val) as usize] += c;
            }
        }
    }
    QSeries::new(val, coeffs, prec)
}

impl Add for &QSeries {
    type Output = QSeries;
    fn add(self, rhs: &QSeries) -> QSeries {
        add_impl(self, rhs, false)
    }
}

impl Sub for &QSeries {
    type Output = QSeries;
    fn sub(self, rhs: &QSeries) -> QSeries {
        add_impl(self, rhs, true)
    }
}

impl Neg for &QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        QSeries {
            val: self.val,
            prec: self.prec,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &QSeries {
    type Output = QSeries;
    fn mul(self, rhs: &QSeries) -> QSeries {
        QSeries::mul(self, rhs)
    }
}

impl fmt::Debug for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "O(q^{})", self.prec);
        }
        let mut first = true;
        for (n, c) in self.iter_known() {
            if c.is_zero() {
                continue;
            }
            let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {sign} ")?;
            }
            let ms = rat_to_str(&mag);
            match n {
                0 => write!(f, "{ms}")?,
                1 if mag.is_one() => write!(f, "q")?,
                1 => write!(f, "{ms}*q")?,
                _ if mag.is_one() => write!(f, "q^{n}")?,
                _ => write!(f, "{ms}*q^{n}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(q^{})", self.prec)
    }
}
