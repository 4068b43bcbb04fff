//! Self-contained fixed-point big-float arithmetic.
//!
//! Values are BigInt mantissas at a common binary scale s: x = m·2⁻ˢ. The
//! working scale is the requested precision plus guard bits; individual
//! operations round toward zero, so absolute errors stay within a few ulp
//! and the guard absorbs accumulation across series evaluation. This is the
//! only place floating point (of any kind) lives; everything reconstructed
//! from it is re-verified exactly.

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

use crate::series::Rat;

/// Extra mantissa bits beyond the requested working precision.
pub const GUARD_BITS: u32 = 64;

/// Fixed-point real number m·2⁻ˢ.
#[derive(Clone, PartialEq, Eq)]
pub struct Fix {
    m: BigInt,
    s: u32,
}

impl Fix {
    pub fn zero(s: u32) -> Self {
        Self { m: BigInt::zero(), s }
    }

    pub fn one(s: u32) -> Self {
        Self { m: BigInt::from(1) << s, s }
    }

    pub fn from_i64(v: i64, s: u32) -> Self {
        Self { m: BigInt::from(v) << s, s }
    }

    /// Nearest fixed-point value to a rational.
    pub fn from_rat(r: &Rat, s: u32) -> Self {
        let num = r.numer() << (s + 1);
        let den = r.denom();
        let twice = num / den;
        let m = (twice + BigInt::from(if r.numer().is_negative() { -1 } else { 1 })) >> 1;
        Self { m, s }
    }

    /// 10^e as a fixed-point value (e may be negative): handy for tolerances.
    pub fn pow10(e: i64, s: u32) -> Self {
        if e >= 0 {
            Self::from_rat(&Rat::from_integer(BigInt::from(10).pow(e as u32)), s)
        } else {
            Self::from_rat(&Rat::new(1.into(), BigInt::from(10).pow((-e) as u32)), s)
        }
    }

    pub fn scale(&self) -> u32 {
        self.s
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.m
    }

    pub fn to_rat(&self) -> Rat {
        Rat::new(self.m.clone(), BigInt::from(1) << self.s)
    }

    pub fn to_f64(&self) -> f64 {
        // split to keep exponents in range
        let bits = self.m.bits() as i64;
        if bits <= 900 {
            return self.m.to_f64().unwrap_or(0.0) / 2f64.powi(self.s as i32);
        }
        let shift = bits - 512;
        let head = (&self.m >> shift).to_f64().unwrap_or(0.0);
        head * 2f64.powi((shift - self.s as i64) as i32)
    }

    pub fn is_zero(&self) -> bool {
        self.m.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.m.is_negative()
    }

    pub fn abs(&self) -> Self {
        Self { m: self.m.abs(), s: self.s }
    }

    pub fn neg(&self) -> Self {
        Self { m: -&self.m, s: self.s }
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert_eq!(self.s, o.s);
        Self { m: &self.m + &o.m, s: self.s }
    }

    pub fn sub(&self, o: &Self) -> Self {
        debug_assert_eq!(self.s, o.s);
        Self { m: &self.m - &o.m, s: self.s }
    }

    pub fn mul(&self, o: &Self) -> Self {
        debug_assert_eq!(self.s, o.s);
        Self { m: (&self.m * &o.m) >> self.s, s: self.s }
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        Self { m: &self.m * k, s: self.s }
    }

    pub fn div(&self, o: &Self) -> Self {
        debug_assert_eq!(self.s, o.s);
        assert!(!o.m.is_zero(), "fixed-point division by zero");
        Self { m: (&self.m << self.s) / &o.m, s: self.s }
    }

    pub fn div_i64(&self, k: i64) -> Self {
        Self { m: &self.m / k, s: self.s }
    }

    pub fn recip(&self) -> Self {
        Self::one(self.s).div(self)
    }

    /// Multiply by 2^k (k may be negative).
    pub fn shl(&self, k: i32) -> Self {
        if k >= 0 {
            Self { m: &self.m << (k as u32), s: self.s }
        } else {
            Self { m: &self.m >> ((-k) as u32), s: self.s }
        }
    }

    /// Square root (floor in the last place); panics on negative input.
    pub fn sqrt(&self) -> Self {
        assert!(!self.m.is_negative(), "sqrt of negative fixed-point value");
        Self { m: (&self.m << self.s).sqrt(), s: self.s }
    }

    pub fn cmp_abs(&self, o: &Self) -> Ordering {
        self.m.abs().cmp(&o.m.abs())
    }

    /// Integer floor.
    pub fn floor_i64(&self) -> i64 {
        let f = &self.m >> self.s;
        // BigInt shr rounds toward negative infinity, which is floor
        f.to_i64().expect("floor fits i64")
    }

    /// Fractional part in [0, 1).
    pub fn fract(&self) -> Self {
        let f = self.floor_i64();
        self.sub(&Self::from_i64(f, self.s))
    }

    pub fn lt(&self, o: &Self) -> bool {
        self.m < o.m
    }
}

impl fmt::Debug for Fix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e}@{}bits", self.to_f64(), self.s)
    }
}

/// Complex number over [`Fix`].
#[derive(Clone, PartialEq, Eq)]
pub struct CFix {
    pub re: Fix,
    pub im: Fix,
}

impl CFix {
    pub fn new(re: Fix, im: Fix) -> Self {
        debug_assert_eq!(re.scale(), im.scale());
        Self { re, im }
    }

    pub fn zero(s: u32) -> Self {
        Self { re: Fix::zero(s), im: Fix::zero(s) }
    }

    pub fn one(s: u32) -> Self {
        Self { re: Fix::one(s), im: Fix::zero(s) }
    }

    pub fn from_rat_pair(re: &Rat, im: &Rat, s: u32) -> Self {
        Self { re: Fix::from_rat(re, s), im: Fix::from_rat(im, s) }
    }

    pub fn scale(&self) -> u32 {
        self.re.scale()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { re: self.re.sub(&o.re), im: self.im.sub(&o.im) }
    }

    pub fn neg(&self) -> Self {
        Self { re: self.re.neg(), im: self.im.neg() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let re = self.re.mul(&o.re).sub(&self.im.mul(&o.im));
        let im = self.re.mul(&o.im).add(&self.im.mul(&o.re));
        Self { re, im }
    }

    pub fn mul_fix(&self, o: &Fix) -> Self {
        Self { re: self.re.mul(o), im: self.im.mul(o) }
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: self.im.neg() }
    }

    pub fn norm_sqr(&self) -> Fix {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }

    pub fn abs(&self) -> Fix {
        self.norm_sqr().sqrt()
    }

    pub fn div(&self, o: &Self) -> Self {
        let d = o.norm_sqr();
        let num = self.mul(&o.conj());
        Self { re: num.re.div(&d), im: num.im.div(&d) }
    }

    pub fn recip(&self) -> Self {
        Self::one(self.scale()).div(self)
    }

    pub fn powi(&self, e: i64) -> Self {
        if e == 0 {
            return Self::one(self.scale());
        }
        let mut base = if e < 0 { self.recip() } else { self.clone() };
        let mut e = e.unsigned_abs();
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
        acc.expect("nonzero exponent")
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Debug for CFix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.re, self.im)
    }
}

/// Σ_j (−1)^j / ((2j+1)·x^{2j+1}) = atan(1/x) for integer x ≥ 2 (exact
/// integer recursion; error ≤ a few ulp).
fn atan_recip_int(x: i64, s: u32) -> Fix {
    let mut term = (BigInt::from(1) << s) / x;
    let x2 = x * x;
    let mut acc = BigInt::zero();
    let mut j: i64 = 0;
    while !term.is_zero() {
        let contrib = &term / (2 * j + 1);
        if j % 2 == 0 {
            acc += contrib;
        } else {
            acc -= contrib;
        }
        term /= x2;
        j += 1;
    }
    Fix { m: acc, s }
}

/// π by Machin's formula 16·atan(1/5) − 4·atan(1/239).
pub fn pi(s: u32) -> Fix {
    atan_recip_int(5, s).mul_i64(16).sub(&atan_recip_int(239, s).mul_i64(4))
}

/// π by the Störmer formula 24·atan(1/8) + 8·atan(1/57) + 4·atan(1/239);
/// used as an independent route in tests.
pub fn pi_stormer(s: u32) -> Fix {
    atan_recip_int(8, s)
        .mul_i64(24)
        .add(&atan_recip_int(57, s).mul_i64(8))
        .add(&atan_recip_int(239, s).mul_i64(4))
}

/// exp(x) for real fixed-point x with |x| ≲ 2⁶⁰: argument scaling by 2^k,
/// Taylor, then k squarings.
pub fn exp_real(x: &Fix) -> Fix {
    let s = x.scale();
    // halve until |x|/2^k < 1/4
    let quarter = Fix::one(s).shl(-2);
    let mut k = 0u32;
    let mut y = x.clone();
    while y.abs().cmp_abs(&quarter) == Ordering::Greater {
        y = y.shl(-1);
        k += 1;
        assert!(k < 80, "exp argument out of supported range");
    }
    // Taylor Σ y^j / j!
    let mut term = Fix::one(s);
    let mut acc = Fix::one(s);
    let mut j: i64 = 1;
    loop {
        term = term.mul(&y).div_i64(j);
        if term.is_zero() {
            break;
        }
        acc = acc.add(&term);
        j += 1;
    }
    for _ in 0..k {
        acc = acc.mul(&acc);
    }
    acc
}

/// (cos θ, sin θ) for |θ| ≤ 2π + ε, via the complex exponential with
/// argument scaling and squaring.
pub fn cis(theta: &Fix) -> CFix {
    let s = theta.scale();
    let quarter = Fix::one(s).shl(-2);
    let mut k = 0u32;
    let mut y = theta.clone();
    while y.abs().cmp_abs(&quarter) == Ordering::Greater {
        y = y.shl(-1);
        k += 1;
        assert!(k < 40, "cis argument out of supported range");
    }
    let iy = CFix::new(Fix::zero(s), y);
    let mut term = CFix::one(s);
    let mut acc = CFix::one(s);
    let mut j: i64 = 1;
    loop {
        term = term.mul(&iy);
        term = CFix::new(term.re.div_i64(j), term.im.div_i64(j));
        if term.re.is_zero() && term.im.is_zero() {
            break;
        }
        acc = acc.add(&term);
        j += 1;
    }
    for _ in 0..k {
        acc = acc.mul(&acc);
    }
    acc
}

/// q = exp(2πi z) for z = x + iy in the upper half plane; the x-part is
/// reduced mod 1 first (integer q-powers are 1-periodic).
pub fn q_at(z: &CFix, two_pi: &Fix) -> CFix {
    let frac = z.re.fract();
    let theta = frac.mul(two_pi);
    let radius = exp_real(&z.im.mul(two_pi).neg());
    cis(&theta).mul_fix(&radius)
}

/// atan for |t| ≤ 1 + ε: two halvings then Taylor.
fn atan_unit(t: &Fix) -> Fix {
    let s = t.scale();
    let one = Fix::one(s);
    let mut y = t.clone();
    // atan(t) = 2 atan(t / (1 + sqrt(1+t²))), applied twice
    for _ in 0..2 {
        let root = one.add(&y.mul(&y)).sqrt();
        y = y.div(&one.add(&root));
    }
    // now |y| ≤ tan(π/16) ≈ 0.1989
    let y2 = y.mul(&y);
    let mut term = y.clone();
    let mut acc = y.clone();
    let mut j: i64 = 1;
    loop {
        term = term.mul(&y2).neg();
        let contrib = term.div_i64(2 * j + 1);
        if contrib.is_zero() {
            break;
        }
        acc = acc.add(&contrib);
        j += 1;
    }
    acc.mul_i64(4)
}

/// Principal-value atan2(y, x) ∈ (−π, π]; (0,0) maps to 0.
pub fn atan2(y: &Fix, x: &Fix, pi_val: &Fix) -> Fix {
    let s = x.scale();
    if y.is_zero() && x.is_zero() {
        return Fix::zero(s);
    }
    if x.is_zero() {
        let half = pi_val.shl(-1);
        return if y.is_negative() { half.neg() } else { half };
    }
    if y.is_zero() {
        return if x.is_negative() { pi_val.clone() } else { Fix::zero(s) };
    }
    if y.cmp_abs(x) != Ordering::Greater {
        let a = atan_unit(&y.div(x));
        if !x.is_negative() {
            a
        } else if y.is_negative() {
            a.sub(pi_val)
        } else {
            a.add(pi_val)
        }
    } else {
        let a = atan_unit(&x.div(y));
        let half = pi_val.shl(-1);
        if y.is_negative() {
            half.neg().sub(&a)
        } else {
            half.sub(&a)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: u32 = 256 + GUARD_BITS;

    fn close(a: &Fix, b: &Fix, bits: u32) -> bool {
        let diff = a.sub(b).abs();
        let tol = Fix::one(a.scale()).shl(-(bits as i32));
        diff.cmp_abs(&tol) != Ordering::Greater
    }

    #[test]
    fn pi_two_formulas_agree() {
        let a = pi(S);
        let b = pi_stormer(S);
        assert!(close(&a, &b, S - 8));
        assert!((a.to_f64() - std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn exp_functional_equation() {
        let a = Fix::from_rat(&Rat::new(7.into(), 3.into()), S);
        let b = Fix::from_rat(&Rat::new((-13).into(), 5.into()), S);
        let lhs = exp_real(&a.add(&b));
        let rhs = exp_real(&a).mul(&exp_real(&b));
        assert!(close(&lhs, &rhs, S - 16));
        let unit = exp_real(&a).mul(&exp_real(&a.neg()));
        assert!(close(&unit, &Fix::one(S), S - 16));
        assert!((exp_real(&Fix::one(S)).to_f64() - std::f64::consts::E).abs() < 1e-14);
    }

    #[test]
    fn cis_is_unit_circle_homomorphism() {
        let t1 = Fix::from_rat(&Rat::new(5.into(), 7.into()), S);
        let t2 = Fix::from_rat(&Rat::new(11.into(), 3.into()), S);
        let a = cis(&t1);
        let b = cis(&t2);
        let both = cis(&t1.add(&t2));
        let prod = a.mul(&b);
        assert!(close(&both.re, &prod.re, S - 16));
        assert!(close(&both.im, &prod.im, S - 16));
        let norm = a.norm_sqr();
        assert!(close(&norm, &Fix::one(S), S - 16));
        assert!((a.re.to_f64() - (5f64 / 7.0).cos()).abs() < 1e-14);
        assert!((a.im.to_f64() - (5f64 / 7.0).sin()).abs() < 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        for v in [2i64, 3, 5, 7, 1000003] {
            let x = Fix::from_i64(v, S);
            let r = x.sqrt();
            assert!(close(&r.mul(&r), &x, S - 16), "sqrt({v})");
        }
    }

    #[test]
    fn atan2_round_trips_angles() {
        let pi_val = pi(S);
        for num in [-7i64, -3, -1, 1, 2, 5] {
            let theta = pi_val.mul_i64(num).div_i64(8);
            let c = cis(&theta);
            let back = atan2(&c.im, &c.re, &pi_val);
            assert!(close(&back, &theta, S - 16), "theta = {num}π/8");
        }
        // axes
        let one = Fix::one(S);
        assert!(atan2(&Fix::zero(S), &one, &pi_val).is_zero());
        assert!(close(&atan2(&one, &Fix::zero(S), &pi_val), &pi_val.shl(-1), S - 16));
        assert!(close(&atan2(&Fix::zero(S), &one.neg(), &pi_val), &pi_val, S - 16));
    }

    #[test]
    fn q_at_matches_f64() {
        let two_pi = pi(S).mul_i64(2);
        // z = 0.3 + 0.8i
        let z = CFix::from_rat_pair(&Rat::new(3.into(), 10.into()), &Rat::new(4.into(), 5.into()), S);
        let q = q_at(&z, &two_pi);
        let r = (-2.0 * std::f64::consts::PI * 0.8f64).exp();
        let want_re = r * (2.0 * std::f64::consts::PI * 0.3).cos();
        let want_im = r * (2.0 * std::f64::consts::PI * 0.3).sin();
        let (qre, qim) = q.to_f64_pair();
        assert!((qre - want_re).abs() < 1e-14);
        assert!((qim - want_im).abs() < 1e-14);
        // 1-periodicity in the real direction, bit-for-bit after reduction
        let z_shift = CFix::new(z.re.add(&Fix::from_i64(3, S)), z.im.clone());
        let q2 = q_at(&z_shift, &two_pi);
        assert!(close(&q.re, &q2.re, S - 8));
        assert!(close(&q.im, &q2.im, S - 8));
    }

    #[test]
    fn powi_handles_negative_exponents() {
        let z = CFix::from_rat_pair(&Rat::new(3.into(), 5.into()), &Rat::new(1.into(), 7.into()), S);
        let p = z.powi(3).mul(&z.powi(-3));
        assert!(close(&p.re, &Fix::one(S), S - 24));
        assert!(close(&p.im, &Fix::zero(S), S - 24));
    }

    #[test]
    fn floor_and_fract() {
        let x = Fix::from_rat(&Rat::new((-7).into(), 2.into()), S); // −3.5
        assert_eq!(x.floor_i64(), -4);
        let f = x.fract();
        assert!(close(&f, &Fix::from_rat(&Rat::new(1.into(), 2.into()), S), S - 4));
    }
}
