//! Real characters on Γ₀(N), their extensions to Γ₀(N)⁺, and generalized
//! Bernoulli numbers.
//!
//! The distinguished character ψ has restriction a ↦ (−N/a) to Γ₀(N) when N
//! is a prime ≡ 3 (mod 4) and trivial restriction otherwise, with
//! ψ(W_N) = i⁻¹, ψ(W₂) = 1 for N ∈ {6, 14} and ψ(W₅) = 1 for N = 15. Δ_N
//! transforms with χ^{(N)} = ψ^{k₁(N)}. For N = 14 and 15 an auxiliary
//! Legendre character ξ (conductor 7 resp. 15) is admitted; its values on
//! the involutions are configuration, fixed by the plus-projection search.
//!
//! A character is plain data (restriction descriptor plus fourth-root values
//! on the prime Atkin–Lehner involutions), never a closure, so equality is
//! decidable and reports are reproducible.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

use crate::level::LevelData;
use crate::mat2::{al_square_gamma, gcd_u64};
use crate::series::{QSeries, Rat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CharError {
    #[error("{0} is not coprime to the level {1}")]
    NotCoprime(i64, u64),
    #[error("auxiliary character xi{0} is not defined at level {1}")]
    NoSuchAuxiliary(u64, u64),
    #[error("cannot parse character name {0:?}")]
    Parse(String),
}

/// Kronecker symbol (a/n) with the standard conventions at 2, −1 and 0.
pub fn kronecker(mut a: i64, mut n: i64) -> i64 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    if a % 2 == 0 && n % 2 == 0 {
        return 0;
    }
    let mut t = 1i64;
    let mut twos = 0;
    while n % 2 == 0 {
        n /= 2;
        twos += 1;
    }
    if twos % 2 == 1 {
        match a.rem_euclid(8) {
            3 | 5 => t = -t,
            _ => {}
        }
    }
    if n < 0 {
        n = -n;
        if a < 0 {
            t = -t;
        }
    }
    // n odd and positive from here; quadratic reciprocity loop
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            match n % 8 {
                3 | 5 => t = -t,
                _ => {}
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// A real Dirichlet character, stored by its conductor: the Jacobi symbol
/// a ↦ (a/f) for odd squarefree f, trivial for f = 1. These are exactly the
/// primitive real characters whose conductor divides a squarefree level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirichletReal {
    conductor: u64,
}

impl DirichletReal {
    pub fn trivial() -> Self {
        Self { conductor: 1 }
    }

    pub fn legendre(f: u64) -> Self {
        assert!(f == 1 || f % 2 == 1, "even conductors do not occur for squarefree levels");
        Self { conductor: f }
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn is_trivial(&self) -> bool {
        self.conductor == 1
    }

    /// χ(a) ∈ {−1, 0, +1}; zero exactly on gcd(a, f) > 1.
    pub fn value(&self, a: i64) -> i64 {
        kronecker(a, self.conductor as i64)
    }

    /// χ(−1): +1 for even characters, −1 for odd.
    pub fn parity(&self) -> i64 {
        kronecker(-1, self.conductor as i64)
    }

    /// Product of two real characters; a shared conductor factor cancels.
    pub fn product(&self, other: &DirichletReal) -> DirichletReal {
        let g = gcd_u64(self.conductor, other.conductor);
        DirichletReal { conductor: self.conductor / g * (other.conductor / g) }
    }
}

/// Exact fourth root of unity i^k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct I4(u8);

impl I4 {
    pub const ONE: I4 = I4(0);
    pub const I: I4 = I4(1);
    pub const MINUS_ONE: I4 = I4(2);
    pub const MINUS_I: I4 = I4(3);

    pub fn from_exponent(k: i64) -> Self {
        I4(k.rem_euclid(4) as u8)
    }

    pub fn exponent(&self) -> u8 {
        self.0
    }

    pub fn mul(&self, o: &I4) -> I4 {
        I4((self.0 + o.0) % 4)
    }

    pub fn pow(&self, k: i64) -> I4 {
        I4::from_exponent(self.0 as i64 * k)
    }

    pub fn inv(&self) -> I4 {
        I4((4 - self.0) % 4)
    }

    pub fn is_real(&self) -> bool {
        self.0 % 2 == 0
    }

    /// The square, as a sign.
    pub fn sq_sign(&self) -> i64 {
        if self.0 % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Complex value as (re, im) ∈ {−1, 0, 1}².
    pub fn complex_parts(&self) -> (i64, i64) {
        match self.0 {
            0 => (1, 0),
            1 => (0, 1),
            2 => (-1, 0),
            _ => (0, -1),
        }
    }

    pub fn from_sign(s: i64) -> I4 {
        match s {
            1 => I4::ONE,
            -1 => I4::MINUS_ONE,
            _ => panic!("not a sign: {s}"),
        }
    }
}

impl fmt::Display for I4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", ["1", "i", "-1", "-i"][self.0 as usize])
    }
}

/// Default W-values on the prime involutions (smallest prime first) for the
/// auxiliary character ξ at N = 14 and N = 15. The values are configuration:
/// they are the sign choices singled out by the plus-space nullspace search
/// (`plus` module), kept as data so expansions are reproducible without
/// rerunning the search.
pub const XI14_DEFAULT_W: [I4; 2] = [I4::ONE, I4::MINUS_I];
pub const XI15_DEFAULT_W: [I4; 2] = [I4::ONE, I4::I];

/// A character on Γ₀(N)⁺: a real restriction to Γ₀(N) together with
/// fourth-root-of-unity values on the prime Atkin–Lehner involutions
/// (canonical representatives from [`crate::mat2::al_matrix`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterPlus {
    level: LevelData,
    restriction: DirichletReal,
    /// ψ-exponent and auxiliary flag, kept for canonical naming.
    psi_exponent: u8,
    aux: bool,
    w: BTreeMap<u64, I4>,
}

impl CharacterPlus {
    /// The trivial character.
    pub fn trivial(level: &LevelData) -> Self {
        let w = level.prime_divisors().iter().map(|&p| (p, I4::ONE)).collect();
        Self {
            level: level.clone(),
            restriction: DirichletReal::trivial(),
            psi_exponent: 0,
            aux: false,
            w,
        }
    }

    /// The distinguished character ψ.
    pub fn psi(level: &LevelData) -> Self {
        let n = level.n();
        let restriction = if level.is_prime() && n % 4 == 3 {
            DirichletReal::legendre(n)
        } else {
            DirichletReal::trivial()
        };
        let mut w = BTreeMap::new();
        match n {
            6 => {
                w.insert(2, I4::ONE);
                w.insert(3, I4::MINUS_I);
            }
            14 => {
                w.insert(2, I4::ONE);
                w.insert(7, I4::MINUS_I);
            }
            15 => {
                w.insert(3, I4::MINUS_I);
                w.insert(5, I4::ONE);
            }
            _ => {
                w.insert(n, I4::MINUS_I);
            }
        }
        Self { level: level.clone(), restriction, psi_exponent: 1, aux: false, w }
    }

    /// ψ^r.
    pub fn psi_pow(level: &LevelData, r: i64) -> Self {
        Self::psi(level).pow(r)
    }

    /// The auxiliary Legendre character ξ (N = 14: conductor 7, N = 15:
    /// conductor 15) with its default W-values.
    pub fn xi(level: &LevelData) -> Result<Self, CharError> {
        let w: Vec<(u64, I4)> = match level.n() {
            14 => vec![(2, XI14_DEFAULT_W[0]), (7, XI14_DEFAULT_W[1])],
            15 => vec![(3, XI15_DEFAULT_W[0]), (5, XI15_DEFAULT_W[1])],
            n => return Err(CharError::NoSuchAuxiliary(0, n)),
        };
        Self::xi_with_w(level, &w)
    }

    /// ξ with explicit W-values (the calibration search enumerates these).
    pub fn xi_with_w(level: &LevelData, w_values: &[(u64, I4)]) -> Result<Self, CharError> {
        let cond = match level.n() {
            14 => 7,
            15 => 15,
            n => return Err(CharError::NoSuchAuxiliary(0, n)),
        };
        Ok(Self {
            level: level.clone(),
            restriction: DirichletReal::legendre(cond),
            psi_exponent: 0,
            aux: true,
            w: w_values.iter().copied().collect(),
        })
    }

    pub fn level(&self) -> &LevelData {
        &self.level
    }

    pub fn restriction(&self) -> DirichletReal {
        self.restriction
    }

    pub fn has_aux(&self) -> bool {
        self.aux
    }

    pub fn psi_exponent(&self) -> u8 {
        self.psi_exponent
    }

    pub fn is_trivial(&self) -> bool {
        self.restriction.is_trivial() && self.w.values().all(|v| *v == I4::ONE)
    }

    /// Value of the restriction at a matrix with upper-left entry a.
    pub fn restriction_value(&self, a: i64) -> Result<i64, CharError> {
        if gcd_u64(a.unsigned_abs(), self.level.n()) != 1 {
            return Err(CharError::NotCoprime(a, self.level.n()));
        }
        Ok(self.restriction.value(a))
    }

    /// χ(−1), as the parity of the restriction.
    pub fn parity(&self) -> i64 {
        self.restriction.parity()
    }

    /// Parity admissibility for weight k: χ(−1) = (−1)^k.
    pub fn parity_matches(&self, k: i64) -> bool {
        self.parity() == if k % 2 == 0 { 1 } else { -1 }
    }

    /// W-value on the prime involution W_p (stored directly).
    pub fn w_prime(&self, p: u64) -> I4 {
        self.w[&p]
    }

    /// W-value on the canonical representative W_m, m | N, derived
    /// multiplicatively from the prime values with the Γ₀(N) coset
    /// correction.
    pub fn w_value(&self, m: u64) -> Result<I4, CharError> {
        let n = self.level.n();
        if m == 0 || n % m != 0 {
            return Err(CharError::NotCoprime(m as i64, n));
        }
        if m == 1 {
            return Ok(I4::ONE);
        }
        let primes: Vec<u64> = self.level.prime_divisors().iter().copied().filter(|p| m % p == 0).collect();
        let mut acc = I4::ONE;
        let mut prod = crate::mat2::IMat2::IDENTITY;
        for &p in &primes {
            acc = acc.mul(&self.w[&p]);
            prod = prod.mul(&crate::mat2::al_matrix(n, p).expect("prime divides level"));
        }
        // prod = γ · W_m for some γ ∈ Γ₀(N) (or −γ with the sign absorbed by
        // the restriction value at the diagonal); the character picks up
        // the restriction at γ.
        let canon = crate::mat2::al_matrix(n, m).expect("m divides level");
        let gamma = crate::mat2::coset_gamma(&prod, &canon).expect("products of AL matrices stay in the coset");
        let corr = self.restriction.value(gamma.a);
        debug_assert!(corr != 0);
        Ok(if corr == 1 { acc } else { acc.mul(&I4::MINUS_ONE) })
    }

    /// Product of characters (same level).
    pub fn product(&self, other: &CharacterPlus) -> CharacterPlus {
        assert_eq!(self.level.n(), other.level.n());
        let w = self.w.iter().map(|(&p, v)| (p, v.mul(&other.w[&p]))).collect();
        CharacterPlus {
            level: self.level.clone(),
            restriction: self.restriction.product(&other.restriction),
            psi_exponent: (self.psi_exponent + other.psi_exponent) % 4,
            aux: self.aux ^ other.aux,
            w,
        }
    }

    pub fn pow(&self, r: i64) -> CharacterPlus {
        let restriction = if r.rem_euclid(2) == 0 { DirichletReal::trivial() } else { self.restriction };
        let w = self.w.iter().map(|(&p, v)| (p, v.pow(r))).collect();
        CharacterPlus {
            level: self.level.clone(),
            restriction,
            psi_exponent: ((self.psi_exponent as i64 * r).rem_euclid(4)) as u8,
            aux: self.aux && r.rem_euclid(2) == 1,
            w,
        }
    }

    pub fn inverse(&self) -> CharacterPlus {
        let w = self.w.iter().map(|(&p, v)| (p, v.inv())).collect();
        CharacterPlus {
            level: self.level.clone(),
            restriction: self.restriction,
            psi_exponent: (4 - self.psi_exponent) % 4,
            aux: self.aux,
            w,
        }
    }

    /// ψ^{k₁(N)}, the character of Δ_N.
    pub fn delta_character(level: &LevelData) -> CharacterPlus {
        Self::psi_pow(level, level.k1())
    }

    /// Twist by ψ^r.
    pub fn twist_psi(&self, r: i64) -> CharacterPlus {
        self.product(&Self::psi_pow(&self.level, r))
    }

    /// Whether a nonzero weight-k form can carry this character: the parity
    /// condition χ(−1) = (−1)^k together with the square relations
    /// w_p² = (value of W_p² under the weight-k action) forced by
    /// W_p² = p·γ_p, γ_p of determinant 1. Characters failing either
    /// condition have no nonzero forms at weight k at all.
    pub fn is_consistent_at_weight(&self, k: i64) -> bool {
        if !self.parity_matches(k) {
            return false;
        }
        let n = self.level.n();
        for (&p, wp) in &self.w {
            let gamma = al_square_gamma(n, p).expect("prime divides level");
            // γ has det 1 but may be −(Γ₀(N) element); normalize the sign so
            // the upper-left entry evaluates through the restriction, and
            // account for f|(−I) = (−1)^k.
            let (a_eval, through_minus_i) = if gamma.a < 0 || (gamma.a == 0 && gamma.b > 0) {
                (-gamma.a, true)
            } else {
                (gamma.a, false)
            };
            let mut required = if a_eval == 0 {
                // Fricke square at prime level: γ = ±I
                1
            } else {
                self.restriction.value(a_eval)
            };
            if through_minus_i && k % 2 != 0 {
                required = -required;
            }
            if wp.sq_sign() != required {
                return false;
            }
        }
        true
    }

    /// Canonical name for the CLI and cache keys: "1", "psi", "psi^2",
    /// "psi^3", optionally with "*xi7" / "*xi15".
    pub fn canonical_name(&self) -> String {
        let mut s = match self.psi_exponent {
            0 => String::from("1"),
            1 => String::from("psi"),
            r => format!("psi^{r}"),
        };
        if self.aux {
            let tag = if self.level.n() == 14 { "xi7" } else { "xi15" };
            if s == "1" {
                s = tag.to_string();
            } else {
                s = format!("{s}*{tag}");
            }
        }
        s
    }

    /// Parse the CLI character syntax: "1", "psi", "psi^r", optionally
    /// suffixed "*xi7" (N = 14) or "*xi15" (N = 15); bare "xi7"/"xi15" too.
    pub fn parse(level: &LevelData, text: &str) -> Result<Self, CharError> {
        let mut base = text.trim();
        let mut aux_tag: Option<u64> = None;
        if let Some(stripped) = base.strip_suffix("*xi7") {
            base = stripped;
            aux_tag = Some(7);
        } else if let Some(stripped) = base.strip_suffix("*xi15") {
            base = stripped;
            aux_tag = Some(15);
        } else if base == "xi7" {
            base = "1";
            aux_tag = Some(7);
        } else if base == "xi15" {
            base = "1";
            aux_tag = Some(15);
        }
        let r = if base == "1" || base.is_empty() {
            0
        } else if base == "psi" {
            1
        } else if let Some(e) = base.strip_prefix("psi^") {
            e.parse::<i64>().map_err(|_| CharError::Parse(text.to_string()))?
        } else {
            return Err(CharError::Parse(text.to_string()));
        };
        let mut chi = Self::psi_pow(level, r);
        if let Some(tag) = aux_tag {
            let ok = (tag == 7 && level.n() == 14) || (tag == 15 && level.n() == 15);
            if !ok {
                return Err(CharError::NoSuchAuxiliary(tag, level.n()));
            }
            chi = chi.product(&Self::xi(level)?);
        }
        Ok(chi)
    }

    /// All characters ψ^r·(ξ or 1) at this level, deduplicated as data.
    pub fn family(level: &LevelData) -> Vec<CharacterPlus> {
        let mut out: Vec<CharacterPlus> = Vec::new();
        let mut push = |c: CharacterPlus| {
            if !out.iter().any(|x| x.same_data(&c)) {
                out.push(c);
            }
        };
        for r in 0..4 {
            push(Self::psi_pow(level, r));
        }
        if let Ok(xi) = Self::xi(level) {
            for r in 0..4 {
                push(Self::psi_pow(level, r).product(&xi));
            }
        }
        out
    }

    /// Equality as mathematical data (restriction + W-values), ignoring
    /// naming fields.
    pub fn same_data(&self, other: &CharacterPlus) -> bool {
        self.level.n() == other.level.n() && self.restriction == other.restriction && self.w == other.w
    }
}

impl fmt::Display for CharacterPlus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.canonical_name())
    }
}

/// Generalized Bernoulli number B_{k,χ} for a real character χ of conductor
/// f, from Σ_{a=1}^{f} χ(a)·t·e^{at}/(e^{ft} − 1) = Σ_n B_{n,χ} tⁿ/n! by
/// exact series division. For the trivial character (f = 1) this is the
/// classical B_k with the B₁ = +1/2 convention.
pub fn bernoulli_chi(k: i64, chi: &DirichletReal) -> Rat {
    assert!(k >= 0);
    let f = chi.conductor() as i64;
    let prec = k + 3;
    let mut factorial = vec![Rat::one(); prec as usize + 1];
    for j in 1..=prec as usize {
        factorial[j] = &factorial[j - 1] * Rat::from_integer(BigInt::from(j));
    }
    // numerator Σ_a χ(a)·t·e^{at}: coefficient of t^{j+1} is Σ_a χ(a) a^j/j!
    let mut num = vec![Rat::zero(); prec as usize];
    for a in 1..=f {
        let v = chi.value(a);
        if v == 0 {
            continue;
        }
        let sign = Rat::from_integer(v.into());
        let mut apow = Rat::one();
        for j in 0..(prec as usize - 1) {
            num[j + 1] += &sign * &apow / &factorial[j];
            apow *= Rat::from_integer(a.into());
        }
    }
    let num = QSeries::new(0, num, prec);
    // denominator e^{ft} − 1: coefficient of t^j is f^j/j!
    let mut den = vec![Rat::zero(); prec as usize];
    let mut fpow = Rat::from_integer(f.into());
    for (j, slot) in den.iter_mut().enumerate().skip(1) {
        *slot = &fpow / &factorial[j];
        fpow *= Rat::from_integer(f.into());
    }
    let den = QSeries::new(0, den, prec);
    let quot = &num * &den.invert().expect("e^(ft) − 1 has valuation exactly 1");
    quot.try_coeff(k).expect("precision chosen to cover k") * &factorial[k as usize]
}

/// Classical Bernoulli number (B₁ = +1/2 convention).
pub fn bernoulli(k: i64) -> Rat {
    bernoulli_chi(k, &DirichletReal::trivial())
}
