//! Level bookkeeping and eta-quotient expansions.
//!
//! For the admitted squarefree levels N the quotient Γ₀(N)⁺\H has one cusp
//! and genus zero, and Δ_N(z) = ∏_{m|N} η(mz)^{24/σ₁(N)} is a cusp form of
//! weight k₁(N) = 12σ₀(N)/σ₁(N) with a simple zero at the cusp and no zeros
//! on the upper half plane. The q^{1/24}-prefactors of the eta factors are
//! carried as a single fractional offset, which for Δ_N is exactly 1.

use num_traits::{One, Zero};
use std::collections::BTreeMap;

use crate::series::{QSeries, Rat};

/// The levels for which the construction is valid.
pub const ADMITTED: [u64; 9] = [2, 3, 5, 6, 7, 11, 14, 15, 23];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LevelError {
    #[error("level {0} is not in the admitted list {ADMITTED:?}")]
    UnsupportedLevel(u64),
    #[error("eta quotient has fractional valuation {0} (24∤Σ m·e_m)")]
    FractionalValuation(String),
    #[error("eta quotient exponent for m={0} is not an integer")]
    FractionalExponent(u64),
}

/// Divisor data for an admitted level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelData {
    n: u64,
    divisors: Vec<u64>,
    primes: Vec<u64>,
    sigma0: u64,
    sigma1: u64,
    k1: i64,
}

impl LevelData {
    pub fn new(n: u64) -> Result<Self, LevelError> {
        if !ADMITTED.contains(&n) {
            return Err(LevelError::UnsupportedLevel(n));
        }
        let divisors: Vec<u64> = (1..=n).filter(|d| n % d == 0).collect();
        let primes: Vec<u64> = divisors.iter().copied().filter(|&d| d > 1 && (2..d).all(|k| d % k != 0)).collect();
        let sigma0 = divisors.len() as u64;
        let sigma1: u64 = divisors.iter().sum();
        let k1 = (12 * sigma0 / sigma1) as i64;
        debug_assert_eq!(k1 as u64 * sigma1, 12 * sigma0, "k1(N) must be exact");
        Ok(Self { n, divisors, primes, sigma0, sigma1, k1 })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn divisors(&self) -> &[u64] {
        &self.divisors
    }

    pub fn prime_divisors(&self) -> &[u64] {
        &self.primes
    }

    pub fn is_prime(&self) -> bool {
        self.primes.len() == 1
    }

    pub fn sigma0(&self) -> u64 {
        self.sigma0
    }

    pub fn sigma1(&self) -> u64 {
        self.sigma1
    }

    /// k₁(N) = 12σ₀(N)/σ₁(N), the weight of Δ_N.
    pub fn k1(&self) -> i64 {
        self.k1
    }

    /// The common eta exponent 24/σ₁(N) of Δ_N.
    pub fn eta_exponent(&self) -> i64 {
        (24 / self.sigma1) as i64
    }

    /// Δ_N as an eta quotient.
    pub fn delta_quotient(&self) -> EtaQuotient {
        let e = Rat::from_integer(self.eta_exponent().into());
        EtaQuotient::new(self.divisors.iter().map(|&m| (m, e.clone())).collect())
    }

    /// Δ_N expanded to O(q^prec): valuation 1, leading coefficient 1,
    /// weight k₁(N), character ψ^{k₁(N)} on Γ₀(N)⁺.
    pub fn delta(&self, prec: i64) -> QSeries {
        self.delta_quotient()
            .expand(prec)
            .expect("Δ_N has integral offset for every admitted level")
    }
}

/// A formal product ∏_{m} η(mz)^{e_m} with rational exponents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EtaQuotient {
    exponents: BTreeMap<u64, Rat>,
}

impl EtaQuotient {
    pub fn new(exponents: BTreeMap<u64, Rat>) -> Self {
        Self { exponents }
    }

    /// Σ m·e_m / 24, the q-exponent contributed by the eta prefactors.
    pub fn offset(&self) -> Rat {
        let s: Rat = self
            .exponents
            .iter()
            .map(|(&m, e)| Rat::from_integer(m.into()) * e)
            .sum();
        s / Rat::from_integer(24.into())
    }

    /// Expand as a q-series; requires all exponents and the offset integral.
    pub fn expand(&self, prec: i64) -> Result<QSeries, LevelError> {
        let off = self.offset();
        if !off.denom().is_one() {
            return Err(LevelError::FractionalValuation(format!("{off}")));
        }
        let off: i64 = {
            let n = off.numer();
            i64::try_from(n.clone()).expect("offset fits i64")
        };
        // The eta cores are units at q^0, so the whole product needs exactly
        // prec − off coefficients before the final q^off shift.
        let need = prec - off;
        if need <= 0 {
            return Ok(QSeries::zero(prec));
        }
        let mut acc = QSeries::one(need);
        for (&m, e) in &self.exponents {
            if !e.denom().is_one() {
                return Err(LevelError::FractionalExponent(m));
            }
            let e: i64 = i64::try_from(e.numer().clone()).expect("exponent fits i64");
            if e == 0 {
                continue;
            }
            let core = eta_core((need + m as i64 - 1) / m as i64 + 1);
            let factor = core.substitute_power(m as i64).truncate(need).pow(e).expect("eta core is a unit");
            acc = &acc * &factor;
        }
        Ok(acc.shift(off).truncate(prec))
    }
}

/// ∏_{n≥1}(1 − qⁿ) + O(q^prec) via Euler's pentagonal number theorem:
/// Σ_{k∈Z} (−1)^k q^{k(3k−1)/2}, so only O(√prec) nonzero terms.
pub fn eta_core(prec: i64) -> QSeries {
    assert!(prec >= 1);
    let mut coeffs = vec![Rat::zero(); prec as usize];
    coeffs[0] = Rat::one();
    let mut k: i64 = 1;
    loop {
        let g1 = k * (3 * k - 1) / 2;
        let g2 = k * (3 * k + 1) / 2;
        if g1 >= prec && g2 >= prec {
            break;
        }
        let sign = if k % 2 == 0 { Rat::one() } else { -Rat::one() };
        if g1 < prec {
            coeffs[g1 as usize] = sign.clone();
        }
        if g2 < prec {
            coeffs[g2 as usize] = sign;
        }
        k += 1;
    }
    QSeries::new(0, coeffs, prec)
}

/// Oracle for [`eta_core`]: the literal finite product ∏_{n=1}^{prec−1}(1 − qⁿ).
pub fn eta_core_naive(prec: i64) -> QSeries {
    let mut acc = QSeries::one(prec);
    for n in 1..prec {
        let factor = QSeries::new(
            0,
            {
                let mut v = vec![Rat::zero(); prec as usize];
                v[0] = Rat::one();
                v[n as usize] = -Rat::one();
                v
            },
            prec,
        );
        acc = acc.mul_sequential(&factor).truncate(prec);
    }
    acc
}

/// Δ_N by the direct per-divisor product (independent route used as oracle).
pub fn delta_naive(level: &LevelData, prec: i64) -> QSeries {
    let e = level.eta_exponent();
    let need = prec - 1;
    if need <= 0 {
        return QSeries::zero(prec);
    }
    let mut acc = QSeries::one(need);
    for &m in level.divisors() {
        let core = eta_core_naive((need + m as i64 - 1) / m as i64 + 1);
        let factor = core.substitute_power(m as i64).truncate(need).pow(e).unwrap();
        acc = &acc * &factor;
    }
    acc.shift(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_table() {
        let expect = [(2, 8), (3, 6), (5, 4), (6, 4), (7, 3), (11, 2), (14, 2), (15, 2), (23, 1)];
        for (n, k1) in expect {
            let lv = LevelData::new(n).unwrap();
            assert_eq!(lv.k1(), k1, "k1({n})");
            assert_eq!(lv.k1() as u64 * lv.sigma1(), 12 * lv.sigma0());
        }
    }

    #[test]
    fn rejects_unlisted_levels() {
        for n in [1, 4, 10, 12, 24] {
            assert_eq!(LevelData::new(n), Err(LevelError::UnsupportedLevel(n)));
        }
    }

    #[test]
    fn eta_core_first_terms() {
        // 1 − q − q² + q⁵ + q⁷ − q¹² − q¹⁵ + ⋯, exponents n(3n∓1)/2 with
        // paired alternating signs; cross-checked against the literal product.
        let p = 21;
        let sparse = eta_core(p);
        let naive = eta_core_naive(p);
        assert_eq!(sparse, naive);
        let expected = [1, -1, -1, 0, 0, 1, 0, 1, 0, 0, 0, 0, -1, 0, 0, -1, 0, 0, 0, 0, 0];
        for (n, &e) in expected.iter().enumerate() {
            assert_eq!(sparse.coeff(n as i64), Rat::from_integer(e.into()), "q^{n}");
        }
    }

    #[test]
    fn eta_core_matches_naive_to_100() {
        assert_eq!(eta_core(101), eta_core_naive(101));
    }

    #[test]
    fn eta_core_inverse_pair() {
        let p = 40;
        let e = eta_core(p);
        let prod = &e * &e.invert().unwrap();
        for n in 0..p {
            let expect = if n == 0 { Rat::one() } else { Rat::zero() };
            assert_eq!(prod.coeff(n), expect);
        }
    }

    #[test]
    fn delta_offsets_are_one() {
        for n in ADMITTED {
            let lv = LevelData::new(n).unwrap();
            assert_eq!(lv.delta_quotient().offset(), Rat::one(), "offset at N={n}");
        }
    }

    #[test]
    fn delta_23_basic() {
        let lv = LevelData::new(23).unwrap();
        let d = lv.delta(30);
        assert_eq!(d.valuation(), 1);
        assert_eq!(d.coeff(1), Rat::one());
        // direct route: η(z)η(23z)
        assert_eq!(d, delta_naive(&lv, 30));
        assert_eq!(d.coeff(2), -Rat::one());
    }

    #[test]
    fn lone_eta_factor_has_fractional_offset() {
        let eq = EtaQuotient::new([(1u64, Rat::one())].into_iter().collect());
        assert!(matches!(eq.expand(10), Err(LevelError::FractionalValuation(_))));
    }

    #[test]
    fn delta_monic_all_levels() {
        for n in ADMITTED {
            let lv = LevelData::new(n).unwrap();
            let d = lv.delta(12);
            assert_eq!(d.valuation(), 1, "N={n}");
            assert_eq!(d.coeff(1), Rat::one(), "N={n}");
            assert!(d.is_integral(), "N={n}");
        }
    }

    #[test]
    fn delta_two_routes_agree() {
        for n in ADMITTED {
            let lv = LevelData::new(n).unwrap();
            assert_eq!(lv.delta(60), delta_naive(&lv, 60), "N={n}");
        }
    }
}
