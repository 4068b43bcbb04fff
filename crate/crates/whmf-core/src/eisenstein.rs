//! The Γ₀(N) Eisenstein space E_k(N, χ): spanning q-expansions and the
//! dimension table.
//!
//! The space is generated by the series f_k(ℓz; χ₁, χ₂) for primitive real
//! characters χ₁ mod N₁, χ₂ mod N₂ with χ₁χ₂ inducing χ and ℓN₁N₂ | N, plus,
//! for k = 2 and trivial χ, the differences E₂(z) − pE₂(pz). Normalization
//! here is span-equivalent to the classical one: coefficient of qⁿ (n ≥ 1,
//! before scaling) is Σ_{0<d|n} χ₁(n/d) χ₂(d) d^{k−1}, and the constant term
//! is −B_{k,χ₂}/(2k) when N₁ = 1 and 0 otherwise. Weight-1 pairs are
//! symmetric in (χ₁, χ₂) and kept once, with N₁ ≤ N₂ so the constant term
//! lands on the N₁ = 1 representative.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::chars::{bernoulli_chi, DirichletReal};
use crate::level::LevelData;
use crate::series::{QSeries, Rat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EisError {
    #[error("character parity {parity} does not match weight {weight}")]
    ParityMismatch { weight: i64, parity: i64 },
    #[error("no Eisenstein series exist for weight {weight}, conductor {conductor}")]
    EmptyFamily { weight: i64, conductor: u64 },
    #[error("rank check needs precision ≥ {needed}, got {got}")]
    InsufficientPrecision { needed: i64, got: i64 },
}

/// One spanning element f_k(ℓz; χ₁, χ₂) of E_k(N, χ).
#[derive(Debug, Clone)]
pub struct EisBasisElement {
    pub weight: i64,
    pub chi1: DirichletReal,
    pub chi2: DirichletReal,
    pub scale: u64,
    /// Set (to p) for the weight-2 trivial-character differences
    /// E₂(ℓz) − pE₂(pℓz).
    pub special_e2: Option<u64>,
    pub series: QSeries,
}

impl EisBasisElement {
    /// Row label for reports and CLI output.
    pub fn label(&self) -> String {
        if let Some(p) = self.special_e2 {
            format!("E2[p={}] scale {}", p, self.scale)
        } else {
            format!(
                "f_{}(chi1 mod {}, chi2 mod {}) scale {}",
                self.weight,
                self.chi1.conductor(),
                self.chi2.conductor(),
                self.scale
            )
        }
    }
}

/// σ^{χ₁,χ₂}_{k−1}(n) = Σ_{0<d|n} χ₁(n/d) χ₂(d) d^{k−1} for n = 1..prec−1.
fn twisted_sigma_series(chi1: &DirichletReal, chi2: &DirichletReal, k: i64, prec: i64) -> Vec<Rat> {
    let mut coeffs = vec![BigInt::zero(); prec.max(0) as usize];
    for d in 1..prec {
        let c2 = chi2.value(d);
        if c2 == 0 {
            continue;
        }
        let dpow = BigInt::from(d).pow((k - 1) as u32);
        let term = if c2 == 1 { dpow } else { -dpow };
        let mut n = d;
        while n < prec {
            let c1 = chi1.value(n / d);
            if c1 == 1 {
                coeffs[n as usize] += &term;
            } else if c1 == -1 {
                coeffs[n as usize] -= &term;
            }
            n += d;
        }
    }
    coeffs.into_iter().map(Rat::from_integer).collect()
}

/// f_k(z; χ₁, χ₂) before scaling.
fn eis_series(chi1: &DirichletReal, chi2: &DirichletReal, k: i64, prec: i64) -> QSeries {
    let mut coeffs = twisted_sigma_series(chi1, chi2, k, prec);
    if chi1.is_trivial() && !coeffs.is_empty() {
        coeffs[0] = -bernoulli_chi(k, chi2) / Rat::from_integer((2 * k).into());
    }
    QSeries::new(0, coeffs, prec)
}

/// E₂ = 1 − 24 Σ σ₁(n) qⁿ.
pub fn e2_series(prec: i64) -> QSeries {
    let trivial = DirichletReal::trivial();
    let mut coeffs = twisted_sigma_series(&trivial, &trivial, 2, prec);
    for c in coeffs.iter_mut().skip(1) {
        *c *= -Rat::from_integer(24.into());
    }
    if !coeffs.is_empty() {
        coeffs[0] = Rat::one();
    }
    QSeries::new(0, coeffs, prec)
}

/// Ordered splittings of a squarefree conductor f = f₁·f₂.
fn conductor_splittings(f: u64) -> Vec<(u64, u64)> {
    (1..=f).filter(|d| f % d == 0).map(|d| (d, f / d)).collect()
}

/// The spanning list of E_k(N, χ) per the enumeration above.
pub fn eisenstein_basis(
    level: &LevelData,
    k: i64,
    chi: &DirichletReal,
    prec: i64,
) -> Result<Vec<EisBasisElement>, EisError> {
    let parity = chi.parity();
    if parity != if k % 2 == 0 { 1 } else { -1 } {
        return Err(EisError::ParityMismatch { weight: k, parity });
    }
    let n = level.n();
    let f = chi.conductor();
    if k == 0 {
        if chi.is_trivial() {
            return Ok(vec![EisBasisElement {
                weight: 0,
                chi1: *chi,
                chi2: *chi,
                scale: 1,
                special_e2: None,
                series: QSeries::one(prec),
            }]);
        }
        return Err(EisError::EmptyFamily { weight: 0, conductor: f });
    }
    if k == 2 && chi.is_trivial() {
        // E₂(ℓz) − p·E₂(pℓz) for primes p | N, ℓ | N/p; the label slot chi2
        // records p (the "N₂ a prime" of the exceptional pair).
        let e2 = e2_series(prec);
        let mut out = Vec::new();
        for &p in level.prime_divisors() {
            let diff = &e2 - &e2.substitute_power(p as i64).truncate(prec).scale(&Rat::from_integer(p.into()));
            let mut l = 1;
            while l * p <= n {
                if n % (l * p) == 0 {
                    out.push(EisBasisElement {
                        weight: 2,
                        chi1: DirichletReal::trivial(),
                        chi2: DirichletReal::trivial(),
                        scale: l,
                        special_e2: Some(p),
                        series: diff.substitute_power(l as i64).truncate(prec),
                    });
                }
                l += 1;
            }
        }
        return Ok(out);
    }
    let mut out = Vec::new();
    for (f1, f2) in conductor_splittings(f) {
        if k == 1 && f1 > f2 {
            continue; // weight-1 pairs are symmetric; keep N₁ ≤ N₂
        }
        if k == 2 && f1 == 1 && f2 == 1 {
            continue; // the non-modular (1,1) pair; covered by the special family
        }
        let chi1 = DirichletReal::legendre(f1);
        let chi2 = DirichletReal::legendre(f2);
        let base = eis_series(&chi1, &chi2, k, prec);
        let mut l = 1;
        while l * f <= n {
            if n % (l * f) == 0 {
                out.push(EisBasisElement {
                    weight: k,
                    chi1,
                    chi2,
                    scale: l,
                    special_e2: None,
                    series: base.substitute_power(l as i64).truncate(prec),
                });
            }
            l += 1;
        }
    }
    if out.is_empty() {
        return Err(EisError::EmptyFamily { weight: k, conductor: f });
    }
    Ok(out)
}

/// The dimension d_k(N, χ) of E_k(N, χ): 0 on parity mismatch, otherwise the
/// case table for prime and biprime squarefree levels.
pub fn dimension_d(level: &LevelData, k: i64, chi: &DirichletReal) -> u64 {
    if chi.parity() != if k % 2 == 0 { 1 } else { -1 } {
        return 0;
    }
    let prime = level.is_prime();
    let trivial = chi.is_trivial();
    match k {
        0 => u64::from(trivial),
        1 => match (prime, trivial) {
            (_, true) => 0,
            (true, false) => 1,
            (false, false) => 2,
        },
        2 => match (prime, trivial) {
            (true, true) => 1,
            (true, false) => 2,
            (false, true) => 3,
            (false, false) => 4,
        },
        _ => {
            if prime {
                2
            } else {
                4
            }
        }
    }
}

/// Sturm-style precision floor for rank checks: ⌈k·σ₁(N)/12⌉ + 5.
pub fn rank_precision_floor(level: &LevelData, k: i64) -> i64 {
    let idx = level.sigma1() as i64;
    (k * idx + 11) / 12 + 5
}

/// Exact rank over ℚ of the coefficient matrix (rows = elements, columns =
/// q-exponents up to the common precision).
pub fn rank_check(level: &LevelData, k: i64, elements: &[EisBasisElement], prec: i64) -> Result<u64, EisError> {
    let needed = rank_precision_floor(level, k);
    if prec < needed {
        return Err(EisError::InsufficientPrecision { needed, got: prec });
    }
    let rows: Vec<Vec<Rat>> = elements
        .iter()
        .map(|e| {
            let s = e.series.truncate(prec.min(e.series.precision()));
            (0..prec).map(|n| s.try_coeff(n).unwrap_or_else(Rat::zero)).collect()
        })
        .collect();
    Ok(rank_of(rows))
}

/// Gaussian elimination over the rationals.
pub fn rank_of(mut rows: Vec<Vec<Rat>>) -> u64 {
    let nrows = rows.len();
    if nrows == 0 {
        return 0;
    }
    let ncols = rows[0].len();
    let mut rank = 0usize;
    let mut col = 0usize;
    while rank < nrows && col < ncols {
        let pivot = (rank..nrows).find(|&r| !rows[r][col].is_zero());
        let Some(p) = pivot else {
            col += 1;
            continue;
        };
        rows.swap(rank, p);
        let inv = rows[rank][col].clone().recip();
        for c in col..ncols {
            let v = &rows[rank][c] * &inv;
            rows[rank][c] = v;
        }
        for r in 0..nrows {
            if r != rank && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in col..ncols {
                    let sub = &rows[rank][c] * &factor;
                    rows[r][c] = &rows[r][c] - &sub;
                }
            }
        }
        rank += 1;
        col += 1;
    }
    rank as u64
}

/// All real Dirichlet characters (by conductor) available modulo N.
pub fn real_characters(level: &LevelData) -> Vec<DirichletReal> {
    let n = level.n();
    (1..=n)
        .filter(|&f| n % f == 0 && f % 2 == 1)
        .map(DirichletReal::legendre)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(n: u64) -> LevelData {
        LevelData::new(n).unwrap()
    }

    /// Brute-force σ₃ for the spec's G₄ example.
    fn sigma(n: i64, e: u32) -> i64 {
        (1..=n).filter(|d| n % d == 0).map(|d| d.pow(e)).sum()
    }

    #[test]
    fn g4_family_at_level_2() {
        let level = lv(2);
        let basis = eisenstein_basis(&level, 4, &DirichletReal::trivial(), 12).unwrap();
        assert_eq!(basis.len(), 2); // G₄(z), G₄(2z)
        let g4 = &basis.iter().find(|e| e.scale == 1).unwrap().series;
        // constant term −B₄/8 = 1/240; q² coefficient σ₃(2) = 9, so the
        // unit-constant normalization has q² coefficient 2160
        assert_eq!(g4.coeff(0), Rat::new(1.into(), 240.into()));
        for n in 1..8 {
            assert_eq!(g4.coeff(n), Rat::from_integer(sigma(n, 3).into()), "q^{n}");
        }
        let ratio = &g4.coeff(2) / &g4.coeff(0);
        assert_eq!(ratio, Rat::from_integer(2160.into()));
        let g4_2 = &basis.iter().find(|e| e.scale == 2).unwrap().series;
        assert_eq!(g4_2.coeff(2), g4.coeff(1));
        assert_eq!(g4_2.coeff(1), Rat::zero());
    }

    #[test]
    fn weight_two_trivial_special_family() {
        let level = lv(2);
        let basis = eisenstein_basis(&level, 2, &DirichletReal::trivial(), 10).unwrap();
        assert_eq!(basis.len(), 1);
        let e = &basis[0].series;
        // E₂(z) − 2E₂(2z) = −1 − 24q − 24q² − 96q³ − 24q⁴ − 144q⁵ − ⋯
        let expect = [-1, -24, -24, -96, -24, -144];
        for (n, &c) in expect.iter().enumerate() {
            assert_eq!(e.coeff(n as i64), Rat::from_integer(c.into()), "q^{n}");
        }
    }

    #[test]
    fn weight_one_level_3() {
        let level = lv(3);
        let chi = DirichletReal::legendre(3);
        let basis = eisenstein_basis(&level, 1, &chi, 10).unwrap();
        assert_eq!(basis.len(), 1, "weight-1 symmetric pair deduplicated");
        let e = &basis[0].series;
        assert_eq!(e.coeff(0), Rat::new(1.into(), 6.into())); // −B_{1,χ}/2 = 1/6
        let per_n = [1i64, 0, 1, 1, 0, 0, 2, 0, 1]; // Σ_{d|n} (d/3) for n = 1..9
        for (i, &c) in per_n.iter().enumerate() {
            assert_eq!(e.coeff(i as i64 + 1), Rat::from_integer(c.into()), "q^{}", i + 1);
        }
    }

    #[test]
    fn parity_and_empty_family_errors() {
        let level = lv(3);
        assert!(matches!(
            eisenstein_basis(&level, 2, &DirichletReal::legendre(3), 10),
            Err(EisError::ParityMismatch { .. })
        ));
        assert!(matches!(
            eisenstein_basis(&level, 0, &DirichletReal::legendre(5), 10),
            Err(EisError::EmptyFamily { .. })
        ));
    }

    #[test]
    fn dimension_table_spec_rows() {
        assert_eq!(dimension_d(&lv(11), 2, &DirichletReal::trivial()), 1);
        assert_eq!(dimension_d(&lv(7), 4, &DirichletReal::trivial()), 2);
        assert_eq!(dimension_d(&lv(7), 3, &DirichletReal::legendre(7)), 2);
        assert_eq!(dimension_d(&lv(14), 4, &DirichletReal::trivial()), 4);
        assert_eq!(dimension_d(&lv(14), 3, &DirichletReal::legendre(7)), 4);
        assert_eq!(dimension_d(&lv(6), 2, &DirichletReal::trivial()), 3);
        assert_eq!(dimension_d(&lv(3), 1, &DirichletReal::legendre(3)), 1);
        assert_eq!(dimension_d(&lv(15), 1, &DirichletReal::legendre(15)), 2);
        // parity mismatches collapse to 0
        assert_eq!(dimension_d(&lv(7), 2, &DirichletReal::legendre(7)), 0);
        assert_eq!(dimension_d(&lv(5), 1, &DirichletReal::legendre(5)), 0);
    }

    #[test]
    fn rank_matches_dimension_on_sample() {
        for (n, k, f) in [(2u64, 4i64, 1u64), (2, 2, 1), (6, 2, 1), (3, 1, 3), (15, 2, 5), (5, 2, 5), (15, 1, 15), (14, 3, 7)] {
            let level = lv(n);
            let chi = DirichletReal::legendre(f);
            let prec = rank_precision_floor(&level, k).max(20);
            let rank = match eisenstein_basis(&level, k, &chi, prec) {
                Ok(basis) => rank_check(&level, k, &basis, prec).unwrap(),
                Err(EisError::EmptyFamily { .. } | EisError::ParityMismatch { .. }) => 0,
                Err(e) => panic!("unexpected {e}"),
            };
            assert_eq!(rank, dimension_d(&level, k, &chi), "N={n} k={k} f={f}");
        }
    }

    #[test]
    fn level_6_weight_2_candidates_have_rank_3() {
        let level = lv(6);
        let prec = rank_precision_floor(&level, 2).max(20);
        let basis = eisenstein_basis(&level, 2, &DirichletReal::trivial(), prec).unwrap();
        assert_eq!(basis.len(), 4, "four candidate differences");
        assert_eq!(rank_check(&level, 2, &basis, prec).unwrap(), 3);
    }

    #[test]
    fn rank_check_requires_sturm_margin() {
        let level = lv(2);
        let basis = eisenstein_basis(&level, 4, &DirichletReal::trivial(), 20).unwrap();
        assert!(matches!(
            rank_check(&level, 4, &basis, 3),
            Err(EisError::InsufficientPrecision { .. })
        ));
        // degenerate inputs
        assert_eq!(rank_check(&level, 4, &[], 20).unwrap(), 0);
    }

    #[test]
    fn coefficient_multiplicativity_spot_check() {
        // σ^{χ₁,χ₂}_{k−1} is multiplicative on coprime arguments
        for (f1, f2, k) in [(1u64, 7u64, 4i64), (3, 5, 3), (1, 15, 2), (7, 1, 5)] {
            let chi1 = DirichletReal::legendre(f1);
            let chi2 = DirichletReal::legendre(f2);
            let coeffs = twisted_sigma_series(&chi1, &chi2, k, 150);
            for (m, n) in [(2i64, 3i64), (3, 4), (4, 5), (5, 6), (7, 9), (8, 9), (9, 11)] {
                assert_eq!(
                    coeffs[(m * n) as usize],
                    &coeffs[m as usize] * &coeffs[n as usize],
                    "({f1},{f2},{k}) at ({m},{n})"
                );
            }
        }
    }

    #[test]
    fn real_character_enumeration() {
        assert_eq!(real_characters(&lv(15)).iter().map(|c| c.conductor()).collect::<Vec<_>>(), vec![1, 3, 5, 15]);
        assert_eq!(real_characters(&lv(2)).iter().map(|c| c.conductor()).collect::<Vec<_>>(), vec![1]);
        assert_eq!(real_characters(&lv(14)).iter().map(|c| c.conductor()).collect::<Vec<_>>(), vec![1, 7]);
    }
}
