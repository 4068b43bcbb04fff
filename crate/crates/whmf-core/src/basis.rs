//! Minimal weights, the holomorphic basis, and the weakly holomorphic
//! canonical basis f_{k,m}^{(χ)} with its Faber polynomials.
//!
//! k'(N,χ,k) is the smallest k' ≥ 0, k' ≡ k (mod k₁(N)), with
//! M_{k'}(Γ₀(N)⁺, χψ^{k'−k}) ≠ 0, found by an ascending search through the
//! one-dimensionality rules (weight 0: twisted character trivial; weight 1:
//! equal to ψ; weight 2: nontrivial; weight ≥ 3: always nonzero). Writing
//! k = k' + ℓk₁, the basis element f_{k,m} = q^{−m} + O(q^{ℓ+1}) is built
//! from f_{k,−ℓ} = Δ_N^ℓ E_{k'} by multiplying with j_N and eliminating
//! against already-built elements, which keeps every intermediate an integer
//! series and yields the monic integer Faber polynomial F with
//! f_{k,m} = Δ_N^ℓ E_{k'} F(j_N).

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::chars::CharacterPlus;
use crate::hauptmodul::{hauptmodul, HauptError};
use crate::level::LevelData;
use crate::plus::{PlusCache, PlusError};
use crate::series::{rat_to_str, QSeries, Rat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BasisError {
    #[error("weight {k} is below the minimal weight {kprime} for this character")]
    EmptyBelowMinimalWeight { k: i64, kprime: i64 },
    #[error("index {m} is below the admissible range m ≥ {min}")]
    IndexBelowRange { m: i64, min: i64 },
    #[error("coefficient of q^{n} in f_({k},{m}) is {value}, not an integer")]
    NonIntegralCoefficient { k: i64, m: i64, n: i64, value: String },
    #[error("gap violation in f_({k},{m}) at q^{n}: {value}")]
    GapViolation { k: i64, m: i64, n: i64, value: String },
    #[error(transparent)]
    Plus(#[from] PlusError),
    #[error(transparent)]
    Haupt(#[from] Box<HauptError>),
}

/// Is M_{k'}(Γ₀(N)⁺, χ') nonzero? The Lemma's one-dimensionality rules,
/// guarded by parity and the W-square consistency relations.
fn weight_space_nonzero(level: &LevelData, kprime: i64, chi_twisted: &CharacterPlus) -> bool {
    if !chi_twisted.is_consistent_at_weight(kprime) {
        return false;
    }
    match kprime {
        0 => chi_twisted.is_trivial(),
        1 => chi_twisted.same_data(&CharacterPlus::psi(level)),
        2 => !chi_twisted.is_trivial(),
        _ => true,
    }
}

/// k'(N, χ, k): ascending search; terminates within a few k₁-periods.
pub fn k_min(level: &LevelData, chi: &CharacterPlus, k: i64) -> i64 {
    let k1 = level.k1();
    let mut kp = k.rem_euclid(k1);
    loop {
        if weight_space_nonzero(level, kp, &chi.twist_psi(kp - k)) {
            return kp;
        }
        kp += k1;
        assert!(
            kp <= k.rem_euclid(k1) + 4 * k1 + 4,
            "minimal-weight search runaway at N={}, chi={}, k={k}",
            level.n(),
            chi
        );
    }
}

/// The closed-form case value for k', where its branches are unambiguous
/// (k₁ ≥ 3, so the residues 0, 1, 2 are distinct mod k₁). None on levels
/// with k₁ ≤ 2 or when no branch applies cleanly.
pub fn k_min_table(level: &LevelData, chi: &CharacterPlus, k: i64) -> Option<i64> {
    let k1 = level.k1();
    if k1 < 3 {
        return None;
    }
    let psi = CharacterPlus::psi(level);
    let r = k.rem_euclid(k1);
    match r {
        0 => {
            if !chi.same_data(&psi.pow(k)) {
                Some(k1)
            } else {
                Some(0)
            }
        }
        1 => {
            // χψ^{−k} restricted to Γ₀(N) ∪ W_N Γ₀(N)
            let tw = chi.twist_psi(-k);
            let nontrivial = !tw.restriction().is_trivial()
                || tw.w_value(level.n()).expect("N divides N") != crate::chars::I4::ONE;
            if nontrivial {
                Some(1 + k1)
            } else {
                Some(1)
            }
        }
        2 => {
            if chi.twist_psi(2 - k).is_trivial() {
                Some(2 + k1)
            } else {
                Some(2)
            }
        }
        _ => Some(r),
    }
}

/// The Corollary basis of M_k(Γ₀(N)⁺, χ): the 1 + (k−k')/k₁ products
/// E_{k'}^{(χψ^{k'−k})}·(E_{k₁}^{(ψ^{k₁})})^r·Δ_N^s with r + s = (k−k')/k₁.
pub fn holomorphic_basis(
    level: &LevelData,
    chi: &CharacterPlus,
    k: i64,
    prec: i64,
    plus: &PlusCache,
) -> Result<Vec<QSeries>, BasisError> {
    let kprime = k_min(level, chi, k);
    if k < kprime {
        return Err(BasisError::EmptyBelowMinimalWeight { k, kprime });
    }
    let ell = (k - kprime) / level.k1();
    let work = prec + ell + 1;
    let e_base = plus.series(level, kprime, &chi.twist_psi(kprime - k), work)?;
    let e_k1 = plus.series(level, level.k1(), &CharacterPlus::delta_character(level), work)?;
    let delta = level.delta(work);
    let mut out = Vec::with_capacity((ell + 1) as usize);
    for s in 0..=ell {
        let r = ell - s;
        let el = e_base
            .mul(&e_k1.pow(r).expect("unit series"))
            .mul(&delta.pow(s).expect("monic series"))
            .truncate(prec);
        // leading exponents s are pairwise distinct: independence is visible
        debug_assert_eq!(el.valuation(), s);
        out.push(el);
    }
    Ok(out)
}

/// One canonical basis element f_{k,m}^{(χ)} = q^{−m} + O(q^{ℓ+1}):
/// the series together with its monic integer Faber polynomial
/// (coefficients ascending in degree).
#[derive(Debug, Clone)]
pub struct BasisElement {
    pub m: i64,
    pub series: QSeries,
    pub faber: Vec<BigInt>,
}

impl BasisElement {
    /// Integer coefficient a_k^{(χ)}(m, n).
    pub fn coefficient(&self, n: i64) -> BigInt {
        let c = self.series.coeff(n);
        debug_assert!(c.denom().is_one());
        c.numer().clone()
    }
}

/// The family f_{k,m}^{(χ)} for fixed (N, χ, k), built incrementally in m.
pub struct FBasisFamily {
    pub level: LevelData,
    pub chi: CharacterPlus,
    pub k: i64,
    pub kprime: i64,
    pub ell: i64,
    prec: i64,
    j: QSeries,
    elements: Vec<BasisElement>,
}

impl FBasisFamily {
    /// Prepare the family with output precision `prec`, able to deliver
    /// indices up to `m_max`.
    pub fn new(
        level: &LevelData,
        chi: &CharacterPlus,
        k: i64,
        m_max: i64,
        prec: i64,
        plus: &PlusCache,
    ) -> Result<Self, BasisError> {
        let kprime = k_min(level, chi, k);
        let ell = (k - kprime) / level.k1();
        assert_eq!(kprime + ell * level.k1(), k, "weight decomposition");
        let steps = (m_max + ell).max(0);
        let work = prec + steps + 2 * ell.abs() + 4;
        let e = plus.series(level, kprime, &chi.twist_psi(kprime - k), work)?;
        let delta_pow = level
            .delta(work)
            .pow(ell)
            .expect("Δ_N is monic at q¹, so negative powers exist");
        let base = delta_pow.mul(&e);
        debug_assert_eq!(base.valuation(), ell);
        let j = hauptmodul(level, work + 2, plus).map_err(Box::new)?;
        let mut fam = Self {
            level: level.clone(),
            chi: chi.clone(),
            k,
            kprime,
            ell,
            prec,
            j: j.series,
            elements: Vec::new(),
        };
        let f0 = BasisElement { m: -ell, series: base, faber: vec![BigInt::one()] };
        fam.check_element(&f0)?;
        fam.elements.push(f0);
        Ok(fam)
    }

    pub fn min_index(&self) -> i64 {
        -self.ell
    }

    /// f_{k,m}; grows the family as needed.
    pub fn element(&mut self, m: i64) -> Result<&BasisElement, BasisError> {
        if m < -self.ell {
            return Err(BasisError::IndexBelowRange { m, min: -self.ell });
        }
        while self.elements.len() as i64 <= m + self.ell {
            self.extend_one()?;
        }
        Ok(&self.elements[(m + self.ell) as usize])
    }

    /// a_k^{(χ)}(m, n), asserting integrality.
    pub fn coefficient_a(&mut self, m: i64, n: i64) -> Result<BigInt, BasisError> {
        let (k, _) = (self.k, ());
        let el = self.element(m)?;
        let c = el.series.coeff(n);
        if !c.denom().is_one() {
            return Err(BasisError::NonIntegralCoefficient { k, m, n, value: rat_to_str(&c) });
        }
        Ok(c.numer().clone())
    }

    fn extend_one(&mut self) -> Result<(), BasisError> {
        let last = self.elements.last().expect("base element present");
        let m = last.m + 1;
        let mut g = self.j.mul(&last.series);
        let mut faber: Vec<BigInt> = std::iter::once(BigInt::zero()).chain(last.faber.iter().cloned()).collect();
        // eliminate the coefficients of q^{−m'} for m' = m−1 down to −ℓ
        for prev in self.elements.iter().rev() {
            let b = g.coeff(-prev.m);
            if b.is_zero() {
                continue;
            }
            debug_assert!(b.denom().is_one());
            g = &g - &prev.series.scale(&b);
            let bi = b.numer().clone();
            for (slot, fc) in faber.iter_mut().zip(&prev.faber) {
                *slot -= &bi * fc;
            }
        }
        let el = BasisElement { m, series: g, faber };
        self.check_element(&el)?;
        self.elements.push(el);
        Ok(())
    }

    /// Gap structure, normalization, monic Faber polynomial, integrality.
    fn check_element(&self, el: &BasisElement) -> Result<(), BasisError> {
        let m = el.m;
        if el.series.coeff(-m) != Rat::one() {
            return Err(BasisError::GapViolation { k: self.k, m, n: -m, value: rat_to_str(&el.series.coeff(-m)) });
        }
        for n in (-m + 1)..=self.ell {
            let c = el.series.coeff(n);
            if !c.is_zero() {
                return Err(BasisError::GapViolation { k: self.k, m, n, value: rat_to_str(&c) });
            }
        }
        if let Some((n, value)) = el.series.first_non_integral() {
            return Err(BasisError::NonIntegralCoefficient { k: self.k, m, n, value: rat_to_str(&value) });
        }
        debug_assert_eq!(el.faber.len() as i64, self.ell + m + 1, "Faber degree D = ℓ + m");
        debug_assert!(el.faber.last().map(|c| c.is_one()).unwrap_or(false), "Faber polynomial is monic");
        Ok(())
    }

    /// Output precision the family guarantees for every delivered element.
    pub fn precision(&self) -> i64 {
        self.prec
    }

    /// Evaluate the Faber polynomial route Δ^ℓ E_{k'} F(j_N) and compare
    /// with the recursion output (an independent reassembly).
    pub fn factored_form_matches(&mut self, m: i64, plus: &PlusCache) -> Result<bool, BasisError> {
        let ell = self.ell;
        let k = self.k;
        let kprime = self.kprime;
        let prec = self.prec;
        let level = self.level.clone();
        let chi = self.chi.clone();
        let el = self.element(m)?.clone();
        let work = prec + (m + ell).max(0) + 2 * ell.abs() + 4;
        let e = plus.series(&level, kprime, &chi.twist_psi(kprime - k), work)?;
        let delta_pow = level.delta(work).pow(ell).expect("monic");
        let j = hauptmodul(&level, work + 2, plus).map_err(Box::new)?.series;
        let mut poly = QSeries::zero(j.precision() - (el.faber.len() as i64));
        let mut jpow = QSeries::one(j.precision());
        for c in &el.faber {
            poly = &poly + &jpow.scale(&Rat::from_integer(c.clone()));
            jpow = jpow.mul(&j);
        }
        let assembled = delta_pow.mul(&e).mul(&poly);
        let p = assembled.precision().min(el.series.precision());
        Ok(assembled.truncate(p) == el.series.truncate(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plus::ProjectionConfig;

    fn cache() -> PlusCache {
        PlusCache::new(ProjectionConfig { min_series_prec: 80, ..Default::default() })
    }

    fn lv(n: u64) -> LevelData {
        LevelData::new(n).unwrap()
    }

    #[test]
    fn k_min_spec_cases_level_2() {
        let level = lv(2);
        let one = CharacterPlus::trivial(&level);
        let psi2 = CharacterPlus::psi_pow(&level, 2);
        assert_eq!(k_min(&level, &one, 8), 0); // χ = ψ⁸ = 1
        assert_eq!(k_min(&level, &psi2, 8), 8); // χ ≠ ψ⁸
        assert_eq!(k_min(&level, &one, 2), 10); // k ≡ 2, χψ^{2−k} = 1
    }

    #[test]
    fn k_min_search_matches_table_on_unambiguous_levels() {
        // levels with k₁ ≥ 3 have disjoint branches; discrepancies are
        // reported, never auto-resolved — assert there are none
        let mut mismatches = Vec::new();
        for n in [2u64, 3, 5, 6, 7] {
            let level = lv(n);
            for chi in CharacterPlus::family(&level) {
                for k in 0..(3 * level.k1()) {
                    // only weight-consistent characters index actual spaces
                    if !chi.is_consistent_at_weight(k) {
                        continue;
                    }
                    let search = k_min(&level, &chi, k);
                    if let Some(table) = k_min_table(&level, &chi, k) {
                        if search != table {
                            mismatches.push(format!("N={n} chi={chi} k={k}: search {search} table {table}"));
                        }
                    }
                }
            }
        }
        assert!(mismatches.is_empty(), "{mismatches:#?}");
    }

    #[test]
    fn k_min_level_23_overlapping_branches() {
        // k₁(23) = 1: the table is ambiguous, the search is authoritative
        let level = lv(23);
        let psi = CharacterPlus::psi(&level);
        assert_eq!(k_min(&level, &psi, 1), 0); // χψ^{−1}ψ⁰… twisted to trivial at k′ = 0
        assert_eq!(k_min(&level, &CharacterPlus::trivial(&level), 2), 3);
        assert_eq!(k_min(&level, &psi, 3), 3);
        assert_eq!(k_min(&level, &CharacterPlus::trivial(&level), 0), 0);
    }

    #[test]
    fn holomorphic_basis_dimensions() {
        let plus = cache();
        let level = lv(2);
        let one = CharacterPlus::trivial(&level);
        // N=2, χ=1, k=8: dimension 2, basis {E₈, Δ₂}
        let basis = holomorphic_basis(&level, &one, 8, 30, &plus).unwrap();
        assert_eq!(basis.len(), 2);
        assert_eq!(basis[0].valuation(), 0);
        assert_eq!(basis[1].valuation(), 1);
        assert_eq!(basis[1], level.delta(30)); // E₀ = 1 times Δ
        // k = k′ gives the singleton {E_{k′}}
        let single = holomorphic_basis(&level, &CharacterPlus::psi_pow(&level, 2), 2, 20, &plus).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].coeff(0), Rat::one());
        // below minimal weight
        assert!(matches!(
            holomorphic_basis(&level, &one, 2, 20, &plus),
            Err(BasisError::EmptyBelowMinimalWeight { kprime: 10, .. })
        ));
        // N=23: k₁ = 1 so dim M_k = 1 + (k−k′)
        let l23 = lv(23);
        let psi = CharacterPlus::psi(&l23);
        let b = holomorphic_basis(&l23, &psi, 3, 15, &plus).unwrap();
        assert_eq!(b.len(), 1 + 3 - k_min(&l23, &psi, 3));
    }

    #[test]
    fn f_basis_level_2_trivial() {
        let plus = cache();
        let level = lv(2);
        let one = CharacterPlus::trivial(&level);
        let mut fam = FBasisFamily::new(&level, &one, 0, 3, 25, &plus).unwrap();
        assert_eq!(fam.min_index(), 0);
        // f_{0,0} = 1
        let f0 = fam.element(0).unwrap();
        assert_eq!(f0.series.coeff(0), Rat::one());
        for n in 1..20 {
            assert_eq!(f0.series.coeff(n), Rat::zero());
        }
        assert_eq!(f0.faber, vec![BigInt::one()]);
        // f_{0,1} = j₂ (zero constant term already gives the gap)
        let j = hauptmodul(&level, 25, &plus).unwrap();
        let f1 = fam.element(1).unwrap();
        let p = f1.series.precision().min(j.series.precision());
        assert_eq!(f1.series.truncate(p), j.series.truncate(p));
        assert_eq!(f1.faber, vec![BigInt::zero(), BigInt::one()]); // F(x) = x
        // a₀(1,1) = c₁(j₂)
        assert_eq!(fam.coefficient_a(1, 1).unwrap(), BigInt::from(4372));
        // index below range
        assert!(matches!(fam.element(-1), Err(BasisError::IndexBelowRange { .. })));
    }

    #[test]
    fn f_basis_gap_and_integrality() {
        let plus = cache();
        for (n, r, k) in [(2u64, 2i64, 2i64), (3, 1, 1), (23, 1, 1), (7, 1, 3)] {
            let level = lv(n);
            let chi = CharacterPlus::psi_pow(&level, r);
            let mut fam = FBasisFamily::new(&level, &chi, k, 6, 20, &plus).unwrap();
            for m in fam.min_index()..=5 {
                let ell = fam.ell;
                let el = fam.element(m).unwrap();
                assert_eq!(el.series.coeff(-m), Rat::one(), "N={n} k={k} m={m}");
                for j in (-m + 1)..=ell {
                    assert_eq!(el.series.coeff(j), Rat::zero(), "gap N={n} k={k} m={m} q^{j}");
                }
                assert!(el.series.is_integral(), "N={n} k={k} m={m}");
                assert!(el.faber.last().unwrap().is_one(), "monic N={n} k={k} m={m}");
            }
        }
    }

    #[test]
    fn f_basis_negative_weight_index_pairing() {
        // ℓ_{2−k} = −1−ℓ_k for the dual family
        let plus = cache();
        for (n, r, k) in [(2u64, 0i64, 0i64), (2, 2, 2), (3, 1, 1), (23, 1, 1), (15, 2, 2)] {
            let level = lv(n);
            let chi = CharacterPlus::psi_pow(&level, r);
            let fam = FBasisFamily::new(&level, &chi, k, 1, 12, &plus).unwrap();
            let dual_chi = chi.twist_psi(-2 * k);
            let dual = FBasisFamily::new(&level, &dual_chi, 2 - k, 1, 12, &plus).unwrap();
            assert_eq!(dual.ell, -1 - fam.ell, "N={n} chi=psi^{r} k={k}");
        }
    }

    #[test]
    fn factored_form_reproduces_recursion() {
        let plus = cache();
        let level = lv(2);
        let one = CharacterPlus::trivial(&level);
        let mut fam = FBasisFamily::new(&level, &one, 8, 4, 20, &plus).unwrap();
        for m in -1..=3 {
            assert!(fam.factored_form_matches(m, &plus).unwrap(), "m={m}");
        }
    }

    #[test]
    fn uniqueness_of_gap_normalization() {
        // two elements with the same index agree identically
        let plus = cache();
        let level = lv(3);
        let chi = CharacterPlus::psi(&level);
        let mut fam1 = FBasisFamily::new(&level, &chi, 1, 4, 18, &plus).unwrap();
        let mut fam2 = FBasisFamily::new(&level, &chi, 1, 4, 30, &plus).unwrap();
        for m in 0..4 {
            let a = fam1.element(m).unwrap().series.clone();
            let b = fam2.element(m).unwrap().series.clone();
            let p = a.precision().min(b.precision());
            assert_eq!(a.truncate(p), b.truncate(p), "m={m}");
        }
    }
}
