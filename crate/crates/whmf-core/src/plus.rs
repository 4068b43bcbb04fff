//! The normalized plus-space Eisenstein series E_k^{(χ)}.
//!
//! E_k(N,χ)⁺ is one-dimensional except at (k = 1, χ ≠ ψ) and (k = 2, χ = 1),
//! where it vanishes. The generator is found numerically: evaluate the
//! Γ₀(N) Eisenstein basis at sample points, impose the eigenvector equations
//! (Σ cᵢ gᵢ)|_k W_m = χ(W_m)·(Σ cᵢ gᵢ) for a generating set of involutions
//! with the determinant-normalized weight-k slash det^{k/2}(cz+d)^{−k},
//! solve the stacked homogeneous system, demand a one-dimensional numeric
//! nullspace, reconstruct the coefficients as exact rationals, and normalize
//! the constant term to 1. Everything downstream of the reconstruction is
//! exact; held-out sample points certify the numeric residuals.
//!
//! The closed-form action of the involutions on Eisenstein series is
//! deliberately not implemented; the numeric search plus the exact
//! post-verification battery replaces it.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::bigfloat::{atan2, pi, q_at, CFix, Fix, GUARD_BITS};
use crate::chars::{CharacterPlus, I4};
use crate::eisenstein::{eisenstein_basis, EisBasisElement, EisError};
use crate::level::LevelData;
use crate::mat2::{al_matrix, coset_gamma, IMat2};
use crate::series::{rat_to_str, QSeries, Rat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlusError {
    #[error("{0} does not divide the level {1}")]
    NotADivisor(u64, u64),
    #[error("series tail bound {bound} exceeds tolerance {tol} at |q| = {radius}")]
    TailBoundTooLarge { radius: String, bound: String, tol: String },
    #[error("plus space is empty (numeric nullspace dimension 0)")]
    EmptyPlusSpace,
    #[error("numeric nullspace dimension {0} ≥ 2")]
    AmbiguousPlusSpace(usize),
    #[error("rational reconstruction failed: {0}")]
    ReconstructionFailed(String),
    #[error("projected series has zero constant term")]
    ZeroConstantTerm,
    #[error("character parity does not match weight {0}")]
    ParityMismatch(i64),
    #[error("character W-values are inconsistent with the weight-{0} action; no forms can exist")]
    InconsistentCharacter(i64),
    #[error("held-out residual {0} exceeds tolerance")]
    ResidualTooLarge(String),
    #[error("fewer than {needed} admissible sample points for W_{m}")]
    InsufficientPoints { m: u64, needed: usize },
    #[error(transparent)]
    Eisenstein(#[from] EisError),
}

/// Atkin–Lehner matrix of shape (mx, y; Nz, mw) with det m.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ALMatrix {
    pub level: u64,
    pub m: u64,
    pub mat: IMat2,
}

impl ALMatrix {
    /// Canonical representative via extended gcd.
    pub fn new(level: &LevelData, m: u64) -> Result<Self, PlusError> {
        let mat = al_matrix(level.n(), m).ok_or(PlusError::NotADivisor(m, level.n()))?;
        Ok(Self { level: level.n(), m, mat })
    }

    /// Representative preferred for numerics (the sign of the lower-right
    /// entry tuned so that Im(W_m z) stays usable on the sample strip),
    /// together with γ ∈ Γ₀(N) relating it to the canonical one:
    /// rep = γ·canonical.
    pub fn for_numerics(level: &LevelData, m: u64) -> Result<(Self, IMat2), PlusError> {
        let canon = Self::new(level, m)?;
        let alt = match (level.n(), m) {
            (6, 3) => Some(IMat2::new(3, -2, 6, -3)),
            (14, 7) => Some(IMat2::new(7, -4, 14, -7)),
            (15, 5) => Some(IMat2::new(-10, 3, 15, -5)),
            _ => None,
        };
        match alt {
            None => Ok((canon, IMat2::IDENTITY)),
            Some(mat) => {
                let gamma = coset_gamma(&mat, &canon.mat).expect("alternative representative is in the same coset");
                Ok((Self { level: level.n(), m, mat }, gamma))
            }
        }
    }
}

/// Evaluation point in the upper half plane with working precision.
#[derive(Debug, Clone)]
pub struct EvalPoint {
    pub z: CFix,
    pub bits: u32,
}

impl EvalPoint {
    pub fn new(z: CFix, bits: u32) -> Self {
        assert!(!z.im.is_negative() && !z.im.is_zero(), "evaluation points live in the upper half plane");
        Self { z, bits }
    }
}

/// Coefficient growth envelope |a_n| ≤ A·max(n,1)^{k+1}, fitted on the
/// computed coefficients and doubled.
fn envelope(series: &QSeries, k: i64) -> Rat {
    let mut best = Rat::zero();
    for (n, c) in series.iter_known() {
        if c.is_zero() {
            continue;
        }
        let base = BigInt::from(n.max(1));
        let ratio = c.abs() / Rat::from_integer(base.pow((k.max(0) + 1) as u32));
        if ratio > best {
            best = ratio;
        }
    }
    best * Rat::from_integer(2.into())
}

/// Rigorous-style tail estimate Σ_{n≥P} A n^{k+1} rⁿ ≤ A·P^{k+1}·r^P/(1−ρ),
/// ρ = r·((P+1)/P)^{k+1}, valid when ρ < 1.
fn tail_bound(env: &Rat, prec: i64, k: i64, r: &Fix) -> Option<Fix> {
    let s = r.scale();
    let kk = (k.max(0) + 1) as u32;
    let p = prec.max(1);
    let growth = Fix::from_rat(&Rat::new(BigInt::from(p + 1).pow(kk), BigInt::from(p).pow(kk)), s);
    let rho = r.mul(&growth);
    if Fix::one(s).sub(&rho).is_negative() || Fix::one(s).sub(&rho).is_zero() {
        return None;
    }
    let lead = Fix::from_rat(env, s)
        .mul(&Fix::from_rat(&Rat::from_integer(BigInt::from(p).pow(kk)), s))
        .mul(&r.powi_fix(p));
    Some(lead.div(&Fix::one(s).sub(&rho)))
}

impl Fix {
    /// xᵉ for e ≥ 0 by binary exponentiation.
    pub fn powi_fix(&self, e: i64) -> Fix {
        assert!(e >= 0);
        let mut acc = Fix::one(self.scale());
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }
}

/// Tail-certificate flavor: polynomial envelopes |a_n| ≤ A·n^{k+1} for
/// holomorphic weight-k series, sub-exponential |a_n| ≤ A·e^{c√n} for
/// weakly holomorphic ones (hauptmoduls, f_{k,m}).
enum EnvKind {
    Poly { weight: i64, a: Rat },
    SubExp { c: Rat, a: Rat },
}

/// Sub-exponential envelope fit: slope c from the bit lengths of the
/// coefficients (with a 10% + 0.25 safety bump), then A = 2·max |a_n|e^{−c√n}.
fn fit_subexp(series: &QSeries, s: u32) -> (Rat, Rat) {
    let mut c_fit: f64 = 0.5;
    for (n, coeff) in series.iter_known() {
        if n < 4 || coeff.is_zero() {
            continue;
        }
        let log2 = coeff.numer().bits() as f64 - coeff.denom().bits() as f64 + 1.0;
        let slope = (log2 * std::f64::consts::LN_2) / (n as f64).sqrt();
        if slope > c_fit {
            c_fit = slope;
        }
    }
    let c_fit = c_fit * 1.1 + 0.25;
    let c = Rat::new(BigInt::from((c_fit * 1024.0).ceil() as i64), 1024.into());
    // locate the maximizing index by f64 exponent comparison, then compute
    // the constant exactly at that index (with a 2-bit cushion)
    let mut best: Option<(i64, f64)> = None;
    for (n, coeff) in series.iter_known() {
        if coeff.is_zero() {
            continue;
        }
        let log2 = coeff.numer().bits() as f64 - coeff.denom().bits() as f64 + 1.0;
        let expo = log2 * std::f64::consts::LN_2 - c_fit * (n.max(0) as f64).sqrt();
        if best.as_ref().is_none_or(|(_, b)| expo > *b) {
            best = Some((n, expo));
        }
    }
    let Some((n_star, _)) = best else {
        return (c, Rat::zero());
    };
    let coeff = series.try_coeff(n_star).expect("indexed coefficient");
    let root_n = Fix::from_i64(n_star.max(0), s).sqrt();
    let decay = crate::bigfloat::exp_real(&Fix::from_rat(&c, s).mul(&root_n).neg());
    let a_fix = Fix::from_rat(&coeff.abs(), s).mul(&decay);
    let a = a_fix.to_rat() * Rat::from_integer(8.into()); // doubled, plus 2-bit cushion
    (c, a)
}

/// Sub-exponential tail: Σ_{n≥P} A e^{c√n} rⁿ ≤ A e^{c√P} r^P/(1−ρ) with
/// ρ = r·e^{c/(2√P)} (concavity of √), valid when ρ < 1.
fn tail_bound_subexp(a: &Rat, c: &Rat, prec: i64, r: &Fix) -> Option<Fix> {
    let s = r.scale();
    let p = prec.max(1);
    let root_p = Fix::from_i64(p, s).sqrt();
    let c_fix = Fix::from_rat(c, s);
    let rho = r.mul(&crate::bigfloat::exp_real(&c_fix.div(&root_p.mul_i64(2))));
    let gap = Fix::one(s).sub(&rho);
    if gap.is_negative() || gap.is_zero() {
        return None;
    }
    let lead = Fix::from_rat(a, s)
        .mul(&crate::bigfloat::exp_real(&c_fix.mul(&root_p)))
        .mul(&r.powi_fix(p));
    Some(lead.div(&gap))
}

/// A series with coefficients pre-rounded to fixed point, for repeated
/// Horner evaluation.
pub struct FixedSeries {
    val: i64,
    coeffs: Vec<Fix>,
    prec: i64,
    env: EnvKind,
}

impl FixedSeries {
    /// Holomorphic weight-k series: polynomial envelope.
    pub fn new(series: &QSeries, weight: i64, bits: u32) -> Self {
        let s = bits + GUARD_BITS;
        let coeffs = series.iter_known().map(|(_, c)| Fix::from_rat(c, s)).collect();
        Self {
            val: series.valuation(),
            coeffs,
            prec: series.precision(),
            env: EnvKind::Poly { weight, a: envelope(series, weight) },
        }
    }

    /// Weakly holomorphic series (hauptmodul, f_{k,m}): e^{c√n} envelope.
    pub fn new_weakly(series: &QSeries, bits: u32) -> Self {
        let s = bits + GUARD_BITS;
        let coeffs = series.iter_known().map(|(_, c)| Fix::from_rat(c, s)).collect();
        let (c, a) = fit_subexp(series, s);
        Self {
            val: series.valuation(),
            coeffs,
            prec: series.precision(),
            env: EnvKind::SubExp { c, a },
        }
    }

    fn tail(&self, r: &Fix) -> Option<Fix> {
        match &self.env {
            EnvKind::Poly { weight, a } => tail_bound(a, self.prec, *weight, r),
            EnvKind::SubExp { c, a } => tail_bound_subexp(a, c, self.prec, r),
        }
    }

    /// Horner evaluation at q plus a certified tail bound; the tolerance
    /// gates acceptance.
    pub fn eval(&self, q: &CFix, tol: &Fix) -> Result<(CFix, Fix), PlusError> {
        let s = q.scale();
        let r = q.abs();
        let bound = self.tail(&r).ok_or_else(|| PlusError::TailBoundTooLarge {
            radius: format!("{:.4}", r.to_f64()),
            bound: "divergent envelope".into(),
            tol: format!("{:.3e}", tol.to_f64()),
        })?;
        if tol.cmp_abs(&bound) == Ordering::Less {
            return Err(PlusError::TailBoundTooLarge {
                radius: format!("{:.4}", r.to_f64()),
                bound: format!("{:.3e}", bound.to_f64()),
                tol: format!("{:.3e}", tol.to_f64()),
            });
        }
        let mut acc = CFix::zero(s);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(q);
            acc = CFix::new(acc.re.add(c), acc.im.clone());
        }
        if self.val != 0 {
            acc = acc.mul(&q.powi(self.val));
        }
        Ok((acc, bound))
    }
}

/// Continued-fraction rational reconstruction: the first convergent p/q with
/// q ≤ den_bound and |x − p/q| < 10^{−digits}.
pub fn rational_reconstruct(x: &Fix, den_bound: &BigInt, digits: i64) -> Result<Rat, PlusError> {
    let tol = Rat::new(1.into(), BigInt::from(10).pow(digits.max(1) as u32));
    let target = x.to_rat();
    // Euclid on (numerator, denominator) generating convergents
    let (mut a, mut b) = (target.numer().clone(), target.denom().clone());
    let (mut p0, mut p1) = (BigInt::one(), BigInt::zero());
    let (mut q0, mut q1) = (BigInt::zero(), BigInt::one());
    // p0/q0 is the current convergent after each step
    let mut steps = 0;
    while !b.is_zero() && steps < 10_000 {
        let quot = &a - &a.mod_floor_ref(&b);
        let quot = quot / &b;
        let p = &quot * &p0 + &p1;
        let q = &quot * &q0 + &q1;
        (p1, p0) = (p0, p);
        (q1, q0) = (q0, q);
        let rem = &a - &quot * &b;
        (a, b) = (b, rem);
        if q0.magnitude() > den_bound.magnitude() {
            break;
        }
        let cand = Rat::new(p0.clone(), q0.clone());
        if (&cand - &target).abs() < tol {
            return Ok(cand);
        }
        steps += 1;
    }
    Err(PlusError::ReconstructionFailed(format!(
        "no convergent with denominator ≤ {den_bound} within 10^-{digits} of {:.6e}",
        x.to_f64()
    )))
}

trait ModFloorRef {
    fn mod_floor_ref(&self, other: &BigInt) -> BigInt;
}

impl ModFloorRef for BigInt {
    fn mod_floor_ref(&self, other: &BigInt) -> BigInt {
        use num_integer::Integer;
        self.mod_floor(other)
    }
}

/// Projection configuration; defaults follow the artifact-wide conventions
/// (256 working bits, series precision ≥ 200, denominator bound 10⁹,
/// residual tolerance 10⁻²⁵).
#[derive(Debug, Clone)]
pub struct ProjectionConfig {
    pub bits: u32,
    pub min_series_prec: i64,
    pub denominator_bound: u64,
    pub residual_digits: i64,
    pub tail_digits: i64,
    pub rank_digits: i64,
    pub solve_points: usize,
    pub holdout_points: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            bits: 256,
            min_series_prec: 200,
            denominator_bound: 1_000_000_000,
            residual_digits: 25,
            tail_digits: 30,
            rank_digits: 20,
            solve_points: 4,
            holdout_points: 2,
        }
    }
}

/// What was checked while producing a [`PlusEisenstein`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub series_precision: i64,
    pub working_bits: u32,
    pub equations: Vec<String>,
    pub holdout_residual_max: String,
    pub coefficient_denominators: Vec<String>,
    pub checks: Vec<String>,
}

/// The normalized generator of E_k(N,χ)⁺ with its provenance.
#[derive(Debug, Clone)]
pub struct PlusEisenstein {
    pub level: LevelData,
    pub weight: i64,
    pub chi: CharacterPlus,
    /// Exact rational coordinates in the Γ₀(N) Eisenstein basis (same
    /// enumeration order as `eisenstein_basis`), after normalization.
    pub coordinates: Vec<Rat>,
    pub series: QSeries,
    pub record: VerificationRecord,
}

impl PlusEisenstein {
    /// Re-synthesize the expansion at any precision from the exact basis
    /// coordinates; agrees bit-for-bit with `series` on the overlap.
    pub fn series_at(&self, prec: i64) -> QSeries {
        synthesize(&self.level, self.weight, &self.chi, &self.coordinates, prec)
    }
}

fn synthesize(level: &LevelData, k: i64, chi: &CharacterPlus, coords: &[Rat], prec: i64) -> QSeries {
    if k == 0 {
        return QSeries::one(prec);
    }
    let basis = eisenstein_basis(level, k, &chi.restriction(), prec).expect("basis existed at projection time");
    assert_eq!(basis.len(), coords.len());
    let mut acc = QSeries::zero(prec);
    for (c, el) in coords.iter().zip(&basis) {
        acc = &acc + &el.series.scale(c);
    }
    acc
}

/// Generating set of involutions whose eigen-equations cut out the plus
/// space: the Fricke W_N always, plus the larger prime for biprime levels.
fn equation_divisors(level: &LevelData) -> Vec<u64> {
    if level.is_prime() {
        vec![level.n()]
    } else {
        let p = *level.prime_divisors().last().expect("biprime level");
        vec![p, level.n()]
    }
}

struct MSystem {
    m: u64,
    rep: IMat2,
    /// χ₀(γ) correction from the numeric representative times χ(W_m).
    w_eff: (i64, i64),
    solve: Vec<CFix>,
    holdout: Vec<CFix>,
}

/// Im(W z) = det(W)·Im z / |cz + d|².
fn im_after(w: &IMat2, z: &CFix) -> Fix {
    let s = z.scale();
    let den = CFix::new(z.re.mul_i64(w.c).add(&Fix::from_i64(w.d, s)), z.im.mul_i64(w.c)).norm_sqr();
    z.im.mul_i64(w.det()).div(&den)
}

/// Deterministic candidate sample points for one involution. Candidates
/// live on Re z ∈ [0, 0.3], Im z ∈ [1, 2]/√N; the preference is the floor
/// Im(W_m z) ≥ 0.3/√N (small |q| at both z and W_m z). A coarse grid is
/// tried first, then a fine one; if the floor is unattainable for enough
/// points (it provably is marginal for the off-Fricke involutions at the
/// biprime levels) the best points by Im(W_m z) are used instead — the tail
/// certificates on every evaluation remain the hard gate either way.
fn sample_points_for(
    level: &LevelData,
    w: &IMat2,
    bits: u32,
    need: usize,
) -> Result<Vec<CFix>, PlusError> {
    let s = bits + GUARD_BITS;
    let n = level.n() as i64;
    let inv_sqrt_n = Fix::from_i64(1, s).div(&Fix::from_i64(n, s)).sqrt();
    let floor = inv_sqrt_n.mul(&Fix::from_rat(&Rat::new(3.into(), 10.into()), s));
    let grids: [(i64, i64); 2] = [(13, 5), (31, 9)];
    let mut best: Vec<(Fix, CFix)> = Vec::new();
    for (nx, ny) in grids {
        let mut chosen = Vec::new();
        best.clear();
        for i in 0..ny {
            for j in 0..nx {
                // x from 0.01 up to 0.30, y from 1/√N up to 2/√N
                let x = Fix::from_rat(&Rat::new((3 + 87 * j / (nx - 1)).into(), 300.into()), s);
                let y = inv_sqrt_n.mul(&Fix::from_rat(&Rat::new((ny - 1 + i).into(), (ny - 1).into()), s));
                let z = CFix::new(x, y);
                let im_wz = im_after(w, &z);
                if im_wz.is_negative() || im_wz.is_zero() {
                    continue;
                }
                if floor.cmp_abs(&im_wz) != Ordering::Greater {
                    chosen.push(z.clone());
                    if chosen.len() == need {
                        return Ok(chosen);
                    }
                }
                best.push((im_wz, z));
            }
        }
    }
    // floor unattainable: rank all candidates by Im(W_m z), descending
    best.sort_by(|a, b| b.0.cmp_abs(&a.0).then(Ordering::Equal));
    if best.len() < need {
        return Err(PlusError::InsufficientPoints { m: w.det() as u64, needed: need });
    }
    Ok(best.into_iter().take(need).map(|(_, z)| z).collect())
}

fn apply_moebius(w: &IMat2, z: &CFix) -> CFix {
    let s = z.scale();
    let num = CFix::new(z.re.mul_i64(w.a).add(&Fix::from_i64(w.b, s)), z.im.mul_i64(w.a));
    let den = CFix::new(z.re.mul_i64(w.c).add(&Fix::from_i64(w.d, s)), z.im.mul_i64(w.c));
    num.div(&den)
}

/// det^{k/2}·(cz+d)^{−k}, the normalized weight-k slash factor.
fn slash_factor(w: &IMat2, k: i64, z: &CFix) -> CFix {
    let s = z.scale();
    let den = CFix::new(z.re.mul_i64(w.c).add(&Fix::from_i64(w.d, s)), z.im.mul_i64(w.c));
    let jk = den.powi(-k);
    let det = w.det();
    let det_pow = if k % 2 == 0 {
        Fix::from_rat(&Rat::from_integer(BigInt::from(det).pow((k / 2).unsigned_abs() as u32)), s)
            .powi_signed(k / 2 >= 0)
    } else {
        let whole = BigInt::from(det).pow(((k - 1) / 2).max(0) as u32);
        // odd weights: positive square root of det
        let root = Fix::from_i64(det, s).sqrt();
        let base = Fix::from_rat(&Rat::from_integer(whole), s).mul(&root);
        if k >= 1 {
            base
        } else {
            // k ≤ −1: det^{k/2} = 1/det^{|k|/2}
            Fix::one(s).div(&Fix::from_i64(det, s).powi_fix((-k + 1) / 2).div(&root))
        }
    };
    jk.mul_fix(&det_pow)
}

impl Fix {
    fn powi_signed(self, positive: bool) -> Fix {
        if positive {
            self
        } else {
            self.recip()
        }
    }
}

/// Numeric nullspace of a complex matrix by Gaussian elimination with full
/// column bookkeeping; rows are pre-normalized to unit max entry. Returns
/// the rank and, when the nullspace is one-dimensional, a spanning vector.
fn nullspace(mut rows: Vec<Vec<CFix>>, ncols: usize, s: u32, rank_tol: &Fix) -> (usize, Option<Vec<CFix>>) {
    // normalize rows; drop numerically-zero rows
    rows.retain_mut(|row| {
        let mut biggest = Fix::zero(s);
        for e in row.iter() {
            let a = e.norm_sqr();
            if biggest.cmp_abs(&a) == Ordering::Less {
                biggest = a;
            }
        }
        let biggest = biggest.sqrt();
        if biggest.cmp_abs(rank_tol) != Ordering::Greater {
            return false;
        }
        let inv = biggest.recip();
        for e in row.iter_mut() {
            *e = e.mul_fix(&inv);
        }
        true
    });
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut r = 0usize;
    for col in 0..ncols {
        // find max |entry| in column at rows r..
        let mut best: Option<(usize, Fix)> = None;
        for (i, row) in rows.iter().enumerate().skip(r) {
            let a = row[col].norm_sqr();
            if best.as_ref().is_none_or(|(_, b)| b.cmp_abs(&a) == Ordering::Less) {
                best = Some((i, a));
            }
        }
        let Some((i, mag2)) = best else { continue };
        if mag2.sqrt().cmp_abs(rank_tol) != Ordering::Greater {
            continue; // numerically null column
        }
        rows.swap(r, i);
        let inv = rows[r][col].recip();
        for c in 0..ncols {
            rows[r][c] = rows[r][c].mul(&inv);
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[col].is_zero() {
                let f = row[col].clone();
                for c in 0..ncols {
                    let sub = pivot_row[c].mul(&f);
                    row[c] = row[c].sub(&sub);
                }
            }
        }
        pivot_cols.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    let rank = pivot_cols.len();
    let nullity = ncols - rank;
    if nullity != 1 {
        return (rank, None);
    }
    let free_col = (0..ncols).find(|c| !pivot_cols.contains(c)).expect("nullity 1");
    let mut v = vec![CFix::zero(s); ncols];
    v[free_col] = CFix::one(s);
    for (ri, &pc) in pivot_cols.iter().enumerate() {
        // pivot rows are reduced: x_pc = −row[free_col]
        v[pc] = rows[ri][free_col].neg();
    }
    (rank, Some(v))
}

/// Outcome of a raw nullspace search, before reconstruction.
pub struct SearchOutcome {
    pub rank: usize,
    pub nullity: usize,
}

/// The unique normalized element of E_k(N,χ)⁺ at the given precision.
pub fn project_plus(
    level: &LevelData,
    k: i64,
    chi: &CharacterPlus,
    prec: i64,
    cfg: &ProjectionConfig,
) -> Result<PlusEisenstein, PlusError> {
    if !chi.parity_matches(k) {
        return Err(PlusError::ParityMismatch(k));
    }
    if !chi.is_consistent_at_weight(k) {
        return Err(PlusError::InconsistentCharacter(k));
    }
    if k == 0 {
        if chi.is_trivial() {
            return Ok(PlusEisenstein {
                level: level.clone(),
                weight: 0,
                chi: chi.clone(),
                coordinates: vec![Rat::one()],
                series: QSeries::one(prec),
                record: VerificationRecord {
                    series_precision: prec,
                    working_bits: cfg.bits,
                    equations: vec!["constants".into()],
                    holdout_residual_max: "0".into(),
                    coefficient_denominators: vec!["1".into()],
                    checks: vec!["weight-0 space is the constants".into()],
                },
            });
        }
        return Err(PlusError::EmptyPlusSpace);
    }
    let coords = project_coordinates(level, k, chi, cfg)?;
    let series = synthesize(level, k, chi, &coords.0, prec);
    Ok(PlusEisenstein {
        level: level.clone(),
        weight: k,
        chi: chi.clone(),
        coordinates: coords.0,
        series,
        record: coords.1,
    })
}

/// The numeric eigenvector search + exact reconstruction, producing exact
/// basis coordinates (independent of the output precision).
fn project_coordinates(
    level: &LevelData,
    k: i64,
    chi: &CharacterPlus,
    cfg: &ProjectionConfig,
) -> Result<(Vec<Rat>, VerificationRecord), PlusError> {
    let s = cfg.bits + GUARD_BITS;
    let two_pi = pi(s).mul_i64(2);
    let tail_tol = Fix::pow10(-cfg.tail_digits, s);
    let rank_tol = Fix::pow10(-cfg.rank_digits, s);
    let residual_tol = Fix::pow10(-cfg.residual_digits, s);

    let basis_probe = match eisenstein_basis(level, k, &chi.restriction(), 8.max(cfg.min_series_prec.min(40))) {
        Ok(b) => b,
        Err(EisError::EmptyFamily { .. }) => return Err(PlusError::EmptyPlusSpace),
        Err(e) => return Err(e.into()),
    };
    let dim = basis_probe.len();
    drop(basis_probe);

    // involutions, numeric representatives, effective eigenvalues
    let mut systems: Vec<MSystem> = Vec::new();
    for m in equation_divisors(level) {
        let (alw, gamma) = ALMatrix::for_numerics(level, m)?;
        let corr = chi.restriction().value(gamma.a);
        debug_assert!(corr != 0);
        let base_w = chi.w_value(m).expect("m divides level");
        let w_eff_i4 = if corr == 1 { base_w } else { base_w.mul(&I4::MINUS_ONE) };
        let pts = sample_points_for(level, &alw.mat, cfg.bits, cfg.solve_points + cfg.holdout_points)?;
        let (solve, holdout) = pts.split_at(cfg.solve_points);
        systems.push(MSystem {
            m,
            rep: alw.mat,
            w_eff: {
                let (re, im) = w_eff_i4.complex_parts();
                (re, im)
            },
            solve: solve.to_vec(),
            holdout: holdout.to_vec(),
        });
    }

    // grow the series precision until every tail certificate clears
    let mut prec = cfg.min_series_prec;
    let mut basis: Vec<EisBasisElement>;
    let mut fixed: Vec<FixedSeries>;
    'grow: loop {
        basis = match eisenstein_basis(level, k, &chi.restriction(), prec) {
            Ok(b) => b,
            Err(EisError::EmptyFamily { .. }) => return Err(PlusError::EmptyPlusSpace),
            Err(e) => return Err(e.into()),
        };
        fixed = basis.iter().map(|e| FixedSeries::new(&e.series, k, cfg.bits)).collect();
        // check certificates at the worst point (every W_m image and z itself)
        for sysm in &systems {
            for z in sysm.solve.iter().chain(&sysm.holdout) {
                for target in [z.clone(), apply_moebius(&sysm.rep, z)] {
                    let q = q_at(&target, &two_pi);
                    for f in &fixed {
                        if f.eval(&q, &tail_tol).is_err() {
                            if prec >= 4000 {
                                return Err(PlusError::TailBoundTooLarge {
                                    radius: format!("{:.4}", q.abs().to_f64()),
                                    bound: "unreachable at precision cap".into(),
                                    tol: format!("1e-{}", cfg.tail_digits),
                                });
                            }
                            prec = (prec * 3) / 2 + 50;
                            continue 'grow;
                        }
                    }
                }
            }
        }
        break;
    }

    // stack the eigen-equations
    let mut rows: Vec<Vec<CFix>> = Vec::new();
    for sysm in &systems {
        let w_eff = CFix::new(Fix::from_i64(sysm.w_eff.0, s), Fix::from_i64(sysm.w_eff.1, s));
        for z in &sysm.solve {
            let q_z = q_at(z, &two_pi);
            let wz = apply_moebius(&sysm.rep, z);
            let q_wz = q_at(&wz, &two_pi);
            let sf = slash_factor(&sysm.rep, k, z);
            let mut row = Vec::with_capacity(dim);
            for f in &fixed {
                let (at_z, _) = f.eval(&q_z, &tail_tol)?;
                let (at_wz, _) = f.eval(&q_wz, &tail_tol)?;
                row.push(at_wz.mul(&sf).sub(&w_eff.mul(&at_z)));
            }
            rows.push(row);
        }
    }

    let (rank, vec_opt) = nullspace(rows, dim, s, &rank_tol);
    let nullity = dim - rank;
    let Some(raw) = vec_opt else {
        return if nullity == 0 {
            Err(PlusError::EmptyPlusSpace)
        } else {
            Err(PlusError::AmbiguousPlusSpace(nullity))
        };
    };

    // normalize the numeric constant term to 1
    let mut const_term = CFix::zero(s);
    for (c, el) in raw.iter().zip(&basis) {
        let c0 = Fix::from_rat(&el.series.try_coeff(0).unwrap_or_else(Rat::zero), s);
        const_term = const_term.add(&c.mul_fix(&c0));
    }
    if const_term.abs().cmp_abs(&rank_tol) != Ordering::Greater {
        return Err(PlusError::ZeroConstantTerm);
    }
    let normalized: Vec<CFix> = raw.iter().map(|c| c.div(&const_term)).collect();

    // rational reconstruction of each coordinate
    let digits = ((cfg.bits as f64) * 0.30103) as i64 - 10;
    let bound = BigInt::from(cfg.denominator_bound);
    let mut coords = Vec::with_capacity(dim);
    for c in &normalized {
        if c.im.abs().cmp_abs(&residual_tol) == Ordering::Greater {
            return Err(PlusError::ReconstructionFailed(format!(
                "coordinate has imaginary part {:.3e}",
                c.im.to_f64()
            )));
        }
        coords.push(rational_reconstruct(&c.re, &bound, digits.min(cfg.residual_digits.max(20) * 2))?);
    }

    // exact normalization: constant term exactly 1
    let mut exact_const = Rat::zero();
    for (c, el) in coords.iter().zip(&basis) {
        exact_const += c * el.series.try_coeff(0).unwrap_or_else(Rat::zero);
    }
    if exact_const.is_zero() {
        return Err(PlusError::ZeroConstantTerm);
    }
    for c in coords.iter_mut() {
        *c = &*c / &exact_const;
    }

    // held-out residual certification with the exact coordinates
    let fixed_coords: Vec<Fix> = coords.iter().map(|c| Fix::from_rat(c, s)).collect();
    let mut worst = Fix::zero(s);
    let mut equations = Vec::new();
    for sysm in &systems {
        let w_eff = CFix::new(Fix::from_i64(sysm.w_eff.0, s), Fix::from_i64(sysm.w_eff.1, s));
        equations.push(format!("W_{} rep ({},{};{},{})", sysm.m, sysm.rep.a, sysm.rep.b, sysm.rep.c, sysm.rep.d));
        for z in &sysm.holdout {
            let q_z = q_at(z, &two_pi);
            let wz = apply_moebius(&sysm.rep, z);
            let q_wz = q_at(&wz, &two_pi);
            let sf = slash_factor(&sysm.rep, k, z);
            let mut lhs = CFix::zero(s);
            let mut rhs = CFix::zero(s);
            let mut err = Fix::zero(s);
            for (c, f) in fixed_coords.iter().zip(&fixed) {
                let (at_z, e1) = f.eval(&q_z, &tail_tol)?;
                let (at_wz, e2) = f.eval(&q_wz, &tail_tol)?;
                lhs = lhs.add(&at_wz.mul(&sf).mul_fix(c));
                rhs = rhs.add(&w_eff.mul(&at_z).mul_fix(c));
                err = err.add(&e1.abs()).add(&e2.abs());
            }
            let res = lhs.sub(&rhs).abs().add(&err);
            if worst.cmp_abs(&res) == Ordering::Less {
                worst = res;
            }
        }
    }
    if residual_tol.cmp_abs(&worst) == Ordering::Less {
        return Err(PlusError::ResidualTooLarge(format!("{:.3e}", worst.to_f64())));
    }

    let record = VerificationRecord {
        series_precision: prec,
        working_bits: cfg.bits,
        equations,
        holdout_residual_max: format!("{:.3e}", worst.to_f64()),
        coefficient_denominators: coords.iter().map(|c| c.denom().to_string()).collect(),
        checks: vec![
            "numeric nullspace dimension 1".into(),
            "coordinates reconstructed and exactly normalized (constant term 1)".into(),
            format!("held-out residuals + tail bounds < 1e-{}", cfg.residual_digits),
        ],
    };
    Ok((coords, record))
}

/// Numeric nullspace dimension only (no reconstruction); used by sweeps and
/// by the ξ calibration.
pub fn nullspace_dimension(
    level: &LevelData,
    k: i64,
    chi: &CharacterPlus,
    cfg: &ProjectionConfig,
) -> Result<usize, PlusError> {
    match project_plus(level, k, chi, 10, cfg) {
        Ok(_) => Ok(1),
        Err(PlusError::EmptyPlusSpace) => Ok(0),
        Err(PlusError::AmbiguousPlusSpace(d)) => Ok(d),
        Err(e) => Err(e),
    }
}

/// The closed even-weight symmetrization (E_k(z) + N^{k/2} E_k(Nz))/(1 + N^{k/2})
/// for prime N, trivial character, even k ≥ 4: the independent route the
/// projection is checked against.
pub fn closed_symmetrization(level: &LevelData, k: i64, prec: i64) -> QSeries {
    assert!(level.is_prime() && k >= 4 && k % 2 == 0);
    let chi = crate::chars::DirichletReal::trivial();
    let basis = eisenstein_basis(level, k, &chi, prec).expect("trivial even-weight family");
    let g1 = basis.iter().find(|e| e.scale == 1).expect("scale-1 element");
    let gn = basis.iter().find(|e| e.scale == level.n()).expect("scale-N element");
    // unit-constant normalization of G_k
    let c0 = g1.series.try_coeff(0).expect("constant term");
    let e1 = g1.series.scale(&c0.recip());
    let en = gn.series.scale(&c0.recip());
    let nk2 = Rat::from_integer(BigInt::from(level.n()).pow((k / 2) as u32));
    let num = &e1 + &en.scale(&nk2);
    num.scale(&(Rat::one() + nk2).recip())
}

/// arg of a complex value in (−π, π].
pub fn arg(z: &CFix, pi_val: &Fix) -> Fix {
    atan2(&z.im, &z.re, pi_val)
}

/// Memoizing provider for plus-space projections: the exact basis
/// coordinates are computed once per (N, k, χ) and series are synthesized
/// at any requested precision from them, so recomputation at higher
/// precision agrees bit-for-bit on the overlap.
pub struct PlusCache {
    cfg: ProjectionConfig,
    coords: std::sync::Mutex<std::collections::HashMap<(u64, i64, String), std::sync::Arc<(Vec<Rat>, VerificationRecord)>>>,
}

impl PlusCache {
    pub fn new(cfg: ProjectionConfig) -> Self {
        Self { cfg, coords: std::sync::Mutex::new(std::collections::HashMap::new()) }
    }

    pub fn config(&self) -> &ProjectionConfig {
        &self.cfg
    }

    /// E_k^{(χ)} at the given precision.
    pub fn series(&self, level: &LevelData, k: i64, chi: &CharacterPlus, prec: i64) -> Result<QSeries, PlusError> {
        Ok(self.get(level, k, chi, prec)?.series)
    }

    /// Full [`PlusEisenstein`] at the given precision.
    pub fn get(&self, level: &LevelData, k: i64, chi: &CharacterPlus, prec: i64) -> Result<PlusEisenstein, PlusError> {
        if k == 0 {
            return project_plus(level, 0, chi, prec, &self.cfg);
        }
        let key = (level.n(), k, chi.canonical_name());
        let cached = {
            let map = self.coords.lock().expect("plus cache lock");
            map.get(&key).cloned()
        };
        let entry = match cached {
            Some(e) => e,
            None => {
                let fresh = project_plus(level, k, chi, 1, &self.cfg)?;
                let arc = std::sync::Arc::new((fresh.coordinates, fresh.record));
                let mut map = self.coords.lock().expect("plus cache lock");
                map.entry(key).or_insert_with(|| arc.clone());
                arc
            }
        };
        Ok(PlusEisenstein {
            level: level.clone(),
            weight: k,
            chi: chi.clone(),
            coordinates: entry.0.clone(),
            series: synthesize(level, k, chi, &entry.0, prec),
            record: entry.1.clone(),
        })
    }
}

impl Default for PlusCache {
    fn default() -> Self {
        Self::new(ProjectionConfig::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chars::DirichletReal;

    fn lv(n: u64) -> LevelData {
        LevelData::new(n).unwrap()
    }

    #[test]
    fn al_matrix_examples() {
        let l6 = lv(6);
        let w6 = ALMatrix::new(&l6, 6).unwrap();
        assert_eq!(w6.mat, IMat2::new(0, -1, 6, 0));
        let w1 = ALMatrix::new(&l6, 1).unwrap();
        assert_eq!(w1.mat, IMat2::IDENTITY);
        let w2 = ALMatrix::new(&l6, 2).unwrap();
        assert_eq!(w2.mat.det(), 2);
        assert!(ALMatrix::new(&l6, 4).is_err());
        // numeric representatives stay in the right coset
        for (n, m) in [(6u64, 3u64), (14, 7), (15, 5)] {
            let level = lv(n);
            let (alw, gamma) = ALMatrix::for_numerics(&level, m).unwrap();
            assert_eq!(alw.mat.det(), m as i64);
            assert_eq!(gamma.det(), 1);
            assert_eq!(gamma.c.rem_euclid(n as i64), 0);
        }
    }

    #[test]
    fn reconstruct_simple_rationals() {
        let s = 256 + GUARD_BITS;
        let x = Fix::from_rat(&Rat::new(1.into(), 4.into()), s);
        assert_eq!(rational_reconstruct(&x, &BigInt::from(1_000_000_000), 40).unwrap(), Rat::new(1.into(), 4.into()));
        let x = Fix::from_rat(&Rat::new(1.into(), 3.into()), s);
        assert_eq!(rational_reconstruct(&x, &BigInt::from(1_000_000_000), 40).unwrap(), Rat::new(1.into(), 3.into()));
        let x = Fix::from_rat(&Rat::new((-22).into(), 7.into()), s);
        assert_eq!(rational_reconstruct(&x, &BigInt::from(1_000_000_000), 40).unwrap(), Rat::new((-22).into(), 7.into()));
    }

    #[test]
    fn reconstruct_rejects_sqrt2() {
        let s = 256 + GUARD_BITS;
        let x = Fix::from_i64(2, s).sqrt();
        assert!(matches!(
            rational_reconstruct(&x, &BigInt::from(1_000_000_000), 40),
            Err(PlusError::ReconstructionFailed(_))
        ));
    }

    #[test]
    fn evaluate_constant_and_geometric() {
        let bits = 256;
        let s = bits + GUARD_BITS;
        let two_pi = pi(s).mul_i64(2);
        let tol = Fix::pow10(-20, s);
        // constant 1
        let one = FixedSeries::new(&QSeries::one(10), 0, bits);
        let z = CFix::new(Fix::zero(s), Fix::one(s));
        let q = q_at(&z, &two_pi);
        let (v, bound) = one.eval(&q, &tol).unwrap();
        assert!(v.sub(&CFix::one(s)).abs().to_f64() < 1e-60);
        assert!(bound.to_f64() < 1e-20);
        // geometric Σ_{n≥0} qⁿ at z = i equals 1/(1 − e^{−2π})
        let geo = FixedSeries::new(&QSeries::from_integers(0, &[1; 60], 60), 0, bits);
        let (v, bound) = geo.eval(&q, &tol).unwrap();
        let expect = Fix::one(s).div(&Fix::one(s).sub(&crate::bigfloat::exp_real(&two_pi.neg())));
        assert!(v.re.sub(&expect).abs().to_f64() < bound.to_f64() + 1e-40);
        assert!(v.im.abs().to_f64() < 1e-50);
    }

    #[test]
    fn evaluate_rejects_fat_tails() {
        let bits = 128;
        let s = bits + GUARD_BITS;
        let tol = Fix::pow10(-6, s);
        let geo = FixedSeries::new(&QSeries::from_integers(0, &[1; 50], 50), 0, bits);
        // |q| = 0.9 with 50 terms cannot certify 1e-6
        let q = CFix::new(Fix::from_rat(&Rat::new(9.into(), 10.into()), s), Fix::zero(s));
        assert!(matches!(geo.eval(&q, &tol), Err(PlusError::TailBoundTooLarge { .. })));
    }

    #[test]
    fn project_level2_weight2_trivial_is_empty() {
        let level = lv(2);
        let cfg = ProjectionConfig { min_series_prec: 60, ..Default::default() };
        let chi = CharacterPlus::trivial(&level);
        assert!(matches!(project_plus(&level, 2, &chi, 30, &cfg), Err(PlusError::EmptyPlusSpace)));
    }

    #[test]
    fn project_level2_weight4_matches_symmetrization() {
        let level = lv(2);
        let cfg = ProjectionConfig { min_series_prec: 60, ..Default::default() };
        let chi = CharacterPlus::trivial(&level);
        let e4 = project_plus(&level, 4, &chi, 40, &cfg).unwrap();
        assert_eq!(e4.series.try_coeff(0).unwrap(), Rat::one());
        let closed = closed_symmetrization(&level, 4, 40);
        assert_eq!(e4.series, closed);
    }

    #[test]
    fn project_level2_weight2_psi2() {
        let level = lv(2);
        let cfg = ProjectionConfig { min_series_prec: 60, ..Default::default() };
        let chi = CharacterPlus::psi_pow(&level, 2);
        let e2 = project_plus(&level, 2, &chi, 10, &cfg).unwrap();
        // −E₂(z) + 2E₂(2z) = 1 + 24q + 24q² + 96q³ + ⋯
        let expect = [1i64, 24, 24, 96, 24, 144, 96, 192, 24];
        for (n, &c) in expect.iter().enumerate() {
            assert_eq!(e2.series.coeff(n as i64), Rat::from_integer(c.into()), "q^{n}");
        }
    }

    #[test]
    fn project_level3_weight1_psi_exists() {
        let level = lv(3);
        let cfg = ProjectionConfig { min_series_prec: 60, ..Default::default() };
        let psi = CharacterPlus::psi(&level);
        let e1 = project_plus(&level, 1, &psi, 12, &cfg).unwrap();
        assert_eq!(e1.series.coeff(0), Rat::one());
        // E₁^{(ψ)} = 1 + 6Σ (Σ_{d|n} (d/3)) qⁿ
        let expect = [6i64, 0, 6, 6, 0, 0, 12, 0, 6];
        for (i, &c) in expect.iter().enumerate() {
            assert_eq!(e1.series.coeff(i as i64 + 1), Rat::from_integer(c.into()), "q^{}", i + 1);
        }
        // and ψ³ at weight 1 is empty (χ ≠ ψ)
        let psi3 = CharacterPlus::psi_pow(&level, 3);
        assert!(matches!(project_plus(&level, 1, &psi3, 12, &cfg), Err(PlusError::EmptyPlusSpace)));
    }

    #[test]
    fn weight_zero_cases() {
        let level = lv(5);
        let cfg = ProjectionConfig::default();
        let one = project_plus(&level, 0, &CharacterPlus::trivial(&level), 15, &cfg).unwrap();
        assert_eq!(one.series, QSeries::one(15));
        assert!(matches!(
            project_plus(&level, 0, &CharacterPlus::psi_pow(&level, 2), 15, &cfg),
            Err(PlusError::EmptyPlusSpace)
        ));
    }

    #[test]
    fn inconsistent_character_is_rejected() {
        let level = lv(2);
        let cfg = ProjectionConfig::default();
        // ψ at N = 2 has trivial (even) restriction but w(W₂)² = −1: no
        // forms at any even weight
        let psi = CharacterPlus::psi(&level);
        assert!(matches!(
            project_plus(&level, 4, &psi, 10, &cfg),
            Err(PlusError::InconsistentCharacter(_))
        ));
        // odd weight fails parity already
        assert!(matches!(project_plus(&level, 3, &psi, 10, &cfg), Err(PlusError::ParityMismatch(_))));
    }
}
