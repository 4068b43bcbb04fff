//! Exact q-expansion arithmetic and mechanical verification for modular
//! forms on the moonshine groups Γ₀(N)⁺, N ∈ {2, 3, 5, 6, 7, 11, 14, 15, 23}.
//!
//! The library constructs, over exact rationals:
//!
//! - the eta products Δ_N = ∏_{m|N} η(mz)^{24/σ₁(N)} (weight k₁(N) = 12σ₀(N)/σ₁(N)),
//! - the Γ₀(N) Eisenstein spaces E_k(N, χ) and their dimension table,
//! - the normalized plus-space Eisenstein series E_k^{(χ)} (numeric
//!   Atkin–Lehner eigenvector search, exact rational reconstruction,
//!   exact post-verification),
//! - the hauptmoduls j_N = q⁻¹ + c₁q + ⋯ via −Δ_N · q dj_N/dq = E_{2+k₁(N)},
//! - the canonical weakly holomorphic basis f_{k,m}^{(χ)} = q^{−m} + O(q^{ℓ+1})
//!   with its monic integer Faber polynomials,
//!
//! and verifies the identities tying them together: the weight factorization
//! E_k^{(χ)} E_{2+k₁−k}^{(χ̃)} = E_{2+k₁}, the two-variable generating function
//! Σ_m f_{k,m}(z) q^m = f_k(z) f_{2−k}(τ)/(j(τ) − j(z)), coefficient duality
//! a_k(m,n) = −a_{2−k}(n,m), the divisibility n^{k−1} | a_k(m,n), integrality,
//! and the location of low-weight Eisenstein zeros on the boundary arcs for
//! N = 2, 3, 5.
//!
//! All series coefficients are arbitrary-precision rationals; floating point
//! enters only through the self-contained fixed-point module [`bigfloat`],
//! used for eigenvector search and for numeric certificates, and every
//! numerically discovered object is re-verified exactly afterwards.
//!
//! With the default `parallel` feature, coefficient convolutions and
//! independent verification jobs run on rayon; results are bit-identical to
//! the sequential fallback.

pub mod basis;
pub mod bigfloat;
pub mod biseries;
pub mod cache;
pub mod chars;
pub mod eisenstein;
pub mod hauptmodul;
pub mod level;
pub(crate) mod mat2;
pub mod par;
pub mod plus;
pub mod series;
pub mod suite;
pub mod zeros;

pub use biseries::BiSeries;
pub use level::LevelData;
pub use series::{QSeries, Rat};

/// Version string stamped into every serialized document and cache key.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The nine admitted levels: squarefree N for which Γ₀(N)⁺ has genus zero,
/// one cusp, and an eta-product Δ_N with a simple zero at the cusp.
pub const LEVELS: [u64; 9] = [2, 3, 5, 6, 7, 11, 14, 15, 23];
