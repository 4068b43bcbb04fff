//! Integer 2×2 matrices and canonical Atkin–Lehner representatives.

use num_integer::Integer;

/// Row-major integer 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IMat2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl IMat2 {
    pub const IDENTITY: IMat2 = IMat2 { a: 1, b: 0, c: 0, d: 1 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, o: &IMat2) -> IMat2 {
        IMat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// Adjugate: self · adj(self) = det·I.
    pub fn adjugate(&self) -> IMat2 {
        IMat2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Divide all entries by k, panicking on non-divisibility.
    pub fn div_exact(&self, k: i64) -> IMat2 {
        assert!(k != 0 && self.a % k == 0 && self.b % k == 0 && self.c % k == 0 && self.d % k == 0);
        IMat2 { a: self.a / k, b: self.b / k, c: self.c / k, d: self.d / k }
    }
}

/// Extended gcd: (g, s, t) with a·s + b·t = g ≥ 0.
pub fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0);
    let (mut old_t, mut t) = (0i64, 1);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Canonical Atkin–Lehner representative W_m for m | N: shape
/// (mx, y; Nz, mw) with determinant exactly m. Deterministic choices:
/// identity for m = 1, the Fricke matrix (0, −1; N, 0) for m = N, and the
/// extended-gcd solution (mu, −v; N, m) with u·m + v·(N/m) = 1 otherwise.
pub fn al_matrix(n: u64, m: u64) -> Option<IMat2> {
    if m == 0 || n % m != 0 {
        return None;
    }
    let (n, m) = (n as i64, m as i64);
    if m == 1 {
        return Some(IMat2::IDENTITY);
    }
    if m == n {
        return Some(IMat2::new(0, -1, n, 0));
    }
    let q = n / m;
    let (g, u, v) = extended_gcd(m, q);
    if g != 1 {
        return None; // non-exact divisor (cannot happen for squarefree N)
    }
    let w = IMat2::new(m * u, -v, n, m);
    debug_assert_eq!(w.det(), m);
    Some(w)
}

/// Decompose W_m² = c·γ with c = +m and γ integral of determinant 1.
/// Returns γ (an element of Γ₀(N) up to the sign absorbed in c = +m; for
/// m = N this is −I times a Γ₀(N) element, which callers account for via
/// the character value at γ's diagonal).
pub fn al_square_gamma(n: u64, m: u64) -> Option<IMat2> {
    let w = al_matrix(n, m)?;
    let w2 = w.mul(&w);
    let g = w2.div_exact(m as i64);
    debug_assert_eq!(g.det(), 1);
    Some(g)
}

/// γ with `left` = γ·`right`, when both have equal determinant and the
/// quotient is integral; used to compare Atkin–Lehner coset representatives.
pub fn coset_gamma(left: &IMat2, right: &IMat2) -> Option<IMat2> {
    let det = right.det();
    if det == 0 || left.det() != det {
        return None;
    }
    // left · right⁻¹ = left · adj(right)/det
    let adj = IMat2::new(right.d, -right.b, -right.c, right.a);
    let num = left.mul(&adj);
    if num.a % det != 0 || num.b % det != 0 || num.c % det != 0 || num.d % det != 0 {
        return None;
    }
    let g = num.div_exact(det);
    (g.det() == 1).then_some(g)
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}
