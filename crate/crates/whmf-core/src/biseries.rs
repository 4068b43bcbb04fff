//! Bivariate truncated Laurent series: outer variable q, inner variable p.
//!
//! A [`BiSeries`] is a Laurent series in q whose coefficients are [`QSeries`]
//! in a second formal variable p. The generating-function identity consumes
//! one q-coefficient (a full p-series) at a time, which is why the
//! representation is outer-in-q rather than a flat 2D array. Outer precision
//! follows the same min-rule as [`QSeries`]; each inner coefficient carries
//! its own honestly tracked inner precision.

use crate::series::{QSeries, SeriesError};

/// Σ_{m=v}^{M−1} c_m(p) q^m + O(q^M), with each c_m a p-series.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BiSeries {
    val: i64,
    prec: i64,
    coeffs: Vec<QSeries>,
}

impl BiSeries {
    /// Build from outer coefficients c_v(p), c_{v+1}(p), …. Leading inner
    /// zero series are trimmed (raising the outer valuation).
    pub fn new(val: i64, mut coeffs: Vec<QSeries>, prec: i64) -> Self {
        assert!(val <= prec);
        let want = (prec - val) as usize;
        assert!(coeffs.len() >= want, "missing outer coefficients");
        coeffs.truncate(want);
        let lead = coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => Self { val: prec, prec, coeffs: Vec::new() },
            Some(k) => {
                coeffs.drain(..k);
                Self { val: val + k as i64, prec, coeffs }
            }
        }
    }

    pub fn zero(prec: i64) -> Self {
        Self { val: prec, prec, coeffs: Vec::new() }
    }

    /// Embed a q-series: every outer coefficient becomes the constant inner
    /// series c + O(p^inner_prec).
    pub fn from_outer(s: &QSeries, inner_prec: i64) -> Self {
        let coeffs = s
            .iter_known()
            .map(|(_, c)| QSeries::constant(c.clone(), inner_prec))
            .collect();
        Self::new(s.valuation(), coeffs, s.precision())
    }

    /// Embed a p-series as the q^0 coefficient, known to O(q^outer_prec).
    pub fn from_inner(s: &QSeries, outer_prec: i64) -> Self {
        assert!(outer_prec >= 1);
        let mut coeffs = vec![s.clone()];
        let blank = QSeries::zero(s.precision());
        coeffs.resize(outer_prec.max(0) as usize, blank);
        Self::new(0, coeffs, outer_prec)
    }

    pub fn outer_valuation(&self) -> i64 {
        self.val
    }

    pub fn outer_precision(&self) -> i64 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Inner series at q^m; panics beyond the outer precision.
    pub fn outer_coeff(&self, m: i64) -> QSeries {
        assert!(m < self.prec, "outer coefficient q^{m} beyond precision O(q^{})", self.prec);
        if m < self.val {
            // Known zero, but with which inner precision? Use the weakest
            // stored one so we never overclaim.
            let p = self.coeffs.iter().map(|c| c.precision()).min().unwrap_or(i64::MAX);
            return QSeries::zero(p);
        }
        self.coeffs[(m - self.val) as usize].clone()
    }

    pub fn iter_known(&self) -> impl Iterator<Item = (i64, &QSeries)> {
        self.coeffs.iter().enumerate().map(move |(i, c)| (self.val + i as i64, c))
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let prec = self.prec.min(rhs.prec);
        let val = self.val.min(rhs.val).min(prec);
        let inner_floor = self
            .coeffs
            .iter()
            .chain(rhs.coeffs.iter())
            .map(|c| c.precision())
            .min()
            .unwrap_or(0);
        let mut coeffs = vec![QSeries::zero(inner_floor); (prec - val) as usize];
        for (m, c) in self.iter_known().chain(rhs.iter_known()) {
            if m < prec {
                let slot = &mut coeffs[(m - val) as usize];
                *slot = &*slot + c;
            }
        }
        Self::new(val, coeffs, prec)
    }

    pub fn neg(&self) -> Self {
        Self {
            val: self.val,
            prec: self.prec,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    /// Outer convolution; inner products follow the QSeries min-rule.
    pub fn mul(&self, rhs: &Self) -> Self {
        let prec = (self.prec + rhs.val).min(rhs.prec + self.val);
        if self.is_zero() || rhs.is_zero() {
            return Self::zero(prec);
        }
        let val = self.val + rhs.val;
        let n_out = (prec - val) as usize;
        let (a, b) = (&self.coeffs, &rhs.coeffs);
        let mut coeffs = Vec::with_capacity(n_out);
        for n in 0..n_out {
            let lo = n.saturating_sub(b.len() - 1);
            let hi = n.min(a.len() - 1);
            let mut acc: Option<QSeries> = None;
            for i in lo..=hi {
                let term = a[i].mul(&b[n - i]);
                acc = Some(match acc {
                    None => term,
                    Some(s) => &s + &term,
                });
            }
            coeffs.push(acc.expect("outer convolution range is nonempty"));
        }
        Self::new(val, coeffs, prec)
    }

    /// Long division by a denominator whose leading outer coefficient is an
    /// invertible p-series (nonzero leading inner coefficient).
    pub fn divide(&self, den: &Self) -> Result<Self, SeriesError> {
        if den.is_zero() {
            return Err(SeriesError::NonUnitDenominator);
        }
        let d0 = &den.coeffs[0];
        if d0.is_zero() {
            return Err(SeriesError::NonUnitDenominator);
        }
        let d0_inv = d0.invert()?;
        // Same precision algebra as multiplication by the inverse.
        let prec = (self.prec - den.val).min(den.prec - 2 * den.val + self.val);
        let val = self.val - den.val;
        if self.is_zero() {
            return Ok(Self::zero(prec));
        }
        let n_out = (prec - val) as usize;
        let mut out: Vec<QSeries> = Vec::with_capacity(n_out);
        for n in 0..n_out {
            // residual_n = num_{val+den.val+n} − Σ_{i<n} out_i · den_{den.val + n − i}
            let target = self.val + n as i64;
            let mut acc = if target < self.prec {
                self.outer_coeff(target)
            } else {
                QSeries::zero(i64::MAX / 4)
            };
            for (i, q) in out.iter().enumerate() {
                let dj = den.val + (n - i) as i64;
                if dj < den.prec {
                    acc = &acc - &q.mul(&den.outer_coeff(dj));
                }
            }
            out.push(acc.mul(&d0_inv));
        }
        Ok(Self::new(val, out, prec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Rat;
    use num_traits::{One, Zero};

    fn qp(val: i64, ints: &[i64], prec: i64) -> QSeries {
        QSeries::from_integers(val, ints, prec)
    }

    #[test]
    fn divide_geometric_in_outer_variable() {
        // 1 / (q⁻¹(1 − q·s(p))) = q(1 + q s + q²s² + ⋯) with s(p) = 1 + p.
        let p_in = 12;
        let m_out = 6;
        let s = qp(0, &[1, 1], p_in);
        let one = BiSeries::from_outer(&QSeries::one(m_out), p_in);
        let mut den_coeffs = vec![QSeries::one(p_in), -&s];
        den_coeffs.resize((m_out + 1) as usize, QSeries::zero(p_in));
        let den = BiSeries::new(-1, den_coeffs, m_out);
        let quot = one.divide(&den).unwrap();
        assert_eq!(quot.outer_valuation(), 1);
        for m in 1..quot.outer_precision() {
            let expect = s.pow(m - 1).unwrap();
            let got = quot.outer_coeff(m);
            let pr = expect.precision().min(got.precision());
            assert_eq!(got.truncate(pr), expect.truncate(pr), "outer q^{m}");
        }
    }

    #[test]
    fn divide_by_self_is_one() {
        let p_in = 10;
        let rows: Vec<QSeries> = vec![
            qp(-1, &[2, 0, 1], p_in),
            qp(0, &[5, -3], p_in),
            qp(1, &[1], p_in),
            QSeries::zero(p_in),
        ];
        let x = BiSeries::new(-1, rows, 3);
        let q = x.divide(&x).unwrap();
        assert_eq!(q.outer_valuation(), 0);
        let c0 = q.outer_coeff(0);
        assert_eq!(c0.coeff(0), Rat::one());
        for m in 0..q.outer_precision() {
            let c = q.outer_coeff(m);
            for n in c.valuation()..c.precision() {
                let expect = if m == 0 && n == 0 { Rat::one() } else { Rat::zero() };
                assert_eq!(c.coeff(n), expect, "entry q^{m} p^{n}");
            }
        }
    }

    #[test]
    fn mul_then_divide_round_trips() {
        let p_in = 10;
        let a = BiSeries::new(0, vec![qp(0, &[1, 2], p_in), qp(-1, &[3], p_in), QSeries::zero(p_in)], 3);
        let d = BiSeries::new(-1, vec![qp(0, &[1, -1], p_in), qp(0, &[4], p_in), QSeries::zero(p_in), QSeries::zero(p_in)], 3);
        let prod = a.mul(&d);
        let back = prod.divide(&d).unwrap();
        let prec = back.outer_precision().min(a.outer_precision());
        for m in back.outer_valuation()..prec {
            let x = back.outer_coeff(m);
            let y = a.outer_coeff(m);
            let pr = x.precision().min(y.precision());
            assert_eq!(x.truncate(pr), y.truncate(pr), "outer q^{m}");
        }
    }

    #[test]
    fn divide_rejects_non_unit_lead() {
        let p_in = 6;
        let num = BiSeries::from_outer(&QSeries::one(3), p_in);
        assert!(num.divide(&BiSeries::zero(3)).is_err());
        let z = BiSeries::zero(4);
        assert!(z.divide(&z).is_err());
    }
}
