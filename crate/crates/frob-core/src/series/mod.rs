//! Truncated Laurent series at marked points of the Riemann sphere with
//! exact window bookkeeping.
//!
//! A series expanded at ∞ runs in descending powers of p: everything above
//! the window is structurally zero, everything below the window is unknown
//! (truncated).  A series at a finite point runs in ascending powers of the
//! local parameter (p at 0, p−v at a movable pole): everything below the
//! window is zero, everything above is unknown.  A series flagged `exact`
//! is known to vanish beyond the window on the open side as well.
//!
//! Unknown is never silently zero: every operation computes the largest
//! output window all of whose coefficients are determined by the inputs,
//! and reading a coefficient outside a window is an error.

mod puiseux;

pub use puiseux::PuiseuxSeries;

use crate::C;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Expansion point on the Riemann sphere.
///
/// `Zero` is the fixed origin used by the s = 1 derivation; movable points
/// carry the pole index they correspond to in the superpotential data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MarkedPoint {
    Infinity,
    Zero,
    Finite { index: usize, value: C },
}

impl MarkedPoint {
    pub fn is_infinity(&self) -> bool {
        matches!(self, MarkedPoint::Infinity)
    }

    /// Location in the finite plane; `None` at infinity.
    pub fn location(&self) -> Option<C> {
        match self {
            MarkedPoint::Infinity => None,
            MarkedPoint::Zero => Some(C::new(0.0, 0.0)),
            MarkedPoint::Finite { value, .. } => Some(*value),
        }
    }

    /// Trace sign ε: −1 at infinity, +1 elsewhere.
    pub fn epsilon(&self) -> f64 {
        if self.is_infinity() {
            -1.0
        } else {
            1.0
        }
    }
}

impl fmt::Display for MarkedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkedPoint::Infinity => write!(f, "inf"),
            MarkedPoint::Zero => write!(f, "0"),
            MarkedPoint::Finite { index, .. } => write!(f, "v{}", index + 1),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SeriesError {
    #[error("series expanded at different marked points")]
    MixedPoints,
    #[error("empty output window")]
    EmptyWindow,
    #[error("coefficient at exponent {exponent} lies outside the known window")]
    InsufficientWindow { exponent: i64 },
    #[error("leading term is zero or undetectable")]
    ZeroLeadingTerm,
    #[error("logarithm input must have leading exponent 0, found {found}")]
    NonUnitInput { found: i64 },
    #[error("non-finite coefficient produced at exponent {exponent}")]
    NonFiniteCoefficient { exponent: i64 },
    #[error("fractional exponents do not vanish: |coeff| = {magnitude:.3e} at body exponent {exponent}")]
    FractionalPart { exponent: i64, magnitude: f64 },
}

/// Which side of a pivot exponent a projection keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Keep exponents ≥ k.
    Geq,
    /// Keep exponents < k.
    Lt,
}

/// Relative magnitude below which a stored coefficient is treated as zero
/// when hunting for leading terms.
const LEADING_EPS: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct LaurentSeries {
    point: MarkedPoint,
    lo: i64,
    hi: i64,
    exact: bool,
    /// Dense coefficients; index 0 corresponds to exponent `lo`.
    coeffs: Vec<C>,
}

impl LaurentSeries {
    /// Build a series from dense coefficients starting at exponent `lo`.
    ///
    /// Panics on empty or non-finite input; window errors are reserved for
    /// arithmetic, a bad constructor call is a bug.
    pub fn new(point: MarkedPoint, lo: i64, coeffs: Vec<C>, exact: bool) -> Self {
        assert!(!coeffs.is_empty(), "empty coefficient vector");
        for (i, c) in coeffs.iter().enumerate() {
            assert!(
                c.re.is_finite() && c.im.is_finite(),
                "non-finite coefficient at exponent {}",
                lo + i as i64
            );
        }
        let hi = lo + coeffs.len() as i64 - 1;
        LaurentSeries {
            point,
            lo,
            hi,
            exact,
            coeffs,
        }
    }

    /// The zero series, fully known.
    pub fn zero(point: MarkedPoint) -> Self {
        LaurentSeries::new(point, 0, vec![C::new(0.0, 0.0)], true)
    }

    /// c · x^k in the local parameter, exact.
    pub fn monomial(point: MarkedPoint, exponent: i64, coeff: C) -> Self {
        LaurentSeries::new(point, exponent, vec![coeff], true)
    }

    pub fn one(point: MarkedPoint) -> Self {
        Self::monomial(point, 0, C::new(1.0, 0.0))
    }

    pub fn point(&self) -> MarkedPoint {
        self.point
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    fn idx(&self, e: i64) -> Option<usize> {
        if e >= self.lo && e <= self.hi {
            Some((e - self.lo) as usize)
        } else {
            None
        }
    }

    /// Whether the coefficient at exponent `e` is determined.
    pub fn knows(&self, e: i64) -> bool {
        if self.idx(e).is_some() || self.exact {
            return true;
        }
        match self.point {
            MarkedPoint::Infinity => e > self.hi,
            _ => e < self.lo,
        }
    }

    /// Known coefficient at exponent `e`.
    pub fn coeff(&self, e: i64) -> Result<C, SeriesError> {
        if let Some(i) = self.idx(e) {
            Ok(self.coeffs[i])
        } else if self.knows(e) {
            Ok(C::new(0.0, 0.0))
        } else {
            Err(SeriesError::InsufficientWindow { exponent: e })
        }
    }

    fn coeff_unchecked(&self, e: i64) -> C {
        self.idx(e).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    /// Exponents known per the open-side convention: at ∞ the unknown
    /// region is below `lo`, at finite points above `hi`.
    fn truncation_bound(&self) -> Option<i64> {
        if self.exact {
            None
        } else {
            Some(match self.point {
                MarkedPoint::Infinity => self.lo,
                _ => self.hi,
            })
        }
    }

    /// Largest coefficient magnitude in the stored window.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Leading term: highest exponent at ∞, lowest at finite points.
    /// Coefficients below `LEADING_EPS` relative to the window maximum are
    /// skipped as numerical noise.
    pub fn leading_term(&self) -> Result<(i64, C), SeriesError> {
        let cut = self.max_abs() * LEADING_EPS;
        let scan: Box<dyn Iterator<Item = i64>> = match self.point {
            MarkedPoint::Infinity => Box::new((self.lo..=self.hi).rev()),
            _ => Box::new(self.lo..=self.hi),
        };
        for e in scan {
            let c = self.coeff_unchecked(e);
            if c.norm() > cut && c.norm() > 0.0 {
                return Ok((e, c));
            }
        }
        Err(SeriesError::ZeroLeadingTerm)
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c = -*c;
        }
        out
    }

    pub fn scale(&self, k: C) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= k;
        }
        out
    }

    /// Multiply by x^k where x is the local parameter (exact shift).
    pub fn mul_monomial(&self, k: i64) -> Self {
        let mut out = self.clone();
        out.lo += k;
        out.hi += k;
        out
    }

    /// Reinterpret exponents e ↦ r·e, inserting known zeros between
    /// multiples.  Used to align a Laurent series with a Puiseux body.
    pub fn stretch(&self, r: i64) -> Self {
        assert!(r >= 1);
        if r == 1 {
            return self.clone();
        }
        let width = (self.hi - self.lo) as usize;
        let mut coeffs = vec![C::new(0.0, 0.0); width * r as usize + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[i * r as usize] = c;
        }
        LaurentSeries::new(self.point, self.lo * r, coeffs, self.exact)
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        if self.point != other.point {
            return Err(SeriesError::MixedPoints);
        }
        let exact = self.exact && other.exact;
        let (lo, hi) = match self.point {
            MarkedPoint::Infinity => {
                let lo = if exact {
                    self.lo.min(other.lo)
                } else {
                    [self.truncation_bound(), other.truncation_bound()]
                        .into_iter()
                        .flatten()
                        .max()
                        .unwrap()
                };
                (lo, self.hi.max(other.hi))
            }
            _ => {
                let hi = if exact {
                    self.hi.max(other.hi)
                } else {
                    [self.truncation_bound(), other.truncation_bound()]
                        .into_iter()
                        .flatten()
                        .min()
                        .unwrap()
                };
                (self.lo.min(other.lo), hi)
            }
        };
        if lo > hi {
            return Err(SeriesError::EmptyWindow);
        }
        let coeffs = (lo..=hi)
            .map(|e| self.coeff_unchecked(e) + other.coeff_unchecked(e))
            .collect();
        Ok(LaurentSeries::new(self.point, lo, coeffs, exact))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.add(&other.neg())
    }

    /// Cauchy product on the sound output window.
    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        if self.point != other.point {
            return Err(SeriesError::MixedPoints);
        }
        let exact = self.exact && other.exact;
        let (lo, hi) = match self.point {
            MarkedPoint::Infinity => {
                let hi = self.hi + other.hi;
                let lo = if exact {
                    self.lo + other.lo
                } else {
                    let mut lo = i64::MIN;
                    if !self.exact {
                        lo = lo.max(self.lo + other.hi);
                    }
                    if !other.exact {
                        lo = lo.max(other.lo + self.hi);
                    }
                    lo
                };
                (lo, hi)
            }
            _ => {
                let lo = self.lo + other.lo;
                let hi = if exact {
                    self.hi + other.hi
                } else {
                    let mut hi = i64::MAX;
                    if !self.exact {
                        hi = hi.min(self.hi + other.lo);
                    }
                    if !other.exact {
                        hi = hi.min(other.hi + self.lo);
                    }
                    hi
                };
                (lo, hi)
            }
        };
        if lo > hi {
            return Err(SeriesError::EmptyWindow);
        }
        let mut coeffs = vec![C::new(0.0, 0.0); (hi - lo + 1) as usize];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let e = lo + i as i64;
            let a_from = self.lo.max(e - other.hi);
            let a_to = self.hi.min(e - other.lo);
            let mut acc = C::new(0.0, 0.0);
            for a in a_from..=a_to {
                acc += self.coeff_unchecked(a) * other.coeff_unchecked(e - a);
            }
            *c = acc;
        }
        Ok(LaurentSeries::new(self.point, lo, coeffs, exact))
    }

    /// Projection onto exponents ≥ k (`Side::Geq`) or < k (`Side::Lt`).
    ///
    /// The kept part on the bounded side must be fully known; the output
    /// keeps the input window, zeroing the discarded exponents.
    pub fn project(&self, k: i64, side: Side) -> Result<Self, SeriesError> {
        let keeps_bounded_side = match (self.point, side) {
            (MarkedPoint::Infinity, Side::Geq) => true,
            (MarkedPoint::Infinity, Side::Lt) => false,
            (_, Side::Geq) => false,
            (_, Side::Lt) => true,
        };
        if keeps_bounded_side && !self.exact {
            // Kept part must not reach into the unknown tail.
            match self.point {
                MarkedPoint::Infinity => {
                    if k < self.lo {
                        return Err(SeriesError::InsufficientWindow { exponent: k });
                    }
                }
                _ => {
                    if k - 1 > self.hi {
                        return Err(SeriesError::InsufficientWindow { exponent: k - 1 });
                    }
                }
            }
        }
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let e = out.lo + i as i64;
            let keep = match side {
                Side::Geq => e >= k,
                Side::Lt => e < k,
            };
            if !keep {
                *c = C::new(0.0, 0.0);
            }
        }
        out.exact = if keeps_bounded_side { true } else { self.exact };
        Ok(out)
    }

    /// d/dp in the local parameter (exponent-wise).
    fn derive_local(&self) -> Self {
        let coeffs = (self.lo..=self.hi)
            .map(|e| self.coeff_unchecked(e) * C::new(e as f64, 0.0))
            .collect();
        LaurentSeries::new(self.point, self.lo - 1, coeffs, self.exact)
    }

    /// Expansion of p^k at this point, exact.  At ∞ and 0 the variable p is
    /// the local parameter itself; at a movable point p = v + x.
    pub fn p_power(point: MarkedPoint, k: i64) -> Self {
        match point {
            MarkedPoint::Infinity | MarkedPoint::Zero => Self::monomial(point, k, C::new(1.0, 0.0)),
            MarkedPoint::Finite { value, .. } => {
                assert!(k >= 0, "negative p powers need a truncated expansion");
                let mut s = Self::one(point);
                let lin = LaurentSeries::new(point, 0, vec![value, C::new(1.0, 0.0)], true);
                for _ in 0..k {
                    s = s.mul(&lin).expect("exact product");
                }
                s
            }
        }
    }

    /// Truncated expansion of p^{-1} at a movable finite point.
    pub fn p_inverse(point: MarkedPoint, depth: usize) -> Self {
        match point {
            MarkedPoint::Infinity | MarkedPoint::Zero => {
                Self::monomial(point, -1, C::new(1.0, 0.0))
            }
            MarkedPoint::Finite { value: v, .. } => {
                assert!(v.norm() > 0.0, "p^-1 expansion at a point colliding with 0");
                let mut coeffs = Vec::with_capacity(depth + 1);
                let mut c = C::new(1.0, 0.0) / v;
                for _ in 0..=depth {
                    coeffs.push(c);
                    c *= -C::new(1.0, 0.0) / v;
                }
                LaurentSeries::new(point, 0, coeffs, false)
            }
        }
    }

    /// The derivation ∂ = p^s ∂_p.
    pub fn derive(&self, s: u8) -> Self {
        let d = self.derive_local();
        match s {
            0 => d,
            1 => match self.point {
                MarkedPoint::Infinity | MarkedPoint::Zero => d.mul_monomial(1),
                MarkedPoint::Finite { .. } => d
                    .mul(&Self::p_power(self.point, 1))
                    .expect("product with exact p"),
            },
            _ => panic!("the derivation is defined for s in {{0, 1}}"),
        }
    }

    /// res_{p=ν} of the series: −a_{−1} at ∞, a_{−1} at finite points.
    pub fn residue(&self) -> Result<C, SeriesError> {
        let a = self.coeff(-1)?;
        Ok(if self.point.is_infinity() { -a } else { a })
    }

    /// Tr_ν(f) = ε res_{p=ν}(p^{−s} f) with ε = −1 at ∞ and +1 otherwise.
    pub fn trace(&self, s: u8) -> Result<C, SeriesError> {
        let shifted = match s {
            0 => self.clone(),
            1 => match self.point {
                MarkedPoint::Infinity | MarkedPoint::Zero => self.mul_monomial(-1),
                MarkedPoint::Finite { .. } => {
                    let depth = (-1 - self.lo).max(0) as usize + 2;
                    self.mul(&Self::p_inverse(self.point, depth))?
                }
            },
            _ => panic!("traces are defined for s in {{0, 1}}"),
        };
        Ok(C::new(self.point.epsilon(), 0.0) * shifted.residue()?)
    }

    /// Correction depth below the leading exponent that is actually known.
    /// Exact inputs may be padded with known zeros; truncated inputs are
    /// capped by their window.
    fn depth_from_leading(&self, e0: i64, requested: Option<usize>) -> usize {
        let natural = match self.point {
            MarkedPoint::Infinity => (e0 - self.lo) as usize,
            _ => (self.hi - e0) as usize,
        };
        if self.exact {
            requested.unwrap_or(natural.max(8))
        } else {
            natural
        }
    }

    /// Split f = c·x^{e0}(1 + u) and return (e0, c, u) where u is the
    /// strictly-subleading relative part on window [−depth, 0] at ∞
    /// (mirrored at finite points), truncated.
    fn unit_split(&self, requested: Option<usize>) -> Result<(i64, C, usize, LaurentSeries), SeriesError> {
        let (e0, c) = self.leading_term()?;
        let depth = self.depth_from_leading(e0, requested);
        let d = depth as i64;
        let at_inf = self.point.is_infinity();
        let (lo, hi) = if at_inf { (-d, 0) } else { (0, d) };
        let mut coeffs = Vec::with_capacity(depth + 1);
        for rel in lo..=hi {
            let val = self.coeff(e0 + rel)? / c;
            coeffs.push(if rel == 0 { val - C::new(1.0, 0.0) } else { val });
        }
        let u = LaurentSeries::new(self.point, lo, coeffs, false);
        Ok((e0, c, depth, u))
    }

    /// Newton inversion 1/f on truncated series, doubling the matched depth
    /// per step.
    pub fn invert(&self) -> Result<Self, SeriesError> {
        let (e0, c, depth, u) = self.unit_split(None)?;
        let one = Self::one(self.point);
        let mut h = one.clone();
        let f_rel = u.add(&one)?;
        let steps = (usize::BITS - depth.leading_zeros()) as usize + 2;
        for _ in 0..steps {
            let two_minus = Self::monomial(self.point, 0, C::new(2.0, 0.0)).sub(&f_rel.mul(&h)?)?;
            h = h.mul(&two_minus)?;
        }
        Ok(h.scale(C::new(1.0, 0.0) / c).mul_monomial(-e0))
    }

    /// Principal-branch rational power, as a Puiseux series with
    /// ramification equal to the reduced denominator of q.
    pub fn pow_rational(&self, num: i64, den: i64) -> Result<PuiseuxSeries, SeriesError> {
        assert!(den != 0, "zero denominator exponent");
        let g = {
            let (mut a, mut b) = (num.abs().max(1), den.abs());
            while b != 0 {
                let t = a % b;
                a = b;
                b = t;
            }
            a.max(1)
        };
        let sign = if den < 0 { -1 } else { 1 };
        let (a, b) = (sign * num / g, sign * den / g);
        let q = a as f64 / b as f64;

        // For exact non-negative integer powers the support is finite; pad
        // the window far enough to hold all of it.
        let requested = if self.exact && b == 1 && a >= 0 {
            let (e0, _) = self.leading_term()?;
            let support = match self.point {
                MarkedPoint::Infinity => (e0 - self.lo) as usize,
                _ => (self.hi - e0) as usize,
            };
            Some((support * a.unsigned_abs() as usize).max(8))
        } else {
            None
        };
        let (e0, c, depth, u) = self.unit_split(requested)?;
        // Binomial series Σ C(q, j) u^j, summed on the sound window.
        let mut acc = Self::one(self.point);
        let mut term = Self::one(self.point);
        let mut binom = 1.0;
        for j in 1..=depth {
            binom *= (q - (j as f64 - 1.0)) / j as f64;
            term = term.mul(&u)?;
            acc = acc.add(&term.scale(C::new(binom, 0.0)))?;
        }
        let lead = c.powf(q);
        if !lead.re.is_finite() || !lead.im.is_finite() {
            return Err(SeriesError::ZeroLeadingTerm);
        }
        let exact_out = self.exact && b == 1 && a >= 0;
        let mut body = acc.scale(lead).stretch(b);
        body = body.mul_monomial(a * e0);
        body.exact = exact_out;
        Ok(PuiseuxSeries::from_body(b, body))
    }

    /// Logarithm of a unit-part series (leading exponent 0): principal
    /// log of the constant plus the Mercator series of the remainder.
    pub fn log_unit(&self) -> Result<Self, SeriesError> {
        let (e0, c, depth, u) = self.unit_split(None)?;
        if e0 != 0 {
            return Err(SeriesError::NonUnitInput { found: e0 });
        }
        let mut acc = Self::monomial(self.point, 0, c.ln());
        let mut term = Self::one(self.point);
        for j in 1..=depth {
            term = term.mul(&u)?;
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            acc = acc.add(&term.scale(C::new(sign / j as f64, 0.0)))?;
        }
        Ok(acc)
    }

    /// Restrict the stored window (no knowledge added); exponents outside
    /// the current window are filled from the known closed side.
    pub fn restrict(&self, lo: i64, hi: i64) -> Result<Self, SeriesError> {
        assert!(lo <= hi);
        let coeffs = (lo..=hi).map(|e| self.coeff(e)).collect::<Result<Vec<_>, _>>()?;
        Ok(LaurentSeries::new(self.point, lo, coeffs, self.exact))
    }

    /// For exact series, widen the stored window on the open side with
    /// known zeros until at least `depth` coefficients below (at ∞) or
    /// above (finite) the leading exponent are stored.  Controls how deep
    /// subsequent inversions, powers and logs expand.  No-op on truncated
    /// series, whose knowledge cannot be extended.
    pub fn with_min_depth(&self, depth: usize) -> Self {
        if !self.exact {
            return self.clone();
        }
        let e0 = match self.leading_term() {
            Ok((e0, _)) => e0,
            Err(_) => return self.clone(),
        };
        let d = depth as i64;
        let (lo, hi) = match self.point {
            MarkedPoint::Infinity => ((e0 - d).min(self.lo), self.hi),
            _ => (self.lo, (e0 + d).max(self.hi)),
        };
        self.restrict(lo, hi).expect("exact series widen")
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for e in self.lo..=self.hi {
            let c = self.coeff_unchecked(e);
            if c.norm() == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "({:.6})x^{}", c, e)?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " on [{}, {}]{}", self.lo, self.hi, if self.exact { " exact" } else { "" })
    }
}
