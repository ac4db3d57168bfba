//! Laurent series in a fractional power of the local parameter.
//!
//! A Puiseux series of ramification r at a marked point stores its body as
//! an ordinary [`LaurentSeries`] in y = x^{1/r}: a body exponent e stands
//! for x^{e/r}.  Ramification 1 is exactly a Laurent series.  The branch is
//! fixed by the principal root of the leading coefficient taken when the
//! series was created.

use super::{LaurentSeries, MarkedPoint, SeriesError};
use crate::C;

#[derive(Clone, Debug)]
pub struct PuiseuxSeries {
    ramification: i64,
    body: LaurentSeries,
}

impl PuiseuxSeries {
    pub(crate) fn from_body(ramification: i64, body: LaurentSeries) -> Self {
        assert!(ramification >= 1);
        PuiseuxSeries { ramification, body }
    }

    pub fn from_laurent(series: LaurentSeries) -> Self {
        PuiseuxSeries {
            ramification: 1,
            body: series,
        }
    }

    pub fn ramification(&self) -> i64 {
        self.ramification
    }

    pub fn point(&self) -> MarkedPoint {
        self.body.point()
    }

    /// Body series in y = x^{1/r}.
    pub fn body(&self) -> &LaurentSeries {
        &self.body
    }

    /// Coefficient of x^{e} for integer e.
    pub fn coeff_integer(&self, e: i64) -> Result<C, SeriesError> {
        self.body.coeff(e * self.ramification)
    }

    pub fn scale(&self, k: C) -> Self {
        PuiseuxSeries {
            ramification: self.ramification,
            body: self.body.scale(k),
        }
    }

    /// Collapse to a Laurent series.  Every coefficient at a fractional
    /// exponent must vanish to `leak_tol` relative to the body maximum.
    pub fn to_laurent(&self, leak_tol: f64) -> Result<LaurentSeries, SeriesError> {
        let r = self.ramification;
        if r == 1 {
            return Ok(self.body.clone());
        }
        let (blo, bhi) = self.body.window();
        let cut = self.body.max_abs() * leak_tol;
        let lo = blo.div_euclid(r) + if blo.rem_euclid(r) != 0 { 1 } else { 0 };
        let hi = bhi.div_euclid(r);
        let mut coeffs = Vec::new();
        for e in blo..=bhi {
            let c = self.body.coeff(e)?;
            if e.rem_euclid(r) == 0 {
                if e >= lo * r && e <= hi * r {
                    coeffs.push(c);
                }
            } else if c.norm() > cut {
                return Err(SeriesError::FractionalPart {
                    exponent: e,
                    magnitude: c.norm(),
                });
            }
        }
        if coeffs.is_empty() {
            return Err(SeriesError::EmptyWindow);
        }
        Ok(LaurentSeries::new(
            self.point(),
            lo,
            coeffs,
            self.body.is_exact(),
        ))
    }

    fn align(&self, other: &Self) -> (LaurentSeries, LaurentSeries, i64) {
        let r1 = self.ramification;
        let r2 = other.ramification;
        let g = {
            let (mut a, mut b) = (r1, r2);
            while b != 0 {
                let t = a % b;
                a = b;
                b = t;
            }
            a
        };
        let l = r1 / g * r2;
        (self.body.stretch(l / r1), other.body.stretch(l / r2), l)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        let (a, b, l) = self.align(other);
        Ok(PuiseuxSeries {
            ramification: l,
            body: a.mul(&b)?,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        let (a, b, l) = self.align(other);
        Ok(PuiseuxSeries {
            ramification: l,
            body: a.sub(&b)?,
        })
    }

    /// Multiply by an ordinary Laurent series at the same point.
    pub fn mul_laurent(&self, other: &LaurentSeries) -> Result<Self, SeriesError> {
        Ok(PuiseuxSeries {
            ramification: self.ramification,
            body: self.body.mul(&other.stretch(self.ramification))?,
        })
    }

    /// Tr_ν(f) = ε res_{p=ν}(p^{−s} f).  The ε sign and the residue sign at
    /// ∞ cancel, so the trace is the x^{−1} coefficient of p^{−s}f at every
    /// marked point; fractional exponents cannot carry a residue.
    pub fn trace(&self, s: u8) -> Result<C, SeriesError> {
        let r = self.ramification;
        let shifted = match s {
            0 => self.body.clone(),
            1 => match self.point() {
                MarkedPoint::Infinity | MarkedPoint::Zero => self.body.mul_monomial(-r),
                MarkedPoint::Finite { .. } => {
                    let (lo, _) = self.body.window();
                    let depth = ((-r - lo).max(0) / r) as usize + 2;
                    let inv = LaurentSeries::p_inverse(self.point(), depth).stretch(r);
                    self.body.mul(&inv)?
                }
            },
            _ => panic!("traces are defined for s in {{0, 1}}"),
        };
        shifted.coeff(-r)
    }

    /// Max stored coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.body.max_abs()
    }
}
