//! The superpotential model: factored rational functions
//!
//! λ(p) = ∏ᵢ (p − aᵢ) / (p^{m₀} ∏ⱼ (p − vⱼ)^{mⱼ})
//!
//! monic of degree n ≥ 1 at infinity, with the normalisation Σaᵢ = Σmⱼvⱼ
//! when s = 0.  The zeros and poles are coordinates on the underlying
//! manifold of dimension N = K + L + s − 1.

use crate::series::{LaurentSeries, MarkedPoint, SeriesError};
use crate::C;
use serde::{Deserialize, Serialize};

/// Minimal pairwise distance among zeros, poles and the origin.
pub const GENERICITY_MIN_DISTANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum MeromorphicError {
    #[error("s = 0 normalisation violated: |Σa − Σmv| = {defect:.3e}")]
    NormalizationViolated { defect: f64 },
    #[error("marked points too close: |{a} − {b}| = {dist:.3e}")]
    CoincidentPoints { a: C, b: C, dist: f64 },
    #[error("expected {expected} zeros, got {got}")]
    WrongZeroCount { expected: usize, got: usize },
    #[error("expected {expected} poles, got {got}")]
    WrongPoleCount { expected: usize, got: usize },
    #[error("inadmissible spec: {0}")]
    Inadmissible(String),
    #[error("expansion at {point} has leading exponent {got}, expected {expected}")]
    DegenerateExpansion {
        point: MarkedPoint,
        got: i64,
        expected: i64,
    },
    #[error("root finding did not converge (residual {residual:.3e})")]
    RootFindingFailed { residual: f64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

// ── Dense polynomials ──────────────────────────────────────────────────

/// Dense complex polynomial, coefficients ascending in degree.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly(pub Vec<C>);

impl Poly {
    pub fn zero() -> Self {
        Poly(vec![C::new(0.0, 0.0)])
    }

    pub fn one() -> Self {
        Poly(vec![C::new(1.0, 0.0)])
    }

    pub fn constant(c: C) -> Self {
        Poly(vec![c])
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C]) -> Self {
        let mut p = Poly::one();
        for &r in roots {
            p = p.mul(&Poly(vec![-r, C::new(1.0, 0.0)]));
        }
        p
    }

    fn from_roots_with_mult(poles: &[(C, i64)]) -> Poly {
        let mut p = Poly::one();
        for &(r, m) in poles {
            for _ in 0..m {
                p = p.mul(&Poly(vec![-r, C::new(1.0, 0.0)]));
            }
        }
        p
    }

    pub fn degree(&self) -> usize {
        let mut d = self.0.len() - 1;
        while d > 0 && self.0[d].norm() == 0.0 {
            d -= 1;
        }
        d
    }

    pub fn coeff(&self, k: usize) -> C {
        self.0.get(k).copied().unwrap_or_default()
    }

    pub fn eval(&self, z: C) -> C {
        let mut acc = C::new(0.0, 0.0);
        for &c in self.0.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    pub fn scale(&self, k: C) -> Poly {
        Poly(self.0.iter().map(|&c| c * k).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![C::new(0.0, 0.0); self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() == 1 {
            return Poly::zero();
        }
        Poly(
            self.0[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * C::new((i + 1) as f64, 0.0))
                .collect(),
        )
    }

    /// Synthetic division by (p − root); the remainder is discarded, so the
    /// caller must know `root` is a root.
    pub fn deflate(&self, root: C) -> Poly {
        let n = self.0.len();
        assert!(n >= 2, "cannot deflate a constant");
        let mut out = vec![C::new(0.0, 0.0); n - 1];
        let mut carry = self.0[n - 1];
        for k in (0..n - 1).rev() {
            out[k] = carry;
            carry = self.0[k] + carry * root;
        }
        Poly(out)
    }

    /// Coefficients of the same polynomial in x = p − center (Taylor shift).
    pub fn rebase(&self, center: C) -> Poly {
        if center.norm() == 0.0 {
            return self.clone();
        }
        let n = self.0.len();
        let mut shifted = self.clone();
        let mut out = vec![C::new(0.0, 0.0); n];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = shifted.eval(center);
            shifted = shifted
                .derivative()
                .scale(C::new(1.0 / (k as f64 + 1.0), 0.0));
        }
        Poly(out)
    }

    /// Exact series of this polynomial at a marked point in the local
    /// parameter.
    pub fn to_series(&self, point: MarkedPoint) -> LaurentSeries {
        let coeffs = match point {
            MarkedPoint::Infinity | MarkedPoint::Zero => self.0.clone(),
            MarkedPoint::Finite { value, .. } => self.rebase(value).0,
        };
        LaurentSeries::new(point, 0, coeffs, true)
    }
}

// ── Spec and coordinates ───────────────────────────────────────────────

/// Combinatorial data of a superpotential family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperpotentialSpec {
    /// Derivation weight: ∂ = p^s ∂_p with s ∈ {0, 1}.
    pub s: u8,
    /// Number of movable zeros a_i.
    pub zeros: usize,
    /// Order at the origin: pole order m₀ ≥ 1 or −1 (simple zero) for
    /// s = 1; must be 0 for s = 0.
    pub m0: i64,
    /// Pole multiplicities m₁..m_K at the movable poles.
    pub pole_multiplicities: Vec<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissibilityClass {
    AdmissibleFlatUnit,
    AdmissibleNonflatUnit,
    Inadmissible,
}

/// Outcome of the degree-condition checks, each violation named.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub class: AdmissibilityClass,
    pub dimension: usize,
    pub degree_at_infinity: i64,
    pub violations: Vec<String>,
}

impl SuperpotentialSpec {
    /// deg_∞ λ = L − Σ_{j≥0} m_j.
    pub fn n(&self) -> i64 {
        self.zeros as i64 - self.m0 - self.pole_multiplicities.iter().sum::<i64>()
    }

    /// Manifold dimension N = K + L + s − 1.
    pub fn dimension(&self) -> usize {
        self.pole_multiplicities.len() + self.zeros + self.s as usize - 1
    }

    pub fn pole_count(&self) -> usize {
        self.pole_multiplicities.len()
    }

    /// Degree-condition classification per the structure theorem.
    pub fn validate(&self) -> AdmissibilityReport {
        let mut violations = Vec::new();
        if self.s > 1 {
            violations.push(format!("s must be 0 or 1, got {}", self.s));
        }
        match (self.s, self.m0) {
            (0, 0) => {}
            (0, m) => violations.push(format!("s = 0 requires deg_0 λ = 0, got m0 = {m}")),
            (1, m) if m >= 1 || m == -1 => {}
            (1, m) => violations.push(format!("s = 1 requires m0 ≥ 1 or m0 = −1, got {m}")),
            _ => {}
        }
        for (k, &m) in self.pole_multiplicities.iter().enumerate() {
            if m < 1 {
                violations.push(format!("pole multiplicity m{} = {} must be ≥ 1", k + 1, m));
            }
        }
        let n = self.n();
        if n < 1 {
            violations.push(format!("deg_∞ λ = {n} must be ≥ 1"));
        }
        let class = if !violations.is_empty() {
            AdmissibilityClass::Inadmissible
        } else if self.s == 1 && self.m0 == -1 {
            AdmissibilityClass::AdmissibleNonflatUnit
        } else {
            AdmissibilityClass::AdmissibleFlatUnit
        };
        AdmissibilityReport {
            class,
            dimension: self.dimension(),
            degree_at_infinity: n,
            violations,
        }
    }
}

/// Zeros and poles of λ.  For s = 0 the last zero is the dependent one,
/// a_L = Σ mⱼvⱼ − Σ_{i<L} aᵢ; [`RawCoordinates::from_free`] enforces it
/// exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawCoordinates {
    pub zeros: Vec<C>,
    pub poles: Vec<C>,
}

impl RawCoordinates {
    /// Independent coordinates: every pole, and every zero except the
    /// s = 0 dependent last one.
    pub fn free(&self, spec: &SuperpotentialSpec) -> Vec<C> {
        let mut out: Vec<C> = if spec.s == 0 {
            self.zeros[..self.zeros.len() - 1].to_vec()
        } else {
            self.zeros.clone()
        };
        out.extend_from_slice(&self.poles);
        out
    }

    /// Rebuild the full chart from the free vector.
    pub fn from_free(spec: &SuperpotentialSpec, free: &[C]) -> Self {
        let k = spec.pole_count();
        assert_eq!(free.len(), spec.dimension(), "free parameter count");
        let n_free_zeros = free.len() - k;
        let mut zeros: Vec<C> = free[..n_free_zeros].to_vec();
        let poles: Vec<C> = free[n_free_zeros..].to_vec();
        if spec.s == 0 {
            let sum_mv: C = poles
                .iter()
                .zip(&spec.pole_multiplicities)
                .map(|(&v, &m)| v * C::new(m as f64, 0.0))
                .sum();
            let sum_a: C = zeros.iter().sum();
            zeros.push(sum_mv - sum_a);
        }
        RawCoordinates { zeros, poles }
    }
}

// ── Rational functions ─────────────────────────────────────────────────

/// Rational function with a polynomial numerator and factored denominator.
/// λ, λ_p and tangent vectors all live here; the factored denominator
/// keeps expansions at the poles structurally exact.
#[derive(Clone, Debug)]
pub struct RationalFunction {
    pub numer: Poly,
    pub poles: Vec<(C, i64)>,
}

impl RationalFunction {
    pub fn from_poly(numer: Poly) -> Self {
        RationalFunction {
            numer,
            poles: Vec::new(),
        }
    }

    pub fn eval(&self, z: C) -> C {
        let mut den = C::new(1.0, 0.0);
        for &(r, m) in &self.poles {
            den *= (z - r).powi(m as i32);
        }
        self.numer.eval(z) / den
    }

    pub fn scale(&self, k: C) -> Self {
        RationalFunction {
            numer: self.numer.scale(k),
            poles: self.poles.clone(),
        }
    }

    fn poles_union(&self, other: &Self) -> Vec<(C, i64)> {
        let mut out = self.poles.clone();
        for &(r, m) in &other.poles {
            match out.iter_mut().find(|(q, _)| (*q - r).norm() == 0.0) {
                Some(entry) => entry.1 = entry.1.max(m),
                None => out.push((r, m)),
            }
        }
        out
    }

    fn cofactor(&self, union: &[(C, i64)]) -> Poly {
        let mut p = Poly::one();
        for &(r, m) in union {
            let own = self
                .poles
                .iter()
                .find(|(q, _)| (*q - r).norm() == 0.0)
                .map(|&(_, mm)| mm)
                .unwrap_or(0);
            for _ in own..m {
                p = p.mul(&Poly(vec![-r, C::new(1.0, 0.0)]));
            }
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let union = self.poles_union(other);
        let numer = self
            .numer
            .mul(&self.cofactor(&union))
            .add(&other.numer.mul(&other.cofactor(&union)));
        RationalFunction {
            numer,
            poles: union,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    /// Exact d/dp (the rational-function derivative, not the derivation ∂).
    pub fn derivative(&self) -> Self {
        let distinct =
            Poly::from_roots(&self.poles.iter().map(|&(r, _)| r).collect::<Vec<_>>());
        let mut numer = self.numer.derivative().mul(&distinct);
        for (t, &(_, m)) in self.poles.iter().enumerate() {
            let mut others = Poly::constant(C::new(m as f64, 0.0));
            for (u, &(q, _)) in self.poles.iter().enumerate() {
                if u != t {
                    others = others.mul(&Poly(vec![-q, C::new(1.0, 0.0)]));
                }
            }
            numer = numer.sub(&self.numer.mul(&others));
        }
        let poles = self.poles.iter().map(|&(r, m)| (r, m + 1)).collect();
        RationalFunction { numer, poles }
    }

    /// Pole order at a finite location (0 if regular there).
    pub fn pole_order_at(&self, z: C) -> i64 {
        self.poles
            .iter()
            .filter(|(r, _)| (*r - z).norm() < 1e-9)
            .map(|&(_, m)| m)
            .sum()
    }

    /// Laurent expansion at a marked point with at least `depth` known
    /// coefficients from the leading exponent.  Expanding at a regular
    /// point gives an ordinary Taylor window.
    pub fn expand_at(
        &self,
        point: MarkedPoint,
        depth: usize,
    ) -> Result<LaurentSeries, SeriesError> {
        let margin = depth + 4 + self.numer.degree();
        match point {
            MarkedPoint::Infinity => {
                let num = self.numer.to_series(point);
                let den = Poly::from_roots_with_mult(&self.poles).to_series(point);
                let inv = den.with_min_depth(margin).invert()?;
                let prod = num.mul(&inv)?;
                let (e0, _) = prod.leading_term()?;
                prod.restrict(e0 - depth as i64 + 1, e0)
            }
            _ => {
                let center = point.location().expect("finite point");
                // Split off the structural pole at the center so its
                // multiplicity stays exact.
                let mult: i64 = self
                    .poles
                    .iter()
                    .filter(|(r, _)| (*r - center).norm() < 1e-9)
                    .map(|&(_, m)| m)
                    .sum();
                let mut cof = Poly::one();
                for &(r, m) in &self.poles {
                    if (r - center).norm() >= 1e-9 {
                        for _ in 0..m {
                            cof = cof.mul(&Poly(vec![-r, C::new(1.0, 0.0)]));
                        }
                    }
                }
                let num = self.numer.to_series(point);
                let inv = cof.to_series(point).with_min_depth(margin).invert()?;
                let prod = num.mul(&inv)?.mul_monomial(-mult);
                let (e0, _) = prod.leading_term()?;
                prod.restrict(e0, e0 + depth as i64 - 1)
            }
        }
    }

    /// Expansion checked against the expected leading exponent at a pole
    /// of λ (n at ∞, −m at finite marked points).
    pub fn expand_checked(
        &self,
        point: MarkedPoint,
        expected_leading: i64,
        depth: usize,
    ) -> Result<LaurentSeries, MeromorphicError> {
        let s = self.expand_at(point, depth)?;
        let (e0, _) = s.leading_term()?;
        if e0 != expected_leading {
            return Err(MeromorphicError::DegenerateExpansion {
                point,
                got: e0,
                expected: expected_leading,
            });
        }
        Ok(s)
    }
}

// ── Building λ and its tangent spaces ──────────────────────────────────

fn check_genericity(x: &RawCoordinates) -> Result<(), MeromorphicError> {
    let mut pts: Vec<C> = Vec::new();
    pts.extend_from_slice(&x.zeros);
    pts.extend_from_slice(&x.poles);
    pts.push(C::new(0.0, 0.0));
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (pts[i] - pts[j]).norm();
            if d < GENERICITY_MIN_DISTANCE {
                return Err(MeromorphicError::CoincidentPoints {
                    a: pts[i],
                    b: pts[j],
                    dist: d,
                });
            }
        }
    }
    Ok(())
}

/// Build the factored superpotential, enforcing the chart invariants.
pub fn build_lambda(
    spec: &SuperpotentialSpec,
    x: &RawCoordinates,
) -> Result<RationalFunction, MeromorphicError> {
    let report = spec.validate();
    if report.class == AdmissibilityClass::Inadmissible {
        return Err(MeromorphicError::Inadmissible(report.violations.join("; ")));
    }
    if x.zeros.len() != spec.zeros {
        return Err(MeromorphicError::WrongZeroCount {
            expected: spec.zeros,
            got: x.zeros.len(),
        });
    }
    if x.poles.len() != spec.pole_count() {
        return Err(MeromorphicError::WrongPoleCount {
            expected: spec.pole_count(),
            got: x.poles.len(),
        });
    }
    if spec.s == 0 {
        let sum_a: C = x.zeros.iter().sum();
        let sum_mv: C = x
            .poles
            .iter()
            .zip(&spec.pole_multiplicities)
            .map(|(&v, &m)| v * C::new(m as f64, 0.0))
            .sum();
        let scale = sum_a.norm().max(sum_mv.norm()).max(1.0);
        let defect = (sum_a - sum_mv).norm() / scale;
        if defect > 1e-9 {
            return Err(MeromorphicError::NormalizationViolated { defect });
        }
    }
    check_genericity(x)?;

    let mut numer = Poly::from_roots(&x.zeros);
    if spec.m0 < 0 {
        // A zero of order −m0 at the origin sits in the numerator.
        for _ in 0..(-spec.m0) {
            numer = numer.mul(&Poly(vec![C::new(0.0, 0.0), C::new(1.0, 0.0)]));
        }
    }
    let mut poles: Vec<(C, i64)> = Vec::new();
    if spec.m0 > 0 {
        poles.push((C::new(0.0, 0.0), spec.m0));
    }
    for (&v, &m) in x.poles.iter().zip(&spec.pole_multiplicities) {
        poles.push((v, m));
    }
    Ok(RationalFunction { numer, poles })
}

/// Denominator part of the common tangent factor
/// p^{m₀} ∏ (p − vⱼ)^{mⱼ+1}: the pole multiset for m₀ ≥ 0.  For m₀ < 0 the
/// p-power moves to the numerator; see [`tangent_numer_offset`].
pub fn tangent_factor(spec: &SuperpotentialSpec, x: &RawCoordinates) -> Vec<(C, i64)> {
    let mut poles = Vec::new();
    if spec.m0 > 0 {
        poles.push((C::new(0.0, 0.0), spec.m0));
    }
    for (&v, &m) in x.poles.iter().zip(&spec.pole_multiplicities) {
        poles.push((v, m + 1));
    }
    poles
}

/// Structural power of p dividing every tangent numerator: tangent vectors
/// are p^{offset}·(polynomials of degree ≤ N−1) over the factor poles.
pub fn tangent_numer_offset(spec: &SuperpotentialSpec) -> usize {
    (-spec.m0).max(0) as usize
}

/// Coordinate tangent basis {∂λ/∂free_i} as rational functions over the
/// common tangent factor.  For s = 0 the dependent zero a_L is eliminated
/// via the sum rule before differentiating.
pub fn tangent_basis(
    spec: &SuperpotentialSpec,
    x: &RawCoordinates,
    lambda: &RationalFunction,
) -> Vec<RationalFunction> {
    let factor = tangent_factor(spec, x);
    let poles_distinct = Poly::from_roots(&x.poles);
    let n_zeros = x.zeros.len();
    let numer = &lambda.numer;

    // ∂λ/∂a_i = −deflate(N, a_i)/D = −deflate(N, a_i)·∏(p−v_j) / factor.
    let zero_dir = |i: usize| -> Poly {
        numer
            .deflate(x.zeros[i])
            .scale(C::new(-1.0, 0.0))
            .mul(&poles_distinct)
    };
    // ∂λ/∂v_j = m_j N/(D (p−v_j)) = m_j N ∏_{u≠j}(p−v_u) / factor.
    let pole_dir = |j: usize| -> Poly {
        let mut others = Poly::constant(C::new(spec.pole_multiplicities[j] as f64, 0.0));
        for (u, &v) in x.poles.iter().enumerate() {
            if u != j {
                others = others.mul(&Poly(vec![-v, C::new(1.0, 0.0)]));
            }
        }
        numer.mul(&others)
    };

    let mut basis = Vec::with_capacity(spec.dimension());
    if spec.s == 0 {
        let dep = zero_dir(n_zeros - 1);
        for i in 0..n_zeros - 1 {
            basis.push(zero_dir(i).sub(&dep));
        }
        for j in 0..x.poles.len() {
            let m = spec.pole_multiplicities[j];
            // The pole also moves the dependent zero by m_j.
            basis.push(pole_dir(j).add(&dep.scale(C::new(m as f64, 0.0))));
        }
    } else {
        for i in 0..n_zeros {
            basis.push(zero_dir(i));
        }
        for j in 0..x.poles.len() {
            basis.push(pole_dir(j));
        }
    }
    basis
        .into_iter()
        .map(|numer| RationalFunction {
            numer,
            poles: factor.clone(),
        })
        .collect()
}

// ── Partial-fraction input chart ───────────────────────────────────────

/// Alternative input chart: polynomial part plus principal parts at the
/// poles, as in the worked examples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartialFractionInput {
    /// Coefficients of the polynomial part, ascending; monic of degree n.
    pub polynomial: Vec<C>,
    /// A_{0,1}..A_{0,m0} over p, p², … (s = 1 with m0 ≥ 1 only).
    pub origin: Vec<C>,
    /// (v_k, [A_{k,1}..A_{k,m_k}]) per movable pole.
    pub poles: Vec<(C, Vec<C>)>,
}

/// Durand-Kerner with deterministic starting values, then Newton polish.
pub fn polynomial_roots(p: &Poly) -> Result<Vec<C>, MeromorphicError> {
    let deg = p.degree();
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = p.0[deg];
    let monic = Poly(p.0[..=deg].iter().map(|&c| c / lead).collect());
    let seed = C::new(0.4, 0.9);
    let mut roots: Vec<C> = (0..deg).map(|k| seed.powu(k as u32 + 1)).collect();
    for _ in 0..400 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let mut den = C::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    den *= roots[i] - roots[j];
                }
            }
            let step = monic.eval(roots[i]) / den;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-14 {
            break;
        }
    }
    let dp = monic.derivative();
    for r in roots.iter_mut() {
        for _ in 0..8 {
            let f = monic.eval(*r);
            let d = dp.eval(*r);
            if d.norm() == 0.0 {
                break;
            }
            *r -= f / d;
        }
    }
    let residual = roots
        .iter()
        .map(|&r| monic.eval(r).norm())
        .fold(0.0, f64::max);
    if residual > 1e-8 {
        return Err(MeromorphicError::RootFindingFailed { residual });
    }
    Ok(roots)
}

impl PartialFractionInput {
    /// Convert to the factored chart by clearing denominators and finding
    /// the numerator roots.
    pub fn to_raw(&self, spec: &SuperpotentialSpec) -> Result<RawCoordinates, MeromorphicError> {
        if self.poles.len() != spec.pole_count() {
            return Err(MeromorphicError::WrongPoleCount {
                expected: spec.pole_count(),
                got: self.poles.len(),
            });
        }
        let pole_values: Vec<C> = self.poles.iter().map(|(v, _)| *v).collect();
        // Denominator root multiset for D = p^{max(m0,0)} ∏(p−v_k)^{m_k}.
        let mut den_roots: Vec<C> = Vec::new();
        for _ in 0..spec.m0.max(0) {
            den_roots.push(C::new(0.0, 0.0));
        }
        for (v, &m) in pole_values.iter().zip(&spec.pole_multiplicities) {
            for _ in 0..m {
                den_roots.push(*v);
            }
        }
        let den = Poly::from_roots(&den_roots);
        let mut numer = Poly(self.polynomial.clone()).mul(&den);
        // A/(p−c)^r contributes A·D/(p−c)^r: drop r copies of the factor.
        let mut add_principal_part = |center: C, r: usize, a: C| {
            let mut cof = Poly::constant(a);
            let mut removed = 0usize;
            for &root in &den_roots {
                if (root - center).norm() < 1e-12 && removed < r {
                    removed += 1;
                } else {
                    cof = cof.mul(&Poly(vec![-root, C::new(1.0, 0.0)]));
                }
            }
            numer = numer.add(&cof);
        };
        for (r, &a) in self.origin.iter().enumerate() {
            add_principal_part(C::new(0.0, 0.0), r + 1, a);
        }
        for (v, parts) in &self.poles {
            for (r, &a) in parts.iter().enumerate() {
                add_principal_part(*v, r + 1, a);
            }
        }
        let mut roots = polynomial_roots(&numer)?;
        if spec.m0 < 0 {
            // m0 = −1 requires the structural zero at the origin; snap it.
            let (idx, dist) = roots
                .iter()
                .enumerate()
                .map(|(i, r)| (i, r.norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or(MeromorphicError::WrongZeroCount {
                    expected: spec.zeros + 1,
                    got: 0,
                })?;
            if dist > 1e-6 {
                return Err(MeromorphicError::Inadmissible(format!(
                    "m0 = −1 requires λ(0) = 0, nearest numerator root at |z| = {dist:.3e}"
                )));
            }
            roots.remove(idx);
        }
        if roots.len() != spec.zeros {
            return Err(MeromorphicError::WrongZeroCount {
                expected: spec.zeros,
                got: roots.len(),
            });
        }
        roots.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        let mut raw = RawCoordinates {
            zeros: roots,
            poles: pole_values,
        };
        if spec.s == 0 {
            // Absorb root-finder noise into the dependent zero.
            let free = raw.free(spec);
            raw = RawCoordinates::from_free(spec, &free);
        }
        Ok(raw)
    }
}
