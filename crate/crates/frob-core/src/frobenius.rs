//! Flat structure: coordinates t^i_ν from residues of fractional powers
//! and logarithms of λ, their differentials and Jacobians, Euler and unit
//! fields, densities of the level-one conserved quantities, the
//! prepotential, and the structure constants in the flat chart.
//!
//! Flat coordinates:
//!
//! * t^i_∞ = 1/(1−i/n) Tr_∞ λ^{1−i/n} for 1 ≤ i ≤ n−1,
//! * t^j_ν = 1/(1−j/m) Tr_ν λ^{1−j/m} for 0 ≤ j < m,
//! * t^m_ν = Tr_ν log λ + (m/n) Tr_∞ log λ (the log coordinate).
//!
//! Log-bearing traces are evaluated through the branch decomposition
//! log λ = log[(p−ν)^m λ] − m log(p−ν) at ν and
//! log λ = log[(p−ν)^{−n} λ] + n log(p−ν) at ∞, whose leftover pieces
//! recombine into ordinary residues at the other marked points.

use crate::linalg::CMatrix;
use crate::meromorphic::{
    AdmissibilityClass, MeromorphicError, RationalFunction, RawCoordinates, SuperpotentialSpec,
};
use crate::ratio::Ratio;
use crate::rota_baxter::{AlgebraError, CotangentVector, ManifoldPoint};
use crate::series::{LaurentSeries, MarkedPoint, SeriesError, Side};
use crate::C;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FrobeniusError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Meromorphic(#[from] MeromorphicError),
    #[error("degenerate point: {0}")]
    DegeneratePoint(String),
    #[error("branch margin too small: {0}")]
    BranchAmbiguity(String),
    #[error("fractional exponents leak into a flat differential: {0}")]
    FractionalLeakage(String),
    #[error("Euler components disagree with the weight formula: residual {residual:.3e} at label {label}")]
    EulerMismatch { label: String, residual: f64 },
    #[error("analytic and finite-difference Jacobians disagree: residual {residual:.3e}")]
    JacobianMismatch { residual: f64 },
    #[error("prepotential undefined at conformal weight d = 3")]
    WeightThree,
    #[error("H-densities implemented for levels 0..=3, requested {0}")]
    UnsupportedLevel(i64),
    #[error("chart inversion failed after {iterations} iterations (residual {residual:.3e})")]
    InversionFailure { iterations: usize, residual: f64 },
}

// ── Labels ─────────────────────────────────────────────────────────────

/// Value-free identity of a marked point, used to label flat coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LabelPoint {
    Infinity,
    Zero,
    Pole(usize),
}

impl LabelPoint {
    pub fn resolve(&self, x: &RawCoordinates) -> MarkedPoint {
        match *self {
            LabelPoint::Infinity => MarkedPoint::Infinity,
            LabelPoint::Zero => MarkedPoint::Zero,
            LabelPoint::Pole(k) => MarkedPoint::Finite {
                index: k,
                value: x.poles[k],
            },
        }
    }
}

/// One flat coordinate t^{index}_{point}; at a finite point with
/// deg_ν λ = m the index m marks the logarithmic coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlatLabel {
    pub point: LabelPoint,
    pub index: i64,
}

impl std::fmt::Display for FlatLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.point {
            LabelPoint::Infinity => write!(f, "t{}_inf", self.index),
            LabelPoint::Zero => write!(f, "t{}_0", self.index),
            LabelPoint::Pole(k) => write!(f, "t{}_v{}", self.index, k + 1),
        }
    }
}

/// Deterministic base order: ∞ with descending index, then the origin,
/// then each movable pole with ascending index.
pub fn base_labels(spec: &SuperpotentialSpec) -> Vec<FlatLabel> {
    let mut labels = Vec::with_capacity(spec.dimension());
    let n = spec.n();
    for i in (1..n).rev() {
        labels.push(FlatLabel {
            point: LabelPoint::Infinity,
            index: i,
        });
    }
    if spec.s == 1 && spec.m0 >= 1 {
        for j in 0..=spec.m0 {
            labels.push(FlatLabel {
                point: LabelPoint::Zero,
                index: j,
            });
        }
    }
    for (k, &m) in spec.pole_multiplicities.iter().enumerate() {
        for j in 0..=m {
            labels.push(FlatLabel {
                point: LabelPoint::Pole(k),
                index: j,
            });
        }
    }
    assert_eq!(labels.len(), spec.dimension(), "label count");
    labels
}

// ── Flat chart ─────────────────────────────────────────────────────────

/// Flat coordinates at a point, their differentials in canonical cotangent
/// windows, the Jacobian to the free raw coordinates, and the unit field.
#[derive(Clone)]
pub struct FlatChart {
    pub labels: Vec<FlatLabel>,
    pub values: Vec<C>,
    pub differentials: Vec<CotangentVector>,
    /// `jacobian[(i, j)]` = ∂ t of the i-th label / ∂ free_j.
    pub jacobian: CMatrix,
    /// Components ⟨dt^l, e⟩ of the unit field in the chart.
    pub unit_components: Vec<C>,
    pub unit_flat: bool,
    /// Position of the label with e = ∂/∂t (permuted first when present).
    pub unit_label: Option<usize>,
    pub point: RawCoordinates,
}

impl FlatChart {
    pub fn label_position(&self, label: FlatLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }
}

/// Minimum angular distance every branch-carrying constant must keep from
/// the cut of the principal logarithm.
pub const BRANCH_MARGIN: f64 = 0.05;

fn branch_distance(z: C) -> f64 {
    std::f64::consts::PI - z.arg().abs()
}

/// Reject points where a root or log constant sits too close to the
/// negative real axis: finite differences across such a point would jump
/// branches.
fn check_branch_margins(mp: &ManifoldPoint) -> Result<(), FrobeniusError> {
    let mut worst: Option<(String, f64)> = None;
    let mut consider = |what: String, z: C| {
        let d = branch_distance(z);
        if worst.as_ref().map(|w| d < w.1).unwrap_or(true) {
            worst = Some((what, d));
        }
    };
    for &nu in mp.gamma() {
        if nu.is_infinity() {
            continue;
        }
        let m = mp.deg_at(nu);
        let lead = mp
            .lambda_series(nu)
            .mul_monomial(m)
            .coeff(0)
            .map_err(AlgebraError::from)?;
        consider(format!("leading coefficient of λ at {nu}"), lead);
    }
    // Constants log(d − c) from the recombined log(p − c) pieces.
    let mut trace_points: Vec<C> = Vec::new();
    if mp.spec.s == 1 {
        trace_points.push(C::new(0.0, 0.0));
    }
    trace_points.extend_from_slice(&mp.x.poles);
    for (k, &c) in mp.x.poles.iter().enumerate() {
        for &d in &trace_points {
            if (d - c).norm() > 0.0 {
                consider(format!("log(p − v{}) constant", k + 1), d - c);
            }
        }
    }
    if mp.spec.s == 1 && mp.spec.m0 >= 1 {
        for &d in &trace_points {
            if d.norm() > 0.0 {
                consider("log(p) constant".to_string(), d);
            }
        }
    }
    match worst {
        Some((what, dist)) if dist < BRANCH_MARGIN => Err(FrobeniusError::BranchAmbiguity(
            format!("{what} has branch distance {dist:.3e}"),
        )),
        _ => Ok(()),
    }
}

// ── H-densities and flat values ────────────────────────────────────────

/// Taylor series of log(p − c) at a finite marked point.
fn log_p_minus_c(mp: &ManifoldPoint, nu: MarkedPoint, c: C) -> Result<LaurentSeries, FrobeniusError> {
    let d = nu.location().expect("finite point");
    let two_term = LaurentSeries::new(nu, 0, vec![d - c, C::new(1.0, 0.0)], true);
    Ok(two_term.with_min_depth(mp.depth).log_unit()?)
}

/// log of the unit part of λ at ν: log[(p−ν)^m λ] at finite ν, and
/// log[(p−c)^{−n} λ] at ∞ where c is the finite point being decomposed.
fn log_unit_at(mp: &ManifoldPoint, nu: MarkedPoint, c: C) -> Result<LaurentSeries, FrobeniusError> {
    match nu {
        MarkedPoint::Infinity => {
            let n = mp.spec.n();
            let p_minus_c = LaurentSeries::new(
                MarkedPoint::Infinity,
                0,
                vec![-c, C::new(1.0, 0.0)],
                true,
            );
            let mut inv = p_minus_c.with_min_depth(mp.depth).invert()?;
            let mut acc = LaurentSeries::one(MarkedPoint::Infinity);
            for _ in 0..n {
                acc = acc.mul(&inv)?;
            }
            inv = acc;
            Ok(inv.mul(mp.lambda_series(nu))?.log_unit()?)
        }
        _ => {
            let m = mp.deg_at(nu);
            Ok(mp.lambda_series(nu).mul_monomial(m).log_unit()?)
        }
    }
}

/// λ^level / level! as a series at ν (level ≤ 3).
fn lambda_power_over_factorial(
    mp: &ManifoldPoint,
    nu: MarkedPoint,
    level: i64,
) -> Result<LaurentSeries, FrobeniusError> {
    let mut acc = LaurentSeries::one(nu).with_min_depth(mp.depth);
    let lam = mp.lambda_series(nu);
    for _ in 0..level {
        acc = acc.mul(lam)?;
    }
    let fact: f64 = (1..=level).map(|k| k as f64).product::<f64>().max(1.0);
    Ok(acc.scale(C::new(1.0 / fact, 0.0)))
}

/// All finite points at which traces can pick up residues: the origin for
/// s = 1 (even when it is a zero of λ) plus every movable pole.
fn finite_trace_points(mp: &ManifoldPoint) -> Vec<MarkedPoint> {
    let mut pts = Vec::new();
    if mp.spec.s == 1 {
        pts.push(MarkedPoint::Zero);
    }
    for (k, &v) in mp.x.poles.iter().enumerate() {
        pts.push(MarkedPoint::Finite { index: k, value: v });
    }
    pts
}

/// Iterated λ-antiderivative constants for the logarithmic densities:
/// H_(ℓ) = (λ^ℓ/ℓ!) log λ − c_ℓ λ^ℓ with c_0 = 0, c_ℓ = (c_{ℓ−1} + 1/ℓ!)/ℓ.
fn log_density_constant(level: i64) -> f64 {
    let mut c = 0.0f64;
    let mut fact = 1.0f64;
    for l in 1..=level {
        fact *= l as f64;
        c = (c + 1.0 / fact) / l as f64;
    }
    c
}

/// Expansion of λ at ν for trace purposes; at ν = 0 with m0 = −1 the
/// origin is a zero of λ, still a valid expansion point.
fn lambda_series_anywhere(
    mp: &ManifoldPoint,
    nu: MarkedPoint,
) -> Result<LaurentSeries, FrobeniusError> {
    if mp.gamma().contains(&nu) {
        Ok(mp.lambda_series(nu).clone())
    } else {
        Ok(mp.lambda.expand_at(nu, mp.depth)?)
    }
}

/// H-density of a flat label at levels 0..=3; level 0 is the flat
/// coordinate itself.
pub fn h_density(mp: &ManifoldPoint, label: FlatLabel, level: i64) -> Result<C, FrobeniusError> {
    if !(0..=3).contains(&level) {
        return Err(FrobeniusError::UnsupportedLevel(level));
    }
    let s = mp.spec.s;
    let nu = label.point.resolve(&mp.x);
    let deg = mp.deg_at(nu);
    let n = mp.spec.n();
    let is_log = !nu.is_infinity() && label.index == deg;

    if !is_log {
        // Power label: ∏_{r=0}^{level} (1 + r − j/m)^{−1} Tr_ν λ^{level+1−j/m}.
        let (j, m) = (label.index, if nu.is_infinity() { n } else { deg });
        let num = m * (level + 1) - j;
        let pw = mp.lambda_series(nu).pow_rational(num, m)?;
        let tr = pw.trace(s)?;
        let mut pref = 1.0f64;
        for r in 0..=level {
            pref /= 1.0 + r as f64 - j as f64 / m as f64;
        }
        return Ok(tr * C::new(pref, 0.0));
    }

    // Log label: branch decomposition with μ = level.
    let c = nu.location().expect("log labels live at finite points");
    let m = deg;
    let lam_pow_nu = lambda_power_over_factorial(mp, nu, level)?;
    let lam_pow_inf = lambda_power_over_factorial(mp, MarkedPoint::Infinity, level)?;
    let t1 = lam_pow_nu.mul(&log_unit_at(mp, nu, c)?)?.trace(s)?;
    let t2 = lam_pow_inf
        .mul(&log_unit_at(mp, MarkedPoint::Infinity, c)?)?
        .trace(s)?;
    let mut i0 = C::new(0.0, 0.0);
    for other in finite_trace_points(mp) {
        if other == nu {
            continue;
        }
        let lam_pow = if level == 0 {
            LaurentSeries::one(other).with_min_depth(mp.depth)
        } else {
            let lam = lambda_series_anywhere(mp, other)?;
            let mut acc = lam.clone();
            for _ in 1..level {
                acc = acc.mul(&lam)?;
            }
            let fact: f64 = (1..=level).map(|k| k as f64).product();
            acc.scale(C::new(1.0 / fact, 0.0))
        };
        i0 += lam_pow.mul(&log_p_minus_c(mp, other, c)?)?.trace(s)?;
    }
    let log_part = t1 + C::new(m as f64 / n as f64, 0.0) * t2 + C::new(m as f64, 0.0) * i0;
    if level == 0 {
        return Ok(log_part);
    }
    // Subtract c_level (Tr_ν λ^level + (m/n) Tr_∞ λ^level).
    let fact: f64 = (1..=level).map(|k| k as f64).product();
    let tr_nu = lam_pow_nu.scale(C::new(fact, 0.0)).trace(s)?;
    let tr_inf = lam_pow_inf.scale(C::new(fact, 0.0)).trace(s)?;
    let cl = log_density_constant(level);
    Ok(log_part - C::new(cl, 0.0) * (tr_nu + C::new(m as f64 / n as f64, 0.0) * tr_inf))
}

/// Flat coordinate value of one label.
pub fn flat_value(mp: &ManifoldPoint, label: FlatLabel) -> Result<C, FrobeniusError> {
    h_density(mp, label, 0)
}

/// Canonical-window differential of one label:
/// dt^i_∞ = [λ^{−i/n}]^∞_{≥1−n}, dt^j_ν = [λ^{−j/m}]^ν_{≤m}.
pub fn flat_differential(
    mp: &ManifoldPoint,
    label: FlatLabel,
) -> Result<CotangentVector, FrobeniusError> {
    let nu = label.point.resolve(&mp.x);
    let (wlo, whi) = mp.cotangent_window(nu);
    let series = if nu.is_infinity() {
        let n = mp.spec.n();
        let pw = mp.lambda_series(nu).pow_rational(-label.index, n)?;
        let lau = pw.to_laurent(1e-9).map_err(|e| match e {
            SeriesError::FractionalPart { exponent, magnitude } => FrobeniusError::FractionalLeakage(
                format!("{label}: |coeff| = {magnitude:.3e} at body exponent {exponent}"),
            ),
            other => FrobeniusError::Series(other),
        })?;
        lau.project(1 - n, Side::Geq)?
    } else {
        let m = mp.deg_at(nu);
        let pw = mp.lambda_series(nu).pow_rational(-label.index, m)?;
        let lau = pw.to_laurent(1e-9).map_err(|e| match e {
            SeriesError::FractionalPart { exponent, magnitude } => FrobeniusError::FractionalLeakage(
                format!("{label}: |coeff| = {magnitude:.3e} at body exponent {exponent}"),
            ),
            other => FrobeniusError::Series(other),
        })?;
        lau.project(m + 1, Side::Lt)?
    };
    let comps: Vec<C> = (wlo..=whi)
        .map(|e| series.coeff(e))
        .collect::<Result<_, _>>()?;
    Ok(mp.cotangent_from_components(nu, &comps))
}

/// Analytic Jacobian ∂t/∂free: `J[i][j]` = Tr_{ν_i}(∂λ/∂free_j · dt^i).
pub fn jacobian(
    mp: &ManifoldPoint,
    labels: &[FlatLabel],
    differentials: &[CotangentVector],
) -> Result<CMatrix, FrobeniusError> {
    let dim = mp.dimension();
    let mut j = CMatrix::zeros(dim, dim);
    for (i, (label, dt)) in labels.iter().zip(differentials).enumerate() {
        let nu = label.point.resolve(&mp.x);
        let basis = mp.basis_series(nu);
        for (col, b) in basis.iter().enumerate() {
            j[(i, col)] = b.mul(dt.series())?.trace(mp.spec.s)?;
        }
    }
    Ok(j)
}

// ── Unit field ─────────────────────────────────────────────────────────

/// The unit vector field as an element of the algebra: 1 generically,
/// 1 − λ_p for s = 0 with n = 1, and 1 − λ_p/λ_p(0) in the nonflat case
/// s = 1, m0 = −1.
pub fn unit_rational(mp: &ManifoldPoint) -> RationalFunction {
    let spec = &mp.spec;
    if spec.s == 0 && spec.n() == 1 {
        let one = RationalFunction::from_poly(crate::meromorphic::Poly::one());
        one.sub(&mp.lambda_p)
    } else if spec.s == 1 && spec.m0 == -1 {
        let u1 = mp.lambda_p.eval(C::new(0.0, 0.0));
        let one = RationalFunction::from_poly(crate::meromorphic::Poly::one());
        one.sub(&mp.lambda_p.scale(C::new(1.0, 0.0) / u1))
    } else {
        RationalFunction::from_poly(crate::meromorphic::Poly::one())
    }
}

fn unit_components(
    mp: &ManifoldPoint,
    labels: &[FlatLabel],
    differentials: &[CotangentVector],
) -> Result<Vec<C>, FrobeniusError> {
    let e = unit_rational(mp);
    let mut comps = Vec::with_capacity(labels.len());
    for (label, dt) in labels.iter().zip(differentials) {
        let nu = label.point.resolve(&mp.x);
        let e_series = e.expand_at(nu, mp.depth)?;
        comps.push(e_series.mul(dt.series())?.trace(mp.spec.s)?);
    }
    Ok(comps)
}

// ── Chart construction ─────────────────────────────────────────────────

/// A manifold point together with its flat chart.
#[derive(Clone)]
pub struct ChartedPoint {
    pub mp: ManifoldPoint,
    pub chart: FlatChart,
}

impl ChartedPoint {
    pub fn new(
        spec: &SuperpotentialSpec,
        x: &RawCoordinates,
        depth: Option<usize>,
    ) -> Result<Self, FrobeniusError> {
        let report = spec.validate();
        if report.class == AdmissibilityClass::Inadmissible {
            return Err(FrobeniusError::Meromorphic(MeromorphicError::Inadmissible(
                report.violations.join("; "),
            )));
        }
        let mp = ManifoldPoint::new(spec, x, depth)?;
        check_branch_margins(&mp)?;

        let mut labels = base_labels(spec);
        let mut values = Vec::with_capacity(labels.len());
        let mut differentials = Vec::with_capacity(labels.len());
        for &label in &labels {
            values.push(flat_value(&mp, label)?);
            differentials.push(flat_differential(&mp, label)?);
        }
        let mut unit = unit_components(&mp, &labels, &differentials)?;

        // The unit label, when a single label carries the whole unit field,
        // is permuted to the front so e = ∂/∂t₁.
        let is_one = |z: C| (z - C::new(1.0, 0.0)).norm() < 1e-8;
        let is_zero = |z: C| z.norm() < 1e-8;
        let dual: Vec<usize> = unit
            .iter()
            .enumerate()
            .filter(|(_, &z)| !is_zero(z))
            .map(|(i, _)| i)
            .collect();
        let unit_label = match dual.as_slice() {
            [single] if is_one(unit[*single]) => Some(*single),
            _ => None,
        };
        if let Some(pos) = unit_label {
            let perm: Vec<usize> = {
                let mut idx: Vec<usize> = (0..values.len()).collect();
                let lead = idx.remove(pos);
                let mut out = vec![lead];
                out.extend(idx);
                out
            };
            labels = perm.iter().map(|&i| labels[i]).collect();
            values = perm.iter().map(|&i| values[i]).collect();
            differentials = perm.iter().map(|&i| differentials[i].clone()).collect();
            unit = perm.iter().map(|&i| unit[i]).collect();
        }

        let jac = jacobian(&mp, &labels, &differentials)?;
        if jac.cond_1() > 1e10 {
            return Err(FrobeniusError::DegeneratePoint(format!(
                "chart Jacobian condition number {:.3e}",
                jac.cond_1()
            )));
        }
        let unit_flat = !(spec.s == 1 && spec.m0 == -1);
        let chart = FlatChart {
            labels,
            values,
            differentials,
            jacobian: jac,
            unit_components: unit,
            unit_flat,
            unit_label: unit_label.map(|_| 0),
            point: x.clone(),
        };
        Ok(ChartedPoint { mp, chart })
    }
}

/// Cross-check the analytic Jacobian against central finite differences
/// of the flat values; returns the relative residual.
pub fn verify_jacobian(cp: &ChartedPoint, step: f64) -> Result<f64, FrobeniusError> {
    let spec = &cp.mp.spec;
    let free = cp.chart.point.free(spec);
    let dim = spec.dimension();
    let mut worst = 0.0f64;
    let scale = cp
        .chart
        .jacobian
        .norm_1()
        .max(1.0);
    for j in 0..dim {
        let mut fp = free.clone();
        let mut fm = free.clone();
        fp[j] += C::new(step, 0.0);
        fm[j] -= C::new(step, 0.0);
        let xp = RawCoordinates::from_free(spec, &fp);
        let xm = RawCoordinates::from_free(spec, &fm);
        let mp_p = ManifoldPoint::new(spec, &xp, Some(cp.mp.depth))?;
        let mp_m = ManifoldPoint::new(spec, &xm, Some(cp.mp.depth))?;
        for (i, &label) in cp.chart.labels.iter().enumerate() {
            let tp = flat_value(&mp_p, label)?;
            let tm = flat_value(&mp_m, label)?;
            let fd = (tp - tm) / C::new(2.0 * step, 0.0);
            worst = worst.max((fd - cp.chart.jacobian[(i, j)]).norm() / scale);
        }
    }
    if worst > 1e-5 {
        return Err(FrobeniusError::JacobianMismatch { residual: worst });
    }
    Ok(worst)
}

// ── Euler data ─────────────────────────────────────────────────────────

/// Exact weights and shifts of the Euler field in the flat chart, plus
/// the conformal weight d = 1 + (s−1)·2/n.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EulerData {
    pub weights: Vec<Ratio>,
    pub shifts: Vec<Ratio>,
    pub d: Ratio,
    /// Numeric pairings ⟨dt^l, E⟩ at the sample point.
    pub components: Vec<C>,
}

/// Weight/shift of one label per the component proposition.
pub fn euler_weight_shift(spec: &SuperpotentialSpec, label: FlatLabel) -> (Ratio, Ratio) {
    let s = spec.s as i64;
    let n = spec.n();
    match label.point {
        LabelPoint::Infinity => {
            let i = label.index;
            (Ratio::new(1 - s + n - i, n), Ratio::zero())
        }
        _ => {
            let m = match label.point {
                LabelPoint::Zero => spec.m0,
                LabelPoint::Pole(k) => spec.pole_multiplicities[k],
                LabelPoint::Infinity => unreachable!(),
            };
            let j = label.index;
            if j < m {
                // (1−s)/n + (m−j)/m.
                (
                    Ratio::new((1 - s) * m + n * (m - j), n * m),
                    Ratio::zero(),
                )
            } else if s == 0 {
                (Ratio::new(1, n), Ratio::zero())
            } else if label.point == LabelPoint::Zero {
                (Ratio::zero(), Ratio::new(m + n, n))
            } else {
                (Ratio::zero(), Ratio::new(m, n))
            }
        }
    }
}

/// Euler components, verified against ⟨dt^l, E⟩ at the sample point.
pub fn euler_components(cp: &ChartedPoint) -> Result<EulerData, FrobeniusError> {
    let spec = &cp.mp.spec;
    let s = spec.s as i64;
    let n = spec.n();
    let d = Ratio::new(n + 2 * (s - 1), n);
    let mut weights = Vec::new();
    let mut shifts = Vec::new();
    let mut components = Vec::new();
    for (l, &label) in cp.chart.labels.iter().enumerate() {
        let (w, r) = euler_weight_shift(spec, label);
        let nu = label.point.resolve(&cp.mp.x);
        let e_series = cp.mp.euler_series(nu);
        let numeric = e_series
            .mul(cp.chart.differentials[l].series())?
            .trace(spec.s)?;
        let linear = C::new(w.to_f64(), 0.0) * cp.chart.values[l] + C::new(r.to_f64(), 0.0);
        let scale = numeric.norm().max(linear.norm()).max(1.0);
        let residual = (numeric - linear).norm() / scale;
        if residual > 1e-9 {
            return Err(FrobeniusError::EulerMismatch {
                label: label.to_string(),
                residual,
            });
        }
        weights.push(w);
        shifts.push(r);
        components.push(numeric);
    }
    Ok(EulerData {
        weights,
        shifts,
        d,
        components,
    })
}

// ── Prepotential ───────────────────────────────────────────────────────

/// F = 1/(3−d) [ (1/n) Σ_i E^i_∞ H^{∞,n−i}_{(1)}
///             + Σ_ν (1/m_ν) Σ_j E^j_ν H^{ν,m_ν−j}_{(1)} ],
/// defined modulo quadratic polynomials in t.
pub fn prepotential(cp: &ChartedPoint) -> Result<C, FrobeniusError> {
    let spec = &cp.mp.spec;
    let euler = euler_components(cp)?;
    let d = euler.d.to_f64();
    if (d - 3.0).abs() < 1e-12 {
        return Err(FrobeniusError::WeightThree);
    }
    let n = spec.n();
    let mut total = C::new(0.0, 0.0);
    let position = |label: FlatLabel| -> usize {
        cp.chart
            .label_position(label)
            .expect("label present in chart")
    };
    // Block at ∞.
    for i in 1..n {
        let e_i = euler.components[position(FlatLabel {
            point: LabelPoint::Infinity,
            index: i,
        })];
        let h = h_density(
            &cp.mp,
            FlatLabel {
                point: LabelPoint::Infinity,
                index: n - i,
            },
            1,
        )?;
        total += e_i * h / C::new(n as f64, 0.0);
    }
    // Finite blocks.
    let mut blocks: Vec<(LabelPoint, i64)> = Vec::new();
    if spec.s == 1 && spec.m0 >= 1 {
        blocks.push((LabelPoint::Zero, spec.m0));
    }
    for (k, &m) in spec.pole_multiplicities.iter().enumerate() {
        blocks.push((LabelPoint::Pole(k), m));
    }
    for (pt, m) in blocks {
        for j in 0..=m {
            let e_j = euler.components[position(FlatLabel { point: pt, index: j })];
            let h = h_density(
                &cp.mp,
                FlatLabel {
                    point: pt,
                    index: m - j,
                },
                1,
            )?;
            total += e_j * h / C::new(m as f64, 0.0);
        }
    }
    Ok(total / C::new(3.0 - d, 0.0))
}

// ── Metric and structure constants in the flat chart ───────────────────

/// Totally symmetric rank-three tensor in the chart label order.
pub type CTensor = Vec<Vec<Vec<C>>>;

pub fn tensor_zeros(dim: usize) -> CTensor {
    vec![vec![vec![C::new(0.0, 0.0); dim]; dim]; dim]
}

/// Max asymmetry of a rank-three tensor under all index permutations.
pub fn tensor_asymmetry(c: &CTensor) -> f64 {
    let dim = c.len();
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let base = c[i][j][k];
                for &(a, b, g) in &[(i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                    worst = worst.max((c[a][b][g] - base).norm());
                }
            }
        }
    }
    worst
}

/// Contravariant metric matrix η*(dt^a, dt^b) in the chart order.
pub fn eta_matrix(cp: &ChartedPoint) -> Result<CMatrix, FrobeniusError> {
    let dim = cp.mp.dimension();
    let mut eta = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let v = cp
                .mp
                .metric_eta(&cp.chart.differentials[a], &cp.chart.differentials[b])?;
            eta[(a, b)] = v;
            eta[(b, a)] = v;
        }
    }
    Ok(eta)
}

/// The expected block metric m δ_{i,m−j} per marked point.
pub fn eta_block_expectation(spec: &SuperpotentialSpec, labels: &[FlatLabel]) -> CMatrix {
    let dim = labels.len();
    let mut eta = CMatrix::zeros(dim, dim);
    for (a, la) in labels.iter().enumerate() {
        for (b, lb) in labels.iter().enumerate() {
            if la.point != lb.point {
                continue;
            }
            let m = match la.point {
                LabelPoint::Infinity => spec.n(),
                LabelPoint::Zero => spec.m0,
                LabelPoint::Pole(k) => spec.pole_multiplicities[k],
            };
            if la.index + lb.index == m {
                eta[(a, b)] = C::new(m as f64, 0.0);
            }
        }
    }
    eta
}

/// Structure constants c_{ijk} = η_{ia} η_{jb} c̃^{ab}_k where
/// dt^a ∘ dt^b = Σ_l c̃^{ab}_l dt^l, everything represented at the working
/// marked point `nu`.
pub fn structure_constants_at(
    cp: &ChartedPoint,
    nu: MarkedPoint,
) -> Result<CTensor, FrobeniusError> {
    let dim = cp.mp.dimension();
    let reps: Vec<CotangentVector> = cp
        .chart
        .differentials
        .iter()
        .map(|d| cp.mp.convert(d, nu))
        .collect::<Result<_, _>>()?;
    // Window components of the representatives form the change-of-basis
    // matrix from the dt-basis to the canonical window.
    let mut basis_mat = CMatrix::zeros(dim, dim);
    for (l, rep) in reps.iter().enumerate() {
        for (w, comp) in rep.components().into_iter().enumerate() {
            basis_mat[(w, l)] = comp;
        }
    }
    if basis_mat.cond_1() > 1e10 {
        return Err(FrobeniusError::DegeneratePoint(format!(
            "flat differentials nearly dependent at {nu} (cond {:.3e})",
            basis_mat.cond_1()
        )));
    }
    let eta = eta_matrix(cp)?;
    let eta_cov = eta.inverse().map_err(AlgebraError::from)?;
    let mut c = tensor_zeros(dim);
    for a in 0..dim {
        for b in a..dim {
            let prod = cp.mp.circ(&reps[a], &reps[b])?;
            let coeffs = basis_mat
                .solve(&prod.components())
                .map_err(AlgebraError::from)?;
            for i in 0..dim {
                for j in 0..dim {
                    let w = eta_cov[(i, a)] * eta_cov[(j, b)];
                    if w.norm() == 0.0 {
                        continue;
                    }
                    for (l, &ct) in coeffs.iter().enumerate() {
                        c[i][j][l] += w * ct;
                        if a != b {
                            c[j][i][l] += w * ct;
                        }
                    }
                }
            }
        }
    }
    // Symmetrise over the pair that was built from η-lowering; the k index
    // arrived through the dt-expansion, so full symmetry is a theorem the
    // caller checks, not an input assumption.
    Ok(c)
}

/// Structure constants at the default working point ∞.
pub fn structure_constants(cp: &ChartedPoint) -> Result<CTensor, FrobeniusError> {
    structure_constants_at(cp, MarkedPoint::Infinity)
}

/// Counity components ε_l = Σ_k η_{lk} e^k (the 1-form dual to the unit).
pub fn counity_components(cp: &ChartedPoint) -> Result<Vec<C>, FrobeniusError> {
    let eta = eta_matrix(cp)?;
    let eta_cov = eta.inverse().map_err(AlgebraError::from)?;
    Ok(eta_cov.matvec(&cp.chart.unit_components))
}

/// Residual of the unital property ε∘β = β over random cotangent vectors.
pub fn unit_property_residual(cp: &ChartedPoint, samples: usize, seed: u64) -> Result<f64, FrobeniusError> {
    use rand_chacha::rand_core::SeedableRng;
    let nu = MarkedPoint::Infinity;
    let dim = cp.mp.dimension();
    let eps_l = counity_components(cp)?;
    let reps: Vec<CotangentVector> = cp
        .chart
        .differentials
        .iter()
        .map(|d| cp.mp.convert(d, nu))
        .collect::<Result<_, _>>()?;
    let mut eps_comps = vec![C::new(0.0, 0.0); dim];
    for (l, rep) in reps.iter().enumerate() {
        for (w, comp) in rep.components().into_iter().enumerate() {
            eps_comps[w] += eps_l[l] * comp;
        }
    }
    let eps = cp.mp.cotangent_from_components(nu, &eps_comps);
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let comps: Vec<C> = (0..dim)
            .map(|_| crate::rota_baxter::uniform_disc(&mut rng))
            .collect();
        let beta = cp.mp.cotangent_from_components(nu, &comps);
        let prod = cp.mp.circ(&eps, &beta)?;
        let diff = prod.series().sub(beta.series())?;
        let scale = beta.series().max_abs().max(1.0);
        worst = worst.max(diff.max_abs() / scale);
    }
    Ok(worst)
}

// ── Chart inversion ────────────────────────────────────────────────────

/// Newton inversion of the flat chart: find raw coordinates whose flat
/// values hit `target`, starting from `cp`.  Damped steps on
/// non-decreasing residual; guaranteed tolerance 1e−12 relative within 50
/// iterations, but iterates on to the machine floor so that downstream
/// finite differences of F are not polluted by inversion noise.
pub fn invert_chart(cp: &ChartedPoint, target: &[C]) -> Result<ChartedPoint, FrobeniusError> {
    let spec = cp.mp.spec.clone();
    let mut free = cp.chart.point.free(&spec);
    let mut current = cp.clone();
    let scale = target.iter().map(|t| t.norm()).fold(1.0f64, f64::max);
    let residual_of = |point: &ChartedPoint| -> f64 {
        point
            .chart
            .values
            .iter()
            .zip(target)
            .map(|(have, want)| (want - have).norm())
            .fold(0.0f64, f64::max)
            / scale
    };
    let mut residual = residual_of(&current);
    for iteration in 0..50 {
        if residual < 5e-15 {
            return Ok(current);
        }
        let diff: Vec<C> = current
            .chart
            .values
            .iter()
            .zip(target)
            .map(|(have, want)| want - have)
            .collect();
        let step = current
            .chart
            .jacobian
            .solve(&diff)
            .map_err(AlgebraError::from)?;
        // Damp until the residual decreases.
        let mut damping = 1.0f64;
        let mut accepted = None;
        for _ in 0..8 {
            let trial: Vec<C> = free
                .iter()
                .zip(&step)
                .map(|(f, s)| f + s * C::new(damping, 0.0))
                .collect();
            let x_trial = RawCoordinates::from_free(&spec, &trial);
            if let Ok(next) = ChartedPoint::new(&spec, &x_trial, Some(cp.mp.depth)) {
                let r = residual_of(&next);
                if r < residual || damping < 0.2 {
                    accepted = Some((trial, next, r));
                    break;
                }
            }
            damping *= 0.5;
        }
        match accepted {
            Some((trial, next, r)) => {
                let stalled = r >= residual;
                free = trial;
                current = next;
                residual = r;
                if stalled && residual < 1e-12 {
                    // Converged to the floor.
                    return Ok(current);
                }
            }
            None if residual < 1e-12 => return Ok(current),
            None => {
                return Err(FrobeniusError::InversionFailure {
                    iterations: iteration,
                    residual,
                })
            }
        }
    }
    if residual < 1e-12 {
        return Ok(current);
    }
    Err(FrobeniusError::InversionFailure {
        iterations: 50,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    fn p1_charted() -> ChartedPoint {
        let spec = SuperpotentialSpec {
            s: 1,
            zeros: 2,
            m0: 1,
            pole_multiplicities: vec![],
        };
        // u = −a1−a2, v = a1 a2 = 2.
        let x = RawCoordinates {
            zeros: vec![c(1.0), c(2.0)],
            poles: vec![],
        };
        ChartedPoint::new(&spec, &x, None).unwrap()
    }

    #[test]
    fn p1_flat_values() {
        // t^0_0 = u = −3, t^1_0 = log v = log 2.
        let cp = p1_charted();
        assert_eq!(cp.chart.labels.len(), 2);
        assert_eq!(cp.chart.unit_label, Some(0));
        let t0 = cp.chart.values[0];
        let t1 = cp.chart.values[1];
        assert!((t0 - c(-3.0)).norm() < 1e-12, "t0 = {t0}");
        assert!((t1 - c(2.0f64.ln())).norm() < 1e-12, "t1 = {t1}");
    }

    #[test]
    fn p1_jacobian_from_closed_form() {
        // t0 = −a1−a2, t1 = log(a1 a2): ∂t0/∂ai = −1, ∂t1/∂ai = 1/ai.
        let cp = p1_charted();
        let j = &cp.chart.jacobian;
        assert!((j[(0, 0)] - c(-1.0)).norm() < 1e-10);
        assert!((j[(0, 1)] - c(-1.0)).norm() < 1e-10);
        assert!((j[(1, 0)] - c(1.0)).norm() < 1e-10);
        assert!((j[(1, 1)] - c(0.5)).norm() < 1e-10);
        let res = verify_jacobian(&cp, 1e-6).unwrap();
        assert!(res < 1e-6, "jacobian fd residual {res}");
    }

    #[test]
    fn p1_euler_data() {
        // E = t1 ∂1 + 2 ∂2 in this chart; d = 1.
        let cp = p1_charted();
        let e = euler_components(&cp).unwrap();
        assert_eq!(e.d, Ratio::int(1));
        assert_eq!(e.weights[0], Ratio::int(1));
        assert_eq!(e.shifts[0], Ratio::zero());
        assert_eq!(e.weights[1], Ratio::zero());
        assert_eq!(e.shifts[1], Ratio::int(2));
        assert!((e.components[0] - cp.chart.values[0]).norm() < 1e-10);
        assert!((e.components[1] - c(2.0)).norm() < 1e-10);
    }

    #[test]
    fn p1_eta_blocks_and_unit() {
        let cp = p1_charted();
        let eta = eta_matrix(&cp).unwrap();
        let expect = eta_block_expectation(&cp.mp.spec, &cp.chart.labels);
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (eta[(i, j)] - expect[(i, j)]).norm() < 1e-10,
                    "eta[{i}][{j}] = {}",
                    eta[(i, j)]
                );
            }
        }
        assert!(cp.chart.unit_flat);
        assert!((cp.chart.unit_components[0] - c(1.0)).norm() < 1e-10);
        assert!(cp.chart.unit_components[1].norm() < 1e-10);
        let res = unit_property_residual(&cp, 10, 3).unwrap();
        assert!(res < 1e-10, "unit property residual {res}");
    }

    #[test]
    fn p1_structure_constants_match_closed_form() {
        // F = ½ t1² t2 + e^{t2}: c112 = 1, c222 = e^{t2} = v = 2, rest 0.
        let cp = p1_charted();
        let ct = structure_constants(&cp).unwrap();
        assert!(tensor_asymmetry(&ct) < 1e-9);
        let v = 2.0;
        let expect = |i: usize, j: usize, k: usize| -> f64 {
            let mut idx = [i, j, k];
            idx.sort_unstable();
            match idx {
                [0, 0, 1] => 1.0,
                [1, 1, 1] => v,
                _ => 0.0,
            }
        };
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!(
                        (ct[i][j][k] - c(expect(i, j, k))).norm() < 1e-9,
                        "c[{i}][{j}][{k}] = {}",
                        ct[i][j][k]
                    );
                }
            }
        }
    }

    #[test]
    fn p1_prepotential_second_derivative_structure() {
        // F is fixed modulo quadratics only; third derivatives are checked
        // in the structure-constants test.  Here: F exists and is finite.
        let cp = p1_charted();
        let f = prepotential(&cp).unwrap();
        assert!(f.norm() < 1e3);
        assert!(f.re.is_finite() && f.im.is_finite());
    }

    #[test]
    fn p1_chart_inversion_roundtrip() {
        let cp = p1_charted();
        let mut target = cp.chart.values.clone();
        target[0] += c(0.05);
        target[1] -= c(0.04);
        let inverted = invert_chart(&cp, &target).unwrap();
        for (have, want) in inverted.chart.values.iter().zip(&target) {
            assert!((have - want).norm() < 1e-11);
        }
        // And back.
        let back = invert_chart(&inverted, &cp.chart.values).unwrap();
        for (have, want) in back.chart.values.iter().zip(&cp.chart.values) {
            assert!((have - want).norm() < 1e-10);
        }
    }

    #[test]
    fn nonflat_family_chart() {
        // s = 1, m0 = −1: λ = p + u + u w/(p−w); t1 = u, t2 = log(−w).
        let spec = SuperpotentialSpec {
            s: 1,
            zeros: 1,
            m0: -1,
            pole_multiplicities: vec![1],
        };
        // λ = p(p + u − w)/(p − w): free zero a1 = w − u.
        let (u, w) = (C::new(0.4, 0.9), C::new(-1.1, 0.2));
        let x = RawCoordinates {
            zeros: vec![w - u],
            poles: vec![w],
        };
        let cp = ChartedPoint::new(&spec, &x, None).unwrap();
        assert!(!cp.chart.unit_flat);
        assert_eq!(cp.chart.unit_label, None);
        let pos_t0 = cp
            .chart
            .label_position(FlatLabel {
                point: LabelPoint::Pole(0),
                index: 0,
            })
            .unwrap();
        let pos_t1 = cp
            .chart
            .label_position(FlatLabel {
                point: LabelPoint::Pole(0),
                index: 1,
            })
            .unwrap();
        assert!((cp.chart.values[pos_t0] - u).norm() < 1e-10);
        assert!((cp.chart.values[pos_t1] - (-w).ln()).norm() < 1e-10);
        // Nonflat unit: e = (t1 ∂1 − ∂2)/(t1 + e^{t2}).
        let denom = u + (-w);
        let e1 = u / denom;
        let e2 = -C::new(1.0, 0.0) / denom;
        assert!((cp.chart.unit_components[pos_t0] - e1).norm() < 1e-8);
        assert!((cp.chart.unit_components[pos_t1] - e2).norm() < 1e-8);
    }

    #[test]
    fn h_density_levels() {
        let cp = p1_charted();
        let label = FlatLabel {
            point: LabelPoint::Zero,
            index: 0,
        };
        // Level 0 is the flat coordinate.
        let h0 = h_density(&cp.mp, label, 0).unwrap();
        assert!((h0 - cp.chart.values[0]).norm() < 1e-12);
        // H^{0,0}_{(1)} = ½ Tr_0 λ²: λ² = (p+u+v/p)², p^0 coefficient of
        // p^{-1}λ²: 2uv... Tr_0(λ²) = res_0(p^{-1}λ²) = u²·0 + ... compute
        // directly: λ² has p^0 coefficient u² + 2v; Tr picks it: ×½.
        let (u, v) = (-3.0, 2.0);
        let h1 = h_density(&cp.mp, label, 1).unwrap();
        assert!(
            (h1 - c(0.5 * (u * u + 2.0 * v))).norm() < 1e-10,
            "H1 = {h1}"
        );
        assert!(h_density(&cp.mp, label, 4).is_err());
    }

    #[test]
    fn log_label_h1_matches_hand_expansion() {
        // For λ = p + u + v/p one finds by expanding the branch
        // decomposition by hand:
        //   Tr_0(λ·log[pλ]) = u log v + u,  Tr_∞(λ·log[p^{-1}λ]) = u,
        //   Tr_0 λ = Tr_∞ λ = u,
        // so H^{0,1}_{(1)} = (u log v + u) + u − (u + u) = u·log v = t₁t₂.
        // Consistently, the prepotential formula then gives
        // F = ½(t₁·t₁t₂ + 2·H^{0,0}) = ½t₁²t₂ + e^{t₂} + quadratic.
        let cp = p1_charted();
        let (u, v) = (-3.0f64, 2.0f64);
        let got = h_density(
            &cp.mp,
            FlatLabel {
                point: LabelPoint::Zero,
                index: 1,
            },
            1,
        )
        .unwrap();
        assert!(
            (got - c(u * v.ln())).norm() < 1e-10,
            "H log density {got} vs {}",
            u * v.ln()
        );
    }
}
