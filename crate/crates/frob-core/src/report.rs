//! Per-point verification report: the metric, structure constants, Euler
//! and unit data, prepotential samples, and the residual of every identity
//! the construction asserts.

use crate::frobenius::{
    eta_block_expectation, eta_matrix, euler_components, prepotential, structure_constants_at,
    tensor_asymmetry, verify_jacobian, unit_property_residual, ChartedPoint, CTensor, EulerData,
    FrobeniusError,
};
use crate::linalg::CMatrix;
use crate::ratio::Ratio;
use crate::rota_baxter::{verify_derivation_adjoint, verify_flatness_relations, verify_rota_baxter, ResidualReport};
use crate::series::MarkedPoint;
use crate::wdvv::{
    check_eta_from_f, check_quasi_homogeneity, check_wdvv, check_counity_closed,
    check_nabla_c_symmetry, third_derivatives_of_prepotential, VerdictReport,
};
use crate::C;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportOptions {
    pub seed: u64,
    pub sweep_samples: usize,
    pub h_rel: f64,
    pub tol_identity: f64,
    pub tol_eta_blocks: f64,
    pub tol_cross: f64,
    pub tol_wdvv: f64,
    pub tol_quasi: f64,
    pub tol_unit: f64,
    pub tol_nu_equivalence: f64,
    /// Fourth-order ∇c symmetry check (slower).
    pub with_nabla_c: bool,
    /// Closedness of the counity 1-form via differencing in t (slower).
    pub with_counity: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            seed: 0x5eed,
            sweep_samples: 100,
            h_rel: 1e-2,
            tol_identity: 1e-12,
            tol_eta_blocks: 1e-9,
            tol_cross: 1e-5,
            tol_wdvv: 1e-6,
            tol_quasi: 1e-5,
            tol_unit: crate::DEFAULT_TOL,
            tol_nu_equivalence: crate::DEFAULT_TOL,
            with_nabla_c: false,
            with_counity: false,
        }
    }
}

/// Everything the construction asserts at one point, with residuals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrobeniusReport {
    pub labels: Vec<String>,
    pub flat_values: Vec<C>,
    pub eta: Vec<Vec<C>>,
    pub euler: EulerData,
    pub d: Ratio,
    pub unit_components: Vec<C>,
    pub unit_flat: bool,
    pub prepotential: C,
    pub c_tensor: CTensor,
    pub verdicts: Vec<VerdictReport>,
    pub operator_sweeps: Vec<ResidualReport>,
    pub seed: u64,
}

impl FrobeniusReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
            && self
                .operator_sweeps
                .iter()
                .all(|r| r.max_residual < 1e-12)
    }
}

fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<C>> {
    (0..m.rows).map(|i| m.row(i).to_vec()).collect()
}

fn matrix_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.rows {
        for j in 0..a.cols {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

fn tensor_diff(a: &CTensor, b: &CTensor) -> f64 {
    let mut worst = 0.0f64;
    for (ra, rb) in a.iter().zip(b) {
        for (ca, cb) in ra.iter().zip(rb) {
            for (va, vb) in ca.iter().zip(cb) {
                worst = worst.max((va - vb).norm());
            }
        }
    }
    worst
}

/// η* with every 1-form represented at the given working point.
pub fn eta_matrix_at(cp: &ChartedPoint, nu: MarkedPoint) -> Result<CMatrix, FrobeniusError> {
    let dim = cp.mp.dimension();
    let reps: Vec<_> = cp
        .chart
        .differentials
        .iter()
        .map(|d| cp.mp.convert(d, nu))
        .collect::<Result<_, _>>()?;
    let mut eta = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let v = cp.mp.metric_eta(&reps[a], &reps[b])?;
            eta[(a, b)] = v;
            eta[(b, a)] = v;
        }
    }
    Ok(eta)
}

/// Max deviation of η and c computed at each finite marked point from the
/// computation at ∞.
pub fn nu_equivalence_residual(cp: &ChartedPoint) -> Result<f64, FrobeniusError> {
    let eta_inf = eta_matrix_at(cp, MarkedPoint::Infinity)?;
    let c_inf = structure_constants_at(cp, MarkedPoint::Infinity)?;
    let scale = eta_inf.norm_1().max(1.0);
    let mut worst = 0.0f64;
    for &nu in cp.mp.gamma() {
        if nu.is_infinity() {
            continue;
        }
        let eta_nu = eta_matrix_at(cp, nu)?;
        let c_nu = structure_constants_at(cp, nu)?;
        worst = worst.max(matrix_diff(&eta_inf, &eta_nu) / scale);
        worst = worst.max(tensor_diff(&c_inf, &c_nu) / scale);
    }
    Ok(worst)
}

/// Identity sweeps for the spec's derivation weight over all three point
/// kinds.
pub fn operator_sweeps(s: u8, samples: usize, seed: u64) -> Vec<ResidualReport> {
    let mut out = Vec::new();
    for kind in ["inf", "0", "v"] {
        out.push(verify_rota_baxter(kind, s, samples, seed));
        out.push(verify_derivation_adjoint(kind, s, samples, seed));
        out.extend(verify_flatness_relations(kind, s, samples, seed));
    }
    out
}

/// Assemble the full report at a charted point.
pub fn point_report(
    cp: &ChartedPoint,
    opts: &ReportOptions,
) -> Result<FrobeniusReport, FrobeniusError> {
    let mut verdicts = Vec::new();

    // Metric and its block form.
    let eta = eta_matrix(cp)?;
    let expected = eta_block_expectation(&cp.mp.spec, &cp.chart.labels);
    let scale = expected.norm_1().max(1.0);
    verdicts.push(VerdictReport::new(
        "eta-blocks",
        matrix_diff(&eta, &expected) / scale,
        opts.tol_eta_blocks,
    ));

    // Jacobian consistency.
    let jac_res = verify_jacobian(cp, 1e-6)?;
    verdicts.push(VerdictReport::new("jacobian-consistency", jac_res, 1e-5));

    // Euler data.
    let euler = euler_components(cp)?;

    // Unit property.
    let unit_res = unit_property_residual(cp, 10, opts.seed)?;
    verdicts.push(VerdictReport::new("unit-property", unit_res, opts.tol_unit));

    // Structure constants and their symmetry.
    let c_tensor = structure_constants_at(cp, MarkedPoint::Infinity)?;
    let c_scale = c_tensor
        .iter()
        .flatten()
        .flatten()
        .map(|z| z.norm())
        .fold(1.0f64, f64::max);
    verdicts.push(VerdictReport::new(
        "c-symmetry",
        tensor_asymmetry(&c_tensor) / c_scale,
        1e-9,
    ));

    // Unit row: Σ_l e^l c_{lij} = η_{ij} (covariant).
    {
        let dim = cp.mp.dimension();
        let eta_cov = eta
            .inverse()
            .map_err(crate::rota_baxter::AlgebraError::from)?;
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = C::new(0.0, 0.0);
                for l in 0..dim {
                    acc += cp.chart.unit_components[l] * c_tensor[l][i][j];
                }
                worst = worst.max((acc - eta_cov[(i, j)]).norm());
            }
        }
        verdicts.push(VerdictReport::new(
            "unit-row",
            worst / eta_cov.norm_1().max(1.0),
            1e-9,
        ));
    }

    // Prepotential and the independent differentiation route.
    let f_value = prepotential(cp)?;
    let f_third = third_derivatives_of_prepotential(cp, opts.h_rel)?;
    verdicts.push(VerdictReport::new(
        "c-vs-prepotential",
        tensor_diff(&c_tensor, &f_third.tensor),
        opts.tol_cross,
    ));

    verdicts.push(check_wdvv(&c_tensor, &eta, opts.tol_wdvv));
    verdicts.push(check_quasi_homogeneity(
        cp,
        &c_tensor,
        &euler,
        opts.h_rel,
        opts.tol_quasi,
    )?);
    verdicts.push(check_eta_from_f(cp, &f_third.tensor, opts.tol_cross)?);
    verdicts.push(VerdictReport::new(
        "nu-equivalence",
        nu_equivalence_residual(cp)?,
        opts.tol_nu_equivalence,
    ));
    if opts.with_counity {
        verdicts.push(check_counity_closed(cp, opts.h_rel, 1e-4)?);
    }
    if opts.with_nabla_c {
        verdicts.push(check_nabla_c_symmetry(cp, opts.h_rel, 1e-4)?);
    }

    let sweeps = operator_sweeps(cp.mp.spec.s, opts.sweep_samples, opts.seed);

    Ok(FrobeniusReport {
        labels: cp.chart.labels.iter().map(|l| l.to_string()).collect(),
        flat_values: cp.chart.values.clone(),
        eta: matrix_to_rows(&eta),
        euler,
        d: Ratio::new(
            cp.mp.spec.n() + 2 * (cp.mp.spec.s as i64 - 1),
            cp.mp.spec.n(),
        ),
        unit_components: cp.chart.unit_components.clone(),
        unit_flat: cp.chart.unit_flat,
        prepotential: f_value,
        c_tensor,
        verdicts,
        operator_sweeps: sweeps,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meromorphic::{RawCoordinates, SuperpotentialSpec};

    #[test]
    fn p1_report_all_pass() {
        let spec = SuperpotentialSpec {
            s: 1,
            zeros: 2,
            m0: 1,
            pole_multiplicities: vec![],
        };
        let x = RawCoordinates {
            zeros: vec![C::new(1.0, 0.0), C::new(2.0, 0.0)],
            poles: vec![],
        };
        let cp = ChartedPoint::new(&spec, &x, None).unwrap();
        let opts = ReportOptions {
            sweep_samples: 20,
            ..ReportOptions::default()
        };
        let report = point_report(&cp, &opts).unwrap();
        for v in &report.verdicts {
            assert!(v.pass, "{} residual {}", v.name, v.max_residual);
        }
        for r in &report.operator_sweeps {
            assert!(r.max_residual < 1e-12, "{} {}", r.identity, r.max_residual);
        }
        assert!(report.all_pass());
    }
}
