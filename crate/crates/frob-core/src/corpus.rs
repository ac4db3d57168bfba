//! Built-in example manifolds.
//!
//! Each entry carries the family data, a branch-safe base point, the
//! closed-form prepotential in its oracle chart, the linear map from
//! the raw flat labels to that chart, and the exact Euler weights.  The
//! closed forms act as independent oracles for the whole pipeline: the
//! structure constants produced by the operator route must match third
//! derivatives of these prepotentials wherever both are defined.

use crate::frobenius::{FlatChart, FlatLabel, LabelPoint};
use crate::meromorphic::{
    MeromorphicError, PartialFractionInput, RawCoordinates, SuperpotentialSpec,
};
use crate::ratio::Ratio;
use crate::rota_baxter::uniform_disc;
use crate::C;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// How a corpus example states its base point.
#[derive(Clone, Debug)]
pub enum ExampleInput {
    Raw(RawCoordinates),
    Partial(PartialFractionInput),
}

impl ExampleInput {
    pub fn to_raw(&self, spec: &SuperpotentialSpec) -> Result<RawCoordinates, MeromorphicError> {
        match self {
            ExampleInput::Raw(x) => Ok(x.clone()),
            ExampleInput::Partial(pf) => pf.to_raw(spec),
        }
    }
}

/// One worked example with its closed-form oracle data.
#[derive(Clone)]
pub struct CorpusExample {
    pub name: &'static str,
    pub description: &'static str,
    pub spec: SuperpotentialSpec,
    pub nonflat_unit: bool,
    /// Oracle chart as exact linear combinations of raw labels.
    pub chart_map: Vec<Vec<(Ratio, FlatLabel)>>,
    /// Euler weights and shifts in the oracle chart, and the weight d.
    pub euler_weights: Vec<Ratio>,
    pub euler_shifts: Vec<Ratio>,
    pub d: Ratio,
    pub closed_form_f: fn(&[C]) -> C,
    base: ExampleInput,
}

impl CorpusExample {
    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    pub fn base_input(&self) -> &ExampleInput {
        &self.base
    }

    pub fn base_raw(&self) -> Result<RawCoordinates, MeromorphicError> {
        self.base.to_raw(&self.spec)
    }

    /// Deterministically perturbed copy of the base point; `attempt` folds
    /// into the stream so rejected points resample fresh coordinates.
    pub fn sample_raw(
        &self,
        seed: u64,
        attempt: u64,
    ) -> Result<RawCoordinates, MeromorphicError> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ (attempt.wrapping_mul(0x9e3779b97f4a7c15)));
        let scale = 0.07 + 0.05 * rng.gen::<f64>();
        let jiggle = |z: &mut C, rng: &mut ChaCha12Rng| {
            *z += uniform_disc(rng) * C::new(scale, 0.0);
        };
        match &self.base {
            ExampleInput::Raw(x) => {
                let mut x = x.clone();
                for z in x.zeros.iter_mut().chain(x.poles.iter_mut()) {
                    jiggle(z, &mut rng);
                }
                Ok(x)
            }
            ExampleInput::Partial(pf) => {
                let mut pf = pf.clone();
                let deg = pf.polynomial.len() - 1;
                for z in pf.polynomial.iter_mut().take(deg) {
                    jiggle(z, &mut rng);
                }
                for z in pf.origin.iter_mut() {
                    jiggle(z, &mut rng);
                }
                for (v, parts) in pf.poles.iter_mut() {
                    jiggle(v, &mut rng);
                    for z in parts.iter_mut() {
                        jiggle(z, &mut rng);
                    }
                }
                pf.to_raw(&self.spec)
            }
        }
    }

    /// Oracle-chart coordinates from a computed flat chart.
    pub fn oracle_t(&self, chart: &FlatChart) -> Vec<C> {
        self.chart_map
            .iter()
            .map(|row| {
                row.iter()
                    .map(|(coeff, label)| {
                        let pos = chart
                            .label_position(*label)
                            .expect("chart map label present");
                        C::new(coeff.to_f64(), 0.0) * chart.values[pos]
                    })
                    .sum()
            })
            .collect()
    }

    /// `A[i][l]` = ∂ oracle_t_i / ∂ raw_t of the l-th chart label.
    pub fn chart_matrix(&self, chart: &FlatChart) -> Vec<Vec<f64>> {
        let dim = self.dimension();
        let mut a = vec![vec![0.0; dim]; dim];
        for (i, row) in self.chart_map.iter().enumerate() {
            for (coeff, label) in row {
                let pos = chart.label_position(*label).expect("label present");
                a[i][pos] += coeff.to_f64();
            }
        }
        a
    }
}

/// Closed-form nonflat unit components of the m₀ = −1 example in its
/// oracle chart: e = (t₁∂₁ − ∂₂)/(t₁ + e^{t₂}).
pub fn nonflat_unit_components(t: &[C]) -> Vec<C> {
    let denom = t[0] + t[1].exp();
    vec![t[0] / denom, -C::new(1.0, 0.0) / denom]
}

fn half() -> Ratio {
    Ratio::new(1, 2)
}

fn lab(point: LabelPoint, index: i64) -> FlatLabel {
    FlatLabel { point, index }
}

fn f_a3(t: &[C]) -> C {
    let (t1, t2, t3) = (t[0], t[1], t[2]);
    t1 * t2 * t2 / c(8.0, 0.0)
        + t1 * t1 * t3 / c(8.0, 0.0)
        - t2 * t2 * t3 * t3 / c(64.0, 0.0)
        + t3.powu(5) / c(3840.0, 0.0)
}

// The (t1²+t2²)(t3+t4) coefficient must be ½: it is fixed by the block
// metric η(∂t1, ∂t1, ∂t3) = 1 of this chart, and the operator pipeline
// reproduces exactly the ½ tensor.
fn f_two_poles(t: &[C]) -> C {
    let (t1, t2, t3, t4) = (t[0], t[1], t[2], t[3]);
    t1 * t2 * (t3 - t4)
        + (t1 * t1 + t2 * t2) * (t3 + t4) / c(2.0, 0.0)
        + t3 * t3 * t3.ln() / c(2.0, 0.0)
        + t3 * t4 * t2.ln()
        + t4 * t4 * t4.ln() / c(2.0, 0.0)
}

fn f_toda3(t: &[C]) -> C {
    let (t1, t2, t3, t4) = (t[0], t[1], t[2], t[3]);
    t1 * t1 * t2 / c(2.0, 0.0)
        + t1 * t3 * t4
        + t3 * t3 * t4 / c(2.0, 0.0)
        + t2.exp()
        + t3 * (t2 - t4).exp()
        - t3 * t4.exp()
        + t3 * t3 * t3.ln() / c(2.0, 0.0)
}

fn f_p1(t: &[C]) -> C {
    t[0] * t[0] * t[1] / c(2.0, 0.0) + t[1].exp()
}

fn f_nonflat(t: &[C]) -> C {
    let (t1, t2) = (t[0], t[1]);
    t1 * t1 * t2 / c(2.0, 0.0) - t1 * t2.exp() + t1 * t1 * t1.ln() / c(2.0, 0.0)
}

fn f_double_pole(t: &[C]) -> C {
    let (t1, t2, t3) = (t[0], t[1], t[2]);
    t1 * t2 * t2 + t1 * t1 * t3 / c(2.0, 0.0) + t3 * t3 * t2.ln() / c(2.0, 0.0)
}

fn f_six_dim(t: &[C]) -> C {
    let (t1, t2, t3, t4, t5, t6) = (t[0], t[1], t[2], t[3], t[4], t[5]);
    -t2.powu(4) / c(96.0, 0.0) + t1 * t2 * t2 / c(4.0, 0.0)
        - t4.powu(4) / c(96.0, 0.0)
        + t1 * t4 * t4 / c(4.0, 0.0)
        + t1 * t1 * t3 / c(4.0, 0.0)
        + t4 * t4 * t5 / c(4.0, 0.0)
        + t5 * t5 * t6 / c(2.0, 0.0)
        + t1 * t5 * t6
        + t2 * t4 * (t3 / c(2.0, 0.0)).exp()
        + t3.exp() / c(2.0, 0.0)
        + t5 * (c(2.0, 0.0) * t6).exp() / c(2.0, 0.0)
        - t4 * t5 * t6.exp()
        + t2 * t5 * (t3 / c(2.0, 0.0) - t6).exp()
        - t5 * (t3 - c(2.0, 0.0) * t6).exp() / c(2.0, 0.0)
        + t5 * t5 * t5.ln() / c(2.0, 0.0)
}

/// The seven built-in examples.
pub fn all() -> Vec<CorpusExample> {
    let one = Ratio::one();
    let zero = Ratio::zero();
    vec![
        CorpusExample {
            name: "a3",
            description: "s=0 polynomial quartic: the A3 singularity manifold (dimension 3)",
            spec: SuperpotentialSpec {
                s: 0,
                zeros: 4,
                m0: 0,
                pole_multiplicities: vec![],
            },
            nonflat_unit: false,
            chart_map: vec![
                vec![(one, lab(LabelPoint::Infinity, 1))],
                vec![(one, lab(LabelPoint::Infinity, 2))],
                vec![(one, lab(LabelPoint::Infinity, 3))],
            ],
            euler_weights: vec![one, Ratio::new(3, 4), half()],
            euler_shifts: vec![zero, zero, zero],
            d: half(),
            closed_form_f: f_a3,
            base: ExampleInput::Partial(PartialFractionInput {
                polynomial: vec![c(0.8, 0.15), c(0.55, -0.35), c(1.1, 0.2), c(0.0, 0.0), c(1.0, 0.0)],
                origin: vec![],
                poles: vec![],
            }),
        },
        CorpusExample {
            name: "two-poles",
            description: "s=0, two simple movable poles (dimension 4)",
            spec: SuperpotentialSpec {
                s: 0,
                zeros: 3,
                m0: 0,
                pole_multiplicities: vec![1, 1],
            },
            nonflat_unit: false,
            chart_map: vec![
                vec![
                    (half(), lab(LabelPoint::Pole(0), 1)),
                    (half(), lab(LabelPoint::Pole(1), 1)),
                ],
                vec![
                    (half(), lab(LabelPoint::Pole(0), 1)),
                    (Ratio::new(-1, 2), lab(LabelPoint::Pole(1), 1)),
                ],
                vec![(one, lab(LabelPoint::Pole(0), 0))],
                vec![(one, lab(LabelPoint::Pole(1), 0))],
            ],
            euler_weights: vec![one, one, Ratio::int(2), Ratio::int(2)],
            euler_shifts: vec![zero, zero, zero, zero],
            d: Ratio::int(-1),
            closed_form_f: f_two_poles,
            base: ExampleInput::Partial(PartialFractionInput {
                polynomial: vec![c(0.0, 0.0), c(1.0, 0.0)],
                origin: vec![],
                poles: vec![
                    (c(0.9, 0.7), vec![c(0.8, 0.3)]),
                    (c(-0.8, -0.6), vec![c(1.1, -0.4)]),
                ],
            }),
        },
        CorpusExample {
            name: "toda3",
            description: "s=1 with poles at infinity, origin and one movable point (dimension 4)",
            spec: SuperpotentialSpec {
                s: 1,
                zeros: 3,
                m0: 1,
                pole_multiplicities: vec![1],
            },
            nonflat_unit: false,
            chart_map: vec![
                vec![(one, lab(LabelPoint::Zero, 0))],
                vec![(one, lab(LabelPoint::Zero, 1))],
                vec![(one, lab(LabelPoint::Pole(0), 0))],
                vec![(one, lab(LabelPoint::Pole(0), 1))],
            ],
            euler_weights: vec![one, zero, one, zero],
            euler_shifts: vec![zero, Ratio::int(2), zero, one],
            d: Ratio::int(1),
            closed_form_f: f_toda3,
            base: ExampleInput::Partial(PartialFractionInput {
                polynomial: vec![c(0.8, 0.1), c(1.0, 0.0)],
                origin: vec![c(1.25, -0.2)],
                poles: vec![(c(0.35, 1.15), vec![c(0.85, 0.4)])],
            }),
        },
        CorpusExample {
            name: "p1",
            description: "quantum cohomology of the projective line (dimension 2)",
            spec: SuperpotentialSpec {
                s: 1,
                zeros: 2,
                m0: 1,
                pole_multiplicities: vec![],
            },
            nonflat_unit: false,
            chart_map: vec![
                vec![(one, lab(LabelPoint::Zero, 0))],
                vec![(one, lab(LabelPoint::Zero, 1))],
            ],
            euler_weights: vec![one, zero],
            euler_shifts: vec![zero, Ratio::int(2)],
            d: Ratio::int(1),
            closed_form_f: f_p1,
            base: ExampleInput::Partial(PartialFractionInput {
                polynomial: vec![c(0.8, 0.1), c(1.0, 0.0)],
                origin: vec![c(1.2, -0.3)],
                poles: vec![],
            }),
        },
        CorpusExample {
            name: "nonflat",
            description: "s=1 with a simple zero at the origin: nonflat unit field (dimension 2)",
            spec: SuperpotentialSpec {
                s: 1,
                zeros: 1,
                m0: -1,
                pole_multiplicities: vec![1],
            },
            nonflat_unit: true,
            chart_map: vec![
                vec![(one, lab(LabelPoint::Pole(0), 0))],
                vec![(one, lab(LabelPoint::Pole(0), 1))],
            ],
            euler_weights: vec![one, zero],
            euler_shifts: vec![zero, one],
            d: Ratio::int(1),
            closed_form_f: f_nonflat,
            base: {
                // λ = p + u + uw/(p−w) = p(p+u−w)/(p−w).
                let u = c(0.64, -0.64);
                let w = c(-1.1, 0.55);
                ExampleInput::Raw(RawCoordinates {
                    zeros: vec![w - u],
                    poles: vec![w],
                })
            },
        },
        CorpusExample {
            name: "double-pole",
            description: "s=0 with one double movable pole (dimension 3)",
            spec: SuperpotentialSpec {
                s: 0,
                zeros: 3,
                m0: 0,
                pole_multiplicities: vec![2],
            },
            nonflat_unit: false,
            chart_map: vec![
                vec![(half(), lab(LabelPoint::Pole(0), 2))],
                vec![(half(), lab(LabelPoint::Pole(0), 1))],
                vec![(one, lab(LabelPoint::Pole(0), 0))],
            ],
            euler_weights: vec![one, Ratio::new(3, 2), Ratio::int(2)],
            euler_shifts: vec![zero, zero, zero],
            d: Ratio::int(-1),
            closed_form_f: f_double_pole,
            base: ExampleInput::Partial(PartialFractionInput {
                polynomial: vec![c(0.0, 0.0), c(1.0, 0.0)],
                origin: vec![],
                poles: vec![(c(0.9, 0.6), vec![c(0.7, -0.3), c(1.1, 0.4)])],
            }),
        },
        CorpusExample {
            name: "six-dim",
            description: "s=1 six-dimensional family with n = m0 = 2, one simple movable pole",
            spec: SuperpotentialSpec {
                s: 1,
                zeros: 5,
                m0: 2,
                pole_multiplicities: vec![1],
            },
            nonflat_unit: false,
            chart_map: vec![
                vec![(one, lab(LabelPoint::Zero, 0))],
                vec![(one, lab(LabelPoint::Zero, 1))],
                vec![(one, lab(LabelPoint::Zero, 2))],
                vec![(one, lab(LabelPoint::Infinity, 1))],
                vec![(one, lab(LabelPoint::Pole(0), 0))],
                vec![(one, lab(LabelPoint::Pole(0), 1))],
            ],
            euler_weights: vec![one, half(), zero, half(), one, zero],
            euler_shifts: vec![zero, zero, Ratio::int(2), zero, zero, half()],
            d: Ratio::int(1),
            closed_form_f: f_six_dim,
            base: {
                // Constructed from oracle-chart values so the base point
                // is known in both charts.
                let t1 = c(0.35, -0.1);
                let t2 = c(0.8, 0.25);
                let t3 = c(0.4, -0.3);
                let t4 = c(0.7, 0.2);
                let t5 = c(1.1, -0.2);
                let t6 = c(0.25, 0.6);
                let v = -t6.exp();
                ExampleInput::Partial(PartialFractionInput {
                    polynomial: vec![t1 + t5, t4, c(1.0, 0.0)],
                    origin: vec![t2 * (t3 / c(2.0, 0.0)).exp(), t3.exp()],
                    poles: vec![(v, vec![-t5 * t6.exp()])],
                })
            },
        },
    ]
}

pub fn by_name(name: &str) -> Option<CorpusExample> {
    all().into_iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::{euler_components, euler_weight_shift, ChartedPoint};

    #[test]
    fn corpus_has_seven_entries() {
        let entries = all();
        assert_eq!(entries.len(), 7);
        assert!(by_name("six-dim").is_some());
        assert!(by_name("unknown").is_none());
        assert_eq!(by_name("six-dim").unwrap().dimension(), 6);
    }

    #[test]
    fn base_points_build_and_chart() {
        for ex in all() {
            let raw = ex.base_raw().unwrap_or_else(|e| panic!("{}: {e}", ex.name));
            let cp = ChartedPoint::new(&ex.spec, &raw, None)
                .unwrap_or_else(|e| panic!("{}: {e}", ex.name));
            assert_eq!(cp.chart.labels.len(), ex.dimension(), "{}", ex.name);
            assert_eq!(cp.chart.unit_flat, !ex.nonflat_unit, "{}", ex.name);
            // Every chart-map label resolves.
            let t = ex.oracle_t(&cp.chart);
            assert_eq!(t.len(), ex.dimension());
        }
    }

    #[test]
    fn oracle_euler_data_from_label_formulas() {
        // The tabulated weights/shifts must follow exactly from the raw
        // per-label weight formulas through the chart map.
        for ex in all() {
            for (i, row) in ex.chart_map.iter().enumerate() {
                let mut shift = Ratio::zero();
                let mut weight: Option<Ratio> = None;
                for (coeff, label) in row {
                    let (w, r) = euler_weight_shift(&ex.spec, *label);
                    match weight {
                        None => weight = Some(w),
                        Some(prev) => assert_eq!(prev, w, "{}: mixed weights in row {i}", ex.name),
                    }
                    shift = shift.add(coeff.mul(r));
                }
                assert_eq!(weight.unwrap(), ex.euler_weights[i], "{} weight {i}", ex.name);
                assert_eq!(shift, ex.euler_shifts[i], "{} shift {i}", ex.name);
            }
        }
    }

    #[test]
    fn numeric_euler_matches_oracle_at_base_points() {
        for ex in all() {
            let raw = ex.base_raw().unwrap();
            let cp = ChartedPoint::new(&ex.spec, &raw, None).unwrap();
            let euler = euler_components(&cp).unwrap_or_else(|e| panic!("{}: {e}", ex.name));
            assert_eq!(euler.d, ex.d, "{}", ex.name);
            // E(oracle_t_i) = w_i oracle_t_i + r_i.
            let t = ex.oracle_t(&cp.chart);
            let a = ex.chart_matrix(&cp.chart);
            for i in 0..ex.dimension() {
                let mut e_oracle = C::new(0.0, 0.0);
                for (l, &alc) in a[i].iter().enumerate() {
                    e_oracle += C::new(alc, 0.0) * euler.components[l];
                }
                let expect = C::new(ex.euler_weights[i].to_f64(), 0.0) * t[i]
                    + C::new(ex.euler_shifts[i].to_f64(), 0.0);
                assert!(
                    (e_oracle - expect).norm() < 1e-9,
                    "{} Euler comp {i}: {e_oracle} vs {expect}",
                    ex.name
                );
            }
        }
    }

    #[test]
    fn six_dim_base_reproduces_oracle_t() {
        let ex = by_name("six-dim").unwrap();
        let raw = ex.base_raw().unwrap();
        let cp = ChartedPoint::new(&ex.spec, &raw, None).unwrap();
        let t = ex.oracle_t(&cp.chart);
        let expect = [
            c(0.35, -0.1),
            c(0.8, 0.25),
            c(0.4, -0.3),
            c(0.7, 0.2),
            c(1.1, -0.2),
            c(0.25, 0.6),
        ];
        for (i, (have, want)) in t.iter().zip(&expect).enumerate() {
            assert!(
                (have - want).norm() < 1e-9,
                "t{}: {have} vs {want}",
                i + 1
            );
        }
    }

    #[test]
    fn a3_leading_differential() {
        // dt³_∞ = [λ^{−3/4}]^∞_{≥−3} starts at p^{−3} with unit coefficient.
        let ex = by_name("a3").unwrap();
        let raw = ex.base_raw().unwrap();
        let cp = ChartedPoint::new(&ex.spec, &raw, None).unwrap();
        let pos = cp
            .chart
            .label_position(lab(LabelPoint::Infinity, 3))
            .unwrap();
        let dt3 = cp.chart.differentials[pos].series();
        assert!((dt3.coeff(-3).unwrap() - C::new(1.0, 0.0)).norm() < 1e-12);
        assert!(dt3.coeff(-2).unwrap().norm() < 1e-12);
        assert!(dt3.coeff(-1).unwrap().norm() < 1e-12);
    }

    #[test]
    fn nonflat_counity_is_still_closed() {
        // dε = 0 holds even when the unit field is not flat.
        let ex = by_name("nonflat").unwrap();
        let raw = ex.base_raw().unwrap();
        let cp = ChartedPoint::new(&ex.spec, &raw, None).unwrap();
        let v = crate::wdvv::check_counity_closed(&cp, 1e-2, 1e-5).unwrap();
        assert!(v.pass, "counity residual {}", v.max_residual);
    }

    #[test]
    fn sampling_is_deterministic() {
        let ex = by_name("toda3").unwrap();
        let a = ex.sample_raw(42, 0).unwrap();
        let b = ex.sample_raw(42, 0).unwrap();
        assert_eq!(a, b);
        let c2 = ex.sample_raw(42, 1).unwrap();
        assert_ne!(a, c2);
    }
}
