//! Run configuration: a schema-versioned TOML file describing the
//! superpotential family, the coordinates of the working point, and run
//! parameters.  Complex numbers are two-element arrays [re, im].

use frob_core::meromorphic::{
    PartialFractionInput, RawCoordinates, SuperpotentialSpec,
};
use frob_core::C;
use serde::Deserialize;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub spec: SpecSection,
    #[serde(default)]
    pub coordinates: Option<CoordinatesSection>,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecSection {
    pub s: u8,
    pub zeros: usize,
    pub m0: i64,
    #[serde(default)]
    pub pole_multiplicities: Vec<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinatesSection {
    #[serde(default)]
    pub raw: Option<RawSection>,
    #[serde(default)]
    pub partial_fraction: Option<PartialFractionSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSection {
    pub zeros: Vec<[f64; 2]>,
    #[serde(default)]
    pub poles: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialFractionSection {
    pub polynomial: Vec<[f64; 2]>,
    #[serde(default)]
    pub origin: Vec<[f64; 2]>,
    #[serde(default)]
    pub poles: Vec<PartialFractionPole>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialFractionPole {
    pub location: [f64; 2],
    pub coefficients: Vec<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
}

fn cx(a: [f64; 2]) -> C {
    C::new(a[0], a[1])
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| format!("config parse: {e}"))?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                cfg.schema_version
            ));
        }
        Ok(cfg)
    }

    pub fn spec(&self) -> SuperpotentialSpec {
        SuperpotentialSpec {
            s: self.spec.s,
            zeros: self.spec.zeros,
            m0: self.spec.m0,
            pole_multiplicities: self.spec.pole_multiplicities.clone(),
        }
    }

    /// Resolve the working point, converting a partial-fraction chart to
    /// factored coordinates when needed.
    pub fn coordinates(&self) -> Result<Option<RawCoordinates>, String> {
        let Some(coords) = &self.coordinates else {
            return Ok(None);
        };
        match (&coords.raw, &coords.partial_fraction) {
            (Some(_), Some(_)) => Err("give raw or partial_fraction coordinates, not both".into()),
            (Some(raw), None) => Ok(Some(RawCoordinates {
                zeros: raw.zeros.iter().copied().map(cx).collect(),
                poles: raw.poles.iter().copied().map(cx).collect(),
            })),
            (None, Some(pf)) => {
                let input = PartialFractionInput {
                    polynomial: pf.polynomial.iter().copied().map(cx).collect(),
                    origin: pf.origin.iter().copied().map(cx).collect(),
                    poles: pf
                        .poles
                        .iter()
                        .map(|p| (cx(p.location), p.coefficients.iter().copied().map(cx).collect()))
                        .collect(),
                };
                input
                    .to_raw(&self.spec())
                    .map(Some)
                    .map_err(|e| format!("partial fractions: {e}"))
            }
            (None, None) => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_raw_config() {
        let text = r#"
schema_version = 1

[spec]
s = 1
zeros = 2
m0 = 1
pole_multiplicities = []

[coordinates.raw]
zeros = [[1.0, 0.0], [2.0, 0.0]]
poles = []

[run]
seed = 7
"#;
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.spec().dimension(), 2);
        let raw = cfg.coordinates().unwrap().unwrap();
        assert_eq!(raw.zeros.len(), 2);
        assert_eq!(cfg.run.seed, Some(7));
    }

    #[test]
    fn rejects_wrong_schema_and_unknown_fields() {
        assert!(RunConfig::parse("schema_version = 2\n[spec]\ns = 1\nzeros = 2\nm0 = 1").is_err());
        assert!(RunConfig::parse(
            "schema_version = 1\nbogus = 3\n[spec]\ns = 1\nzeros = 2\nm0 = 1"
        )
        .is_err());
    }

    #[test]
    fn parses_partial_fractions() {
        let text = r#"
schema_version = 1

[spec]
s = 1
zeros = 3
m0 = 1
pole_multiplicities = [1]

[coordinates.partial_fraction]
polynomial = [[0.8, 0.1], [1.0, 0.0]]
origin = [[1.25, -0.2]]
poles = [{ location = [0.35, 1.15], coefficients = [[0.85, 0.4]] }]
"#;
        let cfg = RunConfig::parse(text).unwrap();
        let raw = cfg.coordinates().unwrap().unwrap();
        assert_eq!(raw.zeros.len(), 3);
        assert_eq!(raw.poles.len(), 1);
    }
}
