//! Run configuration: one JSON document, every section optional.

use crate::error::{Error, Result};
use crate::quad::{parse_rational, rational_to_string, BoxRegion, QuadraticPolynomial};
use num_rational::BigRational;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::{Path, PathBuf};

/// Environment variable that overrides `output.dir`.
pub const OUT_DIR_ENV: &str = "QUADDIVISOR_OUT_DIR";

/// A rational read from `"p/q"`, a decimal string, or a JSON number, and
/// written back as `"p/q"` (or an integer string).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rational(pub BigRational);

impl Rational {
    pub fn integer(v: i64) -> Self {
        Self(BigRational::from_integer(v.into()))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rational_to_string(&self.0))
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
            Float(f64),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(s) => s,
            Raw::Int(v) => v.to_string(),
            Raw::Float(v) => format!("{v}"),
        };
        parse_rational(&text)
            .map(Rational)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialConfig {
    /// Symmetric integer matrix, row-major; `F(x) = xᵀQx + L·x + N`.
    #[serde(rename = "Q")]
    pub q: Vec<Vec<i64>>,
    #[serde(rename = "L")]
    pub l: Vec<i64>,
    #[serde(rename = "N")]
    pub n: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lo: Vec<Rational>,
    pub hi: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Truncation {
    pub pmax: u64,
    pub lmax: u32,
    /// Jet order about `s = 1`; `None` picks `max(k-1, 4) + 2`.
    pub order: Option<usize>,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            pmax: crate::series::DEFAULT_PMAX,
            lmax: crate::series::DEFAULT_LMAX,
            order: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Quadrature {
    /// Absolute tolerance on `∫_𝓑 (log F(Xu))^r du`.
    pub tol: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Record wall-clock times; off by default so reruns are byte-identical.
    pub timing: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Fail unless the least-squares slope of `log|rel err|` vs `log X` is negative.
    pub require_decrease: bool,
    /// Fail if `|rel err|` at the largest `X` exceeds this.
    pub final_rel_error_max: Option<f64>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            require_decrease: true,
            final_rel_error_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub polynomial: PolynomialConfig,
    #[serde(rename = "box")]
    pub region: BoxConfig,
    pub k: u32,
    #[serde(rename = "X")]
    pub x_ladder: Vec<Rational>,
    pub truncation: Truncation,
    pub quadrature: Quadrature,
    /// Worker threads; `None` lets the pool decide.
    pub threads: Option<usize>,
    /// Seed for sampled checks in `verify`.
    pub seed: u64,
    pub compare: CompareConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    /// `x₁² + x₂² + x₃²` on `[0,1]³`, `k = 2`, `X ∈ {50, 100, 200, 400}`.
    fn default() -> Self {
        Self {
            polynomial: PolynomialConfig {
                q: vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
                l: vec![0; 3],
                n: 0,
            },
            region: BoxConfig {
                lo: vec![Rational::integer(0); 3],
                hi: vec![Rational::integer(1); 3],
            },
            k: 2,
            x_ladder: [50, 100, 200, 400]
                .into_iter()
                .map(Rational::integer)
                .collect(),
            truncation: Truncation::default(),
            quadrature: Quadrature::default(),
            threads: None,
            seed: 0x5eed,
            compare: CompareConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every precondition that does not need heavy work.
    pub fn validate(&self) -> Result<()> {
        let poly = self.polynomial()?;
        let _ = self.region_at(&BigRational::from_integer(1.into()))?;
        if self.region.lo.len() != poly.dim() {
            return Err(Error::DimensionMismatch {
                expected: poly.dim(),
                got: self.region.lo.len(),
            });
        }
        if self.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if self.truncation.pmax < 2 || self.truncation.lmax < 2 {
            return Err(Error::Config(
                "truncation needs pmax >= 2 and lmax >= 2".into(),
            ));
        }
        if let Some(order) = self.truncation.order {
            if order + 1 < self.k as usize {
                return Err(Error::Config(format!("jet order {order} is below k - 1")));
            }
        }
        if !(self.quadrature.tol > 0.0) {
            return Err(Error::Config(
                "quadrature tolerance must be positive".into(),
            ));
        }
        if self
            .x_ladder
            .iter()
            .any(|x| x.0 <= BigRational::from_integer(0.into()))
        {
            return Err(Error::Config("every X must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn polynomial(&self) -> Result<QuadraticPolynomial> {
        let p = &self.polynomial;
        QuadraticPolynomial::new(p.q.clone(), p.l.clone(), p.n)
    }

    pub fn region_at(&self, x: &BigRational) -> Result<BoxRegion> {
        BoxRegion::new(
            self.region.lo.iter().map(|r| r.0.clone()).collect(),
            self.region.hi.iter().map(|r| r.0.clone()).collect(),
            x.clone(),
        )
    }

    pub fn jet_order(&self) -> usize {
        self.truncation
            .order
            .unwrap_or_else(|| crate::phi::default_jet_order(self.k))
    }

    /// `output.dir`, unless the environment override is set.
    pub fn out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.dir.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.x_ladder.push(Rational(parse_rational("7/3").unwrap()));
        cfg.truncation.order = Some(5);
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json(), cfg.to_json());
    }

    #[test]
    fn rationals_from_strings_and_numbers() {
        let cfg = RunConfig::from_json(
            r#"{"box": {"lo": [0, "1/2", 0.25], "hi": ["1", 2, "1.5"]}, "X": [2, "2.5"]}"#,
        )
        .unwrap();
        assert_eq!(cfg.region.lo[1].0, parse_rational("1/2").unwrap());
        assert_eq!(cfg.region.lo[2].0, parse_rational("1/4").unwrap());
        assert_eq!(cfg.x_ladder[1].0, parse_rational("5/2").unwrap());
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"k": 0}"#,
            r#"{"polynomial": {"Q": [[1,2],[2,1]], "L": [0,0], "N": 0}}"#,
            r#"{"box": {"lo": [0,0], "hi": [1,1]}}"#,
            r#"{"quadrature": {"tol": 0}}"#,
            r#"{"X": [0]}"#,
            r#"{"unknown": 1}"#,
            r#"{"truncation": {"pmax": 1}}"#,
        ] {
            assert!(RunConfig::from_json(text).is_err(), "{text}");
        }
    }
}
