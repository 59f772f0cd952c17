//! Experiment configuration files and their resolution against the
//! command line.

use std::path::{Path, PathBuf};

use freewalk::scalar::FieldSpec;
use freewalk::stats::HolderTestFunction;
use freewalk::walk::{AnyMeasure, MeasureFile};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const CONFIG_SCHEMA: &str = "freewalk/experiment/v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Kak,
    Certify,
    Lyapunov,
    Decay,
    Direction,
    Independence,
    Invariant,
    Tuple,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Kak => "kak",
            ExperimentKind::Certify => "certify",
            ExperimentKind::Lyapunov => "lyapunov",
            ExperimentKind::Decay => "decay",
            ExperimentKind::Direction => "direction",
            ExperimentKind::Independence => "independence",
            ExperimentKind::Invariant => "invariant",
            ExperimentKind::Tuple => "tuple",
        }
    }
}

/// A catalog name or an explicit description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TestFunctionSpec {
    Named(String),
    Custom(HolderTestFunction),
}

/// One experiment. Paths are relative to the config file. Which optional
/// fields are required depends on the experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    /// Must agree with the measure files when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    pub measure: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub reps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_base: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_base: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi1: Option<TestFunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi2: Option<TestFunctionSpec>,
    /// Exponent for named test functions (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperplanes: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_hyperplanes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        if cfg.schema != CONFIG_SCHEMA {
            return Err(CliError::Config(format!(
                "{origin}: unsupported schema {:?}, expected {CONFIG_SCHEMA:?}",
                cfg.schema
            )));
        }
        if let Some(grid) = &cfg.grid {
            if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::Config(format!(
                    "{origin}: grid must be non-empty, positive and strictly increasing, got {grid:?}"
                )));
            }
        }
        if cfg.reps == 0 {
            return Err(CliError::Config(format!("{origin}: reps must be positive")));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn require<T: Clone>(&self, value: &Option<T>, name: &str) -> CliResult<T> {
        value.clone().ok_or_else(|| CliError::Config(format!("missing required field {name:?}")))
    }
}

/// A measure file with the digest of its bytes.
#[derive(Clone, Debug)]
pub struct LoadedMeasure {
    pub path: String,
    pub sha256: String,
    pub measure: AnyMeasure,
}

impl LoadedMeasure {
    pub fn load(base: &Path, rel: &str) -> CliResult<Self> {
        let path = base.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::Config(format!("{}: not valid UTF-8", path.display())))?;
        let file = MeasureFile::parse(&text).map_err(|e| CliError::input(path.display().to_string(), e))?;
        let measure = file.into_any().map_err(|e| CliError::input(path.display().to_string(), e))?;
        Ok(LoadedMeasure { path: rel.to_string(), sha256: hex::encode(Sha256::digest(&bytes)), measure })
    }
}

/// A config with its measures loaded and command-line overrides applied.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub measure: LoadedMeasure,
    pub measure2: Option<LoadedMeasure>,
    pub out_dir: PathBuf,
}

impl Resolved {
    /// Precedence: command line (or `FREEWALK_*` environment), then config.
    pub fn new(
        kind: ExperimentKind,
        config_path: &Path,
        seed: Option<u64>,
        out: Option<&Path>,
    ) -> CliResult<Self> {
        let config = ExperimentConfig::load(config_path)?;
        if let Some(k) = config.experiment {
            if k != kind {
                return Err(CliError::Config(format!(
                    "config describes a {} experiment but the {} command was run",
                    k.name(),
                    kind.name()
                )));
            }
        }
        let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let seed = seed
            .or(config.seed)
            .ok_or_else(|| CliError::Config("a seed is required (config \"seed\", --seed or FREEWALK_SEED)".into()))?;
        let measure = LoadedMeasure::load(&base, &config.measure)?;
        let measure2 = config.measure2.as_deref().map(|p| LoadedMeasure::load(&base, p)).transpose()?;
        for m in std::iter::once(&measure).chain(measure2.iter()) {
            if let Some(f) = &config.field {
                if *f != m.measure.spec() {
                    return Err(CliError::Config(format!(
                        "config field {f} does not match {} ({})",
                        m.path,
                        m.measure.spec()
                    )));
                }
            }
        }
        if let Some(m2) = &measure2 {
            if m2.measure.spec() != measure.measure.spec() || m2.measure.dim() != measure.measure.dim() {
                return Err(CliError::Config("measure and measure2 must share field and dimension".into()));
            }
        }
        let out_dir = match (out, &config.out) {
            (Some(o), _) => o.to_path_buf(),
            (None, Some(o)) => base.join(o),
            (None, None) => PathBuf::from("."),
        };
        Ok(Resolved { kind, config, seed, measure, measure2, out_dir })
    }

    /// The configuration as it was actually run, for the JSON sidecar.
    /// Output location and thread count are left out so that results do not
    /// depend on them.
    pub fn echo(&self) -> Value {
        let mut v = serde_json::to_value(&self.config).expect("configs serialize");
        let obj = v.as_object_mut().expect("configs serialize to objects");
        obj.remove("out");
        obj.insert("experiment".into(), Value::from(self.kind.name()));
        obj.insert("field".into(), serde_json::to_value(self.measure.measure.spec()).expect("field specs serialize"));
        obj.insert("seed".into(), Value::from(self.seed));
        obj.insert("measure_sha256".into(), Value::from(self.measure.sha256.clone()));
        if let Some(m2) = &self.measure2 {
            obj.insert("measure2_sha256".into(), Value::from(m2.sha256.clone()));
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(extra: &str) -> String {
        format!(r#"{{"schema":"{CONFIG_SCHEMA}","measure":"m.json","reps":5{extra}}}"#)
    }

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::parse(&base(""), "t").unwrap();
        assert_eq!(cfg.reps, 5);
        assert!(cfg.seed.is_none() && cfg.grid.is_none());
    }

    #[test]
    fn grid_must_increase() {
        assert!(ExperimentConfig::parse(&base(r#","grid":[1,2,3]"#), "t").is_ok());
        for bad in [r#","grid":[]"#, r#","grid":[0,2]"#, r#","grid":[3,2]"#] {
            assert!(matches!(ExperimentConfig::parse(&base(bad), "t"), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn zero_reps_rejected() {
        let text = base("").replace("\"reps\":5", "\"reps\":0");
        assert!(ExperimentConfig::parse(&text, "t").is_err());
    }

    #[test]
    fn test_functions_by_name_or_inline() {
        let cfg = ExperimentConfig::parse(
            &base(r#","phi1":"dist_e1","phi2":{"factors":[{"hyperplane":["1","0"]}],"eps":0.5}"#),
            "t",
        )
        .unwrap();
        assert_eq!(cfg.phi1, Some(TestFunctionSpec::Named("dist_e1".into())));
        assert!(matches!(cfg.phi2, Some(TestFunctionSpec::Custom(_))));
    }

    #[test]
    fn echo_drops_output_location() {
        let dir = std::env::temp_dir().join(format!("freewalk-echo-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(
            dir.join("m.json"),
            r#"{"field":{"kind":"archimedean"},"d":2,"atoms":[[["1","0"],["0","1"]]],"probs":["1"]}"#,
        )
        .unwrap();
        std::fs::write(dir.join("c.json"), base(r#","seed":3,"out":"results""#)).unwrap();
        let res = Resolved::new(ExperimentKind::Lyapunov, &dir.join("c.json"), None, None).unwrap();
        assert_eq!(res.out_dir, dir.join("results"));
        let echo = res.echo();
        assert!(echo.get("out").is_none());
        assert_eq!(echo["seed"], 3);
        assert_eq!(echo["experiment"], "lyapunov");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
