//! Experiment configuration files.

use std::path::Path;

use fellerdep::dependence::TestKind;
use fellerdep::json::{self, SpecDoc};
use fellerdep::levy::{OpenBox, TestFunction};
use fellerdep::smalltime::{RegionSpec, DEFAULT_TIMES};
use fellerdep::FellerError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    CheckResnick,
    Liggett,
    Dependence,
    Smalltime,
    PuodNecessity,
    GeneratorChecks,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::CheckResnick => "check-resnick",
            Self::Liggett => "liggett",
            Self::Dependence => "dependence",
            Self::Smalltime => "smalltime",
            Self::PuodNecessity => "puod-necessity",
            Self::GeneratorChecks => "generator-checks",
        }
    }
}

/// What the suite expects of its statistical verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    #[default]
    Consistent,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathFormat {
    #[default]
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankConfig {
    #[serde(default = "default_bank_size")]
    pub size: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_bank_size() -> usize {
    fellerdep::levy::FunctionBank::DEFAULT_SIZE
}

impl Default for BankConfig {
    fn default() -> Self {
        Self {
            size: default_bank_size(),
            seed: 0,
        }
    }
}

/// Rectangle in jump space; `null` bounds are infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub id: String,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

impl RegionConfig {
    pub fn build(&self) -> Result<RegionSpec, FellerError> {
        let lower = self
            .lower
            .iter()
            .map(|v| v.unwrap_or(f64::NEG_INFINITY))
            .collect();
        let upper = self
            .upper
            .iter()
            .map(|v| v.unwrap_or(f64::INFINITY))
            .collect();
        RegionSpec::new(self.id.clone(), OpenBox::new(lower, upper)?)
    }
}

/// One experiment. Keys not used by the chosen experiment are rejected
/// by [`ExperimentConfig::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub spec: SpecDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default)]
    pub expect: Expectation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bank: Option<BankConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tests: Option<Vec<TestKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<Vec<RegionConfig>>,
    /// `c` in `⌈c/t⌉` paths per time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub puod_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<TestFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<PathFormat>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_paths: Option<usize>,
}

fn schema(path: &str, message: impl Into<String>) -> FellerError {
    FellerError::Schema {
        path: path.into(),
        line: None,
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, FellerError> {
        let cfg: Self = json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, FellerError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn allowed(&self) -> &'static [&'static str] {
        match self.experiment {
            ExperimentKind::Simulate => &["grid", "format"],
            ExperimentKind::CheckResnick => &["states"],
            ExperimentKind::Liggett => &["states", "bank"],
            ExperimentKind::Dependence => &["t", "grid", "bank", "tests", "thresholds"],
            ExperimentKind::Smalltime => &["t_list", "regions", "path_scale", "rel_tol"],
            ExperimentKind::PuodNecessity => &["t_list", "path_scale", "puod_paths"],
            ExperimentKind::GeneratorChecks => &["t", "t_list", "h", "function", "chains"],
        }
    }

    /// Rejects keys that the experiment does not read and checks the spec.
    pub fn validate(&self) -> Result<(), FellerError> {
        let present = [
            ("grid", self.grid.is_some()),
            ("t", self.t.is_some()),
            ("t_list", self.t_list.is_some()),
            ("h", self.h.is_some()),
            ("bank", self.bank.is_some()),
            ("tests", self.tests.is_some()),
            ("thresholds", self.thresholds.is_some()),
            ("regions", self.regions.is_some()),
            ("path_scale", self.path_scale.is_some()),
            ("puod_paths", self.puod_paths.is_some()),
            ("rel_tol", self.rel_tol.is_some()),
            ("states", self.states.is_some()),
            ("function", self.function.is_some()),
            ("chains", self.chains.is_some()),
            ("format", self.format.is_some()),
        ];
        let allowed = self.allowed();
        for (key, here) in present {
            if here && !allowed.contains(&key) {
                return Err(schema(
                    key,
                    format!("not used by experiment `{}`", self.experiment.name()),
                ));
            }
        }
        let d = self.spec.dim().map_err(|e| match e {
            FellerError::Schema {
                path,
                line,
                message,
            } => FellerError::Schema {
                path: format!("spec.{path}"),
                line,
                message,
            },
            other => schema("spec", other.to_string()),
        })?;
        if let Some(x) = &self.start {
            if x.len() != d {
                return Err(schema(
                    "start",
                    format!("expected {d} coordinates, got {}", x.len()),
                ));
            }
        }
        if self.experiment == ExperimentKind::Smalltime
            && self.regions.as_ref().is_none_or(Vec::is_empty)
        {
            return Err(schema("regions", "at least one region required"));
        }
        if let Some(regions) = &self.regions {
            for (i, r) in regions.iter().enumerate() {
                if r.lower.len() != d || r.upper.len() != d {
                    return Err(schema(
                        &format!("regions[{i}]"),
                        format!("bounds must have {d} coordinates"),
                    ));
                }
                r.build()
                    .map_err(|e| schema(&format!("regions[{i}]"), e.to_string()))?;
            }
        }
        if self
            .tests
            .as_ref()
            .is_some_and(|t| t.contains(&TestKind::TemporalA))
            && self.grid.is_none()
        {
            return Err(schema("tests", "TemporalA needs a `grid`"));
        }
        Ok(())
    }

    /// Applies overrides and fills every default, so the result describes
    /// the run completely.
    pub fn resolve(&self, overrides: &Overrides) -> Result<Self, FellerError> {
        let mut c = self.clone();
        let d = c.spec.dim()?;
        c.seed = Some(overrides.seed.or(c.seed).unwrap_or(0));
        if let Some(n) = overrides.n_paths {
            c.n_paths = Some(n);
        }
        c.start.get_or_insert_with(|| vec![0.0; d]);
        let n_default = match c.experiment {
            ExperimentKind::Simulate => 1_000,
            ExperimentKind::CheckResnick | ExperimentKind::Liggett => 0,
            ExperimentKind::Smalltime | ExperimentKind::PuodNecessity => 0,
            ExperimentKind::Dependence | ExperimentKind::GeneratorChecks => 100_000,
        };
        if n_default > 0 {
            c.n_paths.get_or_insert(n_default);
        }
        match c.experiment {
            ExperimentKind::Simulate => {
                c.grid.get_or_insert_with(|| vec![1.0]);
                c.format.get_or_insert(PathFormat::Csv);
            }
            ExperimentKind::CheckResnick => {
                let x = c.start.clone().unwrap_or_default();
                c.states.get_or_insert_with(|| vec![x]);
            }
            ExperimentKind::Liggett => {
                let x = c.start.clone().unwrap_or_default();
                c.states.get_or_insert_with(|| vec![x]);
                c.bank.get_or_insert_with(BankConfig::default);
            }
            ExperimentKind::Dependence => {
                c.t.get_or_insert(1.0);
                c.bank.get_or_insert_with(BankConfig::default);
                if c.tests.is_none() {
                    let mut tests = TestKind::SPATIAL.to_vec();
                    if c.grid.is_some() {
                        tests.push(TestKind::TemporalA);
                    }
                    c.tests = Some(tests);
                }
            }
            ExperimentKind::Smalltime => {
                c.t_list.get_or_insert_with(|| DEFAULT_TIMES.to_vec());
                c.path_scale.get_or_insert(10_000.0);
                c.rel_tol.get_or_insert(0.05);
            }
            ExperimentKind::PuodNecessity => {
                c.t_list.get_or_insert_with(|| DEFAULT_TIMES.to_vec());
                c.path_scale.get_or_insert(10_000.0);
                c.puod_paths.get_or_insert(1_000_000);
            }
            ExperimentKind::GeneratorChecks => {
                c.t.get_or_insert(1.0);
                c.t_list.get_or_insert_with(|| vec![0.4, 0.2, 0.1, 0.05]);
                c.h.get_or_insert(0.05);
                c.chains.get_or_insert(5);
                c.function
                    .get_or_insert_with(|| TestFunction::coordinate_logistic(d, 0));
            }
        }
        Ok(c)
    }

    pub fn regions(&self) -> Result<Vec<RegionSpec>, FellerError> {
        self.regions
            .iter()
            .flatten()
            .map(RegionConfig::build)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"experiment": "dependence", "spec": {"process": {"kind": "preset", "name": "diagonal_levy"}}}"#;

    #[test]
    fn defaults_are_filled_in() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        let r = cfg.resolve(&Overrides::default()).unwrap();
        assert_eq!(r.seed, Some(0));
        assert_eq!(r.start, Some(vec![0.0, 0.0]));
        assert_eq!(r.tests.as_ref().unwrap().len(), 7);
        let r = cfg
            .resolve(&Overrides {
                seed: Some(5),
                n_paths: Some(10),
            })
            .unwrap();
        assert_eq!((r.seed, r.n_paths), (Some(5), Some(10)));
    }

    #[test]
    fn foreign_keys_are_rejected() {
        let text = r#"{"experiment": "liggett", "spec": {"process": {"kind": "preset", "name": "diagonal_levy"}}, "h": 0.1}"#;
        match ExperimentConfig::parse(text) {
            Err(FellerError::Schema { path, .. }) => assert_eq!(path, "h"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nested_spec_errors_carry_their_path() {
        let text = "{\"experiment\": \"simulate\",\n \"spec\": {\"process\": {\"kind\": \"jump_levy\", \"drift\": \"no\"}}}";
        match ExperimentConfig::parse(text) {
            Err(FellerError::Schema { path, line, .. }) => {
                assert_eq!(path, "spec.process.drift");
                assert_eq!(line, Some(2));
            }
            other => panic!("{other:?}"),
        }
        let bad_start = r#"{"experiment": "simulate", "spec": {"process": {"kind": "preset", "name": "poisson_1d"}}, "start": [0, 0]}"#;
        assert!(ExperimentConfig::parse(bad_start).is_err());
    }

    #[test]
    fn null_bounds_are_infinite() {
        let r = RegionConfig {
            id: "q".into(),
            lower: vec![Some(0.5), Some(0.5)],
            upper: vec![None, None],
        };
        let spec = r.build().unwrap();
        assert!(spec.region.contains(&[1.0, 1e300]));
    }
}
