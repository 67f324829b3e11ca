//! JSON documents for triplets and processes.
//!
//! ```json
//! {"triplet": {"d": 2, "drift": [0, 0],
//!              "nu": {"kind": "finite_activity", "rate": 1,
//!                     "atoms": [{"point": [1, 1], "weight": 1}]}}}
//! {"process": {"kind": "ornstein_uhlenbeck", "lambda": 1,
//!              "driver": {"drift": [0], "nu": {"kind": "finite_activity", "rate": 1,
//!                                              "atoms": [{"point": [1], "weight": 1}]}}}}
//! {"process": {"kind": "preset", "name": "diagonal_levy"}}
//! ```

use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{FellerError, Result};
use crate::levy::{DensityLaw, Diffusion, Drift, JumpKernel, JumpLaw, LevyMeasure, StateTriplet};
use crate::processes::{
    presets, JumpLevy, Kernel, OrnsteinUhlenbeck, ProcessSpec, PseudoPoisson, Subordinated,
    Subordinator, SubordinatorJumps,
};

/// Quadrature threshold for the α-stable density when `y_min` is omitted.
pub const DEFAULT_Y_MIN: f64 = 1e-6;

fn schema(path: &str, message: impl Into<String>) -> FellerError {
    FellerError::Schema {
        path: path.to_string(),
        line: None,
        message: message.into(),
    }
}

fn at(path: &str) -> impl Fn(FellerError) -> FellerError + '_ {
    move |e| match e {
        FellerError::Schema { .. } => e,
        other => schema(path, other.to_string()),
    }
}

/// Parses `text`, reporting the failing key path and line.
pub fn from_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = match e.path().to_string() {
            p if p == "?" => ".".to_string(),
            p => p,
        };
        let inner = e.into_inner();
        FellerError::Schema {
            path,
            line: Some(inner.line()),
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| FellerError::Schema {
        path: ".".into(),
        line: Some(e.line()),
        message: e.to_string(),
    })?;
    Ok(value)
}

/// As [`from_str`] for an already parsed value; no line information.
pub fn from_value<T: DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| FellerError::Schema {
        path: e.path().to_string(),
        line: None,
        message: e.into_inner().to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DriftDoc {
    Constant(Vec<f64>),
    /// `b0 - lambda · x`.
    Linear {
        b0: Vec<f64>,
        lambda: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDoc {
    pub point: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LawDoc {
    Atoms(Vec<AtomDoc>),
    Exponential {
        rates: Vec<f64>,
    },
    /// Covariance row-major.
    Gaussian {
        mean: Vec<f64>,
        covariance: Vec<f64>,
    },
}

impl LawDoc {
    pub fn build(&self, path: &str) -> Result<JumpLaw> {
        match self {
            LawDoc::Atoms(atoms) => atom_law(atoms, path),
            LawDoc::Exponential { rates } => Ok(JumpLaw::Density(
                DensityLaw::exponential(rates.clone()).map_err(at(path))?,
            )),
            LawDoc::Gaussian { mean, covariance } => Ok(JumpLaw::Density(
                DensityLaw::gaussian(mean.clone(), covariance.clone()).map_err(at(path))?,
            )),
        }
    }
}

fn atom_law(atoms: &[AtomDoc], path: &str) -> Result<JumpLaw> {
    if atoms.is_empty() {
        return Err(schema(path, "at least one atom required"));
    }
    let d = atoms[0].point.len();
    let points = atoms.iter().map(|a| a.point.clone()).collect();
    let weights = atoms.iter().map(|a| a.weight).collect();
    Ok(JumpLaw::Atoms(
        crate::levy::AtomicLaw::new(d, points, weights).map_err(at(path))?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuKind {
    FiniteActivity,
    AlphaStableSubordinator,
    Zero,
}

/// `finite_activity` takes `rate` and one of `atoms`, `law`;
/// `alpha_stable_subordinator` takes `alpha` and optionally `y_min`;
/// `zero` takes `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuDoc {
    pub kind: NuKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AtomDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<LawDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
}

fn required<T: Copy>(v: Option<T>, path: &str, key: &str) -> Result<T> {
    v.ok_or_else(|| schema(&format!("{path}.{key}"), "missing field"))
}

fn forbid(present: bool, path: &str, key: &str, kind: &str) -> Result<()> {
    if present {
        Err(schema(
            &format!("{path}.{key}"),
            format!("not allowed for kind `{kind}`"),
        ))
    } else {
        Ok(())
    }
}

impl NuDoc {
    pub fn atoms(rate: f64, atoms: Vec<AtomDoc>) -> Self {
        Self {
            kind: NuKind::FiniteActivity,
            rate: Some(rate),
            atoms: Some(atoms),
            law: None,
            alpha: None,
            y_min: None,
            d: None,
        }
    }

    pub fn build(&self, path: &str) -> Result<LevyMeasure> {
        match self.kind {
            NuKind::FiniteActivity => {
                for (present, key) in [
                    (self.alpha.is_some(), "alpha"),
                    (self.y_min.is_some(), "y_min"),
                    (self.d.is_some(), "d"),
                ] {
                    forbid(present, path, key, "finite_activity")?;
                }
                let rate = required(self.rate, path, "rate")?;
                let law = match (&self.atoms, &self.law) {
                    (Some(a), None) => atom_law(a, &format!("{path}.atoms"))?,
                    (None, Some(l)) => l.build(&format!("{path}.law"))?,
                    _ => return Err(schema(path, "give exactly one of `atoms` and `law`")),
                };
                LevyMeasure::finite(rate, law).map_err(at(&format!("{path}.rate")))
            }
            NuKind::AlphaStableSubordinator => {
                for (present, key) in [
                    (self.rate.is_some(), "rate"),
                    (self.atoms.is_some(), "atoms"),
                    (self.law.is_some(), "law"),
                    (self.d.is_some(), "d"),
                ] {
                    forbid(present, path, key, "alpha_stable_subordinator")?;
                }
                let alpha = required(self.alpha, path, "alpha")?;
                LevyMeasure::alpha_stable(alpha, self.y_min.unwrap_or(DEFAULT_Y_MIN))
                    .map_err(at(path))
            }
            NuKind::Zero => Ok(LevyMeasure::zero(required(self.d, path, "d")?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripletDoc {
    pub d: usize,
    pub drift: DriftDoc,
    /// Row-major diffusion matrix; omitted means zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    pub nu: NuDoc,
    #[serde(default)]
    pub symbol_bounded: bool,
}

impl TripletDoc {
    pub fn build(&self) -> Result<StateTriplet> {
        let p = "triplet";
        let drift = match &self.drift {
            DriftDoc::Constant(b) => Drift::Constant(b.clone()),
            DriftDoc::Linear { b0, lambda } => Drift::Linear {
                b0: b0.clone(),
                lambda: *lambda,
            },
        };
        let diffusion = match &self.sigma {
            None => Diffusion::Zero,
            Some(s) => Diffusion::Constant(s.clone()),
        };
        let nu = self.nu.build("triplet.nu")?;
        Ok(
            StateTriplet::new(self.d, drift, diffusion, JumpKernel::Constant(Arc::new(nu)))
                .map_err(at(p))?
                .with_symbol_bounded(self.symbol_bounded),
        )
    }

    /// The Lévy or Ornstein–Uhlenbeck process with these characteristics,
    /// when there is one the simulator supports.
    pub fn process(&self) -> Result<ProcessSpec> {
        if self
            .sigma
            .as_ref()
            .is_some_and(|s| s.iter().any(|v| *v != 0.0))
        {
            return Err(schema(
                "triplet.sigma",
                "simulation needs a zero diffusion matrix",
            ));
        }
        let nu = self.nu.build("triplet.nu")?;
        match &self.drift {
            DriftDoc::Constant(b) => Ok(ProcessSpec::JumpLevy(
                JumpLevy::new(b.clone(), nu).map_err(at("triplet"))?,
            )),
            DriftDoc::Linear { b0, lambda } => {
                let driver = JumpLevy::new(b0.clone(), nu).map_err(at("triplet"))?;
                Ok(ProcessSpec::OrnsteinUhlenbeck(
                    OrnsteinUhlenbeck::new(*lambda, driver).map_err(at("triplet.drift.lambda"))?,
                ))
            }
        }
    }
}

/// `(b, ν)` with a constant drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyDoc {
    pub drift: Vec<f64>,
    /// Omitted means no jumps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<NuDoc>,
}

impl LevyDoc {
    pub fn build(&self, path: &str) -> Result<JumpLevy> {
        match &self.nu {
            None => Ok(JumpLevy::pure_drift(self.drift.clone())),
            Some(nu) => {
                let nu = nu.build(&format!("{path}.nu"))?;
                JumpLevy::new(self.drift.clone(), nu).map_err(at(path))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelDoc {
    Chain {
        states: Vec<Vec<f64>>,
        transition: Vec<Vec<f64>>,
    },
    /// `x + Z`, `Z ≥ 0`.
    Translation(LawDoc),
    Identity {
        d: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubordinatorDoc {
    #[serde(default)]
    pub drift: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<LawDoc>,
}

impl SubordinatorDoc {
    fn build(&self, path: &str) -> Result<Subordinator> {
        let jumps = match (self.alpha, self.rate, &self.law) {
            (Some(alpha), None, None) => SubordinatorJumps::AlphaStable { alpha },
            (None, Some(rate), Some(law)) => SubordinatorJumps::Finite {
                rate,
                law: law.build(&format!("{path}.law"))?,
            },
            (None, None, None) => SubordinatorJumps::None,
            _ => {
                return Err(schema(
                    path,
                    "give either `alpha`, or `rate` with `law`, or neither",
                ))
            }
        };
        Subordinator::new(self.drift, jumps).map_err(at(path))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKindDoc {
    JumpLevy,
    OrnsteinUhlenbeck,
    PseudoPoisson,
    Subordinated,
    Preset,
}

impl ProcessKindDoc {
    fn name(self) -> &'static str {
        match self {
            Self::JumpLevy => "jump_levy",
            Self::OrnsteinUhlenbeck => "ornstein_uhlenbeck",
            Self::PseudoPoisson => "pseudo_poisson",
            Self::Subordinated => "subordinated",
            Self::Preset => "preset",
        }
    }
}

/// Keys by kind:
/// `jump_levy`: `drift`, optional `nu`;
/// `ornstein_uhlenbeck`: `lambda`, `driver`;
/// `pseudo_poisson`: `rate`, `kernel`;
/// `subordinated`: `inner`, `subordinator`;
/// `preset`: `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessDoc {
    pub kind: ProcessKindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<NuDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub driver: Option<LevyDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<LevyDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subordinator: Option<SubordinatorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl ProcessDoc {
    pub fn preset(name: &str) -> Self {
        Self {
            kind: ProcessKindDoc::Preset,
            drift: None,
            nu: None,
            lambda: None,
            driver: None,
            rate: None,
            kernel: None,
            inner: None,
            subordinator: None,
            name: Some(name.to_string()),
        }
    }

    fn allow_only(&self, keys: &[&str]) -> Result<()> {
        let present = [
            ("drift", self.drift.is_some()),
            ("nu", self.nu.is_some()),
            ("lambda", self.lambda.is_some()),
            ("driver", self.driver.is_some()),
            ("rate", self.rate.is_some()),
            ("kernel", self.kernel.is_some()),
            ("inner", self.inner.is_some()),
            ("subordinator", self.subordinator.is_some()),
            ("name", self.name.is_some()),
        ];
        for (key, here) in present {
            forbid(
                here && !keys.contains(&key),
                "process",
                key,
                self.kind.name(),
            )?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<ProcessSpec> {
        let p = "process";
        let missing = |key: &str| schema(&format!("process.{key}"), "missing field");
        match self.kind {
            ProcessKindDoc::JumpLevy => {
                self.allow_only(&["drift", "nu"])?;
                let levy = LevyDoc {
                    drift: self.drift.clone().ok_or_else(|| missing("drift"))?,
                    nu: self.nu.clone(),
                };
                Ok(ProcessSpec::JumpLevy(levy.build(p)?))
            }
            ProcessKindDoc::OrnsteinUhlenbeck => {
                self.allow_only(&["lambda", "driver"])?;
                let lambda = required(self.lambda, p, "lambda")?;
                let driver = self
                    .driver
                    .as_ref()
                    .ok_or_else(|| missing("driver"))?
                    .build("process.driver")?;
                Ok(ProcessSpec::OrnsteinUhlenbeck(
                    OrnsteinUhlenbeck::new(lambda, driver).map_err(at("process.lambda"))?,
                ))
            }
            ProcessKindDoc::PseudoPoisson => {
                self.allow_only(&["rate", "kernel"])?;
                let rate = required(self.rate, p, "rate")?;
                let kernel = match self.kernel.as_ref().ok_or_else(|| missing("kernel"))? {
                    KernelDoc::Chain { states, transition } => Kernel::FiniteChain {
                        states: states.clone(),
                        transition: transition.clone(),
                    },
                    KernelDoc::Translation(law) => Kernel::Translation {
                        law: law.build("process.kernel.translation")?,
                    },
                    KernelDoc::Identity { d } => Kernel::Identity { dim: *d },
                };
                Ok(ProcessSpec::PseudoPoisson(
                    PseudoPoisson::new(rate, kernel).map_err(at("process.kernel"))?,
                ))
            }
            ProcessKindDoc::Subordinated => {
                self.allow_only(&["inner", "subordinator"])?;
                let inner = self
                    .inner
                    .as_ref()
                    .ok_or_else(|| missing("inner"))?
                    .build("process.inner")?;
                let subordinator = self
                    .subordinator
                    .as_ref()
                    .ok_or_else(|| missing("subordinator"))?
                    .build("process.subordinator")?;
                Ok(ProcessSpec::Subordinated(Subordinated {
                    inner,
                    subordinator,
                }))
            }
            ProcessKindDoc::Preset => {
                self.allow_only(&["name"])?;
                let name = self.name.as_ref().ok_or_else(|| missing("name"))?;
                presets::find(name)
                    .map(|p| p.spec())
                    .ok_or_else(|| schema("process.name", format!("unknown preset `{name}`")))
            }
        }
    }
}

/// Either a process or a bare triplet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triplet: Option<TripletDoc>,
}

impl SpecDoc {
    pub fn preset(name: &str) -> Self {
        Self {
            process: Some(ProcessDoc::preset(name)),
            triplet: None,
        }
    }

    fn check(&self) -> Result<()> {
        match (&self.process, &self.triplet) {
            (Some(_), Some(_)) | (None, None) => Err(schema(
                "spec",
                "give exactly one of `process` and `triplet`",
            )),
            _ => Ok(()),
        }
    }

    pub fn process(&self) -> Result<ProcessSpec> {
        self.check()?;
        match (&self.process, &self.triplet) {
            (Some(p), _) => p.build(),
            (_, Some(t)) => t.process(),
            _ => unreachable!(),
        }
    }

    /// The triplet at `x`; processes go through their effective triplet.
    pub fn triplet_at(&self, x: &[f64]) -> Result<StateTriplet> {
        self.check()?;
        match (&self.process, &self.triplet) {
            (_, Some(t)) => t.build(),
            (Some(p), _) => p.build()?.effective_triplet(x),
            _ => unreachable!(),
        }
    }

    pub fn dim(&self) -> Result<usize> {
        self.check()?;
        match (&self.process, &self.triplet) {
            (_, Some(t)) => Ok(t.d),
            (Some(p), _) => Ok(p.build()?.dim()),
            _ => unreachable!(),
        }
    }

    /// Short identifier for reports.
    pub fn id(&self) -> String {
        match (&self.process, &self.triplet) {
            (Some(p), _) => match (&p.kind, &p.name) {
                (ProcessKindDoc::Preset, Some(name)) => name.clone(),
                (kind, _) => kind.name().to_string(),
            },
            (None, Some(_)) => "triplet".into(),
            (None, None) => "none".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::MeasureKind;
    use crate::processes::ProcessKind;

    #[test]
    fn triplet_document_round_trip() {
        let text = r#"{"d": 2, "drift": {"b0": [1, 0], "lambda": 2},
            "nu": {"kind": "finite_activity", "rate": 2,
                   "atoms": [{"point": [1, 1], "weight": 0.7}, {"point": [1, -1], "weight": 0.3}]}}"#;
        let doc: TripletDoc = from_str(text).unwrap();
        let t = doc.build().unwrap();
        let c = t.at(&[1.0, 1.0]).unwrap();
        assert_eq!(c.drift, vec![-1.0, -2.0]);
        assert_eq!(c.nu.total_mass(), 2.0);
        assert_eq!(
            doc.process().unwrap().kind(),
            ProcessKind::OrnsteinUhlenbeck
        );
        let again: TripletDoc = from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn stable_measure_defaults_its_threshold() {
        let doc: NuDoc =
            from_str(r#"{"kind": "alpha_stable_subordinator", "alpha": 0.5}"#).unwrap();
        assert_eq!(
            doc.build("nu").unwrap().kind(),
            MeasureKind::AlphaStableSubordinator
        );
    }

    #[test]
    fn every_process_kind_parses() {
        let docs = [
            r#"{"kind": "jump_levy", "drift": [0], "nu": {"kind": "finite_activity", "rate": 1, "law": {"exponential": {"rates": [1]}}}}"#,
            r#"{"kind": "ornstein_uhlenbeck", "lambda": 1, "driver": {"drift": [0]}}"#,
            r#"{"kind": "pseudo_poisson", "rate": 1, "kernel": {"chain": {"states": [[0], [1]], "transition": [[0, 1], [0, 1]]}}}"#,
            r#"{"kind": "pseudo_poisson", "rate": 2, "kernel": {"translation": {"atoms": [{"point": [1], "weight": 1}]}}}"#,
            r#"{"kind": "subordinated", "inner": {"drift": [1]}, "subordinator": {"alpha": 0.5}}"#,
            r#"{"kind": "subordinated", "inner": {"drift": [1]}, "subordinator": {"drift": 1, "rate": 1, "law": {"exponential": {"rates": [1]}}}}"#,
            r#"{"kind": "preset", "name": "ou_poisson_driver"}"#,
        ];
        for d in docs {
            let doc: ProcessDoc = from_str(d).unwrap();
            assert_eq!(doc.build().unwrap().dim(), 1, "{d}");
        }
    }

    #[test]
    fn errors_name_the_key_and_line() {
        let text = "{\n \"d\": 1,\n \"drift\": [0],\n \"nu\": {\"kind\": \"finite_activity\", \"rate\": \"x\"}\n}";
        match from_str::<TripletDoc>(text) {
            Err(FellerError::Schema { path, line, .. }) => {
                assert_eq!(path, "nu.rate");
                assert_eq!(line, Some(4));
            }
            other => panic!("{other:?}"),
        }
        let nested = "{\"kind\": \"ornstein_uhlenbeck\", \"lambda\": 1,\n \"driver\": {\"drift\": [0], \"nu\": {\"kind\": \"bogus\"}}}";
        match from_str::<ProcessDoc>(nested) {
            Err(FellerError::Schema { path, line, .. }) => {
                assert_eq!(path, "driver.nu.kind");
                assert_eq!(line, Some(2));
            }
            other => panic!("{other:?}"),
        }
        let bad_rate = r#"{"d": 1, "drift": [0], "nu": {"kind": "finite_activity", "rate": -1, "atoms": [{"point": [1], "weight": 1}]}}"#;
        match from_str::<TripletDoc>(bad_rate).unwrap().build() {
            Err(FellerError::Schema { path, .. }) => assert_eq!(path, "triplet.nu.rate"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            from_str::<TripletDoc>("{"),
            Err(FellerError::Schema { .. })
        ));
        let unknown = r#"{"kind": "preset", "name": "nope"}"#;
        assert!(from_str::<ProcessDoc>(unknown).unwrap().build().is_err());
        let extra = r#"{"process": {"kind": "preset", "name": "poisson_1d"}, "extra": 1}"#;
        assert!(from_str::<SpecDoc>(extra).is_err());
        let stray = r#"{"kind": "preset", "name": "poisson_1d", "rate": 1}"#;
        match from_str::<ProcessDoc>(stray).unwrap().build() {
            Err(FellerError::Schema { path, .. }) => assert_eq!(path, "process.rate"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spec_doc_needs_exactly_one_part() {
        let both: SpecDoc = from_str(
            r#"{"process": {"kind": "preset", "name": "poisson_1d"},
                "triplet": {"d": 1, "drift": [0], "nu": {"kind": "zero", "d": 1}}}"#,
        )
        .unwrap();
        assert!(both.process().is_err());
        assert_eq!(SpecDoc::preset("diagonal_levy").dim().unwrap(), 2);
    }
}
