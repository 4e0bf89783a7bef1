//! JSON scenario files.
//!
//! Each top-level section is decoded on its own so that unknown keys and
//! missing fields are reported with the section they belong to.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::diagnostics::QuasiEnergyConfig;
use crate::error::{Error, Result};
use crate::grid::{Grid, InitialData};
use crate::model::{
    make_caf, make_go_or_grow, CafParams, CafVariant, CheckBox, GoGrowParams, HypothesisBudget,
    LowerEnvelope, Model, ModelParams, Point,
};
use crate::solver::{Scenario, SolverConfig};

pub const CAF_INDIRECT: &str = "caf_indirect";
pub const CAF_DIRECT: &str = "caf_direct";
pub const GO_OR_GROW: &str = "go_or_grow";
pub const MODELS: [&str; 3] = [CAF_INDIRECT, CAF_DIRECT, GO_OR_GROW];

const REQUIRED: [&str; 4] = ["model", "model_params", "grid", "solver"];
const KNOWN: [&str; 10] = [
    "model",
    "model_params",
    "caf",
    "go_grow",
    "grid",
    "initial",
    "solver",
    "quasi_energy",
    "hypothesis_budget",
    "output_dir",
];

/// Smallest accepted cell count per axis and in total.
pub const MIN_CELLS_PER_AXIS: usize = 4;
pub const MIN_CELLS: usize = 16;

/// Transport coefficients. `alpha` and `beta` follow from the model rates;
/// when given they must agree with that mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParamsConfig {
    pub chi: f64,
    pub xi: f64,
    #[serde(rename = "Du")]
    pub du: f64,
    #[serde(rename = "Dh")]
    pub dh: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CafConfig {
    pub mu: f64,
    pub eta: f64,
    pub alpha_h: f64,
    pub beta_v: f64,
    pub gamma_w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<CafVariant>,
}

fn unit_length() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "Lx", default = "unit_length")]
    pub lx: f64,
    #[serde(rename = "Ly", default = "unit_length")]
    pub ly: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasiEnergySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub c_phi: f64,
    pub C_phi: f64,
    pub C_Phi: f64,
    pub gamma_psi: f64,
    pub Cf: f64,
    pub Cg: f64,
    pub Cpsi: f64,
    /// Upper corner `[U, V, W, H]`.
    #[serde(rename = "box")]
    pub upper: [f64; 4],
    pub samples: usize,
    /// Coefficients of the polynomial lower envelope `f0`, constant term first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<Vec<f64>>,
}

impl BudgetConfig {
    pub fn budget(&self) -> HypothesisBudget {
        HypothesisBudget {
            phi_decay: self.c_phi,
            phi_bound: self.C_phi,
            source_bound: self.C_Phi,
            psi_exponent: self.gamma_psi,
            f_bound: self.Cf,
            g_bound: self.Cg,
            psi_bound: self.Cpsi,
            f0: self
                .f0
                .clone()
                .map(LowerEnvelope::Polynomial)
                .unwrap_or_default(),
        }
    }

    pub fn check_box(&self) -> CheckBox {
        let [u, v, w, h] = self.upper;
        CheckBox {
            upper: Point::new(u, v, w, h),
            samples: self.samples,
        }
    }
}

/// A validated scenario file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub model: String,
    pub model_params: ModelParamsConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caf: Option<CafConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub go_grow: Option<GoGrowParams>,
    pub grid: GridConfig,
    pub initial: InitialData,
    pub solver: SolverConfig,
    pub quasi_energy: QuasiEnergySection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypothesis_budget: Option<BudgetConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Maps a serde failure inside `section` to a config error naming the key.
fn section_error(section: &str, err: serde_json::Error) -> Error {
    let msg = err.to_string();
    let quoted = |prefix: &str| {
        msg.strip_prefix(prefix)
            .and_then(|rest| rest.split('`').next())
            .map(str::to_string)
    };
    if let Some(key) = quoted("unknown field `") {
        Error::UnknownKey {
            path: section.to_string(),
            key,
        }
    } else if let Some(key) = quoted("missing field `") {
        Error::MissingFields {
            fields: vec![format!("{section}.{key}")],
        }
    } else {
        Error::config(section, msg)
    }
}

fn section<T: DeserializeOwned>(doc: &Map<String, Value>, key: &str) -> Result<Option<T>> {
    match doc.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| section_error(key, e)),
    }
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_value(&serde_json::from_str(text)?)
    }

    pub fn from_value(doc: &Value) -> Result<Self> {
        let Value::Object(doc) = doc else {
            return Err(Error::config("", "scenario must be a JSON object"));
        };
        if let Some(key) = doc.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(Error::UnknownKey {
                path: String::new(),
                key: key.clone(),
            });
        }
        let mut missing: Vec<String> = REQUIRED
            .iter()
            .filter(|k| doc.get(**k).is_none_or(Value::is_null))
            .map(|k| k.to_string())
            .collect();
        let model: Option<String> = section(doc, "model")?;
        match model.as_deref() {
            Some(CAF_INDIRECT | CAF_DIRECT) if doc.get("caf").is_none() => {
                missing.push("caf".into())
            }
            Some(GO_OR_GROW) if doc.get("go_grow").is_none() => missing.push("go_grow".into()),
            _ => {}
        }
        if !missing.is_empty() {
            return Err(Error::MissingFields { fields: missing });
        }

        let cfg = Self {
            model: model.expect("checked above"),
            model_params: section(doc, "model_params")?.expect("checked above"),
            caf: section(doc, "caf")?,
            go_grow: section(doc, "go_grow")?,
            grid: section(doc, "grid")?.expect("checked above"),
            initial: section(doc, "initial")?.unwrap_or_default(),
            solver: section(doc, "solver")?.expect("checked above"),
            quasi_energy: section(doc, "quasi_energy")?.unwrap_or_default(),
            hypothesis_budget: section(doc, "hypothesis_budget")?,
            output_dir: section(doc, "output_dir")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("plain data")
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        self.grid()?;
        self.initial.validate()?;
        self.solver.validate()?;
        if let Some(b) = &self.hypothesis_budget {
            b.budget().validate()?;
            if b.samples < 2 {
                return Err(Error::config(
                    "hypothesis_budget.samples",
                    "need at least 2 samples per axis",
                ));
            }
            if !b.upper.iter().all(|c| c.is_finite() && *c > 0.0) {
                return Err(Error::config(
                    "hypothesis_budget.box",
                    "box corners must be positive",
                ));
            }
        }
        self.quasi_energy_config()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        let GridConfig { nx, ny, lx, ly } = self.grid;
        if nx < MIN_CELLS_PER_AXIS || ny < MIN_CELLS_PER_AXIS || nx * ny < MIN_CELLS {
            return Err(Error::config(
                "grid",
                format!("need at least {MIN_CELLS_PER_AXIS} cells per axis and {MIN_CELLS} in total, got {nx}x{ny}"),
            ));
        }
        Grid::new(nx, ny, lx, ly)
    }

    fn caf_params(&self, variant: CafVariant) -> Result<CafParams> {
        let caf = self.caf.ok_or_else(|| Error::MissingFields {
            fields: vec!["caf".into()],
        })?;
        if let Some(v) = caf.variant {
            if v != variant {
                return Err(Error::config(
                    "caf.variant",
                    format!("{v:?} contradicts model `{}`", self.model),
                ));
            }
        }
        Ok(CafParams {
            mu: caf.mu,
            eta: caf.eta,
            alpha_h: caf.alpha_h,
            beta_v: caf.beta_v,
            gamma_w: caf.gamma_w,
            variant,
        })
    }

    pub fn model(&self) -> Result<Model> {
        let mp = &self.model_params;
        let base = ModelParams {
            chi: mp.chi,
            xi: mp.xi,
            alpha: 0.0,
            beta: 0.0,
            du: mp.du,
            dh: mp.dh,
        };
        let unused =
            |section: &str| Error::config(section, format!("not used by model `{}`", self.model));
        let model = match self.model.as_str() {
            CAF_INDIRECT | CAF_DIRECT => {
                if self.go_grow.is_some() {
                    return Err(unused("go_grow"));
                }
                let variant = if self.model == CAF_DIRECT {
                    CafVariant::Direct
                } else {
                    CafVariant::Indirect
                };
                make_caf(base, self.caf_params(variant)?)?
            }
            GO_OR_GROW => {
                if self.caf.is_some() {
                    return Err(unused("caf"));
                }
                make_go_or_grow(base, self.go_grow.expect("checked at parse"))?
            }
            other => {
                return Err(Error::config(
                    "model",
                    format!(
                        "unknown model `{other}`; expected one of {}",
                        MODELS.join(", ")
                    ),
                ))
            }
        };
        for (name, given, mapped) in [
            ("alpha", mp.alpha, model.params.alpha),
            ("beta", mp.beta, model.params.beta),
        ] {
            if let Some(given) = given {
                if (given - mapped).abs() > 1e-12 * mapped.abs().max(1.0) {
                    return Err(Error::config(
                        format!("model_params.{name}"),
                        format!(
                            "{given} disagrees with the value {mapped} fixed by model `{}`",
                            self.model
                        ),
                    ));
                }
            }
        }
        Ok(model)
    }

    pub fn quasi_energy_config(&self) -> Result<QuasiEnergyConfig> {
        let model = self.model()?;
        let budget = self.hypothesis_budget.as_ref().map(BudgetConfig::budget);
        let mut qc = QuasiEnergyConfig::new(
            &model.params,
            self.quasi_energy.a,
            self.quasi_energy.b,
            budget.as_ref(),
        )?;
        qc.v_floor = self.solver.v_floor;
        Ok(qc)
    }

    pub fn scenario(&self, name: &str) -> Result<Scenario> {
        Ok(Scenario {
            name: name.to_string(),
            model: self.model()?,
            grid: self.grid()?,
            initial: self.initial,
            solver: self.solver,
            quasi_energy: self.quasi_energy_config()?,
        })
    }

    /// The same scenario with the signal produced by the tumor cells
    /// directly: no producer field, `β_v = γ_w = 0`.
    pub fn direct_counterpart(&self) -> Result<Self> {
        let caf = match (self.model.as_str(), self.caf) {
            (CAF_INDIRECT | CAF_DIRECT, Some(caf)) => caf,
            _ => {
                return Err(Error::config(
                    "model",
                    format!("`{}` has no direct-production variant", self.model),
                ))
            }
        };
        let mut out = self.clone();
        out.model = CAF_DIRECT.into();
        out.caf = Some(CafConfig {
            beta_v: 0.0,
            gamma_w: 0.0,
            variant: Some(CafVariant::Direct),
            ..caf
        });
        out.model_params.alpha = None;
        out.model_params.beta = None;
        out.validate()?;
        Ok(out)
    }

    /// The indirect-production form of a CAF scenario.
    pub fn indirect_counterpart(&self) -> Result<Self> {
        match (self.model.as_str(), self.caf) {
            (CAF_INDIRECT, Some(_)) => Ok(self.clone()),
            (CAF_DIRECT, Some(caf)) => {
                let mut out = self.clone();
                out.model = CAF_INDIRECT.into();
                out.caf = Some(CafConfig {
                    variant: Some(CafVariant::Indirect),
                    ..caf
                });
                out.model_params.alpha = None;
                out.model_params.beta = None;
                out.validate()?;
                Ok(out)
            }
            _ => Err(Error::config(
                "model",
                format!("`{}` has no indirect-production variant", self.model),
            )),
        }
    }
}

/// Sets the dotted `path` inside a JSON document, creating objects as needed.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Input(format!("malformed parameter path `{path}`")));
    }
    for (k, part) in parts.iter().enumerate() {
        let Value::Object(map) = node else {
            return Err(Error::Input(format!(
                "`{}` is not an object",
                parts[..k].join(".")
            )));
        };
        if k + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("non-empty path")
}

pub const PAPER_S6_JSON: &str = include_str!("../../presets/paper_s6.json");

/// The shipped reference scenario.
pub fn paper_s6() -> ScenarioConfig {
    ScenarioConfig::from_json_str(PAPER_S6_JSON).expect("shipped preset is valid")
}
