//! Parameter resolution: preset defaults, then config file, then flags.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spinotto::lindblad::CouplingMode;
use spinotto::otto::{CycleConfig, ThermalStroke};

use crate::CliError;

/// Scalar knobs shared by every preset; every field can come from the
/// config file or a command-line flag.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub j: Option<f64>,
    pub lambda_i: Option<f64>,
    pub lambda_f: Option<f64>,
    pub t_c: Option<f64>,
    pub t_h: Option<f64>,
    pub gamma: Option<f64>,
    pub omega: Option<f64>,
    pub t_th: Option<f64>,
    pub t_u: Option<f64>,
    pub gamma_bar: Option<f64>,
    pub mode: Option<String>,
    pub thermalization_tol: Option<f64>,
    pub limit_cycle_tol: Option<f64>,
    pub unitary_steps: Option<usize>,
}

impl Overrides {
    pub fn from_config_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {path:?}: {e}")))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid config {path:?}: {e}")))
    }

    /// Later values win.
    pub fn layered(base: Self, over: &Self) -> Self {
        Self {
            j: over.j.or(base.j),
            lambda_i: over.lambda_i.or(base.lambda_i),
            lambda_f: over.lambda_f.or(base.lambda_f),
            t_c: over.t_c.or(base.t_c),
            t_h: over.t_h.or(base.t_h),
            gamma: over.gamma.or(base.gamma),
            omega: over.omega.or(base.omega),
            t_th: over.t_th.or(base.t_th),
            t_u: over.t_u.or(base.t_u),
            gamma_bar: over.gamma_bar.or(base.gamma_bar),
            mode: over.mode.clone().or(base.mode),
            thermalization_tol: over.thermalization_tol.or(base.thermalization_tol),
            limit_cycle_tol: over.limit_cycle_tol.or(base.limit_cycle_tol),
            unitary_steps: over.unitary_steps.or(base.unitary_steps),
        }
    }

    /// Set one field by name (grid-file entries use this).
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), CliError> {
        match key {
            "j" => self.j = Some(value),
            "lambda_i" => self.lambda_i = Some(value),
            "lambda_f" => self.lambda_f = Some(value),
            "t_c" => self.t_c = Some(value),
            "t_h" => self.t_h = Some(value),
            "gamma" => self.gamma = Some(value),
            "omega" => self.omega = Some(value),
            "t_th" => self.t_th = Some(value),
            "t_u" => self.t_u = Some(value),
            "gamma_bar" => self.gamma_bar = Some(value),
            "thermalization_tol" => self.thermalization_tol = Some(value),
            "limit_cycle_tol" => self.limit_cycle_tol = Some(value),
            "unitary_steps" => self.unitary_steps = Some(value as usize),
            other => {
                return Err(CliError::Validation(format!(
                    "unknown grid parameter '{other}'"
                )))
            }
        }
        Ok(())
    }
}

/// Fully resolved cycle parameters for one preset run.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub j: f64,
    pub lambda_i: f64,
    pub lambda_f: f64,
    pub t_c: f64,
    pub t_h: f64,
    pub gamma: f64,
    pub omega: f64,
    pub t_th: Option<f64>,
    pub t_u: f64,
    pub gamma_bar: f64,
    pub mode: String,
    pub thermalization_tol: f64,
    pub limit_cycle_tol: f64,
    pub unitary_steps: usize,
}

impl Resolved {
    /// Figure-wide defaults: lambda 1 -> 3, T_c = 1, T_h = 8, gamma = 0.1,
    /// omega = 1.
    pub fn standard(j: f64) -> Self {
        Self {
            j,
            lambda_i: 1.0,
            lambda_f: 3.0,
            t_c: 1.0,
            t_h: 8.0,
            gamma: 0.1,
            omega: 1.0,
            t_th: None,
            t_u: 0.0,
            gamma_bar: 0.0,
            mode: "collective-coherent".into(),
            thermalization_tol: 1e-5,
            limit_cycle_tol: 1e-10,
            unitary_steps: 2000,
        }
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        if let Some(v) = o.j {
            self.j = v;
        }
        if let Some(v) = o.lambda_i {
            self.lambda_i = v;
        }
        if let Some(v) = o.lambda_f {
            self.lambda_f = v;
        }
        if let Some(v) = o.t_c {
            self.t_c = v;
        }
        if let Some(v) = o.t_h {
            self.t_h = v;
        }
        if let Some(v) = o.gamma {
            self.gamma = v;
        }
        if let Some(v) = o.omega {
            self.omega = v;
        }
        if let Some(v) = o.t_th {
            self.t_th = Some(v);
        }
        if let Some(v) = o.t_u {
            self.t_u = v;
        }
        if let Some(v) = o.gamma_bar {
            self.gamma_bar = v;
        }
        if let Some(v) = &o.mode {
            self.mode = v.clone();
        }
        if let Some(v) = o.thermalization_tol {
            self.thermalization_tol = v;
        }
        if let Some(v) = o.limit_cycle_tol {
            self.limit_cycle_tol = v;
        }
        if let Some(v) = o.unitary_steps {
            self.unitary_steps = v;
        }
        self
    }

    pub fn coupling_mode(&self) -> Result<CouplingMode, CliError> {
        match self.mode.as_str() {
            "collective-coherent" => Ok(CouplingMode::CollectiveCoherent),
            "independent-incoherent" => Ok(CouplingMode::IndependentIncoherent),
            other => Err(CliError::Validation(format!(
                "unknown coupling mode '{other}' (use collective-coherent or independent-incoherent)"
            ))),
        }
    }

    /// Build a `CycleConfig`; perfect thermal strokes unless `t_th` is set.
    pub fn cycle_config(&self, record_thermal_trajectory: bool) -> Result<CycleConfig, CliError> {
        let mut cfg = CycleConfig::new(
            self.j,
            self.lambda_i,
            self.lambda_f,
            self.t_c,
            self.t_h,
            self.gamma,
        );
        cfg.omega = self.omega;
        cfg.thermal = match self.t_th {
            Some(t) => ThermalStroke::Duration(t),
            None => ThermalStroke::Full,
        };
        cfg.t_u = self.t_u;
        cfg.gamma_bar = self.gamma_bar;
        cfg.mode = self.coupling_mode()?;
        cfg.thermalization_tol = self.thermalization_tol;
        cfg.limit_cycle_tol = self.limit_cycle_tol;
        cfg.unitary_steps = self.unitary_steps;
        cfg.record_thermal_trajectory = record_thermal_trajectory;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Key-value echo for the manifest (deterministic ordering).
    pub fn echo(&self) -> BTreeMap<String, String> {
        let json = serde_json::to_value(self).expect("serializable");
        json.as_object()
            .expect("object")
            .iter()
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect()
    }
}
