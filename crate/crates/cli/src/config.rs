//! Run configuration: `section.key = value` lines, `#` starts a comment.
//!
//! Missing keys keep their defaults (the benchmark loop); unknown or repeated
//! keys are errors. `dump` writes every key in a fixed order so that a dumped
//! file parses back to an identical configuration.

use std::collections::HashSet;
use std::fmt::Write as _;

use fodesim_core::{
    ClosedLoopModel, ControllerParams, InputSignal, PlantParams, Response, SimOptions, Variant,
};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value '{value}' for '{key}'")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    UnitStep,
    ScaledStep,
}

impl InputKind {
    fn as_str(&self) -> &'static str {
        match self {
            InputKind::UnitStep => "unit_step",
            InputKind::ScaledStep => "scaled_step",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
    pub td: f64,
    pub delta: f64,
    pub h: f64,
    pub t_end: f64,
    pub variant: Variant,
    pub memory: Option<usize>,
    pub divergence_bound: f64,
    pub settle_window: f64,
    pub input_kind: InputKind,
    pub amplitude: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub which: Response,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            a0: 1.0,
            a1: 0.5,
            a2: 0.8,
            alpha: 2.2,
            beta: 0.9,
            k: 20.5,
            td: 3.7343,
            delta: 1.15,
            h: 1e-3,
            t_end: 30.0,
            variant: Variant::DerivedConsistent,
            memory: None,
            divergence_bound: 1e6,
            settle_window: 0.25,
            input_kind: InputKind::UnitStep,
            amplitude: 1.0,
            omega_min: 1e-2,
            omega_max: 1e2,
            points: 200,
            which: Response::OpenLoop,
        }
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("expected 'section.key = value', got '{content}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !key.contains('.') {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("key '{key}' is not of the form section.key"),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("missing value for '{key}'"),
                });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.into(),
                });
            }
            cfg.set(key, value).map_err(|unknown| {
                if unknown {
                    ConfigError::UnknownKey {
                        line,
                        key: key.into(),
                    }
                } else {
                    ConfigError::BadValue {
                        line,
                        key: key.into(),
                        value: value.into(),
                    }
                }
            })?;
        }
        Ok(cfg)
    }

    /// `Err(true)` for an unknown key, `Err(false)` for a bad value.
    fn set(&mut self, key: &str, value: &str) -> Result<(), bool> {
        let real = |v: &str| parse_f64(v).ok_or(false);
        match key {
            "plant.a0" => self.a0 = real(value)?,
            "plant.a1" => self.a1 = real(value)?,
            "plant.a2" => self.a2 = real(value)?,
            "plant.alpha" => self.alpha = real(value)?,
            "plant.beta" => self.beta = real(value)?,
            "controller.K" => self.k = real(value)?,
            "controller.Td" => self.td = real(value)?,
            "controller.delta" => self.delta = real(value)?,
            "sim.h" => self.h = real(value)?,
            "sim.t_end" => self.t_end = real(value)?,
            "sim.variant" => self.variant = value.parse().map_err(|_| false)?,
            "sim.memory" => {
                self.memory = match value {
                    "none" => None,
                    v => Some(v.parse::<usize>().ok().filter(|&m| m >= 1).ok_or(false)?),
                }
            }
            "sim.divergence_bound" => self.divergence_bound = real(value)?,
            "sim.settle_window" => self.settle_window = real(value)?,
            "input.kind" => {
                self.input_kind = match value {
                    "unit_step" => InputKind::UnitStep,
                    "scaled_step" => InputKind::ScaledStep,
                    _ => return Err(false),
                }
            }
            "input.amplitude" => self.amplitude = real(value)?,
            "analysis.omega_min" => self.omega_min = real(value)?,
            "analysis.omega_max" => self.omega_max = real(value)?,
            "analysis.points" => self.points = value.parse().map_err(|_| false)?,
            "analysis.which" => self.which = value.parse().map_err(|_| false)?,
            _ => return Err(true),
        }
        Ok(())
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("plant.a0", self.a0.to_string());
        line("plant.a1", self.a1.to_string());
        line("plant.a2", self.a2.to_string());
        line("plant.alpha", self.alpha.to_string());
        line("plant.beta", self.beta.to_string());
        line("controller.K", self.k.to_string());
        line("controller.Td", self.td.to_string());
        line("controller.delta", self.delta.to_string());
        line("sim.h", self.h.to_string());
        line("sim.t_end", self.t_end.to_string());
        line("sim.variant", self.variant.as_str().to_string());
        line(
            "sim.memory",
            self.memory.map_or("none".to_string(), |m| m.to_string()),
        );
        line("sim.divergence_bound", self.divergence_bound.to_string());
        line("sim.settle_window", self.settle_window.to_string());
        line("input.kind", self.input_kind.as_str().to_string());
        line("input.amplitude", self.amplitude.to_string());
        line("analysis.omega_min", self.omega_min.to_string());
        line("analysis.omega_max", self.omega_max.to_string());
        line("analysis.points", self.points.to_string());
        line("analysis.which", self.which.as_str().to_string());
        out
    }

    /// Constant input level driving the loop.
    pub fn input_level(&self) -> f64 {
        match self.input_kind {
            InputKind::UnitStep => 1.0,
            InputKind::ScaledStep => self.amplitude,
        }
    }

    pub fn model(&self) -> Result<ClosedLoopModel, ConfigError> {
        let invalid = |e: fodesim_core::Error| ConfigError::Invalid(e.to_string());
        let plant =
            PlantParams::new(self.a0, self.a1, self.a2, self.alpha, self.beta).map_err(invalid)?;
        let controller = ControllerParams::new(self.k, self.td, self.delta).map_err(invalid)?;
        let input = match self.input_kind {
            InputKind::UnitStep => InputSignal::UnitStep,
            InputKind::ScaledStep => InputSignal::ScaledStep(self.amplitude),
        };
        ClosedLoopModel::new(plant, controller, input).map_err(invalid)
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            memory: self.memory,
            divergence_bound: self.divergence_bound,
        }
    }

    /// Checks everything the commands rely on before any work starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model()?;
        if self.h.is_nan() || self.h <= 0.0 {
            return Err(ConfigError::Invalid(format!(
                "sim.h must be positive, got {}",
                self.h
            )));
        }
        if self.t_end < self.h {
            return Err(ConfigError::Invalid(format!(
                "sim.t_end ({}) must be at least sim.h ({})",
                self.t_end, self.h
            )));
        }
        if self.divergence_bound.is_nan() || self.divergence_bound <= 0.0 {
            return Err(ConfigError::Invalid(
                "sim.divergence_bound must be positive".into(),
            ));
        }
        if !(self.settle_window > 0.0 && self.settle_window <= 0.5) {
            return Err(ConfigError::Invalid(
                "sim.settle_window must lie in (0, 0.5]".into(),
            ));
        }
        if !(self.omega_min > 0.0 && self.omega_max > self.omega_min) {
            return Err(ConfigError::Invalid(
                "analysis frequencies must satisfy 0 < omega_min < omega_max".into(),
            ));
        }
        if self.points < 2 {
            return Err(ConfigError::Invalid(
                "analysis.points must be at least 2".into(),
            ));
        }
        if self.input_kind == InputKind::UnitStep && self.amplitude != 1.0 {
            return Err(ConfigError::Invalid(format!(
                "input.amplitude = {} needs input.kind = scaled_step",
                self.amplitude
            )));
        }
        Ok(())
    }
}
