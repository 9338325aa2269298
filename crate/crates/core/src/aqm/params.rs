use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// What AQMRD does when `davg > 0` and `avg` has reached `mid_th`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AboveMidMode {
    /// Drop with probability one (the numbered dropping function).
    #[default]
    UnitProb,
    /// Fall back to the RED-style ramp over `[min_th, max_th)`.
    P2Fallback,
}

impl AboveMidMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AboveMidMode::UnitProb => "unit_prob",
            AboveMidMode::P2Fallback => "p2_fallback",
        }
    }
}

impl fmt::Display for AboveMidMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AboveMidMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "unit_prob" | "unit" => Ok(AboveMidMode::UnitProb),
            "p2_fallback" | "p2" => Ok(AboveMidMode::P2Fallback),
            other => Err(Error::config(
                "above_mid_mode",
                format!("expected `unit_prob` or `p2_fallback`, got `{other}`"),
            )),
        }
    }
}

/// Static gateway configuration shared by every discipline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatewayParams {
    /// EWMA weight.
    pub w_q: f64,
    /// Maximum base drop probability at the top of the ramp.
    pub max_p: f64,
    /// Lower threshold, packets.
    pub min_th: f64,
    /// Upper threshold, packets.
    pub max_th: f64,
    /// Physical queue limit in packets, excluding the packet in service.
    pub buffer_capacity: usize,
    /// `mid_th` initialization factor, `mid_th = x * min_th`.
    pub x: f64,
    /// Period of the EWMA sample clock, seconds.
    pub sample_interval: f64,
    pub above_mid_mode: AboveMidMode,
}

impl Default for GatewayParams {
    fn default() -> Self {
        Self {
            w_q: 0.002,
            max_p: 0.1,
            min_th: 16.0,
            max_th: 48.0,
            buffer_capacity: 64,
            x: 2.0,
            sample_interval: 0.01,
            above_mid_mode: AboveMidMode::UnitProb,
        }
    }
}

impl GatewayParams {
    /// Defaults with `max_th` overridden and `min_th = max_th / 3`.
    pub fn with_max_th(max_th: f64) -> Self {
        Self {
            max_th,
            min_th: max_th / 3.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w_q > 0.0 && self.w_q <= 1.0) {
            return Err(Error::config("wq", format!("{} not in (0, 1]", self.w_q)));
        }
        if !(self.max_p > 0.0 && self.max_p <= 1.0) {
            return Err(Error::config(
                "maxp",
                format!("{} not in (0, 1]", self.max_p),
            ));
        }
        if self.min_th.is_nan() || self.min_th <= 0.0 {
            return Err(Error::config(
                "min_th",
                format!("{} must be positive", self.min_th),
            ));
        }
        if self.max_th.is_nan() || self.min_th >= self.max_th {
            return Err(Error::config(
                "max_th",
                format!("max_th {} must exceed min_th {}", self.max_th, self.min_th),
            ));
        }
        if self.max_th > self.buffer_capacity as f64 {
            return Err(Error::config(
                "buffer",
                format!(
                    "buffer {} is smaller than max_th {}",
                    self.buffer_capacity, self.max_th
                ),
            ));
        }
        if !(1.0..=3.0).contains(&self.x) {
            return Err(Error::config(
                "x_factor",
                format!("{} not in [1, 3]", self.x),
            ));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::config(
                "sample_interval",
                format!("{} must be positive", self.sample_interval),
            ));
        }
        Ok(())
    }
}
