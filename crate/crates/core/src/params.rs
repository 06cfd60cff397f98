use std::fmt;

use thiserror::Error;

/// Default stop bound on the number of ticks per run.
pub const DEFAULT_MAX_TICKS: u32 = 1500;

/// The nine experimental factors, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    M,
    K,
    Up,
    Lw,
    Bc,
    Sd,
    Qty,
    Bg,
    B,
}

impl Factor {
    pub const ALL: [Factor; 9] = [
        Factor::M,
        Factor::K,
        Factor::Up,
        Factor::Lw,
        Factor::Bc,
        Factor::Sd,
        Factor::Qty,
        Factor::Bg,
        Factor::B,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Lower-case key used in config files, levels files and CSV headers.
    pub fn key(self) -> &'static str {
        match self {
            Factor::M => "m",
            Factor::K => "k",
            Factor::Up => "up",
            Factor::Lw => "lw",
            Factor::Bc => "bc",
            Factor::Sd => "sd",
            Factor::Qty => "qty",
            Factor::Bg => "bg",
            Factor::B => "b",
        }
    }

    /// Display symbol used in reports.
    pub fn symbol(self) -> &'static str {
        match self {
            Factor::M => "m",
            Factor::K => "k",
            Factor::Up => "UP",
            Factor::Lw => "LW",
            Factor::Bc => "BC",
            Factor::Sd => "SD",
            Factor::Qty => "QTY",
            Factor::Bg => "BG",
            Factor::B => "B",
        }
    }

    pub fn from_key(key: &str) -> Option<Factor> {
        Factor::ALL.into_iter().find(|f| f.key() == key)
    }

    /// Whether the factor only admits whole numbers.
    pub fn is_integer(self) -> bool {
        matches!(self, Factor::M | Factor::K | Factor::Qty)
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} must be {constraint} (got {value})")]
    OutOfRange {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("lw must not exceed up (lw={lw}, up={up})")]
    ThresholdOrder { lw: f64, up: f64 },
    #[error("{name} must be a whole number (got {value})")]
    NotInteger { name: &'static str, value: f64 },
}

/// One fully resolved simulation configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Predictor window length in ticks.
    pub m: u32,
    /// Predictors per drone.
    pub k: u32,
    /// Upper SOC threshold (%); above it a drone never attempts to recharge.
    pub up: f64,
    /// Lower SOC threshold (%); below it a drone always attempts to recharge.
    pub lw: f64,
    /// Mean SOC consumption per tick (%).
    pub bc: f64,
    /// Standard deviation of consumption (%).
    pub sd: f64,
    /// Initial drone count.
    pub qty: u32,
    /// SOC gained per effective recharge (%).
    pub bg: f64,
    /// Station capacity as a percentage of the alive drones.
    pub b: f64,
    pub seed: u64,
    pub max_ticks: u32,
}

impl Default for SimParams {
    /// All factors at their low level.
    fn default() -> Self {
        Self {
            m: 2,
            k: 2,
            up: 70.0,
            lw: 25.0,
            bc: 10.0,
            sd: 0.0,
            qty: 50,
            bg: 50.0,
            b: 30.0,
            seed: 0,
            max_ticks: DEFAULT_MAX_TICKS,
        }
    }
}

fn percent(name: &'static str, value: f64) -> Result<(), ParamError> {
    if (0.0..=100.0).contains(&value) {
        Ok(())
    } else {
        Err(ParamError::OutOfRange {
            name,
            constraint: "within [0, 100]",
            value,
        })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<(), ParamError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ParamError::OutOfRange {
            name,
            constraint: ">= 0",
            value,
        })
    }
}

fn at_least_one(name: &'static str, value: u32) -> Result<(), ParamError> {
    if value >= 1 {
        Ok(())
    } else {
        Err(ParamError::OutOfRange {
            name,
            constraint: ">= 1",
            value: value.into(),
        })
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        at_least_one("m", self.m)?;
        at_least_one("k", self.k)?;
        at_least_one("qty", self.qty)?;
        at_least_one("max_ticks", self.max_ticks)?;
        percent("up", self.up)?;
        percent("lw", self.lw)?;
        if self.lw > self.up {
            return Err(ParamError::ThresholdOrder {
                lw: self.lw,
                up: self.up,
            });
        }
        non_negative("bc", self.bc)?;
        non_negative("sd", self.sd)?;
        percent("bg", self.bg)?;
        percent("b", self.b)?;
        Ok(())
    }

    pub fn factor(&self, factor: Factor) -> f64 {
        match factor {
            Factor::M => self.m.into(),
            Factor::K => self.k.into(),
            Factor::Up => self.up,
            Factor::Lw => self.lw,
            Factor::Bc => self.bc,
            Factor::Sd => self.sd,
            Factor::Qty => self.qty.into(),
            Factor::Bg => self.bg,
            Factor::B => self.b,
        }
    }

    /// Sets one factor, rejecting fractional values for integer factors.
    pub fn set_factor(&mut self, factor: Factor, value: f64) -> Result<(), ParamError> {
        if factor.is_integer() {
            let whole = to_u32(factor.key(), value)?;
            match factor {
                Factor::M => self.m = whole,
                Factor::K => self.k = whole,
                _ => self.qty = whole,
            }
            return Ok(());
        }
        match factor {
            Factor::Up => self.up = value,
            Factor::Lw => self.lw = value,
            Factor::Bc => self.bc = value,
            Factor::Sd => self.sd = value,
            Factor::Bg => self.bg = value,
            Factor::B => self.b = value,
            Factor::M | Factor::K | Factor::Qty => unreachable!(),
        }
        Ok(())
    }
}

pub(crate) fn to_u32(name: &'static str, value: f64) -> Result<u32, ParamError> {
    if value.fract() != 0.0 || !value.is_finite() {
        return Err(ParamError::NotInteger { name, value });
    }
    if !(0.0..=f64::from(u32::MAX)).contains(&value) {
        return Err(ParamError::OutOfRange {
            name,
            constraint: "a non-negative 32-bit integer",
            value,
        });
    }
    Ok(value as u32)
}
