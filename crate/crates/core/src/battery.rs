//! State-of-charge arithmetic.

use crate::rng::RngStream;

/// Full charge, and the ceiling for every SOC update.
pub const FULL_CHARGE: f64 = 100.0;

/// Battery level in percent. A drone is alive while the value is positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SocValue(pub f64);

impl SocValue {
    pub const FULL: SocValue = SocValue(FULL_CHARGE);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_alive(self) -> bool {
        self.0 > 0.0
    }
}

/// One tick of work: subtracts `max(0, Normal(bc, sd))`.
///
/// The result may be zero or negative; the caller decides what death means.
pub fn consume_battery(soc: SocValue, bc: f64, sd: f64, rng: &mut RngStream) -> SocValue {
    let draw = rng.normal(bc, sd).max(0.0);
    SocValue(soc.0 - draw)
}

/// One hot-swap: adds `bg`, capped at full charge.
pub fn recharge(soc: SocValue, bg: f64) -> SocValue {
    SocValue((soc.0 + bg).min(FULL_CHARGE))
}
