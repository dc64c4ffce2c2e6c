//! Bit-exact float formatting shared by every exported document.
//!
//! Floats are written in scientific notation with 17 significant digits, which
//! round-trips every finite `f64` exactly and keeps files diff-able across runs.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

/// Formats `x` with 17 significant digits (`d.dddddddddddddddde±x`).
pub fn sig17(x: f64) -> String {
    if x == 0.0 {
        // keep the sign bit out of exported files
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

/// An `f64` that serializes with [`sig17`] and deserializes from any JSON number.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Sig17(pub f64);

impl From<f64> for Sig17 {
    fn from(x: f64) -> Self {
        Sig17(x)
    }
}

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom(format!(
                "non-finite value {} cannot be exported",
                self.0
            )));
        }
        let raw = RawValue::from_string(sig17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Sig17 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Sig17)
    }
}

/// Serializes a slice of floats as a JSON array of [`Sig17`] values.
pub fn sig17_vec(xs: &[f64]) -> Vec<Sig17> {
    xs.iter().copied().map(Sig17).collect()
}
