//! Numerical tolerances.
//!
//! Every comparison that the exact theory states over algebraic numbers is
//! carried out in double precision against one of these bands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Hermiticity, max-entry deviation from the adjoint.
    pub herm: f64,
    /// Most negative eigenvalue accepted for a positive semidefinite matrix.
    pub psd: f64,
    /// Partial-trace coherence between consecutive levels.
    pub coh: f64,
    /// Deviation of a trace (or sum of weights) from one.
    pub trace: f64,
    /// Projection idempotence, max |P^2 - P|.
    pub proj: f64,
    /// Range inclusion between consecutive projector levels.
    pub nest: f64,
    /// Slack on mass certificates of tests.
    pub mass: f64,
    /// Half-open band used for the strict `theta > lambda` greedy test.
    pub eps_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: 1e-9,
            psd: 1e-9,
            coh: 1e-9,
            trace: 1e-10,
            proj: 1e-9,
            nest: 1e-8,
            mass: 1e-9,
            eps_max: 1e-10,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 8] =
        ["herm", "psd", "coh", "trace", "proj", "nest", "mass", "eps_max"];

    /// Overrides one tolerance by name (`tol_` prefixes are accepted).
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance {key} must be a nonnegative finite number, got {value}"
            )));
        }
        let key = key.strip_prefix("tol_").unwrap_or(key);
        let slot = match key {
            "herm" => &mut self.herm,
            "psd" => &mut self.psd,
            "coh" => &mut self.coh,
            "trace" => &mut self.trace,
            "proj" => &mut self.proj,
            "nest" => &mut self.nest,
            "mass" => &mut self.mass,
            "eps_max" => &mut self.eps_max,
            _ => return Err(Error::InvalidParameter(format!("unknown tolerance {key:?}"))),
        };
        *slot = value;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_by_name() {
        let mut t = Tolerances::default();
        t.set("tol_nest", 1e-6).unwrap();
        t.set("eps_max", 0.0).unwrap();
        assert_eq!(t.nest, 1e-6);
        assert_eq!(t.eps_max, 0.0);
        assert!(t.set("bogus", 1.0).is_err());
        assert!(t.set("herm", -1.0).is_err());
    }
}
