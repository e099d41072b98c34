//! JSON run configuration.
//!
//! ```json
//! {
//!   "particle": { "rx": 5e-8, "ry": 4e-8, "rz": 4e-8, "density": 3500, "eps_r": 5.71 },
//!   "beam": { "power": 0.1, "waist": 6e-7, "wavelength": 1.55e-6 },
//!   "gas": { "pressure": 1.333e-6, "temperature": 300 },
//!   "cavity": { "length": 5e-3, "finesse": 1e5, "wavelength": 1.54e-6 }
//! }
//! ```
//!
//! Unknown keys are rejected at every level. The optional `notes` object
//! carries free-text provenance for individual values.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::constants::TORR;
use crate::model::{validate, Cavity, GasEnvironment, Particle, TrapBeam, ValidationReport};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub particle: Particle,
    pub beam: TrapBeam,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gas: Option<GasEnvironment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<Cavity>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = validate(&self.particle, &self.beam);
        if let Some(gas) = &self.gas {
            gas.check(&mut report);
        }
        if let Some(cavity) = &self.cavity {
            cavity.check(&mut report);
        }
        report
    }

    pub fn gas(&self) -> Result<GasEnvironment> {
        self.gas
            .ok_or_else(|| Error::Config("config has no `gas` section".into()))
    }

    pub fn cavity(&self) -> Result<Cavity> {
        self.cavity
            .ok_or_else(|| Error::Config("config has no `cavity` section".into()))
    }

    /// `rx = 50 nm, ry = rz = 40 nm` diamond in a 100 mW, 600 nm waist,
    /// 1550 nm trap at 1e-8 Torr.
    pub fn torsion_reference() -> Config {
        Config {
            particle: Particle::diamond(50e-9, 40e-9),
            beam: TrapBeam::new(0.1, 600e-9, 1550e-9),
            gas: Some(GasEnvironment::air(1e-8 * TORR)),
            cavity: Some(Cavity::new(5e-3, 1e5, 1540e-9)),
            notes: default_notes(),
        }
    }

    /// `rx = 50 nm, ry = rz = 25 nm` diamond, same trap, 1540 nm cavity with
    /// finesse 1e5.
    pub fn cooling_reference() -> Config {
        Config {
            particle: Particle::diamond(50e-9, 25e-9),
            ..Self::torsion_reference()
        }
    }
}

fn default_notes() -> BTreeMap<String, String> {
    [
        (
            "particle.density",
            "bulk diamond; reproduces omega_y = 220 kHz, omega_theta = 1.26 MHz at 0.1 W",
        ),
        (
            "particle.eps_r",
            "diamond at 1550 nm (n = 2.39); reproduces chi_x = 2.05, chi_y = 1.74 at aspect 0.8",
        ),
        (
            "gas.accommodation",
            "momentum accommodation 0.9, collisions mainly inelastic",
        ),
        ("gas.molecular_mass", "air, 28.97 u"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cfg = Config::cooling_reference();
        let back = Config::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"particle":{"rx":5e-8,"ry":4e-8,"rz":4e-8},
                       "beam":{"power":0.1,"waist":6e-7,"wavelength":1.55e-6},
                       "laser":{}}"#;
        assert!(Config::from_json(text).is_err());
        let nested = r#"{"particle":{"rx":5e-8,"ry":4e-8,"rz":4e-8,"colour":1},
                       "beam":{"power":0.1,"waist":6e-7,"wavelength":1.55e-6}}"#;
        assert!(Config::from_json(nested).is_err());
    }

    #[test]
    fn defaults_fill_material() {
        let text = r#"{"particle":{"rx":5e-8,"ry":4e-8,"rz":4e-8},
                       "beam":{"power":0.1,"waist":6e-7,"wavelength":1.55e-6},
                       "gas":{"pressure":1.0,"temperature":300}}"#;
        let cfg = Config::from_json(text).unwrap();
        assert_eq!(cfg.particle.density, 3500.0);
        assert_eq!(cfg.gas.unwrap().accommodation, 0.9);
        assert!(cfg.cavity().is_err());
        assert!(cfg.validate().is_empty());
    }
}
