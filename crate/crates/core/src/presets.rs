//! The two built-in scenarios.
//!
//! * `three-vector`: E at 0° (`E`) and 90° (`E'`), P at 45° (`P`).
//! * `penrose-four-vector`: the above plus P at −45° (`P'`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inequalities::{
    check_penrose, check_star, check_star_star, CoincidenceStats, InequalityReport,
};
use crate::lhv::Scenario;
use crate::quantum::{MeasurementSetting, Side};

pub const E: &str = "E";
pub const E_PRIME: &str = "E'";
pub const P: &str = "P";
pub const P_PRIME: &str = "P'";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioPreset {
    ThreeVector,
    PenroseFourVector,
}

impl ScenarioPreset {
    pub const ALL: [ScenarioPreset; 2] = [
        ScenarioPreset::ThreeVector,
        ScenarioPreset::PenroseFourVector,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioPreset::ThreeVector => "three-vector",
            ScenarioPreset::PenroseFourVector => "penrose-four-vector",
        }
    }

    pub fn scenario(self) -> Scenario {
        let mut settings = vec![
            MeasurementSetting::degrees(Side::E, E, 0.0).unwrap(),
            MeasurementSetting::degrees(Side::E, E_PRIME, 90.0).unwrap(),
            MeasurementSetting::degrees(Side::P, P, 45.0).unwrap(),
        ];
        if self == ScenarioPreset::PenroseFourVector {
            settings.push(MeasurementSetting::degrees(Side::P, P_PRIME, -45.0).unwrap());
        }
        Scenario::new(settings).expect("preset scenarios are valid")
    }

    /// Every inequality the preset's observables support: (*) and (**) on
    /// `{P, E, E'}`, plus the four-term bound when `P'` is present.
    pub fn inequalities(self, stats: &CoincidenceStats) -> Result<Vec<InequalityReport>> {
        let mut out = vec![
            check_star(stats, P, E, E_PRIME)?,
            check_star_star(stats, P, E, E_PRIME)?,
        ];
        if self == ScenarioPreset::PenroseFourVector {
            out.push(check_penrose(stats, E, E_PRIME, P, P_PRIME)?);
        }
        Ok(out)
    }
}

impl fmt::Display for ScenarioPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioPreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidScenario(format!("unknown preset `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_angles() {
        let sc = ScenarioPreset::PenroseFourVector.scenario();
        let deg: Vec<f64> = sc
            .settings()
            .iter()
            .map(|s| s.direction.degrees())
            .collect();
        let expected = [0.0, 90.0, 45.0, 315.0];
        for (a, b) in deg.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(ScenarioPreset::ThreeVector.scenario().len(), 3);
        assert_eq!(
            "three-vector".parse::<ScenarioPreset>().unwrap(),
            ScenarioPreset::ThreeVector
        );
        assert!("two-vector".parse::<ScenarioPreset>().is_err());
    }

    #[test]
    fn qm_values_on_presets() {
        let st = CoincidenceStats::from_qm(&ScenarioPreset::PenroseFourVector.scenario());
        let pa45 = 0.146_446_609_406_726_24;
        for (x, y) in [(P, E), (P, E_PRIME), (E, P_PRIME)] {
            assert!((st.get(x, y).unwrap() - pa45).abs() < 1e-12);
        }
        assert!((st.get(E, E_PRIME).unwrap() - 0.5).abs() < 1e-12);
        assert!((st.get(E_PRIME, P_PRIME).unwrap() - 0.853_553_390_593_273_8).abs() < 1e-12);
        let reps = ScenarioPreset::PenroseFourVector.inequalities(&st).unwrap();
        assert_eq!(reps.len(), 3);
        assert!(reps.iter().all(|r| !r.satisfied));
    }
}
