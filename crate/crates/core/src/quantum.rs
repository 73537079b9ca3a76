//! Closed-form spin-½ statistics for single particles and singlet pairs.
//!
//! All directions lie in one measurement plane, so every probability here is
//! a function of a single angular separation.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A unit direction in the measurement plane, stored as an angle in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Direction(f64);

impl Direction {
    pub fn from_radians(angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::NonFiniteAngle(angle));
        }
        let mut a = angle.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if a >= TAU {
            a = 0.0;
        }
        Ok(Direction(a))
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        if !deg.is_finite() {
            return Err(Error::NonFiniteAngle(deg));
        }
        Self::from_radians(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    /// Rotates by `delta` radians, renormalizing.
    pub fn rotated(self, delta: f64) -> Result<Self> {
        Self::from_radians(self.0 + delta)
    }

    /// The opposite direction.
    pub fn flipped(self) -> Self {
        Direction::from_radians(self.0 + PI).expect("finite")
    }

    /// Unsigned angular separation in `[0, π]`.
    pub fn separation(self, other: Direction) -> f64 {
        let d = (self.0 - other.0).abs();
        if d > PI {
            TAU - d
        } else {
            d
        }
    }
}

impl TryFrom<f64> for Direction {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Direction::from_radians(value)
    }
}

impl From<Direction> for f64 {
    fn from(d: Direction) -> f64 {
        d.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    E,
    P,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::E => f.write_str("E"),
            Side::P => f.write_str("P"),
        }
    }
}

/// A named direction that one measurement tool may be set to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub side: Side,
    pub label: String,
    #[serde(rename = "angle_rad")]
    pub direction: Direction,
}

impl MeasurementSetting {
    pub fn new(side: Side, label: impl Into<String>, direction: Direction) -> Self {
        MeasurementSetting {
            side,
            label: label.into(),
            direction,
        }
    }

    pub fn degrees(side: Side, label: impl Into<String>, deg: f64) -> Result<Self> {
        Ok(Self::new(side, label, Direction::from_degrees(deg)?))
    }
}

/// A normalized spin projection, `+1` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Outcome {
    Up,
    Down,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Up => 1,
            Outcome::Down => -1,
        }
    }

    pub fn from_value(v: i8) -> Option<Self> {
        match v {
            1 => Some(Outcome::Up),
            -1 => Some(Outcome::Down),
            _ => None,
        }
    }
}

impl std::ops::Neg for Outcome {
    type Output = Outcome;

    fn neg(self) -> Outcome {
        match self {
            Outcome::Up => Outcome::Down,
            Outcome::Down => Outcome::Up,
        }
    }
}

impl TryFrom<i8> for Outcome {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        Outcome::from_value(v).ok_or_else(|| format!("outcome must be +1 or -1, got {v}"))
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        o.value()
    }
}

/// Probability that two measurements on the same spin-½ preparation, `theta`
/// apart, give equal results: `cos²(θ/2)`.
pub fn malus_coincidence(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::NonFiniteAngle(theta));
    }
    let c = (theta / 2.0).cos();
    Ok(c * c)
}

/// Probability that the two halves of a singlet pair give equal results when
/// measured along `a` and `b`: `½(1 − cos∠(a,b))`.
pub fn singlet_coincidence(a: Direction, b: Direction) -> f64 {
    0.5 * (1.0 - a.separation(b).cos())
}

/// `⟨E·P⟩` for a singlet pair, `−cos∠(a,b)`.
pub fn singlet_correlation(a: Direction, b: Direction) -> f64 {
    2.0 * singlet_coincidence(a, b) - 1.0
}

/// The pure single-particle state left on the P side once E has measured.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedState {
    pub direction: Direction,
    pub spin: Outcome,
}

impl ReducedState {
    /// Probability that a measurement along `b` returns `outcome`.
    pub fn outcome_probability(&self, b: Direction, outcome: Outcome) -> f64 {
        let agree = malus_coincidence(self.direction.separation(b)).expect("separation is finite");
        if outcome == self.spin {
            agree
        } else {
            1.0 - agree
        }
    }
}

/// Collapse of the singlet after E records `outcome` along `measured`: the
/// partner carries the opposite spin along the same direction.
pub fn reduce_after_e(measured: Direction, outcome: Outcome) -> ReducedState {
    ReducedState {
        direction: measured,
        spin: -outcome,
    }
}
