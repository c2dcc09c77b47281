use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
    Yaw,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::X, Axis::Y, Axis::Z, Axis::Yaw];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::Yaw => "yaw",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown axis {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerId {
    Red,
    Green,
    Blue,
}

impl MarkerId {
    pub const ALL: [MarkerId; 3] = [MarkerId::Red, MarkerId::Green, MarkerId::Blue];

    pub fn name(self) -> &'static str {
        match self {
            MarkerId::Red => "red",
            MarkerId::Green => "green",
            MarkerId::Blue => "blue",
        }
    }
}

impl fmt::Display for MarkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MarkerId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MarkerId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown marker {s:?}"))
    }
}

/// Position in meters, yaw in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self { x, y, z, yaw }
    }

    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
            Axis::Yaw => self.yaw,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.z, self.yaw].iter().all(|v| v.is_finite())
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }
}

/// The three draggable reference objects in the preview.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkerSet {
    pub red: Pose,
    pub green: Pose,
    pub blue: Pose,
}

impl Default for MarkerSet {
    fn default() -> Self {
        Self {
            red: Pose::new(2.0, 0.0, 0.0, 0.0),
            green: Pose::new(0.0, 2.0, 0.0, 0.0),
            blue: Pose::new(-2.0, -2.0, 0.0, 0.0),
        }
    }
}

impl MarkerSet {
    pub fn get(&self, id: MarkerId) -> &Pose {
        match id {
            MarkerId::Red => &self.red,
            MarkerId::Green => &self.green,
            MarkerId::Blue => &self.blue,
        }
    }

    /// Moves one marker. Non-finite poses are rejected.
    pub fn set(&mut self, id: MarkerId, pose: Pose) -> Result<(), String> {
        if !pose.is_finite() {
            return Err(format!("pose for marker {id} is not finite"));
        }
        match id {
            MarkerId::Red => self.red = pose,
            MarkerId::Green => self.green = pose,
            MarkerId::Blue => self.blue = pose,
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for a in Axis::ALL {
            assert_eq!(a.name().parse::<Axis>().unwrap(), a);
        }
        for m in MarkerId::ALL {
            assert_eq!(m.name().parse::<MarkerId>().unwrap(), m);
        }
        assert!("purple".parse::<MarkerId>().is_err());
    }

    #[test]
    fn set_rejects_nan() {
        let mut markers = MarkerSet::default();
        assert!(markers.set(MarkerId::Blue, Pose::new(f64::NAN, 0.0, 0.0, 0.0)).is_err());
        markers.set(MarkerId::Blue, Pose::new(1.0, 1.0, 0.5, 45.0)).unwrap();
        assert_eq!(markers.get(MarkerId::Blue).yaw, 45.0);
    }
}
