//! Identifiers for electronic surfaces, rotational manifolds and rovibronic states.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One of the two electronic states of the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Surface {
    #[serde(rename = "X")]
    Ground,
    #[serde(rename = "A")]
    Excited,
}

impl Surface {
    pub fn other(self) -> Self {
        match self {
            Surface::Ground => Surface::Excited,
            Surface::Excited => Surface::Ground,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Surface::Ground => "X",
            Surface::Excited => "A",
        }
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Surface {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "X" | "x" | "ground" => Ok(Surface::Ground),
            "A" | "a" | "excited" => Ok(Surface::Excited),
            other => Err(Error::Invalid(format!("unknown electronic state `{other}`"))),
        }
    }
}

/// A rotational manifold `(e, J)`; also the label of a grid channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ManifoldKey {
    pub surface: Surface,
    pub j: u32,
}

impl ManifoldKey {
    pub fn new(surface: Surface, j: u32) -> Self {
        Self { surface, j }
    }

    /// True when an E1 transition links the two manifolds.
    pub fn is_dipole_linked(&self, other: &ManifoldKey) -> bool {
        self.surface != other.surface && self.j.abs_diff(other.j) == 1
    }
}

impl fmt::Display for ManifoldKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:J{}", self.surface, self.j)
    }
}

/// A rovibronic state `(e, v, J)`, written `e:v:J` in files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId {
    pub surface: Surface,
    pub v: usize,
    pub j: u32,
}

impl StateId {
    pub fn new(surface: Surface, v: usize, j: u32) -> Self {
        Self { surface, v, j }
    }

    pub fn manifold(&self) -> ManifoldKey {
        ManifoldKey::new(self.surface, self.j)
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.surface, self.v, self.j)
    }
}

impl FromStr for StateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Invalid(format!("`{s}` is not an e:v:J state label"));
        let mut parts = s.trim().split(':');
        let surface = parts.next().ok_or_else(bad)?.parse()?;
        let v = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let j = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Self { surface, v, j })
    }
}

impl Serialize for StateId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
