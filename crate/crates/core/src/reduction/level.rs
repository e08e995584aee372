use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A natural number or ∞, ordered with ∞ on top and `∞ + 1 = ∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Finite(u32),
    Infinite,
}

impl Level {
    pub const ZERO: Level = Level::Finite(0);

    pub fn succ(self) -> Level {
        match self {
            Level::Finite(k) => Level::Finite(k + 1),
            Level::Infinite => Level::Infinite,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Level::Finite(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Level::Finite(k) => Some(k),
            Level::Infinite => None,
        }
    }
}

impl From<u32> for Level {
    fn from(k: u32) -> Self {
        Level::Finite(k)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Finite(k) => write!(f, "{k}"),
            Level::Infinite => f.write_str("∞"),
        }
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "∞" | "inf" | "infinity" => Ok(Level::Infinite),
            k => k.parse().map(Level::Finite).map_err(|_| format!("invalid level `{s}`")),
        }
    }
}

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Level::Finite(k) => serializer.serialize_u32(*k),
            Level::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(k) => Ok(Level::Finite(k)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        assert_eq!(Level::Infinite.succ(), Level::Infinite);
        assert_eq!(Level::Finite(2).succ(), Level::Finite(3));
        assert_eq!(Level::Finite(7).min(Level::Infinite), Level::Finite(7));
        assert!(Level::Finite(u32::MAX) < Level::Infinite);
    }

    #[test]
    fn json() {
        let s = serde_json::to_string(&[Level::Finite(1), Level::Infinite]).unwrap();
        assert_eq!(s, "[1,\"inf\"]");
        let back: Vec<Level> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![Level::Finite(1), Level::Infinite]);
    }
}
