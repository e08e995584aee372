use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// One step down a term: into an abstraction body, or into the function or
/// argument of an application.
///
/// The derived order (`Body < Left < Right`) makes the lexicographic order on
/// paths coincide with leftmost-outermost (pre-order) traversal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    Body,
    Left,
    Right,
}

impl Dir {
    pub fn tag(self) -> char {
        match self {
            Dir::Body => 'B',
            Dir::Left => 'L',
            Dir::Right => 'R',
        }
    }
}

/// Path from the root to a subterm.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(Vec<Dir>);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid position `{text}`: {reason}")]
pub struct PositionError {
    pub text: String,
    pub reason: String,
}

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn from_dirs(dirs: Vec<Dir>) -> Self {
        Position(dirs)
    }

    pub fn dirs(&self) -> &[Dir] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `d` followed by this path.
    pub fn under(&self, d: Dir) -> Position {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(d);
        v.extend_from_slice(&self.0);
        Position(v)
    }

    pub fn child(&self, d: Dir) -> Position {
        let mut v = self.0.clone();
        v.push(d);
        Position(v)
    }

    pub fn concat(&self, other: &Position) -> Position {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Position(v)
    }

    pub fn strip_prefix(&self, prefix: &Position) -> Option<Position> {
        self.0.strip_prefix(prefix.0.as_slice()).map(|r| Position(r.to_vec()))
    }

    /// Number of argument positions crossed, i.e. the level of a redex here.
    pub fn right_count(&self) -> u32 {
        self.0.iter().filter(|d| **d == Dir::Right).count() as u32
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{}", d.tag())?;
        }
        Ok(())
    }
}

impl FromStr for Position {
    type Err = PositionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "root" || s == "-" {
            return Ok(Position::root());
        }
        s.split('.')
            .map(|part| match part.trim() {
                "B" => Ok(Dir::Body),
                "L" => Ok(Dir::Left),
                "R" => Ok(Dir::Right),
                other => Err(PositionError {
                    text: s.to_string(),
                    reason: format!("unknown direction `{other}` (expected L, R or B)"),
                }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Position)
    }
}

impl Serialize for Position {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Position {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse() {
        let p: Position = "L.R.B".parse().unwrap();
        assert_eq!(p.dirs(), &[Dir::Left, Dir::Right, Dir::Body]);
        assert_eq!(p.to_string(), "L.R.B");
        assert_eq!(Position::root().to_string(), "root");
        assert_eq!("root".parse::<Position>().unwrap(), Position::root());
        assert_eq!("".parse::<Position>().unwrap(), Position::root());
        assert!("L.X".parse::<Position>().is_err());
    }

    #[test]
    fn order_is_preorder() {
        let root = Position::root();
        let l: Position = "L".parse().unwrap();
        let lr: Position = "L.R".parse().unwrap();
        let r: Position = "R".parse().unwrap();
        assert!(root < l && l < lr && lr < r);
    }
}
