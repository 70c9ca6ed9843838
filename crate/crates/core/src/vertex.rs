use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

/// A vertex id: either a residue (numbered vertex) or a symbolic letter token
/// such as `x`, `y0` or `a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Vertex {
    Num(u32),
    Letter(String),
}

impl Vertex {
    pub fn letter(s: &str) -> Self {
        Vertex::Letter(s.to_string())
    }

    pub fn as_num(&self) -> Option<u32> {
        match self {
            Vertex::Num(n) => Some(*n),
            Vertex::Letter(_) => None,
        }
    }

    pub fn is_letter(&self) -> bool {
        matches!(self, Vertex::Letter(_))
    }

    /// Adds `shift` to a numbered vertex modulo `m`; letters are fixed.
    pub fn shifted(&self, shift: u32, m: u32) -> Vertex {
        match self {
            Vertex::Num(n) => Vertex::Num((n + shift) % m),
            Vertex::Letter(_) => self.clone(),
        }
    }
}

impl Ord for Vertex {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Vertex::Num(a), Vertex::Num(b)) => a.cmp(b),
            (Vertex::Num(_), Vertex::Letter(_)) => Ordering::Less,
            (Vertex::Letter(_), Vertex::Num(_)) => Ordering::Greater,
            (Vertex::Letter(a), Vertex::Letter(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Vertex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Num(n) => write!(f, "{n}"),
            Vertex::Letter(s) => f.write_str(s),
        }
    }
}

impl Serialize for Vertex {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid vertex token `{0}`")]
pub struct VertexParseError(pub String);

impl FromStr for Vertex {
    type Err = VertexParseError;

    /// Decimal integers become numbered vertices; a lowercase letter followed
    /// by lowercase letters or digits becomes a symbolic vertex.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || VertexParseError(s.to_string());
        let first = s.chars().next().ok_or_else(bad)?;
        if first.is_ascii_digit() {
            if s.len() > 1 && first == '0' {
                return Err(bad());
            }
            return s.parse::<u32>().map(Vertex::Num).map_err(|_| bad());
        }
        if first.is_ascii_lowercase()
            && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
        {
            return Ok(Vertex::Letter(s.to_string()));
        }
        Err(bad())
    }
}

impl From<u32> for Vertex {
    fn from(n: u32) -> Self {
        Vertex::Num(n)
    }
}

impl From<&str> for Vertex {
    fn from(s: &str) -> Self {
        s.parse().unwrap_or_else(|_| Vertex::Letter(s.to_string()))
    }
}

/// An unordered vertex pair, stored with the smaller endpoint first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexPair(pub Vertex, pub Vertex);

impl VertexPair {
    pub fn new(a: impl Into<Vertex>, b: impl Into<Vertex>) -> Self {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            VertexPair(a, b)
        } else {
            VertexPair(b, a)
        }
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        &self.0 == v || &self.1 == v
    }

    pub fn shifted(&self, shift: u32, m: u32) -> Self {
        VertexPair::new(self.0.shifted(shift, m), self.1.shifted(shift, m))
    }
}

impl fmt::Display for VertexPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

impl Serialize for VertexPair {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (&self.0, &self.1).serialize(serializer)
    }
}

/// Parses `(a,b)`.
impl FromStr for VertexPair {
    type Err = VertexParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|x| x.strip_suffix(')'))
            .ok_or_else(|| VertexParseError(s.to_string()))?;
        let (a, b) = inner.split_once(',').ok_or_else(|| VertexParseError(s.to_string()))?;
        let (a, b): (Vertex, Vertex) = (a.trim().parse()?, b.trim().parse()?);
        if a == b {
            return Err(VertexParseError(s.to_string()));
        }
        Ok(VertexPair::new(a, b))
    }
}

/// Parses a whitespace-separated list of pairs such as `(0,9) (1,10)`.
pub fn parse_pairs(s: &str) -> Result<Vec<VertexPair>, VertexParseError> {
    s.split_whitespace().map(str::parse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tokens() {
        assert_eq!("17".parse::<Vertex>().unwrap(), Vertex::Num(17));
        assert_eq!("y0".parse::<Vertex>().unwrap(), Vertex::letter("y0"));
        assert!("07".parse::<Vertex>().is_err());
        assert!("Y".parse::<Vertex>().is_err());
        assert!("".parse::<Vertex>().is_err());
        assert!("1a".parse::<Vertex>().is_err());
    }

    #[test]
    fn numbers_sort_before_letters() {
        let mut v: Vec<Vertex> = vec!["x".into(), 3.into(), "a".into(), 10.into()];
        v.sort();
        let shown: Vec<String> = v.iter().map(|v| v.to_string()).collect();
        assert_eq!(shown, ["3", "10", "a", "x"]);
    }

    #[test]
    fn pair_is_unordered() {
        assert_eq!(VertexPair::new(9, 0), VertexPair::new(0, 9));
        assert_eq!(VertexPair::new(7, 16).shifted(8, 18), VertexPair::new(15, 6));
    }
}
