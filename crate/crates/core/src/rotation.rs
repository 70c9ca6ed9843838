//! Rotation systems: per-vertex cyclic neighbor orders of a simple graph.
//!
//! Faces are traced with the successor rule everywhere in this crate: the
//! directed edge `(u, v)` is followed by `(v, w)` where `w` is the neighbor
//! immediately after `u` in the rotation at `v`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{EmbeddingError, ParseError};
use crate::vertex::{Vertex, VertexPair};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationSystem {
    labels: Vec<Vertex>,
    index: HashMap<Vertex, usize>,
    rotations: Vec<Vec<usize>>,
}

impl RotationSystem {
    /// Builds and validates a rotation system from labelled rotations. Vertex
    /// order is kept as given.
    pub fn new(entries: Vec<(Vertex, Vec<Vertex>)>) -> Result<Self, EmbeddingError> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (v, _)) in entries.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(EmbeddingError::DuplicateVertex(v.clone()));
            }
        }
        let mut rotations = Vec::with_capacity(entries.len());
        let mut labels = Vec::with_capacity(entries.len());
        for (v, rot) in entries {
            let mut idx = Vec::with_capacity(rot.len());
            for u in rot {
                match index.get(&u) {
                    Some(&i) => idx.push(i),
                    None => return Err(EmbeddingError::UnknownVertex(u)),
                }
            }
            labels.push(v);
            rotations.push(idx);
        }
        Self::from_indexed(labels, rotations)
    }

    /// Builds from dense indices; `rotations[i]` lists neighbor indices of
    /// vertex `labels[i]`.
    pub fn from_indexed(
        labels: Vec<Vertex>,
        rotations: Vec<Vec<usize>>,
    ) -> Result<Self, EmbeddingError> {
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect::<HashMap<_, _>>();
        if index.len() != labels.len() {
            let mut seen = BTreeSet::new();
            for v in &labels {
                if !seen.insert(v) {
                    return Err(EmbeddingError::DuplicateVertex(v.clone()));
                }
            }
        }
        let rs = RotationSystem {
            labels,
            index,
            rotations,
        };
        rs.validate()?;
        Ok(rs)
    }

    pub(crate) fn from_parts_unchecked(labels: Vec<Vertex>, rotations: Vec<Vec<usize>>) -> Self {
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        RotationSystem {
            labels,
            index,
            rotations,
        }
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let n = self.labels.len();
        let mut adj = vec![false; n * n];
        for (v, rot) in self.rotations.iter().enumerate() {
            if rot.len() < 2 {
                return Err(EmbeddingError::LowDegree(self.labels[v].clone(), rot.len()));
            }
            for &u in rot {
                if u >= n {
                    return Err(EmbeddingError::UnknownVertex(Vertex::Num(u as u32)));
                }
                if u == v {
                    return Err(EmbeddingError::Loop(self.labels[v].clone()));
                }
                if adj[v * n + u] {
                    return Err(EmbeddingError::RepeatedNeighbor {
                        at: self.labels[v].clone(),
                        neighbor: self.labels[u].clone(),
                    });
                }
                adj[v * n + u] = true;
            }
        }
        for v in 0..n {
            for u in 0..n {
                if adj[v * n + u] && !adj[u * n + v] {
                    return Err(EmbeddingError::Asymmetric(
                        self.labels[v].clone(),
                        self.labels[u].clone(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.rotations.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn labels(&self) -> &[Vertex] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &Vertex {
        &self.labels[v]
    }

    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub(crate) fn require(&self, v: &Vertex) -> Result<usize, EmbeddingError> {
        self.index_of(v)
            .ok_or_else(|| EmbeddingError::UnknownVertex(v.clone()))
    }

    pub fn rotation(&self, v: usize) -> &[usize] {
        &self.rotations[v]
    }

    pub fn rotations(&self) -> &[Vec<usize>] {
        &self.rotations
    }

    pub(crate) fn rotations_mut(&mut self) -> &mut Vec<Vec<usize>> {
        &mut self.rotations
    }

    /// Rotation at `v` as labels.
    pub fn rotation_labels(&self, v: &Vertex) -> Option<Vec<Vertex>> {
        let i = self.index_of(v)?;
        Some(
            self.rotations[i]
                .iter()
                .map(|&u| self.labels[u].clone())
                .collect(),
        )
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rotations[v].len()
    }

    pub fn position(&self, v: usize, u: usize) -> Option<usize> {
        self.rotations[v].iter().position(|&x| x == u)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rotations[u].contains(&v)
    }

    /// The neighbor after `u` in the rotation at `v`.
    pub fn succ(&self, v: usize, u: usize) -> Option<usize> {
        let r = &self.rotations[v];
        self.position(v, u).map(|p| r[(p + 1) % r.len()])
    }

    /// The neighbor before `u` in the rotation at `v`.
    pub fn pred(&self, v: usize, u: usize) -> Option<usize> {
        let r = &self.rotations[v];
        self.position(v, u).map(|p| r[(p + r.len() - 1) % r.len()])
    }

    /// Undirected edges as index pairs `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, rot) in self.rotations.iter().enumerate() {
            for &v in rot {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn edge_set(&self) -> BTreeSet<VertexPair> {
        self.edges()
            .into_iter()
            .map(|(u, v)| VertexPair::new(self.labels[u].clone(), self.labels[v].clone()))
            .collect()
    }

    pub fn has_edge_labels(&self, a: &Vertex, b: &Vertex) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(u), Some(v)) => self.has_edge(u, v),
            _ => false,
        }
    }

    /// Every rotation reversed; the mirror-image embedding.
    pub fn reversed(&self) -> Self {
        let rotations = self
            .rotations
            .iter()
            .map(|r| r.iter().rev().copied().collect())
            .collect();
        RotationSystem {
            labels: self.labels.clone(),
            index: self.index.clone(),
            rotations,
        }
    }

    /// Relabels numbered vertices by `+shift mod m`, keeping letters.
    pub fn shifted(&self, shift: u32, m: u32) -> Self {
        let labels: Vec<Vertex> = self.labels.iter().map(|v| v.shifted(shift, m)).collect();
        RotationSystem::from_parts_unchecked(labels, self.rotations.clone())
    }

    /// Same embedding with vertices listed in sorted label order and each
    /// rotation started at its smallest neighbor.
    pub fn canonical(&self) -> Self {
        let mut order: Vec<usize> = (0..self.labels.len()).collect();
        order.sort_by(|&a, &b| self.labels[a].cmp(&self.labels[b]));
        let mut new_of = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_of[old] = new;
        }
        let labels = order.iter().map(|&o| self.labels[o].clone()).collect();
        let rotations = order
            .iter()
            .map(|&o| {
                let mut r: Vec<usize> = self.rotations[o].iter().map(|&u| new_of[u]).collect();
                if let Some(p) = r.iter().enumerate().min_by_key(|(_, &x)| x).map(|(p, _)| p) {
                    r.rotate_left(p);
                }
                r
            })
            .collect();
        RotationSystem::from_parts_unchecked(labels, rotations)
    }

    /// Parses the `<vertex>. <neighbor> ...` text format. `#` starts a
    /// comment; blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut entries: Vec<(Vertex, Vec<Vertex>)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = lineno + 1;
            let (head, rest) = line
                .split_once('.')
                .ok_or_else(|| ParseError::new(lineno, "expected `<vertex>. <neighbors>`"))?;
            let v: Vertex = head
                .trim()
                .parse()
                .map_err(|e| ParseError::new(lineno, format!("{e}")))?;
            let mut rot = Vec::new();
            for tok in rest.split_whitespace() {
                rot.push(
                    tok.parse::<Vertex>()
                        .map_err(|e| ParseError::new(lineno, format!("{e}")))?,
                );
            }
            entries.push((v, rot));
        }
        if entries.is_empty() {
            return Err(ParseError::new(0, "no vertices"));
        }
        // Structural problems are reported against the line of the first
        // vertex involved.
        let line_of: HashMap<Vertex, usize> = {
            let mut m = HashMap::new();
            let mut n = 0;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                if let Some(v) = entries.get(n) {
                    m.entry(v.0.clone()).or_insert(lineno + 1);
                }
                n += 1;
            }
            m
        };
        RotationSystem::new(entries).map_err(|e| {
            let line = match &e {
                EmbeddingError::Asymmetric(v, _)
                | EmbeddingError::Loop(v)
                | EmbeddingError::LowDegree(v, _)
                | EmbeddingError::DuplicateVertex(v)
                | EmbeddingError::RepeatedNeighbor { at: v, .. } => {
                    line_of.get(v).copied().unwrap_or(0)
                }
                _ => 0,
            };
            ParseError::new(line, e.to_string())
        })
    }
}

impl fmt::Display for RotationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (v, rot) in self.rotations.iter().enumerate() {
            write!(f, "{}.", self.labels[v])?;
            for &u in rot {
                write!(f, " {}", self.labels[u])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for RotationSystem {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RotationSystem::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn k3() -> RotationSystem {
        "1. 2 3\n2. 3 1\n3. 1 2\n".parse().unwrap()
    }

    #[test]
    fn round_trips_text() {
        let text = "0. 1 2 3\n1. 0 3 2\n2. 0 1 3\n3. 0 2 1\n";
        let rs: RotationSystem = text.parse().unwrap();
        assert_eq!(rs.to_string(), text);
        assert_eq!(rs.edge_count(), 6);
    }

    #[test]
    fn comments_and_letters() {
        let rs: RotationSystem = "# triangle\n\nx. y0 a\ny0. a x  # tail\na. x y0\n"
            .parse()
            .unwrap();
        assert_eq!(rs.vertex_count(), 3);
        assert_eq!(
            rs.rotation_labels(&Vertex::letter("y0")).unwrap(),
            vec![Vertex::letter("a"), Vertex::letter("x")]
        );
    }

    #[test]
    fn asymmetric_is_rejected_with_line() {
        let err = "1. 2 3\n2. 3\n3. 1 2\n".parse::<RotationSystem>().unwrap_err();
        assert!(err.message.contains("asymmetric") || err.message.contains("degree"));
        let err = "1. 2 3\n2. 3 1 4\n3. 1 2\n4. 2 3\n"
            .parse::<RotationSystem>()
            .unwrap_err();
        assert!(err.message.contains("asymmetric"), "{err}");
    }

    #[test]
    fn rejects_repeats_loops_and_low_degree() {
        assert!(matches!(
            RotationSystem::new(vec![
                (1.into(), vec![2.into(), 2.into()]),
                (2.into(), vec![1.into(), 1.into()]),
            ]),
            Err(EmbeddingError::RepeatedNeighbor { .. })
        ));
        assert!(matches!(
            RotationSystem::new(vec![(1.into(), vec![1.into(), 1.into()])]),
            Err(EmbeddingError::Loop(_))
        ));
        assert!(matches!(
            RotationSystem::new(vec![(1.into(), vec![2.into()]), (2.into(), vec![1.into()])]),
            Err(EmbeddingError::LowDegree(_, 1))
        ));
        assert!("1 2 3".parse::<RotationSystem>().is_err());
    }

    #[test]
    fn succ_and_pred() {
        let rs = k3();
        let (a, b, c) = (0, 1, 2);
        assert_eq!(rs.succ(a, b), Some(c));
        assert_eq!(rs.pred(a, b), Some(c));
        assert!(rs.has_edge(b, c));
    }

    #[test]
    fn canonical_sorts_vertices() {
        let rs: RotationSystem = "3. 2 1\n1. 3 2\n2. 1 3\n".parse().unwrap();
        assert_eq!(rs.canonical().to_string(), "1. 2 3\n2. 1 3\n3. 1 2\n");
    }
}
