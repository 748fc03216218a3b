//! Linear designs `X = sum_i x_i A_i` whose weight matrices are indexed by code vectors,
//! together with their decoding partition and a JSON file format.
//!
//! Symbol indices are zero-based in the API and one-based in the file format.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decodability::DecodeNode;
use crate::f4::{CodeVector, F4Error, F4, MAX_M};
use crate::pauli::{phi_inv, GaussMatrix};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DesignError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unsupported design format version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("design has no vectors")]
    Empty,
    #[error("m = {0} exceeds the supported maximum of {MAX_M}")]
    TooLarge(usize),
    #[error("vector {index} has m = {found}, expected m = {expected}")]
    DimensionMismatch { index: usize, found: usize, expected: usize },
    #[error("vectors {first} and {second} are equal")]
    Duplicate { first: usize, second: usize },
    #[error("{what}: symbol index {index} is out of range")]
    IndexOutOfRange { what: &'static str, index: usize },
    #[error("{what}: symbol {index} appears more than once")]
    Repeated { what: &'static str, index: usize },
    #[error("{what}: symbol {index} is not covered")]
    Missing { what: &'static str, index: usize },
    #[error("{what}: empty group")]
    EmptyGroup { what: &'static str },
    #[error("encoding group {0} is not contained in a single decoding group")]
    EncodingNotRefinement(usize),
    #[error("expected {expected} symbol values, got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error(transparent)]
    F4(#[from] F4Error),
}

/// One step of the recipe that produced a design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    Catalog { name: String },
    /// The one-antenna design `{[0]}, {[1]}`.
    Seed,
    SquareOd { m: usize },
    ConstructionA { l: u8 },
    ConstructionB { l: u8 },
    ConstructionC { xi: [F4; 4] },
    Permute { sigma: Vec<usize> },
    DeleteGroup { group: usize },
    NewFgd { m: usize, xi1: F4, xi2: F4, rate: String, selection: String, selected: usize, punctured: usize },
}

/// Result of checking that vectors in different groups are pairwise HR-orthogonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupValidity {
    Valid,
    /// Symbols (zero-based) from different groups that are not HR-orthogonal.
    Invalid { first: usize, second: usize },
}

impl GroupValidity {
    pub fn is_valid(&self) -> bool {
        matches!(self, GroupValidity::Valid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    m: usize,
    vectors: Vec<CodeVector>,
    groups: Vec<Vec<usize>>,
    encoding: Option<Vec<Vec<usize>>>,
    structure: Option<DecodeNode>,
    name: String,
    provenance: Vec<Step>,
}

pub(crate) fn check_partition(
    what: &'static str,
    parts: &[Vec<usize>],
    k: usize,
) -> Result<(), DesignError> {
    let mut seen = vec![false; k];
    for p in parts {
        if p.is_empty() {
            return Err(DesignError::EmptyGroup { what });
        }
        for &i in p {
            if i >= k {
                return Err(DesignError::IndexOutOfRange { what, index: i + 1 });
            }
            if seen[i] {
                return Err(DesignError::Repeated { what, index: i + 1 });
            }
            seen[i] = true;
        }
    }
    match seen.iter().position(|s| !s) {
        Some(i) => Err(DesignError::Missing { what, index: i + 1 }),
        None => Ok(()),
    }
}

impl Design {
    pub fn new(
        m: usize,
        vectors: Vec<CodeVector>,
        groups: Vec<Vec<usize>>,
        name: impl Into<String>,
    ) -> Result<Design, DesignError> {
        if m > MAX_M as usize {
            return Err(DesignError::TooLarge(m));
        }
        if vectors.is_empty() {
            return Err(DesignError::Empty);
        }
        for (index, v) in vectors.iter().enumerate() {
            if v.m() != m {
                return Err(DesignError::DimensionMismatch { index: index + 1, found: v.m(), expected: m });
            }
        }
        let mut sorted: Vec<(CodeVector, usize)> = vectors.iter().copied().zip(0..).collect();
        sorted.sort();
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                let (a, b) = (w[0].1.min(w[1].1), w[0].1.max(w[1].1));
                return Err(DesignError::Duplicate { first: a + 1, second: b + 1 });
            }
        }
        check_partition("groups", &groups, vectors.len())?;
        Ok(Design { m, vectors, groups, encoding: None, structure: None, name: name.into(), provenance: vec![] })
    }

    /// Declares a finer encoding partition: symbols in one encoding group are drawn
    /// jointly, so they cannot be split between conditional groups.
    pub fn with_encoding(mut self, encoding: Vec<Vec<usize>>) -> Result<Design, DesignError> {
        check_partition("encoding groups", &encoding, self.k())?;
        let owner = self.group_of();
        for (e, grp) in encoding.iter().enumerate() {
            if grp.iter().any(|&i| owner[i] != owner[grp[0]]) {
                return Err(DesignError::EncodingNotRefinement(e + 1));
            }
        }
        self.encoding = Some(encoding);
        Ok(self)
    }

    /// Attaches a known decoding structure. Only index coverage is checked here; the
    /// orthogonality claims are checked by the analyzer.
    pub fn with_structure(mut self, node: DecodeNode) -> Result<Design, DesignError> {
        let mut leaves = vec![];
        node.collect_parts(&mut leaves);
        check_partition("structure", &leaves, self.k())?;
        self.structure = Some(node);
        Ok(self)
    }

    pub fn with_provenance(mut self, steps: Vec<Step>) -> Design {
        self.provenance = steps;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Design {
        self.name = name.into();
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of transmit antennas `N = 2^m`.
    pub fn antennas(&self) -> usize {
        1 << self.m
    }

    /// Number of real symbols.
    pub fn k(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[CodeVector] {
        &self.vectors
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// The declared encoding partition, or singletons when none was declared.
    pub fn encoding_groups(&self) -> Vec<Vec<usize>> {
        self.encoding.clone().unwrap_or_else(|| (0..self.k()).map(|i| vec![i]).collect())
    }

    pub fn has_joint_encoding(&self) -> bool {
        self.encoding.is_some()
    }

    pub fn structure(&self) -> Option<&DecodeNode> {
        self.structure.as_ref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn provenance(&self) -> &[Step] {
        &self.provenance
    }

    /// Group number of every symbol.
    pub fn group_of(&self) -> Vec<usize> {
        let mut owner = vec![0; self.k()];
        for (g, grp) in self.groups.iter().enumerate() {
            for &i in grp {
                owner[i] = g;
            }
        }
        owner
    }

    /// Complex symbols per channel use: `K / (2N)`.
    pub fn rate(&self) -> Rational64 {
        Rational64::new(self.k() as i64, 2 * self.antennas() as i64)
    }

    pub fn weight_matrices(&self) -> Vec<GaussMatrix> {
        self.vectors.iter().map(phi_inv).collect()
    }

    /// The codeword `sum_i x_i A_i`.
    pub fn materialize(&self, x: &[f64]) -> Result<DMatrix<Complex64>, DesignError> {
        if x.len() != self.k() {
            return Err(DesignError::ValueCount { expected: self.k(), got: x.len() });
        }
        let n = self.antennas();
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for (v, &xi) in self.vectors.iter().zip(x) {
            out += phi_inv(v).to_complex() * Complex64::new(xi, 0.0);
        }
        Ok(out)
    }

    /// Checks every cross-group pair; the witness is the first failing pair in index order.
    pub fn validate_g_group(&self) -> GroupValidity {
        let owner = self.group_of();
        for a in 0..self.k() {
            for b in a + 1..self.k() {
                if owner[a] != owner[b] && self.vectors[a].xor(&self.vectors[b]).is_even() {
                    return GroupValidity::Invalid { first: a, second: b };
                }
            }
        }
        GroupValidity::Valid
    }

    pub fn to_json(&self) -> String {
        let file = DesignFile {
            version: FORMAT_VERSION,
            name: self.name.clone(),
            m: self.m,
            vectors: self.vectors.clone(),
            groups: one_based(&self.groups),
            encoding_groups: self.encoding.as_ref().map(|e| one_based(e)),
            structure: self.structure.as_ref().map(NodeFile::from_node),
            provenance: self.provenance.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("design serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Design, DesignError> {
        let file: DesignFile = serde_json::from_str(text).map_err(|e| DesignError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if file.version != FORMAT_VERSION {
            return Err(DesignError::Version(file.version));
        }
        let groups = zero_based("groups", &file.groups)?;
        let mut d = Design::new(file.m, file.vectors, groups, file.name)?;
        if let Some(e) = &file.encoding_groups {
            d = d.with_encoding(zero_based("encoding groups", e)?)?;
        }
        if let Some(s) = &file.structure {
            d = d.with_structure(s.to_node()?)?;
        }
        Ok(d.with_provenance(file.provenance))
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (m = {}, K = {}, rate {})", self.name, self.m, self.k(), self.rate())
    }
}

fn one_based(parts: &[Vec<usize>]) -> Vec<Vec<usize>> {
    parts.iter().map(|p| p.iter().map(|i| i + 1).collect()).collect()
}

fn zero_based(what: &'static str, parts: &[Vec<usize>]) -> Result<Vec<Vec<usize>>, DesignError> {
    parts
        .iter()
        .map(|p| {
            p.iter()
                .map(|&i| i.checked_sub(1).ok_or(DesignError::IndexOutOfRange { what, index: 0 }))
                .collect()
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignFile {
    version: u32,
    name: String,
    m: usize,
    vectors: Vec<CodeVector>,
    groups: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    encoding_groups: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    structure: Option<NodeFile>,
    #[serde(default)]
    provenance: Vec<Step>,
}

/// File form of [`DecodeNode`] with one-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NodeFile {
    Leaf(Vec<usize>),
    Split { conditioned: Vec<usize>, groups: Vec<NodeFile> },
}

impl NodeFile {
    pub fn from_node(n: &DecodeNode) -> NodeFile {
        match n {
            DecodeNode::Leaf(s) => NodeFile::Leaf(s.iter().map(|i| i + 1).collect()),
            DecodeNode::Split { conditioned, groups } => NodeFile::Split {
                conditioned: conditioned.iter().map(|i| i + 1).collect(),
                groups: groups.iter().map(NodeFile::from_node).collect(),
            },
        }
    }

    pub fn to_node(&self) -> Result<DecodeNode, DesignError> {
        let conv = |v: &[usize]| zero_based("structure", &[v.to_vec()]).map(|mut p| p.remove(0));
        Ok(match self {
            NodeFile::Leaf(s) => DecodeNode::Leaf(conv(s)?),
            NodeFile::Split { conditioned, groups } => DecodeNode::Split {
                conditioned: conv(conditioned)?,
                groups: groups.iter().map(NodeFile::to_node).collect::<Result<_, _>>()?,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(s: &str) -> CodeVector {
        s.parse().unwrap()
    }

    fn alamouti() -> Design {
        let v = ["0|0", "0|1", "0|w", "0|W"].iter().map(|s| cv(s)).collect();
        Design::new(1, v, vec![vec![0], vec![1], vec![2], vec![3]], "alamouti").unwrap()
    }

    #[test]
    fn rate_and_validity() {
        let d = alamouti();
        assert_eq!(d.rate(), Rational64::new(1, 1));
        assert!(d.validate_g_group().is_valid());
    }

    #[test]
    fn invalid_groups_give_first_witness() {
        let v = vec![cv("0|0"), cv("1|1"), cv("0|1")];
        let d = Design::new(1, v, vec![vec![0], vec![1, 2]], "t").unwrap();
        assert_eq!(d.validate_g_group(), GroupValidity::Invalid { first: 0, second: 1 });
    }

    #[test]
    fn construction_errors() {
        let dup = Design::new(1, vec![cv("0|1"), cv("0|1")], vec![vec![0, 1]], "t");
        assert_eq!(dup.unwrap_err(), DesignError::Duplicate { first: 1, second: 2 });
        let mixed = Design::new(1, vec![cv("0|1"), cv("0|11")], vec![vec![0, 1]], "t");
        assert!(matches!(mixed.unwrap_err(), DesignError::DimensionMismatch { index: 2, .. }));
        let missing = Design::new(1, vec![cv("0|1"), cv("0|w")], vec![vec![0]], "t");
        assert!(matches!(missing.unwrap_err(), DesignError::Missing { index: 2, .. }));
    }

    #[test]
    fn alamouti_codeword() {
        let d = alamouti();
        let x = d.materialize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        // [[x1 + i x3, x4 + i x2], [-x4 + i x2, x1 - i x3]]
        let c = |a: f64, b: f64| Complex64::new(a, b);
        assert_eq!(x[(0, 0)], c(1.0, 3.0));
        assert_eq!(x[(0, 1)], c(4.0, 2.0));
        assert_eq!(x[(1, 0)], c(-4.0, 2.0));
        assert_eq!(x[(1, 1)], c(1.0, -3.0));
        assert!(d.materialize(&[1.0]).is_err());
    }

    #[test]
    fn json_round_trip_and_errors() {
        let d = alamouti().with_provenance(vec![Step::Catalog { name: "alamouti".into() }]);
        let text = d.to_json();
        assert_eq!(Design::from_json(&text).unwrap(), d);
        assert!(matches!(Design::from_json("{\"version\": 1,"), Err(DesignError::Syntax { .. })));
        let bad = text.replace("\"0|W\"", "\"0|x\"");
        assert!(matches!(Design::from_json(&bad), Err(DesignError::Syntax { line, .. }) if line > 1));
        let v2 = text.replace("\"version\": 1", "\"version\": 2");
        assert_eq!(Design::from_json(&v2).unwrap_err(), DesignError::Version(2));
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["groups"][3] = serde_json::json!([5]);
        let oob = value.to_string();
        assert!(matches!(Design::from_json(&oob), Err(DesignError::IndexOutOfRange { index: 5, .. })));
    }

    #[test]
    fn encoding_must_refine_groups() {
        let d = alamouti();
        assert_eq!(d.clone().with_encoding(vec![vec![0, 1], vec![2], vec![3]]).unwrap_err(), DesignError::EncodingNotRefinement(1));
        let v = ["0|0", "0|1", "0|w", "0|W"].iter().map(|s| cv(s)).collect();
        let one = Design::new(1, v, vec![vec![0, 1, 2, 3]], "t").unwrap();
        assert!(one.with_encoding(vec![vec![0, 1], vec![2, 3]]).is_ok());
    }
}
