//! Coverage probability between a profile facet and a candidate facet.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::taxonomy::{FacetId, Taxonomy};

#[derive(Debug, Error, PartialEq)]
pub enum CoverageError {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("embeddings line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("embeddings line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("facet {0}: zero vector")]
    ZeroVector(FacetId),
    #[error("facet {0}: non-finite component")]
    NonFinite(FacetId),
    #[error("facet {0}: listed twice")]
    Duplicate(FacetId),
    #[error("facet {0}: no embedding")]
    MissingEmbedding(FacetId),
    #[error("fallback embeddings need dim >= 8, got {0}")]
    DimTooSmall(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<FacetId, Vec<f64>>,
    norms: BTreeMap<FacetId, f64>,
}

impl EmbeddingTable {
    /// Validates and indexes vectors. An empty map yields an empty table with `dim == 0`.
    pub fn new(vectors: BTreeMap<FacetId, Vec<f64>>) -> Result<Self, CoverageError> {
        let dim = vectors.values().next().map_or(0, Vec::len);
        let mut norms = BTreeMap::new();
        for (i, (id, v)) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(CoverageError::DimensionMismatch {
                    line: i + 1,
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CoverageError::NonFinite(id.clone()));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(CoverageError::ZeroVector(id.clone()));
            }
            norms.insert(id.clone(), norm);
        }
        Ok(EmbeddingTable {
            dim,
            vectors,
            norms,
        })
    }

    /// Parses `facet_id<TAB>v1 v2 ... vd` rows.
    pub fn parse(text: &str) -> Result<Self, CoverageError> {
        let mut vectors = BTreeMap::new();
        let mut dim = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (id, rest) = line.split_once('\t').ok_or_else(|| CoverageError::Parse {
                line: line_no,
                msg: "expected `facet_id<TAB>components`".into(),
            })?;
            let v = rest
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|e| CoverageError::Parse {
                        line: line_no,
                        msg: format!("{t:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let expected = *dim.get_or_insert(v.len());
            if v.len() != expected || expected == 0 {
                return Err(CoverageError::DimensionMismatch {
                    line: line_no,
                    expected,
                    found: v.len(),
                });
            }
            let id = FacetId::new(id.trim());
            if vectors.insert(id.clone(), v).is_some() {
                return Err(CoverageError::Duplicate(id));
            }
        }
        Self::new(vectors)
    }

    pub fn load(path: &Path) -> Result<Self, CoverageError> {
        let text = std::fs::read_to_string(path).map_err(|e| CoverageError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Writes the table in the file format accepted by [`EmbeddingTable::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, v) in &self.vectors {
            let comps: Vec<String> = v.iter().map(f64::to_string).collect();
            out.push_str(&format!("{id}\t{}\n", comps.join(" ")));
        }
        out
    }

    /// Orthonormal basis: facet `i` (in sorted order) gets the `i`-th unit vector.
    pub fn one_hot<'a>(facets: impl IntoIterator<Item = &'a FacetId>) -> Self {
        let ids: std::collections::BTreeSet<&FacetId> = facets.into_iter().collect();
        let dim = ids.len();
        let vectors = ids
            .into_iter()
            .enumerate()
            .map(|(i, id)| {
                let mut v = vec![0.0; dim];
                v[i] = 1.0;
                (id.clone(), v)
            })
            .collect();
        Self::new(vectors).expect("unit vectors are valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    /// Raw cosine similarity in `[-1, 1]`.
    pub fn cosine(&self, a: &str, b: &str) -> Result<f64, CoverageError> {
        let (va, na) = self.lookup(a)?;
        let (vb, nb) = self.lookup(b)?;
        let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
        Ok(dot / (na * nb))
    }

    fn lookup(&self, id: &str) -> Result<(&[f64], f64), CoverageError> {
        match (self.vectors.get(id), self.norms.get(id)) {
            (Some(v), Some(&n)) => Ok((v, n)),
            _ => Err(CoverageError::MissingEmbedding(FacetId::new(id))),
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Hashed-feature vector of a label: lowercase word tokens plus per-word
/// character trigrams, bucketed by FNV-1a and L2-normalized.
pub fn label_vector(label: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    let lower = label.to_lowercase();
    for word in lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
    {
        v[(fnv1a(format!("w:{word}").as_bytes()) % dim as u64) as usize] += 1.0;
        let chars: Vec<char> = word.chars().collect();
        for tri in chars.windows(3) {
            let tri: String = tri.iter().collect();
            v[(fnv1a(format!("t:{tri}").as_bytes()) % dim as u64) as usize] += 1.0;
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Deterministic substitute for pretrained label embeddings, covering every node.
pub fn fallback_embeddings(
    taxonomy: &Taxonomy,
    dim: usize,
) -> Result<EmbeddingTable, CoverageError> {
    if dim < 8 {
        return Err(CoverageError::DimTooSmall(dim));
    }
    let mut vectors = BTreeMap::new();
    for node in taxonomy.nodes() {
        let mut v = label_vector(&node.label, dim);
        if v.iter().all(|&x| x == 0.0) {
            // Labels without alphanumerics fall back to the id.
            v = label_vector(node.id.as_str(), dim);
        }
        if v.iter().all(|&x| x == 0.0) {
            v[(fnv1a(node.id.as_str().as_bytes()) % dim as u64) as usize] = 1.0;
        }
        vectors.insert(node.id.clone(), v);
    }
    EmbeddingTable::new(vectors)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoverageKind {
    Exact,
    Cosine(Arc<EmbeddingTable>),
}

impl CoverageKind {
    pub fn name(&self) -> &'static str {
        match self {
            CoverageKind::Exact => "exact",
            CoverageKind::Cosine(_) => "cosine",
        }
    }
}

/// P(cov(f_u, f_i) | f_u, f_i). Exact: indicator of equality. Cosine: cosine
/// similarity of the two label vectors with negatives clamped to 0.
pub fn coverage(kind: &CoverageKind, f_u: &str, f_i: &str) -> Result<f64, CoverageError> {
    match kind {
        CoverageKind::Exact => Ok(if f_u == f_i { 1.0 } else { 0.0 }),
        CoverageKind::Cosine(table) => {
            if f_u == f_i {
                table.lookup(f_u)?;
                return Ok(1.0);
            }
            Ok(table.cosine(f_u, f_i)?.clamp(0.0, 1.0))
        }
    }
}
