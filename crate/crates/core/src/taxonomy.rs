//! The multi-level t-facet hierarchy.
//!
//! A [`Taxonomy`] is a forest of single-parent nodes rooted at level-1 facets.
//! Leaves used for scoring are the nodes on the deepest considered level
//! (`depth`). Deeper nodes can be cut away with [`Taxonomy::truncated`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque, totally ordered facet identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FacetId(String);

impl FacetId {
    pub fn new(id: impl Into<String>) -> Self {
        FacetId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FacetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FacetId {
    fn from(s: &str) -> Self {
        FacetId(s.to_owned())
    }
}

impl std::borrow::Borrow<str> for FacetId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetNode {
    pub id: FacetId,
    pub label: String,
    /// `None` marks a level-1 node.
    pub parent: Option<FacetId>,
    pub level: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("malformed taxonomy document: {0}")]
    Malformed(String),
    #[error("empty facet id")]
    EmptyId,
    #[error("facet {0}: empty label")]
    EmptyLabel(FacetId),
    #[error("facet {0}: duplicate id (each facet must have exactly one parent)")]
    DuplicateId(FacetId),
    #[error("facet {id}: parent {parent} is not defined")]
    OrphanParent { id: FacetId, parent: FacetId },
    #[error("facet {0}: parent links form a cycle")]
    Cycle(FacetId),
    #[error("facet {id}: level {level} inconsistent with its parent ({reason})")]
    LevelMismatch {
        id: FacetId,
        level: u32,
        reason: &'static str,
    },
    #[error("unknown facet {0}")]
    UnknownFacet(FacetId),
    #[error("depth must be at least 1")]
    InvalidDepth,
}

/// Immutable, validated facet hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    nodes: BTreeMap<FacetId, FacetNode>,
    children: BTreeMap<FacetId, Vec<FacetId>>,
    depth: u32,
}

impl Taxonomy {
    /// Validates a flat node list. Node order does not matter.
    pub fn from_nodes(nodes: Vec<FacetNode>) -> Result<Self, TaxonomyError> {
        let mut by_id = BTreeMap::new();
        for node in nodes {
            if node.id.as_str().is_empty() {
                return Err(TaxonomyError::EmptyId);
            }
            if node.label.trim().is_empty() {
                return Err(TaxonomyError::EmptyLabel(node.id));
            }
            if by_id.contains_key(&node.id) {
                return Err(TaxonomyError::DuplicateId(node.id));
            }
            by_id.insert(node.id.clone(), node);
        }

        for node in by_id.values() {
            match &node.parent {
                None if node.level != 1 => {
                    return Err(TaxonomyError::LevelMismatch {
                        id: node.id.clone(),
                        level: node.level,
                        reason: "a node without parent must be level 1",
                    })
                }
                Some(_) if node.level == 1 => {
                    return Err(TaxonomyError::LevelMismatch {
                        id: node.id.clone(),
                        level: node.level,
                        reason: "a level-1 node must not have a parent",
                    })
                }
                Some(parent) if !by_id.contains_key(parent) => {
                    return Err(TaxonomyError::OrphanParent {
                        id: node.id.clone(),
                        parent: parent.clone(),
                    })
                }
                _ => {}
            }
        }

        // Walk every parent chain; a chain longer than the node count revisits a node.
        for node in by_id.values() {
            let mut seen = BTreeSet::new();
            let mut cursor = node;
            while let Some(parent) = &cursor.parent {
                if !seen.insert(cursor.id.clone()) {
                    return Err(TaxonomyError::Cycle(node.id.clone()));
                }
                cursor = &by_id[parent];
            }
        }

        for node in by_id.values() {
            if let Some(parent) = &node.parent {
                if by_id[parent].level + 1 != node.level {
                    return Err(TaxonomyError::LevelMismatch {
                        id: node.id.clone(),
                        level: node.level,
                        reason: "level must equal parent level + 1",
                    });
                }
            }
        }

        let mut children: BTreeMap<FacetId, Vec<FacetId>> = BTreeMap::new();
        for node in by_id.values() {
            if let Some(parent) = &node.parent {
                children
                    .entry(parent.clone())
                    .or_default()
                    .push(node.id.clone());
            }
        }
        let depth = by_id.values().map(|n| n.level).max().unwrap_or(1);
        Ok(Taxonomy {
            nodes: by_id,
            children,
            depth,
        })
    }

    /// Parses the flat JSON array form.
    pub fn parse(document: &str) -> Result<Self, TaxonomyError> {
        let nodes: Vec<FacetNode> =
            serde_json::from_str(document).map_err(|e| TaxonomyError::Malformed(e.to_string()))?;
        Self::from_nodes(nodes)
    }

    /// Parses a nested category export (`{"id", "name", "categories": [...]}`) and
    /// flattens it. The top level may be an array of categories, an object with a
    /// `categories` array, or an API envelope `{"response": {"categories": [...]}}`.
    pub fn parse_nested(document: &str) -> Result<Self, TaxonomyError> {
        let value: serde_json::Value =
            serde_json::from_str(document).map_err(|e| TaxonomyError::Malformed(e.to_string()))?;
        let roots = if value.is_array() {
            &value
        } else if let Some(c) = value.get("categories") {
            c
        } else if let Some(c) = value.get("response").and_then(|r| r.get("categories")) {
            c
        } else {
            return Err(TaxonomyError::Malformed(
                "expected an array of categories".into(),
            ));
        };
        let roots: Vec<NestedCategory> = serde_json::from_value(roots.clone())
            .map_err(|e| TaxonomyError::Malformed(e.to_string()))?;

        let mut flat = Vec::new();
        let mut stack: Vec<(&NestedCategory, Option<FacetId>, u32)> =
            roots.iter().rev().map(|c| (c, None, 1)).collect();
        while let Some((cat, parent, level)) = stack.pop() {
            let id = FacetId::new(cat.id.clone());
            for child in cat.categories.iter().rev() {
                stack.push((child, Some(id.clone()), level + 1));
            }
            flat.push(FacetNode {
                id,
                label: cat.name.clone(),
                parent,
                level,
            });
        }
        Self::from_nodes(flat)
    }

    /// Canonical JSON form, nodes in id order.
    pub fn to_json(&self) -> String {
        let nodes: Vec<&FacetNode> = self.nodes.values().collect();
        serde_json::to_string_pretty(&nodes).expect("taxonomy nodes serialize")
    }

    /// Drops every node deeper than `depth`.
    pub fn truncated(&self, depth: u32) -> Result<Self, TaxonomyError> {
        if depth == 0 {
            return Err(TaxonomyError::InvalidDepth);
        }
        let nodes = self
            .nodes
            .values()
            .filter(|n| n.level <= depth)
            .cloned()
            .collect();
        Self::from_nodes(nodes)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&FacetNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &FacetNode> {
        self.nodes.values()
    }

    pub fn label(&self, id: &str) -> Option<&str> {
        self.nodes.get(id).map(|n| n.label.as_str())
    }

    pub fn is_leaf(&self, id: &str) -> bool {
        self.nodes.get(id).is_some_and(|n| n.level == self.depth)
    }

    /// All level-`depth` nodes in lexicographic order.
    pub fn leaves(&self) -> Vec<FacetId> {
        self.nodes
            .values()
            .filter(|n| n.level == self.depth)
            .map(|n| n.id.clone())
            .collect()
    }

    pub fn level_nodes(&self, level: u32) -> Vec<FacetId> {
        self.nodes
            .values()
            .filter(|n| n.level == level)
            .map(|n| n.id.clone())
            .collect()
    }

    /// Direct children in lexicographic order.
    pub fn children(&self, id: &str) -> &[FacetId] {
        self.children.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn parent(&self, id: &str) -> Option<&FacetId> {
        self.nodes.get(id).and_then(|n| n.parent.as_ref())
    }

    /// Path from the level-1 root down to `id`, excluding `id` itself.
    pub fn ancestors(&self, id: &str) -> Result<Vec<FacetId>, TaxonomyError> {
        let node = self
            .nodes
            .get(id)
            .ok_or_else(|| TaxonomyError::UnknownFacet(FacetId::new(id)))?;
        let mut path = Vec::with_capacity(node.level as usize - 1);
        let mut cursor = node;
        while let Some(parent) = &cursor.parent {
            path.push(parent.clone());
            cursor = &self.nodes[parent];
        }
        path.reverse();
        Ok(path)
    }

    /// Every leaf below `id`, or `id` itself when it is a leaf.
    pub fn leaf_descendants(&self, id: &str) -> Vec<FacetId> {
        let mut out = Vec::new();
        let mut stack = vec![FacetId::new(id)];
        while let Some(f) = stack.pop() {
            if self.is_leaf(f.as_str()) {
                out.push(f);
            } else {
                stack.extend(self.children(f.as_str()).iter().cloned());
            }
        }
        out.sort();
        out
    }
}

#[derive(Deserialize)]
struct NestedCategory {
    id: String,
    name: String,
    #[serde(default)]
    categories: Vec<NestedCategory>,
}
