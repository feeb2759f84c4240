//! Fixed-level, bottom-up construction of the paginated facet tree.
//!
//! Scored leaves are grouped by their level-1 parent and sorted; each parent is
//! scored by aggregating its top-k children and the parents are sorted in turn.
//! Both levels are then cut into fixed-size pages. Ties always break by facet id
//! ascending, so identical inputs yield identical trees.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::FacetScoreMap;
use crate::taxonomy::{FacetId, Taxonomy};

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("scored facet {0} is not a leaf of the taxonomy")]
    UnknownFacet(FacetId),
    #[error("facet {0} has a non-finite or negative score")]
    BadScore(FacetId),
    #[error("fixed-level trees need a two-level taxonomy, got depth {0}")]
    UnsupportedDepth(u32),
    #[error("invalid build config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Avg,
    Max,
}

impl Aggregation {
    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Avg => "avg",
            Aggregation::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub aggregation: Aggregation,
    pub top_k_children: usize,
    pub page_size_level1: usize,
    pub page_size_level2: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            aggregation: Aggregation::Max,
            top_k_children: 3,
            page_size_level1: 3,
            page_size_level2: 3,
        }
    }
}

impl BuildConfig {
    pub fn with_aggregation(aggregation: Aggregation) -> Self {
        BuildConfig {
            aggregation,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedLeaf {
    pub id: FacetId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChildPage {
    pub children: Vec<RankedLeaf>,
    /// A "More" marker follows this page.
    pub more: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedParent {
    pub id: FacetId,
    pub score: f64,
    pub child_pages: Vec<ChildPage>,
}

impl RankedParent {
    /// All children in ranked order, across pages.
    pub fn children(&self) -> impl Iterator<Item = &RankedLeaf> {
        self.child_pages.iter().flat_map(|p| p.children.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentPage {
    pub parents: Vec<RankedParent>,
    pub more: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedTree {
    pub pages: Vec<ParentPage>,
}

impl RankedTree {
    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }

    pub fn parents(&self) -> impl Iterator<Item = &RankedParent> {
        self.pages.iter().flat_map(|p| p.parents.iter())
    }

    /// Facets plus more-markers over every page of both levels.
    pub fn total_display_items(&self) -> usize {
        self.pages
            .iter()
            .map(|page| {
                usize::from(page.more)
                    + page
                        .parents
                        .iter()
                        .map(|p| {
                            1 + p
                                .child_pages
                                .iter()
                                .map(|c| c.children.len() + usize::from(c.more))
                                .sum::<usize>()
                        })
                        .sum::<usize>()
            })
            .sum()
    }
}

/// Descending score, then ascending id.
fn ranked(a: (&FacetId, f64), b: (&FacetId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

/// Aggregates a parent's score from its children's scores. `None` for no children.
pub fn aggregate_children(child_scores: &[f64], aggregation: Aggregation, k: usize) -> Option<f64> {
    if child_scores.is_empty() {
        return None;
    }
    let mut sorted = child_scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top = &sorted[..k.clamp(1, sorted.len())];
    Some(match aggregation {
        Aggregation::Max => top[0],
        Aggregation::Avg => top.iter().sum::<f64>() / top.len() as f64,
    })
}

pub fn build_fixed_level(
    taxonomy: &Taxonomy,
    scores: &FacetScoreMap,
    config: &BuildConfig,
) -> Result<RankedTree, TreeError> {
    if config.top_k_children == 0 || config.page_size_level1 == 0 || config.page_size_level2 == 0 {
        return Err(TreeError::InvalidConfig("k and page sizes must be >= 1"));
    }

    let mut groups: BTreeMap<&FacetId, Vec<RankedLeaf>> = BTreeMap::new();
    for (id, &score) in &scores.scores {
        if !taxonomy.is_leaf(id.as_str()) {
            return Err(TreeError::UnknownFacet(id.clone()));
        }
        if taxonomy.depth() != 2 {
            return Err(TreeError::UnsupportedDepth(taxonomy.depth()));
        }
        if !score.is_finite() || score < 0.0 {
            return Err(TreeError::BadScore(id.clone()));
        }
        let parent = taxonomy
            .parent(id.as_str())
            .expect("level-2 leaf has a parent");
        groups.entry(parent).or_default().push(RankedLeaf {
            id: id.clone(),
            score,
        });
    }

    let mut parents: Vec<(FacetId, f64, Vec<RankedLeaf>)> = groups
        .into_iter()
        .map(|(parent, mut children)| {
            children.sort_by(|a, b| ranked((&a.id, a.score), (&b.id, b.score)));
            let child_scores: Vec<f64> = children.iter().map(|c| c.score).collect();
            let agg = aggregate_children(&child_scores, config.aggregation, config.top_k_children)
                .expect("groups are non-empty");
            (parent.clone(), agg, children)
        })
        .collect();
    parents.sort_by(|a, b| ranked((&a.0, a.1), (&b.0, b.1)));

    let parent_pages = parents.chunks(config.page_size_level1).count();
    let pages = parents
        .chunks(config.page_size_level1)
        .enumerate()
        .map(|(i, chunk)| ParentPage {
            parents: chunk
                .iter()
                .map(|(id, score, children)| {
                    let n = children.chunks(config.page_size_level2).count();
                    RankedParent {
                        id: id.clone(),
                        score: *score,
                        child_pages: children
                            .chunks(config.page_size_level2)
                            .enumerate()
                            .map(|(j, c)| ChildPage {
                                children: c.to_vec(),
                                more: j + 1 < n,
                            })
                            .collect(),
                    }
                })
                .collect(),
            more: i + 1 < parent_pages,
        })
        .collect();
    Ok(RankedTree { pages })
}

/// One line of the rendered tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisplayItem {
    Facet {
        id: FacetId,
        level: u32,
        score: f64,
    },
    /// Reveals the next child page of `parent`.
    ChildMore {
        parent: FacetId,
    },
    /// Reveals the next page of level-1 facets.
    PageMore,
}

/// Which page is shown at each level. Child page indexes align with the
/// parents of the current level-1 page.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ViewState {
    pub page: usize,
    pub child_pages: Vec<usize>,
}

impl ViewState {
    pub fn initial(tree: &RankedTree) -> Self {
        ViewState {
            page: 0,
            child_pages: vec![0; tree.pages.first().map_or(0, |p| p.parents.len())],
        }
    }

    /// The view after clicking `item`, or `None` when `item` is a facet.
    pub fn after_click(&self, tree: &RankedTree, item: &DisplayItem) -> Option<ViewState> {
        match item {
            DisplayItem::Facet { .. } => None,
            DisplayItem::PageMore => {
                let page = self.page + 1;
                Some(ViewState {
                    page,
                    child_pages: vec![0; tree.pages.get(page).map_or(0, |p| p.parents.len())],
                })
            }
            DisplayItem::ChildMore { parent } => {
                let slot = tree.pages[self.page]
                    .parents
                    .iter()
                    .position(|p| &p.id == parent)?;
                let mut next = self.clone();
                next.child_pages[slot] += 1;
                Some(next)
            }
        }
    }
}

/// Reading order of the view: each parent, its visible children, its child
/// marker; then the page marker.
pub fn display_items(tree: &RankedTree, view: &ViewState) -> Vec<DisplayItem> {
    let Some(page) = tree.pages.get(view.page) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (slot, parent) in page.parents.iter().enumerate() {
        out.push(DisplayItem::Facet {
            id: parent.id.clone(),
            level: 1,
            score: parent.score,
        });
        let shown = view.child_pages.get(slot).copied().unwrap_or(0);
        if let Some(cp) = parent.child_pages.get(shown) {
            out.extend(cp.children.iter().map(|c| DisplayItem::Facet {
                id: c.id.clone(),
                level: 2,
                score: c.score,
            }));
            if cp.more {
                out.push(DisplayItem::ChildMore {
                    parent: parent.id.clone(),
                });
            }
        }
    }
    if page.more {
        out.push(DisplayItem::PageMore);
    }
    out
}

/// Reading order of the initial view.
pub fn flatten_display_order(tree: &RankedTree) -> Vec<DisplayItem> {
    display_items(tree, &ViewState::initial(tree))
}

/// `level<TAB>id<TAB>score` lines, level-2 lines indented, markers as `MORE`.
pub fn render_text(items: &[DisplayItem]) -> String {
    let mut out = String::new();
    for item in items {
        match item {
            DisplayItem::Facet { id, level, score } => {
                let indent = "  ".repeat(*level as usize - 1);
                let _ = writeln!(out, "{indent}{level}\t{id}\t{score}");
            }
            DisplayItem::ChildMore { .. } => out.push_str("  MORE\n"),
            DisplayItem::PageMore => out.push_str("MORE\n"),
        }
    }
    out
}
