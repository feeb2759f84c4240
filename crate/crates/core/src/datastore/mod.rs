//! Venues, ratings, requests and relevance judgments.
//!
//! On-disk layout of a dataset directory:
//!
//! | file              | format                                                    |
//! |-------------------|-----------------------------------------------------------|
//! | `dataset.json`    | manifest: file names, rating scale, thresholds            |
//! | `taxonomy.json`   | flat node array (or nested export, see manifest)          |
//! | `venues.jsonl`    | `{"id", "facets": [..]}`                                  |
//! | `ratings.csv`     | `user,venue,value` with header                            |
//! | `requests.jsonl`  | `{"request_id", "user", "query", "results": [..]}`        |
//! | `qrels.txt`       | `request_id 0 venue grade`                                |

mod io;
mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{FacetId, Taxonomy, TaxonomyError};

pub use io::{load_dataset, write_dataset, DatasetManifest, DatasetPaths, TaxonomyFormat};
pub use synth::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: parse error: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("{file} record {record}: integrity error: {msg}")]
    Integrity {
        file: String,
        record: usize,
        msg: String,
    },
    #[error("venue {venue}: facet {facet} is not a leaf of the taxonomy")]
    FacetNotInTaxonomy { venue: String, facet: FacetId },
    #[error("taxonomy: {0}")]
    Taxonomy(#[from] TaxonomyError),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Venue {
    pub id: String,
    pub facets: BTreeSet<FacetId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub user: String,
    pub venue: String,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredResult {
    pub venue: String,
    /// Engine estimate of P(rel = 1 | q), in `[0, 1]`.
    pub relevance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestCase {
    pub request_id: String,
    pub user: String,
    pub query: String,
    /// Sorted by relevance descending, venue id ascending.
    pub results: Vec<ScoredResult>,
}

impl RequestCase {
    /// Puts results into canonical order.
    pub fn normalize(&mut self) {
        self.results.sort_by(|a, b| {
            b.relevance
                .total_cmp(&a.relevance)
                .then_with(|| a.venue.cmp(&b.venue))
        });
    }
}

/// Graded judgments keyed by request id, then venue id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JudgmentSet {
    grades: BTreeMap<String, BTreeMap<String, i64>>,
}

impl JudgmentSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, request: &str, venue: &str, grade: i64) {
        self.grades
            .entry(request.to_owned())
            .or_default()
            .insert(venue.to_owned(), grade);
    }

    pub fn grade(&self, request: &str, venue: &str) -> Option<i64> {
        self.grades.get(request)?.get(venue).copied()
    }

    pub fn is_relevant(&self, request: &str, venue: &str, relevant_min: i64) -> bool {
        self.grade(request, venue)
            .is_some_and(|g| g >= relevant_min)
    }

    pub fn len(&self) -> usize {
        self.grades.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(request, venue, grade)` in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, i64)> {
        self.grades.iter().flat_map(|(r, per_venue)| {
            per_venue
                .iter()
                .map(move |(v, g)| (r.as_str(), v.as_str(), *g))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: i64,
    pub max: i64,
    /// Ratings `>= positive_min` count as positive.
    pub positive_min: i64,
}

impl Default for RatingScale {
    fn default() -> Self {
        RatingScale {
            min: 0,
            max: 4,
            positive_min: 3,
        }
    }
}

/// A validated, immutable collection of everything one evaluation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    taxonomy: Taxonomy,
    venues: BTreeMap<String, Venue>,
    ratings: Vec<Rating>,
    requests: Vec<RequestCase>,
    judgments: JudgmentSet,
    scale: RatingScale,
    relevant_min: i64,
}

impl Dataset {
    /// Checks referential integrity and puts request results into canonical order.
    ///
    /// Errors carry the 1-based record index within the offending input.
    pub fn new(
        taxonomy: Taxonomy,
        venues: Vec<Venue>,
        ratings: Vec<Rating>,
        mut requests: Vec<RequestCase>,
        judgments: JudgmentSet,
        scale: RatingScale,
        relevant_min: i64,
    ) -> Result<Self, DataError> {
        let mut by_id = BTreeMap::new();
        for (i, venue) in venues.into_iter().enumerate() {
            if venue.facets.is_empty() {
                return Err(integrity(
                    "venues",
                    i + 1,
                    format!("venue {} has no facets", venue.id),
                ));
            }
            if let Some(f) = venue.facets.iter().find(|f| !taxonomy.is_leaf(f.as_str())) {
                return Err(DataError::FacetNotInTaxonomy {
                    venue: venue.id.clone(),
                    facet: f.clone(),
                });
            }
            if by_id.contains_key(&venue.id) {
                return Err(integrity(
                    "venues",
                    i + 1,
                    format!("duplicate venue {}", venue.id),
                ));
            }
            by_id.insert(venue.id.clone(), venue);
        }

        for (i, r) in ratings.iter().enumerate() {
            if !by_id.contains_key(&r.venue) {
                return Err(integrity(
                    "ratings",
                    i + 1,
                    format!("user {} rated unknown venue {}", r.user, r.venue),
                ));
            }
            if r.value < scale.min || r.value > scale.max {
                return Err(integrity(
                    "ratings",
                    i + 1,
                    format!(
                        "value {} outside scale {}..={}",
                        r.value, scale.min, scale.max
                    ),
                ));
            }
        }

        let mut request_ids = BTreeSet::new();
        for (i, req) in requests.iter_mut().enumerate() {
            if !request_ids.insert(req.request_id.clone()) {
                return Err(integrity(
                    "requests",
                    i + 1,
                    format!("duplicate request {}", req.request_id),
                ));
            }
            let mut seen = BTreeSet::new();
            for res in &req.results {
                if !by_id.contains_key(&res.venue) {
                    return Err(integrity(
                        "requests",
                        i + 1,
                        format!("result venue {} is unknown", res.venue),
                    ));
                }
                if !(0.0..=1.0).contains(&res.relevance) {
                    return Err(integrity(
                        "requests",
                        i + 1,
                        format!("relevance {} of {} outside [0,1]", res.relevance, res.venue),
                    ));
                }
                if !seen.insert(res.venue.as_str()) {
                    return Err(integrity(
                        "requests",
                        i + 1,
                        format!("venue {} listed twice", res.venue),
                    ));
                }
            }
            req.normalize();
        }

        for (i, (request, venue, _)) in judgments.iter().enumerate() {
            if !request_ids.contains(request) {
                return Err(integrity(
                    "judgments",
                    i + 1,
                    format!("unknown request {request}"),
                ));
            }
            if !by_id.contains_key(venue) {
                return Err(integrity(
                    "judgments",
                    i + 1,
                    format!("unknown venue {venue}"),
                ));
            }
        }

        Ok(Dataset {
            taxonomy,
            venues: by_id,
            ratings,
            requests,
            judgments,
            scale,
            relevant_min,
        })
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn venue(&self, id: &str) -> Option<&Venue> {
        self.venues.get(id)
    }

    pub fn venues(&self) -> impl Iterator<Item = &Venue> {
        self.venues.values()
    }

    pub fn venue_facets(&self, id: &str) -> &BTreeSet<FacetId> {
        static EMPTY: BTreeSet<FacetId> = BTreeSet::new();
        self.venues.get(id).map(|v| &v.facets).unwrap_or(&EMPTY)
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn requests(&self) -> &[RequestCase] {
        &self.requests
    }

    pub fn request(&self, id: &str) -> Option<&RequestCase> {
        self.requests.iter().find(|r| r.request_id == id)
    }

    pub fn judgments(&self) -> &JudgmentSet {
        &self.judgments
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn positive_min(&self) -> i64 {
        self.scale.positive_min
    }

    pub fn relevant_min(&self) -> i64 {
        self.relevant_min
    }

    /// Users appearing in ratings or requests, sorted.
    pub fn users(&self) -> BTreeSet<&str> {
        self.ratings
            .iter()
            .map(|r| r.user.as_str())
            .chain(self.requests.iter().map(|r| r.user.as_str()))
            .collect()
    }
}

/// Union of the facets of every retrieved venue: the ranking universe of a request.
pub fn candidate_facets(dataset: &Dataset, request: &RequestCase) -> BTreeSet<FacetId> {
    request
        .results
        .iter()
        .flat_map(|r| dataset.venue_facets(&r.venue).iter().cloned())
        .collect()
}

fn integrity(file: &str, record: usize, msg: String) -> DataError {
    DataError::Integrity {
        file: file.to_owned(),
        record,
        msg,
    }
}
