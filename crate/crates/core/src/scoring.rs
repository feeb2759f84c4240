//! Step-1 relevance scores for leaf t-facets.
//!
//! Both models weight the user's profile facets by a query-conditioned posterior
//! and spread that mass to candidate facets through the coverage probability:
//!
//! ```text
//! P_r(f|q)      = 1/N · Σ_{m ≤ N} P(rel(d_m, q) = 1 | q) · [f ∈ facets(d_m)]
//! P(q|f)        = c · P_r(f|q) / P_r(f)
//! P(f_u|q, θ_u) = P(f_u|θ_u) · P(q|f_u) / Σ_{f'} P(f'|θ_u) · P(q|f')
//! model1(f_i)   = Σ_{f_u} P(f_u|q, θ_u) · cov(f_u, f_i)
//! model2(f_i)   = model1(f_i) / max(Σ_{f ∈ candidates} P_r(f|q) · cov(f, f_i), ε)
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::{coverage, CoverageError, CoverageKind};
use crate::datastore::{candidate_facets, Dataset, RequestCase};
use crate::profile::{build_global_stats, build_profile, GlobalStats, UserProfile};
use crate::taxonomy::FacetId;

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error("invalid scoring config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Model1,
    Model2,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Model1 => "model1",
            Model::Model2 => "model2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoringConfig {
    pub model: Model,
    pub coverage: CoverageKind,
    /// Number of top results used for the background distribution.
    pub background_n: usize,
    pub c: f64,
    /// Floor for the Model-2 denominator.
    pub epsilon: f64,
    pub positive_min: i64,
}

impl ScoringConfig {
    pub fn new(model: Model, coverage: CoverageKind) -> Self {
        ScoringConfig {
            model,
            coverage,
            background_n: 1,
            c: 1.0,
            epsilon: 1e-9,
            positive_min: 3,
        }
    }

    fn validate(&self) -> Result<(), ScoringError> {
        if self.background_n == 0 {
            return Err(ScoringError::InvalidConfig("background_n must be >= 1"));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(ScoringError::InvalidConfig(
                "c must be a positive finite number",
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ScoringError::InvalidConfig("epsilon must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FacetScoreMap {
    pub scores: BTreeMap<FacetId, f64>,
    /// Facets whose Model-2 denominator fell below epsilon.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub unsupported: BTreeSet<FacetId>,
}

impl FacetScoreMap {
    pub fn get(&self, facet: &str) -> Option<f64> {
        self.scores.get(facet).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Keeps exactly `candidates`, scoring absent ones 0.
    pub fn restricted_to(&self, candidates: &BTreeSet<FacetId>) -> FacetScoreMap {
        FacetScoreMap {
            scores: candidates
                .iter()
                .map(|f| (f.clone(), self.get(f.as_str()).unwrap_or(0.0)))
                .collect(),
            unsupported: self.unsupported.intersection(candidates).cloned().collect(),
        }
    }
}

/// P_r(f|q) for a single facet.
pub fn background_facet_given_query(
    dataset: &Dataset,
    request: &RequestCase,
    facet: &str,
    n: usize,
) -> f64 {
    let sum: f64 = request
        .results
        .iter()
        .take(n)
        .filter(|r| dataset.venue_facets(&r.venue).contains(facet))
        .map(|r| r.relevance)
        .sum();
    sum / n as f64
}

/// P_r(f|q) for every facet carried by a top-`n` result; facets absent here are 0.
pub fn background_distribution(
    dataset: &Dataset,
    request: &RequestCase,
    n: usize,
) -> BTreeMap<FacetId, f64> {
    let mut acc: BTreeMap<FacetId, f64> = BTreeMap::new();
    for r in request.results.iter().take(n) {
        for f in dataset.venue_facets(&r.venue) {
            *acc.entry(f.clone()).or_insert(0.0) += r.relevance;
        }
    }
    acc.values_mut().for_each(|v| *v /= n as f64);
    acc
}

/// P(q|f); 0 when the facet was never rated positively.
pub fn query_given_facet(
    global: &GlobalStats,
    dataset: &Dataset,
    request: &RequestCase,
    facet: &str,
    c: f64,
    n: usize,
) -> f64 {
    let prior = global.facet_prior(facet);
    if prior > 0.0 {
        c * background_facet_given_query(dataset, request, facet, n) / prior
    } else {
        0.0
    }
}

fn posterior_from(
    profile: &UserProfile,
    global: &GlobalStats,
    background: &BTreeMap<FacetId, f64>,
    c: f64,
) -> BTreeMap<FacetId, f64> {
    let weights: Vec<(FacetId, f64, f64)> = profile
        .facets()
        .map(|f| {
            let prior = profile.facet_prior(f.as_str());
            let global_prior = global.facet_prior(f.as_str());
            let support = if global_prior > 0.0 {
                c * background.get(f).copied().unwrap_or(0.0) / global_prior
            } else {
                0.0
            };
            (f.clone(), prior, prior * support)
        })
        .collect();
    let norm: f64 = weights.iter().map(|w| w.2).sum();
    if norm > 0.0 {
        return weights.into_iter().map(|(f, _, w)| (f, w / norm)).collect();
    }
    // No profile facet has query support: fall back to the renormalized prior.
    let prior_sum: f64 = weights.iter().map(|w| w.1).sum();
    if prior_sum > 0.0 {
        weights
            .into_iter()
            .map(|(f, p, _)| (f, p / prior_sum))
            .collect()
    } else {
        BTreeMap::new()
    }
}

/// P(f_u|q, θ_u) over the profile's facets. Empty for an empty profile.
pub fn user_facet_posterior(
    profile: &UserProfile,
    global: &GlobalStats,
    dataset: &Dataset,
    request: &RequestCase,
    config: &ScoringConfig,
) -> BTreeMap<FacetId, f64> {
    let background = background_distribution(dataset, request, config.background_n);
    posterior_from(profile, global, &background, config.c)
}

fn model1_sum(
    posterior: &BTreeMap<FacetId, f64>,
    facet: &str,
    kind: &CoverageKind,
) -> Result<f64, CoverageError> {
    let mut sum = 0.0;
    for (f_u, p) in posterior {
        sum += p * coverage(kind, f_u.as_str(), facet)?;
    }
    Ok(sum)
}

fn model2_denominator(
    background: &BTreeMap<FacetId, f64>,
    candidates: &BTreeSet<FacetId>,
    facet: &str,
    kind: &CoverageKind,
) -> Result<f64, CoverageError> {
    let mut sum = 0.0;
    for f in candidates {
        let bg = background.get(f).copied().unwrap_or(0.0);
        sum += bg * coverage(kind, f.as_str(), facet)?;
    }
    Ok(sum)
}

pub fn score_model1(
    profile: &UserProfile,
    global: &GlobalStats,
    dataset: &Dataset,
    request: &RequestCase,
    facet: &str,
    config: &ScoringConfig,
) -> Result<f64, ScoringError> {
    config.validate()?;
    let posterior = user_facet_posterior(profile, global, dataset, request, config);
    Ok(model1_sum(&posterior, facet, &config.coverage)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model2Score {
    pub score: f64,
    /// The denominator was below epsilon and got floored.
    pub unsupported: bool,
}

pub fn score_model2(
    profile: &UserProfile,
    global: &GlobalStats,
    dataset: &Dataset,
    request: &RequestCase,
    facet: &str,
    config: &ScoringConfig,
) -> Result<Model2Score, ScoringError> {
    config.validate()?;
    let background = background_distribution(dataset, request, config.background_n);
    let posterior = posterior_from(profile, global, &background, config.c);
    let numerator = model1_sum(&posterior, facet, &config.coverage)?;
    let candidates = candidate_facets(dataset, request);
    let denominator = model2_denominator(&background, &candidates, facet, &config.coverage)?;
    Ok(model2_ratio(numerator, denominator, config.epsilon))
}

fn model2_ratio(numerator: f64, denominator: f64, epsilon: f64) -> Model2Score {
    Model2Score {
        score: numerator / denominator.max(epsilon),
        unsupported: denominator < epsilon,
    }
}

/// Scores every candidate facet of `request` with precomputed user statistics.
pub fn score_request(
    dataset: &Dataset,
    profile: &UserProfile,
    global: &GlobalStats,
    request: &RequestCase,
    config: &ScoringConfig,
) -> Result<FacetScoreMap, ScoringError> {
    config.validate()?;
    let candidates = candidate_facets(dataset, request);
    let background = background_distribution(dataset, request, config.background_n);
    let posterior = posterior_from(profile, global, &background, config.c);
    let mut out = FacetScoreMap::default();
    for f in &candidates {
        let numerator = model1_sum(&posterior, f.as_str(), &config.coverage)?;
        let score = match config.model {
            Model::Model1 => numerator,
            Model::Model2 => {
                let denominator =
                    model2_denominator(&background, &candidates, f.as_str(), &config.coverage)?;
                let s = model2_ratio(numerator, denominator, config.epsilon);
                if s.unsupported {
                    out.unsupported.insert(f.clone());
                }
                s.score
            }
        };
        out.scores.insert(f.clone(), score);
    }
    Ok(out)
}

/// Builds the request user's profile and the global statistics, then scores.
pub fn score_all(
    dataset: &Dataset,
    request: &RequestCase,
    config: &ScoringConfig,
) -> Result<FacetScoreMap, ScoringError> {
    let profile = build_profile(dataset, &request.user, config.positive_min);
    let global = build_global_stats(dataset, config.positive_min);
    score_request(dataset, &profile, &global, request, config)
}
