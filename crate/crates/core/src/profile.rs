//! Per-user and global t-facet preference statistics.
//!
//! A venue rated at or above the positive threshold adds one count to each of its
//! facets. Every rating, positive or not, counts towards the denominator.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::datastore::{Dataset, Rating};
use crate::taxonomy::FacetId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user: String,
    pub total_rated: u64,
    pub positive_count: BTreeMap<FacetId, u64>,
}

impl UserProfile {
    /// P(f | θ_u): share of the user's rated venues that were positive and carry `f`.
    pub fn facet_prior(&self, facet: &str) -> f64 {
        match self.positive_count.get(facet) {
            Some(&n) if self.total_rated > 0 => n as f64 / self.total_rated as f64,
            _ => 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.positive_count.is_empty()
    }

    pub fn facets(&self) -> impl Iterator<Item = &FacetId> {
        self.positive_count.keys()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalStats {
    pub global_total_rated: u64,
    pub global_positive_count: BTreeMap<FacetId, u64>,
}

impl GlobalStats {
    /// P_r(f): chance that a random rating is positive and on a venue carrying `f`.
    pub fn facet_prior(&self, facet: &str) -> f64 {
        match self.global_positive_count.get(facet) {
            Some(&n) if self.global_total_rated > 0 => n as f64 / self.global_total_rated as f64,
            _ => 0.0,
        }
    }
}

fn tally<'a>(
    dataset: &Dataset,
    ratings: impl Iterator<Item = &'a Rating>,
    positive_min: i64,
) -> (u64, BTreeMap<FacetId, u64>) {
    let mut total = 0;
    let mut counts = BTreeMap::new();
    for r in ratings {
        total += 1;
        if r.value >= positive_min {
            for f in dataset.venue_facets(&r.venue) {
                *counts.entry(f.clone()).or_insert(0) += 1;
            }
        }
    }
    (total, counts)
}

pub fn build_profile(dataset: &Dataset, user: &str, positive_min: i64) -> UserProfile {
    let (total_rated, positive_count) = tally(
        dataset,
        dataset.ratings().iter().filter(|r| r.user == user),
        positive_min,
    );
    UserProfile {
        user: user.to_owned(),
        total_rated,
        positive_count,
    }
}

pub fn build_global_stats(dataset: &Dataset, positive_min: i64) -> GlobalStats {
    let (global_total_rated, global_positive_count) =
        tally(dataset, dataset.ratings().iter(), positive_min);
    GlobalStats {
        global_total_rated,
        global_positive_count,
    }
}

/// Profiles for every user of the dataset, keyed by user id.
pub fn build_all_profiles(dataset: &Dataset, positive_min: i64) -> BTreeMap<String, UserProfile> {
    let mut by_user: BTreeMap<&str, Vec<&Rating>> = BTreeMap::new();
    for user in dataset.users() {
        by_user.entry(user).or_default();
    }
    for r in dataset.ratings() {
        by_user.entry(r.user.as_str()).or_default().push(r);
    }
    by_user
        .into_iter()
        .map(|(user, ratings)| {
            let (total_rated, positive_count) = tally(dataset, ratings.into_iter(), positive_min);
            (
                user.to_owned(),
                UserProfile {
                    user: user.to_owned(),
                    total_rated,
                    positive_count,
                },
            )
        })
        .collect()
}
