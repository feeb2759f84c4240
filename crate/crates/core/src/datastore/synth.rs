//! Seeded synthetic datasets with a skewed facet popularity.
//!
//! Users prefer one or two level-1 categories and like a subset of their leaves.
//! Each request targets one preferred category; the engine score favours venues
//! of that category only slightly, so relevant venues are often buried. Only
//! on-target venues carrying a leaf the user likes can be judged relevant.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    DataError, Dataset, JudgmentSet, Rating, RatingScale, RequestCase, ScoredResult, Venue,
};
use crate::taxonomy::{FacetId, FacetNode, Taxonomy};

const CATEGORY_NOUNS: &[&str] = &[
    "Restaurant",
    "Bar",
    "Museum",
    "Park",
    "Shop",
    "Cafe",
    "Theater",
    "Gym",
    "Hotel",
    "Market",
    "Gallery",
    "Club",
    "Stadium",
    "Beach",
    "School",
    "Church",
];

const MODIFIERS: &[&str] = &[
    "Thai", "Sushi", "Italian", "Vegan", "Rooftop", "Craft", "Modern", "Vintage", "Jazz", "Sports",
    "Science", "Dog", "Water", "Night", "Book", "Wine", "Coffee", "Burger", "Taco", "Seafood",
    "Indie", "Family", "Local", "Grand", "Urban", "Garden", "Classic", "Polish", "Korean", "Greek",
];

/// Share of a result list drawn from the request's target category.
const ON_TARGET_SHARE: f64 = 0.3;
/// Engine-score bonus for on-target venues; the rest is uniform noise.
const ENGINE_BOOST: f64 = 0.15;
/// Chance that an on-target venue the user likes is judged relevant.
const RELEVANT_CHANCE: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub users: usize,
    pub venues: usize,
    pub level1_count: usize,
    pub level2_count: usize,
    pub ratings_per_user: usize,
    pub results_per_request: usize,
    pub positive_fraction: f64,
    pub requests_per_user: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            users: 26,
            venues: 120,
            level1_count: 10,
            level2_count: 50,
            ratings_per_user: 60,
            results_per_request: 20,
            positive_fraction: 0.6,
            requests_per_user: 2,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), DataError> {
        let counts = [
            ("users", self.users),
            ("venues", self.venues),
            ("level1_count", self.level1_count),
            ("level2_count", self.level2_count),
            ("ratings_per_user", self.ratings_per_user),
            ("results_per_request", self.results_per_request),
            ("requests_per_user", self.requests_per_user),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, n)| *n == 0) {
            return Err(DataError::InvalidSpec(format!("{name} must be at least 1")));
        }
        if !(0.0..=1.0).contains(&self.positive_fraction) {
            return Err(DataError::InvalidSpec(
                "positive_fraction must lie in [0, 1]".into(),
            ));
        }
        if self.level2_count < self.level1_count {
            return Err(DataError::InvalidSpec(
                "level2_count must be >= level1_count (every category needs a child)".into(),
            ));
        }
        if self.ratings_per_user > self.venues || self.results_per_request > self.venues {
            return Err(DataError::InvalidSpec(
                "ratings_per_user and results_per_request cannot exceed venues".into(),
            ));
        }
        Ok(())
    }
}

fn width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len().max(2)
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

struct UserTaste {
    categories: Vec<usize>,
    liked: BTreeSet<usize>,
}

/// Builds a dataset that is a pure function of `(seed, spec)`.
pub fn generate_synthetic(seed: u64, spec: &SyntheticSpec) -> Result<Dataset, DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l1 = spec.level1_count;
    let l2 = spec.level2_count;

    let cat_ids: Vec<FacetId> = (0..l1)
        .map(|i| FacetId::new(format!("c{i:0w$}", w = width(l1))))
        .collect();
    let leaf_ids: Vec<FacetId> = (0..l2)
        .map(|j| FacetId::new(format!("s{j:0w$}", w = width(l2).max(3))))
        .collect();
    let cat_noun = |i: usize| {
        let noun = CATEGORY_NOUNS[i % CATEGORY_NOUNS.len()];
        match i / CATEGORY_NOUNS.len() {
            0 => noun.to_owned(),
            k => format!("{noun} {}", k + 1),
        }
    };
    let leaf_parent = |j: usize| j % l1;

    let mut nodes = Vec::with_capacity(l1 + l2);
    for (i, id) in cat_ids.iter().enumerate() {
        nodes.push(FacetNode {
            id: id.clone(),
            label: cat_noun(i),
            parent: None,
            level: 1,
        });
    }
    for (j, id) in leaf_ids.iter().enumerate() {
        let rank = j / l1;
        let modifier = MODIFIERS[rank % MODIFIERS.len()];
        let label = match rank / MODIFIERS.len() {
            0 => format!("{modifier} {}", cat_noun(leaf_parent(j))),
            k => format!("{modifier} {} {}", cat_noun(leaf_parent(j)), k + 1),
        };
        nodes.push(FacetNode {
            id: id.clone(),
            label,
            parent: Some(cat_ids[leaf_parent(j)].clone()),
            level: 2,
        });
    }
    let taxonomy = Taxonomy::from_nodes(nodes)?;

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); l1];
    for j in 0..l2 {
        children[leaf_parent(j)].push(j);
    }

    // Zipf-like popularity over a random permutation of leaves.
    let mut order: Vec<usize> = (0..l2).collect();
    order.shuffle(&mut rng);
    let mut leaf_weight = vec![0.0; l2];
    for (rank, &j) in order.iter().enumerate() {
        leaf_weight[j] = 1.0 / ((rank + 1) as f64).powf(1.1);
    }
    let leaf_dist = WeightedIndex::new(&leaf_weight).expect("positive weights");

    let venue_w = width(spec.venues).max(3);
    let mut venue_leaves: Vec<BTreeSet<usize>> = Vec::with_capacity(spec.venues);
    for _ in 0..spec.venues {
        let primary = leaf_dist.sample(&mut rng);
        let mut set = BTreeSet::from([primary]);
        let extra = match rng.gen_range(0..10) {
            0..=5 => 0,
            6..=8 => 1,
            _ => 2,
        };
        let siblings: Vec<usize> = children[leaf_parent(primary)]
            .iter()
            .copied()
            .filter(|&s| s != primary)
            .collect();
        for _ in 0..extra {
            if let Some(&s) = siblings.choose(&mut rng) {
                set.insert(s);
            }
        }
        venue_leaves.push(set);
    }
    let venue_id = |v: usize| format!("v{v:0w$}", w = venue_w);
    let venues: Vec<Venue> = venue_leaves
        .iter()
        .enumerate()
        .map(|(v, leaves)| Venue {
            id: venue_id(v),
            facets: leaves.iter().map(|&j| leaf_ids[j].clone()).collect(),
        })
        .collect();
    let venue_cats: Vec<BTreeSet<usize>> = venue_leaves
        .iter()
        .map(|ls| ls.iter().map(|&j| leaf_parent(j)).collect())
        .collect();

    let mut cat_weight = vec![0.0; l1];
    for (v, cats) in venue_cats.iter().enumerate() {
        for &c in cats {
            cat_weight[c] += 1.0 / venue_cats[v].len() as f64;
        }
    }
    let populated: Vec<usize> = (0..l1).filter(|&c| cat_weight[c] > 0.0).collect();

    let user_w = width(spec.users);
    let mut tastes = Vec::with_capacity(spec.users);
    for _ in 0..spec.users {
        let want = if rng.gen_bool(0.5) { 1 } else { 2 }.min(populated.len());
        let mut categories: Vec<usize> = populated
            .choose_multiple_weighted(&mut rng, want, |&c| cat_weight[c])
            .expect("valid weights")
            .copied()
            .collect();
        categories.sort_unstable();
        let mut liked = BTreeSet::new();
        for &c in &categories {
            for &j in &children[c] {
                if rng.gen_bool(0.5) {
                    liked.insert(j);
                }
            }
            liked.insert(*children[c].choose(&mut rng).expect("category has a child"));
        }
        tastes.push(UserTaste { categories, liked });
    }

    let mut ratings = Vec::with_capacity(spec.users * spec.ratings_per_user);
    for (u, taste) in tastes.iter().enumerate() {
        let mut rated: Vec<usize> =
            index::sample(&mut rng, spec.venues, spec.ratings_per_user).into_vec();
        rated.sort_unstable();
        for v in rated {
            let likes = venue_leaves[v].iter().any(|j| taste.liked.contains(j));
            let prefers = venue_cats[v].iter().any(|c| taste.categories.contains(c));
            let affinity = if likes {
                1.0
            } else if prefers {
                0.8
            } else {
                0.2
            };
            let value = if rng.gen_bool(spec.positive_fraction * affinity) {
                rng.gen_range(3..=4)
            } else {
                rng.gen_range(0..=2)
            };
            ratings.push(Rating {
                user: format!("u{u:0w$}", w = user_w),
                venue: venue_id(v),
                value,
            });
        }
    }

    let mut requests = Vec::new();
    let mut judgments = JudgmentSet::new();
    for (u, taste) in tastes.iter().enumerate() {
        let user = format!("u{u:0w$}", w = user_w);
        for k in 0..spec.requests_per_user {
            let target = taste.categories[k % taste.categories.len()];
            let (inside, outside): (Vec<usize>, Vec<usize>) =
                (0..spec.venues).partition(|&v| venue_cats[v].contains(&target));
            let share = (spec.results_per_request as f64 * ON_TARGET_SHARE).round() as usize;
            let n_in = inside.len().min(share.max(1));
            let n_out = (spec.results_per_request - n_in).min(outside.len());
            let n_in = (spec.results_per_request - n_out).min(inside.len());
            let mut picked: Vec<usize> = index::sample(&mut rng, inside.len(), n_in)
                .into_iter()
                .map(|i| inside[i])
                .chain(
                    index::sample(&mut rng, outside.len(), n_out)
                        .into_iter()
                        .map(|i| outside[i]),
                )
                .collect();
            picked.sort_unstable();

            let request_id = format!("{user}-q{k}");
            let mut grades = BTreeMap::new();
            let mut results = Vec::with_capacity(picked.len());
            for &v in &picked {
                let on_target = venue_cats[v].contains(&target);
                let engine = (1.0 - ENGINE_BOOST) * rng.gen::<f64>()
                    + if on_target { ENGINE_BOOST } else { 0.0 };
                results.push(ScoredResult {
                    venue: venue_id(v),
                    relevance: round6(engine.max(0.01)),
                });
                let likes = venue_leaves[v].iter().any(|j| taste.liked.contains(j));
                let grade = if on_target && likes && rng.gen_bool(RELEVANT_CHANCE) {
                    rng.gen_range(1..=2)
                } else {
                    0
                };
                grades.insert(venue_id(v), grade);
            }
            if grades.values().all(|&g| g == 0) {
                // Guarantee one relevant venue, preferring one the user would like.
                let score = |v: usize| {
                    let likes = venue_leaves[v].iter().any(|j| taste.liked.contains(j));
                    u8::from(venue_cats[v].contains(&target)) + 2 * u8::from(likes)
                };
                let best = picked.iter().map(|&v| score(v)).max().unwrap_or(0);
                let pool: Vec<usize> = picked
                    .iter()
                    .copied()
                    .filter(|&v| score(v) == best)
                    .collect();
                if let Some(&v) = pool.choose(&mut rng) {
                    grades.insert(venue_id(v), 1);
                }
            }
            for (v, g) in &grades {
                judgments.insert(&request_id, v, *g);
            }
            let mut case = RequestCase {
                request_id,
                user: user.clone(),
                query: format!("{} near me", cat_noun(target).to_lowercase()),
                results,
            };
            case.normalize();
            requests.push(case);
        }
    }

    Dataset::new(
        taxonomy,
        venues,
        ratings,
        requests,
        judgments,
        RatingScale::default(),
        1,
    )
}
