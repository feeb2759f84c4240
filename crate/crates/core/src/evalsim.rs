//! Simulated-user evaluation of ranked facet trees.
//!
//! The simulated user looks at the rendered tree and may click a facet (which
//! filters the result list to venues under that facet, replacing any earlier
//! filter) or a "More" marker (which pages the tree). A request succeeds once
//! a relevant venue sits within the top `success_top_n` of the current list.
//!
//! `#Actions` is the length of the shortest successful click sequence. Among
//! shortest sequences the one whose clicked display positions are
//! lexicographically smallest is chosen; `F-Scan` sums those 1-based positions
//! and adds the rank of the first relevant venue in the final list.
//!
//! Unreachable requests cost `max_click_depth + max_more_clicks + 1` actions and
//! an F-Scan equal to every display item of the tree plus the result count.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coverage::CoverageKind;
use crate::datastore::{candidate_facets, Dataset, JudgmentSet, RequestCase, ScoredResult};
use crate::profile::{build_all_profiles, build_global_stats, GlobalStats, UserProfile};
use crate::scoring::{score_request, FacetScoreMap, ScoringConfig, ScoringError};
use crate::taxonomy::{FacetId, Taxonomy};
use crate::treebuild::{
    build_fixed_level, display_items, BuildConfig, DisplayItem, RankedTree, TreeError, ViewState,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("request {request}: {source}")]
    Scoring {
        request: String,
        #[source]
        source: ScoringError,
    },
    #[error("request {request}: {source}")]
    Tree {
        request: String,
        #[source]
        source: TreeError,
    },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub success_top_n: usize,
    pub relevant_min: i64,
    pub max_more_clicks: usize,
    pub max_click_depth: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            success_top_n: 5,
            relevant_min: 1,
            max_more_clicks: 5,
            max_click_depth: 2,
        }
    }
}

impl SimConfig {
    /// Defaults with the click depth set to the taxonomy depth.
    pub fn for_taxonomy(taxonomy: &Taxonomy) -> Self {
        SimConfig {
            max_click_depth: taxonomy.depth() as usize,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.success_top_n == 0 || self.max_more_clicks == 0 || self.max_click_depth == 0 {
            return Err(EvalError::InvalidConfig(
                "success_top_n, max_more_clicks and max_click_depth must be >= 1",
            ));
        }
        if self.relevant_min < 0 {
            return Err(EvalError::InvalidConfig("relevant_min must be >= 0"));
        }
        Ok(())
    }

    pub fn penalty_actions(&self) -> usize {
        self.max_click_depth + self.max_more_clicks + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub request_id: String,
    pub actions: usize,
    pub f_scan: usize,
    pub reachable: bool,
    /// Clicked items along the chosen path (`MORE` for markers).
    pub path: Vec<String>,
}

/// Results carrying `selected` (a leaf) or any leaf below it (a parent), in
/// their original order.
pub fn filter_results<'a>(
    dataset: &Dataset,
    request: &'a RequestCase,
    selected: &str,
) -> Vec<&'a ScoredResult> {
    let leaves: BTreeSet<FacetId> = dataset
        .taxonomy()
        .leaf_descendants(selected)
        .into_iter()
        .collect();
    request
        .results
        .iter()
        .filter(|r| !dataset.venue_facets(&r.venue).is_disjoint(&leaves))
        .collect()
}

fn first_relevant<'a>(
    results: impl IntoIterator<Item = &'a ScoredResult>,
    judgments: &JudgmentSet,
    request_id: &str,
    relevant_min: i64,
) -> Option<usize> {
    results
        .into_iter()
        .position(|r| judgments.is_relevant(request_id, &r.venue, relevant_min))
        .map(|p| p + 1)
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct SimState {
    view: ViewState,
    filter: Option<FacetId>,
    facet_clicks: usize,
    more_clicks: usize,
}

struct SearchNode {
    state: SimState,
    parent: Option<usize>,
    position: usize,
    label: String,
}

/// Breadth-first search over click sequences; see the module docs for costs.
pub fn simulate(
    tree: &RankedTree,
    dataset: &Dataset,
    request: &RequestCase,
    judgments: &JudgmentSet,
    config: &SimConfig,
) -> SimOutcome {
    let id = request.request_id.as_str();
    let success_rank = |rank: Option<usize>| rank.filter(|&r| r <= config.success_top_n);

    if let Some(rank) = success_rank(first_relevant(
        &request.results,
        judgments,
        id,
        config.relevant_min,
    )) {
        return SimOutcome {
            request_id: id.to_owned(),
            actions: 0,
            f_scan: rank,
            reachable: true,
            path: Vec::new(),
        };
    }

    let mut filtered_rank: BTreeMap<FacetId, Option<usize>> = BTreeMap::new();
    let mut rank_under = |facet: &FacetId| -> Option<usize> {
        *filtered_rank.entry(facet.clone()).or_insert_with(|| {
            success_rank(first_relevant(
                filter_results(dataset, request, facet.as_str()),
                judgments,
                id,
                config.relevant_min,
            ))
        })
    };

    let start = SimState {
        view: ViewState::initial(tree),
        filter: None,
        facet_clicks: 0,
        more_clicks: 0,
    };
    let mut arena = vec![SearchNode {
        state: start.clone(),
        parent: None,
        position: 0,
        label: String::new(),
    }];
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([0usize]);

    while let Some(at) = queue.pop_front() {
        let state = arena[at].state.clone();
        for (pos, item) in display_items(tree, &state.view).iter().enumerate() {
            let (next, label) = match item {
                DisplayItem::Facet { id: facet, .. } => {
                    if state.facet_clicks >= config.max_click_depth {
                        continue;
                    }
                    (
                        SimState {
                            filter: Some(facet.clone()),
                            facet_clicks: state.facet_clicks + 1,
                            ..state.clone()
                        },
                        facet.to_string(),
                    )
                }
                marker => {
                    if state.more_clicks >= config.max_more_clicks {
                        continue;
                    }
                    let Some(view) = state.view.after_click(tree, marker) else {
                        continue;
                    };
                    (
                        SimState {
                            view,
                            more_clicks: state.more_clicks + 1,
                            ..state.clone()
                        },
                        "MORE".to_owned(),
                    )
                }
            };
            if !seen.insert(next.clone()) {
                continue;
            }
            let found = next.filter.as_ref().and_then(&mut rank_under);
            arena.push(SearchNode {
                state: next,
                parent: Some(at),
                position: pos + 1,
                label,
            });
            let node = arena.len() - 1;
            if let Some(rank) = found {
                let mut path = Vec::new();
                let mut scan = rank;
                let mut cursor = Some(node);
                while let Some(i) = cursor {
                    if arena[i].parent.is_some() {
                        scan += arena[i].position;
                        path.push(arena[i].label.clone());
                    }
                    cursor = arena[i].parent;
                }
                path.reverse();
                return SimOutcome {
                    request_id: id.to_owned(),
                    actions: path.len(),
                    f_scan: scan,
                    reachable: true,
                    path,
                };
            }
            queue.push_back(node);
        }
    }

    SimOutcome {
        request_id: id.to_owned(),
        actions: config.penalty_actions(),
        f_scan: tree.total_display_items() + request.results.len(),
        reachable: false,
        path: Vec::new(),
    }
}

pub fn count_actions(
    tree: &RankedTree,
    dataset: &Dataset,
    request: &RequestCase,
    judgments: &JudgmentSet,
    config: &SimConfig,
) -> usize {
    simulate(tree, dataset, request, judgments, config).actions
}

pub fn f_scan(
    tree: &RankedTree,
    dataset: &Dataset,
    request: &RequestCase,
    judgments: &JudgmentSet,
    config: &SimConfig,
) -> usize {
    simulate(tree, dataset, request, judgments, config).f_scan
}

/// Most Prob. (Person): the user's own positive-rating frequency.
pub fn baseline_most_probable_personal(profile: &UserProfile) -> FacetScoreMap {
    FacetScoreMap {
        scores: profile
            .facets()
            .map(|f| (f.clone(), profile.facet_prior(f.as_str())))
            .collect(),
        ..Default::default()
    }
}

/// Most Prob. (Collab): positive-rating frequency over all users.
pub fn baseline_most_probable_collab(global: &GlobalStats) -> FacetScoreMap {
    FacetScoreMap {
        scores: global
            .global_positive_count
            .keys()
            .map(|f| (f.clone(), global.facet_prior(f.as_str())))
            .collect(),
        ..Default::default()
    }
}

/// How a run scores facets.
#[derive(Debug, Clone, PartialEq)]
pub enum Scorer {
    Probabilistic(ScoringConfig),
    MostProbablePersonal { positive_min: i64 },
    MostProbableCollab { positive_min: i64 },
}

impl Scorer {
    /// Row label, e.g. `model1+cosine` or `most-prob-person`.
    pub fn label(&self) -> String {
        match self {
            Scorer::Probabilistic(c) => format!("{}+{}", c.model.name(), c.coverage.name()),
            Scorer::MostProbablePersonal { .. } => "most-prob-person".into(),
            Scorer::MostProbableCollab { .. } => "most-prob-collab".into(),
        }
    }

    fn positive_min(&self) -> i64 {
        match self {
            Scorer::Probabilistic(c) => c.positive_min,
            Scorer::MostProbablePersonal { positive_min }
            | Scorer::MostProbableCollab { positive_min } => *positive_min,
        }
    }

    fn describe(&self) -> serde_json::Value {
        match self {
            Scorer::Probabilistic(c) => {
                let embeddings = match &c.coverage {
                    CoverageKind::Exact => None,
                    CoverageKind::Cosine(table) => {
                        Some(hex::encode(Sha256::digest(table.to_text().as_bytes())))
                    }
                };
                serde_json::json!({
                    "model": c.model.name(),
                    "coverage": c.coverage.name(),
                    "embeddings_sha256": embeddings,
                    "background_n": c.background_n,
                    "c": c.c,
                    "epsilon": c.epsilon,
                    "positive_min": c.positive_min,
                })
            }
            other => serde_json::json!({
                "method": other.label(),
                "positive_min": other.positive_min(),
            }),
        }
    }

    /// Scores the candidates of one request.
    pub fn score(
        &self,
        dataset: &Dataset,
        profile: &UserProfile,
        global: &GlobalStats,
        request: &RequestCase,
    ) -> Result<FacetScoreMap, ScoringError> {
        let candidates = candidate_facets(dataset, request);
        match self {
            Scorer::Probabilistic(config) => {
                score_request(dataset, profile, global, request, config)
            }
            Scorer::MostProbablePersonal { .. } => {
                Ok(baseline_most_probable_personal(profile).restricted_to(&candidates))
            }
            Scorer::MostProbableCollab { .. } => {
                Ok(baseline_most_probable_collab(global).restricted_to(&candidates))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: String,
    pub aggregation: String,
    pub config_fingerprint: String,
    pub requests: usize,
    pub unreachable: usize,
    pub mean_actions: f64,
    pub mean_f_scan: f64,
    pub outcomes: Vec<SimOutcome>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// SHA-256 over the canonical JSON description of a run's configuration.
pub fn config_fingerprint(scorer: &Scorer, build: &BuildConfig, sim: &SimConfig) -> String {
    let description = serde_json::json!({
        "scorer": scorer.describe(),
        "build": build,
        "sim": sim,
    });
    hex::encode(Sha256::digest(description.to_string().as_bytes()))
}

/// Score, build and simulate one request.
pub fn evaluate_request(
    dataset: &Dataset,
    profile: &UserProfile,
    global: &GlobalStats,
    request: &RequestCase,
    scorer: &Scorer,
    build: &BuildConfig,
    sim: &SimConfig,
) -> Result<(FacetScoreMap, RankedTree, SimOutcome), EvalError> {
    let scores = scorer
        .score(dataset, profile, global, request)
        .map_err(|source| EvalError::Scoring {
            request: request.request_id.clone(),
            source,
        })?;
    let tree = build_fixed_level(dataset.taxonomy(), &scores, build).map_err(|source| {
        EvalError::Tree {
            request: request.request_id.clone(),
            source,
        }
    })?;
    let outcome = simulate(&tree, dataset, request, dataset.judgments(), sim);
    Ok((scores, tree, outcome))
}

/// Runs every request of `dataset` through scoring, tree building and simulation.
/// `jobs` sets the worker count; results do not depend on it.
pub fn evaluate_run(
    dataset: &Dataset,
    scorer: &Scorer,
    build: &BuildConfig,
    sim: &SimConfig,
    jobs: usize,
) -> Result<RunReport, EvalError> {
    sim.validate()?;
    let positive_min = scorer.positive_min();
    let profiles = build_all_profiles(dataset, positive_min);
    let global = build_global_stats(dataset, positive_min);
    let empty = UserProfile {
        user: String::new(),
        total_rated: 0,
        positive_count: BTreeMap::new(),
    };

    let run_one = |request: &RequestCase| {
        let profile = profiles.get(&request.user).unwrap_or(&empty);
        evaluate_request(dataset, profile, &global, request, scorer, build, sim).map(|r| r.2)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| EvalError::ThreadPool(e.to_string()))?;
    let outcomes: Vec<SimOutcome> = pool.install(|| {
        dataset
            .requests()
            .par_iter()
            .map(run_one)
            .collect::<Result<_, _>>()
    })?;

    let n = outcomes.len();
    let mean = |f: fn(&SimOutcome) -> usize| {
        if n == 0 {
            0.0
        } else {
            outcomes.iter().map(f).sum::<usize>() as f64 / n as f64
        }
    };
    Ok(RunReport {
        method: scorer.label(),
        aggregation: build.aggregation.name().to_owned(),
        config_fingerprint: config_fingerprint(scorer, build, sim),
        requests: n,
        unreachable: outcomes.iter().filter(|o| !o.reachable).count(),
        mean_actions: mean(|o| o.actions),
        mean_f_scan: mean(|o| o.f_scan),
        outcomes,
    })
}

/// Plain-text table: one row per method, F-Scan and #Actions per aggregation.
pub fn format_table(reports: &[RunReport]) -> String {
    let mut methods: Vec<&str> = Vec::new();
    for r in reports {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let cell = |method: &str, agg: &str| {
        reports
            .iter()
            .find(|r| r.method == method && r.aggregation == agg)
            .map(|r| {
                (
                    format!("{:.3}", r.mean_f_scan),
                    format!("{:.3}", r.mean_actions),
                )
            })
            .unwrap_or_else(|| ("-".into(), "-".into()))
    };
    let width = methods.iter().map(|m| m.len()).max().unwrap_or(0).max(14);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:^19}  {:^19}", "", "Max", "Avg");
    let _ = writeln!(
        out,
        "{:<width$}  {:>9} {:>9}  {:>9} {:>9}",
        "Scoring Method", "F-Scan", "#Actions", "F-Scan", "#Actions"
    );
    for m in methods {
        let (mf, ma) = cell(m, "max");
        let (af, aa) = cell(m, "avg");
        let _ = writeln!(out, "{m:<width$}  {mf:>9} {ma:>9}  {af:>9} {aa:>9}");
    }
    out
}
