//! Random instances and independent reference implementations for the
//! integration tests. Nothing here calls into the library's scoring, filtering
//! or simulation code: the oracles work from the raw instance tables.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use tfacet::datastore::{
    Dataset, JudgmentSet, Rating, RatingScale, RequestCase, ScoredResult, Venue,
};
use tfacet::taxonomy::{FacetId, FacetNode, Taxonomy};
use tfacet::treebuild::RankedTree;

pub const POSITIVE_MIN: i64 = 3;

/// Mixed tolerance: absolute near zero, relative for large magnitudes.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// (request id, user, results as generated; not sorted).
pub type RawRequest = (String, String, Vec<(String, f64)>);

#[derive(Debug, Clone)]
pub struct Instance {
    /// Parent id with its leaves, in id order.
    pub shape: Vec<(String, Vec<String>)>,
    pub venues: BTreeMap<String, BTreeSet<String>>,
    pub ratings: Vec<(String, String, i64)>,
    pub requests: Vec<RawRequest>,
    pub grades: BTreeMap<(String, String), i64>,
    pub embeddings: BTreeMap<String, Vec<f64>>,
}

pub struct Limits {
    pub parents: usize,
    pub leaves: usize,
    pub venues: usize,
    pub users: usize,
    pub results: usize,
    pub min_results: usize,
    /// Chance that a retrieved venue is judged relevant.
    pub relevant_rate: f64,
}

impl Limits {
    /// ≤ 5 users, ≤ 20 venues, ≤ 12 leaves (so ≤ 12 candidate facets).
    pub const SCORING: Limits = Limits {
        parents: 4,
        leaves: 12,
        venues: 20,
        users: 5,
        results: 20,
        min_results: 1,
        relevant_rate: 0.2,
    };
    /// ≤ 30 facets in total, ≤ 25 result venues.
    pub const SIMULATION: Limits = Limits {
        parents: 6,
        leaves: 24,
        venues: 25,
        users: 3,
        results: 25,
        min_results: 10,
        relevant_rate: 0.06,
    };
}

fn relevance(rng: &mut ChaCha8Rng) -> f64 {
    // Coarse values now and then so ties and zeros show up.
    if rng.gen_bool(0.3) {
        [0.0, 0.25, 0.5, 1.0][rng.gen_range(0..4)]
    } else {
        rng.gen()
    }
}

impl Instance {
    pub fn random(seed: u64, limits: &Limits) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_parents = rng.gen_range(1..=limits.parents);
        let n_leaves = rng.gen_range(n_parents..=limits.leaves.max(n_parents));
        let mut shape: Vec<(String, Vec<String>)> = (0..n_parents)
            .map(|p| (format!("P{p}"), Vec::new()))
            .collect();
        for l in 0..n_leaves {
            // Every parent gets at least one leaf.
            let p = if l < n_parents {
                l
            } else {
                rng.gen_range(0..n_parents)
            };
            let id = format!("l{l:02}");
            shape[p].1.push(id);
        }
        let leaves: Vec<String> = shape.iter().flat_map(|(_, ls)| ls.clone()).collect();

        let n_venues = rng.gen_range(limits.min_results.max(1)..=limits.venues);
        let mut venues = BTreeMap::new();
        for v in 0..n_venues {
            let k = rng.gen_range(1..=3.min(leaves.len()));
            let facets: BTreeSet<String> = leaves.choose_multiple(&mut rng, k).cloned().collect();
            venues.insert(format!("v{v:02}"), facets);
        }
        let venue_ids: Vec<String> = venues.keys().cloned().collect();

        let n_users = rng.gen_range(1..=limits.users);
        let users: Vec<String> = (0..n_users).map(|u| format!("u{u}")).collect();
        let mut ratings = Vec::new();
        for u in &users {
            // Some users rate nothing at all.
            let k = if rng.gen_bool(0.15) {
                0
            } else {
                rng.gen_range(1..=venue_ids.len())
            };
            for v in venue_ids.choose_multiple(&mut rng, k) {
                ratings.push((u.clone(), v.clone(), rng.gen_range(0..=4)));
            }
        }

        let mut requests = Vec::new();
        let mut grades = BTreeMap::new();
        for (i, u) in users.iter().enumerate() {
            let id = format!("q{i}");
            let lo = limits.min_results.clamp(1, venue_ids.len());
            let k = rng.gen_range(lo..=venue_ids.len().min(limits.results));
            let results: Vec<(String, f64)> = venue_ids
                .choose_multiple(&mut rng, k)
                .map(|v| (v.clone(), relevance(&mut rng)))
                .collect();
            for (v, _) in &results {
                let g = if rng.gen_bool(limits.relevant_rate) {
                    rng.gen_range(1..=2)
                } else {
                    0
                };
                grades.insert((id.clone(), v.clone()), g);
            }
            if limits.min_results > 1 && !grades.iter().any(|((q, _), g)| q == &id && *g > 0) {
                let (v, _) = results.choose(&mut rng).expect("non-empty results");
                grades.insert((id.clone(), v.clone()), 1);
            }
            requests.push((id, u.clone(), results));
        }

        let mut embeddings = BTreeMap::new();
        for id in shape.iter().map(|(p, _)| p).chain(&leaves) {
            let v: Vec<f64> = loop {
                let v: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
                if v.iter().any(|x| x.abs() > 1e-3) {
                    break v;
                }
            };
            embeddings.insert(id.clone(), v);
        }

        Instance {
            shape,
            venues,
            ratings,
            requests,
            grades,
            embeddings,
        }
    }

    pub fn taxonomy(&self) -> Taxonomy {
        let mut nodes = Vec::new();
        for (p, leaves) in &self.shape {
            nodes.push(FacetNode {
                id: FacetId::new(p.as_str()),
                label: format!("Parent {p}"),
                parent: None,
                level: 1,
            });
            for l in leaves {
                nodes.push(FacetNode {
                    id: FacetId::new(l.as_str()),
                    label: format!("Leaf {l} of {p}"),
                    parent: Some(FacetId::new(p.as_str())),
                    level: 2,
                });
            }
        }
        Taxonomy::from_nodes(nodes).expect("generated taxonomy is valid")
    }

    pub fn dataset(&self) -> Dataset {
        let venues = self
            .venues
            .iter()
            .map(|(id, fs)| Venue {
                id: id.clone(),
                facets: fs.iter().map(|f| FacetId::new(f.as_str())).collect(),
            })
            .collect();
        let ratings = self
            .ratings
            .iter()
            .map(|(u, v, x)| Rating {
                user: u.clone(),
                venue: v.clone(),
                value: *x,
            })
            .collect();
        let requests = self
            .requests
            .iter()
            .map(|(id, u, rs)| RequestCase {
                request_id: id.clone(),
                user: u.clone(),
                query: "query".into(),
                results: rs
                    .iter()
                    .map(|(v, r)| ScoredResult {
                        venue: v.clone(),
                        relevance: *r,
                    })
                    .collect(),
            })
            .collect();
        let mut judgments = JudgmentSet::new();
        for ((q, v), g) in &self.grades {
            judgments.insert(q, v, *g);
        }
        Dataset::new(
            self.taxonomy(),
            venues,
            ratings,
            requests,
            judgments,
            RatingScale::default(),
            1,
        )
        .expect("generated dataset is valid")
    }

    /// Results in engine order: relevance descending, venue id ascending.
    pub fn sorted_results(&self, request: usize) -> Vec<(String, f64)> {
        let mut rs = self.requests[request].2.clone();
        rs.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        rs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleModel {
    One,
    Two,
}

/// Literal evaluation of the probabilistic facet score for every candidate.
pub struct ScoringOracle<'a> {
    pub inst: &'a Instance,
    /// `None` for exact-match coverage.
    pub embeddings: Option<&'a BTreeMap<String, Vec<f64>>>,
    pub n: usize,
    pub c: f64,
    pub epsilon: f64,
}

impl ScoringOracle<'_> {
    pub fn coverage(&self, a: &str, b: &str) -> f64 {
        match self.embeddings {
            None => f64::from(u8::from(a == b)),
            Some(_) if a == b => 1.0,
            Some(e) => {
                let (x, y) = (&e[a], &e[b]);
                let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
                let nx = x.iter().map(|p| p * p).sum::<f64>().sqrt();
                let ny = y.iter().map(|q| q * q).sum::<f64>().sqrt();
                (dot / (nx * ny)).clamp(0.0, 1.0)
            }
        }
    }

    fn counts(&self, user: Option<&str>) -> (f64, BTreeMap<String, f64>) {
        let mut total = 0.0;
        let mut pos = BTreeMap::new();
        for (u, v, x) in &self.inst.ratings {
            if user.is_some_and(|want| want != u) {
                continue;
            }
            total += 1.0;
            if *x >= POSITIVE_MIN {
                for f in &self.inst.venues[v] {
                    *pos.entry(f.clone()).or_insert(0.0) += 1.0;
                }
            }
        }
        (total, pos)
    }

    pub fn background(&self, request: usize, f: &str) -> f64 {
        let rs = self.inst.sorted_results(request);
        let mut sum = 0.0;
        for (v, rel) in rs.iter().take(self.n) {
            if self.inst.venues[v].contains(f) {
                sum += rel;
            }
        }
        sum / self.n as f64
    }

    pub fn candidates(&self, request: usize) -> BTreeSet<String> {
        self.inst.requests[request]
            .2
            .iter()
            .flat_map(|(v, _)| self.inst.venues[v].iter().cloned())
            .collect()
    }

    /// P(f_u | q, θ_u) over the user's positively rated facets.
    pub fn posterior(&self, request: usize) -> BTreeMap<String, f64> {
        let user = &self.inst.requests[request].1;
        let (u_total, u_pos) = self.counts(Some(user));
        let (g_total, g_pos) = self.counts(None);
        let mut weight = BTreeMap::new();
        let mut prior = BTreeMap::new();
        for (f, n) in &u_pos {
            let p_u = n / u_total;
            let p_r = g_pos.get(f).copied().unwrap_or(0.0) / g_total;
            let q_given_f = if p_r > 0.0 {
                self.c * self.background(request, f) / p_r
            } else {
                0.0
            };
            weight.insert(f.clone(), q_given_f * p_u);
            prior.insert(f.clone(), p_u);
        }
        let z: f64 = weight.values().sum();
        if z > 0.0 {
            return weight.into_iter().map(|(f, w)| (f, w / z)).collect();
        }
        let z: f64 = prior.values().sum();
        if z > 0.0 {
            prior.into_iter().map(|(f, p)| (f, p / z)).collect()
        } else {
            BTreeMap::new()
        }
    }

    pub fn scores(&self, request: usize, model: OracleModel) -> BTreeMap<String, f64> {
        let post = self.posterior(request);
        let cands = self.candidates(request);
        let mut out = BTreeMap::new();
        for fi in &cands {
            let mut m1 = 0.0;
            for (fu, p) in &post {
                m1 += p * self.coverage(fu, fi);
            }
            let score = match model {
                OracleModel::One => m1,
                OracleModel::Two => {
                    let mut d = 0.0;
                    for f in &cands {
                        d += self.background(request, f) * self.coverage(f, fi);
                    }
                    m1 / d.max(self.epsilon)
                }
            };
            out.insert(fi.clone(), score);
        }
        out
    }
}

/// Positive-rating frequencies tallied straight from the raw ratings CSV text
/// and venue table.
pub fn tally_priors(
    ratings_csv: &str,
    venues: &BTreeMap<String, BTreeSet<String>>,
    user: Option<&str>,
) -> BTreeMap<String, f64> {
    let mut total = 0u64;
    let mut pos: BTreeMap<String, u64> = BTreeMap::new();
    for line in ratings_csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if user.is_some_and(|u| u != cols[0]) {
            continue;
        }
        total += 1;
        if cols[2].parse::<i64>().unwrap() >= POSITIVE_MIN {
            for f in &venues[cols[1]] {
                *pos.entry(f.clone()).or_default() += 1;
            }
        }
    }
    pos.into_iter()
        .map(|(f, n)| (f, n as f64 / total as f64))
        .collect()
}

// ---- click simulation oracle -------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Facet(String),
    ChildMore(usize),
    PageMore,
}

#[derive(Clone, Debug)]
struct View {
    page: usize,
    child: Vec<usize>,
}

fn render(tree: &RankedTree, view: &View) -> Vec<Item> {
    let mut out = Vec::new();
    let page = &tree.pages[view.page];
    for (slot, p) in page.parents.iter().enumerate() {
        out.push(Item::Facet(p.id.to_string()));
        let cp = &p.child_pages[view.child[slot]];
        out.extend(cp.children.iter().map(|c| Item::Facet(c.id.to_string())));
        if cp.more {
            out.push(Item::ChildMore(slot));
        }
    }
    if page.more {
        out.push(Item::PageMore);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleOutcome {
    pub actions: usize,
    pub f_scan: usize,
    pub reachable: bool,
    pub positions: Vec<usize>,
}

pub struct SimOracle<'a> {
    pub inst: &'a Instance,
    pub request: usize,
    pub top_n: usize,
    pub relevant_min: i64,
    pub max_facet: usize,
    pub max_more: usize,
}

impl SimOracle<'_> {
    fn leaves_under(&self, facet: &str) -> BTreeSet<String> {
        for (p, ls) in &self.inst.shape {
            if p == facet {
                return ls.iter().cloned().collect();
            }
        }
        BTreeSet::from([facet.to_owned()])
    }

    /// 1-based rank of the first relevant venue if it lies within top_n.
    fn hit(&self, filter: Option<&str>) -> Option<usize> {
        let id = &self.inst.requests[self.request].0;
        let allowed = filter.map(|f| self.leaves_under(f));
        let list: Vec<String> = self
            .inst
            .sorted_results(self.request)
            .into_iter()
            .map(|(v, _)| v)
            .filter(|v| {
                allowed
                    .as_ref()
                    .is_none_or(|a| self.inst.venues[v].iter().any(|f| a.contains(f)))
            })
            .collect();
        let rank = list.iter().position(|v| {
            self.inst
                .grades
                .get(&(id.clone(), v.clone()))
                .copied()
                .unwrap_or(0)
                >= self.relevant_min
        })? + 1;
        (rank <= self.top_n).then_some(rank)
    }

    /// Depth-first search over every click sequence of exactly `len` clicks,
    /// children in display order; first success wins.
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        tree: &RankedTree,
        view: &View,
        filter: Option<&str>,
        facets: usize,
        mores: usize,
        len: usize,
        path: &mut Vec<usize>,
    ) -> Option<usize> {
        if path.len() == len {
            return filter.and_then(|f| self.hit(Some(f)));
        }
        for (i, item) in render(tree, view).into_iter().enumerate() {
            path.push(i + 1);
            let found = match item {
                Item::Facet(f) if facets < self.max_facet => {
                    self.dfs(tree, view, Some(&f), facets + 1, mores, len, path)
                }
                Item::ChildMore(slot) if mores < self.max_more => {
                    let mut next = view.clone();
                    next.child[slot] += 1;
                    self.dfs(tree, &next, filter, facets, mores + 1, len, path)
                }
                Item::PageMore if mores < self.max_more => {
                    let page = view.page + 1;
                    let next = View {
                        page,
                        child: vec![0; tree.pages[page].parents.len()],
                    };
                    self.dfs(tree, &next, filter, facets, mores + 1, len, path)
                }
                _ => None,
            };
            if found.is_some() {
                return found;
            }
            path.pop();
        }
        None
    }

    pub fn run(&self, tree: &RankedTree) -> OracleOutcome {
        if let Some(rank) = self.hit(None) {
            return OracleOutcome {
                actions: 0,
                f_scan: rank,
                reachable: true,
                positions: vec![],
            };
        }
        if !tree.pages.is_empty() {
            let start = View {
                page: 0,
                child: vec![0; tree.pages[0].parents.len()],
            };
            for len in 1..=self.max_facet + self.max_more {
                let mut path = Vec::new();
                if let Some(rank) = self.dfs(tree, &start, None, 0, 0, len, &mut path) {
                    return OracleOutcome {
                        actions: len,
                        f_scan: path.iter().sum::<usize>() + rank,
                        reachable: true,
                        positions: path,
                    };
                }
            }
        }
        let items: usize = tree
            .pages
            .iter()
            .map(|pg| {
                usize::from(pg.more)
                    + pg.parents
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
            .sum();
        OracleOutcome {
            actions: self.max_facet + self.max_more + 1,
            f_scan: items + self.inst.requests[self.request].2.len(),
            reachable: false,
            positions: vec![],
        }
    }
}

// ---- tree invariants ---------------------------------------------------------

/// Checks every structural promise of a ranked tree against the score map and
/// taxonomy shape; returns the first violation.
pub fn check_tree(
    tree: &RankedTree,
    shape: &[(String, Vec<String>)],
    scores: &BTreeMap<String, f64>,
    max_aggregation: bool,
    k: usize,
    page1: usize,
    page2: usize,
) -> Result<(), String> {
    let parent_of: BTreeMap<&str, &str> = shape
        .iter()
        .flat_map(|(p, ls)| ls.iter().map(move |l| (l.as_str(), p.as_str())))
        .collect();
    let ordered = |xs: &[(&str, f64)]| {
        xs.windows(2)
            .all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0))
    };

    let mut seen_leaves = BTreeSet::new();
    let mut parent_seq = Vec::new();
    for (pi, page) in tree.pages.iter().enumerate() {
        let last = pi + 1 == tree.pages.len();
        if page.parents.is_empty() || page.parents.len() > page1 {
            return Err(format!("page {pi} holds {} parents", page.parents.len()));
        }
        if !last && page.parents.len() != page1 {
            return Err(format!("page {pi} not full before a later page"));
        }
        if page.more == last {
            return Err(format!("page {pi} more-marker wrong"));
        }
        for p in &page.parents {
            let mut child_seq = Vec::new();
            for (ci, cp) in p.child_pages.iter().enumerate() {
                let clast = ci + 1 == p.child_pages.len();
                if cp.children.is_empty() || cp.children.len() > page2 {
                    return Err(format!(
                        "{} child page {ci} size {}",
                        p.id,
                        cp.children.len()
                    ));
                }
                if !clast && cp.children.len() != page2 {
                    return Err(format!("{} child page {ci} not full", p.id));
                }
                if cp.more == clast {
                    return Err(format!("{} child page {ci} more-marker wrong", p.id));
                }
                for c in &cp.children {
                    let id = c.id.as_str();
                    if parent_of.get(id) != Some(&p.id.as_str()) {
                        return Err(format!("{id} shown under {}", p.id));
                    }
                    if scores.get(id) != Some(&c.score) {
                        return Err(format!("{id} score {} differs from input", c.score));
                    }
                    if !seen_leaves.insert(id.to_owned()) {
                        return Err(format!("{id} shown twice"));
                    }
                    child_seq.push((id, c.score));
                }
            }
            if child_seq.is_empty() {
                return Err(format!("{} has no children", p.id));
            }
            if !ordered(&child_seq) {
                return Err(format!("children of {} out of order", p.id));
            }
            let mut top: Vec<f64> = child_seq.iter().map(|c| c.1).collect();
            top.sort_by(|a, b| b.total_cmp(a));
            let expected = if max_aggregation {
                top[0]
            } else {
                let t = &top[..k.min(top.len())];
                t.iter().sum::<f64>() / t.len() as f64
            };
            if p.score != expected {
                return Err(format!("{} aggregate {} != {}", p.id, p.score, expected));
            }
            parent_seq.push((p.id.as_str(), p.score));
        }
    }
    if !ordered(&parent_seq) {
        return Err("level-1 order violated".into());
    }
    let scored: BTreeSet<String> = scores.keys().cloned().collect();
    if seen_leaves != scored {
        return Err("displayed leaves differ from scored leaves".into());
    }
    let parents: BTreeSet<&str> = scores.keys().map(|l| parent_of[l.as_str()]).collect();
    if parents.len() != parent_seq.len() {
        return Err("parent set differs from parents of scored leaves".into());
    }
    Ok(())
}

/// Random scores over a random subset of leaves, with ties and zeros.
pub fn random_scores(seed: u64, shape: &[(String, Vec<String>)]) -> BTreeMap<String, f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BTreeMap::new();
    for (_, ls) in shape {
        for l in ls {
            if rng.gen_bool(0.7) {
                let s = if rng.gen_bool(0.3) {
                    [0.0, 0.5, 1.0][rng.gen_range(0..3)]
                } else {
                    rng.gen()
                };
                out.insert(l.clone(), s);
            }
        }
    }
    out
}

/// Random 2-level shape with at most `max_leaves` leaves.
pub fn random_shape(seed: u64, max_leaves: usize) -> Vec<(String, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_parents = rng.gen_range(1..=8);
    let n_leaves = rng.gen_range(n_parents..=max_leaves.max(n_parents));
    let mut shape: Vec<(String, Vec<String>)> = (0..n_parents)
        .map(|p| (format!("P{p}"), Vec::new()))
        .collect();
    for l in 0..n_leaves {
        let p = if l < n_parents {
            l
        } else {
            rng.gen_range(0..n_parents)
        };
        shape[p].1.push(format!("l{l:02}"));
    }
    shape
}

pub fn taxonomy_of(shape: &[(String, Vec<String>)]) -> Taxonomy {
    let inst = Instance {
        shape: shape.to_vec(),
        venues: BTreeMap::new(),
        ratings: vec![],
        requests: vec![],
        grades: BTreeMap::new(),
        embeddings: BTreeMap::new(),
    };
    inst.taxonomy()
}

// ---- raw dataset files -------------------------------------------------------

impl Instance {
    /// Reads a dataset directory written by `write_dataset` with plain JSON and
    /// text handling, without the library's loaders.
    pub fn from_dir(dir: &std::path::Path) -> Instance {
        use serde_json::Value;
        let read = |name: &str| std::fs::read_to_string(dir.join(name)).unwrap();

        let nodes: Vec<Value> = serde_json::from_str(&read("taxonomy.json")).unwrap();
        let mut shape: Vec<(String, Vec<String>)> = nodes
            .iter()
            .filter(|n| n["parent"].is_null())
            .map(|n| (n["id"].as_str().unwrap().to_owned(), Vec::new()))
            .collect();
        for n in nodes.iter().filter(|n| !n["parent"].is_null()) {
            let parent = n["parent"].as_str().unwrap();
            let slot = shape.iter_mut().find(|(p, _)| p == parent).unwrap();
            slot.1.push(n["id"].as_str().unwrap().to_owned());
        }

        let venues = read("venues.jsonl")
            .lines()
            .map(|l| {
                let v: Value = serde_json::from_str(l).unwrap();
                let facets = v["facets"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|f| f.as_str().unwrap().to_owned())
                    .collect();
                (v["id"].as_str().unwrap().to_owned(), facets)
            })
            .collect();

        let ratings = read("ratings.csv")
            .lines()
            .skip(1)
            .map(|l| {
                let c: Vec<&str> = l.split(',').collect();
                (c[0].to_owned(), c[1].to_owned(), c[2].parse().unwrap())
            })
            .collect();

        let requests = read("requests.jsonl")
            .lines()
            .map(|l| {
                let r: Value = serde_json::from_str(l).unwrap();
                let results = r["results"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|x| {
                        (
                            x["venue"].as_str().unwrap().to_owned(),
                            x["relevance"].as_f64().unwrap(),
                        )
                    })
                    .collect();
                (
                    r["request_id"].as_str().unwrap().to_owned(),
                    r["user"].as_str().unwrap().to_owned(),
                    results,
                )
            })
            .collect();

        let grades = read("qrels.txt")
            .lines()
            .map(|l| {
                let c: Vec<&str> = l.split_whitespace().collect();
                ((c[0].to_owned(), c[2].to_owned()), c[3].parse().unwrap())
            })
            .collect();

        Instance {
            shape,
            venues,
            ratings,
            requests,
            grades,
            embeddings: BTreeMap::new(),
        }
    }
}
