//! Exhaustive schedule selection.
//!
//! Step one tabulates, per loop order and tile choice, which loops can carry
//! each array ([`precompute_requirements`]); the buffer sizes follow lazily for
//! any layer. Step two walks every (order, tiles) pair, reduces each array's
//! per-level `(buffer, traffic)` pairs to a Pareto front and combines the
//! fronts into budget buckets, which yields the best schedule for every budget
//! in one pass.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, CacheCandidate, PeemenCandidate};
use crate::error::{Error, Result};
use crate::layer::{LayerShape, LayerSuite};
use crate::schedule::{
    default_controlling, ideal_traffic, Array, Axis, BufferingAssignment, Nest, Schedule, ScheduleSpec, Tiles,
    TrafficReport, MAX_DEPTH,
};
use crate::space::{self, enumerate_permutations, enumerate_tiles, Ordering, TilePolicy};

/// Default budgets: 1 kB to 512 kB in powers of two.
pub fn default_budgets() -> Vec<u64> {
    (0..10).map(|i| 1024u64 << i).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Local buffer capacities in bytes, ascending.
    pub budgets: Vec<u64>,
    pub policy: TilePolicy,
    /// Restrict loop orders to one representative per FX↔FY / SX↔SY class.
    pub prune: bool,
    /// Worker cap; `None` defers to `CONVSCHED_THREADS`, then to rayon.
    pub threads: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budgets: default_budgets(),
            policy: TilePolicy::default(),
            prune: true,
            threads: None,
        }
    }
}

impl SearchConfig {
    pub fn with_budgets(mut self, budgets: Vec<u64>) -> Self {
        self.budgets = budgets;
        self
    }

    pub fn with_policy(mut self, policy: TilePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.budgets.is_empty() {
            return Err(Error::Argument("at least one budget is required".into()));
        }
        if self.budgets.contains(&0) {
            return Err(Error::Argument("budgets must be positive".into()));
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("budgets must be strictly ascending".into()));
        }
        Ok(())
    }
}

/// Which traffic model a search uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ours,
    Peemen,
    Cache,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Ours, Model::Peemen, Model::Cache];

    pub fn name(self) -> &'static str {
        match self {
            Model::Ours => "ours",
            Model::Peemen => "peemen",
            Model::Cache => "cache",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown model `{s}`")))
    }
}

/// The winning (or, when infeasible, smallest-buffer) candidate of a search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Plan {
    Nest(ScheduleSpec),
    Peemen(PeemenCandidate),
    Cache(CacheCandidate),
}

impl Plan {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plans always serialize")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchResult {
    pub layer: String,
    pub model: Model,
    pub budget: u64,
    pub plan: Plan,
    /// `feasible` is false when no candidate fits the budget; the report then
    /// describes the smallest-buffer candidate.
    pub report: TrafficReport,
    pub candidates: u64,
}

impl SearchResult {
    pub fn feasible(&self) -> bool {
        self.report.feasible
    }

    /// Rebuilds the winning nest of an `ours` result.
    pub fn schedule(&self, layer: &LayerShape) -> Option<(Schedule, BufferingAssignment)> {
        match &self.plan {
            Plan::Nest(spec) => spec.instantiate(layer).ok(),
            _ => None,
        }
    }
}

/// Total order used to pick among equal-traffic candidates: traffic, buffer
/// bytes, accumulation traffic, then the serialized candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Key {
    pub total: u64,
    pub buffer: u64,
    pub o_acc: u64,
    pub order_rank: u32,
    pub tile_rank: u32,
    pub levels: [u8; 3],
}

/// Ranks of items by their serialized text.
pub(crate) fn text_ranks(texts: &[String]) -> Vec<u32> {
    let mut idx: Vec<usize> = (0..texts.len()).collect();
    idx.sort_by(|&a, &b| texts[a].cmp(&texts[b]));
    let mut ranks = vec![0u32; texts.len()];
    for (r, &i) in idx.iter().enumerate() {
        ranks[i] = r as u32;
    }
    ranks
}

pub(crate) fn order_text(order: &Ordering) -> String {
    serde_json::to_string(order).unwrap()
}

pub(crate) fn tiles_text(tiles: &Tiles) -> String {
    serde_json::to_string(tiles).unwrap()
}

/// Runs `f` on a pool sized by `threads`, `CONVSCHED_THREADS`, or rayon's default.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    let n = threads.or_else(|| {
        std::env::var("CONVSCHED_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    });
    match n {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Loop orders searched for a layer. Each entry carries its class index; for
/// layers that are not transpose-symmetric the mirror of every representative
/// is searched too and counted in the same class.
pub(crate) fn search_orders(layer: &LayerShape, prune: bool) -> Vec<(Ordering, usize)> {
    let reps = enumerate_permutations(prune);
    let mut out: Vec<(Ordering, usize)> = reps.iter().enumerate().map(|(i, &o)| (o, i)).collect();
    if prune && !layer.is_transpose_symmetric() {
        for (i, rep) in reps.iter().enumerate() {
            let twin = space::transposed(rep);
            if !reps.contains(&twin) {
                out.push((twin, i));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Hit {
    pub key: Key,
    pub order: u16,
    pub tiles: u32,
}

fn better(slot: &mut Option<Hit>, hit: Hit) {
    if slot.is_none_or(|s| hit.key < s.key) {
        *slot = Some(hit);
    }
}

/// Everything the ours-model search learns about one layer.
pub(crate) struct Exploration {
    pub orders: Vec<(Ordering, usize)>,
    pub tiles: Vec<Tiles>,
    /// `[class][budget]`, best feasible hit within each order class.
    pub per_class: Vec<Vec<Option<Hit>>>,
    pub overall: Vec<Option<Hit>>,
    /// Smallest total buffer among all candidates (ties broken by `Key`).
    pub min_buffer: Hit,
    pub candidates: u64,
}

fn front(costs: &[(u64, u64)], depth: usize) -> ([(u64, u64, u8); MAX_DEPTH], usize) {
    let mut out = [(0, 0, 0u8); MAX_DEPTH];
    let mut n = 0;
    for (level, &(buf, traffic)) in costs.iter().enumerate().take(depth) {
        if n == 0 || traffic < out[n - 1].1 {
            out[n] = (buf, traffic, level as u8);
            n += 1;
        }
    }
    (out, n)
}

pub(crate) fn explore(layer: &LayerShape, config: &SearchConfig) -> Result<Exploration> {
    config.validate()?;
    layer.validate()?;
    let orders = search_orders(layer, config.prune);
    let tiles = enumerate_tiles(layer, &config.policy)?.choices();
    let classes = orders.iter().map(|o| o.1).max().unwrap() + 1;
    let order_ranks = text_ranks(&orders.iter().map(|o| order_text(&o.0)).collect::<Vec<_>>());
    let tile_ranks = text_ranks(&tiles.iter().map(tiles_text).collect::<Vec<_>>());
    let budgets = &config.budgets;
    let d = layer.output_elements();
    let p_out = u64::from(layer.p_out);

    let per_order: Vec<(Vec<Option<Hit>>, Hit, u64)> = with_threads(config.threads, || {
        orders
            .par_iter()
            .enumerate()
            .map(|(oi, (order, _))| {
                let mut best: Vec<Option<Hit>> = vec![None; budgets.len()];
                let mut min_buffer: Option<Hit> = None;
                let mut candidates = 0u64;
                let mut costs = [[(0u64, 0u64); MAX_DEPTH]; 3];
                let mut controlling = Vec::with_capacity(4);
                for (ti, t) in tiles.iter().enumerate() {
                    controlling.clear();
                    controlling.extend(default_controlling(layer, t));
                    let nest = Nest::build(layer, order, &controlling, *t);
                    let depth = nest.depth();
                    candidates += (depth * depth * depth) as u64;
                    for (a, c) in Array::ALL.into_iter().zip(costs.iter_mut()) {
                        nest.level_costs(a, c);
                    }
                    let (fi, ni) = front(&costs[0], depth);
                    let (fw, nw) = front(&costs[1], depth);
                    let (fo, no) = front(&costs[2], depth);
                    for &(bi, ti_, li) in &fi[..ni] {
                        for &(bw, tw, lw) in &fw[..nw] {
                            for &(bo, to, lo) in &fo[..no] {
                                let buffer = bi + bw + bo;
                                let key = Key {
                                    total: ti_ + tw + to,
                                    buffer,
                                    o_acc: to - p_out * d,
                                    order_rank: order_ranks[oi],
                                    tile_rank: tile_ranks[ti],
                                    levels: [li, lw, lo],
                                };
                                let hit = Hit {
                                    key,
                                    order: oi as u16,
                                    tiles: ti as u32,
                                };
                                let bucket = budgets.partition_point(|&b| b < buffer);
                                if bucket < budgets.len() {
                                    better(&mut best[bucket], hit);
                                }
                                if min_buffer.is_none_or(|m| (buffer, key) < (m.key.buffer, m.key)) {
                                    min_buffer = Some(hit);
                                }
                            }
                        }
                    }
                }
                (best, min_buffer.expect("at least one candidate"), candidates)
            })
            .collect()
    });

    let mut per_class: Vec<Vec<Option<Hit>>> = vec![vec![None; budgets.len()]; classes];
    let mut min_buffer: Option<Hit> = None;
    let mut candidates = 0;
    for ((_, class), (best, mb, n)) in orders.iter().zip(per_order) {
        for (slot, hit) in per_class[*class].iter_mut().zip(best) {
            if let Some(h) = hit {
                better(slot, h);
            }
        }
        if min_buffer.is_none_or(|m| (mb.key.buffer, mb.key) < (m.key.buffer, m.key)) {
            min_buffer = Some(mb);
        }
        candidates += n;
    }
    // Bucket j holds candidates needing more than budget j-1; fold upward.
    for row in per_class.iter_mut() {
        for j in 1..row.len() {
            if let Some(prev) = row[j - 1] {
                better(&mut row[j], prev);
            }
        }
    }
    let mut overall = vec![None; budgets.len()];
    for row in &per_class {
        for (slot, hit) in overall.iter_mut().zip(row) {
            if let Some(h) = hit {
                better(slot, *h);
            }
        }
    }
    Ok(Exploration {
        orders,
        tiles,
        per_class,
        overall,
        min_buffer: min_buffer.unwrap(),
        candidates,
    })
}

impl Exploration {
    fn result(&self, layer: &LayerShape, budget: u64, hit: Hit, feasible: bool) -> SearchResult {
        let order = self.orders[hit.order as usize].0;
        let tiles = self.tiles[hit.tiles as usize];
        let schedule = Schedule::new(order, tiles, layer).expect("explored schedules are valid");
        let [li, lw, lo] = hit.key.levels;
        let assignment = BufferingAssignment::new(li as usize, lw as usize, lo as usize);
        let mut report = schedule.traffic(&assignment).expect("explored levels are valid");
        report.feasible = feasible;
        SearchResult {
            layer: layer.name.clone(),
            model: Model::Ours,
            budget,
            plan: Plan::Nest(schedule.spec(&assignment)),
            report,
            candidates: self.candidates,
        }
    }

    pub fn results(&self, layer: &LayerShape, budgets: &[u64]) -> Vec<SearchResult> {
        budgets
            .iter()
            .zip(&self.overall)
            .map(|(&budget, hit)| match hit {
                Some(h) => self.result(layer, budget, *h, true),
                None => self.result(layer, budget, self.min_buffer, false),
            })
            .collect()
    }
}

/// Best ours-model schedule for every budget in `config`.
pub fn best_schedules(layer: &LayerShape, config: &SearchConfig) -> Result<Vec<SearchResult>> {
    let exploration = explore(layer, config)?;
    Ok(exploration.results(layer, &config.budgets))
}

/// Best ours-model schedule for one budget.
pub fn best_schedule(layer: &LayerShape, budget: u64, config: &SearchConfig) -> Result<SearchResult> {
    let config = config.clone().with_budgets(vec![budget]);
    Ok(best_schedules(layer, &config)?.remove(0))
}

/// Best result of `model` for every budget in `config`.
pub fn search(layer: &LayerShape, model: Model, config: &SearchConfig) -> Result<Vec<SearchResult>> {
    match model {
        Model::Ours => best_schedules(layer, config),
        Model::Peemen => baselines::peemen_search(layer, config),
        Model::Cache => baselines::cache_search(layer, config),
    }
}

/// Results of one model over a suite, `rows[layer][budget]`.
#[derive(Clone, Debug, Serialize)]
pub struct SweepMatrix {
    pub suite: String,
    pub model: Model,
    pub budgets: Vec<u64>,
    pub rows: Vec<Vec<SearchResult>>,
}

impl SweepMatrix {
    /// Plain sum of per-layer best totals at budget index `j`.
    pub fn aggregate(&self, j: usize) -> u64 {
        self.rows.iter().map(|r| r[j].report.total).sum()
    }

    pub fn aggregates(&self) -> Vec<u64> {
        (0..self.budgets.len()).map(|j| self.aggregate(j)).collect()
    }

    /// Whether every layer has a feasible result at budget index `j`.
    pub fn all_feasible(&self, j: usize) -> bool {
        self.rows.iter().all(|r| r[j].feasible())
    }
}

pub fn sweep(suite: &LayerSuite, config: &SearchConfig, model: Model) -> Result<SweepMatrix> {
    config.validate()?;
    let rows = suite
        .layers
        .iter()
        .map(|layer| search(layer, model, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepMatrix {
        suite: suite.name.clone(),
        model,
        budgets: config.budgets.clone(),
        rows,
    })
}

/// Sum of ideal traffic over a suite.
pub fn suite_ideal(suite: &LayerSuite) -> u64 {
    suite.layers.iter().map(ideal_traffic).sum()
}

/// Permutation-quality bins, relative to the best order for the same layer and budget.
pub const DISTRIBUTION_BINS: [&str; 6] = ["optimal", "<=+10%", "<=+20%", "<=+50%", "<=2x", ">2x"];

/// Per-permutation quality over a layer set. A permutation's traffic is the
/// sum over layers of its best schedule; the optimum is the sum of the
/// per-layer bests over all permutations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Distribution {
    pub budgets: Vec<u64>,
    /// `[budget][class]`; `None` when the class has no feasible schedule for some layer.
    pub class_totals: Vec<Vec<Option<u64>>>,
    /// `[budget]`; `None` when some layer is infeasible under every permutation.
    pub optimum: Vec<Option<u64>>,
}

fn bin(best: u64, candidate: Option<u64>) -> usize {
    let Some(c) = candidate else { return 5 };
    // Integer comparisons: c ≤ best·(1 + p/100) ⇔ 100·c ≤ (100 + p)·best.
    let (c, b) = (u128::from(c), u128::from(best));
    if c == b {
        0
    } else if 100 * c <= 110 * b {
        1
    } else if 100 * c <= 120 * b {
        2
    } else if 100 * c <= 150 * b {
        3
    } else if c <= 2 * b {
        4
    } else {
        5
    }
}

fn add(a: Option<u64>, b: Option<u64>) -> Option<u64> {
    Some(a? + b?)
}

impl Distribution {
    fn empty(budgets: &[u64], classes: usize) -> Distribution {
        Distribution {
            budgets: budgets.to_vec(),
            class_totals: vec![vec![Some(0); classes]; budgets.len()],
            optimum: vec![Some(0); budgets.len()],
        }
    }

    fn add_layer(&mut self, ex: &Exploration) {
        for (j, row) in self.class_totals.iter_mut().enumerate() {
            self.optimum[j] = add(self.optimum[j], ex.overall[j].map(|h| h.key.total));
            for (slot, class) in row.iter_mut().zip(&ex.per_class) {
                *slot = add(*slot, class[j].map(|h| h.key.total));
            }
        }
    }

    /// Number of permutations per bin, per budget.
    pub fn counts(&self) -> Vec<[u64; 6]> {
        self.class_totals
            .iter()
            .zip(&self.optimum)
            .map(|(row, opt)| {
                let mut counts = [0u64; 6];
                for &total in row {
                    match opt {
                        Some(best) => counts[bin(*best, total)] += 1,
                        None => counts[5] += 1,
                    }
                }
                counts
            })
            .collect()
    }

    pub fn fractions(&self) -> Vec<[f64; 6]> {
        self.counts()
            .iter()
            .map(|row| {
                let n: u64 = row.iter().sum();
                row.map(|c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
            })
            .collect()
    }

    /// Pools two distributions over disjoint layer sets.
    pub fn merge(&self, other: &Distribution) -> Result<Distribution> {
        if self.budgets != other.budgets || self.class_totals[0].len() != other.class_totals[0].len() {
            return Err(Error::Argument(
                "cannot merge distributions over different budgets or orders".into(),
            ));
        }
        let class_totals = self
            .class_totals
            .iter()
            .zip(&other.class_totals)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| add(x, y)).collect())
            .collect();
        let optimum = self
            .optimum
            .iter()
            .zip(&other.optimum)
            .map(|(&x, &y)| add(x, y))
            .collect();
        Ok(Distribution {
            budgets: self.budgets.clone(),
            class_totals,
            optimum,
        })
    }
}

fn class_count(prune: bool) -> usize {
    if prune {
        180
    } else {
        720
    }
}

/// Bins every loop-order class by its traffic over `layers` relative to the optimum.
pub fn distribution(layers: &[LayerShape], config: &SearchConfig) -> Result<Distribution> {
    config.validate()?;
    let mut dist = Distribution::empty(&config.budgets, class_count(config.prune));
    for layer in layers {
        dist.add_layer(&explore(layer, config)?);
    }
    Ok(dist)
}

/// Ours-model sweep and permutation distribution from a single search per layer.
pub fn sweep_with_distribution(suite: &LayerSuite, config: &SearchConfig) -> Result<(SweepMatrix, Distribution)> {
    config.validate()?;
    let mut dist = Distribution::empty(&config.budgets, class_count(config.prune));
    let mut rows = Vec::with_capacity(suite.layers.len());
    for layer in &suite.layers {
        let ex = explore(layer, config)?;
        dist.add_layer(&ex);
        rows.push(ex.results(layer, &config.budgets));
    }
    let matrix = SweepMatrix {
        suite: suite.name.clone(),
        model: Model::Ours,
        budgets: config.budgets.clone(),
        rows,
    };
    Ok((matrix, dist))
}

/// Structural carry information for one (order, tiles) row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RequirementRow {
    pub order: Ordering,
    pub tiles: Tiles,
    /// Loops (by index) that may carry each array, before layer-dependent checks.
    pub carriers: [Vec<usize>; 3],
    controlling: Vec<Axis>,
}

/// Buffering requirements per (order, tile choice); evaluated per layer.
#[derive(Clone, Debug)]
pub struct RequirementTable {
    pub rows: Vec<RequirementRow>,
}

fn structural_carriers(order: &Ordering, controlling: &[Axis], array: Array) -> Vec<usize> {
    let loops: Vec<(Axis, bool)> = order
        .iter()
        .map(|&a| (a, false))
        .chain(controlling.iter().rev().map(|&a| (a, true)))
        .collect();
    let pos = |axis: Axis| order.iter().position(|&a| a == axis).unwrap();
    loops
        .iter()
        .enumerate()
        .filter(|(i, &(axis, ctrl))| match array {
            Array::W => matches!(axis, Axis::SX | Axis::SY),
            Array::O => matches!(axis, Axis::IF | Axis::FX | Axis::FY),
            Array::I => match axis {
                Axis::OF => true,
                Axis::IF => false,
                _ if ctrl => true,
                Axis::SX => pos(Axis::FX) < *i,
                Axis::FX => pos(Axis::SX) < *i,
                Axis::SY => pos(Axis::FY) < *i,
                Axis::FY => pos(Axis::SY) < *i,
            },
        })
        .map(|(i, _)| i)
        .collect()
}

/// Step one: which loops may carry each array, per (order, tiles). The tile
/// choices fix which controlling loops exist for `layer`'s extents.
pub fn precompute_requirements(orders: &[Ordering], tile_choices: &[Tiles], layer: &LayerShape) -> RequirementTable {
    let mut rows = Vec::with_capacity(orders.len() * tile_choices.len());
    for order in orders {
        for tiles in tile_choices {
            let controlling = default_controlling(layer, tiles);
            let carriers = Array::ALL.map(|a| structural_carriers(order, &controlling, a));
            rows.push(RequirementRow {
                order: *order,
                tiles: *tiles,
                carriers,
                controlling,
            });
        }
    }
    RequirementTable { rows }
}

impl RequirementRow {
    /// Buffer elements per level for each array, evaluated against `layer`.
    pub fn buffer_sizes(&self, layer: &LayerShape) -> [Vec<u64>; 3] {
        let schedule = Schedule::with_controlling_order(self.order, &self.controlling, self.tiles, layer)
            .expect("requirement rows hold valid schedules");
        Array::ALL.map(|array| {
            let carriers = &self.carriers[array as usize];
            (0..schedule.depth())
                .map(|level| {
                    carriers
                        .iter()
                        .rev()
                        .filter(|&&c| c <= level)
                        .find(|&&c| schedule.reuse_descriptor(array, c).carries)
                        .map_or(1, |&c| schedule.footprint(array, c as isize - 1))
                })
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::Precisions;
    use crate::schedule::CANONICAL_ORDER;

    fn small() -> LayerShape {
        LayerShape::square("small", 6, 3, 1, 4, 8)
    }

    #[test]
    fn large_budget_reaches_ideal() {
        let layer = small();
        let r = best_schedule(&layer, 1 << 20, &SearchConfig::default()).unwrap();
        assert!(r.feasible());
        assert_eq!(r.report.total, ideal_traffic(&layer));
    }

    #[test]
    fn tiny_budget_is_infeasible() {
        let layer = small();
        let r = best_schedule(&layer, 1, &SearchConfig::default()).unwrap();
        assert!(!r.feasible());
        assert!(r.report.buffer_bytes() > 1);
        // Streaming every array needs one element of each.
        assert_eq!(r.report.buffer_bytes(), 1 + 1 + 4);
    }

    #[test]
    fn result_matches_direct_evaluation() {
        let layer = small();
        let config = SearchConfig::default().with_budgets(vec![128, 512, 2048]);
        for r in best_schedules(&layer, &config).unwrap() {
            let (s, a) = r.schedule(&layer).unwrap();
            let direct = s.traffic(&a).unwrap().against(r.budget);
            assert_eq!(direct, r.report);
        }
    }

    #[test]
    fn exhaustive_brute_force_agrees() {
        let layer = LayerShape::square("b", 4, 3, 1, 2, 3).with_precisions(Precisions::BYTE);
        let config = SearchConfig::default().with_budgets(vec![16, 40, 100]);
        let results = best_schedules(&layer, &config).unwrap();
        for r in &results {
            let mut best = u64::MAX;
            for order in enumerate_permutations(true) {
                for tiles in enumerate_tiles(&layer, &config.policy).unwrap().choices() {
                    let s = Schedule::new(order, tiles, &layer).unwrap();
                    let n = s.depth();
                    for li in 0..n {
                        for lw in 0..n {
                            for lo in 0..n {
                                let rep = s.traffic(&BufferingAssignment::new(li, lw, lo)).unwrap();
                                if rep.buffer_bytes() <= r.budget {
                                    best = best.min(rep.total);
                                }
                            }
                        }
                    }
                }
            }
            assert_eq!(r.report.total, best, "budget {}", r.budget);
        }
    }

    #[test]
    fn requirement_table_matches_direct_buffer_sizes() {
        let layer = LayerShape::rect("r", 5, 7, 3, 2, 2, 3, 4);
        let orders = enumerate_permutations(true);
        let tiles = enumerate_tiles(&layer, &TilePolicy::PowersOfTwoPlusExtents)
            .unwrap()
            .choices();
        let table = precompute_requirements(&orders, &tiles, &layer);
        assert_eq!(table.rows.len(), orders.len() * tiles.len());
        for row in table.rows.iter().step_by(7) {
            let s = Schedule::new(row.order, row.tiles, &layer).unwrap();
            let sizes = row.buffer_sizes(&layer);
            for array in Array::ALL {
                let direct: Vec<u64> = (0..s.depth()).map(|l| s.buffer_size(array, l)).collect();
                assert_eq!(sizes[array as usize], direct);
                assert!(direct.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn canonical_row_has_single_element_o_at_fy() {
        let layer = small();
        let table = precompute_requirements(&[CANONICAL_ORDER], &[Tiles::full(&layer)], &layer);
        assert_eq!(table.rows[0].buffer_sizes(&layer)[Array::O as usize][1], 1);
    }

    #[test]
    fn distribution_bins_sum_to_one() {
        let layer = small();
        let config = SearchConfig::default().with_budgets(vec![64, 1024]);
        let d = distribution(std::slice::from_ref(&layer), &config).unwrap();
        for row in &d.fractions() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(d.counts()[0].iter().sum::<u64>(), 180);
        assert!(d.counts()[1][0] >= 1);
        let twice = d.merge(&d).unwrap();
        assert_eq!(twice.counts(), d.counts());
        assert_eq!(twice.optimum[1], d.optimum[1].map(|t| 2 * t));
    }

    #[test]
    fn bins() {
        assert_eq!(bin(100, Some(100)), 0);
        assert_eq!(bin(100, Some(110)), 1);
        assert_eq!(bin(100, Some(111)), 2);
        assert_eq!(bin(100, Some(150)), 3);
        assert_eq!(bin(100, Some(200)), 4);
        assert_eq!(bin(100, Some(201)), 5);
        assert_eq!(bin(100, None), 5);
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().with_budgets(vec![]).validate().is_err());
        assert!(SearchConfig::default().with_budgets(vec![0, 4]).validate().is_err());
        assert!(SearchConfig::default().with_budgets(vec![4, 2]).validate().is_err());
        assert_eq!(default_budgets().len(), 10);
        assert_eq!(default_budgets()[9], 512 * 1024);
    }
}
