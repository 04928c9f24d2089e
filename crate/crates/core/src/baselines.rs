//! Comparison models: Peemen's tile-level buffer model and a cache model with
//! a single localized iteration space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::layer::LayerShape;
use crate::optimizer::{
    order_text, search_orders, text_ranks, tiles_text, with_threads, Key, Model, Plan, SearchConfig, SearchResult,
};
use crate::schedule::{default_controlling, ideal_traffic, Array, Axis, Nest, Tiles, TrafficReport};
use crate::space::{enumerate_tiles, Ordering, TilePolicy};

/// Innermost controlling loop of a Peemen candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Innermost {
    TOF,
    TIF,
    TSY,
    TSX,
}

impl Innermost {
    pub const ALL: [Innermost; 4] = [Innermost::TOF, Innermost::TIF, Innermost::TSY, Innermost::TSX];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeemenCandidate {
    pub innermost: Innermost,
    pub tiles: Tiles,
}

/// Tile buffer elements `(B_I, B_W, B_O)`.
pub fn peemen_buffer(c: &PeemenCandidate, layer: &LayerShape) -> (u64, u64, u64) {
    let t = c.tiles;
    let s = u64::from(layer.stride);
    let (kh, kw) = (u64::from(layer.k_h), u64::from(layer.k_w));
    let (mss, css, iss, jss) = (u64::from(t.mss), u64::from(t.css), u64::from(t.iss), u64::from(t.jss));
    (
        css * ((iss - 1) * s + kh) * ((jss - 1) * s + kw),
        mss * css * kh * kw,
        mss * iss * jss,
    )
}

/// Traffic of a Peemen candidate, evaluated as if the innermost controlling
/// loop were untiled. The untiled candidate moves every element once.
pub fn peemen_traffic(c: &PeemenCandidate, layer: &LayerShape) -> TrafficReport {
    let t = c.tiles;
    let (b_i, b_w, b_o) = peemen_buffer(c, layer);
    let (p_in, p_w, p_out, p_acc) = (
        u64::from(layer.p_in),
        u64::from(layer.p_w),
        u64::from(layer.p_out),
        u64::from(layer.p_acc),
    );
    let d = layer.output_elements();
    let buffers = (p_in * b_i, p_w * b_w, p_acc * b_o);
    if t == Tiles::full(layer) {
        let ideal = ideal_traffic(layer);
        return report(
            u64::from(layer.p_in) * layer.input_elements(),
            u64::from(layer.p_w) * layer.weight_elements(),
            0,
            p_out * d,
            buffers,
            ideal,
        );
    }

    let s = u64::from(layer.stride);
    let (kh, kw) = (u64::from(layer.k_h), u64::from(layer.k_w));
    let (m, cc, eh, ew) = (
        u64::from(layer.c_out),
        u64::from(layer.c_in),
        u64::from(layer.out_h),
        u64::from(layer.out_w),
    );
    let (mss, css, iss, jss) = (u64::from(t.mss), u64::from(t.css), u64::from(t.iss), u64::from(t.jss));
    let (n_m, n_c, n_y, n_x) = (m.div_ceil(mss), cc.div_ceil(css), eh.div_ceil(iss), ew.div_ceil(jss));
    let (h_eff, w_eff) = layer.effective_input_extent();
    let win_h = (iss - 1) * s + kh;
    let win_w = (jss - 1) * s + kw;

    // (tile count, I elements, W elements, O elements, O doubled)
    let (tiles, i, w, o, doubled) = match c.innermost {
        Innermost::TOF => (
            n_c * n_y * n_x,
            css * win_h * win_w,
            m * css * kh * kw,
            m * iss * jss,
            true,
        ),
        Innermost::TIF => (
            n_m * n_y * n_x,
            cc * win_h * win_w,
            mss * cc * kh * kw,
            mss * iss * jss,
            false,
        ),
        Innermost::TSY => (
            n_m * n_c * n_x,
            css * h_eff * win_w,
            mss * css * kh * kw,
            mss * eh * jss,
            true,
        ),
        Innermost::TSX => (
            n_m * n_c * n_y,
            css * win_h * w_eff,
            mss * css * kh * kw,
            mss * iss * ew,
            true,
        ),
    };
    let t_in = p_in * i * tiles;
    let t_w = p_w * w * tiles;
    let o_bytes = if doubled {
        2 * p_acc * o * tiles
    } else {
        p_out * o * tiles
    };
    let t_o_final = p_out * d;
    report(t_in, t_w, o_bytes - t_o_final, t_o_final, buffers, t_in + t_w + o_bytes)
}

fn report(t_in: u64, t_w: u64, t_o_acc: u64, t_o_final: u64, buffers: (u64, u64, u64), total: u64) -> TrafficReport {
    debug_assert_eq!(total, t_in + t_w + t_o_acc + t_o_final);
    TrafficReport {
        t_in,
        t_w,
        t_o_acc,
        t_o_final,
        total,
        b_in: buffers.0,
        b_w: buffers.1,
        b_o: buffers.2,
        feasible: true,
    }
}

type Scored<C> = (Key, C);

/// Picks, per budget, the smallest key among candidates whose buffer fits.
fn select<C: Copy>(mut scored: Vec<Scored<C>>, budgets: &[u64]) -> (Vec<Option<Scored<C>>>, Scored<C>) {
    scored.sort_by_key(|a| a.0);
    let out = budgets
        .iter()
        .map(|&b| scored.iter().find(|(k, _)| k.buffer <= b).copied())
        .collect();
    let min_buffer = *scored
        .iter()
        .min_by_key(|(k, _)| (k.buffer, *k))
        .expect("non-empty candidate set");
    (out, min_buffer)
}

fn results<C: Copy>(
    layer: &LayerShape,
    model: Model,
    budgets: &[u64],
    scored: Vec<(Key, C)>,
    eval: impl Fn(&C) -> (Plan, TrafficReport),
) -> Vec<SearchResult> {
    let candidates = scored.len() as u64;
    let (best, min_buffer) = select(scored, budgets);
    budgets
        .iter()
        .zip(best)
        .map(|(&budget, hit)| {
            let (feasible, c) = match hit {
                Some((_, c)) => (true, c),
                None => (false, min_buffer.1),
            };
            let (plan, mut report) = eval(&c);
            report.feasible = feasible;
            SearchResult {
                layer: layer.name.clone(),
                model,
                budget,
                plan,
                report,
                candidates,
            }
        })
        .collect()
}

pub fn peemen_search(layer: &LayerShape, config: &SearchConfig) -> Result<Vec<SearchResult>> {
    config.validate()?;
    layer.validate()?;
    let tiles = enumerate_tiles(layer, &config.policy)?.choices();
    let tile_ranks = text_ranks(&tiles.iter().map(tiles_text).collect::<Vec<_>>());
    let case_ranks = text_ranks(
        &Innermost::ALL
            .iter()
            .map(|c| serde_json::to_string(c).unwrap())
            .collect::<Vec<_>>(),
    );
    let mut scored = Vec::with_capacity(tiles.len() * 4);
    for (ci, &innermost) in Innermost::ALL.iter().enumerate() {
        for (ti, &t) in tiles.iter().enumerate() {
            let cand = PeemenCandidate { innermost, tiles: t };
            let r = peemen_traffic(&cand, layer);
            let key = Key {
                total: r.total,
                buffer: r.buffer_bytes(),
                o_acc: r.t_o_acc,
                order_rank: case_ranks[ci],
                tile_rank: tile_ranks[ti],
                levels: [0; 3],
            };
            scored.push((key, cand));
        }
    }
    Ok(results(layer, Model::Peemen, &config.budgets, scored, |c| {
        (Plan::Peemen(*c), peemen_traffic(c, layer))
    }))
}

/// Best Peemen candidate for one budget.
pub fn peemen_best(layer: &LayerShape, budget: u64, policy: &TilePolicy) -> Result<SearchResult> {
    let config = SearchConfig::default()
        .with_budgets(vec![budget])
        .with_policy(policy.clone());
    Ok(peemen_search(layer, &config)?.remove(0))
}

/// A cache-model candidate: the `k` innermost loops form the localized space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheCandidate {
    pub order: Ordering,
    pub tiles: Tiles,
    pub k: usize,
}

fn cache_eval_nest(nest: &Nest, k: usize, layer: &LayerShape) -> TrafficReport {
    let level = k as isize - 1;
    let f_i = nest.footprint(Array::I, level);
    let f_w = nest.footprint(Array::W, level);
    let f_o = nest.footprint(Array::O, level);
    let outer: u64 = nest.loops()[k..nest.depth()].iter().map(|l| l.extent).product();
    let reduction_inside = nest.loops()[k..nest.depth()]
        .iter()
        .all(|l| l.extent == 1 || !matches!(l.axis, Axis::IF | Axis::FX | Axis::FY));
    let (p_in, p_w, p_out, p_acc) = (
        u64::from(layer.p_in),
        u64::from(layer.p_w),
        u64::from(layer.p_out),
        u64::from(layer.p_acc),
    );
    let t_in = p_in * f_i * outer;
    let t_w = p_w * f_w * outer;
    let o_bytes = if reduction_inside {
        p_out * f_o * outer
    } else {
        2 * p_acc * f_o * outer
    };
    let t_o_final = p_out * layer.output_elements();
    report(
        t_in,
        t_w,
        o_bytes - t_o_final,
        t_o_final,
        (p_in * f_i, p_w * f_w, p_acc * f_o),
        t_in + t_w + o_bytes,
    )
}

/// Cache-model traffic: the whole localized working set must be resident and
/// is transferred once per iteration of the loops outside it.
pub fn cache_traffic(c: &CacheCandidate, layer: &LayerShape) -> TrafficReport {
    let nest = Nest::build(layer, &c.order, &default_controlling(layer, &c.tiles), c.tiles);
    assert!(c.k >= 1 && c.k <= nest.depth(), "localized space size out of range");
    cache_eval_nest(&nest, c.k, layer)
}

pub fn cache_search(layer: &LayerShape, config: &SearchConfig) -> Result<Vec<SearchResult>> {
    config.validate()?;
    layer.validate()?;
    let orders = search_orders(layer, config.prune);
    let tiles = enumerate_tiles(layer, &config.policy)?.choices();
    let order_ranks = text_ranks(&orders.iter().map(|o| order_text(&o.0)).collect::<Vec<_>>());
    let tile_ranks = text_ranks(&tiles.iter().map(tiles_text).collect::<Vec<_>>());
    let budgets = &config.budgets;

    // Keep only per-budget winners and the min-buffer candidate per order.
    let per_order: Vec<Vec<(Key, CacheCandidate)>> = with_threads(config.threads, || {
        orders
            .par_iter()
            .enumerate()
            .map(|(oi, (order, _))| {
                let mut best: Vec<Option<(Key, CacheCandidate)>> = vec![None; budgets.len() + 1];
                let mut controlling = Vec::with_capacity(4);
                for (ti, t) in tiles.iter().enumerate() {
                    controlling.clear();
                    controlling.extend(default_controlling(layer, t));
                    let nest = Nest::build(layer, order, &controlling, *t);
                    for k in 1..=nest.depth() {
                        let r = cache_eval_nest(&nest, k, layer);
                        let key = Key {
                            total: r.total,
                            buffer: r.buffer_bytes(),
                            o_acc: r.t_o_acc,
                            order_rank: order_ranks[oi],
                            tile_rank: tile_ranks[ti],
                            levels: [k as u8, 0, 0],
                        };
                        let cand = CacheCandidate {
                            order: *order,
                            tiles: *t,
                            k,
                        };
                        for (j, &b) in budgets.iter().enumerate() {
                            if key.buffer <= b && best[j].is_none_or(|(bk, _)| key < bk) {
                                best[j] = Some((key, cand));
                            }
                        }
                        let last = budgets.len();
                        if best[last].is_none_or(|(bk, _)| (key.buffer, key) < (bk.buffer, bk)) {
                            best[last] = Some((key, cand));
                        }
                    }
                }
                best.into_iter().flatten().collect()
            })
            .collect()
    });
    let scored: Vec<(Key, CacheCandidate)> = per_order.into_iter().flatten().collect();
    let explored: u64 = tiles
        .iter()
        .map(|t| (6 + default_controlling(layer, t).len()) as u64)
        .sum::<u64>()
        * orders.len() as u64;
    let mut out = results(layer, Model::Cache, budgets, scored, |c| {
        (Plan::Cache(*c), cache_traffic(c, layer))
    });
    for r in &mut out {
        r.candidates = explored;
    }
    Ok(out)
}

/// Best cache-model candidate for one budget.
pub fn cache_best(layer: &LayerShape, budget: u64, policy: &TilePolicy) -> Result<SearchResult> {
    let config = SearchConfig::default()
        .with_budgets(vec![budget])
        .with_policy(policy.clone());
    Ok(cache_search(layer, &config)?.remove(0))
}
