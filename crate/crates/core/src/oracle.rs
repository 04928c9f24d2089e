//! Brute-force trace simulation of a scheduled nest.
//!
//! The simulator walks every iteration in schedule order and keeps, per array,
//! the buffering-loop instance in which each element was last touched. An
//! access is an off-buffer transfer iff the element has not been touched yet
//! during the current instance. None of the closed forms in [`crate::schedule`]
//! are used here.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::schedule::{Array, Axis, BufferingAssignment, Schedule};

pub const DEFAULT_ITERATION_CAP: u64 = 100_000_000;

/// Transfer counts measured by [`simulate`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TraceStats {
    pub loads_i: u64,
    pub loads_w: u64,
    pub writes_o_partial: u64,
    pub reads_o_partial: u64,
    pub writes_o_final: u64,
    /// Accesses to I, hits and misses alike.
    pub touches_i: u64,
    pub iterations: u64,
    pub bytes_i: u64,
    pub bytes_w: u64,
    pub bytes_o: u64,
    pub bytes_total: u64,
}

struct Tracker {
    level: usize,
    epoch: u64,
    last: Vec<u64>,
}

impl Tracker {
    fn new(level: usize, len: usize) -> Self {
        Tracker {
            level,
            epoch: 0,
            last: vec![u64::MAX; len],
        }
    }

    /// Returns (fresh in this instance, touched before at all).
    #[inline]
    fn touch(&mut self, idx: usize) -> (bool, bool) {
        let prev = self.last[idx];
        if prev == self.epoch {
            (false, true)
        } else {
            self.last[idx] = self.epoch;
            (true, prev != u64::MAX)
        }
    }
}

struct Sim<'a> {
    schedule: &'a Schedule,
    /// Tile size of each loop's axis.
    tile_of: Vec<u64>,
    full: [u64; 6],
    ctrl_idx: [u64; 6],
    body_idx: [u64; 6],
    trackers: [Tracker; 3],
    stats: TraceStats,
    geom: Geometry,
}

struct Geometry {
    c_in: usize,
    in_h: usize,
    in_w: usize,
    out_h: usize,
    out_w: usize,
    k_h: usize,
    k_w: usize,
    stride: usize,
}

fn slot(axis: Axis) -> usize {
    Axis::ALL.iter().position(|&a| a == axis).unwrap()
}

impl Sim<'_> {
    fn run(&mut self, level: usize) {
        let lp = self.schedule.loops()[level];
        let s = slot(lp.axis);
        let bound = if lp.controlling {
            lp.extent
        } else {
            let tile = self.tile_of[level];
            let start = self.ctrl_idx[s] * tile;
            tile.min(self.full[s] - start)
        };
        for i in 0..bound {
            for t in self.trackers.iter_mut() {
                if t.level + 1 == level {
                    t.epoch += 1;
                }
            }
            if lp.controlling {
                self.ctrl_idx[s] = i;
            } else {
                self.body_idx[s] = i;
            }
            if level == 0 {
                self.visit();
            } else {
                self.run(level - 1);
            }
        }
    }

    #[inline]
    fn coord(&self, axis: Axis) -> usize {
        let s = slot(axis);
        (self.ctrl_idx[s] * self.tile_of_axis(axis) + self.body_idx[s]) as usize
    }

    fn tile_of_axis(&self, axis: Axis) -> u64 {
        let t = self.schedule.tiles();
        u64::from(t.get(axis).unwrap_or(1))
    }

    fn visit(&mut self) {
        let g = &self.geom;
        let m = self.coord(Axis::OF);
        let c = self.coord(Axis::IF);
        let y = self.coord(Axis::SY);
        let x = self.coord(Axis::SX);
        let fy = self.coord(Axis::FY);
        let fx = self.coord(Axis::FX);
        self.stats.iterations += 1;
        self.stats.touches_i += 1;

        let row = y * g.stride + fy;
        let col = x * g.stride + fx;
        let i_idx = (c * g.in_h + row) * g.in_w + col;
        let w_idx = ((m * g.c_in + c) * g.k_h + fy) * g.k_w + fx;
        let o_idx = (m * g.out_h + y) * g.out_w + x;

        if self.trackers[Array::I as usize].touch(i_idx).0 {
            self.stats.loads_i += 1;
        }
        if self.trackers[Array::W as usize].touch(w_idx).0 {
            self.stats.loads_w += 1;
        }
        let (fresh, seen) = self.trackers[Array::O as usize].touch(o_idx);
        if fresh && seen {
            self.stats.writes_o_partial += 1;
            self.stats.reads_o_partial += 1;
        }
    }
}

/// Executes the nest and counts transfers under the buffering assignment.
/// Refuses when the iteration count exceeds `cap`.
pub fn simulate(schedule: &Schedule, assignment: &BufferingAssignment, cap: u64) -> Result<TraceStats> {
    schedule.check_assignment(assignment)?;
    let layer = schedule.layer();
    let required = layer.macs();
    if required > cap {
        return Err(Error::OracleCap { required, cap });
    }
    let (in_h, in_w) = layer.effective_input_extent();
    let mut full = [0u64; 6];
    for axis in Axis::ALL {
        full[slot(axis)] = u64::from(crate::schedule::axis_extent(layer, axis));
    }
    let tile_of = schedule
        .loops()
        .iter()
        .map(|l| u64::from(schedule.tiles().get(l.axis).unwrap_or(full[slot(l.axis)] as u32)))
        .collect();
    let sizes = [
        layer.c_in as usize * (in_h * in_w) as usize,
        layer.weight_elements() as usize,
        layer.output_elements() as usize,
    ];
    let mut sim = Sim {
        schedule,
        tile_of,
        full,
        ctrl_idx: [0; 6],
        body_idx: [0; 6],
        trackers: [
            Tracker::new(assignment.level_i, sizes[0]),
            Tracker::new(assignment.level_w, sizes[1]),
            Tracker::new(assignment.level_o, sizes[2]),
        ],
        stats: TraceStats::default(),
        geom: Geometry {
            c_in: layer.c_in as usize,
            in_h: in_h as usize,
            in_w: in_w as usize,
            out_h: layer.out_h as usize,
            out_w: layer.out_w as usize,
            k_h: layer.k_h as usize,
            k_w: layer.k_w as usize,
            stride: layer.stride as usize,
        },
    };
    sim.run(schedule.depth() - 1);

    let mut stats = sim.stats;
    stats.writes_o_final = sim.trackers[Array::O as usize]
        .last
        .iter()
        .filter(|&&e| e != u64::MAX)
        .count() as u64;
    stats.bytes_i = stats.loads_i * u64::from(layer.p_in);
    stats.bytes_w = stats.loads_w * u64::from(layer.p_w);
    stats.bytes_o = stats.writes_o_final * u64::from(layer.p_out)
        + (stats.writes_o_partial + stats.reads_o_partial) * u64::from(layer.p_acc);
    stats.bytes_total = stats.bytes_i + stats.bytes_w + stats.bytes_o;
    Ok(stats)
}

/// Model-vs-oracle comparison, relative errors as `(model − oracle) / oracle`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub model_i: u64,
    pub model_w: u64,
    pub model_o: u64,
    pub model_total: u64,
    pub oracle: TraceStats,
    pub err_i: f64,
    pub err_w: f64,
    pub err_o: f64,
    pub err_total: f64,
    /// True when the model undercounts any array.
    pub undercount: bool,
}

fn rel(model: u64, oracle: u64) -> f64 {
    if oracle == 0 {
        if model == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (model as f64 - oracle as f64) / oracle as f64
    }
}

pub fn validate(schedule: &Schedule, assignment: &BufferingAssignment, cap: u64) -> Result<ValidationReport> {
    let oracle = simulate(schedule, assignment, cap)?;
    let report = schedule.traffic(assignment)?;
    let model_o = report.t_o_acc + report.t_o_final;
    Ok(ValidationReport {
        model_i: report.t_in,
        model_w: report.t_w,
        model_o,
        model_total: report.total,
        oracle,
        err_i: rel(report.t_in, oracle.bytes_i),
        err_w: rel(report.t_w, oracle.bytes_w),
        err_o: rel(model_o, oracle.bytes_o),
        err_total: rel(report.total, oracle.bytes_total),
        undercount: report.t_in < oracle.bytes_i || report.t_w < oracle.bytes_w || model_o < oracle.bytes_o,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::{LayerShape, Precisions};
    use crate::schedule::{Tiles, CANONICAL_ORDER};

    fn tiny() -> LayerShape {
        LayerShape::square("tiny", 6, 3, 1, 2, 4).with_precisions(Precisions::BYTE)
    }

    #[test]
    fn full_reuse_tiny_is_ideal() {
        let layer = tiny();
        let s = Schedule::new(CANONICAL_ORDER, Tiles::full(&layer), &layer).unwrap();
        let stats = simulate(&s, &BufferingAssignment::outermost(&s), DEFAULT_ITERATION_CAP).unwrap();
        assert_eq!(stats.bytes_total, 344);
        assert_eq!(stats.writes_o_final, 144);
        assert_eq!(stats.iterations, 4 * 2 * 36 * 9);
    }

    #[test]
    fn input_reloaded_per_output_map() {
        let layer = tiny();
        let s = Schedule::new(CANONICAL_ORDER, Tiles::full(&layer), &layer).unwrap();
        let stats = simulate(&s, &BufferingAssignment::new(4, 5, 5), DEFAULT_ITERATION_CAP).unwrap();
        assert_eq!(stats.loads_i, 4 * 2 * 64);
    }

    #[test]
    fn pointwise_untiled_loads_each_pixel_once() {
        let layer = LayerShape::square("pw", 5, 1, 1, 3, 2);
        let s = Schedule::new(CANONICAL_ORDER, Tiles::full(&layer), &layer).unwrap();
        let stats = simulate(&s, &BufferingAssignment::new(5, 5, 5), DEFAULT_ITERATION_CAP).unwrap();
        assert_eq!(stats.loads_i, 3 * 25);
    }

    #[test]
    fn degenerate_nest_has_zero_error() {
        let layer = LayerShape::square("u", 1, 1, 1, 1, 1);
        let s = Schedule::new(CANONICAL_ORDER, Tiles::full(&layer), &layer).unwrap();
        let v = validate(&s, &BufferingAssignment::new(0, 0, 0), DEFAULT_ITERATION_CAP).unwrap();
        assert_eq!(v.err_total, 0.0);
        assert!(!v.undercount);
    }

    #[test]
    fn cap_is_enforced() {
        let layer = tiny();
        let s = Schedule::new(CANONICAL_ORDER, Tiles::full(&layer), &layer).unwrap();
        let err = simulate(&s, &BufferingAssignment::outermost(&s), 100).unwrap_err();
        assert!(matches!(
            err,
            Error::OracleCap {
                required: 2592,
                cap: 100
            }
        ));
    }

    #[test]
    fn partial_spills_when_o_buffered_inside_if() {
        let layer = tiny();
        let s = Schedule::new(CANONICAL_ORDER, Tiles::full(&layer), &layer).unwrap();
        // O buffered at SY: every input map starts a new accumulation pass.
        let stats = simulate(&s, &BufferingAssignment::new(5, 5, 3), DEFAULT_ITERATION_CAP).unwrap();
        assert_eq!(stats.writes_o_partial, 144);
        assert_eq!(stats.reads_o_partial, stats.writes_o_partial);
    }
}
