//! Tiled loop-nests, reuse analysis, footprints, buffer sizes and traffic.
//!
//! A [`Schedule`] is a list of loops indexed innermost-first. Every axis has one
//! tile-body loop; the four tileable axes additionally get a controlling loop
//! when their tile is smaller than the axis extent. Controlling loops always sit
//! outside the tile body.
//!
//! Traffic is counted per buffering-loop instance: an array buffered at level
//! `l` is fetched once per distinct element touched during each full execution
//! of loop `l`. The count factorizes over the four data dimensions (output maps,
//! input maps, rows, columns), so edge tiles and input halos are summed exactly
//! rather than approximated.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layer::LayerShape;

/// Loop axes of the canonical convolution nest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    FX,
    FY,
    SX,
    SY,
    IF,
    OF,
}

impl Axis {
    pub const ALL: [Axis; 6] = [Axis::FX, Axis::FY, Axis::SX, Axis::SY, Axis::IF, Axis::OF];

    /// Axes that may be tiled, in the fixed controlling order (outermost first).
    pub const TILED: [Axis; 4] = [Axis::OF, Axis::IF, Axis::SY, Axis::SX];

    pub fn name(self) -> &'static str {
        match self {
            Axis::FX => "FX",
            Axis::FY => "FY",
            Axis::SX => "SX",
            Axis::SY => "SY",
            Axis::IF => "IF",
            Axis::OF => "OF",
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        Axis::ALL.into_iter().find(|a| a.name().eq_ignore_ascii_case(s.trim()))
    }

    pub fn is_kernel(self) -> bool {
        matches!(self, Axis::FX | Axis::FY)
    }

    pub fn is_tileable(self) -> bool {
        !self.is_kernel()
    }

    /// The horizontal/vertical mirror image of this axis.
    pub fn transposed(self) -> Axis {
        match self {
            Axis::FX => Axis::FY,
            Axis::FY => Axis::FX,
            Axis::SX => Axis::SY,
            Axis::SY => Axis::SX,
            other => other,
        }
    }

    fn dim(self) -> Dim {
        match self {
            Axis::OF => Dim::M,
            Axis::IF => Dim::C,
            Axis::SY | Axis::FY => Dim::Y,
            Axis::SX | Axis::FX => Dim::X,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The three array references of the nest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Array {
    I,
    W,
    O,
}

impl Array {
    pub const ALL: [Array; 3] = [Array::I, Array::W, Array::O];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dim {
    M,
    C,
    Y,
    X,
}

impl Dim {
    const ALL: [Dim; 4] = [Dim::M, Dim::C, Dim::Y, Dim::X];
}

/// One loop of a tiled nest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Loop {
    pub axis: Axis,
    pub extent: u64,
    /// True for a tile-count loop, false for a tile-body loop.
    pub controlling: bool,
}

/// Tile sizes of the four tileable axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Tiles {
    pub mss: u32,
    pub css: u32,
    pub iss: u32,
    pub jss: u32,
}

impl Tiles {
    /// The untiled choice: every tile equals its extent.
    pub fn full(layer: &LayerShape) -> Tiles {
        Tiles {
            mss: layer.c_out,
            css: layer.c_in,
            iss: layer.out_h,
            jss: layer.out_w,
        }
    }

    pub fn get(&self, axis: Axis) -> Option<u32> {
        match axis {
            Axis::OF => Some(self.mss),
            Axis::IF => Some(self.css),
            Axis::SY => Some(self.iss),
            Axis::SX => Some(self.jss),
            _ => None,
        }
    }

    pub fn transposed(&self) -> Tiles {
        Tiles {
            iss: self.jss,
            jss: self.iss,
            ..*self
        }
    }
}

/// Full extent of an axis for a layer (tile-body extent before tiling).
pub fn axis_extent(layer: &LayerShape, axis: Axis) -> u32 {
    match axis {
        Axis::FX => layer.k_w,
        Axis::FY => layer.k_h,
        Axis::SX => layer.out_w,
        Axis::SY => layer.out_h,
        Axis::IF => layer.c_in,
        Axis::OF => layer.c_out,
    }
}

/// Per-array buffering levels, as indices into [`Schedule::loops`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BufferingAssignment {
    #[serde(rename = "I")]
    pub level_i: usize,
    #[serde(rename = "W")]
    pub level_w: usize,
    #[serde(rename = "O")]
    pub level_o: usize,
}

impl BufferingAssignment {
    pub fn new(level_i: usize, level_w: usize, level_o: usize) -> Self {
        BufferingAssignment {
            level_i,
            level_w,
            level_o,
        }
    }

    /// Every array buffered at the outermost loop.
    pub fn outermost(schedule: &Schedule) -> Self {
        let top = schedule.depth() - 1;
        BufferingAssignment::new(top, top, top)
    }

    pub fn level(&self, array: Array) -> usize {
        match array {
            Array::I => self.level_i,
            Array::W => self.level_w,
            Array::O => self.level_o,
        }
    }

    pub fn set(&mut self, array: Array, level: usize) {
        match array {
            Array::I => self.level_i = level,
            Array::W => self.level_w = level,
            Array::O => self.level_o = level,
        }
    }
}

/// Whether a loop carries reuse of an array, and at what distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReuseDescriptor {
    pub carries: bool,
    pub distance: u64,
}

impl ReuseDescriptor {
    const NONE: ReuseDescriptor = ReuseDescriptor {
        carries: false,
        distance: 1,
    };

    fn carried(distance: u64) -> Self {
        ReuseDescriptor {
            carries: distance > 1,
            distance: distance.max(1),
        }
    }
}

/// Off-accelerator traffic and buffer occupancy of one schedule, in bytes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrafficReport {
    pub t_in: u64,
    pub t_w: u64,
    pub t_o_acc: u64,
    pub t_o_final: u64,
    pub total: u64,
    pub b_in: u64,
    pub b_w: u64,
    pub b_o: u64,
    pub feasible: bool,
}

impl TrafficReport {
    pub fn buffer_bytes(&self) -> u64 {
        self.b_in + self.b_w + self.b_o
    }

    /// Same report with feasibility evaluated against `budget` bytes.
    pub fn against(mut self, budget: u64) -> Self {
        self.feasible = self.buffer_bytes() <= budget;
        self
    }
}

/// Essential traffic: every input, weight and output element moved once.
pub fn ideal_traffic(layer: &LayerShape) -> u64 {
    u64::from(layer.p_in) * layer.input_elements()
        + u64::from(layer.p_w) * layer.weight_elements()
        + u64::from(layer.p_out) * layer.output_elements()
}

/// Deepest possible nest: six tile-body loops plus four controlling loops.
pub const MAX_DEPTH: usize = 10;

/// Loop positions and extents of one data dimension.
#[derive(Clone, Copy, Debug, Default)]
struct DimLoops {
    extent: u64,
    tile: u64,
    body: usize,
    ctrl: Option<usize>,
    /// Kernel loop position and kernel extent, for the two spatial dimensions.
    kernel: Option<(usize, u64)>,
}

/// Allocation-free analysis view of a nest, shared by [`Schedule`] and the
/// search engines.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Nest {
    loops: [Loop; MAX_DEPTH],
    depth: usize,
    dims: [DimLoops; 4],
    body_pos: [usize; 6],
    stride: u64,
    k_h: u64,
    k_w: u64,
    p_in: u64,
    p_w: u64,
    p_out: u64,
    p_acc: u64,
    outputs: u64,
}

fn axis_slot(axis: Axis) -> usize {
    axis as usize
}

impl Nest {
    /// Builds the nest without validation; callers guarantee the invariants.
    pub(crate) fn build(layer: &LayerShape, order: &[Axis; 6], controlling: &[Axis], tiles: Tiles) -> Nest {
        let filler = Loop {
            axis: Axis::FX,
            extent: 1,
            controlling: false,
        };
        let mut loops = [filler; MAX_DEPTH];
        let mut body_pos = [0usize; 6];
        let mut ctrl_pos = [None; 6];
        for (i, &axis) in order.iter().enumerate() {
            loops[i] = Loop {
                axis,
                extent: u64::from(tiles.get(axis).unwrap_or_else(|| axis_extent(layer, axis))),
                controlling: false,
            };
            body_pos[axis_slot(axis)] = i;
        }
        let mut depth = 6;
        for &axis in controlling.iter().rev() {
            let extent = u64::from(axis_extent(layer, axis));
            let tile = u64::from(tiles.get(axis).unwrap());
            loops[depth] = Loop {
                axis,
                extent: extent.div_ceil(tile),
                controlling: true,
            };
            ctrl_pos[axis_slot(axis)] = Some(depth);
            depth += 1;
        }
        let dim = |axis: Axis, kernel: Option<(Axis, u32)>| DimLoops {
            extent: u64::from(axis_extent(layer, axis)),
            tile: u64::from(tiles.get(axis).unwrap()),
            body: body_pos[axis_slot(axis)],
            ctrl: ctrl_pos[axis_slot(axis)],
            kernel: kernel.map(|(a, k)| (body_pos[axis_slot(a)], u64::from(k))),
        };
        Nest {
            loops,
            depth,
            dims: [
                dim(Axis::OF, None),
                dim(Axis::IF, None),
                dim(Axis::SY, Some((Axis::FY, layer.k_h))),
                dim(Axis::SX, Some((Axis::FX, layer.k_w))),
            ],
            body_pos,
            stride: u64::from(layer.stride),
            k_h: u64::from(layer.k_h),
            k_w: u64::from(layer.k_w),
            p_in: u64::from(layer.p_in),
            p_w: u64::from(layer.p_w),
            p_out: u64::from(layer.p_out),
            p_acc: u64::from(layer.p_acc),
            outputs: layer.output_elements(),
        }
    }

    pub(crate) fn depth(&self) -> usize {
        self.depth
    }

    pub(crate) fn loops(&self) -> &[Loop] {
        &self.loops[..self.depth]
    }

    fn kernel_of(&self, axis: Axis) -> u64 {
        match axis.dim() {
            Dim::Y => self.k_h,
            Dim::X => self.k_w,
            _ => 1,
        }
    }

    fn reuse(&self, array: Array, index: usize) -> ReuseDescriptor {
        let lp = self.loops[index];
        if lp.extent <= 1 {
            return ReuseDescriptor::NONE;
        }
        match (array, lp.axis) {
            (Array::W, Axis::SX | Axis::SY) => ReuseDescriptor::carried(lp.extent),
            (Array::O, Axis::IF | Axis::FX | Axis::FY) => ReuseDescriptor::carried(lp.extent),
            (Array::I, Axis::OF) => ReuseDescriptor::carried(lp.extent),
            (Array::I, Axis::SX | Axis::SY) if lp.controlling => {
                // Adjacent tiles share a halo of input rows or columns.
                if self.stride < self.kernel_of(lp.axis) {
                    ReuseDescriptor::carried(2)
                } else {
                    ReuseDescriptor::NONE
                }
            }
            (Array::I, Axis::SX | Axis::SY | Axis::FX | Axis::FY) => {
                let partner = match lp.axis {
                    Axis::SX => Axis::FX,
                    Axis::FX => Axis::SX,
                    Axis::SY => Axis::FY,
                    _ => Axis::SY,
                };
                let p = self.body_pos[axis_slot(partner)];
                let k = self.kernel_of(lp.axis);
                if p < index && self.loops[p].extent > 1 && self.stride < k {
                    ReuseDescriptor::carried(k.min(lp.extent))
                } else {
                    ReuseDescriptor::NONE
                }
            }
            _ => ReuseDescriptor::NONE,
        }
    }

    pub(crate) fn footprint(&self, array: Array, level: isize) -> u64 {
        if level < 0 {
            return 1;
        }
        Dim::ALL
            .into_iter()
            .zip(&self.dims)
            .map(|(d, dl)| dim_terms(array, d, dl, level as usize, self.stride).0)
            .product()
    }

    fn transfers(&self, array: Array, level: usize) -> u64 {
        Dim::ALL
            .into_iter()
            .zip(&self.dims)
            .map(|(d, dl)| dim_terms(array, d, dl, level, self.stride).1)
            .product()
    }

    fn buffer_size(&self, array: Array, level: usize) -> u64 {
        match (0..=level).rev().find(|&i| self.reuse(array, i).carries) {
            Some(c) => self.footprint(array, c as isize - 1),
            None => 1,
        }
    }

    /// `(buffer bytes, traffic bytes)` of one array at every level. O traffic
    /// includes the final writes.
    pub(crate) fn level_costs(&self, array: Array, out: &mut [(u64, u64); MAX_DEPTH]) {
        let mut footprints = [(0u64, 0u64); MAX_DEPTH];
        for (level, slot) in footprints.iter_mut().enumerate().take(self.depth) {
            let mut f = 1;
            let mut t = 1;
            for (d, dl) in Dim::ALL.into_iter().zip(&self.dims) {
                let (a, b) = dim_terms(array, d, dl, level, self.stride);
                f *= a;
                t *= b;
            }
            *slot = (f, t);
        }
        let mut elems = 1;
        for level in 0..self.depth {
            if self.reuse(array, level).carries {
                elems = if level == 0 { 1 } else { footprints[level - 1].0 };
            }
            let moved = footprints[level].1;
            out[level] = match array {
                Array::I => (elems * self.p_in, moved * self.p_in),
                Array::W => (elems * self.p_w, moved * self.p_w),
                Array::O => (
                    elems * self.p_acc,
                    self.p_out * self.outputs + 2 * self.p_acc * (moved - self.outputs),
                ),
            };
        }
    }

    fn report(&self, a: &BufferingAssignment) -> TrafficReport {
        let d = self.outputs;
        let t_in = self.p_in * self.transfers(Array::I, a.level_i);
        let t_w = self.p_w * self.transfers(Array::W, a.level_w);
        let visits = self.transfers(Array::O, a.level_o);
        let t_o_final = self.p_out * d;
        let t_o_acc = 2 * self.p_acc * (visits - d);
        TrafficReport {
            t_in,
            t_w,
            t_o_acc,
            t_o_final,
            total: t_in + t_w + t_o_acc + t_o_final,
            b_in: self.p_in * self.buffer_size(Array::I, a.level_i),
            b_w: self.p_w * self.buffer_size(Array::W, a.level_w),
            b_o: self.p_acc * self.buffer_size(Array::O, a.level_o),
            feasible: true,
        }
    }
}

/// A tiled, ordered loop-nest instantiated for one layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    layer: LayerShape,
    order: [Axis; 6],
    controlling: Vec<Axis>,
    tiles: Tiles,
    loops: Vec<Loop>,
}

impl Schedule {
    /// Tile-body loops in `order` (innermost first) with the controlling loops
    /// of tiled axes outside them in the fixed order TOF, TIF, TSY, TSX.
    pub fn new(order: [Axis; 6], tiles: Tiles, layer: &LayerShape) -> Result<Schedule> {
        let controlling = default_controlling(layer, &tiles);
        Self::with_controlling_order(order, &controlling, tiles, layer)
    }

    /// Like [`Schedule::new`] with an explicit controlling-loop order
    /// (outermost first). `controlling` must list exactly the tiled axes.
    pub fn with_controlling_order(
        order: [Axis; 6],
        controlling: &[Axis],
        tiles: Tiles,
        layer: &LayerShape,
    ) -> Result<Schedule> {
        layer.validate()?;
        let mut seen = [false; 6];
        for axis in order {
            if std::mem::replace(&mut seen[axis_slot(axis)], true) {
                return Err(Error::schedule(format!("axis {axis} appears twice in the loop order")));
            }
        }
        if controlling.iter().any(|a| a.is_kernel()) {
            return Err(Error::schedule("kernel axes cannot be tiled"));
        }
        for axis in Axis::TILED {
            let tile = tiles.get(axis).unwrap();
            let extent = axis_extent(layer, axis);
            if tile == 0 || tile > extent {
                return Err(Error::schedule(format!(
                    "tile {tile} for axis {axis} is outside [1, {extent}]"
                )));
            }
            let tiled = tile < extent;
            let listed = controlling.iter().filter(|&&a| a == axis).count();
            if listed > 1 || (listed == 1) != tiled {
                return Err(Error::schedule(format!(
                    "axis {axis} needs {} controlling loop",
                    if tiled { "exactly one" } else { "no" }
                )));
            }
        }
        let nest = Nest::build(layer, &order, controlling, tiles);
        Ok(Schedule {
            layer: layer.clone(),
            order,
            controlling: controlling.to_vec(),
            tiles,
            loops: nest.loops[..nest.depth].to_vec(),
        })
    }

    pub(crate) fn nest(&self) -> Nest {
        Nest::build(&self.layer, &self.order, &self.controlling, self.tiles)
    }

    pub fn layer(&self) -> &LayerShape {
        &self.layer
    }

    /// Tile-body order, innermost first.
    pub fn order(&self) -> [Axis; 6] {
        self.order
    }

    /// Controlling loops, outermost first.
    pub fn controlling(&self) -> &[Axis] {
        &self.controlling
    }

    pub fn tiles(&self) -> Tiles {
        self.tiles
    }

    /// All loops, innermost first.
    pub fn loops(&self) -> &[Loop] {
        &self.loops
    }

    pub fn depth(&self) -> usize {
        self.loops.len()
    }

    /// Whether the controlling loops follow the fixed TOF, TIF, TSY, TSX order.
    pub fn has_default_controlling_order(&self) -> bool {
        default_controlling(&self.layer, &self.tiles) == self.controlling
    }

    pub fn position(&self, axis: Axis, controlling: bool) -> Option<usize> {
        self.loops
            .iter()
            .position(|l| l.axis == axis && l.controlling == controlling)
    }

    /// Mirror image of this schedule for [`LayerShape::transposed`].
    pub fn transposed(&self) -> Result<Schedule> {
        let order = self.order.map(Axis::transposed);
        let controlling: Vec<Axis> = self.controlling.iter().map(|a| a.transposed()).collect();
        Schedule::with_controlling_order(order, &controlling, self.tiles.transposed(), &self.layer.transposed())
    }

    pub fn check_assignment(&self, assignment: &BufferingAssignment) -> Result<()> {
        for array in Array::ALL {
            let level = assignment.level(array);
            if level >= self.depth() {
                return Err(Error::schedule(format!(
                    "buffering level {level} for {array:?} is outside [0, {}]",
                    self.depth() - 1
                )));
            }
        }
        Ok(())
    }

    /// Whether loop `index` carries reuse of `array`, and the reuse distance.
    pub fn reuse_descriptor(&self, array: Array, index: usize) -> ReuseDescriptor {
        assert!(index < self.depth(), "loop index {index} out of range");
        self.nest().reuse(array, index)
    }

    /// Distinct elements of `array` touched by one execution of loop `level`;
    /// `level = -1` is the single-iteration base case.
    pub fn footprint(&self, array: Array, level: isize) -> u64 {
        assert!(
            level >= -1 && level < self.depth() as isize,
            "footprint level {level} outside [-1, {}]",
            self.depth() - 1
        );
        self.nest().footprint(array, level)
    }

    /// Local buffer elements needed to hold `array` at buffering level `level`.
    pub fn buffer_size(&self, array: Array, level: usize) -> u64 {
        assert!(level < self.depth(), "buffering level {level} out of range");
        self.nest().buffer_size(array, level)
    }

    /// Elements of `array` fetched from (or, for O, visited in) off-accelerator
    /// memory when buffered at `level`.
    pub fn transfers(&self, array: Array, level: usize) -> u64 {
        assert!(level < self.depth(), "buffering level {level} out of range");
        self.nest().transfers(array, level)
    }

    /// Traffic and buffer occupancy for a buffering assignment.
    pub fn traffic(&self, assignment: &BufferingAssignment) -> Result<TrafficReport> {
        self.check_assignment(assignment)?;
        Ok(self.nest().report(assignment))
    }

    /// Per-level `(buffer bytes, traffic bytes)` of one array, for every level.
    /// For O the traffic includes the final writes.
    pub fn level_costs(&self, array: Array) -> Vec<(u64, u64)> {
        let mut out = [(0, 0); MAX_DEPTH];
        let nest = self.nest();
        nest.level_costs(array, &mut out);
        out[..nest.depth].to_vec()
    }

    pub fn spec(&self, assignment: &BufferingAssignment) -> ScheduleSpec {
        ScheduleSpec {
            order: self.order,
            tiles: self.tiles,
            buffering: *assignment,
            controlling: if self.has_default_controlling_order() {
                None
            } else {
                Some(self.controlling.clone())
            },
        }
    }
}

/// Tiled axes in the fixed controlling order, outermost first.
pub(crate) fn default_controlling(layer: &LayerShape, tiles: &Tiles) -> Vec<Axis> {
    Axis::TILED
        .into_iter()
        .filter(|&a| tiles.get(a) < Some(axis_extent(layer, a)))
        .collect()
}

/// Inner-loop window of `e` output positions and `k` taps at stride `s`.
pub(crate) fn window(e: u64, k: u64, s: u64) -> u64 {
    if s >= k {
        e * k
    } else {
        (e - 1) * s + k
    }
}

/// Footprint factor of the first (full) tile and the summed transfer factor of
/// one data dimension for `array` buffered at `level`.
#[inline]
fn dim_terms(array: Array, dim: Dim, dl: &DimLoops, level: usize, stride: u64) -> (u64, u64) {
    let inside = |p: usize| p <= level;
    let tiled_outside = dl.ctrl.is_some_and(|p| !inside(p));
    let (full, count_full, rem) = if tiled_outside {
        (dl.tile, dl.extent / dl.tile, dl.extent % dl.tile)
    } else {
        (dl.extent, 1, 0)
    };
    let body_in = inside(dl.body);
    let (k_in, k_out) = match dl.kernel {
        Some((p, k)) if inside(p) => (k, 1),
        Some((_, k)) => (1, k),
        None => (1, 1),
    };
    let term = |e: u64| -> (u64, u64) {
        let cov = if body_in { e } else { 1 };
        let instances = if body_in { 1 } else { e } * k_out;
        let factor = match (array, dim) {
            (Array::I, Dim::M) | (Array::O, Dim::C) => 1,
            (Array::I, Dim::C) | (Array::W, Dim::M | Dim::C) | (Array::O, Dim::M) => cov,
            (Array::I, _) => window(cov, k_in, stride),
            (Array::W, _) => k_in,
            (Array::O, _) => cov,
        };
        (factor, factor * instances)
    };
    let (first, per_full) = term(full);
    let mut total = per_full * count_full;
    if rem > 0 {
        total += term(rem).1;
    }
    (first, total)
}

/// Serialized form of a schedule plus buffering assignment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    /// Tile-body axes, innermost first.
    pub order: [Axis; 6],
    pub tiles: Tiles,
    pub buffering: BufferingAssignment,
    /// Controlling axes, outermost first; omitted for the default order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controlling: Option<Vec<Axis>>,
}

impl ScheduleSpec {
    pub fn parse(text: &str) -> Result<ScheduleSpec> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schedule specs always serialize")
    }

    pub fn instantiate(&self, layer: &LayerShape) -> Result<(Schedule, BufferingAssignment)> {
        let schedule = match &self.controlling {
            Some(c) => Schedule::with_controlling_order(self.order, c, self.tiles, layer)?,
            None => Schedule::new(self.order, self.tiles, layer)?,
        };
        schedule.check_assignment(&self.buffering)?;
        Ok((schedule, self.buffering))
    }
}

/// Canonical nest order, innermost first: FX, FY, SX, SY, IF, OF.
pub const CANONICAL_ORDER: [Axis; 6] = [Axis::FX, Axis::FY, Axis::SX, Axis::SY, Axis::IF, Axis::OF];
