//! Fixed schedules of the HWC block and the HWCE accelerator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::layer::{LayerShape, LayerSuite, Precisions};
use crate::optimizer::tiles_text;
use crate::schedule::{Axis, BufferingAssignment, Schedule, Tiles, TrafficReport, CANONICAL_ORDER};
use crate::space::{tile_sizes, TilePolicy, HWC_ORDER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HwcConfig {
    /// Local buffer capacity in bytes.
    pub budget: u64,
    /// SIMD width; fixes the x tile of the HWC schedule.
    pub simd: u32,
    pub precisions: Precisions,
}

impl Default for HwcConfig {
    fn default() -> Self {
        HwcConfig {
            budget: 1024,
            simd: 16,
            precisions: Precisions::DEFAULT,
        }
    }
}

impl HwcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Argument("budget must be positive".into()));
        }
        if self.simd == 0 {
            return Err(Error::Argument("SIMD width must be at least 1".into()));
        }
        Ok(())
    }
}

/// A fixed schedule evaluated on one layer. `report.feasible` is false when
/// nothing fits the budget; the schedule is then the smallest candidate.
#[derive(Clone, Debug)]
pub struct FixedSchedule {
    pub schedule: Schedule,
    pub assignment: BufferingAssignment,
    pub report: TrafficReport,
}

impl FixedSchedule {
    pub fn feasible(&self) -> bool {
        self.report.feasible
    }
}

/// Levels of the HWC schedule: O across IF, I across SY, W across OF.
pub const HWC_LEVELS: BufferingAssignment = BufferingAssignment {
    level_i: 4,
    level_w: 2,
    level_o: 5,
};

/// HWC schedule: fixed loop order, x tile fixed to the SIMD width and the
/// remaining tiles searched under the budget.
pub fn hwc_schedule(layer: &LayerShape, config: &HwcConfig) -> Result<FixedSchedule> {
    hwc_schedule_with(layer, config, &TilePolicy::default())
}

pub fn hwc_schedule_with(layer: &LayerShape, config: &HwcConfig, policy: &TilePolicy) -> Result<FixedSchedule> {
    config.validate()?;
    let layer = layer.clone().with_precisions(config.precisions);
    layer.validate()?;
    let jss = config.simd.min(layer.out_w);
    let mut best: Option<((u64, u64, u64, String), FixedSchedule)> = None;
    let mut smallest: Option<((u64, u64, u64, String), FixedSchedule)> = None;
    for &mss in &tile_sizes(layer.c_out, policy)? {
        for &css in &tile_sizes(layer.c_in, policy)? {
            for &iss in &tile_sizes(layer.out_h, policy)? {
                let tiles = Tiles { mss, css, iss, jss };
                let schedule = Schedule::new(HWC_ORDER, tiles, &layer)?;
                let report = schedule.traffic(&HWC_LEVELS)?.against(config.budget);
                let key = (report.total, report.buffer_bytes(), report.t_o_acc, tiles_text(&tiles));
                let candidate = FixedSchedule {
                    schedule,
                    assignment: HWC_LEVELS,
                    report,
                };
                let size_key = (key.1, key.0, key.2, key.3.clone());
                if smallest.as_ref().is_none_or(|(k, _)| size_key < *k) {
                    smallest = Some((size_key, candidate.clone()));
                }
                if report.feasible && best.as_ref().is_none_or(|(k, _)| key < *k) {
                    best = Some((key, candidate));
                }
            }
        }
    }
    Ok(best.or(smallest).expect("tile sets are never empty").1)
}

/// HWCE schedule: canonical tile body processing one (output, input) map
/// pair over a full-height stripe, with the stripe width as large as the line
/// buffer allows.
pub fn hwce_schedule(layer: &LayerShape, config: &HwcConfig) -> Result<FixedSchedule> {
    config.validate()?;
    let layer = layer.clone().with_precisions(config.precisions);
    layer.validate()?;
    let build = |jss: u32| -> Result<FixedSchedule> {
        let tiles = Tiles {
            mss: 1,
            css: 1,
            iss: layer.out_h,
            jss,
        };
        let controlling: Vec<Axis> = [
            (Axis::SX, jss < layer.out_w),
            (Axis::OF, layer.c_out > 1),
            (Axis::IF, layer.c_in > 1),
        ]
        .into_iter()
        .filter_map(|(axis, tiled)| tiled.then_some(axis))
        .collect();
        let schedule = Schedule::with_controlling_order(CANONICAL_ORDER, &controlling, tiles, &layer)?;
        // I and W held across the body feature-map loops, O only across the kernel.
        let assignment = BufferingAssignment::new(5, 5, 1);
        let report = schedule.traffic(&assignment)?.against(config.budget);
        Ok(FixedSchedule {
            schedule,
            assignment,
            report,
        })
    };
    // Buffer bytes grow with the stripe width, so the first fit from the top wins.
    for jss in (1..=layer.out_w).rev() {
        let candidate = build(jss)?;
        if candidate.feasible() || jss == 1 {
            return Ok(candidate);
        }
    }
    unreachable!("out_w is at least 1")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub layer: String,
    pub hwc: TrafficReport,
    /// Absent when the HWCE line buffer does not fit.
    pub hwce: Option<TrafficReport>,
    /// HWCE total over HWC total, present when both are feasible.
    pub ratio: Option<f64>,
    /// Whether the HWC search kept the input maps untiled.
    pub css_full: bool,
    pub hwc_plan: String,
    pub hwce_jss: u32,
}

pub fn hwce_vs_hwc_ratio(suite: &LayerSuite, config: &HwcConfig) -> Result<Vec<RatioRow>> {
    suite
        .layers
        .iter()
        .map(|layer| {
            let hwc = hwc_schedule(layer, config)?;
            let hwce = hwce_schedule(layer, config)?;
            let hwce_report = hwce.feasible().then_some(hwce.report);
            let ratio = match hwce_report {
                Some(e) if hwc.feasible() => Some(e.total as f64 / hwc.report.total as f64),
                _ => None,
            };
            Ok(RatioRow {
                layer: layer.name.clone(),
                hwc: hwc.report,
                hwce: hwce_report,
                ratio,
                css_full: hwc.schedule.tiles().css == layer.c_in,
                hwc_plan: hwc.schedule.spec(&hwc.assignment).to_json(),
                hwce_jss: hwce.schedule.tiles().jss,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::builtin_suite;
    use crate::oracle::{validate, DEFAULT_ITERATION_CAP};
    use crate::schedule::ideal_traffic;

    fn tiny() -> LayerShape {
        LayerShape::square("tiny", 6, 3, 1, 2, 4)
    }

    #[test]
    fn hwc_levels_sit_on_the_commented_loops() {
        let layer = tiny();
        let hwc = hwc_schedule(&layer, &HwcConfig::default()).unwrap();
        let loops = hwc.schedule.loops();
        assert_eq!(loops[HWC_LEVELS.level_o].axis, Axis::IF);
        assert_eq!(loops[HWC_LEVELS.level_i].axis, Axis::SY);
        assert_eq!(loops[HWC_LEVELS.level_w].axis, Axis::OF);
        assert!(!loops[5].controlling);
    }

    #[test]
    fn hwc_on_alexnet2_accumulates_locally() {
        let suite = builtin_suite("alexnet").unwrap();
        let layer = suite.layer("AlexNet-2").unwrap();
        let hwc = hwc_schedule(layer, &HwcConfig::default()).unwrap();
        assert!(hwc.feasible());
        assert_eq!(hwc.report.t_o_acc, 0);
        assert_eq!(hwc.schedule.tiles().css, layer.c_in);
        assert_eq!(hwc.schedule.tiles().jss, 16);
        assert!(hwc.report.buffer_bytes() <= 1024);
    }

    #[test]
    fn hwce_stripe_is_widest_fit() {
        // Line buffer 3·((j−1)+3) bytes + 9 weights + 4 accumulator bytes.
        let layer = LayerShape::square("wide", 200, 3, 1, 2, 2);
        let config = HwcConfig {
            budget: 100,
            ..HwcConfig::default()
        };
        let hwce = hwce_schedule(&layer, &config).unwrap();
        let jss = hwce.schedule.tiles().jss;
        assert!(hwce.feasible());
        assert_eq!(jss, 27);
        assert_eq!(hwce.report.buffer_bytes(), 3 * 29 + 9 + 4);
    }

    #[test]
    fn hwce_infeasible_when_one_column_does_not_fit() {
        let layer = LayerShape::square("big-kernel", 8, 11, 1, 1, 1);
        let config = HwcConfig {
            budget: 128,
            ..HwcConfig::default()
        };
        let hwce = hwce_schedule(&layer, &config).unwrap();
        assert!(!hwce.feasible());
        assert_eq!(hwce.schedule.tiles().jss, 1);
    }

    #[test]
    fn hwce_spills_partial_sums_per_input_map() {
        let layer = tiny();
        let hwce = hwce_schedule(&layer, &HwcConfig::default()).unwrap();
        let d = layer.output_elements();
        assert_eq!(hwce.report.t_o_final, d);
        assert_eq!(hwce.report.t_o_acc, 2 * 4 * d * (u64::from(layer.c_in) - 1));
        let v = validate(&hwce.schedule, &hwce.assignment, DEFAULT_ITERATION_CAP).unwrap();
        assert_eq!(v.err_total, 0.0);
        assert_eq!(v.oracle.writes_o_partial, d * (u64::from(layer.c_in) - 1));
    }

    #[test]
    fn single_map_layer_differs_only_in_weight_reloads() {
        let layer = LayerShape::square("single", 12, 3, 1, 1, 1);
        let config = HwcConfig::default();
        let hwc = hwc_schedule(&layer, &config).unwrap();
        let hwce = hwce_schedule(&layer, &config).unwrap();
        assert_eq!(hwce.report.total, ideal_traffic(&layer));
        assert_eq!(hwc.report.t_in, hwce.report.t_in);
        assert_eq!(
            hwc.report.t_o_final + hwc.report.t_o_acc,
            hwce.report.t_o_final + hwce.report.t_o_acc
        );
        // W is held below SY, so the kernel is fetched once per output row.
        assert_eq!(hwce.report.t_w, 9);
        assert_eq!(hwc.report.t_w, 9 * 12);
    }

    #[test]
    fn oracle_agrees_on_both_schedules() {
        let layer = LayerShape::square("small", 10, 3, 2, 3, 5);
        let config = HwcConfig {
            budget: 512,
            simd: 4,
            ..HwcConfig::default()
        };
        for fixed in [
            hwc_schedule(&layer, &config).unwrap(),
            hwce_schedule(&layer, &config).unwrap(),
        ] {
            let v = validate(&fixed.schedule, &fixed.assignment, DEFAULT_ITERATION_CAP).unwrap();
            assert!(!v.undercount);
            assert_eq!(v.model_total, v.oracle.bytes_total);
        }
    }

    #[test]
    fn config_validation() {
        let bad = HwcConfig {
            simd: 0,
            ..HwcConfig::default()
        };
        assert!(hwc_schedule(&tiny(), &bad).is_err());
    }
}
