//! Report rows, tables and the argument syntaxes shared by the CLI.

use std::io::Write;
use std::str::FromStr;

use crate::case_study::RatioRow;
use crate::error::{Error, Result};
use crate::layer::{LayerShape, LayerSuite, Precisions};
use crate::optimizer::{Distribution, Model, SearchResult, SweepMatrix, DISTRIBUTION_BINS};
use crate::schedule::TrafficReport;

/// Columns of every per-cell report, in order.
pub const REPORT_HEADER: [&str; 13] = [
    "suite",
    "layer",
    "model",
    "budget",
    "t_in",
    "t_w",
    "t_o_acc",
    "t_o_final",
    "total",
    "buffer_bytes",
    "feasible",
    "overhead_vs_ours_pct",
    "schedule",
];

/// Layer name used on per-suite aggregate rows.
pub const AGGREGATE_LAYER: &str = "ALL";

/// One (layer, model, budget) cell. `model` is one of ours, peemen, cache,
/// hwc, hwce or ideal.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub suite: String,
    pub layer: String,
    pub model: String,
    pub budget: u64,
    pub t_in: u64,
    pub t_w: u64,
    pub t_o_acc: u64,
    pub t_o_final: u64,
    pub total: u64,
    pub buffer_bytes: u64,
    pub feasible: bool,
    /// Percentage by which `total` exceeds the ours-model total of the same cell.
    pub overhead_vs_ours_pct: Option<f64>,
    pub schedule: String,
}

impl ReportRow {
    pub fn from_report(
        suite: &str,
        layer: &str,
        model: &str,
        budget: u64,
        report: &TrafficReport,
        schedule: String,
    ) -> Self {
        ReportRow {
            suite: suite.to_string(),
            layer: layer.to_string(),
            model: model.to_string(),
            budget,
            t_in: report.t_in,
            t_w: report.t_w,
            t_o_acc: report.t_o_acc,
            t_o_final: report.t_o_final,
            total: report.total,
            buffer_bytes: report.buffer_bytes(),
            feasible: report.feasible,
            overhead_vs_ours_pct: None,
            schedule,
        }
    }

    pub fn from_result(suite: &str, result: &SearchResult) -> Self {
        Self::from_report(
            suite,
            &result.layer,
            result.model.name(),
            result.budget,
            &result.report,
            result.plan.to_json(),
        )
    }

    /// Essential traffic of a layer; the same at every budget.
    pub fn ideal(suite: &str, layer: &LayerShape, budget: u64) -> Self {
        let t_in = u64::from(layer.p_in) * layer.input_elements();
        let t_w = u64::from(layer.p_w) * layer.weight_elements();
        let t_o_final = u64::from(layer.p_out) * layer.output_elements();
        ReportRow {
            suite: suite.to_string(),
            layer: layer.name.clone(),
            model: "ideal".to_string(),
            budget,
            t_in,
            t_w,
            t_o_acc: 0,
            t_o_final,
            total: t_in + t_w + t_o_final,
            buffer_bytes: 0,
            feasible: true,
            overhead_vs_ours_pct: None,
            schedule: String::new(),
        }
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.suite.clone(),
            self.layer.clone(),
            self.model.clone(),
            self.budget.to_string(),
            self.t_in.to_string(),
            self.t_w.to_string(),
            self.t_o_acc.to_string(),
            self.t_o_final.to_string(),
            self.total.to_string(),
            self.buffer_bytes.to_string(),
            self.feasible.to_string(),
            self.overhead_vs_ours_pct.map(|p| format!("{p:.3}")).unwrap_or_default(),
            self.schedule.clone(),
        ]
    }
}

fn overhead_pct(total: u64, ours: u64) -> f64 {
    100.0 * (total as f64 - ours as f64) / ours as f64
}

/// A header plus string cells, rendered as CSV or as an aligned text table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn from_rows(rows: &[ReportRow]) -> Self {
        let mut table = Table::new(&REPORT_HEADER);
        table.rows = rows.iter().map(ReportRow::record).collect();
        table
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::io("csv output", e);
        writer.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            writer.write_record(row).map_err(io)?;
        }
        writer.flush().map_err(|e| Error::io("csv output", e))
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            padded.join("  ").trim_end().to_string()
        };
        let io = |e: std::io::Error| Error::io("text output", e);
        writeln!(out, "{}", line(&self.header)).map_err(io)?;
        for row in &self.rows {
            writeln!(out, "{}", line(row)).map_err(io)?;
        }
        Ok(())
    }
}

/// Per-layer, ideal and aggregate rows for a suite sweep, ordered by layer
/// (suite order, aggregate last), model (as given, ideal last) and budget.
pub fn sweep_rows(suite: &LayerSuite, matrices: &[SweepMatrix]) -> Result<Vec<ReportRow>> {
    let Some(first) = matrices.first() else {
        return Ok(Vec::new());
    };
    let budgets = &first.budgets;
    for m in matrices {
        if &m.budgets != budgets || m.rows.len() != suite.layers.len() {
            return Err(Error::Argument("sweep matrices do not share budgets and layers".into()));
        }
    }
    let ours = matrices.iter().find(|m| m.model == Model::Ours);
    let name = suite.name.as_str();
    let mut rows = Vec::new();
    for (li, layer) in suite.layers.iter().enumerate() {
        for m in matrices {
            for (j, result) in m.rows[li].iter().enumerate() {
                let mut row = ReportRow::from_result(name, result);
                if let (Some(o), true) = (ours, m.model != Model::Ours) {
                    row.overhead_vs_ours_pct = Some(overhead_pct(row.total, o.rows[li][j].report.total));
                }
                rows.push(row);
            }
        }
        for &budget in budgets {
            rows.push(ReportRow::ideal(name, layer, budget));
        }
    }
    for m in matrices {
        for (j, &budget) in budgets.iter().enumerate() {
            let mut agg = ReportRow::from_report(
                name,
                AGGREGATE_LAYER,
                m.model.name(),
                budget,
                &TrafficReport::default(),
                String::new(),
            );
            agg.feasible = m.all_feasible(j);
            for r in &m.rows {
                let rep = &r[j].report;
                agg.t_in += rep.t_in;
                agg.t_w += rep.t_w;
                agg.t_o_acc += rep.t_o_acc;
                agg.t_o_final += rep.t_o_final;
                agg.total += rep.total;
                // Layers run one after another, so the suite needs the largest buffer.
                agg.buffer_bytes = agg.buffer_bytes.max(rep.buffer_bytes());
            }
            if let (Some(o), true) = (ours, m.model != Model::Ours) {
                agg.overhead_vs_ours_pct = Some(overhead_pct(agg.total, o.aggregate(j)));
            }
            rows.push(agg);
        }
    }
    for &budget in budgets {
        let mut agg = ReportRow::ideal(name, &suite.layers[0], budget);
        agg.layer = AGGREGATE_LAYER.to_string();
        for layer in &suite.layers[1..] {
            let r = ReportRow::ideal(name, layer, budget);
            agg.t_in += r.t_in;
            agg.t_w += r.t_w;
            agg.t_o_final += r.t_o_final;
            agg.total += r.total;
        }
        rows.push(agg);
    }
    Ok(rows)
}

/// HWC and HWCE rows of a case-study run; the HWCE overhead column is
/// relative to HWC.
pub fn case_study_rows(suite: &LayerSuite, ratios: &[RatioRow], budget: u64) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for r in ratios {
        rows.push(ReportRow::from_report(
            &suite.name,
            &r.layer,
            "hwc",
            budget,
            &r.hwc,
            r.hwc_plan.clone(),
        ));
        let mut hwce = match &r.hwce {
            Some(rep) => ReportRow::from_report(&suite.name, &r.layer, "hwce", budget, rep, String::new()),
            None => {
                let mut row = ReportRow::from_report(
                    &suite.name,
                    &r.layer,
                    "hwce",
                    budget,
                    &TrafficReport::default(),
                    String::new(),
                );
                row.feasible = false;
                row
            }
        };
        hwce.schedule = format!("jss={}", r.hwce_jss);
        hwce.overhead_vs_ours_pct = r.ratio.map(|x| 100.0 * (x - 1.0));
        rows.push(hwce);
    }
    rows
}

/// HWCE/HWC ratio table.
pub fn ratio_table(suite: &LayerSuite, ratios: &[RatioRow]) -> Table {
    let mut table = Table::new(&[
        "suite",
        "layer",
        "hwc_total",
        "hwce_total",
        "ratio",
        "css_full",
        "hwce_jss",
    ]);
    for r in ratios {
        table.push(vec![
            suite.name.clone(),
            r.layer.clone(),
            r.hwc.total.to_string(),
            r.hwce.map(|h| h.total.to_string()).unwrap_or_default(),
            r.ratio.map(|x| format!("{x:.3}")).unwrap_or_default(),
            r.css_full.to_string(),
            r.hwce_jss.to_string(),
        ]);
    }
    table
}

/// Bin fractions per budget, followed by the number of permutations binned.
pub fn distribution_table(suite: &str, dist: &Distribution) -> Table {
    let mut header = vec!["suite", "budget"];
    header.extend(DISTRIBUTION_BINS);
    header.push("permutations");
    let mut table = Table::new(&header);
    for ((budget, fractions), counts) in dist.budgets.iter().zip(dist.fractions()).zip(dist.counts()) {
        let mut row = vec![suite.to_string(), budget.to_string()];
        row.extend(fractions.iter().map(|f| format!("{f:.4}")));
        row.push(counts.iter().sum::<u64>().to_string());
        table.push(row);
    }
    table
}

/// Parses a byte count with an optional K (×1024) or M (×1024²) suffix.
pub fn parse_budget(text: &str) -> Result<u64> {
    let t = text.trim();
    let bad = || Error::Argument(format!("bad byte count `{text}`"));
    let (digits, scale) = match t.char_indices().last() {
        Some((i, 'k' | 'K')) => (&t[..i], 1024),
        Some((i, 'm' | 'M')) => (&t[..i], 1024 * 1024),
        _ => (t, 1),
    };
    let n: u64 = digits.parse().map_err(|_| bad())?;
    n.checked_mul(scale).ok_or_else(bad)
}

/// Parses a budget list: `A..B:xF` (geometric), `A..B:+S` (arithmetic),
/// `A..B` (doubling), or comma-separated byte counts.
pub fn parse_budgets(text: &str) -> Result<Vec<u64>> {
    let bad = |why: &str| Error::Argument(format!("bad budget list `{text}`: {why}"));
    let Some((from, rest)) = text.split_once("..") else {
        return text.split(',').map(parse_budget).collect();
    };
    let (to, step) = rest.split_once(':').unwrap_or((rest, "x2"));
    let (from, to) = (parse_budget(from)?, parse_budget(to)?);
    if from == 0 || from > to {
        return Err(bad("range must start above zero and not run backwards"));
    }
    let mut out = Vec::new();
    let mut b = from;
    if let Some(f) = step.strip_prefix('x') {
        let f: u64 = f.parse().map_err(|_| bad("bad factor"))?;
        if f < 2 {
            return Err(bad("factor must be at least 2"));
        }
        while b <= to {
            out.push(b);
            b = match b.checked_mul(f) {
                Some(n) => n,
                None => break,
            };
        }
    } else if let Some(s) = step.strip_prefix('+') {
        let s = parse_budget(s)?;
        if s == 0 {
            return Err(bad("step must be positive"));
        }
        while b <= to {
            out.push(b);
            b = match b.checked_add(s) {
                Some(n) => n,
                None => break,
            };
        }
    } else {
        return Err(bad("step must look like x2 or +1K"));
    }
    Ok(out)
}

/// Parses `default`, `byte`, or four comma-separated byte widths in the order
/// input, weight, output, accumulator.
pub fn parse_precisions(text: &str) -> Result<Precisions> {
    match text.trim() {
        "default" => Ok(Precisions::DEFAULT),
        "byte" => Ok(Precisions::BYTE),
        other => {
            let parts: Vec<u32> = other
                .split(',')
                .map(|p| p.trim().parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Argument(format!("bad precisions `{text}`")))?;
            let [p_in, p_w, p_out, p_acc] = parts[..] else {
                return Err(Error::Argument(format!("precisions need four widths, got `{text}`")));
            };
            Ok(Precisions {
                p_in,
                p_w,
                p_out,
                p_acc,
            })
        }
    }
}

/// Output format of the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            _ => Err(Error::Argument(format!("unknown format `{s}` (expected csv or text)"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::builtin_suite;
    use crate::optimizer::{sweep, SearchConfig};

    #[test]
    fn budget_syntax() {
        assert_eq!(parse_budget("1024").unwrap(), 1024);
        assert_eq!(parse_budget("4K").unwrap(), 4096);
        assert_eq!(parse_budget("1m").unwrap(), 1 << 20);
        assert!(parse_budget("K").is_err());
        assert!(parse_budget("1.5K").is_err());
        let range = parse_budgets("1K..512K:x2").unwrap();
        assert_eq!(range.len(), 10);
        assert_eq!(range[9], 512 * 1024);
        assert_eq!(parse_budgets("1K..256K").unwrap().len(), 9);
        assert_eq!(parse_budgets("1K..4K:+1K").unwrap(), vec![1024, 2048, 3072, 4096]);
        assert_eq!(parse_budgets("100,2K").unwrap(), vec![100, 2048]);
        assert!(parse_budgets("4K..1K").is_err());
        assert!(parse_budgets("1K..4K:x1").is_err());
        assert!(parse_budgets("1K..4K:*2").is_err());
    }

    #[test]
    fn precision_syntax() {
        assert_eq!(parse_precisions("byte").unwrap(), Precisions::BYTE);
        assert_eq!(parse_precisions("1,1,1,4").unwrap(), Precisions::DEFAULT);
        assert!(parse_precisions("1,1,1").is_err());
    }

    #[test]
    fn sweep_rows_layout() {
        let layer = LayerShape::square("one", 6, 3, 1, 2, 4);
        let suite = LayerSuite::new("s", vec![layer.clone(), LayerShape::square("two", 4, 1, 1, 3, 3)]).unwrap();
        let config = SearchConfig::default().with_budgets(vec![64, 1024]);
        let matrices: Vec<_> = Model::ALL.iter().map(|&m| sweep(&suite, &config, m).unwrap()).collect();
        let rows = sweep_rows(&suite, &matrices).unwrap();
        // Per layer: 3 models × 2 budgets + 2 ideal rows; then 4 × 2 aggregates.
        assert_eq!(rows.len(), 2 * 8 + 8);
        assert_eq!(rows[0].model, "ours");
        assert_eq!(rows[0].overhead_vs_ours_pct, None);
        assert!(rows[2].overhead_vs_ours_pct.unwrap() >= 0.0);
        let ideal: Vec<_> = rows.iter().filter(|r| r.model == "ideal" && r.layer == "one").collect();
        assert_eq!(ideal.len(), 2);
        assert_eq!(ideal[0].total, ideal[1].total);
        let agg_ours: u64 = rows
            .iter()
            .filter(|r| r.model == "ours" && r.budget == 1024 && r.layer != AGGREGATE_LAYER)
            .map(|r| r.total)
            .sum();
        let agg = rows
            .iter()
            .find(|r| r.model == "ours" && r.budget == 1024 && r.layer == AGGREGATE_LAYER)
            .unwrap();
        assert_eq!(agg.total, agg_ours);
        for r in &rows {
            assert_eq!(r.total, r.t_in + r.t_w + r.t_o_acc + r.t_o_final);
        }
    }

    #[test]
    fn csv_and_text_rendering() {
        let suite = builtin_suite("alexnet").unwrap();
        let row = ReportRow::ideal("alexnet", &suite.layers[1], 1024);
        let table = Table::from_rows(&[row]);
        let mut csv = Vec::new();
        table.write_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with(&REPORT_HEADER.join(",")));
        assert_eq!(csv.lines().count(), 2);
        let mut text = Vec::new();
        table.write_text(&mut text).unwrap();
        assert!(String::from_utf8(text).unwrap().contains("AlexNet-2"));
    }
}
