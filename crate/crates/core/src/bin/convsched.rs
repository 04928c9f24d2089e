use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use convsched::case_study::{hwce_vs_hwc_ratio, HwcConfig};
use convsched::optimizer::{distribution, search, sweep, Distribution, Model, SearchConfig};
use convsched::oracle::{validate, DEFAULT_ITERATION_CAP};
use convsched::report::{
    case_study_rows, distribution_table, parse_budget, parse_budgets, parse_precisions, ratio_table, sweep_rows,
    Format, ReportRow, Table,
};
use convsched::schedule::{ideal_traffic, Array, ScheduleSpec};
use convsched::space::TilePolicy;
use convsched::{builtin_suite, parse_layer_suite, Error, LayerShape, LayerSuite, Precisions};

/// Memory-traffic model and schedule search for tiled CNN convolution layers.
#[derive(Parser)]
#[command(name = "convsched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Buffer sizes, traffic and feasibility of one schedule.
    Analyze {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        pick: Pick,
        /// Schedule document: a file path or inline JSON.
        #[arg(long)]
        schedule: String,
        #[arg(long, value_parser = budget_arg)]
        budget: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Best schedule of one layer under one budget.
    Search {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        pick: Pick,
        #[arg(long, value_parser = budget_arg)]
        budget: u64,
        #[arg(long, default_value = "ours", value_parser = model_arg)]
        model: Model,
        #[command(flatten)]
        space: Space,
        #[command(flatten)]
        output: Output,
    },
    /// Best traffic of every layer, model and budget, with suite aggregates.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "1K..256K:x2", value_parser = budgets_arg)]
        budgets: Budgets,
        /// Models to run, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "ours,peemen,cache", value_parser = model_arg)]
        model: Vec<Model>,
        #[command(flatten)]
        space: Space,
        #[command(flatten)]
        output: Output,
    },
    /// Compares the model with the trace simulator on one schedule.
    Validate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        pick: Pick,
        /// Schedule document: a file path or inline JSON.
        #[arg(long)]
        schedule: String,
        /// Also report feasibility against this budget.
        #[arg(long, value_parser = budget_arg)]
        budget: Option<u64>,
        /// Largest number of loop iterations the simulator will run.
        #[arg(long, default_value_t = DEFAULT_ITERATION_CAP)]
        oracle_cap: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Bins the loop orders by traffic relative to the best order.
    Distribution {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "1K..256K:x2", value_parser = budgets_arg)]
        budgets: Budgets,
        #[command(flatten)]
        space: Space,
        #[command(flatten)]
        output: Output,
    },
    /// HWC and HWCE schedules and their traffic ratio per layer.
    CaseStudy {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "1K", value_parser = budget_arg)]
        budget: u64,
        #[arg(long, default_value_t = 16)]
        simd: u32,
        /// Print per-array rows instead of the ratio table.
        #[arg(long)]
        rows: bool,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SuiteChoice {
    /// Built-in suite: alexnet, zfnet, vgg, inception-v3 or resnet.
    #[arg(long)]
    suite: Option<String>,
    /// JSON layer-suite file.
    #[arg(long)]
    layer_file: Option<PathBuf>,
}

#[derive(Args)]
struct Source {
    #[command(flatten)]
    choice: SuiteChoice,
    /// Override element widths: `default`, `byte`, or `in,w,out,acc`.
    #[arg(long, value_parser = precisions_arg)]
    precisions: Option<Precisions>,
}

#[derive(Args)]
struct Pick {
    /// Layer name; optional for single-layer suites.
    #[arg(long)]
    layer: Option<String>,
}

#[derive(Args)]
struct Space {
    /// pow2, pow2+extent, coarse, or list:a,b,...
    #[arg(long, default_value = "pow2+extent", value_parser = policy_arg)]
    tile_policy: TilePolicy,
    /// Search all 720 loop orders instead of one per symmetry class.
    #[arg(long)]
    no_prune: bool,
}

#[derive(Args)]
struct Output {
    /// csv or text; matrices default to csv, single results to text.
    #[arg(long, value_parser = format_arg)]
    format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn budget_arg(s: &str) -> Result<u64, String> {
    parse_budget(s).map_err(|e| e.to_string())
}

/// A parsed budget list; a newtype so clap keeps it as one value.
#[derive(Clone)]
struct Budgets(Vec<u64>);

fn budgets_arg(s: &str) -> Result<Budgets, String> {
    parse_budgets(s).map(Budgets).map_err(|e| e.to_string())
}

fn precisions_arg(s: &str) -> Result<Precisions, String> {
    parse_precisions(s).map_err(|e| e.to_string())
}

fn policy_arg(s: &str) -> Result<TilePolicy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn model_arg(s: &str) -> Result<Model, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn format_arg(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Error(Error),
    /// The model undercounts the oracle somewhere.
    Undercount,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

impl Source {
    fn load(&self) -> CliResult<LayerSuite> {
        let mut suite = match (&self.choice.suite, &self.choice.layer_file) {
            (Some(name), _) => builtin_suite(name)?,
            (None, Some(path)) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
                parse_layer_suite(&text)?
            }
            (None, None) => unreachable!("clap requires one source"),
        };
        if let Some(p) = self.precisions {
            for layer in &mut suite.layers {
                *layer = layer.clone().with_precisions(p);
            }
            suite.validate()?;
        }
        Ok(suite)
    }
}

impl Pick {
    fn layer<'a>(&self, suite: &'a LayerSuite) -> CliResult<&'a LayerShape> {
        match &self.layer {
            Some(name) => suite
                .layer(name)
                .ok_or_else(|| Failure::Usage(format!("no layer `{name}` in suite `{}`", suite.name))),
            None if suite.layers.len() == 1 => Ok(&suite.layers[0]),
            None => Err(Failure::Usage(format!(
                "suite `{}` has {} layers; pick one with --layer",
                suite.name,
                suite.layers.len()
            ))),
        }
    }
}

impl Space {
    fn config(&self, budgets: Vec<u64>) -> SearchConfig {
        SearchConfig {
            budgets,
            policy: self.tile_policy.clone(),
            prune: !self.no_prune,
            threads: None,
        }
    }
}

impl Output {
    fn sink(&self) -> CliResult<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(io::BufWriter::new(
                fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn emit(&self, table: &Table, default: Format) -> CliResult {
        let mut sink = self.sink()?;
        match self.format.unwrap_or(default) {
            Format::Csv => table.write_csv(&mut sink)?,
            Format::Text => table.write_text(&mut sink)?,
        }
        sink.flush().map_err(|e| Error::io("output", e))?;
        Ok(())
    }
}

fn read_schedule(arg: &str) -> CliResult<ScheduleSpec> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(Path::new(arg)).map_err(|e| Error::io(arg, e))?
    };
    Ok(ScheduleSpec::parse(&text)?)
}

fn positive(budget: u64) -> CliResult<u64> {
    if budget == 0 {
        return Err(Error::Argument("budget must be positive".into()).into());
    }
    Ok(budget)
}

fn analyze(source: &Source, pick: &Pick, schedule: &str, budget: u64, output: &Output) -> CliResult {
    let budget = positive(budget)?;
    let suite = source.load()?;
    let layer = pick.layer(&suite)?;
    let spec = read_schedule(schedule)?;
    let (schedule, assignment) = spec.instantiate(layer)?;
    let report = schedule.traffic(&assignment)?.against(budget);
    if output.format == Some(Format::Csv) {
        let row = ReportRow::from_report(&suite.name, &layer.name, "ours", budget, &report, spec.to_json());
        return output.emit(&Table::from_rows(&[row]), Format::Csv);
    }
    let mut levels = Table::new(&["level", "loop", "extent", "B_I", "B_W", "B_O", "T_I", "T_W", "T_O"]);
    let costs: Vec<Vec<(u64, u64)>> = Array::ALL.iter().map(|&a| schedule.level_costs(a)).collect();
    for (l, lp) in schedule.loops().iter().enumerate() {
        let name = if lp.controlling {
            format!("T{}", lp.axis)
        } else {
            lp.axis.to_string()
        };
        let mut row = vec![l.to_string(), name, lp.extent.to_string()];
        row.extend(Array::ALL.iter().map(|&a| schedule.buffer_size(a, l).to_string()));
        row.extend(costs.iter().map(|c| c[l].1.to_string()));
        levels.push(row);
    }
    let mut summary = Table::new(&["field", "value"]);
    let fields: [(&str, String); 12] = [
        ("layer", layer.name.clone()),
        ("schedule", spec.to_json()),
        ("buffer_I_bytes", report.b_in.to_string()),
        ("buffer_W_bytes", report.b_w.to_string()),
        ("buffer_O_bytes", report.b_o.to_string()),
        ("buffer_bytes", report.buffer_bytes().to_string()),
        ("t_in", report.t_in.to_string()),
        ("t_w", report.t_w.to_string()),
        ("t_o_acc", report.t_o_acc.to_string()),
        ("t_o_final", report.t_o_final.to_string()),
        ("total", format!("{} (ideal {})", report.total, ideal_traffic(layer))),
        ("feasible", format!("{} (budget {budget})", report.feasible)),
    ];
    for (k, v) in fields {
        summary.push(vec![k.to_string(), v]);
    }
    let mut sink = output.sink()?;
    summary.write_text(&mut sink)?;
    writeln!(sink, "\nper level (B in elements, T in bytes):").map_err(|e| Error::io("output", e))?;
    levels.write_text(&mut sink)?;
    sink.flush().map_err(|e| Error::io("output", e))?;
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Analyze {
            source,
            pick,
            schedule,
            budget,
            output,
        } => analyze(&source, &pick, &schedule, budget, &output),
        Command::Search {
            source,
            pick,
            budget,
            model,
            space,
            output,
        } => {
            let suite = source.load()?;
            let layer = pick.layer(&suite)?;
            let result = search(layer, model, &space.config(vec![budget]))?.remove(0);
            output.emit(
                &Table::from_rows(&[ReportRow::from_result(&suite.name, &result)]),
                Format::Text,
            )
        }
        Command::Sweep {
            source,
            budgets,
            model,
            space,
            output,
        } => {
            let suite = source.load()?;
            let config = space.config(budgets.0);
            let mut models = model;
            models.sort();
            models.dedup();
            let matrices = models
                .iter()
                .map(|&m| sweep(&suite, &config, m))
                .collect::<Result<Vec<_>, _>>()?;
            output.emit(&Table::from_rows(&sweep_rows(&suite, &matrices)?), Format::Csv)
        }
        Command::Validate {
            source,
            pick,
            schedule,
            budget,
            oracle_cap,
            output,
        } => {
            let suite = source.load()?;
            let layer = pick.layer(&suite)?;
            let (schedule, assignment) = read_schedule(&schedule)?.instantiate(layer)?;
            let v = validate(&schedule, &assignment, oracle_cap)?;
            let mut table = Table::new(&["array", "model_bytes", "oracle_bytes", "rel_error_pct"]);
            let o = &v.oracle;
            for (name, model, oracle, err) in [
                ("I", v.model_i, o.bytes_i, v.err_i),
                ("W", v.model_w, o.bytes_w, v.err_w),
                ("O", v.model_o, o.bytes_o, v.err_o),
                ("total", v.model_total, o.bytes_total, v.err_total),
            ] {
                table.push(vec![
                    name.into(),
                    model.to_string(),
                    oracle.to_string(),
                    format!("{:.4}", 100.0 * err),
                ]);
            }
            if let Some(b) = budget {
                let report = schedule.traffic(&assignment)?.against(positive(b)?);
                table.push(vec![
                    "feasible".into(),
                    report.buffer_bytes().to_string(),
                    b.to_string(),
                    report.feasible.to_string(),
                ]);
            }
            output.emit(&table, Format::Text)?;
            if v.undercount {
                return Err(Failure::Undercount);
            }
            Ok(())
        }
        Command::Distribution {
            source,
            budgets,
            space,
            output,
        } => {
            let suite = source.load()?;
            let dist: Distribution = distribution(&suite.layers, &space.config(budgets.0))?;
            output.emit(&distribution_table(&suite.name, &dist), Format::Csv)
        }
        Command::CaseStudy {
            source,
            budget,
            simd,
            rows,
            output,
        } => {
            let suite = source.load()?;
            let config = HwcConfig {
                budget,
                simd,
                precisions: source.precisions.unwrap_or_default(),
            };
            let ratios = hwce_vs_hwc_ratio(&suite, &config)?;
            let table = if rows {
                Table::from_rows(&case_study_rows(&suite, &ratios, budget))
            } else {
                ratio_table(&suite, &ratios)
            };
            output.emit(&table, Format::Csv)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Undercount) => {
            eprintln!("error: the model undercounts the oracle");
            ExitCode::from(2)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::OracleCap { .. } => 3,
                _ => 2,
            })
        }
    }
}
