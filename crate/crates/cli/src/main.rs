//! Command-line front door: read models or fans as JSON, run
//! classification, pullbacks, fundamental cycles, multiplier floors, and
//! minimal model program traces; emit JSON reports and DOT dual graphs.
//!
//! Exit codes: 0 on success, 2 on validation problems (with a
//! machine-readable violation list on stdout), 3 on mathematical refusals
//! such as an out-of-range boundary or a non-GMRLC pair handed to `mmp`.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use mmp_surface::discrepancy::{
    classify_with, fundamental_cycle, multiplier_floor, ClassifyOptions, DiscrepancyError,
};
use mmp_surface::mmp::{run_mmp_observed, MmpError, MmpOptions};
use mmp_surface::surface::{dual_graph_dot, CurveId, Divisor, SingularModel};
use mmp_surface::toric::{config_from_fan, Fan2D, ToricSurface};

#[derive(Parser)]
#[command(name = "mmp-surface", version)]
#[command(
    about = "Exact-arithmetic log-surface engine: classification and the minimal model program"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArg {
    /// Path to a model JSON file ({"config": {...}, "contracted": [...]}).
    #[arg(long)]
    model: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a pair: klt / lc / MRLC / GMRLC verdicts with witnesses.
    Classify {
        #[command(flatten)]
        model: ModelArg,
        /// Boundary divisor as a JSON map of curve id to "p/q".
        #[arg(long, default_value = "{}")]
        delta: String,
        /// Cap on the contracted-set size for the GMRLC witness search
        /// (default: the MMP_SURFACE_MAX_SUBSET environment variable, or 20).
        #[arg(long)]
        max_subset: Option<usize>,
        /// Write the dual graph of the model as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Numerical pullback of a divisor on X to the resolution.
    Pullback {
        #[command(flatten)]
        model: ModelArg,
        /// Divisor as a JSON map of curve id to "p/q".
        #[arg(long)]
        divisor: String,
    },
    /// Pass to the minimal resolution of X.
    Minres {
        #[command(flatten)]
        model: ModelArg,
    },
    /// Fundamental cycles and rationality of the singular points.
    Fundcycle {
        #[command(flatten)]
        model: ModelArg,
        /// Restrict to one component given as comma-separated curve ids.
        #[arg(long)]
        component: Option<String>,
    },
    /// Multiplier-ideal co-divisor floor(Delta_Y) and the klt triviality test.
    Multiplier {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value = "{}")]
        delta: String,
    },
    /// Run the minimal model program and emit the trace.
    Mmp {
        /// Model JSON; requires --universe.
        #[arg(long, conflicts_with = "fan")]
        model: Option<PathBuf>,
        /// Fan JSON (list of integer ray pairs); the universe is the full
        /// set of invariant curves and is certified complete.
        #[arg(long)]
        fan: Option<PathBuf>,
        #[arg(long, default_value = "{}")]
        delta: String,
        /// Comma-separated curve ids declaring the universe (model input).
        #[arg(long)]
        universe: Option<String>,
        /// Restrict rays to curves vertical over the base.
        #[arg(long)]
        vertical_only: bool,
        /// Stream one JSON object per step (newline-delimited) instead of a
        /// single trace document.
        #[arg(long)]
        trace: bool,
        /// Write DOT dual graphs before/after each step under this prefix.
        #[arg(long)]
        dot: Option<String>,
        #[arg(long)]
        max_subset: Option<usize>,
    },
    /// Build a model with a certified-complete universe from a fan.
    ToricBuild {
        /// Fan JSON: a list of integer ray pairs, counterclockwise.
        #[arg(long)]
        fan: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
}

/// Failures carrying their exit code: validation problems (2) print a
/// violation list, refusals (3) print the mathematical reason.
enum Failure {
    Validation(Vec<Value>),
    Refusal(String),
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure::Validation(vec![json!({ "rule": "input", "message": message.into() })])
    }
}

fn discrepancy_failure(e: DiscrepancyError) -> Failure {
    match e {
        DiscrepancyError::BoundaryOutOfRange { .. } | DiscrepancyError::NotLogResolution => {
            Failure::Refusal(e.to_string())
        }
        DiscrepancyError::Surface(mmp_surface::surface::SurfaceError::InvalidModel {
            violations,
        }) => Failure::Validation(
            violations
                .iter()
                .map(|v| serde_json::to_value(v).unwrap_or_else(|_| json!(v.to_string())))
                .collect(),
        ),
        other => Failure::input(other.to_string()),
    }
}

fn mmp_failure(e: MmpError) -> Failure {
    match e {
        MmpError::NotGMRLC { .. } => Failure::Refusal(e.to_string()),
        MmpError::Discrepancy(d) => discrepancy_failure(d),
        MmpError::Surface(mmp_surface::surface::SurfaceError::InvalidModel { violations }) => {
            Failure::Validation(
                violations
                    .iter()
                    .map(|v| serde_json::to_value(v).unwrap_or_else(|_| json!(v.to_string())))
                    .collect(),
            )
        }
        other => Failure::input(other.to_string()),
    }
}

fn read_model(path: &PathBuf) -> Result<SingularModel, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let model: SingularModel = serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("cannot parse {}: {e}", path.display())))?;
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(Failure::Validation(
            violations
                .iter()
                .map(|v| serde_json::to_value(v).unwrap_or_else(|_| json!(v.to_string())))
                .collect(),
        ));
    }
    Ok(model)
}

fn read_fan(path: &PathBuf) -> Result<ToricSurface, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let fan: Fan2D = serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("cannot parse {}: {e}", path.display())))?;
    config_from_fan(&fan).map_err(|e| Failure::input(e.to_string()))
}

fn parse_divisor(text: &str, model: &SingularModel) -> Result<Divisor, Failure> {
    let divisor: Divisor = serde_json::from_str(text)
        .map_err(|e| Failure::input(format!("cannot parse divisor {text:?}: {e}")))?;
    for id in divisor.support() {
        if !model.config.has_curve(id) {
            return Err(Failure::input(format!(
                "divisor references unknown curve {id}"
            )));
        }
    }
    Ok(divisor)
}

fn classify_options(max_subset: Option<usize>) -> ClassifyOptions {
    let from_env = std::env::var("MMP_SURFACE_MAX_SUBSET")
        .ok()
        .and_then(|v| v.parse().ok());
    ClassifyOptions {
        max_witness_curves: max_subset.or(from_env).unwrap_or(20),
        ..ClassifyOptions::default()
    }
}

fn write_dot(path: &PathBuf, model: &SingularModel) -> Result<(), Failure> {
    fs::write(path, dual_graph_dot(model))
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

/// Prints one line of output, swallowing a closed pipe (e.g. `| head`).
fn print_line(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

fn emit(value: &impl serde::Serialize) {
    print_line(&serde_json::to_string_pretty(value).expect("serializable output"));
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Classify {
            model,
            delta,
            max_subset,
            dot,
        } => {
            let model = read_model(&model.model)?;
            let delta = parse_divisor(&delta, &model)?;
            let report = classify_with(&model, &delta, &classify_options(max_subset))
                .map_err(discrepancy_failure)?;
            if let Some(path) = dot {
                write_dot(&path, &model)?;
            }
            emit(&report);
        }
        Command::Pullback { model, divisor } => {
            let model = read_model(&model.model)?;
            let divisor = parse_divisor(&divisor, &model)?;
            let pulled = model
                .mumford_pullback(&divisor)
                .map_err(|e| Failure::input(e.to_string()))?;
            emit(&pulled);
        }
        Command::Minres { model } => {
            let model = read_model(&model.model)?;
            let minres = mmp_surface::discrepancy::minimal_resolution(&model)
                .map_err(discrepancy_failure)?;
            emit(&minres);
        }
        Command::Fundcycle { model, component } => {
            let model = read_model(&model.model)?;
            let components: Vec<Vec<CurveId>> = match component {
                Some(list) => vec![list.split(',').map(|s| CurveId::from(s.trim())).collect()],
                None => model.contracted_components(),
            };
            let mut results = Vec::new();
            for ids in components {
                let set: BTreeSet<CurveId> = ids.iter().cloned().collect();
                let (cycle, pa) = fundamental_cycle(&model, &set).map_err(discrepancy_failure)?;
                results.push(json!({
                    "component": ids,
                    "fundamental_cycle": cycle,
                    "pa": pa,
                    "rational": pa == 0,
                }));
            }
            emit(&results);
        }
        Command::Multiplier { model, delta } => {
            let model = read_model(&model.model)?;
            let delta = parse_divisor(&delta, &model)?;
            let (floor, klt_equiv) =
                multiplier_floor(&model, &delta).map_err(discrepancy_failure)?;
            emit(&json!({ "floor_delta_y": floor, "klt_equiv": klt_equiv }));
        }
        Command::Mmp {
            model,
            fan,
            delta,
            universe,
            vertical_only,
            trace,
            dot,
            max_subset,
        } => {
            let (model, universe, surface) = match (model, fan) {
                (None, Some(fan)) => {
                    let surface = read_fan(&fan)?;
                    (
                        surface.model.clone(),
                        surface.universe.clone(),
                        Some(surface),
                    )
                }
                (Some(path), None) => {
                    let model = read_model(&path)?;
                    let universe = universe
                        .ok_or_else(|| Failure::input("--universe is required with --model"))?
                        .split(',')
                        .map(|s| CurveId::from(s.trim()))
                        .collect::<Vec<_>>();
                    (model, universe, None)
                }
                _ => {
                    return Err(Failure::input(
                        "exactly one of --model or --fan is required",
                    ))
                }
            };
            let delta = parse_divisor(&delta, &model)?;
            let opts = MmpOptions {
                vertical_only,
                toric: surface.as_ref(),
                classify: classify_options(max_subset),
            };
            if let Some(prefix) = &dot {
                write_dot(
                    &PathBuf::from(format!("{prefix}-step-000-before.dot")),
                    &model,
                )?;
            }
            let dot_prefix = dot.clone();
            let streaming = trace;
            let mut step_index = 0usize;
            let trace = run_mmp_observed(&model, &delta, &universe, &opts, |step| {
                if streaming {
                    print_line(&serde_json::to_string(step).expect("serializable step"));
                }
                if let Some(prefix) = &dot_prefix {
                    let before = PathBuf::from(format!("{prefix}-step-{step_index:03}-before.dot"));
                    let after = PathBuf::from(format!("{prefix}-step-{step_index:03}-after.dot"));
                    let _ = fs::write(before, dual_graph_dot(&step.model_before));
                    let _ = fs::write(after, dual_graph_dot(&step.model_after));
                }
                step_index += 1;
            })
            .map_err(mmp_failure)?;
            if streaming {
                print_line(
                    &serde_json::to_string(&json!({
                        "outcome": trace.outcome,
                        "steps": trace.steps.len(),
                        "warnings": trace.warnings,
                    }))
                    .expect("serializable outcome"),
                );
            } else {
                emit(&trace);
            }
        }
        Command::ToricBuild { fan, dot } => {
            let surface = read_fan(&fan)?;
            if let Some(path) = dot {
                write_dot(&path, &surface.model)?;
            }
            emit(&surface);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(violations)) => {
            print_line(
                &serde_json::to_string_pretty(&json!({ "violations": violations }))
                    .expect("serializable violations"),
            );
            ExitCode::from(2)
        }
        Err(Failure::Refusal(reason)) => {
            print_line(
                &serde_json::to_string_pretty(&json!({ "refusal": reason }))
                    .expect("serializable refusal"),
            );
            ExitCode::from(3)
        }
    }
}
