use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fairfluid::{
    audit, exec, simulate, steady_cycle, trajectory_rows, Instance, PopulationState, TrajectoryRow,
};
use fairfluid_cli::report::{self, write_csv, write_json, write_report};
use fairfluid_cli::{parse_instance_file, run_repro, Format, PolicySpec, ReproParams};
use serde::Serialize;

const THREADS_VAR: &str = "FAIRFLUID_THREADS";

#[derive(Parser)]
#[command(
    name = "fairfluid",
    version,
    about = "Fluid agent-retention models: simulate, optimize, audit, reproduce"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
}

#[derive(Args)]
struct Solver {
    /// FLUID-OPT grid resolution.
    #[arg(long, default_value_t = fairfluid::policy::DEFAULT_GRID)]
    grid: f64,
    /// Refinement tolerance.
    #[arg(long, default_value_t = fairfluid::policy::DEFAULT_REFINE_TOL)]
    tol: f64,
}

#[derive(Args)]
struct PolicyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// fluid | slashing | static:P,.. | cyclic:P,..;P,.. | belief:POOL:NEW:RETAINED[:BUILDUP]
    #[arg(long, default_value = "fluid")]
    policy: String,
    #[command(flatten)]
    solver: Solver,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate from an empty platform and export the trajectory.
    Simulate {
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Exact steady cycle of a periodic policy.
    Steady {
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Best static payout distribution (FLUID-OPT).
    Optimize {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        solver: Solver,
        #[command(flatten)]
        output: Output,
    },
    /// Group-fairness audit; exits non-zero when the policy is unfair.
    Audit {
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, default_value_t = fairfluid::fairness::DEFAULT_DELTA)]
        delta: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Reproduce a worked result; exits non-zero when any check fails.
    Repro {
        /// prop1 | prop2 | pof | theorem1
        name: String,
        #[command(flatten)]
        params: ReproArgs,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct ReproArgs {
    #[arg(long, default_value_t = 1.0)]
    v1: f64,
    #[arg(long, default_value_t = 1.5)]
    v2: f64,
    /// Revenue slope (default 4 for prop1/pof, 0.7 for prop2).
    #[arg(long)]
    alpha: Option<f64>,
    /// Revenue caps D for prop1.
    #[arg(long, value_delimiter = ',', default_values_t = [40.0, 400.0, 4000.0])]
    caps: Vec<f64>,
    /// Revenue cap D for pof.
    #[arg(long, default_value_t = 100.0)]
    cap: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// High reward r for prop2.
    #[arg(long, default_value_t = 1.0)]
    reward: f64,
    /// Optimizer grid (default 0.005 for prop1/pof, 0.01 for prop2).
    #[arg(long)]
    grid: Option<f64>,
    #[arg(long, default_value_t = fairfluid::policy::DEFAULT_REFINE_TOL)]
    tol: f64,
    /// Random cases per revenue family for theorem1.
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    max_period: usize,
}

impl From<ReproArgs> for ReproParams {
    fn from(a: ReproArgs) -> Self {
        Self {
            v1: a.v1,
            v2: a.v2,
            alpha: a.alpha,
            caps: a.caps,
            cap: a.cap,
            lambda: a.lambda,
            reward: a.reward,
            grid: a.grid,
            tol: a.tol,
            cases: a.cases,
            seed: a.seed,
            max_period: a.max_period,
        }
    }
}

#[derive(Serialize)]
struct FieldRow<'a> {
    quantity: &'a str,
    index: Option<usize>,
    value: f64,
}

fn field_rows<'a>(quantity: &'a str, values: &'a [f64]) -> impl Iterator<Item = FieldRow<'a>> + 'a {
    values.iter().enumerate().map(move |(i, &value)| FieldRow {
        quantity,
        index: Some(i),
        value,
    })
}

fn scalar(quantity: &str, value: f64) -> FieldRow<'_> {
    FieldRow {
        quantity,
        index: None,
        value,
    }
}

fn emit(
    output: &Output,
    write: impl FnOnce(&mut dyn Write) -> fairfluid_cli::Result<()>,
) -> anyhow::Result<()> {
    match &output.out {
        Some(path) => {
            let mut file = report::create(path)?;
            write(&mut file)?;
            file.flush()
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn load(path: &Path) -> anyhow::Result<Instance> {
    Ok(parse_instance_file(path)?)
}

fn run(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Simulate {
            policy,
            horizon,
            output,
        } => {
            let inst = load(&policy.instance)?;
            let spec: PolicySpec = policy.policy.parse()?;
            let built = spec.build(&inst, policy.solver.grid, policy.solver.tol)?;
            let init = PopulationState::empty(inst.num_types(), built.cohorts());
            let traj = simulate(&inst, &built, horizon, &init)?;
            let rows = trajectory_rows(&built, &traj);
            emit(&output, |w| match output.format {
                Format::Csv => write_csv(w, &rows),
                Format::Json => write_json(w, &rows),
            })?;
            Ok(true)
        }
        Command::Steady { policy, output } => {
            let inst = load(&policy.instance)?;
            let spec: PolicySpec = policy.policy.parse()?;
            let built = spec.build(&inst, policy.solver.grid, policy.solver.tol)?;
            let profile = steady_cycle(&inst, &built)?;
            emit(&output, |w| match output.format {
                Format::Csv => {
                    let mut rows = Vec::new();
                    for (t, state) in profile.period_masses.iter().enumerate() {
                        for (type_index, masses) in state.masses().iter().enumerate() {
                            for (cohort, &mass) in masses.iter().enumerate() {
                                rows.push(TrajectoryRow {
                                    t,
                                    type_index,
                                    cohort,
                                    mass,
                                    payout_index: Some(t),
                                });
                            }
                        }
                    }
                    write_csv(w, rows)
                }
                Format::Json => write_json(w, &profile),
            })?;
            Ok(true)
        }
        Command::Optimize {
            instance,
            solver,
            output,
        } => {
            let inst = load(&instance)?;
            let result = fairfluid::solve_fluid_opt(&inst, solver.grid, solver.tol)?;
            emit(&output, |w| match output.format {
                Format::Csv => write_csv(
                    w,
                    field_rows("x_star", result.x_star.probs())
                        .chain(field_rows("n_star", &result.n_star))
                        .chain([
                            scalar("value", result.value),
                            scalar("grid_resolution", result.grid_resolution),
                            scalar("refined", f64::from(u8::from(result.refined))),
                        ]),
                ),
                Format::Json => write_json(w, &result),
            })?;
            Ok(true)
        }
        Command::Audit {
            policy,
            delta,
            output,
        } => {
            let inst = load(&policy.instance)?;
            let spec: PolicySpec = policy.policy.parse()?;
            let built = spec.build(&inst, policy.solver.grid, policy.solver.tol)?;
            let report = audit(&inst, &built, delta)?;
            emit(&output, |w| match output.format {
                Format::Csv => {
                    let labels: Vec<String> = (0..report.exposures.len())
                        .map(|i| format!("exposure_type{i}"))
                        .collect();
                    let mut rows = Vec::new();
                    for (label, exposure) in labels.iter().zip(&report.exposures) {
                        let probs = exposure.as_ref().map_or(&[][..], |x| x.probs());
                        rows.extend(field_rows(label, probs));
                    }
                    let avg: Vec<f64> = report
                        .avg_rewards
                        .iter()
                        .map(|a| a.unwrap_or(f64::NAN))
                        .collect();
                    rows.extend(field_rows("avg_reward", &avg));
                    rows.push(scalar("gap", report.max_pairwise_l1));
                    rows.push(scalar("delta", report.delta));
                    rows.push(scalar("fair", f64::from(u8::from(report.fair))));
                    write_csv(w, rows)
                }
                Format::Json => write_json(w, &report),
            })?;
            Ok(report.fair)
        }
        Command::Repro {
            name,
            params,
            output,
        } => {
            let mut report = run_repro(&name, &params.into())?;
            if let Some(path) = &output.out {
                report.artifacts.push(path.display().to_string());
            }
            emit(&output, |w| write_report(w, &report, output.format))?;
            for q in report.quantities.iter().filter(|q| !q.pass) {
                eprintln!(
                    "FAIL {}: {} vs reference {} (tolerance {:e})",
                    q.label, q.value, q.reference, q.tolerance
                );
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads =
        exec::threads_from_env(THREADS_VAR).and_then(|n| n.map_or(Ok(()), exec::configure_threads));
    if let Err(e) = threads {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
