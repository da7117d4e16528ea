//! `thermopress`: pressure, rate functions and pressure spectra of subshifts
//! of finite type from JSON model files.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 bad input, 3 model not
//! mixing, 4 property violation, 5 degenerate observable, 6 resource limit.

mod model;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thermopress::level2::Level2;
use thermopress::markov::edge_table;
use thermopress::oracle::{
    deviation_upper_bound_check, ldp_sandwich_check, EnumerationOptions, SlackCalibration, DEFAULT_BUDGET,
};
use thermopress::ratefn::{detect_degeneracy, Centering, FreeEnergy, RateFunction, DEFAULT_T_MAX};
use thermopress::sft::recode_to_depth2;
use thermopress::spectrum::{linear_grid, spectrum_scan_of};
use thermopress::transfer::{equilibrium_of_table, gibbs_certify, pressure_of_table, DEFAULT_GIBBS_BUDGET};
use thermopress::Error;

use model::ModelFile;
use output::{emit, json_document, num, opt, Csv};

const DEFAULT_SEED: u64 = 20_240_601;
const BUDGET_VAR: &str = "THERMOPRESS_BUDGET";

#[derive(Parser)]
#[command(
    name = "thermopress",
    version,
    about = "Thermodynamic formalism on subshifts of finite type"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (0: all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Seed of the multi-start optimizers.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    /// JSON model file.
    #[arg(long)]
    model: PathBuf,
    /// Function used as the potential; zero when absent.
    #[arg(long)]
    potential: Option<String>,
}

#[derive(Args)]
struct ObservableArgs {
    /// Function whose Birkhoff averages are studied.
    #[arg(long)]
    observable: String,
}

#[derive(Subcommand)]
enum Command {
    /// Pressure, equilibrium state and Gibbs constant.
    Pressure {
        #[command(flatten)]
        model: ModelArgs,
        /// Longest cylinder in the Gibbs comparison.
        #[arg(long, default_value_t = 8)]
        gibbs_n: usize,
    },
    /// Free energy E(t) and its derivative on a grid "start:stop:count".
    FreeEnergy {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        obs: ObservableArgs,
        #[arg(long, default_value = "-2:2:41", allow_hyphen_values = true)]
        t: String,
        /// Keep raw observable values instead of centering at the mean.
        #[arg(long)]
        uncentered: bool,
    },
    /// Rate function I(s) on a grid "start:stop:count".
    Rate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        obs: ObservableArgs,
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long)]
        uncentered: bool,
    },
    /// Deviation-set pressure P(c) on a grid "start:stop:count" with start 0.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        obs: ObservableArgs,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
    },
    /// Exact deviation masses against the rate function.
    LdpVerify {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        obs: ObservableArgs,
        /// Interval "a:b" of raw Birkhoff averages.
        #[arg(long, allow_hyphen_values = true)]
        interval: String,
        /// Word lengths "first:last".
        #[arg(long, default_value = "4:20")]
        n_range: String,
        /// Fixed slack constant C instead of calibrating it.
        #[arg(long)]
        slack: Option<f64>,
        /// Also check the upper bound for |average - mean| >= c.
        #[arg(long)]
        deviation: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
    },
    /// Level-2 pressure at distances from the equilibrium state.
    Level2 {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated radii.
        #[arg(long, value_delimiter = ',', required = true)]
        radius: Vec<f64>,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = 64)]
        starts: usize,
    },
    /// Gibbs constants of the equilibrium state per cylinder length.
    GibbsCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
    },
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Degenerate(Error, String),
    Violation(String, Option<String>),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::ModelFile { .. } | Error::Domain { .. } => 2,
        Error::NotMixing(_) => 3,
        Error::PropertyViolation(_) => 4,
        Error::Degenerate { .. } => 5,
        Error::ResourceLimit { .. } => 6,
        Error::NumericalFailure { .. } => 1,
    }
}

fn describe(e: &Error) -> String {
    match e {
        Error::ModelFile {
            message,
            line: Some(l),
            column: Some(c),
        } => format!("model file, line {l}, column {c}: {message}"),
        Error::ResourceLimit { .. } => format!("{e} (raise {BUDGET_VAR} or shorten the range)"),
        _ => e.to_string(),
    }
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Core(Error::InvalidArgument(msg.into()))
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(bad(format!("grid {text:?} is not start:stop:count")));
    };
    let start: f64 = a.trim().parse().map_err(|_| bad(format!("bad grid start {a:?}")))?;
    let stop: f64 = b.trim().parse().map_err(|_| bad(format!("bad grid stop {b:?}")))?;
    let count: usize = n.trim().parse().map_err(|_| bad(format!("bad grid count {n:?}")))?;
    Ok(linear_grid(start, stop, count)?)
}

fn parse_pair<T: std::str::FromStr>(text: &str, what: &str) -> Result<(T, T), Failure> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| bad(format!("{what} {text:?} is not first:last")))?;
    let a = a.trim().parse().map_err(|_| bad(format!("bad {what} {text:?}")))?;
    let b = b.trim().parse().map_err(|_| bad(format!("bad {what} {text:?}")))?;
    Ok((a, b))
}

fn budget() -> Result<u128, Failure> {
    match std::env::var(BUDGET_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| bad(format!("{BUDGET_VAR}={v:?} is not a nonnegative integer"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

struct Ctx {
    threads: usize,
    seed: u64,
    output: Option<PathBuf>,
}

fn load(args: &ModelArgs) -> Result<(ModelFile, thermopress::sft::LocallyConstantFn), Failure> {
    let file = ModelFile::load(&args.model)?;
    let phi = file.potential(args.potential.as_deref())?;
    Ok((file, phi))
}

fn cmd_pressure(ctx: &Ctx, args: &ModelArgs, gibbs_n: usize) -> Result<(), Failure> {
    let (file, phi) = load(args)?;
    let (rec, fns) = recode_to_depth2(&file.model, &[&phi])?;
    let target = rec.target();
    let table = edge_table(target, &fns[0])?;
    if !file.model.is_primitive() {
        let pressure = pressure_of_table(target, &table)?;
        let body = json!({
            "pressure": pressure,
            "eigenvalue": pressure.exp(),
            "pi": null,
            "p": null,
            "gibbs_K": null,
            "structure": file.model.structure(),
        });
        emit(ctx.output.as_deref(), &json_document("pressure", &file.sha256, body))?;
        return Err(Failure::Core(Error::NotMixing(
            "equilibrium state needs a primitive transition matrix; pressure reported".into(),
        )));
    }
    let eq = equilibrium_of_table(target, &table)?;
    let cert = gibbs_certify(target, &eq, &fns[0], gibbs_n, DEFAULT_GIBBS_BUDGET)?;
    let body = json!({
        "pressure": eq.pressure,
        "eigenvalue": eq.eigenvalue,
        "pi": eq.measure.pi,
        "p": eq.measure.p,
        "gibbs_K": cert.k,
        "gibbs_n_max": cert.n_max,
        "block_length": rec.block_len(),
    });
    emit(ctx.output.as_deref(), &json_document("pressure", &file.sha256, body))?;
    Ok(())
}

fn rate_function(
    file: &ModelFile,
    phi: &thermopress::sft::LocallyConstantFn,
    observable: &str,
    centering: Centering,
) -> Result<RateFunction, Failure> {
    let psi = file.function(observable)?;
    let fe = FreeEnergy::new(&file.model, phi, psi, centering)?;
    match RateFunction::new(fe, DEFAULT_T_MAX) {
        Ok(rf) => Ok(rf),
        Err(e @ Error::Degenerate { .. }) => {
            let report = detect_degeneracy(&file.model, phi, psi)?;
            let text = serde_json::to_string(&report).expect("serializable");
            Err(Failure::Degenerate(e, text))
        }
        Err(e) => Err(e.into()),
    }
}

fn centering(uncentered: bool) -> Centering {
    if uncentered {
        Centering::Uncentered
    } else {
        Centering::Centered
    }
}

fn cmd_free_energy(
    ctx: &Ctx,
    args: &ModelArgs,
    obs: &ObservableArgs,
    t: &str,
    uncentered: bool,
) -> Result<(), Failure> {
    let (file, phi) = load(args)?;
    let grid = parse_grid(t)?;
    let psi = file.function(&obs.observable)?;
    let fe = FreeEnergy::new(&file.model, &phi, psi, centering(uncentered))?;
    let mut csv = Csv::new("free-energy", &file.sha256, &["t", "E", "dE"]);
    for t in grid {
        let (e, de) = fe.eval(t)?;
        csv.row(&[num(t), num(e), num(de)]);
    }
    emit(ctx.output.as_deref(), &csv.into_string())?;
    Ok(())
}

fn cmd_rate(ctx: &Ctx, args: &ModelArgs, obs: &ObservableArgs, s: &str, uncentered: bool) -> Result<(), Failure> {
    let (file, phi) = load(args)?;
    let grid = parse_grid(s)?;
    let rf = rate_function(&file, &phi, &obs.observable, centering(uncentered))?;
    let mut csv = Csv::new("rate", &file.sha256, &["s", "rate", "t", "status"]);
    for s in grid {
        let row = match rf.rate_extended(s)? {
            Some((i, _)) if i.is_infinite() => [num(s), "inf".into(), String::new(), "outside".into()],
            Some((i, t)) => [num(s), num(i), num(t), "inside".into()],
            None => [num(s), String::new(), String::new(), "undecided".into()],
        };
        csv.row(&row);
    }
    emit(ctx.output.as_deref(), &csv.into_string())?;
    Ok(())
}

fn cmd_spectrum(ctx: &Ctx, args: &ModelArgs, obs: &ObservableArgs, grid: &str) -> Result<(), Failure> {
    let (file, phi) = load(args)?;
    let grid = parse_grid(grid)?;
    if grid[0] < 0.0 {
        return Err(bad("spectrum grid must start at 0"));
    }
    let rf = rate_function(&file, &phi, &obs.observable, Centering::Centered)?;
    let sp = spectrum_scan_of(&rf, &grid)?;
    let mut csv = Csv::new(
        "spectrum",
        &file.sha256,
        &["c", "P_of_c", "c_star", "branch_tie_flag", "in_domain"],
    );
    for p in &sp.points {
        csv.row(&[
            num(p.c),
            opt(p.value),
            num(p.c_star),
            p.tie.to_string(),
            p.in_domain().to_string(),
        ]);
    }
    emit(ctx.output.as_deref(), &csv.into_string())?;
    let violations = sp.violations();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(violations.join("\n"), None))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_ldp_verify(
    ctx: &Ctx,
    args: &ModelArgs,
    obs: &ObservableArgs,
    interval: &str,
    n_range: &str,
    slack: Option<f64>,
    deviation: Option<f64>,
    delta: f64,
) -> Result<(), Failure> {
    let (file, phi) = load(args)?;
    let psi = file.function(&obs.observable)?;
    let (a, b): (f64, f64) = parse_pair(interval, "interval")?;
    let (first, last): (usize, usize) = parse_pair(n_range, "n range")?;
    if first == 0 || last < first {
        return Err(bad(format!("n range {n_range:?} is empty")));
    }
    let lengths: Vec<usize> = (first..=last).collect();
    let opts = EnumerationOptions {
        budget: budget()?,
        threads: ctx.threads,
    };
    let calibration = match slack {
        Some(c) => SlackCalibration::Fixed(c),
        None => SlackCalibration::EarlierLengths,
    };
    let report = ldp_sandwich_check(&file.model, &phi, psi, a, b, &lengths, calibration, opts)?;
    let mut csv = Csv::new("ldp-verify", &file.sha256, &["n", "mass", "rate"]);
    for ((n, m), r) in report.series.n.iter().zip(&report.series.mass).zip(&report.series.rate) {
        csv.row(&[n.to_string(), num(*m), num(*r)]);
    }
    let mut verdicts = vec![format!(
        "sandwich {} n={} rate={} inf_I={} C={} delta={}",
        if report.holds { "PASS" } else { "FAIL" },
        report.n,
        report.rate_n,
        report.inf_rate,
        report.c,
        report.delta
    )];
    let mut ok = report.holds;
    if let Some(c) = deviation {
        let ub = deviation_upper_bound_check(&file.model, &phi, psi, c, delta, &lengths, opts)?;
        ok &= ub.holds;
        verdicts.push(format!(
            "upper-bound {} c={} delta={} L_hat={} bound={} exact={}",
            if ub.holds { "PASS" } else { "FAIL" },
            ub.c,
            ub.delta,
            ub.l_hat,
            ub.bound,
            ub.exact
        ));
    }
    for v in &verdicts {
        csv.comment(v);
    }
    csv.comment(if ok { "verdict PASS" } else { "verdict FAIL" });
    emit(ctx.output.as_deref(), &csv.into_string())?;
    if ok {
        eprintln!("PASS");
        Ok(())
    } else {
        Err(Failure::Violation(verdicts.join("\n"), Some("FAIL".into())))
    }
}

fn cmd_level2(ctx: &Ctx, args: &ModelArgs, radius: &[f64], depth: usize, starts: usize) -> Result<(), Failure> {
    let (file, phi) = load(args)?;
    if starts == 0 {
        return Err(bad("--starts must be positive"));
    }
    let l2 = Level2::new(&file.model, &phi, depth)?;
    let mut results = Vec::with_capacity(radius.len());
    for &c in radius {
        let (p, inf) = l2.pressure(c, starts, ctx.seed)?;
        results.push(json!({ "radius": c, "pressure": p, "infimum": inf }));
    }
    let body = json!({
        "p_top": l2.p_top(),
        "depth": depth,
        "tail_bound": l2.metric().tail_bound(),
        "starts": starts,
        "seed": ctx.seed,
        "results": results,
    });
    emit(ctx.output.as_deref(), &json_document("level2", &file.sha256, body))?;
    Ok(())
}

fn cmd_gibbs_check(ctx: &Ctx, args: &ModelArgs, n_max: usize) -> Result<(), Failure> {
    let (file, phi) = load(args)?;
    file.model.require_primitive()?;
    let (rec, fns) = recode_to_depth2(&file.model, &[&phi])?;
    let target = rec.target();
    let eq = equilibrium_of_table(target, &edge_table(target, &fns[0])?)?;
    let cert = gibbs_certify(target, &eq, &fns[0], n_max, budget()?)?;
    emit(
        ctx.output.as_deref(),
        &json_document("gibbs-check", &file.sha256, json!({ "certificate": cert })),
    )?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.threads > 0 {
        // a second initialization only happens in tests; the first one wins
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let ctx = Ctx {
        threads: cli.threads,
        seed: cli.seed,
        output: cli.output,
    };
    match &cli.command {
        Command::Pressure { model, gibbs_n } => cmd_pressure(&ctx, model, *gibbs_n),
        Command::FreeEnergy {
            model,
            obs,
            t,
            uncentered,
        } => cmd_free_energy(&ctx, model, obs, t, *uncentered),
        Command::Rate {
            model,
            obs,
            s,
            uncentered,
        } => cmd_rate(&ctx, model, obs, s, *uncentered),
        Command::Spectrum { model, obs, grid } => cmd_spectrum(&ctx, model, obs, grid),
        Command::LdpVerify {
            model,
            obs,
            interval,
            n_range,
            slack,
            deviation,
            delta,
        } => cmd_ldp_verify(&ctx, model, obs, interval, n_range, *slack, *deviation, *delta),
        Command::Level2 {
            model,
            radius,
            depth,
            starts,
        } => cmd_level2(&ctx, model, radius, *depth, *starts),
        Command::GibbsCheck { model, n_max } => cmd_gibbs_check(&ctx, model, *n_max),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Degenerate(e, report)) => {
            eprintln!("error: {}", describe(&e));
            eprintln!("{report}");
            ExitCode::from(5)
        }
        Err(Failure::Violation(msg, verdict)) => {
            eprintln!("property violation:\n{msg}");
            if let Some(v) = verdict {
                eprintln!("{v}");
            }
            ExitCode::from(4)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
