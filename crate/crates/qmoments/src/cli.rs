//! Command-line entry point.
//!
//! Every subcommand runs one named check, prints its report in the chosen
//! format, and compares the outcome against the expectations registered
//! for that check. Exit code 0 means every expectation held, 1 means the
//! run finished but an expectation failed, 2 means the invocation or an
//! input file was malformed. With a fixed seed the JSON output is
//! byte-identical across runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Deserialize;

use crate::catalog::{
    chsh_bell_scenario, ghz_quadripartite_cfrd, ghz_test, ghz_tripartite_cfrd,
    mermin_peres_square, mp_inequality, oscillator_tripartite_bound, pentagon_test,
    quadripartite_cfrd_fock, tsirelson_check, InequalityReport, PENTAGON_Q,
};
use crate::error::{Error, Result};
use crate::hilbert::{HilbertSpace, Operator, State};
use crate::lhv::{fit_with_lambda, FitMode};
use crate::moments::{Label, ObservableSet};
use crate::search::{cutoff_sweep, min_eigenpair, sweep_csv, violation_margin};

/// Seed used when neither `--seed` nor `QMOMENTS_SEED` is given.
pub const DEFAULT_SEED: u64 = 20240901;

const EXIT_OK: i32 = 0;
const EXIT_EXPECTATION: i32 = 1;
const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "qmoments", version, about = "Moment-inequality test bench")]
struct Cli {
    /// Output format; csv applies to the search sweep only.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for randomized sweeps.
    #[arg(long, global = true, env = "QMOMENTS_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyTest {
    Ghz,
    MerminPeres,
    /// Pentagon third-moment test on a qutrit.
    AppendixD,
    Tsirelson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CfrdFamily {
    TwoParty,
    Tri,
    Quad,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one fixed-scenario check with registered expected values.
    Verify {
        #[arg(value_enum)]
        test: VerifyTest,
    },
    /// Complex-observable moment bounds.
    Cfrd {
        #[arg(value_enum)]
        family: CfrdFamily,
        /// Random instances for the two-party sweep.
        #[arg(long)]
        trials: Option<usize>,
        /// Maximum local dimension for the two-party sweep (2..=dim).
        #[arg(long)]
        dim: Option<usize>,
        /// Oscillator cutoff; the minimizing amplitude vector is used.
        #[arg(long)]
        cutoff: Option<usize>,
        /// JSON file with an amplitude vector [z0, z1, ...].
        #[arg(long)]
        z_file: Option<PathBuf>,
    },
    /// Smallest eigenpair of the oscillator moment matrix.
    Search {
        #[arg(long, conflicts_with = "sweep")]
        cutoff: Option<usize>,
        /// Sweep all cutoffs up to this value.
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Classical-model pipeline.
    Lhv {
        #[command(subcommand)]
        action: LhvAction,
    },
    /// Run the whole reproduction bundle.
    Report {
        #[arg(value_parser = ["all"])]
        scope: String,
    },
}

#[derive(Debug, Subcommand)]
enum LhvAction {
    /// Fit a classical model to a scenario file.
    Fit {
        /// Scenario file: space, state, observables with matrices.
        #[arg(long)]
        moments: PathBuf,
        #[arg(long, conflicts_with = "noncontextual")]
        contextual: bool,
        #[arg(long)]
        noncontextual: bool,
        /// Peak separation scale: "auto" or a positive number.
        #[arg(long, default_value = "auto")]
        lambda: String,
    },
}

/// One expectation failure, reported on stderr before a nonzero exit.
struct Failure {
    check: String,
    message: String,
}

struct Session {
    format: Format,
    failures: Vec<Failure>,
}

impl Session {
    fn expect(&mut self, check: &str, ok: bool, message: String) {
        if !ok {
            self.failures.push(Failure {
                check: check.to_string(),
                message,
            });
        }
    }

    fn expect_close(&mut self, check: &str, what: &str, got: f64, want: f64, tol: f64) {
        self.expect(
            check,
            (got - want).abs() <= tol,
            format!("{what}: got {got:.12e}, expected {want:.12e} within {tol:.1e}"),
        );
    }

    fn emit_report(&self, report: &InequalityReport) -> Result<()> {
        match self.format {
            Format::Json => println!("{}", serde_json::to_string_pretty(report)?),
            _ => {
                println!("check     {}", report.name);
                println!("lhs       {:.12}", report.lhs);
                println!("rhs       {:.12}", report.rhs);
                println!("margin    {:.12}", report.margin);
                println!("violated  {}", report.violated);
                for (k, v) in &report.details {
                    println!("  {k} = {v}");
                }
                for (k, v) in &report.params {
                    println!("  param {k} = {v}");
                }
                if let Some(seed) = report.seed {
                    println!("  seed = {seed}");
                }
                println!();
            }
        }
        Ok(())
    }

    fn emit_value(&self, value: &serde_json::Value, text: &str) -> Result<()> {
        match self.format {
            Format::Json => println!("{}", serde_json::to_string_pretty(value)?),
            _ => println!("{text}"),
        }
        Ok(())
    }
}

/// Parse argv and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut session = Session {
        format: cli.format,
        failures: Vec::new(),
    };
    if cli.format == Format::Csv && !matches!(cli.command, Command::Search { .. }) {
        eprintln!("error: csv output is only available for `search --sweep`");
        return EXIT_USAGE;
    }
    let outcome = dispatch(&cli, &mut session);
    match outcome {
        Err(code) => code,
        Ok(()) => {
            if session.failures.is_empty() {
                EXIT_OK
            } else {
                for f in &session.failures {
                    eprintln!("expectation failed [{}]: {}", f.check, f.message);
                }
                EXIT_EXPECTATION
            }
        }
    }
}

/// Entry point for the binary.
pub fn main() {
    std::process::exit(run(std::env::args_os()));
}

fn input_error(err: &Error) -> i32 {
    eprintln!("error: {err}");
    EXIT_USAGE
}

fn pipeline_error(err: &Error) -> i32 {
    eprintln!("error: {err}");
    EXIT_EXPECTATION
}

fn dispatch(cli: &Cli, session: &mut Session) -> std::result::Result<(), i32> {
    match &cli.command {
        Command::Verify { test } => run_verify(*test, session).map_err(|e| pipeline_error(&e)),
        Command::Cfrd {
            family,
            trials,
            dim,
            cutoff,
            z_file,
        } => run_cfrd(
            *family,
            *trials,
            *dim,
            *cutoff,
            z_file.as_deref(),
            cli.seed,
            session,
        ),
        Command::Search { cutoff, sweep } => {
            run_search(*cutoff, *sweep, session).map_err(|e| pipeline_error(&e))
        }
        Command::Lhv {
            action:
                LhvAction::Fit {
                    moments,
                    contextual,
                    noncontextual,
                    lambda,
                },
        } => run_fit(moments, *contextual, *noncontextual, lambda, session),
        Command::Report { scope: _ } => run_report_all(cli.seed, session),
    }
}

/// Run one named check, register its expectations, and hand back the
/// report for printing or bundling.
fn build_verify(test: VerifyTest, session: &mut Session) -> Result<InequalityReport> {
    let report = match test {
        VerifyTest::MerminPeres => {
            let square = mermin_peres_square()?;
            let state = State::maximally_mixed(HilbertSpace::qubits(2)?);
            let report = mp_inequality(&state, &square)?;
            session.expect_close("mermin-peres", "lhs", report.lhs, 6.0, 1e-10);
            session.expect_close("mermin-peres", "rhs", report.rhs, 3.0 * 3f64.sqrt(), 1e-10);
            session.expect("mermin-peres", report.violated, "expected a violation".into());
            report
        }
        VerifyTest::Ghz => {
            let report = ghz_test()?;
            let premise = report.details["premise_max"].as_f64().unwrap_or(f64::NAN);
            session.expect(
                "ghz",
                premise <= 1e-12,
                format!("premise residual {premise:.3e} above 1e-12"),
            );
            for key in ["triple_a", "triple_b"] {
                let v = report.details[key].as_f64().unwrap_or(f64::NAN);
                session.expect_close("ghz", key, v, 1.0, 1e-12);
            }
            session.expect_close("ghz", "margin", report.margin, -2.0, 1e-12);
            report
        }
        VerifyTest::AppendixD => {
            let report = pentagon_test()?;
            let s = report.details["s"].as_f64().unwrap_or(f64::NAN);
            session.expect(
                "appendix-d",
                s.abs() <= 1e-12,
                format!("second-moment combination {s:.3e} not zero"),
            );
            session.expect_close("appendix-d", "lhs", report.lhs, PENTAGON_Q, 1e-10);
            session.expect("appendix-d", report.violated, "expected a violation".into());
            report
        }
        VerifyTest::Tsirelson => {
            let (state, [a1, a2, b1, b2]) = chsh_bell_scenario()?;
            let report = tsirelson_check(&state, &a1, &a2, &b1, &b2)?;
            let bound = 8f64.sqrt();
            session.expect_close("tsirelson", "lhs", report.lhs, bound, 1e-9);
            session.expect_close("tsirelson", "rhs", report.rhs, bound, 1e-9);
            session.expect(
                "tsirelson",
                !report.violated,
                "the second-moment bound must never be violated".into(),
            );
            report
        }
    };
    Ok(report)
}

fn run_verify(test: VerifyTest, session: &mut Session) -> Result<()> {
    let report = build_verify(test, session)?;
    session.emit_report(&report)
}

fn read_z_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let z: Vec<f64> = serde_json::from_str(&text)?;
    Ok(z)
}

fn run_cfrd(
    family: CfrdFamily,
    trials: Option<usize>,
    dim: Option<usize>,
    cutoff: Option<usize>,
    z_file: Option<&Path>,
    seed: u64,
    session: &mut Session,
) -> std::result::Result<(), i32> {
    let z = match z_file {
        Some(path) => Some(read_z_file(path).map_err(|e| input_error(&e))?),
        None => None,
    };
    match family {
        CfrdFamily::TwoParty => {
            let trials = trials.unwrap_or(1000);
            if trials == 0 {
                eprintln!("error: --trials must be at least 1");
                return Err(EXIT_USAGE);
            }
            let max_dim = dim.unwrap_or(4);
            if !(2..=4).contains(&max_dim) {
                eprintln!("error: --dim must be between 2 and 4");
                return Err(EXIT_USAGE);
            }
            let report = crate::catalog::cfrd_two_party_sweep(trials, seed)
                .map_err(|e| pipeline_error(&e))?;
            session.emit_report(&report).map_err(|e| pipeline_error(&e))?;
            session.expect(
                "cfrd-two-party",
                report.margin >= -1e-9,
                format!("worst margin {:.3e} below -1e-9", report.margin),
            );
        }
        CfrdFamily::Tri => {
            let report = match &z {
                Some(z) => {
                    let r = oscillator_tripartite_bound(z).map_err(|e| input_error(&e))?;
                    session.expect(
                        "cfrd-tri",
                        r.margin >= -1e-9,
                        format!("oscillator bound margin {:.3e} below -1e-9", r.margin),
                    );
                    r
                }
                None => {
                    let r = ghz_tripartite_cfrd().map_err(|e| pipeline_error(&e))?;
                    session.expect_close("cfrd-tri", "lhs", r.lhs, 16.0, 1e-10);
                    session.expect_close("cfrd-tri", "rhs", r.rhs, 8.0, 1e-10);
                    session.expect("cfrd-tri", r.violated, "expected a violation".into());
                    r
                }
            };
            session.emit_report(&report).map_err(|e| pipeline_error(&e))?;
        }
        CfrdFamily::Quad => {
            let report = match (&z, cutoff) {
                (Some(z), _) => {
                    let r = quadripartite_cfrd_fock(z).map_err(|e| input_error(&e))?;
                    let zn = normalize(z);
                    session.expect_close(
                        "cfrd-quad",
                        "margin vs quadratic form",
                        r.margin,
                        violation_margin(&zn),
                        1e-10,
                    );
                    r
                }
                (None, Some(n)) => {
                    let eig = min_eigenpair(n).map_err(|e| pipeline_error(&e))?;
                    let r = quadripartite_cfrd_fock(&eig.vector)
                        .map_err(|e| pipeline_error(&e))?;
                    session.expect_close(
                        "cfrd-quad",
                        "margin vs lambda_min",
                        r.margin,
                        eig.lambda_min,
                        1e-10,
                    );
                    session.expect(
                        "cfrd-quad",
                        r.violated == (n >= 10),
                        format!("violation at cutoff {n} should flip at 10"),
                    );
                    r
                }
                (None, None) => {
                    let r = ghz_quadripartite_cfrd().map_err(|e| pipeline_error(&e))?;
                    session.expect_close("cfrd-quad", "lhs", r.lhs, 64.0, 1e-10);
                    session.expect_close("cfrd-quad", "rhs", r.rhs, 16.0, 1e-10);
                    session.expect("cfrd-quad", r.violated, "expected a violation".into());
                    r
                }
            };
            session.emit_report(&report).map_err(|e| pipeline_error(&e))?;
        }
    }
    Ok(())
}

fn normalize(z: &[f64]) -> Vec<f64> {
    let n = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    z.iter().map(|x| x / n).collect()
}

fn run_search(cutoff: Option<usize>, sweep: Option<usize>, session: &mut Session) -> Result<()> {
    match (cutoff, sweep) {
        (_, Some(max_cutoff)) => {
            let rows = cutoff_sweep(max_cutoff)?;
            match session.format {
                Format::Csv => print!("{}", sweep_csv(&rows)),
                Format::Json => println!("{}", serde_json::to_string_pretty(&rows)?),
                Format::Text => {
                    println!("cutoff  det4m_sign  lambda_min");
                    for r in &rows {
                        println!("{:>6}  {:>10}  {:+.9e}", r.cutoff, r.det4m_sign, r.lambda_min);
                    }
                }
            }
            for r in &rows {
                session.expect(
                    "search-sweep",
                    (r.det4m_sign == -1) == (r.lambda_min < -1e-12),
                    format!("sign/eigenvalue mismatch at cutoff {}", r.cutoff),
                );
            }
        }
        (cutoff, None) => {
            let n = cutoff.unwrap_or(10);
            let eig = min_eigenpair(n)?;
            let text = {
                let mut t = format!(
                    "cutoff      {}\nlambda_min  {:.12e}\niterations  {}\nresidual    {:.3e}\nz           [",
                    eig.cutoff, eig.lambda_min, eig.iterations, eig.residual
                );
                let comps: Vec<String> =
                    eig.vector.iter().map(|x| format!("{x:.6}")).collect();
                t.push_str(&comps.join(", "));
                t.push(']');
                t
            };
            session.emit_value(&serde_json::to_value(&eig)?, &text)?;
            session.expect_close(
                "search",
                "Rayleigh quotient vs margin",
                violation_margin(&eig.vector),
                eig.lambda_min,
                1e-9,
            );
        }
    }
    Ok(())
}

/// Scenario file: a Hilbert space, a state, and labeled Hermitian
/// observables with complex entries written as [re, im] pairs.
#[derive(Debug, Deserialize)]
struct ScenarioFile {
    /// Tensor factor dimensions.
    space: Vec<usize>,
    state: StateSpec,
    observables: Vec<ObservableSpec>,
}

#[derive(Debug, Deserialize)]
struct StateSpec {
    #[serde(default)]
    pure: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    density: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Deserialize)]
struct ObservableSpec {
    observer: u8,
    setting: u16,
    index: u16,
    matrix: Vec<Vec<[f64; 2]>>,
}

fn complex_matrix(rows: &[Vec<[f64; 2]>]) -> Result<DMatrix<Complex64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Input("matrix rows must be square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

fn load_scenario(path: &Path) -> Result<(State, ObservableSet)> {
    let text = std::fs::read_to_string(path)?;
    let file: ScenarioFile = serde_json::from_str(&text)?;
    let space = HilbertSpace::new(&file.space)?;
    let state = match (&file.state.pure, &file.state.density) {
        (Some(v), None) => {
            let vec = DVector::from_iterator(
                v.len(),
                v.iter().map(|c| Complex64::new(c[0], c[1])),
            );
            State::pure(space.clone(), vec)?
        }
        (None, Some(rows)) => State::density(space.clone(), complex_matrix(rows)?)?,
        _ => {
            return Err(Error::Input(
                "state must have exactly one of `pure` or `density`".into(),
            ))
        }
    };
    let entries: Vec<(Label, Operator)> = file
        .observables
        .iter()
        .map(|o| {
            Ok((
                Label::new(o.observer, o.setting, o.index),
                Operator::new(space.clone(), complex_matrix(&o.matrix)?)?,
            ))
        })
        .collect::<Result<_>>()?;
    let obs = ObservableSet::new(space, entries)?;
    Ok((state, obs))
}

fn run_fit(
    moments: &Path,
    contextual: bool,
    noncontextual: bool,
    lambda: &str,
    session: &mut Session,
) -> std::result::Result<(), i32> {
    let mode = match (contextual, noncontextual) {
        (true, false) => FitMode::Contextual,
        (false, true) | (false, false) => FitMode::Noncontextual,
        (true, true) => unreachable!("clap conflicts_with"),
    };
    let lambda = match lambda {
        "auto" => None,
        s => match s.parse::<f64>() {
            Ok(v) if v > 0.0 => Some(v),
            _ => {
                eprintln!("error: --lambda must be `auto` or a positive number");
                return Err(EXIT_USAGE);
            }
        },
    };
    let (state, obs) = load_scenario(moments).map_err(|e| input_error(&e))?;
    let report =
        fit_with_lambda(&state, &obs, mode, lambda).map_err(|e| pipeline_error(&e))?;
    match session.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_EXPECTATION
            })?
        ),
        _ => {
            println!("mode            {:?}", report.mode);
            println!("success         {}", report.success);
            println!("checked_moments {}", report.checked_moments);
            println!("max_residual    {:.6e}", report.max_residual);
            println!("tolerance       {:.6e}", report.tolerance);
            println!("eliminated      {}", report.eliminated.len());
            if !report.worst_tuple.is_empty() {
                let tuple: Vec<String> =
                    report.worst_tuple.iter().map(|l| l.to_string()).collect();
                println!("worst_tuple     {}", tuple.join(" "));
            }
        }
    }
    Ok(())
}

fn run_report_all(seed: u64, session: &mut Session) -> std::result::Result<(), i32> {
    let mut bundle: BTreeMap<String, serde_json::Value> = BTreeMap::new();
    let add = |session: &mut Session,
                   bundle: &mut BTreeMap<String, serde_json::Value>,
                   name: &str,
                   report: &InequalityReport|
     -> std::result::Result<(), i32> {
        if session.format == Format::Text {
            session.emit_report(report).map_err(|e| pipeline_error(&e))?;
        }
        bundle.insert(
            name.to_string(),
            serde_json::to_value(report).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_EXPECTATION
            })?,
        );
        Ok(())
    };

    for (name, test) in [
        ("verify-mermin-peres", VerifyTest::MerminPeres),
        ("verify-ghz", VerifyTest::Ghz),
        ("verify-pentagon", VerifyTest::AppendixD),
        ("verify-tsirelson", VerifyTest::Tsirelson),
    ] {
        let report = build_verify(test, session).map_err(|e| pipeline_error(&e))?;
        add(session, &mut bundle, name, &report)?;
    }

    let tri = ghz_tripartite_cfrd().map_err(|e| pipeline_error(&e))?;
    session.expect("cfrd-tri", tri.violated, "expected a violation".into());
    add(session, &mut bundle, "cfrd-tripartite", &tri)?;
    let quad = ghz_quadripartite_cfrd().map_err(|e| pipeline_error(&e))?;
    session.expect("cfrd-quad", quad.violated, "expected a violation".into());
    add(session, &mut bundle, "cfrd-quadripartite", &quad)?;
    let sweep = crate::catalog::cfrd_two_party_sweep(200, seed)
        .map_err(|e| pipeline_error(&e))?;
    session.expect(
        "cfrd-two-party",
        sweep.margin >= -1e-9,
        format!("worst margin {:.3e}", sweep.margin),
    );
    add(session, &mut bundle, "cfrd-two-party-sweep", &sweep)?;

    let eig = min_eigenpair(10).map_err(|e| pipeline_error(&e))?;
    session.expect_close("search", "lambda_min(10)", eig.lambda_min, -0.00287931, 1e-8);
    let fock = quadripartite_cfrd_fock(&eig.vector).map_err(|e| pipeline_error(&e))?;
    session.expect("cfrd-quad-fock", fock.violated, "expected a violation".into());
    add(session, &mut bundle, "cfrd-quadripartite-fock", &fock)?;
    bundle.insert(
        "search-cutoff-10".into(),
        serde_json::to_value(&eig).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_EXPECTATION
        })?,
    );
    if session.format == Format::Text {
        println!("lambda_min(10) = {:.9e}", eig.lambda_min);
    }

    // GHZ classical fits, both modes
    let (state, obs) = crate::catalog::ghz_scenario().map_err(|e| pipeline_error(&e))?;
    let nc = fit_with_lambda(&state, &obs, FitMode::Noncontextual, None)
        .map_err(|e| pipeline_error(&e))?;
    session.expect(
        "lhv-noncontextual",
        !nc.success && (nc.max_residual - 2.0).abs() <= 1e-10,
        format!(
            "expected failure with residual 2, got success={} residual={:.6}",
            nc.success, nc.max_residual
        ),
    );
    let ctx = fit_with_lambda(&state, &obs, FitMode::Contextual, None)
        .map_err(|e| pipeline_error(&e))?;
    session.expect(
        "lhv-contextual",
        ctx.success,
        format!("contextual fit failed with residual {:.6}", ctx.max_residual),
    );
    bundle.insert(
        "lhv-ghz-noncontextual".into(),
        serde_json::json!({"success": nc.success, "max_residual": nc.max_residual}),
    );
    bundle.insert(
        "lhv-ghz-contextual".into(),
        serde_json::json!({"success": ctx.success, "max_residual": ctx.max_residual}),
    );
    if session.format == Format::Text {
        println!(
            "lhv ghz: noncontextual residual {:.6} (success {}), contextual success {}",
            nc.max_residual, nc.success, ctx.success
        );
    }

    if session.format == Format::Json {
        println!(
            "{}",
            serde_json::to_string_pretty(&bundle).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_EXPECTATION
            })?
        );
    }
    Ok(())
}
