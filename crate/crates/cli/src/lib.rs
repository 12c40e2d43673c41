//! Argument parsing and command dispatch for the `traffic` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use traffic_core::harness::{builtin_test, run_pair, write_csv, xi_sweep, Prepared, Run, Scenario, SweepResult};
use traffic_core::scenario_file::load_scenario;
use traffic_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SCENARIO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "traffic", version, about = "Micro/macro traffic experiments on roads and networks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Print run metadata to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Convergence table over the scenario's vehicle counts.
    Sweep(Common),
    /// Micro and macro distances for a single vehicle count.
    Distance(Common),
    /// Final vehicle positions of one run.
    SimulateMicro(Simulate),
    /// Final cell densities of one run.
    SimulateMacro(Simulate),
    /// Sweep over a built-in test.
    Test {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        k: u8,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct Simulate {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = RunArg::Flat)]
    run: RunArg,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Built-in test number.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    test: Option<u8>,
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Vehicle counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    dx: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    p: Option<u8>,
    #[arg(long = "t-f")]
    t_f: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Atom budget for the macroscopic measures.
    #[arg(long)]
    coarsen: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RunArg {
    Flat,
    Sharp,
}

impl From<RunArg> for Run {
    fn from(r: RunArg) -> Self {
        match r {
            RunArg::Flat => Run::Flat,
            RunArg::Sharp => Run::Sharp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sweep,
    Distance,
    SimulateMicro(RunArg),
    SimulateMacro(RunArg),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioSource {
    Builtin(usize),
    File(PathBuf),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioOverrides {
    pub n_list: Option<Vec<usize>>,
    pub dx: Option<f64>,
    pub p: Option<f64>,
    pub t_f: Option<f64>,
    pub coarsen_to: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    pub source: ScenarioSource,
    pub overrides: ScenarioOverrides,
    pub out: Option<PathBuf>,
    pub verbose: bool,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) => EXIT_USAGE,
            Error::Scenario { .. } | Error::InvalidNetwork(_) | Error::Cycle(_) => EXIT_SCENARIO,
            _ => EXIT_NUMERICAL,
        };
        CliError::new(code, e.to_string())
    }
}

/// Parses `argv` (program name first). Help and version requests come back as
/// an error with code 0 carrying the text to print.
pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        CliError::new(code, e.render().to_string())
    })?;
    let source = |s: SourceArgs| match (s.test, s.scenario) {
        (Some(k), None) => ScenarioSource::Builtin(k as usize),
        (None, Some(path)) => ScenarioSource::File(path),
        _ => unreachable!("clap enforces exactly one source"),
    };
    let (command, source, ov) = match cli.command {
        Cmd::Sweep(c) => (Command::Sweep, source(c.source), c.overrides),
        Cmd::Distance(c) => (Command::Distance, source(c.source), c.overrides),
        Cmd::SimulateMicro(s) => (Command::SimulateMicro(s.run), source(s.common.source), s.common.overrides),
        Cmd::SimulateMacro(s) => (Command::SimulateMacro(s.run), source(s.common.source), s.common.overrides),
        Cmd::Test { k, overrides } => (Command::Sweep, ScenarioSource::Builtin(k as usize), overrides),
    };
    if command != Command::Sweep && ov.n.as_ref().is_some_and(|n| n.len() != 1) {
        return Err(CliError::new(EXIT_USAGE, "this command takes a single --n value"));
    }
    Ok(CliConfig {
        command,
        source,
        overrides: ScenarioOverrides {
            n_list: ov.n,
            dx: ov.dx,
            p: ov.p.map(f64::from),
            t_f: ov.t_f,
            coarsen_to: ov.coarsen,
        },
        out: ov.out,
        verbose: cli.verbose,
    })
}

/// Resolves the scenario and applies the overrides; the result is validated.
pub fn resolve_scenario(cfg: &CliConfig) -> Result<Scenario, CliError> {
    let mut s = match &cfg.source {
        ScenarioSource::Builtin(k) => builtin_test(*k)?,
        ScenarioSource::File(path) => load_scenario(path).map_err(|e| match e {
            Error::Io(io) => CliError::new(EXIT_USAGE, format!("cannot read {}: {io}", path.display())),
            other => other.into(),
        })?,
    };
    let o = &cfg.overrides;
    if let Some(n) = &o.n_list {
        s.n_list = n.clone();
    }
    if let Some(dx) = o.dx {
        s.dx = dx;
    }
    if let Some(p) = o.p {
        s.p = p;
    }
    if let Some(t_f) = o.t_f {
        s.t_f = t_f;
    }
    if let Some(k) = o.coarsen_to {
        s.coarsen_to = k;
    }
    s.prepare()?;
    Ok(s)
}

fn first_n(s: &Scenario) -> Result<usize, CliError> {
    s.n_list
        .first()
        .copied()
        .ok_or_else(|| CliError::new(EXIT_SCENARIO, "scenario field `n_list`: empty"))
}

fn write_out(cfg: &CliConfig, stdout: &mut dyn Write, body: &[u8]) -> Result<(), CliError> {
    let res = match &cfg.out {
        Some(path) => std::fs::write(path, body).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(body).map_err(|e| e.to_string()),
    };
    res.map_err(|m| CliError::new(EXIT_NUMERICAL, m))
}

fn sweep_csv(r: &SweepResult) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(r, &mut buf).expect("writing to memory");
    buf
}

fn micro_csv(p: &Prepared, run: Run, n: usize, t_f: f64) -> Result<Vec<u8>, CliError> {
    let mut out = String::new();
    match &p.geometry {
        None => {
            let s = p.road_micro(run, n)?.simulate(t_f)?;
            out.push_str("vehicle,position\n");
            for (i, y) in s.positions.iter().enumerate() {
                out.push_str(&format!("{i},{y}\n"));
            }
        }
        Some(geo) => {
            let s = p.network_micro(run, n)?.simulate(t_f, geo)?;
            out.push_str("path,vehicle,arc,position\n");
            for (alpha, pts) in s.points(geo).iter().enumerate() {
                for (i, pt) in pts.iter().enumerate() {
                    let arc = &geo.net.arc(pt.arc).id;
                    out.push_str(&format!("{alpha},{i},{arc},{}\n", pt.along()));
                }
            }
        }
    }
    Ok(out.into_bytes())
}

fn macro_csv(p: &Prepared, run: Run, n: usize, t_f: f64) -> Result<Vec<u8>, CliError> {
    let mut out = String::new();
    match &p.geometry {
        None => {
            let g = p.road_macro(run, n)?.simulate(t_f)?;
            out.push_str("x,density\n");
            for (j, r) in g.rho.iter().enumerate() {
                out.push_str(&format!("{},{r}\n", g.a + (j as f64 + 0.5) * g.dx));
            }
        }
        Some(geo) => {
            let g = p.network_macro(run, n)?.simulate(t_f)?;
            out.push_str("arc,x,density\n");
            for (slot, r) in g.slot_totals().iter().enumerate() {
                let (arc, cell) = g.slot_location(slot);
                let x = (cell as f64 + 0.5) * g.dx();
                out.push_str(&format!("{},{x},{r}\n", geo.net.arc(arc).id));
            }
        }
    }
    Ok(out.into_bytes())
}

/// Executes a parsed command, writing results to `--out` or `stdout`.
pub fn run(cfg: &CliConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let s = resolve_scenario(cfg)?;
    match cfg.command {
        Command::Sweep => {
            let r = xi_sweep(&s)?;
            if cfg.verbose {
                eprintln!(
                    "scenario {} dx={} {} runtime {:.3}s",
                    r.scenario_id, r.dx, r.dt_policy, r.runtime_secs
                );
            }
            write_out(cfg, stdout, &sweep_csv(&r))
        }
        Command::Distance => {
            let row = run_pair(&s, first_n(&s)?)?;
            let r = SweepResult {
                scenario_id: s.id.clone(),
                network: s.is_network(),
                dx: s.dx,
                dt_policy: String::new(),
                runtime_secs: 0.0,
                rows: vec![row],
            };
            write_out(cfg, stdout, &sweep_csv(&r))
        }
        Command::SimulateMicro(run) => {
            let p = s.prepare()?;
            let body = micro_csv(&p, run.into(), first_n(&s)?, s.t_f)?;
            write_out(cfg, stdout, &body)
        }
        Command::SimulateMacro(run) => {
            let p = s.prepare()?;
            let body = macro_csv(&p, run.into(), first_n(&s)?, s.t_f)?;
            write_out(cfg, stdout, &body)
        }
    }
}

/// Full entry point: parse, run, and map the outcome to an exit code.
pub fn main_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let outcome = parse_args(argv).and_then(|cfg| run(&cfg, stdout));
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) if e.code == EXIT_OK => {
            let _ = stdout.write_all(e.message.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let msg = e.message.trim_end();
            let _ = writeln!(stderr, "error: {}", msg.strip_prefix("error: ").unwrap_or(msg));
            e.code
        }
    }
}
