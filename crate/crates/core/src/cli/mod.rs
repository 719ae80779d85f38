//! `qsched solve|sweep|simulate|verify`.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::lp::{self, LpError, LpModel, SweepEntry};
use crate::markov;
use crate::model::SystemConfig;
use crate::oracle;
use crate::sim::{self, SimConfig};
pub use config::{PolicyFile, RunConfig};
pub use output::{sig9, sweep_csv, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("verification failed")]
    Verification,
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) | CliError::Failed(_) => EXIT_USAGE,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Verification => EXIT_VERIFY,
        }
    }
}

impl From<LpError> for CliError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<oracle::OracleError> for CliError {
    fn from(e: oracle::OracleError) -> Self {
        CliError::Failed(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Failed(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "qsched", version, about = "Delay-optimal scheduling under an average power budget")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for one power budget and write the threshold policy.
    Solve(SolveArgs),
    /// Trace the delay-power tradeoff curve as CSV.
    Sweep(SweepArgs),
    /// Simulate a policy file and compare with theory.
    Simulate(SimulateArgs),
    /// Cross-check the LP against brute-force oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub config: PathBuf,
    /// Average power budget; overrides the config's `budget`.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Write the policy here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub config: PathBuf,
    /// Comma-separated budgets.
    #[arg(long, value_delimiter = ',', conflicts_with = "auto")]
    pub budgets: Option<Vec<f64>>,
    /// Number of log-spaced budgets between the minimum sustainable power and
    /// the always-transmit power.
    #[arg(long)]
    pub auto: Option<usize>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write `<output>.gp`, a gnuplot script for the curve.
    #[arg(long, requires = "output")]
    pub gnuplot: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub config: PathBuf,
    pub policy: PathBuf,
    #[arg(long)]
    pub slots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = sim::DEFAULT_WARMUP)]
    pub warmup: u64,
    /// Also measure per-packet sojourn times.
    #[arg(long)]
    pub sojourn: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Config to check; a built-in small instance when omitted.
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Random policies for the identity checks.
    #[arg(long, default_value_t = 200)]
    pub policies: usize,
    /// Scale one row of G before checking (fault injection).
    #[arg(long, hide = true)]
    pub tamper_g: Option<usize>,
}

/// Built-in instance used by `verify` without a config.
pub fn default_verify_config() -> RunConfig {
    RunConfig {
        theta: vec![0.6, 0.25, 0.15],
        eta: vec![0.45, 0.55],
        power: vec![0.5, 2.0],
        capacity: 6,
        budget: None,
        budgets: None,
        slots: None,
        seed: None,
        loss_penalty: None,
    }
}

/// Parses `args` (program name first), runs, prints, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(CliError::Verification) => EXIT_VERIFY,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a command and returns what it prints on success. Verification
/// failures print their report before returning the error.
pub fn execute(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => {
            let (text, ok) = cmd_verify(a)?;
            if ok {
                Ok(text)
            } else {
                print!("{text}");
                Err(CliError::Verification)
            }
        }
    }
}

fn model_for(rc: &RunConfig, sys: &SystemConfig) -> Result<LpModel, CliError> {
    let model = LpModel::new(sys)?;
    Ok(match rc.loss_penalty {
        Some(p) if p >= 0.0 => model.with_loss_penalty(p),
        Some(p) => return Err(CliError::Parse(format!("invalid config: loss_penalty: {p} is negative"))),
        None => model,
    })
}

fn write_or_return(path: Option<&Path>, body: &str) -> Result<Option<String>, CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, body).map_err(|e| io_err(p, e))?;
            Ok(None)
        }
        None => Ok(Some(body.to_string())),
    }
}

pub fn cmd_solve(a: &SolveArgs) -> Result<String, CliError> {
    let rc = RunConfig::load(&a.config)?;
    let sys = rc.system()?;
    let budget = a
        .budget
        .or(rc.budget)
        .ok_or_else(|| CliError::Usage("no budget: pass --budget or set `budget` in the config".into()))?;
    let model = model_for(&rc, &sys)?;
    let opt = model.optimize(budget)?;
    let pf = PolicyFile {
        capacity: sys.capacity(),
        thresholds: opt.thresholds.thresholds.clone(),
        frac: opt.thresholds.frac.clone(),
        budget,
        delay: opt.delay,
        power: opt.power,
        loss: opt.loss,
    };
    let manifest = RunManifest::new("solve", &a.config.display().to_string()).param("budget", sig9(budget));
    let body = format!("{}{}", manifest.header(), pf.render());
    let mut out = write_or_return(a.output.as_deref(), &body)?.unwrap_or_default();
    let join = |v: Vec<String>| v.join(" ");
    let _ = writeln!(out, "budget     {}", sig9(budget));
    let _ = writeln!(out, "delay      {}", sig9(opt.delay));
    let _ = writeln!(out, "power      {}", sig9(opt.power));
    let _ = writeln!(out, "loss       {}", sig9(opt.loss));
    let _ = writeln!(
        out,
        "thresholds {}",
        join(opt.thresholds.thresholds.iter().map(|t| t.to_string()).collect())
    );
    let _ = writeln!(out, "frac       {}", join(opt.thresholds.frac.iter().map(|f| sig9(*f)).collect()));
    Ok(out)
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<String, CliError> {
    let rc = RunConfig::load(&a.config)?;
    let sys = rc.system()?;
    let model = model_for(&rc, &sys)?;
    let (budgets, label) = match (&a.budgets, a.auto, &rc.budgets) {
        (Some(b), _, _) => (b.clone(), "list".to_string()),
        (None, Some(n), _) => (lp::default_budgets(&sys, n)?, format!("auto {n}")),
        (None, None, Some(b)) => (b.clone(), "config".to_string()),
        (None, None, None) => (
            lp::default_budgets(&sys, lp::DEFAULT_GRID)?,
            format!("auto {}", lp::DEFAULT_GRID),
        ),
    };
    if budgets.windows(2).any(|w| w[1] < w[0]) {
        return Err(CliError::Usage("budgets must be sorted ascending".into()));
    }
    let entries = lp::sweep_with(&model, &budgets)?;
    let manifest = RunManifest::new("sweep", &a.config.display().to_string())
        .param("budgets", &label)
        .param("points", budgets.len());
    let csv = sweep_csv(&manifest, sys.states(), &entries);
    if let (true, Some(out)) = (a.gnuplot, &a.output) {
        let gp = PathBuf::from(format!("{}.gp", out.display()));
        let script = output::gnuplot_script(&out.display().to_string(), &a.config.display().to_string());
        std::fs::write(&gp, script).map_err(|e| io_err(&gp, e))?;
    }
    let points = entries.iter().filter(|e| matches!(e, SweepEntry::Point(_))).count();
    Ok(match write_or_return(a.output.as_deref(), &csv)? {
        Some(text) => text,
        None => format!("{points} of {} budgets feasible\n", budgets.len()),
    })
}


pub fn cmd_simulate(a: &SimulateArgs) -> Result<String, CliError> {
    let rc = RunConfig::load(&a.config)?;
    let sys = rc.system()?;
    let pf = PolicyFile::load(&a.policy)?;
    if pf.capacity != sys.capacity() {
        return Err(CliError::Parse(format!(
            "{}: policy is for K = {}, config has K = {}",
            a.policy.display(),
            pf.capacity,
            sys.capacity()
        )));
    }
    let policy = lp::threshold_to_policy(&pf.threshold_policy(), &sys)
        .map_err(|e| CliError::Parse(format!("{}: {e}", a.policy.display())))?;
    let theory = markov::evaluate_policy(&sys, &policy).map_err(|e| CliError::Failed(e.to_string()))?;
    let mut sc = SimConfig::new(
        a.slots.or(rc.slots).unwrap_or(sim::DEFAULT_SLOTS),
        a.seed.or(rc.seed).unwrap_or(0),
    )
    .with_warmup(a.warmup);
    if a.sojourn {
        sc = sc.with_sojourn();
    }
    let r = sim::simulate(&sys, &policy, &sc).map_err(|e| CliError::Usage(e.to_string()))?;
    let manifest = RunManifest::new("simulate", &a.config.display().to_string())
        .with_seed(Some(sc.seed))
        .param("policy", a.policy.display())
        .param("slots", sc.n_slots)
        .param("warmup", sc.warmup);
    let rel = |emp: f64, th: f64| if th != 0.0 { sig9((emp - th) / th) } else { "-".into() };
    let theory_loss = theory.loss / sys.mean_rate();
    let mut out = manifest.header();
    let _ = writeln!(out, "{:<10} {:>16} {:>16} {:>16}", "metric", "theory", "empirical", "rel_error");
    for (name, th, emp) in [
        ("delay", theory.delay, r.empirical_delay),
        ("power", theory.power, r.empirical_power),
        ("loss", theory_loss, r.loss_rate),
        ("queue", theory.pi.mean(), r.mean_queue),
    ] {
        let _ = writeln!(out, "{name:<10} {:>16} {:>16} {:>16}", sig9(th), sig9(emp), rel(emp, th));
    }
    if let Some(s) = r.sojourn_delay {
        let _ = writeln!(out, "{:<10} {:>16} {:>16} {:>16}", "sojourn", sig9(theory.delay), sig9(s), rel(s, theory.delay));
    }
    let _ = writeln!(out, "slots      {}", r.slots_run);
    let _ = writeln!(
        out,
        "packets    accepted {} departed {} queued {}",
        r.accepted, r.departed, r.final_queue
    );
    Ok(out)
}

/// Runs the oracle suite; returns the report and whether every check passed.
pub fn cmd_verify(a: &VerifyArgs) -> Result<(String, bool), CliError> {
    let (rc, origin) = match &a.config {
        Some(p) => (RunConfig::load(p)?, p.display().to_string()),
        None => (default_verify_config(), "built-in".to_string()),
    };
    let sys = rc.system()?;
    let mut g = lp::build_g(&sys)?;
    if let Some(row) = a.tamper_g {
        if row >= g.rows() {
            return Err(CliError::Usage(format!("--tamper-g {row}: G has {} rows", g.rows())));
        }
        g.tamper(row, 1.5);
    }
    let base = model_for(&rc, &sys)?;
    let model = LpModel::with_g(&sys, g.clone()).with_loss_penalty(base.loss_penalty());

    let manifest = RunManifest::new("verify", &origin).with_seed(Some(a.seed));
    let mut out = manifest.header();
    let mut ok = true;
    let mut line = |out: &mut String, pass: bool, name: &str, detail: String| {
        ok &= pass;
        let _ = writeln!(out, "{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    };

    let report = oracle::verify_with_g(&sys, &g, a.policies, a.seed)?;
    let exact = |v: f64| v < 1e-8;
    line(&mut out, exact(report.cut_balance), "cut balance", sig9(report.cut_balance));
    line(&mut out, exact(report.throughput), "throughput = accepted rate", sig9(report.throughput));
    line(&mut out, exact(report.bounds), "departure bounds", sig9(report.bounds));
    line(&mut out, exact(report.reconstruction), "G reconstruction", sig9(report.reconstruction));
    line(&mut out, report.power < 1e-10, "power identity", sig9(report.power));
    line(&mut out, exact(report.delay_corrected), "delay identity (boundary corrected)", sig9(report.delay_corrected));
    let fit = report.delay_fit;
    let _ = writeln!(
        out,
        "INFO delay fit: delay = {} * moment + {} (max residual {}, max loss {})",
        sig9(fit.scale),
        sig9(fit.offset),
        sig9(fit.residual),
        sig9(report.max_loss)
    );

    match oracle::enumerate_pure(&sys) {
        Ok(atlas) => {
            let hull = oracle::atlas_hull(&atlas)?;
            let budgets = oracle::interior_budgets(&sys, 20)?;
            let hc = oracle::hull_agreement(&model, &hull, &budgets);
            let mut detail = format!("max gap {} over {} budgets", sig9(hc.max_gap), hc.budgets);
            if let Some((b, why)) = hc.failures.first() {
                let _ = write!(detail, "; budget {}: {why}", sig9(*b));
            }
            line(&mut out, hc.failures.is_empty() && hc.max_gap < 1e-6, "hull match", detail);
            line(
                &mut out,
                hc.max_fractional <= 1,
                "threshold structure",
                format!("at most {} fractional entries per column", hc.max_fractional),
            );
        }
        Err(oracle::OracleError::TooLarge { count }) => {
            let _ = writeln!(out, "SKIP hull match: {count} threshold policies");
        }
        Err(e) => return Err(e.into()),
    }

    match oracle::dominance(&model, 1000, a.seed) {
        Ok(d) => line(
            &mut out,
            d.passes(1e-9),
            "dominance",
            format!(
                "LP {} vs best of {} random policies {} at budget {}",
                sig9(d.lp_objective),
                d.sampled,
                sig9(d.best_sampled),
                sig9(d.budget)
            ),
        ),
        Err(e) => line(&mut out, false, "dominance", e.to_string()),
    }
    Ok((out, ok))
}
