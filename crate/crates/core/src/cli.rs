//! Command-line drivers. [`run`] parses arguments, executes one subcommand
//! and returns the process exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dataset::{self, ExperimentRecord, RecordError};
use crate::error::Error;
use crate::finitekey::EpsilonBudget;
use crate::mcoracle::{simulate_session, SimConfig};
use crate::optimizer::{self, Candidate, GaConfig, SearchSpace};
use crate::security::{finite_key_rate, SecurityResult, DEFAULT_EC_EFFICIENCY};
use crate::statmodel::{BasisPair, ChannelParams, ProtocolParams, SessionParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

pub const SWEEP_HEADER: &str = "loss_db,mu,nu,p_mu,p_z,p_x,skr_bps";

#[derive(Debug, Parser)]
#[command(
    name = "rfiqkd",
    version,
    about = "Finite-key analysis for one-decoy RFI-QKD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Secret key rate of one experiment record.
    Skr {
        #[arg(long)]
        input: PathBuf,
        /// Write the report as JSON.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        security: SecurityArgs,
    },
    /// Compare computed values with the published ones for every record.
    Verify {
        /// Directory of records; defaults to the bundled dataset.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        security: SecurityArgs,
    },
    /// Key rate against total loss, written as CSV.
    Sweep {
        /// JSON with optional `channel` and `session` overriding the defaults.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 5.0)]
        from: f64,
        #[arg(long, default_value_t = 55.0)]
        to: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        /// Optimize parameters at every point instead of using the bundled
        /// record nearest in loss.
        #[arg(long)]
        optimize: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        security: SecurityArgs,
    },
    /// Search for the operating point with the highest key rate.
    Optimize {
        /// JSON with optional `channel`, `session`, `space` and `ga`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Total loss in dB, overriding the channel's.
        #[arg(long)]
        loss: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        security: SecurityArgs,
    },
    /// Monte Carlo session; writes an experiment record.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        /// Record destination; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = SessionParams::EXPERIMENT.rep_rate_hz)]
        rep_rate: f64,
    },
}

#[derive(Debug, Clone, Copy, Args)]
struct SecurityArgs {
    /// Failure probability of the detection-count intervals.
    #[arg(long)]
    epsilon1: Option<f64>,
    /// Failure probability of the error-count intervals.
    #[arg(long)]
    epsilon2: Option<f64>,
    /// Error-correction efficiency.
    #[arg(long, default_value_t = DEFAULT_EC_EFFICIENCY)]
    f: f64,
}

impl SecurityArgs {
    fn budget(&self) -> Result<EpsilonBudget, CliError> {
        let d = EpsilonBudget::default();
        let eb = d.with_hoeffding(
            self.epsilon1.unwrap_or(d.eps_1),
            self.epsilon2.unwrap_or(d.eps_2),
        );
        eb.validate()?;
        if !(self.f >= 1.0) {
            return Err(CliError::Input(format!("--f {} must be >= 1", self.f)));
        }
        Ok(eb)
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Failed(_) => EXIT_FAILED,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InfeasibleLink => CliError::Failed(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<RecordError> for CliError {
    fn from(e: RecordError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("malformed {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialises") + "\n"
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return EXIT_INPUT;
            }
            let _ = write!(out, "{text}");
            return EXIT_OK;
        }
    };
    let outcome = match cli.command {
        Command::Skr {
            input,
            output,
            security,
        } => cmd_skr(&input, output.as_deref(), &security, out),
        Command::Verify {
            input,
            output,
            security,
        } => cmd_verify(input.as_deref(), output.as_deref(), &security, out),
        Command::Sweep {
            input,
            output,
            from,
            to,
            step,
            optimize,
            seed,
            security,
        } => {
            let range = SweepRange { from, to, step };
            cmd_sweep(
                input.as_deref(),
                output.as_deref(),
                range,
                optimize,
                seed,
                &security,
                out,
            )
        }
        Command::Optimize {
            input,
            output,
            loss,
            seed,
            security,
        } => cmd_optimize(
            input.as_deref(),
            output.as_deref(),
            loss,
            seed,
            &security,
            out,
        ),
        Command::Simulate {
            input,
            output,
            seed,
            rep_rate,
        } => cmd_simulate(&input, output.as_deref(), seed, rep_rate, out),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}

#[derive(Debug, Serialize)]
struct SkrReport {
    loss_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fiber_km: Option<f64>,
    epsilon: EpsilonBudget,
    f: f64,
    result: SecurityResult,
}

fn cmd_skr(
    input: &Path,
    output: Option<&Path>,
    security: &SecurityArgs,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let eb = security.budget()?;
    let record = ExperimentRecord::load(input)?;
    let r = finite_key_rate(
        &record.tallies,
        &record.protocol,
        &eb,
        &record.session,
        security.f,
    )?;
    let _ = writeln!(out, "loss_db        {}", record.loss_db);
    let _ = writeln!(out, "C              {:.6}", r.c_value);
    let _ = writeln!(out, "e_zz_1u        {:.6}", r.e_zz_1u);
    let _ = writeln!(out, "E_zz           {:.6}", r.e_zz);
    let _ = writeln!(out, "s0_lower       {:.3}", r.s0_lower);
    let _ = writeln!(out, "s1_lower       {:.3}", r.s1_lower);
    let _ = writeln!(out, "I_E_upper      {:.6}", r.i_e_upper);
    let _ = writeln!(out, "R              {:e}", r.skr_per_pulse);
    let _ = writeln!(out, "skr_bps        {:.6}", r.skr_bits_per_second);
    if let Some(path) = output {
        let report = SkrReport {
            loss_db: record.loss_db,
            fiber_km: record.fiber_km,
            epsilon: eb,
            f: security.f,
            result: r,
        };
        write_file(path, &to_json(&report))?;
    }
    Ok(())
}

/// Agreement thresholds between computed and published values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Absolute, in percentage points.
    pub e_zz_pp: f64,
    /// Absolute.
    pub c: f64,
    /// Absolute, in percentage points.
    pub e_zz_1u_pp: f64,
    /// Relative.
    pub s1_rel: f64,
    /// Relative.
    pub skr_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            e_zz_pp: 0.01,
            c: 0.03,
            e_zz_1u_pp: 0.15,
            s1_rel: 0.02,
            skr_rel: 0.10,
        }
    }
}

/// One compared quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub computed: f64,
    pub published: f64,
    pub deviation: f64,
    pub pass: bool,
}

impl Check {
    fn absolute(computed: f64, published: f64, tol: f64) -> Self {
        let deviation = computed - published;
        Check {
            computed,
            published,
            deviation,
            pass: deviation.abs() <= tol,
        }
    }

    fn relative(computed: f64, published: f64, tol: f64) -> Self {
        let deviation = (computed - published) / published;
        Check {
            computed,
            published,
            deviation,
            pass: deviation.abs() <= tol,
        }
    }
}

/// Comparison of one record against its published values. Error rates are in
/// percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyRow {
    pub loss_db: f64,
    pub fiber_km: Option<f64>,
    pub e_zz_percent: Check,
    pub c: Check,
    pub e_zz_1u_percent: Check,
    pub s1_lower: Check,
    pub skr_bits_per_second: Check,
}

impl VerifyRow {
    pub fn pass(&self) -> bool {
        [
            self.e_zz_percent,
            self.c,
            self.e_zz_1u_percent,
            self.s1_lower,
            self.skr_bits_per_second,
        ]
        .iter()
        .all(|c| c.pass)
    }
}

/// Runs the finite-key pipeline on a record and compares it with the
/// published values. Fails when the record has none.
pub fn verify_record(
    record: &ExperimentRecord,
    eb: &EpsilonBudget,
    f: f64,
    tol: &Tolerances,
) -> Result<VerifyRow, Error> {
    let published = record.published.ok_or_else(|| {
        Error::InvalidTally(format!(
            "record at {} dB has no published values",
            record.loss_db
        ))
    })?;
    let r = finite_key_rate(&record.tallies, &record.protocol, eb, &record.session, f)?;
    let e_zz = record.tallies.m_total(BasisPair::ZZ) / record.tallies.n_total(BasisPair::ZZ);
    Ok(VerifyRow {
        loss_db: record.loss_db,
        fiber_km: record.fiber_km,
        e_zz_percent: Check::absolute(100.0 * e_zz, published.e_zz_percent, tol.e_zz_pp),
        c: Check::absolute(r.c_value, published.c, tol.c),
        e_zz_1u_percent: Check::absolute(
            100.0 * r.e_zz_1u,
            published.e_zz_1u_percent,
            tol.e_zz_1u_pp,
        ),
        s1_lower: Check::relative(r.s1_lower, published.s1_lower, tol.s1_rel),
        skr_bits_per_second: Check::relative(
            r.skr_bits_per_second,
            published.skr_bits_per_second,
            tol.skr_rel,
        ),
    })
}

fn mark(c: &Check) -> &'static str {
    if c.pass {
        ""
    } else {
        "*"
    }
}

fn cmd_verify(
    input: Option<&Path>,
    output: Option<&Path>,
    security: &SecurityArgs,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let eb = security.budget()?;
    let records = match input {
        Some(dir) => dataset::load_dir(dir)?,
        None => dataset::bundled(),
    };
    let tol = Tolerances::default();
    let rows = records
        .iter()
        .map(|r| verify_record(r, &eb, security.f, &tol))
        .collect::<Result<Vec<_>, _>>()?;
    let _ = writeln!(
        out,
        "{:>8} {:>8} {:>10} {:>8} {:>10} {:>14} {:>14}  status",
        "loss_db", "km", "E_zz_%", "C", "e1u_%", "s1_lower", "skr_bps"
    );
    for row in &rows {
        let km = row.fiber_km.map_or("-".to_string(), |k| k.to_string());
        let _ = writeln!(
            out,
            "{:>8} {:>8} {:>9.4}{:1} {:>7.4}{:1} {:>9.4}{:1} {:>13.1}{:1} {:>13.4}{:1}  {}",
            row.loss_db,
            km,
            row.e_zz_percent.computed,
            mark(&row.e_zz_percent),
            row.c.computed,
            mark(&row.c),
            row.e_zz_1u_percent.computed,
            mark(&row.e_zz_1u_percent),
            row.s1_lower.computed,
            mark(&row.s1_lower),
            row.skr_bits_per_second.computed,
            mark(&row.skr_bits_per_second),
            if row.pass() { "PASS" } else { "FAIL" }
        );
    }
    if let Some(path) = output {
        write_file(path, &to_json(&rows))?;
    }
    let failed = rows.iter().filter(|r| !r.pass()).count();
    if failed > 0 {
        return Err(CliError::Failed(format!(
            "{failed} of {} records outside tolerance (marked *)",
            rows.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl SweepRange {
    /// Loss values `from + i step` up to `to`, rounded to 1e-9 dB.
    pub fn points(&self) -> Result<Vec<f64>, Error> {
        let bad = |reason: &str| Error::InvalidParameter {
            name: "sweep range",
            reason: reason.to_string(),
        };
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(bad("step must be > 0"));
        }
        if !(self.from.is_finite() && self.to.is_finite()) || self.to < self.from {
            return Err(bad("empty range"));
        }
        let count = ((self.to - self.from) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|i| ((self.from + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect())
    }
}

/// Channel and session shared by `sweep` and `optimize`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkConfig {
    pub channel: ChannelParams,
    pub session: SessionParams,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            channel: ChannelParams::experiment(0.0),
            session: SessionParams::EXPERIMENT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub loss_db: f64,
    pub params: ProtocolParams,
    pub skr_bps: f64,
}

impl SweepRow {
    pub fn csv(&self) -> String {
        let p = &self.params;
        format!(
            "{},{},{},{},{},{},{}",
            self.loss_db, p.mu, p.nu, p.p_mu, p.p_z, p.p_x, self.skr_bps
        )
    }
}

/// Protocol parameters of the bundled record nearest in loss.
pub fn nearest_published(loss_db: f64) -> ProtocolParams {
    dataset::bundled()
        .into_iter()
        .min_by(|a, b| {
            (a.loss_db - loss_db)
                .abs()
                .total_cmp(&(b.loss_db - loss_db).abs())
        })
        .expect("bundled dataset is not empty")
        .protocol
}

/// Key rate at each loss. Without a GA config every point uses the bundled
/// parameters nearest in loss; with one, every point is optimized, and
/// points where no candidate gives a key fall back to those parameters
/// with a zero rate.
pub fn sweep(
    link: &LinkConfig,
    range: SweepRange,
    ga: Option<&GaConfig>,
    eb: &EpsilonBudget,
    f: f64,
) -> Result<Vec<SweepRow>, Error> {
    let points = range.points()?;
    link.session.validate()?;
    points
        .into_iter()
        .map(|loss_db| {
            let ch = link.channel.with_loss(loss_db);
            ch.validate()?;
            let fixed = nearest_published(loss_db);
            let row = match ga {
                None => SweepRow {
                    loss_db,
                    params: fixed,
                    skr_bps: optimizer::fitness(
                        &Candidate::from_protocol(&fixed),
                        &ch,
                        &link.session,
                        eb,
                        f,
                    ),
                },
                Some(cfg) => match optimizer::optimize(
                    &ch,
                    &link.session,
                    eb,
                    f,
                    &SearchSpace::default(),
                    cfg,
                ) {
                    Ok(best) => SweepRow {
                        loss_db,
                        params: best.params,
                        skr_bps: best.result.skr_bits_per_second,
                    },
                    Err(Error::InfeasibleLink) => SweepRow {
                        loss_db,
                        params: fixed,
                        skr_bps: 0.0,
                    },
                    Err(e) => return Err(e),
                },
            };
            Ok(row)
        })
        .collect()
}

fn cmd_sweep(
    input: Option<&Path>,
    output: Option<&Path>,
    range: SweepRange,
    optimize: bool,
    seed: u64,
    security: &SecurityArgs,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let eb = security.budget()?;
    let link: LinkConfig = match input {
        Some(path) => read_json(path)?,
        None => LinkConfig::default(),
    };
    let ga = GaConfig {
        seed,
        ..GaConfig::default()
    };
    let rows = sweep(&link, range, optimize.then_some(&ga), &eb, security.f)?;
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv());
        csv.push('\n');
    }
    match output {
        Some(path) => write_file(path, &csv)?,
        None => {
            let _ = write!(out, "{csv}");
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeConfig {
    pub channel: ChannelParams,
    pub session: SessionParams,
    pub space: SearchSpace,
    pub ga: GaConfig,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            channel: ChannelParams::experiment(47.10),
            session: SessionParams::EXPERIMENT,
            space: SearchSpace::default(),
            ga: GaConfig::default(),
        }
    }
}

#[derive(Debug, Serialize)]
struct OptimizeReport {
    seed: u64,
    loss_db: f64,
    params: ProtocolParams,
    result: SecurityResult,
}

fn cmd_optimize(
    input: Option<&Path>,
    output: Option<&Path>,
    loss: Option<f64>,
    seed: Option<u64>,
    security: &SecurityArgs,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let eb = security.budget()?;
    let mut cfg: OptimizeConfig = match input {
        Some(path) => read_json(path)?,
        None => OptimizeConfig::default(),
    };
    if let Some(loss) = loss {
        cfg.channel.loss_db = loss;
    }
    if let Some(seed) = seed {
        cfg.ga.seed = seed;
    }
    let _ = writeln!(out, "seed           {}", cfg.ga.seed);
    let best = optimizer::optimize(
        &cfg.channel,
        &cfg.session,
        &eb,
        security.f,
        &cfg.space,
        &cfg.ga,
    )?;
    let p = &best.params;
    let _ = writeln!(out, "loss_db        {}", cfg.channel.loss_db);
    let _ = writeln!(out, "mu             {:.6}", p.mu);
    let _ = writeln!(out, "nu             {:.6}", p.nu);
    let _ = writeln!(out, "p_mu           {:.6}", p.p_mu);
    let _ = writeln!(out, "p_z            {:.6}", p.p_z);
    let _ = writeln!(out, "p_x = p_y      {:.6}", p.p_x);
    let _ = writeln!(out, "skr_bps        {:.6}", best.result.skr_bits_per_second);
    if let Some(path) = output {
        let report = OptimizeReport {
            seed: cfg.ga.seed,
            loss_db: cfg.channel.loss_db,
            params: best.params,
            result: best.result,
        };
        write_file(path, &to_json(&report))?;
    }
    Ok(())
}

/// Runs a simulation and packages the tallies as an experiment record.
pub fn simulate_record(cfg: &SimConfig, rep_rate_hz: f64) -> Result<ExperimentRecord, Error> {
    let tallies = simulate_session(cfg)?;
    let session = SessionParams {
        n_tot: cfg.pulses as f64,
        rep_rate_hz,
    };
    session.validate()?;
    Ok(ExperimentRecord {
        fiber_km: None,
        loss_db: cfg.channel.loss_db,
        protocol: cfg.protocol,
        session,
        tallies,
        published: None,
    })
}

fn cmd_simulate(
    input: &Path,
    output: Option<&Path>,
    seed: Option<u64>,
    rep_rate: f64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut cfg: SimConfig = read_json(input)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let record = simulate_record(&cfg, rep_rate)?;
    let json = record.to_json();
    match output {
        Some(path) => {
            write_file(path, &json)?;
            let zz = record.tallies.n_total(BasisPair::ZZ);
            let _ = writeln!(
                out,
                "seed {} pulses {} n_ZZ {} -> {}",
                cfg.seed,
                cfg.pulses,
                zz,
                path.display()
            );
        }
        None => {
            let _ = write!(out, "{json}");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("rfiqkd").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn sweep_points_include_both_ends() {
        let r = SweepRange {
            from: 5.0,
            to: 55.0,
            step: 0.5,
        };
        let pts = r.points().unwrap();
        assert_eq!(pts.len(), 101);
        assert_eq!(pts[1], 5.5);
        assert_eq!(*pts.last().unwrap(), 55.0);
        let single = SweepRange {
            from: 39.29,
            to: 39.29,
            step: 1.0,
        };
        assert_eq!(single.points().unwrap(), [39.29]);
    }

    #[test]
    fn bad_sweep_ranges_are_rejected() {
        for (from, to, step) in [(10.0, 5.0, 1.0), (5.0, 10.0, 0.0), (5.0, 10.0, -1.0)] {
            assert!(SweepRange { from, to, step }.points().is_err());
        }
        let (code, _, err) = call(&["sweep", "--from", "10", "--to", "5"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("empty range"));
    }

    #[test]
    fn nearest_published_picks_closest_loss() {
        assert_eq!(nearest_published(0.0).p_z, 0.928);
        assert_eq!(nearest_published(43.0).p_z, 0.71);
        assert_eq!(nearest_published(43.3).p_z, 0.476);
        assert_eq!(nearest_published(100.0).p_z, 0.476);
    }

    #[test]
    fn unknown_subcommand_is_an_input_error() {
        let (code, _, err) = call(&["frobnicate"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(!err.is_empty());
    }

    #[test]
    fn help_exits_cleanly() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("verify"));
    }

    #[test]
    fn bad_epsilon_is_an_input_error() {
        let (code, _, _) = call(&["verify", "--epsilon1", "0"]);
        assert_eq!(code, EXIT_INPUT);
        let (code, _, _) = call(&["verify", "--f", "0.9"]);
        assert_eq!(code, EXIT_INPUT);
    }

    #[test]
    fn missing_input_file_is_an_input_error() {
        let (code, _, err) = call(&["skr", "--input", "/nonexistent/record.json"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("cannot read"));
    }

    #[test]
    fn infeasible_optimization_exits_with_failure() {
        let (code, out, _) = call(&["optimize", "--loss", "90"]);
        assert_eq!(code, EXIT_FAILED);
        assert!(out.contains("seed"));
    }

    #[test]
    fn verify_row_flags_perturbed_skr() {
        let eb = EpsilonBudget::default();
        let mut record = dataset::bundled().remove(3);
        let row = verify_record(&record, &eb, 1.16, &Tolerances::default()).unwrap();
        assert!(row.pass());
        record.published.as_mut().unwrap().skr_bits_per_second *= 2.0;
        let row = verify_record(&record, &eb, 1.16, &Tolerances::default()).unwrap();
        assert!(!row.skr_bits_per_second.pass);
        assert!(!row.pass());
    }

    #[test]
    fn unpublished_record_cannot_be_verified() {
        let mut record = dataset::bundled().remove(0);
        record.published = None;
        assert!(verify_record(
            &record,
            &EpsilonBudget::default(),
            1.16,
            &Tolerances::default()
        )
        .is_err());
    }
}
