//! The `csbp` command line tool: cumulant evaluation on grids, coalescent
//! and comb sampling, and the validation experiment driver.
//!
//! Every flag can instead come from a TOML file passed as `--config`, with
//! one section per subcommand and top-level `seed` and `out` defaults. An
//! explicit flag beats the file; the `CSBP_SEED` environment variable beats
//! a configured seed but not an explicit `--seed`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use csbp::coalescent::{self, RateSchedule};
use csbp::feller::{self, FellerParams};
use csbp::harness::{self, ExperimentConfig};
use csbp::mechanism::{self, BranchingMechanism};
use csbp::{Error, Result};

#[derive(Parser)]
#[command(name = "csbp", version, about = "Continuous-state branching process toolkit")]
struct Cli {
    /// TOML file mirroring the flags: sections [vt], [coalesce],
    /// [feller-cpp], [validate], plus top-level `seed` and `out`.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the cumulant v_t(lam) over grids, printing t,lam,v as CSV.
    Vt {
        /// Mechanism TOML file (keys sigma2, beta, optional [levy] table).
        #[arg(long, value_name = "FILE")]
        mech: Option<PathBuf>,
        /// Comma-separated time grid.
        #[arg(long, value_name = "T1,T2,..", value_delimiter = ',')]
        t: Vec<f64>,
        /// Comma-separated intensity grid.
        #[arg(long, value_name = "L1,L2,..", value_delimiter = ',')]
        lam: Vec<f64>,
        /// Directory to also write vt.csv into.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Simulate consecutive coalescents driven by a mechanism, one final
    /// partition per line; `--out` adds a JSON dump of every event.
    Coalesce {
        /// Mechanism TOML file.
        #[arg(long, value_name = "FILE")]
        mech: Option<PathBuf>,
        /// Sampling intensity, or `inf` to start from the entrance.
        #[arg(long, value_name = "LAM")]
        lam: Option<f64>,
        /// Number of starting blocks.
        #[arg(long)]
        n: Option<usize>,
        /// Time horizon.
        #[arg(long)]
        t: Option<f64>,
        /// Number of independent trajectories.
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for coalesce.json.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Sample the Feller genealogy comb, printing rep,x,depth as CSV with
    /// `inf` marking family boundaries; `--out` writes one file per rep.
    FellerCpp {
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        /// Length of the sampled interval.
        #[arg(long)]
        xmax: Option<f64>,
        /// Depth cutoff below which atoms are dropped.
        #[arg(long)]
        tmin: Option<f64>,
        /// Number of independent combs.
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for cpp_<rep>.csv files.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run a named validation experiment (or `all`), print one pass/fail
    /// line per check, and exit 0 only if every check passed.
    Validate {
        /// Experiment name, or `all`.
        experiment: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for CSV sample dumps and JSON reports.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Sample size multiplier for the statistical experiments.
        #[arg(long)]
        replicates: Option<u64>,
    },
}

// ---------------------------------------------------------------------------
// Config file

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    out: Option<PathBuf>,
    vt: Option<VtSection>,
    coalesce: Option<CoalesceSection>,
    #[serde(rename = "feller-cpp")]
    feller_cpp: Option<FellerCppSection>,
    validate: Option<ValidateSection>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct VtSection {
    mech: Option<PathBuf>,
    t: Option<Vec<f64>>,
    lam: Option<Vec<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CoalesceSection {
    mech: Option<PathBuf>,
    lam: Option<LamValue>,
    n: Option<usize>,
    t: Option<f64>,
    reps: Option<u64>,
}

/// Intensity in the config file: a number, or the string "inf".
#[derive(Deserialize)]
#[serde(untagged)]
enum LamValue {
    Num(f64),
    Text(String),
}

impl LamValue {
    fn resolve(&self) -> Result<f64> {
        match self {
            LamValue::Num(x) => Ok(*x),
            LamValue::Text(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("lam must be a number or `inf`, got {s:?}"))),
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FellerCppSection {
    sigma2: Option<f64>,
    beta: Option<f64>,
    xmax: Option<f64>,
    tmin: Option<f64>,
    reps: Option<u64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ValidateSection {
    experiment: Option<String>,
    replicates: Option<u64>,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::config(format!("config {}: {e}", path.display())))
}

fn load_mechanism(path: &Path) -> Result<BranchingMechanism> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read mechanism {}: {e}", path.display())))?;
    BranchingMechanism::from_toml_str(&text)
}

/// Flag, then `CSBP_SEED`, then the config file, then zero.
fn resolve_seed(flag: Option<u64>, file_seed: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("CSBP_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map_err(|_| Error::config(format!("CSBP_SEED must be an unsigned integer, got {text:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(file_seed.unwrap_or(0)),
        Err(e) => Err(Error::config(format!("CSBP_SEED: {e}"))),
    }
}

fn require<T>(value: Option<T>, flag: &str, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::config(format!("missing `{key}`: pass {flag} or set the config key {key}")))
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Writes to stdout, treating a closed pipe as a no-op so `csbp ... | head`
/// exits cleanly instead of panicking.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: cannot write to stdout: {e}");
            std::process::exit(2);
        }
    }
}

// ---------------------------------------------------------------------------
// Subcommands

fn run_vt(mech: &BranchingMechanism, t_grid: &[f64], lam_grid: &[f64], out: Option<&Path>) -> Result<()> {
    let mut rows = String::from("t,lam,v\n");
    for &t in t_grid {
        for &lam in lam_grid {
            let v = mechanism::v(mech, t, lam)?;
            rows.push_str(&format!("{t},{lam},{v}\n"));
        }
    }
    emit(&rows);
    if let Some(dir) = out {
        write_out(dir, "vt.csv", &rows)?;
    }
    Ok(())
}

fn run_coalesce(
    mech: &BranchingMechanism,
    lam: f64,
    n: usize,
    t: f64,
    reps: u64,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    if n < 1 {
        return Err(Error::config("n must be at least 1"));
    }
    let t_start = if lam.is_infinite() { coalescent::DEFAULT_INF_START } else { 0.0 };
    if !(t > t_start) {
        return Err(Error::config(format!("horizon t must exceed the start time {t_start}, got {t}")));
    }
    let cap = (n as u64).saturating_sub(1).max(2);
    let sched = RateSchedule::new(mech, lam, cap)?;
    let mut dump = Vec::new();
    for rep in 0..reps {
        let mut rng = harness::derived_rng(seed, rep);
        let traj = coalescent::simulate_inhomogeneous(&sched, n, t_start, t, &mut rng)?;
        emit(&format!("{}\n", traj.final_state()));
        if out.is_some() {
            let events: Vec<serde_json::Value> = traj
                .events()
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "t": e.t,
                        "j": e.event.j,
                        "k": e.event.k,
                        "boundary": e.event.boundary,
                    })
                })
                .collect();
            dump.push(serde_json::json!({
                "rep": rep,
                "t_start": traj.t_start(),
                "horizon": traj.horizon(),
                "final": traj.final_state().to_string(),
                "events": events,
            }));
        }
    }
    if let Some(dir) = out {
        let json = serde_json::to_string_pretty(&dump)
            .map_err(|e| Error::inconsistency(format!("trajectory serialization: {e}")))?;
        write_out(dir, "coalesce.json", &(json + "\n"))?;
    }
    Ok(())
}

fn run_feller_cpp(
    params: &FellerParams,
    xmax: f64,
    tmin: f64,
    reps: u64,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let mut rows = String::from("rep,x,depth\n");
    for rep in 0..reps {
        let mut rng = harness::derived_rng(seed, rep);
        let cpp = feller::sample_cpp(params, xmax, tmin, &mut rng)?;
        for &(x, depth) in cpp.atoms() {
            rows.push_str(&format!("{rep},{x},{depth}\n"));
        }
        if let Some(dir) = out {
            write_out(dir, &format!("cpp_{rep}.csv"), &cpp.to_csv())?;
        }
    }
    emit(&rows);
    Ok(())
}

fn run_validate(experiment: &str, seed: u64, replicates: u64, out: Option<&Path>) -> Result<ExitCode> {
    let mut config = ExperimentConfig::named(experiment, seed);
    config.replicates = replicates;
    config.output_dir = out.map(Path::to_path_buf);
    let reports = harness::run(&config)?;
    for report in &reports {
        emit(&format!("{report}\n"));
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    emit(&format!("{passed}/{} checks passed\n", reports.len()));
    if passed == reports.len() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let file = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Vt { mech, t, lam, out } => {
            let section = file.vt.unwrap_or_default();
            let mech_path = require(mech.or(section.mech), "--mech", "vt.mech")?;
            let t_grid = if t.is_empty() { section.t.unwrap_or_default() } else { t };
            let lam_grid = if lam.is_empty() { section.lam.unwrap_or_default() } else { lam };
            if t_grid.is_empty() {
                return Err(Error::config("missing `vt.t`: pass --t or set the config key vt.t"));
            }
            if lam_grid.is_empty() {
                return Err(Error::config("missing `vt.lam`: pass --lam or set the config key vt.lam"));
            }
            let mech = load_mechanism(&mech_path)?;
            run_vt(&mech, &t_grid, &lam_grid, out.or(file.out).as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Coalesce { mech, lam, n, t, reps, seed, out } => {
            let section = file.coalesce.unwrap_or_default();
            let mech_path = require(mech.or(section.mech), "--mech", "coalesce.mech")?;
            let lam = match (lam, section.lam) {
                (Some(x), _) => x,
                (None, Some(v)) => v.resolve()?,
                (None, None) => return Err(Error::config("missing `coalesce.lam`: pass --lam or set the config key coalesce.lam")),
            };
            let n = require(n.or(section.n), "--n", "coalesce.n")?;
            let t = require(t.or(section.t), "--t", "coalesce.t")?;
            let reps = reps.or(section.reps).unwrap_or(1);
            let seed = resolve_seed(seed, file.seed)?;
            let mech = load_mechanism(&mech_path)?;
            run_coalesce(&mech, lam, n, t, reps, seed, out.or(file.out).as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::FellerCpp { sigma2, beta, xmax, tmin, reps, seed, out } => {
            let section = file.feller_cpp.unwrap_or_default();
            let sigma2 = require(sigma2.or(section.sigma2), "--sigma2", "feller-cpp.sigma2")?;
            let beta = require(beta.or(section.beta), "--beta", "feller-cpp.beta")?;
            let xmax = require(xmax.or(section.xmax), "--xmax", "feller-cpp.xmax")?;
            let tmin = tmin.or(section.tmin).unwrap_or(1e-4);
            let reps = reps.or(section.reps).unwrap_or(1);
            let seed = resolve_seed(seed, file.seed)?;
            let params = FellerParams::new(sigma2, beta)?;
            run_feller_cpp(&params, xmax, tmin, reps, seed, out.or(file.out).as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { experiment, seed, out, replicates } => {
            let section = file.validate.unwrap_or_default();
            let experiment = experiment.or(section.experiment).unwrap_or_else(|| "all".to_string());
            let replicates = replicates.or(section.replicates).unwrap_or(1);
            let seed = resolve_seed(seed, file.seed)?;
            run_validate(&experiment, seed, replicates, out.or(file.out).as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
