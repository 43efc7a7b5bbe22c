//! Command implementations behind the `pas` binary.
//!
//! Each subcommand reads a JSON config (optionally patched with `--set`
//! overrides), validates it against a strict schema and renders its output
//! as a string. The binary only handles argument parsing, the output sink
//! and the process exit code.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pas_core::airsolver::{find_basic_point, gamma_split, shaping_gap, sweep};
use pas_core::alphabets::make_ask;
use pas_core::channel::{Dmc, Quantizer};
use pas_core::infomeasures::Pmf;
use pas_core::signcode::{run_experiment, ExperimentConfig, CSV_HEADER};
use pas_core::typicality::{
    dump_b_typical, dump_typical, enumerate_b_typical, enumerate_typical, TypConfig,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const BUDGET: i32 = 3;
    pub const CONVERGENCE: i32 = 4;
}

/// Errors raised by the front end itself, before any library call.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "pas",
    version,
    about = "Achievable rates, typical sets and sign-coding experiments for PAS"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity, shaped entropy and γ split over an SNR grid (CSV).
    AirSweep(Common),
    /// Enumerate a weakly typical set (JSON header + one sequence per line).
    TypDump(Common),
    /// Enumerate a B-typical set with its Lemma-1 report.
    BTyp(Common),
    /// Monte Carlo sign-coding experiment.
    Sim {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SimFormat::Json)]
        format: SimFormat,
    },
    /// SNR at which the optimal amplitude entropy equals capacity.
    BasicPoint(Common),
    /// `H(A)` and `γ` of the capacity-achieving input at one SNR.
    GammaSplit(Common),
    /// SNR penalty of uniform signalling at a target rate.
    ShapingGap(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimFormat {
    Json,
    Csv,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set n=10` or `--set channel.snr_db=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::AirSweep(c)
            | Command::TypDump(c)
            | Command::BTyp(c)
            | Command::BasicPoint(c)
            | Command::GammaSplit(c)
            | Command::ShapingGap(c) => c,
            Command::Sim { common, .. } => common,
        }
    }
}

// ---------------------------------------------------------------------------
// Config schemas

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirSweepConfig {
    #[serde(default = "default_m")]
    pub m: u32,
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub quantizer: Quantizer,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypDumpConfig {
    pub pmf: Vec<f64>,
    pub n: usize,
    pub eps: f64,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BTypConfig {
    pub input: Vec<f64>,
    /// Row-stochastic transition matrix, one row per input letter.
    pub transition: Vec<Vec<f64>>,
    pub n: usize,
    pub eps: f64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_samples")]
    pub mc_samples: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasicPointConfig {
    #[serde(default = "default_m")]
    pub m: u32,
    #[serde(default = "default_bracket")]
    pub bracket_db: (f64, f64),
    #[serde(default)]
    pub quantizer: Quantizer,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSplitConfig {
    #[serde(default = "default_m")]
    pub m: u32,
    pub snr_db: f64,
    #[serde(default)]
    pub quantizer: Quantizer,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapingGapConfig {
    #[serde(default = "default_m")]
    pub m: u32,
    pub rate: f64,
    #[serde(default)]
    pub quantizer: Quantizer,
}

fn default_m() -> u32 {
    1
}

fn default_budget() -> u64 {
    10_000_000
}

fn default_samples() -> u64 {
    100_000
}

fn default_bracket() -> (f64, f64) {
    (-5.0, 10.0)
}

// ---------------------------------------------------------------------------
// Config loading

/// Reads the config file (or `{}`), applies overrides and deserializes.
pub fn load_config<T: DeserializeOwned>(
    path: Option<&Path>,
    overrides: &[String],
) -> anyhow::Result<T> {
    let mut value = match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    for item in overrides {
        apply_override(&mut value, item)?;
    }
    Ok(serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?)
}

/// Applies one `dotted.key=value` override. The value is parsed as JSON and
/// falls back to a plain string.
pub fn apply_override(root: &mut Value, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{item}` is not KEY=VALUE")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!(
            "override key `{key}` is malformed"
        )));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node.as_object_mut().ok_or_else(|| {
            CliError::Config(format!("`{key}`: parent of `{part}` is not an object"))
        })?;
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::Config(format!("`{key}`: parent is not an object")))?;
    obj.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

fn config_line<T: Serialize>(config: &T) -> String {
    format!(
        "# config: {}\n",
        serde_json::to_string(config).expect("config serializes")
    )
}

// ---------------------------------------------------------------------------
// Commands

/// CSV columns of `air-sweep`.
pub const AIR_HEADER: &str = "snr_db,capacity,h_a,gamma,mi_uniform,r_bmd_star";

pub fn cmd_air_sweep(config: &AirSweepConfig) -> anyhow::Result<String> {
    if config.snr_db.is_empty() {
        return Err(CliError::Config("snr_db grid is empty".into()).into());
    }
    config.quantizer.validate()?;
    let c = make_ask(config.m)?;
    let mut out = config_line(config);
    out.push_str(AIR_HEADER);
    out.push('\n');
    for (snr, row) in config
        .snr_db
        .iter()
        .zip(sweep(&c, &config.snr_db, &config.quantizer))
    {
        match row {
            Ok(p) => writeln!(
                out,
                "{},{},{},{},{},{}",
                p.snr_db, p.capacity, p.h_a, p.gamma, p.mi_uniform, p.r_bmd_star
            ),
            Err(e) => {
                eprintln!("snr {snr} dB: {e}");
                writeln!(out, "{snr},nan,nan,nan,nan,nan")
            }
        }
        .expect("writing to a String");
    }
    Ok(out)
}

/// Inserts the run config as the first key of a dump's JSON header line.
fn with_config_header<T: Serialize>(dump: String, config: &T) -> anyhow::Result<String> {
    let (head, body) = dump.split_once('\n').unwrap_or((&dump, ""));
    let header: Map<String, Value> = serde_json::from_str(head)?;
    let mut merged = Map::new();
    merged.insert("config".into(), serde_json::to_value(config)?);
    merged.extend(header);
    Ok(format!("{}\n{body}", Value::Object(merged)))
}

pub fn cmd_typ_dump(config: &TypDumpConfig) -> anyhow::Result<String> {
    let pmf = Pmf::new(config.pmf.clone())?;
    let cfg = TypConfig {
        budget: config.budget,
        ..TypConfig::new(config.n, config.eps)
    };
    let set = enumerate_typical(&pmf, &cfg)?;
    with_config_header(dump_typical(&set), config)
}

pub fn cmd_b_typ(config: &BTypConfig) -> anyhow::Result<String> {
    let input = Pmf::new(config.input.clone())?;
    let points = (0..config.transition.len()).map(|i| i as f64).collect();
    let dmc = Dmc::from_rows(&config.transition, points)?;
    let cfg = TypConfig {
        n: config.n,
        eps: config.eps,
        budget: config.budget,
        mc_samples: config.mc_samples,
        seed: config.seed,
    };
    let set = enumerate_b_typical(&input, &dmc, &cfg)?;
    with_config_header(dump_b_typical(&set), config)
}

pub fn cmd_sim(config: &ExperimentConfig, format: SimFormat) -> anyhow::Result<String> {
    let stats = run_experiment(config)?;
    Ok(match format {
        SimFormat::Json => {
            let doc = json!({ "config": config, "stats": stats });
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
        SimFormat::Csv => format!("{}{CSV_HEADER}\n{}\n", config_line(config), stats.csv_row()),
    })
}

pub fn cmd_basic_point(config: &BasicPointConfig) -> anyhow::Result<String> {
    config.quantizer.validate()?;
    let c = make_ask(config.m)?;
    let (snr_db, rate) = find_basic_point(&c, &config.quantizer, config.bracket_db)?;
    let doc = json!({ "config": config, "snr_db": snr_db, "rate": rate });
    Ok(format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

pub fn cmd_gamma_split(config: &GammaSplitConfig) -> anyhow::Result<String> {
    config.quantizer.validate()?;
    let c = make_ask(config.m)?;
    let (h_a, gamma) = gamma_split(&c, config.snr_db, &config.quantizer)?;
    let doc = json!({ "config": config, "h_a": h_a, "gamma": gamma, "rate": h_a + gamma });
    Ok(format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

pub fn cmd_shaping_gap(config: &ShapingGapConfig) -> anyhow::Result<String> {
    config.quantizer.validate()?;
    let c = make_ask(config.m)?;
    let gap = shaping_gap(&c, config.rate, &config.quantizer)?;
    let doc = json!({ "config": config, "gap_db": gap });
    Ok(format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

/// Loads the subcommand's config and runs it.
pub fn dispatch(command: &Command) -> anyhow::Result<String> {
    let common = command.common();
    let path = common.config.as_deref();
    let sets = &common.overrides;
    match command {
        Command::AirSweep(_) => cmd_air_sweep(&load_config(path, sets)?),
        Command::TypDump(_) => cmd_typ_dump(&load_config(path, sets)?),
        Command::BTyp(_) => cmd_b_typ(&load_config(path, sets)?),
        Command::Sim { format, .. } => cmd_sim(&load_config(path, sets)?, *format),
        Command::BasicPoint(_) => cmd_basic_point(&load_config(path, sets)?),
        Command::GammaSplit(_) => cmd_gamma_split(&load_config(path, sets)?),
        Command::ShapingGap(_) => cmd_shaping_gap(&load_config(path, sets)?),
    }
}

/// Runs a command on a pool of `threads` workers, or on the default pool.
pub fn run(command: &Command) -> anyhow::Result<String> {
    match command.common().threads {
        None => dispatch(command),
        Some(0) => bail!(CliError::Config("--threads must be at least 1".into())),
        #[cfg(feature = "parallel")]
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .context("building the worker pool")?
            .install(|| dispatch(command)),
        #[cfg(not(feature = "parallel"))]
        Some(_) => dispatch(command),
    }
}

/// Exit code for an error chain.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use pas_core::Error as E;
    if err.downcast_ref::<CliError>().is_some() {
        return exit::CONFIG;
    }
    match err.downcast_ref::<E>() {
        Some(E::Budget { .. }) => exit::BUDGET,
        Some(E::Convergence { .. }) => exit::CONVERGENCE,
        Some(E::Config(_) | E::Size(_) | E::Shape(_) | E::Domain(_) | E::Level { .. }) => {
            exit::CONFIG
        }
        _ => exit::FAILURE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_nested_and_plain() {
        let mut v = json!({ "channel": { "kind": "awgn" } });
        apply_override(&mut v, "channel.snr_db=4.5").unwrap();
        apply_override(&mut v, "decoder=smd").unwrap();
        apply_override(&mut v, "amplitude_pmf=[0.7,0.3]").unwrap();
        assert_eq!(v["channel"]["snr_db"], json!(4.5));
        assert_eq!(v["decoder"], json!("smd"));
        assert_eq!(v["amplitude_pmf"], json!([0.7, 0.3]));
        assert!(apply_override(&mut v, "novalue").is_err());
        assert!(apply_override(&mut v, "decoder.x=1").is_err());
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = load_config::<TypDumpConfig>(
            None,
            &[
                "pmf=[0.5,0.5]".into(),
                "n=3".into(),
                "eps=0.1".into(),
                "bogus=1".into(),
            ],
        )
        .unwrap_err();
        assert_eq!(exit_code(&err), exit::CONFIG);
    }

    #[test]
    fn empty_grid_rejected() {
        let err = cmd_air_sweep(&AirSweepConfig {
            m: 1,
            snr_db: vec![],
            quantizer: Quantizer::default(),
        })
        .unwrap_err();
        assert_eq!(exit_code(&err), exit::CONFIG);
    }

    #[test]
    fn budget_maps_to_three() {
        let err = cmd_typ_dump(&TypDumpConfig {
            pmf: vec![0.5, 0.5],
            n: 30,
            eps: 0.1,
            budget: 1000,
        })
        .unwrap_err();
        assert_eq!(exit_code(&err), exit::BUDGET);
        assert!(err.to_string().contains("budget"));
    }

    #[test]
    fn convergence_maps_to_four() {
        let err = anyhow::Error::from(pas_core::Error::Convergence {
            iterations: 1,
            last_value: 0.0,
            last_iterate: vec![],
        });
        assert_eq!(exit_code(&err), exit::CONVERGENCE);
    }
}
