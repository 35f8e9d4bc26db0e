//! Command-line runner: one subcommand per experiment, JSON report out.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdsim::experiments::{self, Params};
use qdsim::QdError;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

const PASS: u8 = 0;
const INVARIANT: u8 = 1;
const CONFIG: u8 = 2;
const RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qdsim",
    version,
    about = "Exact simulations of quantum double lattice models"
)]
struct Cli {
    #[command(subcommand)]
    experiment: Experiment,

    /// TOML or JSON file with experiment parameters and an optional `seed`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Writes the JSON report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Stores lattice states in a gauge frame (`--gauge-fixed false` for full mode).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    gauge_fixed: Option<bool>,

    /// Refuses to run when the estimated footprint exceeds this, e.g. `8G`, `512M`.
    #[arg(long, global = true, default_value = "8G")]
    memory_budget: String,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq, Debug)]
enum Experiment {
    GroupSuite,
    GroundStateCheck,
    StabilizerAlgebra,
    ParticleProjectorSuite,
    BAnyonRoundtrip,
    RibbonSuite,
    GFusionStatistics,
    DoubleExchange,
    EncodingSwitch,
    CondensationTable,
    WallCrossing,
    MagicPipeline,
    TeleportationStats,
    CircuitVsProjector,
}

impl Experiment {
    fn name(self) -> String {
        let debug = format!("{self:?}");
        let mut out = String::new();
        for (i, ch) in debug.chars().enumerate() {
            if ch.is_uppercase() && i > 0 {
                out.push('-');
            }
            out.push(ch.to_ascii_lowercase());
        }
        out
    }
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    seed: u64,
    memory_budget: u64,
    params: &'a Params,
}

#[derive(Serialize)]
struct Output<'a> {
    experiment: String,
    config: ConfigEcho<'a>,
    estimated_bytes: u64,
    pass: bool,
    report: Value,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: CONFIG,
            message: message.into(),
        }
    }
}

impl From<QdError> for Failure {
    fn from(e: QdError) -> Self {
        let code = match e {
            QdError::Resource(_) => RESOURCE,
            QdError::Lattice(_)
            | QdError::RegionMap { .. }
            | QdError::InvalidGroup(_)
            | QdError::UnsupportedGroup(_) => CONFIG,
            _ => INVARIANT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn parse_bytes(s: &str) -> Result<u64, Failure> {
    let s = s.trim();
    let (digits, scale) = match s.chars().last().map(|c| c.to_ascii_uppercase()) {
        Some('K') => (&s[..s.len() - 1], 1u64 << 10),
        Some('M') => (&s[..s.len() - 1], 1 << 20),
        Some('G') => (&s[..s.len() - 1], 1 << 30),
        Some('T') => (&s[..s.len() - 1], 1 << 40),
        _ => (s, 1),
    };
    digits
        .parse::<u64>()
        .ok()
        .and_then(|n| n.checked_mul(scale))
        .ok_or_else(|| Failure::config(format!("bad memory budget `{s}`")))
}

/// Reads parameters and seed from a config file. Unknown keys are rejected.
fn load_config(path: &Path) -> Result<(Params, Option<u64>), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let bad = |e: String| Failure::config(format!("{}: {e}", path.display()));
    let mut value: Value = if path.extension().is_some_and(|x| x == "json") {
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?
    } else {
        let table: toml::Table = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
        serde_json::to_value(table).map_err(|e| bad(e.to_string()))?
    };
    let obj = value
        .as_object_mut()
        .ok_or_else(|| bad("expected a table".into()))?;
    let seed = match obj.remove("seed") {
        None => None,
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| bad("seed must be a non-negative integer".into()))?,
        ),
    };
    let params = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
    Ok((params, seed))
}

fn validate(params: &Params) -> Result<(), Failure> {
    if !(1..=10).contains(&params.subgroup) {
        return Err(Failure::config(format!(
            "subgroup must be a label from 1 to 10, got {}",
            params.subgroup
        )));
    }
    if let Some(spec) = &params.lattice {
        spec.build()?;
    }
    Ok(())
}

fn report<T: Serialize>(r: T, checks: &[experiments::Check]) -> Result<(bool, Value), Failure> {
    let value = serde_json::to_value(r).map_err(|e| Failure {
        code: INVARIANT,
        message: e.to_string(),
    })?;
    Ok((experiments::all_pass(checks), value))
}

fn run(exp: Experiment, params: &Params, rng: &mut ChaCha8Rng) -> Result<(bool, Value), Failure> {
    use Experiment::*;
    match exp {
        GroupSuite => {
            let r = experiments::group_suite()?;
            report(&r, &r.checks)
        }
        GroundStateCheck => {
            let r = experiments::ground_state_check(params)?;
            report(&r, &r.checks)
        }
        StabilizerAlgebra => {
            let r = experiments::stabilizer_algebra(params, rng)?;
            report(&r, &r.checks)
        }
        ParticleProjectorSuite => {
            let r = experiments::projector_suite(params, rng)?;
            report(&r, &r.checks)
        }
        BAnyonRoundtrip => {
            let r = experiments::b_roundtrip()?;
            report(&r, &r.checks)
        }
        RibbonSuite => {
            let r = experiments::ribbon_suite(params, rng)?;
            report(&r, &r.checks)
        }
        GFusionStatistics => {
            let r = experiments::g_fusion_statistics()?;
            report(&r, &r.checks)
        }
        DoubleExchange => {
            let r = experiments::double_exchange()?;
            report(&r, &r.checks)
        }
        EncodingSwitch => {
            let r = experiments::encoding_switch()?;
            report(&r, &r.checks)
        }
        CondensationTable => {
            let r = experiments::wall_suite(params, rng)?;
            report(&r, &r.checks)
        }
        WallCrossing => {
            let r = experiments::wall_crossing(params, rng)?;
            report(&r, &r.checks)
        }
        MagicPipeline => {
            let r = experiments::magic_pipeline(params, rng)?;
            report(&r, &r.checks)
        }
        TeleportationStats => {
            let r = experiments::teleportation(params, rng)?;
            report(&r, &r.checks)
        }
        CircuitVsProjector => {
            let r = experiments::circuit_vs_projector(params)?;
            report(&r, &r.checks)
        }
    }
}

fn main_inner(cli: Cli) -> Result<u8, Failure> {
    let (mut params, file_seed) = match &cli.config {
        Some(p) => load_config(p)?,
        None => (Params::default(), None),
    };
    if let Some(g) = cli.gauge_fixed {
        params.gauge_fixed = g;
    }
    validate(&params)?;
    let seed = cli.seed.or(file_seed).unwrap_or(0);
    let budget = parse_bytes(&cli.memory_budget)?;
    let name = cli.experiment.name();
    let estimated = experiments::estimated_bytes(&name, &params)?;
    if estimated > budget {
        return Err(Failure {
            code: RESOURCE,
            message: format!("{name} needs about {estimated} bytes, budget is {budget}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pass, report) = run(cli.experiment, &params, &mut rng)?;
    let out = Output {
        experiment: name,
        config: ConfigEcho {
            seed,
            memory_budget: budget,
            params: &params,
        },
        estimated_bytes: estimated,
        pass,
        report,
    };
    let text = serde_json::to_string_pretty(&out).map_err(|e| Failure {
        code: INVARIANT,
        message: e.to_string(),
    })?;
    match &cli.output {
        Some(p) => std::fs::write(p, text + "\n")
            .map_err(|e| Failure::config(format!("{}: {e}", p.display())))?,
        None => {
            use std::io::Write;
            // A closed pipe (e.g. `| head`) is not an error of the experiment.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
        }
    }
    Ok(if pass { PASS } else { INVARIANT })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgets_parse_with_suffixes() {
        assert_eq!(parse_bytes("8G").ok().unwrap(), 8 << 30);
        assert_eq!(parse_bytes("512m").ok().unwrap(), 512 << 20);
        assert_eq!(parse_bytes("1000").ok().unwrap(), 1000);
        assert!(parse_bytes("lots").is_err());
    }

    #[test]
    fn names_are_kebab_case() {
        assert_eq!(Experiment::BAnyonRoundtrip.name(), "b-anyon-roundtrip");
        assert_eq!(Experiment::GFusionStatistics.name(), "g-fusion-statistics");
    }

    #[test]
    fn subgroup_labels_are_bounded() {
        assert!(validate(&Params {
            subgroup: 11,
            ..Params::default()
        })
        .is_err());
        assert!(validate(&Params::default()).is_ok());
    }
}
