//! `realmask` — runs the masking experiments and writes JSON/CSV reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use realmask::experiment::{
    run_angles, run_equivalence, run_fig3, run_fig4, run_fig5, to_json, ExperimentConfig, ExperimentKind,
};
use realmask::measure::Setting;
use realmask::optics::MeasSetting;
use realmask::walk::{masking_schedule, WalkSchedule};

#[derive(Parser, Debug)]
#[command(name = "realmask", version, about = "Quantum-walk masking of real ququart states")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML file with config keys; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots per measurement setting.
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Number of verification tests per probe.
    #[arg(long, global = true)]
    qsv_tests: Option<u64>,
    /// Depolarizing weight applied to the masked state.
    #[arg(long, global = true)]
    noise_p: Option<f64>,
    /// Comma-separated phases in degrees.
    #[arg(long, global = true, value_delimiter = ',')]
    phi_grid: Option<Vec<f64>>,
    /// Use exact probabilities instead of sampled counts.
    #[arg(long, global = true)]
    analytic: bool,
    /// Output directory; reports go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Walk schedule JSON (equiv only); defaults to the built-in masking schedule.
    #[arg(long, global = true)]
    schedule: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Verification fidelities and reduced purities of the four masked probes.
    Fig3,
    /// Correlation-matrix decoding of the fourth probe.
    Fig4,
    /// Concurrence versus preparation phase.
    Fig5,
    /// Check walk, masker and optical simulation agree.
    Equiv,
    /// Waveplate angles for a preparation target and/or measurement basis.
    Angles(AnglesArgs),
}

#[derive(Args, Debug)]
struct AnglesArgs {
    /// Real amplitudes a0,a1,a2,a3 (normalized automatically).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    amplitudes: Option<Vec<f64>>,
    /// Relative phase of the two-path preparation, degrees.
    #[arg(long)]
    phi_deg: Option<f64>,
    /// Pauli pair such as `XY`, or `basis:gamma:zeta:alpha:beta` in radians.
    #[arg(long)]
    setting: Option<String>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    shots_per_setting: Option<u64>,
    qsv_tests: Option<u64>,
    noise_p: Option<f64>,
    phi_grid: Option<Vec<f64>>,
    analytic: Option<bool>,
    output_path: Option<String>,
    schedule: Option<String>,
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Fig3 => ExperimentKind::Fig3,
            Command::Fig4 => ExperimentKind::Fig4,
            Command::Fig5 => ExperimentKind::Fig5,
            Command::Equiv => ExperimentKind::VerifyEquivalence,
            Command::Angles(_) => ExperimentKind::Angles,
        }
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Flags > config file > defaults.
fn resolve(kind: ExperimentKind, common: &Common, file: &FileConfig) -> Result<ExperimentConfig> {
    let d = ExperimentConfig::defaults(kind);
    let cfg = ExperimentConfig {
        experiment: kind,
        seed: common.seed.or(file.seed).unwrap_or(d.seed),
        shots_per_setting: common.shots.or(file.shots_per_setting).unwrap_or(d.shots_per_setting),
        qsv_tests: common.qsv_tests.or(file.qsv_tests).unwrap_or(d.qsv_tests),
        noise_p: common.noise_p.or(file.noise_p).unwrap_or(d.noise_p),
        phi_grid: common.phi_grid.clone().or_else(|| file.phi_grid.clone()).unwrap_or(d.phi_grid),
        output_path: common
            .out
            .as_ref()
            .map(|p| p.display().to_string())
            .or_else(|| file.output_path.clone()),
        analytic: common.analytic || file.analytic.unwrap_or(d.analytic),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_setting(s: &str) -> Result<MeasSetting> {
    Ok(match s.parse::<Setting>()? {
        Setting::Pair(p) => MeasSetting::pauli(p.first, p.second),
        Setting::Product(m) => m,
        Setting::Local(..) => bail!("setting '{s}' is single-qubit; give a Pauli pair or basis:g:z:a:b"),
    })
}

fn normalized(v: &[f64]) -> Result<[f64; 4]> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if v.len() != 4 || norm == 0.0 {
        bail!("--amplitudes needs four values, not all zero");
    }
    Ok([v[0] / norm, v[1] / norm, v[2] / norm, v[3] / norm])
}

struct Emitted {
    json: String,
    csv: Option<String>,
}

fn emit(name: &str, out: Option<&str>, e: &Emitted) -> Result<()> {
    match out {
        None => print!("{}", e.json),
        Some(dir) => {
            let dir = Path::new(dir);
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join(format!("{name}.json")), &e.json)?;
            if let Some(csv) = &e.csv {
                fs::write(dir.join(format!("{name}.csv")), csv)?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let file = load_file_config(cli.common.config.as_deref())?;
    let kind = cli.command.kind();
    let cfg = resolve(kind, &cli.common, &file)?;
    let mut ok = true;
    let emitted = match &cli.command {
        Command::Fig3 => {
            let r = run_fig3(&cfg)?;
            Emitted { json: to_json(&r)?, csv: Some(r.to_csv()) }
        }
        Command::Fig4 => {
            let r = run_fig4(&cfg)?;
            Emitted { json: to_json(&r)?, csv: Some(r.to_csv()) }
        }
        Command::Fig5 => {
            let r = run_fig5(&cfg)?;
            Emitted { json: to_json(&r)?, csv: Some(r.to_csv()) }
        }
        Command::Equiv => {
            let path = cli.common.schedule.clone().or_else(|| file.schedule.as_ref().map(PathBuf::from));
            let schedule = match path {
                Some(p) => WalkSchedule::load(&p).with_context(|| format!("loading schedule {}", p.display()))?,
                None => masking_schedule(),
            };
            let r = run_equivalence(&cfg, &schedule)?;
            ok = r.passed;
            Emitted { json: to_json(&r)?, csv: None }
        }
        Command::Angles(a) => {
            if a.amplitudes.is_none() && a.phi_deg.is_none() && a.setting.is_none() {
                bail!("angles needs at least one of --amplitudes, --phi-deg, --setting");
            }
            let amps = a.amplitudes.as_deref().map(normalized).transpose()?;
            let setting = a.setting.as_deref().map(parse_setting).transpose()?;
            let r = run_angles(amps, a.phi_deg, setting, cfg.seed)?;
            Emitted { json: to_json(&r)?, csv: None }
        }
    };
    emit(kind.name(), cfg.output_path.as_deref(), &emitted)?;
    if !ok {
        eprintln!("{}: check failed", kind.name());
    }
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
