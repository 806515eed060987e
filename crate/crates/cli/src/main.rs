use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use foliate_cli::report::Format;
use foliate_cli::scenario::Stage;
use foliate_cli::{emit_report, parse_scenario, run_scenario};

const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "foliate", version, about = "Vanishing cycles, Melnikov functions and holonomy of df + eps*omega")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stages listed in the scenario.
    Analyze(Common),
    /// Periods and numeric monodromy.
    Periods(Common),
    /// First and second Melnikov functions.
    Melnikov(Common),
    /// Holonomy maps and fitted Melnikov coefficients.
    Holonomy(Common),
    /// Every stage, ending with the theorem verdict.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; reports go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json, csv-bundle or text.
    #[arg(long, default_value = "json")]
    format: String,
    /// Stages to run (with their prerequisites); comma-separated or repeated.
    #[arg(long, value_delimiter = ',')]
    stage: Vec<String>,
    /// Multiplies every accuracy tolerance.
    #[arg(long)]
    tol_scale: Option<f64>,
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("config error:\n{msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, implied): (&Common, &[Stage]) = match &cli.command {
        Command::Analyze(c) => (c, &[]),
        Command::Periods(c) => (c, &[Stage::Periods]),
        Command::Melnikov(c) => (c, &[Stage::Melnikov]),
        Command::Holonomy(c) => (c, &[Stage::Holonomy]),
        Command::Verify(c) => (c, &Stage::ALL),
    };
    let Some(format) = Format::parse(&common.format) else {
        return config_error(format!("unknown format `{}`", common.format));
    };
    let text = match fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => return config_error(format!("{}: {e}", common.config.display())),
    };
    let mut scenario = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    let mut stages = Vec::new();
    for name in &common.stage {
        match Stage::parse(name) {
            Some(s) => stages.push(s),
            None => return config_error(format!("unknown stage `{name}`")),
        }
    }
    stages.extend_from_slice(implied);
    if !stages.is_empty() {
        scenario = scenario.with_stages(&stages);
    }
    if let Some(k) = common.tol_scale {
        if !(k.is_finite() && k > 0.0) {
            return config_error("--tol-scale must be positive");
        }
        scenario = scenario.with_tolerance_scale(k);
    }
    let out_dir = common.out.clone().or_else(|| scenario.output.clone());
    if format == Format::CsvBundle && out_dir.is_none() {
        return config_error("csv-bundle needs an output directory");
    }

    let report = run_scenario(&scenario);
    let files = emit_report(&report, format);
    match out_dir {
        Some(dir) => {
            if let Err(e) = fs::create_dir_all(&dir) {
                eprintln!("{}: {e}", dir.display());
                return ExitCode::from(2);
            }
            for (name, body) in files {
                if let Err(e) = fs::write(dir.join(&name), body) {
                    eprintln!("{name}: {e}");
                    return ExitCode::from(2);
                }
            }
        }
        None => {
            for (_, body) in files {
                print!("{body}");
            }
        }
    }
    if let Some(v) = report.verdict() {
        eprintln!("verdict: {v:?}");
    }
    ExitCode::from(report.exit_code() as u8)
}
