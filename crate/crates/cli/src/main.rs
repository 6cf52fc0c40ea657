use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use ehrenfest_core::experiments::{preset_scenario, Check, BOOST_VELOCITY};
use ehrenfest_core::{
    check, covariance_error, experiment, run_scenario, Error, Model, Scenario, PRESETS, SCHEMA,
};

/// Covariance bound used by `boost-test`.
const COVARIANCE_BOUND: f64 = 1e-6;

#[derive(Parser)]
#[command(
    name = "ehrenfest",
    version,
    about = "Pseudo-spectral wavepacket simulator for testing the Ehrenfest theorem"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario document and write <out>/<name>.csv plus a JSON report
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a preset and evaluate its pass criteria
    Experiment {
        preset: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every preset; exits nonzero if any fails
    Check {
        #[arg(long)]
        out: PathBuf,
    },
    /// Galilean covariance error of one model on the boost-check packet
    BoostTest {
        #[arg(long, value_enum)]
        model: ModelTag,
        #[arg(long, default_value_t = BOOST_VELOCITY, allow_negative_numbers = true)]
        dv: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelTag {
    Linear,
    /// g = 1, exponent 1
    DensityFunctional,
    /// lambda = 0.3
    DoebnerGoldin,
}

impl ModelTag {
    fn model(self, mass: f64) -> Model {
        match self {
            ModelTag::Linear => Model::linear(mass),
            ModelTag::DensityFunctional => Model::gross_pitaevskii(mass, 1.0),
            ModelTag::DoebnerGoldin => Model::doebner_goldin(mass, 0.3),
        }
    }
}

/// A failed command: 1 for a failed run or criterion, 2 for bad input.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::UnknownPreset { .. }
            | Error::InvalidParameter(_)
            | Error::InvalidGridSize(_)
            | Error::InvalidLength(_)
            | Error::AliasedMode { .. }
            | Error::BoundaryClearance { .. }
            | Error::StabilityGuard { .. }
            | Error::SplitStepUnsupported
            | Error::BoostWithPotential => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn help_epilogue() -> String {
    let mut text = String::from("Presets:\n");
    for p in &PRESETS {
        text.push_str(&format!(
            "  {:<17} [{}] {}\n",
            p.name, p.criterion, p.summary
        ));
    }
    text
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!(
            "  [{}] {}: {:.3e} {} {:.3e}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.measured,
            c.comparison.symbol(),
            c.bound
        );
    }
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run(config: &Path, out: &Path) -> Result<bool, Failure> {
    let text = fs::read_to_string(config)
        .map_err(|e| Failure::usage(format!("{}: {e}", config.display())))?;
    let scenario = Scenario::parse(&text)?;
    let outcome = run_scenario(&scenario);
    for path in outcome.write(out)? {
        println!("wrote {}", path.display());
    }
    let report = &outcome.report;
    println!("{}: {}", report.scenario, verdict(report.passed));
    print_checks(&report.checks);
    if let Some(e) = &report.error {
        println!("  error: {e}");
    }
    Ok(report.passed)
}

fn run_preset(name: &str, out: &Path) -> Result<bool, Failure> {
    let outcome = experiment(name, out)?;
    let report = &outcome.report;
    println!(
        "{} (criterion {}): {}",
        report.preset,
        report.criterion,
        verdict(report.passed)
    );
    print_checks(&report.checks);
    if let Some(e) = &report.error {
        println!("  error: {e}");
    }
    Ok(report.passed)
}

fn run_check(out: &Path) -> Result<bool, Failure> {
    let (summary, _) = check(Some(out))?;
    for p in &summary.presets {
        println!(
            "criterion {} ({}): {}",
            p.criterion,
            p.preset,
            verdict(p.passed)
        );
    }
    println!("wrote {}", out.join("check.json").display());
    Ok(summary.passed)
}

fn boost_test(tag: ModelTag, dv: f64) -> Result<bool, Failure> {
    if !dv.is_finite() {
        return Err(Failure::usage(format!("--dv must be finite, got {dv}")));
    }
    let s = preset_scenario("boost-check")?;
    let model = tag.model(s.model.mass);
    let horizon = s.stepper.t_final;
    let err = covariance_error(
        &model,
        &s.potential,
        &s.initial_state()?,
        dv,
        horizon,
        &s.stepper,
    )?;
    let passed = err <= COVARIANCE_BOUND;
    println!(
        "{} dv = {dv} T = {horizon}: covariance error {err:.3e} <= {COVARIANCE_BOUND:.0e}: {}",
        model.tag(),
        verdict(passed)
    );
    Ok(passed)
}

fn main() -> ExitCode {
    let epilogue = help_epilogue();
    let command = Cli::command()
        .after_help(format!(
            "{epilogue}\nRun with --help for the config schema."
        ))
        .after_long_help(format!("{epilogue}\nConfig schema (TOML):\n\n{SCHEMA}"));
    let cli = match Cli::from_arg_matches(&command.get_matches()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Run { config, out } => run(&config, &out),
        Command::Experiment { preset, out } => run_preset(&preset, &out),
        Command::Check { out } => run_check(&out),
        Command::BoostTest { model, dv } => boost_test(model, dv),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
