use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use muskat_core::solver::CrossFlux;
use muskat_core::support::{fit_growth_exponent, GrowthFit, SupportSample, SupportTrace};
use muskat_harness::config::ScenarioConfig;
use muskat_harness::error::Result;
use muskat_harness::suite::{run_suite, Level, SuiteOptions};
use muskat_harness::{output, scenario, sweep, HarnessError, Status};

#[derive(Parser)]
#[command(
    name = "muskat",
    version,
    about = "Thin-film Muskat simulator and verification suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed; overrides the one in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its CSV and JSON artifacts.
    Simulate(Common),
    /// Run the verification suite.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        level: Option<Level>,
        /// Use centered cross-term face values (fault injection).
        #[arg(long, value_parser = parse_cross_flux)]
        cross_flux: Option<CrossFlux>,
    },
    /// Run a scenario once per value of a swept key.
    Sweep(Common),
    /// Fit support-growth exponents to a support CSV.
    Fit(Common),
}

fn parse_cross_flux(s: &str) -> std::result::Result<CrossFlux, String> {
    match s {
        "upwind" => Ok(CrossFlux::Upwind),
        "centered" => Ok(CrossFlux::Centered),
        _ => Err(format!("expected `upwind` or `centered`, got `{s}`")),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

fn required(c: &Common) -> Result<&Path> {
    c.config
        .as_deref()
        .ok_or_else(|| HarnessError::config(None, "--config is required for this command"))
}

fn simulate(c: &Common) -> Result<Status> {
    let path = required(c)?;
    let (mut cfg, text) = ScenarioConfig::from_file(path)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let prep = cfg.prepare(&text).map_err(|e| e.in_file(path))?;
    let out = c
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let summary = scenario::run_scenario(&prep, &out)?;
    for g in summary.gates.iter().filter(|g| !g.pass) {
        eprintln!(
            "FAIL {}: value {:e}, bound {:e}",
            g.name, g.measured, g.bound
        );
    }
    if let Some(e) = &summary.error {
        eprintln!("run stopped: {e}");
    }
    Ok(summary.status())
}

fn verify(c: &Common, level: Option<Level>, cross_flux: Option<CrossFlux>) -> Result<Status> {
    let mut opts = match &c.config {
        Some(path) => {
            let text = read(path)?;
            toml::from_str::<SuiteOptions>(&text).map_err(|e| {
                let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
                HarnessError::config(line, e.message().trim().to_string()).in_file(path)
            })?
        }
        None => SuiteOptions::default(),
    };
    if let Some(l) = level {
        opts.level = l;
    }
    if let Some(s) = c.seed {
        opts.seed = s;
    }
    if let Some(x) = cross_flux {
        opts.cross_flux = x;
    }
    let run = run_suite(&opts);
    for check in &run.summary.checks {
        let verdict = if check.pass { "PASS" } else { "FAIL" };
        println!("{verdict} [{}] {}", check.key, check.title);
        for g in check.gates.iter().filter(|g| !g.pass) {
            println!(
                "    failing gate {}: value {:e}, bound {:e}",
                g.name, g.measured, g.bound
            );
        }
    }
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    output::ensure_dir(&out)?;
    output::write_json(&out.join("verify.json"), &run.summary)?;
    Ok(Status::from_pass(run.summary.pass))
}

fn run_sweep(c: &Common) -> Result<Status> {
    let path = required(c)?;
    let text = read(path)?;
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let summary = sweep::run_sweep(&text, &out, c.seed).map_err(|e| e.in_file(path))?;
    for case in &summary.cases {
        let verdict = if case.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {} = {} -> {}",
            summary.key,
            case.value,
            case.dir.display()
        );
    }
    Ok(summary.status())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitFile {
    fit: FitSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitSpec {
    /// Support CSV, relative to the configuration file.
    trace: PathBuf,
    #[serde(default)]
    b0: f64,
    window: [f64; 2],
    /// Added to every trace time before fitting.
    #[serde(default)]
    time_offset: f64,
}

#[derive(Debug, Serialize)]
struct FitOutput {
    trace: PathBuf,
    b0: f64,
    window: [f64; 2],
    time_offset: f64,
    fit: GrowthFit,
}

fn fit(c: &Common) -> Result<Status> {
    let path = required(c)?;
    let text = read(path)?;
    let file: FitFile = toml::from_str(&text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
        HarnessError::config(line, e.message().trim().to_string()).in_file(path)
    })?;
    let spec = file.fit;
    let trace_path = path.parent().unwrap_or(Path::new(".")).join(&spec.trace);
    let rows = output::read_support(&trace_path)?;
    let mut trace = SupportTrace::new(0.0);
    for (t, total) in rows {
        trace.push(SupportSample {
            t: t + spec.time_offset,
            total,
            f: None,
            g: None,
        });
    }
    let fit =
        fit_growth_exponent(&trace, spec.b0, (spec.window[0], spec.window[1])).map_err(|e| {
            HarnessError::config(
                muskat_harness::config::locate(&text, "fit", "window"),
                e.to_string(),
            )
            .in_file(path)
        })?;
    for (side, pf) in [("right", fit.right), ("left", fit.left)] {
        match pf {
            Some(p) => println!("{side}: exponent {:.6}", p.exponent),
            None => println!("{side}: no fit"),
        }
    }
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    output::ensure_dir(&out)?;
    output::write_json(
        &out.join("fit.json"),
        &FitOutput {
            trace: spec.trace,
            b0: spec.b0,
            window: spec.window,
            time_offset: spec.time_offset,
            fit,
        },
    )?;
    Ok(Status::Pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Verify {
            common,
            level,
            cross_flux,
        } => verify(common, *level, *cross_flux),
        Command::Sweep(c) => run_sweep(c),
        Command::Fit(c) => fit(c),
    };
    match result {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status().code() as u8)
        }
    }
}
