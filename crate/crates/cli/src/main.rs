use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use rashba_cli::{builtins, exit_code, parse_config, ConfigError, Override, Registry, EXIT_CONFIG};

/// Runs kinetic, drift-diffusion and validation scenarios.
///
/// Exit codes: 0 all checks passed, 1 a check failed, 2 usage, configuration
/// or I/O error, 3 numerical abort.
#[derive(Debug, Parser)]
#[command(name = "rashba", version)]
struct Args {
    /// Scenario file (sectioned TOML).
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,

    /// Name of a built-in scenario (see --list-scenarios).
    #[arg(long)]
    scenario: Option<String>,

    /// Output directory [default: rashba-out/<scenario name>].
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override a scenario key, e.g. --set params.epsilon=0.05. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// List built-in scenarios and registered models, then exit.
    #[arg(long)]
    list_scenarios: bool,

    /// Print the canonical form of the scenario and exit without running.
    #[arg(long)]
    print_config: bool,
}

fn list() {
    println!("built-in scenarios:");
    for (name, _) in builtins::BUILTINS {
        let s = builtins::load(name, &[]).expect("listed").expect("built-ins are valid");
        println!("  {name:<16} {:<24} {}", s.model, s.description);
    }
    println!("models:");
    for r in Registry::builtin().iter() {
        println!("  {:<24} {}", r.name(), r.about());
    }
}

fn fail(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    if args.list_scenarios {
        list();
        return ExitCode::SUCCESS;
    }
    let overrides: Vec<Override> = match args.overrides.iter().map(|s| s.parse()).collect::<Result<_, ConfigError>>() {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let scenario = match (&args.config, &args.scenario) {
        (Some(path), _) => parse_config(path, &overrides),
        (None, Some(name)) => match builtins::load(name, &overrides) {
            Some(r) => r,
            None => return fail(format!("no built-in scenario {name:?}; try --list-scenarios")),
        },
        (None, None) => return fail("one of --config or --scenario is required"),
    };
    let scenario = match scenario {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    if args.print_config {
        print!("{}", scenario.to_canonical());
        return ExitCode::SUCCESS;
    }
    let out = args.out.unwrap_or_else(|| PathBuf::from("rashba-out").join(&scenario.name));
    println!("running {} ({}) into {}", scenario.name, scenario.model, out.display());
    let result = rashba_cli::run(&scenario, &out);
    match &result {
        Ok((status, summary)) => {
            for line in summary {
                println!("  {line}");
            }
            println!("{}", if *status == rashba_cli::Status::Passed { "passed" } else { "FAILED" });
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result))
}
