//! Scenario runner for the Rashba spin transport solvers.

pub mod builtins;
pub mod output;
pub mod registry;
pub mod runners;
pub mod scenario;

use std::path::Path;

pub use registry::{Registry, RunError, Runner, Status};
pub use scenario::{parse_config, parse_str, ConfigError, Override, Scenario};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Runs `scenario` into `out_dir`. The manifest is written before the solver
/// starts and rewritten with the outcome afterwards, also on failure.
pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<(Status, Vec<String>), RunError> {
    let runner = Registry::builtin()
        .get(&scenario.model)
        .ok_or_else(|| RunError::Config(format!("unknown model {:?}", scenario.model)))?;
    let mut out = output::Output::create(out_dir, scenario)?;
    let result = runner.run(scenario, &mut out);
    let (status, message) = match &result {
        Ok(Status::Passed) => ("passed", None),
        Ok(Status::Failed) => ("failed", None),
        Err(RunError::Numerical(m)) => ("aborted", Some(m.clone())),
        Err(e) => ("error", Some(e.to_string())),
    };
    if let Some(m) = &message {
        out.note(format!("{status}: {m}"));
    }
    out.finish(status, message.as_deref())?;
    result.map(|s| (s, out.summary().to_vec()))
}

pub fn exit_code(result: &Result<(Status, Vec<String>), RunError>) -> u8 {
    match result {
        Ok((Status::Passed, _)) => EXIT_PASS,
        Ok((Status::Failed, _)) => EXIT_CHECK_FAILED,
        Err(RunError::Numerical(_)) => EXIT_NUMERICAL,
        Err(RunError::Config(_) | RunError::Io(_)) => EXIT_CONFIG,
    }
}
