//! Named strategies behind the scenario `model` selector.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::output::Output;
use crate::scenario::Scenario;

/// How a finished run is judged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// Solver runs that completed, and validation suites whose checks hold.
    Passed,
    /// A validation check was evaluated and failed.
    Failed,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Precondition violated once the scenario met the solvers.
    #[error("configuration: {0}")]
    Config(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<rashba_core::Error> for RunError {
    fn from(e: rashba_core::Error) -> Self {
        use rashba_core::Error as E;
        match e {
            E::Io(io) => RunError::Io(io),
            E::NonFinite { .. } | E::NonPhysical { .. } | E::StabilityViolation { .. } => RunError::Numerical(e.to_string()),
            other => RunError::Config(other.to_string()),
        }
    }
}

pub trait Runner: Send + Sync {
    /// Selector used in scenario files, e.g. `qdd` or `validate:moyal`.
    fn name(&self) -> &'static str;

    fn about(&self) -> &'static str;

    fn run(&self, scenario: &Scenario, out: &mut Output) -> Result<Status, RunError>;
}

#[derive(Default)]
pub struct Registry {
    runners: BTreeMap<&'static str, Box<dyn Runner>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The shared registry with every built-in runner.
    pub fn builtin() -> &'static Registry {
        static REGISTRY: OnceLock<Registry> = OnceLock::new();
        REGISTRY.get_or_init(|| {
            let mut r = Registry::new();
            crate::runners::register_all(&mut r);
            r
        })
    }

    /// Adds `runner`, replacing any runner already registered under its name.
    pub fn register(&mut self, runner: Box<dyn Runner>) -> Option<Box<dyn Runner>> {
        self.runners.insert(runner.name(), runner)
    }

    pub fn get(&self, name: &str) -> Option<&dyn Runner> {
        self.runners.get(name).map(|r| r.as_ref())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.runners.contains_key(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.runners.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Runner> {
        self.runners.values().map(|r| r.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(&'static str);

    impl Runner for Fixed {
        fn name(&self) -> &'static str {
            self.0
        }

        fn about(&self) -> &'static str {
            "test"
        }

        fn run(&self, _: &Scenario, _: &mut Output) -> Result<Status, RunError> {
            Ok(Status::Passed)
        }
    }

    #[test]
    fn registration_is_by_name() {
        let mut r = Registry::new();
        assert!(r.register(Box::new(Fixed("b"))).is_none());
        assert!(r.register(Box::new(Fixed("a"))).is_none());
        assert!(r.register(Box::new(Fixed("a"))).is_some());
        assert_eq!(r.names(), ["a", "b"]);
        assert!(r.get("c").is_none());
        assert_eq!(r.get("b").unwrap().name(), "b");
    }

    #[test]
    fn builtin_covers_every_selector() {
        let names = Registry::builtin().names();
        for n in [
            "kinetic",
            "qdd",
            "both",
            "validate:pauli",
            "validate:identities",
            "validate:aux",
            "validate:residual",
            "validate:semiclassical",
            "validate:qdd",
            "validate:conservation",
            "validate:diffusion",
            "validate:spin-decay",
            "validate:moyal",
        ] {
            assert!(names.contains(&n), "{n} missing");
        }
    }

    #[test]
    fn core_errors_map_to_exit_classes() {
        let n: RunError = rashba_core::Error::StabilityViolation { dt: 1.0, bound: 0.1 }.into();
        assert!(matches!(n, RunError::Numerical(_)));
        let c: RunError = rashba_core::Error::InvalidParameter("x".into()).into();
        assert!(matches!(c, RunError::Config(_)));
    }
}
