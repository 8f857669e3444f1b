//! Scenarios shipped with the binary, one per acceptance check plus demos.

use crate::scenario::{parse_str, ConfigError, Override, Scenario};

pub const BUILTINS: &[(&str, &str)] = &[
    ("pauli", include_str!("../scenarios/pauli.toml")),
    ("identities", include_str!("../scenarios/identities.toml")),
    ("aux", include_str!("../scenarios/aux.toml")),
    ("residual", include_str!("../scenarios/residual.toml")),
    ("semiclassical", include_str!("../scenarios/semiclassical.toml")),
    ("qdd-regressions", include_str!("../scenarios/qdd-regressions.toml")),
    ("heat-kernel", include_str!("../scenarios/heat-kernel.toml")),
    ("conservation", include_str!("../scenarios/conservation.toml")),
    ("diffusion", include_str!("../scenarios/diffusion.toml")),
    ("spin-decay", include_str!("../scenarios/spin-decay.toml")),
    ("moyal", include_str!("../scenarios/moyal.toml")),
    ("kinetic", include_str!("../scenarios/kinetic.toml")),
    ("both", include_str!("../scenarios/both.toml")),
];

pub fn source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str, overrides: &[Override]) -> Option<Result<Scenario, ConfigError>> {
    source(name).map(|src| parse_str(src, &format!("built-in scenario {name}"), overrides))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_parses_and_keeps_its_name() {
        for (name, _) in BUILTINS {
            let s = load(name, &[]).unwrap().unwrap();
            assert_eq!(&s.name, name);
            assert!(!s.description.is_empty());
            let g = s.build_grid().unwrap();
            s.build_potential(&g).unwrap();
            s.build_initial(&g).unwrap();
        }
    }

    #[test]
    fn every_runner_has_a_builtin() {
        let models: Vec<String> = BUILTINS.iter().map(|(n, _)| load(n, &[]).unwrap().unwrap().model).collect();
        for name in crate::Registry::builtin().names() {
            assert!(models.iter().any(|m| m == name), "{name} has no built-in scenario");
        }
    }
}
