mod solve;
mod suites;

pub use solve::{output_times, BothRunner, KineticRunner, QddRunner};
pub use suites::{
    AuxSuite, ConservationSuite, DiffusionSuite, IdentitiesSuite, MoyalSuite, PauliSuite, QddSuite, ResidualSuite,
    SemiclassicalSuite, SpinDecaySuite,
};

use crate::registry::{Registry, RunError};

pub fn register_all(r: &mut Registry) {
    r.register(Box::new(KineticRunner));
    r.register(Box::new(QddRunner));
    r.register(Box::new(BothRunner));
    r.register(Box::new(PauliSuite));
    r.register(Box::new(IdentitiesSuite));
    r.register(Box::new(AuxSuite));
    r.register(Box::new(ResidualSuite));
    r.register(Box::new(SemiclassicalSuite));
    r.register(Box::new(QddSuite));
    r.register(Box::new(ConservationSuite));
    r.register(Box::new(DiffusionSuite));
    r.register(Box::new(SpinDecaySuite));
    r.register(Box::new(MoyalSuite));
}

/// Setup failures are configuration errors, whatever the core error kind.
pub(crate) fn precondition<T>(r: rashba_core::Result<T>) -> Result<T, RunError> {
    r.map_err(|e| match e {
        rashba_core::Error::Io(io) => RunError::Io(io),
        other => RunError::Config(other.to_string()),
    })
}
