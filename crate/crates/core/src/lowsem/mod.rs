//! λow*: type checker and trace-emitting small-step interpreter.

mod machine;
mod typecheck;

pub use machine::{run_config, run_low, step_low, subst, LBlock, LConfig, LFrame, LStep, LStuck, LowCode, DEFAULT_FUEL};
pub use typecheck::{typecheck, typecheck_entry, ElaboratedLProgram, TypeEnv, TypeError};

#[cfg(test)]
mod tests;
