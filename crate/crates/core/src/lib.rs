pub mod ast;
pub mod lowsem;
pub mod cemit;
pub mod csem;
pub mod lower;
pub mod passes;
pub mod harness;
pub mod cli;
