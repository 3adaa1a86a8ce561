//! Theorem checks on random instances and the example corpus.

pub mod fixtures;
pub mod generators;
pub mod suites;

pub use fixtures::{run_fixtures, Fixture, FixtureReport};
pub use generators::{generate, GeneratorKind, GeneratorSpec};
pub use suites::{run_all, run_suite, SuiteReport, SUITES};
