//! Computable probability measures on Cantor space and the constructions
//! that move measures and randomness along truth-table functionals.
//!
//! Everything is computed with exact dyadic arithmetic. Searches that would
//! need infinite objects are cut off by explicit budgets.

pub mod bernoullize;
pub mod bits;
pub mod budget;
pub mod dyadic;
pub mod error;
pub mod formats;
pub mod functional;
pub mod kautz;
pub mod measure;
pub mod randomness;
pub mod slowdown;
pub mod verify;

pub use bits::Bits;
pub use budget::Budget;
pub use dyadic::{Containment, Dyadic, DyadicInterval};
pub use error::{Error, Result};
pub use functional::TtFunctional;
pub use measure::{Measure, MeasureRef};
pub use kautz::{TransportResult, TransportStatus};
pub use verify::run_suite;
