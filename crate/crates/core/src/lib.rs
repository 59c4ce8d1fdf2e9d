//! Constraint solver kernel with solution-counting global constraints and
//! counting-based branching heuristics.

pub mod alldiff;
pub mod bench;
pub mod bounds;
pub mod density;
pub mod domain;
pub mod engine;
pub mod error;
pub mod gcc;
pub mod heuristics;
pub mod knapsack;
pub mod layered;
pub mod oracle;
pub mod regular;
pub mod search;
pub mod sweep;
pub mod symmetric;

pub use density::{DensityTable, VarDensities};
pub use domain::{DomainStore, VarId};
pub use engine::{Consistency, Constraint, Decision, Model, Solver, Status};
pub use error::{Error, Result};
