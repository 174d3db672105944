//! Shared optimization machinery: a dense LP solver, a bisection driver on
//! an objective level, and piecewise-linear segmentization with the
//! left-to-right fill patterns used by the structured MILP search.

pub mod bisect;
pub mod lp;
pub mod pwl;

pub use bisect::{bisect_level, BisectError};
pub use lp::{solve_lp, LinearProgram, LpError, LpSolution};
pub use pwl::{fill_order_patterns, FillPattern, PwlApprox};
