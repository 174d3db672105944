//! Bisection on an objective level.
//!
//! Drives a monotone feasibility predicate over a level `delta`: feasible
//! at the low end, infeasible at the high end. Used by the PASAQ-style
//! solvers that binary-search the optimal objective value.

/// Iteration cap; with any sane bracket the tolerance is reached far
/// earlier.
pub const MAX_BISECT_ITERS: usize = 200;

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum BisectError<E> {
    #[error("predicate is not bracketing: expected feasible at lo = {0}")]
    InfeasibleAtLo(f64),
    #[error("predicate is not bracketing: expected infeasible at hi = {0}")]
    FeasibleAtHi(f64),
    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error(transparent)]
    Predicate(E),
}

/// Finds the threshold level of a monotone predicate to within `tol`.
///
/// `feasible_at` must be true at `lo` and false at `hi`; the returned level
/// is within `tol` of the true threshold. `lo == hi` returns `lo` without
/// evaluating the predicate.
pub fn bisect_level<E>(
    mut feasible_at: impl FnMut(f64) -> Result<bool, E>,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, BisectError<E>> {
    if lo == hi {
        return Ok(lo);
    }
    if lo.is_nan() || hi.is_nan() || lo >= hi || lo.is_infinite() || hi.is_infinite() {
        return Err(BisectError::InvalidBracket { lo, hi });
    }
    if !feasible_at(lo).map_err(BisectError::Predicate)? {
        return Err(BisectError::InfeasibleAtLo(lo));
    }
    if feasible_at(hi).map_err(BisectError::Predicate)? {
        return Err(BisectError::FeasibleAtHi(hi));
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..MAX_BISECT_ITERS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible_at(mid).map_err(BisectError::Predicate)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
