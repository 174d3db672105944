//! Iterated attacker reasoning: the defender's induced marginal coverage
//! under a tip-conditioned strategy, level-by-level quantal-response
//! updates, the contraction condition that guarantees their convergence,
//! and a damped solver for the fixed-point (level-infinity) attacker.

use crate::eval::{binomial, dp_cover_prob, EvalError};
use crate::model::{
    quantal_response, AttackDistribution, CoverageVector, GameInstance, ModelError, TargetPayoffs,
};
use crate::tips::RecruitView;

/// Residual threshold below which the level iteration is called converged.
pub const LEVEL_CONVERGENCE_TOL: f64 = 1e-8;

/// A cycle is only declared while the consecutive residual is above this
/// floor. Slowly converging sequences with a negative contraction slope
/// alternate around their limit, which makes iterates two levels apart
/// nearly equal long before the sequence settles; a genuine limit cycle
/// keeps a macroscopic diameter.
pub const CYCLE_RESIDUAL_FLOOR: f64 = 1e-4;

/// The trajectory of a level iteration.
#[derive(Debug, Clone)]
pub struct LevelTrace {
    /// Attack distributions by level, starting at level 0.
    pub attack_seq: Vec<AttackDistribution>,
    /// Induced marginals; `marginal_seq[k]` produced `attack_seq[k + 1]`.
    pub marginal_seq: Vec<CoverageVector>,
    pub converged: bool,
    /// Final L1 distance between consecutive levels.
    pub residual: f64,
    /// The last two iterates when a short cycle was detected.
    pub cycle: Option<(AttackDistribution, AttackDistribution)>,
}

/// Induced marginal coverage in the single-attacker case: with
/// probability `tip_prob` the attack is reported and the defender plays
/// the strategy for the tipped target, otherwise the routine patrol.
/// `tip_prob` is the joint probability that an attack happens and gets
/// reported (`w` itself when the attacker attacks surely).
pub fn marginal_strategy_single(
    routine: &[f64],
    tip_strategies: &[CoverageVector],
    tip_prob: f64,
    attack: &[f64],
) -> Result<CoverageVector, ModelError> {
    let n = routine.len();
    if tip_strategies.len() != n || attack.len() != n {
        return Err(ModelError::DimensionMismatch {
            expected: n,
            got: tip_strategies.len().max(attack.len()),
        });
    }
    for strategy in tip_strategies {
        if strategy.len() != n {
            return Err(ModelError::DimensionMismatch {
                expected: n,
                got: strategy.len(),
            });
        }
    }
    let mut marginal = vec![0.0; n];
    for (i, slot) in marginal.iter_mut().enumerate() {
        let mut value = (1.0 - tip_prob) * routine[i];
        for (j, strategy) in tip_strategies.iter().enumerate() {
            value += tip_prob * attack[j] * strategy[i];
        }
        *slot = value;
    }
    Ok(CoverageVector(marginal))
}

/// Induced marginal coverage in the general multi-attacker case, under the
/// greedy tip response: enumerates reported sets and reuses the coverage
/// dynamic program for the per-target coverage probability.
pub fn marginal_strategy_general(
    inst: &GameInstance,
    view: &RecruitView,
    routine: &[f64],
    attack: &AttackDistribution,
) -> Result<CoverageVector, EvalError> {
    let m = view.reachable.len();
    if m > crate::eval::EXACT_ENUMERATION_GUARD {
        return Err(EvalError::TooManyReachable(m));
    }
    let n = inst.num_targets();
    let r = inst.resources as usize;
    let hit: Vec<f64> = view
        .reachable
        .iter()
        .map(|&v| view.report_prob[v] * inst.graph.attackers[v].attack_prob)
        .collect();
    let mut marginal = vec![0.0; n];
    for mask in 0u64..(1 << m) {
        let mut prob = 1.0;
        for (pos, &h) in hit.iter().enumerate() {
            prob *= if mask & (1 << pos) != 0 { h } else { 1.0 - h };
            if prob == 0.0 {
                break;
            }
        }
        if prob == 0.0 {
            continue;
        }
        let reported: Vec<usize> = (0..m)
            .filter(|pos| mask & (1 << pos) != 0)
            .map(|pos| view.reachable[pos])
            .collect();
        if reported.is_empty() {
            for i in 0..n {
                marginal[i] += prob * routine[i];
            }
            continue;
        }
        let total = reported.len();
        let mass = crate::tips::unreported_attack_mass(inst, view, &reported);
        for i in 0..n {
            let qi = attack[i];
            let mut covered = 0.0;
            for t in 0..=total {
                covered += binomial(total, t)
                    * qi.powi(t as i32)
                    * dp_cover_prob(i, t, total, mass, attack, &inst.targets, r);
            }
            marginal[i] += prob * covered;
        }
    }
    Ok(CoverageVector(marginal))
}

/// Runs the level iteration from the quantal response to the routine
/// patrol, applying `marginal` to climb one level at a time. Stops on
/// convergence, on detection of a cycle with period at most
/// `cycle_window`, or at `max_level`.
pub fn iterate_levels(
    routine: &[f64],
    mut marginal: impl FnMut(&AttackDistribution) -> CoverageVector,
    targets: &[TargetPayoffs],
    lambda: f64,
    max_level: usize,
    cycle_window: usize,
) -> LevelTrace {
    let mut attack_seq = vec![quantal_response(routine, targets, lambda)];
    let mut marginal_seq = Vec::new();
    let mut residual = f64::INFINITY;
    for _ in 0..max_level {
        let induced = marginal(attack_seq.last().unwrap());
        let next = quantal_response(&induced, targets, lambda);
        marginal_seq.push(induced);
        residual = next.l1_distance(attack_seq.last().unwrap());
        attack_seq.push(next);
        if residual < LEVEL_CONVERGENCE_TOL {
            return LevelTrace {
                attack_seq,
                marginal_seq,
                converged: true,
                residual,
                cycle: None,
            };
        }
        let len = attack_seq.len();
        for period in 2..=cycle_window.min(len - 1) {
            let dist = attack_seq[len - 1].l1_distance(&attack_seq[len - 1 - period]);
            if dist < LEVEL_CONVERGENCE_TOL && residual > CYCLE_RESIDUAL_FLOOR {
                let cycle = Some((attack_seq[len - 2].clone(), attack_seq[len - 1].clone()));
                return LevelTrace {
                    attack_seq,
                    marginal_seq,
                    converged: false,
                    residual,
                    cycle,
                };
            }
        }
    }
    LevelTrace {
        attack_seq,
        marginal_seq,
        converged: false,
        residual,
        cycle: None,
    }
}

/// Level iteration for the single-attacker setup.
pub fn iterate_levels_single(
    routine: &[f64],
    tip_strategies: &[CoverageVector],
    tip_prob: f64,
    targets: &[TargetPayoffs],
    lambda: f64,
    max_level: usize,
    cycle_window: usize,
) -> Result<LevelTrace, ModelError> {
    // Validate dimensions once up front; the closure then cannot fail.
    marginal_strategy_single(routine, tip_strategies, tip_prob, &vec![0.0; routine.len()])?;
    Ok(iterate_levels(
        routine,
        |attack| {
            marginal_strategy_single(routine, tip_strategies, tip_prob, attack)
                .expect("dimensions validated")
        },
        targets,
        lambda,
        max_level,
        cycle_window,
    ))
}

/// Per-target outcome of the contraction condition.
#[derive(Debug, Clone)]
pub struct ContractionMargin {
    pub target: usize,
    /// Largest coverage of this target over all tip strategies.
    pub max_tip_coverage: f64,
    /// Admissible bound `L / (n lambda (Ra - Pa))`.
    pub threshold: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct ContractionReport {
    pub pass: bool,
    pub margins: Vec<ContractionMargin>,
}

/// Checks the sufficient condition under which the level update is an
/// `L`-contraction in L1, hence levels converge: every target's maximal
/// tip coverage must stay below `L / (n lambda (Ra - Pa))`.
pub fn contraction_check(
    tip_strategies: &[CoverageVector],
    targets: &[TargetPayoffs],
    lambda: f64,
    contraction_factor: f64,
) -> ContractionReport {
    assert!(
        (0.0..1.0).contains(&contraction_factor),
        "contraction factor must lie in [0, 1)"
    );
    let n = targets.len();
    let margins: Vec<ContractionMargin> = (0..n)
        .map(|i| {
            let max_tip_coverage = tip_strategies.iter().map(|s| s[i]).fold(0.0f64, f64::max);
            let spread = targets[i].reward_att - targets[i].penalty_att;
            let threshold = if lambda > 0.0 {
                contraction_factor / (n as f64 * lambda * spread)
            } else {
                f64::INFINITY
            };
            ContractionMargin {
                target: i,
                max_tip_coverage,
                threshold,
                ok: max_tip_coverage <= threshold,
            }
        })
        .collect();
    ContractionReport {
        pass: margins.iter().all(|m| m.ok),
        margins,
    }
}

/// Result of the damped fixed-point solve.
#[derive(Debug, Clone)]
pub struct FixedPointOutcome {
    pub attack: AttackDistribution,
    /// L1 distance between the returned point and its one-step update;
    /// re-substitution certifies the fixed-point property.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `q = QR(marginal(q))` by damped iteration from the level-0
/// response, halving the damping factor whenever the residual grows.
/// Existence is guaranteed on the capped simplex; uniqueness is not, so
/// the returned point is the one reached from level 0.
pub fn solve_fixed_point(
    routine: &[f64],
    mut marginal: impl FnMut(&AttackDistribution) -> CoverageVector,
    targets: &[TargetPayoffs],
    lambda: f64,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> FixedPointOutcome {
    assert!(damping > 0.0 && damping <= 1.0);
    let mut step = damping;
    let mut current = quantal_response(routine, targets, lambda);
    let mut best = current.clone();
    let mut best_residual = f64::INFINITY;
    let mut last_residual = f64::INFINITY;
    for iteration in 0..max_iter {
        let image = quantal_response(&marginal(&current), targets, lambda);
        let residual = image.l1_distance(&current);
        if residual < best_residual {
            best_residual = residual;
            best = current.clone();
        }
        if residual <= tol {
            return FixedPointOutcome {
                attack: current,
                residual,
                iterations: iteration,
                converged: true,
            };
        }
        if residual > last_residual {
            step *= 0.5;
        }
        last_residual = residual;
        let blended: Vec<f64> = current
            .iter()
            .zip(image.iter())
            .map(|(&a, &b)| (1.0 - step) * a + step * b)
            .collect();
        current = AttackDistribution(blended);
    }
    FixedPointOutcome {
        attack: best,
        residual: best_residual,
        iterations: max_iter,
        converged: false,
    }
}
