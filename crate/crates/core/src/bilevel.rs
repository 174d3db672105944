//! Bi-level optimization of the defender strategy against the fixed-point
//! attacker, single-attacker case.
//!
//! Fixing the marginal coverage pins the attacker's response and the tip
//! probabilities, so optimizing the tip-conditioned strategies at a fixed
//! marginal is a linear program; the outer problem searches the marginal
//! itself over the box-capped budget region with projected numerical
//! ascent. Any strategy returned here realizes its marginal exactly, hence
//! the paired attack distribution is a true fixed point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::levelk::{solve_fixed_point, FixedPointOutcome};
use crate::model::{quantal_response, AttackDistribution, CoverageVector, TargetPayoffs};
use crate::opt::{solve_lp, LinearProgram, LpError};
use crate::routine::solve_routine_with;
use crate::tips;

/// Finite-difference step of the outer gradient estimate.
const GRADIENT_STEP: f64 = 1e-4;
/// Outer ascent stops when no line-search step improves by more than this.
const ASCENT_TOL: f64 = 1e-9;
const MAX_ASCENT_ITERS: usize = 120;

#[derive(Debug, thiserror::Error)]
pub enum BiLevelError {
    #[error("marginal coverage outside the feasible region")]
    InfeasibleMarginal,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Solve(#[from] crate::qri::QriError),
}

/// A tip-conditioned defender plan: the no-tip strategy and one strategy
/// per tipped target.
#[derive(Debug, Clone)]
pub struct TipResponsePlan {
    pub no_tip: CoverageVector,
    pub on_tip: Vec<CoverageVector>,
}

/// Solution of the bi-level program.
#[derive(Debug, Clone)]
pub struct BiLevelSolution {
    pub marginal: CoverageVector,
    pub plan: TipResponsePlan,
    /// Fixed-point attack distribution at the marginal.
    pub attack: AttackDistribution,
    pub def_eu: f64,
    pub outer_iterations: usize,
}

/// Expected number of attacks per target given one tip state: a tip pins
/// the attack on its target; with no tip the posterior attack probability
/// spreads over targets by the attack distribution.
pub fn expected_attack_mass(
    tipped_target: Option<usize>,
    attack: &[f64],
    w: f64,
    attack_prob: f64,
) -> Vec<f64> {
    match tipped_target {
        Some(j) => {
            let mut mass = vec![0.0; attack.len()];
            mass[j] = 1.0;
            mass
        }
        None => {
            let denom = 1.0 - w * attack_prob;
            let posterior = if denom <= 0.0 {
                0.0
            } else {
                (1.0 - w) * attack_prob / denom
            };
            attack.iter().map(|&q| posterior * q).collect()
        }
    }
}

/// Defender expected utility of a fixed plan against a given attack
/// distribution: tip states weighted by their probabilities, attack counts
/// by [`expected_attack_mass`].
pub fn plan_value(
    plan: &TipResponsePlan,
    targets: &[TargetPayoffs],
    w: f64,
    attack_prob: f64,
    attack: &[f64],
) -> f64 {
    let no_tip_prob = 1.0 - w * attack_prob;
    let mut value = 0.0;
    let no_tip_mass = expected_attack_mass(None, attack, w, attack_prob);
    for (i, t) in targets.iter().enumerate() {
        value += no_tip_prob * no_tip_mass[i] * t.defender_utility(plan.no_tip[i]);
    }
    for (j, t) in targets.iter().enumerate() {
        let tip_prob = w * attack_prob * attack[j];
        value += tip_prob * t.defender_utility(plan.on_tip[j][j]);
    }
    value
}

/// The induced marginal of a plan under an attack distribution.
pub fn plan_marginal(
    plan: &TipResponsePlan,
    w: f64,
    attack_prob: f64,
    attack: &[f64],
) -> CoverageVector {
    let n = plan.no_tip.len();
    let no_tip_prob = 1.0 - w * attack_prob;
    let mut marginal = vec![0.0; n];
    for (i, slot) in marginal.iter_mut().enumerate() {
        let mut m = no_tip_prob * plan.no_tip[i];
        for (j, on_tip) in plan.on_tip.iter().enumerate() {
            m += w * attack_prob * attack[j] * on_tip[i];
        }
        *slot = m;
    }
    CoverageVector(marginal)
}

/// Inner level: at a fixed marginal, the attacker response and tip
/// probabilities are constants, so the optimal tip-conditioned plan is the
/// solution of a linear program with marginal-matching equalities, one
/// budget row per tip state, and box bounds. Setting every strategy to the
/// marginal itself is always feasible.
pub fn inner_optimal_plan(
    marginal: &[f64],
    targets: &[TargetPayoffs],
    lambda: f64,
    resources: u32,
    w: f64,
    attack_prob: f64,
) -> Result<(f64, TipResponsePlan, AttackDistribution), BiLevelError> {
    let n = targets.len();
    let budget = resources as f64;
    if marginal.iter().any(|&x| !(-1e-9..=1.0 + 1e-9).contains(&x))
        || marginal.iter().sum::<f64>() > budget + 1e-9
    {
        return Err(BiLevelError::InfeasibleMarginal);
    }
    let attack = quantal_response(marginal, targets, lambda);
    let no_tip_prob = 1.0 - w * attack_prob;

    // Variable layout: block 0 is the no-tip strategy, block j + 1 the
    // response to a tip on target j.
    let vars = n * (n + 1);
    let mut objective = vec![0.0; vars];
    let mut constant = 0.0;
    for i in 0..n {
        // No-tip branch weight: P(no tip) * posterior attack mass.
        objective[i] = (1.0 - w) * attack_prob * attack[i] * targets[i].coverage_gain();
        constant += (1.0 - w) * attack_prob * attack[i] * targets[i].penalty_def;
    }
    for j in 0..n {
        let weight = w * attack_prob * attack[j];
        objective[(j + 1) * n + j] = weight * targets[j].coverage_gain();
        constant += weight * targets[j].penalty_def;
    }

    let mut lp = LinearProgram::new(objective);
    lp.bounds = vec![(0.0, 1.0); vars];
    for i in 0..n {
        let mut row = vec![0.0; vars];
        row[i] = no_tip_prob;
        for j in 0..n {
            row[(j + 1) * n + i] = w * attack_prob * attack[j];
        }
        lp.eq.push((row, marginal[i]));
    }
    for block in 0..=n {
        let mut row = vec![0.0; vars];
        for i in 0..n {
            row[block * n + i] = 1.0;
        }
        lp.le.push((row, budget));
    }

    let sol = solve_lp(&lp)?;
    let plan = TipResponsePlan {
        no_tip: CoverageVector(sol.x[..n].to_vec()),
        on_tip: (0..n)
            .map(|j| CoverageVector(sol.x[(j + 1) * n..(j + 2) * n].to_vec()))
            .collect(),
    };
    Ok((sol.value + constant, plan, attack))
}

/// Euclidean projection onto the outer feasible region
/// `{x in [0, 1]^n : sum x <= r}`.
pub fn project_marginal(x: &[f64], resources: u32) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
    if clipped.iter().sum::<f64>() <= resources as f64 {
        return clipped;
    }
    // Find the shift that makes the clipped sum hit the budget.
    let mut lo = 0.0f64;
    let mut hi = x.iter().cloned().fold(0.0f64, f64::max);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let total: f64 = x.iter().map(|&v| (v - mid).clamp(0.0, 1.0)).sum();
        if total > resources as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let shift = 0.5 * (lo + hi);
    x.iter().map(|&v| (v - shift).clamp(0.0, 1.0)).collect()
}

/// The level-0 reference pair: the routine patrol plus the greedy
/// deterministic tip responses, evaluated against its own fixed-point
/// attacker. Used as the adapted-baseline comparison for the bi-level
/// optimum.
pub fn level0_pair_value(
    targets: &[TargetPayoffs],
    lambda: f64,
    resources: u32,
    w: f64,
    attack_prob: f64,
) -> Result<(f64, TipResponsePlan, FixedPointOutcome), BiLevelError> {
    let n = targets.len();
    let routine = solve_routine_with(targets, lambda, resources, crate::qri::DEFAULT_SEGMENTS)?;
    // A tip on target j leaves no unreported attack mass, so target j
    // carries the only positive gain; remaining resources fall back to the
    // lowest indices.
    let on_tip: Vec<CoverageVector> = (0..n)
        .map(|j| {
            let gains: Vec<f64> = (0..n)
                .map(|i| {
                    tips::expected_gain(&targets[i], usize::from(i == j), routine.attack[i], 0.0)
                })
                .collect();
            let mut x = vec![0.0; n];
            for i in tips::top_targets_by_gain(&gains, resources as usize) {
                x[i] = 1.0;
            }
            CoverageVector(x)
        })
        .collect();
    let plan = TipResponsePlan {
        no_tip: routine.coverage.clone(),
        on_tip,
    };
    let fixed = solve_fixed_point(
        &routine.coverage,
        |q| plan_marginal(&plan, w, attack_prob, q),
        targets,
        lambda,
        0.5,
        1e-9,
        200_000,
    );
    let value = plan_value(&plan, targets, w, attack_prob, &fixed.attack);
    Ok((value, plan, fixed))
}

/// Outer level: multi-start projected ascent with central-difference
/// gradients over the marginal, the inner linear program supplying the
/// objective. Deterministic for a fixed seed; local optimality only.
pub fn outer_optimize(
    targets: &[TargetPayoffs],
    lambda: f64,
    resources: u32,
    w: f64,
    attack_prob: f64,
    restarts: usize,
    seed: u64,
) -> Result<BiLevelSolution, BiLevelError> {
    let n = targets.len();
    let value_at = |x: &[f64]| -> Result<f64, BiLevelError> {
        Ok(inner_optimal_plan(x, targets, lambda, resources, w, attack_prob)?.0)
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    let routine = solve_routine_with(targets, lambda, resources, crate::qri::DEFAULT_SEGMENTS)?;
    starts.push(routine.coverage.0.clone());
    let (_, pair_plan, pair_fixed) = level0_pair_value(targets, lambda, resources, w, attack_prob)?;
    starts.push(project_marginal(
        &plan_marginal(&pair_plan, w, attack_prob, &pair_fixed.attack),
        resources,
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while starts.len() < restarts.max(2) {
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        starts.push(project_marginal(&raw, resources));
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut outer_iterations = 0usize;
    for start in starts {
        let mut x = start;
        let mut value = value_at(&x)?;
        for _ in 0..MAX_ASCENT_ITERS {
            // Central differences on the projected objective.
            let mut gradient = vec![0.0; n];
            for i in 0..n {
                let mut up = x.clone();
                up[i] += GRADIENT_STEP;
                let mut down = x.clone();
                down[i] -= GRADIENT_STEP;
                let up_value = value_at(&project_marginal(&up, resources))?;
                let down_value = value_at(&project_marginal(&down, resources))?;
                gradient[i] = (up_value - down_value) / (2.0 * GRADIENT_STEP);
            }
            let norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm < 1e-12 {
                break;
            }
            let mut step = 0.5;
            let mut improved = false;
            while step > 1e-7 {
                let candidate: Vec<f64> = x
                    .iter()
                    .zip(&gradient)
                    .map(|(&xi, &gi)| xi + step * gi / norm)
                    .collect();
                let candidate = project_marginal(&candidate, resources);
                let candidate_value = value_at(&candidate)?;
                if candidate_value > value + ASCENT_TOL {
                    x = candidate;
                    value = candidate_value;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            outer_iterations += 1;
            if !improved {
                break;
            }
        }
        if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
            best = Some((value, x));
        }
    }

    let (_, marginal) = best.expect("at least one start");
    let (def_eu, plan, attack) =
        inner_optimal_plan(&marginal, targets, lambda, resources, w, attack_prob)?;
    Ok(BiLevelSolution {
        marginal: CoverageVector(marginal),
        plan,
        attack,
        def_eu,
        outer_iterations,
    })
}
