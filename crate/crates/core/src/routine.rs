//! Routine patrol: the coverage vector that is optimal against plain
//! quantal response when no tips arrive, and the per-attack utilities
//! built from it.

use crate::model::{
    quantal_response, AttackDistribution, CoverageVector, GameInstance, TargetPayoffs,
};
use crate::qri::{self, QriError};

/// The optimal no-tip patrol with its induced attack distribution and
/// per-single-attack defender utility.
#[derive(Debug, Clone)]
pub struct RoutineSolution {
    pub coverage: CoverageVector,
    pub attack: AttackDistribution,
    /// Expected defender utility of one attack under the routine patrol.
    pub def_eu0: f64,
}

/// Expected defender utility of a single attack: the attack-weighted sum
/// of per-target covered/uncovered payoffs.
pub fn single_attack_utility(coverage: &[f64], attack: &[f64], targets: &[TargetPayoffs]) -> f64 {
    debug_assert_eq!(coverage.len(), targets.len());
    debug_assert_eq!(attack.len(), targets.len());
    coverage
        .iter()
        .zip(attack)
        .zip(targets)
        .map(|((&x, &q), t)| q * t.defender_utility(x))
        .sum()
}

/// Computes the routine patrol for an instance (its targets, precision,
/// and resource count).
pub fn solve_routine(inst: &GameInstance) -> Result<RoutineSolution, QriError> {
    solve_routine_with(
        &inst.targets,
        inst.lambda,
        inst.resources,
        qri::DEFAULT_SEGMENTS,
    )
}

/// Routine patrol with explicit parameters. The attacker is unresponsive
/// at `lambda = 0`, so coverage goes to the targets with the largest
/// coverage gains (ties to the lower index); otherwise this is the
/// no-informant special case of the informant-aware solver.
pub fn solve_routine_with(
    targets: &[TargetPayoffs],
    lambda: f64,
    resources: u32,
    segments: usize,
) -> Result<RoutineSolution, QriError> {
    if targets.is_empty() {
        return Err(QriError::NoTargets);
    }
    let coverage = if lambda == 0.0 {
        let n = targets.len();
        let gains: Vec<f64> = targets.iter().map(|t| t.coverage_gain()).collect();
        let covered = crate::tips::top_targets_by_gain(&gains, resources as usize);
        let mut x = vec![0.0; n];
        for i in covered {
            x[i] = 1.0;
        }
        CoverageVector(x)
    } else {
        let strategy = qri::solve_qri(targets, lambda, resources, 0.0, segments)?;
        strategy.default
    };
    let attack = quantal_response(&coverage, targets, lambda);
    let def_eu0 = single_attack_utility(&coverage, &attack, targets);
    Ok(RoutineSolution {
        coverage,
        attack,
        def_eu0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, GenParams};

    #[test]
    fn single_target_gets_full_coverage() {
        let targets = vec![TargetPayoffs::new(1.7, -0.4, 1.0, -1.0)];
        let sol = solve_routine_with(&targets, 2.0, 1, 10).unwrap();
        assert!((sol.coverage[0] - 1.0).abs() < 1e-6);
        assert!((sol.attack[0] - 1.0).abs() < 1e-12);
        assert!((sol.def_eu0 - 1.7).abs() < 1e-5);
    }

    #[test]
    fn identical_targets_split_coverage() {
        let t = TargetPayoffs::new(1.0, -1.0, 1.0, -1.0);
        let targets = vec![t, t];
        let sol = solve_routine_with(&targets, 2.0, 1, 20).unwrap();
        // Symmetric instance: a fine one-dimensional sweep confirms the
        // even split is optimal.
        let mut best = f64::NEG_INFINITY;
        let mut best_x = 0.0;
        for step in 0..=1000 {
            let x0 = step as f64 / 1000.0;
            let cover = [x0, 1.0 - x0];
            let q = quantal_response(&cover, &targets, 2.0);
            let value = single_attack_utility(&cover, &q, &targets);
            if value > best {
                best = value;
                best_x = x0;
            }
        }
        assert!((best_x - 0.5).abs() < 1e-9);
        assert!((sol.coverage[0] - 0.5).abs() < 2e-2);
        assert!(sol.def_eu0 >= best - 1e-4);
    }

    #[test]
    fn unresponsive_attacker_gets_top_gain_coverage() {
        // Coverage gains 1 + eps and 2 + eps: the single resource goes to
        // the second target and the uniform attacker splits evenly.
        let targets = vec![
            TargetPayoffs::new(1.0, -1e-8, 1.0, -1.0),
            TargetPayoffs::new(2.0, -1e-8, 1.0, -1.0),
        ];
        let sol = solve_routine_with(&targets, 0.0, 1, 10).unwrap();
        assert_eq!(sol.coverage.0, vec![0.0, 1.0]);
        assert!((sol.attack[0] - 0.5).abs() < 1e-12);
        assert!((sol.def_eu0 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn utility_formula_edge_cases() {
        let targets = vec![
            TargetPayoffs::new(1.0, -0.5, 1.0, -1.0),
            TargetPayoffs::new(2.0, -0.25, 1.0, -1.0),
        ];
        // Attack mass on a fully covered target earns its reward.
        assert!((single_attack_utility(&[1.0, 0.0], &[1.0, 0.0], &targets) - 1.0).abs() < 1e-12);
        // No coverage: penalty-weighted attack mass.
        let v = single_attack_utility(&[0.0, 0.0], &[0.3, 0.7], &targets);
        assert!((v - (0.3 * -0.5 + 0.7 * -0.25)).abs() < 1e-12);
    }

    #[test]
    fn grid_dominance_on_small_instances() {
        for seed in 0..4u64 {
            let inst = generate_instance(seed, &GenParams::new(2, 2, 3, 2, 1)).unwrap();
            let sol = solve_routine(&inst).unwrap();
            let n = inst.num_targets();
            // 0.05-step grid over the coverage box, budget-feasible points.
            let steps = 20usize;
            let mut best = f64::NEG_INFINITY;
            let mut stack = vec![Vec::<f64>::new()];
            while let Some(prefix) = stack.pop() {
                if prefix.len() == n {
                    if prefix.iter().sum::<f64>() <= inst.resources as f64 + 1e-12 {
                        let q = quantal_response(&prefix, &inst.targets, inst.lambda);
                        best = best.max(single_attack_utility(&prefix, &q, &inst.targets));
                    }
                    continue;
                }
                for s in 0..=steps {
                    let mut next = prefix.clone();
                    next.push(s as f64 / steps as f64);
                    if next.iter().sum::<f64>() <= inst.resources as f64 + 1e-12 {
                        stack.push(next);
                    }
                }
            }
            // The default segment count leaves a piecewise-linear gap of
            // about 1e-2 on these payoff scales.
            assert!(
                sol.def_eu0 >= best - 1.5e-2,
                "seed {seed}: routine {} vs grid {best}",
                sol.def_eu0
            );
        }
    }

    #[test]
    fn more_resources_never_hurt() {
        for seed in 0..5u64 {
            let inst = generate_instance(seed, &GenParams::new(2, 2, 4, 1, 1)).unwrap();
            let mut last = f64::NEG_INFINITY;
            for r in 1..=4u32 {
                let sol = solve_routine_with(&inst.targets, inst.lambda, r, 10).unwrap();
                assert!(
                    sol.def_eu0 >= last - 1e-2,
                    "seed {seed}, r {r}: {} < {last}",
                    sol.def_eu0
                );
                last = last.max(sol.def_eu0);
            }
        }
    }
}
