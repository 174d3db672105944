//! Informant-aware attacker model and its solver.
//!
//! The attacker's belief folds in the tip-triggered coverage: the exposure
//! of target `i` is `y_i = (1 - w) x_i + w z_i`, where `x` is the default
//! patrol, `z` the per-target response probability after a tip for that
//! target, and `w` the probability a tip arrives. The defender maximizes a
//! ratio of exponential sums over `(x, z)`; the solver binary-searches the
//! objective level and checks each level with a piecewise-linear program
//! whose per-target segment fills must be left-to-right.
//!
//! Instead of handing the ordering binaries to a MILP engine, levels are
//! explored by best-first search over per-target fill patterns: the only
//! coupling across targets is the single resource inequality, so each node
//! relaxes the unassigned targets (dropping the ordering) for a valid lower
//! bound and the assigned ones stay exact.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::{
    quantal_response, AttackDistribution, CoverageVector, GameInstance, ModelError, TargetPayoffs,
};
use crate::opt::{
    bisect_level, fill_order_patterns, solve_lp, BisectError, FillPattern, LinearProgram, LpError,
    PwlApprox,
};
use crate::tips::InformantSet;

/// Default segment count for the piecewise-linear approximation.
pub const DEFAULT_SEGMENTS: usize = 10;

/// Tolerance of the binary search on the objective level. Tight enough
/// that reported objectives inherit the exact monotonicity in `w` of the
/// underlying feasible-region nesting.
pub const LEVEL_TOL: f64 = 1e-7;

const NODE_CAP: usize = 2_000_000;

#[derive(Debug, thiserror::Error)]
pub enum QriError {
    #[error("instance has no targets")]
    NoTargets,
    #[error("tip probability w = {0} outside [0, 1]")]
    BadTipProbability(f64),
    #[error("piecewise-linear segment count must be at least 1")]
    BadSegments,
    #[error("pattern search exceeded {NODE_CAP} nodes")]
    SearchBudget,
    #[error("level search failed: {0}")]
    Level(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A defender strategy against the informant-aware attacker.
#[derive(Debug, Clone)]
pub struct QriStrategy {
    /// Default coverage `x` with `sum <= r`.
    pub default: CoverageVector,
    /// Tip-response probabilities `z`.
    pub tip_response: Vec<f64>,
    /// Effective exposure `y = (1 - w) x + w z`.
    pub exposure: Vec<f64>,
    /// Objective value certified by the piecewise-linear model. See
    /// [`QriStrategy::exact_objective`] for the unapproximated value.
    pub objective: f64,
}

impl QriStrategy {
    /// The exact (not piecewise-linear) defender utility of the strategy.
    pub fn exact_objective(&self, targets: &[TargetPayoffs], lambda: f64) -> f64 {
        exposure_utility(&self.exposure, targets, lambda)
    }
}

/// Defender expected utility per attack when the attacker quantal-responds
/// to the exposure vector.
pub fn exposure_utility(exposure: &[f64], targets: &[TargetPayoffs], lambda: f64) -> f64 {
    let q = quantal_response(exposure, targets, lambda);
    exposure
        .iter()
        .zip(targets)
        .zip(q.iter())
        .map(|((&y, t), &qi)| qi * t.defender_utility(y))
        .sum()
}

/// Attack distribution of the informant-aware attacker against `(x, z, w)`.
pub fn qri_attack_distribution(
    default: &[f64],
    tip_response: &[f64],
    w: f64,
    targets: &[TargetPayoffs],
    lambda: f64,
) -> AttackDistribution {
    let exposure: Vec<f64> = default
        .iter()
        .zip(tip_response)
        .map(|(&x, &z)| (1.0 - w) * x + w * z)
        .collect();
    quantal_response(&exposure, targets, lambda)
}

/// Whether an exposure vector is realizable by some `(x, z)` with
/// `sum x <= r`: each target needs default coverage at least
/// `(y_i - w) / (1 - w)`, and those minima must fit the budget. For
/// `w = 1` every exposure in the unit box is realizable.
pub fn feasible_exposure(exposure: &[f64], w: f64, resources: u32) -> bool {
    if exposure.iter().any(|&y| !(0.0..=1.0 + 1e-12).contains(&y)) {
        return false;
    }
    if w >= 1.0 {
        return true;
    }
    let need: f64 = exposure
        .iter()
        .map(|&y| ((y - w) / (1.0 - w)).max(0.0))
        .sum();
    need <= resources as f64 + 1e-9
}

/// Picks the `k` informants with the highest intensity toward the first
/// attacker (ties to the lower index) and returns the induced tip
/// probability `1 - prod(1 - w_u)`.
pub fn select_informants_by_w(
    inst: &GameInstance,
    k: usize,
) -> Result<(InformantSet, f64), ModelError> {
    let index = inst.index()?;
    let nx = inst.graph.num_informants();
    let mut intensity = vec![0.0; nx];
    if inst.graph.num_attackers() > 0 {
        for &(u, w) in &index.attacker_edges[0] {
            intensity[u] = w;
        }
    }
    let mut order: Vec<usize> = (0..nx).collect();
    order.sort_by(|&a, &b| {
        intensity[b]
            .partial_cmp(&intensity[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let chosen: Vec<usize> = order.into_iter().take(k).collect();
    let w = 1.0 - chosen.iter().map(|&u| 1.0 - intensity[u]).product::<f64>();
    Ok((InformantSet::new(chosen), w))
}

/// Solves for the optimal defender strategy against the informant-aware
/// attacker by binary search on the objective level. The result is
/// epsilon-optimal in the piecewise-linear sense for the given segment
/// count.
pub fn solve_qri(
    targets: &[TargetPayoffs],
    lambda: f64,
    resources: u32,
    w: f64,
    segments: usize,
) -> Result<QriStrategy, QriError> {
    if targets.is_empty() {
        return Err(QriError::NoTargets);
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(QriError::BadTipProbability(w));
    }
    if segments == 0 {
        return Err(QriError::BadSegments);
    }
    let check = LevelCheck::new(targets, lambda, resources, w, segments);

    let lo = targets
        .iter()
        .map(|t| t.penalty_def)
        .fold(f64::INFINITY, f64::min)
        - 1e-3;
    let hi = targets
        .iter()
        .map(|t| t.reward_def)
        .fold(f64::NEG_INFINITY, f64::max)
        + 1e-3;

    let mut last_feasible = f64::NEG_INFINITY;
    let result = bisect_level(
        |delta| {
            let feasible = check.is_feasible(delta)?;
            if feasible && delta > last_feasible {
                last_feasible = delta;
            }
            Ok::<bool, QriError>(feasible)
        },
        lo,
        hi,
        LEVEL_TOL,
    );
    match result {
        Ok(_) => {}
        Err(BisectError::Predicate(e)) => return Err(e),
        Err(e) => return Err(QriError::Level(e.to_string())),
    }

    let exposure = check.minimizing_exposure(last_feasible)?;
    let objective = check.pwl_objective(&exposure);

    let n = targets.len();
    let mut default = vec![0.0; n];
    let mut tip_response = vec![0.0; n];
    for i in 0..n {
        let y = exposure[i];
        if w >= 1.0 {
            tip_response[i] = y;
        } else if w <= 0.0 {
            default[i] = y;
            tip_response[i] = y;
        } else {
            default[i] = ((y - w) / (1.0 - w)).max(0.0);
            tip_response[i] = ((y - (1.0 - w) * default[i]) / w).clamp(0.0, 1.0);
        }
    }
    Ok(QriStrategy {
        default: CoverageVector(default),
        tip_response,
        exposure,
        objective,
    })
}

/// Feasibility oracle for one objective level: decides whether some
/// strategy attains at least `delta`, i.e. whether the minimum of
/// `delta * D(y) - N(y)` over realizable exposures is negative.
struct LevelCheck<'a> {
    targets: &'a [TargetPayoffs],
    resources: u32,
    w: f64,
    pwl: PwlApprox,
    /// Softmax weights `exp(lambda * (Ra_i - max Ra))`; the common rescale
    /// cancels in the objective ratio and keeps the sums conditioned.
    thetas: Vec<f64>,
    patterns: Vec<FillPattern>,
}

struct SearchOutcome {
    min_value: f64,
    exposure: Vec<f64>,
}

impl<'a> LevelCheck<'a> {
    fn new(
        targets: &'a [TargetPayoffs],
        lambda: f64,
        resources: u32,
        w: f64,
        segments: usize,
    ) -> Self {
        let betas: Vec<f64> = targets
            .iter()
            .map(|t| lambda * (t.reward_att - t.penalty_att))
            .collect();
        let max_ra = targets
            .iter()
            .map(|t| t.reward_att)
            .fold(f64::NEG_INFINITY, f64::max);
        let thetas = targets
            .iter()
            .map(|t| (lambda * (t.reward_att - max_ra)).exp())
            .collect();
        Self {
            targets,
            resources,
            w,
            pwl: PwlApprox::build(&betas, segments),
            thetas,
            patterns: fill_order_patterns(segments),
        }
    }

    fn num_targets(&self) -> usize {
        self.targets.len()
    }

    /// Per-segment objective coefficient of `delta * D - N`.
    fn coeff(&self, delta: f64, i: usize, j: usize) -> f64 {
        self.thetas[i]
            * ((delta - self.targets[i].penalty_def) * self.pwl.decay_slopes[i][j]
                - self.targets[i].coverage_gain() * self.pwl.weighted_slopes[i][j])
    }

    fn constant(&self, delta: f64) -> f64 {
        self.targets
            .iter()
            .zip(&self.thetas)
            .map(|(t, th)| th * (delta - t.penalty_def))
            .sum()
    }

    /// `delta * D - N` under the piecewise-linear model at ordered fills.
    fn check_value_at(&self, delta: f64, exposure: &[f64]) -> f64 {
        self.constant(delta)
            + exposure
                .iter()
                .enumerate()
                .map(|(i, &y)| {
                    let fills = self.pwl.fills_for_level(y);
                    fills
                        .iter()
                        .enumerate()
                        .map(|(j, f)| self.coeff(delta, i, j) * f)
                        .sum::<f64>()
                })
                .sum::<f64>()
    }

    /// Piecewise-linear defender utility of an exposure vector.
    fn pwl_objective(&self, exposure: &[f64]) -> f64 {
        let mut numer = 0.0;
        let mut denom = 0.0;
        for (i, (&y, t)) in exposure.iter().zip(self.targets).enumerate() {
            let f1 = self.pwl.decay_value(i, y);
            let f2 = self.pwl.weighted_value(i, y);
            numer += self.thetas[i] * (t.penalty_def * f1 + t.coverage_gain() * f2);
            denom += self.thetas[i] * f1;
        }
        numer / denom
    }

    /// LP over segment fills with the fill-ordering imposed only on
    /// `assigned` targets; the rest keep free segment boxes, making the
    /// optimum a lower bound of every completion.
    fn node_lp(&self, delta: f64, assigned: &[FillPattern]) -> Result<(f64, Vec<f64>), LpError> {
        let n = self.num_targets();
        let k = self.pwl.segments;
        let width = self.pwl.segment_width();
        let vars = n * k + n; // fills then per-target resource needs
        let mut maximize = vec![0.0; vars];
        let mut bounds = vec![(0.0, width); n * k];
        for (i, pattern) in assigned.iter().enumerate() {
            for j in 0..k {
                bounds[i * k + j] = pattern.segment_bounds(j, width);
            }
        }
        bounds.extend(std::iter::repeat_n((0.0, 1.0), n));
        for i in 0..n {
            for j in 0..k {
                maximize[i * k + j] = -self.coeff(delta, i, j);
            }
        }
        let mut lp = LinearProgram::new(maximize);
        lp.bounds = bounds;
        // sum_j y_ij - (1 - w) s_i <= w, i.e. s_i covers the default
        // coverage the exposure level forces.
        for i in 0..n {
            let mut row = vec![0.0; vars];
            for j in 0..k {
                row[i * k + j] = 1.0;
            }
            row[n * k + i] = -(1.0 - self.w);
            lp.le.push((row, self.w));
        }
        let mut row = vec![0.0; vars];
        for i in 0..n {
            row[n * k + i] = 1.0;
        }
        lp.le.push((row, self.resources as f64));

        let sol = solve_lp(&lp)?;
        let value = self.constant(delta) - sol.value;
        let levels = (0..n)
            .map(|i| sol.x[i * k..(i + 1) * k].iter().sum::<f64>().min(1.0))
            .collect();
        Ok((value, levels))
    }

    /// Best-first search over per-target fill patterns. With
    /// `stop_below`, returns as soon as any ordered solution below the
    /// threshold is found or the global bound proves none exists.
    fn pattern_search(
        &self,
        delta: f64,
        stop_below: Option<f64>,
    ) -> Result<SearchOutcome, QriError> {
        let n = self.num_targets();

        let (root_bound, root_levels) = self.node_lp(delta, &[])?;
        // The relaxation levels are always realizable; their ordered value
        // is an upper bound that often settles the sign without branching.
        let root_upper = self.check_value_at(delta, &root_levels);
        if let Some(threshold) = stop_below {
            if root_upper < threshold {
                return Ok(SearchOutcome {
                    min_value: root_upper,
                    exposure: root_levels,
                });
            }
            if root_bound >= threshold {
                return Ok(SearchOutcome {
                    min_value: root_bound,
                    exposure: root_levels,
                });
            }
        }

        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
        let mut seq = 0u64;
        heap.push(HeapEntry {
            bound: root_bound,
            seq,
            assigned: Vec::new(),
        });
        let mut incumbent = root_upper;
        let mut incumbent_exposure = root_levels;
        let mut expanded = 0usize;

        while let Some(entry) = heap.pop() {
            if entry.bound >= incumbent - 1e-12 {
                break;
            }
            if let Some(threshold) = stop_below {
                if incumbent < threshold || entry.bound >= threshold {
                    break;
                }
            }
            expanded += 1;
            if expanded > NODE_CAP {
                return Err(QriError::SearchBudget);
            }
            for pattern in &self.patterns {
                let mut assigned = entry.assigned.clone();
                assigned.push(*pattern);
                let (bound, levels) = self.node_lp(delta, &assigned)?;
                if bound >= incumbent - 1e-12 {
                    continue;
                }
                if assigned.len() == n {
                    incumbent = bound;
                    incumbent_exposure = levels;
                } else {
                    // Ordered evaluation of the child relaxation gives a
                    // fresh upper bound for free.
                    let upper = self.check_value_at(delta, &levels);
                    if upper < incumbent {
                        incumbent = upper;
                        incumbent_exposure = levels;
                    }
                    seq += 1;
                    heap.push(HeapEntry {
                        bound,
                        seq,
                        assigned,
                    });
                }
            }
        }
        Ok(SearchOutcome {
            min_value: incumbent,
            exposure: incumbent_exposure,
        })
    }

    fn is_feasible(&self, delta: f64) -> Result<bool, QriError> {
        let outcome = self.pattern_search(delta, Some(0.0))?;
        Ok(outcome.min_value < 0.0)
    }

    fn minimizing_exposure(&self, delta: f64) -> Result<Vec<f64>, QriError> {
        let outcome = self.pattern_search(delta, None)?;
        Ok(outcome.exposure)
    }
}

struct HeapEntry {
    bound: f64,
    seq: u64,
    assigned: Vec<FillPattern>,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; order reversed for smallest-bound-first.
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.seq.cmp(&self.seq))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, GenParams};

    fn payoffs(specs: &[(f64, f64, f64, f64)]) -> Vec<TargetPayoffs> {
        specs
            .iter()
            .map(|&(rd, pd, ra, pa)| TargetPayoffs::new(rd, pd, ra, pa))
            .collect()
    }

    #[test]
    fn zero_w_matches_plain_quantal_response() {
        let targets = payoffs(&[(1.0, -1.0, 1.2, -0.4), (2.0, -0.3, 0.8, -1.0)]);
        let x = [0.6, 0.4];
        let z = [1.0, 0.0];
        let q = qri_attack_distribution(&x, &z, 0.0, &targets, 1.7);
        let plain = quantal_response(&x, &targets, 1.7);
        for (a, b) in q.iter().zip(plain.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn full_w_full_response_is_uniform_for_equal_penalties() {
        let targets = payoffs(&[(1.0, -1.0, 1.2, -0.5), (2.0, -0.3, 0.8, -0.5)]);
        let q = qri_attack_distribution(&[0.1, 0.9], &[1.0, 1.0], 1.0, &targets, 2.0);
        assert!((q[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exposure_feasibility_map() {
        assert!(feasible_exposure(&[0.6, 0.4], 0.0, 1));
        assert!(!feasible_exposure(&[0.7, 0.4], 0.0, 1));
        assert!(feasible_exposure(&[1.0, 1.0], 1.0, 1));
        // w = 0.5, r = 1: each all-one exposure needs a full default unit.
        assert!(!feasible_exposure(&[1.0, 1.0], 0.5, 1));
        assert!(feasible_exposure(&[1.0, 0.5], 0.5, 1));
    }

    #[test]
    fn informant_selection_by_intensity() {
        let mut inst = generate_instance(5, &GenParams::new(3, 1, 2, 1, 2)).unwrap();
        inst.graph.edges = vec![
            crate::model::Edge {
                u: "u1".into(),
                v: "v1".into(),
                w: 0.5,
            },
            crate::model::Edge {
                u: "u2".into(),
                v: "v1".into(),
                w: 0.4,
            },
            crate::model::Edge {
                u: "u3".into(),
                v: "v1".into(),
                w: 0.1,
            },
        ];
        let (set, w) = select_informants_by_w(&inst, 2).unwrap();
        assert_eq!(set.members(), &[0, 1]);
        assert!((w - 0.7).abs() < 1e-12);
        let (_, w0) = select_informants_by_w(&inst, 0).unwrap();
        assert_eq!(w0, 0.0);
        inst.graph.edges[2].w = 1.0;
        let (_, w1) = select_informants_by_w(&inst, 3).unwrap();
        assert!((w1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solver_handles_single_target() {
        let targets = payoffs(&[(1.5, -0.8, 1.0, -1.0)]);
        let strategy = solve_qri(&targets, 2.0, 1, 0.0, 10).unwrap();
        // One target, one resource: full coverage is optimal.
        assert!((strategy.exposure[0] - 1.0).abs() < 1e-6);
        assert!((strategy.objective - 1.5).abs() < 1e-5);
    }

    #[test]
    fn returned_strategy_satisfies_constraints() {
        for seed in 0..5u64 {
            let inst = generate_instance(seed, &GenParams::new(3, 1, 4, 2, 2)).unwrap();
            for &w in &[0.0, 0.3, 1.0] {
                let s = solve_qri(&inst.targets, inst.lambda, inst.resources, w, 8).unwrap();
                let total: f64 = s.default.iter().sum();
                assert!(total <= inst.resources as f64 + 1e-8);
                for i in 0..inst.num_targets() {
                    assert!((0.0..=1.0 + 1e-9).contains(&s.default[i]));
                    assert!((0.0..=1.0 + 1e-9).contains(&s.tip_response[i]));
                    let y = (1.0 - w) * s.default[i] + w * s.tip_response[i];
                    assert!((y - s.exposure[i]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn zero_w_reduces_to_the_routine_solver() {
        for seed in 0..4u64 {
            let inst = generate_instance(seed, &GenParams::new(2, 2, 4, 2, 1)).unwrap();
            let strategy = solve_qri(&inst.targets, inst.lambda, inst.resources, 0.0, 10).unwrap();
            let routine = crate::routine::solve_routine(&inst).unwrap();
            let gap =
                (strategy.exact_objective(&inst.targets, inst.lambda) - routine.def_eu0).abs();
            // Both run the same piecewise-linear machinery; the gap is at
            // most the approximation slack.
            assert!(gap < 2e-2, "seed {seed}: gap {gap}");
        }
    }

    #[test]
    fn witness_construction_preserves_feasibility_and_objective() {
        // Rescaling the tip response toward the default strategy keeps the
        // exposure, hence the objective, when w grows.
        let inst = generate_instance(3, &GenParams::new(3, 1, 3, 1, 2)).unwrap();
        let (w1, w2) = (0.4, 0.8);
        let s = solve_qri(&inst.targets, inst.lambda, inst.resources, w1, 10).unwrap();
        let ratio = w1 / w2;
        let z2: Vec<f64> = s
            .tip_response
            .iter()
            .zip(s.default.iter())
            .map(|(&z, &x)| ratio * z + (1.0 - ratio) * x)
            .collect();
        for (i, &z) in z2.iter().enumerate() {
            assert!((0.0..=1.0 + 1e-12).contains(&z));
            let y2 = (1.0 - w2) * s.default[i] + w2 * z;
            assert!((y2 - s.exposure[i]).abs() < 1e-9);
        }
    }
}
