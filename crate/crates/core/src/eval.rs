//! Evaluation of a recruited informant set: the expected total defender
//! utility when tips are answered with the greedy allocation.
//!
//! Five routes share one inner computation. The exact route enumerates
//! reported sets and weighs them by their probabilities; truncation drops
//! large reported sets and carries a closed-form error bound; sampling
//! draws reported sets instead of enumerating; the strong-intensity route
//! collapses enumeration to reported-set sizes when every recruited edge
//! has intensity one; and a Monte-Carlo simulator of the generative model
//! serves as ground truth for the others.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::{AttackDistribution, CoverageVector, GameInstance, GraphIndex, TargetPayoffs};
use crate::routine::solve_routine;
use crate::tips::{self, InformantSet, RecruitView};

/// Reported-set enumeration is refused beyond this many reachable attackers.
pub const EXACT_ENUMERATION_GUARD: usize = 20;

/// Masks are enumerated in parallel chunks of this size once the reachable
/// set is large; chunk boundaries are fixed, so the reduction order (and
/// the floating-point result) does not depend on the thread schedule.
const PARALLEL_MASK_CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    Exact,
    CTruncated,
    Sampled,
    StrongIntensity,
    MonteCarlo,
}

impl std::fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            EvalMethod::Exact => "exact",
            EvalMethod::CTruncated => "ctrunc",
            EvalMethod::Sampled => "sampled",
            EvalMethod::StrongIntensity => "sisi",
            EvalMethod::MonteCarlo => "mc",
        };
        f.write_str(name)
    }
}

/// A recruitment value with provenance and diagnostics.
#[derive(Debug, Clone)]
pub struct EvaluationResult {
    pub value: f64,
    pub method: EvalMethod,
    /// Guaranteed error bound; present only for the truncated method when
    /// the expected number of attacks is below the truncation level.
    pub error_bound: Option<f64>,
    pub sample_count: Option<u64>,
    pub seed: Option<u64>,
}

impl EvaluationResult {
    fn plain(value: f64, method: EvalMethod) -> Self {
        Self {
            value,
            method,
            error_bound: None,
            sample_count: None,
            seed: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(
        "reachable attacker set of size {0} exceeds the enumeration guard {EXACT_ENUMERATION_GUARD}"
    )]
    TooManyReachable(usize),
    #[error("truncation level must be at least 1")]
    BadTruncation,
    #[error("error bound is undefined unless C > C'")]
    BoundUndefined,
    #[error("strong-intensity evaluation requires unit intensity on every recruited edge")]
    NotStrongIntensity,
    #[error("need at least one sample")]
    NoSamples,
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Solve(#[from] crate::qri::QriError),
}

/// Shared evaluation state for one instance: the graph index, the no-tip
/// patrol, the attack distribution the tips are scored against, and the
/// per-attack utility of staying uninformed.
///
/// [`EvalContext::new`] wires in the level-0 attacker (quantal response to
/// the routine patrol); [`EvalContext::with_attack`] substitutes the
/// attack distribution and per-attack utility of a higher reasoning level.
pub struct EvalContext<'a> {
    pub inst: &'a GameInstance,
    pub index: GraphIndex,
    pub routine: CoverageVector,
    pub attack: AttackDistribution,
    pub def_eu0: f64,
}

impl<'a> EvalContext<'a> {
    pub fn new(inst: &'a GameInstance) -> Result<Self, EvalError> {
        let routine = solve_routine(inst)?;
        Ok(Self {
            inst,
            index: inst.index()?,
            routine: routine.coverage,
            attack: routine.attack,
            def_eu0: routine.def_eu0,
        })
    }

    pub fn with_attack(
        inst: &'a GameInstance,
        routine: CoverageVector,
        attack: AttackDistribution,
        def_eu0: f64,
    ) -> Result<Self, EvalError> {
        Ok(Self {
            inst,
            index: inst.index()?,
            routine,
            attack,
            def_eu0,
        })
    }

    pub fn view(&self, members: &InformantSet) -> RecruitView {
        RecruitView::build(self.inst, &self.index, members.clone())
    }

    /// Conditional expected utility given the reported set: the uninformed
    /// branch weighs the baseline by the posterior attack mass, the
    /// informed branch enumerates per-target tip counts.
    pub fn reported_set_value(&self, view: &RecruitView, reported: &[usize]) -> f64 {
        let mass = tips::unreported_attack_mass(self.inst, view, reported);
        if reported.is_empty() {
            mass * self.def_eu0
        } else {
            self.informed_value(reported.len(), mass)
        }
    }

    /// Informed-branch utility, a function of the reported-set size and
    /// the posterior unreported attack mass only: enumerates per-target
    /// reported counts and weighs covered gains by the coverage
    /// probability from the dynamic program.
    fn informed_value(&self, reported_total: usize, unreported_mass: f64) -> f64 {
        let n = self.inst.num_targets();
        let r = self.inst.resources as usize;
        let mut total = 0.0;
        for i in 0..n {
            let payoffs = &self.inst.targets[i];
            let qi = self.attack[i];
            for t in 0..=reported_total {
                let weight = binomial(reported_total, t) * qi.powi(t as i32);
                if weight == 0.0 {
                    continue;
                }
                let gain = tips::expected_gain(payoffs, t, qi, unreported_mass);
                let uncovered = tips::expected_utility_uncovered(payoffs, t, qi, unreported_mass);
                let cover_prob = dp_cover_prob(
                    i,
                    t,
                    reported_total,
                    unreported_mass,
                    &self.attack,
                    &self.inst.targets,
                    r,
                );
                let residual = (1.0 - qi).powi((reported_total - t) as i32);
                total += weight * (residual * uncovered + cover_prob * gain);
            }
        }
        total
    }

    /// Exact recruitment value by enumeration of reported sets.
    pub fn eval_exact(&self, members: &InformantSet) -> Result<EvaluationResult, EvalError> {
        let value = self.enumerate(members, usize::MAX)?;
        Ok(EvaluationResult::plain(value, EvalMethod::Exact))
    }

    /// Truncated evaluation: reported sets of size `>= c` are dropped.
    /// When the expected number of attacks stays below `c`, the result
    /// carries the closed-form bound on the truncation error.
    pub fn eval_truncated(
        &self,
        members: &InformantSet,
        c: usize,
    ) -> Result<EvaluationResult, EvalError> {
        if c < 1 {
            return Err(EvalError::BadTruncation);
        }
        let value = self.enumerate(members, c)?;
        let sum_pv: f64 = self
            .inst
            .graph
            .attackers
            .iter()
            .map(|a| a.attack_prob)
            .sum();
        let q_scale = self
            .inst
            .targets
            .iter()
            .map(|t| t.reward_def.max(-t.penalty_def))
            .fold(0.0, f64::max);
        let error_bound =
            truncation_error_bound(c, sum_pv, self.inst.graph.num_attackers(), q_scale).ok();
        Ok(EvaluationResult {
            value,
            method: EvalMethod::CTruncated,
            error_bound,
            sample_count: None,
            seed: None,
        })
    }

    fn enumerate(&self, members: &InformantSet, size_cap: usize) -> Result<f64, EvalError> {
        let view = self.view(members);
        let m = view.reachable.len();
        if m > EXACT_ENUMERATION_GUARD {
            return Err(EvalError::TooManyReachable(m));
        }
        let hit: Vec<f64> = view
            .reachable
            .iter()
            .map(|&v| view.report_prob[v] * self.inst.graph.attackers[v].attack_prob)
            .collect();
        let total_masks = 1u64 << m;
        let mask_value = |mask: u64| -> f64 {
            if size_cap != usize::MAX && (mask.count_ones() as usize) >= size_cap {
                return 0.0;
            }
            let mut prob = 1.0;
            for (pos, &h) in hit.iter().enumerate() {
                prob *= if mask & (1 << pos) != 0 { h } else { 1.0 - h };
                if prob == 0.0 {
                    return 0.0;
                }
            }
            let reported: Vec<usize> = (0..m)
                .filter(|pos| mask & (1 << pos) != 0)
                .map(|pos| view.reachable[pos])
                .collect();
            prob * self.reported_set_value(&view, &reported)
        };
        let value = if total_masks > 2 * PARALLEL_MASK_CHUNK {
            let chunks: Vec<u64> = (0..total_masks.div_ceil(PARALLEL_MASK_CHUNK)).collect();
            chunks
                .par_iter()
                .map(|&chunk| {
                    let lo = chunk * PARALLEL_MASK_CHUNK;
                    let hi = (lo + PARALLEL_MASK_CHUNK).min(total_masks);
                    (lo..hi).map(mask_value).sum::<f64>()
                })
                .collect::<Vec<f64>>()
                .into_iter()
                .sum()
        } else {
            (0..total_masks).map(mask_value).sum()
        };
        Ok(value)
    }

    /// Sampled evaluation: averages the conditional value over drawn
    /// reported sets. Converges to the exact value as the sample count
    /// grows; identical reported sets are computed once.
    pub fn eval_sampled(
        &self,
        members: &InformantSet,
        samples: u64,
        seed: u64,
    ) -> Result<EvaluationResult, EvalError> {
        if samples == 0 {
            return Err(EvalError::NoSamples);
        }
        let view = self.view(members);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
        let mut total = 0.0;
        for _ in 0..samples {
            let reported = tips::sample_reported_set(self.inst, &view, &mut rng);
            let value = *cache
                .entry(reported)
                .or_insert_with_key(|rep| self.reported_set_value(&view, rep));
            total += value;
        }
        Ok(EvaluationResult {
            value: total / samples as f64,
            method: EvalMethod::Sampled,
            error_bound: None,
            sample_count: Some(samples),
            seed: Some(seed),
        })
    }

    /// Polynomial-time evaluation when every recruited edge has intensity
    /// one: unreported reachable attackers are then surely idle, so only
    /// the reported-set size matters and its distribution is read off a
    /// product polynomial.
    pub fn eval_strong_intensity(
        &self,
        members: &InformantSet,
    ) -> Result<EvaluationResult, EvalError> {
        let view = self.view(members);
        if !view.strong_intensity(&self.index) {
            return Err(EvalError::NotStrongIntensity);
        }
        // Coefficient t0 of the product polynomial is the probability of
        // exactly t0 reported attackers.
        let mut size_prob = vec![1.0];
        for &v in &view.reachable {
            let p = self.inst.graph.attackers[v].attack_prob;
            let mut next = vec![0.0; size_prob.len() + 1];
            for (t, &mass) in size_prob.iter().enumerate() {
                next[t] += mass * (1.0 - p);
                next[t + 1] += mass * p;
            }
            size_prob = next;
        }
        let unreachable_mass: f64 = (0..self.inst.graph.num_attackers())
            .filter(|v| !view.is_reachable(*v))
            .map(|v| self.inst.graph.attackers[v].attack_prob)
            .sum();
        let mut value = size_prob[0] * unreachable_mass * self.def_eu0;
        for (t0, &prob) in size_prob.iter().enumerate().skip(1) {
            if prob > 0.0 {
                value += prob * self.informed_value(t0, unreachable_mass);
            }
        }
        Ok(EvaluationResult::plain(value, EvalMethod::StrongIntensity))
    }

    /// Ground-truth simulation of the generative model: attackers attack
    /// independently, pick targets from the attack distribution, and are
    /// reported through recruited edges; the defender patrols the routine
    /// coverage when uninformed and greedily reallocates on tips.
    pub fn eval_monte_carlo(
        &self,
        members: &InformantSet,
        episodes: u64,
        seed: u64,
    ) -> Result<EvaluationResult, EvalError> {
        if episodes == 0 {
            return Err(EvalError::NoSamples);
        }
        let view = self.view(members);
        let cumulative: Vec<f64> = self
            .attack
            .iter()
            .scan(0.0, |acc, &q| {
                *acc += q;
                Some(*acc)
            })
            .collect();
        let chunk_count = episodes.div_ceil(65_536);
        let chunk_totals: Vec<f64> = (0..chunk_count)
            .into_par_iter()
            .map(|chunk| {
                let lo = chunk * 65_536;
                let hi = (lo + 65_536).min(episodes);
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seed.wrapping_add(chunk.wrapping_mul(0x9E37_79B9)));
                let mut total = 0.0;
                for _ in lo..hi {
                    total += self.simulate_episode(&view, &cumulative, &mut rng);
                }
                total
            })
            .collect();
        let value = chunk_totals.into_iter().sum::<f64>() / episodes as f64;
        Ok(EvaluationResult {
            value,
            method: EvalMethod::MonteCarlo,
            error_bound: None,
            sample_count: Some(episodes),
            seed: Some(seed),
        })
    }

    fn simulate_episode(
        &self,
        view: &RecruitView,
        cumulative: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> f64 {
        let inst = self.inst;
        let n = inst.num_targets();
        let mut attacked_target: Vec<Option<usize>> = vec![None; inst.graph.num_attackers()];
        let mut counts = vec![0usize; n];
        let mut reported: Vec<usize> = Vec::new();
        for (v, attacker) in inst.graph.attackers.iter().enumerate() {
            if rng.random::<f64>() >= attacker.attack_prob {
                continue;
            }
            let draw = rng.random::<f64>();
            let target = cumulative.iter().position(|&c| draw < c).unwrap_or(n - 1);
            attacked_target[v] = Some(target);
            if view.report_prob[v] > 0.0 && rng.random::<f64>() < view.report_prob[v] {
                counts[target] += 1;
                reported.push(v);
            }
        }
        let mut utility = 0.0;
        if reported.is_empty() {
            let covered: Vec<bool> = (0..n)
                .map(|i| rng.random::<f64>() < self.routine[i])
                .collect();
            for target in attacked_target.into_iter().flatten() {
                let t = &inst.targets[target];
                utility += if covered[target] {
                    t.reward_def
                } else {
                    t.penalty_def
                };
            }
        } else {
            let mass = tips::unreported_attack_mass(inst, view, &reported);
            let gains: Vec<f64> = (0..n)
                .map(|i| tips::expected_gain(&inst.targets[i], counts[i], self.attack[i], mass))
                .collect();
            let covered = tips::top_targets_by_gain(&gains, inst.resources as usize);
            for target in attacked_target.into_iter().flatten() {
                let t = &inst.targets[target];
                utility += if covered.binary_search(&target).is_ok() {
                    t.reward_def
                } else {
                    t.penalty_def
                };
            }
        }
        utility
    }
}

/// Probability mass with which target `target`, holding `reported_on_target`
/// of the `reported_total` tips, ranks among the top `resources` targets by
/// expected gain once the remaining tips fall on the other targets.
///
/// The returned value folds in the multinomial weight of those placements:
/// dividing by `(1 - q_i)^(reported_total - reported_on_target)` recovers
/// the conditional coverage probability.
#[allow(clippy::needless_range_loop)] // dynamic-program states are index pairs
pub fn dp_cover_prob(
    target: usize,
    reported_on_target: usize,
    reported_total: usize,
    unreported_mass: f64,
    attack: &[f64],
    targets: &[TargetPayoffs],
    resources: usize,
) -> f64 {
    debug_assert!(reported_on_target <= reported_total);
    if resources == 0 {
        return 0.0;
    }
    let n = targets.len();
    let remaining = reported_total - reported_on_target;
    let own_gain = tips::expected_gain(
        &targets[target],
        reported_on_target,
        attack[target],
        unreported_mass,
    );
    if n == 1 {
        return if remaining == 0 { 1.0 } else { 0.0 };
    }

    // f[x][y]: weight of placements of y tips on the first s other targets
    // with x of them ranked above `target`; x is capped at `resources`
    // since overflowing states can never drop back below the cap.
    let x_cap = resources.min(n - 1);
    let mut f = vec![vec![0.0f64; remaining + 1]; x_cap + 1];
    f[0][0] = 1.0;
    for other in (0..n).filter(|&j| j != target) {
        let mut next = vec![vec![0.0f64; remaining + 1]; x_cap + 1];
        for x in 0..=x_cap {
            for y in 0..=remaining {
                let from = f[x][y];
                if from == 0.0 {
                    continue;
                }
                for extra in 0..=(remaining - y) {
                    let other_gain =
                        tips::expected_gain(&targets[other], extra, attack[other], unreported_mass);
                    let weight = attack[other].powi(extra as i32) / factorial(extra);
                    let ranked_above = tips::beats(other_gain, other, own_gain, target);
                    let nx = x + usize::from(ranked_above);
                    if nx <= x_cap {
                        next[nx][y + extra] += from * weight;
                    }
                }
            }
        }
        f = next;
    }
    let below_cap: f64 = (0..resources.min(x_cap + 1)).map(|x| f[x][remaining]).sum();
    factorial(remaining) * below_cap
}

/// Closed-form bound on the truncation error of the evaluation at level
/// `c`, valid when the expected number of attacks is at most `c_prime < c`
/// and payoff magnitudes are bounded by `q_scale`.
pub fn truncation_error_bound(
    c: usize,
    c_prime: f64,
    num_attackers: usize,
    q_scale: f64,
) -> Result<f64, EvalError> {
    if (c as f64) <= c_prime || num_attackers == 0 {
        return Err(EvalError::BoundUndefined);
    }
    let gap = c as f64 - c_prime;
    let y = num_attackers as f64;
    let tail = 1.0 / (1.0 - (-4.0 * gap / y).exp());
    Ok(q_scale * (-2.0 * gap * gap / y).exp() * (c as f64 + tail))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Binomial coefficient; exact integer arithmetic up to 15, log-space
/// beyond to stay clear of overflow.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    if n <= 15 {
        let mut num: u64 = 1;
        let mut den: u64 = 1;
        for i in 0..k.min(n - k) {
            num *= (n - i) as u64;
            den *= (i + 1) as u64;
        }
        return num as f64 / den as f64;
    }
    let ln = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
    (ln(n) - ln(k) - ln(n - k)).exp()
}
