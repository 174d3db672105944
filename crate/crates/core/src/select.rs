//! Informant selection under the recruitment budget: exhaustive
//! enumeration, the greedy-branching top-two search, a tip-probability
//! baseline, and the budget trade-off sweep between resources and
//! informants.

use std::collections::HashMap;

use crate::eval::{EvalContext, EvalError, EvalMethod, EvaluationResult};
use crate::model::GameInstance;
use crate::tips::{InformantSet, RecruitView};

/// Candidate sets beyond this many informants are refused for exhaustive
/// enumeration.
pub const SELECTION_GUARD: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMethod {
    Exhaustive,
    GreedyBranching,
    TipProbabilityBaseline,
}

impl std::fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SelectionMethod::Exhaustive => "esa",
            SelectionMethod::GreedyBranching => "gsa",
            SelectionMethod::TipProbabilityBaseline => "greedy",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub chosen: InformantSet,
    /// Value of the chosen set under the configured evaluator.
    pub value: f64,
    /// Underlying evaluator invocations (cached hits not recounted).
    pub evaluations_used: usize,
    pub method: SelectionMethod,
}

#[derive(Debug, thiserror::Error)]
pub enum SelectError {
    #[error("{0} candidate informants exceed the enumeration guard {SELECTION_GUARD}")]
    TooManyCandidates(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// An evaluator of informant sets. Implementations must be pure: the same
/// set always evaluates to the same value.
pub trait SetEvaluator {
    fn evaluate(&mut self, members: &InformantSet) -> Result<f64, EvalError>;
    fn calls(&self) -> usize;
}

/// Counts invocations and memoizes values, so search strategies can probe
/// the same set repeatedly for free.
pub struct CachingEvaluator<F> {
    inner: F,
    cache: HashMap<Vec<usize>, f64>,
    calls: usize,
}

impl<F> CachingEvaluator<F>
where
    F: FnMut(&InformantSet) -> Result<f64, EvalError>,
{
    pub fn new(inner: F) -> Self {
        Self {
            inner,
            cache: HashMap::new(),
            calls: 0,
        }
    }
}

impl<F> SetEvaluator for CachingEvaluator<F>
where
    F: FnMut(&InformantSet) -> Result<f64, EvalError>,
{
    fn evaluate(&mut self, members: &InformantSet) -> Result<f64, EvalError> {
        if let Some(&v) = self.cache.get(members.members()) {
            return Ok(v);
        }
        let v = (self.inner)(members)?;
        self.cache.insert(members.members().to_vec(), v);
        self.calls += 1;
        Ok(v)
    }

    fn calls(&self) -> usize {
        self.calls
    }
}

/// Ready-made evaluator over an [`EvalContext`].
pub fn context_evaluator<'c, 'a>(
    ctx: &'c EvalContext<'a>,
    method: EvalMethod,
    truncation: usize,
    samples: u64,
    seed: u64,
) -> CachingEvaluator<impl FnMut(&InformantSet) -> Result<f64, EvalError> + 'c> {
    CachingEvaluator::new(move |members: &InformantSet| {
        let result: EvaluationResult = match method {
            EvalMethod::Exact => ctx.eval_exact(members)?,
            EvalMethod::CTruncated => ctx.eval_truncated(members, truncation)?,
            EvalMethod::Sampled => ctx.eval_sampled(members, samples, seed)?,
            EvalMethod::StrongIntensity => ctx.eval_strong_intensity(members)?,
            EvalMethod::MonteCarlo => ctx.eval_monte_carlo(members, samples, seed)?,
        };
        Ok(result.value)
    })
}

fn better(value: f64, members: &InformantSet, best: f64, best_members: &InformantSet) -> bool {
    value > best || (value == best && members.members() < best_members.members())
}

/// Exhaustive search over all candidate sets within the budget; ties go to
/// the lexicographically smallest member list.
pub fn select_exhaustive(
    inst: &GameInstance,
    evaluator: &mut impl SetEvaluator,
) -> Result<SelectionResult, SelectError> {
    let nx = inst.graph.num_informants();
    if nx > SELECTION_GUARD {
        return Err(SelectError::TooManyCandidates(nx));
    }
    let budget = inst.recruit_budget as usize;
    let mut best_members = InformantSet::empty();
    let mut best = evaluator.evaluate(&best_members)?;
    for mask in 1u32..(1 << nx) {
        if mask.count_ones() as usize > budget {
            continue;
        }
        let members = InformantSet::new((0..nx).filter(|u| mask & (1 << u) != 0).collect());
        let value = evaluator.evaluate(&members)?;
        if better(value, &members, best, &best_members) {
            best = value;
            best_members = members;
        }
    }
    Ok(SelectionResult {
        chosen: best_members,
        value: best,
        evaluations_used: evaluator.calls(),
        method: SelectionMethod::Exhaustive,
    })
}

fn branching_search(
    inst: &GameInstance,
    evaluator: &mut impl SetEvaluator,
    current: InformantSet,
    current_value: f64,
    best: &mut f64,
    best_members: &mut InformantSet,
) -> Result<(), SelectError> {
    let nx = inst.graph.num_informants();
    let budget = inst.recruit_budget as usize;
    if current.len() == budget || current.len() == nx {
        if better(current_value, &current, *best, best_members) {
            *best = current_value;
            *best_members = current;
        }
        return Ok(());
    }
    // Rank one-step extensions; strict comparisons over the index-ordered
    // scan break ties toward the lower index.
    let mut first: Option<(f64, usize)> = None;
    let mut second: Option<(f64, usize)> = None;
    for u in 0..nx {
        if current.contains(u) {
            continue;
        }
        let value = evaluator.evaluate(&current.with(u))?;
        match first {
            Some((fv, _)) if value <= fv => {
                if second.is_none_or(|(sv, _)| value > sv) {
                    second = Some((value, u));
                }
            }
            _ => {
                second = first;
                first = Some((value, u));
            }
        }
    }
    if let Some((value, u)) = first {
        branching_search(inst, evaluator, current.with(u), value, best, best_members)?;
    }
    if let Some((value, u)) = second {
        branching_search(inst, evaluator, current.with(u), value, best, best_members)?;
    }
    Ok(())
}

/// Greedy-branching search: at every node the two candidates with the
/// largest one-step value are both expanded, giving `2^k` leaves instead
/// of an exhaustive sweep. A lone remaining candidate is expanded once.
pub fn select_greedy_branching(
    inst: &GameInstance,
    evaluator: &mut impl SetEvaluator,
) -> Result<SelectionResult, SelectError> {
    let mut best_members = InformantSet::empty();
    let mut best = f64::NEG_INFINITY;
    let root_value = evaluator.evaluate(&InformantSet::empty())?;
    branching_search(
        inst,
        evaluator,
        InformantSet::empty(),
        root_value,
        &mut best,
        &mut best_members,
    )?;
    Ok(SelectionResult {
        chosen: best_members,
        value: best,
        evaluations_used: evaluator.calls(),
        method: SelectionMethod::GreedyBranching,
    })
}

/// Baseline that ignores utilities: greedily adds the informant that most
/// increases the probability of receiving at least one tip. The reported
/// value still comes from the supplied evaluator.
pub fn select_tip_probability_baseline(
    inst: &GameInstance,
    evaluator: &mut impl SetEvaluator,
) -> Result<SelectionResult, SelectError> {
    let index = inst.index().map_err(EvalError::from)?;
    let nx = inst.graph.num_informants();
    let budget = inst.recruit_budget as usize;
    let tip_probability = |members: &InformantSet| -> f64 {
        let view = RecruitView::build(inst, &index, members.clone());
        let mut none = 1.0;
        for &v in &view.reachable {
            none *= 1.0 - view.report_prob[v] * inst.graph.attackers[v].attack_prob;
        }
        1.0 - none
    };
    let mut chosen = InformantSet::empty();
    for _ in 0..budget.min(nx) {
        let mut pick = None;
        let mut pick_prob = f64::NEG_INFINITY;
        for u in 0..nx {
            if chosen.contains(u) {
                continue;
            }
            let prob = tip_probability(&chosen.with(u));
            if prob > pick_prob {
                pick_prob = prob;
                pick = Some(u);
            }
        }
        match pick {
            Some(u) => chosen = chosen.with(u),
            None => break,
        }
    }
    let value = evaluator.evaluate(&chosen)?;
    Ok(SelectionResult {
        chosen,
        value,
        evaluations_used: evaluator.calls(),
        method: SelectionMethod::TipProbabilityBaseline,
    })
}

/// One row of the budget trade-off table.
#[derive(Debug, Clone)]
pub struct TradeoffRow {
    pub recruit_budget: u32,
    pub resources: u32,
    pub value: f64,
    pub chosen: Vec<String>,
}

/// Sweeps every `(k, r)` pair affordable under the budget, optimizing the
/// informant set per pair with exhaustive selection and the exact
/// evaluator. Returns all rows and the index of the best one.
pub fn budget_tradeoff(
    inst: &GameInstance,
    budget: f64,
    cost_resource: f64,
    cost_informant: f64,
) -> Result<(Vec<TradeoffRow>, usize), SelectError> {
    assert!(
        cost_resource > 0.0 && cost_informant > 0.0,
        "costs must be positive"
    );
    let mut rows = Vec::new();
    let max_k = (budget / cost_informant).floor() as i64;
    let max_k = max_k.clamp(0, inst.graph.num_informants() as i64) as u32;
    for k in 0..=max_k {
        let rest = budget - k as f64 * cost_informant;
        if rest < 0.0 {
            break;
        }
        let max_r = (rest / cost_resource).floor() as i64;
        let max_r = max_r.clamp(0, inst.num_targets() as i64) as u32;
        for r in 0..=max_r {
            let mut variant = inst.clone();
            variant.resources = r;
            variant.recruit_budget = k;
            let ctx = EvalContext::new(&variant)?;
            let mut evaluator = context_evaluator(&ctx, EvalMethod::Exact, 0, 0, 0);
            let result = select_exhaustive(&variant, &mut evaluator)?;
            rows.push(TradeoffRow {
                recruit_budget: k,
                resources: r,
                value: result.value,
                chosen: result.chosen.ids(&variant),
            });
        }
    }
    let best = rows
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.value
                .partial_cmp(&b.value)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ib.cmp(ia))
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok((rows, best))
}
