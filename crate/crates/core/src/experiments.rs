//! Batch experiment drivers. Each produces a CSV table over seeded random
//! instances; the command-line front end writes them to disk. Numeric
//! cells print with full round-trip precision.

use std::time::Instant;

use crate::bilevel::{self, BiLevelError};
use crate::eval::{EvalContext, EvalError, EvalMethod};
use crate::model::{generate_instance, GenParams, ModelError};
use crate::qri::{self, QriError};
use crate::select::{self, SelectError, SelectionMethod, SetEvaluator};
use crate::tips::InformantSet;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    BiLevel(#[from] BiLevelError),
    #[error(transparent)]
    Qri(#[from] QriError),
}

/// A rectangular table with a fixed header, rendered as RFC-4180-style CSV
/// (the cells this crate emits never need quoting).
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Renders a float with shortest round-trip precision.
pub fn cell(value: f64) -> String {
    format!("{value}")
}

fn set_code(members: &InformantSet) -> String {
    // Binary encoding: bit u set when informant u is recruited.
    let mask: u64 = members.members().iter().map(|&u| 1u64 << u).sum();
    format!("{mask}")
}

/// Configuration shared by the sweep experiments.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub seeds: Vec<u64>,
    pub attacker_counts: Vec<usize>,
    pub num_informants: usize,
    pub num_targets: usize,
    pub resources: u32,
    pub recruit_budget: u32,
    pub sum_pv_cap: Option<f64>,
    pub truncation: usize,
    pub samples: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seeds: (0..10).collect(),
            attacker_counts: vec![2, 4, 6, 8],
            num_informants: 6,
            num_targets: 8,
            resources: 3,
            recruit_budget: 4,
            sum_pv_cap: Some(3.0),
            truncation: 6,
            samples: 100,
        }
    }
}

/// Compares informant-selection algorithms and evaluators across seeds and
/// attacker counts: exhaustive selection under the exact, truncated, and
/// sampled evaluators, the greedy-branching search, and the
/// tip-probability baseline. The regret column is the exact value lost
/// relative to exhaustive-with-exact.
pub fn selection_experiment(cfg: &SweepConfig) -> Result<CsvTable, ExperimentError> {
    let mut table = CsvTable::new(
        "selection",
        &[
            "seed",
            "num_attackers",
            "method",
            "evaluator",
            "chosen",
            "reported_value",
            "exact_value",
            "regret",
            "runtime_ms",
        ],
    );
    for &seed in &cfg.seeds {
        for &ny in &cfg.attacker_counts {
            let mut params = GenParams::new(
                cfg.num_informants,
                ny,
                cfg.num_targets,
                cfg.resources,
                cfg.recruit_budget,
            );
            params.sum_pv_cap = cfg.sum_pv_cap;
            let inst = generate_instance(seed, &params)?;
            let ctx = EvalContext::new(&inst)?;
            let mut exact_eval = select::context_evaluator(&ctx, EvalMethod::Exact, 0, 0, 0);
            let reference = select::select_exhaustive(&inst, &mut exact_eval)?;

            let runs: Vec<(SelectionMethod, EvalMethod)> = vec![
                (SelectionMethod::Exhaustive, EvalMethod::Exact),
                (SelectionMethod::Exhaustive, EvalMethod::CTruncated),
                (SelectionMethod::Exhaustive, EvalMethod::Sampled),
                (SelectionMethod::GreedyBranching, EvalMethod::Exact),
                (SelectionMethod::TipProbabilityBaseline, EvalMethod::Exact),
            ];
            for (method, evaluator_kind) in runs {
                let start = Instant::now();
                let mut evaluator = select::context_evaluator(
                    &ctx,
                    evaluator_kind,
                    cfg.truncation,
                    cfg.samples,
                    seed,
                );
                let result = match method {
                    SelectionMethod::Exhaustive => select::select_exhaustive(&inst, &mut evaluator),
                    SelectionMethod::GreedyBranching => {
                        select::select_greedy_branching(&inst, &mut evaluator)
                    }
                    SelectionMethod::TipProbabilityBaseline => {
                        select::select_tip_probability_baseline(&inst, &mut evaluator)
                    }
                }?;
                let elapsed = start.elapsed().as_secs_f64() * 1e3;
                let exact_value = exact_eval.evaluate(&result.chosen)?;
                table.push(vec![
                    seed.to_string(),
                    ny.to_string(),
                    method.to_string(),
                    evaluator_kind.to_string(),
                    set_code(&result.chosen),
                    cell(result.value),
                    cell(exact_value),
                    cell(reference.value - exact_value),
                    cell(elapsed),
                ]);
            }
        }
    }
    Ok(table)
}

/// Per-subset truncation and sampling errors against the exact value, with
/// the closed-form truncation bound, on two instances: one adversarial
/// (unit intensities, extreme payoffs) and one plain random, both with the
/// expected number of attacks capped at two.
pub fn truncation_experiment(
    seed: u64,
    truncation: usize,
    samples: u64,
) -> Result<CsvTable, ExperimentError> {
    let mut table = CsvTable::new(
        "truncation",
        &[
            "instance",
            "set_code",
            "exact",
            "truncated",
            "sampled",
            "truncation_error",
            "sampling_error",
            "bound",
        ],
    );
    let mut params = GenParams::new(6, 8, 6, 3, 6);
    params.sum_pv_cap = Some(2.0);
    for label in ["adversarial", "random"] {
        let mut inst = generate_instance(seed, &params)?;
        if label == "adversarial" {
            for e in &mut inst.graph.edges {
                e.w = 1.0;
            }
            for t in &mut inst.targets {
                t.reward_def = 2.0;
                t.penalty_def = -1e-3;
            }
        }
        let ctx = EvalContext::new(&inst)?;
        let nx = inst.graph.num_informants();
        for mask in 0u32..(1 << nx) {
            let members = InformantSet::new((0..nx).filter(|u| mask & (1 << u) != 0).collect());
            let exact = ctx.eval_exact(&members)?.value;
            let truncated = ctx.eval_truncated(&members, truncation)?;
            let sampled = ctx.eval_sampled(&members, samples, seed)?.value;
            table.push(vec![
                label.to_string(),
                mask.to_string(),
                cell(exact),
                cell(truncated.value),
                cell(sampled),
                cell((truncated.value - exact).abs()),
                cell((sampled - exact).abs()),
                truncated.error_bound.map(cell).unwrap_or_default(),
            ]);
        }
    }
    Ok(table)
}

/// Strong-intensity comparison: runtime and value of the size-enumeration
/// evaluator against exact enumeration and sampling when every intensity
/// is one.
pub fn strong_intensity_experiment(cfg: &SweepConfig) -> Result<CsvTable, ExperimentError> {
    let mut table = CsvTable::new(
        "sisi",
        &[
            "seed",
            "num_attackers",
            "method",
            "value",
            "error",
            "runtime_ms",
        ],
    );
    for &seed in &cfg.seeds {
        for &ny in &cfg.attacker_counts {
            let mut params = GenParams::new(
                cfg.num_informants,
                ny,
                cfg.num_targets,
                cfg.resources,
                cfg.recruit_budget,
            );
            params.sum_pv_cap = cfg.sum_pv_cap;
            let mut inst = generate_instance(seed, &params)?;
            for e in &mut inst.graph.edges {
                e.w = 1.0;
            }
            let ctx = EvalContext::new(&inst)?;
            let members = InformantSet::new(
                (0..cfg.recruit_budget.min(cfg.num_informants as u32) as usize).collect(),
            );
            let exact_start = Instant::now();
            let exact = ctx.eval_exact(&members)?.value;
            let exact_ms = exact_start.elapsed().as_secs_f64() * 1e3;
            for method in [
                EvalMethod::Exact,
                EvalMethod::StrongIntensity,
                EvalMethod::Sampled,
            ] {
                let start = Instant::now();
                let value = match method {
                    EvalMethod::Exact => exact,
                    EvalMethod::StrongIntensity => ctx.eval_strong_intensity(&members)?.value,
                    EvalMethod::Sampled => ctx.eval_sampled(&members, cfg.samples, seed)?.value,
                    _ => unreachable!(),
                };
                let ms = if method == EvalMethod::Exact {
                    exact_ms
                } else {
                    start.elapsed().as_secs_f64() * 1e3
                };
                table.push(vec![
                    seed.to_string(),
                    ny.to_string(),
                    method.to_string(),
                    cell(value),
                    cell((value - exact).abs()),
                    cell(ms),
                ]);
            }
        }
    }
    Ok(table)
}

/// Single-attacker comparison of the defender's utility against level-0
/// and fixed-point attackers, and of the bi-level optimum against the
/// level-0 strategy pair, on fully connected graphs.
pub fn fixed_point_experiment(
    seeds: &[u64],
    resource_list: &[u32],
    budget_list: &[usize],
    restarts: usize,
) -> Result<CsvTable, ExperimentError> {
    let mut table = CsvTable::new(
        "levelinf",
        &[
            "seed",
            "resources",
            "recruited",
            "tip_prob",
            "level0_defender_vs_level0",
            "level0_defender_vs_fixed_point",
            "bilevel_vs_fixed_point",
        ],
    );
    for &seed in seeds {
        for &r in resource_list {
            for &k in budget_list {
                let inst = single_attacker_instance(seed, r, k as u32)?;
                let (members, w) = qri::select_informants_by_w(&inst, k)?;
                let ctx = EvalContext::new(&inst)?;
                let value_l0 = ctx.eval_exact(&members)?.value;
                let (pair_value, _, _) =
                    bilevel::level0_pair_value(&inst.targets, inst.lambda, r, w, 1.0)?;
                let solution =
                    bilevel::outer_optimize(&inst.targets, inst.lambda, r, w, 1.0, restarts, seed)?;
                table.push(vec![
                    seed.to_string(),
                    r.to_string(),
                    k.to_string(),
                    cell(w),
                    cell(value_l0),
                    cell(pair_value),
                    cell(solution.def_eu),
                ]);
            }
        }
    }
    Ok(table)
}

/// Informant-aware attacker sweep: the informant-aware defender against
/// the informant-aware attacker, the level-0 defender (tips always
/// answered) against the same attacker, and the level-0 defender against
/// the level-0 attacker.
pub fn qri_experiment(
    seeds: &[u64],
    resource_list: &[u32],
    budget_list: &[usize],
    segments: usize,
) -> Result<CsvTable, ExperimentError> {
    let mut table = CsvTable::new(
        "qri",
        &[
            "seed",
            "resources",
            "recruited",
            "tip_prob",
            "qri_defender",
            "level0_defender_vs_qri",
            "level0_defender_vs_level0",
        ],
    );
    for &seed in seeds {
        for &r in resource_list {
            for &k in budget_list {
                let inst = single_attacker_instance(seed, r, k as u32)?;
                let (members, w) = qri::select_informants_by_w(&inst, k)?;
                let strategy = qri::solve_qri(&inst.targets, inst.lambda, r, w, segments)?;
                let routine = crate::routine::solve_routine(&inst)?;
                // The level-0 defender answers every tip: exposure is the
                // routine patrol pushed up by the tip probability.
                let exposure: Vec<f64> = routine
                    .coverage
                    .iter()
                    .map(|&x| (1.0 - w) * x + w)
                    .collect();
                let level0_vs_qri = qri::exposure_utility(&exposure, &inst.targets, inst.lambda);
                let ctx = EvalContext::new(&inst)?;
                let level0_vs_level0 = ctx.eval_exact(&members)?.value;
                table.push(vec![
                    seed.to_string(),
                    r.to_string(),
                    k.to_string(),
                    cell(w),
                    cell(strategy.objective),
                    cell(level0_vs_qri),
                    cell(level0_vs_level0),
                ]);
            }
        }
    }
    Ok(table)
}

/// Budget allocation trade-off on one instance: for each total budget, the
/// best split between resources and recruits.
pub fn tradeoff_experiment(
    seed: u64,
    budgets: &[f64],
    cost_resource: f64,
    cost_informant: f64,
) -> Result<CsvTable, ExperimentError> {
    let mut table = CsvTable::new(
        "tradeoff",
        &[
            "budget",
            "recruited",
            "resources",
            "value",
            "best_for_budget",
        ],
    );
    let inst = generate_instance(seed, &GenParams::new(6, 6, 6, 3, 6))?;
    for &budget in budgets {
        let (rows, best) = select::budget_tradeoff(&inst, budget, cost_resource, cost_informant)?;
        for (i, row) in rows.iter().enumerate() {
            table.push(vec![
                cell(budget),
                row.recruit_budget.to_string(),
                row.resources.to_string(),
                cell(row.value),
                (i == best).to_string(),
            ]);
        }
    }
    Ok(table)
}

/// A fully connected single-attacker instance in the style of the
/// fixed-point and informant-aware case studies.
pub fn single_attacker_instance(
    seed: u64,
    resources: u32,
    recruit_budget: u32,
) -> Result<crate::model::GameInstance, ExperimentError> {
    let mut params = GenParams::new(6, 1, 6, resources, recruit_budget);
    params.lambda = 2.0;
    let mut inst = generate_instance(seed, &params)?;
    inst.graph.attackers[0].attack_prob = 1.0;
    // Full bipartite connectivity with fresh intensities.
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x51_C0_DE));
    inst.graph.edges = inst
        .graph
        .informants
        .iter()
        .map(|u| crate::model::Edge {
            u: u.clone(),
            v: inst.graph.attackers[0].id.clone(),
            w: rng.random::<f64>() * 0.2,
        })
        .collect();
    Ok(inst)
}
