//! Python bindings for the security-game solver: instance handling,
//! recruitment evaluation and selection, level iteration, fixed points,
//! and the informant-aware and bi-level optimizers.
//!
//! Build the extension with `cargo build -p greensec-py --release` and
//! import the produced shared library as `greensec_py` (see
//! `python/smoke_test.py` for the copy-and-import dance without maturin).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use greensec::bilevel;
use greensec::eval::{EvalContext, EvalMethod};
use greensec::levelk;
use greensec::model::{self, CoverageVector, GenParams, TargetPayoffs};
use greensec::qri;
use greensec::routine;
use greensec::select;
use greensec::tips::InformantSet;

fn value_error(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn runtime_error(err: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(err.to_string())
}

fn targets_from(
    reward_def: &[f64],
    penalty_def: &[f64],
    reward_att: &[f64],
    penalty_att: &[f64],
) -> PyResult<Vec<TargetPayoffs>> {
    let n = reward_def.len();
    if penalty_def.len() != n || reward_att.len() != n || penalty_att.len() != n {
        return Err(value_error("payoff lists must have equal lengths"));
    }
    Ok((0..n)
        .map(|i| TargetPayoffs::new(reward_def[i], penalty_def[i], reward_att[i], penalty_att[i]))
        .collect())
}

/// A game instance: targets with payoffs, the informant-attacker graph,
/// resources, recruitment budget, and attacker precision.
#[pyclass(name = "GameInstance", skip_from_py_object)]
#[derive(Clone)]
struct PyGameInstance {
    inner: model::GameInstance,
}

type SelectOutcome = (Vec<String>, f64, usize);
type StrategyOutcome = (Vec<f64>, Vec<f64>, Vec<f64>, f64);

#[pymethods]
impl PyGameInstance {
    /// Parses the JSON instance file format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: model::GameInstance::from_json(text).map_err(value_error)?,
        })
    }

    /// Draws a seeded random instance.
    #[staticmethod]
    #[pyo3(signature = (seed, nx, ny, n, r, k, sum_pv_cap=None, lam=2.0, payoff_scale=2.0))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        seed: u64,
        nx: usize,
        ny: usize,
        n: usize,
        r: u32,
        k: u32,
        sum_pv_cap: Option<f64>,
        lam: f64,
        payoff_scale: f64,
    ) -> PyResult<Self> {
        let mut params = GenParams::new(nx, ny, n, r, k);
        params.sum_pv_cap = sum_pv_cap;
        params.lambda = lam;
        params.payoff_scale = payoff_scale;
        Ok(Self {
            inner: model::generate_instance(seed, &params).map_err(value_error)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Human-readable invariant violations; empty when well formed.
    fn validate(&self) -> Vec<String> {
        model::validate_instance(&self.inner)
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    #[getter]
    fn num_targets(&self) -> usize {
        self.inner.num_targets()
    }

    #[getter]
    fn informants(&self) -> Vec<String> {
        self.inner.graph.informants.clone()
    }

    #[getter]
    fn attackers(&self) -> Vec<(String, f64)> {
        self.inner
            .graph
            .attackers
            .iter()
            .map(|a| (a.id.clone(), a.attack_prob))
            .collect()
    }

    #[getter]
    fn resources(&self) -> u32 {
        self.inner.resources
    }

    #[getter]
    fn recruit_budget(&self) -> u32 {
        self.inner.recruit_budget
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    /// Optimal no-tip patrol: `(coverage, attack_distribution, value)`.
    fn solve_routine(&self) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
        let sol = routine::solve_routine(&self.inner).map_err(runtime_error)?;
        Ok((sol.coverage.0, sol.attack.0, sol.def_eu0))
    }

    /// Expected total utility of recruiting `members`, by the chosen
    /// method: exact | ctrunc | sampled | sisi | mc. `level` raises the
    /// attacker's reasoning level above quantal response to the routine.
    #[pyo3(signature = (members, method="exact", c=6, samples=100, episodes=1_000_000, seed=0, level=0))]
    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &self,
        members: Vec<String>,
        method: &str,
        c: usize,
        samples: u64,
        episodes: u64,
        seed: u64,
        level: usize,
    ) -> PyResult<(f64, Option<f64>)> {
        let set = InformantSet::from_ids(&self.inner, &members).map_err(value_error)?;
        let ctx = self.context_at_level(&set, level)?;
        let result = match method {
            "exact" => ctx.eval_exact(&set),
            "ctrunc" => ctx.eval_truncated(&set, c),
            "sampled" => ctx.eval_sampled(&set, samples, seed),
            "sisi" => ctx.eval_strong_intensity(&set),
            "mc" => ctx.eval_monte_carlo(&set, episodes, seed),
            other => return Err(value_error(format!("unknown method '{other}'"))),
        }
        .map_err(runtime_error)?;
        Ok((result.value, result.error_bound))
    }

    /// Selects an informant set: `(ids, value, evaluations)`. Methods:
    /// esa | gsa | greedy; evaluators as in `evaluate`.
    #[pyo3(signature = (method="esa", evaluator="exact", c=6, samples=100, seed=0))]
    fn select(
        &self,
        method: &str,
        evaluator: &str,
        c: usize,
        samples: u64,
        seed: u64,
    ) -> PyResult<SelectOutcome> {
        let ctx = EvalContext::new(&self.inner).map_err(runtime_error)?;
        let kind = match evaluator {
            "exact" => EvalMethod::Exact,
            "ctrunc" => EvalMethod::CTruncated,
            "sampled" => EvalMethod::Sampled,
            "sisi" => EvalMethod::StrongIntensity,
            other => return Err(value_error(format!("unknown evaluator '{other}'"))),
        };
        let mut set_evaluator = select::context_evaluator(&ctx, kind, c, samples, seed);
        let result = match method {
            "esa" => select::select_exhaustive(&self.inner, &mut set_evaluator),
            "gsa" => select::select_greedy_branching(&self.inner, &mut set_evaluator),
            "greedy" => select::select_tip_probability_baseline(&self.inner, &mut set_evaluator),
            other => return Err(value_error(format!("unknown method '{other}'"))),
        }
        .map_err(runtime_error)?;
        Ok((
            result.chosen.ids(&self.inner),
            result.value,
            result.evaluations_used,
        ))
    }

    /// Optimal strategy against the informant-aware attacker:
    /// `(default, tip_response, exposure, objective)`. The tip
    /// probability comes from the top-k informants unless given.
    #[pyo3(signature = (w=None, k=None, segments=10))]
    fn solve_qri(
        &self,
        w: Option<f64>,
        k: Option<usize>,
        segments: usize,
    ) -> PyResult<StrategyOutcome> {
        let w = match w {
            Some(w) => w,
            None => {
                let k = k.unwrap_or(self.inner.recruit_budget as usize);
                qri::select_informants_by_w(&self.inner, k)
                    .map_err(value_error)?
                    .1
            }
        };
        let strategy = qri::solve_qri(
            &self.inner.targets,
            self.inner.lambda,
            self.inner.resources,
            w,
            segments,
        )
        .map_err(runtime_error)?;
        Ok((
            strategy.default.0.clone(),
            strategy.tip_response.clone(),
            strategy.exposure.clone(),
            strategy.objective,
        ))
    }

    /// Bi-level optimum against the fixed-point attacker:
    /// `(marginal, attack, value, level0_pair_value)`.
    #[pyo3(signature = (w=None, k=None, p=1.0, restarts=8, seed=0))]
    fn solve_bilevel(
        &self,
        w: Option<f64>,
        k: Option<usize>,
        p: f64,
        restarts: usize,
        seed: u64,
    ) -> PyResult<(Vec<f64>, Vec<f64>, f64, f64)> {
        if self.inner.graph.num_attackers() != 1 {
            return Err(value_error("bi-level optimization needs a single attacker"));
        }
        let w = match w {
            Some(w) => w,
            None => {
                let k = k.unwrap_or(self.inner.recruit_budget as usize);
                qri::select_informants_by_w(&self.inner, k)
                    .map_err(value_error)?
                    .1
            }
        };
        let targets = &self.inner.targets;
        let (pair_value, _, _) =
            bilevel::level0_pair_value(targets, self.inner.lambda, self.inner.resources, w, p)
                .map_err(runtime_error)?;
        let solution = bilevel::outer_optimize(
            targets,
            self.inner.lambda,
            self.inner.resources,
            w,
            p,
            restarts,
            seed,
        )
        .map_err(runtime_error)?;
        Ok((
            solution.marginal.0.clone(),
            solution.attack.0.clone(),
            solution.def_eu,
            pair_value,
        ))
    }
}

impl PyGameInstance {
    fn context_at_level(&self, members: &InformantSet, level: usize) -> PyResult<EvalContext<'_>> {
        if level == 0 {
            return EvalContext::new(&self.inner).map_err(runtime_error);
        }
        let base = routine::solve_routine(&self.inner).map_err(runtime_error)?;
        let index = self.inner.index().map_err(value_error)?;
        let view = greensec::tips::RecruitView::build(&self.inner, &index, members.clone());
        let mut attack = base.attack.clone();
        for _ in 0..level {
            let marginal =
                levelk::marginal_strategy_general(&self.inner, &view, &base.coverage, &attack)
                    .map_err(runtime_error)?;
            attack = model::quantal_response(&marginal, &self.inner.targets, self.inner.lambda);
        }
        let def_eu = routine::single_attack_utility(&base.coverage, &attack, &self.inner.targets);
        EvalContext::with_attack(&self.inner, base.coverage, attack, def_eu).map_err(runtime_error)
    }
}

/// Quantal response to a believed coverage vector.
#[pyfunction]
fn quantal_response(
    belief: Vec<f64>,
    reward_att: Vec<f64>,
    penalty_att: Vec<f64>,
    lam: f64,
) -> PyResult<Vec<f64>> {
    let targets = targets_from(
        &vec![1.0; belief.len()],
        &vec![-1.0; belief.len()],
        &reward_att,
        &penalty_att,
    )?;
    if belief.len() != targets.len() {
        return Err(value_error("belief and payoff lengths differ"));
    }
    Ok(model::quantal_response(&belief, &targets, lam).0)
}

/// Level-by-level attacker iteration in the single-attacker case:
/// `(levels, converged, residual, cycle)`, where `levels` lists the attack
/// distribution per level and `cycle` the two alternating points if one
/// was detected.
#[pyfunction]
#[pyo3(signature = (x0, tips, w, reward_att, penalty_att, lam, max_level=1000, cycle_window=4))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn level_trace(
    x0: Vec<f64>,
    tips: Vec<Vec<f64>>,
    w: f64,
    reward_att: Vec<f64>,
    penalty_att: Vec<f64>,
    lam: f64,
    max_level: usize,
    cycle_window: usize,
) -> PyResult<(Vec<Vec<f64>>, bool, f64, Option<(Vec<f64>, Vec<f64>)>)> {
    let targets = targets_from(
        &vec![1.0; x0.len()],
        &vec![-1.0; x0.len()],
        &reward_att,
        &penalty_att,
    )?;
    let tip_strategies: Vec<CoverageVector> = tips.into_iter().map(CoverageVector).collect();
    let trace = levelk::iterate_levels_single(
        &x0,
        &tip_strategies,
        w,
        &targets,
        lam,
        max_level,
        cycle_window,
    )
    .map_err(value_error)?;
    Ok((
        trace.attack_seq.iter().map(|q| q.0.clone()).collect(),
        trace.converged,
        trace.residual,
        trace.cycle.map(|(a, b)| (a.0, b.0)),
    ))
}

/// Damped fixed-point solve of the single-attacker response:
/// `(q, residual, iterations, converged)`.
#[pyfunction]
#[pyo3(signature = (x0, tips, w, reward_att, penalty_att, lam, damping=0.5, tol=1e-6, max_iter=100_000))]
#[allow(clippy::too_many_arguments)]
fn fixed_point(
    x0: Vec<f64>,
    tips: Vec<Vec<f64>>,
    w: f64,
    reward_att: Vec<f64>,
    penalty_att: Vec<f64>,
    lam: f64,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<(Vec<f64>, f64, usize, bool)> {
    let targets = targets_from(
        &vec![1.0; x0.len()],
        &vec![-1.0; x0.len()],
        &reward_att,
        &penalty_att,
    )?;
    let tip_strategies: Vec<CoverageVector> = tips.into_iter().map(CoverageVector).collect();
    levelk::marginal_strategy_single(&x0, &tip_strategies, w, &vec![0.0; x0.len()])
        .map_err(value_error)?;
    let outcome = levelk::solve_fixed_point(
        &x0,
        |q| levelk::marginal_strategy_single(&x0, &tip_strategies, w, q).unwrap(),
        &targets,
        lam,
        damping,
        tol,
        max_iter,
    );
    Ok((
        outcome.attack.0,
        outcome.residual,
        outcome.iterations,
        outcome.converged,
    ))
}

#[pymodule]
fn greensec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGameInstance>()?;
    m.add_function(wrap_pyfunction!(quantal_response, m)?)?;
    m.add_function(wrap_pyfunction!(level_trace, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_point, m)?)?;
    Ok(())
}
