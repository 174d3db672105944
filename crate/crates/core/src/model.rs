//! Game data types, validation, the quantal-response function, and the
//! random instance generator used by the experiment drivers.
//!
//! An instance is a set of targets with defender/attacker payoffs, a
//! bipartite social graph between potential informants and potential
//! attackers, a resource count `r`, a recruitment budget `k`, and the
//! attacker precision `lambda`. All types are immutable after construction
//! and safe to share across threads.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Tolerance for normalization and feasibility checks on distributions.
pub const EPS_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("instance is invalid: {0}")]
    Invalid(Violation),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("generator requires at least one attacker")]
    EmptyAttackerSet,
    #[error("failed to read instance: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Per-target payoffs. Sign conventions: rewards are strictly positive,
/// penalties strictly negative. The defender earns `reward_def` when an
/// attacked target is covered and `penalty_def` otherwise; the attacker
/// earns `penalty_att` when caught and `reward_att` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetPayoffs {
    #[serde(rename = "rd")]
    pub reward_def: f64,
    #[serde(rename = "pd")]
    pub penalty_def: f64,
    #[serde(rename = "ra")]
    pub reward_att: f64,
    #[serde(rename = "pa")]
    pub penalty_att: f64,
}

impl TargetPayoffs {
    pub fn new(reward_def: f64, penalty_def: f64, reward_att: f64, penalty_att: f64) -> Self {
        Self {
            reward_def,
            penalty_def,
            reward_att,
            penalty_att,
        }
    }

    /// Defender gain from covering the target, `reward_def - penalty_def`.
    pub fn coverage_gain(&self) -> f64 {
        self.reward_def - self.penalty_def
    }

    /// Attacker utility of attacking under coverage probability `x`.
    pub fn attacker_utility(&self, x: f64) -> f64 {
        x * self.penalty_att + (1.0 - x) * self.reward_att
    }

    /// Defender utility of a single attack under coverage probability `x`.
    pub fn defender_utility(&self, x: f64) -> f64 {
        x * self.reward_def + (1.0 - x) * self.penalty_def
    }
}

/// A potential attacker in the social graph, attacking with probability `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attacker {
    pub id: String,
    #[serde(rename = "p")]
    pub attack_prob: f64,
}

/// An informant-attacker edge carrying an information sharing intensity:
/// the probability that informant `u` reports attacker `v` given `v`
/// attacks and `u` is recruited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: String,
    pub v: String,
    pub w: f64,
}

/// Bipartite social graph between potential informants and attackers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialGraph {
    pub informants: Vec<String>,
    pub attackers: Vec<Attacker>,
    pub edges: Vec<Edge>,
}

impl SocialGraph {
    pub fn num_informants(&self) -> usize {
        self.informants.len()
    }

    pub fn num_attackers(&self) -> usize {
        self.attackers.len()
    }

    pub fn informant_index(&self, id: &str) -> Option<usize> {
        self.informants.iter().position(|u| u == id)
    }

    pub fn attacker_index(&self, id: &str) -> Option<usize> {
        self.attackers.iter().position(|v| v.id == id)
    }

    /// Resolves edges to index-based adjacency lists. Fails on edges that
    /// reference undeclared endpoints or repeat an (informant, attacker) pair.
    pub fn index(&self) -> Result<GraphIndex, ModelError> {
        let mut informant_edges = vec![Vec::new(); self.informants.len()];
        let mut attacker_edges = vec![Vec::new(); self.attackers.len()];
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            let u = self
                .informant_index(&e.u)
                .ok_or_else(|| ModelError::Invalid(Violation::DanglingEdge(e.clone())))?;
            let v = self
                .attacker_index(&e.v)
                .ok_or_else(|| ModelError::Invalid(Violation::DanglingEdge(e.clone())))?;
            if !seen.insert((u, v)) {
                return Err(ModelError::Invalid(Violation::DuplicateEdge(e.clone())));
            }
            informant_edges[u].push((v, e.w));
            attacker_edges[v].push((u, e.w));
        }
        Ok(GraphIndex {
            informant_edges,
            attacker_edges,
        })
    }
}

/// Index-based adjacency for a [`SocialGraph`].
#[derive(Debug, Clone)]
pub struct GraphIndex {
    /// Per informant: `(attacker index, intensity)` pairs.
    pub informant_edges: Vec<Vec<(usize, f64)>>,
    /// Per attacker: `(informant index, intensity)` pairs.
    pub attacker_edges: Vec<Vec<(usize, f64)>>,
}

/// A full game instance. Serializes to the instance file format with fields
/// `targets`, `informants`, `attackers`, `edges`, `r`, `k`, `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameInstance {
    pub targets: Vec<TargetPayoffs>,
    #[serde(flatten)]
    pub graph: SocialGraph,
    #[serde(rename = "r")]
    pub resources: u32,
    #[serde(rename = "k")]
    pub recruit_budget: u32,
    pub lambda: f64,
}

impl GameInstance {
    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn index(&self) -> Result<GraphIndex, ModelError> {
        self.graph.index()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Errors with the first violation if the instance is not well formed.
    pub fn ensure_valid(&self) -> Result<(), ModelError> {
        match validate_instance(self).into_iter().next() {
            None => Ok(()),
            Some(v) => Err(ModelError::Invalid(v)),
        }
    }
}

/// One violated invariant found by [`validate_instance`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoTargets,
    PayoffSign {
        target: usize,
        field: &'static str,
        value: f64,
    },
    IntensityRange(Edge),
    AttackProbRange {
        id: String,
        value: f64,
    },
    DanglingEdge(Edge),
    DuplicateEdge(Edge),
    DuplicateId(String),
    NoResources,
    NegativeLambda(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoTargets => write!(f, "instance has no targets"),
            Violation::PayoffSign {
                target,
                field,
                value,
            } => write!(
                f,
                "target {target}: {field} = {value} violates its sign convention"
            ),
            Violation::IntensityRange(e) => write!(
                f,
                "edge ({}, {}): intensity {} outside [0, 1]",
                e.u, e.v, e.w
            ),
            Violation::AttackProbRange { id, value } => {
                write!(
                    f,
                    "attacker {id}: attack probability {value} outside [0, 1]"
                )
            }
            Violation::DanglingEdge(e) => {
                write!(
                    f,
                    "edge ({}, {}) references an undeclared endpoint",
                    e.u, e.v
                )
            }
            Violation::DuplicateEdge(e) => write!(f, "edge ({}, {}) appears twice", e.u, e.v),
            Violation::DuplicateId(id) => write!(f, "id {id} is declared twice"),
            Violation::NoResources => write!(f, "resource count r must be at least 1"),
            Violation::NegativeLambda(l) => write!(f, "lambda = {l} must be nonnegative"),
        }
    }
}

/// Checks every type invariant and returns the violations found (empty when
/// the instance is well formed). Violations are data, not errors.
pub fn validate_instance(inst: &GameInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    if inst.targets.is_empty() {
        out.push(Violation::NoTargets);
    }
    for (i, t) in inst.targets.iter().enumerate() {
        for (field, value, positive) in [
            ("reward_def", t.reward_def, true),
            ("penalty_def", t.penalty_def, false),
            ("reward_att", t.reward_att, true),
            ("penalty_att", t.penalty_att, false),
        ] {
            let ok = if positive { value > 0.0 } else { value < 0.0 };
            if !ok || !value.is_finite() {
                out.push(Violation::PayoffSign {
                    target: i,
                    field,
                    value,
                });
            }
        }
    }
    let mut ids = BTreeSet::new();
    for u in &inst.graph.informants {
        if !ids.insert(u.clone()) {
            out.push(Violation::DuplicateId(u.clone()));
        }
    }
    for v in &inst.graph.attackers {
        if !ids.insert(v.id.clone()) {
            out.push(Violation::DuplicateId(v.id.clone()));
        }
        if !(0.0..=1.0).contains(&v.attack_prob) {
            out.push(Violation::AttackProbRange {
                id: v.id.clone(),
                value: v.attack_prob,
            });
        }
    }
    let mut seen = BTreeSet::new();
    for e in &inst.graph.edges {
        if !(0.0..=1.0).contains(&e.w) {
            out.push(Violation::IntensityRange(e.clone()));
        }
        match (
            inst.graph.informant_index(&e.u),
            inst.graph.attacker_index(&e.v),
        ) {
            (Some(u), Some(v)) => {
                if !seen.insert((u, v)) {
                    out.push(Violation::DuplicateEdge(e.clone()));
                }
            }
            _ => out.push(Violation::DanglingEdge(e.clone())),
        }
    }
    if inst.resources < 1 {
        out.push(Violation::NoResources);
    }
    if inst.lambda.is_nan() || inst.lambda < 0.0 {
        out.push(Violation::NegativeLambda(inst.lambda));
    }
    out
}

/// Defender coverage probabilities over the targets, either a marginal
/// strategy or an attacker belief. Implementable strategies additionally
/// satisfy `sum <= r`; beliefs need not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageVector(pub Vec<f64>);

impl CoverageVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn in_unit_box(&self) -> bool {
        self.0
            .iter()
            .all(|&x| (-EPS_TOL..=1.0 + EPS_TOL).contains(&x))
    }

    /// Whether the vector is an implementable strategy for `r` resources.
    pub fn implementable(&self, resources: u32) -> bool {
        self.in_unit_box() && self.0.iter().sum::<f64>() <= resources as f64 + EPS_TOL
    }
}

impl std::ops::Deref for CoverageVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Per-target attack probabilities. Quantal-response outputs sum to one;
/// more generally the vector lies in the capped simplex `sum <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackDistribution(pub Vec<f64>);

impl AttackDistribution {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    pub fn in_simplex(&self) -> bool {
        self.0
            .iter()
            .all(|&q| (-EPS_TOL..=1.0 + EPS_TOL).contains(&q))
            && self.0.iter().sum::<f64>() <= 1.0 + EPS_TOL
    }
}

impl std::ops::Deref for AttackDistribution {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Quantal response of an attacker with precision `lambda` against a
/// believed coverage vector: a softmax over the attacker's expected
/// utilities. Utilities are shifted by their maximum before
/// exponentiation, so large `lambda` cannot overflow; `lambda = 0` yields
/// the uniform distribution.
pub fn quantal_response(
    belief: &[f64],
    targets: &[TargetPayoffs],
    lambda: f64,
) -> AttackDistribution {
    assert_eq!(belief.len(), targets.len(), "belief/target length mismatch");
    let utilities: Vec<f64> = belief
        .iter()
        .zip(targets)
        .map(|(&x, t)| lambda * t.attacker_utility(x))
        .collect();
    let shift = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = utilities.iter().map(|&u| (u - shift).exp()).collect();
    let total: f64 = weights.iter().sum();
    AttackDistribution(weights.into_iter().map(|w| w / total).collect())
}

/// Size parameters and distribution knobs for [`generate_instance`].
#[derive(Debug, Clone)]
pub struct GenParams {
    pub num_informants: usize,
    pub num_attackers: usize,
    pub num_targets: usize,
    pub resources: u32,
    pub recruit_budget: u32,
    /// Payoff magnitude bound `Q`: rewards in `(0, Q]`, penalties in `[-Q, 0)`.
    pub payoff_scale: f64,
    pub lambda: f64,
    /// Cap on the expected number of attacks: when set, attack
    /// probabilities are rescaled so their sum does not exceed it.
    pub sum_pv_cap: Option<f64>,
}

impl GenParams {
    pub fn new(
        num_informants: usize,
        num_attackers: usize,
        num_targets: usize,
        resources: u32,
        recruit_budget: u32,
    ) -> Self {
        Self {
            num_informants,
            num_attackers,
            num_targets,
            resources,
            recruit_budget,
            payoff_scale: 2.0,
            lambda: 2.0,
            sum_pv_cap: None,
        }
    }

    pub fn with_sum_pv_cap(mut self, cap: f64) -> Self {
        self.sum_pv_cap = Some(cap);
        self
    }
}

/// Draws a random game instance. Each informant's degree is uniform on
/// `{1, ..., |Y|}` with a uniformly random neighbor set of that size;
/// intensities are U[0, 0.2]; attack probabilities are U[0.4, 1] or, when
/// a cap `C'` is given, `min(1, C' * t_v / ||t||_1)` with `t` uniform on
/// the unit cube; rewards are U(0, Q] and penalties U[-Q, 0). The result
/// is deterministic for a fixed seed.
pub fn generate_instance(seed: u64, params: &GenParams) -> Result<GameInstance, ModelError> {
    if params.num_attackers == 0 {
        return Err(ModelError::EmptyAttackerSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ny = params.num_attackers;
    let q_scale = params.payoff_scale;

    let informants: Vec<String> = (1..=params.num_informants)
        .map(|i| format!("u{i}"))
        .collect();
    let attacker_ids: Vec<String> = (1..=ny).map(|i| format!("v{i}")).collect();

    let mut edges = Vec::new();
    for u in &informants {
        let degree = rng.random_range(1..=ny);
        let mut neighbors: Vec<usize> = sample_indices(&mut rng, ny, degree).into_vec();
        neighbors.sort_unstable();
        for v in neighbors {
            edges.push(Edge {
                u: u.clone(),
                v: attacker_ids[v].clone(),
                w: rng.random::<f64>() * 0.2,
            });
        }
    }

    let attack_probs: Vec<f64> = match params.sum_pv_cap {
        None => (0..ny).map(|_| 0.4 + 0.6 * rng.random::<f64>()).collect(),
        Some(cap) => {
            let t: Vec<f64> = (0..ny).map(|_| rng.random::<f64>()).collect();
            let norm: f64 = t.iter().sum();
            t.iter().map(|&tv| (cap * tv / norm).min(1.0)).collect()
        }
    };
    let attackers = attacker_ids
        .into_iter()
        .zip(attack_probs)
        .map(|(id, attack_prob)| Attacker { id, attack_prob })
        .collect();

    let targets = (0..params.num_targets)
        .map(|_| {
            // 1 - u maps [0, 1) onto (0, 1], keeping rewards strictly positive.
            let reward_def = q_scale * (1.0 - rng.random::<f64>());
            let penalty_def = -q_scale * (1.0 - rng.random::<f64>());
            let reward_att = q_scale * (1.0 - rng.random::<f64>());
            let penalty_att = -q_scale * (1.0 - rng.random::<f64>());
            TargetPayoffs::new(reward_def, penalty_def, reward_att, penalty_att)
        })
        .collect();

    Ok(GameInstance {
        targets,
        graph: SocialGraph {
            informants,
            attackers,
            edges,
        },
        resources: params.resources,
        recruit_budget: params.recruit_budget,
        lambda: params.lambda,
    })
}
