//! Tip machinery for a recruited informant set: report intensities,
//! posterior attack probabilities, reported-set probabilities, per-target
//! expected utilities and gains, the greedy optimal allocation, and tip
//! sampling.
//!
//! Attackers and informants are referred to by index into the instance
//! graph. Reported sets are sorted index vectors.

use rand::Rng;

use crate::model::{AttackDistribution, GameInstance, GraphIndex, ModelError, TargetPayoffs};

/// A recruited subset of the informants, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformantSet {
    members: Vec<usize>,
}

impl InformantSet {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self { members }
    }

    pub fn empty() -> Self {
        Self {
            members: Vec::new(),
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, informant: usize) -> bool {
        self.members.binary_search(&informant).is_ok()
    }

    pub fn with(&self, informant: usize) -> Self {
        let mut members = self.members.clone();
        members.push(informant);
        Self::new(members)
    }

    /// Resolves informant ids against an instance graph.
    pub fn from_ids(inst: &GameInstance, ids: &[impl AsRef<str>]) -> Result<Self, ModelError> {
        let mut members = Vec::with_capacity(ids.len());
        for id in ids {
            let idx =
                inst.graph
                    .informant_index(id.as_ref())
                    .ok_or(ModelError::DimensionMismatch {
                        expected: inst.graph.num_informants(),
                        got: usize::MAX,
                    })?;
            members.push(idx);
        }
        Ok(Self::new(members))
    }

    pub fn ids(&self, inst: &GameInstance) -> Vec<String> {
        self.members
            .iter()
            .map(|&u| inst.graph.informants[u].clone())
            .collect()
    }
}

/// Derived data for one recruited set: the reachable attackers and every
/// attacker's probability of being reported given he attacks.
#[derive(Debug, Clone)]
pub struct RecruitView {
    pub members: InformantSet,
    /// Attackers adjacent to at least one recruited informant, sorted.
    pub reachable: Vec<usize>,
    /// Per attacker: probability of being reported given he attacks
    /// (zero for unreachable attackers).
    pub report_prob: Vec<f64>,
}

impl RecruitView {
    pub fn build(inst: &GameInstance, index: &GraphIndex, members: InformantSet) -> Self {
        let ny = inst.graph.num_attackers();
        let mut report_prob = vec![0.0; ny];
        let mut reachable = Vec::new();
        for (v, edges) in index.attacker_edges.iter().enumerate() {
            let mut miss = 1.0;
            let mut connected = false;
            for &(u, w) in edges {
                if members.contains(u) {
                    connected = true;
                    miss *= 1.0 - w;
                }
            }
            if connected {
                reachable.push(v);
                report_prob[v] = 1.0 - miss;
            }
        }
        Self {
            members,
            reachable,
            report_prob,
        }
    }

    pub fn is_reachable(&self, attacker: usize) -> bool {
        self.reachable.binary_search(&attacker).is_ok()
    }

    /// Whether every edge from a recruited informant has intensity one.
    pub fn strong_intensity(&self, index: &GraphIndex) -> bool {
        self.members
            .members()
            .iter()
            .all(|&u| index.informant_edges[u].iter().all(|&(_, w)| w == 1.0))
    }
}

/// Probability that `attacker` is reported given he attacks: one minus the
/// product of `(1 - w)` over recruited neighbors, zero with none.
pub fn report_intensity(view: &RecruitView, attacker: usize) -> f64 {
    view.report_prob[attacker]
}

/// Posterior probability that `attacker` attacks, given the reported set.
/// Reported attackers attack surely; unreported-but-reachable attackers are
/// discounted by the failure to report; unreachable attackers keep their
/// prior. The certain-report/certain-attack corner (`w = p = 1`, yet
/// unreported) resolves to zero.
pub fn posterior_attack_prob(
    inst: &GameInstance,
    view: &RecruitView,
    attacker: usize,
    reported: &[usize],
) -> f64 {
    if reported.contains(&attacker) {
        return 1.0;
    }
    let p = inst.graph.attackers[attacker].attack_prob;
    if !view.is_reachable(attacker) {
        return p;
    }
    let miss = 1.0 - view.report_prob[attacker];
    let denom = miss * p + 1.0 - p;
    if denom <= 0.0 {
        return 0.0;
    }
    miss * p / denom
}

/// Total posterior attack mass of attackers outside the reported set.
pub fn unreported_attack_mass(inst: &GameInstance, view: &RecruitView, reported: &[usize]) -> f64 {
    (0..inst.graph.num_attackers())
        .filter(|v| !reported.contains(v))
        .map(|v| posterior_attack_prob(inst, view, v, reported))
        .sum()
}

/// Probability that exactly `reported` is the set of reported attackers:
/// the product of report probabilities over members and of their
/// complements over the remaining reachable attackers.
pub fn reported_set_prob(inst: &GameInstance, view: &RecruitView, reported: &[usize]) -> f64 {
    debug_assert!(reported.iter().all(|v| view.is_reachable(*v)));
    let mut prob = 1.0;
    for &v in &view.reachable {
        let hit = view.report_prob[v] * inst.graph.attackers[v].attack_prob;
        prob *= if reported.contains(&v) {
            hit
        } else {
            1.0 - hit
        };
    }
    prob
}

/// Expected utility of target `i` when covered, given `reported_on_target`
/// tips on it and the posterior mass of unreported attacks.
pub fn expected_utility_covered(
    payoffs: &TargetPayoffs,
    reported_on_target: usize,
    attack_share: f64,
    unreported_mass: f64,
) -> f64 {
    (reported_on_target as f64 + attack_share * unreported_mass) * payoffs.reward_def
}

/// Expected utility of target `i` when left uncovered.
pub fn expected_utility_uncovered(
    payoffs: &TargetPayoffs,
    reported_on_target: usize,
    attack_share: f64,
    unreported_mass: f64,
) -> f64 {
    (reported_on_target as f64 + attack_share * unreported_mass) * payoffs.penalty_def
}

/// Expected gain from covering target `i`: the covered minus the
/// uncovered expected utility, which scales with `reward - penalty`.
pub fn expected_gain(
    payoffs: &TargetPayoffs,
    reported_on_target: usize,
    attack_share: f64,
    unreported_mass: f64,
) -> f64 {
    (reported_on_target as f64 + attack_share * unreported_mass) * payoffs.coverage_gain()
}

/// A full tip vector: per target, the attackers reported to attack it.
/// The per-target sets are disjoint; their union is the reported set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TipVector(pub Vec<Vec<usize>>);

impl TipVector {
    pub fn empty(num_targets: usize) -> Self {
        Self(vec![Vec::new(); num_targets])
    }

    pub fn reported_set(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.0.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    pub fn counts(&self) -> Vec<usize> {
        self.0.iter().map(Vec::len).collect()
    }
}

/// Ranks `i` ahead of `j` under the expected-gain order with ties broken
/// by the lower target index. The same order drives both the greedy
/// allocation and the coverage-probability dynamic program.
pub fn beats(gain_i: f64, i: usize, gain_j: f64, j: usize) -> bool {
    gain_i > gain_j || (gain_i == gain_j && i < j)
}

/// Optimal allocation against a tip vector: covers the `r` targets with the
/// highest expected gains (ties to the lower index). Runs in `O(|Y| + n)`
/// beyond the per-target gain computation.
pub fn greedy_allocate(
    inst: &GameInstance,
    view: &RecruitView,
    tips: &TipVector,
    attack: &AttackDistribution,
) -> Vec<usize> {
    let n = inst.num_targets();
    let r = inst.resources as usize;
    let reported = tips.reported_set();
    let mass = unreported_attack_mass(inst, view, &reported);
    let gains: Vec<f64> = (0..n)
        .map(|i| expected_gain(&inst.targets[i], tips.0[i].len(), attack[i], mass))
        .collect();
    top_targets_by_gain(&gains, r)
}

/// Selects the `r` top-ranked targets under [`beats`], returned sorted.
pub fn top_targets_by_gain(gains: &[f64], r: usize) -> Vec<usize> {
    let n = gains.len();
    if r >= n {
        return (0..n).collect();
    }
    if r == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    // Average-linear selection of the top r; total order from `beats`.
    order.select_nth_unstable_by(r - 1, |&a, &b| {
        if beats(gains[a], a, gains[b], b) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    let mut covered = order[..r].to_vec();
    covered.sort_unstable();
    covered
}

/// Draws a reported set: each reachable attacker is included independently
/// with probability `report_prob * attack_prob`, matching the
/// reported-set distribution.
pub fn sample_reported_set(
    inst: &GameInstance,
    view: &RecruitView,
    rng: &mut impl Rng,
) -> Vec<usize> {
    view.reachable
        .iter()
        .copied()
        .filter(|&v| {
            let hit = view.report_prob[v] * inst.graph.attackers[v].attack_prob;
            rng.random::<f64>() < hit
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Attacker, Edge, SocialGraph};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(edges: Vec<(&str, &str, f64)>, probs: &[(&str, f64)]) -> GameInstance {
        GameInstance {
            targets: vec![
                TargetPayoffs::new(1.0, -1.0, 1.0, -1.0),
                TargetPayoffs::new(2.0, -0.5, 1.5, -0.25),
            ],
            graph: SocialGraph {
                informants: vec!["u1".into(), "u2".into()],
                attackers: probs
                    .iter()
                    .map(|(id, p)| Attacker {
                        id: (*id).into(),
                        attack_prob: *p,
                    })
                    .collect(),
                edges: edges
                    .into_iter()
                    .map(|(u, v, w)| Edge {
                        u: u.into(),
                        v: v.into(),
                        w,
                    })
                    .collect(),
            },
            resources: 1,
            recruit_budget: 2,
            lambda: 1.0,
        }
    }

    fn view_for(inst: &GameInstance, members: &[usize]) -> RecruitView {
        let index = inst.index().unwrap();
        RecruitView::build(inst, &index, InformantSet::new(members.to_vec()))
    }

    #[test]
    fn no_recruits_means_no_reports() {
        let inst = instance(vec![("u1", "v1", 0.8)], &[("v1", 0.5)]);
        let view = view_for(&inst, &[]);
        assert_eq!(report_intensity(&view, 0), 0.0);
        assert!(view.reachable.is_empty());
    }

    #[test]
    fn certain_edge_reports_surely() {
        let inst = instance(vec![("u1", "v1", 1.0)], &[("v1", 0.5)]);
        let view = view_for(&inst, &[0]);
        assert_eq!(report_intensity(&view, 0), 1.0);
    }

    #[test]
    fn two_half_edges_compose() {
        let inst = instance(vec![("u1", "v1", 0.5), ("u2", "v1", 0.5)], &[("v1", 0.5)]);
        let view = view_for(&inst, &[0, 1]);
        assert!((report_intensity(&view, 0) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn posterior_cases() {
        let inst = instance(
            vec![("u1", "v1", 0.5), ("u1", "v2", 1.0)],
            &[("v1", 0.5), ("v2", 0.7), ("v3", 0.3)],
        );
        let view = view_for(&inst, &[0]);
        // Reported: certain attack.
        assert_eq!(posterior_attack_prob(&inst, &view, 0, &[0]), 1.0);
        // Reachable with certain reporting, unreported: cannot be attacking.
        assert_eq!(posterior_attack_prob(&inst, &view, 1, &[]), 0.0);
        // Unreachable: prior.
        assert_eq!(posterior_attack_prob(&inst, &view, 2, &[]), 0.3);
        // p = 0.5, report prob 0.5, unreported: 0.25 / 0.75 = 1/3.
        let p = posterior_attack_prob(&inst, &view, 0, &[]);
        assert!((p - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn certain_attacker_certain_report_unreported_is_zero() {
        let inst = instance(vec![("u1", "v1", 1.0)], &[("v1", 1.0)]);
        let view = view_for(&inst, &[0]);
        assert_eq!(posterior_attack_prob(&inst, &view, 0, &[]), 0.0);
    }

    #[test]
    fn reported_set_probabilities() {
        // Two reachable attackers with report-times-attack mass one half.
        let inst = instance(
            vec![("u1", "v1", 1.0), ("u1", "v2", 1.0)],
            &[("v1", 0.5), ("v2", 0.5)],
        );
        let view = view_for(&inst, &[0]);
        assert!((reported_set_prob(&inst, &view, &[0]) - 0.25).abs() < 1e-12);
        let empty_view = view_for(&inst, &[]);
        assert_eq!(reported_set_prob(&inst, &empty_view, &[]), 1.0);
    }

    #[test]
    fn reported_set_probability_sums_to_one() {
        let inst = instance(
            vec![
                ("u1", "v1", 0.3),
                ("u1", "v2", 0.9),
                ("u2", "v2", 0.4),
                ("u2", "v3", 0.7),
            ],
            &[("v1", 0.5), ("v2", 0.8), ("v3", 0.25)],
        );
        let view = view_for(&inst, &[0, 1]);
        let m = view.reachable.len();
        let mut total = 0.0;
        for mask in 0..(1usize << m) {
            let reported: Vec<usize> = view
                .reachable
                .iter()
                .enumerate()
                .filter(|(pos, _)| mask & (1 << pos) != 0)
                .map(|(_, v)| *v)
                .collect();
            total += reported_set_prob(&inst, &view, &reported);
        }
        assert!((total - 1.0).abs() < 1e-12);

        // Same check at enumeration scale: a dozen reachable attackers.
        let inst =
            crate::model::generate_instance(21, &crate::model::GenParams::new(4, 12, 3, 2, 4))
                .unwrap();
        let view = view_for(&inst, &[0, 1, 2, 3]);
        let m = view.reachable.len();
        assert!(m >= 10, "want a large reachable set, got {m}");
        let mut total = 0.0;
        for mask in 0..(1usize << m) {
            let reported: Vec<usize> = view
                .reachable
                .iter()
                .enumerate()
                .filter(|(pos, _)| mask & (1 << pos) != 0)
                .map(|(_, v)| *v)
                .collect();
            total += reported_set_prob(&inst, &view, &reported);
        }
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gain_is_zero_without_mass() {
        let t = TargetPayoffs::new(2.0, -1.0, 1.0, -1.0);
        assert_eq!(expected_gain(&t, 0, 0.5, 0.0), 0.0);
        assert!((expected_gain(&t, 2, 0.5, 1.0) - 2.5 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn allocation_covers_everything_with_enough_resources() {
        let mut inst = instance(vec![("u1", "v1", 0.5)], &[("v1", 0.5)]);
        inst.resources = 2;
        let view = view_for(&inst, &[0]);
        let tips = TipVector(vec![vec![0], vec![]]);
        let q = AttackDistribution(vec![0.5, 0.5]);
        assert_eq!(greedy_allocate(&inst, &view, &tips, &q), vec![0, 1]);
    }

    #[test]
    fn allocation_ties_break_to_lower_index() {
        let gains = [1.0, 1.0, 0.5];
        assert_eq!(top_targets_by_gain(&gains, 1), vec![0]);
        assert_eq!(top_targets_by_gain(&gains, 2), vec![0, 1]);
    }

    #[test]
    fn sampling_matches_bernoulli_rate() {
        let inst = instance(vec![("u1", "v1", 0.5)], &[("v1", 1.0)]);
        let view = view_for(&inst, &[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let trials = 100_000;
        let hits: usize = (0..trials)
            .map(|_| sample_reported_set(&inst, &view, &mut rng).len())
            .sum();
        let rate = hits as f64 / trials as f64;
        assert!((rate - 0.5).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn degenerate_sampling_is_deterministic() {
        let inst = instance(
            vec![("u1", "v1", 1.0), ("u1", "v2", 0.0)],
            &[("v1", 1.0), ("v2", 1.0)],
        );
        let view = view_for(&inst, &[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            assert_eq!(sample_reported_set(&inst, &view, &mut rng), vec![0]);
        }
    }

    #[test]
    fn posterior_never_increases_with_intensity() {
        let probs = [("v1", 0.6)];
        let mut last = f64::INFINITY;
        for step in 0..=10 {
            let w = step as f64 / 10.0;
            let inst = instance(vec![("u1", "v1", w)], &probs);
            let view = view_for(&inst, &[0]);
            let p = posterior_attack_prob(&inst, &view, 0, &[]);
            assert!(p <= last + 1e-12);
            last = p;
        }
    }
}
