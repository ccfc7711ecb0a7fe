//! Stability-gated Q-table for single-adaptive recursive functions.
//!
//! A `(context, action)` pair is *stable* once it has been updated `t` times
//! and a context is stable once all its actions are. Unstable contexts try
//! their actions in order; stable ones pick the lowest average cost. An
//! update is accepted only when every context visited below the updated call
//! was already stable, so learning proceeds from the recursion leaves upward
//! and the table performs at most `t * N * A` updates in total.
//!
//! [`SyntheticSarf`] is a small recursive program with known expected costs,
//! used to check that the learned policy is optimal with the probability
//! promised by [`learning_threshold`].

use std::collections::BTreeMap;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{entries, Adaptive, ContextMap};
use crate::combinators::trans_by;
use crate::error::{invalid, Result};
use crate::rng::{self, Rng};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QEntry {
    pub count: u64,
    pub avg_cost: f64,
}

/// Feedback produced by one call of a recursive adaptive program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeFeedback<C, Act> {
    pub context: C,
    pub action: Act,
    pub cost: f64,
    /// Every context visited strictly below this call was stable.
    pub descendants_stable: bool,
}

impl<C, Act> EpisodeFeedback<C, Act> {
    pub fn new(context: C, action: Act, cost: f64, descendants_stable: bool) -> Result<Self> {
        if !cost.is_finite() {
            return Err(invalid("cost", "episode cost must be finite"));
        }
        Ok(Self {
            context,
            action,
            cost,
            descendants_stable,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "C: Serialize, Act: Serialize",
    deserialize = "C: Deserialize<'de> + Ord, Act: Deserialize<'de>"
))]
pub struct QTable<C: Ord, Act> {
    actions: Vec<Act>,
    threshold: u64,
    #[serde(with = "entries")]
    entries: BTreeMap<C, Vec<QEntry>>,
}

impl<C: Ord + Clone, Act: Clone + PartialEq> QTable<C, Act> {
    pub fn new(actions: Vec<Act>, threshold: u64) -> Result<Self> {
        if actions.is_empty() {
            return Err(invalid("actions", "at least one action is required"));
        }
        if threshold == 0 {
            return Err(invalid("threshold", "learning threshold must be positive"));
        }
        for (i, a) in actions.iter().enumerate() {
            if actions[..i].contains(a) {
                return Err(invalid("actions", "actions must be distinct"));
            }
        }
        Ok(Self {
            actions,
            threshold,
            entries: BTreeMap::new(),
        })
    }

    pub fn actions(&self) -> &[Act] {
        &self.actions
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    /// Entries of `context` in action order; unseen contexts read as zeros.
    pub fn row(&self, context: &C) -> Vec<QEntry> {
        self.entries
            .get(context)
            .cloned()
            .unwrap_or_else(|| vec![QEntry::default(); self.actions.len()])
    }

    pub fn contexts(&self) -> impl Iterator<Item = &C> {
        self.entries.keys()
    }

    pub fn is_stable(&self, context: &C) -> bool {
        match self.entries.get(context) {
            Some(row) => row.iter().all(|e| e.count >= self.threshold),
            None => false,
        }
    }

    pub fn value_at(&self, context: &C) -> Act {
        let Some(row) = self.entries.get(context) else {
            return self.actions[0].clone();
        };
        if let Some(i) = row.iter().position(|e| e.count < self.threshold) {
            return self.actions[i].clone();
        }
        let mut best = 0;
        for (i, e) in row.iter().enumerate() {
            if e.avg_cost < row[best].avg_cost {
                best = i;
            }
        }
        self.actions[best].clone()
    }

    pub fn total_updates(&self) -> u64 {
        self.entries.values().flatten().map(|e| e.count).sum()
    }

    /// Whether `fb` would change the table.
    pub fn accepts(&self, fb: &EpisodeFeedback<C, Act>) -> bool {
        if !fb.descendants_stable || !fb.cost.is_finite() {
            return false;
        }
        match self.actions.iter().position(|a| *a == fb.action) {
            Some(i) => self.row(&fb.context)[i].count < self.threshold,
            None => false,
        }
    }
}

impl<C: Ord + Clone, Act: Clone + PartialEq> Adaptive for QTable<C, Act> {
    /// Current choice per seen context; unseen contexts pick the first action.
    type Value = ContextMap<C, Act>;
    type Feedback = EpisodeFeedback<C, Act>;

    fn value(&self) -> Self::Value {
        ContextMap {
            default: self.actions[0].clone(),
            entries: self
                .entries
                .keys()
                .map(|c| (c.clone(), self.value_at(c)))
                .collect(),
        }
    }

    fn adapt(&self, fb: Self::Feedback) -> Self {
        if !self.accepts(&fb) {
            return self.clone();
        }
        let i = self
            .actions
            .iter()
            .position(|a| *a == fb.action)
            .expect("accepted feedback names a known action");
        let mut next = self.clone();
        let row = next
            .entries
            .entry(fb.context)
            .or_insert_with(|| vec![QEntry::default(); self.actions.len()]);
        let e = &mut row[i];
        e.avg_cost = crate::action::run_avg(e.count, e.avg_cost, fb.cost);
        e.count += 1;
        next
    }
}

/// Smallest integer `t` with `t > 4 ε⁻² ln(N·A/δ)`.
pub fn learning_threshold(epsilon: f64, delta: f64, n_contexts: u64, n_actions: u64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon", "must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    if n_contexts == 0 || n_actions == 0 {
        return Err(invalid("contexts", "context and action counts must be positive"));
    }
    let bound = 4.0 / (epsilon * epsilon) * ((n_contexts * n_actions) as f64 / delta).ln();
    Ok(bound.floor() as u64 + 1)
}

/// A bounded cost distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CostDist {
    Constant(f64),
    /// `scale` with probability `p`, else 0.
    Bernoulli { p: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl CostDist {
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match *self {
            CostDist::Constant(c) => c,
            CostDist::Bernoulli { p, scale } => {
                if rng.random::<f64>() < p {
                    scale
                } else {
                    0.0
                }
            }
            CostDist::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            CostDist::Constant(c) => c,
            CostDist::Bernoulli { p, scale } => p * scale,
            CostDist::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn max(&self) -> f64 {
        match *self {
            CostDist::Constant(c) => c,
            CostDist::Bernoulli { scale, .. } => scale,
            CostDist::Uniform { hi, .. } => hi,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            CostDist::Constant(c) => c >= 0.0 && c.is_finite(),
            CostDist::Bernoulli { p, scale } => (0.0..=1.0).contains(&p) && scale >= 0.0 && scale.is_finite(),
            CostDist::Uniform { lo, hi } => lo >= 0.0 && lo <= hi && hi.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("cost", format!("invalid cost distribution {self:?}")))
        }
    }
}

/// What a call in context `c` does when it takes a given action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SarfNode {
    pub own_cost: CostDist,
    /// Contexts of the recursive calls; each must be lower than the caller's.
    pub children: Vec<usize>,
}

/// A synthetic recursive program with one principled adaptive.
///
/// Contexts are `0..N`, actions `0..A`. A call's cost is its own sampled cost
/// plus the cost of its recursive calls. Costs fed to the table are divided
/// by the worst-case total cost, so they lie in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSarf {
    nodes: Vec<Vec<SarfNode>>,
    input_weights: Vec<f64>,
    cost_max: f64,
}

/// One run of the program on one input.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    /// `(context, action)` in the order calls completed.
    pub visited: Vec<(usize, usize)>,
    /// Normalized cost of the whole run.
    pub cost: f64,
    pub feedbacks: Vec<EpisodeFeedback<usize, usize>>,
}

impl SyntheticSarf {
    /// `nodes[c][a]` describes context `c` under action `a`.
    pub fn new(nodes: Vec<Vec<SarfNode>>, input_weights: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(invalid("contexts", "at least one context is required"));
        }
        let a = nodes[0].len();
        if a == 0 || nodes.iter().any(|row| row.len() != a) {
            return Err(invalid("actions", "every context needs the same non-zero number of actions"));
        }
        for (c, row) in nodes.iter().enumerate() {
            for node in row {
                node.own_cost.validate()?;
                if node.children.iter().any(|&child| child >= c) {
                    return Err(invalid(
                        "children",
                        format!("context {c} recurses into a context that is not lower"),
                    ));
                }
            }
        }
        if input_weights.len() != n
            || input_weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
            || input_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(invalid("input_weights", "need one non-negative weight per context, not all zero"));
        }
        let mut worst = vec![0.0f64; n];
        for c in 0..n {
            worst[c] = nodes[c]
                .iter()
                .map(|node| node.own_cost.max() + node.children.iter().map(|&k| worst[k]).sum::<f64>())
                .fold(0.0, f64::max);
        }
        let cost_max = worst.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            nodes,
            input_weights,
            cost_max: if cost_max > 0.0 { cost_max } else { 1.0 },
        })
    }

    /// A descending chain: every call in context `k > 0` recurses once into
    /// `k - 1`. Each context has one optimal action, placed at random, whose
    /// expected normalized cost is exactly `epsilon` below the others'.
    pub fn chain(n_contexts: usize, n_actions: usize, epsilon: f64, rng: &mut Rng) -> Result<Self> {
        if n_contexts == 0 || n_actions < 2 {
            return Err(invalid("actions", "a chain needs at least one context and two actions"));
        }
        let spread = epsilon * n_contexts as f64;
        if !(epsilon > 0.0 && spread <= 1.0) {
            return Err(invalid(
                "epsilon",
                format!("gap {epsilon} is not realizable with {n_contexts} contexts (need 0 < epsilon <= 1/contexts)"),
            ));
        }
        let scale = 1.0 / n_contexts as f64;
        let p_best = (1.0 - spread) / 2.0;
        let nodes = (0..n_contexts)
            .map(|c| {
                let best = rng.random_range(0..n_actions);
                (0..n_actions)
                    .map(|a| SarfNode {
                        own_cost: CostDist::Bernoulli {
                            p: if a == best { p_best } else { p_best + spread },
                            scale,
                        },
                        children: if c == 0 { vec![] } else { vec![c - 1] },
                    })
                    .collect()
            })
            .collect();
        Self::new(nodes, vec![1.0; n_contexts])
    }

    pub fn n_contexts(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_actions(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn cost_max(&self) -> f64 {
        self.cost_max
    }

    pub fn nodes(&self) -> &[Vec<SarfNode>] {
        &self.nodes
    }

    /// Expected normalized cost of each action when every lower context
    /// plays its optimal action.
    pub fn expected_costs(&self) -> Vec<Vec<f64>> {
        let mut best_raw = vec![0.0; self.n_contexts()];
        let mut q = Vec::with_capacity(self.n_contexts());
        for row in &self.nodes {
            let raw: Vec<f64> = row
                .iter()
                .map(|node| node.own_cost.mean() + node.children.iter().map(|&k| best_raw[k]).sum::<f64>())
                .collect();
            best_raw[q.len()] = raw.iter().copied().fold(f64::INFINITY, f64::min);
            q.push(raw.into_iter().map(|r| r / self.cost_max).collect());
        }
        q
    }

    /// Actions achieving the minimum expected cost in each context.
    pub fn optimal_actions(&self) -> Vec<Vec<usize>> {
        self.expected_costs()
            .iter()
            .map(|row| {
                let min = row.iter().copied().fold(f64::INFINITY, f64::min);
                (0..row.len()).filter(|&a| row[a] == min).collect()
            })
            .collect()
    }

    /// Smallest gap between the best and second-best expected cost.
    pub fn min_gap(&self) -> f64 {
        self.expected_costs()
            .iter()
            .map(|row| {
                let mut sorted = row.clone();
                sorted.sort_by(f64::total_cmp);
                sorted.get(1).map_or(f64::INFINITY, |s| s - sorted[0])
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sample_input(&self, rng: &mut Rng) -> usize {
        let total: f64 = self.input_weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (c, w) in self.input_weights.iter().enumerate() {
            if u < *w {
                return c;
            }
            u -= w;
        }
        self.input_weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }

    /// Contexts an input can ever reach.
    pub fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n_contexts()];
        let mut stack: Vec<usize> = (0..self.n_contexts()).filter(|&c| self.input_weights[c] > 0.0).collect();
        while let Some(c) = stack.pop() {
            if std::mem::replace(&mut seen[c], true) {
                continue;
            }
            stack.extend(self.nodes[c].iter().flat_map(|n| n.children.iter().copied()));
        }
        (0..self.n_contexts()).filter(|&c| seen[c]).collect()
    }

    /// Runs the program from context `top`, choosing every action from `q`
    /// as it stood before the run. Returns one feedback per call.
    pub fn run_episode(&self, q: &QTable<usize, usize>, top: usize, rng: &mut Rng) -> Episode {
        let mut episode = Episode {
            visited: Vec::new(),
            cost: 0.0,
            feedbacks: Vec::new(),
        };
        let (raw, _) = self.call(q, top, rng, &mut episode);
        episode.cost = self.normalize(raw);
        episode
    }

    fn normalize(&self, raw: f64) -> f64 {
        raw.clamp(0.0, self.cost_max) / self.cost_max
    }

    /// Returns the raw subtree cost and whether every context below was stable.
    fn call(&self, q: &QTable<usize, usize>, context: usize, rng: &mut Rng, episode: &mut Episode) -> (f64, bool) {
        let action = q.value_at(&context);
        let node = &self.nodes[context][action];
        let mut raw = node.own_cost.sample(rng);
        let mut below_stable = true;
        for &child in &node.children {
            let (child_raw, child_below) = self.call(q, child, rng, episode);
            raw += child_raw;
            below_stable &= child_below && q.is_stable(&child);
        }
        episode.visited.push((context, action));
        episode.feedbacks.push(EpisodeFeedback {
            context,
            action,
            cost: self.normalize(raw),
            descendants_stable: below_stable,
        });
        (raw, below_stable)
    }
}

/// Result of training one table until it stops changing.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub inputs: u64,
    /// Inputs whose episode changed the table.
    pub update_bearing_inputs: u64,
    pub total_updates: u64,
    /// Every reachable context became stable within the input cap.
    pub stabilized: bool,
    /// The stabilized greedy choice is optimal in every reachable context.
    pub optimal: bool,
    pub table: QTable<usize, usize>,
}

/// Feeds inputs drawn from the program's input distribution until every
/// reachable context is stable, or `max_inputs` is hit.
pub fn run_trial(sarf: &SyntheticSarf, threshold: u64, max_inputs: u64, rng: &mut Rng) -> Result<TrialOutcome> {
    let mut q = QTable::new((0..sarf.n_actions()).collect(), threshold)?;
    let reachable = sarf.reachable();
    let mut inputs = 0;
    let mut update_bearing = 0;
    while inputs < max_inputs && !reachable.iter().all(|c| q.is_stable(c)) {
        let top = sarf.sample_input(rng);
        let episode = sarf.run_episode(&q, top, rng);
        let before = q.total_updates();
        q = trans_by(q, episode.feedbacks);
        inputs += 1;
        if q.total_updates() > before {
            update_bearing += 1;
        }
    }
    let stabilized = reachable.iter().all(|c| q.is_stable(c));
    let optimal_sets = sarf.optimal_actions();
    let optimal = stabilized && reachable.iter().all(|c| optimal_sets[*c].contains(&q.value_at(c)));
    Ok(TrialOutcome {
        inputs,
        update_bearing_inputs: update_bearing,
        total_updates: q.total_updates(),
        stabilized,
        optimal,
        table: q,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdExperiment {
    pub contexts: usize,
    pub actions: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub max_inputs: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub trials: usize,
    pub t: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub fraction_optimal_after_stabilization: f64,
    pub contexts: usize,
    pub actions: usize,
    /// `t * N * A`
    pub update_budget: u64,
    pub max_update_bearing_inputs: u64,
    pub max_total_updates: u64,
    pub all_stabilized: bool,
}

/// Trains `trials` independent tables on freshly drawn chain programs with
/// the threshold from [`learning_threshold`] and reports how often the
/// stabilized policy was optimal everywhere.
pub fn run_threshold_experiment(cfg: &ThresholdExperiment) -> Result<ThresholdReport> {
    let t = learning_threshold(cfg.epsilon, cfg.delta, cfg.contexts as u64, cfg.actions as u64)?;
    if cfg.trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::substream(cfg.seed, i as u64);
            let sarf = SyntheticSarf::chain(cfg.contexts, cfg.actions, cfg.epsilon, &mut rng)?;
            run_trial(&sarf, t, cfg.max_inputs, &mut rng)
        })
        .collect::<Result<_>>()?;
    let optimal = outcomes.iter().filter(|o| o.optimal).count();
    Ok(ThresholdReport {
        trials: cfg.trials,
        t,
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        fraction_optimal_after_stabilization: optimal as f64 / cfg.trials as f64,
        contexts: cfg.contexts,
        actions: cfg.actions,
        update_budget: t * (cfg.contexts * cfg.actions) as u64,
        max_update_bearing_inputs: outcomes.iter().map(|o| o.update_bearing_inputs).max().unwrap_or(0),
        max_total_updates: outcomes.iter().map(|o| o.total_updates).max().unwrap_or(0),
        all_stabilized: outcomes.iter().all(|o| o.stabilized),
    })
}
