//! Recursive hybrid sorting that learns, per list size, whether insertion
//! sort or merge sort is cheaper.
//!
//! Every call of [`asort`] looks up the method for its size context
//! (`isqrt(len)`), runs it, measures the cost of producing the sorted output
//! and feeds that cost back into the table. Merge sort sorts its halves with
//! `asort` again, so a single top-level sort trains many contexts.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::action::{ActionTable, DEFAULT_EXPLORE_CUTOFF};
use crate::adaptive::{Adaptive, Contextual};
use crate::error::{invalid, Result};
use crate::rng::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SortAlg {
    MSort,
    ISort,
}

pub type SortAction = ActionTable<SortAlg>;
pub type SortQTable = Contextual<u64, SortAction>;

/// Both algorithms untried, merge sort first.
pub fn fresh_action() -> SortAction {
    ActionTable::new([SortAlg::MSort, SortAlg::ISort], DEFAULT_EXPLORE_CUTOFF).expect("two distinct actions")
}

pub fn fresh_table() -> SortQTable {
    Contextual::new(fresh_action())
}

pub fn context_of(len: usize) -> u64 {
    (len as u64).isqrt()
}

/// Fixed per-call costs, excluding the cost of recursive calls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCost {
    pub context: u64,
    pub msort: f64,
    pub isort: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCosts {
    entries: Vec<SyntheticCost>,
}

impl SyntheticCosts {
    pub fn new(mut entries: Vec<SyntheticCost>) -> Result<Self> {
        entries.sort_by_key(|e| e.context);
        if entries.windows(2).any(|w| w[0].context == w[1].context) {
            return Err(invalid("synthetic", "duplicate context in cost table"));
        }
        if entries.iter().any(|e| !(e.msort.is_finite() && e.isort.is_finite())) {
            return Err(invalid("synthetic", "costs must be finite"));
        }
        Ok(Self { entries })
    }

    /// Insertion sort costs `c` in context `c`; merge sort costs
    /// `crossover - 0.5` everywhere. Merge sort is strictly cheaper exactly
    /// from context `crossover` on.
    pub fn planted_crossover(crossover: u64, max_context: u64) -> Self {
        let entries = (0..=max_context)
            .map(|c| SyntheticCost {
                context: c,
                msort: crossover as f64 - 0.5,
                isort: c as f64,
            })
            .collect();
        Self { entries }
    }

    pub fn entries(&self) -> &[SyntheticCost] {
        &self.entries
    }

    pub fn cost(&self, context: u64, alg: SortAlg) -> Option<f64> {
        let i = self.entries.binary_search_by_key(&context, |e| e.context).ok()?;
        let e = &self.entries[i];
        Some(match alg {
            SortAlg::MSort => e.msort,
            SortAlg::ISort => e.isort,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostModel {
    WallClock,
    ComparisonCount,
    Synthetic(SyntheticCosts),
}

impl CostModel {
    pub fn name(&self) -> &'static str {
        match self {
            CostModel::WallClock => "wall",
            CostModel::ComparisonCount => "cmp",
            CostModel::Synthetic(_) => "synthetic",
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, CostModel::WallClock)
    }
}

/// Accumulates cost over a whole sort.
struct Meter<'a> {
    model: &'a CostModel,
    comparisons: u64,
    synthetic: f64,
    clock: Instant,
}

impl<'a> Meter<'a> {
    fn new(model: &'a CostModel) -> Self {
        Self {
            model,
            comparisons: 0,
            synthetic: 0.0,
            clock: Instant::now(),
        }
    }

    fn reading(&self) -> f64 {
        match self.model {
            CostModel::WallClock => self.clock.elapsed().as_secs_f64(),
            CostModel::ComparisonCount => self.comparisons as f64,
            CostModel::Synthetic(_) => self.synthetic,
        }
    }

    /// Cost of one call that started at reading `start`.
    fn charge(&mut self, start: f64, context: u64, alg: SortAlg) -> f64 {
        match self.model {
            CostModel::Synthetic(table) => {
                // validated configs cover every reachable context
                let c = table.cost(context, alg).unwrap_or(0.0);
                self.synthetic += c;
                c
            }
            _ => self.reading() - start,
        }
    }
}

/// `foldr insert []`: elements are inserted from the right, each scanning the
/// sorted prefix from the front. Returns the comparison count.
pub fn isort(xs: Vec<i64>) -> (Vec<i64>, u64) {
    let mut comparisons = 0;
    let ys = isort_counted(xs, &mut comparisons);
    (ys, comparisons)
}

fn isort_counted(xs: Vec<i64>, comparisons: &mut u64) -> Vec<i64> {
    let mut out: Vec<i64> = Vec::with_capacity(xs.len());
    for &x in xs.iter().rev() {
        let mut pos = out.len();
        for (i, y) in out.iter().enumerate() {
            *comparisons += 1;
            if x <= *y {
                pos = i;
                break;
            }
        }
        out.insert(pos, x);
    }
    out
}

pub fn merge(a: Vec<i64>, b: Vec<i64>) -> (Vec<i64>, u64) {
    let mut comparisons = 0;
    let ys = merge_counted(a, b, &mut comparisons);
    (ys, comparisons)
}

fn merge_counted(a: Vec<i64>, b: Vec<i64>, comparisons: &mut u64) -> Vec<i64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        *comparisons += 1;
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Where the method for each call comes from and where its cost goes.
trait Chooser {
    fn choose(&self, len: usize) -> SortAlg;
    fn observe(&mut self, _len: usize, _alg: SortAlg, _cost: f64) {}
}

struct Learning(Option<SortQTable>);

impl Chooser for Learning {
    fn choose(&self, len: usize) -> SortAlg {
        self.0.as_ref().expect("table present").value_at(&context_of(len))
    }

    fn observe(&mut self, len: usize, alg: SortAlg, cost: f64) {
        let q = self.0.take().expect("table present");
        self.0 = Some(q.into_adapted(context_of(len), (alg, cost)));
    }
}

struct Frozen<F>(F);

impl<F: Fn(usize) -> SortAlg> Chooser for Frozen<F> {
    fn choose(&self, len: usize) -> SortAlg {
        (self.0)(len)
    }
}

fn hybrid(xs: Vec<i64>, chooser: &mut impl Chooser, meter: &mut Meter) -> Vec<i64> {
    let n = xs.len();
    let alg = chooser.choose(n);
    let start = meter.reading();
    let ys = match alg {
        SortAlg::ISort => isort_counted(xs, &mut meter.comparisons),
        SortAlg::MSort if n < 2 => xs,
        SortAlg::MSort => {
            let mut left = xs;
            let right = left.split_off(n / 2);
            let left = hybrid(left, chooser, meter);
            let right = hybrid(right, chooser, meter);
            merge_counted(left, right, &mut meter.comparisons)
        }
    };
    let cost = meter.charge(start, context_of(n), alg);
    chooser.observe(n, alg, cost);
    ys
}

/// Sorts `xs`, adapting `q` once per call (recursive calls included).
pub fn asort(q: SortQTable, xs: Vec<i64>, model: &CostModel) -> (Vec<i64>, SortQTable) {
    let mut chooser = Learning(Some(q));
    let mut meter = Meter::new(model);
    let ys = hybrid(xs, &mut chooser, &mut meter);
    (ys, chooser.0.expect("table present"))
}

/// Sorts without learning; returns the total cost under `model`.
pub fn sort_with_policy(xs: Vec<i64>, policy: impl Fn(usize) -> SortAlg, model: &CostModel) -> (Vec<i64>, f64) {
    let mut meter = Meter::new(model);
    let ys = hybrid(xs, &mut Frozen(policy), &mut meter);
    (ys, meter.reading())
}

/// Insertion sort below `cutoff` elements, merge sort from there on.
pub fn fixed_cutoff(cutoff: usize) -> impl Fn(usize) -> SortAlg + Copy {
    move |len| if len < cutoff { SortAlg::ISort } else { SortAlg::MSort }
}

/// The table's current choice for each size.
pub fn frozen_policy(q: &SortQTable) -> impl Fn(usize) -> SortAlg + '_ {
    move |len| q.value_at(&context_of(len))
}

/// Smallest context `c` such that every fully explored context `>= c`
/// prefers merge sort. `None` when the largest explored context prefers
/// insertion sort or nothing is explored.
pub fn learned_cutoff(q: &SortQTable) -> Option<u64> {
    let explored: Vec<(u64, SortAlg)> = q
        .overrides()
        .iter()
        .filter(|(_, a)| a.is_explored())
        .map(|(c, a)| (*c, a.value()))
        .collect();
    let mut cutoff = None;
    for (c, alg) in explored.iter().rev() {
        if *alg != SortAlg::MSort {
            break;
        }
        cutoff = Some(*c);
    }
    cutoff
}

pub fn random_list(len: usize, rng: &mut Rng) -> Vec<i64> {
    (0..len).map(|_| rng.random::<u32>() as i64).collect()
}

/// Comparison-count ground truth for the merge/insertion crossover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverOracle {
    /// Mean insertion-sort comparisons per size.
    pub isort: Vec<f64>,
    /// Mean merge-sort comparisons per size when both halves are sorted optimally.
    pub msort: Vec<f64>,
    /// Smallest size from which merge sort is strictly cheaper at every larger size examined.
    pub crossover_size: usize,
    pub crossover_context: u64,
}

/// Measures both methods on `samples` random lists of every size up to
/// `max_size`, building optimal hybrid costs bottom-up.
pub fn crossover_oracle(max_size: usize, samples: usize, rng: &mut Rng) -> Result<CrossoverOracle> {
    if max_size < 2 || samples == 0 {
        return Err(invalid("max_size", "need sizes of at least 2 and at least one sample"));
    }
    let mut isort_cost = vec![0.0; max_size + 1];
    let mut msort_cost = vec![0.0; max_size + 1];
    let mut best = vec![0.0; max_size + 1];
    for s in 1..=max_size {
        let (mut total_i, mut total_merge) = (0u64, 0u64);
        for _ in 0..samples {
            let xs = random_list(s, rng);
            total_i += isort(xs.clone()).1;
            let mut left = xs;
            let mut right = left.split_off(s / 2);
            left.sort_unstable();
            right.sort_unstable();
            total_merge += merge(left, right).1;
        }
        isort_cost[s] = total_i as f64 / samples as f64;
        msort_cost[s] = if s < 2 {
            0.0
        } else {
            total_merge as f64 / samples as f64 + best[s / 2] + best[s - s / 2]
        };
        best[s] = isort_cost[s].min(msort_cost[s]);
    }
    let mut crossover_size = max_size + 1;
    for s in (2..=max_size).rev() {
        if msort_cost[s] < isort_cost[s] {
            crossover_size = s;
        } else {
            break;
        }
    }
    Ok(CrossoverOracle {
        isort: isort_cost,
        msort: msort_cost,
        crossover_size,
        crossover_context: context_of(crossover_size),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SortBenchConfig {
    pub max_len: usize,
    pub episodes: usize,
    pub cost_model: CostModel,
    pub seed: u64,
    pub eval_lists: usize,
    /// Defaults to `max_len`.
    pub eval_len: Option<usize>,
    /// Fixed cutoffs (in elements) to compare against.
    pub sweep: Vec<usize>,
}

impl SortBenchConfig {
    pub fn new(max_len: usize, episodes: usize, cost_model: CostModel, seed: u64) -> Self {
        Self {
            max_len,
            episodes,
            cost_model,
            seed,
            eval_lists: 100,
            eval_len: None,
            sweep: (0..=10).map(|k| 1usize << k).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_len == 0 {
            return Err(invalid("max_len", "must be positive"));
        }
        if self.eval_len.is_some_and(|n| n > self.max_len) {
            return Err(invalid("eval_len", "must not exceed max_len"));
        }
        if let CostModel::Synthetic(table) = &self.cost_model {
            let top = context_of(self.max_len);
            if let Some(e) = table.entries().iter().find(|e| e.context > top) {
                return Err(invalid(
                    "synthetic",
                    format!("context {} exceeds isqrt(max_len) = {top}", e.context),
                ));
            }
            if let Some(c) = (0..=top).find(|c| table.cost(*c, SortAlg::MSort).is_none()) {
                return Err(invalid("synthetic", format!("no cost given for context {c}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub context: u64,
    pub algorithm: SortAlg,
    /// Per algorithm, in `[MSort, ISort]` order.
    pub counts: Vec<u64>,
    pub avg_costs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffCost {
    pub cutoff: usize,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub no_cutoff: f64,
    pub cutoff_10: f64,
    pub cutoff_1000: f64,
    pub sweep: Vec<CutoffCost>,
    pub best_sweep: CutoffCost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SortReport {
    pub cost_model: String,
    /// False for wall-clock runs, whose numbers vary between executions.
    pub deterministic: bool,
    pub seed: u64,
    pub max_len: usize,
    pub episodes: usize,
    pub policy: Vec<PolicyEntry>,
    /// In contexts (`isqrt` of the length).
    pub cutoff: Option<u64>,
    pub cutoff_length: Option<u64>,
    /// Total cost of the frozen learned policy on the evaluation lists.
    pub learned_cost: f64,
    pub baselines: Baselines,
}

pub fn policy_entries(q: &SortQTable) -> Vec<PolicyEntry> {
    q.overrides()
        .iter()
        .map(|(c, a)| PolicyEntry {
            context: *c,
            algorithm: a.value(),
            counts: a.entries().iter().map(|e| e.count).collect(),
            avg_costs: a.entries().iter().map(|e| e.avg_cost).collect(),
        })
        .collect()
}

/// Trains on `episodes` random lists with lengths uniform in `0..=max_len`.
pub fn train(config: &SortBenchConfig) -> Result<SortQTable> {
    config.validate()?;
    let mut rng = rng::substream(config.seed, 0);
    let mut q = fresh_table();
    for _ in 0..config.episodes {
        let len = rng.random_range(0..=config.max_len);
        let xs = random_list(len, &mut rng);
        q = asort(q, xs, &config.cost_model).1;
    }
    Ok(q)
}

fn evaluate(lists: &[Vec<i64>], policy: impl Fn(usize) -> SortAlg + Copy, model: &CostModel) -> f64 {
    lists
        .iter()
        .map(|xs| sort_with_policy(xs.clone(), policy, model).1)
        .sum()
}

pub fn run_sort_benchmark(config: &SortBenchConfig) -> Result<SortReport> {
    let q = train(config)?;
    let mut rng = rng::substream(config.seed, 1);
    let eval_len = config.eval_len.unwrap_or(config.max_len);
    let lists: Vec<Vec<i64>> = (0..config.eval_lists).map(|_| random_list(eval_len, &mut rng)).collect();
    let model = &config.cost_model;

    let learned_policy = frozen_policy(&q);
    let learned_cost = evaluate(&lists, &learned_policy, model);
    let sweep: Vec<CutoffCost> = config
        .sweep
        .iter()
        .map(|&cutoff| CutoffCost {
            cutoff,
            cost: evaluate(&lists, fixed_cutoff(cutoff), model),
        })
        .collect();
    let best_sweep = sweep
        .iter()
        .fold(None::<&CutoffCost>, |best, c| match best {
            Some(b) if b.cost <= c.cost => Some(b),
            _ => Some(c),
        })
        .cloned()
        .unwrap_or(CutoffCost { cutoff: 0, cost: f64::NAN });
    let cutoff = learned_cutoff(&q);
    Ok(SortReport {
        cost_model: model.name().to_string(),
        deterministic: model.is_deterministic(),
        seed: config.seed,
        max_len: config.max_len,
        episodes: config.episodes,
        policy: policy_entries(&q),
        cutoff,
        cutoff_length: cutoff.map(|c| c * c),
        learned_cost,
        baselines: Baselines {
            no_cutoff: evaluate(&lists, fixed_cutoff(0), model),
            cutoff_10: evaluate(&lists, fixed_cutoff(10), model),
            cutoff_1000: evaluate(&lists, fixed_cutoff(1000), model),
            sweep,
            best_sweep,
        },
    })
}

/// Counts of each context's visits, for exploration audits.
pub fn visit_counts(q: &SortQTable) -> BTreeMap<u64, u64> {
    q.overrides().iter().map(|(c, a)| (*c, a.total_count())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_examples() {
        let a = fresh_action();
        assert_eq!(a.value(), SortAlg::MSort);
        let mut b = a.clone();
        for _ in 0..8 {
            b = b.adapt((SortAlg::MSort, 1.0));
        }
        for _ in 0..3 {
            b = b.adapt((SortAlg::ISort, 1.0));
        }
        assert_eq!(b.value(), SortAlg::ISort);
    }

    #[test]
    fn isort_reverse_list_comparisons() {
        for k in 0..40u64 {
            let xs: Vec<i64> = (0..k as i64).rev().collect();
            let (ys, c) = isort(xs);
            assert_eq!(c, k * k.saturating_sub(1) / 2);
            assert!(ys.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn merge_example() {
        assert_eq!(merge(vec![1, 3], vec![2, 4]), (vec![1, 2, 3, 4], 3));
        assert_eq!(merge(vec![], vec![5]), (vec![5], 0));
    }

    #[test]
    fn asort_examples() {
        let model = CostModel::ComparisonCount;
        let (ys, q) = asort(fresh_table(), vec![], &model);
        assert!(ys.is_empty());
        assert_eq!(visit_counts(&q), BTreeMap::from([(0, 1)]));
        let (ys, _) = asort(fresh_table(), vec![3, 1, 2], &model);
        assert_eq!(ys, vec![1, 2, 3]);
    }

    #[test]
    fn singleton_msort_makes_no_recursive_call() {
        let (_, q) = asort(fresh_table(), vec![9], &CostModel::ComparisonCount);
        assert_eq!(visit_counts(&q).values().sum::<u64>(), 1);
    }

    fn msort_preferring_action() -> SortAction {
        let mut a = fresh_action();
        for _ in 0..8 {
            a = a.adapt((SortAlg::MSort, 0.0)).adapt((SortAlg::ISort, 1e18));
        }
        a
    }

    #[test]
    fn msort_everywhere_call_count() {
        let q0 = Contextual::new(msort_preferring_action());
        let before = q0.prototype().total_count();
        for n in 1..300usize {
            let (_, q) = asort(q0.clone(), (0..n as i64).rev().collect(), &CostModel::ComparisonCount);
            let updates: u64 = q.overrides().values().map(|a| a.total_count() - before).sum();
            assert_eq!(updates, 2 * n as u64 - 1);
        }
    }

    #[test]
    fn cost_is_non_negative() {
        let (_, q) = asort(fresh_table(), (0..100).rev().collect(), &CostModel::ComparisonCount);
        for a in q.overrides().values() {
            assert!(a.entries().iter().all(|e| e.avg_cost >= 0.0));
        }
    }

    #[test]
    fn planted_crossover_is_recovered() {
        let max_len = 400;
        let model = CostModel::Synthetic(SyntheticCosts::planted_crossover(17, 20));
        let mut cfg = SortBenchConfig::new(max_len, 3000, model, 5);
        cfg.eval_lists = 2;
        let q = train(&cfg).unwrap();
        let explored = q.overrides().iter().filter(|(_, a)| a.is_explored()).count();
        assert!(explored >= 18);
        assert_eq!(learned_cutoff(&q), Some(17));
    }

    #[test]
    fn synthetic_table_must_fit_max_len() {
        let model = CostModel::Synthetic(SyntheticCosts::planted_crossover(3, 20));
        assert!(SortBenchConfig::new(100, 1, model, 0).validate().is_err());
        let model = CostModel::Synthetic(SyntheticCosts::planted_crossover(3, 5));
        assert!(SortBenchConfig::new(100, 1, model, 0).validate().is_err());
        let model = CostModel::Synthetic(SyntheticCosts::planted_crossover(3, 10));
        assert!(SortBenchConfig::new(100, 1, model, 0).validate().is_ok());
    }

    #[test]
    fn learned_cutoff_requires_suffix_of_msort() {
        let explore = |alg_costs: [f64; 2]| {
            let mut a = fresh_action();
            for _ in 0..8 {
                a = a.adapt((SortAlg::MSort, alg_costs[0])).adapt((SortAlg::ISort, alg_costs[1]));
            }
            a
        };
        let mut table = fresh_table();
        for (c, costs) in [(1, [2.0, 1.0]), (2, [1.0, 2.0]), (3, [2.0, 1.0]), (4, [1.0, 2.0]), (5, [1.0, 2.0])] {
            let a = explore(costs);
            for e in a.entries() {
                for _ in 0..e.count {
                    table = table.into_adapted(c, (e.action, e.avg_cost));
                }
            }
        }
        assert_eq!(learned_cutoff(&table), Some(4));
        assert_eq!(learned_cutoff(&fresh_table()), None);
    }
}
