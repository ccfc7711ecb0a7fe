use std::collections::BTreeMap;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::problems::{Benchmark, ResidualProblem};
use super::solver::{lm_step, standard_lm, LmConfig, LmRun};
use crate::action::{ActionStats, ActionTable, DEFAULT_EXPLORE_CUTOFF};
use crate::adaptive::Contextual;
use crate::error::{invalid, Result};
use crate::rng::{self, Rng};

/// What the controller knows when it decides: evaluations left, whether the
/// newest point beat the current one, and the same flag one decision earlier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LmContext {
    pub budget_left: usize,
    pub h1: bool,
    pub h2: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LambdaAction {
    IncAccept,
    DecAccept,
    KeepAccept,
    IncReject,
    DecReject,
    KeepReject,
    ResetToBest,
}

impl LambdaAction {
    pub const ALL: [LambdaAction; 7] = [
        LambdaAction::IncAccept,
        LambdaAction::DecAccept,
        LambdaAction::KeepAccept,
        LambdaAction::IncReject,
        LambdaAction::DecReject,
        LambdaAction::KeepReject,
        LambdaAction::ResetToBest,
    ];

    fn next_lambda(self, lambda: f64, cfg: &LmConfig) -> f64 {
        match self {
            LambdaAction::IncAccept | LambdaAction::IncReject => cfg.raise(lambda),
            LambdaAction::DecAccept | LambdaAction::DecReject => cfg.lower(lambda),
            _ => lambda,
        }
    }
}

pub type ControllerTable = Contextual<LmContext, ActionTable<LambdaAction>>;

pub fn fresh_controller() -> ControllerTable {
    Contextual::new(ActionTable::new(LambdaAction::ALL, DEFAULT_EXPLORE_CUTOFF).expect("seven distinct actions"))
}

/// A fully explored table whose greedy choices replay the classic rule:
/// keep the start, then lower `λ` and accept on improvement, raise and
/// reject otherwise.
pub fn mimic_controller(budget: usize) -> ControllerTable {
    let mut table = fresh_controller();
    for budget_left in 0..budget {
        for h1 in [false, true] {
            for h2 in [false, true] {
                let target = if budget_left + 1 == budget {
                    LambdaAction::KeepAccept
                } else if h1 {
                    LambdaAction::DecAccept
                } else {
                    LambdaAction::IncReject
                };
                let entries = LambdaAction::ALL
                    .iter()
                    .map(|&action| ActionStats {
                        action,
                        count: DEFAULT_EXPLORE_CUTOFF,
                        avg_cost: if action == target { 0.0 } else { 1.0 },
                    })
                    .collect();
                let stats = ActionTable::from_entries(entries, DEFAULT_EXPLORE_CUTOFF).expect("distinct actions");
                table = table.with_override(LmContext { budget_left, h1, h2 }, stats);
            }
        }
    }
    table
}

/// Runs `budget` evaluations with `q` choosing after each one how to move
/// `λ` and which point to step from next.
pub fn adaptive_lm<P: ResidualProblem + ?Sized>(
    prob: &P,
    x0: &[f64],
    budget: usize,
    q: &ControllerTable,
    cfg: &LmConfig,
) -> Result<LmRun<(LmContext, LambdaAction)>> {
    if budget == 0 {
        return Err(invalid("budget", "must be at least 1"));
    }
    cfg.validate()?;
    let start_loss = prob.loss(x0);
    let mut run = LmRun::start(x0.to_vec(), start_loss);
    let mut candidate = x0.to_vec();
    let mut candidate_loss = start_loss;
    let mut base: Option<(Vec<f64>, f64)> = None;
    let mut lambda = cfg.lambda0;
    let mut previous_h1 = false;
    for used in 1..=budget {
        let h1 = base.as_ref().is_some_and(|(_, loss)| candidate_loss < *loss);
        let context = LmContext {
            budget_left: budget - used,
            h1,
            h2: previous_h1,
        };
        let action = q.value_at(&context);
        run.visited.push((context, action));
        lambda = action.next_lambda(lambda, cfg);
        base = Some(match action {
            LambdaAction::IncAccept | LambdaAction::DecAccept | LambdaAction::KeepAccept => {
                (candidate.clone(), candidate_loss)
            }
            LambdaAction::ResetToBest => (run.best_x.clone(), run.best_loss),
            _ => base.unwrap_or_else(|| (x0.to_vec(), start_loss)),
        });
        previous_h1 = h1;
        if used == budget {
            break;
        }
        let from = &base.as_ref().expect("set above").0;
        let (next, _) = lm_step(prob, from, lambda, cfg.damping);
        candidate_loss = prob.loss(&next);
        run.record(next.clone(), candidate_loss);
        candidate = next;
    }
    Ok(run)
}

/// A start whose loss is large enough to divide by.
fn sample_start<P: ResidualProblem + ?Sized>(prob: &P, rng: &mut Rng) -> (Vec<f64>, f64) {
    loop {
        let x = prob.sample_start(rng);
        let loss = prob.loss(&x);
        if loss.is_finite() && loss >= 1e-12 {
            return (x, loss);
        }
    }
}

/// Monte Carlo training: every decision of an episode is charged the
/// negated scaled loss reduction of that episode.
pub fn train_controller(
    problems: &[Benchmark],
    episodes: usize,
    budget: usize,
    cfg: &LmConfig,
    rng: &mut Rng,
) -> Result<ControllerTable> {
    if problems.is_empty() {
        return Err(invalid("problems", "at least one problem is required"));
    }
    if budget == 0 {
        return Err(invalid("budget", "must be at least 1"));
    }
    cfg.validate()?;
    let mut q = fresh_controller();
    for _ in 0..episodes {
        let prob = problems[rng.random_range(0..problems.len())];
        let (x0, _) = sample_start(&prob, rng);
        let run = adaptive_lm(&prob, &x0, budget, &q, cfg)?;
        let cost = -run.scaled_reduction();
        for (context, action) in run.visited {
            q = q.into_adapted(context, (action, cost));
        }
    }
    Ok(q)
}

#[derive(Clone, Copy, Debug)]
pub enum Optimizer<'a> {
    Standard,
    Adaptive(&'a ControllerTable),
}

/// Mean scaled loss reduction over `trials` random starts. Trial `i` draws
/// its start from substream `i` of `seed`, so different optimizers given the
/// same seed see the same starts.
pub fn asrl<P: ResidualProblem + Sync + ?Sized>(
    optimizer: Optimizer<'_>,
    prob: &P,
    trials: usize,
    budget: usize,
    cfg: &LmConfig,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    let reductions: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::substream(seed, i as u64);
            let (x0, _) = sample_start(prob, &mut rng);
            Ok(match optimizer {
                Optimizer::Standard => standard_lm(prob, &x0, budget, cfg)?.scaled_reduction(),
                Optimizer::Adaptive(q) => adaptive_lm(prob, &x0, budget, q, cfg)?.scaled_reduction(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(reductions.iter().sum::<f64>() / trials as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsrlEntry {
    pub standard: f64,
    pub adaptive: f64,
    pub delta: f64,
}

/// Paired comparison of the two optimizers on every problem.
pub fn evaluate_controller(
    table: &ControllerTable,
    problems: &[Benchmark],
    trials: usize,
    budget: usize,
    cfg: &LmConfig,
    seed: u64,
) -> Result<BTreeMap<String, AsrlEntry>> {
    let mut out = BTreeMap::new();
    for (k, prob) in problems.iter().enumerate() {
        let problem_seed = seed.wrapping_add(k as u64);
        let standard = asrl(Optimizer::Standard, prob, trials, budget, cfg, problem_seed)?;
        let adaptive = asrl(Optimizer::Adaptive(table), prob, trials, budget, cfg, problem_seed)?;
        out.insert(
            prob.name().to_string(),
            AsrlEntry {
                standard,
                adaptive,
                delta: adaptive - standard,
            },
        );
    }
    Ok(out)
}

/// A trained controller as written to disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerFile {
    pub budget: usize,
    pub episodes: usize,
    pub seed: u64,
    pub config: LmConfig,
    pub table: ControllerTable,
}
