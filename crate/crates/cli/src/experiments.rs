use std::path::Path;

use abp_core::basic::{
    my_score, opponents_move, score, BeatLast, Bandit, Constant, Line, LineLearner, MaxFreq, Move, Point,
    RegressionConfig,
};
use abp_core::combinators::{evolve_logged, train_iter, vs};
use abp_core::lmopt::{evaluate_controller, train_controller, Benchmark, ControllerFile, LmConfig};
use abp_core::monitors::{are_close, ensure_last, until};
use abp_core::principled::{run_threshold_experiment, ThresholdExperiment};
use abp_core::rng;
use abp_core::sortbench::{context_of, run_sort_benchmark, CostModel, SortAlg, SortBenchConfig, SyntheticCosts};
use abp_core::Adaptive;
use clap::ValueEnum;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::output::{resolve_format, CliError, CliResult, Format, Sink};
use crate::{BanditArgs, CostModelKind, Global, PlayerKind, PrincipledArgs, RegressArgs, RpsArgs, SortbenchArgs};

fn sink(g: &Global) -> CliResult<Option<Sink>> {
    g.out.as_deref().map(Sink::create).transpose()
}

fn positive(flag: &str, v: usize) -> CliResult<()> {
    if v == 0 {
        return Err(CliError::config(flag, "must be at least 1"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// regress

fn read_points(path: &Path) -> CliResult<Vec<Point>> {
    let bad = |reason: String| CliError::config("--points", format!("{}: {reason}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != 2 {
            return Err(bad(format!("line {} has {} columns, expected x,y", i + 1, record.len())));
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => points.push((x, y)),
            // the first line may be a header
            _ if i == 0 => {}
            _ => return Err(bad(format!("line {} is not two finite numbers", i + 1))),
        }
    }
    Ok(points)
}

fn generated_points(seed: u64, n: usize) -> Vec<Point> {
    let mut rng = rng::substream(seed, 0);
    (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            (x, 2.0 * x + 1.0)
        })
        .collect()
}

pub fn regress(g: &Global, args: &RegressArgs) -> CliResult<()> {
    let config = RegressionConfig::new(args.eta)?;
    if !(args.until_close > 0.0 && args.until_close.is_finite()) {
        return Err(CliError::config("--until-close", "must be a positive tolerance"));
    }
    positive("--max-points", args.max_points)?;
    let points = match &args.points {
        Some(path) => read_points(path)?,
        None => generated_points(g.require_seed("points are generated when --points is absent")?, args.max_points),
    };
    let format = resolve_format(g.format, g.out.as_deref(), Format::Csv);
    let out = sink(g)?;

    let learner = LineLearner {
        line: Line::new(0.0, 0.0),
        config,
    };
    let stopped = until(
        train_iter(learner, points.iter().copied()),
        ensure_last(2, are_close(args.until_close)),
    );
    let lines: Vec<Line> = stopped.iter().map(|l| l.line).collect();
    let Some(last) = lines.last() else {
        return Err(CliError::Run(format!(
            "consecutive lines never came within {} over {} points",
            args.until_close,
            points.len()
        )));
    };
    println!("m={} b={} after {} points", last.slope, last.intercept, lines.len() - 1);
    match out {
        Some(s) => s.trace(format, &lines, &points[..lines.len() - 1]),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// rps

/// Any of the RPS players behind one type, fed `(own move, opponent move)`.
#[derive(Clone, Debug)]
enum Player {
    Bandit(Bandit<Move>),
    BeatLast(BeatLast),
    MaxFreq(MaxFreq),
    Constant(Constant<Move>),
}

impl Player {
    fn new(kind: PlayerKind, seed: Option<u64>, stream: u64) -> Self {
        match kind {
            PlayerKind::Bandit => {
                // UCB is deterministic given its arm order, so the seed picks the order
                let mut arms = Move::ALL.to_vec();
                arms.shuffle(&mut rng::substream(seed.expect("checked by caller"), stream));
                Player::Bandit(Bandit::new(arms).expect("three distinct moves"))
            }
            PlayerKind::Beatlast => Player::BeatLast(BeatLast::new(Move::Rock)),
            PlayerKind::Maxfreq => Player::MaxFreq(MaxFreq::new()),
            PlayerKind::Rock => Player::Constant(Constant(Move::Rock)),
            PlayerKind::Paper => Player::Constant(Constant(Move::Paper)),
            PlayerKind::Scissors => Player::Constant(Constant(Move::Scissors)),
        }
    }
}

impl Adaptive for Player {
    type Value = Move;
    type Feedback = (Move, Move);

    fn value(&self) -> Move {
        match self {
            Player::Bandit(p) => p.value(),
            Player::BeatLast(p) => p.value(),
            Player::MaxFreq(p) => p.value(),
            Player::Constant(p) => p.value(),
        }
    }

    fn adapt(&self, (mine, theirs): (Move, Move)) -> Self {
        match self {
            Player::Bandit(p) => Player::Bandit(p.adapt(my_score(&mine, &theirs))),
            Player::BeatLast(p) => Player::BeatLast(p.adapt(opponents_move(&mine, &theirs))),
            Player::MaxFreq(p) => Player::MaxFreq(p.adapt(opponents_move(&mine, &theirs))),
            Player::Constant(p) => Player::Constant(p.adapt(theirs)),
        }
    }
}

#[derive(Serialize)]
struct RoundMoves {
    a: Move,
    b: Move,
}

#[derive(Serialize)]
struct RoundScores {
    a: i32,
    b: i32,
    total_a: i64,
    total_b: i64,
}

pub fn rps(g: &Global, args: &RpsArgs) -> CliResult<()> {
    positive("--rounds", args.rounds)?;
    if args.a == PlayerKind::Bandit || args.b == PlayerKind::Bandit {
        g.require_seed("a bandit player is involved")?;
    }
    let format = resolve_format(g.format, g.out.as_deref(), Format::Csv);
    let out = sink(g)?;

    let both = |mine: &Move, theirs: &Move| (*mine, *theirs);
    let trace = vs(
        (Player::new(args.a, g.seed, 0), both),
        (Player::new(args.b, g.seed, 1), both),
        args.rounds,
    );
    let moves: Vec<RoundMoves> = trace
        .iter()
        .map(|(a, b)| RoundMoves { a: a.value(), b: b.value() })
        .collect();
    let (mut total_a, mut total_b) = (0i64, 0i64);
    let scores: Vec<RoundScores> = moves[..args.rounds]
        .iter()
        .map(|m| {
            let (a, b) = (score(m.a, m.b), score(m.b, m.a));
            total_a += a as i64;
            total_b += b as i64;
            RoundScores { a, b, total_a, total_b }
        })
        .collect();
    let name = |k: PlayerKind| k.to_possible_value().expect("no skipped variants").get_name().to_string();
    println!("a={} score={total_a} b={} score={total_b} rounds={}", name(args.a), name(args.b), args.rounds);
    match out {
        Some(s) => s.trace(format, &moves, &scores),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// bandit

pub fn bandit(g: &Global, args: &BanditArgs) -> CliResult<()> {
    let seed = g.require_seed("arm rewards are random")?;
    if args.means.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(CliError::config("--means", "each mean must be a probability in [0, 1]"));
    }
    positive("--steps", args.steps)?;
    let format = resolve_format(g.format, g.out.as_deref(), Format::Csv);
    let out = sink(g)?;

    let arms: Vec<usize> = (0..args.means.len()).collect();
    let initial = Bandit::new(arms)?.with_scale(args.exploration_scale)?;
    let mut rng = rng::substream(seed, 0);
    let (trace, log) = evolve_logged(
        |arm: &usize| (*arm, if rng.random::<f64>() < args.means[*arm] { 1.0 } else { 0.0 }),
        initial,
        args.steps,
    );
    let last = trace.last().expect("trace holds the initial state");
    let pulls: Vec<u64> = last.arms().iter().map(|a| a.pulls).collect();
    let reward: f64 = log.iter().map(|(_, r)| r).sum();
    println!("pulls={pulls:?} total_reward={reward} steps={}", args.steps);
    match out {
        Some(s) => s.trace(format, &trace.values(), &log),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// principled

pub fn principled(g: &Global, args: &PrincipledArgs) -> CliResult<()> {
    let seed = g.require_seed("trials sample random instances and costs")?;
    positive("--trials", args.trials)?;
    let format = resolve_format(g.format, g.out.as_deref(), Format::Json);
    let out = sink(g)?;

    let report = run_threshold_experiment(&ThresholdExperiment {
        contexts: args.contexts,
        actions: args.actions,
        epsilon: args.epsilon,
        delta: args.delta,
        trials: args.trials,
        seed,
        max_inputs: args.max_inputs,
    })?;
    println!(
        "t={} fraction_optimal_after_stabilization={} trials={} all_stabilized={}",
        report.t, report.fraction_optimal_after_stabilization, report.trials, report.all_stabilized
    );
    match (out, format) {
        (None, _) => Ok(()),
        (Some(s), Format::Json) => s.json(&report),
        (Some(s), Format::Csv) => s.table(
            &["trials", "t", "epsilon", "delta", "fraction_optimal_after_stabilization", "all_stabilized"],
            vec![vec![
                report.trials.to_string(),
                report.t.to_string(),
                report.epsilon.to_string(),
                report.delta.to_string(),
                report.fraction_optimal_after_stabilization.to_string(),
                report.all_stabilized.to_string(),
            ]],
        ),
    }
}

// ---------------------------------------------------------------------------
// sortbench

pub fn sortbench(g: &Global, args: &SortbenchArgs) -> CliResult<()> {
    let seed = g.require_seed("training and evaluation lists are random")?;
    let cost_model = match args.cost_model {
        CostModelKind::Wall => CostModel::WallClock,
        CostModelKind::Cmp => CostModel::ComparisonCount,
        CostModelKind::Synthetic => {
            CostModel::Synthetic(SyntheticCosts::planted_crossover(args.crossover, context_of(args.max_len)))
        }
    };
    let config = SortBenchConfig {
        eval_lists: args.eval_lists,
        ..SortBenchConfig::new(args.max_len, args.episodes, cost_model, seed)
    };
    config.validate()?;
    let format = resolve_format(g.format, g.out.as_deref(), Format::Json);
    let out = sink(g)?;

    let report = run_sort_benchmark(&config)?;
    let best = &report.baselines.best_sweep;
    println!(
        "cost_model={} cutoff_context={} cutoff_length={} learned_cost={} best_fixed_cutoff={} best_fixed_cost={} deterministic={}",
        report.cost_model,
        report.cutoff.map_or("none".into(), |c| c.to_string()),
        report.cutoff_length.map_or("none".into(), |c| c.to_string()),
        report.learned_cost,
        best.cutoff,
        best.cost,
        report.deterministic
    );
    match (out, format) {
        (None, _) => Ok(()),
        (Some(s), Format::Json) => s.json(&report),
        (Some(s), Format::Csv) => {
            let rows = report
                .policy
                .iter()
                .map(|p| {
                    let algorithm = match p.algorithm {
                        SortAlg::MSort => "msort",
                        SortAlg::ISort => "isort",
                    };
                    let mut row = vec![p.context.to_string(), algorithm.to_string()];
                    row.extend(p.counts.iter().map(u64::to_string));
                    row.extend(p.avg_costs.iter().map(f64::to_string));
                    row
                })
                .collect();
            s.table(
                &["context", "algorithm", "msort_count", "isort_count", "msort_avg_cost", "isort_avg_cost"],
                rows,
            )
        }
    }
}

// ---------------------------------------------------------------------------
// lmopt

pub fn lm_train(g: &Global, episodes: usize, budget: usize) -> CliResult<()> {
    let seed = g.require_seed("training starts are random")?;
    positive("--episodes", episodes)?;
    positive("--budget", budget)?;
    if g.format == Some(Format::Csv) {
        return Err(CliError::config("--format", "controller tables are written as JSON"));
    }
    let path = g
        .out
        .as_deref()
        .ok_or_else(|| CliError::config("--out", "training needs a file to save the controller to"))?;
    let out = Sink::create(path)?;

    let config = LmConfig::default();
    let table = train_controller(&Benchmark::ALL, episodes, budget, &config, &mut rng::substream(seed, 0))?;
    println!("contexts={} episodes={episodes} budget={budget}", table.overrides().len());
    out.json(&ControllerFile {
        budget,
        episodes,
        seed,
        config,
        table,
    })
}

pub fn lm_eval(g: &Global, table: &Path, trials: usize) -> CliResult<()> {
    positive("--trials", trials)?;
    let text = std::fs::read_to_string(table)
        .map_err(|e| CliError::config("--table", format!("{}: {e}", table.display())))?;
    let file: ControllerFile = serde_json::from_str(&text)
        .map_err(|e| CliError::config("--table", format!("{}: {e}", table.display())))?;
    // without --seed the evaluation starts follow from the training seed
    let seed = g.seed.unwrap_or(file.seed.wrapping_add(1_000));
    let format = resolve_format(g.format, g.out.as_deref(), Format::Json);
    let out = sink(g)?;

    let results = evaluate_controller(&file.table, &Benchmark::ALL, trials, file.budget, &file.config, seed)?;
    for (problem, e) in &results {
        println!("{problem}: standard={} adaptive={} delta={}", e.standard, e.adaptive, e.delta);
    }
    match (out, format) {
        (None, _) => Ok(()),
        (Some(s), Format::Json) => s.json(&results),
        (Some(s), Format::Csv) => s.table(
            &["problem", "standard", "adaptive", "delta"],
            results
                .iter()
                .map(|(p, e)| vec![p.clone(), e.standard.to_string(), e.adaptive.to_string(), e.delta.to_string()])
                .collect(),
        ),
    }
}
