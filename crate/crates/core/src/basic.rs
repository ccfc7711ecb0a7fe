//! Basic adaptives: regression lines, UCB bandits and Rock-Paper-Scissors players.

use serde::{Deserialize, Serialize};

use crate::adaptive::Adaptive;
use crate::combinators::trans_by;
use crate::error::{invalid, Result};

/// A line `y = slope * x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

/// A sample point `(x, y)`.
pub type Point = (f64, f64);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionConfig {
    pub eta: f64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self { eta: 0.01 }
    }
}

impl RegressionConfig {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid("eta", format!("learning rate must be positive, got {eta}")));
        }
        Ok(Self { eta })
    }
}

impl Line {
    pub fn new(slope: f64, intercept: f64) -> Self {
        Self { slope, intercept }
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    /// One stochastic-gradient step on the squared error at `(x, y)`.
    pub fn adapt_with(&self, cfg: &RegressionConfig, (x, y): Point) -> Line {
        let err = y - self.predict(x);
        Line {
            slope: self.slope + cfg.eta * x * err,
            intercept: self.intercept + cfg.eta * err,
        }
    }
}

/// Learning rate 0.01.
impl Adaptive for Line {
    type Value = Line;
    type Feedback = Point;

    fn value(&self) -> Line {
        *self
    }

    fn adapt(&self, point: Point) -> Line {
        self.adapt_with(&RegressionConfig::default(), point)
    }
}

/// A line that carries its own learning rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineLearner {
    pub line: Line,
    pub config: RegressionConfig,
}

impl Adaptive for LineLearner {
    type Value = Line;
    type Feedback = Point;

    fn value(&self) -> Line {
        self.line
    }

    fn adapt(&self, point: Point) -> Self {
        Self {
            line: self.line.adapt_with(&self.config, point),
            config: self.config,
        }
    }
}

/// Play statistics of one arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arm<A> {
    pub id: A,
    pub pulls: u64,
    pub reward: f64,
}

/// UCB multi-armed bandit over arms of type `A`.
///
/// The value is an arm that was never pulled, if any, and otherwise the arm
/// maximizing `r_i/n_i + s * sqrt(ln n / n_i)`. Earlier arms win ties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bandit<A> {
    arms: Vec<Arm<A>>,
    exploration_scale: f64,
}

impl<A: Clone + PartialEq> Bandit<A> {
    pub fn new(ids: Vec<A>) -> Result<Self> {
        if ids.is_empty() {
            return Err(invalid("arms", "a bandit needs at least one arm"));
        }
        for (i, id) in ids.iter().enumerate() {
            if ids[..i].contains(id) {
                return Err(invalid("arms", "arm ids must be unique"));
            }
        }
        Ok(Self {
            arms: ids
                .into_iter()
                .map(|id| Arm {
                    id,
                    pulls: 0,
                    reward: 0.0,
                })
                .collect(),
            exploration_scale: 1.0,
        })
    }

    /// Builds a bandit from explicit statistics.
    pub fn from_arms(arms: Vec<Arm<A>>, exploration_scale: f64) -> Result<Self> {
        let ids = arms.iter().map(|a| a.id.clone()).collect();
        Self::new(ids)?.with_scale(exploration_scale).map(|b| Self { arms, ..b })
    }

    pub fn with_scale(mut self, exploration_scale: f64) -> Result<Self> {
        if !(exploration_scale >= 0.0 && exploration_scale.is_finite()) {
            return Err(invalid("exploration_scale", "must be finite and non-negative"));
        }
        self.exploration_scale = exploration_scale;
        Ok(self)
    }

    pub fn arms(&self) -> &[Arm<A>] {
        &self.arms
    }

    pub fn exploration_scale(&self) -> f64 {
        self.exploration_scale
    }

    pub fn total_pulls(&self) -> u64 {
        self.arms.iter().map(|a| a.pulls).sum()
    }

    pub fn pulls_of(&self, id: &A) -> Option<u64> {
        self.arms.iter().find(|a| a.id == *id).map(|a| a.pulls)
    }

    /// Upper confidence bound of an arm that has been pulled at least once.
    pub fn ucb(&self, arm: &Arm<A>) -> f64 {
        let n = self.total_pulls() as f64;
        let ni = arm.pulls as f64;
        arm.reward / ni + self.exploration_scale * (n.ln() / ni).sqrt()
    }

    pub fn select_index(&self) -> usize {
        if let Some(i) = self.arms.iter().position(|a| a.pulls == 0) {
            return i;
        }
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, arm) in self.arms.iter().enumerate() {
            let score = self.ucb(arm);
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        best
    }

    /// Applies `f` to the first arm with id `id`; unknown ids leave the map as is.
    fn update_arm(&self, id: &A, f: impl FnOnce(&mut Arm<A>)) -> Self {
        let mut next = self.clone();
        if let Some(arm) = next.arms.iter_mut().find(|a| a.id == *id) {
            f(arm);
        }
        next
    }

    pub(crate) fn with_arm_id(&self, slot: usize, id: A) -> Self {
        let mut next = self.clone();
        next.arms[slot].id = id;
        next
    }
}

impl Bandit<Move> {
    /// A fresh Rock-Paper-Scissors strategy.
    pub fn rps() -> Self {
        Self::new(Move::ALL.to_vec()).expect("three distinct moves")
    }
}

impl<A: Clone + PartialEq> Adaptive for Bandit<A> {
    type Value = A;
    type Feedback = (A, f64);

    fn value(&self) -> A {
        self.arms[self.select_index()].id.clone()
    }

    fn adapt(&self, (id, reward): (A, f64)) -> Self {
        self.update_arm(&id, |arm| {
            arm.pulls += 1;
            arm.reward += reward;
        })
    }
}

/// Feedback for a [`TransactionalBandit`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Play<A> {
    Pull(A),
    Reward(f64),
}

/// A bandit that receives pulls and rewards as separate feedbacks and
/// credits each reward to the most recently pulled arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransactionalBandit<A> {
    last_arm: A,
    map: Bandit<A>,
}

impl<A: Clone + PartialEq> TransactionalBandit<A> {
    /// Starts with the first arm as the last pulled one.
    pub fn new(ids: Vec<A>) -> Result<Self> {
        let map = Bandit::new(ids)?;
        Ok(Self {
            last_arm: map.arms[0].id.clone(),
            map,
        })
    }

    pub fn last_arm(&self) -> &A {
        &self.last_arm
    }

    pub fn play_map(&self) -> &Bandit<A> {
        &self.map
    }

    /// A pull followed by its reward.
    pub fn big_step(&self, (id, reward): (A, f64)) -> Self {
        trans_by(self.clone(), [Play::Pull(id), Play::Reward(reward)])
    }
}

impl TransactionalBandit<Move> {
    pub fn rps() -> Self {
        Self::new(Move::ALL.to_vec()).expect("three distinct moves")
    }
}

impl<A: Clone + PartialEq> Adaptive for TransactionalBandit<A> {
    type Value = A;
    type Feedback = Play<A>;

    fn value(&self) -> A {
        self.map.value()
    }

    fn adapt(&self, feedback: Play<A>) -> Self {
        match feedback {
            // pulling an unknown arm would break `last_arm ∈ arms`
            Play::Pull(id) if self.map.pulls_of(&id).is_none() => self.clone(),
            Play::Pull(id) => Self {
                map: self.map.update_arm(&id, |arm| arm.pulls += 1),
                last_arm: id,
            },
            Play::Reward(r) => Self {
                map: self.map.update_arm(&self.last_arm, |arm| arm.reward += r),
                last_arm: self.last_arm.clone(),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Move {
    Rock,
    Paper,
    Scissors,
}

impl Move {
    pub const ALL: [Move; 3] = [Move::Rock, Move::Paper, Move::Scissors];
}

/// The move that beats `m`.
pub fn win(m: Move) -> Move {
    match m {
        Move::Rock => Move::Paper,
        Move::Paper => Move::Scissors,
        Move::Scissors => Move::Rock,
    }
}

/// +1 if `mine` beats `theirs`, -1 if it loses, 0 on a draw.
pub fn score(mine: Move, theirs: Move) -> i32 {
    if win(mine) == theirs {
        -1
    } else if win(theirs) == mine {
        1
    } else {
        0
    }
}

/// Bandit feedback: the move played and its score.
pub fn my_score(mine: &Move, theirs: &Move) -> (Move, f64) {
    (*mine, score(*mine, *theirs) as f64)
}

pub fn opponents_move(_mine: &Move, theirs: &Move) -> Move {
    *theirs
}

/// Always offers the same value and ignores its feedback.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constant<V>(pub V);

impl<V: Clone> Adaptive for Constant<V> {
    type Value = V;
    type Feedback = V;

    fn value(&self) -> V {
        self.0.clone()
    }

    fn adapt(&self, _: V) -> Self {
        self.clone()
    }
}

/// Plays whatever beats the opponent's previous move.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeatLast {
    pub next: Move,
}

impl BeatLast {
    pub fn new(first: Move) -> Self {
        Self { next: first }
    }
}

impl Adaptive for BeatLast {
    type Value = Move;
    type Feedback = Move;

    fn value(&self) -> Move {
        self.next
    }

    fn adapt(&self, opponent: Move) -> Self {
        Self { next: win(opponent) }
    }
}

/// Plays whatever beats the opponent's most frequent move so far.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxFreq {
    counts: [(Move, u64); 3],
}

impl Default for MaxFreq {
    fn default() -> Self {
        Self {
            counts: Move::ALL.map(|m| (m, 0)),
        }
    }
}

impl MaxFreq {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn counts(&self) -> &[(Move, u64)] {
        &self.counts
    }

    /// Most frequent opponent move, first in R, P, S order on ties.
    pub fn most_frequent(&self) -> Move {
        let mut best = self.counts[0];
        for entry in &self.counts[1..] {
            if entry.1 > best.1 {
                best = *entry;
            }
        }
        best.0
    }
}

impl Adaptive for MaxFreq {
    type Value = Move;
    type Feedback = Move;

    fn value(&self) -> Move {
        win(self.most_frequent())
    }

    fn adapt(&self, opponent: Move) -> Self {
        let mut next = self.clone();
        if let Some(entry) = next.counts.iter_mut().find(|(m, _)| *m == opponent) {
            entry.1 += 1;
        }
        next
    }
}
