//! Drivers that turn single adaptation steps into runs.
//!
//! Each driver returns a [`Trace`] holding every intermediate state, starting
//! with the initial one. Unbounded runs are available as iterators
//! ([`train_iter`], [`evolve_iter`]) for monitor-driven stopping; the bounded
//! forms take an explicit step count and yield the same prefix.

use serde::{Deserialize, Serialize};

use crate::adaptive::Adaptive;

/// Every state produced during a run, initial state first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace<S>(Vec<S>);

impl<S> Trace<S> {
    pub fn new(snapshots: Vec<S>) -> Self {
        Self(snapshots)
    }

    pub fn snapshots(&self) -> &[S] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<&S> {
        self.0.last()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.0.iter()
    }
}

impl<A: Adaptive> Trace<A> {
    pub fn values(&self) -> Vec<A::Value> {
        values_of(&self.0)
    }
}

impl<S> FromIterator<S> for Trace<S> {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<S> IntoIterator for Trace<S> {
    type Item = S;
    type IntoIter = std::vec::IntoIter<S>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a, S> IntoIterator for &'a Trace<S> {
    type Item = &'a S;
    type IntoIter = std::slice::Iter<'a, S>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

pub fn values_of<A: Adaptive>(states: &[A]) -> Vec<A::Value> {
    states.iter().map(Adaptive::value).collect()
}

/// Lazy scan of `adapt` over a feedback stream.
pub struct TrainBy<A, I> {
    state: Option<A>,
    feedbacks: I,
}

impl<A, I> Iterator for TrainBy<A, I>
where
    A: Adaptive + Clone,
    I: Iterator<Item = A::Feedback>,
{
    type Item = A;

    fn next(&mut self) -> Option<A> {
        let current = self.state.take()?;
        if let Some(fb) = self.feedbacks.next() {
            self.state = Some(current.adapt(fb));
        }
        Some(current)
    }
}

pub fn train_iter<A, I>(initial: A, feedbacks: I) -> TrainBy<A, I::IntoIter>
where
    A: Adaptive + Clone,
    I: IntoIterator<Item = A::Feedback>,
{
    TrainBy {
        state: Some(initial),
        feedbacks: feedbacks.into_iter(),
    }
}

/// Supervised training: one snapshot per feedback plus the initial state.
pub fn train_by<A, I>(initial: A, feedbacks: I) -> Trace<A>
where
    A: Adaptive + Clone,
    I: IntoIterator<Item = A::Feedback>,
{
    train_iter(initial, feedbacks).collect()
}

/// Fold without history; equal to the last snapshot of [`train_by`].
pub fn trans_by<A, I>(initial: A, feedbacks: I) -> A
where
    A: Adaptive,
    I: IntoIterator<Item = A::Feedback>,
{
    feedbacks
        .into_iter()
        .fold(initial, |state, fb| state.adapt(fb))
}

/// Infinite self-feedback loop.
pub struct Evolve<A, F> {
    state: A,
    feedback: F,
}

impl<A, F> Iterator for Evolve<A, F>
where
    A: Adaptive + Clone,
    F: FnMut(&A::Value) -> A::Feedback,
{
    type Item = A;

    fn next(&mut self) -> Option<A> {
        let fb = (self.feedback)(&self.state.value());
        let next = self.state.adapt(fb);
        Some(std::mem::replace(&mut self.state, next))
    }
}

pub fn evolve_iter<A, F>(feedback: F, initial: A) -> Evolve<A, F>
where
    A: Adaptive + Clone,
    F: FnMut(&A::Value) -> A::Feedback,
{
    Evolve {
        state: initial,
        feedback,
    }
}

/// Online learning: each state's own value is turned into its feedback.
/// Returns `steps + 1` snapshots.
pub fn evolve<A, F>(feedback: F, initial: A, steps: usize) -> Trace<A>
where
    A: Adaptive + Clone,
    F: FnMut(&A::Value) -> A::Feedback,
{
    let mut feedback = feedback;
    let mut trace = Vec::with_capacity(steps + 1);
    let mut state = initial;
    for _ in 0..steps {
        let fb = feedback(&state.value());
        let next = state.adapt(fb);
        trace.push(std::mem::replace(&mut state, next));
    }
    trace.push(state);
    Trace(trace)
}

/// [`evolve`] that also returns the feedback applied at each step.
pub fn evolve_logged<A, F>(feedback: F, initial: A, steps: usize) -> (Trace<A>, Vec<A::Feedback>)
where
    A: Adaptive + Clone,
    A::Feedback: Clone,
    F: FnMut(&A::Value) -> A::Feedback,
{
    let mut feedback = feedback;
    let mut log = Vec::with_capacity(steps);
    let trace = evolve(
        |v: &A::Value| {
            let fb = feedback(v);
            log.push(fb.clone());
            fb
        },
        initial,
        steps,
    );
    (trace, log)
}

/// Makes both values available to each feedback function.
pub fn distr<Va, Vb, Fa, Fb>(
    mut f: impl FnMut(&Va, &Vb) -> Fa,
    mut g: impl FnMut(&Va, &Vb) -> Fb,
) -> impl FnMut(&(Va, Vb)) -> (Fa, Fb) {
    move |(x, y)| (f(x, y), g(x, y))
}

/// Two adaptives evolving side by side, each fed from both values.
pub fn coevolve<A, B, F, G>(f: F, g: G, pair: (A, B), steps: usize) -> Trace<(A, B)>
where
    A: Adaptive + Clone,
    B: Adaptive + Clone,
    F: FnMut(&A::Value, &B::Value) -> A::Feedback,
    G: FnMut(&A::Value, &B::Value) -> B::Feedback,
{
    evolve(distr(f, g), pair, steps)
}

/// A tournament. Each player's feedback function sees its own value first.
pub fn vs<A, B, F, G>(player_a: (A, F), player_b: (B, G), rounds: usize) -> Trace<(A, B)>
where
    A: Adaptive + Clone,
    B: Adaptive + Clone,
    F: FnMut(&A::Value, &B::Value) -> A::Feedback,
    G: FnMut(&B::Value, &A::Value) -> B::Feedback,
{
    let (a, f) = player_a;
    let (b, mut g) = player_b;
    coevolve(f, move |x: &A::Value, y: &B::Value| g(y, x), (a, b), rounds)
}

/// Big-step training: applies whole-state transforms in order, keeping history.
pub fn transform_by<S, T, I>(initial: S, transforms: I) -> Trace<S>
where
    S: Clone,
    T: FnOnce(&S) -> S,
    I: IntoIterator<Item = T>,
{
    let mut trace = vec![initial];
    for t in transforms {
        let next = t(trace.last().expect("trace starts non-empty"));
        trace.push(next);
    }
    Trace(trace)
}

/// Big-step co-evolution. `g` receives its own state first.
pub fn cotransform<A, B, F, G>(mut f: F, mut g: G, pair: (A, B), steps: usize) -> Trace<(A, B)>
where
    F: FnMut(&A, &B) -> A,
    G: FnMut(&B, &A) -> B,
{
    let mut trace = Vec::with_capacity(steps + 1);
    let mut current = pair;
    for _ in 0..steps {
        let next = (f(&current.0, &current.1), g(&current.1, &current.0));
        trace.push(std::mem::replace(&mut current, next));
    }
    trace.push(current);
    Trace(trace)
}
