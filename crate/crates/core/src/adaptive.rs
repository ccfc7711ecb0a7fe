//! The adaptive-value contract and its generic compositions.
//!
//! States are plain immutable values: [`Adaptive::adapt`] borrows the old
//! state and returns a new one, so any snapshot stays valid after adaptation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::basic::Bandit;
use crate::error::{AbpError, Result};

/// A value that adapts to feedback.
pub trait Adaptive: Sized {
    /// What the adaptive currently offers to its user.
    type Value;
    /// The signal that drives adaptation.
    type Feedback;

    fn value(&self) -> Self::Value;

    fn adapt(&self, feedback: Self::Feedback) -> Self;
}

/// `adapt` with its arguments flipped, convenient for folds.
pub fn adapt_by<A: Adaptive>(state: &A, feedback: A::Feedback) -> A {
    state.adapt(feedback)
}

/// Two adaptives adapting in lockstep.
impl<A: Adaptive, B: Adaptive> Adaptive for (A, B) {
    type Value = (A::Value, B::Value);
    type Feedback = (A::Feedback, B::Feedback);

    fn value(&self) -> Self::Value {
        (self.0.value(), self.1.value())
    }

    fn adapt(&self, (u, v): Self::Feedback) -> Self {
        (self.0.adapt(u), self.1.adapt(v))
    }
}

/// Feedbacks are paired with items positionally. Items without a matching
/// feedback are carried over unchanged and surplus feedback is dropped.
impl<A: Adaptive + Clone> Adaptive for Vec<A> {
    type Value = Vec<A::Value>;
    type Feedback = Vec<A::Feedback>;

    fn value(&self) -> Self::Value {
        self.iter().map(Adaptive::value).collect()
    }

    fn adapt(&self, feedback: Self::Feedback) -> Self {
        let mut feedback = feedback.into_iter();
        self.iter()
            .map(|item| match feedback.next() {
                Some(fb) => item.adapt(fb),
                None => item.clone(),
            })
            .collect()
    }
}

/// The value of a [`Contextual`] adaptive: a finite function from contexts
/// to values, answering `default` for every context without an entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "C: Serialize, V: Serialize",
    deserialize = "C: Deserialize<'de> + Ord, V: Deserialize<'de>"
))]
pub struct ContextMap<C: Ord, V> {
    pub default: V,
    #[serde(with = "entries")]
    pub entries: BTreeMap<C, V>,
}

impl<C: Ord, V> ContextMap<C, V> {
    pub fn at(&self, context: &C) -> &V {
        self.entries.get(context).unwrap_or(&self.default)
    }
}

/// A family of adaptives indexed by context.
///
/// Contexts that never received feedback share `prototype`. Adapting at a
/// context touches only that context's entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "C: Serialize, A: Serialize",
    deserialize = "C: Deserialize<'de> + Ord, A: Deserialize<'de>"
))]
pub struct Contextual<C: Ord, A> {
    prototype: A,
    #[serde(with = "entries")]
    overrides: BTreeMap<C, A>,
}

impl<C: Ord + Clone, A: Adaptive + Clone> Contextual<C, A> {
    pub fn new(prototype: A) -> Self {
        Self {
            prototype,
            overrides: BTreeMap::new(),
        }
    }

    pub fn prototype(&self) -> &A {
        &self.prototype
    }

    pub fn overrides(&self) -> &BTreeMap<C, A> {
        &self.overrides
    }

    /// The adaptive in charge of `context`.
    pub fn get(&self, context: &C) -> &A {
        self.overrides.get(context).unwrap_or(&self.prototype)
    }

    pub fn value_at(&self, context: &C) -> A::Value {
        self.get(context).value()
    }

    pub fn adapt_at(&self, context: C, feedback: A::Feedback) -> Self {
        let updated = self.get(&context).adapt(feedback);
        let mut overrides = self.overrides.clone();
        overrides.insert(context, updated);
        Self {
            prototype: self.prototype.clone(),
            overrides,
        }
    }

    /// Replaces the adaptive in charge of `context`.
    pub fn with_override(mut self, context: C, adaptive: A) -> Self {
        self.overrides.insert(context, adaptive);
        self
    }

    /// Consuming form of [`Contextual::adapt_at`] that reuses the map.
    pub fn into_adapted(mut self, context: C, feedback: A::Feedback) -> Self {
        let updated = self.get(&context).adapt(feedback);
        self.overrides.insert(context, updated);
        self
    }
}

impl<C: Ord + Clone, A: Adaptive + Clone> Adaptive for Contextual<C, A> {
    type Value = ContextMap<C, A::Value>;
    type Feedback = (C, A::Feedback);

    fn value(&self) -> Self::Value {
        ContextMap {
            default: self.prototype.value(),
            entries: self
                .overrides
                .iter()
                .map(|(c, a)| (c.clone(), a.value()))
                .collect(),
        }
    }

    fn adapt(&self, (context, feedback): Self::Feedback) -> Self {
        self.adapt_at(context, feedback)
    }
}

/// Puts a (possibly adapted) child back into the slot it was taken from.
pub type Reinsert<'a, D> = Box<dyn Fn(<D as Adaptive>::Value) -> D + 'a>;

/// A nested adaptive: one whose value is itself an adaptive.
pub trait Dedaptive: Adaptive
where
    Self::Value: Adaptive,
{
    /// The selected child together with a way to put it back.
    fn value_ctx(&self) -> Result<(Self::Value, Reinsert<'_, Self>)>;

    /// Derives feedback for this adaptive from feedback given to its child.
    fn propagate(&self, child_feedback: &<Self::Value as Adaptive>::Feedback) -> Self::Feedback;
}

/// The value of the selected child.
pub fn nested_value<D>(state: &D) -> <D::Value as Adaptive>::Value
where
    D: Dedaptive,
    D::Value: Adaptive,
{
    state.value().value()
}

/// Adapts the selected child with `child_feedback`, reinserts it, then adapts
/// the parent with the propagated feedback.
pub fn adapt_nested<D>(state: &D, child_feedback: <D::Value as Adaptive>::Feedback) -> Result<D>
where
    D: Dedaptive,
    D::Value: Adaptive,
    <D::Value as Adaptive>::Feedback: Clone,
{
    let (child, reinsert) = state.value_ctx()?;
    let placed = reinsert(child.adapt(child_feedback.clone()));
    let outer = placed.propagate(&child_feedback);
    Ok(placed.adapt(outer))
}

/// A bandit whose arms are bandits. The reward given to the inner bandit is
/// credited to the arm that holds it.
impl<A: Clone + PartialEq> Dedaptive for Bandit<Bandit<A>> {
    fn value_ctx(&self) -> Result<(Bandit<A>, Reinsert<'_, Self>)> {
        let selected = self.value();
        let slot = self
            .arms()
            .iter()
            .position(|arm| arm.id == selected)
            .ok_or_else(|| AbpError::Inconsistent("selected arm missing from play map".into()))?;
        let reinsert = move |child: Bandit<A>| self.with_arm_id(slot, child);
        Ok((selected, Box::new(reinsert)))
    }

    fn propagate(&self, (_, reward): &(A, f64)) -> (Bandit<A>, f64) {
        (self.value(), *reward)
    }
}

/// Serializes a map as an ordered list of `[key, value]` pairs, so that keys
/// need not be strings and output order is the map's sort order.
pub(crate) mod entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K, V, S>(map: &BTreeMap<K, V>, serializer: S) -> Result<S::Ok, S::Error>
    where
        K: Serialize,
        V: Serialize,
        S: Serializer,
    {
        serializer.collect_seq(map.iter())
    }

    pub fn deserialize<'de, K, V, D>(deserializer: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        let pairs: Vec<(K, V)> = Vec::deserialize(deserializer)?;
        Ok(pairs.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basic::{Line, Move};

    fn line(m: f64, b: f64) -> Line {
        Line::new(m, b)
    }

    #[test]
    fn pair_value_is_componentwise() {
        let pair = (line(0.0, 0.0), line(1.0, 1.0));
        assert_eq!(pair.value(), (line(0.0, 0.0), line(1.0, 1.0)));
    }

    #[test]
    fn pair_adapt_updates_each_side() {
        let pair = (line(0.0, 0.0), line(0.0, 0.0));
        let (l, r) = pair.adapt(((1.0, 1.0), (0.0, 5.0)));
        assert!((l.slope - 0.01).abs() < 1e-15 && (l.intercept - 0.01).abs() < 1e-15);
        assert_eq!(r.slope, 0.0);
        assert!((r.intercept - 0.05).abs() < 1e-15);
    }

    #[test]
    fn list_with_empty_feedback_is_unchanged() {
        let items = vec![Bandit::new(vec![1, 2]).unwrap(), Bandit::new(vec![3]).unwrap()];
        assert_eq!(items.adapt(vec![]), items);
    }

    #[test]
    fn list_zips_positionally() {
        let items = vec![line(0.0, 0.0), line(0.0, 0.0), line(0.0, 0.0)];
        let out = items.adapt(vec![(0.0, 1.0)]);
        assert!((out[0].intercept - 0.01).abs() < 1e-15);
        assert_eq!(out[1], items[1]);
        assert_eq!(out[2], items[2]);
    }

    #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
    enum Opponent {
        Jack,
        Jill,
    }

    #[test]
    fn fresh_contextual_answers_prototype_everywhere() {
        let ctx = Contextual::<Opponent, _>::new(Bandit::rps());
        let fresh = Bandit::rps().value();
        assert_eq!(ctx.value_at(&Opponent::Jack), fresh);
        assert_eq!(*ctx.value().at(&Opponent::Jill), fresh);
    }

    #[test]
    fn contextual_adapt_is_local() {
        let ctx = Contextual::new(Bandit::rps());
        let mut state = ctx.clone();
        for _ in 0..3 {
            state = state.adapt((Opponent::Jack, (Move::Rock, 1.0)));
        }
        assert_eq!(state.get(&Opponent::Jill), ctx.get(&Opponent::Jill));
        assert_ne!(state.get(&Opponent::Jack), ctx.get(&Opponent::Jack));
        assert!(!state.overrides().contains_key(&Opponent::Jill));
    }

    fn dependent() -> Bandit<Bandit<Move>> {
        let inner = Bandit::rps();
        Bandit::new(vec![inner.clone(), inner.adapt((Move::Scissors, 0.5))]).unwrap()
    }

    #[test]
    fn reinsert_of_selected_child_is_identity() {
        let outer = dependent();
        let (child, reinsert) = outer.value_ctx().unwrap();
        assert_eq!(reinsert(child), outer);
    }

    #[test]
    fn reinsert_touches_only_the_selected_slot() {
        let outer = dependent();
        let (child, reinsert) = outer.value_ctx().unwrap();
        let adapted = child.adapt((Move::Rock, 1.0));
        let placed = reinsert(adapted.clone());
        assert_eq!(placed.arms()[0].id, adapted);
        assert_eq!(placed.arms()[1], outer.arms()[1]);
        // outer statistics are untouched by reinsertion
        for (a, b) in placed.arms().iter().zip(outer.arms()) {
            assert_eq!((a.pulls, a.reward), (b.pulls, b.reward));
        }
    }

    #[test]
    fn propagate_pairs_reward_with_selected_child() {
        let outer = dependent();
        assert_eq!(outer.propagate(&(Move::Rock, 1.0)), (outer.value(), 1.0));
        assert_eq!(outer.propagate(&(Move::Paper, 0.0)).1, 0.0);
    }

    #[test]
    fn adapt_nested_bumps_selected_outer_arm_once() {
        let outer = dependent();
        let next = adapt_nested(&outer, (Move::Rock, 1.0)).unwrap();
        assert_eq!(next.arms()[0].pulls, 1);
        assert_eq!(next.arms()[0].reward, 1.0);
        assert_eq!(next.arms()[1].pulls, 0);
        assert_eq!(next.arms()[0].id.arms()[0].pulls, 1);
    }

    #[test]
    fn nested_value_composes_values() {
        let mut inner = Bandit::rps();
        for mv in [Move::Rock, Move::Paper, Move::Scissors] {
            let reward = if mv == Move::Paper { 1.0 } else { 0.0 };
            inner = inner.adapt((mv, reward));
        }
        assert_eq!(inner.value(), Move::Paper);
        let single = Bandit::new(vec![inner.clone()]).unwrap();
        assert_eq!(nested_value(&single), Move::Paper);
        let (child, _) = single.value_ctx().unwrap();
        assert_eq!(nested_value(&single), child.value());
    }

    #[test]
    fn contextual_json_round_trip() {
        let state = Contextual::new(Bandit::rps()).adapt((Opponent::Jill, (Move::Paper, 1.0)));
        let json = serde_json::to_string(&state).unwrap();
        let back: Contextual<Opponent, Bandit<Move>> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, state);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
