//! Cost-minimizing action choice with forced exploration.
//!
//! Shared by the sorting Q-table and the Levenberg-Marquardt controller.

use serde::{Deserialize, Serialize};

use crate::adaptive::Adaptive;
use crate::error::{invalid, Result};

/// Number of trials an action gets before it is judged on its average cost.
pub const DEFAULT_EXPLORE_CUTOFF: u64 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionStats<A> {
    pub action: A,
    pub count: u64,
    pub avg_cost: f64,
}

/// `(count * avg + cost) / (count + 1)`
pub fn run_avg(count: u64, avg: f64, cost: f64) -> f64 {
    let n = count as f64;
    (n * avg + cost) / (n + 1.0)
}

/// Picks the first action tried fewer than `explore_cutoff` times, otherwise
/// the one with the lowest average cost (earliest wins ties).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionTable<A> {
    entries: Vec<ActionStats<A>>,
    explore_cutoff: u64,
}

impl<A: Clone + PartialEq> ActionTable<A> {
    pub fn new(actions: impl IntoIterator<Item = A>, explore_cutoff: u64) -> Result<Self> {
        let entries: Vec<_> = actions
            .into_iter()
            .map(|action| ActionStats {
                action,
                count: 0,
                avg_cost: 0.0,
            })
            .collect();
        if entries.is_empty() {
            return Err(invalid("actions", "at least one action is required"));
        }
        for (i, e) in entries.iter().enumerate() {
            if entries[..i].iter().any(|o| o.action == e.action) {
                return Err(invalid("actions", "actions must be distinct"));
            }
        }
        Ok(Self {
            entries,
            explore_cutoff,
        })
    }

    pub fn from_entries(entries: Vec<ActionStats<A>>, explore_cutoff: u64) -> Result<Self> {
        let mut table = Self::new(entries.iter().map(|e| e.action.clone()), explore_cutoff)?;
        table.entries = entries;
        Ok(table)
    }

    pub fn entries(&self) -> &[ActionStats<A>] {
        &self.entries
    }

    pub fn explore_cutoff(&self) -> u64 {
        self.explore_cutoff
    }

    pub fn stats(&self, action: &A) -> Option<&ActionStats<A>> {
        self.entries.iter().find(|e| e.action == *action)
    }

    pub fn total_count(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn is_explored(&self) -> bool {
        self.entries.iter().all(|e| e.count >= self.explore_cutoff)
    }

    /// Lowest average cost regardless of exploration state.
    pub fn greedy(&self) -> A {
        let mut best = &self.entries[0];
        for e in &self.entries[1..] {
            if e.avg_cost < best.avg_cost {
                best = e;
            }
        }
        best.action.clone()
    }
}

impl<A: Clone + PartialEq> Adaptive for ActionTable<A> {
    type Value = A;
    type Feedback = (A, f64);

    fn value(&self) -> A {
        match self.entries.iter().find(|e| e.count < self.explore_cutoff) {
            Some(unexplored) => unexplored.action.clone(),
            None => self.greedy(),
        }
    }

    fn adapt(&self, (action, cost): (A, f64)) -> Self {
        let mut next = self.clone();
        if let Some(e) = next.entries.iter_mut().find(|e| e.action == action) {
            e.avg_cost = run_avg(e.count, e.avg_cost, cost);
            e.count += 1;
        }
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(entries: &[(char, u64, f64)]) -> ActionTable<char> {
        ActionTable::from_entries(
            entries
                .iter()
                .map(|&(action, count, avg_cost)| ActionStats { action, count, avg_cost })
                .collect(),
            8,
        )
        .unwrap()
    }

    #[test]
    fn unexplored_first() {
        assert_eq!(table(&[('m', 8, 1.0), ('i', 3, 0.0)]).value(), 'i');
        assert_eq!(table(&[('m', 0, 0.0), ('i', 0, 0.0)]).value(), 'm');
    }

    #[test]
    fn argmin_once_explored() {
        assert_eq!(table(&[('m', 8, 1.0), ('i', 8, 2.0)]).value(), 'm');
        assert_eq!(table(&[('m', 8, 2.0), ('i', 8, 1.0)]).value(), 'i');
        assert_eq!(table(&[('m', 8, 1.0), ('i', 8, 1.0)]).value(), 'm');
    }

    #[test]
    fn running_average_update() {
        let t = table(&[('m', 1, 2.0), ('i', 0, 0.0)]).adapt(('m', 4.0));
        assert_eq!(t.entries()[0].count, 2);
        assert_eq!(t.entries()[0].avg_cost, 3.0);
        assert_eq!(t.entries()[1], ActionStats { action: 'i', count: 0, avg_cost: 0.0 });
        let t = table(&[('m', 0, 99.0), ('i', 0, 0.0)]).adapt(('m', 7.5));
        assert_eq!(t.entries()[0].avg_cost, 7.5);
    }

    #[test]
    fn rejects_bad_action_sets() {
        assert!(ActionTable::<char>::new([], 8).is_err());
        assert!(ActionTable::new(['a', 'a'], 8).is_err());
    }
}
