//! Observations over trace prefixes, and monitor-driven stopping.
//!
//! A monitor is any `Fn(&[S]) -> B` that is total on every finite prefix,
//! including the empty one.

use crate::adaptive::Adaptive;
use crate::basic::Line;
use crate::combinators::Trace;

/// Applies `m` to every prefix of `trace`, shortest first. The result has
/// one more element than the trace.
pub fn monitor<S, B>(m: impl Fn(&[S]) -> B, trace: &[S]) -> Vec<B> {
    (0..=trace.len()).map(|i| m(&trace[..i])).collect()
}

/// Holds when the prefix has at least `n` states and `p` accepts the values
/// of the last `n`, most recent first.
pub fn ensure_last<A, P>(n: usize, p: P) -> impl Fn(&[A]) -> bool
where
    A: Adaptive,
    P: Fn(&[A::Value]) -> bool,
{
    move |prefix: &[A]| {
        if prefix.len() < n {
            return false;
        }
        let window: Vec<A::Value> = prefix.iter().rev().take(n).map(Adaptive::value).collect();
        p(&window)
    }
}

pub fn all_eq<T: PartialEq>(values: &[T]) -> bool {
    match values.split_first() {
        None => true,
        Some((first, rest)) => rest.iter().all(|v| v == first),
    }
}

/// The last three values agree.
pub fn convergence<A>() -> impl Fn(&[A]) -> bool
where
    A: Adaptive,
    A::Value: PartialEq,
{
    ensure_last(3, all_eq::<A::Value>)
}

/// Consecutive lines differ by at most `tolerance` in slope and intercept.
pub fn are_close(tolerance: f64) -> impl Fn(&[Line]) -> bool {
    move |lines: &[Line]| {
        lines.windows(2).all(|w| {
            let d = (w[0].slope - w[1].slope)
                .abs()
                .max((w[0].intercept - w[1].intercept).abs());
            d <= tolerance
        })
    }
}

/// Consumes `producer` until `m` accepts the prefix seen so far, and returns
/// that prefix.
///
/// The empty prefix is tested first, so a monitor that accepts `[]` stops
/// before any state is consumed. If the producer runs dry, the whole trace is
/// returned when `m` accepts it and an empty trace otherwise.
pub fn until<S, I, M>(producer: I, m: M) -> Trace<S>
where
    I: IntoIterator<Item = S>,
    M: Fn(&[S]) -> bool,
{
    let mut seen = Vec::new();
    for next in producer {
        if m(&seen) {
            return Trace::new(seen);
        }
        seen.push(next);
    }
    if m(&seen) {
        Trace::new(seen)
    } else {
        Trace::new(Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basic::Move;
    use crate::combinators::train_iter;

    #[derive(Clone, Copy, Debug, PartialEq)]
    struct Const(Move);

    impl Adaptive for Const {
        type Value = Move;
        type Feedback = Move;

        fn value(&self) -> Move {
            self.0
        }

        fn adapt(&self, m: Move) -> Self {
            Const(m)
        }
    }

    #[test]
    fn monitor_sees_every_prefix() {
        assert_eq!(monitor(|p: &[char]| p.len(), &['a', 'b']), vec![0, 1, 2]);
        assert_eq!(monitor(|p: &[Const]| all_eq(&crate::combinators::values_of(p)), &[]), vec![true]);
        let m = ensure_last(1, all_eq::<Move>);
        assert_eq!(monitor(m, &[Const(Move::Rock)]), vec![false, true]);
    }

    #[test]
    fn ensure_last_requires_enough_states() {
        let m = ensure_last(2, all_eq::<Line>);
        assert!(!m(&[Line::new(1.0, 0.0)]));
        assert!(m(&[Line::new(5.0, 5.0), Line::new(1.0, 0.0), Line::new(1.0, 0.0)]));
    }

    #[test]
    fn are_close_threshold() {
        let m = ensure_last(2, are_close(0.001));
        assert!(!m(&[Line::new(0.0, 0.0), Line::new(0.002, 0.0)]));
        assert!(m(&[Line::new(0.0, 0.0), Line::new(0.0005, -0.0005)]));
    }

    #[test]
    fn all_eq_examples() {
        assert!(all_eq::<Move>(&[]));
        assert!(all_eq(&[Move::Rock]));
        assert!(!all_eq(&[Move::Rock, Move::Paper]));
    }

    #[test]
    fn convergence_needs_three_equal_values() {
        let m = convergence::<Const>();
        let r = Const(Move::Rock);
        assert!(!m(&[r, r]));
        assert!(m(&[Const(Move::Paper), r, r, r]));
        assert!(!m(&[r, r, Const(Move::Paper)]));
    }

    #[test]
    fn until_accepting_empty_prefix_stops_immediately() {
        assert!(until(1..10, |_: &[i32]| true).is_empty());
    }

    #[test]
    fn until_exhausted_without_acceptance_is_empty() {
        assert!(until(1..10, |_: &[i32]| false).is_empty());
        let full = until(1..4, |p: &[i32]| p.len() == 3);
        assert_eq!(full.into_inner(), vec![1, 2, 3]);
    }

    #[test]
    fn until_returns_shortest_accepted_prefix() {
        let t = until(1.., |p: &[i32]| p.iter().sum::<i32>() >= 10);
        assert_eq!(t.into_inner(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn regression_stops_when_lines_settle() {
        let points = std::iter::repeat((1.0, 3.0));
        let stopped = until(train_iter(Line::new(0.0, 0.0), points), ensure_last(2, are_close(0.001)));
        let lines = stopped.snapshots();
        assert!(lines.len() >= 2);
        assert!(are_close(0.001)(&lines[lines.len() - 2..]));
        assert!(!are_close(0.001)(&lines[lines.len() - 3..lines.len() - 1]));
    }
}
