use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

/// A nonlinear least-squares problem: minimize `L(x) = |f(x)|²`.
pub trait ResidualProblem {
    fn dim(&self) -> usize;
    fn residual_count(&self) -> usize;
    fn residuals(&self, x: &[f64]) -> Vec<f64>;
    /// Row `i` holds the gradient of residual `i`.
    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>>;

    fn init_box(&self) -> Vec<(f64, f64)> {
        vec![(-10.0, 10.0); self.dim()]
    }

    fn loss(&self, x: &[f64]) -> f64 {
        self.residuals(x).iter().map(|r| r * r).sum()
    }

    fn sample_start(&self, rng: &mut Rng) -> Vec<f64> {
        self.init_box()
            .into_iter()
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Rosenbrock,
    HelicalValley,
    BrownDennis,
}

pub fn benchmark_functions() -> [Benchmark; 3] {
    Benchmark::ALL
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::Rosenbrock, Benchmark::HelicalValley, Benchmark::BrownDennis];

    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::Rosenbrock => "rosenbrock",
            Benchmark::HelicalValley => "helical_valley",
            Benchmark::BrownDennis => "brown_dennis",
        }
    }
}

const BROWN_DENNIS_M: usize = 20;

fn helical_theta(x1: f64, x2: f64) -> f64 {
    if x1 > 0.0 {
        (x2 / x1).atan() / (2.0 * PI)
    } else if x1 < 0.0 {
        (x2 / x1).atan() / (2.0 * PI) + 0.5
    } else if x2 == 0.0 {
        0.0
    } else {
        0.25 * x2.signum()
    }
}

impl ResidualProblem for Benchmark {
    fn dim(&self) -> usize {
        match self {
            Benchmark::Rosenbrock => 2,
            Benchmark::HelicalValley => 3,
            Benchmark::BrownDennis => 4,
        }
    }

    fn residual_count(&self) -> usize {
        match self {
            Benchmark::Rosenbrock => 2,
            Benchmark::HelicalValley => 3,
            Benchmark::BrownDennis => BROWN_DENNIS_M,
        }
    }

    fn residuals(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Benchmark::Rosenbrock => vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]],
            Benchmark::HelicalValley => {
                let r = x[0].hypot(x[1]);
                vec![
                    10.0 * (x[2] - 10.0 * helical_theta(x[0], x[1])),
                    10.0 * (r - 1.0),
                    x[2],
                ]
            }
            Benchmark::BrownDennis => (1..=BROWN_DENNIS_M)
                .map(|i| {
                    let t = i as f64 / 5.0;
                    let u = x[0] + t * x[1] - t.exp();
                    let v = x[2] + x[3] * t.sin() - t.cos();
                    u * u + v * v
                })
                .collect(),
        }
    }

    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match self {
            Benchmark::Rosenbrock => vec![vec![-20.0 * x[0], 10.0], vec![-1.0, 0.0]],
            Benchmark::HelicalValley => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                if r2 == 0.0 {
                    return vec![vec![0.0, 0.0, 10.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]];
                }
                let r = r2.sqrt();
                let k = 100.0 / (2.0 * PI * r2);
                vec![
                    vec![k * x[1], -k * x[0], 10.0],
                    vec![10.0 * x[0] / r, 10.0 * x[1] / r, 0.0],
                    vec![0.0, 0.0, 1.0],
                ]
            }
            Benchmark::BrownDennis => (1..=BROWN_DENNIS_M)
                .map(|i| {
                    let t = i as f64 / 5.0;
                    let (s, c) = t.sin_cos();
                    let u = x[0] + t * x[1] - t.exp();
                    let v = x[2] + x[3] * s - c;
                    vec![2.0 * u, 2.0 * u * t, 2.0 * v, 2.0 * v * s]
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_minima() {
        assert_eq!(Benchmark::Rosenbrock.loss(&[1.0, 1.0]), 0.0);
        assert_eq!(Benchmark::HelicalValley.loss(&[1.0, 0.0, 0.0]), 0.0);
        // published minimum of the 20-residual form
        let l = Benchmark::BrownDennis.loss(&[-11.594_439_9, 13.203_630_1, -0.403_439_5, 0.236_779_3]);
        assert!((l - 85_822.2).abs() < 0.1, "{l}");
    }

    #[test]
    fn shapes() {
        for b in Benchmark::ALL {
            let x = vec![0.3; b.dim()];
            assert_eq!(b.residuals(&x).len(), b.residual_count());
            let j = b.jacobian(&x);
            assert_eq!(j.len(), b.residual_count());
            assert!(j.iter().all(|row| row.len() == b.dim()));
        }
    }

    #[test]
    fn helical_theta_branches() {
        assert!((helical_theta(1.0, 1.0) - 0.125).abs() < 1e-15);
        assert!((helical_theta(-1.0, 1.0) - 0.375).abs() < 1e-15);
        assert_eq!(helical_theta(0.0, 2.0), 0.25);
        assert_eq!(helical_theta(0.0, -2.0), -0.25);
    }
}
