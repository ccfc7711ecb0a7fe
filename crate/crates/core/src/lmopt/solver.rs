use serde::{Deserialize, Serialize};

use super::problems::ResidualProblem;
use crate::error::{invalid, Result};

/// Smallest pivot magnitude accepted by [`solve_linear`].
const PIVOT_TOL: f64 = 1e-14;
const DIAG_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Damping {
    /// `λ · diag(JᵀJ)`
    #[default]
    Marquardt,
    /// `λ · I`
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub lambda0: f64,
    /// Factor by which `λ` is raised or lowered.
    pub nu: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub damping: Damping,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            lambda0: 1e-3,
            nu: 10.0,
            lambda_min: 1e-12,
            lambda_max: 1e12,
            damping: Damping::Marquardt,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min > 0.0 && self.lambda_min <= self.lambda_max && self.lambda_max.is_finite()) {
            return Err(invalid("lambda_min", "need 0 < lambda_min <= lambda_max < inf"));
        }
        if !(self.lambda0 >= self.lambda_min && self.lambda0 <= self.lambda_max) {
            return Err(invalid("lambda0", "must lie within [lambda_min, lambda_max]"));
        }
        if !(self.nu > 1.0 && self.nu.is_finite()) {
            return Err(invalid("nu", "must be a finite factor above 1"));
        }
        Ok(())
    }

    pub(crate) fn raise(&self, lambda: f64) -> f64 {
        (lambda * self.nu).min(self.lambda_max)
    }

    pub(crate) fn lower(&self, lambda: f64) -> f64 {
        (lambda / self.nu).max(self.lambda_min)
    }
}

/// Gaussian elimination with partial pivoting. `None` when a pivot falls
/// below `1e-14` in magnitude or the input is not finite.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        let pivot = a[pivot_row][col];
        if !pivot.is_finite() || pivot.abs() < PIVOT_TOL {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// One damped Gauss-Newton step from `x`. Returns `x` unchanged and `false`
/// when the residuals are not finite or the damped system is singular.
pub fn lm_step<P: ResidualProblem + ?Sized>(prob: &P, x: &[f64], lambda: f64, damping: Damping) -> (Vec<f64>, bool) {
    let f = prob.residuals(x);
    let j = prob.jacobian(x);
    if f.iter().chain(j.iter().flatten()).any(|v| !v.is_finite()) {
        return (x.to_vec(), false);
    }
    let n = x.len();
    let mut normal = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for (row, fi) in j.iter().zip(&f) {
        for a in 0..n {
            rhs[a] -= row[a] * fi;
            for b in 0..n {
                normal[a][b] += row[a] * row[b];
            }
        }
    }
    for (i, row) in normal.iter_mut().enumerate() {
        let scale = match damping {
            Damping::Marquardt => row[i].max(DIAG_FLOOR),
            Damping::Identity => 1.0,
        };
        row[i] += lambda * scale;
    }
    match solve_linear(normal, rhs) {
        Some(delta) => {
            let next: Vec<f64> = x.iter().zip(&delta).map(|(xi, d)| xi + d).collect();
            if next.iter().all(|v| v.is_finite()) {
                (next, true)
            } else {
                (x.to_vec(), false)
            }
        }
        None => (x.to_vec(), false),
    }
}

/// Every point at which `f` was evaluated, in order, with the best one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmRun<Visit = ()> {
    pub evaluated: Vec<Vec<f64>>,
    pub losses: Vec<f64>,
    pub best_x: Vec<f64>,
    pub best_loss: f64,
    /// Controller decisions; empty for the standard method.
    pub visited: Vec<Visit>,
}

impl<V> LmRun<V> {
    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }

    /// `(L(x0) - best) / L(x0)`
    pub fn scaled_reduction(&self) -> f64 {
        let l0 = self.initial_loss();
        (l0 - self.best_loss) / l0
    }

    pub(crate) fn start(x0: Vec<f64>, loss: f64) -> Self {
        Self {
            best_x: x0.clone(),
            best_loss: if loss.is_finite() { loss } else { f64::INFINITY },
            evaluated: vec![x0],
            losses: vec![loss],
            visited: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, x: Vec<f64>, loss: f64) {
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_x = x.clone();
        }
        self.evaluated.push(x);
        self.losses.push(loss);
    }
}

/// Classic control with `budget` evaluations of `f`, the start included:
/// an improving step is kept and `λ` lowered, anything else is discarded
/// and `λ` raised.
pub fn standard_lm<P: ResidualProblem + ?Sized>(prob: &P, x0: &[f64], budget: usize, cfg: &LmConfig) -> Result<LmRun> {
    if budget == 0 {
        return Err(invalid("budget", "must be at least 1"));
    }
    cfg.validate()?;
    let mut x = x0.to_vec();
    let mut loss = prob.loss(&x);
    let mut run = LmRun::start(x.clone(), loss);
    let mut lambda = cfg.lambda0;
    while run.evaluated.len() < budget {
        let (candidate, _) = lm_step(prob, &x, lambda, cfg.damping);
        let candidate_loss = prob.loss(&candidate);
        run.record(candidate.clone(), candidate_loss);
        if candidate_loss < loss {
            x = candidate;
            loss = candidate_loss;
            lambda = cfg.lower(lambda);
        } else {
            lambda = cfg.raise(lambda);
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmopt::Benchmark;

    #[test]
    fn solves_small_system() {
        let x = solve_linear(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!(solve_linear(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn zero_residual_means_zero_step() {
        let (x, ok) = lm_step(&Benchmark::Rosenbrock, &[1.0, 1.0], 1e-3, Damping::Marquardt);
        assert!(ok);
        assert_eq!(x, vec![1.0, 1.0]);
    }

    #[test]
    fn budget_one_only_evaluates_start() {
        let run = standard_lm(&Benchmark::Rosenbrock, &[-1.2, 1.0], 1, &LmConfig::default()).unwrap();
        assert_eq!(run.evaluated.len(), 1);
        assert_eq!(run.best_loss, Benchmark::Rosenbrock.loss(&[-1.2, 1.0]));
        assert!(standard_lm(&Benchmark::Rosenbrock, &[-1.2, 1.0], 0, &LmConfig::default()).is_err());
    }

    #[test]
    fn rosenbrock_converges() {
        let run = standard_lm(&Benchmark::Rosenbrock, &[-1.2, 1.0], 50, &LmConfig::default()).unwrap();
        assert_eq!(run.evaluated.len(), 50);
        assert!(run.best_loss < 1e-6, "{}", run.best_loss);
    }

    #[test]
    fn config_validation() {
        let bad = LmConfig { nu: 1.0, ..LmConfig::default() };
        assert!(bad.validate().is_err());
        let bad = LmConfig { lambda0: 0.0, ..LmConfig::default() };
        assert!(bad.validate().is_err());
    }
}
