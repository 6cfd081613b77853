//! Penalized logistic regression by cyclic coordinate descent.
//!
//! Minimizes `sum_i w_i * loss_i + (1/C) * |beta|_1` (or
//! `(1/(2C)) * |beta|^2` for L2) with an unpenalized intercept. Each
//! coordinate takes a proximal Newton step followed by backtracking, so the
//! objective never increases.

use std::io::Write;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::config::{ClassWeight, Penalty, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::{log1p_exp, sigmoid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticOptions {
    pub penalty: Penalty,
    pub c: f64,
    pub class_weight: ClassWeight,
    pub max_iter: usize,
    pub tol: f64,
    /// Fit on z-scored columns and report coefficients on the raw scale.
    pub standardize: bool,
}

impl LogisticOptions {
    pub fn new(penalty: Penalty, c: f64) -> Self {
        LogisticOptions {
            penalty,
            c,
            class_weight: ClassWeight::Balanced,
            max_iter: 1000,
            tol: 1e-6,
            standardize: false,
        }
    }

    pub fn from_config(config: &TrainConfig, penalty: Penalty, c: f64) -> Self {
        LogisticOptions {
            penalty,
            c,
            class_weight: config.class_weight,
            max_iter: config.max_iter,
            tol: config.tol,
            standardize: false,
        }
    }

    pub fn standardized(mut self, yes: bool) -> Self {
        self.standardize = yes;
        self
    }

    fn lambda(&self) -> f64 {
        1.0 / self.c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub feature_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub penalty: Penalty,
    pub c: f64,
    pub class_weight: ClassWeight,
    pub converged: bool,
    pub iterations: usize,
    /// First-order optimality residual of the solved problem.
    pub kkt_residual: f64,
    /// Objective after each epoch, starting with the initial point.
    pub objective_history: Vec<f64>,
}

impl LogisticModel {
    pub fn decision_row(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum::<f64>()
    }

    pub fn decision(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.coefficients.len() {
            return Err(Error::Validation(format!(
                "model expects {} columns, got {}",
                self.coefficients.len(),
                x.ncols()
            )));
        }
        Ok(x.rows()
            .into_iter()
            .map(|r| self.intercept + r.dot(&ndarray::ArrayView1::from(&self.coefficients)))
            .collect())
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(self.decision(x)?.into_iter().map(sigmoid).collect())
    }

    pub fn nonzero(&self) -> Vec<usize> {
        (0..self.coefficients.len()).filter(|&j| self.coefficients[j] != 0.0).collect()
    }

    /// `term,coefficient` rows, intercept first.
    pub fn write_coefficients<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["term", "coefficient"])?;
        w.write_record(["(intercept)", &self.intercept.to_string()])?;
        for (name, b) in self.feature_names.iter().zip(&self.coefficients) {
            w.write_record([name.as_str(), &b.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Per-row weights for `y`.
pub fn sample_weights(y: &[bool], scheme: ClassWeight) -> Vec<f64> {
    match scheme {
        ClassWeight::None => vec![1.0; y.len()],
        ClassWeight::Balanced => {
            let n = y.len() as f64;
            let pos = y.iter().filter(|&&v| v).count() as f64;
            let neg = n - pos;
            let (wp, wn) = (n / (2.0 * pos), n / (2.0 * neg));
            y.iter().map(|&v| if v { wp } else { wn }).collect()
        }
    }
}

/// Weighted logistic loss and its gradient `(d/d intercept, d/d beta)`.
pub fn smooth_loss_and_grad(
    x: ArrayView2<'_, f64>,
    y: &[bool],
    weights: &[f64],
    intercept: f64,
    coefficients: &[f64],
) -> (f64, f64, Vec<f64>) {
    let mut loss = 0.0;
    let mut g0 = 0.0;
    let mut g = vec![0.0; coefficients.len()];
    for (i, row) in x.rows().into_iter().enumerate() {
        let m = intercept + row.iter().zip(coefficients).map(|(a, b)| a * b).sum::<f64>();
        let yi = f64::from(u8::from(y[i]));
        loss += weights[i] * (log1p_exp(m) - yi * m);
        let r = weights[i] * (sigmoid(m) - yi);
        g0 += r;
        for (gj, xij) in g.iter_mut().zip(row) {
            *gj += r * xij;
        }
    }
    (loss, g0, g)
}

pub fn penalty_value(penalty: Penalty, c: f64, coefficients: &[f64]) -> f64 {
    match penalty {
        Penalty::L1 => coefficients.iter().map(|b| b.abs()).sum::<f64>() / c,
        Penalty::L2 => coefficients.iter().map(|b| b * b).sum::<f64>() / (2.0 * c),
    }
}

/// Full penalized objective.
pub fn objective(
    x: ArrayView2<'_, f64>,
    y: &[bool],
    weights: &[f64],
    intercept: f64,
    coefficients: &[f64],
    penalty: Penalty,
    c: f64,
) -> f64 {
    smooth_loss_and_grad(x, y, weights, intercept, coefficients).0 + penalty_value(penalty, c, coefficients)
}

/// Largest violation of the first-order optimality conditions.
pub fn kkt_residual(g0: f64, grad: &[f64], coefficients: &[f64], penalty: Penalty, c: f64) -> f64 {
    let lambda = 1.0 / c;
    grad.iter()
        .zip(coefficients)
        .map(|(&g, &b)| match penalty {
            Penalty::L2 => (g + lambda * b).abs(),
            Penalty::L1 if b == 0.0 => (g.abs() - lambda).max(0.0),
            Penalty::L1 => (g + lambda * b.signum()).abs(),
        })
        .fold(g0.abs(), f64::max)
}

struct Problem<'a> {
    /// Nonzero entries per column.
    cols: Vec<Vec<(usize, f64)>>,
    ones: Vec<(usize, f64)>,
    y: &'a [f64],
    w: Vec<f64>,
    penalty: Penalty,
    lambda: f64,
}

impl Problem<'_> {
    fn row_loss(&self, i: usize, m: f64) -> f64 {
        self.w[i] * (log1p_exp(m) - self.y[i] * m)
    }

    /// `row_loss(i, m + d) - row_loss(i, m)`, accurate for small `d`.
    fn loss_change(&self, i: usize, m: f64, d: f64) -> f64 {
        let up = if d.abs() > 1.0 {
            log1p_exp(m + d) - log1p_exp(m)
        } else if m > 0.0 {
            d + (sigmoid(-m) * (-d).exp_m1()).ln_1p()
        } else {
            (sigmoid(m) * d.exp_m1()).ln_1p()
        };
        self.w[i] * (up - self.y[i] * d)
    }

    fn penalty_of(&self, b: f64) -> f64 {
        match self.penalty {
            Penalty::L1 => self.lambda * b.abs(),
            Penalty::L2 => 0.5 * self.lambda * b * b,
        }
    }

    fn objective(&self, margins: &[f64], beta: &[f64]) -> f64 {
        let loss: f64 = margins.iter().enumerate().map(|(i, &m)| self.row_loss(i, m)).sum();
        loss + beta.iter().map(|&b| self.penalty_of(b)).sum::<f64>()
    }

    fn gradients(&self, margins: &[f64]) -> (f64, Vec<f64>) {
        let r: Vec<f64> = margins
            .iter()
            .enumerate()
            .map(|(i, &m)| self.w[i] * (sigmoid(m) - self.y[i]))
            .collect();
        let g0 = r.iter().sum();
        let g = self
            .cols
            .iter()
            .map(|col| col.iter().map(|&(i, v)| r[i] * v).sum())
            .collect();
        (g0, g)
    }

    /// Proximal Newton direction: coordinate descent on the quadratic model of
    /// the loss at `margins`, solved until no coordinate moves the model
    /// gradient by more than `inner_tol`. Returns `(d0, d, X d)`.
    fn direction(&self, margins: &[f64], beta: &[f64], inner_tol: f64) -> (f64, Vec<f64>, Vec<f64>) {
        let n = margins.len();
        let mut r = vec![0.0; n];
        let mut h = vec![0.0; n];
        for (i, &m) in margins.iter().enumerate() {
            let p = sigmoid(m);
            r[i] = self.w[i] * (p - self.y[i]);
            h[i] = self.w[i] * p * (1.0 - p);
        }
        let curv = |entries: &[(usize, f64)]| entries.iter().map(|&(i, v)| h[i] * v * v).sum::<f64>();
        let h0 = curv(&self.ones).max(1e-12);
        let hj: Vec<f64> = self.cols.iter().map(|c| curv(c)).collect();

        let mut d0 = 0.0;
        let mut d = vec![0.0; beta.len()];
        let mut q = vec![0.0; n];
        // One coordinate move; returns the model-gradient size it removed.
        let update = |j: Option<usize>, d0: &mut f64, d: &mut [f64], q: &mut [f64]| -> f64 {
            let (entries, hess) = match j {
                Some(j) => (&self.cols[j][..], hj[j]),
                None => (&self.ones[..], h0),
            };
            if hess <= 0.0 {
                return 0.0;
            }
            let a: f64 = entries.iter().map(|&(i, v)| (r[i] + h[i] * q[i]) * v).sum();
            let (now, next) = match j {
                None => (*d0, *d0 - a / hess),
                Some(j) => {
                    let b = beta[j] + d[j];
                    let nb = match self.penalty {
                        Penalty::L2 => b - (a + self.lambda * b) / (hess + self.lambda),
                        Penalty::L1 => {
                            let z = b - a / hess;
                            z.signum() * (z.abs() - self.lambda / hess).max(0.0)
                        }
                    };
                    (d[j], d[j] + nb - b)
                }
            };
            let delta = next - now;
            if delta == 0.0 || !delta.is_finite() {
                return 0.0;
            }
            match j {
                None => *d0 = next,
                Some(j) => d[j] = next,
            }
            for &(i, v) in entries {
                q[i] += delta * v;
            }
            hess * delta.abs()
        };

        let p = beta.len();
        for _ in 0..1000 {
            let mut moved = update(None, &mut d0, &mut d, &mut q);
            for j in 0..p {
                moved = moved.max(update(Some(j), &mut d0, &mut d, &mut q));
            }
            if moved <= inner_tol {
                break;
            }
            // Cycle over the nonzero coordinates before the next full sweep.
            let active: Vec<usize> = (0..p).filter(|&j| beta[j] + d[j] != 0.0).collect();
            for _ in 0..1000 {
                let mut moved = update(None, &mut d0, &mut d, &mut q);
                for &j in &active {
                    moved = moved.max(update(Some(j), &mut d0, &mut d, &mut q));
                }
                if moved <= inner_tol {
                    break;
                }
            }
        }
        (d0, d, q)
    }
}

/// Column means and standard deviations; constant columns get unit scale.
fn column_moments(x: ArrayView2<'_, f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows().max(1) as f64;
    x.columns()
        .into_iter()
        .map(|c| {
            let mu = c.sum() / n;
            let var = c.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            let sd = var.sqrt();
            (mu, if sd > 0.0 { sd } else { 1.0 })
        })
        .unzip()
}

pub fn fit_logistic(data: &Dataset, options: &LogisticOptions) -> Result<LogisticModel> {
    if !(options.c.is_finite() && options.c > 0.0) {
        return Err(Error::Config(format!("C must be finite and positive, got {}", options.c)));
    }
    if !(options.tol > 0.0) {
        return Err(Error::Config("tol must be positive".into()));
    }
    if data.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logistic input".into()));
    }
    data.require_both_classes()?;

    let (mu, sd) = if options.standardize {
        column_moments(data.x.view())
    } else {
        (vec![0.0; data.n_cols()], vec![1.0; data.n_cols()])
    };
    let x: Array2<f64> = if options.standardize {
        let mut z = data.x.clone();
        for (j, mut col) in z.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - mu[j]) / sd[j]);
        }
        z
    } else {
        data.x.clone()
    };

    let y: Vec<f64> = data.y.iter().map(|&v| f64::from(u8::from(v))).collect();
    let cols = x
        .columns()
        .into_iter()
        .map(|c| c.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (i, v)).collect())
        .collect();
    let problem = Problem {
        cols,
        ones: (0..data.n_rows()).map(|i| (i, 1.0)).collect(),
        y: &y,
        w: sample_weights(&data.y, options.class_weight),
        penalty: options.penalty,
        lambda: options.lambda(),
    };

    let p = data.n_cols();
    let mut beta = vec![0.0; p];
    // Start the intercept at the weighted log-odds.
    let wpos: f64 = problem.w.iter().zip(&y).map(|(w, y)| w * y).sum();
    let wall: f64 = problem.w.iter().sum();
    let mut intercept = (wpos / (wall - wpos)).ln();
    let mut margins = vec![intercept; data.n_rows()];

    let mut history = vec![problem.objective(&margins, &beta)];
    let (g0, g) = problem.gradients(&margins);
    let mut residual = kkt_residual(g0, &g, &beta, options.penalty, options.c);
    let mut converged = residual <= options.tol;
    let mut iterations = 0;
    while !converged && iterations < options.max_iter {
        iterations += 1;
        let (d0, d, q) = problem.direction(&margins, &beta, (0.1 * residual).max(0.1 * options.tol));
        let (g0, g) = problem.gradients(&margins);
        let pen_change = |t: f64| -> f64 {
            beta.iter()
                .zip(&d)
                .map(|(&b, &dj)| problem.penalty_of(b + t * dj) - problem.penalty_of(b))
                .sum()
        };
        let model = g0 * d0 + g.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() + pen_change(1.0);
        // Armijo backtracking on the exact objective change.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let change: f64 = margins
                .iter()
                .zip(&q)
                .enumerate()
                .map(|(i, (&m, &qi))| problem.loss_change(i, m, t * qi))
                .sum::<f64>()
                + pen_change(t);
            if change <= 0.0 && change <= 0.01 * t * model.min(0.0) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        intercept += t * d0;
        for (b, dj) in beta.iter_mut().zip(&d) {
            *b += t * dj;
        }
        for (m, qi) in margins.iter_mut().zip(&q) {
            *m += t * qi;
        }
        history.push(problem.objective(&margins, &beta));
        let (g0, g) = problem.gradients(&margins);
        residual = kkt_residual(g0, &g, &beta, options.penalty, options.c);
        converged = residual <= options.tol;
    }
    if !converged {
        log::warn!(
            "logistic fit (C={}) stopped after {} epochs with KKT residual {:.3e}",
            options.c,
            iterations,
            residual
        );
    }

    let coefficients: Vec<f64> = beta.iter().zip(&sd).map(|(b, s)| b / s).collect();
    let intercept = intercept - coefficients.iter().zip(&mu).map(|(b, m)| b * m).sum::<f64>();
    Ok(LogisticModel {
        feature_names: data.feature_names.clone(),
        coefficients,
        intercept,
        penalty: options.penalty,
        c: options.c,
        class_weight: options.class_weight,
        converged,
        iterations,
        kkt_residual: residual,
        objective_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> Dataset {
        let x = array![[0.0, 1.0], [1.0, 0.0], [2.0, 1.0], [3.0, 0.0], [1.5, 1.0], [0.5, 0.0]];
        Dataset::new(vec!["a".into(), "b".into()], x, vec![false, false, true, true, true, false]).unwrap()
    }

    #[test]
    fn balanced_weights_split_total_mass() {
        let y = [true, false, false, false];
        let w = sample_weights(&y, ClassWeight::Balanced);
        assert_eq!(w[0], 2.0);
        assert!((w[1..].iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn huge_penalty_gives_zero_coefficients() {
        let m = fit_logistic(&toy(), &LogisticOptions::new(Penalty::L1, 1e-9)).unwrap();
        assert!(m.coefficients.iter().all(|&b| b == 0.0));
        assert!(m.intercept.abs() < 1e-9);
    }

    #[test]
    fn converges_with_small_kkt_residual() {
        for pen in [Penalty::L1, Penalty::L2] {
            let m = fit_logistic(&toy(), &LogisticOptions::new(pen, 1.0)).unwrap();
            assert!(m.converged);
            assert!(m.kkt_residual <= 1e-6);
            assert!(m.objective_history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn standardized_fit_reports_raw_scale() {
        let x = array![[0.0, 1.0], [1.0, 0.0], [2.0, 1.0], [3.0, 0.0], [1.5, 1.0], [0.5, 0.0]];
        let d = Dataset::new(vec!["a".into(), "b".into()], x, vec![false, true, false, true, true, false]).unwrap();
        let m = fit_logistic(&d, &LogisticOptions::new(Penalty::L2, 1e6).standardized(true)).unwrap();
        let raw = fit_logistic(&d, &LogisticOptions::new(Penalty::L2, 1e6)).unwrap();
        let a = m.decision(d.x.view()).unwrap();
        let b = raw.decision(d.x.view()).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-4, "{u} vs {v}");
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let x = array![[0.0], [1.0]];
        let d = Dataset::new(vec!["a".into()], x, vec![true, true]).unwrap();
        assert!(matches!(
            fit_logistic(&d, &LogisticOptions::new(Penalty::L1, 1.0)),
            Err(Error::DegenerateLabels(_))
        ));
    }
}
