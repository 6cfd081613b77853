//! Integer scoring-system search.
//!
//! Stage one screens stumps with L1 logistic regression. Stage two runs a
//! depth-first branch-and-bound over integer coefficients, minimizing mean
//! logistic loss plus an L0 charge per nonzero coefficient. Node bounds come
//! from the box-constrained continuous relaxation: any feasible point plus
//! the minimum of its linearization over the box is a valid lower bound for
//! a convex loss.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Penalty, TrainConfig};
use super::logistic::{fit_logistic, LogisticModel, LogisticOptions};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::featurize::{expand_dataset, StumpBasis, StumpColumn, StumpKind};
use crate::log1p_exp;
use crate::scoring::{Comparator, Condition, Row, ScoringTable};
use crate::sigmoid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub coefficients: Vec<i64>,
    pub intercept: i64,
    pub objective: f64,
    pub lower_bound: f64,
    /// `(objective - lower_bound) / objective`.
    pub gap: f64,
    pub nodes: u64,
    pub proven_optimal: bool,
    pub elapsed_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskSlimModel {
    pub table: ScoringTable,
    /// Stump columns handed to the integer search, in branching order.
    pub selected: Vec<String>,
    /// Screening penalty, when screening was needed.
    pub screen_c: Option<f64>,
    pub search: SearchResult,
}

impl RiskSlimModel {
    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<f64>> {
        let compiled = self.table.compile(&data.feature_names)?;
        Ok(data
            .x
            .rows()
            .into_iter()
            .map(|r| compiled.probability_row(r.as_slice().expect("standard layout")))
            .collect())
    }
}

/// Rows collapsed to distinct patterns over the selected columns.
struct Patterns {
    rows: Vec<Vec<f64>>,
    pos: Vec<f64>,
    neg: Vec<f64>,
    n: f64,
}

impl Patterns {
    fn new(data: &Dataset, selected: &[usize]) -> Self {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut p = Patterns {
            rows: Vec::new(),
            pos: Vec::new(),
            neg: Vec::new(),
            n: data.n_rows() as f64,
        };
        for (i, row) in data.x.rows().into_iter().enumerate() {
            let vals: Vec<f64> = selected.iter().map(|&j| row[j]).collect();
            let key: Vec<u64> = vals.iter().map(|v| v.to_bits()).collect();
            let k = *index.entry(key).or_insert_with(|| {
                p.rows.push(vals);
                p.pos.push(0.0);
                p.neg.push(0.0);
                p.rows.len() - 1
            });
            if data.y[i] {
                p.pos[k] += 1.0;
            } else {
                p.neg[k] += 1.0;
            }
        }
        p
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn scores(&self, coefs: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(coefs).map(|(x, b)| x * b).sum())
            .collect()
    }

    fn term(&self, p: usize, s: f64) -> f64 {
        self.pos[p] * log1p_exp(-s) + self.neg[p] * log1p_exp(s)
    }

    fn loss(&self, scores: &[f64], shift: f64) -> f64 {
        (0..self.len()).map(|p| self.term(p, scores[p] + shift)).sum::<f64>() / self.n
    }

    /// Best integer intercept for fixed scores; the loss is convex in it.
    fn best_intercept(&self, scores: &[f64], lo: i64, hi: i64) -> (i64, f64) {
        let (mut a, mut b) = (lo, hi);
        while a < b {
            let mid = a + (b - a) / 2;
            if self.loss(scores, (mid + 1) as f64) >= self.loss(scores, mid as f64) {
                b = mid;
            } else {
                a = mid + 1;
            }
        }
        (a, self.loss(scores, a as f64))
    }
}

/// Mean logistic loss plus `l0_penalty` per nonzero coefficient.
pub fn riskslim_objective(
    data: &Dataset,
    selected: &[usize],
    coefficients: &[i64],
    intercept: i64,
    l0_penalty: f64,
) -> f64 {
    let mut loss = 0.0;
    for (i, row) in data.x.rows().into_iter().enumerate() {
        let s = intercept as f64
            + selected
                .iter()
                .zip(coefficients)
                .map(|(&j, &c)| row[j] * c as f64)
                .sum::<f64>();
        loss += if data.y[i] { log1p_exp(-s) } else { log1p_exp(s) };
    }
    loss / data.n_rows() as f64 + l0_penalty * coefficients.iter().filter(|&&c| c != 0).count() as f64
}

struct Relaxation {
    /// `[intercept, coefficients...]`
    point: Vec<f64>,
    bound: f64,
}

struct Search<'a> {
    pat: &'a Patterns,
    k: usize,
    coef: (i64, i64),
    offset: (i64, i64),
    c0: f64,
}

impl Search<'_> {
    fn column(&self, j: usize, p: usize) -> f64 {
        if j == 0 {
            1.0
        } else {
            self.pat.rows[p][j - 1]
        }
    }

    fn box_of(&self, j: usize, fixed: &[i64]) -> (f64, f64) {
        if j == 0 {
            (self.offset.0 as f64, self.offset.1 as f64)
        } else if j - 1 < fixed.len() {
            let v = fixed[j - 1] as f64;
            (v, v)
        } else {
            (self.coef.0 as f64, self.coef.1 as f64)
        }
    }

    /// Projected Newton on the relaxation, warm started from `start`.
    fn relax(&self, fixed: &[i64], start: &[f64]) -> Relaxation {
        let dims = self.k + 1;
        let bounds: Vec<(f64, f64)> = (0..dims).map(|j| self.box_of(j, fixed)).collect();
        let mut x: Vec<f64> = (0..dims).map(|j| start[j].clamp(bounds[j].0, bounds[j].1)).collect();
        let mut s: Vec<f64> = (0..self.pat.len())
            .map(|p| (0..dims).map(|j| self.column(j, p) * x[j]).sum())
            .collect();
        let mut loss = self.pat.loss(&s, 0.0);
        let mut g = vec![0.0; dims];
        for _ in 0..100 {
            let h = self.derivatives(&s, &mut g);
            let projected = (0..dims)
                .map(|j| {
                    let (lo, hi) = bounds[j];
                    if lo == hi || (x[j] <= lo && g[j] > 0.0) || (x[j] >= hi && g[j] < 0.0) {
                        0.0
                    } else {
                        g[j].abs()
                    }
                })
                .fold(0.0, f64::max);
            if projected < 1e-12 {
                break;
            }
            let d = box_qp(&g, &h, &x, &bounds);
            let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                break;
            }
            let cd: Vec<f64> = (0..self.pat.len())
                .map(|p| (0..dims).map(|j| self.column(j, p) * d[j]).sum())
                .collect();
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-10 {
                let trial: Vec<f64> = s.iter().zip(&cd).map(|(a, b)| a + t * b).collect();
                let value = self.pat.loss(&trial, 0.0);
                if value <= loss + 1e-4 * t * slope {
                    s = trial;
                    loss = value;
                    for j in 0..dims {
                        x[j] = (x[j] + t * d[j]).clamp(bounds[j].0, bounds[j].1);
                    }
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        self.derivatives(&s, &mut g);
        // Any feasible point plus the minimum of the linearization over the box.
        let slack: f64 = (0..dims)
            .map(|j| {
                let (lo, hi) = bounds[j];
                (g[j] * (lo - x[j])).min(g[j] * (hi - x[j]))
            })
            .sum();
        let nnz = fixed.iter().filter(|&&v| v != 0).count() as f64;
        Relaxation {
            point: x,
            bound: loss + slack.min(0.0) + self.c0 * nnz,
        }
    }

    /// Fills the gradient and returns the Hessian of the mean loss.
    fn derivatives(&self, s: &[f64], g: &mut [f64]) -> Vec<Vec<f64>> {
        let dims = self.k + 1;
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut h = vec![vec![0.0; dims]; dims];
        let mut col = vec![0.0; dims];
        for p in 0..self.pat.len() {
            let q = sigmoid(s[p]);
            let r = self.pat.neg[p] * q - self.pat.pos[p] * (1.0 - q);
            let w = (self.pat.pos[p] + self.pat.neg[p]) * q * (1.0 - q);
            for (j, c) in col.iter_mut().enumerate() {
                *c = self.column(j, p);
            }
            for a in 0..dims {
                if col[a] == 0.0 {
                    continue;
                }
                g[a] += r * col[a];
                for b in a..dims {
                    h[a][b] += w * col[a] * col[b];
                }
            }
        }
        let n = self.pat.n;
        for a in 0..dims {
            g[a] /= n;
            for b in a..dims {
                h[a][b] /= n;
                h[b][a] = h[a][b];
            }
        }
        h
    }

    /// Integer model with the best intercept for `coefs`.
    fn complete(&self, coefs: &[i64]) -> (i64, f64) {
        let as_f: Vec<f64> = coefs.iter().map(|&c| c as f64).collect();
        let scores = self.pat.scores(&as_f);
        let (b, loss) = self.pat.best_intercept(&scores, self.offset.0, self.offset.1);
        (b, loss + self.c0 * coefs.iter().filter(|&&c| c != 0).count() as f64)
    }

    fn round(&self, fixed: &[i64], point: &[f64]) -> Vec<i64> {
        (0..self.k)
            .map(|j| {
                if j < fixed.len() {
                    fixed[j]
                } else {
                    (point[j + 1].round() as i64).clamp(self.coef.0, self.coef.1)
                }
            })
            .collect()
    }
}

/// Step `d` minimizing `g.d + d'Hd/2` with `x + d` inside the box, by coordinate descent.
fn box_qp(g: &[f64], h: &[Vec<f64>], x: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    let dims = g.len();
    let mut d = vec![0.0; dims];
    // Gradient of the quadratic model at d.
    let mut q = g.to_vec();
    for _ in 0..200 {
        let mut moved = 0.0f64;
        for j in 0..dims {
            let (lo, hi) = bounds[j];
            if lo == hi {
                continue;
            }
            let hjj = h[j][j] + 1e-10;
            let target = (x[j] + d[j] - q[j] / hjj).clamp(lo, hi) - x[j];
            let step = target - d[j];
            if step == 0.0 {
                continue;
            }
            d[j] = target;
            for (a, qa) in q.iter_mut().enumerate() {
                *qa += h[a][j] * step;
            }
            q[j] += 1e-10 * step;
            moved = moved.max(step.abs());
        }
        if moved < 1e-13 {
            break;
        }
    }
    d
}

struct Node {
    fixed: Vec<i64>,
    warm: Vec<f64>,
    bound: f64,
}

/// Branch-and-bound over integer coefficients for the `selected` columns.
pub fn search_integer(data: &Dataset, selected: &[usize], config: &TrainConfig) -> Result<SearchResult> {
    config.validate()?;
    if data.n_rows() == 0 {
        return Err(Error::Validation("no rows to fit".into()));
    }
    if let Some(&bad) = selected.iter().find(|&&j| j >= data.n_cols()) {
        return Err(Error::Validation(format!("selected column {bad} out of range")));
    }
    let started = Instant::now();
    let pat = Patterns::new(data, selected);
    let search = Search {
        pat: &pat,
        k: selected.len(),
        coef: (config.coef_min, config.coef_max),
        offset: (config.offset_min, config.offset_max),
        c0: config.l0_penalty,
    };
    let exact = search.k <= config.exact_max_stumps;

    let mut best: Option<(Vec<i64>, i64, f64)> = None;
    let consider = |coefs: Vec<i64>, best: &mut Option<(Vec<i64>, i64, f64)>| {
        let (b, obj) = search.complete(&coefs);
        if best.as_ref().map_or(true, |(_, _, ub)| obj < *ub) {
            *best = Some((coefs, b, obj));
        }
    };

    let mut stack = vec![Node {
        fixed: Vec::new(),
        warm: vec![0.0; search.k + 1],
        bound: f64::NEG_INFINITY,
    }];
    let mut nodes = 0u64;
    let mut stopped = false;
    while let Some(node) = stack.pop() {
        let elapsed = started.elapsed().as_secs_f64();
        if elapsed > config.time_limit_secs {
            if best.is_none() {
                return Err(Error::NoIncumbent { elapsed_secs: elapsed });
            }
            stack.push(node);
            stopped = true;
            break;
        }
        if nodes >= config.max_nodes {
            stack.push(node);
            stopped = true;
            break;
        }
        let ub = best.as_ref().map_or(f64::INFINITY, |b| b.2);
        let prune_at = |lb: f64| lb >= ub - 1e-12 * ub.abs().max(1.0);
        if prune_at(node.bound) {
            continue;
        }
        nodes += 1;
        if node.fixed.len() == search.k {
            consider(node.fixed, &mut best);
            continue;
        }
        let relax = search.relax(&node.fixed, &node.warm);
        consider(search.round(&node.fixed, &relax.point), &mut best);
        let ub = best.as_ref().map_or(f64::INFINITY, |b| b.2);
        if relax.bound >= ub - 1e-12 * ub.abs().max(1.0) {
            continue;
        }
        let d = node.fixed.len();
        let centre = relax.point[d + 1];
        let mut values: Vec<i64> = (config.coef_min..=config.coef_max).collect();
        values.sort_by(|a, b| {
            let da = (*a as f64 - centre).abs();
            let db = (*b as f64 - centre).abs();
            da.total_cmp(&db).then(a.cmp(b))
        });
        for &v in values.iter().rev() {
            let mut fixed = node.fixed.clone();
            fixed.push(v);
            stack.push(Node {
                fixed,
                warm: relax.point.clone(),
                bound: relax.bound.max(node.bound),
            });
        }
        if !exact && nodes % 32 == 0 {
            let lb = stack.iter().map(|n| n.bound).fold(ub, f64::min);
            if ub > 0.0 && (ub - lb) / ub <= config.target_gap {
                stopped = true;
                break;
            }
        }
    }

    let elapsed_secs = started.elapsed().as_secs_f64();
    let (coefficients, intercept, objective) = match best {
        Some(b) => b,
        None => return Err(Error::NoIncumbent { elapsed_secs }),
    };
    let lower_bound = if stopped {
        stack.iter().map(|n| n.bound).fold(objective, f64::min)
    } else {
        objective
    };
    let gap = if objective > 0.0 {
        ((objective - lower_bound) / objective).max(0.0)
    } else {
        0.0
    };
    if stopped {
        log::info!("integer search stopped after {nodes} nodes with gap {:.4}", gap);
    }
    Ok(SearchResult {
        coefficients,
        intercept,
        objective,
        lower_bound,
        gap,
        nodes,
        proven_optimal: !stopped,
        elapsed_secs,
    })
}

fn condition_for(column: &StumpColumn) -> Condition {
    match column.kind {
        StumpKind::Le(k) => Condition::new(column.feature.clone(), Comparator::Le, k),
        StumpKind::Ge(k) => Condition::new(column.feature.clone(), Comparator::Ge, k),
        StumpKind::Passthrough => Condition::new(column.feature.clone(), Comparator::Ge, 1.0),
    }
}

/// Screens stumps when there are more than `max_selected_stumps`, returning
/// selected column indices ordered by screening weight.
fn screen(stumps: &Dataset, config: &TrainConfig) -> Result<(Vec<usize>, Option<f64>)> {
    if stumps.n_cols() <= config.max_selected_stumps {
        return Ok(((0..stumps.n_cols()).collect(), None));
    }
    // Walk from the sparsest fit upward and keep the last one within the limit.
    let mut grid = config.screen_c_grid.clone();
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    let mut chosen: Option<LogisticModel> = None;
    for &c in &grid {
        let fit = fit_logistic(stumps, &LogisticOptions::from_config(config, Penalty::L1, c))?;
        let over = fit.nonzero().len() > config.max_selected_stumps;
        if over && chosen.is_some() {
            break;
        }
        chosen = Some(fit);
        if over {
            break;
        }
    }
    let chosen = chosen.expect("screening grid is non-empty");
    let mut idx = chosen.nonzero();
    idx.sort_by(|&a, &b| {
        chosen.coefficients[b]
            .abs()
            .total_cmp(&chosen.coefficients[a].abs())
            .then(a.cmp(&b))
    });
    idx.truncate(config.max_selected_stumps);
    Ok((idx, Some(chosen.c)))
}

/// Screening plus integer search over an expanded stump matrix.
pub fn fit_riskslim_stumps(stumps: &Dataset, columns: &[StumpColumn], config: &TrainConfig) -> Result<RiskSlimModel> {
    config.validate()?;
    if columns.len() != stumps.n_cols() {
        return Err(Error::Validation(format!(
            "{} stump columns but {} matrix columns",
            columns.len(),
            stumps.n_cols()
        )));
    }
    stumps.require_both_classes()?;
    let (selected, screen_c) = screen(stumps, config)?;
    let search = search_integer(stumps, &selected, config)?;
    let rows = selected
        .iter()
        .zip(&search.coefficients)
        .filter(|(_, &c)| c != 0)
        .map(|(&j, &c)| Row {
            condition: condition_for(&columns[j]),
            points: c,
        })
        .collect();
    let table = ScoringTable::new(search.intercept, (config.coef_min, config.coef_max), rows)?;
    Ok(RiskSlimModel {
        table,
        selected: selected.iter().map(|&j| columns[j].name.clone()).collect(),
        screen_c,
        search,
    })
}

pub fn fit_riskslim_lite(data: &Dataset, basis: &StumpBasis, config: &TrainConfig) -> Result<RiskSlimModel> {
    let (stumps, columns) = expand_dataset(data, basis)?;
    fit_riskslim_stumps(&stumps, &columns, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn brute(data: &Dataset, cols: &[usize], cfg: &TrainConfig) -> f64 {
        let k = cols.len();
        let width = (cfg.coef_max - cfg.coef_min + 1) as usize;
        let mut best = f64::INFINITY;
        for code in 0..width.pow(k as u32) {
            let mut c = code;
            let coefs: Vec<i64> = (0..k)
                .map(|_| {
                    let v = cfg.coef_min + (c % width) as i64;
                    c /= width;
                    v
                })
                .collect();
            for b in cfg.offset_min..=cfg.offset_max {
                best = best.min(riskslim_objective(data, cols, &coefs, b, cfg.l0_penalty));
            }
        }
        best
    }

    fn toy(n: usize, k: usize, seed: u64) -> Dataset {
        let mut x = Array2::zeros((n, k));
        let mut y = Vec::new();
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 33) as f64 / (1u64 << 31) as f64
        };
        for i in 0..n {
            for j in 0..k {
                x[[i, j]] = f64::from(u8::from(next() < 0.5));
            }
            y.push(next() < 0.3 + 0.4 * x[[i, 0]]);
        }
        y[0] = true;
        y[1] = false;
        Dataset::new((0..k).map(|j| format!("s{j}")).collect(), x, y).unwrap()
    }

    #[test]
    fn matches_brute_force_on_small_instances() {
        let cfg = TrainConfig {
            offset_min: -10,
            offset_max: 10,
            ..TrainConfig::default()
        };
        for seed in 0..4 {
            let d = toy(20, 2, seed);
            let r = search_integer(&d, &[0, 1], &cfg).unwrap();
            assert!(r.proven_optimal);
            assert!((r.objective - brute(&d, &[0, 1], &cfg)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_stumps_gives_intercept_only() {
        let d = toy(30, 1, 9);
        let r = search_integer(&d, &[], &TrainConfig::default()).unwrap();
        assert!(r.coefficients.is_empty());
        let best = (-100..=100)
            .map(|b| (b, riskslim_objective(&d, &[], &[], b, 0.0)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert_eq!(r.intercept, best.0);
    }

    #[test]
    fn builds_table_rows() {
        let d = toy(60, 2, 3);
        let cols = vec![
            StumpColumn {
                name: "s0".into(),
                feature: "s0".into(),
                kind: StumpKind::Passthrough,
            },
            StumpColumn {
                name: "s1".into(),
                feature: "s1".into(),
                kind: StumpKind::Passthrough,
            },
        ];
        let m = fit_riskslim_stumps(&d, &cols, &TrainConfig::default()).unwrap();
        assert_eq!(m.selected.len(), 2);
        assert!(m.table.rows.iter().all(|r| (-5..=5).contains(&r.points)));
        let p = m.predict_proba(&d).unwrap();
        assert_eq!(p.len(), 60);
    }

    #[test]
    fn exhausted_time_without_incumbent() {
        let d = toy(30, 2, 1);
        let cfg = TrainConfig {
            time_limit_secs: 1e-12,
            ..TrainConfig::default()
        };
        assert!(matches!(search_integer(&d, &[0, 1], &cfg), Err(Error::NoIncumbent { .. })));
    }
}
