//! Damped Newton (Gauss-Newton when overdetermined) on the node-weight
//! moment equations `sum_k w_k g_i(x_k) = c_i`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use super::template::{Endpoint, SupportTemplate};
use crate::funcsys::{FunctionSystem, MomentVector, SystemError};
use crate::measure::AtomicMeasure;

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Convergence threshold on `max_i |r_i| / (1 + |c_i|)`.
    pub tol: f64,
    /// Weights at or below `prune_rel * total mass` are dropped.
    pub prune_rel: f64,
    /// Nodes closer than `merge_rel * (b - a)` are merged.
    pub merge_rel: f64,
    /// Free nodes stay in `[a + eps, b - eps]`, `eps = clamp_rel * (b - a)`.
    pub clamp_rel: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iter: 200, tol: 1e-12, prune_rel: 1e-10, merge_rel: 1e-8, clamp_rel: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NewtonError {
    #[error("no convergence after {iterations} iterations (best scaled residual {residual:.3e})")]
    NoConvergence { best: AtomicMeasure, residual: f64, iterations: usize },
    #[error("singular Jacobian after {iterations} iterations (scaled residual {residual:.3e})")]
    SingularJacobian { residual: f64, iterations: usize },
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonOutcome {
    pub measure: AtomicMeasure,
    pub iterations: usize,
    /// Max scaled moment residual of `measure`.
    pub residual: f64,
    /// Nodes whose weight converged to zero and were dropped.
    pub pruned: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Point {
    node: f64,
    weight: f64,
    free: bool,
}

/// Solves for the measure with the template's structure, starting from
/// `init` mapped onto the template (see [`fit_to_template`]).
pub fn newton_solve(
    sys: &FunctionSystem,
    c: &MomentVector,
    template: &SupportTemplate,
    init: &AtomicMeasure,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome, NewtonError> {
    let pts = fit_to_template(init, template, sys.a(), sys.b());
    Solver::new(sys, c, opts).run(pts)
}

/// Refines `measure` keeping its own support structure: atoms at `a` or `b`
/// stay there, interior atoms move. Used when the representing measure is
/// unique and its support is already known approximately.
pub fn polish(
    sys: &FunctionSystem,
    c: &MomentVector,
    measure: &AtomicMeasure,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome, NewtonError> {
    let (a, b) = (sys.a(), sys.b());
    let pts = measure
        .atoms()
        .iter()
        .map(|at| Point { node: at.node, weight: at.weight, free: at.node != a && at.node != b })
        .collect();
    Solver::new(sys, c, opts).run(pts)
}

/// Maps an approximate measure onto the template: forced endpoints are taken
/// from atoms already there or inserted with weight `1e-3 * mass`; interior
/// atoms are merged pairwise (closest first) or padded at the midpoint of the
/// widest gap until they match the free-node count; weights are rescaled to
/// keep the total mass.
pub(crate) fn fit_to_template(init: &AtomicMeasure, template: &SupportTemplate, a: f64, b: f64) -> Vec<Point> {
    let mass = init.total_mass();
    let seed_weight = 1e-3 * if mass > 0.0 { mass } else { 1.0 };
    let nudge = 1e-4 * (b - a);
    let mut fixed: Vec<Point> = Vec::new();
    let mut interior: Vec<(f64, f64)> = Vec::new();
    for at in init.atoms() {
        if at.node == a && template.forces(Endpoint::A) {
            fixed.push(Point { node: a, weight: at.weight, free: false });
        } else if at.node == b && template.forces(Endpoint::B) {
            fixed.push(Point { node: b, weight: at.weight, free: false });
        } else {
            interior.push((at.node.clamp(a + nudge, b - nudge), at.weight));
        }
    }
    for (e, x) in [(Endpoint::A, a), (Endpoint::B, b)] {
        if template.forces(e) && !fixed.iter().any(|p| p.node == x) {
            fixed.push(Point { node: x, weight: seed_weight, free: false });
        }
    }
    interior.sort_by(|p, q| p.0.total_cmp(&q.0));
    if template.free_node_count == 0 && !fixed.is_empty() {
        // split each interior atom between the endpoints, keeping its mass
        let single = fixed.len() == 1;
        for (x, w) in interior.drain(..) {
            let t = (x - a) / (b - a);
            for p in &mut fixed {
                let share = if single {
                    1.0
                } else if p.node == a {
                    1.0 - t
                } else {
                    t
                };
                p.weight += share * w;
            }
        }
    }
    while interior.len() > template.free_node_count {
        let k = (0..interior.len() - 1)
            .min_by(|&i, &j| {
                let gi = interior[i + 1].0 - interior[i].0;
                let gj = interior[j + 1].0 - interior[j].0;
                gi.total_cmp(&gj)
            })
            .unwrap();
        let (x0, w0) = interior[k];
        let (x1, w1) = interior.remove(k + 1);
        let w = w0 + w1;
        interior[k] = (if w > 0.0 { (x0 * w0 + x1 * w1) / w } else { 0.5 * (x0 + x1) }, w);
    }
    while interior.len() < template.free_node_count {
        let mut marks = vec![a];
        marks.extend(interior.iter().map(|p| p.0));
        marks.push(b);
        let k = (0..marks.len() - 1)
            .max_by(|&i, &j| (marks[i + 1] - marks[i]).total_cmp(&(marks[j + 1] - marks[j])))
            .unwrap();
        interior.insert(k, (0.5 * (marks[k] + marks[k + 1]), seed_weight));
    }
    let mut pts: Vec<Point> = fixed;
    pts.extend(interior.into_iter().map(|(node, weight)| Point { node, weight, free: true }));
    let total: f64 = pts.iter().map(|p| p.weight).sum();
    if mass > 0.0 && total > 0.0 {
        for p in &mut pts {
            p.weight *= mass / total;
        }
    }
    pts.sort_by(|p, q| p.node.total_cmp(&q.node));
    pts
}

struct Solver<'a> {
    sys: &'a FunctionSystem,
    c: &'a [f64],
    opts: &'a NewtonOptions,
    rows: usize,
    iterations: usize,
    best: Option<(f64, Vec<Point>)>,
}

enum Stop {
    Converged,
    Stalled { rank_deficient: bool },
    Budget,
}

impl<'a> Solver<'a> {
    fn new(sys: &'a FunctionSystem, c: &'a MomentVector, opts: &'a NewtonOptions) -> Self {
        Solver { sys, c: c.as_slice(), opts, rows: c.len(), iterations: 0, best: None }
    }

    fn eps(&self) -> f64 {
        self.opts.clamp_rel * (self.sys.b() - self.sys.a())
    }

    /// Scaled residuals `(sum_k w_k g_i(x_k) - c_i) / (1 + |c_i|)`.
    fn residual(&self, pts: &[Point]) -> Result<Vec<f64>, NewtonError> {
        let mut r = vec![0.0; self.rows];
        for (i, ri) in r.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in pts {
                if p.weight != 0.0 {
                    s += p.weight * self.sys.eval(i, p.node)?;
                }
            }
            *ri = (s - self.c[i]) / (1.0 + self.c[i].abs());
        }
        Ok(r)
    }

    fn jacobian(&self, pts: &[Point]) -> Result<DMatrix<f64>, NewtonError> {
        let nfree = pts.iter().filter(|p| p.free).count();
        let cols = pts.len() + nfree;
        let mut j = DMatrix::zeros(self.rows, cols);
        for i in 0..self.rows {
            let scale = 1.0 / (1.0 + self.c[i].abs());
            let mut fc = pts.len();
            for (k, p) in pts.iter().enumerate() {
                j[(i, k)] = self.sys.eval(i, p.node)? * scale;
                if p.free {
                    j[(i, fc)] = p.weight * self.sys.eval_derivative(i, 1, p.node)? * scale;
                    fc += 1;
                }
            }
        }
        Ok(j)
    }

    fn apply_step(&self, pts: &[Point], step: &DVector<f64>, alpha: f64) -> Vec<Point> {
        let (a, b) = (self.sys.a(), self.sys.b());
        let eps = self.eps();
        let mut fc = pts.len();
        pts.iter()
            .enumerate()
            .map(|(k, p)| {
                let mut q = *p;
                q.weight = (p.weight + alpha * step[k]).max(0.0);
                if p.free {
                    q.node = (p.node + alpha * step[fc]).clamp(a + eps, b - eps);
                    fc += 1;
                }
                q
            })
            .collect()
    }

    fn record(&mut self, norm: f64, pts: &[Point]) {
        if self.best.as_ref().is_none_or(|(b, _)| norm < *b) {
            self.best = Some((norm, pts.to_vec()));
        }
    }

    fn iterate(&mut self, pts: &mut Vec<Point>) -> Result<Stop, NewtonError> {
        loop {
            let r = self.residual(pts)?;
            let worst = max_abs(&r);
            self.record(worst, pts);
            if worst <= self.opts.tol {
                return Ok(Stop::Converged);
            }
            if self.iterations >= self.opts.max_iter {
                return Ok(Stop::Budget);
            }
            if pts.is_empty() {
                return Ok(Stop::Stalled { rank_deficient: true });
            }
            let j = self.jacobian(pts)?;
            let ncols = j.ncols();
            let svd = j.svd(true, true);
            let smax = svd.singular_values.max();
            let cut = 1e-13 * smax.max(f64::MIN_POSITIVE);
            let rank = svd.rank(cut);
            let rhs = DVector::from_iterator(r.len(), r.iter().map(|v| -v));
            let Ok(step) = svd.solve(&rhs, cut) else {
                return Ok(Stop::Stalled { rank_deficient: true });
            };
            let norm0 = l2(&r);
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let trial = self.apply_step(pts, &step, alpha);
                let rt = self.residual(&trial)?;
                if l2(&rt) < norm0 {
                    accepted = Some(trial);
                    break;
                }
                alpha *= 0.5;
            }
            self.iterations += 1;
            match accepted {
                Some(next) => *pts = next,
                None => {
                    return Ok(Stop::Stalled { rank_deficient: rank < r.len().min(ncols) });
                }
            }
        }
    }

    /// Snaps free nodes that reached the clamp onto the endpoint and merges
    /// coalesced nodes. Returns whether anything changed.
    fn restructure(&self, pts: &mut Vec<Point>) -> bool {
        let (a, b) = (self.sys.a(), self.sys.b());
        let snap = 2.0 * self.eps();
        let mut changed = false;
        for p in pts.iter_mut().filter(|p| p.free) {
            if p.node - a <= snap {
                *p = Point { node: a, free: false, ..*p };
                changed = true;
            } else if b - p.node <= snap {
                *p = Point { node: b, free: false, ..*p };
                changed = true;
            }
        }
        pts.sort_by(|p, q| p.node.total_cmp(&q.node));
        let gap = self.opts.merge_rel * (b - a);
        let mut merged: Vec<Point> = Vec::with_capacity(pts.len());
        for p in pts.drain(..) {
            match merged.last_mut() {
                Some(q) if p.node - q.node <= gap => {
                    let w = q.weight + p.weight;
                    if !q.free {
                        // fixed node wins
                    } else if !p.free {
                        q.node = p.node;
                        q.free = false;
                    } else if w > 0.0 {
                        q.node = (q.node * q.weight + p.node * p.weight) / w;
                    }
                    q.weight = w;
                    changed = true;
                }
                _ => merged.push(p),
            }
        }
        *pts = merged;
        changed
    }

    fn prune_threshold(&self, pts: &[Point]) -> f64 {
        self.opts.prune_rel * pts.iter().map(|p| p.weight).sum::<f64>()
    }

    fn run(mut self, mut pts: Vec<Point>) -> Result<NewtonOutcome, NewtonError> {
        for _round in 0..16 {
            match self.iterate(&mut pts)? {
                Stop::Converged => {
                    if self.restructure(&mut pts) {
                        continue;
                    }
                    return self.finish(pts);
                }
                Stop::Budget => break,
                Stop::Stalled { rank_deficient } => {
                    let thr = self.prune_threshold(&pts);
                    let before = pts.len();
                    pts.retain(|p| p.weight > thr);
                    let changed = self.restructure(&mut pts) || pts.len() != before;
                    if !changed {
                        if rank_deficient {
                            let residual = self.best.as_ref().map_or(f64::INFINITY, |b| b.0);
                            return Err(NewtonError::SingularJacobian { residual, iterations: self.iterations });
                        }
                        break;
                    }
                }
            }
        }
        let (residual, best) = self.best.take().unwrap_or((f64::INFINITY, Vec::new()));
        Err(NewtonError::NoConvergence { best: to_measure(&best), residual, iterations: self.iterations })
    }

    /// Drops zero-weight atoms if the reduced system still converges.
    fn finish(mut self, pts: Vec<Point>) -> Result<NewtonOutcome, NewtonError> {
        let thr = self.prune_threshold(&pts);
        let (kept, dropped): (Vec<Point>, Vec<Point>) = pts.iter().partition(|p| p.weight > thr);
        let mut result = pts;
        let mut pruned = Vec::new();
        if !dropped.is_empty() {
            let mut reduced = kept;
            if matches!(self.iterate(&mut reduced)?, Stop::Converged) {
                pruned = dropped.iter().map(|p| p.node).collect();
                result = reduced;
            }
        }
        let residual = max_abs(&self.residual(&result)?);
        Ok(NewtonOutcome { measure: to_measure(&result), iterations: self.iterations, residual, pruned })
    }
}

fn to_measure(pts: &[Point]) -> AtomicMeasure {
    AtomicMeasure::from_pairs(pts.iter().map(|p| (p.node, p.weight)).collect())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
