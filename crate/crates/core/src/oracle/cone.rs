use serde::Serialize;

use super::{default_feas_tol, Grid, MomentLp, OracleError};
use crate::funcsys::{FunctionSystem, MomentVector};
use crate::measure::AtomicMeasure;
use crate::Sense;

/// Atom counts at `a`, inside `(a, b)`, and at `b`. Interior atoms count
/// twice in the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SupportIndex {
    pub ell_minus: usize,
    pub ell: usize,
    pub ell_plus: usize,
}

impl SupportIndex {
    pub fn index(&self) -> usize {
        self.ell_minus + 2 * self.ell + self.ell_plus
    }
}

pub fn support_index(m: &AtomicMeasure, a: f64, b: f64) -> SupportIndex {
    let mut idx = SupportIndex { ell_minus: 0, ell: 0, ell_plus: 0 };
    for at in m.atoms() {
        if at.node == a {
            idx.ell_minus += 1;
        } else if at.node == b {
            idx.ell_plus += 1;
        } else {
            idx.ell += 1;
        }
    }
    idx
}

/// Where `c` sits relative to the grid moment cone.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "classification", rename_all = "kebab-case")]
pub enum ConePosition {
    /// Every coordinate perturbation `c +- t e_i` with `t <= margin` stays
    /// representable.
    StrictlyPositive { margin: f64 },
    /// Representable (up to tolerance) but on the boundary. The evidence
    /// measure is the grid solution with adjacent atoms merged.
    SingularlyPositive { measure: AtomicMeasure, index: SupportIndex },
    /// Distance to the cone (summed residual) exceeds the tolerance.
    Infeasible { residual: f64 },
}

impl ConePosition {
    pub fn name(&self) -> &'static str {
        match self {
            ConePosition::StrictlyPositive { .. } => "strictly-positive",
            ConePosition::SingularlyPositive { .. } => "singularly-positive",
            ConePosition::Infeasible { .. } => "infeasible",
        }
    }
}

/// Classification tolerance `1e-7 * (1 + |c|)`.
pub fn cone_tolerance(c: &MomentVector) -> f64 {
    1e-7 * (1.0 + c.norm())
}

/// Merges runs of atoms whose consecutive gaps are at most `max_gap` into a
/// single atom carrying the run's total weight. The merged node is the
/// weighted mean, or the endpoint if the run touches `a` or `b`.
pub fn merge_clusters(m: &AtomicMeasure, max_gap: f64, a: f64, b: f64) -> AtomicMeasure {
    let mut out = Vec::new();
    let mut run: Vec<(f64, f64)> = Vec::new();
    let flush = |run: &mut Vec<(f64, f64)>, out: &mut Vec<(f64, f64)>| {
        if run.is_empty() {
            return;
        }
        let w: f64 = run.iter().map(|p| p.1).sum();
        let node = if run.iter().any(|p| p.0 == a) {
            a
        } else if run.iter().any(|p| p.0 == b) {
            b
        } else {
            run.iter().map(|p| p.0 * p.1).sum::<f64>() / w
        };
        out.push((node, w));
        run.clear();
    };
    for at in m.atoms() {
        if let Some(&(last, _)) = run.last() {
            if at.node - last > max_gap {
                flush(&mut run, &mut out);
            }
        }
        run.push((at.node, at.weight));
    }
    flush(&mut run, &mut out);
    AtomicMeasure::from_pairs(out)
}

pub(crate) fn cluster_gap(grid: &Grid) -> f64 {
    2.5 * grid.spacing()
}

/// Classifies `c` as interior (strict), boundary (singular), or outside the
/// moment cone of the grid. Interiority is measured by the coordinate
/// cross-polytope: for each of the `2(n+1)` directions `+-e_i` one ray LP
/// gives the largest feasible step, and the margin is their minimum.
pub fn classify_cone_position(
    sys: &FunctionSystem,
    c: &MomentVector,
    grid: &Grid,
) -> Result<ConePosition, OracleError> {
    let lp = MomentLp::new(sys, grid)?;
    classify_with(&lp, c)
}

pub(crate) fn classify_with(lp: &MomentLp, c: &MomentVector) -> Result<ConePosition, OracleError> {
    let tol = cone_tolerance(c);
    let (residual, _) = lp.distance_to_cone(c)?;
    if residual > tol {
        return Ok(ConePosition::Infeasible { residual });
    }
    let strict_tol = default_feas_tol(c);
    let rows = lp.rows();
    let mut margin = f64::INFINITY;
    'dirs: for i in 0..rows {
        for sign in [1.0, -1.0] {
            let mut dir = vec![0.0; rows];
            dir[i] = sign;
            if let Some(t) = lp.ray_length(c, &dir, strict_tol)? {
                margin = margin.min(t);
            }
            if margin <= tol {
                break 'dirs;
            }
        }
    }
    if margin > tol {
        return Ok(ConePosition::StrictlyPositive { margin });
    }
    let sol = lp.solve(c, Sense::Max, tol)?;
    let g = lp.grid();
    let measure = merge_clusters(&sol.measure.pruned(tol), cluster_gap(g), g.a(), g.b());
    let index = support_index(&measure, g.a(), g.b());
    Ok(ConePosition::SingularlyPositive { measure, index })
}
