use serde::Serialize;

use super::OracleError;

/// Strictly increasing nodes covering `[a, b]`, both endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    nodes: Vec<f64>,
}

/// Uniform grid of `n` nodes on `[a, b]`. Going from `n` to `2n - 1` nodes
/// halves the spacing and keeps every old node.
pub fn make_grid(a: f64, b: f64, n: usize) -> Result<Grid, OracleError> {
    if n < 2 {
        return Err(OracleError::GridSize(n));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(OracleError::GridInterval { a, b });
    }
    let step = (b - a) / (n - 1) as f64;
    let nodes = (0..n).map(|j| if j + 1 == n { b } else { a + step * j as f64 }).collect();
    Ok(Grid { nodes })
}

impl Grid {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Grid, OracleError> {
        if nodes.len() < 2 {
            return Err(OracleError::GridSize(nodes.len()));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) || nodes.iter().any(|x| !x.is_finite()) {
            return Err(OracleError::GridOrder);
        }
        Ok(Grid { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    pub fn b(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Largest gap between consecutive nodes.
    pub fn spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// The grid with `extra` nodes inserted (those outside `[a, b]` ignored).
    pub fn with_nodes(&self, extra: &[f64]) -> Grid {
        let (a, b) = (self.a(), self.b());
        let mut nodes = self.nodes.clone();
        nodes.extend(extra.iter().copied().filter(|x| *x >= a && *x <= b));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        Grid { nodes }
    }

    pub fn contains_all(&self, other: &Grid) -> bool {
        other.nodes.iter().all(|x| self.nodes.binary_search_by(|y| y.total_cmp(x)).is_ok())
    }
}
