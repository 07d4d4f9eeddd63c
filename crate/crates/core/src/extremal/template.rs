use serde::Serialize;

use crate::Sense;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// `n = 2m`
    Even,
    /// `n = 2m - 1`
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Endpoint {
    A,
    B,
}

/// Shape of the support of an extremal measure for `n + 1` constraints:
/// how many points, and which endpoints must be among them.
///
/// | parity | sense | points  | forced   |
/// |--------|-------|---------|----------|
/// | even   | max   | `m + 1` | `{b}`    |
/// | even   | min   | `m + 1` | `{a}`    |
/// | odd    | max   | `m + 1` | `{a, b}` |
/// | odd    | min   | `m`     | none     |
///
/// with `m = floor((n + 1) / 2)`. In every case the weights plus the free
/// nodes number exactly `n + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportTemplate {
    pub sense: Sense,
    pub parity: Parity,
    pub n: usize,
    pub m: usize,
    pub total_points: usize,
    pub forced_endpoints: Vec<Endpoint>,
    pub free_node_count: usize,
}

pub fn make_template(n: usize, sense: Sense) -> SupportTemplate {
    let m = n.div_ceil(2);
    let parity = if n.is_multiple_of(2) { Parity::Even } else { Parity::Odd };
    let (total_points, forced_endpoints) = match (parity, sense) {
        (Parity::Even, Sense::Max) => (m + 1, vec![Endpoint::B]),
        (Parity::Even, Sense::Min) => (m + 1, vec![Endpoint::A]),
        (Parity::Odd, Sense::Max) => (m + 1, vec![Endpoint::A, Endpoint::B]),
        (Parity::Odd, Sense::Min) => (m, vec![]),
    };
    SupportTemplate {
        sense,
        parity,
        n,
        m,
        total_points,
        free_node_count: total_points - forced_endpoints.len(),
        forced_endpoints,
    }
}

impl SupportTemplate {
    pub fn forces(&self, e: Endpoint) -> bool {
        self.forced_endpoints.contains(&e)
    }

    /// Weights plus free nodes.
    pub fn unknowns(&self) -> usize {
        self.total_points + self.free_node_count
    }
}
