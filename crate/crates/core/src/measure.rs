use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub node: f64,
    pub weight: f64,
}

/// A finitely supported nonnegative measure. Atoms are sorted by node, nodes
/// are distinct and every weight is strictly positive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn zero() -> Self {
        AtomicMeasure::default()
    }

    pub fn dirac(node: f64, weight: f64) -> Self {
        Self::from_pairs(vec![(node, weight)])
    }

    /// Sorts by node, sums weights at coinciding nodes and drops atoms whose
    /// weight is not strictly positive.
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut atoms: Vec<Atom> = Vec::with_capacity(pairs.len());
        for (node, weight) in pairs {
            match atoms.last_mut() {
                Some(last) if last.node == node => last.weight += weight,
                _ => atoms.push(Atom { node, weight }),
            }
        }
        atoms.retain(|a| a.weight > 0.0);
        AtomicMeasure { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.node).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    /// Drops atoms with weight at or below `threshold`.
    pub fn pruned(&self, threshold: f64) -> Self {
        AtomicMeasure { atoms: self.atoms.iter().copied().filter(|a| a.weight > threshold).collect() }
    }

    /// Integral of `f` against the measure.
    pub fn integrate<E>(&self, mut f: impl FnMut(f64) -> Result<f64, E>) -> Result<f64, E> {
        let mut s = 0.0;
        for a in &self.atoms {
            s += a.weight * f(a.node)?;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_atoms() {
        let m = AtomicMeasure::from_pairs(vec![(0.5, 1.0), (0.1, 0.0), (0.2, 2.0), (0.5, 0.5)]);
        assert_eq!(m.nodes(), vec![0.2, 0.5]);
        assert_eq!(m.weights(), vec![2.0, 1.5]);
        assert_eq!(m.total_mass(), 3.5);
        assert_eq!(m.pruned(1.6).nodes(), vec![0.2]);
    }
}
