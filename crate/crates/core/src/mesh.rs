//! Graded one-dimensional meshes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Grading policy: cells start at `first_cell` near the origin and grow by
/// `ratio` until they reach `max_cell`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshPolicy {
    pub ratio: f64,
    pub first_cell: f64,
    pub max_cell: f64,
}

impl MeshPolicy {
    /// Default grading for a domain `[0, truncation]` whose solutions vary on
    /// the length scale `decay_length`.
    pub fn for_domain(truncation: f64, decay_length: f64) -> Self {
        Self {
            ratio: 1.05,
            first_cell: (truncation * 1e-5).min(0.01),
            max_cell: (decay_length / 40.0).max(1e-3),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.ratio >= 1.0 && self.ratio < 2.0) {
            return Err(invalid(format!("mesh ratio must lie in [1, 2), got {}", self.ratio)));
        }
        if !(self.first_cell > 0.0) || !(self.max_cell >= self.first_cell) {
            return Err(invalid("mesh needs 0 < first_cell <= max_cell"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
}

impl Mesh {
    pub const MIN_CELLS: usize = 100;

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("mesh nodes must be strictly increasing"));
        }
        Ok(Self { nodes })
    }

    /// Graded mesh on `[0, end]` with nodes forced at each point of `forced`
    /// inside the interval. Cells are split further to reach at least
    /// [`Mesh::MIN_CELLS`].
    pub fn graded(end: f64, policy: MeshPolicy, forced: &[f64]) -> Result<Self> {
        policy.validate()?;
        if !(end > 0.0) || !end.is_finite() {
            return Err(invalid(format!("mesh end must be positive, got {end}")));
        }
        let mut nodes = vec![0.0];
        let mut h = policy.first_cell;
        let mut x = 0.0;
        let mut pending = forced.iter().copied().filter(|&t| t > 0.0 && t < end).peekable();
        while x < end {
            let mut next = x + h;
            if let Some(&t) = pending.peek() {
                if next >= t - 0.25 * h {
                    next = t;
                    pending.next();
                }
            }
            if next >= end - 0.25 * h {
                next = end;
            }
            nodes.push(next);
            x = next;
            h = (h * policy.ratio).min(policy.max_cell);
        }
        let mut mesh = Self { nodes };
        while mesh.cells() < Self::MIN_CELLS {
            mesh = mesh.bisected();
        }
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn end(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Every cell split at its midpoint.
    pub fn bisected(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len());
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.end());
        Self { nodes }
    }
}
