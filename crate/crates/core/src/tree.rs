//! Regular metric trees of prescribed dimension.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};

/// Deepest generation a geometric tree may carry.
pub const MAX_GENERATIONS: usize = 14;

/// A regular tree: one edge leaves the root, every vertex at distance `t_k`
/// from the root splits into `b` edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub d: f64,
    pub b: u32,
    pub generation_radii: Vec<f64>,
    pub truncation_height: f64,
}

/// Constants with `c1 (1+t)^{d-1} <= g(t) <= c2 (1+t)^{d-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionConstants {
    pub c1: f64,
    pub c2: f64,
    pub e_plus: f64,
    pub e_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedHeight {
    /// `int_0^H dt / g(t)` for the truncated tree.
    pub truncated: f64,
    /// Whether the untruncated tree has infinite reduced height.
    pub infinite: bool,
}

/// Geometric tree with `t_k = b^{k/(d-1)} - 1`, so `g(t) = b^k` tracks `(1+t)^{d-1}`.
pub fn build_geometric_tree(d: f64, b: u32, truncation_height: f64) -> Result<TreeSpec> {
    if !(d > 1.0 && d <= 2.0) {
        return Err(invalid(format!("tree dimension must lie in (1, 2], got {d}")));
    }
    if b < 2 {
        return Err(invalid(format!("branching number must be at least 2, got {b}")));
    }
    if !(truncation_height > 0.0) || !truncation_height.is_finite() {
        return Err(invalid(format!("truncation height must be positive, got {truncation_height}")));
    }
    let mut radii = Vec::new();
    for k in 1..=MAX_GENERATIONS {
        let t = (b as f64).powf(k as f64 / (d - 1.0)) - 1.0;
        if t >= truncation_height {
            break;
        }
        radii.push(t);
    }
    Ok(TreeSpec {
        d,
        b,
        generation_radii: radii,
        truncation_height,
    })
}

impl TreeSpec {
    pub fn generations(&self) -> usize {
        self.generation_radii.len()
    }

    /// Generation index `k = #{t_j <= t}` (right-continuous).
    pub fn generation_at(&self, t: f64) -> usize {
        self.generation_radii.partition_point(|&r| r <= t)
    }

    /// `g(t) = b^k` with `k` the number of generation radii `<= t`.
    pub fn branching_function(&self, t: f64) -> Result<u64> {
        if !(t >= 0.0) {
            return Err(domain(format!("branching function needs t >= 0, got {t}")));
        }
        Ok((self.b as u64).pow(self.generation_at(t) as u32))
    }

    /// Sandwich constants of the idealized infinite tree. On `[t_k, t_{k+1})`
    /// the ratio `g/(1+t)^{d-1}` equals `b^{k-s}` with
    /// `s = (d-1) log_b(1+t)` sweeping `[k, k+1)`, so it lies in `(1/b, 1]`.
    pub fn dimension_constants(&self) -> DimensionConstants {
        let c1 = 1.0 / self.b as f64;
        let c2 = 1.0;
        DimensionConstants {
            c1,
            c2,
            e_plus: c1 / c2,
            e_minus: c2 / c1,
        }
    }

    pub fn reduced_height(&self) -> ReducedHeight {
        let mut total = 0.0;
        let mut start = 0.0;
        let mut g = 1.0;
        for &t in &self.generation_radii {
            total += (t - start) / g;
            start = t;
            g *= self.b as f64;
        }
        total += (self.truncation_height - start) / g;
        ReducedHeight {
            truncated: total,
            // generation lengths grow like b^{k/(d-1)} >= b^k, so the series diverges
            infinite: true,
        }
    }
}
