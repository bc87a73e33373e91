//! Piecewise-linear finite elements on weighted intervals.

use std::sync::OnceLock;

use crate::quad::FixedRule;

/// Weight of the quadratic form on one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Weight {
    /// `(1+x)^{d-1}`.
    Power(f64),
    Constant(f64),
}

impl Weight {
    pub(crate) fn at(self, x: f64) -> f64 {
        match self {
            Weight::Power(d) => (1.0 + x).powf(d - 1.0),
            Weight::Constant(c) => c,
        }
    }

    /// Exact `int_a^b w`.
    pub(crate) fn integral(self, a: f64, b: f64) -> f64 {
        match self {
            Weight::Power(d) => (1.0 + a).powf(d) * (d * ((b - a) / (1.0 + a)).ln_1p()).exp_m1() / d,
            Weight::Constant(c) => c * (b - a),
        }
    }
}

fn rule() -> &'static FixedRule {
    static RULE: OnceLock<FixedRule> = OnceLock::new();
    RULE.get_or_init(|| FixedRule::gauss_legendre(6))
}

pub(crate) type Block = [[f64; 2]; 2];

/// Stiffness and mass blocks of one cell for the form
/// `int (|u'|^2 + density |u|^2) w` against `int |u|^2 w`.
pub(crate) fn cell_blocks(a: f64, b: f64, weight: Weight, density: &dyn Fn(f64) -> f64) -> (Block, Block) {
    let h = b - a;
    let s = weight.integral(a, b) / (h * h);
    let mut k = [[s, -s], [-s, s]];
    let mut m = [[0.0; 2]; 2];
    for (x, wq) in rule().mapped(a, b) {
        let l = (b - x) / h;
        let r = (x - a) / h;
        let w = wq * weight.at(x);
        let v = w * density(x);
        let phi = [l, r];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += w * phi[i] * phi[j];
                k[i][j] += v * phi[i] * phi[j];
            }
        }
    }
    (k, m)
}

/// Trapezoidal `int u^2 w` per cell, used for tail-mass diagnostics.
pub(crate) fn tail_fraction(nodes: &[f64], values: &[f64], weight: &dyn Fn(f64) -> f64, from: f64) -> f64 {
    let mut total = 0.0;
    let mut tail = 0.0;
    for i in 0..nodes.len() - 1 {
        let (a, b) = (nodes[i], nodes[i + 1]);
        let c = 0.5 * (b - a) * (values[i].powi(2) * weight(a) + values[i + 1].powi(2) * weight(b));
        total += c;
        if a >= from {
            tail += c;
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_integral_exact() {
        let w = Weight::Power(1.6);
        let exact = (3f64.powf(1.6) - 1.5f64.powf(1.6)) / 1.6;
        assert!((w.integral(0.5, 2.0) / exact - 1.0).abs() < 1e-14);
        // tiny cells keep relative accuracy
        let a = 1e6;
        let h = 2f64.powi(-13);
        let approx = h * (1.0f64 + a + 0.5 * h).powf(0.6);
        assert!((w.integral(a, a + h) / approx - 1.0).abs() < 1e-9, "{}", w.integral(a, a + h) / approx - 1.0);
    }

    #[test]
    fn blocks_reproduce_constants() {
        let (k, m) = cell_blocks(0.0, 2.0, Weight::Constant(1.0), &|_| 0.0);
        assert!((k[0][0] - 0.5).abs() < 1e-15 && (k[0][1] + 0.5).abs() < 1e-15);
        assert!((m[0][0] - 2.0 / 3.0).abs() < 1e-15 && (m[0][1] - 1.0 / 3.0).abs() < 1e-15);
    }
}
