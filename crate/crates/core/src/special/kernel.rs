use super::jy;
use crate::error::{invalid, Result};

/// Argument triple `(p, x, d)` of the Fourier–Bessel kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub p: f64,
    pub x: f64,
    pub d: f64,
}

impl KernelPoint {
    pub fn new(p: f64, x: f64, d: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(invalid(format!("kernel requires p > 0, got {p}")));
        }
        if !(x >= 0.0) || !x.is_finite() {
            return Err(invalid(format!("kernel requires x >= 0, got {x}")));
        }
        check_dimension(d)?;
        Ok(Self { p, x, d })
    }
}

pub(crate) fn check_dimension(d: f64) -> Result<()> {
    if d > 1.0 && d <= 2.0 {
        Ok(())
    } else {
        Err(invalid(format!("dimension must lie in (1, 2], got {d}")))
    }
}

/// The kernel
/// `f_d(p, x) = [J_{-d/2}(p) Y_{(2-d)/2}(p(1+x)) - Y_{-d/2}(p) J_{(2-d)/2}(p(1+x))] / N(p)`
/// with `N(p) = sqrt(J_{-d/2}(p)^2 + Y_{-d/2}(p)^2)`.
pub fn fd_kernel(pt: KernelPoint) -> Result<f64> {
    let pt = KernelPoint::new(pt.p, pt.x, pt.d)?;
    Ok(FdRow::new(pt.p, pt.d).eval(pt.x))
}

/// The kernel at fixed `p`, with the `x`-independent coefficients cached.
#[derive(Debug, Clone, Copy)]
pub struct FdRow {
    pub p: f64,
    pub d: f64,
    nu: f64,
    a: f64,
    b: f64,
    norm: f64,
}

impl FdRow {
    /// Callers guarantee `p > 0` and `d` in `(1, 2]`.
    pub fn new(p: f64, d: f64) -> Self {
        let (j, y) = jy(-0.5 * d, p);
        let norm = j.hypot(y);
        Self {
            p,
            d,
            nu: 1.0 - 0.5 * d,
            a: j / norm,
            b: y / norm,
            norm,
        }
    }

    /// `sqrt(J_{-d/2}(p)^2 + Y_{-d/2}(p)^2)`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Order `(2-d)/2` of the Bessel pair in `x`.
    pub fn order(&self) -> f64 {
        self.nu
    }

    /// Normalized coefficients `(J_{-d/2}(p), Y_{-d/2}(p)) / N(p)`.
    pub fn coefficients(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (j, y) = jy(self.nu, self.p * (1.0 + x));
        self.a * y - self.b * j
    }

    /// `sqrt(p(1+x)) f_d(p, x)`, the transform kernel.
    pub fn eval_weighted(&self, x: f64) -> f64 {
        let z = self.p * (1.0 + x);
        z.sqrt() * self.eval(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn boundary_identity() {
        for &d in &[1.1, 1.3, 1.5, 1.6, 2.0] {
            for i in 0..40 {
                let p = 10f64.powf(-3.0 + 5.0 * i as f64 / 39.0);
                let row = FdRow::new(p, d);
                let lhs = row.eval(0.0) * row.norm();
                let rhs = -2.0 / (PI * p);
                assert!((lhs / rhs - 1.0).abs() < 1e-10, "d={d} p={p} {lhs} {rhs}");
            }
        }
    }

    #[test]
    fn envelope_bounded() {
        for &d in &[1.3, 1.5, 2.0] {
            for i in 0..30 {
                let p = 10f64.powf(-2.0 + 3.0 * i as f64 / 29.0);
                let row = FdRow::new(p, d);
                for k in 0..60 {
                    let x = 10f64.powf(-2.0 + 5.0 * k as f64 / 59.0);
                    if p * (1.0 + x) >= 1.0 {
                        assert!(row.eval_weighted(x).abs() < 1.5, "p={p} x={x}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_points() {
        assert!(KernelPoint::new(0.0, 1.0, 1.5).is_err());
        assert!(KernelPoint::new(1.0, -1.0, 1.5).is_err());
        assert!(KernelPoint::new(1.0, 1.0, 1.0).is_err());
        assert!(KernelPoint::new(1.0, 1.0, 2.5).is_err());
    }
}
