//! The Birman–Schwinger operator `Q_E = (H_0+E)^{-1/2} V (H_0+E)^{-1/2}` in
//! its factorized form `L_E L_E^*`, where `L_E` has the kernel
//!
//! `l_E(p, x) = f_d(p, x) [p(1+x) V(x) / (p^2+E)]^{1/2}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::potential::PotentialSpec;
use crate::quad::{integrate_panels, FixedRule, Tolerance};
use crate::special::{check_dimension, jy, FdRow};

/// Argument `p(1+x)` beyond which the inner integral switches to the
/// large-argument representation.
const TAIL_ARGUMENT: f64 = 50.0;
/// Shifts below this trigger a slow-convergence warning.
const SLOW_SHIFT: f64 = 1e-10;
pub const MIN_RANK: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePolicy {
    pub rel_tol: f64,
    /// Lower spectral cutoff as a multiple of `sqrt(E)`.
    pub p_lo_factor: f64,
    /// Upper spectral cutoff as a multiple of `max(1, sqrt(E))`.
    pub p_hi_factor: f64,
}

impl Default for QuadraturePolicy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-4,
            p_lo_factor: 1e-4,
            p_hi_factor: 200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BSKernelSpec {
    pub e_shift: f64,
    pub d: f64,
    pub potential: PotentialSpec,
    pub quadrature: QuadraturePolicy,
}

impl BSKernelSpec {
    pub fn new(e_shift: f64, d: f64, potential: PotentialSpec) -> Result<Self> {
        check_dimension(d)?;
        potential.validate()?;
        if !(e_shift > 0.0) || !e_shift.is_finite() {
            return Err(invalid(format!("spectral shift E must be positive, got {e_shift}")));
        }
        if potential.gamma > d {
            return Err(invalid(format!("need gamma <= d, got gamma = {} and d = {d}", potential.gamma)));
        }
        if potential.gamma == 2.0 {
            return Err(invalid("gamma = 2 is excluded (γ ≠ 2)"));
        }
        Ok(Self {
            e_shift,
            d,
            potential,
            quadrature: QuadraturePolicy::default(),
        })
    }

    pub fn with_shift(&self, e_shift: f64) -> Result<Self> {
        let mut s = Self::new(e_shift, self.d, self.potential.clone())?;
        s.quadrature = self.quadrature;
        Ok(s)
    }
}

/// `l_E(p, x)`, built on the same kernel row as the Fourier–Bessel transform.
pub fn kernel_l(spec: &BSKernelSpec, p: f64, x: f64) -> Result<f64> {
    if !(p > 0.0) || !(x >= 0.0) {
        return Err(invalid(format!("kernel needs p > 0 and x >= 0, got ({p}, {x})")));
    }
    Ok(kernel_row(&FdRow::new(p, spec.d), spec, x))
}

fn kernel_row(row: &FdRow, spec: &BSKernelSpec, x: f64) -> f64 {
    let v = spec.potential.eval(x);
    if v == 0.0 {
        return 0.0;
    }
    row.eval_weighted(x) * (v / (row.p * row.p + spec.e_shift)).sqrt()
}

/// `G(p) = int_0^{x_max} p(1+x) f_d(p, x)^2 V(x) dx`, independent of `E`.
/// With `x_max = inf` the exact-power tail past `p(1+x) = 50` uses the
/// modulus–phase form of the Bessel pair (see module docs).
pub fn spectral_weight(d: f64, potential: &PotentialSpec, p: f64, x_max: f64, rel_tol: f64) -> Result<f64> {
    let row = FdRow::new(p, d);
    let tol = Tolerance::new(0.0, rel_tol);
    let integrand = |x: f64| {
        let f = row.eval(x);
        p * (1.0 + x) * f * f * potential.eval(x)
    };
    let limit = match potential.support_end() {
        Some(end) => end.min(x_max),
        None => x_max,
    };
    let analytic_tail = limit.is_infinite() && potential.is_exact_power();
    let x_c = if analytic_tail {
        (TAIL_ARGUMENT / p - 1.0).max(0.0)
    } else if limit.is_finite() {
        limit
    } else {
        return Err(invalid("unbounded integral needs an exact-power potential"));
    };
    // z < 1: log variable t = ln(1+x)
    let x1 = (1.0 / p - 1.0).clamp(0.0, x_c);
    let mut total = 0.0;
    if x1 > 0.0 {
        let t1 = x1.ln_1p();
        let n = t1.ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=n).map(|i| t1 * i as f64 / n as f64).collect();
        let mut g = |t: f64| {
            let x = t.exp_m1();
            integrand(x) * (1.0 + x)
        };
        total += integrate_panels(&mut g, &breaks, tol)?.value;
    }
    if x_c > x1 {
        // panels of at most half an oscillation of f^2, i.e. pi/p
        let n = ((x_c - x1) * p / PI).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=n).map(|i| x1 + (x_c - x1) * i as f64 / n as f64).collect();
        let mut g = |x: f64| integrand(x);
        total += integrate_panels(&mut g, &breaks, tol)?.value;
    }
    if analytic_tail {
        total += modulus_tail(&row, potential, x_c, rel_tol)?;
    }
    Ok(total)
}

/// `int_{x_c}^inf z f^2 V dx` for `V = c/(1+x)^gamma` and `z = p(1+x) >= 50`.
/// Writing `J = M cos(theta)`, `Y = M sin(theta)` and `f = M sin(theta - phi)`,
/// the integrand is `(z M^2/2) V (1 - cos 2(theta - phi))`; the smooth part is
/// integrated with its `1/pi` limit split off analytically, the oscillatory
/// part by one integration by parts (`theta' = 2p/(pi z M^2)`).
fn modulus_tail(row: &FdRow, potential: &PotentialSpec, x_c: f64, rel_tol: f64) -> Result<f64> {
    let p = row.p;
    let nu = row.order();
    let gamma = potential.gamma;
    let c = potential.c_upper;
    let zm2 = |x: f64| {
        let z = p * (1.0 + x);
        let (j, y) = jy(nu, z);
        z * (j * j + y * y)
    };
    let t0 = x_c.ln_1p();
    let mut smooth = |t: f64| {
        let x = t.exp_m1();
        (0.5 * zm2(x) - 1.0 / PI) * potential.eval(x) * (1.0 + x)
    };
    let breaks: Vec<f64> = (0..=8).map(|i| t0 + 5.0 * i as f64).collect();
    let corr = integrate_panels(&mut smooth, &breaks, Tolerance::new(1e-15, rel_tol))?.value;
    let power = c * (1.0 + x_c).powf(1.0 - gamma) / ((gamma - 1.0) * PI);
    let z = p * (1.0 + x_c);
    let (j, y) = jy(nu, z);
    let m2 = j * j + y * y;
    let (a, b) = row.coefficients();
    let sin_psi = (a * y - b * j) / m2.sqrt();
    let cos_psi = (a * j + b * y) / m2.sqrt();
    let osc = PI * (z * m2).powi(2) * potential.eval(x_c) * (2.0 * sin_psi * cos_psi) / (8.0 * p);
    Ok(corr + power + osc)
}

/// Trace estimate with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEstimate {
    pub value: f64,
    /// Contribution of the analytic tails below `p_lo` and above `p_hi`.
    pub tail: f64,
    pub slow_convergence_warning: bool,
}

/// `tr Q_E = int int l_E(p, x)^2 dx dp = int G(p)/(p^2+E) dp`.
pub fn trace_qe(spec: &BSKernelSpec) -> Result<TraceEstimate> {
    let q = spec.quadrature;
    let s = spec.e_shift.sqrt();
    let p_lo = q.p_lo_factor * s;
    let p_hi = q.p_hi_factor * s.max(1.0);
    let inner_tol = 0.01 * q.rel_tol;
    let g = |p: f64| spectral_weight(spec.d, &spec.potential, p, f64::INFINITY, inner_tol);
    let body = outer_integral(spec, &g, p_lo, p_hi)?;

    // G(p) ~ p^s near 0: local exponent from two points at the cutoff
    let (g0, g1) = (g(p_lo)?, g(2.0 * p_lo)?);
    let slope = (g1 / g0).ln() / 2f64.ln();
    let e = spec.e_shift;
    let low = g0 * p_lo / ((slope + 1.0) * e);
    // G tends to a constant for large p
    let high = g(p_hi)? * (0.5 * PI - (p_hi / s).atan()) / s;
    Ok(TraceEstimate {
        value: body + low + high,
        tail: low + high,
        slow_convergence_warning: e < SLOW_SHIFT,
    })
}

/// `int_{p_lo}^{p_hi} dp int_0^{x_max} l_E(p, x)^2 dx`, the trace of the
/// operator restricted to a bounded window.
pub fn trace_on_window(spec: &BSKernelSpec, p_lo: f64, p_hi: f64, x_max: f64) -> Result<f64> {
    if !(p_lo > 0.0 && p_hi > p_lo && x_max > 0.0) {
        return Err(invalid("trace window needs 0 < p_lo < p_hi and x_max > 0"));
    }
    let inner_tol = 0.01 * spec.quadrature.rel_tol;
    let g = |p: f64| spectral_weight(spec.d, &spec.potential, p, x_max, inner_tol);
    outer_integral(spec, &g, p_lo, p_hi)
}

fn outer_integral(spec: &BSKernelSpec, g: &dyn Fn(f64) -> Result<f64>, p_lo: f64, p_hi: f64) -> Result<f64> {
    let e = spec.e_shift;
    let (t_lo, t_hi) = (p_lo.ln(), p_hi.ln());
    let n = ((t_hi - t_lo) / 2f64.ln()).ceil().max(1.0) as usize;
    let breaks: Vec<f64> = (0..=n).map(|i| t_lo + (t_hi - t_lo) * i as f64 / n as f64).collect();
    let mut failure = None;
    let mut integrand = |t: f64| {
        let p = t.exp();
        match g(p) {
            Ok(v) => v * p / (p * p + e),
            Err(err) => {
                failure.get_or_insert(err);
                0.0
            }
        }
    };
    let est = integrate_panels(&mut integrand, &breaks, Tolerance::new(0.0, 0.01 * spec.quadrature.rel_tol))?;
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(est.value)
}

/// Product grid for the Nyström discretization of `L_E L_E^*`.
#[derive(Debug, Clone)]
pub struct NystromGrid {
    pub p: Vec<f64>,
    pub p_weights: Vec<f64>,
    pub x: Vec<f64>,
    pub x_weights: Vec<f64>,
}

impl NystromGrid {
    /// `rank` Gauss–Legendre nodes in `log p` over
    /// `[1e-3 sqrt(E), 40 max(1, sqrt(E))]`, and panels of width about
    /// `pi/p_hi` in `x` over `[0, 15/sqrt(E)]` (or the potential's support).
    pub fn new(spec: &BSKernelSpec, rank: usize) -> Result<Self> {
        if rank < MIN_RANK {
            return Err(invalid(format!("Nyström rank must be at least {MIN_RANK}, got {rank}")));
        }
        let s = spec.e_shift.sqrt();
        let p_lo = 1e-3 * s;
        let p_hi = 40.0 * s.max(1.0);
        let mut x_max = 15.0 / s;
        if let Some(end) = spec.potential.support_end() {
            x_max = x_max.min(end);
        }
        Ok(Self::with_window(rank, p_lo, p_hi, x_max))
    }

    pub fn with_window(rank: usize, p_lo: f64, p_hi: f64, x_max: f64) -> Self {
        let order = 10;
        let panels = rank.div_ceil(order);
        let rule = FixedRule::gauss_legendre(order);
        let (t_lo, t_hi) = (p_lo.ln(), p_hi.ln());
        let mut p = Vec::with_capacity(panels * order);
        let mut p_weights = Vec::with_capacity(panels * order);
        for k in 0..panels {
            let a = t_lo + (t_hi - t_lo) * k as f64 / panels as f64;
            let b = t_lo + (t_hi - t_lo) * (k + 1) as f64 / panels as f64;
            for (t, w) in rule.mapped(a, b) {
                p.push(t.exp());
                p_weights.push(w * t.exp());
            }
        }
        let x_rule = FixedRule::gauss_legendre(8);
        let x_panels = (x_max * p_hi / PI).ceil().max(1.0) as usize;
        let mut x = Vec::with_capacity(x_panels * 8);
        let mut x_weights = Vec::with_capacity(x_panels * 8);
        for k in 0..x_panels {
            let a = x_max * k as f64 / x_panels as f64;
            let b = x_max * (k + 1) as f64 / x_panels as f64;
            for (xi, w) in x_rule.mapped(a, b) {
                x.push(xi);
                x_weights.push(w);
            }
        }
        Self {
            p,
            p_weights,
            x,
            x_weights,
        }
    }

    pub fn rank(&self) -> usize {
        self.p.len()
    }

    pub fn p_window(&self) -> (f64, f64, f64) {
        let n = self.p.len();
        // recover the window ends from the first and last panels
        (self.p[0], self.p[n - 1], *self.x.last().unwrap())
    }
}

/// Nyström discretization `B_ij = sqrt(w_i) l(p_i, x_j) sqrt(v_j)`, stored
/// through the Gram matrix `B B^T`.
#[derive(Debug, Clone)]
pub struct Nystrom {
    pub grid: NystromGrid,
    pub gram: DMatrix<f64>,
}

impl Nystrom {
    pub fn assemble(spec: &BSKernelSpec, grid: NystromGrid) -> Self {
        let n = grid.rank();
        let rows: Vec<FdRow> = grid.p.iter().map(|&p| FdRow::new(p, spec.d)).collect();
        let mut gram = DMatrix::zeros(n, n);
        let chunk = 512;
        let mut block = DMatrix::zeros(n, chunk);
        for start in (0..grid.x.len()).step_by(chunk) {
            let end = (start + chunk).min(grid.x.len());
            let width = end - start;
            if width < chunk {
                block = DMatrix::zeros(n, width);
            }
            for (c, j) in (start..end).enumerate() {
                let x = grid.x[j];
                let sv = grid.x_weights[j].sqrt();
                for (i, row) in rows.iter().enumerate() {
                    block[(i, c)] = grid.p_weights[i].sqrt() * kernel_row(row, spec, x) * sv;
                }
            }
            gram.gemm(1.0, &block, &block.transpose(), 1.0);
        }
        Self { grid, gram }
    }

    pub fn top_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.gram.clone()).eigenvalues.max()
    }

    /// `sum_ij B_ij^2`, the trace on the grid window.
    pub fn trace(&self) -> f64 {
        self.gram.trace()
    }

    /// `|L psi|^2` for `psi` sampled on the `x` nodes.
    pub fn form(&self, spec: &BSKernelSpec, psi: &dyn Fn(f64) -> f64) -> f64 {
        let g = &self.grid;
        g.p.iter()
            .zip(&g.p_weights)
            .map(|(&p, &w)| {
                let row = FdRow::new(p, spec.d);
                let lpsi: f64 = g.x.iter().zip(&g.x_weights).map(|(&x, &v)| kernel_row(&row, spec, x) * v * psi(x)).sum();
                w * lpsi * lpsi
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopEigenvalue {
    pub mu: f64,
    pub rank: usize,
    /// Relative change against the half-rank solve.
    pub change: f64,
    pub converged: bool,
}

/// Largest eigenvalue of `L_E L_E^*` by Nyström at `rank` and `2 rank`
/// nodes in `p`; converged when the two agree to `1e-4` relative.
pub fn top_eigenvalue_qe(spec: &BSKernelSpec, rank: usize) -> Result<TopEigenvalue> {
    let coarse = Nystrom::assemble(spec, NystromGrid::new(spec, rank)?).top_eigenvalue();
    let fine = Nystrom::assemble(spec, NystromGrid::new(spec, 2 * rank)?).top_eigenvalue();
    if !(fine > 0.0) || !fine.is_finite() {
        return Err(Error::NotConverged(format!("Nyström eigenvalue {fine}")));
    }
    let change = ((fine - coarse) / fine).abs();
    Ok(TopEigenvalue {
        mu: fine,
        rank: 2 * rank,
        change,
        converged: change < 1e-4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(e: f64) -> BSKernelSpec {
        BSKernelSpec::new(e, 1.5, PotentialSpec::power(1.2, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn kernel_uses_transform_row() {
        let s = spec(1.0);
        let row = FdRow::new(1.0, 1.5);
        let expected = row.eval(1.0) * (2.0 * 2f64.powf(-1.2) / 2.0).sqrt();
        assert!((kernel_l(&s, 1.0, 1.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn kernel_vanishes_outside_table_support() {
        let v = PotentialSpec::table(1.2, 0.1, 1.0, vec![1.0, 2.0], vec![0.5, 0.4]).unwrap();
        let s = BSKernelSpec::new(1.0, 1.5, v).unwrap();
        assert_eq!(kernel_l(&s, 1.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn tail_matches_direct_integration() {
        let v = PotentialSpec::power(1.2, 1.0).unwrap();
        for &p in &[0.05, 0.7, 3.0] {
            let full = spectral_weight(1.5, &v, p, f64::INFINITY, 1e-10).unwrap();
            // direct integration to z = 1e4; the oscillating remainder is below 1e-5
            let x_far = 1e4 / p - 1.0;
            let direct = spectral_weight(1.5, &v, p, x_far, 1e-9).unwrap();
            let rest = (1.0 + x_far).powf(-0.2) / (0.2 * PI);
            assert!(((direct + rest) / full - 1.0).abs() < 1e-4, "p={p}: {} {}", direct + rest, full);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let v = PotentialSpec::power(1.2, 1.0).unwrap();
        assert!(BSKernelSpec::new(0.0, 1.5, v.clone()).is_err());
        assert!(BSKernelSpec::new(1.0, 1.1, v.clone()).is_err());
        assert!(top_eigenvalue_qe(&spec(0.1), 50).is_err());
    }
}
