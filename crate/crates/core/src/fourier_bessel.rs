//! The Fourier–Bessel transform diagonalizing
//! `H_0 = -d^2/dx^2 + (d-1)(d-3)/(4(1+x)^2)` with `phi'(0) = ((d-1)/2) phi(0)`:
//!
//! `(U phi)(p) = int phi(x) sqrt(p(1+x)) f_d(p, x) dx`,
//!
//! unitary on `L^2(0, inf)` with Lebesgue measure in both variables, and
//! `U H_0 U^{-1}` is multiplication by `p^2`.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::quad::{integrate_panels, FixedRule, Tolerance};
use crate::special::{check_dimension, jy, FdRow};

/// Absolute tolerance per transformed point.
pub const POINT_TOL: f64 = 1e-9;

/// Quadrature nodes and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Grid {
    /// Composite Gauss–Legendre rule with `order` points per panel on the
    /// given panel breaks.
    pub fn composite(breaks: &[f64], order: usize) -> Result<Self> {
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("grid breaks must be increasing"));
        }
        let rule = FixedRule::gauss_legendre(order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in breaks.windows(2) {
            for (x, wt) in rule.mapped(w[0], w[1]) {
                nodes.push(x);
                weights.push(wt);
            }
        }
        Ok(Self { nodes, weights })
    }

    /// Spectral grid on `[p_lo, p_max]` for inputs supported in `[0, x_max]`:
    /// log-spaced panels up to `p = 1`, then uniform ones, all narrower than
    /// `min(0.5, 2 pi/(1+x_max))` so each panel spans at most two periods of
    /// `|U phi|^2`.
    pub fn spectral(p_lo: f64, p_max: f64, x_max: f64) -> Result<Self> {
        if !(p_lo > 0.0 && p_max > p_lo) {
            return Err(invalid(format!("need 0 < p_lo < p_max, got {p_lo}, {p_max}")));
        }
        if !(x_max >= 0.0) || !x_max.is_finite() {
            return Err(invalid(format!("support end must be finite, got {x_max}")));
        }
        let cap = 0.5f64.min(2.0 * PI / (1.0 + x_max));
        let mut coarse = vec![p_lo];
        let split = 1.0f64.min(p_max);
        let n_log = (2.0 * (split / p_lo).log10()).ceil().max(1.0) as usize;
        for i in 1..=n_log {
            coarse.push(p_lo * (split / p_lo).powf(i as f64 / n_log as f64));
        }
        if p_max > split {
            coarse.push(p_max);
        }
        let mut breaks = vec![p_lo];
        for w in coarse.windows(2) {
            let n = ((w[1] - w[0]) / cap).ceil().max(1.0) as usize;
            breaks.extend((1..=n).map(|i| w[0] + (w[1] - w[0]) * i as f64 / n as f64));
        }
        Self::composite(&breaks, 16)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Samples on a grid, with the grid's quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SampledFunction {
    /// Samples with trapezoidal weights.
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != values.len() {
            return Err(invalid("sampled function needs matching nodes and values"));
        }
        if nodes[0] <= 0.0 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("sample nodes must be positive and increasing"));
        }
        let n = nodes.len();
        let mut weights = vec![0.0; n];
        for i in 0..n - 1 {
            let h = 0.5 * (nodes[i + 1] - nodes[i]);
            weights[i] += h;
            weights[i + 1] += h;
        }
        Ok(Self { nodes, values, weights })
    }

    pub fn on_grid(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid("values do not match the grid"));
        }
        Ok(Self {
            nodes: grid.nodes.clone(),
            values,
            weights: grid.weights.clone(),
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            nodes: grid.nodes.clone(),
            values: grid.nodes.iter().map(|&x| f(x)).collect(),
            weights: grid.weights.clone(),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    /// `sum w_i f_i g_i`.
    pub fn inner(&self, other: &SampledFunction) -> f64 {
        self.weights.iter().zip(&self.values).zip(&other.values).map(|((w, a), b)| w * a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Natural cubic spline through the samples, zero outside the support.
    pub fn spline(&self) -> Spline {
        Spline::natural(&self.nodes, &self.values)
    }
}

/// Natural cubic spline.
#[derive(Debug, Clone)]
pub struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    pub fn natural(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal system for interior second derivatives
            let mut c = vec![0.0; n];
            let mut r = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
                let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
                c[i] = h1 / diag;
                r[i] = (rhs - h0 * r[i - 1]) / diag;
            }
            for i in (1..n - 1).rev() {
                m[i] = r[i] - c[i] * m[i + 1];
            }
        }
        Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t < self.x[0] || t > self.x[n - 1] {
            return 0.0;
        }
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1);
        let (x0, x1) = (self.x[i - 1], self.x[i]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        a * self.y[i - 1]
            + b * self.y[i]
            + ((a * a * a - a) * self.m[i - 1] + (b * b * b - b) * self.m[i]) * h * h / 6.0
    }
}

fn oscillation_breaks(lo: f64, hi: f64, wavelength: f64) -> Vec<f64> {
    let n = ((hi - lo) / (0.5 * wavelength)).ceil().max(1.0) as usize;
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// `(U f)(p)` for a callable `f` supported in `support`.
pub fn forward_point(f: &dyn Fn(f64) -> f64, support: (f64, f64), p: f64, d: f64) -> Result<f64> {
    let row = FdRow::new(p, d);
    let breaks = oscillation_breaks(support.0, support.1, 2.0 * PI / p);
    let mut integrand = |x: f64| f(x) * row.eval_weighted(x);
    integrate_panels(&mut integrand, &breaks, Tolerance::new(POINT_TOL, 0.0))
        .map(|e| e.value)
        .map_err(|e| Error::Quadrature(format!("forward transform at p = {p}: {e}")))
}

fn check_support(support: (f64, f64)) -> Result<()> {
    if !(support.0 >= 0.0 && support.1 > support.0 && support.1.is_finite()) {
        return Err(invalid(format!("support must be a bounded interval in [0, inf), got {support:?}")));
    }
    Ok(())
}

/// Forward transform of a callable on the nodes of `p_grid`.
pub fn fb_forward_fn(f: &dyn Fn(f64) -> f64, support: (f64, f64), p_grid: &Grid, d: f64) -> Result<SampledFunction> {
    check_dimension(d)?;
    check_support(support)?;
    let values = p_grid
        .nodes
        .iter()
        .map(|&p| forward_point(f, support, p, d))
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::on_grid(p_grid, values)
}

/// Forward transform of samples, interpolated by a natural cubic spline.
pub fn fb_forward(phi: &SampledFunction, p_grid: &Grid, d: f64) -> Result<SampledFunction> {
    let spline = phi.spline();
    fb_forward_fn(&|x| spline.eval(x), phi.support(), p_grid, d)
}

/// `(U^{-1} psi)(x) = sum_j w_j psi(p_j) sqrt(p_j(1+x)) f_d(p_j, x)` on the
/// nodes of `x_grid`, using the quadrature weights carried by `psi`.
pub fn fb_inverse(psi: &SampledFunction, x_grid: &Grid, d: f64) -> Result<SampledFunction> {
    check_dimension(d)?;
    let rows: Vec<(f64, FdRow)> = psi
        .nodes
        .iter()
        .zip(psi.values.iter().zip(&psi.weights))
        .map(|(&p, (&v, &w))| (v * w, FdRow::new(p, d)))
        .collect();
    let values = x_grid
        .nodes
        .iter()
        .map(|&x| rows.iter().map(|(c, row)| c * row.eval_weighted(x)).sum())
        .collect();
    SampledFunction::on_grid(x_grid, values)
}

/// Inverse transform of a callable `psi` supported in `support` (spectral
/// variable), by adaptive quadrature at each node of `x_grid`.
pub fn fb_inverse_fn(psi: &dyn Fn(f64) -> f64, support: (f64, f64), x_grid: &Grid, d: f64) -> Result<SampledFunction> {
    check_dimension(d)?;
    check_support(support)?;
    let lo = support.0.max(1e-300);
    let values = x_grid
        .nodes
        .iter()
        .map(|&x| {
            let breaks = oscillation_breaks(lo, support.1, 2.0 * PI / (1.0 + x));
            let mut integrand = |p: f64| psi(p) * FdRow::new(p, d).eval_weighted(x);
            integrate_panels(&mut integrand, &breaks, Tolerance::new(POINT_TOL, 0.0))
                .map(|e| e.value)
                .map_err(|e| Error::Quadrature(format!("inverse transform at x = {x}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::on_grid(x_grid, values)
}

/// Spectral density `p / (J_{-d/2}(p)^2 + Y_{-d/2}(p)^2)`: the measure in `p`
/// under which the transform without the `sqrt(p)/N(p)` normalization is
/// an isometry.
pub fn spectral_density(d: f64, p: f64) -> Result<f64> {
    check_dimension(d)?;
    if !(p > 0.0) {
        return Err(invalid(format!("spectral density needs p > 0, got {p}")));
    }
    let (j, y) = jy(-0.5 * d, p);
    Ok(p / (j * j + y * y))
}

/// Chooses `p_max` by doubling from `p_start` until the energy of `U f` on
/// the last half of `[p_lo, p_max]` is at most `tail_tol` of the total.
pub fn adaptive_spectral_grid(
    f: &dyn Fn(f64) -> f64,
    support: (f64, f64),
    d: f64,
    p_lo: f64,
    p_start: f64,
    tail_tol: f64,
) -> Result<(Grid, SampledFunction)> {
    let mut p_max = p_start;
    loop {
        let grid = Grid::spectral(p_lo, p_max, support.1)?;
        let u = fb_forward_fn(f, support, &grid, d)?;
        let total: f64 = u.inner(&u);
        let tail: f64 = u
            .nodes
            .iter()
            .zip(u.values.iter().zip(&u.weights))
            .filter(|(&p, _)| p > 0.5 * p_max)
            .map(|(_, (v, w))| w * v * v)
            .sum();
        if tail <= tail_tol * total || p_max >= 1e3 {
            return Ok((grid, u));
        }
        p_max *= 2.0;
    }
}

/// Energy of `U f` below the first node, from the small-`p` law
/// `|U f|^2 ~ C p^{d-1}` fitted at that node.
pub fn small_p_energy(u: &SampledFunction, d: f64) -> f64 {
    let p0 = u.nodes[0];
    let c = u.values[0] * u.values[0] / p0.powf(d - 1.0);
    c * p0.powf(d) / d
}
