//! Coupling sweeps, fits of the weak-coupling laws
//! `e1 ~ -alpha^{2/(2-gamma)}` and `e1 ~ -|alpha log alpha|^{2/(2-gamma)}`,
//! and the closed-form variational upper bounds.

use std::f64::consts::E;
use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::halfline::{ground_state_weighted, HalfLineProblem};
use crate::quad::{integrate_panels, Tolerance};
use crate::special::{gamma_fn, lambert_w};

/// Entries a fit needs after the window is applied.
pub const MIN_FIT_POINTS: usize = 5;
/// `int_1^inf e^{-2x}/x dx = E_1(2)`.
pub const EXP_INTEGRAL_E1_2: f64 = 0.048_900_510_708_061_12;
/// `int_0^inf e^{-2x}(1+x) dx`.
pub const EXP_MOMENT: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepEntry {
    pub alpha: f64,
    /// NaN when the solve failed.
    pub e1: f64,
    pub truncation: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    Power,
    LogCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub law: Law,
    pub exponent: f64,
    pub intercept: f64,
    /// Largest absolute deviation of `log|e1|` from the fitted line.
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    /// Ordered by strictly decreasing `alpha`.
    pub entries: Vec<SweepEntry>,
    pub fit: Option<Fit>,
}

impl SweepReport {
    /// Synthetic report from `(alpha, e1)` pairs, all marked converged.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        check_decreasing(&pairs.iter().map(|p| p.0).collect::<Vec<_>>())?;
        let entries = pairs
            .iter()
            .map(|&(alpha, e1)| SweepEntry {
                alpha,
                e1,
                truncation: f64::NAN,
                converged: true,
            })
            .collect();
        Ok(Self { entries, fit: None })
    }

    /// Rows `alpha,e1,truncation,converged` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,e1,truncation,converged\n");
        for e in &self.entries {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{}", e.alpha, e.e1, e.truncation, e.converged);
        }
        out
    }

    /// Converged bound states inside the fit window: the largest and
    /// smallest coupling are dropped when enough points remain.
    fn fit_window(&self) -> Result<Vec<&SweepEntry>> {
        let usable: Vec<&SweepEntry> = self.entries.iter().filter(|e| e.converged && e.e1 < 0.0).collect();
        if usable.len() < MIN_FIT_POINTS {
            return Err(Error::InsufficientData(format!(
                "need {MIN_FIT_POINTS} converged bound states, have {}",
                usable.len()
            )));
        }
        if usable.len() >= MIN_FIT_POINTS + 2 {
            Ok(usable[1..usable.len() - 1].to_vec())
        } else {
            Ok(usable)
        }
    }
}

fn check_decreasing(alphas: &[f64]) -> Result<()> {
    if alphas.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(invalid("couplings must be positive"));
    }
    if alphas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("couplings must be strictly decreasing"));
    }
    Ok(())
}

/// `n` log-spaced couplings from `hi` down to `lo`.
pub fn log_alphas(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    (0..n).map(|i| hi * (lo / hi).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Solves the template problem at each coupling. Failed solves are kept
/// as non-converged entries; invalid parameters abort.
pub fn sweep_ground_state(template: &HalfLineProblem, alphas: &[f64]) -> Result<SweepReport> {
    check_decreasing(alphas)?;
    let mut entries = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let problem = HalfLineProblem::with_settings(
            template.d,
            alpha,
            template.scale,
            template.potential.clone(),
            template.settings,
        )?;
        let entry = match ground_state_weighted(&problem) {
            Ok(r) => SweepEntry {
                alpha,
                e1: r.e1,
                truncation: problem.truncation,
                converged: r.converged && !r.diagnostics.truncation_warning,
            },
            Err(Error::InvalidParameter(m)) => return Err(Error::InvalidParameter(m)),
            Err(_) => SweepEntry {
                alpha,
                e1: f64::NAN,
                truncation: problem.truncation,
                converged: false,
            },
        };
        entries.push(entry);
    }
    Ok(SweepReport { entries, fit: None })
}

/// Least-squares line through `(x, y)`: `(slope, intercept, max |deviation|)`.
pub fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = points.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(0.0, f64::max);
    (slope, intercept, residual)
}

/// Slope of `log|e1|` against `log alpha`.
pub fn fit_power_law(report: &SweepReport) -> Result<Fit> {
    let window = report.fit_window()?;
    let points: Vec<(f64, f64)> = window.iter().map(|e| (e.alpha.ln(), (-e.e1).ln())).collect();
    let (exponent, intercept, residual) = least_squares(&points);
    Ok(Fit {
        law: Law::Power,
        exponent,
        intercept,
        residual,
        points: points.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogCorrectedFit {
    /// Extremes of `|e1| / |alpha log alpha|^{2/(2-gamma)}`.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Line through `log|e1|` against `log|alpha log alpha|`.
    pub fit: Fit,
}

/// Compares the sweep with `|alpha log alpha|^{2/(2-gamma)}`.
pub fn fit_log_corrected(report: &SweepReport, gamma: f64) -> Result<LogCorrectedFit> {
    if !(gamma > 1.0 && gamma < 2.0) {
        return Err(invalid(format!("log-corrected law needs 1 < gamma < 2, got {gamma}")));
    }
    if let Some(e) = report.entries.iter().find(|e| e.alpha >= 1.0 / E) {
        return Err(invalid(format!("log-corrected law needs alpha < 1/e, got {}", e.alpha)));
    }
    let window = report.fit_window()?;
    let power = 2.0 / (2.0 - gamma);
    let ratios: Vec<f64> = window
        .iter()
        .map(|e| -e.e1 / (e.alpha * e.alpha.ln()).abs().powf(power))
        .collect();
    let points: Vec<(f64, f64)> = window
        .iter()
        .map(|e| ((e.alpha * e.alpha.ln()).abs().ln(), (-e.e1).ln()))
        .collect();
    let (exponent, intercept, residual) = least_squares(&points);
    Ok(LogCorrectedFit {
        ratio_min: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
        ratio_max: ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        fit: Fit {
            law: Law::LogCorrected,
            exponent,
            intercept,
            residual,
            points: points.len(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalBound {
    /// `h_alpha[u] / |u|^2` for the test function.
    pub rayleigh_quotient: f64,
    pub bound_constant: f64,
    /// The asserted bound `-bound_constant * scale(alpha)`.
    pub bound: f64,
    /// `K` for the exponential, `beta` for the hat function.
    pub parameter: f64,
}

/// `K^gamma c E_1(2) - 3K^2/4`.
pub fn k_tilde(gamma: f64, c_lower: f64, k: f64) -> f64 {
    k.powf(gamma) * c_lower * EXP_INTEGRAL_E1_2 - k * k * EXP_MOMENT
}

/// The maximizer of [`k_tilde`] in `K`.
pub fn default_k(gamma: f64, c_lower: f64) -> f64 {
    (gamma * c_lower * EXP_INTEGRAL_E1_2 / (2.0 * EXP_MOMENT)).powf(1.0 / (2.0 - gamma))
}

/// `int_delta^inf e^{-2y} y^{s-1} dy` in the variable `log y`.
fn upper_gamma_tail(s: f64, delta: f64) -> Result<f64> {
    let (a, b) = (delta.ln(), 40f64.ln());
    let n = ((b - a) / 0.5).ceil().max(1.0) as usize;
    let breaks: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let mut f = |t: f64| {
        let y = t.exp();
        (-2.0 * y).exp() * y.powf(s)
    };
    Ok(integrate_panels(&mut f, &breaks, Tolerance::new(0.0, 1e-13))?.value)
}

/// Rayleigh quotient of `u(x) = e^{-delta x}`, `delta = K alpha^{1/(2-gamma)}`,
/// for the weighted form with `V = c_lower (1+x)^{-gamma}`.
///
/// Substituting `y = delta(1+x)` turns both terms into incomplete gamma
/// integrals, so the quotient is `delta^2 - alpha c delta^gamma I(d-gamma)/I(d)`
/// with `I(s) = int_delta^inf e^{-2y} y^{s-1} dy`.
pub fn variational_bound_exp(d: f64, gamma: f64, c_lower: f64, alpha: f64, k: f64) -> Result<VariationalBound> {
    if !(1.0 < gamma && gamma < d && d <= 2.0) {
        return Err(invalid(format!("exponential bound needs 1 < gamma < d <= 2, got gamma = {gamma}, d = {d}")));
    }
    if !(c_lower > 0.0 && alpha > 0.0 && k > 0.0) {
        return Err(invalid("c_lower, alpha and K must be positive"));
    }
    let kt = k_tilde(gamma, c_lower, k);
    if !(kt > 0.0) {
        return Err(invalid(format!("K = {k} gives K~ = {kt:e} <= 0")));
    }
    let delta = k * alpha.powf(1.0 / (2.0 - gamma));
    if !(delta < 1.0) {
        return Err(invalid(format!("delta = {delta} must be below 1; decrease alpha")));
    }
    let ratio = upper_gamma_tail(d - gamma, delta)? / upper_gamma_tail(d, delta)?;
    let quotient = delta * delta - alpha * c_lower * delta.powf(gamma) * ratio;
    let constant = 2f64.powf(d) * kt / gamma_fn(d)?;
    Ok(VariationalBound {
        rayleigh_quotient: quotient,
        bound_constant: constant,
        bound: -constant * alpha.powf(2.0 / (2.0 - gamma)),
        parameter: k,
    })
}

/// `c/(8(2-d)) log(beta/2) - (2^d/d) beta^{d-2}`.
pub fn hat_margin(d: f64, c_lower: f64, beta: f64) -> f64 {
    c_lower / (8.0 * (2.0 - d)) * (0.5 * beta).ln() - 2f64.powf(d) / d * beta.powf(d - 2.0)
}

/// Smallest power of two above 2 with a positive [`hat_margin`].
pub fn default_beta(d: f64, c_lower: f64) -> Result<f64> {
    (2..64)
        .map(|k| 2f64.powi(k))
        .find(|&beta| hat_margin(d, c_lower, beta) > 0.0)
        .ok_or_else(|| invalid(format!("no beta up to 2^63 gives a positive margin for d = {d}")))
}

/// Closed-form pieces of the hat function `w = 1 - x/mu` on `[0, mu]`:
/// `(kinetic, norm, potential)` where potential is `int w^2 (1+x)^{-1} dx`
/// (the weighted potential density when `gamma = d`).
pub fn hat_integrals(d: f64, mu: f64) -> (f64, f64, f64) {
    let a = 1.0 + mu;
    let kinetic = (a.powf(d) - 1.0) / (d * mu * mu);
    let norm = (a * a * (a.powf(d) - 1.0) / d - 2.0 * a * (a.powf(d + 1.0) - 1.0) / (d + 1.0)
        + (a.powf(d + 2.0) - 1.0) / (d + 2.0))
        / (mu * mu);
    let potential = (a * a * a.ln() - 2.0 * a * mu + 0.5 * (a * a - 1.0)) / (mu * mu);
    (kinetic, norm, potential)
}

/// Rayleigh quotient of the hat function with `mu = beta nu`,
/// `nu = |alpha log alpha|^{-1/(2-d)}`, for `V = c_lower (1+x)^{-d}`.
pub fn variational_bound_hat(d: f64, c_lower: f64, alpha: f64, beta: f64) -> Result<VariationalBound> {
    if !(1.0 < d && d < 2.0) {
        return Err(invalid(format!("hat bound needs 1 < gamma = d < 2, got d = {d}")));
    }
    if !(c_lower > 0.0) {
        return Err(invalid("c_lower must be positive"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("hat bound needs 0 < alpha < 1, got {alpha}")));
    }
    if !(beta > 2.0) {
        return Err(invalid(format!("beta must exceed 2, got {beta}")));
    }
    let m = hat_margin(d, c_lower, beta);
    if !(m > 0.0) {
        return Err(invalid(format!("beta = {beta} gives M = {m:e} <= 0")));
    }
    let la = (alpha * alpha.ln()).abs();
    let nu = la.powf(-1.0 / (2.0 - d));
    if !(nu >= E) {
        return Err(invalid(format!("nu = {nu} is below e; decrease alpha")));
    }
    let mu = beta * nu;
    let (kinetic, norm, potential) = hat_integrals(d, mu);
    let quotient = (kinetic - alpha * c_lower * potential) / norm;
    let constant = d * m / (2.0 * beta).powf(d);
    Ok(VariationalBound {
        rayleigh_quotient: quotient,
        bound_constant: constant,
        bound: -constant * la.powf(2.0 / (2.0 - d)),
        parameter: beta,
    })
}

/// `y - log y >= y/2` for `y > 0`.
pub fn log_gap_holds(y: f64) -> bool {
    y - y.ln() >= 0.5 * y
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambertStep {
    pub alpha: f64,
    pub e: f64,
    /// `[(2D/(2-gamma)) alpha W((2-gamma)/(2D alpha))]^{2/(2-gamma)}`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambertReplay {
    /// Smallest `D` with `1/(D alpha) <= -E^{(gamma-2)/2} log E` on the data.
    pub d_tilde: f64,
    pub steps: Vec<LambertStep>,
}

impl LambertReplay {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.steps.iter().all(|s| s.e <= s.bound * (1.0 + rel_tol))
    }
}

/// Replays the Lambert-W inversion of `1/(D alpha) <= (2/(2-gamma)) y e^y`,
/// `y = log E^{(gamma-2)/2}`, on converged entries with `E < 1/2`.
pub fn lambert_replay(report: &SweepReport, gamma: f64) -> Result<LambertReplay> {
    if !(gamma > 1.0 && gamma < 2.0) {
        return Err(invalid(format!("Lambert replay needs 1 < gamma < 2, got {gamma}")));
    }
    let data: Vec<(f64, f64)> = report
        .entries
        .iter()
        .filter(|e| e.converged && e.e1 < 0.0 && -e.e1 < 0.5)
        .map(|e| (e.alpha, -e.e1))
        .collect();
    if data.is_empty() {
        return Err(Error::InsufficientData("no bound states with E < 1/2".into()));
    }
    let d_tilde = data
        .iter()
        .map(|&(a, e)| 1.0 / (a * -e.powf(0.5 * (gamma - 2.0)) * e.ln()))
        .fold(0.0, f64::max);
    let p = 2.0 / (2.0 - gamma);
    let mut steps = Vec::with_capacity(data.len());
    for (alpha, e) in data {
        let w = lambert_w((2.0 - gamma) / (2.0 * d_tilde * alpha))?;
        let bound = (2.0 * d_tilde / (2.0 - gamma) * alpha * w).powf(p);
        steps.push(LambertStep { alpha, e, bound });
    }
    Ok(LambertReplay { d_tilde, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_tilde_is_positive_at_default() {
        let k = default_k(1.2, 1.0);
        assert!(k_tilde(1.2, 1.0, k) > 0.0);
        assert!(k_tilde(1.2, 1.0, 0.5 * k) < k_tilde(1.2, 1.0, k));
        assert!(k_tilde(1.2, 1.0, 2.0 * k) < k_tilde(1.2, 1.0, k));
    }

    #[test]
    fn hat_integrals_against_quadrature() {
        let (d, mu) = (1.5, 37.0);
        let (kin, norm, pot) = hat_integrals(d, mu);
        let q = |f: &dyn Fn(f64) -> f64| crate::quad::integrate(f, 0.0, mu, Tolerance::new(0.0, 1e-13)).unwrap().value;
        let w = |x: f64| 1.0 - x / mu;
        assert!((kin - q(&|x| (1.0 + x).powf(d - 1.0) / (mu * mu))).abs() < 1e-12 * kin);
        assert!((norm - q(&|x| w(x) * w(x) * (1.0 + x).powf(d - 1.0))).abs() < 1e-11 * norm);
        assert!((pot - q(&|x| w(x) * w(x) / (1.0 + x))).abs() < 1e-11 * pot);
    }

    #[test]
    fn default_beta_is_smallest_power() {
        let beta = default_beta(1.5, 1.0).unwrap();
        assert_eq!(beta, 16.0);
        assert!(hat_margin(1.5, 1.0, 8.0) <= 0.0);
    }

    #[test]
    fn csv_has_full_precision() {
        let r = SweepReport::from_pairs(&[(0.1, -1.0 / 3.0)]).unwrap();
        assert!(r.to_csv().contains("1.0000000000000001e-1,-3.3333333333333331e-1,NaN,true"));
    }
}
