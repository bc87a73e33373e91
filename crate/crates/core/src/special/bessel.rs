//! Real-order Bessel functions of the first and second kind for real
//! positive arguments.
//!
//! Two regimes: the ascending power series below `SERIES_LIMIT` and the
//! Hankel asymptotic expansion above `12 * max(1, nu^2)`. Orders with
//! `1 < |nu| <= 2` in between the two limits are reached by one step of the
//! three-term recurrence from orders inside `[-1, 1]`, where the asymptotic
//! branch is already valid.
//!
//! `Y_nu` uses the connection formula for non-integer orders and the
//! logarithmic series for integer orders. Inside the band
//! `|nu - n| < NEAR_INTEGER_BAND` the value is interpolated linearly between
//! `Y_n` and `Y_{n +- band}`; accuracy there is only guaranteed to `1e-8`.

use std::f64::consts::PI;

use super::gamma::rgamma;
use super::{cos_pi, sin_pi};
use crate::error::{domain, invalid, Result};

pub const SERIES_LIMIT: f64 = 12.0;
pub const NEAR_INTEGER_BAND: f64 = 1e-6;
/// Above this argument the phase reduction starts to lose digits.
pub const ACCURACY_LOSS_ARGUMENT: f64 = 1e8;
pub const MAX_ORDER: f64 = 2.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// A real Bessel order with `|nu| <= 2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(invalid(format!("Bessel order must be finite, got {nu}")));
        }
        if nu.abs() > MAX_ORDER {
            return Err(invalid(format!(
                "Bessel order {nu} outside supported range |nu| <= {MAX_ORDER}"
            )));
        }
        Ok(Self(nu))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// True for non-integer orders within `NEAR_INTEGER_BAND` of an integer.
    pub fn is_near_integer(self) -> bool {
        let dist = (self.0 - self.0.round()).abs();
        dist > 0.0 && dist < NEAR_INTEGER_BAND
    }
}

/// A function value plus a flag raised when the argument is so large that
/// the result carries fewer digits than the nominal accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselValue {
    pub value: f64,
    pub accuracy_loss: bool,
}

/// `J_nu(x)` for `x >= 0` (`x = 0` only for `nu >= 0` or integer `nu`).
pub fn bessel_j(nu: BesselOrder, x: f64) -> Result<BesselValue> {
    let n = nu.value();
    if x.is_nan() || x < 0.0 {
        return Err(domain(format!("bessel_j requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        let value = if n == 0.0 {
            1.0
        } else if n > 0.0 || n == n.round() {
            0.0
        } else {
            return Err(domain(format!("J_{n}(0) is unbounded")));
        };
        return Ok(BesselValue { value, accuracy_loss: false });
    }
    Ok(BesselValue {
        value: jy(n, x).0,
        accuracy_loss: x > ACCURACY_LOSS_ARGUMENT,
    })
}

/// `Y_nu(x)` for `x > 0`.
pub fn bessel_y(nu: BesselOrder, x: f64) -> Result<BesselValue> {
    if x.is_nan() || x <= 0.0 {
        return Err(domain(format!("bessel_y requires x > 0, got {x}")));
    }
    Ok(BesselValue {
        value: jy(nu.value(), x).1,
        accuracy_loss: x > ACCURACY_LOSS_ARGUMENT,
    })
}

pub(crate) fn asymptotic_threshold(nu: f64) -> f64 {
    SERIES_LIMIT * (nu * nu).max(1.0)
}

/// `(J_nu(x), Y_nu(x))` for `x > 0` and `|nu| <= 2`. No validation.
pub(crate) fn jy(nu: f64, x: f64) -> (f64, f64) {
    debug_assert!(x > 0.0);
    if x >= asymptotic_threshold(nu) {
        hankel_asymptotic(nu, x)
    } else if x >= SERIES_LIMIT {
        // only reachable for |nu| > 1
        let s = nu.signum();
        let (j1, y1) = hankel_asymptotic(nu - s, x);
        let (j2, y2) = hankel_asymptotic(nu - 2.0 * s, x);
        let c = 2.0 * (nu - s) / x;
        (c * j1 - j2, c * y1 - y2)
    } else {
        let j = j_series(nu, x);
        (j, y_series_region(nu, j, x))
    }
}

/// Ascending series `sum (-1)^k (x/2)^{2k+nu} / (k! Gamma(k+nu+1))`.
pub(crate) fn j_series(nu: f64, x: f64) -> f64 {
    if nu < 0.0 && nu == nu.round() {
        let v = j_series(-nu, x);
        return if (nu as i64) % 2 == 0 { v } else { -v };
    }
    let half = 0.5 * x;
    let q = -half * half;
    let lead = if nu == 0.0 { 1.0 } else { (nu * half.ln()).exp() };
    let mut term = lead * rgamma(nu + 1.0);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for k in 0..300 {
        let t = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - t) + term
        } else {
            (term - t) + sum
        };
        sum = t;
        let kf = k as f64;
        term *= q / ((kf + 1.0) * (kf + 1.0 + nu));
        if term.abs() <= 1e-18 * (sum + comp).abs() && kf > half {
            break;
        }
    }
    sum + comp
}

fn y_series_region(nu: f64, j_nu: f64, x: f64) -> f64 {
    let n = nu.round();
    let dist = nu - n;
    if dist == 0.0 {
        y_integer(n as i32, x)
    } else if dist.abs() < NEAR_INTEGER_BAND {
        let edge = n + dist.signum() * NEAR_INTEGER_BAND;
        let y_n = y_integer(n as i32, x);
        let y_edge = y_connection(edge, j_series(edge, x), x);
        y_n + (dist.abs() / NEAR_INTEGER_BAND) * (y_edge - y_n)
    } else {
        y_connection(nu, j_nu, x)
    }
}

fn y_connection(nu: f64, j_nu: f64, x: f64) -> f64 {
    (j_nu * cos_pi(nu) - j_series(-nu, x)) / sin_pi(nu)
}

/// Logarithmic series for integer order.
fn y_integer(n: i32, x: f64) -> f64 {
    if n < 0 {
        let v = y_integer(-n, x);
        return if n % 2 == 0 { v } else { -v };
    }
    let half = 0.5 * x;
    let q = half * half;
    let mut finite = 0.0;
    if n > 0 {
        // sum_{k<n} (n-k-1)!/k! q^k
        let mut fact_nk1 = (1..n).fold(1.0, |a, i| a * i as f64); // (n-1)!
        let mut fact_k = 1.0;
        let mut qk = 1.0;
        for k in 0..n {
            finite += fact_nk1 / fact_k * qk;
            if k + 1 < n {
                fact_nk1 /= (n - k - 1) as f64;
                fact_k *= (k + 1) as f64;
                qk *= q;
            }
        }
        finite *= -half.powi(-n) / PI;
    }
    let log_part = 2.0 / PI * half.ln() * j_series(n as f64, x);

    // psi(k+1) + psi(n+k+1), with psi(1) = -gamma
    let mut psi_k = -EULER_GAMMA;
    let mut psi_nk = -EULER_GAMMA + (1..=n).map(|i| 1.0 / i as f64).sum::<f64>();
    let mut coeff = 1.0 / (1..=n).fold(1.0, |a, i| a * i as f64); // 1/(k!(n+k)!) at k=0
    let mut pow = 1.0;
    let mut sum = 0.0;
    for k in 0..300 {
        let term = (psi_k + psi_nk) * coeff * pow;
        sum += term;
        let kf = k as f64;
        if term.abs() <= 1e-18 * sum.abs() && kf > half {
            break;
        }
        psi_k += 1.0 / (kf + 1.0);
        psi_nk += 1.0 / (kf + 1.0 + n as f64);
        coeff /= (kf + 1.0) * (kf + 1.0 + n as f64);
        pow *= -q;
    }
    let series = -half.powi(n) / PI * sum;
    finite + log_part + series
}

/// Hankel large-argument expansion with the phase split as
/// `cos(x - phi) = cos x cos phi + sin x sin phi` so that the reduction of
/// `x` itself is left to the libm routines.
fn hankel_asymptotic(nu: f64, x: f64) -> (f64, f64) {
    let (p, q) = hankel_pq(nu, x);
    let phi = (0.5 * nu + 0.25) * PI;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    let pref = (2.0 / (PI * x)).sqrt();
    (
        pref * (p * cos_chi - q * sin_chi),
        pref * (p * sin_chi + q * cos_chi),
    )
}

pub(crate) fn hankel_pq(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (8.0 * k as f64 * x);
        let mag = term.abs();
        if mag == 0.0 || mag > prev {
            break;
        }
        prev = mag;
        // k odd -> Q with sign (-1)^((k-1)/2); k even -> P with sign (-1)^(k/2)
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if mag < 1e-17 {
            break;
        }
    }
    (p, q)
}
