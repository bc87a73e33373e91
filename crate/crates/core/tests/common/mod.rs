#![allow(dead_code)]

//! Extended-precision Bessel oracle: ascending series in MPFR arithmetic with
//! enough guard bits to absorb the cancellation at large arguments.

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

fn precision_for(x: f64) -> u32 {
    // terms grow like e^x before cancelling; 50 decimal digits survive on top
    (1.45 * x.max(1.0)) as u32 + 400
}

fn j_series(nu: &Float, x: &Float, prec: u32) -> Float {
    if nu.is_integer() && *nu < 0 {
        let pos = Float::with_val(prec, -nu);
        let odd = pos.to_f64() as i64 % 2 == 1;
        let v = j_series(&pos, x, prec);
        return if odd { -v } else { v };
    }
    let half = Float::with_val(prec, x / 2u32);
    let q = -Float::with_val(prec, &half * &half);
    let lead = Float::with_val(prec, half.clone().ln() * nu).exp();
    let nu1 = Float::with_val(prec, nu + 1u32);
    let mut term = lead / nu1.gamma();
    let mut sum = Float::with_val(prec, 0);
    let eps = Float::with_val(prec, 2).pow(-(prec as i32) + 8);
    let mut k = 0u32;
    loop {
        sum += &term;
        let kf = Float::with_val(prec, k + 1);
        let denom = Float::with_val(prec, &kf * Float::with_val(prec, &kf + nu));
        term = term * &q / denom;
        k += 1;
        let small = Float::with_val(prec, term.clone().abs() - Float::with_val(prec, sum.clone().abs() * &eps)) < 0;
        if k as f64 > x.to_f64() && small {
            break;
        }
    }
    sum
}

/// `J_nu(x)` to at least 50 significant digits.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    let prec = precision_for(x);
    let nu = Float::with_val(prec, nu);
    let xf = Float::with_val(prec, x);
    j_series(&nu, &xf, prec).to_f64()
}

/// `Y_nu(x)` via the connection formula; integer orders are reached at
/// `nu + 1e-40`, far below double resolution.
pub fn bessel_y(nu: f64, x: f64) -> f64 {
    let prec = precision_for(x) + 300;
    let mut nuf = Float::with_val(prec, nu);
    if nuf.is_integer() {
        nuf += Float::with_val(prec, 1e-40_f64);
    }
    let xf = Float::with_val(prec, x);
    let pi = Float::with_val(prec, Constant::Pi);
    let arg = Float::with_val(prec, &nuf * &pi);
    let (s, c) = arg.sin_cos(Float::new(prec));
    let jp = j_series(&nuf, &xf, prec);
    let neg = Float::with_val(prec, -&nuf);
    let jm = j_series(&neg, &xf, prec);
    ((jp * c - jm) / s).to_f64()
}

/// Extended-precision Gamma.
pub fn gamma(x: f64) -> f64 {
    Float::with_val(256, x).gamma().to_f64()
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Prüfer angle of `-phi'' + (q - g(1+x)^{-gamma}) phi = E phi` with
/// `q = (d-1)(d-3)/(4(1+x)^2)`, started from the Robin data
/// `phi(0) = 1, phi'(0) = (d-1)/2` and integrated with classical RK4 to
/// `x_end`. `d = 1` gives the plain Neumann line problem.
pub fn prufer_angle(d: f64, gamma: f64, g: f64, e: f64, x_end: f64, steps: usize) -> f64 {
    let c = 0.25 * (d - 1.0) * (d - 3.0);
    let rhs = |x: f64, theta: f64| {
        let pot = c / (1.0 + x).powi(2) - g * (1.0 + x).powf(-gamma);
        let (s, co) = theta.sin_cos();
        co * co + (e - pot) * s * s
    };
    let h = x_end / steps as f64;
    let mut theta = 1.0f64.atan2(0.5 * (d - 1.0));
    for i in 0..steps {
        let x = i as f64 * h;
        let k1 = rhs(x, theta);
        let k2 = rhs(x + 0.5 * h, theta + 0.5 * h * k1);
        let k3 = rhs(x + 0.5 * h, theta + 0.5 * h * k2);
        let k4 = rhs(x + h, theta + h * k3);
        theta += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    }
    theta
}

/// Ground state by bisection on the Dirichlet condition `theta(x_end) = pi`.
pub fn shooting_ground_state(d: f64, gamma: f64, g: f64, x_end: f64, steps: usize) -> f64 {
    let (mut lo, mut hi) = (-5.0, 0.0);
    for _ in 0..70 {
        let mid = 0.5 * (lo + hi);
        if prufer_angle(d, gamma, g, mid, x_end, steps) > std::f64::consts::PI {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
