use crate::error::{domain, Result};

const MAX_ITER: usize = 50;
const RESIDUAL_TOL: f64 = 1e-14;

/// Principal branch of the Lambert W function on `[0, inf)`: the `w >= 0`
/// solving `w e^w = z`.
///
/// Halley iteration from `log(1 + z)`.
pub fn lambert_w(z: f64) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(domain(format!("lambert_w requires z >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = z.ln_1p();
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        if f.abs() <= RESIDUAL_TOL * z {
            break;
        }
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= f64::EPSILON * w.abs() {
            break;
        }
    }
    Ok(w)
}
