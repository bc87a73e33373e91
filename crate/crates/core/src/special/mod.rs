//! Special functions: real-order Bessel functions, Gamma, Lambert W and the
//! Fourier–Bessel kernel built from them.

mod bessel;
mod gamma;
mod kernel;
mod lambert;

pub use bessel::{
    bessel_j, bessel_y, BesselOrder, BesselValue, ACCURACY_LOSS_ARGUMENT, NEAR_INTEGER_BAND,
    SERIES_LIMIT,
};
pub use gamma::gamma_fn;
pub use kernel::{fd_kernel, FdRow, KernelPoint};
pub use lambert::lambert_w;

pub(crate) use bessel::jy;
pub(crate) use kernel::check_dimension;

use std::f64::consts::PI;

/// `sin(pi x)` with exact argument reduction.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let s = (PI * (x - n)).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// `cos(pi x)` with exact argument reduction.
pub(crate) fn cos_pi(x: f64) -> f64 {
    let n = x.round();
    let c = (PI * (x - n)).cos();
    if (n as i64) % 2 == 0 {
        c
    } else {
        -c
    }
}
