mod common;

use std::f64::consts::PI;

use tree_spectra::fourier_bessel::{
    adaptive_spectral_grid, fb_forward, fb_forward_fn, fb_inverse, forward_point, small_p_energy,
    spectral_density, Grid, SampledFunction,
};
use tree_spectra::halfline::resolvent_form;

fn gaussian(x: f64) -> f64 {
    if (3.0..=7.0).contains(&x) {
        (-(x - 5.0).powi(2) / 0.5).exp()
    } else {
        0.0
    }
}

/// Smooth bump on `(a, b)` with its second derivative.
fn bump(a: f64, b: f64, x: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let s = (x - 0.5 * (a + b)) / half;
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let u = 1.0 - s * s;
    let phi = (-1.0 / u).exp();
    let g1 = -2.0 * s / (u * u);
    let g2 = -2.0 * (1.0 + 3.0 * s * s) / (u * u * u);
    (phi, phi * (g1 * g1 + g2) / (half * half))
}

fn x_norm_sq(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let breaks: Vec<f64> = (0..=40).map(|i| a + (b - a) * i as f64 / 40.0).collect();
    let g = Grid::composite(&breaks, 16).unwrap();
    SampledFunction::from_fn(&g, |x| f(x) * f(x)).values.iter().zip(&g.weights).map(|(v, w)| v * w).sum()
}

#[test]
fn gaussian_isometry() {
    for &d in &[1.3, 1.5, 1.6, 2.0] {
        let (_, u) = adaptive_spectral_grid(&gaussian, (3.0, 7.0), d, 1e-6, 25.0, 1e-8).unwrap();
        let energy = u.inner(&u) + small_p_energy(&u, d);
        let reference = x_norm_sq(&gaussian, 3.0, 7.0);
        assert!((energy.sqrt() / reference.sqrt() - 1.0).abs() < 1e-6, "d={d}");
    }
}

#[test]
fn gaussian_round_trip() {
    for &d in &[1.3, 1.6, 2.0] {
        let (_, u) = adaptive_spectral_grid(&gaussian, (3.0, 7.0), d, 1e-6, 25.0, 1e-8).unwrap();
        let breaks: Vec<f64> = (0..=40).map(|i| 10.0 * i as f64 / 40.0).collect();
        let x_grid = Grid::composite(&breaks, 16).unwrap();
        let back = fb_inverse(&u, &x_grid, d).unwrap();
        let err: f64 = back
            .nodes
            .iter()
            .zip(back.values.iter().zip(&back.weights))
            .map(|(&x, (v, w))| w * (v - gaussian(x)).powi(2))
            .sum();
        let rel = (err / x_norm_sq(&gaussian, 3.0, 7.0)).sqrt();
        assert!(rel <= 1e-4, "d={d} rel {rel}");
    }
}

#[test]
fn bump_gram_matrix_is_preserved() {
    let d = 1.5;
    let bumps: Vec<(f64, f64)> = vec![(0.5, 4.0), (5.0, 12.0), (13.0, 20.0), (22.0, 35.0), (36.0, 49.0)];
    let grid = Grid::spectral(1e-6, 40.0, 49.0).unwrap();
    let transforms: Vec<SampledFunction> = bumps
        .iter()
        .map(|&(a, b)| fb_forward_fn(&|x| bump(a, b, x).0, (a, b), &grid, d).unwrap())
        .collect();
    for (i, &(a, b)) in bumps.iter().enumerate() {
        for (j, t) in transforms.iter().enumerate() {
            let mut g = transforms[i].inner(t);
            if i == j {
                g += small_p_energy(t, d);
            }
            let expected = if i == j { x_norm_sq(&|x| bump(a, b, x).0, a, b) } else { 0.0 };
            assert!((g - expected).abs() < 1e-5, "({i}, {j}): {g} vs {expected}");
        }
    }
}

#[test]
fn diagonalizes_free_operator() {
    for &d in &[1.3, 1.6, 2.0] {
        let c = 0.25 * (d - 1.0) * (d - 3.0);
        let phi = |x: f64| bump(1.0, 10.0, x).0;
        let h0 = |x: f64| {
            let (v, vpp) = bump(1.0, 10.0, x);
            -vpp + c / (1.0 + x).powi(2) * v
        };
        let ps = common::log_grid(0.1, 10.0, 120);
        let pairs: Vec<(f64, f64)> = ps
            .iter()
            .map(|&p| (forward_point(&h0, (1.0, 10.0), p, d).unwrap(), p * p * forward_point(&phi, (1.0, 10.0), p, d).unwrap()))
            .collect();
        let scale = pairs.iter().map(|q| q.1.abs()).fold(0.0, f64::max);
        let worst = pairs.iter().map(|q| (q.0 - q.1).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-4 * scale, "d={d}: {worst:e} of {scale:e}");
    }
}

#[test]
fn forward_is_linear() {
    let f = |x: f64| bump(1.0, 4.0, x).0;
    let g = |x: f64| bump(2.5, 7.0, x).0;
    let combo = |x: f64| 2.5 * f(x) - 0.75 * g(x);
    for p in common::log_grid(0.01, 30.0, 25) {
        let lhs = forward_point(&combo, (1.0, 7.0), p, 1.7).unwrap();
        let rhs = 2.5 * forward_point(&f, (1.0, 7.0), p, 1.7).unwrap() - 0.75 * forward_point(&g, (1.0, 7.0), p, 1.7).unwrap();
        assert!((lhs - rhs).abs() < 1e-10, "p={p}");
    }
    let zero = forward_point(&|_| 0.0, (1.0, 7.0), 2.0, 1.7).unwrap();
    assert_eq!(zero, 0.0);
}

#[test]
fn sampled_input_matches_callable() {
    let breaks: Vec<f64> = (0..=40).map(|i| 3.0 + 0.1 * i as f64).collect();
    let x_grid = Grid::composite(&breaks, 8).unwrap();
    let samples = SampledFunction::from_fn(&x_grid, gaussian);
    let p_grid = Grid::spectral(0.01, 5.0, 7.0).unwrap();
    let a = fb_forward(&samples, &p_grid, 1.5).unwrap();
    let b = fb_forward_fn(&gaussian, (3.0, 7.0), &p_grid, 1.5).unwrap();
    let worst = a.values.iter().zip(&b.values).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    // cubic spline interpolation error, h = 0.1
    assert!(worst < 1e-5, "{worst:e}");
}

#[test]
fn zero_inverse_is_zero() {
    let p_grid = Grid::spectral(0.01, 5.0, 7.0).unwrap();
    let zero = SampledFunction::from_fn(&p_grid, |_| 0.0);
    let x_grid = Grid::composite(&[0.0, 1.0, 2.0], 8).unwrap();
    assert!(fb_inverse(&zero, &x_grid, 1.5).unwrap().values.iter().all(|&v| v == 0.0));
}

#[test]
fn density_laws() {
    for &d in &[1.2, 1.5, 2.0] {
        for p in common::log_grid(1e-4, 1e3, 50) {
            assert!(spectral_density(d, p).unwrap() > 0.0);
        }
        let p: f64 = 2000.0;
        let rho = spectral_density(d, p).unwrap();
        assert!((rho / (PI * p * p / 2.0) - 1.0).abs() < 1e-3, "d={d}");
    }
    // d = 2: Y_{-1}(p) ~ 2/(pi p), so the density behaves like (pi^2/4) p^3
    for p in [1e-3, 1e-4, 1e-5] {
        let rho = spectral_density(2.0, p).unwrap();
        assert!((rho / (PI * PI / 4.0 * p.powi(3)) - 1.0).abs() < 1e-4, "p={p}");
    }
    assert!(spectral_density(1.5, 0.0).is_err());
}

#[test]
fn parseval_matches_resolvent() {
    let (d, e) = (1.5, 0.5);
    let (_, u) = adaptive_spectral_grid(&gaussian, (3.0, 7.0), d, 1e-6, 25.0, 1e-8).unwrap();
    let via_density: f64 = u
        .nodes
        .iter()
        .zip(u.values.iter().zip(&u.weights))
        .map(|(&p, (v, w))| w * v * v / (p * p + e))
        .sum::<f64>()
        + small_p_energy(&u, d) / e;
    let direct = resolvent_form(d, e, &gaussian, 7.0).unwrap();
    assert!((via_density / direct - 1.0).abs() < 1e-4, "{via_density} vs {direct}");
}
