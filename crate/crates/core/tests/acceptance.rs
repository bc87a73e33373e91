//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails at the end if any criterion failed.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use tree_spectra::asymptotics::{
    default_beta, default_k, fit_log_corrected, fit_power_law, log_alphas, sweep_ground_state, variational_bound_exp,
    variational_bound_hat,
};
use tree_spectra::birman_schwinger::{top_eigenvalue_qe, trace_qe, BSKernelSpec};
use tree_spectra::fourier_bessel::{adaptive_spectral_grid, fb_inverse, forward_point, small_p_energy, Grid, SampledFunction};
use tree_spectra::halfline::{ground_state_transformed, ground_state_weighted, HalfLineProblem};
use tree_spectra::potential::PotentialSpec;
use tree_spectra::special::{bessel_j, bessel_y, lambert_w, BesselOrder};
use tree_spectra::tree_solver::{geometric_tree_for_coupling, reduced_ground_state, tree_ground_state, TreeProblem};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn power(gamma: f64) -> PotentialSpec {
    PotentialSpec::power(gamma, 1.0).unwrap()
}

fn e1(d: f64, gamma: f64, alpha: f64) -> f64 {
    ground_state_weighted(&HalfLineProblem::new(d, alpha, 1.0, power(gamma)).unwrap()).unwrap().e1
}

fn template(d: f64, gamma: f64) -> HalfLineProblem {
    HalfLineProblem::new(d, 0.1, 1.0, power(gamma)).unwrap()
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

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

fn power_law_recovery() -> Outcome {
    let r = sweep_ground_state(&template(1.6, 1.2), &log_alphas(1e-3, 1e-1, 10)).unwrap();
    let fit = fit_power_law(&r).unwrap();
    ((fit.exponent - 2.5).abs() <= 0.12, format!("exponent {:.4}, target 2.5 +- 0.12", fit.exponent))
}

fn log_corrected_recovery() -> Outcome {
    let r = sweep_ground_state(&template(1.5, 1.5), &log_alphas(1e-3, 1e-1, 10)).unwrap();
    let log = fit_log_corrected(&r, 1.5).unwrap();
    let pow = fit_power_law(&r).unwrap();
    let spread = log.ratio_max / log.ratio_min;
    let gain = pow.residual / log.fit.residual;
    (spread <= 3.0 && gain >= 2.0, format!("ratio spread {spread:.3} (<= 3), residual ratio {gain:.2} (>= 2)"))
}

fn trace_slope() -> Outcome {
    let es = [1e-4f64, 1e-3, 1e-2, 1e-1];
    let pts: Vec<(f64, f64)> = es
        .iter()
        .map(|&e| {
            let s = BSKernelSpec::new(e, 1.6, power(1.2)).unwrap();
            (e.ln(), trace_qe(&s).unwrap().value.ln())
        })
        .collect();
    let k = slope(&pts);
    let ratios: Vec<f64> = es
        .iter()
        .map(|&e| {
            let s = BSKernelSpec::new(e, 1.5, power(1.5)).unwrap();
            trace_qe(&s).unwrap().value * e.powf(0.25) / (1.0 + e.ln().abs())
        })
        .collect();
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let ok = (k + 0.4).abs() <= 0.03 && hi / lo <= 4.0;
    (ok, format!("slope {k:.4} (-0.4 +- 0.03), critical spread {:.3} (<= 4)", hi / lo))
}

fn eigenvalue_correspondence() -> Outcome {
    let mut worst = 0.0f64;
    for alpha in [0.2, 0.5, 1.0] {
        let e = -e1(1.5, 1.2, alpha);
        let s = BSKernelSpec::new(e, 1.5, power(1.2)).unwrap();
        let top = top_eigenvalue_qe(&s, 200).unwrap();
        worst = worst.max((top.mu * alpha - 1.0).abs());
    }
    (worst <= 1e-2, format!("max |mu alpha - 1| = {worst:.2e} (<= 1e-2)"))
}

fn fourier_bessel() -> Outcome {
    let (mut iso, mut diag, mut trip) = (0.0f64, 0.0f64, 0.0f64);
    let reference = x_norm_sq(&gaussian, 3.0, 7.0);
    let breaks: Vec<f64> = (0..=40).map(|i| 10.0 * i as f64 / 40.0).collect();
    let x_grid = Grid::composite(&breaks, 16).unwrap();
    for d in [1.3, 1.6, 2.0] {
        let (_, u) = adaptive_spectral_grid(&gaussian, (3.0, 7.0), d, 1e-6, 25.0, 1e-8).unwrap();
        let energy = u.inner(&u) + small_p_energy(&u, d);
        iso = iso.max((energy.sqrt() / reference.sqrt() - 1.0).abs());

        let back = fb_inverse(&u, &x_grid, d).unwrap();
        let err: f64 = back
            .nodes
            .iter()
            .zip(back.values.iter().zip(&back.weights))
            .map(|(&x, (v, w))| w * (v - gaussian(x)).powi(2))
            .sum();
        trip = trip.max((err / reference).sqrt());

        let c = 0.25 * (d - 1.0) * (d - 3.0);
        let phi = |x: f64| bump(1.0, 10.0, x).0;
        let h0 = |x: f64| {
            let (v, vpp) = bump(1.0, 10.0, x);
            -vpp + c / (1.0 + x).powi(2) * v
        };
        let pairs: Vec<(f64, f64)> = common::log_grid(0.1, 10.0, 120)
            .iter()
            .map(|&p| {
                let lhs = forward_point(&h0, (1.0, 10.0), p, d).unwrap();
                (lhs, p * p * forward_point(&phi, (1.0, 10.0), p, d).unwrap())
            })
            .collect();
        let scale = pairs.iter().map(|q| q.1.abs()).fold(0.0, f64::max);
        let worst = pairs.iter().map(|q| (q.0 - q.1).abs()).fold(0.0, f64::max);
        diag = diag.max(worst / scale);
    }
    let ok = iso <= 1e-6 && diag <= 1e-4 && trip <= 1e-4;
    (ok, format!("isometry {iso:.2e} (<= 1e-6), diagonalization {diag:.2e} (<= 1e-4), round trip {trip:.2e} (<= 1e-4)"))
}

fn unitary_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for d in [1.3, 1.6, 2.0] {
        for gamma in [1.2, 1.5] {
            if gamma > d {
                continue;
            }
            for alpha in [0.1, 0.5, 1.0] {
                let p = HalfLineProblem::new(d, alpha, 1.0, power(gamma)).unwrap();
                let a = ground_state_weighted(&p).unwrap().e1;
                let b = ground_state_transformed(&p).unwrap().e1;
                worst = worst.max(((a - b) / a).abs());
            }
        }
    }
    (worst <= 1e-5, format!("max relative gap {worst:.2e} (<= 1e-5)"))
}

fn tree_bracketing() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();
    for alpha in [0.5, 1.0] {
        let tree = geometric_tree_for_coupling(1.5, 2, alpha, &power(1.2)).unwrap();
        let c = tree.dimension_constants();
        ok &= c.e_plus == 0.5 && c.e_minus == 2.0;
        let p = TreeProblem::new(tree, alpha, power(1.2)).unwrap();
        let plus = ground_state_weighted(&p.halfline(c.e_plus).unwrap()).unwrap().e1;
        let minus = ground_state_weighted(&p.halfline(c.e_minus).unwrap()).unwrap().e1;
        let full = tree_ground_state(&p).unwrap().e1;
        let reduced = reduced_ground_state(&p).unwrap().e1;
        let gap = ((full - reduced) / reduced).abs();
        ok &= minus <= full && full <= plus && gap <= 1e-5;
        detail += &format!("alpha {alpha}: {minus:.6e} <= {full:.6e} <= {plus:.6e}, reduction gap {gap:.1e}; ");
    }
    (ok, detail.trim_end_matches("; ").to_string())
}

fn special_functions() -> Outcome {
    let j = |nu: f64, x: f64| bessel_j(BesselOrder::new(nu).unwrap(), x).unwrap().value;
    let y = |nu: f64, x: f64| bessel_y(BesselOrder::new(nu).unwrap(), x).unwrap().value;

    let mut wronskian = 0.0f64;
    for nu in [-1.0, -0.75, -0.5, 0.0, 0.25] {
        for z in common::log_grid(1e-3, 1e3, 400) {
            let w = j(nu + 1.0, z) * y(nu, z) - j(nu, z) * y(nu + 1.0, z);
            wronskian = wronskian.max((w - 2.0 / (PI * z)).abs());
        }
    }

    let mut lambert = 0.0f64;
    for z in common::log_grid(1e-6, 1e6, 500) {
        let w = lambert_w(z).unwrap();
        lambert = lambert.max(((w * w.exp() - z) / z).abs());
    }

    let orders = [-2.0, -1.5, -1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.8, 1.0, 1.25, 1.75];
    let args = [1e-3, 0.05, 0.5, 1.0, 3.7, 8.0, 11.99, 12.0, 12.5, 20.0, 47.3, 100.0, 480.0, 1000.0];
    let mut spot = 0.0f64;
    for nu in orders {
        for x in args {
            let (oj, oy) = (common::bessel_j(nu, x), common::bessel_y(nu, x));
            let scale = oj.hypot(oy);
            spot = spot.max((j(nu, x) - oj).abs() / scale.max(oj.abs()));
            spot = spot.max((y(nu, x) - oy).abs() / scale);
        }
    }
    let j0 = (j(0.0, 1.0) / common::bessel_j(0.0, 1.0) - 1.0).abs();

    let ok = wronskian <= 1e-10 && lambert <= 1e-12 && spot <= 1e-10 && j0 <= 1e-12;
    (
        ok,
        format!("wronskian {wronskian:.1e} (<= 1e-10), lambert {lambert:.1e} (<= 1e-12), spot {spot:.1e} (<= 1e-10), J0(1) {j0:.1e}"),
    )
}

fn variational_bounds() -> Outcome {
    let alpha = 1e-2;
    let exp = variational_bound_exp(1.6, 1.2, 1.0, alpha, default_k(1.2, 1.0)).unwrap();
    let exp_e1 = e1(1.6, 1.2, alpha);
    let hat = variational_bound_hat(1.5, 1.0, alpha, default_beta(1.5, 1.0).unwrap()).unwrap();
    let hat_e1 = e1(1.5, 1.5, alpha);
    let holds = |q: f64, bound: f64, e: f64| q < 0.0 && q <= bound && q >= e;
    let ok = holds(exp.rayleigh_quotient, exp.bound, exp_e1) && holds(hat.rayleigh_quotient, hat.bound, hat_e1);
    (
        ok,
        format!(
            "exp: {:.3e} <= {:.3e}, e1 {exp_e1:.3e}; hat: {:.3e} <= {:.3e}, e1 {hat_e1:.3e}",
            exp.rayleigh_quotient, exp.bound, hat.rayleigh_quotient, hat.bound
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("power-law recovery", power_law_recovery),
        ("log-corrected recovery", log_corrected_recovery),
        ("trace slope", trace_slope),
        ("eigenvalue correspondence", eigenvalue_correspondence),
        ("fourier-bessel transform", fourier_bessel),
        ("unitary equivalence", unitary_equivalence),
        ("tree bracketing", tree_bracketing),
        ("special functions", special_functions),
        ("variational bounds", variational_bounds),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {verdict} ({detail}; {:.1}s)", i + 1, start.elapsed().as_secs_f64());
        if !ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
