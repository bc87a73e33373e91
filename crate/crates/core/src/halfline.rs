//! Ground states of the weighted half-line operators
//! `-(w u')'/w - alpha s V` with `w = (1+x)^{d-1}`, and of the unitarily
//! equivalent Schrödinger form with a Robin condition at the origin.

use crate::error::{invalid, Error, Result};
use crate::fem::{cell_blocks, tail_fraction, Weight};
use crate::linalg::TreePencil;
use crate::mesh::{Mesh, MeshPolicy};
use crate::potential::PotentialSpec;
use crate::quad::{integrate_panels, Tolerance};
use crate::special::check_dimension;

/// Truncation when the variational estimate finds no bound state.
pub const FALLBACK_TRUNCATION: f64 = 1e4;
/// Decay lengths kept inside the truncated domain.
pub const DECAY_LENGTHS: f64 = 12.0;
/// Eigenfunction mass allowed in the last tenth of the domain.
pub const TAIL_MASS_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub mesh_ratio: f64,
    /// Cells per decay length `1/sqrt|E|` far from the origin.
    pub cells_per_decay_length: f64,
    /// Combine the mesh and its bisection to cancel the `h^2` error term.
    pub extrapolate: bool,
    pub truncation_cap: f64,
    pub eigen_tol: f64,
    pub residual_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            mesh_ratio: 1.05,
            cells_per_decay_length: 40.0,
            extrapolate: true,
            truncation_cap: 1e9,
            eigen_tol: 1e-13,
            residual_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineProblem {
    pub d: f64,
    pub alpha: f64,
    pub scale: f64,
    pub potential: PotentialSpec,
    pub truncation: f64,
    /// Length scale `1/sqrt|E_est|` used to size the far-field cells.
    pub decay_length: f64,
    pub mesh: Mesh,
    pub settings: SolverSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub truncation: f64,
    pub cells: usize,
    /// Raw eigenvalue on the finest mesh.
    pub e1_fine: f64,
    /// Raw eigenvalue on the coarse mesh (equal to `e1_fine` without extrapolation).
    pub e1_coarse: f64,
    pub tail_mass: f64,
    pub truncation_warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    /// Lowest eigenvalue, clamped to 0 when nothing lies below the continuum.
    pub e1: f64,
    pub nodes: Vec<f64>,
    /// Nodal values on `nodes`, normalized in the weighted `L^2` norm.
    pub eigenfunction: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    pub diagnostics: Diagnostics,
}

impl HalfLineProblem {
    /// Problem on a graded mesh with the truncation chosen from a
    /// variational estimate of the ground state (see [`truncation_rule`]).
    pub fn new(d: f64, alpha: f64, scale: f64, potential: PotentialSpec) -> Result<Self> {
        Self::with_settings(d, alpha, scale, potential, SolverSettings::default())
    }

    pub fn with_settings(
        d: f64,
        alpha: f64,
        scale: f64,
        potential: PotentialSpec,
        settings: SolverSettings,
    ) -> Result<Self> {
        validate(d, alpha, scale, &potential)?;
        let (truncation, decay) = truncation_rule(d, alpha * scale, &potential, settings.truncation_cap)?;
        let mesh = build_mesh(truncation, decay, &settings, &[])?;
        Ok(Self {
            d,
            alpha,
            scale,
            potential,
            truncation,
            decay_length: decay,
            mesh,
            settings,
        })
    }

    /// Same problem on `[0, truncation]`, meshed with the same policy.
    pub fn with_truncation(&self, truncation: f64) -> Result<Self> {
        let mesh = build_mesh(truncation, self.decay_length, &self.settings, &[])?;
        Ok(Self {
            truncation,
            mesh,
            ..self.clone()
        })
    }

    /// Problem on an explicit mesh; the truncation is the last node.
    pub fn with_mesh(d: f64, alpha: f64, scale: f64, potential: PotentialSpec, mesh: Mesh) -> Result<Self> {
        validate(d, alpha, scale, &potential)?;
        if mesh.nodes()[0] != 0.0 {
            return Err(invalid("mesh must start at 0"));
        }
        if mesh.cells() < Mesh::MIN_CELLS {
            return Err(invalid(format!("mesh needs at least {} cells", Mesh::MIN_CELLS)));
        }
        Ok(Self {
            d,
            alpha,
            scale,
            potential,
            truncation: mesh.end(),
            decay_length: mesh.end() / DECAY_LENGTHS,
            mesh,
            settings: SolverSettings::default(),
        })
    }

    pub fn coupling(&self) -> f64 {
        self.alpha * self.scale
    }
}

fn validate(d: f64, alpha: f64, scale: f64, potential: &PotentialSpec) -> Result<()> {
    check_dimension(d)?;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("coupling must be non-negative, got {alpha}")));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(invalid(format!("scale must be positive, got {scale}")));
    }
    potential.validate()
}

pub(crate) fn build_mesh(truncation: f64, decay: f64, settings: &SolverSettings, forced: &[f64]) -> Result<Mesh> {
    let mut policy = MeshPolicy::for_domain(truncation, decay);
    policy.ratio = settings.mesh_ratio;
    policy.max_cell = (decay / settings.cells_per_decay_length).max(policy.first_cell);
    Mesh::graded(truncation, policy, forced)
}

/// Minimum over `delta` of the Rayleigh quotient of `e^{-delta x}` for the
/// weighted form with coupling `g`. Negative values bound the ground state
/// from above.
pub fn exponential_estimate(d: f64, g: f64, potential: &PotentialSpec) -> Result<f64> {
    let tol = Tolerance::new(0.0, 1e-8);
    let quotient = |delta: f64| -> Result<f64> {
        let l = 1.0 / delta;
        let breaks = [0.0, 0.1 * l, l, 5.0 * l, 20.0 * l, 60.0 * l];
        let mut norm_f = |x: f64| (-2.0 * delta * x).exp() * (1.0 + x).powf(d - 1.0);
        let norm = integrate_panels(&mut norm_f, &breaks, tol)?.value;
        let mut pot_f = |x: f64| potential.eval(x) * (-2.0 * delta * x).exp() * (1.0 + x).powf(d - 1.0);
        let pot = integrate_panels(&mut pot_f, &breaks, tol)?.value;
        Ok(delta * delta - g * pot / norm)
    };
    let mut best = f64::INFINITY;
    for i in 0..=160 {
        let delta = 10f64.powf(-8.0 + 9.0 * i as f64 / 160.0);
        best = best.min(quotient(delta)?);
    }
    Ok(best)
}

/// Truncation `T = 12/sqrt|E_est|` and decay length `1/sqrt|E_est|`, where
/// `E_est` is the exponential trial estimate; falls back to
/// [`FALLBACK_TRUNCATION`] when the estimate is not negative.
pub fn truncation_rule(d: f64, g: f64, potential: &PotentialSpec, cap: f64) -> Result<(f64, f64)> {
    let est = if g > 0.0 {
        exponential_estimate(d, g, potential)?
    } else {
        0.0
    };
    if est < 0.0 {
        let decay = 1.0 / (-est).sqrt();
        let t = (DECAY_LENGTHS * decay).min(cap);
        if let Some(end) = potential.support_end() {
            return Ok((t.max(end + DECAY_LENGTHS * decay.min(t)), decay));
        }
        Ok((t, decay))
    } else {
        Ok((FALLBACK_TRUNCATION, FALLBACK_TRUNCATION / DECAY_LENGTHS))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Route {
    Weighted,
    Transformed,
}

fn assemble(problem: &HalfLineProblem, mesh: &Mesh, route: Route) -> TreePencil {
    let nodes = mesh.nodes();
    let free = nodes.len() - 1;
    let mut pencil = TreePencil::path(free);
    let g = problem.coupling();
    let d = problem.d;
    let pot = &problem.potential;
    let (weight, density): (Weight, Box<dyn Fn(f64) -> f64 + '_>) = match route {
        Route::Weighted => (Weight::Power(d), Box::new(move |x| -g * pot.eval(x))),
        Route::Transformed => {
            let c = 0.25 * (d - 1.0) * (d - 3.0);
            (Weight::Constant(1.0), Box::new(move |x| c / (1.0 + x).powi(2) - g * pot.eval(x)))
        }
    };
    for i in 0..free {
        let (k, m) = cell_blocks(nodes[i], nodes[i + 1], weight, &*density);
        if i + 1 < free {
            pencil.add_edge(i + 1, k, m);
        } else {
            pencil.add_diagonal(i, k[0][0], m[0][0]);
        }
    }
    if route == Route::Transformed {
        pencil.add_diagonal(0, 0.5 * (d - 1.0), 0.0);
    }
    pencil
}

/// Lowest eigenpair of an assembled pencil and whether it lies below 0.
pub(crate) fn raw_solve(pencil: &TreePencil, tol: f64) -> Result<(f64, Vec<f64>, f64, bool)> {
    let pair = pencil.smallest_eigenpair(tol)?;
    let bound = pencil.count_below(0.0) > 0;
    Ok((pair.value, pair.vector, pair.residual, bound))
}

/// Combines raw solves on a mesh and its bisection into a [`SpectralResult`].
pub(crate) fn finish(
    coarse: Option<f64>,
    fine: (f64, Vec<f64>, f64, bool),
    nodes: Vec<f64>,
    weight: &dyn Fn(f64) -> f64,
    residual_tol: f64,
) -> SpectralResult {
    let (e_fine, mut vector, residual, bound) = fine;
    vector.push(0.0);
    let e_coarse = coarse.unwrap_or(e_fine);
    let e1 = if !bound {
        0.0
    } else if coarse.is_some() {
        ((4.0 * e_fine - e_coarse) / 3.0).min(0.0)
    } else {
        e_fine
    };
    let truncation = *nodes.last().unwrap();
    let tail_mass = tail_fraction(&nodes, &vector, weight, 0.9 * truncation);
    SpectralResult {
        e1,
        eigenfunction: vector,
        residual,
        converged: residual <= residual_tol,
        diagnostics: Diagnostics {
            truncation,
            cells: nodes.len() - 1,
            e1_fine: e_fine,
            e1_coarse: e_coarse,
            tail_mass,
            truncation_warning: bound && tail_mass > TAIL_MASS_LIMIT,
        },
        nodes,
    }
}

fn solve(problem: &HalfLineProblem, route: Route) -> Result<SpectralResult> {
    let s = &problem.settings;
    let fine_mesh = if s.extrapolate { problem.mesh.bisected() } else { problem.mesh.clone() };
    let coarse = if s.extrapolate {
        Some(raw_solve(&assemble(problem, &problem.mesh, route), s.eigen_tol)?.0)
    } else {
        None
    };
    let fine = raw_solve(&assemble(problem, &fine_mesh, route), s.eigen_tol)?;
    let d = problem.d;
    let weight: Box<dyn Fn(f64) -> f64> = match route {
        Route::Weighted => Box::new(move |x| (1.0 + x).powf(d - 1.0)),
        Route::Transformed => Box::new(|_| 1.0),
    };
    Ok(finish(coarse, fine, fine_mesh.nodes().to_vec(), &*weight, s.residual_tol))
}

/// Ground state of `h[u] = int (|u'|^2 - alpha s V |u|^2)(1+x)^{d-1} dx` in
/// `L^2((1+x)^{d-1} dx)`, natural condition at 0 and Dirichlet at the truncation.
pub fn ground_state_weighted(problem: &HalfLineProblem) -> Result<SpectralResult> {
    solve(problem, Route::Weighted)
}

/// Ground state of `-phi'' + ((d-1)(d-3)/(4(1+x)^2) - alpha s V) phi` with
/// `phi'(0) = ((d-1)/2) phi(0)` and Dirichlet at the truncation.
pub fn ground_state_transformed(problem: &HalfLineProblem) -> Result<SpectralResult> {
    solve(problem, Route::Transformed)
}

/// Same as the solvers above, failing when the result did not converge.
pub fn require_converged(result: SpectralResult) -> Result<SpectralResult> {
    if result.converged {
        Ok(result)
    } else {
        Err(Error::NotConverged(format!("eigen residual {:e}", result.residual)))
    }
}

/// `<f, (H_0 + E)^{-1} f>` for the free transformed operator `H_0`
/// (Robin condition at 0), by a Galerkin solve on a graded mesh covering
/// `[0, support_end + 30/sqrt(E)]`.
pub fn resolvent_form(d: f64, e_shift: f64, f: &dyn Fn(f64) -> f64, support_end: f64) -> Result<f64> {
    check_dimension(d)?;
    if !(e_shift > 0.0) {
        return Err(invalid(format!("resolvent needs E > 0, got {e_shift}")));
    }
    let decay = 1.0 / e_shift.sqrt();
    let end = support_end.max(0.0) + 30.0 * decay;
    let settings = SolverSettings::default();
    let mut policy = MeshPolicy::for_domain(end, decay);
    policy.ratio = settings.mesh_ratio;
    policy.max_cell = (decay / 200.0).min(0.02).max(policy.first_cell);
    let coarse = Mesh::graded(end, policy, &[support_end])?;
    let fine = coarse.bisected();
    let r_coarse = resolvent_on(d, e_shift, f, &coarse);
    let r_fine = resolvent_on(d, e_shift, f, &fine);
    Ok((4.0 * r_fine - r_coarse) / 3.0)
}

fn resolvent_on(d: f64, e_shift: f64, f: &dyn Fn(f64) -> f64, mesh: &Mesh) -> f64 {
    let nodes = mesh.nodes();
    let free = nodes.len() - 1;
    let mut pencil = TreePencil::path(free);
    let c = 0.25 * (d - 1.0) * (d - 3.0);
    let density = move |x: f64| c / (1.0 + x).powi(2) + e_shift;
    let mut rhs = vec![0.0; free];
    let rule = crate::quad::FixedRule::gauss_legendre(6);
    for i in 0..free {
        let (a, b) = (nodes[i], nodes[i + 1]);
        let (k, m) = cell_blocks(a, b, Weight::Constant(1.0), &density);
        let _ = m;
        if i + 1 < free {
            pencil.add_edge(i + 1, k, [[0.0; 2]; 2]);
        } else {
            pencil.add_diagonal(i, k[0][0], 0.0);
        }
        let h = b - a;
        for (x, w) in rule.mapped(a, b) {
            let fx = f(x) * w;
            rhs[i] += fx * (b - x) / h;
            if i + 1 < free {
                rhs[i + 1] += fx * (x - a) / h;
            }
        }
    }
    pencil.add_diagonal(0, 0.5 * (d - 1.0), 0.0);
    let u = pencil.solve_shifted(0.0, &rhs);
    u.iter().zip(&rhs).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(alpha: f64) -> HalfLineProblem {
        HalfLineProblem::new(1.5, alpha, 1.0, PotentialSpec::power(1.2, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_coupling_has_no_bound_state() {
        let p = problem(0.0);
        assert_eq!(ground_state_weighted(&p).unwrap().e1, 0.0);
        assert_eq!(ground_state_transformed(&p).unwrap().e1, 0.0);
    }

    #[test]
    fn routes_agree() {
        let p = problem(0.5);
        let a = ground_state_weighted(&p).unwrap();
        let b = ground_state_transformed(&p).unwrap();
        assert!(a.e1 < 0.0 && a.converged && b.converged);
        assert!(((a.e1 - b.e1) / a.e1).abs() < 1e-6, "{} {}", a.e1, b.e1);
        assert!(!a.diagnostics.truncation_warning);
    }

    #[test]
    fn monotone_in_coupling() {
        let e5 = ground_state_weighted(&problem(0.5)).unwrap().e1;
        let e6 = ground_state_weighted(&problem(0.6)).unwrap().e1;
        assert!(e6 <= e5);
    }

    #[test]
    fn free_resolvent_of_constant_bump() {
        // H_0 + E is positive, so the form is positive
        let r = resolvent_form(1.5, 0.5, &|x| if (1.0..2.0).contains(&x) { 1.0 } else { 0.0 }, 2.0).unwrap();
        assert!(r > 0.0);
    }
}
