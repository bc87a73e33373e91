//! Browser bindings for the half-line solver, coupling sweeps and the
//! Birman-Schwinger trace. The plain functions are usable natively; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use tree_spectra::asymptotics::{fit_power_law, log_alphas, sweep_ground_state};
use tree_spectra::birman_schwinger::{trace_qe, BSKernelSpec};
use tree_spectra::halfline::{ground_state_weighted, HalfLineProblem};
use tree_spectra::potential::PotentialSpec;
use wasm_bindgen::prelude::*;

// Plot points sent back for an eigenfunction.
const MAX_SAMPLES: usize = 400;

#[wasm_bindgen]
pub struct GroundState {
    e1: f64,
    converged: bool,
    radii: Vec<f64>,
    values: Vec<f64>,
}

#[wasm_bindgen]
impl GroundState {
    #[wasm_bindgen(getter)]
    pub fn e1(&self) -> f64 {
        self.e1
    }

    #[wasm_bindgen(getter)]
    pub fn converged(&self) -> bool {
        self.converged
    }

    #[wasm_bindgen(getter)]
    pub fn radii(&self) -> Vec<f64> {
        self.radii.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
}

#[wasm_bindgen]
pub struct Sweep {
    alphas: Vec<f64>,
    energies: Vec<f64>,
    exponent: f64,
}

#[wasm_bindgen]
impl Sweep {
    #[wasm_bindgen(getter)]
    pub fn alphas(&self) -> Vec<f64> {
        self.alphas.clone()
    }

    /// NaN where a solve failed.
    #[wasm_bindgen(getter)]
    pub fn energies(&self) -> Vec<f64> {
        self.energies.clone()
    }

    /// Fitted exponent of `|e1|` against `alpha`; NaN if too few points bind.
    #[wasm_bindgen(getter)]
    pub fn exponent(&self) -> f64 {
        self.exponent
    }
}

fn power(gamma: f64) -> tree_spectra::Result<PotentialSpec> {
    PotentialSpec::power(gamma, 1.0)
}

/// Ground state of the half-line problem for `V(x) = (1+x)^{-gamma}`,
/// with the eigenfunction thinned to at most 400 points.
pub fn solve_ground_state(d: f64, gamma: f64, alpha: f64) -> tree_spectra::Result<GroundState> {
    let problem = HalfLineProblem::new(d, alpha, 1.0, power(gamma)?)?;
    let r = ground_state_weighted(&problem)?;
    let step = r.nodes.len().div_ceil(MAX_SAMPLES).max(1);
    let (radii, values) = r.nodes.iter().zip(&r.eigenfunction).step_by(step).map(|(x, v)| (*x, *v)).unzip();
    Ok(GroundState {
        e1: r.e1,
        converged: r.converged,
        radii,
        values,
    })
}

pub fn run_sweep(d: f64, gamma: f64, alpha_min: f64, alpha_max: f64, count: usize) -> tree_spectra::Result<Sweep> {
    let template = HalfLineProblem::new(d, alpha_max, 1.0, power(gamma)?)?;
    let report = sweep_ground_state(&template, &log_alphas(alpha_min, alpha_max, count))?;
    let exponent = fit_power_law(&report).map(|f| f.exponent).unwrap_or(f64::NAN);
    Ok(Sweep {
        alphas: report.entries.iter().map(|e| e.alpha).collect(),
        energies: report.entries.iter().map(|e| e.e1).collect(),
        exponent,
    })
}

pub fn bs_trace(d: f64, gamma: f64, e: f64) -> tree_spectra::Result<f64> {
    Ok(trace_qe(&BSKernelSpec::new(e, d, power(gamma)?)?)?.value)
}

fn js(e: tree_spectra::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = groundState)]
pub fn ground_state(d: f64, gamma: f64, alpha: f64) -> Result<GroundState, JsError> {
    solve_ground_state(d, gamma, alpha).map_err(js)
}

#[wasm_bindgen]
pub fn sweep(d: f64, gamma: f64, alpha_min: f64, alpha_max: f64, count: usize) -> Result<Sweep, JsError> {
    run_sweep(d, gamma, alpha_min, alpha_max, count).map_err(js)
}

#[wasm_bindgen]
pub fn trace(d: f64, gamma: f64, e: f64) -> Result<f64, JsError> {
    bs_trace(d, gamma, e).map_err(js)
}
