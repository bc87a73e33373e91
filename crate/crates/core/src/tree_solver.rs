//! Eigensolves on explicit truncated trees and on the symmetry-reduced
//! half-line form with weight `g(t)`.

use crate::error::{invalid, Error, Result};
use crate::fem::{cell_blocks, Weight};
use crate::halfline::{build_mesh, finish, raw_solve, truncation_rule, HalfLineProblem, SolverSettings, SpectralResult};
use crate::linalg::TreePencil;
use crate::mesh::Mesh;
use crate::potential::PotentialSpec;
use crate::tree::{build_geometric_tree, TreeSpec};

pub const DEFAULT_DOF_CAP: usize = 2_000_000;

/// Continuous piecewise-linear space on a truncated tree. Every edge of a
/// generation carries the radial mesh restricted to its interval, so degrees
/// of freedom are indexed by (radial node, copy).
#[derive(Debug, Clone)]
pub struct TreeMesh {
    radial: Mesh,
    b: usize,
    copies: Vec<usize>,
    offsets: Vec<usize>,
    cell_generation: Vec<u32>,
}

impl TreeMesh {
    /// `radial` must contain every generation radius below the truncation.
    pub fn new(tree: &TreeSpec, radial: Mesh, dof_cap: usize) -> Result<Self> {
        let nodes = radial.nodes();
        for &t in &tree.generation_radii {
            if t < radial.end() && !nodes.contains(&t) {
                return Err(invalid(format!("radial mesh misses generation radius {t}")));
            }
        }
        let b = tree.b as usize;
        let n = nodes.len();
        let mut copies = Vec::with_capacity(n);
        let mut cell_generation = Vec::with_capacity(n - 1);
        for (j, &x) in nodes.iter().enumerate() {
            let k = tree.generation_at(x) as u32;
            // a vertex at t_k is the far end of b^{k-1} edges
            let at_vertex = k > 0 && tree.generation_radii[k as usize - 1] == x;
            let k_edge = if at_vertex { k - 1 } else { k };
            copies.push(b.checked_pow(k_edge).ok_or_else(|| Error::Resource("tree too deep".into()))?);
            if j + 1 < n {
                cell_generation.push(k);
            }
        }
        let free: usize = copies[..n - 1].iter().sum();
        if free > dof_cap {
            return Err(Error::Resource(format!("tree needs {free} degrees of freedom, cap is {dof_cap}")));
        }
        let mut offsets = Vec::with_capacity(n);
        let mut acc = 0;
        for &c in &copies {
            offsets.push(acc);
            acc += c;
        }
        Ok(Self {
            radial,
            b,
            copies,
            offsets,
            cell_generation,
        })
    }

    /// Degrees of freedom, excluding the Dirichlet leaf ends.
    pub fn dofs(&self) -> usize {
        self.offsets[self.offsets.len() - 1]
    }

    pub fn radial(&self) -> &Mesh {
        &self.radial
    }

    /// Number of points of the tree at the radius of radial node `j`.
    pub fn copies(&self, j: usize) -> usize {
        self.copies[j]
    }

    pub fn index(&self, j: usize, copy: usize) -> usize {
        self.offsets[j] + copy
    }

    fn pencil(&self, alpha: f64, potential: &PotentialSpec) -> Result<TreePencil> {
        let n = self.copies.len();
        let free = self.dofs();
        let mut parent = vec![None; free];
        for j in 1..n - 1 {
            let ratio = self.copies[j] / self.copies[j - 1];
            for c in 0..self.copies[j] {
                parent[self.index(j, c)] = Some(self.index(j - 1, c / ratio));
            }
        }
        let mut pencil = TreePencil::new(parent)?;
        let nodes = self.radial.nodes();
        let density = |x: f64| -alpha * potential.eval(x);
        for j in 0..n - 1 {
            let (k, m) = cell_blocks(nodes[j], nodes[j + 1], Weight::Constant(1.0), &density);
            let edges = self.b.pow(self.cell_generation[j]);
            for c in 0..edges {
                if j + 1 < n - 1 {
                    pencil.add_edge(self.index(j + 1, c), k, m);
                } else {
                    let left = self.index(j, c * self.copies[j] / edges);
                    pencil.add_diagonal(left, k[0][0], m[0][0]);
                }
            }
        }
        Ok(pencil)
    }

    /// Per radial node: value on the first branch and the largest deviation
    /// across copies at that radius.
    pub fn radial_trace(&self, values: &[f64]) -> (Vec<f64>, f64) {
        let mut trace = Vec::with_capacity(self.copies.len());
        let mut spread = 0.0f64;
        for j in 0..self.copies.len() {
            if j + 1 == self.copies.len() {
                trace.push(0.0);
                break;
            }
            let first = values[self.index(j, 0)];
            for c in 1..self.copies[j] {
                spread = spread.max((values[self.index(j, c)] - first).abs());
            }
            trace.push(first);
        }
        (trace, spread)
    }
}

/// Truncated tree together with the coupling, potential and radial mesh.
#[derive(Debug, Clone)]
pub struct TreeProblem {
    pub tree: TreeSpec,
    pub alpha: f64,
    pub potential: PotentialSpec,
    pub mesh: Mesh,
    pub settings: SolverSettings,
    pub dof_cap: usize,
}

impl TreeProblem {
    pub fn new(tree: TreeSpec, alpha: f64, potential: PotentialSpec) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(invalid(format!("coupling must be non-negative, got {alpha}")));
        }
        potential.validate()?;
        let settings = SolverSettings::default();
        let (_, decay) = truncation_rule(tree.d, alpha, &potential, settings.truncation_cap)?;
        let decay = decay.min(tree.truncation_height / 4.0);
        let mesh = build_mesh(tree.truncation_height, decay, &settings, &tree.generation_radii)?;
        Ok(Self {
            tree,
            alpha,
            potential,
            mesh,
            settings,
            dof_cap: DEFAULT_DOF_CAP,
        })
    }

    /// Weighted half-line problem on the same mesh with the potential scaled
    /// by `scale`.
    pub fn halfline(&self, scale: f64) -> Result<HalfLineProblem> {
        let mut p = HalfLineProblem::with_mesh(self.tree.d, self.alpha, scale, self.potential.clone(), self.mesh.clone())?;
        p.settings = self.settings;
        Ok(p)
    }

    fn meshes(&self) -> (Option<Mesh>, Mesh) {
        if self.settings.extrapolate {
            (Some(self.mesh.clone()), self.mesh.bisected())
        } else {
            (None, self.mesh.clone())
        }
    }
}

/// Geometric tree of dimension `d` truncated where the ground state at
/// coupling `alpha` has decayed, following the half-line truncation rule.
pub fn geometric_tree_for_coupling(d: f64, b: u32, alpha: f64, potential: &PotentialSpec) -> Result<TreeSpec> {
    let (t, _) = truncation_rule(d, alpha, potential, SolverSettings::default().truncation_cap)?;
    build_geometric_tree(d, b, t)
}

/// Ground state of `sum_e int_e (|f'|^2 - alpha V(|x|) |f|^2)` over continuous
/// piecewise-linear functions on the truncated tree, Dirichlet at the leaves.
/// The returned eigenfunction is the radial trace along the first branch.
pub fn tree_ground_state(problem: &TreeProblem) -> Result<SpectralResult> {
    tree_ground_state_full(problem).map(|(r, _, _)| r)
}

/// As [`tree_ground_state`], also returning the full nodal vector and the
/// largest deviation between copies at equal radius.
pub fn tree_ground_state_full(problem: &TreeProblem) -> Result<(SpectralResult, Vec<f64>, f64)> {
    let (coarse, fine) = problem.meshes();
    let tol = problem.settings.eigen_tol;
    let coarse_e = match coarse {
        Some(m) => {
            let tm = TreeMesh::new(&problem.tree, m, problem.dof_cap)?;
            Some(raw_solve(&tm.pencil(problem.alpha, &problem.potential)?, tol)?.0)
        }
        None => None,
    };
    let tm = TreeMesh::new(&problem.tree, fine, problem.dof_cap)?;
    let (value, full, residual, bound) = raw_solve(&tm.pencil(problem.alpha, &problem.potential)?, tol)?;
    let (mut trace, spread) = tm.radial_trace(&full);
    trace.pop();
    let tree = &problem.tree;
    let g = |x: f64| tree.branching_function(x).map(|v| v as f64).unwrap_or(1.0);
    let result = finish(coarse_e, (value, trace, residual, bound), tm.radial().nodes().to_vec(), &g, problem.settings.residual_tol);
    Ok((result, full, spread))
}

fn reduced_pencil(problem: &TreeProblem, mesh: &Mesh) -> TreePencil {
    let nodes = mesh.nodes();
    let free = nodes.len() - 1;
    let mut pencil = TreePencil::path(free);
    let alpha = problem.alpha;
    let pot = &problem.potential;
    let density = |x: f64| -alpha * pot.eval(x);
    for i in 0..free {
        let g = (problem.tree.b as f64).powi(problem.tree.generation_at(nodes[i]) as i32);
        let (k, m) = cell_blocks(nodes[i], nodes[i + 1], Weight::Constant(g), &density);
        if i + 1 < free {
            pencil.add_edge(i + 1, k, m);
        } else {
            pencil.add_diagonal(i, k[0][0], m[0][0]);
        }
    }
    pencil
}

/// Ground state of `a[u] = int (|u'|^2 - alpha V |u|^2) g(t) dt` with the
/// piecewise-constant branching function as weight.
pub fn reduced_ground_state(problem: &TreeProblem) -> Result<SpectralResult> {
    let (coarse, fine) = problem.meshes();
    let tol = problem.settings.eigen_tol;
    let coarse_e = match coarse {
        Some(m) => Some(raw_solve(&reduced_pencil(problem, &m), tol)?.0),
        None => None,
    };
    let raw = raw_solve(&reduced_pencil(problem, &fine), tol)?;
    let tree = &problem.tree;
    let g = |x: f64| tree.branching_function(x).map(|v| v as f64).unwrap_or(1.0);
    Ok(finish(coarse_e, raw, fine.nodes().to_vec(), &g, problem.settings.residual_tol))
}
