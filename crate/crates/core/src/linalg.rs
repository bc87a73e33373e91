//! Symmetric pencils `(K, M)` whose sparsity graph is a tree.
//!
//! Ordering every node after its parent lets an `LDL^T` factorization
//! eliminate leaves first without fill, so inertia counts and solves cost
//! `O(n)`. A path graph is the half-line case.

use crate::error::{invalid, Error, Result};

const ROOT: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct TreePencil {
    parent: Vec<usize>,
    k_diag: Vec<f64>,
    k_off: Vec<f64>,
    m_diag: Vec<f64>,
    m_off: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `|(K - value M) v| / (|K v| + |value| |M v|)`.
    pub residual: f64,
}

impl TreePencil {
    /// `parent[i] < i` for every non-root node; roots are `None`.
    pub fn new(parent: Vec<Option<usize>>) -> Result<Self> {
        let parent: Vec<usize> = parent
            .into_iter()
            .enumerate()
            .map(|(i, p)| match p {
                Some(p) if p < i => Ok(p),
                Some(p) => Err(invalid(format!("node {i} has parent {p}; parents must precede children"))),
                None => Ok(ROOT),
            })
            .collect::<Result<_>>()?;
        let n = parent.len();
        Ok(Self {
            parent,
            k_diag: vec![0.0; n],
            k_off: vec![0.0; n],
            m_diag: vec![0.0; n],
            m_off: vec![0.0; n],
        })
    }

    /// Path graph `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        Self::new((0..n).map(|i| i.checked_sub(1)).collect()).expect("path ordering is valid")
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        (self.parent[i] != ROOT).then_some(self.parent[i])
    }

    pub fn add_diagonal(&mut self, i: usize, k: f64, m: f64) {
        self.k_diag[i] += k;
        self.m_diag[i] += m;
    }

    /// Adds a 2x2 element block on the edge `(parent(child), child)`; the
    /// blocks are ordered `[parent, child]`.
    pub fn add_edge(&mut self, child: usize, k: [[f64; 2]; 2], m: [[f64; 2]; 2]) {
        let p = self.parent[child];
        debug_assert!(p != ROOT);
        self.k_diag[p] += k[0][0];
        self.k_diag[child] += k[1][1];
        self.k_off[child] += k[0][1];
        self.m_diag[p] += m[0][0];
        self.m_diag[child] += m[1][1];
        self.m_off[child] += m[0][1];
    }

    fn pivots(&self, sigma: f64) -> (Vec<f64>, usize) {
        let n = self.len();
        let mut d: Vec<f64> = (0..n).map(|i| self.k_diag[i] - sigma * self.m_diag[i]).collect();
        let mut negatives = 0;
        for i in (0..n).rev() {
            if d[i] == 0.0 {
                d[i] = f64::EPSILON * (self.k_diag[i].abs() + (sigma * self.m_diag[i]).abs()).max(f64::MIN_POSITIVE);
            }
            if d[i] < 0.0 {
                negatives += 1;
            }
            let p = self.parent[i];
            if p != ROOT {
                let off = self.k_off[i] - sigma * self.m_off[i];
                d[p] -= off * off / d[i];
            }
        }
        (d, negatives)
    }

    /// Number of eigenvalues of `K v = lambda M v` below `sigma`
    /// (Sylvester's law of inertia; `M` must be positive definite).
    pub fn count_below(&self, sigma: f64) -> usize {
        self.pivots(sigma).1
    }

    /// Solves `(K - sigma M) x = rhs`.
    pub fn solve_shifted(&self, sigma: f64, rhs: &[f64]) -> Vec<f64> {
        let (d, _) = self.pivots(sigma);
        let n = self.len();
        let mut y = rhs.to_vec();
        for i in (0..n).rev() {
            let p = self.parent[i];
            if p != ROOT {
                let l = (self.k_off[i] - sigma * self.m_off[i]) / d[i];
                y[p] -= l * y[i];
            }
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[i] = y[i] / d[i];
            let p = self.parent[i];
            if p != ROOT {
                let l = (self.k_off[i] - sigma * self.m_off[i]) / d[i];
                x[i] -= l * x[p];
            }
        }
        x
    }

    fn apply(&self, diag: &[f64], off: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = diag.iter().zip(x).map(|(a, b)| a * b).collect();
        for i in 0..self.len() {
            let p = self.parent[i];
            if p != ROOT {
                y[i] += off[i] * x[p];
                y[p] += off[i] * x[i];
            }
        }
        y
    }

    pub fn apply_k(&self, x: &[f64]) -> Vec<f64> {
        self.apply(&self.k_diag, &self.k_off, x)
    }

    pub fn apply_m(&self, x: &[f64]) -> Vec<f64> {
        self.apply(&self.m_diag, &self.m_off, x)
    }

    /// Smallest eigenpair by inertia bisection followed by inverse iteration
    /// with a shift just below the bracketed eigenvalue.
    pub fn smallest_eigenpair(&self, rel_tol: f64) -> Result<Eigenpair> {
        if self.is_empty() {
            return Err(invalid("empty pencil"));
        }
        let (mut lo, mut hi);
        if self.count_below(0.0) > 0 {
            hi = 0.0;
            lo = -1.0;
            while self.count_below(lo) > 0 {
                lo *= 2.0;
                if !lo.is_finite() {
                    return Err(Error::NotConverged("no lower bound for the spectrum".into()));
                }
            }
        } else {
            lo = 0.0;
            hi = 1e-12;
            while self.count_below(hi) == 0 {
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(Error::NotConverged("no eigenvalue found".into()));
                }
            }
        }
        for _ in 0..400 {
            if hi - lo <= rel_tol * lo.abs().max(hi.abs()) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > 0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let value = 0.5 * (lo + hi);
        let gap = (4.0 * (hi - lo)).max(1e-10 * value.abs()).max(1e-300);
        let shift = lo - gap;
        let mut v = vec![1.0; self.len()];
        for _ in 0..4 {
            let mv = self.apply_m(&v);
            v = self.solve_shifted(shift, &mv);
            let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(Error::NotConverged("inverse iteration broke down".into()));
            }
            v.iter_mut().for_each(|x| *x /= scale);
        }
        let mv = self.apply_m(&v);
        let norm = v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let kv = self.apply_k(&v);
        let mv = self.apply_m(&v);
        let r: f64 = kv.iter().zip(&mv).map(|(k, m)| (k - value * m).powi(2)).sum::<f64>().sqrt();
        let scale = kv.iter().map(|x| x * x).sum::<f64>().sqrt() + value.abs() * mv.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(Eigenpair {
            value,
            vector: v,
            residual: r / scale,
        })
    }
}
