//! Radial potentials `V(x)` with power-law envelopes `c/(1+x)^gamma`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialForm {
    /// `V(x) = c / (1+x)^gamma` with `c = c_lower = c_upper`.
    ExactPower,
    /// Piecewise-linear interpolation of samples, zero outside the sampled range.
    Table { nodes: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub gamma: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub form: PotentialForm,
}

impl PotentialSpec {
    pub fn power(gamma: f64, c: f64) -> Result<Self> {
        let spec = Self {
            gamma,
            c_lower: c,
            c_upper: c,
            form: PotentialForm::ExactPower,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn table(gamma: f64, c_lower: f64, c_upper: f64, nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let spec = Self {
            gamma,
            c_lower,
            c_upper,
            form: PotentialForm::Table { nodes, values },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0 && self.gamma <= 2.0) {
            return Err(invalid(format!("decay exponent gamma must lie in (1, 2], got {}", self.gamma)));
        }
        if !(self.c_lower > 0.0) || !(self.c_upper >= self.c_lower) || !self.c_upper.is_finite() {
            return Err(invalid(format!(
                "envelope constants need 0 < c_lower <= c_upper, got {} and {}",
                self.c_lower, self.c_upper
            )));
        }
        match &self.form {
            PotentialForm::ExactPower => {
                if self.c_lower != self.c_upper {
                    return Err(invalid("exact-power potential needs c_lower == c_upper"));
                }
            }
            PotentialForm::Table { nodes, values } => {
                if nodes.len() < 2 || nodes.len() != values.len() {
                    return Err(invalid("potential table needs at least two (node, value) pairs"));
                }
                if nodes[0] < 0.0 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("potential table nodes must be non-negative and increasing"));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(invalid("potential table values must be finite and non-negative"));
                }
            }
        }
        Ok(())
    }

    /// Checks the parameter range where the ground-state asymptotics apply:
    /// `1 < gamma <= d <= 2` and `gamma != 2`.
    pub fn validate_for_dimension(&self, d: f64) -> Result<()> {
        self.validate()?;
        if self.gamma == 2.0 {
            return Err(invalid("gamma = 2 is excluded (γ ≠ 2)"));
        }
        if self.gamma > d {
            return Err(invalid(format!("need gamma <= d, got gamma = {} and d = {d}", self.gamma)));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.form {
            PotentialForm::ExactPower => self.c_upper * (1.0 + x).powf(-self.gamma),
            PotentialForm::Table { nodes, values } => {
                let n = nodes.len();
                if x < nodes[0] || x > nodes[n - 1] {
                    return 0.0;
                }
                let i = nodes.partition_point(|&t| t <= x).clamp(1, n - 1);
                let (x0, x1) = (nodes[i - 1], nodes[i]);
                let s = (x - x0) / (x1 - x0);
                values[i - 1] + s * (values[i] - values[i - 1])
            }
        }
    }

    /// `true` for `c/(1+x)^gamma`, where tail integrals have closed forms.
    pub fn is_exact_power(&self) -> bool {
        matches!(self.form, PotentialForm::ExactPower)
    }

    /// Largest `x` where the potential can be non-zero, if finite.
    pub fn support_end(&self) -> Option<f64> {
        match &self.form {
            PotentialForm::ExactPower => None,
            PotentialForm::Table { nodes, .. } => nodes.last().copied(),
        }
    }
}
