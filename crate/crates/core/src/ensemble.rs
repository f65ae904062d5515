//! Edge-perspective degree distributions of LDPC code ensembles.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

pub const MAX_DEGREE: u32 = 64;

const SUM_TOL: f64 = 1e-12;
const RENORMALIZE_TOL: f64 = 1e-9;

/// A sparse polynomial `Σ_d c_d x^{d-1}` with degrees `d >= 2`, sorted by degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgePolynomial(Vec<(u32, f64)>);

impl EdgePolynomial {
    fn new(name: &str, coeffs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut terms: Vec<(u32, f64)> = coeffs.into_iter().filter(|&(_, c)| c != 0.0).collect();
        terms.sort_by_key(|&(d, _)| d);
        if terms.is_empty() {
            return Err(Error::InvalidDistribution(format!("{name} has no nonzero coefficient")));
        }
        for w in terms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidDistribution(format!(
                    "{name} lists degree {} twice",
                    w[0].0
                )));
            }
        }
        for &(d, c) in &terms {
            if !(2..=MAX_DEGREE).contains(&d) {
                return Err(Error::InvalidDistribution(format!(
                    "{name} degree {d} outside 2..={MAX_DEGREE}"
                )));
            }
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "{name} coefficient {c} for degree {d} is negative or not finite"
                )));
            }
        }
        let sum: f64 = terms.iter().map(|&(_, c)| c).sum();
        let dev = (sum - 1.0).abs();
        if dev > RENORMALIZE_TOL {
            return Err(Error::InvalidDistribution(format!(
                "{name} coefficients sum to {sum}, not 1"
            )));
        }
        if dev > SUM_TOL {
            for t in &mut terms {
                t.1 /= sum;
            }
        }
        Ok(Self(terms))
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.0
    }

    /// Evaluates without range checks; callers guarantee `x` is finite.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        self.0.iter().map(|&(d, c)| c * x.powi(d as i32 - 1)).sum()
    }

    /// Derivative of the polynomial at `x`.
    pub fn derivative(&self, x: f64) -> f64 {
        self.0
            .iter()
            .map(|&(d, c)| c * (d as f64 - 1.0) * x.powi(d as i32 - 2))
            .sum()
    }

    fn inverse_degree_mean(&self) -> f64 {
        self.0.iter().map(|&(d, c)| c / d as f64).sum()
    }

    fn point_mass(&self) -> Option<u32> {
        match self.0.as_slice() {
            [(d, _)] => Some(*d),
            _ => None,
        }
    }
}

/// Edge-perspective degree distribution pair `(λ, ρ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    lambda: EdgePolynomial,
    rho: EdgePolynomial,
}

impl DegreeDistribution {
    /// Builds a distribution from degree → edge-fraction pairs.
    ///
    /// Sums within 1e-9 of one are renormalized; larger deviations are rejected.
    pub fn new(
        lambda: impl IntoIterator<Item = (u32, f64)>,
        rho: impl IntoIterator<Item = (u32, f64)>,
    ) -> Result<Self> {
        Ok(Self {
            lambda: EdgePolynomial::new("lambda", lambda)?,
            rho: EdgePolynomial::new("rho", rho)?,
        })
    }

    pub fn from_regular(dv: u32, dc: u32) -> Result<Self> {
        if dv < 2 || dc < 2 {
            return Err(Error::InvalidDistribution(format!(
                "regular degrees must be at least 2, got ({dv}, {dc})"
            )));
        }
        Self::new([(dv, 1.0)], [(dc, 1.0)])
    }

    pub fn lambda(&self) -> &EdgePolynomial {
        &self.lambda
    }

    pub fn rho(&self) -> &EdgePolynomial {
        &self.rho
    }

    pub fn eval_lambda(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        Ok(self.lambda.eval_unchecked(x).clamp(0.0, 1.0))
    }

    pub fn eval_rho(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        Ok(self.rho.eval_unchecked(x).clamp(0.0, 1.0))
    }

    /// `1 - (Σ ρ_d / d) / (Σ λ_d / d)`.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.rho.inverse_degree_mean() / self.lambda.inverse_degree_mean()
    }

    /// `(dv, dc)` when both polynomials are point masses.
    pub fn regular_degrees(&self) -> Option<(u32, u32)> {
        Some((self.lambda.point_mass()?, self.rho.point_mass()?))
    }

    pub fn max_variable_degree(&self) -> u32 {
        self.lambda.0.last().map(|&(d, _)| d).unwrap_or(2)
    }
}
