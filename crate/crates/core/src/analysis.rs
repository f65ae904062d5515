//! Decision-level quantities derived from density evolution: η-thresholds,
//! useful regions, sensitivities, tolerable miswiring rates and yield gains.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::de::{self, Convergence, DEParams, DecoderSpec};
use crate::ensemble::DegreeDistribution;
use crate::error::{check_channel, check_unit, Error, Result};

/// Coarse grid step used to guard searches against non-monotone pass/fail
/// indicators before bisecting.
pub const SCAN_STEP: f64 = 1e-3;

pub const DEFAULT_ETA: f64 = 1e-5;
pub const DEFAULT_RESOLUTION: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdQuery {
    pub spec: DecoderSpec,
    pub dd: DegreeDistribution,
    /// Target residual error probability.
    pub eta: f64,
    /// Bisection stops once the bracket is narrower than this.
    pub eps_resolution: f64,
    pub convergence: Convergence,
}

impl ThresholdQuery {
    pub fn new(spec: DecoderSpec, dd: DegreeDistribution, eta: f64) -> Self {
        Self {
            spec,
            dd,
            eta,
            eps_resolution: DEFAULT_RESOLUTION,
            convergence: Convergence::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 0.5) {
            return Err(Error::OutOfRange {
                name: "eta",
                value: self.eta,
                expected: "(0, 0.5)",
            });
        }
        check_resolution(self.eps_resolution)
    }
}

fn check_resolution(resolution: f64) -> Result<()> {
    if resolution > 0.0 && resolution < SCAN_STEP {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "resolution",
            value: resolution,
            expected: "(0, 1e-3)",
        })
    }
}

/// Largest point of `grid ∪ [grid, upper)` where `passes` holds.
///
/// Every grid point is probed, so a pass/fail indicator that is not monotone
/// still brackets its last transition; bisection then narrows the cell after
/// the last passing grid point to `resolution`. Returns the passing end of
/// the final bracket, or `None` when no grid point passes.
fn sup_passing(
    grid: &[f64],
    upper: f64,
    resolution: f64,
    mut passes: impl FnMut(f64) -> Result<bool>,
) -> Result<Option<f64>> {
    let mut last = None;
    for (i, &g) in grid.iter().enumerate() {
        if passes(g)? {
            last = Some(i);
        }
    }
    let Some(i) = last else { return Ok(None) };
    let mut lo = grid[i];
    let mut hi = grid.get(i + 1).copied().unwrap_or(upper);
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// `k · SCAN_STEP` for `k = first..=last`.
fn scan_grid(first: usize, last: usize) -> Vec<f64> {
    (first..=last).map(|k| k as f64 * SCAN_STEP).collect()
}

fn probe(epsilon: f64, spec: &DecoderSpec, dd: &DegreeDistribution, convergence: Convergence) -> Result<de::FixedPoint> {
    de::fixed_point(&DEParams {
        epsilon,
        spec: spec.clone(),
        dd: dd.clone(),
        convergence,
    })
}

/// `sup{ε ∈ [0, 0.5) : x_∞(ε, α) exists and x_∞ < η}`.
///
/// A probe that fails to converge within `max_iters` counts as failing.
pub fn eta_threshold(q: &ThresholdQuery, alpha: f64) -> Result<f64> {
    q.validate()?;
    let spec = q.spec.with_alpha(alpha);
    spec.validate(&q.dd)?;
    let grid = scan_grid(0, 499);
    let found = sup_passing(&grid, 0.5, q.eps_resolution, |eps| {
        let fp = probe(eps, &spec, &q.dd, q.convergence)?;
        Ok(fp.converged && fp.x_inf < q.eta)
    })?;
    Ok(found.unwrap_or(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub alpha: f64,
    /// `None` when the point failed; `error` then says why.
    pub value: Option<f64>,
    pub error: Option<String>,
}

impl CurvePoint {
    fn from_result(alpha: f64, r: Result<f64>) -> Self {
        match r {
            Ok(v) => Self {
                alpha,
                value: Some(v),
                error: None,
            },
            Err(e) => Self {
                alpha,
                value: None,
                error: Some(e.to_string()),
            },
        }
    }
}

/// η-thresholds over a grid of miss probabilities, evaluated in parallel.
/// Failed points are kept with their error.
pub fn threshold_curve(q: &ThresholdQuery, alpha_grid: &[f64]) -> Vec<CurvePoint> {
    alpha_grid
        .par_iter()
        .map(|&a| CurvePoint::from_result(a, eta_threshold(q, a)))
        .collect()
}

/// Search settings shared by the useful-region and `α_max` searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Search {
    pub resolution: f64,
    pub convergence: Convergence,
}

impl Default for Search {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            convergence: Convergence::default(),
        }
    }
}

/// `sup{ε ∈ (0, 0.5) : x_∞(ε, α) < ε}` at one miss probability.
pub fn useful_boundary(spec: &DecoderSpec, dd: &DegreeDistribution, alpha: f64, search: Search) -> Result<f64> {
    check_resolution(search.resolution)?;
    let spec = spec.with_alpha(alpha);
    spec.validate(dd)?;
    let grid = scan_grid(1, 499);
    let found = sup_passing(&grid, 0.5, search.resolution, |eps| {
        let fp = probe(eps, &spec, dd, search.convergence)?;
        Ok(fp.converged && fp.x_inf < eps)
    })?;
    Ok(found.unwrap_or(0.0))
}

/// Boundary of the region where decoding beats reading the channel, per α.
pub fn useful_region_boundary(
    spec: &DecoderSpec,
    dd: &DegreeDistribution,
    alpha_grid: &[f64],
    search: Search,
) -> Vec<CurvePoint> {
    alpha_grid
        .par_iter()
        .map(|&a| CurvePoint::from_result(a, useful_boundary(spec, dd, a, search)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sensitivity {
    pub x_inf: f64,
    /// `∂x_∞/∂ε` by implicit differentiation of the fixed-point equation.
    pub d_eps: f64,
    /// `∂x_∞/∂α` by implicit differentiation.
    pub d_alpha: f64,
    /// `d_eps / d_alpha`; `None` when `d_alpha` is zero.
    pub ratio: Option<f64>,
    /// `∂f/∂x` at the fixed point.
    pub slope: f64,
}

fn inner_step(v: f64) -> f64 {
    1e-7 * v.abs().max(1e-6)
}

/// Partials of the fixed point `x_∞(ε, α)`.
///
/// Differentiating `x = f(x, ε, α)` gives `∂x/∂ε = f_ε / (1 - f_x)` and
/// `∂x/∂α = f_α / (1 - f_x)`. The map is polynomial in all three arguments,
/// so its partials are taken by central differences even at domain edges.
pub fn sensitivity(
    spec: &DecoderSpec,
    dd: &DegreeDistribution,
    epsilon: f64,
    alpha: f64,
    convergence: Convergence,
) -> Result<Sensitivity> {
    check_channel("epsilon", epsilon)?;
    check_unit("alpha", alpha)?;
    let spec = spec.with_alpha(alpha);
    let fp = probe(epsilon, &spec, dd, convergence)?;
    if !fp.converged {
        return Err(Error::NotConverged {
            max_iters: convergence.max_iters,
        });
    }
    let x = fp.x_inf;
    let f = |x: f64, e: f64, a: f64| de::raw_step(x, e, a, &spec, dd);
    let central = |g: &dyn Fn(f64) -> f64, v: f64| {
        let h = inner_step(v);
        (g(v + h) - g(v - h)) / (2.0 * h)
    };
    let slope = central(&|t| f(t, epsilon, alpha), x);
    let f_eps = central(&|t| f(x, t, alpha), epsilon);
    let f_alpha = central(&|t| f(x, epsilon, t), alpha);
    let margin = (1.0 - slope).abs();
    if margin < 1e-6 {
        return Err(Error::UnstableFixedPoint { margin });
    }
    let d_eps = f_eps / (1.0 - slope);
    let d_alpha = f_alpha / (1.0 - slope);
    Ok(Sensitivity {
        x_inf: x,
        d_eps,
        d_alpha,
        ratio: (d_alpha != 0.0).then(|| d_eps / d_alpha),
        slope,
    })
}

/// Partials of `x_∞` by finite differences of the fixed point itself, with a
/// tight stopping rule. One-sided at the edges of the parameter domain.
pub fn direct_sensitivity(
    spec: &DecoderSpec,
    dd: &DegreeDistribution,
    epsilon: f64,
    alpha: f64,
    step: f64,
) -> Result<(f64, f64)> {
    let tight = Convergence {
        max_iters: 1_000_000,
        fixpoint_tol: 1e-15,
    };
    let x_at = |e: f64, a: f64| -> Result<f64> {
        let fp = probe(e, &spec.with_alpha(a), dd, tight)?;
        if fp.converged {
            Ok(fp.x_inf)
        } else {
            Err(Error::NotConverged {
                max_iters: tight.max_iters,
            })
        }
    };
    let diff = |lo_edge: f64, hi_edge: f64, v: f64, eval: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        let (a, b) = (
            if v - step >= lo_edge { v - step } else { v },
            if v + step < hi_edge { v + step } else { v },
        );
        Ok((eval(b)? - eval(a)?) / (b - a))
    };
    let d_eps = diff(0.0, 0.5, epsilon, &|e| x_at(e, alpha))?;
    let d_alpha = diff(0.0, 1.0 + f64::EPSILON, alpha, &|a| x_at(epsilon, a))?;
    Ok((d_eps, d_alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySensitivity {
    pub alpha: f64,
    pub eps_boundary: f64,
    pub sensitivity: Sensitivity,
}

/// Partials of `x_∞` evaluated on the useful-region boundary, taken at the
/// passing end of the boundary bracket.
pub fn boundary_sensitivity(
    spec: &DecoderSpec,
    dd: &DegreeDistribution,
    alpha: f64,
    search: Search,
) -> Result<BoundarySensitivity> {
    let eps_boundary = useful_boundary(spec, dd, alpha, search)?;
    let sensitivity = sensitivity(spec, dd, eps_boundary, alpha, search.convergence)?;
    Ok(BoundarySensitivity {
        alpha,
        eps_boundary,
        sensitivity,
    })
}

pub fn boundary_sensitivity_curve(
    spec: &DecoderSpec,
    dd: &DegreeDistribution,
    alpha_grid: &[f64],
    search: Search,
) -> Vec<std::result::Result<BoundarySensitivity, (f64, String)>> {
    alpha_grid
        .par_iter()
        .map(|&a| boundary_sensitivity(spec, dd, a, search).map_err(|e| (a, e.to_string())))
        .collect()
}

/// First α at which the ratio `d_eps / d_alpha` crosses one, by linear
/// interpolation between consecutive curve points.
pub fn equal_ratio_crossover(curve: &[BoundarySensitivity]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter_map(|p| p.sensitivity.ratio.map(|r| (p.alpha, r)))
        .collect();
    pts.windows(2).find_map(|w| {
        let ((a0, r0), (a1, r1)) = (w[0], w[1]);
        if (r0 - 1.0) * (r1 - 1.0) <= 0.0 && r0 != r1 {
            Some(a0 + (1.0 - r0) * (a1 - a0) / (r1 - r0))
        } else {
            None
        }
    })
}

/// Largest α in `[0, 1]` with `x_∞(ε, α) < η`; zero when even α = 0 fails.
pub fn alpha_max(spec: &DecoderSpec, dd: &DegreeDistribution, epsilon: f64, eta: f64, search: Search) -> Result<f64> {
    check_channel("epsilon", epsilon)?;
    check_resolution(search.resolution)?;
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::OutOfRange {
            name: "eta",
            value: eta,
            expected: "(0, 0.5)",
        });
    }
    spec.validate(dd)?;
    let grid = scan_grid(0, 1000);
    let found = sup_passing(&grid, 1.0, search.resolution, |a| {
        let fp = probe(epsilon, &spec.with_alpha(a), dd, search.convergence)?;
        Ok(fp.converged && fp.x_inf < eta)
    })?;
    Ok(found.unwrap_or(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldParams {
    pub alpha_max: f64,
    /// Average number of defects per unit chip area.
    pub defect_density: f64,
    pub chip_area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YieldGain {
    /// `Y₀ = 1 / (1 + A·D₀)` under the exponential defect model.
    pub base_yield: f64,
    /// `ΔY = α_max·D₀A / (1 + A·D₀)²`.
    pub delta_y: f64,
    /// `ΔY / Y₀ = α_max·D₀A / (1 + A·D₀)`.
    pub relative_delta: f64,
}

pub fn yield_gain(p: &YieldParams) -> Result<YieldGain> {
    check_unit("alpha_max", p.alpha_max)?;
    if !(p.defect_density >= 0.0 && p.defect_density.is_finite()) {
        return Err(Error::OutOfRange {
            name: "defect_density",
            value: p.defect_density,
            expected: "[0, inf)",
        });
    }
    if !(p.chip_area > 0.0 && p.chip_area.is_finite()) {
        return Err(Error::OutOfRange {
            name: "chip_area",
            value: p.chip_area,
            expected: "(0, inf)",
        });
    }
    let load = p.defect_density * p.chip_area;
    Ok(YieldGain {
        base_yield: 1.0 / (1.0 + load),
        delta_y: p.alpha_max * load / (1.0 + load).powi(2),
        relative_delta: p.alpha_max * load / (1.0 + load),
    })
}

#[cfg(test)]
mod tests;
