//! One-step density-evolution maps for decoders with missing connections
//! and their iteration to a fixed point.
//!
//! The state `x` is the probability that a variable-to-check message is in
//! error (an erasure for the peeling decoder, a wrong sign for Gallager A/B),
//! under all-one transmission on a cycle-free computation tree. A missing
//! wire delivers an erasure in both directions, so a single per-edge miss
//! probability `alpha` covers permanent and transient faults alike.

pub mod reference;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::ensemble::DegreeDistribution;
use crate::error::{check_channel, check_unit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    Peeling,
    GallagerA,
    GallagerB,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Peeling => "peeling",
            DecoderKind::GallagerA => "gallager-a",
            DecoderKind::GallagerB => "gallager-b",
        }
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "peeling" => Ok(DecoderKind::Peeling),
            "gallager-a" | "ga" => Ok(DecoderKind::GallagerA),
            "gallager-b" | "gb" => Ok(DecoderKind::GallagerB),
            other => Err(format!("unknown decoder `{other}`")),
        }
    }
}

/// How the Gallager A/B event sums are weighted.
///
/// `Literal` evaluates the closed-form event sums term by term.
/// `EventComplete` evaluates the exact probability of the decoding events on
/// the computation tree, which is what the finite-length decoders in `sim`
/// realize:
///
/// * Gallager A keep-channel: the "exactly one non-erased check message"
///   case carries its multiplicity `v` (`v·p·p0^(v-1)` rather than `p·p0^(v-1)`).
/// * Gallager B: `Pr[#opposing >= b]` summed over every number of connected
///   checks, which restores the `eps·Pr[V < b]` mass the literal sum drops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassConvention {
    Literal,
    EventComplete,
}

impl std::str::FromStr for MassConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "literal" => Ok(MassConvention::Literal),
            "complete" | "event-complete" => Ok(MassConvention::EventComplete),
            other => Err(format!("unknown mass convention `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderSpec {
    pub kind: DecoderKind,
    /// Per-edge missing-connection probability.
    pub alpha: f64,
    /// Gallager A: keep the channel value when the only non-erased incoming
    /// message disagrees with it.
    pub tie_break_keep_channel: bool,
    /// Gallager B flip threshold. `None` uses the majority `⌊(d+1)/2⌋` of the
    /// designed variable degree `d`.
    pub gb_threshold_b: Option<u32>,
    pub gb_mass_convention: MassConvention,
    pub ga_mass_convention: MassConvention,
    /// Evaluate irregular check probabilities with the product form and
    /// swapped ± labels as printed, instead of the exact degree average.
    pub irregular_check_literal: bool,
}

impl DecoderSpec {
    pub fn new(kind: DecoderKind, alpha: f64) -> Self {
        Self {
            kind,
            alpha,
            tie_break_keep_channel: true,
            gb_threshold_b: None,
            gb_mass_convention: MassConvention::Literal,
            ga_mass_convention: MassConvention::Literal,
            irregular_check_literal: false,
        }
    }

    pub fn peeling(alpha: f64) -> Self {
        Self::new(DecoderKind::Peeling, alpha)
    }

    pub fn gallager_a(alpha: f64) -> Self {
        Self::new(DecoderKind::GallagerA, alpha)
    }

    pub fn gallager_b(alpha: f64) -> Self {
        Self::new(DecoderKind::GallagerB, alpha)
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }

    /// Flip threshold used at a variable node of designed degree `dv`.
    pub fn threshold_for_degree(&self, dv: u32) -> u32 {
        self.gb_threshold_b.unwrap_or((dv + 1) / 2)
    }

    pub fn validate(&self, dd: &DegreeDistribution) -> Result<()> {
        check_unit("alpha", self.alpha)?;
        if self.kind == DecoderKind::GallagerB {
            for &(d, _) in dd.lambda().terms() {
                let b = self.threshold_for_degree(d);
                if b < 1 || b > d - 1 {
                    return Err(Error::InvalidConfig(format!(
                        "Gallager B threshold b = {b} must lie in 1..={} for variable degree {d}",
                        d - 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Stopping rule for fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub max_iters: usize,
    pub fixpoint_tol: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            fixpoint_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DEParams {
    pub epsilon: f64,
    pub spec: DecoderSpec,
    pub dd: DegreeDistribution,
    pub convergence: Convergence,
}

impl DEParams {
    pub fn new(epsilon: f64, spec: DecoderSpec, dd: DegreeDistribution) -> Self {
        Self {
            epsilon,
            spec,
            dd,
            convergence: Convergence::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_channel("epsilon", self.epsilon)?;
        self.spec.validate(&self.dd)?;
        if self.convergence.max_iters == 0 || !(self.convergence.fixpoint_tol > 0.0) {
            return Err(Error::InvalidConfig(
                "max_iters and fixpoint_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DETrajectory {
    /// `xs[0] = epsilon`, then one entry per iteration.
    pub xs: Vec<f64>,
    pub converged: bool,
    pub x_inf: f64,
    /// Steps whose raw value left `[0, 1]` and was clamped.
    pub clamp_events: usize,
}

impl DETrajectory {
    pub fn iterations(&self) -> usize {
        self.xs.len() - 1
    }
}

/// Probabilities that a check-to-variable message is an erasure, correct
/// (`plus`) or wrong (`minus`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckMessageProbs {
    pub p0: f64,
    pub p_plus: f64,
    pub p_minus: f64,
}

/// Check-to-variable message law when incoming variable messages are wrong
/// with probability `x` and each wire is missing with probability `alpha`.
///
/// A check answers only when all of its other wires are present; the answer
/// is wrong when an odd number of the other inputs is wrong. Averaging over
/// check degrees gives `p± = (ρ(1-α) ± ρ((1-α)(1-2x))) / 2`.
pub fn check_message_probs(x: f64, alpha: f64, dd: &DegreeDistribution) -> Result<CheckMessageProbs> {
    check_unit("x", x)?;
    check_unit("alpha", alpha)?;
    Ok(check_probs(x, alpha, dd, false))
}

/// The irregular check probabilities in product form with the original
/// ± labels, kept only for side-by-side comparison.
pub fn check_message_probs_literal(
    x: f64,
    alpha: f64,
    dd: &DegreeDistribution,
) -> Result<CheckMessageProbs> {
    check_unit("x", x)?;
    check_unit("alpha", alpha)?;
    Ok(check_probs(x, alpha, dd, true))
}

#[inline]
fn check_probs(x: f64, alpha: f64, dd: &DegreeDistribution, literal: bool) -> CheckMessageProbs {
    let rho = dd.rho();
    let connected = rho.eval_unchecked(1.0 - alpha);
    let (p_plus, p_minus) = if literal {
        let parity = rho.eval_unchecked(1.0 - 2.0 * x);
        (connected * (1.0 - parity) / 2.0, connected * (1.0 + parity) / 2.0)
    } else {
        let parity = rho.eval_unchecked((1.0 - alpha) * (1.0 - 2.0 * x));
        ((connected + parity) / 2.0, (connected - parity) / 2.0)
    };
    CheckMessageProbs {
        p0: 1.0 - connected,
        p_plus,
        p_minus,
    }
}

fn check_step_args(x: f64, epsilon: f64, alpha: f64) -> Result<()> {
    check_unit("x", x)?;
    check_channel("epsilon", epsilon)?;
    check_unit("alpha", alpha)
}

/// Peeling decoder over the BEC:
/// `x' = ε λ(α + (1-α)(1 - ρ((1-x)(1-α))))`.
pub fn peeling_step(x: f64, epsilon: f64, alpha: f64, dd: &DegreeDistribution) -> Result<f64> {
    check_step_args(x, epsilon, alpha)?;
    Ok(peeling_raw(x, epsilon, alpha, dd).clamp(0.0, 1.0))
}

#[inline]
fn peeling_raw(x: f64, epsilon: f64, alpha: f64, dd: &DegreeDistribution) -> f64 {
    let check_erased = 1.0 - dd.rho().eval_unchecked((1.0 - x) * (1.0 - alpha));
    epsilon * dd.lambda().eval_unchecked(alpha + (1.0 - alpha) * check_erased)
}

/// Regular Gallager A step; see [`step`] for the irregular form.
pub fn gallager_a_step(
    x: f64,
    epsilon: f64,
    alpha: f64,
    dv: u32,
    dc: u32,
    tie_break_keep_channel: bool,
    convention: MassConvention,
) -> Result<f64> {
    check_step_args(x, epsilon, alpha)?;
    let dd = DegreeDistribution::from_regular(dv, dc)?;
    let probs = check_probs(x, alpha, &dd, false);
    Ok(gallager_a_degree(dv, epsilon, alpha, probs, tie_break_keep_channel, convention).clamp(0.0, 1.0))
}

/// Regular Gallager B step with flip threshold `b`.
pub fn gallager_b_step(
    x: f64,
    epsilon: f64,
    alpha: f64,
    dv: u32,
    dc: u32,
    b: u32,
    convention: MassConvention,
) -> Result<f64> {
    check_step_args(x, epsilon, alpha)?;
    let dd = DegreeDistribution::from_regular(dv, dc)?;
    if b < 1 || b > dv - 1 {
        return Err(Error::InvalidConfig(format!("b = {b} outside 1..={}", dv - 1)));
    }
    let probs = check_probs(x, alpha, &dd, false);
    Ok(gallager_b_degree(dv, b, epsilon, alpha, probs, convention).clamp(0.0, 1.0))
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Pr[V = v]` for `V ~ Binomial(dv - 1, 1 - alpha)` connected checks.
#[inline]
fn connected_pmf(dv: u32, v: u32, alpha: f64) -> f64 {
    binomial(dv - 1, v) * (1.0 - alpha).powi(v as i32) * alpha.powi((dv - 1 - v) as i32)
}

/// Gallager A error probability at a variable node of degree `dv`.
fn gallager_a_degree(
    dv: u32,
    epsilon: f64,
    alpha: f64,
    probs: CheckMessageProbs,
    keep_channel: bool,
    convention: MassConvention,
) -> f64 {
    let CheckMessageProbs { p0, p_plus, p_minus } = probs;
    let mut total = epsilon * alpha.powi(dv as i32 - 1);
    for v in 1..dv {
        let vi = v as i32;
        // flip to wrong: no correct message, not all erased
        let mut flip_wrong = (p_minus + p0).powi(vi) - p0.powi(vi);
        // flip to right: no wrong message, not all erased
        let mut flip_right = (p_plus + p0).powi(vi) - p0.powi(vi);
        if keep_channel {
            let multiplicity = match convention {
                MassConvention::Literal => 1.0,
                MassConvention::EventComplete => v as f64,
            };
            flip_wrong -= multiplicity * p_minus * p0.powi(vi - 1);
            flip_right -= multiplicity * p_plus * p0.powi(vi - 1);
        }
        total += connected_pmf(dv, v, alpha)
            * ((1.0 - epsilon) * flip_wrong + epsilon * (1.0 - flip_right));
    }
    total
}

/// `Pr[Binomial(n, p) >= k]`.
fn binomial_tail(n: u32, k: u32, p: f64) -> f64 {
    (k..=n)
        .map(|j| binomial(n, j) * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32))
        .sum()
}

/// Gallager B error probability at a variable node of degree `dv`.
fn gallager_b_degree(
    dv: u32,
    b: u32,
    epsilon: f64,
    alpha: f64,
    probs: CheckMessageProbs,
    convention: MassConvention,
) -> f64 {
    let CheckMessageProbs { p_plus, p_minus, .. } = probs;
    let rest = |v: u32| (dv - 1 - v) as i32;
    match convention {
        MassConvention::Literal => (b..dv)
            .map(|v| {
                let first = (1.0 - epsilon) * p_minus.powi(v as i32) * (1.0 - p_minus).powi(rest(v));
                let second = epsilon * (1.0 - p_plus.powi(v as i32) * (1.0 - p_plus).powi(rest(v)));
                connected_pmf(dv, v, alpha) * (first + second)
            })
            .sum(),
        MassConvention::EventComplete => (0..dv)
            .map(|v| {
                let first = (1.0 - epsilon) * binomial_tail(v, b, p_minus);
                let second = epsilon * (1.0 - binomial_tail(v, b, p_plus));
                connected_pmf(dv, v, alpha) * (first + second)
            })
            .sum(),
    }
}

/// Unclamped, unchecked map `x -> f(x; ε, α)`. Callers validate first.
pub(crate) fn raw_step(x: f64, epsilon: f64, alpha: f64, spec: &DecoderSpec, dd: &DegreeDistribution) -> f64 {
    match spec.kind {
        DecoderKind::Peeling => peeling_raw(x, epsilon, alpha, dd),
        DecoderKind::GallagerA => {
            let probs = check_probs(x, alpha, dd, spec.irregular_check_literal);
            dd.lambda()
                .terms()
                .iter()
                .map(|&(d, c)| {
                    c * gallager_a_degree(
                        d,
                        epsilon,
                        alpha,
                        probs,
                        spec.tie_break_keep_channel,
                        spec.ga_mass_convention,
                    )
                })
                .sum()
        }
        DecoderKind::GallagerB => {
            let probs = check_probs(x, alpha, dd, spec.irregular_check_literal);
            dd.lambda()
                .terms()
                .iter()
                .map(|&(d, c)| {
                    let b = spec.threshold_for_degree(d);
                    c * gallager_b_degree(d, b, epsilon, alpha, probs, spec.gb_mass_convention)
                })
                .sum()
        }
    }
}

/// One density-evolution step for any decoder and degree distribution.
pub fn step(x: f64, epsilon: f64, spec: &DecoderSpec, dd: &DegreeDistribution) -> Result<f64> {
    check_step_args(x, epsilon, spec.alpha)?;
    spec.validate(dd)?;
    Ok(raw_step(x, epsilon, spec.alpha, spec, dd).clamp(0.0, 1.0))
}

const CLAMP_WARN: f64 = 1e-9;

struct Outcome {
    x_inf: f64,
    converged: bool,
    clamp_events: usize,
}

fn run(params: &DEParams, mut record: Option<&mut Vec<f64>>) -> Result<Outcome> {
    params.validate()?;
    let DEParams {
        epsilon,
        spec,
        dd,
        convergence,
    } = params;
    let mut x = *epsilon;
    let mut clamp_events = 0;
    let mut worst_clamp = 0.0f64;
    let mut converged = false;
    for iteration in 1..=convergence.max_iters {
        let raw = raw_step(x, *epsilon, spec.alpha, spec, dd);
        if !raw.is_finite() {
            return Err(Error::NonFinite { iteration });
        }
        let next = raw.clamp(0.0, 1.0);
        if next != raw {
            clamp_events += 1;
            worst_clamp = worst_clamp.max((next - raw).abs());
        }
        if let Some(xs) = record.as_deref_mut() {
            xs.push(next);
        }
        let delta = (next - x).abs();
        x = next;
        if delta < convergence.fixpoint_tol {
            converged = true;
            break;
        }
    }
    if worst_clamp > CLAMP_WARN {
        warn!(
            "density evolution clamped {clamp_events} steps (largest excursion {worst_clamp:e}) at eps = {epsilon}, alpha = {}",
            spec.alpha
        );
    }
    Ok(Outcome {
        x_inf: x,
        converged,
        clamp_events,
    })
}

/// Iterates the map from `x0 = ε` until successive values differ by less
/// than `fixpoint_tol` or `max_iters` steps have run.
pub fn iterate_to_fixpoint(params: &DEParams) -> Result<DETrajectory> {
    let mut xs = vec![params.epsilon];
    let out = run(params, Some(&mut xs))?;
    Ok(DETrajectory {
        xs,
        converged: out.converged,
        x_inf: out.x_inf,
        clamp_events: out.clamp_events,
    })
}

/// Limit of the iteration without keeping the trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub x_inf: f64,
    pub converged: bool,
}

pub fn fixed_point(params: &DEParams) -> Result<FixedPoint> {
    let out = run(params, None)?;
    Ok(FixedPoint {
        x_inf: out.x_inf,
        converged: out.converged,
    })
}

#[cfg(test)]
mod tests;
