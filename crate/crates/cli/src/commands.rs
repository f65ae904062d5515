//! One function per subcommand. Each turns resolved parameters into a table.

use std::io::Write;

use miswire_core::analysis::{self, Search, ThresholdQuery, YieldParams};
use miswire_core::de::{self, DEParams};
use miswire_core::graph::MaskMode;
use miswire_core::seed;
use miswire_core::sim::{self, ChannelKind, ChannelModel, TrialConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{Cell, Table};
use crate::params::Params;
use crate::{verify, CliError};

pub fn run(p: &Params) -> Result<Table, CliError> {
    match p.command.as_str() {
        "de-curve" => de_curve(p),
        "threshold" => threshold(p),
        "useful-region" => useful_region(p),
        "sensitivity" => sensitivity(p),
        "yield" => yield_gain(p),
        "simulate" => simulate(p),
        "verify" => verify::run(p),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

fn de_curve(p: &Params) -> Result<Table, CliError> {
    let spec = p.decoder_spec()?;
    let dd = p.ensemble()?;
    let convergence = p.convergence()?;
    let alphas = p.grid("alpha")?;
    let eps = p.grid("eps")?;
    spec.validate(&dd)?;
    let points: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| eps.iter().map(move |&e| (a, e))).collect();
    let results: Vec<de::DETrajectory> = points
        .par_iter()
        .map(|&(a, e)| {
            let mut params = DEParams::new(e, spec.with_alpha(a), dd.clone());
            params.convergence = convergence;
            de::iterate_to_fixpoint(&params)
        })
        .collect::<Result<_, _>>()?;
    let mut t = Table::new(&["alpha", "epsilon", "x_inf", "converged", "iters"]);
    for (&(a, e), r) in points.iter().zip(&results) {
        t.push(vec![a.into(), e.into(), r.x_inf.into(), r.converged.into(), r.iterations().into()]);
    }
    Ok(t)
}

fn threshold(p: &Params) -> Result<Table, CliError> {
    let spec = p.decoder_spec()?;
    let dd = p.ensemble()?;
    let alphas = p.grid("alpha")?;
    let etas = p.grid("eta")?;
    let mut t = Table::new(&["alpha", "eta", "eps_star", "status"]);
    for eta in etas {
        let mut q = ThresholdQuery::new(spec.clone(), dd.clone(), eta);
        q.eps_resolution = p.parse("resolution")?;
        q.convergence = p.convergence()?;
        q.validate()?;
        spec.validate(&dd)?;
        for pt in analysis::threshold_curve(&q, &alphas) {
            t.push(vec![pt.alpha.into(), eta.into(), Cell::opt(pt.value), status(pt.error)]);
        }
    }
    Ok(t)
}

fn status(error: Option<String>) -> Cell {
    Cell::Text(error.unwrap_or_else(|| "ok".into()))
}

fn search(p: &Params) -> Result<Search, CliError> {
    Ok(Search {
        resolution: p.parse("resolution")?,
        convergence: p.convergence()?,
    })
}

fn useful_region(p: &Params) -> Result<Table, CliError> {
    let base = p.decoder_spec()?;
    let dd = p.ensemble()?;
    let alphas = p.grid("alpha")?;
    let variants: Vec<bool> = p.list("keep-channel")?;
    let s = search(p)?;
    let mut t = Table::new(&["alpha", "keep_channel", "eps_boundary", "status"]);
    for keep in variants {
        let mut spec = base.clone();
        spec.tie_break_keep_channel = keep;
        spec.validate(&dd)?;
        for pt in analysis::useful_region_boundary(&spec, &dd, &alphas, s) {
            t.push(vec![pt.alpha.into(), keep.into(), Cell::opt(pt.value), status(pt.error)]);
        }
    }
    Ok(t)
}

fn sensitivity(p: &Params) -> Result<Table, CliError> {
    let spec = p.decoder_spec()?;
    let dd = p.ensemble()?;
    let alphas = p.grid("alpha")?;
    let s = search(p)?;
    spec.validate(&dd)?;
    let mut t = Table::new(&["alpha", "epsilon", "x_inf", "d_eps", "d_alpha", "ratio", "status"]);
    let mut push = |a: f64, e: Option<f64>, r: Result<analysis::Sensitivity, String>| match r {
        Ok(v) => t.push(vec![
            a.into(),
            Cell::opt(e),
            v.x_inf.into(),
            v.d_eps.into(),
            v.d_alpha.into(),
            Cell::opt(v.ratio),
            "ok".into(),
        ]),
        Err(msg) => t.push(vec![a.into(), Cell::opt(e), Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing, msg.into()]),
    };
    match p.get("eps") {
        Some(_) => {
            let eps = p.grid("eps")?;
            let points: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| eps.iter().map(move |&e| (a, e))).collect();
            let results: Vec<_> = points
                .par_iter()
                .map(|&(a, e)| analysis::sensitivity(&spec, &dd, e, a, s.convergence).map_err(|e| e.to_string()))
                .collect();
            for (&(a, e), r) in points.iter().zip(results) {
                push(a, Some(e), r);
            }
        }
        None => {
            for r in analysis::boundary_sensitivity_curve(&spec, &dd, &alphas, s) {
                match r {
                    Ok(b) => push(b.alpha, Some(b.eps_boundary), Ok(b.sensitivity)),
                    Err((a, msg)) => push(a, None, Err(msg)),
                }
            }
        }
    }
    Ok(t)
}

fn yield_gain(p: &Params) -> Result<Table, CliError> {
    let spec = p.decoder_spec()?;
    let dd = p.ensemble()?;
    let eps = p.grid("eps")?;
    let eta: f64 = p.parse("eta")?;
    let defect_density: f64 = p.parse("defect-density")?;
    let chip_area: f64 = p.parse("chip-area")?;
    let s = search(p)?;
    let maxima: Vec<f64> = eps
        .par_iter()
        .map(|&e| analysis::alpha_max(&spec, &dd, e, eta, s))
        .collect::<Result<_, _>>()?;
    let mut t = Table::new(&["epsilon", "eta", "alpha_max", "base_yield", "delta_y", "relative_delta"]);
    for (&e, &alpha_max) in eps.iter().zip(&maxima) {
        let g = analysis::yield_gain(&YieldParams {
            alpha_max,
            defect_density,
            chip_area,
        })?;
        t.push(vec![
            e.into(),
            eta.into(),
            alpha_max.into(),
            g.base_yield.into(),
            g.delta_y.into(),
            g.relative_delta.into(),
        ]);
    }
    Ok(t)
}

#[derive(Serialize)]
struct TrialLine<'a> {
    n: usize,
    mode: &'a str,
    alpha: f64,
    epsilon: f64,
    code_seed: u64,
    trial_seed: u64,
    iteration: usize,
    ser: f64,
}

fn simulate(p: &Params) -> Result<Table, CliError> {
    let spec = p.decoder_spec()?;
    let (dv, dc): (u32, u32) = (p.parse("dv")?, p.parse("dc")?);
    let lengths: Vec<usize> = p.list("n")?;
    let modes: Vec<MaskMode> = p
        .list::<String>("mode")?
        .iter()
        .map(|m| m.parse().map_err(CliError::Usage))
        .collect::<Result<_, _>>()?;
    let alphas = p.grid("alpha")?;
    let eps = p.grid("eps")?;
    let master = p.seed()?;
    let mut sink = match p.get("trials-out") {
        Some(path) => Some(std::io::BufWriter::new(
            std::fs::File::create(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?,
        )),
        None => None,
    };
    let mut configs = Vec::new();
    for &n in &lengths {
        for &mode in &modes {
            for &a in &alphas {
                for &e in &eps {
                    let channel = ChannelModel::new(ChannelKind::for_decoder(spec.kind), e)?;
                    let mut c = TrialConfig::new(n, dv, dc, channel, spec.with_alpha(a), mode);
                    c.iterations = p.parse("iterations")?;
                    c.num_code_realizations = p.parse("codes")?;
                    c.trials_per_code = p.parse("trials-per-code")?;
                    c.master_seed = point_seed(master, n, mode, a, e);
                    c.validate()?;
                    configs.push(c);
                }
            }
        }
    }
    let mut t = Table::new(&["n", "mode", "alpha", "epsilon", "iterations", "ser_mean", "ser_stderr", "trials"]);
    for c in &configs {
        let mut io_error = None;
        let stats = sim::run_trials_with(c, |r| {
            if let Some(w) = sink.as_mut() {
                for (iteration, &ser) in r.ser.iter().enumerate() {
                    let line = TrialLine {
                        n: c.n,
                        mode: c.mode.name(),
                        alpha: c.spec.alpha,
                        epsilon: c.channel.epsilon,
                        code_seed: r.code_seed,
                        trial_seed: r.trial_seed,
                        iteration,
                        ser,
                    };
                    let res = serde_json::to_writer(&mut *w, &line)
                        .map_err(|e| e.to_string())
                        .and_then(|_| w.write_all(b"\n").map_err(|e| e.to_string()));
                    if let Err(e) = res {
                        io_error.get_or_insert(e);
                    }
                }
            }
        })?;
        if let Some(e) = io_error {
            return Err(CliError::Io(e));
        }
        let last = c.iterations;
        t.push(vec![
            c.n.into(),
            c.mode.name().into(),
            c.spec.alpha.into(),
            c.channel.epsilon.into(),
            last.into(),
            stats.mean[last].into(),
            stats.std_err[last].into(),
            stats.trials.into(),
        ]);
    }
    if let Some(mut w) = sink {
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(t)
}

/// Seed of one simulation point, keyed by its parameters so that adding
/// points to a grid leaves existing points unchanged.
fn point_seed(master: u64, n: usize, mode: MaskMode, alpha: f64, eps: f64) -> u64 {
    let mut s = seed::derive(master, n as u64);
    s = seed::derive(s, mode as u64);
    s = seed::derive(s, alpha.to_bits());
    seed::derive(s, eps.to_bits())
}
