//! Self-checks behind `miswire verify`.

use miswire_core::de::{self, reference, DEParams};
use miswire_core::graph::{sample_code, Edge, MaskMode, MiswiringMask, TannerGraph};
use miswire_core::sim::{self, ChannelKind, ChannelModel, Msg, TrialConfig};
use miswire_core::{DecoderSpec, DegreeDistribution, MassConvention};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::output::Table;
use crate::params::Params;
use crate::CliError;

/// Stages compared against the oracle.
pub const ORACLE_STAGES: usize = 5;

pub fn tiny_graphs() -> Vec<(&'static str, TannerGraph)> {
    let build = |n, m, dv, dc, pairs: &[(u32, u32)]| {
        let edges = pairs.iter().map(|&(var, check)| Edge { var, check }).collect();
        TannerGraph::from_edges(n, m, dv, dc, edges).expect("fixture graph")
    };
    vec![
        ("tree", build(5, 2, 3, 3, &[(0, 0), (1, 0), (2, 0), (2, 1), (3, 1), (4, 1)])),
        (
            "multi36",
            build(
                4,
                2,
                3,
                6,
                &[(0, 0), (0, 1), (0, 0), (1, 0), (1, 1), (1, 1), (2, 0), (2, 1), (2, 0), (3, 1), (3, 0), (3, 1)],
            ),
        ),
        ("k33", sample_code(3, 3, 3, 1).expect("fixture graph")),
        ("ring23", sample_code(6, 2, 3, 2).expect("fixture graph")),
    ]
}

/// Decoder and channel pairs used in oracle comparisons.
pub fn oracle_cases() -> Vec<(&'static str, ChannelModel, DecoderSpec)> {
    let bec = |e| ChannelModel::new(ChannelKind::Bec, e).expect("channel");
    let bsc = |e| ChannelModel::new(ChannelKind::Bsc, e).expect("channel");
    let mut flip = DecoderSpec::gallager_a(0.1);
    flip.tie_break_keep_channel = false;
    vec![
        ("peeling", bec(0.3), DecoderSpec::peeling(0.1)),
        ("gallager-a", bsc(0.1), DecoderSpec::gallager_a(0.1)),
        ("gallager-a-flip", bsc(0.1), flip),
        ("gallager-b", bsc(0.1), DecoderSpec::gallager_b(0.1)),
    ]
}

/// Largest deviation from the oracle in units of standard error, over the
/// stages `0..=ORACLE_STAGES`. Stages with zero spread must match exactly.
pub fn oracle_deviation(
    graph: &TannerGraph,
    channel: &ChannelModel,
    spec: &DecoderSpec,
    mode: MaskMode,
    trials: usize,
    seed: u64,
) -> Result<f64, CliError> {
    let exact = sim::oracle_exact_ser(graph, channel, spec, mode, ORACLE_STAGES)?;
    let mc = sim::simulate_graph(graph, channel, spec, mode, ORACLE_STAGES, trials, seed)?;
    let mut worst: f64 = 0.0;
    for t in 0..=ORACLE_STAGES {
        let gap = (mc.mean[t] - exact[t]).abs();
        let z = if mc.std_err[t] > 0.0 {
            gap / mc.std_err[t]
        } else if gap < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z);
    }
    Ok(worst)
}

/// Largest gap between the missing-connection maps at `α = 0` and the
/// classical recursions over `points` random `(x, ε)` pairs. The literal
/// Gallager B sum only reduces when `b = dv - 1`, so it is checked on (3,6).
pub fn reduction_gap(points: usize, seed: u64) -> Result<f64, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let (dv, dc) = if i % 2 == 0 { (3, 6) } else { [(4, 8), (5, 10), (3, 4), (6, 12)][rng.random_range(0..4)] };
        let dd = DegreeDistribution::from_regular(dv, dc)?;
        let x = rng.random_range(0.0..=0.5);
        let eps = rng.random_range(0.0..0.5);
        for convention in [MassConvention::Literal, MassConvention::EventComplete] {
            let mut ga = DecoderSpec::gallager_a(0.0);
            ga.ga_mass_convention = convention;
            let v = de::step(x, eps, &ga, &dd)?;
            worst = worst.max((v - reference::gallager_a(x, eps, dv, dc)).abs());

            let mut gb = DecoderSpec::gallager_b(0.0);
            gb.gb_mass_convention = convention;
            let b = gb.threshold_for_degree(dv);
            if convention == MassConvention::EventComplete || b == dv - 1 {
                let v = de::step(x, eps, &gb, &dd)?;
                worst = worst.max((v - reference::gallager_b(x, eps, dv, dc, b)).abs());
            }
        }
    }
    Ok(worst)
}

fn row(t: &mut Table, name: String, passed: bool, detail: String) {
    t.push(vec![name.into(), passed.into(), detail.into()]);
}

pub fn run(p: &Params) -> Result<Table, CliError> {
    let trials: usize = p.parse("trials")?;
    let seed = p.seed()?;
    let mut t = Table::new(&["check", "passed", "detail"]);

    for (gname, g) in tiny_graphs() {
        for (dname, channel, spec) in oracle_cases() {
            for mode in [MaskMode::Permanent, MaskMode::Transient] {
                let z = oracle_deviation(&g, &channel, &spec, mode, trials, seed)?;
                row(
                    &mut t,
                    format!("oracle/{gname}/{dname}/{}", mode.name()),
                    z <= 3.0,
                    format!("max |mc - exact| / se = {z:.3}"),
                );
            }
        }
    }

    let gap = reduction_gap(1000, seed)?;
    row(&mut t, "reduction/alpha-zero".into(), gap <= 1e-12, format!("max gap {gap:.3e}"));

    let (tree_gap, detail) = tree_modes()?;
    row(&mut t, "invariant/tree-modes".into(), tree_gap < 1e-12, detail);

    let (bad, n) = peeling_bounds()?;
    row(&mut t, "invariant/peeling-bounds".into(), bad == 0, format!("{bad} of {n} grid points out of bounds"));

    let same = gallager_b_matches_flip_a(seed)?;
    row(&mut t, "invariant/gb-equals-flip-ga".into(), same, "dv = 3, b = 2, alpha = 0".into());

    let violations = coupling_violations(500, seed)?;
    row(&mut t, "invariant/coupling".into(), violations == 0, format!("{violations} violations in 500 coupled trials"));

    let same = reproducible(seed)?;
    row(&mut t, "invariant/reproducible".into(), same, "1 vs 3 worker threads".into());
    Ok(t)
}

fn tree_modes() -> Result<(f64, String), CliError> {
    let (_, tree) = tiny_graphs().remove(0);
    let mut worst: f64 = 0.0;
    for (_, channel, spec) in oracle_cases() {
        let a = sim::oracle_exact_ser(&tree, &channel, &spec, MaskMode::Permanent, ORACLE_STAGES)?;
        let b = sim::oracle_exact_ser(&tree, &channel, &spec, MaskMode::Transient, ORACLE_STAGES)?;
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok((worst, format!("max |permanent - transient| = {worst:.3e}")))
}

/// Peeling fixed points lie between the one-step floor and ε.
pub fn peeling_bounds() -> Result<(usize, usize), CliError> {
    let dd = DegreeDistribution::from_regular(3, 6)?;
    let mut bad = 0;
    let mut n = 0;
    for i in 1..=9 {
        let eps = 0.05 * i as f64;
        for &a in &[0.0, 0.01, 0.05, 0.1, 0.3] {
            let fp = de::iterate_to_fixpoint(&DEParams::new(eps, DecoderSpec::peeling(a), dd.clone()))?;
            let floor = eps * dd.eval_lambda(1.0 - (1.0 - a) * dd.eval_rho(1.0 - a)?)?;
            n += 1;
            if fp.x_inf > eps || (a > 0.0 && fp.x_inf < floor - 1e-10) {
                bad += 1;
            }
        }
    }
    Ok((bad, n))
}

fn gallager_b_matches_flip_a(seed: u64) -> Result<bool, CliError> {
    let g = sample_code(1998, 3, 6, seed)?;
    let mask = MiswiringMask::intact(g.num_edges());
    let channel = ChannelModel::new(ChannelKind::Bsc, 0.04)?;
    let r = sim::transmit_all_one(&channel, g.n(), seed)?;
    let mut flip = DecoderSpec::gallager_a(0.0);
    flip.tie_break_keep_channel = false;
    let mut a: Vec<Vec<Msg>> = Vec::new();
    let mut b: Vec<Vec<Msg>> = Vec::new();
    sim::decode_with(&g, &mask, &r, &flip, 15, |_, d| a.push(d.to_vec()))?;
    sim::decode_with(&g, &mask, &r, &DecoderSpec::gallager_b(0.0), 15, |_, d| b.push(d.to_vec()))?;
    Ok(a == b)
}

/// Sample paths on which the peeling SER under the larger miss probability
/// falls below the SER under the smaller one, at any stage.
pub fn coupling_violations(trials: u64, seed: u64) -> Result<usize, CliError> {
    let channel = ChannelModel::new(ChannelKind::Bec, 0.35)?;
    let mut violations = 0;
    for k in 0..trials {
        let s = miswire_core::seed::derive(seed, k);
        let g = sample_code(240, 3, 6, s)?;
        let mode = if k % 2 == 0 { MaskMode::Permanent } else { MaskMode::Transient };
        let low = MiswiringMask::new(mode, 0.02, g.num_edges(), miswire_core::seed::derive(s, 1))?;
        let high = low.thinned(0.1, miswire_core::seed::derive(s, 2))?;
        let r = sim::transmit_all_one(&channel, g.n(), miswire_core::seed::derive(s, 3))?;
        let a = sim::decode_peeling(&g, &low, &r, 20)?;
        let b = sim::decode_peeling(&g, &high, &r, 20)?;
        if a.iter().zip(&b).any(|(x, y)| y < x) {
            violations += 1;
        }
    }
    Ok(violations)
}

fn reproducible(seed: u64) -> Result<bool, CliError> {
    let channel = ChannelModel::new(ChannelKind::Bsc, 0.03)?;
    let mut c = TrialConfig::new(240, 3, 6, channel, DecoderSpec::gallager_a(0.02), MaskMode::Transient);
    c.iterations = 10;
    c.num_code_realizations = 16;
    c.master_seed = seed;
    let run = |threads| -> Result<sim::AggregateStats, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?;
        Ok(pool.install(|| sim::run_trials(&c))?)
    };
    Ok(run(1)? == run(3)?)
}
