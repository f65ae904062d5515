//! Bit-level decoding of the all-one codeword over a miswired decoder.
//!
//! All decoders use a flooding schedule with extrinsic messages. In
//! iteration `t >= 1` a wire that the mask reports missing carries an
//! erasure in both directions. Index 0 of every SER sequence is the error
//! rate of the raw channel decisions, before any message is exchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::de::{DecoderKind, DecoderSpec};
use crate::error::{check_channel, check_unit, Error, Result};
use crate::graph::{sample_code, MaskMode, MiswiringMask, TannerGraph};
use crate::seed;

mod oracle;

pub use oracle::{oracle_exact_ser, ORACLE_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(i8)]
pub enum Msg {
    Minus = -1,
    Erasure = 0,
    Plus = 1,
}

impl Msg {
    #[inline]
    fn flip(self) -> Msg {
        match self {
            Msg::Plus => Msg::Minus,
            Msg::Minus => Msg::Plus,
            Msg::Erasure => Msg::Erasure,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Bec,
    Bsc,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Bec => "bec",
            ChannelKind::Bsc => "bsc",
        }
    }

    /// The channel a decoder expects.
    pub fn for_decoder(kind: DecoderKind) -> ChannelKind {
        match kind {
            DecoderKind::Peeling => ChannelKind::Bec,
            DecoderKind::GallagerA | DecoderKind::GallagerB => ChannelKind::Bsc,
        }
    }
}

impl std::str::FromStr for ChannelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "bec" => Ok(ChannelKind::Bec),
            "bsc" => Ok(ChannelKind::Bsc),
            other => Err(format!("unknown channel `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    pub epsilon: f64,
}

impl ChannelModel {
    pub fn new(kind: ChannelKind, epsilon: f64) -> Result<Self> {
        check_channel("epsilon", epsilon)?;
        Ok(Self { kind, epsilon })
    }

    pub fn validate(&self) -> Result<()> {
        check_channel("epsilon", self.epsilon)
    }
}

/// Channel output for the all-one codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    pub kind: ChannelKind,
    pub symbols: Vec<Msg>,
}

pub fn transmit_all_one(channel: &ChannelModel, n: usize, seed: u64) -> Result<Received> {
    channel.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hit = match channel.kind {
        ChannelKind::Bec => Msg::Erasure,
        ChannelKind::Bsc => Msg::Minus,
    };
    let symbols = (0..n)
        .map(|_| {
            if rng.random::<f64>() < channel.epsilon {
                hit
            } else {
                Msg::Plus
            }
        })
        .collect();
    Ok(Received {
        kind: channel.kind,
        symbols,
    })
}

/// Variable-node rule, resolved from a [`DecoderSpec`] and the designed
/// variable degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rule {
    Peeling,
    /// Flip when no message agrees and at least `need` oppose.
    Unanimous { need: u32 },
    /// Flip messages on `b` opposing inputs, decisions on `b + 1`.
    Majority { b: u32 },
}

impl Rule {
    fn resolve(spec: &DecoderSpec, dv: u32) -> Result<Rule> {
        Ok(match spec.kind {
            DecoderKind::Peeling => Rule::Peeling,
            DecoderKind::GallagerA => Rule::Unanimous {
                need: if spec.tie_break_keep_channel { 2 } else { 1 },
            },
            DecoderKind::GallagerB => {
                let b = spec.threshold_for_degree(dv);
                if b < 1 || b > dv {
                    return Err(Error::InvalidConfig(format!(
                        "Gallager B threshold b = {b} must lie in 1..={dv}"
                    )));
                }
                Rule::Majority { b }
            }
        })
    }

    /// Output given the channel value and the tallies of non-erased inputs.
    #[inline]
    fn apply(self, y: Msg, first: Msg, agree: u32, oppose: u32, decision: bool) -> Msg {
        match self {
            Rule::Peeling => {
                if y != Msg::Erasure {
                    y
                } else {
                    first
                }
            }
            Rule::Unanimous { need } => {
                if agree == 0 && oppose >= need {
                    y.flip()
                } else {
                    y
                }
            }
            Rule::Majority { b } => {
                if oppose >= b + u32::from(decision) {
                    y.flip()
                } else {
                    y
                }
            }
        }
    }
}

fn check_inputs(graph: &TannerGraph, mask: &MiswiringMask, received: &Received, expected: ChannelKind) -> Result<()> {
    if received.kind != expected {
        return Err(Error::InvalidConfig(format!(
            "decoder needs {} input, got {}",
            expected.name(),
            received.kind.name()
        )));
    }
    if received.symbols.len() != graph.n() {
        return Err(Error::InvalidConfig(format!(
            "{} received symbols for {} variable nodes",
            received.symbols.len(),
            graph.n()
        )));
    }
    if mask.num_edges() != graph.num_edges() {
        return Err(Error::InvalidConfig(format!(
            "mask covers {} edges, graph has {}",
            mask.num_edges(),
            graph.num_edges()
        )));
    }
    Ok(())
}

/// Runs `iterations` flooding iterations and hands the hard decisions of
/// every stage (raw channel first) to `on_stage`.
pub fn decode_with(
    graph: &TannerGraph,
    mask: &MiswiringMask,
    received: &Received,
    spec: &DecoderSpec,
    iterations: usize,
    mut on_stage: impl FnMut(usize, &[Msg]),
) -> Result<()> {
    check_inputs(graph, mask, received, ChannelKind::for_decoder(spec.kind))?;
    let rule = Rule::resolve(spec, graph.dv())?;
    let y = &received.symbols;
    let ne = graph.num_edges();
    let mut v2c = vec![Msg::Erasure; ne];
    let mut c2v = vec![Msg::Erasure; ne];
    let mut active = vec![true; ne];
    let mut decisions = y.clone();
    on_stage(0, &decisions);

    for t in 1..=iterations {
        for (e, a) in active.iter_mut().enumerate() {
            *a = mask.active(e as u32, t as u64);
        }

        for v in 0..graph.n() {
            let yv = y[v];
            let edges = graph.var_edges(v);
            let (mut agree, mut oppose) = (0u32, 0u32);
            for &e in edges {
                let m = c2v[e as usize];
                if m == Msg::Erasure {
                    continue;
                }
                if m == yv {
                    agree += 1;
                } else {
                    oppose += 1;
                }
            }
            for &e in edges {
                let e = e as usize;
                if !active[e] {
                    v2c[e] = Msg::Erasure;
                    continue;
                }
                let own = c2v[e];
                let (mut a, mut o) = (agree, oppose);
                if own != Msg::Erasure {
                    if own == yv {
                        a -= 1;
                    } else {
                        o -= 1;
                    }
                }
                let first = if rule == Rule::Peeling && yv == Msg::Erasure {
                    edges
                        .iter()
                        .map(|&f| f as usize)
                        .filter(|&f| f != e)
                        .map(|f| c2v[f])
                        .find(|&m| m != Msg::Erasure)
                        .unwrap_or(Msg::Erasure)
                } else {
                    Msg::Erasure
                };
                v2c[e] = rule.apply(yv, first, a, o, false);
            }
        }

        for c in 0..graph.m() {
            let edges = graph.check_edges(c);
            let mut erased = 0u32;
            let mut minus = 0u32;
            for &e in edges {
                match v2c[e as usize] {
                    Msg::Erasure => erased += 1,
                    Msg::Minus => minus += 1,
                    Msg::Plus => {}
                }
            }
            for &e in edges {
                let e = e as usize;
                let own = v2c[e];
                let others_erased = erased - u32::from(own == Msg::Erasure);
                c2v[e] = if !active[e] || others_erased > 0 {
                    Msg::Erasure
                } else if (minus - u32::from(own == Msg::Minus)) % 2 == 0 {
                    Msg::Plus
                } else {
                    Msg::Minus
                };
            }
        }

        for v in 0..graph.n() {
            let yv = y[v];
            let edges = graph.var_edges(v);
            let (mut agree, mut oppose) = (0u32, 0u32);
            let mut first = Msg::Erasure;
            for &e in edges {
                let m = c2v[e as usize];
                if m == Msg::Erasure {
                    continue;
                }
                if first == Msg::Erasure {
                    first = m;
                }
                if m == yv {
                    agree += 1;
                } else {
                    oppose += 1;
                }
            }
            decisions[v] = rule.apply(yv, first, agree, oppose, true);
        }
        on_stage(t, &decisions);
    }
    Ok(())
}

/// Fraction of decisions that are not `Plus`.
pub fn symbol_error_rate(decisions: &[Msg]) -> f64 {
    if decisions.is_empty() {
        return 0.0;
    }
    decisions.iter().filter(|&&m| m != Msg::Plus).count() as f64 / decisions.len() as f64
}

fn decode_ser(
    graph: &TannerGraph,
    mask: &MiswiringMask,
    received: &Received,
    spec: &DecoderSpec,
    iterations: usize,
) -> Result<Vec<f64>> {
    let mut ser = Vec::with_capacity(iterations + 1);
    decode_with(graph, mask, received, spec, iterations, |_, d| ser.push(symbol_error_rate(d)))?;
    Ok(ser)
}

/// Per-stage fraction of erased decisions.
pub fn decode_peeling(
    graph: &TannerGraph,
    mask: &MiswiringMask,
    received: &Received,
    iterations: usize,
) -> Result<Vec<f64>> {
    decode_ser(graph, mask, received, &DecoderSpec::peeling(mask.alpha()), iterations)
}

/// Per-stage fraction of `Minus` decisions.
pub fn decode_gallager_a(
    graph: &TannerGraph,
    mask: &MiswiringMask,
    received: &Received,
    iterations: usize,
    tie_break_keep_channel: bool,
) -> Result<Vec<f64>> {
    let mut spec = DecoderSpec::gallager_a(mask.alpha());
    spec.tie_break_keep_channel = tie_break_keep_channel;
    decode_ser(graph, mask, received, &spec, iterations)
}

/// Per-stage fraction of `Minus` decisions. A message flips on at least `b`
/// opposing extrinsic inputs and a decision on at least `b + 1` of all
/// inputs, where `b` refers to the designed degree.
pub fn decode_gallager_b(
    graph: &TannerGraph,
    mask: &MiswiringMask,
    received: &Received,
    iterations: usize,
    b: u32,
) -> Result<Vec<f64>> {
    let mut spec = DecoderSpec::gallager_b(mask.alpha());
    spec.gb_threshold_b = Some(b);
    decode_ser(graph, mask, received, &spec, iterations)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n: usize,
    pub dv: u32,
    pub dc: u32,
    pub channel: ChannelModel,
    pub spec: DecoderSpec,
    pub mode: MaskMode,
    pub iterations: usize,
    pub num_code_realizations: usize,
    pub trials_per_code: usize,
    pub master_seed: u64,
}

pub const DEFAULT_ITERATIONS: usize = 30;
pub const DEFAULT_CODE_REALIZATIONS: usize = 100;

impl TrialConfig {
    pub fn new(n: usize, dv: u32, dc: u32, channel: ChannelModel, spec: DecoderSpec, mode: MaskMode) -> Self {
        Self {
            n,
            dv,
            dc,
            channel,
            spec,
            mode,
            iterations: DEFAULT_ITERATIONS,
            num_code_realizations: DEFAULT_CODE_REALIZATIONS,
            trials_per_code: 1,
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        check_unit("alpha", self.spec.alpha)?;
        let want = ChannelKind::for_decoder(self.spec.kind);
        if self.channel.kind != want {
            return Err(Error::InvalidConfig(format!(
                "{} decoding needs a {} channel",
                self.spec.kind.name(),
                want.name()
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.num_code_realizations == 0 || self.trials_per_code == 0 {
            return Err(Error::InvalidConfig("trial counts must be positive".into()));
        }
        Rule::resolve(&self.spec, self.dv)?;
        // shape errors surface here rather than inside a worker
        sample_code(self.n, self.dv, self.dc, 0).map(|_| ())
    }
}

/// Per-stage SER of one decoding run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub code_seed: u64,
    pub trial_seed: u64,
    pub ser: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub mean: Vec<f64>,
    /// Standard error of the mean; zero when fewer than two trials ran.
    pub std_err: Vec<f64>,
    pub trials: usize,
}

impl AggregateStats {
    /// Mean and standard error over `runs`, accumulated in the given order.
    pub fn from_runs<'a>(runs: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut count = 0usize;
        let mut mean: Vec<f64> = Vec::new();
        let mut m2: Vec<f64> = Vec::new();
        for run in runs {
            if count == 0 {
                mean = vec![0.0; run.len()];
                m2 = vec![0.0; run.len()];
            }
            count += 1;
            for (i, &x) in run.iter().enumerate() {
                let d = x - mean[i];
                mean[i] += d / count as f64;
                m2[i] += d * (x - mean[i]);
            }
        }
        let std_err = m2
            .iter()
            .map(|&s| {
                if count < 2 {
                    0.0
                } else {
                    (s / (count - 1) as f64 / count as f64).sqrt()
                }
            })
            .collect();
        Self {
            mean,
            std_err,
            trials: count,
        }
    }
}

/// Seeds for code realization `r` and its trial `j`.
pub fn trial_seeds(master_seed: u64, r: usize, j: usize) -> (u64, u64) {
    let code_seed = seed::derive(master_seed, r as u64);
    (code_seed, seed::derive(code_seed, j as u64))
}

/// Decodes one trial on a fixed graph. Mask and channel randomness are
/// derived from `trial_seed` only.
pub fn run_trial(
    graph: &TannerGraph,
    channel: &ChannelModel,
    spec: &DecoderSpec,
    mode: MaskMode,
    iterations: usize,
    trial_seed: u64,
) -> Result<Vec<f64>> {
    let mask = MiswiringMask::new(mode, spec.alpha, graph.num_edges(), seed::derive(trial_seed, 1))?;
    let received = transmit_all_one(channel, graph.n(), seed::derive(trial_seed, 2))?;
    decode_ser(graph, &mask, &received, spec, iterations)
}

/// Monte Carlo over independent trials on one fixed graph.
pub fn simulate_graph(
    graph: &TannerGraph,
    channel: &ChannelModel,
    spec: &DecoderSpec,
    mode: MaskMode,
    iterations: usize,
    trials: usize,
    master_seed: u64,
) -> Result<AggregateStats> {
    let runs: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|j| run_trial(graph, channel, spec, mode, iterations, seed::derive(master_seed, j as u64)))
        .collect::<Result<_>>()?;
    Ok(AggregateStats::from_runs(runs.iter().map(Vec::as_slice)))
}

/// Runs every trial of `config` and passes each record, in trial order, to
/// `sink` before aggregating.
pub fn run_trials_with(config: &TrialConfig, mut sink: impl FnMut(&TrialRecord)) -> Result<AggregateStats> {
    config.validate()?;
    let per_code: Vec<Vec<TrialRecord>> = (0..config.num_code_realizations)
        .into_par_iter()
        .map(|r| {
            let (code_seed, _) = trial_seeds(config.master_seed, r, 0);
            let graph = sample_code(config.n, config.dv, config.dc, code_seed)?;
            (0..config.trials_per_code)
                .map(|j| {
                    let (_, trial_seed) = trial_seeds(config.master_seed, r, j);
                    let ser = run_trial(
                        &graph,
                        &config.channel,
                        &config.spec,
                        config.mode,
                        config.iterations,
                        trial_seed,
                    )?;
                    Ok(TrialRecord {
                        code_seed,
                        trial_seed,
                        ser,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let records: Vec<TrialRecord> = per_code.into_iter().flatten().collect();
    records.iter().for_each(&mut sink);
    Ok(AggregateStats::from_runs(records.iter().map(|r| r.ser.as_slice())))
}

pub fn run_trials(config: &TrialConfig) -> Result<AggregateStats> {
    run_trials_with(config, |_| {})
}
