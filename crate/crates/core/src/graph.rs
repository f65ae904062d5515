//! Finite-length Tanner graphs and miswiring masks.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub var: u32,
    pub check: u32,
}

/// Bipartite graph of `n` variable nodes and `m` check nodes. Edge ids are
/// positions in [`TannerGraph::edges`]; parallel edges are distinct edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    n: usize,
    m: usize,
    dv: u32,
    dc: u32,
    edges: Vec<Edge>,
    var_offsets: Vec<usize>,
    var_adj: Vec<u32>,
    check_offsets: Vec<usize>,
    check_adj: Vec<u32>,
}

fn csr(count: usize, keys: impl Iterator<Item = u32> + Clone) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; count + 1];
    for k in keys.clone() {
        offsets[k as usize + 1] += 1;
    }
    for i in 0..count {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut adj = vec![0u32; offsets[count]];
    for (e, k) in keys.enumerate() {
        adj[fill[k as usize]] = e as u32;
        fill[k as usize] += 1;
    }
    (offsets, adj)
}

impl TannerGraph {
    /// Builds a graph from an explicit edge list. Degrees are not checked
    /// against `(dv, dc)`, which are kept as the designed degrees; this
    /// admits trees and other irregular test fixtures.
    pub fn from_edges(n: usize, m: usize, dv: u32, dc: u32, edges: Vec<Edge>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidGraph("graph needs variable and check nodes".into()));
        }
        if let Some(e) = edges.iter().find(|e| e.var as usize >= n || e.check as usize >= m) {
            return Err(Error::InvalidGraph(format!(
                "edge ({}, {}) out of range for n = {n}, m = {m}",
                e.var, e.check
            )));
        }
        let (var_offsets, var_adj) = csr(n, edges.iter().map(|e| e.var));
        let (check_offsets, check_adj) = csr(m, edges.iter().map(|e| e.check));
        Ok(Self {
            n,
            m,
            dv,
            dc,
            edges,
            var_offsets,
            var_adj,
            check_offsets,
            check_adj,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dv(&self) -> u32 {
        self.dv
    }

    pub fn dc(&self) -> u32 {
        self.dc
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge ids incident to variable `v`, ascending.
    pub fn var_edges(&self, v: usize) -> &[u32] {
        &self.var_adj[self.var_offsets[v]..self.var_offsets[v + 1]]
    }

    /// Edge ids incident to check `c`, ascending.
    pub fn check_edges(&self, c: usize) -> &[u32] {
        &self.check_adj[self.check_offsets[c]..self.check_offsets[c + 1]]
    }

    /// True when every variable has degree `dv` and every check degree `dc`.
    pub fn is_regular(&self) -> bool {
        (0..self.n).all(|v| self.var_edges(v).len() == self.dv as usize)
            && (0..self.m).all(|c| self.check_edges(c).len() == self.dc as usize)
    }

    /// Plain-text edge list: an `n dv dc` header, then one zero-indexed
    /// `v c` pair per line in edge-id order.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n, self.dv, self.dc);
        for e in &self.edges {
            let _ = writeln!(out, "{} {}", e.var, e.check);
        }
        out
    }

    /// Parses [`TannerGraph::to_edge_list`] output; the result must be regular.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidGraph("empty edge list".into()))?;
        let nums = |line: &str, want: usize| -> Result<Vec<u64>> {
            let v: std::result::Result<Vec<u64>, _> = line.split_whitespace().map(str::parse).collect();
            match v {
                Ok(v) if v.len() == want => Ok(v),
                _ => Err(Error::InvalidGraph(format!("malformed line `{line}`"))),
            }
        };
        let h = nums(header, 3)?;
        let (n, dv, dc) = (h[0] as usize, h[1] as u32, h[2] as u32);
        check_shape(n, dv, dc)?;
        let m = n * dv as usize / dc as usize;
        let edges = lines
            .map(|l| {
                nums(l, 2).map(|p| Edge {
                    var: p[0] as u32,
                    check: p[1] as u32,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let g = Self::from_edges(n, m, dv, dc, edges)?;
        if !g.is_regular() {
            return Err(Error::InvalidGraph("edge list is not ({dv}, {dc})-regular".into()));
        }
        Ok(g)
    }
}

fn check_shape(n: usize, dv: u32, dc: u32) -> Result<()> {
    if dv < 1 || dc < 1 {
        return Err(Error::InvalidGraph("degrees must be positive".into()));
    }
    if (n * dv as usize) % dc as usize != 0 {
        return Err(Error::InvalidGraph(format!("n·dv = {} is not divisible by dc = {dc}", n * dv as usize)));
    }
    if n < dc as usize {
        return Err(Error::InvalidGraph(format!("n = {n} is smaller than dc = {dc}")));
    }
    Ok(())
}

/// Samples a `(dv, dc)`-regular graph by matching the `n·dv` variable
/// sockets to a uniformly shuffled list of check sockets. Multi-edges and
/// short cycles are kept.
pub fn sample_code(n: usize, dv: u32, dc: u32, seed: u64) -> Result<TannerGraph> {
    check_shape(n, dv, dc)?;
    let sockets = n * dv as usize;
    let m = sockets / dc as usize;
    let mut check_sockets: Vec<u32> = (0..sockets as u32).collect();
    check_sockets.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let edges = check_sockets
        .iter()
        .enumerate()
        .map(|(s, &cs)| Edge {
            var: (s / dv as usize) as u32,
            check: cs / dc,
        })
        .collect();
    TannerGraph::from_edges(n, m, dv, dc, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskMode {
    /// Wires are removed once, before decoding starts.
    Permanent,
    /// Every wire is redrawn at every iteration.
    Transient,
}

impl MaskMode {
    pub fn name(self) -> &'static str {
        match self {
            MaskMode::Permanent => "permanent",
            MaskMode::Transient => "transient",
        }
    }
}

impl std::str::FromStr for MaskMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "permanent" => Ok(MaskMode::Permanent),
            "transient" => Ok(MaskMode::Transient),
            other => Err(format!("unknown mask mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Layer {
    seed: u64,
    prob: f64,
}

impl Layer {
    #[inline]
    fn removes(&self, edge: u32, iteration: u64) -> bool {
        let h = seed::derive(seed::derive(self.seed, u64::from(edge)), iteration);
        seed::unit_f64(h) < self.prob
    }
}

/// Which wires of a decoder are present.
///
/// Removal is a pure function of `(seed, edge, iteration)` so trials can be
/// replayed and queried in any order. A mask may be a stack of independent
/// removal layers; [`MiswiringMask::thinned`] adds one, which couples two
/// miss probabilities on the same sample path.
#[derive(Debug, Clone, PartialEq)]
pub struct MiswiringMask {
    mode: MaskMode,
    alpha: f64,
    num_edges: usize,
    layers: Vec<Layer>,
    permanent_active: Vec<bool>,
}

impl MiswiringMask {
    pub fn new(mode: MaskMode, alpha: f64, num_edges: usize, seed: u64) -> Result<Self> {
        check_unit("alpha", alpha)?;
        Ok(Self::with_layers(mode, alpha, num_edges, vec![Layer { seed, prob: alpha }]))
    }

    /// A mask in which every wire is present.
    pub fn intact(num_edges: usize) -> Self {
        Self::with_layers(MaskMode::Permanent, 0.0, num_edges, Vec::new())
    }

    fn with_layers(mode: MaskMode, alpha: f64, num_edges: usize, layers: Vec<Layer>) -> Self {
        let permanent_active = match mode {
            MaskMode::Permanent => (0..num_edges as u32)
                .map(|e| !layers.iter().any(|l| l.removes(e, 0)))
                .collect(),
            MaskMode::Transient => Vec::new(),
        };
        Self {
            mode,
            alpha,
            num_edges,
            layers,
            permanent_active,
        }
    }

    /// Removes each surviving wire with probability `(α₂ - α)/(1 - α)`, so the
    /// result has miss probability `α₂` and only ever removes more wires.
    pub fn thinned(&self, alpha2: f64, seed: u64) -> Result<Self> {
        check_unit("alpha2", alpha2)?;
        if alpha2 < self.alpha {
            return Err(Error::InvalidConfig(format!(
                "thinning must not restore wires: {alpha2} < {}",
                self.alpha
            )));
        }
        let prob = if self.alpha >= 1.0 {
            0.0
        } else {
            ((alpha2 - self.alpha) / (1.0 - self.alpha)).min(1.0)
        };
        let mut layers = self.layers.clone();
        layers.push(Layer { seed, prob });
        Ok(Self::with_layers(self.mode, alpha2, self.num_edges, layers))
    }

    pub fn mode(&self) -> MaskMode {
        self.mode
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// Whether `edge` carries messages during decoding iteration `iteration`.
    pub fn is_edge_active(&self, edge: usize, iteration: u64) -> Result<bool> {
        if edge >= self.num_edges {
            return Err(Error::InvalidGraph(format!(
                "edge {edge} out of range for {} edges",
                self.num_edges
            )));
        }
        Ok(self.active(edge as u32, iteration))
    }

    #[inline]
    pub(crate) fn active(&self, edge: u32, iteration: u64) -> bool {
        match self.mode {
            MaskMode::Permanent => self.permanent_active[edge as usize],
            MaskMode::Transient => !self.layers.iter().any(|l| l.removes(edge, iteration)),
        }
    }

    /// Ids of wires removed for the whole decoding run (permanent masks only).
    pub fn permanent_removed(&self) -> Option<Vec<usize>> {
        match self.mode {
            MaskMode::Permanent => Some(
                self.permanent_active
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| !a)
                    .map(|(e, _)| e)
                    .collect(),
            ),
            MaskMode::Transient => None,
        }
    }
}
