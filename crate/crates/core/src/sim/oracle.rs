//! Exact expected SER on tiny graphs by enumeration.
//!
//! Written separately from the decoders in the parent module: messages are
//! plain `i8` values in {-1, 0, +1} and neighbourhoods are found by scanning
//! the edge list.

use std::collections::BTreeMap;

use crate::de::{DecoderKind, DecoderSpec};
use crate::error::{check_unit, Error, Result};
use crate::graph::{Edge, MaskMode, TannerGraph};

use super::{ChannelKind, ChannelModel};

/// Largest number of weighted configurations the oracle will visit.
pub const ORACLE_BUDGET: u128 = 1 << 24;

#[derive(Clone, Copy)]
struct Rules {
    kind: DecoderKind,
    keep: bool,
    b: usize,
}

impl Rules {
    fn out(&self, y: i8, inputs: impl Iterator<Item = i8>, decision: bool) -> i8 {
        let inputs: Vec<i8> = inputs.collect();
        match self.kind {
            DecoderKind::Peeling => {
                if y != 0 {
                    return y;
                }
                inputs.into_iter().find(|&m| m != 0).unwrap_or(0)
            }
            DecoderKind::GallagerA => {
                let heard: Vec<i8> = inputs.into_iter().filter(|&m| m != 0).collect();
                let unanimous = heard.iter().all(|&m| m == -y);
                let enough = heard.len() >= if self.keep { 2 } else { 1 };
                if unanimous && enough {
                    -y
                } else {
                    y
                }
            }
            DecoderKind::GallagerB => {
                let against = inputs.iter().filter(|&&m| m == -y).count();
                let need = if decision { self.b + 1 } else { self.b };
                if against >= need {
                    -y
                } else {
                    y
                }
            }
        }
    }
}

struct Tiny<'a> {
    n: usize,
    edges: &'a [Edge],
    rules: Rules,
}

impl Tiny<'_> {
    fn v2c(&self, y: &[i8], c2v: &[i8], on: impl Fn(usize) -> bool) -> Vec<i8> {
        (0..self.edges.len())
            .map(|e| {
                if !on(e) {
                    return 0;
                }
                let v = self.edges[e].var;
                let others = (0..self.edges.len())
                    .filter(|&f| f != e && self.edges[f].var == v)
                    .map(|f| c2v[f]);
                self.rules.out(y[v as usize], others, false)
            })
            .collect()
    }

    fn c2v_edge(&self, v2c: &[i8], e: usize) -> i8 {
        let c = self.edges[e].check;
        (0..self.edges.len())
            .filter(|&f| f != e && self.edges[f].check == c)
            .fold(1i8, |acc, f| acc * v2c[f])
    }

    fn errors(&self, y: &[i8], c2v: &[i8]) -> f64 {
        let wrong = (0..self.n)
            .filter(|&v| {
                let inputs = (0..self.edges.len())
                    .filter(|&e| self.edges[e].var as usize == v)
                    .map(|e| c2v[e]);
                self.rules.out(y[v], inputs, true) != 1
            })
            .count();
        wrong as f64 / self.n as f64
    }
}

/// Values a binary random choice can take with nonzero probability, as
/// `(outcome, probability)`.
fn support(p_true: f64) -> Vec<(bool, f64)> {
    [(false, 1.0 - p_true), (true, p_true)]
        .into_iter()
        .filter(|&(_, w)| w > 0.0)
        .collect()
}

/// Every combination of `k` independent binary choices with nonzero weight.
fn patterns(choices: &[Vec<(bool, f64)>]) -> Vec<(Vec<bool>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for c in choices {
        out = out
            .into_iter()
            .flat_map(|(bits, w)| {
                c.iter().map(move |&(b, p)| {
                    let mut bits = bits.clone();
                    bits.push(b);
                    (bits, w * p)
                })
            })
            .collect();
    }
    out
}

/// Exact expected per-stage SER of decoding the all-one codeword on `graph`,
/// with the same conventions as the Monte Carlo decoders (stage 0 is the
/// raw channel). Used as ground truth in tests.
pub fn oracle_exact_ser(
    graph: &TannerGraph,
    channel: &ChannelModel,
    spec: &DecoderSpec,
    mode: MaskMode,
    iterations: usize,
) -> Result<Vec<f64>> {
    channel.validate()?;
    check_unit("alpha", spec.alpha)?;
    let (hit, want) = match spec.kind {
        DecoderKind::Peeling => (0i8, ChannelKind::Bec),
        _ => (-1i8, ChannelKind::Bsc),
    };
    if channel.kind != want {
        return Err(Error::InvalidConfig("decoder and channel do not match".into()));
    }
    let b = spec.threshold_for_degree(graph.dv()) as usize;
    if spec.kind == DecoderKind::GallagerB && (b == 0 || b > graph.dv() as usize) {
        return Err(Error::InvalidConfig(format!("Gallager B threshold {b} out of range")));
    }
    let tiny = Tiny {
        n: graph.n(),
        edges: graph.edges(),
        rules: Rules {
            kind: spec.kind,
            keep: spec.tie_break_keep_channel,
            b,
        },
    };
    let ne = tiny.edges.len();

    let hits = support(channel.epsilon);
    let missing = support(spec.alpha);
    let count = |choices: usize, per: usize| (per as u128).checked_pow(choices as u32).unwrap_or(u128::MAX);
    let mut needed = count(tiny.n, hits.len());
    if mode == MaskMode::Permanent {
        needed = needed.saturating_mul(count(ne, missing.len()));
    }
    if needed > ORACLE_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            budget: ORACLE_BUDGET,
        });
    }
    let channel_patterns = patterns(&vec![hits; tiny.n]);
    let mut ser = vec![0.0; iterations + 1];

    match mode {
        MaskMode::Permanent => {
            let masks = patterns(&vec![missing; ne]);
            for (hits, wy) in &channel_patterns {
                let y: Vec<i8> = hits.iter().map(|&h| if h { hit } else { 1 }).collect();
                ser[0] += wy * tiny.errors(&y, &vec![0; ne]);
                for (gone, wm) in &masks {
                    let mut c2v = vec![0i8; ne];
                    for s in ser.iter_mut().skip(1) {
                        let v2c = tiny.v2c(&y, &c2v, |e| !gone[e]);
                        c2v = (0..ne)
                            .map(|e| if gone[e] { 0 } else { tiny.c2v_edge(&v2c, e) })
                            .collect();
                        *s += wy * wm * tiny.errors(&y, &c2v);
                    }
                }
            }
        }
        MaskMode::Transient => {
            // The wires of one check only affect that check's outputs, and
            // fresh draws every iteration make checks independent given the
            // incoming messages. Track the law of the c2v vector.
            let by_check: Vec<Vec<usize>> = (0..graph.m())
                .map(|c| (0..ne).filter(|&e| tiny.edges[e].check as usize == c).collect())
                .collect();
            let local_masks: Vec<Vec<(Vec<bool>, f64)>> = by_check
                .iter()
                .map(|edges| patterns(&vec![missing.clone(); edges.len()]))
                .collect();
            let mut spent: u128 = 0;
            for (hits, wy) in &channel_patterns {
                let y: Vec<i8> = hits.iter().map(|&h| if h { hit } else { 1 }).collect();
                ser[0] += wy * tiny.errors(&y, &vec![0; ne]);
                let mut law: BTreeMap<Vec<i8>, f64> = BTreeMap::from([(vec![0i8; ne], 1.0)]);
                for s in ser.iter_mut().skip(1) {
                    let mut next: BTreeMap<Vec<i8>, f64> = BTreeMap::new();
                    for (c2v, w) in &law {
                        let v2c = tiny.v2c(&y, c2v, |_| true);
                        let mut joint: Vec<(Vec<i8>, f64)> = vec![(vec![0i8; ne], *w)];
                        for (edges, masks) in by_check.iter().zip(&local_masks) {
                            let mut local: BTreeMap<Vec<i8>, f64> = BTreeMap::new();
                            for (gone, wm) in masks {
                                let mut seen = v2c.clone();
                                for (k, &e) in edges.iter().enumerate() {
                                    if gone[k] {
                                        seen[e] = 0;
                                    }
                                }
                                let outs: Vec<i8> = edges
                                    .iter()
                                    .enumerate()
                                    .map(|(k, &e)| if gone[k] { 0 } else { tiny.c2v_edge(&seen, e) })
                                    .collect();
                                *local.entry(outs).or_default() += wm;
                            }
                            spent += masks.len() as u128 + (joint.len() * local.len()) as u128;
                            if spent > ORACLE_BUDGET {
                                return Err(Error::BudgetExceeded {
                                    needed: spent,
                                    budget: ORACLE_BUDGET,
                                });
                            }
                            joint = joint
                                .into_iter()
                                .flat_map(|(state, p)| {
                                    local.iter().map(move |(outs, q)| {
                                        let mut state = state.clone();
                                        for (k, &e) in edges.iter().enumerate() {
                                            state[e] = outs[k];
                                        }
                                        (state, p * q)
                                    })
                                })
                                .collect();
                        }
                        for (state, p) in joint {
                            *next.entry(state).or_default() += p;
                        }
                    }
                    law = next;
                    *s += wy * law.iter().map(|(c2v, p)| p * tiny.errors(&y, c2v)).sum::<f64>();
                }
            }
        }
    }
    Ok(ser)
}
