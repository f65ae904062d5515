//! Parameter tables, the key-value config file, and value parsing.

use std::collections::BTreeMap;

use miswire_core::de::Convergence;
use miswire_core::{DecoderKind, DecoderSpec, DegreeDistribution};

use crate::CliError;

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn key(name: &'static str, default: Option<&'static str>, help: &'static str) -> Key {
    Key { name, default, help }
}

/// Keys that never enter the metadata header: they do not change the data.
pub const UNRECORDED: [&str; 3] = ["output", "workers", "trials-out"];

const COMMON: [Key; 4] = [
    key("seed", Some("0"), "master seed"),
    key("format", Some("csv"), "csv or json"),
    key("output", None, "output file (default: stdout)"),
    key("workers", None, "worker threads (default: all cores)"),
];

const DECODER: [Key; 7] = [
    key("decoder", None, "peeling, gallager-a or gallager-b"),
    key("dv", Some("3"), "variable degree of a regular ensemble"),
    key("dc", Some("6"), "check degree of a regular ensemble"),
    key("keep-channel", Some("true"), "Gallager A: keep the channel bit on a single opposing message"),
    key("gb-b", None, "Gallager B flip threshold (default: ceil(dv/2))"),
    key("gb-convention", Some("literal"), "Gallager B event sums: literal or complete"),
    key("ga-convention", Some("literal"), "Gallager A tie-break sums: literal or complete"),
];

const ENSEMBLE: [Key; 3] = [
    key("lambda", None, "edge-perspective variable distribution, e.g. {2: 0.5, 3: 0.5}"),
    key("rho", None, "edge-perspective check distribution, e.g. {6: 1.0}"),
    key("irregular-literal", Some("false"), "use the product form of the check probabilities"),
];

const DE: [Key; 2] = [
    key("max-iters", Some("2000"), "density-evolution iteration cap"),
    key("tol", Some("1e-12"), "fixed-point tolerance"),
];

pub const COMMANDS: [(&str, &str); 7] = [
    ("de-curve", "final density-evolution error over an eps grid"),
    ("threshold", "eta-thresholds over an alpha grid"),
    ("useful-region", "boundary of the region where decoding beats the raw channel"),
    ("sensitivity", "partials of the fixed point along the useful-region boundary"),
    ("yield", "tolerable miss probability and the resulting yield gain"),
    ("simulate", "finite-length Monte Carlo of the miswired decoders"),
    ("verify", "oracle, reduction and invariant checks"),
];

/// Keys accepted by `command`, in help order.
pub fn keys(command: &str) -> Vec<Key> {
    let mut out: Vec<Key> = Vec::new();
    let analysis = |out: &mut Vec<Key>| {
        out.extend(DECODER);
        out.extend(ENSEMBLE);
        out.extend(DE);
    };
    match command {
        "de-curve" => {
            analysis(&mut out);
            out.push(key("alpha", None, "miss probabilities (list or start:stop:step)"));
            out.push(key("eps", None, "channel parameters (list or start:stop:step)"));
        }
        "threshold" => {
            analysis(&mut out);
            out.push(key("alpha", None, "miss probabilities"));
            out.push(key("eta", Some("1e-5"), "target error probabilities"));
            out.push(key("resolution", Some("1e-5"), "bisection resolution in eps"));
        }
        "useful-region" => {
            analysis(&mut out);
            out.retain(|k| k.name != "keep-channel");
            out.push(key("keep-channel", Some("true,false"), "tie-break variants to evaluate"));
            out.push(key("alpha", None, "miss probabilities"));
            out.push(key("resolution", Some("1e-5"), "bisection resolution in eps"));
        }
        "sensitivity" => {
            analysis(&mut out);
            out.push(key("alpha", None, "miss probabilities"));
            out.push(key("eps", None, "evaluate at these eps instead of on the boundary"));
            out.push(key("resolution", Some("1e-5"), "boundary bisection resolution"));
        }
        "yield" => {
            analysis(&mut out);
            out.push(key("eps", None, "channel parameters"));
            out.push(key("eta", Some("1e-5"), "target error probability"));
            out.push(key("defect-density", None, "defects per unit area"));
            out.push(key("chip-area", None, "chip area"));
            out.push(key("resolution", Some("1e-5"), "bisection resolution in alpha"));
        }
        "simulate" => {
            out.extend(DECODER);
            out.push(key("n", Some("1998"), "block lengths"));
            out.push(key("mode", Some("permanent,transient"), "mask modes"));
            out.push(key("alpha", None, "miss probabilities"));
            out.push(key("eps", None, "channel parameters"));
            out.push(key("iterations", Some("30"), "decoding iterations"));
            out.push(key("codes", Some("100"), "code realizations per point"));
            out.push(key("trials-per-code", Some("1"), "channel and mask draws per code"));
            out.push(key("trials-out", None, "write per-trial records as NDJSON here"));
        }
        "verify" => {
            out.push(key("trials", Some("20000"), "Monte Carlo trials per oracle comparison"));
        }
        _ => {}
    }
    out.extend(COMMON);
    out
}

/// Reads `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
        let k = k.trim().replace('_', "-");
        let v = v.trim().trim_matches('"').to_string();
        if k.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        if out.insert(k.clone(), v).is_some() {
            return Err(CliError::Usage(format!("config key `{k}` given twice")));
        }
    }
    Ok(out)
}

/// Parses one number, or a `start:stop:step` grid with exclusive stop.
fn parse_item(item: &str) -> Result<Vec<f64>, CliError> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::Usage(format!("`{s}` is not a number")))
    };
    let parts: Vec<&str> = item.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step <= 0.0 {
                return Err(CliError::Usage(format!("grid `{item}` needs a positive step")));
            }
            let mut out = Vec::new();
            let mut k = 0u64;
            loop {
                // index arithmetic avoids drift; rounding strips binary noise
                let v = start + k as f64 * step;
                if v >= stop - 1e-9 * step {
                    break;
                }
                out.push((v * 1e12).round() / 1e12);
                k += 1;
                if k > 10_000_000 {
                    return Err(CliError::Usage(format!("grid `{item}` is too large")));
                }
            }
            Ok(out)
        }
        _ => Err(CliError::Usage(format!("`{item}` is neither a number nor start:stop:step"))),
    }
}

/// A comma-separated list of numbers and grids.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.extend(parse_item(item)?);
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("`{text}` is an empty list")));
    }
    Ok(out)
}

/// `{3: 0.5, 4: 0.5}` or `3:0.5,4:0.5`.
pub fn parse_polynomial(text: &str) -> Result<Vec<(u32, f64)>, CliError> {
    let body = text.trim().trim_start_matches('{').trim_end_matches('}');
    let mut out = Vec::new();
    for term in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (d, c) = term
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("`{term}` should read degree: coefficient")))?;
        let d = d
            .trim()
            .parse::<u32>()
            .map_err(|_| CliError::Usage(format!("bad degree `{d}`")))?;
        let c = c
            .trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad coefficient `{c}`")))?;
        out.push((d, c));
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("`{text}` has no terms")));
    }
    Ok(out)
}

/// Resolved parameters of one invocation.
#[derive(Debug, Clone)]
pub struct Params {
    pub command: String,
    values: BTreeMap<String, String>,
}

impl Params {
    /// Layers defaults, then the config file, then command-line values.
    pub fn resolve(
        command: &str,
        file: BTreeMap<String, String>,
        flags: BTreeMap<String, String>,
    ) -> Result<Self, CliError> {
        let table = keys(command);
        let mut values = BTreeMap::new();
        for k in &table {
            if let Some(d) = k.default {
                values.insert(k.name.to_string(), d.to_string());
            }
        }
        for (k, v) in file.into_iter().chain(flags) {
            if !table.iter().any(|t| t.name == k) {
                return Err(CliError::Usage(format!("`{k}` is not a parameter of `{command}`")));
            }
            values.insert(k, v);
        }
        Ok(Self {
            command: command.to_string(),
            values,
        })
    }

    /// Parameters recorded in output headers.
    pub fn recorded(&self) -> BTreeMap<String, String> {
        self.values
            .iter()
            .filter(|(k, _)| !UNRECORDED.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn required(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Usage(format!("`--{key}` is required for `{}`", self.command)))
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.required(key)?;
        v.trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("invalid value `{v}` for `--{key}`")))
    }

    pub fn parse_opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(_) => self.parse(key).map(Some),
        }
    }

    pub fn grid(&self, key: &str) -> Result<Vec<f64>, CliError> {
        parse_grid(self.required(key)?)
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        let text = self.required(key)?;
        let out: Vec<T> = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| CliError::Usage(format!("invalid entry `{s}` in `--{key}`")))
            })
            .collect::<Result<_, _>>()?;
        if out.is_empty() {
            return Err(CliError::Usage(format!("`--{key}` is empty")));
        }
        Ok(out)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.parse("seed")
    }

    pub fn decoder_spec(&self) -> Result<DecoderSpec, CliError> {
        let kind: DecoderKind = self.parse_named("decoder")?;
        let mut spec = DecoderSpec::new(kind, 0.0);
        if self.get("keep-channel").is_some_and(|v| !v.contains(',')) {
            spec.tie_break_keep_channel = self.parse("keep-channel")?;
        }
        spec.gb_threshold_b = self.parse_opt("gb-b")?;
        spec.gb_mass_convention = self.parse_named("gb-convention")?;
        spec.ga_mass_convention = self.parse_named("ga-convention")?;
        if self.get("irregular-literal").is_some() {
            spec.irregular_check_literal = self.parse("irregular-literal")?;
        }
        Ok(spec)
    }

    fn parse_named<T: std::str::FromStr<Err = String>>(&self, key: &str) -> Result<T, CliError> {
        self.required(key)?
            .trim()
            .parse()
            .map_err(|e: String| CliError::Usage(format!("`--{key}`: {e}")))
    }

    pub fn ensemble(&self) -> Result<DegreeDistribution, CliError> {
        match (self.get("lambda"), self.get("rho")) {
            (None, None) => Ok(DegreeDistribution::from_regular(self.parse("dv")?, self.parse("dc")?)?),
            (Some(l), Some(r)) => Ok(DegreeDistribution::new(parse_polynomial(l)?, parse_polynomial(r)?)?),
            _ => Err(CliError::Usage("`--lambda` and `--rho` go together".into())),
        }
    }

    pub fn convergence(&self) -> Result<Convergence, CliError> {
        let c = Convergence {
            max_iters: self.parse("max-iters")?,
            fixpoint_tol: self.parse("tol")?,
        };
        if c.max_iters == 0 || !(c.fixpoint_tol > 0.0) {
            return Err(CliError::Usage("`--max-iters` and `--tol` must be positive".into()));
        }
        Ok(c)
    }
}
