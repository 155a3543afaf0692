//! Line-oriented `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Keys are dotted (`grid.dr = 0.002`). Lengths may
//! be written in units of the initial cylinder radius, e.g. `perturb.a0 = 0.1*r0`.
//! Any `sweep.*` key turns the file into a sweep configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mcf_core::diagnostics::Thresholds;
use mcf_core::evolve::{Sampling, StepPolicy, StopConditions};
use mcf_core::initdata::{Domain, InteriorModel, PerturbationSpec};
use mcf_core::params::{derive_params, FlowParams, R1Policy};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
}

const KEYS: &[&str] = &[
    "params.n",
    "params.gamma",
    "params.a",
    "params.c",
    "params.tau0",
    "params.R1",
    "init.interior",
    "grid.dr",
    "grid.dz",
    "grid.r_tip_max",
    "grid.r_outer_min",
    "grid.z_outer_max",
    "policy.courant_safety",
    "policy.slope_limit",
    "policy.exchange_every",
    "policy.sample_every",
    "policy.samples_per_decade",
    "policy.profile_every",
    "perturb.kind",
    "perturb.a0",
    "perturb.r_m",
    "perturb.z_a",
    "perturb.z_b",
    "stop.max_steps",
    "stop.min_T_minus_t",
    "stop.curvature_ceiling",
    "stop.min_neck_radius",
    "diag.probes",
    "classify.drift_threshold",
    "classify.neck_delta",
    "output.dir",
    "sweep.samples",
    "sweep.bisection_depth",
    "sweep.near.a0",
    "sweep.near.r_m",
    "sweep.far.a0",
    "sweep.far.z_a",
    "sweep.far.z_b",
];

/// Default grid spacing in units of `r0`.
pub const DEFAULT_SPACING_R0: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: FlowParams,
    pub interior: InteriorModel,
    pub domain: Domain,
    pub policy: StepPolicy,
    pub sampling: Sampling,
    /// Write a profile snapshot at every `profile_every`-th record (0: none).
    pub profile_every: usize,
    /// Applied in order to the unperturbed atlas.
    pub perturbations: Vec<PerturbationSpec>,
    pub stop: StopConditions,
    pub probes: Vec<f64>,
    pub thresholds: Thresholds,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearAnchor {
    pub a0: f64,
    pub r_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarAnchor {
    pub a0: f64,
    pub z_a: f64,
    pub z_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub near: NearAnchor,
    pub far: FarAnchor,
    pub samples: usize,
    pub bisection_depth: u32,
}

impl SweepConfig {
    /// The family member at `s`: the near dimple scaled by `1 - s` superposed with the far
    /// dimple scaled by `s`.
    pub fn member(&self, s: f64) -> RunConfig {
        let mut cfg = self.base.clone();
        cfg.perturbations = vec![
            PerturbationSpec::Near { a0: (1.0 - s) * self.near.a0, r_m: self.near.r_m },
            PerturbationSpec::Far { a0: s * self.far.a0, z_a: self.far.z_a, z_b: self.far.z_b },
        ];
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Run(RunConfig),
    Sweep(SweepConfig),
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut map: BTreeMap<String, Entry> = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse { line, message: format!("expected `key = value`, got `{body}`") })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Parse { line, message: "empty key".into() });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::Parse { line, message: format!("unknown key `{key}`") });
        }
        if let Some(prev) = map.get(key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key `{key}` (first set on line {})", prev.line),
            });
        }
        map.insert(key.to_string(), Entry { value: value.to_string(), line });
    }
    Ok(map)
}

struct Reader<'a> {
    map: &'a BTreeMap<String, Entry>,
    r0: f64,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&Entry> {
        self.map.get(key)
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        let e = self.raw(key)?.clone();
        let v = e.value.as_str();
        let parsed = match v.strip_suffix("r0").map(|s| s.trim_end().trim_end_matches('*').trim_end()) {
            Some(factor) => factor.parse::<f64>().map(|f| f * self.r0),
            None => v.parse::<f64>(),
        };
        match parsed {
            Ok(x) if !x.is_nan() => Some(x),
            _ => {
                self.errors.push(format!("line {}: `{key}` expects a number, got `{v}`", e.line));
                None
            }
        }
    }

    fn integer(&mut self, key: &str) -> Option<u64> {
        let e = self.raw(key)?.clone();
        match e.value.parse::<u64>() {
            Ok(x) => Some(x),
            Err(_) => {
                self.errors.push(format!("line {}: `{key}` expects a non-negative integer, got `{}`", e.line, e.value));
                None
            }
        }
    }

    fn number_or(&mut self, key: &str, default: f64) -> f64 {
        self.number(key).unwrap_or(default)
    }

    fn required(&mut self, key: &str) -> f64 {
        if self.raw(key).is_none() {
            self.errors.push(format!("missing required key `{key}`"));
            return f64::NAN;
        }
        self.number(key).unwrap_or(f64::NAN)
    }

    fn check(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(message());
        }
    }
}

/// Parses a configuration, applying `overrides` (`key=value` strings) on top of the file.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<Config, ConfigError> {
    let mut map = tokenize(text)?;
    for (k, o) in overrides.iter().enumerate() {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse { line: 0, message: format!("override #{} is not `key=value`: `{o}`", k + 1) })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::Parse { line: 0, message: format!("unknown override key `{key}`") });
        }
        map.insert(key.to_string(), Entry { value: value.trim().to_string(), line: 0 });
    }
    build(&map)
}

pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    parse_config_with(text, &[])
}

fn build(map: &BTreeMap<String, Entry>) -> Result<Config, ConfigError> {
    let mut rd = Reader { map, r0: f64::NAN, errors: Vec::new() };

    let n = rd.integer("params.n").unwrap_or(2);
    let gamma = rd.required("params.gamma");
    let a = rd.number_or("params.a", 0.0);
    let c = rd.number_or("params.c", 1.0);
    let tau0 = rd.number_or("params.tau0", 4.0);
    let r1 = match rd.number("params.R1") {
        Some(v) => R1Policy::Explicit(v),
        None => R1Policy::Default,
    };
    let interior = match rd.raw("init.interior").map(|e| (e.value.clone(), e.line)) {
        None => InteriorModel::Matched,
        Some((v, _)) if v == "matched" => InteriorModel::Matched,
        Some((v, _)) if v == "bowl" => InteriorModel::Bowl,
        Some((v, line)) => {
            rd.errors.push(format!("line {line}: `init.interior` must be `matched` or `bowl`, got `{v}`"));
            InteriorModel::Matched
        }
    };
    let params = if n > u32::MAX as u64 {
        rd.errors.push(format!("params.n = {n} is out of range"));
        None
    } else {
        match derive_params(n as u32, gamma, a, c, tau0, r1) {
            Ok(p) => Some(p),
            Err(e) => {
                rd.errors.push(e.to_string());
                None
            }
        }
    };
    rd.r0 = params.as_ref().map_or(f64::NAN, |p| p.cylinder_radius0());
    let default_spacing = DEFAULT_SPACING_R0 * rd.r0;

    let domain = Domain {
        dr: rd.number_or("grid.dr", default_spacing),
        dz: rd.number_or("grid.dz", default_spacing),
        r_tip_max: rd.number("grid.r_tip_max"),
        r_outer_min: rd.number("grid.r_outer_min"),
        z_outer_max: rd.number("grid.z_outer_max"),
    };
    if params.is_some() {
        rd.check(domain.dr > 0.0 && domain.dz > 0.0, || "grid spacings must be positive".into());
    }

    let policy = StepPolicy {
        courant_safety: rd.number_or("policy.courant_safety", 0.5),
        slope_limit: rd.number_or("policy.slope_limit", 1e3),
        exchange_every: rd.integer("policy.exchange_every").unwrap_or(1).min(u32::MAX as u64) as u32,
    };
    if let Err(e) = policy.validate() {
        rd.errors.push(e.to_string());
    }
    let sampling = Sampling {
        every_steps: rd.integer("policy.sample_every").unwrap_or(Sampling::default().every_steps),
        per_decade: rd.integer("policy.samples_per_decade").unwrap_or(Sampling::default().per_decade as u64).min(1000)
            as u32,
    };
    rd.check(sampling.every_steps > 0, || "policy.sample_every must be at least 1".into());
    let profile_every = rd.integer("policy.profile_every").unwrap_or(0) as usize;

    let kind = rd.raw("perturb.kind").map(|e| (e.value.clone(), e.line));
    let perturbations = match kind.as_ref().map(|(v, l)| (v.as_str(), *l)) {
        None | Some(("none", _)) => vec![],
        Some(("near", _)) => {
            let a0 = rd.required("perturb.a0");
            let r_m = rd.required("perturb.r_m");
            let r0 = rd.r0;
            rd.check(r_m > 0.0 && r_m < r0, || format!("perturb.r_m = {r_m} must lie in (0, r0 = {r0})"));
            vec![PerturbationSpec::Near { a0, r_m }]
        }
        Some(("far", _)) => {
            let a0 = rd.required("perturb.a0");
            let z_a = rd.required("perturb.z_a");
            let z_b = rd.required("perturb.z_b");
            rd.check(z_a < z_b, || format!("perturb.z_a = {z_a} must be below perturb.z_b = {z_b}"));
            rd.check(a0 >= 0.0, || format!("perturb.a0 = {a0} must be non-negative"));
            vec![PerturbationSpec::Far { a0, z_a, z_b }]
        }
        Some((other, line)) => {
            rd.errors.push(format!("line {line}: perturb.kind must be none, near or far, got `{other}`"));
            vec![]
        }
    };

    let stop = StopConditions {
        max_steps: rd.integer("stop.max_steps").unwrap_or(u64::MAX),
        min_time_to_vanish: rd.number_or("stop.min_T_minus_t", 0.0),
        curvature_ceiling: rd.number_or("stop.curvature_ceiling", f64::INFINITY),
        min_neck_radius: rd.number_or("stop.min_neck_radius", 0.0),
    };
    rd.check(stop.min_time_to_vanish >= 0.0, || "stop.min_T_minus_t must be non-negative".into());
    rd.check(stop.curvature_ceiling > 0.0, || "stop.curvature_ceiling must be positive".into());
    rd.check(stop.min_neck_radius >= 0.0, || "stop.min_neck_radius must be non-negative".into());

    let probes = match rd.raw("diag.probes").cloned() {
        None => vec![],
        Some(e) => {
            let mut out = Vec::new();
            for item in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match item.parse::<f64>() {
                    Ok(x) if x.is_finite() => out.push(x),
                    _ => rd.errors.push(format!("line {}: bad probe `{item}`", e.line)),
                }
            }
            out
        }
    };
    let thresholds = Thresholds {
        drift_threshold: rd.number_or("classify.drift_threshold", 0.15),
        neck_delta: rd.number_or("classify.neck_delta", 0.15),
    };
    rd.check(thresholds.drift_threshold > 0.0, || "classify.drift_threshold must be positive".into());
    rd.check(thresholds.neck_delta > 0.0, || "classify.neck_delta must be positive".into());
    let output_dir = rd.raw("output.dir").map(|e| PathBuf::from(&e.value));

    let is_sweep = map.keys().any(|k| k.starts_with("sweep."));
    let sweep = if is_sweep {
        let samples = rd.integer("sweep.samples").unwrap_or(12) as usize;
        let bisection_depth = rd.integer("sweep.bisection_depth").unwrap_or(6).min(64) as u32;
        rd.check(samples >= 2, || "sweep.samples must be at least 2".into());
        let near = NearAnchor { a0: rd.required("sweep.near.a0"), r_m: rd.required("sweep.near.r_m") };
        let far = FarAnchor {
            a0: rd.required("sweep.far.a0"),
            z_a: rd.required("sweep.far.z_a"),
            z_b: rd.required("sweep.far.z_b"),
        };
        let r0 = rd.r0;
        rd.check(near.r_m > 0.0 && near.r_m < r0, || format!("sweep.near.r_m = {} must lie in (0, r0)", near.r_m));
        rd.check(far.z_a < far.z_b, || "sweep.far.z_a must be below sweep.far.z_b".into());
        Some((samples, bisection_depth, near, far))
    } else {
        None
    };

    if !rd.errors.is_empty() {
        return Err(ConfigError::Validation(rd.errors));
    }
    let run = RunConfig {
        params: params.expect("validated"),
        interior,
        domain,
        policy,
        sampling,
        profile_every,
        perturbations,
        stop,
        probes,
        thresholds,
        output_dir,
    };
    Ok(match sweep {
        None => Config::Run(run),
        Some((samples, bisection_depth, near, far)) => {
            Config::Sweep(SweepConfig { base: run, near, far, samples, bisection_depth })
        }
    })
}

/// Lines describing a configuration, used as CSV metadata.
pub fn describe(cfg: &RunConfig) -> Vec<String> {
    let p = &cfg.params;
    let d = &cfg.domain;
    let opt = |x: Option<f64>| x.map_or("default".to_string(), |v| format!("{v}"));
    vec![
        format!(
            "params n={} gamma={} a={} c={} tau0={} R1={} beta={} matched_beta={} T={} t0={}",
            p.n,
            p.gamma,
            p.a,
            p.c,
            p.tau0,
            p.r1_zeta,
            p.beta,
            p.matched_beta(),
            p.vanishing_time,
            p.t0
        ),
        format!("interior {:?}", cfg.interior),
        format!(
            "grid dr={} dz={} r_tip_max={} r_outer_min={} z_outer_max={}",
            d.dr,
            d.dz,
            opt(d.r_tip_max),
            opt(d.r_outer_min),
            opt(d.z_outer_max)
        ),
        format!(
            "policy courant_safety={} slope_limit={} exchange_every={} sample_every={} samples_per_decade={}",
            cfg.policy.courant_safety,
            cfg.policy.slope_limit,
            cfg.policy.exchange_every,
            cfg.sampling.every_steps,
            cfg.sampling.per_decade
        ),
        format!("perturbations {:?}", cfg.perturbations),
        format!(
            "stop max_steps={} min_T_minus_t={} curvature_ceiling={} min_neck_radius={}",
            cfg.stop.max_steps, cfg.stop.min_time_to_vanish, cfg.stop.curvature_ceiling, cfg.stop.min_neck_radius
        ),
        format!("probes {:?}", cfg.probes),
        "convention H>0 for convex surfaces; H0 is the mean curvature at the tip".to_string(),
        format!("version mcf {}", env!("CARGO_PKG_VERSION")),
    ]
}
