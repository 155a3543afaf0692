//! Explicit dual-patch stepper.
//!
//! Each step advances the interior points of both patches with centred differences and
//! forward Euler, then refreshes the two overlap endpoints by linear interpolation in the
//! other patch, dropping endpoints that are no longer bracketed or have become too steep.

use crate::atlas::{validate_atlas, AtlasStatus, OuterPatch, RightEnd, SurfaceAtlas, TipPatch, MIN_LIVE};
use crate::diagnostics::{find_neck, sample, tip_curvature, DiagnosticsRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    pub courant_safety: f64,
    pub slope_limit: f64,
    pub exchange_every: u32,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { courant_safety: 0.5, slope_limit: 1e3, exchange_every: 1 }
    }
}

impl StepPolicy {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.courant_safety > 0.0 && self.courant_safety < 1.0) {
            bad.push(format!("courant_safety {} not in (0, 1)", self.courant_safety));
        }
        if !(self.slope_limit > 1.0) {
            bad.push(format!("slope_limit {} must exceed 1", self.slope_limit));
        }
        if self.exchange_every == 0 {
            bad.push("exchange_every must be at least 1".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad.join("; ")))
        }
    }
}

/// `safety * (1/2) * min(dr, dz)^2`.
pub fn cfl_dt(dr: f64, dz: f64, policy: &StepPolicy) -> f64 {
    policy.courant_safety * 0.5 * dr.min(dz).powi(2)
}

#[inline]
fn outer_rate(rm: f64, r: f64, rp: f64, inv_2dz: f64, inv_dz2: f64, nm1: f64) -> f64 {
    let p = (rp - rm) * inv_2dz;
    let q = (rp + rm - 2.0 * r) * inv_dz2;
    q / (1.0 + p * p) - nm1 / r
}

#[inline]
fn tip_rate(zm: f64, z: f64, zp: f64, r: f64, inv_2dr: f64, inv_dr2: f64, nm1: f64) -> f64 {
    let p = (zp - zm) * inv_2dr;
    let q = (zp + zm - 2.0 * z) * inv_dr2;
    q / (1.0 + p * p) + nm1 * p / r
}

/// `dr/dt` at the interior points (`1..live-1`) of the outer patch.
pub fn rhs_outer(outer: &OuterPatch, n: u32) -> Vec<f64> {
    let r = outer.values();
    let (a, b, nm1) = (0.5 / outer.dz, 1.0 / (outer.dz * outer.dz), n as f64 - 1.0);
    r.windows(3).map(|w| outer_rate(w[0], w[1], w[2], a, b, nm1)).collect()
}

/// `dz/dt` at every tip point except the endpoint; the axis uses even reflection.
pub fn rhs_tip(tip: &TipPatch, n: u32) -> Vec<f64> {
    let z = tip.values();
    let dr = tip.dr;
    let (a, b, nm1) = (0.5 / dr, 1.0 / (dr * dr), n as f64 - 1.0);
    let mut out = Vec::with_capacity(z.len().saturating_sub(1));
    if z.len() < 2 {
        return out;
    }
    out.push(n as f64 * 2.0 * (z[1] - z[0]) * b);
    for i in 1..z.len() - 1 {
        out.push(tip_rate(z[i - 1], z[i], z[i + 1], i as f64 * dr, a, b, nm1));
    }
    out
}

/// Treatment of a patch end during a standalone step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndRule {
    /// `dr/dt = -(n-1)/r` (outer patch only).
    Cylinder,
    /// Reflection symmetry about the end point.
    Mirror,
    /// Left unchanged; set from outside.
    Held,
}

/// One Euler step of an outer profile in place. Returns the index of the first
/// non-positive or non-finite radius, if any.
pub fn step_outer_values(r: &mut [f64], dz: f64, dt: f64, n: u32, left: EndRule, right: EndRule) -> Option<usize> {
    let len = r.len();
    if len < 3 {
        return None;
    }
    let (a, b, nm1) = (0.5 / dz, 1.0 / (dz * dz), n as f64 - 1.0);
    let (first, second) = (r[0], r[1]);
    let (last, second_last) = (r[len - 1], r[len - 2]);
    let mut prev = first;
    for i in 1..len - 1 {
        let cur = r[i];
        r[i] = cur + dt * outer_rate(prev, cur, r[i + 1], a, b, nm1);
        prev = cur;
    }
    match left {
        EndRule::Held => {}
        EndRule::Cylinder => r[0] = first - dt * nm1 / first,
        EndRule::Mirror => r[0] = first + dt * outer_rate(second, first, second, a, b, nm1),
    }
    match right {
        EndRule::Held => {}
        EndRule::Cylinder => r[len - 1] = last - dt * nm1 / last,
        EndRule::Mirror => r[len - 1] = last + dt * outer_rate(second_last, last, second_last, a, b, nm1),
    }
    r.iter().position(|&x| !(x > 0.0 && x.is_finite()))
}

/// One Euler step of a tip profile in place; the axis point uses even reflection.
/// The far end follows `end` (`Cylinder` is not meaningful here and is treated as `Held`).
pub fn step_tip_values(z: &mut [f64], dr: f64, dt: f64, n: u32, end: EndRule) {
    let len = z.len();
    if len < 3 {
        return;
    }
    let (a, b, nm1) = (0.5 / dr, 1.0 / (dr * dr), n as f64 - 1.0);
    let (last, second_last) = (z[len - 1], z[len - 2]);
    let mut prev = z[0];
    z[0] += dt * n as f64 * 2.0 * (z[1] - z[0]) * b;
    for i in 1..len - 1 {
        let cur = z[i];
        z[i] = cur + dt * tip_rate(prev, cur, z[i + 1], i as f64 * dr, a, b, nm1);
        prev = cur;
    }
    if end == EndRule::Mirror {
        // z_{N+1} = z_{N-1}: no slope term at the mirror
        z[len - 1] = last + dt * 2.0 * (second_last - last) * b;
    }
}

/// Advances both patches by `dt`. Endpoints shared with the other patch are left for
/// [`exchange_overlap`]; the far outer end follows `atlas.right_end`.
pub fn euler_step(atlas: &mut SurfaceAtlas, dt: f64) -> Result<()> {
    let n = atlas.params.n;
    let dr = atlas.tip.dr;
    step_tip_values(atlas.tip.values_mut(), dr, dt, n, EndRule::Held);
    let right = match atlas.right_end {
        RightEnd::Cylinder => EndRule::Cylinder,
        RightEnd::Mirror => EndRule::Mirror,
    };
    let dz = atlas.outer.dz;
    let bad = step_outer_values(atlas.outer.values_mut(), dz, dt, n, EndRule::Held, right);
    atlas.t += dt;
    if let Some(j) = bad {
        return Err(Error::NonPositiveRadius { z: atlas.outer.z_at(j) });
    }
    Ok(())
}

/// Index `j >= 1` of the first outer segment `[r_j, r_{j+1}]` containing `r`, scanning the
/// initial increasing run from the left.
fn bracket_outer(r_vals: &[f64], r: f64) -> Option<(usize, f64)> {
    for j in 1..r_vals.len().saturating_sub(1) {
        let (a, b) = (r_vals[j], r_vals[j + 1]);
        if b < a {
            return None;
        }
        if a <= r && r <= b {
            let frac = if b > a { (r - a) / (b - a) } else { 0.0 };
            return Some((j, frac));
        }
    }
    None
}

/// Index `i` of the first tip segment `[z_i, z_{i+1}]` (with `i + 1 < live - 1`) containing `z`,
/// scanning from the endpoint side towards the axis.
fn bracket_tip(z_vals: &[f64], z: f64) -> Option<(usize, f64)> {
    let len = z_vals.len();
    if len < 3 {
        return None;
    }
    for i in (0..len - 2).rev() {
        let (a, b) = (z_vals[i], z_vals[i + 1]);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if lo <= z && z <= hi {
            let frac = if b != a { (z - a) / (b - a) } else { 0.0 };
            return Some((i, frac));
        }
    }
    None
}

/// Refreshes both overlap endpoints from the other patch, removing endpoints that are not
/// bracketed or whose one-sided slope exceeds `policy.slope_limit`.
pub fn exchange_overlap(atlas: &mut SurfaceAtlas, policy: &StepPolicy) -> Result<()> {
    // tip endpoint from the outer interior
    loop {
        if atlas.tip.live < MIN_LIVE {
            return Err(Error::TipResolutionLost);
        }
        let r_end = atlas.tip.r_end();
        match bracket_outer(atlas.outer.values(), r_end) {
            Some((j, frac)) => {
                let z = atlas.outer.z_at(j) + frac * atlas.outer.dz;
                let k = atlas.tip.end_index();
                if ((z - atlas.tip.z[k - 1]) / atlas.tip.dr).abs() > policy.slope_limit {
                    atlas.tip.remove_end();
                    continue;
                }
                atlas.tip.z[k] = z;
                break;
            }
            None => atlas.tip.remove_end(),
        }
    }
    // outer left endpoint from the tip interior
    loop {
        if atlas.outer.live() < MIN_LIVE {
            return Err(Error::OuterResolutionLost);
        }
        let z_left = atlas.outer.z_left();
        match bracket_tip(atlas.tip.values(), z_left) {
            Some((i, frac)) => {
                let r = (i as f64 + frac) * atlas.tip.dr;
                let s = atlas.outer.start;
                if !(r > 0.0) || ((atlas.outer.r[s + 1] - r) / atlas.outer.dz).abs() > policy.slope_limit {
                    atlas.outer.remove_left();
                    continue;
                }
                atlas.outer.r[s] = r;
                break;
            }
            None => atlas.outer.remove_left(),
        }
    }
    validate_atlas(atlas).into_result()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopConditions {
    pub max_steps: u64,
    /// Stop once `T - t` would fall below this.
    pub min_time_to_vanish: f64,
    /// Stop once the tip curvature reaches this, unless the outer patch has a neck.
    pub curvature_ceiling: f64,
    /// Stop once a neck narrower than this is found.
    pub min_neck_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminalStatus {
    TipBlowup,
    NeckResolved,
    TimeExhausted,
    OverlapLost,
    TipResolutionLost,
    OuterResolutionLost,
}

impl TerminalStatus {
    /// Statuses that end a run for a scientific rather than numerical reason.
    pub fn is_clean(self) -> bool {
        matches!(self, TerminalStatus::TipBlowup | TerminalStatus::NeckResolved | TerminalStatus::TimeExhausted)
    }

    pub fn name(self) -> &'static str {
        match self {
            TerminalStatus::TipBlowup => "TipBlowup",
            TerminalStatus::NeckResolved => "NeckResolved",
            TerminalStatus::TimeExhausted => "TimeExhausted",
            TerminalStatus::OverlapLost => "OverlapLost",
            TerminalStatus::TipResolutionLost => "TipResolutionLost",
            TerminalStatus::OuterResolutionLost => "OuterResolutionLost",
        }
    }
}

impl std::fmt::Display for TerminalStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// When to record diagnostics: every `every_steps` steps, and additionally whenever
/// `T - t` has shrunk by a factor `10^(1/per_decade)` since the last record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub every_steps: u64,
    pub per_decade: u32,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { every_steps: 1000, per_decade: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub records: Vec<DiagnosticsRecord>,
    /// Intersection counts at each probe line, one row per record.
    pub probe_counts: Vec<Vec<usize>>,
    pub terminal: TerminalStatus,
    pub steps: u64,
}

fn status_of(err: &Error) -> TerminalStatus {
    match err {
        Error::TipResolutionLost => TerminalStatus::TipResolutionLost,
        Error::OuterResolutionLost => TerminalStatus::OuterResolutionLost,
        Error::NonPositiveRadius { .. } => TerminalStatus::NeckResolved,
        _ => TerminalStatus::OverlapLost,
    }
}

/// Evolves `atlas` until a stop condition fires. `observer` sees the atlas at every record.
pub fn run_flow(
    atlas: &mut SurfaceAtlas,
    policy: &StepPolicy,
    sampling: &Sampling,
    stop: &StopConditions,
    probes: &[f64],
    observer: &mut dyn FnMut(&SurfaceAtlas, &DiagnosticsRecord),
) -> RunOutcome {
    let dt = cfl_dt(atlas.tip.dr, atlas.outer.dz, policy);
    let mut records = Vec::new();
    let mut probe_counts = Vec::new();
    let mut record = |atlas: &SurfaceAtlas, records: &mut Vec<DiagnosticsRecord>, probe_counts: &mut Vec<Vec<usize>>| {
        let (rec, counts) = sample(atlas, probes);
        observer(atlas, &rec);
        records.push(rec);
        probe_counts.push(counts);
    };
    record(atlas, &mut records, &mut probe_counts);
    if validate_atlas(atlas) != AtlasStatus::Ok {
        let terminal = match validate_atlas(atlas).into_result() {
            Err(e) => status_of(&e),
            Ok(()) => TerminalStatus::OverlapLost,
        };
        return RunOutcome { records, probe_counts, terminal, steps: 0 };
    }
    let decade_factor = if sampling.per_decade > 0 { 10f64.powf(-1.0 / sampling.per_decade as f64) } else { 0.0 };
    let mut next_left = atlas.time_to_vanish() * decade_factor;
    let mut steps: u64 = 0;
    let mut since_sample: u64 = 0;
    let mut neck_pending = false;
    let terminal = loop {
        if steps >= stop.max_steps {
            break TerminalStatus::TimeExhausted;
        }
        if atlas.time_to_vanish() - dt < stop.min_time_to_vanish.max(0.0) || atlas.time_to_vanish() - dt <= 0.0 {
            break TerminalStatus::TimeExhausted;
        }
        if let Err(e) = euler_step(atlas, dt) {
            return RunOutcome { records, probe_counts, terminal: status_of(&e), steps: steps + 1 };
        }
        steps += 1;
        since_sample += 1;
        if steps % policy.exchange_every as u64 == 0 {
            if let Err(e) = exchange_overlap(atlas, policy) {
                break status_of(&e);
            }
        }
        if !neck_pending && tip_curvature(&atlas.tip, atlas.params.n) >= stop.curvature_ceiling {
            // A neck elsewhere may still pinch first; keep going until it resolves or disappears.
            if find_neck(&atlas.outer).is_none() {
                break TerminalStatus::TipBlowup;
            }
            neck_pending = true;
        }
        let left = atlas.time_to_vanish();
        if since_sample >= sampling.every_steps || left <= next_left {
            since_sample = 0;
            while next_left >= left && decade_factor > 0.0 {
                next_left *= decade_factor;
            }
            record(atlas, &mut records, &mut probe_counts);
            match find_neck(&atlas.outer) {
                Some((_, r_min)) if r_min <= stop.min_neck_radius => {
                    return RunOutcome { records, probe_counts, terminal: TerminalStatus::NeckResolved, steps };
                }
                Some(_) => {}
                None => neck_pending = false,
            }
        }
    };
    if since_sample > 0 {
        record(atlas, &mut records, &mut probe_counts);
    }
    RunOutcome { records, probe_counts, terminal, steps }
}
