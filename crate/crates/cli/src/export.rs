//! CSV artifacts. Floats are written with `{:?}`, which round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use mcf_core::atlas::SurfaceAtlas;
use mcf_core::diagnostics::DiagnosticsRecord;

pub const RECORD_HEADER: &str = "t,T_minus_t,H0,HS0,r_neck,z_neck,intersections,tip_points,outer_points";

/// Largest number of points written per profile snapshot.
pub const PROFILE_POINTS: usize = 2000;

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| format!("{v:?}"))
}

pub fn records_to_csv(records: &[DiagnosticsRecord], metadata: &[String]) -> String {
    let mut out = String::new();
    for m in metadata {
        let _ = writeln!(out, "# {m}");
    }
    out.push_str(RECORD_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{},{},{},{},{}",
            r.t,
            r.t_minus_t,
            r.h0,
            r.hs0,
            opt(r.r_neck),
            opt(r.z_neck),
            r.intersections,
            r.tip_points,
            r.outer_points
        );
    }
    out
}

pub fn emit_csv(records: &[DiagnosticsRecord], metadata: &[String], path: &Path) -> anyhow::Result<()> {
    if records.is_empty() {
        bail!("refusing to write an empty record set to {}", path.display());
    }
    fs::write(path, records_to_csv(records, metadata)).with_context(|| format!("writing {}", path.display()))
}

fn field<T: std::str::FromStr>(s: &str, line: usize, name: &str) -> anyhow::Result<T> {
    s.parse().map_err(|_| anyhow::anyhow!("line {line}: bad {name} `{s}`"))
}

fn opt_field(s: &str, line: usize, name: &str) -> anyhow::Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(s, line, name).map(Some)
    }
}

/// Inverse of [`records_to_csv`]; `#` lines are skipped.
pub fn parse_records_csv(text: &str) -> anyhow::Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h == RECORD_HEADER => {}
        Some((k, h)) => bail!("line {}: unexpected header `{h}`", k + 1),
        None => bail!("no header"),
    }
    let mut out = Vec::new();
    for (k, l) in lines {
        let line = k + 1;
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 9 {
            bail!("line {line}: expected 9 fields, found {}", f.len());
        }
        out.push(DiagnosticsRecord {
            t: field(f[0], line, "t")?,
            t_minus_t: field(f[1], line, "T_minus_t")?,
            h0: field(f[2], line, "H0")?,
            hs0: field(f[3], line, "HS0")?,
            r_neck: opt_field(f[4], line, "r_neck")?,
            z_neck: opt_field(f[5], line, "z_neck")?,
            intersections: field(f[6], line, "intersections")?,
            tip_points: field(f[7], line, "tip_points")?,
            outer_points: field(f[8], line, "outer_points")?,
        });
    }
    Ok(out)
}

/// One row per (time, probe) pair.
pub fn probes_to_csv(records: &[DiagnosticsRecord], probes: &[f64], counts: &[Vec<usize>]) -> String {
    let mut out = String::from("t,z_probe,intersections\n");
    for (r, c) in records.iter().zip(counts) {
        for (z, n) in probes.iter().zip(c) {
            let _ = writeln!(out, "{:?},{:?},{}", r.t, z, n);
        }
    }
    out
}

/// Appends a downsampled snapshot of the atlas curve as `(t, patch, r, z)` rows.
pub fn append_profile(out: &mut String, atlas: &SurfaceAtlas) {
    let tip = atlas.tip.live;
    let curve = atlas.curve();
    let stride = curve.len().div_ceil(PROFILE_POINTS).max(1);
    let last = curve.len().saturating_sub(1);
    for (k, (r, z)) in curve.iter().enumerate() {
        if k % stride == 0 || k == last {
            let patch = if k < tip { "tip" } else { "outer" };
            let _ = writeln!(out, "{:?},{patch},{r:?},{z:?}", atlas.t);
        }
    }
}

pub const PROFILE_HEADER: &str = "t,patch,r,z";
