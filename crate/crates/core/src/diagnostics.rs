//! Curvature, neck and intersection measurements, and run classification.
//!
//! Sign convention: `H > 0` for convex surfaces (the tip of the unperturbed solution, a
//! round cylinder or sphere).

use crate::atlas::{OuterPatch, SurfaceAtlas, TipPatch};
use crate::error::{Error, Result};
use crate::evolve::TerminalStatus;
use crate::params::FlowParams;

/// Mean curvature at the interior points of the outer patch.
pub fn mean_curvature_outer(outer: &OuterPatch, n: u32) -> Vec<f64> {
    let dz = outer.dz;
    let nm1 = n as f64 - 1.0;
    outer
        .values()
        .windows(3)
        .map(|w| {
            let p = (w[2] - w[0]) / (2.0 * dz);
            let q = (w[2] + w[0] - 2.0 * w[1]) / (dz * dz);
            let g = 1.0 + p * p;
            nm1 / (w[1] * g.sqrt()) - q / (g * g.sqrt())
        })
        .collect()
}

/// `H0 = n z_rr(0)` from the reflected stencil `z_rr(0) = 2(z_1 - z_0)/dr^2`.
pub fn tip_curvature(tip: &TipPatch, n: u32) -> f64 {
    n as f64 * 2.0 * (tip.z[1] - tip.z[0]) / (tip.dr * tip.dr)
}

/// `H0 (T-t)^{gamma+1/2}`.
pub fn rescaled_tip_curvature(h0: f64, t: f64, params: &FlowParams) -> f64 {
    h0 * (params.vanishing_time - t).powf(params.gamma + 0.5)
}

/// Relative prominence a local minimum needs before it counts as a neck; rejects
/// round-off ripples on a numerically flat profile.
pub const NECK_PROMINENCE: f64 = 1e-9;

/// Deepest strict interior local minimum of `r(z)`, as `(z, r)`. The first and last two
/// points are excluded; ties go to the smaller `z`.
pub fn find_neck(outer: &OuterPatch) -> Option<(f64, f64)> {
    let r = outer.values();
    let len = r.len();
    if len < 5 {
        return None;
    }
    let mut prefix = vec![0.0; len];
    let mut suffix = vec![0.0; len];
    prefix[0] = r[0];
    for j in 1..len {
        prefix[j] = prefix[j - 1].max(r[j]);
    }
    suffix[len - 1] = r[len - 1];
    for j in (0..len - 1).rev() {
        suffix[j] = suffix[j + 1].max(r[j]);
    }
    let mut best: Option<usize> = None;
    for j in 2..len - 2 {
        if !(r[j] < r[j - 1] && r[j] < r[j + 1]) {
            continue;
        }
        let prominence = prefix[j - 1].min(suffix[j + 1]) - r[j];
        if prominence <= NECK_PROMINENCE * r[j] {
            continue;
        }
        if best.map_or(true, |b| r[j] < r[b]) {
            best = Some(j);
        }
    }
    best.map(|j| (outer.z_at(j), r[j]))
}

/// Pinch time from a least-squares line through `(t, r_min^2)`.
pub fn estimate_pinch_time(times: &[f64], radii: &[f64]) -> Result<f64> {
    let m = times.len().min(radii.len());
    if m < 2 {
        return Err(Error::DegenerateFit(format!("{m} points")));
    }
    let mf = m as f64;
    let tm = times[..m].iter().sum::<f64>() / mf;
    let ym = radii[..m].iter().map(|r| r * r).sum::<f64>() / mf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for k in 0..m {
        let dx = times[k] - tm;
        sxy += dx * (radii[k] * radii[k] - ym);
        sxx += dx * dx;
    }
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all samples at one time".into()));
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::DegenerateFit(format!("r_min^2 is not decreasing (slope {slope})")));
    }
    Ok(tm - ym / slope)
}

/// `r_min / sqrt(2(n-1)(T_hat - t))`; 1 for an exactly cylindrical neck.
pub fn neck_type1_ratio(r_min: f64, t: f64, t_hat: f64, n: u32) -> Result<f64> {
    if !(t < t_hat) {
        return Err(Error::DegenerateFit(format!("sample time {t} is not before the pinch estimate {t_hat}")));
    }
    Ok(r_min / (2.0 * (n as f64 - 1.0) * (t_hat - t)).sqrt())
}

/// Sign changes of `z - z0` along the profile curve (tip patch, then the outer points
/// beyond the tip endpoint).
pub fn vertical_line_intersections(atlas: &SurfaceAtlas, z0: f64) -> usize {
    let curve = atlas.curve();
    let mut count = 0;
    let mut prev: Option<bool> = None;
    for &(_, z) in &curve {
        let above = z >= z0;
        if let Some(p) = prev {
            if p != above {
                count += 1;
            }
        }
        prev = Some(above);
    }
    count
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub t_minus_t: f64,
    pub h0: f64,
    pub hs0: f64,
    pub r_neck: Option<f64>,
    pub z_neck: Option<f64>,
    pub intersections: usize,
    pub tip_points: usize,
    pub outer_points: usize,
}

/// Record for the current state, plus intersection counts at every probe line.
/// `intersections` holds the count at the first probe (0 without probes).
pub fn sample(atlas: &SurfaceAtlas, probes: &[f64]) -> (DiagnosticsRecord, Vec<usize>) {
    let p = &atlas.params;
    let t_minus_t = p.vanishing_time - atlas.t;
    let h0 = tip_curvature(&atlas.tip, p.n);
    let hs0 = h0 * t_minus_t.powf(p.gamma + 0.5);
    let neck = find_neck(&atlas.outer);
    let counts: Vec<usize> = probes.iter().map(|&z0| vertical_line_intersections(atlas, z0)).collect();
    let rec = DiagnosticsRecord {
        t: atlas.t,
        t_minus_t,
        h0,
        hs0,
        r_neck: neck.map(|(_, r)| r),
        z_neck: neck.map(|(z, _)| z),
        intersections: counts.first().copied().unwrap_or(0),
        tip_points: atlas.tip.live,
        outer_points: atlas.outer.live(),
    };
    (rec, counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    NearTypeII,
    FarTypeI,
    Undetermined,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::NearTypeII => "NearTypeII",
            Verdict::FarTypeI => "FarTypeI",
            Verdict::Undetermined => "Undetermined",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub drift_threshold: f64,
    pub neck_delta: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { drift_threshold: 0.15, neck_delta: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub hs0_final_drift: Option<f64>,
    pub neck_ratio_final: Option<f64>,
    pub pinch_time: Option<f64>,
    pub terminal: TerminalStatus,
    /// Set when there were too few records to judge.
    pub insufficient_records: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub evidence: Evidence,
}

pub const MIN_RECORDS: usize = 10;

/// Relative change of HS0 between the last record and the last record at least a decade
/// of `T - t` earlier. `None` if the run does not cover a full decade.
pub fn final_decade_drift(records: &[DiagnosticsRecord]) -> Option<f64> {
    let last = records.last()?;
    let start = records.iter().rev().find(|r| r.t_minus_t >= 10.0 * last.t_minus_t)?;
    Some(((last.hs0 - start.hs0) / start.hs0).abs())
}

/// Pinch-time estimate from the last quarter of the records that carry a neck, and the
/// Type-I ratio at the last of them.
pub fn final_neck_ratio(records: &[DiagnosticsRecord], n: u32) -> Option<(f64, f64)> {
    let necks: Vec<(f64, f64)> = records.iter().filter_map(|r| r.r_neck.map(|rn| (r.t, rn))).collect();
    if necks.len() < 3 {
        return None;
    }
    let window = (necks.len() / 4).max(3);
    let tail = &necks[necks.len() - window..];
    let times: Vec<f64> = tail.iter().map(|x| x.0).collect();
    let radii: Vec<f64> = tail.iter().map(|x| x.1).collect();
    let t_hat = estimate_pinch_time(&times, &radii).ok()?;
    let (t, r) = *tail.last()?;
    Some((t_hat, neck_type1_ratio(r, t, t_hat, n).ok()?))
}

pub fn classify(records: &[DiagnosticsRecord], terminal: TerminalStatus, thresholds: &Thresholds, n: u32) -> Classification {
    let mut evidence = Evidence {
        hs0_final_drift: None,
        neck_ratio_final: None,
        pinch_time: None,
        terminal,
        insufficient_records: records.len() < MIN_RECORDS,
    };
    if evidence.insufficient_records {
        return Classification { verdict: Verdict::Undetermined, evidence };
    }
    evidence.hs0_final_drift = final_decade_drift(records);
    if let Some((t_hat, ratio)) = final_neck_ratio(records, n) {
        evidence.pinch_time = Some(t_hat);
        evidence.neck_ratio_final = Some(ratio);
    }
    let verdict = match terminal {
        TerminalStatus::TipBlowup if evidence.hs0_final_drift.is_some_and(|d| d < thresholds.drift_threshold) => {
            Verdict::NearTypeII
        }
        TerminalStatus::NeckResolved
            if evidence.neck_ratio_final.is_some_and(|q| (q - 1.0).abs() <= thresholds.neck_delta) =>
        {
            Verdict::FarTypeI
        }
        _ => Verdict::Undetermined,
    };
    Classification { verdict, evidence }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::OuterPatch;

    #[test]
    fn cylinder_and_sphere_curvature() {
        let cyl = OuterPatch::new(0.01, 0.0, vec![0.2; 10]);
        assert!(mean_curvature_outer(&cyl, 2).iter().all(|&h| (h - 5.0).abs() < 1e-12));
        let dz = 1e-3;
        let sphere = OuterPatch::new(dz, -dz, vec![(1.0 - dz * dz).sqrt(), 1.0, (1.0 - dz * dz).sqrt()]);
        let h = mean_curvature_outer(&sphere, 2)[0];
        assert!((h - 2.0).abs() < 1e-5, "h = {h}");
    }

    #[test]
    fn spherical_cap_tip() {
        let (big_r, dr) = (0.1, 1e-4);
        let tip = TipPatch::new(dr, (0..20).map(|i| big_r - (big_r * big_r - (i as f64 * dr).powi(2)).sqrt()).collect());
        assert!((tip_curvature(&tip, 2) - 20.0).abs() < 1e-3);
        let flat = TipPatch::new(dr, vec![1.0; 5]);
        assert_eq!(tip_curvature(&flat, 2), 0.0);
    }

    #[test]
    fn neck_picks_deeper_minimum() {
        let mut r = vec![1.0; 40];
        r[10] = 0.8;
        r[30] = 0.7;
        let w = OuterPatch::new(0.1, 0.0, r.clone());
        assert_eq!(find_neck(&w).map(|x| x.1), Some(0.7));
        r[30] = 0.8;
        let tie = OuterPatch::new(0.1, 0.0, r);
        assert!((find_neck(&tie).unwrap().0 - 1.0).abs() < 1e-12);
        let mono = OuterPatch::new(0.1, 0.0, (0..40).map(|i| 1.0 + i as f64).collect());
        assert_eq!(find_neck(&mono), None);
    }

    #[test]
    fn cylinder_collapse_ratio_is_one() {
        let big_t = 0.01;
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 4e-4).collect();
        let radii: Vec<f64> = times.iter().map(|t| (2.0 * (big_t - t)).sqrt()).collect();
        let t_hat = estimate_pinch_time(&times, &radii).unwrap();
        assert!((t_hat - big_t).abs() < 1e-14);
        for (t, r) in times.iter().zip(&radii) {
            assert!((neck_type1_ratio(*r, *t, t_hat, 2).unwrap() - 1.0).abs() < 1e-10);
        }
        let grow: Vec<f64> = times.iter().map(|t| 1.0 + t).collect();
        assert!(matches!(estimate_pinch_time(&times, &grow), Err(Error::DegenerateFit(_))));
    }
}
