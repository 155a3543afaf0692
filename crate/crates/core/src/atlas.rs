//! The two-patch surface representation: `z(r)` near the tip, `r(z)` along the cylindrical end.

use std::sync::Arc;

use crate::error::Error;
use crate::initdata::CompositeProfile;
use crate::params::FlowParams;

/// Minimum number of live points a patch needs for the three-point stencils.
pub const MIN_LIVE: usize = 4;
/// Required overlap, in grid spacings.
pub const MIN_OVERLAP_CELLS: f64 = 3.0;

/// Graph `z(r)` on `r = i dr`, `i < live`. Removing the endpoint only decrements `live`.
#[derive(Debug, Clone, PartialEq)]
pub struct TipPatch {
    pub dr: f64,
    pub z: Vec<f64>,
    pub live: usize,
}

impl TipPatch {
    pub fn new(dr: f64, z: Vec<f64>) -> Self {
        let live = z.len();
        Self { dr, z, live }
    }

    pub fn values(&self) -> &[f64] {
        &self.z[..self.live]
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.z[..self.live]
    }

    pub fn r_at(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    pub fn end_index(&self) -> usize {
        self.live - 1
    }

    pub fn r_end(&self) -> f64 {
        self.r_at(self.end_index())
    }

    pub fn z_end(&self) -> f64 {
        self.z[self.end_index()]
    }

    pub fn remove_end(&mut self) {
        self.live = self.live.saturating_sub(1);
    }
}

/// Graph `r(z)` on `z = z_origin + i dz` for `start <= i < r.len()`.
/// The left endpoint is dropped by advancing `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterPatch {
    pub dz: f64,
    pub z_origin: f64,
    pub r: Vec<f64>,
    pub start: usize,
}

impl OuterPatch {
    pub fn new(dz: f64, z_left: f64, r: Vec<f64>) -> Self {
        Self { dz, z_origin: z_left, r, start: 0 }
    }

    pub fn live(&self) -> usize {
        self.r.len().saturating_sub(self.start)
    }

    pub fn values(&self) -> &[f64] {
        &self.r[self.start..]
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.r[self.start..]
    }

    /// z of the `j`-th live point.
    pub fn z_at(&self, j: usize) -> f64 {
        self.z_origin + (self.start + j) as f64 * self.dz
    }

    pub fn z_left(&self) -> f64 {
        self.z_at(0)
    }

    pub fn z_right(&self) -> f64 {
        self.z_at(self.live() - 1)
    }

    pub fn r_left(&self) -> f64 {
        self.r[self.start]
    }

    pub fn remove_left(&mut self) {
        self.start = (self.start + 1).min(self.r.len());
    }
}

/// Treatment of the last outer point (large z).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RightEnd {
    /// Evolves by the cylinder ODE `dr/dt = -(n-1)/r`.
    Cylinder,
    /// Reflection symmetry about the last point (`r_{N+1} = r_{N-1}`).
    Mirror,
}

#[derive(Debug, Clone)]
pub struct SurfaceAtlas {
    pub tip: TipPatch,
    pub outer: OuterPatch,
    pub params: FlowParams,
    pub t: f64,
    /// Stored `z` plus this offset is the `z` of the analytic construction
    /// (the stored tip sits at `z = 0` initially).
    pub z_shift: f64,
    pub right_end: RightEnd,
    /// The analytic profile the atlas was sampled from, if any.
    pub source: Option<Arc<CompositeProfile>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtlasStatus {
    Ok,
    TipResolutionLost,
    OuterResolutionLost,
    NotAGraph,
    OverlapLost,
}

impl AtlasStatus {
    pub fn into_result(self) -> Result<(), Error> {
        match self {
            AtlasStatus::Ok => Ok(()),
            AtlasStatus::TipResolutionLost => Err(Error::TipResolutionLost),
            AtlasStatus::OuterResolutionLost => Err(Error::OuterResolutionLost),
            AtlasStatus::OverlapLost => Err(Error::OverlapLost),
            AtlasStatus::NotAGraph => Err(Error::NotAGraph("non-finite value or non-positive outer radius".into())),
        }
    }
}

impl SurfaceAtlas {
    pub fn new(tip: TipPatch, outer: OuterPatch, params: FlowParams) -> Self {
        let t = params.t0;
        Self { tip, outer, params, t, z_shift: 0.0, right_end: RightEnd::Cylinder, source: None }
    }

    pub fn time_to_vanish(&self) -> f64 {
        self.params.vanishing_time - self.t
    }

    /// Tip points followed by the outer points lying beyond the tip endpoint,
    /// as `(r, z)` pairs along the profile curve.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> =
            self.tip.values().iter().enumerate().map(|(i, &z)| (self.tip.r_at(i), z)).collect();
        let z_end = self.tip.z_end();
        for (j, &r) in self.outer.values().iter().enumerate() {
            let z = self.outer.z_at(j);
            if z > z_end {
                pts.push((r, z));
            }
        }
        pts
    }
}

/// Checks the structural invariants; returns the first one violated.
pub fn validate_atlas(atlas: &SurfaceAtlas) -> AtlasStatus {
    let tip = &atlas.tip;
    let outer = &atlas.outer;
    if tip.live < MIN_LIVE {
        return AtlasStatus::TipResolutionLost;
    }
    if outer.live() < MIN_LIVE {
        return AtlasStatus::OuterResolutionLost;
    }
    if tip.values().iter().any(|z| !z.is_finite()) || outer.values().iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return AtlasStatus::NotAGraph;
    }
    let dr_overlap = tip.r_end() - outer.r_left();
    let dz_overlap = tip.z_end() - outer.z_left();
    if dr_overlap < MIN_OVERLAP_CELLS * tip.dr || dz_overlap < MIN_OVERLAP_CELLS * outer.dz {
        return AtlasStatus::OverlapLost;
    }
    AtlasStatus::Ok
}
