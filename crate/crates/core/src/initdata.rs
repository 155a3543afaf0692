//! Initial data: the unperturbed matched profile, the near/far dimples, and the map to
//! the compactified rescaled variables `(phi, lambda)`.
//!
//! Stored coordinates put the tip at `z = 0`. The construction's own `z` (the one in
//! which the exterior is `c^{-1}(X - r^2)^{1/2-gamma}`) is stored `z` plus `z_shift`.

use std::sync::Arc;

use crate::atlas::{validate_atlas, AtlasStatus, OuterPatch, RightEnd, SurfaceAtlas, TipPatch};
use crate::error::{Error, Result};
use crate::params::FlowParams;
use crate::soliton::{integrate_bowl, solve_f, BowlProfile, FCase, FProfile};

/// Interior (bowl-scale) piece of the initial profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InteriorModel {
    /// The rescaled interior of the matched construction, built from `F`.
    #[default]
    Matched,
    /// The unscaled bowl ODE integrated with `params.beta`, continued by the exterior formula.
    Bowl,
}

/// `X - r^2` with `X = 2(n-1)e^{-tau0}`, factored to keep precision near the cylinder.
fn gap(sqrt_x: f64, r: f64) -> f64 {
    (sqrt_x - r) * (sqrt_x + r)
}

fn cylinder_sqrt(n: u32, tau0: f64) -> f64 {
    (2.0 * (n as f64 - 1.0) * (-tau0).exp()).sqrt()
}

fn check_exterior(r: f64, sqrt_x: f64) -> Result<()> {
    if !(r.abs() < sqrt_x) {
        return Err(Error::DomainError(format!("r = {r} is not inside the cylinder radius {sqrt_x}")));
    }
    Ok(())
}

/// Exterior profile for `gamma > 1/2`, continuity-shifted so that `z(r1) = z1`.
pub fn exterior_z(r: f64, r1: f64, z1: f64, c: f64, gamma: f64, tau0: f64, n: u32) -> Result<f64> {
    let sx = cylinder_sqrt(n, tau0);
    check_exterior(r, sx)?;
    check_exterior(r1, sx)?;
    let e = 0.5 - gamma;
    Ok(z1 + (gap(sx, r).powf(e) - gap(sx, r1).powf(e)) / c)
}

/// Exterior profile for `gamma = 1/2`, continuity-shifted so that `z(r1) = z1`.
/// The constant `c` cancels from the shifted form.
pub fn exterior_z_gamma_half(r: f64, r1: f64, z1: f64, a: f64, tau0: f64, n: u32) -> Result<f64> {
    let sx = cylinder_sqrt(n, tau0);
    check_exterior(r, sx)?;
    check_exterior(r1, sx)?;
    Ok(z1 - a * (gap(sx, r) / gap(sx, r1)).ln())
}

#[derive(Debug, Clone)]
enum Interior {
    Matched {
        f: FProfile,
        /// lambda at the matching point and at the tip.
        lambda1: f64,
        lambda0: f64,
        f_r1: f64,
    },
    Bowl(BowlProfile),
}

/// The analytic unperturbed profile `z(r)` on `[0, r0)`.
#[derive(Debug, Clone)]
pub struct CompositeProfile {
    params: FlowParams,
    interior: Interior,
    sqrt_x: f64,
    r1: f64,
    /// Stored-coordinate value at `r1`.
    z1: f64,
    z_shift: f64,
}

impl CompositeProfile {
    pub fn new(params: &FlowParams, model: InteriorModel, dr: f64) -> Result<Self> {
        let sqrt_x = params.cylinder_radius0();
        let r1 = params.matching_radius();
        check_exterior(r1, sqrt_x)?;
        let mut out = Self { params: params.clone(), interior: Interior::Bowl(integrate_bowl(0.0, params.n, 1.0, 1.0)?), sqrt_x, r1, z1: 0.0, z_shift: 0.0 };
        match model {
            InteriorModel::Matched => {
                let s = params.zeta_scale();
                let big_r1 = params.r1_zeta;
                let dzeta = (dr * s).min(big_r1 / 4000.0);
                let case = if params.is_critical() {
                    FCase::GammaHalf { a: params.a }
                } else {
                    FCase::GammaAbove { gamma: params.gamma }
                };
                let f = solve_f(case, params.amplitude(), params.n, big_r1 * (1.0 + 1e-9), dzeta)?;
                let lambda1 = out.lambda_exterior(r1);
                let f_r1 = f.f(big_r1);
                let lambda0 = lambda1 - params.interior_weight() * f_r1;
                if !(lambda0 < 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "interior data reaches lambda = {lambda0} >= 0 at the tip; increase tau0 or decrease R1"
                    )));
                }
                out.interior = Interior::Matched { f, lambda1, lambda0, f_r1 };
                out.z_shift = out.y_scale() * (-1.0 / lambda0) + out.critical_offset();
                out.z1 = out.exterior_true(r1) - out.z_shift;
            }
            InteriorModel::Bowl => {
                let h = dr.min(r1 / 4000.0);
                let bowl = integrate_bowl(params.beta, params.n, r1 * (1.0 + 1e-9), h)?;
                let z1 = bowl.z(r1);
                out.z_shift = out.exterior_true(r1) - z1;
                out.z1 = z1;
                out.interior = Interior::Bowl(bowl);
            }
        }
        Ok(out)
    }

    pub fn params(&self) -> &FlowParams {
        &self.params
    }

    pub fn matching_radius(&self) -> f64 {
        self.r1
    }

    pub fn z_at_matching(&self) -> f64 {
        self.z1
    }

    pub fn z_shift(&self) -> f64 {
        self.z_shift
    }

    /// Radius of the enveloping cylinder; the profile is defined on `[0, r_limit)`.
    pub fn r_limit(&self) -> f64 {
        self.sqrt_x
    }

    /// `e^{(gamma-1/2) tau0}`, the factor between `-1/lambda` and `z` at the initial time.
    fn y_scale(&self) -> f64 {
        if self.params.is_critical() {
            1.0
        } else {
            ((self.params.gamma - 0.5) * self.params.tau0).exp()
        }
    }

    fn critical_offset(&self) -> f64 {
        if self.params.is_critical() {
            self.params.a * self.params.tau0
        } else {
            0.0
        }
    }

    fn lambda_exterior(&self, r: f64) -> f64 {
        let p = &self.params;
        let w = gap(self.sqrt_x, r) * p.tau0.exp();
        if p.is_critical() {
            -1.0 / (p.c - p.a * w.ln())
        } else {
            -p.c * w.powf(p.gamma - 0.5)
        }
    }

    fn exterior_true(&self, r: f64) -> f64 {
        let p = &self.params;
        let w = gap(self.sqrt_x, r);
        if p.is_critical() {
            p.c - p.a * w.ln()
        } else {
            w.powf(0.5 - p.gamma) / p.c
        }
    }

    fn exterior_slope(&self, r: f64) -> f64 {
        let p = &self.params;
        let w = gap(self.sqrt_x, r);
        if p.is_critical() {
            2.0 * p.a * r / w
        } else {
            (2.0 * p.gamma - 1.0) * r * w.powf(-p.gamma - 0.5) / p.c
        }
    }

    /// Stored `z(r)`.
    pub fn z(&self, r: f64) -> Result<f64> {
        check_exterior(r, self.sqrt_x)?;
        if r < 0.0 {
            return Err(Error::DomainError(format!("negative radius {r}")));
        }
        if r > self.r1 {
            return Ok(self.exterior_true(r) - self.z_shift);
        }
        Ok(match &self.interior {
            Interior::Matched { f, lambda1, lambda0, f_r1 } => {
                let zeta = r * self.params.zeta_scale();
                let fz = f.f(zeta);
                let eps = self.params.interior_weight();
                let lambda = lambda1 + eps * (fz - f_r1);
                // -1/lambda + 1/lambda0 written without cancellation
                self.y_scale() * eps * fz / (lambda * lambda0)
            }
            Interior::Bowl(b) => b.z(r),
        })
    }

    /// `dz/dr` of the profile.
    pub fn slope(&self, r: f64) -> Result<f64> {
        check_exterior(r, self.sqrt_x)?;
        if r > self.r1 {
            return Ok(self.exterior_slope(r));
        }
        Ok(match &self.interior {
            Interior::Matched { f, lambda1, f_r1, .. } => {
                let s = self.params.zeta_scale();
                let zeta = r * s;
                let eps = self.params.interior_weight();
                let lambda = lambda1 + eps * (f.f(zeta) - f_r1);
                self.y_scale() * eps * f.f_slope(zeta) * s / (lambda * lambda)
            }
            Interior::Bowl(b) => b.slope(r),
        })
    }

    /// The radius at which the slope `dz/dr` first reaches `target`.
    pub fn radius_at_slope(&self, target: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.sqrt_x);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match self.slope(mid) {
                Ok(s) if s < target => lo = mid,
                _ => hi = mid,
            }
        }
        lo
    }

    /// Inverse of the stored profile: the `r` with `z(r) = z`.
    pub fn invert(&self, z: f64) -> Result<f64> {
        self.invert_with_slope(z).map(|(r, _)| r)
    }

    /// `r(z)` together with `dr/dz`. In the exterior both come from the closed-form inverse,
    /// so they stay meaningful where `r` has rounded to the cylinder radius.
    pub fn invert_with_slope(&self, z: f64) -> Result<(f64, f64)> {
        if z < 0.0 {
            return Err(Error::InversionError(format!("z = {z} lies left of the tip")));
        }
        if z > self.z1 {
            let p = &self.params;
            let zt = z + self.z_shift;
            let w = if p.is_critical() { ((p.c - zt) / p.a).exp() } else { (p.c * zt).powf(-1.0 / (p.gamma - 0.5)) };
            let r2 = self.sqrt_x * self.sqrt_x - w;
            if !(r2 > 0.0) {
                return Err(Error::InversionError(format!("no exterior radius for z = {z}")));
            }
            let r = r2.sqrt();
            let drdz = if p.is_critical() {
                w / (2.0 * p.a * r)
            } else {
                p.c * w.powf(p.gamma + 0.5) / ((2.0 * p.gamma - 1.0) * r)
            };
            return Ok((r, drdz));
        }
        let r = bisect_increasing(|r| self.z(r), 0.0, self.r1, z)?;
        Ok((r, 1.0 / self.slope(r)?))
    }
}

/// Root of `g(r) = target` for increasing `g` on `[lo, hi]`, to full precision.
fn bisect_increasing<G: Fn(f64) -> Result<f64>>(g: G, mut lo: f64, mut hi: f64, target: f64) -> Result<f64> {
    let (glo, ghi) = (g(lo)?, g(hi)?);
    if !(glo <= target && target <= ghi) {
        return Err(Error::InversionError(format!("z = {target} not bracketed by [{glo}, {ghi}]")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grid spacings and extents. `None` extents take defaults derived from the profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub dr: f64,
    pub dz: f64,
    pub r_tip_max: Option<f64>,
    pub r_outer_min: Option<f64>,
    pub z_outer_max: Option<f64>,
}

/// Tip patch ends where `dz/dr` reaches this, by default.
pub const TIP_SLOPE_DEFAULT: f64 = 4.0;
/// Outer patch starts where `dz/dr` reaches this, by default.
pub const OUTER_SLOPE_DEFAULT: f64 = 0.25;
/// The default domain ends where the profile is this close to the cylinder.
pub const CYLINDER_TOLERANCE: f64 = 1e-6;
/// Refuse to allocate outer patches larger than this.
pub const MAX_OUTER_POINTS: usize = 50_000_000;

impl Domain {
    pub fn uniform(spacing: f64) -> Self {
        Self { dr: spacing, dz: spacing, r_tip_max: None, r_outer_min: None, z_outer_max: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDataReport {
    pub r1: f64,
    pub z1: f64,
    pub continuity_gap: f64,
    pub min_slope_outer: f64,
    pub r_tip_max: f64,
    pub r_outer_min: f64,
    pub z_outer_max: f64,
    pub tip_points: usize,
    pub outer_points: usize,
}

pub fn build_unperturbed(
    params: &FlowParams,
    model: InteriorModel,
    domain: &Domain,
) -> Result<(SurfaceAtlas, InitialDataReport)> {
    let Domain { dr, dz, .. } = *domain;
    if !(dr > 0.0 && dz > 0.0) {
        return Err(Error::InvalidParams(format!("grid spacings must be positive, got dr = {dr}, dz = {dz}")));
    }
    let profile = CompositeProfile::new(params, model, dr)?;
    let r_lim = profile.r_limit();

    let r_tip_max = domain.r_tip_max.unwrap_or_else(|| profile.radius_at_slope(TIP_SLOPE_DEFAULT));
    let r_outer_min = domain.r_outer_min.unwrap_or_else(|| profile.radius_at_slope(OUTER_SLOPE_DEFAULT));
    if !(r_tip_max > 0.0 && r_tip_max < r_lim) {
        return Err(Error::DomainError(format!("tip extent {r_tip_max} outside (0, {r_lim})")));
    }
    if !(r_outer_min > 0.0 && r_outer_min < r_tip_max) {
        return Err(Error::DomainError(format!("outer patch start {r_outer_min} must lie in (0, {r_tip_max})")));
    }
    let z_outer_max = match domain.z_outer_max {
        Some(z) => z,
        None => profile.z(r_lim - CYLINDER_TOLERANCE)?,
    };

    let n_tip = (r_tip_max / dr + 1e-9).floor() as usize + 1;
    let tip_z = (0..n_tip).map(|i| profile.z(i as f64 * dr)).collect::<Result<Vec<_>>>()?;

    let z_left = profile.z(r_outer_min)?;
    if !(z_outer_max > z_left) {
        return Err(Error::DomainError(format!("z_outer_max {z_outer_max} must exceed the outer start {z_left}")));
    }
    let span = (z_outer_max - z_left) / dz;
    if span > MAX_OUTER_POINTS as f64 {
        return Err(Error::DomainError(format!(
            "outer patch would need {span:.3e} points; set an explicit z_outer_max"
        )));
    }
    let n_outer = span.floor() as usize + 1;
    let mut outer_r = Vec::with_capacity(n_outer);
    let mut min_slope = f64::INFINITY;
    for j in 0..n_outer {
        let z = z_left + j as f64 * dz;
        let (r, drdz) = if j == 0 { (r_outer_min, 1.0 / profile.slope(r_outer_min)?) } else { profile.invert_with_slope(z)? };
        if let Some(&prev) = outer_r.last() {
            // equal neighbours are allowed: far out the profile is flat to rounding
            if r < prev {
                return Err(Error::InversionError(format!("profile not monotone near z = {z}")));
            }
        }
        min_slope = min_slope.min(drdz);
        outer_r.push(r);
    }

    let z1 = profile.z_at_matching();
    let z1_interior = match model {
        InteriorModel::Matched | InteriorModel::Bowl => profile.z(profile.matching_radius())?,
    };
    let continuity_gap = (profile.exterior_true(profile.matching_radius()) - profile.z_shift() - z1_interior).abs();

    let report = InitialDataReport {
        r1: profile.matching_radius(),
        z1,
        continuity_gap,
        min_slope_outer: min_slope,
        r_tip_max: (n_tip - 1) as f64 * dr,
        r_outer_min,
        z_outer_max: z_left + (n_outer - 1) as f64 * dz,
        tip_points: n_tip,
        outer_points: n_outer,
    };
    let mut atlas = SurfaceAtlas::new(TipPatch::new(dr, tip_z), OuterPatch::new(dz, z_left, outer_r), params.clone());
    atlas.z_shift = profile.z_shift();
    atlas.right_end = RightEnd::Cylinder;
    atlas.source = Some(Arc::new(profile));
    validate_atlas(&atlas).into_result()?;
    Ok((atlas, report))
}

fn near_bump(r: f64, a0: f64, r_m: f64) -> f64 {
    let u = 1.0 - r * r / (r_m * r_m);
    a0 * u * u
}

/// Fine samples per unit `r_m` used to locate the non-monotone part of a near dimple.
const NEAR_SCAN: usize = 20_000;

/// Raises the tip region by `a0 (1 - r^2/r_m^2)^2` for `r <= r_m`.
pub fn apply_near(atlas: &SurfaceAtlas, a0: f64, r_m: f64) -> Result<SurfaceAtlas> {
    let r0 = atlas.params.cylinder_radius0();
    if !(r_m > 0.0 && r_m < r0) || !a0.is_finite() {
        return Err(Error::InvalidPerturbation(format!("near dimple needs 0 < r_m < {r0} and finite a0")));
    }
    let mut out = atlas.clone();
    if a0 == 0.0 {
        return Ok(out);
    }
    let profile = atlas
        .source
        .clone()
        .ok_or_else(|| Error::InvalidPerturbation("near dimple needs the analytic source profile".into()))?;
    let perturbed = |r: f64| -> Result<f64> { Ok(profile.z(r)? + if r <= r_m { near_bump(r, a0, r_m) } else { 0.0 }) };

    let dr = out.tip.dr;
    for (i, z) in out.tip.values_mut().iter_mut().enumerate() {
        let r = i as f64 * dr;
        if r <= r_m {
            *z += near_bump(r, a0, r_m);
        }
    }

    // Find the last place where the perturbed profile fails to increase; beyond it z(r) inverts.
    let mut r_star = 0.0;
    let mut z_cut = perturbed(0.0)?;
    let mut prev = z_cut;
    let mut running_max = z_cut;
    for k in 1..=NEAR_SCAN {
        let r = r_m * k as f64 / NEAR_SCAN as f64;
        let z = perturbed(r)?;
        running_max = running_max.max(z);
        if z <= prev {
            r_star = r;
            z_cut = running_max;
        }
        prev = z;
    }
    let z_rm = profile.z(r_m)?;
    if z_cut >= z_rm {
        return Err(Error::NotAGraph(format!("near dimple of amplitude {a0} folds the whole region r <= {r_m}")));
    }

    let outer = &mut out.outer;
    while outer.live() > 0 && outer.z_left() <= z_cut {
        outer.remove_left();
    }
    let z_left = outer.z_left();
    for j in 0..outer.live() {
        let z = z_left + j as f64 * outer.dz;
        if z >= z_rm {
            break;
        }
        let r = bisect_increasing(perturbed, r_star, r_m, z)?;
        let idx = outer.start + j;
        outer.r[idx] = r;
    }
    match validate_atlas(&out) {
        AtlasStatus::Ok => Ok(out),
        AtlasStatus::OverlapLost => Err(Error::NotAGraph("near dimple leaves no overlap between the patches".into())),
        other => other.into_result().map(|_| out),
    }
}

/// Pinches the outer profile by `a0 (z-z_a)^2 (z-z_b)^2 / (z_b-z_a)^4` on `(z_a, z_b)`.
pub fn apply_far(atlas: &SurfaceAtlas, a0: f64, z_a: f64, z_b: f64) -> Result<SurfaceAtlas> {
    if !(z_a < z_b) || !a0.is_finite() {
        return Err(Error::InvalidPerturbation(format!("far dimple needs z_a < z_b, got ({z_a}, {z_b})")));
    }
    let outer = &atlas.outer;
    if !(z_a > atlas.tip.z_end() && z_b <= outer.z_right()) {
        return Err(Error::InvalidPerturbation(format!(
            "far dimple ({z_a}, {z_b}) must lie in the outer patch beyond the tip patch, ({}, {}]",
            atlas.tip.z_end(),
            outer.z_right()
        )));
    }
    let mut out = atlas.clone();
    if a0 == 0.0 {
        return Ok(out);
    }
    let width4 = (z_b - z_a).powi(4);
    let live = out.outer.live();
    let min_r = (0..live)
        .filter(|&j| {
            let z = out.outer.z_at(j);
            z > z_a && z < z_b
        })
        .map(|j| out.outer.values()[j])
        .fold(f64::INFINITY, f64::min);
    if a0 >= min_r {
        return Err(Error::InvalidPerturbation(format!("far amplitude {a0} must stay below the radius {min_r}")));
    }
    for j in 0..live {
        let z = out.outer.z_at(j);
        if z > z_a && z < z_b {
            let d = (z - z_a) * (z - z_a) * (z - z_b) * (z - z_b) / width4;
            let idx = out.outer.start + j;
            out.outer.r[idx] -= a0 * d;
            if !(out.outer.r[idx] > 0.0) {
                return Err(Error::NonPositiveRadius { z });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationSpec {
    None,
    Near { a0: f64, r_m: f64 },
    Far { a0: f64, z_a: f64, z_b: f64 },
}

impl PerturbationSpec {
    pub fn apply(&self, atlas: &SurfaceAtlas) -> Result<SurfaceAtlas> {
        match *self {
            PerturbationSpec::None => Ok(atlas.clone()),
            PerturbationSpec::Near { a0, r_m } => apply_near(atlas, a0, r_m),
            PerturbationSpec::Far { a0, z_a, z_b } => apply_far(atlas, a0, z_a, z_b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Patch {
    Tip,
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaledSample {
    pub phi: f64,
    pub lambda: f64,
    pub patch: Patch,
}

/// `(phi, lambda)` at every live grid point of both patches, evaluated at time `t`.
pub fn to_rescaled(atlas: &SurfaceAtlas, t: f64) -> Vec<RescaledSample> {
    let p = &atlas.params;
    let left = p.vanishing_time - t;
    let root = left.sqrt();
    let to_lambda = |z: f64| {
        let zt = z + atlas.z_shift;
        let y = if p.is_critical() { zt + p.a * left.ln() } else { zt * left.powf(p.gamma - 0.5) };
        -1.0 / y
    };
    let mut out = Vec::with_capacity(atlas.tip.live + atlas.outer.live());
    for (i, &z) in atlas.tip.values().iter().enumerate() {
        out.push(RescaledSample { phi: atlas.tip.r_at(i) / root, lambda: to_lambda(z), patch: Patch::Tip });
    }
    for (j, &r) in atlas.outer.values().iter().enumerate() {
        out.push(RescaledSample { phi: r / root, lambda: to_lambda(atlas.outer.z_at(j)), patch: Patch::Outer });
    }
    out
}
