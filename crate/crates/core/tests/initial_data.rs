use mcf_core::atlas::{validate_atlas, AtlasStatus, SurfaceAtlas};
use mcf_core::initdata::{apply_far, apply_near, build_unperturbed, to_rescaled, Domain, InteriorModel, Patch};
use mcf_core::params::{derive_params, FlowParams, R1Policy};
use mcf_core::Error;

fn params(n: u32, gamma: f64) -> FlowParams {
    derive_params(n, gamma, 0.5, 1.0, 4.0, R1Policy::Default).unwrap()
}

fn atlas(p: &FlowParams, spacing: f64, z_max: f64) -> SurfaceAtlas {
    let d = Domain { dr: spacing, dz: spacing, r_tip_max: None, r_outer_min: None, z_outer_max: Some(z_max) };
    build_unperturbed(p, InteriorModel::Matched, &d).unwrap().0
}

fn lerp_tip(a: &SurfaceAtlas, r: f64) -> f64 {
    let u = r / a.tip.dr;
    let i = u.floor() as usize;
    let f = u - i as f64;
    a.tip.z[i] * (1.0 - f) + a.tip.z[i + 1] * f
}

fn lerp_outer(a: &SurfaceAtlas, r: f64) -> f64 {
    let v = a.outer.values();
    let j = v.windows(2).position(|w| w[0] <= r && r <= w[1]).unwrap();
    let f = (r - v[j]) / (v[j + 1] - v[j]);
    a.outer.z_at(j) + f * a.outer.dz
}

fn overlap_mismatch(a: &SurfaceAtlas, rs: &[f64]) -> f64 {
    rs.iter().map(|&r| (lerp_tip(a, r) - lerp_outer(a, r)).abs()).fold(0.0, f64::max)
}

#[test]
fn overlap_agreement_is_second_order() {
    for gamma in [0.5, 0.75] {
        let p = params(2, gamma);
        let h = 2e-3 * p.cylinder_radius0();
        let coarse = atlas(&p, h, 1.0);
        let fine = atlas(&p, h / 2.0, 1.0);
        let lo = coarse.outer.values()[2];
        let hi = coarse.tip.r_end() - 2.0 * h;
        // the joined profile has a slope jump at the matching radius, so stay clear of it
        let r1 = p.matching_radius();
        let rs: Vec<f64> = (0..400)
            .map(|k| lo + (hi - lo) * (k as f64 + 0.37) / 400.0)
            .filter(|r| (r - r1).abs() > 3.0 * h)
            .collect();
        let ratio = overlap_mismatch(&coarse, &rs) / overlap_mismatch(&fine, &rs);
        assert!(ratio >= 3.5, "gamma {gamma}: ratio {ratio}");
    }
}

#[test]
fn unperturbed_data_satisfy_invariants() {
    for (n, gamma) in [(2, 0.5), (2, 0.75), (2, 1.5), (3, 0.75), (3, 0.5)] {
        let p = params(n, gamma);
        let d = Domain::uniform(1e-3 * p.cylinder_radius0());
        let d = Domain { z_outer_max: Some(2.0), ..d };
        let (a, report) = build_unperturbed(&p, InteriorModel::Matched, &d).unwrap();
        assert_eq!(validate_atlas(&a), AtlasStatus::Ok);
        assert!(report.continuity_gap < 1e-12);
        assert!(report.min_slope_outer > 0.0);
        assert!(a.outer.values().iter().all(|&r| r < p.cylinder_radius0()));
    }
}

#[test]
fn near_dimple_is_c1_at_its_cutoff() {
    // slope jump across r_m, from second-order one-sided differences, shrinks at second order
    let p = params(2, 0.5);
    let r0 = p.cylinder_radius0();
    let (a0, r_m) = (0.1 * r0, 0.5 * r0);
    let jump = |h: f64| {
        let a = atlas(&p, h, 1.0);
        let near = apply_near(&a, a0, r_m).unwrap();
        let k = (r_m / h).round() as usize;
        let delta: Vec<f64> = (0..near.tip.live).map(|i| near.tip.z[i] - a.tip.z[i]).collect();
        let left = (3.0 * delta[k] - 4.0 * delta[k - 1] + delta[k - 2]) / (2.0 * h);
        let right = (-3.0 * delta[k] + 4.0 * delta[k + 1] - delta[k + 2]) / (2.0 * h);
        (left - right).abs()
    };
    let h = r_m / 50.0;
    let ratio = jump(h) / jump(h / 2.0);
    assert!(ratio > 3.5, "ratio {ratio}");
}

#[test]
fn near_dimple_raises_tip_by_a0() {
    let p = params(2, 0.5);
    let a = atlas(&p, 1e-3 * p.cylinder_radius0(), 1.0);
    let near = apply_near(&a, 0.02, 0.08).unwrap();
    assert!((near.tip.z[0] - 0.02).abs() < 1e-15);
    assert_eq!(validate_atlas(&near), AtlasStatus::Ok);
}

#[test]
fn near_dimple_rejects_bad_cutoff() {
    let p = params(2, 0.75);
    let a = atlas(&p, 1e-3 * p.cylinder_radius0(), 1.0);
    assert!(matches!(apply_near(&a, 0.01, 0.0), Err(Error::InvalidPerturbation(_))));
    assert!(matches!(apply_near(&a, 0.01, 1.0), Err(Error::InvalidPerturbation(_))));
}

#[test]
fn far_dimple_is_local_and_c1() {
    let p = params(2, 0.75);
    let a = atlas(&p, 1e-3 * p.cylinder_radius0(), 2.0);
    let (z_a, z_b) = (1.0, 1.5);
    let far = apply_far(&a, 0.01, z_a, z_b).unwrap();
    for j in 0..a.outer.live() {
        let z = a.outer.z_at(j);
        if z <= z_a || z >= z_b {
            assert_eq!(a.outer.values()[j].to_bits(), far.outer.values()[j].to_bits());
        }
    }
    assert!(matches!(apply_far(&a, 0.01, 0.0, 0.5), Err(Error::InvalidPerturbation(_))));
    assert!(matches!(apply_far(&a, 0.01, 1.0, 50.0), Err(Error::InvalidPerturbation(_))));
    assert!(matches!(apply_far(&a, 1.0, z_a, z_b), Err(Error::InvalidPerturbation(_))));
    let same = apply_far(&a, 0.0, z_a, z_b).unwrap();
    assert_eq!(same.outer, a.outer);
}

#[test]
fn rescaled_boundary_value_vanishes() {
    let p = params(2, 0.75);
    let a = atlas(&p, 1e-3 * p.cylinder_radius0(), 20.0);
    let s = to_rescaled(&a, p.t0);
    let outer: Vec<_> = s.iter().filter(|x| x.patch == Patch::Outer).collect();
    // lambda climbs towards 0 as phi approaches sqrt(2n-2), like the quarter power of the gap
    assert!(outer.windows(2).all(|w| w[1].lambda >= w[0].lambda && w[1].lambda < 0.0));
    let last = outer.last().unwrap();
    assert!(last.phi > 1.41);
    let expected = -(2.0 - last.phi * last.phi).powf(0.25);
    assert!((last.lambda - expected).abs() < 1e-6 * expected.abs(), "lambda {} vs {expected}", last.lambda);
    assert!(last.lambda.abs() < 0.2 * p.amplitude(), "lambda {}", last.lambda);
}
