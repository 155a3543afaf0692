//! Bowl-soliton profiles.
//!
//! Both the unscaled bowl ODE and the rescaled F-profile problems have the form
//! `y'' = (1 + k y'^2) (K - (n-1) y'/x)` with `y(0) = y'(0) = 0`, so they share one
//! integrator: classical RK4 at a quarter of the storage spacing, started off the
//! axis with the even series `y = b2 x^2 + b4 x^4`.

use crate::error::{Error, Result};

/// Slopes beyond this are treated as a failure of the graph representation.
const SLOPE_OVERFLOW: f64 = 1e8;
const SUBSTEPS: usize = 4;

/// Curvature `z_rr` demanded by the bowl ODE.
pub fn bowl_rhs(r: f64, slope: f64, beta: f64, n: u32) -> Result<f64> {
    if r == 0.0 {
        if slope != 0.0 {
            return Err(Error::SingularInput(format!("slope {slope} at r = 0")));
        }
        return Ok(beta / n as f64);
    }
    if r < 0.0 {
        return Err(Error::SingularInput(format!("negative radius {r}")));
    }
    Ok(translator_rhs(r, slope, beta, 1.0, n as f64))
}

fn translator_rhs(x: f64, p: f64, forcing: f64, kappa: f64, n: f64) -> f64 {
    (1.0 + kappa * p * p) * (forcing - (n - 1.0) * p / x)
}

/// Values and slopes on the uniform grid `x_i = i h`.
#[derive(Debug, Clone, PartialEq)]
struct Sampled {
    values: Vec<f64>,
    slopes: Vec<f64>,
}

fn locate(h: f64, len: usize, x: f64) -> (usize, f64) {
    let last = len - 2;
    let u = (x / h).max(0.0);
    let i = (u.floor() as usize).min(last);
    (i, u - i as f64)
}

/// Cubic Hermite interpolant through grid values and slopes.
pub fn hermite_value(h: f64, values: &[f64], slopes: &[f64], x: f64) -> f64 {
    let (i, t) = locate(h, values.len(), x);
    let (y0, y1, m0, m1) = (values[i], values[i + 1], slopes[i] * h, slopes[i + 1] * h);
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1
}

/// Derivative of [`hermite_value`].
pub fn hermite_slope(h: f64, values: &[f64], slopes: &[f64], x: f64) -> f64 {
    let (i, t) = locate(h, values.len(), x);
    let (y0, y1, m0, m1) = (values[i], values[i + 1], slopes[i] * h, slopes[i + 1] * h);
    let t2 = t * t;
    ((6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * m1)
        / h
}

fn integrate_translator(forcing: f64, kappa: f64, n: u32, x_max: f64, h: f64) -> Result<Sampled> {
    if !(x_max > 0.0) || !(h > 0.0) || !x_max.is_finite() {
        return Err(Error::InvalidParams(format!("need x_max > 0 and spacing > 0, got {x_max}, {h}")));
    }
    let nf = n as f64;
    let steps = (x_max / h - 1e-9).ceil().max(1.0) as usize;
    let mut values = Vec::with_capacity(steps + 1);
    let mut slopes = Vec::with_capacity(steps + 1);
    values.push(0.0);
    slopes.push(0.0);

    let b2 = forcing / (2.0 * nf);
    let b4 = 2.0 * kappa * b2 * b2 * b2 / (nf + 2.0);
    let sub = h / SUBSTEPS as f64;
    let rhs = |x: f64, p: f64| translator_rhs(x, p, forcing, kappa, nf);

    let mut x = sub;
    let mut y = b2 * x * x + b4 * x.powi(4);
    let mut p = 2.0 * b2 * x + 4.0 * b4 * x.powi(3);
    let mut pending = SUBSTEPS - 1;
    for _ in 0..steps {
        for _ in 0..pending {
            let k1p = rhs(x, p);
            let k1y = p;
            let k2p = rhs(x + 0.5 * sub, p + 0.5 * sub * k1p);
            let k2y = p + 0.5 * sub * k1p;
            let k3p = rhs(x + 0.5 * sub, p + 0.5 * sub * k2p);
            let k3y = p + 0.5 * sub * k2p;
            let k4p = rhs(x + sub, p + sub * k3p);
            let k4y = p + sub * k3p;
            y += sub / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            p += sub / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            x += sub;
        }
        pending = SUBSTEPS;
        if !y.is_finite() || !p.is_finite() || p.abs() > SLOPE_OVERFLOW {
            return Err(Error::StepFailure { at: x, reason: format!("slope {p} left the graph regime") });
        }
        values.push(y);
        slopes.push(p);
    }
    Ok(Sampled { values, slopes })
}

/// Bowl translating with speed `beta` along the axis, `z(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BowlProfile {
    pub dr: f64,
    pub z_values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub beta: f64,
    pub n: u32,
}

impl BowlProfile {
    pub fn r_max(&self) -> f64 {
        (self.z_values.len() - 1) as f64 * self.dr
    }

    pub fn z(&self, r: f64) -> f64 {
        hermite_value(self.dr, &self.z_values, &self.slopes, r)
    }

    pub fn slope(&self, r: f64) -> f64 {
        hermite_slope(self.dr, &self.z_values, &self.slopes, r)
    }
}

pub fn integrate_bowl(beta: f64, n: u32, r_max: f64, dr: f64) -> Result<BowlProfile> {
    if beta < 0.0 || !beta.is_finite() {
        return Err(Error::InvalidParams(format!("bowl speed {beta} must be non-negative")));
    }
    let s = integrate_translator(beta, 1.0, n, r_max, dr)?;
    Ok(BowlProfile { dr, z_values: s.values, slopes: s.slopes, beta, n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FCase {
    GammaAbove { gamma: f64 },
    GammaHalf { a: f64 },
}

impl FCase {
    /// Right-hand side of the F-ODE for amplitude `amp`.
    pub fn forcing(&self, amp: f64) -> f64 {
        match *self {
            FCase::GammaAbove { gamma } => (gamma - 0.5) * amp,
            FCase::GammaHalf { a } => a * amp * amp,
        }
    }
}

/// Rescaled interior profile `F(zeta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FProfile {
    pub dzeta: f64,
    pub f_values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub amplitude: f64,
    pub case: FCase,
    pub n: u32,
}

impl FProfile {
    pub fn zeta_max(&self) -> f64 {
        (self.f_values.len() - 1) as f64 * self.dzeta
    }

    pub fn f(&self, zeta: f64) -> f64 {
        hermite_value(self.dzeta, &self.f_values, &self.slopes, zeta)
    }

    pub fn f_slope(&self, zeta: f64) -> f64 {
        hermite_slope(self.dzeta, &self.f_values, &self.slopes, zeta)
    }
}

pub fn solve_f(case: FCase, amplitude: f64, n: u32, zeta_max: f64, dzeta: f64) -> Result<FProfile> {
    if !(amplitude > 0.0) {
        return Err(Error::InvalidParams(format!("amplitude {amplitude} must be positive")));
    }
    match case {
        FCase::GammaAbove { gamma } if !(gamma > 0.5) => {
            return Err(Error::InvalidParams(format!("gamma {gamma} must exceed 1/2")))
        }
        FCase::GammaHalf { a } if !(a > 0.0) => return Err(Error::InvalidParams(format!("a {a} must be positive"))),
        _ => {}
    }
    let kappa = amplitude.powi(-4);
    let curve = integrate_translator(case.forcing(amplitude), kappa, n, zeta_max, dzeta)?;
    Ok(FProfile { dzeta, f_values: curve.values, slopes: curve.slopes, amplitude, case, n })
}
