//! Flow parameters and the quantities derived from them.
//!
//! Conventions: the initial time is `t0 = 0` and the enveloping cylinder of radius
//! `r0 = sqrt(2(n-1)) e^{-tau0/2}` collapses at `T = e^{-tau0}`.

use crate::error::{Error, Result};

const HALF: f64 = 0.5;

/// How the interior matching radius `R1` (in the inner variable zeta) is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum R1Policy {
    /// `R1 = e^{gamma tau0 / 2}`.
    Default,
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    pub n: u32,
    pub gamma: f64,
    /// Translation parameter, only meaningful when `gamma = 1/2`.
    pub a: f64,
    pub c: f64,
    pub tau0: f64,
    /// Matching radius in the inner variable zeta.
    pub r1_zeta: f64,
    /// Bowl translation speed used by the bowl-ODE interior.
    pub beta: f64,
    /// Vanishing time `T`.
    pub vanishing_time: f64,
    pub t0: f64,
}

pub fn is_critical_gamma(gamma: f64) -> bool {
    (gamma - HALF).abs() < 1e-12
}

/// Derives `beta`, `T` and the default `R1` from the free constants.
pub fn derive_params(n: u32, gamma: f64, a: f64, c: f64, tau0: f64, r1: R1Policy) -> Result<FlowParams> {
    let mut problems = Vec::new();
    if n < 2 {
        problems.push(format!("n = {n} must be at least 2"));
    }
    if !gamma.is_finite() || gamma < HALF - 1e-12 {
        problems.push(format!("gamma = {gamma} must be >= 1/2"));
    }
    if !(c > 0.0) {
        problems.push(format!("c = {c} must be positive"));
    }
    if !tau0.is_finite() {
        problems.push("tau0 must be finite".to_string());
    }
    let critical = is_critical_gamma(gamma);
    if critical && n >= 2 {
        let bound = a * (2.0 * (n as f64) - 2.0).ln();
        if !(a > 0.0) {
            problems.push(format!("a = {a} must be positive when gamma = 1/2"));
        }
        if !(c > bound) {
            problems.push(format!("c = {c} must exceed a*log(2n-2) = {bound}"));
        }
    }
    let r1_zeta = match r1 {
        R1Policy::Default => (gamma * tau0 / 2.0).exp(),
        R1Policy::Explicit(v) => {
            if !(v > 0.0) || !v.is_finite() {
                problems.push(format!("R1 = {v} must be positive"));
            }
            v
        }
    };
    if !problems.is_empty() {
        return Err(Error::InvalidParams(problems.join("; ")));
    }

    let gamma = if critical { HALF } else { gamma };
    let beta = if critical {
        a * tau0.exp()
    } else {
        let shift = gamma - HALF;
        shift / c * (2.0 * n as f64 - 2.0).powf(-shift) * (-(gamma + HALF) * tau0).exp()
    };
    let params = FlowParams {
        n,
        gamma,
        a: if critical { a } else { 0.0 },
        c,
        tau0,
        r1_zeta,
        beta,
        vanishing_time: (-tau0).exp(),
        t0: 0.0,
    };
    let r1 = params.matching_radius();
    if r1 >= params.cylinder_radius0() {
        return Err(Error::InvalidParams(format!(
            "matching radius r1 = {r1} does not lie inside the cylinder radius {}",
            params.cylinder_radius0()
        )));
    }
    Ok(params)
}

impl FlowParams {
    pub fn is_critical(&self) -> bool {
        is_critical_gamma(self.gamma)
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    /// `2n - 2`, the squared rescaled cylinder radius.
    pub fn phi_max_sq(&self) -> f64 {
        2.0 * self.dim() - 2.0
    }

    /// Rescaled amplitude `A` of the interior data.
    pub fn amplitude(&self) -> f64 {
        if self.is_critical() {
            1.0 / (self.c - self.a * self.phi_max_sq().ln())
        } else {
            self.c * self.phi_max_sq().powf(self.gamma - HALF)
        }
    }

    /// Right-hand side constant of the F-profile ODE.
    pub fn f_forcing(&self) -> f64 {
        let amp = self.amplitude();
        if self.is_critical() {
            self.a * amp * amp
        } else {
            (self.gamma - HALF) * amp
        }
    }

    /// Factor `s` with `zeta = r s` at the initial time.
    pub fn zeta_scale(&self) -> f64 {
        ((self.gamma + HALF) * self.tau0).exp()
    }

    /// Weight `e^{-2 gamma tau0}` multiplying F in the interior data.
    pub fn interior_weight(&self) -> f64 {
        (-2.0 * self.gamma * self.tau0).exp()
    }

    /// Unscaled matching radius `r1`.
    pub fn matching_radius(&self) -> f64 {
        self.r1_zeta / self.zeta_scale()
    }

    /// `2(n-1) e^{-tau0}`, the squared initial cylinder radius.
    pub fn cylinder_radius0_sq(&self) -> f64 {
        self.phi_max_sq() * (-self.tau0).exp()
    }

    pub fn cylinder_radius0(&self) -> f64 {
        self.cylinder_radius0_sq().sqrt()
    }

    /// Radius of the enveloping cylinder at time `t`; zero at and after `T`.
    pub fn cylinder_radius(&self, t: f64) -> f64 {
        (2.0 * (self.dim() - 1.0) * (self.vanishing_time - t)).max(0.0).sqrt()
    }

    /// Translator speed whose bowl coincides with the F-profile of the interior data
    /// after the change to unscaled coordinates.
    pub fn matched_beta(&self) -> f64 {
        self.f_forcing() * self.zeta_scale() / (self.amplitude() * self.amplitude())
    }

    pub fn time_to_vanish(&self, t: f64) -> f64 {
        self.vanishing_time - t
    }
}
