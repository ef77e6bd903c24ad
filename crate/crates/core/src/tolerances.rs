//! Numerical tolerances shared by the analysis stages.
//!
//! Relative tolerances are scaled by the domain diameter or by the
//! oscillation of the stream function once a field is known; see
//! [`Scales`].

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Newton convergence on |grad psi|.
    pub newton_tol: f64,
    /// Orbit closure, relative to the domain diameter.
    pub closure_tol_rel: f64,
    /// Stream-function drift along a trace, relative to osc(psi).
    pub level_tol_rel: f64,
    /// |det H| below this is degenerate.
    pub degeneracy_tol: f64,
    /// |grad psi| below this (relative to osc/diameter) is treated as a fixed point.
    pub fixed_point_guard_rel: f64,
    /// Integrator relative tolerance for period computations.
    pub period_rtol: f64,
    /// Integrator relative tolerance for orbit classification.
    pub classify_rtol: f64,
    /// Time cap factor: cap = factor * diameter / median speed.
    pub cap_time_factor: f64,
    /// Unboundedness: T must exceed this multiple of the family median.
    pub unbounded_cap_factor: f64,
    /// Unboundedness: required growth per endpoint refinement.
    pub unbounded_growth: f64,
    /// (T_hi - T_lo)/T_lo below this is isochronous.
    pub isochronous_tol: f64,
    /// Level-curve step control: max turning / relative speed change per step.
    pub contour_resolution: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            closure_tol_rel: 1e-7,
            level_tol_rel: 1e-8,
            degeneracy_tol: 1e-8,
            fixed_point_guard_rel: 1e-9,
            period_rtol: 1e-12,
            classify_rtol: 1e-9,
            cap_time_factor: 1e4,
            unbounded_cap_factor: 1e3,
            unbounded_growth: 1.5,
            isochronous_tol: 1e-6,
            contour_resolution: 4e-3,
        }
    }
}

/// Field-dependent absolute scales derived from [`Tolerances`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub diameter: f64,
    pub oscillation: f64,
    pub median_speed: f64,
    pub tol: Tolerances,
}

impl Scales {
    pub fn closure_tol(&self) -> f64 {
        self.tol.closure_tol_rel * self.diameter
    }

    pub fn level_tol(&self) -> f64 {
        self.tol.level_tol_rel * self.oscillation.max(f64::MIN_POSITIVE)
    }

    pub fn fixed_point_guard(&self) -> f64 {
        self.tol.fixed_point_guard_rel * self.oscillation / self.diameter
    }

    pub fn max_time(&self) -> f64 {
        self.tol.cap_time_factor * self.diameter / self.median_speed.max(f64::MIN_POSITIVE)
    }
}
