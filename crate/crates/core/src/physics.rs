//! Physical constants, derived scalars of the eddy-current model and the
//! closed-form boundary-layer predictions (profiles, skin depth, slopes).

use std::f64::consts::{LN_10, PI, SQRT_2};

use num_complex::Complex64;
use thiserror::Error;

/// Vacuum permittivity (CODATA 2018), F/m.
pub const EPS0: f64 = 8.8541878128e-12;
/// Vacuum permeability, H/m.
pub const MU0: f64 = 4.0e-7 * PI;
/// Default angular frequency of every benchmark, rad/s.
pub const OMEGA_DEFAULT: f64 = 3.0e7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("{name} must be strictly positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error(
        "skin depth {ell} too large for the asymptotic regime (1/ell - H = {denominator} <= 0)"
    )]
    OutsideAsymptoticRegime { ell: f64, denominator: f64 },
}

fn require_positive(name: &'static str, value: f64) -> Result<f64, PhysicsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(PhysicsError::NonPositive { name, value })
    }
}

/// `exp(-i pi/4)` in closed form.
pub fn exp_minus_i_pi_4() -> Complex64 {
    Complex64::new(1.0, -1.0) / SQRT_2
}

/// All physical scalars of one run. Derived quantities are computed once in
/// [`PhysicalParams::new`] and never mutated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub omega: f64,
    pub eps0: f64,
    pub mu0: f64,
    pub sigma: f64,
    /// `sqrt(omega eps0 / sigma)`, the boundary-layer scale.
    pub delta: f64,
    /// `omega sqrt(eps0 mu0)`.
    pub kappa: f64,
    /// Complex decay rate `kappa exp(-i pi/4)` of the leading profile.
    pub lambda: Complex64,
    /// Classical skin depth `sqrt(2 / (omega mu0 sigma))`.
    pub ell: f64,
}

impl PhysicalParams {
    pub fn new(omega: f64, eps0: f64, mu0: f64, sigma: f64) -> Result<Self, PhysicsError> {
        let omega = require_positive("omega", omega)?;
        let eps0 = require_positive("eps0", eps0)?;
        let mu0 = require_positive("mu0", mu0)?;
        let sigma = require_positive("sigma", sigma)?;
        let delta = (omega * eps0 / sigma).sqrt();
        let kappa = omega * (eps0 * mu0).sqrt();
        Ok(Self {
            omega,
            eps0,
            mu0,
            sigma,
            delta,
            kappa,
            lambda: exp_minus_i_pi_4() * kappa,
            ell: skin_depth(omega, mu0, sigma)?,
        })
    }

    /// SI vacuum constants at the benchmark frequency.
    pub fn with_sigma(sigma: f64) -> Result<Self, PhysicsError> {
        Self::new(OMEGA_DEFAULT, EPS0, MU0, sigma)
    }

    /// Relative permittivity `1 + i/delta^2` of the conductor.
    pub fn conductor_permittivity(&self) -> Complex64 {
        Complex64::new(1.0, 1.0 / (self.delta * self.delta))
    }

    /// Coefficient `1/eps(delta)` of the curl-curl term, by subdomain.
    pub fn inverse_permittivity(&self, in_conductor: bool) -> Complex64 {
        if in_conductor {
            self.conductor_permittivity().inv()
        } else {
            Complex64::new(1.0, 0.0)
        }
    }
}

/// Classical half-space skin depth `sqrt(2 / (omega mu0 sigma))`.
pub fn skin_depth(omega: f64, mu0: f64, sigma: f64) -> Result<f64, PhysicsError> {
    let omega = require_positive("omega", omega)?;
    let mu0 = require_positive("mu0", mu0)?;
    let sigma = require_positive("sigma", sigma)?;
    Ok((2.0 / (omega * mu0 * sigma)).sqrt())
}

/// Decay slope of `log10 |H|` per metre predicted at an interface point with
/// mean curvature `mean_curv`.
pub fn theoretical_slope(params: &PhysicalParams, mean_curv: f64) -> f64 {
    (1.0 / params.ell - mean_curv) / LN_10
}

/// Size of the curvature term relative to the rest of the theoretical slope.
pub fn curv_ratio(params: &PhysicalParams, mean_curv: f64) -> Result<f64, PhysicsError> {
    let denominator = 1.0 / params.ell - mean_curv;
    if denominator <= 0.0 {
        return Err(PhysicsError::OutsideAsymptoticRegime {
            ell: params.ell,
            denominator,
        });
    }
    Ok(mean_curv / denominator)
}

/// Two-term high-conductivity expansion `ell (1 + H ell)` of the curved skin depth.
pub fn skin_depth_first_order(params: &PhysicalParams, mean_curv: f64) -> f64 {
    params.ell * (1.0 + mean_curv * params.ell)
}

/// Interface traces of the first two dielectric terms at one arc-length position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileTrace {
    pub h0: Complex64,
    pub h1: Complex64,
    pub xi: f64,
}

impl ProfileTrace {
    pub fn new(h0: Complex64, h1: Complex64, xi: f64) -> Self {
        Self { h0, h1, xi }
    }

    /// Trace pair for real Dirichlet data: `h0` real and `Re h1 = Im h1`.
    pub fn real_data(h0: f64, h1_re: f64, xi: f64) -> Self {
        Self {
            h0: Complex64::new(h0, 0.0),
            h1: Complex64::new(h1_re, h1_re),
            xi,
        }
    }
}

/// Leading conductor profile `exp(-lambda Y) h0` in the stretched variable `Y = y3/delta`.
pub fn profile_v0(params: &PhysicalParams, trace: &ProfileTrace, stretched: f64) -> Complex64 {
    (-params.lambda * stretched).exp() * trace.h0
}

/// First-order corrector `exp(-lambda Y) [h1 + (Y/2)(k + z'/r) h0]`.
pub fn profile_v1(
    params: &PhysicalParams,
    trace: &ProfileTrace,
    stretched: f64,
    curvature: f64,
    zprime_over_r: f64,
) -> Complex64 {
    let bracket = trace.h1 + trace.h0 * (0.5 * stretched * (curvature + zprime_over_r));
    (-params.lambda * stretched).exp() * bracket
}
