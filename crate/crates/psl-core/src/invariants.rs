//! String states and their trajectory invariants.
//!
//! A state couples physical constants to a curvature profile, an internal
//! frequency, and the envelope parameters. Everything observable comes out of
//! two integrals over the envelope-weighted phase e^{i theta}: the amplitude
//! I0 and the ordered double integral that splits into the momentum-square
//! and spin invariants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::Profile;
use crate::quadrature::{
    integrate_envelope, ordered_double_integral, IntegralResult, QuadratureError,
    QuadratureSettings, TailDecay, UniformGrid, C64,
};

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("constant {name} must be finite and positive, got {value}")]
    NonPositiveConstant { name: &'static str, value: f64 },
    #[error("state field {name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("envelope stiffness p must be finite and positive, got {value}")]
    NonPositiveStiffness { value: f64 },
}

/// Coupling constants: boost scale gamma, bare mass m0, interaction scale e0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub gamma: f64,
    pub m0: f64,
    pub e0: f64,
}

impl PhysicalConstants {
    pub fn new(gamma: f64, m0: f64, e0: f64) -> Result<Self, StateError> {
        let c = Self { gamma, m0, e0 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), StateError> {
        for (name, value) in [("gamma", self.gamma), ("m0", self.m0), ("e0", self.e0)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(StateError::NonPositiveConstant { name, value });
            }
        }
        Ok(())
    }
}

/// Full configuration of one string: constants, curvature profile, internal
/// frequency omega, phase offset beta, envelope stiffness p and center -q,
/// momentum scale kappa, and the transverse position Z of the envelope center.
#[derive(Debug, Clone, PartialEq)]
pub struct StringState {
    pub constants: PhysicalConstants,
    pub profile: Profile,
    pub omega: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    pub z: [f64; 2],
}

impl StringState {
    /// Validates every field and normalizes beta into [0, 2 pi).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        constants: PhysicalConstants,
        profile: Profile,
        omega: f64,
        beta: f64,
        p: f64,
        q: f64,
        kappa: f64,
        z: [f64; 2],
    ) -> Result<Self, StateError> {
        let state = Self {
            constants,
            profile,
            omega,
            beta: beta.rem_euclid(TAU),
            p,
            q,
            kappa,
            z,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<(), StateError> {
        self.constants.validate()?;
        for (name, value) in [
            ("omega", self.omega),
            ("beta", self.beta),
            ("q", self.q),
            ("kappa", self.kappa),
            ("Z[0]", self.z[0]),
            ("Z[1]", self.z[1]),
        ] {
            if !value.is_finite() {
                return Err(StateError::NonFinite { name, value });
            }
        }
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(StateError::NonPositiveStiffness { value: self.p });
        }
        Ok(())
    }

    /// Same state with the internal frequency replaced (for sweeps).
    pub fn with_omega(&self, omega: f64) -> Self {
        Self { omega, ..self.clone() }
    }

    /// Phase theta(xi) = 2 I(xi) + omega xi + 2 beta, with I the running
    /// integral of the curvature profile.
    pub fn theta(&self, xi: f64) -> f64 {
        2.0 * self.profile.running_integral(xi) + self.omega * xi + 2.0 * self.beta
    }

    /// Upper bound on |theta'| = |2 rho + omega|.
    pub fn frequency_bound(&self) -> f64 {
        2.0 * self.profile.peak_bound() + self.omega.abs()
    }
}

/// I0 = (1/2) int exp(-p (xi+q)^2) e^{i theta(xi)} dxi.
pub fn compute_i0(
    state: &StringState,
    settings: &QuadratureSettings,
) -> Result<IntegralResult, QuadratureError> {
    let res = integrate_envelope(
        |xi| C64::cis(state.theta(xi)),
        state.p,
        state.q,
        state.frequency_bound(),
        settings,
    )?;
    Ok(IntegralResult {
        value: 0.5 * res.value,
        error_budget: 0.5 * res.error_budget,
    })
}

/// The ordered-integral pair: momentum-square density jp and spin density js,
/// both from one pass over
/// int_{xi > zeta} e^{i(theta(xi) - theta(zeta))} E(xi) E(zeta).
#[derive(Debug, Clone, Copy)]
pub struct OrderedPair {
    pub jp: f64,
    pub js: f64,
    pub error_budget: f64,
}

pub fn compute_ordered_pair(
    state: &StringState,
    settings: &QuadratureSettings,
) -> Result<OrderedPair, QuadratureError> {
    let freq = state.frequency_bound();
    let s1 = state.clone();
    let s2 = state.clone();
    let res = ordered_double_integral(
        move |xi| C64::cis(s1.theta(xi)),
        move |zeta| C64::cis(-s2.theta(zeta)),
        state.p,
        state.q,
        freq,
        settings,
    )?;
    Ok(OrderedPair {
        jp: 0.5 * res.value.re,
        js: -0.5 * res.value.im,
        error_budget: 0.5 * res.error_budget,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBudgets {
    pub i0: f64,
    pub jp: f64,
    pub js: f64,
    pub frak_f: f64,
}

/// Invariants of one state at its frequency: the amplitude I0, the densities
/// jp and js, the mass form factor frak_f = jp + (omega/2) js, and the
/// dimensionful momentum, momentum-square, and spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantSet {
    pub omega: f64,
    pub i0_re: f64,
    pub i0_im: f64,
    pub jp: f64,
    pub js: f64,
    pub frak_f: f64,
    /// [P3, P1] with P3 + i P1 = gamma kappa I0.
    pub momentum: [f64; 2],
    pub p_sq: f64,
    pub spin: f64,
    pub budgets: ErrorBudgets,
}

impl InvariantSet {
    pub fn i0(&self) -> C64 {
        C64::new(self.i0_re, self.i0_im)
    }
}

pub fn invariant_set(
    state: &StringState,
    settings: &QuadratureSettings,
) -> Result<InvariantSet, QuadratureError> {
    let i0 = compute_i0(state, settings)?;
    let pair = compute_ordered_pair(state, settings)?;
    let jp = i0.value.norm_sqr();
    let jp_budget = 2.0 * i0.value.norm() * i0.error_budget + i0.error_budget * i0.error_budget;
    let frak_f = jp + 0.5 * state.omega * pair.js;
    let gk = state.constants.gamma * state.kappa;
    Ok(InvariantSet {
        omega: state.omega,
        i0_re: i0.value.re,
        i0_im: i0.value.im,
        jp,
        js: pair.js,
        frak_f,
        momentum: [gk * i0.value.re, gk * i0.value.im],
        p_sq: gk * gk * jp,
        spin: 0.5 * state.constants.gamma * state.kappa * state.kappa * pair.js,
        budgets: ErrorBudgets {
            i0: i0.error_budget,
            jp: jp_budget,
            js: pair.error_budget,
            frak_f: jp_budget + 0.5 * state.omega.abs() * pair.error_budget,
        },
    })
}

/// Invariants over a list of frequencies, in input order. The per-frequency
/// computations are independent, so the result does not depend on how the
/// work is scheduled.
pub fn invariant_sweep(
    state: &StringState,
    omegas: &[f64],
    settings: &QuadratureSettings,
) -> Result<Vec<InvariantSet>, QuadratureError> {
    omegas
        .par_iter()
        .map(|&w| invariant_set(&state.with_omega(w), settings))
        .collect()
}

/// jp sampled over a uniform frequency grid, with the Gaussian tail envelope
/// that bounds what the grid misses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JpSamples {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
    pub error_budget: f64,
    pub tail: TailDecay,
}

pub fn jp_sweep(
    state: &StringState,
    grid: &UniformGrid,
    settings: &QuadratureSettings,
) -> Result<JpSamples, QuadratureError> {
    grid.validate()?;
    let results: Vec<IntegralResult> = grid
        .points()
        .par_iter()
        .map(|&w| compute_i0(&state.with_omega(w), settings))
        .collect::<Result<_, _>>()?;
    let values: Vec<f64> = results.iter().map(|r| r.value.norm_sqr()).collect();
    let error_budget = results
        .iter()
        .map(|r| 2.0 * r.value.norm() * r.error_budget + r.error_budget * r.error_budget)
        .fold(0.0, f64::max);

    // |I0(w)|^2 decays like exp(-(|w| - onset)^2 / (2p)) once |w| clears the
    // profile's frequency content; anchor the amplitude on the grid edges
    let onset = 2.0 * state.profile.peak_bound();
    let sigma_sq = state.p;
    let anchor = |w_abs: f64, jp_edge: f64| {
        if w_abs <= onset {
            return jp_edge;
        }
        let d = w_abs - onset;
        jp_edge / (-d * d / (2.0 * sigma_sq)).exp()
    };
    let amplitude = anchor(grid.min.abs(), values[0])
        .max(anchor(grid.max.abs(), *values.last().unwrap()));
    Ok(JpSamples {
        grid: *grid,
        values,
        error_budget,
        tail: TailDecay { amplitude, onset, sigma_sq },
    })
}
