//! Mass, energy, and flow structure on top of the invariants.
//!
//! The effective mass is the ratio of the momentum-square density to the mass
//! form factor; it diverges where the form factor crosses zero, and the
//! inverse mass is the quantity that stays regular. Energies are assembled so
//! that the dispersion-level identity between the kinetic form and the
//! Hamiltonian holds on-shell by construction, which the tests pin down.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::invariants::{
    compute_i0, invariant_set, invariant_sweep, InvariantSet, PhysicalConstants, StringState,
};
use crate::quadrature::{QuadratureError, QuadratureSettings, C64};

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

/// Relative threshold on |frak_f| / jp below which the mass counts as
/// divergent.
pub const MASS_DIVERGENCE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechanicsError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("energy spread {spread:e} too small to fit a linear trend")]
    DegenerateFit { spread: f64 },
    #[error("momentum or reference amplitude too small to carry a phase")]
    ZeroMomentum,
}

/// 1 / m_eff = frak_f / (m0 jp). Regular through mass divergences.
pub fn inverse_effective_mass(inv: &InvariantSet, constants: &PhysicalConstants) -> f64 {
    inv.frak_f / (constants.m0 * inv.jp)
}

pub fn mass_divergent(inv: &InvariantSet) -> bool {
    inv.frak_f.abs() < MASS_DIVERGENCE_THRESHOLD * inv.jp
}

/// m_eff = m0 jp / frak_f, or None at a divergence.
pub fn effective_mass(inv: &InvariantSet, constants: &PhysicalConstants) -> Option<f64> {
    if mass_divergent(inv) {
        None
    } else {
        Some(constants.m0 * inv.jp / inv.frak_f)
    }
}

/// Profile and envelope self-energy e0 (2 int rho^2 + p).
pub fn internal_energy(state: &StringState) -> f64 {
    state.constants.e0 * (2.0 * state.profile.l2_norm_sq() + state.p)
}

/// Internal Hamiltonian: self-energy plus the frequency-spin cross term.
pub fn internal_hamiltonian(state: &StringState, inv: &InvariantSet) -> f64 {
    internal_energy(state)
        + state.constants.gamma * state.omega * inv.spin / (2.0 * state.constants.m0)
}

/// H = P^2 / (2 m0) + h_int.
pub fn hamiltonian(state: &StringState, inv: &InvariantSet) -> f64 {
    inv.p_sq / (2.0 * state.constants.m0) + internal_hamiltonian(state, inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParts {
    pub internal: f64,
    pub kinetic: f64,
    pub total: f64,
    pub mass_divergent: bool,
}

/// E = P^2 / (2 m_eff) + internal, computed through the inverse mass so the
/// kinetic part vanishes smoothly at a divergence instead of blowing up.
pub fn energy_parts(state: &StringState, inv: &InvariantSet) -> EnergyParts {
    let kinetic = 0.5 * inv.p_sq * inverse_effective_mass(inv, &state.constants);
    let internal = internal_energy(state);
    EnergyParts {
        internal,
        kinetic,
        total: internal + kinetic,
        mass_divergent: mass_divergent(inv),
    }
}

// ============================================================================
// mass curve and its divergences
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassPoint {
    pub omega: f64,
    pub jp: f64,
    pub js: f64,
    pub frak_f: f64,
    pub inverse_effective_mass: f64,
    pub effective_mass: Option<f64>,
    pub mass_divergent: bool,
    pub frak_f_budget: f64,
}

pub fn mass_curve(
    state: &StringState,
    omegas: &[f64],
    settings: &QuadratureSettings,
) -> Result<Vec<MassPoint>, QuadratureError> {
    let sweep = invariant_sweep(state, omegas, settings)?;
    Ok(sweep
        .iter()
        .map(|inv| MassPoint {
            omega: inv.omega,
            jp: inv.jp,
            js: inv.js,
            frak_f: inv.frak_f,
            inverse_effective_mass: inverse_effective_mass(inv, &state.constants),
            effective_mass: effective_mass(inv, &state.constants),
            mass_divergent: mass_divergent(inv),
            frak_f_budget: inv.budgets.frak_f,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergencePoint {
    pub omega: f64,
    /// Scan interval the sign change was bracketed in.
    pub bracket: [f64; 2],
    pub frak_f: f64,
    pub frak_f_budget: f64,
}

/// Frequencies where the mass form factor crosses zero: a uniform scan
/// brackets sign changes, bisection pins each root down to the width where
/// quadrature noise takes over.
pub fn find_divergences(
    state: &StringState,
    omega_min: f64,
    omega_max: f64,
    scan_n: usize,
    settings: &QuadratureSettings,
) -> Result<Vec<DivergencePoint>, QuadratureError> {
    if !(omega_max > omega_min) || scan_n < 2 {
        return Err(QuadratureError::InvalidGrid {
            reason: format!(
                "divergence scan needs an increasing range and >= 2 points, got [{omega_min}, {omega_max}] x {scan_n}"
            ),
        });
    }
    let frak = |w: f64| -> Result<f64, QuadratureError> {
        Ok(invariant_set(&state.with_omega(w), settings)?.frak_f)
    };
    let omegas: Vec<f64> = (0..scan_n)
        .map(|i| omega_min + (omega_max - omega_min) * i as f64 / (scan_n - 1) as f64)
        .collect();
    let scan: Vec<f64> = omegas
        .par_iter()
        .map(|&w| frak(w))
        .collect::<Result<_, _>>()?;

    let mut roots = Vec::new();
    for i in 0..scan_n - 1 {
        let bracket = [omegas[i], omegas[i + 1]];
        let (mut lo, mut hi) = (omegas[i], omegas[i + 1]);
        let (mut flo, fhi) = (scan[i], scan[i + 1]);
        if flo == 0.0 {
            roots.push((lo, bracket));
            continue;
        }
        if flo.signum() * fhi.signum() > 0.0 {
            continue;
        }
        while hi - lo > 1e-12 * (1.0 + lo.abs()) {
            let mid = 0.5 * (lo + hi);
            let fmid = frak(mid)?;
            if fmid == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fmid.signum() == flo.signum() {
                lo = mid;
                flo = fmid;
            } else {
                hi = mid;
            }
        }
        roots.push((0.5 * (lo + hi), bracket));
    }
    roots
        .into_iter()
        .map(|(w, bracket)| {
            let inv = invariant_set(&state.with_omega(w), settings)?;
            Ok(DivergencePoint {
                omega: w,
                bracket,
                frak_f: inv.frak_f,
                frak_f_budget: inv.budgets.frak_f,
            })
        })
        .collect()
}

// ============================================================================
// dispersion linearity
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    pub kappa: f64,
    pub p_sq: f64,
    pub energy: f64,
    pub spin: f64,
    pub hamiltonian: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearProbe {
    pub points: Vec<EnergySample>,
    pub fit: LinearFit,
}

/// S against E across momentum scales at fixed internal data. Both are
/// affine in kappa^2, so away from a mass divergence the samples fall on a
/// line S = slope E + intercept. At a divergence the kinetic term drops out
/// and E stops moving with kappa, which surfaces as DegenerateFit.
pub fn linearity_probe(
    state: &StringState,
    kappas: &[f64],
    settings: &QuadratureSettings,
) -> Result<LinearProbe, MechanicsError> {
    let points: Vec<EnergySample> = kappas
        .iter()
        .map(|&k| {
            let st = StringState { kappa: k, ..state.clone() };
            let inv = invariant_set(&st, settings)?;
            Ok(EnergySample {
                kappa: k,
                p_sq: inv.p_sq,
                energy: energy_parts(&st, &inv).total,
                spin: inv.spin,
                hamiltonian: hamiltonian(&st, &inv),
            })
        })
        .collect::<Result<_, MechanicsError>>()?;

    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.energy).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.spin).sum::<f64>() / n;
    let var: f64 = points.iter().map(|p| (p.energy - mean_x).powi(2)).sum();
    let spread = var.sqrt();
    if spread <= 1e-8 * (1.0 + mean_x.abs()) {
        return Err(MechanicsError::DegenerateFit { spread });
    }
    let cov: f64 = points
        .iter()
        .map(|p| (p.energy - mean_x) * (p.spin - mean_y))
        .sum();
    let slope = cov / var;
    let intercept = mean_y - slope * mean_x;
    let max_residual = points
        .iter()
        .map(|p| (p.spin - slope * p.energy - intercept).abs())
        .fold(0.0, f64::max);
    Ok(LinearProbe {
        points,
        fit: LinearFit { slope, intercept, max_residual },
    })
}

// ============================================================================
// internal evolution and frame structure
// ============================================================================

/// Advance the internal coordinate by delta: profile centers and envelope
/// center shift together, the phase offset absorbs omega delta / 2. All
/// trajectory invariants are unchanged.
pub fn evolve(state: &StringState, delta: f64) -> StringState {
    StringState {
        profile: state.profile.advanced(delta),
        q: state.q + delta,
        beta: (state.beta + 0.5 * state.omega * delta).rem_euclid(TAU),
        ..state.clone()
    }
}

/// Internal evolution plus the center-of-string drift Z -> Z + (delta/gamma) P.
pub fn evolve_with_drift(
    state: &StringState,
    delta: f64,
    settings: &QuadratureSettings,
) -> Result<StringState, QuadratureError> {
    let inv = invariant_set(state, settings)?;
    let mut next = evolve(state, delta);
    let scale = delta / state.constants.gamma;
    next.z = [
        state.z[0] + scale * inv.momentum[0],
        state.z[1] + scale * inv.momentum[1],
    ];
    Ok(next)
}

/// Boost generator B = m0 (Z - (xi0 / gamma) P), conserved along the drift.
pub fn galilei_invariant(state: &StringState, inv: &InvariantSet, xi0: f64) -> [f64; 2] {
    let m0 = state.constants.m0;
    let scale = xi0 / state.constants.gamma;
    [
        m0 * (state.z[0] - scale * inv.momentum[0]),
        m0 * (state.z[1] - scale * inv.momentum[1]),
    ]
}

/// Recover the phase offset from a measured momentum vector. The momentum
/// only sees e^{2 i beta}, so the answer is defined modulo pi and reported in
/// [0, pi).
pub fn recover_beta(
    state: &StringState,
    momentum: [f64; 2],
    settings: &QuadratureSettings,
) -> Result<f64, MechanicsError> {
    let m = C64::new(momentum[0], momentum[1]);
    let reference = StringState { beta: 0.0, ..state.clone() };
    let i0 = compute_i0(&reference, settings)?.value;
    if m.norm() < 1e-300 || i0.norm() < 1e-300 {
        return Err(MechanicsError::ZeroMomentum);
    }
    Ok((0.5 * (m.arg() - i0.arg())).rem_euclid(PI))
}

// ============================================================================
// canonical flow check
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowCheck {
    pub grid_n: usize,
    pub grid_radius: f64,
    pub max_interior_residual: f64,
    pub q_flow_rate: f64,
}

/// Discretized bracket flow of the curvature profile against its closed-form
/// transport, plus the envelope-center flow rate.
///
/// The curvature bracket is a derivative kernel with strength
/// gamma / (4 m0 e0); paired with the self-energy gradient 4 e0 rho it must
/// transport rho at rate gamma / m0. The centered-difference version of that
/// statement has an O(h^2) interior residual. The envelope pair (p, q)
/// carries bracket gamma / (m0 e0) against the gradient e0, so the center
/// moves at rate gamma / m0, exactly 1 in units where gamma = m0.
pub fn canonical_flow_check(state: &StringState, n: usize) -> FlowCheck {
    let c = &state.constants;
    let r = state.profile.support_radius(state.p, state.q, 1e-12);
    let n = n.max(5);
    let h = 2.0 * r / (n - 1) as f64;
    let rho: Vec<f64> = (0..n)
        .map(|j| state.profile.rho(-r + j as f64 * h))
        .collect();
    let bracket_strength = c.gamma / (4.0 * c.m0 * c.e0);
    let gradient_scale = 4.0 * c.e0;
    let mut max_residual = 0.0f64;
    for j in 1..n - 1 {
        let stencil = (rho[j + 1] - rho[j - 1]) / (2.0 * h);
        let flow = bracket_strength * gradient_scale * stencil;
        let closed = c.gamma / c.m0 * state.profile.rho_prime(-r + j as f64 * h);
        max_residual = max_residual.max((flow - closed).abs());
    }
    FlowCheck {
        grid_n: n,
        grid_radius: r,
        max_interior_residual: max_residual,
        q_flow_rate: (c.gamma / (c.m0 * c.e0)) * c.e0,
    }
}
