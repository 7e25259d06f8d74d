//! Constraint residuals and the dominant-operator analysis.
//!
//! Two scalar constraints tie the invariants together: an algebraic one
//! between momentum-square and spin, and a dispersion one expressing the spin
//! density as the Hilbert transform of the momentum-square density. The same
//! dispersion kernel, discretized, gives a matrix operator whose nullspace
//! and phase winding are checked against each other.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::invariants::{compute_i0, compute_ordered_pair, JpSamples, StringState};
use crate::quadrature::{
    hilbert_on_grid, ordered_double_integral, pv_grid_weights, QuadratureError,
    QuadratureSettings, UniformGrid, C64,
};

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

/// Frequency grid wide enough that the momentum-square density of moderate
/// profiles decays below the truncation threshold at the edges.
pub const DEFAULT_FREQUENCY_GRID: UniformGrid = UniformGrid { min: -14.0, max: 14.0, n: 561 };

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("phase unwrap failed near omega {omega}: step {step} stayed too large")]
    PhaseUnwrapFailure { omega: f64, step: f64 },
    #[error("winding total {total_turn} is {discrepancy} half-turns away from an integer count")]
    PhaseClosureMismatch { total_turn: f64, discrepancy: f64 },
}

// ============================================================================
// scalar constraints
// ============================================================================

/// Both constraint residuals at the state's own frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub omega: f64,
    /// P^2 js - 2 gamma S jp with the two jp routes deliberately crossed;
    /// the single-route version is zero by construction.
    pub phi1: f64,
    pub phi1_scale: f64,
    pub phi1_error_budget: f64,
    /// (gamma kappa^2 / 2) (js - H[jp] / pi).
    pub phi2: f64,
    pub phi2_error_budget: f64,
}

pub fn constraint_report(
    state: &StringState,
    samples: &JpSamples,
    settings: &QuadratureSettings,
) -> Result<ConstraintReport, QuadratureError> {
    let i0 = compute_i0(state, settings)?;
    let jp_fast = i0.value.norm_sqr();
    let jp_fast_budget = 2.0 * i0.value.norm() * i0.error_budget + i0.error_budget.powi(2);
    let pair = compute_ordered_pair(state, settings)?;

    let g2k2 = (state.constants.gamma * state.kappa).powi(2);
    let phi1 = g2k2 * pair.js * (jp_fast - pair.jp);
    let phi1_scale = g2k2 * pair.js.abs() * jp_fast.max(pair.jp);
    let phi1_error_budget = g2k2
        * (pair.js.abs() * (jp_fast_budget + pair.error_budget)
            + (jp_fast - pair.jp).abs() * pair.error_budget);

    let hil = hilbert_on_grid(&samples.grid, &samples.values, state.omega, &samples.tail, settings)?;
    let half_gk2 = 0.5 * state.constants.gamma * state.kappa * state.kappa;
    let phi2 = half_gk2 * (pair.js - hil.value / PI);
    let phi2_error_budget = half_gk2 * (pair.error_budget + hil.error_budget / PI);

    Ok(ConstraintReport {
        omega: state.omega,
        phi1,
        phi1_scale,
        phi1_error_budget,
        phi2,
        phi2_error_budget,
    })
}

/// Dispersion check at one frequency: spin density measured directly against
/// the Hilbert transform of the sampled momentum-square density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionCheck {
    pub omega: f64,
    pub js_direct: f64,
    pub js_from_jp: f64,
    pub residual: f64,
    pub error_budget: f64,
}

pub fn dispersion_residual(
    state: &StringState,
    samples: &JpSamples,
    omega: f64,
    settings: &QuadratureSettings,
) -> Result<DispersionCheck, QuadratureError> {
    let pair = compute_ordered_pair(&state.with_omega(omega), settings)?;
    let hil = hilbert_on_grid(&samples.grid, &samples.values, omega, &samples.tail, settings)?;
    let js_from_jp = hil.value / PI;
    Ok(DispersionCheck {
        omega,
        js_direct: pair.js,
        js_from_jp,
        residual: pair.js - js_from_jp,
        error_budget: pair.error_budget + hil.error_budget / PI,
    })
}

pub fn dispersion_sweep(
    state: &StringState,
    samples: &JpSamples,
    omegas: &[f64],
    settings: &QuadratureSettings,
) -> Result<Vec<DispersionCheck>, QuadratureError> {
    omegas
        .par_iter()
        .map(|&w| dispersion_residual(state, samples, w, settings))
        .collect()
}

// ============================================================================
// phase winding
// ============================================================================

/// Principal argument of g(omega) = jp - i js, taken straight from the
/// ordered integral (g is the ordered integral halved, so no sign juggling).
fn phase_of(state: &StringState, omega: f64, settings: &QuadratureSettings) -> Result<f64, QuadratureError> {
    let st = state.with_omega(omega);
    let freq = st.frequency_bound();
    let s1 = st.clone();
    let s2 = st.clone();
    let res = ordered_double_integral(
        move |xi| C64::cis(s1.theta(xi)),
        move |zeta| C64::cis(-s2.theta(zeta)),
        st.p,
        st.q,
        freq,
        settings,
    )?;
    Ok(res.value.arg())
}

fn wrap_to_pi(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindingReport {
    pub index: i64,
    pub total_turn: f64,
    pub discrepancy: f64,
    pub samples_used: usize,
}

/// Winding of arg g along [-omega_max, omega_max], closed at infinity where g
/// is carried by the slowly decaying spin density and its phase sits at
/// -pi/2 on the far left and +pi/2 on the far right. The count comes in
/// half-turns; a non-integer total flags a sampling problem instead of being
/// rounded away silently.
pub fn winding_index(
    state: &StringState,
    omega_max: f64,
    n_samples: usize,
    settings: &QuadratureSettings,
) -> Result<WindingReport, ConstraintError> {
    let n = n_samples.max(9);
    let omegas: Vec<f64> = (0..n)
        .map(|i| -omega_max + 2.0 * omega_max * i as f64 / (n - 1) as f64)
        .collect();
    let phases: Vec<f64> = omegas
        .par_iter()
        .map(|&w| phase_of(state, w, settings))
        .collect::<Result<_, _>>()?;

    let mut used = n;
    let mut span = 0.0;
    for i in 0..n - 1 {
        span += unwrap_step(
            state,
            omegas[i],
            phases[i],
            omegas[i + 1],
            phases[i + 1],
            settings,
            &mut used,
            0,
        )?;
    }

    let closure = (0.5 * PI - phases[n - 1]) + (phases[0] + 0.5 * PI);
    let total_turn = span + closure;
    let half_turns = total_turn / PI;
    let index = half_turns.round();
    let discrepancy = (half_turns - index).abs();
    if discrepancy >= 0.05 {
        return Err(ConstraintError::PhaseClosureMismatch { total_turn, discrepancy });
    }
    Ok(WindingReport {
        index: index as i64,
        total_turn,
        discrepancy,
        samples_used: used,
    })
}

#[allow(clippy::too_many_arguments)]
fn unwrap_step(
    state: &StringState,
    w_lo: f64,
    phi_lo: f64,
    w_hi: f64,
    phi_hi: f64,
    settings: &QuadratureSettings,
    used: &mut usize,
    depth: u32,
) -> Result<f64, ConstraintError> {
    let step = wrap_to_pi(phi_hi - phi_lo);
    if step.abs() < 0.5 * PI {
        return Ok(step);
    }
    if depth >= 48 || w_hi - w_lo <= f64::EPSILON * (1.0 + w_lo.abs()) {
        return Err(ConstraintError::PhaseUnwrapFailure { omega: w_lo, step });
    }
    let mid = 0.5 * (w_lo + w_hi);
    let phi_mid = phase_of(state, mid, settings)?;
    *used += 1;
    let left = unwrap_step(state, w_lo, phi_lo, mid, phi_mid, settings, used, depth + 1)?;
    let right = unwrap_step(state, mid, phi_mid, w_hi, phi_hi, settings, used, depth + 1)?;
    Ok(left + right)
}

// ============================================================================
// dominant-operator matrix
// ============================================================================

/// Matrix plus the sampled coefficient functions it was built from.
fn assemble_operator(
    state: &StringState,
    grid: &UniformGrid,
    settings: &QuadratureSettings,
) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>), QuadratureError> {
    grid.validate()?;
    let points = grid.points();
    let jp: Vec<f64> = points
        .par_iter()
        .map(|&w| Ok(compute_i0(&state.with_omega(w), settings)?.value.norm_sqr()))
        .collect::<Result<_, QuadratureError>>()?;
    let js: Vec<f64> = points
        .par_iter()
        .map(|&w| Ok(compute_ordered_pair(&state.with_omega(w), settings)?.js))
        .collect::<Result<_, QuadratureError>>()?;

    let n = grid.n;
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        let w = pv_grid_weights(grid, i)?;
        for j in 0..n {
            let mut kij = -jp[i] * w[j] / PI;
            if i == j {
                kij += js[i];
            }
            k[(i, j)] = kij;
        }
    }
    Ok((k, jp, js))
}

/// Discretization of K[f] = js f - (jp / pi) PV-integral of f on the grid.
/// Row i carries the principal-value weights for pole omega_i scaled by
/// jp(omega_i), so by the dispersion relation the sampled jp vector itself
/// is annihilated while the constant function is not.
pub fn dominant_operator_matrix(
    state: &StringState,
    grid: &UniformGrid,
    settings: &QuadratureSettings,
) -> Result<DMatrix<f64>, QuadratureError> {
    let (k, _, _) = assemble_operator(state, grid, settings)?;
    Ok(k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullspaceInfo {
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    pub nullspace_dim: usize,
    /// Right singular vectors for the below-threshold singular values.
    pub null_vectors: Vec<Vec<f64>>,
}

/// SVD nullspace at a relative threshold: sigma < threshold_ratio * sigma_max.
pub fn nullspace_analysis(matrix: &DMatrix<f64>, threshold_ratio: f64) -> NullspaceInfo {
    let svd = matrix.clone().svd(false, true);
    let sv = &svd.singular_values;
    let vt = svd.v_t.as_ref().expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).expect("singular values are finite"));
    let singular_values: Vec<f64> = order.iter().map(|&i| sv[i]).collect();
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let cutoff = threshold_ratio * sigma_max;
    let mut nullspace_dim = 0;
    let mut null_vectors = Vec::new();
    for &i in order.iter().rev() {
        if sv[i] < cutoff {
            nullspace_dim += 1;
            null_vectors.push(vt.row(i).iter().copied().collect());
        } else {
            break;
        }
    }
    NullspaceInfo { singular_values, nullspace_dim, null_vectors }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorAnalysis {
    pub grid: UniformGrid,
    pub matrix_dim: usize,
    /// Full spectrum, descending, for threshold audits.
    pub singular_values: Vec<f64>,
    pub sigma_min_over_max: f64,
    pub nullspace_dim: usize,
    /// |K jp| / |jp| for the sampled jp vector, which the dispersion
    /// relation says the operator annihilates.
    pub special_solution_residual: f64,
    /// Largest |cos angle| between a near-null vector and the sampled jp.
    pub special_solution_cosine: f64,
    /// |K 1| / (sigma_max sqrt(n)): how far the constant function is from
    /// solving the equation, on the operator's own scale.
    pub constant_solution_residual: f64,
    pub winding: WindingReport,
}

/// Full nullspace-versus-winding analysis of the dominant operator.
pub fn operator_analysis(
    state: &StringState,
    grid: &UniformGrid,
    threshold_ratio: f64,
    winding_samples: usize,
    settings: &QuadratureSettings,
) -> Result<OperatorAnalysis, ConstraintError> {
    let (k, jp, _) = assemble_operator(state, grid, settings)?;
    let null = nullspace_analysis(&k, threshold_ratio);
    let n = grid.n;
    let sigma_max = null.singular_values.first().copied().unwrap_or(0.0);

    let jp_vec = nalgebra::DVector::from_vec(jp.clone());
    let jp_norm = jp_vec.norm();
    let special_solution_residual =
        if jp_norm > 0.0 { (&k * &jp_vec).norm() / jp_norm } else { 0.0 };

    let special_solution_cosine = null
        .null_vectors
        .iter()
        .map(|v| {
            let dot: f64 = v.iter().zip(&jp).map(|(a, b)| a * b).sum();
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 && jp_norm > 0.0 { (dot / (norm * jp_norm)).abs() } else { 0.0 }
        })
        .fold(0.0, f64::max);

    let ones = nalgebra::DVector::from_element(n, 1.0);
    let constant_solution_residual = if sigma_max > 0.0 {
        (&k * &ones).norm() / (sigma_max * (n as f64).sqrt())
    } else {
        0.0
    };

    let omega_max = grid.max.abs().max(grid.min.abs());
    let winding = winding_index(state, omega_max, winding_samples, settings)?;

    let sigma_min_over_max = match (null.singular_values.first(), null.singular_values.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    };
    Ok(OperatorAnalysis {
        grid: *grid,
        matrix_dim: n,
        singular_values: null.singular_values.clone(),
        sigma_min_over_max,
        nullspace_dim: null.nullspace_dim,
        special_solution_residual,
        special_solution_cosine,
        constant_solution_residual,
        winding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::{invariant_set, jp_sweep, PhysicalConstants};
    use crate::profile::{GaussianBump, Profile};

    fn constants() -> PhysicalConstants {
        PhysicalConstants::new(1.0, 1.0, 1.0).unwrap()
    }

    fn flat_state(omega: f64) -> StringState {
        StringState::new(constants(), Profile::zero(), omega, 0.0, 1.0, 0.0, 1.0, [0.0, 0.0])
            .unwrap()
    }

    fn bumpy_state() -> StringState {
        let profile = Profile::new(vec![
            GaussianBump { a: 0.4, c: -0.3, w: 0.8 },
            GaussianBump { a: -0.25, c: 0.7, w: 1.1 },
        ])
        .unwrap();
        StringState::new(constants(), profile, 1.3, 0.6, 1.1, 0.2, 0.9, [0.0, 0.0]).unwrap()
    }

    #[test]
    fn cross_route_constraint_is_small() {
        let s = QuadratureSettings::default();
        let state = bumpy_state();
        let samples = jp_sweep(&state, &DEFAULT_FREQUENCY_GRID, &s).unwrap();
        let report = constraint_report(&state, &samples, &s).unwrap();
        assert!(
            report.phi1.abs() < 1e-9 * report.phi1_scale.max(1e-30),
            "phi1 {} at scale {}",
            report.phi1,
            report.phi1_scale
        );
        assert!(report.phi1.abs() <= report.phi1_error_budget + 1e-14);
    }

    #[test]
    fn dispersion_matches_closed_form() {
        let s = QuadratureSettings::default();
        let state = flat_state(1.0);
        let samples = jp_sweep(&state, &DEFAULT_FREQUENCY_GRID, &s).unwrap();
        let check = dispersion_residual(&state, &samples, 1.0, &s).unwrap();
        assert!(
            (check.js_direct - (-0.454_187_544_547_655_77)).abs() < 1e-10,
            "direct {}",
            check.js_direct
        );
        assert!(
            (check.js_from_jp - (-0.454_187_544_547_655_77)).abs() < 1e-7,
            "hilbert {}",
            check.js_from_jp
        );
        assert!(check.residual.abs() <= check.error_budget + 1e-12);
    }

    #[test]
    fn phi2_vanishes_for_real_states() {
        let s = QuadratureSettings::default();
        let state = bumpy_state();
        let samples = jp_sweep(&state, &DEFAULT_FREQUENCY_GRID, &s).unwrap();
        let report = constraint_report(&state, &samples, &s).unwrap();
        assert!(
            report.phi2.abs() < 1e-6,
            "phi2 {} budget {}",
            report.phi2,
            report.phi2_error_budget
        );
        assert!(report.phi2.abs() <= report.phi2_error_budget + 1e-12);
    }

    #[test]
    fn flat_profile_winding_is_one() {
        let s = QuadratureSettings::default();
        let state = flat_state(1.0);
        let report = winding_index(&state, 8.0, 65, &s).unwrap();
        assert_eq!(report.index, 1, "total turn {}", report.total_turn);
        assert!(report.discrepancy < 0.05);
    }

    #[test]
    fn operator_annihilates_jp_but_not_constants() {
        let s = QuadratureSettings::default();
        let state = flat_state(1.0);
        let grid = UniformGrid { min: -8.0, max: 8.0, n: 161 };
        let analysis = operator_analysis(&state, &grid, 1e-6, 33, &s).unwrap();
        assert_eq!(
            analysis.nullspace_dim,
            1,
            "spectrum tail {:?}",
            &analysis.singular_values[analysis.singular_values.len().saturating_sub(4)..]
        );
        assert!(analysis.sigma_min_over_max < 1e-6);
        assert!(
            analysis.special_solution_residual < 1e-5,
            "K jp residual {}",
            analysis.special_solution_residual
        );
        assert!(
            analysis.special_solution_cosine > 0.999,
            "cosine {}",
            analysis.special_solution_cosine
        );
        assert!(
            analysis.constant_solution_residual > 0.1,
            "constant residual {}",
            analysis.constant_solution_residual
        );
        assert_eq!(analysis.winding.index, 1);
    }

    #[test]
    fn phi1_uses_genuinely_different_routes() {
        // the two jp routes disagree at finite tolerance, so the crossed
        // product is nonzero noise rather than an exact algebraic zero
        let s = QuadratureSettings::default();
        let state = bumpy_state();
        let i0 = compute_i0(&state, &s).unwrap();
        let pair = compute_ordered_pair(&state, &s).unwrap();
        let diff = (i0.value.norm_sqr() - pair.jp).abs();
        assert!(diff > 0.0, "routes coincide bitwise, the check is vacuous");
        assert!(diff < 1e-10, "routes disagree beyond tolerance: {diff}");
        let inv = invariant_set(&state, &s).unwrap();
        assert_eq!(inv.jp, i0.value.norm_sqr(), "invariant jp is the fast route");
    }
}
