//! Worldsheet reconstruction and cusp location.
//!
//! The transverse position over the worldsheet coordinates comes from a
//! sign-function kernel integrated against G = E e^{i theta}. The kernel is
//! piecewise constant in the integration variable, so each node needs only
//! two half-line envelope integrals. Differentiating the same formula gives
//! closed-form lightcone tangents with no quadrature at all; cusps are the
//! interior points where the spatial tangent d_plus + d_minus vanishes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invariants::StringState;
use crate::quadrature::{integrate_envelope_between, QuadratureError, QuadratureSettings, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldsheetError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("invalid patch: {reason}")]
    InvalidPatch { reason: String },
}

/// Rectangle in the (xi0, xi1) worldsheet coordinates. The string parameter
/// xi1 lives on the half-line, so xi1_min must be nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xi0_min: f64,
    pub xi0_max: f64,
    pub xi1_min: f64,
    pub xi1_max: f64,
}

impl Rect {
    fn validate(&self, xi0_n: usize, xi1_n: usize) -> Result<(), WorldsheetError> {
        let vals = [self.xi0_min, self.xi0_max, self.xi1_min, self.xi1_max];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(WorldsheetError::InvalidPatch {
                reason: "patch bounds must be finite".into(),
            });
        }
        if self.xi1_min < 0.0 {
            return Err(WorldsheetError::InvalidPatch {
                reason: format!(
                    "xi1 starts at {}, but the string parameter is nonnegative",
                    self.xi1_min
                ),
            });
        }
        for (lo, hi, n, name) in [
            (self.xi0_min, self.xi0_max, xi0_n, "xi0"),
            (self.xi1_min, self.xi1_max, xi1_n, "xi1"),
        ] {
            if n == 0 {
                return Err(WorldsheetError::InvalidPatch {
                    reason: format!("{name} needs at least one sample"),
                });
            }
            if n == 1 && hi != lo {
                return Err(WorldsheetError::InvalidPatch {
                    reason: format!("{name} range must collapse when n = 1"),
                });
            }
            if n > 1 && !(hi > lo) {
                return Err(WorldsheetError::InvalidPatch {
                    reason: format!("{name} range [{lo}, {hi}] must be increasing"),
                });
            }
        }
        Ok(())
    }
}

fn axis_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn check_xi1_grid(xi1_grid: &[f64]) -> Result<(), WorldsheetError> {
    if xi1_grid.is_empty() {
        return Err(WorldsheetError::InvalidPatch { reason: "xi1 grid is empty".into() });
    }
    if xi1_grid.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(WorldsheetError::InvalidPatch {
            reason: "xi1 grid entries must be finite and nonnegative".into(),
        });
    }
    if xi1_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(WorldsheetError::InvalidPatch {
            reason: "xi1 grid must be strictly increasing".into(),
        });
    }
    Ok(())
}

/// G(x) = exp(-p (x+q)^2) e^{i theta(x)}.
fn g_at(state: &StringState, x: f64) -> C64 {
    let e = (-state.p * (x + state.q) * (x + state.q)).exp();
    e * C64::cis(state.theta(x))
}

/// G'(x) = (-2 p (x+q) + i (2 rho + omega)) G(x).
fn g_prime(state: &StringState, x: f64) -> C64 {
    let phase_rate = 2.0 * state.profile.rho(x) + state.omega;
    C64::new(-2.0 * state.p * (x + state.q), phase_rate) * g_at(state, x)
}

/// Tangent along growing xi_plus: d_plus = -kappa G(xi_plus).
pub fn tangent_plus(state: &StringState, xi_plus: f64) -> C64 {
    -state.kappa * g_at(state, xi_plus)
}

/// Tangent along growing xi_minus: d_minus = kappa G(-xi_minus).
pub fn tangent_minus(state: &StringState, xi_minus: f64) -> C64 {
    state.kappa * g_at(state, -xi_minus)
}

fn lightcone(xi0: f64, xi1: f64) -> (f64, f64) {
    (xi1 + xi0, xi1 - xi0)
}

/// Spatial tangent d_plus + d_minus at a worldsheet point; cusps are its
/// interior zeros. On the endpoint line xi1 = 0 the two terms cancel
/// identically, floats included.
pub fn tangent_sum(state: &StringState, xi0: f64, xi1: f64) -> C64 {
    let (xp, xm) = lightcone(xi0, xi1);
    tangent_plus(state, xp) + tangent_minus(state, xm)
}

/// Both lightcone tangents along one constant-xi0 row.
pub fn tangents(state: &StringState, xi0: f64, xi1_grid: &[f64]) -> (Vec<C64>, Vec<C64>) {
    let mut d_plus = Vec::with_capacity(xi1_grid.len());
    let mut d_minus = Vec::with_capacity(xi1_grid.len());
    for &xi1 in xi1_grid {
        let (xp, xm) = lightcone(xi0, xi1);
        d_plus.push(tangent_plus(state, xp));
        d_minus.push(tangent_minus(state, xm));
    }
    (d_plus, d_minus)
}

/// One reconstructed position. The sign-function kernel takes the value 2
/// below -xi_minus, 0 between, and -2 above xi_plus, so against the kappa/2
/// prefactor the position is Z - kappa (A - B) with A the G-mass below
/// -xi_minus and B the G-mass above xi_plus. The same split holds when the
/// middle interval is reversed, since the overlap cancels pairwise.
pub fn reconstruct_point(
    state: &StringState,
    xi0: f64,
    xi1: f64,
    settings: &QuadratureSettings,
) -> Result<(C64, f64), QuadratureError> {
    let (xp, xm) = lightcone(xi0, xi1);
    let freq = state.frequency_bound();
    let a = integrate_envelope_between(
        |x| C64::cis(state.theta(x)),
        state.p,
        state.q,
        f64::NEG_INFINITY,
        -xm,
        freq,
        settings,
    )?;
    let b = integrate_envelope_between(
        |x| C64::cis(state.theta(x)),
        state.p,
        state.q,
        xp,
        f64::INFINITY,
        freq,
        settings,
    )?;
    let z = C64::new(state.z[0], state.z[1]);
    let x = z - state.kappa * (a.value - b.value);
    Ok((x, state.kappa.abs() * (a.error_budget + b.error_budget)))
}

/// Positions along one constant-xi0 row, with the worst node budget.
pub fn reconstruct_row(
    state: &StringState,
    xi0: f64,
    xi1_grid: &[f64],
    settings: &QuadratureSettings,
) -> Result<(Vec<C64>, f64), WorldsheetError> {
    check_xi1_grid(xi1_grid)?;
    let mut positions = Vec::with_capacity(xi1_grid.len());
    let mut budget = 0.0f64;
    for &xi1 in xi1_grid {
        let (x, b) = reconstruct_point(state, xi0, xi1, settings)?;
        positions.push(x);
        budget = budget.max(b);
    }
    Ok((positions, budget))
}

/// Sampled worldsheet patch: positions and both lightcone tangents on a
/// rectangular (xi0, xi1) grid, row-major with xi1 fastest. Complex values
/// are stored as [real, imaginary] pairs, which for positions means
/// [X3, X1].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldsheetPatch {
    pub xi0_grid: Vec<f64>,
    pub xi1_grid: Vec<f64>,
    pub positions: Vec<[f64; 2]>,
    pub d_plus: Vec<[f64; 2]>,
    pub d_minus: Vec<[f64; 2]>,
    pub error_budget: f64,
}

pub fn reconstruct(
    state: &StringState,
    rect: &Rect,
    xi0_n: usize,
    xi1_n: usize,
    settings: &QuadratureSettings,
) -> Result<WorldsheetPatch, WorldsheetError> {
    rect.validate(xi0_n, xi1_n)?;
    let xi0_grid = axis_points(rect.xi0_min, rect.xi0_max, xi0_n);
    let xi1_grid = axis_points(rect.xi1_min, rect.xi1_max, xi1_n);

    let rows: Vec<(Vec<C64>, f64)> = xi0_grid
        .par_iter()
        .map(|&xi0| reconstruct_row(state, xi0, &xi1_grid, settings))
        .collect::<Result<_, WorldsheetError>>()?;

    let n = xi0_grid.len() * xi1_grid.len();
    let mut positions = Vec::with_capacity(n);
    let mut d_plus = Vec::with_capacity(n);
    let mut d_minus = Vec::with_capacity(n);
    let mut error_budget = 0.0f64;
    for (&xi0, (row, budget)) in xi0_grid.iter().zip(&rows) {
        error_budget = error_budget.max(*budget);
        let (dp_row, dm_row) = tangents(state, xi0, &xi1_grid);
        for ((x, dp), dm) in row.iter().zip(dp_row).zip(dm_row) {
            positions.push([x.re, x.im]);
            d_plus.push([dp.re, dp.im]);
            d_minus.push([dm.re, dm.im]);
        }
    }
    Ok(WorldsheetPatch { xi0_grid, xi1_grid, positions, d_plus, d_minus, error_budget })
}

// ============================================================================
// cusps
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CuspPoint {
    pub xi0: f64,
    pub xi1: f64,
    /// Reconstructed transverse position at the cusp, as [X3, X1].
    pub position: [f64; 2],
    /// |d_plus + d_minus| left after the polish.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CuspScan {
    /// kappa = 0 makes every point a formal zero; nothing is reported.
    pub degenerate: bool,
    pub cusps: Vec<CuspPoint>,
    pub scan_xi0_n: usize,
    pub scan_xi1_n: usize,
}

/// Locate tangent-cancellation points inside `rect`. The scan density is
/// raised automatically until cells resolve the fastest phase oscillation,
/// so a coarse request cannot silently miss sign changes. Candidate cells
/// are polished with a regularized least-squares Newton step, which also
/// converges onto zero curves whose Jacobian is rank deficient. A polished
/// point counts as a cusp when its residual is below `tol` times the local
/// tangent scale |kappa| (|G(xi_plus)| + |G(-xi_minus)|).
pub fn find_cusps(
    state: &StringState,
    rect: &Rect,
    xi0_n: usize,
    xi1_n: usize,
    tol: f64,
    settings: &QuadratureSettings,
) -> Result<CuspScan, WorldsheetError> {
    rect.validate(xi0_n.max(2), xi1_n.max(2))?;
    if state.kappa == 0.0 {
        return Ok(CuspScan {
            degenerate: true,
            cusps: Vec::new(),
            scan_xi0_n: 0,
            scan_xi1_n: 0,
        });
    }

    let freq = state.frequency_bound().max(1e-3);
    let max_cell = 0.5 * std::f64::consts::PI / freq;
    let densify = |lo: f64, hi: f64, n: usize| -> usize {
        let needed = ((hi - lo) / max_cell).ceil() as usize + 1;
        n.max(2).max(needed)
    };
    let n0 = densify(rect.xi0_min, rect.xi0_max, xi0_n);
    let n1 = densify(rect.xi1_min, rect.xi1_max, xi1_n);
    let xs0 = axis_points(rect.xi0_min, rect.xi0_max, n0);
    let xs1 = axis_points(rect.xi1_min, rect.xi1_max, n1);

    let values: Vec<C64> = xs0
        .par_iter()
        .flat_map_iter(|&a| xs1.iter().map(move |&b| (a, b)))
        .map(|(a, b)| tangent_sum(state, a, b))
        .collect();
    let at = |i: usize, j: usize| values[i * n1 + j];

    // a cell is a candidate when both components straddle zero over its corners
    let straddles = |vals: [f64; 4]| {
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        min <= 0.0 && max >= 0.0
    };
    let mut candidates = Vec::new();
    for i in 0..n0 - 1 {
        for j in 0..n1 - 1 {
            let c = [at(i, j), at(i, j + 1), at(i + 1, j), at(i + 1, j + 1)];
            if straddles(c.map(|v| v.re)) && straddles(c.map(|v| v.im)) {
                candidates.push((0.5 * (xs0[i] + xs0[i + 1]), 0.5 * (xs1[j] + xs1[j + 1])));
            }
        }
    }

    let span0 = (rect.xi0_max - rect.xi0_min).max(1e-12);
    let span1 = (rect.xi1_max - rect.xi1_min).max(1e-12);
    let mut found: Vec<(f64, f64, f64)> = Vec::new();
    for &(mut a, mut b) in &candidates {
        for _ in 0..60 {
            let t = tangent_sum(state, a, b);
            let (xp, xm) = lightcone(a, b);
            let gp = -state.kappa * g_prime(state, xp);
            let gm = -state.kappa * g_prime(state, -xm);
            // dT/dxi0 = gp - gm, dT/dxi1 = gp + gm
            let j00 = gp.re - gm.re;
            let j01 = gp.re + gm.re;
            let j10 = gp.im - gm.im;
            let j11 = gp.im + gm.im;
            // normal equations with a tiny Tikhonov floor keep the step
            // defined when the zero set is a curve instead of a point
            let a00 = j00 * j00 + j10 * j10;
            let a01 = j00 * j01 + j10 * j11;
            let a11 = j01 * j01 + j11 * j11;
            let lam = 1e-12 * (a00 + a11) + 1e-300;
            let (m00, m01, m11) = (a00 + lam, a01, a11 + lam);
            let det = m00 * m11 - m01 * m01;
            let r0 = -(j00 * t.re + j10 * t.im);
            let r1 = -(j01 * t.re + j11 * t.im);
            let da = (r0 * m11 - r1 * m01) / det;
            let db = (r1 * m00 - r0 * m01) / det;
            a += da;
            b += db;
            if !(a.is_finite() && b.is_finite()) {
                break;
            }
            // abandon runners that leave the inflated search box
            if a < rect.xi0_min - span0 || a > rect.xi0_max + span0 {
                break;
            }
            if b < rect.xi1_min - span1 || b > rect.xi1_max + span1 {
                break;
            }
            if da.abs() + db.abs() <= 1e-13 * (1.0 + a.abs() + b.abs()) {
                break;
            }
        }
        if !(a.is_finite() && b.is_finite()) {
            continue;
        }
        // accept only zeros small against the local tangent scale; an
        // absolute cutoff would wave through any point where the envelope
        // has already decayed away
        let (xp, xm) = lightcone(a, b);
        let scale = state.kappa.abs() * (g_at(state, xp).norm() + g_at(state, -xm).norm());
        let t_norm = tangent_sum(state, a, b).norm();
        if !(scale > 0.0 && t_norm <= tol * scale) {
            continue;
        }
        // the endpoint line cancels identically; only interior zeros count
        if b.abs() < 1e-6 * span1 {
            continue;
        }
        if a < rect.xi0_min - 1e-9 * span0
            || a > rect.xi0_max + 1e-9 * span0
            || b < rect.xi1_min - 1e-9 * span1
            || b > rect.xi1_max + 1e-9 * span1
        {
            continue;
        }
        let residual = t_norm;
        let dup = found
            .iter()
            .any(|&(fa, fb, _)| (fa - a).abs() < 1e-6 * span0 && (fb - b).abs() < 1e-6 * span1);
        if !dup {
            found.push((a, b, residual));
        }
    }
    found.sort_by(|x, y| {
        (x.1, x.0)
            .partial_cmp(&(y.1, y.0))
            .expect("cusp coordinates are finite")
    });

    let cusps = found
        .into_par_iter()
        .map(|(a, b, residual)| {
            let (pos, _) = reconstruct_point(state, a, b, settings)?;
            Ok(CuspPoint {
                xi0: a,
                xi1: b,
                position: [pos.re, pos.im],
                residual,
            })
        })
        .collect::<Result<Vec<_>, QuadratureError>>()?;
    Ok(CuspScan {
        degenerate: false,
        cusps,
        scan_xi0_n: n0,
        scan_xi1_n: n1,
    })
}
