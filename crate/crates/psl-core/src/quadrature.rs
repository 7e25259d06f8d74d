//! Adaptive quadrature for Gaussian-envelope integrands, principal-value
//! integrals, and the ordered double integral.
//!
//! One engine underneath: a 15-point Gauss-Kronrod panel rule with
//! deterministic left-to-right bisection refinement. Oscillatory integrands
//! declare a frequency bound so the initial panelization resolves every
//! period; the envelope decides where the infinite domain is truncated.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::erfc;

pub type C64 = Complex64;

const PI: f64 = std::f64::consts::PI;

// ============================================================================
// settings and error types
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Relative tolerance on each integral.
    pub rel_tol: f64,
    /// Absolute tolerance floor.
    pub abs_tol: f64,
    /// Envelope threshold for domain truncation.
    pub truncation_eps: f64,
    /// Minimum panels per oscillation period of the integrand.
    pub oscillation_guard: f64,
    /// Hard cap on adaptive panel splits per integral.
    pub max_panels: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            truncation_eps: 1e-16,
            oscillation_guard: 8.0,
            max_panels: 30_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("adaptive refinement hit the {max_panels}-panel cap (worst panel error {error_estimate:e})")]
    NonConvergence {
        max_panels: usize,
        error_estimate: f64,
    },
    #[error("principal-value pole {pole} outside or too close to the ends of [{a}, {b}]")]
    PoleOutsideRange { pole: f64, a: f64, b: f64 },
    #[error("grid span misses too much envelope mass (outside fraction {outside_fraction:e})")]
    InsufficientSpan { outside_fraction: f64 },
    #[error("invalid grid: {reason}")]
    InvalidGrid { reason: String },
}

/// Value plus a conservative error budget (quadrature estimate, truncated
/// tails, and any interpolation terms that apply).
#[derive(Debug, Clone, Copy)]
pub struct IntegralResult {
    pub value: C64,
    pub error_budget: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PvResult {
    pub value: f64,
    pub error_budget: f64,
}

// ============================================================================
// Gauss-Kronrod 7-15 panel rule
// ============================================================================

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// One Kronrod-15 panel: returns (integral, |K15 - G7| error estimate).
fn gk15<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, (kronrod - gauss).norm() * half.abs())
}

// ============================================================================
// adaptive driver
// ============================================================================

struct Panel {
    a: f64,
    b: f64,
    value: C64,
}

struct Adaptive<'f, F> {
    f: &'f mut F,
    panels_left: usize,
    span: f64,
    record: Option<Vec<Panel>>,
}

impl<F: FnMut(f64) -> C64> Adaptive<'_, F> {
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        value: C64,
        err: f64,
        budget: f64,
    ) -> Result<(C64, f64), QuadratureError> {
        let width_floor = (b - a).abs() <= 1e-15 * self.span;
        if err <= budget || width_floor {
            if let Some(rec) = &mut self.record {
                rec.push(Panel { a, b, value });
            }
            return Ok((value, err));
        }
        if self.panels_left == 0 {
            return Err(QuadratureError::NonConvergence {
                max_panels: 0, // patched by the driver
                error_estimate: err,
            });
        }
        self.panels_left -= 1;
        let mid = 0.5 * (a + b);
        let (v1, e1) = gk15(self.f, a, mid);
        let (v2, e2) = gk15(self.f, mid, b);
        let (s1, r1) = self.refine(a, mid, v1, e1, 0.5 * budget)?;
        let (s2, r2) = self.refine(mid, b, v2, e2, 0.5 * budget)?;
        Ok((s1 + s2, r1 + r2))
    }
}

/// Adaptive integral of `f` over [a, b]. `freq_bound` is an upper bound on the
/// local angular frequency |d arg f / d xi|; the initial panelization keeps at
/// least `oscillation_guard` panels per period. Pass 0 for smooth integrands.
pub(crate) fn integrate_adaptive<F: FnMut(f64) -> C64>(
    f: &mut F,
    a: f64,
    b: f64,
    freq_bound: f64,
    settings: &QuadratureSettings,
) -> Result<IntegralResult, QuadratureError> {
    let (value, error_budget, _) = adaptive_run(f, a, b, freq_bound, settings, false)?;
    Ok(IntegralResult { value, error_budget })
}

fn adaptive_run<F: FnMut(f64) -> C64>(
    f: &mut F,
    a: f64,
    b: f64,
    freq_bound: f64,
    settings: &QuadratureSettings,
    record: bool,
) -> Result<(C64, f64, Vec<Panel>), QuadratureError> {
    if !(b > a) {
        return Ok((C64::new(0.0, 0.0), 0.0, Vec::new()));
    }
    let span = b - a;
    let max_width = if freq_bound > 0.0 {
        (2.0 * PI / freq_bound) / settings.oscillation_guard
    } else {
        span
    };
    let n0 = ((span / max_width).ceil() as usize).max(1);
    if n0 > settings.max_panels {
        return Err(QuadratureError::NonConvergence {
            max_panels: settings.max_panels,
            error_estimate: f64::INFINITY,
        });
    }

    // rough pass over the guard-sized panels fixes the tolerance scale
    let mut rough = Vec::with_capacity(n0);
    let mut total = C64::new(0.0, 0.0);
    for i in 0..n0 {
        let pa = a + span * (i as f64 / n0 as f64);
        let pb = a + span * ((i + 1) as f64 / n0 as f64);
        let (v, e) = gk15(f, pa, pb);
        total += v;
        rough.push((pa, pb, v, e));
    }
    let tol = settings.abs_tol.max(settings.rel_tol * total.norm());

    let mut run = Adaptive {
        f,
        panels_left: settings.max_panels - n0,
        span,
        record: record.then(Vec::new),
    };
    let mut value = C64::new(0.0, 0.0);
    let mut err = 0.0;
    for (pa, pb, v, e) in rough {
        let budget = tol * (pb - pa) / span;
        let (s, r) = run.refine(pa, pb, v, e, budget).map_err(|e| match e {
            QuadratureError::NonConvergence { error_estimate, .. } => {
                QuadratureError::NonConvergence {
                    max_panels: settings.max_panels,
                    error_estimate,
                }
            }
            other => other,
        })?;
        value += s;
        err += r;
    }
    Ok((value, err, run.record.unwrap_or_default()))
}

// ============================================================================
// Gaussian-envelope integrals
// ============================================================================

/// Truncation radius R with exp(-p (xi + q)^2) < eps for |xi| > R.
pub(crate) fn envelope_radius(p: f64, q: f64, eps: f64) -> f64 {
    q.abs() + ((1.0 / eps).ln() / p).sqrt()
}

/// int f(xi) exp(-p (xi+q)^2) dxi over the whole line, truncated where the
/// envelope falls below `truncation_eps`. The truncated tail mass joins the
/// error budget.
pub fn integrate_envelope<F: FnMut(f64) -> C64>(
    f: F,
    p: f64,
    q: f64,
    freq_bound: f64,
    settings: &QuadratureSettings,
) -> Result<IntegralResult, QuadratureError> {
    integrate_envelope_between(f, p, q, f64::NEG_INFINITY, f64::INFINITY, freq_bound, settings)
}

/// Same integrand restricted to [a, b]; either end may be infinite.
pub fn integrate_envelope_between<F: FnMut(f64) -> C64>(
    mut f: F,
    p: f64,
    q: f64,
    a: f64,
    b: f64,
    freq_bound: f64,
    settings: &QuadratureSettings,
) -> Result<IntegralResult, QuadratureError> {
    let r = envelope_radius(p, q, settings.truncation_eps);
    let lo = a.max(-r);
    let hi = b.min(r);

    // tail mass of the envelope beyond x, one side:
    // int_x^inf exp(-p (t+q)^2) dt = sqrt(pi/p)/2 * erfc(sqrt(p) (x+q))
    let one_side = |x: f64| 0.5 * (PI / p).sqrt() * erfc(p.sqrt() * x);
    let mut tail = 0.0;
    if a < -r {
        tail += one_side(r - q); // left tail, reflected
    }
    if b > r {
        tail += one_side(r + q);
    }

    if lo >= hi {
        return Ok(IntegralResult {
            value: C64::new(0.0, 0.0),
            error_budget: tail,
        });
    }

    let env = move |xi: f64| (-p * (xi + q) * (xi + q)).exp();
    let fmax = f(lo).norm().max(f(hi).norm()).max(1.0);
    let mut g = |xi: f64| f(xi) * env(xi);
    let res = integrate_adaptive(&mut g, lo, hi, freq_bound, settings)?;
    Ok(IntegralResult {
        value: res.value,
        error_budget: res.error_budget + tail * fmax,
    })
}

// ============================================================================
// principal value on an interval
// ============================================================================

/// PV int_a^b f(k)/(k - pole) dk by singularity subtraction:
/// the smooth part (f(k) - f(pole))/(k - pole) is integrated adaptively
/// (switching to f'(pole) within 1e-7 of the pole) and the removed part
/// contributes f(pole) * ln((b - pole)/(pole - a)).
pub fn pv_integral<F: FnMut(f64) -> f64>(
    mut f: F,
    pole: f64,
    a: f64,
    b: f64,
    settings: &QuadratureSettings,
) -> Result<PvResult, QuadratureError> {
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(QuadratureError::InvalidGrid {
            reason: format!("pv interval [{a}, {b}] must be finite and increasing"),
        });
    }
    let margin = 1e-10 * (b - a);
    if !(pole > a + margin && pole < b - margin) {
        return Err(QuadratureError::PoleOutsideRange { pole, a, b });
    }

    let f_pole = f(pole);
    let h = 1e-5 * (1.0 + pole.abs());
    let f_prime = (f(pole + h) - f(pole - h)) / (2.0 * h);

    let mut sub = |k: f64| {
        let d = k - pole;
        let v = if d.abs() < 1e-7 {
            f_prime
        } else {
            (f(k) - f_pole) / d
        };
        C64::new(v, 0.0)
    };
    // split at the pole so panel nodes keep their distance from the hot zone
    let left = integrate_adaptive(&mut sub, a, pole, 0.0, settings)?;
    let right = integrate_adaptive(&mut sub, pole, b, 0.0, settings)?;
    let log_term = f_pole * ((b - pole) / (pole - a)).ln();

    Ok(PvResult {
        value: left.value.re + right.value.re + log_term,
        error_budget: left.error_budget
            + right.error_budget
            + 4.0 * f64::EPSILON * log_term.abs(),
    })
}

// ============================================================================
// ordered double integral
// ============================================================================

/// Prefix antiderivative built from the recorded panels of one adaptive run.
/// Queries inside a panel re-integrate only the partial panel, so evaluation
/// stays cheap and deterministic.
struct Cumulative<F> {
    f: F,
    bounds: Vec<f64>,
    prefix: Vec<C64>,
    total: C64,
}

impl<F: FnMut(f64) -> C64> Cumulative<F> {
    fn build(f: F, panels: Vec<Panel>, total: C64) -> Self {
        let mut bounds = Vec::with_capacity(panels.len() + 1);
        let mut prefix = Vec::with_capacity(panels.len());
        let mut acc = C64::new(0.0, 0.0);
        for p in &panels {
            bounds.push(p.a);
            prefix.push(acc);
            acc += p.value;
        }
        bounds.push(panels.last().map_or(0.0, |p| p.b));
        Self { f, bounds, prefix, total }
    }

    fn eval(&mut self, x: f64) -> C64 {
        let first = *self.bounds.first().unwrap_or(&0.0);
        let last = *self.bounds.last().unwrap_or(&0.0);
        if x <= first {
            return C64::new(0.0, 0.0);
        }
        if x >= last {
            return self.total;
        }
        let i = self.bounds.partition_point(|&t| t <= x) - 1;
        let (partial, _) = gk15(&mut self.f, self.bounds[i], x);
        self.prefix[i] + partial
    }
}

/// int_{xi > zeta} g1(xi) g2(zeta) exp(-p ((xi+q)^2 + (zeta+q)^2)) dzeta dxi,
/// evaluated as an outer envelope integral against the cumulative inner
/// integral C(xi) = int_{-inf}^{xi} g2 * envelope. Cost stays close to two 1-D
/// integrals instead of a full 2-D product.
pub fn ordered_double_integral<F1, F2>(
    mut g1: F1,
    mut g2: F2,
    p: f64,
    q: f64,
    freq_bound: f64,
    settings: &QuadratureSettings,
) -> Result<IntegralResult, QuadratureError>
where
    F1: FnMut(f64) -> C64,
    F2: FnMut(f64) -> C64,
{
    let r = envelope_radius(p, q, settings.truncation_eps);
    let env = move |xi: f64| (-p * (xi + q) * (xi + q)).exp();

    let mut inner = |z: f64| g2(z) * env(z);
    let (inner_total, inner_err, panels) =
        adaptive_run(&mut inner, -r, r, freq_bound, settings, true)?;
    let mut cum = Cumulative::build(inner, panels, inner_total);

    let mut outer = |xi: f64| g1(xi) * env(xi) * cum.eval(xi);
    let res = integrate_adaptive(&mut outer, -r, r, freq_bound, settings)?;

    // inner error rides through the outer envelope mass sqrt(pi/p)
    let envelope_mass = (PI / p).sqrt();
    Ok(IntegralResult {
        value: res.value,
        error_budget: res.error_budget + inner_err * envelope_mass,
    })
}

// ============================================================================
// uniform grids, tail envelopes, grid Hilbert transform
// ============================================================================

/// Uniform sampling grid with odd point count (composite Simpson underneath).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl UniformGrid {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.min.is_finite() && self.max.is_finite() && self.max > self.min) {
            return Err(QuadratureError::InvalidGrid {
                reason: format!("grid bounds [{}, {}] must be finite and increasing", self.min, self.max),
            });
        }
        if self.n < 5 || self.n % 2 == 0 {
            return Err(QuadratureError::InvalidGrid {
                reason: format!("grid n must be odd and >= 5, got {}", self.n),
            });
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + (self.max - self.min) * (i as f64 / (self.n - 1) as f64)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }
}

/// Gaussian decay descriptor for a sampled function's tails:
/// |f(k)| <= amplitude * exp(-(|k| - onset)^2 / (2 sigma_sq)) for |k| > onset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDecay {
    pub amplitude: f64,
    pub onset: f64,
    pub sigma_sq: f64,
}

impl TailDecay {
    /// int_r^inf of the envelope, for r >= onset.
    pub fn mass_beyond(&self, r: f64) -> f64 {
        if self.amplitude <= 0.0 {
            return 0.0;
        }
        let s = self.sigma_sq.sqrt();
        self.amplitude * s * (PI / 2.0).sqrt()
            * erfc((r - self.onset) / (s * std::f64::consts::SQRT_2))
    }

    /// Envelope mass outside [a, b] (two-sided, symmetric envelope in |k|).
    pub fn mass_outside(&self, a: f64, b: f64) -> f64 {
        self.mass_beyond(b) + self.mass_beyond(-a)
    }
}

/// Composite Simpson weights for an odd-length uniform grid.
fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for (j, wj) in w.iter_mut().enumerate() {
        *wj = if j == 0 || j == n - 1 {
            h / 3.0
        } else if j % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    w
}

/// Fornberg finite-difference weights: derivative of order `m` at `x0` from
/// samples at `x`. Used for the 5-point first-derivative stencils.
fn fd_weights(x: &[f64], x0: f64, m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - x0;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=m.min(i)).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=m.min(i)).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Quadrature weights for PV int over the grid span of f(k)/(k - k_s), pole at
/// node `s`, as a dense row: Simpson subtraction plus a 5-point derivative
/// stencil at the pole node and the endpoint log term. The same row is what
/// the dominant-operator matrix uses, so "annihilated by the operator" and
/// "zero dispersion residual" are the same numerical statement.
pub fn pv_grid_weights(grid: &UniformGrid, s: usize) -> Result<Vec<f64>, QuadratureError> {
    grid.validate()?;
    let n = grid.n;
    if s >= n {
        return Err(QuadratureError::InvalidGrid {
            reason: format!("pole index {s} outside grid of {n} points"),
        });
    }
    let h = grid.step();
    let sw = simpson_weights(n, h);
    let ks = grid.point(s);
    let mut w = vec![0.0; n];
    let mut diag = 0.0;
    for j in 0..n {
        if j == s {
            continue;
        }
        let inv = 1.0 / (grid.point(j) - ks);
        w[j] = sw[j] * inv;
        diag -= sw[j] * inv;
    }
    // endpoint log term; clamped at half a cell so edge rows stay finite
    // (their prefactor is negligible on any adequately spanned grid)
    let num = (grid.max - ks).max(0.5 * h);
    let den = (ks - grid.min).max(0.5 * h);
    diag += (num / den).ln();
    w[s] += diag;

    // derivative stencil replaces the removable-singularity sample at the pole
    let w0 = (s as i64 - 2).clamp(0, n as i64 - 5) as usize;
    let nodes: Vec<f64> = (w0..w0 + 5).map(|j| grid.point(j)).collect();
    for (t, cw) in fd_weights(&nodes, ks, 1).into_iter().enumerate() {
        w[w0 + t] += sw[s] * cw;
    }
    Ok(w)
}

/// PV int f(k)/(k - pole) dk from uniform samples of f. The interior uses the
/// Simpson subtraction weights (interpolating f and f' at off-node poles); the
/// mass outside the grid is bounded analytically through `tail` and reported
/// in the error budget rather than folded into the value.
pub fn hilbert_on_grid(
    grid: &UniformGrid,
    f: &[f64],
    pole: f64,
    tail: &TailDecay,
    settings: &QuadratureSettings,
) -> Result<PvResult, QuadratureError> {
    grid.validate()?;
    if f.len() != grid.n {
        return Err(QuadratureError::InvalidGrid {
            reason: format!("expected {} samples, got {}", grid.n, f.len()),
        });
    }
    let h = grid.step();
    let interior_mass: f64 = f.iter().map(|v| v.abs()).sum::<f64>() * h;
    let outside = tail.mass_outside(grid.min, grid.max);
    let total_mass = interior_mass + outside;
    if total_mass > 0.0 {
        let outside_fraction = outside / total_mass;
        if outside_fraction > settings.truncation_eps {
            return Err(QuadratureError::InsufficientSpan { outside_fraction });
        }
    }
    if !(pole >= grid.min + 2.0 * h && pole <= grid.max - 2.0 * h) {
        return Err(QuadratureError::PoleOutsideRange {
            pole,
            a: grid.min,
            b: grid.max,
        });
    }

    let value = hilbert_interior(grid, f, pole)?;

    // error budget: a fourth-difference Simpson bound on the subtracted
    // integrand (the smooth function the weights actually integrate), raised
    // to the half-grid Richardson difference when that is larger, plus the
    // analytic tails
    let mut interior_budget = subtracted_fourth_difference(grid, f, pole);
    if (grid.n - 1) % 4 == 0 {
        let half = UniformGrid {
            min: grid.min,
            max: grid.max,
            n: (grid.n + 1) / 2,
        };
        let fh: Vec<f64> = f.iter().step_by(2).copied().collect();
        if let Ok(coarse) = hilbert_interior(&half, &fh, pole) {
            interior_budget = interior_budget.max((value - coarse).abs());
        }
    }
    let tail_budget = pv_tail_bound(grid, pole, tail);
    Ok(PvResult {
        value,
        error_budget: interior_budget + tail_budget + 1e-14 * (1.0 + value.abs()),
    })
}

/// Value and slope of the sampled function at the pole: the node sample plus
/// a five-point derivative stencil when the pole sits on a node, a six-point
/// interpolation otherwise.
fn pole_slope(grid: &UniformGrid, f: &[f64], pole: f64) -> (f64, f64) {
    let n = grid.n;
    let h = grid.step();
    let span = grid.max - grid.min;
    let nearest = (((pole - grid.min) / h).round() as usize).min(n - 1);
    if (grid.point(nearest) - pole).abs() <= 1e-9 * span {
        let w0 = (nearest as i64 - 2).clamp(0, n as i64 - 5) as usize;
        let nodes: Vec<f64> = (w0..w0 + 5).map(|j| grid.point(j)).collect();
        let f_prime = fd_weights(&nodes, grid.point(nearest), 1)
            .iter()
            .zip(&f[w0..w0 + 5])
            .map(|(c, v)| c * v)
            .sum();
        return (f[nearest], f_prime);
    }
    let wlen = if n >= 6 { 6 } else { 4 };
    let shift = wlen as i64 / 2 - 1;
    let i0 = (((pole - grid.min) / h).floor() as i64 - shift).clamp(0, (n - wlen) as i64) as usize;
    let nodes: Vec<f64> = (i0..i0 + wlen).map(|j| grid.point(j)).collect();
    let f_pole = fd_weights(&nodes, pole, 0)
        .iter()
        .zip(&f[i0..i0 + wlen])
        .map(|(c, v)| c * v)
        .sum();
    let f_prime = fd_weights(&nodes, pole, 1)
        .iter()
        .zip(&f[i0..i0 + wlen])
        .map(|(c, v)| c * v)
        .sum();
    (f_pole, f_prime)
}

/// Pole-subtracted samples g(k) = (f(k) - f(pole) - f'(pole)(k - pole)) / (k - pole),
/// which vanish quadratically at the pole and stay smooth across it.
fn subtracted_samples(grid: &UniformGrid, f: &[f64], pole: f64) -> Vec<f64> {
    let (f_pole, f_prime) = pole_slope(grid, f, pole);
    let span = grid.max - grid.min;
    (0..grid.n)
        .map(|j| {
            let d = grid.point(j) - pole;
            if d.abs() <= 1e-9 * span {
                0.0
            } else {
                (f[j] - f_pole - f_prime * d) / d
            }
        })
        .collect()
}

fn subtracted_fourth_difference(grid: &UniformGrid, f: &[f64], pole: f64) -> f64 {
    fourth_difference_bound(&subtracted_samples(grid, f, pole), grid.step())
}

fn fourth_difference_bound(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    if n < 5 {
        return 0.0;
    }
    let mut sum = 0.0;
    for j in 2..n - 2 {
        sum += (f[j - 2] - 4.0 * f[j - 1] + 6.0 * f[j] - 4.0 * f[j + 1] + f[j + 2]).abs();
    }
    8.0 * sum * h / 180.0
}

fn pv_tail_bound(grid: &UniformGrid, pole: f64, tail: &TailDecay) -> f64 {
    let right = tail.mass_beyond(grid.max) / (grid.max - pole);
    let left = tail.mass_beyond(-grid.min) / (pole - grid.min);
    right + left
}

fn hilbert_interior(grid: &UniformGrid, f: &[f64], pole: f64) -> Result<f64, QuadratureError> {
    let n = grid.n;
    let h = grid.step();
    let span = grid.max - grid.min;
    let nearest = ((pole - grid.min) / h).round() as usize;
    let nearest = nearest.min(n - 1);
    if (grid.point(nearest) - pole).abs() <= 1e-9 * span {
        // pole on a node: exactly the shared weight row
        let w = pv_grid_weights(grid, nearest)?;
        return Ok(w.iter().zip(f).map(|(wj, fj)| wj * fj).sum());
    }

    // off-node pole: interpolate f and f' at the pole from six surrounding
    // nodes (so interpolation error stays below the quadrature error), then
    // run the same subtraction sum
    let wlen = if n >= 6 { 6 } else { 4 };
    let shift = wlen as i64 / 2 - 1;
    let i0 = (((pole - grid.min) / h).floor() as i64 - shift).clamp(0, (n - wlen) as i64) as usize;
    let nodes: Vec<f64> = (i0..i0 + wlen).map(|j| grid.point(j)).collect();
    let f_pole: f64 = fd_weights(&nodes, pole, 0)
        .iter()
        .zip(&f[i0..i0 + wlen])
        .map(|(c, v)| c * v)
        .sum();
    let f_prime: f64 = fd_weights(&nodes, pole, 1)
        .iter()
        .zip(&f[i0..i0 + wlen])
        .map(|(c, v)| c * v)
        .sum();

    let sw = simpson_weights(n, h);
    let mut sum = 0.0;
    for j in 0..n {
        let d = grid.point(j) - pole;
        let integrand = if d.abs() < 1e-9 * span {
            f_prime
        } else {
            (f[j] - f_pole) / d
        };
        sum += sw[j] * integrand;
    }
    sum += f_pole * ((grid.max - pole) / (pole - grid.min)).ln();
    Ok(sum)
}
