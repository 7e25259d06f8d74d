//! Acceptance gate: one test per exit criterion, each printing a PASS line
//! with the tolerance it enforced. These drive the library APIs directly
//! except for the last one, which shells out to the psl binary.

use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use psl_core::constraints::{constraint_report, dispersion_sweep, operator_analysis, winding_index};
use psl_core::invariants::{
    compute_i0, invariant_set, jp_sweep, InvariantSet, PhysicalConstants, StringState,
};
use psl_core::mechanics::{
    canonical_flow_check, effective_mass, energy_parts, evolve, find_divergences, hamiltonian,
    linearity_probe, mass_curve, MechanicsError,
};
use psl_core::profile::{GaussianBump, Profile};
use psl_core::quadrature::{QuadratureSettings, UniformGrid};
use psl_core::special::dawson;
use psl_core::worldsheet::{find_cusps, reconstruct_point, tangents, Rect};

const PI: f64 = std::f64::consts::PI;

fn settings() -> QuadratureSettings {
    QuadratureSettings::default()
}

fn tight_settings() -> QuadratureSettings {
    QuadratureSettings {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        ..QuadratureSettings::default()
    }
}

/// Flat curvature, unit envelope, all constants 1.
fn reference_state() -> StringState {
    StringState::new(
        PhysicalConstants::new(1.0, 1.0, 1.0).unwrap(),
        Profile::new(Vec::new()).unwrap(),
        0.0,
        0.0,
        1.0,
        0.0,
        1.0,
        [0.0, 0.0],
    )
    .unwrap()
}

/// Random state kept well inside the range the default frequency grid covers.
fn random_state(rng: &mut ChaCha8Rng) -> StringState {
    let n_bumps = rng.gen_range(1..=3);
    let bumps = (0..n_bumps)
        .map(|_| GaussianBump {
            a: rng.gen_range(0.1..0.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
            c: rng.gen_range(-1.0..1.0),
            w: rng.gen_range(0.6..1.2),
        })
        .collect();
    StringState::new(
        PhysicalConstants::new(1.0, 1.0, 1.0).unwrap(),
        Profile::new(bumps).unwrap(),
        rng.gen_range(-2.5..2.5),
        rng.gen_range(0.0..2.0 * PI),
        rng.gen_range(0.85..1.25),
        rng.gen_range(-0.5..0.5),
        rng.gen_range(0.5..2.0),
        [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
    )
    .unwrap()
}

fn sample_grid() -> UniformGrid {
    UniformGrid { min: -14.0, max: 14.0, n: 561 }
}

fn jp_closed(omega: f64) -> f64 {
    0.25 * PI * (-0.5 * omega * omega).exp()
}

fn js_closed(omega: f64) -> f64 {
    -0.5 * PI.sqrt() * dawson(omega / 2.0_f64.sqrt())
}

// ============================================================================
// 1. closed-form invariants
// ============================================================================

/// Riemann-sum cross-checks of the closed forms, independent of the adaptive
/// quadrature code path.
fn brute_i0_flat(omega: f64) -> (f64, f64) {
    let n = 4001;
    let (a, b) = (-8.0, 8.0);
    let h = (b - a) / (n - 1) as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..n {
        let xi = a + i as f64 * h;
        let weight = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let env = 0.5 * (-xi * xi).exp();
        re += weight * env * (omega * xi).cos();
        im += weight * env * (omega * xi).sin();
    }
    (re * h, im * h)
}

fn brute_ordered_flat(omega: f64) -> (f64, f64) {
    let n = 1201;
    let (a, b) = (-7.0, 7.0);
    let h = (b - a) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
    let env: Vec<f64> = xs.iter().map(|&x| (-x * x).exp()).collect();
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..i {
            let phase = omega * (xs[i] - xs[j]);
            re += env[i] * env[j] * phase.cos();
            im += env[i] * env[j] * phase.sin();
        }
    }
    let diag: f64 = env.iter().map(|e| e * e).sum();
    ((re + 0.5 * diag) * h * h, im * h * h)
}

#[test]
fn acceptance_01_closed_form_invariants() {
    let state = reference_state();
    let settings = settings();

    let i0 = compute_i0(&state, &settings).unwrap().value;
    let target = 0.5 * PI.sqrt();
    assert!(
        (i0.re - target).abs() <= 1e-8 * target && i0.im.abs() <= 1e-8 * target,
        "I0(0) = {i0} should be sqrt(pi)/2 = {target}"
    );

    for omega in [0.0, 0.5, 1.0, 2.0] {
        let inv = invariant_set(&state.with_omega(omega), &settings).unwrap();
        let (jp_want, js_want) = (jp_closed(omega), js_closed(omega));
        let scale = jp_closed(0.0);
        assert!(
            (inv.jp - jp_want).abs() <= 1e-8 * jp_want.max(scale),
            "JP({omega}) = {} vs closed form {jp_want}",
            inv.jp
        );
        assert!(
            (inv.js - js_want).abs() <= 1e-8 * js_want.abs().max(scale),
            "JS({omega}) = {} vs closed form {js_want}",
            inv.js
        );
    }

    // The closed forms themselves are pinned by brute-force Riemann sums.
    for omega in [0.0, 1.0, 2.0] {
        let (bre, bim) = brute_i0_flat(omega);
        let want = 0.5 * PI.sqrt() * (-0.25 * omega * omega).exp();
        assert!((bre - want).abs() < 1e-4 && bim.abs() < 1e-4, "brute I0({omega})");

        let (ore, oim) = brute_ordered_flat(omega);
        assert!(
            (0.5 * ore - jp_closed(omega)).abs() < 1e-3,
            "brute ordered JP({omega}): {} vs {}",
            0.5 * ore,
            jp_closed(omega)
        );
        assert!(
            (-0.5 * oim - js_closed(omega)).abs() < 1e-3,
            "brute ordered JS({omega}): {} vs {}",
            -0.5 * oim,
            js_closed(omega)
        );
    }

    println!("ACCEPTANCE 1: PASS closed-form I0/JP/JS at omega in {{0, 0.5, 1, 2}}, rel 1e-8, Riemann cross-check 1e-3");
}

// ============================================================================
// 2. JP = |I0|^2
// ============================================================================

#[test]
fn acceptance_02_jp_equals_i0_squared() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let settings = settings();
    for trial in 0..10 {
        let state = random_state(&mut rng);
        for omega in [-2.0, -0.5, 0.0, 1.0, 2.5] {
            let st = state.with_omega(omega);
            let inv = invariant_set(&st, &settings).unwrap();
            let fast = compute_i0(&st, &settings).unwrap().value.norm_sqr();
            assert!(
                (inv.jp - fast).abs() <= 1e-6 * fast.max(1e-12),
                "trial {trial}, omega {omega}: ordered JP {} vs |I0|^2 {fast}",
                inv.jp
            );
        }
    }
    println!("ACCEPTANCE 2: PASS JP = |I0|^2 to rel 1e-6 on 10 random profiles x 5 omegas");
}

// ============================================================================
// 3. dispersion constraint
// ============================================================================

#[test]
fn acceptance_03_dispersion_residual_bounded() {
    let settings = settings();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut states = vec![reference_state()];
    for _ in 0..3 {
        states.push(random_state(&mut rng));
    }

    let evals = UniformGrid { min: -4.0, max: 4.0, n: 33 }.points();
    for (idx, state) in states.iter().enumerate() {
        let samples = jp_sweep(state, &sample_grid(), &settings).unwrap();
        let jp0 = invariant_set(&state.with_omega(0.0), &settings).unwrap().jp;
        let checks = dispersion_sweep(state, &samples, &evals, &settings).unwrap();
        for c in &checks {
            assert!(
                c.residual.abs() <= c.error_budget,
                "config {idx}, omega {}: residual {} exceeds budget {}",
                c.omega,
                c.residual,
                c.error_budget
            );
            assert!(
                c.residual.abs() <= 1e-5 * jp0,
                "config {idx}, omega {}: residual {} exceeds 1e-5 * JP(0) = {}",
                c.omega,
                c.residual,
                1e-5 * jp0
            );
        }
    }
    println!("ACCEPTANCE 3: PASS dispersion residual <= budget and <= 1e-5 JP(0) over 33 omegas, 4 configs");
}

// ============================================================================
// 4. first constraint
// ============================================================================

#[test]
fn acceptance_04_phi1_residual_small() {
    let settings = settings();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let mut states = vec![reference_state()];
    for _ in 0..3 {
        states.push(random_state(&mut rng));
    }

    let evals = UniformGrid { min: -4.0, max: 4.0, n: 33 }.points();
    for (idx, state) in states.iter().enumerate() {
        let samples = jp_sweep(state, &sample_grid(), &settings).unwrap();
        for &omega in &evals {
            let report = constraint_report(&state.with_omega(omega), &samples, &settings).unwrap();
            assert!(
                report.phi1.abs() <= 1e-6 * report.phi1_scale,
                "config {idx}, omega {omega}: phi1 {} vs scale {}",
                report.phi1,
                report.phi1_scale
            );
        }
    }
    println!("ACCEPTANCE 4: PASS phi1 residual <= 1e-6 relative over 33 omegas, 4 configs");
}

// ============================================================================
// 5. winding index
// ============================================================================

#[test]
fn acceptance_05_winding_index_is_one() {
    let settings = settings();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let mut states = vec![reference_state()];
    for _ in 0..3 {
        states.push(random_state(&mut rng));
    }
    for (idx, state) in states.iter().enumerate() {
        let base = winding_index(state, 14.0, 33, &settings).unwrap();
        let fine = winding_index(state, 28.0, 66, &settings).unwrap();
        assert_eq!(base.index, 1, "config {idx}: index {} at (14, 33)", base.index);
        assert_eq!(fine.index, 1, "config {idx}: index {} at (28, 66)", fine.index);
    }
    println!("ACCEPTANCE 5: PASS winding index = 1 on 4 configs, stable under doubling");
}

// ============================================================================
// 6. nullspace uniqueness
// ============================================================================

#[test]
fn acceptance_06_dominant_operator_nullspace() {
    let state = reference_state();
    let grid = UniformGrid { min: -8.0, max: 8.0, n: 321 };
    let analysis = operator_analysis(&state, &grid, 1e-6, 33, &settings()).unwrap();
    assert_eq!(
        analysis.nullspace_dim, 1,
        "nullspace dimension {} with sigma ratio {}",
        analysis.nullspace_dim, analysis.sigma_min_over_max
    );
    assert!(
        analysis.special_solution_cosine > 0.999,
        "near-null vector barely overlaps sampled JP: cosine {}",
        analysis.special_solution_cosine
    );
    assert!(
        analysis.constant_solution_residual >= 0.1,
        "constant function too close to the nullspace: residual {}",
        analysis.constant_solution_residual
    );
    println!("ACCEPTANCE 6: PASS nullspace dim 1 on [-8,8]x321, JP cosine > 0.999, constant residual >= 0.1");
}

// ============================================================================
// 7. effective mass and divergence
// ============================================================================

#[test]
fn acceptance_07_effective_mass() {
    let state = reference_state();
    let settings = settings();

    let inv0 = invariant_set(&state, &settings).unwrap();
    assert_eq!(
        effective_mass(&inv0, &state.constants),
        Some(1.0),
        "m_eff at omega 0 must equal m0 exactly"
    );

    let inv1 = invariant_set(&state.with_omega(1.0), &settings).unwrap();
    let m1 = effective_mass(&inv1, &state.constants).expect("mass finite at omega 1");
    assert!((m1 - 1.9104).abs() <= 1e-3, "m_eff(1) = {m1}, expected 1.9104 +- 1e-3");
    assert!(
        (m1 - 1.9110196190425812).abs() <= 1e-6,
        "m_eff(1) = {m1} vs high-precision oracle"
    );

    let roots = find_divergences(&state, 0.5, 2.5, 41, &settings).unwrap();
    assert_eq!(roots.len(), 1, "expected a single divergence in [0.5, 2.5]");
    let w1 = roots[0].omega;
    assert!((w1 - 1.34).abs() <= 0.01, "first divergence at {w1}, expected 1.34 +- 0.01");
    assert!(
        (w1 - 1.3383880850394726).abs() <= 1e-9,
        "first divergence {w1} vs high-precision oracle"
    );

    let omegas = UniformGrid { min: -4.0, max: 4.0, n: 81 }.points();
    for point in mass_curve(&state, &omegas, &settings).unwrap() {
        assert!(point.jp > 0.0, "JP must stay positive, got {} at {}", point.jp, point.omega);
        if let Some(m) = point.effective_mass {
            assert!(m.is_finite() && m != 0.0, "m_eff {m} at omega {}", point.omega);
        }
        assert!(point.inverse_effective_mass.is_finite());
    }
    println!("ACCEPTANCE 7: PASS m_eff(0) = m0 exactly, m_eff(1) = 1.9104 +- 1e-3, divergence at 1.34 +- 0.01, m_eff nonzero on the grid");
}

// ============================================================================
// 8. conservation under evolution
// ============================================================================

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn acceptance_08_conservation_under_evolution() {
    let settings = tight_settings();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    for trial in 0..3 {
        let state = random_state(&mut rng);
        let inv: InvariantSet = invariant_set(&state, &settings).unwrap();
        let e = energy_parts(&state, &inv).total;
        let h = hamiltonian(&state, &inv);

        for delta in [0.1, 1.0, -2.5] {
            let next = evolve(&state, delta);
            let inv2 = invariant_set(&next, &settings).unwrap();
            let e2 = energy_parts(&next, &inv2).total;
            let h2 = hamiltonian(&next, &inv2);

            let p_err = ((inv.momentum[0] - inv2.momentum[0]).powi(2)
                + (inv.momentum[1] - inv2.momentum[1]).powi(2))
            .sqrt();
            let p_scale = (inv.momentum[0].powi(2) + inv.momentum[1].powi(2)).sqrt();
            assert!(
                p_err <= 1e-10 * (1.0 + p_scale),
                "trial {trial}, delta {delta}: momentum moved by {p_err}"
            );
            assert!(close(inv.spin, inv2.spin, 1e-10), "trial {trial}, delta {delta}: spin");
            assert!(close(e, e2, 1e-10), "trial {trial}, delta {delta}: energy {e} vs {e2}");
            assert!(close(h, h2, 1e-10), "trial {trial}, delta {delta}: hamiltonian {h} vs {h2}");
        }

        // Composition: evolving in two steps equals one combined step, with
        // beta compared on the circle.
        let (a, b) = (0.7, -1.9);
        let two = evolve(&evolve(&state, a), b);
        let one = evolve(&state, a + b);
        assert!(close(two.q, one.q, 1e-12), "trial {trial}: q composition");
        for (x, y) in two.profile.bumps().iter().zip(one.profile.bumps()) {
            assert!(close(x.c, y.c, 1e-12), "trial {trial}: center composition");
            assert_eq!(x.a, y.a);
            assert_eq!(x.w, y.w);
        }
        let wrap = (two.beta - one.beta + PI).rem_euclid(2.0 * PI) - PI;
        assert!(wrap.abs() <= 1e-12, "trial {trial}: beta composition off by {wrap}");
    }
    println!("ACCEPTANCE 8: PASS P, S, E, H invariant to rel 1e-10 under evolve, flow composes up to beta mod 2pi");
}

// ============================================================================
// 9. degeneracy at the first divergence
// ============================================================================

#[test]
fn acceptance_09_degeneracy_at_first_divergence() {
    let settings = tight_settings();
    let state = reference_state();
    let w1 = find_divergences(&state, 0.5, 2.5, 41, &settings).unwrap()[0].omega;
    let kappas = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0];

    match linearity_probe(&state.with_omega(w1), &kappas, &settings) {
        Err(MechanicsError::DegenerateFit { spread }) => {
            // E really is flat there while S still moves.
            let lo = invariant_set(&StringState { kappa: 0.5, ..state.with_omega(w1) }, &settings).unwrap();
            let hi = invariant_set(&StringState { kappa: 2.0, ..state.with_omega(w1) }, &settings).unwrap();
            let st_lo = StringState { kappa: 0.5, ..state.with_omega(w1) };
            let st_hi = StringState { kappa: 2.0, ..state.with_omega(w1) };
            let e_lo = energy_parts(&st_lo, &lo).total;
            let e_hi = energy_parts(&st_hi, &hi).total;
            assert!(
                (e_lo - e_hi).abs() <= 1e-8 * (1.0 + e_lo.abs()),
                "energies {e_lo} and {e_hi} should coincide at the divergence"
            );
            assert!(
                (lo.spin - hi.spin).abs() > 1e-3,
                "spin range {} to {} should stay nontrivial (spread {spread:e})",
                lo.spin,
                hi.spin
            );
        }
        other => panic!("expected DegenerateFit at omega {w1}, got {other:?}"),
    }

    let probe = linearity_probe(&state.with_omega(1.0), &kappas, &settings).unwrap();
    let s_min = probe.points.iter().map(|p| p.spin).fold(f64::INFINITY, f64::min);
    let s_max = probe.points.iter().map(|p| p.spin).fold(f64::NEG_INFINITY, f64::max);
    let range = s_max - s_min;
    assert!(range > 1e-3, "spin range degenerate at omega 1");
    assert!(
        probe.fit.max_residual <= 1e-8 * range,
        "S-vs-E fit residual {} exceeds 1e-8 of range {range}",
        probe.fit.max_residual
    );
    println!("ACCEPTANCE 9: PASS DegenerateFit at the divergence, S-vs-E linear to 1e-8 of range at omega 1");
}

// ============================================================================
// 10. worldsheet boundary, tangents, cusps
// ============================================================================

#[test]
fn acceptance_10_worldsheet() {
    let settings = settings();
    let mut rng = ChaCha8Rng::seed_from_u64(0xCA);
    let states = [reference_state(), random_state(&mut rng)];

    // Boundary condition: the spatial tangent vanishes on the xi1 = 0 edge.
    let xi1 = [0.0];
    for (idx, state) in states.iter().enumerate() {
        for k in 0..41 {
            let xi0 = -2.0 + 0.1 * k as f64;
            let (dp, dm) = tangents(state, xi0, &xi1);
            let edge = (dp[0] + dm[0]).norm();
            assert!(edge <= 1e-8, "config {idx}, xi0 {xi0}: |d1 X| = {edge} on the edge");
        }
    }

    // Finite differences of the reconstructed position converge at second
    // order to the analytic tangent.
    let state = &states[1];
    let (xi0, xi1) = (0.3, 1.1);
    let (dp, dm) = tangents(state, xi0, &[xi1]);
    let exact = dp[0] + dm[0];
    let mut errors = Vec::new();
    for h in [1e-2, 5e-3] {
        let (hi, _) = reconstruct_point(state, xi0, xi1 + h, &settings).unwrap();
        let (lo, _) = reconstruct_point(state, xi0, xi1 - h, &settings).unwrap();
        errors.push(((hi - lo) / (2.0 * h) - exact).norm());
    }
    assert!(
        errors[1] <= errors[0] / 3.5 + 1e-12,
        "tangent difference quotient not second order: {errors:?}"
    );

    // Flat profile at omega 2: cusp ladder at xi0 = 0, xi1 = k pi / 2.
    let flat = reference_state().with_omega(2.0);
    let rect = Rect { xi0_min: -0.8, xi0_max: 0.8, xi1_min: 0.4, xi1_max: 5.0 };
    let scan = find_cusps(&flat, &rect, 33, 49, 1e-10, &settings).unwrap();
    assert!(!scan.degenerate);
    assert_eq!(
        scan.cusps.len(),
        3,
        "expected the k = 1, 2, 3 ladder, got {:?}",
        scan.cusps.iter().map(|c| (c.xi0, c.xi1)).collect::<Vec<_>>()
    );
    for (k, cusp) in scan.cusps.iter().enumerate() {
        let want = (k + 1) as f64 * PI / 2.0;
        assert!(cusp.xi0.abs() <= 1e-8, "cusp {k} at xi0 {}", cusp.xi0);
        assert!((cusp.xi1 - want).abs() <= 1e-8, "cusp {k} at xi1 {} vs {want}", cusp.xi1);
    }
    println!("ACCEPTANCE 10: PASS edge tangent <= 1e-8, difference quotient second order, cusp ladder at k pi / 2");
}

// ============================================================================
// 11. canonical flow
// ============================================================================

#[test]
fn acceptance_11_canonical_flow() {
    let state = StringState::new(
        PhysicalConstants::new(1.0, 1.0, 1.0).unwrap(),
        Profile::new(vec![
            GaussianBump { a: 0.4, c: -0.3, w: 0.9 },
            GaussianBump { a: -0.25, c: 0.5, w: 1.1 },
        ])
        .unwrap(),
        0.8,
        0.7,
        1.05,
        0.2,
        1.2,
        [0.0, 0.0],
    )
    .unwrap();

    let coarse = canonical_flow_check(&state, 201);
    let fine = canonical_flow_check(&state, 401);
    assert_eq!(coarse.q_flow_rate, 1.0, "q must advance at unit rate");
    assert_eq!(fine.q_flow_rate, 1.0, "q must advance at unit rate");
    assert!(
        fine.max_interior_residual <= coarse.max_interior_residual / 3.5 + 1e-14,
        "bracket residual not second order: {} then {}",
        coarse.max_interior_residual,
        fine.max_interior_residual
    );
    println!("ACCEPTANCE 11: PASS bracket residual second order under halving, q flow rate exactly 1");
}

// ============================================================================
// 12. CLI determinism
// ============================================================================

fn reference_config() -> Value {
    json!({
        "constants": { "gamma": 1.0, "m0": 1.0, "E0": 1.0 },
        "state": {
            "kappa": 1.0,
            "beta": 0.0,
            "p": 1.0,
            "q": 0.0,
            "omega": 0.0,
            "Z": [0.0, 0.0],
            "rho": { "bumps": [] }
        },
        "numerics": {
            "rel_tol": 1e-10,
            "abs_tol": 1e-12,
            "truncation_eps": 1e-16,
            "omega_grid": { "min": -14.0, "max": 14.0, "n": 561 }
        }
    })
}

const ALL_COMMANDS: &[&str] = &[
    "invariants",
    "mass-curve",
    "divergences",
    "dispersion-check",
    "phi1-check",
    "index",
    "nullspace",
    "evolve",
    "worldsheet",
    "cusps",
    "energy-scan",
];

#[test]
fn acceptance_12_cli_determinism() {
    let cfg = reference_config();
    for &command in ALL_COMMANDS {
        let mut artifacts: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            let cfg_path = dir.path().join("config.json");
            std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
            let out = Command::new(env!("CARGO_BIN_EXE_psl"))
                .arg("--config")
                .arg(&cfg_path)
                .arg("--out")
                .arg(dir.path())
                .arg("--command")
                .arg(command)
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "{command} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            let stdout = String::from_utf8(out.stdout).unwrap();
            let mut files: Vec<(String, Vec<u8>)> = stdout
                .lines()
                .map(|line| {
                    let path = std::path::Path::new(line.trim());
                    let name = path.file_name().unwrap().to_string_lossy().into_owned();
                    (name, std::fs::read(path).unwrap())
                })
                .collect();
            files.sort_by(|a, b| a.0.cmp(&b.0));
            assert!(!files.is_empty(), "{command} wrote no artifacts");
            artifacts.push(files);
        }
        let names: Vec<&String> = artifacts[0].iter().map(|(n, _)| n).collect();
        assert_eq!(
            artifacts[0], artifacts[1],
            "{command}: artifacts {names:?} differ between identical runs"
        );
    }
    println!("ACCEPTANCE 12: PASS byte-identical artifacts across two runs of all 11 commands");
}
