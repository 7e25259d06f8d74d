//! Command dispatch and artifact writers.
//!
//! Each command maps to a fixed set of files in the output directory. JSON
//! artifacts carry the effective config under a `config` key; CSV artifacts
//! carry it as a leading `# config:` comment line. Floats are written with
//! Rust's shortest round-trip formatting so repeated runs agree byte for
//! byte.

use std::path::{Path, PathBuf};

use serde::Serialize;

use psl_core::constraints::{
    constraint_report, dispersion_sweep, operator_analysis, winding_index, OperatorAnalysis,
};
use psl_core::invariants::{invariant_set, jp_sweep, InvariantSet, StringState};
use psl_core::mechanics::{
    effective_mass, energy_parts, evolve, evolve_with_drift, find_divergences, galilei_invariant,
    hamiltonian, inverse_effective_mass, linearity_probe, mass_curve, mass_divergent,
    DivergencePoint, EnergyParts, LinearFit, MechanicsError,
};
use psl_core::quadrature::{QuadratureSettings, UniformGrid};
use psl_core::worldsheet::{find_cusps, reconstruct, CuspScan, Rect};
use rayon::prelude::*;

use crate::{BumpCfg, CliError, RunConfig, StateCfg};

/// Every command the binary accepts, in documentation order.
pub const COMMANDS: &[&str] = &[
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

/// Validate, build the state, and run one command. Returns the artifact
/// paths that were written, in a fixed order.
pub fn run(config: &RunConfig, command: &str, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let cfg = config.normalized();
    cfg.validate()?;
    let state = cfg.build_state()?;
    let settings = cfg.settings();

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;

    match command {
        "invariants" => cmd_invariants(&cfg, &state, &settings, out_dir),
        "mass-curve" => cmd_mass_curve(&cfg, &state, &settings, out_dir),
        "divergences" => cmd_divergences(&cfg, &state, &settings, out_dir),
        "dispersion-check" => cmd_dispersion(&cfg, &state, &settings, out_dir),
        "phi1-check" => cmd_phi1(&cfg, &state, &settings, out_dir),
        "index" => cmd_index(&cfg, &state, &settings, out_dir),
        "nullspace" => cmd_nullspace(&cfg, &state, &settings, out_dir),
        "evolve" => cmd_evolve(&cfg, &state, &settings, out_dir),
        "worldsheet" => cmd_worldsheet(&cfg, &state, &settings, out_dir),
        "cusps" => cmd_cusps(&cfg, &state, &settings, out_dir),
        "energy-scan" => cmd_energy_scan(&cfg, &state, &settings, out_dir),
        other => Err(CliError::Validation {
            field: "command".into(),
            message: format!("unknown command {other:?}, expected one of {COMMANDS:?}"),
        }),
    }
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("write {}: {e}", path.display())))?;
    Ok(path)
}

fn config_comment(cfg: &RunConfig) -> String {
    let line = serde_json::to_string(cfg).expect("config serializes");
    format!("# config: {line}")
}

fn write_csv(
    path: PathBuf,
    cfg: &RunConfig,
    extra_comments: &[String],
    header: &str,
    rows: &[String],
) -> Result<PathBuf, CliError> {
    let mut text = String::new();
    text.push_str(&config_comment(cfg));
    text.push('\n');
    for c in extra_comments {
        text.push_str(c);
        text.push('\n');
    }
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("write {}: {e}", path.display())))?;
    Ok(path)
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt(v),
        None => String::new(),
    }
}

// ============================================================================
// invariants
// ============================================================================

#[derive(Serialize)]
struct InvariantsOut<'a> {
    config: &'a RunConfig,
    invariants: &'a InvariantSet,
    energy: EnergyParts,
    hamiltonian: f64,
    inverse_effective_mass: f64,
    effective_mass: Option<f64>,
    mass_divergent: bool,
    boost: [f64; 2],
}

fn cmd_invariants(
    cfg: &RunConfig,
    state: &StringState,
    settings: &QuadratureSettings,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let inv = invariant_set(state, settings).map_err(numerical)?;
    let path = write_json(
        out.join("invariants.json"),
        &InvariantsOut {
            config: cfg,
            invariants: &inv,
            energy: energy_parts(state, &inv),
            hamiltonian: hamiltonian(state, &inv),
            inverse_effective_mass: inverse_effective_mass(&inv, &state.constants),
            effective_mass: effective_mass(&inv, &state.constants),
            mass_divergent: mass_divergent(&inv),
            boost: galilei_invariant(state, &inv, 0.0),
        },
    )?;
    Ok(vec![path])
}

// ============================================================================
// mass-curve
// ============================================================================

fn cmd_mass_curve(
    cfg: &RunConfig,
    state: &StringState,
    settings: &QuadratureSettings,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let omegas = UniformGrid {
        min: cfg.numerics.omega_grid.min,
        max: cfg.numerics.omega_grid.max,
        n: cfg.numerics.omega_grid.n,
    }
    .points();
    let points = mass_curve(state, &omegas, settings).map_err(numerical)?;
    let rows: Vec<String> = points
        .iter()
        .map(|p| {
            format!(
                "{},{},{},{},{},{},{},{}",
                fmt(p.omega),
                fmt(p.jp),
                fmt(p.js),
                fmt(p.frak_f),
                fmt_opt(p.effective_mass),
                fmt(p.inverse_effective_mass),
                p.mass_divergent,
                fmt(p.frak_f_budget),
            )
        })
        .collect();
    let path = write_csv(
        out.join("mass_curve.csv"),
        cfg,
        &[],
        "omega,JP,JS,frakF,m_eff,inverse_m_eff,divergent,frakF_budget",
        &rows,
    )?;
    Ok(vec![path])
}

// ============================================================================
// divergences
// ============================================================================

#[derive(Serialize)]
struct DivergencesOut<'a> {
    config: &'a RunConfig,
    divergences: &'a [DivergencePoint],
}

fn cmd_divergences(
    cfg: &RunConfig,
    state: &StringState,
    settings: &QuadratureSettings,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let dv = cfg.divergences.as_ref().expect("normalized");
    let roots = find_divergences(state, dv.min, dv.max, dv.scan_n, settings).map_err(numerical)?;
    let path = write_json(
        out.join("divergences.json"),
        &DivergencesOut { config: cfg, divergences: &roots },
    )?;
    Ok(vec![path])
}

// ============================================================================
// dispersion-check
// ============================================================================

#[derive(Serialize)]
struct DispersionSummary<'a> {
    config: &'a RunConfig,
    max_abs_residual: f64,
    worst_omega: f64,
    max_error_budget: f64,
    sample_tail_amplitude: f64,
}

fn cmd_dispersion(
    cfg: &RunConfig,
    state: &StringState,
    settings: &QuadratureSettings,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let d = cfg.dispersion.as_ref().expect("normalized");
    let sample_grid = UniformGrid {
        min: cfg.numerics.omega_grid.min,
        max: cfg.numerics.omega_grid.max,
        n: cfg.numerics.omega_grid.n,
    };
    let samples = jp_sweep(state, &sample_grid, settings).map_err(numerical)?;
    let evals = UniformGrid { min: d.min, max: d.max, n: d.n }.points();
    let checks = dispersion_sweep(state, &samples, &evals, settings).map_err(numerical)?;

    let rows: Vec<String> = checks
        .iter()
        .map(|c| {
            format!(
                "{},{},{},{},{}",
                fmt(c.omega),
                fmt(c.js_direct),
                fmt(c.js_from_jp),
                fmt(c.residual),
                fmt(c.error_budget),
            )
        })
        .collect();
    let csv = write_csv(
        out.join("dispersion_check.csv"),
        cfg,
        &[],
        "omega,js_direct,js_from_jp,residual,error_budget",
        &rows,
    )?;

    let worst = checks
        .iter()
        .max_by(|a, b| a.residual.abs().total_cmp(&b.residual.abs()))
        .expect("eval grid is nonempty");
    let max_budget = checks.iter().map(|c| c.error_budget).fold(0.0_f64, f64::max);
    let json = write_json(
        out.join("dispersion_summary.json"),
        &DispersionSummary {
            config: cfg,
            max_abs_residual: worst.residual.abs(),
            worst_omega: worst.omega,
            max_error_budget: max_budget,
            sample_tail_amplitude: samples.tail.amplitude,
        },
    )?;
    Ok(vec![csv, json])
}

// ============================================================================
// phi1-check
// ============================================================================

fn cmd_phi1(
    cfg: &RunConfig,
    state: &StringState,
    settings: &QuadratureSettings,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let d = cfg.dispersion.as_ref().expect("normalized");
    let sample_grid = UniformGrid {
        min: cfg.numerics.omega_grid.min,
        max: cfg.numerics.omega_grid.max,
        n: cfg.numerics.omega_grid.n,
    };
    let samples = jp_sweep(state, &sample_grid, settings).map_err(numerical)?;
    let evals = UniformGrid { min: d.min, max: d.max, n: d.n }.points();
    let reports = evals
        .par_iter()
        .map(|&w| constraint_report(&state.with_omega(w), &samples, settings))
        .collect::<Result<Vec<_>, _>>()
        .map_err(numerical)?;

    let rows: Vec<String> = reports
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                fmt(r.omega),
                fmt(r.phi1),
                fmt(r.phi1_scale),
                fmt(r.phi1_error_budget),
                fmt(r.phi2),
                fmt(r.phi2_error_budget),
            )
        })
        .collect();
    let path = write_csv(
        out.join("phi1_check.csv"),
        cfg,
        &[],
        "omega,phi1,phi1_scale,phi1_error_budget,phi2,phi2_error_budget",
        &rows,
    )?;
    Ok(vec![path])
}

// ============================================================================
// index
// ============================================================================

#[derive(Serialize)]
struct IndexOut<'a> {
    config: &'a RunConfig,
    winding_index: i64,
    total_turn: f64,
    discrepancy: f64,
    samples_used: usize,
}

fn cmd_index(
    cfg: &RunConfig,
    state: &StringState,
    settings: &QuadratureSettings,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let ix = cfg.index.as_ref().expect("normalized");
    let report = winding_index(state, ix.omega_max, ix.samples, settings).map_err(numerical)?;
    let path = write_json(
        out.join("index.json"),
        &IndexOut {
            config: cfg,
            winding_index: report.index,
            total_turn: report.total_turn,
            discrepancy: report.discrepancy,
            samples_used: report.samples_used,
        },
    )?;
    Ok(vec![path])
}

// ============================================================================
// nullspace
// ============================================================================

#[derive(Serialize)]
struct NullspaceOut<'a> {
    config: &'a RunConfig,
    analysis: &'a OperatorAnalysis,
}

fn cmd_nullspace(
    cfg: &RunConfig,
    state: &StringState,
    settings: &QuadratureSettings,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let ns = cfg.nullspace.as_ref().expect("normalized");
    let grid = UniformGrid { min: ns.grid_min, max: ns.grid_max, n: ns.grid_n };
    let analysis = operator_analysis(state, &grid, ns.threshold_ratio, ns.winding_samples, settings)
        .map_err(numerical)?;
    let path = write_json(
        out.join("nullspace.json"),
        &NullspaceOut { config: cfg, analysis: &analysis },
    )?;
    Ok(vec![path])
}

// ============================================================================
// evolve
// ============================================================================

#[derive(Serialize)]
struct Snapshot {
    i0: [f64; 2],
    jp: f64,
    js: f64,
    frak_f: f64,
    momentum: [f64; 2],
    p_sq: f64,
    spin: f64,
    energy: f64,
    hamiltonian: f64,
    boost: [f64; 2],
}

impl Snapshot {
    fn take(state: &StringState, inv: &InvariantSet, xi0: f64) -> Snapshot {
        Snapshot {
            i0: [inv.i0_re, inv.i0_im],
            jp: inv.jp,
            js: inv.js,
            frak_f: inv.frak_f,
            momentum: inv.momentum,
            p_sq: inv.p_sq,
            spin: inv.spin,
            energy: energy_parts(state, inv).total,
            hamiltonian: hamiltonian(state, inv),
            boost: galilei_invariant(state, inv, xi0),
        }
    }
}

fn rel_drift(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

#[derive(Serialize)]
struct ConservationOut<'a> {
    config: &'a RunConfig,
    delta: f64,
    drift_applied: bool,
    before: Snapshot,
    after: Snapshot,
    max_relative_drift: f64,
}

fn cmd_evolve(
    cfg: &RunConfig,
    state: &StringState,
    settings: &QuadratureSettings,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let block = cfg.evolve.as_ref().expect("normalized");
    let delta = block.delta;

    let inv_before = invariant_set(state, settings).map_err(numerical)?;
    let next = if block.drift {
        evolve_with_drift(state, delta, settings).map_err(numerical)?
    } else {
        evolve(state, delta)
    };
    let inv_after = invariant_set(&next, settings).map_err(numerical)?;

    let xi0_after = if block.drift { delta } else { 0.0 };
    let before = Snapshot::take(state, &inv_before, 0.0);
    let after = Snapshot::take(&next, &inv_after, xi0_after);

    let mut drifts = vec![
        rel_drift(after.jp, before.jp),
        rel_drift(after.js, before.js),
        rel_drift(after.frak_f, before.frak_f),
        rel_drift(after.p_sq, before.p_sq),
        rel_drift(after.spin, before.spin),
        rel_drift(after.energy, before.energy),
        rel_drift(after.hamiltonian, before.hamiltonian),
    ];
    for k in 0..2 {
        drifts.push(rel_drift(after.momentum[k], before.momentum[k]));
        drifts.push(rel_drift(after.boost[k], before.boost[k]));
    }
    let max_relative_drift = drifts.into_iter().fold(0.0_f64, f64::max);

    let conservation = write_json(
        out.join("conservation.json"),
        &ConservationOut {
            config: cfg,
            delta,
            drift_applied: block.drift,
            before,
            after,
            max_relative_drift,
        },
    )?;

    let mut evolved_cfg = cfg.clone();
    evolved_cfg.state = StateCfg {
        kappa: next.kappa,
        beta: next.beta,
        p: next.p,
        q: next.q,
        omega: next.omega,
        z: next.z,
        rho: crate::RhoCfg {
            bumps: next
                .profile
                .bumps()
                .iter()
                .map(|b| BumpCfg { a: b.a, c: b.c, w: b.w })
                .collect(),
        },
    };
    let evolved = write_json(out.join("evolved_config.json"), &evolved_cfg)?;

    Ok(vec![evolved, conservation])
}

// ============================================================================
// worldsheet
// ============================================================================

fn cmd_worldsheet(
    cfg: &RunConfig,
    state: &StringState,
    settings: &QuadratureSettings,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let w = cfg.worldsheet.as_ref().expect("normalized");
    let rect = Rect {
        xi0_min: w.xi0_min,
        xi0_max: w.xi0_max,
        xi1_min: w.xi1_min,
        xi1_max: w.xi1_max,
    };
    let patch = reconstruct(state, &rect, w.xi0_n, w.xi1_n, settings).map_err(numerical)?;

    let mut rows = Vec::with_capacity(patch.positions.len());
    for (i0, &xi0) in patch.xi0_grid.iter().enumerate() {
        for (i1, &xi1) in patch.xi1_grid.iter().enumerate() {
            let pos = patch.positions[i0 * patch.xi1_grid.len() + i1];
            rows.push(format!("{},{},{},{}", fmt(xi0), fmt(xi1), fmt(pos[0]), fmt(pos[1])));
        }
    }
    let path = write_csv(
        out.join("worldsheet.csv"),
        cfg,
        &[format!("# error_budget: {}", fmt(patch.error_budget))],
        "xi0,xi1,X3,X1",
        &rows,
    )?;
    Ok(vec![path])
}

// ============================================================================
// cusps
// ============================================================================

#[derive(Serialize)]
struct CuspsOut<'a> {
    config: &'a RunConfig,
    scan: &'a CuspScan,
}

fn cmd_cusps(
    cfg: &RunConfig,
    state: &StringState,
    settings: &QuadratureSettings,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let c = cfg.cusps.as_ref().expect("normalized");
    let rect = Rect {
        xi0_min: c.xi0_min,
        xi0_max: c.xi0_max,
        xi1_min: c.xi1_min,
        xi1_max: c.xi1_max,
    };
    let scan = find_cusps(state, &rect, c.xi0_n, c.xi1_n, c.tol, settings).map_err(numerical)?;
    let path = write_json(out.join("cusps.json"), &CuspsOut { config: cfg, scan: &scan })?;
    Ok(vec![path])
}

// ============================================================================
// energy-scan
// ============================================================================

#[derive(Serialize)]
struct EnergyFitOut<'a> {
    config: &'a RunConfig,
    degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    energy_spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<LinearFit>,
}

fn cmd_energy_scan(
    cfg: &RunConfig,
    state: &StringState,
    settings: &QuadratureSettings,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let es = cfg.energy_scan.as_ref().expect("normalized");
    let header = "kappa,p_sq,energy,spin,hamiltonian";

    match linearity_probe(state, &es.kappas, settings) {
        Ok(probe) => {
            let rows: Vec<String> = probe
                .points
                .iter()
                .map(|p| {
                    format!(
                        "{},{},{},{},{}",
                        fmt(p.kappa),
                        fmt(p.p_sq),
                        fmt(p.energy),
                        fmt(p.spin),
                        fmt(p.hamiltonian),
                    )
                })
                .collect();
            let csv = write_csv(out.join("energy_scan.csv"), cfg, &[], header, &rows)?;
            let json = write_json(
                out.join("energy_fit.json"),
                &EnergyFitOut {
                    config: cfg,
                    degenerate: false,
                    energy_spread: None,
                    fit: Some(probe.fit),
                },
            )?;
            Ok(vec![csv, json])
        }
        Err(MechanicsError::DegenerateFit { spread }) => {
            // The scan data is still well defined even when no line can be
            // fitted through it, so write the samples by hand.
            let rows = es
                .kappas
                .iter()
                .map(|&k| {
                    let st = StringState { kappa: k, ..state.clone() };
                    let inv = invariant_set(&st, settings)?;
                    let parts = energy_parts(&st, &inv);
                    Ok(format!(
                        "{},{},{},{},{}",
                        fmt(k),
                        fmt(inv.p_sq),
                        fmt(parts.total),
                        fmt(inv.spin),
                        fmt(hamiltonian(&st, &inv)),
                    ))
                })
                .collect::<Result<Vec<_>, psl_core::quadrature::QuadratureError>>()
                .map_err(numerical)?;
            let csv = write_csv(out.join("energy_scan.csv"), cfg, &[], header, &rows)?;
            let json = write_json(
                out.join("energy_fit.json"),
                &EnergyFitOut {
                    config: cfg,
                    degenerate: true,
                    energy_spread: Some(spread),
                    fit: None,
                },
            )?;
            Ok(vec![csv, json])
        }
        Err(e) => Err(numerical(e)),
    }
}
