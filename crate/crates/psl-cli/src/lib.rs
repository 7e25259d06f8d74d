//! Config-driven batch front end for the planar string laboratory.
//!
//! A run is one JSON config plus one command name. Every command writes its
//! artifacts under the output directory and echoes the effective config into
//! each artifact, so a result file is reproducible on its own. Outputs are
//! deterministic byte for byte: fixed field order, shortest round-trip float
//! formatting, order-preserving parallel sweeps.

pub mod commands;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use psl_core::invariants::{PhysicalConstants, StringState};
use psl_core::profile::{GaussianBump, Profile};
use psl_core::quadrature::QuadratureSettings;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{field}: {message}")]
    Validation { field: String, message: String },
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation { .. } => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    /// One machine-parsable JSON line for stderr.
    pub fn stderr_json(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            field: Option<&'a str>,
            message: String,
        }
        let field = match self {
            CliError::Validation { field, .. } => Some(field.as_str()),
            _ => None,
        };
        let message = match self {
            CliError::Validation { message, .. } => message.clone(),
            CliError::Numerical(m) | CliError::Io(m) => m.clone(),
        };
        serde_json::to_string(&Line { error: self.kind(), field, message })
            .expect("error line serializes")
    }
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation { field: field.into(), message: message.into() }
}

// ============================================================================
// config schema
// ============================================================================

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsCfg {
    pub gamma: f64,
    pub m0: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpCfg {
    pub a: f64,
    pub c: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoCfg {
    pub bumps: Vec<BumpCfg>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateCfg {
    pub kappa: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub omega: f64,
    #[serde(rename = "Z")]
    pub z: [f64; 2],
    pub rho: RhoCfg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaGridCfg {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsCfg {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub truncation_eps: f64,
    pub omega_grid: OmegaGridCfg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveCfg {
    pub delta: f64,
    /// Also move Z by the free-particle drift (delta / gamma) P.
    pub drift: bool,
}

impl Default for EvolveCfg {
    fn default() -> Self {
        EvolveCfg { delta: 1.0, drift: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldsheetCfg {
    pub xi0_min: f64,
    pub xi0_max: f64,
    pub xi1_min: f64,
    pub xi1_max: f64,
    pub xi0_n: usize,
    pub xi1_n: usize,
}

impl Default for WorldsheetCfg {
    fn default() -> Self {
        WorldsheetCfg {
            xi0_min: -2.0,
            xi0_max: 2.0,
            xi1_min: 0.0,
            xi1_max: 6.0,
            xi0_n: 21,
            xi1_n: 61,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CuspsCfg {
    pub xi0_min: f64,
    pub xi0_max: f64,
    pub xi1_min: f64,
    pub xi1_max: f64,
    pub xi0_n: usize,
    pub xi1_n: usize,
    pub tol: f64,
}

impl Default for CuspsCfg {
    fn default() -> Self {
        CuspsCfg {
            xi0_min: -2.0,
            xi0_max: 2.0,
            xi1_min: 0.0,
            xi1_max: 6.0,
            xi0_n: 33,
            xi1_n: 33,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyScanCfg {
    pub kappas: Vec<f64>,
}

impl Default for EnergyScanCfg {
    fn default() -> Self {
        EnergyScanCfg { kappas: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NullspaceCfg {
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_n: usize,
    pub threshold_ratio: f64,
    pub winding_samples: usize,
}

impl Default for NullspaceCfg {
    fn default() -> Self {
        NullspaceCfg {
            grid_min: -8.0,
            grid_max: 8.0,
            grid_n: 321,
            threshold_ratio: 1e-6,
            winding_samples: 33,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexCfg {
    /// Phase is tracked over [-omega_max, omega_max]; 0 means "use the
    /// widest edge of numerics.omega_grid".
    pub omega_max: f64,
    pub samples: usize,
}

impl Default for IndexCfg {
    fn default() -> Self {
        IndexCfg { omega_max: 0.0, samples: 33 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionCfg {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Default for DispersionCfg {
    fn default() -> Self {
        DispersionCfg { min: -4.0, max: 4.0, n: 33 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DivergencesCfg {
    pub min: f64,
    pub max: f64,
    pub scan_n: usize,
}

impl Default for DivergencesCfg {
    fn default() -> Self {
        DivergencesCfg { min: 0.0, max: 8.0, scan_n: 81 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub constants: ConstantsCfg,
    pub state: StateCfg,
    pub numerics: NumericsCfg,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worldsheet: Option<WorldsheetCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cusps: Option<CuspsCfg>,
    #[serde(default, rename = "energy-scan", skip_serializing_if = "Option::is_none")]
    pub energy_scan: Option<EnergyScanCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nullspace: Option<NullspaceCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<DispersionCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergences: Option<DivergencesCfg>,
}

impl RunConfig {
    /// Fill every optional block with its default so artifacts echo the
    /// values that actually ran.
    pub fn normalized(&self) -> RunConfig {
        let mut cfg = self.clone();
        cfg.evolve.get_or_insert_with(EvolveCfg::default);
        cfg.worldsheet.get_or_insert_with(WorldsheetCfg::default);
        cfg.cusps.get_or_insert_with(CuspsCfg::default);
        cfg.energy_scan.get_or_insert_with(EnergyScanCfg::default);
        cfg.nullspace.get_or_insert_with(NullspaceCfg::default);
        let index = cfg.index.get_or_insert_with(IndexCfg::default);
        if index.omega_max == 0.0 {
            index.omega_max = self.numerics.omega_grid.min.abs().max(self.numerics.omega_grid.max.abs());
        }
        cfg.dispersion.get_or_insert_with(DispersionCfg::default);
        cfg.divergences.get_or_insert_with(DivergencesCfg::default);
        cfg
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.constants;
        for (v, f) in [(c.gamma, "constants.gamma"), (c.m0, "constants.m0"), (c.e0, "constants.E0")] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(f, format!("must be a finite positive number, got {v}")));
            }
        }

        let s = &self.state;
        for (v, f) in [
            (s.kappa, "state.kappa"),
            (s.beta, "state.beta"),
            (s.q, "state.q"),
            (s.omega, "state.omega"),
            (s.z[0], "state.Z[0]"),
            (s.z[1], "state.Z[1]"),
        ] {
            if !v.is_finite() {
                return Err(invalid(f, format!("must be finite, got {v}")));
            }
        }
        if !(s.p.is_finite() && s.p > 0.0) {
            return Err(invalid("state.p", format!("envelope stiffness must be positive, got {}", s.p)));
        }
        for (i, b) in s.rho.bumps.iter().enumerate() {
            if !b.a.is_finite() {
                return Err(invalid(
                    &format!("state.rho.bumps[{i}].a"),
                    format!("must be finite, got {}", b.a),
                ));
            }
            if !b.c.is_finite() {
                return Err(invalid(
                    &format!("state.rho.bumps[{i}].c"),
                    format!("must be finite, got {}", b.c),
                ));
            }
            if !(b.w.is_finite() && b.w > 0.0) {
                return Err(invalid(
                    &format!("state.rho.bumps[{i}].w"),
                    format!("bump width must be positive, got {}", b.w),
                ));
            }
        }

        let n = &self.numerics;
        if !(n.rel_tol.is_finite() && n.rel_tol > 0.0) {
            return Err(invalid("numerics.rel_tol", "must be a positive number"));
        }
        if !(n.abs_tol.is_finite() && n.abs_tol > 0.0) {
            return Err(invalid("numerics.abs_tol", "must be a positive number"));
        }
        if !(n.truncation_eps.is_finite() && n.truncation_eps > 0.0 && n.truncation_eps < 1.0) {
            return Err(invalid("numerics.truncation_eps", "must lie strictly between 0 and 1"));
        }
        let g = &n.omega_grid;
        if !(g.min.is_finite() && g.max.is_finite() && g.max > g.min) {
            return Err(invalid("numerics.omega_grid.min", "grid range must be finite and increasing"));
        }
        if g.n < 5 || g.n % 2 == 0 {
            return Err(invalid(
                "numerics.omega_grid.n",
                format!("grid needs an odd point count of at least 5, got {}", g.n),
            ));
        }

        if let Some(e) = &self.evolve {
            if !e.delta.is_finite() {
                return Err(invalid("evolve.delta", "must be finite"));
            }
        }
        if let Some(w) = &self.worldsheet {
            validate_patch_block("worldsheet", w.xi0_min, w.xi0_max, w.xi1_min, w.xi1_max, w.xi0_n, w.xi1_n)?;
        }
        if let Some(cusps) = &self.cusps {
            validate_patch_block("cusps", cusps.xi0_min, cusps.xi0_max, cusps.xi1_min, cusps.xi1_max, cusps.xi0_n, cusps.xi1_n)?;
            if !(cusps.tol.is_finite() && cusps.tol > 0.0) {
                return Err(invalid("cusps.tol", "must be a positive number"));
            }
        }
        if let Some(es) = &self.energy_scan {
            if es.kappas.len() < 3 {
                return Err(invalid("energy-scan.kappas", "need at least 3 sweep values"));
            }
            if es.kappas.iter().any(|k| !k.is_finite()) {
                return Err(invalid("energy-scan.kappas", "sweep values must be finite"));
            }
        }
        if let Some(ns) = &self.nullspace {
            if !(ns.grid_min.is_finite() && ns.grid_max.is_finite() && ns.grid_max > ns.grid_min) {
                return Err(invalid("nullspace.grid_min", "grid range must be finite and increasing"));
            }
            if ns.grid_n < 5 || ns.grid_n % 2 == 0 {
                return Err(invalid("nullspace.grid_n", "grid needs an odd point count of at least 5"));
            }
            if !(ns.threshold_ratio > 0.0 && ns.threshold_ratio < 1.0) {
                return Err(invalid("nullspace.threshold_ratio", "must lie strictly between 0 and 1"));
            }
            if ns.winding_samples < 9 {
                return Err(invalid("nullspace.winding_samples", "need at least 9 samples"));
            }
        }
        if let Some(ix) = &self.index {
            if !(ix.omega_max.is_finite() && ix.omega_max >= 0.0) {
                return Err(invalid("index.omega_max", "must be nonnegative and finite"));
            }
            if ix.samples < 9 {
                return Err(invalid("index.samples", "need at least 9 samples"));
            }
        }
        if let Some(d) = &self.dispersion {
            if !(d.min.is_finite() && d.max.is_finite() && d.max > d.min) {
                return Err(invalid("dispersion.min", "evaluation range must be finite and increasing"));
            }
            if d.n < 2 {
                return Err(invalid("dispersion.n", "need at least 2 evaluation points"));
            }
        }
        if let Some(d) = &self.divergences {
            if !(d.min.is_finite() && d.max.is_finite() && d.max > d.min) {
                return Err(invalid("divergences.min", "scan range must be finite and increasing"));
            }
            if d.scan_n < 2 {
                return Err(invalid("divergences.scan_n", "need at least 2 scan points"));
            }
        }
        Ok(())
    }

    pub fn settings(&self) -> QuadratureSettings {
        QuadratureSettings {
            rel_tol: self.numerics.rel_tol,
            abs_tol: self.numerics.abs_tol,
            truncation_eps: self.numerics.truncation_eps,
            ..QuadratureSettings::default()
        }
    }

    pub fn build_state(&self) -> Result<StringState, CliError> {
        let constants = PhysicalConstants::new(self.constants.gamma, self.constants.m0, self.constants.e0)
            .map_err(|e| invalid("constants", e.to_string()))?;
        let bumps = self
            .state
            .rho
            .bumps
            .iter()
            .map(|b| GaussianBump { a: b.a, c: b.c, w: b.w })
            .collect();
        let profile = Profile::new(bumps).map_err(|e| invalid("state.rho.bumps", e.to_string()))?;
        StringState::new(
            constants,
            profile,
            self.state.omega,
            self.state.beta,
            self.state.p,
            self.state.q,
            self.state.kappa,
            self.state.z,
        )
        .map_err(|e| invalid("state", e.to_string()))
    }
}

fn validate_patch_block(
    block: &str,
    xi0_min: f64,
    xi0_max: f64,
    xi1_min: f64,
    xi1_max: f64,
    xi0_n: usize,
    xi1_n: usize,
) -> Result<(), CliError> {
    if !(xi0_min.is_finite() && xi0_max.is_finite() && xi0_max > xi0_min) {
        return Err(invalid(&format!("{block}.xi0_min"), "range must be finite and increasing"));
    }
    if !(xi1_min.is_finite() && xi1_max.is_finite() && xi1_max > xi1_min) {
        return Err(invalid(&format!("{block}.xi1_min"), "range must be finite and increasing"));
    }
    if xi1_min < 0.0 {
        return Err(invalid(&format!("{block}.xi1_min"), "string parameter xi1 is nonnegative"));
    }
    if xi0_n < 2 || xi1_n < 2 {
        return Err(invalid(&format!("{block}.xi0_n"), "patch needs at least 2 samples per axis"));
    }
    Ok(())
}

/// Parse a config from JSON text.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| invalid("config", e.to_string()))
}

/// Full pipeline: read, parse, validate, honor PSL_THREADS, run the command.
pub fn run_from_path(config_path: &Path, command: &str, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| invalid("config", format!("cannot read {}: {e}", config_path.display())))?;
    let config = parse_config(&text)?;

    match std::env::var("PSL_THREADS") {
        Ok(raw) => {
            let n: usize = raw
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| invalid("PSL_THREADS", format!("expected a positive integer, got {raw:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
            pool.install(|| commands::run(&config, command, out_dir))
        }
        Err(_) => commands::run(&config, command, out_dir),
    }
}
