//! Flux (and bias-current) sweeps over the solver pipeline, and the CSV /
//! JSON persistence formats.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::Write;

use crate::circuit::{CircuitParams, Design};
use crate::config::BackendChoice;
use crate::error::{Result, TorqError};
use crate::hamiltonian::{
    build_charge_basis, build_flux_grid, BasisTag, ChargeBasisSpec, FluxGridSpec,
};
use crate::observables::{current_operator, expectation, extract_qubit_params, QubitParams};
use crate::solve::solve_lowest;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Energies,
    Currents,
    QubitParams,
}

impl OutputKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "energies" => Ok(OutputKind::Energies),
            "currents" => Ok(OutputKind::Currents),
            "qubit_params" => Ok(OutputKind::QubitParams),
            other => Err(TorqError::InvalidConfig(format!(
                "unknown output kind `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub params: CircuitParams,
    /// Bias grid: reduced flux for OpenB, i_ext for ClosedA.
    pub grid: Vec<f64>,
    pub backend: BackendChoice,
    pub charge_spec: ChargeBasisSpec,
    pub flux_spec: FluxGridSpec,
    pub k: usize,
    pub outputs: BTreeSet<OutputKind>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validated()?;
        if self.grid.is_empty() || self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(TorqError::InvalidConfig(
                "sweep grid must be non-empty and strictly ascending".into(),
            ));
        }
        let needs_two = self.outputs.contains(&OutputKind::Currents)
            || self.outputs.contains(&OutputKind::QubitParams);
        if needs_two && self.k < 2 {
            return Err(TorqError::InvalidConfig(
                "k must be >= 2 when currents or qubit_params are requested".into(),
            ));
        }
        if self.k < 1 {
            return Err(TorqError::InvalidConfig("k must be >= 1".into()));
        }
        if self.backend != BackendChoice::Grid && self.params.design == Design::ClosedA {
            return Err(TorqError::InvalidConfig(
                "the charge basis does not support design closed_a; use backend \"grid\"".into(),
            ));
        }
        Ok(())
    }
}

/// One bias point of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub bias: f64,
    pub energies: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i1: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub config_hash: String,
    pub backend: String,
    pub discretization: String,
    pub tool_version: String,
    /// Isolated here so data records stay byte-identical across reruns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub bias_kind: String,
    pub records: Vec<SweepRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qubit_params: Option<QubitParams>,
    /// Max |E_charge - E_grid| over the sweep when backend = both.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend_discrepancy: Option<f64>,
    pub metadata: SweepMetadata,
}

fn solve_point(
    params: &CircuitParams,
    basis: &BasisTag,
    bias: f64,
    k: usize,
    want_currents: bool,
) -> Result<SweepRecord> {
    let p = params.with_bias_value(bias);
    let h = match basis {
        BasisTag::Charge(spec) => build_charge_basis(&p, spec),
        BasisTag::FluxGrid(spec) => build_flux_grid(&p, spec),
    }
    .map_err(|e| e.at_bias(bias))?;
    let sp = solve_lowest(&h, k).map_err(|e| e.at_bias(bias))?;
    let (i0, i1) = if want_currents {
        let op = current_operator(&p, &h.basis);
        (
            Some(expectation(&op, &sp, 0)),
            Some(expectation(&op, &sp, 1)),
        )
    } else {
        (None, None)
    };
    Ok(SweepRecord {
        bias,
        energies: sp.energies,
        i0,
        i1,
    })
}

fn run_backend(cfg: &SweepConfig, basis: &BasisTag) -> Result<Vec<SweepRecord>> {
    let want_currents = cfg.outputs.contains(&OutputKind::Currents)
        || cfg.outputs.contains(&OutputKind::QubitParams);
    cfg.grid
        .par_iter()
        .map(|&bias| solve_point(&cfg.params, basis, bias, cfg.k, want_currents))
        .collect()
}

/// Runs the sweep. Grid points are dispatched to the worker pool and
/// assembled in grid order. With backend = both, records come from the
/// charge basis and the cross-backend energy discrepancy is reported.
pub fn run_sweep(cfg: &SweepConfig, config_hash: &str) -> Result<SweepResult> {
    cfg.validate()?;
    let charge = BasisTag::Charge(cfg.charge_spec);
    let grid = BasisTag::FluxGrid(cfg.flux_spec);

    let (records, backend_discrepancy, backend_name, discretization) = match cfg.backend {
        BackendChoice::Charge => (
            run_backend(cfg, &charge)?,
            None,
            "charge",
            format!("n_max={}", cfg.charge_spec.n_max),
        ),
        BackendChoice::Grid => (
            run_backend(cfg, &grid)?,
            None,
            "grid",
            format!(
                "{}x{} half_width=({},{})",
                cfg.flux_spec.points_a,
                cfg.flux_spec.points_b,
                cfg.flux_spec.half_width_a,
                cfg.flux_spec.half_width_b
            ),
        ),
        BackendChoice::Both => {
            let a = run_backend(cfg, &charge)?;
            let b = run_backend(cfg, &grid)?;
            let mut worst = 0.0f64;
            for (ra, rb) in a.iter().zip(&b) {
                for (ea, eb) in ra.energies.iter().zip(&rb.energies) {
                    worst = worst.max((ea - eb).abs());
                }
            }
            (
                a,
                Some(worst),
                "both",
                format!(
                    "n_max={} vs {}x{}",
                    cfg.charge_spec.n_max, cfg.flux_spec.points_a, cfg.flux_spec.points_b
                ),
            )
        }
    };

    let qubit_params = if cfg.outputs.contains(&OutputKind::QubitParams) {
        let sweep: Vec<(f64, f64, f64, f64)> = records
            .iter()
            .map(|r| (r.bias, r.energies[0], r.energies[1], r.i0.unwrap_or(0.0)))
            .collect();
        Some(extract_qubit_params(&sweep)?)
    } else {
        None
    };

    Ok(SweepResult {
        bias_kind: cfg.params.bias.name().to_string(),
        records,
        qubit_params,
        backend_discrepancy,
        metadata: SweepMetadata {
            config_hash: config_hash.to_string(),
            backend: backend_name.to_string(),
            discretization,
            tool_version: TOOL_VERSION.to_string(),
            generated_at: None,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
}

/// 17-significant-digit float formatting; round-trips f64 bit-exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the sweep as CSV: bias column (f or i_ext), absolute energies,
/// currents, then energies relative to E0 at the first grid point.
pub fn write_csv<W: Write>(result: &SweepResult, mut w: W) -> std::io::Result<()> {
    let k = result.records.first().map_or(0, |r| r.energies.len());
    let mut header: Vec<String> = vec![result.bias_kind.clone()];
    header.extend((0..k).map(|i| format!("E{i}_EJ")));
    let has_currents = result.records.first().is_some_and(|r| r.i0.is_some());
    if has_currents {
        header.push("I0_Ic".into());
        header.push("I1_Ic".into());
    }
    header.extend((0..k).map(|i| format!("E{i}_rel_EJ")));
    writeln!(w, "{}", header.join(","))?;
    let e0_ref = result.records.first().map_or(0.0, |r| r.energies[0]);
    for r in &result.records {
        let mut fields: Vec<String> = vec![fmt_f64(r.bias)];
        fields.extend(r.energies.iter().map(|&e| fmt_f64(e)));
        if has_currents {
            fields.push(fmt_f64(r.i0.unwrap_or(0.0)));
            fields.push(fmt_f64(r.i1.unwrap_or(0.0)));
        }
        fields.extend(r.energies.iter().map(|&e| fmt_f64(e - e0_ref)));
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Serializes the sweep (records plus metadata) as pretty JSON.
pub fn write_json<W: Write>(result: &SweepResult, mut w: W) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(result).expect("sweep result serializes");
    writeln!(w, "{text}")
}
