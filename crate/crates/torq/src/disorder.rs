//! Seeded Monte Carlo over fabrication disorder in the six circuit
//! parameters. Draws are counter-based, keyed by (seed, realization
//! index, parameter name), so results are independent of evaluation
//! order and worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::CircuitParams;
use crate::error::{Result, TorqError};
use crate::hamiltonian::{build_charge_basis, ChargeBasisSpec};
use crate::observables::{current_operator, expectation};
use crate::solve::solve_lowest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Uniform on [-1, 1].
    UniformPm,
    /// Standard normal truncated at +/- 3.
    Gaussian,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub fractional_spread: f64,
    pub n_realizations: u64,
    pub distribution: Distribution,
    pub seed: u64,
}

impl DisorderSpec {
    pub fn validated(self) -> Result<Self> {
        if !(0.0..1.0).contains(&self.fractional_spread) {
            return Err(TorqError::InvalidSpec(format!(
                "fractional_spread must be in [0, 1), got {}",
                self.fractional_spread
            )));
        }
        if self.n_realizations < 1 {
            return Err(TorqError::InvalidSpec("n_realizations must be >= 1".into()));
        }
        Ok(self)
    }
}

/// One u64 from SHA-256 of (seed, index, parameter name, counter).
fn counter_word(seed: u64, index: u64, param: &str, counter: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(index.to_le_bytes());
    h.update(param.as_bytes());
    h.update(counter.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

fn unit_uniform(word: u64) -> f64 {
    // [0, 1) with 53 bits; the convention used by most counter-based RNGs
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draw u from the chosen distribution for one (seed, index, param) key.
fn draw(seed: u64, index: u64, param: &str, d: Distribution) -> f64 {
    match d {
        Distribution::UniformPm => 2.0 * unit_uniform(counter_word(seed, index, param, 0)) - 1.0,
        Distribution::Gaussian => {
            // Box-Muller, redrawing until within +/- 3
            let mut counter = 0u32;
            loop {
                let u1 = unit_uniform(counter_word(seed, index, param, counter));
                let u2 = unit_uniform(counter_word(seed, index, param, counter + 1));
                let r = (-2.0 * (1.0 - u1).ln()).sqrt();
                let z = r * (std::f64::consts::TAU * u2).cos();
                if z.abs() <= 3.0 {
                    return z;
                }
                counter += 2;
            }
        }
    }
}

const PARAM_NAMES: [&str; 6] = ["c_a", "c_b", "c_f", "e_a", "e_b", "e_f"];

/// One disorder realization: each of the six parameters multiplied by
/// (1 + spread * u). The draw depends only on (seed, index, parameter
/// name). A non-positive sampled capacitance is resampled once, then an
/// error.
pub fn sample_realization(
    base: &CircuitParams,
    d: &DisorderSpec,
    index: u64,
) -> Result<CircuitParams> {
    let d = d.validated()?;
    if index >= d.n_realizations {
        return Err(TorqError::InvalidSpec(format!(
            "realization index {index} >= n_realizations {}",
            d.n_realizations
        )));
    }
    let mut out = *base;
    let fields: [&mut f64; 6] = [
        &mut out.c_a,
        &mut out.c_b,
        &mut out.c_f,
        &mut out.e_a,
        &mut out.e_b,
        &mut out.e_f,
    ];
    for (field, name) in fields.into_iter().zip(PARAM_NAMES) {
        let is_capacitance = name.starts_with('c');
        let mut value = *field * (1.0 + d.fractional_spread * draw(d.seed, index, name, d.distribution));
        if is_capacitance && value <= 0.0 {
            // resample once under a distinct key
            let resample_name = format!("{name}#resample");
            value = *field
                * (1.0 + d.fractional_spread * draw(d.seed, index, &resample_name, d.distribution));
            if value <= 0.0 {
                return Err(TorqError::InvalidRealization {
                    index,
                    field: match name {
                        "c_a" => "c_a",
                        "c_b" => "c_b",
                        _ => "c_f",
                    },
                });
            }
        }
        *field = value;
    }
    Ok(out)
}

/// Per-realization current and energy curves over the flux grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationCurve {
    pub realization: u64,
    pub e0: Vec<f64>,
    pub e1: Vec<f64>,
    pub i0: Vec<f64>,
    pub i1: Vec<f64>,
}

/// Percentile bands (5/25/50/75/95) of a current at every flux point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PercentileBands {
    pub p5: Vec<f64>,
    pub p25: Vec<f64>,
    pub p50: Vec<f64>,
    pub p75: Vec<f64>,
    pub p95: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub f_grid: Vec<f64>,
    pub ground_current: PercentileBands,
    pub excited_current: PercentileBands,
    /// Ground-current zero-crossing flux per realization (None recorded
    /// as a count, not fatal).
    pub zero_crossings: Vec<Option<f64>>,
    pub n_no_crossing: usize,
    /// Fraction of realizations whose crossing lies in [0.45, 0.55].
    pub fraction_crossing_in_window: f64,
    pub spec: DisorderSpec,
}

/// Linear-interpolation percentile of a sorted slice, q in [0, 100].
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q / 100.0 * (n as f64 - 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

fn bands_for(curves: &[RealizationCurve], pick: impl Fn(&RealizationCurve) -> &[f64], n_pts: usize) -> PercentileBands {
    let mut bands = PercentileBands {
        p5: Vec::with_capacity(n_pts),
        p25: Vec::with_capacity(n_pts),
        p50: Vec::with_capacity(n_pts),
        p75: Vec::with_capacity(n_pts),
        p95: Vec::with_capacity(n_pts),
    };
    for j in 0..n_pts {
        let mut col: Vec<f64> = curves.iter().map(|c| pick(c)[j]).collect();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bands.p5.push(percentile(&col, 5.0));
        bands.p25.push(percentile(&col, 25.0));
        bands.p50.push(percentile(&col, 50.0));
        bands.p75.push(percentile(&col, 75.0));
        bands.p95.push(percentile(&col, 95.0));
    }
    bands
}

/// First sign change of I0(f), located by linear interpolation.
fn zero_crossing(f_grid: &[f64], i0: &[f64]) -> Option<f64> {
    for j in 1..i0.len() {
        let (a, b) = (i0[j - 1], i0[j]);
        if a == 0.0 {
            return Some(f_grid[j - 1]);
        }
        if a * b < 0.0 {
            let w = a / (a - b);
            return Some(f_grid[j - 1] + w * (f_grid[j] - f_grid[j - 1]));
        }
    }
    if *i0.last().unwrap() == 0.0 {
        return Some(*f_grid.last().unwrap());
    }
    None
}

/// Aggregates raw curves into percentile bands and crossing statistics.
pub fn summarize(
    curves: &[RealizationCurve],
    f_grid: &[f64],
    spec: &DisorderSpec,
) -> Result<EnsembleSummary> {
    if curves.is_empty() {
        return Err(TorqError::InvalidSpec("empty raw curve set".into()));
    }
    let n_pts = f_grid.len();
    let zero_crossings: Vec<Option<f64>> = curves
        .iter()
        .map(|c| zero_crossing(f_grid, &c.i0))
        .collect();
    let n_no_crossing = zero_crossings.iter().filter(|z| z.is_none()).count();
    let in_window = zero_crossings
        .iter()
        .flatten()
        .filter(|&&f| (0.45..=0.55).contains(&f))
        .count();
    Ok(EnsembleSummary {
        f_grid: f_grid.to_vec(),
        ground_current: bands_for(curves, |c| &c.i0, n_pts),
        excited_current: bands_for(curves, |c| &c.i1, n_pts),
        zero_crossings,
        n_no_crossing,
        fraction_crossing_in_window: in_window as f64 / curves.len() as f64,
        spec: *spec,
    })
}

/// Solves one realization over the flux grid (charge basis).
fn run_realization(
    params: &CircuitParams,
    basis: &ChargeBasisSpec,
    f_grid: &[f64],
    index: u64,
) -> Result<RealizationCurve> {
    let n = f_grid.len();
    let mut curve = RealizationCurve {
        realization: index,
        e0: Vec::with_capacity(n),
        e1: Vec::with_capacity(n),
        i0: Vec::with_capacity(n),
        i1: Vec::with_capacity(n),
    };
    for &f in f_grid {
        let p = params.with_reduced_flux(f);
        let h = build_charge_basis(&p, basis).map_err(|e| e.at_bias(f))?;
        let sp = solve_lowest(&h, 2).map_err(|e| e.at_bias(f))?;
        let op = current_operator(&p, &h.basis);
        curve.e0.push(sp.energies[0]);
        curve.e1.push(sp.energies[1]);
        curve.i0.push(expectation(&op, &sp, 0));
        curve.i1.push(expectation(&op, &sp, 1));
    }
    Ok(curve)
}

/// Runs the full ensemble. Realizations are independent work items mapped
/// in parallel; results are reduced in realization-index order, so the
/// output is identical for any worker count.
pub fn run_ensemble(
    base: &CircuitParams,
    d: &DisorderSpec,
    f_grid: &[f64],
    basis: &ChargeBasisSpec,
) -> Result<(EnsembleSummary, Vec<RealizationCurve>)> {
    let d = d.validated()?;
    let base = base.validated()?;
    if f_grid.is_empty() || f_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TorqError::InvalidSpec(
            "f_grid must be non-empty and strictly ascending".into(),
        ));
    }
    if f_grid.iter().any(|&f| !(0.0..=1.0).contains(&f)) {
        return Err(TorqError::InvalidSpec("f_grid must lie within [0, 1]".into()));
    }
    let curves: Vec<RealizationCurve> = (0..d.n_realizations)
        .into_par_iter()
        .map(|index| {
            let p = sample_realization(&base, &d, index)?;
            run_realization(&p, basis, f_grid, index).map_err(|e| e.at_realization(index))
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&curves, f_grid, &d)?;
    Ok((summary, curves))
}
