//! Circulating-current expectation values, two-level reduction
//! (Delta, epsilon, I_p) and the sigma_z-basis effective Hamiltonian.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::circuit::{compute_transform, Bias, CircuitParams};
use crate::error::{Result, TorqError};
use crate::hamiltonian::{BasisTag, HamiltonianMatrix, Operator};
use crate::solve::{solve_lowest, Spectrum, States};

/// Circulating-current operator in units of I_c = 2*pi*E_J/Phi_0.
///
/// Realizes I = dH/dPhi_ext for the F-junction term: the operator
/// e_f * sin(2*pi*f + phi_A - phi_B). For the current-biased design the
/// same F-junction current is taken at the built-in half-flux offset.
pub fn current_operator(p: &CircuitParams, basis: &BasisTag) -> Operator {
    match basis {
        BasisTag::Charge(spec) => {
            let f = p.reduced_flux().unwrap_or(0.5);
            let n_max = spec.n_max as i64;
            let side = (2 * n_max + 1) as usize;
            let dim = side * side;
            let idx =
                |na: i64, nb: i64| -> usize { ((na + n_max) as usize) * side + (nb + n_max) as usize };
            // sin = (e^{i theta} - e^{-i theta}) / 2i acting as the
            // simultaneous (n_A + 1, n_B - 1) hop
            let up = C64::from_polar(p.e_f / 2.0, TAU * f) / C64::new(0.0, 1.0);
            let mut data = vec![C64::new(0.0, 0.0); dim * dim];
            for na in -n_max..=n_max {
                for nb in -n_max..=n_max {
                    let col = idx(na, nb);
                    if na < n_max && nb > -n_max {
                        data[col * dim + idx(na + 1, nb - 1)] += up;
                    }
                    if na > -n_max && nb < n_max {
                        data[col * dim + idx(na - 1, nb + 1)] += up.conj();
                    }
                }
            }
            Operator::DenseHermitian { n: dim, data }
        }
        BasisTag::FluxGrid(spec) => {
            let t = compute_transform(p);
            let offset = match p.bias {
                Bias::ReducedFlux(f) => TAU * f,
                Bias::CurrentExt(_) => PI,
            };
            let (center_a, center_b) = match p.bias {
                Bias::CurrentExt(i_ext) if i_ext != 0.0 => {
                    crate::hamiltonian::find_local_minimum(p, &t)
                }
                _ => (0.0, 0.0),
            };
            let (na, nb) = (spec.points_a, spec.points_b);
            let ha = 2.0 * spec.half_width_a / (na as f64 - 1.0);
            let hb = 2.0 * spec.half_width_b / (nb as f64 - 1.0);
            let mut trip = Vec::with_capacity(na * nb);
            for i in 0..na {
                let x_a = center_a - spec.half_width_a + i as f64 * ha;
                for j in 0..nb {
                    let x_b = center_b - spec.half_width_b + j as f64 * hb;
                    let s = x_a * (t.cos_theta + t.sin_theta) + x_b * (t.sin_theta - t.cos_theta);
                    let v = p.e_f * (offset + s).sin();
                    let k = (i * nb + j) as u32;
                    trip.push((k, k, v));
                }
            }
            Operator::SparseRealSym(crate::linalg::CsrMatrix::from_triplets(na * nb, trip))
        }
    }
}

/// Expectation value of an operator in one eigenstate of a spectrum.
pub fn expectation(op: &Operator, spectrum: &Spectrum, state_index: usize) -> f64 {
    match (op, &spectrum.states) {
        (Operator::DenseHermitian { n, data }, States::Complex(vs)) => {
            let v = &vs[state_index];
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..*n {
                let mut hv = C64::new(0.0, 0.0);
                for c in 0..*n {
                    hv += data[c * n + r] * v[c];
                }
                acc += v[r].conj() * hv;
            }
            acc.re
        }
        (Operator::SparseRealSym(a), States::Real(vs)) => {
            let v = &vs[state_index];
            let mut y = vec![0.0; a.n];
            a.matvec(v, &mut y);
            v.iter().zip(&y).map(|(vi, yi)| vi * yi).sum()
        }
        _ => panic!("operator and spectrum live in different bases"),
    }
}

/// Circulating current of one eigenstate, I_c units.
pub fn circulating_current(
    h: &HamiltonianMatrix,
    spectrum: &Spectrum,
    state_index: usize,
) -> f64 {
    let op = current_operator(&h.params, &h.basis);
    expectation(&op, spectrum, state_index)
}

/// Convenience: build, solve and take the current of one eigenstate.
pub fn circulating_current_at(
    p: &CircuitParams,
    basis: &BasisTag,
    f: f64,
    state_index: usize,
) -> Result<f64> {
    let p = p.with_reduced_flux(f);
    let h = match basis {
        BasisTag::Charge(spec) => crate::hamiltonian::build_charge_basis(&p, spec)?,
        BasisTag::FluxGrid(spec) => crate::hamiltonian::build_flux_grid(&p, spec)?,
    };
    let sp = solve_lowest(&h, state_index + 1)?;
    Ok(circulating_current(&h, &sp, state_index))
}

/// Effective two-level parameters extracted from a flux sweep.
///
/// `delta` and the tabulated `epsilon_of_f` are angular frequencies in
/// units of E_J/hbar; numerically they equal the corresponding energies
/// hbar*Delta, hbar*epsilon in E_J.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QubitParams {
    pub delta: f64,
    pub epsilon_of_f: Vec<(f64, f64)>,
    /// Persistent-current amplitude, I_c units.
    pub i_p: f64,
    pub f_degeneracy: f64,
    /// |I0| plateau cross-check of `i_p` (I_c units), when currents were
    /// available in the sweep.
    pub i_plateau: Option<f64>,
}

impl QubitParams {
    /// Linear interpolation of the tabulated epsilon(f).
    pub fn epsilon_at(&self, f: f64) -> Result<f64> {
        let tab = &self.epsilon_of_f;
        if tab.is_empty() {
            return Err(TorqError::InvalidSpec("empty epsilon table".into()));
        }
        let (f0, _) = tab[0];
        let (f1, _) = tab[tab.len() - 1];
        if f < f0 || f > f1 {
            return Err(TorqError::InvalidSpec(format!(
                "f = {f} outside fitted range [{f0}, {f1}]"
            )));
        }
        let j = tab.partition_point(|&(fi, _)| fi <= f).min(tab.len() - 1);
        if j == 0 {
            return Ok(tab[0].1);
        }
        let (fa, ea) = tab[j - 1];
        let (fb, eb) = tab[j];
        if fb == fa {
            return Ok(ea);
        }
        Ok(ea + (eb - ea) * (f - fa) / (fb - fa))
    }

    /// gap(f) = hbar * sqrt(Delta^2 + eps^2), E_J units.
    pub fn gap_at(&self, f: f64) -> Result<f64> {
        let eps = self.epsilon_at(f)?;
        Ok((self.delta * self.delta + eps * eps).sqrt())
    }
}

/// One record of a flux sweep for the extraction: (f, E0, E1, I0).
pub type SweepPoint = (f64, f64, f64, f64);

/// Extracts (Delta, epsilon(f), I_p, f_degeneracy) from a sweep that
/// brackets the minimum gap.
///
/// The degeneracy point is the argmin of the gap with parabolic refinement
/// on gap^2 (exactly quadratic in f for an ideal two-level system);
/// epsilon carries the sign of f - f_degeneracy; I_p comes from the linear
/// fit of epsilon(f) near degeneracy, with the |I0| plateau retained as a
/// cross-check.
pub fn extract_qubit_params(sweep: &[SweepPoint]) -> Result<QubitParams> {
    if sweep.len() < 3 {
        return Err(TorqError::InvalidSpec(
            "qubit extraction needs at least 3 sweep points".into(),
        ));
    }
    let gaps: Vec<f64> = sweep.iter().map(|&(_, e0, e1, _)| e1 - e0).collect();
    let imin = gaps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    if imin == 0 || imin == sweep.len() - 1 {
        return Err(TorqError::NoBracket(sweep[imin].0));
    }

    // parabolic refinement on g^2 through the three points around the min
    let (fm, f0, fp) = (sweep[imin - 1].0, sweep[imin].0, sweep[imin + 1].0);
    let (gm, g0, gp) = (
        gaps[imin - 1] * gaps[imin - 1],
        gaps[imin] * gaps[imin],
        gaps[imin + 1] * gaps[imin + 1],
    );
    // quadratic through (fm,gm),(f0,g0),(fp,gp); vertex and value there
    let d1 = (g0 - gm) / (f0 - fm);
    let d2 = (gp - g0) / (fp - f0);
    let curv = (d2 - d1) / (fp - fm) * 2.0; // second derivative
    let (f_degeneracy, gap_min_sq) = if curv > 0.0 {
        // d1, d2 are parabola derivatives at the two secant midpoints;
        // their mean is the derivative at the mean of those midpoints
        let slope_mid = (d1 + d2) / 2.0;
        let fmid = (fm + 2.0 * f0 + fp) / 4.0;
        let fv = fmid - slope_mid / curv;
        // evaluate the parabola at its vertex via Lagrange form
        let l = |f: f64| {
            gm * (f - f0) * (f - fp) / ((fm - f0) * (fm - fp))
                + g0 * (f - fm) * (f - fp) / ((f0 - fm) * (f0 - fp))
                + gp * (f - fm) * (f - f0) / ((fp - fm) * (fp - f0))
        };
        (fv, l(fv).max(0.0))
    } else {
        (f0, g0)
    };
    let hbar_delta = gap_min_sq.sqrt();

    // epsilon table with the sign convention eps > 0 for f > f_degeneracy
    let epsilon_of_f: Vec<(f64, f64)> = sweep
        .iter()
        .zip(&gaps)
        .map(|(&(f, ..), &g)| {
            let e2 = (g * g - gap_min_sq).max(0.0);
            (f, (f - f_degeneracy).signum() * e2.sqrt())
        })
        .collect();

    // slope of hbar*eps(f) near degeneracy: least-squares through points
    // within a window, excluding the immediate vicinity where eps is
    // dominated by curvature noise
    let span = sweep[sweep.len() - 1].0 - sweep[0].0;
    let window = (0.25 * span).max(3.0 * average_spacing(sweep));
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut n = 0.0;
    for &(f, eps) in &epsilon_of_f {
        let d = f - f_degeneracy;
        if d.abs() <= window && d.abs() > 1e-12 {
            sx += d;
            sy += eps;
            sxx += d * d;
            sxy += d * eps;
            n += 1.0;
        }
    }
    if n < 2.0 {
        return Err(TorqError::InvalidSpec(
            "too few sweep points near degeneracy for the epsilon slope fit".into(),
        ));
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    // eps = 2 I_p (Phi_ext - Phi_0/2) / hbar, so hbar eps = 2 I_p Phi_0 df.
    // With currents in I_c = 2 pi E_J / Phi_0 and energies in E_J:
    // i_p = slope / (4 pi).
    let i_p = slope.abs() / (4.0 * PI);

    // plateau cross-check: largest |I0| over the sweep
    let i_plateau = sweep
        .iter()
        .map(|&(_, _, _, i0)| i0.abs())
        .max_by(|a, b| a.partial_cmp(b).unwrap())
        .filter(|&v| v > 0.0);

    Ok(QubitParams {
        delta: hbar_delta,
        epsilon_of_f,
        i_p,
        f_degeneracy,
        i_plateau,
    })
}

fn average_spacing(sweep: &[SweepPoint]) -> f64 {
    (sweep[sweep.len() - 1].0 - sweep[0].0) / (sweep.len() as f64 - 1.0)
}

/// 2x2 effective Hamiltonian -(hbar/2)(Delta sigma_x + eps sigma_z) in the
/// physical {|L>, |R>} basis, E_J units. Row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelHamiltonian {
    pub matrix: [[f64; 2]; 2],
    pub hbar_delta: f64,
    pub hbar_epsilon: f64,
}

impl TwoLevelHamiltonian {
    pub fn eigenvalues(&self) -> (f64, f64) {
        let r = 0.5
            * (self.hbar_delta * self.hbar_delta + self.hbar_epsilon * self.hbar_epsilon).sqrt();
        (-r, r)
    }

    pub fn gap(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        hi - lo
    }
}

/// Builds the two-level Hamiltonian at a given reduced flux from the
/// fitted qubit parameters.
pub fn two_level_hamiltonian(q: &QubitParams, f: f64) -> Result<TwoLevelHamiltonian> {
    let eps = q.epsilon_at(f)?;
    Ok(two_level_from_delta_eps(q.delta, eps))
}

/// -(hbar/2)(Delta sigma_x + eps sigma_z) from raw (Delta, eps).
pub fn two_level_from_delta_eps(hbar_delta: f64, hbar_epsilon: f64) -> TwoLevelHamiltonian {
    TwoLevelHamiltonian {
        matrix: [
            [-hbar_epsilon / 2.0, -hbar_delta / 2.0],
            [-hbar_delta / 2.0, hbar_epsilon / 2.0],
        ],
        hbar_delta,
        hbar_epsilon,
    }
}
