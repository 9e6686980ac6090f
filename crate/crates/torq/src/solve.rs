//! Lowest-k eigenpairs of a HamiltonianMatrix with convergence diagnostics.

use num_complex::Complex64 as C64;

use crate::circuit::CircuitParams;
use crate::error::{Result, TorqError};
use crate::hamiltonian::{
    build_charge_basis, build_flux_grid, BasisTag, ChargeBasisSpec, FluxGridSpec,
    HamiltonianMatrix, Operator,
};
use crate::linalg::{dsyevr_lowest, lanczos_lowest, shift_invert_lanczos, zheevr_lowest, CsrMatrix};

/// Above this dimension the sparse path switches from dense (densified)
/// diagonalization to Lanczos.
pub const DENSE_CUTOFF: usize = 1500;

/// Memory ceiling (f64 count) for the banded Cholesky factor used by the
/// shift-inverted path; ~800 MB of band storage.
const BANDED_BUDGET: usize = 100_000_000;

/// Gaps below this are flagged as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Eigenvectors in the basis of the solved matrix.
#[derive(Debug, Clone)]
pub enum States {
    Real(Vec<Vec<f64>>),
    Complex(Vec<Vec<C64>>),
}

impl States {
    pub fn len(&self) -> usize {
        match self {
            States::Real(v) => v.len(),
            States::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Lowest-k eigenpairs, ascending, with per-pair residuals (E_J units).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub states: States,
    pub residuals: Vec<f64>,
    pub basis: BasisTag,
    /// True for each adjacent pair whose gap is below `DEGENERACY_TOL`.
    pub degenerate_pairs: Vec<bool>,
}

impl Spectrum {
    pub fn gap(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }
}

fn fix_phase_complex(v: &mut [C64]) {
    let mut best = 0usize;
    let mut best_norm = -1.0f64;
    for (i, z) in v.iter().enumerate() {
        let n = z.norm_sqr();
        if n > best_norm + 1e-30 {
            best_norm = n;
            best = i;
        }
    }
    let z = v[best];
    if z.norm() > 0.0 {
        let ph = z / z.norm();
        let ph_conj = ph.conj();
        for x in v.iter_mut() {
            *x *= ph_conj;
        }
    }
}

fn fix_phase_real(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_norm = -1.0f64;
    for (i, x) in v.iter().enumerate() {
        let n = x * x;
        if n > best_norm + 1e-30 {
            best_norm = n;
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn residual_dense(n: usize, data: &[C64], e: f64, v: &[C64]) -> f64 {
    let mut acc = 0.0f64;
    for r in 0..n {
        let mut hv = C64::new(0.0, 0.0);
        for c in 0..n {
            hv += data[c * n + r] * v[c];
        }
        acc += (hv - e * v[r]).norm_sqr();
    }
    acc.sqrt()
}

fn residual_sparse(a: &CsrMatrix, e: f64, v: &[f64]) -> f64 {
    let mut y = vec![0.0; a.n];
    a.matvec(v, &mut y);
    y.iter()
        .zip(v)
        .map(|(yi, vi)| (yi - e * vi).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Computes the `k` algebraically smallest eigenpairs.
///
/// Dense diagonalization for dimension <= `DENSE_CUTOFF` (the charge basis
/// is always dense), Lanczos above. The eigenvector phase is fixed by
/// making the largest-magnitude component real and positive.
pub fn solve_lowest(h: &HamiltonianMatrix, k: usize) -> Result<Spectrum> {
    let dim = h.dimension();
    if k < 1 || k > dim {
        return Err(TorqError::InvalidSpec(format!(
            "k = {k} out of range 1..={dim}"
        )));
    }
    let (energies, states, residuals) = match &h.op {
        Operator::DenseHermitian { n, data } => {
            let mut a = data.clone();
            let (w, mut vecs) = zheevr_lowest(*n, &mut a, k)?;
            for v in vecs.iter_mut() {
                fix_phase_complex(v);
            }
            let res = w
                .iter()
                .zip(&vecs)
                .map(|(&e, v)| residual_dense(*n, data, e, v))
                .collect();
            (w, States::Complex(vecs), res)
        }
        Operator::SparseRealSym(a) => {
            let (w, mut vecs) = if dim <= DENSE_CUTOFF {
                let mut dense = a.to_dense_col_major();
                dsyevr_lowest(dim, &mut dense, k)?
            } else if a.bandwidth().saturating_add(1).saturating_mul(dim) <= BANDED_BUDGET {
                // banded factorization is affordable: shift-inverted
                // iteration converges in tens of matvecs even on
                // clustered low spectra
                let (w, v, _iters) = shift_invert_lanczos(a, k, 1e-11, 700)?;
                (w, v)
            } else {
                let (w, v, _iters) = lanczos_lowest(a, k, 1e-11, 700)?;
                (w, v)
            };
            for v in vecs.iter_mut() {
                fix_phase_real(v);
            }
            let res = w
                .iter()
                .zip(&vecs)
                .map(|(&e, v)| residual_sparse(a, e, v))
                .collect();
            (w, States::Real(vecs), res)
        }
    };
    let degenerate_pairs = energies
        .windows(2)
        .map(|w| w[1] - w[0] < DEGENERACY_TOL)
        .collect();
    Ok(Spectrum {
        energies,
        states,
        residuals,
        basis: h.basis,
        degenerate_pairs,
    })
}

/// One rung of a discretization ladder.
#[derive(Debug, Clone, Copy)]
pub enum DiscretizationSpec {
    Charge(ChargeBasisSpec),
    FluxGrid(FluxGridSpec),
}

/// One row of a convergence report.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub label: String,
    pub e0: f64,
    pub e1: f64,
    /// max(|delta E0|, |delta E1|) against the previous rung.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// True if successive deltas fail to shrink monotonically.
    pub non_monotone: bool,
}

/// Solves the lowest two states on each rung of an ascending ladder and
/// reports successive-rung deltas.
pub fn convergence_report(
    p: &CircuitParams,
    ladder: &[DiscretizationSpec],
) -> Result<ConvergenceReport> {
    if ladder.len() < 2 {
        return Err(TorqError::LadderTooShort(ladder.len()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(ladder.len());
    for spec in ladder {
        let (h, label) = match spec {
            DiscretizationSpec::Charge(s) => {
                (build_charge_basis(p, s)?, format!("charge n_max={}", s.n_max))
            }
            DiscretizationSpec::FluxGrid(s) => (
                build_flux_grid(p, s)?,
                format!(
                    "grid {}x{} hw=({:.3},{:.3})",
                    s.points_a, s.points_b, s.half_width_a, s.half_width_b
                ),
            ),
        };
        let sp = solve_lowest(&h, 2)?;
        let delta = rows.last().map(|prev: &ConvergenceRow| {
            (sp.energies[0] - prev.e0)
                .abs()
                .max((sp.energies[1] - prev.e1).abs())
        });
        rows.push(ConvergenceRow {
            label,
            e0: sp.energies[0],
            e1: sp.energies[1],
            delta,
        });
    }
    let deltas: Vec<f64> = rows.iter().filter_map(|r| r.delta).collect();
    let non_monotone = deltas.windows(2).any(|w| w[1] > w[0]);
    Ok(ConvergenceReport { rows, non_monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Bias, Design};
    use approx::assert_relative_eq;

    fn fig3() -> CircuitParams {
        CircuitParams {
            c_a: 1.0,
            c_b: 1.0,
            c_f: 0.5,
            e_a: 1.0,
            e_b: 1.0,
            e_f: 0.8,
            design: Design::OpenB,
            bias: Bias::ReducedFlux(0.5),
            e_c_ref_over_e_j: 1.0 / 40.0,
        }
    }

    #[test]
    fn diagonal_charging_matrix_has_zero_ground_energy() {
        let p = CircuitParams {
            e_a: 0.0,
            e_b: 0.0,
            e_f: 0.0,
            ..fig3()
        };
        let h = build_charge_basis(&p, &ChargeBasisSpec::new(3).unwrap()).unwrap();
        let sp = solve_lowest(&h, 1).unwrap();
        assert_relative_eq!(sp.energies[0], 0.0, epsilon = 1e-14);
        // ground state is |0,0>
        let States::Complex(v) = &sp.states else { panic!() };
        let side = 7;
        let origin = 3 * side + 3;
        assert_relative_eq!(v[0][origin].re, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn spectrum_invariants_hold_on_fig3() {
        let h = build_charge_basis(&fig3(), &ChargeBasisSpec::new(8).unwrap()).unwrap();
        let sp = solve_lowest(&h, 4).unwrap();
        for w in sp.energies.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for (i, &r) in sp.residuals.iter().enumerate() {
            assert!(
                r < 1e-9 * sp.energies[i].abs().max(1.0),
                "residual {r} too large for state {i}"
            );
        }
        // orthonormality
        let States::Complex(v) = &sp.states else { panic!() };
        for i in 0..v.len() {
            for j in 0..=i {
                let ip: C64 = v[i]
                    .iter()
                    .zip(&v[j])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip.norm() - expect).abs() < 1e-10);
            }
        }
        // a healthy gap at the degeneracy point
        assert!(sp.gap() > 0.0 && !sp.degenerate_pairs[0]);
    }

    #[test]
    fn phase_convention_is_reproducible() {
        let h = build_charge_basis(&fig3().with_reduced_flux(0.48), &ChargeBasisSpec::new(6).unwrap())
            .unwrap();
        let a = solve_lowest(&h, 2).unwrap();
        let b = solve_lowest(&h, 2).unwrap();
        let (States::Complex(va), States::Complex(vb)) = (&a.states, &b.states) else {
            panic!()
        };
        for (x, y) in va[0].iter().zip(&vb[0]) {
            assert_eq!(x, y);
        }
        // largest component is real positive
        let m = va[0]
            .iter()
            .cloned()
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
            .unwrap();
        assert!(m.im.abs() < 1e-12 && m.re > 0.0);
    }

    #[test]
    fn convergence_ladder_needs_two_rungs() {
        let ladder = [DiscretizationSpec::Charge(ChargeBasisSpec::new(4).unwrap())];
        assert!(matches!(
            convergence_report(&fig3(), &ladder),
            Err(TorqError::LadderTooShort(1))
        ));
    }

    #[test]
    fn charge_basis_ladder_converges_monotonically() {
        let ladder: Vec<_> = [6, 8, 10, 12]
            .iter()
            .map(|&n| DiscretizationSpec::Charge(ChargeBasisSpec::new(n).unwrap()))
            .collect();
        let rep = convergence_report(&fig3(), &ladder).unwrap();
        assert!(!rep.non_monotone);
        let last = rep.rows.last().unwrap().delta.unwrap();
        assert!(last < 1e-8, "final delta {last}");
    }
}
