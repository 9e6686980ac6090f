//! Hamiltonian assembly in two independent discretizations: a charge
//! (plane-wave) basis in node coordinates for the flux-biased design, and
//! a finite-difference grid in normal-mode coordinates for both designs.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::circuit::{
    capacitance_matrix_inverse, charging_energies, compute_transform, Bias, CircuitParams, Design,
    ModeTransform,
};
use crate::error::{Result, TorqError};
use crate::linalg::CsrMatrix;

/// Charge cutoff per node; basis states |n_A, n_B> with |n| <= n_max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChargeBasisSpec {
    pub n_max: usize,
}

impl ChargeBasisSpec {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(TorqError::InvalidSpec("n_max must be >= 1".into()));
        }
        Ok(ChargeBasisSpec { n_max })
    }

    pub fn dimension(&self) -> usize {
        let side = 2 * self.n_max + 1;
        side * side
    }
}

/// Finite-difference grid in the mode phase coordinates
/// x = 2*pi*psi/Phi_0, with hard-wall boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxGridSpec {
    pub half_width_a: f64,
    pub half_width_b: f64,
    pub points_a: usize,
    pub points_b: usize,
}

impl FluxGridSpec {
    pub fn new(half_width_a: f64, half_width_b: f64, points_a: usize, points_b: usize) -> Result<Self> {
        let spec = FluxGridSpec {
            half_width_a,
            half_width_b,
            points_a,
            points_b,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn square(half_width: f64, points: usize) -> Result<Self> {
        Self::new(half_width, half_width, points, points)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width_a > 0.0 && self.half_width_b > 0.0) {
            return Err(TorqError::InvalidSpec("half widths must be positive".into()));
        }
        for (axis, points) in [("a", self.points_a), ("b", self.points_b)] {
            if points < 31 || points % 2 == 0 {
                return Err(TorqError::GridTooCoarse { axis, points });
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.points_a * self.points_b
    }
}

/// Which discretization a matrix (or spectrum) lives in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BasisTag {
    Charge(ChargeBasisSpec),
    FluxGrid(FluxGridSpec),
}

/// Matrix storage: dense column-major Hermitian for the charge basis,
/// sparse real symmetric for the flux grid.
#[derive(Debug, Clone)]
pub enum Operator {
    DenseHermitian { n: usize, data: Vec<C64> },
    SparseRealSym(CsrMatrix),
}

impl Operator {
    pub fn dimension(&self) -> usize {
        match self {
            Operator::DenseHermitian { n, .. } => *n,
            Operator::SparseRealSym(a) => a.n,
        }
    }
}

/// Assembled Hamiltonian in E_J units with basis metadata.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    pub op: Operator,
    pub basis: BasisTag,
    pub params: CircuitParams,
}

impl HamiltonianMatrix {
    pub fn dimension(&self) -> usize {
        self.op.dimension()
    }
}

/// Charge-basis Hamiltonian for the flux-biased (OpenB) design.
///
/// Kinetic part is the exact quadratic form e_c_ref * n^T C^-1 n; the
/// Josephson terms are nearest-neighbour hops, with the F-junction term
/// carrying the flux phase exp(i 2 pi f) on the simultaneous
/// (n_A + 1, n_B - 1) hop.
pub fn build_charge_basis(p: &CircuitParams, spec: &ChargeBasisSpec) -> Result<HamiltonianMatrix> {
    let p = p.validated()?;
    let f = match (p.design, p.bias) {
        (Design::OpenB, Bias::ReducedFlux(f)) => f,
        _ => return Err(TorqError::UnsupportedDesign(p.design.name())),
    };
    if spec.n_max < 1 {
        return Err(TorqError::InvalidSpec("n_max must be >= 1".into()));
    }

    let n_max = spec.n_max as i64;
    let side = (2 * n_max + 1) as usize;
    let dim = side * side;
    let idx = |na: i64, nb: i64| -> usize {
        ((na + n_max) as usize) * side + (nb + n_max) as usize
    };

    let cinv = capacitance_matrix_inverse(&p);
    let ec = p.e_c_ref_over_e_j;
    let phase = C64::from_polar(1.0, TAU * f);

    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    // column-major: element (row, col) at data[col * dim + row]
    let mut set = |row: usize, col: usize, v: C64| {
        data[col * dim + row] += v;
    };

    for na in -n_max..=n_max {
        for nb in -n_max..=n_max
        {
            let col = idx(na, nb);
            let (naf, nbf) = (na as f64, nb as f64);
            let kin = ec
                * (cinv[0][0] * naf * naf
                    + 2.0 * cinv[0][1] * naf * nbf
                    + cinv[1][1] * nbf * nbf);
            set(col, col, C64::new(kin, 0.0));
            if na < n_max {
                set(idx(na + 1, nb), col, C64::new(-p.e_a / 2.0, 0.0));
            }
            if na > -n_max {
                set(idx(na - 1, nb), col, C64::new(-p.e_a / 2.0, 0.0));
            }
            if nb < n_max {
                set(idx(na, nb + 1), col, C64::new(-p.e_b / 2.0, 0.0));
            }
            if nb > -n_max {
                set(idx(na, nb - 1), col, C64::new(-p.e_b / 2.0, 0.0));
            }
            // -E_F/2 [ e^{i 2 pi f} |na+1, nb-1><na, nb| + h.c. ]
            if na < n_max && nb > -n_max {
                set(idx(na + 1, nb - 1), col, -0.5 * p.e_f * phase);
            }
            if na > -n_max && nb < n_max {
                set(idx(na - 1, nb + 1), col, -0.5 * p.e_f * phase.conj());
            }
        }
    }

    Ok(HamiltonianMatrix {
        op: Operator::DenseHermitian { n: dim, data },
        basis: BasisTag::Charge(*spec),
        params: p,
    })
}

/// Potential energy (E_J units) at one point of the mode phase plane.
/// Evaluates U + DeltaU for the active design.
pub fn potential_on_grid(p: &CircuitParams, t: &ModeTransform, x_a: f64, x_b: f64) -> f64 {
    let phi_a = x_a * t.cos_theta + x_b * t.sin_theta;
    let phi_b = -x_a * t.sin_theta + x_b * t.cos_theta;
    let s = x_a * (t.cos_theta + t.sin_theta) + x_b * (t.sin_theta - t.cos_theta);
    let u = -p.e_a * phi_a.cos() - p.e_b * phi_b.cos();
    let du = match p.bias {
        Bias::ReducedFlux(f) => -p.e_f * (TAU * f + s).cos(),
        // The printed half-flux offset of the pi-junction, plus the bias
        // tilt with the Legendre-consistent sign.
        Bias::CurrentExt(i_ext) => -p.e_f * (PI + s).cos() - i_ext * s,
    };
    u + du
}

/// Gradient of `potential_on_grid` with respect to (x_a, x_b), E_J units.
pub fn potential_gradient(p: &CircuitParams, t: &ModeTransform, x_a: f64, x_b: f64) -> (f64, f64) {
    let phi_a = x_a * t.cos_theta + x_b * t.sin_theta;
    let phi_b = -x_a * t.sin_theta + x_b * t.cos_theta;
    let s = x_a * (t.cos_theta + t.sin_theta) + x_b * (t.sin_theta - t.cos_theta);
    let (ds_da, ds_db) = (t.cos_theta + t.sin_theta, t.sin_theta - t.cos_theta);
    let mut ga = p.e_a * phi_a.sin() * t.cos_theta - p.e_b * phi_b.sin() * t.sin_theta;
    let mut gb = p.e_a * phi_a.sin() * t.sin_theta + p.e_b * phi_b.sin() * t.cos_theta;
    match p.bias {
        Bias::ReducedFlux(f) => {
            let d = p.e_f * (TAU * f + s).sin();
            ga += d * ds_da;
            gb += d * ds_db;
        }
        Bias::CurrentExt(i_ext) => {
            let d = p.e_f * (PI + s).sin();
            ga += d * ds_da - i_ext * ds_da;
            gb += d * ds_db - i_ext * ds_db;
        }
    }
    (ga, gb)
}

/// Local minimum of the potential nearest the origin, found by damped
/// Newton iteration on the gradient. Returns the origin when the gradient
/// there vanishes (symmetric/untilted cases).
pub fn find_local_minimum(p: &CircuitParams, t: &ModeTransform) -> (f64, f64) {
    let (mut xa, mut xb) = (0.0f64, 0.0f64);
    let g0 = potential_gradient(p, t, xa, xb);
    if g0.0.hypot(g0.1) < 1e-12 {
        return (xa, xb);
    }
    let h = 1e-5;
    for _ in 0..200 {
        let (ga, gb) = potential_gradient(p, t, xa, xb);
        if ga.hypot(gb) < 1e-12 {
            break;
        }
        // finite-difference Hessian
        let (gpa_a, gpa_b) = potential_gradient(p, t, xa + h, xb);
        let (gma_a, gma_b) = potential_gradient(p, t, xa - h, xb);
        let (gpb_a, gpb_b) = potential_gradient(p, t, xa, xb + h);
        let (gmb_a, gmb_b) = potential_gradient(p, t, xa, xb - h);
        let haa = (gpa_a - gma_a) / (2.0 * h);
        let hab = 0.5 * ((gpa_b - gma_b) + (gpb_a - gmb_a)) / (2.0 * h);
        let hbb = (gpb_b - gmb_b) / (2.0 * h);
        let det = haa * hbb - hab * hab;
        let (mut da, mut db) = if det > 1e-12 && haa > 0.0 {
            ((hbb * ga - hab * gb) / det, (haa * gb - hab * ga) / det)
        } else {
            (ga, gb) // fall back to gradient descent
        };
        // damp to at most half a phase period per step
        let step = da.hypot(db);
        if step > PI / 2.0 {
            da *= PI / 2.0 / step;
            db *= PI / 2.0 / step;
        }
        xa -= da;
        xb -= db;
    }
    (xa, xb)
}

/// Flux-grid Hamiltonian: 3-point kinetic stencils per mode plus the
/// pointwise-sampled potential, Dirichlet boundaries. For the
/// current-biased design the grid is centered on the local minimum
/// nearest the origin.
pub fn build_flux_grid(p: &CircuitParams, spec: &FluxGridSpec) -> Result<HamiltonianMatrix> {
    let p = p.validated()?;
    spec.validate()?;
    let t = compute_transform(&p);
    let (ec_a, ec_b) = charging_energies(&p);

    let (center_a, center_b) = match p.bias {
        Bias::CurrentExt(i_ext) if i_ext != 0.0 => find_local_minimum(&p, &t),
        _ => (0.0, 0.0),
    };

    let (na, nb) = (spec.points_a, spec.points_b);
    let ha = 2.0 * spec.half_width_a / (na as f64 - 1.0);
    let hb = 2.0 * spec.half_width_b / (nb as f64 - 1.0);
    let dim = na * nb;
    let idx = |i: usize, j: usize| -> u32 { (i * nb + j) as u32 };

    let mut trip: Vec<(u32, u32, f64)> = Vec::with_capacity(5 * dim);
    let (ka, kb) = (ec_a / (ha * ha), ec_b / (hb * hb));
    for i in 0..na {
        let x_a = center_a - spec.half_width_a + i as f64 * ha;
        for j in 0..nb {
            let x_b = center_b - spec.half_width_b + j as f64 * hb;
            let diag = 2.0 * ka + 2.0 * kb + potential_on_grid(&p, &t, x_a, x_b);
            let here = idx(i, j);
            trip.push((here, here, diag));
            if i + 1 < na {
                trip.push((here, idx(i + 1, j), -ka));
                trip.push((idx(i + 1, j), here, -ka));
            }
            if j + 1 < nb {
                trip.push((here, idx(i, j + 1), -kb));
                trip.push((idx(i, j + 1), here, -kb));
            }
        }
    }

    Ok(HamiltonianMatrix {
        op: Operator::SparseRealSym(CsrMatrix::from_triplets(dim, trip)),
        basis: BasisTag::FluxGrid(*spec),
        params: p,
    })
}
