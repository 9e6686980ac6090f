//! Classical toroidal-solenoid moment and field coupling, and the
//! qubit's toroidal moment and sigma_z field coupling, in SI units.
//!
//! The solenoid formulas carry a Gaussian-flavored (4 pi eps0)^{1/2}
//! normalization that cancels exactly when the moment is contracted with
//! the coupling formula; all public outputs are SI joules.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::{HBAR, PLANCK, VACUUM_PERMEABILITY, VACUUM_PERMITTIVITY};
use crate::error::{Result, TorqError};

/// Prefactor of the published order-of-magnitude estimate
/// U_int(J) ~ 2e-38 * dE/dt, reported alongside the derived value.
pub const PUBLISHED_PREFACTOR_ESTIMATE: f64 = 2e-38;

/// Published estimate of the interaction strength at 100 kV/m, 100 GHz.
pub const PUBLISHED_U_INT_ESTIMATE_J: f64 = 1.5e-23;

pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Toroidal solenoid with N turns carrying current I each.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolenoidGeometry {
    pub n_turns: u64,
    /// Current per turn, A.
    pub current: f64,
    /// Tube (cross-section) radius R, m.
    pub tube_radius: f64,
    /// Torus diameter D, m.
    pub torus_diameter: f64,
    /// Torus axis, unit vector.
    pub axis: Vec3,
}

impl SolenoidGeometry {
    pub fn validated(self) -> Result<Self> {
        if self.n_turns < 1 {
            return Err(TorqError::InvalidSpec("n_turns must be >= 1".into()));
        }
        if !(self.tube_radius > 0.0 && self.torus_diameter > 0.0) {
            return Err(TorqError::InvalidSpec(
                "tube_radius and torus_diameter must be positive".into(),
            ));
        }
        if (norm(self.axis) - 1.0).abs() > 1e-12 {
            return Err(TorqError::InvalidSpec("axis must be a unit vector".into()));
        }
        Ok(self)
    }
}

/// Integrated toroidal dipole moment, Gaussian-flavored normalization
/// (carries the (4 pi eps0)^{-1/2} factor).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ToroidalMoment {
    /// t_bar = 2 pi^2 |J0|.
    pub magnitude: f64,
    /// Physical orientation; antiparallel to the axis for positive J0.
    pub direction: Vec3,
    /// The scalar J0 = N I R^2 D / (4 pi (4 pi eps0)^{1/2}).
    pub j0: f64,
}

impl ToroidalMoment {
    /// The moment as a vector: magnitude * direction = -2 pi^2 J0 n.
    pub fn vector(&self) -> Vec3 {
        [
            self.magnitude * self.direction[0],
            self.magnitude * self.direction[1],
            self.magnitude * self.direction[2],
        ]
    }
}

/// Toroidal moment of a solenoid: t_bar = -2 pi^2 J0 n with
/// J0 = N I R^2 D / (4 pi (4 pi eps0)^{1/2}).
pub fn solenoid_moment(g: &SolenoidGeometry) -> Result<ToroidalMoment> {
    let g = g.validated()?;
    let root_4pi_eps0 = (4.0 * PI * VACUUM_PERMITTIVITY).sqrt();
    let j0 = g.n_turns as f64 * g.current * g.tube_radius * g.tube_radius * g.torus_diameter
        / (4.0 * PI * root_4pi_eps0);
    let sign = if j0 >= 0.0 { -1.0 } else { 1.0 };
    Ok(ToroidalMoment {
        magnitude: 2.0 * PI * PI * j0.abs(),
        direction: [sign * g.axis[0], sign * g.axis[1], sign * g.axis[2]],
        j0,
    })
}

/// Coupling energy of a toroidal moment to a time-varying electric field:
/// U_int = -(mu0 eps0)(4 pi eps0)^{1/2} (dE_ext/dt) . t_bar, in J.
pub fn solenoid_coupling(m: &ToroidalMoment, de_dt: Vec3) -> f64 {
    let root_4pi_eps0 = (4.0 * PI * VACUUM_PERMITTIVITY).sqrt();
    -VACUUM_PERMEABILITY * VACUUM_PERMITTIVITY * root_4pi_eps0 * dot(de_dt, m.vector())
}

/// Closed-form composition of the moment and coupling formulas:
/// U_int = (mu0 eps0 pi N I R^2 D / 2) (dE/dt . n). The normalization
/// factors cancel algebraically; used as the oracle for that identity.
pub fn solenoid_coupling_closed_form(g: &SolenoidGeometry, de_dt: Vec3) -> f64 {
    VACUUM_PERMEABILITY * VACUUM_PERMITTIVITY * PI * g.n_turns as f64 * g.current
        * g.tube_radius
        * g.tube_radius
        * g.torus_diameter
        / 2.0
        * dot(de_dt, g.axis)
}

/// Effective volume of a torus with diameter D and tube radius R.
pub fn torus_effective_volume(torus_diameter: f64, tube_radius: f64) -> f64 {
    PI * PI * torus_diameter * tube_radius * tube_radius
}

/// Qubit toroidal moment scalar t_bar = V_eff * I / (4 pi^3).
pub fn qubit_toroidal_moment(v_eff: f64, current: f64) -> Result<f64> {
    if !(v_eff > 0.0) {
        return Err(TorqError::InvalidSpec("v_eff must be positive".into()));
    }
    Ok(v_eff * current / (4.0 * PI * PI * PI))
}

/// SI coupling scales of the qubit's toroidal moment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QubitToroidalCoupling {
    /// Effective volume encased by the circulating current, m^3.
    pub v_eff: f64,
    /// Circulating current scale, A.
    pub i_j: f64,
    /// lambda = mu0 eps0 V_eff I_J / (2 pi hbar), s*m/V; H_int = hbar
    /// lambda (dE/dt) sigma_z.
    pub lambda: f64,
    /// u_int_prefactor = mu0 eps0 V_eff I_J / (2 pi), J per (V/(m*s)).
    pub u_int_prefactor: f64,
}

impl QubitToroidalCoupling {
    pub fn new(v_eff: f64, i_j: f64) -> Result<Self> {
        if !(v_eff > 0.0) {
            return Err(TorqError::InvalidSpec("v_eff must be positive".into()));
        }
        let u_int_prefactor =
            VACUUM_PERMEABILITY * VACUUM_PERMITTIVITY * v_eff * i_j / (2.0 * PI);
        Ok(QubitToroidalCoupling {
            v_eff,
            i_j,
            lambda: u_int_prefactor / HBAR,
            u_int_prefactor,
        })
    }
}

/// Peak coupling to a sinusoidal field of given amplitude and frequency.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FieldCoupling {
    /// Peak interaction energy, J.
    pub u_int_max: f64,
    /// The same, in Hz (divided by h).
    pub u_int_max_over_h: f64,
}

/// u_int_max = prefactor * 2 pi nu * E0 (peak dE/dt of a sinusoid).
pub fn qubit_field_coupling(
    c: &QubitToroidalCoupling,
    e_amplitude: f64,
    frequency: f64,
) -> FieldCoupling {
    let de_dt_peak = 2.0 * PI * frequency * e_amplitude;
    let u = c.u_int_prefactor * de_dt_peak;
    FieldCoupling {
        u_int_max: u,
        u_int_max_over_h: u / PLANCK,
    }
}

/// Field-qubit interaction matrix hbar lambda (dE/dt) sigma_z in the
/// physical |L>/|R> basis for a field along the qubit z axis, J. Row-major.
pub fn sigma_z_coupling(c: &QubitToroidalCoupling, de_dt: f64) -> [[f64; 2]; 2] {
    let u = c.u_int_prefactor * de_dt;
    [[u, 0.0], [0.0, -u]]
}

/// Everything the `coupling` CLI subcommand reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingReport {
    pub prefactor_j_per_v_m_s: f64,
    pub u_int_j: f64,
    pub u_int_hz: f64,
    pub published_prefactor_estimate: f64,
    /// derived prefactor / published estimate.
    pub ratio_to_published: f64,
    pub published_u_int_estimate_j: f64,
    /// derived u_int / published estimate at the same field point.
    pub u_int_ratio_to_published: f64,
}

pub fn coupling_report(
    v_eff: f64,
    current: f64,
    e_amplitude: f64,
    frequency: f64,
    rms: bool,
) -> Result<CouplingReport> {
    let c = QubitToroidalCoupling::new(v_eff, current)?;
    let mut fc = qubit_field_coupling(&c, e_amplitude, frequency);
    if rms {
        fc.u_int_max /= 2f64.sqrt();
        fc.u_int_max_over_h /= 2f64.sqrt();
    }
    Ok(CouplingReport {
        prefactor_j_per_v_m_s: c.u_int_prefactor,
        u_int_j: fc.u_int_max,
        u_int_hz: fc.u_int_max_over_h,
        published_prefactor_estimate: PUBLISHED_PREFACTOR_ESTIMATE,
        ratio_to_published: c.u_int_prefactor / PUBLISHED_PREFACTOR_ESTIMATE,
        published_u_int_estimate_j: PUBLISHED_U_INT_ESTIMATE_J,
        u_int_ratio_to_published: fc.u_int_max / PUBLISHED_U_INT_ESTIMATE_J,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const Z_AXIS: Vec3 = [0.0, 0.0, 1.0];

    fn example_geometry() -> SolenoidGeometry {
        SolenoidGeometry {
            n_turns: 100,
            current: 1e-6,
            tube_radius: 1e-6,
            torus_diameter: 1e-5,
            axis: Z_AXIS,
        }
    }

    #[test]
    fn j0_example_value() {
        // direct constant arithmetic with (4 pi eps0)^{1/2} = 1.05482e-5
        let m = solenoid_moment(&example_geometry()).unwrap();
        assert_relative_eq!(m.j0, 7.55e-18, max_relative = 2e-3);
        assert_relative_eq!(m.magnitude, 2.0 * PI * PI * m.j0.abs(), max_relative = 1e-15);
        // direction antiparallel to the axis for positive J0
        assert_eq!(m.direction, [0.0, 0.0, -1.0]);
    }

    #[test]
    fn zero_current_zero_moment_and_linearity() {
        let m = solenoid_moment(&SolenoidGeometry {
            current: 0.0,
            ..example_geometry()
        })
        .unwrap();
        assert_eq!(m.magnitude, 0.0);

        let m1 = solenoid_moment(&example_geometry()).unwrap();
        let m2 = solenoid_moment(&SolenoidGeometry {
            n_turns: 200,
            ..example_geometry()
        })
        .unwrap();
        assert_relative_eq!(m2.magnitude, 2.0 * m1.magnitude, max_relative = 1e-15);
    }

    #[test]
    fn composed_path_equals_closed_form() {
        let g = example_geometry();
        let de_dt = [0.0, 0.0, 1e16];
        let m = solenoid_moment(&g).unwrap();
        let u_composed = solenoid_coupling(&m, de_dt);
        let u_closed = solenoid_coupling_closed_form(&g, de_dt);
        assert_relative_eq!(u_composed, u_closed, max_relative = 1e-12);
        // hand value: mu0 eps0 pi N I R^2 D / 2 * 1e16 ~ 1.75e-26 J
        assert_relative_eq!(u_closed, 1.75e-26, max_relative = 1e-2);
        // axis-aligned rate with positive current gives positive energy
        assert!(u_closed > 0.0);
    }

    #[test]
    fn perpendicular_rate_does_not_couple() {
        let m = solenoid_moment(&example_geometry()).unwrap();
        assert_eq!(solenoid_coupling(&m, [1e16, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn qubit_moment_examples() {
        let t = qubit_toroidal_moment(1e-15, 1e-6).unwrap();
        assert_relative_eq!(t, 1e-21 / (4.0 * PI * PI * PI), max_relative = 1e-15);
        assert_relative_eq!(t, 8.06e-24, max_relative = 1e-3);
        assert_eq!(qubit_toroidal_moment(1e-15, 0.0).unwrap(), 0.0);
        let v = torus_effective_volume(1e-5, 1e-6);
        assert_relative_eq!(v, 9.87e-17, max_relative = 1e-3);
    }

    #[test]
    fn prefactor_and_field_point() {
        let c = QubitToroidalCoupling::new(1e-15, 1e-6).unwrap();
        assert_relative_eq!(c.u_int_prefactor, 1.771e-39, max_relative = 1e-3);
        assert_relative_eq!(
            c.u_int_prefactor,
            VACUUM_PERMEABILITY * VACUUM_PERMITTIVITY * 1e-21 / (2.0 * PI),
            max_relative = 1e-15
        );
        let fc = qubit_field_coupling(&c, 1e5, 1e11);
        assert_relative_eq!(fc.u_int_max, 1.11e-22, max_relative = 3e-3);
        assert_eq!(qubit_field_coupling(&c, 0.0, 1e11).u_int_max, 0.0);
    }

    #[test]
    fn coupling_report_ratios() {
        let r = coupling_report(1e-15, 1e-6, 1e5, 1e11, false).unwrap();
        assert_relative_eq!(r.ratio_to_published, 0.0885, max_relative = 2e-2);
        assert!(r.u_int_ratio_to_published > 7.0 && r.u_int_ratio_to_published < 7.8);
    }

    #[test]
    fn sigma_z_matrix_pauli_algebra() {
        let c = QubitToroidalCoupling::new(1e-15, 1e-6).unwrap();
        let m = sigma_z_coupling(&c, 1e16);
        // traceless, diagonal +/-, commutes with sigma_z, anticommutes with sigma_x
        assert_eq!(m[0][0] + m[1][1], 0.0);
        assert_eq!(m[0][1], 0.0);
        assert_eq!(m[0][0], c.u_int_prefactor * 1e16);
        assert_eq!(sigma_z_coupling(&c, 0.0), [[0.0, 0.0], [0.0, 0.0]]);
    }
}
