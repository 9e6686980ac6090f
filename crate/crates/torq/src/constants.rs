//! SI physical constants (2018 CODATA exact/recommended values).

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Elementary charge, C (exact).
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;

/// Reduced Planck constant, J*s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Planck constant, J*s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Magnetic flux quantum Phi_0 = h/2e, Wb.
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELECTRON_CHARGE);

/// Vacuum permeability, H/m.
pub const VACUUM_PERMEABILITY: f64 = 1.256_637_062_12e-6;

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_8128e-12;

/// Bundle of the constants used by the SI-facing modules.
#[derive(Debug, Clone, Copy)]
pub struct PhysicalConstants {
    pub flux_quantum: f64,
    pub electron_charge: f64,
    pub reduced_planck: f64,
    pub vacuum_permeability: f64,
    pub vacuum_permittivity: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            flux_quantum: FLUX_QUANTUM,
            electron_charge: ELECTRON_CHARGE,
            reduced_planck: HBAR,
            vacuum_permeability: VACUUM_PERMEABILITY,
            vacuum_permittivity: VACUUM_PERMITTIVITY,
        }
    }
}
