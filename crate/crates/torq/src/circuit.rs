//! Two-node circuit model: validated parameters, capacitance matrix,
//! normal-mode transform, node charges and mode charging energies.
//!
//! Everything here is dimensionless: capacitances in units of a reference
//! capacitance `C_ref`, energies in units of the Josephson energy `E_J`,
//! bias current in units of `2*pi*E_J/Phi_0`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TorqError};

/// Which of the two qubit layouts is being modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// Fully enclosed torus; tuned by an external bias current through a
    /// pi-junction (the built-in half-flux offset).
    ClosedA,
    /// Open (gradiometric) torus; tuned by external flux through the loop.
    OpenB,
}

impl Design {
    pub fn name(self) -> &'static str {
        match self {
            Design::ClosedA => "closed_a",
            Design::OpenB => "open_b",
        }
    }
}

/// External tuning knob. The variant must match the design:
/// `CurrentExt` for `ClosedA`, `ReducedFlux` for `OpenB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bias {
    /// Bias current in units of 2*pi*E_J/Phi_0.
    CurrentExt(f64),
    /// Reduced flux f = Phi_ext/Phi_0.
    ReducedFlux(f64),
}

impl Bias {
    pub fn name(self) -> &'static str {
        match self {
            Bias::CurrentExt(_) => "i_ext",
            Bias::ReducedFlux(_) => "f",
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Bias::CurrentExt(v) | Bias::ReducedFlux(v) => v,
        }
    }
}

/// The six circuit parameters plus design variant and bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Node capacitances and the coupling (F-junction) capacitance, C_ref units.
    pub c_a: f64,
    pub c_b: f64,
    pub c_f: f64,
    /// Josephson energies, E_J units.
    pub e_a: f64,
    pub e_b: f64,
    pub e_f: f64,
    pub design: Design,
    pub bias: Bias,
    /// Ratio of the reference charging energy (2e)^2/(2 C_ref) to E_J.
    pub e_c_ref_over_e_j: f64,
}

impl CircuitParams {
    /// Checks all invariants and returns the parameters unchanged.
    pub fn validated(self) -> Result<Self> {
        for (field, value) in [("c_a", self.c_a), ("c_b", self.c_b), ("c_f", self.c_f)] {
            if !(value > 0.0) {
                return Err(TorqError::NonPositiveCapacitance { field, value });
            }
        }
        for (field, value) in [("e_a", self.e_a), ("e_b", self.e_b), ("e_f", self.e_f)] {
            if !(value >= 0.0) {
                return Err(TorqError::NegativeJosephsonEnergy { field, value });
            }
        }
        if !(self.e_c_ref_over_e_j > 0.0) {
            return Err(TorqError::InvalidConfig(format!(
                "e_c_ref_over_e_j must be positive, got {}",
                self.e_c_ref_over_e_j
            )));
        }
        match (self.design, self.bias) {
            (Design::ClosedA, Bias::CurrentExt(_)) | (Design::OpenB, Bias::ReducedFlux(_)) => {
                Ok(self)
            }
            (design, bias) => Err(TorqError::BiasDesignMismatch {
                bias: bias.name(),
                design: design.name(),
            }),
        }
    }

    /// Reduced flux for the flux-biased design.
    pub fn reduced_flux(&self) -> Option<f64> {
        match self.bias {
            Bias::ReducedFlux(f) => Some(f),
            Bias::CurrentExt(_) => None,
        }
    }

    /// Returns a copy with the reduced flux replaced (OpenB only).
    pub fn with_reduced_flux(&self, f: f64) -> Self {
        CircuitParams {
            bias: Bias::ReducedFlux(f),
            ..*self
        }
    }

    /// Returns a copy with the bias current replaced (ClosedA only).
    pub fn with_bias_current(&self, i_ext: f64) -> Self {
        CircuitParams {
            bias: Bias::CurrentExt(i_ext),
            ..*self
        }
    }

    /// Returns a copy with the bias value replaced, keeping the bias kind.
    pub fn with_bias_value(&self, value: f64) -> Self {
        match self.bias {
            Bias::CurrentExt(_) => self.with_bias_current(value),
            Bias::ReducedFlux(_) => self.with_reduced_flux(value),
        }
    }
}

/// Capacitance matrix of the two-node circuit, C_ref units:
/// [[c_a + c_f, -c_f], [-c_f, c_b + c_f]].
pub fn capacitance_matrix(p: &CircuitParams) -> [[f64; 2]; 2] {
    [
        [p.c_a + p.c_f, -p.c_f],
        [-p.c_f, p.c_b + p.c_f],
    ]
}

/// Closed-form inverse of the 2x2 capacitance matrix.
pub fn capacitance_matrix_inverse(p: &CircuitParams) -> [[f64; 2]; 2] {
    let m = capacitance_matrix(p);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ]
}

/// Normal-mode rotation that decouples the kinetic term, with the derived
/// mode masses (eigenvalues of the capacitance matrix).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeTransform {
    pub theta: f64,
    pub cos_theta: f64,
    pub sin_theta: f64,
    /// Half eigenvalue split: sqrt((c_a-c_b)^2 + 4 c_f^2) / 2.
    pub delta_c: f64,
    /// Mean capacitance c_f + (c_a + c_b)/2.
    pub c_bar: f64,
    /// Mode masses c_bar +/- delta_c, C_ref units.
    pub mass_a: f64,
    pub mass_b: f64,
}

/// Computes the normal-mode transform. For the degenerate case
/// delta_c = 0 (c_a = c_b, c_f = 0) the rotation is the identity.
pub fn compute_transform(p: &CircuitParams) -> ModeTransform {
    let delta_c = 0.5 * ((p.c_a - p.c_b).powi(2) + 4.0 * p.c_f * p.c_f).sqrt();
    let c_bar = p.c_f + 0.5 * (p.c_a + p.c_b);
    let (cos_theta, sin_theta) = if delta_c == 0.0 {
        (1.0, 0.0)
    } else {
        let r = ((p.c_a - p.c_b) / delta_c).clamp(-2.0, 2.0);
        (0.5 * (2.0 + r).sqrt(), 0.5 * (2.0 - r).sqrt())
    };
    ModeTransform {
        theta: sin_theta.atan2(cos_theta),
        cos_theta,
        sin_theta,
        delta_c,
        c_bar,
        mass_a: c_bar + delta_c,
        mass_b: c_bar - delta_c,
    }
}

/// Electric node charges from the mode momenta, units of 2e.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCharges {
    pub q_a: f64,
    pub q_b: f64,
}

/// Orthogonal rotation from mode momenta (p_A, p_B) to node charges.
pub fn node_charges(p_mode: (f64, f64), t: &ModeTransform) -> NodeCharges {
    let (p_a, p_b) = p_mode;
    NodeCharges {
        q_a: p_a * t.cos_theta + p_b * t.sin_theta,
        q_b: -p_a * t.sin_theta + p_b * t.cos_theta,
    }
}

/// Charging energies of the two modes, E_J units:
/// E_C_mode = e_c_ref_over_e_j / mass.
pub fn charging_energies(p: &CircuitParams) -> (f64, f64) {
    let t = compute_transform(p);
    (
        p.e_c_ref_over_e_j / t.mass_a,
        p.e_c_ref_over_e_j / t.mass_b,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    pub(crate) fn fig3_params() -> CircuitParams {
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
    fn fig3_params_validate() {
        assert!(fig3_params().validated().is_ok());
    }

    #[test]
    fn zero_capacitance_rejected() {
        let p = CircuitParams {
            c_a: 0.0,
            ..fig3_params()
        };
        assert!(matches!(
            p.validated(),
            Err(TorqError::NonPositiveCapacitance { field: "c_a", .. })
        ));
    }

    #[test]
    fn negative_josephson_rejected() {
        let p = CircuitParams {
            e_f: -0.1,
            ..fig3_params()
        };
        assert!(matches!(
            p.validated(),
            Err(TorqError::NegativeJosephsonEnergy { field: "e_f", .. })
        ));
    }

    #[test]
    fn bias_design_mismatch_rejected() {
        let p = CircuitParams {
            bias: Bias::CurrentExt(0.0),
            ..fig3_params()
        };
        assert!(matches!(
            p.validated(),
            Err(TorqError::BiasDesignMismatch { .. })
        ));
    }

    #[test]
    fn capacitance_matrix_fig3() {
        let m = capacitance_matrix(&fig3_params());
        assert_eq!(m, [[1.5, -0.5], [-0.5, 1.5]]);
        // closed-form eigenvalues of [[1.5,-0.5],[-0.5,1.5]] are {1, 2}
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let disc = (tr * tr / 4.0 - det).sqrt();
        assert_relative_eq!(tr / 2.0 - disc, 1.0, max_relative = 1e-14);
        assert_relative_eq!(tr / 2.0 + disc, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn decoupled_nodes_give_diagonal_matrix() {
        let p = CircuitParams {
            c_a: 2.0,
            c_b: 1.0,
            c_f: 1e-300,
            ..fig3_params()
        };
        let m = capacitance_matrix(&CircuitParams { c_f: 0.0, ..p });
        assert_eq!(m, [[2.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn transform_symmetric_case() {
        let t = compute_transform(&fig3_params());
        assert_relative_eq!(t.theta, FRAC_PI_4, max_relative = 1e-14);
        assert_relative_eq!(t.delta_c, 0.5, max_relative = 1e-14);
        assert_relative_eq!(t.c_bar, 1.5, max_relative = 1e-14);
    }

    #[test]
    fn transform_zero_coupling() {
        let p = CircuitParams {
            c_a: 2.0,
            c_b: 1.0,
            c_f: 1e-12,
            ..fig3_params()
        };
        let t = compute_transform(&p);
        assert!(t.theta.abs() < 1e-11);
        assert_relative_eq!(t.delta_c, 0.5, max_relative = 1e-10);
    }

    #[test]
    fn transform_asymmetric_case() {
        let p = CircuitParams {
            c_a: 1.2,
            c_b: 0.8,
            c_f: 0.3,
            ..fig3_params()
        };
        let t = compute_transform(&p);
        // direct evaluation: delta_c = sqrt(0.16 + 0.36)/2 = sqrt(0.52)/2
        assert_relative_eq!(t.delta_c, 0.52f64.sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(t.delta_c, 0.36056, max_relative = 1e-4);
        assert_relative_eq!(t.cos_theta, 0.88168, max_relative = 1e-4);
        assert_relative_eq!(t.sin_theta, 0.47186, max_relative = 1e-4);
    }

    #[test]
    fn degenerate_transform_is_identity() {
        let p = CircuitParams {
            c_a: 1.0,
            c_b: 1.0,
            c_f: f64::MIN_POSITIVE,
            ..fig3_params()
        };
        let t = compute_transform(&CircuitParams { c_f: 0.0, ..p });
        assert_eq!(t.theta, 0.0);
        assert_eq!((t.cos_theta, t.sin_theta), (1.0, 0.0));
    }

    #[test]
    fn node_charges_examples() {
        let id = ModeTransform {
            theta: 0.0,
            cos_theta: 1.0,
            sin_theta: 0.0,
            delta_c: 0.0,
            c_bar: 1.0,
            mass_a: 1.0,
            mass_b: 1.0,
        };
        let q = node_charges((1.0, 0.0), &id);
        assert_eq!((q.q_a, q.q_b), (1.0, 0.0));

        let t = compute_transform(&fig3_params()); // theta = pi/4
        let q = node_charges((1.0, 0.0), &t);
        assert_relative_eq!(q.q_a, 0.5f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(q.q_b, -(0.5f64.sqrt()), max_relative = 1e-14);

        let q = node_charges((0.0, 0.0), &t);
        assert_eq!((q.q_a, q.q_b), (0.0, 0.0));
    }

    #[test]
    fn charging_energies_fig3() {
        let p = fig3_params();
        let t = compute_transform(&p);
        assert_relative_eq!(t.mass_a, 2.0, max_relative = 1e-14);
        assert_relative_eq!(t.mass_b, 1.0, max_relative = 1e-14);
        let (ec_a, ec_b) = charging_energies(&p);
        assert_relative_eq!(ec_a, 0.0125, max_relative = 1e-14);
        assert_relative_eq!(ec_b, 0.025, max_relative = 1e-14);
    }

    fn rotation(t: &ModeTransform) -> [[f64; 2]; 2] {
        // Phi = R psi
        [
            [t.cos_theta, t.sin_theta],
            [-t.sin_theta, t.cos_theta],
        ]
    }

    fn congruence(r: [[f64; 2]; 2], c: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        // R^T C R
        let mut cr = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                cr[i][j] = c[i][0] * r[0][j] + c[i][1] * r[1][j];
            }
        }
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = r[0][i] * cr[0][j] + r[1][i] * cr[1][j];
            }
        }
        out
    }

    proptest! {
        #[test]
        fn transform_is_orthogonal_and_diagonalizes(
            c_a in 1e-3..1e3f64,
            c_b in 1e-3..1e3f64,
            c_f in 0.0..1e3f64,
        ) {
            let p = CircuitParams { c_a, c_b, c_f, ..fig3_params() };
            let t = compute_transform(&p);
            let norm = t.cos_theta * t.cos_theta + t.sin_theta * t.sin_theta;
            prop_assert!((norm - 1.0).abs() < 1e-12);
            prop_assert!(t.delta_c + 1e-12 >= (c_a - c_b).abs() / 2.0);
            prop_assert!(t.delta_c + 1e-12 >= c_f.min(t.delta_c));
            prop_assert!(t.mass_a > 0.0 && t.mass_b > 0.0);

            let d = congruence(rotation(&t), capacitance_matrix(&p));
            let scale = t.mass_a.max(1.0);
            prop_assert!((d[0][0] - t.mass_a).abs() / scale < 1e-12);
            prop_assert!((d[1][1] - t.mass_b).abs() / scale < 1e-12);
            prop_assert!(d[0][1].abs() / scale < 1e-12);
            // trace identity
            prop_assert!(((d[0][0] + d[1][1]) - 2.0 * t.c_bar).abs() / scale < 1e-12);
        }

        #[test]
        fn swap_maps_theta_to_complement(
            c_a in 1e-2..1e2f64,
            c_b in 1e-2..1e2f64,
            c_f in 1e-6..1e2f64,
        ) {
            let p = CircuitParams { c_a, c_b, c_f, ..fig3_params() };
            let q = CircuitParams { c_a: c_b, c_b: c_a, ..p };
            let tp = compute_transform(&p);
            let tq = compute_transform(&q);
            prop_assert!((tp.theta + tq.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
            prop_assert!((tp.delta_c - tq.delta_c).abs() <= 1e-12 * tp.delta_c.max(1.0));
            prop_assert!((tp.c_bar - tq.c_bar).abs() <= 1e-12 * tp.c_bar);
        }

        #[test]
        fn node_charge_rotation_is_isometry(
            c_a in 1e-2..1e2f64,
            c_b in 1e-2..1e2f64,
            c_f in 0.0..1e2f64,
            pa in -10.0..10.0f64,
            pb in -10.0..10.0f64,
        ) {
            let p = CircuitParams { c_a, c_b, c_f, ..fig3_params() };
            let t = compute_transform(&p);
            let q = node_charges((pa, pb), &t);
            let before = pa * pa + pb * pb;
            let after = q.q_a * q.q_a + q.q_b * q.q_b;
            prop_assert!((before - after).abs() <= 1e-12 * before.max(1.0));
        }
    }
}
