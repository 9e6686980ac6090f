//! End-to-end acceptance gate. Each numbered criterion prints one
//! PASS/FAIL line; the test fails if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::process::Command;
use std::time::Instant;

use torq::circuit::{
    capacitance_matrix, compute_transform, Bias, CircuitParams, Design,
};
use torq::disorder::{run_ensemble, DisorderSpec, Distribution};
use torq::hamiltonian::{build_charge_basis, build_flux_grid, ChargeBasisSpec, FluxGridSpec};
use torq::observables::{circulating_current, extract_qubit_params, SweepPoint};
use torq::solve::solve_lowest;
use torq::toroidal::{
    coupling_report, solenoid_coupling, solenoid_coupling_closed_form, solenoid_moment,
    SolenoidGeometry,
};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

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

fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    (z ^ (z >> 31)) as f64 / u64::MAX as f64
}

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn report(&mut self, idx: usize, name: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {idx} ({name}): {verdict} [{detail}]");
        if !pass {
            self.failures.push(format!("criterion {idx} ({name}): {detail}"));
        }
    }
}

fn charge_lowest2(p: &CircuitParams, f: f64, n_max: usize) -> (f64, f64, f64) {
    let p = p.with_reduced_flux(f);
    let h = build_charge_basis(&p, &ChargeBasisSpec::new(n_max).unwrap()).unwrap();
    let sp = solve_lowest(&h, 2).unwrap();
    let i0 = circulating_current(&h, &sp, 0);
    (sp.energies[0], sp.energies[1], i0)
}

// 1: 10^4 random triples; orthogonality + diagonalization to 1e-12; < 1 s
fn criterion_1(g: &mut Gate) {
    let t0 = Instant::now();
    let mut state = 0x00c0ffee_u64;
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let p = CircuitParams {
            c_a: 0.1 + 9.9 * splitmix(&mut state),
            c_b: 0.1 + 9.9 * splitmix(&mut state),
            c_f: 0.05 + 4.95 * splitmix(&mut state),
            ..fig3()
        };
        let t = compute_transform(&p);
        let c = capacitance_matrix(&p);
        let r = [[t.cos_theta, -t.sin_theta], [t.sin_theta, t.cos_theta]];
        // R C R^T should be diag(mass_a, mass_b); R R^T = I
        for i in 0..2 {
            for j in 0..2 {
                let mut rcrt = 0.0;
                let mut rrt = 0.0;
                for k in 0..2 {
                    rrt += r[i][k] * r[j][k];
                    for l in 0..2 {
                        rcrt += r[i][k] * c[k][l] * r[j][l];
                    }
                }
                let want = if i == j {
                    if i == 0 {
                        t.mass_a
                    } else {
                        t.mass_b
                    }
                } else {
                    0.0
                };
                worst = worst.max((rcrt - want).abs() / t.c_bar.abs());
                worst = worst.max((rrt - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    let dt = t0.elapsed();
    g.report(
        1,
        "mode transform",
        worst < 1e-12 && dt.as_secs_f64() < 1.0,
        format!("worst defect {worst:.2e}, {dt:.2?}"),
    );
}

// 2: charge basis vs flux grid, 21 points in [0.45, 0.55], 1e-4 E_J, < 1 min
fn criterion_2(g: &mut Gate) {
    let t0 = Instant::now();
    let grid_spec = FluxGridSpec::new(PI, PI, 341, 221).unwrap();
    let mut worst = 0.0f64;
    for i in 0..21 {
        let f = 0.45 + 0.005 * i as f64;
        let p = fig3().with_reduced_flux(f);
        let hc = build_charge_basis(&p, &ChargeBasisSpec::new(10).unwrap()).unwrap();
        let sc = solve_lowest(&hc, 2).unwrap();
        let hg = build_flux_grid(&p, &grid_spec).unwrap();
        let sg = solve_lowest(&hg, 2).unwrap();
        worst = worst.max((sc.energies[0] - sg.energies[0]).abs());
        worst = worst.max((sc.energies[1] - sg.energies[1]).abs());
    }
    let dt = t0.elapsed();
    g.report(
        2,
        "cross-backend oracle",
        worst < 1e-4 && dt.as_secs_f64() < 60.0,
        format!("max |dE| {worst:.2e} E_J, {dt:.2?}"),
    );
}

// 3: currents vanish at degeneracy; reflection symmetry; f-periodicity
fn criterion_3(g: &mut Gate) {
    let p = fig3();
    let (e0, e1, i_mid) = charge_lowest2(&p, 0.5, 10);
    let h_mid = build_charge_basis(&p, &ChargeBasisSpec::new(10).unwrap()).unwrap();
    let sp_mid = solve_lowest(&h_mid, 2).unwrap();
    let i1_mid = circulating_current(&h_mid, &sp_mid, 1);
    let mut worst_sym = 0.0f64;
    for delta in [0.01, 0.03, 0.05] {
        let lo = charge_lowest2(&p, 0.5 - delta, 10);
        let hi = charge_lowest2(&p, 0.5 + delta, 10);
        worst_sym = worst_sym.max((lo.0 - hi.0).abs());
        worst_sym = worst_sym.max((lo.1 - hi.1).abs());
        worst_sym = worst_sym.max((lo.2 + hi.2).abs());
    }
    let a = charge_lowest2(&p, 0.47, 10);
    let b = charge_lowest2(&p, 1.47, 10);
    let period = (a.0 - b.0).abs().max((a.1 - b.1).abs());
    let _ = (e0, e1);
    let pass = i_mid.abs() < 1e-8 && i1_mid.abs() < 1e-8 && worst_sym < 1e-8 && period < 1e-10;
    g.report(
        3,
        "symmetry suite",
        pass,
        format!(
            "|I(1/2)| {:.1e}, reflection {worst_sym:.1e}, periodicity {period:.1e}",
            i_mid.abs().max(i1_mid.abs())
        ),
    );
}

// 4: Hellmann-Feynman vs central differences, 1e-6 relative, 10 points
fn criterion_4(g: &mut Gate) {
    let p = fig3();
    let df = 1e-5;
    let mut worst = 0.0f64;
    let points = [0.455, 0.46, 0.465, 0.47, 0.48, 0.52, 0.53, 0.535, 0.54, 0.545];
    for &f in &points {
        let pf = p.with_reduced_flux(f);
        let h = build_charge_basis(&pf, &ChargeBasisSpec::new(8).unwrap()).unwrap();
        let sp = solve_lowest(&h, 2).unwrap();
        let (ep, em) = (
            charge_lowest2(&p, f + df, 8),
            charge_lowest2(&p, f - df, 8),
        );
        for n in 0..2 {
            let hf = TAU * circulating_current(&h, &sp, n);
            let fd = if n == 0 {
                (ep.0 - em.0) / (2.0 * df)
            } else {
                (ep.1 - em.1) / (2.0 * df)
            };
            worst = worst.max((hf - fd).abs() / fd.abs());
        }
    }
    g.report(
        4,
        "Hellmann-Feynman",
        worst < 1e-6,
        format!("worst relative deviation {worst:.2e}"),
    );
}

// 5: two-level fit within 1% over |f - 1/2| <= 0.02; synthetic recovery 0.1%
fn criterion_5(g: &mut Gate) {
    let p = fig3();
    let sweep: Vec<SweepPoint> = (0..41)
        .map(|i| {
            let f = 0.48 + 0.001 * i as f64;
            let (e0, e1, i0) = charge_lowest2(&p, f, 10);
            (f, e0, e1, i0)
        })
        .collect();
    let q = extract_qubit_params(&sweep).unwrap();
    let mut worst_fit = 0.0f64;
    for &(f, e0, e1, _) in &sweep {
        let model = q.gap_at(f).unwrap();
        worst_fit = worst_fit.max((model - (e1 - e0)).abs() / (e1 - e0));
    }

    let (delta, a) = (0.04, 2.5);
    let synth: Vec<SweepPoint> = (0..61)
        .map(|i| {
            let f = 0.44 + 0.12 * i as f64 / 60.0;
            let eps = a * (f - 0.5);
            let gap = (delta * delta + eps * eps).sqrt();
            (f, -gap / 2.0, gap / 2.0, -(a / (4.0 * PI)) * eps / gap)
        })
        .collect();
    let qs = extract_qubit_params(&synth).unwrap();
    let delta_err = (qs.delta - delta).abs() / delta;
    g.report(
        5,
        "two-level reduction",
        worst_fit < 0.01 && delta_err < 1e-3,
        format!("gap fit {worst_fit:.2e}, synthetic Delta error {delta_err:.2e}"),
    );
}

// 6: moment composed with the coupling equals the closed form, 1e-12, 10^3 cases
fn criterion_6(g: &mut Gate) {
    let mut state = 0x7041_u64;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let geom = SolenoidGeometry {
            n_turns: 1 + (splitmix(&mut state) * 999.0) as u64,
            current: 1e-6 + 1e-2 * splitmix(&mut state),
            tube_radius: 1e-4 + 1e-2 * splitmix(&mut state),
            torus_diameter: 1e-3 + 1e-1 * splitmix(&mut state),
            axis: [0.0, 0.0, 1.0],
        };
        let de_dt = [
            1e15 * (splitmix(&mut state) - 0.5),
            1e15 * (splitmix(&mut state) - 0.5),
            1e15 * (splitmix(&mut state) - 0.5),
        ];
        let m = solenoid_moment(&geom).unwrap();
        let composed = solenoid_coupling(&m, de_dt);
        let closed = solenoid_coupling_closed_form(&geom, de_dt);
        if closed != 0.0 {
            worst = worst.max((composed - closed).abs() / closed.abs());
        }
    }
    g.report(
        6,
        "toroidal algebra",
        worst < 1e-12,
        format!("worst relative deviation {worst:.2e}"),
    );
}

// 7: coupling prefactor vs an independent hand calculation; ratios reported
fn criterion_7(g: &mut Gate) {
    let (v_eff, current, field, freq) = (1e-15, 1e-6, 1e5, 1e11);
    let r = coupling_report(v_eff, current, field, freq, false).unwrap();
    // hand calculation: mu0*eps0 = 1/c^2; prefactor = V_eff I / (2 pi c^2)
    let prefactor_hand = v_eff * current / (TAU * SPEED_OF_LIGHT * SPEED_OF_LIGHT);
    let u_int_hand = prefactor_hand * TAU * freq * field;
    let p_err = (r.prefactor_j_per_v_m_s - prefactor_hand).abs() / prefactor_hand;
    let u_err = (r.u_int_j - u_int_hand).abs() / u_int_hand;
    let ratios_reported = (r.ratio_to_published - prefactor_hand / 2e-38).abs() < 1e-6
        && (r.u_int_ratio_to_published - u_int_hand / 1.5e-23).abs() < 1e-2;
    g.report(
        7,
        "published estimate",
        p_err < 1e-3 && u_err < 1e-3 && ratios_reported,
        format!(
            "prefactor {:.4e} (err {p_err:.1e}), u_int {:.4e} J, ratio {:.3}",
            r.prefactor_j_per_v_m_s, r.u_int_j, r.ratio_to_published
        ),
    );
}

// 8: seed-fixed 1000-realization ensemble, < 10 min; crossing stability
fn criterion_8(g: &mut Gate) {
    let t0 = Instant::now();
    let d = DisorderSpec {
        fractional_spread: 0.1,
        n_realizations: 1000,
        distribution: Distribution::UniformPm,
        seed: 42,
    };
    let f_grid: Vec<f64> = (0..61).map(|i| 0.44 + 0.12 * i as f64 / 60.0).collect();
    let basis = ChargeBasisSpec::new(6).unwrap();
    let (summary, _) = run_ensemble(&fig3(), &d, &f_grid, &basis).unwrap();
    let dt = t0.elapsed();
    let frac = summary.fraction_crossing_in_window;
    // seed-pinned regression value from the first verified run
    let frozen = 1.0;
    g.report(
        8,
        "disorder ensemble",
        frac >= 0.95 && frac == frozen && dt.as_secs_f64() < 600.0,
        format!("fraction {frac}, {dt:.1?}"),
    );
}

// 9: byte-identical outputs across 1, 2 and 8 workers, sweep and disorder
fn criterion_9(g: &mut Gate) {
    let bin = env!("CARGO_BIN_EXE_torq");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/fig3.json");
    let dir = tempfile::tempdir().unwrap();
    let mut outputs: Vec<Vec<u8>> = Vec::new();
    let mut summaries: Vec<Vec<u8>> = Vec::new();
    let mut sweeps: Vec<Vec<u8>> = Vec::new();
    for workers in ["1", "2", "8", "1"] {
        let sweep_path = dir.path().join(format!("s{workers}.csv"));
        let status = Command::new(bin)
            .args([
                "sweep",
                "--config",
                config,
                "--workers",
                workers,
                "--out",
                sweep_path.to_str().unwrap(),
                "sweep.n_max=5",
            ])
            .status()
            .unwrap();
        assert!(status.success());
        sweeps.push(std::fs::read(&sweep_path).unwrap());

        let out_path = dir.path().join(format!("d{workers}.csv"));
        let status = Command::new(bin)
            .args([
                "disorder",
                "--config",
                config,
                "--seed",
                "7",
                "--workers",
                workers,
                "--out",
                out_path.to_str().unwrap(),
                "sweep.n_max=5",
                "disorder.n_realizations=6",
            ])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&out_path).unwrap());
        summaries.push(std::fs::read(out_path.with_extension("summary.json")).unwrap());
    }
    let pass = sweeps.iter().all(|s| s == &sweeps[0])
        && outputs.iter().all(|o| o == &outputs[0])
        && summaries.iter().all(|s| s == &summaries[0]);
    g.report(
        9,
        "determinism",
        pass,
        format!(
            "{} byte-identical runs across worker counts",
            sweeps.len() + outputs.len()
        ),
    );
}

#[test]
fn acceptance_gate() {
    let mut gate = Gate { failures: vec![] };
    criterion_1(&mut gate);
    criterion_2(&mut gate);
    criterion_3(&mut gate);
    criterion_4(&mut gate);
    criterion_5(&mut gate);
    criterion_6(&mut gate);
    criterion_7(&mut gate);
    criterion_8(&mut gate);
    criterion_9(&mut gate);
    assert!(
        gate.failures.is_empty(),
        "failed criteria:\n{}",
        gate.failures.join("\n")
    );
}
