//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines; any FAIL also fails the test.

use std::f64::consts::PI;

use cpn_kinematics::constants::{clifford_volume, rp_volume, ConstantsRow};
use cpn_kinematics::haar::{haar_unitary, SeedStream};
use cpn_kinematics::hamiltonian::{
    hermitian_exp_i, random_hermitian, random_quartic, HamiltonianSpec, HamiltonianTerm,
    QUADRATIC_ORBIT_CONSTANT,
};
use cpn_kinematics::intersect::{count_levelset, rp_eigen_oracle};
use cpn_kinematics::kinematic::{cho_check, mc_estimate, sigma_constancy_test, sigma_constant_n1};
use cpn_kinematics::lagrangian::{LevelSetResidual, ParametricLagrangian};
use cpn_kinematics::projective::ProjectivePoint;

fn criterion(id: usize, name: &str, f: impl FnOnce() -> Result<(), String>) {
    match f() {
        Ok(()) => println!("ACCEPTANCE {id} ({name}): PASS"),
        Err(e) => {
            println!("ACCEPTANCE {id} ({name}): FAIL — {e}");
            panic!("criterion {id} ({name}) failed: {e}");
        }
    }
}

fn check_rel(label: &str, value: f64, expected: f64, tol: f64) -> Result<(), String> {
    let rel = (value - expected).abs() / expected.abs();
    if rel <= tol {
        Ok(())
    } else {
        Err(format!(
            "{label}: got {value:.15}, expected {expected:.15}, rel err {rel:.3e} > {tol:.0e}"
        ))
    }
}

#[test]
fn acceptance_1_constants_exact() {
    criterion(1, "constants exact", || {
        let row = ConstantsRow::compute(2);
        check_rel("vol(RP^2)", row.vol_rp_n, 2.0 * PI, 1e-12)?;
        check_rel("eqsup ratio", row.eqsup_ratio, 4.0 * PI * PI / 3.0, 1e-12)?;
        check_rel(
            "vol(L_2)",
            row.vol_clifford_n,
            4.0 * PI * PI / (3.0 * 3.0f64.sqrt()),
            1e-12,
        )?;
        check_rel(
            "lower bound",
            row.lower_bound,
            4.0 * PI / 3.0f64.sqrt(),
            1e-12,
        )?;
        check_rel("a_2", row.a_n, 3.0 / PI, 1e-12)?;
        Ok(())
    });
}

#[test]
fn acceptance_2_volume_quadrature() {
    criterion(2, "volume quadrature", || {
        let l2 = ParametricLagrangian::clifford(2).volume(16).map_err(|e| e.to_string())?;
        check_rel("numerical vol(L_2)", l2.value, clifford_volume(2), 1e-8)?;
        let rp2 = ParametricLagrangian::real_projective(2)
            .volume(64)
            .map_err(|e| e.to_string())?;
        if (rp2.value - 2.0 * PI).abs() > 1e-6 {
            return Err(format!(
                "numerical vol(RP^2) = {:.12}, |err| = {:.3e} > 1e-6",
                rp2.value,
                (rp2.value - 2.0 * PI).abs()
            ));
        }
        let l1 = ParametricLagrangian::clifford(1).volume(16).map_err(|e| e.to_string())?;
        if (l1.value - PI).abs() > 1e-10 {
            return Err(format!(
                "numerical vol(L_1) = {:.14}, |err| = {:.3e} > 1e-10",
                l1.value,
                (l1.value - PI).abs()
            ));
        }
        Ok(())
    });
}

#[test]
fn acceptance_3_rp2_calibration() {
    criterion(3, "RP^2 calibration", || {
        let rp = ParametricLagrangian::real_projective(2);
        let target = LevelSetResidual::RealProjective { n: 2 };
        let samples = 200;
        let mut excluded = 0usize;
        for i in 0..samples {
            let g = haar_unitary(3, SeedStream::derive(300, i as u64)).to_special();
            let numeric = count_levelset(&rp, target, &g, 16).map_err(|e| e.to_string())?;
            if !numeric.is_clean() {
                excluded += 1;
                continue;
            }
            if numeric.count != 3 {
                return Err(format!("sample {i}: clean count {} != 3", numeric.count));
            }
            let oracle = rp_eigen_oracle(&g).map_err(|e| format!("sample {i}: oracle: {e}"))?;
            if oracle.count != numeric.count {
                return Err(format!(
                    "sample {i}: oracle count {} != numeric {}",
                    oracle.count, numeric.count
                ));
            }
            for p in &oracle.points {
                let best = numeric
                    .points
                    .iter()
                    .map(|q| p.fs_distance(q).unwrap_or(f64::INFINITY))
                    .fold(f64::INFINITY, f64::min);
                if best > 1e-6 {
                    return Err(format!("sample {i}: point mismatch {best:.3e} > 1e-6"));
                }
            }
        }
        let fraction = excluded as f64 / samples as f64;
        if fraction > 0.02 {
            return Err(format!("excluded fraction {fraction:.3} > 0.02"));
        }
        Ok(())
    });
}

#[test]
fn acceptance_4_great_circles() {
    criterion(4, "great-circle case", || {
        let c = ParametricLagrangian::clifford(1);
        let est = mc_estimate(&c, &c, 100, 400, 16, 16).map_err(|e| e.to_string())?;
        if est.counts.iter().any(|&k| k != 2) {
            return Err("a clean count differed from 2".into());
        }
        if est.mean != 2.0 {
            return Err(format!("mean {} != 2 exactly", est.mean));
        }
        Ok(())
    });
}

#[test]
fn acceptance_5_kinematic_torus() {
    criterion(5, "kinematic formula, n=2 torus", || {
        let c = ParametricLagrangian::clifford(2);
        let est = mc_estimate(&c, &c, 300, 500, 48, 16).map_err(|e| e.to_string())?;
        for (&k, row) in est.counts.iter().zip(&est.rows) {
            if k % 2 != 0 || k < 4 {
                return Err(format!(
                    "sample {}: clean count {k} is not an even integer >= 4",
                    row.sample_index
                ));
            }
        }
        let predicted = 4.0 * PI * PI / 9.0;
        let z = (est.mean - predicted) / est.std_error;
        if z.abs() > 3.0 {
            return Err(format!(
                "mean {:.4} +- {:.4} vs predicted {predicted:.4}: |z| = {:.2} > 3",
                est.mean,
                est.std_error,
                z.abs()
            ));
        }
        Ok(())
    });
}

#[test]
fn acceptance_6_hamiltonian_flow_oracles() {
    criterion(6, "Hamiltonian-flow oracles", || {
        // quadratic Hamiltonians flow along unitary orbits
        for i in 0..3u64 {
            let mut rng = SeedStream::derive(600, i).rng();
            let a = random_hermitian(3, 1.0, &mut rng);
            let spec = HamiltonianSpec::new(
                3,
                vec![HamiltonianTerm {
                    coefficient: 1.0,
                    factors: vec![a.clone()],
                }],
            )
            .map_err(|e| e.to_string())?;
            let z0 = haar_unitary(3, SeedStream::derive(601, i))
                .matrix()
                .column(0)
                .clone_owned();
            let start = ProjectivePoint::new(z0.clone()).map_err(|e| e.to_string())?;
            let flowed = spec
                .flow_point(&start, 1.0, 1e-3)
                .map_err(|e| format!("flow drift gate: {e}"))?;
            let exact = ProjectivePoint::new(
                hermitian_exp_i(&a, QUADRATIC_ORBIT_CONSTANT * 1.0) * &z0,
            )
            .map_err(|e| e.to_string())?;
            let d = flowed.fs_distance(&exact).map_err(|e| e.to_string())?;
            if d > 1e-6 {
                return Err(format!("orbit {i}: distance to unitary orbit {d:.3e} > 1e-6"));
            }
        }
        // deformed tori stay Lagrangian on a 20^2 grid
        let h = random_quartic(3, 0.2, SeedStream::derive(602, 0));
        let deformed = ParametricLagrangian::deformed(
            ParametricLagrangian::clifford(2),
            h,
            0.3,
            1e-2,
        )
        .map_err(|e| e.to_string())?;
        let omega = deformed.max_symplectic_residual(20).map_err(|e| e.to_string())?;
        if omega > 1e-6 {
            return Err(format!("max |omega| residual {omega:.3e} > 1e-6"));
        }
        Ok(())
    });
}

#[test]
fn acceptance_7_deformation_bound() {
    criterion(7, "deformation bound experiment", || {
        let bound = 3.0 / PI;
        for i in 0..5u64 {
            let h = random_quartic(3, 0.2, SeedStream::derive(700, i));
            let report = cho_check(h, 0.3, 1e-2, 30, 710 + i, 24, 24)
                .map_err(|e| format!("hamiltonian {i}: {e}"))?;
            if report.min_clean_count < 4 {
                return Err(format!(
                    "hamiltonian {i}: min clean count {} < 4",
                    report.min_clean_count
                ));
            }
            if report.volume_ratio < bound - 1e-6 {
                return Err(format!(
                    "hamiltonian {i}: volume ratio {:.8} < 3/pi - 1e-6",
                    report.volume_ratio
                ));
            }
            println!(
                "  hamiltonian {i}: ratio {:.8}, Oh's conjecture observed: {}",
                report.volume_ratio, report.oh_conjecture_observed
            );
        }
        Ok(())
    });
}

#[test]
fn acceptance_8_sigma_constancy() {
    criterion(8, "sigma constancy", || {
        let report = sigma_constancy_test(2, 5, 10_000, 800).map_err(|e| e.to_string())?;
        if report.max_pairwise_z > 3.0 {
            return Err(format!(
                "n=2 max pairwise z {:.2} > 3",
                report.max_pairwise_z
            ));
        }
        let n1 = sigma_constancy_test(1, 3, 10_000, 801).map_err(|e| e.to_string())?;
        let target = sigma_constant_n1();
        for c in &n1.configs {
            let z = (c.mean - target).abs() / c.std_error;
            if z > 3.0 {
                return Err(format!(
                    "n=1 config {}: mean {:.5} vs 2/pi = {:.5}, |z| = {:.2} > 3",
                    c.config_index, c.mean, target, z
                ));
            }
        }
        Ok(())
    });
}

#[test]
fn acceptance_9_determinism() {
    criterion(9, "determinism", || {
        let bin = env!("CARGO_BIN_EXE_cpnk");
        let run = |dir: &std::path::Path| -> Result<String, String> {
            let out = std::process::Command::new(bin)
                .args([
                    "crofton",
                    "--n",
                    "1",
                    "--pair",
                    "clifford:clifford",
                    "--samples",
                    "30",
                    "--seed",
                    "9",
                    "--count-grid",
                    "16",
                    "--volume-grid",
                    "16",
                    "--output-dir",
                    dir.to_str().unwrap(),
                ])
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!(
                    "cpnk exited with {:?}: {}",
                    out.status.code(),
                    String::from_utf8_lossy(&out.stderr)
                ));
            }
            let text = std::fs::read_to_string(dir.join("crofton_report.json"))
                .map_err(|e| e.to_string())?;
            // drop volatile wall-clock metadata, keep everything else verbatim
            let mut value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| e.to_string())?;
            value
                .as_object_mut()
                .ok_or("report is not an object")?
                .remove("metadata");
            serde_json::to_string_pretty(&value).map_err(|e| e.to_string())
        };
        let dir = std::env::temp_dir().join("cpnk_determinism");
        let a = run(&dir)?;
        let b = run(&dir)?;
        if a != b {
            return Err("reports differ between identical runs (modulo metadata)".into());
        }
        Ok(())
    });
}
