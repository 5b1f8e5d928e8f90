//! Acceptance suite: every release criterion as one test, run at its
//! stated tolerance. Each test prints one `ACCEPTANCE <n> <PASS|FAIL>`
//! line with the measured values (visible with `--nocapture`).
//!
//! Run with `cargo test -p qinfo --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use qinfo_core::estimation::{replicate, ExperimentSpec, RngStream, Strategy, TwoParamScheme,
    TwoStagePlan};
use qinfo_core::fuzz::{random_model, random_povm, random_pure_model};
use qinfo_core::geometry::{linspace_exclusive, score_directions, uniform_attainability};
use qinfo_core::information::{
    bc_chain, fisher_matrix, qfi_matrix, qfi_scalar, sld_solve, InfoKind, InfoMatrix,
};
use qinfo_core::operators::{spin_operator, trace_product};
use qinfo_core::{
    example_model, full_sphere_model, gill_massar_feasible, ExperimentSummary, Povm,
    SphericalAngles,
};

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, TAU};

const MASTER_SEED: u64 = 42;

fn report(criterion: u32, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion} {verdict}: {detail}");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_qfi_of_the_example_model() {
    let started = Instant::now();
    let grid = linspace_exclusive(0.0, TAU, 64);
    let mut worst: f64 = 0.0;
    for eta in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_2] {
        let model = example_model(eta).unwrap();
        let expected = eta.sin().powi(2);
        for &theta in &grid {
            let value = qfi_scalar(&model, &[theta]).unwrap();
            worst = worst.max((value - expected).abs());
        }
    }
    let elapsed = started.elapsed();
    let ok = worst <= 1e-9 && elapsed.as_secs_f64() < 1.0;
    report(
        1,
        ok,
        &format!(
            "qfi matches sin^2(eta) on 3x64 grid, worst |error| = {worst:.3e}, \
             runtime {:.3}s (< 1s)",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_information_inequality_chain_fuzz() {
    let started = Instant::now();
    let mut rng = RngStream::new(MASTER_SEED, 2).rng();
    let models: Vec<_> = (0..200).map(|_| random_model(&mut rng)).collect();
    let povms: Vec<_> = (0..200).map(|_| random_povm(&mut rng)).collect();
    let mut cases = 0usize;
    let mut most_negative: f64 = 0.0;
    for model in &models {
        for povm in &povms {
            use rand::Rng;
            let theta = [rng.random_range(0.0..TAU)];
            let chain = bc_chain(model, povm, &theta).expect("chain evaluates");
            for slack in chain.slack {
                most_negative = most_negative.min(slack);
            }
            cases += 1;
        }
    }
    let elapsed = started.elapsed();
    let ok = most_negative >= -1e-9 && elapsed.as_secs_f64() < 30.0 && cases == 40_000;
    report(
        2,
        ok,
        &format!(
            "fisher <= step1 <= step2 <= quantum on {cases} model x POVM cases, \
             most negative slack = {most_negative:.3e}, runtime {:.2}s (< 30s)",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_3_great_circle_attainment_dichotomy() {
    // Attainment: in-plane projective measurement on the equator.
    let grid = linspace_exclusive(0.0, TAU, 64);
    let equator = example_model(FRAC_PI_2).unwrap();
    let in_plane = Povm::in_plane(0.37);
    let mut worst_gap: f64 = 0.0;
    for &theta in &grid {
        let fisher = fisher_matrix(&equator, &in_plane, &[theta]).unwrap();
        assert!(!fisher.is_singular(), "generic azimuth keeps p positive");
        let quantum = qfi_scalar(&equator, &[theta]).unwrap();
        worst_gap = worst_gap.max((fisher.scalar() - quantum).abs());
    }

    // Non-attainment: tilted curve, 100 random measurements, none uniform.
    let tilted = example_model(FRAC_PI_4).unwrap();
    let mut rng = RngStream::new(MASTER_SEED, 3).rng();
    let mut uniform_count = 0usize;
    for _ in 0..100 {
        let povm = random_povm(&mut rng);
        let outcome = uniform_attainability(&tilted, &povm, &grid).unwrap();
        uniform_count += outcome.uniform as usize;
    }

    let ok = worst_gap <= 1e-8 && uniform_count == 0;
    report(
        3,
        ok,
        &format!(
            "equator in-plane measurement: max |i - I| = {worst_gap:.3e}; \
             tilted curve: {uniform_count}/100 fuzz POVMs attain uniformly (expected 0)"
        ),
    );
}

#[test]
fn criterion_4_sld_solver_diagnostics() {
    let mut rng = RngStream::new(MASTER_SEED, 4).rng();
    let mut worst_residual: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    let mut worst_pure: f64 = 0.0;
    for _ in 0..200 {
        use rand::Rng;
        let model = random_model(&mut rng);
        let theta = [rng.random_range(0.0..TAU)];
        let rho = model.state(&theta);
        let rho_dot = model.derivative(&theta, 0).unwrap();
        let sol = sld_solve(&rho, &rho_dot).unwrap();
        worst_residual = worst_residual.max(sol.residual);
        worst_trace = worst_trace.max(sol.score_trace.abs());
    }
    for _ in 0..200 {
        use rand::Rng;
        let model = random_pure_model(&mut rng);
        let theta = [rng.random_range(0.0..TAU)];
        let rho = model.state(&theta);
        let rho_dot = model.derivative(&theta, 0).unwrap();
        let sol = sld_solve(&rho, &rho_dot).unwrap();
        let gap = sol
            .lambda
            .sub(&rho_dot.scale(2.0))
            .unwrap()
            .frobenius_norm();
        worst_pure = worst_pure.max(gap);
    }
    let ok = worst_residual <= 1e-9 && worst_trace <= 1e-9 && worst_pure <= 1e-9;
    report(
        4,
        ok,
        &format!(
            "max ||rho*l + l*rho - 2*rho_dot|| = {worst_residual:.3e}, \
             max |trace rho*l| = {worst_trace:.3e}, \
             max pure-state ||l - 2*rho_dot|| = {worst_pure:.3e}"
        ),
    );
}

fn run_two_stage(eta: f64) -> ExperimentSummary {
    let spec = ExperimentSpec {
        strategy: Strategy::TwoStageScalar {
            eta,
            theta_true: 1.3,
        },
        plan: TwoStagePlan::with_sqrt_split(10_000).unwrap(),
    };
    replicate(&spec, 2000, MASTER_SEED).unwrap()
}

#[test]
fn criterion_5_two_stage_scalar_estimator() {
    let started = Instant::now();
    let equator = run_two_stage(FRAC_PI_2);
    let nvar_eq = equator.covariance_scaled[0];
    let skew_eq = equator.skewness[0];
    let kurt_eq = equator.excess_kurtosis[0];

    let tilted = run_two_stage(FRAC_PI_4);
    let nvar_tilted = tilted.covariance_scaled[0];

    // Same experiment through the CLI surface.
    let nvar_cli = simulate_via_cli();

    let elapsed = started.elapsed();
    let ok = (0.90..=1.10).contains(&nvar_eq)
        && skew_eq.abs() <= 0.1
        && kurt_eq.abs() <= 0.2
        && (1.8..=2.2).contains(&nvar_tilted)
        && (nvar_cli - nvar_eq).abs() <= 1e-12
        && elapsed.as_secs_f64() < 60.0;
    report(
        5,
        ok,
        &format!(
            "eta=pi/2: n*Var = {nvar_eq:.4} (in [0.90, 1.10]), skew = {skew_eq:.4} (|.| <= 0.1), \
             excess kurtosis = {kurt_eq:.4} (|.| <= 0.2); \
             eta=pi/4: n*Var = {nvar_tilted:.4} (in [1.8, 2.2]); \
             CLI route reproduces n*Var = {nvar_cli:.4}; runtime {:.2}s (< 60s)",
            elapsed.as_secs_f64()
        ),
    );
}

/// Run the eta = pi/2 experiment through the `qinfo simulate` binary and
/// read the scaled variance back from the CSV report.
fn simulate_via_cli() -> f64 {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("simulate.json");
    std::fs::write(
        &config,
        format!(
            r#"{{
                "command": "simulate",
                "model": {{ "kind": "example", "eta": {FRAC_PI_2} }},
                "plan": {{ "n": 10000, "replications": 2000, "seed": {MASTER_SEED},
                           "strategy": "two_stage", "theta_true": 1.3 }}
            }}"#
        ),
    )
    .unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_qinfo"))
        .arg("simulate")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|c| *c == "nvar_1").unwrap();
    row[idx].parse().unwrap()
}

#[test]
fn criterion_6_qfi_matrix_of_the_full_sphere() {
    let model = full_sphere_model();
    let at_special = qfi_matrix(&model, &[FRAC_PI_2, 0.0]).unwrap();
    let mut worst_special: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = if i == j { 1.0 } else { 0.0 };
            worst_special = worst_special.max((at_special.get(i, j) - expected).abs());
        }
    }

    // General angles against the closed-form score (anticommutator) oracle.
    let mut worst_general: f64 = 0.0;
    for eta in linspace_exclusive(0.3, std::f64::consts::PI - 0.3, 7) {
        for phi in linspace_exclusive(0.0, TAU, 9) {
            let m = qfi_matrix(&model, &[eta, phi]).unwrap();
            let dirs = score_directions(&SphericalAngles::new(eta, phi).unwrap()).unwrap();
            let lam = [
                spin_operator(dirs.v_eta),
                spin_operator([
                    dirs.v_phi[0] * dirs.r_phi,
                    dirs.v_phi[1] * dirs.r_phi,
                    dirs.v_phi[2] * dirs.r_phi,
                ]),
            ];
            let rho = model.state(&[eta, phi]);
            let expected = [[1.0, 0.0], [0.0, eta.sin().powi(2)]];
            for i in 0..2 {
                for j in 0..2 {
                    let anti = lam[i]
                        .matrix()
                        .matmul(lam[j].matrix())
                        .add(&lam[j].matrix().matmul(lam[i].matrix()));
                    let oracle = 0.5 * trace_product(rho.op().matrix(), &anti).unwrap().re;
                    worst_general = worst_general
                        .max((m.get(i, j) - oracle).abs())
                        .max((m.get(i, j) - expected[i][j]).abs());
                }
            }
        }
    }

    let ok = worst_special <= 1e-10 && worst_general <= 1e-9;
    report(
        6,
        ok,
        &format!(
            "I(pi/2, 0) = identity within {worst_special:.3e} (tol 1e-10); \
             general angles vs diag(1, sin^2 eta) and the anticommutator oracle \
             within {worst_general:.3e} (tol 1e-9)"
        ),
    );
}

#[test]
fn criterion_7_alternating_yz_scheme() {
    // Fisher matrix of the randomized y/z measurement at the special point.
    let model = full_sphere_model();
    let fisher = fisher_matrix(&model, &Povm::yz_mix(), &[FRAC_PI_2, 0.0]).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = if i == j { 0.5 } else { 0.0 };
            worst = worst.max((fisher.get(i, j) - expected).abs());
        }
    }

    // Monte Carlo of the adaptive two-parameter scheme at the same point.
    let spec = ExperimentSpec {
        strategy: Strategy::TwoParam {
            angles: SphericalAngles::new(FRAC_PI_2, 0.0).unwrap(),
            scheme: TwoParamScheme::AlternateYz,
        },
        plan: TwoStagePlan::with_sqrt_split(10_000).unwrap(),
    };
    let summary = replicate(&spec, 2000, MASTER_SEED).unwrap();
    let var_sum = summary.covariance_scaled[0] + summary.covariance_scaled[3];

    let ok = worst <= 1e-9 && (3.6..=4.4).contains(&var_sum);
    report(
        7,
        ok,
        &format!(
            "fisher(yz mix) = identity/2 within {worst:.3e} (tol 1e-9); \
             n*(Var eta + Var phi) = {var_sum:.4} (in [3.6, 4.4], benchmark 4)"
        ),
    );
}

#[test]
fn criterion_8_attainable_covariance_bound() {
    // Exact boundary case: I = 1, V = 2*1 gives trace exactly 1.
    let identity = InfoMatrix::identity(InfoKind::Quantum, 2);
    let gm = gill_massar_feasible(&identity, &[2.0, 0.0, 0.0, 2.0]).unwrap();
    let exact = gm.trace_value == 1.0 && gm.feasible;

    // Every simulated strategy respects the bound within 3 MC standard errors.
    let plan = TwoStagePlan::with_sqrt_split(10_000).unwrap();
    let two_param = |scheme| ExperimentSpec {
        strategy: Strategy::TwoParam {
            angles: SphericalAngles::new(FRAC_PI_2, 0.0).unwrap(),
            scheme,
        },
        plan,
    };
    let adaptive = ExperimentSpec {
        strategy: Strategy::AdaptiveGeneral {
            model: example_model(FRAC_PI_2).unwrap(),
            theta_true: 1.3,
            first_stage: qinfo_core::FirstStageSpec::ExampleXy { eta: FRAC_PI_2 },
        },
        plan,
    };
    let mut lines = Vec::new();
    let mut all_ok = exact;
    let strategies: Vec<(&str, ExperimentSummary)> = vec![
        ("two_stage eta=pi/2", run_two_stage(FRAC_PI_2)),
        ("two_stage eta=pi/4", run_two_stage(FRAC_PI_4)),
        (
            "adaptive_general",
            replicate(&adaptive, 2000, MASTER_SEED).unwrap(),
        ),
        (
            "two_param_yz",
            replicate(&two_param(TwoParamScheme::AlternateYz), 2000, MASTER_SEED).unwrap(),
        ),
        (
            "two_param_x_only",
            replicate(&two_param(TwoParamScheme::XOnly), 2000, MASTER_SEED).unwrap(),
        ),
    ];
    for (name, summary) in &strategies {
        let trace = summary.gm_trace.expect("invertible reference information");
        let se = summary.gm_trace_se.expect("block standard error");
        let ok = trace <= 1.0 + 3.0 * se;
        all_ok &= ok;
        lines.push(format!("{name}: trace = {trace:.4} <= 1 + 3*{se:.4}"));
    }

    report(
        8,
        all_ok,
        &format!(
            "trace(I^-1 V^-1) = 1 exactly at the boundary case; {}",
            lines.join("; ")
        ),
    );
}

#[test]
fn criterion_9_cli_determinism() {
    let binary = env!("CARGO_BIN_EXE_qinfo");
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/configs/simulate.json");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let status = Command::new(binary)
            .arg("simulate")
            .arg("--config")
            .arg(&config)
            .arg("--seed")
            .arg("31337")
            .arg("--out")
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(status.success());
    }
    let csv: Vec<_> = dirs
        .iter()
        .map(|d| std::fs::read(d.path().join("simulate.csv")).unwrap())
        .collect();
    let json: Vec<serde_json::Value> = dirs
        .iter()
        .map(|d| {
            let text = std::fs::read_to_string(d.path().join("simulate.json")).unwrap();
            let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
            v["wall_time_ms"] = serde_json::json!(0);
            v
        })
        .collect();
    let ok = csv[0] == csv[1] && json[0] == json[1];
    report(
        9,
        ok,
        "repeated seeded CLI runs are byte-identical (wall-time metadata excluded)",
    );
}
