//! Per-command execution: evaluate the requested diagnostic over the
//! configured grid and produce the CSV table plus JSON details.

use serde_json::json;

use qinfo_core::estimation::{replicate, replicate_streamed, ExperimentSpec, ExperimentSummary};
use qinfo_core::geometry::{curve_classify, uniform_attainability, CurveClass, CurveSample};
use qinfo_core::information::{
    attainability_check, attainability_check_parts, bc_chain, bc_chain_parts,
    fisher_matrix, fisher_matrix_parts, qfi_matrix, qfi_scalar, qfi_scalar_parts,
    AttainabilityReport, ChainReport, InfoMatrix,
};
use qinfo_core::model::{bloch_to_density, DensityOperator};
use qinfo_core::operators::{spin_operator, HermitianOperator};

use crate::config::{
    build_model, build_povm, build_strategy, resolve_grid_1d, resolve_grid_2d, CommandKind,
    ExperimentConfig, RunModel,
};
use crate::report::{Cell, Table};
use crate::CliError;

pub struct CommandOutput {
    pub table: Table,
    pub details: serde_json::Value,
    pub seed: Option<u64>,
}

pub fn execute(
    config: &ExperimentConfig,
    config_dir: &std::path::Path,
) -> Result<CommandOutput, CliError> {
    match config.command {
        CommandKind::Qfi => run_qfi(config, config_dir),
        CommandKind::Fisher => run_fisher(config, config_dir),
        CommandKind::Chain => run_chain(config, config_dir),
        CommandKind::Attain => run_attain(config, config_dir),
        CommandKind::Classify => run_classify(config, config_dir),
        CommandKind::Simulate => run_simulate(config),
        CommandKind::Sweep => run_sweep(config),
    }
}

/// `(ρ, ρ̇)` at one grid point of a sampled curve.
fn curve_point(
    sample: &CurveSample,
    idx: usize,
) -> Result<(DensityOperator, HermitianOperator), CliError> {
    let rho = bloch_to_density(sample.us()[idx]).map_err(CliError::numeric)?;
    let rho_dot = spin_operator([
        0.5 * sample.u_dots()[idx][0],
        0.5 * sample.u_dots()[idx][1],
        0.5 * sample.u_dots()[idx][2],
    ]);
    Ok((rho, rho_dot))
}

fn run_qfi(
    config: &ExperimentConfig,
    config_dir: &std::path::Path,
) -> Result<CommandOutput, CliError> {
    match build_model(&config.model, config_dir)? {
        RunModel::Scalar(model) => {
            let grid = resolve_grid_1d(&config.grid)?;
            let mut table = Table::new(vec!["theta", "qfi"]);
            for &theta in &grid {
                let value = qfi_scalar(&model, &[theta]).map_err(CliError::numeric)?;
                table.push(vec![Cell::Float(theta), Cell::Float(value)]);
            }
            Ok(CommandOutput {
                details: json!({ "points": grid.len() }),
                table,
                seed: None,
            })
        }
        RunModel::Sphere(model) => {
            let (etas, phis) = resolve_grid_2d(&config.grid)?;
            let mut table = Table::new(vec!["eta", "phi", "i_eta_eta", "i_eta_phi", "i_phi_phi"]);
            for &eta in &etas {
                for &phi in &phis {
                    let m = qfi_matrix(&model, &[eta, phi]).map_err(CliError::numeric)?;
                    table.push(vec![
                        Cell::Float(eta),
                        Cell::Float(phi),
                        Cell::Float(m.get(0, 0)),
                        Cell::Float(m.get(0, 1)),
                        Cell::Float(m.get(1, 1)),
                    ]);
                }
            }
            Ok(CommandOutput {
                details: json!({ "points": etas.len() * phis.len() }),
                table,
                seed: None,
            })
        }
        RunModel::Curve(sample) => {
            let mut table = Table::new(vec!["theta", "qfi"]);
            for idx in 0..sample.len() {
                let (rho, rho_dot) = curve_point(&sample, idx)?;
                let value = qfi_scalar_parts(&rho, &rho_dot).map_err(CliError::numeric)?;
                table.push(vec![Cell::Float(sample.thetas()[idx]), Cell::Float(value)]);
            }
            Ok(CommandOutput {
                details: json!({ "points": sample.len() }),
                table,
                seed: None,
            })
        }
    }
}

fn fisher_scalar_row(theta: f64, m: &InfoMatrix) -> Vec<Cell> {
    vec![
        Cell::Float(theta),
        Cell::Float(m.scalar()),
        Cell::Bool(m.is_singular()),
    ]
}

fn run_fisher(
    config: &ExperimentConfig,
    config_dir: &std::path::Path,
) -> Result<CommandOutput, CliError> {
    let povm = build_povm(config.povm.as_ref().expect("validated"))?;
    match build_model(&config.model, config_dir)? {
        RunModel::Scalar(model) => {
            let grid = resolve_grid_1d(&config.grid)?;
            let mut table = Table::new(vec!["theta", "fisher", "singular"]);
            let mut singular_points = 0usize;
            for &theta in &grid {
                let m = fisher_matrix(&model, &povm, &[theta]).map_err(CliError::numeric)?;
                singular_points += m.is_singular() as usize;
                table.push(fisher_scalar_row(theta, &m));
            }
            Ok(CommandOutput {
                details: json!({ "points": grid.len(), "singular_points": singular_points }),
                table,
                seed: None,
            })
        }
        RunModel::Sphere(model) => {
            let (etas, phis) = resolve_grid_2d(&config.grid)?;
            let mut table = Table::new(vec![
                "eta",
                "phi",
                "i_eta_eta",
                "i_eta_phi",
                "i_phi_phi",
                "singular",
            ]);
            let mut singular_points = 0usize;
            for &eta in &etas {
                for &phi in &phis {
                    let m =
                        fisher_matrix(&model, &povm, &[eta, phi]).map_err(CliError::numeric)?;
                    singular_points += m.is_singular() as usize;
                    table.push(vec![
                        Cell::Float(eta),
                        Cell::Float(phi),
                        Cell::Float(m.get(0, 0)),
                        Cell::Float(m.get(0, 1)),
                        Cell::Float(m.get(1, 1)),
                        Cell::Bool(m.is_singular()),
                    ]);
                }
            }
            Ok(CommandOutput {
                details: json!({
                    "points": etas.len() * phis.len(),
                    "singular_points": singular_points,
                }),
                table,
                seed: None,
            })
        }
        RunModel::Curve(sample) => {
            let mut table = Table::new(vec!["theta", "fisher", "singular"]);
            let mut singular_points = 0usize;
            for idx in 0..sample.len() {
                let (rho, rho_dot) = curve_point(&sample, idx)?;
                let m = fisher_matrix_parts(&rho, std::slice::from_ref(&rho_dot), &povm)
                    .map_err(CliError::numeric)?;
                singular_points += m.is_singular() as usize;
                table.push(fisher_scalar_row(sample.thetas()[idx], &m));
            }
            Ok(CommandOutput {
                details: json!({ "points": sample.len(), "singular_points": singular_points }),
                table,
                seed: None,
            })
        }
    }
}

fn chain_row(theta: f64, report: &ChainReport) -> Vec<Cell> {
    vec![
        Cell::Float(theta),
        Cell::Float(report.fisher),
        Cell::Float(report.step1),
        Cell::Float(report.step2),
        Cell::Float(report.quantum),
        Cell::Float(report.slack[0]),
        Cell::Float(report.slack[1]),
        Cell::Float(report.slack[2]),
    ]
}

const CHAIN_COLUMNS: [&str; 8] = [
    "theta", "fisher", "step1", "step2", "quantum", "slack1", "slack2", "slack3",
];

fn run_chain(
    config: &ExperimentConfig,
    config_dir: &std::path::Path,
) -> Result<CommandOutput, CliError> {
    let povm = build_povm(config.povm.as_ref().expect("validated"))?;
    let mut table = Table::new(CHAIN_COLUMNS.to_vec());
    let mut max_slack = f64::NEG_INFINITY;
    let mut min_slack = f64::INFINITY;
    let mut push = |theta: f64, report: &ChainReport, table: &mut Table| {
        max_slack = max_slack.max(report.total_slack());
        min_slack = min_slack.min(report.total_slack());
        table.push(chain_row(theta, report));
    };
    match build_model(&config.model, config_dir)? {
        RunModel::Scalar(model) => {
            for &theta in &resolve_grid_1d(&config.grid)? {
                let report = bc_chain(&model, &povm, &[theta]).map_err(CliError::numeric)?;
                push(theta, &report, &mut table);
            }
        }
        RunModel::Sphere(_) => {
            return Err(CliError::config(
                "chain needs a scalar-parameter model (example or curve_csv)",
            ))
        }
        RunModel::Curve(sample) => {
            for idx in 0..sample.len() {
                let (rho, rho_dot) = curve_point(&sample, idx)?;
                let report =
                    bc_chain_parts(&rho, &rho_dot, &povm).map_err(CliError::numeric)?;
                push(sample.thetas()[idx], &report, &mut table);
            }
        }
    }
    let rows = table.rows.len();
    Ok(CommandOutput {
        table,
        details: json!({
            "points": rows,
            "min_total_slack": min_slack,
            "max_total_slack": max_slack,
        }),
        seed: None,
    })
}

fn attain_row(theta: f64, report: &AttainabilityReport) -> Vec<Cell> {
    let cond1_all = report
        .outcomes
        .iter()
        .filter(|o| o.in_support)
        .all(|o| o.cond1_holds);
    let max_residual = report
        .outcomes
        .iter()
        .filter(|o| o.in_support)
        .map(|o| o.proportionality_residual)
        .fold(0.0f64, f64::max);
    vec![
        Cell::Float(theta),
        Cell::Bool(report.attains_here),
        Cell::Bool(cond1_all),
        Cell::Bool(report.cond2_holds),
        Cell::Float(report.cond2_value),
        Cell::Float(max_residual),
    ]
}

const ATTAIN_COLUMNS: [&str; 6] = [
    "theta",
    "attains",
    "cond1_all",
    "cond2_holds",
    "cond2_value",
    "max_residual",
];

fn run_attain(
    config: &ExperimentConfig,
    config_dir: &std::path::Path,
) -> Result<CommandOutput, CliError> {
    let povm = build_povm(config.povm.as_ref().expect("validated"))?;
    let mut table = Table::new(ATTAIN_COLUMNS.to_vec());
    let (class, uniform) = match build_model(&config.model, config_dir)? {
        RunModel::Scalar(model) => {
            let grid = resolve_grid_1d(&config.grid)?;
            let overall =
                uniform_attainability(&model, &povm, &grid).map_err(CliError::numeric)?;
            for &theta in &grid {
                let report =
                    attainability_check(&model, &povm, &[theta]).map_err(CliError::numeric)?;
                table.push(attain_row(theta, &report));
            }
            (overall.class, overall.uniform)
        }
        RunModel::Sphere(_) => {
            return Err(CliError::config(
                "attain needs a scalar-parameter model (example or curve_csv)",
            ))
        }
        RunModel::Curve(sample) => {
            let class = curve_classify(&sample).map_err(CliError::numeric)?;
            let mut uniform = true;
            for idx in 0..sample.len() {
                let (rho, rho_dot) = curve_point(&sample, idx)?;
                let report = attainability_check_parts(&rho, &rho_dot, &povm)
                    .map_err(CliError::numeric)?;
                uniform &= report.attains_here;
                table.push(attain_row(sample.thetas()[idx], &report));
            }
            (class, uniform)
        }
    };
    let attaining = table
        .rows
        .iter()
        .filter(|r| matches!(r[1], Cell::Bool(true)))
        .count();
    Ok(CommandOutput {
        details: json!({
            "uniform": uniform,
            "curve_class": class.label(),
            "normal": class_normal(&class),
            "attaining_points": attaining,
            "points": table.rows.len(),
        }),
        table,
        seed: None,
    })
}

fn class_normal(class: &CurveClass) -> serde_json::Value {
    match class {
        CurveClass::GreatCircle { normal } => json!(normal),
        _ => serde_json::Value::Null,
    }
}

fn run_classify(
    config: &ExperimentConfig,
    config_dir: &std::path::Path,
) -> Result<CommandOutput, CliError> {
    let sample = match build_model(&config.model, config_dir)? {
        RunModel::Scalar(model) => {
            let grid = resolve_grid_1d(&config.grid)?;
            CurveSample::from_model(&model, &grid).map_err(CliError::numeric)?
        }
        RunModel::Curve(sample) => sample,
        RunModel::Sphere(_) => {
            return Err(CliError::config(
                "classify needs a scalar-parameter model (example or curve_csv)",
            ))
        }
    };
    let class = curve_classify(&sample).map_err(CliError::numeric)?;
    let mut table = Table::new(vec!["class", "normal_x", "normal_y", "normal_z"]);
    let row = match class {
        CurveClass::GreatCircle { normal } => vec![
            Cell::Str(class.label().into()),
            Cell::Float(normal[0]),
            Cell::Float(normal[1]),
            Cell::Float(normal[2]),
        ],
        _ => vec![
            Cell::Str(class.label().into()),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
        ],
    };
    table.push(row);
    Ok(CommandOutput {
        details: json!({
            "curve_class": class.label(),
            "normal": class_normal(&class),
            "points": sample.len(),
        }),
        table,
        seed: None,
    })
}

const SIMULATE_COLUMNS: [&str; 23] = [
    "strategy",
    "n",
    "alpha",
    "n0",
    "replications",
    "seed",
    "bias_1",
    "bias_2",
    "nvar_1",
    "nvar_2",
    "ncov_12",
    "skew_1",
    "skew_2",
    "exkurt_1",
    "exkurt_2",
    "mean_fidelity_loss",
    "gm_trace",
    "gm_trace_se",
    "bound_11",
    "bound_22",
    "clamped_fraction",
    "degenerate_fraction",
    "mle_boundary_fraction",
];

fn summary_cells(
    strategy_name: &str,
    plan: &qinfo_core::TwoStagePlan,
    seed: u64,
    summary: &ExperimentSummary,
) -> Vec<Cell> {
    let k = summary.param_dim;
    let cov = &summary.covariance_scaled;
    let bound = &summary.reference_bound;
    vec![
        Cell::Str(strategy_name.into()),
        Cell::UInt(plan.n()),
        Cell::Float(plan.alpha()),
        Cell::UInt(plan.n0()),
        Cell::UInt(summary.replications as u64),
        Cell::UInt(seed),
        Cell::Float(summary.bias[0]),
        Cell::opt_float(summary.bias.get(1).copied()),
        Cell::Float(cov[0]),
        Cell::opt_float(if k == 2 { Some(cov[3]) } else { None }),
        Cell::opt_float(if k == 2 { Some(cov[1]) } else { None }),
        Cell::Float(summary.skewness[0]),
        Cell::opt_float(summary.skewness.get(1).copied()),
        Cell::Float(summary.excess_kurtosis[0]),
        Cell::opt_float(summary.excess_kurtosis.get(1).copied()),
        Cell::opt_float(summary.mean_fidelity_loss),
        Cell::opt_float(summary.gm_trace),
        Cell::opt_float(summary.gm_trace_se),
        Cell::opt_float(bound.first().copied()),
        Cell::opt_float(if k == 2 { bound.get(3).copied() } else { None }),
        Cell::Float(summary.clamped_fraction),
        Cell::Float(summary.degenerate_fraction),
        Cell::Float(summary.mle_boundary_fraction),
    ]
}

fn adaptive_assumptions(strategy: &crate::config::StrategySpec) -> serde_json::Value {
    match strategy {
        crate::config::StrategySpec::AdaptiveGeneral => json!([
            "second stage treats the first-stage estimate as fixed and \
             measures the score eigenbasis computed there",
            "the information of that measurement is assumed continuous in \
             the true parameter near the estimate; this is not verified at \
             run time"
        ]),
        _ => json!([]),
    }
}

fn run_simulate(config: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    let plan_spec = config.plan.as_ref().expect("validated");
    let strategy_spec = plan_spec.strategy.expect("validated");
    let strategy = build_strategy(
        plan_spec,
        &config.model,
        &config.povm,
        &config.grid,
        None,
    )?;
    let plan = plan_spec.two_stage_plan();
    let spec = ExperimentSpec { strategy, plan };
    let summary =
        replicate(&spec, plan_spec.replications, plan_spec.seed).map_err(CliError::numeric)?;

    let mut table = Table::new(SIMULATE_COLUMNS.to_vec());
    table.push(summary_cells(
        strategy_spec.name(),
        &plan,
        plan_spec.seed,
        &summary,
    ));
    Ok(CommandOutput {
        table,
        details: json!({
            "strategy": strategy_spec.name(),
            "summary": summary,
            "assumptions": adaptive_assumptions(&strategy_spec),
        }),
        seed: Some(plan_spec.seed),
    })
}

fn run_sweep(config: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    let plan_spec = config.plan.as_ref().expect("validated");
    let strategy_spec = plan_spec.strategy.expect("validated");
    let grid = resolve_grid_1d(&config.grid)?;
    let plan = plan_spec.two_stage_plan();

    let mut columns = vec!["theta_true"];
    columns.extend_from_slice(&SIMULATE_COLUMNS);
    let mut table = Table::new(columns);

    for (idx, &value) in grid.iter().enumerate() {
        let strategy = build_strategy(
            plan_spec,
            &config.model,
            &config.povm,
            &config.grid,
            Some(value),
        )?;
        let spec = ExperimentSpec { strategy, plan };
        // Disjoint stream blocks per sweep point.
        let stream_base = (idx as u64) << 32;
        let summary = replicate_streamed(
            &spec,
            plan_spec.replications,
            plan_spec.seed,
            stream_base,
        )
        .map_err(CliError::numeric)?;
        let mut row = vec![Cell::Float(value)];
        row.extend(summary_cells(
            strategy_spec.name(),
            &plan,
            plan_spec.seed,
            &summary,
        ));
        table.push(row);
    }
    Ok(CommandOutput {
        details: json!({
            "strategy": strategy_spec.name(),
            "points": table.rows.len(),
            "assumptions": adaptive_assumptions(&strategy_spec),
        }),
        table,
        seed: Some(plan_spec.seed),
    })
}
