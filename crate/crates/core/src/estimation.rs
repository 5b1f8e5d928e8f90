//! Seeded outcome sampling, the two-stage adaptive estimators, Monte Carlo
//! replication, and the attainable-covariance (trace-inverse) feasibility
//! check.
//!
//! Reproducibility contract: every replication draws from a ChaCha8 stream
//! keyed by `(master_seed, stream_index)`. Identical seed and stream give
//! bit-identical outcome sequences on every run of the same build, and
//! summary aggregation uses pairwise summation over the index-ordered
//! replication results, so the numbers do not depend on thread scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{example_state, SphericalAngles};
use crate::information::{qfi_scalar, sld_solve, InfoKind, InfoMatrix};
use crate::model::{
    outcome_distribution, DensityOperator, ParametricModel, Povm, PureState,
};
use crate::vec3;

const POLE_EPS: f64 = 1e-12;
const MLE_TOL: f64 = 1e-10;
const MLE_BOUNDARY_EPS: f64 = 1e-6;
const GM_FEASIBLE_TOL: f64 = 1e-9;

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = x.rem_euclid(tau);
    if w >= tau {
        w - tau
    } else {
        w
    }
}

/// Wrapped difference in `(-π, π]`, the error metric for circular
/// coordinates.
pub fn wrap_error(x: f64) -> f64 {
    let w = wrap_angle(x);
    if w > std::f64::consts::PI {
        w - std::f64::consts::TAU
    } else {
        w
    }
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        n if n <= 8 => xs.iter().sum(),
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

fn pairwise_mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        pairwise_sum(xs) / xs.len() as f64
    }
}

/// One member of the family of reproducible random streams.
///
/// Streams are ChaCha8 generators keyed by `seed_from_u64(master_seed)` with
/// the cipher's stream id set to `stream_index`; replication `r` of an
/// experiment uses stream `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream {
            master_seed,
            stream_index,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Binomial draw that always samples with success probability
/// `min(p, 1-p)` and complements the count when needed, so `B(n, p)` and
/// `B(n, 1-p)` consume identical randomness and yield complementary counts.
fn draw_binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 {
        return 0;
    }
    let p = if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) };
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if p > 0.5 {
        n - Binomial::new(n, 1.0 - p).expect("p in range").sample(rng)
    } else {
        Binomial::new(n, p).expect("p in range").sample(rng)
    }
}

/// Multinomial draw of `n` measurement outcomes, by sequential conditional
/// binomials in label order. Counts sum to `n` exactly.
pub fn sample_outcomes<R: Rng>(
    rho: &DensityOperator,
    povm: &Povm,
    n: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let dist = outcome_distribution(rho, povm)?;
    let k = dist.len();
    let mut counts = vec![0u64; k];
    let mut remaining = n;
    let mut mass_left = 1.0f64;
    for (slot, &p) in counts.iter_mut().zip(dist.probs()).take(k - 1) {
        if remaining == 0 {
            break;
        }
        let q = if mass_left <= 1e-300 { 0.0 } else { p / mass_left };
        let c = draw_binomial(rng, remaining, q);
        *slot = c;
        remaining -= c;
        mass_left = (mass_left - p).max(0.0);
    }
    counts[k - 1] += remaining;
    Ok(counts)
}

/// Copy budget of a two-stage experiment: `n0 = ceil(n^alpha)` copies go to
/// the rough first stage, the remaining `n' = n - n0` to the estimated
/// optimal measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoStagePlan {
    n: u64,
    alpha: f64,
    n0: u64,
    n_prime: u64,
}

impl TwoStagePlan {
    pub fn new(n: u64, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) || alpha <= 0.0 {
            return Err(Error::InvalidPlan(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        let n0 = (n as f64).powf(alpha).ceil() as u64;
        if n0 < 4 {
            return Err(Error::InvalidPlan(format!(
                "first stage needs at least 4 copies, got n0 = {n0}"
            )));
        }
        if n <= n0 {
            return Err(Error::InvalidPlan(format!(
                "second stage needs at least 1 copy (n = {n}, n0 = {n0})"
            )));
        }
        Ok(TwoStagePlan {
            n,
            alpha,
            n0,
            n_prime: n - n0,
        })
    }

    /// Default plan with `alpha = 1/2`.
    pub fn with_sqrt_split(n: u64) -> Result<Self> {
        TwoStagePlan::new(n, 0.5)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n0(&self) -> u64 {
        self.n0
    }

    pub fn n_prime(&self) -> u64 {
        self.n_prime
    }

    /// Split the first-stage budget over `parts` observables: floor for all
    /// but the last, which absorbs the remainder.
    pub fn first_stage_split(&self, parts: usize) -> Vec<u64> {
        let base = self.n0 / parts as u64;
        let mut out = vec![base; parts];
        out[parts - 1] = self.n0 - base * (parts as u64 - 1);
        out
    }
}

/// First-stage estimate of the longitude from σ_x and σ_y counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstStageEstimate {
    pub theta: f64,
    /// Both direction components were zero; the estimate defaults to 0.
    pub degenerate: bool,
    /// Some ratio fell outside `[-1, 1]` and was clipped.
    pub clamped: bool,
}

/// Consistent first-stage estimator: `cos θ` and `sin θ` from the two
/// frequencies, combined with atan2 and wrapped to `[0, 2π)`.
pub fn first_stage_theta(
    plus_x: u64,
    trials_x: u64,
    plus_y: u64,
    trials_y: u64,
    eta: f64,
) -> FirstStageEstimate {
    debug_assert!(trials_x > 0 && trials_y > 0);
    let s = eta.sin();
    debug_assert!(s > 0.0);
    let fx = plus_x as f64 / trials_x as f64;
    let fy = plus_y as f64 / trials_y as f64;
    let cos_raw = (2.0 * fx - 1.0) / s;
    let sin_raw = (2.0 * fy - 1.0) / s;
    let clamped = cos_raw.abs() > 1.0 || sin_raw.abs() > 1.0;
    let cos_hat = cos_raw.clamp(-1.0, 1.0);
    let sin_hat = sin_raw.clamp(-1.0, 1.0);
    if cos_hat == 0.0 && sin_hat == 0.0 {
        FirstStageEstimate {
            theta: 0.0,
            degenerate: true,
            clamped,
        }
    } else {
        FirstStageEstimate {
            theta: wrap_angle(sin_hat.atan2(cos_hat)),
            degenerate: false,
            clamped,
        }
    }
}

/// Closed-form second-stage update
/// `θ̂ = θ̃ + arcsin((n' - 2X)/(n' sin η))`, with the arcsine argument
/// clipped to `[-1, 1]`.
pub fn second_stage_update(theta_tilde: f64, n_prime: u64, x: u64, eta: f64) -> (f64, bool) {
    let arg = (n_prime as f64 - 2.0 * x as f64) / (n_prime as f64 * eta.sin());
    let clamped = !(-1.0..=1.0).contains(&arg);
    let theta_hat = wrap_angle(theta_tilde + arg.clamp(-1.0, 1.0).asin());
    (theta_hat, clamped)
}

/// Per-observable outcome tally of one experiment stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTally {
    pub stage: u8,
    pub label: String,
    pub successes: u64,
    pub trials: u64,
}

/// Full record of one adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub theta_tilde: f64,
    pub theta_hat: f64,
    pub clamped: bool,
    pub degenerate_first_stage: bool,
    pub mle_boundary: bool,
    pub counts: Vec<StageTally>,
}

/// The two-stage estimator for the example model with known colatitude:
/// σ_x and σ_y on the first stage, the estimated score direction
/// `(π/2, θ̃ + π/2)` on the rest, closed-form arcsine update.
pub fn two_stage_theta<R: Rng>(
    eta: f64,
    theta_true: f64,
    plan: &TwoStagePlan,
    rng: &mut R,
) -> Result<EstimateRecord> {
    let s = eta.sin();
    if s.abs() <= POLE_EPS {
        return Err(Error::PoleDegeneracy { eta });
    }
    let split = plan.first_stage_split(2);
    let (kx, ky) = (split[0], split[1]);
    let px = 0.5 * (s * theta_true.cos() + 1.0);
    let py = 0.5 * (s * theta_true.sin() + 1.0);
    let plus_x = draw_binomial(rng, kx, px);
    let plus_y = draw_binomial(rng, ky, py);
    let first = first_stage_theta(plus_x, kx, plus_y, ky, eta);

    // Binomial count of `+1` outcomes for spin along (π/2, θ̃ + π/2).
    let p2 = 0.5 * (1.0 - s * (theta_true - first.theta).sin());
    let x = draw_binomial(rng, plan.n_prime(), p2);
    let (theta_hat, clamped2) = second_stage_update(first.theta, plan.n_prime(), x, eta);

    Ok(EstimateRecord {
        theta_tilde: first.theta,
        theta_hat,
        clamped: first.clamped || clamped2,
        degenerate_first_stage: first.degenerate,
        mle_boundary: false,
        counts: vec![
            StageTally {
                stage: 1,
                label: "sigma_x".into(),
                successes: plus_x,
                trials: kx,
            },
            StageTally {
                stage: 1,
                label: "sigma_y".into(),
                successes: plus_y,
                trials: ky,
            },
            StageTally {
                stage: 2,
                label: "score_direction".into(),
                successes: x,
                trials: plan.n_prime(),
            },
        ],
    })
}

/// How the general adaptive scheme obtains its rough first-stage estimate.
#[derive(Debug, Clone)]
pub enum FirstStageSpec {
    /// The σ_x/σ_y scheme of the example model (known colatitude).
    ExampleXy { eta: f64 },
    /// Coarse grid maximum likelihood over a fixed measurement.
    GridMle { povm: Povm, grid: Vec<f64> },
}

/// General one-parameter adaptive scheme: estimate roughly, measure the
/// eigenprojectors of the quantum score at the estimate on every remaining
/// copy, then maximize the second-stage likelihood by golden-section search
/// on `[θ̃ - π/2, θ̃ + π/2]`.
pub fn adaptive_general<R: Rng>(
    model: &ParametricModel,
    theta_true: f64,
    plan: &TwoStagePlan,
    first_stage: &FirstStageSpec,
    rng: &mut R,
) -> Result<EstimateRecord> {
    if model.param_dim() != 1 {
        return Err(Error::BadParameterLength {
            expected: 1,
            got: model.param_dim(),
        });
    }
    let rho_true = model.state(&[theta_true]);
    let mut counts = Vec::new();

    let (theta_tilde, degenerate, clamped1) = match first_stage {
        FirstStageSpec::ExampleXy { eta } => {
            if eta.sin().abs() <= POLE_EPS {
                return Err(Error::PoleDegeneracy { eta: *eta });
            }
            let split = plan.first_stage_split(2);
            let cx = sample_outcomes(&rho_true, &Povm::pauli_x_projectors(), split[0], rng)?;
            let cy = sample_outcomes(&rho_true, &Povm::pauli_y_projectors(), split[1], rng)?;
            let first = first_stage_theta(cx[0], split[0], cy[0], split[1], *eta);
            counts.push(StageTally {
                stage: 1,
                label: "sigma_x".into(),
                successes: cx[0],
                trials: split[0],
            });
            counts.push(StageTally {
                stage: 1,
                label: "sigma_y".into(),
                successes: cy[0],
                trials: split[1],
            });
            (first.theta, first.degenerate, first.clamped)
        }
        FirstStageSpec::GridMle { povm, grid } => {
            if grid.is_empty() {
                return Err(Error::InvalidPlan("empty first-stage grid".into()));
            }
            let tallies = sample_outcomes(&rho_true, povm, plan.n0(), rng)?;
            let mut best = (f64::NEG_INFINITY, grid[0]);
            for &theta in grid {
                let ll = log_likelihood(model, povm, theta, &tallies)?;
                if ll > best.0 {
                    best = (ll, theta);
                }
            }
            for (i, el) in povm.iter().enumerate() {
                counts.push(StageTally {
                    stage: 1,
                    label: el.label.clone(),
                    successes: tallies[i],
                    trials: plan.n0(),
                });
            }
            (wrap_angle(best.1), false, false)
        }
    };

    // Second stage: measure the score at the first-stage estimate.
    let rho_tilde = model.state(&[theta_tilde]);
    let rho_dot_tilde = model.derivative(&[theta_tilde], 0)?;
    let lambda = sld_solve(&rho_tilde, &rho_dot_tilde)?.lambda;
    let score_povm = Povm::eigenprojectors(&lambda, 1e-8)?;
    let tallies = sample_outcomes(&rho_true, &score_povm, plan.n_prime(), rng)?;
    for (i, el) in score_povm.iter().enumerate() {
        counts.push(StageTally {
            stage: 2,
            label: el.label.clone(),
            successes: tallies[i],
            trials: plan.n_prime(),
        });
    }

    let lo = theta_tilde - std::f64::consts::FRAC_PI_2;
    let hi = theta_tilde + std::f64::consts::FRAC_PI_2;
    let theta_raw = golden_section_max(lo, hi, theta_tilde, MLE_TOL, |theta| {
        log_likelihood(model, &score_povm, theta, &tallies).unwrap_or(f64::NEG_INFINITY)
    });
    let mle_boundary = (theta_raw - lo) < MLE_BOUNDARY_EPS || (hi - theta_raw) < MLE_BOUNDARY_EPS;

    Ok(EstimateRecord {
        theta_tilde,
        theta_hat: wrap_angle(theta_raw),
        clamped: clamped1,
        degenerate_first_stage: degenerate,
        mle_boundary,
        counts,
    })
}

fn log_likelihood(
    model: &ParametricModel,
    povm: &Povm,
    theta: f64,
    tallies: &[u64],
) -> Result<f64> {
    let dist = outcome_distribution(&model.state(&[theta]), povm)?;
    let mut ll = 0.0;
    for (i, &c) in tallies.iter().enumerate() {
        if c == 0 {
            continue;
        }
        ll += c as f64 * dist.probs()[i].max(1e-300).ln();
    }
    Ok(ll)
}

/// Golden-section maximization on `[a, b]` to absolute tolerance `tol`;
/// exact ties between the probes shrink toward `prefer`.
fn golden_section_max(
    mut a: f64,
    mut b: f64,
    prefer: f64,
    tol: f64,
    f: impl Fn(f64) -> f64,
) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        let keep_left = if fc > fd {
            true
        } else if fc < fd {
            false
        } else {
            (c - prefer).abs() <= (d - prefer).abs()
        };
        if keep_left {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Second-stage measurement choice for the two-parameter scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoParamScheme {
    /// Alternate σ_y and σ_z in the rotated frame (the efficient scheme).
    AlternateYz,
    /// Measure only σ_x in the rotated frame; determines the radial
    /// distance from the first-stage estimate but not the direction.
    XOnly,
}

/// One run of the two-parameter adaptive estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoParamRecord {
    pub eta_hat: f64,
    pub phi_hat: f64,
    pub clamped: bool,
    pub degenerate_first_stage: bool,
    pub counts: Vec<StageTally>,
}

/// Two-parameter adaptive estimation of a completely unknown pure qubit
/// state: σ_x/σ_y/σ_z tomography on the first stage, then (in the frame that
/// puts the rough estimate at `(π/2, 0)`) alternating σ_y/σ_z measurements
/// and the closed-form constrained MLE.
pub fn two_param_adaptive<R: Rng>(
    angles_true: &SphericalAngles,
    plan: &TwoStagePlan,
    scheme: TwoParamScheme,
    rng: &mut R,
) -> Result<TwoParamRecord> {
    if angles_true.is_pole() {
        return Err(Error::PoleDegeneracy {
            eta: angles_true.eta(),
        });
    }
    let u_true = angles_true.unit_vector();
    let split = plan.first_stage_split(3);
    let axes: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let labels = ["sigma_x", "sigma_y", "sigma_z"];

    let mut counts = Vec::new();
    let mut rough = [0.0f64; 3];
    for i in 0..3 {
        let p = 0.5 * (1.0 + vec3::dot(u_true, axes[i]));
        let plus = draw_binomial(rng, split[i], p);
        rough[i] = 2.0 * (plus as f64 / split[i] as f64) - 1.0;
        counts.push(StageTally {
            stage: 1,
            label: labels[i].into(),
            successes: plus,
            trials: split[i],
        });
    }

    let (b_hat, degenerate) = match vec3::unit(rough, 1e-12) {
        Some(u) => (u, false),
        None => ([1.0, 0.0, 0.0], true),
    };

    // Frame rotation taking the rough estimate to the x axis.
    let rot = rotation_to_x(b_hat);
    let u_rot = mat3_apply(&rot, u_true);

    let mut clamped = false;
    let u_est_rot = match scheme {
        TwoParamScheme::AlternateYz => {
            let n_y = plan.n_prime() - plan.n_prime() / 2;
            let n_z = plan.n_prime() / 2;
            let plus_y = draw_binomial(rng, n_y, 0.5 * (1.0 + u_rot[1]));
            let plus_z = draw_binomial(rng, n_z, 0.5 * (1.0 + u_rot[2]));
            counts.push(StageTally {
                stage: 2,
                label: "sigma_y".into(),
                successes: plus_y,
                trials: n_y,
            });
            counts.push(StageTally {
                stage: 2,
                label: "sigma_z".into(),
                successes: plus_z,
                trials: n_z,
            });
            let uy = 2.0 * (plus_y as f64 / n_y as f64) - 1.0;
            let uz = 2.0 * (plus_z as f64 / n_z as f64) - 1.0;
            let rad = 1.0 - uy * uy - uz * uz;
            if rad < 0.0 {
                clamped = true;
            }
            let ux = rad.max(0.0).sqrt();
            // Renormalize: uy² + uz² may exceed 1 after clipping.
            vec3::unit([ux, uy, uz], 1e-300).unwrap_or([1.0, 0.0, 0.0])
        }
        TwoParamScheme::XOnly => {
            let plus_x = draw_binomial(rng, plan.n_prime(), 0.5 * (1.0 + u_rot[0]));
            counts.push(StageTally {
                stage: 2,
                label: "sigma_x".into(),
                successes: plus_x,
                trials: plan.n_prime(),
            });
            let ux = (2.0 * (plus_x as f64 / plan.n_prime() as f64) - 1.0).clamp(-1.0, 1.0);
            // The direction around the x axis is not identified by this
            // data; pick the +y side of the circle deterministically.
            let r = (1.0 - ux * ux).max(0.0).sqrt();
            [ux, r, 0.0]
        }
    };

    let u_est = mat3_apply_transpose(&rot, u_est_rot);
    let eta_hat = u_est[2].clamp(-1.0, 1.0).acos();
    let phi_hat = wrap_angle(u_est[1].atan2(u_est[0]));

    Ok(TwoParamRecord {
        eta_hat,
        phi_hat,
        clamped,
        degenerate_first_stage: degenerate,
        counts,
    })
}

type Mat3 = [[f64; 3]; 3];

/// Rotation matrix taking the unit vector `from` to the x axis.
fn rotation_to_x(from: [f64; 3]) -> Mat3 {
    let target = [1.0, 0.0, 0.0];
    let axis = vec3::cross(from, target);
    let sin = vec3::norm(axis);
    let cos = vec3::dot(from, target);
    if sin < 1e-12 {
        if cos > 0.0 {
            return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        }
        // Antipodal: rotate by π about z.
        return [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let k = vec3::scale(axis, 1.0 / sin);
    let mut rot = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let eye = if i == j { 1.0 } else { 0.0 };
            let kk = k[i] * k[j];
            let skew = match (i, j) {
                (0, 1) => -k[2],
                (0, 2) => k[1],
                (1, 0) => k[2],
                (1, 2) => -k[0],
                (2, 0) => -k[1],
                (2, 1) => k[0],
                _ => 0.0,
            };
            rot[i][j] = eye * cos + skew * sin + kk * (1.0 - cos);
        }
    }
    rot
}

fn mat3_apply(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        vec3::dot(m[0], v),
        vec3::dot(m[1], v),
        vec3::dot(m[2], v),
    ]
}

fn mat3_apply_transpose(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

/// Rotation-invariant loss `1 - |<ψ_true|ψ_est>|²`.
pub fn fidelity_loss(truth: &PureState, estimate: &PureState) -> f64 {
    assert_eq!(truth.dim(), estimate.dim(), "state dimension mismatch");
    (1.0 - truth.inner(estimate).norm_sqr()).clamp(0.0, 1.0)
}

/// Feasibility of a scaled covariance under the attainable-set bound
/// `trace(I⁻¹ V⁻¹) <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GillMassar {
    pub trace_value: f64,
    pub feasible: bool,
}

/// Evaluate `trace(I⁻¹ V⁻¹)` for a quantum information matrix and a scaled
/// covariance (row-major k×k). Feasible when the trace is at most
/// `1 + 1e-9`.
pub fn gill_massar_feasible(qfi: &InfoMatrix, cov: &[f64]) -> Result<GillMassar> {
    let k = qfi.dim();
    if cov.len() != k * k {
        return Err(Error::DimensionMismatch {
            left: k * k,
            right: cov.len(),
        });
    }
    let scale = cov.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    for i in 0..k {
        for j in (i + 1)..k {
            if (cov[i * k + j] - cov[j * k + i]).abs() > 1e-10 * scale {
                return Err(Error::InvalidInfoMatrix(
                    "covariance is not symmetric".into(),
                ));
            }
        }
    }
    let inv_info = qfi.try_inverse()?;
    let cov_matrix = InfoMatrix::new(InfoKind::Classical, k, cov.to_vec(), false)
        .map_err(|_| Error::InvalidInfoMatrix("covariance is not PSD".into()))?;
    let inv_cov = cov_matrix.try_inverse()?;
    let mut trace_value = 0.0;
    for i in 0..k {
        for j in 0..k {
            trace_value += inv_info[i * k + j] * inv_cov[j * k + i];
        }
    }
    Ok(GillMassar {
        trace_value,
        feasible: trace_value <= 1.0 + GM_FEASIBLE_TOL,
    })
}

/// Which estimator an experiment runs.
#[derive(Debug, Clone)]
pub enum Strategy {
    /// Example model, known colatitude, closed-form two-stage estimator.
    TwoStageScalar { eta: f64, theta_true: f64 },
    /// General scalar-parameter scheme with MLE second stage.
    AdaptiveGeneral {
        model: ParametricModel,
        theta_true: f64,
        first_stage: FirstStageSpec,
    },
    /// Completely unknown pure state, two-parameter scheme.
    TwoParam {
        angles: SphericalAngles,
        scheme: TwoParamScheme,
    },
}

impl Strategy {
    pub fn param_dim(&self) -> usize {
        match self {
            Strategy::TwoParam { .. } => 2,
            _ => 1,
        }
    }

    fn truth(&self) -> Vec<f64> {
        match self {
            Strategy::TwoStageScalar { theta_true, .. } => vec![*theta_true],
            Strategy::AdaptiveGeneral { theta_true, .. } => vec![*theta_true],
            Strategy::TwoParam { angles, .. } => vec![angles.eta(), angles.phi()],
        }
    }

    fn periodic(&self) -> Vec<bool> {
        match self {
            Strategy::TwoStageScalar { .. } => vec![true],
            Strategy::AdaptiveGeneral { model, .. } => model.periodic_mask().to_vec(),
            Strategy::TwoParam { .. } => vec![false, true],
        }
    }

    /// Quantum information matrix at the true parameter.
    fn reference_information(&self) -> Result<InfoMatrix> {
        match self {
            Strategy::TwoStageScalar { eta, .. } => InfoMatrix::new(
                InfoKind::Quantum,
                1,
                vec![eta.sin().powi(2)],
                false,
            ),
            Strategy::AdaptiveGeneral {
                model, theta_true, ..
            } => {
                let i = qfi_scalar(model, &[*theta_true])?;
                InfoMatrix::new(InfoKind::Quantum, 1, vec![i], false)
            }
            Strategy::TwoParam { angles, .. } => InfoMatrix::new(
                InfoKind::Quantum,
                2,
                vec![1.0, 0.0, 0.0, angles.eta().sin().powi(2)],
                false,
            ),
        }
    }
}

/// A strategy plus its copy budget.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub strategy: Strategy,
    pub plan: TwoStagePlan,
}

/// Monte Carlo summary of `R` independent replications.
///
/// Errors are wrapped differences for periodic coordinates; the covariance
/// is scaled by the copy count `n`, so it is directly comparable to the
/// inverse-information reference bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub replications: usize,
    pub copies: u64,
    pub param_dim: usize,
    pub bias: Vec<f64>,
    /// Row-major k×k matrix `n·V̂`.
    pub covariance_scaled: Vec<f64>,
    /// Per-coordinate skewness of `√n · error`.
    pub skewness: Vec<f64>,
    /// Per-coordinate excess kurtosis of `√n · error`.
    pub excess_kurtosis: Vec<f64>,
    pub mean_fidelity_loss: Option<f64>,
    /// Row-major k×k reference bound `I(θ)⁻¹`; empty when not invertible.
    pub reference_bound: Vec<f64>,
    /// `trace(I⁻¹ (n·V̂)⁻¹)` against the attainable-covariance set.
    pub gm_trace: Option<f64>,
    /// Block-resampled Monte Carlo standard error of `gm_trace`.
    pub gm_trace_se: Option<f64>,
    pub clamped_fraction: f64,
    pub degenerate_fraction: f64,
    pub mle_boundary_fraction: f64,
}

struct RepOutcome {
    est: Vec<f64>,
    clamped: bool,
    degenerate: bool,
    boundary: bool,
    fid: Option<f64>,
}

fn run_one<R: Rng>(spec: &ExperimentSpec, rng: &mut R) -> Result<RepOutcome> {
    match &spec.strategy {
        Strategy::TwoStageScalar { eta, theta_true } => {
            let rec = two_stage_theta(*eta, *theta_true, &spec.plan, rng)?;
            let truth = example_state(&SphericalAngles::new(*eta, *theta_true)?);
            let est = example_state(&SphericalAngles::new(*eta, rec.theta_hat)?);
            Ok(RepOutcome {
                est: vec![rec.theta_hat],
                clamped: rec.clamped,
                degenerate: rec.degenerate_first_stage,
                boundary: false,
                fid: Some(fidelity_loss(&truth, &est)),
            })
        }
        Strategy::AdaptiveGeneral {
            model,
            theta_true,
            first_stage,
        } => {
            let rec = adaptive_general(model, *theta_true, &spec.plan, first_stage, rng)?;
            Ok(RepOutcome {
                est: vec![rec.theta_hat],
                clamped: rec.clamped,
                degenerate: rec.degenerate_first_stage,
                boundary: rec.mle_boundary,
                fid: None,
            })
        }
        Strategy::TwoParam { angles, scheme } => {
            let rec = two_param_adaptive(angles, &spec.plan, *scheme, rng)?;
            let truth = example_state(angles);
            let est = example_state(&SphericalAngles::new(rec.eta_hat, rec.phi_hat)?);
            Ok(RepOutcome {
                est: vec![rec.eta_hat, rec.phi_hat],
                clamped: rec.clamped,
                degenerate: rec.degenerate_first_stage,
                boundary: false,
                fid: Some(fidelity_loss(&truth, &est)),
            })
        }
    }
}

/// Run `R` independent replications on streams `1..=R` and summarize.
pub fn replicate(
    spec: &ExperimentSpec,
    replications: usize,
    master_seed: u64,
) -> Result<ExperimentSummary> {
    replicate_streamed(spec, replications, master_seed, 0)
}

/// As [`replicate`], but with stream indices offset by `stream_base`
/// (used by parameter sweeps to keep per-point streams disjoint).
pub fn replicate_streamed(
    spec: &ExperimentSpec,
    replications: usize,
    master_seed: u64,
    stream_base: u64,
) -> Result<ExperimentSummary> {
    if replications < 2 {
        return Err(Error::InvalidPlan(format!(
            "need at least 2 replications, got {replications}"
        )));
    }
    let results: Vec<Result<RepOutcome>> = (1..=replications as u64)
        .into_par_iter()
        .map(|idx| {
            let mut rng = RngStream::new(master_seed, stream_base + idx).rng();
            run_one(spec, &mut rng)
        })
        .collect();
    let mut outcomes = Vec::with_capacity(replications);
    for r in results {
        outcomes.push(r?);
    }
    summarize(spec, &outcomes)
}

fn summarize(spec: &ExperimentSpec, outcomes: &[RepOutcome]) -> Result<ExperimentSummary> {
    let k = spec.strategy.param_dim();
    let truth = spec.strategy.truth();
    let periodic = spec.strategy.periodic();
    let reps = outcomes.len();
    let n = spec.plan.n();

    // Per-coordinate wrapped errors, replication-major ordering fixed by
    // the stream index.
    let mut errors: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); k];
    for out in outcomes {
        for j in 0..k {
            let raw = out.est[j] - truth[j];
            errors[j].push(if periodic[j] { wrap_error(raw) } else { raw });
        }
    }

    let bias: Vec<f64> = errors.iter().map(|e| pairwise_mean(e)).collect();

    let mut covariance_scaled = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let products: Vec<f64> = (0..reps)
                .map(|r| (errors[i][r] - bias[i]) * (errors[j][r] - bias[j]))
                .collect();
            let cov = pairwise_sum(&products) / (reps - 1) as f64;
            covariance_scaled[i * k + j] = n as f64 * cov;
            covariance_scaled[j * k + i] = n as f64 * cov;
        }
    }

    let mut skewness = Vec::with_capacity(k);
    let mut excess_kurtosis = Vec::with_capacity(k);
    for j in 0..k {
        let centered: Vec<f64> = errors[j].iter().map(|e| e - bias[j]).collect();
        let m2 = pairwise_mean(&centered.iter().map(|e| e * e).collect::<Vec<_>>());
        if m2 <= 1e-300 {
            skewness.push(0.0);
            excess_kurtosis.push(0.0);
            continue;
        }
        let m3 = pairwise_mean(&centered.iter().map(|e| e * e * e).collect::<Vec<_>>());
        let m4 = pairwise_mean(&centered.iter().map(|e| e * e * e * e).collect::<Vec<_>>());
        skewness.push(m3 / m2.powf(1.5));
        excess_kurtosis.push(m4 / (m2 * m2) - 3.0);
    }

    let fids: Vec<f64> = outcomes.iter().filter_map(|o| o.fid).collect();
    let mean_fidelity_loss = if fids.len() == reps {
        Some(pairwise_mean(&fids))
    } else {
        None
    };

    let info = spec.strategy.reference_information()?;
    let reference_bound = info.try_inverse().unwrap_or_default();

    let gm = gill_massar_feasible(&info, &covariance_scaled).ok();
    let gm_trace = gm.map(|g| g.trace_value);
    let gm_trace_se = block_standard_error(spec, &errors, &info, n, reps);

    let frac = |pred: fn(&RepOutcome) -> bool| {
        outcomes.iter().filter(|o| pred(o)).count() as f64 / reps as f64
    };

    Ok(ExperimentSummary {
        replications: reps,
        copies: n,
        param_dim: k,
        bias,
        covariance_scaled,
        skewness,
        excess_kurtosis,
        mean_fidelity_loss,
        reference_bound,
        gm_trace,
        gm_trace_se,
        clamped_fraction: frac(|o| o.clamped),
        degenerate_fraction: frac(|o| o.degenerate),
        mle_boundary_fraction: frac(|o| o.boundary),
    })
}

/// Standard error of the trace statistic from 10 equal replication blocks.
fn block_standard_error(
    spec: &ExperimentSpec,
    errors: &[Vec<f64>],
    info: &InfoMatrix,
    n: u64,
    reps: usize,
) -> Option<f64> {
    const BLOCKS: usize = 10;
    if reps < BLOCKS * 10 {
        return None;
    }
    let k = spec.strategy.param_dim();
    let block_len = reps / BLOCKS;
    let mut traces = Vec::with_capacity(BLOCKS);
    for b in 0..BLOCKS {
        let lo = b * block_len;
        let hi = lo + block_len;
        let means: Vec<f64> = (0..k)
            .map(|j| pairwise_mean(&errors[j][lo..hi]))
            .collect();
        let mut cov = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let products: Vec<f64> = (lo..hi)
                    .map(|r| (errors[i][r] - means[i]) * (errors[j][r] - means[j]))
                    .collect();
                let c = pairwise_sum(&products) / (block_len - 1) as f64 * n as f64;
                cov[i * k + j] = c;
                cov[j * k + i] = c;
            }
        }
        match gill_massar_feasible(info, &cov) {
            Ok(g) => traces.push(g.trace_value),
            Err(_) => return None,
        }
    }
    let mean = pairwise_mean(&traces);
    let var = pairwise_sum(
        &traces
            .iter()
            .map(|t| (t - mean) * (t - mean))
            .collect::<Vec<_>>(),
    ) / (BLOCKS - 1) as f64;
    Some((var / BLOCKS as f64).sqrt())
}
