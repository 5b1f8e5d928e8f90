//! Quantum score (SLD) computation, quantum and classical Fisher
//! information, the information inequality chain, and the pointwise
//! equality-condition checkers.
//!
//! The central objects: the symmetric logarithmic derivative λ solving
//! `ρ̇ = (ρλ + λρ)/2`, the quantum information `I = trace ρλ²`, and the
//! classical information `i(θ; M)` of a measurement's outcome law. For every
//! measurement `i <= I`; the per-outcome equality conditions are checked by
//! [`attainability_check`].

use crate::error::{Error, Result};
use crate::model::{outcome_distribution, DensityOperator, ParametricModel, Povm};
use crate::operators::{trace_product, HermitianOperator, Matrix};
use crate::vec3;

/// Eigenvalue-pair sums at or below this are treated as the kernel of ρ.
pub const SLD_KERNEL_EPS: f64 = 1e-10;

/// Derivative weight allowed on the kernel before the SLD is declared
/// nonexistent in that direction.
const SLD_KERNEL_WEIGHT_TOL: f64 = 1e-8;

/// |∂p| above this on a zero-probability outcome makes the Fisher
/// information essentially singular.
const ESSENTIAL_SINGULARITY_TOL: f64 = 1e-8;

const PROPORTIONALITY_TOL: f64 = 1e-8;
const COND2_TOL: f64 = 1e-9;
const PLANE_ANGLE_TOL: f64 = 1e-8;

/// One quantum score with its solver diagnostics.
#[derive(Debug, Clone)]
pub struct SldSolution {
    /// The score λ.
    pub lambda: HermitianOperator,
    /// `‖ρλ + λρ - 2ρ̇‖_F`.
    pub residual: f64,
    /// `trace ρλ` (zero for a valid score, up to round-off).
    pub score_trace: f64,
}

/// Quantum scores for every parameter of a model, with diagnostics.
#[derive(Debug, Clone)]
pub struct SldResult {
    pub lambdas: Vec<HermitianOperator>,
    pub residuals: Vec<f64>,
    pub score_traces: Vec<f64>,
}

/// Solve `ρ̇ = (ρλ + λρ)/2` for the self-adjoint score λ.
///
/// In the eigenbasis of ρ with eigenvalues `p_i`, the solution is
/// `λ_ij = 2 ρ̇_ij / (p_i + p_j)` on the support; entries on the kernel are
/// set to zero (the minimal completion). If ρ̇ has weight above 1e-8 on a
/// kernel entry the score does not exist in that direction.
pub fn sld_solve(rho: &DensityOperator, rho_dot: &HermitianOperator) -> Result<SldSolution> {
    if rho.dim() != rho_dot.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: rho_dot.dim(),
        });
    }
    let d = rho.dim();
    let eig = rho.op().eig();
    let basis = eig.vectors();
    // ρ̇ in the eigenbasis of ρ.
    let dot_eig = basis.adjoint().matmul(rho_dot.matrix()).matmul(basis);

    let mut lambda_eig = Matrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let denom = eig.eigenvalues()[i] + eig.eigenvalues()[j];
            let entry = dot_eig.get(i, j);
            if denom > SLD_KERNEL_EPS {
                lambda_eig.set(i, j, entry * (2.0 / denom));
            } else if entry.norm() > SLD_KERNEL_WEIGHT_TOL {
                return Err(Error::IllPosedSld {
                    weight: entry.norm(),
                });
            }
        }
    }

    let lambda = HermitianOperator::new(basis.matmul(&lambda_eig).matmul(&basis.adjoint()))?;

    let sandwich = rho
        .op()
        .matrix()
        .matmul(lambda.matrix())
        .add(&lambda.matrix().matmul(rho.op().matrix()));
    let residual = sandwich
        .sub(&rho_dot.matrix().scale_re(2.0))
        .frobenius_norm();
    let score_trace = trace_product(rho.op().matrix(), lambda.matrix())?.re;

    Ok(SldSolution {
        lambda,
        residual,
        score_trace,
    })
}

/// Scores for all `k` parameters of a model at `theta`.
pub fn sld_solve_all(model: &ParametricModel, theta: &[f64]) -> Result<SldResult> {
    model.check_theta(theta)?;
    let rho = model.state(theta);
    let mut lambdas = Vec::with_capacity(model.param_dim());
    let mut residuals = Vec::with_capacity(model.param_dim());
    let mut score_traces = Vec::with_capacity(model.param_dim());
    for i in 0..model.param_dim() {
        let rho_dot = model.derivative(theta, i)?;
        let sol = sld_solve(&rho, &rho_dot)?;
        lambdas.push(sol.lambda);
        residuals.push(sol.residual);
        score_traces.push(sol.score_trace);
    }
    Ok(SldResult {
        lambdas,
        residuals,
        score_traces,
    })
}

/// Which information functional an [`InfoMatrix`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfoKind {
    Quantum,
    Classical,
}

/// Real symmetric k×k information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix {
    kind: InfoKind,
    dim: usize,
    entries: Vec<f64>,
    singular: bool,
}

impl InfoMatrix {
    pub fn new(kind: InfoKind, dim: usize, entries: Vec<f64>, singular: bool) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::InvalidInfoMatrix(format!(
                "expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let asym = (entries[i * dim + j] - entries[j * dim + i]).abs();
                if asym > 1e-10 {
                    return Err(Error::InvalidInfoMatrix(format!(
                        "asymmetry {asym:e} at ({i}, {j})"
                    )));
                }
            }
        }
        let m = InfoMatrix {
            kind,
            dim,
            entries,
            singular,
        };
        if !singular {
            let min = m
                .eigenvalues()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if min < -1e-9 {
                return Err(Error::InvalidInfoMatrix(format!(
                    "negative eigenvalue {min:e}"
                )));
            }
        }
        Ok(m)
    }

    pub fn identity(kind: InfoKind, dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        InfoMatrix {
            kind,
            dim,
            entries,
            singular: false,
        }
    }

    pub fn kind(&self) -> InfoKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Essential-singularity flag: some outcome had `p <= eps` with `|∂p|`
    /// bounded away from zero, so the entries exclude a diverging term.
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// The single entry of a 1×1 matrix.
    pub fn scalar(&self) -> f64 {
        assert_eq!(self.dim, 1, "scalar() needs a 1x1 matrix");
        self.entries[0]
    }

    /// Eigenvalues, descending (embeds into a complex Hermitian solve).
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.as_hermitian()?.eig().eigenvalues().to_vec())
    }

    fn as_hermitian(&self) -> Result<HermitianOperator> {
        let mut m = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.set(i, j, crate::operators::Complex::new(self.get(i, j), 0.0));
            }
        }
        HermitianOperator::new(m)
    }

    /// Inverse via the spectral decomposition. Errors when the condition
    /// number exceeds 1e12.
    pub fn try_inverse(&self) -> Result<Vec<f64>> {
        let herm = self.as_hermitian()?;
        let eig = herm.eig();
        let vals = eig.eigenvalues();
        let max = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let min = vals.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
        if min <= 0.0 || max / min > 1e12 {
            return Err(Error::NearSingularCovariance {
                cond: if min > 0.0 { max / min } else { f64::INFINITY },
            });
        }
        let weights: Vec<f64> = vals.iter().map(|v| 1.0 / v).collect();
        let inv = eig.recombine(&weights);
        let mut out = vec![0.0; self.dim * self.dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i * self.dim + j] = inv.get(i, j).re;
            }
        }
        Ok(out)
    }
}

/// `I(θ)` for a scalar-parameter model: `trace ρλ²`.
pub fn qfi_scalar(model: &ParametricModel, theta: &[f64]) -> Result<f64> {
    model.check_theta(theta)?;
    if model.param_dim() != 1 {
        return Err(Error::BadParameterLength {
            expected: 1,
            got: model.param_dim(),
        });
    }
    let rho = model.state(theta);
    let rho_dot = model.derivative(theta, 0)?;
    qfi_scalar_parts(&rho, &rho_dot)
}

/// Scalar quantum information from explicit `(ρ, ρ̇)`.
pub fn qfi_scalar_parts(rho: &DensityOperator, rho_dot: &HermitianOperator) -> Result<f64> {
    let sol = sld_solve(rho, rho_dot)?;
    let sq = sol.lambda.matrix().matmul(sol.lambda.matrix());
    Ok(trace_product(rho.op().matrix(), &sq)?.re.max(0.0))
}

/// Quantum information matrix `I_ij = trace ρ(λ_i λ_j + λ_j λ_i)/2`.
pub fn qfi_matrix(model: &ParametricModel, theta: &[f64]) -> Result<InfoMatrix> {
    model.check_theta(theta)?;
    let rho = model.state(theta);
    let rho_dots: Vec<HermitianOperator> = (0..model.param_dim())
        .map(|i| model.derivative(theta, i))
        .collect::<Result<_>>()?;
    qfi_matrix_parts(&rho, &rho_dots)
}

/// Quantum information matrix from explicit `(ρ, ∂ρ/∂θ_i)`.
pub fn qfi_matrix_parts(
    rho: &DensityOperator,
    rho_dots: &[HermitianOperator],
) -> Result<InfoMatrix> {
    let k = rho_dots.len();
    let lambdas: Vec<HermitianOperator> = rho_dots
        .iter()
        .map(|dot| sld_solve(rho, dot).map(|s| s.lambda))
        .collect::<Result<_>>()?;
    let mut entries = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let prod = lambdas[i]
                .matrix()
                .matmul(lambdas[j].matrix())
                .add(&lambdas[j].matrix().matmul(lambdas[i].matrix()));
            let val = 0.5 * trace_product(rho.op().matrix(), &prod)?.re;
            entries[i * k + j] = val;
            entries[j * k + i] = val;
        }
    }
    InfoMatrix::new(InfoKind::Quantum, k, entries, false)
}

/// Classical Fisher information matrix of a measurement's outcome law,
/// `i_ij = Σ_{x in X_+} (∂_i p)(∂_j p)/p`.
///
/// A singular result (some outcome with `p <= eps` but `|∂p| > 1e-8`) is a
/// first-class value, not an error: the entries then hold the partial sum
/// over the support and the flag is set.
pub fn fisher_matrix(model: &ParametricModel, povm: &Povm, theta: &[f64]) -> Result<InfoMatrix> {
    model.check_theta(theta)?;
    let rho = model.state(theta);
    let rho_dots: Vec<HermitianOperator> = (0..model.param_dim())
        .map(|i| model.derivative(theta, i))
        .collect::<Result<_>>()?;
    fisher_matrix_parts(&rho, &rho_dots, povm)
}

/// Classical Fisher matrix from explicit `(ρ, ∂ρ/∂θ_i)`.
pub fn fisher_matrix_parts(
    rho: &DensityOperator,
    rho_dots: &[HermitianOperator],
    povm: &Povm,
) -> Result<InfoMatrix> {
    let k = rho_dots.len();
    let dist = outcome_distribution(rho, povm)?;
    let mut entries = vec![0.0; k * k];
    let mut singular = false;
    for (x, el) in povm.iter().enumerate() {
        let p = dist.probs()[x];
        let grads: Vec<f64> = rho_dots
            .iter()
            .map(|dot| trace_product(dot.matrix(), el.operator.matrix()).map(|z| z.re))
            .collect::<Result<_>>()?;
        if !dist.support()[x] {
            if grads.iter().any(|g| g.abs() > ESSENTIAL_SINGULARITY_TOL) {
                singular = true;
            }
            continue;
        }
        for i in 0..k {
            for j in 0..k {
                entries[i * k + j] += grads[i] * grads[j] / p;
            }
        }
    }
    InfoMatrix::new(InfoKind::Classical, k, entries, singular)
}

/// The three-step information inequality evaluated outcome by outcome:
/// `fisher <= step1 <= step2 <= quantum`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    /// Classical Fisher information `Σ (Re trace ρλm)² / p`.
    pub fisher: f64,
    /// `Σ |trace ρλm|² / p`.
    pub step1: f64,
    /// `trace M(X_+) λρλ`.
    pub step2: f64,
    /// Quantum information `trace ρλ²`.
    pub quantum: f64,
    /// Successive gaps `(step1-fisher, step2-step1, quantum-step2)`.
    pub slack: [f64; 3],
}

impl ChainReport {
    /// Total gap `quantum - fisher`.
    pub fn total_slack(&self) -> f64 {
        self.quantum - self.fisher
    }
}

/// Evaluate the inequality chain for a scalar-parameter model.
///
/// An essentially singular Fisher information is propagated as an error.
pub fn bc_chain(model: &ParametricModel, povm: &Povm, theta: &[f64]) -> Result<ChainReport> {
    model.check_theta(theta)?;
    if model.param_dim() != 1 {
        return Err(Error::BadParameterLength {
            expected: 1,
            got: model.param_dim(),
        });
    }
    let rho = model.state(theta);
    let rho_dot = model.derivative(theta, 0)?;
    bc_chain_parts(&rho, &rho_dot, povm)
}

/// Inequality chain from explicit `(ρ, ρ̇)`.
pub fn bc_chain_parts(
    rho: &DensityOperator,
    rho_dot: &HermitianOperator,
    povm: &Povm,
) -> Result<ChainReport> {
    let fisher_m = fisher_matrix_parts(rho, std::slice::from_ref(rho_dot), povm)?;
    if fisher_m.is_singular() {
        return Err(Error::SingularFisher);
    }
    let sol = sld_solve(rho, rho_dot)?;
    let lambda = &sol.lambda;
    let dist = outcome_distribution(rho, povm)?;

    let rho_lambda = rho.op().matrix().matmul(lambda.matrix());
    let lambda_rho_lambda = lambda
        .matrix()
        .matmul(rho.op().matrix())
        .matmul(lambda.matrix());

    let mut fisher = 0.0;
    let mut step1 = 0.0;
    let mut step2 = 0.0;
    for (x, el) in povm.iter().enumerate() {
        if !dist.support()[x] {
            continue;
        }
        let p = dist.probs()[x];
        let z = trace_product(&rho_lambda, el.operator.matrix())?;
        fisher += z.re * z.re / p;
        step1 += z.norm_sqr() / p;
        step2 += trace_product(el.operator.matrix(), &lambda_rho_lambda)?.re;
    }
    let lambda_sq = lambda.matrix().matmul(lambda.matrix());
    let quantum = trace_product(rho.op().matrix(), &lambda_sq)?.re;

    Ok(ChainReport {
        fisher,
        step1,
        step2,
        quantum,
        slack: [step1 - fisher, step2 - step1, quantum - step2],
    })
}

/// Per-outcome proportionality diagnostics for the equality conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeAttainability {
    pub label: String,
    pub in_support: bool,
    /// `m^{1/2} λ ρ^{1/2}` proportional (over the reals) to `m^{1/2} ρ^{1/2}`.
    pub cond1_holds: bool,
    /// Normalized best-fit residual of the proportionality test; zero for
    /// outcomes outside the support, where the condition is vacuous.
    pub proportionality_residual: f64,
}

/// Result of the pointwise equality-condition check.
#[derive(Debug, Clone, PartialEq)]
pub struct AttainabilityReport {
    pub outcomes: Vec<OutcomeAttainability>,
    /// `trace M(X_0) λρλ`; must vanish for equality.
    pub cond2_value: f64,
    pub cond2_holds: bool,
    /// Both conditions hold: the measurement extracts the full quantum
    /// information at this parameter value.
    pub attains_here: bool,
}

/// Check the equality conditions of the information inequality at `theta`.
pub fn attainability_check(
    model: &ParametricModel,
    povm: &Povm,
    theta: &[f64],
) -> Result<AttainabilityReport> {
    model.check_theta(theta)?;
    if model.param_dim() != 1 {
        return Err(Error::BadParameterLength {
            expected: 1,
            got: model.param_dim(),
        });
    }
    let rho = model.state(theta);
    let rho_dot = model.derivative(theta, 0)?;
    attainability_check_parts(&rho, &rho_dot, povm)
}

/// Equality-condition check from explicit `(ρ, ρ̇)`.
pub fn attainability_check_parts(
    rho: &DensityOperator,
    rho_dot: &HermitianOperator,
    povm: &Povm,
) -> Result<AttainabilityReport> {
    let sol = sld_solve(rho, rho_dot)?;
    let lambda = &sol.lambda;
    let dist = outcome_distribution(rho, povm)?;
    let rho_sqrt = rho.op().psd_sqrt()?;
    let lambda_rho_sqrt = lambda.matrix().matmul(rho_sqrt.matrix());

    let mut outcomes = Vec::with_capacity(povm.len());
    let mut null_sum: Option<Matrix> = None;

    for (x, el) in povm.iter().enumerate() {
        if !dist.support()[x] {
            null_sum = Some(match null_sum {
                Some(acc) => acc.add(el.operator.matrix()),
                None => el.operator.matrix().clone(),
            });
            outcomes.push(OutcomeAttainability {
                label: el.label.clone(),
                in_support: false,
                cond1_holds: true,
                proportionality_residual: 0.0,
            });
            continue;
        }
        let m_sqrt = el.operator.psd_sqrt()?;
        let a = m_sqrt.matrix().matmul(rho_sqrt.matrix());
        let b = m_sqrt.matrix().matmul(&lambda_rho_sqrt);
        let (cond1, residual) = real_proportionality(&a, &b);
        outcomes.push(OutcomeAttainability {
            label: el.label.clone(),
            in_support: true,
            cond1_holds: cond1,
            proportionality_residual: residual,
        });
    }

    let cond2_value = match null_sum {
        Some(m0) => {
            let lrl = lambda
                .matrix()
                .matmul(rho.op().matrix())
                .matmul(lambda.matrix());
            trace_product(&m0, &lrl)?.re
        }
        None => 0.0,
    };
    let cond2_holds = cond2_value.abs() <= COND2_TOL;
    let attains_here = cond2_holds
        && outcomes
            .iter()
            .filter(|o| o.in_support)
            .all(|o| o.cond1_holds);

    Ok(AttainabilityReport {
        outcomes,
        cond2_value,
        cond2_holds,
        attains_here,
    })
}

/// Two-sided test for `A ∝_R B` (i.e. `A = rB` or `B = rA`, real `r`),
/// flattening the matrices to vectors. Returns the verdict and the
/// normalized residual.
fn real_proportionality(a: &Matrix, b: &Matrix) -> (bool, f64) {
    let norm_a = a.frobenius_norm();
    let norm_b = b.frobenius_norm();
    let scale = norm_a.max(norm_b);
    if scale == 0.0 {
        return (true, 0.0);
    }
    if norm_b <= PROPORTIONALITY_TOL * scale || norm_a <= PROPORTIONALITY_TOL * scale {
        // One side (numerically) vanishes: B = 0·A or A = 0·B.
        return (true, 0.0);
    }
    let z = a.inner(b);
    let imaginary_ok = z.im.abs() <= PROPORTIONALITY_TOL * norm_a * norm_b;

    // B ≈ r·A with r = Re<A,B>/<A,A>.
    let r_ba = z.re / (norm_a * norm_a);
    let res_ba = b.sub(&a.scale_re(r_ba)).frobenius_norm() / scale;
    // A ≈ r·B with r = Re<B,A>/<B,B>.
    let r_ab = z.re / (norm_b * norm_b);
    let res_ab = a.sub(&b.scale_re(r_ab)).frobenius_norm() / scale;

    let residual = res_ba.min(res_ab);
    (residual <= PROPORTIONALITY_TOL && imaginary_ok, residual)
}

/// Does the measurement direction `xi` lie in the plane spanned by the spin
/// direction `u` and its velocity `u_dot`? This is the Bloch-sphere form of
/// the per-outcome equality condition for pure spin-half models.
pub fn spinhalf_plane_condition(u: [f64; 3], u_dot: [f64; 3], xi: [f64; 3]) -> Result<bool> {
    let speed = vec3::norm(u_dot);
    if speed < 1e-12 {
        return Err(Error::DegenerateScore);
    }
    let u = vec3::unit(u, 1e-12).ok_or(Error::DegenerateScore)?;
    let xi = vec3::unit(xi, 1e-12).ok_or(Error::DegenerateScore)?;
    let normal = vec3::cross(u, vec3::scale(u_dot, 1.0 / speed));
    match vec3::unit(normal, 1e-12) {
        // Out-of-plane component of xi, as the sine of an angle.
        Some(n) => Ok(vec3::dot(xi, n).abs() <= PLANE_ANGLE_TOL),
        // u_dot parallel to u: the span degenerates to the line through u.
        None => Ok(vec3::norm(vec3::cross(xi, u)) <= PLANE_ANGLE_TOL),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{example_model, full_sphere_model, score_directions, SphericalAngles};
    use crate::model::bloch_to_density;
    use crate::operators::{pauli_x, spin_operator, Complex};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn diag_density(p0: f64, p1: f64) -> DensityOperator {
        let op = HermitianOperator::from_rows(&[
            vec![Complex::new(p0, 0.0), Complex::new(0.0, 0.0)],
            vec![Complex::new(0.0, 0.0), Complex::new(p1, 0.0)],
        ])
        .unwrap();
        DensityOperator::new(op).unwrap()
    }

    #[test]
    fn sld_zero_derivative_gives_zero_score() {
        let rho = diag_density(0.75, 0.25);
        let sol = sld_solve(&rho, &HermitianOperator::zeros(2).unwrap()).unwrap();
        assert!(sol.lambda.frobenius_norm() <= 1e-15);
        assert!(sol.residual <= 1e-15);
    }

    #[test]
    fn sld_diagonal_state_off_diagonal_derivative() {
        // ρ = diag(3/4, 1/4), ρ̇ = σ_x/2  =>  λ = σ_x.
        let rho = diag_density(0.75, 0.25);
        let sol = sld_solve(&rho, &pauli_x().scale(0.5)).unwrap();
        assert!(sol.lambda.sub(&pauli_x()).unwrap().frobenius_norm() <= 1e-12);
        assert!(sol.residual <= 1e-12);
        assert!(sol.score_trace.abs() <= 1e-12);
    }

    #[test]
    fn sld_example_model_is_rotated_spin() {
        let eta = 1.1;
        let model = example_model(eta).unwrap();
        for &theta in &[0.4, 2.0, 5.1] {
            let rho = model.state(&[theta]);
            let rho_dot = model.derivative(&[theta], 0).unwrap();
            let sol = sld_solve(&rho, &rho_dot).unwrap();
            // λ = sin η · σ along (π/2, θ + π/2).
            let dir = [-theta.sin(), theta.cos(), 0.0];
            let expected = spin_operator(crate::vec3::scale(dir, eta.sin()));
            assert!(sol.lambda.sub(&expected).unwrap().frobenius_norm() <= 1e-9);
            assert!(sol.residual <= 1e-9);
            assert!(sol.score_trace.abs() <= 1e-9);
        }
    }

    #[test]
    fn sld_ill_posed_when_derivative_lives_on_kernel() {
        let rho = diag_density(1.0, 0.0);
        // Derivative pushing weight out of the support: λ does not exist.
        let rho_dot = HermitianOperator::from_rows(&[
            vec![Complex::new(0.5, 0.0), Complex::new(0.0, 0.0)],
            vec![Complex::new(0.0, 0.0), Complex::new(-0.5, 0.0)],
        ])
        .unwrap();
        assert!(matches!(
            sld_solve(&rho, &rho_dot),
            Err(Error::IllPosedSld { .. })
        ));
    }

    #[test]
    fn qfi_scalar_cases() {
        let constant = ParametricModel::new(1, vec![false], |_| {
            bloch_to_density([0.2, 0.0, 0.3]).unwrap()
        });
        assert!(qfi_scalar(&constant, &[0.5]).unwrap() <= 1e-12);

        let model = example_model(FRAC_PI_4).unwrap();
        for &theta in &[0.0, 1.0, 3.0] {
            assert_abs_diff_eq!(
                qfi_scalar(&model, &[theta]).unwrap(),
                FRAC_PI_4.sin().powi(2),
                epsilon = 1e-10
            );
        }

        let rho = diag_density(0.75, 0.25);
        assert_abs_diff_eq!(
            qfi_scalar_parts(&rho, &pauli_x().scale(0.5)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn qfi_matrix_full_sphere() {
        let model = full_sphere_model();
        let at_special = qfi_matrix(&model, &[FRAC_PI_2, 0.0]).unwrap();
        assert_abs_diff_eq!(at_special.get(0, 0), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(at_special.get(1, 1), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(at_special.get(0, 1), 0.0, epsilon = 1e-10);

        for (eta, phi) in [(0.7, 0.2), (1.9, 4.0), (FRAC_PI_4, FRAC_PI_2)] {
            let m = qfi_matrix(&model, &[eta, phi]).unwrap();
            assert_abs_diff_eq!(m.get(0, 0), 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(m.get(1, 1), eta.sin().powi(2), epsilon = 1e-9);
            assert_abs_diff_eq!(m.get(0, 1), 0.0, epsilon = 1e-9);

            // Anticommutator oracle from the closed-form scores.
            let dirs = score_directions(&SphericalAngles::new(eta, phi).unwrap()).unwrap();
            let lam_eta = spin_operator(dirs.v_eta);
            let lam_phi = spin_operator(crate::vec3::scale(dirs.v_phi, dirs.r_phi));
            let rho = model.state(&[eta, phi]);
            let cross = lam_eta
                .matrix()
                .matmul(lam_phi.matrix())
                .add(&lam_phi.matrix().matmul(lam_eta.matrix()));
            let oracle_offdiag = 0.5 * trace_product(rho.op().matrix(), &cross).unwrap().re;
            assert_abs_diff_eq!(m.get(0, 1), oracle_offdiag, epsilon = 1e-9);
        }
    }

    #[test]
    fn sld_solve_all_collects_per_parameter_diagnostics() {
        let model = full_sphere_model();
        let result = sld_solve_all(&model, &[1.1, 0.4]).unwrap();
        assert_eq!(result.lambdas.len(), 2);
        assert_eq!(result.residuals.len(), 2);
        assert_eq!(result.score_traces.len(), 2);
        for i in 0..2 {
            assert!(result.residuals[i] <= 1e-9);
            assert!(result.score_traces[i].abs() <= 1e-9);
        }
        // λ_φ has norm sin(η)·sqrt(2) under the Frobenius norm.
        assert_abs_diff_eq!(
            result.lambdas[1].frobenius_norm(),
            1.1f64.sin() * 2.0f64.sqrt(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn qfi_matrix_scalar_consistency() {
        let model = example_model(0.8).unwrap();
        let m = qfi_matrix(&model, &[1.3]).unwrap();
        assert_eq!(m.dim(), 1);
        assert_abs_diff_eq!(
            m.scalar(),
            qfi_scalar(&model, &[1.3]).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn fisher_equals_quantum_on_great_circle() {
        let model = example_model(FRAC_PI_2).unwrap();
        let povm = Povm::pauli_x_projectors();
        for &theta in &[0.5, 1.7, 4.4] {
            let f = fisher_matrix(&model, &povm, &[theta]).unwrap();
            assert!(!f.is_singular());
            assert_abs_diff_eq!(f.scalar(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn fisher_of_yz_mixture_is_half_identity() {
        let model = full_sphere_model();
        let povm = Povm::yz_mix();
        let f = fisher_matrix(&model, &povm, &[FRAC_PI_2, 0.0]).unwrap();
        assert!(!f.is_singular());
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 0.5 } else { 0.0 };
                assert_abs_diff_eq!(f.get(i, j), expected, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn fisher_of_trivial_povm_is_zero() {
        let model = example_model(1.0).unwrap();
        let povm = Povm::trivial(2).unwrap();
        let f = fisher_matrix(&model, &povm, &[2.2]).unwrap();
        assert_abs_diff_eq!(f.scalar(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fisher_limits_differ_near_the_degenerate_point() {
        // σ_x measurement around (π/2, 0): the information matrix converges
        // to diag(1,0) along the η circle and diag(0,1) along the φ circle.
        let model = full_sphere_model();
        let povm = Povm::pauli_x_projectors();
        let eps = 1e-4;

        let along_eta = fisher_matrix(&model, &povm, &[FRAC_PI_2 + eps, 0.0]).unwrap();
        assert_abs_diff_eq!(along_eta.get(0, 0), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(along_eta.get(1, 1), 0.0, epsilon = 1e-6);

        let along_phi = fisher_matrix(&model, &povm, &[FRAC_PI_2, eps]).unwrap();
        assert_abs_diff_eq!(along_phi.get(0, 0), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(along_phi.get(1, 1), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn chain_attains_on_great_circle() {
        let model = example_model(FRAC_PI_2).unwrap();
        let povm = Povm::pauli_x_projectors();
        let report = bc_chain(&model, &povm, &[1.234]).unwrap();
        for v in [report.fisher, report.step1, report.step2, report.quantum] {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9);
        }
        assert!(report.total_slack().abs() <= 1e-9);
    }

    #[test]
    fn chain_trivial_povm_concentrates_slack_in_the_middle() {
        let eta = 0.9;
        let model = example_model(eta).unwrap();
        let povm = Povm::trivial(2).unwrap();
        let report = bc_chain(&model, &povm, &[0.7]).unwrap();
        assert_abs_diff_eq!(report.fisher, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.step1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.quantum, eta.sin().powi(2), epsilon = 1e-10);
        assert_abs_diff_eq!(report.slack[1], eta.sin().powi(2), epsilon = 1e-10);
        assert_abs_diff_eq!(report.slack[2], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn chain_closed_form_binomial_fisher() {
        // σ_x on the example curve: i(θ) = sin²η sin²θ / (1 - sin²η cos²θ).
        let eta = FRAC_PI_4;
        let model = example_model(eta).unwrap();
        let povm = Povm::pauli_x_projectors();
        let s2 = eta.sin().powi(2);

        let at_half_pi = bc_chain(&model, &povm, &[FRAC_PI_2]).unwrap();
        assert_abs_diff_eq!(at_half_pi.fisher, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(at_half_pi.quantum, 0.5, epsilon = 1e-9);

        let at_quarter_pi = bc_chain(&model, &povm, &[FRAC_PI_4]).unwrap();
        let expected = s2 * FRAC_PI_4.sin().powi(2) / (1.0 - s2 * FRAC_PI_4.cos().powi(2));
        assert_abs_diff_eq!(at_quarter_pi.fisher, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(at_quarter_pi.fisher, 1.0 / 3.0, epsilon = 1e-9);
        assert!(at_quarter_pi.fisher < at_quarter_pi.quantum);

        // Finite-difference oracle on the binomial log-likelihood.
        let h = 1e-5;
        let theta = FRAC_PI_4;
        let p = |t: f64| 0.5 * (eta.sin() * t.cos() + 1.0);
        let dp = (p(theta + h) - p(theta - h)) / (2.0 * h);
        let oracle = dp * dp / (p(theta) * (1.0 - p(theta)));
        assert_abs_diff_eq!(at_quarter_pi.fisher, oracle, epsilon = 1e-6);
    }

    #[test]
    fn attainability_for_score_eigenprojectors() {
        let eta = 0.8;
        let model = example_model(eta).unwrap();
        let theta = [1.9];
        let rho = model.state(&theta);
        let rho_dot = model.derivative(&theta, 0).unwrap();
        let lambda = sld_solve(&rho, &rho_dot).unwrap().lambda;
        let povm = Povm::eigenprojectors(&lambda, 1e-8).unwrap();
        let report = attainability_check(&model, &povm, &theta).unwrap();
        assert!(report.attains_here);
        assert!(report.cond2_holds);
    }

    #[test]
    fn attainability_fails_out_of_plane() {
        let model = example_model(FRAC_PI_4).unwrap();
        let povm = Povm::pauli_z_projectors();
        let report = attainability_check(&model, &povm, &[0.6]).unwrap();
        assert!(!report.attains_here);
        assert!(report.outcomes.iter().any(|o| !o.cond1_holds));
        // Cross-check: the chain must show strictly positive slack.
        let chain = bc_chain(&model, &povm, &[0.6]).unwrap();
        assert!(chain.total_slack() > 1e-8);
    }

    #[test]
    fn attainability_fails_for_full_rank_element() {
        let model = example_model(FRAC_PI_2).unwrap();
        let povm = Povm::trivial(2).unwrap();
        let report = attainability_check(&model, &povm, &[0.3]).unwrap();
        assert!(!report.attains_here);
        assert!(!report.outcomes[0].cond1_holds);
    }

    #[test]
    fn plane_condition_basic_cases() {
        let x = [1.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        let z = [0.0, 0.0, 1.0];
        assert!(spinhalf_plane_condition(x, y, x).unwrap());
        assert!(!spinhalf_plane_condition(x, y, z).unwrap());
        assert!(matches!(
            spinhalf_plane_condition(x, [0.0; 3], y),
            Err(Error::DegenerateScore)
        ));
    }

    #[test]
    fn plane_condition_agrees_with_attainability() {
        // η = π/4: ẑ is out of the (u, u̇) plane, and the σ_z measurement
        // fails the operator-level condition at the same points.
        let eta = FRAC_PI_4;
        let theta = 0.6f64;
        let u = [
            eta.sin() * theta.cos(),
            eta.sin() * theta.sin(),
            eta.cos(),
        ];
        let u_dot = [-eta.sin() * theta.sin(), eta.sin() * theta.cos(), 0.0];
        assert!(!spinhalf_plane_condition(u, u_dot, [0.0, 0.0, 1.0]).unwrap());

        let model = example_model(eta).unwrap();
        let report = attainability_check(&model, &Povm::pauli_z_projectors(), &[theta]).unwrap();
        assert!(!report.attains_here);

        // And ξ in the plane passes both ways: use u itself.
        assert!(spinhalf_plane_condition(u, u_dot, u).unwrap());
        let _ = PI;
    }
}
