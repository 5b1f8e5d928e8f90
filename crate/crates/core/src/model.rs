//! Parametric quantum-state models, finite-outcome POVMs, and the outcome
//! probability map `p(x; θ) = trace ρ(θ) m(x)`.
//!
//! Measurements are restricted to finite outcome sets dominated by counting
//! measure, which is no loss for the finite-dimensional systems handled here.

use std::sync::Arc;

use num_complex::Complex64 as Complex;

use crate::error::{Error, Result};
use crate::operators::{trace_product, HermitianOperator, Matrix};
use crate::vec3;

/// Outcome probabilities at or below this threshold are classified as the
/// null set `X_0`; everything above is the support `X_+`.
pub const SUPPORT_EPS: f64 = 1e-12;

/// Central-difference step for numeric model derivatives.
pub const DERIVATIVE_STEP: f64 = 1e-5;

const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const DERIVATIVE_TRACE_TOL: f64 = 1e-8;

/// Unit-trace positive-semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace is {tr}, expected 1")));
        }
        let min = op.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(DensityOperator { op })
    }

    #[inline]
    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// `trace ρ²`; equals 1 exactly for pure states.
    pub fn purity(&self) -> f64 {
        trace_product(self.op.matrix(), self.op.matrix())
            .expect("same dimension")
            .re
    }
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidPureState("empty amplitude vector".into()));
        }
        let norm = amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidPureState(format!(
                "norm is {norm}, expected 1"
            )));
        }
        Ok(PureState { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex {
        debug_assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Density operator `|ψ><ψ|`.
    pub fn density(&self) -> DensityOperator {
        let d = self.dim();
        let mut m = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, self.amplitudes[i] * self.amplitudes[j].conj());
            }
        }
        let op = HermitianOperator::new(m).expect("finite amplitudes");
        DensityOperator::new(op).expect("projector has unit trace")
    }
}

/// One labelled POVM element.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    pub label: String,
    pub operator: HermitianOperator,
}

/// Finite-outcome POVM: nonnegative operators summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<PovmElement>,
}

impl Povm {
    pub fn new(elements: Vec<(String, HermitianOperator)>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidPovm("no elements".into()));
        }
        let dim = elements[0].1.dim();
        let mut sum = Matrix::zeros(dim);
        for (label, op) in &elements {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: op.dim(),
                });
            }
            let min = op.min_eigenvalue();
            if min < -PSD_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element '{label}' has negative eigenvalue {min:e}"
                )));
            }
            sum = sum.add(op.matrix());
        }
        let dev = entrywise_identity_deviation(&sum);
        if dev > 1e-9 {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {dev:e} (tolerance 1e-9)"
            )));
        }
        Ok(Povm {
            elements: elements
                .into_iter()
                .map(|(label, operator)| PovmElement { label, operator })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].operator.dim()
    }

    pub fn element(&self, idx: usize) -> &PovmElement {
        &self.elements[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = &PovmElement> {
        self.elements.iter()
    }

    /// The trivial single-outcome measurement `{1}`.
    pub fn trivial(dim: usize) -> Result<Self> {
        Povm::new(vec![("all".into(), HermitianOperator::identity(dim)?)])
    }

    /// Two-outcome projective measurement of spin along a unit direction.
    pub fn spin_projectors(direction: [f64; 3]) -> Result<Self> {
        let n = vec3::norm(direction);
        if (n - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidPovm(format!(
                "spin direction must be unit length, got norm {n}"
            )));
        }
        let plus = HermitianOperator::from_bloch_coeffs(0.5, vec3::scale(direction, 0.5));
        let minus = HermitianOperator::from_bloch_coeffs(0.5, vec3::scale(direction, -0.5));
        Povm::new(vec![("+".into(), plus), ("-".into(), minus)])
    }

    pub fn pauli_x_projectors() -> Self {
        Povm::spin_projectors([1.0, 0.0, 0.0]).expect("x axis is unit")
    }

    pub fn pauli_y_projectors() -> Self {
        Povm::spin_projectors([0.0, 1.0, 0.0]).expect("y axis is unit")
    }

    pub fn pauli_z_projectors() -> Self {
        Povm::spin_projectors([0.0, 0.0, 1.0]).expect("z axis is unit")
    }

    /// Projective measurement in the equatorial plane at the given azimuth.
    pub fn in_plane(azimuth: f64) -> Self {
        Povm::spin_projectors([azimuth.cos(), azimuth.sin(), 0.0]).expect("unit direction")
    }

    /// Four-outcome mixture: with probability 1/2 measure σ_y, else σ_z.
    pub fn yz_mix() -> Self {
        let half = |op: HermitianOperator| op.scale(0.5);
        let y = Povm::pauli_y_projectors();
        let z = Povm::pauli_z_projectors();
        Povm::new(vec![
            ("y+".into(), half(y.element(0).operator.clone())),
            ("y-".into(), half(y.element(1).operator.clone())),
            ("z+".into(), half(z.element(0).operator.clone())),
            ("z-".into(), half(z.element(1).operator.clone())),
        ])
        .expect("halved projective pair is a POVM")
    }

    /// Projectors onto the eigenspaces of an observable, grouping
    /// eigenvalues that agree within `degeneracy_tol`. Outcomes are labelled
    /// `e0, e1, ...` in descending eigenvalue order.
    pub fn eigenprojectors(observable: &HermitianOperator, degeneracy_tol: f64) -> Result<Self> {
        let eig = observable.eig();
        let vals = eig.eigenvalues();
        let d = observable.dim();
        let mut elements = Vec::new();
        let mut idx = 0;
        let mut group = 0;
        while idx < d {
            let mut weights = vec![0.0; d];
            weights[idx] = 1.0;
            let mut j = idx + 1;
            while j < d && (vals[j] - vals[idx]).abs() <= degeneracy_tol {
                weights[j] = 1.0;
                j += 1;
            }
            let proj = HermitianOperator::new(eig.recombine(&weights))?;
            elements.push((format!("e{group}"), proj));
            group += 1;
            idx = j;
        }
        Povm::new(elements)
    }
}

fn entrywise_identity_deviation(sum: &Matrix) -> f64 {
    let d = sum.dim();
    let mut dev: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j {
                Complex::new(1.0, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
            dev = dev.max((sum.get(i, j) - target).norm());
        }
    }
    dev
}

/// Outcome law of a POVM on a state, with its support mask.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    probs: Vec<f64>,
    support: Vec<bool>,
}

impl OutcomeDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// True for outcomes with `p > SUPPORT_EPS` (the set `X_+`).
    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// True when some outcome falls outside the support.
    pub fn is_degenerate(&self) -> bool {
        self.support.iter().any(|s| !s)
    }
}

/// `p(x) = trace(ρ m_x)`, clipped at zero.
pub fn outcome_distribution(rho: &DensityOperator, povm: &Povm) -> Result<OutcomeDistribution> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: povm.dim(),
        });
    }
    let mut probs = Vec::with_capacity(povm.len());
    let mut support = Vec::with_capacity(povm.len());
    for el in povm.iter() {
        let p = trace_product(rho.op().matrix(), el.operator.matrix())?
            .re
            .max(0.0);
        probs.push(p);
        support.push(p > SUPPORT_EPS);
    }
    Ok(OutcomeDistribution { probs, support })
}

type StateFn = dyn Fn(&[f64]) -> DensityOperator + Send + Sync;
type DerivativeFn = dyn Fn(&[f64], usize) -> HermitianOperator + Send + Sync;

/// A map `θ ∈ R^k -> ρ(θ)` with an optional analytic derivative provider.
///
/// The closures must be pure; grid evaluations and Monte Carlo replications
/// call them concurrently.
#[derive(Clone)]
pub struct ParametricModel {
    param_dim: usize,
    state_at: Arc<StateFn>,
    derivative_at: Option<Arc<DerivativeFn>>,
    periodic_mask: Vec<bool>,
}

impl std::fmt::Debug for ParametricModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParametricModel")
            .field("param_dim", &self.param_dim)
            .field("analytic_derivative", &self.derivative_at.is_some())
            .field("periodic_mask", &self.periodic_mask)
            .finish()
    }
}

impl ParametricModel {
    pub fn new(
        param_dim: usize,
        periodic_mask: Vec<bool>,
        state_at: impl Fn(&[f64]) -> DensityOperator + Send + Sync + 'static,
    ) -> Self {
        assert_eq!(periodic_mask.len(), param_dim, "mask length must equal k");
        assert!(param_dim >= 1, "parameter dimension must be at least 1");
        ParametricModel {
            param_dim,
            state_at: Arc::new(state_at),
            derivative_at: None,
            periodic_mask,
        }
    }

    pub fn with_derivative(
        mut self,
        derivative_at: impl Fn(&[f64], usize) -> HermitianOperator + Send + Sync + 'static,
    ) -> Self {
        self.derivative_at = Some(Arc::new(derivative_at));
        self
    }

    #[inline]
    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn periodic_mask(&self) -> &[bool] {
        &self.periodic_mask
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative_at.is_some()
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_dim {
            return Err(Error::BadParameterLength {
                expected: self.param_dim,
                got: theta.len(),
            });
        }
        Ok(())
    }

    pub fn state(&self, theta: &[f64]) -> DensityOperator {
        assert_eq!(theta.len(), self.param_dim, "parameter length mismatch");
        (self.state_at)(theta)
    }

    /// `∂ρ/∂θ_i`, analytic when provided, otherwise a symmetrized central
    /// difference. The trace is forced to zero (differentiated trace-one
    /// constraint); a trace beyond 1e-8 signals a broken model.
    pub fn derivative(&self, theta: &[f64], i: usize) -> Result<HermitianOperator> {
        self.check_theta(theta)?;
        if i >= self.param_dim {
            return Err(Error::BadParameterLength {
                expected: self.param_dim,
                got: i + 1,
            });
        }
        let raw = match &self.derivative_at {
            Some(f) => f(theta, i),
            None => {
                let mut hi = theta.to_vec();
                let mut lo = theta.to_vec();
                hi[i] += DERIVATIVE_STEP;
                lo[i] -= DERIVATIVE_STEP;
                let diff = self
                    .state(&hi)
                    .op()
                    .matrix()
                    .sub(self.state(&lo).op().matrix())
                    .scale_re(1.0 / (2.0 * DERIVATIVE_STEP));
                HermitianOperator::new(diff)?
            }
        };
        enforce_traceless(raw)
    }
}

/// Free-function form of [`ParametricModel::derivative`].
pub fn model_derivative(
    model: &ParametricModel,
    theta: &[f64],
    i: usize,
) -> Result<HermitianOperator> {
    model.derivative(theta, i)
}

fn enforce_traceless(op: HermitianOperator) -> Result<HermitianOperator> {
    let tr = op.trace();
    if tr.abs() > DERIVATIVE_TRACE_TOL {
        return Err(Error::NonDifferentiable { trace: tr });
    }
    if tr == 0.0 {
        return Ok(op);
    }
    let d = op.dim();
    let correction = HermitianOperator::identity(d)?.scale(tr / d as f64);
    op.sub(&correction)
}

/// `ρ = (1 + u·σ)/2` for a Bloch vector with `|u| <= 1`.
///
/// Norms in `(1, 1 + 1e-10]` are clipped back to the sphere.
pub fn bloch_to_density(u: [f64; 3]) -> Result<DensityOperator> {
    let n = vec3::norm(u);
    if !n.is_finite() || n > 1.0 + 1e-10 {
        return Err(Error::InvalidBlochVector { norm: n });
    }
    let u = if n > 1.0 { vec3::scale(u, 1.0 / n) } else { u };
    let op = HermitianOperator::from_bloch_coeffs(0.5, vec3::scale(u, 0.5));
    DensityOperator::new(op)
}

/// Bloch vector of a qubit state; inverse of [`bloch_to_density`] to 1e-12.
pub fn density_to_bloch(rho: &DensityOperator) -> Result<[f64; 3]> {
    if rho.dim() != 2 {
        return Err(Error::UnsupportedDimension(rho.dim()));
    }
    let (_, w) = rho.op().bloch_coeffs()?;
    Ok(vec3::scale(w, 2.0))
}

/// Bloch components of a traceless 2x2 Hermitian operator `H = (w·σ)/2`,
/// i.e. `w_i = Re trace(H σ_i)`. Used to read tangent vectors off `ρ̇`.
pub fn bloch_of_derivative(rho_dot: &HermitianOperator) -> Result<[f64; 3]> {
    if rho_dot.dim() != 2 {
        return Err(Error::UnsupportedDimension(rho_dot.dim()));
    }
    let (_, w) = rho_dot.bloch_coeffs()?;
    Ok(vec3::scale(w, 2.0))
}
