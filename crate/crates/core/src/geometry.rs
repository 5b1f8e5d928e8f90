//! Spin-half Bloch-sphere geometry: the worked example state, its quantum
//! score directions, and the great-circle dichotomy that decides whether a
//! single measurement can extract the full quantum information uniformly in
//! the parameter.
//!
//! A pure spin-half curve `u(θ)` admits a θ-uniform bound-attaining
//! measurement exactly when it stays on one great circle; otherwise every
//! fixed measurement loses information somewhere on the curve.

use std::io::BufRead;
use std::path::Path;

use num_complex::Complex64 as Complex;

use crate::error::{Error, Result};
use crate::information::attainability_check;
use crate::model::{
    bloch_of_derivative, bloch_to_density, density_to_bloch, ParametricModel, Povm, PureState,
};
use crate::vec3;

const POLE_EPS: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-10;
const TANGENT_ORTHO_TOL: f64 = 1e-8;
const PLANE_ANGLE_TOL: f64 = 1e-6;
const DEGENERATE_SPEED: f64 = 1e-10;

/// Default number of grid points for parameter sweeps.
pub const DEFAULT_GRID_POINTS: usize = 64;

/// Point on the unit sphere in polar coordinates: colatitude `eta` in
/// `[0, π]`, longitude `phi` stored in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalAngles {
    eta: f64,
    phi: f64,
}

impl SphericalAngles {
    pub fn new(eta: f64, phi: f64) -> Result<Self> {
        if !eta.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidAngles("non-finite angle".into()));
        }
        if !(0.0..=std::f64::consts::PI).contains(&eta) {
            return Err(Error::InvalidAngles(format!(
                "colatitude {eta} outside [0, pi]"
            )));
        }
        Ok(SphericalAngles {
            eta,
            phi: crate::estimation::wrap_angle(phi),
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Degenerate poles, where the longitude is unidentified.
    pub fn is_pole(&self) -> bool {
        self.eta.sin().abs() <= POLE_EPS
    }

    /// Cartesian unit vector with these polar coordinates.
    pub fn unit_vector(&self) -> [f64; 3] {
        [
            self.eta.sin() * self.phi.cos(),
            self.eta.sin() * self.phi.sin(),
            self.eta.cos(),
        ]
    }
}

/// The worked example state: amplitudes
/// `(e^{-iφ/2} cos(η/2), e^{+iφ/2} sin(η/2))`, whose Bloch vector is the
/// point with polar coordinates `(η, φ)`.
pub fn example_state(angles: &SphericalAngles) -> PureState {
    let half_eta = angles.eta / 2.0;
    let half_phi = angles.phi / 2.0;
    let a0 = Complex::from_polar(half_eta.cos(), -half_phi);
    let a1 = Complex::from_polar(half_eta.sin(), half_phi);
    PureState::new(vec![a0, a1]).expect("unit norm by construction")
}

/// One-parameter example model: known colatitude `eta`, unknown longitude.
/// Carries the analytic derivative `ρ̇ = (u̇·σ)/2`.
pub fn example_model(eta: f64) -> Result<ParametricModel> {
    if !(0.0..=std::f64::consts::PI).contains(&eta) {
        return Err(Error::InvalidAngles(format!(
            "colatitude {eta} outside [0, pi]"
        )));
    }
    if eta.sin().abs() <= POLE_EPS {
        return Err(Error::PoleDegeneracy { eta });
    }
    let s = eta.sin();
    let c = eta.cos();
    Ok(ParametricModel::new(1, vec![true], move |theta| {
        let phi = theta[0];
        bloch_to_density([s * phi.cos(), s * phi.sin(), c]).expect("unit Bloch vector")
    })
    .with_derivative(move |theta, _| {
        let phi = theta[0];
        crate::operators::spin_operator([-0.5 * s * phi.sin(), 0.5 * s * phi.cos(), 0.0])
    }))
}

/// Two-parameter model of a completely unknown pure qubit state,
/// parametrized by `(η, φ)`. Analytic derivatives for both coordinates.
pub fn full_sphere_model() -> ParametricModel {
    ParametricModel::new(2, vec![false, true], |theta| {
        let (eta, phi) = (theta[0], theta[1]);
        bloch_to_density([
            eta.sin() * phi.cos(),
            eta.sin() * phi.sin(),
            eta.cos(),
        ])
        .expect("unit Bloch vector")
    })
    .with_derivative(|theta, i| {
        let (eta, phi) = (theta[0], theta[1]);
        let w = if i == 0 {
            [eta.cos() * phi.cos(), eta.cos() * phi.sin(), -eta.sin()]
        } else {
            [-eta.sin() * phi.sin(), eta.sin() * phi.cos(), 0.0]
        };
        crate::operators::spin_operator(vec3::scale(w, 0.5))
    })
}

/// Unit directions of the two quantum scores of the full-sphere model.
///
/// `λ_η = v_eta·σ` and `λ_φ = r_phi · v_phi·σ` with `r_phi = sin η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreDirections {
    pub v_eta: [f64; 3],
    pub v_phi: [f64; 3],
    pub r_phi: f64,
}

/// Closed-form score directions: `v_eta = u(η+π/2, φ)`,
/// `v_phi = u(π/2, φ+π/2)`.
pub fn score_directions(angles: &SphericalAngles) -> Result<ScoreDirections> {
    if angles.is_pole() {
        return Err(Error::PoleDegeneracy { eta: angles.eta() });
    }
    let (eta, phi) = (angles.eta(), angles.phi());
    Ok(ScoreDirections {
        v_eta: [eta.cos() * phi.cos(), eta.cos() * phi.sin(), -eta.sin()],
        v_phi: [-phi.sin(), phi.cos(), 0.0],
        r_phi: eta.sin(),
    })
}

/// Sampled Bloch curve: grid values, unit spin directions, and tangents.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    thetas: Vec<f64>,
    us: Vec<[f64; 3]>,
    u_dots: Vec<[f64; 3]>,
}

impl CurveSample {
    /// Build from explicit directions and tangents; validates `|u| = 1`
    /// and `u ⟂ u̇`.
    pub fn from_parts(
        thetas: Vec<f64>,
        us: Vec<[f64; 3]>,
        u_dots: Vec<[f64; 3]>,
    ) -> Result<Self> {
        if thetas.len() != us.len() || thetas.len() != u_dots.len() {
            return Err(Error::InvalidCurve(
                "grid, direction, and tangent lengths differ".into(),
            ));
        }
        for (idx, u) in us.iter().enumerate() {
            let n = vec3::norm(*u);
            if (n - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidCurve(format!(
                    "direction {idx} has norm {n}, expected 1"
                )));
            }
            let radial = vec3::dot(*u, u_dots[idx]).abs();
            if radial > TANGENT_ORTHO_TOL {
                return Err(Error::InvalidCurve(format!(
                    "tangent {idx} has radial component {radial:e}"
                )));
            }
        }
        Ok(CurveSample {
            thetas,
            us,
            u_dots,
        })
    }

    /// Build from sampled directions only; tangents come from central
    /// differences (one-sided at the ends), with the radial component
    /// projected out so the tangent lies in the sphere's tangent plane.
    pub fn from_points(thetas: Vec<f64>, us: Vec<[f64; 3]>) -> Result<Self> {
        if thetas.len() != us.len() {
            return Err(Error::InvalidCurve(
                "grid and direction lengths differ".into(),
            ));
        }
        if thetas.len() < 3 {
            return Err(Error::GridTooSmall {
                needed: 3,
                got: thetas.len(),
            });
        }
        let n = thetas.len();
        let mut u_dots = Vec::with_capacity(n);
        for i in 0..n {
            let (lo, hi) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            let dt = thetas[hi] - thetas[lo];
            if dt.abs() < 1e-14 {
                return Err(Error::InvalidCurve(format!(
                    "repeated grid value near index {i}"
                )));
            }
            let raw = vec3::scale(vec3::sub(us[hi], us[lo]), 1.0 / dt);
            let tangent = vec3::sub(raw, vec3::scale(us[i], vec3::dot(us[i], raw)));
            u_dots.push(tangent);
        }
        CurveSample::from_parts(thetas, us, u_dots)
    }

    /// Sample a scalar-parameter qubit model over a grid.
    pub fn from_model(model: &ParametricModel, grid: &[f64]) -> Result<Self> {
        if model.param_dim() != 1 {
            return Err(Error::BadParameterLength {
                expected: 1,
                got: model.param_dim(),
            });
        }
        let mut us = Vec::with_capacity(grid.len());
        let mut u_dots = Vec::with_capacity(grid.len());
        for &theta in grid {
            let rho = model.state(&[theta]);
            let u = density_to_bloch(&rho)?;
            let norm = vec3::norm(u);
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidCurve(format!(
                    "model state at {theta} is not pure (|u| = {norm})"
                )));
            }
            let raw = bloch_of_derivative(&model.derivative(&[theta], 0)?)?;
            let tangent = vec3::sub(raw, vec3::scale(u, vec3::dot(u, raw)));
            us.push(u);
            u_dots.push(tangent);
        }
        CurveSample::from_parts(grid.to_vec(), us, u_dots)
    }

    /// The example curve at fixed colatitude over a longitude grid.
    pub fn example_curve(eta: f64, grid: &[f64]) -> Result<Self> {
        CurveSample::from_model(&example_model(eta)?, grid)
    }

    /// Read a curve from CSV with columns `theta,ux,uy,uz` (header optional).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        CurveSample::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn from_csv_reader(reader: impl BufRead) -> Result<Self> {
        let mut thetas = Vec::new();
        let mut us = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if lineno == 0 && fields.iter().any(|f| f.parse::<f64>().is_err()) {
                continue; // header row
            }
            if fields.len() != 4 {
                return Err(Error::CsvParse {
                    line: lineno + 1,
                    message: format!("expected 4 columns, got {}", fields.len()),
                });
            }
            let mut vals = [0.0; 4];
            for (slot, field) in vals.iter_mut().zip(&fields) {
                *slot = field.parse::<f64>().map_err(|e| Error::CsvParse {
                    line: lineno + 1,
                    message: e.to_string(),
                })?;
            }
            thetas.push(vals[0]);
            us.push([vals[1], vals[2], vals[3]]);
        }
        CurveSample::from_points(thetas, us)
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn us(&self) -> &[[f64; 3]] {
        &self.us
    }

    pub fn u_dots(&self) -> &[[f64; 3]] {
        &self.u_dots
    }

    /// Angular speed `r(θ) = |u̇|` at a grid point.
    pub fn speed(&self, idx: usize) -> f64 {
        vec3::norm(self.u_dots[idx])
    }
}

/// Outcome of the curve dichotomy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveClass {
    /// The curve stays on one great circle; `normal` is the plane normal
    /// (defined up to sign).
    GreatCircle { normal: [f64; 3] },
    /// The plane of motion turns: no uniformly attaining measurement exists.
    NonPlanar,
    /// The score vanishes somewhere on the grid.
    Degenerate,
}

impl CurveClass {
    pub fn label(&self) -> &'static str {
        match self {
            CurveClass::GreatCircle { .. } => "great_circle",
            CurveClass::NonPlanar => "non_planar",
            CurveClass::Degenerate => "degenerate",
        }
    }
}

/// Classify a sampled curve: great circle iff all plane normals
/// `n(θ) = u×u̇/|u×u̇|` agree up to sign and every `u(θ)` is orthogonal to
/// the common normal, both within an angular tolerance of 1e-6.
pub fn curve_classify(sample: &CurveSample) -> Result<CurveClass> {
    let usable = sample.len();
    if usable < 3 {
        return Err(Error::GridTooSmall {
            needed: 3,
            got: usable,
        });
    }
    let mut normals = Vec::with_capacity(sample.len());
    for i in 0..sample.len() {
        if sample.speed(i) <= DEGENERATE_SPEED {
            return Ok(CurveClass::Degenerate);
        }
        let n = vec3::cross(sample.us()[i], sample.u_dots()[i]);
        match vec3::unit(n, 1e-14) {
            Some(unit) => normals.push(unit),
            None => return Ok(CurveClass::Degenerate),
        }
    }
    let reference = normals[0];
    for n in &normals {
        // Angle between lines (sign-folded): sin of the mismatch.
        let sine = vec3::norm(vec3::cross(*n, reference));
        if sine > PLANE_ANGLE_TOL {
            return Ok(CurveClass::NonPlanar);
        }
    }
    for u in sample.us() {
        if vec3::dot(*u, reference).abs() > PLANE_ANGLE_TOL {
            return Ok(CurveClass::NonPlanar);
        }
    }
    Ok(CurveClass::GreatCircle { normal: reference })
}

/// Attainability verdict at a single grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointAttainability {
    pub theta: f64,
    pub attains: bool,
}

/// Grid-wide attainability report for one measurement on one curve.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformAttainability {
    pub class: CurveClass,
    /// True iff the equality conditions hold at every grid point.
    pub uniform: bool,
    pub per_theta: Vec<PointAttainability>,
}

/// Check whether a measurement attains the quantum information bound at
/// every point of the grid. For non-planar curves this is false for every
/// measurement; for great circles it holds exactly for in-plane projective
/// measurements with everywhere-positive outcome probabilities.
pub fn uniform_attainability(
    model: &ParametricModel,
    povm: &Povm,
    theta_grid: &[f64],
) -> Result<UniformAttainability> {
    let sample = CurveSample::from_model(model, theta_grid)?;
    let class = curve_classify(&sample)?;
    let mut per_theta = Vec::with_capacity(theta_grid.len());
    let mut uniform = true;
    for &theta in theta_grid {
        let report = attainability_check(model, povm, &[theta])?;
        uniform &= report.attains_here;
        per_theta.push(PointAttainability {
            theta,
            attains: report.attains_here,
        });
    }
    Ok(UniformAttainability {
        class,
        uniform,
        per_theta,
    })
}

/// Evenly spaced grid of `count` points on `[start, stop)`.
pub fn linspace_exclusive(start: f64, stop: f64, count: usize) -> Vec<f64> {
    let step = (stop - start) / count as f64;
    (0..count).map(|i| start + step * i as f64).collect()
}
