//! Seeded random spin-half models and measurements, used by the property
//! tests and exposed for downstream fuzz harnesses.
//!
//! Curves are smooth trigonometric Bloch paths `u(θ) = v(θ)/|v(θ)|` with
//! `v(θ) = a + b cos θ + c sin θ`, which stay bounded away from the origin
//! by construction, so the states are always valid.

use rand::Rng;

use crate::model::{bloch_to_density, ParametricModel, Povm};
use crate::operators::spin_operator;
use crate::vec3;

/// Uniform random unit vector by rejection sampling.
pub fn random_unit<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n = vec3::norm(v);
        if n > 1e-3 && n <= 1.0 {
            return vec3::scale(v, 1.0 / n);
        }
    }
}

fn random_in_ball<R: Rng>(rng: &mut R, radius: f64) -> [f64; 3] {
    loop {
        let v = [
            rng.random_range(-radius..radius),
            rng.random_range(-radius..radius),
            rng.random_range(-radius..radius),
        ];
        if vec3::norm(v) <= radius {
            return v;
        }
    }
}

struct TrigPath {
    base: [f64; 3],
    cos_coeff: [f64; 3],
    sin_coeff: [f64; 3],
}

impl TrigPath {
    fn direction(&self, theta: f64) -> [f64; 3] {
        let v = [
            self.base[0] + self.cos_coeff[0] * theta.cos() + self.sin_coeff[0] * theta.sin(),
            self.base[1] + self.cos_coeff[1] * theta.cos() + self.sin_coeff[1] * theta.sin(),
            self.base[2] + self.cos_coeff[2] * theta.cos() + self.sin_coeff[2] * theta.sin(),
        ];
        vec3::unit(v, 1e-12).expect("path bounded away from the origin")
    }

    /// d/dθ of the normalized direction.
    fn tangent(&self, theta: f64) -> [f64; 3] {
        let v = [
            self.base[0] + self.cos_coeff[0] * theta.cos() + self.sin_coeff[0] * theta.sin(),
            self.base[1] + self.cos_coeff[1] * theta.cos() + self.sin_coeff[1] * theta.sin(),
            self.base[2] + self.cos_coeff[2] * theta.cos() + self.sin_coeff[2] * theta.sin(),
        ];
        let vdot = [
            -self.cos_coeff[0] * theta.sin() + self.sin_coeff[0] * theta.cos(),
            -self.cos_coeff[1] * theta.sin() + self.sin_coeff[1] * theta.cos(),
            -self.cos_coeff[2] * theta.sin() + self.sin_coeff[2] * theta.cos(),
        ];
        let n = vec3::norm(v);
        let radial = vec3::dot(v, vdot) / (n * n);
        vec3::scale(
            vec3::sub(vdot, vec3::scale(v, radial)),
            1.0 / n,
        )
    }

    fn random<R: Rng>(rng: &mut R) -> Self {
        TrigPath {
            base: vec3::scale(random_unit(rng), 1.5),
            cos_coeff: random_in_ball(rng, 0.6),
            sin_coeff: random_in_ball(rng, 0.6),
        }
    }
}

/// Random pure spin-half curve with an analytic derivative provider.
pub fn random_pure_model<R: Rng>(rng: &mut R) -> ParametricModel {
    let path = TrigPath::random(rng);
    let path2 = TrigPath {
        base: path.base,
        cos_coeff: path.cos_coeff,
        sin_coeff: path.sin_coeff,
    };
    ParametricModel::new(1, vec![true], move |theta| {
        bloch_to_density(path.direction(theta[0])).expect("unit Bloch vector")
    })
    .with_derivative(move |theta, _| {
        spin_operator(vec3::scale(path2.tangent(theta[0]), 0.5))
    })
}

/// Random mixed spin-half curve at a fixed Bloch radius in `[0.2, 0.95]`.
pub fn random_mixed_model<R: Rng>(rng: &mut R) -> ParametricModel {
    let path = TrigPath::random(rng);
    let path2 = TrigPath {
        base: path.base,
        cos_coeff: path.cos_coeff,
        sin_coeff: path.sin_coeff,
    };
    let radius = rng.random_range(0.2..0.95);
    ParametricModel::new(1, vec![true], move |theta| {
        bloch_to_density(vec3::scale(path.direction(theta[0]), radius))
            .expect("interior Bloch vector")
    })
    .with_derivative(move |theta, _| {
        spin_operator(vec3::scale(path2.tangent(theta[0]), 0.5 * radius))
    })
}

/// Random scalar-parameter spin-half model: pure or mixed with equal odds.
pub fn random_model<R: Rng>(rng: &mut R) -> ParametricModel {
    if rng.random_range(0..2) == 0 {
        random_pure_model(rng)
    } else {
        random_mixed_model(rng)
    }
}

/// Random finite POVM with 2 to 4 outcomes: a projective pair, a classical
/// mixture of two projective measurements, or a noisy family
/// `α_i (1 + w_i·σ)` with the constraints that keep it a POVM.
pub fn random_povm<R: Rng>(rng: &mut R) -> Povm {
    match rng.random_range(0..3) {
        0 => Povm::spin_projectors(random_unit(rng)).expect("unit direction"),
        1 => {
            let q = rng.random_range(0.2..0.8);
            let first = Povm::spin_projectors(random_unit(rng)).expect("unit direction");
            let second = Povm::spin_projectors(random_unit(rng)).expect("unit direction");
            Povm::new(vec![
                ("a+".into(), first.element(0).operator.scale(q)),
                ("a-".into(), first.element(1).operator.scale(q)),
                ("b+".into(), second.element(0).operator.scale(1.0 - q)),
                ("b-".into(), second.element(1).operator.scale(1.0 - q)),
            ])
            .expect("mixture of projective pairs")
        }
        _ => {
            let outcomes = rng.random_range(2..=4usize);
            let mut weights: Vec<f64> = (0..outcomes)
                .map(|_| rng.random_range(0.1..1.0))
                .collect();
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
            let mut dirs: Vec<[f64; 3]> = (0..outcomes)
                .map(|_| random_in_ball(rng, 0.9))
                .collect();
            // Recenter so Σ α_i w_i = 0, then shrink inside the unit ball.
            let mean = dirs
                .iter()
                .zip(&weights)
                .fold([0.0; 3], |acc, (d, w)| {
                    [acc[0] + d[0] * w, acc[1] + d[1] * w, acc[2] + d[2] * w]
                });
            for d in &mut dirs {
                *d = vec3::sub(*d, mean);
            }
            let max_norm = dirs.iter().map(|d| vec3::norm(*d)).fold(0.0, f64::max);
            if max_norm > 0.95 {
                let shrink = 0.95 / max_norm;
                for d in &mut dirs {
                    *d = vec3::scale(*d, shrink);
                }
            }
            let elements = dirs
                .iter()
                .zip(&weights)
                .enumerate()
                .map(|(i, (d, w))| {
                    (
                        format!("m{i}"),
                        crate::operators::HermitianOperator::from_bloch_coeffs(
                            *w,
                            vec3::scale(*d, *w),
                        ),
                    )
                })
                .collect();
            Povm::new(elements).expect("recentered noisy family is a POVM")
        }
    }
}
