//! Dense complex-matrix algebra for small Hilbert-space dimensions.
//!
//! The hot path is d = 2 (spin-half), which gets a closed-form Hermitian
//! eigensolver; larger dimensions (up to 8) fall back to cyclic Jacobi
//! sweeps. Everything is immutable after construction and safe to share
//! across threads.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Largest Hilbert-space dimension accepted by operator constructors.
pub const MAX_DIM: usize = 8;

/// Off-diagonal Frobenius-norm target for the Jacobi eigensolver.
const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 60;

/// Eigenvalues in [-PSD_CLIP_TOL, 0) are treated as round-off and clipped.
pub const PSD_CLIP_TOL: f64 = 1e-10;

/// Dense square complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    entries: Vec<Complex>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            entries: vec![Complex::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex::new(1.0, 0.0));
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Ok(Matrix { dim, entries })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[Complex] {
        &self.entries
    }

    pub fn adjoint(&self) -> Matrix {
        let mut out = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(i, j, self.get(j, i).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Complex {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: Complex) -> Matrix {
        Matrix {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Matrix {
        self.scale(Complex::new(s, 0.0))
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        Matrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        Matrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let aik = self.get(i, k);
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Frobenius inner product `trace(self† · other)`.
    pub fn inner(&self, other: &Matrix) -> Complex {
        debug_assert_eq!(self.dim, other.dim);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// `trace(a · b)` without materializing the product.
///
/// For self-adjoint inputs the result satisfies
/// `trace_product(a, b) == conj(trace_product(b, a))` exactly, because the
/// symmetrizing constructors make hermiticity bit-exact.
pub fn trace_product(a: &Matrix, b: &Matrix) -> Result<Complex> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let d = a.dim();
    let mut acc = Complex::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += a.get(i, j) * b.get(j, i);
        }
    }
    Ok(acc)
}

/// Self-adjoint operator on a small Hilbert space.
///
/// Construction symmetrizes the input, `(H + H†)/2`, rather than rejecting
/// near-Hermitian matrices: numeric derivative providers produce tiny
/// asymmetries that would otherwise poison every downstream check.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: Matrix,
}

impl HermitianOperator {
    pub fn new(mat: Matrix) -> Result<Self> {
        let d = mat.dim();
        if d == 0 || d > MAX_DIM {
            return Err(Error::UnsupportedDimension(d));
        }
        for i in 0..d {
            for j in 0..d {
                let z = mat.get(i, j);
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFiniteEntry { row: i, col: j });
                }
            }
        }
        let mut sym = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let z = (mat.get(i, j) + mat.get(j, i).conj()) * 0.5;
                sym.set(i, j, z);
            }
        }
        Ok(HermitianOperator { mat: sym })
    }

    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self> {
        HermitianOperator::new(Matrix::from_rows(rows)?)
    }

    /// 2x2 operator `a·1 + w·σ` from real coefficients.
    pub fn from_bloch_coeffs(a: f64, w: [f64; 3]) -> Self {
        let mut m = Matrix::zeros(2);
        m.set(0, 0, Complex::new(a + w[2], 0.0));
        m.set(0, 1, Complex::new(w[0], -w[1]));
        m.set(1, 0, Complex::new(w[0], w[1]));
        m.set(1, 1, Complex::new(a - w[2], 0.0));
        HermitianOperator { mat: m }
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        HermitianOperator::new(Matrix::zeros(dim))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        HermitianOperator::new(Matrix::identity(dim))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.mat.get(row, col)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.frobenius_norm()
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(HermitianOperator {
            mat: self.mat.add(&other.mat),
        })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(HermitianOperator {
            mat: self.mat.sub(&other.mat),
        })
    }

    /// Scaling by a real factor keeps the operator self-adjoint.
    pub fn scale(&self, s: f64) -> HermitianOperator {
        HermitianOperator {
            mat: self.mat.scale_re(s),
        }
    }

    /// Real coefficients `(a, w)` such that `H = a·1 + w·σ` (2x2 only).
    pub fn bloch_coeffs(&self) -> Result<(f64, [f64; 3])> {
        if self.dim() != 2 {
            return Err(Error::UnsupportedDimension(self.dim()));
        }
        let a = 0.5 * (self.get(0, 0).re + self.get(1, 1).re);
        let wz = 0.5 * (self.get(0, 0).re - self.get(1, 1).re);
        let wx = self.get(1, 0).re;
        let wy = self.get(1, 0).im;
        Ok((a, [wx, wy, wz]))
    }

    /// Hermitian eigendecomposition with eigenvalues sorted descending.
    pub fn eig(&self) -> EigenDecomposition {
        match self.dim() {
            1 => EigenDecomposition {
                eigenvalues: vec![self.get(0, 0).re],
                vectors: Matrix::identity(1),
            },
            2 => eig_2x2(self),
            _ => eig_jacobi(self),
        }
    }

    /// Positive-semidefinite square root.
    ///
    /// Eigenvalues with `|p| <= 1e-10` are round-off and clipped to zero
    /// (the square root would amplify them to 1e-5 scale); anything below
    /// `-1e-10` is a genuine PSD violation and is rejected.
    pub fn psd_sqrt(&self) -> Result<HermitianOperator> {
        let eig = self.eig();
        let mut roots = Vec::with_capacity(eig.eigenvalues.len());
        for &p in &eig.eigenvalues {
            if p < -PSD_CLIP_TOL {
                return Err(Error::NotPositiveSemidefinite { min_eigenvalue: p });
            }
            roots.push(if p <= PSD_CLIP_TOL { 0.0 } else { p.sqrt() });
        }
        Ok(HermitianOperator {
            mat: eig.recombine(&roots),
        })
    }

    /// Smallest eigenvalue; handy for PSD validation.
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = self.eig();
        *eig.eigenvalues.last().expect("nonempty spectrum")
    }
}

/// Pauli σ_x.
pub fn pauli_x() -> HermitianOperator {
    HermitianOperator::from_bloch_coeffs(0.0, [1.0, 0.0, 0.0])
}

/// Pauli σ_y.
pub fn pauli_y() -> HermitianOperator {
    HermitianOperator::from_bloch_coeffs(0.0, [0.0, 1.0, 0.0])
}

/// Pauli σ_z.
pub fn pauli_z() -> HermitianOperator {
    HermitianOperator::from_bloch_coeffs(0.0, [0.0, 0.0, 1.0])
}

/// Spin operator `w·σ` for an arbitrary real vector `w`.
pub fn spin_operator(w: [f64; 3]) -> HermitianOperator {
    HermitianOperator::from_bloch_coeffs(0.0, w)
}

/// Result of a Hermitian eigendecomposition.
///
/// Eigenvalues are real and sorted descending; eigenvectors are the columns
/// of `vectors` and orthonormal to better than 1e-10.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    vectors: Matrix,
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn vector(&self, idx: usize) -> Vec<Complex> {
        (0..self.vectors.dim())
            .map(|row| self.vectors.get(row, idx))
            .collect()
    }

    /// `Σ f_i |e_i><e_i|` for arbitrary per-eigenvalue weights `f_i`.
    pub fn recombine(&self, weights: &[f64]) -> Matrix {
        let d = self.vectors.dim();
        debug_assert_eq!(weights.len(), d);
        let mut out = Matrix::zeros(d);
        for (idx, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..d {
                let vi = self.vectors.get(i, idx);
                for j in 0..d {
                    let v = out.get(i, j) + vi * self.vectors.get(j, idx).conj() * w;
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Rank-1 projector onto the idx-th eigenvector.
    pub fn projector(&self, idx: usize) -> HermitianOperator {
        let d = self.vectors.dim();
        let mut weights = vec![0.0; d];
        weights[idx] = 1.0;
        HermitianOperator::new(self.recombine(&weights)).expect("projector is finite")
    }

    pub fn reconstruct(&self) -> Matrix {
        self.recombine(&self.eigenvalues)
    }
}

/// Closed-form eigendecomposition for 2x2 Hermitian matrices.
fn eig_2x2(h: &HermitianOperator) -> EigenDecomposition {
    let a = h.get(0, 0).re;
    let c = h.get(1, 1).re;
    let b = h.get(0, 1);
    let mean = 0.5 * (a + c);
    let delta = 0.5 * (a - c);
    let radius = (delta * delta + b.norm_sqr()).sqrt();
    let hi = mean + radius;
    let lo = mean - radius;

    let scale = a.abs().max(c.abs()).max(b.norm()).max(1.0);
    if radius <= 1e-15 * scale {
        // Multiple of the identity: any orthonormal basis will do.
        return EigenDecomposition {
            eigenvalues: vec![hi, lo],
            vectors: Matrix::identity(2),
        };
    }

    // Two candidate eigenvectors for `hi`; pick the larger for stability.
    let cand1 = [b, Complex::new(hi - a, 0.0)];
    let cand2 = [Complex::new(hi - c, 0.0), b.conj()];
    let n1 = cand1[0].norm_sqr() + cand1[1].norm_sqr();
    let n2 = cand2[0].norm_sqr() + cand2[1].norm_sqr();
    let v = if n1 >= n2 { cand1 } else { cand2 };
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let v0 = v[0] / norm;
    let v1 = v[1] / norm;

    let mut vectors = Matrix::zeros(2);
    vectors.set(0, 0, v0);
    vectors.set(1, 0, v1);
    // Exact orthogonal complement in C^2.
    vectors.set(0, 1, -v1.conj());
    vectors.set(1, 1, v0.conj());

    EigenDecomposition {
        eigenvalues: vec![hi, lo],
        vectors,
    }
}

/// Cyclic Jacobi sweeps for complex Hermitian matrices of dimension 3..=8.
fn eig_jacobi(h: &HermitianOperator) -> EigenDecomposition {
    let d = h.dim();
    let mut a = h.matrix().clone();
    let mut v = Matrix::identity(d);
    let norm_floor = a.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    off += a.get(i, j).norm_sqr();
                }
            }
        }
        if off.sqrt() <= JACOBI_OFF_TOL * norm_floor {
            break;
        }

        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a.get(p, q);
                let m = apq.norm();
                if m <= 1e-300 {
                    continue;
                }
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let zeta = (app - aqq) / (2.0 * m);
                // Smaller-root rotation angle: t = tan(theta).
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (zeta * zeta + 1.0).sqrt())
                };
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                let phase = apq / m;

                // Plane rotation U: identity except in the (p, q) block
                //   [ cos        -sin·phase ]
                //   [ sin·conj(phase)  cos  ]
                let mut u = Matrix::identity(d);
                u.set(p, p, Complex::new(cos, 0.0));
                u.set(p, q, -phase * sin);
                u.set(q, p, phase.conj() * sin);
                u.set(q, q, Complex::new(cos, 0.0));

                a = u.adjoint().matmul(&a).matmul(&u);
                v = v.matmul(&u);
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    let diag: Vec<f64> = (0..d).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).expect("finite eigenvalues"));

    let mut vectors = Matrix::zeros(d);
    let mut eigenvalues = Vec::with_capacity(d);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(diag[src]);
        for row in 0..d {
            vectors.set(row, dst, v.get(row, src));
        }
    }

    EigenDecomposition {
        eigenvalues,
        vectors,
    }
}
