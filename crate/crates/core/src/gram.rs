//! Gram system of the evaluators at the zero sequence and the reproducing
//! kernel of the derived space.
//!
//! Entry `(i, j)` is `(Z_i, Z_j) = ∂_w^{k_i} ∂_{conj z}^{k_j} Z_z(w)` at
//! `z = z_j`, `w = z_i`. The incomplete kernel is the residual of projecting
//! `Z_z` away from the span of the `Z_j`,
//!
//! ```text
//! k(z, w) = Z_z(w) - Σ_j β_j(z) Z_j(w),     Σ_j G[i][j] β_j = Z_z[z_i],
//! ```
//!
//! and the kernel of the derived space is `K_z(w) = γ(w) conj(γ(z)) k(z, w)`.
//! A bordered-determinant evaluation of the same quantity is kept as an
//! independent route for cross-checking.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expansion::Expansion;
use crate::kernels::StructureFunction;
use crate::linalg::{condition_estimate, determinant, CMatrix, Cholesky, Lu};
use crate::sigma::ZeroSequence;

/// Above this 1-norm condition estimate the evaluators are declared dependent.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct GramSystem {
    space: StructureFunction,
    zeros: ZeroSequence,
    matrix: CMatrix,
    factor: Cholesky,
    det: f64,
    condition_estimate: f64,
}

impl GramSystem {
    pub fn build(space: &StructureFunction, zeros: &ZeroSequence) -> Result<Self> {
        let kmax = zeros.max_confluence();
        if kmax > space.max_derivative_order() {
            return Err(Error::UnsupportedOrder {
                requested: kmax,
                max: space.max_derivative_order(),
            });
        }
        let n = zeros.len();
        let pts = zeros.points();
        let ks = zeros.confluence();
        let raw = CMatrix::from_fn(n, |i, j| space.mixed(ks[i], ks[j], pts[j], pts[i]));
        let matrix = raw.hermitian_part();
        if (0..n).any(|i| {
            (0..n).any(|j| !matrix[(i, j)].re.is_finite() || !matrix[(i, j)].im.is_finite())
        }) {
            return Err(Error::LinearDependence {
                condition: f64::INFINITY,
            });
        }
        let Some(factor) = Cholesky::factor(&matrix) else {
            // a non-positive pivot: report the dependence with the condition of the pivoted LU
            let lu = Lu::factor(&matrix);
            let condition = if lu.is_singular() {
                f64::INFINITY
            } else {
                condition_estimate(&matrix, |b| lu.solve(b))
            };
            return Err(Error::LinearDependence { condition });
        };
        let condition = condition_estimate(&matrix, |b| factor.solve(b));
        if !(condition <= CONDITION_LIMIT) {
            return Err(Error::LinearDependence { condition });
        }
        Ok(GramSystem {
            space: space.clone(),
            zeros: zeros.clone(),
            det: factor.det(),
            matrix,
            factor,
            condition_estimate: condition,
        })
    }

    pub fn space(&self) -> &StructureFunction {
        &self.space
    }

    pub fn zeros(&self) -> &ZeroSequence {
        &self.zeros
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// The Gram determinant; `1` for the empty sequence.
    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// Solves `G x = rhs` with the stored factorization.
    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        self.factor.solve(rhs)
    }

    /// `Z_z[z_i]`, differentiated `q` times in `conj z`.
    fn boundary_data(&self, z: Complex64, q: usize) -> Vec<Complex64> {
        let pts = self.zeros.points();
        let ks = self.zeros.confluence();
        (0..self.len())
            .map(|i| self.space.mixed(ks[i], q, z, pts[i]))
            .collect()
    }

    /// `Z_j^(p)(w)` for every `j`.
    pub fn evaluator_values(&self, w: Complex64, p: usize) -> Vec<Complex64> {
        let pts = self.zeros.points();
        let ks = self.zeros.confluence();
        (0..self.len())
            .map(|j| self.space.mixed(p, ks[j], pts[j], w))
            .collect()
    }

    /// Projection coefficients of `Z_z` onto the span of the evaluators.
    pub fn solve_beta(&self, z: Complex64) -> Vec<Complex64> {
        self.solve(&self.boundary_data(z, 0))
    }

    /// `r[z_i]` for the residual `r = Z_z - Σ β_j Z_j`; zero up to rounding.
    pub fn projection_residual(&self, z: Complex64) -> Vec<Complex64> {
        let rhs = self.boundary_data(z, 0);
        let beta = self.solve(&rhs);
        let g_beta = self.matrix.mul_vec(&beta);
        rhs.iter().zip(&g_beta).map(|(r, g)| r - g).collect()
    }

    /// `k(z, w) = Z_z(w) - Σ β_j(z) Z_j(w)`, entire in `w` and `conj z`.
    pub fn incomplete_kernel(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.incomplete_kernel_partial(0, 0, z, w)
    }

    /// `∂_w^p ∂_{conj z}^q k(z, w)`.
    pub fn incomplete_kernel_partial(
        &self,
        p: usize,
        q: usize,
        z: Complex64,
        w: Complex64,
    ) -> Complex64 {
        let beta = self.solve(&self.boundary_data(z, q));
        let zw = self.evaluator_values(w, p);
        self.space.mixed(p, q, z, w) - dot(&beta, &zw)
    }

    /// `K_z(w)` of the derived space, including the limits at the zeros.
    ///
    /// When `w` (or `z`) lies within `1e-3 (1 + |z_i|)` of a zero of
    /// multiplicity `m`, the vanishing of `k` is divided out through its
    /// Taylor coefficients of order `>= m`. When both lie near zeros the
    /// expansion is taken in both variables at once.
    pub fn sigma_kernel(&self, z: Complex64, w: Complex64) -> Complex64 {
        if self.is_empty() {
            return self.space.kernel(z, w);
        }
        let ew = Expansion::at(&self.zeros, w);
        let ez = Expansion::at(&self.zeros, z);
        let zw: Vec<(usize, Complex64, Vec<Complex64>)> = ew
            .weights
            .iter()
            .map(|&(p, weight)| (p, weight, self.evaluator_values(ew.center, p)))
            .collect();
        let mut total = Complex64::new(0.0, 0.0);
        for &(q, wq) in &ez.weights {
            let beta = self.solve(&self.boundary_data(ez.center, q));
            for (p, wp, values) in &zw {
                let d = self.space.mixed(*p, q, ez.center, ew.center) - dot(&beta, values);
                total += *wp * wq.conj() * d;
            }
        }
        ez.deflated_gamma.conj() * ew.deflated_gamma * total
    }

    /// `K_z(w)` from the bordered `(n+1)×(n+1)` determinant divided by `G_n`.
    pub fn sigma_kernel_det(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        for p in [z, w] {
            if self.zeros.contains(p) {
                return Err(Error::Domain(format!(
                    "{p} is an imposed zero; use the limit evaluation"
                )));
            }
        }
        let n = self.len();
        let pts = self.zeros.points();
        let ks = self.zeros.confluence();
        let bordered = CMatrix::from_fn(n + 1, |i, j| match (i < n, j < n) {
            (true, true) => self.matrix[(i, j)],
            (true, false) => self.space.mixed(ks[i], 0, z, pts[i]),
            (false, true) => self.space.mixed(0, ks[j], pts[j], w),
            (false, false) => self.space.kernel(z, w),
        });
        let gamma = self.zeros.gamma_unchecked(w) * self.zeros.gamma_unchecked(z).conj();
        Ok(gamma * determinant(&bordered) / self.det)
    }
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
