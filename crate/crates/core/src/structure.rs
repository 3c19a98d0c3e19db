//! The structure function `E_σ` of the derived space.
//!
//! `E_σ` is stored through its incomplete form
//!
//! ```text
//! p_E(w) = ∏(w - z_i) E_σ(w) = E(w) - Σ_j c_j Z_j(w),     p_E[z_i] = 0,
//! ```
//!
//! so the coefficients solve `G c = (E[z_1], ..., E[z_n])`. `F_σ` uses the same
//! recipe with `F = E*` and equals `E_σ*`.
//!
//! Three constructions are provided: [`SigmaStructureFunction::derive`] from a
//! Gram system, [`SigmaStructureFunction::derive_iterative`] adding one zero
//! at a time, and [`derive_epsilon_oracle`] splitting repeated zeros apart and
//! extrapolating back.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expansion::Expansion;
use crate::gram::{dot, GramSystem};
use crate::kernels::StructureFunction;
use crate::sigma::{backward_difference, bracket, ZeroSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Which {
    #[serde(rename = "E_sigma")]
    ESigma,
    #[serde(rename = "F_sigma")]
    FSigma,
}

#[derive(Debug, Clone)]
pub struct SigmaStructureFunction {
    base: StructureFunction,
    zeros: ZeroSequence,
    coeffs_e: Vec<Complex64>,
    coeffs_f: Vec<Complex64>,
}

impl SigmaStructureFunction {
    /// Solves for both coefficient vectors with the Gram factorization.
    pub fn derive(gs: &GramSystem) -> Result<Self> {
        let space = gs.space();
        let zeros = gs.zeros();
        let e = |w: Complex64, k: usize| space.eval_e(w, k);
        let f = |w: Complex64, k: usize| space.eval_e_star(w, k);
        let mut data_e = Vec::with_capacity(zeros.len());
        let mut data_f = Vec::with_capacity(zeros.len());
        for i in 0..zeros.len() {
            data_e.push(bracket(&e, zeros, i)?);
            data_f.push(bracket(&f, zeros, i)?);
        }
        Ok(SigmaStructureFunction {
            base: space.clone(),
            zeros: zeros.clone(),
            coeffs_e: gs.solve(&data_e),
            coeffs_f: gs.solve(&data_f),
        })
    }

    /// Adds distinct zeros one at a time.
    ///
    /// With `E_{k-1}` and the kernel `K^{k-1}` of the first `k-1` zeros, the
    /// single-zero step is
    /// `E_k(w) = (E_{k-1}(w) - E_{k-1}(z_k) K^{k-1}_{z_k}(w) / K^{k-1}_{z_k}(z_k)) / (w - z_k)`.
    /// Multiplying by `∏_{j<k}(w - z_j)` turns `K^{k-1}_{z_k}` into
    /// `conj(γ_{k-1}(z_k)) (Z_{z_k} - Σ_j β_j Z_j)`, so the coefficients on the
    /// original evaluators update as `c_k = λ`, `c_j -= λ β_j`.
    pub fn derive_iterative(space: &StructureFunction, zeros: &ZeroSequence) -> Result<Self> {
        if !zeros.is_distinct() {
            return Err(Error::Domain(
                "iterative construction needs distinct zeros".into(),
            ));
        }
        let mut current = SigmaStructureFunction {
            base: space.clone(),
            zeros: ZeroSequence::empty(),
            coeffs_e: Vec::new(),
            coeffs_f: Vec::new(),
        };
        let pts = zeros.points();
        for k in 0..pts.len() {
            let zk = pts[k];
            let previous = ZeroSequence::canonicalize(&pts[..k]);
            let gs = GramSystem::build(space, &previous)?;
            let diag = gs.sigma_kernel(zk, zk);
            if !(diag.re > 0.0) {
                return Err(Error::LinearDependence {
                    condition: f64::INFINITY,
                });
            }
            let beta = gs.solve_beta(zk);
            let gamma_conj = previous.gamma(zk)?.conj();
            let step = |coeffs: &[Complex64], value_at_zk: Complex64| -> Vec<Complex64> {
                let lambda = value_at_zk * gamma_conj / diag;
                let mut next: Vec<Complex64> = coeffs
                    .iter()
                    .zip(&beta)
                    .map(|(c, b)| c - lambda * b)
                    .collect();
                next.push(lambda);
                next
            };
            let coeffs_e = step(&current.coeffs_e, current.eval(Which::ESigma, zk));
            let coeffs_f = step(&current.coeffs_f, current.eval(Which::FSigma, zk));
            current = SigmaStructureFunction {
                base: space.clone(),
                zeros: ZeroSequence::canonicalize(&pts[..=k]),
                coeffs_e,
                coeffs_f,
            };
        }
        Ok(current)
    }

    pub fn base(&self) -> &StructureFunction {
        &self.base
    }

    pub fn zeros(&self) -> &ZeroSequence {
        &self.zeros
    }

    pub fn coeffs(&self, which: Which) -> &[Complex64] {
        match which {
            Which::ESigma => &self.coeffs_e,
            Which::FSigma => &self.coeffs_f,
        }
    }

    /// `p^(order)(w)` for the incomplete form.
    pub fn incomplete_derivative(&self, which: Which, w: Complex64, order: usize) -> Complex64 {
        let lead = match which {
            Which::ESigma => self.base.e_deriv(w, order),
            Which::FSigma => self.base.e_star_deriv(w, order),
        };
        let pts = self.zeros.points();
        let ks = self.zeros.confluence();
        let zw: Vec<Complex64> = (0..pts.len())
            .map(|j| self.base.mixed(order, ks[j], pts[j], w))
            .collect();
        lead - dot(self.coeffs(which), &zw)
    }

    pub fn incomplete(&self, which: Which, w: Complex64) -> Complex64 {
        self.incomplete_derivative(which, w, 0)
    }

    /// `p[z_i]` for every `i`; zero up to rounding.
    pub fn boundary_residuals(&self, which: Which) -> Vec<Complex64> {
        let pts = self.zeros.points();
        let ks = self.zeros.confluence();
        (0..pts.len())
            .map(|i| self.incomplete_derivative(which, pts[i], ks[i]))
            .collect()
    }

    /// `E_σ(w)` or `F_σ(w)`, with the limit taken at the imposed zeros.
    pub fn eval(&self, which: Which, w: Complex64) -> Complex64 {
        let ex = Expansion::at(&self.zeros, w);
        let sum: Complex64 = ex
            .weights
            .iter()
            .map(|&(l, weight)| weight * self.incomplete_derivative(which, ex.center, l))
            .sum();
        ex.deflated_gamma * sum
    }
}

/// Polynomial extrapolation to step zero (the Richardson tableau).
///
/// Two steps give the first-order elimination `(h1 f2 - h2 f1)/(h1 - h2)`;
/// each further step removes one more power of `h`.
pub fn richardson_extrapolate(steps: &[f64], values: &[Complex64]) -> Complex64 {
    assert_eq!(steps.len(), values.len());
    let mut t = values.to_vec();
    let n = t.len();
    for level in 1..n {
        for i in (level..n).rev() {
            let (hi, hj) = (steps[i], steps[i - level]);
            t[i] = (hj * t[i] - hi * t[i - 1]) / (hj - hi);
        }
    }
    t[n - 1]
}

/// `E_σ` approximated through split zeros `z_i - k_i ε`, extrapolated to `ε = 0`.
#[derive(Debug, Clone)]
pub struct EpsilonOracle {
    space: StructureFunction,
    zeros: ZeroSequence,
    schedule: Vec<f64>,
    splits: Vec<(GramSystem, SigmaStructureFunction)>,
}

/// Builds the split configurations for every step of the schedule.
pub fn derive_epsilon_oracle(
    space: &StructureFunction,
    zeros: &ZeroSequence,
    schedule: &[f64],
) -> Result<EpsilonOracle> {
    if schedule.is_empty() {
        return Err(Error::InvalidSchedule("empty schedule".into()));
    }
    if let Some(e) = schedule.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidSchedule(format!("step {e} is not positive")));
    }
    for (i, a) in schedule.iter().enumerate() {
        if schedule[..i].contains(a) {
            return Err(Error::InvalidSchedule(format!("step {a} repeated")));
        }
    }
    let mut splits = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let split: Vec<Complex64> = zeros
            .points()
            .iter()
            .zip(zeros.confluence())
            .map(|(&z, &k)| z - k as f64 * eps)
            .collect();
        let split_zeros = ZeroSequence::canonicalize(&split);
        if !split_zeros.is_distinct() {
            return Err(Error::InvalidSchedule(format!(
                "split points collide at epsilon {eps}"
            )));
        }
        let gs = GramSystem::build(space, &split_zeros)?;
        let ssf = SigmaStructureFunction::derive(&gs)?;
        splits.push((gs, ssf));
    }
    Ok(EpsilonOracle {
        space: space.clone(),
        zeros: zeros.clone(),
        schedule: schedule.to_vec(),
        splits,
    })
}

impl EpsilonOracle {
    pub fn schedule(&self) -> &[f64] {
        &self.schedule
    }

    fn extrapolate(&self, f: impl Fn(usize, f64) -> Complex64) -> Complex64 {
        let values: Vec<Complex64> = self
            .schedule
            .iter()
            .enumerate()
            .map(|(s, &eps)| f(s, eps))
            .collect();
        richardson_extrapolate(&self.schedule, &values)
    }

    /// Extrapolated incomplete form `e_σ(w)` (or its `F` analogue).
    pub fn incomplete(&self, which: Which, w: Complex64) -> Complex64 {
        self.extrapolate(|s, _| self.splits[s].1.incomplete(which, w))
    }

    /// Extrapolated incomplete kernel `k^σ(z, w)`.
    pub fn incomplete_kernel(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.extrapolate(|s, _| self.splits[s].0.incomplete_kernel(z, w))
    }

    /// Extrapolated `Z_j^ε[z_i^ε]`: backward differences of the kernel in
    /// `w` (order `k_i`) and in `conj z` (order `k_j`).
    pub fn gram_entry(&self, i: usize, j: usize) -> Complex64 {
        let pts = self.zeros.points();
        let ks = self.zeros.confluence();
        let (zi, zj, ki, kj) = (pts[i], pts[j], ks[i], ks[j]);
        self.extrapolate(|_, eps| {
            // conj(z_j - m ε) = conj(z_j) - m ε for real ε
            backward_difference(
                |w| {
                    backward_difference(
                        |zeta| self.space.kernel(zeta.conj(), w),
                        zj.conj(),
                        kj,
                        eps,
                    )
                },
                zi,
                ki,
                eps,
            )
        })
    }
}
