//! Finite zero sequences with repetitions.
//!
//! Equal zeros are stored contiguously. The confluence index `k_i` is the
//! offset of position `i` inside its run, so `[a, a, a, b]` has confluence
//! `[0, 1, 2, 0]` and the bracket `f[z_i]` is `f^(k_i)(z_i)`.
//!
//! Indices in this module are 0-based.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::binomial;

/// Exact bitwise identity of a complex number.
fn key(z: Complex64) -> (u64, u64) {
    (z.re.to_bits(), z.im.to_bits())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSequence {
    points: Vec<Complex64>,
    confluence: Vec<usize>,
}

/// A run of equal zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroGroup {
    pub point: Complex64,
    pub start: usize,
    pub multiplicity: usize,
}

impl ZeroSequence {
    pub fn empty() -> Self {
        ZeroSequence {
            points: Vec::new(),
            confluence: Vec::new(),
        }
    }

    /// Groups bitwise-equal values together, ordered by first appearance.
    pub fn canonicalize(points: &[Complex64]) -> Self {
        let mut order: Vec<(Complex64, usize)> = Vec::new();
        let mut slot: HashMap<(u64, u64), usize> = HashMap::new();
        for &z in points {
            match slot.get(&key(z)) {
                Some(&s) => order[s].1 += 1,
                None => {
                    slot.insert(key(z), order.len());
                    order.push((z, 1));
                }
            }
        }
        let mut out = Self::empty();
        for (z, count) in order {
            for k in 0..count {
                out.points.push(z);
                out.confluence.push(k);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn confluence(&self) -> &[usize] {
        &self.confluence
    }

    pub fn max_confluence(&self) -> usize {
        self.confluence.iter().copied().max().unwrap_or(0)
    }

    pub fn is_distinct(&self) -> bool {
        self.confluence.iter().all(|&k| k == 0)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.points.iter().any(|&p| key(p) == key(z))
    }

    pub fn groups(&self) -> Vec<ZeroGroup> {
        let mut out: Vec<ZeroGroup> = Vec::new();
        for (i, (&z, &k)) in self.points.iter().zip(&self.confluence).enumerate() {
            if k == 0 {
                out.push(ZeroGroup {
                    point: z,
                    start: i,
                    multiplicity: 1,
                });
            } else if let Some(g) = out.last_mut() {
                g.multiplicity += 1;
            }
        }
        out
    }

    /// `γ(z) = ∏ 1/(z - z_i)`.
    pub fn gamma(&self, z: Complex64) -> Result<Complex64> {
        if self.contains(z) {
            return Err(Error::Pole(z));
        }
        Ok(self.gamma_unchecked(z))
    }

    pub(crate) fn gamma_unchecked(&self, z: Complex64) -> Complex64 {
        self.points
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &p| acc / (z - p))
    }

    /// `∏ (z - z_i)`.
    pub fn vanishing_polynomial(&self, z: Complex64) -> Complex64 {
        self.points
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &p| acc * (z - p))
    }
}

/// An analytic function that can report its derivatives.
pub trait Analytic {
    fn derivative(&self, w: Complex64, order: usize) -> Result<Complex64>;
}

impl<F> Analytic for F
where
    F: Fn(Complex64, usize) -> Result<Complex64>,
{
    fn derivative(&self, w: Complex64, order: usize) -> Result<Complex64> {
        self(w, order)
    }
}

/// `f[z_i] = f^(k_i)(z_i)`.
pub fn bracket(f: &impl Analytic, zeros: &ZeroSequence, i: usize) -> Result<Complex64> {
    let (z, k) = at(zeros, i)?;
    f.derivative(z, k)
}

/// `f[z_i^ε] = ε^{-k_i} Σ_{l=0}^{k_i} (-1)^l C(k_i, l) f(z_i - lε)`, a backward
/// difference converging to [`bracket`] at first order in `ε`.
pub fn bracket_eps(
    f: impl Fn(Complex64) -> Complex64,
    zeros: &ZeroSequence,
    i: usize,
    eps: f64,
) -> Result<Complex64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let (z, k) = at(zeros, i)?;
    Ok(backward_difference(f, z, k, eps))
}

pub(crate) fn backward_difference(
    f: impl Fn(Complex64) -> Complex64,
    z: Complex64,
    k: usize,
    eps: f64,
) -> Complex64 {
    let sum: Complex64 = (0..=k)
        .map(|l| {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(k, l) * f(z - l as f64 * eps)
        })
        .sum();
    sum / eps.powi(k as i32)
}

fn at(zeros: &ZeroSequence, i: usize) -> Result<(Complex64, usize)> {
    match (zeros.points.get(i), zeros.confluence.get(i)) {
        (Some(&z), Some(&k)) => Ok((z, k)),
        _ => Err(Error::Domain(format!(
            "index {i} out of range for {} zeros",
            zeros.len()
        ))),
    }
}
