//! Evaluation of `γ(w) p(w)` where `p` vanishes on the zero sequence.
//!
//! Near a run of `m` equal zeros at `a`, `p(w)/(w - a)^m` is summed from the
//! Taylor coefficients `p^(l)(a)/l!` with `l >= m`; the remaining factors of
//! `γ` are smooth there and are evaluated at `w` itself. Away from the zeros
//! the plain product is used.

use num_complex::Complex64;

use crate::kernels::factorial;
use crate::sigma::ZeroSequence;

/// Taylor terms kept beyond the vanishing order.
const EXTRA_TERMS: usize = 8;

/// Relative radius `r_i = DESINGULAR_RADIUS (1 + |z_i|)` of the Taylor region.
pub const DESINGULAR_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone)]
pub(crate) struct Expansion {
    /// Point at which derivatives of `p` are taken.
    pub center: Complex64,
    /// `γ(w)` with the factors of the expanded run removed.
    pub deflated_gamma: Complex64,
    /// `(l, (w - a)^{l-m} / l!)`.
    pub weights: Vec<(usize, Complex64)>,
}

impl Expansion {
    pub fn at(zeros: &ZeroSequence, w: Complex64) -> Self {
        let near = zeros
            .groups()
            .into_iter()
            .map(|g| (g, (w - g.point).norm()))
            .filter(|(g, d)| *d < DESINGULAR_RADIUS * (1.0 + g.point.norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match near {
            None => Expansion {
                center: w,
                deflated_gamma: zeros.gamma_unchecked(w),
                weights: vec![(0, Complex64::new(1.0, 0.0))],
            },
            Some((g, _)) => {
                let a = g.point;
                let m = g.multiplicity;
                let deflated = zeros
                    .points()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i < g.start || *i >= g.start + m)
                    .fold(Complex64::new(1.0, 0.0), |acc, (_, &p)| acc / (w - p));
                let delta = w - a;
                let weights = (m..=m + EXTRA_TERMS)
                    .map(|l| (l, delta.powu((l - m) as u32) / factorial(l)))
                    .collect();
                Expansion {
                    center: a,
                    deflated_gamma: deflated,
                    weights,
                }
            }
        }
    }
}
