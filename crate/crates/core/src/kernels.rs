//! Structure functions and the reproducing kernel of `H(E)`.
//!
//! The kernel is
//!
//! ```text
//!            conj(E(z)) E(w) - conj(E*(z)) E*(w)
//! Z_z(w) = ----------------------------------------      E*(w) = conj(E(conj w))
//!                     i (conj z - w)
//! ```
//!
//! It is analytic in `w` and in `ζ = conj z`. Mixed partials are taken as
//! `∂_w^a ∂_ζ^b Z`, which is what confluent Gram entries need.
//!
//! Two families are built in. For Paley-Wiener `E(w) = exp(-ixw)` the kernel
//! is `∫_{-x}^{x} exp(i(w - conj z)t) dt` and every mixed partial is a moment
//! integral evaluated in closed form. For polynomial `E = ∏(w - w_j)` the
//! kernel is expanded in powers of `conj z - w`, a finite sum with no
//! division. The generic route for other `E` differentiates the quotient by
//! Leibniz' rule and uses the same expansion near the removable singularity.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Default guarantee on derivative orders for both families.
pub const DEFAULT_MAX_DERIVATIVE_ORDER: usize = 16;

/// Below this `|u x|` the sinc factor is summed from its Taylor polynomial.
pub const SINC_SERIES_RADIUS: f64 = 1e-3;

/// Below this `|conj z - w|` the generic route uses the diagonal expansion.
const GENERIC_TAYLOR_RADIUS: f64 = 0.5;

/// Number of diagonal Taylor terms kept for non-polynomial `E`.
const GENERIC_TAYLOR_TERMS: usize = 40;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `E(w) = exp(-ixw)`, the Paley-Wiener space of type `x`.
    PaleyWiener { x: f64 },
    /// `E(w) = ∏ (w - w_j)` with every `Im w_j < 0`.
    PolynomialHB { roots: Vec<Complex64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureFunction {
    family: Family,
    max_derivative_order: usize,
}

impl StructureFunction {
    pub fn paley_wiener(x: f64) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::InvalidStructure(format!(
                "Paley-Wiener type must be positive and finite, got {x}"
            )));
        }
        Ok(StructureFunction {
            family: Family::PaleyWiener { x },
            max_derivative_order: DEFAULT_MAX_DERIVATIVE_ORDER,
        })
    }

    pub fn polynomial_hb(roots: Vec<Complex64>) -> Result<Self> {
        if let Some(r) = roots.iter().find(|r| !(r.im < 0.0) || !r.re.is_finite()) {
            return Err(Error::InvalidStructure(format!(
                "polynomial root {r} must lie strictly in the lower half-plane"
            )));
        }
        Ok(StructureFunction {
            family: Family::PolynomialHB { roots },
            max_derivative_order: DEFAULT_MAX_DERIVATIVE_ORDER,
        })
    }

    pub fn from_family(family: Family) -> Result<Self> {
        match family {
            Family::PaleyWiener { x } => Self::paley_wiener(x),
            Family::PolynomialHB { roots } => Self::polynomial_hb(roots),
        }
    }

    pub fn with_max_derivative_order(mut self, order: usize) -> Self {
        self.max_derivative_order = order;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn max_derivative_order(&self) -> usize {
        self.max_derivative_order
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if order > self.max_derivative_order {
            Err(Error::UnsupportedOrder {
                requested: order,
                max: self.max_derivative_order,
            })
        } else {
            Ok(())
        }
    }

    /// `E^(order)(w)`.
    pub fn eval_e(&self, w: Complex64, order: usize) -> Result<Complex64> {
        self.check_order(order)?;
        Ok(self.e_deriv(w, order))
    }

    /// `(E*)^(order)(w) = conj(E^(order)(conj w))`.
    pub fn eval_e_star(&self, w: Complex64, order: usize) -> Result<Complex64> {
        self.check_order(order)?;
        Ok(self.e_star_deriv(w, order))
    }

    pub(crate) fn e_deriv(&self, w: Complex64, order: usize) -> Complex64 {
        match &self.family {
            Family::PaleyWiener { x } => {
                Complex64::new(0.0, -x).powu(order as u32) * (Complex64::new(0.0, -x) * w).exp()
            }
            Family::PolynomialHB { roots } => poly_derivative(roots, w, order),
        }
    }

    pub(crate) fn e_star_deriv(&self, w: Complex64, order: usize) -> Complex64 {
        self.e_deriv(w.conj(), order).conj()
    }

    /// `|E(z)|² - |E*(z)|²`, positive on the upper half-plane.
    pub fn hb_margin(&self, z: Complex64) -> Result<f64> {
        if !(z.im > 0.0) {
            return Err(Error::Domain(format!(
                "Hermite-Biehler margin needs Im z > 0, got {z}"
            )));
        }
        Ok(self.e_deriv(z, 0).norm_sqr() - self.e_star_deriv(z, 0).norm_sqr())
    }

    /// The reproducing kernel `Z_z(w)` of `H(E)`.
    pub fn kernel(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.mixed(0, 0, z, w)
    }

    /// `∂_w^a ∂_{conj z}^b Z_z(w)`.
    ///
    /// The polynomial family goes through the generic route and requires
    /// `a + b <= max_derivative_order`; the Paley-Wiener closed form has no limit.
    pub fn kernel_mixed_partial(
        &self,
        a: usize,
        b: usize,
        z: Complex64,
        w: Complex64,
    ) -> Result<Complex64> {
        if let Family::PolynomialHB { .. } = self.family {
            self.check_order(a + b)?;
        }
        Ok(self.mixed(a, b, z, w))
    }

    pub(crate) fn mixed(&self, a: usize, b: usize, z: Complex64, w: Complex64) -> Complex64 {
        match &self.family {
            Family::PaleyWiener { x } => pw_mixed_partial(*x, a, b, z, w),
            Family::PolynomialHB { .. } => self.kernel_generic(a, b, z, w),
        }
    }

    /// Mixed partial of the kernel computed from `E` and `E*` alone, for any family.
    ///
    /// For polynomials the expansion about the diagonal is a finite sum and is
    /// used everywhere; otherwise it is used within `GENERIC_TAYLOR_RADIUS`.
    pub fn kernel_generic(&self, a: usize, b: usize, z: Complex64, w: Complex64) -> Complex64 {
        let zeta = z.conj();
        let d = zeta - w;
        let finite = matches!(self.family, Family::PolynomialHB { .. });
        if finite || d.norm() < GENERIC_TAYLOR_RADIUS {
            self.generic_near_diagonal(a, b, d, w)
        } else {
            self.generic_leibniz(a, b, zeta, w)
        }
    }

    // Φ(ζ, w) = N(ζ, w) h(ζ, w) with N = E*(ζ)E(w) - E(ζ)E*(w), h = -i/(ζ - w).
    fn generic_leibniz(&self, a: usize, b: usize, zeta: Complex64, w: Complex64) -> Complex64 {
        let d = zeta - w;
        let e_w: Vec<Complex64> = (0..=a).map(|p| self.e_deriv(w, p)).collect();
        let es_w: Vec<Complex64> = (0..=a).map(|p| self.e_star_deriv(w, p)).collect();
        let e_z: Vec<Complex64> = (0..=b).map(|q| self.e_deriv(zeta, q)).collect();
        let es_z: Vec<Complex64> = (0..=b).map(|q| self.e_star_deriv(zeta, q)).collect();
        let inv_d = d.inv();
        let mut total = Complex64::new(0.0, 0.0);
        for p in 0..=a {
            for q in 0..=b {
                let n_pq = es_z[q] * e_w[p] - e_z[q] * es_w[p];
                let (r, s) = (a - p, b - q);
                let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                let h = -I * sign * factorial(r + s) * inv_d.powu((r + s + 1) as u32);
                total += binomial(a, p) * binomial(b, q) * n_pq * h;
            }
        }
        total
    }

    // With ζ = w + d, Φ = -i Σ_{m≥1} d^{m-1}/m! C_m(w), C_m = E*^(m) E - E^(m) E*.
    // Then ∂_w|_ζ = ∂_w|_d - ∂_d and ∂_ζ = ∂_d.
    fn generic_near_diagonal(&self, a: usize, b: usize, d: Complex64, w: Complex64) -> Complex64 {
        let terms = match &self.family {
            Family::PolynomialHB { roots } => roots.len(),
            Family::PaleyWiener { .. } => GENERIC_TAYLOR_TERMS + a + b,
        };
        let top = terms + a + 1;
        let e: Vec<Complex64> = (0..=top).map(|k| self.e_deriv(w, k)).collect();
        let es: Vec<Complex64> = (0..=top).map(|k| self.e_star_deriv(w, k)).collect();
        // C_m^(j)(w)
        let c_mj = |m: usize, j: usize| -> Complex64 {
            (0..=j)
                .map(|l| binomial(j, l) * (es[m + l] * e[j - l] - e[m + l] * es[j - l]))
                .sum()
        };
        let mut total = Complex64::new(0.0, 0.0);
        for j in 0..=a {
            let q = a - j + b;
            let sign = if (a - j) % 2 == 0 { 1.0 } else { -1.0 };
            let mut inner = Complex64::new(0.0, 0.0);
            for m in (q + 1)..=terms {
                // ∂_d^q d^{m-1} = (m-1)!/(m-1-q)! d^{m-1-q}
                let coef = falling(m - 1, q) / factorial(m);
                inner += coef * d.powu((m - 1 - q) as u32) * c_mj(m, j);
            }
            total += sign * binomial(a, j) * inner;
        }
        -I * total
    }
}

/// `m! e_{N-m}(w - w_1, ..., w - w_N)`, the exact m-th derivative of `∏(w - w_j)`.
fn poly_derivative(roots: &[Complex64], w: Complex64, order: usize) -> Complex64 {
    let n = roots.len();
    if order > n {
        return Complex64::new(0.0, 0.0);
    }
    let mut esym = vec![Complex64::new(0.0, 0.0); n + 1];
    esym[0] = Complex64::new(1.0, 0.0);
    for (j, r) in roots.iter().enumerate() {
        let t = w - r;
        for k in (1..=j + 1).rev() {
            let prev = esym[k - 1];
            esym[k] += t * prev;
        }
    }
    factorial(order) * esym[n - order]
}

/// `∂_w^a ∂_ζ^b` of `∫_{-x}^{x} e^{iwt} e^{-iζt} dt` at `ζ = conj z`,
/// that is `i^a (-i)^b ∫ t^{a+b} e^{i(w - conj z)t} dt`.
fn pw_mixed_partial(x: f64, a: usize, b: usize, z: Complex64, w: Complex64) -> Complex64 {
    let phase = match (a + 3 * b) % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => I,
        2 => Complex64::new(-1.0, 0.0),
        _ => -I,
    };
    phase * moment_integral(x, a + b, w - z.conj())
}

/// `sin(v)/v` from its degree-8 Taylor polynomial, for small `|v|`.
pub fn sinc_series(v: Complex64) -> Complex64 {
    let v2 = v * v;
    1.0 - v2 / 6.0 * (1.0 - v2 / 20.0 * (1.0 - v2 / 42.0 * (1.0 - v2 / 72.0)))
}

/// `∫_{-x}^{x} t^p e^{iut} dt`.
///
/// For `p = 0` this is `2 sin(ux)/u`. Higher moments use the power series in
/// `u` while `|ux| < p + 2` and the upward recursion
/// `I_p = (x^p e^{iux} - (-x)^p e^{-iux})/(iu) - p I_{p-1}/(iu)` beyond,
/// where every step contracts the propagated error.
pub fn moment_integral(x: f64, p: usize, u: Complex64) -> Complex64 {
    let v = u * x;
    if p == 0 {
        return if v.norm() < SINC_SERIES_RADIUS {
            2.0 * x * sinc_series(v)
        } else {
            2.0 * v.sin() / u
        };
    }
    if v.norm() < (p + 2) as f64 {
        return moment_series(x, p, u);
    }
    let iu = I * u;
    let ep = (I * v).exp();
    let em = (-I * v).exp();
    let mut acc = 2.0 * v.sin() / u;
    for q in 1..=p {
        let xq = x.powi(q as i32);
        let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
        acc = (xq * ep - sign * xq * em) / iu - (q as f64) * acc / iu;
    }
    acc
}

fn moment_series(x: f64, p: usize, u: Complex64) -> Complex64 {
    let s = I * u * x;
    let scale = 2.0 * x.powi(p as i32 + 1);
    let mut pow = Complex64::new(1.0, 0.0); // s^k / k!
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..400usize {
        if (p + k) % 2 == 0 {
            let term = pow * scale / ((p + k + 1) as f64);
            sum += term;
            if k as f64 > s.norm() && term.norm() <= 1e-18 * sum.norm() {
                break;
            }
        }
        pow = pow * s / ((k + 1) as f64);
    }
    sum
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `n (n-1) ... (n-k+1)`.
fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pw1() -> StructureFunction {
        StructureFunction::paley_wiener(1.0).unwrap()
    }

    /// Composite Simpson on `∫_{-x}^{x} t^p e^{iut} dt`.
    fn simpson_moment(x: f64, p: usize, u: Complex64) -> Complex64 {
        let n = 20_000;
        let h = 2.0 * x / n as f64;
        let f = |t: f64| t.powi(p as i32) * (I * u * t).exp();
        let mut s = f(-x) + f(x);
        for k in 1..n {
            let t = -x + k as f64 * h;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(t);
        }
        s * h / 3.0
    }

    #[test]
    fn eval_e_examples() {
        let sf = pw1();
        assert_eq!(sf.eval_e(c(0.0, 0.0), 0).unwrap(), c(1.0, 0.0));
        let e = sf.eval_e(c(0.0, 1.0), 0).unwrap();
        assert!((e - c(std::f64::consts::E, 0.0)).norm() < 1e-15);
        let poly = StructureFunction::polynomial_hb(vec![c(0.0, -1.0)]).unwrap();
        assert_eq!(poly.eval_e(c(0.0, 0.0), 1).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn eval_e_star_examples() {
        let sf = pw1();
        assert_eq!(sf.eval_e_star(c(0.0, 0.0), 0).unwrap(), c(1.0, 0.0));
        let v = sf.eval_e_star(c(0.0, 1.0), 0).unwrap();
        assert!((v - c((-1.0f64).exp(), 0.0)).norm() < 1e-16);
        // conj(E(conj i)) = conj(-i + i) = 0
        let poly = StructureFunction::polynomial_hb(vec![c(0.0, -1.0)]).unwrap();
        let brute = poly.eval_e(c(0.0, 1.0).conj(), 0).unwrap().conj();
        assert_eq!(poly.eval_e_star(c(0.0, 1.0), 0).unwrap(), brute);
        assert_eq!(brute, c(0.0, 0.0));
    }

    #[test]
    fn derivative_budget_is_enforced() {
        let sf = pw1().with_max_derivative_order(3);
        assert_eq!(
            sf.eval_e(c(0.0, 0.0), 4),
            Err(Error::UnsupportedOrder {
                requested: 4,
                max: 3
            })
        );
        let poly = StructureFunction::polynomial_hb(vec![c(0.0, -1.0)])
            .unwrap()
            .with_max_derivative_order(2);
        assert!(poly
            .kernel_mixed_partial(2, 1, c(0.0, 1.0), c(0.0, 0.0))
            .is_err());
        assert!(pw1()
            .with_max_derivative_order(2)
            .kernel_mixed_partial(5, 5, c(0.0, 1.0), c(0.0, 0.0))
            .is_ok());
    }

    #[test]
    fn invalid_families_are_rejected() {
        assert!(StructureFunction::paley_wiener(0.0).is_err());
        assert!(StructureFunction::paley_wiener(f64::NAN).is_err());
        assert!(StructureFunction::polynomial_hb(vec![c(1.0, 0.0)]).is_err());
        assert!(StructureFunction::polynomial_hb(vec![c(1.0, 0.5)]).is_err());
    }

    #[test]
    fn polynomial_derivatives_match_expanded_coefficients() {
        // (w + i)(w + 2i)(w - 1 + 0.5i) expanded by hand-free convolution
        let roots = vec![c(0.0, -1.0), c(0.0, -2.0), c(1.0, -0.5)];
        let mut coeffs = vec![c(1.0, 0.0)];
        for r in &roots {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (k, a) in coeffs.iter().enumerate() {
                next[k + 1] += *a;
                next[k] -= *a * r;
            }
            coeffs = next;
        }
        let w = c(0.7, -0.3);
        for order in 0..5 {
            let mut expect = c(0.0, 0.0);
            for (k, a) in coeffs.iter().enumerate().skip(order) {
                expect += *a * falling(k, order) * w.powu((k - order) as u32);
            }
            assert!((poly_derivative(&roots, w, order) - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn kernel_examples() {
        let sf = pw1();
        assert!((sf.kernel(c(0.0, 0.0), c(0.0, 0.0)) - c(2.0, 0.0)).norm() < 1e-15);
        assert!(sf.kernel(c(0.0, 0.0), c(std::f64::consts::PI, 0.0)).norm() < 1e-15);
        let k = sf.kernel(c(0.0, 1.0), c(0.0, 1.0));
        let quad = simpson_moment(1.0, 0, c(0.0, 1.0) - c(0.0, -1.0));
        assert!((k - c(2.0f64.sinh(), 0.0)).norm() < 1e-14);
        assert!((k - quad).norm() < 1e-10);
        // sinh 2 frozen from the quadrature oracle
        assert!((k.re - 3.626_860_407_847_019).abs() < 1e-12);
    }

    #[test]
    fn mixed_partial_examples() {
        let sf = pw1();
        let z = c(0.3, 0.8);
        let w = c(-1.1, 0.2);
        assert_eq!(
            sf.kernel_mixed_partial(0, 0, z, w).unwrap(),
            sf.kernel(z, w)
        );
        let v = sf
            .kernel_mixed_partial(1, 1, c(0.0, 0.0), c(0.0, 0.0))
            .unwrap();
        assert!((v - c(2.0 / 3.0, 0.0)).norm() < 1e-15);
        let v = sf
            .kernel_mixed_partial(1, 0, c(0.0, 0.0), c(0.0, 0.0))
            .unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn moments_match_quadrature_across_regimes() {
        for &x in &[0.5, 1.0, 2.0] {
            for p in 0..7 {
                for &u in &[
                    c(0.0, 0.0),
                    c(1e-4, 0.0),
                    c(0.5, 0.2),
                    c(3.0, -1.0),
                    c(-6.0, 4.0),
                    c(0.1, 5.5),
                ] {
                    let got = moment_integral(x, p, u);
                    let quad = simpson_moment(x, p, u);
                    let scale = quad.norm().max(1e-3);
                    assert!(
                        (got - quad).norm() / scale < 1e-9,
                        "x={x} p={p} u={u}: {got} vs {quad}"
                    );
                }
            }
        }
    }

    #[test]
    fn sinc_series_matches_direct_outside_cancellation() {
        for &v in &[c(9e-4, 0.0), c(0.0, 9e-4), c(5e-4, -5e-4)] {
            let direct = v.sin() / v;
            assert!((sinc_series(v) - direct).norm() < 1e-15);
        }
    }

    #[test]
    fn generic_route_reproduces_paley_wiener_closed_form() {
        let sf = StructureFunction::paley_wiener(1.3).unwrap();
        let pts = [
            (c(0.2, 0.9), c(-0.4, 1.1)),
            (c(0.2, 0.9), c(0.2, -0.9)),
            (c(1.5, -0.3), c(0.4, 2.0)),
            (c(0.0, 1.0), c(0.01, -1.02)),
        ];
        for (z, w) in pts {
            for a in 0..3 {
                for b in 0..3 {
                    let closed = sf.mixed(a, b, z, w);
                    let generic = sf.kernel_generic(a, b, z, w);
                    assert!(
                        (closed - generic).norm() <= 1e-10 * closed.norm().max(1.0),
                        "a={a} b={b} z={z} w={w}: {closed} vs {generic}"
                    );
                }
            }
        }
    }

    #[test]
    fn polynomial_expansion_agrees_with_leibniz_off_diagonal() {
        let sf = StructureFunction::polynomial_hb(vec![c(0.0, -1.0), c(0.5, -2.0), c(-1.0, -0.5)])
            .unwrap();
        for (z, w) in [
            (c(0.2, 0.9), c(-0.4, 1.1)),
            (c(1.5, -0.3), c(0.4, 2.0)),
            (c(-2.0, 1.0), c(2.5, 0.5)),
        ] {
            for a in 0..5 {
                for b in 0..5 {
                    let expansion = sf.kernel_generic(a, b, z, w);
                    let leibniz = sf.generic_leibniz(a, b, z.conj(), w);
                    assert!(
                        (expansion - leibniz).norm() <= 1e-9 * leibniz.norm().max(1.0),
                        "a={a} b={b}: {expansion} vs {leibniz}"
                    );
                }
            }
        }
        // degree 2 in each variable
        assert!(sf.kernel_generic(3, 0, c(0.3, 0.1), c(-1.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn hb_margin_examples() {
        let m = pw1().hb_margin(c(0.0, 1.0)).unwrap();
        let expect = (2.0f64).exp() - (-2.0f64).exp();
        assert!((m - expect).abs() < 1e-13);
        assert!((m - 7.253_720_815_694_038).abs() < 1e-12);
        let poly = StructureFunction::polynomial_hb(vec![c(0.0, -1.0)]).unwrap();
        assert!((poly.hb_margin(c(0.0, 1.0)).unwrap() - 4.0).abs() < 1e-14);
        assert!(pw1().hb_margin(c(0.0, 0.001)).unwrap() > 0.0);
        assert!(matches!(
            pw1().hb_margin(c(1.0, 0.0)),
            Err(Error::Domain(_))
        ));
    }
}
