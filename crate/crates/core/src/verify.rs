//! Identity checks with residual reports.
//!
//! Every check samples its evaluation points from a ChaCha8 generator seeded
//! with a `u64` (`rand_chacha::ChaCha8Rng::seed_from_u64`), so a report is a
//! pure function of its inputs and seed. Tolerances are scaled by the Gram
//! condition estimate: `base * max(1, condition / 1e4)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gram::GramSystem;
use crate::kernels::{Family, StructureFunction};
use crate::linalg::{determinant, CMatrix};
use crate::sigma::ZeroSequence;
use crate::structure::{SigmaStructureFunction, Which};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Radius of the sampling disk.
pub const SAMPLE_RADIUS: f64 = 3.0;

/// Samples with `|conj z - w|` below this are redrawn.
pub const DIAGONAL_EXCLUSION: f64 = 1e-3;

/// Upper half-plane samples need at least this imaginary part.
pub const MIN_IMAG: f64 = 1e-2;

pub const KERNEL_FORMULA: &str = "kernel_formula";
pub const STAR_RELATION: &str = "star_relation";
pub const HB_INHERITANCE: &str = "hb_inheritance";
pub const PROJECTION: &str = "projection";
pub const N1_STAR: &str = "n1_star";
pub const N1_LINEAR: &str = "n1_linear";
pub const N1_KERNEL: &str = "n1_kernel";
pub const PW_DET_NORM: &str = "pw_det_norm";
pub const PW_DET_STAR: &str = "pw_det_star";

/// Every check id with its base tolerance.
pub const CHECKS: &[(&str, f64)] = &[
    (KERNEL_FORMULA, 1e-8),
    (STAR_RELATION, 1e-10),
    (HB_INHERITANCE, 0.0),
    (PROJECTION, 1e-9),
    (N1_STAR, 1e-10),
    (N1_LINEAR, 1e-10),
    (N1_KERNEL, 1e-10),
    (PW_DET_NORM, 1e-9),
    (PW_DET_STAR, 1e-9),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check_id: String,
    pub samples: usize,
    pub max_rel_residual: f64,
    pub tolerance: f64,
    pub condition_estimate: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckReport {
    pub fn new(
        check_id: &str,
        samples: usize,
        max_rel_residual: f64,
        tolerance: f64,
        condition_estimate: f64,
    ) -> Self {
        CheckReport {
            check_id: check_id.to_string(),
            samples,
            max_rel_residual,
            tolerance,
            condition_estimate,
            passed: max_rel_residual <= tolerance,
            min_margin: None,
            note: None,
        }
    }

    /// The same report judged against another tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.passed = self.max_rel_residual <= tolerance;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    base: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            base: CHECKS.iter().map(|(id, t)| (id.to_string(), *t)).collect(),
        }
    }
}

impl Tolerances {
    pub fn set(&mut self, check_id: &str, tolerance: f64) -> Result<()> {
        match self.base.get_mut(check_id) {
            Some(t) => {
                *t = tolerance;
                Ok(())
            }
            None => Err(Error::Domain(format!("unknown check id `{check_id}`"))),
        }
    }

    pub fn base(&self, check_id: &str) -> f64 {
        self.base[check_id]
    }

    pub fn scaled(&self, check_id: &str, condition: f64) -> f64 {
        self.base(check_id) * (condition / 1e4).max(1.0)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point in the disk of radius [`SAMPLE_RADIUS`].
pub fn sample_disk(rng: &mut ChaCha8Rng) -> Complex64 {
    let r = SAMPLE_RADIUS * rng.gen::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.gen::<f64>();
    Complex64::from_polar(r, theta)
}

/// A `(z, w)` pair in the disk away from the diagonal `w = conj z`.
pub fn sample_pair(rng: &mut ChaCha8Rng) -> (Complex64, Complex64) {
    loop {
        let z = sample_disk(rng);
        let w = sample_disk(rng);
        if (z.conj() - w).norm() >= DIAGONAL_EXCLUSION {
            return (z, w);
        }
    }
}

/// A point of the upper half-disk with `Im z >= MIN_IMAG`.
pub fn sample_upper(rng: &mut ChaCha8Rng) -> Complex64 {
    loop {
        let z = sample_disk(rng);
        let z = Complex64::new(z.re, z.im.abs());
        if z.im >= MIN_IMAG {
            return z;
        }
    }
}

fn rel(a: Complex64, b: Complex64, scale: f64) -> f64 {
    let r = (a - b).norm() / scale;
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

/// Runs checks against a fixed set of tolerances.
#[derive(Debug, Clone, Default)]
pub struct Verifier {
    pub tolerances: Tolerances,
}

impl Verifier {
    pub fn new(tolerances: Tolerances) -> Self {
        Verifier { tolerances }
    }

    /// `K^σ_z(w)` against `(conj E_σ(z) E_σ(w) - conj F_σ(z) F_σ(w)) / (i(conj z - w))`.
    pub fn check_theorem2(
        &self,
        space: &StructureFunction,
        zeros: &ZeroSequence,
        sample_count: usize,
        seed: u64,
    ) -> Result<CheckReport> {
        let gs = GramSystem::build(space, zeros)?;
        let ssf = SigmaStructureFunction::derive(&gs)?;
        let mut rng = rng(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..sample_count {
            let (z, w) = sample_pair(&mut rng);
            let lhs = gs.sigma_kernel(z, w);
            let rhs = kernel_formula_rhs(&ssf, z, w);
            worst = worst.max(rel(lhs, rhs, lhs.norm().max(1.0)));
        }
        let cond = gs.condition_estimate();
        Ok(CheckReport::new(
            KERNEL_FORMULA,
            sample_count,
            worst,
            self.tolerances.scaled(KERNEL_FORMULA, cond),
            cond,
        ))
    }

    /// `F_σ(w) = conj(E_σ(conj w))`.
    pub fn check_star_relation(
        &self,
        space: &StructureFunction,
        zeros: &ZeroSequence,
        sample_count: usize,
        seed: u64,
    ) -> Result<CheckReport> {
        let gs = GramSystem::build(space, zeros)?;
        let ssf = SigmaStructureFunction::derive(&gs)?;
        let mut rng = rng(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..sample_count {
            let w = sample_disk(&mut rng);
            let f = ssf.eval(Which::FSigma, w);
            let e_star = ssf.eval(Which::ESigma, w.conj()).conj();
            worst = worst.max(rel(f, e_star, f.norm().max(1.0)));
        }
        let cond = gs.condition_estimate();
        Ok(CheckReport::new(
            STAR_RELATION,
            sample_count,
            worst,
            self.tolerances.scaled(STAR_RELATION, cond),
            cond,
        ))
    }

    /// `|E_σ(z)|² > |E_σ*(z)|²` on the upper half-plane.
    ///
    /// The residual is the fraction of samples whose margin is not strictly
    /// positive; `min_margin` is the smallest margin relative to
    /// `|E_σ|² + |E_σ*|²`.
    pub fn check_hb_inheritance(
        &self,
        space: &StructureFunction,
        zeros: &ZeroSequence,
        sample_count: usize,
        seed: u64,
    ) -> Result<CheckReport> {
        let gs = GramSystem::build(space, zeros)?;
        let ssf = SigmaStructureFunction::derive(&gs)?;
        let mut rng = rng(seed);
        let mut violations = 0usize;
        let mut min_margin = f64::INFINITY;
        for _ in 0..sample_count {
            let z = sample_upper(&mut rng);
            let e = ssf.eval(Which::ESigma, z).norm_sqr();
            // E_σ*(z) = F_σ(z)
            let f = ssf.eval(Which::FSigma, z).norm_sqr();
            let margin = (e - f) / (e + f);
            if !(margin > 0.0) {
                violations += 1;
            }
            min_margin = if margin.is_nan() {
                f64::NEG_INFINITY
            } else {
                min_margin.min(margin)
            };
        }
        let cond = gs.condition_estimate();
        let fraction = if sample_count == 0 {
            0.0
        } else {
            violations as f64 / sample_count as f64
        };
        let mut report = CheckReport::new(
            HB_INHERITANCE,
            sample_count,
            fraction,
            self.tolerances.scaled(HB_INHERITANCE, cond),
            cond,
        );
        report.min_margin = Some(if sample_count == 0 { 0.0 } else { min_margin });
        Ok(report)
    }

    /// Orthogonality of the projection residual at the zeros, and agreement
    /// of the solve and bordered-determinant kernels at the sample points.
    pub fn check_projection(
        &self,
        space: &StructureFunction,
        zeros: &ZeroSequence,
        z: Complex64,
        samples: &[Complex64],
    ) -> Result<CheckReport> {
        let gs = GramSystem::build(space, zeros)?;
        let rhs = gs.projection_residual(z);
        let data_scale = gs
            .evaluator_values(z, 0)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut worst = rhs
            .iter()
            .map(|r| r.norm() / data_scale)
            .fold(0.0, f64::max);
        let mut count = rhs.len();
        if !zeros.contains(z) {
            for &w in samples.iter().filter(|w| !zeros.contains(**w)) {
                let solve = gs.sigma_kernel(z, w);
                let det = gs.sigma_kernel_det(z, w)?;
                worst = worst.max(rel(solve, det, solve.norm().max(1.0)));
                count += 1;
            }
        }
        let cond = gs.condition_estimate();
        Ok(CheckReport::new(
            PROJECTION,
            count,
            worst,
            self.tolerances.scaled(PROJECTION, cond),
            cond,
        ))
    }

    /// The single-zero identities: `ℱ = ℰ*`, `conj(e₁)ℰ - conj(f₁)ℱ = -iZ₁`
    /// and the 2×2 bordered-determinant form of the kernel.
    pub fn check_n1_identities(
        &self,
        space: &StructureFunction,
        z1: Complex64,
        sample_count: usize,
        seed: u64,
    ) -> Result<Vec<CheckReport>> {
        let g11 = space.kernel(z1, z1);
        if !(g11.re > 0.0) {
            return Err(Error::Domain(format!("(Z_1, Z_1) = {g11} is not positive")));
        }
        let cond = 1.0;
        let e = |w: Complex64| space.e_deriv(w, 0);
        let f = |w: Complex64| space.e_star_deriv(w, 0);
        let (e1, f1) = (e(z1), f(z1));
        let cal_e = |w: Complex64| (e(w) - e1 * space.kernel(z1, w) / g11) / (w - z1);
        let cal_f = |w: Complex64| (f(w) - f1 * space.kernel(z1, w) / g11) / (w - z1);
        let away = |w: Complex64| {
            (w - z1).norm() >= DIAGONAL_EXCLUSION && (w.conj() - z1).norm() >= DIAGONAL_EXCLUSION
        };

        let mut rng = rng(seed);
        let (mut star, mut linear, mut kernel) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..sample_count {
            let w = loop {
                let w = sample_disk(&mut rng);
                if away(w) {
                    break w;
                }
            };
            let fw = cal_f(w);
            star = star.max(rel(fw, cal_e(w.conj()).conj(), fw.norm().max(1.0)));

            let a = e1.conj() * cal_e(w);
            let b = f1.conj() * fw;
            let z1w = space.kernel(z1, w);
            linear = linear.max(rel(a - b, -I * z1w, (a.norm() + b.norm()).max(1.0)));

            let (z, w) = loop {
                let (z, w) = sample_pair(&mut rng);
                if away(z) && away(w) {
                    break (z, w);
                }
            };
            let det = g11 * space.kernel(z, w) - space.kernel(z, z1) * space.kernel(z1, w);
            let lhs = det * ((w - z1) * (z - z1).conj()).inv() / g11;
            let rhs =
                (cal_e(z).conj() * cal_e(w) - cal_f(z).conj() * cal_f(w)) / (I * (z.conj() - w));
            kernel = kernel.max(rel(lhs, rhs, lhs.norm().max(1.0)));
        }
        let t = &self.tolerances;
        Ok(vec![
            CheckReport::new(N1_STAR, sample_count, star, t.scaled(N1_STAR, cond), cond),
            CheckReport::new(
                N1_LINEAR,
                sample_count,
                linear,
                t.scaled(N1_LINEAR, cond),
                cond,
            ),
            CheckReport::new(
                N1_KERNEL,
                sample_count,
                kernel,
                t.scaled(N1_KERNEL, cond),
                cond,
            ),
        ])
    }

    /// The Paley-Wiener determinant identities
    /// `G_n(z,z) G_n = (|e_n(z)|² - |f_n(z)|²) / (2 Im z)` and
    /// `f_n(z) = ∏ (z - z_i)/(z - conj z_i) · conj(e_n(conj z))`.
    ///
    /// The second identity is also evaluated without the outer conjugation;
    /// both residuals are written to the note of the `pw_det_star` report.
    pub fn check_pw_example(
        &self,
        x: f64,
        zeros: &[Complex64],
        z_samples: &[Complex64],
    ) -> Result<Vec<CheckReport>> {
        let space = StructureFunction::paley_wiener(x)?;
        let seq = ZeroSequence::canonicalize(zeros);
        if !seq.is_distinct() {
            return Err(Error::Domain(
                "the Paley-Wiener example needs distinct zeros".into(),
            ));
        }
        for &z in z_samples {
            if z.im == 0.0 {
                return Err(Error::Domain(format!("sample {z} is real")));
            }
            if zeros.iter().any(|&p| p == z || p.conj() == z) {
                return Err(Error::Domain(format!(
                    "sample {z} lies on the zeros or their conjugates"
                )));
            }
        }
        let cond = GramSystem::build(&space, &seq)?.condition_estimate();
        let dets = PwDeterminants {
            space: &space,
            x,
            zeros,
        };
        let g_n = dets.gram();
        let (mut norm_worst, mut conj_worst, mut plain_worst) = (0.0f64, 0.0f64, 0.0f64);
        for &z in z_samples {
            let gzz = dets.bordered_kernel(z);
            let e_n = dets.bordered_exponential(z, -1.0);
            let f_n = dets.bordered_exponential(z, 1.0);
            let lhs = gzz * g_n;
            let two_y = 2.0 * z.im;
            let rhs = (e_n.norm_sqr() - f_n.norm_sqr()) / two_y;
            let scale = lhs
                .norm()
                .max((e_n.norm_sqr() + f_n.norm_sqr()) / two_y.abs());
            norm_worst = norm_worst.max(rel(lhs, rhs.into(), scale));

            let blaschke: Complex64 = zeros.iter().map(|&p| (z - p) / (z - p.conj())).product();
            let e_reflected = dets.bordered_exponential(z.conj(), -1.0);
            let conjugated = blaschke * e_reflected.conj();
            let plain = blaschke * e_reflected;
            conj_worst = conj_worst.max(rel(f_n, conjugated, f_n.norm().max(conjugated.norm())));
            plain_worst = plain_worst.max(rel(f_n, plain, f_n.norm().max(plain.norm())));
        }
        let t = &self.tolerances;
        let n = z_samples.len();
        let norm = CheckReport::new(
            PW_DET_NORM,
            n,
            norm_worst,
            t.scaled(PW_DET_NORM, cond),
            cond,
        );
        let mut star = CheckReport::new(
            PW_DET_STAR,
            n,
            conj_worst,
            t.scaled(PW_DET_STAR, cond),
            cond,
        );
        let tol = star.tolerance;
        let holds = |r: f64| if r <= tol { "holds" } else { "fails" };
        star.note = Some(format!(
            "reading conj(e_n(conj z)): residual {conj_worst:.3e} ({}); reading e_n(conj z): residual {plain_worst:.3e} ({})",
            holds(conj_worst),
            holds(plain_worst)
        ));
        Ok(vec![norm, star])
    }

    /// The checks applicable to a configuration, with default sample counts.
    pub fn run_default_suite(
        &self,
        space: &StructureFunction,
        zeros: &ZeroSequence,
        seed: u64,
    ) -> Result<Vec<CheckReport>> {
        let mut out = vec![
            self.check_theorem2(space, zeros, 200, seed)?,
            self.check_star_relation(space, zeros, 100, seed.wrapping_add(1))?,
            self.check_hb_inheritance(space, zeros, 100, seed.wrapping_add(2))?,
        ];
        let mut r = rng(seed.wrapping_add(3));
        let samples: Vec<Complex64> = (0..20).map(|_| sample_disk(&mut r)).collect();
        out.push(self.check_projection(space, zeros, Complex64::new(0.37, 0.61), &samples)?);
        if zeros.len() == 1 {
            out.extend(self.check_n1_identities(
                space,
                zeros.points()[0],
                50,
                seed.wrapping_add(4),
            )?);
        }
        if let Family::PaleyWiener { x } = space.family() {
            if zeros.is_distinct() {
                let pts = zeros.points();
                let zs: Vec<Complex64> = DEFAULT_PW_SAMPLES
                    .iter()
                    .copied()
                    .filter(|z| !pts.iter().any(|p| p == z || p.conj() == *z))
                    .collect();
                if !zs.is_empty() {
                    out.extend(self.check_pw_example(*x, pts, &zs)?);
                }
            }
        }
        Ok(out)
    }
}

/// Evaluation points of the Paley-Wiener determinant identities.
pub const DEFAULT_PW_SAMPLES: [Complex64; 2] = [
    Complex64 { re: 0.0, im: 2.0 },
    Complex64 { re: 0.5, im: 1.5 },
];

/// The right-hand side of the kernel formula in terms of `E_σ` and `F_σ`.
pub fn kernel_formula_rhs(ssf: &SigmaStructureFunction, z: Complex64, w: Complex64) -> Complex64 {
    let ez = ssf.eval(Which::ESigma, z);
    let ew = ssf.eval(Which::ESigma, w);
    let fz = ssf.eval(Which::FSigma, z);
    let fw = ssf.eval(Which::FSigma, w);
    (ez.conj() * ew - fz.conj() * fw) / (I * (z.conj() - w))
}

/// Determinants built from the entries `2 sin((conj b - a)x)/(conj b - a)`.
struct PwDeterminants<'a> {
    space: &'a StructureFunction,
    x: f64,
    zeros: &'a [Complex64],
}

impl PwDeterminants<'_> {
    /// Row `a`, column `b`.
    fn entry(&self, a: Complex64, b: Complex64) -> Complex64 {
        self.space.kernel(b, a)
    }

    fn gram(&self) -> Complex64 {
        let n = self.zeros.len();
        determinant(&CMatrix::from_fn(n, |i, j| {
            self.entry(self.zeros[i], self.zeros[j])
        }))
    }

    fn bordered(&self, z: Complex64, last_col: impl Fn(Complex64) -> Complex64) -> Complex64 {
        let n = self.zeros.len();
        let pt = |i: usize| if i < n { self.zeros[i] } else { z };
        determinant(&CMatrix::from_fn(n + 1, |i, j| {
            if j < n {
                self.entry(pt(i), self.zeros[j])
            } else {
                last_col(pt(i))
            }
        }))
    }

    fn bordered_kernel(&self, z: Complex64) -> Complex64 {
        self.bordered(z, |a| self.entry(a, z))
    }

    /// Last column `exp(sign · i x z_i)`.
    fn bordered_exponential(&self, z: Complex64, sign: f64) -> Complex64 {
        self.bordered(z, |a| (sign * I * self.x * a).exp())
    }
}

/// Default-tolerance shorthand for [`Verifier::check_theorem2`].
pub fn check_theorem2(
    space: &StructureFunction,
    zeros: &ZeroSequence,
    sample_count: usize,
    seed: u64,
) -> Result<CheckReport> {
    Verifier::default().check_theorem2(space, zeros, sample_count, seed)
}

pub fn check_n1_identities(
    space: &StructureFunction,
    z1: Complex64,
    sample_count: usize,
    seed: u64,
) -> Result<Vec<CheckReport>> {
    Verifier::default().check_n1_identities(space, z1, sample_count, seed)
}

pub fn check_pw_example(
    x: f64,
    zeros: &[Complex64],
    z_samples: &[Complex64],
) -> Result<Vec<CheckReport>> {
    Verifier::default().check_pw_example(x, zeros, z_samples)
}

pub fn check_hb_inheritance(
    space: &StructureFunction,
    zeros: &ZeroSequence,
    sample_count: usize,
    seed: u64,
) -> Result<CheckReport> {
    Verifier::default().check_hb_inheritance(space, zeros, sample_count, seed)
}

pub fn check_projection(
    space: &StructureFunction,
    zeros: &ZeroSequence,
    z: Complex64,
    samples: &[Complex64],
) -> Result<CheckReport> {
    Verifier::default().check_projection(space, zeros, z, samples)
}
