//! Hilbert spaces of entire functions with imposed trivial zeros.
//!
//! Starting from a space `H(E)` given by a Hermite-Biehler structure function
//! `E`, this crate evaluates the reproducing kernel of the subspace of
//! functions vanishing on a finite sequence `σ` (divided by `∏(w - z_i)`),
//! and builds the structure function `E_σ` of that derived space.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`kernels`] | structure functions `E`, `E*` and the kernel `Z_z(w)` with mixed partials |
//! | [`sigma`] | zero sequences with multiplicity bookkeeping, `γ`, bracket functionals |
//! | [`gram`] | Gram system of evaluators and the derived kernel `K^σ` |
//! | [`structure`] | `E_σ`, `F_σ` by direct solve, iteration and ε-splitting |
//! | [`verify`] | identity checks producing [`verify::CheckReport`]s |
//! | [`cli`] | JSON-configured command line front end |
//!
//! ```
//! use debranges::{Complex64, StructureFunction, ZeroSequence, GramSystem};
//!
//! let space = StructureFunction::paley_wiener(1.0).unwrap();
//! let zeros = ZeroSequence::canonicalize(&[Complex64::i()]);
//! let gram = GramSystem::build(&space, &zeros).unwrap();
//! let k = gram.sigma_kernel(Complex64::new(0.0, 2.0), Complex64::new(0.0, 2.0));
//! assert!(k.re > 0.0 && k.im.abs() < 1e-12);
//! ```

pub mod cli;
pub mod error;
pub mod gram;
pub mod kernels;
pub mod linalg;
pub mod sigma;
pub mod structure;
pub mod verify;

mod expansion;

pub use error::{Error, Result};
pub use gram::GramSystem;
pub use kernels::{Family, StructureFunction};
pub use num_complex::Complex64;
pub use sigma::ZeroSequence;
pub use structure::{SigmaStructureFunction, Which};
