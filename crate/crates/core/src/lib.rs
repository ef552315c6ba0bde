//! Finite optimal POVMs for estimating a pure state in dimension `d` from
//! `N` identical copies.
//!
//! The optimal mean fidelity `(N+1)/(N+d)` is reached exactly when the
//! weighted guesses reproduce the Haar average of `ρ^{⊗N}`, i.e. when they
//! form a quadrature on the unit sphere `S^(2d-1)` that is exact for all
//! degree-`2N` polynomials. This crate builds such quadratures as products
//! of one-dimensional rules, certifies them against exact rational moments,
//! and runs the resulting estimators, including the clone-then-estimate
//! pipeline through the optimal cloner.
//!
//! ```
//! use optimal_povm::povm::{build_povm, check_optimality, BuildOptions};
//! use optimal_povm::estimation::mean_fidelity_exact;
//!
//! let povm = build_povm(2, 2, BuildOptions::default()).unwrap();
//! assert!(check_optimality(&povm).unwrap() <= 1e-10);
//! assert!((mean_fidelity_exact(&povm).unwrap().value - 0.75).abs() < 1e-12);
//! ```

pub mod cli;
pub mod cloner;
pub mod error;
pub mod estimation;
pub mod moments;
pub mod povm;
pub mod quadrature;
pub mod symmetric;

pub use error::{Error, Result};
