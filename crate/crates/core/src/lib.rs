//! Stochastic algebraic Riccati equations via the left semi-tensor product.
//!
//! The discrete equation (SDARE)
//!
//! ```text
//! X = Σ AᵢᵀXAᵢ + Q − (Σ AᵢᵀXBᵢ + L)(R + Σ BᵢᵀXBᵢ)⁻¹(Σ BᵢᵀXAᵢ + Lᵀ)
//! ```
//!
//! is reduced to `X = Aᵀ⋉X⋉(I + BBᵀ⋉X)⁻¹⋉A + CᵀC` and solved by fixed point,
//! Toeplitz closed form, or doubling. The continuous equation (SCARE) is
//! mapped to an SDARE by a Cayley transform and solved the same way.
//!
//! ```
//! use stp_riccati::{Matrix, ProblemData, SdareInstance, SolveOptions, solve_sdare_instance};
//!
//! let inst = SdareInstance::new(ProblemData {
//!     a: vec![Matrix::scalar(1.0)],
//!     b: vec![Matrix::scalar(1.0)],
//!     q: Matrix::scalar(1.0),
//!     l: Matrix::scalar(0.0),
//!     r: Matrix::scalar(1.0),
//! })?;
//! let sol = solve_sdare_instance(&inst, &SolveOptions::default())?;
//! assert!((sol.x[(0, 0)] - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
//! # Ok::<(), stp_riccati::Error>(())
//! ```

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod matrix;
pub mod model;
pub mod scare;
pub mod sdare;
pub mod selftest;
pub mod solve;
pub mod stp;

pub use diagnostics::{Method, SolveReport, Stabilizing};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{Instance, Kind, ProblemData, ScareInstance, SdareInstance, StandardScare, StandardSdare};
pub use solve::{solve_instance, solve_scare_instance, solve_sdare_instance, Solution, SolveMethod, SolveOptions};
