//! Discrete trace norms of Sobolev spaces on increasing node sequences.
//!
//! Given a strictly increasing sequence of interpolation nodes and data values
//! on them, this crate computes explicit equivalent (semi)norms for the trace
//! of the Sobolev spaces `W^r_p` and `L^r_p` (derivative orders r = 1, 2), the
//! quasi-optimal spline interpolators that realize those norms up to constant
//! factors, and brute-force variational oracles for the true trace norm
//! (the infimum of the Sobolev norm over all interpolating extensions).
//!
//! The main pieces:
//!
//! * [`grid`] — validated node sequences and deterministic generators,
//! * [`divdiff`] — divided-difference tables of arbitrary order,
//! * [`norms`] — the equivalent sequence norms (`eq_norm_l`, `eq_norm_w`,
//!   `simp_norm_w`),
//! * [`pwpoly`] — piecewise cubic polynomials with evaluation,
//!   differentiation and smoothness checks,
//! * [`interpolators`] — the piecewise-linear and piecewise-cubic
//!   quasi-optimal interpolators and their closed-form energies,
//! * [`energy`] — adaptive Gauss-Legendre quadrature of `∫|F^(r)|^p` for
//!   piecewise polynomials,
//! * [`oracle`] — exact and IRLS-based minimizers of the extension energy,
//! * [`experiments`] — seeded sweeps measuring empirical equivalence
//!   constants.

pub mod divdiff;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod interpolators;
pub mod norms;
pub mod oracle;
pub mod pwpoly;

pub use divdiff::{divided_differences, DividedDifferenceTable};
pub use energy::{sobolev_seminorm_pow, w_norm_pow, QuadratureSpec};
pub use error::{Error, Result};
pub use grid::{generate_nodes, NodeGenerator, NodeSequence};
pub use interpolators::{
    kernel_energy_constant, phi1, phi1_energy_pow, phi2, phi2_energy_pow, phi2_stencils,
    Phi2Stencil,
};
pub use norms::{
    eq_norm_l, eq_norm_l_pow, eq_norm_w, eq_norm_w_pow, simp_norm_w, simp_norm_w_pow, NormParams,
    TraceData,
};
pub use oracle::{
    natural_spline, oracle_l, oracle_l_irls, oracle_w, Minimizer, OracleMethod, OracleResult,
};
pub use pwpoly::PiecewisePolynomial;
