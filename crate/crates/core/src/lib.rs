//! Single-atom, single-mode cavity dynamics in closed form.
//!
//! * [`field`]: initial field states (coherent, cat, thermal, Fock) on a
//!   truncated Fock basis.
//! * [`evolution`]: Rabi coefficients, the reduced field density matrix split
//!   into its atomic branches, and atomic inversion.
//! * [`wigner`]: Wigner functions by Laguerre series, grids, and
//!   nonclassicality metrics.
//! * [`oracle`]: independent brute-force evolution and displacement-parity
//!   Wigner evaluation used to cross-check the closed forms.

pub mod error;
pub mod evolution;
pub mod field;
pub mod oracle;
pub mod special;
pub mod wigner;

pub use error::{Error, Result};
pub use evolution::{
    evolve, evolve_branches, evolve_field_diagonal, inversion, inversion_series, rabi_coefficients, AtomPrep,
    EvolvedField, ModelParams, RabiCoeffs,
};
pub use field::{
    choose_truncation, make_cat, make_coherent, make_field, make_field_at, make_fock, make_thermal, to_density,
    CatParity, FieldKind, FieldSpec, FieldState, Truncation, DEFAULT_EPS_TAIL,
};
pub use oracle::{oracle_evolve, oracle_wigner, oracle_wigner_auto, JointState, OracleEvolution};
pub use wigner::{
    analytic_coherent_wigner, analytic_thermal_wigner, cat_signature, grid_integral, laguerre_assoc,
    negativity_volume, wigner_grid, wigner_grid_with, wigner_point, CatSignature, GridSpec, Parallelism, Peak,
    WignerGrid,
};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;
