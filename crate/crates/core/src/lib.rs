//! Exact machinery for permutation quasirandomness analysis.
//!
//! The crate provides, all over exact rational arithmetic unless noted:
//!
//! - permutations, induced patterns and pattern densities ([`perm`]);
//! - step permutons from doubly stochastic matrices, checkerboard
//!   perturbations of the constant matrix, exact densities and exact density
//!   gradients ([`step`]);
//! - the segment-supported permuton family with seeded Monte Carlo density
//!   estimation ([`segment`], [`mc`]);
//! - gradient polynomials with three cross-checked evaluation routes
//!   ([`gradpoly`]);
//! - linear-dependence certification of pattern sets, cover-matrix
//!   verifiers and exhaustive dependent-set search ([`forcing`]);
//! - numerical witness construction for independent sets and bisection for
//!   the density-matching family parameter ([`witness`]).

pub mod comb;
pub mod error;
pub mod forcing;
pub mod gradpoly;
pub mod linalg;
pub mod mc;
pub mod perm;
pub mod rational;
pub mod segment;
pub mod step;
pub mod witness;

pub use error::{Error, Result};
pub use forcing::{
    classify_set, cover_matrix, dependence, search_dependent_sets, verify_constant_cover,
    verify_zero_sums, DependenceResult, DependenceStatus, FormalCombination, NonForcingCertificate,
    SetReport,
};
pub use gradpoly::{
    b_vector, finite_n_estimate, gradient_polynomial, k_constant, mirror_polynomial,
    n3_gradient_estimate, sum_formula_eval, BVector, BivariatePolynomial,
};
pub use linalg::RatMatrix;
pub use mc::{mc_density, pattern_counts, sample_points, McEstimate, PointSampler, StepPermuton};
pub use perm::{enumerate_permutations, pattern_density, Permutation};
pub use rational::Rational;
pub use segment::SegmentPermuton;
pub use step::{
    density_function, density_gradient, perturb, step_density, DoublyStochasticMatrix,
    PerturbationVector,
};
pub use witness::{
    find_alpha0, find_witness, verify_witness, AlphaReport, VerifyOutcome, WitnessReport,
};
