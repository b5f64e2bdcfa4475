//! Level-set methods for convex optimization, instrumented for duality gaps.
//!
//! A convex problem `minimize f(x) subject to g(x) <= 0, x in X` is solved by
//! the level-set method as a root-finding problem on the value function
//!
//! ```text
//! v(tau) = inf { g(x) | f(x) <= tau, x in X }.
//! ```
//!
//! The leftmost root of `v` is the optimal value of the Lagrange dual, which
//! coincides with the primal optimal value only under strong duality. This crate
//! evaluates `v` (and the perturbation function `p`) with norm-capped first-order
//! methods, locates its leftmost root with safeguarded bisection, secant and
//! Newton iterations, and reports when the root misses the primal value.
//!
//! The crate is `no_std` (it needs `alloc`). IO, fixtures, parallel sweeps and
//! the command-line front end live in the `levelset-lab` crate.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod duality;
pub mod error;
pub mod inner;
pub mod linalg;
pub mod problems;
pub mod rootfind;
pub mod sweep;
pub(crate) mod vecops;

pub use error::Error;
pub use inner::{eval_p, eval_v, eval_v_pert, InnerConfig, InnerMethod, QueryKind, ValueEval};
pub use linalg::{proj_l1_ball, proj_psd, sym_eig, SymEigen, SymMatrix};
pub use problems::{
    make_infeasibility, Constraint, ConstraintKind, GroundSet, LevelSet, PerturbationInstance,
    ProblemInstance, Rho, ValueFunction, VariableSpace,
};
pub use rootfind::{
    expand_bracket_left, find_leftmost_root, BracketExpansion, RootConfig, RootError, RootMethod,
    RootStep, RootTrace, StepKind,
};
pub use duality::{
    check_inverse, divergence_probe, gap_report, regularize, DivergenceProbe, GapClass, GapConfig,
    GapError, GapReport, InverseCheck, ProbePoint, TauPSource,
};
pub use sweep::{linspace, sweep_p, sweep_v, Executor, Sequential, SweepAxis, SweepPoint, SweepTable};
