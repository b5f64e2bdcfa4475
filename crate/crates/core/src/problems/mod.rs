//! Problem abstraction: objective `f`, infeasibility measure `g`, ground set `X`.
//!
//! Points are flat coordinate vectors. For matrix-valued problems they are the
//! isometric coordinates of [`SymMatrix::to_svec`], so Euclidean norms and
//! inner products on points are Frobenius norms and inner products on matrices,
//! and every oracle returns its subgradient in the same coordinates.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::inner::{InnerConfig, ValueEval};
use crate::linalg::{self, SymMatrix};
use crate::vecops;

mod library;
mod perturbation;

pub use library::{
    bpdn, example1, example2, phaselift_toy, univariate_failure, BpdnData, PhaseLiftData,
};
pub use perturbation::{example2_recast, multiconstraint, with_penalty, Penalty, PerturbationInstance};

/// Value and one subgradient of a convex function at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct FnEval {
    pub value: f64,
    pub subgradient: Vec<f64>,
}

/// A convex function oracle.
pub type Oracle = Arc<dyn Fn(&[f64]) -> FnEval + Send + Sync>;

/// A scalar function of the level parameter, such as a closed-form value function.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub(crate) fn oracle(f: impl Fn(&[f64]) -> FnEval + Send + Sync + 'static) -> Oracle {
    Arc::new(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariableSpace {
    Vector(usize),
    /// `n x n` symmetric matrices.
    SymMatrix(usize),
}

impl VariableSpace {
    /// Number of coordinates of a point.
    pub fn dim(&self) -> usize {
        match *self {
            VariableSpace::Vector(n) => n,
            VariableSpace::SymMatrix(n) => n * (n + 1) / 2,
        }
    }

    pub fn matrix(&self, x: &[f64]) -> Option<SymMatrix> {
        match *self {
            VariableSpace::SymMatrix(n) => Some(SymMatrix::from_svec(n, x)),
            VariableSpace::Vector(_) => None,
        }
    }

    pub fn point(&self, m: &SymMatrix) -> Vec<f64> {
        m.to_svec()
    }
}

/// The ground set `X`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroundSet {
    Whole,
    /// Positive semidefinite `n x n` matrices.
    PsdCone(usize),
}

impl GroundSet {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            GroundSet::Whole => x.to_vec(),
            GroundSet::PsdCone(n) => linalg::proj_psd(&SymMatrix::from_svec(n, x)).to_svec(),
        }
    }

    /// Amount by which `x` violates the ground set, and the gradient of a
    /// convex constraint `c(y) <= 0` that holds on `X` with `c(x)` equal to
    /// that amount. `None` when `x` lies in `X`.
    pub(crate) fn separate(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        match *self {
            GroundSet::Whole => None,
            GroundSet::PsdCone(n) => {
                let (lambda, v) = SymMatrix::from_svec(n, x).min_eigen();
                if lambda >= 0.0 {
                    None
                } else {
                    // c(Y) = -<v v^T, Y>
                    Some((-lambda, SymMatrix::outer(&v).scaled(-1.0).to_svec()))
                }
            }
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self.separate(x) {
            None => true,
            Some((amount, _)) => amount <= tol,
        }
    }
}

/// Level sets `X ∩ {f <= tau}` that are scaled unit balls of a gauge `f`,
/// with exact projections and linear minimization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelSet {
    /// `{x : ||x||_1 <= tau}`
    L1Ball,
    /// `{X psd : trace X <= tau}`
    TracePsd(usize),
}

impl LevelSet {
    /// Projection onto the level set of radius `tau`; `None` when it is empty.
    pub fn project(&self, x: &[f64], tau: f64) -> Option<Vec<f64>> {
        if tau < 0.0 || !tau.is_finite() {
            return None;
        }
        match *self {
            LevelSet::L1Ball => linalg::proj_l1_ball(x, tau).ok(),
            LevelSet::TracePsd(n) => {
                Some(linalg::proj_trace_psd(&SymMatrix::from_svec(n, x), tau).to_svec())
            }
        }
    }

    /// A minimizer of `<grad, z>` over the level set of radius `tau`.
    pub fn lmo(&self, grad: &[f64], tau: f64) -> Vec<f64> {
        let mut z = vec![0.0; grad.len()];
        match *self {
            LevelSet::L1Ball => {
                if let Some((i, g)) = grad
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                {
                    if *g != 0.0 {
                        z[i] = -tau * g.signum();
                    }
                }
            }
            LevelSet::TracePsd(n) => {
                let (lambda, v) = SymMatrix::from_svec(n, grad).min_eigen();
                if lambda < 0.0 {
                    z = SymMatrix::outer(&v).scaled(tau).to_svec();
                }
            }
        }
        z
    }
}

/// Monotone map from a smooth surrogate `h` to the infeasibility `g = phi(h)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Transform {
    Identity,
    /// `g = max(0, sqrt(2 h) - u)`, for `h = ||r||^2 / 2`.
    ResidualExcess { u: f64 },
}

impl Transform {
    pub fn apply(&self, h: f64) -> f64 {
        match *self {
            Transform::Identity => h,
            Transform::ResidualExcess { u } => ((2.0 * h.max(0.0)).sqrt() - u).max(0.0),
        }
    }

    pub fn derivative(&self, h: f64) -> f64 {
        match *self {
            Transform::Identity => 1.0,
            Transform::ResidualExcess { u } => {
                let r = (2.0 * h.max(0.0)).sqrt();
                if r > u && r > 0.0 {
                    1.0 / r
                } else {
                    0.0
                }
            }
        }
    }
}

/// Smooth surrogate of the infeasibility: `g = transform(h)` with `h` convex
/// and differentiable.
#[derive(Clone)]
pub struct SmoothPart {
    pub h: Oracle,
    pub transform: Transform,
    /// `h >= 0` everywhere.
    pub nonnegative: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `c(x) <= 0`
    Inequality,
    /// `c(x) = 0`; the residual must be affine.
    Equality,
}

/// A convex residual `c` with its constraint sense.
#[derive(Clone)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub residual: Oracle,
}

impl Constraint {
    pub fn inequality(residual: Oracle) -> Self {
        Constraint {
            kind: ConstraintKind::Inequality,
            residual,
        }
    }

    pub fn equality(residual: Oracle) -> Self {
        Constraint {
            kind: ConstraintKind::Equality,
            residual,
        }
    }

    /// Residual after clipping: `max(0, c)` for inequalities, `c` for equalities,
    /// with the matching subgradient.
    fn clipped(&self, x: &[f64]) -> FnEval {
        let e = (self.residual)(x);
        match self.kind {
            ConstraintKind::Equality => e,
            ConstraintKind::Inequality if e.value > 0.0 => e,
            ConstraintKind::Inequality => FnEval {
                value: 0.0,
                subgradient: vec![0.0; x.len()],
            },
        }
    }
}

/// Nonnegative convex gauges vanishing only at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rho {
    /// `sum |r_i|`
    Abs,
    /// `sum r_i^2`
    SumSquares,
    /// `sum r_i^2 / 2`
    HalfSumSquares,
    /// `||r||_2`
    Euclidean,
}

impl Rho {
    fn value_and_weights(&self, r: &[f64]) -> (f64, Vec<f64>) {
        match self {
            Rho::Abs => (
                vecops::norm1(r),
                r.iter().map(|v| if *v == 0.0 { 0.0 } else { v.signum() }).collect(),
            ),
            Rho::SumSquares => (vecops::dot(r, r), r.iter().map(|v| 2.0 * v).collect()),
            Rho::HalfSumSquares => (0.5 * vecops::dot(r, r), r.to_vec()),
            Rho::Euclidean => {
                let nr = vecops::norm(r);
                if nr == 0.0 {
                    (0.0, vec![0.0; r.len()])
                } else {
                    (nr, r.iter().map(|v| v / nr).collect())
                }
            }
        }
    }
}

/// Infeasibility measure `g(x) = rho(r(x))`, where `r_i = max(0, c_i(x))` for
/// inequalities and `r_i = c_i(x)` for equalities.
pub fn make_infeasibility(constraints: Vec<Constraint>, rho: Rho) -> Result<Oracle, Error> {
    if constraints.is_empty() {
        return Err(Error::domain("at least one constraint is required"));
    }
    Ok(oracle(move |x| {
        let parts: Vec<FnEval> = constraints.iter().map(|c| c.clipped(x)).collect();
        let r: Vec<f64> = parts.iter().map(|p| p.value).collect();
        let (value, weights) = rho.value_and_weights(&r);
        let mut subgradient = vec![0.0; x.len()];
        for (w, p) in weights.iter().zip(&parts) {
            if *w != 0.0 {
                vecops::axpy(*w, &p.subgradient, &mut subgradient);
            }
        }
        FnEval { value, subgradient }
    }))
}

/// Stored point with a known feasibility status.
#[derive(Clone, Debug)]
pub struct Witness {
    pub point: Vec<f64>,
    pub feasible: bool,
}

/// Generated data behind a random instance.
#[derive(Clone, Debug)]
pub enum InstanceData {
    None,
    Bpdn(Arc<BpdnData>),
    PhaseLift(Arc<PhaseLiftData>),
}

/// `minimize f(x) subject to g(x) <= 0, x in X`, plus reference values.
#[derive(Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub space: VariableSpace,
    pub objective: Oracle,
    pub infeasibility: Oracle,
    pub ground: GroundSet,
    /// Set when `X ∩ {f <= tau}` is the radius-`tau` ball of a gauge.
    pub level: Option<LevelSet>,
    pub smooth: Option<SmoothPart>,
    /// The constraints `g` was assembled from, when it was.
    pub constraints: Vec<Constraint>,
    pub infeasibility_nonnegative: bool,
    pub tau_p_ref: Option<f64>,
    /// May be `-inf`.
    pub tau_d_ref: Option<f64>,
    pub closed_form_v: Option<ScalarFn>,
    /// Lagrangian lower bound on `v(tau)`, valid without a norm cap.
    pub dual_bound: Option<ScalarFn>,
    /// Set when `f` is constant on the feasible set; the smallest norm of a
    /// feasible point.
    pub feasible_min_norm: Option<f64>,
    pub witnesses: Vec<Witness>,
    pub bracket_hint: Option<(f64, f64)>,
    pub seed: Option<u64>,
    pub data: InstanceData,
}

impl core::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("ground", &self.ground)
            .field("tau_p_ref", &self.tau_p_ref)
            .field("tau_d_ref", &self.tau_d_ref)
            .finish_non_exhaustive()
    }
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        (self.objective)(x).value
    }

    pub fn g(&self, x: &[f64]) -> f64 {
        (self.infeasibility)(x).value
    }

    pub fn closed_form(&self, tau: f64) -> Option<f64> {
        self.closed_form_v.as_ref().map(|v| v(tau))
    }
}

/// A value function the root finder can query: `v(tau)` of a
/// [`ProblemInstance`] or the perturbation form of a [`PerturbationInstance`].
pub trait ValueFunction: Sync {
    fn name(&self) -> &str;
    fn evaluate(&self, tau: f64, cfg: &InnerConfig) -> Result<ValueEval, Error>;
    fn objective_at(&self, x: &[f64]) -> f64;
    fn infeasibility_at(&self, x: &[f64]) -> f64;
    fn tau_p_ref(&self) -> Option<f64>;
    fn tau_d_ref(&self) -> Option<f64>;
    fn bracket_hint(&self) -> Option<(f64, f64)>;
    fn closed_form(&self, tau: f64) -> Option<f64>;
    fn space(&self) -> VariableSpace;
    /// Direct solve of the primal problem, `p(0)`.
    fn solve_primal(&self, cfg: &InnerConfig) -> Result<ValueEval, Error>;
}
