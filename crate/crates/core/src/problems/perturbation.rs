//! General perturbation form: `v(tau) = inf { penalty(u) | F(x, u) <= tau }`,
//! where `u` stacks the constraint residuals of `x`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{example2, make_infeasibility, Constraint, ProblemInstance, Rho};
use crate::error::Error;

/// Penalty on the stacked residuals `(u1, u2)` of inequality and equality blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Penalty {
    /// `||[u1]_+||^2 / 2 + ||u2||^2 / 2`
    #[default]
    HalfSquares,
    /// `||([u1]_+, u2)||_2`
    Norm,
}

impl Penalty {
    fn rho(self) -> Rho {
        match self {
            Penalty::HalfSquares => Rho::HalfSumSquares,
            Penalty::Norm => Rho::Euclidean,
        }
    }
}

/// A base problem whose constraints are measured by a penalty on their residuals.
#[derive(Clone, Debug)]
pub struct PerturbationInstance {
    pub base: ProblemInstance,
    pub penalty: Penalty,
    /// The base objective and ground set with `g` replaced by the penalty.
    pub(crate) problem: ProblemInstance,
}

impl PerturbationInstance {
    pub fn name(&self) -> &str {
        &self.problem.name
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.problem.constraints
    }

    /// The level-set problem whose value function is the perturbation form.
    pub fn as_problem(&self) -> &ProblemInstance {
        &self.problem
    }
}

/// Perturbation form of `base` under `constraints` with the half-squares penalty.
pub fn multiconstraint(
    base: ProblemInstance,
    constraints: Vec<Constraint>,
) -> Result<PerturbationInstance, Error> {
    with_penalty(base, constraints, Penalty::HalfSquares)
}

pub fn with_penalty(
    base: ProblemInstance,
    constraints: Vec<Constraint>,
    penalty: Penalty,
) -> Result<PerturbationInstance, Error> {
    let oracle = make_infeasibility(constraints.clone(), penalty.rho())?;
    let mut problem = base.clone();
    problem.name = format!("{}-pert", base.name);
    problem.infeasibility = oracle.clone();
    problem.constraints = constraints;
    problem.infeasibility_nonnegative = true;
    problem.smooth = None;
    problem.closed_form_v = None;
    problem.dual_bound = None;
    problem.tau_d_ref = None;
    Ok(PerturbationInstance {
        base,
        penalty,
        problem,
    })
}

/// Example 2 with its two equality constraints under the half-squares
/// penalty; the value function is half that of Example 2.
pub fn example2_recast() -> PerturbationInstance {
    let base = example2();
    let constraints = base.constraints.clone();
    let mut pert = multiconstraint(base, constraints).expect("example2 has constraints");
    let half = |tau: f64| {
        let s = (-tau - 1.0).max(0.0);
        0.5 * s * s
    };
    pert.problem.closed_form_v = Some(Arc::new(half));
    pert.problem.dual_bound = Some(Arc::new(half));
    pert.problem.tau_d_ref = Some(-1.0);
    pert
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;
    use approx::assert_abs_diff_eq;

    #[test]
    fn recast_penalty_is_half_of_g() {
        let pert = example2_recast();
        let x = SymMatrix::from_rows(&[&[0.3, 0.0, 0.2], &[0.0, 0.5, 0.0], &[0.2, 0.0, 2.0]])
            .to_svec();
        assert_abs_diff_eq!(pert.problem.g(&x), 0.5 * pert.base.g(&x), epsilon = 1e-15);
        let xstar =
            SymMatrix::from_rows(&[&[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]).to_svec();
        assert_eq!(pert.problem.g(&xstar), 0.0);
    }

    #[test]
    fn norm_penalty() {
        let base = example2();
        let cs = base.constraints.clone();
        let pert = with_penalty(base, cs, Penalty::Norm).unwrap();
        let x = SymMatrix::from_rows(&[&[3.0, 0.0, 0.0], &[0.0, 5.0, 0.0], &[0.0, 0.0, 0.0]])
            .to_svec();
        assert_abs_diff_eq!(pert.problem.g(&x), 5.0, epsilon = 1e-14);
    }

    #[test]
    fn empty_constraints_rejected() {
        assert!(multiconstraint(example2(), Vec::new()).is_err());
    }
}
