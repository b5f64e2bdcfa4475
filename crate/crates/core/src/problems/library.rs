//! Library instances with known reference values.

use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::{
    make_infeasibility, oracle, Constraint, FnEval, GroundSet, InstanceData, LevelSet, Oracle,
    ProblemInstance, Rho, SmoothPart, Transform, VariableSpace, Witness,
};
use crate::error::Error;
use crate::linalg::{sym_eig, SymMatrix};
use crate::vecops;

/// Generator streams; each random object gets its own stream of the seed.
const STREAM_MATRIX: u64 = 0;
const STREAM_SIGNAL: u64 = 1;
const STREAM_NOISE: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn normals(r: &mut ChaCha20Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| r.sample(StandardNormal)).collect()
}

/// `x -> <c, x> - b`
fn affine(c: Vec<f64>, b: f64) -> Oracle {
    oracle(move |x| FnEval {
        value: vecops::dot(&c, x) - b,
        subgradient: c.clone(),
    })
}

/// Coordinates of the matrix with `value` at `(i, j)` and `(j, i)`.
fn unit(n: usize, i: usize, j: usize, value: f64) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    m.set(i, j, value);
    m
}

fn l1_norm() -> Oracle {
    oracle(|x| FnEval {
        value: vecops::norm1(x),
        subgradient: x
            .iter()
            .map(|v| if *v == 0.0 { 0.0 } else { v.signum() })
            .collect(),
    })
}

fn base(name: &str, space: VariableSpace, objective: Oracle, infeasibility: Oracle) -> ProblemInstance {
    ProblemInstance {
        name: name.to_string(),
        space,
        objective,
        infeasibility,
        ground: GroundSet::Whole,
        level: None,
        smooth: None,
        constraints: Vec::new(),
        infeasibility_nonnegative: true,
        tau_p_ref: None,
        tau_d_ref: None,
        closed_form_v: None,
        dual_bound: None,
        feasible_min_norm: None,
        witnesses: Vec::new(),
        bracket_hint: None,
        seed: None,
        data: InstanceData::None,
    }
}

/// 2x2 SDP with an infinite gap: `f = -2 x21`, `g = |x11|`, `X psd`.
///
/// Every feasible point has `x21 = 0`, so the optimal value is 0, while
/// `v(tau) = 0` for every `tau`.
pub fn example1() -> ProblemInstance {
    let n = 2;
    let objective = affine(unit(n, 1, 0, -1.0).to_svec(), 0.0);
    let constraints = vec![Constraint::equality(affine(unit(n, 0, 0, 1.0).to_svec(), 0.0))];
    let infeasibility = make_infeasibility(constraints.clone(), Rho::Abs)
        .expect("nonempty constraint list");
    let mut inst = base("example1", VariableSpace::SymMatrix(n), objective, infeasibility);
    inst.ground = GroundSet::PsdCone(n);
    inst.constraints = constraints;
    inst.tau_p_ref = Some(0.0);
    inst.tau_d_ref = Some(f64::NEG_INFINITY);
    inst.closed_form_v = Some(Arc::new(|_| 0.0));
    inst.dual_bound = Some(Arc::new(|_| 0.0));
    inst.feasible_min_norm = Some(0.0);
    inst.witnesses = vec![
        Witness {
            point: SymMatrix::zeros(n).to_svec(),
            feasible: true,
        },
        Witness {
            point: SymMatrix::from_rows(&[&[0.0, 0.0], &[0.0, 3.0]]).to_svec(),
            feasible: true,
        },
        Witness {
            point: SymMatrix::identity(n).to_svec(),
            feasible: false,
        },
    ];
    inst
}

/// 3x3 SDP with a finite gap: `f = -2 x31`,
/// `g = x11^2 + (x22 + 2 x31 - 1)^2`, `X psd`.
///
/// The primal optimum is 0 at `diag(0, 1, 0)`; the dual optimum is -1, and
/// `v(tau) = ((-tau - 1)_+)^2`.
pub fn example2() -> ProblemInstance {
    let n = 3;
    let objective = affine(unit(n, 2, 0, -1.0).to_svec(), 0.0);
    let second = unit(n, 1, 1, 1.0).add(&unit(n, 2, 0, 1.0));
    let constraints = vec![
        Constraint::equality(affine(unit(n, 0, 0, 1.0).to_svec(), 0.0)),
        Constraint::equality(affine(second.to_svec(), 1.0)),
    ];
    let infeasibility = make_infeasibility(constraints.clone(), Rho::SumSquares)
        .expect("nonempty constraint list");
    let curve = |tau: f64| {
        let s = (-tau - 1.0).max(0.0);
        s * s
    };
    let mut inst = base("example2", VariableSpace::SymMatrix(n), objective, infeasibility);
    inst.ground = GroundSet::PsdCone(n);
    inst.constraints = constraints;
    inst.tau_p_ref = Some(0.0);
    inst.tau_d_ref = Some(-1.0);
    inst.closed_form_v = Some(Arc::new(curve));
    inst.dual_bound = Some(Arc::new(curve));
    inst.feasible_min_norm = Some(1.0);
    let eps = 0.1;
    inst.witnesses = vec![
        Witness {
            point: SymMatrix::from_rows(&[&[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]])
                .to_svec(),
            feasible: true,
        },
        Witness {
            point: SymMatrix::from_rows(&[
                &[eps, 0.0, 0.5],
                &[0.0, 0.0, 0.0],
                &[0.5, 0.0, 1.0 / (4.0 * eps)],
            ])
            .to_svec(),
            feasible: false,
        },
    ];
    inst
}

/// `f = |x|`, `g = |x| - 1`: strong duality holds, yet `v(tau) = -1` for
/// every `tau >= 0` so the value function has no root to find.
pub fn univariate_failure() -> ProblemInstance {
    let objective = l1_norm();
    let infeasibility = oracle(|x| {
        let e = (l1_norm())(x);
        FnEval {
            value: e.value - 1.0,
            subgradient: e.subgradient,
        }
    });
    let mut inst = base("univariate_failure", VariableSpace::Vector(1), objective, infeasibility);
    inst.level = Some(LevelSet::L1Ball);
    inst.infeasibility_nonnegative = false;
    inst.tau_p_ref = Some(0.0);
    inst.tau_d_ref = Some(0.0);
    inst.closed_form_v = Some(Arc::new(|tau| if tau >= 0.0 { -1.0 } else { f64::INFINITY }));
    inst.feasible_min_norm = None;
    inst.witnesses = vec![
        Witness {
            point: vec![0.0],
            feasible: true,
        },
        Witness {
            point: vec![0.5],
            feasible: true,
        },
    ];
    inst
}

/// Generated data of a basis pursuit denoising instance.
#[derive(Clone, Debug)]
pub struct BpdnData {
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub noise_u: f64,
    /// Row-major `m x n`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub x0: Vec<f64>,
}

impl BpdnData {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.a.chunks(self.n).map(|row| vecops::dot(row, x)).collect()
    }

    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, yi) in self.a.chunks(self.n).zip(y) {
            vecops::axpy(*yi, row, &mut out);
        }
        out
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        vecops::sub(&self.apply(x), &self.b)
    }

    /// `A^T (A A^T)^{-1} b`, the minimum-norm solution of `A x = b`.
    pub fn min_norm_solution(&self) -> Vec<f64> {
        let gram = SymMatrix::from_fn(self.m, |i, j| {
            vecops::dot(
                &self.a[i * self.n..(i + 1) * self.n],
                &self.a[j * self.n..(j + 1) * self.n],
            )
        });
        let eig = sym_eig(&gram);
        let mut y = vec![0.0; self.m];
        for (lambda, v) in eig.values.iter().zip(&eig.vectors) {
            if *lambda > 0.0 {
                vecops::axpy(vecops::dot(v, &self.b) / lambda, v, &mut y);
            }
        }
        self.apply_transpose(&y)
    }
}

/// Basis pursuit denoising: `f = ||x||_1`, `g = max(0, ||A x - b|| - u)`.
///
/// `A` is `m x n` standard normal; `b = A x0 + e` for a `k`-sparse `x0` with
/// standard normal nonzeros, and `e` standard normal rescaled to norm
/// `noise_u`.
pub fn bpdn(seed: u64, m: usize, n: usize, k: usize, noise_u: f64) -> Result<ProblemInstance, Error> {
    if !(k < m && m < n) || k == 0 {
        return Err(Error::domain(format!(
            "bpdn dimensions need 0 < k < m < n, got k={k}, m={m}, n={n}"
        )));
    }
    if !(noise_u >= 0.0 && noise_u.is_finite()) {
        return Err(Error::domain("noise_u must be finite and nonnegative"));
    }
    let a = normals(&mut rng(seed, STREAM_MATRIX), m * n);
    let mut signal = rng(seed, STREAM_SIGNAL);
    let support = rand::seq::index::sample(&mut signal, n, k).into_vec();
    let mut x0 = vec![0.0; n];
    for i in support {
        x0[i] = signal.sample(StandardNormal);
    }
    let mut noise = normals(&mut rng(seed, STREAM_NOISE), m);
    let noise_norm = vecops::norm(&noise);
    let scale = if noise_norm > 0.0 { noise_u / noise_norm } else { 0.0 };
    noise.iter_mut().for_each(|e| *e *= scale);

    let mut data = BpdnData {
        seed,
        m,
        n,
        k,
        noise_u,
        a,
        b: Vec::new(),
        x0,
    };
    data.b = vecops::sub(&data.apply(&data.x0), &vecops::scaled(-1.0, &noise));
    let data = Arc::new(data);

    let d = data.clone();
    let residual_norm = oracle(move |x| {
        let r = d.residual(x);
        let nr = vecops::norm(&r);
        let subgradient = if nr > 0.0 {
            vecops::scaled(1.0 / nr, &d.apply_transpose(&r))
        } else {
            vec![0.0; d.n]
        };
        FnEval {
            value: nr - d.noise_u,
            subgradient,
        }
    });
    let constraints = vec![Constraint::inequality(residual_norm)];
    let infeasibility = make_infeasibility(constraints.clone(), Rho::Abs)?;
    let d = data.clone();
    let h = oracle(move |x| {
        let r = d.residual(x);
        FnEval {
            value: 0.5 * vecops::dot(&r, &r),
            subgradient: d.apply_transpose(&r),
        }
    });

    let mut inst = base("bpdn", VariableSpace::Vector(n), l1_norm(), infeasibility);
    inst.level = Some(LevelSet::L1Ball);
    inst.smooth = Some(SmoothPart {
        h,
        transform: Transform::ResidualExcess { u: noise_u },
        nonnegative: true,
    });
    inst.constraints = constraints;
    inst.bracket_hint = Some((0.0, vecops::norm1(&data.min_norm_solution())));
    inst.seed = Some(seed);
    inst.witnesses = vec![
        Witness {
            point: data.x0.clone(),
            feasible: true,
        },
        Witness {
            point: vec![0.0; n],
            feasible: vecops::norm(&data.b) <= noise_u,
        },
    ];
    inst.data = InstanceData::Bpdn(data);
    Ok(inst)
}

/// Generated data of a phase-lift instance.
#[derive(Clone, Debug)]
pub struct PhaseLiftData {
    pub seed: u64,
    pub n: usize,
    /// Ground truth `z`; the lifted solution is `z z^T`.
    pub z: Vec<f64>,
    /// Measurement vectors `a_i`; measurement `i` is `<a_i a_i^T, X>`.
    pub vectors: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

/// Real phase lift: `minimize trace X` subject to `<a_i a_i^T, X> = b_i` for
/// `3n` random `a_i`, `X psd`, with `b` generated by `X0 = z z^T`.
pub fn phaselift_toy(n: usize, seed: u64) -> Result<ProblemInstance, Error> {
    if n == 0 || n > 8 {
        return Err(Error::domain(format!("phase-lift size must be in 1..=8, got {n}")));
    }
    let z = normals(&mut rng(seed, STREAM_SIGNAL), n);
    let mut meas = rng(seed, STREAM_MATRIX);
    let vectors: Vec<Vec<f64>> = (0..3 * n).map(|_| normals(&mut meas, n)).collect();
    let b: Vec<f64> = vectors
        .iter()
        .map(|a| {
            let s = vecops::dot(a, &z);
            s * s
        })
        .collect();
    let x0 = SymMatrix::outer(&z);
    let trace = x0.trace();

    let constraints: Vec<Constraint> = vectors
        .iter()
        .zip(&b)
        .map(|(a, bi)| Constraint::equality(affine(SymMatrix::outer(a).to_svec(), *bi)))
        .collect();
    let infeasibility = make_infeasibility(constraints.clone(), Rho::SumSquares)?;
    let objective = affine(SymMatrix::identity(n).to_svec(), 0.0);

    let mut inst = base(
        "phaselift",
        VariableSpace::SymMatrix(n),
        objective,
        infeasibility.clone(),
    );
    inst.ground = GroundSet::PsdCone(n);
    inst.level = Some(LevelSet::TracePsd(n));
    inst.smooth = Some(SmoothPart {
        h: infeasibility,
        transform: Transform::Identity,
        nonnegative: true,
    });
    inst.constraints = constraints;
    inst.tau_p_ref = Some(trace);
    inst.tau_d_ref = Some(trace);
    inst.feasible_min_norm = Some(x0.frobenius_norm());
    inst.bracket_hint = Some((0.0, 2.0 * trace + 1.0));
    inst.seed = Some(seed);
    inst.witnesses = vec![
        Witness {
            point: x0.to_svec(),
            feasible: true,
        },
        Witness {
            point: SymMatrix::zeros(n).to_svec(),
            feasible: false,
        },
    ];
    inst.data = InstanceData::PhaseLift(Arc::new(PhaseLiftData {
        seed,
        n,
        z,
        vectors,
        b,
    }));
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[&[f64]]) -> Vec<f64> {
        SymMatrix::from_rows(rows).to_svec()
    }

    #[test]
    fn example1_values() {
        let inst = example1();
        assert_eq!(inst.f(&SymMatrix::zeros(2).to_svec()), 0.0);
        assert_eq!(inst.tau_d_ref, Some(f64::NEG_INFINITY));
        let (eps, tau) = (1e-2, -3.0);
        let x = m(&[&[eps, -tau / 2.0], &[-tau / 2.0, tau * tau / (4.0 * eps)]]);
        assert_abs_diff_eq!(inst.g(&x), eps, epsilon = 1e-15);
        assert_abs_diff_eq!(inst.f(&x), tau, epsilon = 1e-12);
    }

    #[test]
    fn example2_values() {
        let inst = example2();
        let xstar = m(&[&[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert_eq!(inst.g(&xstar), 0.0);
        let eps = 0.05;
        let xe = m(&[&[eps, 0.0, 0.5], &[0.0, 0.0, 0.0], &[0.5, 0.0, 1.0 / (4.0 * eps)]]);
        assert_abs_diff_eq!(inst.f(&xe), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inst.g(&xe), eps * eps, epsilon = 1e-15);
        assert_eq!(inst.tau_d_ref, Some(-1.0));
    }

    #[test]
    fn univariate_closed_form() {
        let inst = univariate_failure();
        assert_eq!(inst.closed_form(1.0), Some(-1.0));
        assert_eq!(inst.closed_form(-0.5), Some(f64::INFINITY));
        assert_eq!(inst.tau_p_ref, Some(0.0));
    }

    #[test]
    fn bpdn_dimensions_validated() {
        assert!(bpdn(1, 20, 10, 3, 0.1).is_err());
        assert!(bpdn(1, 20, 50, 20, 0.1).is_err());
        assert!(bpdn(1, 20, 50, 3, -1.0).is_err());
    }

    #[test]
    fn bpdn_noise_and_signal() {
        let inst = bpdn(1, 20, 50, 3, 0.1).unwrap();
        let InstanceData::Bpdn(d) = &inst.data else {
            panic!("bpdn data missing")
        };
        assert_eq!(d.x0.iter().filter(|v| **v != 0.0).count(), 3);
        let r = d.residual(&d.x0);
        assert_abs_diff_eq!(vecops::norm(&r), 0.1, epsilon = 1e-12);
        assert_eq!(inst.g(&d.x0), 0.0);
        let mn = d.min_norm_solution();
        assert!(vecops::norm(&d.residual(&mn)) < 1e-9);
    }

    #[test]
    fn bpdn_is_reproducible() {
        let a = bpdn(7, 10, 30, 2, 0.0).unwrap();
        let b = bpdn(7, 10, 30, 2, 0.0).unwrap();
        let (InstanceData::Bpdn(da), InstanceData::Bpdn(db)) = (&a.data, &b.data) else {
            panic!("bpdn data missing")
        };
        assert_eq!(da.a, db.a);
        assert_eq!(da.b, db.b);
        assert_eq!(a.g(&da.x0), 0.0);
    }

    #[test]
    fn phaselift_ground_truth() {
        let inst = phaselift_toy(4, 3).unwrap();
        let InstanceData::PhaseLift(d) = &inst.data else {
            panic!("phase-lift data missing")
        };
        let x0 = SymMatrix::outer(&d.z).to_svec();
        assert!(inst.g(&x0) < 1e-20);
        assert_abs_diff_eq!(inst.f(&x0), vecops::dot(&d.z, &d.z), epsilon = 1e-12);
        assert_eq!(d.vectors.len(), 12);
        assert!(phaselift_toy(9, 1).is_err());
    }
}
