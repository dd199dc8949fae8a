#![allow(dead_code)]

use ldmpc::mpc::{ConstraintPolyhedron, PlantModel};
use ldmpc::QpProblem64;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.gen_range(-1.0..1.0))
}

/// Strictly convex QP with a strictly feasible point.
pub fn random_qp(rng: &mut ChaCha8Rng, p: usize, m: usize) -> QpProblem64 {
    let l = gaussian_matrix(rng, p, p);
    let h = &l * l.transpose() + DMatrix::identity(p, p) * 0.1;
    let h = (&h + h.transpose()) * 0.5;
    let c = gaussian_vector(rng, p) * 3.0;
    let a = gaussian_matrix(rng, m, p);
    let z0 = gaussian_vector(rng, p);
    let slack = DVector::from_fn(m, |_, _| rng.gen_range(0.05..1.0));
    let b = -&a * z0 + slack;
    QpProblem64::new(h, c, a, b).unwrap()
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub z: DVector<f64>,
    pub objective: f64,
}

/// Enumerates every active set, solves the equality-constrained KKT system,
/// and keeps the best point that is primal feasible with nonnegative
/// multipliers.
pub fn active_set_oracle(qp: &QpProblem64) -> OracleSolution {
    let (p, m) = (qp.num_vars(), qp.num_constraints());
    assert!(m <= 16, "enumeration is exponential in m");
    let mut best: Option<OracleSolution> = None;
    for mask in 0u32..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if active.len() > p {
            continue;
        }
        let k = active.len();
        let mut kkt = DMatrix::zeros(p + k, p + k);
        let mut rhs = DVector::zeros(p + k);
        kkt.view_mut((0, 0), (p, p)).copy_from(qp.h());
        rhs.rows_mut(0, p).copy_from(&-qp.c());
        for (j, &i) in active.iter().enumerate() {
            let row = qp.a().row(i);
            kkt.view_mut((0, p + j), (p, 1)).copy_from(&(-row.transpose()));
            kkt.view_mut((p + j, 0), (1, p)).copy_from(&row);
            rhs[p + j] = -qp.b()[i];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        if sol.iter().any(|x| !x.is_finite()) {
            continue;
        }
        let z = sol.rows(0, p).into_owned();
        let lambda_ok = (0..k).all(|j| sol[p + j] >= -1e-10);
        let primal_ok = qp.slack(&z).iter().all(|&s| s >= -1e-10);
        if lambda_ok && primal_ok {
            let objective = qp.objective(&z);
            if best.as_ref().map_or(true, |b| objective < b.objective) {
                best = Some(OracleSolution { z, objective });
            }
        }
    }
    best.expect("a strictly convex feasible QP has a KKT point")
}

/// Random stabilizable plant with box constraints on state and input, and
/// `z = x[0]` as tracked output. `A` has spectral radius close to one.
pub fn random_plant(rng: &mut ChaCha8Rng, n: usize) -> (PlantModel<f64>, ConstraintPolyhedron<f64>) {
    loop {
        let a = gaussian_matrix(rng, n, n);
        let rho = a.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max);
        let a = a * (rng.gen_range(0.8..1.05) / rho.max(1e-3));
        let b = gaussian_matrix(rng, n, 1);
        // Controllability of (A, B) rules out degenerate draws.
        let mut ctrb = DMatrix::zeros(n, n);
        let mut col = b.clone();
        for j in 0..n {
            ctrb.set_column(j, &col.column(0));
            col = &a * col;
        }
        let sv = ctrb.singular_values();
        if sv.min() < 1e-2 * sv.max() {
            continue;
        }
        let mut c = DMatrix::zeros(n + 1, n);
        c.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        let mut d = DMatrix::zeros(n + 1, 1);
        d[(n, 0)] = 1.0;
        let mut e = DMatrix::zeros(1, n);
        e[(0, 0)] = 1.0;
        let Ok(model) = PlantModel::new(a, b, c, d, e, DMatrix::zeros(1, 1)) else { continue };
        let mut bounds = vec![5.0; n];
        bounds.push(2.0);
        let set = ConstraintPolyhedron::symmetric_box(&bounds).unwrap();
        return (model, set);
    }
}
