use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::problem::QpProblem;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Bound applied to every entry of γ before exponentiation.
pub const GAMMA_MAX: f64 = 30.0;

/// Log-domain iterate: `λ = √η e^γ`, `s = √η e^{-γ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdipmIterate<T: Real> {
    pub gamma: DVector<T>,
    pub eta: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonResult<T: Real> {
    pub d: DVector<T>,
    pub z: DVector<T>,
    pub inf_norm_d: T,
}

/// Outcome of minimizing `η` subject to `‖d(γ, η)‖∞ ≤ 1` for a fixed γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaStar<T> {
    /// The infimum. Zero when `d` does not depend on η and already satisfies the bound.
    Finite(T),
    /// No `η > 0` satisfies the bound.
    Unbounded,
}

impl<T: Real> EtaStar<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            EtaStar::Finite(v) => Some(v),
            EtaStar::Unbounded => None,
        }
    }
}

pub fn clamp_gamma<T: Real>(gamma: &DVector<T>) -> DVector<T> {
    let g = T::lit(GAMMA_MAX);
    gamma.map(|x| x.max(-g).min(g))
}

/// Factorization of `AᵀΦ(γ)A + H` at a fixed γ, with `Φ(γ) = diag(e^{2γ})`.
///
/// One factorization serves every right-hand side that shares γ: the two
/// halves of the η-affine split and the governor's sampled directions.
pub struct NewtonSystem<T: Real> {
    factor: Factor<T>,
    exp_gamma: DVector<T>,
}

enum Factor<T: Real> {
    Cholesky(Cholesky<T, Dyn>),
    /// Upper-triangular `R` with `RᵀR = AᵀΦA + H`, from a QR factorization
    /// of `[Φ^{1/2} A; H^{1/2}]`. Used when the normal matrix is too
    /// ill-conditioned for a Cholesky factorization in working precision.
    SquareRoot(DMatrix<T>),
}

impl<T: Real> NewtonSystem<T> {
    pub fn factor(a: &DMatrix<T>, h: &DMatrix<T>, gamma: &DVector<T>) -> Result<Self> {
        if gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("γ"));
        }
        let exp_gamma = clamp_gamma(gamma).map(|g| g.exp());
        let phi = exp_gamma.map(|e| e * e);
        let mut scaled = a.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= phi[i];
        }
        let kkt = a.transpose() * scaled + h;
        if let Some(chol) = kkt.cholesky() {
            return Ok(Self { factor: Factor::Cholesky(chol), exp_gamma });
        }
        let r = square_root_factor(a, h, &exp_gamma).ok_or(Error::Factorization("AᵀΦ(γ)A + H"))?;
        Ok(Self { factor: Factor::SquareRoot(r), exp_gamma })
    }

    /// `e^γ` after clamping.
    pub fn exp_gamma(&self) -> &DVector<T> {
        &self.exp_gamma
    }

    pub fn solve(&self, rhs: &DVector<T>) -> DVector<T> {
        match &self.factor {
            Factor::Cholesky(chol) => chol.solve(rhs),
            Factor::SquareRoot(r) => {
                let y = r.tr_solve_upper_triangular(rhs).expect("nonzero diagonal checked at factorization");
                r.solve_upper_triangular(&y).expect("nonzero diagonal checked at factorization")
            }
        }
    }

    /// Splits the primal solution as `z = √η z_a + z_b` for the given linear
    /// cost and constraint offset, and returns the matching direction
    /// coefficients `d = p + q/√η`.
    pub fn eta_line(&self, a: &DMatrix<T>, c: &DVector<T>, b: &DVector<T>) -> Result<EtaLine<T>> {
        let e = &self.exp_gamma;
        let two = T::lit(2.0);
        let z_a = self.solve(&(a.transpose() * e * two));
        let phi_b = b.component_mul(e).component_mul(e);
        let z_b = -self.solve(&(c + a.transpose() * phi_b));
        let p = (a * &z_a).component_mul(e).map(|x| T::one() - x);
        let q = -(a * &z_b + b).component_mul(e);
        if p.iter().chain(q.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Newton direction"));
        }
        Ok(EtaLine { p, q, z_a, z_b })
    }
}

/// Newton direction and primal variable as affine functions of `w = 1/√η`
/// at a fixed γ.
#[derive(Debug, Clone)]
pub struct EtaLine<T: Real> {
    pub p: DVector<T>,
    pub q: DVector<T>,
    pub z_a: DVector<T>,
    pub z_b: DVector<T>,
}

impl<T: Real> EtaLine<T> {
    pub fn direction(&self, eta: T) -> DVector<T> {
        let w = T::one() / eta.sqrt();
        &self.p + &self.q * w
    }

    pub fn primal(&self, eta: T) -> DVector<T> {
        &self.z_a * eta.sqrt() + &self.z_b
    }

    /// Intersects the per-row intervals `{w > 0 : |p_i + q_i w| ≤ 1}` and
    /// maps the largest feasible `w` to `η* = 1/w²`.
    pub fn eta_star(&self) -> EtaStar<T> {
        match self.eta_range() {
            Some((lower, _)) => EtaStar::Finite(lower),
            None => EtaStar::Unbounded,
        }
    }

    /// The admissible `η` closest to `target`, or `None` when no `η > 0`
    /// gives `‖d‖∞ ≤ 1`.
    pub fn admissible_eta_near(&self, target: T) -> Option<T> {
        self.eta_range()
            .map(|(lower, upper)| upper.map_or(target, |u| target.min(u)).max(lower))
    }

    /// The set `{η > 0 : ‖d(γ, η)‖∞ ≤ 1}` is an interval; returns its closure
    /// `(η*, upper)` with `upper = None` for an unbounded interval, or `None`
    /// when the set is empty.
    pub fn eta_range(&self) -> Option<(T, Option<T>)> {
        let one = T::one();
        let mut lo = T::zero();
        let mut hi: Option<T> = None;
        for (&p, &q) in self.p.iter().zip(self.q.iter()) {
            if q == T::zero() {
                if p.abs() > one {
                    return None;
                }
                continue;
            }
            let (w1, w2) = ((-one - p) / q, (one - p) / q);
            let (l, u) = if q > T::zero() { (w1, w2) } else { (w2, w1) };
            lo = lo.max(l);
            hi = Some(hi.map_or(u, |h| h.min(u)));
        }
        let upper = (lo > T::zero()).then(|| one / (lo * lo));
        match hi {
            None => Some((T::zero(), upper)),
            Some(h) if h <= T::zero() || lo > h => None,
            Some(h) => Some((one / (h * h), upper)),
        }
    }
}

/// Newton direction `d(γ, η)` and primal `z(γ, η)`:
/// `(AᵀΦA + H) z = 2√η Aᵀe^γ − (c + AᵀΦb)`, `d = 1 − e^γ∘(Az + b)/√η`.
pub fn newton_direction<T: Real>(
    iter: &LdipmIterate<T>,
    qp: &QpProblem<T>,
) -> Result<NewtonResult<T>> {
    if !(iter.eta > T::zero()) {
        return Err(Error::NonFinite("η must be positive"));
    }
    let sys = NewtonSystem::factor(qp.a(), qp.h(), &iter.gamma)?;
    let e = sys.exp_gamma();
    let sqrt_eta = iter.eta.sqrt();
    let phi_b = qp.b().component_mul(e).component_mul(e);
    let rhs = qp.a().transpose() * e * (T::lit(2.0) * sqrt_eta) - (qp.c() + qp.a().transpose() * phi_b);
    let z = sys.solve(&rhs);
    let d = (qp.slack(&z).component_mul(e) / sqrt_eta).map(|x| T::one() - x);
    if d.iter().chain(z.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Newton direction"));
    }
    let inf_norm_d = linalg::inf_norm(&d);
    Ok(NewtonResult { d, z, inf_norm_d })
}

/// Coefficients `(p, q)` with `d(γ, η) = p + q/√η`.
pub fn eta_line_coefficients<T: Real>(
    gamma: &DVector<T>,
    qp: &QpProblem<T>,
) -> Result<(DVector<T>, DVector<T>)> {
    let line = NewtonSystem::factor(qp.a(), qp.h(), gamma)?.eta_line(qp.a(), qp.c(), qp.b())?;
    Ok((line.p, line.q))
}

/// `η* = inf { η > 0 : ‖d(γ, η)‖∞ ≤ 1 }`, in one pass over the rows.
pub fn eta_star<T: Real>(gamma: &DVector<T>, qp: &QpProblem<T>) -> Result<EtaStar<T>> {
    let line = NewtonSystem::factor(qp.a(), qp.h(), gamma)?.eta_line(qp.a(), qp.c(), qp.b())?;
    Ok(line.eta_star())
}

/// Slack and dual recovered from a log-domain iterate and its direction:
/// `λ = √η(e^γ + e^γ∘d)`, `s = √η(e^{-γ} − e^{-γ}∘d)`.
pub fn recover_duals<T: Real>(
    gamma: &DVector<T>,
    eta: T,
    d: &DVector<T>,
) -> (DVector<T>, DVector<T>) {
    let sqrt_eta = eta.sqrt();
    let g = clamp_gamma(gamma);
    let lambda = g.zip_map(d, |gi, di| sqrt_eta * gi.exp() * (T::one() + di));
    let s = g.zip_map(d, |gi, di| sqrt_eta * (-gi).exp() * (T::one() - di));
    (s, lambda)
}

fn square_root_factor<T: Real>(a: &DMatrix<T>, h: &DMatrix<T>, exp_gamma: &DVector<T>) -> Option<DMatrix<T>> {
    let p = h.nrows();
    let m = a.nrows();
    let eig = h.clone().symmetric_eigen();
    let mut stacked = DMatrix::zeros(m + p, p);
    for i in 0..m {
        stacked.row_mut(i).copy_from(&(a.row(i) * exp_gamma[i]));
    }
    // H^{1/2} = diag(√σ) Vᵀ up to an orthogonal factor, which QR absorbs.
    for k in 0..p {
        let root = eig.eigenvalues[k].max(T::zero()).sqrt();
        stacked.row_mut(m + k).copy_from(&(eig.eigenvectors.column(k).transpose() * root));
    }
    let r = stacked.qr().r();
    let scale = r.diagonal().amax();
    let tiny = T::default_epsilon() * T::lit(p as f64) * scale;
    if !(scale > T::zero()) || r.diagonal().iter().any(|d| d.abs() <= tiny) {
        return None;
    }
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_qp() -> QpProblem<f64> {
        QpProblem::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 0.0),
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn scalar_newton_direction_by_hand() {
        let it = LdipmIterate { gamma: DVector::from_element(1, 0.0), eta: 1.0 };
        let r = newton_direction(&it, &scalar_qp()).unwrap();
        assert!((r.z[0] - 0.5).abs() < 1e-15);
        assert!((r.d[0] + 0.5).abs() < 1e-15);
        assert!((r.inf_norm_d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn central_path_point_has_zero_step() {
        // z = 1, s = 2, λ = 1, η = 2: γ = -½ ln 2.
        let it = LdipmIterate { gamma: DVector::from_element(1, -0.5 * 2f64.ln()), eta: 2.0 };
        let r = newton_direction(&it, &scalar_qp()).unwrap();
        assert!(r.d[0].abs() < 1e-14);
        assert!((r.z[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_line_coefficients_by_hand() {
        let qp = scalar_qp();
        let sys = NewtonSystem::factor(qp.a(), qp.h(), &DVector::from_element(1, 0.0)).unwrap();
        let line = sys.eta_line(qp.a(), qp.c(), qp.b()).unwrap();
        assert!((line.z_a[0] - 1.0).abs() < 1e-15);
        assert!((line.z_b[0] + 0.5).abs() < 1e-15);
        assert!(line.p[0].abs() < 1e-15);
        assert!((line.q[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn scalar_eta_star_hits_the_boundary() {
        let qp = scalar_qp();
        let gamma = DVector::from_element(1, 0.0);
        let es = eta_star(&gamma, &qp).unwrap().finite().unwrap();
        assert!((es - 0.25).abs() < 1e-15);
        let r = newton_direction(&LdipmIterate { gamma, eta: es }, &qp).unwrap();
        assert!((r.inf_norm_d - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eta_star_empty_and_degenerate_intervals() {
        let line = EtaLine::<f64> {
            p: DVector::from_vec(vec![0.0, 1.5]),
            q: DVector::from_vec(vec![-1.0, 0.0]),
            z_a: DVector::zeros(1),
            z_b: DVector::zeros(1),
        };
        assert_eq!(line.eta_star(), EtaStar::Unbounded);

        // Touching intervals count as feasible.
        let touching = EtaLine::<f64> {
            p: DVector::from_vec(vec![0.0, -3.0]),
            q: DVector::from_vec(vec![-1.0, 2.0]),
            z_a: DVector::zeros(1),
            z_b: DVector::zeros(1),
        };
        // row 0: w ∈ [0, 1]; row 1: w ∈ [1, 2].
        assert_eq!(touching.eta_star(), EtaStar::Finite(1.0));

        let independent = EtaLine::<f64> {
            p: DVector::from_vec(vec![0.5]),
            q: DVector::from_vec(vec![0.0]),
            z_a: DVector::zeros(1),
            z_b: DVector::zeros(1),
        };
        assert_eq!(independent.eta_star(), EtaStar::Finite(0.0));
    }

    #[test]
    fn duals_on_the_boundary() {
        let (s, l) = recover_duals(&DVector::from_element(1, 0.0f64), 0.25, &DVector::from_element(1, -1.0));
        assert!(l[0].abs() < 1e-15);
        assert!((s[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duals_on_the_central_path() {
        let gamma = DVector::from_vec(vec![0.3f64, -1.2, 2.0]);
        let (s, l) = recover_duals(&gamma, 0.7, &DVector::zeros(3));
        for i in 0..3 {
            assert!((s[i] * l[i] - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn gamma_is_clamped_before_exponentiation() {
        let qp = scalar_qp();
        let it = LdipmIterate { gamma: DVector::from_element(1, 1e4), eta: 1.0 };
        let r = newton_direction(&it, &qp).unwrap();
        assert!(r.d.iter().all(|x| x.is_finite()));
        let nan = LdipmIterate { gamma: DVector::from_element(1, f64::NAN), eta: 1.0 };
        assert_eq!(newton_direction(&nan, &qp).unwrap_err(), Error::NonFinite("γ"));
    }
}
