//! Computational governor.
//!
//! For a fixed warm start γ̄ the Newton direction of the condensed QP with
//! reference `v + κ(r − v)` is affine in `(1/√η, κ/√η)`:
//! `d(η, κ) = d₀ + d₁/√η + d₂κ/√η`. The three vectors are recovered from
//! Newton directions sampled at three `(η, κ)` pairs that share one
//! factorization. The constraint `‖d‖∞ ≤ 1` is then linear in `(√η, κ)`, so
//! the largest admissible reference step is a two-variable LP.

mod seidel;

pub use seidel::{seidel_solve, HalfPlane, Lp2d, LpOutcome};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mpc::CondensedQp;
use crate::qp::NewtonSystem;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct GovernorConfig<T> {
    /// Weight on `√η` in the LP objective `κ − c√η`.
    pub c: T,
    pub eta_min: T,
    pub eta_max: T,
    /// Starting η when the LP is infeasible.
    pub eta_bar: T,
    pub sample_etas: (T, T),
    pub sample_kappas: (T, T),
    /// The LP enforces `‖d‖∞ ≤ 1 − margin`, so the optimal vertex still
    /// satisfies `‖d‖∞ ≤ 1` once `d` is recomputed in floating point.
    pub margin: T,
    pub rng_seed: u64,
}

impl<T: Real> Default for GovernorConfig<T> {
    fn default() -> Self {
        Self {
            c: T::one(),
            eta_min: T::lit(1e-10),
            eta_max: T::lit(1e-2),
            eta_bar: T::lit(1e4),
            sample_etas: (T::one(), T::lit(0.25)),
            sample_kappas: (T::zero(), T::one()),
            margin: T::attainable(1e-9),
            rng_seed: 0,
        }
    }
}

impl<T: Real> GovernorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: &str| Err(Error::GovernorConfig(msg.into()));
        if !(self.c >= T::zero()) {
            return err("c must be nonnegative");
        }
        if !(self.eta_min > T::zero() && self.eta_min < self.eta_max) {
            return err("need 0 < eta_min < eta_max");
        }
        if !(self.margin >= T::zero() && self.margin < T::one()) {
            return err("margin must lie in [0, 1)");
        }
        if !(self.eta_bar >= T::one()) {
            return err("eta_bar must be at least 1");
        }
        let (e1, e2) = self.sample_etas;
        if !(e1 > T::zero() && e2 > T::zero()) || e1 == e2 {
            return err("sample etas must be positive and distinct");
        }
        let (k1, k2) = self.sample_kappas;
        let unit = |k: T| k >= T::zero() && k <= T::one();
        if !(unit(k1) && unit(k2)) || k1 == k2 {
            return err("sample kappas must lie in [0, 1] and be distinct");
        }
        if self.b0() == T::one() {
            return err("sample etas give b0 = 1");
        }
        Ok(())
    }

    fn a0(&self) -> T {
        let (k1, k2) = self.sample_kappas;
        -k2 / (k1 - k2)
    }

    fn a1(&self) -> T {
        let (k1, k2) = self.sample_kappas;
        T::one() / (k1 - k2)
    }

    fn b0(&self) -> T {
        let (w1, w2) = self.sample_inv_sqrt();
        -w2 / (w1 - w2)
    }

    fn b1(&self) -> T {
        let (w1, w2) = self.sample_inv_sqrt();
        T::one() / (w1 - w2)
    }

    fn sample_inv_sqrt(&self) -> (T, T) {
        (T::one() / self.sample_etas.0.sqrt(), T::one() / self.sample_etas.1.sqrt())
    }
}

/// `d(η, κ) = d₀ + d₁/√η + d₂κ/√η`.
#[derive(Debug, Clone, PartialEq)]
pub struct GovernorDecomposition<T: Real> {
    pub d0: DVector<T>,
    pub d1: DVector<T>,
    pub d2: DVector<T>,
    /// `‖b₀c₂ + (1 − b₀)c₄‖∞`, the coefficient of the `κ` term that must vanish.
    pub d3_residual: T,
}

impl<T: Real> GovernorDecomposition<T> {
    pub fn direction(&self, eta: T, kappa: T) -> DVector<T> {
        let w = T::one() / eta.sqrt();
        &self.d0 + &self.d1 * w + &self.d2 * (w * kappa)
    }
}

fn blend<T: Real>(v: &DVector<T>, r: &DVector<T>, kappa: T) -> DVector<T> {
    v + (r - v) * kappa
}

/// Newton directions at `(η₁, κ₁)`, `(η₁, κ₂)`, `(η₂, κ₁)` for the condensed QP
/// at `(x, v + κ(r − v))`, all solved with a single factorization of
/// `MᵀΦ(γ̄)M + H`.
pub fn sample_newton_directions<T: Real>(
    gamma_bar: &DVector<T>,
    qp: &CondensedQp<T>,
    x: &DVector<T>,
    v: &DVector<T>,
    r: &DVector<T>,
    cfg: &GovernorConfig<T>,
) -> Result<[DVector<T>; 3]> {
    let sys = NewtonSystem::factor(&qp.m, &qp.h, gamma_bar)?;
    let e = sys.exp_gamma();
    let mt_e = qp.m.transpose() * e;
    let direction = |eta: T, kappa: T| -> Result<DVector<T>> {
        let vk = blend(v, r, kappa);
        let offset = qp.offset(x, &vk);
        let phi_off = offset.component_mul(e).component_mul(e);
        let sqrt_eta = eta.sqrt();
        let rhs = &mt_e * (T::lit(2.0) * sqrt_eta) - (qp.linear_cost(x, &vk) + qp.m.transpose() * phi_off);
        let mu = sys.solve(&rhs);
        let d = ((&qp.m * mu + offset).component_mul(e) / sqrt_eta).map(|s| T::one() - s);
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("sampled Newton direction"));
        }
        Ok(d)
    };
    let (e1, e2) = cfg.sample_etas;
    let (k1, k2) = cfg.sample_kappas;
    Ok([direction(e1, k1)?, direction(e1, k2)?, direction(e2, k1)?])
}

/// Recovers `(d₀, d₁, d₂)` from three sampled directions; the fourth,
/// `d̂₄ = b₀(1 − b₀)⁻¹(d̂₁ − d̂₂) + d̂₃`, follows from `d₃ = 0`.
pub fn decompose<T: Real>(
    d_hats: &[DVector<T>; 3],
    cfg: &GovernorConfig<T>,
) -> Result<GovernorDecomposition<T>> {
    let [d1h, d2h, d3h] = d_hats;
    let (a0, a1, b0, b1) = (cfg.a0(), cfg.a1(), cfg.b0(), cfg.b1());
    let one = T::one();
    let d4h = (d1h - d2h) * (b0 / (one - b0)) + d3h;
    let c1 = d1h * a0 + d2h * (one - a0);
    let c2 = (d1h - d2h) * a1;
    let c3 = d3h * a0 + &d4h * (one - a0);
    let c4 = (d3h - &d4h) * a1;
    let d0 = &c1 * b0 + &c3 * (one - b0);
    let d1 = (&c1 - &c3) * b1;
    let d2 = (&c2 - &c4) * b1;
    let d3 = &c2 * b0 + &c4 * (one - b0);
    let d3_residual = linalg::inf_norm(&d3);
    let scale = one + linalg::inf_norm(d1h).max(linalg::inf_norm(d2h)).max(linalg::inf_norm(d3h));
    if !(d3_residual <= T::attainable(1e-8) * scale) {
        return Err(Error::Decomposition(d3_residual.to_f64_lossy()));
    }
    Ok(GovernorDecomposition { d0, d1, d2, d3_residual })
}

/// `‖d‖∞ ≤ ρ` rewritten over `(s, κ)` with `s = √η` and `ρ = 1 − margin`:
/// `(d₀ − ρ)s + d₂κ ≤ −d₁` and `−(d₀ + ρ)s − d₂κ ≤ d₁`, objective `κ − cs`.
pub fn build_lp<T: Real>(dec: &GovernorDecomposition<T>, cfg: &GovernorConfig<T>) -> Lp2d<T> {
    let m = dec.d0.len();
    let bound = T::one() - cfg.margin;
    let mut rows = Vec::with_capacity(2 * m);
    for i in 0..m {
        let (d0, d1, d2) = (dec.d0[i], dec.d1[i], dec.d2[i]);
        rows.push(HalfPlane::new(d0 - bound, d2, -d1));
        rows.push(HalfPlane::new(-(d0 + bound), -d2, d1));
    }
    Lp2d {
        rows,
        objective: [-cfg.c, T::one()],
        lower: [cfg.eta_min.sqrt(), T::zero()],
        upper: [cfg.eta_max.sqrt(), T::one()],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GovernorOutcome<T: Real> {
    pub eta: T,
    pub kappa: T,
    pub v: DVector<T>,
    /// True when the LP was infeasible and `(η̄, 0)` was used.
    pub fallback: bool,
}

/// Picks `(η_k, κ_k)` for this timestep and the governed reference
/// `v_k = v_prev + κ_k(r − v_prev)`. Falls back to `(η̄, 0, v_prev)` when no
/// `(η, κ)` in the box keeps the warm start primal-dual feasible.
///
/// `stream` is mixed into the shuffle seed (the simulator passes the step index).
pub fn govern<T: Real>(
    gamma_bar: &DVector<T>,
    qp: &CondensedQp<T>,
    x: &DVector<T>,
    v_prev: &DVector<T>,
    r: &DVector<T>,
    cfg: &GovernorConfig<T>,
    stream: u64,
) -> Result<GovernorOutcome<T>> {
    let d_hats = sample_newton_directions(gamma_bar, qp, x, v_prev, r, cfg)?;
    let dec = decompose(&d_hats, cfg)?;
    let lp = build_lp(&dec, cfg);
    let seed = cfg.rng_seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    Ok(match seidel_solve(&lp, seed) {
        LpOutcome::Optimal { x: [s, kappa], .. } => {
            let eta = s * s;
            GovernorOutcome { eta, kappa, v: blend(v_prev, r, kappa), fallback: false }
        }
        LpOutcome::Infeasible => GovernorOutcome {
            eta: cfg.eta_bar,
            kappa: T::zero(),
            v: v_prev.clone(),
            fallback: true,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = GovernorConfig::<f64>::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.b0(), 2.0);
        assert_eq!(cfg.b1(), -1.0);
    }

    #[test]
    fn invalid_configs() {
        let base = GovernorConfig::<f64>::default();
        let same_eta = GovernorConfig { sample_etas: (0.5, 0.5), ..base.clone() };
        assert!(same_eta.validate().is_err());
        let same_kappa = GovernorConfig { sample_kappas: (0.3, 0.3), ..base.clone() };
        assert!(same_kappa.validate().is_err());
        let kappa_out = GovernorConfig { sample_kappas: (0.0, 1.5), ..base.clone() };
        assert!(kappa_out.validate().is_err());
        let bounds = GovernorConfig { eta_min: 1.0, eta_max: 0.5, ..base.clone() };
        assert!(bounds.validate().is_err());
        let small_bar = GovernorConfig { eta_bar: 0.5, ..base.clone() };
        assert!(small_bar.validate().is_err());
        let negative_c = GovernorConfig { c: -1.0, ..base };
        assert!(negative_c.validate().is_err());
    }

    #[test]
    fn constant_directions_decompose_to_d0() {
        let cfg = GovernorConfig::<f64>::default();
        let u = DVector::from_vec(vec![0.3, -0.7, 0.1]);
        let dec = decompose(&[u.clone(), u.clone(), u.clone()], &cfg).unwrap();
        assert!(linalg::inf_norm(&(&dec.d0 - &u)) < 1e-15);
        assert!(linalg::inf_norm(&dec.d1) < 1e-15);
        assert!(linalg::inf_norm(&dec.d2) < 1e-15);
    }

    #[test]
    fn exact_affine_directions_are_recovered() {
        let cfg = GovernorConfig { sample_etas: (0.7, 0.05), sample_kappas: (0.2, 0.9), ..Default::default() };
        let d0 = DVector::from_vec(vec![0.1, -2.0]);
        let d1 = DVector::from_vec(vec![0.5, 0.25]);
        let d2 = DVector::from_vec(vec![-1.0, 3.0]);
        let truth = |eta: f64, kappa: f64| &d0 + &d1 / eta.sqrt() + &d2 * (kappa / eta.sqrt());
        let (e1, e2) = cfg.sample_etas;
        let (k1, k2) = cfg.sample_kappas;
        let dec = decompose(&[truth(e1, k1), truth(e1, k2), truth(e2, k1)], &cfg).unwrap();
        assert!(linalg::inf_norm(&(&dec.d0 - &d0)) < 1e-12);
        assert!(linalg::inf_norm(&(&dec.d1 - &d1)) < 1e-12);
        assert!(linalg::inf_norm(&(&dec.d2 - &d2)) < 1e-12);
    }

    #[test]
    fn zero_decomposition_gives_whole_box() {
        let cfg = GovernorConfig::<f64>::default();
        let z = DVector::zeros(4);
        let dec = GovernorDecomposition { d0: z.clone(), d1: z.clone(), d2: z, d3_residual: 0.0 };
        let lp = build_lp(&dec, &cfg);
        assert_eq!(lp.rows.len(), 8);
        assert_eq!(lp.all_rows().len(), 12);
        let (x, _) = seidel_solve(&lp, 0).optimum().unwrap();
        assert!((x[0] - 1e-5).abs() < 1e-18);
        assert_eq!(x[1], 1.0);
    }

    #[test]
    fn single_row_geometry() {
        // d = −2/s must satisfy |d| ≤ 1, i.e. s ≥ 2, outside s ≤ √η_max = 0.1.
        let cfg = GovernorConfig::<f64>::default();
        let dec = GovernorDecomposition {
            d0: DVector::zeros(1),
            d1: DVector::from_element(1, -2.0),
            d2: DVector::zeros(1),
            d3_residual: 0.0,
        };
        assert_eq!(seidel_solve(&build_lp(&dec, &cfg), 0), LpOutcome::Infeasible);
        let wide = GovernorConfig { eta_max: 9.0, margin: 0.0, ..cfg };
        let (x, _) = seidel_solve(&build_lp(&dec, &wide), 0).optimum().unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
    }
}
