//! Seidel's randomized incremental algorithm for two-variable LPs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

/// Half-plane `alpha·x₀ + beta·x₁ ≤ delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane<T> {
    pub alpha: T,
    pub beta: T,
    pub delta: T,
}

impl<T: Real> HalfPlane<T> {
    pub fn new(alpha: T, beta: T, delta: T) -> Self {
        Self { alpha, beta, delta }
    }

    pub fn eval(&self, x: [T; 2]) -> T {
        self.alpha * x[0] + self.beta * x[1]
    }

    /// `αx₀ + βx₁ ≤ δ` up to a relative 1e-12.
    pub fn satisfied(&self, x: [T; 2]) -> bool {
        let lhs = self.eval(x);
        let scale = T::one() + (self.alpha * x[0]).abs() + (self.beta * x[1]).abs() + self.delta.abs();
        lhs <= self.delta + T::attainable(1e-12) * scale
    }
}

/// `max objectiveᵀx  s.t.  rows, lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lp2d<T> {
    pub rows: Vec<HalfPlane<T>>,
    pub objective: [T; 2],
    pub lower: [T; 2],
    pub upper: [T; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { x: [T; 2], value: T },
    Infeasible,
}

impl<T: Real> LpOutcome<T> {
    pub fn optimum(&self) -> Option<([T; 2], T)> {
        match *self {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            LpOutcome::Infeasible => None,
        }
    }
}

impl<T: Real> Lp2d<T> {
    /// The four bound constraints as half-planes.
    pub fn box_rows(&self) -> [HalfPlane<T>; 4] {
        let (o, z) = (T::one(), T::zero());
        [
            HalfPlane::new(o, z, self.upper[0]),
            HalfPlane::new(-o, z, -self.lower[0]),
            HalfPlane::new(z, o, self.upper[1]),
            HalfPlane::new(z, -o, -self.lower[1]),
        ]
    }

    /// Every constraint: the general rows followed by the four box rows.
    pub fn all_rows(&self) -> Vec<HalfPlane<T>> {
        let mut all = self.rows.clone();
        all.extend_from_slice(&self.box_rows());
        all
    }

    pub fn value(&self, x: [T; 2]) -> T {
        self.objective[0] * x[0] + self.objective[1] * x[1]
    }
}

/// Randomized incremental solve in expected `O(rows)` time.
///
/// The box optimum seeds the incumbent. Rows are inserted in a seeded random
/// order; when a row cuts off the incumbent, the new optimum lies on that
/// row's boundary line and is found by a one-dimensional LP over the box and
/// the rows inserted before it.
pub fn seidel_solve<T: Real>(lp: &Lp2d<T>, seed: u64) -> LpOutcome<T> {
    for j in 0..2 {
        if lp.lower[j] > lp.upper[j] {
            return LpOutcome::Infeasible;
        }
    }
    let mut x = [T::zero(); 2];
    for j in 0..2 {
        x[j] = if lp.objective[j] > T::zero() { lp.upper[j] } else { lp.lower[j] };
    }
    let mut order: Vec<usize> = (0..lp.rows.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let box_rows = lp.box_rows();
    let mut inserted: Vec<HalfPlane<T>> = Vec::with_capacity(order.len());
    for &i in &order {
        let row = lp.rows[i];
        if !row.satisfied(x) {
            match solve_on_line(&row, inserted.iter().chain(box_rows.iter()), lp.objective) {
                Some(next) => x = next,
                None => return LpOutcome::Infeasible,
            }
        }
        inserted.push(row);
    }
    LpOutcome::Optimal { x, value: lp.value(x) }
}

/// Maximizes the objective on the line `alpha·x₀ + beta·x₁ = delta` subject to `rows`.
fn solve_on_line<'a, T: Real + 'a>(
    line: &HalfPlane<T>,
    rows: impl Iterator<Item = &'a HalfPlane<T>>,
    objective: [T; 2],
) -> Option<[T; 2]> {
    let norm2 = line.alpha * line.alpha + line.beta * line.beta;
    if norm2 == T::zero() {
        // 0 ≤ delta was violated.
        return None;
    }
    let norm = norm2.sqrt();
    let origin = [line.alpha * line.delta / norm2, line.beta * line.delta / norm2];
    let dir = [-line.beta / norm, line.alpha / norm];
    let mut lo: Option<T> = None;
    let mut hi: Option<T> = None;
    let tiny = T::attainable(1e-14);
    for row in rows {
        let a = row.alpha * dir[0] + row.beta * dir[1];
        let rhs = row.delta - row.eval(origin);
        let scale = T::one() + row.alpha.abs() + row.beta.abs();
        if a.abs() <= tiny * scale {
            // Parallel to the line: either always or never satisfied.
            if rhs < -T::attainable(1e-12) * (T::one() + row.delta.abs()) {
                return None;
            }
            continue;
        }
        let t = rhs / a;
        if a > T::zero() {
            hi = Some(hi.map_or(t, |h| h.min(t)));
        } else {
            lo = Some(lo.map_or(t, |l| l.max(t)));
        }
    }
    // The box rows always bound the line in both directions.
    let (lo, hi) = (lo?, hi?);
    if lo > hi {
        if lo - hi > T::attainable(1e-12) * (T::one() + lo.abs() + hi.abs()) {
            return None;
        }
        let mid = (lo + hi) * T::lit(0.5);
        return Some([origin[0] + dir[0] * mid, origin[1] + dir[1] * mid]);
    }
    let slope = objective[0] * dir[0] + objective[1] * dir[1];
    let t = if slope > T::zero() { hi } else { lo };
    Some([origin[0] + dir[0] * t, origin[1] + dir[1] * t])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(rows: Vec<HalfPlane<f64>>) -> Lp2d<f64> {
        Lp2d { rows, objective: [-1.0, 1.0], lower: [0.1, 0.0], upper: [10.0, 1.0] }
    }

    #[test]
    fn box_vertex_when_rows_are_slack() {
        let lp = unit_box(vec![HalfPlane::new(-1.0, 0.0, -0.1), HalfPlane::new(0.0, 1.0, 1.0)]);
        let (x, v) = seidel_solve(&lp, 3).optimum().unwrap();
        assert_eq!(x, [0.1, 1.0]);
        assert!((v - 0.9).abs() < 1e-15);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let lp = unit_box(vec![HalfPlane::new(0.0, -1.0, -2.0)]);
        assert_eq!(seidel_solve(&lp, 0), LpOutcome::Infeasible);
    }

    #[test]
    fn cut_through_the_box() {
        // κ ≤ s: optimum of κ − 0.5 s on the unit box is at s = κ = 1.
        let lp = Lp2d {
            rows: vec![HalfPlane::new(-1.0, 1.0, 0.0)],
            objective: [-0.5, 1.0],
            lower: [0.0, 0.0],
            upper: [2.0, 1.0],
        };
        let (x, v): ([f64; 2], f64) = seidel_solve(&lp, 11).optimum().unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn empty_box() {
        let lp = Lp2d::<f64> { rows: vec![], objective: [1.0, 1.0], lower: [1.0, 0.0], upper: [0.0, 1.0] };
        assert_eq!(seidel_solve(&lp, 0), LpOutcome::Infeasible);
    }
}
