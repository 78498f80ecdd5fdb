use std::fmt::Debug;

use crate::linalg::Jacobian;
use crate::maps::StatePoint;
use crate::scalar::Real;

/// A user-supplied closed-form self-map of S¹ or T².
///
/// Derivatives are never approximated: a model without [`jacobian`] cannot
/// be used by any derivative-based check.
///
/// [`jacobian`]: ClosedFormMap::jacobian
pub trait ClosedFormMap<T: Real>: Send + Sync + Debug {
    fn name(&self) -> String;

    /// 1 for circle maps, 2 for torus maps.
    fn dimension(&self) -> usize;

    /// Topological degree of a circle map.
    fn degree(&self) -> Option<u32> {
        None
    }

    fn is_invertible(&self) -> bool;

    fn eval(&self, x: &StatePoint<T>) -> StatePoint<T>;

    fn jacobian(&self, _x: &StatePoint<T>) -> Option<Jacobian<T>> {
        None
    }

    /// Lift `L: ℝ → ℝ` of a circle map with `L(x + 1) = L(x) + degree`.
    /// Required for inverse branches of non-invertible circle maps.
    fn lift(&self, _x: T) -> Option<T> {
        None
    }

    /// Global inverse of an invertible map.
    fn inverse(&self, _y: &StatePoint<T>) -> Option<StatePoint<T>> {
        None
    }

    /// Integer matrix of a linear toral endomorphism, if the map is one.
    fn integer_matrix(&self) -> Option<[[i64; 2]; 2]> {
        None
    }
}

/// Linear toral map `v ↦ M v mod 1` for an integer matrix `M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinearToral {
    pub matrix: [[i64; 2]; 2],
}

impl LinearToral {
    pub fn new(matrix: [[i64; 2]; 2]) -> Self {
        LinearToral { matrix }
    }

    pub fn det(&self) -> i64 {
        let m = self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }
}

impl<T: Real> ClosedFormMap<T> for LinearToral {
    fn name(&self) -> String {
        let m = self.matrix;
        format!("linear[[{},{}],[{},{}]]", m[0][0], m[0][1], m[1][0], m[1][1])
    }

    fn dimension(&self) -> usize {
        2
    }

    fn is_invertible(&self) -> bool {
        self.det().abs() == 1
    }

    fn eval(&self, x: &StatePoint<T>) -> StatePoint<T> {
        let j: Jacobian<T> = self.jacobian(x).expect("linear map has a derivative");
        let v = j.apply(&[x.x(), x.y()]);
        StatePoint::torus(v[0], v[1])
    }

    fn jacobian(&self, _x: &StatePoint<T>) -> Option<Jacobian<T>> {
        let m = self.matrix;
        let f = |v: i64| T::lit(v as f64);
        Some(Jacobian::matrix(f(m[0][0]), f(m[0][1]), f(m[1][0]), f(m[1][1])))
    }

    fn inverse(&self, y: &StatePoint<T>) -> Option<StatePoint<T>> {
        if self.det().abs() != 1 {
            return None;
        }
        let m = self.matrix;
        let d = self.det();
        let inv = [[m[1][1] * d, -m[0][1] * d], [-m[1][0] * d, m[0][0] * d]];
        let f = |v: i64| T::lit(v as f64);
        let (a, b) = (y.x(), y.y());
        Some(StatePoint::torus(
            f(inv[0][0]) * a + f(inv[0][1]) * b,
            f(inv[1][0]) * a + f(inv[1][1]) * b,
        ))
    }

    fn integer_matrix(&self) -> Option<[[i64; 2]; 2]> {
        Some(self.matrix)
    }
}
