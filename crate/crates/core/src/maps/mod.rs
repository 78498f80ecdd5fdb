//! Map models on S¹ and T²: evaluation, exact derivatives, inverse branches.

mod custom;

use std::fmt;
use std::sync::Arc;

pub use custom::{ClosedFormMap, LinearToral};

use crate::error::{Error, Result};
use crate::linalg::{Jacobian, Vector};
use crate::scalar::Real;

/// Below this `|g'|` a computed preimage is treated as a critical point.
pub const ZERO_DERIVATIVE_TOL: f64 = 1e-7;

/// Maximum residual between consecutive orbit-segment points.
pub const ORBIT_TOL: f64 = 1e-12;

/// A point of S¹ (`dim == 1`) or T² (`dim == 2`) in canonical coordinates
/// `[0, 1)^d`. In dimension 1 the second coordinate is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatePoint<T> {
    dim: usize,
    c: [T; 2],
}

/// Reduces `x` into `[0, 1)`.
#[inline]
pub fn wrap<T: Real>(x: T) -> T {
    let r = x - x.floor();
    if r >= T::one() || r < T::zero() {
        T::zero()
    } else {
        r
    }
}

/// Representative of `x mod 1` in `[-1/2, 1/2]`.
#[inline]
pub fn wrap_signed<T: Real>(x: T) -> T {
    x - x.round()
}

impl<T: Real> StatePoint<T> {
    pub fn circle(x: T) -> Self {
        StatePoint { dim: 1, c: [wrap(x), T::zero()] }
    }

    pub fn torus(x: T, y: T) -> Self {
        StatePoint { dim: 2, c: [wrap(x), wrap(y)] }
    }

    pub fn new(dim: usize, c: [T; 2]) -> Self {
        if dim == 1 {
            Self::circle(c[0])
        } else {
            Self::torus(c[0], c[1])
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn x(&self) -> T {
        self.c[0]
    }

    #[inline]
    pub fn y(&self) -> T {
        self.c[1]
    }

    pub fn coords(&self) -> &[T] {
        &self.c[..self.dim]
    }

    pub fn as_vector(&self) -> Vector<T> {
        self.c
    }

    /// Shortest displacement `other - self` on the flat torus.
    pub fn displacement_to(&self, other: &Self) -> Vector<T> {
        let dx = wrap_signed(other.c[0] - self.c[0]);
        let dy = if self.dim == 2 { wrap_signed(other.c[1] - self.c[1]) } else { T::zero() };
        [dx, dy]
    }

    /// Flat distance: componentwise `min(|Δ|, 1 - |Δ|)` combined by the
    /// Euclidean norm.
    pub fn dist(&self, other: &Self) -> T {
        let d = self.displacement_to(other);
        d[0].hypot(d[1])
    }

    pub fn translate(&self, v: &Vector<T>) -> Self {
        Self::new(self.dim, [self.c[0] + v[0], self.c[1] + v[1]])
    }

    /// Lexicographic order on canonical coordinates.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.c[0]
            .partial_cmp(&other.c[0])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(self.c[1].partial_cmp(&other.c[1]).unwrap_or(std::cmp::Ordering::Equal))
    }
}

impl<T: Real> fmt::Display for StatePoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == 1 {
            write!(f, "({})", self.c[0])
        } else {
            write!(f, "({}, {})", self.c[0], self.c[1])
        }
    }
}

/// Built-in map families.
#[derive(Clone, Debug)]
pub enum Family<T: Real> {
    /// `x ↦ 2x mod 1`.
    Doubling,
    /// `x ↦ 2x + s/(2π)·sin(2πx) mod 1`, a local diffeomorphism iff `|s| < 2`.
    PerturbedDoubling { s: T },
    /// `v ↦ [[2,1],[1,1]] v mod 1`.
    CatMap,
    /// Cat map composed after the shear `(x, y) ↦ (x + s/(2π)·sin(2πy), y)`.
    PerturbedCat { s: T },
    Custom(Arc<dyn ClosedFormMap<T>>),
}

/// An immutable map model together with its inverse-branch domain radius.
#[derive(Clone, Debug)]
pub struct MapModel<T: Real> {
    family: Family<T>,
    branch_radius: T,
}

/// An orbit segment `x, g(x), …, gⁿ(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSegment<T> {
    pub model_id: String,
    pub points: Vec<StatePoint<T>>,
}

impl<T: Real> OrbitSegment<T> {
    /// Number of steps `n` (the segment holds `n + 1` points).
    pub fn len(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> &StatePoint<T> {
        &self.points[0]
    }

    pub fn end(&self) -> &StatePoint<T> {
        self.points.last().expect("segment is never empty")
    }

    /// `d(gⁿ(x), x)`.
    pub fn closing_gap(&self) -> T {
        self.start().dist(self.end())
    }

    /// Largest `d(g(x_j), x_{j+1})` along the segment.
    pub fn map_residual(&self, model: &MapModel<T>) -> T {
        self.points
            .windows(2)
            .map(|w| model.eval(&w[0]).dist(&w[1]))
            .fold(T::zero(), T::max)
    }
}

const CAT: [[f64; 2]; 2] = [[2.0, 1.0], [1.0, 1.0]];

impl<T: Real> MapModel<T> {
    fn from_family(family: Family<T>) -> Self {
        MapModel { family, branch_radius: T::lit(0.05) }
    }

    pub fn doubling() -> Self {
        Self::from_family(Family::Doubling)
    }

    pub fn perturbed_doubling(s: T) -> Result<Self> {
        if !s.is_finite() || s.abs() > T::lit(2.0) {
            return Err(Error::Precondition(format!(
                "perturbed_doubling requires |s| <= 2 for a monotone lift, got {s}"
            )));
        }
        Ok(Self::from_family(Family::PerturbedDoubling { s }))
    }

    pub fn cat_map() -> Self {
        Self::from_family(Family::CatMap)
    }

    pub fn perturbed_cat(s: T) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::Precondition("perturbed_cat parameter must be finite".into()));
        }
        Ok(Self::from_family(Family::PerturbedCat { s }))
    }

    pub fn custom(map: Arc<dyn ClosedFormMap<T>>) -> Result<Self> {
        match map.dimension() {
            1 | 2 => Ok(Self::from_family(Family::Custom(map))),
            d => Err(Error::Precondition(format!("custom map dimension must be 1 or 2, got {d}"))),
        }
    }

    pub fn with_branch_radius(mut self, radius: T) -> Self {
        self.branch_radius = radius;
        self
    }

    /// Radius of balls on which inverse branches are treated as well defined.
    pub fn branch_radius(&self) -> T {
        self.branch_radius
    }

    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    pub fn id(&self) -> String {
        match &self.family {
            Family::Doubling => "doubling".into(),
            Family::PerturbedDoubling { s } => format!("perturbed_doubling(s={s})"),
            Family::CatMap => "cat_map".into(),
            Family::PerturbedCat { s } => format!("perturbed_cat(s={s})"),
            Family::Custom(m) => format!("custom:{}", m.name()),
        }
    }

    pub fn dimension(&self) -> usize {
        match &self.family {
            Family::Doubling | Family::PerturbedDoubling { .. } => 1,
            Family::CatMap | Family::PerturbedCat { .. } => 2,
            Family::Custom(m) => m.dimension(),
        }
    }

    /// Topological degree (circle maps only).
    pub fn degree(&self) -> Option<u32> {
        match &self.family {
            Family::Doubling | Family::PerturbedDoubling { .. } => Some(2),
            Family::CatMap | Family::PerturbedCat { .. } => None,
            Family::Custom(m) => m.degree(),
        }
    }

    pub fn is_invertible(&self) -> bool {
        match &self.family {
            Family::Doubling | Family::PerturbedDoubling { .. } => false,
            Family::CatMap | Family::PerturbedCat { .. } => true,
            Family::Custom(m) => m.is_invertible(),
        }
    }

    /// Perturbation parameter of a perturbed family.
    pub fn parameter(&self) -> Option<T> {
        match self.family {
            Family::PerturbedDoubling { s } | Family::PerturbedCat { s } => Some(s),
            _ => None,
        }
    }

    /// The same perturbed family at parameter `s`.
    pub fn with_parameter(&self, s: T) -> Result<Self> {
        let m = match self.family {
            Family::PerturbedDoubling { .. } => Self::perturbed_doubling(s)?,
            Family::PerturbedCat { .. } => Self::perturbed_cat(s)?,
            _ => {
                return Err(Error::Unsupported {
                    model: self.id(),
                    what: "parameter continuation".into(),
                })
            }
        };
        Ok(m.with_branch_radius(self.branch_radius))
    }

    /// The linear model a built-in family is homotopic to.
    pub fn linear_model(&self) -> Option<Self> {
        match &self.family {
            Family::Doubling | Family::PerturbedDoubling { .. } => Some(Self::doubling()),
            Family::CatMap | Family::PerturbedCat { .. } => Some(Self::cat_map()),
            Family::Custom(m) if m.integer_matrix().is_some() => Some(self.clone()),
            Family::Custom(_) => None,
        }
    }

    /// Integer matrix for linear toral models (cat map or linear custom).
    pub fn integer_matrix(&self) -> Option<[[i64; 2]; 2]> {
        match &self.family {
            Family::CatMap => Some([[2, 1], [1, 1]]),
            Family::Custom(m) => m.integer_matrix(),
            _ => None,
        }
    }

    /// Lift of a circle map, `L(x + 1) = L(x) + degree`.
    pub fn lift(&self, x: T) -> Option<T> {
        match &self.family {
            Family::Doubling => Some(T::lit(2.0) * x),
            Family::PerturbedDoubling { s } => {
                let two_pi = T::TAU();
                Some(T::lit(2.0) * x + (*s / two_pi) * (two_pi * x).sin())
            }
            Family::Custom(m) if m.dimension() == 1 => m.lift(x),
            _ => None,
        }
    }

    /// Exact evaluation `g(x)`.
    pub fn eval(&self, x: &StatePoint<T>) -> StatePoint<T> {
        match &self.family {
            Family::Doubling | Family::PerturbedDoubling { .. } => {
                StatePoint::circle(self.lift(x.x()).expect("circle family has a lift"))
            }
            Family::CatMap => {
                let v = apply_cat([x.x(), x.y()]);
                StatePoint::torus(v[0], v[1])
            }
            Family::PerturbedCat { s } => {
                let sheared = x.x() + (*s / T::TAU()) * (T::TAU() * x.y()).sin();
                let v = apply_cat([sheared, x.y()]);
                StatePoint::torus(v[0], v[1])
            }
            Family::Custom(m) => m.eval(x),
        }
    }

    /// Exact derivative `Dg(x)`.
    pub fn jacobian(&self, x: &StatePoint<T>) -> Result<Jacobian<T>> {
        match &self.family {
            Family::Doubling => Ok(Jacobian::scalar(T::lit(2.0))),
            Family::PerturbedDoubling { s } => {
                Ok(Jacobian::scalar(T::lit(2.0) + *s * (T::TAU() * x.x()).cos()))
            }
            Family::CatMap => Ok(cat_jacobian()),
            Family::PerturbedCat { s } => {
                let shear = Jacobian::matrix(
                    T::one(),
                    *s * (T::TAU() * x.y()).cos(),
                    T::zero(),
                    T::one(),
                );
                Ok(cat_jacobian().mul(&shear))
            }
            Family::Custom(m) => m.jacobian(x).ok_or_else(|| Error::MissingDerivative(m.name())),
        }
    }

    /// Global inverse of an invertible model.
    pub fn inverse(&self, y: &StatePoint<T>) -> Result<StatePoint<T>> {
        match &self.family {
            Family::CatMap => {
                let v = apply_cat_inverse([y.x(), y.y()]);
                Ok(StatePoint::torus(v[0], v[1]))
            }
            Family::PerturbedCat { s } => {
                let v = apply_cat_inverse([y.x(), y.y()]);
                let v1 = wrap(v[1]);
                Ok(StatePoint::torus(v[0] - (*s / T::TAU()) * (T::TAU() * v1).sin(), v1))
            }
            Family::Custom(m) if m.is_invertible() => {
                m.inverse(y).ok_or_else(|| Error::Unsupported { model: m.name(), what: "inverse".into() })
            }
            _ => Err(Error::Unsupported { model: self.id(), what: "global inverse".into() }),
        }
    }

    /// Branch index of `x` under the left-closed partition cut at the
    /// preimages of `L(0)`.
    pub fn branch_index(&self, x: &StatePoint<T>) -> usize {
        let (Some(k), Some(l0), Some(lx)) = (self.degree(), self.lift(T::zero()), self.lift(x.x())) else {
            return 0;
        };
        let idx = (lx - l0).floor().to_i64().unwrap_or(0);
        idx.clamp(0, k as i64 - 1) as usize
    }

    /// Preimage of `y` in branch `branch`, with `y ∈ [0, 1]` interpreted on
    /// the lift so that `y = 1` returns the right endpoint of the branch.
    pub fn preimage_lifted(&self, branch: usize, y: T) -> Result<T> {
        let k = self.degree().ok_or_else(|| Error::Unsupported {
            model: self.id(),
            what: "inverse branches of a non-circle map".into(),
        })?;
        if branch >= k as usize {
            return Err(Error::Precondition(format!("branch {branch} out of range for degree {k}")));
        }
        let lift = |x: T| self.lift(x).expect("checked circle lift");
        if self.lift(T::zero()).is_none() {
            return Err(Error::Unsupported { model: self.id(), what: "circle lift".into() });
        }
        let c0 = lift(T::zero());
        let target = c0 + T::count(branch) + y;
        let deriv = |x: T| self.jacobian(&StatePoint::circle(x)).ok().map(|j| j.get(0, 0));
        Ok(solve_monotone(lift, deriv, target))
    }

    /// Preimage of `y` in the given branch (no derivative check).
    pub fn preimage(&self, branch: usize, y: &StatePoint<T>) -> Result<StatePoint<T>> {
        let l0 = self.lift(T::zero()).unwrap_or(T::zero());
        let yy = wrap(y.x() - l0);
        self.preimage_lifted(branch, yy).map(StatePoint::circle)
    }

    /// All preimages of `y` with the branch derivative `[Dg(preimage)]⁻¹`.
    pub fn inverse_branches(&self, y: &StatePoint<T>) -> Result<Vec<(StatePoint<T>, Jacobian<T>)>> {
        if self.is_invertible() {
            let x = self.inverse(y)?;
            let j = self.jacobian(&x)?;
            let inv = j.inverse().ok_or(Error::ZeroDerivative { x: x.x().as_f64() })?;
            return Ok(vec![(x, inv)]);
        }
        let k = self.degree().ok_or_else(|| Error::Unsupported {
            model: self.id(),
            what: "inverse branches need a circle degree or an invertible model".into(),
        })?;
        (0..k as usize)
            .map(|b| {
                let x = self.preimage(b, y)?;
                let j = self.jacobian(&x)?;
                if j.conorm() <= T::lit(ZERO_DERIVATIVE_TOL) {
                    return Err(Error::ZeroDerivative { x: x.x().as_f64() });
                }
                Ok((x, j.inverse().expect("nonzero derivative")))
            })
            .collect()
    }

    pub fn iterate_orbit(&self, x: &StatePoint<T>, n: usize) -> OrbitSegment<T> {
        let mut points = Vec::with_capacity(n + 1);
        let mut cur = *x;
        points.push(cur);
        for _ in 0..n {
            cur = self.eval(&cur);
            points.push(cur);
        }
        OrbitSegment { model_id: self.id(), points }
    }

    /// `Dgⁿ(x)` along the forward orbit.
    pub fn jacobian_power(&self, x: &StatePoint<T>, n: usize) -> Result<Jacobian<T>> {
        let mut acc = Jacobian::identity(self.dimension());
        let mut cur = *x;
        for _ in 0..n {
            acc = self.jacobian(&cur)?.mul(&acc);
            cur = self.eval(&cur);
        }
        Ok(acc)
    }

    /// Deterministic scan of `‖[Dg(x)]⁻¹‖⁻¹` over the uniform grid with
    /// `grid_size` points per axis. Returns the minimum and its location.
    pub fn min_conorm_scan(&self, grid_size: usize) -> Result<(T, StatePoint<T>)> {
        if grid_size < 2 {
            return Err(Error::Precondition("grid_size must be at least 2".into()));
        }
        let h = T::one() / T::count(grid_size);
        let mut best = (T::infinity(), StatePoint::new(self.dimension(), [T::zero(); 2]));
        let rows = if self.dimension() == 1 { 1 } else { grid_size };
        for i in 0..grid_size {
            for j in 0..rows {
                let p = StatePoint::new(self.dimension(), [T::count(i) * h, T::count(j) * h]);
                let c = self.jacobian(&p)?.conorm();
                if c < best.0 {
                    best = (c, p);
                }
            }
        }
        Ok(best)
    }
}

fn cat_jacobian<T: Real>() -> Jacobian<T> {
    Jacobian::matrix(T::lit(CAT[0][0]), T::lit(CAT[0][1]), T::lit(CAT[1][0]), T::lit(CAT[1][1]))
}

#[inline]
fn apply_cat<T: Real>(v: [T; 2]) -> [T; 2] {
    [v[0] + v[0] + v[1], v[0] + v[1]]
}

#[inline]
fn apply_cat_inverse<T: Real>(v: [T; 2]) -> [T; 2] {
    [v[0] - v[1], v[1] + v[1] - v[0]]
}

/// Solves `f(x) = target` for a nondecreasing `f` on `[0, 1]` with
/// `f(0) <= target <= f(1)`: Newton steps kept inside a shrinking bracket,
/// bisection when Newton leaves it, until the bracket is below machine
/// resolution.
fn solve_monotone<T: Real>(f: impl Fn(T) -> T, df: impl Fn(T) -> Option<T>, target: T) -> T {
    let (mut lo, mut hi) = (T::zero(), T::one());
    let (flo, fhi) = (f(lo) - target, f(hi) - target);
    if flo >= T::zero() {
        return lo;
    }
    if fhi <= T::zero() {
        return hi;
    }
    // secant start: exact for linear lifts
    let mut x = lo - flo * (hi - lo) / (fhi - flo);
    for _ in 0..200 {
        if !(x > lo && x < hi) {
            x = (lo + hi) / T::lit(2.0);
        }
        let fx = f(x) - target;
        if fx == T::zero() {
            return x;
        }
        if fx < T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= T::epsilon() * T::lit(2.0) * hi.abs().max(lo.abs()) {
            break;
        }
        x = match df(x) {
            Some(d) if d > T::zero() => {
                let step = fx / d;
                if step.abs() <= T::epsilon() * x.abs() && x - step > lo && x - step < hi {
                    return x - step;
                }
                x - step
            }
            _ => (lo + hi) / T::lit(2.0),
        };
    }
    (lo + hi) / T::lit(2.0)
}
