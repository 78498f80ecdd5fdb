//! Small fixed-size linear algebra for tangent spaces of dimension 1 or 2.
//!
//! Vectors are stored as `[T; 2]`; in dimension 1 the second component is
//! always zero. The operator norm is the spectral norm and the conorm is
//! `‖A⁻¹‖⁻¹` (the smallest singular value).

use crate::scalar::Real;

pub type Vector<T> = [T; 2];

#[inline]
pub fn dot<T: Real>(a: &Vector<T>, b: &Vector<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm<T: Real>(v: &Vector<T>) -> T {
    v[0].hypot(v[1])
}

#[inline]
pub fn cross<T: Real>(a: &Vector<T>, b: &Vector<T>) -> T {
    a[0] * b[1] - a[1] * b[0]
}

/// Returns `v / ‖v‖`, or `None` for the zero vector.
pub fn normalize<T: Real>(v: &Vector<T>) -> Option<Vector<T>> {
    let n = norm(v);
    if n > T::zero() && n.is_finite() {
        Some([v[0] / n, v[1] / n])
    } else {
        None
    }
}

/// Angle in `[0, π/2]` between the lines spanned by two nonzero vectors.
pub fn line_angle<T: Real>(a: &Vector<T>, b: &Vector<T>) -> T {
    cross(a, b).abs().atan2(dot(a, b).abs())
}

/// Derivative of a map of S¹ (`dim == 1`) or T² (`dim == 2`) at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jacobian<T> {
    dim: usize,
    m: [[T; 2]; 2],
}

/// Eigen-data of a period map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Spectrum<T> {
    /// One-dimensional multiplier.
    Scalar(T),
    /// Two distinct real eigenvalues ordered by increasing modulus, with
    /// matching unit eigenvectors.
    Real { values: [T; 2], vectors: [Vector<T>; 2] },
    /// Repeated real eigenvalue (defective or scalar matrix).
    Repeated(T),
    /// Complex-conjugate pair `re ± i·im`.
    Complex { re: T, im: T },
}

impl<T: Real> Spectrum<T> {
    /// Eigenvalue moduli in increasing order.
    pub fn moduli(&self) -> Vec<T> {
        match *self {
            Spectrum::Scalar(a) => vec![a.abs()],
            Spectrum::Real { values, .. } => vec![values[0].abs(), values[1].abs()],
            Spectrum::Repeated(a) => vec![a.abs(), a.abs()],
            Spectrum::Complex { re, im } => {
                let r = re.hypot(im);
                vec![r, r]
            }
        }
    }

    pub fn is_hyperbolic_real(&self) -> bool {
        matches!(self, Spectrum::Scalar(_) | Spectrum::Real { .. })
    }
}

impl<T: Real> Jacobian<T> {
    pub fn scalar(a: T) -> Self {
        let z = T::zero();
        Jacobian { dim: 1, m: [[a, z], [z, z]] }
    }

    pub fn matrix(a: T, b: T, c: T, d: T) -> Self {
        Jacobian { dim: 2, m: [[a, b], [c, d]] }
    }

    pub fn identity(dim: usize) -> Self {
        if dim == 1 {
            Self::scalar(T::one())
        } else {
            Self::matrix(T::one(), T::zero(), T::zero(), T::one())
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[i][j]
    }

    pub fn rows(&self) -> [[T; 2]; 2] {
        self.m
    }

    pub fn det(&self) -> T {
        if self.dim == 1 {
            self.m[0][0]
        } else {
            self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
        }
    }

    pub fn trace(&self) -> T {
        if self.dim == 1 {
            self.m[0][0]
        } else {
            self.m[0][0] + self.m[1][1]
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        if self.dim == 1 {
            return Some(Self::scalar(T::one() / det));
        }
        let [[a, b], [c, d]] = self.m;
        Some(Self::matrix(d / det, -b / det, -c / det, a / det))
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        if self.dim == 1 {
            return Self::scalar(self.m[0][0] * rhs.m[0][0]);
        }
        let a = &self.m;
        let b = &rhs.m;
        Self::matrix(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn sub_identity(&self) -> Self {
        let mut out = *self;
        out.m[0][0] = out.m[0][0] - T::one();
        if self.dim == 2 {
            out.m[1][1] = out.m[1][1] - T::one();
        }
        out
    }

    pub fn apply(&self, v: &Vector<T>) -> Vector<T> {
        if self.dim == 1 {
            [self.m[0][0] * v[0], T::zero()]
        } else {
            [
                self.m[0][0] * v[0] + self.m[0][1] * v[1],
                self.m[1][0] * v[0] + self.m[1][1] * v[1],
            ]
        }
    }

    /// Largest and smallest singular values.
    pub fn singular_values(&self) -> (T, T) {
        if self.dim == 1 {
            let a = self.m[0][0].abs();
            return (a, a);
        }
        let [[a, b], [c, d]] = self.m;
        let fro = a * a + b * b + c * c + d * d;
        let det = self.det().abs();
        let two = T::lit(2.0);
        let disc = (fro * fro - T::lit(4.0) * det * det).max(T::zero()).sqrt();
        let smax = ((fro + disc) / two).sqrt();
        let smin = if smax > T::zero() { det / smax } else { T::zero() };
        (smax, smin)
    }

    /// Spectral norm.
    pub fn norm(&self) -> T {
        self.singular_values().0
    }

    /// `‖A⁻¹‖⁻¹`; zero for singular matrices.
    pub fn conorm(&self) -> T {
        self.singular_values().1
    }

    /// `‖A⁻¹‖`; infinite for singular matrices.
    pub fn inverse_norm(&self) -> T {
        let c = self.conorm();
        if c > T::zero() {
            T::one() / c
        } else {
            T::infinity()
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        worst
    }

    pub fn spectrum(&self) -> Spectrum<T> {
        if self.dim == 1 {
            return Spectrum::Scalar(self.m[0][0]);
        }
        let [[a, b], [c, d]] = self.m;
        let half_tr = (a + d) / T::lit(2.0);
        let det = self.det();
        let disc = half_tr * half_tr - det;
        let scale = half_tr.abs().max(det.abs().sqrt()).max(T::min_positive_value());
        let tiny = T::epsilon() * T::lit(64.0) * scale * scale;
        if disc.abs() <= tiny {
            return Spectrum::Repeated(half_tr);
        }
        if disc < T::zero() {
            return Spectrum::Complex { re: half_tr, im: (-disc).sqrt() };
        }
        let root = disc.sqrt();
        let big = if half_tr >= T::zero() { half_tr + root } else { half_tr - root };
        let small = det / big;
        let vec_for = |lam: T| -> Vector<T> {
            let v1 = [b, lam - a];
            let v2 = [lam - d, c];
            let pick = if norm(&v1) >= norm(&v2) { v1 } else { v2 };
            normalize(&pick).unwrap_or([T::one(), T::zero()])
        };
        Spectrum::Real { values: [small, big], vectors: [vec_for(small), vec_for(big)] }
    }
}

/// Solves the dense system `a · x = b` (row-major `n × n`) by Gaussian
/// elimination with partial pivoting. Returns `None` if the matrix is
/// numerically singular.
pub fn solve_dense<T: Real>(mut a: Vec<T>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return None;
    }
    let tiny = scale * T::epsilon() * T::count(n);
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax <= tiny {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let p = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                a[r * n + j] = a[r * n + j] - f * a[col * n + j];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s = s - a[i * n + j] * x[j];
        }
        x[i] = s / a[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat_matrix_spectrum() {
        let a = Jacobian::<f64>::matrix(2.0, 1.0, 1.0, 1.0);
        let Spectrum::Real { values, vectors } = a.spectrum() else { panic!("expected real spectrum") };
        let golden = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((values[1] - golden).abs() < 1e-14);
        assert!((values[0] - 1.0 / golden).abs() < 1e-14);
        let slope = vectors[1][1] / vectors[1][0];
        assert!((slope - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_of_cat() {
        let a = Jacobian::<f64>::matrix(2.0, 1.0, 1.0, 1.0);
        let (smax, smin) = a.singular_values();
        // symmetric positive matrix: singular values are the eigenvalues
        assert!((smax - 2.618033988749895).abs() < 1e-14);
        assert!((smin - 0.381966011250105).abs() < 1e-14);
        assert!((a.inverse().unwrap().norm() - 1.0 / smin).abs() < 1e-12);
    }

    #[test]
    fn rotation_is_complex() {
        let r = Jacobian::<f64>::matrix(0.0, -1.0, 1.0, 0.0);
        assert!(matches!(r.spectrum(), Spectrum::Complex { .. }));
        assert!(matches!(Jacobian::<f64>::identity(2).spectrum(), Spectrum::Repeated(_)));
    }

    #[test]
    fn dense_solve_matches_inverse() {
        let a = vec![4.0, 1.0, 0.5, 2.0, 5.0, 1.0, 0.0, 1.0, 3.0];
        let x = solve_dense(a.clone(), vec![1.0, 2.0, 3.0]).unwrap();
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
        assert!(solve_dense(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 1.0]).is_none());
    }

    #[test]
    fn works_in_single_precision() {
        let a = Jacobian::<f32>::matrix(2.0, 1.0, 1.0, 1.0);
        assert!((a.det() - 1.0).abs() < 1e-6);
        assert!((a.norm() - 2.618034).abs() < 1e-5);
    }
}
