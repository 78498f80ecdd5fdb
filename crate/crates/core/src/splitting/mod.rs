//! Invariant splittings `E^{cs} ⊕ E^{cu}` sampled on finite point sets:
//! construction from periodic data or cone fields, domination constants,
//! extension to nearby points and hyperbolicity constants.

mod cones;
mod extend;
mod hyperbolic;

pub use cones::{cone_field_iterate, ConeSpec};
pub use extend::{gram_schmidt_extend, Extension, DEFAULT_TRANSPORT_STEPS};
pub use hyperbolic::{hyperbolic_set_certificate, HyperbolicCertificate};

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{line_angle, normalize, Vector};
use crate::maps::{MapModel, StatePoint};
use crate::periodic::{transported_splitting, PeriodicOrbit};
use crate::scalar::Real;

/// Tolerance on `Dg(x) E(x) = E(g(x))` in principal angle.
pub const INVARIANCE_TOL: f64 = 1e-8;
/// Default threshold defining the extension radius from the continuity
/// modulus.
pub const RHO_ANGLE: f64 = 0.1;

/// A linear subspace of `T_x M` with an orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace<T> {
    pub base: StatePoint<T>,
    pub basis: Vec<Vector<T>>,
}

impl<T: Real> Subspace<T> {
    pub fn line(base: StatePoint<T>, v: Vector<T>) -> Option<Self> {
        normalize(&v).map(|u| Subspace { base, basis: vec![u] })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Largest principal angle to another subspace of the same dimension.
    pub fn principal_angle(&self, other: &Self) -> T {
        match (self.basis.as_slice(), other.basis.as_slice()) {
            ([a], [b]) => line_angle(a, b),
            _ => T::zero(),
        }
    }
}

/// A splitting sampled on a point set. A bundle is `None` when it is the
/// zero subspace (for instance `E^{cs}` of an expanding circle map).
#[derive(Clone, Debug, PartialEq)]
pub struct SplittingField<T> {
    pub dim: usize,
    pub points: Vec<StatePoint<T>>,
    /// `E^{cs}` (the dominated bundle `E`).
    pub e_cs: Option<Vec<Vector<T>>>,
    /// `E^{cu}` (the dominating bundle `Ê`).
    pub e_cu: Option<Vec<Vector<T>>>,
    /// Per-point invariance residual (principal angle).
    pub residuals: Vec<T>,
    /// Final inter-step angle change for iterated constructions.
    pub convergence: Option<T>,
}

impl<T: Real> SplittingField<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn invariance_residual(&self) -> T {
        self.residuals.iter().copied().fold(T::zero(), T::max)
    }

    pub fn is_invariant(&self) -> bool {
        self.invariance_residual() < T::lit(INVARIANCE_TOL)
    }

    /// `(dim E^{cs}, dim E^{cu})`.
    pub fn dimensions(&self) -> (usize, usize) {
        (self.e_cs.is_some() as usize, self.e_cu.is_some() as usize)
    }

    /// Largest principal angle to another field on the same points.
    pub fn max_angle_to(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for (a, b) in [(&self.e_cs, &other.e_cs), (&self.e_cu, &other.e_cu)] {
            if let (Some(a), Some(b)) = (a, b) {
                for (u, v) in a.iter().zip(b) {
                    worst = worst.max(line_angle(u, v));
                }
            }
        }
        worst
    }

    /// A field with the same vectors at every point.
    pub fn constant(dim: usize, points: Vec<StatePoint<T>>, e_cs: Option<Vector<T>>, e_cu: Option<Vector<T>>) -> Self {
        let n = points.len();
        SplittingField {
            dim,
            e_cs: e_cs.map(|v| vec![v; n]),
            e_cu: e_cu.map(|v| vec![v; n]),
            residuals: vec![T::zero(); n],
            convergence: None,
            points,
        }
    }

    /// Recomputes the per-point residuals for an orbit-closed sample set,
    /// comparing `Dg(x) E(x)` with the stored `E(g(x))`.
    pub fn with_orbit_residuals(mut self, model: &MapModel<T>) -> Result<Self> {
        let next = orbit_successors(model, &self.points)?;
        let mut res = vec![T::zero(); self.len()];
        for bundle in [&self.e_cs, &self.e_cu].into_iter().flatten() {
            for (i, r) in res.iter_mut().enumerate() {
                let img = model.jacobian(&self.points[i])?.apply(&bundle[i]);
                *r = r.max(line_angle(&img, &bundle[next[i]]));
            }
        }
        self.residuals = res;
        Ok(self)
    }

    /// CSV with one row per point: coordinates, basis vectors, residual.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y,cs_x,cs_y,cu_x,cu_y,residual")?;
        let vec_at = |b: &Option<Vec<Vector<T>>>, i: usize| match b {
            Some(v) => format!("{:e},{:e}", v[i][0], v[i][1]),
            None => ",".to_string(),
        };
        for (i, p) in self.points.iter().enumerate() {
            writeln!(
                out,
                "{:e},{:e},{},{},{:e}",
                p.x(),
                p.y(),
                vec_at(&self.e_cs, i),
                vec_at(&self.e_cu, i),
                self.residuals[i]
            )?;
        }
        Ok(())
    }
}

/// Index of `g(x_i)` in the sample set, or [`Error::NotOrbitClosed`].
pub(crate) fn orbit_successors<T: Real>(model: &MapModel<T>, points: &[StatePoint<T>]) -> Result<Vec<usize>> {
    let tol = T::lit(1e-9);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].x().partial_cmp(&points[b].x()).unwrap_or(std::cmp::Ordering::Equal));
    let xs: Vec<T> = order.iter().map(|&i| points[i].x()).collect();
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let img = model.eval(p);
            // candidates with nearby first coordinate, also across the seam
            let mut best: Option<(T, usize)> = None;
            for shift in [T::zero(), T::one(), -T::one()] {
                let key = img.x() + shift;
                let lo = xs.partition_point(|&v| v < key - tol);
                for k in lo..xs.len() {
                    if xs[k] > key + tol {
                        break;
                    }
                    let d = img.dist(&points[order[k]]);
                    if d < tol && best.map_or(true, |b| d < b.0) {
                        best = Some((d, order[k]));
                    }
                }
            }
            best.map(|b| b.1).ok_or(Error::NotOrbitClosed(i))
        })
        .collect()
}

/// The eigen-splitting of a periodic orbit transported along the orbit.
pub fn periodic_splitting<T: Real>(model: &MapModel<T>, orbit: &PeriodicOrbit<T>) -> Result<SplittingField<T>> {
    let (stable, unstable) = transported_splitting(orbit)?;
    let t = orbit.period;
    let mut residuals = vec![T::zero(); t];
    for bundle in [&stable, &unstable].into_iter().flatten() {
        for j in 0..t {
            let img = orbit.cocycle[j].apply(&bundle[j]);
            residuals[j] = residuals[j].max(line_angle(&img, &bundle[(j + 1) % t]));
        }
    }
    Ok(SplittingField {
        dim: model.dimension(),
        points: orbit.points.clone(),
        e_cs: stable,
        e_cu: unstable,
        residuals,
        convergence: None,
    })
}

/// Union of the periodic splittings of several orbits.
pub fn periodic_field<T: Real>(model: &MapModel<T>, orbits: &[PeriodicOrbit<T>]) -> Result<SplittingField<T>> {
    let parts = orbits.iter().map(|o| periodic_splitting(model, o)).collect::<Result<Vec<_>>>()?;
    merge_fields(model.dimension(), parts)
}

fn merge_fields<T: Real>(dim: usize, parts: Vec<SplittingField<T>>) -> Result<SplittingField<T>> {
    let first = parts.first().ok_or_else(|| Error::Precondition("no orbits".into()))?;
    let dims = first.dimensions();
    if parts.iter().any(|p| p.dimensions() != dims) {
        return Err(Error::SplittingUndefined("splitting dimensions differ between orbits".into()));
    }
    let mut out = SplittingField {
        dim,
        points: Vec::new(),
        e_cs: (dims.0 == 1).then(Vec::new),
        e_cu: (dims.1 == 1).then(Vec::new),
        residuals: Vec::new(),
        convergence: None,
    };
    for p in parts {
        out.points.extend(p.points);
        out.residuals.extend(p.residuals);
        if let (Some(a), Some(b)) = (out.e_cs.as_mut(), p.e_cs) {
            a.extend(b);
        }
        if let (Some(a), Some(b)) = (out.e_cu.as_mut(), p.e_cu) {
            a.extend(b);
        }
    }
    Ok(out)
}

/// Worst-case domination ratio of `Dg^l` over a sampled splitting.
#[derive(Clone, Debug, PartialEq)]
pub struct DominationCertificate<T> {
    pub l: usize,
    pub lambda: T,
    pub worst_index: usize,
    pub samples: usize,
}

impl<T: Real> DominationCertificate<T> {
    pub fn passed(&self) -> bool {
        self.lambda < T::one()
    }
}

/// `λ = max_x ‖Dg^l(x)|_E‖ / m(Dg^l(x)|_Ê)`. With one-dimensional bundles
/// the sup and inf are attained on the single directions. A trivial
/// bundle makes the ratio zero.
pub fn domination_check<T: Real>(model: &MapModel<T>, field: &SplittingField<T>, l: usize) -> Result<DominationCertificate<T>> {
    if l == 0 {
        return Err(Error::Precondition("iterate l must be at least 1".into()));
    }
    if field.is_empty() {
        return Err(Error::Precondition("empty field".into()));
    }
    let ratios = (0..field.len())
        .into_par_iter()
        .map(|i| -> Result<T> {
            let (Some(e), Some(f)) = (&field.e_cs, &field.e_cu) else {
                return Ok(T::zero());
            };
            let j = model.jacobian_power(&field.points[i], l)?;
            let weak = crate::linalg::norm(&j.apply(&e[i]));
            let strong = crate::linalg::norm(&j.apply(&f[i]));
            Ok(weak / strong)
        })
        .collect::<Result<Vec<T>>>()?;
    let (worst_index, lambda) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::neg_infinity()), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });
    Ok(DominationCertificate { l, lambda, worst_index, samples: field.len() })
}

/// One row of the continuity-modulus table.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulusBin<T> {
    /// Pairs at flat distance `≤ radius` contribute to this bin.
    pub radius: T,
    pub max_angle: T,
    pub pairs: usize,
}

/// Empirical modulus of continuity of both bundles over dyadic distance
/// bins `2^{-1}, …, 2^{-bins}`. Each bin takes the maximum over all pairs
/// within its radius, so the profile is monotone.
pub fn splitting_continuity_modulus<T: Real>(field: &SplittingField<T>, bins: usize) -> Result<Vec<ModulusBin<T>>> {
    let n = field.len();
    if n < 2 {
        return Err(Error::Precondition("need at least two samples".into()));
    }
    let per_point: Vec<(Vec<T>, Vec<usize>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut angle = vec![T::zero(); bins];
            let mut count = vec![0usize; bins];
            for j in i + 1..n {
                let d = field.points[i].dist(&field.points[j]);
                let mut a = T::zero();
                for b in [&field.e_cs, &field.e_cu].into_iter().flatten() {
                    a = a.max(line_angle(&b[i], &b[j]));
                }
                for k in 0..bins {
                    if d <= T::lit(0.5f64.powi(k as i32 + 1)) {
                        angle[k] = angle[k].max(a);
                        count[k] += 1;
                    } else {
                        break;
                    }
                }
            }
            (angle, count)
        })
        .collect();
    let mut out: Vec<ModulusBin<T>> = (0..bins)
        .map(|k| ModulusBin { radius: T::lit(0.5f64.powi(k as i32 + 1)), max_angle: T::zero(), pairs: 0 })
        .collect();
    for (angle, count) in per_point {
        for k in 0..bins {
            out[k].max_angle = out[k].max_angle.max(angle[k]);
            out[k].pairs += count[k];
        }
    }
    Ok(out)
}

/// Largest bin radius whose modulus is below `threshold`.
pub fn extension_radius<T: Real>(table: &[ModulusBin<T>], threshold: T) -> Option<T> {
    table.iter().find(|b| b.max_angle < threshold).map(|b| b.radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::LinearToral;
    use crate::periodic::find_periodic_points;
    use std::sync::Arc;

    #[test]
    fn cat_fixed_point_splitting() {
        let cat = MapModel::<f64>::cat_map();
        let set = find_periodic_points(&cat, 2).unwrap();
        let f = periodic_splitting(&cat, &set.orbits[0]).unwrap();
        let u = f.e_cu.as_ref().unwrap()[0];
        assert!((u[1] / u[0] - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
        for o in &set.orbits[1..] {
            let f = periodic_splitting(&cat, o).unwrap();
            assert!(f.invariance_residual() < 1e-12);
        }
    }

    #[test]
    fn circle_splitting_is_the_line() {
        let g = MapModel::<f64>::doubling();
        let set = find_periodic_points(&g, 3).unwrap();
        let f = periodic_splitting(&g, &set.orbits[2]).unwrap();
        assert_eq!(f.dimensions(), (0, 1));
    }

    #[test]
    fn cat_domination() {
        let cat = MapModel::<f64>::cat_map();
        let set = find_periodic_points(&cat, 4).unwrap();
        let f = periodic_field(&cat, &set.orbits).unwrap();
        let d = domination_check(&cat, &f, 1).unwrap();
        let expected = (3.0 - 5f64.sqrt()) / (3.0 + 5f64.sqrt());
        assert!((d.lambda - expected).abs() < 1e-10);
    }

    #[test]
    fn identity_has_no_domination() {
        let id = MapModel::<f64>::custom(Arc::new(LinearToral::new([[1, 0], [0, 1]]))).unwrap();
        let f = SplittingField::constant(2, vec![StatePoint::torus(0.2, 0.3)], Some([1.0, 0.0]), Some([0.0, 1.0]));
        let d = domination_check(&id, &f, 1).unwrap();
        assert_eq!(d.lambda, 1.0);
        assert!(!d.passed());
    }

    #[test]
    fn perturbed_cat_domination() {
        let m = MapModel::<f64>::perturbed_cat(0.3).unwrap();
        let set = find_periodic_points(&m, 5).unwrap();
        let f = periodic_field(&m, &set.orbits).unwrap();
        assert!(domination_check(&m, &f, 2).unwrap().passed());
    }

    #[test]
    fn constant_field_modulus_is_zero() {
        let pts: Vec<_> = (0..20).map(|i| StatePoint::torus(i as f64 / 20.0, 0.1)).collect();
        let f = SplittingField::constant(2, pts, Some([1.0, 0.0]), Some([0.0, 1.0]));
        let table = splitting_continuity_modulus(&f, 8).unwrap();
        assert!(table.iter().all(|b| b.max_angle == 0.0));
    }

    #[test]
    fn orbit_residuals_detect_non_invariance() {
        let cat = MapModel::<f64>::cat_map();
        let set = find_periodic_points(&cat, 2).unwrap();
        let f = periodic_field(&cat, &set.orbits).unwrap();
        let fixed = f.clone().with_orbit_residuals(&cat).unwrap();
        assert!(fixed.invariance_residual() < 1e-12);
        let axes = SplittingField::constant(2, f.points.clone(), Some([1.0, 0.0]), Some([0.0, 1.0]));
        assert!(!axes.with_orbit_residuals(&cat).unwrap().is_invariant());
    }
}
