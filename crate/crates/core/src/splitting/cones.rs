use rayon::prelude::*;

use super::SplittingField;
use crate::error::{Error, Result};
use crate::linalg::{cross, dot, line_angle, normalize, Jacobian, Vector};
use crate::maps::{MapModel, StatePoint};
use crate::scalar::Real;

/// Cones of width `a` about a pair of axes. A vector
/// `v = v_s + v_u` (oblique decomposition along the axes) lies in the
/// unstable cone iff `a‖v_s‖ < ‖v_u‖` and in the stable cone iff
/// `a‖v_u‖ < ‖v_s‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeSpec<T> {
    pub e_s: Vector<T>,
    pub e_u: Vector<T>,
    pub width: T,
}

impl<T: Real> ConeSpec<T> {
    pub fn new(e_s: Vector<T>, e_u: Vector<T>, width: T) -> Result<Self> {
        let (Some(e_s), Some(e_u)) = (normalize(&e_s), normalize(&e_u)) else {
            return Err(Error::Precondition("cone axes must be nonzero".into()));
        };
        if cross(&e_s, &e_u).abs() < T::lit(1e-12) {
            return Err(Error::Precondition("cone axes must be independent".into()));
        }
        if !(width > T::zero() && width < T::one()) {
            return Err(Error::Precondition(format!("cone width must lie in (0, 1), got {width}")));
        }
        Ok(ConeSpec { e_s, e_u, width })
    }

    /// Oblique coordinates `(α, β)` with `v = α e_s + β e_u`.
    pub fn coords(&self, v: &Vector<T>) -> (T, T) {
        let det = cross(&self.e_s, &self.e_u);
        (cross(v, &self.e_u) / det, cross(&self.e_s, v) / det)
    }

    /// `a |α| / |β|`: below 1 exactly inside the unstable cone.
    pub fn unstable_ratio(&self, v: &Vector<T>) -> T {
        let (al, be) = self.coords(v);
        self.width * al.abs() / be.abs()
    }

    /// `a |β| / |α|`: below 1 exactly inside the stable cone.
    pub fn stable_ratio(&self, v: &Vector<T>) -> T {
        let (al, be) = self.coords(v);
        self.width * be.abs() / al.abs()
    }

    pub fn in_unstable(&self, v: &Vector<T>) -> bool {
        self.unstable_ratio(v) < T::one()
    }

    pub fn in_stable(&self, v: &Vector<T>) -> bool {
        self.stable_ratio(v) < T::one()
    }

    /// Boundary rays and axis of the unstable cone.
    fn unstable_rays(&self) -> [Vector<T>; 3] {
        let a = self.width;
        let ray = |sign: T| normalize(&[self.e_s[0] + sign * a * self.e_u[0], self.e_s[1] + sign * a * self.e_u[1]]);
        // boundary: a|α| = |β|, i.e. v = e_s ± a e_u
        [ray(T::one()).unwrap_or(self.e_u), ray(-T::one()).unwrap_or(self.e_u), self.e_u]
    }

    fn stable_rays(&self) -> [Vector<T>; 3] {
        let a = self.width;
        let ray = |sign: T| normalize(&[self.e_u[0] + sign * a * self.e_s[0], self.e_u[1] + sign * a * self.e_s[1]]);
        [ray(T::one()).unwrap_or(self.e_s), ray(-T::one()).unwrap_or(self.e_s), self.e_s]
    }
}

/// Bisector of the sector bounded by `r0`, `r1` that contains `axis`.
fn bisector<T: Real>(r0: &Vector<T>, r1: &Vector<T>, axis: &Vector<T>) -> Vector<T> {
    let orient = |v: &Vector<T>| if dot(v, axis) < T::zero() { [-v[0], -v[1]] } else { *v };
    let (a, b) = (orient(r0), orient(r1));
    normalize(&[a[0] + b[0], a[1] + b[1]]).unwrap_or(*axis)
}

/// Pushes the three rays of a cone through a sequence of linear maps,
/// checking after each map that the image lies strictly inside the cone
/// at the next point, with the axis image between the boundary images.
/// Returns the bisector after the last and after the second-to-last map.
fn push_cone<T: Real>(
    maps: &[Jacobian<T>],
    cones: &[ConeSpec<T>],
    stable: bool,
    sample: usize,
) -> Result<(Vector<T>, Vector<T>)> {
    let rays_of = |c: &ConeSpec<T>| if stable { c.stable_rays() } else { c.unstable_rays() };
    let mut rays = rays_of(&cones[0]);
    let mut prev = bisector(&rays[0], &rays[1], &rays[2]);
    let mut cur = prev;
    for (k, m) in maps.iter().enumerate() {
        let target = &cones[k + 1];
        for r in rays.iter_mut() {
            *r = normalize(&m.apply(r)).ok_or_else(|| Error::ConeInvariance {
                index: sample,
                detail: "cone collapsed to zero".into(),
            })?;
        }
        // u = α/β (or β/α for the stable cone) parametrizes lines in the target cone
        let param = |v: &Vector<T>| {
            let (al, be) = target.coords(v);
            if stable {
                be / al
            } else {
                al / be
            }
        };
        let (u0, u1, ua) = (param(&rays[0]), param(&rays[1]), param(&rays[2]));
        let bound = T::one() / target.width;
        let inside = [u0, u1, ua].iter().all(|u| u.is_finite() && u.abs() < bound);
        // once the cone has collapsed the three rays agree up to rounding
        let slack = T::lit(1e-12) * (T::one() + u0.abs().max(u1.abs()));
        let between = ua >= u0.min(u1) - slack && ua <= u0.max(u1) + slack;
        if !(inside && between) {
            return Err(Error::ConeInvariance {
                index: sample,
                detail: format!("step {k}: image rays at u = ({u0:.4}, {ua:.4}, {u1:.4}), bound {bound:.4}"),
            });
        }
        prev = cur;
        cur = bisector(&rays[0], &rays[1], &rays[2]);
    }
    Ok((cur, prev))
}

struct ConeLimit<T> {
    e_cs: Vector<T>,
    e_cu: Vector<T>,
    change: T,
}

fn limit_at<T: Real>(
    model: &MapModel<T>,
    x: &StatePoint<T>,
    initial: &(impl Fn(&StatePoint<T>) -> ConeSpec<T> + Sync),
    steps: usize,
    sample: usize,
) -> Result<ConeLimit<T>> {
    // unstable: cone at g^{-steps}(x) pushed forward along the orbit
    let mut back = vec![*x];
    for _ in 0..steps {
        let prev = model.inverse(back.last().expect("non-empty"))?;
        back.push(prev);
    }
    back.reverse();
    let cones: Vec<_> = back.iter().map(initial).collect();
    let maps = back[..steps].iter().map(|p| model.jacobian(p)).collect::<Result<Vec<_>>>()?;
    let (e_cu, cu_prev) = push_cone(&maps, &cones, false, sample)?;

    // stable: cone at g^{steps}(x) pulled back by Dg⁻¹
    let mut fwd = vec![*x];
    for _ in 0..steps {
        let next = model.eval(fwd.last().expect("non-empty"));
        fwd.push(next);
    }
    let cones: Vec<_> = fwd.iter().rev().map(initial).collect();
    let maps = fwd[..steps]
        .iter()
        .rev()
        .map(|p| {
            model
                .jacobian(p)?
                .inverse()
                .ok_or(Error::ZeroDerivative { x: p.x().as_f64() })
        })
        .collect::<Result<Vec<_>>>()?;
    let (e_cs, cs_prev) = push_cone(&maps, &cones, true, sample)?;
    let change = line_angle(&e_cu, &cu_prev).max(line_angle(&e_cs, &cs_prev));
    Ok(ConeLimit { e_cs, e_cu, change })
}

/// Graph transform of cone fields: the unstable cone at `g^{-n}(x)` is
/// pushed forward `n = steps` times and the stable cone at `gⁿ(x)` pulled
/// back, and the bisectors of the image cones give `E^{cu}(x)`,
/// `E^{cs}(x)`. Strict invariance of the initial cones is checked at
/// every step. The convergence measure is the largest angle between the
/// last two iterates; the residual compares `Dg(x) E(x)` with the same
/// construction at `g(x)`.
pub fn cone_field_iterate<T: Real>(
    model: &MapModel<T>,
    samples: &[StatePoint<T>],
    initial: impl Fn(&StatePoint<T>) -> ConeSpec<T> + Sync,
    steps: usize,
) -> Result<SplittingField<T>> {
    if !model.is_invertible() || model.dimension() != 2 {
        return Err(Error::Unsupported { model: model.id(), what: "cone fields need an invertible torus map".into() });
    }
    if steps == 0 {
        return Err(Error::Precondition("steps must be at least 1".into()));
    }
    let rows = samples
        .par_iter()
        .enumerate()
        .map(|(i, x)| -> Result<(ConeLimit<T>, T)> {
            let here = limit_at(model, x, &initial, steps, i)?;
            let there = limit_at(model, &model.eval(x), &initial, steps, i)?;
            let j = model.jacobian(x)?;
            let res = line_angle(&j.apply(&here.e_cu), &there.e_cu)
                .max(line_angle(&j.apply(&here.e_cs), &there.e_cs));
            Ok((here, res))
        })
        .collect::<Result<Vec<_>>>()?;
    let convergence = rows.iter().map(|r| r.0.change).fold(T::zero(), T::max);
    Ok(SplittingField {
        dim: 2,
        points: samples.to_vec(),
        e_cs: Some(rows.iter().map(|r| r.0.e_cs).collect()),
        e_cu: Some(rows.iter().map(|r| r.0.e_cu).collect()),
        residuals: rows.iter().map(|r| r.1).collect(),
        convergence: Some(convergence),
    })
}
