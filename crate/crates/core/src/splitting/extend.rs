use rayon::prelude::*;

use super::SplittingField;
use crate::error::{Error, Result};
use crate::linalg::{line_angle, normalize, Vector};
use crate::maps::{MapModel, StatePoint};
use crate::scalar::Real;

/// Number of iterates used to transport source bases to a target.
pub const DEFAULT_TRANSPORT_STEPS: usize = 8;
/// Number of approximating source samples per target.
const CANDIDATES: usize = 4;

/// Extended field and the uniqueness witness.
#[derive(Clone, Debug)]
pub struct Extension<T> {
    pub field: SplittingField<T>,
    /// Largest principal angle between candidate extensions obtained from
    /// different approximating samples.
    pub disagreement: T,
}

fn nearest<T: Real>(points: &[StatePoint<T>], y: &StatePoint<T>, m: usize) -> Vec<(T, usize)> {
    let mut d: Vec<(T, usize)> = points.iter().enumerate().map(|(i, p)| (p.dist(y), i)).collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    d.truncate(m);
    d
}

/// Candidate directions at `y` for one bundle: the bundle at the sources
/// nearest to `g^{∓K}(y)` transported by `Dg^{±K}` along the orbit of `y`
/// and orthonormalized.
fn candidates<T: Real>(
    model: &MapModel<T>,
    field: &SplittingField<T>,
    bundle: &[Vector<T>],
    y: &StatePoint<T>,
    k: usize,
    unstable: bool,
) -> Result<Vec<Vector<T>>> {
    let mut orbit = vec![*y];
    for _ in 0..k {
        let last = orbit.last().expect("non-empty");
        let next = if unstable { model.inverse(last)? } else { model.eval(last) };
        orbit.push(next);
    }
    let rep = orbit[k];
    let mut out = Vec::new();
    for (_, src) in nearest(&field.points, &rep, CANDIDATES) {
        let mut v = bundle[src];
        for j in (0..k).rev() {
            let jac = if unstable {
                // orbit[j+1] = g^{-1}(orbit[j]), push forward from orbit[j+1]
                model.jacobian(&orbit[j + 1])?
            } else {
                model
                    .jacobian(&orbit[j])?
                    .inverse()
                    .ok_or(Error::ZeroDerivative { x: orbit[j].x().as_f64() })?
            };
            v = normalize(&jac.apply(&v)).ok_or_else(|| Error::Degenerate("transported basis vanished".into()))?;
        }
        out.push(v);
    }
    Ok(out)
}

struct Extended<T> {
    e_cs: Option<Vector<T>>,
    e_cu: Option<Vector<T>>,
    spread: T,
}

fn extend_at<T: Real>(model: &MapModel<T>, field: &SplittingField<T>, y: &StatePoint<T>, k: usize) -> Result<Extended<T>> {
    let mut spread = T::zero();
    let mut pick = |bundle: &Option<Vec<Vector<T>>>, unstable: bool| -> Result<Option<Vector<T>>> {
        let Some(b) = bundle else { return Ok(None) };
        let c = candidates(model, field, b, y, k, unstable)?;
        for u in &c {
            for v in &c {
                spread = spread.max(line_angle(u, v));
            }
        }
        Ok(c.first().copied())
    };
    let e_cs = pick(&field.e_cs, false)?;
    let e_cu = pick(&field.e_cu, true)?;
    Ok(Extended { e_cs, e_cu, spread })
}

/// Extends a splitting sampled on (periodic) source points to target
/// points within `rho` of the sources.
///
/// For each target `y` the unstable bundle is taken from the sources
/// nearest to `g^{-K}(y)` and pushed forward `K` times along the orbit of
/// `y`; the stable bundle is taken near `g^{K}(y)` and pulled back. By
/// domination every admissible approximating sample leads to the same
/// limit, so the spread of the candidates measures non-uniqueness.
pub fn gram_schmidt_extend<T: Real>(
    model: &MapModel<T>,
    field: &SplittingField<T>,
    targets: &[StatePoint<T>],
    rho: T,
    transport_steps: usize,
) -> Result<Extension<T>> {
    if field.is_empty() {
        return Err(Error::Precondition("empty source field".into()));
    }
    if model.dimension() == 1 {
        // E^{cu} is the whole line and E^{cs} is trivial
        let f = SplittingField::constant(1, targets.to_vec(), None, Some([T::one(), T::zero()]));
        for (i, y) in targets.iter().enumerate() {
            check_close(field, y, i, rho)?;
        }
        return Ok(Extension { field: f, disagreement: T::zero() });
    }
    if !model.is_invertible() {
        return Err(Error::Unsupported { model: model.id(), what: "extension needs an invertible map".into() });
    }
    let rows = targets
        .par_iter()
        .enumerate()
        .map(|(i, y)| -> Result<(Extended<T>, T)> {
            check_close(field, y, i, rho)?;
            let here = extend_at(model, field, y, transport_steps)?;
            let there = extend_at(model, field, &model.eval(y), transport_steps)?;
            let j = model.jacobian(y)?;
            let mut res = T::zero();
            for (a, b) in [(here.e_cs, there.e_cs), (here.e_cu, there.e_cu)] {
                if let (Some(a), Some(b)) = (a, b) {
                    res = res.max(line_angle(&j.apply(&a), &b));
                }
            }
            Ok((here, res))
        })
        .collect::<Result<Vec<_>>>()?;
    let disagreement = rows.iter().map(|r| r.0.spread).fold(T::zero(), T::max);
    let collect = |f: fn(&Extended<T>) -> Option<Vector<T>>| -> Option<Vec<Vector<T>>> {
        rows.iter().map(|r| f(&r.0)).collect()
    };
    Ok(Extension {
        field: SplittingField {
            dim: 2,
            points: targets.to_vec(),
            e_cs: collect(|e| e.e_cs),
            e_cu: collect(|e| e.e_cu),
            residuals: rows.iter().map(|r| r.1).collect(),
            convergence: None,
        },
        disagreement,
    })
}

fn check_close<T: Real>(field: &SplittingField<T>, y: &StatePoint<T>, index: usize, rho: T) -> Result<()> {
    let d = field.points.iter().map(|p| p.dist(y)).fold(T::infinity(), T::min);
    if d > rho {
        return Err(Error::Isolated { index, distance: d.as_f64(), radius: rho.as_f64() });
    }
    Ok(())
}
