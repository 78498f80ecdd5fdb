use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::periodic::{orbit_multipliers, prod_inv_norm, transported_splitting, PeriodicOrbit};
use crate::scalar::Real;

/// Per-orbit margin `(product)^{1/t}`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitMargin<T> {
    /// Position of the orbit in the certified list.
    pub index: usize,
    pub period: usize,
    pub margin: T,
}

/// `t`-th root computed in base 2 so that exact powers of two stay exact.
fn root<T: Real>(prod: T, t: usize) -> T {
    (prod.log2() / T::count(t)).exp2()
}

/// Uniform bound `ς` on the per-period inverse-norm products of a list of
/// periodic orbits.
#[derive(Clone, Debug, PartialEq)]
pub struct NUECertificate<T> {
    pub max_period: usize,
    pub varsigma: T,
    pub eta: T,
    pub margins: Vec<OrbitMargin<T>>,
    /// Orbits with margin `≥ 1`.
    pub violations: Vec<usize>,
}

impl<T: Real> NUECertificate<T> {
    pub fn passed(&self) -> bool {
        self.varsigma < T::one()
    }
}

pub fn nue_certificate<T: Real>(orbits: &[PeriodicOrbit<T>]) -> Result<NUECertificate<T>> {
    if orbits.is_empty() {
        return Err(Error::Precondition("no orbits to certify".into()));
    }
    let margins: Vec<OrbitMargin<T>> = orbits
        .par_iter()
        .enumerate()
        .map(|(index, o)| OrbitMargin { index, period: o.period, margin: root(prod_inv_norm(o), o.period) })
        .collect();
    let varsigma = margins.iter().map(|m| m.margin).fold(T::neg_infinity(), T::max);
    let violations = margins.iter().filter(|m| !(m.margin < T::one())).map(|m| m.index).collect();
    Ok(NUECertificate {
        max_period: orbits.iter().map(|o| o.period).max().unwrap_or(0),
        varsigma,
        eta: varsigma.ln(),
        margins,
        violations,
    })
}

/// Splitting used for one orbit: base-point directions `E^s(p)`, `E^u(p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NuhOrbit<T> {
    pub index: usize,
    pub period: usize,
    pub stable: Option<Vector<T>>,
    pub unstable: Option<Vector<T>>,
    /// `(∏ ‖Dg|_{E^s}‖)^{1/t}`
    pub stable_margin: Option<T>,
    /// `(∏ ‖[Dg|_{E^u}]⁻¹‖)^{1/t}`
    pub unstable_margin: Option<T>,
}

/// Common `ς` for the stable products and the inverse unstable products.
#[derive(Clone, Debug, PartialEq)]
pub struct NUHCertificate<T> {
    pub max_period: usize,
    pub varsigma: T,
    pub eta: T,
    pub orbits: Vec<NuhOrbit<T>>,
    pub violations: Vec<usize>,
}

impl<T: Real> NUHCertificate<T> {
    pub fn passed(&self) -> bool {
        self.varsigma < T::one()
    }
}

/// Fails with [`Error::SplittingUndefined`] naming the first orbit whose
/// period map has no real hyperbolic splitting.
pub fn nuh_certificate<T: Real>(orbits: &[PeriodicOrbit<T>]) -> Result<NUHCertificate<T>> {
    if orbits.is_empty() {
        return Err(Error::Precondition("no orbits to certify".into()));
    }
    let rows: Vec<Result<NuhOrbit<T>>> = orbits
        .par_iter()
        .enumerate()
        .map(|(index, o)| {
            let fail = |e: Error| match e {
                Error::SplittingUndefined(m) => {
                    Error::SplittingUndefined(format!("orbit {index} (period {}): {m}", o.period))
                }
                other => other,
            };
            let m = orbit_multipliers(o).map_err(fail)?;
            let (s, u) = transported_splitting(o).map_err(fail)?;
            Ok(NuhOrbit {
                index,
                period: o.period,
                stable: s.map(|v| v[0]),
                unstable: u.map(|v| v[0]),
                stable_margin: m.prod_stable_norm.map(|p| root(p, o.period)),
                unstable_margin: m.prod_unstable_conorm.map(|p| root(T::one() / p, o.period)),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let worst = |r: &NuhOrbit<T>| {
        [r.stable_margin, r.unstable_margin]
            .into_iter()
            .flatten()
            .fold(T::neg_infinity(), T::max)
    };
    let varsigma = rows.iter().map(worst).fold(T::neg_infinity(), T::max);
    let violations = rows.iter().filter(|r| !(worst(r) < T::one())).map(|r| r.index).collect();
    Ok(NUHCertificate {
        max_period: orbits.iter().map(|o| o.period).max().unwrap_or(0),
        varsigma,
        eta: varsigma.ln(),
        orbits: rows,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Jacobian;
    use crate::maps::{MapModel, StatePoint};
    use crate::periodic::find_periodic_points;

    #[test]
    fn doubling_varsigma_is_exactly_half() {
        let set = find_periodic_points(&MapModel::<f64>::doubling(), 12).unwrap();
        let c = nue_certificate(&set.orbits).unwrap();
        assert_eq!(c.varsigma, 0.5);
        assert!(c.passed());
    }

    #[test]
    fn constructed_violation() {
        let o = PeriodicOrbit::from_cocycle(
            "synthetic".into(),
            vec![StatePoint::<f64>::circle(0.0)],
            vec![Jacobian::scalar(1.0 / 1.2)],
        );
        let c = nue_certificate(&[o]).unwrap();
        assert!(!c.passed());
        assert!((c.margins[0].margin - 1.2).abs() < 1e-12);
        assert_eq!(c.violations, vec![0]);
    }

    #[test]
    fn perturbed_doubling_passes() {
        let set = find_periodic_points(&MapModel::<f64>::perturbed_doubling(1.5).unwrap(), 10).unwrap();
        let c = nue_certificate(&set.orbits).unwrap();
        assert!(c.passed(), "varsigma = {}", c.varsigma);
    }

    #[test]
    fn cat_nuh() {
        let set = find_periodic_points(&MapModel::<f64>::cat_map(), 6).unwrap();
        let c = nuh_certificate(&set.orbits).unwrap();
        assert!((c.varsigma - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-9);
        assert!(c.passed());
    }

    #[test]
    fn perturbed_cat_nuh() {
        let set = find_periodic_points(&MapModel::<f64>::perturbed_cat(0.3).unwrap(), 6).unwrap();
        let c = nuh_certificate(&set.orbits).unwrap();
        assert!(c.passed(), "varsigma = {}", c.varsigma);
    }

    #[test]
    fn elliptic_orbit_is_rejected() {
        let o = PeriodicOrbit::from_cocycle(
            "rotation".into(),
            vec![StatePoint::<f64>::torus(0.0, 0.0)],
            vec![Jacobian::matrix(0.0, -1.0, 1.0, 0.0)],
        );
        assert!(matches!(nuh_certificate(&[o]), Err(Error::SplittingUndefined(_))));
    }
}
