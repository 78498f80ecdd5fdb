use rayon::prelude::*;

use super::NUECertificate;
use crate::error::{Error, Result};
use crate::maps::{MapModel, StatePoint};
use crate::scalar::Real;

pub const DEFAULT_HORIZON: usize = 8;

/// Finite-horizon adapted metric `‖v‖_x = |v| / w(x)` on the circle with
/// `w(x) = ∑_{j<N} σ₀ʲ / |(gʲ)'(x)|` and `σ₀ = ς^{−1/2}`.
#[derive(Clone, Debug)]
pub struct AdaptedMetric<T: Real> {
    model: MapModel<T>,
    pub horizon: usize,
    pub sigma0: T,
    /// Verified grid minimum of the one-step expansion factor.
    pub sigma: T,
    pub grid: usize,
    /// Grid point attaining `sigma`.
    pub argmin: T,
}

impl<T: Real> AdaptedMetric<T> {
    /// `w(x)`; infinite when some iterate derivative vanishes.
    pub fn weight(&self, x: T) -> T {
        weight(&self.model, self.sigma0, self.horizon, x)
    }

    /// `‖Dg(x) v‖_{g(x)} / ‖v‖_x`; zero at critical points.
    pub fn factor(&self, x: T) -> T {
        factor(&self.model, self.sigma0, self.horizon, x)
    }

    /// Minimum factor over a uniform grid, and where it is attained.
    pub fn scan(&self, grid: usize) -> (T, T) {
        scan(&self.model, self.sigma0, self.horizon, grid)
    }
}

fn weight<T: Real>(model: &MapModel<T>, sigma0: T, horizon: usize, x: T) -> T {
    let mut w = T::zero();
    let mut deriv = T::one();
    let mut pow = T::one();
    let mut cur = StatePoint::circle(x);
    for j in 0..horizon {
        if j > 0 {
            pow = pow * sigma0;
        }
        w = w + pow / deriv;
        let d = match model.jacobian(&cur) {
            Ok(jac) => jac.get(0, 0).abs(),
            Err(_) => return T::infinity(),
        };
        deriv = deriv * d;
        cur = model.eval(&cur);
    }
    w
}

fn factor<T: Real>(model: &MapModel<T>, sigma0: T, horizon: usize, x: T) -> T {
    let d = match model.jacobian(&StatePoint::circle(x)) {
        Ok(j) => j.get(0, 0).abs(),
        Err(_) => return T::zero(),
    };
    if d == T::zero() {
        return T::zero();
    }
    let wx = weight(model, sigma0, horizon, x);
    let wy = weight(model, sigma0, horizon, model.eval(&StatePoint::circle(x)).x());
    let f = d * wx / wy;
    if f.is_finite() {
        f
    } else {
        T::zero()
    }
}

fn scan<T: Real>(model: &MapModel<T>, sigma0: T, horizon: usize, grid: usize) -> (T, T) {
    let h = T::one() / T::count(grid);
    (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = T::count(i) * h;
            (factor(model, sigma0, horizon, x), x)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((T::infinity(), T::zero()), |acc, c| if c.0 < acc.0 { c } else { acc })
}

/// Builds the adapted metric from a passed NUE certificate and verifies
/// the one-step expansion factor on a grid of `grid` points.
pub fn adapted_metric<T: Real>(
    model: &MapModel<T>,
    cert: &NUECertificate<T>,
    horizon: usize,
    grid: usize,
) -> Result<AdaptedMetric<T>> {
    if model.dimension() != 1 {
        return Err(Error::Unsupported { model: model.id(), what: "adapted metric on the torus".into() });
    }
    if !cert.passed() {
        return Err(Error::Precondition("NUE certificate did not pass".into()));
    }
    if horizon == 0 || grid == 0 {
        return Err(Error::Precondition("horizon and grid must be positive".into()));
    }
    let sigma0 = T::one() / cert.varsigma.sqrt();
    let (sigma, argmin) = scan(model, sigma0, horizon, grid);
    if !(sigma > T::one()) {
        return Err(Error::HorizonInsufficient { horizon, sigma: sigma.as_f64() });
    }
    Ok(AdaptedMetric { model: model.clone(), horizon, sigma0, sigma, grid, argmin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::nue_certificate;
    use crate::periodic::find_periodic_points;

    fn cert(model: &MapModel<f64>, n: usize) -> NUECertificate<f64> {
        nue_certificate(&find_periodic_points(model, n).unwrap().orbits).unwrap()
    }

    #[test]
    fn doubling_is_already_uniform() {
        let g = MapModel::<f64>::doubling();
        let m = adapted_metric(&g, &cert(&g, 4), 1, 64).unwrap();
        assert_eq!(m.weight(0.3), 1.0);
        assert_eq!(m.sigma, 2.0);
    }

    #[test]
    fn perturbed_doubling_becomes_uniform() {
        let g = MapModel::<f64>::perturbed_doubling(1.5).unwrap();
        let m = adapted_metric(&g, &cert(&g, 10), 8, 1 << 14).unwrap();
        assert!(m.sigma > 1.0);
        assert!(m.scan(1 << 15).0 > 1.0);
    }

    #[test]
    fn critical_map_fails_at_every_horizon() {
        let g = MapModel::<f64>::perturbed_doubling(2.0).unwrap();
        let c = cert(&g, 10);
        for n in [1, 4, 8, 16] {
            let e = adapted_metric(&g, &c, n, 1 << 10).unwrap_err();
            assert!(matches!(e, Error::HorizonInsufficient { .. }));
        }
    }
}
