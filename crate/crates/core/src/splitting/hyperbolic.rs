use super::{orbit_successors, SplittingField};
use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::maps::MapModel;
use crate::scalar::Real;

/// Constants `(c, λ)` with `‖Dgⁿ|_{E^s}‖ ≤ cλⁿ` and `‖Dg^{-n}|_{E^u}‖ ≤ cλⁿ`
/// for all sampled points and `n ≤ N`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperbolicCertificate<T> {
    pub c: T,
    pub lambda: T,
    pub n_check: usize,
    /// Per-point `max_n r_n(x) / (c λⁿ)`, at most 1.
    pub margins: Vec<T>,
}

impl<T: Real> HyperbolicCertificate<T> {
    pub fn passed(&self) -> bool {
        self.lambda < T::one()
    }
}

/// Fits `λ = max_{N/2 ≤ n ≤ N} r_n^{1/n}` and then the smallest `c ≥ 1`
/// with `r_n ≤ cλⁿ` for `0 ≤ n ≤ N`, where `r_n` is the worst of the two
/// restricted norms over the samples. The sample set must be mapped into
/// itself by `g`.
pub fn hyperbolic_set_certificate<T: Real>(
    model: &MapModel<T>,
    field: &SplittingField<T>,
    n_check: usize,
) -> Result<HyperbolicCertificate<T>> {
    if n_check == 0 || field.is_empty() {
        return Err(Error::Precondition("need samples and n_check >= 1".into()));
    }
    let next = orbit_successors(model, &field.points)?;
    let m = field.len();
    let mut prev = vec![usize::MAX; m];
    for (i, &j) in next.iter().enumerate() {
        if prev[j] != usize::MAX {
            return Err(Error::NotOrbitClosed(i));
        }
        prev[j] = i;
    }
    if let Some(i) = prev.iter().position(|&p| p == usize::MAX) {
        return Err(Error::NotOrbitClosed(i));
    }
    // one-step factors along the stored bundles
    let mut contract = vec![T::zero(); m];
    let mut expand = vec![T::one(); m];
    for i in 0..m {
        let j = model.jacobian(&field.points[i])?;
        if let Some(s) = &field.e_cs {
            contract[i] = norm(&j.apply(&s[i]));
        }
        if let Some(u) = &field.e_cu {
            expand[i] = norm(&j.apply(&u[i]));
        }
    }
    // r[n][x] = max(‖Dgⁿ e_s(x)‖, ‖Dg^{-n} e_u(x)‖)
    let mut per_point = vec![vec![T::one(); m]; n_check + 1];
    let mut s_prod = vec![T::one(); m];
    let mut s_at = (0..m).collect::<Vec<_>>();
    let mut u_prod = vec![T::one(); m];
    let mut u_at = (0..m).collect::<Vec<_>>();
    for n in 1..=n_check {
        for x in 0..m {
            s_prod[x] = s_prod[x] * contract[s_at[x]];
            s_at[x] = next[s_at[x]];
            u_at[x] = prev[u_at[x]];
            u_prod[x] = u_prod[x] / expand[u_at[x]];
            let s = if field.e_cs.is_some() { s_prod[x] } else { T::zero() };
            let u = if field.e_cu.is_some() { u_prod[x] } else { T::zero() };
            per_point[n][x] = s.max(u);
        }
    }
    let r: Vec<T> = per_point.iter().map(|row| row.iter().copied().fold(T::zero(), T::max)).collect();
    let lambda = (n_check.div_ceil(2).max(1)..=n_check)
        .map(|n| (r[n].log2() / T::count(n)).exp2())
        .fold(T::zero(), T::max);
    let c = (0..=n_check).map(|n| r[n] / lambda.powi(n as i32)).fold(T::one(), T::max);
    let margins = (0..m)
        .map(|x| (0..=n_check).map(|n| per_point[n][x] / (c * lambda.powi(n as i32))).fold(T::zero(), T::max))
        .collect();
    Ok(HyperbolicCertificate { c, lambda, n_check, margins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::StatePoint;
    use crate::periodic::find_periodic_points;
    use crate::splitting::periodic_field;

    #[test]
    fn cat_constants() {
        let cat = MapModel::<f64>::cat_map();
        let set = find_periodic_points(&cat, 4).unwrap();
        let f = periodic_field(&cat, &set.orbits).unwrap();
        let h = hyperbolic_set_certificate(&cat, &f, 20).unwrap();
        assert!((h.lambda - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((h.c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn doubling_unstable_only() {
        let g = MapModel::<f64>::doubling();
        let set = find_periodic_points(&g, 6).unwrap();
        let f = periodic_field(&g, &set.orbits).unwrap();
        let h = hyperbolic_set_certificate(&g, &f, 10).unwrap();
        assert_eq!(h.lambda, 0.5);
    }

    #[test]
    fn perturbed_cat_constants() {
        let m = MapModel::<f64>::perturbed_cat(0.3).unwrap();
        let set = find_periodic_points(&m, 6).unwrap();
        let f = periodic_field(&m, &set.orbits).unwrap();
        let h = hyperbolic_set_certificate(&m, &f, 20).unwrap();
        assert!(h.passed() && h.c >= 1.0);
    }

    #[test]
    fn open_sample_set_is_rejected() {
        let cat = MapModel::<f64>::cat_map();
        let f = SplittingField::constant(2, vec![StatePoint::torus(0.1, 0.2)], Some([1.0, 0.0]), Some([0.0, 1.0]));
        assert!(matches!(hyperbolic_set_certificate(&cat, &f, 5), Err(Error::NotOrbitClosed(0))));
    }
}
