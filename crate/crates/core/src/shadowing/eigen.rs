use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::holder::local_preimage;
use crate::error::{Error, Result};
use crate::linalg::Spectrum;
use crate::maps::{MapModel, StatePoint};
use crate::periodic::PeriodicOrbit;
use crate::scalar::Real;

const MAX_POWER: usize = 10;
const MAX_PAIRS: usize = 200;
const MIN_RADIUS: f64 = 1e-8;
const MAX_RADIUS: f64 = 1e-3;
const HYPOTHESIS_SLACK: f64 = 1e-9;
const EIGEN_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenVerdict {
    Pass,
    ConclusionViolated,
    /// The sampled contraction hypothesis failed, so the bound is not
    /// claimed.
    Inapplicable,
}

impl std::fmt::Display for EigenVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EigenVerdict::Pass => "pass",
            EigenVerdict::ConclusionViolated => "conclusion violated",
            EigenVerdict::Inapplicable => "inapplicable",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenCheck<T> {
    pub verdict: EigenVerdict,
    pub lambda: T,
    pub beta: T,
    /// Largest `d(Gⁿx, Gⁿy) / (λⁿ d(x, y)^β)` over the sampled pairs.
    pub hypothesis_ratio: T,
    pub pairs: usize,
    /// Moduli of the eigenvalues of `DG(p)` on the contracted direction.
    pub eigenvalues: Vec<T>,
}

/// `G`: the composition of the local inverse branches along the backward
/// orbit, fixing the base point.
fn return_map<T: Real>(model: &MapModel<T>, orbit: &PeriodicOrbit<T>, x: &StatePoint<T>) -> Result<StatePoint<T>> {
    let t = orbit.period;
    let mut y = *x;
    for j in 1..=t {
        y = local_preimage(model, &y, &orbit.points[(t - j) % t])?;
    }
    Ok(y)
}

/// Checks the eigenvalue bound for the inverse-branch return map `G` at
/// the base point of `orbit`: first samples `d(Gⁿx, Gⁿy) ≤ λⁿ d(x, y)^β`
/// for `n ≤ 10` on pairs near the base point (along the unstable line on
/// the torus), then compares the eigenvalue moduli of `DG(p)` with `λ`.
pub fn eigenvalue_bound_check<T: Real>(
    model: &MapModel<T>,
    orbit: &PeriodicOrbit<T>,
    lambda: T,
    beta: T,
    seed: u64,
) -> Result<EigenCheck<T>> {
    if !(lambda > T::zero() && lambda < T::one()) || !(beta > T::zero() && beta <= T::one()) {
        return Err(Error::Precondition(format!("need λ ∈ (0,1) and β ∈ (0,1], got λ = {lambda}, β = {beta}")));
    }
    let p = *orbit.base();
    let (direction, eigenvalues) = match orbit.spectrum {
        Spectrum::Scalar(m) => ([T::one(), T::zero()], vec![T::one() / m.abs()]),
        Spectrum::Real { values, vectors } => (vectors[1], vec![T::one() / values[1].abs()]),
        _ => return Err(Error::SplittingUndefined("period map has no real unstable direction".into())),
    };
    let amp = orbit
        .period_map
        .inverse()
        .map(|m| m.norm())
        .unwrap_or(T::infinity())
        .max(T::one());
    let ln_min = T::lit(MIN_RADIUS).ln();
    let ln_max = T::lit(MAX_RADIUS).ln();
    let ratios = (0..MAX_PAIRS)
        .into_par_iter()
        .map(|i| -> Result<T> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let along = |rng: &mut ChaCha8Rng| {
                let r = (ln_min + (ln_max - ln_min) * T::lit(rng.gen_range(0.0..1.0))).exp();
                let r = if rng.gen_bool(0.5) { r } else { -r };
                p.translate(&[direction[0] * r, direction[1] * r])
            };
            let x = along(&mut rng);
            // every other pair uses the fixed point itself
            let y = if i % 2 == 0 { p } else { along(&mut rng) };
            let d0 = x.dist(&y);
            if d0 == T::zero() {
                return Ok(T::zero());
            }
            let n = 1 + i % MAX_POWER;
            let (mut gx, mut gy) = (x, y);
            for _ in 0..n {
                gx = return_map(model, orbit, &gx)?;
                gy = if i % 2 == 0 { gy } else { return_map(model, orbit, &gy)? };
            }
            let rhs = lambda.powi(n as i32) * d0.powf(beta);
            let lhs = gx.dist(&gy);
            // rounding of the coordinates is amplified by at most ‖DG‖ⁿ
            let floor = T::epsilon() * T::lit(4.0 * n as f64) * amp.powi(n as i32);
            Ok((lhs - floor).max(T::zero()) / rhs)
        })
        .collect::<Result<Vec<T>>>()?;
    let hypothesis_ratio = ratios.into_iter().fold(T::zero(), T::max);
    let verdict = if hypothesis_ratio > T::one() + T::lit(HYPOTHESIS_SLACK) {
        EigenVerdict::Inapplicable
    } else if eigenvalues.iter().all(|&e| e <= lambda + T::lit(EIGEN_SLACK)) {
        EigenVerdict::Pass
    } else {
        EigenVerdict::ConclusionViolated
    };
    Ok(EigenCheck { verdict, lambda, beta, hypothesis_ratio, pairs: MAX_PAIRS, eigenvalues })
}
