use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ConjugacyModel;
use crate::error::{Error, Result};
use crate::maps::{wrap, MapModel, StatePoint};
use crate::periodic::{find_periodic_points, PeriodicOrbit};
use crate::scalar::Real;

/// Longest period used to bound the exponent by local scaling at periodic
/// points.
const CAP_PERIOD: usize = 8;
const SLACK: f64 = 1e-9;

/// Sampled Hölder bound `d(h(x), h(y)) ≤ K d(x, y)^α`, valid on every
/// sampled pair for both `h` and `h⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct HolderEstimate<T> {
    pub k: T,
    pub holder_exponent: T,
    /// Least-squares slopes for `h` and `h⁻¹`.
    pub fit_exponents: (T, T),
    /// Smallest local exponent of `h` or `h⁻¹` at periodic points of
    /// period `≤ 8`, when any were found.
    pub exponent_cap: Option<T>,
    /// Root-mean-square residual of the log-log fits.
    pub residual: T,
    pub pairs: usize,
}

fn fit<T: Real>(samples: &[(T, T)]) -> Result<(T, T)> {
    let n = T::count(samples.len());
    let (mx, my) = samples.iter().fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (mx / n, my / n);
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for &(x, y) in samples {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
    }
    if !(sxx > T::lit(1e-18) * n) {
        return Err(Error::Degenerate("all sampled pairs lie at one scale".into()));
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss = samples.iter().map(|&(x, y)| (y - icpt - slope * x).powi(2)).sum::<T>();
    Ok((slope, ss))
}

fn local_exponent_cap<T: Real>(g: &MapModel<T>, degree: u32) -> Option<T> {
    let set = find_periodic_points(g, CAP_PERIOD).ok()?;
    let lk = T::count(degree as usize).ln();
    set.orbits
        .iter()
        .filter_map(|o| {
            let ln_mult: T = o.cocycle.iter().map(|j| j.get(0, 0).abs().ln()).sum();
            let l = ln_mult / (T::count(o.period) * lk);
            (l.is_finite() && l > T::zero()).then(|| l.min(T::one() / l))
        })
        .reduce(T::min)
}

/// Fits `(K, α)` on `pair_count` random pairs for each of `h` and `h⁻¹` at
/// scales `2^{-m}..2^{-2}`, caps `α` by the local exponents at periodic
/// points, and inflates `K` to the worst sampled ratio.
pub fn holder_estimate<T: Real>(h: &ConjugacyModel<T>, pair_count: usize, seed: u64) -> Result<HolderEstimate<T>> {
    if pair_count < 100 {
        return Err(Error::Precondition(format!("pair_count {pair_count} < 100")));
    }
    let bits = (h.intervals() as f64).log2().floor().max(3.0);
    let sample = |forward: bool| -> Result<Vec<(T, T)>> {
        (0..pair_count)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(2 * i as u64 + forward as u64);
                let x = T::lit(rng.gen_range(0.0..1.0));
                let d = T::lit(rng.gen_range(2.0..=bits)).neg().exp2();
                let y = wrap(x + d);
                let (a, b) = if forward { (h.eval(x), h.eval(y)) } else { (h.inverse(x)?, h.inverse(y)?) };
                let dd = StatePoint::circle(a).dist(&StatePoint::circle(b));
                if !(dd > T::zero()) {
                    return Err(Error::Degenerate(format!("h collapses the pair ({x}, {y})")));
                }
                Ok((d.ln(), dd.ln()))
            })
            .collect()
    };
    let fwd = sample(true)?;
    let bwd = sample(false)?;
    let (a_fwd, ss_fwd) = fit(&fwd)?;
    let (a_bwd, ss_bwd) = fit(&bwd)?;
    let cap = local_exponent_cap(&h.g, h.degree);
    let mut alpha = a_fwd.min(a_bwd).min(T::one());
    if let Some(c) = cap {
        alpha = alpha.min(c);
    }
    if !(alpha > T::zero()) {
        return Err(Error::Degenerate(format!("fitted exponent {alpha} is not positive")));
    }
    let k = fwd
        .iter()
        .chain(&bwd)
        .map(|&(ld, ldd)| (ldd - alpha * ld).exp())
        .fold(T::zero(), T::max);
    let residual = ((ss_fwd + ss_bwd) / T::count(2 * pair_count)).sqrt();
    Ok(HolderEstimate {
        k,
        holder_exponent: alpha,
        fit_exponents: (a_fwd, a_bwd),
        exponent_cap: cap,
        residual,
        pairs: 2 * pair_count,
    })
}

/// Parameters of the backward contraction check.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayParams<T> {
    /// Contraction rate of the linear model's inverse branches.
    pub lambda_hat: T,
    /// Number of backward steps `J`.
    pub steps: usize,
    pub pairs: usize,
    /// Pairs are drawn from balls of radius `δ/2`.
    pub delta: T,
    pub max_period: usize,
    pub seed: u64,
}

impl<T: Real> DecayParams<T> {
    pub fn new(lambda_hat: T, seed: u64) -> Self {
        DecayParams { lambda_hat, steps: 20, pairs: 500, delta: T::lit(1e-3), max_period: 6, seed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayViolation<T> {
    pub x: StatePoint<T>,
    pub y: StatePoint<T>,
    pub j: usize,
    pub lhs: T,
    pub rhs: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayCheck<T> {
    pub passed: bool,
    /// Largest `lhs / rhs` over all pairs and steps.
    pub worst_margin: T,
    pub violation: Option<DecayViolation<T>>,
    pub pairs: usize,
}

/// Local inverse of `g` at `y` selected by the nearby orbit point `near`.
pub(crate) fn local_preimage<T: Real>(model: &MapModel<T>, y: &StatePoint<T>, near: &StatePoint<T>) -> Result<StatePoint<T>> {
    if model.is_invertible() {
        return model.inverse(y);
    }
    let k = model.degree().unwrap_or(1) as usize;
    let mut best: Option<(T, StatePoint<T>)> = None;
    for b in 0..k {
        let x = model.preimage(b, y)?;
        let d = x.dist(near);
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    }
    Ok(best.expect("degree at least one").1)
}

fn random_in_ball<T: Real>(p: &StatePoint<T>, r: T, rng: &mut impl Rng) -> StatePoint<T> {
    if p.dim() == 1 {
        p.translate(&[r * T::lit(rng.gen_range(-1.0..1.0)), T::zero()])
    } else {
        let theta = T::lit(rng.gen_range(0.0..std::f64::consts::TAU));
        let rad = r * T::lit(rng.gen_range(0.0f64..1.0).sqrt());
        p.translate(&[rad * theta.cos(), rad * theta.sin()])
    }
}

/// Checks `d(g^{-j}x, g^{-j}y) ≤ (λ̂^α)^j K^{1+α} δ^{α²}` for `j = 1..J` on
/// random pairs near periodic points, following the inverse branches
/// selected by the backward periodic orbit.
pub fn contraction_decay_check<T: Real>(
    model: &MapModel<T>,
    est: &HolderEstimate<T>,
    params: &DecayParams<T>,
) -> Result<DecayCheck<T>> {
    if params.pairs == 0 || params.steps == 0 || !(params.delta > T::zero()) {
        return Err(Error::Precondition("need pairs, steps and delta > 0".into()));
    }
    let orbits: Vec<PeriodicOrbit<T>> = find_periodic_points(model, params.max_period)?.orbits;
    if orbits.is_empty() {
        return Err(Error::Precondition("no periodic orbits".into()));
    }
    let a = est.holder_exponent;
    let base = est.k.powf(T::one() + a) * params.delta.powf(a * a);
    let rate = params.lambda_hat.powf(a);
    let slack = T::lit(SLACK);
    let results = (0..params.pairs)
        .into_par_iter()
        .map(|i| -> Result<(T, Option<DecayViolation<T>>)> {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(i as u64);
            let o = &orbits[rng.gen_range(0..orbits.len())];
            let t = o.period;
            let idx = rng.gen_range(0..t);
            let p = o.points[idx];
            let half = params.delta / T::lit(2.0);
            let (x0, y0) = (random_in_ball(&p, half, &mut rng), random_in_ball(&p, half, &mut rng));
            let (mut x, mut y) = (x0, y0);
            let mut worst = T::zero();
            let mut first_violation = None;
            for j in 1..=params.steps {
                let near = o.points[(idx + t * params.steps - j) % t];
                x = local_preimage(model, &x, &near)?;
                y = local_preimage(model, &y, &near)?;
                let lhs = x.dist(&y);
                let rhs = rate.powi(j as i32) * base;
                worst = worst.max(lhs / rhs);
                if lhs > rhs * (T::one() + slack) + T::epsilon() * T::lit(4.0) && first_violation.is_none() {
                    first_violation = Some(DecayViolation { x: x0, y: y0, j, lhs, rhs });
                }
            }
            Ok((worst, first_violation))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_margin = results.iter().map(|r| r.0).fold(T::zero(), T::max);
    let violation = results.into_iter().find_map(|r| r.1);
    Ok(DecayCheck { passed: violation.is_none(), worst_margin, violation, pairs: params.pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shadowing::build_conjugacy;

    #[test]
    fn identity_estimate() {
        let g = MapModel::<f64>::doubling();
        let h = build_conjugacy(&g, &g, 1 << 10).unwrap();
        let e = holder_estimate(&h, 200, 1).unwrap();
        assert!((e.holder_exponent - 1.0).abs() < 1e-9);
        assert!((e.k - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_pairs() {
        let g = MapModel::<f64>::doubling();
        let h = build_conjugacy(&g, &g, 1 << 4).unwrap();
        assert!(matches!(holder_estimate(&h, 99, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn perturbed_bound_holds_on_samples() {
        let g = MapModel::<f64>::perturbed_doubling(0.5).unwrap();
        let f = MapModel::<f64>::doubling();
        let h = build_conjugacy(&g, &f, 1 << 12).unwrap();
        let e = holder_estimate(&h, 300, 5).unwrap();
        assert!(e.holder_exponent > 0.0 && e.holder_exponent <= 1.0);
        assert!(e.holder_exponent < 1.0);
        assert!(e.k > 0.0);
    }

    #[test]
    fn doubling_decay() {
        let g = MapModel::<f64>::doubling();
        let h = build_conjugacy(&g, &g, 1 << 8).unwrap();
        let e = holder_estimate(&h, 100, 2).unwrap();
        let c = contraction_decay_check(&g, &e, &DecayParams::new(0.5, 3)).unwrap();
        assert!(c.passed, "{c:?}");
        assert!(c.worst_margin > 0.5);
    }

    #[test]
    fn perturbed_decay() {
        let g = MapModel::<f64>::perturbed_doubling(0.5).unwrap();
        let f = MapModel::<f64>::doubling();
        let h = build_conjugacy(&g, &f, 1 << 12).unwrap();
        let e = holder_estimate(&h, 400, 9).unwrap();
        let c = contraction_decay_check(&g, &e, &DecayParams::new(0.5, 4)).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn too_small_rate_fails() {
        let g = MapModel::<f64>::doubling();
        let h = build_conjugacy(&g, &g, 1 << 8).unwrap();
        let e = holder_estimate(&h, 100, 2).unwrap();
        let c = contraction_decay_check(&g, &e, &DecayParams::new(0.3, 3)).unwrap();
        assert!(!c.passed);
        assert!(c.violation.is_some());
    }
}
