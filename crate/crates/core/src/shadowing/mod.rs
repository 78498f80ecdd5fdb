//! Shadowing of nearly closed orbit segments by periodic orbits,
//! conjugacies to the linear models and the Hölder-type checks built on
//! them.

mod conjugacy;
mod eigen;
mod holder;

pub use conjugacy::{build_conjugacy, conjugacy_defect, ConjugacyModel, DEFECT_BOUND};
pub use eigen::{eigenvalue_bound_check, EigenCheck, EigenVerdict};
use holder::local_preimage;
pub use holder::{contraction_decay_check, holder_estimate, DecayCheck, DecayParams, HolderEstimate};

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::normalize;
use crate::maps::{MapModel, OrbitSegment, StatePoint};
use crate::periodic::{close_sequence, find_periodic_points, least_period, PeriodicOrbit};
use crate::scalar::Real;

/// Segments closing better than this are treated as periodic already.
pub const PERIODIC_GAP: f64 = 1e-12;

/// A periodic orbit shadowing a nearly closed segment.
#[derive(Clone, Debug)]
pub struct ShadowingResult<T> {
    pub segment: OrbitSegment<T>,
    /// `d(gⁿ(x), x)`.
    pub closing_gap: T,
    pub orbit: PeriodicOrbit<T>,
    /// `max_{0≤j≤n} d(gʲ(p), gʲ(x))`.
    pub epsilon: T,
}

/// Finds a periodic orbit of period dividing `n` whose orbit stays close to
/// the segment `x_0, …, x_n`.
pub fn shadow_periodic<T: Real>(model: &MapModel<T>, segment: &OrbitSegment<T>, alpha_max: T) -> Result<ShadowingResult<T>> {
    let n = segment.len();
    if n == 0 {
        return Err(Error::Precondition("segment needs at least one step".into()));
    }
    let gap = segment.closing_gap();
    if !(gap < alpha_max) {
        return Err(Error::Precondition(format!("closing gap {gap} is not below alpha_max {alpha_max}")));
    }
    let points: Vec<StatePoint<T>> = if gap <= T::lit(PERIODIC_GAP) {
        segment.points[..n].to_vec()
    } else if model.dimension() == 1 {
        circle_closing(model, segment)?
    } else {
        close_sequence(model, &segment.points[..n])?
    };
    // a segment that already closes is its own shadow: gʲ(p) = gʲ(x)
    let epsilon = if gap <= T::lit(PERIODIC_GAP) {
        T::zero()
    } else {
        (0..=n).map(|j| points[j % n].dist(&segment.points[j])).fold(T::zero(), T::max)
    };
    let lp = least_period(&points);
    let orbit = PeriodicOrbit::from_points(model, points[..lp].to_vec())?;
    Ok(ShadowingResult { segment: segment.clone(), closing_gap: gap, orbit, epsilon })
}

/// Fixed point of the composed local inverse branches that follow the
/// segment backwards (at each step the preimage nearest to the segment
/// point), and its backward orbit.
fn circle_closing<T: Real>(model: &MapModel<T>, segment: &OrbitSegment<T>) -> Result<Vec<StatePoint<T>>> {
    let n = segment.len();
    let tol = T::tol(1e-12);
    let compose = |y: &StatePoint<T>| -> Result<StatePoint<T>> {
        let mut z = *y;
        for near in segment.points[..n].iter().rev() {
            z = local_preimage(model, &z, near)?;
        }
        Ok(z)
    };
    let mut y = segment.points[0];
    let mut prev = T::infinity();
    let mut converged = false;
    for _ in 0..10_000 {
        let z = compose(&y)?;
        let diff = z.dist(&y);
        y = z;
        if diff <= tol && (diff == T::zero() || diff >= prev) {
            converged = true;
            break;
        }
        prev = diff;
    }
    if !converged {
        return Err(Error::NonContraction("composed inverse branches did not converge".into()));
    }
    let mut pts = vec![y; n];
    let mut cur = y;
    for j in (1..n).rev() {
        cur = local_preimage(model, &cur, &segment.points[j])?;
        pts[j] = cur;
    }
    let mut mult = T::one();
    for p in &pts {
        mult = mult * model.jacobian(p)?.get(0, 0).abs();
    }
    if !(mult > T::one()) {
        return Err(Error::NonContraction(format!("return map multiplier {mult} is not expanding")));
    }
    Ok(pts)
}

/// Model constant `C` with `ε ≤ C·α`, when one is available: `1/(1 − κ)`
/// with `κ = sup 1/|g'|` for circle maps, `√2/(1 − λ_s)` for symmetric
/// hyperbolic toral automorphisms (orthogonal eigen-splitting).
pub fn shadowing_bound<T: Real>(model: &MapModel<T>) -> Option<T> {
    if model.dimension() == 1 {
        let (min_conorm, _) = model.min_conorm_scan(1 << 12).ok()?;
        let kappa = T::one() / min_conorm;
        return (kappa < T::one()).then(|| T::one() / (T::one() - kappa));
    }
    let m = model.integer_matrix()?;
    if m[0][1] != m[1][0] {
        return None;
    }
    let j = model.jacobian(&StatePoint::torus(T::zero(), T::zero())).ok()?;
    let moduli = j.spectrum().moduli();
    let ls = moduli[0];
    (ls < T::one()).then(|| T::lit(2.0).sqrt() / (T::one() - ls))
}

/// One row of the ε(α) table.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowingRow<T> {
    pub alpha: T,
    pub trials: usize,
    pub failures: usize,
    /// Largest achieved ε.
    pub max_epsilon: T,
    /// Largest measured gap over the trials.
    pub max_gap: T,
    /// Largest ε / gap over trials with a nonzero gap.
    pub max_ratio: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowingTable<T> {
    pub rows: Vec<ShadowingRow<T>>,
    /// Model constant from [`shadowing_bound`].
    pub bound: Option<T>,
}

impl<T: Real> ShadowingTable<T> {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "alpha,trials,failures,max_gap,max_epsilon,max_ratio")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:e},{},{},{:e},{:e},{:e}",
                r.alpha, r.trials, r.failures, r.max_gap, r.max_epsilon, r.max_ratio
            )?;
        }
        Ok(())
    }
}

/// A pseudo-closing segment of gap about `alpha` near a random periodic
/// orbit: the start is displaced along a random direction `u` by
/// `α / |(Dgⁿ − I) u|`, so that the linearized closing gap is `α`.
pub fn pseudo_closing_segment<T: Real>(
    model: &MapModel<T>,
    orbit: &PeriodicOrbit<T>,
    alpha: T,
    rng: &mut impl Rng,
) -> Result<OrbitSegment<T>> {
    let n = orbit.period;
    let p = orbit.points[rng.gen_range(0..n)];
    let u = if model.dimension() == 1 {
        [if rng.gen_bool(0.5) { T::one() } else { -T::one() }, T::zero()]
    } else {
        let theta = T::lit(rng.gen_range(0.0..std::f64::consts::TAU));
        [theta.cos(), theta.sin()]
    };
    let u = normalize(&u).expect("unit direction");
    let m = model.jacobian_power(&p, n)?.sub_identity();
    let scale = crate::linalg::norm(&m.apply(&u));
    if scale == T::zero() {
        return Err(Error::Singular("Dgⁿ − I along the displacement"));
    }
    let t = alpha / scale;
    let x0 = p.translate(&[u[0] * t, u[1] * t]);
    Ok(model.iterate_orbit(&x0, n))
}

/// Empirical shadowing modulus: for each `α`, `trials` pseudo-closing
/// segments near random periodic orbits of period `≤ max_period` are
/// shadowed and the worst ε recorded. Trial `i` uses the same random
/// stream for every `α`.
pub fn shadowing_constants<T: Real>(
    model: &MapModel<T>,
    trials: usize,
    alphas: &[T],
    max_period: usize,
    seed: u64,
) -> Result<ShadowingTable<T>> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let orbits = find_periodic_points(model, max_period)?.orbits;
    if orbits.is_empty() {
        return Err(Error::Precondition("no periodic orbits to perturb".into()));
    }
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let outcomes: Vec<Option<(T, T)>> = (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let orbit = &orbits[rng.gen_range(0..orbits.len())];
                let seg = pseudo_closing_segment(model, orbit, alpha, &mut rng).ok()?;
                let gap = seg.closing_gap();
                let limit = gap * T::lit(2.0) + T::lit(PERIODIC_GAP) * T::lit(2.0);
                shadow_periodic(model, &seg, limit).ok().map(|r| (r.epsilon, gap))
            })
            .collect();
        let mut row = ShadowingRow {
            alpha,
            trials,
            failures: 0,
            max_epsilon: T::zero(),
            max_gap: T::zero(),
            max_ratio: T::zero(),
        };
        for o in outcomes {
            match o {
                Some((eps, gap)) => {
                    row.max_epsilon = row.max_epsilon.max(eps);
                    row.max_gap = row.max_gap.max(gap);
                    if gap > T::zero() {
                        row.max_ratio = row.max_ratio.max(eps / gap);
                    }
                }
                None => row.failures += 1,
            }
        }
        rows.push(row);
    }
    Ok(ShadowingTable { rows, bound: shadowing_bound(model) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_periodic_segment() {
        let g = MapModel::<f64>::doubling();
        let seg = OrbitSegment {
            model_id: g.id(),
            points: [0.2, 0.4, 0.8, 0.6, 0.2].iter().map(|&x| StatePoint::circle(x)).collect(),
        };
        let r = shadow_periodic(&g, &seg, 1e-3).unwrap();
        assert_eq!(r.epsilon, 0.0);
        assert_eq!(r.orbit.points[0].x(), 0.2);
        assert_eq!(r.orbit.period, 4);
    }

    #[test]
    fn doubling_perturbed_start() {
        let g = MapModel::<f64>::doubling();
        let seg = g.iterate_orbit(&StatePoint::circle(0.2 + 1e-4), 4);
        let alpha = seg.closing_gap();
        assert!((alpha - 15e-4).abs() < 1e-12);
        let r = shadow_periodic(&g, &seg, 1e-2).unwrap();
        assert!((r.orbit.points[0].x() - 0.2).abs() < 1e-12);
        assert!(r.epsilon <= 2.0 * alpha);
    }

    #[test]
    fn cat_pseudo_closing() {
        let cat = MapModel::<f64>::cat_map();
        let orbits = find_periodic_points(&cat, 3).unwrap().orbits;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = shadowing_bound(&cat).unwrap();
        for o in &orbits {
            let seg = pseudo_closing_segment(&cat, o, 1e-3, &mut rng).unwrap();
            let r = shadow_periodic(&cat, &seg, 1e-2).unwrap();
            assert!(r.epsilon <= c * r.closing_gap * (1.0 + 1e-6), "{} vs {}", r.epsilon, c * r.closing_gap);
        }
    }

    #[test]
    fn doubling_table() {
        let g = MapModel::<f64>::doubling();
        let t = shadowing_constants(&g, 50, &[0.0, 1e-4, 1e-3, 1e-2], 6, 11).unwrap();
        assert_eq!(t.rows[0].max_epsilon, 0.0);
        for r in &t.rows {
            assert_eq!(r.failures, 0);
            assert!(r.max_epsilon <= 2.0 * r.max_gap * (1.0 + 1e-9));
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }

    #[test]
    fn perturbed_doubling_ratio_bounded() {
        let g = MapModel::<f64>::perturbed_doubling(0.5).unwrap();
        let t = shadowing_constants(&g, 40, &[1e-4, 1e-3], 6, 3).unwrap();
        for r in &t.rows {
            assert_eq!(r.failures, 0);
            assert!(r.max_ratio.is_finite() && r.max_ratio < 10.0);
        }
    }
}
