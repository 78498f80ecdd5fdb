//! Enumeration and refinement of periodic orbits.
//!
//! Circle families are enumerated symbolically: every primitive word over
//! the branch alphabet determines one periodic orbit, found as the fixed
//! point of the composed inverse branches. Linear toral maps are
//! enumerated exactly on the rational lattice, and perturbed toral maps by
//! Newton continuation in the parameter from the linear model.

pub mod lattice;

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{normalize, solve_dense, Jacobian, Spectrum};
use crate::maps::{MapModel, StatePoint};
use crate::scalar::Real;

/// `gᵗ(p) = p` must hold to this flat distance.
pub const CLOSING_TOL: f64 = 1e-10;
/// Distinct orbit points are separated by more than this.
pub const LEAST_PERIOD_TOL: f64 = 1e-6;
/// Initial parameter step of the continuation.
pub const CONTINUATION_STEP: f64 = 0.05;
const MIN_CONTINUATION_STEP: f64 = 1e-4;
const NEWTON_CAP: usize = 50;

/// A periodic orbit of exact least period with its derivative cocycle.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbit<T> {
    pub model_id: String,
    pub period: usize,
    /// `points[j] = gʲ(p)`, `points[0]` is the base point.
    pub points: Vec<StatePoint<T>>,
    /// `cocycle[j] = Dg(gʲ(p))`.
    pub cocycle: Vec<Jacobian<T>>,
    /// `Dg(g^{t−1}(p)) ⋯ Dg(p)`.
    pub period_map: Jacobian<T>,
    pub spectrum: Spectrum<T>,
}

impl<T: Real> PeriodicOrbit<T> {
    /// Builds the orbit record from its points, evaluating the exact cocycle.
    pub fn from_points(model: &MapModel<T>, points: Vec<StatePoint<T>>) -> Result<Self> {
        let cocycle = points.iter().map(|p| model.jacobian(p)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_cocycle(model.id(), points, cocycle))
    }

    /// Builds an orbit record from given points and cocycle (synthetic or
    /// imported data).
    pub fn from_cocycle(model_id: String, points: Vec<StatePoint<T>>, cocycle: Vec<Jacobian<T>>) -> Self {
        assert_eq!(points.len(), cocycle.len(), "one Jacobian per orbit point");
        assert!(!points.is_empty(), "orbit must be non-empty");
        let period_map = cocycle
            .iter()
            .skip(1)
            .fold(cocycle[0], |acc, j| j.mul(&acc));
        PeriodicOrbit {
            model_id,
            period: points.len(),
            spectrum: period_map.spectrum(),
            points,
            cocycle,
            period_map,
        }
    }

    pub fn base(&self) -> &StatePoint<T> {
        &self.points[0]
    }

    /// `d(gᵗ(p), p)` computed by forward iteration from the base point.
    pub fn closing_residual(&self, model: &MapModel<T>) -> T {
        let mut cur = self.points[0];
        for _ in 0..self.period {
            cur = model.eval(&cur);
        }
        cur.dist(&self.points[0])
    }

    /// Largest `d(g(p_j), p_{j+1})`.
    pub fn step_residual(&self, model: &MapModel<T>) -> T {
        (0..self.period)
            .map(|j| model.eval(&self.points[j]).dist(&self.points[(j + 1) % self.period]))
            .fold(T::zero(), T::max)
    }

    /// Checks the orbit invariants: closure, least period, and agreement of
    /// the stored period map with the cocycle product.
    pub fn validate(&self, model: &MapModel<T>) -> Result<()> {
        let closing = self.closing_residual(model);
        // forward iteration amplifies rounding by up to ‖Dgᵗ‖
        let rounding = T::epsilon() * T::lit(16.0) * self.period_map.norm().max(T::one());
        if !(closing < T::lit(CLOSING_TOL).max(rounding)) {
            return Err(Error::Precondition(format!("orbit does not close: residual {closing}")));
        }
        if least_period(&self.points) != self.period {
            return Err(Error::Precondition("stored period is not the least period".into()));
        }
        let prod = self.cocycle.iter().skip(1).fold(self.cocycle[0], |acc, j| j.mul(&acc));
        let scale = prod.norm().max(T::one());
        if prod.max_abs_diff(&self.period_map) > T::tol(1e-12) * scale {
            return Err(Error::Precondition("period map differs from the cocycle product".into()));
        }
        Ok(())
    }
}

/// Smallest `j` dividing `n = points.len()` with `d(p_j, p_0) < 1e-6`.
pub fn least_period<T: Real>(points: &[StatePoint<T>]) -> usize {
    let n = points.len();
    (1..n)
        .find(|&j| n % j == 0 && points[j].dist(&points[0]) < T::lit(LEAST_PERIOD_TOL))
        .unwrap_or(n)
}

/// An orbit the enumerator could not produce, reported instead of dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitGap {
    pub period: usize,
    pub seed: String,
    pub reason: String,
}

/// Result of [`find_periodic_points`].
#[derive(Clone, Debug)]
pub struct PeriodicSet<T> {
    pub max_period: usize,
    /// Sorted by `(period, base point)`; each orbit appears once.
    pub orbits: Vec<PeriodicOrbit<T>>,
    pub gaps: Vec<OrbitGap>,
}

impl<T: Real> PeriodicSet<T> {
    /// `#Fix(gⁿ)` reconstructed from the orbit list.
    pub fn fixed_point_count(&self, n: usize) -> usize {
        self.orbits.iter().filter(|o| n % o.period == 0).map(|o| o.period).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn up_to(&self, period: usize) -> Vec<PeriodicOrbit<T>> {
        self.orbits.iter().filter(|o| o.period <= period).cloned().collect()
    }
}

/// Lyndon words of length exactly `n` over `{0, …, k−1}` (Duval's algorithm).
pub fn lyndon_words(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n == 0 || k == 0 {
        return out;
    }
    let mut w: Vec<usize> = vec![0];
    loop {
        if w.len() == n {
            out.push(w.clone());
        }
        // extend periodically to length n, then increment the last letter
        let m = w.len();
        while w.len() < n {
            let c = w[w.len() - m];
            w.push(c);
        }
        while let Some(&last) = w.last() {
            if last == k - 1 {
                w.pop();
            } else {
                break;
            }
        }
        match w.last_mut() {
            Some(last) => *last += 1,
            None => break,
        }
    }
    out
}

/// Enumerates every periodic orbit of least period `≤ max_period`.
pub fn find_periodic_points<T: Real>(model: &MapModel<T>, max_period: usize) -> Result<PeriodicSet<T>> {
    if max_period == 0 {
        return Err(Error::Precondition("max_period must be at least 1".into()));
    }
    let (mut orbits, gaps) = if model.dimension() == 1 {
        enumerate_circle(model, max_period)?
    } else if let Some(linear) = model.linear_model() {
        let matrix = linear
            .integer_matrix()
            .ok_or_else(|| Error::Unsupported { model: model.id(), what: "periodic enumeration".into() })?;
        enumerate_toral(model, &matrix, max_period)?
    } else {
        return Err(Error::Unsupported { model: model.id(), what: "periodic enumeration".into() });
    };
    orbits.sort_by(|a, b| a.period.cmp(&b.period).then(a.points[0].lex_cmp(&b.points[0])));
    orbits.dedup_by(|b, a| a.period == b.period && a.points[0].dist(&b.points[0]) < T::lit(1e-9));
    Ok(PeriodicSet { max_period, orbits, gaps })
}

type Enumerated<T> = (Vec<PeriodicOrbit<T>>, Vec<OrbitGap>);

fn enumerate_circle<T: Real>(model: &MapModel<T>, max_period: usize) -> Result<Enumerated<T>> {
    let k = model.degree().ok_or_else(|| Error::Unsupported {
        model: model.id(),
        what: "symbolic enumeration needs a circle degree".into(),
    })? as usize;
    match model.lift(T::zero()) {
        Some(l0) if l0 == T::zero() => {}
        _ => {
            return Err(Error::Unsupported {
                model: model.id(),
                what: "symbolic enumeration needs a lift with L(0) = 0".into(),
            })
        }
    }
    let words: Vec<Vec<usize>> = (1..=max_period)
        .flat_map(|n| lyndon_words(n, k))
        // the constant top word codes the fixed point 0 ≡ 1 a second time
        .filter(|w| !(w.len() == 1 && w[0] == k - 1))
        .collect();
    let results: Vec<std::result::Result<PeriodicOrbit<T>, OrbitGap>> =
        words.par_iter().map(|w| orbit_from_word(model, w)).collect();
    let mut orbits = Vec::new();
    let mut gaps = Vec::new();
    for r in results {
        match r {
            Ok(o) => orbits.push(o),
            Err(g) => gaps.push(g),
        }
    }
    Ok((orbits, gaps))
}

fn word_label(w: &[usize]) -> String {
    w.iter().map(|d| char::from_digit(*d as u32, 36).unwrap_or('?')).collect()
}

/// Fixed point of `B_{w₀} ∘ ⋯ ∘ B_{w_{n−1}}` by direct iteration; the
/// composition is monotone on `[0, 1]`, so the iteration converges to a
/// fixed point whenever the orbit is repelling.
pub fn word_fixed_point<T: Real>(model: &MapModel<T>, word: &[usize]) -> Result<T> {
    let tol = T::tol(1e-15);
    let mut y = T::lit(0.5);
    let mut prev = T::infinity();
    for _ in 0..20_000 {
        let mut z = y;
        for &b in word.iter().rev() {
            z = model.preimage_lifted(b, z)?;
        }
        let diff = (z - y).abs();
        // keep contracting past the tolerance until rounding stalls progress
        let done = diff <= tol && (diff == T::zero() || diff >= prev);
        prev = diff;
        y = z;
        if done {
            return Ok(y);
        }
    }
    Err(Error::NonContraction(format!("word {} did not converge", word_label(word))))
}

fn orbit_from_word<T: Real>(model: &MapModel<T>, word: &[usize]) -> std::result::Result<PeriodicOrbit<T>, OrbitGap> {
    let n = word.len();
    let gap = |reason: String| OrbitGap { period: n, seed: word_label(word), reason };
    let symbolic = word_fixed_point(model, word).and_then(|p0| {
        // orbit points by contracting inverse branches: p_j = B_{w_j}(p_{j+1})
        let mut pts = vec![T::zero(); n];
        pts[0] = p0;
        let mut cur = p0;
        for j in (1..n).rev() {
            cur = model.preimage_lifted(word[j], cur)?;
            pts[j] = cur;
        }
        let pts: Vec<StatePoint<T>> = pts.into_iter().map(StatePoint::circle).collect();
        close_sequence(model, &pts)
    });
    let points = match symbolic {
        Ok(p) => p,
        Err(e) if model.parameter().is_some() => {
            // fallback: continue the linear-model orbit with the same itinerary
            let denom = T::lit(2f64.powi(n as i32) - 1.0);
            let start: Vec<StatePoint<T>> = (0..n)
                .map(|j| {
                    let num = (0..n).fold(0u64, |acc, i| acc * 2 + word[(i + j) % n] as u64);
                    StatePoint::circle(T::lit(num as f64) / denom)
                })
                .collect();
            continue_in_parameter(model, start).map_err(|c| gap(format!("{e}; continuation: {c}")))?
        }
        Err(e) => return Err(gap(e.to_string())),
    };
    finish_orbit(model, points).map_err(|e| gap(e.to_string()))
}

/// Rotates to the canonical base point, checks least period and closure,
/// and attaches the cocycle.
fn finish_orbit<T: Real>(model: &MapModel<T>, mut points: Vec<StatePoint<T>>) -> Result<PeriodicOrbit<T>> {
    let n = points.len();
    let lp = least_period(&points);
    if lp != n {
        return Err(Error::Precondition(format!("least period {lp} differs from word length {n}")));
    }
    let start = (0..n)
        .min_by(|&a, &b| points[a].lex_cmp(&points[b]))
        .unwrap_or(0);
    points.rotate_left(start);
    let orbit = PeriodicOrbit::from_points(model, points)?;
    orbit.validate(model)?;
    Ok(orbit)
}

fn enumerate_toral<T: Real>(model: &MapModel<T>, matrix: &lattice::IntMatrix, max_period: usize) -> Result<Enumerated<T>> {
    let mut exact = Vec::new();
    for n in 1..=max_period {
        exact.extend(lattice::orbits_of_period(matrix, n)?);
    }
    let to_float = |r: &num_rational::Ratio<i64>| T::lit(*r.numer() as f64) / T::lit(*r.denom() as f64);
    let results: Vec<std::result::Result<PeriodicOrbit<T>, OrbitGap>> = exact
        .par_iter()
        .map(|o| {
            let start: Vec<StatePoint<T>> =
                o.points.iter().map(|p| StatePoint::torus(to_float(&p[0]), to_float(&p[1]))).collect();
            let gap = |reason: String| OrbitGap {
                period: o.period,
                seed: format!("{}/{} , {}/{}", o.points[0][0].numer(), o.points[0][0].denom(), o.points[0][1].numer(), o.points[0][1].denom()),
                reason,
            };
            let pts = if model.parameter().is_some() {
                continue_in_parameter(model, start).map_err(|e| gap(e.to_string()))?
            } else {
                close_sequence(model, &start).map_err(|e| gap(e.to_string()))?
            };
            finish_orbit(model, pts).map_err(|e| gap(e.to_string()))
        })
        .collect();
    let mut orbits = Vec::new();
    let mut gaps = Vec::new();
    for r in results {
        match r {
            Ok(o) => orbits.push(o),
            Err(g) => gaps.push(g),
        }
    }
    Ok((orbits, gaps))
}

/// Continues a periodic sequence of the unperturbed member (`s = 0`) of a
/// perturbed family to the model's parameter, with step 0.05 halved on
/// failure, and polishes the result at the target parameter.
pub fn continue_in_parameter<T: Real>(model: &MapModel<T>, start: Vec<StatePoint<T>>) -> Result<Vec<StatePoint<T>>> {
    let target = model
        .parameter()
        .ok_or_else(|| Error::Unsupported { model: model.id(), what: "parameter continuation".into() })?;
    let mut s = T::zero();
    let mut step = T::lit(CONTINUATION_STEP);
    let mut pts = start;
    while s != target {
        let remaining = target - s;
        let next = if remaining.abs() <= step { target } else { s + step * remaining.signum() };
        match close_sequence(&model.with_parameter(next)?, &pts) {
            Ok(p) => {
                pts = p;
                s = next;
            }
            Err(e) => {
                step = step / T::lit(2.0);
                if step < T::lit(MIN_CONTINUATION_STEP) {
                    return Err(Error::Precondition(format!("continuation stalled at s = {s}: {e}")));
                }
            }
        }
    }
    close_sequence(model, &pts)
}

/// Newton's method in sequence space for a periodic sequence: the unknowns
/// are all `n` points and the equations are `g(p_j) = p_{j+1 mod n}`.
pub fn close_sequence<T: Real>(model: &MapModel<T>, guess: &[StatePoint<T>]) -> Result<Vec<StatePoint<T>>> {
    let n = guess.len();
    if n == 0 {
        return Err(Error::Precondition("empty sequence".into()));
    }
    let d = model.dimension();
    let size = n * d;
    let tol = T::tol(1e-12);
    let mut pts = guess.to_vec();
    let mut last = T::infinity();
    let mut best = (T::infinity(), pts.clone());
    for _ in 0..NEWTON_CAP {
        let images: Vec<StatePoint<T>> = pts.iter().map(|p| model.eval(p)).collect();
        let mut rhs = vec![T::zero(); size];
        let mut res = T::zero();
        for j in 0..n {
            let r = pts[(j + 1) % n].displacement_to(&images[j]);
            for c in 0..d {
                rhs[j * d + c] = -r[c];
            }
            res = res.max(r[0].hypot(r[1]));
        }
        if res < best.0 {
            best = (res, pts.clone());
        }
        // iterate down to the rounding floor, then keep the best iterate
        if res == T::zero() || (res >= last && best.0 <= tol) {
            return Ok(best.1);
        }
        last = res;
        let mut mat = vec![T::zero(); size * size];
        for j in 0..n {
            let jac = model.jacobian(&pts[j])?;
            let next = (j + 1) % n;
            for r in 0..d {
                for c in 0..d {
                    mat[(j * d + r) * size + j * d + c] = mat[(j * d + r) * size + j * d + c] + jac.get(r, c);
                }
                mat[(j * d + r) * size + next * d + r] = mat[(j * d + r) * size + next * d + r] - T::one();
            }
        }
        let delta = solve_dense(mat, rhs).ok_or(Error::Singular("periodic closing"))?;
        for j in 0..n {
            let v = if d == 1 { [delta[j], T::zero()] } else { [delta[j * 2], delta[j * 2 + 1]] };
            pts[j] = pts[j].translate(&v);
        }
    }
    if best.0 <= tol {
        return Ok(best.1);
    }
    Err(Error::NewtonDiverged { iterations: NEWTON_CAP, residual: best.0.as_f64() })
}

/// Outcome of [`refine_newton`].
#[derive(Clone, Debug)]
pub struct Refined<T> {
    pub point: StatePoint<T>,
    /// Residual `d(gⁿ(x), x)` before each Newton step and at the end.
    pub residuals: Vec<T>,
}

impl<T: Real> Refined<T> {
    /// Whether the residual log shows superlinear convergence once the
    /// residual is small (each step at least halves the residual).
    pub fn converged_quadratically(&self) -> bool {
        self.residuals
            .windows(2)
            .filter(|w| w[0] < T::lit(1e-2) && w[0] > T::lit(1e-13))
            .all(|w| w[1] <= w[0] / T::lit(2.0))
    }
}

/// Newton refinement of a fixed point of `gⁿ` by single shooting.
pub fn refine_newton<T: Real>(model: &MapModel<T>, x0: &StatePoint<T>, n: usize, tol: T) -> Result<Refined<T>> {
    if n == 0 {
        return Err(Error::Precondition("period must be at least 1".into()));
    }
    let mut x = *x0;
    let mut residuals = Vec::new();
    for _ in 0..NEWTON_CAP {
        let mut img = x;
        for _ in 0..n {
            img = model.eval(&img);
        }
        let r = x.displacement_to(&img);
        let res = r[0].hypot(r[1]);
        residuals.push(res);
        if res < tol {
            return Ok(Refined { point: x, residuals });
        }
        let j = model.jacobian_power(&x, n)?.sub_identity();
        let inv = j.inverse().ok_or(Error::Singular("Newton matrix Dgⁿ − I"))?;
        let step = inv.apply(&r);
        x = x.translate(&[-step[0], -step[1]]);
    }
    Err(Error::NewtonDiverged { iterations: NEWTON_CAP, residual: residuals.last().map_or(f64::NAN, |r| r.as_f64()) })
}

/// Multiplier products along a periodic orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Multipliers<T> {
    /// `∏ⱼ ‖[Dg(gʲp)]⁻¹‖`.
    pub prod_inv_norm: T,
    /// `∏ⱼ ‖Dg|_{E^s(gʲp)}‖`, absent when the stable bundle is trivial.
    pub prod_stable_norm: Option<T>,
    /// `∏ⱼ ‖[Dg|_{E^u(gʲp)}]⁻¹‖⁻¹`, absent when the unstable bundle is trivial.
    pub prod_unstable_conorm: Option<T>,
}

/// `∏ⱼ ‖[Dg(gʲp)]⁻¹‖`; defined for every orbit.
pub fn prod_inv_norm<T: Real>(orbit: &PeriodicOrbit<T>) -> T {
    orbit.cocycle.iter().fold(T::one(), |acc, j| acc * j.inverse_norm())
}

/// Stable and unstable directions transported along the orbit from the
/// eigen-splitting of the period map. In dimension 1 the whole line is
/// unstable when the multiplier has modulus at least 1.
pub fn transported_splitting<T: Real>(orbit: &PeriodicOrbit<T>) -> Result<(Option<Vec<[T; 2]>>, Option<Vec<[T; 2]>>)> {
    match orbit.spectrum {
        Spectrum::Scalar(m) => {
            let line = vec![[T::one(), T::zero()]; orbit.period];
            if m.abs() >= T::one() {
                Ok((None, Some(line)))
            } else {
                Ok((Some(line), None))
            }
        }
        Spectrum::Real { vectors, .. } => {
            let transport = |v0: [T; 2]| -> Result<Vec<[T; 2]>> {
                let mut out = Vec::with_capacity(orbit.period);
                let mut v = v0;
                for j in 0..orbit.period {
                    out.push(v);
                    if j + 1 < orbit.period {
                        v = normalize(&orbit.cocycle[j].apply(&v))
                            .ok_or_else(|| Error::SplittingUndefined("direction collapsed under the cocycle".into()))?;
                    }
                }
                Ok(out)
            };
            Ok((Some(transport(vectors[0])?), Some(transport(vectors[1])?)))
        }
        Spectrum::Repeated(l) => Err(Error::SplittingUndefined(format!(
            "repeated eigenvalue {l} of the period map"
        ))),
        Spectrum::Complex { re, im } => Err(Error::SplittingUndefined(format!(
            "complex period-map spectrum {re} ± {im}i"
        ))),
    }
}

pub fn orbit_multipliers<T: Real>(orbit: &PeriodicOrbit<T>) -> Result<Multipliers<T>> {
    let (stable, unstable) = transported_splitting(orbit)?;
    let product = |dirs: &Vec<[T; 2]>| -> T {
        dirs.iter()
            .zip(&orbit.cocycle)
            .fold(T::one(), |acc, (v, j)| acc * crate::linalg::norm(&j.apply(v)))
    };
    Ok(Multipliers {
        prod_inv_norm: prod_inv_norm(orbit),
        prod_stable_norm: stable.as_ref().map(product),
        prod_unstable_conorm: unstable.as_ref().map(product),
    })
}

/// Writes one CSV row per orbit point:
/// `orbit,period,j,x,y,prod_inv_norm,prod_stable_norm,prod_unstable_conorm`.
pub fn write_orbits_csv<T: Real, W: Write>(orbits: &[PeriodicOrbit<T>], mut out: W) -> Result<()> {
    writeln!(out, "orbit,period,j,x,y,prod_inv_norm,prod_stable_norm,prod_unstable_conorm")?;
    let opt = |v: Option<T>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for (i, o) in orbits.iter().enumerate() {
        let (s, u) = match orbit_multipliers(o) {
            Ok(m) => (opt(m.prod_stable_norm), opt(m.prod_unstable_conorm)),
            Err(_) => (String::new(), String::new()),
        };
        let pin = prod_inv_norm(o);
        for (j, p) in o.points.iter().enumerate() {
            writeln!(out, "{i},{},{j},{:e},{:e},{pin:e},{s},{u}", o.period, p.x(), p.y())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lyndon_counts() {
        // necklace counts of primitive binary words: 2,1,2,3,6,9,18,30
        let expected = [2, 1, 2, 3, 6, 9, 18, 30];
        for (n, e) in (1..=8).zip(expected) {
            assert_eq!(lyndon_words(n, 2).len(), e, "n = {n}");
        }
        assert_eq!(lyndon_words(3, 2), vec![vec![0, 0, 1], vec![0, 1, 1]]);
    }

    #[test]
    fn doubling_small_periods() {
        let set = find_periodic_points(&MapModel::<f64>::doubling(), 2).unwrap();
        assert_eq!(set.orbits.len(), 2);
        assert_eq!(set.orbits[0].period, 1);
        assert_eq!(set.orbits[0].points[0].x(), 0.0);
        let two = &set.orbits[1];
        assert_eq!(two.period, 2);
        assert!((two.points[0].x() - 1.0 / 3.0).abs() < 1e-15);
        assert!((two.points[1].x() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn doubling_fixed_point_counts() {
        let set = find_periodic_points(&MapModel::<f64>::doubling(), 12).unwrap();
        assert!(set.is_complete());
        for n in 1..=12 {
            assert_eq!(set.fixed_point_count(n), (1usize << n) - 1, "n = {n}");
        }
    }

    #[test]
    fn refine_examples() {
        let g = MapModel::<f64>::doubling();
        let r = refine_newton(&g, &StatePoint::circle(0.33), 2, 1e-12).unwrap();
        assert!((r.point.x() - 1.0 / 3.0).abs() < 1e-12);
        let fixed = StatePoint::circle(0.0);
        let r = refine_newton(&g, &fixed, 1, 1e-12).unwrap();
        assert_eq!(r.point, fixed);
        assert_eq!(r.residuals.len(), 1);
    }

    #[test]
    fn refine_cat_to_lattice_point() {
        let cat = MapModel::<f64>::cat_map();
        let r = refine_newton(&cat, &StatePoint::torus(0.21, 0.39), 1, 1e-12).unwrap();
        assert!(r.point.dist(&StatePoint::torus(0.0, 0.0)) < 1e-12);
        // period 2: lattice solution with denominator 5
        let r = refine_newton(&cat, &StatePoint::torus(0.21, 0.39), 2, 1e-12).unwrap();
        let (a, b) = (r.point.x() * 5.0, r.point.y() * 5.0);
        assert!((a - a.round()).abs() < 1e-9 && (b - b.round()).abs() < 1e-9);
    }

    #[test]
    fn multipliers_of_doubling_period_two() {
        let set = find_periodic_points(&MapModel::<f64>::doubling(), 2).unwrap();
        assert_eq!(prod_inv_norm(&set.orbits[1]), 0.25);
    }

    #[test]
    fn multipliers_of_cat_fixed_point() {
        let set = find_periodic_points(&MapModel::<f64>::cat_map(), 1).unwrap();
        let m = orbit_multipliers(&set.orbits[0]).unwrap();
        let golden = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((m.prod_stable_norm.unwrap() - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((m.prod_unstable_conorm.unwrap() - golden).abs() < 1e-12);
    }

    #[test]
    fn identity_cocycle_products_are_one() {
        let o = PeriodicOrbit::from_cocycle(
            "identity".into(),
            vec![StatePoint::<f64>::circle(0.0)],
            vec![Jacobian::identity(1)],
        );
        let m = orbit_multipliers(&o).unwrap();
        assert_eq!(m.prod_inv_norm, 1.0);
        assert_eq!(m.prod_unstable_conorm, Some(1.0));
    }

    #[test]
    fn elliptic_period_map_is_flagged() {
        let o = PeriodicOrbit::from_cocycle(
            "rotation".into(),
            vec![StatePoint::<f64>::torus(0.0, 0.0)],
            vec![Jacobian::matrix(0.0, -1.0, 1.0, 0.0)],
        );
        assert!(matches!(orbit_multipliers(&o), Err(Error::SplittingUndefined(_))));
    }

    #[test]
    fn csv_export_has_one_row_per_point() {
        let set = find_periodic_points(&MapModel::<f64>::doubling(), 3).unwrap();
        let mut buf = Vec::new();
        write_orbits_csv(&set.orbits, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // 1 + 2 + 6 points in orbits of period 1, 2, 3
        assert_eq!(text.lines().count(), 1 + 9);
    }

    #[test]
    fn perturbed_families_keep_counts() {
        for s in [0.5, 1.5, 2.0] {
            let set = find_periodic_points(&MapModel::<f64>::perturbed_doubling(s).unwrap(), 8).unwrap();
            assert!(set.is_complete(), "s = {s}: {:?}", set.gaps);
            for n in 1..=8 {
                assert_eq!(set.fixed_point_count(n), (1usize << n) - 1);
            }
        }
        let set = find_periodic_points(&MapModel::<f64>::perturbed_cat(0.3).unwrap(), 5).unwrap();
        assert!(set.is_complete(), "{:?}", set.gaps);
        for (n, e) in [1, 5, 16, 45, 121].into_iter().enumerate() {
            assert_eq!(set.fixed_point_count(n + 1), e);
        }
    }

    #[test]
    fn zero_parameter_matches_linear_model_bitwise() {
        let a = find_periodic_points(&MapModel::<f64>::doubling(), 6).unwrap();
        let b = find_periodic_points(&MapModel::<f64>::perturbed_doubling(0.0).unwrap(), 6).unwrap();
        assert_eq!(a.orbits.len(), b.orbits.len());
        for (x, y) in a.orbits.iter().zip(&b.orbits) {
            assert_eq!(x.points, y.points);
        }
        let a = find_periodic_points(&MapModel::<f64>::cat_map(), 4).unwrap();
        let b = find_periodic_points(&MapModel::<f64>::perturbed_cat(0.0).unwrap(), 4).unwrap();
        for (x, y) in a.orbits.iter().zip(&b.orbits) {
            assert_eq!(x.points, y.points);
            assert_eq!(x.period_map, y.period_map);
        }
    }
}
