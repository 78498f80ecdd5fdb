//! Scalar log-norm sequences of derivative cocycles, hyperbolic times and
//! the Pliss density bound.

mod adapted;
mod certificate;
mod lyapunov;

pub use adapted::{adapted_metric, AdaptedMetric, DEFAULT_HORIZON};
pub use certificate::{
    nue_certificate, nuh_certificate, OrbitMargin, NUECertificate, NUHCertificate, NuhOrbit,
};
pub use lyapunov::lyapunov_spectrum;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{dot, Vector};
use crate::maps::{MapModel, OrbitSegment};
use crate::scalar::Real;

/// Which log-norm a [`CocycleSequence`] records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SequenceKind {
    /// `log ‖[Dg(x_j)]⁻¹‖`
    InverseNorm,
    /// `log ‖Dg(x_j)|_{E^s}‖`
    StableNorm,
    /// `log ‖[Dg(x_j)|_{E^u}]⁻¹‖`
    UnstableInverseNorm,
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SequenceKind::InverseNorm => "inverse_norm",
            SequenceKind::StableNorm => "stable_norm",
            SequenceKind::UnstableInverseNorm => "unstable_inverse_norm",
        })
    }
}

impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inverse_norm" => Ok(SequenceKind::InverseNorm),
            "stable_norm" => Ok(SequenceKind::StableNorm),
            "unstable_inverse_norm" => Ok(SequenceKind::UnstableInverseNorm),
            other => Err(Error::Precondition(format!("unknown sequence kind `{other}`"))),
        }
    }
}

/// A finite sequence `a_0, …, a_{n−1}` of log-norms along an orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct CocycleSequence<T> {
    pub values: Vec<T>,
    pub kind: SequenceKind,
    pub source: String,
}

impl<T: Real> CocycleSequence<T> {
    /// Rejects empty sequences and non-finite entries.
    pub fn new(values: Vec<T>, kind: SequenceKind, source: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("cocycle sequence must be non-empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("non-finite entry at index {i}")));
        }
        Ok(CocycleSequence { values, kind, source: source.into() })
    }

    /// Builds a sequence from the norms themselves rather than their logs.
    pub fn from_norms(norms: &[T], kind: SequenceKind, source: impl Into<String>) -> Result<Self> {
        Self::new(norms.iter().map(|v| v.ln()).collect(), kind, source)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::count(self.len())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "kind,source")?;
        writeln!(out, "{},{}", self.kind, self.source.replace([',', '\n'], " "))?;
        writeln!(out, "value")?;
        for v in &self.values {
            writeln!(out, "{v:e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let mut next = |expect: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?)),
                None => Err(Error::Csv { line: 0, message: format!("missing {expect}") }),
            }
        };
        let (n, header) = next("header")?;
        if header.trim() != "kind,source" {
            return Err(Error::Csv { line: n, message: "expected `kind,source` header".into() });
        }
        let (n, meta) = next("kind and source")?;
        let (kind, source) = meta
            .split_once(',')
            .ok_or_else(|| Error::Csv { line: n, message: "expected `<kind>,<source>`".into() })?;
        let kind: SequenceKind = kind.parse().map_err(|e: Error| Error::Csv { line: n, message: e.to_string() })?;
        let (n, col) = next("value header")?;
        if col.trim() != "value" {
            return Err(Error::Csv { line: n, message: "expected `value` header".into() });
        }
        let mut values = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|e| Error::Csv { line: i + 1, message: format!("{e}") })?;
            values.push(T::lit(v));
        }
        Self::new(values, kind, source.trim()).map_err(|e| Error::Csv { line: 0, message: e.to_string() })
    }
}

/// Log-norm sequence along the steps `x_0 → x_1 → ⋯ → x_n` of a segment.
///
/// Restricted kinds need one direction per segment point. The restricted
/// norm at step `j` is the length of the orthogonal projection of
/// `Dg(x_j) e_j` onto the line of `e_{j+1}` (or its full length at the
/// last point when the directions are not given there).
pub fn log_conorm_sequence<T: Real>(
    model: &MapModel<T>,
    segment: &OrbitSegment<T>,
    kind: SequenceKind,
    directions: Option<&[Vector<T>]>,
) -> Result<CocycleSequence<T>> {
    let n = segment.len();
    if n == 0 {
        return Err(Error::Precondition("segment needs at least one step".into()));
    }
    let source = format!("{}:segment", segment.model_id);
    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        let jac = model.jacobian(&segment.points[j])?;
        let v = match kind {
            SequenceKind::InverseNorm => {
                let c = jac.conorm();
                if c == T::zero() {
                    return Err(Error::ZeroDerivative { x: segment.points[j].x().as_f64() });
                }
                -c.ln()
            }
            SequenceKind::StableNorm | SequenceKind::UnstableInverseNorm => {
                let dirs = directions.ok_or_else(|| {
                    Error::Precondition("restricted norms need a splitting along the segment".into())
                })?;
                if dirs.len() < n {
                    return Err(Error::LengthMismatch(dirs.len(), n));
                }
                let img = jac.apply(&dirs[j]);
                let len = match dirs.get(j + 1) {
                    Some(next) => dot(&img, next).abs() / crate::linalg::norm(next),
                    None => crate::linalg::norm(&img),
                } / crate::linalg::norm(&dirs[j]);
                if len == T::zero() {
                    return Err(Error::ZeroDerivative { x: segment.points[j].x().as_f64() });
                }
                if kind == SequenceKind::StableNorm {
                    len.ln()
                } else {
                    -len.ln()
                }
            }
        };
        values.push(v);
    }
    CocycleSequence::new(values, kind, source)
}

fn check_varsigma<T: Real>(varsigma: T) -> Result<()> {
    if !(varsigma > T::zero() && varsigma < T::one()) {
        return Err(Error::Precondition(format!("varsigma must lie in (0, 1), got {varsigma}")));
    }
    Ok(())
}

/// Every `k ∈ 1..=n` such that all backward partial sums satisfy
/// `∑_{j=1}^{i} a_{k−j} ≤ i·log ς` for `i = 1..=k`.
///
/// With `b_j = a_j − log ς` and prefix sums `P_k = ∑_{j<k} b_j` the
/// condition reads `P_k ≤ min_{m<k} P_m`, so one pass suffices.
pub fn hyperbolic_times<T: Real>(seq: &CocycleSequence<T>, varsigma: T) -> Result<Vec<usize>> {
    check_varsigma(varsigma)?;
    let log_s = varsigma.ln();
    let mut out = Vec::new();
    let mut prefix = T::zero();
    let mut min_prefix = T::zero();
    for (k, a) in seq.values.iter().enumerate() {
        prefix = prefix + (*a - log_s);
        if prefix <= min_prefix {
            out.push(k + 1);
        }
        min_prefix = min_prefix.min(prefix);
    }
    Ok(out)
}

/// Checks whether `k` is a ς-hyperbolic time by direct backward summation.
/// Returns the first failing `i` on failure.
pub fn check_hyperbolic_time<T: Real>(values: &[T], k: usize, varsigma: T) -> std::result::Result<(), usize> {
    let log_s = varsigma.ln();
    let mut sum = T::zero();
    for i in 1..=k {
        sum = sum + values[k - i];
        if sum > T::count(i) * log_s {
            return Err(i);
        }
    }
    Ok(())
}

/// Guaranteed and observed numbers of hyperbolic times.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlissDensity {
    pub guaranteed_count: usize,
    pub actual_count: usize,
}

/// Pliss lower bound `⌈n (log ς′ − log ς)/(log ς′ − a_min)⌉` on the number
/// of ς′-hyperbolic times, together with the actual count.
pub fn pliss_density<T: Real>(seq: &CocycleSequence<T>, varsigma: T, varsigma_prime: T) -> Result<PlissDensity> {
    check_varsigma(varsigma)?;
    check_varsigma(varsigma_prime)?;
    if !(varsigma < varsigma_prime) {
        return Err(Error::Precondition("need varsigma < varsigma_prime".into()));
    }
    let (log_s, log_sp) = (varsigma.ln(), varsigma_prime.ln());
    let mean = seq.mean();
    // relative slack for sequences built to have mean exactly log ς
    if mean > log_s + T::lit(1e-12) * log_s.abs().max(T::one()) {
        return Err(Error::Precondition(format!(
            "mean {mean} exceeds log varsigma {log_s}: no density bound applies"
        )));
    }
    let a_min = seq.values.iter().copied().fold(T::infinity(), T::min);
    let guaranteed = if a_min >= log_sp {
        // every entry already beats the target level
        seq.len()
    } else {
        let frac = (log_sp - log_s) / (log_sp - a_min);
        let raw = (T::count(seq.len()) * frac - T::lit(1e-9)).ceil();
        raw.to_usize().unwrap_or(0).min(seq.len())
    };
    let actual = hyperbolic_times(seq, varsigma_prime)?.len();
    Ok(PlissDensity { guaranteed_count: guaranteed, actual_count: actual })
}

/// Outcome of [`verify_shadowed_hyperbolic_time`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShadowedTime {
    Pass,
    /// The backward product over the first `prefix` steps is too large.
    Fail { prefix: usize },
}

/// Checks that a ς′-hyperbolic time `n′` of the periodic segment is a
/// √ς′-hyperbolic time of the shadowing segment.
pub fn verify_shadowed_hyperbolic_time<T: Real>(
    model: &MapModel<T>,
    p_orbit: &OrbitSegment<T>,
    x_orbit: &OrbitSegment<T>,
    n_prime: usize,
    varsigma_prime: T,
    delta_prime: T,
) -> Result<ShadowedTime> {
    if p_orbit.points.len() != x_orbit.points.len() {
        return Err(Error::LengthMismatch(p_orbit.points.len(), x_orbit.points.len()));
    }
    check_varsigma(varsigma_prime)?;
    if n_prime == 0 || n_prime > p_orbit.len() {
        return Err(Error::Precondition(format!("n' = {n_prime} outside 1..={}", p_orbit.len())));
    }
    let far = p_orbit
        .points
        .iter()
        .zip(&x_orbit.points)
        .map(|(a, b)| a.dist(b))
        .fold(T::zero(), T::max);
    if far > delta_prime {
        return Err(Error::Precondition(format!("segments are {far} apart, more than delta' = {delta_prime}")));
    }
    let p_seq = log_conorm_sequence(model, p_orbit, SequenceKind::InverseNorm, None)?;
    if let Err(i) = check_hyperbolic_time(&p_seq.values, n_prime, varsigma_prime) {
        return Err(Error::Precondition(format!(
            "n' = {n_prime} is not a hyperbolic time of the periodic segment (fails at i = {i})"
        )));
    }
    let x_seq = log_conorm_sequence(model, x_orbit, SequenceKind::InverseNorm, None)?;
    Ok(match check_hyperbolic_time(&x_seq.values, n_prime, varsigma_prime.sqrt()) {
        Ok(()) => ShadowedTime::Pass,
        Err(prefix) => ShadowedTime::Fail { prefix },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::StatePoint;

    fn seq(v: &[f64]) -> CocycleSequence<f64> {
        CocycleSequence::new(v.to_vec(), SequenceKind::InverseNorm, "test").unwrap()
    }

    #[test]
    fn doubling_sequence_is_constant() {
        let g = MapModel::<f64>::doubling();
        let s = log_conorm_sequence(&g, &g.iterate_orbit(&StatePoint::circle(0.1234), 20), SequenceKind::InverseNorm, None)
            .unwrap();
        assert!(s.values.iter().all(|&a| a == -(2f64.ln())));
    }

    #[test]
    fn cat_stable_norm_at_fixed_point() {
        let cat = MapModel::<f64>::cat_map();
        let seg = cat.iterate_orbit(&StatePoint::torus(0.0, 0.0), 1);
        let slope = (5f64.sqrt() + 1.0) / 2.0;
        let es = crate::linalg::normalize(&[1.0, -slope]).unwrap();
        let s = log_conorm_sequence(&cat, &seg, SequenceKind::StableNorm, Some(&[es, es])).unwrap();
        assert!((s.values[0] - ((3.0 - 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn critical_point_gives_positive_entry() {
        let g = MapModel::<f64>::perturbed_doubling(1.5).unwrap();
        let s = log_conorm_sequence(&g, &g.iterate_orbit(&StatePoint::circle(0.5), 3), SequenceKind::InverseNorm, None)
            .unwrap();
        assert!(s.values[0] > 0.0);
    }

    #[test]
    fn hyperbolic_times_examples() {
        let half = seq(&[0.5f64.ln(); 6]);
        assert_eq!(hyperbolic_times(&half, 0.9).unwrap(), vec![1, 2, 3, 4, 5, 6]);
        let mixed = CocycleSequence::from_norms(&[2.0, 0.5, 0.5, 0.5], SequenceKind::InverseNorm, "t").unwrap();
        let times = hyperbolic_times(&mixed, 0.8).unwrap();
        assert!(times.contains(&4) && !times.contains(&1));
        assert_eq!(times, vec![3, 4]);
        assert!(hyperbolic_times(&seq(&[0.0; 5]), 0.9).unwrap().is_empty());
    }

    #[test]
    fn pliss_examples() {
        let s = 0.7f64;
        let constant = seq(&[s.ln(); 50]);
        let d = pliss_density(&constant, s, s.sqrt()).unwrap();
        assert_eq!(d.actual_count, 50);
        assert!(d.guaranteed_count <= 50);
        let one = seq(&[0.6f64.ln()]);
        let d = pliss_density(&one, 0.7, 0.8).unwrap();
        assert_eq!((d.guaranteed_count, d.actual_count), (1, 1));
        assert!(pliss_density(&seq(&[0.0, 0.0]), 0.7, 0.8).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = CocycleSequence::new(vec![-0.5, 0.25, 1e-300], SequenceKind::StableNorm, "orbit 3").unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = CocycleSequence::<f64>::read_csv(&buf[..]).unwrap();
        assert_eq!(back, s);
        let bad = "kind,source\ninverse_norm,x\nvalue\n0.1\nabc\n";
        assert!(matches!(CocycleSequence::<f64>::read_csv(bad.as_bytes()), Err(Error::Csv { line: 5, .. })));
    }

    #[test]
    fn shadowed_time_examples() {
        let g = MapModel::<f64>::doubling();
        let p = g.iterate_orbit(&StatePoint::circle(1.0 / 3.0), 6);
        assert_eq!(verify_shadowed_hyperbolic_time(&g, &p, &p, 6, 0.8, 1e-3).unwrap(), ShadowedTime::Pass);
        let x = OrbitSegment {
            model_id: p.model_id.clone(),
            points: p.points.iter().map(|q| q.translate(&[1e-6, 0.0])).collect(),
        };
        assert_eq!(verify_shadowed_hyperbolic_time(&g, &p, &x, 6, 0.8, 1e-3).unwrap(), ShadowedTime::Pass);
        let far = OrbitSegment {
            model_id: p.model_id.clone(),
            points: p.points.iter().map(|q| q.translate(&[0.1, 0.0])).collect(),
        };
        assert!(verify_shadowed_hyperbolic_time(&g, &p, &far, 6, 0.8, 1e-3).is_err());
    }
}
