//! Exact enumeration of periodic points of linear toral maps.
//!
//! The fixed points of `v ↦ Aⁿ v mod 1` are the solutions of
//! `(Aⁿ − I) v ∈ ℤ²`. They form a finite group of order `|det(Aⁿ − I)|`
//! generated by the columns of `(Aⁿ − I)⁻¹`, so they are enumerated in
//! integer arithmetic with a common denominator.

use std::collections::{BTreeSet, HashSet, VecDeque};

use num_rational::Ratio;

use crate::error::{Error, Result};

pub type IntMatrix = [[i64; 2]; 2];

/// A rational point of the torus with exact coordinates in `[0, 1)`.
pub type RationalPoint = [Ratio<i64>; 2];

fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> Result<IntMatrix> {
    let mut out = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let v = (a[i][0] as i128) * (b[0][j] as i128) + (a[i][1] as i128) * (b[1][j] as i128);
            out[i][j] = i64::try_from(v).map_err(|_| Error::Precondition("matrix power overflows i64".into()))?;
        }
    }
    Ok(out)
}

pub fn mat_pow(a: &IntMatrix, n: usize) -> Result<IntMatrix> {
    let mut acc = [[1, 0], [0, 1]];
    for _ in 0..n {
        acc = mat_mul(a, &acc)?;
    }
    Ok(acc)
}

/// `|det(Aⁿ − I)|`, the number of fixed points of `Aⁿ` on the torus.
pub fn fixed_point_count(a: &IntMatrix, n: usize) -> Result<i64> {
    let p = mat_pow(a, n)?;
    let m = [[p[0][0] - 1, p[0][1]], [p[1][0], p[1][1] - 1]];
    Ok((m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs())
}

/// Fixed points of `Aⁿ` as integer pairs `(a, b)` meaning `(a/N, b/N)`.
pub fn fixed_points(a: &IntMatrix, n: usize) -> Result<(i64, Vec<(i64, i64)>)> {
    let p = mat_pow(a, n)?;
    let m = [[p[0][0] - 1, p[0][1]], [p[1][0], p[1][1] - 1]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0 {
        return Err(Error::Precondition(format!(
            "A^{n} - I is singular: fixed points of the linear map are not isolated"
        )));
    }
    let big_n = det.abs();
    let sign = det.signum();
    // columns of adj(M) scaled to denominator N
    let gens = [
        (((sign * m[1][1]).rem_euclid(big_n)), ((-sign * m[1][0]).rem_euclid(big_n))),
        (((-sign * m[0][1]).rem_euclid(big_n)), ((sign * m[0][0]).rem_euclid(big_n))),
    ];
    let mut seen: HashSet<(i64, i64)> = HashSet::with_capacity(big_n as usize);
    let mut queue = VecDeque::from([(0i64, 0i64)]);
    seen.insert((0, 0));
    while let Some((x, y)) = queue.pop_front() {
        for g in &gens {
            let next = ((x + g.0) % big_n, (y + g.1) % big_n);
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    if seen.len() as i64 != big_n {
        return Err(Error::Precondition(format!(
            "lattice enumeration found {} points, expected {big_n}",
            seen.len()
        )));
    }
    let mut pts: Vec<_> = seen.into_iter().collect();
    pts.sort_unstable();
    Ok((big_n, pts))
}

/// An exact periodic orbit of a linear toral map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactOrbit {
    pub period: usize,
    /// Orbit points starting from the lexicographically smallest.
    pub points: Vec<RationalPoint>,
}

fn apply(a: &IntMatrix, (x, y): (i64, i64), den: i64) -> (i64, i64) {
    let nx = (a[0][0] as i128 * x as i128 + a[0][1] as i128 * y as i128).rem_euclid(den as i128);
    let ny = (a[1][0] as i128 * x as i128 + a[1][1] as i128 * y as i128).rem_euclid(den as i128);
    (nx as i64, ny as i64)
}

/// All periodic orbits of least period `n`, each listed once.
pub fn orbits_of_period(a: &IntMatrix, n: usize) -> Result<Vec<ExactOrbit>> {
    let (den, pts) = fixed_points(a, n)?;
    let mut done: BTreeSet<(i64, i64)> = BTreeSet::new();
    let mut out = Vec::new();
    for &p in &pts {
        if done.contains(&p) {
            continue;
        }
        let mut orbit = vec![p];
        let mut cur = apply(a, p, den);
        while cur != p {
            orbit.push(cur);
            cur = apply(a, cur, den);
        }
        for q in &orbit {
            done.insert(*q);
        }
        if orbit.len() != n {
            continue;
        }
        let start = (0..orbit.len()).min_by_key(|&i| orbit[i]).unwrap_or(0);
        orbit.rotate_left(start);
        out.push(ExactOrbit {
            period: n,
            points: orbit.iter().map(|&(x, y)| [Ratio::new(x, den), Ratio::new(y, den)]).collect(),
        });
    }
    out.sort_by(|a, b| a.points[0].cmp(&b.points[0]));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAT: IntMatrix = [[2, 1], [1, 1]];

    #[test]
    fn cat_counts_match_determinant_formula() {
        // |det(Aⁿ − I)| = λ₊ⁿ + λ₋ⁿ − 2 (Lucas numbers minus two)
        let expected = [1, 5, 16, 45, 121, 320, 841, 2205];
        for (n, &e) in (1..=8).zip(expected.iter()) {
            let golden = (3.0 + 5f64.sqrt()) / 2.0;
            let lucas = golden.powi(n as i32) + golden.powi(-(n as i32));
            assert_eq!((lucas - 2.0).round() as i64, e);
            assert_eq!(fixed_point_count(&CAT, n).unwrap(), e);
            assert_eq!(fixed_points(&CAT, n).unwrap().1.len() as i64, e);
        }
    }

    #[test]
    fn period_two_orbits_of_cat() {
        // #Fix(A²) = 5 = 1 fixed point + 2 orbits of period 2
        let orbits = orbits_of_period(&CAT, 2).unwrap();
        assert_eq!(orbits.len(), 2);
        for o in &orbits {
            assert_eq!(o.points.len(), 2);
            assert_eq!(*o.points[0].iter().map(|r| r.denom()).max().unwrap(), 5);
        }
    }

    #[test]
    fn identity_is_rejected() {
        assert!(fixed_points(&[[1, 0], [0, 1]], 1).is_err());
    }
}
