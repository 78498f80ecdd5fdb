use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::maps::{wrap, wrap_signed, Family, MapModel, StatePoint};
use crate::periodic::PeriodicOrbit;
use crate::scalar::Real;

/// Defect certified at the table points by [`build_conjugacy`].
pub const DEFECT_BOUND: f64 = 1e-8;
/// Bits of `h` resolved by the default evaluation depth.
const TARGET_BITS: usize = 48;

/// Conjugacy `h` with `h ∘ g = f ∘ h` from a circle map `g` of degree `k`
/// to the linear map `f(x) = kx`.
///
/// The table stores `y_i = h⁻¹(i/k^m)` for `i = 0..=k^m`: the point whose
/// first `m` branch indices under `g` are the base-`k` digits of `i`.
/// Between table points `h` is evaluated through `h(x) = (i + h(g^m x))/k^m`,
/// recursing `depth` times before interpolating linearly.
#[derive(Clone, Debug)]
pub struct ConjugacyModel<T: Real> {
    pub g: MapModel<T>,
    pub f: MapModel<T>,
    pub degree: u32,
    /// Table resolution exponent: `k^m` intervals.
    pub m: usize,
    pub table: Vec<T>,
    pub defect_bound: T,
    pub depth: usize,
}

fn is_linear_doubling_like<T: Real>(f: &MapModel<T>) -> bool {
    match f.family() {
        Family::Doubling => true,
        Family::PerturbedDoubling { s } => *s == T::zero(),
        Family::Custom(_) => {
            let k = match f.degree() {
                Some(k) => T::count(k as usize),
                None => return false,
            };
            [T::zero(), T::lit(0.25), T::lit(0.5), T::lit(0.8)]
                .iter()
                .all(|&x| f.lift(x).is_some_and(|l| (l - k * x).abs() < T::lit(1e-14)))
        }
        _ => false,
    }
}

impl<T: Real> ConjugacyModel<T> {
    pub fn intervals(&self) -> usize {
        self.table.len() - 1
    }

    fn k(&self) -> usize {
        self.degree as usize
    }

    /// Index `i` with `y_i ≤ x < y_{i+1}`.
    fn locate(table: &[T], x: T) -> usize {
        let n = table.len() - 1;
        table.partition_point(|&y| y <= x).saturating_sub(1).min(n - 1)
    }

    /// `g^m(x)` lifted relative to the start of table interval `i`,
    /// clamped to `[0, 1]`.
    fn renormalize(&self, x: T, i: usize) -> T {
        let k = self.k() as i64;
        let mut n: i64 = 0;
        let mut frac = x;
        for _ in 0..self.m {
            let l = self.g.lift(frac).expect("circle model has a lift");
            let fl = l.floor();
            n = n * k + fl.to_i64().unwrap_or(0);
            frac = l - fl;
        }
        (T::lit((n - i as i64) as f64) + frac).max(T::zero()).min(T::one())
    }

    fn interpolate(&self, x: T) -> T {
        let i = Self::locate(&self.table, x);
        let (a, b) = (self.table[i], self.table[i + 1]);
        let t = if b > a { ((x - a) / (b - a)).max(T::zero()).min(T::one()) } else { T::zero() };
        (T::count(i) + t) / T::count(self.intervals())
    }

    /// `h(x)` for `x ∈ [0, 1)` at the given recursion depth (`1` is plain
    /// interpolation in the table).
    pub fn eval_depth(&self, x: T, depth: usize) -> T {
        self.eval_unit(wrap(x), depth)
    }

    /// `h` on the closed interval `[0, 1]`, with `h(1) = 1`.
    fn eval_unit(&self, x: T, depth: usize) -> T {
        if depth <= 1 {
            return self.interpolate(x);
        }
        let i = Self::locate(&self.table, x);
        let z = self.renormalize(x, i);
        (T::count(i) + self.eval_unit(z, depth - 1)) / T::count(self.intervals())
    }

    pub fn eval(&self, x: T) -> T {
        self.eval_depth(x, self.depth)
    }

    fn digits(&self, i: usize) -> Vec<usize> {
        let mut d = vec![0; self.m];
        let mut r = i;
        for j in (0..self.m).rev() {
            d[j] = r % self.k();
            r /= self.k();
        }
        d
    }

    /// `h⁻¹(u)` through `h⁻¹((i + r)/k^m) = B_{d₀} ∘ ⋯ ∘ B_{d_{m−1}}(h⁻¹(r))`.
    pub fn inverse_depth(&self, u: T, depth: usize) -> Result<T> {
        self.inverse_unit(wrap(u), depth)
    }

    fn inverse_unit(&self, u: T, depth: usize) -> Result<T> {
        let n = self.intervals();
        let scaled = u * T::count(n);
        let i = scaled.floor().to_usize().unwrap_or(0).min(n - 1);
        let r = (scaled - T::count(i)).max(T::zero()).min(T::one());
        if depth <= 1 {
            let (a, b) = (self.table[i], self.table[i + 1]);
            return Ok(a + r * (b - a));
        }
        let mut z = self.inverse_unit(r, depth - 1)?;
        for &d in self.digits(i).iter().rev() {
            z = self.g.preimage_lifted(d, z)?;
        }
        Ok(z)
    }

    pub fn inverse(&self, u: T) -> Result<T> {
        self.inverse_depth(u, self.depth)
    }

    pub fn is_strictly_monotone(&self) -> bool {
        self.table.windows(2).all(|w| w[0] < w[1])
    }

    /// Largest distance from `h(p)` to a periodic point of `f` of the same
    /// period, over the given orbits of `g`.
    pub fn naturality_error(&self, orbits: &[PeriodicOrbit<T>]) -> T {
        let k = T::count(self.k());
        orbits
            .iter()
            .flat_map(|o| o.points.iter().map(move |p| (o.period, p.x())))
            .map(|(t, x)| {
                // periodic points of x ↦ kx with period t are j/(k^t − 1)
                let denom = k.powi(t as i32) - T::one();
                let h = self.eval(x);
                let j = (h * denom).round();
                wrap_signed(h - j / denom).abs()
            })
            .fold(T::zero(), T::max)
    }

    /// Flat table: a header line with the identifying data, then one grid
    /// value per line.
    pub fn write_table<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# g={} f={} degree={} m={} depth={} defect_bound={:e}",
            self.g.id(),
            self.f.id(),
            self.degree,
            self.m,
            self.depth,
            self.defect_bound
        )?;
        for y in &self.table {
            writeln!(out, "{y:e}")?;
        }
        Ok(())
    }

    /// Reads a table written by [`write_table`](Self::write_table) for the
    /// given pair of maps.
    pub fn read_table<R: BufRead>(input: R, g: &MapModel<T>, f: &MapModel<T>) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Csv { line: 1, message: "empty table".into() })?;
        let field = |key: &str| -> Result<String> {
            header
                .trim_start_matches('#')
                .split_whitespace()
                .find_map(|kv| kv.strip_prefix(&format!("{key}=")).map(str::to_string))
                .ok_or_else(|| Error::Csv { line: 1, message: format!("missing `{key}`") })
        };
        if field("g")? != g.id() || field("f")? != f.id() {
            return Err(Error::Csv { line: 1, message: "table was built for a different pair of maps".into() });
        }
        let num = |key: &str| -> Result<f64> {
            field(key)?.parse().map_err(|e| Error::Csv { line: 1, message: format!("{key}: {e}") })
        };
        let degree = num("degree")? as u32;
        let m = num("m")? as usize;
        let depth = num("depth")? as usize;
        let defect_bound = T::lit(num("defect_bound")?);
        let mut table = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: f64 = line.trim().parse().map_err(|e| Error::Csv { line: i + 2, message: format!("{e}") })?;
            table.push(T::lit(v));
        }
        if table.len() != (degree as usize).pow(m as u32) + 1 {
            return Err(Error::Csv { line: 0, message: format!("expected {} grid values", (degree as usize).pow(m as u32) + 1) });
        }
        Ok(ConjugacyModel { g: g.clone(), f: f.clone(), degree, m, table, defect_bound, depth })
    }
}

/// Tabulates the conjugacy from `g` to the linear map `f` of the same
/// degree at `resolution = k^m` grid intervals and certifies the defect at
/// the grid points.
pub fn build_conjugacy<T: Real>(g: &MapModel<T>, f: &MapModel<T>, resolution: usize) -> Result<ConjugacyModel<T>> {
    let (Some(kg), Some(kf)) = (g.degree(), f.degree()) else {
        return Err(Error::Unsupported { model: g.id(), what: "conjugacy construction on the torus".into() });
    };
    if kg != kf {
        return Err(Error::DegreeMismatch(kg, kf));
    }
    if !is_linear_doubling_like(f) {
        return Err(Error::Unsupported { model: f.id(), what: "target of the conjugacy must be x ↦ kx".into() });
    }
    if g.lift(T::zero()) != Some(T::zero()) {
        return Err(Error::Unsupported { model: g.id(), what: "conjugacy needs a lift with L(0) = 0".into() });
    }
    let k = kg as usize;
    let mut m = 0;
    let mut size = 1usize;
    while size < resolution {
        size *= k;
        m += 1;
    }
    if size != resolution || m == 0 {
        return Err(Error::Precondition(format!("resolution {resolution} is not a positive power of {k}")));
    }
    // level by level: table_{l+1}[d·k^l + r] = B_d(table_l[r])
    let mut level: Vec<T> = vec![T::zero()];
    for _ in 0..m {
        let next: Vec<Vec<T>> = (0..k)
            .into_par_iter()
            .map(|d| level.iter().map(|&y| g.preimage_lifted(d, y)).collect::<Result<Vec<T>>>())
            .collect::<Result<Vec<_>>>()?;
        level = next.concat();
    }
    level.push(T::one());
    let depth = TARGET_BITS.div_ceil(m * (usize::BITS - (k - 1).leading_zeros()) as usize) + 1;
    let mut h = ConjugacyModel {
        g: g.clone(),
        f: f.clone(),
        degree: kg,
        m,
        table: level,
        defect_bound: T::lit(DEFECT_BOUND),
        depth,
    };
    if !h.is_strictly_monotone() {
        return Err(Error::Degenerate("conjugacy table is not strictly increasing".into()));
    }
    let pts: Vec<T> = h.table[..resolution].to_vec();
    let defect = defect_at(&h, &pts);
    if !(defect < h.defect_bound) {
        return Err(Error::ConjugacyDefect { defect: defect.as_f64(), bound: DEFECT_BOUND });
    }
    h.depth = depth;
    Ok(h)
}

fn defect_at<T: Real>(h: &ConjugacyModel<T>, xs: &[T]) -> T {
    xs.par_iter()
        .map(|&x| {
            let lhs = h.eval(h.g.eval(&StatePoint::circle(x)).x());
            let rhs = h.f.eval(&StatePoint::circle(h.eval(x))).x();
            wrap_signed(lhs - rhs).abs()
        })
        .reduce(|| T::zero(), T::max)
}

/// `sup_x d(h(g(x)), f(h(x)))` over a uniform grid of `grid` points.
pub fn conjugacy_defect<T: Real>(h: &ConjugacyModel<T>, g: &MapModel<T>, f: &MapModel<T>, grid: usize) -> T {
    let mut h = h.clone();
    h.g = g.clone();
    h.f = f.clone();
    let xs: Vec<T> = (0..grid).map(|i| T::count(i) / T::count(grid)).collect();
    defect_at(&h, &xs)
}
