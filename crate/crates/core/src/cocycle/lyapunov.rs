use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::maps::{MapModel, StatePoint};
use crate::scalar::Real;

/// Finite-horizon Lyapunov exponents along the orbit of `x`, by repeated
/// QR re-orthonormalization of the cocycle. Sorted in decreasing order.
pub fn lyapunov_spectrum<T: Real>(model: &MapModel<T>, x: &StatePoint<T>, n: usize) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let mut cur = *x;
    if model.dimension() == 1 {
        let mut sum = T::zero();
        for _ in 0..n {
            sum = sum + model.jacobian(&cur)?.get(0, 0).abs().ln();
            cur = model.eval(&cur);
        }
        return Ok(vec![sum / T::count(n)]);
    }
    // q is the first column of the orthonormal frame; the second is its
    // rotation by π/2, so only one vector needs to be tracked.
    let mut q = [T::one(), T::zero()];
    let (mut s1, mut s2) = (T::zero(), T::zero());
    for _ in 0..n {
        let j = model.jacobian(&cur)?;
        let img = j.apply(&q);
        let r11 = norm(&img);
        let det = j.det().abs();
        if r11 == T::zero() || det == T::zero() {
            return Err(Error::ZeroDerivative { x: cur.x().as_f64() });
        }
        s1 = s1 + r11.ln();
        // r22 = |det| / r11 because the frame is orthonormal
        s2 = s2 + det.ln() - r11.ln();
        q = [img[0] / r11, img[1] / r11];
        // guard against drift of the unit length
        let len = dot(&q, &q).sqrt();
        q = [q[0] / len, q[1] / len];
        cur = model.eval(&cur);
    }
    let nn = T::count(n);
    let mut out = vec![s1 / nn, s2 / nn];
    out.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(out)
}
