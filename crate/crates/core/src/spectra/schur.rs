//! Complex Schur form helpers: ordering and eigenvectors of a triangular factor.

use nalgebra::linalg::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::CMat;

/// `A = Q T Q^H` with `T` upper triangular. Entries below the diagonal that
/// the QR sweeps leave at rounding level are cleared.
pub(crate) fn complex_schur(a: CMat) -> Result<(CMat, CMat)> {
    let n = a.nrows();
    let scale = a
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let schur = Schur::try_new(a, 1e-15 * scale, 100 * n.max(10))
        .ok_or_else(|| Error::Numerical("complex Schur iteration did not converge".into()))?;
    let (q, mut t) = schur.unpack();
    for c in 0..n {
        for r in c + 1..n {
            if t[(r, c)].norm() > 1e-10 * scale {
                return Err(Error::Numerical("Schur factor is not triangular".into()));
            }
            t[(r, c)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok((q, t))
}

/// Plane rotation `[c s; -conj(s) c]` taking `(f, g)` to `(r, 0)`, `c` real.
fn rotation(f: Complex64, g: Complex64) -> (f64, Complex64) {
    let (af, ag) = (f.norm(), g.norm());
    if ag == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if af == 0.0 {
        return (0.0, g.conj() / ag);
    }
    let r = af.hypot(ag);
    (af / r, (f / af) * g.conj() / r)
}

/// `x <- c x + s y`, `y <- c y - conj(s) x`.
fn rotate(x: &mut Complex64, y: &mut Complex64, c: f64, s: Complex64) {
    let (a, b) = (*x, *y);
    *x = a * c + s * b;
    *y = b * c - s.conj() * a;
}

/// Exchanges diagonal entries `k` and `k + 1` of the triangular `t`,
/// updating `q` so that `q t q^H` is unchanged.
pub(crate) fn swap_adjacent(t: &mut CMat, q: &mut CMat, k: usize) {
    let n = t.nrows();
    let (t11, t22) = (t[(k, k)], t[(k + 1, k + 1)]);
    let (c, s) = rotation(t[(k, k + 1)], t22 - t11);
    for j in k + 2..n {
        let (mut x, mut y) = (t[(k, j)], t[(k + 1, j)]);
        rotate(&mut x, &mut y, c, s);
        t[(k, j)] = x;
        t[(k + 1, j)] = y;
    }
    for i in 0..k {
        let (mut x, mut y) = (t[(i, k)], t[(i, k + 1)]);
        rotate(&mut x, &mut y, c, s.conj());
        t[(i, k)] = x;
        t[(i, k + 1)] = y;
    }
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
    for i in 0..q.nrows() {
        let (mut x, mut y) = (q[(i, k)], q[(i, k + 1)]);
        rotate(&mut x, &mut y, c, s.conj());
        q[(i, k)] = x;
        q[(i, k + 1)] = y;
    }
}

/// Total order used for sorting spectra: descending modulus, then
/// ascending argument, so conjugate pairs land in a fixed order.
pub(crate) fn spectral_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then_with(|| a.arg().total_cmp(&b.arg()))
}

/// Reorders the Schur form so the diagonal follows [`spectral_order`].
pub(crate) fn sort_schur(t: &mut CMat, q: &mut CMat) {
    let n = t.nrows();
    // insertion sort by adjacent swaps
    for i in 1..n {
        let mut k = i;
        while k > 0 && spectral_order(&t[(k, k)], &t[(k - 1, k - 1)]).is_lt() {
            swap_adjacent(t, q, k - 1);
            k -= 1;
        }
    }
}

/// Unit eigenvector of the triangular `t` for its `i`-th diagonal entry,
/// by back substitution.
pub(crate) fn triangular_eigenvector(t: &CMat, i: usize) -> Vec<Complex64> {
    let lambda = t[(i, i)];
    let scale = t
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut y = vec![Complex64::new(0.0, 0.0); t.nrows()];
    y[i] = Complex64::new(1.0, 0.0);
    for r in (0..i).rev() {
        let s: Complex64 = (r + 1..=i).map(|c| t[(r, c)] * y[c]).sum();
        let mut d = t[(r, r)] - lambda;
        if d.norm() < 1e-14 * scale {
            d = Complex64::new(1e-14 * scale, 0.0);
        }
        y[r] = -s / d;
    }
    let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    y.iter_mut().for_each(|z| *z /= norm);
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::max_abs;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn random(n: usize, seed: u64) -> CMat {
        let mut rng = stream_rng(seed, 0);
        CMat::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn schur_is_triangular_and_reconstructs() {
        let a = random(30, 1);
        let (q, t) = complex_schur(a.clone()).unwrap();
        assert!(max_abs(&(&q * &t * q.adjoint() - &a)) < 1e-12);
    }

    #[test]
    fn sorting_keeps_similarity() {
        let a = random(25, 2);
        let (mut q, mut t) = complex_schur(a.clone()).unwrap();
        sort_schur(&mut t, &mut q);
        assert!(max_abs(&(&q * &t * q.adjoint() - &a)) < 1e-12);
        assert!(max_abs(&(q.adjoint() * &q - CMat::identity(25, 25))) < 1e-12);
        for k in 1..25 {
            assert!(t[(k - 1, k - 1)].norm() >= t[(k, k)].norm());
            for r in k + 1..25 {
                assert_eq!(t[(r, k)], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn eigenvectors_of_triangular_factor() {
        let (_, t) = complex_schur(random(12, 3)).unwrap();
        for i in 0..12 {
            let y = nalgebra::DVector::from_vec(triangular_eigenvector(&t, i));
            let r = &t * &y - &y * t[(i, i)];
            assert!(r.norm() < 1e-10, "{i} {}", r.norm());
        }
    }
}
