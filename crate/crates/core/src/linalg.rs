//! Dense kernels for small complex Hermitian matrices (n ≤ 4 at field level).
//!
//! Everything here works on row-major `&[Complex<T>]` slices of length n²,
//! with scratch provided by the caller where it matters, because these
//! kernels run once per grid point inside hot loops. The eigensolver is a
//! cyclic complex Jacobi: for 2×2..4×4 Hermitian matrices it is exact to
//! rounding in a handful of sweeps and — unlike bidiagonalization codes —
//! trivially generic over the scalar.

use crate::scalar::Real;
use num_complex::Complex;

pub type C<T> = Complex<T>;

#[inline]
pub fn idx(n: usize, r: usize, c: usize) -> usize {
    r * n + c
}

/// out = a · b (n×n).
pub fn matmul<T: Real>(n: usize, a: &[C<T>], b: &[C<T>], out: &mut [C<T>]) {
    for r in 0..n {
        for c in 0..n {
            let mut acc = C::new(T::zero(), T::zero());
            for m in 0..n {
                acc = acc + a[idx(n, r, m)] * b[idx(n, m, c)];
            }
            out[idx(n, r, c)] = acc;
        }
    }
}

/// out = a^* (conjugate transpose).
pub fn adjoint<T: Real>(n: usize, a: &[C<T>], out: &mut [C<T>]) {
    for r in 0..n {
        for c in 0..n {
            out[idx(n, r, c)] = a[idx(n, c, r)].conj();
        }
    }
}

/// Determinant by LU with partial pivoting; clobbers `work`.
pub fn det<T: Real>(n: usize, a: &[C<T>], work: &mut [C<T>]) -> C<T> {
    work[..n * n].copy_from_slice(&a[..n * n]);
    let mut sign = T::one();
    let mut result = C::new(T::one(), T::zero());
    for col in 0..n {
        let mut pivot = col;
        let mut best = work[idx(n, col, col)].norm_sqr();
        for r in col + 1..n {
            let v = work[idx(n, r, col)].norm_sqr();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best == T::zero() {
            return C::new(T::zero(), T::zero());
        }
        if pivot != col {
            for c in 0..n {
                work.swap(idx(n, col, c), idx(n, pivot, c));
            }
            sign = -sign;
        }
        let d = work[idx(n, col, col)];
        result = result * d;
        for r in col + 1..n {
            let factor = work[idx(n, r, col)] / d;
            for c in col..n {
                let sub = factor * work[idx(n, col, c)];
                work[idx(n, r, c)] = work[idx(n, r, c)] - sub;
            }
        }
    }
    result * C::new(sign, T::zero())
}

/// Cholesky factor L (lower, positive diagonal) of a Hermitian
/// positive-definite matrix: a = L·L^*. Returns `None` when a pivot fails.
pub fn cholesky<T: Real>(n: usize, a: &[C<T>], l: &mut [C<T>]) -> Option<()> {
    for v in l.iter_mut().take(n * n) {
        *v = C::new(T::zero(), T::zero());
    }
    for r in 0..n {
        for c in 0..=r {
            let mut acc = a[idx(n, r, c)];
            for m in 0..c {
                acc = acc - l[idx(n, r, m)] * l[idx(n, c, m)].conj();
            }
            if r == c {
                let d = acc.re;
                if !(d > T::zero()) {
                    return None;
                }
                l[idx(n, r, c)] = C::new(d.sqrt(), T::zero());
            } else {
                l[idx(n, r, c)] = acc / l[idx(n, c, c)];
            }
        }
    }
    Some(())
}

/// Invert a lower-triangular matrix in place of `out`.
pub fn invert_lower<T: Real>(n: usize, l: &[C<T>], out: &mut [C<T>]) {
    for v in out.iter_mut().take(n * n) {
        *v = C::new(T::zero(), T::zero());
    }
    for c in 0..n {
        out[idx(n, c, c)] = C::new(T::one(), T::zero()) / l[idx(n, c, c)];
        for r in c + 1..n {
            let mut acc = C::new(T::zero(), T::zero());
            for m in c..r {
                acc = acc + l[idx(n, r, m)] * out[idx(n, m, c)];
            }
            out[idx(n, r, c)] = -acc / l[idx(n, r, r)];
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations: a = V·diag(λ)·V^* with λ ascending and V unitary.
///
/// `a` is clobbered. `vecs` may be `None` when only eigenvalues are needed.
pub fn herm_eigen<T: Real>(n: usize, a: &mut [C<T>], lambda: &mut [T], vecs: Option<&mut [C<T>]>) {
    let mut store;
    let v: &mut [C<T>];
    match vecs {
        Some(buf) => {
            v = buf;
            for r in 0..n {
                for c in 0..n {
                    v[idx(n, r, c)] = if r == c {
                        C::new(T::one(), T::zero())
                    } else {
                        C::new(T::zero(), T::zero())
                    };
                }
            }
        }
        None => {
            store = [C::new(T::zero(), T::zero()); 0];
            v = &mut store;
        }
    }
    let track = !v.is_empty();
    let mut scale = T::zero();
    for r in 0..n {
        for c in 0..n {
            let m = a[idx(n, r, c)].norm_sqr();
            if m > scale {
                scale = m;
            }
        }
    }
    let scale = scale.sqrt().max(T::min_positive_value());
    let tol = T::epsilon() * T::epsilon() * scale * scale;

    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + a[idx(n, p, q)].norm_sqr();
            }
        }
        if off <= tol * T::of(0.01) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[idx(n, p, q)];
                let r2 = apq.norm_sqr();
                if r2 <= tol * T::of(1e-6) {
                    continue;
                }
                let r = r2.sqrt();
                let phase = apq / C::new(r, T::zero());
                let app = a[idx(n, p, p)].re;
                let aqq = a[idx(n, q, q)].re;
                let tau = (aqq - app) / (r + r);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = (T::one() + t * t).sqrt().recip();
                let s = t * c;
                let sc = phase * C::new(s, T::zero()); // complex sine carrying the phase of a_pq

                // rows/columns k ∉ {p,q}
                for m in 0..n {
                    if m == p || m == q {
                        continue;
                    }
                    let amp = a[idx(n, m, p)];
                    let amq = a[idx(n, m, q)];
                    let new_p = amp * C::new(c, T::zero()) - amq * sc.conj();
                    let new_q = amp * sc + amq * C::new(c, T::zero());
                    a[idx(n, m, p)] = new_p;
                    a[idx(n, p, m)] = new_p.conj();
                    a[idx(n, m, q)] = new_q;
                    a[idx(n, q, m)] = new_q.conj();
                }
                a[idx(n, p, p)] = C::new(app - t * r, T::zero());
                a[idx(n, q, q)] = C::new(aqq + t * r, T::zero());
                a[idx(n, p, q)] = C::new(T::zero(), T::zero());
                a[idx(n, q, p)] = C::new(T::zero(), T::zero());

                if track {
                    for m in 0..n {
                        let vmp = v[idx(n, m, p)];
                        let vmq = v[idx(n, m, q)];
                        v[idx(n, m, p)] = vmp * C::new(c, T::zero()) - vmq * sc.conj();
                        v[idx(n, m, q)] = vmp * sc + vmq * C::new(c, T::zero());
                    }
                }
            }
        }
    }

    for i in 0..n {
        lambda[i] = a[idx(n, i, i)].re;
    }
    // ascending selection sort, dragging eigenvector columns along
    for i in 0..n {
        let mut best = i;
        for j in i + 1..n {
            if lambda[j] < lambda[best] {
                best = j;
            }
        }
        if best != i {
            lambda.swap(i, best);
            if track {
                for m in 0..n {
                    v.swap(idx(n, m, i), idx(n, m, best));
                }
            }
        }
    }
}

/// Mixed discriminant D(a_1, …, a_n), normalized so D(b, …, b) = det b.
///
/// Uses the polarization/inclusion-exclusion identity
/// n!·D = Σ_{S ⊆ [n]} (−1)^{n−|S|} det(Σ_{i∈S} a_i), i.e. 2ⁿ small
/// determinants — cheap for n ≤ 4 and free of permutation bookkeeping.
/// For Hermitian inputs the result is real; the real part is returned.
pub fn mixed_discriminant<T: Real>(n: usize, mats: &[&[C<T>]], scratch: &mut [C<T>]) -> T {
    debug_assert_eq!(mats.len(), n);
    let (accum, work) = scratch.split_at_mut(n * n);
    let mut total = T::zero();
    for mask in 1u32..(1 << n) {
        for v in accum.iter_mut() {
            *v = C::new(T::zero(), T::zero());
        }
        let mut popcount = 0usize;
        for (i, m) in mats.iter().enumerate() {
            if mask & (1 << i) != 0 {
                popcount += 1;
                for (dst, src) in accum.iter_mut().zip(m.iter()) {
                    *dst = *dst + *src;
                }
            }
        }
        let d = det(n, accum, work).re;
        if (n - popcount) % 2 == 0 {
            total = total + d;
        } else {
            total = total - d;
        }
    }
    let mut fact = T::one();
    for i in 2..=n {
        fact = fact * T::of(i as f64);
    }
    total / fact
}

/// Scratch length required by [`mixed_discriminant`].
pub fn mixed_discriminant_scratch_len(n: usize) -> usize {
    2 * n * n
}
