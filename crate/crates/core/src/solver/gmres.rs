//! Restarted GMRES with right preconditioning, on caller-supplied closures.
//!
//! The operator and preconditioner are plain `FnMut(&[T], &mut [T])`, so the
//! same driver serves matrix-free Newton–Krylov (finite-difference
//! directional derivatives) and explicit spectral solves. Right
//! preconditioning keeps the reported residual the true residual of the
//! original system. All reductions are sequential, so runs are bit-for-bit
//! deterministic.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions<T> {
    /// Krylov subspace dimension between restarts.
    pub restart: usize,
    /// Total matvec budget.
    pub max_iters: usize,
    /// Relative residual target ‖b − Ax‖/‖b‖.
    pub tol: T,
}

impl<T: Real> Default for GmresOptions<T> {
    fn default() -> Self {
        GmresOptions {
            restart: 40,
            max_iters: 400,
            tol: T::of(1e-10),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOutcome<T> {
    pub iterations: usize,
    /// Final relative residual.
    pub residual: T,
    pub converged: bool,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        acc = acc + x * y;
    }
    acc
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Solve A·x = b with right preconditioning: A·M(y) = b, x = M(y). `x` holds
/// the initial guess on entry and the solution on exit.
pub fn gmres<T, A, M>(
    mut apply: A,
    mut precond: M,
    b: &[T],
    x: &mut [T],
    opts: &GmresOptions<T>,
) -> GmresOutcome<T>
where
    T: Real,
    A: FnMut(&[T], &mut [T]),
    M: FnMut(&[T], &mut [T]),
{
    let n = b.len();
    let bnorm = norm(b).max(T::min_positive_value());
    let mut scratch = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];
    let mut iterations = 0usize;

    loop {
        // r = b − A x
        apply(x, &mut scratch);
        let mut r = vec![T::zero(); n];
        for i in 0..n {
            r[i] = b[i] - scratch[i];
        }
        let beta = norm(&r);
        if beta / bnorm <= opts.tol {
            return GmresOutcome {
                iterations,
                residual: beta / bnorm,
                converged: true,
            };
        }
        if iterations >= opts.max_iters {
            return GmresOutcome {
                iterations,
                residual: beta / bnorm,
                converged: false,
            };
        }

        let m = opts.restart.min(opts.max_iters - iterations).max(1);
        let mut basis: Vec<Vec<T>> = Vec::with_capacity(m + 1);
        for v in r.iter_mut() {
            *v = *v / beta;
        }
        basis.push(r);
        let mut h = vec![T::zero(); (m + 1) * m]; // column-major: h[i + j*(m+1)]
        let mut cs = vec![T::zero(); m];
        let mut sn = vec![T::zero(); m];
        let mut g = vec![T::zero(); m + 1];
        g[0] = beta;
        let mut cols = 0usize;

        for j in 0..m {
            precond(&basis[j], &mut tmp);
            apply(&tmp, &mut scratch);
            // modified Gram–Schmidt
            let mut w = scratch.clone();
            for i in 0..=j {
                let hij = dot(&basis[i], &w);
                h[i + j * (m + 1)] = hij;
                for (wv, bv) in w.iter_mut().zip(basis[i].iter()) {
                    *wv = *wv - hij * *bv;
                }
            }
            let hlast = norm(&w);
            h[(j + 1) + j * (m + 1)] = hlast;
            iterations += 1;

            // apply accumulated Givens rotations to the new column
            for i in 0..j {
                let a0 = h[i + j * (m + 1)];
                let a1 = h[(i + 1) + j * (m + 1)];
                h[i + j * (m + 1)] = cs[i] * a0 + sn[i] * a1;
                h[(i + 1) + j * (m + 1)] = -sn[i] * a0 + cs[i] * a1;
            }
            let a0 = h[j + j * (m + 1)];
            let a1 = h[(j + 1) + j * (m + 1)];
            let rho = (a0 * a0 + a1 * a1).sqrt().max(T::min_positive_value());
            cs[j] = a0 / rho;
            sn[j] = a1 / rho;
            h[j + j * (m + 1)] = rho;
            h[(j + 1) + j * (m + 1)] = T::zero();
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            cols = j + 1;

            let happy = hlast <= T::of(1e-30) * bnorm;
            let done = g[j + 1].abs() / bnorm <= opts.tol;
            if !happy {
                for (wv, _) in w.iter_mut().zip(0..n) {
                    *wv = *wv / hlast;
                }
                basis.push(w);
            }
            if done || happy || iterations >= opts.max_iters {
                break;
            }
        }

        // back-substitute y and update x += M(V y)
        let mut y = vec![T::zero(); cols];
        for i in (0..cols).rev() {
            let mut acc = g[i];
            for j in i + 1..cols {
                acc = acc - h[i + j * (m + 1)] * y[j];
            }
            y[i] = acc / h[i + i * (m + 1)];
        }
        for v in tmp.iter_mut() {
            *v = T::zero();
        }
        for (j, &yj) in y.iter().enumerate() {
            for (tv, bv) in tmp.iter_mut().zip(basis[j].iter()) {
                *tv = *tv + yj * *bv;
            }
        }
        precond(&tmp, &mut scratch);
        for (xv, sv) in x.iter_mut().zip(scratch.iter()) {
            *xv = *xv + *sv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_apply(a: &[f64], n: usize) -> impl FnMut(&[f64], &mut [f64]) + '_ {
        move |x: &[f64], out: &mut [f64]| {
            for r in 0..n {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += a[r * n + c] * x[c];
                }
                out[r] = acc;
            }
        }
    }

    fn identity(x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }

    #[test]
    fn solves_small_spd_system() {
        let n = 5;
        // SPD: tridiagonal 2/-1
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 2.0;
            if i > 0 {
                a[i * n + i - 1] = -1.0;
                a[(i - 1) * n + i] = -1.0;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 1.0).collect();
        let mut x = vec![0.0; n];
        let out = gmres(
            dense_apply(&a, n),
            identity,
            &b,
            &mut x,
            &GmresOptions::default(),
        );
        assert!(out.converged, "residual {}", out.residual);
        let mut check = vec![0.0; n];
        dense_apply(&a, n)(&x, &mut check);
        for i in 0..n {
            assert!((check[i] - b[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn restart_still_converges() {
        let n = 30;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 3.0 + (i as f64 * 0.1);
            if i > 0 {
                a[i * n + i - 1] = -1.0;
                a[(i - 1) * n + i] = -0.5;
            }
        }
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let opts = GmresOptions {
            restart: 5,
            max_iters: 500,
            tol: 1e-11,
        };
        let out = gmres(dense_apply(&a, n), identity, &b, &mut x, &opts);
        assert!(out.converged);
        assert!(out.iterations > 5, "should have restarted");
    }

    #[test]
    fn preconditioner_accelerates_exactly() {
        // with M = A⁻¹ (here: solve diag) convergence is immediate
        let n = 8;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = (i + 1) as f64;
        }
        let b: Vec<f64> = (0..n).map(|i| (i + 1) as f64 * 2.0).collect();
        let mut x = vec![0.0; n];
        let out = gmres(
            dense_apply(&a, n),
            |r: &[f64], out: &mut [f64]| {
                for i in 0..n {
                    out[i] = r[i] / (i + 1) as f64;
                }
            },
            &b,
            &mut x,
            &GmresOptions::default(),
        );
        assert!(out.converged && out.iterations <= 2);
        for v in &x {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_failure_on_budget_exhaustion() {
        let n = 20;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
            a[i * n + (i + 1) % n] = -1.0; // non-normal circulant-ish
        }
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let opts = GmresOptions {
            restart: 2,
            max_iters: 4,
            tol: 1e-14,
        };
        let out = gmres(dense_apply(&a, n), identity, &b, &mut x, &opts);
        assert!(!out.converged);
        assert_eq!(out.iterations, 4);
    }
}
