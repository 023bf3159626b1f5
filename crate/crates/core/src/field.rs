//! Fields on a flat Kähler torus and the pointwise eigenframe calculus.
//!
//! The background is a constant positive Hermitian matrix ω on the unit
//! torus. A potential φ deforms it to ω_φ = ω + i∂∂̄φ, whose relative
//! eigenvalues λ(x) (of ω^{-1}ω_φ at each point) drive every nonlinear
//! quantity in the k-Hessian system:
//!
//! ```text
//! ratio = σ_k(λ)/C(n,k),      f = log ratio,
//! G     = P · diag(σ_{k-1,i}(λ)/σ_k(λ)) · P^*,
//! ```
//!
//! where P = L^{-*}U collects the eigenvectors back to coordinates
//! (ω = LL^*, L^{-1}(ω+H)L^{-*} = UΛU^*). Integrals of wedge products are
//! grid means of mixed discriminants:
//!
//! ```text
//! ∫ u · A_1∧…∧A_n = n!·2ⁿ·mean[u·D(A_1,…,A_n)].
//! ```
//!
//! Derivatives are spectral (exact on trigonometric interpolants), so
//! closedness of i∂∂̄φ and the Stokes identities behind total-volume
//! conservation hold to rounding for alias-free data.

use crate::grid::{Grid, SpectralEngine, MAX_N};
use crate::linalg::{self, C};
use crate::scalar::Real;
use crate::symcone;
use num_complex::Complex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("field has {got} samples but the grid has {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("matrix data has {got} entries but the background dimension needs {want}")]
    MatrixSizeMismatch { got: usize, want: usize },
    #[error("resolution {res} on axis {axis} is below the field-layer minimum of 4")]
    ResolutionTooSmall { axis: usize, res: usize },
    #[error("background metric is not Hermitian positive definite")]
    MetricNotPositive,
    #[error("matrix is not Hermitian (entry ({r},{c}) mismatches its mirror)")]
    NotHermitian { r: usize, c: usize },
    #[error("non-finite value in field data at index {index}")]
    NonFinite { index: usize },
    #[error("degree {k} out of range for dimension {n}")]
    DegreeOutOfRange { k: usize, n: usize },
    #[error("potential leaves the degree-{k} cone at grid point {point} (σ_{degree} too small)")]
    ConeViolation { k: usize, point: usize, degree: usize },
    #[error("wedge factors have total degree {got}, expected {want}")]
    WedgeDegreeMismatch { got: usize, want: usize },
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
}

/// Flat background torus: grid plus a constant Kähler form.
#[derive(Debug, Clone)]
pub struct TorusBackground<T: Real> {
    grid: Grid,
    metric: Vec<C<T>>,
    inverse: Vec<C<T>>,
    chol: Vec<C<T>>,
    chol_inv: Vec<C<T>>,
    det: T,
    volume: T,
}

impl<T: Real> TorusBackground<T> {
    /// Build a background from per-direction resolutions and a Hermitian
    /// positive definite n×n metric matrix (row-major).
    pub fn new(res: &[usize], metric: &[C<T>]) -> Result<Self, FieldError> {
        let grid = Grid::new(res)?;
        let n = grid.n();
        for (axis, &r) in res.iter().enumerate() {
            if r < 4 {
                return Err(FieldError::ResolutionTooSmall { axis, res: r });
            }
        }
        if metric.len() != n * n {
            return Err(FieldError::MatrixSizeMismatch {
                got: metric.len(),
                want: n * n,
            });
        }
        let metric = hermitize_checked(n, metric)?;
        let mut chol = vec![Complex::new(T::zero(), T::zero()); n * n];
        linalg::cholesky(n, &metric, &mut chol).ok_or(FieldError::MetricNotPositive)?;
        let mut chol_inv = chol.clone();
        linalg::invert_lower(n, &chol, &mut chol_inv);
        // W^{-1} = L^{-*} L^{-1}
        let mut linv_adj = chol_inv.clone();
        linalg::adjoint(n, &chol_inv, &mut linv_adj);
        let mut inverse = vec![Complex::new(T::zero(), T::zero()); n * n];
        linalg::matmul(n, &linv_adj, &chol_inv, &mut inverse);
        let mut det = T::one();
        for i in 0..n {
            let d = chol[linalg::idx(n, i, i)].re;
            det = det * d * d;
        }
        let mut fact = T::one();
        for i in 2..=n {
            fact = fact * T::of(i as f64);
        }
        let volume = fact * T::of((1u64 << n) as f64) * det;
        Ok(TorusBackground {
            grid,
            metric,
            inverse,
            chol,
            chol_inv,
            det,
            volume,
        })
    }

    /// Euclidean background ω = identity at the given resolutions.
    pub fn flat(res: &[usize]) -> Result<Self, FieldError> {
        let n = res.len();
        let mut eye = vec![Complex::new(T::zero(), T::zero()); n * n];
        for i in 0..n {
            eye[linalg::idx(n, i, i)] = Complex::new(T::one(), T::zero());
        }
        Self::new(res, &eye)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    /// ω as a row-major n×n matrix.
    pub fn metric(&self) -> &[C<T>] {
        &self.metric
    }

    /// ω^{-1}.
    pub fn inverse(&self) -> &[C<T>] {
        &self.inverse
    }

    /// Cholesky factor L of ω = L·L^*.
    pub fn chol(&self) -> &[C<T>] {
        &self.chol
    }

    pub fn chol_inv(&self) -> &[C<T>] {
        &self.chol_inv
    }

    pub fn det(&self) -> T {
        self.det
    }

    /// Total volume ∫ ωⁿ = n!·2ⁿ·det ω.
    pub fn volume(&self) -> T {
        self.volume
    }

    fn check_len(&self, field: &[T]) -> Result<(), FieldError> {
        if field.len() != self.grid.len() {
            return Err(FieldError::LengthMismatch {
                got: field.len(),
                want: self.grid.len(),
            });
        }
        for (i, v) in field.iter().enumerate() {
            if !v.is_finite() {
                return Err(FieldError::NonFinite { index: i });
            }
        }
        Ok(())
    }
}

fn hermitize_checked<T: Real>(n: usize, a: &[C<T>]) -> Result<Vec<C<T>>, FieldError> {
    let mut out = a.to_vec();
    let mut scale = T::zero();
    for v in a {
        scale = scale.max(v.norm_sqr());
    }
    let tol = scale.sqrt().max(T::one()) * T::of(1e-12);
    for r in 0..n {
        for c in r..n {
            let x = a[linalg::idx(n, r, c)];
            let y = a[linalg::idx(n, c, r)].conj();
            if (x - y).norm() > tol {
                return Err(FieldError::NotHermitian { r, c });
            }
            let avg = (x + y).scale(T::of(0.5));
            out[linalg::idx(n, r, c)] = if r == c {
                Complex::new(avg.re, T::zero())
            } else {
                avg
            };
            out[linalg::idx(n, c, r)] = out[linalg::idx(n, r, c)].conj();
        }
    }
    Ok(out)
}

/// Hermitian (1,1)-form field in structure-of-arrays layout: one contiguous
/// complex field per upper-triangle component, diagonals kept exactly real.
#[derive(Debug, Clone)]
pub struct HermitianField<T: Real> {
    n: usize,
    len: usize,
    comps: Vec<Vec<C<T>>>,
}

#[inline]
fn tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

impl<T: Real> HermitianField<T> {
    pub fn zero(n: usize, len: usize) -> Self {
        let comps = vec![vec![Complex::new(T::zero(), T::zero()); len]; n * (n + 1) / 2];
        HermitianField { n, len, comps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Component field (i, j) with i ≤ j.
    pub fn comp(&self, i: usize, j: usize) -> &[C<T>] {
        &self.comps[tri_index(self.n, i, j)]
    }

    pub fn comp_mut(&mut self, i: usize, j: usize) -> &mut [C<T>] {
        &mut self.comps[tri_index(self.n, i, j)]
    }

    /// Write the full n×n matrix at point `p` into `out` (row-major).
    pub fn write_at(&self, p: usize, out: &mut [C<T>]) {
        let n = self.n;
        for i in 0..n {
            for j in i..n {
                let v = self.comps[tri_index(n, i, j)][p];
                out[linalg::idx(n, i, j)] = v;
                out[linalg::idx(n, j, i)] = v.conj();
            }
        }
    }

    pub fn scale_in_place(&mut self, s: T) {
        for comp in &mut self.comps {
            for v in comp.iter_mut() {
                *v = v.scale(s);
            }
        }
    }

    /// Rank-one field a_i(x)·conj(a_j(x)) from a complex gradient, i.e. the
    /// matrix of the (1,1)-form i∂a∧∂̄a for real a.
    pub fn rank_one(grad: &[Vec<C<T>>]) -> Self {
        let n = grad.len();
        let len = grad[0].len();
        let mut out = Self::zero(n, len);
        for i in 0..n {
            for j in i..n {
                let dst = &mut out.comps[tri_index(n, i, j)];
                for p in 0..len {
                    let v = grad[i][p] * grad[j][p].conj();
                    dst[p] = if i == j { Complex::new(v.re, T::zero()) } else { v };
                }
            }
        }
        out
    }
}

/// Twist form α = A + i∂∂̄β: a constant Hermitian part plus an exact part,
/// closed by construction.
#[derive(Debug, Clone)]
pub struct TwistForm<T: Real> {
    constant: Vec<C<T>>,
    exact: HermitianField<T>,
}

impl<T: Real> TwistForm<T> {
    pub fn new(
        bg: &TorusBackground<T>,
        ws: &mut Workspace<T>,
        constant: &[C<T>],
        beta: &[T],
    ) -> Result<Self, FieldError> {
        let n = bg.n();
        if constant.len() != n * n {
            return Err(FieldError::MatrixSizeMismatch {
                got: constant.len(),
                want: n * n,
            });
        }
        bg.check_len(beta)?;
        let constant = hermitize_checked(n, constant)?;
        let exact = ws.complex_hessian(beta);
        Ok(TwistForm { constant, exact })
    }

    /// Purely constant twist α = A.
    pub fn constant(bg: &TorusBackground<T>, a: &[C<T>]) -> Result<Self, FieldError> {
        let n = bg.n();
        if a.len() != n * n {
            return Err(FieldError::MatrixSizeMismatch {
                got: a.len(),
                want: n * n,
            });
        }
        let constant = hermitize_checked(n, a)?;
        Ok(TwistForm {
            constant,
            exact: HermitianField::zero(n, bg.grid().len()),
        })
    }

    pub fn constant_part(&self) -> &[C<T>] {
        &self.constant
    }

    pub fn write_at(&self, p: usize, out: &mut [C<T>]) {
        self.exact.write_at(p, out);
        for (dst, src) in out.iter_mut().zip(self.constant.iter()) {
            *dst = *dst + *src;
        }
    }

    /// sup over the grid of the ω-operator norm of α, i.e. the largest
    /// absolute eigenvalue of L^{-1} α L^{-*}.
    pub fn sup_norm(&self, bg: &TorusBackground<T>) -> T {
        let n = bg.n();
        let len = bg.grid().len();
        let mut a = [Complex::new(T::zero(), T::zero()); MAX_N * MAX_N];
        let mut tmp = [Complex::new(T::zero(), T::zero()); MAX_N * MAX_N];
        let mut tilde = [Complex::new(T::zero(), T::zero()); MAX_N * MAX_N];
        let mut lambda = [T::zero(); MAX_N];
        let mut linv_adj = vec![Complex::new(T::zero(), T::zero()); n * n];
        linalg::adjoint(n, bg.chol_inv(), &mut linv_adj);
        let mut best = T::zero();
        for p in 0..len {
            self.write_at(p, &mut a[..n * n]);
            linalg::matmul(n, bg.chol_inv(), &a[..n * n], &mut tmp[..n * n]);
            linalg::matmul(n, &tmp[..n * n], &linv_adj, &mut tilde[..n * n]);
            linalg::herm_eigen(n, &mut tilde[..n * n], &mut lambda[..n], None);
            for &l in &lambda[..n] {
                best = best.max(l.abs());
            }
        }
        best
    }
}

/// FFT plans plus background-dependent multiplier tables and scratch,
/// shared across all spectral operations on one background.
pub struct Workspace<T: Real> {
    engine: SpectralEngine<T>,
    /// −c(m)^* ω^{-1} c(m): the symbol of Δ_ω (≤ 0, zero only at m = 0).
    lap_mult: Vec<T>,
    spec: Vec<C<T>>,
    buf: Vec<C<T>>,
}

impl<T: Real> Workspace<T> {
    pub fn new(bg: &TorusBackground<T>) -> Self {
        let engine = SpectralEngine::new(bg.grid().clone());
        let n = bg.n();
        let len = bg.grid().len();
        let winv = bg.inverse();
        let mut lap_mult = vec![T::zero(); len];
        {
            let ct = engine.c_table();
            for i in 0..len {
                let c = &ct[i * n..(i + 1) * n];
                let mut acc = T::zero();
                for p in 0..n {
                    for q in 0..n {
                        let term: Complex<T> = c[p].conj() * winv[linalg::idx(n, p, q)] * c[q];
                        acc = acc + term.re;
                    }
                }
                lap_mult[i] = -acc;
            }
        }
        Workspace {
            engine,
            lap_mult,
            spec: vec![Complex::new(T::zero(), T::zero()); len],
            buf: vec![Complex::new(T::zero(), T::zero()); len],
        }
    }

    pub fn grid(&self) -> &Grid {
        self.engine.grid()
    }

    /// Complex Hessian H_{ij̄} = ∂²φ/∂z_i∂z̄_j as a Hermitian field.
    ///
    /// One forward transform, then one inverse transform per upper-triangle
    /// component with multiplier −c_i(m)·conj(c_j(m)). Using one signed
    /// representative per mode makes H exactly Hermitian, Nyquist included.
    pub fn complex_hessian(&mut self, phi: &[T]) -> HermitianField<T> {
        let grid = self.engine.grid();
        let n = grid.n();
        let len = grid.len();
        debug_assert_eq!(phi.len(), len);
        crate::grid::lift(phi, &mut self.spec);
        self.engine.forward(&mut self.spec);
        let mut out = HermitianField::zero(n, len);
        for i in 0..n {
            for j in i..n {
                {
                    let ct = self.engine.c_table();
                    for p in 0..len {
                        let ci = ct[p * n + i];
                        let cj = ct[p * n + j];
                        self.buf[p] = self.spec[p] * (ci * cj.conj()).scale(-T::one());
                    }
                }
                self.engine.inverse(&mut self.buf);
                let dst = out.comp_mut(i, j);
                if i == j {
                    for p in 0..len {
                        dst[p] = Complex::new(self.buf[p].re, T::zero());
                    }
                } else {
                    dst.copy_from_slice(&self.buf);
                }
            }
        }
        out
    }

    /// Holomorphic gradient (∂φ/∂z_1, …, ∂φ/∂z_n), one complex field each.
    pub fn gradient(&mut self, phi: &[T]) -> Vec<Vec<C<T>>> {
        let grid = self.engine.grid();
        let n = grid.n();
        let len = grid.len();
        debug_assert_eq!(phi.len(), len);
        crate::grid::lift(phi, &mut self.spec);
        self.engine.forward(&mut self.spec);
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            {
                let ct = self.engine.c_table();
                for p in 0..len {
                    self.buf[p] = self.spec[p] * ct[p * n + j];
                }
            }
            self.engine.inverse(&mut self.buf);
            out.push(self.buf.clone());
        }
        out
    }

    /// Background Laplacian Δ_ω φ = tr_ω i∂∂̄φ via its Fourier symbol.
    pub fn laplace_background(&mut self, phi: &[T], out: &mut [T]) {
        crate::grid::lift(phi, &mut self.spec);
        self.engine.forward(&mut self.spec);
        for (v, &m) in self.spec.iter_mut().zip(self.lap_mult.iter()) {
            *v = v.scale(m);
        }
        self.engine.inverse(&mut self.spec);
        crate::grid::real_part(&self.spec, out);
    }

    /// Pseudo-inverse of Δ_ω: solves Δ_ω u = Π f with mean u = 0, where Π
    /// projects onto the range of Δ_ω (dropping the mean and the handful of
    /// pure-Nyquist modes invisible to the derivative convention).
    pub fn laplace_pinv(&mut self, f: &[T], out: &mut [T]) {
        crate::grid::lift(f, &mut self.spec);
        self.engine.forward(&mut self.spec);
        for (v, &m) in self.spec.iter_mut().zip(self.lap_mult.iter()) {
            *v = if m == T::zero() {
                Complex::new(T::zero(), T::zero())
            } else {
                v.scale(T::one() / m)
            };
        }
        self.engine.inverse(&mut self.spec);
        crate::grid::real_part(&self.spec, out);
    }

    /// Project a field onto the modes the derivative operators can see,
    /// keeping the mean. Fields fixed by this projection satisfy every
    /// spectral integration-by-parts identity to rounding.
    pub fn visible_projection(&mut self, f: &mut [T]) {
        crate::grid::lift(f, &mut self.spec);
        self.engine.forward(&mut self.spec);
        for (i, (v, &m)) in self
            .spec
            .iter_mut()
            .zip(self.lap_mult.iter())
            .enumerate()
        {
            if i != 0 && m == T::zero() {
                *v = Complex::new(T::zero(), T::zero());
            }
        }
        self.engine.inverse(&mut self.spec);
        crate::grid::real_part(&self.spec, f);
    }

    pub fn laplace_multiplier(&self) -> &[T] {
        &self.lap_mult
    }
}

/// Elementary symmetric polynomials e_0..e_m of up to MAX_N values, on the
/// stack (prepend recurrence, same as the exact kernel).
#[inline]
pub(crate) fn elem_upto<T: Real>(vals: &[T], m: usize, out: &mut [T; MAX_N + 1]) {
    out[0] = T::one();
    for v in out.iter_mut().take(m + 1).skip(1) {
        *v = T::zero();
    }
    for &x in vals {
        let top = m.min(MAX_N);
        for j in (1..=top).rev() {
            out[j] = out[j] + x * out[j - 1];
        }
    }
}

/// Full pointwise state of ω_φ at Hessian degree k: eigenvalues of
/// ω^{-1}ω_φ, the coordinate eigenframe P, the σ data, the density
/// f = log(σ_k/C(n,k)) and the dual metric G.
pub struct HessianState<T: Real> {
    pub k: usize,
    n: usize,
    len: usize,
    /// i∂∂̄φ.
    pub hess: HermitianField<T>,
    /// Relative eigenvalues, point-major `lambda[p·n + i]`, ascending.
    pub lambda: Vec<T>,
    /// Frame P = L^{-*}U, point-major n×n blocks; ω_φ = P^{-*} Λ P^{-1}.
    pub frame: Vec<C<T>>,
    /// σ_{k-1,i}(λ), point-major.
    pub sig_drop: Vec<T>,
    /// σ_k(λ).
    pub sigma_k: Vec<T>,
    /// σ_k(λ)/C(n,k).
    pub ratio: Vec<T>,
    /// log ratio.
    pub f: Vec<T>,
    /// G = P diag(σ_{k-1,i}/σ_k) P^*, point-major n×n blocks.
    pub g: Vec<C<T>>,
}

impl<T: Real> HessianState<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn lambda_at(&self, p: usize) -> &[T] {
        &self.lambda[p * self.n..(p + 1) * self.n]
    }

    pub fn frame_at(&self, p: usize) -> &[C<T>] {
        &self.frame[p * self.n * self.n..(p + 1) * self.n * self.n]
    }

    pub fn sig_drop_at(&self, p: usize) -> &[T] {
        &self.sig_drop[p * self.n..(p + 1) * self.n]
    }

    pub fn g_at(&self, p: usize) -> &[C<T>] {
        &self.g[p * self.n * self.n..(p + 1) * self.n * self.n]
    }

    /// ω_φ = ω + i∂∂̄φ at point p (row-major n×n).
    pub fn omega_phi_at(&self, bg: &TorusBackground<T>, p: usize, out: &mut [C<T>]) {
        self.hess.write_at(p, out);
        for (dst, src) in out.iter_mut().zip(bg.metric().iter()) {
            *dst = *dst + *src;
        }
    }

    /// tr_G α at every point for a Hermitian matrix field given by `at`.
    pub fn trace_g<F>(&self, at: F, out: &mut [T])
    where
        F: Fn(usize, &mut [C<T>]),
    {
        let n = self.n;
        let mut m = [Complex::new(T::zero(), T::zero()); MAX_N * MAX_N];
        for p in 0..self.len {
            at(p, &mut m[..n * n]);
            let g = self.g_at(p);
            let mut acc = T::zero();
            for r in 0..n {
                for c in 0..n {
                    acc = acc + (g[linalg::idx(n, r, c)] * m[linalg::idx(n, c, r)]).re;
                }
            }
            out[p] = acc;
        }
    }
}

/// Evaluate the full Hessian-state of a potential. Errors when λ(x) leaves
/// the Γ_k cone anywhere (margin 0 ⇒ strict positivity).
pub fn evaluate_state<T: Real>(
    bg: &TorusBackground<T>,
    ws: &mut Workspace<T>,
    k: usize,
    phi: &[T],
) -> Result<HessianState<T>, FieldError> {
    evaluate_state_guarded(bg, ws, k, phi, T::zero())
}

/// Like [`evaluate_state`] but demands σ_j(λ) > margin·max(1,‖λ‖_∞)^j for
/// every j ≤ k at every point, matching the scale-aware cone classifier.
pub fn evaluate_state_guarded<T: Real>(
    bg: &TorusBackground<T>,
    ws: &mut Workspace<T>,
    k: usize,
    phi: &[T],
    margin: T,
) -> Result<HessianState<T>, FieldError> {
    let n = bg.n();
    let len = bg.grid().len();
    if k == 0 || k > n {
        return Err(FieldError::DegreeOutOfRange { k, n });
    }
    bg.check_len(phi)?;
    let hess = ws.complex_hessian(phi);

    let binom = T::of(symcone::binomial(n, k) as f64);
    let mut lambda = vec![T::zero(); len * n];
    let mut frame = vec![Complex::new(T::zero(), T::zero()); len * n * n];
    let mut sig_drop = vec![T::zero(); len * n];
    let mut sigma_k = vec![T::zero(); len];
    let mut ratio = vec![T::zero(); len];
    let mut f = vec![T::zero(); len];
    let mut g = vec![Complex::new(T::zero(), T::zero()); len * n * n];

    let mut linv_adj = vec![Complex::new(T::zero(), T::zero()); n * n];
    linalg::adjoint(n, bg.chol_inv(), &mut linv_adj);

    let mut a = [Complex::new(T::zero(), T::zero()); MAX_N * MAX_N];
    let mut tmp = [Complex::new(T::zero(), T::zero()); MAX_N * MAX_N];
    let mut tilde = [Complex::new(T::zero(), T::zero()); MAX_N * MAX_N];
    let mut u = [Complex::new(T::zero(), T::zero()); MAX_N * MAX_N];
    let mut lam = [T::zero(); MAX_N];
    let mut elems = [T::zero(); MAX_N + 1];
    let mut reduced = [T::zero(); MAX_N];

    for p in 0..len {
        hess.write_at(p, &mut a[..n * n]);
        for (dst, src) in a[..n * n].iter_mut().zip(bg.metric().iter()) {
            *dst = *dst + *src;
        }
        // Ã = L^{-1}(ω + H)L^{-*}
        linalg::matmul(n, bg.chol_inv(), &a[..n * n], &mut tmp[..n * n]);
        linalg::matmul(n, &tmp[..n * n], &linv_adj, &mut tilde[..n * n]);
        linalg::herm_eigen(n, &mut tilde[..n * n], &mut lam[..n], Some(&mut u[..n * n]));

        // cone check with scale-aware margin
        let mut scale = T::one();
        for &l in &lam[..n] {
            scale = scale.max(l.abs());
        }
        elem_upto(&lam[..n], k, &mut elems);
        let mut bar = margin * scale;
        for (j, &e) in elems.iter().enumerate().take(k + 1).skip(1) {
            if !(e > bar) {
                return Err(FieldError::ConeViolation {
                    k,
                    point: p,
                    degree: j,
                });
            }
            bar = bar * scale;
        }
        let sk = elems[k];
        lambda[p * n..(p + 1) * n].copy_from_slice(&lam[..n]);
        sigma_k[p] = sk;
        ratio[p] = sk / binom;
        f[p] = ratio[p].ln();

        // σ_{k-1,i} by re-running the recurrence on λ with entry i removed
        for i in 0..n {
            let mut m = 0;
            for (jj, &l) in lam[..n].iter().enumerate() {
                if jj != i {
                    reduced[m] = l;
                    m += 1;
                }
            }
            elem_upto(&reduced[..m], k - 1, &mut elems);
            sig_drop[p * n + i] = elems[k - 1];
        }

        // P = L^{-*} U, then G = P diag(σ_{k-1,i}/σ_k) P^*
        linalg::matmul(n, &linv_adj, &u[..n * n], &mut tmp[..n * n]);
        frame[p * n * n..(p + 1) * n * n].copy_from_slice(&tmp[..n * n]);
        let gp = &mut g[p * n * n..(p + 1) * n * n];
        for r in 0..n {
            for c in r..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for i in 0..n {
                    let d = sig_drop[p * n + i] / sk;
                    acc = acc
                        + tmp[linalg::idx(n, r, i)].scale(d) * tmp[linalg::idx(n, c, i)].conj();
                }
                gp[linalg::idx(n, r, c)] = if r == c {
                    Complex::new(acc.re, T::zero())
                } else {
                    acc
                };
                gp[linalg::idx(n, c, r)] = gp[linalg::idx(n, r, c)].conj();
            }
        }
    }

    Ok(HessianState {
        k,
        n,
        len,
        hess,
        lambda,
        frame,
        sig_drop,
        sigma_k,
        ratio,
        f,
        g,
    })
}

/// Pointwise G-pairing of two holomorphic gradients:
/// ⟨∇a, ∇b⟩_G = Re(Σ_{p,q} conj(a_p)·G_{pq}·b_q). Real and symmetric in
/// (a, b); with a = b it is the squared gradient norm |∂a|²_G.
pub fn metric_pair<T: Real>(
    state: &HessianState<T>,
    a: &[Vec<C<T>>],
    b: &[Vec<C<T>>],
    out: &mut [T],
) {
    let n = state.n();
    for p in 0..state.len() {
        let g = state.g_at(p);
        let mut acc = T::zero();
        for r in 0..n {
            for c in 0..n {
                let term: Complex<T> = a[r][p].conj() * g[linalg::idx(n, r, c)] * b[c][p];
                acc = acc + term.re;
            }
        }
        out[p] = acc;
    }
}

/// Δ_G h = tr(G · i∂∂̄h) as a real field.
pub fn laplace_g<T: Real>(
    state: &HessianState<T>,
    ws: &mut Workspace<T>,
    h: &[T],
    out: &mut [T],
) {
    let hess = ws.complex_hessian(h);
    state.trace_g(|p, m| hess.write_at(p, m), out);
}

/// Generalized Ricci form Riĉ(ω_φ) = −i∂∂̄ log(σ_k(λ)/C(n,k)).
pub fn generalized_ricci<T: Real>(
    state: &HessianState<T>,
    ws: &mut Workspace<T>,
) -> HermitianField<T> {
    let mut ric = ws.complex_hessian(&state.f);
    ric.scale_in_place(-T::one());
    ric
}

/// One factor of a wedge-product integrand.
#[derive(Clone, Copy)]
pub enum WedgeFactor<'a, T: Real> {
    /// The background form ω.
    Background,
    /// ω_φ for an evaluated state.
    State(&'a HessianState<T>),
    /// An arbitrary Hermitian matrix field.
    Form(&'a HermitianField<T>),
    /// A twist form α.
    Twist(&'a TwistForm<T>),
    /// A constant Hermitian matrix.
    Constant(&'a [C<T>]),
}

impl<'a, T: Real> WedgeFactor<'a, T> {
    fn write_at(&self, bg: &TorusBackground<T>, p: usize, out: &mut [C<T>]) {
        match self {
            WedgeFactor::Background => out.copy_from_slice(bg.metric()),
            WedgeFactor::State(s) => s.omega_phi_at(bg, p, out),
            WedgeFactor::Form(h) => h.write_at(p, out),
            WedgeFactor::Twist(t) => t.write_at(p, out),
            WedgeFactor::Constant(m) => out.copy_from_slice(m),
        }
    }
}

/// ∫ u · F_1^{m_1}∧…∧F_r^{m_r} over the torus, with Σm_i = n. `weight`
/// defaults to u ≡ 1. Evaluated as n!·2ⁿ·mean[u·D(factors…)].
pub fn wedge_integral<T: Real>(
    bg: &TorusBackground<T>,
    weight: Option<&[T]>,
    factors: &[(WedgeFactor<T>, usize)],
) -> Result<T, FieldError> {
    let n = bg.n();
    let len = bg.grid().len();
    let total: usize = factors.iter().map(|&(_, m)| m).sum();
    if total != n {
        return Err(FieldError::WedgeDegreeMismatch { got: total, want: n });
    }
    if let Some(w) = weight {
        if w.len() != len {
            return Err(FieldError::LengthMismatch {
                got: w.len(),
                want: len,
            });
        }
    }
    let mut mats = [[Complex::new(T::zero(), T::zero()); MAX_N * MAX_N]; MAX_N];
    let mut scratch = [Complex::new(T::zero(), T::zero()); 2 * MAX_N * MAX_N];
    let mut acc = T::zero();
    for p in 0..len {
        let mut slot = 0;
        for &(factor, mult) in factors {
            if mult == 0 {
                continue;
            }
            factor.write_at(bg, p, &mut mats[slot][..n * n]);
            for copy in 1..mult {
                let (head, tail) = mats.split_at_mut(slot + copy);
                tail[0][..n * n].copy_from_slice(&head[slot][..n * n]);
            }
            slot += mult;
        }
        let mut refs: [&[C<T>]; MAX_N] = [&[]; MAX_N];
        for (i, m) in mats.iter().enumerate().take(n) {
            refs[i] = &m[..n * n];
        }
        let d = linalg::mixed_discriminant(n, &refs[..n], &mut scratch[..2 * n * n]);
        let term = match weight {
            Some(w) => w[p] * d,
            None => d,
        };
        acc = acc + term;
    }
    let mut fact = T::one();
    for i in 2..=n {
        fact = fact * T::of(i as f64);
    }
    Ok(fact * T::of((1u64 << n) as f64) * acc / T::of(len as f64))
}

/// Cohomological slope of a twist form against a state:
/// ᾱ = k·∫α∧ω_φ^{k-1}∧ω^{n-k} / ∫ω_φ^k∧ω^{n-k}.
pub fn alpha_bar<T: Real>(
    bg: &TorusBackground<T>,
    state: &HessianState<T>,
    twist: &TwistForm<T>,
) -> Result<T, FieldError> {
    let k = state.k;
    let n = bg.n();
    let num = wedge_integral(
        bg,
        None,
        &[
            (WedgeFactor::Twist(twist), 1),
            (WedgeFactor::State(state), k - 1),
            (WedgeFactor::Background, n - k),
        ],
    )?;
    let den = wedge_integral(
        bg,
        None,
        &[
            (WedgeFactor::State(state), k),
            (WedgeFactor::Background, n - k),
        ],
    )?;
    Ok(T::of(k as f64) * num / den)
}

/// Mean over the grid (sequential sum: deterministic).
pub fn mean<T: Real>(v: &[T]) -> T {
    let mut acc = T::zero();
    for &x in v {
        acc = acc + x;
    }
    acc / T::of(v.len() as f64)
}

pub fn sup<T: Real>(v: &[T]) -> T {
    let mut best = T::neg_infinity();
    for &x in v {
        best = best.max(x);
    }
    best
}

pub fn inf<T: Real>(v: &[T]) -> T {
    let mut best = T::infinity();
    for &x in v {
        best = best.min(x);
    }
    best
}

/// Shift so that sup v = 0.
pub fn normalize_sup_zero<T: Real>(v: &mut [T]) {
    let s = sup(v);
    for x in v.iter_mut() {
        *x = *x - s;
    }
}

/// Shift so that mean v = 0.
pub fn subtract_mean<T: Real>(v: &mut [T]) {
    let m = mean(v);
    for x in v.iter_mut() {
        *x = *x - m;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    type Cf = Complex<f64>;

    fn c(re: f64, im: f64) -> Cf {
        Complex::new(re, im)
    }

    fn sample_metric2() -> Vec<Cf> {
        vec![c(1.3, 0.0), c(0.2, 0.3), c(0.2, -0.3), c(0.9, 0.0)]
    }

    fn cos_field(bg: &TorusBackground<f64>, axis: usize, amp: f64) -> Vec<f64> {
        let g = bg.grid();
        let mut pt = vec![0.0; 2 * g.n()];
        (0..g.len())
            .map(|i| {
                g.point(i, &mut pt);
                amp * (2.0 * std::f64::consts::PI * pt[axis]).cos()
            })
            .collect()
    }

    #[test]
    fn background_validation() {
        assert!(matches!(
            TorusBackground::<f64>::new(&[2, 8], &[c(1.0, 0.0); 4]),
            Err(FieldError::ResolutionTooSmall { axis: 0, res: 2 })
        ));
        let bad = vec![c(1.0, 0.0), c(0.5, 0.0), c(0.9, 0.0), c(1.0, 0.0)];
        assert!(matches!(
            TorusBackground::<f64>::new(&[4, 4], &bad),
            Err(FieldError::NotHermitian { .. })
        ));
        let indefinite = vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
        assert!(matches!(
            TorusBackground::<f64>::new(&[4, 4], &indefinite),
            Err(FieldError::MetricNotPositive)
        ));
    }

    #[test]
    fn volume_of_flat_backgrounds() {
        let bg2 = TorusBackground::<f64>::flat(&[4, 4]).unwrap();
        assert!((bg2.volume() - 8.0).abs() < 1e-14);
        let bg3 = TorusBackground::<f64>::flat(&[4, 4, 4]).unwrap();
        assert!((bg3.volume() - 48.0).abs() < 1e-14);
        let bg = TorusBackground::<f64>::new(&[4, 4], &sample_metric2()).unwrap();
        // det = 1.3·0.9 − |0.2+0.3i|² = 1.17 − 0.13 = 1.04; V = 8·det
        assert!((bg.det() - 1.04).abs() < 1e-14);
        assert!((bg.volume() - 8.32).abs() < 1e-13);
    }

    #[test]
    fn hessian_of_a_cosine_is_diagonal() {
        let bg = TorusBackground::<f64>::flat(&[8, 8]).unwrap();
        let mut ws = Workspace::new(&bg);
        let phi = cos_field(&bg, 0, 0.7); // depends on x_0 only
        let h = ws.complex_hessian(&phi);
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        for p in 0..bg.grid().len() {
            let expect = -pi2 * phi[p];
            assert!((h.comp(0, 0)[p].re - expect).abs() < 1e-11);
            assert!(h.comp(0, 0)[p].im == 0.0);
            assert!(h.comp(0, 1)[p].norm() < 1e-12);
            assert!(h.comp(1, 1)[p].norm() < 1e-12);
        }
    }

    #[test]
    fn hessian_trace_matches_laplace_symbol_with_nyquist_content() {
        // random-ish field with full spectral support, non-trivial metric
        let bg = TorusBackground::<f64>::new(&[4, 4], &sample_metric2()).unwrap();
        let mut ws = Workspace::new(&bg);
        let len = bg.grid().len();
        let phi: Vec<f64> = (0..len)
            .map(|i| ((i * 37 + 11) % 101) as f64 / 101.0 - 0.5)
            .collect();
        let h = ws.complex_hessian(&phi);
        let n = bg.n();
        let winv = bg.inverse().to_vec();
        let mut lap = vec![0.0; len];
        ws.laplace_background(&phi, &mut lap);
        let mut m = vec![c(0.0, 0.0); n * n];
        for p in 0..len {
            h.write_at(p, &mut m);
            let mut tr = 0.0;
            for r in 0..n {
                for cc in 0..n {
                    tr += (winv[linalg::idx(n, r, cc)] * m[linalg::idx(n, cc, r)]).re;
                }
            }
            assert!((tr - lap[p]).abs() < 1e-10, "point {p}");
        }
    }

    #[test]
    fn zero_potential_state_is_calibrated() {
        let bg = TorusBackground::<f64>::new(&[4, 4, 4], &{
            let mut m = vec![c(0.0, 0.0); 9];
            m[0] = c(2.0, 0.0);
            m[4] = c(1.0, 0.0);
            m[8] = c(1.5, 0.0);
            m[1] = c(0.1, 0.2);
            m[3] = c(0.1, -0.2);
            m
        })
        .unwrap();
        let mut ws = Workspace::new(&bg);
        let phi = vec![0.0; bg.grid().len()];
        let k = 2;
        let st = evaluate_state(&bg, &mut ws, k, &phi).unwrap();
        let n = bg.n();
        let kn = k as f64 / n as f64;
        for p in [0usize, 17, bg.grid().len() - 1] {
            for i in 0..n {
                assert!((st.lambda_at(p)[i] - 1.0).abs() < 1e-12);
            }
            assert!((st.sigma_k[p] - 3.0).abs() < 1e-12); // C(3,2)
            assert!((st.ratio[p] - 1.0).abs() < 1e-12);
            assert!(st.f[p].abs() < 1e-12);
            let g = st.g_at(p);
            for r in 0..n {
                for cc in 0..n {
                    let want = bg.inverse()[linalg::idx(n, r, cc)] * kn;
                    assert!((g[linalg::idx(n, r, cc)] - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn trace_of_omega_phi_against_g_is_k() {
        // Euler identity Σλ_iσ_{k-1,i} = kσ_k transported to coordinates
        let bg = TorusBackground::<f64>::new(&[8, 8], &sample_metric2()).unwrap();
        let mut ws = Workspace::new(&bg);
        let mut phi = cos_field(&bg, 0, 0.05);
        let bump = cos_field(&bg, 3, 0.04); // y_1 direction
        for (a, b) in phi.iter_mut().zip(bump) {
            *a += b;
        }
        for k in 1..=2 {
            let st = evaluate_state(&bg, &mut ws, k, &phi).unwrap();
            let mut tr = vec![0.0; bg.grid().len()];
            st.trace_g(|p, m| st.omega_phi_at(&bg, p, m), &mut tr);
            for (p, v) in tr.iter().enumerate() {
                assert!((v - k as f64).abs() < 1e-11, "k={k} point {p}");
            }
        }
    }

    #[test]
    fn state_rejects_cone_exit() {
        let bg = TorusBackground::<f64>::flat(&[8]).unwrap();
        let mut ws = Workspace::new(&bg);
        // big cosine pushes 1 + H_{11} negative somewhere
        let phi = cos_field(&bg, 0, 1.0); // H_{11} = −π²cos ∈ [−π², π²]
        match evaluate_state(&bg, &mut ws, 1, &phi) {
            Err(FieldError::ConeViolation { k: 1, degree: 1, .. }) => {}
            other => panic!("expected cone violation, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn wedge_volume_is_conserved_for_alias_free_potentials() {
        let bg = TorusBackground::<f64>::new(&[8, 8], &sample_metric2()).unwrap();
        let mut ws = Workspace::new(&bg);
        let mut phi = cos_field(&bg, 0, 0.08);
        for (a, b) in phi.iter_mut().zip(cos_field(&bg, 2, 0.06)) {
            *a += b;
        }
        let n = bg.n();
        for k in 1..=n {
            let st = evaluate_state(&bg, &mut ws, k, &phi).unwrap();
            let v = wedge_integral(
                &bg,
                None,
                &[
                    (WedgeFactor::State(&st), k),
                    (WedgeFactor::Background, n - k),
                ],
            )
            .unwrap();
            assert!(
                (v - bg.volume()).abs() < 1e-11 * bg.volume(),
                "k={k}: {v} vs {}",
                bg.volume()
            );
        }
    }

    #[test]
    fn wedge_degree_validation() {
        let bg = TorusBackground::<f64>::flat(&[4, 4]).unwrap();
        assert!(matches!(
            wedge_integral(&bg, None, &[(WedgeFactor::Background, 3)]),
            Err(FieldError::WedgeDegreeMismatch { got: 3, want: 2 })
        ));
    }

    #[test]
    fn alpha_bar_of_scaled_background() {
        let bg = TorusBackground::<f64>::new(&[8, 8], &sample_metric2()).unwrap();
        let mut ws = Workspace::new(&bg);
        let scaled: Vec<Cf> = bg.metric().iter().map(|v| v * 0.6).collect();
        let twist = TwistForm::constant(&bg, &scaled).unwrap();
        let phi = cos_field(&bg, 1, 0.05);
        for k in 1..=2 {
            let st = evaluate_state(&bg, &mut ws, k, &phi).unwrap();
            let ab = alpha_bar(&bg, &st, &twist).unwrap();
            assert!(
                (ab - 0.6 * k as f64).abs() < 1e-10,
                "k={k}: got {ab}"
            );
        }
    }

    #[test]
    fn alpha_bar_sees_only_the_cohomology_class() {
        // adding i∂∂̄β to α must not move ᾱ (alias-free data)
        let bg = TorusBackground::<f64>::flat(&[8, 8]).unwrap();
        let mut ws = Workspace::new(&bg);
        let a = vec![c(0.8, 0.0), c(0.1, 0.05), c(0.1, -0.05), c(1.1, 0.0)];
        let beta = cos_field(&bg, 2, 0.3);
        let plain = TwistForm::constant(&bg, &a).unwrap();
        let dressed = TwistForm::new(&bg, &mut ws, &a, &beta).unwrap();
        let phi = cos_field(&bg, 0, 0.06);
        let st = evaluate_state(&bg, &mut ws, 2, &phi).unwrap();
        let x = alpha_bar(&bg, &st, &plain).unwrap();
        let y = alpha_bar(&bg, &st, &dressed).unwrap();
        assert!((x - y).abs() < 1e-11, "{x} vs {y}");
    }

    #[test]
    fn laplace_pinv_inverts_on_mean_zero() {
        let bg = TorusBackground::<f64>::new(&[8, 4], &sample_metric2()).unwrap();
        let mut ws = Workspace::new(&bg);
        let len = bg.grid().len();
        let mut f: Vec<f64> = (0..len)
            .map(|i| ((i * 29 + 3) % 97) as f64 / 97.0 - 0.4)
            .collect();
        // Δ⁺ inverts Δ on its range: compare against the visible projection
        let mut visible = f.clone();
        ws.visible_projection(&mut visible);
        let mut u = vec![0.0; len];
        ws.laplace_pinv(&f, &mut u);
        assert!(mean(&u).abs() < 1e-12);
        let mut back = vec![0.0; len];
        ws.laplace_background(&u, &mut back);
        let fm = mean(&f);
        for p in 0..len {
            assert!((back[p] - (visible[p] - fm)).abs() < 1e-10);
        }
        // and for band-limited data the projection is the identity
        ws.visible_projection(&mut f);
        ws.visible_projection(&mut f);
        let mut again = f.clone();
        ws.visible_projection(&mut again);
        for p in 0..len {
            assert!((again[p] - f[p]).abs() < 1e-13);
        }
    }

    #[test]
    fn twist_sup_norm_on_flat_background() {
        let bg = TorusBackground::<f64>::flat(&[4, 4]).unwrap();
        let a = vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)];
        let twist = TwistForm::constant(&bg, &a).unwrap();
        assert!((twist.sup_norm(&bg) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn normalization_helpers() {
        let mut v = vec![1.0f64, -2.0, 3.5, 0.0];
        normalize_sup_zero(&mut v);
        assert_eq!(sup(&v), 0.0);
        subtract_mean(&mut v);
        assert!(mean(&v).abs() < 1e-15);
        assert!(inf(&v) < 0.0);
    }
}
