//! Uniform grids on the real 2n-torus and the FFT machinery over them.
//!
//! A complex torus of dimension n is sampled on a product grid with axes
//! ordered `[x_0, y_0, x_1, y_1, …]`, where `z_j = x_j + i·y_j` and both real
//! axes of direction j share the resolution `res[j]`. Storage is row-major
//! over that axis order, and all fields live in flat slices of length
//! `grid.len()`.
//!
//! Frequencies use the signed representative in `[-N/2, N/2)`: for even N the
//! Nyquist index maps to −N/2. First-derivative multipliers additionally zero
//! the Nyquist component (the standard convention for odd-order spectral
//! derivatives); this keeps `c(−m) = −c(m)` exact on the whole lattice, which
//! in turn makes the spectral Hessian exactly Hermitian pointwise and every
//! integration-by-parts identity exact to rounding. The price is a small
//! extra nullspace: modes whose components are all 0 or Nyquist are invisible
//! to i∂∂̄ and are excluded by the Laplace pseudo-inverse.

use crate::scalar::Real;
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;
use thiserror::Error;

/// Largest complex dimension the field layer supports; small fixed-size
/// scratch in hot loops is sized for this.
pub const MAX_N: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("grid needs at least one complex direction")]
    Empty,
    #[error("complex dimension {n} exceeds the supported maximum {max}", max = MAX_N)]
    TooManyAxes { n: usize },
    #[error("axis {axis} has resolution {res}, below the minimum of 2")]
    AxisTooSmall { axis: usize, res: usize },
}

/// Sampling lattice for the flat torus `[0,1)^{2n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    n: usize,
    res: Vec<usize>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(res: &[usize]) -> Result<Self, GridError> {
        let n = res.len();
        if n == 0 {
            return Err(GridError::Empty);
        }
        if n > MAX_N {
            return Err(GridError::TooManyAxes { n });
        }
        for (j, &r) in res.iter().enumerate() {
            if r < 2 {
                return Err(GridError::AxisTooSmall { axis: j, res: r });
            }
        }
        let mut shape = Vec::with_capacity(2 * n);
        for &r in res {
            shape.push(r);
            shape.push(r);
        }
        let mut strides = vec![0usize; 2 * n];
        let mut acc = 1usize;
        for a in (0..2 * n).rev() {
            strides[a] = acc;
            acc *= shape[a];
        }
        Ok(Grid {
            n,
            res: res.to_vec(),
            shape,
            strides,
            len: acc,
        })
    }

    /// Complex dimension n.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Resolution per complex direction.
    pub fn res(&self) -> &[usize] {
        &self.res
    }

    /// Real axis sizes, `[res_0, res_0, res_1, res_1, …]`.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Total number of sample points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major strides matching [`Grid::shape`].
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Lattice coordinates of flat index `i`, written into `out[..2n]`.
    pub fn coords(&self, i: usize, out: &mut [usize]) {
        debug_assert!(i < self.len);
        let mut rem = i;
        for a in 0..2 * self.n {
            out[a] = rem / self.strides[a];
            rem %= self.strides[a];
        }
    }

    /// Flat index of the given lattice coordinates.
    pub fn index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| c * s)
            .sum()
    }

    /// Physical point in `[0,1)^{2n}` at flat index `i`.
    pub fn point<T: Real>(&self, i: usize, out: &mut [T]) {
        let mut rem = i;
        for a in 0..2 * self.n {
            let c = rem / self.strides[a];
            rem %= self.strides[a];
            out[a] = T::of(c as f64) / T::of(self.shape[a] as f64);
        }
    }

    /// Signed frequency vector at flat index `i` (Nyquist ↦ −N/2).
    pub fn mode(&self, i: usize, out: &mut [i64]) {
        let mut rem = i;
        for a in 0..2 * self.n {
            let c = rem / self.strides[a];
            rem %= self.strides[a];
            out[a] = signed_freq(c, self.shape[a]);
        }
    }

    /// Largest complex-direction bandwidth b such that products of up to
    /// `factors` fields of bandwidth b stay alias-free on this grid.
    pub fn alias_free_bandwidth(&self, factors: usize) -> usize {
        let nmin = self.res.iter().copied().min().unwrap_or(0);
        if factors == 0 {
            return nmin / 2;
        }
        // need factors·b < N/2 strictly, so the Nyquist line stays empty
        let mut b = nmin / (2 * factors);
        while 2 * factors * b >= nmin && b > 0 {
            b -= 1;
        }
        b
    }
}

#[inline]
pub fn signed_freq(index: usize, size: usize) -> i64 {
    if index <= (size - 1) / 2 {
        index as i64
    } else {
        index as i64 - size as i64
    }
}

/// Frequency used in first-derivative multipliers: signed, with the Nyquist
/// component of even-sized axes set to zero so that negation is exact.
#[inline]
pub fn deriv_freq(index: usize, size: usize) -> i64 {
    if size % 2 == 0 && 2 * index == size {
        0
    } else {
        signed_freq(index, size)
    }
}

/// Cached FFT plans and per-mode derivative multipliers for one [`Grid`].
///
/// `forward` maps samples to Fourier coefficients (so the zero mode is the
/// grid mean); `inverse` is its exact inverse. The table `c(m)` holds the
/// holomorphic-derivative multipliers `c_j(m) = π(m_{y_j} + i·m_{x_j})`
/// (Nyquist components zeroed, see [`deriv_freq`]), with `∂/∂z_j ↦ c_j(m)`
/// and `∂/∂z̄_j ↦ −conj(c_j(m))` on the mode `exp(2πi m·x)`.
pub struct SpectralEngine<T: Real> {
    grid: Grid,
    fwd: Vec<Arc<dyn Fft<T>>>,
    inv: Vec<Arc<dyn Fft<T>>>,
    line: Vec<Complex<T>>,
    /// c_j(m) for every point, point-major: `cmul[i·n + j]`.
    cmul: Vec<Complex<T>>,
}

impl<T: Real> SpectralEngine<T> {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let mut fwd = Vec::with_capacity(2 * grid.n);
        let mut inv = Vec::with_capacity(2 * grid.n);
        for a in 0..2 * grid.n {
            fwd.push(planner.plan_fft_forward(grid.shape[a]));
            inv.push(planner.plan_fft_inverse(grid.shape[a]));
        }
        let max_axis = grid.shape.iter().copied().max().unwrap();
        let n = grid.n;
        let mut cmul = vec![Complex::new(T::zero(), T::zero()); grid.len * n];
        let pi = T::of(std::f64::consts::PI);
        let mut coords = vec![0usize; 2 * n];
        for i in 0..grid.len {
            grid.coords(i, &mut coords);
            for j in 0..n {
                let mx = deriv_freq(coords[2 * j], grid.shape[2 * j]);
                let my = deriv_freq(coords[2 * j + 1], grid.shape[2 * j + 1]);
                cmul[i * n + j] = Complex::new(pi * T::of(my as f64), pi * T::of(mx as f64));
            }
        }
        SpectralEngine {
            grid,
            fwd,
            inv,
            line: vec![Complex::new(T::zero(), T::zero()); max_axis],
            cmul,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Derivative multipliers c_j(m), point-major (`i·n + j`).
    pub fn c_table(&self) -> &[Complex<T>] {
        &self.cmul
    }

    fn transform_axis(&mut self, data: &mut [Complex<T>], axis: usize, forward: bool) {
        let s = self.grid.shape[axis];
        let st = self.grid.strides[axis];
        let plan = if forward {
            &self.fwd[axis]
        } else {
            &self.inv[axis]
        };
        let block = s * st;
        if st == 1 {
            for chunk in data.chunks_exact_mut(s) {
                plan.process(chunk);
            }
            return;
        }
        let line = &mut self.line[..s];
        for outer in 0..self.grid.len / block {
            let base0 = outer * block;
            for inner in 0..st {
                let base = base0 + inner;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * st];
                }
                plan.process(line);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * st] = *v;
                }
            }
        }
    }

    /// Samples → Fourier coefficients, in place.
    pub fn forward(&mut self, data: &mut [Complex<T>]) {
        debug_assert_eq!(data.len(), self.grid.len);
        for a in 0..2 * self.grid.n {
            self.transform_axis(data, a, true);
        }
        let scale = T::one() / T::of(self.grid.len as f64);
        for v in data.iter_mut() {
            *v = v.scale(scale);
        }
    }

    /// Fourier coefficients → samples, in place.
    pub fn inverse(&mut self, data: &mut [Complex<T>]) {
        debug_assert_eq!(data.len(), self.grid.len);
        for a in 0..2 * self.grid.n {
            self.transform_axis(data, a, false);
        }
    }
}

/// Copy a real field into a complex buffer.
pub fn lift<T: Real>(real: &[T], out: &mut [Complex<T>]) {
    for (dst, &src) in out.iter_mut().zip(real.iter()) {
        *dst = Complex::new(src, T::zero());
    }
}

/// Keep the real part of a complex field.
pub fn real_part<T: Real>(cplx: &[Complex<T>], out: &mut [T]) {
    for (dst, src) in out.iter_mut().zip(cplx.iter()) {
        *dst = src.re;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(Grid::new(&[]), Err(GridError::Empty));
        assert_eq!(
            Grid::new(&[4, 1]),
            Err(GridError::AxisTooSmall { axis: 1, res: 1 })
        );
        assert_eq!(
            Grid::new(&[4, 4, 4, 4, 4]),
            Err(GridError::TooManyAxes { n: 5 })
        );
    }

    #[test]
    fn coords_index_roundtrip() {
        let g = Grid::new(&[4, 6]).unwrap();
        assert_eq!(g.len(), 4 * 4 * 6 * 6);
        let mut c = [0usize; 4];
        for i in (0..g.len()).step_by(7) {
            g.coords(i, &mut c);
            assert_eq!(g.index(&c), i);
        }
    }

    #[test]
    fn signed_frequencies_fold_nyquist_down() {
        assert_eq!(
            (0..4).map(|i| signed_freq(i, 4)).collect::<Vec<_>>(),
            vec![0, 1, -2, -1]
        );
        assert_eq!(
            (0..5).map(|i| signed_freq(i, 5)).collect::<Vec<_>>(),
            vec![0, 1, 2, -2, -1]
        );
        // derivative frequencies drop the Nyquist line on even axes
        assert_eq!(
            (0..4).map(|i| deriv_freq(i, 4)).collect::<Vec<_>>(),
            vec![0, 1, 0, -1]
        );
        assert_eq!(
            (0..5).map(|i| deriv_freq(i, 5)).collect::<Vec<_>>(),
            vec![0, 1, 2, -2, -1]
        );
    }

    #[test]
    fn fft_roundtrip_is_identity() {
        let g = Grid::new(&[4, 6]).unwrap();
        let mut eng = SpectralEngine::<f64>::new(g);
        let len = eng.grid().len();
        let mut data: Vec<Complex<f64>> = (0..len)
            .map(|i| Complex::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let orig = data.clone();
        eng.forward(&mut data);
        eng.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_mode_is_the_mean() {
        let g = Grid::new(&[4]).unwrap();
        let mut eng = SpectralEngine::<f64>::new(g);
        let len = eng.grid().len();
        let mut data: Vec<Complex<f64>> = (0..len)
            .map(|i| Complex::new(3.0 + (i as f64).sin(), 0.0))
            .collect();
        let mean: f64 = data.iter().map(|v| v.re).sum::<f64>() / len as f64;
        eng.forward(&mut data);
        assert!((data[0].re - mean).abs() < 1e-13);
        assert!(data[0].im.abs() < 1e-15);
    }

    #[test]
    fn holomorphic_derivative_of_cosine_line() {
        // φ = cos(2π x_0) on an n=1 grid; ∂/∂z φ = −π sin(2π x_0).
        let g = Grid::new(&[8]).unwrap();
        let mut eng = SpectralEngine::<f64>::new(g.clone());
        let len = g.len();
        let mut pt = [0.0f64; 2];
        let mut data = vec![Complex::new(0.0, 0.0); len];
        for i in 0..len {
            g.point(i, &mut pt);
            data[i] = Complex::new((2.0 * std::f64::consts::PI * pt[0]).cos(), 0.0);
        }
        eng.forward(&mut data);
        let c = eng.c_table().to_vec();
        for (i, v) in data.iter_mut().enumerate() {
            *v *= c[i];
        }
        eng.inverse(&mut data);
        for i in 0..len {
            g.point(i, &mut pt);
            let expect = -std::f64::consts::PI * (2.0 * std::f64::consts::PI * pt[0]).sin();
            assert!((data[i].re - expect).abs() < 1e-12, "point {i}");
            assert!(data[i].im.abs() < 1e-12);
        }
    }

    #[test]
    fn alias_free_bandwidth_is_strict() {
        let g = Grid::new(&[8, 8]).unwrap();
        // 3-fold products need 3b < 4 ⇒ b = 1
        assert_eq!(g.alias_free_bandwidth(3), 1);
        assert_eq!(g.alias_free_bandwidth(1), 3);
        let g = Grid::new(&[16, 16]).unwrap();
        assert_eq!(g.alias_free_bandwidth(2), 3);
    }
}
