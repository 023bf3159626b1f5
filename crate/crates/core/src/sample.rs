//! Seeded random data: band-limited potentials, admissible states, cone
//! spectra, backgrounds and twist forms.
//!
//! Everything is driven by a caller-supplied ChaCha generator so that sweeps
//! are reproducible bit-for-bit from a single seed. Band limits are imposed
//! spectrally (a hard cutoff per real axis), which keeps products of a few
//! sampled fields alias-free on the grid — the regime in which the discrete
//! Stokes identities of the field layer are exact.

use crate::field::{
    evaluate_state_guarded, normalize_sup_zero, sup, FieldError, TorusBackground, TwistForm,
    Workspace,
};
use crate::grid::{signed_freq, Grid, SpectralEngine};
use crate::linalg::{self, C};
use crate::scalar::Real;
use crate::symcone::{cone_class, EigenSpectrum};
use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// The RNG used across the crate for reproducible sampling.
pub type SampleRng = ChaCha8Rng;

/// Fresh generator from a seed.
pub fn rng(seed: u64) -> SampleRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random real field with all per-axis frequencies bounded by `bandwidth`
/// (strictly below Nyquist) and sup-norm `amplitude`, mean zero.
pub fn band_limited<T: Real>(
    grid: &Grid,
    bandwidth: usize,
    amplitude: T,
    rng: &mut SampleRng,
) -> Vec<T> {
    let len = grid.len();
    let mut engine = SpectralEngine::<T>::new(grid.clone());
    let mut data: Vec<Complex<T>> = (0..len)
        .map(|_| Complex::new(T::of(rng.gen_range(-1.0..1.0)), T::zero()))
        .collect();
    engine.forward(&mut data);
    let mut coords = vec![0usize; 2 * grid.n()];
    for i in 0..len {
        grid.coords(i, &mut coords);
        let mut keep = i != 0;
        for (a, &c) in coords.iter().enumerate() {
            let m = signed_freq(c, grid.shape()[a]);
            // the band must avoid the Nyquist line even when bandwidth = N/2
            if m.unsigned_abs() as usize > bandwidth || 2 * c == grid.shape()[a] {
                keep = false;
                break;
            }
        }
        if !keep {
            data[i] = Complex::new(T::zero(), T::zero());
        }
    }
    engine.inverse(&mut data);
    let mut out: Vec<T> = data.iter().map(|v| v.re).collect();
    let mut peak = T::zero();
    for &v in &out {
        peak = peak.max(v.abs());
    }
    if peak > T::zero() {
        let s = amplitude / peak;
        for v in out.iter_mut() {
            *v = *v * s;
        }
    }
    out
}

/// Band-limited potential shrunk until ω_φ sits safely inside the Γ_k cone
/// at every grid point (margin-guarded). Returns the admissible field.
pub fn admissible_potential<T: Real>(
    bg: &TorusBackground<T>,
    ws: &mut Workspace<T>,
    k: usize,
    bandwidth: usize,
    amplitude: T,
    rng: &mut SampleRng,
) -> Result<Vec<T>, FieldError> {
    let mut phi = band_limited(bg.grid(), bandwidth, amplitude, rng);
    let margin = T::of(1e-6);
    for _ in 0..60 {
        match evaluate_state_guarded(bg, ws, k, &phi, margin) {
            Ok(_) => return Ok(phi),
            Err(FieldError::ConeViolation { .. }) => {
                for v in phi.iter_mut() {
                    *v = *v * T::of(0.5);
                }
            }
            Err(e) => return Err(e),
        }
    }
    // fully flat is always admissible
    for v in phi.iter_mut() {
        *v = T::zero();
    }
    Ok(phi)
}

/// Random eigenvalue vector in the open cone Γ_k (rejection sampling from a
/// box biased toward the boundary when k < n).
pub fn cone_spectrum<T: Real>(n: usize, k: usize, rng: &mut SampleRng) -> EigenSpectrum<T> {
    loop {
        let lo = if k < n { -1.5 } else { 0.02 };
        let vals: Vec<T> = (0..n)
            .map(|_| T::of(rng.gen_range(lo..3.0)))
            .collect();
        let spec = match EigenSpectrum::new(vals) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if cone_class(&spec, T::of(1e-9)).admits(k) {
            return spec;
        }
    }
}

/// Random Hermitian n×n matrix with entries of the given scale.
pub fn hermitian_matrix<T: Real>(n: usize, scale: T, rng: &mut SampleRng) -> Vec<C<T>> {
    let mut a = vec![Complex::new(T::zero(), T::zero()); n * n];
    for r in 0..n {
        a[linalg::idx(n, r, r)] = Complex::new(scale * T::of(rng.gen_range(-1.0..1.0)), T::zero());
        for c in r + 1..n {
            let v = Complex::new(
                scale * T::of(rng.gen_range(-1.0..1.0)),
                scale * T::of(rng.gen_range(-1.0..1.0)),
            );
            a[linalg::idx(n, r, c)] = v;
            a[linalg::idx(n, c, r)] = v.conj();
        }
    }
    a
}

/// Random positive background: identity plus a strictly diagonally dominated
/// Hermitian perturbation.
pub fn background<T: Real>(
    res: &[usize],
    spread: f64,
    rng: &mut SampleRng,
) -> Result<TorusBackground<T>, FieldError> {
    let n = res.len();
    let s = spread.min(0.9) / (2.0 * n as f64);
    let mut w = hermitian_matrix(n, T::of(s), rng);
    for i in 0..n {
        w[linalg::idx(n, i, i)] =
            Complex::new(T::one() + T::of(rng.gen_range(0.0..spread.min(0.9))), T::zero());
    }
    TorusBackground::new(res, &w)
}

/// Random closed twist form: constant Hermitian part of the given scale plus
/// i∂∂̄ of a band-limited potential.
pub fn twist<T: Real>(
    bg: &TorusBackground<T>,
    ws: &mut Workspace<T>,
    scale: T,
    bandwidth: usize,
    rng: &mut SampleRng,
) -> Result<TwistForm<T>, FieldError> {
    let n = bg.n();
    let a = hermitian_matrix(n, scale, rng);
    let beta = band_limited(bg.grid(), bandwidth, scale * T::of(0.1), rng);
    TwistForm::new(bg, ws, &a, &beta)
}

/// Mean-zero unit-sup direction field, band-limited.
pub fn direction<T: Real>(grid: &Grid, bandwidth: usize, rng: &mut SampleRng) -> Vec<T> {
    let mut psi = band_limited(grid, bandwidth, T::one(), rng);
    let m = crate::field::mean(&psi);
    for v in psi.iter_mut() {
        *v = *v - m;
    }
    let s = sup(&psi).max(T::of(1e-30));
    for v in psi.iter_mut() {
        *v = *v / s;
    }
    psi
}

/// Convenience: admissible potential normalized to sup φ = 0 (the gauge used
/// by the coupled system).
pub fn admissible_normalized<T: Real>(
    bg: &TorusBackground<T>,
    ws: &mut Workspace<T>,
    k: usize,
    bandwidth: usize,
    amplitude: T,
    rng: &mut SampleRng,
) -> Result<Vec<T>, FieldError> {
    let mut phi = admissible_potential(bg, ws, k, bandwidth, amplitude, rng)?;
    normalize_sup_zero(&mut phi);
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::evaluate_state;

    #[test]
    fn same_seed_same_field() {
        let grid = Grid::new(&[8, 8]).unwrap();
        let a = band_limited::<f64>(&grid, 2, 0.5, &mut rng(7));
        let b = band_limited::<f64>(&grid, 2, 0.5, &mut rng(7));
        assert_eq!(a, b);
        let c = band_limited::<f64>(&grid, 2, 0.5, &mut rng(8));
        assert_ne!(a, c);
    }

    #[test]
    fn band_limit_is_respected() {
        let grid = Grid::new(&[8]).unwrap();
        let f = band_limited::<f64>(&grid, 2, 1.0, &mut rng(3));
        let mut engine = SpectralEngine::<f64>::new(grid.clone());
        let mut data: Vec<Complex<f64>> = f.iter().map(|&x| Complex::new(x, 0.0)).collect();
        engine.forward(&mut data);
        let mut coords = vec![0usize; 2];
        for i in 0..grid.len() {
            grid.coords(i, &mut coords);
            let bad = coords
                .iter()
                .enumerate()
                .any(|(a, &c)| signed_freq(c, grid.shape()[a]).unsigned_abs() > 2);
            if bad || i == 0 {
                assert!(data[i].norm() < 1e-14, "mode {i} leaked");
            }
        }
        assert!((sup(&f.iter().map(|x| x.abs()).collect::<Vec<_>>()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_potentials_are_admissible() {
        let bg = background::<f64>(&[6, 6], 0.4, &mut rng(11)).unwrap();
        let mut ws = Workspace::new(&bg);
        let mut r = rng(12);
        for k in 1..=2 {
            let phi = admissible_potential(&bg, &mut ws, k, 1, 0.4, &mut r).unwrap();
            assert!(evaluate_state(&bg, &mut ws, k, &phi).is_ok());
        }
    }

    #[test]
    fn cone_spectra_land_in_the_cone() {
        let mut r = rng(5);
        for _ in 0..50 {
            let s = cone_spectrum::<f64>(3, 2, &mut r);
            assert!(cone_class(&s, 0.0).admits(2));
        }
    }
}
