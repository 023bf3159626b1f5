//! Elementary symmetric polynomials and the positivity cones Γ_k.
//!
//! For λ ∈ ℝⁿ write σ_k(λ) for the k-th elementary symmetric polynomial,
//! with σ_0 = 1 and σ_k = 0 for k < 0. The open cone
//!
//! ```text
//!     Γ_k = { λ ∈ ℝⁿ : σ_1(λ) > 0, …, σ_k(λ) > 0 }
//! ```
//!
//! is where the k-Hessian operator is elliptic; everything downstream
//! (admissibility of potentials, the metric G, the energy) is phrased in
//! terms of σ_k on relative eigenvalue spectra. The kernel is generic over
//! [`Ring`] so that every inequality asserted here can be replayed in exact
//! rational arithmetic on the same inputs.
//!
//! Evaluation uses the stable one-row recurrence (prepend one entry at a
//! time): all intermediate quantities live in the cone closure for cone
//! inputs, and no subset enumeration is performed.

use crate::scalar::{Real, Ring};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SymconeError {
    #[error("degree {k} out of range for dimension {n}")]
    DegreeOutOfRange { k: usize, n: usize },
    #[error("dropped index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dropped indices must be distinct (saw {index} twice)")]
    RepeatedIndex { index: usize },
    #[error("spectrum contains a non-finite entry at position {index}")]
    NonFiniteEntry { index: usize },
    #[error("spectrum lies outside Γ_{k}: σ_{failed_degree} is not positive")]
    ConeViolation { k: usize, failed_degree: usize },
    #[error("empty spectrum")]
    Empty,
}

/// A point of ℝⁿ thought of as a (relative) eigenvalue spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum<S: Ring> {
    values: Vec<S>,
}

impl<S: Ring> EigenSpectrum<S> {
    pub fn new(values: Vec<S>) -> Result<Self, SymconeError> {
        if values.is_empty() {
            return Err(SymconeError::Empty);
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite_val() {
                return Err(SymconeError::NonFiniteEntry { index: i });
            }
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }
}

/// σ_0..σ_m of an arbitrary slice by the one-row prepend recurrence.
/// Entries beyond the slice length come out as zero, matching the σ_j = 0
/// convention for j > n.
pub(crate) fn elementary_row<S: Ring>(values: &[S], m: usize) -> Vec<S> {
    let mut e = vec![S::zero(); m + 1];
    e[0] = S::one();
    for x in values {
        for j in (1..=m).rev() {
            let add = x.clone() * e[j - 1].clone();
            e[j] = e[j].clone() + add;
        }
    }
    e
}

/// σ_k(λ). Degree must satisfy 0 ≤ k ≤ n.
pub fn sigma<S: Ring>(k: usize, lambda: &EigenSpectrum<S>) -> Result<S, SymconeError> {
    let n = lambda.n();
    if k > n {
        return Err(SymconeError::DegreeOutOfRange { k, n });
    }
    Ok(elementary_row(lambda.values(), k).pop().expect("row"))
}

/// σ_0(λ)..σ_k(λ) in one pass.
pub fn sigma_all<S: Ring>(k: usize, lambda: &EigenSpectrum<S>) -> Result<Vec<S>, SymconeError> {
    let n = lambda.n();
    if k > n {
        return Err(SymconeError::DegreeOutOfRange { k, n });
    }
    Ok(elementary_row(lambda.values(), k))
}

fn check_drops(n: usize, drop: &[usize]) -> Result<(), SymconeError> {
    for (a, &i) in drop.iter().enumerate() {
        if i >= n {
            return Err(SymconeError::IndexOutOfRange { index: i, n });
        }
        if drop[..a].contains(&i) {
            return Err(SymconeError::RepeatedIndex { index: i });
        }
    }
    Ok(())
}

/// σ_k(λ | drop): the symmetric polynomial of the spectrum with the listed
/// entries removed. `k` may exceed the reduced length, in which case the
/// value is zero; `k > n` is still a domain error.
pub fn sigma_minus<S: Ring>(
    k: usize,
    drop: &[usize],
    lambda: &EigenSpectrum<S>,
) -> Result<S, SymconeError> {
    let n = lambda.n();
    if k > n {
        return Err(SymconeError::DegreeOutOfRange { k, n });
    }
    check_drops(n, drop)?;
    let reduced: Vec<S> = lambda
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| !drop.contains(i))
        .map(|(_, v)| v.clone())
        .collect();
    Ok(elementary_row(&reduced, k).pop().expect("row"))
}

/// All deletion values σ_{k-1,i}(λ) for i = 0..n at once.
/// These are the diagonal entries of the metric G (up to σ_k) and the
/// partial derivatives ∂σ_k/∂λ_i.
pub fn sigma_deleted_each<S: Ring>(
    k: usize,
    lambda: &EigenSpectrum<S>,
) -> Result<Vec<S>, SymconeError> {
    let n = lambda.n();
    if k == 0 || k > n {
        return Err(SymconeError::DegreeOutOfRange { k, n });
    }
    (0..n)
        .map(|i| sigma_minus(k - 1, &[i], lambda))
        .collect()
}

/// Result of classifying a spectrum against the cone ladder
/// Γ_1 ⊃ Γ_2 ⊃ … ⊃ Γ_n.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeClass {
    /// Largest k with λ ∈ Γ_k (0 if λ ∉ Γ_1).
    pub k_max: usize,
}

impl ConeClass {
    pub fn admits(&self, k: usize) -> bool {
        k <= self.k_max
    }
}

/// Classify λ against the cone ladder. Positivity of σ_j is tested against
/// the scale-aware margin `margin · max(1, |λ|_∞)^j`; pass zero margin for a
/// strict classification (the only sensible margin in exact arithmetic).
pub fn cone_class<S: Ring>(lambda: &EigenSpectrum<S>, margin: S) -> ConeClass {
    let n = lambda.n();
    let mut sup = S::zero();
    for v in lambda.values() {
        let a = v.abs();
        if a > sup {
            sup = a;
        }
    }
    if sup < S::one() {
        sup = S::one();
    }
    let sigmas = elementary_row(lambda.values(), n);
    let mut k_max = 0;
    let mut threshold = S::one();
    for (j, s) in sigmas.iter().enumerate().skip(1) {
        threshold = threshold * sup.clone();
        if *s > margin.clone() * threshold.clone() {
            k_max = j;
        } else {
            break;
        }
    }
    ConeClass { k_max }
}

fn require_cone<S: Ring>(
    k: usize,
    lambda: &EigenSpectrum<S>,
    what: &EigenSpectrum<S>,
) -> Result<(), SymconeError> {
    debug_assert_eq!(lambda.n(), what.n());
    let sigmas = elementary_row(what.values(), k);
    for (j, s) in sigmas.iter().enumerate().skip(1) {
        if !(*s > S::zero()) {
            return Err(SymconeError::ConeViolation {
                k,
                failed_degree: j,
            });
        }
    }
    let _ = lambda;
    Ok(())
}

/// The polarized pairing Σ_i μ_i σ_{k-1,i}(λ).
///
/// Both arguments must lie in Γ_k. For μ = λ this is the Euler identity
/// k·σ_k(λ); in general it dominates k·σ_k(μ)^{1/k}·σ_k(λ)^{(k-1)/k}
/// (Garding's inequality for the hyperbolic polynomial σ_k, with the
/// implemented constant k, sharp on the diagonal).
pub fn garding_pairing<S: Ring>(
    k: usize,
    mu: &EigenSpectrum<S>,
    lambda: &EigenSpectrum<S>,
) -> Result<S, SymconeError> {
    let n = lambda.n();
    if k == 0 || k > n {
        return Err(SymconeError::DegreeOutOfRange { k, n });
    }
    if mu.n() != n {
        return Err(SymconeError::DegreeOutOfRange { k, n: mu.n() });
    }
    require_cone(k, lambda, lambda)?;
    require_cone(k, lambda, mu)?;
    let deleted = sigma_deleted_each(k, lambda)?;
    let mut acc = S::zero();
    for (m, d) in mu.values().iter().zip(deleted) {
        acc = acc + m.clone() * d;
    }
    Ok(acc)
}

/// Ratio of the Garding pairing to its lower bound
/// k·σ_k(μ)^{1/k}·σ_k(λ)^{(k-1)/k}; the inequality says this is ≥ 1.
pub fn garding_ratio<T: Real>(
    k: usize,
    mu: &EigenSpectrum<T>,
    lambda: &EigenSpectrum<T>,
) -> Result<T, SymconeError> {
    let pairing = garding_pairing(k, mu, lambda)?;
    let sk_mu = sigma(k, mu)?;
    let sk_la = sigma(k, lambda)?;
    let kf = T::of(k as f64);
    let bound = kf * sk_mu.powf(kf.recip()) * sk_la.powf((kf - T::one()) / kf);
    Ok(pairing / bound)
}

/// The concavity coefficient of Lemma-type second-derivative bounds:
///
/// ```text
///     σ_{k-2,ij}(λ) − σ_{k-1,i}(λ)·σ_{k-1,j}(λ) / σ_k(λ)
/// ```
///
/// for i ≠ j, which is ≤ 0 on Γ_k. For k = 1 the first term is σ_{-1} = 0
/// and the value is −1/σ_1.
pub fn lemma22_coefficient<S: Ring>(
    k: usize,
    i: usize,
    j: usize,
    lambda: &EigenSpectrum<S>,
) -> Result<S, SymconeError> {
    let n = lambda.n();
    if k == 0 || k > n {
        return Err(SymconeError::DegreeOutOfRange { k, n });
    }
    if i == j {
        return Err(SymconeError::RepeatedIndex { index: i });
    }
    check_drops(n, &[i, j])?;
    require_cone(k, lambda, lambda)?;
    let skm2_ij = if k >= 2 {
        sigma_minus(k - 2, &[i, j], lambda)?
    } else {
        S::zero()
    };
    let skm1_i = sigma_minus(k - 1, &[i], lambda)?;
    let skm1_j = sigma_minus(k - 1, &[j], lambda)?;
    let sk = sigma(k, lambda)?;
    Ok(skm2_ij - skm1_i * skm1_j / sk)
}

/// Two sides of the Newton inequality on the doubly-deleted spectrum:
/// σ_{k-2,ij}·σ_{k,ij} ≤ σ_{k-1,ij}², valid for every real spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonCheck<S> {
    pub lhs: S,
    pub rhs: S,
}

impl<S: Ring> NewtonCheck<S> {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// Evaluate the Newton inequality σ_{k-2,ij}σ_{k,ij} ≤ σ_{k-1,ij}² used to
/// prove non-positivity of [`lemma22_coefficient`]. No cone assumption: the
/// inequality holds for arbitrary real spectra.
pub fn newton_check<S: Ring>(
    k: usize,
    i: usize,
    j: usize,
    lambda: &EigenSpectrum<S>,
) -> Result<NewtonCheck<S>, SymconeError> {
    let n = lambda.n();
    if k == 0 || k > n {
        return Err(SymconeError::DegreeOutOfRange { k, n });
    }
    if i == j {
        return Err(SymconeError::RepeatedIndex { index: i });
    }
    check_drops(n, &[i, j])?;
    let reduced: Vec<S> = lambda
        .values()
        .iter()
        .enumerate()
        .filter(|(m, _)| *m != i && *m != j)
        .map(|(_, v)| v.clone())
        .collect();
    let row = elementary_row(&reduced, k);
    let skm2 = if k >= 2 { row[k - 2].clone() } else { S::zero() };
    let skm1 = row[k - 1].clone();
    let sk = row[k].clone();
    Ok(NewtonCheck {
        lhs: skm2 * sk,
        rhs: skm1.clone() * skm1,
    })
}

/// binomial(n, k) as f64-convertible integer (desk-scale n).
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// det G · σ_k^{n/k} for the diagonal metric g_i = σ_{k-1,i}/σ_k, i.e.
///
/// ```text
///     (Π_i σ_{k-1,i}(λ) / σ_k(λ)^n) · σ_k(λ)^{n/k}
/// ```
///
/// Evaluated in log space; requires λ ∈ Γ_k. On Γ_k the value is bounded
/// below by (k/n)^n (Garding), equals (k/n)^n·binom(n,k)^{n/k} at
/// λ = (1,…,1), and is identically 1 for k = n.
pub fn detg_lower_bound_ratio<T: Real>(
    k: usize,
    lambda: &EigenSpectrum<T>,
) -> Result<T, SymconeError> {
    let n = lambda.n();
    if k == 0 || k > n {
        return Err(SymconeError::DegreeOutOfRange { k, n });
    }
    require_cone(k, lambda, lambda)?;
    let sk = sigma(k, lambda)?;
    let deleted = sigma_deleted_each(k, lambda)?;
    let mut log_acc = T::zero();
    for d in &deleted {
        if !(*d > T::zero()) {
            // σ_{k-1,i} > 0 on Γ_k; a non-positive value here means the
            // input sits on the cone boundary within rounding.
            return Err(SymconeError::ConeViolation {
                k,
                failed_degree: k - 1,
            });
        }
        log_acc = log_acc + d.ln();
    }
    let nf = T::of(n as f64);
    let kf = T::of(k as f64);
    Ok((log_acc - (nf - nf / kf) * sk.ln()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::exact;
    use num::BigRational;

    fn sp(v: &[f64]) -> EigenSpectrum<f64> {
        EigenSpectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sigma_low_degrees() {
        let l = sp(&[1.0, 1.0, 1.0]);
        assert_eq!(sigma(0, &l).unwrap(), 1.0);
        assert_eq!(sigma(1, &l).unwrap(), 3.0);
        assert_eq!(sigma(2, &l).unwrap(), 3.0);
        assert_eq!(sigma(3, &l).unwrap(), 1.0);
        assert_eq!(
            sigma(4, &l),
            Err(SymconeError::DegreeOutOfRange { k: 4, n: 3 })
        );
    }

    #[test]
    fn sigma_minus_drops_entries() {
        let l = sp(&[1.0, 1.0, 1.0]);
        for i in 0..3 {
            assert_eq!(sigma_minus(1, &[i], &l).unwrap(), 2.0);
        }
        assert_eq!(sigma_minus(1, &[0, 2], &l).unwrap(), 1.0);
        assert_eq!(
            sigma_minus(1, &[0, 0], &l),
            Err(SymconeError::RepeatedIndex { index: 0 })
        );
        assert_eq!(
            sigma_minus(1, &[3], &l),
            Err(SymconeError::IndexOutOfRange { index: 3, n: 3 })
        );
        // degree above the reduced length is zero, not an error
        assert_eq!(sigma_minus(2, &[0, 1], &l).unwrap(), 0.0);
    }

    #[test]
    fn euler_identity_at_diagonal() {
        let l = sp(&[0.7, 1.3, 2.1, 0.4]);
        for k in 1..=4usize {
            let pairing = garding_pairing(k, &l, &l).unwrap();
            let sk = sigma(k, &l).unwrap();
            assert!((pairing - k as f64 * sk).abs() <= 1e-12 * (1.0 + sk.abs()));
        }
    }

    #[test]
    fn garding_rejects_cone_violations() {
        let inside = sp(&[1.0, 1.0, 1.0]);
        let outside = sp(&[-1.0, -1.0, 5.0]); // σ_1 = 3 > 0, σ_2 = -9 < 0
        assert!(garding_pairing(2, &outside, &inside).is_err());
        assert!(garding_pairing(2, &inside, &outside).is_err());
        assert!(garding_pairing(1, &outside, &inside).is_ok());
    }

    #[test]
    fn lemma22_frozen_values() {
        // n = 3, k = 2, λ = (1,1,1): σ_{0,ij} − σ_{1,i}σ_{1,j}/σ_2 = 1 − 4/3
        let l = sp(&[1.0, 1.0, 1.0]);
        let c = lemma22_coefficient(2, 0, 1, &l).unwrap();
        assert!((c - (-1.0 / 3.0)).abs() < 1e-15);
        // k = 1 collapses to −1/σ_1
        let c1 = lemma22_coefficient(1, 0, 2, &l).unwrap();
        assert!((c1 - (-1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(
            lemma22_coefficient(2, 1, 1, &l),
            Err(SymconeError::RepeatedIndex { index: 1 })
        );
    }

    #[test]
    fn lemma22_exact_equality_case() {
        // k = n = 2: σ_{0,ij} − σ_{1,i}σ_{1,j}/σ_2 = 1 − λ_2λ_1/(λ_1λ_2) = 0,
        // detected exactly in rationals.
        let l = EigenSpectrum::new(vec![exact(0.75), exact(2.5)]).unwrap();
        let c = lemma22_coefficient(2, 0, 1, &l).unwrap();
        assert_eq!(c, BigRational::from_integer(0.into()));
    }

    #[test]
    fn newton_check_degenerate_degrees() {
        let l = sp(&[1.0, 2.0]);
        // n = 2, k = 2: both sides on the empty spectrum are 0·0 vs 0²
        let c = newton_check(2, 0, 1, &l).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
        assert!(c.holds());
        let c1 = newton_check(1, 0, 1, &l).unwrap();
        assert_eq!((c1.lhs, c1.rhs), (0.0, 1.0));
    }

    #[test]
    fn cone_class_ladder() {
        assert_eq!(cone_class(&sp(&[1.0, 1.0, 1.0]), 0.0).k_max, 3);
        assert_eq!(cone_class(&sp(&[-0.4, 1.0, 1.0]), 0.0).k_max, 2);
        assert_eq!(cone_class(&sp(&[-1.0, -1.0, 5.0]), 0.0).k_max, 1);
        assert_eq!(cone_class(&sp(&[-1.0, 0.0, 0.5]), 0.0).k_max, 0);
        // the margin is scale aware: scaling λ must not change the verdict
        let l = sp(&[1e6, 1e6, -0.4e6]);
        assert_eq!(cone_class(&l, 1e-10).k_max, 2);
    }

    #[test]
    fn detg_ratio_reference_points() {
        // λ = (1,…,1): (k/n)^n · binom(n,k)^{n/k}
        for n in 1..=6usize {
            let l = sp(&vec![1.0; n]);
            for k in 1..=n {
                let want = (k as f64 / n as f64).powi(n as i32)
                    * (binomial(n, k) as f64).powf(n as f64 / k as f64);
                let got = detg_lower_bound_ratio(k, &l).unwrap();
                assert!(
                    (got - want).abs() <= 1e-12 * want,
                    "n={n} k={k}: {got} vs {want}"
                );
            }
        }
        // k = n: identically one, independent of λ
        let l = sp(&[0.3, 1.7, 4.2]);
        let r = detg_lower_bound_ratio(3, &l).unwrap();
        assert!((r - 1.0).abs() < 1e-13);
    }

    #[test]
    fn binomial_small_table() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(4, 0), 1);
        assert_eq!(binomial(4, 5), 0);
    }
}
