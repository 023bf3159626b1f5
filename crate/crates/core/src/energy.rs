//! The Hessian Mabuchi energy μ_k, its twisted variant and its variations.
//!
//! For a potential φ with admissible ω_φ, a slope parameter λ and a closed
//! twist form α, the functional splits into three pieces (V = ∫ωⁿ):
//!
//! ```text
//! entropy = (1/V) ∫ (log[ω_φ^k∧ω^{n-k}/ωⁿ·C(n,k)⁻¹·…] + λφ) ω_φ^k∧ω^{n-k}
//! j-part  = λ/(V(k+1)) ∫ φ Σ_{j=0}^{k} ω_φ^{k-j}∧ω^{n-k+j}
//! twist   = (1/V) ∫ φ Σ_{j=1}^{k} (α − λω)∧ω_φ^{k-j}∧ω^{n-k+j-1}
//! μ_k     = entropy − j-part − twist
//! ```
//!
//! On the flat torus the background Ricci form vanishes, so the untwisted
//! functional is the α = 0 case; the canonical slope is λ = ᾱ/k. Critical
//! points satisfy Riĉ(ω_φ) + α = λω_φ against ω_φ^{k-1}∧ω^{n-k}, and the
//! first/second variations implemented here are the closed-form expressions
//! used to cross-check finite differences of μ_k itself.

use crate::field::{
    alpha_bar, evaluate_state, laplace_g, metric_pair, wedge_integral, FieldError,
    HermitianField, HessianState, TorusBackground, TwistForm, WedgeFactor, Workspace,
};
use crate::linalg;
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Decomposition of one μ_k evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport<T> {
    pub k: usize,
    pub lambda: T,
    pub alpha_bar: T,
    pub entropy_term: T,
    pub j_term: T,
    pub twist_term: T,
    pub value: T,
}

/// Evaluate μ_k. `lambda = None` picks the canonical slope ᾱ/k (zero when
/// there is no twist).
pub fn mu_k<T: Real>(
    bg: &TorusBackground<T>,
    ws: &mut Workspace<T>,
    k: usize,
    phi: &[T],
    twist: Option<&TwistForm<T>>,
    lambda: Option<T>,
) -> Result<EnergyReport<T>, FieldError> {
    let state = evaluate_state(bg, ws, k, phi)?;
    mu_k_of_state(bg, &state, phi, twist, lambda)
}

/// μ_k from an already-evaluated state (the state must belong to `phi`).
pub fn mu_k_of_state<T: Real>(
    bg: &TorusBackground<T>,
    state: &HessianState<T>,
    phi: &[T],
    twist: Option<&TwistForm<T>>,
    lambda: Option<T>,
) -> Result<EnergyReport<T>, FieldError> {
    let k = state.k;
    let n = bg.n();
    let v = bg.volume();
    let ab = match twist {
        Some(t) => alpha_bar(bg, state, t)?,
        None => T::zero(),
    };
    let lam = lambda.unwrap_or(ab / T::of(k as f64));

    // entropy: weight log(ratio) + λφ against ω_φ^k∧ω^{n-k}
    let weight: Vec<T> = state
        .f
        .iter()
        .zip(phi.iter())
        .map(|(&f, &p)| f + lam * p)
        .collect();
    let entropy_term = wedge_integral(
        bg,
        Some(&weight),
        &[
            (WedgeFactor::State(state), k),
            (WedgeFactor::Background, n - k),
        ],
    )? / v;

    // the mixed-volume ladder ∫φ·ω_φ^{k-j}∧ω^{n-k+j}, j = 0..k
    let mut ladder = Vec::with_capacity(k + 1);
    for j in 0..=k {
        ladder.push(wedge_integral(
            bg,
            Some(phi),
            &[
                (WedgeFactor::State(state), k - j),
                (WedgeFactor::Background, n - k + j),
            ],
        )?);
    }
    let ladder_sum = {
        let mut acc = T::zero();
        for &x in &ladder {
            acc = acc + x;
        }
        acc
    };
    let j_term = lam * ladder_sum / (v * T::of((k + 1) as f64));

    // twist ladder ∫φ·(α−λω)∧ω_φ^{k-j}∧ω^{n-k+j-1}, j = 1..k
    let mut twist_term = T::zero();
    for j in 1..=k {
        let alpha_piece = match twist {
            Some(t) => wedge_integral(
                bg,
                Some(phi),
                &[
                    (WedgeFactor::Twist(t), 1),
                    (WedgeFactor::State(state), k - j),
                    (WedgeFactor::Background, n - k + j - 1),
                ],
            )?,
            None => T::zero(),
        };
        twist_term = twist_term + alpha_piece - lam * ladder[j];
    }
    twist_term = twist_term / v;

    Ok(EnergyReport {
        k,
        lambda: lam,
        alpha_bar: ab,
        entropy_term,
        j_term,
        twist_term,
        value: entropy_term - j_term - twist_term,
    })
}

/// Closed-form first variation of μ_k at φ in direction φ̇:
///
/// ```text
/// δμ_k(φ̇) = −(k/V) ∫ φ̇ (Riĉ(ω_φ) + α − λω_φ)∧ω_φ^{k-1}∧ω^{n-k}
/// ```
pub fn first_variation<T: Real>(
    bg: &TorusBackground<T>,
    ws: &mut Workspace<T>,
    k: usize,
    phi: &[T],
    phidot: &[T],
    twist: Option<&TwistForm<T>>,
    lambda: Option<T>,
) -> Result<T, FieldError> {
    let state = evaluate_state(bg, ws, k, phi)?;
    let n = bg.n();
    let v = bg.volume();
    let lam = match lambda {
        Some(l) => l,
        None => match twist {
            Some(t) => alpha_bar(bg, &state, t)? / T::of(k as f64),
            None => T::zero(),
        },
    };
    let ric = crate::field::generalized_ricci(&state, ws);
    let mut acc = wedge_integral(
        bg,
        Some(phidot),
        &[
            (WedgeFactor::Form(&ric), 1),
            (WedgeFactor::State(&state), k - 1),
            (WedgeFactor::Background, n - k),
        ],
    )?;
    if let Some(t) = twist {
        acc = acc
            + wedge_integral(
                bg,
                Some(phidot),
                &[
                    (WedgeFactor::Twist(t), 1),
                    (WedgeFactor::State(&state), k - 1),
                    (WedgeFactor::Background, n - k),
                ],
            )?;
    }
    acc = acc
        - lam
            * wedge_integral(
                bg,
                Some(phidot),
                &[
                    (WedgeFactor::State(&state), k),
                    (WedgeFactor::Background, n - k),
                ],
            )?;
    Ok(-T::of(k as f64) * acc / v)
}

/// Closed-form second variation of the untwisted μ_k along a path through φ
/// with velocity φ̇ and acceleration φ̈:
///
/// ```text
/// d²μ_k/dt² = −(k/V)∫(φ̈−|∂φ̇|²_G)(Riĉ−λω_φ)∧ω_φ^{k-1}∧ω^{n-k}
///             + (1/V)∫(Δ_G φ̇)² ω_φ^k∧ω^{n-k}
///             − (k(k−1)/V)∫ i∂φ̇∧∂̄φ̇∧Riĉ∧ω_φ^{k-2}∧ω^{n-k}
///             − (k/V)∫|∂φ̇|²_G Riĉ∧ω_φ^{k-1}∧ω^{n-k}
/// ```
pub fn second_variation<T: Real>(
    bg: &TorusBackground<T>,
    ws: &mut Workspace<T>,
    k: usize,
    phi: &[T],
    phidot: &[T],
    phiddot: &[T],
    lambda: T,
) -> Result<T, FieldError> {
    let state = evaluate_state(bg, ws, k, phi)?;
    let n = bg.n();
    let v = bg.volume();
    let kf = T::of(k as f64);
    let ric = crate::field::generalized_ricci(&state, ws);
    let grad = ws.gradient(phidot);
    let len = bg.grid().len();
    let mut gnorm = vec![T::zero(); len];
    metric_pair(&state, &grad, &grad, &mut gnorm);
    let mut lapg = vec![T::zero(); len];
    laplace_g(&state, ws, phidot, &mut lapg);

    // term 1: −(k/V)∫(φ̈−|∂φ̇|²)(Riĉ−λω_φ)∧ω_φ^{k-1}∧ω^{n-k}
    let w1: Vec<T> = phiddot
        .iter()
        .zip(gnorm.iter())
        .map(|(&a, &b)| a - b)
        .collect();
    let mut t1 = wedge_integral(
        bg,
        Some(&w1),
        &[
            (WedgeFactor::Form(&ric), 1),
            (WedgeFactor::State(&state), k - 1),
            (WedgeFactor::Background, n - k),
        ],
    )?;
    t1 = t1
        - lambda
            * wedge_integral(
                bg,
                Some(&w1),
                &[
                    (WedgeFactor::State(&state), k),
                    (WedgeFactor::Background, n - k),
                ],
            )?;
    let t1 = -kf * t1 / v;

    // term 2: +(1/V)∫(Δ_Gφ̇)² ω_φ^k∧ω^{n-k}
    let sq: Vec<T> = lapg.iter().map(|&x| x * x).collect();
    let t2 = wedge_integral(
        bg,
        Some(&sq),
        &[
            (WedgeFactor::State(&state), k),
            (WedgeFactor::Background, n - k),
        ],
    )? / v;

    // term 3: −(k(k−1)/V)∫ i∂φ̇∧∂̄φ̇ ∧ Riĉ ∧ ω_φ^{k-2}∧ω^{n-k}
    let t3 = if k >= 2 {
        let rank1 = HermitianField::rank_one(&grad);
        -kf * T::of((k - 1) as f64)
            * wedge_integral(
                bg,
                None,
                &[
                    (WedgeFactor::Form(&rank1), 1),
                    (WedgeFactor::Form(&ric), 1),
                    (WedgeFactor::State(&state), k - 2),
                    (WedgeFactor::Background, n - k),
                ],
            )?
            / v
    } else {
        T::zero()
    };

    // term 4: −(k/V)∫|∂φ̇|²_G Riĉ∧ω_φ^{k-1}∧ω^{n-k}
    let t4 = -kf
        * wedge_integral(
            bg,
            Some(&gnorm),
            &[
                (WedgeFactor::Form(&ric), 1),
                (WedgeFactor::State(&state), k - 1),
                (WedgeFactor::Background, n - k),
            ],
        )?
        / v;

    Ok(t1 + t2 + t3 + t4)
}

/// Entropy-type bound A_F = ∫ e^{(n/k)F}·√(F²+1)·ωⁿ, evaluated through its
/// logarithm so large F cannot overflow.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EntropyBound<T> {
    pub value: T,
    pub log_value: T,
}

pub fn entropy_a<T: Real>(bg: &TorusBackground<T>, k: usize, f: &[T]) -> EntropyBound<T> {
    let n = bg.n();
    let s = T::of(n as f64) / T::of(k as f64);
    let mut m = T::neg_infinity();
    for &x in f {
        m = m.max(s * x);
    }
    let mut acc = T::zero();
    for &x in f {
        let phi = (x * x + T::one()).sqrt();
        acc = acc + (s * x - m).exp() * phi;
    }
    let mean_shifted = acc / T::of(f.len() as f64);
    let log_value = m + (bg.volume() * mean_shifted).ln();
    EntropyBound {
        value: log_value.exp(),
        log_value,
    }
}

/// Independent evaluation of the top-degree energy μ_n (flat, λ = 0) via LU
/// determinants: μ_n = mean(r·log r) with r = det(ω^{-1}ω_φ). Shares no σ or
/// eigenframe code with [`mu_k`].
pub fn mu_n_determinant<T: Real>(
    bg: &TorusBackground<T>,
    ws: &mut Workspace<T>,
    phi: &[T],
) -> Result<T, FieldError> {
    let n = bg.n();
    let len = bg.grid().len();
    let hess = ws.complex_hessian(phi);
    let mut m = vec![num_complex::Complex::new(T::zero(), T::zero()); n * n];
    let mut work = m.clone();
    let det_bg = bg.det();
    let mut acc = T::zero();
    for p in 0..len {
        hess.write_at(p, &mut m);
        for (dst, src) in m.iter_mut().zip(bg.metric().iter()) {
            *dst = *dst + *src;
        }
        let r = linalg::det(n, &m, &mut work).re / det_bg;
        if !(r > T::zero()) {
            return Err(FieldError::ConeViolation {
                k: n,
                point: p,
                degree: n,
            });
        }
        acc = acc + r * r.ln();
    }
    Ok(acc / T::of(len as f64))
}

/// Uniformly sampled path of potentials on [0, 1].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialPath<T> {
    pub times: Vec<T>,
    pub potentials: Vec<Vec<T>>,
}

impl<T: Real> PotentialPath<T> {
    /// Straight segment from `a` to `b` with `steps + 1` samples.
    pub fn linear(a: &[T], b: &[T], steps: usize) -> Self {
        let mut times = Vec::with_capacity(steps + 1);
        let mut potentials = Vec::with_capacity(steps + 1);
        for s in 0..=steps {
            let t = T::of(s as f64) / T::of(steps as f64);
            times.push(t);
            potentials.push(
                a.iter()
                    .zip(b.iter())
                    .map(|(&x, &y)| x + t * (y - x))
                    .collect(),
            );
        }
        PotentialPath { times, potentials }
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn dt(&self) -> T {
        self.times[1] - self.times[0]
    }

    /// Centered velocity at interior node i.
    pub fn velocity(&self, i: usize) -> Vec<T> {
        let h2 = self.dt() + self.dt();
        self.potentials[i + 1]
            .iter()
            .zip(self.potentials[i - 1].iter())
            .map(|(&a, &b)| (a - b) / h2)
            .collect()
    }

    /// Centered acceleration at interior node i.
    pub fn acceleration(&self, i: usize) -> Vec<T> {
        let h = self.dt();
        let hh = h * h;
        let mut out = Vec::with_capacity(self.potentials[i].len());
        for p in 0..self.potentials[i].len() {
            let v = (self.potentials[i + 1][p] - self.potentials[i][p] - self.potentials[i][p]
                + self.potentials[i - 1][p])
                / hh;
            out.push(v);
        }
        out
    }
}

/// μ_k sampled along a path.
pub fn energy_trace<T: Real>(
    bg: &TorusBackground<T>,
    ws: &mut Workspace<T>,
    k: usize,
    path: &PotentialPath<T>,
    twist: Option<&TwistForm<T>>,
    lambda: Option<T>,
) -> Result<Vec<T>, FieldError> {
    path.potentials
        .iter()
        .map(|phi| mu_k(bg, ws, k, phi, twist, lambda).map(|r| r.value))
        .collect()
}

/// Result of checking a closed-form variation against centered finite
/// differences of μ_k at two step sizes (h and h/2).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationCheck<T> {
    pub analytic: T,
    pub fd_coarse: T,
    pub fd_fine: T,
    pub error_coarse: T,
    pub error_fine: T,
    /// Observed convergence order log2(error_coarse/error_fine); ≈ 2 for a
    /// correct formula, ≈ 0 for a wrong one.
    pub order: T,
}

fn check_from<T: Real>(analytic: T, fd_coarse: T, fd_fine: T) -> VariationCheck<T> {
    let error_coarse = (fd_coarse - analytic).abs();
    let error_fine = (fd_fine - analytic).abs();
    let tiny = T::of(1e-14) * (T::one() + analytic.abs());
    let order = if error_fine < tiny {
        T::of(2.0) // converged to rounding; call it the theoretical order
    } else {
        (error_coarse / error_fine).ln() / T::of(std::f64::consts::LN_2)
    };
    VariationCheck {
        analytic,
        fd_coarse,
        fd_fine,
        error_coarse,
        error_fine,
        order,
    }
}

/// Compare the closed-form first variation with centered differences of μ_k
/// along φ + tψ.
pub fn verify_first_variation<T: Real>(
    bg: &TorusBackground<T>,
    ws: &mut Workspace<T>,
    k: usize,
    phi: &[T],
    psi: &[T],
    twist: Option<&TwistForm<T>>,
    lambda: Option<T>,
    h: T,
) -> Result<VariationCheck<T>, FieldError> {
    // freeze λ so every FD sample uses the same functional
    let lam = match lambda {
        Some(l) => Some(l),
        None => match twist {
            Some(t) => {
                let st = evaluate_state(bg, ws, k, phi)?;
                Some(alpha_bar(bg, &st, t)? / T::of(k as f64))
            }
            None => Some(T::zero()),
        },
    };
    let analytic = first_variation(bg, ws, k, phi, psi, twist, lam)?;
    let mut fd = [T::zero(); 2];
    for (s, step) in [h, h * T::of(0.5)].iter().enumerate() {
        let plus: Vec<T> = phi
            .iter()
            .zip(psi.iter())
            .map(|(&a, &b)| a + *step * b)
            .collect();
        let minus: Vec<T> = phi
            .iter()
            .zip(psi.iter())
            .map(|(&a, &b)| a - *step * b)
            .collect();
        let ep = mu_k(bg, ws, k, &plus, twist, lam)?.value;
        let em = mu_k(bg, ws, k, &minus, twist, lam)?.value;
        fd[s] = (ep - em) / (*step + *step);
    }
    Ok(check_from(analytic, fd[0], fd[1]))
}

/// Compare the closed-form second variation with centered second differences
/// of μ_k along φ + tψ (so φ̈ = 0).
pub fn verify_second_variation<T: Real>(
    bg: &TorusBackground<T>,
    ws: &mut Workspace<T>,
    k: usize,
    phi: &[T],
    psi: &[T],
    lambda: T,
    h: T,
) -> Result<VariationCheck<T>, FieldError> {
    let len = bg.grid().len();
    let zero = vec![T::zero(); len];
    let analytic = second_variation(bg, ws, k, phi, psi, &zero, lambda)?;
    let e0 = mu_k(bg, ws, k, phi, None, Some(lambda))?.value;
    let mut fd = [T::zero(); 2];
    for (s, step) in [h, h * T::of(0.5)].iter().enumerate() {
        let plus: Vec<T> = phi
            .iter()
            .zip(psi.iter())
            .map(|(&a, &b)| a + *step * b)
            .collect();
        let minus: Vec<T> = phi
            .iter()
            .zip(psi.iter())
            .map(|(&a, &b)| a - *step * b)
            .collect();
        let ep = mu_k(bg, ws, k, &plus, None, Some(lambda))?.value;
        let em = mu_k(bg, ws, k, &minus, None, Some(lambda))?.value;
        fd[s] = (ep - e0 - e0 + em) / (*step * *step);
    }
    Ok(check_from(analytic, fd[0], fd[1]))
}

/// Mean of a field against the ω_φ^k∧ω^{n-k} measure, normalized by V.
pub fn mixed_mean<T: Real>(
    bg: &TorusBackground<T>,
    state: &HessianState<T>,
    weight: &[T],
) -> Result<T, FieldError> {
    let n = bg.n();
    Ok(wedge_integral(
        bg,
        Some(weight),
        &[
            (WedgeFactor::State(state), state.k),
            (WedgeFactor::Background, n - state.k),
        ],
    )? / bg.volume())
}
