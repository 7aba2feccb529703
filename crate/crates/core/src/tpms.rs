// SPDX-License-Identifier: Apache-2.0

//! Two-point measurement statistics: outcome distributions, exponential
//! averages, correction factors and free energies.

use crate::error::{Error, Result};
use crate::linalg::{frobenius, CMatrix, DensityMatrix, Hermitian, Superoperator};

/// Relative tolerance for grouping eigenvalues and outcomes.
pub const CLUSTER_TOL: f64 = 1e-9;
/// Probabilities in `[-NEG_PROB_TOL, 0)` are clipped to zero.
pub const NEG_PROB_TOL: f64 = 1e-12;
/// Off-diagonal norm of `ρ0` in the `O(0)` eigenbasis above which the
/// coherence flag is raised.
pub const COHERENCE_TOL: f64 = 1e-9;

/// Distribution of `x = o_m(t) - o_n(0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    /// Strictly increasing after clustering.
    pub outcomes: Vec<f64>,
    pub probs: Vec<f64>,
    /// `‖ρ0 - Σ_C P_C ρ0 P_C‖_F` for the initial measurement projectors.
    pub coherence_norm: f64,
}

impl OutcomeDistribution {
    pub fn has_coherences(&self) -> bool {
        self.coherence_norm > COHERENCE_TOL
    }

    /// `⟨e^{-βx}⟩`.
    pub fn exp_average(&self, beta: f64) -> f64 {
        self.outcomes
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * (-beta * x).exp())
            .sum()
    }

    /// `⟨x^k⟩`.
    pub fn moment(&self, k: i32) -> f64 {
        self.outcomes
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * x.powi(k))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn total_probability(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Spectral projectors of `h` with eigenvalues grouped within
/// `CLUSTER_TOL * max(1, ‖h‖)`.
pub fn eigen_projectors(h: &Hermitian) -> Vec<(f64, CMatrix)> {
    let spec = h.eig();
    let scale = spec.values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    spec.clusters(CLUSTER_TOL * scale)
        .into_iter()
        .map(|(v, idx)| (v, spec.projector(&idx)))
        .collect()
}

/// Full two-point measurement distribution.
///
/// Initial projective measurement of `o0` on `rho0` (Lüders rule for
/// degenerate eigenvalues), evolution by `map_t`, final measurement of `ot`.
pub fn tpms_distribution(
    rho0: &DensityMatrix,
    map_t: &Superoperator,
    o0: &Hermitian,
    ot: &Hermitian,
) -> Result<OutcomeDistribution> {
    let d = rho0.dim();
    for found in [map_t.dim(), o0.dim(), ot.dim()] {
        if found != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
    }
    let initial = eigen_projectors(o0);
    let fin = eigen_projectors(ot);
    let rho = rho0.matrix();
    let mut dephased = CMatrix::zeros(d, d);
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(initial.len() * fin.len());
    for (o_n, p_n) in &initial {
        let post = p_n * rho * p_n;
        dephased += &post;
        let evolved = map_t.apply(&post)?;
        for (o_m, q_m) in &fin {
            let mut prob = crate::linalg::trace(&(q_m * &evolved)).re;
            if prob < 0.0 {
                if prob < -NEG_PROB_TOL {
                    return Err(Error::NegativeProbability(prob));
                }
                prob = 0.0;
            }
            pairs.push((o_m - o_n, prob));
        }
    }
    let coherence_norm = frobenius(&(rho - dephased));
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let range = pairs.last().unwrap().0 - pairs[0].0;
    let tol = CLUSTER_TOL * range.max(1.0);
    let mut outcomes: Vec<f64> = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    let mut start = f64::NAN;
    let mut members = 0usize;
    for (x, p) in pairs {
        if !outcomes.is_empty() && x - start <= tol {
            let last = outcomes.len() - 1;
            members += 1;
            outcomes[last] += (x - outcomes[last]) / members as f64;
            probs[last] += p;
        } else {
            start = x;
            members = 1;
            outcomes.push(x);
            probs.push(p);
        }
    }
    let total: f64 = probs.iter().sum();
    if total > 0.0 {
        probs.iter_mut().for_each(|p| *p /= total);
    }
    Ok(OutcomeDistribution {
        outcomes,
        probs,
        coherence_norm,
    })
}

/// Internal-energy correction factor in its three equivalent forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaU {
    /// `Tr{ρ^G(t) Φ_t[𝕀]}`.
    pub value: f64,
    /// `Tr{Φ_t†[ρ^G(t)]}`.
    pub adjoint_form: f64,
    /// `d Tr{ρ^G(t) Φ_t[𝕀/d]}`.
    pub mixed_form: f64,
    /// `λ_max{Φ_t[𝕀]}`.
    pub bound: f64,
}

impl LambdaU {
    /// Largest disagreement between the three forms.
    pub fn spread(&self) -> f64 {
        let v = [self.value, self.adjoint_form, self.mixed_form];
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    }
}

fn image_of_identity(map_t: &Superoperator) -> Hermitian {
    let d = map_t.dim();
    Hermitian::symmetrized(
        map_t
            .apply(&CMatrix::identity(d, d))
            .expect("dimension matches"),
    )
}

pub fn lambda_u(map_t: &Superoperator, k_t: &Hermitian, beta: f64) -> LambdaU {
    let d = map_t.dim();
    let gibbs = DensityMatrix::gibbs(k_t, beta);
    let phi_id = image_of_identity(map_t);
    let value = phi_id.expectation(gibbs.matrix());
    let adjoint_form = crate::linalg::trace(
        &map_t
            .hs_adjoint()
            .apply(gibbs.matrix())
            .expect("dimension matches"),
    )
    .re;
    let mixed = CMatrix::identity(d, d) / crate::linalg::c(d as f64);
    let mixed_form = d as f64
        * crate::linalg::trace(&(gibbs.matrix() * map_t.apply(&mixed).expect("dimension matches")))
            .re;
    LambdaU {
        value,
        adjoint_form,
        mixed_form,
        bound: phi_id.lambda_max(),
    }
}

/// `Tr{e^{-β(A - m)} B}` with `m = λ_min(A)` and the shift returned separately.
fn shifted_exp_trace(a: &Hermitian, b: &CMatrix, beta: f64) -> (f64, f64) {
    let m = a.lambda_min();
    let shifted = a
        .sub(&Hermitian::identity(a.dim()).scale(m))
        .exp_scaled(-beta);
    (crate::linalg::trace(&(shifted.matrix() * b)).re, m)
}

/// Work correction factor `Λ^w = Tr{e^{-βO_w(t)} Φ_t[𝕀]} / Z(t)` with
/// `Z(t) = Tr e^{-βK(t)}`, and its bound `e^{βλ_max{𝔓(t)}} λ_max{Φ_t[𝕀]}`.
pub fn lambda_w(
    map_t: &Superoperator,
    ow_t: &Hermitian,
    k_t: &Hermitian,
    p_t: &Hermitian,
    beta: f64,
) -> (f64, f64) {
    let phi_id = image_of_identity(map_t);
    let (tr, m) = shifted_exp_trace(ow_t, phi_id.matrix(), beta);
    let ln_zt = k_t.log_partition(beta);
    let lambda = (tr.ln() - beta * m - ln_zt).exp();
    let bound = (beta * p_t.lambda_max()).exp() * phi_id.lambda_max();
    (lambda, bound)
}

/// `⟨e^{-βq}⟩ = Tr{e^{-β𝔓(t)} Φ_t[ρ0]}` and its bound `e^{-βλ_min{𝔓(t)}}`.
pub fn heat_fluctuation(
    rho0: &DensityMatrix,
    map_t: &Superoperator,
    p_t: &Hermitian,
    beta: f64,
) -> (f64, f64) {
    let rho_t = map_t.apply(rho0.matrix()).expect("dimension matches");
    let (tr, m) = shifted_exp_trace(p_t, &rho_t, beta);
    (tr * (-beta * m).exp(), (-beta * p_t.lambda_min()).exp())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeEnergies {
    pub z0: f64,
    pub zt: f64,
    pub ln_z0: f64,
    pub ln_zt: f64,
    /// `ΔF̄ = -(1/β) ln(Z(t)/Z(0))`.
    pub delta_f_bar: f64,
}

pub fn free_energies(k_t: &Hermitian, k_0: &Hermitian, beta: f64) -> FreeEnergies {
    let ln_z0 = k_0.log_partition(beta);
    let ln_zt = k_t.log_partition(beta);
    FreeEnergies {
        z0: ln_z0.exp(),
        zt: ln_zt.exp(),
        ln_z0,
        ln_zt,
        delta_f_bar: -(ln_zt - ln_z0) / beta,
    }
}

/// `F = Tr{Kρ} - S(ρ)/β`.
pub fn noneq_free_energy(rho: &DensityMatrix, k: &Hermitian, beta: f64) -> f64 {
    k.expectation(rho.matrix()) - rho.von_neumann_entropy() / beta
}

/// Lower bound on `⟨w⟩ - ΔF̄`: `-λ_max{𝔓(t)} - (1/β) ln λ_max{Φ_t[𝕀]}`.
pub fn dissipated_work_bound(p_t: &Hermitian, map_t: &Superoperator, beta: f64) -> f64 {
    -p_t.lambda_max() - image_of_identity(map_t).lambda_max().ln() / beta
}

/// Fluctuation summary for one quantity at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluctuationReport {
    pub beta: f64,
    /// `⟨e^{-βx}⟩`.
    pub exp_average: f64,
    pub delta_f_bar: f64,
    pub lambda: f64,
    pub lambda_bound: f64,
    /// `⟨x⟩`.
    pub mean: f64,
    pub dissipated_bound: f64,
}

impl FluctuationReport {
    /// Residuals of `⟨e^{-βx}⟩ = Λ e^{-βΔF̄}` and `Λ ≤ bound` (positive part).
    pub fn residuals(&self) -> (f64, f64) {
        let jarzynski =
            (self.exp_average - self.lambda * (-self.beta * self.delta_f_bar).exp()).abs();
        let bound = (self.lambda - self.lambda_bound).max(0.0);
        (jarzynski, bound)
    }
}

/// One row of the per-time, per-β output table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaRow {
    pub t: f64,
    pub beta: f64,
    pub lambda_u: f64,
    pub lambda_w: f64,
    pub lambda_w_bound: f64,
    pub exp_avg_w: f64,
    pub exp_avg_q: f64,
    pub delta_f_bar: f64,
    pub mean_w: f64,
    pub dissipated_bound: f64,
}

impl LambdaRow {
    pub const HEADER: &'static str =
        "t,beta,lambda_u,lambda_w,lambda_w_bound,exp_avg_w,exp_avg_q,delta_F_bar,mean_w,dissipated_bound";

    pub fn csv_line(&self) -> String {
        [
            self.t,
            self.beta,
            self.lambda_u,
            self.lambda_w,
            self.lambda_w_bound,
            self.exp_avg_w,
            self.exp_avg_q,
            self.delta_f_bar,
            self.mean_w,
            self.dissipated_bound,
        ]
        .iter()
        .map(|x| format!("{x:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
    }

    pub fn work_report(&self) -> FluctuationReport {
        FluctuationReport {
            beta: self.beta,
            exp_average: self.exp_avg_w,
            delta_f_bar: self.delta_f_bar,
            lambda: self.lambda_w,
            lambda_bound: self.lambda_w_bound,
            mean: self.mean_w,
            dissipated_bound: self.dissipated_bound,
        }
    }
}
