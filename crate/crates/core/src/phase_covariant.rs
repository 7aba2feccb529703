// SPDX-License-Identifier: Apache-2.0

//! Closed-form engine for phase-covariant qubit dynamics generated by
//!
//! `L_t = -i[ω(t)σz/2, ·] + γ+(t) D[σ+] + γ-(t) D[σ-] + γz(t) D[σz]`,
//!
//! plus the eigenvalue form of work and heat for phase-covariant maps in
//! any dimension.
//!
//! With `κ = γ+ + γ-`, `ξ = γ+ - γ-` and `I = ∫κ`, `J = ∫ξ e^{I}`, `Θ = ∫ω`, the
//! Pauli transfer matrix of the map (ordering `I, σx, σy, σz`) is
//!
//! ```text
//! [ 1  0  0  0 ]
//! [ 0  a -b  0 ]     a = d⊥ cos Θ,  b = d⊥ sin Θ,  d⊥ = e^{-I/2 - 2∫γz}
//! [ 0  b  a  0 ]     c = J e^{-I},  d∥ = e^{-I}
//! [ c  0  0 d∥ ]
//! ```
//!
//! All integrals use cumulative Simpson quadrature; `c` is accumulated in its
//! damped form so that nothing overflows when `I` grows.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{DerivativeSource, MapTrajectory};
use crate::error::{Error, Result};
use crate::linalg::{
    basis_element, c, max_abs, pauli, CMatrix, Superoperator, DEFAULT_CONDITION_THRESHOLD,
};
use crate::quadrature::{cumulative, cumulative_damped, cumulative_scalar};

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Frequency and rates of a phase-covariant qubit generator. Rates may be
/// negative.
#[derive(Clone)]
pub struct PCRates {
    pub omega: TimeFn,
    pub gamma_plus: TimeFn,
    pub gamma_minus: TimeFn,
    pub gamma_z: TimeFn,
}

impl std::fmt::Debug for PCRates {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "PCRates {{ omega(0): {}, gamma_plus(0): {}, gamma_minus(0): {}, gamma_z(0): {} }}",
            (self.omega)(0.0),
            (self.gamma_plus)(0.0),
            (self.gamma_minus)(0.0),
            (self.gamma_z)(0.0)
        )
    }
}

impl PCRates {
    pub fn new(
        omega: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gamma_plus: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gamma_minus: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gamma_z: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        PCRates {
            omega: Arc::new(omega),
            gamma_plus: Arc::new(gamma_plus),
            gamma_minus: Arc::new(gamma_minus),
            gamma_z: Arc::new(gamma_z),
        }
    }

    pub fn constant(omega: f64, gamma_plus: f64, gamma_minus: f64, gamma_z: f64) -> Self {
        Self::new(
            move |_| omega,
            move |_| gamma_plus,
            move |_| gamma_minus,
            move |_| gamma_z,
        )
    }

    pub fn sample(&self, times: &[f64]) -> RateSamples {
        RateSamples {
            times: times.to_vec(),
            omega: times.iter().map(|&t| (self.omega)(t)).collect(),
            gamma_plus: times.iter().map(|&t| (self.gamma_plus)(t)).collect(),
            gamma_minus: times.iter().map(|&t| (self.gamma_minus)(t)).collect(),
            gamma_z: times.iter().map(|&t| (self.gamma_z)(t)).collect(),
        }
    }

    pub fn generator(&self, t: f64) -> Superoperator {
        pc_generator(
            (self.omega)(t),
            (self.gamma_plus)(t),
            (self.gamma_minus)(t),
            (self.gamma_z)(t),
        )
    }
}

/// Rates sampled on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RateSamples {
    pub times: Vec<f64>,
    pub omega: Vec<f64>,
    pub gamma_plus: Vec<f64>,
    pub gamma_minus: Vec<f64>,
    pub gamma_z: Vec<f64>,
}

impl RateSamples {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn dt(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }
}

/// `-i[ω σz/2, ·] + γ+ D[σ+] + γ- D[σ-] + γz D[σz]`.
pub fn pc_generator(omega: f64, gamma_plus: f64, gamma_minus: f64, gamma_z: f64) -> Superoperator {
    Superoperator::hamiltonian(&(pauli::z() * c(omega / 2.0)))
        .add(&Superoperator::lindblad(&pauli::raising()).scale(gamma_plus))
        .add(&Superoperator::lindblad(&pauli::lowering()).scale(gamma_minus))
        .add(&Superoperator::lindblad(&pauli::z()).scale(gamma_z))
}

/// Map coefficients at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PCMapCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d_par: f64,
    pub d_perp: f64,
    pub i: f64,
    pub j: f64,
}

/// Thermodynamic quantities at one time:
/// `𝔓 = P0 𝕀 + P3 σz`, `O_w = W0 𝕀 + W3 σz`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PCThermo {
    pub t_a: f64,
    pub t_b: f64,
    pub t_c: f64,
    pub p0: f64,
    pub p3: f64,
    pub w0: f64,
    pub w3: f64,
}

/// All cumulative integrals of a phase-covariant run on a grid.
#[derive(Clone, Debug)]
pub struct PCIntegrals {
    pub times: Vec<f64>,
    pub omega: Vec<f64>,
    pub kappa: Vec<f64>,
    pub xi: Vec<f64>,
    pub i: Vec<f64>,
    /// `c = J e^{-I}`.
    pub c: Vec<f64>,
    pub theta: Vec<f64>,
    /// `∫γz`.
    pub gz: Vec<f64>,
    pub t_a: Vec<f64>,
    pub t_b: Vec<f64>,
    pub t_c: Vec<f64>,
    pub p0: Vec<f64>,
    pub p3: Vec<f64>,
}

/// Integrals from rates sampled on a uniform grid.
pub fn pc_integrals_from_samples(s: &RateSamples) -> PCIntegrals {
    let h = s.dt();
    let kappa: Vec<f64> = s
        .gamma_plus
        .iter()
        .zip(&s.gamma_minus)
        .map(|(p, m)| p + m)
        .collect();
    let xi: Vec<f64> = s
        .gamma_plus
        .iter()
        .zip(&s.gamma_minus)
        .map(|(p, m)| p - m)
        .collect();
    let i = cumulative_scalar(&kappa, h);
    let theta = cumulative_scalar(&s.omega, h);
    let gz = cumulative_scalar(&s.gamma_z, h);
    let cc = cumulative_damped(&xi, &i, h);
    let omk: Vec<f64> = s.omega.iter().zip(&kappa).map(|(w, k)| w * k).collect();
    let t_a = cumulative_scalar(
        &omk.iter().zip(&cc).map(|(a, b)| a * b).collect::<Vec<_>>(),
        h,
    );
    let neg_i: Vec<f64> = i.iter().map(|x| -x).collect();
    // T_B e^{I} accumulated in damped form
    let tb_scaled = cumulative_damped(&omk, &neg_i, h);
    let t_b: Vec<f64> = tb_scaled
        .iter()
        .zip(&i)
        .map(|(v, x)| v * (-x).exp())
        .collect();
    let t_c = cumulative_scalar(
        &s.omega
            .iter()
            .zip(&xi)
            .map(|(w, x)| w * x)
            .collect::<Vec<_>>(),
        h,
    );
    let p3: Vec<f64> = tb_scaled.iter().map(|v| -0.5 * v).collect();
    let p0: Vec<f64> = (0..s.len())
        .map(|k| 0.5 * (t_c[k] - t_a[k]) - cc[k] * p3[k])
        .collect();
    PCIntegrals {
        times: s.times.clone(),
        omega: s.omega.clone(),
        kappa,
        xi,
        i,
        c: cc,
        theta,
        gz,
        t_a,
        t_b,
        t_c,
        p0,
        p3,
    }
}

/// Integrals on `times` from rates evaluated on a grid refined by
/// `oversample` (1 means no refinement).
pub fn pc_integrals(rates: &PCRates, times: &[f64], oversample: usize) -> PCIntegrals {
    let m = oversample.max(1);
    let n = times.len();
    if n < 2 || m == 1 {
        return pc_integrals_from_samples(&rates.sample(times));
    }
    let t_max = times[n - 1];
    let fine = MapTrajectory::uniform_grid(t_max, (n - 1) * m + 1);
    let full = pc_integrals_from_samples(&rates.sample(&fine));
    let pick = |v: &Vec<f64>| -> Vec<f64> { (0..n).map(|k| v[k * m]).collect() };
    PCIntegrals {
        times: times.to_vec(),
        omega: pick(&full.omega),
        kappa: pick(&full.kappa),
        xi: pick(&full.xi),
        i: pick(&full.i),
        c: pick(&full.c),
        theta: pick(&full.theta),
        gz: pick(&full.gz),
        t_a: pick(&full.t_a),
        t_b: pick(&full.t_b),
        t_c: pick(&full.t_c),
        p0: pick(&full.p0),
        p3: pick(&full.p3),
    }
}

impl PCIntegrals {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn coefficients(&self, k: usize) -> PCMapCoefficients {
        let d_perp = (-0.5 * self.i[k] - 2.0 * self.gz[k]).exp();
        PCMapCoefficients {
            a: d_perp * self.theta[k].cos(),
            b: d_perp * self.theta[k].sin(),
            c: self.c[k],
            d_par: (-self.i[k]).exp(),
            d_perp,
            i: self.i[k],
            j: self.c[k] * self.i[k].exp(),
        }
    }

    pub fn thermo(&self, k: usize) -> PCThermo {
        PCThermo {
            t_a: self.t_a[k],
            t_b: self.t_b[k],
            t_c: self.t_c[k],
            p0: self.p0[k],
            p3: self.p3[k],
            w0: -self.p0[k],
            w3: self.omega[k] / 2.0 - self.p3[k],
        }
    }
}

/// The Pauli transfer matrix of the coefficients.
pub fn pc_transfer_matrix(co: &PCMapCoefficients) -> DMatrix<f64> {
    #[rustfmt::skip]
    let r = DMatrix::from_row_slice(4, 4, &[
        1.0,  0.0,   0.0,  0.0,
        0.0,  co.a, -co.b, 0.0,
        0.0,  co.b,  co.a, 0.0,
        co.c, 0.0,   0.0,  co.d_par,
    ]);
    r
}

pub fn pc_map(co: &PCMapCoefficients) -> Superoperator {
    Superoperator::from_pauli_transfer(&pc_transfer_matrix(co))
}

/// Exact map trajectory with analytic derivatives `Φ̇_t = L_t Φ_t`. The map
/// coefficients are integrated on a grid refined by `oversample`.
pub fn pc_trajectory(
    rates: &PCRates,
    t_max: f64,
    n: usize,
    oversample: usize,
) -> Result<(MapTrajectory, PCIntegrals)> {
    let times = MapTrajectory::uniform_grid(t_max, n);
    let integrals = pc_integrals(rates, &times, oversample);
    let maps: Vec<Superoperator> = (0..n).map(|k| pc_map(&integrals.coefficients(k))).collect();
    let derivs = crate::par::map_range(n, |k| rates.generator(times[k]).compose(&maps[k]));
    let traj = MapTrajectory::new(times, maps, DerivativeSource::Analytic(derivs))?;
    Ok((traj, integrals))
}

/// `ln cosh x` without overflow.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Closed-form `Λ^w = e^{-βW0}/cosh(βω/2) [cosh βW3 - c sinh βW3]` and the
/// bound `(1 + |c|) e^{β(P0 + |P3|)}`, evaluated in log space.
pub fn pc_lambda_w(th: &PCThermo, co: &PCMapCoefficients, omega_t: f64, beta: f64) -> (f64, f64) {
    let y = beta * th.w3;
    let ay = y.abs();
    let e = (-2.0 * ay).exp();
    let bracket = (1.0 + e) - co.c * y.signum() * (1.0 - e);
    let ln_lambda =
        -beta * th.w0 - ln_cosh(beta * omega_t / 2.0) + ay - std::f64::consts::LN_2 + bracket.ln();
    let bound = (1.0 + co.c.abs()) * (beta * (th.p0 + th.p3.abs())).exp();
    (ln_lambda.exp(), bound)
}

/// Exact mean work for a Gibbs initial state at `ω(0)` and the equilibrium
/// free-energy change.
pub fn pc_mean_work_and_delta_f(
    th: &PCThermo,
    co: &PCMapCoefficients,
    omega0: f64,
    omega_t: f64,
    beta: f64,
) -> (f64, f64) {
    let vz = (-beta * omega0 / 2.0).tanh();
    let mean_w = (vz * co.d_par + co.c) * th.w3 + th.w0 - omega0 / 2.0 * vz;
    let delta_f = -ln_cosh(beta * omega_t / 2.0) / beta + ln_cosh(beta * omega0 / 2.0) / beta;
    (mean_w, delta_f)
}

/// Lower bound `-P0 - |P3| - (1/β) ln(1 + |c|)` on `⟨w⟩ - ΔF̄`.
pub fn pc_dissipated_bound(th: &PCThermo, co: &PCMapCoefficients, beta: f64) -> f64 {
    -th.p0 - th.p3.abs() - (1.0 + co.c.abs()).ln() / beta
}

/// Largest entry of a map that violates phase covariance: `Φ[|j><k|]` must be
/// proportional to `|j><k|` for `j ≠ k` and diagonal for `j = k`.
pub fn pc_structure_residual(s: &Superoperator) -> f64 {
    let d = s.dim();
    let mut r = 0.0_f64;
    for j in 0..d {
        for k in 0..d {
            let mut out = s.apply(&basis_element(d, j, k)).expect("dimension matches");
            if j == k {
                for m in 0..d {
                    out[(m, m)] = c(0.0);
                }
            } else {
                out[(j, k)] = c(0.0);
            }
            r = r.max(max_abs(&out));
        }
    }
    r
}

/// Population transfer matrix `F`, coherence factors `f` and their
/// derivatives for a phase-covariant map trajectory of any dimension.
#[derive(Clone, Debug)]
pub struct PCStructure {
    pub times: Vec<f64>,
    pub dt: f64,
    /// `F_jk = <j|Φ[|k><k|]|j>`.
    pub populations: Vec<DMatrix<f64>>,
    pub populations_dot: Vec<DMatrix<f64>>,
    /// `Φ[|j><k|] = f_jk |j><k|` for `j ≠ k`; the diagonal is unused.
    pub coherences: Vec<CMatrix>,
    pub coherences_dot: Vec<CMatrix>,
}

impl PCStructure {
    pub fn from_trajectory(traj: &MapTrajectory) -> Result<Self> {
        let d = traj.dim();
        let n = traj.len();
        let split = |s: &Superoperator| {
            let mut pop = DMatrix::<f64>::zeros(d, d);
            let mut coh = CMatrix::zeros(d, d);
            for j in 0..d {
                for k in 0..d {
                    if j == k {
                        let out = s.apply(&basis_element(d, k, k)).expect("dimension matches");
                        for m in 0..d {
                            pop[(m, k)] = out[(m, m)].re;
                        }
                    } else {
                        let out = s.apply(&basis_element(d, j, k)).expect("dimension matches");
                        coh[(j, k)] = out[(j, k)];
                    }
                }
            }
            (pop, coh)
        };
        let mut populations = Vec::with_capacity(n);
        let mut populations_dot = Vec::with_capacity(n);
        let mut coherences = Vec::with_capacity(n);
        let mut coherences_dot = Vec::with_capacity(n);
        for i in 0..n {
            let (p, c0) = split(traj.map(i));
            let (pd, cd) = split(&traj.derivative(i)?);
            populations.push(p);
            coherences.push(c0);
            populations_dot.push(pd);
            coherences_dot.push(cd);
        }
        Ok(PCStructure {
            times: traj.times().to_vec(),
            dt: traj.dt(),
            populations,
            populations_dot,
            coherences,
            coherences_dot,
        })
    }
}

/// Eigenvalues of the effective Hamiltonian, heat and work observables.
#[derive(Clone, Debug)]
pub struct GeneralPC {
    pub k: Vec<DVector<f64>>,
    pub q: Vec<DVector<f64>>,
    pub w: Vec<DVector<f64>>,
    /// Condition number of `F(t)` at every time.
    pub conditions: Vec<f64>,
}

/// `k_j = -(1/d) Σ_{k≠j} Im(ḟ_jk / f_jk)`, `q(t) = F(t)^{-T} ∫ Ḟ(τ)^T k(τ) dτ`,
/// `w = k - q`. Fails at the first time where `F(t)` is singular.
pub fn pc_general_d(s: &PCStructure) -> Result<GeneralPC> {
    pc_general_d_with_threshold(s, DEFAULT_CONDITION_THRESHOLD)
}

pub fn pc_general_d_with_threshold(s: &PCStructure, threshold: f64) -> Result<GeneralPC> {
    let n = s.times.len();
    let d = s.populations[0].nrows();
    let k: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            DVector::from_fn(d, |j, _| {
                let mut acc = 0.0;
                for m in 0..d {
                    if m != j {
                        acc += (s.coherences_dot[i][(j, m)] / s.coherences[i][(j, m)]).im;
                    }
                }
                -acc / d as f64
            })
        })
        .collect();
    let flow: Vec<DVector<f64>> = (0..n)
        .map(|i| s.populations_dot[i].transpose() * &k[i])
        .collect();
    let integral = cumulative(&flow, s.dt);
    let mut q = Vec::with_capacity(n);
    let mut conditions = Vec::with_capacity(n);
    for (i, f) in s.populations.iter().enumerate() {
        let sv = f.clone().svd(false, false).singular_values;
        let cond = if sv.min() == 0.0 {
            f64::INFINITY
        } else {
            sv.max() / sv.min()
        };
        conditions.push(cond);
        let singular = Error::SingularMap {
            time: Some(s.times[i]),
            condition: cond,
            threshold,
        };
        if !(cond <= threshold) {
            return Err(singular);
        }
        let qi = f.transpose().lu().solve(&integral[i]).ok_or(singular)?;
        q.push(qi);
    }
    let w = k.iter().zip(&q).map(|(a, b)| a - b).collect();
    Ok(GeneralPC {
        k,
        q,
        w,
        conditions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{generator_residual, minimal_dissipation_split};
    use crate::linalg::Hermitian;
    use crate::observables;
    use crate::tpms;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_rates_give_zero_integrals() {
        let times = MapTrajectory::uniform_grid(2.0, 21);
        let ig = pc_integrals(&PCRates::constant(0.0, 0.0, 0.0, 0.0), &times, 1);
        for v in [&ig.i, &ig.c, &ig.t_a, &ig.t_b, &ig.t_c, &ig.p0, &ig.p3] {
            assert!(v.iter().all(|x| *x == 0.0));
        }
        let co = ig.coefficients(0);
        assert_eq!((co.a, co.b, co.c, co.d_par), (1.0, 0.0, 0.0, 1.0));
        assert!(pc_map(&co).distance(&Superoperator::identity(2)) < 1e-15);
    }

    #[test]
    fn constant_rate_closed_forms() {
        let (k, x) = (0.3, -0.1);
        let times = MapTrajectory::uniform_grid(3.0, 61);
        let ig = pc_integrals(
            &PCRates::constant(1.0, (k + x) / 2.0, (k - x) / 2.0, 0.0),
            &times,
            1,
        );
        for (n, &t) in times.iter().enumerate() {
            assert_abs_diff_eq!(ig.i[n], k * t, epsilon = 1e-12);
            let j = x / k * ((k * t).exp() - 1.0);
            assert_abs_diff_eq!(ig.coefficients(n).j, j, epsilon = 1e-8);
        }
    }

    #[test]
    fn coefficient_invariants() {
        let rates = PCRates::new(
            |t| 1.0 + 0.3 * t.sin(),
            |_| 0.02,
            |t| 0.05 + 0.01 * t,
            |_| 0.01,
        );
        let times = MapTrajectory::uniform_grid(4.0, 41);
        let ig = pc_integrals(&rates, &times, 1);
        for n in 0..times.len() {
            let co = ig.coefficients(n);
            assert_abs_diff_eq!(
                co.a * co.a + co.b * co.b,
                co.d_perp * co.d_perp,
                epsilon = 1e-10
            );
            assert_abs_diff_eq!(co.d_par, (-co.i).exp(), epsilon = 1e-12);
            assert!(pc_map(&co).trace_preservation_residual() < 1e-14);
            let th = ig.thermo(n);
            assert_abs_diff_eq!(th.w3, ig.omega[n] / 2.0 - th.p3, epsilon = 1e-12);
            assert_abs_diff_eq!(th.w0, -th.p0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pure_decoherence_map() {
        let (w, g) = (1.3, 0.2);
        let times = MapTrajectory::uniform_grid(2.0, 41);
        let ig = pc_integrals(&PCRates::constant(w, 0.0, 0.0, g), &times, 1);
        for (n, &t) in times.iter().enumerate() {
            let co = ig.coefficients(n);
            assert_abs_diff_eq!(co.a, (-2.0 * g * t).exp() * (w * t).cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(co.b, (-2.0 * g * t).exp() * (w * t).sin(), epsilon = 1e-12);
            assert_eq!(co.c, 0.0);
            assert_eq!(co.d_par, 1.0);
            // direct integration of the constant generator
            let exact = pc_generator(w, 0.0, 0.0, g).exp_scaled(t);
            assert!(pc_map(&co).distance(&exact) < 1e-10);
            let th = ig.thermo(n);
            assert_eq!(
                (th.t_a, th.t_b, th.t_c, th.p0, th.p3),
                (0.0, 0.0, 0.0, 0.0, 0.0)
            );
        }
    }

    #[test]
    fn detailed_balance_fixed_point() {
        let (w, beta, gm): (f64, f64, f64) = (1.0, 0.7, 0.4);
        let gp = gm * (-beta * w).exp();
        let times = MapTrajectory::uniform_grid(60.0, 601);
        let ig = pc_integrals(&PCRates::constant(w, gp, gm, 0.0), &times, 1);
        let co = ig.coefficients(times.len() - 1);
        assert_abs_diff_eq!(
            co.c / (1.0 - co.d_par),
            (-beta * w / 2.0).tanh(),
            epsilon = 1e-6
        );
    }

    #[test]
    fn generator_round_trip_through_trajectory() {
        let rates = PCRates::constant(1.1, 0.05, 0.12, 0.03);
        let (traj, _) = pc_trajectory(&rates, 2.0, 41, 1).unwrap();
        let reference = rates.generator(0.0);
        for i in [0, 20, 40] {
            let l = traj.generator_at(i).unwrap();
            assert!(generator_residual(&l, &reference) < 1e-7);
        }
        // finite differences on the same maps
        let fd = MapTrajectory::new(
            traj.times().to_vec(),
            traj.maps().to_vec(),
            DerivativeSource::FiniteDifference,
        )
        .unwrap();
        let fine = pc_trajectory(&rates, 2.0, 2001, 1).unwrap().0;
        let fd_fine = MapTrajectory::new(
            fine.times().to_vec(),
            fine.maps().to_vec(),
            DerivativeSource::FiniteDifference,
        )
        .unwrap();
        assert!(generator_residual(&fd_fine.generator_at(1000).unwrap(), &reference) < 1e-6);
        assert!(generator_residual(&fd.generator_at(20).unwrap(), &reference) < 1e-3);
    }

    #[test]
    fn weak_coupling_split_returns_bare_hamiltonian() {
        let l = pc_generator(1.4, 0.03, 0.08, 0.02);
        let s = minimal_dissipation_split(&l, 0.0).unwrap();
        assert!(max_abs(&(s.k.matrix() - pauli::z() * c(0.7))) < 1e-12);
    }

    #[test]
    fn structure_is_closed() {
        let rates = PCRates::new(|t| 1.0 + t, |t| 0.1 * t.cos(), |_| 0.2, |t| 0.05 * t);
        let (traj, _) = pc_trajectory(&rates, 3.0, 31, 2).unwrap();
        for i in 0..traj.len() {
            assert!(pc_structure_residual(traj.map(i)) < 1e-10);
            assert!(pc_structure_residual(&traj.derivative(i).unwrap()) < 1e-10);
            assert!(pc_structure_residual(&traj.inverse(i).unwrap().clone()) < 1e-10);
        }
    }

    #[test]
    fn closed_form_lambda_w_matches_trace_formula() {
        let rates = PCRates::new(|t| 1.0 + 0.5 * t.sin().powi(2), |_| 0.05, |_| 0.12, |_| 0.0);
        let (traj, ig) = pc_trajectory(&rates, 3.0, 31, 4).unwrap();
        let beta = 1.3;
        for n in [0, 10, 30] {
            let co = ig.coefficients(n);
            let th = ig.thermo(n);
            let k = Hermitian::new(pauli::z() * c(ig.omega[n] / 2.0)).unwrap();
            let p = Hermitian::new(pauli::identity() * c(th.p0) + pauli::z() * c(th.p3)).unwrap();
            let ow = k.sub(&p);
            let (l, b) = tpms::lambda_w(traj.map(n), &ow, &k, &p, beta);
            let (la, ba) = pc_lambda_w(&th, &co, ig.omega[n], beta);
            assert_abs_diff_eq!(l, la, epsilon = 1e-12);
            assert_abs_diff_eq!(b, ba, epsilon = 1e-12);
            assert!(la <= ba + 1e-12);
        }
        let (l0, b0) = pc_lambda_w(&ig.thermo(0), &ig.coefficients(0), ig.omega[0], beta);
        assert_eq!((l0, b0), (1.0, 1.0));
    }

    #[test]
    fn closed_ramp_mean_work() {
        let rates = PCRates::new(|t| 1.0 + 0.2 * t, |_| 0.0, |_| 0.0, |_| 0.0);
        let times = MapTrajectory::uniform_grid(2.0, 21);
        let ig = pc_integrals(&rates, &times, 1);
        let beta = 0.8;
        let n = 20;
        let (w, df) =
            pc_mean_work_and_delta_f(&ig.thermo(n), &ig.coefficients(n), 1.0, ig.omega[n], beta);
        let vz = (-beta * 0.5f64).tanh();
        assert_abs_diff_eq!(w, (ig.omega[n] - 1.0) / 2.0 * vz, epsilon = 1e-14);
        let fbar = |om: f64| -(2.0 * (beta * om / 2.0).cosh()).ln() / beta;
        assert_abs_diff_eq!(df, fbar(ig.omega[n]) - fbar(1.0), epsilon = 1e-13);
        let constant = pc_integrals(&PCRates::constant(1.0, 0.0, 0.0, 0.0), &times, 1);
        let (w, df) = pc_mean_work_and_delta_f(
            &constant.thermo(n),
            &constant.coefficients(n),
            1.0,
            1.0,
            beta,
        );
        assert_abs_diff_eq!(w, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(df, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn path_operator_matches_closed_form() {
        let rates = PCRates::new(
            |t| 1.0 + 0.4 * (0.5 * t).sin().powi(2),
            |_| 0.04,
            |_| 0.09,
            |_| 0.0,
        );
        let (traj, ig) = pc_trajectory(&rates, 4.0, 201, 8).unwrap();
        let k: Vec<Hermitian> = ig
            .omega
            .iter()
            .map(|w| Hermitian::new(pauli::z() * c(w / 2.0)).unwrap())
            .collect();
        let p = observables::path_operator_series(&traj, &k, 200).unwrap();
        for n in [0, 50, 200] {
            let th = ig.thermo(n);
            assert_abs_diff_eq!(p[n].matrix()[(0, 0)].re, th.p0 + th.p3, epsilon = 1e-8);
            assert_abs_diff_eq!(p[n].matrix()[(1, 1)].re, th.p0 - th.p3, epsilon = 1e-8);
            assert!(p[n].matrix()[(0, 1)].norm() < 1e-12);
        }
    }

    #[test]
    fn general_d_reduces_to_qubit_formulas() {
        let rates = PCRates::new(|t| 1.0 + 0.3 * t.sin(), |_| 0.03, |_| 0.1, |_| 0.02);
        let (traj, ig) = pc_trajectory(&rates, 3.0, 301, 8).unwrap();
        let s = PCStructure::from_trajectory(&traj).unwrap();
        let g = pc_general_d(&s).unwrap();
        for n in [0, 150, 300] {
            assert_abs_diff_eq!(g.k[n][0], ig.omega[n] / 2.0, epsilon = 1e-10);
            assert_abs_diff_eq!(g.k[n][1], -ig.omega[n] / 2.0, epsilon = 1e-10);
            let th = ig.thermo(n);
            assert_abs_diff_eq!(g.q[n][0], th.p0 + th.p3, epsilon = 1e-8);
            assert_abs_diff_eq!(g.q[n][1], th.p0 - th.p3, epsilon = 1e-8);
            assert_abs_diff_eq!(g.w[n][0], th.w0 + th.w3, epsilon = 1e-8);
        }
    }

    #[test]
    fn general_d_pure_decoherence_and_qutrit() {
        // qutrit dephasing: f_jk = exp(-i ω_jk t - g_jk t), populations frozen
        let e = [0.7, 0.0, -0.4];
        let g = [[0.0, 0.1, 0.3], [0.1, 0.0, 0.2], [0.3, 0.2, 0.0]];
        let times = MapTrajectory::uniform_grid(2.0, 21);
        let coh = |t: f64, dot: bool| {
            CMatrix::from_fn(3, 3, |j, k| {
                if j == k {
                    return c(0.0);
                }
                let rate = num_complex::Complex64::new(-g[j][k], -(e[j] - e[k]));
                let f = (rate * t).exp();
                if dot {
                    rate * f
                } else {
                    f
                }
            })
        };
        let s = PCStructure {
            times: times.clone(),
            dt: times[1],
            populations: vec![DMatrix::identity(3, 3); 21],
            populations_dot: vec![DMatrix::zeros(3, 3); 21],
            coherences: times.iter().map(|&t| coh(t, false)).collect(),
            coherences_dot: times.iter().map(|&t| coh(t, true)).collect(),
        };
        let out = pc_general_d(&s).unwrap();
        let mean: f64 = e.iter().sum::<f64>() / 3.0;
        for n in 0..21 {
            for (j, ej) in e.iter().enumerate() {
                assert_abs_diff_eq!(out.k[n][j], ej - mean, epsilon = 1e-12);
                assert_eq!(out.q[n][j], 0.0);
            }
        }
    }

    #[test]
    fn ln_cosh_is_stable() {
        assert_abs_diff_eq!(ln_cosh(0.3), 0.3f64.cosh().ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            ln_cosh(-800.0),
            800.0 - std::f64::consts::LN_2,
            epsilon = 1e-12
        );
    }
}
