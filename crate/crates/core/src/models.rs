// SPDX-License-Identifier: Apache-2.0

//! Two concrete qubit models: a driven qubit weakly coupled to a thermal bath,
//! and a qubit exchanging excitations with a single thermal bosonic mode
//! (Jaynes-Cummings), solved exactly sector by sector.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dynamics::{DerivativeSource, MapTrajectory};
use crate::error::{Error, Result};
use crate::linalg::{c, max_abs, pauli, CMatrix, Superoperator, IM};
use crate::phase_covariant::{PCRates, RateSamples};

/// Shape of the frequency drive `ω(t) = ω0 + δ sin²(Ωt)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriveMode {
    /// Up to the first maximum, `t_f = π / 2Ω`.
    Monotonic,
    /// One full period, `t_f = 2π / Ω`.
    Periodic,
}

impl DriveMode {
    pub fn final_time(self, drive_frequency: f64) -> f64 {
        match self {
            DriveMode::Monotonic => std::f64::consts::FRAC_PI_2 / drive_frequency,
            DriveMode::Periodic => 2.0 * std::f64::consts::PI / drive_frequency,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DriveMode::Monotonic => "monotonic",
            DriveMode::Periodic => "periodic",
        }
    }
}

impl std::str::FromStr for DriveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monotonic" => Ok(DriveMode::Monotonic),
            "periodic" => Ok(DriveMode::Periodic),
            other => Err(Error::InvalidParameter(format!(
                "unknown drive mode '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakCouplingParams {
    pub omega0: f64,
    pub delta: f64,
    /// Drive frequency `Ω`.
    pub drive_frequency: f64,
    pub gamma: f64,
    pub beta: f64,
    pub gamma_z: f64,
    pub t_f: f64,
    pub drive_mode: Option<DriveMode>,
}

impl WeakCouplingParams {
    /// Monotonic ramp with `ω0 = δ = β = 1`, `γ = 0.01`, `Ω = π/20`, `t_f = 10`.
    pub fn monotonic_ramp() -> Self {
        WeakCouplingParams {
            omega0: 1.0,
            delta: 1.0,
            drive_frequency: std::f64::consts::PI / 20.0,
            gamma: 0.01,
            beta: 1.0,
            gamma_z: 0.0,
            t_f: 10.0,
            drive_mode: Some(DriveMode::Monotonic),
        }
    }

    /// Same bath with one full drive period, `Ω = π/5`, `t_f = 10`.
    pub fn periodic_drive() -> Self {
        WeakCouplingParams {
            drive_frequency: std::f64::consts::PI / 5.0,
            drive_mode: Some(DriveMode::Periodic),
            ..Self::monotonic_ramp()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.gamma >= 0.0) {
            return bad(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return bad(format!(
                "beta must be positive and finite, got {}",
                self.beta
            ));
        }
        if !(self.omega0 > 0.0) {
            return bad(format!("omega0 must be positive, got {}", self.omega0));
        }
        if !(self.t_f > 0.0) {
            return bad(format!("t_f must be positive, got {}", self.t_f));
        }
        if let Some(mode) = self.drive_mode {
            let expected = mode.final_time(self.drive_frequency);
            if (expected - self.t_f).abs() > 1e-9 * expected.abs().max(1.0) {
                return bad(format!(
                    "t_f = {} inconsistent with {} drive at frequency {} (expected {})",
                    self.t_f,
                    mode.as_str(),
                    self.drive_frequency,
                    expected
                ));
            }
        }
        Ok(())
    }

    /// Bose occupation at the initial frequency, `N = 1/(e^{βω0} - 1)`.
    pub fn occupation(&self) -> f64 {
        1.0 / (self.beta * self.omega0).exp_m1()
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        self.omega0 + self.delta * (self.drive_frequency * t).sin().powi(2)
    }
}

/// `ω(t) = ω0 + δ sin²(Ωt)`, `γ- = γ(N + 1)`, `γ+ = γN`, constant `γz`.
pub fn weak_coupling_rates(p: &WeakCouplingParams) -> PCRates {
    let n = p.occupation();
    let (gp, gm, gz) = (p.gamma * n, p.gamma * (n + 1.0), p.gamma_z);
    let (w0, d, om) = (p.omega0, p.delta, p.drive_frequency);
    PCRates::new(
        move |t| w0 + d * (om * t).sin().powi(2),
        move |_| gp,
        move |_| gm,
        move |_| gz,
    )
}

/// Thermal tail weight required by a user-supplied truncation.
pub const TRUNCATION_TAIL_MAX: f64 = 1e-10;
/// Tail weight targeted by the automatic truncation.
pub const TRUNCATION_TAIL_AUTO: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct JCParams {
    pub omega: f64,
    pub omega_m: f64,
    pub g: f64,
    pub beta: f64,
    /// Highest mode occupation kept; chosen from the thermal tail if absent.
    pub n_max: Option<usize>,
    pub t_max: f64,
    pub n_steps: usize,
}

impl JCParams {
    /// `ω = 1`, `ω_m = 2`, `g = 0.01`.
    pub fn weak(beta: f64, t_max: f64, n_steps: usize) -> Self {
        JCParams {
            omega: 1.0,
            omega_m: 2.0,
            g: 0.01,
            beta,
            n_max: None,
            t_max,
            n_steps,
        }
    }

    /// `ω = 1`, `ω_m = 1.5`, `g = 0.1`.
    pub fn strong(beta: f64, t_max: f64, n_steps: usize) -> Self {
        JCParams {
            omega_m: 1.5,
            g: 0.1,
            ..Self::weak(beta, t_max, n_steps)
        }
    }

    pub fn detuning(&self) -> f64 {
        self.omega - self.omega_m
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.beta > 0.0) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.omega_m > 0.0) {
            return bad(format!("omega_m must be positive, got {}", self.omega_m));
        }
        if !self.omega.is_finite() || !self.g.is_finite() {
            return bad("omega and g must be finite".into());
        }
        if let Some(n) = self.n_max {
            if n < 2 {
                return bad(format!("n_max must be at least 2, got {n}"));
            }
        }
        if self.n_steps < 2 || !(self.t_max > 0.0) {
            return bad("grid needs t_max > 0 and at least 2 points".into());
        }
        Ok(())
    }
}

/// Renormalized thermal occupations `p_n ∝ x^n`, `x = e^{-βω_m}`, for
/// `n = 0..=n_max`, and the discarded tail weight `x^{n_max + 1}`.
pub fn thermal_weights(beta: f64, omega_m: f64, n_max: Option<usize>) -> Result<(Vec<f64>, f64)> {
    let x = (-beta * omega_m).exp();
    let levels_for = |tail: f64| -> usize {
        if x == 0.0 {
            0
        } else {
            ((tail.ln() / x.ln()).ceil() as usize).saturating_sub(1)
        }
    };
    let n = match n_max {
        Some(n) => {
            let tail = x.powi(n as i32 + 1);
            if tail > TRUNCATION_TAIL_MAX {
                return Err(Error::Truncation {
                    n_max: n,
                    tail,
                    required: levels_for(TRUNCATION_TAIL_MAX).max(2),
                });
            }
            n
        }
        None => levels_for(TRUNCATION_TAIL_AUTO).max(2),
    };
    let tail = x.powi(n as i32 + 1);
    let raw: Vec<f64> = (0..=n).map(|k| x.powi(k as i32)).collect();
    let total: f64 = raw.iter().sum();
    Ok((raw.into_iter().map(|p| p / total).collect(), tail))
}

/// Propagator of one excitation sector `{|e,n>, |g,n+1>}` and its time
/// derivative.
fn sector_propagator(p: &JCParams, n: usize, t: f64) -> ([[Complex64; 2]; 2], [[Complex64; 2]; 2]) {
    let e0 = p.omega_m * (2 * n + 1) as f64 / 2.0;
    let delta = p.detuning();
    let gn = p.g * ((n + 1) as f64).sqrt();
    let rabi = (delta * delta + 4.0 * gn * gn).sqrt();
    let (co, s_over) = if rabi == 0.0 {
        (1.0, t / 2.0)
    } else {
        ((rabi * t / 2.0).cos(), (rabi * t / 2.0).sin() / rabi)
    };
    let phase = Complex64::from_polar(1.0, -e0 * t);
    let u = [
        [
            phase * Complex64::new(co, -s_over * delta),
            phase * Complex64::new(0.0, -s_over * 2.0 * gn),
        ],
        [
            phase * Complex64::new(0.0, -s_over * 2.0 * gn),
            phase * Complex64::new(co, s_over * delta),
        ],
    ];
    let h = [[c(e0 + delta / 2.0), c(gn)], [c(gn), c(e0 - delta / 2.0)]];
    let mut du = [[c(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            du[i][j] = -IM * (h[i][0] * u[0][j] + h[i][1] * u[1][j]);
        }
    }
    (u, du)
}

/// Evolved `U_t|s, m>` as (qubit index, Fock index, amplitude, d/dt amplitude).
/// Qubit index 0 is the excited state.
fn evolved(p: &JCParams, s: usize, m: usize, t: f64) -> Vec<(usize, usize, Complex64, Complex64)> {
    if s == 0 {
        let (u, du) = sector_propagator(p, m, t);
        vec![(0, m, u[0][0], du[0][0]), (1, m + 1, u[1][0], du[1][0])]
    } else if m == 0 {
        let e = -p.omega / 2.0;
        let amp = Complex64::from_polar(1.0, -e * t);
        vec![(1, 0, amp, -IM * c(e) * amp)]
    } else {
        let (u, du) = sector_propagator(p, m - 1, t);
        vec![(0, m - 1, u[0][1], du[0][1]), (1, m, u[1][1], du[1][1])]
    }
}

/// Reduced map and its derivative at one time.
fn reduced_map_at(p: &JCParams, weights: &[f64], t: f64) -> (Superoperator, Superoperator) {
    let mut m_map = CMatrix::zeros(4, 4);
    let mut m_dot = CMatrix::zeros(4, 4);
    for (m, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let psi = [evolved(p, 0, m, t), evolved(p, 1, m, t)];
        for s in 0..2 {
            for s2 in 0..2 {
                let col = s + 2 * s2;
                for &(r, k, a, da) in &psi[s] {
                    for &(r2, k2, b, db) in &psi[s2] {
                        if k != k2 {
                            continue;
                        }
                        let row = r + 2 * r2;
                        m_map[(row, col)] += c(w) * a * b.conj();
                        m_dot[(row, col)] += c(w) * (da * b.conj() + a * db.conj());
                    }
                }
            }
        }
    }
    (
        Superoperator::from_matrix(2, m_map).expect("4x4"),
        Superoperator::from_matrix(2, m_dot).expect("4x4"),
    )
}

/// Exact reduced dynamics of the qubit with the mode initially thermal at
/// `β`, with analytic derivatives.
pub fn jc_reduced_map(p: &JCParams) -> Result<MapTrajectory> {
    p.validate()?;
    let (weights, _) = thermal_weights(p.beta, p.omega_m, p.n_max)?;
    let times = MapTrajectory::uniform_grid(p.t_max, p.n_steps);
    let pairs = crate::par::map_slice(&times, |&t| reduced_map_at(p, &weights, t));
    let (maps, derivs): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    MapTrajectory::new(times, maps, DerivativeSource::Analytic(derivs))
}

/// Time-local frequency and rates recovered from a qubit trajectory.
/// Entries at times where the map cannot be inverted are NaN and listed in
/// `singular`.
#[derive(Clone, Debug)]
pub struct ExtractedRates {
    pub samples: RateSamples,
    /// Largest entry of the generator outside the phase-covariant span.
    pub residual: Vec<f64>,
    pub singular: Vec<usize>,
}

impl ExtractedRates {
    pub fn max_residual(&self) -> f64 {
        self.residual
            .iter()
            .filter(|r| r.is_finite())
            .fold(0.0, |a, &b| a.max(b))
    }
}

fn pc_basis() -> [Superoperator; 4] {
    [
        Superoperator::hamiltonian(&(pauli::z() * c(0.5))),
        Superoperator::lindblad(&pauli::raising()),
        Superoperator::lindblad(&pauli::lowering()),
        Superoperator::lindblad(&pauli::z()),
    ]
}

/// Least-squares coordinates `(ω, γ+, γ-, γz)` of a qubit generator in the
/// phase-covariant basis, and the largest residual entry.
pub fn project_pc_generator(l: &Superoperator) -> ([f64; 4], f64) {
    let basis = pc_basis();
    let a = DMatrix::<f64>::from_fn(32, 4, |r, k| {
        let z = basis[k].matrix()[((r % 16) % 4, (r % 16) / 4)];
        if r < 16 {
            z.re
        } else {
            z.im
        }
    });
    let b = DVector::<f64>::from_fn(32, |r, _| {
        let z = l.matrix()[((r % 16) % 4, (r % 16) / 4)];
        if r < 16 {
            z.re
        } else {
            z.im
        }
    });
    let x = a.svd(true, true).solve(&b, 1e-14).expect("full rank basis");
    let coords = [x[0], x[1], x[2], x[3]];
    let mut fit = Superoperator::zeros(2);
    for (k, s) in basis.iter().enumerate() {
        fit = fit.add(&s.scale(coords[k]));
    }
    (coords, max_abs(&(l.matrix() - fit.matrix())))
}

/// Projects the time-local generator at every grid time onto
/// `{-i[σz/2, ·], D[σ+], D[σ-], D[σz]}`.
pub fn jc_extract_pc(traj: &MapTrajectory) -> Result<ExtractedRates> {
    if traj.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: traj.dim(),
        });
    }
    let n = traj.len();
    let rows = crate::par::map_range(n, |i| match traj.generator_at(i) {
        Ok(l) => Ok(project_pc_generator(&l)),
        Err(e) if e.is_numerical() => Err(i),
        Err(e) => panic!("generator extraction failed: {e}"),
    });
    let mut samples = RateSamples {
        times: traj.times().to_vec(),
        omega: Vec::with_capacity(n),
        gamma_plus: Vec::with_capacity(n),
        gamma_minus: Vec::with_capacity(n),
        gamma_z: Vec::with_capacity(n),
    };
    let mut residual = Vec::with_capacity(n);
    let mut singular = Vec::new();
    for row in rows {
        let (x, r) = row.unwrap_or_else(|i| {
            singular.push(i);
            ([f64::NAN; 4], f64::NAN)
        });
        samples.omega.push(x[0]);
        samples.gamma_plus.push(x[1]);
        samples.gamma_minus.push(x[2]);
        samples.gamma_z.push(x[3]);
        residual.push(r);
    }
    Ok(ExtractedRates {
        samples,
        residual,
        singular,
    })
}
