// SPDX-License-Identifier: Apache-2.0

//! Dynamical maps on a uniform time grid: generators, the minimal-dissipation
//! split, inverse propagators and invertibility monitoring.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{
    basis_element, c, commutator, max_abs, CMatrix, Hermitian, Superoperator,
    DEFAULT_CONDITION_THRESHOLD, IM,
};
use crate::par;

pub mod io;

/// Relative tolerance on grid uniformity.
const GRID_TOL: f64 = 1e-9;

/// How `Φ̇_t` is obtained at grid points.
#[derive(Clone, Debug, PartialEq)]
pub enum DerivativeSource {
    /// Caller-supplied derivative at every grid point.
    Analytic(Vec<Superoperator>),
    /// Second-order central differences, one-sided second order at the ends.
    FiniteDifference,
}

/// A dynamical map sampled on a uniform grid starting at `t = 0`.
#[derive(Clone, Debug)]
pub struct MapTrajectory {
    times: Vec<f64>,
    dt: f64,
    maps: Vec<Superoperator>,
    derivative: DerivativeSource,
    threshold: f64,
    inverses: OnceLock<Vec<std::result::Result<(Superoperator, f64), f64>>>,
}

impl MapTrajectory {
    pub fn new(
        times: Vec<f64>,
        maps: Vec<Superoperator>,
        derivative: DerivativeSource,
    ) -> Result<Self> {
        if times.len() != maps.len() {
            return Err(Error::InvalidTrajectory(format!(
                "{} times but {} maps",
                times.len(),
                maps.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::InvalidTrajectory("empty trajectory".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidTrajectory(format!(
                "grid starts at {} instead of 0",
                times[0]
            )));
        }
        let dt = if times.len() > 1 {
            times[1] - times[0]
        } else {
            0.0
        };
        for (i, w) in times.windows(2).enumerate() {
            let step = w[1] - w[0];
            if step <= 0.0 {
                return Err(Error::InvalidTrajectory(format!(
                    "grid not increasing at index {}",
                    i + 1
                )));
            }
            if (step - dt).abs() > GRID_TOL * dt.max(1.0) * (1.0 + i as f64) {
                return Err(Error::InvalidTrajectory(format!(
                    "grid not uniform at index {}",
                    i + 1
                )));
            }
        }
        let dim = maps[0].dim();
        if let Some(m) = maps.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.dim(),
            });
        }
        if maps[0].distance(&Superoperator::identity(dim)) > 1e-12 {
            return Err(Error::InvalidTrajectory(
                "map at t = 0 is not the identity".into(),
            ));
        }
        for (t, m) in times.iter().zip(&maps) {
            let r = m.trace_preservation_residual();
            if r > 1e-10 {
                return Err(Error::InvalidTrajectory(format!(
                    "map at t = {t} is not trace preserving (residual {r:.3e})"
                )));
            }
        }
        if let DerivativeSource::Analytic(d) = &derivative {
            if d.len() != maps.len() || d.iter().any(|x| x.dim() != dim) {
                return Err(Error::InvalidTrajectory(
                    "derivative samples do not match the maps".into(),
                ));
            }
        }
        Ok(MapTrajectory {
            times,
            dt,
            maps,
            derivative,
            threshold: DEFAULT_CONDITION_THRESHOLD,
            inverses: OnceLock::new(),
        })
    }

    /// Uniform grid `t_i = i * t_max / (n - 1)`.
    pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
        let h = t_max / (n - 1) as f64;
        (0..n).map(|i| i as f64 * h).collect()
    }

    /// Replace the singularity threshold on the condition number.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self.inverses = OnceLock::new();
        self
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn maps(&self) -> &[Superoperator] {
        &self.maps
    }

    pub fn map(&self, i: usize) -> &Superoperator {
        &self.maps[i]
    }

    pub fn derivative_source(&self) -> &DerivativeSource {
        &self.derivative
    }

    /// Index of the grid point closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        if self.len() == 1 {
            return 0;
        }
        ((t / self.dt).round().max(0.0) as usize).min(self.len() - 1)
    }

    /// `Φ̇` at grid index `i`.
    pub fn derivative(&self, i: usize) -> Result<Superoperator> {
        match &self.derivative {
            DerivativeSource::Analytic(d) => Ok(d[i].clone()),
            DerivativeSource::FiniteDifference => {
                let n = self.len();
                if n < 3 {
                    return Err(Error::BoundaryStencil { needed: 3, len: n });
                }
                let h = self.dt;
                let m = &self.maps;
                let out = if i == 0 {
                    m[0].scale(-3.0).add(&m[1].scale(4.0)).sub(&m[2])
                } else if i == n - 1 {
                    m[n - 1].scale(3.0).sub(&m[n - 2].scale(4.0)).add(&m[n - 3])
                } else {
                    m[i + 1].sub(&m[i - 1])
                };
                Ok(out.scale(1.0 / (2.0 * h)))
            }
        }
    }

    fn inverse_table(&self) -> &[std::result::Result<(Superoperator, f64), f64>] {
        self.inverses.get_or_init(|| {
            par::map_slice(&self.maps, |m| match m.invert(self.threshold) {
                Ok(pair) => Ok(pair),
                Err(Error::SingularMap { condition, .. }) => Err(condition),
                Err(_) => Err(f64::INFINITY),
            })
        })
    }

    /// `Φ_{t_i}⁻¹`, computed once per grid point and cached.
    pub fn inverse(&self, i: usize) -> Result<&Superoperator> {
        match &self.inverse_table()[i] {
            Ok((inv, _)) => Ok(inv),
            Err(cond) => Err(Error::SingularMap {
                time: Some(self.times[i]),
                condition: *cond,
                threshold: self.threshold,
            }),
        }
    }

    pub fn condition_number(&self, i: usize) -> f64 {
        match &self.inverse_table()[i] {
            Ok((_, cond)) => *cond,
            Err(cond) => *cond,
        }
    }

    /// First grid index whose map is singular, if any.
    pub fn first_singular(&self) -> Option<usize> {
        self.inverse_table().iter().position(|r| r.is_err())
    }

    /// Fails with the earliest singular time in `0..=i`.
    pub fn require_invertible_through(&self, i: usize) -> Result<()> {
        match self.first_singular() {
            Some(s) if s <= i => self.inverse(s).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Time-local generator `L_t = Φ̇_t Φ_t⁻¹`.
    pub fn generator_at(&self, i: usize) -> Result<Superoperator> {
        let inv = self.inverse(i)?;
        Ok(self.derivative(i)?.compose(inv))
    }

    /// `Φ_{τ,t} = Φ_τ ∘ Φ_t⁻¹` for `τ = t_{i_tau} ≤ t = t_{i_t}`.
    pub fn inverse_propagator(&self, i_tau: usize, i_t: usize) -> Result<Superoperator> {
        if i_tau > i_t {
            return Err(Error::InvalidParameter(format!(
                "inverse propagator needs tau <= t, got indices {i_tau} > {i_t}"
            )));
        }
        let inv = self.inverse(i_t)?;
        if i_tau == i_t {
            return Ok(Superoperator::identity(self.dim()));
        }
        Ok(self.maps[i_tau].compose(inv))
    }

    /// Condition number and flag at every grid time.
    pub fn invertibility_report(&self) -> Vec<InvertibilityEntry> {
        let conds: Vec<f64> = (0..self.len()).map(|i| self.condition_number(i)).collect();
        classify_conditions(&self.times, &conds, self.threshold)
    }
}

/// Condition numbers above this are flagged as a warning.
pub const WARNING_CONDITION: f64 = 1e3;
/// Half-width of the window used to detect isolated spikes.
const SPIKE_WINDOW: usize = 5;
/// A spike exceeds the smallest condition number in its window by this factor.
const SPIKE_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InvertibilityFlag {
    Regular,
    Warning,
    Spike,
    Singular,
}

impl InvertibilityFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            InvertibilityFlag::Regular => "regular",
            InvertibilityFlag::Warning => "warning",
            InvertibilityFlag::Spike => "spike",
            InvertibilityFlag::Singular => "singular",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvertibilityEntry {
    pub time: f64,
    pub condition: f64,
    pub flag: InvertibilityFlag,
}

/// Flags: `singular` above `threshold`; `spike` for a strict local maximum at
/// least ten times the window minimum; `warning` above 1e3; else `regular`.
pub fn classify_conditions(
    times: &[f64],
    conds: &[f64],
    threshold: f64,
) -> Vec<InvertibilityEntry> {
    let n = conds.len();
    (0..n)
        .map(|i| {
            let cond = conds[i];
            let flag = if !(cond <= threshold) {
                InvertibilityFlag::Singular
            } else if is_spike(conds, i) {
                InvertibilityFlag::Spike
            } else if cond > WARNING_CONDITION {
                InvertibilityFlag::Warning
            } else {
                InvertibilityFlag::Regular
            };
            InvertibilityEntry {
                time: times[i],
                condition: cond,
                flag,
            }
        })
        .collect()
}

fn is_spike(conds: &[f64], i: usize) -> bool {
    let n = conds.len();
    if i == 0 || i + 1 >= n {
        return false;
    }
    if !(conds[i] > conds[i - 1] && conds[i] > conds[i + 1]) {
        return false;
    }
    let lo = i.saturating_sub(SPIKE_WINDOW);
    let hi = (i + SPIKE_WINDOW).min(n - 1);
    let min = conds[lo..=hi].iter().cloned().fold(f64::INFINITY, f64::min);
    conds[i] >= SPIKE_FACTOR * min
}

/// Minimal-dissipation decomposition `L = -i[K, ·] + D` at one time.
#[derive(Clone, Debug)]
pub struct GeneratorSplit {
    pub time: f64,
    pub k: Hermitian,
    pub dissipator: Superoperator,
}

impl GeneratorSplit {
    /// Rebuild the generator from its parts.
    pub fn reassemble(&self) -> Superoperator {
        Superoperator::hamiltonian(self.k.matrix()).add(&self.dissipator)
    }
}

/// Split a generator into effective Hamiltonian and dissipator using
/// `K = (1/2id) Σ_jk [|j><k|, L(|k><j|)]` in the computational basis.
pub fn minimal_dissipation_split(l: &Superoperator, time: f64) -> Result<GeneratorSplit> {
    let d = l.dim();
    let scale = max_abs(l.matrix()).max(1.0);
    let tr = l.trace_annihilation_residual();
    if tr > 1e-8 * scale {
        return Err(Error::InvalidGenerator(format!(
            "not trace annihilating at t = {time} (residual {tr:.3e})"
        )));
    }
    let herm = l.hermiticity_residual();
    if herm > 1e-8 * scale {
        return Err(Error::InvalidGenerator(format!(
            "not Hermiticity preserving at t = {time} (residual {herm:.3e})"
        )));
    }
    let k = effective_hamiltonian(l, &CMatrix::identity(d, d));
    let dissipator = l.sub(&Superoperator::hamiltonian(k.matrix()));
    Ok(GeneratorSplit {
        time,
        k,
        dissipator,
    })
}

/// The minimal-dissipation Hamiltonian evaluated in the orthonormal basis
/// given by the columns of `basis`.
pub fn effective_hamiltonian(l: &Superoperator, basis: &CMatrix) -> Hermitian {
    let d = l.dim();
    let mut acc = CMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            let vj = basis.column(j);
            let vk = basis.column(k);
            let e_jk = vj * vk.adjoint();
            let e_kj = vk * vj.adjoint();
            let image = l.apply(&e_kj).expect("dimension matches");
            acc += commutator(&e_jk, &image);
        }
    }
    let k = acc / (c(2.0 * d as f64) * IM);
    Hermitian::symmetrized(k)
}

/// One term `γ (L X L† - {L†L, X}/2)` of a dissipator with `‖L‖_F = 1`.
#[derive(Clone, Debug)]
pub struct LindbladChannel {
    pub rate: f64,
    pub operator: CMatrix,
}

/// Diagonal Lindblad form of a dissipator with traceless jump operators.
/// Channels with `|rate|` below `cutoff` are dropped. Diagnostic only.
pub fn lindblad_decomposition(dissipator: &Superoperator, cutoff: f64) -> Vec<LindbladChannel> {
    let d = dissipator.dim();
    let choi = dissipator.choi();
    let mut omega = CMatrix::zeros(d * d, 1);
    for i in 0..d {
        omega[(i * d + i, 0)] = c(1.0 / (d as f64).sqrt());
    }
    let p = CMatrix::identity(d * d, d * d) - &omega * omega.adjoint();
    let projected = Hermitian::symmetrized(&p * choi * &p);
    let spec = projected.eig();
    let mut out = Vec::new();
    for (n, &rate) in spec.values.iter().enumerate() {
        if rate.abs() <= cutoff {
            continue;
        }
        let v = spec.vector(n);
        let mut op = CMatrix::zeros(d, d);
        for i in 0..d {
            for k in 0..d {
                op[(k, i)] = v[i * d + k];
            }
        }
        out.push(LindbladChannel { rate, operator: op });
    }
    out
}

/// Largest entry of `(l - reference)(|j><k|)` over all matrix units.
pub fn generator_residual(l: &Superoperator, reference: &Superoperator) -> f64 {
    let d = l.dim();
    let mut r = 0.0_f64;
    for j in 0..d {
        for k in 0..d {
            let e = basis_element(d, j, k);
            let a = l.apply(&e).expect("dimension matches");
            let b = reference.apply(&e).expect("dimension matches");
            r = r.max(max_abs(&(a - b)));
        }
    }
    r
}
