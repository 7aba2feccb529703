// SPDX-License-Identifier: Apache-2.0

//! Path-dependent thermodynamic observables: the path operator `𝔓(t)`, work
//! and heat operators, shifted observables, and the coherent-initial-state
//! construction for closed systems.

use std::io::Write;

use crate::dynamics::{minimal_dissipation_split, MapTrajectory};
use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, Hermitian, Superoperator};
use crate::par;
use crate::quadrature;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    InternalEnergy,
    Work,
    Heat,
    Custom,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::InternalEnergy => "internal_energy",
            Label::Work => "work",
            Label::Heat => "heat",
            Label::Custom => "custom",
        }
    }
}

/// An observable pair `(O_x(0), O_x(t))` for every target time `t` on a grid.
///
/// The initial operator is stored per target time because some measurement
/// conventions fix `O_x(0)` differently for each final time.
#[derive(Clone, Debug)]
pub struct ObservableSeries {
    pub label: Label,
    pub times: Vec<f64>,
    pub initial: Vec<Hermitian>,
    pub ops: Vec<Hermitian>,
}

impl ObservableSeries {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Write `t`, eigenvalues of `O_x(t)` and its entries (real and imaginary
    /// parts, row-major) as CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.ops.first().map(|o| o.dim()).unwrap_or(0);
        let mut header = String::from("t");
        for n in 0..d {
            header.push_str(&format!(",eig_{n}"));
        }
        for r in 0..d {
            for col in 0..d {
                header.push_str(&format!(",o{r}_{col}_re,o{r}_{col}_im"));
            }
        }
        writeln!(w, "{header}")?;
        for (t, op) in self.times.iter().zip(&self.ops) {
            let mut line = format!("{t:.16e}");
            for e in op.eigenvalues() {
                line.push_str(&format!(",{e:.16e}"));
            }
            for r in 0..d {
                for col in 0..d {
                    let z = op.matrix()[(r, col)];
                    line.push_str(&format!(",{:.16e},{:.16e}", z.re, z.im));
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// `S[H]` for a Hermiticity-preserving `S`, symmetrized.
pub fn apply_hermitian(s: &Superoperator, h: &Hermitian) -> Hermitian {
    Hermitian::symmetrized(s.apply(h.matrix()).expect("dimensions checked by caller"))
}

fn check_series(traj: &MapTrajectory, k: &[Hermitian], upto: usize) -> Result<()> {
    if upto >= traj.len() || k.len() <= upto {
        return Err(Error::InvalidParameter(format!(
            "index {upto} outside trajectory of {} points with {} Hamiltonian samples",
            traj.len(),
            k.len()
        )));
    }
    if let Some(h) = k.iter().find(|h| h.dim() != traj.dim()) {
        return Err(Error::DimensionMismatch {
            expected: traj.dim(),
            found: h.dim(),
        });
    }
    Ok(())
}

/// The minimal-dissipation effective Hamiltonian at grid points `0..=upto`.
pub fn effective_hamiltonian_series(traj: &MapTrajectory, upto: usize) -> Result<Vec<Hermitian>> {
    traj.require_invertible_through(upto)?;
    par::map_range(upto + 1, |i| {
        let l = traj.generator_at(i)?;
        Ok(minimal_dissipation_split(&l, traj.time(i))?.k)
    })
    .into_iter()
    .collect()
}

/// `𝔓(t_i)` for every `i` in `0..=upto`:
/// `𝔓(t) = (Φ_t⁻¹)† ∫_0^t Φ_τ† D_τ†[K(τ)] dτ`, with `D_τ` the minimal-dissipation
/// dissipator and the integral taken by cumulative Simpson quadrature.
pub fn path_operator_series(
    traj: &MapTrajectory,
    k: &[Hermitian],
    upto: usize,
) -> Result<Vec<Hermitian>> {
    check_series(traj, k, upto)?;
    traj.require_invertible_through(upto)?;
    let integrand: Vec<_> = par::map_range(upto + 1, |i| -> Result<_> {
        let l = traj.generator_at(i)?;
        let split = minimal_dissipation_split(&l, traj.time(i))?;
        let flow = split.dissipator.hs_adjoint().apply(k[i].matrix())?;
        traj.map(i).hs_adjoint().apply(&flow)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let cumulative = quadrature::cumulative(&integrand, traj.dt());
    par::map_range(upto + 1, |i| -> Result<Hermitian> {
        let inv = traj.inverse(i)?;
        Ok(Hermitian::symmetrized(
            inv.hs_adjoint().apply(&cumulative[i])?,
        ))
    })
    .into_iter()
    .collect()
}

/// `𝔓(t_i)` at a single grid index.
pub fn path_operator(traj: &MapTrajectory, k: &[Hermitian], i: usize) -> Result<Hermitian> {
    Ok(path_operator_series(traj, k, i)?.pop().expect("non-empty"))
}

/// Choice of measured observables for the work/heat statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// `O_w(0) = K(0)`, `O_q(0) = 0`, `O_w(t) = K(t) - 𝔓(t)`, `O_q(t) = 𝔓(t)`.
    TwoPointEnergyFirst,
    /// `O_w(0) = O_q(0) = 0`; final operators absorb the initial ones.
    SingleMeasureFinal,
    /// `O_w(t) = O_q(t) = 0`; initial operators absorb the final ones.
    SingleMeasureInitial,
}

impl Convention {
    pub fn as_str(&self) -> &'static str {
        match self {
            Convention::TwoPointEnergyFirst => "two_point_energy_first",
            Convention::SingleMeasureFinal => "single_measure_final",
            Convention::SingleMeasureInitial => "single_measure_initial",
        }
    }
}

impl std::str::FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_point_energy_first" => Ok(Convention::TwoPointEnergyFirst),
            "single_measure_final" => Ok(Convention::SingleMeasureFinal),
            "single_measure_initial" => Ok(Convention::SingleMeasureInitial),
            other => Err(Error::InvalidParameter(format!(
                "unknown convention '{other}'"
            ))),
        }
    }
}

/// Work and heat observables on grid points `0..p.len()` from the Hamiltonian
/// samples `k` and the path operators `p`.
pub fn work_heat_observables(
    traj: &MapTrajectory,
    k: &[Hermitian],
    p: &[Hermitian],
    convention: Convention,
) -> Result<(ObservableSeries, ObservableSeries)> {
    let n = p.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty path-operator series".into()));
    }
    check_series(traj, k, n - 1)?;
    let d = traj.dim();
    let zero = Hermitian::zeros(d);
    let times = traj.times()[..n].to_vec();
    let (w_init, w_ops, q_init, q_ops): (Vec<_>, Vec<_>, Vec<_>, Vec<_>) = match convention {
        Convention::TwoPointEnergyFirst => (
            vec![k[0].clone(); n],
            (0..n).map(|i| k[i].sub(&p[i])).collect(),
            vec![zero.clone(); n],
            p.to_vec(),
        ),
        Convention::SingleMeasureFinal => {
            let back: Vec<Hermitian> = par::map_range(n, |i| -> Result<Hermitian> {
                Ok(apply_hermitian(&traj.inverse(i)?.hs_adjoint(), &k[0]))
            })
            .into_iter()
            .collect::<Result<_>>()?;
            (
                vec![zero.clone(); n],
                (0..n).map(|i| k[i].sub(&p[i]).sub(&back[i])).collect(),
                vec![zero.clone(); n],
                p.to_vec(),
            )
        }
        Convention::SingleMeasureInitial => {
            let adj: Vec<Superoperator> = (0..n).map(|i| traj.map(i).hs_adjoint()).collect();
            (
                (0..n)
                    .map(|i| k[0].sub(&apply_hermitian(&adj[i], &k[i].sub(&p[i]))))
                    .collect(),
                vec![zero.clone(); n],
                (0..n)
                    .map(|i| apply_hermitian(&adj[i], &p[i]).scale(-1.0))
                    .collect(),
                vec![zero.clone(); n],
            )
        }
    };
    Ok((
        ObservableSeries {
            label: Label::Work,
            times: times.clone(),
            initial: w_init,
            ops: w_ops,
        },
        ObservableSeries {
            label: Label::Heat,
            times,
            initial: q_init,
            ops: q_ops,
        },
    ))
}

/// Internal-energy observables `O_u(0) = K(0)`, `O_u(t) = K(t)`.
pub fn internal_energy_observables(
    traj: &MapTrajectory,
    k: &[Hermitian],
    upto: usize,
) -> ObservableSeries {
    ObservableSeries {
        label: Label::InternalEnergy,
        times: traj.times()[..=upto].to_vec(),
        initial: vec![k[0].clone(); upto + 1],
        ops: k[..=upto].to_vec(),
    }
}

/// `O'(t) = O(t) - (Φ_t⁻¹)†[O(0) - O'(0)]` with `O'(0) = new_initial`.
pub fn shifted_observable(
    series: &ObservableSeries,
    traj: &MapTrajectory,
    new_initial: &Hermitian,
) -> Result<ObservableSeries> {
    let ops = par::map_range(series.len(), |i| -> Result<Hermitian> {
        let diff = series.initial[i].sub(new_initial);
        let back = apply_hermitian(&traj.inverse(i)?.hs_adjoint(), &diff);
        Ok(series.ops[i].sub(&back))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(ObservableSeries {
        label: series.label,
        times: series.times.clone(),
        initial: vec![new_initial.clone(); series.len()],
        ops,
    })
}

/// Mean change `ΔX(t) = Tr{O(t) Φ_t[ρ0]} - Tr{O(0) ρ0}` at every series time.
pub fn mean_change(
    series: &ObservableSeries,
    traj: &MapTrajectory,
    rho0: &DensityMatrix,
) -> Vec<f64> {
    (0..series.len())
        .map(|i| {
            let rho_t = traj.map(i).apply(rho0.matrix()).expect("dimension matches");
            series.ops[i].expectation(&rho_t) - series.initial[i].expectation(rho0.matrix())
        })
        .collect()
}

/// Largest entry of `O_w(t) + O_q(t) - O_w(0) - O_q(0) - (K(t) - K(0))`.
pub fn balance_residual(work: &ObservableSeries, heat: &ObservableSeries, k: &[Hermitian]) -> f64 {
    (0..work.len())
        .map(|i| {
            let lhs = work.ops[i]
                .add(&heat.ops[i])
                .sub(&work.initial[i])
                .sub(&heat.initial[i]);
            let rhs = k[i].sub(&k[0]);
            crate::linalg::max_abs(&(lhs.matrix() - rhs.matrix()))
        })
        .fold(0.0, f64::max)
}

/// Bracket and tolerance for the inverse-temperature search.
pub const BETA_BRACKET: (f64, f64) = (1e-6, 1e6);
pub const BETA_REL_TOL: f64 = 1e-10;

/// Thermal energy `Tr{H e^{-βH}} / Tr{e^{-βH}}` from the spectrum of `H`.
pub fn thermal_energy(spectrum: &[f64], beta: f64) -> f64 {
    let e0 = spectrum[0];
    let (mut num, mut den) = (0.0, 0.0);
    for &e in spectrum {
        let w = (-beta * (e - e0)).exp();
        num += e * w;
        den += w;
    }
    num / den
}

/// The `β > 0` at which the Gibbs state of `h0` has energy `energy`, by
/// bisection on `ln β` over [`BETA_BRACKET`].
pub fn solve_beta(h0: &Hermitian, energy: f64) -> Result<f64> {
    let spec = h0.eigenvalues();
    let (lower, upper) = (spec[0], *spec.last().unwrap());
    if !(energy > lower && energy < upper) {
        return Err(Error::NoMatchingBeta {
            energy,
            lower,
            upper,
        });
    }
    let (mut lo, mut hi) = BETA_BRACKET;
    let f = |b: f64| thermal_energy(&spec, b) - energy;
    if !(f(lo) > 0.0 && f(hi) < 0.0) {
        return Err(Error::BetaBracket { lo, hi, energy });
    }
    while hi / lo - 1.0 > BETA_REL_TOL {
        let mid = (lo * hi).sqrt();
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Closed-system data for an initial state with coherences.
#[derive(Clone, Debug)]
pub struct CoherentInitialData {
    pub beta: f64,
    /// `ln Z(0) = ln Tr e^{-βH(0)}`.
    pub ln_z0: f64,
    pub h0: Hermitian,
    /// `H*_β = -(1/β) ln ρ0 - (1/β) ln Z(0)`, so that `ρ0 = e^{-βH*}/Z(0)`.
    pub h_star: Hermitian,
    /// `ξ_β = H*_β - H(0)`.
    pub xi: Hermitian,
    pub lambda_min_xi: f64,
    /// Initial work observable `-(1/β) ln ρ0`.
    pub initial_observable: Hermitian,
    /// Relative entropy `S(ρ0 || e^{-βH(0)}/Z(0))`, reported as a diagnostic.
    pub relative_entropy: f64,
}

/// Eigenvalues of `ρ0` at or below this count as zero for the logarithm.
const LOG_ZERO_TOL: f64 = 1e-14;

/// Choose `β` by energy matching and build `H*_β`, `ξ_β`. The identity
/// `e^{-βH*}/Z(0) = ρ0` requires `ρ0` of full rank; zero eigenvalues follow
/// the `ln 0 = 0` convention.
pub fn coherent_initial_construction(
    rho0: &DensityMatrix,
    h0: &Hermitian,
) -> Result<CoherentInitialData> {
    if rho0.dim() != h0.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            found: rho0.dim(),
        });
    }
    let energy = h0.expectation(rho0.matrix());
    let beta = solve_beta(h0, energy)?;
    let ln_z0 = h0.log_partition(beta);
    let ln_rho = rho0.as_hermitian().log_zero_convention(LOG_ZERO_TOL)?;
    let initial_observable = ln_rho.scale(-1.0 / beta);
    let h_star = initial_observable.sub(&Hermitian::identity(h0.dim()).scale(ln_z0 / beta));
    let xi = h_star.sub(h0);
    let lambda_min_xi = xi.lambda_min();
    let gibbs_log = h0
        .scale(-beta)
        .sub(&Hermitian::identity(h0.dim()).scale(ln_z0));
    let relative_entropy = ln_rho.sub(&gibbs_log).expectation(rho0.matrix());
    Ok(CoherentInitialData {
        beta,
        ln_z0,
        h0: h0.clone(),
        h_star,
        xi,
        lambda_min_xi,
        initial_observable,
        relative_entropy,
    })
}

/// Closed-system work statistics for a coherent initial state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentFluctuation {
    /// `⟨e^{-βw}⟩ = Tr{e^{-β(H(t) + U ξ U†)}} / Z(0)`.
    pub value: f64,
    /// `Tr{e^{-βH(t)} e^{-β U ξ U†}} / Z(0)`.
    pub golden_thompson_bound: f64,
    /// `e^{-βΔF̄} e^{-βλ_min(ξ)}`.
    pub final_bound: f64,
    /// `value · Z(0)/Z(t)`, equal to one for Gibbs initial states.
    pub jarzynski_factor: f64,
    pub delta_f_bar: f64,
}

/// Final work observable `O_w(t) = H(t) + U ξ U† + (1/β) ln Z(0)`.
pub fn coherent_final_observable(
    data: &CoherentInitialData,
    u: &Superoperator,
    h_t: &Hermitian,
) -> Hermitian {
    let rotated = apply_hermitian(u, &data.xi);
    h_t.add(&rotated)
        .add(&Hermitian::identity(h_t.dim()).scale(data.ln_z0 / data.beta))
}

pub fn coherent_work_fluctuation(
    data: &CoherentInitialData,
    u: &Superoperator,
    h_t: &Hermitian,
) -> CoherentFluctuation {
    let beta = data.beta;
    let rotated = apply_hermitian(u, &data.xi);
    let ln_value = h_t.add(&rotated).log_partition(beta) - data.ln_z0;
    let ln_zt = h_t.log_partition(beta);

    let m1 = h_t.lambda_min();
    let m2 = rotated.lambda_min();
    let shift = |h: &Hermitian, m: f64| {
        h.sub(&Hermitian::identity(h.dim()).scale(m))
            .exp_scaled(-beta)
    };
    let product = shift(h_t, m1).matrix() * shift(&rotated, m2).matrix();
    let gt = crate::linalg::trace(&product).re.ln() - beta * (m1 + m2) - data.ln_z0;

    let delta_f_bar = -(ln_zt - data.ln_z0) / beta;
    CoherentFluctuation {
        value: ln_value.exp(),
        golden_thompson_bound: gt.exp(),
        final_bound: (ln_zt - data.ln_z0 - beta * data.lambda_min_xi).exp(),
        jarzynski_factor: (ln_value - ln_zt + data.ln_z0).exp(),
        delta_f_bar,
    }
}
