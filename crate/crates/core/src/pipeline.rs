// SPDX-License-Identifier: Apache-2.0

//! End-to-end evaluation on a map trajectory: effective Hamiltonian, path
//! operator, work and heat observables, and the per-(time, β) fluctuation
//! table.

use std::io::Write;

use crate::dynamics::{InvertibilityEntry, MapTrajectory};
use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, Hermitian};
use crate::observables::{
    balance_residual, effective_hamiltonian_series, path_operator_series, work_heat_observables,
    Convention, ObservableSeries,
};
use crate::par;
use crate::tpms::{
    dissipated_work_bound, free_energies, heat_fluctuation, lambda_u, lambda_w, tpms_distribution,
    LambdaRow, OutcomeDistribution,
};

/// Where the energy operator `K(t)` comes from.
#[derive(Clone, Debug)]
pub enum HamiltonianSource {
    /// Minimal-dissipation split of the time-local generator.
    MinimalDissipation,
    /// Samples on the trajectory grid.
    Given(Vec<Hermitian>),
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub betas: Vec<f64>,
    pub convention: Convention,
    pub hamiltonian: HamiltonianSource,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            betas: vec![1.0],
            convention: Convention::TwoPointEnergyFirst,
            hamiltonian: HamiltonianSource::MinimalDissipation,
        }
    }
}

/// Everything computed on the invertible prefix of a trajectory.
#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub times: Vec<f64>,
    pub k: Vec<Hermitian>,
    /// Path operator `𝔓(t)`.
    pub path: Vec<Hermitian>,
    pub work: ObservableSeries,
    pub heat: ObservableSeries,
    pub betas: Vec<f64>,
    /// Time-major, β-minor.
    pub rows: Vec<LambdaRow>,
    pub invertibility: Vec<InvertibilityEntry>,
    /// First grid time at which the map could not be inverted; everything
    /// above stops just before it.
    pub singular: Option<Error>,
}

impl PipelineResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn row(&self, i: usize, beta_index: usize) -> &LambdaRow {
        &self.rows[i * self.betas.len() + beta_index]
    }

    /// Rows for one β in time order.
    pub fn series(&self, beta_index: usize) -> Vec<LambdaRow> {
        (0..self.len()).map(|i| *self.row(i, beta_index)).collect()
    }

    pub fn balance_residual(&self) -> f64 {
        balance_residual(&self.work, &self.heat, &self.k)
    }

    pub fn write_lambda_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", LambdaRow::HEADER)?;
        for b in 0..self.betas.len() {
            for i in 0..self.len() {
                writeln!(w, "{}", self.row(i, b).csv_line())?;
            }
        }
        Ok(())
    }

    /// Work and heat distributions at grid index `i` for the Gibbs state of
    /// `K(0)` at `beta`.
    pub fn distributions(
        &self,
        traj: &MapTrajectory,
        i: usize,
        beta: f64,
    ) -> Result<(OutcomeDistribution, OutcomeDistribution)> {
        let rho0 = DensityMatrix::gibbs(&self.k[0], beta);
        let map = traj.map(i);
        let t = traj.time(i);
        let w = tpms_distribution(&rho0, map, &self.work.initial[i], &self.work.ops[i])
            .map_err(|e| e.at_time(t))?;
        let q = tpms_distribution(&rho0, map, &self.heat.initial[i], &self.heat.ops[i])
            .map_err(|e| e.at_time(t))?;
        Ok((w, q))
    }
}

/// Writes `quantity,beta,outcome,probability` rows.
pub fn write_distribution_csv<W: Write>(
    mut w: W,
    entries: &[(&str, f64, &OutcomeDistribution)],
) -> Result<()> {
    writeln!(w, "quantity,beta,outcome,probability")?;
    for (name, beta, dist) in entries {
        for (x, p) in dist.outcomes.iter().zip(&dist.probs) {
            writeln!(w, "{name},{beta:.16e},{x:.16e},{p:.16e}")?;
        }
    }
    Ok(())
}

pub fn write_invertibility_csv<W: Write>(mut w: W, entries: &[InvertibilityEntry]) -> Result<()> {
    writeln!(w, "t,condition_number,flag")?;
    for e in entries {
        writeln!(
            w,
            "{:.16e},{:.16e},{}",
            e.time,
            e.condition,
            e.flag.as_str()
        )?;
    }
    Ok(())
}

/// Runs the full evaluation. Path observables need `Φ_t⁻¹`, so the run
/// stops before the first singular grid time and reports it in
/// [`PipelineResult::singular`].
pub fn run_pipeline(traj: &MapTrajectory, opts: &PipelineOptions) -> Result<PipelineResult> {
    if opts.betas.is_empty() || opts.betas.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
        return Err(Error::InvalidParameter(
            "betas must be positive and finite".into(),
        ));
    }
    let invertibility = traj.invertibility_report();
    let (upto, singular) = match traj.first_singular() {
        None => (traj.len() - 1, None),
        Some(0) => return Err(traj.require_invertible_through(0).unwrap_err()),
        Some(i) => (i - 1, Some(traj.require_invertible_through(i).unwrap_err())),
    };
    let k = match &opts.hamiltonian {
        HamiltonianSource::MinimalDissipation => effective_hamiltonian_series(traj, upto)?,
        HamiltonianSource::Given(k) => {
            if k.len() != traj.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} Hamiltonian samples for {} grid points",
                    k.len(),
                    traj.len()
                )));
            }
            k[..=upto].to_vec()
        }
    };
    let path = path_operator_series(traj, &k, upto)?;
    let (work, heat) = work_heat_observables(traj, &k, &path, opts.convention)?;
    let nb = opts.betas.len();
    let rows = par::map_range((upto + 1) * nb, |cell| -> Result<LambdaRow> {
        let (i, b) = (cell / nb, cell % nb);
        let beta = opts.betas[b];
        let t = traj.time(i);
        let map = traj.map(i);
        let rho0 = DensityMatrix::gibbs(&k[0], beta);
        let lu = lambda_u(map, &k[i], beta);
        let ow = k[i].sub(&path[i]);
        let (lw, lw_bound) = lambda_w(map, &ow, &k[i], &path[i], beta);
        let fe = free_energies(&k[i], &k[0], beta);
        let dist = tpms_distribution(&rho0, map, &work.initial[i], &work.ops[i])
            .map_err(|e| e.at_time(t))?;
        let (q, _) = heat_fluctuation(&rho0, map, &path[i], beta);
        Ok(LambdaRow {
            t,
            beta,
            lambda_u: lu.value,
            lambda_w: lw,
            lambda_w_bound: lw_bound,
            exp_avg_w: dist.exp_average(beta),
            exp_avg_q: q,
            delta_f_bar: fe.delta_f_bar,
            mean_w: dist.mean(),
            dissipated_bound: dissipated_work_bound(&path[i], map, beta),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(PipelineResult {
        times: traj.times()[..=upto].to_vec(),
        k,
        path,
        work,
        heat,
        betas: opts.betas.clone(),
        rows,
        invertibility,
        singular,
    })
}
