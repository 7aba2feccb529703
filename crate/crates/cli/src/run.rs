// SPDX-License-Identifier: Apache-2.0

//! Executes a resolved scenario and writes its output files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qfluct::dynamics::io::{read_map_file, write_map_csv};
use qfluct::dynamics::MapTrajectory;
use qfluct::linalg::{pauli, CMatrix, DensityMatrix, Hermitian, Superoperator, HERMITIAN_TOL};
use qfluct::models::{
    jc_extract_pc, jc_reduced_map, weak_coupling_rates, JCParams, WeakCouplingParams,
};
use qfluct::observables::{
    coherent_final_observable, coherent_initial_construction, coherent_work_fluctuation,
};
use qfluct::phase_covariant::{pc_trajectory, PCRates, RateSamples};
use qfluct::pipeline::{
    run_pipeline, write_distribution_csv, write_invertibility_csv, PipelineOptions, PipelineResult,
};
use qfluct::synthetic::propagator;
use qfluct::tpms::{tpms_distribution, CLUSTER_TOL, COHERENCE_TOL, NEG_PROB_TOL};

use crate::config::{drive_mode_of, ConfigError, ModelKind, ScenarioConfig};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<qfluct::Error> for CliError {
    fn from(e: qfluct::Error) -> Self {
        match e {
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            qfluct::Error::Io(m) => CliError::Io(m),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug)]
pub struct RunSummary {
    pub directory: PathBuf,
    pub files: Vec<PathBuf>,
    /// Numerical problem met after outputs were written (exit code 3).
    pub numerical: Option<String>,
    pub notes: Vec<String>,
}

pub fn run_config_file(path: &Path) -> Result<RunSummary, CliError> {
    let mut cfg = ScenarioConfig::load(path)?;
    let base = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let base = base
        .canonicalize()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let defaulted = cfg.resolve(&base)?;
    run_resolved(&cfg, &defaulted)
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        let f =
            File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(path);
        Ok(BufWriter::new(f))
    }
}

/// Runs a configuration that has already been resolved.
pub fn run_resolved(cfg: &ScenarioConfig, defaulted: &[String]) -> Result<RunSummary, CliError> {
    let dir = cfg.outputs().directory.clone().expect("resolved");
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut out = Writer {
        dir,
        files: Vec::new(),
    };
    let mut notes = Vec::new();
    let numerical = if cfg.model == ModelKind::ClosedCoherent {
        run_closed_coherent(cfg, &mut out)?
    } else {
        run_open(cfg, &mut out, &mut notes)?
    };
    write_manifest(cfg, defaulted, &mut out)?;
    Ok(RunSummary {
        directory: out.dir,
        files: out.files,
        numerical,
        notes,
    })
}

fn build_trajectory(
    cfg: &ScenarioConfig,
) -> Result<(MapTrajectory, Option<RateSamples>), CliError> {
    let (t_max, n) = cfg.grid_values();
    let os = cfg.tolerances().pc_oversample.expect("resolved");
    let pc = |rates: PCRates| -> Result<(MapTrajectory, Option<RateSamples>), CliError> {
        let (traj, _) = pc_trajectory(&rates, t_max, n, os)?;
        let samples = rates.sample(traj.times());
        Ok((traj, Some(samples)))
    };
    let extracted =
        |traj: MapTrajectory| -> Result<(MapTrajectory, Option<RateSamples>), CliError> {
            if traj.dim() != 2 {
                return Ok((traj, None));
            }
            let rates = jc_extract_pc(&traj)?;
            Ok((traj, Some(rates.samples)))
        };
    match cfg.model {
        ModelKind::WeakCoupling => {
            let s = cfg.weak_coupling.as_ref().expect("resolved");
            let p = WeakCouplingParams {
                omega0: s.omega0.expect("resolved"),
                delta: s.delta.expect("resolved"),
                drive_frequency: s.drive_frequency.expect("resolved"),
                gamma: s.gamma.expect("resolved"),
                beta: s.beta.expect("resolved"),
                gamma_z: s.gamma_z.expect("resolved"),
                t_f: s.t_f.expect("resolved"),
                drive_mode: drive_mode_of(s),
            };
            p.validate()?;
            pc(weak_coupling_rates(&p))
        }
        ModelKind::CustomPc => {
            let s = cfg.custom_pc.clone().expect("resolved");
            let (o, gp, gm, gz) = (
                s.omega.expect("resolved"),
                s.gamma_plus.expect("resolved"),
                s.gamma_minus.expect("resolved"),
                s.gamma_z.expect("resolved"),
            );
            pc(PCRates::new(
                move |t| o.eval(t),
                move |t| gp.eval(t),
                move |t| gm.eval(t),
                move |t| gz.eval(t),
            ))
        }
        ModelKind::JaynesCummings => {
            let s = cfg.jaynes_cummings.as_ref().expect("resolved");
            let p = JCParams {
                omega: s.omega.expect("resolved"),
                omega_m: s.omega_m.expect("resolved"),
                g: s.g.expect("resolved"),
                beta: s.beta.expect("resolved"),
                n_max: s.n_max,
                t_max,
                n_steps: n,
            };
            extracted(jc_reduced_map(&p)?)
        }
        ModelKind::CustomMapFile => {
            let path = cfg
                .custom_map_file
                .as_ref()
                .and_then(|s| s.path.clone())
                .expect("resolved");
            extracted(read_map_file(&path)?)
        }
        ModelKind::ClosedCoherent => unreachable!("handled separately"),
    }
}

fn run_open(
    cfg: &ScenarioConfig,
    out: &mut Writer,
    notes: &mut Vec<String>,
) -> Result<Option<String>, CliError> {
    let (traj, rates) = build_trajectory(cfg)?;
    let traj = traj.with_threshold(cfg.tolerances().condition_threshold.expect("resolved"));
    let opts = PipelineOptions {
        betas: cfg.beta_list.clone().expect("resolved"),
        convention: cfg.convention(),
        ..Default::default()
    };
    let res = run_pipeline(&traj, &opts)?;

    if cfg.has_series("lambda") {
        let mut w = out.create("lambda_series.csv")?;
        res.write_lambda_csv(&mut w)?;
        w.flush()?;
    }
    if cfg.has_series("invertibility") {
        let mut w = out.create("invertibility.csv")?;
        write_invertibility_csv(&mut w, &res.invertibility)?;
        w.flush()?;
    }
    if cfg.has_series("pc_coefficients") {
        if let Some(r) = &rates {
            let mut w = out.create("pc_coefficients.csv")?;
            write_pc_coefficients(&mut w, &traj, &res, r)?;
            w.flush()?;
        } else {
            notes.push("pc_coefficients skipped: map is not a qubit map".into());
        }
    }
    if cfg.has_series("observables") {
        for (name, series) in [
            ("work_observable.csv", &res.work),
            ("heat_observable.csv", &res.heat),
        ] {
            let mut w = out.create(name)?;
            series.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    if cfg.has_series("map") {
        let mut w = out.create("map_trajectory.csv")?;
        write_map_csv(&traj, &mut w)?;
        w.flush()?;
    }

    let mut numerical = res.singular.as_ref().map(|e| e.to_string());
    for &t in cfg.outputs().distribution_times.as_deref().unwrap_or(&[]) {
        let i = traj.index_of(t);
        if i >= res.len() {
            notes.push(format!(
                "distribution at t = {t} skipped: beyond the invertible range"
            ));
            continue;
        }
        let mut dists = Vec::new();
        for &beta in &res.betas {
            match res.distributions(&traj, i, beta) {
                Ok(pair) => dists.push((beta, pair)),
                Err(e) if e.is_numerical() => {
                    numerical.get_or_insert_with(|| e.to_string());
                }
                Err(e) => return Err(e.into()),
            }
        }
        let entries: Vec<(&str, f64, &qfluct::tpms::OutcomeDistribution)> = dists
            .iter()
            .flat_map(|(b, (w, q))| [("work", *b, w), ("heat", *b, q)])
            .collect();
        let mut w = out.create(&format!("distribution_t{:.6}.csv", traj.time(i)))?;
        write_distribution_csv(&mut w, &entries)?;
        w.flush()?;
    }
    Ok(numerical)
}

fn write_pc_coefficients<W: Write>(
    mut w: W,
    traj: &MapTrajectory,
    res: &PipelineResult,
    rates: &RateSamples,
) -> Result<(), CliError> {
    writeln!(
        w,
        "t,omega,gamma_plus,gamma_minus,gamma_z,a,b,c,d_par,P0,P3"
    )?;
    let sz = pauli::z();
    for i in 0..res.len() {
        let r = traj.map(i).to_pauli_transfer();
        let p = res.path[i].matrix();
        let p0 = qfluct::linalg::trace(p).re / 2.0;
        let p3 = qfluct::linalg::trace(&(&sz * p)).re / 2.0;
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            traj.time(i),
            rates.omega[i],
            rates.gamma_plus[i],
            rates.gamma_minus[i],
            rates.gamma_z[i],
            r[(1, 1)],
            r[(2, 1)],
            r[(3, 0)],
            r[(3, 3)],
            p0,
            p3
        )?;
    }
    Ok(())
}

fn pauli_hamiltonian(coef: [f64; 3]) -> Hermitian {
    let m: CMatrix = pauli::x() * qfluct::linalg::c(coef[0])
        + pauli::y() * qfluct::linalg::c(coef[1])
        + pauli::z() * qfluct::linalg::c(coef[2]);
    Hermitian::symmetrized(m)
}

/// Closed qubit with a coherent initial state; `H(t)` interpolates linearly
/// and the propagator is a product of midpoint steps.
fn run_closed_coherent(cfg: &ScenarioConfig, out: &mut Writer) -> Result<Option<String>, CliError> {
    let s = cfg.closed_coherent.as_ref().expect("resolved");
    let (h0c, h1c) = (s.h0.expect("resolved"), s.h1.expect("resolved"));
    let (t_max, n) = cfg.grid_values();
    let times = MapTrajectory::uniform_grid(t_max, n);
    let h_at = |t: f64| {
        let x = t / t_max;
        pauli_hamiltonian([0, 1, 2].map(|k| h0c[k] + (h1c[k] - h0c[k]) * x))
    };
    let rho0 = DensityMatrix::from_bloch(s.bloch.expect("resolved"))?;
    let h0 = h_at(0.0);
    let data = coherent_initial_construction(&rho0, &h0)?;
    let mut unitaries = Vec::with_capacity(n);
    let mut u = CMatrix::identity(2, 2);
    unitaries.push(u.clone());
    for k in 1..n {
        let mid = 0.5 * (times[k - 1] + times[k]);
        u = propagator(&h_at(mid), times[k] - times[k - 1]) * u;
        unitaries.push(u.clone());
    }
    let rows = qfluct::par::map_range(n, |k| -> qfluct::Result<String> {
        let h_t = h_at(times[k]);
        let sup = Superoperator::unitary_conjugation(&unitaries[k]);
        let f = coherent_work_fluctuation(&data, &sup, &h_t);
        let o_t = coherent_final_observable(&data, &sup, &h_t);
        let dist = tpms_distribution(&rho0, &sup, &data.initial_observable, &o_t)?;
        Ok(format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            times[k],
            data.beta,
            f.value,
            dist.exp_average(data.beta),
            f.golden_thompson_bound,
            f.final_bound,
            f.jarzynski_factor,
            f.delta_f_bar,
            dist.mean(),
            data.lambda_min_xi
        ))
    });
    let mut w = out.create("coherent_series.csv")?;
    writeln!(
        w,
        "t,beta,exp_avg_w,exp_avg_w_tpms,golden_thompson_bound,final_bound,jarzynski_factor,delta_F_bar,mean_w,lambda_min_xi"
    )?;
    for r in rows {
        writeln!(w, "{}", r?)?;
    }
    w.flush()?;
    let mut w = out.create("coherent_initial.toml")?;
    writeln!(w, "beta = {:.16e}", data.beta)?;
    writeln!(w, "ln_z0 = {:.16e}", data.ln_z0)?;
    writeln!(w, "lambda_min_xi = {:.16e}", data.lambda_min_xi)?;
    writeln!(w, "relative_entropy = {:.16e}", data.relative_entropy)?;
    w.flush()?;
    Ok(None)
}

fn write_manifest(
    cfg: &ScenarioConfig,
    defaulted: &[String],
    out: &mut Writer,
) -> Result<(), CliError> {
    let mut manifest = toml::Table::new();
    manifest.insert("tool_version".into(), TOOL_VERSION.into());
    manifest.insert(
        "defaulted".into(),
        toml::Value::Array(
            defaulted
                .iter()
                .map(|s| toml::Value::from(s.as_str()))
                .collect(),
        ),
    );
    let mut constants = toml::Table::new();
    for (name, v) in [
        ("hermitian_tol", HERMITIAN_TOL),
        ("cluster_tol", CLUSTER_TOL),
        ("negative_probability_tol", NEG_PROB_TOL),
        ("coherence_tol", COHERENCE_TOL),
        ("truncation_tail_max", qfluct::models::TRUNCATION_TAIL_MAX),
        ("truncation_tail_auto", qfluct::models::TRUNCATION_TAIL_AUTO),
        ("condition_warning", qfluct::dynamics::WARNING_CONDITION),
    ] {
        constants.insert(name.into(), v.into());
    }
    manifest.insert("constants".into(), toml::Value::Table(constants));
    let mut wrapper = toml::Table::new();
    wrapper.insert("manifest".into(), toml::Value::Table(manifest));

    let mut w = out.create("run_manifest.toml")?;
    write!(w, "{}", cfg.to_toml())?;
    writeln!(w)?;
    write!(
        w,
        "{}",
        toml::to_string(&wrapper).expect("manifest serializes")
    )?;
    w.flush()?;
    Ok(())
}
