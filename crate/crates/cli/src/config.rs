// SPDX-License-Identifier: Apache-2.0

//! Scenario configuration files (TOML).
//!
//! Every field is optional in the file. [`ScenarioConfig::resolve`] fills the
//! gaps, records each filled field in a `defaulted` list, and validates the
//! result. A resolved configuration serializes to a file that parses and
//! resolves back to itself.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qfluct::dynamics::io::read_map_file;
use qfluct::models::{thermal_weights, DriveMode};
use qfluct::observables::Convention;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    WeakCoupling,
    JaynesCummings,
    CustomPc,
    CustomMapFile,
    ClosedCoherent,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakCouplingSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive_frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_f: Option<f64>,
    /// `monotonic`, `periodic`, or `free` (no consistency check on `t_f`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive_mode: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JaynesCummingsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

/// A rate given as a constant or as `offset + amplitude sin(frequency t + phase)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateSpec {
    Constant(f64),
    Wave {
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        amplitude: f64,
        #[serde(default)]
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl RateSpec {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            RateSpec::Constant(v) => v,
            RateSpec::Wave {
                offset,
                amplitude,
                frequency,
                phase,
            } => offset + amplitude * (frequency * t + phase).sin(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomPcSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<RateSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_plus: Option<RateSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_minus: Option<RateSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_z: Option<RateSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFileSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// Closed qubit driven from `H0` to `H1` linearly in time; Hamiltonians are
/// given as Pauli coefficients `[x, y, z]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedCoherentSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h0: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h1: Option<[f64; 3]>,
    /// Bloch vector of the initial state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bloch: Option<[f64; 3]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution_times: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_threshold: Option<f64>,
    /// Refinement of the quadrature grid for closed-form rate integrals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pc_oversample: Option<usize>,
}

pub const SERIES_NAMES: [&str; 5] = [
    "lambda",
    "invertibility",
    "pc_coefficients",
    "observables",
    "map",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weak_coupling: Option<WeakCouplingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jaynes_cummings: Option<JaynesCummingsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub custom_pc: Option<CustomPcSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub custom_map_file: Option<MapFileSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_coherent: Option<ClosedCoherentSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Outputs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    /// Written by `run` into the manifest; ignored on input.
    #[serde(skip_serializing)]
    pub manifest: Option<toml::Table>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn fill<T: Clone>(slot: &mut Option<T>, value: T, name: &str, defaulted: &mut Vec<String>) -> T {
    if slot.is_none() {
        *slot = Some(value);
        defaulted.push(name.to_string());
    }
    slot.clone().expect("just filled")
}

fn require(cond: bool, field: &str, msg: &str) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError(format!("field `{field}`: {msg}")))
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("config parse error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn convention(&self) -> Convention {
        self.convention
            .as_deref()
            .map(|s| s.parse().expect("validated"))
            .unwrap_or(Convention::TwoPointEnergyFirst)
    }

    pub fn grid_values(&self) -> (f64, usize) {
        let g = self.grid.as_ref().expect("resolved");
        (g.t_max.expect("resolved"), g.n_steps.expect("resolved"))
    }

    pub fn outputs(&self) -> &Outputs {
        self.outputs.as_ref().expect("resolved")
    }

    pub fn tolerances(&self) -> &Tolerances {
        self.tolerances.as_ref().expect("resolved")
    }

    pub fn has_series(&self, name: &str) -> bool {
        self.outputs()
            .series
            .as_ref()
            .is_some_and(|s| s.iter().any(|x| x == name))
    }

    /// Fills defaults in place, resolving relative paths against `base`, and
    /// returns the names of the defaulted fields.
    pub fn resolve(&mut self, base: &Path) -> Result<Vec<String>, ConfigError> {
        let mut d = Vec::new();
        self.manifest = None;
        let conv = fill(
            &mut self.convention,
            Convention::TwoPointEnergyFirst.as_str().into(),
            "convention",
            &mut d,
        );
        conv.parse::<Convention>()
            .map_err(|e| ConfigError(format!("field `convention`: {e}")))?;

        let mut model_beta = None;
        let mut default_t_max = 10.0;
        let mut file_grid = None;
        let present = [
            (
                ModelKind::WeakCoupling,
                self.weak_coupling.is_some(),
                "weak_coupling",
            ),
            (
                ModelKind::JaynesCummings,
                self.jaynes_cummings.is_some(),
                "jaynes_cummings",
            ),
            (ModelKind::CustomPc, self.custom_pc.is_some(), "custom_pc"),
            (
                ModelKind::CustomMapFile,
                self.custom_map_file.is_some(),
                "custom_map_file",
            ),
            (
                ModelKind::ClosedCoherent,
                self.closed_coherent.is_some(),
                "closed_coherent",
            ),
        ];
        for (kind, is_set, name) in present {
            require(
                !is_set || kind == self.model,
                name,
                "section does not match the selected model",
            )?;
        }
        match self.model {
            ModelKind::WeakCoupling => {
                let s = self.weak_coupling.get_or_insert_with(Default::default);
                let p = "weak_coupling.";
                let omega0 = fill(&mut s.omega0, 1.0, &format!("{p}omega0"), &mut d);
                fill(&mut s.delta, 1.0, &format!("{p}delta"), &mut d);
                let om = fill(
                    &mut s.drive_frequency,
                    std::f64::consts::PI / 20.0,
                    &format!("{p}drive_frequency"),
                    &mut d,
                );
                let gamma = fill(&mut s.gamma, 0.01, &format!("{p}gamma"), &mut d);
                let beta = fill(&mut s.beta, 1.0, &format!("{p}beta"), &mut d);
                fill(&mut s.gamma_z, 0.0, &format!("{p}gamma_z"), &mut d);
                let mode = fill(
                    &mut s.drive_mode,
                    "monotonic".into(),
                    &format!("{p}drive_mode"),
                    &mut d,
                );
                let parsed = parse_drive_mode(&mode)?;
                let tf_default = parsed.map(|m| m.final_time(om)).unwrap_or(10.0);
                let t_f = fill(&mut s.t_f, tf_default, &format!("{p}t_f"), &mut d);
                require(gamma >= 0.0, "weak_coupling.gamma", "must be non-negative")?;
                require(
                    beta > 0.0 && beta.is_finite(),
                    "weak_coupling.beta",
                    "must be positive",
                )?;
                require(omega0 > 0.0, "weak_coupling.omega0", "must be positive")?;
                if let Some(m) = parsed {
                    let expected = m.final_time(om);
                    require(
                        (expected - t_f).abs() <= 1e-9 * expected.abs().max(1.0),
                        "weak_coupling.t_f",
                        &format!("must equal {expected} for a {} drive", m.as_str()),
                    )?;
                }
                model_beta = Some(beta);
                default_t_max = t_f;
            }
            ModelKind::JaynesCummings => {
                let s = self.jaynes_cummings.get_or_insert_with(Default::default);
                let p = "jaynes_cummings.";
                fill(&mut s.omega, 1.0, &format!("{p}omega"), &mut d);
                let omega_m = fill(&mut s.omega_m, 2.0, &format!("{p}omega_m"), &mut d);
                fill(&mut s.g, 0.01, &format!("{p}g"), &mut d);
                let beta = fill(&mut s.beta, 1.0, &format!("{p}beta"), &mut d);
                require(
                    beta > 0.0 && beta.is_finite(),
                    "jaynes_cummings.beta",
                    "must be positive",
                )?;
                require(omega_m > 0.0, "jaynes_cummings.omega_m", "must be positive")?;
                match s.n_max {
                    Some(n) => require(n >= 2, "jaynes_cummings.n_max", "must be at least 2")?,
                    None => {
                        let auto = thermal_weights(beta, omega_m, None)
                            .map_err(|e| {
                                ConfigError(format!("field `jaynes_cummings.n_max`: {e}"))
                            })?
                            .0
                            .len()
                            - 1;
                        fill(&mut s.n_max, auto, &format!("{p}n_max"), &mut d);
                    }
                }
                model_beta = Some(beta);
            }
            ModelKind::CustomPc => {
                let s = self.custom_pc.get_or_insert_with(Default::default);
                fill(
                    &mut s.omega,
                    RateSpec::Constant(1.0),
                    "custom_pc.omega",
                    &mut d,
                );
                fill(
                    &mut s.gamma_plus,
                    RateSpec::Constant(0.0),
                    "custom_pc.gamma_plus",
                    &mut d,
                );
                fill(
                    &mut s.gamma_minus,
                    RateSpec::Constant(0.0),
                    "custom_pc.gamma_minus",
                    &mut d,
                );
                fill(
                    &mut s.gamma_z,
                    RateSpec::Constant(0.0),
                    "custom_pc.gamma_z",
                    &mut d,
                );
            }
            ModelKind::CustomMapFile => {
                let s = self
                    .custom_map_file
                    .as_mut()
                    .ok_or_else(|| ConfigError("section `custom_map_file` is required".into()))?;
                let path = s.path.clone().ok_or_else(|| {
                    ConfigError("field `custom_map_file.path` is required".into())
                })?;
                let full = if path.is_absolute() {
                    path
                } else {
                    base.join(path)
                };
                let traj = read_map_file(&full).map_err(|e| {
                    ConfigError(format!(
                        "field `custom_map_file.path` ({}): {e}",
                        full.display()
                    ))
                })?;
                s.path = Some(full);
                file_grid = Some((traj.times()[traj.len() - 1], traj.len()));
            }
            ModelKind::ClosedCoherent => {
                let s = self.closed_coherent.get_or_insert_with(Default::default);
                fill(&mut s.h0, [0.0, 0.0, 0.5], "closed_coherent.h0", &mut d);
                fill(&mut s.h1, [0.4, 0.0, 1.0], "closed_coherent.h1", &mut d);
                let b = fill(
                    &mut s.bloch,
                    [0.3, 0.2, -0.2],
                    "closed_coherent.bloch",
                    &mut d,
                );
                let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                require(
                    norm < 1.0,
                    "closed_coherent.bloch",
                    "must lie strictly inside the Bloch ball",
                )?;
            }
        }

        let grid = self.grid.get_or_insert_with(Default::default);
        match file_grid {
            Some((t_max, n)) => {
                require(
                    grid.t_max
                        .is_none_or(|t| (t - t_max).abs() <= 1e-9 * t_max.max(1.0))
                        && grid.n_steps.is_none_or(|m| m == n),
                    "grid",
                    "must match the map file",
                )?;
                fill(&mut grid.t_max, t_max, "grid.t_max", &mut d);
                fill(&mut grid.n_steps, n, "grid.n_steps", &mut d);
            }
            None => {
                fill(&mut grid.t_max, default_t_max, "grid.t_max", &mut d);
                fill(&mut grid.n_steps, 1001, "grid.n_steps", &mut d);
            }
        }
        let (t_max, n_steps) = (grid.t_max.expect("filled"), grid.n_steps.expect("filled"));
        require(
            t_max > 0.0 && t_max.is_finite(),
            "grid.t_max",
            "must be positive",
        )?;
        require(n_steps >= 16, "grid.n_steps", "must be at least 16")?;

        if self.model != ModelKind::ClosedCoherent {
            let betas = fill(
                &mut self.beta_list,
                vec![model_beta.unwrap_or(1.0)],
                "beta_list",
                &mut d,
            );
            require(
                !betas.is_empty() && betas.iter().all(|b| *b > 0.0 && b.is_finite()),
                "beta_list",
                "must be a non-empty list of positive numbers",
            )?;
        } else {
            require(
                self.beta_list.is_none(),
                "beta_list",
                "is determined by the initial state for closed_coherent",
            )?;
        }

        let out = self.outputs.get_or_insert_with(Default::default);
        let dir = fill(
            &mut out.directory,
            PathBuf::from("qfluct-out"),
            "outputs.directory",
            &mut d,
        );
        if dir.is_relative() {
            out.directory = Some(base.join(dir));
        }
        let series = fill(
            &mut out.series,
            SERIES_NAMES[..4].iter().map(|s| s.to_string()).collect(),
            "outputs.series",
            &mut d,
        );
        for s in &series {
            require(
                SERIES_NAMES.contains(&s.as_str()),
                "outputs.series",
                &format!("unknown series '{s}', expected one of {SERIES_NAMES:?}"),
            )?;
        }
        let times = fill(
            &mut out.distribution_times,
            Vec::new(),
            "outputs.distribution_times",
            &mut d,
        );
        require(
            times
                .iter()
                .all(|t| *t >= 0.0 && *t <= t_max * (1.0 + 1e-12)),
            "outputs.distribution_times",
            "must lie inside the grid",
        )?;

        let tol = self.tolerances.get_or_insert_with(Default::default);
        let thr = fill(
            &mut tol.condition_threshold,
            qfluct::linalg::DEFAULT_CONDITION_THRESHOLD,
            "tolerances.condition_threshold",
            &mut d,
        );
        require(thr > 1.0, "tolerances.condition_threshold", "must exceed 1")?;
        let os = fill(
            &mut tol.pc_oversample,
            16,
            "tolerances.pc_oversample",
            &mut d,
        );
        require(os >= 1, "tolerances.pc_oversample", "must be at least 1")?;
        Ok(d)
    }
}

fn parse_drive_mode(s: &str) -> Result<Option<DriveMode>, ConfigError> {
    if s == "free" {
        return Ok(None);
    }
    s.parse::<DriveMode>().map(Some).map_err(|_| {
        ConfigError(format!(
            "field `weak_coupling.drive_mode`: expected monotonic, periodic or free, got '{s}'"
        ))
    })
}

pub fn drive_mode_of(s: &WeakCouplingSection) -> Option<DriveMode> {
    parse_drive_mode(s.drive_mode.as_deref().unwrap_or("monotonic")).expect("validated")
}
