// SPDX-License-Identifier: Apache-2.0

//! Command-line front end for `qfluct`.

pub mod config;
pub mod run;

use std::fmt::Write as _;
use std::path::Path;

use qfluct::dynamics::io::read_map_file;
use qfluct::dynamics::InvertibilityFlag;

use run::CliError;

/// CPTP diagnostics and invertibility summary of a map file.
pub fn map_info(path: &Path) -> Result<String, CliError> {
    let traj = read_map_file(path)?;
    let mut s = String::new();
    let n = traj.len();
    writeln!(s, "file: {}", path.display()).ok();
    writeln!(
        s,
        "dim: {}  points: {}  t: [{:.6e}, {:.6e}]  dt: {:.6e}",
        traj.dim(),
        n,
        traj.time(0),
        traj.time(n - 1),
        traj.dt()
    )
    .ok();
    let reports = qfluct::par::map_slice(traj.maps(), |m| m.cptp_diagnostics());
    let tp = reports
        .iter()
        .fold(0.0_f64, |a, r| a.max(r.trace_preserving_residual));
    let (imin, choi) = reports
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.choi_min_eigenvalue))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let unital = reports
        .iter()
        .fold(0.0_f64, |a, r| a.max(r.unital_residual));
    writeln!(s, "max trace-preservation residual: {tp:.3e}").ok();
    writeln!(
        s,
        "min Choi eigenvalue: {choi:.3e} at t = {:.6e}",
        traj.time(imin)
    )
    .ok();
    writeln!(s, "max unitality residual: {unital:.3e}").ok();
    let inv = traj.invertibility_report();
    let count = |f: InvertibilityFlag| inv.iter().filter(|e| e.flag == f).count();
    let worst = inv.iter().fold(1.0_f64, |a, e| a.max(e.condition));
    writeln!(s, "max condition number: {worst:.3e}").ok();
    for f in [
        InvertibilityFlag::Regular,
        InvertibilityFlag::Warning,
        InvertibilityFlag::Spike,
        InvertibilityFlag::Singular,
    ] {
        writeln!(s, "{}: {}", f.as_str(), count(f)).ok();
    }
    for e in inv.iter().filter(|e| e.flag != InvertibilityFlag::Regular) {
        writeln!(
            s,
            "  t = {:.6e}  cond = {:.3e}  {}",
            e.time,
            e.condition,
            e.flag.as_str()
        )
        .ok();
    }
    Ok(s)
}
