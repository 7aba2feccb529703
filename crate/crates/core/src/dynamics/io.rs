// SPDX-License-Identifier: Apache-2.0

//! Text format for map trajectories.
//!
//! ```text
//! # qfluct-map v1
//! # dim=2
//! # convention=column-stacking
//! # n=101 dt=1.0000000000000000e-2
//! t,kind,s0_0_re,s0_0_im,s0_1_re,...
//! 0.0000000000000000e0,map,...
//! 0.0000000000000000e0,dmap,...
//! ```
//!
//! Each data row holds one `d² x d²` superoperator in row-major order of its
//! matrix entries `s{r}_{c}` (real and imaginary part). `kind` is `map` for
//! `Φ_t` and `dmap` for `Φ̇_t`. Derivative rows are optional; when present
//! they must be given for every time.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use super::{DerivativeSource, MapTrajectory};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Superoperator};

pub const MAGIC: &str = "# qfluct-map v1";

pub fn write_map_csv<W: Write>(traj: &MapTrajectory, mut w: W) -> Result<()> {
    let d = traj.dim();
    let n2 = d * d;
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "# dim={d}")?;
    writeln!(w, "# convention=column-stacking")?;
    writeln!(w, "# n={} dt={:.16e}", traj.len(), traj.dt())?;
    let mut header = String::from("t,kind");
    for r in 0..n2 {
        for col in 0..n2 {
            header.push_str(&format!(",s{r}_{col}_re,s{r}_{col}_im"));
        }
    }
    writeln!(w, "{header}")?;
    let derivs = match traj.derivative_source() {
        DerivativeSource::Analytic(d) => Some(d),
        DerivativeSource::FiniteDifference => None,
    };
    for i in 0..traj.len() {
        write_row(&mut w, traj.time(i), "map", traj.map(i))?;
        if let Some(d) = derivs {
            write_row(&mut w, traj.time(i), "dmap", &d[i])?;
        }
    }
    Ok(())
}

fn write_row<W: Write>(w: &mut W, t: f64, kind: &str, s: &Superoperator) -> Result<()> {
    let m = s.matrix();
    let mut line = format!("{t:.16e},{kind}");
    for r in 0..m.nrows() {
        for col in 0..m.ncols() {
            let z = m[(r, col)];
            line.push_str(&format!(",{:.16e},{:.16e}", z.re, z.im));
        }
    }
    writeln!(w, "{line}")?;
    Ok(())
}

pub fn read_map_csv<R: BufRead>(r: R) -> Result<MapTrajectory> {
    let mut dim: Option<usize> = None;
    let mut saw_magic = false;
    let mut saw_header = false;
    let mut times = Vec::new();
    let mut maps = Vec::new();
    let mut derivs = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        if let Some(meta) = trimmed.strip_prefix('#') {
            let meta = meta.trim();
            if trimmed == MAGIC {
                saw_magic = true;
            } else if let Some(v) = meta.strip_prefix("dim=") {
                dim = Some(
                    v.trim()
                        .parse()
                        .map_err(|_| parse_err(format!("bad dim '{v}'")))?,
                );
            } else if let Some(v) = meta.strip_prefix("convention=") {
                if v.trim() != "column-stacking" {
                    return Err(parse_err(format!("unsupported convention '{}'", v.trim())));
                }
            }
            continue;
        }
        if !saw_magic {
            return Err(parse_err("missing '# qfluct-map v1' header".into()));
        }
        let d = dim.ok_or_else(|| parse_err("missing '# dim=' header".into()))?;
        let n2 = d * d;
        if !saw_header {
            if !trimmed.starts_with("t,kind") {
                return Err(parse_err("expected column header 't,kind,...'".into()));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 2 + 2 * n2 * n2 {
            return Err(parse_err(format!(
                "expected {} columns, found {}",
                2 + 2 * n2 * n2,
                fields.len()
            )));
        }
        let t: f64 = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad time '{}'", fields[0])))?;
        let mut m = CMatrix::zeros(n2, n2);
        for r in 0..n2 {
            for col in 0..n2 {
                let k = 2 + 2 * (r * n2 + col);
                let re: f64 = fields[k]
                    .parse()
                    .map_err(|_| parse_err(format!("bad number '{}'", fields[k])))?;
                let im: f64 = fields[k + 1]
                    .parse()
                    .map_err(|_| parse_err(format!("bad number '{}'", fields[k + 1])))?;
                m[(r, col)] = Complex64::new(re, im);
            }
        }
        let s = Superoperator::from_matrix(d, m)?;
        match fields[1] {
            "map" => {
                times.push(t);
                maps.push(s);
            }
            "dmap" => derivs.push(s),
            other => return Err(parse_err(format!("unknown row kind '{other}'"))),
        }
    }
    if !saw_magic {
        return Err(Error::Parse {
            line: 1,
            message: "missing '# qfluct-map v1' header".into(),
        });
    }
    let source = if derivs.is_empty() {
        DerivativeSource::FiniteDifference
    } else if derivs.len() == maps.len() {
        DerivativeSource::Analytic(derivs)
    } else {
        return Err(Error::InvalidTrajectory(format!(
            "{} derivative rows for {} maps",
            derivs.len(),
            maps.len()
        )));
    };
    MapTrajectory::new(times, maps, source)
}

pub fn read_map_file(path: &std::path::Path) -> Result<MapTrajectory> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_map_csv(std::io::BufReader::new(f))
}

pub fn write_map_file(traj: &MapTrajectory, path: &std::path::Path) -> Result<()> {
    let f =
        std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(f);
    write_map_csv(traj, &mut w)?;
    w.flush()?;
    Ok(())
}
