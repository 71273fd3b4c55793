//! CSV and JSON artifacts. Floats are written like C's `%.17g` so that
//! identical runs give byte-identical files, and every file is written to a
//! temporary sibling first and renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EvolutionTrace;
use crate::grid::{PeriodicGrid, SpectralField};
use crate::longwave::{LongWaveComparison, ScalingDiagnostics};
use crate::solver::{SweepEntry, WaveProfile};

pub const CONVENTION: &str = "unitary-sqrtP";

/// `printf("%.17g", x)`.
pub fn fmt_g17(x: f64) -> String {
    const PREC: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PREC).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PREC - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn csv(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_g17).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// `x,u` at the grid nodes.
pub fn profile_csv(u: &SpectralField) -> String {
    let nodes = u.grid().nodes();
    csv("x,u", nodes.into_iter().zip(u.values()).map(|(x, v)| vec![x, *v]))
}

/// `m,re,im` for `m = -N/2 .. N/2 - 1`.
pub fn spectrum_csv(u: &SpectralField) -> String {
    let n = u.grid().points() as i64;
    csv(
        "m,re,im",
        (-n / 2..n / 2).map(|m| {
            let c = u.coeff(m);
            vec![m as f64, c.re, c.im]
        }),
    )
}

/// Reads a profile written by [`profile_csv`]. The grid is recovered from
/// the node spacing and must be uniform with `x_0 = -P/2`.
pub fn parse_profile_csv(text: &str) -> Result<SpectralField> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Format("empty profile file".into()))?;
    if header.trim() != "x,u" {
        return Err(Error::Format(format!("expected header `x,u`, found `{header}`")));
    }
    let mut xs = Vec::new();
    let mut us = Vec::new();
    for (i, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Format(format!("line {}: expected two columns", i + 2)));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("line {}: cannot parse `{s}`", i + 2)))
        };
        xs.push(parse(parts[0])?);
        us.push(parse(parts[1])?);
    }
    if xs.len() < 2 {
        return Err(Error::Format("profile needs at least two rows".into()));
    }
    let h = xs[1] - xs[0];
    let period = h * xs.len() as f64;
    let grid = PeriodicGrid::new(period, xs.len())?;
    for (j, x) in xs.iter().enumerate() {
        if (x - grid.node(j)).abs() > 1e-9 * period {
            return Err(Error::Format(format!(
                "node {j} at {x} is not on a uniform grid from -P/2"
            )));
        }
    }
    SpectralField::from_values(&grid, us)
}

pub fn read_profile_csv(path: &Path) -> Result<SpectralField> {
    parse_profile_csv(&fs::read_to_string(path)?)
}

/// Metadata written next to a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub mu: f64,
    pub nu: f64,
    pub residual: f64,
    pub energy: f64,
    #[serde(rename = "P")]
    pub period: f64,
    #[serde(rename = "N")]
    pub points: usize,
    pub iterations: usize,
    pub supercritical: bool,
    pub convention: String,
    pub symbol: String,
    pub nonlinearity: String,
}

impl ProfileMeta {
    pub fn from_profile(p: &WaveProfile) -> Self {
        ProfileMeta {
            mu: p.mu,
            nu: p.nu,
            residual: p.residual,
            energy: p.energy,
            period: p.field.grid().period(),
            points: p.field.grid().points(),
            iterations: p.iterations,
            supercritical: p.supercritical(),
            convention: CONVENTION.to_string(),
            symbol: p.symbol.clone(),
            nonlinearity: p.nonlinearity.clone(),
        }
    }
}

/// Writes `profile.csv`, `spectrum.csv` and `meta.json` into `dir`.
pub fn write_profile(dir: &Path, p: &WaveProfile) -> Result<()> {
    write_atomic(&dir.join("profile.csv"), profile_csv(&p.field).as_bytes())?;
    write_atomic(&dir.join("spectrum.csv"), spectrum_csv(&p.field).as_bytes())?;
    write_json(&dir.join("meta.json"), &ProfileMeta::from_profile(p))
}

/// `mu,P,N,nu,energy,residual,tail,iters`; failed entries carry NaN values.
pub fn sweep_csv(entries: &[SweepEntry]) -> String {
    csv(
        "mu,P,N,nu,energy,residual,tail,iters",
        entries.iter().map(|e| match &e.outcome {
            Ok(p) => vec![
                e.mu,
                e.period,
                e.points as f64,
                p.nu,
                p.energy,
                p.residual,
                e.tail,
                p.iterations as f64,
            ],
            Err(_) => vec![
                e.mu,
                e.period,
                e.points as f64,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                e.tail,
                f64::NAN,
            ],
        }),
    )
}

/// `mu,dist_aligned,speed_dev,energy_dev,shift,tau_ratio1,tau_ratio2,supnorm_ratio`.
pub fn convergence_csv(rows: &[(LongWaveComparison, ScalingDiagnostics)]) -> String {
    csv(
        "mu,dist_aligned,speed_dev,energy_dev,shift,tau_ratio1,tau_ratio2,supnorm_ratio",
        rows.iter().map(|(c, d)| {
            vec![
                c.mu,
                c.dist_aligned,
                c.speed_dev,
                c.energy_dev,
                c.shift,
                d.tau_ratio1,
                d.tau_ratio2,
                d.supnorm_ratio,
            ]
        }),
    )
}

/// `t,E_drift,Q_drift,orbit_dist,shift`.
pub fn trace_csv(trace: &EvolutionTrace) -> String {
    csv(
        "t,E_drift,Q_drift,orbit_dist,shift",
        (0..trace.times.len()).map(|i| {
            vec![
                trace.times[i],
                trace.e_drift[i],
                trace.q_drift[i],
                trace.orbit_dist[i],
                trace.shift[i],
            ]
        }),
    )
}
