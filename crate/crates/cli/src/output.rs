//! File output: CSV and JSON bodies written atomically (temp file + rename).

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use syzygy::dynamics::Trajectory;
use syzygy::eclipse::EclipseEvent;
use syzygy::shape::to_shape;
use syzygy::theorem::ScanRow;
use syzygy::triangle::{conserved, invariants};

use crate::CliError;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    fs::write(&tmp, bytes).map_err(|e| CliError::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub const TRAJECTORY_HEADER: [&str; 18] = [
    "t", "x1x", "x1y", "x2x", "x2y", "x3x", "x3y", "v1x", "v1y", "v2x", "v2y", "v3x", "v3y", "energy", "J", "z", "phi",
    "theta",
];

/// One row per integrator step boundary.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let m = traj.masses;
    let rows = traj.step_states().into_iter().map(|st| {
        let c = conserved(&m, &st).ok();
        let z = invariants(&m, &st).map(|i| i.z).unwrap_or(f64::NAN);
        let (phi, theta) = to_shape(&m, &st).map(|s| (s.point.phi, s.point.theta)).unwrap_or((f64::NAN, f64::NAN));
        let mut row: Vec<String> = st.to_record().iter().map(f64::to_string).collect();
        row.push(c.map_or(f64::NAN, |c| c.energy).to_string());
        row.push(c.map_or(f64::NAN, |c| c.angular_momentum).to_string());
        row.extend([z, phi, theta].map(|v| v.to_string()));
        row
    });
    write_atomic(path, &csv_bytes(&TRAJECTORY_HEADER, rows)?)
}

pub fn write_events(path: &Path, events: &[EclipseEvent]) -> Result<(), CliError> {
    let rows = events
        .iter()
        .map(|e| vec![e.t.to_string(), e.symbol.to_string(), e.direction.to_string(), e.grazing.to_string()]);
    write_atomic(path, &csv_bytes(&["t", "symbol", "direction", "grazing"], rows)?)
}

pub const SCAN_HEADER: [&str; 9] =
    ["phi", "theta", "lambda", "dUdphi", "dloglambda_dphi", "ineq1", "ineq2", "q_kinetic_factor", "q_potential_term"];

pub fn write_scan(path: &Path, rows: &[ScanRow]) -> Result<(), CliError> {
    let rows = rows.iter().map(|r| {
        [r.phi, r.theta, r.lambda, r.du_dphi, r.dloglambda_dphi, r.ineq1, r.ineq2, r.q_kinetic_factor, r.q_potential_term]
            .iter()
            .map(f64::to_string)
            .collect()
    });
    write_atomic(path, &csv_bytes(&SCAN_HEADER, rows)?)
}

/// `--out` names a directory, except that a `.json` path names the file itself.
pub fn target(out: &Path, default_name: &str) -> PathBuf {
    if out.extension().is_some_and(|e| e == "json") {
        out.to_path_buf()
    } else {
        out.join(default_name)
    }
}
