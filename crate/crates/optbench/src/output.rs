//! CSV and summary writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use optimistic::Trajectory;

use crate::CliError;

pub const TRAJECTORY_HEADER: &str = "k,eta,eta_hat,calls,residual,gap,dist2,zeta";

/// 17 significant digits, round-trips exactly.
pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

/// One row per outer iteration; `k` counts completed iterations.
pub fn trajectory_csv(traj: &Trajectory, gaps: Option<&[f64]>) -> String {
    let mut s = String::new();
    s.push_str(TRAJECTORY_HEADER);
    s.push('\n');
    for (i, r) in traj.records.iter().enumerate() {
        let gap = gaps.and_then(|g| g.get(i).copied()).or(r.gap);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            i + 1,
            fmt_f(r.eta),
            fmt_f(r.eta_hat),
            r.calls,
            fmt_f(r.residual),
            fmt_opt(gap),
            fmt_opt(r.dist2),
            fmt_f(r.zeta)
        );
    }
    s
}

/// Column table with a leading `k` column; columns may differ in length.
pub fn columns_csv(columns: &[(String, Vec<Option<f64>>)]) -> String {
    let rows = columns.iter().map(|c| c.1.len()).max().unwrap_or(0);
    let mut s = String::from("k");
    for (name, _) in columns {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for i in 0..rows {
        s.push_str(&(i + 1).to_string());
        for (_, col) in columns {
            s.push(',');
            s.push_str(&fmt_opt(col.get(i).copied().flatten()));
        }
        s.push('\n');
    }
    s
}

pub fn write(dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let p = dir.join(name);
    fs::write(&p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
}
