//! CSV and metrics files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use safechain::{Metrics, Trajectory};

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

pub fn csv_header(traj: &Trajectory) -> String {
    let dim = traj.order * traj.axes;
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=dim).map(|i| format!("x{i}")));
    cols.extend((1..=traj.axes).map(|i| format!("u{i}")));
    cols.extend((1..=dim).map(|i| format!("d{i}")));
    cols.extend((1..=traj.order).map(|i| format!("h{i}")));
    cols.push("branch".into());
    cols.join(",")
}

/// One row per sample. Floats use the shortest representation that
/// round-trips, so equal runs give byte-identical files.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = csv_header(traj);
    s.push('\n');
    for k in 0..traj.len() {
        write!(s, "{}", traj.times[k]).unwrap();
        for col in [
            &traj.states[k],
            &traj.inputs[k],
            &traj.disturbances[k],
            &traj.barrier[k],
        ] {
            for v in col {
                write!(s, ",{v}").unwrap();
            }
        }
        let branch = traj.branches[k].map_or("nominal", |b| b.as_str());
        writeln!(s, ",{branch}").unwrap();
    }
    s
}

pub fn metrics_toml(mode: &str, m: &Metrics, degenerate_gradient: bool) -> String {
    format!(
        "mode = \"{mode}\"\nmin_h1 = {:?}\ncontrol_effort = {:?}\ngoal_error = {:?}\nviolation = {}\ndegenerate_gradient = {}\n",
        m.min_h1, m.control_effort, m.goal_error, m.violation, degenerate_gradient
    )
}
