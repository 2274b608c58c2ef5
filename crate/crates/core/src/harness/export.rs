//! Writers for the trajectory CSV, metrics JSON, planned paths and the SVG
//! overlay. All numbers use fixed precision so output bytes are stable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use glam::DVec2;
use thiserror::Error;

use super::metrics::MetricsReport;
use super::sim::{PlanRecord, TickRecord, TrajectoryLog};
use crate::world::{CellIndex, OccupancyGrid};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
}

pub const CSV_COLUMNS: [&str; 16] = [
    "t",
    "robot_x",
    "robot_y",
    "robot_theta",
    "cmd_vx",
    "cmd_vy",
    "cmd_omega",
    "speed_cap",
    "w_lanes",
    "belief",
    "gate",
    "human_x",
    "human_y",
    "human_speed",
    "separation",
    "n_detections",
];

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.6}"))
}

pub fn trajectory_csv(records: &[TickRecord]) -> String {
    let mut s = CSV_COLUMNS.join(",");
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{},{}",
            r.t,
            r.robot.x,
            r.robot.y,
            r.robot.theta,
            r.cmd.vx,
            r.cmd.vy,
            r.cmd.omega,
            r.speed_cap,
            r.w_lanes,
            r.belief,
            u8::from(r.gate),
            opt(r.human.map(|h| h.position.x)),
            opt(r.human.map(|h| h.position.y)),
            opt(r.human.map(|h| h.speed)),
            opt(r.separation),
            r.n_detections,
        );
    }
    s
}

pub fn plans_csv(plans: &[PlanRecord]) -> String {
    let mut s = String::from("t,index,x,y,heading\n");
    for p in plans {
        for (i, n) in p.path.nodes.iter().enumerate() {
            let _ = writeln!(s, "{:.6},{},{:.6},{:.6},{:.6}", p.t, i, n.point.x, n.point.y, n.heading);
        }
    }
    s
}

pub fn metrics_json(m: &MetricsReport) -> String {
    let mut s = serde_json::to_string_pretty(m).expect("metrics serialize");
    s.push('\n');
    s
}

/// Agent tracks recovered from a trajectory CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tracks {
    pub robot: Vec<DVec2>,
    pub human: Vec<DVec2>,
}

pub fn tracks_from_log(log: &TrajectoryLog) -> Tracks {
    Tracks {
        robot: log.records.iter().map(|r| r.robot.position()).collect(),
        human: log.records.iter().filter_map(|r| r.human.map(|h| h.position)).collect(),
    }
}

pub fn parse_trajectory_csv(text: &str, path: &Path) -> Result<Tracks, ExportError> {
    let err = |line: usize, msg: String| ExportError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    if header != CSV_COLUMNS.join(",") {
        return Err(err(1, "unexpected header".into()));
    }
    let mut tracks = Tracks::default();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != CSV_COLUMNS.len() {
            return Err(err(i + 2, format!("expected {} fields, found {}", CSV_COLUMNS.len(), f.len())));
        }
        let num = |j: usize| -> Result<Option<f64>, ExportError> {
            if f[j].is_empty() {
                Ok(None)
            } else {
                f[j].parse::<f64>()
                    .map(Some)
                    .map_err(|e| err(i + 2, format!("{}: {e}", CSV_COLUMNS[j])))
            }
        };
        if let (Some(x), Some(y)) = (num(1)?, num(2)?) {
            tracks.robot.push(DVec2::new(x, y));
        }
        if let (Some(x), Some(y)) = (num(11)?, num(12)?) {
            tracks.human.push(DVec2::new(x, y));
        }
    }
    Ok(tracks)
}

pub fn parse_plans_csv(text: &str) -> Vec<Vec<DVec2>> {
    let mut out: Vec<Vec<DVec2>> = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (Some(i), Some(x), Some(y)) = (
            f.get(1).and_then(|v| v.parse::<usize>().ok()),
            f.get(2).and_then(|v| v.parse::<f64>().ok()),
            f.get(3).and_then(|v| v.parse::<f64>().ok()),
        ) else {
            continue;
        };
        if i == 0 || out.is_empty() {
            out.push(Vec::new());
        }
        out.last_mut().expect("pushed above").push(DVec2::new(x, y));
    }
    out
}

const PX_PER_M: f64 = 40.0;

/// Trajectory overlay: walls, a 1 m grid, planned paths (thin), and one
/// polyline per agent.
pub fn render_svg(grid: &OccupancyGrid, tracks: &Tracks, plans: &[Vec<DVec2>]) -> String {
    let lo = grid.origin();
    let hi = grid.extent();
    let size = (hi - lo) * PX_PER_M;
    let px = |p: DVec2| DVec2::new((p.x - lo.x) * PX_PER_M, (hi.y - p.y) * PX_PER_M);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.2} {:.2}">"#,
        size.x.ceil(),
        size.y.ceil(),
        size.x,
        size.y
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g id=\"walls\" fill=\"#444\">\n");
    let cell = grid.resolution() * PX_PER_M;
    for iy in 0..grid.height() {
        let mut ix = 0;
        while ix < grid.width() {
            if !grid.is_occupied(CellIndex::new(ix, iy)) {
                ix += 1;
                continue;
            }
            let start = ix;
            while ix < grid.width() && grid.is_occupied(CellIndex::new(ix, iy)) {
                ix += 1;
            }
            let corner = px(grid.cell_center(CellIndex::new(start, iy)) + DVec2::new(-0.5, 0.5) * grid.resolution());
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                corner.x,
                corner.y,
                (ix - start) as f64 * cell,
                cell
            );
        }
    }
    s.push_str("</g>\n<g id=\"grid\" stroke=\"#ccc\" stroke-width=\"0.5\">\n");
    let mut x = lo.x.ceil();
    while x <= hi.x {
        let (a, b) = (px(DVec2::new(x, lo.y)), px(DVec2::new(x, hi.y)));
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#, a.x, a.y, b.x, b.y);
        x += 1.0;
    }
    let mut y = lo.y.ceil();
    while y <= hi.y {
        let (a, b) = (px(DVec2::new(lo.x, y)), px(DVec2::new(hi.x, y)));
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#, a.x, a.y, b.x, b.y);
        y += 1.0;
    }
    s.push_str("</g>\n");
    let poly = |s: &mut String, id: &str, pts: &[DVec2], style: &str| {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|p| {
                let q = px(*p);
                format!("{:.2},{:.2}", q.x, q.y)
            })
            .collect();
        let _ = writeln!(s, r#"<polyline id="{id}" fill="none" {style} points="{}"/>"#, coords.join(" "));
    };
    s.push_str("<g id=\"plans\">\n");
    for (i, p) in plans.iter().enumerate() {
        poly(&mut s, &format!("plan-{i}"), p, r##"stroke="#e8a33d" stroke-opacity="0.35" stroke-width="1""##);
    }
    s.push_str("</g>\n");
    poly(&mut s, "robot", &tracks.robot, r##"stroke="#1f6fb2" stroke-width="3""##);
    poly(&mut s, "human", &tracks.human, r##"stroke="#2aa198" stroke-width="3""##);
    s.push_str("</svg>\n");
    s
}

fn write(path: &Path, contents: &str) -> Result<(), ExportError> {
    std::fs::write(path, contents).map_err(|source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read(path: &Path) -> Result<String, ExportError> {
    std::fs::read_to_string(path).map_err(|source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `trajectory.csv`, `metrics.json`, `plans.csv`, `map.txt` and
/// `trajectory.svg` into `dir`, creating it if needed.
pub fn write_run(dir: &Path, grid: &OccupancyGrid, log: &TrajectoryLog, metrics: &MetricsReport) -> Result<(), ExportError> {
    std::fs::create_dir_all(dir).map_err(|source| ExportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write(&dir.join("trajectory.csv"), &trajectory_csv(&log.records))?;
    write(&dir.join("metrics.json"), &metrics_json(metrics))?;
    write(&dir.join("plans.csv"), &plans_csv(&log.plans))?;
    write(&dir.join("map.txt"), &grid.to_ascii())?;
    let plans: Vec<Vec<DVec2>> = log.plans.iter().map(|p| p.path.points()).collect();
    write(&dir.join("trajectory.svg"), &render_svg(grid, &tracks_from_log(log), &plans))?;
    Ok(())
}

pub fn write_lane_field(path: &Path, csv: &str) -> Result<(), ExportError> {
    write(path, csv)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ExportError> {
    write(path, text)
}
