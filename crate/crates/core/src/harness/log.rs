//! Per-tick CSV log.
//!
//! Column order is fixed: `tick, time`, the naive and commanded poses (12
//! values each, rotation row-major then translation), `q0..q{n-1}`, one 0/1
//! flag per constraint, `solver`, the objective breakdown and
//! `loop_time_ms`. Diagnostic columns follow: the feature and achieved
//! camera poses, Newton and solver details, the tracking metrics and the
//! per-camera centroid columns. Floats use the shortest representation that
//! parses back to the same value, so logs round-trip exactly.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;

use crate::camera::CentroidErrors;
use crate::controller::{Constraint, ConstraintSet, SolverUsed};
use crate::geometry::Pose;
use crate::optimizer::ObjectiveBreakdown;

use super::metrics::{CentroidSample, MetricsRecord, TickPoses};
use super::HarnessError;

const POSE_SUFFIXES: [&str; 12] = ["r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22", "tx", "ty", "tz"];
const OBJECTIVE_COLUMNS: [&str; 6] = ["c_ps", "c_or", "c_v", "c_per", "c_d", "total"];
const METRIC_COLUMNS: [&str; 6] = ["vva_deg", "fd_mm", "fd_signed_mm", "pf_deg", "an_deg", "pn_mm"];
const CENTROID_SUFFIXES: [&str; 9] = [
    "visible", "u", "v", "l2_pix", "l2_pct", "u_err_pix", "u_err_pct", "v_err_pix", "v_err_pct",
];

/// Name of the wall-clock column, the only nondeterministic one.
pub const LOOP_TIME_COLUMN: &str = "loop_time_ms";

#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub poses: TickPoses,
    pub q_command: Vec<f64>,
    pub objective: Option<ObjectiveBreakdown>,
    pub newton_failure: Option<String>,
    pub safety_override: bool,
    pub used_fallback_x: bool,
    pub solve_evaluations: Option<usize>,
    pub termination: Option<String>,
    pub metrics: MetricsRecord,
}

pub fn header(dof: usize) -> Vec<String> {
    let mut h: Vec<String> = vec!["tick".into(), "time".into()];
    let pose = |prefix: &str, h: &mut Vec<String>| h.extend(POSE_SUFFIXES.iter().map(|s| format!("{prefix}_{s}")));
    pose("naive", &mut h);
    pose("commanded", &mut h);
    h.extend((0..dof).map(|i| format!("q{i}")));
    h.extend(Constraint::ALL.iter().map(|c| c.label().to_string()));
    h.push("solver".into());
    h.extend(OBJECTIVE_COLUMNS.iter().map(|s| s.to_string()));
    h.push(LOOP_TIME_COLUMN.into());
    pose("feature", &mut h);
    pose("camera", &mut h);
    for s in ["newton_failure", "safety_override", "fallback_x", "solve_evals", "termination"] {
        h.push(s.into());
    }
    h.extend(METRIC_COLUMNS.iter().map(|s| s.to_string()));
    for side in ["left", "right"] {
        h.extend(CENTROID_SUFFIXES.iter().map(|s| format!("{side}_{s}")));
    }
    h
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn record(row: &LogRow) -> Vec<String> {
    let p = &row.poses;
    let m = &row.metrics;
    let mut r = vec![p.tick.to_string(), p.time.to_string()];
    let pose = |pose: &Pose, r: &mut Vec<String>| r.extend(pose.to_row_major().iter().map(f64::to_string));
    pose(&p.naive, &mut r);
    pose(&p.commanded, &mut r);
    r.extend(row.q_command.iter().map(f64::to_string));
    r.extend(Constraint::ALL.iter().map(|c| flag(p.constraints.contains(*c))));
    r.push(p.solver.to_string());
    match &row.objective {
        Some(o) => r.extend([o.c_ps, o.c_or, o.c_v, o.c_per, o.c_d, o.total].iter().map(f64::to_string)),
        None => r.extend(std::iter::repeat_n(String::new(), OBJECTIVE_COLUMNS.len())),
    }
    r.push(m.lt_ms.to_string());
    pose(&p.feature, &mut r);
    pose(&p.camera, &mut r);
    r.push(row.newton_failure.clone().unwrap_or_default());
    r.push(flag(row.safety_override));
    r.push(flag(row.used_fallback_x));
    r.push(opt(row.solve_evaluations));
    r.push(row.termination.clone().unwrap_or_default());
    r.extend([m.vva_deg, m.fd_mm, m.fd_signed_mm, m.pf_deg, m.an_deg, m.pn_mm].iter().map(f64::to_string));
    for side in [&m.left, &m.right] {
        match side {
            Some(c) => {
                let e = &c.errors;
                r.push("1".into());
                r.extend(
                    [c.u, c.v, e.l2_pix, e.l2_pct, e.u_err_pix, e.u_err_pct, e.v_err_pix, e.v_err_pct]
                        .iter()
                        .map(f64::to_string),
                );
            }
            None => {
                r.push("0".into());
                r.extend(std::iter::repeat_n(String::new(), CENTROID_SUFFIXES.len() - 1));
            }
        }
    }
    r
}

/// Renders the whole log. `rows` must share one joint dimension.
pub fn write_csv_string(rows: &[LogRow], dof: usize) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Config(format!("csv encoding: {e}"));
    w.write_record(header(dof)).map_err(csv_err)?;
    for row in rows {
        if row.q_command.len() != dof {
            return Err(HarnessError::Config(format!("row {} has {} joints, expected {dof}", row.poses.tick, row.q_command.len())));
        }
        w.write_record(record(row)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Config(format!("csv encoding: {e}")))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Config(e.to_string()))
}

pub fn write_csv(path: &Path, rows: &[LogRow], dof: usize) -> Result<(), HarnessError> {
    let text = write_csv_string(rows, dof)?;
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

struct Fields<'a> {
    index: &'a HashMap<String, usize>,
    record: &'a csv::StringRecord,
    line: usize,
}

impl Fields<'_> {
    fn raw(&self, name: &str) -> Result<&str, String> {
        let i = self.index.get(name).ok_or_else(|| format!("missing column {name}"))?;
        self.record.get(*i).ok_or_else(|| format!("line {}: short row", self.line))
    }

    fn f64(&self, name: &str) -> Result<f64, String> {
        let s = self.raw(name)?;
        s.parse().map_err(|_| format!("line {}: column {name}: not a number: {s:?}", self.line))
    }

    fn opt_f64(&self, name: &str) -> Result<Option<f64>, String> {
        if self.raw(name)?.is_empty() {
            Ok(None)
        } else {
            self.f64(name).map(Some)
        }
    }

    fn flag(&self, name: &str) -> Result<bool, String> {
        match self.raw(name)? {
            "0" => Ok(false),
            "1" => Ok(true),
            s => Err(format!("line {}: column {name}: expected 0 or 1, got {s:?}", self.line)),
        }
    }

    fn text(&self, name: &str) -> Result<Option<String>, String> {
        let s = self.raw(name)?;
        Ok((!s.is_empty()).then(|| s.to_string()))
    }

    fn pose(&self, prefix: &str) -> Result<Pose, String> {
        let mut v = [0.0; 12];
        for (k, s) in POSE_SUFFIXES.iter().enumerate() {
            v[k] = self.f64(&format!("{prefix}_{s}"))?;
        }
        let r = nalgebra::Matrix3::from_row_slice(&v[..9]);
        Ok(Pose::from_parts_unchecked(r, nalgebra::Vector3::new(v[9], v[10], v[11])))
    }

    fn centroid(&self, side: &str) -> Result<Option<CentroidSample>, String> {
        if !self.flag(&format!("{side}_visible"))? {
            return Ok(None);
        }
        let g = |s: &str| self.f64(&format!("{side}_{s}"));
        Ok(Some(CentroidSample {
            u: g("u")?,
            v: g("v")?,
            errors: CentroidErrors {
                l2_pix: g("l2_pix")?,
                l2_pct: g("l2_pct")?,
                u_err_pix: g("u_err_pix")?,
                u_err_pct: g("u_err_pct")?,
                v_err_pix: g("v_err_pix")?,
                v_err_pct: g("v_err_pct")?,
            },
        }))
    }

    fn row(&self, dof: usize) -> Result<LogRow, String> {
        let tick: u64 = self.raw("tick")?.parse().map_err(|_| format!("line {}: bad tick", self.line))?;
        let time = self.f64("time")?;
        let constraints: ConstraintSet = Constraint::ALL
            .iter()
            .filter_map(|c| match self.flag(c.label()) {
                Ok(true) => Some(Ok(*c)),
                Ok(false) => None,
                Err(e) => Some(Err(e)),
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .collect();
        let solver = match self.raw("solver")? {
            "newton" => SolverUsed::Newton,
            "constrained" => SolverUsed::Constrained,
            s => return Err(format!("line {}: unknown solver {s:?}", self.line)),
        };
        let lt_ms = self.f64(LOOP_TIME_COLUMN)?;
        let objective = match self.opt_f64("total")? {
            None => None,
            Some(total) => Some(ObjectiveBreakdown {
                c_ps: self.f64("c_ps")?,
                c_or: self.f64("c_or")?,
                c_v: self.f64("c_v")?,
                c_per: self.f64("c_per")?,
                c_d: self.f64("c_d")?,
                total,
            }),
        };
        let poses = TickPoses {
            tick,
            time,
            feature: self.pose("feature")?,
            naive: self.pose("naive")?,
            commanded: self.pose("commanded")?,
            camera: self.pose("camera")?,
            constraints,
            solver,
            loop_time_ms: lt_ms,
        };
        let metrics = MetricsRecord {
            tick,
            time,
            vva_deg: self.f64("vva_deg")?,
            fd_mm: self.f64("fd_mm")?,
            fd_signed_mm: self.f64("fd_signed_mm")?,
            pf_deg: self.f64("pf_deg")?,
            an_deg: self.f64("an_deg")?,
            pn_mm: self.f64("pn_mm")?,
            lt_ms,
            constraints,
            solver,
            left: self.centroid("left")?,
            right: self.centroid("right")?,
        };
        let solve_evaluations = match self.raw("solve_evals")? {
            "" => None,
            s => Some(s.parse().map_err(|_| format!("line {}: bad solve_evals", self.line))?),
        };
        Ok(LogRow {
            poses,
            q_command: (0..dof).map(|i| self.f64(&format!("q{i}"))).collect::<Result<_, _>>()?,
            objective,
            newton_failure: self.text("newton_failure")?,
            safety_override: self.flag("safety_override")?,
            used_fallback_x: self.flag("fallback_x")?,
            solve_evaluations,
            termination: self.text("termination")?,
            metrics,
        })
    }
}

/// Parses a log written by [`write_csv`]; values come back bit-identical.
pub fn read_csv(path: &Path) -> Result<Vec<LogRow>, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    let headers = reader.headers().map_err(|e| HarnessError::csv(path, e))?.clone();
    let index: HashMap<String, usize> = headers.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
    let dof = (0..).take_while(|i| index.contains_key(&format!("q{i}"))).count();
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let record = rec.map_err(|e| HarnessError::csv(path, e))?;
        let fields = Fields { index: &index, record: &record, line: k + 2 };
        rows.push(fields.row(dof).map_err(|message| HarnessError::Parse { path: path.to_path_buf(), message })?);
    }
    Ok(rows)
}
