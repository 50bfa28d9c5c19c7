//! Aggregate statistics over a run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::controller::{Constraint, SolverUsed};

use super::metrics::MetricsRecord;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Mean and sample standard deviation. Both are `None` without samples; the
/// deviation of a single sample is 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Stat { mean: None, std: None, count: 0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean: Some(mean), std: Some(std), count: n }
    }
}

/// All ticks, ticks without constraint activity, and ticks with it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub all: Stat,
    pub woc: Stat,
    pub wc: Stat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Visibility {
    pub left_pct: f64,
    pub right_pct: f64,
    /// At least one camera sees the feature.
    pub any_pct: f64,
    pub both_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub ticks: usize,
    pub metrics: BTreeMap<String, Split>,
    pub visibility: Visibility,
    pub constraint_counts: BTreeMap<String, usize>,
    pub solver_counts: BTreeMap<String, usize>,
    /// Loop time of the ticks that ran the constrained solver.
    pub constrained_lt_ms: Stat,
}

type Extractor = fn(&MetricsRecord) -> Option<f64>;

/// Metric names and how to read them; centroid metrics only count ticks in
/// which that camera sees the feature.
pub const METRICS: [(&str, Extractor); 19] = [
    ("vva_deg", |m| Some(m.vva_deg)),
    ("fd_mm", |m| Some(m.fd_mm)),
    ("fd_signed_mm", |m| Some(m.fd_signed_mm)),
    ("pf_deg", |m| Some(m.pf_deg)),
    ("an_deg", |m| Some(m.an_deg)),
    ("pn_mm", |m| Some(m.pn_mm)),
    ("lt_ms", |m| Some(m.lt_ms)),
    ("left_l2_pix", |m| m.left.map(|c| c.errors.l2_pix)),
    ("left_l2_pct", |m| m.left.map(|c| c.errors.l2_pct)),
    ("left_u_err_pix", |m| m.left.map(|c| c.errors.u_err_pix)),
    ("left_u_err_pct", |m| m.left.map(|c| c.errors.u_err_pct)),
    ("left_v_err_pix", |m| m.left.map(|c| c.errors.v_err_pix)),
    ("left_v_err_pct", |m| m.left.map(|c| c.errors.v_err_pct)),
    ("right_l2_pix", |m| m.right.map(|c| c.errors.l2_pix)),
    ("right_l2_pct", |m| m.right.map(|c| c.errors.l2_pct)),
    ("right_u_err_pix", |m| m.right.map(|c| c.errors.u_err_pix)),
    ("right_u_err_pct", |m| m.right.map(|c| c.errors.u_err_pct)),
    ("right_v_err_pix", |m| m.right.map(|c| c.errors.v_err_pix)),
    ("right_v_err_pct", |m| m.right.map(|c| c.errors.v_err_pct)),
];

fn pct(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

pub fn summarize_records(records: &[MetricsRecord]) -> Summary {
    let mut metrics = BTreeMap::new();
    for (name, get) in METRICS {
        let pick = |filter: &dyn Fn(&MetricsRecord) -> bool| -> Vec<f64> {
            records.iter().filter(|m| filter(m)).filter_map(get).collect()
        };
        metrics.insert(
            name.to_string(),
            Split {
                all: Stat::of(&pick(&|_| true)),
                woc: Stat::of(&pick(&|m| !m.with_constraints())),
                wc: Stat::of(&pick(&|m| m.with_constraints())),
            },
        );
    }
    let n = records.len();
    let count = |f: &dyn Fn(&MetricsRecord) -> bool| records.iter().filter(|m| f(m)).count();
    let visibility = Visibility {
        left_pct: pct(count(&|m| m.left.is_some()), n),
        right_pct: pct(count(&|m| m.right.is_some()), n),
        any_pct: pct(count(&|m| m.visible_any()), n),
        both_pct: pct(count(&|m| m.left.is_some() && m.right.is_some()), n),
    };
    let constraint_counts = Constraint::ALL
        .iter()
        .map(|c| (c.label().to_string(), count(&|m| m.constraints.contains(*c))))
        .collect();
    let solver_counts = [SolverUsed::Newton, SolverUsed::Constrained]
        .iter()
        .map(|s| (s.to_string(), count(&|m| m.solver == *s)))
        .collect();
    let constrained_lt: Vec<f64> = records.iter().filter(|m| m.solver == SolverUsed::Constrained).map(|m| m.lt_ms).collect();
    Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        ticks: n,
        metrics,
        visibility,
        constraint_counts,
        solver_counts,
        constrained_lt_ms: Stat::of(&constrained_lt),
    }
}
