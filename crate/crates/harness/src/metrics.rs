//! Per-step evaluation records, their CSV form and the summary computed from them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// Reference discontinuities are followed by this many seconds of transient
/// that the steady-state statistics ignore.
pub const TRANSIENT_S: f64 = 3.0;

/// One control step. Velocities are body-frame, positions NED.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub t_s: f64,
    pub segment: usize,
    pub finished: bool,
    pub v_d_x: f64,
    pub v_d_y: f64,
    pub v_d_z: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub v_z: f64,
    pub v_e_x: f64,
    pub v_e_y: f64,
    pub v_e_z: f64,
    pub q_d_w: f64,
    pub q_d_x: f64,
    pub q_d_y: f64,
    pub q_d_z: f64,
    pub q_w: f64,
    pub q_x: f64,
    pub q_y: f64,
    pub q_z: f64,
    pub att_err_deg: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
    pub a_0: f64,
    pub a_1: f64,
    pub a_2: f64,
    pub a_3: f64,
    pub a_4: f64,
    pub a_5: f64,
    pub cross_track_m: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
}

pub const COLUMNS: [&str; 34] = [
    "t_s", "segment", "finished", "v_d_x", "v_d_y", "v_d_z", "v_x", "v_y", "v_z", "v_e_x", "v_e_y", "v_e_z", "q_d_w",
    "q_d_x", "q_d_y", "q_d_z", "q_w", "q_x", "q_y", "q_z", "att_err_deg", "omega_x", "omega_y", "omega_z", "a_0", "a_1",
    "a_2", "a_3", "a_4", "a_5", "cross_track_m", "p_x", "p_y", "p_z",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub segment: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub min_attitude_error_deg: f64,
    pub final_attitude_error_deg: f64,
}

/// Statistics recomputable from the per-step records alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub samples: usize,
    pub post_transient_samples: usize,
    pub duration_s: f64,
    pub completed: bool,
    pub completion_time_s: Option<f64>,
    /// Post-transient RMS of each body-axis velocity error.
    pub rms_v_error_m_s: [f64; 3],
    pub rms_attitude_error_deg: f64,
    pub mean_attitude_error_deg: f64,
    pub max_attitude_error_deg: f64,
    /// Over the whole run, transients included.
    pub max_attitude_error_all_deg: f64,
    pub max_cross_track_m: f64,
    pub segments: Vec<SegmentSummary>,
}

/// Steady-state mask: a sample counts once `TRANSIENT_S` has elapsed since the
/// start or the last segment change.
pub fn steady_mask(records: &[MetricsRecord]) -> Vec<bool> {
    let mut last_switch = records.first().map_or(0.0, |r| r.t_s);
    let mut prev_segment = records.first().map_or(0, |r| r.segment);
    records
        .iter()
        .map(|r| {
            if r.segment != prev_segment {
                last_switch = r.t_s;
                prev_segment = r.segment;
            }
            r.t_s - last_switch >= TRANSIENT_S - 1e-9
        })
        .collect()
}

pub fn summarize(records: &[MetricsRecord]) -> Result<Summary, HarnessError> {
    let (first, last) = match (records.first(), records.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(HarnessError::Input("empty metrics trace".into())),
    };
    let mask = steady_mask(records);
    let steady: Vec<&MetricsRecord> = records.iter().zip(&mask).filter(|(_, m)| **m).map(|(r, _)| r).collect();
    let n = steady.len();
    let mean = |f: &dyn Fn(&MetricsRecord) -> f64| {
        if n == 0 {
            f64::NAN
        } else {
            steady.iter().map(|r| f(r)).sum::<f64>() / n as f64
        }
    };
    let rms_v_error_m_s = [
        mean(&|r| r.v_e_x * r.v_e_x).sqrt(),
        mean(&|r| r.v_e_y * r.v_e_y).sqrt(),
        mean(&|r| r.v_e_z * r.v_e_z).sqrt(),
    ];
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NAN, f64::max);

    let mut segments: Vec<SegmentSummary> = Vec::new();
    for r in records {
        match segments.last_mut() {
            Some(s) if s.segment == r.segment => {
                s.end_s = r.t_s;
                s.min_attitude_error_deg = s.min_attitude_error_deg.min(r.att_err_deg);
                s.final_attitude_error_deg = r.att_err_deg;
            }
            _ => segments.push(SegmentSummary {
                segment: r.segment,
                start_s: r.t_s,
                end_s: r.t_s,
                min_attitude_error_deg: r.att_err_deg,
                final_attitude_error_deg: r.att_err_deg,
            }),
        }
    }
    let completion = records.iter().find(|r| r.finished).map(|r| r.t_s);
    Ok(Summary {
        samples: records.len(),
        post_transient_samples: n,
        duration_s: last.t_s - first.t_s,
        completed: completion.is_some(),
        completion_time_s: completion,
        rms_v_error_m_s,
        rms_attitude_error_deg: mean(&|r| r.att_err_deg * r.att_err_deg).sqrt(),
        mean_attitude_error_deg: mean(&|r| r.att_err_deg),
        max_attitude_error_deg: max(&mut steady.iter().map(|r| r.att_err_deg)),
        max_attitude_error_all_deg: max(&mut records.iter().map(|r| r.att_err_deg)),
        max_cross_track_m: max(&mut records.iter().map(|r| r.cross_track_m)),
        segments,
    })
}

pub fn write_metrics(path: &Path, records: &[MetricsRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    for r in records {
        w.serialize(r).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a metrics CSV, checking the column schema and naming the offending row
/// on malformed input.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
    let headers = r.headers().map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?.clone();
    if headers.iter().ne(COLUMNS.iter().copied()) {
        return Err(HarnessError::Input(format!(
            "{}: column schema mismatch (expected {})",
            path.display(),
            COLUMNS.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in r.deserialize::<MetricsRecord>().enumerate() {
        let rec = rec.map_err(|e| HarnessError::Input(format!("{}: data row {}: {e}", path.display(), i + 1)))?;
        if let Some(prev) = out.last().map(|p: &MetricsRecord| p.t_s) {
            if rec.t_s <= prev {
                return Err(HarnessError::Input(format!("{}: data row {}: time not increasing", path.display(), i + 1)));
            }
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(HarnessError::Input(format!("{}: empty metrics trace", path.display())));
    }
    Ok(out)
}
