//! Plot-ready traces and summary recomputation from a stored metrics CSV.

use std::path::Path;

use auv_core::so3::{quat_to_euler, UnitQuat};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::eval::world_velocity;
use crate::metrics::{read_metrics, summarize, MetricsRecord, Summary};

/// Summary file written next to the metrics by `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub scenario: String,
    pub seed: u64,
    pub checkpoint: String,
    pub config_hash: String,
    pub runtime_s: f64,
    pub metrics: Summary,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct TraceRow {
    t_s: f64,
    segment: usize,
    p_x: f64,
    p_y: f64,
    p_z: f64,
    vw_x: f64,
    vw_y: f64,
    vw_z: f64,
    v_x: f64,
    v_y: f64,
    v_z: f64,
    v_d_x: f64,
    v_d_y: f64,
    v_d_z: f64,
    roll_deg: f64,
    pitch_deg: f64,
    yaw_deg: f64,
    roll_d_deg: f64,
    pitch_d_deg: f64,
    yaw_d_deg: f64,
    att_err_deg: f64,
    cross_track_m: f64,
}

fn euler_deg(w: f64, x: f64, y: f64, z: f64) -> Result<[f64; 3], HarnessError> {
    let q = UnitQuat::new(w, x, y, z).map_err(|e| HarnessError::Input(format!("bad quaternion in trace: {e}")))?;
    let e = quat_to_euler(q);
    Ok([e.roll, e.pitch, e.yaw].map(f64::to_degrees))
}

fn trace_row(r: &MetricsRecord) -> Result<TraceRow, HarnessError> {
    let [roll_deg, pitch_deg, yaw_deg] = euler_deg(r.q_w, r.q_x, r.q_y, r.q_z)?;
    let [roll_d_deg, pitch_d_deg, yaw_d_deg] = euler_deg(r.q_d_w, r.q_d_x, r.q_d_y, r.q_d_z)?;
    let [vw_x, vw_y, vw_z] = world_velocity(r)?;
    Ok(TraceRow {
        t_s: r.t_s,
        segment: r.segment,
        p_x: r.p_x,
        p_y: r.p_y,
        p_z: r.p_z,
        vw_x,
        vw_y,
        vw_z,
        v_x: r.v_x,
        v_y: r.v_y,
        v_z: r.v_z,
        v_d_x: r.v_d_x,
        v_d_y: r.v_d_y,
        v_d_z: r.v_d_z,
        roll_deg,
        pitch_deg,
        yaw_deg,
        roll_d_deg,
        pitch_d_deg,
        yaw_d_deg,
        att_err_deg: r.att_err_deg,
        cross_track_m: r.cross_track_m,
    })
}

/// Largest absolute difference between matching numbers of two summaries;
/// `None` when their structure differs.
pub fn summary_deviation(a: &Summary, b: &Summary) -> Option<f64> {
    fn walk(a: &serde_json::Value, b: &serde_json::Value) -> Option<f64> {
        use serde_json::Value::*;
        match (a, b) {
            (Number(x), Number(y)) => Some((x.as_f64()? - y.as_f64()?).abs()),
            (Array(x), Array(y)) if x.len() == y.len() => x.iter().zip(y).try_fold(0.0, |m, (p, q)| Some(f64::max(m, walk(p, q)?))),
            (Object(x), Object(y)) if x.len() == y.len() => {
                x.iter().try_fold(0.0, |m, (k, p)| Some(f64::max(m, walk(p, y.get(k)?)?)))
            }
            _ => (a == b).then_some(0.0),
        }
    }
    walk(&serde_json::to_value(a).ok()?, &serde_json::to_value(b).ok()?)
}

pub struct ReplayOutcome {
    pub summary: Summary,
    /// Deviation from a stored `summary.json` next to the metrics, if present.
    pub stored_deviation: Option<Option<f64>>,
    pub trace_rows: usize,
}

/// Writes `trace.csv` (every `every`-th step) and `summary_replay.json` into `out_dir`.
pub fn replay(metrics: &Path, out_dir: &Path, every: usize) -> Result<ReplayOutcome, HarnessError> {
    if every == 0 {
        return Err(HarnessError::Input("downsampling stride must be at least 1".into()));
    }
    let records = read_metrics(metrics)?;
    let summary = summarize(&records)?;
    std::fs::create_dir_all(out_dir)?;
    let mut w = csv::Writer::from_path(out_dir.join("trace.csv")).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let mut rows = 0;
    for (i, r) in records.iter().enumerate() {
        if i % every == 0 || i + 1 == records.len() {
            w.serialize(trace_row(r)?).map_err(|e| HarnessError::Runtime(e.to_string()))?;
            rows += 1;
        }
    }
    w.flush()?;
    std::fs::write(
        out_dir.join("summary_replay.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    let stored = metrics.with_file_name("summary.json");
    let stored_deviation = if stored.exists() {
        let text = std::fs::read_to_string(&stored)?;
        let file: SummaryFile = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Input(format!("{}: {e}", stored.display())))?;
        Some(summary_deviation(&file.metrics, &summary))
    } else {
        None
    };
    Ok(ReplayOutcome { summary, stored_deviation, trace_rows: rows })
}
