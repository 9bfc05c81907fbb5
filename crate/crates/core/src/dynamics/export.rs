//! CSV and JSON renderings of a trajectory.

use std::io::Write;

use serde_json::{json, Value};

use super::{GraphTopology, Trajectory};

/// Entries of `W` that get a column: every `(i, j)` row-major on complete
/// graphs, otherwise one entry per edge `i < j` (plus the diagonal when the
/// graph has self-loops). With `m > 1` every block entry is listed.
fn tracked_entries(g: &GraphTopology, m: usize) -> Vec<(String, usize, usize)> {
    let pairs: Vec<(usize, usize)> = if g.is_complete() {
        (0..g.n())
            .flat_map(|i| (0..g.n()).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j || g.self_loops())
            .collect()
    } else {
        let mut p: Vec<(usize, usize)> = g.edges().to_vec();
        if g.self_loops() {
            p.extend((0..g.n()).map(|i| (i, i)));
            p.sort_unstable();
        }
        p
    };
    let mut out = Vec::new();
    for (i, j) in pairs {
        if m == 1 {
            out.push((format!("w_{i}_{j}"), i, j));
        } else {
            for a in 0..m {
                for b in 0..m {
                    out.push((format!("w_{i}_{j}_{a}_{b}"), i * m + a, j * m + b));
                }
            }
        }
    }
    out
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes one CSV row per sample: `t, v_0.., w_.., v_norm_sq,
/// min_triangle_product`. Floats use the shortest round-trip representation.
pub fn write_trajectory_csv<W: Write>(
    traj: &Trajectory,
    g: &GraphTopology,
    out: W,
) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    let first = traj.initial();
    let entries = tracked_entries(g, first.m());
    let mut header = vec!["t".to_string()];
    header.extend((0..first.v.len()).map(|k| format!("v_{k}")));
    header.extend(entries.iter().map(|e| e.0.clone()));
    header.push("v_norm_sq".into());
    header.push("min_triangle_product".into());
    writer.write_record(&header)?;

    for (s, d) in traj.samples.iter().zip(&traj.diagnostics) {
        let mut row = Vec::with_capacity(header.len());
        row.push(s.t.to_string());
        row.extend(s.v.iter().map(|x| x.to_string()));
        row.extend(entries.iter().map(|&(_, r, c)| s.w[(r, c)].to_string()));
        row.push(d.v_norm_sq.to_string());
        row.push(fmt_opt(d.min_triangle_product));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn trajectory_csv(traj: &Trajectory, g: &GraphTopology) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(traj, g, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// `{meta, stop_reason, stop_time, steps, samples: [{t, v, w, diagnostics}]}`
/// where `w` is a row-major list of rows.
pub fn trajectory_json(traj: &Trajectory, meta: Value) -> Value {
    let samples: Vec<Value> = traj
        .samples
        .iter()
        .zip(&traj.diagnostics)
        .map(|(s, d)| {
            let rows: Vec<Vec<f64>> = (0..s.w.nrows())
                .map(|r| s.w.row(r).iter().copied().collect())
                .collect();
            json!({
                "t": s.t,
                "v": s.v.as_slice(),
                "w": rows,
                "diagnostics": d,
            })
        })
        .collect();
    json!({
        "meta": meta,
        "stop_reason": traj.stop_reason,
        "stop_time": traj.stop_time,
        "steps": traj.steps,
        "samples": samples,
    })
}
