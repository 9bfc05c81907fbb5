//! Diagnostics computed over finished trajectories.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{simulate, DynamicsError, SimConfig, StopReason, SystemState, Trajectory};
use crate::experiments::{GraphSpec, InitError, V0Spec, W0Spec};
use crate::spectral::{eigh, SpectralError, SymmetricMatrix, DEFAULT_EIG_TOL};

/// Fraction of samples forming the trailing window of limit estimates.
pub const TRAILING_FRACTION: f64 = 0.1;
/// Spread below which the normalized opinion counts as converged.
pub const DIRECTION_TOL: f64 = 1e-3;
/// Margins of the dominant mode below this are flagged non-generic.
pub const GENERIC_MARGIN: f64 = 1.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("λ-coordinates need scalar opinions (m = 1), got m = {0}")]
    BlockOpinions(usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("opinions vanish on the trailing window; the limit direction is undefined")]
    ZeroOpinion,
    #[error("C is {c}x{c} but opinions have length {n}")]
    Dimension { c: usize, n: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

fn trailing_window(len: usize) -> usize {
    ((TRAILING_FRACTION * len as f64).ceil() as usize).clamp(1, len.max(1))
}

/// Opinions expressed in the eigenbasis of `C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaTrack {
    pub u: DMatrix<f64>,
    /// Eigenvalues of `C`, descending; at most the first is positive.
    pub eigvals_c: Vec<f64>,
    pub times: Vec<f64>,
    /// `λ(t) = uᵀV(t)` per sample.
    pub lambda_samples: Vec<DVector<f64>>,
    /// `max |Σλ² − |V|²| / |V|²` over samples with `V ≠ 0`.
    pub parseval_defect: f64,
    /// `max |λᵢ'' − ab(2|λ|² − aᵢ)λᵢ| / (1 + |λ|³)` over interior samples,
    /// from centred differences. Meaningful for continuous runs only.
    pub ode_residual: Option<f64>,
}

/// Projects every sample onto the eigenbasis of `c`.
///
/// `c` is the conserved matrix `VVᵀ − (a/b)W²` of the run, which reduces to
/// `V(0)V(0)ᵀ − W(0)²` for equal gains.
pub fn lambda_coordinates(
    traj: &Trajectory,
    c: &SymmetricMatrix,
) -> Result<LambdaTrack, AnalysisError> {
    let first = traj.initial();
    if first.m() != 1 {
        return Err(AnalysisError::BlockOpinions(first.m()));
    }
    if c.dim() != first.v.len() {
        return Err(AnalysisError::Dimension {
            c: c.dim(),
            n: first.v.len(),
        });
    }
    let dec = eigh(c, DEFAULT_EIG_TOL)?;
    let ut = dec.u.transpose();
    let times = traj.times();
    let lambda: Vec<DVector<f64>> = traj.samples.iter().map(|s| &ut * &s.v).collect();

    let parseval_defect = traj
        .samples
        .iter()
        .zip(&lambda)
        .filter_map(|(s, l)| {
            let v2 = s.v.norm_squared();
            (v2 > 0.0).then(|| (l.norm_squared() - v2).abs() / v2)
        })
        .fold(0.0, f64::max);

    let gain = traj.a * traj.b;
    let ode_residual = (lambda.len() >= 3).then(|| {
        let mut worst = 0.0_f64;
        for k in 1..lambda.len() - 1 {
            let (h0, h1) = (times[k] - times[k - 1], times[k + 1] - times[k]);
            // The uneven-grid stencil is only first order, so triples
            // straddling a step-size change are left out.
            if !(h0 > 0.0 && h1 > 0.0) || (h1 - h0).abs() > 1e-6 * h0.max(h1) {
                continue;
            }
            let norm_sq = lambda[k].norm_squared();
            #[allow(clippy::needless_range_loop)]
            for i in 0..lambda[k].len() {
                let second = 2.0
                    * (lambda[k - 1][i] / (h0 * (h0 + h1)) - lambda[k][i] / (h0 * h1)
                        + lambda[k + 1][i] / (h1 * (h0 + h1)));
                let model = gain * (2.0 * norm_sq - dec.eigenvalues[i]) * lambda[k][i];
                worst = worst.max((second - model).abs() / (1.0 + norm_sq.powf(1.5)));
            }
        }
        worst
    });

    Ok(LambdaTrack {
        u: dec.u,
        eigvals_c: dec.eigenvalues,
        times,
        lambda_samples: lambda,
        parseval_defect,
        ode_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominantMode {
    pub index: usize,
    /// Trailing-window mean `|λ_h|` over that of the runner-up.
    pub margin: f64,
    /// `margin ≥ 1.05`.
    pub generic: bool,
}

/// The λ-coordinate with the largest mean magnitude over the trailing
/// window.
pub fn dominant_mode(lt: &LambdaTrack) -> Result<DominantMode, AnalysisError> {
    let len = lt.lambda_samples.len();
    if len < 10 {
        return Err(AnalysisError::TooFewSamples {
            needed: 10,
            got: len,
        });
    }
    let window = &lt.lambda_samples[len - trailing_window(len)..];
    let dim = window[0].len();
    let mean: Vec<f64> = (0..dim)
        .map(|i| window.iter().map(|l| l[i].abs()).sum::<f64>() / window.len() as f64)
        .collect();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| mean[y].total_cmp(&mean[x]).then(x.cmp(&y)));
    let index = order[0];
    let margin = match order.get(1) {
        Some(&r) if mean[r] > 0.0 => mean[index] / mean[r],
        _ => f64::INFINITY,
    };
    Ok(DominantMode {
        index,
        margin,
        generic: margin >= GENERIC_MARGIN,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitDirection {
    pub direction: DVector<f64>,
    pub converged: bool,
    /// Largest componentwise deviation of `V/|V|` from the window mean.
    pub residual: f64,
}

fn finite_samples(traj: &Trajectory) -> Vec<&SystemState> {
    traj.samples.iter().filter(|s| s.is_finite()).collect()
}

/// Estimates `lim V/|V|` as the mean unit opinion over the trailing window.
pub fn limit_direction(traj: &Trajectory) -> Result<LimitDirection, AnalysisError> {
    let samples = finite_samples(traj);
    if samples.is_empty() {
        return Err(AnalysisError::TooFewSamples { needed: 1, got: 0 });
    }
    let window = &samples[samples.len() - trailing_window(samples.len())..];
    let units: Vec<DVector<f64>> = window
        .iter()
        .map(|s| {
            let norm = s.v.norm();
            (norm >= crate::dynamics::COLLAPSE_TOL).then(|| &s.v / norm)
        })
        .collect::<Option<_>>()
        .ok_or(AnalysisError::ZeroOpinion)?;
    let mut mean = DVector::zeros(units[0].len());
    units.iter().for_each(|u| mean += u);
    mean /= units.len() as f64;
    let residual = units.iter().map(|u| (u - &mean).amax()).fold(0.0, f64::max);
    let norm = mean.norm();
    if norm == 0.0 {
        return Err(AnalysisError::ZeroOpinion);
    }
    Ok(LimitDirection {
        direction: mean / norm,
        converged: residual < DIRECTION_TOL,
        residual,
    })
}

/// `‖A·v̂ − v̂‖` with `v̂ = V/|V|` and `A = (a/b)·W²/|V|²` at the last finite
/// sample. Near blow-up `A` approaches a matrix with `v̂` as eigenvector of
/// eigenvalue one, so the residual shrinks as `|V|` grows.
pub fn limit_eigen_check(traj: &Trajectory) -> Result<f64, AnalysisError> {
    let s = *finite_samples(traj)
        .last()
        .ok_or(AnalysisError::TooFewSamples { needed: 1, got: 0 })?;
    if s.m() != 1 {
        return Err(AnalysisError::BlockOpinions(s.m()));
    }
    let norm = s.v.norm();
    if norm < crate::dynamics::COLLAPSE_TOL {
        return Err(AnalysisError::ZeroOpinion);
    }
    let unit = &s.v / norm;
    let wu = &s.w * &unit;
    let a_unit = &s.w * wu * (traj.a / traj.b / (norm * norm));
    Ok((a_unit - unit).norm())
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let (rx, ry) = (ranks(x), ranks(y));
    pearson(&rx, &ry)
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        idx[i..=j].iter().for_each(|&k| out[k] = rank);
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// A family of initial states for [`convergence_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Graph family; its size is replaced by each entry of `n_values`.
    pub graph: GraphSpec,
    pub n_values: Vec<usize>,
    pub samples_per_n: usize,
    pub w0: W0Spec,
    pub v0: V0Spec,
    /// Row `k` uses seed `base_seed + k`.
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub n: usize,
    /// `|V(0)|²`, the only positive eigenvalue of `V(0)V(0)ᵀ`.
    pub pos_eig: f64,
    pub iterations: usize,
    /// `None` when the row failed.
    pub stop_reason: Option<StopReason>,
    pub error: Option<String>,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Init(#[from] InitError),
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

fn sweep_row(
    spec: &SweepSpec,
    cfg: &SimConfig,
    n: usize,
    seed: u64,
) -> Result<SweepRow, InitError> {
    let lg = spec.graph.resized(n)?.build(seed)?;
    let v0 = spec.v0.build(&lg, seed)?;
    let g = lg.topology;
    let w0 = spec.w0.build(&v0, &g, seed)?;
    let pos_eig = v0.norm_squared();
    let row = |iterations, stop_reason, error| SweepRow {
        seed,
        n,
        pos_eig,
        iterations,
        stop_reason,
        error,
    };
    let s0 = SystemState::new(v0, w0).map_err(InitError::Dynamics)?;
    Ok(match simulate(&s0, &g, cfg) {
        Ok(t) => row(t.steps, Some(t.stop_reason), None),
        Err(DynamicsError::StepUnderflow { partial, .. }) => {
            row(partial.steps, None, Some("step underflow".to_string()))
        }
        Err(e) => row(0, None, Some(e.to_string())),
    })
}

/// Runs every `(n, sample)` pair of the family under `cfg` and records how
/// many steps it took to cross the threshold. Rows run in parallel on
/// `workers` threads (default: available parallelism) and come back in
/// `(n, sample)` order. Integration failures mark their row failed.
pub fn convergence_sweep(
    spec: &SweepSpec,
    cfg: &SimConfig,
    workers: Option<usize>,
) -> Result<Vec<SweepRow>, SweepError> {
    let jobs: Vec<(usize, u64)> = spec
        .n_values
        .iter()
        .flat_map(|&n| std::iter::repeat_n(n, spec.samples_per_n))
        .enumerate()
        .map(|(k, n)| (n, spec.base_seed + k as u64))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let rows: Result<Vec<SweepRow>, InitError> = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, seed)| sweep_row(spec, cfg, n, seed))
            .collect()
    });
    Ok(rows?)
}

/// CSV with columns `seed, n, pos_eig, iterations, stop_reason`; failed rows
/// carry `failed` as their stop reason.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "n", "pos_eig", "iterations", "stop_reason"])?;
    for r in rows {
        let reason = match r.stop_reason {
            Some(s) => serde_json::to_value(s)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
            None => "failed".to_string(),
        };
        w.write_record([
            r.seed.to_string(),
            r.n.to_string(),
            r.pos_eig.to_string(),
            r.iterations.to_string(),
            reason,
        ])?;
    }
    w.flush()?;
    Ok(())
}
