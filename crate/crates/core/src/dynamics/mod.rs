//! Time-steppers for the coupled opinion/tie system.
//!
//! State is `(V, W)` where `V` stacks the `m`-dimensional opinions of `n`
//! nodes and `W` is an `(n·m)×(n·m)` matrix whose `m×m` block `(i, j)` is the
//! tie from `i` to `j`. The dynamics are
//!
//! ```text
//! V_i' = a · Σ_{j∼i} W_ij V_j
//! W_ij' = b · V_i V_jᵀ        for i ∼ j
//! ```
//!
//! with `a = b = 1` giving the canonical system `V' = WV`, `W' = VVᵀ` on a
//! complete graph with self-loops. Blocks outside the graph never change and
//! never couple.

mod export;
pub mod graph;
mod ode;

use nalgebra::{DMatrix, DMatrixView, DVector, DVectorView};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use export::{trajectory_csv, trajectory_json, write_trajectory_csv};
pub use graph::{GraphError, GraphTopology};

use crate::spectral::{max_abs, SymmetricMatrix};
use ode::{Control, StepPolicy};

/// Opinion norm (and derivative norm) below which a run counts as collapsed.
pub const COLLAPSE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("state dimensions disagree: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("initial state has non-finite entries")]
    NonFinite,
    #[error("dissonance is defined only on graphs without self-loops")]
    SelfLoopPresent,
    #[error("step size underflow at t = {t} (blow-up time estimate)")]
    StepUnderflow { t: f64, partial: Box<Trajectory> },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl DynamicsError {
    /// The last valid trajectory when integration ran out of step size.
    pub fn partial_trajectory(&self) -> Option<&Trajectory> {
        match self {
            DynamicsError::StepUnderflow { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Some entry of `V` or `W` exceeded the blow-up threshold.
    Blowup,
    MaxSteps,
    /// `|V|` and `|V'|` both fell below [`COLLAPSE_TOL`].
    OpinionCollapse,
    /// Reached the requested end time.
    Horizon,
    /// The step floor was hit (continuous mode only); see
    /// [`DynamicsError::StepUnderflow`].
    Underflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mode: Mode,
    /// Opinion gain.
    pub a: f64,
    /// Tie gain.
    pub b: f64,
    /// Base (and maximum) step of the continuous integrator.
    pub dt: f64,
    pub blowup_threshold: f64,
    pub max_steps: usize,
    pub sample_every: usize,
    /// Largest accepted increase of `ln(1 + |V|² + ‖W‖²)` per step.
    pub growth_bound: f64,
    /// Optional end time for continuous runs.
    pub t_end: Option<f64>,
}

impl SimConfig {
    /// The iterated map with `a = b = 0.01`.
    pub fn discrete() -> Self {
        Self {
            mode: Mode::Discrete,
            a: 0.01,
            b: 0.01,
            dt: 1.0,
            blowup_threshold: 1e20,
            max_steps: 1_000_000,
            sample_every: 1,
            growth_bound: 0.1,
            t_end: None,
        }
    }

    /// The canonical ODE, RK4 with base step `1e-3`.
    pub fn continuous() -> Self {
        Self {
            mode: Mode::Continuous,
            a: 1.0,
            b: 1.0,
            dt: 1e-3,
            blowup_threshold: 1e20,
            max_steps: 10_000_000,
            sample_every: 1,
            growth_bound: 0.1,
            t_end: None,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: &str| Err(DynamicsError::InvalidConfig(msg.to_string()));
        if !(self.a > 0.0 && self.b > 0.0) {
            return bad("gains a and b must be positive");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.blowup_threshold > 1.0) {
            return bad("blow-up threshold must exceed 1");
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1");
        }
        if !(self.growth_bound > 0.0) {
            return bad("growth bound must be positive");
        }
        if let Some(end) = self.t_end {
            if !(end > 0.0) {
                return bad("t_end must be positive");
            }
        }
        Ok(())
    }
}

/// A snapshot `(t, V, W)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub t: f64,
    m: usize,
    pub v: DVector<f64>,
    pub w: DMatrix<f64>,
}

impl SystemState {
    /// Scalar opinions: `v` has length `n`, `w` is `n×n`.
    pub fn new(v: DVector<f64>, w: DMatrix<f64>) -> Result<Self, DynamicsError> {
        Self::with_blocks(1, v, w)
    }

    /// `m`-dimensional opinions stacked node by node.
    pub fn with_blocks(m: usize, v: DVector<f64>, w: DMatrix<f64>) -> Result<Self, DynamicsError> {
        let len = v.len();
        if m == 0 || len == 0 || !len.is_multiple_of(m) {
            return Err(DynamicsError::Dimension(format!(
                "opinion length {len} is not a positive multiple of m = {m}"
            )));
        }
        if w.nrows() != len || w.ncols() != len {
            return Err(DynamicsError::Dimension(format!(
                "tie matrix is {}x{}, expected {len}x{len}",
                w.nrows(),
                w.ncols()
            )));
        }
        Ok(Self { t: 0.0, m, v, w })
    }

    pub fn at(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn n(&self) -> usize {
        self.v.len() / self.m
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn opinion(&self, i: usize) -> DVectorView<'_, f64> {
        self.v.rows(i * self.m, self.m)
    }

    pub fn block(&self, i: usize, j: usize) -> DMatrixView<'_, f64> {
        self.w.view((i * self.m, j * self.m), (self.m, self.m))
    }

    pub fn is_finite(&self) -> bool {
        self.v.iter().chain(self.w.iter()).all(|x| x.is_finite())
    }

    /// Largest absolute entry across `V` and `W`.
    pub fn peak(&self) -> f64 {
        max_abs(&self.w).max(self.v.amax())
    }

    /// `max|w_ij − w_ji|`.
    pub fn asymmetry(&self) -> f64 {
        max_abs(&(&self.w - self.w.transpose()))
    }

    fn flatten(&self) -> Vec<f64> {
        self.v.iter().chain(self.w.iter()).copied().collect()
    }

    fn from_flat(t: f64, m: usize, y: &[f64]) -> Self {
        let len = flat_dim(y.len());
        Self {
            t,
            m,
            v: DVector::from_column_slice(&y[..len]),
            w: DMatrix::from_column_slice(len, len, &y[len..]),
        }
    }
}

/// Recovers `n·m` from the packed length `n·m + (n·m)²`.
fn flat_dim(total: usize) -> usize {
    let len = ((((4 * total + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    debug_assert_eq!(len + len * len, total);
    len
}

/// Per-sample scalar diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    pub t: f64,
    pub v_norm_sq: f64,
    pub vdot_norm_sq: f64,
    /// Smallest `w_ij·w_jk·w_ki` over the graph's triangles (scalar opinions
    /// only; `None` without triangles).
    pub min_triangle_product: Option<f64>,
    /// Rayleigh quotient `Vᵀ(WV)/|V|²`, an estimate of the eigenvalue of `W`
    /// that drives `V`.
    pub rayleigh: Option<f64>,
}

/// Ordered samples of a run plus why it stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<SystemState>,
    pub diagnostics: Vec<SampleDiagnostics>,
    pub stop_reason: StopReason,
    pub stop_time: f64,
    /// Accepted steps (iterations in discrete mode).
    pub steps: usize,
    pub a: f64,
    pub b: f64,
}

impl Trajectory {
    pub fn initial(&self) -> &SystemState {
        &self.samples[0]
    }

    pub fn last(&self) -> &SystemState {
        self.samples.last().expect("trajectory has samples")
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Calls `f(i, j)` for every ordered coupled pair, self-loops included when
/// the graph has them.
fn for_each_coupled_pair(g: &GraphTopology, mut f: impl FnMut(usize, usize)) {
    if g.self_loops() {
        for i in 0..g.n() {
            f(i, i);
        }
    }
    for &(i, j) in g.edges() {
        f(i, j);
        f(j, i);
    }
}

/// `Σ_{j∼i} W_ij V_j` for every node, written into `out`.
fn influence_into(v: &[f64], w: &[f64], g: &GraphTopology, m: usize, out: &mut [f64]) {
    let len = v.len();
    let wm = nalgebra::DMatrixView::from_slice(w, len, len);
    let vv = nalgebra::DVectorView::from_slice(v, len);
    let mut target = nalgebra::DVectorViewMut::from_slice(out, len);
    if g.is_complete() {
        target.gemv(1.0, &wm, &vv, 0.0);
        if !g.self_loops() {
            for i in 0..g.n() {
                for ra in 0..m {
                    let r = i * m + ra;
                    let mut own = 0.0;
                    for cb in 0..m {
                        own += w[(i * m + cb) * len + r] * v[i * m + cb];
                    }
                    target[r] -= own;
                }
            }
        }
        return;
    }
    target.fill(0.0);
    for_each_coupled_pair(g, |i, j| {
        for ra in 0..m {
            let r = i * m + ra;
            let mut acc = 0.0;
            for cb in 0..m {
                let c = j * m + cb;
                acc += w[c * len + r] * v[c];
            }
            target[r] += acc;
        }
    });
}

/// `Σ_{j∼i} W_ij V_j` for every node.
pub fn influence(s: &SystemState, g: &GraphTopology) -> DVector<f64> {
    let mut out = DVector::zeros(s.v.len());
    influence_into(s.v.as_slice(), s.w.as_slice(), g, s.m, out.as_mut_slice());
    out
}

fn field_into(y: &[f64], g: &GraphTopology, m: usize, a: f64, b: f64, dy: &mut [f64]) {
    let len = flat_dim(y.len());
    let (v, w) = y.split_at(len);
    let (dv, dw) = dy.split_at_mut(len);
    influence_into(v, w, g, m, dv);
    dv.iter_mut().for_each(|x| *x *= a);
    if g.is_complete() && g.self_loops() {
        for c in 0..len {
            let bc = b * v[c];
            for r in 0..len {
                dw[c * len + r] = v[r] * bc;
            }
        }
        return;
    }
    dw.fill(0.0);
    for_each_coupled_pair(g, |i, j| {
        for cb in 0..m {
            let c = j * m + cb;
            for ra in 0..m {
                let r = i * m + ra;
                dw[c * len + r] = b * v[r] * v[c];
            }
        }
    });
}

/// Right-hand side of the canonical (`a = b = 1`) system at `s`:
/// `(dV, dW)` with `dV_i = Σ_{j∼i} W_ij V_j` and `dW_ij = V_i V_jᵀ` on edges.
pub fn vector_field(s: &SystemState, g: &GraphTopology) -> (DVector<f64>, DMatrix<f64>) {
    let y = s.flatten();
    let mut dy = vec![0.0; y.len()];
    field_into(&y, g, s.m, 1.0, 1.0, &mut dy);
    let len = s.v.len();
    (
        DVector::from_column_slice(&dy[..len]),
        DMatrix::from_column_slice(len, len, &dy[len..]),
    )
}

fn check_graph(s: &SystemState, g: &GraphTopology) -> Result<(), DynamicsError> {
    if g.n() != s.n() {
        return Err(DynamicsError::Dimension(format!(
            "graph has {} nodes, state has {}",
            g.n(),
            s.n()
        )));
    }
    Ok(())
}

/// Smallest triangle product of a scalar tie matrix over `g`'s triangles.
pub fn min_triangle_product(w: &DMatrix<f64>, g: &GraphTopology) -> Option<f64> {
    let mut lowest: Option<f64> = None;
    g.for_each_triangle(|i, j, k| {
        let p = w[(i, j)] * w[(j, k)] * w[(k, i)];
        lowest = Some(lowest.map_or(p, |x: f64| x.min(p)));
    });
    lowest
}

fn diagnose(s: &SystemState, g: &GraphTopology, a: f64) -> SampleDiagnostics {
    let inf = influence(s, g);
    let v_norm_sq = s.v.norm_squared();
    SampleDiagnostics {
        t: s.t,
        v_norm_sq,
        vdot_norm_sq: a * a * inf.norm_squared(),
        min_triangle_product: if s.m == 1 {
            min_triangle_product(&s.w, g)
        } else {
            None
        },
        rayleigh: (v_norm_sq > 0.0).then(|| s.v.dot(&inf) / v_norm_sq),
    }
}

/// One step of the iterated map: `V ← V + a·(WV)`, `W_ij ← W_ij + b·V_iV_jᵀ`
/// on coupled pairs, both driven by the old `V`.
pub fn discrete_step(s: &SystemState, g: &GraphTopology, a: f64, b: f64) -> SystemState {
    let mut next = s.clone();
    discrete_step_in_place(&mut next, g, a, b);
    next
}

fn discrete_step_in_place(s: &mut SystemState, g: &GraphTopology, a: f64, b: f64) {
    let inf = influence(s, g);
    let m = s.m;
    let old = s.v.clone();
    for_each_coupled_pair(g, |i, j| {
        for ra in 0..m {
            for cb in 0..m {
                s.w[(i * m + ra, j * m + cb)] += b * old[i * m + ra] * old[j * m + cb];
            }
        }
    });
    s.v.axpy(a, &inf, 1.0);
    s.t += 1.0;
}

/// Runs either mode according to `cfg.mode`.
pub fn simulate(
    s0: &SystemState,
    g: &GraphTopology,
    cfg: &SimConfig,
) -> Result<Trajectory, DynamicsError> {
    match cfg.mode {
        Mode::Discrete => run_discrete(s0, g, cfg),
        Mode::Continuous => integrate(s0, g, cfg),
    }
}

/// Iterates [`discrete_step`] until an entry exceeds the threshold, opinions
/// collapse, or `max_steps` is reached. Sample times are iteration counts.
pub fn run_discrete(
    s0: &SystemState,
    g: &GraphTopology,
    cfg: &SimConfig,
) -> Result<Trajectory, DynamicsError> {
    cfg.validate()?;
    check_graph(s0, g)?;
    if !s0.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    let mut state = s0.clone();
    let mut samples = vec![state.clone()];
    let mut diagnostics = vec![diagnose(&state, g, cfg.a)];
    let watch_collapse = s0.v.norm() >= COLLAPSE_TOL;
    let mut steps = 0;
    let mut reason = if state.peak() > cfg.blowup_threshold {
        Some(StopReason::Blowup)
    } else {
        None
    };

    while reason.is_none() {
        if steps >= cfg.max_steps {
            reason = Some(StopReason::MaxSteps);
            break;
        }
        let previous = state.v.clone();
        discrete_step_in_place(&mut state, g, cfg.a, cfg.b);
        steps += 1;
        if state.peak() > cfg.blowup_threshold {
            reason = Some(StopReason::Blowup);
        } else if watch_collapse
            && state.v.norm() < COLLAPSE_TOL
            && (&state.v - previous).norm() < COLLAPSE_TOL
        {
            reason = Some(StopReason::OpinionCollapse);
        }
        if reason.is_some() || steps % cfg.sample_every == 0 {
            samples.push(state.clone());
            diagnostics.push(diagnose(&state, g, cfg.a));
        }
    }
    Ok(Trajectory {
        stop_time: state.t,
        samples,
        diagnostics,
        stop_reason: reason.expect("loop exits with a reason"),
        steps,
        a: cfg.a,
        b: cfg.b,
    })
}

/// Integrates the coupled ODE with RK4 and growth-keyed step halving.
///
/// Stops with [`StopReason::Blowup`] once any entry exceeds
/// `cfg.blowup_threshold`, with [`StopReason::OpinionCollapse`] when both
/// `|V|` and `|V'|` drop below [`COLLAPSE_TOL`] (only for runs that start
/// away from the fixed point `V = 0`), or at `t_end`/`max_steps`.
pub fn integrate(
    s0: &SystemState,
    g: &GraphTopology,
    cfg: &SimConfig,
) -> Result<Trajectory, DynamicsError> {
    cfg.validate()?;
    if cfg.mode != Mode::Continuous {
        return Err(DynamicsError::InvalidConfig(
            "integrate requires continuous mode".into(),
        ));
    }
    check_graph(s0, g)?;
    if !s0.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    let m = s0.m;
    let len = s0.v.len();
    let mut samples = vec![s0.clone()];
    let mut diagnostics = vec![diagnose(s0, g, cfg.a)];
    if s0.peak() > cfg.blowup_threshold {
        return Ok(Trajectory {
            samples,
            diagnostics,
            stop_reason: StopReason::Blowup,
            stop_time: s0.t,
            steps: 0,
            a: cfg.a,
            b: cfg.b,
        });
    }
    let watch_collapse = s0.v.norm() >= COLLAPSE_TOL;
    let policy = StepPolicy {
        dt: cfg.dt,
        growth_bound: cfg.growth_bound,
        t_end: cfg.t_end.map(|end| s0.t + end),
        max_steps: cfg.max_steps,
    };
    let (a, b) = (cfg.a, cfg.b);
    let rhs = |y: &[f64], dy: &mut [f64]| field_into(y, g, m, a, b, dy);
    let mut scratch = vec![0.0; len];

    let outcome = ode::drive(s0.flatten(), s0.t, &policy, rhs, |t, y, steps| {
        let peak = y.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        let mut stop = None;
        if peak > cfg.blowup_threshold {
            stop = Some(StopReason::Blowup);
        } else if watch_collapse {
            let v = &y[..len];
            if v.iter().map(|x| x * x).sum::<f64>().sqrt() < COLLAPSE_TOL {
                influence_into(v, &y[len..], g, m, &mut scratch);
                let vdot = a * scratch.iter().map(|x| x * x).sum::<f64>().sqrt();
                if vdot < COLLAPSE_TOL {
                    stop = Some(StopReason::OpinionCollapse);
                }
            }
        }
        if stop.is_some() || steps % cfg.sample_every == 0 {
            // Close to blow-up the step drops below one ulp of t; keep the
            // newest state for a repeated time stamp.
            if samples.last().is_some_and(|last| last.t >= t) {
                samples.pop();
                diagnostics.pop();
            }
            let s = SystemState::from_flat(t, m, y);
            diagnostics.push(diagnose(&s, g, a));
            samples.push(s);
        }
        match stop {
            Some(reason) => Control::Stop(reason),
            None => Control::Continue,
        }
    });

    let finish = |t: f64,
                  y: &[f64],
                  reason: StopReason,
                  steps: usize,
                  mut samples: Vec<SystemState>,
                  mut diagnostics: Vec<SampleDiagnostics>| {
        let s = SystemState::from_flat(t, m, y);
        if samples.last() != Some(&s) {
            if samples.last().is_some_and(|last| last.t >= t) && samples.len() > 1 {
                samples.pop();
                diagnostics.pop();
            }
            diagnostics.push(diagnose(&s, g, a));
            samples.push(s);
        }
        Trajectory {
            samples,
            diagnostics,
            stop_reason: reason,
            stop_time: t,
            steps,
            a,
            b,
        }
    };

    match outcome {
        Ok(done) => Ok(finish(
            done.t,
            &done.y,
            done.reason,
            done.steps,
            samples,
            diagnostics,
        )),
        Err(under) => {
            let partial = finish(
                under.t,
                &under.y,
                StopReason::Underflow,
                under.steps,
                samples,
                diagnostics,
            );
            Err(DynamicsError::StepUnderflow {
                t: under.t,
                partial: Box::new(partial),
            })
        }
    }
}

/// Samples of the second-order opinion equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionTrajectory {
    pub times: Vec<f64>,
    pub v: Vec<DVector<f64>>,
    pub vdot: Vec<DVector<f64>>,
    pub stop_reason: StopReason,
    pub stop_time: f64,
}

/// Integrates `V'' = 2|V|²V − CV` as a first-order system in `(V, V')` with
/// the same RK4 policy as [`integrate`]. Stops at `t_end`, or with
/// [`StopReason::Blowup`] once `max|V|` exceeds `threshold`.
pub fn opinion_ode_integrate(
    v0: &DVector<f64>,
    v0dot: &DVector<f64>,
    c: &SymmetricMatrix,
    dt: f64,
    t_end: f64,
    threshold: f64,
) -> Result<OpinionTrajectory, DynamicsError> {
    let n = v0.len();
    if v0dot.len() != n || c.dim() != n {
        return Err(DynamicsError::Dimension(format!(
            "v0 has length {n}, v0dot {}, c is {}x{}",
            v0dot.len(),
            c.dim(),
            c.dim()
        )));
    }
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(DynamicsError::InvalidConfig(
            "dt and t_end must be positive".into(),
        ));
    }
    let policy = StepPolicy {
        dt,
        growth_bound: 0.1,
        t_end: Some(t_end),
        max_steps: usize::MAX,
    };
    let cm = c.as_matrix();
    let rhs = |y: &[f64], dy: &mut [f64]| {
        let (v, p) = y.split_at(n);
        let norm_sq: f64 = v.iter().map(|x| x * x).sum();
        dy[..n].copy_from_slice(p);
        for i in 0..n {
            let cv: f64 = (0..n).map(|j| cm[(i, j)] * v[j]).sum();
            dy[n + i] = 2.0 * norm_sq * v[i] - cv;
        }
    };
    let mut times = vec![0.0];
    let mut vs = vec![v0.clone()];
    let mut vdots = vec![v0dot.clone()];
    let y0: Vec<f64> = v0.iter().chain(v0dot.iter()).copied().collect();
    let outcome = ode::drive(y0, 0.0, &policy, rhs, |t, y, _| {
        times.push(t);
        vs.push(DVector::from_column_slice(&y[..n]));
        vdots.push(DVector::from_column_slice(&y[n..]));
        if y[..n].iter().any(|x| x.abs() > threshold) {
            Control::Stop(StopReason::Blowup)
        } else {
            Control::Continue
        }
    });
    match outcome {
        Ok(done) => Ok(OpinionTrajectory {
            times,
            v: vs,
            vdot: vdots,
            stop_reason: done.reason,
            stop_time: done.t,
        }),
        Err(under) => Err(DynamicsError::StepUnderflow {
            t: under.t,
            partial: Box::new(Trajectory {
                samples: Vec::new(),
                diagnostics: Vec::new(),
                stop_reason: StopReason::Underflow,
                stop_time: under.t,
                steps: under.steps,
                a: 1.0,
                b: 1.0,
            }),
        }),
    }
}

/// Dissonance `F(V, W) = ½ Σ_{i∼j} V_iᵀ W_ij V_j`, summed over ordered pairs
/// of adjacent nodes.
pub fn dissonance(s: &SystemState, g: &GraphTopology) -> Result<f64, DynamicsError> {
    if g.self_loops() {
        return Err(DynamicsError::SelfLoopPresent);
    }
    check_graph(s, g)?;
    let mut total = 0.0;
    for_each_coupled_pair(g, |i, j| {
        total += (s.opinion(i).transpose() * s.block(i, j) * s.opinion(j))[(0, 0)];
    });
    Ok(0.5 * total)
}

/// `‖VVᵀ − W² − C‖_max`; zero along exact trajectories of the canonical
/// complete-graph system with symmetric `W`.
pub fn riccati_residual(s: &SystemState, c: &SymmetricMatrix) -> f64 {
    max_abs(&(&s.v * s.v.transpose() - &s.w * &s.w - c.as_matrix()))
}

#[cfg(test)]
mod tests;
