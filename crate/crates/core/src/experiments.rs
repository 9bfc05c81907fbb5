//! Reproducible experiment recipes: initial-state families, the simulate and
//! community-detection pipelines, and the invariant battery.
//!
//! Randomness for a run with seed `s` is split into independent streams, one
//! per purpose: `Pcg64::seed_from_u64(s ^ tag·0x9E3779B97F4A7C15)` with tag
//! 1 for the graph, 2 for `V(0)`, 3 for `W(0)`, 4 for seed selection and 5
//! for the battery's conjugating matrix.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::lambda_coordinates;
use crate::balance::{
    check_balance, classify, default_eps, partition, positive_components, BalanceReport,
    OutcomeClass, Partition, COMPONENT_EPS,
};
use crate::dynamics::{
    simulate, DynamicsError, GraphTopology, Mode, SimConfig, StopReason, SystemState, Trajectory,
};
use crate::graphio::{
    accuracy, erdos_renyi, load_edge_list, seed_opinions, watts_strogatz, Accuracy, GraphIoError,
    LabeledGraph, LoadOptions, SeedAssignment,
};
use crate::spectral::{is_eigenvector, max_abs, SymmetricMatrix};

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Stream {
    Graph = 1,
    Opinions = 2,
    Ties = 3,
    Seeds = 4,
    Conjugation = 5,
}

fn substream(seed: u64, stream: Stream) -> Pcg64 {
    Pcg64::seed_from_u64(seed ^ (stream as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[derive(Debug, Error)]
pub enum InitError {
    #[error(transparent)]
    Graph(#[from] GraphIoError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Complete {
        n: usize,
        #[serde(default)]
        self_loops: bool,
    },
    ErdosRenyi {
        n: usize,
        p: f64,
    },
    WattsStrogatz {
        n: usize,
        k: usize,
        p: f64,
    },
    EdgeList {
        path: PathBuf,
        #[serde(default)]
        options: LoadOptions,
    },
}

impl GraphSpec {
    /// The same family at size `n`. Edge lists have a fixed size.
    pub fn resized(&self, n: usize) -> Result<Self, InitError> {
        let mut out = self.clone();
        match &mut out {
            GraphSpec::Complete { n: m, .. }
            | GraphSpec::ErdosRenyi { n: m, .. }
            | GraphSpec::WattsStrogatz { n: m, .. } => *m = n,
            GraphSpec::EdgeList { .. } => {
                return Err(InitError::Invalid(
                    "an edge-list graph cannot be resized".into(),
                ))
            }
        }
        Ok(out)
    }

    pub fn build(&self, seed: u64) -> Result<LabeledGraph, InitError> {
        let graph_seed = substream(seed, Stream::Graph).random();
        let topology = match self {
            GraphSpec::Complete { n, self_loops } => {
                if *n == 0 {
                    return Err(InitError::Invalid("graph needs at least one node".into()));
                }
                GraphTopology::complete(*n, *self_loops)
            }
            GraphSpec::ErdosRenyi { n, p } => erdos_renyi(*n, *p, graph_seed)?,
            GraphSpec::WattsStrogatz { n, k, p } => watts_strogatz(*n, *k, *p, graph_seed)?,
            GraphSpec::EdgeList { path, options } => return Ok(load_edge_list(path, options)?),
        };
        let n = topology.n();
        Ok(LabeledGraph {
            topology,
            labels: None,
            names: None,
            ids: (0..n as i64).collect(),
        })
    }
}

/// Initial opinions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum V0Spec {
    Zero,
    /// Entries uniform in `(−range, range)`.
    Uniform {
        range: f64,
    },
    /// A uniform direction in `(−1, 1)ⁿ` rescaled so that `|V(0)|² = value`.
    NormSq {
        value: f64,
    },
    Values {
        values: Vec<f64>,
    },
    /// A JSON array, or numbers separated by commas, whitespace or newlines.
    File {
        path: PathBuf,
    },
    /// Ground-truth seeding, see [`seed_opinions`]. `explicit` maps original
    /// node ids to opinions and overrides `fraction`.
    Seeds {
        fraction: f64,
        #[serde(default, deserialize_with = "id_keyed")]
        explicit: Option<BTreeMap<i64, f64>>,
    },
}

impl V0Spec {
    pub fn build(&self, g: &LabeledGraph, seed: u64) -> Result<DVector<f64>, InitError> {
        Ok(self.build_seeded(g, seed)?.0)
    }

    fn build_seeded(
        &self,
        g: &LabeledGraph,
        seed: u64,
    ) -> Result<(DVector<f64>, Option<SeedAssignment>), InitError> {
        let n = g.n();
        let mut rng = substream(seed, Stream::Opinions);
        let v = match self {
            V0Spec::Zero => DVector::zeros(n),
            V0Spec::Uniform { range } => uniform_vector(&mut rng, n, *range)?,
            V0Spec::NormSq { value } => {
                if !(*value >= 0.0) {
                    return Err(InitError::Invalid("|V(0)|² must be non-negative".into()));
                }
                let dir = uniform_vector(&mut rng, n, 1.0)?;
                dir.normalize() * value.sqrt()
            }
            V0Spec::Values { values } => {
                if values.len() != n {
                    return Err(InitError::Invalid(format!(
                        "V(0) has {} values for {n} nodes",
                        values.len()
                    )));
                }
                DVector::from_column_slice(values)
            }
            V0Spec::File { path } => {
                let values: Vec<f64> = read_rows(path)?.into_iter().flatten().collect();
                return V0Spec::Values { values }.build_seeded(g, seed);
            }
            V0Spec::Seeds { fraction, explicit } => {
                let rng_seed = substream(seed, Stream::Seeds).random();
                let s = seed_opinions(g, *fraction, rng_seed, explicit.as_ref())?;
                return Ok((s.v0.clone(), Some(s)));
            }
        };
        Ok((v, None))
    }
}

/// Rows of numbers from a JSON file (`[..]` or `[[..], ..]`) or a plain
/// text file with one row per line.
fn read_rows(path: &std::path::Path) -> Result<Vec<Vec<f64>>, InitError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InitError::Invalid(format!("{}: {e}", path.display())))?;
    let bad = |what: String| InitError::Invalid(format!("{}: {what}", path.display()));
    if text.trim_start().starts_with('[') {
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        return match serde_json::from_value::<Vec<Vec<f64>>>(value.clone()) {
            Ok(rows) => Ok(rows),
            Err(_) => serde_json::from_value::<Vec<f64>>(value)
                .map(|row| vec![row])
                .map_err(|e| bad(e.to_string())),
        };
    }
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| bad(format!("not a number: {t:?}")))
                })
                .collect()
        })
        .collect()
}

/// Reads a map keyed by node id. Keys arrive as strings from both JSON
/// and TOML, so they are parsed here.
fn id_keyed<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> Result<Option<BTreeMap<i64, f64>>, D::Error> {
    let raw: Option<BTreeMap<String, f64>> = Option::deserialize(d)?;
    raw.map(|m| {
        m.into_iter()
            .map(|(k, v)| {
                k.trim().parse::<i64>().map(|id| (id, v)).map_err(|_| {
                    serde::de::Error::custom(format!("node id `{k}` is not an integer"))
                })
            })
            .collect()
    })
    .transpose()
}

fn uniform_vector(rng: &mut Pcg64, n: usize, range: f64) -> Result<DVector<f64>, InitError> {
    if !(range > 0.0 && range.is_finite()) {
        return Err(InitError::Invalid("range must be positive".into()));
    }
    Ok(DVector::from_fn(n, |_, _| rng.random_range(-range..range)))
}

/// Initial ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum W0Spec {
    Zero,
    Identity,
    ScaledIdentity {
        c: f64,
    },
    /// `V(0)V(0)ᵀ`.
    RankOne,
    /// Symmetric with entries uniform in `(−range, range)`.
    RandomSymmetric {
        range: f64,
    },
    /// Independent entries uniform in `(−range, range)`.
    Random {
        range: f64,
    },
    /// `value` on every edge of the graph, 0 elsewhere.
    EdgeConstant {
        value: f64,
    },
    /// Row-major rows.
    Values {
        rows: Vec<Vec<f64>>,
    },
    /// A JSON array of rows, or one row per line with entries separated by
    /// commas or whitespace.
    File {
        path: PathBuf,
    },
}

impl W0Spec {
    pub fn build(
        &self,
        v0: &DVector<f64>,
        g: &GraphTopology,
        seed: u64,
    ) -> Result<DMatrix<f64>, InitError> {
        let n = v0.len();
        let mut rng = substream(seed, Stream::Ties);
        let uniform = |rng: &mut Pcg64, range: f64| -> Result<DMatrix<f64>, InitError> {
            if !(range > 0.0 && range.is_finite()) {
                return Err(InitError::Invalid("range must be positive".into()));
            }
            Ok(DMatrix::from_fn(n, n, |_, _| {
                rng.random_range(-range..range)
            }))
        };
        Ok(match self {
            W0Spec::Zero => DMatrix::zeros(n, n),
            W0Spec::Identity => DMatrix::identity(n, n),
            W0Spec::ScaledIdentity { c } => DMatrix::identity(n, n) * *c,
            W0Spec::RankOne => v0 * v0.transpose(),
            W0Spec::RandomSymmetric { range } => {
                let m = uniform(&mut rng, *range)?;
                DMatrix::from_fn(n, n, |i, j| if i <= j { m[(i, j)] } else { m[(j, i)] })
            }
            W0Spec::Random { range } => uniform(&mut rng, *range)?,
            W0Spec::EdgeConstant { value } => {
                let mut w = DMatrix::zeros(n, n);
                for &(i, j) in g.edges() {
                    w[(i, j)] = *value;
                    w[(j, i)] = *value;
                }
                if g.self_loops() {
                    w.fill_diagonal(*value);
                }
                w
            }
            W0Spec::Values { rows } => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(InitError::Invalid(format!("W(0) must be {n}x{n}")));
                }
                DMatrix::from_fn(n, n, |i, j| rows[i][j])
            }
            W0Spec::File { path } => {
                return W0Spec::Values {
                    rows: read_rows(path)?,
                }
                .build(v0, g, seed);
            }
        })
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub graph: GraphSpec,
    pub w0: W0Spec,
    pub v0: V0Spec,
    pub sim: SimConfig,
    pub seed: u64,
    /// Sign dead zone; defaults to `1e-9·max|W|` of the final sample.
    pub eps: Option<f64>,
}

/// The graph and initial state a spec describes.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub graph: LabeledGraph,
    pub state: SystemState,
    pub seeds: Option<SeedAssignment>,
}

pub fn prepare(spec: &RunSpec) -> Result<Prepared, InitError> {
    let graph = spec.graph.build(spec.seed)?;
    let (v0, seeds) = spec.v0.build_seeded(&graph, spec.seed)?;
    let w0 = spec.w0.build(&v0, &graph.topology, spec.seed)?;
    let state = SystemState::new(v0, w0)?;
    Ok(Prepared {
        graph,
        state,
        seeds,
    })
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Init(#[from] InitError),
    #[error("step size underflow at t = {t} before the threshold was crossed")]
    Underflow { t: f64, partial: Box<Trajectory> },
    #[error(transparent)]
    Dynamics(DynamicsError),
}

impl From<DynamicsError> for RunError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::StepUnderflow { t, partial } => RunError::Underflow { t, partial },
            other => RunError::Dynamics(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub trajectory: Trajectory,
    pub graph: LabeledGraph,
    pub outcome: OutcomeClass,
    pub balance: Option<BalanceReport>,
    /// Leading-eigenvector camps of the final (symmetrized) `W`.
    pub partition: Option<Partition>,
    pub seeds: Option<SeedAssignment>,
    /// Flip-invariant recovery of the labels, over non-isolated nodes.
    pub accuracy: Option<Accuracy>,
}

fn last_finite(traj: &Trajectory) -> &SystemState {
    traj.samples
        .iter()
        .rev()
        .find(|s| s.is_finite())
        .unwrap_or_else(|| traj.initial())
}

/// Builds the initial state, runs it, and analyses the final sample.
pub fn run(spec: &RunSpec) -> Result<RunReport, RunError> {
    let prepared = prepare(spec)?;
    let g = &prepared.graph.topology;
    let trajectory = simulate(&prepared.state, g, &spec.sim)?;
    let outcome = classify(&trajectory, g, spec.eps);
    let last = last_finite(&trajectory);
    let (balance, part) = if last.m() == 1 {
        let eps = spec.eps.unwrap_or_else(|| default_eps(&last.w));
        let sym = SymmetricMatrix::new(last.w.clone()).expect("square tie matrix");
        (
            Some(check_balance(&last.w, g, eps)),
            Some(partition(&sym, COMPONENT_EPS)),
        )
    } else {
        (None, None)
    };
    let accuracy = match &prepared.graph.labels {
        Some(labels) if last.m() == 1 => {
            let mask: Vec<bool> = (0..g.n()).map(|i| g.degree(i) > 0).collect();
            accuracy(&last.v, labels, Some(&mask)).ok()
        }
        _ => None,
    };
    Ok(RunReport {
        trajectory,
        graph: prepared.graph,
        outcome,
        balance,
        partition: part,
        seeds: prepared.seeds,
        accuracy,
    })
}

/// Result of planting seeds on a labelled graph and letting the ties evolve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityReport {
    pub seed: u64,
    pub stop_reason: StopReason,
    pub steps: usize,
    /// Components once negative ties are removed.
    pub communities: Vec<Vec<usize>>,
    /// `sign(v_i)` of the final opinions.
    pub final_signs: Vec<i8>,
    pub seeded: Vec<usize>,
    pub accuracy: Option<Accuracy>,
    pub outcome: OutcomeClass,
}

/// Runs `spec` keeping only the first and last samples, then reads the
/// communities off the final ties.
pub fn communities(spec: &RunSpec) -> Result<CommunityReport, RunError> {
    let mut spec = spec.clone();
    spec.sim.sample_every = usize::MAX;
    let report = run(&spec)?;
    let last = last_finite(&report.trajectory);
    let g = &report.graph.topology;
    let eps = spec.eps.unwrap_or_else(|| default_eps(&last.w));
    Ok(CommunityReport {
        seed: spec.seed,
        stop_reason: report.trajectory.stop_reason,
        steps: report.trajectory.steps,
        communities: positive_components(&last.w, g, eps),
        final_signs: last
            .v
            .iter()
            .map(|&x| crate::balance::sign_with_dead_zone(x, 0.0))
            .collect(),
        seeded: report.seeds.map(|s| s.seeded).unwrap_or_default(),
        accuracy: report.accuracy,
        outcome: report.outcome,
    })
}

/// [`communities`] once per seed, in parallel on `workers` threads.
pub fn communities_repeated(
    spec: &RunSpec,
    seeds: &[u64],
    workers: Option<usize>,
) -> Result<Vec<CommunityReport>, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Init(InitError::Invalid(e.to_string())))?;
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                communities(&RunSpec {
                    seed,
                    ..spec.clone()
                })
            })
            .collect()
    })
}

/// Names of the invariant battery's checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Symmetry,
    Conjugation,
    EnergyIdentity,
    Convexity,
    RiccatiResidual,
    Parseval,
    EigenvectorPersistence,
}

impl CheckName {
    pub const ALL: [CheckName; 7] = [
        CheckName::Symmetry,
        CheckName::Conjugation,
        CheckName::EnergyIdentity,
        CheckName::Convexity,
        CheckName::RiccatiResidual,
        CheckName::Parseval,
        CheckName::EigenvectorPersistence,
    ];

    /// Documented pass threshold of each check.
    pub fn tolerance(self) -> f64 {
        match self {
            CheckName::Symmetry => 1e-9,
            CheckName::Conjugation => 1e-7,
            CheckName::EnergyIdentity => 1e-6,
            CheckName::Convexity => 0.05,
            CheckName::RiccatiResidual => 1e-6,
            CheckName::Parseval => 1e-9,
            CheckName::EigenvectorPersistence => 1e-6,
        }
    }

    fn needs_symmetric_w0(self) -> bool {
        !matches!(self, CheckName::Conjugation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: CheckName,
    pub status: CheckStatus,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySpec {
    pub run: RunSpec,
    /// Checks to run; empty means all.
    #[serde(default)]
    pub checks: Vec<CheckName>,
    /// End time of the battery's run.
    pub horizon: f64,
    /// Blow-up threshold of the battery's run, kept well below the
    /// simulation default so that residuals stay in a measurable range.
    pub threshold: f64,
    /// Adds a symmetric perturbation of this size to `W` halfway through,
    /// which must break the conserved quantity.
    #[serde(default)]
    pub perturb: Option<f64>,
}

impl VerifySpec {
    pub fn new(run: RunSpec) -> Self {
        Self {
            run,
            checks: Vec::new(),
            horizon: 2.0,
            threshold: 1e6,
            perturb: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    pub stop_reason: StopReason,
    pub stop_time: f64,
    pub samples: usize,
}

fn battery_config(spec: &VerifySpec, horizon: f64) -> SimConfig {
    SimConfig {
        t_end: (spec.run.sim.mode == Mode::Continuous).then_some(horizon),
        max_steps: match spec.run.sim.mode {
            Mode::Continuous => spec.run.sim.max_steps,
            Mode::Discrete => horizon.ceil() as usize,
        },
        blowup_threshold: spec.threshold,
        sample_every: 1,
        ..spec.run.sim.clone()
    }
}

/// Runs `s0` to the battery horizon, optionally perturbing `W` halfway.
fn battery_trajectory(
    spec: &VerifySpec,
    s0: &SystemState,
    g: &GraphTopology,
) -> Result<Trajectory, RunError> {
    let Some(size) = spec.perturb else {
        return Ok(simulate(s0, g, &battery_config(spec, spec.horizon))?);
    };
    let half = 0.5 * spec.horizon;
    let mut first = simulate(s0, g, &battery_config(spec, half))?;
    let mut mid = first.last().clone();
    let n = mid.w.nrows();
    let mut rng = substream(spec.run.seed, Stream::Conjugation);
    let e = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    mid.w += (&e + e.transpose()) * (0.5 * size);
    let second = simulate(&mid, g, &battery_config(spec, spec.horizon - half))?;
    first.samples.extend(second.samples.into_iter().skip(1));
    first
        .diagnostics
        .extend(second.diagnostics.into_iter().skip(1));
    first.stop_reason = second.stop_reason;
    first.stop_time = second.stop_time;
    first.steps += second.steps;
    Ok(first)
}

/// A node relabelling (or, for the complete graph with self-loops, any
/// orthogonal map) under which the dynamics are equivariant.
fn conjugator(g: &GraphTopology, m: usize, seed: u64) -> Option<DMatrix<f64>> {
    let n = g.n();
    let mut rng = substream(seed, Stream::Conjugation);
    let q = if g.is_complete() && g.self_loops() {
        DMatrix::from_fn(n * m, n * m, |_, _| rng.random_range(-1.0..1.0))
            .qr()
            .q()
    } else if g.is_complete() {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        DMatrix::from_fn(n, n, |i, j| if perm[i] == j { 1.0 } else { 0.0 })
            .kronecker(&DMatrix::identity(m, m))
    } else {
        return None;
    };
    Some(q)
}

fn relative(diff: f64, scale: f64) -> f64 {
    diff / (1.0 + scale)
}

/// Centred second difference. Triples straddling a step-size change are
/// refused: the uneven stencil is only first order.
fn centred_second(t: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let (h0, h1) = (t[1] - t[0], t[2] - t[1]);
    let even = (h1 - h0).abs() <= 1e-6 * h0.max(h1);
    (h0 > 0.0 && h1 > 0.0 && even)
        .then(|| 2.0 * (y[0] / (h0 * (h0 + h1)) - y[1] / (h0 * h1) + y[2] / (h1 * (h0 + h1))))
}

/// Runs the invariant battery: symmetry preservation, conjugation
/// equivariance, the energy identity `|V'|² = ab(|V|⁴ − VᵀCV)`, convexity
/// of `|V|²` with `(|V|²)'' = 4|V'|² + 2ab|V|⁴`, the conserved
/// `C = VVᵀ − (a/b)W²`, Parseval for λ-coordinates, and persistence of an
/// eigenvector start. Checks whose hypotheses do not hold are skipped with
/// a note.
pub fn verify(spec: &VerifySpec) -> Result<VerifyReport, RunError> {
    let prepared = prepare(&spec.run)?;
    let g = &prepared.graph.topology;
    let s0 = &prepared.state;
    let traj = battery_trajectory(spec, s0, g)?;
    let (a, b) = (spec.run.sim.a, spec.run.sim.b);
    let kappa = a / b;
    let symmetric_w0 = s0.asymmetry() == 0.0;
    let canonical = g.is_complete() && g.self_loops() && s0.m() == 1;
    let continuous = spec.run.sim.mode == Mode::Continuous;
    let c = SymmetricMatrix::new(&s0.v * s0.v.transpose() - &s0.w * &s0.w * kappa)
        .expect("square matrix");
    let requested: Vec<CheckName> = if spec.checks.is_empty() {
        CheckName::ALL.to_vec()
    } else {
        spec.checks.clone()
    };

    let mut checks = Vec::new();
    for name in requested {
        let tolerance = name.tolerance();
        let skip = |note: &str| CheckResult {
            name,
            status: CheckStatus::Skipped,
            residual: None,
            tolerance,
            note: Some(note.to_string()),
        };
        if name.needs_symmetric_w0() && !symmetric_w0 {
            checks.push(skip(
                "W(0) is not symmetric; this check assumes a symmetric start",
            ));
            continue;
        }
        let needs_canonical = matches!(
            name,
            CheckName::EnergyIdentity
                | CheckName::Convexity
                | CheckName::RiccatiResidual
                | CheckName::Parseval
        );
        if needs_canonical && !(canonical && continuous) {
            checks.push(skip(
                "identity holds for the continuous system on the complete graph with self-loops and scalar opinions",
            ));
            continue;
        }
        let measured: Result<f64, String> = match name {
            CheckName::Symmetry => Ok(traj
                .samples
                .iter()
                .map(|s| relative(s.asymmetry(), s.peak()))
                .fold(0.0, f64::max)),
            CheckName::Conjugation => conjugation_residual(spec, s0, g, &traj),
            CheckName::EnergyIdentity => Ok(traj
                .samples
                .iter()
                .map(|s| {
                    let vdot = &s.w * &s.v * a;
                    let v2 = s.v.norm_squared();
                    let vcv = s.v.dot(&(c.as_matrix() * &s.v));
                    let lhs = vdot.norm_squared();
                    let rhs = a * b * (v2 * v2 - vcv);
                    (lhs - rhs).abs() / (lhs + a * b * (v2 * v2 + vcv.abs()) + f64::MIN_POSITIVE)
                })
                .fold(0.0, f64::max)),
            CheckName::Convexity => convexity_residual(&traj, a, b),
            CheckName::RiccatiResidual => Ok(traj
                .samples
                .iter()
                .map(|s| {
                    let vv = &s.v * s.v.transpose();
                    let w2 = &s.w * &s.w * kappa;
                    let diff = max_abs(&(&vv - &w2 - c.as_matrix()));
                    diff / (1.0 + max_abs(&vv) + max_abs(&w2))
                })
                .fold(0.0, f64::max)),
            CheckName::Parseval => lambda_coordinates(&traj, &c)
                .map(|lt| lt.parseval_defect)
                .map_err(|e| e.to_string()),
            CheckName::EigenvectorPersistence => {
                if s0.v.norm() == 0.0 {
                    checks.push(skip("V(0) = 0"));
                    continue;
                }
                match is_eigenvector(&s0.w, &s0.v, tolerance) {
                    Ok((true, _)) => {}
                    _ => {
                        checks.push(skip("V(0) is not an eigenvector of W(0)"));
                        continue;
                    }
                }
                Ok(traj
                    .samples
                    .iter()
                    .filter(|s| s.v.norm() > 0.0)
                    .map(|s| {
                        let alpha = s.v.dot(&(&s.w * &s.v)) / s.v.norm_squared();
                        (&s.w * &s.v - &s.v * alpha).norm() / s.v.norm()
                    })
                    .fold(0.0, f64::max))
            }
        };
        checks.push(match measured {
            Ok(r) => CheckResult {
                name,
                status: if r <= tolerance {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                residual: Some(r),
                tolerance,
                note: None,
            },
            Err(note) if note.is_empty() => skip("not applicable"),
            Err(note) => CheckResult {
                name,
                status: CheckStatus::Skipped,
                residual: None,
                tolerance,
                note: Some(note),
            },
        });
    }
    Ok(VerifyReport {
        passed: checks.iter().all(|c| c.status != CheckStatus::Fail),
        checks,
        stop_reason: traj.stop_reason,
        stop_time: traj.stop_time,
        samples: traj.len(),
    })
}

/// Runs `(QV₀, QW₀Qᵀ)` and the original start to a common horizon short of
/// the battery run's stop, and compares `Q·V(t)` and `Q·W(t)·Qᵀ`.
fn conjugation_residual(
    spec: &VerifySpec,
    s0: &SystemState,
    g: &GraphTopology,
    battery: &Trajectory,
) -> Result<f64, String> {
    let q = conjugator(g, s0.m(), spec.run.seed)
        .ok_or_else(|| "needs the complete graph, whose relabellings are symmetries".to_string())?;
    let elapsed = battery.stop_time - s0.t;
    let horizon = match spec.run.sim.mode {
        Mode::Continuous => 0.9 * elapsed,
        Mode::Discrete => (elapsed - 1.0).max(1.0),
    };
    if !(horizon > 0.0) {
        return Err("battery run stopped immediately".into());
    }
    let cfg = SimConfig {
        sample_every: usize::MAX,
        ..battery_config(spec, horizon)
    };
    let rotated = SystemState::with_blocks(s0.m(), &q * &s0.v, &q * &s0.w * q.transpose())
        .map_err(|e| e.to_string())?
        .at(s0.t);
    let base = simulate(s0, g, &cfg).map_err(|e| e.to_string())?;
    let other = simulate(&rotated, g, &cfg).map_err(|e| e.to_string())?;
    let (x, y) = (base.last(), other.last());
    if x.t != y.t {
        return Ok(f64::INFINITY);
    }
    let dv = (&q * &x.v - &y.v).amax();
    let dw = max_abs(&(&q * &x.w * q.transpose() - &y.w));
    Ok(relative(dv.max(dw), x.peak()))
}

/// Largest relative gap between the centred second difference of `|V|²`
/// and `4|V'|² + 2ab|V|⁴`, or infinity if that value is ever negative.
fn convexity_residual(traj: &Trajectory, a: f64, b: f64) -> Result<f64, String> {
    let phi: Vec<f64> = traj.samples.iter().map(|s| s.v.norm_squared()).collect();
    let mut worst = 0.0_f64;
    let mut seen = 0;
    for k in 1..traj.len().saturating_sub(1) {
        let s = &traj.samples[k];
        let vdot = (&s.w * &s.v * a).norm_squared();
        let exact = 4.0 * vdot + 2.0 * a * b * phi[k] * phi[k];
        if exact < 0.0 {
            return Ok(f64::INFINITY);
        }
        let t = [traj.samples[k - 1].t, s.t, traj.samples[k + 1].t];
        if let Some(fd) = centred_second(t, [phi[k - 1], phi[k], phi[k + 1]]) {
            if exact > 0.0 {
                worst = worst.max((fd - exact).abs() / exact);
                seen += 1;
            }
        }
    }
    if seen == 0 {
        return Err("fewer than three distinct samples".into());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::Outcome;

    fn random_run(n: usize, seed: u64) -> RunSpec {
        RunSpec {
            graph: GraphSpec::Complete {
                n,
                self_loops: true,
            },
            w0: W0Spec::RandomSymmetric { range: 1.0 },
            v0: V0Spec::Uniform { range: 1.0 },
            sim: SimConfig::continuous(),
            seed,
            eps: None,
        }
    }

    #[test]
    fn substreams_differ() {
        let a: u64 = substream(7, Stream::Graph).random();
        let b: u64 = substream(7, Stream::Opinions).random();
        let c: u64 = substream(8, Stream::Graph).random();
        assert!(a != b && a != c);
    }

    #[test]
    fn prepare_is_deterministic() {
        let spec = random_run(5, 3);
        let a = prepare(&spec).unwrap();
        assert_eq!(a, prepare(&spec).unwrap());
        assert_eq!(a.state.asymmetry(), 0.0);
        assert!(a.state.v.iter().all(|x| x.abs() < 1.0));
        let other = prepare(&RunSpec { seed: 4, ..spec }).unwrap();
        assert_ne!(a.state.v, other.state.v);
    }

    #[test]
    fn norm_sq_family_hits_its_target() {
        let g = GraphSpec::Complete {
            n: 6,
            self_loops: false,
        }
        .build(0)
        .unwrap();
        let v = V0Spec::NormSq { value: 2.5 }.build(&g, 1).unwrap();
        assert!((v.norm_squared() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn edge_constant_ties_follow_the_graph() {
        let g = GraphTopology::from_edges(3, [(0, 1)], false).unwrap();
        let w = W0Spec::EdgeConstant { value: 0.01 }
            .build(&DVector::zeros(3), &g, 0)
            .unwrap();
        assert_eq!(w[(0, 1)], 0.01);
        assert_eq!(w[(1, 0)], 0.01);
        assert_eq!(w.iter().filter(|&&x| x != 0.0).count(), 2);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = RunSpec {
            v0: V0Spec::Seeds {
                fraction: 0.2,
                explicit: Some(BTreeMap::from([(0, 1.0), (33, -1.0)])),
            },
            ..random_run(4, 1)
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<RunSpec>(&text).unwrap(), spec);
    }

    #[test]
    fn identity_start_polarizes() {
        let spec = RunSpec {
            graph: GraphSpec::Complete {
                n: 10,
                self_loops: false,
            },
            w0: W0Spec::Identity,
            v0: V0Spec::Uniform { range: 1.0 },
            sim: SimConfig::discrete(),
            seed: 1,
            eps: None,
        };
        let r = run(&spec).unwrap();
        assert_eq!(r.trajectory.stop_reason, StopReason::Blowup);
        assert_eq!(r.outcome.class, Outcome::Polarization);
        assert!(r.balance.unwrap().strict);
    }

    #[test]
    fn repelling_start_reaches_harmony() {
        let spec = RunSpec {
            graph: GraphSpec::Complete {
                n: 6,
                self_loops: false,
            },
            w0: W0Spec::ScaledIdentity { c: -2.0 },
            v0: V0Spec::Values {
                values: vec![0.3, 0.5, 0.9, 0.2, 0.7, 0.4],
            },
            sim: SimConfig::discrete(),
            seed: 0,
            eps: None,
        };
        let r = run(&spec).unwrap();
        assert_eq!(r.outcome.class, Outcome::Harmony);
    }

    #[test]
    fn zero_opinions_stay_put() {
        let spec = RunSpec {
            v0: V0Spec::Zero,
            sim: SimConfig {
                max_steps: 100,
                ..SimConfig::discrete()
            },
            ..random_run(4, 0)
        };
        let r = run(&spec).unwrap();
        assert_eq!(r.trajectory.stop_reason, StopReason::MaxSteps);
        assert_eq!(r.outcome.class, Outcome::NeutralCollapse);
    }

    #[test]
    fn battery_passes_on_random_symmetric_run() {
        let report = verify(&VerifySpec::new(random_run(4, 12))).unwrap();
        for c in &report.checks {
            assert_ne!(c.status, CheckStatus::Fail, "{c:?}");
        }
        assert!(report.passed);
        let skipped: Vec<_> = report
            .checks
            .iter()
            .filter(|c| c.status == CheckStatus::Skipped)
            .map(|c| c.name)
            .collect();
        assert_eq!(skipped, vec![CheckName::EigenvectorPersistence]);
    }

    #[test]
    fn battery_checks_eigenvector_start() {
        let spec = RunSpec {
            w0: W0Spec::Identity,
            ..random_run(5, 2)
        };
        let report = verify(&VerifySpec::new(spec)).unwrap();
        assert!(report.passed);
        assert!(report.checks.iter().all(|c| c.status == CheckStatus::Pass));
    }

    #[test]
    fn asymmetric_start_skips_symmetry() {
        let spec = VerifySpec {
            checks: vec![CheckName::Symmetry, CheckName::Conjugation],
            ..VerifySpec::new(RunSpec {
                w0: W0Spec::Random { range: 1.0 },
                ..random_run(4, 5)
            })
        };
        let report = verify(&spec).unwrap();
        assert_eq!(report.checks[0].status, CheckStatus::Skipped);
        assert!(report.checks[0]
            .note
            .as_deref()
            .unwrap()
            .contains("not symmetric"));
        assert_eq!(report.checks[1].status, CheckStatus::Pass);
        assert!(report.passed);
    }

    #[test]
    fn perturbed_replay_breaks_conservation() {
        let spec = VerifySpec {
            perturb: Some(1e-3),
            horizon: 0.5,
            ..VerifySpec::new(random_run(4, 12))
        };
        let report = verify(&spec).unwrap();
        let riccati = report
            .checks
            .iter()
            .find(|c| c.name == CheckName::RiccatiResidual)
            .unwrap();
        assert_eq!(riccati.status, CheckStatus::Fail);
        assert!(!report.passed);
    }

    #[test]
    fn discrete_battery_skips_continuous_identities() {
        let spec = VerifySpec {
            horizon: 200.0,
            ..VerifySpec::new(RunSpec {
                graph: GraphSpec::Complete {
                    n: 5,
                    self_loops: false,
                },
                sim: SimConfig::discrete(),
                ..random_run(5, 9)
            })
        };
        let report = verify(&spec).unwrap();
        assert!(report.passed);
        let status = |n| report.checks.iter().find(|c| c.name == n).unwrap().status;
        assert_eq!(status(CheckName::Symmetry), CheckStatus::Pass);
        assert_eq!(status(CheckName::Conjugation), CheckStatus::Pass);
        assert_eq!(status(CheckName::EnergyIdentity), CheckStatus::Skipped);
    }
}
