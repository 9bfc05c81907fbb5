//! Structural balance of signed tie matrices.
//!
//! A triangle is balanced when `w_ij·w_jk·w_ki ≥ 0`. The network is strictly
//! balanced when every triangle product is positive, weakly balanced when
//! none is negative.

use nalgebra::DMatrix;
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::dynamics::{GraphTopology, StopReason, Trajectory};
use crate::spectral::{eigh, max_abs, EigGap, SymmetricMatrix, DEFAULT_EIG_TOL};

/// Scale-aware dead zone for tie signs: `1e-9·max|w|`.
pub fn default_eps(w: &DMatrix<f64>) -> f64 {
    1e-9 * max_abs(w)
}

/// Dead zone for eigenvector components in [`partition`].
pub const COMPONENT_EPS: f64 = 1e-9;

/// `+1`, `−1`, or `0` inside the dead zone.
pub fn sign_with_dead_zone(x: f64, eps: f64) -> i8 {
    if x > eps {
        1
    } else if x < -eps {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    /// `None` when the graph has no triangles.
    pub min_product: Option<f64>,
    /// Triangles `(i, j, k)`, `i < j < k`, with product below `−eps³`.
    pub violating_triangles: Vec<(usize, usize, usize)>,
    /// Triangles with `|product| ≤ eps³`.
    pub near_zero_triangles: usize,
    pub strict: bool,
    pub weak: bool,
    pub triangle_count: usize,
    pub eps: f64,
}

/// Triangle products of `w` over the triangles of `g`. A product is compared
/// against `eps³` since each factor carries its own dead zone `eps`.
pub fn check_balance(w: &DMatrix<f64>, g: &GraphTopology, eps: f64) -> BalanceReport {
    let cut = eps.powi(3);
    let mut min_product: Option<f64> = None;
    let mut violating = Vec::new();
    let mut near_zero = 0;
    let mut count = 0;
    g.for_each_triangle(|i, j, k| {
        let p = w[(i, j)] * w[(j, k)] * w[(k, i)];
        count += 1;
        min_product = Some(min_product.map_or(p, |m| m.min(p)));
        if p < -cut {
            violating.push((i, j, k));
        } else if p <= cut {
            near_zero += 1;
        }
    });
    let weak = violating.is_empty();
    BalanceReport {
        min_product,
        violating_triangles: violating,
        near_zero_triangles: near_zero,
        strict: weak && near_zero == 0,
        weak,
        triangle_count: count,
        eps,
    }
}

/// Two camps read off the leading eigenvector of `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
    /// Components within `eps` of zero.
    pub zero: Vec<usize>,
    pub gap: EigGap,
    pub leading_eigenvalue: f64,
    pub eigenvector: Vec<f64>,
}

impl Partition {
    /// A unique leading eigenvalue and no undecided nodes.
    pub fn is_reliable(&self) -> bool {
        self.gap.unique && self.zero.is_empty()
    }

    /// `+1`/`−1`/`0` camp label per node.
    pub fn labels(&self) -> Vec<i8> {
        let n = self.plus.len() + self.minus.len() + self.zero.len();
        let mut out = vec![0; n];
        self.plus.iter().for_each(|&i| out[i] = 1);
        self.minus.iter().for_each(|&i| out[i] = -1);
        out
    }
}

/// Splits nodes by the sign of the leading eigenvector of `w`, using the
/// deterministic sign convention of [`eigh`].
pub fn partition(w: &SymmetricMatrix, eps: f64) -> Partition {
    let dec = eigh(w, DEFAULT_EIG_TOL).expect("symmetric matrix has an eigendecomposition");
    let scale = dec.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let gap = dec.gap(1e-9 * scale);
    let (leading, u) = dec.leading();
    let (mut plus, mut minus, mut zero) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &x) in u.iter().enumerate() {
        match sign_with_dead_zone(x, eps) {
            1 => plus.push(i),
            -1 => minus.push(i),
            _ => zero.push(i),
        }
    }
    Partition {
        plus,
        minus,
        zero,
        gap,
        leading_eigenvalue: leading,
        eigenvector: u.iter().copied().collect(),
    }
}

/// Fraction of the graph's edges where `sign(w_ij) = sign(u_i·u_j)`.
pub fn sign_pattern_agreement(w: &DMatrix<f64>, u: &[f64], g: &GraphTopology) -> f64 {
    let edges = g.edges();
    if edges.is_empty() {
        return 1.0;
    }
    let hits = edges
        .iter()
        .filter(|&&(i, j)| (w[(i, j)] > 0.0) == (u[i] * u[j] > 0.0))
        .count();
    hits as f64 / edges.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Harmony,
    Polarization,
    MultiCommunity,
    NeutralCollapse,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub stop_reason: StopReason,
    pub stop_time: f64,
    pub final_v_norm: f64,
    /// Time of the sample the verdict was read from.
    pub sample_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeClass {
    pub class: Outcome,
    pub communities: Vec<Vec<usize>>,
    pub evidence: Evidence,
    pub balance: Option<BalanceReport>,
}

/// Components of `g` once edges with `w_ij < −eps` are removed. Isolated
/// nodes belong to no community.
pub fn positive_components(w: &DMatrix<f64>, g: &GraphTopology, eps: f64) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut uf = UnionFind::<usize>::new(n);
    for &(i, j) in g.edges() {
        if w[(i, j)] >= -eps {
            uf.union(i, j);
        }
    }
    let labels = uf.into_labeling();
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in (0..n).filter(|&i| g.degree(i) > 0) {
        groups.entry(labels[i]).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|c| c[0]);
    out
}

/// Outcome of a finished run, read from its last finite sample.
///
/// `eps` defaults to `1e-9·max|w|` of that sample. Block (`m > 1`) runs
/// have no scalar sign pattern and are reported undecided unless the
/// opinions collapsed.
pub fn classify(traj: &Trajectory, g: &GraphTopology, eps: Option<f64>) -> OutcomeClass {
    let sample = traj
        .samples
        .iter()
        .rev()
        .find(|s| s.is_finite())
        .unwrap_or_else(|| traj.initial());
    let final_v_norm = traj.last().v.norm();
    let evidence = Evidence {
        stop_reason: traj.stop_reason,
        stop_time: traj.stop_time,
        final_v_norm,
        sample_time: sample.t,
    };
    let verdict = |class, communities, balance| OutcomeClass {
        class,
        communities,
        evidence: evidence.clone(),
        balance,
    };
    if traj.stop_reason == StopReason::OpinionCollapse
        || final_v_norm < crate::dynamics::COLLAPSE_TOL
    {
        return verdict(Outcome::NeutralCollapse, Vec::new(), None);
    }
    if sample.m() != 1 {
        return verdict(Outcome::Undecided, Vec::new(), None);
    }
    let w = &sample.w;
    let eps = eps.unwrap_or_else(|| default_eps(w));
    let report = check_balance(w, g, eps);
    if !report.weak {
        return verdict(Outcome::Undecided, Vec::new(), Some(report));
    }
    if g.edges().iter().all(|&(i, j)| w[(i, j)] >= -eps) {
        return verdict(Outcome::Harmony, vec![(0..g.n()).collect()], Some(report));
    }
    let comps = positive_components(w, g, eps);
    let class = match comps.len() {
        2 => Outcome::Polarization,
        k if k > 2 && !g.is_complete() => Outcome::MultiCommunity,
        _ => Outcome::Undecided,
    };
    let communities = if class == Outcome::Undecided {
        Vec::new()
    } else {
        comps
    };
    verdict(class, communities, Some(report))
}

/// When each entry of `W` settled on its final sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignStability {
    /// Earliest sample time after which the entry's sign never changes.
    pub times: DMatrix<f64>,
    /// Final sign, `0` for entries that end inside `±eps`.
    pub final_sign: DMatrix<i8>,
}

impl SignStability {
    pub fn latest(&self) -> f64 {
        self.times.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn sign_stability(traj: &Trajectory, eps: f64) -> SignStability {
    let last = traj.last();
    let (r, c) = last.w.shape();
    let mut times = DMatrix::from_element(r, c, traj.initial().t);
    let mut final_sign = DMatrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            let target = sign_with_dead_zone(last.w[(i, j)], eps);
            final_sign[(i, j)] = target;
            let run_start = traj
                .samples
                .iter()
                .rposition(|s| sign_with_dead_zone(s.w[(i, j)], eps) != target)
                .map(|k| traj.samples[k + 1].t);
            if let Some(t) = run_start {
                times[(i, j)] = t;
            }
        }
    }
    SignStability { times, final_sign }
}
