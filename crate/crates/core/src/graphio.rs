//! Random graph generators, edge-list ingestion, opinion seeding and
//! label-recovery scoring.
//!
//! Every random choice draws from `Pcg64::seed_from_u64(seed)`, so a given
//! `(arguments, seed)` pair produces the same graph on every platform.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::dynamics::{GraphError, GraphTopology};

#[derive(Debug, Error)]
pub enum GraphIoError {
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("k must be even and below n (k = {k}, n = {n})")]
    InvalidK { k: usize, n: usize },
    #[error("fraction must lie in [0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("edge list holds both ({0}, {1}) and ({1}, {0}); it is directed")]
    RejectedDirected(i64, i64),
    #[error("no node labels available")]
    NoLabels,
    #[error("node {0} is not in the graph")]
    UnknownNode(i64),
    #[error("opinion vector has length {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn check_probability(p: f64) -> Result<(), GraphIoError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GraphIoError::InvalidProbability(p))
    }
}

/// `G(n, p)`: pairs `(i, j)`, `i < j`, visited lexicographically, each kept
/// when a uniform draw falls below `p`.
pub fn erdos_renyi(n: usize, p: f64, rng_seed: u64) -> Result<GraphTopology, GraphIoError> {
    check_probability(p)?;
    let mut rng = Pcg64::seed_from_u64(rng_seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Ok(GraphTopology::from_edges(n, edges, false)?)
}

/// Watts–Strogatz small world: a ring lattice joining every node to its `k`
/// nearest neighbours, after which each lattice edge `(u, u + j)` is, with
/// probability `p`, rewired to `(u, w)` for a uniform `w` that is neither `u`
/// nor already adjacent to it. Edges are visited by offset `j = 1..=k/2`,
/// then by `u`.
pub fn watts_strogatz(
    n: usize,
    k: usize,
    p: f64,
    rng_seed: u64,
) -> Result<GraphTopology, GraphIoError> {
    check_probability(p)?;
    if k % 2 == 1 || k >= n {
        return Err(GraphIoError::InvalidK { k, n });
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    let mut rng = Pcg64::seed_from_u64(rng_seed);
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.random::<f64>() >= p || !adj[u].contains(&v) {
                continue;
            }
            let candidates: Vec<usize> =
                (0..n).filter(|&w| w != u && !adj[u].contains(&w)).collect();
            if candidates.is_empty() {
                continue;
            }
            let w = candidates[rng.random_range(0..candidates.len())];
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(u, s)| s.iter().filter(move |&&w| w > u).map(move |&w| (u, w)));
    Ok(GraphTopology::from_edges(n, edges, false)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeFormat {
    /// Two integer ids per line, whitespace separated; `#` starts a comment;
    /// further columns are ignored.
    WhitespacePairs,
    /// Comma separated with a header row; the first two columns are ids.
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectedPolicy {
    /// Treat every line as an undirected tie.
    Symmetrize,
    /// Refuse lists that contain a pair in both orientations.
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub format: EdgeFormat,
    pub policy: DirectedPolicy,
    /// `node,label` CSV with labels in `{−1, 1}`.
    pub labels: Option<PathBuf>,
    /// Keep self-loop lines by switching on the graph's self-loop flag;
    /// otherwise they are dropped.
    pub self_loops: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            format: EdgeFormat::WhitespacePairs,
            policy: DirectedPolicy::Symmetrize,
            labels: None,
            self_loops: false,
        }
    }
}

/// A topology with optional ground truth, indexed densely `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledGraph {
    pub topology: GraphTopology,
    /// `Some(±1)` for labelled nodes.
    pub labels: Option<Vec<Option<i8>>>,
    pub names: Option<Vec<String>>,
    /// Original id of each dense index, ascending.
    pub ids: Vec<i64>,
}

impl LabeledGraph {
    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn index_of(&self, id: i64) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// `{"n": .., "ids": [original id of index 0, ..]}`.
    pub fn id_map_json(&self) -> Value {
        json!({ "n": self.n(), "ids": self.ids })
    }
}

fn read(path: &Path) -> Result<String, GraphIoError> {
    fs::read_to_string(path).map_err(|source| GraphIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_id(token: &str, path: &Path, line: usize) -> Result<i64, GraphIoError> {
    token.trim().parse().map_err(|_| GraphIoError::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("expected an integer node id, found {token:?}"),
    })
}

fn parse_pairs(path: &Path, format: EdgeFormat) -> Result<Vec<(i64, i64)>, GraphIoError> {
    let text = read(path)?;
    let mut pairs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() || (format == EdgeFormat::Csv && line == 1) {
            continue;
        }
        let tokens: Vec<&str> = match format {
            EdgeFormat::WhitespacePairs => body.split_whitespace().collect(),
            EdgeFormat::Csv => body.split(',').collect(),
        };
        if tokens.len() < 2 {
            return Err(GraphIoError::Parse {
                path: path.to_path_buf(),
                line,
                message: "expected two node ids".into(),
            });
        }
        pairs.push((
            parse_id(tokens[0], path, line)?,
            parse_id(tokens[1], path, line)?,
        ));
    }
    Ok(pairs)
}

fn parse_labels(path: &Path) -> Result<Vec<(i64, i8)>, GraphIoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| GraphIoError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })?;
    let mut out = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 1;
        let record = record.map_err(|e| GraphIoError::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        let node = record.get(0).unwrap_or("");
        if node.is_empty() || node.starts_with('#') {
            continue;
        }
        if line == 1 && node.parse::<i64>().is_err() {
            continue; // header
        }
        let id = parse_id(node, path, line)?;
        let label = match record.get(1).unwrap_or("") {
            "1" | "+1" => 1,
            "-1" => -1,
            other => {
                return Err(GraphIoError::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("label must be -1 or 1, found {other:?}"),
                })
            }
        };
        out.push((id, label));
    }
    Ok(out)
}

/// Reads an edge list (and optionally a label file). Ids are remapped to
/// `0..n` in ascending order; nodes that only appear in the label file
/// become isolated nodes. Duplicate edges collapse.
pub fn load_edge_list(path: &Path, opts: &LoadOptions) -> Result<LabeledGraph, GraphIoError> {
    let pairs = parse_pairs(path, opts.format)?;
    let labels = opts.labels.as_deref().map(parse_labels).transpose()?;

    if opts.policy == DirectedPolicy::Reject {
        let seen: BTreeSet<(i64, i64)> = pairs.iter().copied().collect();
        if let Some(&(u, v)) = pairs
            .iter()
            .find(|&&(u, v)| u != v && seen.contains(&(v, u)))
        {
            return Err(GraphIoError::RejectedDirected(u.min(v), u.max(v)));
        }
    }

    let mut ids: BTreeSet<i64> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
    if let Some(l) = &labels {
        ids.extend(l.iter().map(|&(id, _)| id));
    }
    let ids: Vec<i64> = ids.into_iter().collect();
    let index = |id: i64| ids.binary_search(&id).expect("id collected above");
    let has_loops = pairs.iter().any(|&(u, v)| u == v);
    let edges: Vec<(usize, usize)> = pairs
        .iter()
        .filter(|&&(u, v)| u != v)
        .map(|&(u, v)| (index(u), index(v)))
        .collect();
    let topology = GraphTopology::from_edges(ids.len(), edges, opts.self_loops && has_loops)?;

    let labels = labels.map(|l| {
        let mut out = vec![None; ids.len()];
        for (id, label) in l {
            out[index(id)] = Some(label);
        }
        out
    });
    Ok(LabeledGraph {
        topology,
        labels,
        names: None,
        ids,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedAssignment {
    pub v0: DVector<f64>,
    /// Dense indices of seeded nodes, ascending.
    pub seeded: Vec<usize>,
    pub fraction: f64,
    pub rng_seed: u64,
}

/// Number of seeds for `fraction` of `labeled` nodes: `⌈fraction·labeled⌉`,
/// with a small allowance so `0.2·1490` gives 298 rather than 299.
pub fn seed_count(fraction: f64, labeled: usize) -> usize {
    ((fraction * labeled as f64 - 1e-9).ceil().max(0.0) as usize).min(labeled)
}

/// Seeds opinions from ground truth.
///
/// With `explicit` (original id → opinion) exactly those nodes are set.
/// Otherwise `⌈fraction·L⌉` of the `L` labelled nodes are drawn uniformly
/// without replacement and given their label. Everything else is 0.
pub fn seed_opinions(
    g: &LabeledGraph,
    fraction: f64,
    rng_seed: u64,
    explicit: Option<&BTreeMap<i64, f64>>,
) -> Result<SeedAssignment, GraphIoError> {
    let n = g.n();
    let mut v0 = DVector::zeros(n);
    if let Some(map) = explicit {
        let mut seeded = Vec::with_capacity(map.len());
        for (&id, &value) in map {
            let i = g.index_of(id).ok_or(GraphIoError::UnknownNode(id))?;
            v0[i] = value;
            seeded.push(i);
        }
        seeded.sort_unstable();
        return Ok(SeedAssignment {
            v0,
            seeded,
            fraction: map.len() as f64 / n as f64,
            rng_seed,
        });
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(GraphIoError::InvalidFraction(fraction));
    }
    let labels = g.labels.as_ref().ok_or(GraphIoError::NoLabels)?;
    let labeled: Vec<usize> = (0..n).filter(|&i| labels[i].is_some()).collect();
    if labeled.is_empty() {
        return Err(GraphIoError::NoLabels);
    }
    let count = seed_count(fraction, labeled.len());
    let mut rng = Pcg64::seed_from_u64(rng_seed);
    let mut seeded: Vec<usize> = sample(&mut rng, labeled.len(), count)
        .into_iter()
        .map(|k| labeled[k])
        .collect();
    seeded.sort_unstable();
    for &i in &seeded {
        v0[i] = f64::from(labels[i].expect("labelled node"));
    }
    Ok(SeedAssignment {
        v0,
        seeded,
        fraction,
        rng_seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub accuracy: f64,
    /// Whether the global sign flip scored better.
    pub flipped: bool,
    pub scored: usize,
    /// Rows: true label `+1`, `−1`. Columns: predicted `+1`, `−1`, `0`
    /// (after the chosen flip).
    pub confusion: [[usize; 3]; 2],
}

/// Flip-invariant agreement between `sign(final_v)` and the labels.
/// Zero opinions count as wrong. `mask`, when given, restricts scoring to
/// nodes where it is `true`.
pub fn accuracy(
    final_v: &DVector<f64>,
    labels: &[Option<i8>],
    mask: Option<&[bool]>,
) -> Result<Accuracy, GraphIoError> {
    if final_v.len() != labels.len() {
        return Err(GraphIoError::Dimension {
            got: final_v.len(),
            expected: labels.len(),
        });
    }
    let scored: Vec<(i8, i8)> = labels
        .iter()
        .enumerate()
        .filter(|&(i, _)| mask.is_none_or(|m| m[i]))
        .filter_map(|(i, l)| l.map(|l| (l, sign(final_v[i]))))
        .collect();
    if scored.is_empty() {
        return Err(GraphIoError::NoLabels);
    }
    let direct = scored.iter().filter(|&&(l, p)| l == p).count();
    let reverse = scored.iter().filter(|&&(l, p)| l == -p && p != 0).count();
    let flipped = reverse > direct;
    let mut confusion = [[0; 3]; 2];
    for &(l, p) in &scored {
        let p = if flipped { -p } else { p };
        let row = if l > 0 { 0 } else { 1 };
        let col = match p {
            1 => 0,
            -1 => 1,
            _ => 2,
        };
        confusion[row][col] += 1;
    }
    Ok(Accuracy {
        accuracy: direct.max(reverse) as f64 / scored.len() as f64,
        flipped,
        scored: scored.len(),
        confusion,
    })
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn erdos_renyi_extremes() {
        assert_eq!(erdos_renyi(20, 0.0, 1).unwrap().edge_count(), 0);
        let full = erdos_renyi(20, 1.0, 1).unwrap();
        assert_eq!(full.edge_count(), 190);
        assert!(full.is_complete());
        assert!(erdos_renyi(5, 1.5, 1).is_err());
    }

    #[test]
    fn erdos_renyi_edge_count_is_binomial() {
        // mean 4950·0.3 = 1485, σ = sqrt(4950·0.3·0.7) ≈ 32.2
        for seed in 0..5 {
            let m = erdos_renyi(100, 0.3, seed).unwrap().edge_count() as f64;
            assert!((m - 1485.0).abs() < 4.0 * 32.2, "seed {seed}: {m}");
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(
            erdos_renyi(40, 0.2, 9).unwrap(),
            erdos_renyi(40, 0.2, 9).unwrap()
        );
        assert_ne!(
            erdos_renyi(40, 0.2, 9).unwrap(),
            erdos_renyi(40, 0.2, 10).unwrap()
        );
        assert_eq!(
            watts_strogatz(40, 4, 0.3, 9).unwrap(),
            watts_strogatz(40, 4, 0.3, 9).unwrap()
        );
    }

    #[test]
    fn ring_lattice() {
        let g = watts_strogatz(10, 2, 0.0, 0).unwrap();
        assert_eq!(g.edge_count(), 10);
        assert!((0..10).all(|i| g.degree(i) == 2 && g.has_edge(i, (i + 1) % 10)));
        let g = watts_strogatz(12, 6, 0.0, 0).unwrap();
        assert!((0..12).all(|i| g.degree(i) == 6));
    }

    #[test]
    fn rewiring_keeps_edge_count() {
        for seed in 0..5 {
            let g = watts_strogatz(100, 4, 0.5, seed).unwrap();
            assert_eq!(g.edge_count(), 200);
        }
        let g = watts_strogatz(30, 4, 1.0, 3).unwrap();
        assert_eq!(g.edge_count(), 60);
    }

    #[test]
    fn watts_strogatz_validates_k() {
        assert!(matches!(
            watts_strogatz(10, 3, 0.1, 0),
            Err(GraphIoError::InvalidK { .. })
        ));
        assert!(matches!(
            watts_strogatz(4, 4, 0.1, 0),
            Err(GraphIoError::InvalidK { .. })
        ));
    }

    #[test]
    fn path_graph_from_pairs() {
        let f = write_tmp("0 1\n1 2\n");
        let g = load_edge_list(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.topology.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn ids_are_remapped_and_duplicates_collapse() {
        let f = write_tmp("# comment\n10 30 1.5\n30 10\n\n30 20 # trailing\n");
        let g = load_edge_list(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(g.ids, vec![10, 20, 30]);
        assert_eq!(g.topology.edges(), &[(0, 2), (1, 2)]);
        assert_eq!(g.id_map_json(), json!({"n": 3, "ids": [10, 20, 30]}));

        let opts = LoadOptions {
            policy: DirectedPolicy::Reject,
            ..LoadOptions::default()
        };
        assert!(matches!(
            load_edge_list(f.path(), &opts),
            Err(GraphIoError::RejectedDirected(10, 30))
        ));
    }

    #[test]
    fn symmetrize_is_idempotent() {
        let once = write_tmp("0 1\n2 1\n");
        let twice = write_tmp("0 1\n1 0\n2 1\n1 2\n");
        let a = load_edge_list(once.path(), &LoadOptions::default()).unwrap();
        let b = load_edge_list(twice.path(), &LoadOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn self_loops_only_when_requested() {
        let f = write_tmp("0 0\n0 1\n");
        let g = load_edge_list(f.path(), &LoadOptions::default()).unwrap();
        assert!(!g.topology.self_loops());
        assert_eq!(g.topology.edge_count(), 1);
        let opts = LoadOptions {
            self_loops: true,
            ..LoadOptions::default()
        };
        assert!(load_edge_list(f.path(), &opts)
            .unwrap()
            .topology
            .self_loops());
    }

    #[test]
    fn csv_edges_and_labels() {
        let edges = write_tmp("source,target\n1,2\n2,3\n");
        let labels = write_tmp("node,label\n1,1\n2,-1\n3,1\n4,-1\n");
        let opts = LoadOptions {
            format: EdgeFormat::Csv,
            labels: Some(labels.path().to_path_buf()),
            ..LoadOptions::default()
        };
        let g = load_edge_list(edges.path(), &opts).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.topology.degree(3), 0);
        assert_eq!(
            g.labels.unwrap(),
            vec![Some(1), Some(-1), Some(1), Some(-1)]
        );
    }

    #[test]
    fn parse_errors_carry_line() {
        let f = write_tmp("0 1\n1 x\n");
        match load_edge_list(f.path(), &LoadOptions::default()) {
            Err(GraphIoError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let f = write_tmp("0\n");
        assert!(matches!(
            load_edge_list(f.path(), &LoadOptions::default()),
            Err(GraphIoError::Parse { line: 1, .. })
        ));
        let bad = write_tmp("0,2\n");
        let opts = LoadOptions {
            labels: Some(bad.path().to_path_buf()),
            ..LoadOptions::default()
        };
        let edges = write_tmp("0 1\n");
        assert!(matches!(
            load_edge_list(edges.path(), &opts),
            Err(GraphIoError::Parse { .. })
        ));
    }

    fn labeled(n: usize) -> LabeledGraph {
        LabeledGraph {
            topology: GraphTopology::complete(n, false),
            labels: Some(
                (0..n)
                    .map(|i| Some(if i % 2 == 0 { 1 } else { -1 }))
                    .collect(),
            ),
            names: None,
            ids: (0..n as i64).collect(),
        }
    }

    #[test]
    fn seed_counts() {
        assert_eq!(seed_count(0.2, 1490), 298);
        assert_eq!(seed_count(0.03, 1490), 45);
        assert_eq!(seed_count(1.0, 7), 7);
        assert_eq!(seed_count(0.25, 10), 3);
        assert_eq!(seed_count(0.0, 10), 0);
    }

    #[test]
    fn explicit_seeds() {
        let g = labeled(34);
        let map = BTreeMap::from([(0, 1.0), (33, -1.0)]);
        let s = seed_opinions(&g, 0.0, 0, Some(&map)).unwrap();
        assert_eq!(s.seeded, vec![0, 33]);
        assert_eq!(s.v0[0], 1.0);
        assert_eq!(s.v0[33], -1.0);
        assert_eq!(s.v0.iter().filter(|&&x| x != 0.0).count(), 2);
        let bad = BTreeMap::from([(99, 1.0)]);
        assert!(matches!(
            seed_opinions(&g, 0.0, 0, Some(&bad)),
            Err(GraphIoError::UnknownNode(99))
        ));
    }

    #[test]
    fn random_seeds_follow_labels() {
        let g = labeled(50);
        let all = seed_opinions(&g, 1.0, 4, None).unwrap();
        assert_eq!(all.seeded, (0..50).collect::<Vec<_>>());
        let s = seed_opinions(&g, 0.2, 4, None).unwrap();
        assert_eq!(s.seeded.len(), 10);
        let labels = g.labels.as_ref().unwrap();
        for (i, label) in labels.iter().enumerate() {
            if s.seeded.contains(&i) {
                assert_eq!(Some(s.v0[i] as i8), *label);
            } else {
                assert_eq!(s.v0[i], 0.0);
            }
        }
        assert_eq!(s, seed_opinions(&g, 0.2, 4, None).unwrap());
        let unlabeled = LabeledGraph { labels: None, ..g };
        assert!(matches!(
            seed_opinions(&unlabeled, 0.2, 0, None),
            Err(GraphIoError::NoLabels)
        ));
    }

    #[test]
    fn accuracy_is_flip_invariant() {
        let labels = vec![Some(1), Some(-1), Some(1), None];
        let v = DVector::from_vec(vec![2.0, -1.0, 0.5, 9.0]);
        let a = accuracy(&v, &labels, None).unwrap();
        assert_eq!(a.accuracy, 1.0);
        assert!(!a.flipped);
        assert_eq!(a.scored, 3);
        let b = accuracy(&(-v), &labels, None).unwrap();
        assert_eq!(b.accuracy, 1.0);
        assert!(b.flipped);
        assert_eq!(a.confusion, b.confusion);
    }

    #[test]
    fn accuracy_counts_zeros_as_wrong() {
        let labels = vec![Some(1), Some(-1), Some(1), Some(-1)];
        let v = DVector::from_vec(vec![1.0, -1.0, 0.0, 1.0]);
        let a = accuracy(&v, &labels, None).unwrap();
        assert_eq!(a.accuracy, 0.5);
        assert_eq!(a.confusion, [[1, 0, 1], [1, 1, 0]]);
        let mask = [true, true, false, false];
        assert_eq!(accuracy(&v, &labels, Some(&mask)).unwrap().accuracy, 1.0);
        assert!(matches!(
            accuracy(&v, &[None; 4], None),
            Err(GraphIoError::NoLabels)
        ));
    }
}
