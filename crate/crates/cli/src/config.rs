//! Run settings from flags and an optional TOML file. Flags win over the
//! file, the file wins over per-command defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use coevolve_core::graphio::{DirectedPolicy, EdgeFormat, LoadOptions};
use coevolve_core::{GraphSpec, Mode, RunSpec, SimConfig, V0Spec, W0Spec};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every setting shared by the subcommands. Field names double as TOML
/// keys, so a config file is a flat table such as
///
/// ```toml
/// mode = "continuous"
/// n = 6
/// w0 = "random_symmetric:1"
/// seed = 7
/// ```
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// TOML file with any of these settings; flags override it.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// `discrete` or `continuous`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Number of nodes for generated graphs.
    #[arg(long)]
    pub n: Option<usize>,
    /// `complete`, `er`, `ws` or `file`.
    #[arg(long)]
    pub graph: Option<String>,
    /// Edge probability (er) or rewiring probability (ws).
    #[arg(long)]
    pub p: Option<f64>,
    /// Ring neighbours on each side (ws).
    #[arg(long)]
    pub k: Option<usize>,
    /// Include the `i = j` terms (default: true on complete graphs, false
    /// elsewhere).
    #[arg(long)]
    pub self_loops: Option<bool>,
    /// Edge list for `--graph file`.
    #[arg(long, value_name = "FILE")]
    pub edges: Option<PathBuf>,
    /// `whitespace` or `csv`.
    #[arg(long)]
    pub edge_format: Option<String>,
    /// `symmetrize` or `reject` for files that list both orientations.
    #[arg(long)]
    pub directed: Option<String>,
    /// `node,label` CSV with labels in {-1, 1}.
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,

    /// zero | identity | scaled_identity:C | rank_one | random_symmetric:R |
    /// random:R | edge:VALUE | file:PATH
    #[arg(long)]
    pub w0: Option<String>,
    /// zero | random:R | norm_sq:VALUE | file:PATH | seeds:FRACTION
    #[arg(long)]
    pub v0: Option<String>,
    /// Explicit seed opinions by node id, e.g. `0=1,33=-1`.
    #[arg(long, value_name = "ID=VALUE,..")]
    pub seed_map: Option<String>,

    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Blow-up threshold on max |entry|.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Keep every k-th step.
    #[arg(long)]
    pub sample_every: Option<usize>,
    /// Stop at this time (continuous mode).
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sign dead zone for balance and communities.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Output file or directory, depending on the command.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads for repeated runs (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl Settings {
    /// `self` with every field that `top` sets replaced.
    pub fn overlay(mut self, top: Settings) -> Settings {
        overlay!(self, top; mode, n, graph, p, k, self_loops, edges, edge_format, directed, labels,
            w0, v0, seed_map, a, b, dt, threshold, max_steps, sample_every, t_end, seed, eps, out, workers);
        self
    }

    /// Defaults, then the config file (if any), then the flags.
    pub fn resolve(defaults: Settings, flags: Settings) -> Result<Settings, CliError> {
        let file = match &flags.config {
            Some(path) => load_file(path)?,
            None => Settings::default(),
        };
        Ok(defaults.overlay(file).overlay(flags))
    }

    pub fn mode(&self) -> Result<Mode, CliError> {
        match self.mode.as_deref().unwrap_or("discrete") {
            "discrete" => Ok(Mode::Discrete),
            "continuous" => Ok(Mode::Continuous),
            other => Err(CliError::Config(format!("unknown mode {other:?}"))),
        }
    }

    pub fn sim(&self) -> Result<SimConfig, CliError> {
        let base = match self.mode()? {
            Mode::Discrete => SimConfig::discrete(),
            Mode::Continuous => SimConfig::continuous(),
        };
        let cfg = SimConfig {
            a: self.a.unwrap_or(base.a),
            b: self.b.unwrap_or(base.b),
            dt: self.dt.unwrap_or(base.dt),
            blowup_threshold: self.threshold.unwrap_or(base.blowup_threshold),
            max_steps: self.max_steps.unwrap_or(base.max_steps),
            sample_every: self.sample_every.unwrap_or(base.sample_every),
            t_end: self.t_end.or(base.t_end),
            ..base
        };
        cfg.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn graph(&self) -> Result<GraphSpec, CliError> {
        let n = self.n.unwrap_or(10);
        Ok(match self.graph.as_deref().unwrap_or("complete") {
            "complete" => GraphSpec::Complete {
                n,
                self_loops: self.self_loops.unwrap_or(true),
            },
            "er" => GraphSpec::ErdosRenyi {
                n,
                p: self.p.unwrap_or(0.1),
            },
            "ws" => GraphSpec::WattsStrogatz {
                n,
                k: self.k.unwrap_or(2),
                p: self.p.unwrap_or(0.1),
            },
            "file" => GraphSpec::EdgeList {
                path: self
                    .edges
                    .clone()
                    .ok_or_else(|| CliError::Config("--graph file needs --edges".into()))?,
                options: self.load_options()?,
            },
            other => return Err(CliError::Config(format!("unknown graph {other:?}"))),
        })
    }

    fn load_options(&self) -> Result<LoadOptions, CliError> {
        let format = match self.edge_format.as_deref().unwrap_or("whitespace") {
            "whitespace" => EdgeFormat::WhitespacePairs,
            "csv" => EdgeFormat::Csv,
            other => return Err(CliError::Config(format!("unknown edge format {other:?}"))),
        };
        let policy = match self.directed.as_deref().unwrap_or("symmetrize") {
            "symmetrize" => DirectedPolicy::Symmetrize,
            "reject" => DirectedPolicy::Reject,
            other => {
                return Err(CliError::Config(format!(
                    "unknown directed policy {other:?}"
                )))
            }
        };
        Ok(LoadOptions {
            format,
            policy,
            labels: self.labels.clone(),
            self_loops: self.self_loops.unwrap_or(false),
        })
    }

    pub fn w0(&self) -> Result<W0Spec, CliError> {
        parse_w0(self.w0.as_deref().unwrap_or("identity"))
    }

    pub fn v0(&self) -> Result<V0Spec, CliError> {
        let explicit = self.seed_map.as_deref().map(parse_seed_map).transpose()?;
        let spec = parse_v0(self.v0.as_deref().unwrap_or("random:1"))?;
        Ok(match (spec, explicit) {
            (V0Spec::Seeds { fraction, .. }, explicit) => V0Spec::Seeds { fraction, explicit },
            (_, Some(explicit)) => V0Spec::Seeds {
                fraction: 0.0,
                explicit: Some(explicit),
            },
            (spec, None) => spec,
        })
    }

    pub fn run_spec(&self) -> Result<RunSpec, CliError> {
        Ok(RunSpec {
            graph: self.graph()?,
            w0: self.w0()?,
            v0: self.v0()?,
            sim: self.sim()?,
            seed: self.seed.unwrap_or(0),
            eps: self.eps,
        })
    }
}

fn load_file(path: &Path) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn split_spec(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((head, arg)) => (head.trim(), Some(arg.trim())),
        None => (s.trim(), None),
    }
}

fn number(kind: &str, arg: Option<&str>) -> Result<f64, CliError> {
    let arg =
        arg.ok_or_else(|| CliError::Config(format!("{kind} needs a value, as in {kind}:1")))?;
    arg.parse()
        .map_err(|_| CliError::Config(format!("{kind}: {arg:?} is not a number")))
}

pub fn parse_w0(s: &str) -> Result<W0Spec, CliError> {
    let (kind, arg) = split_spec(s);
    Ok(match kind {
        "zero" => W0Spec::Zero,
        "identity" => W0Spec::Identity,
        "scaled_identity" => W0Spec::ScaledIdentity {
            c: number(kind, arg)?,
        },
        "rank_one" => W0Spec::RankOne,
        "random_symmetric" => W0Spec::RandomSymmetric {
            range: number(kind, arg)?,
        },
        "random" => W0Spec::Random {
            range: number(kind, arg)?,
        },
        "edge" => W0Spec::EdgeConstant {
            value: number(kind, arg)?,
        },
        "file" => W0Spec::File {
            path: PathBuf::from(arg.ok_or_else(|| CliError::Config("file: needs a path".into()))?),
        },
        other => return Err(CliError::Config(format!("unknown W(0) kind {other:?}"))),
    })
}

pub fn parse_v0(s: &str) -> Result<V0Spec, CliError> {
    let (kind, arg) = split_spec(s);
    Ok(match kind {
        "zero" => V0Spec::Zero,
        "random" => V0Spec::Uniform {
            range: number(kind, arg)?,
        },
        "norm_sq" => V0Spec::NormSq {
            value: number(kind, arg)?,
        },
        "file" => V0Spec::File {
            path: PathBuf::from(arg.ok_or_else(|| CliError::Config("file: needs a path".into()))?),
        },
        "seeds" => V0Spec::Seeds {
            fraction: number(kind, arg)?,
            explicit: None,
        },
        other => return Err(CliError::Config(format!("unknown V(0) kind {other:?}"))),
    })
}

pub fn parse_seed_map(s: &str) -> Result<BTreeMap<i64, f64>, CliError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let (id, value) = pair.split_once('=').ok_or_else(|| {
                CliError::Config(format!("seed map entry {pair:?} is not ID=VALUE"))
            })?;
            let id = id
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad node id {id:?}")))?;
            let value = value
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad seed value {value:?}")))?;
            Ok((id, value))
        })
        .collect()
}

/// A comma-separated list of numbers.
pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| CliError::Config(format!("bad {what} {t:?}")))
        })
        .collect()
}
