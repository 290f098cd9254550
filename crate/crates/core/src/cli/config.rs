//! Run configuration: task presets, a `key = value` config file, and
//! command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::data::ColumnRoles;
use crate::embed::{EdgeStrategyKind, FeatureConfig};
use crate::error::{Error, Result};
use crate::train::{Criterion, Metric, ModelSpec, TrainConfig, Variant};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Base-NP chunking (CoNLL-2000 NP only).
    ChunkNp,
    /// Full shallow parsing (all CoNLL-2000 chunk types).
    ChunkFull,
    Pos,
    /// Word segmentation as B/I character tagging.
    Segment,
    /// No corpus-specific defaults; small dimensions suited to toy data.
    #[default]
    Custom,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::ChunkNp, Task::ChunkFull, Task::Pos, Task::Segment, Task::Custom];

    pub fn name(self) -> &'static str {
        match self {
            Task::ChunkNp => "chunk-np",
            Task::ChunkFull => "chunk-full",
            Task::Pos => "pos",
            Task::Segment => "segment",
            Task::Custom => "custom",
        }
    }

    /// Model, training and column defaults of the preset.
    pub fn defaults(self) -> (ModelSpec, TrainConfig, ColumnRoles) {
        let window_features = FeatureConfig {
            window: 2,
            suffixes: true,
            pos: false,
        };
        let mut spec = ModelSpec {
            variant: Variant::EdgeBased2,
            embed_dim: 100,
            features: window_features,
            ..ModelSpec::default()
        };
        let mut train = TrainConfig {
            criterion: Criterion::Probabilistic,
            lr: 0.1,
            l2: 1e-6,
            epochs: 40,
            ..TrainConfig::default()
        };
        let word_label: ColumnRoles = "word,label".parse().expect("static column spec");
        let columns = match self {
            Task::ChunkNp | Task::ChunkFull => {
                spec.hidden = 300;
                spec.features.pos = true;
                train.metric = Metric::F1;
                "word,pos,label".parse().expect("static column spec")
            }
            Task::Pos => {
                spec.hidden = 200;
                train.metric = Metric::Accuracy;
                word_label
            }
            Task::Segment => {
                spec.hidden = 200;
                train.metric = Metric::F1;
                word_label
            }
            Task::Custom => {
                spec.hidden = 16;
                spec.embed_dim = 16;
                spec.features = FeatureConfig {
                    window: 0,
                    suffixes: false,
                    pos: false,
                };
                train.metric = Metric::Accuracy;
                word_label
            }
        };
        (spec, train, columns)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s.to_ascii_lowercase().replace('_', "-"))
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown task {s:?} (expected chunk-np, chunk-full, pos, segment or custom)"
                ))
            })
    }
}

/// Every tunable, all optional so that presets, the config file and
/// flags can be layered.
#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct Settings {
    /// Task preset: chunk-np, chunk-full, pos, segment, custom
    #[arg(long)]
    pub task: Option<Task>,
    /// Model variant, e.g. edge-based-2, bilstm-crf, linear-crf
    #[arg(long)]
    pub variant: Option<Variant>,
    /// probabilistic or large-margin
    #[arg(long)]
    pub criterion: Option<Criterion>,
    /// bigram, concat or feedforward (edge-based variants)
    #[arg(long)]
    pub edge_strategy: Option<EdgeStrategyKind>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// AdaGrad learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    /// L2 regularization coefficient
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Pretrained word vectors (`word v1 ... vD` per line)
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub model_in: Option<PathBuf>,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Column roles, e.g. word,pos,label (use _ to skip a column)
    #[arg(long)]
    pub columns: Option<ColumnRoles>,
    #[arg(long)]
    pub bidirectional: Option<bool>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Fraction of the training corpus held out as dev when --dev is absent
    #[arg(long)]
    pub dev_fraction: Option<f64>,
    /// Dev selection metric: accuracy or f1
    #[arg(long)]
    pub metric: Option<Metric>,
    /// Context words on each side (0..=2)
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub suffixes: Option<bool>,
    #[arg(long)]
    pub pos_features: Option<bool>,
    /// Also run the BOS edge through the edge LSTM
    #[arg(long)]
    pub full_length: Option<bool>,
    #[arg(long)]
    pub end_energy: Option<bool>,
    #[arg(long)]
    pub max_grad_norm: Option<f64>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub min_count: Option<usize>,
    /// Also write the epoch log to this file
    #[arg(long)]
    pub log: Option<PathBuf>,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse()
        .map_err(|e| Error::config(format!("bad value {v:?} for {key}: {e}")))
}

impl Settings {
    /// Set one entry by its flag name (without dashes; `_` and `-` are
    /// interchangeable).
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let k = key.trim().replace('_', "-");
        let k = k.as_str();
        match k {
            "task" => self.task = Some(parse(k, v)?),
            "variant" => self.variant = Some(parse(k, v)?),
            "criterion" => self.criterion = Some(parse(k, v)?),
            "edge-strategy" => self.edge_strategy = Some(parse(k, v)?),
            "hidden" => self.hidden = Some(parse(k, v)?),
            "embed-dim" => self.embed_dim = Some(parse(k, v)?),
            "lr" => self.lr = Some(parse(k, v)?),
            "l2" => self.l2 = Some(parse(k, v)?),
            "epochs" => self.epochs = Some(parse(k, v)?),
            "seed" => self.seed = Some(parse(k, v)?),
            "train" => self.train = Some(v.into()),
            "dev" => self.dev = Some(v.into()),
            "test" => self.test = Some(v.into()),
            "embeddings" => self.embeddings = Some(v.into()),
            "model-in" => self.model_in = Some(v.into()),
            "model-out" => self.model_out = Some(v.into()),
            "columns" => self.columns = Some(parse(k, v)?),
            "bidirectional" => self.bidirectional = Some(parse(k, v)?),
            "dropout" => self.dropout = Some(parse(k, v)?),
            "dev-fraction" => self.dev_fraction = Some(parse(k, v)?),
            "metric" => self.metric = Some(parse(k, v)?),
            "window" => self.window = Some(parse(k, v)?),
            "suffixes" => self.suffixes = Some(parse(k, v)?),
            "pos-features" => self.pos_features = Some(parse(k, v)?),
            "full-length" => self.full_length = Some(parse(k, v)?),
            "end-energy" => self.end_energy = Some(parse(k, v)?),
            "max-grad-norm" => self.max_grad_norm = Some(parse(k, v)?),
            "eval-every" => self.eval_every = Some(parse(k, v)?),
            "min-count" => self.min_count = Some(parse(k, v)?),
            "log" => self.log = Some(v.into()),
            _ => return Err(Error::config(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    /// Parse `key = value` lines; `#` starts a comment. Errors are
    /// configuration errors naming the line.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("config line {}: expected key = value", n + 1)))?;
            s.set(k, v.trim())
                .map_err(|e| Error::config(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(s)
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_config(&text)
    }

    /// Entries of `over` win.
    pub fn overlay(self, over: Settings) -> Settings {
        macro_rules! pick {
            ($($f:ident),*) => { Settings { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            task,
            variant,
            criterion,
            edge_strategy,
            hidden,
            embed_dim,
            lr,
            l2,
            epochs,
            seed,
            train,
            dev,
            test,
            embeddings,
            model_in,
            model_out,
            columns,
            bidirectional,
            dropout,
            dev_fraction,
            metric,
            window,
            suffixes,
            pos_features,
            full_length,
            end_energy,
            max_grad_norm,
            eval_every,
            min_count,
            log
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Paths {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub model_in: Option<PathBuf>,
    pub model_out: Option<PathBuf>,
    pub log: Option<PathBuf>,
}

/// Fully resolved configuration for one command.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub paths: Paths,
    pub columns: ColumnRoles,
    /// Whether `columns` was given explicitly rather than by the preset.
    pub columns_explicit: bool,
    pub dev_fraction: f64,
    pub min_count: usize,
}

impl RunConfig {
    /// Apply `s` on top of its task preset.
    pub fn resolve(s: &Settings) -> Result<Self> {
        let task = s.task.unwrap_or_default();
        let (mut m, mut t, preset_cols) = task.defaults();
        if let Some(v) = s.variant {
            m.variant = v;
        }
        m.edge_strategy = s.edge_strategy;
        m.bidirectional = s.bidirectional;
        macro_rules! over {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        over!(m.hidden, s.hidden);
        over!(m.embed_dim, s.embed_dim);
        over!(m.dropout, s.dropout);
        over!(m.features.window, s.window);
        over!(m.features.suffixes, s.suffixes);
        over!(m.features.pos, s.pos_features);
        over!(m.full_length, s.full_length);
        over!(m.end_energy, s.end_energy);
        over!(t.criterion, s.criterion);
        over!(t.lr, s.lr);
        over!(t.l2, s.l2);
        over!(t.epochs, s.epochs);
        over!(t.seed, s.seed);
        over!(t.metric, s.metric);
        over!(t.eval_every, s.eval_every);
        t.max_grad_norm = s.max_grad_norm;
        m.validate()?;
        t.validate()?;
        let dev_fraction = s.dev_fraction.unwrap_or(0.1);
        if !(0.0..1.0).contains(&dev_fraction) {
            return Err(Error::config(format!(
                "dev fraction must be in [0, 1), got {dev_fraction}"
            )));
        }
        let min_count = s.min_count.unwrap_or(1);
        if min_count == 0 {
            return Err(Error::config("min count must be at least 1"));
        }
        Ok(RunConfig {
            task,
            model: m,
            train: t,
            paths: Paths {
                train: s.train.clone(),
                dev: s.dev.clone(),
                test: s.test.clone(),
                embeddings: s.embeddings.clone(),
                model_in: s.model_in.clone(),
                model_out: s.model_out.clone(),
                log: s.log.clone(),
            },
            columns: s.columns.clone().unwrap_or(preset_cols),
            columns_explicit: s.columns.is_some(),
            dev_fraction,
            min_count,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_follow_the_published_settings() {
        for task in [Task::ChunkNp, Task::ChunkFull] {
            let (m, t, c) = task.defaults();
            assert_eq!(m.hidden, 300);
            assert_eq!(m.embed_dim, 100);
            assert!(m.features.pos && m.features.suffixes && m.features.window == 2);
            assert_eq!(c.to_string(), "word,pos,label");
            assert_eq!((t.lr, t.l2, t.epochs), (0.1, 1e-6, 40));
        }
        for task in [Task::Pos, Task::Segment] {
            let (m, t, _) = task.defaults();
            assert_eq!((m.hidden, m.embed_dim), (200, 100));
            assert_eq!(
                (t.lr, t.l2, t.epochs, t.criterion),
                (0.1, 1e-6, 40, Criterion::Probabilistic)
            );
        }
    }

    #[test]
    fn file_then_flags() {
        let file = Settings::parse_config(
            "# comment\ntask = chunk-np\nhidden = 7\nepochs=3 # trailing\nedge_strategy = bigram\n",
        )
        .unwrap();
        let flags = Settings {
            hidden: Some(9),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&file.overlay(flags)).unwrap();
        assert_eq!(cfg.task, Task::ChunkNp);
        assert_eq!(cfg.model.hidden, 9);
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.model.edge_strategy, Some(EdgeStrategyKind::Bigram));
        assert_eq!(cfg.train.metric, Metric::F1);
    }

    #[test]
    fn bad_config_lines() {
        let msg = |t: &str| match Settings::parse_config(t) {
            Err(Error::Config(m)) => m,
            other => panic!("expected a config error, got {other:?}"),
        };
        assert!(msg("hidden 3").starts_with("config line 1:"));
        assert!(msg("\ncolour = red").starts_with("config line 2:"));
        assert!(Settings::parse_config("epochs = many").is_err());
        let s = Settings {
            epochs: Some(0),
            ..Default::default()
        };
        assert!(matches!(RunConfig::resolve(&s), Err(Error::Config(_))));
    }
}
