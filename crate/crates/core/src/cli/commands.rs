use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::config::RunConfig;
use super::container::{load_model, save_model};
use super::synth::{generate, SynthConfig};
use crate::data::{
    build_vocab, parse_conll, split_holdout, write_conll, ColumnRole, ColumnRoles, Evaluator, LabeledSequence,
    RawSentence, VocabConfig,
};
use crate::embed::{load_pretrained, EdgeStrategyKind, FeatureConfig};
use crate::error::{Error, Result};
use crate::numkern::{grad_check, GradCheckConfig};
use crate::train::{assemble, evaluate, fit, Criterion, FitReport, Metric, Model, ModelSpec, TrainState, Variant};

const GRADCHECK_FIXTURE: &str = include_str!("../../fixtures/gradcheck.conll");

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| with_path(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| with_path(path, e))
}

pub fn read_corpus(path: &Path, roles: &ColumnRoles) -> Result<Vec<RawSentence>> {
    parse_conll(open(path)?, roles).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    })
}

fn require<'a>(p: &'a Option<std::path::PathBuf>, flag: &str, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Usage(format!("missing {flag}: {what}")))
}

fn labeled(model: &Model, sents: &[RawSentence], source: &str) -> Result<Vec<(LabeledSequence, Vec<String>)>> {
    sents
        .iter()
        .map(|s| {
            let gold = s
                .gold_labels
                .clone()
                .ok_or_else(|| Error::Usage(format!("{source} sentences need a label column")))?;
            Ok((model.features(s), gold))
        })
        .collect()
}

fn metric_name(m: Metric) -> &'static str {
    match m {
        Metric::Accuracy => "accuracy",
        Metric::F1 => "f1",
    }
}

#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub report: FitReport,
    pub dev_metric: f64,
    pub test_metric: Option<f64>,
}

/// Train, print the epoch log, write the best-dev model.
pub fn cmd_train(cfg: &RunConfig, out: &mut dyn Write) -> Result<TrainSummary> {
    let train_path = require(&cfg.paths.train, "--train", "path to the training corpus")?;
    let model_out = require(&cfg.paths.model_out, "--model-out", "where to write the trained model")?;
    let all = read_corpus(train_path, &cfg.columns)?;
    if all.is_empty() {
        return Err(Error::Usage(format!(
            "training corpus {} is empty",
            train_path.display()
        )));
    }
    let (train_raw, dev_raw) = match &cfg.paths.dev {
        Some(p) => (all, read_corpus(p, &cfg.columns)?),
        None if cfg.dev_fraction > 0.0 && all.len() >= 2 => split_holdout(&all, cfg.dev_fraction, cfg.train.seed),
        None => (all, Vec::new()),
    };
    let vocab = build_vocab(
        &train_raw,
        &VocabConfig {
            min_count: cfg.min_count,
            bigrams: cfg.model.edge_kind() == Some(EdgeStrategyKind::Bigram),
            require_labels: true,
        },
    )?;
    let mut model = assemble(cfg.model.clone(), vocab, cfg.train.seed)?;
    if let Some(p) = &cfg.paths.embeddings {
        let table = model
            .word_table()
            .ok_or_else(|| Error::config(format!("variant {} has no word embeddings", cfg.model.variant)))?;
        let words = model.vocab().words.clone();
        let n = load_pretrained(open(p)?, &words, &mut model.store, &table)?;
        writeln!(out, "pretrained vectors loaded={n}")?;
    }
    let train: Vec<LabeledSequence> = train_raw.iter().map(|s| model.features(s)).collect();
    if train.iter().any(|s| s.label_ids.is_none()) {
        return Err(Error::Usage("every training sentence needs a label".into()));
    }
    let dev = labeled(&model, &dev_raw, "dev")?;

    let mut log_file = cfg.paths.log.as_deref().map(create).transpose()?;
    let mut state = TrainState::new(model, cfg.train.seed);
    let mut io_err = None;
    let report = fit(&mut state, &train, &dev, &cfg.train, |e| {
        let r = writeln!(out, "{e}").and_then(|_| match log_file.as_mut() {
            Some(f) => writeln!(f, "{e}"),
            None => Ok(()),
        });
        if let Err(err) = r {
            io_err.get_or_insert(err);
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    if let Some(f) = log_file.as_mut() {
        f.flush()?;
    }
    let model = state.model;
    save_model(model_out, &model, &cfg.columns)?;
    let name = metric_name(cfg.train.metric);
    writeln!(
        out,
        "best_epoch={} dev_{name}={:.6}",
        report.best_epoch, report.best_dev
    )?;
    let test_metric = match &cfg.paths.test {
        Some(p) => {
            let test = labeled(&model, &read_corpus(p, &cfg.columns)?, "test")?;
            let m = evaluate(&model, &test, cfg.train.metric)?;
            writeln!(out, "test_{name}={m:.6}")?;
            Some(m)
        }
        None => None,
    };
    Ok(TrainSummary {
        dev_metric: report.best_dev,
        report,
        test_metric,
    })
}

/// Append a predicted-label column to every token row of the input.
pub fn cmd_tag(cfg: &RunConfig, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<usize> {
    let model_in = require(&cfg.paths.model_in, "--model-in", "the trained model file")?;
    let (model, model_cols) = load_model(model_in)?;
    let cols = if cfg.columns_explicit {
        cfg.columns.clone()
    } else {
        model_cols
    };
    if model.spec().features.pos && !cols.has(ColumnRole::Pos) {
        return Err(Error::config(format!(
            "the model uses POS features but columns {cols} have no pos column"
        )));
    }
    let sents = parse_conll(input, &cols)?;
    if model.spec().features.pos && sents.iter().any(|s| s.pos_tags.is_none()) {
        return Err(Error::config(
            "the model uses POS features but the input has no POS column",
        ));
    }
    for s in &sents {
        let pred = model.tag(s)?;
        for (row, y) in s.columns.iter().zip(&pred) {
            writeln!(out, "{} {y}", row.join(" "))?;
        }
        writeln!(out)?;
    }
    Ok(sents.len())
}

#[derive(Clone, Debug, Default)]
pub struct EvalReport {
    pub evaluator: Evaluator,
}

/// Score a file whose last two columns are gold and predicted labels.
pub fn cmd_eval(input: &mut dyn BufRead, out: &mut dyn Write) -> Result<EvalReport> {
    let sents = parse_conll(input, &"word".parse()?)?;
    let mut ev = Evaluator::new();
    for s in &sents {
        let n = s.columns[0].len();
        if n < 2 {
            return Err(Error::Usage(
                "eval needs at least two columns: gold label then predicted label last".into(),
            ));
        }
        let gold: Vec<&str> = s.columns.iter().map(|r| r[n - 2].as_str()).collect();
        let pred: Vec<&str> = s.columns.iter().map(|r| r[n - 1].as_str()).collect();
        ev.add(&gold, &pred)?;
    }
    writeln!(out, "tokens={} accuracy={:.2}", ev.tokens, 100.0 * ev.accuracy())?;
    let row = |out: &mut dyn Write, name: &str, c: &crate::data::PrfCounts| -> Result<()> {
        let p = c.prf();
        writeln!(
            out,
            "{name} precision={:.2} recall={:.2} f1={:.2} gold={} pred={} matched={}",
            100.0 * p.precision,
            100.0 * p.recall,
            100.0 * p.f1,
            c.gold,
            c.pred,
            c.matched
        )?;
        Ok(())
    };
    row(out, "overall", &ev.overall)?;
    for (kind, c) in &ev.per_kind {
        let name = if kind.is_empty() { "(untyped)" } else { kind.as_str() };
        row(out, name, c)?;
    }
    Ok(EvalReport { evaluator: ev })
}

#[derive(Clone, Copy, Debug)]
pub struct GradcheckOptions {
    pub tol: f64,
    pub h: f64,
    /// Test hook: perturb one analytic gradient coordinate.
    pub corrupt: bool,
    pub seed: u64,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        let d = GradCheckConfig::default();
        GradcheckOptions {
            tol: d.tol,
            h: d.h,
            corrupt: false,
            seed: 1,
        }
    }
}

/// Finite-difference check of every variant and criterion on the bundled
/// fixture (sentences of 1..=4 tokens, 3 labels). Edge-based variants are
/// checked with each edge strategy. Returns whether everything passed.
pub fn cmd_gradcheck(opts: &GradcheckOptions, out: &mut dyn Write) -> Result<bool> {
    let roles: ColumnRoles = "word,pos,label".parse()?;
    let sents = parse_conll(GRADCHECK_FIXTURE.as_bytes(), &roles)?;
    let vocab = build_vocab(
        &sents,
        &VocabConfig {
            bigrams: true,
            ..Default::default()
        },
    )?;
    let cfg = GradCheckConfig {
        h: opts.h,
        tol: opts.tol,
        ..Default::default()
    };
    let mut all_ok = true;
    for variant in Variant::ALL {
        let setups: Vec<(Option<EdgeStrategyKind>, bool, bool)> = if variant.is_edge_based() {
            vec![
                (Some(EdgeStrategyKind::Concat), false, false),
                (Some(EdgeStrategyKind::Bigram), true, false),
                (Some(EdgeStrategyKind::Feedforward), false, true),
            ]
        } else {
            vec![(None, false, !variant.is_tagger())]
        };
        for criterion in [Criterion::Probabilistic, Criterion::LargeMargin] {
            for &(strategy, full_length, end_energy) in &setups {
                let spec = ModelSpec {
                    variant,
                    hidden: 3,
                    embed_dim: 2,
                    features: FeatureConfig {
                        window: 1,
                        suffixes: true,
                        pos: true,
                    },
                    edge_strategy: strategy,
                    bidirectional: None,
                    dropout: 0.0,
                    full_length,
                    end_energy,
                };
                let mut model = assemble(spec, vocab.clone(), opts.seed)?;
                model.randomize(0.5, opts.seed);
                let seqs: Vec<LabeledSequence> = sents.iter().map(|s| model.features(s)).collect();
                let mut store = std::mem::take(&mut model.store);
                let first = store.ids().next().expect("every model has parameters");
                let report = grad_check(
                    &mut store,
                    |st| {
                        let mut total = 0.0;
                        for s in &seqs {
                            total += model.objective_on(st, s, criterion, 1e-3, None)?;
                        }
                        if opts.corrupt {
                            st.split().1.slot(first)[0] += 1e-2;
                        }
                        Ok(total)
                    },
                    &cfg,
                )?;
                let label = match strategy {
                    Some(k) => format!("{variant}/{}", format!("{k:?}").to_lowercase()),
                    None => variant.to_string(),
                };
                let ok = report.passed();
                all_ok &= ok;
                let coords: usize = report.slots.iter().map(|s| s.checked).sum();
                writeln!(
                    out,
                    "{label:<26} {criterion:<13} slots={:<3} coords={coords:<4} max_rel_err={:.3e} {}",
                    report.slots.len(),
                    report.max_rel_err(),
                    if ok { "ok" } else { "FAIL" }
                )?;
                for s in report.failures() {
                    let (k, a, n) = s.worst.unwrap_or((0, f64::NAN, f64::NAN));
                    writeln!(
                        out,
                        "  slot {}[{k}] rel_err={:.3e} analytic={a:.9e} numeric={n:.9e}",
                        s.name, s.max_rel_err
                    )?;
                }
            }
        }
    }
    writeln!(
        out,
        "gradcheck {} (tol {:e}, h {:e})",
        if all_ok { "passed" } else { "FAILED" },
        opts.tol,
        opts.h
    )?;
    Ok(all_ok)
}

/// Write `cfg.sentences` synthetic sentences to `train_out` and the next
/// `test_size` from the same stream to `test_out`.
pub fn cmd_synth(cfg: &SynthConfig, test_size: usize, train_out: &Path, test_out: Option<&Path>) -> Result<()> {
    if test_size > 0 && test_out.is_none() {
        return Err(Error::Usage(
            "missing --test-out: needed when --test-size is positive".into(),
        ));
    }
    let total = SynthConfig {
        sentences: cfg.sentences + test_size,
        ..*cfg
    };
    let all = generate(&total)?;
    let (train, test) = all.split_at(cfg.sentences);
    let roles: ColumnRoles = "word,label".parse()?;
    let mut w = create(train_out)?;
    write_conll(&mut w, train, &roles)?;
    w.flush()?;
    if let Some(p) = test_out {
        let mut w = create(p)?;
        write_conll(&mut w, test, &roles)?;
        w.flush()?;
    }
    Ok(())
}
