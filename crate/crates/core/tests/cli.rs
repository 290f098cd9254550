use std::fs;
use std::path::Path;

use edgecrf::cli::run;

const CHUNK10: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/chunk10.conll");
const EVAL_KNOWN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/eval_known.txt");

fn edgecrf(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["edgecrf"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small chunking model trained for a few epochs; returns its path.
fn train_small(dir: &Path) -> std::path::PathBuf {
    let model = dir.join("m.bin");
    let (code, out, err) = edgecrf(&[
        "train",
        "--task",
        "chunk-np",
        "--hidden",
        "8",
        "--embed-dim",
        "4",
        "--epochs",
        "3",
        "--train",
        CHUNK10,
        "--dev-fraction",
        "0",
        "--model-out",
        p(&model),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().filter(|l| l.starts_with("epoch=")).count(), 3);
    model
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(edgecrf(&[]).0, 2);
    let (code, _, err) = edgecrf(&["train", "--model-out", "/tmp/x"]);
    assert_eq!(code, 2);
    assert!(err.contains("missing --train"), "{err}");
    let (code, _, err) = edgecrf(&["train", "--train", CHUNK10, "--lr", "-1", "--model-out", "/tmp/x"]);
    assert_eq!(code, 2, "{err}");
    assert_eq!(edgecrf(&["train", "--variant", "nonsense"]).0, 2);
}

#[test]
fn missing_files_exit_1() {
    let (code, _, err) = edgecrf(&["tag", "--model-in", "/nonexistent/model.bin", CHUNK10]);
    assert_eq!(code, 1);
    assert!(err.contains("/nonexistent/model.bin"), "{err}");
    assert_eq!(edgecrf(&["eval", "/nonexistent/file"]).0, 1);
}

#[test]
fn eval_known_answer() {
    let (code, out, _) = edgecrf(&["eval", EVAL_KNOWN]);
    assert_eq!(code, 0);
    assert!(out.contains("tokens=4 accuracy=50.00"), "{out}");
    assert!(
        out.contains("overall precision=50.00 recall=25.00 f1=33.33 gold=4 pred=2 matched=1"),
        "{out}"
    );
}

#[test]
fn tag_appends_one_column() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_small(dir.path());
    let tagged = dir.path().join("tagged.conll");
    let (code, _, err) = edgecrf(&["tag", "--model-in", p(&model), CHUNK10, "--output", p(&tagged)]);
    assert_eq!(code, 0, "{err}");
    let input = fs::read_to_string(CHUNK10).unwrap();
    let output = fs::read_to_string(&tagged).unwrap();
    let (a, b): (Vec<&str>, Vec<&str>) = (input.trim_end().lines().collect(), output.trim_end().lines().collect());
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        if x.trim().is_empty() {
            assert!(y.trim().is_empty());
        } else {
            assert!(y.starts_with(x));
            let extra = y[x.len()..].trim();
            assert!(["B-NP", "I-NP", "O"].contains(&extra), "{extra}");
        }
    }
    // the tagged file is valid eval input
    assert_eq!(edgecrf(&["eval", p(&tagged)]).0, 0);
}

#[test]
fn tag_handles_oov_and_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_small(dir.path());
    let oov = dir.path().join("oov.conll");
    fs::write(&oov, "Zyxx NN\nquorbled VBD\nfrom IN\nnowhere RB\n").unwrap();
    let (code, out, err) = edgecrf(&["tag", "--model-in", p(&model), "--columns", "word,pos", p(&oov)]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().filter(|l| !l.is_empty()).count(), 4);

    let empty = dir.path().join("empty.conll");
    fs::write(&empty, "").unwrap();
    let (code, out, _) = edgecrf(&["tag", "--model-in", p(&model), p(&empty)]);
    assert_eq!(code, 0);
    assert!(out.is_empty());

    // the chunking preset uses POS features, so a word-only file is refused
    let (code, _, err) = edgecrf(&["tag", "--model-in", p(&model), "--columns", "word", p(&oov)]);
    assert_eq!(code, 2);
    assert!(err.contains("POS"), "{err}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let model = dir.path().join("m.bin");
    fs::write(
        &cfg,
        format!(
            "# small run\ntask = chunk-np\nhidden = 6\nembed-dim = 4\nepochs = 5\ntrain = {CHUNK10}\nmodel-out = {}\n",
            p(&model)
        ),
    )
    .unwrap();
    let (code, out, err) = edgecrf(&["train", "--config", p(&cfg), "--epochs", "2"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().filter(|l| l.starts_with("epoch=")).count(), 2);
    assert!(model.exists());

    fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(edgecrf(&["train", "--config", p(&cfg)]).0, 2);
}

#[test]
fn gradcheck_detects_a_corrupted_gradient() {
    let (code, out, _) = edgecrf(&["gradcheck", "--corrupt-gradient"]);
    assert_eq!(code, 1);
    assert!(out.contains("FAIL"), "{out}");
}

#[test]
fn synth_writes_train_and_test() {
    let dir = tempfile::tempdir().unwrap();
    let (tr, te) = (dir.path().join("tr.conll"), dir.path().join("te.conll"));
    let (code, _, err) = edgecrf(&[
        "synth",
        "--seed",
        "3",
        "--size",
        "20",
        "--test-size",
        "5",
        "--train-out",
        p(&tr),
        "--test-out",
        p(&te),
    ]);
    assert_eq!(code, 0, "{err}");
    let count = |f: &Path| {
        fs::read_to_string(f)
            .unwrap()
            .split("\n\n")
            .filter(|s| !s.trim().is_empty())
            .count()
    };
    assert_eq!(count(&tr), 20);
    assert_eq!(count(&te), 5);
}
