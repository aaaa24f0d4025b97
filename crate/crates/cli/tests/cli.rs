use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use deepmstm::data::{ingest_csv, synth_generate, EventCalendar, SynthSpec};
use tempfile::TempDir;

const SPEC: &str = r#"
start = "2021-01-01"
length = 120
coupling = 0.9
shared_trend = { kind = "knots", knots = [[0, 10], [60, 14], [120, 12]] }

[[series]]
id = "a"
noise_sigma = 0.1
seasons = [{ period = 7, amplitude = 1.0 }]

[[series]]
id = "b"
noise_sigma = 0.1
lead = 2

[[events]]
name = "month_start"
rule = { kind = "month_start" }
amplitudes = [2.0, 0.0]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deepmstm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("spec.toml"), SPEC).unwrap();
        let o = run(&["synth", p(&dir.path().join("spec.toml")), "--seed", "3", "--out", p(&dir.path().join("data"))]);
        assert!(o.status.success(), "{}", stderr(&o));
        Fixture { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    /// Writes a run configuration with relative paths; `extra` is appended.
    fn config(&self, name: &str, out: &str, extra: &str) -> PathBuf {
        let text = format!(
            r#"[data]
series = "data/series.csv"
events = "data/events.csv"
target = "a"

[model]
lag = 7
conv1d_kernels = 2
conv2d_kernels = 2
hidden = 4
seasonal_hidden = 4

[train]
split_date = "2021-04-10"
seed = 5
epochs = 15

[output]
dir = "{out}"
{extra}"#
        );
        let path = self.path(name);
        fs::write(&path, text).unwrap();
        path
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_files_reingest_exactly() {
    let fx = Fixture::new();
    let spec: SynthSpec = toml::from_str(SPEC).unwrap();
    let expected = synth_generate(&spec, 3).unwrap();
    let frame = ingest_csv(fx.path("data/series.csv")).unwrap();
    assert_eq!(frame, expected.frame);
    let calendar = EventCalendar::from_csv(fx.path("data/events.csv")).unwrap();
    assert_eq!(calendar.entries().count(), expected.calendar.entries().count());
    for (x, y) in calendar.entries().zip(expected.calendar.entries()) {
        assert_eq!(x, y);
    }
    let truth = fs::read_to_string(fx.path("data/truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 1 + 2 * 120);
}

#[test]
fn fit_is_byte_identical_and_outputs_reingest() {
    let fx = Fixture::new();
    let config = fx.config("run.toml", "out1", "");
    let config2 = fx.config("run2.toml", "out2", "");
    for c in [&config, &config2] {
        let o = run(&["fit", p(c)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let params = fs::read(fx.path("out1/params.txt")).unwrap();
    assert_eq!(params, fs::read(fx.path("out2/params.txt")).unwrap());
    assert_eq!(
        fs::read(fx.path("out1/train_report.jsonl")).unwrap(),
        fs::read(fx.path("out2/train_report.jsonl")).unwrap()
    );
    assert_eq!(
        fs::read_to_string(fx.path("out1/train_report.jsonl")).unwrap().lines().count(),
        15
    );
    assert_eq!(fs::read_to_string(fx.path("out1/config.toml")).unwrap(), fs::read_to_string(&config).unwrap());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(fx.path("out1/run.json")).unwrap()).unwrap();
    assert_eq!(summary["epochs_run"], 15);

    let o = run(&["decompose", p(&config)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dec = ingest_csv(fx.path("out1/decomposition.csv")).unwrap();
    assert_eq!(dec.series_ids(), ["truth", "d", "s", "e", "forecast"]);
    assert_eq!(dec.dates()[0].to_string(), "2021-04-11");
    assert_eq!(dec.len(), 20);
    let data = ingest_csv(fx.path("data/series.csv")).unwrap();
    for i in 0..dec.len() {
        let (d, s, e) = (dec.series(1)[i], dec.series(2)[i], dec.series(3)[i]);
        assert_eq!((d + s + e).to_bits(), dec.series(4)[i].to_bits(), "row {i}");
        assert_eq!(dec.series(0)[i], data.series(0)[100 + i]);
    }
    // Event days carry a nonzero event column and nothing else does.
    for (i, date) in dec.dates().iter().enumerate() {
        use chrono::Datelike;
        assert_eq!(date.day() == 1, dec.series(3)[i] != 0.0, "{date}");
    }

    let o = run(&["forecast", p(&config)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fc = ingest_csv(fx.path("out1/forecast.csv")).unwrap();
    assert_eq!(fc.series_ids(), ["forecast", "truth"]);
    assert_eq!(fc.series(0), dec.series(4));
    assert_eq!(fc.series(1), dec.series(0));
}

#[test]
fn forecast_modes_and_horizons() {
    let fx = Fixture::new();
    let config = fx.config("run.toml", "out", "");
    assert!(run(&["fit", p(&config)]).status.success());

    assert!(run(&["forecast", p(&config), "--horizon", "0"]).status.success());
    assert_eq!(fs::read_to_string(fx.path("out/forecast.csv")).unwrap(), "date,forecast,truth\n");

    let o = run(&["forecast", p(&config), "--mode", "recursive", "--horizon", "30"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(fx.path("out/forecast.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 31);
    assert!(lines[1].starts_with("2021-04-11,"));
    // The data ends on 2021-04-30; later rows have no truth.
    assert!(lines[20].starts_with("2021-04-30,") && !lines[20].ends_with(','));
    assert!(lines[21].starts_with("2021-05-01,") && lines[21].ends_with(','));

    let o = run(&["forecast", p(&config), "--horizon", "30"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn ablate_writes_tables() {
    let fx = Fixture::new();
    let config = fx.config("run.toml", "out", "[eval]\nseeds = [1, 2]\n");
    let o = run(&["ablate", p(&config)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(fx.path("out/ablation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    assert!(csv.starts_with("data,label,seed,rmse,rrmse"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(fx.path("out/ablation.json")).unwrap()).unwrap();
    let arms = json["arms"].as_array().unwrap();
    assert_eq!(arms.len(), 3);
    assert_eq!(arms[2]["label"], "model3");
    assert_eq!(json["data"], "series");
}

#[test]
fn exit_codes() {
    let fx = Fixture::new();

    // Missing data file: data error naming the path.
    let config = fx.config("run.toml", "out", "");
    fs::rename(fx.path("data/series.csv"), fx.path("data/moved.csv")).unwrap();
    let o = run(&["fit", p(&config)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("series.csv"), "{}", stderr(&o));
    fs::rename(fx.path("data/moved.csv"), fx.path("data/series.csv")).unwrap();

    // Malformed CSV: data error with the row.
    fs::write(fx.path("bad.csv"), "date,a\n2021-01-01,1.0\n2021-01-02,abc\n").unwrap();
    let bad = fx.path("bad.toml");
    fs::write(
        &bad,
        "[data]\nseries = \"bad.csv\"\ntarget = \"a\"\n[train]\nsplit_date = \"2021-01-01\"\n[output]\ndir = \"o\"\n",
    )
    .unwrap();
    let o = run(&["fit", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("abc"), "{}", stderr(&o));

    // Unknown field: configuration error naming it.
    let typo = fx.config("typo.toml", "out", "[forecast]\nhorizonn = 3\n");
    let o = run(&["fit", p(&typo)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("horizonn"), "{}", stderr(&o));

    // Unknown target series.
    let text = fs::read_to_string(&config).unwrap().replace("target = \"a\"", "target = \"zz\"");
    fs::write(fx.path("target.toml"), text).unwrap();
    let o = run(&["fit", p(&fx.path("target.toml"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("zz"));

    // Forecasting before fitting.
    let o = run(&["forecast", p(&config)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("params.txt"));

    // Gradient check failure is numerical.
    let o = run(&["verify-grad", "--tol", "0"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["verify-grad", "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));

    // Usage error.
    assert_eq!(run(&["fit"]).status.code(), Some(1));
}

#[test]
fn verify_grad_reads_a_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.toml");
    fs::write(
        &model,
        "num_series = 3\ntarget = 1\nlag = 4\nconv1d_kernels = 2\nconv2d_kernels = 1\nhidden = 2\nseasonal_hidden = 2\nfourier = [{ period = 5, terms = 1 }]\nevent_types = 2\n",
    )
    .unwrap();
    let o = run(&["verify-grad", "--model", p(&model)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("max relative error"));
}
