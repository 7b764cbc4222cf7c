use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tinyml_core::dataset::{self, synth, Dataset, Origin};
use tinyml_core::model::{EvalReport, ModelParams, Topology};
use tinyml_core::pipeline::{self, Features, ACCURACY_BAR, MAX_ACCURACY_DROP};
use tinyml_core::quant::{budget_report, calibrate, quantize, BudgetReport, QuantizedModel};
use tinyml_core::runtime::{blob, Deployment, StreamClassifier};
use tinyml_core::{DatasetKind, DspConfig, ProjectConfig, RuntimeConfig};

use crate::{input, BarFailure, BenchArgs, Cli, Command, ModelArgs, RunArgs, SynthArgs, TestArgs};

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth_cmd(a, cli.seed.unwrap_or(42)),
        Command::Ingest => ingest(&project(cli)?),
        Command::Split => split_cmd(&project(cli)?),
        Command::Features => features_cmd(&project(cli)?),
        Command::Train => train_cmd(&project(cli)?),
        Command::Test(a) => test_cmd(&project(cli)?, a),
        Command::Quantize(a) => quantize_cmd(&project(cli)?, a, true),
        Command::Export(a) => quantize_cmd(&project(cli)?, a, false),
        Command::Run(a) => run_cmd(a, cli.verbose),
        Command::Bench(a) => bench_cmd(cli, a),
    }
}

fn project(cli: &Cli) -> Result<ProjectConfig> {
    let cfg = ProjectConfig::load(&cli.config)?;
    let cfg = match cli.seed {
        Some(seed) => cfg.with_seed(seed),
        None => cfg,
    };
    if !cfg.dataset.is_dir() {
        bail!("dataset directory {} does not exist", cfg.dataset.display());
    }
    Ok(cfg)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// `target` expressed relative to `base` when it lies inside it.
fn relative_to(target: &Path, base: &Path) -> PathBuf {
    let abs = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    let (target, base) = (abs(target), abs(base));
    target
        .strip_prefix(&base)
        .map(Path::to_path_buf)
        .unwrap_or(target)
}

fn synth_cmd(a: &SynthArgs, seed: u64) -> Result<()> {
    if let Some(path) = &a.stream {
        return synth_stream_cmd(a, path, seed);
    }
    let out = a.out.as_ref().expect("clap requires --out without --stream");
    let recordings = synth::synth_corpus(a.kind, seed, a.count)?;
    let files = dataset::write_dataset_dir(out, &recordings)?;
    println!(
        "wrote {} {} recordings ({} per class) to {}",
        files.len(),
        a.kind,
        a.count,
        out.display()
    );
    if let Some(project_path) = &a.project {
        let base = project_path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let mut cfg = ProjectConfig::new(a.kind, relative_to(out, base));
        cfg.split.seed = seed;
        cfg.train.seed = seed;
        write(project_path, cfg.to_toml())?;
        println!("wrote project {}", project_path.display());
    }
    Ok(())
}

fn synth_stream_cmd(a: &SynthArgs, path: &Path, seed: u64) -> Result<()> {
    let kind = a.kind;
    let mut inserts = Vec::new();
    for (i, spec) in a.inserts.iter().enumerate() {
        let (label, at) = spec
            .split_once('@')
            .with_context(|| format!("--insert {spec:?}: expected LABEL@SECONDS"))?;
        let at: f64 = at
            .parse()
            .with_context(|| format!("--insert {spec:?}: bad time"))?;
        if !(at >= 0.0 && at < a.seconds) {
            bail!("--insert {spec:?}: time must lie in [0, {})", a.seconds);
        }
        // Fresh seeds so inserted recordings never duplicate corpus ones.
        let insert_seed = seed.wrapping_add(1_000_003 * (i as u64 + 1));
        // Keyword inserts are bare utterances; the stream supplies the noise.
        let rec = match kind {
            DatasetKind::Gesture => synth::synth_gesture(label, insert_seed, 1)?.remove(0),
            DatasetKind::Keyword if label == kind.idle_label() => synth::synth_keyword(label, insert_seed, 1)?.remove(0),
            DatasetKind::Keyword => synth::keyword_utterance(label, insert_seed)?,
        };
        inserts.push(((at * kind.sample_rate()).round() as usize, rec));
    }
    let refs: Vec<(usize, &tinyml_core::Recording)> = inserts.iter().map(|(o, r)| (*o, r)).collect();
    let background = a.background.unwrap_or_else(|| synth::stream_background_rms(kind));
    let stream = synth::synth_stream(kind, seed, a.seconds, background, &refs)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    dataset::write_recording(path, &stream)?;
    println!(
        "wrote {:.2} s {kind} stream with {} insert(s) to {}",
        a.seconds,
        inserts.len(),
        path.display()
    );
    Ok(())
}

fn ingest(cfg: &ProjectConfig) -> Result<()> {
    let ds = pipeline::load_dataset(cfg)?;
    println!("{} dataset at {}", cfg.kind, cfg.dataset.display());
    println!(
        "window {} samples, stride {}, {} channel(s) at {} Hz",
        cfg.kind.window_len(),
        cfg.kind.stride(),
        cfg.kind.channels(),
        cfg.kind.sample_rate()
    );
    print_counts(&ds);
    Ok(())
}

fn print_counts(ds: &Dataset) {
    for (label, n) in ds.labels.iter().zip(ds.count_per_label()) {
        println!("{label:>12} {n:>6} windows");
    }
    println!("{:>12} {:>6} windows", "total", ds.len());
}

#[derive(Serialize)]
struct SplitFile<'a> {
    train_fraction: f64,
    seed: u64,
    labels: &'a [String],
    train: Vec<&'a Origin>,
    test: Vec<&'a Origin>,
}

fn split_cmd(cfg: &ProjectConfig) -> Result<()> {
    let ds = pipeline::load_dataset(cfg)?;
    let (train, test) = pipeline::split_dataset(cfg, &ds)?;
    let file = SplitFile {
        train_fraction: cfg.split.train_fraction,
        seed: cfg.split.seed,
        labels: &ds.labels,
        train: train.windows.iter().map(|w| &w.origin).collect(),
        test: test.windows.iter().map(|w| &w.origin).collect(),
    };
    let path = cfg.artifacts().split();
    write(&path, serde_json::to_string_pretty(&file)?)?;
    println!("{:>12} {:>6} {:>6}", "label", "train", "test");
    for ((label, a), b) in ds.labels.iter().zip(train.count_per_label()).zip(test.count_per_label()) {
        println!("{label:>12} {a:>6} {b:>6}");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn features(cfg: &ProjectConfig) -> Result<Features> {
    let ds = pipeline::load_dataset(cfg)?;
    Ok(pipeline::extract_features(cfg, &ds)?)
}

fn features_cmd(cfg: &ProjectConfig) -> Result<()> {
    let f = features(cfg)?;
    let art = cfg.artifacts();
    art.create()?;
    for (m, path) in [(&f.train, art.train_features()), (&f.test, art.test_features())] {
        let mut buf = Vec::new();
        m.write_csv(&mut buf)?;
        write(&path, buf)?;
        println!("{} rows x {} features -> {}", m.len(), m.width(), path.display());
    }
    write(&art.features_layout(), f.train.layout_text())?;
    println!("layout {}", f.train.layout_id);
    Ok(())
}

fn write_report(cfg: &ProjectConfig, report: &EvalReport) -> Result<()> {
    let art = cfg.artifacts();
    write(&art.report_text(), report.to_string())?;
    write(&art.report_json(), report.to_json())?;
    Ok(())
}

fn accuracy_gate(report: &EvalReport) -> Result<()> {
    if report.accuracy < ACCURACY_BAR {
        return Err(BarFailure(format!(
            "test accuracy {:.4} is below the {ACCURACY_BAR:.2} bar",
            report.accuracy
        ))
        .into());
    }
    Ok(())
}

fn train_cmd(cfg: &ProjectConfig) -> Result<()> {
    let f = features(cfg)?;
    let (params, history) = pipeline::train_model(cfg, &f)?;
    let report = pipeline::evaluate_model(cfg, &params, &f.test)?;
    let art = cfg.artifacts();
    write(&art.model(), params.to_json()?)?;
    write(&art.history(), history.to_csv())?;
    write_report(cfg, &report)?;
    let last = history.epochs.last().expect("at least one epoch");
    println!(
        "trained {:?} for {} epochs: loss {:.4}, train accuracy {:.4}, {} training windows below {:.2} confidence",
        params.topology.dims(),
        last.epoch,
        last.loss,
        last.accuracy,
        history.low_confidence,
        history.confidence_threshold
    );
    print!("{report}");
    println!("wrote {}", art.model().display());
    accuracy_gate(&report)
}

fn load_model(cfg: &ProjectConfig, path: Option<&PathBuf>) -> Result<(PathBuf, ModelParams)> {
    let path = path.cloned().unwrap_or_else(|| cfg.artifacts().model());
    let text = fs::read_to_string(&path)
        .with_context(|| format!("reading model {} (run `tinyml train` first)", path.display()))?;
    let params = ModelParams::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    pipeline::check_layout(&params, &cfg.dsp)?;
    Ok((path, params))
}

fn test_cmd(cfg: &ProjectConfig, a: &TestArgs) -> Result<()> {
    let (_, params) = load_model(cfg, a.model.as_ref())?;
    let f = features(cfg)?;
    let min_conf = a.min_confidence.unwrap_or(f64::from(cfg.runtime.min_confidence));
    let report = tinyml_core::model::evaluate(&params, &f.test, min_conf)?;
    write_report(cfg, &report)?;
    print!("{report}");
    accuracy_gate(&report)
}

fn quantize_cmd(cfg: &ProjectConfig, a: &ModelArgs, gated: bool) -> Result<()> {
    let (_, params) = load_model(cfg, a.model.as_ref())?;
    let f = features(cfg)?;
    let qm = pipeline::quantize_model(&params, &f)?;
    let out = a.out.clone().unwrap_or_else(|| cfg.artifacts().blob());
    let bytes = pipeline::encode_blob(cfg, &qm)?;
    write(&out, &bytes)?;
    println!("wrote {} ({} bytes)", out.display(), bytes.len());
    if !gated {
        return Ok(());
    }
    let summary = pipeline::summarize_quantization(cfg, &params, &qm, &f.test)?;
    write(&cfg.artifacts().quant_report(), summary.to_json())?;
    print!("{}", summary.budget);
    println!(
        "accuracy float {:.4}, int8 {:.4}, drop {:.2} points, argmax agreement {:.4}",
        summary.float_accuracy,
        summary.quantized_accuracy,
        100.0 * summary.accuracy_drop,
        summary.argmax_agreement
    );
    budget_gate(&summary.budget)?;
    if !summary.within_drop() {
        return Err(BarFailure(format!(
            "quantization costs {:.2} accuracy points (limit {:.0})",
            100.0 * summary.accuracy_drop,
            100.0 * MAX_ACCURACY_DROP
        ))
        .into());
    }
    Ok(())
}

fn budget_gate(b: &BudgetReport) -> Result<()> {
    if !b.fits {
        return Err(BarFailure(format!(
            "model does not fit: flash {}/{} B, ram {}/{} B",
            b.flash_bytes, b.flash_budget, b.ram_bytes, b.ram_budget
        ))
        .into());
    }
    Ok(())
}

fn run_cmd(a: &RunArgs, verbose: bool) -> Result<()> {
    let deployment = blob::load_blob(&a.blob)?;
    let kind = deployment.kind();
    let mut rt = deployment.runtime;
    if let Some(c) = a.min_confidence {
        rt.min_confidence = c;
    }
    let mut sc = StreamClassifier::with_config(deployment, rt)?;
    if a.chunk > sc.window_len() {
        bail!("--chunk {} exceeds one window ({} samples)", a.chunk, sc.window_len());
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    input::for_each_chunk(a.input.as_deref(), kind, a.chunk, |chunk| {
        let mut lines = Vec::new();
        let events = sc.push_samples_with(chunk, |w| {
            if verbose {
                lines.push(w.to_string());
            }
        })?;
        for l in lines {
            writeln!(out, "{l}")?;
        }
        for e in events {
            writeln!(out, "{e}")?;
        }
        Ok(())
    })?;
    out.flush()?;
    Ok(())
}

fn random_model(dims: &[usize], kind: DatasetKind) -> Result<(QuantizedModel, DspConfig)> {
    if dims.len() < 2 {
        bail!("--dims needs at least an input and an output width");
    }
    let topology = Topology::new(dims[0], dims[1..dims.len() - 1].to_vec(), dims[dims.len() - 1])?;
    let params = ModelParams::init(&topology, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows: Vec<Vec<f64>> = (0..32)
        .map(|_| (0..dims[0]).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect())
        .collect();
    let qm = quantize(&params, &calibrate(&params, &rows)?)?;
    Ok((qm, DspConfig::default_for(kind)))
}

fn time_per_call(iterations: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let start = Instant::now();
    for _ in 0..iterations {
        f()?;
    }
    Ok(start.elapsed().as_secs_f64() * 1e6 / iterations.max(1) as f64)
}

fn bench_cmd(cli: &Cli, a: &BenchArgs) -> Result<()> {
    let (qm, dsp, rt, label) = match &a.dims {
        Some(dims) => {
            let (qm, dsp) = random_model(dims, a.kind)?;
            (qm, dsp, RuntimeConfig::default(), "random model".to_string())
        }
        None => {
            let path = match &a.blob {
                Some(p) => p.clone(),
                None => ProjectConfig::load(&cli.config)?.artifacts().blob(),
            };
            let Deployment { model, dsp, runtime } = blob::load_blob(&path)?;
            (model, dsp, runtime, path.display().to_string())
        }
    };
    let report = budget_report(&qm, &dsp, &rt);
    println!("{label}: {:?}", qm.topology.dims());
    print!("{report}");

    let input: Vec<f64> = (0..qm.input_dim()).map(|i| (i as f64 * 0.37).sin()).collect();
    let infer = time_per_call(a.iterations, || {
        qm.forward(&input)?;
        Ok(())
    })?;
    println!("q_forward      {infer:>10.1} us/call");
    if a.dims.is_none() {
        let kind = dsp.kind();
        let extractor = dsp.extractor()?;
        let window: Vec<f64> = (0..kind.channels() * kind.window_len())
            .map(|i| (i as f64 * 0.011).sin() * 0.3)
            .collect();
        let feat = time_per_call(a.iterations, || {
            extractor.extract_raw(&window, kind.channels())?;
            Ok(())
        })?;
        println!("dsp            {feat:>10.1} us/window");
    }
    budget_gate(&report)
}
