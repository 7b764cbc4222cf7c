//! The ten acceptance criteria, each reported as one PASS/FAIL line.
//!
//! Pipeline criteria drive the `tinyml` binary exactly as a user would;
//! numeric oracles call the library directly.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tinyml_core::dataset::{split, Dataset, LabeledWindow, Origin, SplitSpec};
use tinyml_core::dsp::Fft;
use tinyml_core::model::{batch_loss, gradients, Batch, ModelParams, Topology};
use tinyml_core::pipeline;
use tinyml_core::quant::quantize_tensor;
use tinyml_core::runtime::{blob, BlobError};
use tinyml_core::{DatasetKind, ProjectConfig};

const ACCURACY_BAR: f64 = 0.90;
const MIN_CONFIDENCE: f64 = 0.6;
const GESTURE_TIME_LIMIT: Duration = Duration::from_secs(60);
const FFT_TOL: f64 = 1e-6;
const PARSEVAL_REL_TOL: f64 = 1e-6;
const FD_EPS: f64 = 1e-4;
const GRAD_REL_TOL: f64 = 1e-4;
const GRAD_REL_FLOOR: f64 = 1e-12;
const MAX_DROP_POINTS: f64 = 2.0;
const MIN_AGREEMENT: f64 = 0.98;
const FLASH_BUDGET: usize = 1_048_576;
const RAM_BUDGET: usize = 262_144;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn(&Context) -> Outcome);

fn tinyml(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tinyml"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = tinyml(dir, args);
    if out.status.code() != Some(0) {
        return Err(format!(
            "`tinyml {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn json(path: &Path) -> Result<serde_json::Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn num(v: &serde_json::Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or(f64::NAN)
}

/// A synthesized, trained and quantized project directory.
struct Project {
    dir: PathBuf,
    train_time: Duration,
}

impl Project {
    fn build(root: &Path, kind: &str) -> Result<Project, String> {
        let dir = root.join(kind);
        fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        ok(&dir, &["synth", kind, "--out", "data", "--count", "40", "--seed", "42", "--project", "project.toml"])?;
        let start = Instant::now();
        ok(&dir, &["train"])?;
        ok(&dir, &["test"])?;
        let train_time = start.elapsed();
        ok(&dir, &["quantize"])?;
        Ok(Project { dir, train_time })
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.dir.join("build").join(name)
    }
}

struct Context {
    _tmp: tempfile::TempDir,
    root: PathBuf,
    gesture: Result<Project, String>,
    keyword: Result<Project, String>,
}

fn project(p: &Result<Project, String>) -> Result<&Project, String> {
    p.as_ref().map_err(|e| format!("project setup failed: {e}"))
}

fn accuracy_check(p: &Project) -> Outcome {
    let report = json(&p.artifact("report.json"))?;
    let acc = num(&report, "accuracy");
    let min_conf = num(&report, "min_confidence");
    if (min_conf - MIN_CONFIDENCE).abs() > 1e-6 {
        return Err(format!("evaluated at min_confidence {min_conf}"));
    }
    if acc.is_nan() || acc < ACCURACY_BAR {
        return Err(format!("accuracy {acc:.4} < {ACCURACY_BAR}"));
    }
    Ok(format!("accuracy {acc:.4} at min_confidence {min_conf:.1}"))
}

fn criterion_1(cx: &Context) -> Outcome {
    let p = project(&cx.gesture)?;
    let detail = accuracy_check(p)?;
    if p.train_time > GESTURE_TIME_LIMIT {
        return Err(format!("{detail}, but train+test took {:?}", p.train_time));
    }
    Ok(format!("{detail}, train+test {:.1} s", p.train_time.as_secs_f64()))
}

fn event_lines(stdout: &str) -> Vec<Vec<String>> {
    stdout
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

fn criterion_2(cx: &Context) -> Outcome {
    let p = project(&cx.keyword)?;
    let detail = accuracy_check(p)?;
    ok(&p.dir, &["synth", "keyword", "--stream", "red.wav", "--seconds", "10", "--insert", "red@2"])?;
    ok(&p.dir, &["synth", "keyword", "--stream", "noise.wav", "--seconds", "30", "--seed", "7"])?;
    let red = event_lines(&ok(&p.dir, &["run", "build/model.tnym", "red.wav", "--chunk", "4000"])?);
    let noise = event_lines(&ok(&p.dir, &["run", "build/model.tnym", "noise.wav", "--chunk", "4000"])?);
    if red.len() != 1 || red[0].get(3).map(String::as_str) != Some("LED_RED") {
        return Err(format!("{detail}; red stream events {red:?}"));
    }
    let ts: usize = red[0][0].parse().map_err(|_| "bad timestamp".to_string())?;
    let (lo, hi) = (2 * 16_000, 2 * 16_000 + 16_000 + 4 * 4_000);
    if !(lo..=hi).contains(&ts) {
        return Err(format!("LED_RED at sample {ts}, outside [{lo}, {hi}]"));
    }
    if !noise.is_empty() {
        return Err(format!("{detail}; noise stream produced {noise:?}"));
    }
    Ok(format!("{detail}; one LED_RED at sample {ts} (conf {}); 0 events in 30 s of noise", red[0][2]))
}

fn criterion_3(_: &Context) -> Outcome {
    let labels: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    let windows: Vec<LabeledWindow> = (0..300)
        .map(|i| LabeledWindow {
            label: labels[i % 3].clone(),
            channels: 1,
            data: vec![i as f64; 4],
            origin: Origin {
                source_id: format!("r{i}"),
                start: 0,
            },
        })
        .collect();
    let ds = Dataset::new(DatasetKind::Keyword, labels.clone(), windows).map_err(|e| e.to_string())?;
    let spec = SplitSpec {
        train_fraction: 0.8,
        seed: 42,
    };
    let (train, test) = split(&ds, &spec).map_err(|e| e.to_string())?;
    if train.count_per_label() != vec![80; 3] || test.count_per_label() != vec![20; 3] {
        return Err(format!("{:?} / {:?}", train.count_per_label(), test.count_per_label()));
    }
    let (train2, test2) = split(&ds, &spec).map_err(|e| e.to_string())?;
    if train2 != train || test2 != test {
        return Err("same seed gave a different split".into());
    }
    let (other, _) = split(&ds, &SplitSpec { seed: 43, ..spec }).map_err(|e| e.to_string())?;
    if other == train {
        return Err("different seed gave the same split".into());
    }
    Ok("80/20 per label for 3 x 100 windows, identical under a fixed seed".into())
}

fn criterion_4(_: &Context) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut worst_parseval) = (0.0f64, 0.0f64);
    for p in 1..=8 {
        let n = 1usize << p;
        let plan = Fft::new(n).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let x: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let dft: Vec<Complex64> = (0..n)
                .map(|k| {
                    x.iter()
                        .enumerate()
                        .map(|(t, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / n as f64))
                        .sum()
                })
                .collect();
            let mut y = x.clone();
            plan.process(&mut y);
            for (a, b) in y.iter().zip(&dft) {
                worst = worst.max((a - b).norm());
            }
            let e_t: f64 = x.iter().map(|v| v.norm_sqr()).sum();
            let e_f: f64 = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
            worst_parseval = worst_parseval.max((e_t - e_f).abs() / e_t);
        }
    }
    if worst >= FFT_TOL || worst_parseval > PARSEVAL_REL_TOL {
        return Err(format!("max error {worst:e}, Parseval {worst_parseval:e}"));
    }
    Ok(format!("n = 2..256, 100 vectors each: max error {worst:.1e}, Parseval {worst_parseval:.1e}"))
}

fn criterion_5(_: &Context) -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in 0..20u64 {
        let t = Topology::new(5, vec![3], 2).map_err(|e| e.to_string())?;
        let mut params = ModelParams::init(&t, seed).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        for l in &mut params.layers {
            l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        }
        let batch = Batch {
            inputs: (0..8).map(|_| (0..5).map(|_| rng.random_range(-2.0..2.0)).collect()).collect(),
            labels: (0..8).map(|i| i % 2).collect(),
        };
        let (_, grads) = gradients(&params, &batch);
        for (l, g) in grads.iter().enumerate() {
            let nw = g.weights.len();
            for (k, &analytic) in g.weights.iter().chain(&g.bias).enumerate() {
                let bump = |delta: f64| {
                    let mut q = params.clone();
                    let layer = &mut q.layers[l];
                    if k < nw {
                        layer.weights[k] += delta;
                    } else {
                        layer.bias[k - nw] += delta;
                    }
                    batch_loss(&q, &batch)
                };
                let fd = (bump(FD_EPS) - bump(-FD_EPS)) / (2.0 * FD_EPS);
                let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(GRAD_REL_FLOOR);
                worst = worst.max(rel);
                count += 1;
            }
        }
    }
    if worst >= GRAD_REL_TOL {
        return Err(format!("max relative error {worst:e}"));
    }
    Ok(format!("{count} parameters over 20 nets: max relative error {worst:.1e}"))
}

fn criterion_6(cx: &Context) -> Outcome {
    let mut parts = Vec::new();
    for (name, p) in [("gesture", &cx.gesture), ("keyword", &cx.keyword)] {
        let p = project(p)?;
        let text = fs::read_to_string(p.artifact("model.json")).map_err(|e| e.to_string())?;
        let params = ModelParams::from_json(&text).map_err(|e| e.to_string())?;
        for (l, layer) in params.layers.iter().enumerate() {
            let (q, qp) = quantize_tensor(&layer.weights);
            let half = f64::from(qp.scale) / 2.0;
            if let Some((w, qi)) = layer
                .weights
                .iter()
                .zip(&q)
                .find(|(w, &qi)| (qp.dequantize(qi) - *w).abs() > half * (1.0 + 1e-9))
            {
                return Err(format!("{name} layer {l}: {w} -> {qi} exceeds scale/2"));
            }
        }
        let summary = json(&p.artifact("quant.json"))?;
        let drop = 100.0 * num(&summary, "accuracy_drop");
        let agree = num(&summary, "argmax_agreement");
        if drop.is_nan() || agree.is_nan() || drop > MAX_DROP_POINTS + 1e-9 || agree < MIN_AGREEMENT {
            return Err(format!("{name}: drop {drop:.2} points, agreement {agree:.4}"));
        }
        parts.push(format!("{name} drop {drop:.2} pts, agreement {agree:.4}"));
    }
    Ok(format!("weights within scale/2; {}", parts.join("; ")))
}

fn criterion_7(cx: &Context) -> Outcome {
    let mut parts = Vec::new();
    for (name, p) in [("gesture", &cx.gesture), ("keyword", &cx.keyword)] {
        let p = project(p)?;
        let budget = &json(&p.artifact("quant.json"))?["budget"];
        let flash = budget["flash_bytes"].as_u64().unwrap_or(0) as usize;
        let ram = budget["ram_bytes"].as_u64().unwrap_or(0) as usize;
        let on_disk = fs::metadata(p.artifact("model.tnym")).map_err(|e| e.to_string())?.len() as usize;
        if budget["fits"] != serde_json::Value::Bool(true) || flash > FLASH_BUDGET || ram > RAM_BUDGET {
            return Err(format!("{name}: {budget}"));
        }
        if flash != on_disk {
            return Err(format!("{name}: flash {flash} != blob size {on_disk}"));
        }
        parts.push(format!("{name} flash {flash} B ram {ram} B"));
    }
    let out = tinyml(&cx.root, &["bench", "--dims", "600,600,600,4", "--iterations", "1"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    if out.status.code() != Some(2) || !stdout.contains("fits: false") {
        return Err(format!("oversized model: exit {:?}, output {stdout}", out.status.code()));
    }
    Ok(format!("{}; 600-600-600-4 model fits=false, exit 2", parts.join("; ")))
}

fn criterion_8(cx: &Context) -> Outcome {
    let p = project(&cx.gesture)?;
    let cfg = ProjectConfig::load(p.dir.join("project.toml")).map_err(|e| e.to_string())?;
    let params = ModelParams::from_json(&fs::read_to_string(p.artifact("model.json")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let ds = pipeline::load_dataset(&cfg).map_err(|e| e.to_string())?;
    let features = pipeline::extract_features(&cfg, &ds).map_err(|e| e.to_string())?;
    let in_memory = pipeline::quantize_model(&params, &features).map_err(|e| e.to_string())?;
    let bytes = fs::read(p.artifact("model.tnym")).map_err(|e| e.to_string())?;
    let loaded = blob::decode(&bytes).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..100 {
        let x: Vec<f64> = (0..in_memory.input_dim()).map(|_| rng.random_range(-12.0..2.0)).collect();
        let a = in_memory.forward(&x).map_err(|e| e.to_string())?;
        let b = loaded.model.forward(&x).map_err(|e| e.to_string())?;
        if a.iter().zip(&b).any(|(u, v)| u.to_bits() != v.to_bits()) {
            return Err(format!("input {i}: {a:?} vs {b:?}"));
        }
    }
    for _ in 0..20 {
        let mut bad = bytes.clone();
        let at = rng.random_range(blob::HEADER_LEN..bad.len());
        bad[at] ^= rng.random_range(1..=255u8);
        match blob::decode(&bad) {
            Err(BlobError::CrcMismatch { .. }) => {}
            other => return Err(format!("corrupting byte {at}: {:?}", other.map(|_| "loaded")))
        }
    }
    Ok(format!("{} B blob: 100 inputs bit-identical, 20/20 corruptions rejected by CRC", bytes.len()))
}

fn criterion_9(cx: &Context) -> Outcome {
    const FILES: [&str; 7] = [
        "model.json",
        "history.csv",
        "report.txt",
        "report.json",
        "model.tnym",
        "quant.json",
        "split.json",
    ];
    let mut compared = 0;
    for kind in ["gesture", "keyword"] {
        let mut runs = Vec::new();
        for rep in ["first", "second"] {
            let root = cx.root.join("determinism").join(rep);
            let p = Project::build(&root, kind)?;
            ok(&p.dir, &["split"])?;
            runs.push(p);
        }
        for f in FILES {
            let a = fs::read(runs[0].artifact(f)).map_err(|e| format!("{f}: {e}"))?;
            let b = fs::read(runs[1].artifact(f)).map_err(|e| format!("{f}: {e}"))?;
            if a != b {
                return Err(format!("{kind} {f} differs between runs"));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} artifacts byte-identical across two full runs per kind"))
}

fn criterion_10(cx: &Context) -> Outcome {
    let mut parts = Vec::new();
    let cases = [
        (&cx.keyword, "keyword", "stream10.wav", "red@2", "4000"),
        (&cx.gesture, "gesture", "stream10.csv", "circle@3", "50"),
    ];
    for (p, kind, file, insert, stride) in cases {
        let p = project(p)?;
        ok(&p.dir, &["synth", kind, "--stream", file, "--seconds", "10", "--insert", insert])?;
        let fine = ok(&p.dir, &["run", "build/model.tnym", file, "--chunk", "1"])?;
        let coarse = ok(&p.dir, &["run", "build/model.tnym", file, "--chunk", stride])?;
        if fine != coarse {
            return Err(format!("{kind}: chunk 1 gave {fine:?}, chunk {stride} gave {coarse:?}"));
        }
        if fine.is_empty() {
            return Err(format!("{kind}: no events to compare"));
        }
        parts.push(format!("{kind} {} event(s)", fine.lines().count()));
    }
    Ok(format!("chunk 1 == chunk stride on 10 s streams: {}", parts.join(", ")))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    let cx = Context {
        gesture: Project::build(&root, "gesture"),
        keyword: Project::build(&root, "keyword"),
        root,
        _tmp: tmp,
    };
    let criteria: [Criterion; 10] = [
        ("gesture pipeline accuracy >= 0.90 at min_confidence 0.6 in < 60 s", criterion_1),
        ("keyword pipeline accuracy >= 0.90, one LED_RED, silent noise", criterion_2),
        ("split exactness 80/20 per label, deterministic", criterion_3),
        ("FFT vs naive DFT < 1e-6, Parseval 1e-6", criterion_4),
        ("backprop vs central differences < 1e-4 relative", criterion_5),
        ("quantization round trip, drop <= 2 points, agreement >= 98%", criterion_6),
        ("budget gate: defaults fit, oversized model exits 2", criterion_7),
        ("blob round trip bit-identical, corruptions fail CRC", criterion_8),
        ("determinism: byte-identical artifacts", criterion_9),
        ("chunking invariance: chunk 1 == chunk stride", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| check(&cx)))
            .unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
