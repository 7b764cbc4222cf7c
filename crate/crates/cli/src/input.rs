use std::io::BufRead;
use std::path::Path;

use anyhow::{bail, Context, Result};
use tinyml_core::dataset::{load_csv_recording, load_wav_recording};
use tinyml_core::{DatasetKind, Error, Recording};

fn kind_mismatch(msg: String) -> anyhow::Error {
    Error::KindMismatch(msg).into()
}

fn load_file(path: &Path, kind: DatasetKind) -> Result<Recording> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let rec = match (ext.as_str(), kind) {
        ("wav", DatasetKind::Keyword) => load_wav_recording(path, "stream")?,
        ("csv", DatasetKind::Gesture) => load_csv_recording(path, "stream", kind.sample_rate())?,
        ("wav" | "csv", _) => {
            return Err(kind_mismatch(format!(
                "{kind} blob cannot run {} input {}",
                ext.to_uppercase(),
                path.display()
            )))
        }
        _ => bail!("{}: expected a .wav or .csv file", path.display()),
    };
    if rec.sample_rate != kind.sample_rate() {
        return Err(kind_mismatch(format!(
            "{} is {} Hz, {kind} blob expects {} Hz",
            path.display(),
            rec.sample_rate,
            kind.sample_rate()
        )));
    }
    Ok(rec)
}

/// Feeds `input` (a recording file, or CSV rows on stdin when `None`) to
/// `push` in chunks of `chunk` samples per channel.
pub fn for_each_chunk(
    input: Option<&Path>,
    kind: DatasetKind,
    chunk: usize,
    mut push: impl FnMut(&[Vec<f64>]) -> Result<()>,
) -> Result<()> {
    if chunk == 0 {
        bail!("--chunk must be at least 1");
    }
    let channels = kind.channels();
    if let Some(path) = input.filter(|p| *p != Path::new("-")) {
        let rec = load_file(path, kind)?;
        let mut start = 0;
        while start < rec.len() {
            let end = (start + chunk).min(rec.len());
            let part: Vec<Vec<f64>> = rec.samples.iter().map(|c| c[start..end].to_vec()).collect();
            push(&part)?;
            start = end;
        }
        return Ok(());
    }

    let stdin = std::io::stdin().lock();
    let mut buf = vec![Vec::with_capacity(chunk); channels];
    for (i, line) in stdin.lines().enumerate() {
        let line = line.context("reading stdin")?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("stdin line {}: not a number", i + 1))?;
        if values.len() != channels {
            return Err(kind_mismatch(format!(
                "stdin line {} has {} columns, {kind} blob expects {channels}",
                i + 1,
                values.len()
            )));
        }
        for (b, v) in buf.iter_mut().zip(values) {
            b.push(v);
        }
        if buf[0].len() == chunk {
            push(&buf)?;
            buf.iter_mut().for_each(Vec::clear);
        }
    }
    if !buf[0].is_empty() {
        push(&buf)?;
    }
    Ok(())
}
