use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{DatasetError, DatasetKind, Recording};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn source_id(path: &Path) -> String {
    path.to_string_lossy().into_owned()
}

/// Reads a headerless `x,y,z` CSV into a 3-channel recording.
pub fn load_csv_recording(
    path: impl AsRef<Path>,
    label: &str,
    sample_rate: f64,
) -> Result<Recording, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut channels = vec![Vec::new(), Vec::new(), Vec::new()];
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(DatasetError::MalformedRow {
                row,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        for (c, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| DatasetError::MalformedRow {
                row,
                reason: format!("not a number: {:?}", field.trim()),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::NonFinite { row });
            }
            channels[c].push(v);
        }
    }
    if channels[0].is_empty() {
        return Err(DatasetError::EmptyRecording);
    }
    Recording::new(label, sample_rate, channels, source_id(path))
}

/// Reads a mono 16-bit PCM WAV, scaling samples by 1/32768.
pub fn load_wav_recording(path: impl AsRef<Path>, label: &str) -> Result<Recording, DatasetError> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(e, path))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(DatasetError::NotMono(spec.channels));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(DatasetError::Not16Bit(spec.bits_per_sample));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| map_hound(e, path))?;
    Recording::new(label, f64::from(spec.sample_rate), vec![samples], source_id(path))
}

fn map_hound(err: hound::Error, path: &Path) -> DatasetError {
    match err {
        // hound reports short reads as `Other`.
        hound::Error::IoError(e)
            if matches!(e.kind(), std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other) =>
        {
            DatasetError::TruncatedHeader
        }
        hound::Error::IoError(e) => io_err(path)(e),
        hound::Error::FormatError(_) => DatasetError::TruncatedHeader,
        hound::Error::Unsupported => DatasetError::Compressed,
        hound::Error::InvalidSampleFormat => DatasetError::Compressed,
        hound::Error::TooWide | hound::Error::UnfinishedSample => DatasetError::TruncatedHeader,
    }
}

/// Dispatches on extension: `.csv` for IMU, `.wav` for audio.
pub fn load_recording(path: impl AsRef<Path>, label: &str) -> Result<Recording, DatasetError> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => load_csv_recording(path, label, DatasetKind::Gesture.sample_rate()),
        Some("wav") => load_wav_recording(path, label),
        _ => Err(DatasetError::InvalidDataset(format!(
            "{}: expected .csv or .wav",
            path.display()
        ))),
    }
}

pub fn write_csv_recording(path: impl AsRef<Path>, rec: &Recording) -> Result<(), DatasetError> {
    let path = path.as_ref();
    if rec.channels() != 3 {
        return Err(DatasetError::InvalidRecording("csv needs 3 channels".into()));
    }
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for t in 0..rec.len() {
        writeln!(
            out,
            "{},{},{}",
            rec.samples[0][t], rec.samples[1][t], rec.samples[2][t]
        )
        .map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Writes a mono recording as 16-bit PCM, full scale = ±32767.
pub fn write_wav_recording(path: impl AsRef<Path>, rec: &Recording) -> Result<(), DatasetError> {
    let path = path.as_ref();
    if rec.channels() != 1 {
        return Err(DatasetError::NotMono(rec.channels() as u16));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rec.sample_rate.round() as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(e, path))?;
    for &v in &rec.samples[0] {
        let q = (v * 32767.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(|e| map_hound(e, path))?;
    }
    writer.finalize().map_err(|e| map_hound(e, path))
}

/// CSV for 3-channel recordings, WAV for mono.
pub fn write_recording(path: impl AsRef<Path>, rec: &Recording) -> Result<(), DatasetError> {
    match rec.channels() {
        3 => write_csv_recording(path, rec),
        _ => write_wav_recording(path, rec),
    }
}

/// Writes `<root>/<label>/<label>_NNN.{csv|wav}`, numbering each label's
/// recordings in input order. Returns the written paths.
pub fn write_dataset_dir(root: impl AsRef<Path>, recordings: &[Recording]) -> Result<Vec<PathBuf>, DatasetError> {
    let root = root.as_ref();
    let mut written = Vec::with_capacity(recordings.len());
    let mut counters: Vec<(String, usize)> = Vec::new();
    for rec in recordings {
        let n = match counters.iter_mut().find(|(l, _)| *l == rec.label) {
            Some((_, n)) => {
                *n += 1;
                *n
            }
            None => {
                counters.push((rec.label.clone(), 0));
                0
            }
        };
        let dir = root.join(&rec.label);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let ext = if rec.channels() == 3 { "csv" } else { "wav" };
        let path = dir.join(format!("{}_{n:03}.{ext}", rec.label));
        write_recording(&path, rec)?;
        written.push(path);
    }
    Ok(written)
}

/// Loads `<root>/<label>/<recording>.{csv|wav}`. Labels and files are
/// visited in sorted order so the result does not depend on the filesystem.
pub fn load_dataset_dir(root: impl AsRef<Path>) -> Result<Vec<Recording>, DatasetError> {
    let root = root.as_ref();
    let mut label_dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(io_err(root))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    label_dirs.sort();
    let mut recordings = Vec::new();
    for dir in label_dirs {
        let label = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| DatasetError::InvalidDataset(format!("bad label dir {}", dir.display())))?
            .to_string();
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "wav")))
            .collect();
        files.sort();
        for f in files {
            let mut rec = load_recording(&f, &label)?;
            // Stable identity independent of where the tree is mounted.
            rec.source_id = format!(
                "{label}/{}",
                f.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
            );
            recordings.push(rec);
        }
    }
    if recordings.is_empty() {
        return Err(DatasetError::InvalidDataset(format!(
            "no recordings under {}",
            root.display()
        )));
    }
    Ok(recordings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &[u8]) -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn csv_rows_are_transcribed() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", b"0,0,0\r\n1,2,3\n4,5,6\n");
        let rec = load_csv_recording(&p, "circle", 100.0).unwrap();
        assert_eq!(rec.len(), 3);
        assert_eq!(rec.channels(), 3);
        assert_eq!(rec.samples[0], vec![0.0, 1.0, 4.0]);
        assert_eq!(rec.samples[2], vec![0.0, 3.0, 6.0]);
        assert_eq!(rec.label, "circle");
    }

    #[test]
    fn csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write(&dir, "e.csv", b"");
        assert_eq!(
            load_csv_recording(&empty, "x", 100.0).unwrap_err().to_string(),
            "empty recording"
        );
        let short = write(&dir, "s.csv", b"1,2\n");
        match load_csv_recording(&short, "x", 100.0).unwrap_err() {
            DatasetError::MalformedRow { row, .. } => assert_eq!(row, 1),
            e => panic!("unexpected {e}"),
        }
        let later = write(&dir, "l.csv", b"1,2,3\n1,2,x\n");
        assert!(load_csv_recording(&later, "x", 100.0).unwrap_err().to_string().starts_with("row 2"));
        let inf = write(&dir, "i.csv", b"1,2,inf\n");
        assert!(matches!(
            load_csv_recording(&inf, "x", 100.0),
            Err(DatasetError::NonFinite { row: 1 })
        ));
    }

    fn wav_bytes(channels: u16, bits: u16, samples: &[i16]) -> Vec<u8> {
        let mut cursor = std::io::Cursor::new(Vec::new());
        let spec = hound::WavSpec {
            channels,
            sample_rate: 16000,
            bits_per_sample: bits,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::new(&mut cursor, spec).unwrap();
        for &s in samples {
            if bits == 16 {
                w.write_sample(s).unwrap();
            } else {
                w.write_sample((s >> 8) as i8).unwrap();
            }
        }
        w.finalize().unwrap();
        cursor.into_inner()
    }

    #[test]
    fn wav_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.wav", &wav_bytes(1, 16, &[0, 16384, -32768]));
        let rec = load_wav_recording(&p, "red").unwrap();
        assert_eq!(rec.samples[0], vec![0.0, 0.5, -1.0]);
        assert_eq!(rec.sample_rate, 16000.0);
    }

    #[test]
    fn wav_errors() {
        let dir = tempfile::tempdir().unwrap();
        let stereo = write(&dir, "s.wav", &wav_bytes(2, 16, &[0, 0]));
        assert!(load_wav_recording(&stereo, "x").unwrap_err().to_string().starts_with("mono required"));
        let eight = write(&dir, "8.wav", &wav_bytes(1, 8, &[0, 256]));
        assert!(matches!(load_wav_recording(&eight, "x"), Err(DatasetError::Not16Bit(8))));
        let full = wav_bytes(1, 16, &[1, 2, 3]);
        let trunc = write(&dir, "t.wav", &full[..20]);
        assert!(matches!(load_wav_recording(&trunc, "x"), Err(DatasetError::TruncatedHeader)));
        let empty = write(&dir, "e.wav", b"");
        assert!(matches!(load_wav_recording(&empty, "x"), Err(DatasetError::TruncatedHeader)));
        // Format tag 2 (MS ADPCM) in an otherwise plain header.
        let mut adpcm = full.clone();
        adpcm[20] = 2;
        let comp = write(&dir, "c.wav", &adpcm);
        assert!(matches!(load_wav_recording(&comp, "x"), Err(DatasetError::Compressed)));
    }
}
