//! Byte-exact model blob, all fields little-endian.
//!
//! ```text
//! header (16 bytes)
//!   magic "TNYM" | version u16 = 1 | kind u8 (0 gesture, 1 keyword)
//!   | reserved u8 = 0 | payload_len u32 | payload_crc32 u32
//! payload
//!   dsp tag u8 (0 spectral, 1 mfcc), then the config fields in order:
//!     spectral: scale f32, filter_cutoff f32, filter_order u32, fft_len u32, power_bins u32
//!     mfcc:     frame_len u32, frame_stride u32, mel_filters u32, coefficients u32, fft_len u32
//!   n_layers u8, then n_layers + 1 dims as u16 (input, hidden..., output)
//!   norm_mean f32 x input, norm_std f32 x input
//!   per layer: weight scale f32, zero_point i8, weights i8 x (out*in) row-major, bias i32 x out
//!   per layer input boundary: scale f32, zero_point i8
//!   label count u8, then per label: len u8 + UTF-8 bytes
//!   min_confidence f32 | smoothing K u8 | cooldown u8
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::RuntimeConfig;
use crate::dataset::DatasetKind;
use crate::dsp::{DspConfig, MfccConfig, SpectralConfig};
use crate::model::Topology;
use crate::quant::{QuantLayer, QuantParams, QuantizedModel};

pub const MAGIC: [u8; 4] = *b"TNYM";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum BlobError {
    #[error("truncated header")]
    TruncatedHeader,
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated payload: header declares {declared} bytes, {available} present")]
    TruncatedPayload { declared: usize, available: usize },
    #[error("crc mismatch: header {expected:#010x}, payload {actual:#010x}")]
    CrcMismatch { expected: u32, actual: u32 },
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("model exceeds format limits: {0}")]
    FormatLimit(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Everything the device needs: quantized network, feature block and
/// streaming settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub model: QuantizedModel,
    pub dsp: DspConfig,
    pub runtime: RuntimeConfig,
}

impl Deployment {
    pub fn kind(&self) -> DatasetKind {
        self.dsp.kind()
    }
}

fn kind_byte(kind: DatasetKind) -> u8 {
    match kind {
        DatasetKind::Gesture => 0,
        DatasetKind::Keyword => 1,
    }
}

fn check_limits(qm: &QuantizedModel) -> Result<(), BlobError> {
    let dims = qm.topology.dims();
    if qm.layers.len() > u8::MAX as usize {
        return Err(BlobError::FormatLimit(format!("{} layers > 255", qm.layers.len())));
    }
    if let Some(d) = dims.iter().find(|&&d| d > u16::MAX as usize) {
        return Err(BlobError::FormatLimit(format!("dimension {d} > 65535")));
    }
    if qm.labels.len() > u8::MAX as usize {
        return Err(BlobError::FormatLimit(format!("{} labels > 255", qm.labels.len())));
    }
    if let Some(l) = qm.labels.iter().find(|l| l.len() > u8::MAX as usize) {
        return Err(BlobError::FormatLimit(format!("label {l:?} longer than 255 bytes")));
    }
    Ok(())
}

/// Payload size in bytes, computed from shapes alone.
fn payload_len(qm: &QuantizedModel) -> usize {
    let dims = qm.topology.dims();
    let dsp = 1 + 5 * 4;
    let topo = 1 + 2 * dims.len();
    let norm = 2 * 4 * qm.input_dim();
    let layers: usize = qm
        .layers
        .iter()
        .map(|l| 5 + l.weights.len() + 4 * l.bias.len())
        .sum();
    let acts = 5 * qm.activations.len();
    let labels = 1 + qm.labels.iter().map(|l| 1 + l.len()).sum::<usize>();
    dsp + topo + norm + layers + acts + labels + 4 + 1 + 1
}

/// Size of the encoded blob, header included.
pub fn encoded_len(qm: &QuantizedModel, _dsp: &DspConfig, _rt: &RuntimeConfig) -> usize {
    HEADER_LEN + payload_len(qm)
}

pub fn encode(qm: &QuantizedModel, dsp: &DspConfig, rt: &RuntimeConfig) -> Result<Vec<u8>, BlobError> {
    check_limits(qm)?;
    let mut p = Vec::with_capacity(payload_len(qm));
    match dsp {
        DspConfig::Spectral(c) => {
            p.push(0);
            p.extend(c.scale.to_le_bytes());
            p.extend(c.filter_cutoff.to_le_bytes());
            p.extend(c.filter_order.to_le_bytes());
            p.extend(c.fft_len.to_le_bytes());
            p.extend(c.power_bins.to_le_bytes());
        }
        DspConfig::Mfcc(c) => {
            p.push(1);
            for v in [c.frame_len, c.frame_stride, c.mel_filters, c.coefficients, c.fft_len] {
                p.extend(v.to_le_bytes());
            }
        }
    }
    let dims = qm.topology.dims();
    p.push(qm.layers.len() as u8);
    for d in dims {
        p.extend((d as u16).to_le_bytes());
    }
    for v in qm.norm_mean.iter().chain(&qm.norm_std) {
        p.extend(v.to_le_bytes());
    }
    for l in &qm.layers {
        p.extend(l.weight_params.scale.to_le_bytes());
        p.push(l.weight_params.zero_point as u8);
        p.extend(l.weights.iter().map(|&w| w as u8));
        for b in &l.bias {
            p.extend(b.to_le_bytes());
        }
    }
    for a in &qm.activations {
        p.extend(a.scale.to_le_bytes());
        p.push(a.zero_point as u8);
    }
    p.push(qm.labels.len() as u8);
    for l in &qm.labels {
        p.push(l.len() as u8);
        p.extend(l.as_bytes());
    }
    p.extend(rt.min_confidence.to_le_bytes());
    p.push(rt.smoothing);
    p.push(rt.cooldown);
    debug_assert_eq!(p.len(), payload_len(qm));

    let mut out = Vec::with_capacity(HEADER_LEN + p.len());
    out.extend(MAGIC);
    out.extend(VERSION.to_le_bytes());
    out.push(kind_byte(dsp.kind()));
    out.push(0);
    out.extend((p.len() as u32).to_le_bytes());
    out.extend(crc32fast::hash(&p).to_le_bytes());
    out.extend(p);
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], BlobError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            BlobError::Malformed(format!("payload ends before byte {}", self.pos + n))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, BlobError> {
        Ok(self.take(1)?[0])
    }

    fn i8(&mut self) -> Result<i8, BlobError> {
        Ok(self.u8()? as i8)
    }

    fn u16(&mut self) -> Result<u16, BlobError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, BlobError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn i32(&mut self) -> Result<i32, BlobError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self) -> Result<f32, BlobError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn quant_params(&mut self) -> Result<QuantParams, BlobError> {
        let scale = self.f32()?;
        let zero_point = self.i8()?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(BlobError::Malformed(format!("non-positive scale {scale}")));
        }
        Ok(QuantParams { scale, zero_point })
    }
}

pub fn decode(bytes: &[u8]) -> Result<Deployment, BlobError> {
    if bytes.len() < HEADER_LEN {
        return Err(BlobError::TruncatedHeader);
    }
    if bytes[..4] != MAGIC {
        return Err(BlobError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(BlobError::UnsupportedVersion(version));
    }
    let kind = bytes[6];
    let declared = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let expected_crc = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes"));
    let available = bytes.len() - HEADER_LEN;
    if available < declared {
        return Err(BlobError::TruncatedPayload {
            declared,
            available,
        });
    }
    if available > declared {
        return Err(BlobError::Malformed(format!(
            "{} trailing bytes after payload",
            available - declared
        )));
    }
    let payload = &bytes[HEADER_LEN..];
    let actual = crc32fast::hash(payload);
    if actual != expected_crc {
        return Err(BlobError::CrcMismatch {
            expected: expected_crc,
            actual,
        });
    }

    let mut r = Reader { buf: payload, pos: 0 };
    let dsp = match r.u8()? {
        0 => DspConfig::Spectral(SpectralConfig {
            scale: r.f32()?,
            filter_cutoff: r.f32()?,
            filter_order: r.u32()?,
            fft_len: r.u32()?,
            power_bins: r.u32()?,
        }),
        1 => DspConfig::Mfcc(MfccConfig {
            frame_len: r.u32()?,
            frame_stride: r.u32()?,
            mel_filters: r.u32()?,
            coefficients: r.u32()?,
            fft_len: r.u32()?,
        }),
        t => return Err(BlobError::Malformed(format!("unknown dsp tag {t}"))),
    };
    if kind != kind_byte(dsp.kind()) {
        return Err(BlobError::Malformed(format!(
            "header kind {kind} disagrees with dsp block"
        )));
    }
    dsp.validate()
        .map_err(|e| BlobError::Malformed(format!("dsp config: {e}")))?;

    let n_layers = r.u8()? as usize;
    if n_layers == 0 {
        return Err(BlobError::Malformed("zero layers".into()));
    }
    let dims = (0..=n_layers)
        .map(|_| r.u16().map(usize::from))
        .collect::<Result<Vec<_>, _>>()?;
    let topology = Topology::new(dims[0], dims[1..n_layers].to_vec(), dims[n_layers])
        .map_err(|e| BlobError::Malformed(e.to_string()))?;
    let norm_mean = (0..dims[0]).map(|_| r.f32()).collect::<Result<Vec<_>, _>>()?;
    let norm_std = (0..dims[0]).map(|_| r.f32()).collect::<Result<Vec<_>, _>>()?;
    let mut layers = Vec::with_capacity(n_layers);
    for w in dims.windows(2) {
        let (in_dim, out_dim) = (w[0], w[1]);
        let weight_params = r.quant_params()?;
        let weights = r.take(in_dim * out_dim)?.iter().map(|&b| b as i8).collect();
        let bias = (0..out_dim).map(|_| r.i32()).collect::<Result<Vec<_>, _>>()?;
        layers.push(QuantLayer {
            in_dim,
            out_dim,
            weight_params,
            weights,
            bias,
        });
    }
    let activations = (0..n_layers)
        .map(|_| r.quant_params())
        .collect::<Result<Vec<_>, _>>()?;
    let n_labels = r.u8()? as usize;
    if n_labels != dims[n_layers] {
        return Err(BlobError::Malformed(format!(
            "{n_labels} labels for {} outputs",
            dims[n_layers]
        )));
    }
    let labels = (0..n_labels)
        .map(|_| {
            let len = r.u8()? as usize;
            String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| BlobError::Malformed("label is not UTF-8".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let runtime = RuntimeConfig {
        min_confidence: r.f32()?,
        smoothing: r.u8()?,
        cooldown: r.u8()?,
    };
    if r.pos != payload.len() {
        return Err(BlobError::Malformed("unparsed bytes at end of payload".into()));
    }
    Ok(Deployment {
        model: QuantizedModel {
            topology,
            layers,
            activations,
            norm_mean,
            norm_std,
            labels,
        },
        dsp,
        runtime,
    })
}

/// Writes the blob and returns its size in bytes.
pub fn export_blob(
    qm: &QuantizedModel,
    dsp: &DspConfig,
    rt: &RuntimeConfig,
    path: impl AsRef<Path>,
) -> Result<usize, BlobError> {
    let path = path.as_ref();
    let bytes = encode(qm, dsp, rt)?;
    fs::write(path, &bytes).map_err(|source| BlobError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(bytes.len())
}

pub fn load_blob(path: impl AsRef<Path>) -> Result<Deployment, BlobError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| BlobError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}
