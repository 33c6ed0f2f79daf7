//! On-disk formats: feature stores (`CLNS`), weight bundles (`CLWB`),
//! direction matrices (`CLDR`) and the JSON image manifest.
//!
//! All binary formats are little-endian with `f32` payloads.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub const STORE_MAGIC: &[u8; 4] = b"CLNS";
pub const BUNDLE_MAGIC: &[u8; 4] = b"CLWB";
pub const DIRECTIONS_MAGIC: &[u8; 4] = b"CLDR";
pub const FORMAT_VERSION: u32 = 1;

const FLAG_LATENTS: u32 = 1;
const FLAG_DIRECTIONS: u32 = 1 << 1;
const DIRECTION_NORM_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoreHeader {
    pub version: u32,
    pub num_codes: usize,
    pub num_directions: usize,
    pub feature_dim: usize,
    /// Zero when neither latents nor directions are stored.
    pub latent_dim: usize,
    pub alpha: f64,
}

/// Base features per code and edited features per (code, direction) pair.
///
/// Immutable once constructed; every constructor validates the full set of
/// invariants so a `FeatureStore` in hand is always well formed.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStore<T> {
    header: StoreHeader,
    base: Vec<T>,
    edited: Vec<T>,
    latents: Option<Matrix<T>>,
    directions: Option<Matrix<T>>,
}

impl<T: Scalar> FeatureStore<T> {
    /// `base` is N×k, `edited` is the flat N·M·k tensor (code-major, then direction).
    pub fn new(
        alpha: f64,
        base: Matrix<T>,
        num_directions: usize,
        edited: Vec<T>,
        latents: Option<Matrix<T>>,
        directions: Option<Matrix<T>>,
    ) -> Result<Self> {
        let latent_dim = latents
            .as_ref()
            .map(|m| m.cols())
            .or_else(|| directions.as_ref().map(|m| m.cols()))
            .unwrap_or(0);
        let header = StoreHeader {
            version: FORMAT_VERSION,
            num_codes: base.rows(),
            num_directions,
            feature_dim: base.cols(),
            latent_dim,
            alpha,
        };
        let store = FeatureStore { header, base: base.into_vec(), edited, latents, directions };
        store.validate()?;
        Ok(store)
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        if h.num_codes == 0 || h.num_directions == 0 || h.feature_dim == 0 {
            return Err(Error::Corrupt(format!(
                "empty dimension: N={}, M={}, k={}",
                h.num_codes, h.num_directions, h.feature_dim
            )));
        }
        if !h.alpha.is_finite() {
            return Err(Error::Data(format!("alpha is not finite: {}", h.alpha)));
        }
        if self.base.len() != h.num_codes * h.feature_dim {
            return Err(Error::Corrupt(format!(
                "base features hold {} values, header implies {}",
                self.base.len(),
                h.num_codes * h.feature_dim
            )));
        }
        let expected = h.num_codes * h.num_directions * h.feature_dim;
        if self.edited.len() != expected {
            return Err(Error::Corrupt(format!(
                "edited features hold {} values, header implies {expected}",
                self.edited.len()
            )));
        }
        check_finite("base_features", &self.base)?;
        check_finite("edited_features", &self.edited)?;
        if let Some(l) = &self.latents {
            if l.rows() != h.num_codes || l.cols() != h.latent_dim || h.latent_dim == 0 {
                return Err(Error::Corrupt(format!(
                    "latents are {}x{}, expected {}x{}",
                    l.rows(),
                    l.cols(),
                    h.num_codes,
                    h.latent_dim
                )));
            }
            check_finite("latent_codes", l.as_slice())?;
        }
        if let Some(d) = &self.directions {
            if d.rows() != h.num_directions || d.cols() != h.latent_dim || h.latent_dim == 0 {
                return Err(Error::Corrupt(format!(
                    "directions are {}x{}, expected {}x{}",
                    d.rows(),
                    d.cols(),
                    h.num_directions,
                    h.latent_dim
                )));
            }
            check_finite("directions", d.as_slice())?;
            for (m, row) in d.iter_rows().enumerate() {
                let n = row.iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt();
                if (n - 1.0).abs() > DIRECTION_NORM_TOL {
                    return Err(Error::Data(format!("direction {m} has norm {n}, expected 1")));
                }
            }
        }
        if self.latents.is_none() && self.directions.is_none() && h.latent_dim != 0 {
            return Err(Error::Corrupt(format!("latent_dim {} without latents or directions", h.latent_dim)));
        }
        Ok(())
    }

    pub fn header(&self) -> &StoreHeader {
        &self.header
    }

    pub fn num_codes(&self) -> usize {
        self.header.num_codes
    }

    pub fn num_directions(&self) -> usize {
        self.header.num_directions
    }

    pub fn feature_dim(&self) -> usize {
        self.header.feature_dim
    }

    pub fn alpha(&self) -> f64 {
        self.header.alpha
    }

    /// f_G(w_n)
    pub fn base(&self, n: usize) -> &[T] {
        let k = self.header.feature_dim;
        &self.base[n * k..(n + 1) * k]
    }

    /// f_G(w_n + α d_m)
    pub fn edited(&self, n: usize, m: usize) -> &[T] {
        let k = self.header.feature_dim;
        let off = (n * self.header.num_directions + m) * k;
        &self.edited[off..off + k]
    }

    pub fn base_features(&self) -> &[T] {
        &self.base
    }

    pub fn edited_features(&self) -> &[T] {
        &self.edited
    }

    pub fn latents(&self) -> Option<&Matrix<T>> {
        self.latents.as_ref()
    }

    pub fn directions(&self) -> Option<&Matrix<T>> {
        self.directions.as_ref()
    }

    /// Applies `f` to every base and edited feature value.
    pub fn map_features(&self, f: impl Fn(T) -> T) -> Result<Self> {
        let mut out = self.clone();
        out.base.iter_mut().for_each(|v| *v = f(*v));
        out.edited.iter_mut().for_each(|v| *v = f(*v));
        out.validate()?;
        Ok(out)
    }

    pub fn cast<U: Scalar>(&self) -> FeatureStore<U> {
        let conv = |v: &T| U::of(v.as_f64());
        FeatureStore {
            header: self.header.clone(),
            base: self.base.iter().map(conv).collect(),
            edited: self.edited.iter().map(conv).collect(),
            latents: self.latents.as_ref().map(|m| m.map(|v| U::of(v.as_f64()))),
            directions: self.directions.as_ref().map(|m| m.map(|v| U::of(v.as_f64()))),
        }
    }
}

fn check_finite<T: Scalar>(what: &str, values: &[T]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Data(format!("{what}[{i}] is not finite"))),
        None => Ok(()),
    }
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(magic: &[u8; 4]) -> Self {
        let mut w = Writer { buf: Vec::new() };
        w.buf.extend_from_slice(magic);
        w.u32(FORMAT_VERSION);
        w
    }

    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn count(&mut self, what: &str, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Data(format!("{what} = {v} exceeds u32")))?;
        self.u32(v);
        Ok(())
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f32s<T: Scalar>(&mut self, what: &str, values: &[T]) -> Result<()> {
        self.buf.reserve(values.len() * 4);
        for (i, &v) in values.iter().enumerate() {
            let f = v.to_f32_lossy();
            if !f.is_finite() {
                return Err(Error::Data(format!("{what}[{i}] = {v} does not fit in f32")));
            }
            self.buf.extend_from_slice(&f.to_le_bytes());
        }
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(bytes: &'a [u8], magic: &[u8; 4], kind: &str) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != magic {
            return Err(Error::Format(format!(
                "not a {kind} file: expected magic {:?}",
                String::from_utf8_lossy(magic)
            )));
        }
        let mut r = Reader { bytes, pos: 4 };
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported {kind} version {version}")));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Corrupt(format!("truncated: need {n} bytes at offset {}, file has {}", self.pos, self.bytes.len()))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn count(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s<T: Scalar>(&mut self, rows: usize, cols: usize) -> Result<Vec<T>> {
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Corrupt(format!("payload {rows}x{cols} overflows")))?;
        Ok(self
            .take(n)?
            .chunks_exact(4)
            .map(|c| T::from_f32_exact(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Corrupt(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

pub fn encode_store<T: Scalar>(store: &FeatureStore<T>) -> Result<Vec<u8>> {
    store.validate()?;
    let h = &store.header;
    let mut w = Writer::new(STORE_MAGIC);
    w.count("num_codes", h.num_codes)?;
    w.count("num_directions", h.num_directions)?;
    w.count("feature_dim", h.feature_dim)?;
    w.count("latent_dim", h.latent_dim)?;
    w.f64(h.alpha);
    let mut flags = 0;
    if store.latents.is_some() {
        flags |= FLAG_LATENTS;
    }
    if store.directions.is_some() {
        flags |= FLAG_DIRECTIONS;
    }
    w.u32(flags);
    w.f32s("base_features", &store.base)?;
    w.f32s("edited_features", &store.edited)?;
    if let Some(l) = &store.latents {
        w.f32s("latent_codes", l.as_slice())?;
    }
    if let Some(d) = &store.directions {
        w.f32s("directions", d.as_slice())?;
    }
    Ok(w.buf)
}

pub fn decode_store<T: Scalar>(bytes: &[u8]) -> Result<FeatureStore<T>> {
    let mut r = Reader::open(bytes, STORE_MAGIC, "feature store")?;
    let n = r.count()?;
    let m = r.count()?;
    let k = r.count()?;
    let d = r.count()?;
    let alpha = r.f64()?;
    let flags = r.u32()?;
    if flags & !(FLAG_LATENTS | FLAG_DIRECTIONS) != 0 {
        return Err(Error::Format(format!("unknown presence flags {flags:#x}")));
    }
    if (flags == 0) != (d == 0) {
        return Err(Error::Corrupt(format!("latent_dim {d} inconsistent with presence flags {flags:#x}")));
    }
    if n == 0 || m == 0 || k == 0 {
        return Err(Error::Corrupt(format!("empty dimension: N={n}, M={m}, k={k}")));
    }
    let base = r.f32s(n, k)?;
    let edited = r.f32s(n * m, k)?;
    let latents = if flags & FLAG_LATENTS != 0 { Some(Matrix::from_row_major(n, d, r.f32s(n, d)?)?) } else { None };
    let directions =
        if flags & FLAG_DIRECTIONS != 0 { Some(Matrix::from_row_major(m, d, r.f32s(m, d)?)?) } else { None };
    r.finish()?;
    let store = FeatureStore {
        header: StoreHeader { version: FORMAT_VERSION, num_codes: n, num_directions: m, feature_dim: k, latent_dim: d, alpha },
        base,
        edited,
        latents,
        directions,
    };
    store.validate()?;
    Ok(store)
}

pub fn load_store<T: Scalar>(path: impl AsRef<Path>) -> Result<FeatureStore<T>> {
    decode_store(&fs::read(path)?)
}

/// Encodes fully in memory first, so an invalid store never produces a partial file.
pub fn write_store<T: Scalar>(store: &FeatureStore<T>, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_store(store)?;
    fs::write(path, bytes)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightLayer<T> {
    pub name: String,
    /// o_l × d affine weight.
    pub matrix: Matrix<T>,
}

/// Per-layer affine matrices that map latent codes into style spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightBundle<T> {
    layers: Vec<WeightLayer<T>>,
}

impl<T: Scalar> WeightBundle<T> {
    pub fn new(layers: Vec<WeightLayer<T>>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::Format("weight bundle has no layers".into()));
        };
        let d = first.matrix.cols();
        for l in &layers {
            if l.matrix.rows() == 0 {
                return Err(Error::Format(format!("layer {:?} has no rows", l.name)));
            }
            if l.matrix.cols() != d {
                return Err(Error::Format(format!(
                    "layer {:?} has {} columns, expected {d}",
                    l.name,
                    l.matrix.cols()
                )));
            }
            check_finite(&l.name, l.matrix.as_slice())?;
        }
        Ok(WeightBundle { layers })
    }

    pub fn layers(&self) -> &[WeightLayer<T>] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].matrix.cols()
    }
}

pub fn encode_weight_bundle<T: Scalar>(bundle: &WeightBundle<T>) -> Result<Vec<u8>> {
    let mut w = Writer::new(BUNDLE_MAGIC);
    w.count("layer count", bundle.layers.len())?;
    for l in &bundle.layers {
        let name = l.name.as_bytes();
        let len = u16::try_from(name.len()).map_err(|_| Error::Data(format!("layer name {:?} too long", l.name)))?;
        w.u16(len);
        w.buf.extend_from_slice(name);
        w.count("rows", l.matrix.rows())?;
        w.count("cols", l.matrix.cols())?;
        w.f32s(&l.name, l.matrix.as_slice())?;
    }
    Ok(w.buf)
}

pub fn decode_weight_bundle<T: Scalar>(bytes: &[u8]) -> Result<WeightBundle<T>> {
    let mut r = Reader::open(bytes, BUNDLE_MAGIC, "weight bundle")?;
    let count = r.count()?;
    let mut layers = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|e| Error::Format(format!("layer name is not UTF-8: {e}")))?
            .to_owned();
        let rows = r.count()?;
        let cols = r.count()?;
        let matrix = Matrix::from_row_major(rows, cols, r.f32s(rows, cols)?)?;
        layers.push(WeightLayer { name, matrix });
    }
    r.finish()?;
    WeightBundle::new(layers)
}

pub fn load_weight_bundle<T: Scalar>(path: impl AsRef<Path>) -> Result<WeightBundle<T>> {
    decode_weight_bundle(&fs::read(path)?)
}

pub fn write_weight_bundle<T: Scalar>(bundle: &WeightBundle<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_weight_bundle(bundle)?)?;
    Ok(())
}

/// `CLDR`: magic, version, M, d, then M·d f32 row-major.
pub fn encode_directions<T: Scalar>(directions: &Matrix<T>) -> Result<Vec<u8>> {
    let mut w = Writer::new(DIRECTIONS_MAGIC);
    w.count("num_directions", directions.rows())?;
    w.count("latent_dim", directions.cols())?;
    w.f32s("directions", directions.as_slice())?;
    Ok(w.buf)
}

pub fn decode_directions<T: Scalar>(bytes: &[u8]) -> Result<Matrix<T>> {
    let mut r = Reader::open(bytes, DIRECTIONS_MAGIC, "directions")?;
    let m = r.count()?;
    let d = r.count()?;
    let values = r.f32s(m, d)?;
    r.finish()?;
    check_finite("directions", &values)?;
    Matrix::from_row_major(m, d, values)
}

pub fn load_directions<T: Scalar>(path: impl AsRef<Path>) -> Result<Matrix<T>> {
    decode_directions(&fs::read(path)?)
}

pub fn write_directions<T: Scalar>(directions: &Matrix<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_directions(directions)?)?;
    Ok(())
}

/// Relative image paths for base codes and (code, direction) edits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ImageManifest {
    pub base: BTreeMap<usize, PathBuf>,
    pub edited: BTreeMap<(usize, usize), PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct ManifestDoc {
    #[serde(default)]
    base: BTreeMap<String, String>,
    #[serde(default)]
    edited: BTreeMap<String, String>,
}

fn parse_index(key: &str) -> Result<usize> {
    key.trim().parse().map_err(|_| Error::Format(format!("manifest key {key:?} is not an index")))
}

fn checked_relative(raw: &str) -> Result<PathBuf> {
    let path = PathBuf::from(raw);
    if raw.is_empty() {
        return Err(Error::Format("empty image path".into()));
    }
    for c in path.components() {
        match c {
            Component::Normal(_) | Component::CurDir => {}
            _ => return Err(Error::Format(format!("image path {raw:?} must be relative without '..'"))),
        }
    }
    Ok(path)
}

impl ImageManifest {
    /// Parses the JSON document: `{"base": {"n": path}, "edited": {"n,m": path}}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ManifestDoc = serde_json::from_str(text).map_err(|e| Error::Format(format!("manifest: {e}")))?;
        let mut out = ImageManifest::default();
        for (k, v) in &doc.base {
            out.base.insert(parse_index(k)?, checked_relative(v)?);
        }
        for (k, v) in &doc.edited {
            let (n, m) = k
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("edited key {k:?} must be \"n,m\"")))?;
            out.edited.insert((parse_index(n)?, parse_index(m)?), checked_relative(v)?);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let doc = ManifestDoc {
            base: self.base.iter().map(|(n, p)| (n.to_string(), p.to_string_lossy().into_owned())).collect(),
            edited: self
                .edited
                .iter()
                .map(|((n, m), p)| (format!("{n},{m}"), p.to_string_lossy().into_owned()))
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("manifest serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Checks every index against an N×M grid.
    pub fn validate(&self, num_codes: usize, num_directions: usize) -> Result<()> {
        if let Some(n) = self.base.keys().find(|&&n| n >= num_codes) {
            return Err(Error::Format(format!("manifest base index {n} out of range (N={num_codes})")));
        }
        if let Some((n, m)) = self.edited.keys().find(|&&(n, m)| n >= num_codes || m >= num_directions) {
            return Err(Error::Format(format!(
                "manifest edited index ({n}, {m}) out of range (N={num_codes}, M={num_directions})"
            )));
        }
        Ok(())
    }
}
