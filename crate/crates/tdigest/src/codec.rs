//! Binary serialization of digests.
//!
//! Every image starts with a fixed 43-octet header, multi-octet fields
//! little-endian, floats IEEE-754:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "TDIG"
//!      4     1  version, 0x01
//!      5     1  encoding: 0 = full, 1 = compact
//!      6     1  scale kind: 0..=5 for k0, k1, k2, k3, k2u, k3u
//!      7     8  delta (f64)
//!     15     8  min (f64)
//!     23     8  max (f64)
//!     31     8  total weight (f64)
//!     39     4  centroid count (u32)
//!     43     —  payload
//! ```
//!
//! The full payload opens with one weight-format octet: 0 when every weight
//! is an integer representable in 32 bits (each centroid is then mean f64 +
//! weight u32, the round trip stays bit-exact), 1 otherwise (mean f64 +
//! weight f64). The compact payload stores the first mean as f64, each later
//! mean as an f32 delta from the previously *reconstructed* mean (so rounding
//! does not accumulate), then all weights as base-128 varints,
//! least-significant group first; non-integer weights are not representable
//! and force the full encoding.
//!
//! Encode a fully merged digest (run `compress` first); the buffered working
//! state is not part of the wire contract.

use crate::digest::{MergePolicy, TDigest, MIN_DELTA};
use crate::scale::ScaleKind;
use crate::Centroid;
use thiserror::Error;

const MAGIC: [u8; 4] = *b"TDIG";
const VERSION: u8 = 0x01;
const HEADER_LEN: usize = 43;

const FULL_WEIGHTS_U32: u8 = 0;
const FULL_WEIGHTS_F64: u8 = 1;

/// Wire encoding selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// Full precision: every mean and weight recoverable bit-exactly.
    Full,
    /// Delta-encoded means and varint weights; smaller, means recovered to
    /// roughly ten significant figures.
    Compact,
}

impl Encoding {
    fn tag(self) -> u8 {
        match self {
            Encoding::Full => 0,
            Encoding::Compact => 1,
        }
    }
}

/// A serialized digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigestWireImage {
    encoding: Encoding,
    bytes: Vec<u8>,
}

impl DigestWireImage {
    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

/// Decoding and encoding failures, each distinct so callers can tell a
/// foreign file from a damaged one.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("bad magic: not a digest image")]
    BadMagic,
    #[error("unsupported version {0:#04x}")]
    UnsupportedVersion(u8),
    #[error("unknown encoding tag {0:#04x}")]
    UnknownEncoding(u8),
    #[error("unknown scale kind tag {0:#04x}")]
    UnknownScaleKind(u8),
    #[error("truncated payload")]
    Truncated,
    #[error("decoded centroid means are not monotone")]
    NonMonotoneMeans,
    #[error("compact encoding requires integer weights; use the full encoding")]
    NonIntegerWeight,
    #[error("invalid field: {0}")]
    InvalidField(&'static str),
}

fn scale_tag(kind: ScaleKind) -> u8 {
    match kind {
        ScaleKind::K0 => 0,
        ScaleKind::K1 => 1,
        ScaleKind::K2 => 2,
        ScaleKind::K3 => 3,
        ScaleKind::K2Unnormalized => 4,
        ScaleKind::K3Unnormalized => 5,
    }
}

fn scale_from_tag(tag: u8) -> Result<ScaleKind, CodecError> {
    ScaleKind::ALL
        .get(tag as usize)
        .copied()
        .ok_or(CodecError::UnknownScaleKind(tag))
}

/// Serializes a digest. Deterministic: identical digests produce identical
/// images.
pub fn encode(digest: &TDigest, encoding: Encoding) -> Result<DigestWireImage, CodecError> {
    let centroids = digest.centroids();
    let mut bytes = Vec::with_capacity(HEADER_LEN + 16 * centroids.len() + 1);
    bytes.extend_from_slice(&MAGIC);
    bytes.push(VERSION);
    bytes.push(encoding.tag());
    bytes.push(scale_tag(digest.scale()));
    bytes.extend_from_slice(&digest.delta().to_le_bytes());
    bytes.extend_from_slice(&digest.min().to_le_bytes());
    bytes.extend_from_slice(&digest.max().to_le_bytes());
    bytes.extend_from_slice(&digest.total_weight().to_le_bytes());
    bytes.extend_from_slice(&(centroids.len() as u32).to_le_bytes());

    match encoding {
        Encoding::Full => {
            let narrow = centroids
                .iter()
                .all(|c| c.weight().fract() == 0.0 && c.weight() <= u32::MAX as f64);
            bytes.push(if narrow {
                FULL_WEIGHTS_U32
            } else {
                FULL_WEIGHTS_F64
            });
            for c in centroids {
                bytes.extend_from_slice(&c.mean().to_le_bytes());
                if narrow {
                    bytes.extend_from_slice(&(c.weight() as u32).to_le_bytes());
                } else {
                    bytes.extend_from_slice(&c.weight().to_le_bytes());
                }
            }
        }
        Encoding::Compact => {
            for c in centroids {
                let w = c.weight();
                if !(w.fract() == 0.0 && w <= u64::MAX as f64) {
                    return Err(CodecError::NonIntegerWeight);
                }
            }
            if let Some(first) = centroids.first() {
                bytes.extend_from_slice(&first.mean().to_le_bytes());
                let mut reconstructed = first.mean();
                for c in &centroids[1..] {
                    let delta = ((c.mean() - reconstructed) as f32).max(0.0);
                    bytes.extend_from_slice(&delta.to_le_bytes());
                    reconstructed += delta as f64;
                }
            }
            for c in centroids {
                write_varint(&mut bytes, c.weight() as u64);
            }
        }
    }
    Ok(DigestWireImage { encoding, bytes })
}

/// Deserializes an image produced by [`encode`]. The digest comes back with
/// the default merge policy for its delta and without instrumentation.
pub fn decode(bytes: &[u8]) -> Result<TDigest, CodecError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(CodecError::BadMagic);
    }
    let version = r.take_u8()?;
    if version != VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    let encoding = match r.take_u8()? {
        0 => Encoding::Full,
        1 => Encoding::Compact,
        tag => return Err(CodecError::UnknownEncoding(tag)),
    };
    let scale = scale_from_tag(r.take_u8()?)?;
    let delta = r.take_f64()?;
    let min = r.take_f64()?;
    let max = r.take_f64()?;
    let total_weight = r.take_f64()?;
    let count = r.take_u32()? as usize;

    if !(delta.is_finite() && delta >= MIN_DELTA) {
        return Err(CodecError::InvalidField(
            "delta below the supported minimum",
        ));
    }
    if !(total_weight >= 0.0 && total_weight.is_finite()) {
        return Err(CodecError::InvalidField("total weight"));
    }

    let mut centroids: Vec<Centroid> = Vec::with_capacity(count.min(1 << 20));
    match encoding {
        Encoding::Full => {
            let narrow = match r.take_u8()? {
                FULL_WEIGHTS_U32 => true,
                FULL_WEIGHTS_F64 => false,
                _ => return Err(CodecError::InvalidField("full-payload weight format")),
            };
            for _ in 0..count {
                let mean = r.take_f64()?;
                let weight = if narrow {
                    r.take_u32()? as f64
                } else {
                    r.take_f64()?
                };
                centroids.push(Centroid::new(mean, weight));
            }
        }
        Encoding::Compact => {
            if count > 0 {
                let mut mean = r.take_f64()?;
                let mut means = Vec::with_capacity(count);
                means.push(mean);
                for _ in 1..count {
                    let delta_bits = r.take_f32()?;
                    if delta_bits < 0.0 || delta_bits.is_nan() {
                        return Err(CodecError::NonMonotoneMeans);
                    }
                    mean += delta_bits as f64;
                    means.push(mean);
                }
                let mut weights = Vec::with_capacity(count);
                for _ in 0..count {
                    weights.push(r.take_varint()? as f64);
                }
                centroids.extend(
                    means
                        .into_iter()
                        .zip(weights)
                        .map(|(m, w)| Centroid::new(m, w)),
                );
            }
        }
    }
    if r.pos != bytes.len() {
        return Err(CodecError::InvalidField("trailing bytes after payload"));
    }

    for pair in centroids.windows(2) {
        if pair[0].mean() > pair[1].mean() {
            return Err(CodecError::NonMonotoneMeans);
        }
    }
    for c in &centroids {
        if !c.mean().is_finite() {
            return Err(CodecError::InvalidField("non-finite centroid mean"));
        }
        if !(c.weight() > 0.0 && c.weight().is_finite()) {
            return Err(CodecError::InvalidField("non-positive centroid weight"));
        }
    }
    if centroids.is_empty() && total_weight != 0.0 {
        return Err(CodecError::InvalidField("weight with no centroids"));
    }

    let mut digest = TDigest::new(delta, scale, MergePolicy::default_for(delta))
        .map_err(|_| CodecError::InvalidField("digest parameters"))?;
    digest.set_extrema(min, max);
    digest.set_state(centroids, total_weight);
    Ok(digest)
}

fn write_varint(out: &mut Vec<u8>, mut value: u64) {
    loop {
        let group = (value & 0x7f) as u8;
        value >>= 7;
        if value == 0 {
            out.push(group);
            return;
        }
        out.push(group | 0x80);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(len).ok_or(CodecError::Truncated)?;
        if end > self.bytes.len() {
            return Err(CodecError::Truncated);
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn take_u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn take_u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn take_f32(&mut self) -> Result<f32, CodecError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn take_f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn take_varint(&mut self) -> Result<u64, CodecError> {
        let mut value = 0u64;
        let mut shift = 0u32;
        loop {
            let byte = self.take_u8()?;
            if shift >= 64 || (shift == 63 && byte & 0x7f > 1) {
                return Err(CodecError::InvalidField("varint overflows 64 bits"));
            }
            value |= u64::from(byte & 0x7f) << shift;
            if byte & 0x80 == 0 {
                return Ok(value);
            }
            shift += 7;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digest::MergePolicy;

    fn sample_digest() -> TDigest {
        let policy = MergePolicy {
            buffer_capacity: 100,
            working_delta_factor: 1.0,
            alternate_scan: false,
        };
        let values = (0..500).map(|i| (i as f64 * 0.7361).sin() + 2.0);
        TDigest::from_values(50.0, ScaleKind::K1, policy, values).unwrap()
    }

    #[test]
    fn empty_digest_is_header_only() {
        let d = TDigest::with_defaults(100.0, ScaleKind::K2).unwrap();
        let image = encode(&d, Encoding::Compact).unwrap();
        assert_eq!(image.len(), HEADER_LEN);
        let back = decode(image.as_bytes()).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.total_weight(), 0.0);
        assert_eq!(back.min(), f64::INFINITY);
        assert_eq!(back.max(), f64::NEG_INFINITY);

        let full = encode(&d, Encoding::Full).unwrap();
        assert_eq!(full.len(), HEADER_LEN + 1);
        assert!(decode(full.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn full_round_trip_is_bit_exact() {
        let d = sample_digest();
        let image = encode(&d, Encoding::Full).unwrap();
        let back = decode(image.as_bytes()).unwrap();
        assert_eq!(back.centroids().len(), d.centroids().len());
        for (a, b) in d.centroids().iter().zip(back.centroids()) {
            assert_eq!(a.mean().to_bits(), b.mean().to_bits());
            assert_eq!(a.weight().to_bits(), b.weight().to_bits());
        }
        assert_eq!(back.min(), d.min());
        assert_eq!(back.max(), d.max());
        assert_eq!(back.total_weight(), d.total_weight());
        assert_eq!(back.delta(), d.delta());
        assert_eq!(back.scale(), d.scale());
    }

    #[test]
    fn full_round_trip_with_fractional_weights() {
        let mut d = TDigest::with_defaults(20.0, ScaleKind::K0).unwrap();
        d.merge_buffer(&[(1.0, 0.5), (2.0, 2.25), (3.0, 1.0)])
            .unwrap();
        d.compress();
        let image = encode(&d, Encoding::Full).unwrap();
        let back = decode(image.as_bytes()).unwrap();
        for (a, b) in d.centroids().iter().zip(back.centroids()) {
            assert_eq!(a.weight().to_bits(), b.weight().to_bits());
        }
        // fractional weights are unrepresentable compactly
        assert_eq!(
            encode(&d, Encoding::Compact).unwrap_err(),
            CodecError::NonIntegerWeight
        );
    }

    #[test]
    fn compact_round_trip_means_and_quantiles() {
        let d = sample_digest();
        let image = encode(&d, Encoding::Compact).unwrap();
        let back = decode(image.as_bytes()).unwrap();
        assert_eq!(back.centroids().len(), d.centroids().len());
        let data_scale = d.max().abs().max(d.min().abs());
        for (a, b) in d.centroids().iter().zip(back.centroids()) {
            assert!((a.mean() - b.mean()).abs() <= 1e-8 * data_scale);
            assert_eq!(a.weight(), b.weight());
        }
        for q in [0.01, 0.5, 0.99] {
            let (orig, round) = (d.quantile(q).unwrap(), back.quantile(q).unwrap());
            assert!(
                (orig - round).abs() <= 1e-8 * orig.abs().max(1e-300),
                "q={q}: {orig} vs {round}"
            );
        }
    }

    #[test]
    fn images_are_deterministic() {
        let (a, b) = (sample_digest(), sample_digest());
        assert_eq!(
            encode(&a, Encoding::Full).unwrap(),
            encode(&b, Encoding::Full).unwrap()
        );
        assert_eq!(
            encode(&a, Encoding::Compact).unwrap(),
            encode(&b, Encoding::Compact).unwrap()
        );
    }

    #[test]
    fn decode_rejects_each_failure_mode_distinctly() {
        let image = encode(&sample_digest(), Encoding::Full)
            .unwrap()
            .into_bytes();

        let mut bad_magic = image.clone();
        bad_magic[0] = b'X';
        assert_eq!(decode(&bad_magic).unwrap_err(), CodecError::BadMagic);

        let mut bad_version = image.clone();
        bad_version[4] = 0x7f;
        assert_eq!(
            decode(&bad_version).unwrap_err(),
            CodecError::UnsupportedVersion(0x7f)
        );

        let mut bad_encoding = image.clone();
        bad_encoding[5] = 9;
        assert_eq!(
            decode(&bad_encoding).unwrap_err(),
            CodecError::UnknownEncoding(9)
        );

        let mut bad_scale = image.clone();
        bad_scale[6] = 42;
        assert_eq!(
            decode(&bad_scale).unwrap_err(),
            CodecError::UnknownScaleKind(42)
        );

        let truncated = &image[..image.len() - 3];
        assert_eq!(decode(truncated).unwrap_err(), CodecError::Truncated);

        // swap the first two means to break monotonicity
        let mut shuffled = image.clone();
        let base = HEADER_LEN + 1;
        for i in 0..8 {
            shuffled.swap(base + i, base + 12 + i);
        }
        assert_eq!(decode(&shuffled).unwrap_err(), CodecError::NonMonotoneMeans);

        let mut trailing = image.clone();
        trailing.push(0);
        assert!(matches!(
            decode(&trailing).unwrap_err(),
            CodecError::InvalidField(_)
        ));
    }

    #[test]
    fn varint_round_trip() {
        for v in [0u64, 1, 127, 128, 300, 16_383, 16_384, u64::MAX] {
            let mut buf = Vec::new();
            write_varint(&mut buf, v);
            let mut r = Reader {
                bytes: &buf,
                pos: 0,
            };
            assert_eq!(r.take_varint().unwrap(), v);
            assert_eq!(r.pos, buf.len());
        }
    }
}
