//! Binary model files.
//!
//! Layout: 8-byte magic, `u32` schema version, `u32` header length, JSON
//! header, little-endian `f64` parameters, then a SHA-256 of everything
//! before it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Architecture, ModelError, ModelKind, SurrogateModel, Target, TrainingMeta};
use crate::dataio::FeatureBounds;
use crate::domain::FinMaterial;

pub const MODEL_MAGIC: &[u8; 8] = b"FINFOM\0M";
pub const MODEL_SCHEMA_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;
const PREFIX_LEN: usize = 16;

#[derive(Serialize, Deserialize)]
struct Header {
    kind: ModelKind,
    target: Target,
    material: FinMaterial,
    architecture: Architecture,
    normalization: FeatureBounds,
    training_meta: TrainingMeta,
    param_count: usize,
}

pub(crate) fn encode(model: &SurrogateModel) -> Vec<u8> {
    let header = Header {
        kind: model.kind,
        target: model.target,
        material: model.material,
        architecture: model.architecture.clone(),
        normalization: model.normalization,
        training_meta: model.training_meta.clone(),
        param_count: model.params.len(),
    };
    let json = serde_json::to_vec(&header).expect("model header serializes");
    let mut buf =
        Vec::with_capacity(PREFIX_LEN + json.len() + 8 * model.params.len() + CHECKSUM_LEN);
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&MODEL_SCHEMA_VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    for p in &model.params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    let sum = Sha256::digest(&buf);
    buf.extend_from_slice(&sum);
    buf
}

pub(crate) fn decode(bytes: &[u8]) -> Result<SurrogateModel, ModelError> {
    if bytes.len() < 8 || &bytes[..8] != MODEL_MAGIC {
        return Err(ModelError::Format("bad magic".into()));
    }
    if bytes.len() < PREFIX_LEN {
        return Err(ModelError::Checksum);
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != MODEL_SCHEMA_VERSION {
        return Err(ModelError::Version {
            found: version,
            expected: MODEL_SCHEMA_VERSION,
        });
    }
    if bytes.len() < PREFIX_LEN + CHECKSUM_LEN {
        return Err(ModelError::Checksum);
    }
    let (body, sum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != sum {
        return Err(ModelError::Checksum);
    }
    let header_len = u32::from_le_bytes(body[12..16].try_into().unwrap()) as usize;
    let json = body
        .get(PREFIX_LEN..PREFIX_LEN + header_len)
        .ok_or_else(|| ModelError::Format("header length exceeds file".into()))?;
    let header: Header =
        serde_json::from_slice(json).map_err(|e| ModelError::Format(e.to_string()))?;
    let raw = &body[PREFIX_LEN + header_len..];
    if raw.len() != 8 * header.param_count {
        return Err(ModelError::Format(format!(
            "{} parameter bytes, header declares {} parameters",
            raw.len(),
            header.param_count
        )));
    }
    let params = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let model = SurrogateModel {
        kind: header.kind,
        target: header.target,
        material: header.material,
        architecture: header.architecture,
        normalization: header.normalization,
        params,
        training_meta: header.training_meta,
    };
    model.check()?;
    Ok(model)
}

pub fn save_model(model: &SurrogateModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    fs::write(path, encode(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SurrogateModel, ModelError> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SurrogateModel {
        SurrogateModel {
            kind: ModelKind::Linear,
            target: Target::Power,
            material: FinMaterial::Pdms1to20,
            architecture: Architecture::Polynomial { degree: 1 },
            normalization: FeatureBounds::default(),
            params: vec![0.1, -2.0, 3.5e-7, f64::MIN_POSITIVE, 1.0 / 3.0],
            training_meta: TrainingMeta {
                data_hash: "abc".into(),
                ..Default::default()
            },
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = tiny();
        assert_eq!(decode(&encode(&m)).unwrap(), m);
    }

    #[test]
    fn every_truncation_is_rejected() {
        let bytes = encode(&tiny());
        for cut in 16..bytes.len() {
            assert!(
                matches!(decode(&bytes[..cut]), Err(ModelError::Checksum)),
                "cut {cut}"
            );
        }
    }

    #[test]
    fn flipped_parameter_byte_is_rejected() {
        let mut bytes = encode(&tiny());
        let n = bytes.len();
        bytes[n - CHECKSUM_LEN - 3] ^= 0x10;
        assert!(matches!(decode(&bytes), Err(ModelError::Checksum)));
    }

    #[test]
    fn version_checked_before_checksum() {
        let mut bytes = encode(&tiny());
        bytes[8..12].copy_from_slice(&(MODEL_SCHEMA_VERSION + 1).to_le_bytes());
        assert!(matches!(
            decode(&bytes),
            Err(ModelError::Version {
                found: 2,
                expected: 1
            })
        ));
    }

    #[test]
    fn other_files_are_not_models() {
        assert!(matches!(
            decode(b"material_id,frequency_hz"),
            Err(ModelError::Format(_))
        ));
    }
}
