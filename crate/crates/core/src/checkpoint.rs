//! Checkpoint persistence.
//!
//! Layout: the magic "MRFL1" and a newline, a little-endian u64 header
//! length, the JSON header (config, vocabularies, seed, and a parameter
//! manifest of name/shape/byte-offset sorted by name), zero padding to an
//! 8-byte boundary, then the payload: the parameters' f64 data arrays in
//! manifest order, little-endian. Loading a saved model reproduces its
//! parameters bit for bit.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::VocabSet;
use crate::model::{Model, ModelConfig, ModelError, ModelParams};

pub const MAGIC: &[u8; 5] = b"MRFL1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}: not a checkpoint (bad magic)")]
    BadMagic(String),
    #[error("corrupt checkpoint {path}: {why}")]
    Corrupt { path: String, why: String },
    #[error("checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    vocabs: VocabSet,
    seed: u64,
    manifest: Vec<ManifestEntry>,
}

/// Write bytes via a temp file in the target directory plus rename, so a
/// crash never leaves a half-written file at the destination.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn serialize_model(model: &Model) -> Result<Vec<u8>, CheckpointError> {
    let mut tensors: BTreeMap<String, crate::numerics::Tensor> = BTreeMap::new();
    model.params.visit(&mut |name, t| {
        tensors.insert(name, t.clone());
    });

    let mut manifest = Vec::with_capacity(tensors.len());
    let mut offset = 0usize;
    for (name, t) in &tensors {
        manifest.push(ManifestEntry {
            name: name.clone(),
            shape: t.shape.clone(),
            offset,
        });
        offset += t.numel() * 8;
    }

    let header = Header {
        config: model.config.clone(),
        vocabs: model.vocabs.clone(),
        seed: model.seed,
        manifest,
    };
    let header_json = serde_json::to_vec(&header)?;

    let mut out = Vec::with_capacity(14 + header_json.len() + offset + 8);
    out.extend_from_slice(MAGIC);
    out.push(b'\n');
    out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_json);
    while out.len() % 8 != 0 {
        out.push(0);
    }
    for (_, t) in &tensors {
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save_model(model: &Model, path: &Path) -> Result<(), CheckpointError> {
    let bytes = serialize_model(model)?;
    atomic_write(path, &bytes).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn deserialize_model(bytes: &[u8], label: &str) -> Result<Model, CheckpointError> {
    let corrupt = |why: &str| CheckpointError::Corrupt {
        path: label.to_string(),
        why: why.to_string(),
    };
    if bytes.len() < 14 || &bytes[..5] != MAGIC || bytes[5] != b'\n' {
        return Err(CheckpointError::BadMagic(label.to_string()));
    }
    let header_len = u64::from_le_bytes(bytes[6..14].try_into().expect("8 bytes")) as usize;
    let header_end = 14usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| corrupt("header length exceeds file"))?;
    let header: Header = serde_json::from_slice(&bytes[14..header_end])?;
    let payload_start = header_end.div_ceil(8) * 8;
    if payload_start > bytes.len() {
        return Err(corrupt("missing payload"));
    }
    let payload = &bytes[payload_start..];

    let expected: usize = header
        .manifest
        .iter()
        .map(|e| e.shape.iter().product::<usize>() * 8)
        .sum();
    if expected != payload.len() {
        return Err(corrupt(&format!(
            "manifest implies {expected} payload bytes, found {}",
            payload.len()
        )));
    }
    for (lang, bundle) in &header.vocabs.per_language {
        for v in [
            &bundle.chars,
            &bundle.words,
            &bundle.lemmas,
            &bundle.msd_components,
        ] {
            if !v.is_well_formed() {
                return Err(corrupt(&format!("malformed vocabulary for {lang}")));
            }
        }
    }
    if !header.vocabs.shared_msd.is_well_formed() {
        return Err(corrupt("malformed shared MSD vocabulary"));
    }

    let mut params = ModelParams::init(&header.config, &header.vocabs, header.seed)?;
    let mut by_name: BTreeMap<&str, &ManifestEntry> = BTreeMap::new();
    for entry in &header.manifest {
        by_name.insert(&entry.name, entry);
    }
    let expected_names = params.names();
    if expected_names.len() != header.manifest.len() {
        return Err(corrupt(&format!(
            "manifest has {} tensors, model needs {}",
            header.manifest.len(),
            expected_names.len()
        )));
    }
    let mut failure: Option<String> = None;
    params.visit_mut(&mut |name, tensor| {
        let Some(entry) = by_name.get(name.as_str()) else {
            failure.get_or_insert(format!("missing tensor {name}"));
            return;
        };
        if entry.shape != tensor.shape {
            failure.get_or_insert(format!(
                "tensor {name} has shape {:?}, expected {:?}",
                entry.shape, tensor.shape
            ));
            return;
        }
        let start = entry.offset;
        for (j, v) in tensor.data.iter_mut().enumerate() {
            let b = &payload[start + j * 8..start + (j + 1) * 8];
            *v = f64::from_le_bytes(b.try_into().expect("8 bytes"));
        }
    });
    if let Some(why) = failure {
        return Err(corrupt(&why));
    }

    Ok(Model {
        config: header.config,
        vocabs: header.vocabs,
        params,
        seed: header.seed,
    })
}

pub fn load_model(path: &Path) -> Result<Model, CheckpointError> {
    let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    deserialize_model(&bytes, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ContextMode;
    use crate::testutil::tiny_setup;

    #[test]
    fn round_trip_is_byte_identical_and_bit_exact() {
        let setup = tiny_setup(4, ContextMode::FullLstm, true, 5, 50);
        let bytes = serialize_model(&setup.model).unwrap();
        let loaded = deserialize_model(&bytes, "mem").unwrap();
        assert_eq!(loaded.params, setup.model.params);
        assert_eq!(loaded.config, setup.model.config);
        assert_eq!(loaded.vocabs, setup.model.vocabs);
        assert_eq!(loaded.seed, setup.model.seed);
        let again = serialize_model(&loaded).unwrap();
        assert_eq!(bytes, again, "save -> load -> save changed bytes");
    }

    #[test]
    fn file_round_trip_preserves_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let setup = tiny_setup(4, ContextMode::FullLstm, false, 6, 51);
        save_model(&setup.model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        for inst in &setup.instances {
            let a = crate::inference::predict_form(&setup.model, inst).unwrap();
            let b = crate::inference::predict_form(&loaded, inst).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let err = deserialize_model(b"NOTCHKPT========", "mem").unwrap_err();
        assert!(matches!(err, CheckpointError::BadMagic(_)));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let setup = tiny_setup(3, ContextMode::FullLstm, false, 4, 52);
        let mut bytes = serialize_model(&setup.model).unwrap();
        bytes.truncate(bytes.len() - 8);
        let err = deserialize_model(&bytes, "mem").unwrap_err();
        assert!(matches!(err, CheckpointError::Corrupt { .. }), "{err}");
    }

    #[test]
    fn manifest_accounts_for_every_payload_byte() {
        let setup = tiny_setup(3, ContextMode::Window2, false, 4, 53);
        let bytes = serialize_model(&setup.model).unwrap();
        // total parameter count times 8 equals the payload length
        let header_len = u64::from_le_bytes(bytes[6..14].try_into().unwrap()) as usize;
        let payload_start = (14 + header_len).div_ceil(8) * 8;
        let payload_len = bytes.len() - payload_start;
        assert_eq!(payload_len, setup.model.params.total_parameters() * 8);
    }
}
