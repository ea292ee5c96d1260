//! Versioned JSON model documents.
//!
//! Floats are written in shortest round-trip form and parsed with correct
//! rounding, so every weight, bias and gain survives a round trip bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::net::{LayerParams, Network};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    input_dim: usize,
    rng_seed: u64,
    /// Output layer first.
    layers: Vec<LayerDocument>,
    #[serde(default)]
    training: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerDocument {
    fan_in: usize,
    neurons: usize,
    /// Row-major `fan_in x neurons`.
    weights: Vec<f64>,
    biases: Vec<f64>,
    gains: Vec<f64>,
}

pub fn serialize(net: &Network) -> String {
    let doc = ModelDocument {
        format_version: FORMAT_VERSION,
        input_dim: net.input_dim(),
        rng_seed: net.rng_seed(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerDocument {
                fan_in: l.fan_in(),
                neurons: l.size(),
                weights: l.weights().to_vec(),
                biases: l.biases().to_vec(),
                gains: l.gains().to_vec(),
            })
            .collect(),
        training: net.metadata().clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("model document is always serializable");
    text.push('\n');
    text
}

pub fn deserialize(text: &str) -> Result<Network> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model document: {e}")))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::Version {
            found: doc.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let layers = doc
        .layers
        .into_iter()
        .enumerate()
        .map(|(m, l)| {
            if l.biases.len() != l.neurons {
                return Err(Error::Invariant(format!(
                    "layer {m} declares {} neurons but has {} biases",
                    l.neurons,
                    l.biases.len()
                )));
            }
            LayerParams::with_gains(l.fan_in, l.weights, l.biases, l.gains)
                .map_err(|e| Error::Invariant(format!("layer {m}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut net = Network::from_layers(doc.input_dim, layers, doc.rng_seed)?;
    *net.metadata_mut() = doc.training;
    Ok(net)
}

pub fn save(net: &Network, path: &Path) -> Result<()> {
    write_atomic(path, serialize(net).as_bytes())
}

pub fn load(path: &Path) -> Result<Network> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    deserialize(&text)
}

/// Writes through a sibling temp file so a failed run never leaves a partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::NeuronId;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), h1 in 1usize..6, h2 in 1usize..6, gain in 0.0f64..5.0) {
            let mut net = Network::new(3, &[h1, h2], 2, seed).unwrap();
            net.set_gain(NeuronId::new(1, 0), gain).unwrap();
            net.metadata_mut().insert("epochs".into(), "12".into());
            let back = deserialize(&serialize(&net)).unwrap();
            prop_assert_eq!(&back, &net);
            for (a, b) in back.layers().iter().zip(net.layers()) {
                for (x, y) in a.weights().iter().zip(b.weights()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            prop_assert_eq!(serialize(&back), serialize(&net));
        }
    }

    #[test]
    fn truncated_document_is_a_parse_error() {
        let text = serialize(&Network::new(2, &[3], 1, 0).unwrap());
        let cut = &text[..text.len() / 2];
        assert!(matches!(deserialize(cut), Err(Error::Parse(_))));
    }

    #[test]
    fn gain_length_mismatch_is_an_invariant_error() {
        let text = serialize(&Network::new(2, &[3], 1, 0).unwrap());
        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["layers"][1]["gains"] = serde_json::json!([1.0, 1.0]);
        let err = deserialize(&doc.to_string()).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)), "{err}");
    }

    #[test]
    fn version_mismatch_is_reported() {
        let text = serialize(&Network::new(2, &[3], 1, 0).unwrap());
        let text = text.replace("\"format_version\": 1", "\"format_version\": 7");
        assert!(matches!(
            deserialize(&text),
            Err(Error::Version { found: 7, expected: 1 })
        ));
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/model.json");
        let net = Network::new(4, &[2, 2], 3, 8).unwrap();
        save(&net, &path).unwrap();
        assert_eq!(load(&path).unwrap(), net);
        assert!(!dir.path().join("nested/model.json.partial").exists());
        assert!(matches!(load(&dir.path().join("nope.json")), Err(Error::Io { .. })));
    }
}
