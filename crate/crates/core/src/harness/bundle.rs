//! On-disk tensor bundles: `manifest.json` plus `data.bin` holding the
//! samples back to back as little-endian `f64`, each in row-major order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, SplitTag, TensorDataset};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "data.bin";
const DTYPE: &str = "f64";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub shape: Vec<usize>,
    pub num_samples: usize,
    pub dtype: String,
    #[serde(default)]
    pub order_tag: SplitTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_names: Option<Vec<String>>,
    /// Rank vector a synthetic bundle was generated from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted_ranks: Option<Vec<usize>>,
}

impl BundleManifest {
    pub fn for_dataset(dataset: &TensorDataset) -> Self {
        Self {
            shape: dataset.shape().to_vec(),
            num_samples: dataset.len(),
            dtype: DTYPE.to_owned(),
            order_tag: dataset.tag(),
            mode_names: None,
            planted_ranks: None,
        }
    }
}

pub fn load_bundle(dir: &Path) -> Result<TensorDataset> {
    load_bundle_with_manifest(dir).map(|(dataset, _)| dataset)
}

pub fn read_manifest(dir: &Path) -> Result<BundleManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: BundleManifest =
        serde_json::from_str(&text).map_err(|e| Error::bundle(&path, format!("bad manifest: {e}")))?;
    if manifest.dtype != DTYPE {
        return Err(Error::bundle(
            &path,
            format!("unsupported dtype `{}` (only `{DTYPE}` is supported)", manifest.dtype),
        ));
    }
    if manifest.shape.is_empty() || manifest.shape.contains(&0) {
        return Err(Error::bundle(&path, format!("invalid shape {:?}", manifest.shape)));
    }
    if manifest.num_samples == 0 {
        return Err(Error::bundle(&path, "bundle holds no samples"));
    }
    if let Some(names) = &manifest.mode_names {
        if names.len() != manifest.shape.len() {
            return Err(Error::bundle(
                &path,
                format!("{} mode names for an order-{} shape", names.len(), manifest.shape.len()),
            ));
        }
    }
    Ok(manifest)
}

pub fn load_bundle_with_manifest(dir: &Path) -> Result<(TensorDataset, BundleManifest)> {
    let manifest = read_manifest(dir)?;
    let path = dir.join(DATA_FILE);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let per_sample: usize = manifest.shape.iter().product();
    let expected = per_sample * manifest.num_samples * 8;
    if bytes.len() != expected {
        return Err(Error::bundle(
            &path,
            format!(
                "size mismatch: manifest implies {expected} bytes ({} samples of shape {:?}), found {}",
                manifest.num_samples,
                manifest.shape,
                bytes.len()
            ),
        ));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let samples = values
        .chunks_exact(per_sample)
        .map(|chunk| DenseTensor::new(manifest.shape.clone(), chunk.to_vec()))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::bundle(&path, e.to_string()))?;
    let dataset = TensorDataset::new(samples, manifest.order_tag)?;
    Ok((dataset, manifest))
}

pub fn save_bundle(dataset: &TensorDataset, dir: &Path) -> Result<()> {
    save_bundle_with_manifest(dataset, &BundleManifest::for_dataset(dataset), dir)
}

/// Writes `dataset` with a caller-supplied manifest, which must agree with
/// the data on shape, sample count, dtype, and split tag.
pub fn save_bundle_with_manifest(dataset: &TensorDataset, manifest: &BundleManifest, dir: &Path) -> Result<()> {
    let base = BundleManifest::for_dataset(dataset);
    if manifest.shape != base.shape
        || manifest.num_samples != base.num_samples
        || manifest.dtype != base.dtype
        || manifest.order_tag != base.order_tag
    {
        return Err(Error::bundle(dir, "manifest does not describe the dataset"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut bytes = Vec::with_capacity(dataset.len() * dataset.samples()[0].len() * 8);
    for sample in dataset.samples() {
        for v in sample.values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let data_path = dir.join(DATA_FILE);
    fs::write(&data_path, bytes).map_err(|e| Error::io(&data_path, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))
}

/// Order-preserving split into `train/` and `test/` bundles under `out`.
pub fn split_bundle(input: &Path, train_fraction: f64, out: &Path) -> Result<(usize, usize)> {
    let (dataset, manifest) = load_bundle_with_manifest(input)?;
    let (train, test) = dataset.split(train_fraction)?;
    for (part, name) in [(&train, "train"), (&test, "test")] {
        let m = BundleManifest {
            num_samples: part.len(),
            order_tag: part.tag(),
            ..manifest.clone()
        };
        save_bundle_with_manifest(part, &m, &out.join(name))?;
    }
    Ok((train.len(), test.len()))
}
