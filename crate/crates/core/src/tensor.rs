//! Dense real tensors, sample datasets, and dataset preprocessing.

use std::fmt;

use ndarray::{ArrayD, Axis, IxDyn, Slice};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An order-N real array stored in row-major order.
///
/// Construction rejects zero-sized modes and non-finite entries.
#[derive(Clone, PartialEq)]
pub struct DenseTensor {
    data: ArrayD<f64>,
}

impl fmt::Debug for DenseTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseTensor")
            .field("shape", &self.shape())
            .finish_non_exhaustive()
    }
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        validate_shape(&shape)?;
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::InvalidTensor(format!(
                "shape {shape:?} holds {expected} entries but {} values were given",
                data.len()
            )));
        }
        let array = ArrayD::from_shape_vec(IxDyn(&shape), data)
            .map_err(|e| Error::InvalidTensor(e.to_string()))?;
        Self::from_array(array)
    }

    pub fn from_array(data: ArrayD<f64>) -> Result<Self> {
        validate_shape(data.shape())?;
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidTensor(format!("non-finite entry {bad}")));
        }
        Ok(Self {
            data: data.as_standard_layout().into_owned(),
        })
    }

    /// Internal constructor for arrays produced by arithmetic on valid tensors.
    pub(crate) fn from_array_unchecked(data: ArrayD<f64>) -> Self {
        Self {
            data: data.as_standard_layout().into_owned(),
        }
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        validate_shape(shape)?;
        Ok(Self {
            data: ArrayD::zeros(IxDyn(shape)),
        })
    }

    pub fn shape(&self) -> &[usize] {
        self.data.shape()
    }

    pub fn order(&self) -> usize {
        self.data.ndim()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Entries in row-major order.
    pub fn values(&self) -> &[f64] {
        self.data
            .as_slice()
            .expect("DenseTensor is always in standard layout")
    }

    pub fn array(&self) -> &ArrayD<f64> {
        &self.data
    }

    pub fn into_array(self) -> ArrayD<f64> {
        self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self::from_array_unchecked(&self.data * alpha)
    }

    /// Reorders axes so that output axis `k` is input axis `perm[k]`.
    pub fn permute_modes(&self, perm: &[usize]) -> Result<Self> {
        validate_permutation(perm, self.order())?;
        Ok(Self::from_array_unchecked(
            self.data.clone().permuted_axes(IxDyn(perm)),
        ))
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::InvalidTensor("tensor must have at least one mode".into()));
    }
    if shape.contains(&0) {
        return Err(Error::InvalidTensor(format!(
            "every mode must have size >= 1, got {shape:?}"
        )));
    }
    Ok(())
}

pub(crate) fn validate_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::InvalidPermutation(perm.to_vec()));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidPermutation(perm.to_vec()));
        }
        seen[p] = true;
    }
    Ok(())
}

/// `||x - xhat||_F / ||x||_F`.
pub fn relative_error(x: &DenseTensor, xhat: &DenseTensor) -> Result<f64> {
    if x.shape() != xhat.shape() {
        return Err(Error::ShapeMismatch {
            expected: x.shape().to_vec(),
            found: xhat.shape().to_vec(),
        });
    }
    let norm = x.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let residual: f64 = x
        .values()
        .iter()
        .zip(xhat.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(residual.sqrt() / norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
    #[default]
    Unsplit,
}

/// A list of equally shaped samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorDataset {
    samples: Vec<DenseTensor>,
    tag: SplitTag,
}

impl TensorDataset {
    pub fn new(samples: Vec<DenseTensor>, tag: SplitTag) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidArgument("dataset needs at least one sample".into()))?;
        let shape = first.shape().to_vec();
        if let Some(bad) = samples.iter().find(|s| s.shape() != shape.as_slice()) {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: bad.shape().to_vec(),
            });
        }
        Ok(Self { samples, tag })
    }

    pub fn samples(&self) -> &[DenseTensor] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<DenseTensor> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn shape(&self) -> &[usize] {
        self.samples[0].shape()
    }

    pub fn tag(&self) -> SplitTag {
        self.tag
    }

    pub fn with_tag(mut self, tag: SplitTag) -> Self {
        self.tag = tag;
        self
    }

    /// Order-preserving split: the first `ceil(frac * L)` samples train, the rest test.
    pub fn split(&self, train_fraction: f64) -> Result<(TensorDataset, TensorDataset)> {
        let n = self.samples.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "splitting needs at least 2 samples, dataset has {n}"
            )));
        }
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        // Guard against 0.8 * 10 = 8.000000000000002 rounding up to 9.
        let raw = train_fraction * n as f64;
        let mut n_train = (raw - 1e-9).ceil() as usize;
        n_train = n_train.clamp(1, n - 1);
        let train = TensorDataset {
            samples: self.samples[..n_train].to_vec(),
            tag: SplitTag::Train,
        };
        let test = TensorDataset {
            samples: self.samples[n_train..].to_vec(),
            tag: SplitTag::Test,
        };
        Ok((train, test))
    }
}

/// Global min-max scaling of every entry in the dataset to `[0, 1]`.
///
/// A constant dataset maps to all zeros.
pub fn minmax_normalize(dataset: &TensorDataset) -> TensorDataset {
    let (min, max) = dataset
        .samples
        .iter()
        .flat_map(|s| s.values().iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    let range = max - min;
    let samples = dataset
        .samples
        .iter()
        .map(|s| {
            let mapped = if range > 0.0 {
                s.data.mapv(|v| (v - min) / range)
            } else {
                ArrayD::zeros(s.data.raw_dim())
            };
            DenseTensor::from_array_unchecked(mapped)
        })
        .collect();
    TensorDataset {
        samples,
        tag: dataset.tag,
    }
}

/// Multi-way delay embedding along `axis`.
///
/// Produces `floor((len - window) / stride) + 1` overlapping windows in temporal
/// order. Each sample keeps the remaining axes in their original order and appends
/// the window axis last.
pub fn delay_embed(
    series: &DenseTensor,
    axis: usize,
    window: usize,
    stride: usize,
) -> Result<TensorDataset> {
    if axis >= series.order() {
        return Err(Error::InvalidArgument(format!(
            "axis {axis} out of range for an order-{} tensor",
            series.order()
        )));
    }
    let len = series.shape()[axis];
    if window == 0 || window > len {
        return Err(Error::InvalidArgument(format!(
            "window {window} must lie in [1, {len}]"
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    let mut perm: Vec<usize> = (0..series.order()).filter(|&a| a != axis).collect();
    perm.push(axis);

    let count = (len - window) / stride + 1;
    let samples = (0..count)
        .map(|k| {
            let start = k * stride;
            let slab = series
                .data
                .slice_axis(Axis(axis), Slice::from(start..start + window))
                .permuted_axes(IxDyn(&perm));
            DenseTensor::from_array_unchecked(slab.to_owned())
        })
        .collect();
    TensorDataset::new(samples, SplitTag::Unsplit)
}
