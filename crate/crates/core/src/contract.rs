//! Contraction of FCTN core sets.
//!
//! Every core axis carries a label: the physical mode of its vertex or the bond
//! it shares with another vertex. Two labeled tensors contract by summing all
//! labels they share, which lets the full network and the per-core gradient
//! environments reuse one pairwise kernel.

use ndarray::{ArrayD, ArrayViewD, CowArray, IxDyn};

use crate::error::{Error, Result};
use crate::structure::TNStructure;
use crate::tensor::DenseTensor;

/// One core tensor per mode. Core `i` has shape `(I_i, r_i0, ..., r_iN)` over
/// partners `j != i` in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreSet {
    cores: Vec<DenseTensor>,
}

impl CoreSet {
    pub fn new(cores: Vec<DenseTensor>) -> Self {
        Self { cores }
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn cores_mut(&mut self) -> &mut [DenseTensor] {
        &mut self.cores
    }

    pub fn into_cores(self) -> Vec<DenseTensor> {
        self.cores
    }

    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }

    /// Physical dimensions `(I_1, ..., I_N)`.
    pub fn physical_shape(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.shape()[0]).collect()
    }

    pub fn num_params(&self) -> usize {
        self.cores.iter().map(DenseTensor::len).sum()
    }

    /// Checks the shared-edge invariant against `structure`.
    pub fn check_consistent(&self, structure: &TNStructure) -> Result<()> {
        if self.cores.len() != structure.order() {
            return Err(Error::Consistency(format!(
                "{} cores for an order-{} structure",
                self.cores.len(),
                structure.order()
            )));
        }
        for (i, core) in self.cores.iter().enumerate() {
            let expected = structure.core_shape(i, core.shape()[0]);
            if core.shape() != expected.as_slice() {
                return Err(Error::Consistency(format!(
                    "core {i} has shape {:?}, structure {structure} requires {expected:?}",
                    core.shape()
                )));
            }
        }
        Ok(())
    }

    /// Permutes vertices so that new core `k` is old core `perm[k]`, with bond
    /// axes reordered to the new partner order.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        crate::tensor::validate_permutation(perm, self.cores.len())?;
        let n = self.cores.len();
        let cores = (0..n)
            .map(|k| {
                let old = perm[k];
                let old_axis = |partner: usize| 1 + if partner < old { partner } else { partner - 1 };
                let mut axes = vec![0];
                axes.extend((0..n).filter(|&l| l != k).map(|l| old_axis(perm[l])));
                self.cores[old].permute_modes(&axes)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cores })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Physical(usize),
    Bond(usize, usize),
}

fn bond(i: usize, j: usize) -> Label {
    if i < j {
        Label::Bond(i, j)
    } else {
        Label::Bond(j, i)
    }
}

struct Labeled<'a> {
    labels: Vec<Label>,
    data: CowArray<'a, f64, IxDyn>,
}

impl<'a> Labeled<'a> {
    fn core(core: &'a DenseTensor, vertex: usize, order: usize) -> Self {
        let mut labels = vec![Label::Physical(vertex)];
        labels.extend((0..order).filter(|&j| j != vertex).map(|j| bond(vertex, j)));
        Self {
            labels,
            data: CowArray::from(core.array().view()),
        }
    }

    fn dim(&self, label: &Label) -> usize {
        self.data.shape()[self.axis(label)]
    }

    fn axis(&self, label: &Label) -> usize {
        self.labels
            .iter()
            .position(|m| m == label)
            .expect("label present")
    }

    fn permuted(&self, target: &[Label]) -> ArrayViewD<'_, f64> {
        let axes: Vec<usize> = target.iter().map(|l| self.axis(l)).collect();
        self.data.view().permuted_axes(IxDyn(&axes))
    }

    fn into_order(self, target: &[Label]) -> ArrayD<f64> {
        self.permuted(target).as_standard_layout().into_owned()
    }
}

/// Sums every label shared by `a` and `b`; output axes are `a`'s free labels
/// followed by `b`'s free labels.
fn contract_pair(a: &Labeled<'_>, b: &Labeled<'_>) -> Labeled<'static> {
    let (shared, a_free): (Vec<Label>, Vec<Label>) =
        a.labels.iter().partition(|l| b.labels.contains(l));
    let b_free: Vec<Label> = b
        .labels
        .iter()
        .copied()
        .filter(|l| !shared.contains(l))
        .collect();

    let a_free_dims: Vec<usize> = a_free.iter().map(|l| a.dim(l)).collect();
    let b_free_dims: Vec<usize> = b_free.iter().map(|l| b.dim(l)).collect();
    let m: usize = a_free_dims.iter().product();
    let k: usize = shared.iter().map(|l| a.dim(l)).product();
    let n: usize = b_free_dims.iter().product();

    let a_order: Vec<Label> = a_free.iter().chain(&shared).copied().collect();
    let b_order: Vec<Label> = shared.iter().chain(&b_free).copied().collect();
    let a_view = a.permuted(&a_order);
    let b_view = b.permuted(&b_order);
    let a_std = a_view.as_standard_layout();
    let b_std = b_view.as_standard_layout();
    let a_mat = a_std
        .view()
        .into_shape_with_order((m, k))
        .expect("standard layout reshape");
    let b_mat = b_std
        .view()
        .into_shape_with_order((k, n))
        .expect("standard layout reshape");
    let product = a_mat.dot(&b_mat);

    let out_dims: Vec<usize> = a_free_dims.into_iter().chain(b_free_dims).collect();
    Labeled {
        labels: a_free.into_iter().chain(b_free).collect(),
        data: CowArray::from(
            product
                .into_shape_with_order(IxDyn(&out_dims))
                .expect("matrix reshape"),
        ),
    }
}

/// Contracts all bonds of `cores`, folding vertices in order `0..N`.
pub fn tnc_contract(cores: &CoreSet, structure: &TNStructure) -> Result<DenseTensor> {
    cores.check_consistent(structure)?;
    Ok(DenseTensor::from_array_unchecked(contract_unchecked(
        cores, structure,
    )))
}

pub(crate) fn contract_unchecked(cores: &CoreSet, structure: &TNStructure) -> ArrayD<f64> {
    let n = structure.order();
    let mut acc = contract_pair(
        &Labeled::core(&cores.cores[0], 0, n),
        &Labeled::core(&cores.cores[1], 1, n),
    );
    for i in 2..n {
        acc = contract_pair(&acc, &Labeled::core(&cores.cores[i], i, n));
    }
    let physical: Vec<Label> = (0..n).map(Label::Physical).collect();
    acc.into_order(&physical)
}

/// Contracts a full-shape tensor against every core except `vertex`, producing
/// a tensor shaped like core `vertex`.
pub(crate) fn environment(
    full: &ArrayD<f64>,
    cores: &CoreSet,
    structure: &TNStructure,
    vertex: usize,
) -> ArrayD<f64> {
    let n = structure.order();
    let start = Labeled {
        labels: (0..n).map(Label::Physical).collect(),
        data: CowArray::from(full.view()),
    };
    let mut others = (0..n).filter(|&j| j != vertex);
    let first = others.next().expect("order >= 2");
    let mut acc = contract_pair(&start, &Labeled::core(&cores.cores[first], first, n));
    for j in others {
        acc = contract_pair(&acc, &Labeled::core(&cores.cores[j], j, n));
    }
    let mut target = vec![Label::Physical(vertex)];
    target.extend((0..n).filter(|&j| j != vertex).map(|j| bond(vertex, j)));
    acc.into_order(&target)
}
