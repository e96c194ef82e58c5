//! Fully-connected tensor network structures and compression accounting.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::validate_permutation;

/// Symmetric rank matrix over the complete graph on `order` vertices.
///
/// Only the strict upper triangle is stored, in lexicographic pair order
/// `(0,1), (0,2), ..., (0,N-1), (1,2), ..., (N-2,N-1)`. A rank of 1 means the
/// two cores are not connected.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "StructureRepr", into = "StructureRepr")]
pub struct TNStructure {
    order: usize,
    ranks: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct StructureRepr {
    order: usize,
    ranks: Vec<usize>,
}

impl TryFrom<StructureRepr> for TNStructure {
    type Error = Error;

    fn try_from(repr: StructureRepr) -> Result<Self> {
        TNStructure::new(repr.order, repr.ranks)
    }
}

impl From<TNStructure> for StructureRepr {
    fn from(s: TNStructure) -> Self {
        StructureRepr {
            order: s.order,
            ranks: s.ranks,
        }
    }
}

/// Number of rank variables for an order-`n` network.
pub fn num_pairs(order: usize) -> usize {
    order * order.saturating_sub(1) / 2
}

impl TNStructure {
    pub fn new(order: usize, ranks: Vec<usize>) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidStructure(format!(
                "order must be at least 2, got {order}"
            )));
        }
        if ranks.len() != num_pairs(order) {
            return Err(Error::InvalidStructure(format!(
                "order {order} needs {} ranks, got {}",
                num_pairs(order),
                ranks.len()
            )));
        }
        if ranks.contains(&0) {
            return Err(Error::InvalidStructure(format!(
                "ranks must be >= 1, got {ranks:?}"
            )));
        }
        Ok(Self { order, ranks })
    }

    /// Infers the order from the number of upper-triangular ranks.
    pub fn from_ranks(ranks: Vec<usize>) -> Result<Self> {
        let m = ranks.len();
        let order = (2..=64)
            .find(|&n| num_pairs(n) == m)
            .ok_or_else(|| Error::InvalidStructure(format!("{m} is not a triangular rank count")))?;
        Self::new(order, ranks)
    }

    /// The fully disconnected network.
    pub fn all_ones(order: usize) -> Result<Self> {
        Self::new(order, vec![1; num_pairs(order)])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn num_vars(&self) -> usize {
        self.ranks.len()
    }

    /// Position of the pair `{i, j}` in the rank vector.
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i != j && i < self.order && j < self.order);
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a * self.order - a * (a + 1) / 2 + (b - a - 1)
    }

    /// Inverse of [`pair_index`](Self::pair_index).
    pub fn pair_of(&self, var: usize) -> (usize, usize) {
        let mut idx = var;
        for i in 0..self.order {
            let row = self.order - i - 1;
            if idx < row {
                return (i, i + 1 + idx);
            }
            idx -= row;
        }
        panic!("variable index {var} out of range");
    }

    pub fn rank(&self, i: usize, j: usize) -> usize {
        self.ranks[self.pair_index(i, j)]
    }

    pub fn with_rank(&self, var: usize, value: usize) -> Self {
        let mut next = self.clone();
        next.ranks[var] = value;
        next
    }

    /// Bond dimensions of core `i` toward every other vertex, ascending by partner.
    pub fn bond_dims(&self, i: usize) -> Vec<usize> {
        (0..self.order)
            .filter(|&j| j != i)
            .map(|j| self.rank(i, j))
            .collect()
    }

    /// Shape of core `i`: physical dimension first, then bonds in partner order.
    pub fn core_shape(&self, i: usize, physical: usize) -> Vec<usize> {
        let mut shape = Vec::with_capacity(self.order);
        shape.push(physical);
        shape.extend(self.bond_dims(i));
        shape
    }

    pub fn within_bounds(&self, r_max: usize) -> bool {
        self.ranks.iter().all(|&r| (1..=r_max).contains(&r))
    }

    /// Relabels vertices so that new vertex `k` is old vertex `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        validate_permutation(perm, self.order)?;
        let mut ranks = Vec::with_capacity(self.ranks.len());
        for k in 0..self.order {
            for l in (k + 1)..self.order {
                ranks.push(self.rank(perm[k], perm[l]));
            }
        }
        Self::new(self.order, ranks)
    }
}

impl fmt::Display for TNStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, r) in self.ranks.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "]")
    }
}

fn check_order(structure: &TNStructure, shape: &[usize]) -> Result<()> {
    if shape.len() != structure.order() {
        return Err(Error::OrderMismatch {
            expected: structure.order(),
            found: shape.len(),
        });
    }
    Ok(())
}

/// Total number of core entries: `sum_i I_i * prod_{j != i} r_ij`.
pub fn param_count(structure: &TNStructure, shape: &[usize]) -> Result<usize> {
    check_order(structure, shape)?;
    Ok((0..structure.order())
        .map(|i| shape[i] * structure.bond_dims(i).iter().product::<usize>())
        .sum())
}

/// Parameter count divided by the number of entries of the full tensor.
pub fn compression_ratio(structure: &TNStructure, shape: &[usize]) -> Result<f64> {
    let params = param_count(structure, shape)?;
    let full: usize = shape.iter().product();
    Ok(params as f64 / full as f64)
}
