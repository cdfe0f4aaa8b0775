//! Divided differences of arbitrary order over node/value data.

use crate::error::{Error, Result};
use crate::grid::NodeSequence;

/// Triangular table of divided differences.
///
/// `entry(k, n)` holds the order-`k` difference over the stencil
/// `λ_n, …, λ_{n+k}`; row 0 is the raw data and row `k` is computed from
/// row `k − 1` by the standard recursion
/// `(entry(k−1, n+1) − entry(k−1, n)) / (λ_{n+k} − λ_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DividedDifferenceTable {
    entries: Vec<Vec<f64>>,
}

impl DividedDifferenceTable {
    /// Highest order held by the table.
    pub fn order(&self) -> usize {
        self.entries.len() - 1
    }

    /// The difference `f(λ_n, …, λ_{n+k})`.
    pub fn entry(&self, k: usize, n: usize) -> f64 {
        self.entries[k][n]
    }

    /// All order-`k` differences, indexed by left stencil endpoint.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.entries[k]
    }
}

/// Builds the divided-difference table of `values` over `nodes` up to
/// `max_order`.
///
/// Denominators are positive because node sequences are strictly
/// increasing. Fails if the value count does not match the node count or
/// `max_order` exceeds the number of gaps.
pub fn divided_differences(
    nodes: &NodeSequence,
    values: &[f64],
    max_order: usize,
) -> Result<DividedDifferenceTable> {
    if values.len() != nodes.len() {
        return Err(Error::LengthMismatch {
            nodes: nodes.len(),
            values: values.len(),
        });
    }
    if max_order > nodes.num_gaps() {
        return Err(Error::OrderTooLarge {
            order: max_order,
            max: nodes.num_gaps(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { index });
    }
    let mut entries = Vec::with_capacity(max_order + 1);
    entries.push(values.to_vec());
    for k in 1..=max_order {
        let prev = &entries[k - 1];
        let row: Vec<f64> = (0..prev.len() - 1)
            .map(|n| (prev[n + 1] - prev[n]) / (nodes.node(n + k) - nodes.node(n)))
            .collect();
        entries.push(row);
    }
    Ok(DividedDifferenceTable { entries })
}
