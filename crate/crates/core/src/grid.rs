//! Node sequences: validated strictly increasing abscissae plus generators.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A strictly increasing, finite sequence of interpolation nodes
/// `λ_0 < λ_1 < … < λ_N` with `N ≥ 1`.
///
/// Derived quantities: `step(n) = λ_{n+1} − λ_n`, `midpoint(n)` the center
/// of gap `n`, and `max_step()` the largest gap. Immutable after
/// construction, so shared reads are safe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeSequence {
    nodes: Vec<f64>,
}

impl NodeSequence {
    /// Validates and wraps a list of abscissae.
    ///
    /// Rejects sequences shorter than two nodes, non-finite entries, and
    /// any entry that does not strictly exceed its predecessor; the error
    /// names the offending index.
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::TooShort(nodes.len()));
        }
        for (index, &value) in nodes.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteNode { index });
            }
            if index > 0 && value <= nodes[index - 1] {
                return Err(Error::NotIncreasing {
                    index,
                    value,
                    previous: nodes[index - 1],
                });
            }
        }
        Ok(Self { nodes })
    }

    /// Parses nodes from CSV text with a header containing a `lambda`
    /// column. Extra columns are ignored. Line numbers in errors are
    /// 1-based and include the header.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Csv {
            line: 1,
            message: "empty input, expected a header row".into(),
        })?;
        let lambda_col =
            header
                .split(',')
                .position(|c| c.trim() == "lambda")
                .ok_or(Error::Csv {
                    line: 1,
                    message: format!("header {header:?} has no `lambda` column"),
                })?;
        let mut nodes = Vec::new();
        let mut rows = Vec::new(); // line number per node, for error reporting
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cell = line.split(',').nth(lambda_col).ok_or(Error::Csv {
                line: i + 1,
                message: format!("missing column {lambda_col}"),
            })?;
            let value: f64 = cell.trim().parse().map_err(|_| Error::Csv {
                line: i + 1,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            nodes.push(value);
            rows.push(i + 1);
        }
        Self::new(nodes).map_err(|e| match e {
            Error::NotIncreasing { index, value, .. } => Error::Csv {
                line: rows[index],
                message: format!("node {value} is not strictly increasing"),
            },
            Error::NonFiniteNode { index } => Error::Csv {
                line: rows[index],
                message: "node is not finite".into(),
            },
            Error::TooShort(n) => Error::Csv {
                line: 1,
                message: format!("need at least 2 nodes, got {n}"),
            },
            other => other,
        })
    }

    /// Number of nodes, `N + 1`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True only for the empty sequence, which `new` never produces.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of gaps, `N`.
    pub fn num_gaps(&self) -> usize {
        self.nodes.len() - 1
    }

    /// All abscissae in increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// The node `λ_n`.
    pub fn node(&self, n: usize) -> f64 {
        self.nodes[n]
    }

    /// Gap width `h_n = λ_{n+1} − λ_n`, positive by construction.
    pub fn step(&self, n: usize) -> f64 {
        self.nodes[n + 1] - self.nodes[n]
    }

    /// Midpoint `μ_n = (λ_n + λ_{n+1}) / 2` of gap `n`.
    pub fn midpoint(&self, n: usize) -> f64 {
        0.5 * (self.nodes[n] + self.nodes[n + 1])
    }

    /// Largest gap width.
    pub fn max_step(&self) -> f64 {
        (0..self.num_gaps())
            .map(|n| self.step(n))
            .fold(0.0, f64::max)
    }

    /// Window length `λ_N − λ_0`.
    pub fn span(&self) -> f64 {
        self.nodes[self.nodes.len() - 1] - self.nodes[0]
    }
}

/// Deterministic node-sequence generators for experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeGenerator {
    /// Equally spaced nodes `start + k·step`, `k = 0..count`.
    Uniform { start: f64, step: f64, count: usize },
    /// Gaps forming a geometric progression `first_step · ratio^k`.
    Geometric {
        start: f64,
        first_step: f64,
        ratio: f64,
        count: usize,
    },
    /// `count` nodes starting at 0 with gaps drawn uniformly in `[lo, hi]`.
    RandomGaps { lo: f64, hi: f64, count: usize },
    /// Two unit-separated anchors -1 and 1 plus `m` nodes on each side
    /// accumulating geometrically toward `-1-h` and `1+h`.
    Clustering { h: f64, m: usize },
}

impl NodeGenerator {
    /// Short label used in sweep reports.
    pub fn label(&self) -> &'static str {
        match self {
            NodeGenerator::Uniform { .. } => "uniform",
            NodeGenerator::Geometric { .. } => "geometric",
            NodeGenerator::RandomGaps { .. } => "random_gaps",
            NodeGenerator::Clustering { .. } => "clustering",
        }
    }
}

/// Builds a node sequence from a generator description.
///
/// Output is fully determined by `(generator, seed)`; only `RandomGaps`
/// consumes the seed.
pub fn generate_nodes(generator: &NodeGenerator, seed: u64) -> Result<NodeSequence> {
    match *generator {
        NodeGenerator::Uniform { start, step, count } => {
            if count < 2 {
                return Err(Error::InvalidGenerator(format!(
                    "uniform needs count >= 2, got {count}"
                )));
            }
            if !(step > 0.0 && step.is_finite() && start.is_finite()) {
                return Err(Error::InvalidGenerator(format!(
                    "uniform needs finite start and step > 0, got start={start}, step={step}"
                )));
            }
            NodeSequence::new((0..count).map(|k| start + k as f64 * step).collect())
        }
        NodeGenerator::Geometric {
            start,
            first_step,
            ratio,
            count,
        } => {
            if count < 2 {
                return Err(Error::InvalidGenerator(format!(
                    "geometric needs count >= 2, got {count}"
                )));
            }
            if !(first_step > 0.0 && ratio > 0.0 && start.is_finite()) {
                return Err(Error::InvalidGenerator(format!(
                    "geometric needs first_step > 0 and ratio > 0, got {first_step}, {ratio}"
                )));
            }
            let mut nodes = Vec::with_capacity(count);
            let mut x = start;
            let mut gap = first_step;
            nodes.push(x);
            for _ in 1..count {
                x += gap;
                nodes.push(x);
                gap *= ratio;
            }
            NodeSequence::new(nodes)
        }
        NodeGenerator::RandomGaps { lo, hi, count } => {
            if count < 2 {
                return Err(Error::InvalidGenerator(format!(
                    "random_gaps needs count >= 2, got {count}"
                )));
            }
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidGenerator(format!(
                    "random_gaps needs 0 < lo <= hi, got lo={lo}, hi={hi}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut nodes = Vec::with_capacity(count);
            let mut x = 0.0;
            nodes.push(x);
            for _ in 1..count {
                x += rng.gen_range(lo..=hi);
                nodes.push(x);
            }
            NodeSequence::new(nodes)
        }
        NodeGenerator::Clustering { h, m } => {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidGenerator(format!(
                    "clustering needs h > 0, got {h}"
                )));
            }
            if m < 1 {
                return Err(Error::InvalidGenerator("clustering needs m >= 1".into()));
            }
            let mut nodes = Vec::with_capacity(2 * m + 2);
            // Left tail approaches -1-h from above as the index decreases.
            for k in (1..=m).rev() {
                nodes.push(-1.0 - h * (1.0 - 0.5f64.powi(k as i32)));
            }
            nodes.push(-1.0);
            nodes.push(1.0);
            for k in 1..=m {
                nodes.push(1.0 + h * (1.0 - 0.5f64.powi(k as i32)));
            }
            // The tails are strictly monotone by construction, but the
            // innermost tail node must also clear the anchors.
            NodeSequence::new(nodes)
        }
    }
}
