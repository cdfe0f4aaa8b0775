//! Piecewise cubic polynomials: evaluation, differentiation, smoothness.

use serde::Serialize;

use crate::error::{Error, Result};

/// A piecewise polynomial of degree at most 3 on `[b_0, b_M]`.
///
/// Piece `j` lives on `[b_j, b_{j+1}]` and is stored in the local
/// coordinate `t = x − b_j` as coefficients `c_0 + c_1 t + c_2 t² + c_3 t³`.
/// Local coordinates keep evaluation stable for windows far from the
/// origin. At interior breakpoints the right piece governs; at `b_M` the
/// last piece does.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewisePolynomial {
    breakpoints: Vec<f64>,
    pieces: Vec<[f64; 4]>,
}

impl PiecewisePolynomial {
    /// Builds a spline from breakpoints and per-piece coefficient lists
    /// (low degree first, at most 4 entries each).
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if breakpoints.len() != pieces.len() + 1 {
            return Err(Error::PieceCountMismatch {
                breakpoints: breakpoints.len(),
                pieces: pieces.len(),
            });
        }
        if breakpoints.len() < 2 {
            return Err(Error::TooShort(breakpoints.len()));
        }
        for (index, &b) in breakpoints.iter().enumerate() {
            if !b.is_finite() {
                return Err(Error::NonFiniteNode { index });
            }
            if index > 0 && b <= breakpoints[index - 1] {
                return Err(Error::NotIncreasing {
                    index,
                    value: b,
                    previous: breakpoints[index - 1],
                });
            }
        }
        let mut packed = Vec::with_capacity(pieces.len());
        for (index, coeffs) in pieces.iter().enumerate() {
            if coeffs.len() > 4 {
                return Err(Error::DegreeTooHigh {
                    index,
                    len: coeffs.len(),
                });
            }
            if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
                return Err(Error::NonFiniteValue { index: k });
            }
            let mut c = [0.0; 4];
            c[..coeffs.len()].copy_from_slice(coeffs);
            packed.push(c);
        }
        Ok(Self {
            breakpoints,
            pieces: packed,
        })
    }

    pub(crate) fn from_packed(breakpoints: Vec<f64>, pieces: Vec<[f64; 4]>) -> Self {
        debug_assert_eq!(breakpoints.len(), pieces.len() + 1);
        Self {
            breakpoints,
            pieces,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    /// Local coefficients `(c_0, c_1, c_2, c_3)` of piece `j`.
    pub fn piece(&self, j: usize) -> [f64; 4] {
        self.pieces[j]
    }

    /// The closed interval `[b_0, b_M]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    /// Index of the piece governing `x` (right piece at interior
    /// breakpoints, last piece at the right endpoint).
    fn piece_index(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        let j = self.breakpoints.partition_point(|b| *b <= x);
        Ok(j.saturating_sub(1).min(self.pieces.len() - 1))
    }

    /// Horner evaluation of the `derivative`-th derivative at `x`.
    pub fn evaluate(&self, x: f64, derivative: usize) -> Result<f64> {
        let j = self.piece_index(x)?;
        let t = x - self.breakpoints[j];
        Ok(eval_local(&self.pieces[j], t, derivative))
    }

    /// Largest jump of the `order`-th derivative across interior
    /// breakpoints; 0 for a single piece.
    pub fn smoothness_defect(&self, order: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 1..self.pieces.len() {
            let width = self.breakpoints[j] - self.breakpoints[j - 1];
            let left = eval_local(&self.pieces[j - 1], width, order);
            let right = eval_local(&self.pieces[j], 0.0, order);
            worst = worst.max((left - right).abs());
        }
        worst
    }

    /// Restriction to `[lo, hi] ⊆ domain`, re-basing the first partial
    /// piece so its local coordinate starts at `lo`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<PiecewisePolynomial> {
        let (dlo, dhi) = self.domain();
        if !(lo >= dlo && lo < hi && hi <= dhi) {
            return Err(Error::OutOfDomain {
                x: if lo < dlo { lo } else { hi },
                lo: dlo,
                hi: dhi,
            });
        }
        let first = self.piece_index(lo)?;
        // piece covering hi from the left
        let last = {
            let j = self.breakpoints.partition_point(|b| *b < hi);
            j.saturating_sub(1).min(self.pieces.len() - 1)
        };
        let mut breakpoints = vec![lo];
        let mut pieces = Vec::new();
        for j in first..=last {
            let base = *breakpoints.last().unwrap();
            pieces.push(shift_local(&self.pieces[j], base - self.breakpoints[j]));
            breakpoints.push(self.breakpoints[j + 1].min(hi));
        }
        *breakpoints.last_mut().unwrap() = hi;
        Ok(PiecewisePolynomial::from_packed(breakpoints, pieces))
    }
}

/// Evaluates the `derivative`-th derivative of a local cubic at `t`.
pub(crate) fn eval_local(coeffs: &[f64; 4], t: f64, derivative: usize) -> f64 {
    match derivative {
        0 => ((coeffs[3] * t + coeffs[2]) * t + coeffs[1]) * t + coeffs[0],
        1 => (3.0 * coeffs[3] * t + 2.0 * coeffs[2]) * t + coeffs[1],
        2 => 6.0 * coeffs[3] * t + 2.0 * coeffs[2],
        3 => 6.0 * coeffs[3],
        _ => 0.0,
    }
}

/// Coefficients of the same cubic expressed around a base shifted by
/// `delta`: if `q(t) = p(t + delta)` then `q` has the returned
/// coefficients (Taylor shift).
pub(crate) fn shift_local(coeffs: &[f64; 4], delta: f64) -> [f64; 4] {
    let [c0, c1, c2, c3] = *coeffs;
    [
        ((c3 * delta + c2) * delta + c1) * delta + c0,
        (3.0 * c3 * delta + 2.0 * c2) * delta + c1,
        3.0 * c3 * delta + c2,
        c3,
    ]
}
