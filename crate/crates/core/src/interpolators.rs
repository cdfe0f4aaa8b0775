//! Quasi-optimal spline interpolators and their closed-form energies.
//!
//! Two interpolators are provided. The first-order one is the piecewise
//! linear interpolant; its `L¹_p` energy equals the homogeneous equivalent
//! seminorm power exactly. The second-order one is a C¹ piecewise cubic
//! built from two half-gap pieces per gap: on `[λ_n, μ_n]`
//!
//! ```text
//! f(λ_n) + α_n (x − λ_n) + h_n² d_n q((x − λ_n) / h_n),   q(u) = 4(u² − u³),
//! ```
//!
//! and mirrored on `[μ_{n-1}, λ_n]`, where `d_n` is the second divided
//! difference at node `n` and `α_n` the step-weighted slope average. The
//! kernel `q` vanishes to first order at 0 and matches value `1/2`,
//! slope 1 at `1/2`, which makes the glued spline interpolate, hit the
//! mean value at midpoints, and stay C¹.
//!
//! On a finite window the first and last nodes have no neighbor on one
//! side; we replicate the nearest interior second divided difference,
//! which is the same as taking one-sided slopes from the quadratic through
//! the three nearest nodes. This keeps affine reproduction, global C¹
//! smoothness and the interior energy identity.

use serde::Serialize;

use crate::divdiff::divided_differences;
use crate::error::{Error, Result};
use crate::norms::TraceData;
use crate::pwpoly::PiecewisePolynomial;

/// Per-node coefficients of the cubic interpolator: the slope surrogate
/// `alpha` and the governing second divided difference `dd2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Phi2Stencil {
    /// Node index.
    pub n: usize,
    /// Slope surrogate `α_n = (h_n f(λ_{n-1},λ_n) + h_{n-1} f(λ_n,λ_{n+1})) / (h_{n-1} + h_n)`.
    pub alpha: f64,
    /// Second divided difference `f(λ_{n-1}, λ_n, λ_{n+1})` (replicated at
    /// the window edges).
    pub dd2: f64,
}

/// Computes the per-node stencils `(α_n, d_n)` for the cubic interpolator.
///
/// Needs at least two nodes; with exactly two, the interpolant degenerates
/// to the affine one (`dd2 = 0`, `α` the single slope).
pub fn phi2_stencils(data: &TraceData) -> Result<Vec<Phi2Stencil>> {
    let nodes = data.nodes();
    let n_gaps = nodes.num_gaps();
    if n_gaps < 1 {
        return Err(Error::TooFewNodes {
            needed: 2,
            got: data.len(),
        });
    }
    if n_gaps == 1 {
        let slope = (data.value(1) - data.value(0)) / nodes.step(0);
        return Ok(vec![
            Phi2Stencil {
                n: 0,
                alpha: slope,
                dd2: 0.0,
            },
            Phi2Stencil {
                n: 1,
                alpha: slope,
                dd2: 0.0,
            },
        ]);
    }
    let table = divided_differences(nodes, data.values(), 2)?;
    let dd1 = table.row(1);
    let dd2 = table.row(2);
    let mut stencils = Vec::with_capacity(data.len());
    for n in 0..=n_gaps {
        let (alpha, d) = if n == 0 {
            // one-sided slope of the quadratic through λ_0, λ_1, λ_2
            (dd1[0] - nodes.step(0) * dd2[0], dd2[0])
        } else if n == n_gaps {
            let last = n_gaps - 1;
            (dd1[last] + nodes.step(last) * dd2[last - 1], dd2[last - 1])
        } else {
            let (h_prev, h_next) = (nodes.step(n - 1), nodes.step(n));
            (
                (h_next * dd1[n - 1] + h_prev * dd1[n]) / (h_prev + h_next),
                dd2[n - 1],
            )
        };
        stencils.push(Phi2Stencil { n, alpha, dd2: d });
    }
    Ok(stencils)
}

/// The piecewise linear interpolant: one affine piece per gap.
pub fn phi1(data: &TraceData) -> Result<PiecewisePolynomial> {
    let nodes = data.nodes();
    if nodes.num_gaps() < 1 {
        return Err(Error::TooFewNodes {
            needed: 2,
            got: data.len(),
        });
    }
    let pieces = (0..nodes.num_gaps())
        .map(|n| {
            let slope = (data.value(n + 1) - data.value(n)) / nodes.step(n);
            [data.value(n), slope, 0.0, 0.0]
        })
        .collect();
    Ok(PiecewisePolynomial::from_packed(
        nodes.nodes().to_vec(),
        pieces,
    ))
}

/// The C¹ piecewise cubic interpolant with breakpoints at all nodes and
/// gap midpoints. With only two nodes it coincides with [`phi1`].
pub fn phi2(data: &TraceData) -> Result<PiecewisePolynomial> {
    let nodes = data.nodes();
    let n_gaps = nodes.num_gaps();
    if n_gaps < 1 {
        return Err(Error::TooFewNodes {
            needed: 2,
            got: data.len(),
        });
    }
    if n_gaps == 1 {
        return phi1(data);
    }
    let stencils = phi2_stencils(data)?;
    let mut breakpoints = Vec::with_capacity(2 * n_gaps + 1);
    let mut pieces = Vec::with_capacity(2 * n_gaps);
    for n in 0..n_gaps {
        let h = nodes.step(n);
        breakpoints.push(nodes.node(n));
        // [λ_n, μ_n]: kernel piece anchored at node n
        let s = &stencils[n];
        pieces.push([data.value(n), s.alpha, 4.0 * s.dd2, -4.0 * s.dd2 / h]);
        // [μ_n, λ_{n+1}]: mirrored kernel piece anchored at node n+1,
        // expanded around the midpoint
        let s = &stencils[n + 1];
        breakpoints.push(nodes.midpoint(n));
        pieces.push([
            data.value(n + 1) - 0.5 * s.alpha * h + 0.5 * s.dd2 * h * h,
            s.alpha - s.dd2 * h,
            -2.0 * s.dd2,
            4.0 * s.dd2 / h,
        ]);
    }
    breakpoints.push(nodes.node(n_gaps));
    Ok(PiecewisePolynomial::from_packed(breakpoints, pieces))
}

/// Exact `L¹_p` energy of the linear interpolant:
/// `Σ_n h_n |f(λ_n, λ_{n+1})|^p`, which coincides with the homogeneous
/// equivalent seminorm power for `r = 1`.
pub fn phi1_energy_pow(data: &TraceData, p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let nodes = data.nodes();
    if nodes.num_gaps() < 1 {
        return Err(Error::TooFewNodes {
            needed: 2,
            got: data.len(),
        });
    }
    let mut sum = 0.0;
    for n in 0..nodes.num_gaps() {
        let slope = (data.value(n + 1) - data.value(n)) / nodes.step(n);
        sum += nodes.step(n) * slope.abs().powf(p);
    }
    Ok(sum)
}

/// `∫_0^{1/2} |q''(u)|^p du` for the cubic kernel `q(u) = 4(u² − u³)`:
/// `q'' = 8 − 24u` changes sign at `u = 1/3`, which gives the closed form
/// `(8^{p+1} + 4^{p+1}) / (24 (p + 1))`.
pub fn kernel_energy_constant(p: f64) -> f64 {
    (8.0f64.powf(p + 1.0) + 4.0f64.powf(p + 1.0)) / (24.0 * (p + 1.0))
}

/// Exact `L²_p` energy of the cubic interpolant.
///
/// Each half-gap piece anchored at node `n` with width `h` contributes
/// `h |d_n|^p` times [`kernel_energy_constant`], so the total is
/// `Q(p) Σ_n (h-left + h-right) |d_n|^p` with one-sided halves at the
/// window edges. Agrees with quadrature of [`phi2`] output.
pub fn phi2_energy_pow(data: &TraceData, p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let nodes = data.nodes();
    let n_gaps = nodes.num_gaps();
    if n_gaps < 2 {
        return Err(Error::TooFewNodes {
            needed: 3,
            got: data.len(),
        });
    }
    let stencils = phi2_stencils(data)?;
    let mut sum = 0.0;
    for s in &stencils {
        let mut width = 0.0;
        if s.n < n_gaps {
            width += nodes.step(s.n);
        }
        if s.n > 0 {
            width += nodes.step(s.n - 1);
        }
        sum += width * s.dd2.abs().powf(p);
    }
    Ok(sum * kernel_energy_constant(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{sobolev_seminorm_pow, QuadratureSpec};
    use crate::grid::NodeSequence;
    use crate::norms::{eq_norm_l_pow, NormParams};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(xs: &[f64], vs: &[f64]) -> TraceData {
        TraceData::new(NodeSequence::new(xs.to_vec()).unwrap(), vs.to_vec()).unwrap()
    }

    fn random_case(seed: u64, n: usize) -> TraceData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = vec![0.0];
        for _ in 0..n {
            xs.push(xs.last().unwrap() + rng.gen_range(0.2..1.8));
        }
        let vs: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        data(&xs, &vs)
    }

    #[test]
    fn phi1_constant_data() {
        let d = data(&[0.0, 1.0, 2.5], &[3.0, 3.0, 3.0]);
        let s = phi1(&d).unwrap();
        assert_eq!(s.evaluate(1.7, 0).unwrap(), 3.0);
        assert_eq!(phi1_energy_pow(&d, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn phi1_is_continuous_by_gluing() {
        let d = data(&[0.0, 0.4, 1.1, 3.0], &[2.0, -1.0, 0.5, 4.0]);
        assert_eq!(phi1(&d).unwrap().smoothness_defect(0), 0.0);
    }

    #[test]
    fn phi1_identity_line() {
        let d = data(&[0.0, 1.0], &[0.0, 1.0]);
        let s = phi1(&d).unwrap();
        assert_eq!(s.piece(0), [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(phi1_energy_pow(&d, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn phi1_hand_evaluation() {
        // (1·(3−2) + 9·(2−1)) / 2 = 5
        let d = data(&[0.0, 1.0, 3.0], &[0.0, 1.0, 9.0]);
        let s = phi1(&d).unwrap();
        assert_relative_eq!(s.evaluate(2.0, 0).unwrap(), 5.0);
        assert_relative_eq!(phi1_energy_pow(&d, 2.0).unwrap(), 33.0);
    }

    #[test]
    fn phi2_affine_reproduction() {
        let d = data(&[0.0, 0.5, 1.7, 3.0], &[1.0, 2.0, 4.4, 7.0]); // 2x + 1
        let s = phi2(&d).unwrap();
        for k in 0..=30 {
            let x = 3.0 * k as f64 / 30.0;
            assert_relative_eq!(
                s.evaluate(x, 0).unwrap(),
                2.0 * x + 1.0,
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(phi2_energy_pow(&d, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn phi2_structural_conditions_worked_case() {
        let d = data(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]);
        let stencils = phi2_stencils(&d).unwrap();
        assert_relative_eq!(stencils[1].alpha, 0.0);
        assert_relative_eq!(stencils[1].dd2, -1.0);
        let s = phi2(&d).unwrap();
        // midpoint value and slope of gap 1
        assert_relative_eq!(s.evaluate(1.5, 0).unwrap(), 0.5);
        assert_relative_eq!(s.evaluate(1.5, 1).unwrap(), -1.0);
        // one-sided slope at the left edge equals the quadratic's derivative
        assert_relative_eq!(s.evaluate(0.0, 1).unwrap(), 2.0);
        assert_relative_eq!(stencils[0].alpha, 2.0);
    }

    #[test]
    fn kernel_energy_closed_forms() {
        assert_relative_eq!(kernel_energy_constant(1.0), 5.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(kernel_energy_constant(2.0), 8.0, max_relative = 1e-15);
    }

    #[test]
    fn phi2_energy_worked_case() {
        // four half-gap pieces, each 1·|−1|²·Q(2) = 8
        let d = data(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]);
        assert_relative_eq!(phi2_energy_pow(&d, 2.0).unwrap(), 32.0);
    }

    #[test]
    fn two_node_degenerate_case() {
        let d = data(&[0.0, 2.0], &[1.0, 5.0]);
        let s = phi2(&d).unwrap();
        assert_eq!(s.num_pieces(), 1);
        assert_relative_eq!(s.evaluate(1.0, 0).unwrap(), 3.0);
        assert!(matches!(
            phi2_energy_pow(&d, 2.0),
            Err(Error::TooFewNodes { .. })
        ));
    }

    #[test]
    fn interpolation_and_smoothness_on_random_data() {
        for seed in 0..25u64 {
            let d = random_case(seed, 5 + (seed as usize % 12));
            let scale = d
                .values()
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(1.0);
            let s1 = phi1(&d).unwrap();
            let s2 = phi2(&d).unwrap();
            for (n, &x) in d.nodes().nodes().iter().enumerate() {
                assert_relative_eq!(
                    s1.evaluate(x, 0).unwrap(),
                    d.value(n),
                    max_relative = 1e-10,
                    epsilon = 1e-10 * scale
                );
                assert_relative_eq!(
                    s2.evaluate(x, 0).unwrap(),
                    d.value(n),
                    max_relative = 1e-10,
                    epsilon = 1e-10 * scale
                );
            }
            assert!(s2.smoothness_defect(0) <= 1e-9 * scale);
            assert!(s2.smoothness_defect(1) <= 1e-9 * scale);
        }
    }

    #[test]
    fn phi2_midpoint_and_node_conditions_random() {
        for seed in 0..25u64 {
            let d = random_case(seed + 100, 6 + (seed as usize % 10));
            let s = phi2(&d).unwrap();
            let stencils = phi2_stencils(&d).unwrap();
            let nodes = d.nodes();
            let scale = d.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for n in 0..nodes.num_gaps() {
                let mu = nodes.midpoint(n);
                let mean = 0.5 * (d.value(n) + d.value(n + 1));
                let slope = (d.value(n + 1) - d.value(n)) / nodes.step(n);
                assert!((s.evaluate(mu, 0).unwrap() - mean).abs() <= 1e-9 * scale);
                assert!((s.evaluate(mu, 1).unwrap() - slope).abs() <= 1e-9 * scale);
            }
            for (n, st) in stencils.iter().enumerate() {
                let x = nodes.node(n);
                assert!((s.evaluate(x, 1).unwrap() - st.alpha).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn phi1_energy_identity_with_seminorm() {
        for seed in 0..25u64 {
            let d = random_case(seed + 300, 8 + (seed as usize % 15));
            for p in [1.0, 1.5, 2.0, 4.0] {
                let params = NormParams::new(1, p).unwrap();
                let lhs = phi1_energy_pow(&d, p).unwrap();
                let rhs = eq_norm_l_pow(&d, &params).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
            }
        }
    }

    #[test]
    fn phi2_energy_matches_quadrature() {
        let spec = QuadratureSpec::default();
        for seed in 0..10u64 {
            let d = random_case(seed + 500, 6);
            for p in [1.0, 1.5, 2.0, 4.0] {
                let closed = phi2_energy_pow(&d, p).unwrap();
                let quad = sobolev_seminorm_pow(&phi2(&d).unwrap(), 2, p, &spec).unwrap();
                assert!(
                    (closed - quad).abs() <= 1e-8 * closed.max(1e-12),
                    "seed={seed} p={p}: {closed} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn quasi_optimal_energy_ratio() {
        // Interior half-gap pairs contribute exactly Q(p) per seminorm
        // term; the two replicated edge pieces at most double that.
        for seed in 0..20u64 {
            let d = random_case(seed + 700, 6 + (seed as usize % 12));
            for p in [1.0, 1.5, 2.0, 4.0] {
                let params = NormParams::new(2, p).unwrap();
                let energy = phi2_energy_pow(&d, p).unwrap();
                let seminorm = eq_norm_l_pow(&d, &params).unwrap();
                assert!(
                    energy <= 2.0 * kernel_energy_constant(p) * seminorm * (1.0 + 1e-12),
                    "seed={seed} p={p}"
                );
            }
        }
    }

    #[test]
    fn perturbation_locality() {
        // Perturbing f(λ_k) must leave the spline untouched outside
        // [μ_{k-2}, μ_{k+1}], except that the replicated edge stencils tie
        // the three outermost values to the boundary half-gaps.
        let n = 12;
        let base = random_case(42, n);
        let nodes = base.nodes().clone();
        let s_base = phi2(&base).unwrap();
        for k in 0..=n {
            let mut vs = base.values().to_vec();
            vs[k] += 1.0;
            let s_pert = phi2(&TraceData::new(nodes.clone(), vs).unwrap()).unwrap();
            let lo = if k >= 3 {
                nodes.midpoint(k - 2)
            } else {
                nodes.node(0)
            };
            let hi = if k + 3 <= n {
                nodes.midpoint(k + 1)
            } else {
                nodes.node(n)
            };
            for j in 0..=600 {
                let x = nodes.node(0) + nodes.span() * j as f64 / 600.0;
                let delta = (s_pert.evaluate(x, 0).unwrap() - s_base.evaluate(x, 0).unwrap()).abs();
                if x < lo - 1e-12 || x > hi + 1e-12 {
                    assert!(delta <= 1e-10, "k={k} leaked to x={x}: {delta}");
                }
            }
        }
    }
}
