//! Seeded sweeps that measure empirical equivalence constants.
//!
//! A sweep builds deterministic cases (generator × seed × (r, p)),
//! evaluates every norm, interpolator energy and oracle on each case, and
//! reports the ratios whose boundedness the equivalence theory predicts.
//! All randomness is seeded and recorded, so reports are byte-identical
//! across runs; ratios with a vanishing denominator are reported as a
//! distinguished `undefined` marker rather than NaN.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{generate_nodes, NodeGenerator};
use crate::interpolators::{phi1_energy_pow, phi2_energy_pow};
use crate::norms::{eq_norm_l_pow, eq_norm_w_pow, simp_norm_w_pow, NormParams, TraceData};
use crate::oracle::{oracle_l, oracle_w};

/// Declarative sweep description; fully determines the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub generators: Vec<NodeGenerator>,
    pub seeds: Vec<u64>,
    /// `(r, p)` pairs evaluated per generated case.
    pub rp_pairs: Vec<(usize, f64)>,
    pub grid_per_gap: usize,
    pub tol: f64,
    /// Optional uniform step bound recorded per case and enforced by the
    /// W-norms; must cover every generator in the list.
    #[serde(default)]
    pub step_bound: Option<f64>,
    /// Data values are iid uniform in `[-scale, scale]`; zero gives
    /// all-zero data.
    #[serde(default = "default_value_scale")]
    pub value_scale: f64,
}

fn default_value_scale() -> f64 {
    1.0
}

/// Whether the solvers converged on a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Ok,
    NoConvergence,
}

/// The four monitored ratios; `None` marks an undefined value.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct CaseRatios {
    pub oracle_l_over_eq_l: Option<f64>,
    pub phi_over_oracle_l: Option<f64>,
    pub oracle_w_over_eq_w: Option<f64>,
    pub eq_w_over_simp_w: Option<f64>,
}

/// One sweep case with every measured quantity.
#[derive(Debug, Clone, Serialize)]
pub struct CaseRecord {
    pub case: usize,
    pub kind: &'static str,
    /// Number of gaps `N`.
    pub n: usize,
    pub seed: u64,
    pub r: usize,
    pub p: f64,
    pub k_bound: Option<f64>,
    pub status: CaseStatus,
    pub eq_l_pow: f64,
    pub eq_w_pow: f64,
    /// `None` on two-node cases, where the second-order simplified norm
    /// has no stencil.
    pub simp_w_pow: Option<f64>,
    /// Interpolator energy: the linear one for `r = 1`, the cubic one for
    /// `r = 2`.
    pub phi_energy_pow: f64,
    pub oracle_l_pow: Option<f64>,
    pub oracle_w_pow: Option<f64>,
    pub ratios: CaseRatios,
}

/// Min/max/mean over the defined values of one ratio.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioStats {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub defined: usize,
    pub undefined: usize,
}

impl RatioStats {
    fn collect<'a>(values: impl Iterator<Item = &'a Option<f64>>) -> Self {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut defined = 0;
        let mut undefined = 0;
        for v in values {
            match v {
                Some(x) => {
                    min = min.min(*x);
                    max = max.max(*x);
                    sum += x;
                    defined += 1;
                }
                None => undefined += 1,
            }
        }
        if defined == 0 {
            Self {
                min: None,
                max: None,
                mean: None,
                defined,
                undefined,
            }
        } else {
            Self {
                min: Some(min),
                max: Some(max),
                mean: Some(sum / defined as f64),
                defined,
                undefined,
            }
        }
    }
}

/// Aggregated ratio statistics over a whole sweep.
#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub cases: usize,
    pub failed_cases: usize,
    pub oracle_l_over_eq_l: RatioStats,
    pub phi_over_oracle_l: RatioStats,
    pub oracle_w_over_eq_w: RatioStats,
    pub eq_w_over_simp_w: RatioStats,
}

/// Per-case records plus aggregate statistics.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub cases: Vec<CaseRecord>,
    pub aggregate: Aggregate,
}

fn ratio(numerator: f64, denominator: f64) -> Option<f64> {
    (denominator > 0.0).then(|| numerator / denominator)
}

fn opt_ratio(numerator: Option<f64>, denominator: f64) -> Option<f64> {
    numerator.and_then(|n| ratio(n, denominator))
}

/// Runs every case of `config` and assembles the report.
///
/// Oracle non-convergence flags the case and the sweep continues; any
/// validation error (bad generator, step bound violated) aborts.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    if !(config.value_scale >= 0.0 && config.value_scale.is_finite()) {
        return Err(Error::Precondition(format!(
            "value_scale must be finite and >= 0, got {}",
            config.value_scale
        )));
    }
    let mut cases = Vec::new();
    let mut failed = 0;
    let mut case_index = 0;
    for generator in &config.generators {
        for &seed in &config.seeds {
            let nodes = generate_nodes(generator, seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
            let values: Vec<f64> = (0..nodes.len())
                .map(|_| {
                    let u: f64 = rng.gen_range(-1.0..1.0);
                    u * config.value_scale
                })
                .collect();
            let data = TraceData::new(nodes, values)?;
            for &(r, p) in &config.rp_pairs {
                let mut params = NormParams::new(r, p)?;
                if let Some(k) = config.step_bound {
                    params = params.with_step_bound(k)?;
                }
                let record = run_case(case_index, generator, seed, &data, &params, config)?;
                if record.status == CaseStatus::NoConvergence {
                    failed += 1;
                }
                cases.push(record);
                case_index += 1;
            }
        }
    }
    let aggregate = Aggregate {
        cases: cases.len(),
        failed_cases: failed,
        oracle_l_over_eq_l: RatioStats::collect(cases.iter().map(|c| &c.ratios.oracle_l_over_eq_l)),
        phi_over_oracle_l: RatioStats::collect(cases.iter().map(|c| &c.ratios.phi_over_oracle_l)),
        oracle_w_over_eq_w: RatioStats::collect(cases.iter().map(|c| &c.ratios.oracle_w_over_eq_w)),
        eq_w_over_simp_w: RatioStats::collect(cases.iter().map(|c| &c.ratios.eq_w_over_simp_w)),
    };
    Ok(SweepReport { cases, aggregate })
}

fn run_case(
    case: usize,
    generator: &NodeGenerator,
    seed: u64,
    data: &TraceData,
    params: &NormParams,
    config: &SweepConfig,
) -> Result<CaseRecord> {
    let (r, p) = (params.r(), params.p());
    let eq_l_pow = eq_norm_l_pow(data, params)?;
    let eq_w_pow = eq_norm_w_pow(data, params)?;
    let simp_w_pow = if data.nodes().num_gaps() >= 2 {
        Some(simp_norm_w_pow(data, p)?)
    } else {
        None
    };
    let phi_energy_pow = match r {
        1 => phi1_energy_pow(data, p)?,
        _ => phi2_energy_pow(data, p)?,
    };
    let mut status = CaseStatus::Ok;
    let oracle_l_pow = match oracle_l(data, params, config.grid_per_gap, config.tol) {
        Ok(res) => Some(res.value_pow),
        Err(Error::DidNotConverge(_)) => {
            status = CaseStatus::NoConvergence;
            None
        }
        Err(e) => return Err(e),
    };
    let oracle_w_pow = match oracle_w(data, params, config.grid_per_gap, config.tol) {
        Ok(res) => Some(res.value_pow),
        Err(Error::DidNotConverge(_)) => {
            status = CaseStatus::NoConvergence;
            None
        }
        Err(e) => return Err(e),
    };
    let ratios = CaseRatios {
        oracle_l_over_eq_l: opt_ratio(oracle_l_pow, eq_l_pow),
        phi_over_oracle_l: oracle_l_pow.and_then(|o| (o > 0.0).then(|| phi_energy_pow / o)),
        oracle_w_over_eq_w: opt_ratio(oracle_w_pow, eq_w_pow),
        eq_w_over_simp_w: simp_w_pow.and_then(|s| ratio(eq_w_pow, s)),
    };
    Ok(CaseRecord {
        case,
        kind: generator.label(),
        n: data.nodes().num_gaps(),
        seed,
        r,
        p,
        k_bound: params.step_bound(),
        status,
        eq_l_pow,
        eq_w_pow,
        simp_w_pow,
        phi_energy_pow,
        oracle_l_pow,
        oracle_w_pow,
        ratios,
    })
}

/// Round-trip-safe fixed formatting: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), fmt_f64)
}

/// Renders the per-case table as CSV with deterministic bytes.
pub fn report_to_csv(report: &SweepReport) -> String {
    let mut out = String::from(
        "case,kind,n,seed,r,p,k,status,eq_l_pow,eq_w_pow,simp_w_pow,phi_energy_pow,\
         oracle_l_pow,oracle_w_pow,ratio_oracle_l_eq_l,ratio_phi_oracle_l,\
         ratio_oracle_w_eq_w,ratio_eq_w_simp_w\n",
    );
    for c in &report.cases {
        let status = match c.status {
            CaseStatus::Ok => "ok",
            CaseStatus::NoConvergence => "no_convergence",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.case,
            c.kind,
            c.n,
            c.seed,
            c.r,
            fmt_f64(c.p),
            c.k_bound.map_or_else(String::new, fmt_f64),
            status,
            fmt_f64(c.eq_l_pow),
            fmt_f64(c.eq_w_pow),
            fmt_opt(c.simp_w_pow),
            fmt_f64(c.phi_energy_pow),
            fmt_opt(c.oracle_l_pow),
            fmt_opt(c.oracle_w_pow),
            fmt_opt(c.ratios.oracle_l_over_eq_l),
            fmt_opt(c.ratios.phi_over_oracle_l),
            fmt_opt(c.ratios.oracle_w_over_eq_w),
            fmt_opt(c.ratios.eq_w_over_simp_w),
        ));
    }
    out
}

/// Serializes any report value as JSON with floats at 17 significant
/// digits, matching the CSV formatting contract.
pub fn to_json_17<T: Serialize>(value: &T) -> String {
    struct SigFig17;
    impl serde_json::ser::Formatter for SigFig17 {
        fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
        where
            W: ?Sized + Write,
        {
            write!(writer, "{value:.16e}")
        }
    }
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFig17);
    value
        .serialize(&mut ser)
        .expect("report serialization is infallible");
    String::from_utf8(out).expect("serialized JSON is UTF-8")
}

/// Result of the clustered-nodes scenario: the true W trace energy versus
/// the candidate simplified norm.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleRecord {
    pub h: f64,
    pub m: usize,
    pub p: f64,
    pub lhs_pow: f64,
    pub rhs_pow: f64,
    pub ratio: Option<f64>,
}

/// Both sides of the scenario comparison for arbitrary data: the W oracle
/// energy and the simplified-norm power.
pub fn counterexample_sides(
    data: &TraceData,
    p: f64,
    grid_per_gap: usize,
    tol: f64,
) -> Result<(f64, f64)> {
    let params = NormParams::new(2, p)?;
    let rhs = simp_norm_w_pow(data, p)?;
    let lhs = oracle_w(data, &params, grid_per_gap, tol)?.value_pow;
    Ok((lhs, rhs))
}

/// Clustered-node scenario: nodes accumulate toward `±(1+h)` and the data
/// samples the parabola `((1+h)² − x²) / (h(2+h))`, which is 1 at `±1` and
/// small near the cluster ends. For second-order norms the ratio stays
/// bounded as `h` shrinks; this is the control configuration for the
/// simplified norm.
pub fn counterexample_scenario(
    h: f64,
    m: usize,
    p: f64,
    grid_per_gap: usize,
) -> Result<CounterexampleRecord> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::Precondition(format!(
            "scenario needs 0 < h <= 1, got {h}"
        )));
    }
    if m < 2 {
        return Err(Error::Precondition(format!(
            "scenario needs m >= 2, got {m}"
        )));
    }
    let nodes = generate_nodes(&NodeGenerator::Clustering { h, m }, 0)?;
    let parabola = |x: f64| ((1.0 + h) * (1.0 + h) - x * x) / (h * (2.0 + h));
    let values: Vec<f64> = nodes.nodes().iter().map(|&x| parabola(x)).collect();
    let data = TraceData::new(nodes, values)?;
    let (lhs_pow, rhs_pow) = counterexample_sides(&data, p, grid_per_gap, 1e-8)?;
    Ok(CounterexampleRecord {
        h,
        m,
        p,
        lhs_pow,
        rhs_pow,
        ratio: ratio(lhs_pow, rhs_pow),
    })
}

/// Two-sided comparison of the W oracle against the simplified norm on a
/// window that is long relative to the step bound.
#[derive(Debug, Clone, Serialize)]
pub struct LargeIntervalRecord {
    pub k_bound: f64,
    pub p: f64,
    pub oracle_w_pow: f64,
    pub simp_w_pow: f64,
    pub ratio: Option<f64>,
}

/// Checks the simplified norm against the W oracle at `r = 2` on data
/// whose window spans at least `10 K` with steps bounded by `K`.
pub fn large_interval_check(k_bound: f64, data: &TraceData, p: f64) -> Result<LargeIntervalRecord> {
    if !(k_bound > 0.0 && k_bound.is_finite()) {
        return Err(Error::InvalidStepBound(k_bound));
    }
    let max_step = data.nodes().max_step();
    if max_step > k_bound {
        return Err(Error::Precondition(format!(
            "steps must stay below K = {k_bound}, found {max_step}"
        )));
    }
    let span = data.nodes().span();
    if span < 10.0 * k_bound {
        return Err(Error::Precondition(format!(
            "window length {span} is below 10 K = {}",
            10.0 * k_bound
        )));
    }
    let params = NormParams::new(2, p)?.with_step_bound(k_bound)?;
    let oracle = oracle_w(data, &params, 64, 1e-8)?;
    let simp = simp_norm_w_pow(data, p)?;
    Ok(LargeIntervalRecord {
        k_bound,
        p,
        oracle_w_pow: oracle.value_pow,
        simp_w_pow: simp,
        ratio: ratio(oracle.value_pow, simp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::NodeSequence;

    fn small_config() -> SweepConfig {
        SweepConfig {
            generators: vec![
                NodeGenerator::Uniform {
                    start: 0.0,
                    step: 1.0,
                    count: 7,
                },
                NodeGenerator::RandomGaps {
                    lo: 0.3,
                    hi: 1.5,
                    count: 7,
                },
            ],
            seeds: vec![1, 2],
            rp_pairs: vec![(1, 2.0), (2, 2.0)],
            grid_per_gap: 16,
            tol: 1e-8,
            step_bound: Some(2.0),
            value_scale: 1.0,
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let config = small_config();
        let a = report_to_csv(&run_sweep(&config).unwrap());
        let b = report_to_csv(&run_sweep(&config).unwrap());
        assert_eq!(a, b);
        assert!(a.lines().count() == 1 + 2 * 2 * 2);
    }

    #[test]
    fn zero_data_flags_ratios_undefined() {
        let mut config = small_config();
        config.value_scale = 0.0;
        let report = run_sweep(&config).unwrap();
        for case in &report.cases {
            assert_eq!(case.eq_l_pow, 0.0);
            assert_eq!(case.eq_w_pow, 0.0);
            assert!(case.ratios.oracle_l_over_eq_l.is_none());
            assert!(case.ratios.eq_w_over_simp_w.is_none());
        }
        assert_eq!(report.aggregate.oracle_l_over_eq_l.defined, 0);
        let csv = report_to_csv(&report);
        assert!(csv.contains("undefined"));
        assert!(!csv.contains("NaN"));
    }

    #[test]
    fn worked_case_record_values() {
        let config = SweepConfig {
            generators: vec![NodeGenerator::Uniform {
                start: 0.0,
                step: 1.0,
                count: 3,
            }],
            seeds: vec![0],
            rp_pairs: vec![(2, 2.0)],
            grid_per_gap: 16,
            tol: 1e-9,
            step_bound: None,
            value_scale: 1.0,
        };
        // replace the random values by the hat data through the public API
        let nodes = NodeSequence::new(vec![0.0, 1.0, 2.0]).unwrap();
        let data = TraceData::new(nodes, vec![0.0, 1.0, 0.0]).unwrap();
        let params = NormParams::new(2, 2.0).unwrap();
        let record = run_case(0, &config.generators[0], 0, &data, &params, &config).unwrap();
        assert!((record.eq_l_pow - 2.0).abs() < 1e-12);
        assert!((record.oracle_l_pow.unwrap() - 6.0).abs() < 1e-12);
        assert!((record.phi_energy_pow - 32.0).abs() < 1e-12);
    }

    #[test]
    fn two_node_cases_skip_second_order_columns() {
        let config = SweepConfig {
            generators: vec![NodeGenerator::Uniform {
                start: 0.0,
                step: 1.0,
                count: 2,
            }],
            seeds: vec![5],
            rp_pairs: vec![(1, 2.0)],
            grid_per_gap: 16,
            tol: 1e-8,
            step_bound: None,
            value_scale: 1.0,
        };
        let report = run_sweep(&config).unwrap();
        assert_eq!(report.cases.len(), 1);
        assert!(report.cases[0].simp_w_pow.is_none());
        assert!(report.cases[0].ratios.eq_w_over_simp_w.is_none());
        assert!(report_to_csv(&report).contains("undefined"));
    }

    #[test]
    fn ratios_for_r1_are_exact() {
        let config = small_config();
        let report = run_sweep(&config).unwrap();
        for case in report.cases.iter().filter(|c| c.r == 1) {
            let ratio = case.ratios.oracle_l_over_eq_l.unwrap();
            assert!((ratio - 1.0).abs() <= 1e-10, "case {}: {ratio}", case.case);
        }
    }

    #[test]
    fn counterexample_control_at_second_order() {
        let coarse = counterexample_scenario(0.5, 4, 2.0, 16).unwrap();
        let fine = counterexample_scenario(0.25, 4, 2.0, 16).unwrap();
        let (a, b) = (coarse.ratio.unwrap(), fine.ratio.unwrap());
        assert!(a.is_finite() && b.is_finite());
        // halving h must not move the second-order ratio by 2x either way
        assert!((b / a).max(a / b) < 2.0, "ratio jumped from {a} to {b}");
    }

    #[test]
    fn counterexample_zero_data() {
        let nodes = generate_nodes(&NodeGenerator::Clustering { h: 0.5, m: 3 }, 0).unwrap();
        let len = nodes.len();
        let data = TraceData::new(nodes, vec![0.0; len]).unwrap();
        let (lhs, rhs) = counterexample_sides(&data, 2.0, 16, 1e-8).unwrap();
        assert_eq!(lhs, 0.0);
        assert_eq!(rhs, 0.0);
    }

    #[test]
    fn counterexample_preconditions() {
        assert!(matches!(
            counterexample_scenario(0.0, 4, 2.0, 16),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            counterexample_scenario(0.5, 1, 2.0, 16),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn large_interval_preconditions() {
        let nodes = NodeSequence::new(vec![0.0, 1.0, 2.0]).unwrap();
        let data = TraceData::new(nodes, vec![1.0, 1.0, 1.0]).unwrap();
        // span 2 < 10 K for K = 1
        assert!(matches!(
            large_interval_check(1.0, &data, 2.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn large_interval_ratio_spread_on_seeded_corpus() {
        use rand::{Rng, SeedableRng};
        let mut ratios = Vec::new();
        for seed in 0..20u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut xs = vec![0.0];
            while *xs.last().unwrap() < 11.0 {
                let next = xs.last().unwrap() + rng.gen_range(0.3..1.0);
                xs.push(next);
            }
            let values: Vec<f64> = (0..xs.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let data = TraceData::new(NodeSequence::new(xs).unwrap(), values).unwrap();
            let record = large_interval_check(1.0, &data, 2.0).unwrap();
            ratios.push(record.ratio.unwrap());
        }
        let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0);
        assert!(
            max / min < 1e3,
            "empirical two-sided constants spread: {min}..{max}"
        );
    }

    #[test]
    fn large_interval_constant_and_affine_data() {
        let nodes: Vec<f64> = (0..=12).map(|k| k as f64).collect();
        let constant =
            TraceData::new(NodeSequence::new(nodes.clone()).unwrap(), vec![1.0; 13]).unwrap();
        let record = large_interval_check(1.0, &constant, 2.0).unwrap();
        assert!(record.oracle_w_pow > 0.0 && record.simp_w_pow > 0.0);
        assert!(record.ratio.unwrap().is_finite());

        let affine = TraceData::new(
            NodeSequence::new(nodes).unwrap(),
            (0..=12).map(|k| 0.5 * k as f64 - 1.0).collect(),
        )
        .unwrap();
        let record = large_interval_check(1.0, &affine, 2.0).unwrap();
        assert!(record.ratio.unwrap().is_finite());
    }

    #[test]
    fn json_rendering_uses_fixed_precision() {
        let json = to_json_17(&CounterexampleRecord {
            h: 0.5,
            m: 4,
            p: 2.0,
            lhs_pow: 1.0 / 3.0,
            rhs_pow: 0.25,
            ratio: Some(4.0 / 3.0),
        });
        assert!(json.contains("3.3333333333333331e-1"), "{json}");
        assert!(json.contains("\"ratio\":1.3333333333333333e0"), "{json}");
    }
}
