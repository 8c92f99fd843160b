//! Monte Carlo checks of almost-everywhere digit statistics, plus the
//! Jarník and Dirichlet event detectors.
//!
//! A sample is a uniform dyadic cell [X/2^b, (X+1)/2^b); only the digits
//! shared by the whole cell are reported, so no digit is ever wrong.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cf::{convergents_of, expand_certified, DigitSequence};
use crate::error::{Error, Result};
use crate::logscalar::LogScalar;
use crate::weights::WeightVector;

/// Gauss–Kuzmin probability of a digit equal to 1, log2(4/3). Used only as
/// an external calibration constant.
pub const GAUSS_KUZMIN_ONE: f64 = 0.415_037_499_278_843_8;

/// Retries double the precision at most this many times.
const MAX_DOUBLINGS: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TrialConfig {
    pub trials: usize,
    pub depth: usize,
    pub precision_bits: u64,
    pub master_seed: u64,
}

impl TrialConfig {
    /// A digit costs about 3.4 bits on average; 4 bits per digit plus a
    /// margin certifies the full depth almost always.
    pub fn default_precision(depth: usize) -> u64 {
        4 * depth as u64 + 64
    }

    pub fn new(trials: usize, depth: usize, master_seed: u64) -> Result<Self> {
        let cfg = TrialConfig {
            trials,
            depth,
            precision_bits: Self::default_precision(depth),
            master_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Input("trials must be >= 1".into()));
        }
        if self.depth == 0 {
            return Err(Error::Input("depth must be >= 1".into()));
        }
        if self.precision_bits == 0 {
            return Err(Error::Input("precision_bits must be >= 1".into()));
        }
        Ok(())
    }
}

/// The first `bits` bits of the trial's random stream as an integer.
fn draw_bits(master_seed: u64, trial_index: usize, bits: u64) -> BigUint {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index as u64);
    let words = bits.div_ceil(32) as usize;
    let mut digits: Vec<u32> = (0..words).map(|_| rng.next_u32()).collect();
    // Big-endian in the stream: earlier words are the high bits, so more
    // bits refine the same cell.
    digits.reverse();
    let x = BigUint::from_slice(&digits);
    x >> (words as u64 * 32 - bits)
}

fn sample_at(cfg: &TrialConfig, trial_index: usize, bits: u64) -> Result<DigitSequence> {
    let x = draw_bits(cfg.master_seed, trial_index, bits);
    // Cell midpoint (2X+1)/2^{b+1} with radius 2^{-(b+1)}.
    let denom = BigInt::one() << (bits + 1);
    let mid = BigRational::new(
        BigInt::from_biguint(Sign::Plus, (x << 1u32) + 1u32),
        denom.clone(),
    );
    let radius = BigRational::new(BigInt::one(), denom);
    let digits = expand_certified(&mid, cfg.depth, &radius)?;
    if digits.len() < cfg.depth {
        return Err(Error::PrecisionExhausted {
            certified: digits.len(),
            requested: cfg.depth,
        });
    }
    Ok(digits)
}

/// The certified digits of trial `trial_index` at the configured precision.
pub fn sample_uniform_digits(cfg: &TrialConfig, trial_index: usize) -> Result<DigitSequence> {
    cfg.validate()?;
    sample_at(cfg, trial_index, cfg.precision_bits)
}

/// As [`sample_uniform_digits`], doubling the precision on shortfall.
/// Returns the digits and the number of bits finally used.
pub fn sample_with_retry(cfg: &TrialConfig, trial_index: usize) -> Result<(DigitSequence, u64)> {
    cfg.validate()?;
    let mut bits = cfg.precision_bits;
    for attempt in 0..=MAX_DOUBLINGS {
        match sample_at(cfg, trial_index, bits) {
            Ok(d) => return Ok((d, bits)),
            Err(Error::PrecisionExhausted { .. }) if attempt < MAX_DOUBLINGS => bits *= 2,
            Err(e) => return Err(e),
        }
    }
    unreachable!("loop returns on the last attempt")
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialSamples {
    pub digits: Vec<DigitSequence>,
    /// Trials that needed more than the configured precision.
    pub retried: usize,
}

impl TrialSamples {
    pub fn retry_rate(&self) -> f64 {
        self.retried as f64 / self.digits.len() as f64
    }
}

/// All trials, in trial order.
pub fn run_trials(cfg: &TrialConfig) -> Result<TrialSamples> {
    cfg.validate()?;
    let results: Vec<(DigitSequence, u64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| sample_with_retry(cfg, i))
        .collect::<Result<_>>()?;
    let retried = results
        .iter()
        .filter(|(_, b)| *b > cfg.precision_bits)
        .count();
    Ok(TrialSamples {
        digits: results.into_iter().map(|(d, _)| d).collect(),
        retried,
    })
}

/// Fraction of all digits equal to 1.
pub fn digit_one_frequency(samples: &TrialSamples) -> Result<f64> {
    let mut ones = 0usize;
    let mut total = 0usize;
    for d in &samples.digits {
        let d = d.exact_digits()?;
        ones += d.iter().filter(|a| a.is_one()).count();
        total += d.len();
    }
    Ok(ones as f64 / total as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Summary {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        Summary {
            mean: v.iter().sum::<f64>() / n as f64,
            median,
            min: v[0],
            max: v[n - 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BernsteinReport {
    pub counts: Vec<u64>,
    pub summary: Summary,
    /// log N / ln 2, the Gauss–Kuzmin estimate of the mean count.
    pub heuristic_center: f64,
    pub retried: usize,
}

/// #{n <= N : a_n >= threshold(n)}; thresholds may be infinite.
pub fn count_exceedances(digits: &DigitSequence, threshold: impl Fn(usize) -> f64) -> Result<u64> {
    let d = digits.exact_digits()?;
    Ok(d.iter()
        .enumerate()
        .filter(|(i, a)| {
            let t = threshold(i + 1);
            // Thresholds are compared exactly below 2^53.
            t.is_finite() && a.to_f64().unwrap_or(f64::INFINITY) >= t
        })
        .count() as u64)
}

/// Per trial, #{n <= N : a_n >= n}.
pub fn borel_bernstein_count(cfg: &TrialConfig) -> Result<BernsteinReport> {
    borel_bernstein_with(cfg, |n| n as f64)
}

pub fn borel_bernstein_with(
    cfg: &TrialConfig,
    threshold: impl Fn(usize) -> f64 + Sync,
) -> Result<BernsteinReport> {
    let samples = run_trials(cfg)?;
    let counts: Vec<u64> = samples
        .digits
        .par_iter()
        .map(|d| count_exceedances(d, &threshold))
        .collect::<Result<_>>()?;
    let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Ok(BernsteinReport {
        summary: Summary::of(&as_f),
        counts,
        heuristic_center: (cfg.depth as f64).ln() / std::f64::consts::LN_2,
        retried: samples.retried,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthTrace {
    /// First n in the trace, m + 2.
    pub start: usize,
    /// (Σ t_i log a_{n+i}) / (t_max log n)
    pub ratios: Vec<f64>,
    pub running_max: Vec<f64>,
}

impl GrowthTrace {
    pub fn last(&self) -> f64 {
        *self.running_max.last().expect("nonempty trace")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthReport {
    pub traces: Vec<GrowthTrace>,
    /// S_N per trial.
    pub finals: Vec<f64>,
    pub summary: Summary,
    pub retried: usize,
}

pub fn growth_trace(digits: &DigitSequence, w: &WeightVector) -> Result<GrowthTrace> {
    let logs: Vec<f64> = digits.log_digits().iter().map(LogScalar::ln_f64).collect();
    let m = w.m();
    let start = m + 2;
    let end = logs.len().saturating_sub(m);
    if end < start {
        return Err(Error::Input(format!(
            "depth {} is too small for m = {m}; need at least {}",
            logs.len(),
            2 * m + 2
        )));
    }
    let t_max = w.max();
    let mut ratios = Vec::with_capacity(end - start + 1);
    let mut running_max = Vec::with_capacity(end - start + 1);
    let mut best = f64::NEG_INFINITY;
    for n in start..=end {
        let num: f64 = (0..=m).map(|i| w.get(i) * logs[n + i - 1]).sum();
        let r = num / (t_max * (n as f64).ln());
        best = best.max(r);
        ratios.push(r);
        running_max.push(best);
    }
    Ok(GrowthTrace {
        start,
        ratios,
        running_max,
    })
}

/// Per trial, S_N = max_{m+2 <= n <= N-m} (Σ t_i log a_{n+i}) / (t_max log n),
/// with its running-max trace.
pub fn weighted_growth_stat(cfg: &TrialConfig, w: &WeightVector) -> Result<GrowthReport> {
    let samples = run_trials(cfg)?;
    let traces: Vec<GrowthTrace> = samples
        .digits
        .par_iter()
        .map(|d| growth_trace(d, w))
        .collect::<Result<_>>()?;
    let finals: Vec<f64> = traces.iter().map(GrowthTrace::last).collect();
    Ok(GrowthReport {
        summary: Summary::of(&finals),
        finals,
        traces,
        retried: samples.retried,
    })
}

// ---------------------------------------------------------------------------
// Event detectors

/// Indices n <= depth-1 with a_{n+1} >= q_n^τ.
pub fn jarnik_events(digits: &DigitSequence, tau: f64) -> Result<Vec<usize>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Input(format!("tau = {tau} must be > 0")));
    }
    let d = digits.exact_digits()?;
    let conv = convergents_of(digits)?;
    let integral_tau = (tau.fract() == 0.0 && tau <= 1e6).then_some(tau as u32);
    let mut events = Vec::new();
    for n in 1..d.len() {
        let q = conv[n - 1].q_cur.magnitude();
        let a = &d[n];
        let lhs = LogScalar::from_biguint(a).ln();
        let rhs = LogScalar::from_biguint(q).ln().mul_f64(tau);
        let gap = (lhs - rhs).to_f64();
        let guard = 1e-20 * (1.0 + rhs.abs().to_f64());
        let hit = if gap.abs() > guard {
            gap > 0.0
        } else if let Some(k) = integral_tau {
            *a >= q.pow(k)
        } else {
            gap >= 0.0
        };
        if hit {
            events.push(n);
        }
    }
    Ok(events)
}

/// ψ as a decreasing function, evaluated through logs because q_n is huge.
pub enum Psi {
    /// ψ(q) = c / q with 0 < c < 1.
    Scaled(f64),
    /// ψ(q) = c / (q log q).
    InverseLog(f64),
    /// Step function: ψ(q) = ψ_i for the largest q_i <= q; pairs (q_i, ψ_i)
    /// with q_i increasing.
    Table(Vec<(f64, f64)>),
    /// log ψ as a function of log q.
    Custom(Box<dyn Fn(f64) -> f64 + Sync>),
}

impl Psi {
    /// log(q ψ(q)) given log q; `None` when ψ is undefined there.
    fn log_q_psi(&self, log_q: f64) -> Option<f64> {
        match self {
            Psi::Scaled(c) => Some(c.ln()),
            Psi::InverseLog(c) => (log_q > 0.0).then(|| c.ln() - log_q.ln()),
            Psi::Table(rows) => {
                let i = rows.partition_point(|(q, _)| q.ln() <= log_q);
                (i > 0).then(|| log_q + rows[i - 1].1.ln())
            }
            Psi::Custom(f) => Some(log_q + f(log_q)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirichletPoint {
    pub n: usize,
    pub log_q: f64,
    /// log of ((q ψ(q))^{-1} - 1)^{-1}; `None` when skipped.
    pub log_threshold: Option<f64>,
    pub log_product: f64,
    /// a_n a_{n+1} >= threshold
    pub inner: bool,
    /// a_n a_{n+1} >= threshold / 4
    pub outer: bool,
    /// q ψ(q) outside (0, 1), so the threshold is undefined.
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirichletReport {
    pub points: Vec<DirichletPoint>,
    /// ψ increased somewhere on the q_n actually evaluated.
    pub psi_not_monotone: bool,
}

const DIRICHLET_TOLERANCE: f64 = 1e-12;

pub fn dirichlet_events(digits: &DigitSequence, psi: &Psi) -> Result<DirichletReport> {
    let d = digits.exact_digits()?;
    let conv = convergents_of(digits)?;
    let mut points = Vec::new();
    let mut last_log_psi = f64::INFINITY;
    let mut psi_not_monotone = false;
    for n in 1..d.len() {
        let log_q = LogScalar::from_biguint(conv[n - 1].q_cur.magnitude()).ln_f64();
        let log_product = (LogScalar::from_biguint(&d[n - 1]).ln()
            + LogScalar::from_biguint(&d[n]).ln())
        .to_f64();
        let u = psi.log_q_psi(log_q);
        if let Some(u) = u {
            let log_psi = u - log_q;
            if log_psi > last_log_psi + DIRICHLET_TOLERANCE {
                psi_not_monotone = true;
            }
            last_log_psi = log_psi;
        }
        let point = match u.filter(|&u| u < 0.0) {
            Some(u) => {
                // log(e^u / (1 - e^u))
                let log_t = u - (-u.exp_m1()).ln();
                let inner = log_product >= log_t - DIRICHLET_TOLERANCE;
                let outer = log_product >= log_t - 4f64.ln() - DIRICHLET_TOLERANCE;
                DirichletPoint {
                    n,
                    log_q,
                    log_threshold: Some(log_t),
                    log_product,
                    inner,
                    outer,
                    skipped: false,
                }
            }
            None => DirichletPoint {
                n,
                log_q,
                log_threshold: None,
                log_product,
                inner: false,
                outer: false,
                skipped: true,
            },
        };
        points.push(point);
    }
    Ok(DirichletReport {
        points,
        psi_not_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(d: &[u64]) -> DigitSequence {
        DigitSequence::from_u64s(d).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = TrialConfig::new(4, 50, 1234).unwrap();
        let a = sample_uniform_digits(&cfg, 2).unwrap();
        let b = sample_uniform_digits(&cfg, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_uniform_digits(&cfg, 3).unwrap());
        assert!(a
            .exact_digits()
            .unwrap()
            .iter()
            .all(|x| !num_traits::Zero::is_zero(x)));
    }

    #[test]
    fn more_bits_refine_the_cell() {
        let lo = draw_bits(9, 0, 100);
        let hi = draw_bits(9, 0, 200);
        assert_eq!(hi >> 100u32, lo);
    }

    #[test]
    fn digits_agree_with_both_cell_endpoints() {
        let cfg = TrialConfig::new(1, 30, 77).unwrap();
        let bits = cfg.precision_bits;
        let d = sample_uniform_digits(&cfg, 0).unwrap();
        let x = draw_bits(77, 0, bits);
        let den = BigInt::one() << bits;
        let lo = BigRational::new(BigInt::from_biguint(Sign::Plus, x.clone()), den.clone());
        let hi = BigRational::new(BigInt::from_biguint(Sign::Plus, x + 1u32), den);
        let zero = BigRational::from_integer(BigInt::from(0));
        let a = expand_certified(&lo, 30, &zero).unwrap();
        let b = expand_certified(&hi, 30, &zero).unwrap();
        assert_eq!(a, d);
        assert_eq!(b, d);
    }

    #[test]
    fn short_precision_is_signalled_and_retried() {
        let cfg = TrialConfig {
            trials: 1,
            depth: 40,
            precision_bits: 20,
            master_seed: 5,
        };
        assert!(matches!(
            sample_uniform_digits(&cfg, 0),
            Err(Error::PrecisionExhausted { requested: 40, .. })
        ));
        let (d, bits) = sample_with_retry(&cfg, 0).unwrap();
        assert_eq!(d.len(), 40);
        assert!(bits > 20);
    }

    #[test]
    fn trivial_thresholds() {
        let d = ds(&[1, 5, 2, 100, 1]);
        assert_eq!(count_exceedances(&d, |_| f64::INFINITY).unwrap(), 0);
        assert_eq!(count_exceedances(&d, |_| 1.0).unwrap(), 5);
        assert_eq!(count_exceedances(&d, |n| n as f64).unwrap(), 3);
    }

    #[test]
    fn growth_statistic_is_scale_free() {
        let d = ds(&[3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8, 9, 7, 9]);
        let w = WeightVector::parse("1,0.5").unwrap();
        let a = growth_trace(&d, &w).unwrap();
        let b = growth_trace(&d, &w.scaled(3.5).unwrap()).unwrap();
        for (x, y) in a.ratios.iter().zip(&b.ratios) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(a.running_max.windows(2).all(|p| p[0] <= p[1]));
        assert_eq!(a.start, 3);
    }

    #[test]
    fn jarnik_examples() {
        assert_eq!(jarnik_events(&ds(&[1; 20]), 0.5).unwrap(), vec![1]);
        assert_eq!(jarnik_events(&ds(&[1, 3, 1]), 7.0).unwrap(), vec![1]);
        assert_eq!(jarnik_events(&ds(&[2, 5]), 2.0).unwrap(), vec![1]);
        assert_eq!(jarnik_events(&ds(&[2, 4]), 2.0).unwrap(), vec![1]);
        assert!(jarnik_events(&ds(&[2, 3]), 2.0).unwrap().is_empty());
        assert!(jarnik_events(&ds(&[2, 3]), 0.0).is_err());
    }

    #[test]
    fn dirichlet_constant_threshold() {
        let r = dirichlet_events(&ds(&[1, 2, 1, 1, 3, 1]), &Psi::Scaled(0.5)).unwrap();
        assert!(r
            .points
            .iter()
            .all(|p| p.inner && p.outer && p.log_threshold == Some(0.0)));
        assert!(!r.psi_not_monotone);
    }

    #[test]
    fn dirichlet_inverse_log_all_ones() {
        // q ψ(q) = 1/log q, so the threshold 1/(log q - 1) falls below 1
        // once log q > 2 and every later index is an event.
        let r = dirichlet_events(&ds(&[1; 50]), &Psi::InverseLog(1.0)).unwrap();
        let events: Vec<usize> = r.points.iter().filter(|p| p.inner).map(|p| p.n).collect();
        assert!(events.len() > 40);
        assert!(r
            .points
            .iter()
            .filter(|p| p.skipped)
            .all(|p| p.log_q <= 1.0));
    }

    #[test]
    fn dirichlet_table_and_skips() {
        let psi = Psi::Table(vec![(1.0, 0.9), (3.0, 0.2), (10.0, 0.05)]);
        let r = dirichlet_events(&ds(&[1, 1, 1, 1, 1, 1]), &psi).unwrap();
        // q_1 = 1: q ψ = 0.9; q_2 = 2: 1.8 out of range.
        assert!(!r.points[0].skipped);
        assert!(r.points[1].skipped);
        let rising = Psi::Table(vec![(1.0, 0.1), (3.0, 0.3)]);
        assert!(
            dirichlet_events(&ds(&[1, 1, 1, 1, 1]), &rising)
                .unwrap()
                .psi_not_monotone
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn jarnik_monotone_in_tau(d in prop::collection::vec(1u64..1000, 2..15), t1 in 0.1f64..3.0, dt in 0.0f64..2.0) {
            let d = ds(&d);
            let weak = jarnik_events(&d, t1).unwrap();
            let strong = jarnik_events(&d, t1 + dt).unwrap();
            prop_assert!(strong.iter().all(|n| weak.contains(n)));
        }

        #[test]
        fn dirichlet_inner_implies_outer(d in prop::collection::vec(1u64..1000, 2..15), c in 0.01f64..0.99) {
            let r = dirichlet_events(&ds(&d), &Psi::Scaled(c)).unwrap();
            prop_assert!(r.points.iter().all(|p| !p.inner || p.outer));
            let r = dirichlet_events(&ds(&d), &Psi::InverseLog(c)).unwrap();
            prop_assert!(r.points.iter().all(|p| !p.inner || p.outer));
        }

        #[test]
        fn samples_are_certified(seed in 0u64..1000, index in 0usize..100) {
            let cfg = TrialConfig::new(1, 20, seed).unwrap();
            let d = sample_uniform_digits(&cfg, index).unwrap();
            prop_assert_eq!(d.len(), 20);
        }
    }
}
