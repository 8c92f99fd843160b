//! Dimension formulas and the measure side: the partial-quotient dimension
//! formula for digit plans, the pressure P(t) = log ζ(t), Bernoulli
//! measures, the D_n(M) cover and a brute-force check of the mass bound
//! q_n^{-2s} <= μ_{s+1/2}(I_n).

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cf::{convergents_of, DigitSequence};
use crate::construct::{DigitPlan, LogSequence};
use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::logscalar::LogScalar;
use crate::weights::WeightVector;

// ---------------------------------------------------------------------------
// Dimension of {s_n <= a_n < 2 s_n}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartialPoint {
    pub n: usize,
    /// S_n / (2 S_n + log s_{n+1}), S_n = Σ_{k<=n} log s_k
    pub value: f64,
    /// 1 / (2 + log s_{n+1} / S_n)
    pub reciprocal_form: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartialDimension {
    pub points: Vec<PartialPoint>,
    /// Minimum over the back half of the computed depths.
    pub liminf_estimate: f64,
    pub window_start: usize,
}

/// Agreement required between the two algebraic forms.
pub const FORM_TOLERANCE: f64 = 1e-9;

pub fn dim_formula_partial(logs: &LogSequence, up_to: usize) -> Result<PartialDimension> {
    if up_to == 0 || up_to + 1 > logs.len() {
        return Err(Error::Input(format!(
            "up_to = {up_to} needs 1 <= up_to <= len - 1 = {}",
            logs.len().saturating_sub(1)
        )));
    }
    let mut points = Vec::with_capacity(up_to);
    let mut total = DoubleDouble::ZERO;
    for n in 1..=up_to {
        total += logs.log(n);
        if total.hi() <= 0.0 {
            continue;
        }
        let next = logs.log(n + 1);
        let value = (total / (total.mul_f64(2.0) + next)).to_f64();
        let reciprocal_form = 1.0 / (2.0 + (next / total).to_f64());
        if (value - reciprocal_form).abs() > FORM_TOLERANCE {
            return Err(Error::Numeric(format!(
                "dimension forms disagree at n={n}: {value} vs {reciprocal_form}"
            )));
        }
        points.push(PartialPoint {
            n,
            value,
            reciprocal_form,
        });
    }
    if points.is_empty() {
        return Err(Error::Input(
            "log sequence has no positive entry up to the requested depth".into(),
        ));
    }
    let first = points[0].n;
    let window_start = first + (up_to - first) / 2;
    let liminf_estimate = points
        .iter()
        .filter(|p| p.n >= window_start)
        .map(|p| p.value)
        .fold(f64::INFINITY, f64::min);
    Ok(PartialDimension {
        points,
        liminf_estimate,
        window_start,
    })
}

// ---------------------------------------------------------------------------
// Pressure and Bernoulli measures

pub const PRESSURE_TOLERANCE: f64 = 1e-10;
pub const PRESSURE_MAX_TERMS: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PressureValue {
    pub t: f64,
    /// Midpoint of the bracket for log ζ(t).
    pub value: f64,
    /// Half-width of the bracket.
    pub error_bound: f64,
    pub lower: f64,
    pub upper: f64,
    /// Number of summed terms K.
    pub terms: u64,
    /// True when the term ceiling was hit before the tolerance.
    pub bracket_only: bool,
    /// Σ_{k<=K} k^{-t}
    #[serde(skip)]
    partial_sum: f64,
}

fn zeta_partial(t: f64, k: u64) -> f64 {
    // Smallest terms first, with compensation.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for i in (1..=k).rev() {
        let y = (i as f64).powf(-t) - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    sum
}

/// Bracket [∫_{K+1}^∞, ∫_K^∞] x^{-t} dx for the tail Σ_{k>K} k^{-t}.
fn tail_bracket(t: f64, k: u64) -> (f64, f64) {
    let lo = ((k + 1) as f64).powf(1.0 - t) / (t - 1.0);
    let hi = (k as f64).powf(1.0 - t) / (t - 1.0);
    (lo, hi)
}

/// P(t) = log Σ_{k>=1} k^{-t}.
pub fn pressure(t: f64) -> Result<PressureValue> {
    if t.is_nan() || t <= 1.0 {
        return Err(Error::Divergence(t));
    }
    if t.is_infinite() {
        return Ok(PressureValue {
            t,
            value: 0.0,
            error_bound: 0.0,
            lower: 0.0,
            upper: 0.0,
            terms: 1,
            bracket_only: false,
            partial_sum: 1.0,
        });
    }
    // Tail width is about K^{-t}; start from the K that makes it ~1e-10.
    let guess = (PRESSURE_TOLERANCE.recip()).powf(1.0 / t).ceil();
    let mut k = (guess as u64).clamp(1, PRESSURE_MAX_TERMS);
    loop {
        let (lo_tail, hi_tail) = tail_bracket(t, k);
        let partial = zeta_partial(t, k);
        let lower = (partial + lo_tail).ln();
        let upper = (partial + hi_tail).ln();
        let width = upper - lower;
        if width <= PRESSURE_TOLERANCE || k >= PRESSURE_MAX_TERMS {
            return Ok(PressureValue {
                t,
                value: 0.5 * (lower + upper),
                error_bound: 0.5 * width,
                lower,
                upper,
                terms: k,
                bracket_only: width > PRESSURE_TOLERANCE,
                partial_sum: partial,
            });
        }
        k = (k * 2).min(PRESSURE_MAX_TERMS);
    }
}

impl PressureValue {
    /// Bracket for Σ_{a>=1} μ_t(I_1(a)) = e^{-P(t)} Σ a^{-t}.
    pub fn depth_one_total(&self) -> (f64, f64) {
        if self.t.is_infinite() {
            return (1.0, 1.0);
        }
        let (lo, hi) = tail_bracket(self.t, self.terms);
        let norm = (-self.value).exp();
        (
            (self.partial_sum + lo) * norm,
            (self.partial_sum + hi) * norm,
        )
    }
}

/// μ_t(I_n(a_1..a_n)) = e^{-n P(t) - t Σ log a_j}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BernoulliMeasure {
    pub pressure: PressureValue,
}

impl BernoulliMeasure {
    pub fn new(t: f64) -> Result<Self> {
        Ok(BernoulliMeasure {
            pressure: pressure(t)?,
        })
    }

    pub fn t(&self) -> f64 {
        self.pressure.t
    }

    pub fn log_mass(&self, digits: &DigitSequence) -> LogScalar {
        let n = digits.len() as f64;
        let sum = digits
            .log_digits()
            .iter()
            .fold(DoubleDouble::ZERO, |acc, d| acc + d.ln());
        LogScalar::from_log(
            -(DoubleDouble::from(self.pressure.value).mul_f64(n) + sum.mul_f64(self.t())),
        )
    }

    /// log μ_t for digits whose logs are already known.
    fn log_mass_from_sum(&self, n: usize, sum_log: DoubleDouble) -> DoubleDouble {
        -(DoubleDouble::from(self.pressure.value).mul_f64(n as f64) + sum_log.mul_f64(self.t()))
    }
}

pub fn log_bernoulli_mass(digits: &DigitSequence, t: f64) -> Result<LogScalar> {
    Ok(BernoulliMeasure::new(t)?.log_mass(digits))
}

// ---------------------------------------------------------------------------
// The cover D_n(M) and the mass bound

/// Log of the smallest M with (s - 1/2) log M / (2 m t_max) >= P(s + 1/2).
pub fn min_mass_threshold(s: f64, w: &WeightVector, m: usize) -> Result<LogScalar> {
    if !(s > 0.5 && s.is_finite()) {
        return Err(Error::Domain(format!("s = {s} must be > 1/2")));
    }
    if m == 0 {
        return Err(Error::Input("m must be >= 1".into()));
    }
    let p = pressure(s + 0.5)?;
    Ok(LogScalar::from_log_f64(
        2.0 * m as f64 * w.max() * p.value / (s - 0.5),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverSpec {
    /// M, held by its log.
    pub m_value: LogScalar,
    pub weights: WeightVector,
    pub depth: usize,
}

impl CoverSpec {
    pub fn new(log_m: f64, weights: WeightVector, depth: usize) -> Result<Self> {
        if !(log_m >= 0.0 && log_m.is_finite()) {
            return Err(Error::Input(format!(
                "log M = {log_m} must be finite and >= 0 (M >= 1)"
            )));
        }
        Ok(CoverSpec {
            m_value: LogScalar::from_log_f64(log_m),
            weights,
            depth,
        })
    }

    pub fn log_m(&self) -> DoubleDouble {
        self.m_value.ln()
    }

    fn slack(&self) -> DoubleDouble {
        DoubleDouble::from(1e-20 * (1.0 + self.log_m().abs().to_f64()))
    }

    /// Membership given the logs of the digits.
    fn admits_logs(&self, logs: &[DoubleDouble]) -> bool {
        let m = self.weights.m();
        let target = self.log_m() - self.slack();
        (0..logs.len() - m).all(|k| {
            let mut acc = DoubleDouble::ZERO;
            for (i, &t) in self.weights.as_slice().iter().enumerate() {
                if t != 0.0 {
                    acc += logs[k + i].mul_f64(t);
                }
            }
            acc >= target
        })
    }
}

/// Σ_i t_i log a_{k+i} >= log M for every window k = 1..=n-m.
pub fn dn_membership(digits: &DigitSequence, spec: &CoverSpec) -> Result<bool> {
    let d = digits.exact_digits()?;
    let m = spec.weights.m();
    if d.len() < m + 1 {
        return Err(Error::Input(format!(
            "need at least m + 1 = {} digits, got {}",
            m + 1,
            d.len()
        )));
    }
    let logs: Vec<DoubleDouble> = d.iter().map(|a| LogScalar::from_biguint(a).ln()).collect();
    Ok(spec.admits_logs(&logs))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Sampler {
    /// Every tuple in [1, cap]^n.
    Exhaustive { cap: u64 },
    /// `count` members of D_n(M) drawn uniformly from [lo, hi]^n by rejection.
    Random {
        count: usize,
        lo: u64,
        hi: u64,
        seed: u64,
    },
}

pub const EXHAUSTIVE_MAX_DEPTH: usize = 6;
pub const EXHAUSTIVE_MAX_CAP: u64 = 200;
/// Rejection attempts per requested random member.
const MAX_ATTEMPTS: usize = 100_000;
const KEPT_FAILURES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassBoundReport {
    pub depth: usize,
    pub s: f64,
    pub log_m: f64,
    pub log_m_threshold: f64,
    /// Tuples examined, members or not.
    pub examined: u64,
    /// Tuples in D_n(M), the ones actually checked.
    pub members: u64,
    pub passed: u64,
    pub failed: u64,
    /// Up to ten failing tuples, in enumeration order.
    pub failures: Vec<Vec<u64>>,
    /// M is below the threshold, so failures are not violations.
    pub below_threshold: bool,
    pub vacuous: bool,
    pub flags: Vec<String>,
}

impl MassBoundReport {
    /// Zero failures on a non-vacuous run with M above the threshold.
    pub fn holds(&self) -> bool {
        !self.below_threshold && !self.vacuous && self.failed == 0
    }
}

#[derive(Default)]
struct Tally {
    examined: u64,
    members: u64,
    passed: u64,
    failures: Vec<Vec<u64>>,
    failed: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.examined += other.examined;
        self.members += other.members;
        self.passed += other.passed;
        self.failed += other.failed;
        self.failures.extend(other.failures);
        self.failures.truncate(KEPT_FAILURES);
        self
    }
}

struct MassCheck<'a> {
    spec: &'a CoverSpec,
    measure: BernoulliMeasure,
    s: f64,
}

impl MassCheck<'_> {
    /// 2s log q_n >= n P(s+1/2) + (s+1/2) Σ log a_j, i.e. q_n^{-2s} <= μ.
    fn check(&self, digits: &[u64], logs: &[DoubleDouble], tally: &mut Tally) {
        tally.examined += 1;
        if !self.spec.admits_logs(logs) {
            return;
        }
        tally.members += 1;
        let log_q = log_denominator(digits);
        let sum = logs.iter().fold(DoubleDouble::ZERO, |a, &b| a + b);
        let log_mu = self.measure.log_mass_from_sum(digits.len(), sum);
        let lhs = -(log_q.mul_f64(2.0 * self.s));
        if lhs <= log_mu {
            tally.passed += 1;
        } else {
            tally.failed += 1;
            if tally.failures.len() < KEPT_FAILURES {
                tally.failures.push(digits.to_vec());
            }
        }
    }
}

/// log q_n from exact integer arithmetic.
fn log_denominator(digits: &[u64]) -> DoubleDouble {
    let (mut q_prev, mut q) = (0u128, 1u128);
    for &a in digits {
        match (a as u128)
            .checked_mul(q)
            .and_then(|x| x.checked_add(q_prev))
        {
            Some(next) => {
                q_prev = q;
                q = next;
            }
            None => {
                let ds = DigitSequence::Exact(digits.iter().map(|&a| BigUint::from(a)).collect());
                let c = convergents_of(&ds).expect("exact digits");
                return LogScalar::from_biguint(c.last().expect("nonempty").q_cur.magnitude()).ln();
            }
        }
    }
    DoubleDouble::from_u128(q).ln()
}

fn log_table(cap: u64) -> Vec<DoubleDouble> {
    (0..=cap)
        .map(|a| {
            if a == 0 {
                DoubleDouble::ZERO
            } else {
                DoubleDouble::from(a).ln()
            }
        })
        .collect()
}

pub fn verify_mass_bound(
    n: usize,
    spec: &CoverSpec,
    s: f64,
    sampler: &Sampler,
) -> Result<MassBoundReport> {
    let m = spec.weights.m();
    if n < m + 1 {
        return Err(Error::Input(format!(
            "depth {n} must be >= m + 1 = {}",
            m + 1
        )));
    }
    let threshold = min_mass_threshold(s, &spec.weights, m.max(1))?.ln_f64();
    let measure = BernoulliMeasure::new(s + 0.5)?;
    let check = MassCheck { spec, measure, s };
    let tally = match *sampler {
        Sampler::Exhaustive { cap } => {
            if n > EXHAUSTIVE_MAX_DEPTH || cap > EXHAUSTIVE_MAX_CAP || cap == 0 {
                return Err(Error::Input(format!(
                    "exhaustive runs need depth <= {EXHAUSTIVE_MAX_DEPTH} and 1 <= cap <= {EXHAUSTIVE_MAX_CAP}"
                )));
            }
            exhaustive(n, cap, &check)
        }
        Sampler::Random {
            count,
            lo,
            hi,
            seed,
        } => {
            if lo == 0 || lo > hi {
                return Err(Error::Input(format!(
                    "digit range [{lo}, {hi}] must satisfy 1 <= lo <= hi"
                )));
            }
            random(n, count, lo, hi, seed, &check)
        }
    };
    let below_threshold = spec.log_m().to_f64() < threshold;
    let vacuous = tally.members == 0;
    let mut flags = Vec::new();
    if below_threshold {
        flags.push("below-threshold".to_string());
    }
    if vacuous {
        flags.push("vacuous".to_string());
    }
    if measure.pressure.bracket_only {
        flags.push("pressure-bracket-only".to_string());
    }
    Ok(MassBoundReport {
        depth: n,
        s,
        log_m: spec.log_m().to_f64(),
        log_m_threshold: threshold,
        examined: tally.examined,
        members: tally.members,
        passed: tally.passed,
        failed: tally.failed,
        failures: tally.failures,
        below_threshold,
        vacuous,
        flags,
    })
}

fn exhaustive(n: usize, cap: u64, check: &MassCheck<'_>) -> Tally {
    let table = log_table(cap);
    // Split on the first digit; results are merged in first-digit order.
    let parts: Vec<Tally> = (1..=cap)
        .into_par_iter()
        .map(|first| {
            let mut tally = Tally::default();
            let mut digits = vec![1u64; n];
            digits[0] = first;
            let mut logs = vec![DoubleDouble::ZERO; n];
            logs[0] = table[first as usize];
            loop {
                for i in 1..n {
                    logs[i] = table[digits[i] as usize];
                }
                check.check(&digits, &logs, &mut tally);
                // Odometer over positions 1..n.
                let mut i = n - 1;
                loop {
                    if i == 0 {
                        return tally;
                    }
                    if digits[i] < cap {
                        digits[i] += 1;
                        break;
                    }
                    digits[i] = 1;
                    i -= 1;
                }
            }
        })
        .collect();
    parts.into_iter().fold(Tally::default(), Tally::merge)
}

fn random(n: usize, count: usize, lo: u64, hi: u64, seed: u64, check: &MassCheck<'_>) -> Tally {
    let parts: Vec<Tally> = (0..count)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let mut tally = Tally::default();
            let mut digits = vec![0u64; n];
            for _ in 0..MAX_ATTEMPTS {
                for d in digits.iter_mut() {
                    *d = rng.gen_range(lo..=hi);
                }
                let logs: Vec<DoubleDouble> =
                    digits.iter().map(|&a| DoubleDouble::from(a).ln()).collect();
                let before = tally.members;
                check.check(&digits, &logs, &mut tally);
                if tally.members > before {
                    break;
                }
            }
            tally
        })
        .collect();
    parts.into_iter().fold(Tally::default(), Tally::merge)
}

// ---------------------------------------------------------------------------
// Critical exponent of the natural cover

/// Exact inner sums are used up to this lower bound.
pub const EXACT_INNER_LIMIT: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthRoot {
    pub n: usize,
    /// Root of the cover sum with q_n replaced by Π a_k.
    pub upper: Option<f64>,
    /// Root once the full q_n distortion is charged against the sum.
    pub lower: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalExponent {
    /// Window minimum of the per-depth roots.
    pub s_star: f64,
    /// Band [band_lower, band_upper] containing the true cover exponent.
    pub band_lower: f64,
    pub band_upper: f64,
    pub window_start: usize,
    pub trace: Vec<DepthRoot>,
}

/// log Σ_{a=L}^{2L-1} a^{-2s}, L = ⌊s_k⌋ given by its log.
fn log_inner_sum(log_lower: DoubleDouble, exact: Option<u64>, s: f64) -> f64 {
    match exact {
        Some(l) if l <= EXACT_INNER_LIMIT => {
            let mut sum = 0.0;
            for a in (l..2 * l).rev() {
                sum += (a as f64).powf(-2.0 * s);
            }
            sum.ln()
        }
        _ => {
            // L^{1-2s} (1 - 2^{1-2s}) / (2s - 1); the last factor is ln 2 at s = 1/2.
            let e = 1.0 - 2.0 * s;
            let shape = if e.abs() < 1e-12 {
                std::f64::consts::LN_2
            } else {
                (1.0 - 2f64.powf(e)) / -e
            };
            e * log_lower.to_f64() + shape.ln()
        }
    }
}

struct CoverSum {
    logs: Vec<DoubleDouble>,
    exact: Vec<Option<u64>>,
}

impl CoverSum {
    /// Σ_{k<=n} log S_k(s) + s log S_{n+1}(1), where the last term accounts
    /// for the span of the level-(n+1) children inside each level-n cylinder.
    fn eval(&self, n: usize, s: f64) -> f64 {
        let mut total = 0.0;
        for k in 0..n {
            total += log_inner_sum(self.logs[k], self.exact[k], s);
        }
        total + s * log_inner_sum(self.logs[n], self.exact[n], 1.0)
    }
}

fn bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Option<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo > 0.0 && fhi < 0.0) {
        return None;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if f(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-14 {
            break;
        }
    }
    Some(0.5 * (a + b))
}

pub const ROOT_BRACKET: (f64, f64) = (0.01, 0.99);

/// Root s* of the level-n cover sum for the plan's Cantor set.
///
/// The cover uses, for each admissible (a_1..a_n), the interval spanned by
/// its admissible children, of length between S_{n+1}(1)/(6 q_n^2) and
/// S_{n+1}(1)/q_n^2. Replacing q_n by Π a_k gives the upper root; charging
/// the worst case 4^n * 6 from Π a_k <= q_n <= 2^n Π a_k gives the lower.
pub fn critical_exponent(plan: &DigitPlan, depth: usize) -> Result<CriticalExponent> {
    if depth < 2 {
        return Err(Error::Input("depth must be >= 2".into()));
    }
    if plan.len() < depth + 1 {
        return Err(Error::Input(format!(
            "plan has {} entries; depth {depth} needs {}",
            plan.len(),
            depth + 1
        )));
    }
    let cover = CoverSum {
        logs: plan.lower_bounds.logs(),
        exact: (1..=plan.len())
            .map(|n| plan.exact_lower_bound(n))
            .collect(),
    };
    let distortion = |n: usize| n as f64 * 4f64.ln() + 6f64.ln();
    let trace: Vec<DepthRoot> = (2..=depth)
        .into_par_iter()
        .map(|n| DepthRoot {
            n,
            upper: bisect(|s| cover.eval(n, s), ROOT_BRACKET.0, ROOT_BRACKET.1),
            lower: bisect(
                |s| cover.eval(n, s) - s * distortion(n),
                ROOT_BRACKET.0,
                ROOT_BRACKET.1,
            ),
        })
        .collect();
    let window_start = 2 + (depth - 2) / 2;
    let window: Vec<&DepthRoot> = trace.iter().filter(|r| r.n >= window_start).collect();
    let uppers: Vec<f64> = window.iter().filter_map(|r| r.upper).collect();
    let lowers: Vec<f64> = window.iter().filter_map(|r| r.lower).collect();
    if uppers.len() != window.len() || lowers.len() != window.len() {
        return Err(Error::Bracket(format!(
            "cover sum has no sign change in ({}, {}) at some depth in {window_start}..={depth}",
            ROOT_BRACKET.0, ROOT_BRACKET.1
        )));
    }
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CriticalExponent {
        s_star: min(&uppers),
        band_lower: min(&lowers),
        band_upper: min(&uppers),
        window_start,
        trace,
    })
}
