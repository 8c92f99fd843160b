//! Sequence generators behind the lower-bound Cantor sets: the liminf
//! construction {L_j} with its normaliser Z, the limsup construction
//! {c_n}, {α_n}, s_n = c_n + α_n, and digit plans [⌊s_n⌋, 2⌊s_n⌋).
//!
//! Every sequence is held in log space; with φ(n) of size 2^60 the values
//! themselves are e^{2^60}.

use serde::Serialize;

use crate::cf::DigitSequence;
use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::logscalar::LogScalar;
use crate::rate::{RateFunction, RateKind};
use crate::weights::WeightVector;

pub const DEFAULT_SCAN_BUDGET: usize = 200;
pub const DEFAULT_EPSILON: f64 = 0.1;
/// Absolute log-space tolerance for equality witnesses.
pub const WITNESS_TOLERANCE: f64 = 1e-9;

/// Below this log magnitude floors are taken exactly.
const EXACT_FLOOR_LOG: f64 = 64.0 * std::f64::consts::LN_2;

pub const FLAG_WINDOW_ESTIMATE: &str = "window-estimate";
pub const FLAG_MONOTONE_TAIL: &str = "monotone-tail-assumed";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub rate: String,
    pub epsilon: Option<f64>,
    pub exponent: Option<f64>,
    pub horizon: usize,
}

impl Provenance {
    fn new(
        phi: &RateFunction,
        epsilon: Option<f64>,
        exponent: Option<f64>,
        horizon: usize,
    ) -> Self {
        Provenance {
            rate: phi.to_string(),
            epsilon,
            exponent,
            horizon,
        }
    }

    fn custom(horizon: usize) -> Self {
        Provenance {
            rate: "custom".into(),
            epsilon: None,
            exponent: None,
            horizon,
        }
    }
}

/// A 1-indexed sequence of reals >= 1 held by their logs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogSequence {
    pub entries: Vec<LogScalar>,
    pub provenance: Provenance,
    pub flags: Vec<String>,
}

impl LogSequence {
    pub fn new(entries: Vec<LogScalar>, provenance: Provenance) -> Result<Self> {
        if let Some(i) = entries
            .iter()
            .position(|e| !e.ln().is_finite() || e.ln().hi() < 0.0)
        {
            return Err(Error::Input(format!(
                "log sequence entry {} is not finite and >= 0",
                i + 1
            )));
        }
        Ok(LogSequence {
            entries,
            provenance,
            flags: Vec::new(),
        })
    }

    /// Builds a sequence directly from log values, e.g. log s_n = 2^n.
    pub fn from_logs(logs: &[DoubleDouble]) -> Result<Self> {
        Self::new(
            logs.iter().map(|&l| LogScalar::from_log(l)).collect(),
            Provenance::custom(logs.len()),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The log of entry n (1-based).
    pub fn log(&self, n: usize) -> DoubleDouble {
        self.entries[n - 1].ln()
    }

    pub fn logs(&self) -> Vec<DoubleDouble> {
        self.entries.iter().map(LogScalar::ln).collect()
    }

    fn flag(&mut self, f: &str) {
        if !self.flags.iter().any(|x| x == f) {
            self.flags.push(f.to_string());
        }
    }

    /// One `n,log` line per entry, logs to 18 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, e) in self.entries.iter().enumerate() {
            s.push_str(&format!("{},{}\n", i + 1, e.ln().to_sci_string(18)));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut logs = Vec::new();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (n, v) = line.split_once(',').ok_or_else(|| {
                Error::Parse(format!("log sequence line '{line}' is not 'n,log'"))
            })?;
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad index '{n}'")))?;
            if n != logs.len() + 1 {
                return Err(Error::Parse(format!("log sequence index {n} out of order")));
            }
            logs.push(DoubleDouble::parse_decimal(v.trim())?);
        }
        Self::from_logs(&logs)
    }
}

// ---------------------------------------------------------------------------
// Liminf construction

/// {L_j} together with where each supremum was attained.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LConstruction {
    pub logs: LogSequence,
    /// k attaining sup_k c_{j,k}, per j.
    pub sup_index: Vec<usize>,
    /// B + ε
    pub growth_bound: f64,
}

/// Smallest k0 with φ(k+1)/φ(k) <= c for every k >= k0, where the family
/// makes that decidable.
fn ratio_tail_start(phi: &RateFunction, c: f64) -> Option<usize> {
    match *phi.kind() {
        RateKind::Geometric { beta } => (beta <= c).then_some(1),
        RateKind::Polynomial { gamma } => {
            if c <= 1.0 {
                return None;
            }
            // (1 + 1/k)^γ decreases in k.
            let ratio = |k: usize| gamma * (1.0 / k as f64).ln_1p();
            let target = c.ln();
            let mut k = ((1.0 / (c.powf(1.0 / gamma) - 1.0)).ceil() as usize).max(1);
            while k > 1 && ratio(k - 1) <= target {
                k -= 1;
            }
            while ratio(k) > target {
                k += 1;
            }
            Some(k)
        }
        // e^{(k+1)^α - k^α} grows without bound; tables end at their horizon.
        RateKind::SuperGeometric { .. } | RateKind::Table(_) => None,
    }
}

/// Smallest k0 with φ(k) <= c^k for every k >= k0.
fn power_tail_start(phi: &RateFunction, c: f64) -> Option<usize> {
    match *phi.kind() {
        RateKind::Geometric { beta } => (beta <= c).then_some(1),
        RateKind::Polynomial { gamma } => {
            // Past the ratio threshold k^γ / c^k is decreasing.
            let mut k = ratio_tail_start(phi, c)?;
            while gamma * (k as f64).ln() > k as f64 * c.ln() {
                k += 1;
            }
            Some(k)
        }
        RateKind::SuperGeometric { .. } | RateKind::Table(_) => None,
    }
}

/// log L_j for j = 1..=horizon, with
/// log c_{j,k} = φ(k) for k <= j and φ(k)(B+ε)^{j-k} for k > j.
///
/// The supremum over k > j is resolved by scanning up to `scan_budget`
/// indices past j. The scan stops once the remaining terms are provably
/// below the running maximum, either because the term ratio
/// φ(k+1)/(φ(k)(B+ε)) stays <= 1 from k on, or because φ(k) <= (B+ε/2)^k
/// holds for the whole tail and (B+ε)^j ((B+ε/2)/(B+ε))^k is small enough.
pub fn build_l_sequence(
    phi: &RateFunction,
    upper_rate: f64,
    epsilon: f64,
    horizon: usize,
    scan_budget: usize,
) -> Result<LConstruction> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Precondition(format!(
            "epsilon = {epsilon} must be > 0"
        )));
    }
    if !(upper_rate.is_finite() && upper_rate >= 1.0) {
        return Err(Error::Precondition(format!(
            "B estimate {upper_rate} must be finite and >= 1"
        )));
    }
    if horizon == 0 {
        return Err(Error::Input("horizon must be >= 1".into()));
    }
    if phi.is_table() && horizon > phi.horizon() {
        return Err(Error::Range {
            index: horizon,
            horizon: phi.horizon(),
        });
    }
    let growth = upper_rate + epsilon;
    let log_growth = DoubleDouble::from(growth).ln();
    let half = upper_rate + epsilon / 2.0;
    let decay = (DoubleDouble::from(half) / DoubleDouble::from(growth)).ln();
    let ratio_start = ratio_tail_start(phi, growth);
    let power_start = power_tail_start(phi, half);
    let data_end = if phi.is_table() {
        Some(phi.horizon())
    } else {
        None
    };

    // log φ(k), cached as the scan walks forward.
    let mut log_phi: Vec<DoubleDouble> = Vec::new();
    let mut log_phi_at = |k: usize| -> Result<DoubleDouble> {
        while log_phi.len() < k {
            log_phi.push(phi.log_value(log_phi.len() + 1)?);
        }
        Ok(log_phi[k - 1])
    };

    let mut logs = Vec::with_capacity(horizon);
    let mut sup_index = Vec::with_capacity(horizon);
    let mut prefix_max = LogScalar::ZERO; // max_{k<=j} φ(k)
    let mut prefix_arg = 0;
    let mut truncated = false;
    for j in 1..=horizon {
        let here = LogScalar::from_log(log_phi_at(j)?);
        if here > prefix_max || prefix_arg == 0 {
            prefix_max = here;
            prefix_arg = j;
        }
        let mut best = prefix_max;
        let mut arg = prefix_arg;
        let mut certified = false;
        let mut last = LogScalar::ZERO;
        let mut scanned = 0;
        let last_k = match data_end {
            Some(end) => end.min(j + scan_budget),
            None => j + scan_budget,
        };
        for k in j + 1..=last_k {
            scanned += 1;
            // log of φ(k)(B+ε)^{j-k}
            let term = LogScalar::from_log(log_phi_at(k)? - log_growth * DoubleDouble::from(k - j));
            last = term;
            if term > best {
                best = term;
                arg = k;
            }
            let by_ratio = ratio_start.is_some_and(|k0| k >= k0) && term <= best;
            let by_power = power_start.is_some_and(|k0| k + 1 >= k0) && {
                // (B+ε)^j ρ^{k+1} bounds every later term.
                let bound = log_growth * DoubleDouble::from(j) + decay * DoubleDouble::from(k + 1);
                LogScalar::from_log(bound) <= best
            };
            if by_ratio || by_power {
                certified = true;
                break;
            }
        }
        if !certified {
            if data_end.is_some() {
                truncated = true;
            } else {
                return Err(Error::UnresolvedSup {
                    index: j,
                    scanned,
                    last_term: last.to_f64(),
                    running_max: best.to_f64(),
                });
            }
        }
        // best carries log log L_j; the sequence stores log L_j.
        let log_l = best.value();
        if !log_l.is_finite() {
            return Err(Error::Numeric(format!("log L_{j} overflows")));
        }
        logs.push(LogScalar::from_log(log_l));
        sup_index.push(arg);
    }
    let mut seq = LogSequence::new(
        logs,
        Provenance::new(phi, Some(epsilon), Some(upper_rate), horizon),
    )?;
    if phi.is_table() {
        seq.flag(FLAG_WINDOW_ESTIMATE);
    }
    if truncated {
        seq.flag("sup-truncated-at-table-end");
    }
    Ok(LConstruction {
        logs: seq,
        sup_index,
        growth_bound: growth,
    })
}

/// Index-wise outcome of the structural checks on {L_j}.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LChainReport {
    /// L_j >= e^{φ(j)}
    pub dominates_rate: bool,
    /// L_j <= L_{j+1} <= L_j^{B+ε}
    pub chain: bool,
    /// log L_{n+1} - log L_1 <= (B+ε-1) Σ_{j<=n} log L_j
    pub telescoped: bool,
    /// min of log L_n/φ(n) over the back half of the horizon.
    pub window_liminf: f64,
    pub first_failure: Option<usize>,
}

pub fn check_l_chain(l: &LConstruction, phi: &RateFunction) -> Result<LChainReport> {
    let n = l.logs.len();
    let logs = l.logs.logs();
    let g = DoubleDouble::from(l.growth_bound);
    let slack = |x: DoubleDouble| DoubleDouble::from(1e-25 * x.abs().to_f64().max(1.0));
    let mut report = LChainReport {
        dominates_rate: true,
        chain: true,
        telescoped: true,
        window_liminf: f64::INFINITY,
        first_failure: None,
    };
    let fail = |r: &mut LChainReport, j: usize| {
        if r.first_failure.is_none() {
            r.first_failure = Some(j);
        }
    };
    let mut prefix_sum = DoubleDouble::ZERO;
    for j in 1..=n {
        let phi_j = phi.log_value(j)?.exp();
        if logs[j - 1] + slack(phi_j) < phi_j {
            report.dominates_rate = false;
            fail(&mut report, j);
        }
        prefix_sum += logs[j - 1];
        if j < n {
            let (a, b) = (logs[j - 1], logs[j]);
            if b + slack(b) < a || b > g * a + slack(b) {
                report.chain = false;
                fail(&mut report, j);
            }
            let lhs = b - logs[0];
            let rhs = (g - DoubleDouble::ONE) * prefix_sum;
            if lhs > rhs + slack(lhs) {
                report.telescoped = false;
                fail(&mut report, j);
            }
        }
        if j >= n.div_ceil(2) {
            report.window_liminf = report.window_liminf.min((logs[j - 1] / phi_j).to_f64());
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZEstimate {
    pub z: f64,
    pub window_start: usize,
    pub window_end: usize,
    /// Σ t_i log L_{n+i} / φ(n), for n = 1..=len-m.
    pub ratios: Vec<f64>,
    /// t_k for the first nonzero weight.
    pub lower_bound: f64,
    /// Σ t_i (B+ε)^i, the bound in the limit.
    pub asymptotic_upper_bound: f64,
    /// Σ t_i (B+ε)^i times the window minimum of log L_n/φ(n); rigorous at
    /// finite horizon.
    pub window_upper_bound: f64,
    pub flags: Vec<String>,
}

/// Window-liminf estimate of Z = liminf Σ t_i log L_{n+i} / φ(n), checked
/// against t_k <= Z <= Σ t_i (B+ε)^i.
pub fn compute_z(l: &LConstruction, w: &WeightVector, phi: &RateFunction) -> Result<ZEstimate> {
    let m = w.m();
    let len = l.logs.len();
    if len < m + 2 {
        return Err(Error::Precondition(format!(
            "L has {len} entries; need at least m + 2 = {}",
            m + 2
        )));
    }
    let last = len - m;
    let logs = l.logs.logs();
    let mut ratios = Vec::with_capacity(last);
    let mut self_ratio = Vec::with_capacity(last);
    for n in 1..=last {
        let phi_n = phi.log_value(n)?.exp();
        let mut acc = DoubleDouble::ZERO;
        for i in 0..=m {
            acc += logs[n + i - 1].mul_f64(w.get(i));
        }
        ratios.push((acc / phi_n).to_f64());
        self_ratio.push((logs[n - 1] / phi_n).to_f64());
    }
    let window_start = (last / 2).max(1);
    let z = ratios[window_start - 1..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let log_min = self_ratio[window_start - 1..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let lower_bound = w.get(w.first_nonzero());
    let asymptotic: f64 = (0..=m)
        .map(|i| w.get(i) * l.growth_bound.powi(i as i32))
        .sum();
    let window_upper = asymptotic * log_min;
    let tol = 1e-12 * z.abs().max(1.0);
    if z + tol < lower_bound || z > window_upper + tol {
        return Err(Error::Inconsistent(format!(
            "Z estimate {z} outside [{lower_bound}, {window_upper}]"
        )));
    }
    let mut flags = l.logs.flags.clone();
    if z > asymptotic + tol {
        flags.push("z-above-asymptotic-bound".into());
    }
    Ok(ZEstimate {
        z,
        window_start,
        window_end: last,
        ratios,
        lower_bound,
        asymptotic_upper_bound: asymptotic,
        window_upper_bound: window_upper,
        flags,
    })
}

// ---------------------------------------------------------------------------
// Digit plans

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PlanSource {
    LiminfConstruction,
    LimsupConstruction,
    Custom,
}

/// Admissible ranges [⌊s_n⌋, 2⌊s_n⌋) for n = 1..=len.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DigitPlan {
    /// log ⌊s_n⌋
    pub lower_bounds: LogSequence,
    pub multiplier: u32,
    pub source: PlanSource,
    /// Largest relative error from skipping a floor, e^{-log s_n}.
    pub floor_error_bound: f64,
    /// Z for liminf plans, ε for limsup plans, if any.
    pub parameter: Option<f64>,
}

/// log ⌊e^l⌋, with the relative error bound when the floor is skipped.
fn log_floor(l: DoubleDouble) -> (DoubleDouble, f64) {
    if l.to_f64() <= EXACT_FLOOR_LOG {
        let v = l.exp().floor();
        (v.ln().max_zero(), 0.0)
    } else {
        (l, (-l.to_f64()).exp())
    }
}

trait MaxZero {
    fn max_zero(self) -> Self;
}

impl MaxZero for DoubleDouble {
    fn max_zero(self) -> Self {
        if self.hi() < 0.0 {
            DoubleDouble::ZERO
        } else {
            self
        }
    }
}

impl DigitPlan {
    /// A plan from log s_n values; floors are applied here.
    pub fn from_log_values(
        logs: &[DoubleDouble],
        source: PlanSource,
        provenance: Provenance,
    ) -> Result<Self> {
        let mut worst: f64 = 0.0;
        let mut out = Vec::with_capacity(logs.len());
        for &l in logs {
            if !(l.is_finite() && l.hi() >= 0.0) {
                return Err(Error::Input("plan entries need log s_n >= 0".into()));
            }
            let (f, err) = log_floor(l);
            worst = worst.max(err);
            out.push(LogScalar::from_log(f));
        }
        Ok(DigitPlan {
            lower_bounds: LogSequence::new(out, provenance)?,
            multiplier: 2,
            source,
            floor_error_bound: worst,
            parameter: None,
        })
    }

    pub fn custom(logs: &[DoubleDouble]) -> Result<Self> {
        Self::from_log_values(logs, PlanSource::Custom, Provenance::custom(logs.len()))
    }

    pub fn len(&self) -> usize {
        self.lower_bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower_bounds.is_empty()
    }

    /// ⌊s_n⌋ as an integer when it is small enough to recover exactly.
    pub fn exact_lower_bound(&self, n: usize) -> Option<u64> {
        let l = self.lower_bounds.log(n);
        if l.to_f64() > 40.0 {
            return None;
        }
        let v = l.exp().to_f64().round();
        Some(v as u64)
    }

    /// The lower-corner point a_n = ⌊s_n⌋, carried in log space.
    pub fn representative_digits(&self) -> DigitSequence {
        DigitSequence::LogSpace(self.lower_bounds.entries.clone())
    }

    /// The lower-corner point as exact digits, if every bound is small.
    pub fn representative_exact(&self) -> Option<DigitSequence> {
        let digits: Option<Vec<u64>> = (1..=self.len())
            .map(|n| self.exact_lower_bound(n))
            .collect();
        DigitSequence::from_u64s(&digits?).ok()
    }
}

/// log s_n = log ⌊L_n^{1/Z}⌋
pub fn liminf_digit_plan(l: &LogSequence, z: f64) -> Result<DigitPlan> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Precondition(format!("Z = {z} must be > 0")));
    }
    let logs: Vec<DoubleDouble> = l.logs().into_iter().map(|x| x.div_f64(z)).collect();
    let mut plan =
        DigitPlan::from_log_values(&logs, PlanSource::LiminfConstruction, l.provenance.clone())?;
    plan.lower_bounds.flags = l.flags.clone();
    plan.parameter = Some(z);
    Ok(plan)
}

// ---------------------------------------------------------------------------
// Limsup construction

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CConstruction {
    /// log c_n
    pub logs: LogSequence,
    /// Indices n with Σ t_i log c_{n+i} = φ(n) within the witness tolerance.
    pub witnesses: Vec<usize>,
    /// log c_{k} / Σ_{j<k} log c_j for k = m+2..=horizon (first entry is k = m+2).
    pub growth_ratios: Vec<f64>,
    /// b + ε - 1
    pub growth_cap: f64,
}

impl CConstruction {
    /// Window maximum of the growth ratios over the back half.
    pub fn window_growth_ratio(&self) -> f64 {
        let r = &self.growth_ratios;
        r[r.len() / 2..]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// log c_n for n = 1..=horizon:
/// c_1 = ... = c_m = 1, c_{m+1}^{t_m} = e^{Φ(1)}, and for n >= 2
/// c_{n+m}^{t_m} = min{ e^{Φ(n)} / Π_{i<m} c_{n+i}^{t_i}, (c_1 ⋯ c_{n+m-1})^{t_m(b+ε-1)} }.
pub fn build_c_sequence(
    phi: &RateFunction,
    w: &WeightVector,
    lower_rate: f64,
    epsilon: f64,
    horizon: usize,
) -> Result<CConstruction> {
    if !w.nondecreasing_positive() {
        return Err(Error::Precondition(format!(
            "weights ({w}) must satisfy 0 < t_0 <= t_1 <= ... <= t_m"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Precondition(format!(
            "epsilon = {epsilon} must be > 0"
        )));
    }
    if !(lower_rate.is_finite() && lower_rate >= 1.0) {
        return Err(Error::Precondition(format!(
            "b estimate {lower_rate} must be finite and >= 1"
        )));
    }
    let m = w.m();
    if horizon < m + 2 {
        return Err(Error::Input(format!(
            "horizon {horizon} must be >= m + 2 = {}",
            m + 2
        )));
    }
    if phi.is_table() && horizon > phi.horizon() {
        return Err(Error::Range {
            index: horizon,
            horizon: phi.horizon(),
        });
    }
    let suffix = phi.suffix_min_table_to(horizon)?;
    let big_phi = |n: usize| -> Result<DoubleDouble> {
        let v = suffix[n - 1].value();
        if !v.is_finite() {
            return Err(Error::Numeric(format!(
                "Phi({n}) overflows; log c_n is not representable"
            )));
        }
        Ok(v)
    };
    let t_m = DoubleDouble::from(w.get(m));
    let cap = lower_rate + epsilon - 1.0;
    let mut l = vec![DoubleDouble::ZERO; horizon];
    l[m] = big_phi(1)? / t_m;
    let mut total: DoubleDouble = l[..=m].iter().fold(DoubleDouble::ZERO, |a, &b| a + b);
    for n in 2..=horizon - m {
        let mut window = DoubleDouble::ZERO;
        for i in 0..m {
            window += l[n + i - 1].mul_f64(w.get(i));
        }
        let fit = (big_phi(n)? - window) / t_m;
        let grow = total.mul_f64(cap);
        let next = if fit < grow { fit } else { grow };
        if next.hi() < -1e-20 * window.abs().to_f64().max(1.0) {
            return Err(Error::Inconsistent(format!(
                "log c_{} = {} is negative",
                n + m,
                next.to_f64()
            )));
        }
        l[n + m - 1] = next.max_zero();
        total += l[n + m - 1];
    }

    let mut witnesses = Vec::new();
    for n in 1..=horizon - m {
        let mut acc = DoubleDouble::ZERO;
        for i in 0..=m {
            acc += l[n + i - 1].mul_f64(w.get(i));
        }
        let target = phi.log_value(n)?.exp();
        if (acc - target).abs().to_f64() <= WITNESS_TOLERANCE {
            witnesses.push(n);
        }
    }
    let mut growth_ratios = Vec::new();
    let mut prefix = DoubleDouble::ZERO;
    for k in 1..=horizon {
        if k >= m + 2 {
            growth_ratios.push(if prefix.hi() > 0.0 {
                (l[k - 1] / prefix).to_f64()
            } else {
                0.0
            });
        }
        prefix += l[k - 1];
    }
    let mut seq = LogSequence::new(
        l.into_iter().map(LogScalar::from_log).collect(),
        Provenance::new(phi, Some(epsilon), Some(lower_rate), horizon),
    )?;
    if !phi.monotone_tail_assumed() {
        seq.flag(FLAG_WINDOW_ESTIMATE);
    }
    Ok(CConstruction {
        logs: seq,
        witnesses,
        growth_ratios,
        growth_cap: cap,
    })
}

/// α_n = k + 1 on n_k <= n < n_{k+1} (α_n = 2 before n_1), where n_k is the
/// first n with φ(j)/j >= k^2 for every j in [n, horizon].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaSequence {
    /// log α_n
    pub logs: LogSequence,
    /// α_n where it fits in a u64.
    pub values: Vec<Option<u64>>,
    /// log of min_{j in [n, horizon]} φ(j)/j
    #[serde(skip)]
    suffix_log_ratio: Vec<DoubleDouble>,
}

impl AlphaSequence {
    /// n_k, or `None` if no index within the horizon qualifies.
    pub fn threshold(&self, k: u64) -> Option<usize> {
        if k == 0 {
            return Some(1);
        }
        let need = DoubleDouble::from(k).ln().mul_f64(2.0);
        // suffix minima are nondecreasing; take the first index meeting k^2.
        let idx = self.suffix_log_ratio.partition_point(|&r| r < need);
        (idx < self.suffix_log_ratio.len()).then_some(idx + 1)
    }

    /// Largest k with n_k inside the horizon.
    pub fn max_level(&self) -> u64 {
        match self.values.last() {
            Some(Some(v)) => v - 1,
            _ => u64::MAX,
        }
    }
}

pub fn build_alpha_sequence(phi: &RateFunction, horizon: usize) -> Result<AlphaSequence> {
    if horizon == 0 {
        return Err(Error::Input("horizon must be >= 1".into()));
    }
    if phi.is_table() && horizon > phi.horizon() {
        return Err(Error::Range {
            index: horizon,
            horizon: phi.horizon(),
        });
    }
    // log φ(j)/j, with exact values where φ(j) is representable so that
    // ties such as 2^4/4 = 2^2 resolve correctly.
    let mut ratio = Vec::with_capacity(horizon);
    let mut exact: Vec<Option<DoubleDouble>> = Vec::with_capacity(horizon);
    for j in 1..=horizon {
        let lp = phi.log_value(j)?;
        ratio.push(lp - DoubleDouble::from(j).ln());
        exact.push(phi.value(j).ok().map(|v| v / DoubleDouble::from(j)));
    }
    let mut suffix = ratio.clone();
    let mut suffix_exact = exact.clone();
    for i in (0..horizon.saturating_sub(1)).rev() {
        if suffix[i + 1] < suffix[i] {
            suffix[i] = suffix[i + 1];
            suffix_exact[i] = suffix_exact[i + 1];
        }
    }
    let mut logs = Vec::with_capacity(horizon);
    let mut values = Vec::with_capacity(horizon);
    for n in 0..horizon {
        // k = ⌊sqrt(Ψ)⌋ for Ψ = min_{j>=n} φ(j)/j; α = max(2, k + 1).
        let level = match suffix_exact[n].filter(|v| v.to_f64() < 1e30) {
            Some(psi) => {
                let mut k = psi.to_f64().sqrt().floor() as u64;
                let sq = |k: u64| DoubleDouble::from(k) * DoubleDouble::from(k);
                while k > 0 && sq(k) > psi {
                    k -= 1;
                }
                while sq(k + 1) <= psi {
                    k += 1;
                }
                Some(k)
            }
            None => None,
        };
        match level {
            Some(k) => {
                let a = (k + 1).max(2);
                values.push(Some(a));
                logs.push(LogScalar::from_u64(a));
            }
            None => {
                // Far past 2^64; the floor is irrelevant at this scale.
                values.push(None);
                logs.push(LogScalar::from_log(suffix[n].mul_f64(0.5)));
            }
        }
    }
    let mut seq = LogSequence::new(logs, Provenance::new(phi, None, None, horizon))?;
    if !phi.monotone_tail_assumed() {
        seq.flag(FLAG_WINDOW_ESTIMATE);
    }
    Ok(AlphaSequence {
        logs: seq,
        values,
        suffix_log_ratio: suffix,
    })
}

/// (Σ t_i log α_{n+i}) / φ(n) for n = 1..=len-m.
pub fn alpha_weight_ratios(
    alpha: &AlphaSequence,
    phi: &RateFunction,
    w: &WeightVector,
) -> Result<Vec<f64>> {
    let m = w.m();
    let len = alpha.logs.len();
    let mut out = Vec::new();
    for n in 1..=len.saturating_sub(m) {
        let mut acc = DoubleDouble::ZERO;
        for i in 0..=m {
            acc += alpha.logs.log(n + i).mul_f64(w.get(i));
        }
        out.push((acc / phi.log_value(n)?.exp()).to_f64());
    }
    Ok(out)
}

/// log s_n = log(c_n + α_n), floored into a digit plan.
pub fn limsup_digit_plan(c: &LogSequence, alpha: &LogSequence) -> Result<DigitPlan> {
    if c.len() != alpha.len() {
        return Err(Error::Input(format!(
            "c has {} entries but alpha has {}",
            c.len(),
            alpha.len()
        )));
    }
    let mut logs = Vec::with_capacity(c.len());
    for (cn, an) in c.entries.iter().zip(&alpha.entries) {
        let s = cn.add(an);
        let upper = cn.ln() + an.ln().mul_f64(2.0);
        if s.ln() < cn.ln() || s.ln() > upper {
            return Err(Error::Inconsistent(format!(
                "log s_n = {} escapes [log c_n, log c_n + 2 log alpha_n]",
                s.ln_f64()
            )));
        }
        logs.push(s.ln());
    }
    let mut plan =
        DigitPlan::from_log_values(&logs, PlanSource::LimsupConstruction, c.provenance.clone())?;
    plan.lower_bounds.flags = c.flags.clone();
    plan.parameter = c.provenance.epsilon;
    Ok(plan)
}

// ---------------------------------------------------------------------------
// Membership diagnostics

pub enum MembershipInput<'a> {
    Plan(&'a DigitPlan),
    Digits(&'a DigitSequence),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    /// r_n = Σ t_i log a_{n+i} / φ(n) for n = 1..=len-m.
    pub ratios: Vec<f64>,
    /// Max and min of r_n over the back half of the indices.
    pub tail_max: f64,
    pub tail_min: f64,
    pub tail_start: usize,
    pub flags: Vec<String>,
}

pub fn membership_ratios(
    input: MembershipInput<'_>,
    phi: &RateFunction,
    w: &WeightVector,
) -> Result<MembershipReport> {
    let (logs, flags) = match input {
        MembershipInput::Plan(p) => (p.lower_bounds.logs(), p.lower_bounds.flags.clone()),
        MembershipInput::Digits(d) => (
            d.log_digits().iter().map(LogScalar::ln).collect(),
            Vec::new(),
        ),
    };
    let m = w.m();
    if logs.len() < m + 2 {
        return Err(Error::Input(format!(
            "need at least m + 2 = {} digits, got {}",
            m + 2,
            logs.len()
        )));
    }
    let last = logs.len() - m;
    let mut ratios = Vec::with_capacity(last);
    for n in 1..=last {
        let mut acc = DoubleDouble::ZERO;
        for i in 0..=m {
            acc += logs[n + i - 1].mul_f64(w.get(i));
        }
        ratios.push((acc / phi.log_value(n)?.exp()).to_f64());
    }
    let tail_start = last.div_ceil(2).max(1);
    let tail = &ratios[tail_start - 1..];
    Ok(MembershipReport {
        tail_max: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        tail_min: tail.iter().copied().fold(f64::INFINITY, f64::min),
        ratios,
        tail_start,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geom(beta: f64, h: usize) -> RateFunction {
        RateFunction::geometric(beta, h).unwrap()
    }

    fn w(t: &[f64]) -> WeightVector {
        WeightVector::new(t.to_vec()).unwrap()
    }

    #[test]
    fn l_sequence_for_doubling_rate() {
        let phi = geom(2.0, 30);
        let l = build_l_sequence(&phi, 2.0, 0.5, 30, DEFAULT_SCAN_BUDGET).unwrap();
        for j in 1..=30 {
            assert_eq!(l.logs.log(j).to_f64(), 2f64.powi(j as i32));
        }
        // Direct supremum over k <= j + 50 as an oracle.
        for j in 1..=30usize {
            let mut best = f64::NEG_INFINITY;
            for k in 1..=j + 50 {
                let v = if k <= j {
                    2f64.powi(k as i32)
                } else {
                    2f64.powi(k as i32) * 2.5f64.powi(j as i32 - k as i32)
                };
                best = best.max(v);
            }
            assert_eq!(best, l.logs.log(j).to_f64());
        }
    }

    #[test]
    fn l_chain_holds_for_presets() {
        for (phi, b) in [
            (geom(2.0, 60), 2.0),
            (geom(3.0, 60), 3.0),
            (RateFunction::polynomial(2.0, 60).unwrap(), 1.0),
        ] {
            for eps in [0.1, 0.5] {
                let l = build_l_sequence(&phi, b, eps, 60, DEFAULT_SCAN_BUDGET).unwrap();
                let r = check_l_chain(&l, &phi).unwrap();
                assert!(
                    r.dominates_rate && r.chain && r.telescoped,
                    "{phi} eps={eps}: {r:?}"
                );
            }
        }
    }

    #[test]
    fn polynomial_l_peaks_past_j() {
        let phi = RateFunction::polynomial(2.0, 10).unwrap();
        let l = build_l_sequence(&phi, 1.0, 0.1, 10, DEFAULT_SCAN_BUDGET).unwrap();
        // k^2 1.1^{1-k} peaks near k = 2/ln 1.1.
        assert!(l.sup_index[0] > 1);
        assert!(l.logs.log(1).to_f64() > 1.0);
    }

    #[test]
    fn unresolved_sup_is_reported() {
        let phi = geom(3.0, 10);
        let e = build_l_sequence(&phi, 2.0, 0.1, 10, 50).unwrap_err();
        assert!(matches!(
            e,
            Error::UnresolvedSup {
                index: 1,
                scanned: 50,
                ..
            }
        ));
        assert!(build_l_sequence(
            &RateFunction::super_geometric(2.0, 5).unwrap(),
            3.0,
            0.1,
            5,
            50
        )
        .is_err());
        assert!(build_l_sequence(&phi, 3.0, 0.0, 10, 50).is_err());
        assert!(build_l_sequence(&phi, f64::INFINITY, 0.1, 10, 50).is_err());
    }

    #[test]
    fn z_examples() {
        let phi = geom(2.0, 30);
        let l = build_l_sequence(&phi, 2.0, 0.5, 30, DEFAULT_SCAN_BUDGET).unwrap();
        let z = compute_z(&l, &w(&[1.0]), &phi).unwrap();
        assert_eq!(z.z, 1.0);
        let z = compute_z(&l, &w(&[1.0, 1.0]), &phi).unwrap();
        assert!(z.z >= 1.0 && z.z <= 3.5);
        assert_eq!(z.z, 3.0);
        let z = compute_z(&l, &w(&[0.0, 0.0, 2.0]), &phi).unwrap();
        assert!(z.z >= 2.0);
    }

    #[test]
    fn liminf_plan_examples() {
        let logs: Vec<DoubleDouble> = (1..=20).map(|n| DoubleDouble::from(2f64.powi(n))).collect();
        let seq = LogSequence::from_logs(&logs).unwrap();
        let p1 = liminf_digit_plan(&seq, 1.0).unwrap();
        let p2 = liminf_digit_plan(&seq, 2.0).unwrap();
        assert_eq!(p1.lower_bounds.log(20).to_f64(), 2f64.powi(20));
        assert_eq!(p2.lower_bounds.log(20).to_f64(), 2f64.powi(19));
        for n in 1..=20 {
            assert!(p2.lower_bounds.log(n) <= p1.lower_bounds.log(n));
        }
        // log ⌊e^2⌋ = log 7
        assert!((p1.lower_bounds.log(1).to_f64() - 7f64.ln()).abs() < 1e-15);
        assert!(p1.floor_error_bound > 0.0 && p1.floor_error_bound < 1e-20);
        assert!(liminf_digit_plan(&seq, 0.0).is_err());
    }

    #[test]
    fn c_sequence_example() {
        let phi = geom(2.0, 6);
        let c = build_c_sequence(&phi, &w(&[1.0, 1.0]), 2.0, 0.5, 6).unwrap();
        let logs: Vec<f64> = c.logs.logs().iter().map(|x| x.to_f64()).collect();
        assert_eq!(logs, vec![0.0, 2.0, 2.0, 6.0, 10.0, 22.0]);
        assert!(c.witnesses.contains(&4) && c.witnesses.contains(&5));
        assert!(c.growth_ratios.iter().all(|&r| r <= 1.5));
    }

    #[test]
    fn c_sequence_rejects_decreasing_weights() {
        let phi = geom(2.0, 10);
        assert!(matches!(
            build_c_sequence(&phi, &w(&[2.0, 1.0]), 2.0, 0.5, 10),
            Err(Error::Precondition(_))
        ));
        assert!(build_c_sequence(&phi, &w(&[0.0, 1.0]), 2.0, 0.5, 10).is_err());
    }

    #[test]
    fn alpha_example() {
        let a = build_alpha_sequence(&geom(2.0, 30), 30).unwrap();
        assert_eq!(a.threshold(1), Some(1));
        assert_eq!(a.threshold(2), Some(4));
        assert_eq!(a.threshold(3), Some(6));
        assert_eq!(a.threshold(4), Some(7));
        let v: Vec<u64> = a.values[..7].iter().map(|v| v.unwrap()).collect();
        assert_eq!(v, vec![2, 2, 2, 3, 3, 4, 5]);
        assert!(a.values.windows(2).all(|p| p[0] <= p[1]));
        let r = alpha_weight_ratios(&a, &geom(2.0, 30), &w(&[1.0, 1.0])).unwrap();
        assert!(r.last().unwrap() < &0.01);
    }

    #[test]
    fn limsup_plan_sandwich() {
        let phi = geom(2.0, 6);
        let c = build_c_sequence(&phi, &w(&[1.0, 1.0]), 2.0, 0.5, 6).unwrap();
        let a = build_alpha_sequence(&phi, 6).unwrap();
        let plan = limsup_digit_plan(&c.logs, &a.logs).unwrap();
        // s_4 = e^6 + 3
        let s4 = (6f64.exp() + 3.0).floor().ln();
        assert!((plan.lower_bounds.log(4).to_f64() - s4).abs() < 1e-14);
        // c_1 = 1, α_1 = 2
        assert_eq!(plan.exact_lower_bound(1), Some(3));
        assert!(limsup_digit_plan(&c.logs, &build_alpha_sequence(&phi, 5).unwrap().logs).is_err());
    }

    #[test]
    fn membership_examples() {
        let phi = geom(2.0, 6);
        let c = build_c_sequence(&phi, &w(&[1.0, 1.0]), 2.0, 0.5, 6).unwrap();
        let digits = DigitSequence::LogSpace(c.logs.entries.clone());
        let r = membership_ratios(MembershipInput::Digits(&digits), &phi, &w(&[1.0, 1.0])).unwrap();
        assert_eq!(r.ratios[3], 1.0);
        assert_eq!(r.ratios[4], 1.0);
        assert!(r.ratios.iter().all(|&x| x <= 1.0 + 1e-15));

        // a_n = e^{φ(n)} with t = (1): r_n = 1 exactly.
        let phi = geom(2.0, 20);
        let logs: Vec<LogScalar> = (1..=20)
            .map(|n| LogScalar::from_log(phi.log_value(n).unwrap().exp()))
            .collect();
        let d = DigitSequence::LogSpace(logs);
        let r = membership_ratios(MembershipInput::Digits(&d), &phi, &w(&[1.0])).unwrap();
        assert!(r.ratios.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn liminf_pipeline_ratio_tends_to_one() {
        let phi = geom(2.0, 20);
        let l = build_l_sequence(&phi, 2.0, 0.1, 20, DEFAULT_SCAN_BUDGET).unwrap();
        let z = compute_z(&l, &w(&[1.0]), &phi).unwrap();
        let plan = liminf_digit_plan(&l.logs, z.z).unwrap();
        let r = membership_ratios(MembershipInput::Plan(&plan), &phi, &w(&[1.0])).unwrap();
        assert!((r.ratios[19] - 1.0).abs() < 0.05);
    }

    #[test]
    fn text_round_trip() {
        let logs: Vec<DoubleDouble> = (1..=5)
            .map(|n| DoubleDouble::from(n as f64) / DoubleDouble::from(3.0))
            .collect();
        let seq = LogSequence::from_logs(&logs).unwrap();
        let back = LogSequence::from_text(&seq.to_text()).unwrap();
        for n in 1..=5 {
            assert!((back.log(n) - seq.log(n)).abs().to_f64() < 1e-17);
        }
        assert!(seq.to_text().starts_with("1,3.33333333333333333e-1\n"));
        assert!(LogSequence::from_text("2,1.0\n").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn plan_choices_stay_within_band(
            seed_logs in prop::collection::vec(0.7f64..30.0, 6..20),
            picks in prop::collection::vec(0.0f64..1.0, 20),
            t1 in 0.0f64..2.0,
        ) {
            let logs: Vec<DoubleDouble> = seed_logs.iter().map(|&x| DoubleDouble::from(x)).collect();
            let plan = DigitPlan::custom(&logs).unwrap();
            let phi = geom(2.0, logs.len());
            let wv = w(&[1.0, t1]);
            let base = membership_ratios(MembershipInput::Plan(&plan), &phi, &wv).unwrap();
            let chosen: Vec<u64> = (1..=plan.len()).map(|n| {
                let lo = plan.exact_lower_bound(n).unwrap();
                lo + ((lo as f64) * picks[n - 1]).floor() as u64
            }).collect();
            let chosen = DigitSequence::from_u64s(&chosen).unwrap();
            let other = membership_ratios(MembershipInput::Digits(&chosen), &phi, &wv).unwrap();
            for n in 0..base.ratios.len() {
                let band = (wv.m() + 1) as f64 * wv.max() * std::f64::consts::LN_2 / phi.value(n + 1).unwrap().to_f64();
                prop_assert!((other.ratios[n] - base.ratios[n]).abs() <= band + 1e-12);
            }
        }

        #[test]
        fn c_sequence_invariants(beta in 1.5f64..4.0, eps in 0.05f64..1.0, t0 in 0.2f64..1.0, extra in 0.0f64..1.0) {
            let phi = geom(beta, 40);
            let wv = w(&[t0, t0 + extra]);
            let c = build_c_sequence(&phi, &wv, beta, eps, 40).unwrap();
            prop_assert!(c.logs.logs().iter().all(|l| l.hi() >= 0.0));
            prop_assert!(c.growth_ratios.iter().all(|&r| r <= beta + eps - 1.0 + 1e-12));
            prop_assert!(!c.witnesses.is_empty());
        }

        #[test]
        fn larger_z_gives_smaller_plan(z in 0.5f64..5.0, dz in 0.0f64..3.0) {
            let logs: Vec<DoubleDouble> = (1..=15).map(|n| DoubleDouble::from(1.7f64.powi(n))).collect();
            let seq = LogSequence::from_logs(&logs).unwrap();
            let a = liminf_digit_plan(&seq, z).unwrap();
            let b = liminf_digit_plan(&seq, z + dz).unwrap();
            for n in 1..=15 {
                prop_assert!(b.lower_bounds.log(n) <= a.lower_bounds.log(n));
            }
        }
    }
}
