//! Growth functions φ, their running minimum Φ(n) = min_{k>=n} φ(k), and
//! the exponents A, B, b read off from log φ(n)/n and log log φ(n)/n.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::logscalar::LogScalar;

#[derive(Clone, Debug, PartialEq)]
pub enum RateKind {
    /// φ(n) = n^γ
    Polynomial { gamma: f64 },
    /// φ(n) = β^n
    Geometric { beta: f64 },
    /// φ(n) = e^{n^α}
    SuperGeometric { alpha: f64 },
    /// φ(1), φ(2), ... given explicitly.
    Table(Vec<LogScalar>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateFunction {
    kind: RateKind,
    horizon: usize,
    monotone_tail_assumed: bool,
}

/// Default lower bound on φ(n)/n over the last quarter of a table.
pub const DEFAULT_RATIO_FLOOR: f64 = 1.0;

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 1.0) {
        return Err(Error::Input(format!(
            "{name} = {v} must be a finite number > 1"
        )));
    }
    Ok(())
}

impl RateFunction {
    pub fn polynomial(gamma: f64, horizon: usize) -> Result<Self> {
        check_exponent("gamma", gamma)?;
        Self::preset(RateKind::Polynomial { gamma }, horizon)
    }

    pub fn geometric(beta: f64, horizon: usize) -> Result<Self> {
        check_exponent("beta", beta)?;
        Self::preset(RateKind::Geometric { beta }, horizon)
    }

    pub fn super_geometric(alpha: f64, horizon: usize) -> Result<Self> {
        check_exponent("alpha", alpha)?;
        Self::preset(RateKind::SuperGeometric { alpha }, horizon)
    }

    fn preset(kind: RateKind, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Input("horizon must be >= 1".into()));
        }
        Ok(RateFunction {
            kind,
            horizon,
            monotone_tail_assumed: true,
        })
    }

    /// A table φ(1..=len). Values must be positive and φ(n)/n must stay at
    /// or above `ratio_floor` over the last quarter of the table.
    pub fn table(values: Vec<LogScalar>, ratio_floor: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Input("rate table is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| v.is_zero()) {
            return Err(Error::Input(format!(
                "rate table entry n={} is not positive",
                i + 1
            )));
        }
        let horizon = values.len();
        let start = horizon - horizon / 4;
        let log_floor = ratio_floor.ln();
        for n in start..=horizon {
            let ratio = values[n - 1].ln().to_f64() - (n as f64).ln();
            if ratio < log_floor {
                return Err(Error::Precondition(format!(
                    "rate table: phi(n)/n = {:.6e} at n={n} is below the floor {ratio_floor}",
                    ratio.exp()
                )));
            }
        }
        Ok(RateFunction {
            kind: RateKind::Table(values),
            horizon,
            monotone_tail_assumed: false,
        })
    }

    /// Parses a two-column CSV `n,phi`. A header whose second column is
    /// `log_phi` means the column holds natural logs. Rows must cover
    /// n = 1, 2, 3, ... in order.
    pub fn from_csv(text: &str, ratio_floor: f64) -> Result<Self> {
        let mut values = Vec::new();
        let mut logs = false;
        let mut first = true;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::Parse(format!(
                        "rate table line {}: expected 'n,phi'",
                        lineno + 1
                    )))
                }
            };
            if first && a.parse::<u64>().is_err() {
                logs = b.eq_ignore_ascii_case("log_phi");
                first = false;
                continue;
            }
            first = false;
            let n: usize = a.parse().map_err(|_| {
                Error::Parse(format!("rate table line {}: bad index '{a}'", lineno + 1))
            })?;
            if n != values.len() + 1 {
                return Err(Error::Parse(format!(
                    "rate table line {}: expected n={}, found n={n}",
                    lineno + 1,
                    values.len() + 1
                )));
            }
            let v = if logs {
                let l = DoubleDouble::parse_decimal(b)?;
                LogScalar::from_log(l)
            } else {
                LogScalar::parse_decimal(b)?
            };
            values.push(v);
        }
        Self::table(values, ratio_floor)
    }

    pub fn from_csv_file(path: &Path, ratio_floor: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read rate table {}: {e}", path.display())))?;
        Self::from_csv(&text, ratio_floor)
    }

    /// Parses `poly:γ`, `geom:β`, `superg:α` (long names `polynomial`,
    /// `geometric`, `supergeometric` also accepted). Tables are loaded with
    /// [`RateFunction::from_csv_file`].
    pub fn parse_preset(text: &str, horizon: usize) -> Result<Self> {
        let (family, value) = text.split_once(':').ok_or_else(|| {
            Error::Parse(format!(
                "rate function '{text}' is not of the form family:value"
            ))
        })?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("rate function '{text}': bad number '{value}'")))?;
        match family.trim() {
            "poly" | "polynomial" => Self::polynomial(v, horizon),
            "geom" | "geometric" => Self::geometric(v, horizon),
            "superg" | "supergeometric" => Self::super_geometric(v, horizon),
            other => Err(Error::Parse(format!("unknown rate family '{other}'"))),
        }
    }

    pub fn kind(&self) -> &RateKind {
        &self.kind
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn monotone_tail_assumed(&self) -> bool {
        self.monotone_tail_assumed
    }

    pub fn is_table(&self) -> bool {
        matches!(self.kind, RateKind::Table(_))
    }

    /// Same function with a different horizon. Tables cannot be extended.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if self.is_table() {
            if horizon > self.horizon {
                return Err(Error::Range {
                    index: horizon,
                    horizon: self.horizon,
                });
            }
            if let RateKind::Table(v) = &self.kind {
                return Self::table(v[..horizon].to_vec(), f64::MIN_POSITIVE);
            }
        }
        Self::preset(self.kind.clone(), horizon)
    }

    /// log φ(n). Presets are defined for every n >= 1; tables only up to
    /// their horizon.
    pub fn log_value(&self, n: usize) -> Result<DoubleDouble> {
        if n == 0 {
            return Err(Error::Range {
                index: 0,
                horizon: self.horizon,
            });
        }
        let nd = DoubleDouble::from(n);
        Ok(match &self.kind {
            RateKind::Polynomial { gamma } => nd.ln().mul_f64(*gamma),
            RateKind::Geometric { beta } => DoubleDouble::from(*beta).ln() * nd,
            RateKind::SuperGeometric { alpha } => {
                if alpha.fract() == 0.0 && *alpha <= 64.0 {
                    nd.powi(*alpha as i64)
                } else {
                    nd.ln().mul_f64(*alpha).exp()
                }
            }
            RateKind::Table(v) => {
                return v.get(n - 1).map(LogScalar::ln).ok_or(Error::Range {
                    index: n,
                    horizon: self.horizon,
                })
            }
        })
    }

    /// φ(n) as a log scalar.
    pub fn evaluate(&self, n: usize) -> Result<LogScalar> {
        Ok(LogScalar::from_log(self.log_value(n)?))
    }

    /// φ(n) itself in double-double; fails when it overflows.
    pub fn value(&self, n: usize) -> Result<DoubleDouble> {
        let l = self.log_value(n)?;
        if let RateKind::Geometric { beta } = self.kind {
            return finite(DoubleDouble::from(beta).powi(n as i64));
        }
        if let RateKind::Polynomial { gamma } = self.kind {
            if gamma.fract() == 0.0 {
                return finite(DoubleDouble::from(n).powi(gamma as i64));
            }
        }
        finite(l.exp())
    }

    /// Φ(n) = min_{k >= n} φ(k). Presets are increasing, so Φ = φ; tables use
    /// the minimum over [n, horizon].
    pub fn suffix_min(&self, n: usize) -> Result<LogScalar> {
        match &self.kind {
            RateKind::Table(v) => {
                if n == 0 || n > self.horizon {
                    return Err(Error::Range {
                        index: n,
                        horizon: self.horizon,
                    });
                }
                Ok(v[n - 1..]
                    .iter()
                    .copied()
                    .fold(v[n - 1], |m, x| if x < m { x } else { m }))
            }
            _ => self.evaluate(n),
        }
    }

    /// Φ(1..=horizon) in one backward pass.
    pub fn suffix_min_table(&self) -> Result<Vec<LogScalar>> {
        self.suffix_min_table_to(self.horizon)
    }

    /// Φ(1..=len). Tables still take minima over their full horizon.
    pub fn suffix_min_table_to(&self, len: usize) -> Result<Vec<LogScalar>> {
        if self.is_table() {
            let mut full = self.suffix_min_table_full()?;
            if len > full.len() {
                return Err(Error::Range {
                    index: len,
                    horizon: self.horizon,
                });
            }
            full.truncate(len);
            return Ok(full);
        }
        (1..=len).map(|n| self.evaluate(n)).collect()
    }

    fn suffix_min_table_full(&self) -> Result<Vec<LogScalar>> {
        let mut out = Vec::with_capacity(self.horizon);
        for n in 1..=self.horizon {
            out.push(self.evaluate(n)?);
        }
        if self.is_table() {
            for i in (0..out.len().saturating_sub(1)).rev() {
                if out[i + 1] < out[i] {
                    out[i] = out[i + 1];
                }
            }
        }
        Ok(out)
    }

    /// Exact limits of B, b, A where the family determines them.
    pub fn closed_form(&self) -> Option<LimitExponents> {
        match self.kind {
            RateKind::Polynomial { .. } => Some(LimitExponents {
                upper: 1.0,
                lower: 1.0,
                iterated: 1.0,
            }),
            RateKind::Geometric { beta } => Some(LimitExponents {
                upper: beta,
                lower: beta,
                iterated: 1.0,
            }),
            RateKind::SuperGeometric { .. } => Some(LimitExponents {
                upper: f64::INFINITY,
                lower: f64::INFINITY,
                iterated: 1.0,
            }),
            RateKind::Table(_) => None,
        }
    }

    /// Window estimates of B, b and A over [window_start, horizon].
    pub fn growth_exponents(&self, window_start: usize) -> Result<GrowthExponents> {
        if window_start == 0 || window_start >= self.horizon {
            return Err(Error::Input(format!(
                "window_start {window_start} must lie in 1..{}",
                self.horizon
            )));
        }
        let mut max_rate = f64::NEG_INFINITY;
        let mut min_rate = f64::INFINITY;
        let mut max_iter = f64::NEG_INFINITY;
        let mut skipped = Vec::new();
        for n in window_start..=self.horizon {
            let l = self.log_value(n)?;
            let rate = (l / DoubleDouble::from(n)).to_f64();
            max_rate = max_rate.max(rate);
            min_rate = min_rate.min(rate);
            if l.hi() <= 0.0 {
                skipped.push(n);
            } else {
                max_iter = max_iter.max(l.ln().to_f64() / n as f64);
            }
        }
        let iterated = if max_iter == f64::NEG_INFINITY {
            f64::NAN
        } else {
            max_iter.exp()
        };
        Ok(GrowthExponents {
            upper: max_rate.exp(),
            lower: min_rate.exp(),
            iterated,
            window_start,
            window_end: self.horizon,
            skipped_for_iterated: skipped,
            closed_form: self.closed_form(),
        })
    }

    /// Window estimates with the default window start horizon/2.
    pub fn default_growth_exponents(&self) -> Result<GrowthExponents> {
        self.growth_exponents((self.horizon / 2).max(1))
    }
}

fn finite(v: DoubleDouble) -> Result<DoubleDouble> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(
            "phi(n) overflows double range; use log_value".into(),
        ))
    }
}

impl fmt::Display for RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RateKind::Polynomial { gamma } => write!(f, "poly:{gamma}"),
            RateKind::Geometric { beta } => write!(f, "geom:{beta}"),
            RateKind::SuperGeometric { alpha } => write!(f, "superg:{alpha}"),
            RateKind::Table(v) => write!(f, "table[{}]", v.len()),
        }
    }
}

/// B, b and A (each possibly infinite).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitExponents {
    /// B: exp limsup log φ(n)/n
    pub upper: f64,
    /// b: exp liminf log φ(n)/n
    pub lower: f64,
    /// A: exp limsup log log φ(n)/n
    pub iterated: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthExponents {
    pub upper: f64,
    pub lower: f64,
    pub iterated: f64,
    pub window_start: usize,
    pub window_end: usize,
    /// Indices with φ(n) <= 1, left out of the A estimate.
    pub skipped_for_iterated: Vec<usize>,
    pub closed_form: Option<LimitExponents>,
}

impl GrowthExponents {
    /// The closed form when known, otherwise the window estimates.
    pub fn best(&self) -> LimitExponents {
        self.closed_form.unwrap_or(LimitExponents {
            upper: self.upper,
            lower: self.lower,
            iterated: self.iterated,
        })
    }

    pub fn is_window_estimate(&self) -> bool {
        self.closed_form.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PredictedDimensions {
    /// 1/(1+B)
    pub dim_liminf: f64,
    /// 1/(1+b)
    pub dim_limsup: f64,
    /// 1/(1+A)
    pub dim_nd: f64,
    pub from_closed_form: bool,
}

fn reciprocal_dimension(name: &str, e: f64) -> Result<f64> {
    if e.is_nan() || e < 1.0 {
        return Err(Error::Assumption(format!(
            "exponent {name} = {e} is outside [1, inf]"
        )));
    }
    Ok(if e.is_infinite() {
        0.0
    } else {
        1.0 / (1.0 + e)
    })
}

pub fn predicted_dimensions(g: &GrowthExponents) -> Result<PredictedDimensions> {
    let e = g.best();
    Ok(PredictedDimensions {
        dim_liminf: reciprocal_dimension("B", e.upper)?,
        dim_limsup: reciprocal_dimension("b", e.lower)?,
        dim_nd: reciprocal_dimension("A", e.iterated)?,
        from_closed_form: g.closed_form.is_some(),
    })
}
