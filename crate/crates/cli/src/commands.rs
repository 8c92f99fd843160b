use std::path::Path;
use std::str::FromStr;

use num_bigint::BigUint;
use serde_json::{json, Map, Value};

use cfdim::construct::{
    build_alpha_sequence, build_c_sequence, build_l_sequence, check_l_chain, compute_z,
    liminf_digit_plan, limsup_digit_plan, membership_ratios, DigitPlan, MembershipInput,
    MembershipReport, FLAG_MONOTONE_TAIL, FLAG_WINDOW_ESTIMATE,
};
use cfdim::dimension::{
    critical_exponent, dim_formula_partial, min_mass_threshold, verify_mass_bound, CoverSpec,
    Sampler,
};
use cfdim::rate::DEFAULT_RATIO_FLOOR;
use cfdim::stochastic::{
    borel_bernstein_count, dirichlet_events, jarnik_events, sample_with_retry,
    weighted_growth_stat, Psi, Summary, TrialConfig,
};
use cfdim::{
    convergents_of, expand_certified, legendre_check, parse_rational, predicted_dimensions,
    verify_classical_bounds, DigitSequence, DoubleDouble, GrowthExponents, RateFunction,
    WeightVector,
};

use crate::config::{CommandName, RunConfig};
use crate::error::{CliError, WithKey};
use crate::report::{cell, num, nums, Report, Trace};

pub const FLAG_DISTORTION_BAND: &str = "distortion-band";

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    match cfg.command {
        CommandName::Expand => expand(cfg),
        CommandName::Construct => construct(cfg),
        CommandName::Predict => predict(cfg),
        CommandName::CoverExponent => cover_exponent(cfg),
        CommandName::VerifyMass => verify_mass(cfg),
        CommandName::Membership => membership(cfg),
        CommandName::McBernstein => mc_bernstein(cfg),
        CommandName::McGrowth => mc_growth(cfg),
        CommandName::Events => events(cfg),
    }
}

// ---------------------------------------------------------------------------
// Shared parsing

fn weights(cfg: &RunConfig, key: &str) -> Result<WeightVector, CliError> {
    WeightVector::parse(cfg.value(key)?).with_key(key)
}

fn rate(cfg: &RunConfig, horizon: usize) -> Result<RateFunction, CliError> {
    let text = cfg.value("phi")?;
    match text.strip_prefix("table:") {
        Some(path) => {
            RateFunction::from_csv_file(Path::new(path), DEFAULT_RATIO_FLOOR).with_key("phi")
        }
        None => RateFunction::parse_preset(text, horizon).with_key("phi"),
    }
}

fn exponents(cfg: &RunConfig, phi: &RateFunction) -> Result<GrowthExponents, CliError> {
    match cfg.parsed_opt::<usize>("window-start", "a positive integer")? {
        Some(w) => phi.growth_exponents(w).with_key("window-start"),
        None => phi.default_growth_exponents().with_key("phi"),
    }
}

fn rate_flags(phi: &RateFunction, g: &GrowthExponents) -> Vec<String> {
    let mut f = Vec::new();
    if g.is_window_estimate() {
        f.push(FLAG_WINDOW_ESTIMATE.to_string());
    }
    if phi.monotone_tail_assumed() {
        f.push(FLAG_MONOTONE_TAIL.to_string());
    }
    f
}

fn digit_list(cfg: &RunConfig, key: &str) -> Result<DigitSequence, CliError> {
    let digits = cfg
        .value(key)?
        .split(',')
        .map(|s| {
            BigUint::from_str(s.trim()).map_err(|_| {
                CliError::key(key, format!("'{}' is not a positive integer", s.trim()))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    DigitSequence::exact(digits).with_key(key)
}

fn summary_json(s: &Summary) -> Value {
    json!({ "mean": num(s.mean), "median": num(s.median), "min": num(s.min), "max": num(s.max) })
}

fn trial_config(cfg: &RunConfig) -> Result<TrialConfig, CliError> {
    let seed: u64 = cfg.parsed("seed", "a 64-bit unsigned integer")?;
    let mut tc =
        TrialConfig::new(cfg.count("trials")?, cfg.count("depth")?, seed).with_key("trials")?;
    if let Some(bits) = cfg.parsed_opt::<u64>("bits", "a positive integer")? {
        tc.precision_bits = bits;
        tc.validate().with_key("bits")?;
    }
    Ok(tc)
}

// ---------------------------------------------------------------------------
// Plans

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Liminf,
    Limsup,
}

fn mode(cfg: &RunConfig) -> Result<Mode, CliError> {
    match cfg.get("mode").unwrap_or("liminf") {
        "liminf" => Ok(Mode::Liminf),
        "limsup" => Ok(Mode::Limsup),
        other => Err(CliError::key(
            "mode",
            format!("'{other}' is not liminf or limsup"),
        )),
    }
}

struct Built {
    phi: RateFunction,
    w: WeightVector,
    plan: DigitPlan,
    flags: Vec<String>,
    summary: Map<String, Value>,
    /// log L_n or log c_n
    sequence: Vec<f64>,
    /// log α_n for limsup plans.
    alpha: Option<Vec<f64>>,
}

fn build_plan(cfg: &RunConfig, horizon: usize) -> Result<Built, CliError> {
    let mode = mode(cfg)?;
    let w = weights(cfg, "weights")?;
    if mode == Mode::Limsup && !w.nondecreasing_positive() {
        return Err(CliError::precondition(
            "weights",
            format!("({w}) must satisfy 0 < t_0 <= ... <= t_m for mode = limsup"),
        ));
    }
    let epsilon = cfg.f64("epsilon")?;
    let budget = cfg.count("scan-budget")?;
    let phi = rate(cfg, horizon)?;
    let g = phi.default_growth_exponents().with_key("phi")?;
    let mut flags = rate_flags(&phi, &g);
    let e = g.best();
    let mut summary = Map::new();
    summary.insert(
        "mode".into(),
        json!(if mode == Mode::Liminf {
            "liminf"
        } else {
            "limsup"
        }),
    );
    summary.insert("rate".into(), json!(phi.to_string()));
    summary.insert("epsilon".into(), num(epsilon));
    summary.insert("horizon".into(), json!(horizon));

    let (plan, sequence, alpha) = match mode {
        Mode::Liminf => {
            let l = build_l_sequence(&phi, e.upper, epsilon, horizon, budget).with_key("phi")?;
            let chain = check_l_chain(&l, &phi)?;
            let z = compute_z(&l, &w, &phi).with_key("weights")?;
            let plan = liminf_digit_plan(&l.logs, z.z)?;
            flags.extend(l.logs.flags.iter().cloned());
            flags.extend(z.flags.iter().cloned());
            summary.insert("B".into(), num(e.upper));
            summary.insert("growth_bound".into(), num(l.growth_bound));
            summary.insert(
                "chain".into(),
                json!({
                    "dominates_rate": chain.dominates_rate,
                    "chain": chain.chain,
                    "telescoped": chain.telescoped,
                    "window_liminf": num(chain.window_liminf),
                    "first_failure": chain.first_failure,
                }),
            );
            summary.insert(
                "z".into(),
                json!({
                    "z": num(z.z),
                    "lower_bound": num(z.lower_bound),
                    "window_upper_bound": num(z.window_upper_bound),
                    "asymptotic_upper_bound": num(z.asymptotic_upper_bound),
                    "window_start": z.window_start,
                    "window_end": z.window_end,
                }),
            );
            let seq = l
                .logs
                .logs()
                .into_iter()
                .map(DoubleDouble::to_f64)
                .collect();
            (plan, seq, None)
        }
        Mode::Limsup => {
            let c = build_c_sequence(&phi, &w, e.lower, epsilon, horizon).with_key("phi")?;
            let a = build_alpha_sequence(&phi, horizon).with_key("phi")?;
            let plan = limsup_digit_plan(&c.logs, &a.logs)?;
            flags.extend(c.logs.flags.iter().cloned());
            flags.extend(a.logs.flags.iter().cloned());
            summary.insert("b".into(), num(e.lower));
            summary.insert("growth_cap".into(), num(c.growth_cap));
            summary.insert("window_growth_ratio".into(), num(c.window_growth_ratio()));
            summary.insert("witnesses".into(), json!(c.witnesses));
            summary.insert("alpha_values".into(), json!(a.values));
            let seq = c
                .logs
                .logs()
                .into_iter()
                .map(DoubleDouble::to_f64)
                .collect();
            let al = a
                .logs
                .logs()
                .into_iter()
                .map(DoubleDouble::to_f64)
                .collect();
            (plan, seq, Some(al))
        }
    };
    flags.extend(plan.lower_bounds.flags.iter().cloned());
    summary.insert("floor_error_bound".into(), num(plan.floor_error_bound));
    Ok(Built {
        phi,
        w,
        plan,
        flags,
        summary,
        sequence,
        alpha,
    })
}

fn membership_json(r: &MembershipReport) -> Value {
    json!({
        "tail_max": num(r.tail_max),
        "tail_min": num(r.tail_min),
        "tail_start": r.tail_start,
    })
}

fn opt_cell<T: Copy>(v: &[T], i: usize, f: impl Fn(T) -> String) -> String {
    v.get(i).map(|&x| f(x)).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// Commands

fn expand(cfg: &RunConfig) -> Result<Report, CliError> {
    let x = parse_rational(cfg.value("x")?).with_key("x")?;
    let radius = parse_rational(cfg.value("radius")?).with_key("radius")?;
    let depth = cfg.count("depth")?;
    let digits = expand_certified(&x, depth, &radius).with_key("x")?;
    let conv = convergents_of(&digits)?;
    let exact = digits.exact_digits()?;

    let mut trace = Trace::new(&["n", "digit", "p", "q"]);
    let mut convergents = Vec::new();
    for (i, c) in conv.iter().enumerate() {
        trace.push(vec![
            (i + 1).to_string(),
            exact[i].to_string(),
            c.p_cur.to_string(),
            c.q_cur.to_string(),
        ]);
        convergents.push(json!({ "p": c.p_cur.to_string(), "q": c.q_cur.to_string() }));
    }
    let mut results = json!({
        "certified_depth": digits.len(),
        "digits": exact.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "convergents": convergents,
    });
    if !digits.is_empty() && is_zero(&radius) {
        let b = verify_classical_bounds(&digits, &x)?;
        results["classical_bounds_hold"] = json!(b.all_hold());
    }
    if let Some(qmax) = cfg.parsed_opt::<u64>("qmax", "a positive integer")? {
        let hits = legendre_check(&x, qmax).with_key("qmax")?;
        results["legendre"] = serde_json::to_value(&hits).expect("serializable");
    }
    Ok(Report::new(results).trace(trace))
}

fn is_zero(r: &cfdim::Rational) -> bool {
    r.numer().sign() == num_bigint::Sign::NoSign
}

fn construct(cfg: &RunConfig) -> Result<Report, CliError> {
    let horizon = cfg.count("horizon")?;
    let b = build_plan(cfg, horizon)?;
    let partial =
        dim_formula_partial(&b.plan.lower_bounds, b.plan.len() - 1).with_key("horizon")?;
    let memb = membership_ratios(MembershipInput::Plan(&b.plan), &b.phi, &b.w)?;
    let mut results = Value::Object(b.summary);
    results["dim_partial_liminf"] = num(partial.liminf_estimate);
    results["membership"] = membership_json(&memb);

    let plan_logs: Vec<f64> = b
        .plan
        .lower_bounds
        .logs()
        .into_iter()
        .map(DoubleDouble::to_f64)
        .collect();
    let values: Vec<f64> = partial.points.iter().map(|p| p.value).collect();
    let mut trace = Trace::new(&[
        "n",
        "log_sequence",
        "log_alpha",
        "log_plan_lower",
        "partial_dimension",
        "membership_ratio",
    ]);
    for i in 0..b.sequence.len() {
        trace.push(vec![
            (i + 1).to_string(),
            cell(b.sequence[i]),
            b.alpha.as_ref().map(|a| cell(a[i])).unwrap_or_default(),
            opt_cell(&plan_logs, i, cell),
            opt_cell(&values, i, cell),
            opt_cell(&memb.ratios, i, cell),
        ]);
    }
    Ok(Report::new(results)
        .flags(b.flags)
        .flags(memb.flags)
        .trace(trace))
}

fn predict(cfg: &RunConfig) -> Result<Report, CliError> {
    if cfg.get("weights").is_some() {
        weights(cfg, "weights")?;
    }
    let phi = rate(cfg, cfg.count("horizon")?)?;
    let g = exponents(cfg, &phi)?;
    let d = predicted_dimensions(&g).with_key("phi")?;
    let e = g.best();
    let results = json!({
        "rate": phi.to_string(),
        "B": num(e.upper),
        "b": num(e.lower),
        "A": num(e.iterated),
        "dim_liminf": num(d.dim_liminf),
        "dim_limsup": num(d.dim_limsup),
        "dim_nd": num(d.dim_nd),
        "from_closed_form": d.from_closed_form,
        "window_start": g.window_start,
        "window_end": g.window_end,
        "window_estimates": { "B": num(g.upper), "b": num(g.lower), "A": num(g.iterated) },
    });
    Ok(Report::new(results).flags(rate_flags(&phi, &g)))
}

fn fixed_plan(spec: &str, len: usize) -> Result<DigitPlan, CliError> {
    let bad = || {
        CliError::key(
            "plan",
            format!("'{spec}' is not construct, exp:BETA or const:V"),
        )
    };
    let (family, v) = spec.split_once(':').ok_or_else(bad)?;
    let v: f64 = v.trim().parse().map_err(|_| bad())?;
    let logs: Vec<DoubleDouble> = match family {
        "exp" if v > 1.0 => (1..=len as i64)
            .map(|n| DoubleDouble::from(v).powi(n))
            .collect(),
        "const" if v >= 1.0 => vec![DoubleDouble::from(v).ln(); len],
        "exp" | "const" => {
            return Err(CliError::precondition(
                "plan",
                format!("'{spec}': value out of range"),
            ))
        }
        _ => return Err(bad()),
    };
    DigitPlan::custom(&logs).with_key("plan")
}

fn cover_exponent(cfg: &RunConfig) -> Result<Report, CliError> {
    let depth = cfg.count("depth")?;
    let spec = cfg.value("plan")?;
    let (plan, mut results, mut flags) = if spec == "construct" {
        if cfg.get("phi").is_none() {
            return Err(CliError::key("phi", "required when plan = construct"));
        }
        let b = build_plan(cfg, depth + 1)?;
        (b.plan, Value::Object(b.summary), b.flags)
    } else {
        (fixed_plan(spec, depth + 1)?, json!({}), Vec::new())
    };
    let c = critical_exponent(&plan, depth).with_key("depth")?;
    let partial = dim_formula_partial(&plan.lower_bounds, depth).with_key("depth")?;
    let gap = (c.s_star - partial.liminf_estimate).abs();
    let width = c.band_upper - c.band_lower;
    results["s_star"] = num(c.s_star);
    results["band_lower"] = num(c.band_lower);
    results["band_upper"] = num(c.band_upper);
    results["window_start"] = json!(c.window_start);
    results["dim_partial_liminf"] = num(partial.liminf_estimate);
    results["gap"] = num(gap);
    results["band_width"] = num(width);
    results["band_covers_gap"] = json!(gap <= width);
    flags.push(FLAG_DISTORTION_BAND.into());

    let mut trace = Trace::new(&["n", "upper", "lower"]);
    for r in &c.trace {
        trace.push(vec![
            r.n.to_string(),
            r.upper.map(cell).unwrap_or_default(),
            r.lower.map(cell).unwrap_or_default(),
        ]);
    }
    Ok(Report::new(results).flags(flags).trace(trace))
}

fn sampler(cfg: &RunConfig, seed: u64) -> Result<Sampler, CliError> {
    let text = cfg.value("sampler")?;
    let bad = || {
        CliError::key(
            "sampler",
            format!("'{text}' is not random:COUNT:LO:HI or exhaustive:CAP"),
        )
    };
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let n = |s: &str| s.parse::<u64>().map_err(|_| bad());
    match parts.as_slice() {
        ["exhaustive", cap] => Ok(Sampler::Exhaustive { cap: n(cap)? }),
        ["random", count, lo, hi] => Ok(Sampler::Random {
            count: n(count)? as usize,
            lo: n(lo)?,
            hi: n(hi)?,
            seed,
        }),
        _ => Err(bad()),
    }
}

fn verify_mass(cfg: &RunConfig) -> Result<Report, CliError> {
    let w = weights(cfg, "weights")?;
    let s = cfg.f64("s")?;
    let depth = cfg.count("depth")?;
    let seed: u64 = cfg.parsed("seed", "a 64-bit unsigned integer")?;
    let threshold = min_mass_threshold(s, &w, w.m()).with_key("s")?.ln_f64();
    let log_m = match cfg.get("log-m") {
        Some(_) => cfg.f64("log-m")?,
        None => {
            let offset = match cfg.get("log-m-offset") {
                Some(_) => cfg.f64("log-m-offset")?,
                None => 0.1,
            };
            threshold + offset
        }
    };
    let spec = CoverSpec::new(log_m, w, depth).with_key("log-m")?;
    let r = verify_mass_bound(depth, &spec, s, &sampler(cfg, seed)?).with_key("sampler")?;
    let mut results = serde_json::to_value(&r).expect("serializable");
    results["pass"] = json!(r.passed);
    results["fail"] = json!(r.failed);
    results["holds"] = json!(r.holds());
    let flags = r.flags.clone();
    Ok(Report::new(results).flags(flags).seed(seed))
}

fn membership(cfg: &RunConfig) -> Result<Report, CliError> {
    let w = weights(cfg, "weights")?;
    let horizon = cfg.count("horizon")?;
    let (r, flags) = if cfg.get("digits").is_some() {
        let d = digit_list(cfg, "digits")?;
        let phi = rate(cfg, horizon.max(d.len()))?;
        (
            membership_ratios(MembershipInput::Digits(&d), &phi, &w).with_key("digits")?,
            Vec::new(),
        )
    } else {
        let b = build_plan(cfg, horizon)?;
        (
            membership_ratios(MembershipInput::Plan(&b.plan), &b.phi, &b.w)?,
            b.flags,
        )
    };
    let mut trace = Trace::new(&["n", "ratio"]);
    for (i, &x) in r.ratios.iter().enumerate() {
        trace.push(vec![(i + 1).to_string(), cell(x)]);
    }
    let mut results = membership_json(&r);
    results["ratios"] = nums(&r.ratios);
    Ok(Report::new(results)
        .flags(flags)
        .flags(r.flags.clone())
        .trace(trace))
}

fn mc_bernstein(cfg: &RunConfig) -> Result<Report, CliError> {
    let tc = trial_config(cfg)?;
    let r = borel_bernstein_count(&tc)?;
    let c = r.heuristic_center;
    let results = json!({
        "summary": summary_json(&r.summary),
        "heuristic_center": num(c),
        "mean_within_factor_two": r.summary.mean >= 0.5 * c && r.summary.mean <= 2.0 * c,
        "retried": r.retried,
        "precision_bits": tc.precision_bits,
    });
    let mut trace = Trace::new(&["trial", "count"]);
    for (i, n) in r.counts.iter().enumerate() {
        trace.push(vec![i.to_string(), n.to_string()]);
    }
    Ok(Report::new(results).seed(tc.master_seed).trace(trace))
}

fn mc_growth(cfg: &RunConfig) -> Result<Report, CliError> {
    let tc = trial_config(cfg)?;
    let w = weights(cfg, "weights")?;
    let r = weighted_growth_stat(&tc, &w).with_key("depth")?;
    let monotone = r
        .traces
        .iter()
        .all(|t| t.running_max.windows(2).all(|p| p[0] <= p[1]));
    let results = json!({
        "summary": summary_json(&r.summary),
        "finals": nums(&r.finals),
        "running_max_monotone": monotone,
        "retried": r.retried,
        "precision_bits": tc.precision_bits,
    });
    let mut trace = Trace::new(&["trial", "n", "ratio", "running_max"]);
    for (i, t) in r.traces.iter().enumerate() {
        for (j, (&x, &m)) in t.ratios.iter().zip(&t.running_max).enumerate() {
            trace.push(vec![
                i.to_string(),
                (t.start + j).to_string(),
                cell(x),
                cell(m),
            ]);
        }
    }
    Ok(Report::new(results).seed(tc.master_seed).trace(trace))
}

fn psi(cfg: &RunConfig) -> Result<Psi, CliError> {
    let text = cfg.get("psi").unwrap_or("scaled:0.5");
    let bad = |why: &str| CliError::key("psi", format!("'{text}': {why}"));
    let (family, v) = text
        .split_once(':')
        .ok_or_else(|| bad("expected scaled:C, invlog:C or table:PATH"))?;
    let c = || v.trim().parse::<f64>().map_err(|_| bad("bad number"));
    match family {
        "scaled" => {
            let c = c()?;
            if !(c > 0.0 && c < 1.0) {
                return Err(CliError::precondition("psi", "scaled:C needs 0 < C < 1"));
            }
            Ok(Psi::Scaled(c))
        }
        "invlog" => {
            let c = c()?;
            if c <= 0.0 {
                return Err(CliError::precondition("psi", "invlog:C needs C > 0"));
            }
            Ok(Psi::InverseLog(c))
        }
        "table" => {
            let body = std::fs::read_to_string(v)
                .map_err(|e| CliError::Io(format!("psi table {v}: {e}")))?;
            let mut rows = Vec::new();
            for (i, line) in body.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || (i == 0 && line.starts_with(|ch: char| ch.is_alphabetic())) {
                    continue;
                }
                let parsed = line.split_once(',').and_then(|(q, p)| {
                    Some((q.trim().parse::<f64>().ok()?, p.trim().parse::<f64>().ok()?))
                });
                match parsed {
                    Some((q, p)) if q >= 1.0 && p > 0.0 => rows.push((q, p)),
                    _ => {
                        return Err(bad(&format!(
                            "line {} is not 'q,psi' with q >= 1 and psi > 0",
                            i + 1
                        )))
                    }
                }
            }
            if rows.is_empty() || rows.windows(2).any(|r| r[0].0 >= r[1].0) {
                return Err(bad(
                    "table needs at least one row with q strictly increasing",
                ));
            }
            Ok(Psi::Table(rows))
        }
        _ => Err(bad("expected scaled:C, invlog:C or table:PATH")),
    }
}

fn events(cfg: &RunConfig) -> Result<Report, CliError> {
    let (digits, seed) = if cfg.get("digits").is_some() {
        (digit_list(cfg, "digits")?, None)
    } else {
        let seed: u64 = cfg.parsed("seed", "a 64-bit unsigned integer")?;
        let tc = TrialConfig::new(1, cfg.count("depth")?, seed).with_key("depth")?;
        let (d, _) = sample_with_retry(&tc, cfg.count("trial")?)?;
        (d, Some(seed))
    };
    let (results, trace) = match cfg.value("kind")? {
        "jarnik" => {
            let tau = match cfg.get("tau") {
                Some(_) => cfg.f64("tau")?,
                None => 1.0,
            };
            let ev = jarnik_events(&digits, tau).with_key("tau")?;
            let mut trace = Trace::new(&["n", "event"]);
            for n in 1..digits.len() {
                trace.push(vec![n.to_string(), u8::from(ev.contains(&n)).to_string()]);
            }
            (
                json!({ "kind": "jarnik", "tau": num(tau), "count": ev.len(), "events": ev }),
                trace,
            )
        }
        "dirichlet" => {
            let r = dirichlet_events(&digits, &psi(cfg)?)?;
            let pick = |f: fn(&cfdim::stochastic::DirichletPoint) -> bool| -> Vec<usize> {
                r.points.iter().filter(|p| f(p)).map(|p| p.n).collect()
            };
            let mut trace = Trace::new(&[
                "n",
                "log_q",
                "log_threshold",
                "log_product",
                "inner",
                "outer",
                "skipped",
            ]);
            for p in &r.points {
                trace.push(vec![
                    p.n.to_string(),
                    cell(p.log_q),
                    p.log_threshold.map(cell).unwrap_or_default(),
                    cell(p.log_product),
                    u8::from(p.inner).to_string(),
                    u8::from(p.outer).to_string(),
                    u8::from(p.skipped).to_string(),
                ]);
            }
            let results = json!({
                "kind": "dirichlet",
                "inner": pick(|p| p.inner),
                "outer": pick(|p| p.outer),
                "skipped": pick(|p| p.skipped),
                "psi_not_monotone": r.psi_not_monotone,
            });
            (results, trace)
        }
        other => {
            return Err(CliError::key(
                "kind",
                format!("'{other}' is not jarnik or dirichlet"),
            ))
        }
    };
    let flags: Vec<String> = match &results["psi_not_monotone"] {
        Value::Bool(true) => vec!["psi-not-monotone".into()],
        _ => Vec::new(),
    };
    let mut report = Report::new(results).flags(flags).trace(trace);
    if let Some(s) = seed {
        report = report.seed(s);
    }
    Ok(report)
}
