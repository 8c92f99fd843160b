//! Invocation parsing. Flags and config files share one key table, so a
//! config written by [`RunConfig::to_config_text`] parses back to the same
//! configuration as the flags that produced it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Arg, ArgAction, ArgMatches};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CommandName {
    Expand,
    Construct,
    Predict,
    CoverExponent,
    VerifyMass,
    Membership,
    McBernstein,
    McGrowth,
    Events,
}

impl CommandName {
    pub const ALL: [CommandName; 9] = [
        CommandName::Expand,
        CommandName::Construct,
        CommandName::Predict,
        CommandName::CoverExponent,
        CommandName::VerifyMass,
        CommandName::Membership,
        CommandName::McBernstein,
        CommandName::McGrowth,
        CommandName::Events,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Expand => "expand",
            CommandName::Construct => "construct",
            CommandName::Predict => "predict",
            CommandName::CoverExponent => "cover-exponent",
            CommandName::VerifyMass => "verify-mass",
            CommandName::Membership => "membership",
            CommandName::McBernstein => "mc-bernstein",
            CommandName::McGrowth => "mc-growth",
            CommandName::Events => "events",
        }
    }

    fn about(self) -> &'static str {
        match self {
            CommandName::Expand => {
                "Certified continued-fraction digits and convergents of a rational"
            }
            CommandName::Construct => "Build the liminf or limsup digit plan for a rate function",
            CommandName::Predict => "Growth exponents and predicted dimensions of a rate function",
            CommandName::CoverExponent => "Critical exponent of the cover sums for a digit plan",
            CommandName::VerifyMass => "Check the Bernoulli mass bound on D_n(M)",
            CommandName::Membership => "Ratios of weighted digit windows to the rate function",
            CommandName::McBernstein => "Monte Carlo count of indices with a_n >= n",
            CommandName::McGrowth => "Monte Carlo weighted growth statistic with running maxima",
            CommandName::Events => "Jarnik or Dirichlet events along a digit sequence",
        }
    }

    pub fn keys(self) -> &'static [KeySpec] {
        use Req::*;
        macro_rules! k {
            ($key:expr, $req:expr, $help:expr) => {
                KeySpec {
                    key: $key,
                    req: $req,
                    help: $help,
                }
            };
        }
        match self {
            CommandName::Expand => &[
                k!("x", Required, "rational p/q or decimal"),
                k!("depth", Default("20"), "maximum number of digits"),
                k!("radius", Default("0"), "half-width of the input interval"),
                k!(
                    "qmax",
                    Optional,
                    "also list Legendre approximations with q <= qmax"
                ),
            ],
            CommandName::Construct => &[
                k!(
                    "phi",
                    Required,
                    "rate: poly:G, geom:B, superg:A or table:PATH"
                ),
                k!("mode", Default("liminf"), "liminf or limsup"),
                k!("weights", Default("1,1"), "comma-separated t_0,...,t_m"),
                k!(
                    "epsilon",
                    Default("0.1"),
                    "slack added to the growth exponent"
                ),
                k!("horizon", Default("40"), "number of indices"),
                k!(
                    "scan-budget",
                    Default("200"),
                    "indices scanned per supremum"
                ),
            ],
            CommandName::Predict => &[
                k!(
                    "phi",
                    Required,
                    "rate: poly:G, geom:B, superg:A or table:PATH"
                ),
                k!("weights", Optional, "weights, validated and echoed"),
                k!("horizon", Default("200"), "evaluation horizon for presets"),
                k!(
                    "window-start",
                    Optional,
                    "first index of the exponent window"
                ),
            ],
            CommandName::CoverExponent => &[
                k!(
                    "plan",
                    Default("construct"),
                    "construct, exp:BETA (log s_n = BETA^n) or const:V (s_n = V)"
                ),
                k!("depth", Default("30"), "cover depth"),
                k!("phi", Optional, "rate for plan = construct"),
                k!(
                    "mode",
                    Default("liminf"),
                    "liminf or limsup, for plan = construct"
                ),
                k!("weights", Default("1,1"), "weights, for plan = construct"),
                k!("epsilon", Default("0.1"), "slack, for plan = construct"),
                k!(
                    "scan-budget",
                    Default("200"),
                    "indices scanned per supremum"
                ),
            ],
            CommandName::VerifyMass => &[
                k!("weights", Default("1,1"), "comma-separated t_0,...,t_m"),
                k!("s", Default("0.8"), "exponent s in (1/2, 1)"),
                k!("depth", Default("4"), "tuple length n"),
                k!(
                    "log-m",
                    Optional,
                    "log M; default is the threshold plus log-m-offset"
                ),
                k!(
                    "log-m-offset",
                    Optional,
                    "offset above the threshold (0.1 if log-m is absent)"
                ),
                k!(
                    "sampler",
                    Default("random:1000:100:10000"),
                    "random:COUNT:LO:HI or exhaustive:CAP"
                ),
                k!("seed", Default("0"), "master seed"),
            ],
            CommandName::Membership => &[
                k!(
                    "phi",
                    Required,
                    "rate: poly:G, geom:B, superg:A or table:PATH"
                ),
                k!("weights", Default("1,1"), "comma-separated t_0,...,t_m"),
                k!(
                    "digits",
                    Optional,
                    "comma-separated digits; otherwise a constructed plan"
                ),
                k!("mode", Optional, "liminf or limsup plan (default liminf)"),
                k!("epsilon", Default("0.1"), "slack, for constructed plans"),
                k!("horizon", Default("40"), "plan length"),
                k!(
                    "scan-budget",
                    Default("200"),
                    "indices scanned per supremum"
                ),
            ],
            CommandName::McBernstein => &[
                k!("trials", Default("200"), "number of trials"),
                k!("depth", Default("10000"), "digits per trial"),
                k!("seed", Default("0"), "master seed"),
                k!("bits", Optional, "initial precision in bits"),
            ],
            CommandName::McGrowth => &[
                k!("trials", Default("100"), "number of trials"),
                k!("depth", Default("1000"), "digits per trial"),
                k!("weights", Default("1"), "comma-separated t_0,...,t_m"),
                k!("seed", Default("0"), "master seed"),
                k!("bits", Optional, "initial precision in bits"),
            ],
            CommandName::Events => &[
                k!("kind", Default("jarnik"), "jarnik or dirichlet"),
                k!(
                    "digits",
                    Optional,
                    "comma-separated digits; otherwise a sampled trial"
                ),
                k!("tau", Optional, "Jarnik exponent (default 1)"),
                k!(
                    "psi",
                    Optional,
                    "scaled:C, invlog:C or table:PATH (default scaled:0.5)"
                ),
                k!("depth", Default("100"), "digits of the sampled trial"),
                k!("seed", Default("0"), "master seed of the sampled trial"),
                k!("trial", Default("0"), "trial index of the sampled trial"),
            ],
        }
    }

    pub fn key(self, key: &str) -> Option<&'static KeySpec> {
        self.keys().iter().find(|k| k.key == key)
    }
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CommandName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        CommandName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| CliError::key("command", format!("unknown command '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Req {
    Required,
    Default(&'static str),
    Optional,
}

#[derive(Debug)]
pub struct KeySpec {
    pub key: &'static str,
    pub req: Req,
    pub help: &'static str,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(CliError::key("output", format!("'{s}' is not json or csv"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandName,
    /// Every key of the command that has a value, defaults filled in.
    pub params: BTreeMap<String, String>,
    /// Keys the caller supplied, as opposed to defaults.
    pub explicit: BTreeSet<String>,
    pub output: OutputFormat,
    pub output_path: Option<PathBuf>,
}

const CONFIG_KEY: &str = "config";
const OUTPUT_KEY: &str = "output";
const OUT_KEY: &str = "out";

fn io_args() -> [Arg; 3] {
    [
        Arg::new(CONFIG_KEY)
            .long(CONFIG_KEY)
            .value_name("PATH")
            .help("read key = value lines; flags override the file"),
        Arg::new(OUTPUT_KEY)
            .long(OUTPUT_KEY)
            .value_name("FORMAT")
            .help("json or csv, printed when --out is absent [default: json]"),
        Arg::new(OUT_KEY)
            .long(OUT_KEY)
            .value_name("PATH")
            .help("write the JSON report here and any CSV trace next to it"),
    ]
}

pub fn cli_command() -> clap::Command {
    let mut root = clap::Command::new("cfdim")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Continued-fraction digit sets: constructions, dimensions and Monte Carlo checks")
        .args(io_args());
    for c in CommandName::ALL {
        let mut sub = clap::Command::new(c.as_str())
            .about(c.about())
            .args(io_args());
        for k in c.keys() {
            let help = match k.req {
                Req::Required => format!("{} (required)", k.help),
                Req::Default(d) => format!("{} [default: {d}]", k.help),
                Req::Optional => k.help.to_string(),
            };
            sub = sub.arg(
                Arg::new(k.key)
                    .long(k.key)
                    .value_name("VALUE")
                    .action(ArgAction::Set)
                    .allow_hyphen_values(true)
                    .help(help),
            );
        }
        root = root.subcommand(sub);
    }
    root
}

pub fn usage() -> String {
    cli_command().render_help().to_string()
}

/// One `key = value` line per entry; blank lines and `#` comments skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config line {}: expected 'key = value', got '{line}'",
                i + 1
            ))
        })?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if !seen.insert(k.clone()) {
            return Err(CliError::key(
                &k,
                format!("config line {}: key given twice", i + 1),
            ));
        }
        out.push((k, v));
    }
    Ok(out)
}

fn read_config_file(path: &str) -> Result<Vec<(String, String)>, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("config {path}: {e}")))?;
    parse_config_text(&text)
}

struct Collected {
    command: Option<CommandName>,
    values: BTreeMap<String, String>,
}

fn collect_matches(m: &ArgMatches, keys: &[&str], into: &mut BTreeMap<String, String>) {
    for &k in keys {
        if let Some(v) = m.get_one::<String>(k) {
            into.insert(k.to_string(), v.clone());
        }
    }
}

/// Merges file entries beneath flag values.
fn merge_file(c: &mut Collected, file: Vec<(String, String)>) -> Result<(), CliError> {
    for (k, v) in file {
        if k == "command" {
            let from_file: CommandName = v.parse()?;
            match c.command {
                Some(cmd) if cmd != from_file => {
                    return Err(CliError::key(
                        "command",
                        format!("config file names '{from_file}' but the invocation names '{cmd}'"),
                    ))
                }
                _ => c.command = Some(from_file),
            }
        } else if k == CONFIG_KEY {
            return Err(CliError::key(
                CONFIG_KEY,
                "config files cannot include other config files",
            ));
        } else {
            c.values.entry(k).or_insert(v);
        }
    }
    Ok(())
}

pub fn parse_invocation(argv: &[String]) -> Result<RunConfig, CliError> {
    if argv.is_empty() {
        return Err(CliError::Usage(usage()));
    }
    let matches = cli_command()
        .try_get_matches_from(std::iter::once("cfdim".to_string()).chain(argv.iter().cloned()))
        .map_err(CliError::from_clap)?;

    let io_keys = [CONFIG_KEY, OUTPUT_KEY, OUT_KEY];
    let mut collected = Collected {
        command: None,
        values: BTreeMap::new(),
    };
    let mut config_paths = Vec::new();
    if let Some((name, sub)) = matches.subcommand() {
        let cmd: CommandName = name.parse()?;
        collected.command = Some(cmd);
        let keys: Vec<&str> = cmd.keys().iter().map(|k| k.key).chain(io_keys).collect();
        collect_matches(sub, &keys, &mut collected.values);
    }
    let mut root_values = BTreeMap::new();
    collect_matches(&matches, &io_keys, &mut root_values);
    for (k, v) in root_values {
        if collected.values.insert(k.clone(), v).is_some() {
            return Err(CliError::key(&k, "given both before and after the command"));
        }
    }
    if let Some(p) = collected.values.remove(CONFIG_KEY) {
        config_paths.push(p);
    }
    for p in config_paths {
        let file = read_config_file(&p)?;
        merge_file(&mut collected, file)?;
    }
    finish(collected)
}

/// Parses a config file's contents as a complete invocation.
pub fn parse_config_invocation(text: &str) -> Result<RunConfig, CliError> {
    let mut collected = Collected {
        command: None,
        values: BTreeMap::new(),
    };
    merge_file(&mut collected, parse_config_text(text)?)?;
    finish(collected)
}

fn finish(c: Collected) -> Result<RunConfig, CliError> {
    let command = c
        .command
        .ok_or_else(|| CliError::Usage(format!("no command given\n\n{}", usage())))?;
    let mut values = c.values;
    let output = match values.remove(OUTPUT_KEY) {
        Some(v) => v.parse()?,
        None => OutputFormat::Json,
    };
    let output_path = values.remove(OUT_KEY).map(PathBuf::from);
    if let Some(k) = values.keys().find(|k| command.key(k).is_none()) {
        return Err(CliError::key(
            k,
            format!("unknown key for command '{command}'"),
        ));
    }
    let explicit: BTreeSet<String> = values.keys().cloned().collect();
    for k in command.keys() {
        match k.req {
            Req::Required if !values.contains_key(k.key) => {
                return Err(CliError::key(
                    k.key,
                    format!("required by command '{command}'"),
                ));
            }
            Req::Default(d) => {
                values
                    .entry(k.key.to_string())
                    .or_insert_with(|| d.to_string());
            }
            _ => {}
        }
    }
    let cfg = RunConfig {
        command,
        params: values,
        explicit,
        output,
        output_path,
    };
    cfg.check_contradictions()?;
    Ok(cfg)
}

impl RunConfig {
    fn check_contradictions(&self) -> Result<(), CliError> {
        let has = |k: &str| self.explicit.contains(k);
        match self.command {
            CommandName::Events => {
                let kind = self.get("kind").unwrap_or("jarnik");
                if kind == "jarnik" && has("psi") {
                    return Err(CliError::key(
                        "psi",
                        "only meaningful with kind = dirichlet",
                    ));
                }
                if kind == "dirichlet" && has("tau") {
                    return Err(CliError::key("tau", "only meaningful with kind = jarnik"));
                }
            }
            CommandName::Membership if has("digits") && has("mode") => {
                return Err(CliError::key(
                    "mode",
                    "contradicts digits: give a plan mode or digits, not both",
                ));
            }
            CommandName::VerifyMass if has("log-m") && has("log-m-offset") => {
                return Err(CliError::key(
                    "log-m-offset",
                    "contradicts log-m: give one of them",
                ));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    /// The value of a key that is required or defaulted.
    pub fn value(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::key(key, format!("required by command '{}'", self.command)))
    }

    pub fn parsed<T: FromStr>(&self, key: &str, what: &str) -> Result<T, CliError> {
        let v = self.value(key)?;
        v.parse()
            .map_err(|_| CliError::key(key, format!("'{v}' is not {what}")))
    }

    pub fn parsed_opt<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(_) => self.parsed(key, what).map(Some),
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let x: f64 = self.parsed(key, "a number")?;
        if !x.is_finite() {
            return Err(CliError::key(key, "must be finite"));
        }
        Ok(x)
    }

    pub fn count(&self, key: &str) -> Result<usize, CliError> {
        self.parsed(key, "a nonnegative integer")
    }

    /// Config text that parses back to this configuration.
    pub fn to_config_text(&self) -> String {
        let mut out = format!("command = {}\n", self.command);
        for (k, v) in &self.params {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out.push_str(&format!("{OUTPUT_KEY} = {}\n", self.output.as_str()));
        if let Some(p) = &self.output_path {
            out.push_str(&format!("{OUT_KEY} = {}\n", p.display()));
        }
        out
    }
}
