//! Scenario configuration: the flat key/value file format, validation, and
//! generation of arriving EVs from the configured SOC and stay rules.
//!
//! File format: one `key = value` per line, `#` starts a comment, unknown
//! keys are errors. Distribution values are written as
//! `kind(name=value, ...)`, e.g. `truncated_normal(mean=420, std=60, low=60, high=780)`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::distributions::{DistributionSpec, RandomStream};
use crate::error::{Error, Result};
use crate::smart_charge::{EvRequest, RateBounds};

/// Rule constructing the upper target SOC threshold from the initial SOC:
/// truncated normal on `[soc, 1]` with mean `soc + mean_frac*(1 - soc)` and
/// std `std_frac*(1 - soc)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocHighRule {
    pub mean_frac: f64,
    pub std_frac: f64,
}

impl SocHighRule {
    /// Distribution of the upper threshold for an EV with initial SOC `soc`.
    pub fn spec_for(&self, soc: f64) -> Result<DistributionSpec> {
        let room = 1.0 - soc;
        if room <= 0.0 {
            return Err(Error::Domain(format!(
                "no headroom above SOC {soc} for an upper threshold"
            )));
        }
        Ok(DistributionSpec::TruncatedNormal {
            mean: soc + self.mean_frac * room,
            std: self.std_frac * room,
            low: soc,
            high: 1.0,
        })
    }
}

/// Rule constructing the lower threshold as `soc_high * U[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocLowRule {
    pub mult_low: f64,
    pub mult_high: f64,
}

/// All stochastic-model parameters of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// EV arrivals per minute.
    pub lambda: f64,
    /// Fraction of EVs that need parking only (SOC above their upper
    /// threshold by construction).
    pub frac_no_charge: f64,
    /// Initial SOC of charging EVs.
    pub soc_init: DistributionSpec,
    pub soc_high_rule: SocHighRule,
    pub soc_low_rule: SocLowRule,
    /// Duration of stay, minutes.
    pub stay: DistributionSpec,
    pub rate_bounds: RateBounds,
    /// Quit fractions at RDQ / RUDQ completion.
    pub q1: f64,
    pub q2: f64,
    /// Target service rates per minute.
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    /// Per-EV regulation power, kW.
    pub p_ev: f64,
    /// Duration of one regulation event, minutes.
    pub delta_t_reg: f64,
    /// Simulation horizon, minutes.
    pub horizon: f64,
    /// Warm-up truncation, minutes.
    pub warmup: f64,
    /// Replication count for experiments.
    pub replications: u32,
}

impl ScenarioConfig {
    /// The parking-structure scenario the model was calibrated on.
    pub fn reference() -> Self {
        Self {
            lambda: 5.0,
            frac_no_charge: 0.1,
            soc_init: DistributionSpec::TruncatedNormal {
                mean: 0.5,
                std: 0.2,
                low: 0.0,
                high: 1.0,
            },
            soc_high_rule: SocHighRule {
                mean_frac: 0.5,
                std_frac: 0.1,
            },
            soc_low_rule: SocLowRule {
                mult_low: 0.6,
                mult_high: 0.8,
            },
            stay: DistributionSpec::TruncatedNormal {
                mean: 420.0,
                std: 60.0,
                low: 60.0,
                high: 780.0,
            },
            rate_bounds: RateBounds { low: 0.0, high: 0.05 },
            q1: 0.1,
            q2: 0.1,
            mu1: 1.0 / 50.0,
            mu2: 1.0 / 70.0,
            mu3: 1.0 / 30.0,
            p_ev: 6.0,
            delta_t_reg: 1.0,
            horizon: 1440.0,
            warmup: 200.0,
            replications: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.frac_no_charge) {
            return Err(Error::Config(format!(
                "frac_no_charge must lie in [0, 1], got {}",
                self.frac_no_charge
            )));
        }
        self.soc_init.validate()?;
        self.stay.validate()?;
        self.rate_bounds.validate()?;
        for (name, v) in [("q1", self.q1), ("q2", self.q2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        for (name, mu) in [("mu1", self.mu1), ("mu2", self.mu2), ("mu3", self.mu3)] {
            if !(mu > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {mu}")));
            }
        }
        if !(self.p_ev > 0.0) {
            return Err(Error::Config(format!("p_ev must be > 0, got {}", self.p_ev)));
        }
        if !(self.delta_t_reg > 0.0) {
            return Err(Error::Config(format!(
                "delta_t_reg must be > 0, got {}",
                self.delta_t_reg
            )));
        }
        if !(self.horizon >= 0.0) {
            return Err(Error::Config(format!("horizon must be >= 0, got {}", self.horizon)));
        }
        if !(self.warmup >= 0.0) {
            return Err(Error::Config(format!("warmup must be >= 0, got {}", self.warmup)));
        }
        if !(0.0 < self.soc_high_rule.mean_frac && self.soc_high_rule.mean_frac < 1.0) {
            return Err(Error::Config(format!(
                "soc_high_mean_frac must lie in (0, 1), got {}",
                self.soc_high_rule.mean_frac
            )));
        }
        if !(self.soc_high_rule.std_frac > 0.0) {
            return Err(Error::Config(format!(
                "soc_high_std_frac must be > 0, got {}",
                self.soc_high_rule.std_frac
            )));
        }
        if !(0.0 <= self.soc_low_rule.mult_low
            && self.soc_low_rule.mult_low <= self.soc_low_rule.mult_high
            && self.soc_low_rule.mult_high <= 1.0)
        {
            return Err(Error::Config(format!(
                "soc_low multiplier range must satisfy 0 <= low <= high <= 1, got [{}, {}]",
                self.soc_low_rule.mult_low, self.soc_low_rule.mult_high
            )));
        }
        Ok(())
    }

    /// Per-event energy exchanged for regulation, as SOC-normalized context
    /// (`p_ev * delta_t_reg`, in kW·min).
    pub fn regulation_energy_per_event(&self) -> f64 {
        self.p_ev * self.delta_t_reg
    }
}

fn fmt_dist(spec: &DistributionSpec) -> String {
    match *spec {
        DistributionSpec::Exponential { rate } => format!("exponential(rate={rate})"),
        DistributionSpec::TruncatedNormal {
            mean, std, low, high,
        } => format!("truncated_normal(mean={mean}, std={std}, low={low}, high={high})"),
        DistributionSpec::Uniform { low, high } => format!("uniform(low={low}, high={high})"),
        DistributionSpec::Constant { value } => format!("constant(value={value})"),
    }
}

/// Serializes a config in the scenario file format; `load_scenario_str`
/// round-trips it field-exactly.
pub fn write_scenario(config: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
    kv("lambda", config.lambda.to_string());
    kv("frac_no_charge", config.frac_no_charge.to_string());
    kv("soc_init", fmt_dist(&config.soc_init));
    kv("soc_high_mean_frac", config.soc_high_rule.mean_frac.to_string());
    kv("soc_high_std_frac", config.soc_high_rule.std_frac.to_string());
    kv("soc_low_mult_low", config.soc_low_rule.mult_low.to_string());
    kv("soc_low_mult_high", config.soc_low_rule.mult_high.to_string());
    kv("stay", fmt_dist(&config.stay));
    kv("rate_low", config.rate_bounds.low.to_string());
    kv("rate_high", config.rate_bounds.high.to_string());
    kv("q1", config.q1.to_string());
    kv("q2", config.q2.to_string());
    kv("mu1", config.mu1.to_string());
    kv("mu2", config.mu2.to_string());
    kv("mu3", config.mu3.to_string());
    kv("p_ev", config.p_ev.to_string());
    kv("delta_t_reg", config.delta_t_reg.to_string());
    kv("horizon", config.horizon.to_string());
    kv("warmup", config.warmup.to_string());
    kv("replications", config.replications.to_string());
    out
}

struct RawScenario {
    entries: HashMap<String, (usize, String)>,
    path: std::path::PathBuf,
}

impl RawScenario {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn err(&self, line: usize, msg: String) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg,
        }
    }
}

fn parse_f64(raw: &RawScenario, key: &str, line: usize, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| raw.err(line, format!("{key}: expected a number, got {v:?}")))
}

fn parse_dist(raw: &RawScenario, key: &str, line: usize, v: &str) -> Result<DistributionSpec> {
    let open = v
        .find('(')
        .ok_or_else(|| raw.err(line, format!("{key}: expected kind(name=value, ...), got {v:?}")))?;
    if !v.ends_with(')') {
        return Err(raw.err(line, format!("{key}: missing closing parenthesis in {v:?}")));
    }
    let kind = v[..open].trim();
    let body = &v[open + 1..v.len() - 1];
    let mut args: HashMap<&str, f64> = HashMap::new();
    for part in body.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (name, val) = part
            .split_once('=')
            .ok_or_else(|| raw.err(line, format!("{key}: expected name=value, got {part:?}")))?;
        let val = val
            .trim()
            .parse::<f64>()
            .map_err(|_| raw.err(line, format!("{key}: {name}: not a number: {val:?}")))?;
        args.insert(name.trim(), val);
    }
    let mut need = |name: &str| {
        args.remove(name)
            .ok_or_else(|| raw.err(line, format!("{key}: {kind} needs parameter {name:?}")))
    };
    let spec = match kind {
        "exponential" => DistributionSpec::Exponential { rate: need("rate")? },
        "truncated_normal" => DistributionSpec::TruncatedNormal {
            mean: need("mean")?,
            std: need("std")?,
            low: need("low")?,
            high: need("high")?,
        },
        "uniform" => DistributionSpec::Uniform {
            low: need("low")?,
            high: need("high")?,
        },
        "constant" => DistributionSpec::Constant { value: need("value")? },
        other => {
            return Err(raw.err(line, format!("{key}: unknown distribution kind {other:?}")))
        }
    };
    if let Some(extra) = args.keys().next() {
        return Err(raw.err(line, format!("{key}: unknown parameter {extra:?} for {kind}")));
    }
    spec.validate()?;
    Ok(spec)
}

/// Parses scenario text. `path` is used for error context only.
pub fn load_scenario_str(text: &str, path: &Path) -> Result<ScenarioConfig> {
    let mut entries = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let content = match line.split_once('#') {
            Some((before, _)) => before,
            None => line,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            msg: format!("expected key = value, got {content:?}"),
        })?;
        let key = key.trim().to_string();
        if entries.contains_key(&key) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                msg: format!("duplicate key {key:?}"),
            });
        }
        entries.insert(key, (lineno, value.trim().to_string()));
    }
    let mut raw = RawScenario {
        entries,
        path: path.to_path_buf(),
    };

    let mut num = |key: &str| -> Result<f64> {
        let (line, v) = raw
            .take(key)
            .ok_or_else(|| Error::Config(format!("missing required field {key:?}")))?;
        parse_f64(&raw, key, line, &v)
    };

    let lambda = num("lambda")?;
    let frac_no_charge = num("frac_no_charge")?;
    let soc_high_rule = SocHighRule {
        mean_frac: num("soc_high_mean_frac")?,
        std_frac: num("soc_high_std_frac")?,
    };
    let soc_low_rule = SocLowRule {
        mult_low: num("soc_low_mult_low")?,
        mult_high: num("soc_low_mult_high")?,
    };
    let rate_bounds = RateBounds {
        low: num("rate_low")?,
        high: num("rate_high")?,
    };
    let q1 = num("q1")?;
    let q2 = num("q2")?;
    let mu1 = num("mu1")?;
    let mu2 = num("mu2")?;
    let mu3 = num("mu3")?;
    let p_ev = num("p_ev")?;
    let delta_t_reg = num("delta_t_reg")?;

    let mut opt_num = |key: &str, default: f64| -> Result<f64> {
        match raw.take(key) {
            Some((line, v)) => parse_f64(&raw, key, line, &v),
            None => Ok(default),
        }
    };
    let horizon = opt_num("horizon", 1440.0)?;
    let warmup = opt_num("warmup", 200.0)?;
    let replications = match raw.take("replications") {
        Some((line, v)) => v
            .parse::<u32>()
            .map_err(|_| raw.err(line, format!("replications: expected an integer, got {v:?}")))?,
        None => 100,
    };

    let soc_init = {
        let (line, v) = raw
            .take("soc_init")
            .ok_or_else(|| Error::Config("missing required field \"soc_init\"".into()))?;
        parse_dist(&raw, "soc_init", line, &v)?
    };
    let stay = {
        let (line, v) = raw
            .take("stay")
            .ok_or_else(|| Error::Config("missing required field \"stay\"".into()))?;
        parse_dist(&raw, "stay", line, &v)?
    };

    if let Some((key, (line, _))) = raw.entries.iter().next() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: *line,
            msg: format!("unknown field {key:?}"),
        });
    }

    let config = ScenarioConfig {
        lambda,
        frac_no_charge,
        soc_init,
        soc_high_rule,
        soc_low_rule,
        stay,
        rate_bounds,
        q1,
        q2,
        mu1,
        mu2,
        mu3,
        p_ev,
        delta_t_reg,
        horizon,
        warmup,
        replications,
    };
    config.validate()?;
    Ok(config)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    load_scenario_str(&text, path)
}

/// The independent random streams EV generation consumes.
pub struct EvStreams {
    pub soc_init: RandomStream,
    pub soc_high: RandomStream,
    pub soc_low: RandomStream,
    pub stay: RandomStream,
    pub charge_coin: RandomStream,
}

/// Bounded rejection budget for placing a no-charge EV's SOC above its
/// upper threshold; on exhaustion the SOC sits exactly at the threshold,
/// which classifies identically.
const NO_CHARGE_SOC_MAX_REJECTS: u32 = 1000;

/// Draws one arriving EV per the scenario's SOC and stay rules.
///
/// `arrival_time` stamps the request; the departure time is
/// `arrival_time + stay`.
pub fn generate_ev(
    config: &ScenarioConfig,
    arrival_time: f64,
    streams: &mut EvStreams,
) -> Result<EvRequest> {
    let stay = config.stay.sample(&mut streams.stay)?;
    if !(stay > 0.0) {
        return Err(Error::Config(format!(
            "stay distribution produced a nonpositive duration {stay}"
        )));
    }
    let requires_charge = streams.charge_coin.uniform01() >= config.frac_no_charge;

    let base_soc = config.soc_init.sample(&mut streams.soc_init)?;
    let soc_high = if 1.0 - base_soc < 1e-12 {
        1.0
    } else {
        config
            .soc_high_rule
            .spec_for(base_soc)?
            .sample(&mut streams.soc_high)?
    };
    let mult = DistributionSpec::Uniform {
        low: config.soc_low_rule.mult_low,
        high: config.soc_low_rule.mult_high,
    }
    .sample(&mut streams.soc_low)?;
    let soc_low = soc_high * mult;

    let soc = if requires_charge {
        base_soc
    } else {
        // parking-only EV: its SOC sits at or above the upper threshold
        let mut accepted = soc_high;
        for _ in 0..NO_CHARGE_SOC_MAX_REJECTS {
            let x = config.soc_init.sample(&mut streams.soc_init)?;
            if x >= soc_high {
                accepted = x;
                break;
            }
        }
        accepted
    };

    let ev = EvRequest {
        arrival_time,
        departure_time: arrival_time + stay,
        soc,
        soc_low,
        soc_high,
    };
    ev.validate()?;
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::des::{classify, EvState};
    use std::path::PathBuf;

    fn streams(seed: u64) -> EvStreams {
        EvStreams {
            soc_init: RandomStream::new(seed, 1),
            soc_high: RandomStream::new(seed, 2),
            soc_low: RandomStream::new(seed, 3),
            stay: RandomStream::new(seed, 4),
            charge_coin: RandomStream::new(seed, 5),
        }
    }

    #[test]
    fn reference_round_trips() {
        let config = ScenarioConfig::reference();
        let text = write_scenario(&config);
        let parsed = load_scenario_str(&text, &PathBuf::from("<mem>")).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn reference_file_matches_published_parameters() {
        let c = ScenarioConfig::reference();
        assert_eq!(c.lambda, 5.0);
        assert_eq!((c.mu1, c.mu2, c.mu3), (1.0 / 50.0, 1.0 / 70.0, 1.0 / 30.0));
        assert_eq!((c.q1, c.q2), (0.1, 0.1));
        assert_eq!(c.p_ev, 6.0);
        assert_eq!((c.rate_bounds.low, c.rate_bounds.high), (0.0, 0.05));
    }

    #[test]
    fn shipped_reference_file_loads_to_reference_config() {
        let path = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/reference.cfg"));
        let c = load_scenario(&path).unwrap();
        assert_eq!(c, ScenarioConfig::reference());
    }

    #[test]
    fn unknown_field_rejected() {
        let mut text = write_scenario(&ScenarioConfig::reference());
        text.push_str("p1 = 0.5\n");
        let err = load_scenario_str(&text, &PathBuf::from("<mem>")).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn missing_lambda_names_the_field() {
        let text: String = write_scenario(&ScenarioConfig::reference())
            .lines()
            .filter(|l| !l.starts_with("lambda"))
            .map(|l| format!("{l}\n"))
            .collect();
        let err = load_scenario_str(&text, &PathBuf::from("<mem>")).unwrap_err();
        assert!(err.to_string().contains("lambda"), "{err}");
    }

    #[test]
    fn defaults_fill_omitted_optionals() {
        let text: String = write_scenario(&ScenarioConfig::reference())
            .lines()
            .filter(|l| {
                !l.starts_with("horizon") && !l.starts_with("warmup") && !l.starts_with("replications")
            })
            .map(|l| format!("{l}\n"))
            .collect();
        let c = load_scenario_str(&text, &PathBuf::from("<mem>")).unwrap();
        assert_eq!(c.horizon, 1440.0);
        assert_eq!(c.warmup, 200.0);
        assert_eq!(c.replications, 100);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let mut text = String::from("# reference scenario\n\n");
        text.push_str(&write_scenario(&ScenarioConfig::reference()));
        text.push_str("\n# trailing comment\n");
        assert!(load_scenario_str(&text, &PathBuf::from("<mem>")).is_ok());
    }

    #[test]
    fn parse_error_carries_line_number() {
        let text = "lambda = 5\nnot a line\n";
        match load_scenario_str(text, &PathBuf::from("bad.cfg")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn soc_high_rule_at_means() {
        // at x = 0.5 the rule centers the upper threshold at 0.75, so the
        // lower threshold range is [0.6, 0.8] * 0.75 = [0.45, 0.60]
        let rule = SocHighRule {
            mean_frac: 0.5,
            std_frac: 0.1,
        };
        match rule.spec_for(0.5).unwrap() {
            DistributionSpec::TruncatedNormal {
                mean, std, low, high,
            } => {
                assert_eq!(mean, 0.75);
                assert_eq!(std, 0.05);
                assert_eq!((low, high), (0.5, 1.0));
            }
            other => panic!("unexpected {other:?}"),
        }
        let lows: (f64, f64) = (0.6 * 0.75, 0.8 * 0.75);
        assert!((lows.0 - 0.45).abs() < 1e-12 && (lows.1 - 0.60).abs() < 1e-12);
    }

    #[test]
    fn generated_population_matches_published_state_fractions() {
        let config = ScenarioConfig::reference();
        let mut s = streams(2024);
        let n = 100_000;
        let mut counts = [0u32; 3];
        for _ in 0..n {
            let ev = generate_ev(&config, 0.0, &mut s).unwrap();
            assert!(ev.stay() >= 60.0 && ev.stay() <= 780.0);
            match classify(ev.soc, ev.soc_low, ev.soc_high).unwrap() {
                EvState::State1 => counts[0] += 1,
                EvState::State2 => counts[1] += 1,
                EvState::State3 => counts[2] += 1,
            }
        }
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        assert!((p[0] - 0.5).abs() < 0.02, "p1 {}", p[0]);
        assert!((p[1] - 0.4).abs() < 0.02, "p2 {}", p[1]);
        assert!((p[2] - 0.1).abs() < 0.02, "p3 {}", p[2]);
    }
}
