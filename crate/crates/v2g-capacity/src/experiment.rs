//! Experiment orchestration: replication batches, service-rate sweeps, and
//! CSV emission.
//!
//! Replications run concurrently with independent random streams derived
//! from one master seed, so results (and the emitted CSV bytes) are a pure
//! function of the scenario and the seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analytic::{self, NetworkParams};
use crate::des::{self, EmpiricalStats, QueueId, SimTrace, STREAMS_PER_REPLICATION};
use crate::distributions::RandomStream;
use crate::error::{Error, Result};
use crate::scenario::{generate_ev, EvStreams, ScenarioConfig};
use crate::stats;

/// Which service rate a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTarget {
    Mu1,
    Mu2,
    Mu3,
}

impl SweepTarget {
    pub fn name(self) -> &'static str {
        match self {
            SweepTarget::Mu1 => "mu1",
            SweepTarget::Mu2 => "mu2",
            SweepTarget::Mu3 => "mu3",
        }
    }

    pub fn apply(self, config: &ScenarioConfig, value: f64) -> ScenarioConfig {
        let mut c = config.clone();
        match self {
            SweepTarget::Mu1 => c.mu1 = value,
            SweepTarget::Mu2 => c.mu2 = value,
            SweepTarget::Mu3 => c.mu3 = value,
        }
        c
    }
}

impl std::str::FromStr for SweepTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu1" => Ok(SweepTarget::Mu1),
            "mu2" => Ok(SweepTarget::Mu2),
            "mu3" => Ok(SweepTarget::Mu3),
            other => Err(Error::Config(format!(
                "sweep target must be one of mu1|mu2|mu3, got {other:?}"
            ))),
        }
    }
}

/// A service-rate sweep: the target and the rate values to visit, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub target: SweepTarget,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::Config(format!("sweep rates must be > 0, got {v}")));
        }
        Ok(())
    }

    /// Parses `mu1=v1,v2,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let (target, values) = s.split_once('=').ok_or_else(|| {
            Error::Config(format!("sweep must look like mu1=v1,v2,..., got {s:?}"))
        })?;
        let target: SweepTarget = target.trim().parse()?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("sweep value is not a number: {v:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let spec = SweepSpec { target, values };
        spec.validate()?;
        Ok(spec)
    }
}

/// A batch of replications of one configuration.
pub struct Batch {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub sample_interval: f64,
    pub traces: Vec<SimTrace>,
    /// `(replication index, error message)` for failed replications.
    pub failures: Vec<(u32, String)>,
    /// Counters pooled over the successful replications.
    pub pooled: EmpiricalStats,
}

impl Batch {
    /// Per-replication steady-state capacity means `(c_rd, c_ru)`.
    pub fn capacity_means(&self, warmup: f64) -> (Vec<f64>, Vec<f64>) {
        let rd = self
            .traces
            .iter()
            .map(|t| mean_after_warmup(&t.capacity_series(true), warmup))
            .collect();
        let ru = self
            .traces
            .iter()
            .map(|t| mean_after_warmup(&t.capacity_series(false), warmup))
            .collect();
        (rd, ru)
    }

    /// Per-replication steady-state count means `[n1, n2, n3]`.
    pub fn count_means(&self, warmup: f64) -> Vec<[f64; 3]> {
        self.traces
            .iter()
            .map(|t| {
                [
                    mean_after_warmup(&t.count_series(QueueId::Rdq), warmup),
                    mean_after_warmup(&t.count_series(QueueId::Rudq), warmup),
                    mean_after_warmup(&t.count_series(QueueId::Ruq), warmup),
                ]
            })
            .collect()
    }

    /// Adopted service durations of one queue pooled over replications.
    pub fn pooled_adopted(&self, queue: QueueId) -> Vec<f64> {
        self.traces
            .iter()
            .flat_map(|t| t.adopted[queue.index()].iter().copied())
            .collect()
    }

    /// Network parameters built from the batch's own observed splitting and
    /// quit fractions. Falls back to offline measurement (classifying
    /// freshly generated EVs) when the batch saw no arrivals, and to the
    /// configured quit fractions when a queue saw no completions.
    pub fn empirical_params(&self) -> Result<NetworkParams> {
        let (p1, p2, _) = match self.pooled.state_fractions() {
            Some(p) => p,
            None => measure_state_fractions(&self.config, self.seed, 100_000)?,
        };
        let params = NetworkParams {
            lambda: self.config.lambda,
            p1,
            p2,
            p3: 1.0 - p1 - p2,
            q1: self.pooled.q1_fraction().unwrap_or(self.config.q1),
            q2: self.pooled.q2_fraction().unwrap_or(self.config.q2),
            mu1: self.config.mu1,
            mu2: self.config.mu2,
            mu3: self.config.mu3,
            p_ev: self.config.p_ev,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Time-weighted mean past the warm-up; short series (horizon inside the
/// warm-up) fall back to the plain mean of the sampled values.
fn mean_after_warmup(series: &[(f64, f64)], warmup: f64) -> f64 {
    stats::steady_mean(series, warmup).unwrap_or_else(|_| {
        let n = series.len().max(1);
        series.iter().map(|&(_, v)| v).sum::<f64>() / n as f64
    })
}

/// Classifies `n` generated EVs to measure the state fractions without
/// running the event loop.
pub fn measure_state_fractions(
    config: &ScenarioConfig,
    seed: u64,
    n: u32,
) -> Result<(f64, f64, f64)> {
    // stream ids far above any replication's range
    let base = u64::MAX / 2;
    let mut streams = EvStreams {
        soc_init: RandomStream::new(seed, base + 1),
        soc_high: RandomStream::new(seed, base + 2),
        soc_low: RandomStream::new(seed, base + 3),
        stay: RandomStream::new(seed, base + 4),
        charge_coin: RandomStream::new(seed, base + 5),
    };
    let mut counts = [0u64; 3];
    for _ in 0..n {
        let ev = generate_ev(config, 0.0, &mut streams)?;
        let state = des::classify(ev.soc, ev.soc_low, ev.soc_high)?;
        counts[match state {
            des::EvState::State1 => 0,
            des::EvState::State2 => 1,
            des::EvState::State3 => 2,
        }] += 1;
    }
    let total = n as f64;
    Ok((
        counts[0] as f64 / total,
        counts[1] as f64 / total,
        counts[2] as f64 / total,
    ))
}

/// Runs `config.replications` independent replications concurrently.
pub fn run_batch(config: &ScenarioConfig, seed: u64, sample_interval: f64) -> Result<Batch> {
    config.validate()?;
    let results: Vec<(u32, std::result::Result<SimTrace, String>)> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let base = rep as u64 * STREAMS_PER_REPLICATION;
            let outcome = des::Simulator::with_stream_base(config, seed, base)
                .and_then(|sim| sim.run(config.horizon, sample_interval))
                .map_err(|e| e.to_string());
            (rep, outcome)
        })
        .collect();

    let mut traces = Vec::new();
    let mut failures = Vec::new();
    let mut pooled = EmpiricalStats::default();
    for (rep, outcome) in results {
        match outcome {
            Ok(trace) => {
                pooled.merge(&trace.empirical);
                traces.push(trace);
            }
            Err(msg) => failures.push((rep, msg)),
        }
    }
    if traces.is_empty() {
        let (rep, msg) = failures
            .first()
            .cloned()
            .unwrap_or((0, "no replications configured".into()));
        return Err(Error::Internal(format!(
            "all replications failed; first failure (replication {rep}): {msg}"
        )));
    }
    Ok(Batch {
        config: config.clone(),
        seed,
        sample_interval,
        traces,
        failures,
        pooled,
    })
}

/// One summary row: analytic model at the batch's empirical parameters next
/// to the simulated steady-state capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub param_name: String,
    pub param_value: f64,
    pub l1_ana: f64,
    pub l2_ana: f64,
    pub l3_ana: f64,
    pub c_rd_ana: f64,
    pub c_ru_ana: f64,
    pub c_rd_sim: f64,
    pub c_ru_sim: f64,
    pub err_rd: f64,
    pub err_ru: f64,
    /// 95% confidence half-widths; NaN with fewer than two replications.
    pub ci_rd: f64,
    pub ci_ru: f64,
    pub failed_replications: usize,
    pub empirical: NetworkParams,
}

pub fn summarize_batch(batch: &Batch, param_name: &str, param_value: f64) -> Result<SummaryRow> {
    let params = batch.empirical_params()?;
    let (l1, l2, l3) = analytic::expected_counts(&params)?;
    let (c_rd_ana, c_ru_ana) = analytic::capacities(params.p_ev, l1, l2, l3);
    let (rd_means, ru_means) = batch.capacity_means(batch.config.warmup);
    let (c_rd_sim, ci_rd) = match stats::aggregate(&rd_means) {
        Ok(e) => (e.mean, e.half_width),
        Err(_) => (rd_means.iter().sum::<f64>() / rd_means.len() as f64, f64::NAN),
    };
    let (c_ru_sim, ci_ru) = match stats::aggregate(&ru_means) {
        Ok(e) => (e.mean, e.half_width),
        Err(_) => (ru_means.iter().sum::<f64>() / ru_means.len() as f64, f64::NAN),
    };
    Ok(SummaryRow {
        param_name: param_name.to_string(),
        param_value,
        l1_ana: l1,
        l2_ana: l2,
        l3_ana: l3,
        c_rd_ana,
        c_ru_ana,
        c_rd_sim,
        c_ru_sim,
        err_rd: stats::relative_error(c_rd_sim, c_rd_ana)?,
        err_ru: stats::relative_error(c_ru_sim, c_ru_ana)?,
        ci_rd,
        ci_ru,
        failed_replications: batch.failures.len(),
        empirical: params,
    })
}

/// Options for [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    pub seed: u64,
    pub sample_interval: f64,
    /// Where result files go; `None` keeps everything in memory.
    pub out_dir: Option<PathBuf>,
    /// Whether per-replication trace CSVs are written.
    pub write_traces: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            sample_interval: 1.0,
            out_dir: None,
            write_traces: true,
        }
    }
}

/// Results of one experiment: the base-configuration row plus one row per
/// sweep value, in input order.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub base: SummaryRow,
    pub sweep_rows: Vec<SummaryRow>,
}

const SUMMARY_HEADER: &str = "param_name,param_value,l1_ana,l2_ana,l3_ana,c_rd_ana,c_ru_ana,\
                              c_rd_sim,c_ru_sim,err_rd,err_ru,ci_rd,ci_ru";

fn summary_line(row: &SummaryRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        row.param_name,
        row.param_value,
        row.l1_ana,
        row.l2_ana,
        row.l3_ana,
        row.c_rd_ana,
        row.c_ru_ana,
        row.c_rd_sim,
        row.c_ru_sim,
        row.err_rd,
        row.err_ru,
        row.ci_rd,
        row.ci_ru
    )
}

/// Serializes a trace with the fixed column set
/// `time_min,n1,n2,n3,psi1,psi2,psi3,c_rd_kw,c_ru_kw`.
pub fn trace_to_csv(trace: &SimTrace) -> String {
    let mut out = String::from("time_min,n1,n2,n3,psi1,psi2,psi3,c_rd_kw,c_ru_kw\n");
    for i in 0..trace.times.len() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            trace.times[i],
            trace.n1[i],
            trace.n2[i],
            trace.n3[i],
            trace.psi1_len[i],
            trace.psi2_len[i],
            trace.psi3_len[i],
            trace.c_rd_inst[i],
            trace.c_ru_inst[i]
        )
        .unwrap();
    }
    out
}

fn empirical_csv(rows: &[&SummaryRow], config: &ScenarioConfig) -> String {
    let mut out =
        String::from("param_name,param_value,p1_hat,p2_hat,p3_hat,q1_cfg,q1_hat,q2_cfg,q2_hat\n");
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.param_name,
            row.param_value,
            row.empirical.p1,
            row.empirical.p2,
            row.empirical.p3,
            config.q1,
            row.empirical.q1,
            config.q2,
            row.empirical.q2
        )
        .unwrap();
    }
    out
}

fn write_batch_traces(batch: &Batch, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, trace) in batch.traces.iter().enumerate() {
        let path = dir.join(format!("trace_r{i:03}.csv"));
        fs::write(path, trace_to_csv(trace))?;
    }
    Ok(())
}

/// Runs the base configuration and the optional sweep, writing result files
/// when an output directory is configured.
pub fn run_experiment(
    config: &ScenarioConfig,
    sweep: Option<&SweepSpec>,
    opts: &ExperimentOptions,
) -> Result<ExperimentOutcome> {
    config.validate()?;
    if let Some(s) = sweep {
        s.validate()?;
    }

    let base_batch = run_batch(config, opts.seed, opts.sample_interval)?;
    let base = summarize_batch(&base_batch, "reference", 0.0)?;

    let mut sweep_rows = Vec::new();
    let mut sweep_batches = Vec::new();
    if let Some(spec) = sweep {
        for &value in &spec.values {
            let swept = spec.target.apply(config, value);
            let batch = run_batch(&swept, opts.seed, opts.sample_interval)?;
            sweep_rows.push(summarize_batch(&batch, spec.target.name(), value)?);
            sweep_batches.push(batch);
        }
    }

    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir)?;

        let mut summary = String::from(SUMMARY_HEADER);
        summary.push('\n');
        summary.push_str(&summary_line(&base));
        summary.push('\n');
        fs::write(dir.join("summary.csv"), &summary)?;

        if let Some(spec) = sweep {
            let mut out = String::from(SUMMARY_HEADER);
            out.push('\n');
            for row in &sweep_rows {
                out.push_str(&summary_line(row));
                out.push('\n');
            }
            fs::write(dir.join("sweep.csv"), &out)?;

            if opts.write_traces {
                for (i, batch) in sweep_batches.iter().enumerate() {
                    let sub = dir.join(format!("sweep_{}_{i:02}", spec.target.name()));
                    write_batch_traces(batch, &sub)?;
                }
            }
        }

        let all_rows: Vec<&SummaryRow> =
            std::iter::once(&base).chain(sweep_rows.iter()).collect();
        fs::write(dir.join("empirical.csv"), empirical_csv(&all_rows, config))?;

        if opts.write_traces {
            write_batch_traces(&base_batch, dir)?;
        }
    }

    Ok(ExperimentOutcome { base, sweep_rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ScenarioConfig {
        let mut c = ScenarioConfig::reference();
        c.horizon = 300.0;
        c.warmup = 100.0;
        c.replications = 4;
        c
    }

    #[test]
    fn sweep_spec_parsing() {
        let s = SweepSpec::parse("mu1=0.02,0.0142857,0.01").unwrap();
        assert_eq!(s.target, SweepTarget::Mu1);
        assert_eq!(s.values.len(), 3);
        assert!(SweepSpec::parse("mu4=0.1").is_err());
        assert!(SweepSpec::parse("mu1=").is_err());
        assert!(SweepSpec::parse("mu1=0").is_err());
    }

    #[test]
    fn batch_is_deterministic() {
        let c = small_config();
        let a = run_batch(&c, 21, 1.0).unwrap();
        let b = run_batch(&c, 21, 1.0).unwrap();
        assert_eq!(a.traces, b.traces);
    }

    #[test]
    fn empirical_params_are_sane() {
        let c = small_config();
        let batch = run_batch(&c, 22, 1.0).unwrap();
        let p = batch.empirical_params().unwrap();
        assert!((p.p1 - 0.5).abs() < 0.1, "p1 {}", p.p1);
        assert!((p.p3 - 0.1).abs() < 0.06, "p3 {}", p.p3);
        assert!((p.q1 - 0.1).abs() < 0.1, "q1 {}", p.q1);
    }

    #[test]
    fn degenerate_zero_horizon_row() {
        let mut c = ScenarioConfig::reference();
        c.horizon = 0.0;
        c.replications = 1;
        let outcome = run_experiment(&c, None, &ExperimentOptions::default()).unwrap();
        assert_eq!(outcome.base.c_rd_sim, 0.0);
        assert_eq!(outcome.base.c_ru_sim, 0.0);
        assert_eq!(outcome.base.err_rd, -1.0);
        assert_eq!(outcome.base.err_ru, -1.0);
        assert!(outcome.base.ci_rd.is_nan());
    }

    #[test]
    fn sweep_rows_preserve_order() {
        let c = small_config();
        let spec = SweepSpec {
            target: SweepTarget::Mu3,
            values: vec![1.0 / 20.0, 1.0 / 30.0, 1.0 / 40.0],
        };
        let outcome = run_experiment(&c, Some(&spec), &ExperimentOptions::default()).unwrap();
        let vals: Vec<f64> = outcome.sweep_rows.iter().map(|r| r.param_value).collect();
        assert_eq!(vals, spec.values);
        assert!(outcome
            .sweep_rows
            .iter()
            .all(|r| r.param_name == "mu3"));
    }
}
