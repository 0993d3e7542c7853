//! Closed-form steady-state results for the three-queue M/M/∞ network.
//!
//! The aggregator is modeled as three infinite-server queues in tandem with
//! random splitting: arrivals are classified into the regulation-down queue
//! (RDQ), the regulation-up-and-down queue (RUDQ), or the regulation-up queue
//! (RUQ). RDQ completions feed RUDQ and RUDQ completions feed RUQ, each
//! thinned by a quit fraction. Every queue is M/M/∞, so its occupancy is
//! Poisson and the expected counts give the regulation capacities directly.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const PROB_SUM_TOL: f64 = 1e-9;

/// Parameters of the queueing network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    /// EV arrivals per minute.
    pub lambda: f64,
    /// Fractions of arrivals classified into RDQ / RUDQ / RUQ.
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    /// Quit fractions at RDQ and RUDQ service completion.
    pub q1: f64,
    pub q2: f64,
    /// Service rates per minute.
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    /// Per-EV regulation power in kW.
    pub p_ev: f64,
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be > 0, got {}", self.lambda)));
        }
        for (name, mu) in [("mu1", self.mu1), ("mu2", self.mu2), ("mu3", self.mu3)] {
            if !(mu > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {mu}")));
            }
        }
        if !(self.p_ev > 0.0) {
            return Err(Error::Config(format!("p_ev must be > 0, got {}", self.p_ev)));
        }
        for (name, v) in [
            ("p1", self.p1),
            ("p2", self.p2),
            ("p3", self.p3),
            ("q1", self.q1),
            ("q2", self.q2),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if ((self.p1 + self.p2 + self.p3) - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::Config(format!(
                "p1 + p2 + p3 must equal 1, got {}",
                self.p1 + self.p2 + self.p3
            )));
        }
        Ok(())
    }
}

/// Per-queue arrival rates, all in events per minute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRates {
    /// External arrival rates from classification splitting.
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// Transfer rate RDQ -> RUDQ.
    pub lambda12: f64,
    /// Transfer rate RUDQ -> RUQ.
    pub lambda23: f64,
}

/// Everything the closed-form model produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticResult {
    pub flows: FlowRates,
    /// Expected EV counts per queue.
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// Overall system departure rate; equals `lambda` by flow conservation.
    pub departure_rate: f64,
    /// Regulation-down / regulation-up capacities in kW.
    pub c_rd: f64,
    pub c_ru: f64,
}

/// Splits the external Poisson arrivals and propagates the thinned
/// completion streams through the network.
pub fn compute_flows(params: &NetworkParams) -> Result<FlowRates> {
    params.validate()?;
    let lambda1 = params.p1 * params.lambda;
    let lambda2 = params.p2 * params.lambda;
    let lambda3 = params.p3 * params.lambda;
    let lambda12 = (1.0 - params.q1) * lambda1;
    let lambda23 = (1.0 - params.q2) * (lambda2 + lambda12);
    Ok(FlowRates {
        lambda1,
        lambda2,
        lambda3,
        lambda12,
        lambda23,
    })
}

/// Steady-state probability of `n` EVs in an M/M/∞ queue: Poisson pmf with
/// mean `arrival_rate / service_rate`, evaluated in log space so large `n`
/// does not overflow the factorial.
pub fn occupancy_pmf(arrival_rate: f64, service_rate: f64, n: u64) -> Result<f64> {
    if !(service_rate > 0.0) {
        return Err(Error::Config(format!(
            "service rate must be > 0, got {service_rate}"
        )));
    }
    if !(arrival_rate >= 0.0) {
        return Err(Error::Config(format!(
            "arrival rate must be >= 0, got {arrival_rate}"
        )));
    }
    let a = arrival_rate / service_rate;
    if a == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let ln_pmf = n as f64 * a.ln() - a - ln_gamma(n as f64 + 1.0);
    Ok(ln_pmf.exp())
}

/// Expected EV counts `(l1, l2, l3)` in the three queues.
pub fn expected_counts(params: &NetworkParams) -> Result<(f64, f64, f64)> {
    params.validate()?;
    let NetworkParams {
        lambda,
        p1,
        p2,
        q1,
        q2,
        mu1,
        mu2,
        mu3,
        ..
    } = *params;
    let l1 = p1 * lambda / mu1;
    let l2 = lambda * (p1 + p2 - p1 * q1) / mu2;
    let l3 = lambda * (1.0 - p1 * q1 - p1 * q2 - p2 * q2 + p1 * q1 * q2) / mu3;
    Ok((l1, l2, l3))
}

/// Overall departure rate of the system; equals the external arrival rate.
pub fn departure_rate(flows: &FlowRates, q1: f64, q2: f64) -> f64 {
    q1 * flows.lambda1 + q2 * (flows.lambda2 + flows.lambda12) + (flows.lambda3 + flows.lambda23)
}

/// Regulation-down and regulation-up capacities in kW.
///
/// RDQ and RUDQ residents can absorb power; RUDQ and RUQ residents can
/// supply it.
pub fn capacities(p_ev: f64, l1: f64, l2: f64, l3: f64) -> (f64, f64) {
    (p_ev * (l1 + l2), p_ev * (l2 + l3))
}

/// Minutes needed to charge from `x_now` to `x_target` at a constant
/// normalized rate.
pub fn charging_duration(x_now: f64, x_target: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::Config(format!("charging rate must be > 0, got {rate}")));
    }
    if x_target < x_now {
        return Err(Error::Domain(format!(
            "charging target {x_target} below current SOC {x_now}"
        )));
    }
    Ok((x_target - x_now) / rate)
}

/// Full closed-form evaluation.
pub fn evaluate(params: &NetworkParams) -> Result<AnalyticResult> {
    let flows = compute_flows(params)?;
    let (l1, l2, l3) = expected_counts(params)?;
    let departure = departure_rate(&flows, params.q1, params.q2);
    let (c_rd, c_ru) = capacities(params.p_ev, l1, l2, l3);
    Ok(AnalyticResult {
        flows,
        l1,
        l2,
        l3,
        departure_rate: departure,
        c_rd,
        c_ru,
    })
}
