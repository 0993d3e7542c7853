//! The smart charging mechanism.
//!
//! Each queue shapes its service times into an exponential distribution: an
//! arriving EV is assigned the earliest-generated candidate duration that
//! fits its stay and the system's charging-rate limits. Candidates that fit
//! no EV yet are parked in a FIFO reservoir and offered to later arrivals,
//! so the adopted durations are a reordering of an i.i.d. exponential
//! sequence and inherit its distribution as long as the reservoir stays
//! bounded.

use std::collections::VecDeque;

use rand_distr::{Distribution, Exp};

use crate::distributions::RandomStream;
use crate::error::{Error, Result};

/// Default cap on fresh draws per assignment before giving up.
pub const DEFAULT_GENERATION_CAP: u64 = 1_000_000;

/// One EV's arrival-time specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvRequest {
    /// Arrival time, minutes.
    pub arrival_time: f64,
    /// Expected departure time, minutes.
    pub departure_time: f64,
    /// Current SOC, dimensionless in [0, 1].
    pub soc: f64,
    /// Lower target SOC threshold.
    pub soc_low: f64,
    /// Upper target SOC threshold.
    pub soc_high: f64,
}

impl EvRequest {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.soc_low && self.soc_low <= self.soc_high && self.soc_high <= 1.0) {
            return Err(Error::Config(format!(
                "target SOC thresholds must satisfy 0 <= low <= high <= 1, got [{}, {}]",
                self.soc_low, self.soc_high
            )));
        }
        if !(0.0..=1.0).contains(&self.soc) {
            return Err(Error::Config(format!("SOC must lie in [0, 1], got {}", self.soc)));
        }
        if !(self.departure_time > self.arrival_time) {
            return Err(Error::Config(format!(
                "departure time {} must exceed arrival time {}",
                self.departure_time, self.arrival_time
            )));
        }
        Ok(())
    }

    /// Expected duration of stay, minutes.
    pub fn stay(&self) -> f64 {
        self.departure_time - self.arrival_time
    }
}

/// How an EV entered a queue; determines the energy to be charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargeMode {
    /// State-1 arrival into RDQ: charge up to the lower threshold.
    Rdq,
    /// External State-2 arrival into RUDQ: charge up to the upper threshold.
    RudqFromOutside,
    /// Transit RDQ -> RUDQ: charge from the lower to the upper threshold.
    RudqFromRdq,
    /// RUQ residency: no active charging, the duration is a connection time.
    Ruq,
}

/// System-wide normalized charging rate limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub low: f64,
    pub high: f64,
}

impl RateBounds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.low && self.low <= self.high) {
            return Err(Error::Config(format!(
                "rate bounds must satisfy 0 <= low <= high, got [{}, {}]",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

/// A service duration adopted for one EV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    /// Service time, minutes.
    pub service_time: f64,
    /// Normalized charging rate; `None` in RUQ mode.
    pub charge_rate: Option<f64>,
    /// SOC to be charged over the service.
    pub energy_delta: f64,
}

/// FIFO store of drawn-but-unadopted candidate service durations.
pub struct ReservoirQueue {
    pending: VecDeque<f64>,
    mean_rate: f64,
    generation_cap: u64,
    total_generated: u64,
    total_adopted: u64,
}

impl ReservoirQueue {
    /// `mean_rate` is the rate of this queue's exponential service law
    /// (mean duration `1/mean_rate` minutes).
    pub fn new(mean_rate: f64) -> Result<Self> {
        Self::with_generation_cap(mean_rate, DEFAULT_GENERATION_CAP)
    }

    pub fn with_generation_cap(mean_rate: f64, generation_cap: u64) -> Result<Self> {
        if !(mean_rate > 0.0) {
            return Err(Error::Config(format!(
                "reservoir mean rate must be > 0, got {mean_rate}"
            )));
        }
        if generation_cap == 0 {
            return Err(Error::Config("generation cap must be positive".into()));
        }
        Ok(Self {
            pending: VecDeque::new(),
            mean_rate,
            generation_cap,
            total_generated: 0,
            total_adopted: 0,
        })
    }

    /// Number of pending candidate durations.
    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn mean_rate(&self) -> f64 {
        self.mean_rate
    }

    /// Total exponential variates ever drawn for this queue.
    pub fn total_generated(&self) -> u64 {
        self.total_generated
    }

    /// Total durations adopted by EVs.
    pub fn total_adopted(&self) -> u64 {
        self.total_adopted
    }

    /// Pending values in FIFO (generation) order.
    pub fn pending(&self) -> impl Iterator<Item = f64> + '_ {
        self.pending.iter().copied()
    }

    #[cfg(test)]
    pub(crate) fn preload(&mut self, values: &[f64]) {
        for &v in values {
            assert!(v > 0.0);
            self.pending.push_back(v);
            self.total_generated += 1;
        }
    }

    /// Assigns a service duration to `ev`: adopts the earliest-generated
    /// qualifying pending value, or draws fresh exponentials (parking
    /// unqualified ones in FIFO order) until one qualifies.
    pub fn assign(
        &mut self,
        ev: &EvRequest,
        bounds: &RateBounds,
        mode: ChargeMode,
        stream: &mut RandomStream,
    ) -> Result<Assignment> {
        let exp = Exp::new(self.mean_rate)
            .map_err(|e| Error::Config(format!("exponential({}): {e}", self.mean_rate)))?;
        let rng = stream.rng();
        self.assign_with(ev, bounds, mode, || exp.sample(rng))
    }

    /// Same as [`assign`](Self::assign) with an injected draw source; used
    /// by tests to script the fresh-draw sequence.
    pub(crate) fn assign_with(
        &mut self,
        ev: &EvRequest,
        bounds: &RateBounds,
        mode: ChargeMode,
        mut draw: impl FnMut() -> f64,
    ) -> Result<Assignment> {
        ev.validate()?;
        bounds.validate()?;
        let energy = energy_needed(ev, mode)?;

        // earliest-generated first: the FIFO front is the oldest value
        if let Some(idx) = self
            .pending
            .iter()
            .position(|&y| qualifies(y, ev, bounds, energy, mode))
        {
            let w = self.pending.remove(idx).expect("index in range");
            self.total_adopted += 1;
            return Ok(self.finish(w, energy, mode));
        }

        for _ in 0..self.generation_cap {
            let z = draw();
            self.total_generated += 1;
            if qualifies(z, ev, bounds, energy, mode) {
                self.total_adopted += 1;
                return Ok(self.finish(z, energy, mode));
            }
            self.pending.push_back(z);
        }
        Err(Error::AssignmentFailure {
            fresh_draws: self.generation_cap,
            reservoir_len: self.pending.len(),
            context: format!(
                "mode {mode:?}, energy {energy}, stay {} min, rate bounds [{}, {}]",
                ev.stay(),
                bounds.low,
                bounds.high
            ),
        })
    }

    fn finish(&self, w: f64, energy: f64, mode: ChargeMode) -> Assignment {
        let charge_rate = match mode {
            ChargeMode::Ruq => None,
            _ => Some(energy / w),
        };
        Assignment {
            service_time: w,
            charge_rate,
            energy_delta: energy,
        }
    }
}

/// SOC to be charged over the service, by entry mode.
pub fn energy_needed(ev: &EvRequest, mode: ChargeMode) -> Result<f64> {
    ev.validate()?;
    let energy = match mode {
        ChargeMode::Rdq => ev.soc_low - ev.soc,
        ChargeMode::RudqFromOutside => ev.soc_high - ev.soc,
        ChargeMode::RudqFromRdq => ev.soc_high - ev.soc_low,
        ChargeMode::Ruq => 0.0,
    };
    if energy < 0.0 {
        return Err(Error::Domain(format!(
            "EV routed to the wrong queue: mode {mode:?} requires nonnegative energy, \
             got {energy} (soc {}, thresholds [{}, {}])",
            ev.soc, ev.soc_low, ev.soc_high
        )));
    }
    Ok(energy)
}

/// Whether any qualifying duration exists at all for this EV: some
/// `y in (0, stay]` with the implied rate inside the bounds. When this is
/// false, drawing more candidates can never succeed.
pub fn feasible(ev: &EvRequest, bounds: &RateBounds, energy: f64, mode: ChargeMode) -> bool {
    let stay = ev.stay();
    if !(stay > 0.0) {
        return false;
    }
    if mode == ChargeMode::Ruq {
        return true;
    }
    if energy == 0.0 {
        // the implied rate is zero for every duration
        return bounds.low == 0.0;
    }
    if !(bounds.high > 0.0) {
        return false;
    }
    let y_min = energy / bounds.high;
    let y_max = if bounds.low > 0.0 {
        stay.min(energy / bounds.low)
    } else {
        stay
    };
    y_min <= y_max
}

/// Probability that a single fresh `Exponential(mean 1/rate)` draw
/// qualifies for this EV. Zero when no duration can qualify at all.
pub fn qualify_probability(
    ev: &EvRequest,
    bounds: &RateBounds,
    energy: f64,
    mode: ChargeMode,
    rate: f64,
) -> f64 {
    if !(rate > 0.0) || !feasible(ev, bounds, energy, mode) {
        return 0.0;
    }
    let stay = ev.stay();
    let (y_min, y_max) = if mode == ChargeMode::Ruq || energy == 0.0 {
        (0.0, stay)
    } else {
        let y_max = if bounds.low > 0.0 {
            stay.min(energy / bounds.low)
        } else {
            stay
        };
        (energy / bounds.high, y_max)
    };
    ((-rate * y_min).exp() - (-rate * y_max).exp()).max(0.0)
}

/// Whether candidate duration `y` fits the EV's stay and, outside RUQ, keeps
/// the implied charging rate within bounds.
pub fn qualifies(y: f64, ev: &EvRequest, bounds: &RateBounds, energy: f64, mode: ChargeMode) -> bool {
    if !(y > 0.0) || y > ev.stay() {
        return false;
    }
    if mode == ChargeMode::Ruq {
        return true;
    }
    let rate = energy / y;
    bounds.low <= rate && rate <= bounds.high
}
