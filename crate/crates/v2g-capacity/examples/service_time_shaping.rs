//! Checks that the smart-charging mechanism really shapes service times
//! into the target exponential distributions: pool the adopted durations of
//! several replications per queue and run a Kolmogorov-Smirnov test against
//! Exponential(mu_k), and report how large the recycling reservoirs got.
//!
//! Run with `cargo run --release --example service_time_shaping`.

use v2g_capacity::des::QueueId;
use v2g_capacity::experiment::run_batch;
use v2g_capacity::scenario::ScenarioConfig;
use v2g_capacity::stats::ks_exponential;

fn main() -> v2g_capacity::Result<()> {
    let mut config = ScenarioConfig::reference();
    config.replications = 10;

    let batch = run_batch(&config, 7, 1.0)?;

    println!("queue  target mean  sample mean      n    KS stat   p-value");
    for (queue, mu) in [
        (QueueId::Rdq, config.mu1),
        (QueueId::Rudq, config.mu2),
        (QueueId::Ruq, config.mu3),
    ] {
        let samples = batch.pooled_adopted(queue);
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let ks = ks_exponential(&samples, mu)?;
        println!(
            "{:5?} {:11.1} {:12.2} {:6} {:10.4} {:9.3}",
            queue,
            1.0 / mu,
            mean,
            ks.sample_size,
            ks.statistic,
            ks.p_value
        );
    }

    let peak = batch.pooled.max_reservoir_len;
    let gen = batch.pooled.reservoir_generated;
    let adopted = batch.pooled.reservoir_adopted;
    println!("\nreservoir peak lengths: {peak:?}");
    println!("candidate durations generated: {gen:?}, adopted: {adopted:?}");
    Ok(())
}
