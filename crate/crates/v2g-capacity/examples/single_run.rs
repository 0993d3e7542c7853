//! One simulated day of the reference scenario: run a single replication,
//! print the state at a few sample times, and compare the steady-state
//! averages against the closed-form model.
//!
//! Run with `cargo run --release --example single_run`.

use std::path::Path;

use v2g_capacity::analytic::{capacities, expected_counts, NetworkParams};
use v2g_capacity::des::{self, QueueId};
use v2g_capacity::scenario::load_scenario;
use v2g_capacity::stats::steady_mean;

fn main() -> v2g_capacity::Result<()> {
    let config = load_scenario(Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/scenarios/reference.cfg"
    )))?;
    let trace = des::run(&config, 42, config.horizon, 1.0)?;

    println!("time_min    n1    n2    n3   c_rd_kw   c_ru_kw");
    for &t in &[0.0, 60.0, 200.0, 480.0, 960.0, 1440.0] {
        let i = trace.times.iter().position(|&x| x == t).unwrap();
        println!(
            "{:8} {:5} {:5} {:5} {:9.0} {:9.0}",
            t, trace.n1[i], trace.n2[i], trace.n3[i], trace.c_rd_inst[i], trace.c_ru_inst[i]
        );
    }

    let warmup = config.warmup;
    let n1 = steady_mean(&trace.count_series(QueueId::Rdq), warmup)?;
    let n2 = steady_mean(&trace.count_series(QueueId::Rudq), warmup)?;
    let n3 = steady_mean(&trace.count_series(QueueId::Ruq), warmup)?;
    let c_rd = steady_mean(&trace.capacity_series(true), warmup)?;
    let c_ru = steady_mean(&trace.capacity_series(false), warmup)?;

    // closed-form model at the splitting fractions this run actually saw
    let (p1, p2, p3) = trace.empirical.state_fractions().unwrap();
    let params = NetworkParams {
        lambda: config.lambda,
        p1,
        p2,
        p3,
        q1: trace.empirical.q1_fraction().unwrap_or(config.q1),
        q2: trace.empirical.q2_fraction().unwrap_or(config.q2),
        mu1: config.mu1,
        mu2: config.mu2,
        mu3: config.mu3,
        p_ev: config.p_ev,
    };
    let (l1, l2, l3) = expected_counts(&params)?;
    let (c_rd_ana, c_ru_ana) = capacities(config.p_ev, l1, l2, l3);

    println!("\nsteady state after a {warmup}-minute warm-up:");
    println!("  queue counts  sim ({n1:.1}, {n2:.1}, {n3:.1})  model ({l1:.1}, {l2:.1}, {l3:.1})");
    println!("  C_RD          sim {c_rd:.0} kW  model {c_rd_ana:.0} kW");
    println!("  C_RU          sim {c_ru:.0} kW  model {c_ru_ana:.0} kW");
    println!(
        "\n{} arrivals, {} departures, observed (p1, p2, p3) = ({p1:.3}, {p2:.3}, {p3:.3})",
        trace.empirical.arrivals, trace.empirical.departures
    );
    Ok(())
}
