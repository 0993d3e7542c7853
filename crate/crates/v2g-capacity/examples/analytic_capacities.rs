//! Closed-form evaluation of the reference network: per-queue flows,
//! expected EV counts, the occupancy distribution, and the regulation
//! capacities.
//!
//! Run with `cargo run --example analytic_capacities`.

use v2g_capacity::analytic::{evaluate, occupancy_pmf, NetworkParams};

fn main() -> v2g_capacity::Result<()> {
    // Reference parking structure: 5 arrivals/min, mean service times of
    // 50 / 70 / 30 minutes, 10% quit fractions, 6 kW per EV.
    let params = NetworkParams {
        lambda: 5.0,
        p1: 0.5,
        p2: 0.4,
        p3: 0.1,
        q1: 0.1,
        q2: 0.1,
        mu1: 1.0 / 50.0,
        mu2: 1.0 / 70.0,
        mu3: 1.0 / 30.0,
        p_ev: 6.0,
    };
    let r = evaluate(&params)?;

    println!("arrival splitting (per minute):");
    println!("  RDQ   {:.3}", r.flows.lambda1);
    println!("  RUDQ  {:.3} external + {:.3} from RDQ", r.flows.lambda2, r.flows.lambda12);
    println!("  RUQ   {:.3} external + {:.3} from RUDQ", r.flows.lambda3, r.flows.lambda23);
    println!("  departures {:.3} (= lambda, flow conservation)", r.departure_rate);

    println!("\nexpected EV counts: L1 = {:.2}, L2 = {:.2}, L3 = {:.2}", r.l1, r.l2, r.l3);
    println!("regulation-down capacity: {:.2} kW", r.c_rd);
    println!("regulation-up capacity:   {:.2} kW", r.c_ru);

    // Each queue's occupancy is Poisson; show how concentrated RDQ is
    // around its mean.
    let mean = r.l1;
    println!("\nRDQ occupancy probabilities near the mean ({mean:.1}):");
    for n in [100u64, 115, 125, 135, 150] {
        let p = occupancy_pmf(params.p1 * params.lambda, params.mu1, n)?;
        println!("  P(N1 = {n:3}) = {p:.5}");
    }
    Ok(())
}
