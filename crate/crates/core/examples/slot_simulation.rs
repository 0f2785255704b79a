//! Slotted Monte-Carlo check of the optimal relay policy and the
//! constant-power baselines.
//!
//! Run with `cargo run --release --example slot_simulation`.

use df_relay::rat_dl::RatDlSolver;
use df_relay::sim::{baseline_cdlt, baseline_crat_dl, simulate, simulate_with, Schedule};
use df_relay::{ChannelGains, CircuitModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = ChannelGains::new(1.0, 10.0, 3.0)?;
    let cm = CircuitModel::from_aggregates(0.2, 0.24, 0.18)?;
    let alloc = RatDlSolver::new(&g, &cm)?.solve(0.5)?.alloc;
    for schedule in [Schedule::Bernoulli, Schedule::DutyCycle] {
        let r = simulate_with(&alloc, &g, &cm, 200_000, 42, schedule)?;
        println!(
            "{schedule:?}: throughput {:.5} vs {:.5} (z = {:+.2}), power {:.5} of {:.2}",
            r.empirical_throughput,
            r.analytic_throughput,
            r.throughput_z(),
            r.empirical_avg_power,
            r.budget
        );
    }
    for (name, a) in [("CDLT", baseline_cdlt(0.5, &g, &cm)), ("CRAT-DL", baseline_crat_dl(0.5, &g, &cm)?)] {
        let r = simulate(&a, &g, &cm, 10_000, 1)?;
        println!("{name}: throughput {:.5}", r.empirical_throughput);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
