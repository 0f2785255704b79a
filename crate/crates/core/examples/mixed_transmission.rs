//! Mixed transmission: common tangents between the direct-link and relay
//! curves, and the resulting budget split.
//!
//! Run with `cargo run --example mixed_transmission`.

use df_relay::mixed::MixedSolver;
use df_relay::{ChannelGains, CircuitModel};

fn show(name: &str, g: ChannelGains, cm: CircuitModel, budgets: &[f64]) -> Result<(), Box<dyn std::error::Error>> {
    let m = MixedSolver::new(&g, &cm)?;
    println!("{name}: {}", m.case());
    for t in &m.structure().tangents {
        println!("  tangent: C_D at {:.4} W, C_R at {:.4} W, slope {:.5}", t.a, t.b, t.slope(m.dlt()));
    }
    for &p in budgets {
        let s = m.solve(p)?;
        println!(
            "  P_0 = {p:>7.3}: {:<6} theta = {:.4} P_A = {:.4} P_B = {:.4} C_M = {:.5}",
            s.winner().label(),
            s.theta_star,
            s.p_a_star,
            s.p_b_star,
            s.throughput
        );
    }
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    show(
        "strong relay",
        ChannelGains::new(1.0, 10.0, 3.0)?,
        CircuitModel::from_aggregates(0.2, 0.24, 0.18)?,
        &[0.5, 5.0, 15.0, 30.0],
    )?;
    show(
        "costly relay",
        ChannelGains::new(1.65, 6.95, 7.87)?,
        CircuitModel::from_aggregates(0.098, 0.483, 0.483)?,
        &[0.3, 0.9, 1.8, 3.0, 6.0],
    )?;
    show(
        "weak relay",
        ChannelGains::new(1.0, 2.05, 0.5)?,
        CircuitModel::from_aggregates(0.1, 1.5, 1.4)?,
        &[0.5, 5.0],
    )
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
