//! Relay-assisted transmission with direct link: which of the four cases
//! is optimal as the budget grows, and where the case changes.
//!
//! Run with `cargo run --example rat_dl_cases`.

use df_relay::rat_dl::RatDlSolver;
use df_relay::{ChannelGains, CircuitModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = ChannelGains::new(1.0, 10.0, 3.0)?;
    let cm = CircuitModel::from_aggregates(0.2, 0.24, 0.18)?;
    let rat = RatDlSolver::new(&g, &cm)?;
    println!("P_ee2 = {:.6}, P_ee3 = {:.6}, P_ee4 = {:.6}", rat.p_ee2(), rat.p_ee3(), rat.p_ee4());
    let c = rat.conditions(0.5);
    println!("at P_B = 0.5: S1={} S2={} S3={} S4={}", c.s1, c.s2, c.s3, c.s4);
    for bp in rat.breakpoints(4.0, 4000) {
        println!("P_B = {:.6}: {} -> {}", bp.p_b, bp.before, bp.after);
    }
    for p_b in [0.3, 0.5, 1.0, 2.0] {
        let s = rat.solve(p_b)?;
        println!(
            "P_B = {p_b:.2}: {:<22} p_s = {:.4} p_r = {:.4} prob = {:.3} C_R = {:.5}",
            s.case.label(),
            s.p_s,
            s.p_r,
            s.prob,
            s.throughput
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
