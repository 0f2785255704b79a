//! Relay-assisted transmission without a direct link, compared with the
//! relay scheme that also uses the direct link.
//!
//! Run with `cargo run --example rat_wdl`.

use df_relay::rat_dl::RatDlSolver;
use df_relay::rat_wdl::RatWdlSolver;
use df_relay::{ChannelGains, CircuitModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = ChannelGains::new(1.0, 10.0, 3.0)?;
    let cm = CircuitModel::from_aggregates(0.2, 0.24, 0.18)?;
    let wdl = RatWdlSolver::new(&g, &cm)?;
    let rat = RatDlSolver::new(&g, &cm)?;
    println!("P_ee5 = {:.6} W, constant transmission above {:.4} W", wdl.p_ee5(), wdl.breakpoint());
    println!("{:>6} {:>8} {:>8} {:>8} {:>8}", "P", "p_s", "p_r", "C_E", "C_R");
    for p in [0.2, 0.5, 1.0, 4.0, 1024.0] {
        let s = wdl.solve(p)?;
        println!("{p:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4}", s.p_s, s.p_r, s.throughput, rat.throughput(p));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
