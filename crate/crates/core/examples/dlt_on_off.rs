//! Direct-link transmission: on-off bursts at `P_ee1` below the breakpoint,
//! constant transmission above it.
//!
//! Run with `cargo run --example dlt_on_off`.

use df_relay::dlt::DltSolver;
use df_relay::{ChannelGains, CircuitModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = ChannelGains::new(1.0, 10.0, 3.0)?;
    let cm = CircuitModel::from_aggregates(0.2, 0.24, 0.18)?;
    let dlt = DltSolver::new(&g, &cm)?;
    println!("P_ee1 = {:.6} W, peak EE = {:.5} b/s/Hz/W", dlt.p_ee1(), dlt.ee_max());
    println!("on-off below P_A = {:.4} W", dlt.breakpoint());
    println!("{:>6} {:>8} {:>6} {:>10}", "P_A", "p_s", "prob", "C_D");
    for p_a in [0.1, 0.45, 0.8, 1.5, 5.2] {
        let a = dlt.solve(p_a)?.alloc;
        println!("{p_a:>6.2} {:>8.4} {:>6.3} {:>10.5}", a.p_s, a.prob, a.throughput);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
