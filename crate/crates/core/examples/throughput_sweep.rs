//! Throughput of every scheme against the budget, as CSV.
//!
//! Run with `cargo run --example throughput_sweep > curves.csv`.

use df_relay::cli::{sweep_rows, Scenario, SWEEP_HEADER};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut s = Scenario::default();
    s.sweep.steps = 12;
    println!("{SWEEP_HEADER}");
    for row in sweep_rows(&s)? {
        println!("{}", row.to_csv());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
