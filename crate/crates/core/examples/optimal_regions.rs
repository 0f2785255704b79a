//! Which scheme the mixed optimum picks over the relay-gain plane, for two
//! budgets. Larger budgets favour the direct link.
//!
//! Run with `cargo run --release --example optimal_regions`.

use std::collections::BTreeMap;

use df_relay::cli::{region_cells, Axis, Scenario};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut s = Scenario::default();
    s.region_h_sr = Axis { from: 2.0, to: 10.0, steps: 9 };
    s.region_h_rd = Axis { from: 0.5, to: 10.0, steps: 9 };
    for p0 in [1.0, 2.0] {
        s.p0 = p0;
        let cells = region_cells(&s)?;
        let mut counts = BTreeMap::new();
        for c in &cells {
            *counts.entry(c.winner).or_insert(0) += 1;
        }
        println!("P_0 = {p0}: {counts:?}");
        for row in cells.chunks(s.region_h_rd.steps) {
            let line: String = row.iter().map(|c| c.winner.chars().next().unwrap()).collect();
            println!("  h_sr = {:>5.2}  {line}", row[0].h_sr);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
