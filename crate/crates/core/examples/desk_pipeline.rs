//! Characterize the two-body desk configuration, predict its schedule with the
//! reduced-order model and score the prediction against the oracle.
//!
//! `cargo run --release -p thermrom-core --example desk_pipeline`

use std::time::Instant;

use thermrom_core::oracle::sample_times;
use thermrom_core::rom::predict;
use thermrom_core::{characterize, compare::Runtimes, compare_traces, simulate, PowerProfile, SystemConfig};

fn main() -> thermrom_core::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/desk_two_body.json");
    let system = SystemConfig::from_json(&std::fs::read_to_string(path)?)?;
    let dx = 0.0004;

    let ch = characterize(&system, 20.0, dx)?;
    println!("R = {:?}", ch.model.r_char());
    println!("k = {:?}", ch.model.k());

    let start = Instant::now();
    let oracle = simulate(&system, 120.0, dx, 0.5)?;
    let oracle_s = start.elapsed().as_secs_f64();

    let profiles: Vec<PowerProfile> = system.bodies().iter().map(|b| b.power().clone()).collect();
    let times = sample_times(120.0, 0.5);
    let start = Instant::now();
    let rom = predict(&ch.model, &profiles, &times)?;
    let rom_s = start.elapsed().as_secs_f64();

    let report =
        compare_traces(&oracle, &rom, system.initial_temperature())?.with_runtimes(Runtimes::new(oracle_s, rom_s));
    print!("{report}");
    Ok(())
}
