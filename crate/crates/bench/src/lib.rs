//! Fixtures shared by the benchmarks.

use thermrom_core::{BodySpec, Boundary, Cuboid, Material, PowerProfile, SystemConfig};

/// Silver bar next to an FR4-like bar, both powered by piecewise schedules.
pub fn desk_system() -> SystemConfig {
    let fr4 = Material::new("fr4-inplane", 1850.0, 1100.0, 0.8).expect("valid material");
    let silver_power =
        PowerProfile::from_pairs(&[(0.0, 0.006), (30.0, 0.0), (60.0, 0.003), (90.0, 0.009)]).expect("valid");
    let fr4_power = PowerProfile::from_pairs(&[(0.0, 0.0), (45.0, 0.0015)]).expect("valid");
    let bodies = vec![
        BodySpec::new(
            "silver",
            Cuboid::new([0.0; 3], [0.01, 0.0008, 0.0008]),
            Material::silver(),
            silver_power,
        )
        .expect("valid"),
        BodySpec::new(
            "fr4",
            Cuboid::new([0.01, 0.0, 0.0], [0.002, 0.0008, 0.0008]),
            fr4,
            fr4_power,
        )
        .expect("valid"),
    ];
    SystemConfig::new(bodies, Boundary::Insulated, 20.0).expect("valid system")
}

/// Cube of `n³` cells with a single powered copper body.
pub fn copper_cube(n: usize, dx: f64) -> SystemConfig {
    let side = n as f64 * dx;
    let body = BodySpec::new(
        "cube",
        Cuboid::new([0.0; 3], [side; 3]),
        Material::copper(),
        PowerProfile::constant(1.0),
    )
    .expect("valid");
    SystemConfig::new(
        vec![body],
        Boundary::Convection {
            h: 50.0,
            ambient: 20.0,
            fluid_capacitance: 0.0,
        },
        20.0,
    )
    .expect("valid system")
}
