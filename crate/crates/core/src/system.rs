//! Materials, bodies and whole-system configuration.
//!
//! Temperatures are in °C throughout. Every model equation works on
//! temperature differences, so the Celsius offset never matters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::PowerProfile;

/// Isotropic, temperature-independent solid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMaterial", into = "RawMaterial")]
pub struct Material {
    name: String,
    density: f64,
    specific_heat: f64,
    conductivity: f64,
}

#[derive(Serialize, Deserialize)]
struct RawMaterial {
    name: String,
    density: f64,
    specific_heat: f64,
    conductivity: f64,
}

impl Material {
    pub fn new(name: impl Into<String>, density: f64, specific_heat: f64, conductivity: f64) -> Result<Self> {
        for (field, value) in [
            ("density", density),
            ("specific_heat", specific_heat),
            ("conductivity", conductivity),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(
                    format!("material.{field}"),
                    format!("must be positive, got {value}"),
                ));
            }
        }
        Ok(Self {
            name: name.into(),
            density,
            specific_heat,
            conductivity,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// kg/m³
    pub fn density(&self) -> f64 {
        self.density
    }

    /// J/(kg·K)
    pub fn specific_heat(&self) -> f64 {
        self.specific_heat
    }

    /// W/(m·K)
    pub fn conductivity(&self) -> f64 {
        self.conductivity
    }

    /// Volumetric heat capacity ρ·c_p in J/(m³·K).
    pub fn volumetric_heat_capacity(&self) -> f64 {
        self.density * self.specific_heat
    }

    /// Thermal diffusivity k/(ρ·c_p) in m²/s.
    pub fn diffusivity(&self) -> f64 {
        self.conductivity / self.volumetric_heat_capacity()
    }

    /// Silver-like metal.
    pub fn silver() -> Self {
        Self::new("silver", 10500.0, 235.0, 429.0).unwrap()
    }

    /// Glass-epoxy laminate (FR4-like, through-plane conductivity).
    pub fn fr4() -> Self {
        Self::new("fr4", 1850.0, 1100.0, 0.3).unwrap()
    }

    /// Copper-tin bronze.
    pub fn cu_bronze() -> Self {
        Self::new("cu-bronze", 8800.0, 380.0, 50.0).unwrap()
    }

    pub fn copper() -> Self {
        Self::new("copper", 8933.0, 385.0, 401.0).unwrap()
    }

    pub fn aluminium() -> Self {
        Self::new("aluminium", 2700.0, 897.0, 237.0).unwrap()
    }
}

impl TryFrom<RawMaterial> for Material {
    type Error = Error;

    fn try_from(raw: RawMaterial) -> Result<Self> {
        Self::new(raw.name, raw.density, raw.specific_heat, raw.conductivity)
    }
}

impl From<Material> for RawMaterial {
    fn from(m: Material) -> Self {
        Self {
            name: m.name,
            density: m.density,
            specific_heat: m.specific_heat,
            conductivity: m.conductivity,
        }
    }
}

/// Axis-aligned box: `origin` is the minimum corner, `size` the edge lengths (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub origin: [f64; 3],
    pub size: [f64; 3],
}

impl Cuboid {
    pub fn new(origin: [f64; 3], size: [f64; 3]) -> Self {
        Self { origin, size }
    }

    pub fn max_corner(&self) -> [f64; 3] {
        std::array::from_fn(|a| self.origin[a] + self.size[a])
    }

    pub fn center(&self) -> [f64; 3] {
        std::array::from_fn(|a| self.origin[a] + 0.5 * self.size[a])
    }

    pub fn volume(&self) -> f64 {
        self.size.iter().product()
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let hi = self.max_corner();
        (0..3).all(|a| p[a] >= self.origin[a] && p[a] <= hi[a])
    }

    /// Volume of the intersection with `other`; zero for face contact.
    pub fn overlap_volume(&self, other: &Cuboid) -> f64 {
        let (ahi, bhi) = (self.max_corner(), other.max_corner());
        (0..3)
            .map(|a| (ahi[a].min(bhi[a]) - self.origin[a].max(other.origin[a])).max(0.0))
            .product()
    }
}

/// A solid body with a uniformly distributed power source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBody", into = "RawBody")]
pub struct BodySpec {
    id: String,
    bounds: Cuboid,
    material: Material,
    power: PowerProfile,
    probe: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct RawBody {
    id: String,
    #[serde(rename = "box")]
    bounds: Cuboid,
    material: Material,
    #[serde(default)]
    power: PowerProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probe: Option<[f64; 3]>,
}

impl BodySpec {
    /// A body probed at its center.
    pub fn new(id: impl Into<String>, bounds: Cuboid, material: Material, power: PowerProfile) -> Result<Self> {
        let probe = bounds.center();
        Self::with_probe(id, bounds, material, power, probe)
    }

    pub fn with_probe(
        id: impl Into<String>,
        bounds: Cuboid,
        material: Material,
        power: PowerProfile,
        probe: [f64; 3],
    ) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::config("id", "body id must not be empty"));
        }
        if bounds.size.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::config(
                "box.size",
                format!("all components must be positive, got {:?}", bounds.size),
            ));
        }
        if bounds.origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::config("box.origin", "must be finite"));
        }
        if !bounds.contains(probe) {
            return Err(Error::config(
                "probe",
                format!("probe {probe:?} lies outside the body box"),
            ));
        }
        Ok(Self {
            id,
            bounds,
            material,
            power,
            probe,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn bounds(&self) -> &Cuboid {
        &self.bounds
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn power(&self) -> &PowerProfile {
        &self.power
    }

    pub fn probe(&self) -> [f64; 3] {
        self.probe
    }

    pub fn volume(&self) -> f64 {
        self.bounds.volume()
    }

    /// Replaces the power schedule, keeping everything else.
    pub fn with_power(&self, power: PowerProfile) -> Self {
        Self { power, ..self.clone() }
    }

    /// ρ·c_p·V in J/K.
    pub fn thermal_capacitance(&self) -> f64 {
        thermal_capacitance(self)
    }
}

impl TryFrom<RawBody> for BodySpec {
    type Error = Error;

    fn try_from(raw: RawBody) -> Result<Self> {
        let probe = raw.probe.unwrap_or_else(|| raw.bounds.center());
        Self::with_probe(raw.id, raw.bounds, raw.material, raw.power, probe)
    }
}

impl From<BodySpec> for RawBody {
    fn from(b: BodySpec) -> Self {
        Self {
            id: b.id,
            bounds: b.bounds,
            material: b.material,
            power: b.power,
            probe: Some(b.probe),
        }
    }
}

/// ρ·c_p·V of a body in J/K.
pub fn thermal_capacitance(body: &BodySpec) -> f64 {
    body.material.volumetric_heat_capacity() * body.volume()
}

/// Outer boundary condition of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Boundary {
    /// Zero flux through every exposed face.
    Insulated,
    /// Robin exchange `h·A·(T_ambient − T_surface)` on every exposed face.
    Convection {
        /// W/(m²·K)
        h: f64,
        /// °C
        ambient: f64,
        /// Lumped fluid capacitance (J/K) counted in the total capacitance.
        #[serde(default)]
        fluid_capacitance: f64,
    },
}

impl Boundary {
    pub fn fluid_capacitance(&self) -> f64 {
        match *self {
            Boundary::Insulated => 0.0,
            Boundary::Convection { fluid_capacitance, .. } => fluid_capacitance,
        }
    }
}

/// A validated set of bodies with a boundary condition and initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem", into = "RawSystem")]
pub struct SystemConfig {
    bodies: Vec<BodySpec>,
    boundary: Boundary,
    initial_temperature: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSystem {
    bodies: Vec<BodySpec>,
    boundary: Boundary,
    initial_temperature: f64,
}

impl SystemConfig {
    pub fn new(bodies: Vec<BodySpec>, boundary: Boundary, initial_temperature: f64) -> Result<Self> {
        if bodies.is_empty() {
            return Err(Error::config("bodies", "at least one body is required"));
        }
        if !initial_temperature.is_finite() {
            return Err(Error::config("initial_temperature", "must be finite"));
        }
        for (i, a) in bodies.iter().enumerate() {
            for (j, b) in bodies.iter().enumerate().skip(i + 1) {
                if a.id == b.id {
                    return Err(Error::config(
                        format!("bodies[{j}].id"),
                        format!("duplicate body id `{}`", b.id),
                    ));
                }
                // Relative slack so that face contact computed in floating point
                // is not mistaken for overlap.
                let scale = a.volume().min(b.volume());
                if a.bounds.overlap_volume(&b.bounds) > 1e-9 * scale {
                    return Err(Error::config(
                        format!("bodies[{j}].box"),
                        format!("overlaps body `{}`", a.id),
                    ));
                }
            }
        }
        if let Boundary::Convection {
            h,
            ambient,
            fluid_capacitance,
        } = boundary
        {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::config("boundary.h", format!("must be positive, got {h}")));
            }
            if !ambient.is_finite() {
                return Err(Error::config("boundary.ambient", "must be finite"));
            }
            if !(fluid_capacitance.is_finite() && fluid_capacitance >= 0.0) {
                return Err(Error::config(
                    "boundary.fluid_capacitance",
                    format!("must be non-negative, got {fluid_capacitance}"),
                ));
            }
        }
        Ok(Self {
            bodies,
            boundary,
            initial_temperature,
        })
    }

    pub fn bodies(&self) -> &[BodySpec] {
        &self.bodies
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn initial_temperature(&self) -> f64 {
        self.initial_temperature
    }

    pub fn body_index(&self, id: &str) -> Option<usize> {
        self.bodies.iter().position(|b| b.id == id)
    }

    /// Σ C_body plus the fluid capacitance for convective systems.
    pub fn total_capacitance(&self) -> f64 {
        self.bodies.iter().map(thermal_capacitance).sum::<f64>() + self.boundary.fluid_capacitance()
    }

    /// Indices of bodies whose schedule is non-zero somewhere.
    pub fn source_indices(&self) -> Vec<usize> {
        self.bodies
            .iter()
            .enumerate()
            .filter(|(_, b)| !b.power.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    /// The same system with each body's schedule replaced.
    pub fn with_powers(&self, powers: Vec<PowerProfile>) -> Self {
        assert_eq!(powers.len(), self.bodies.len(), "one schedule per body");
        Self {
            bodies: self.bodies.iter().zip(powers).map(|(b, p)| b.with_power(p)).collect(),
            ..self.clone()
        }
    }

    /// Slope of the linear temperature curve at `t` in K/s.
    pub fn slope_total(&self, t: f64) -> f64 {
        slope_total(&self.bodies, self.boundary.fluid_capacitance(), t)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl TryFrom<RawSystem> for SystemConfig {
    type Error = Error;

    fn try_from(raw: RawSystem) -> Result<Self> {
        Self::new(raw.bodies, raw.boundary, raw.initial_temperature)
    }
}

impl From<SystemConfig> for RawSystem {
    fn from(s: SystemConfig) -> Self {
        Self {
            bodies: s.bodies,
            boundary: s.boundary,
            initial_temperature: s.initial_temperature,
        }
    }
}

/// (Σ P_i(t)) / (Σ C_i + C_fluid): the rate at which the capacitance-weighted
/// mean temperature rises.
pub fn slope_total(bodies: &[BodySpec], fluid_capacitance: f64, t: f64) -> f64 {
    let power: f64 = bodies.iter().map(|b| b.power.power_at(t)).sum();
    let capacitance: f64 = bodies.iter().map(thermal_capacitance).sum::<f64>() + fluid_capacitance;
    power / capacitance
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cube(id: &str, origin: [f64; 3], side: f64, mat: Material, watts: f64) -> BodySpec {
        BodySpec::new(id, Cuboid::new(origin, [side; 3]), mat, PowerProfile::constant(watts)).unwrap()
    }

    #[test]
    fn capacitance_of_silver_like_cube() {
        let m = Material::new("ag", 10500.0, 235.0, 429.0).unwrap();
        let b = cube("a", [0.0; 3], 0.01, m, 0.0);
        assert_relative_eq!(thermal_capacitance(&b), 2.4675, max_relative = 1e-12);
    }

    #[test]
    fn unit_cube_unit_material() {
        let m = Material::new("unit", 1.0, 1.0, 1.0).unwrap();
        let b = cube("a", [0.0; 3], 1.0, m, 0.0);
        assert_eq!(thermal_capacitance(&b), 1.0);
    }

    #[test]
    fn capacitance_is_linear_in_volume() {
        let m = Material::fr4();
        let a = BodySpec::new(
            "a",
            Cuboid::new([0.0; 3], [0.01, 0.02, 0.03]),
            m.clone(),
            PowerProfile::zero(),
        )
        .unwrap();
        let b = BodySpec::new("b", Cuboid::new([0.0; 3], [0.02, 0.02, 0.03]), m, PowerProfile::zero()).unwrap();
        assert_relative_eq!(
            b.thermal_capacitance(),
            2.0 * a.thermal_capacitance(),
            max_relative = 1e-14
        );
    }

    fn unit_mat(rho_cp: f64) -> Material {
        Material::new("m", rho_cp, 1.0, 1.0).unwrap()
    }

    #[test]
    fn slope_of_two_bodies() {
        let a = cube("a", [0.0; 3], 1.0, unit_mat(10.0), 2.0);
        let b = cube("b", [1.0, 0.0, 0.0], 1.0, unit_mat(30.0), 0.0);
        assert_relative_eq!(slope_total(&[a, b], 0.0, 5.0), 0.05, max_relative = 1e-14);
    }

    #[test]
    fn slope_zero_power() {
        let a = cube("a", [0.0; 3], 1.0, unit_mat(10.0), 0.0);
        assert_eq!(slope_total(&[a], 0.0, 1.0), 0.0);
    }

    #[test]
    fn slope_single_body() {
        let a = cube("a", [0.0; 3], 0.02, Material::copper(), 3.0);
        let expect = 3.0 / a.thermal_capacitance();
        assert_relative_eq!(slope_total(&[a], 0.0, 0.0), expect, max_relative = 1e-14);
    }

    #[test]
    fn convection_slope_counts_fluid() {
        let a = cube("a", [0.0; 3], 1.0, unit_mat(10.0), 2.0);
        let sys = SystemConfig::new(
            vec![a],
            Boundary::Convection {
                h: 10.0,
                ambient: 20.0,
                fluid_capacitance: 30.0,
            },
            20.0,
        )
        .unwrap();
        assert_relative_eq!(sys.slope_total(0.0), 0.05, max_relative = 1e-14);
    }

    #[test]
    fn validation_errors() {
        assert!(Material::new("x", 0.0, 1.0, 1.0).is_err());
        assert!(Material::new("x", 1.0, -1.0, 1.0).is_err());
        let bad_size = BodySpec::new(
            "a",
            Cuboid::new([0.0; 3], [1.0, 0.0, 1.0]),
            unit_mat(1.0),
            PowerProfile::zero(),
        );
        assert!(bad_size.is_err());
        let bad_probe = BodySpec::with_probe(
            "a",
            Cuboid::new([0.0; 3], [1.0; 3]),
            unit_mat(1.0),
            PowerProfile::zero(),
            [2.0, 0.5, 0.5],
        );
        assert!(bad_probe.is_err());

        let a = cube("a", [0.0; 3], 1.0, unit_mat(1.0), 0.0);
        let overlapping = cube("b", [0.5, 0.0, 0.0], 1.0, unit_mat(1.0), 0.0);
        let err = SystemConfig::new(vec![a.clone(), overlapping], Boundary::Insulated, 20.0).unwrap_err();
        assert!(err.to_string().contains("bodies[1].box"), "{err}");

        let touching = cube("b", [1.0, 0.0, 0.0], 1.0, unit_mat(1.0), 0.0);
        assert!(SystemConfig::new(vec![a.clone(), touching], Boundary::Insulated, 20.0).is_ok());

        let dup = cube("a", [3.0, 0.0, 0.0], 1.0, unit_mat(1.0), 0.0);
        assert!(SystemConfig::new(vec![a.clone(), dup], Boundary::Insulated, 20.0).is_err());

        let bad_h = Boundary::Convection {
            h: 0.0,
            ambient: 20.0,
            fluid_capacitance: 0.0,
        };
        assert!(SystemConfig::new(vec![a.clone()], bad_h, 20.0).is_err());
        let bad_cf = Boundary::Convection {
            h: 5.0,
            ambient: 20.0,
            fluid_capacitance: -1.0,
        };
        assert!(SystemConfig::new(vec![a], bad_cf, 20.0).is_err());
        assert!(SystemConfig::new(vec![], Boundary::Insulated, 20.0).is_err());
    }

    #[test]
    fn json_schema_round_trip() {
        let text = r#"{
            "initial_temperature": 20.0,
            "boundary": {"type": "convection", "h": 21.83, "ambient": 20.0},
            "bodies": [{
                "id": "block",
                "box": {"origin": [0, 0, 0], "size": [0.005, 0.005, 0.005]},
                "material": {"name": "cu", "density": 8900, "specific_heat": 380, "conductivity": 200},
                "power": [{"start_time": 0, "watts": 0.1}]
            }]
        }"#;
        let sys = SystemConfig::from_json(text).unwrap();
        assert_eq!(sys.bodies()[0].probe(), [0.0025; 3]);
        assert_eq!(sys.boundary().fluid_capacitance(), 0.0);
        let back = SystemConfig::from_json(&sys.to_json().unwrap()).unwrap();
        assert_eq!(back, sys);
    }

    #[test]
    fn json_errors_carry_position() {
        let text = "{\n  \"initial_temperature\": 20,\n  \"boundary\": {\"type\": \"insulated\"},\n  \"bodies\": [{\"id\": \"a\", \"box\": {\"origin\": [0,0,0], \"size\": [1,1,1]},\n   \"material\": {\"name\": \"m\", \"density\": -1, \"specific_heat\": 1, \"conductivity\": 1}}]\n}";
        let err = SystemConfig::from_json(text).unwrap_err().to_string();
        assert!(err.contains("density"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    proptest! {
        #[test]
        fn slope_permutation_and_scaling(
            caps in prop::collection::vec(0.5f64..50.0, 1..5),
            watts in prop::collection::vec(0.0f64..10.0, 5),
            factor in 0.0f64..10.0,
            rot in 0usize..5,
        ) {
            let bodies: Vec<BodySpec> = caps.iter().enumerate().map(|(i, &c)| {
                cube(&format!("b{i}"), [i as f64, 0.0, 0.0], 1.0, unit_mat(c), watts[i])
            }).collect();
            let base = slope_total(&bodies, 0.0, 0.0);
            let mut rotated = bodies.clone();
            rotated.rotate_left(rot % bodies.len());
            prop_assert!((slope_total(&rotated, 0.0, 0.0) - base).abs() <= 1e-12 * base.abs().max(1e-300));
            let scaled: Vec<BodySpec> = bodies.iter().map(|b| b.with_power(b.power().scaled(factor))).collect();
            let s = slope_total(&scaled, 0.0, 0.0);
            prop_assert!((s - factor * base).abs() <= 1e-12 * (factor * base).abs().max(1e-300));
        }
    }
}
