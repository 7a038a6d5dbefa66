use approx::assert_relative_eq;
use thermrom_core::charfit::{characterize_from_trials, run_trials, FitStatus, TrialOptions};
use thermrom_core::rom::predict;
use thermrom_core::*;

const DX: f64 = 0.0005;

fn bar(id: &str, x0: f64, len: f64, m: Material, p: PowerProfile) -> BodySpec {
    BodySpec::new(id, Cuboid::new([x0, 0.0, 0.0], [len, 0.001, 0.001]), m, p).unwrap()
}

fn two_bars(p1: PowerProfile, p2: PowerProfile) -> SystemConfig {
    SystemConfig::new(
        vec![
            bar("cu", 0.0, 0.006, Material::copper(), p1),
            bar("al", 0.006, 0.004, Material::aluminium(), p2),
        ],
        Boundary::Insulated,
        20.0,
    )
    .unwrap()
}

#[test]
fn one_trial_per_source() {
    let sys = SystemConfig::new(
        vec![
            bar("a", 0.0, 0.003, Material::copper(), PowerProfile::constant(1.0)),
            bar("b", 0.003, 0.003, Material::copper(), PowerProfile::zero()),
            bar("c", 0.006, 0.003, Material::aluminium(), PowerProfile::constant(0.5)),
        ],
        Boundary::Insulated,
        20.0,
    )
    .unwrap();
    let ch = characterize(&sys, 2.0, DX).unwrap();
    assert_eq!(ch.trials.len(), 2);
    assert_eq!(ch.model.source_ids(), &["a".to_string(), "c".to_string()]);
    assert_eq!(ch.model.r_char().len(), 3);
    assert!(ch.model.r_char().iter().all(|row| row.len() == 2));
    assert_eq!(ch.report.entries.len(), 6);
}

#[test]
fn single_insulated_body_has_no_deviation() {
    let sys = SystemConfig::new(
        vec![bar("solo", 0.0, 0.004, Material::copper(), PowerProfile::constant(1.0))],
        Boundary::Insulated,
        20.0,
    )
    .unwrap();
    let ch = characterize(&sys, 2.0, DX).unwrap();
    let dev = &ch.trials[0].deviations[0];
    let rise = 2.0 / sys.total_capacitance();
    // a uniformly heated body stays isothermal
    assert!(dev.iter().all(|d| d.abs() < 1e-9 * rise), "{dev:?}");
    assert_eq!(ch.report.entries[0].status, FitStatus::NonIdentifiable);
    assert_eq!(ch.model.r_char()[0][0], 0.0);
    assert!(!ch.report.warnings.is_empty());
}

#[test]
fn source_body_runs_hot_and_the_other_cold() {
    let sys = two_bars(PowerProfile::constant(1.0), PowerProfile::constant(1.0));
    let ch = characterize(&sys, 2.0, DX).unwrap();
    let r = ch.model.r_char();
    assert!(r[0][0] > 0.0 && r[1][0] < 0.0, "{r:?}");
    assert!(r[1][1] > 0.0 && r[0][1] < 0.0, "{r:?}");
    assert!(ch.report.converged);
    assert!(ch.report.entries.iter().all(|e| e.status == FitStatus::Ok));
}

#[test]
fn mirrored_twins_share_parameters() {
    let m = Material::aluminium();
    let sys = SystemConfig::new(
        vec![
            bar("left", 0.0, 0.004, m.clone(), PowerProfile::constant(1.0)),
            bar("right", 0.004, 0.004, m, PowerProfile::constant(1.0)),
        ],
        Boundary::Insulated,
        20.0,
    )
    .unwrap();
    let ch = characterize(&sys, 2.0, DX).unwrap();
    let r = ch.model.r_char();
    assert_relative_eq!(r[0][0], r[1][1], max_relative = 1e-6);
    assert_relative_eq!(r[0][1], r[1][0], max_relative = 1e-6);
    assert_relative_eq!(ch.model.k()[0], ch.model.k()[1], max_relative = 1e-6);
}

#[test]
fn trial_power_is_normalized_out() {
    let sys = two_bars(PowerProfile::constant(1.0), PowerProfile::constant(1.0));
    let unit = characterize_from_trials(&sys, &run_trials(&sys, 2.0, DX, TrialOptions::default()).unwrap()).unwrap();
    let opts = TrialOptions {
        power: 2.0,
        ..Default::default()
    };
    let double = characterize_from_trials(&sys, &run_trials(&sys, 2.0, DX, opts).unwrap()).unwrap();
    for (a, b) in unit
        .model
        .r_char()
        .iter()
        .flatten()
        .zip(double.model.r_char().iter().flatten())
    {
        assert_relative_eq!(a, b, max_relative = 1e-5);
    }
    for (a, b) in unit.model.k().iter().zip(double.model.k()) {
        assert_relative_eq!(a, b, max_relative = 1e-5);
    }
}

#[test]
fn trial_order_does_not_matter() {
    let sys = two_bars(PowerProfile::constant(1.0), PowerProfile::constant(1.0));
    let trials = run_trials(&sys, 2.0, DX, TrialOptions::default()).unwrap();
    let forward = characterize_from_trials(&sys, &trials).unwrap();
    let reversed: Vec<_> = trials.iter().rev().cloned().collect();
    let backward = characterize_from_trials(&sys, &reversed).unwrap();
    assert_eq!(forward.model, backward.model);
}

#[test]
fn model_survives_json() {
    let sys = two_bars(PowerProfile::constant(1.0), PowerProfile::constant(1.0));
    let ch = characterize(&sys, 2.0, DX).unwrap();
    let back = CharacterizedModel::from_json(&ch.model.to_json().unwrap()).unwrap();
    assert_eq!(back, ch.model);
}

#[test]
fn prediction_tracks_oracle_with_transients() {
    let p1 = PowerProfile::from_pairs(&[(0.0, 0.5), (1.5, 0.0), (3.0, 0.8)]).unwrap();
    let p2 = PowerProfile::from_pairs(&[(0.0, 0.0), (2.0, 0.3), (4.0, 0.1)]).unwrap();
    let sys = two_bars(p1.clone(), p2.clone());
    let ch = characterize(&sys, 2.0, DX).unwrap();
    let sim = simulate(&sys, 6.0, DX, 0.05).unwrap();
    let rom = predict(&ch.model, &[p1, p2], sim.times()).unwrap();
    let report = compare_traces(&sim, &rom, 20.0).unwrap();
    assert!(report.worst_percent_error() < 3.0, "{report}");
}

fn convective_cube(h: f64, ambient: f64) -> SystemConfig {
    let b = BodySpec::new(
        "cube",
        Cuboid::new([0.0; 3], [0.005; 3]),
        Material::cu_bronze(),
        PowerProfile::zero(),
    )
    .unwrap();
    SystemConfig::new(
        vec![b],
        Boundary::Convection {
            h,
            ambient,
            fluid_capacitance: 0.0,
        },
        20.0,
    )
    .unwrap()
}

#[test]
fn fit_h_recovers_coefficient() {
    let sys = convective_cube(56.19, 20.0);
    let tau = sys.total_capacitance() / (56.19 * 1.5e-4);
    let fit = fit_h(&sys, 0.5, 5.0 * tau, 0.001).unwrap();
    assert_relative_eq!(fit.area, 1.5e-4, max_relative = 1e-12);
    assert!((fit.h_est - 56.19).abs() / 56.19 < 0.02, "{fit:?}");
    assert_relative_eq!(fit.r_bf * fit.h_est * fit.area, 1.0, max_relative = 1e-12);
}

#[test]
fn fit_h_preconditions() {
    let insulated = SystemConfig::new(
        vec![BodySpec::new(
            "c",
            Cuboid::new([0.0; 3], [0.005; 3]),
            Material::cu_bronze(),
            PowerProfile::zero(),
        )
        .unwrap()],
        Boundary::Insulated,
        20.0,
    )
    .unwrap();
    assert!(fit_h(&insulated, 0.5, 10.0, 0.001).unwrap_err().is_config_error());
    assert!(fit_h(&convective_cube(50.0, 25.0), 0.5, 10.0, 0.001)
        .unwrap_err()
        .is_config_error());
    assert!(fit_h(&convective_cube(50.0, 20.0), 0.0, 10.0, 0.001)
        .unwrap_err()
        .is_config_error());
}

#[test]
fn characterize_rejects_unpowered_system() {
    let sys = two_bars(PowerProfile::zero(), PowerProfile::zero());
    assert!(characterize(&sys, 2.0, DX).unwrap_err().is_config_error());
}
