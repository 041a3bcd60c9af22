use std::f64::consts::{PI, TAU};

use zakbench::labframe::{
    envelope_deviation, reference_envelopes, run_lab, simulate_lab, CavityConfig, LabRun,
};
use zakbench::{Error, ModelParams};

fn params(w: f64, v: f64, j: f64) -> ModelParams {
    ModelParams::new(w, v, j).unwrap()
}

fn run(p: &ModelParams, config: &CavityConfig) -> LabRun {
    run_lab(p, config).unwrap()
}

#[test]
fn envelopes_follow_coupled_mode_model() {
    let p = params(1.0, 5.0, 0.0);
    let config = CavityConfig::default();
    let lab = run(&p, &config);
    let (ref_a, ref_b) = reference_envelopes(&p, &config, &lab.comparison.times).unwrap();
    for (env, reference) in [(&lab.envelopes.0, &ref_a), (&lab.envelopes.1, &ref_b)] {
        let dev = envelope_deviation(env, reference).unwrap();
        assert!(dev.readout_phase <= 0.1, "{dev:?}");
        assert!(dev.readout_magnitude <= 0.02, "{dev:?}");
        assert!(dev.vector_relative <= 0.02, "{dev:?}");
    }
}

#[test]
fn lab_endpoints() {
    let config = CavityConfig::default();
    let trivial = run(&params(5.0, 1.0, 0.0), &config).comparison;
    assert!(trivial.final_lab().abs() <= 0.1, "{}", trivial.final_lab());
    let topological = run(&params(1.0, 5.0, 0.0), &config).comparison;
    assert!((topological.final_lab() - PI).abs() <= 0.1, "{}", topological.final_lab());
    assert!(topological.final_error() <= 0.1);
}

#[test]
fn uniform_loss_leaves_phase_unchanged() {
    let p = params(1.0, 5.0, 0.0);
    let lossless = CavityConfig::default();
    let base = run(&p, &lossless).comparison;
    for gamma in [lossless.omega0() / 200.0, lossless.omega0() / 50.0] {
        let lossy = run(&p, &CavityConfig { gamma, ..lossless }).comparison;
        assert_eq!(lossy.times, base.times);
        let worst = base
            .delta_phi_lab
            .iter()
            .zip(&lossy.delta_phi_lab)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-2, "gamma {gamma}: {worst}");
    }
}

// The coupled-mode correction to the rotating frame is set by g0/ω0. Holding
// g0·T fixed keeps the rotating-frame trajectory itself unchanged.
#[test]
fn rotating_wave_convergence() {
    for p in [params(1.0, 5.0, 0.0), params(5.0, 1.0, 0.0)] {
        let errors: Vec<f64> = [80.0, 40.0, 20.0]
            .iter()
            .map(|hz| {
                let config = CavityConfig { g0: TAU * hz, total_time: 20.0 / hz, ..CavityConfig::default() };
                run(&p, &config).comparison.abs_error.iter().copied().fold(0.0, f64::max)
            })
            .collect();
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    }
}

#[test]
fn guard_rejects_strong_coupling() {
    let config = CavityConfig { g0: TAU * 300.0, ..CavityConfig::default() };
    let err = simulate_lab(&params(1.0, 5.0, 0.0), &config).unwrap_err();
    assert!(matches!(err, Error::RwaViolated { .. }));
}

#[test]
fn lab_run_is_deterministic() {
    let config = CavityConfig { total_time: 0.1, ..CavityConfig::default() };
    let p = params(1.0, 4.0, 1.0);
    let a = run(&p, &config);
    let b = run(&p, &config);
    assert_eq!(a, b);
    let mut csv = Vec::new();
    a.comparison.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("t,delta_phi_lab,delta_phi_rot,abs_error\n"));
    assert_eq!(text.lines().count(), a.comparison.times.len() + 1);
}
