use twoscale::dynamics::Problem;
use twoscale::experiments::{
    detect_layer_exit, run_asymptotics, run_hysteresis, AsymptoticsPlan, DemagSource, EquilibriumPath, HysteresisPlan,
};
use twoscale::{DirectionPath, EllipsoidSpec, Envelope, FieldSchedule, Integrator, Mat3, Vec3};

fn rotating_sphere_plan(epsilons: Vec<f64>, perturbation: f64) -> AsymptoticsPlan {
    let schedule = FieldSchedule::new(
        vec![(0.0, 5.0)],
        DirectionPath::Rotating { start: Vec3::z(), toward: Vec3::x(), rate: 1.0 },
        Envelope::Uniform,
    )
    .unwrap();
    AsymptoticsPlan {
        problem: Problem::macrospin(1.0, Mat3::identity() / 3.0, schedule).unwrap(),
        epsilons,
        alpha: 1.0,
        horizon: 1.0,
        path: EquilibriumPath::FieldAligned,
        perturbation,
        seed: 2,
        threshold_factor: 2.0,
        samples: 800,
        dt_factor: 0.05,
        integrator: Integrator::ProjectedExplicit,
    }
}

#[test]
fn synthetic_layer_exit() {
    let eps = 0.05;
    let times: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let d: Vec<f64> = times.iter().map(|t| (-t / eps).exp() + 0.01).collect();
    let tau = detect_layer_exit(&times, &d, 2.0);
    assert!((tau - eps * 100f64.ln()).abs() <= 1e-3 + 1e-12, "{tau}");
    assert_eq!(detect_layer_exit(&times, &vec![0.3; times.len()], 2.0), 0.0);
    let rising: Vec<f64> = times.iter().map(|t| 1.0 + t).collect();
    assert_eq!(detect_layer_exit(&times, &rising, 2.0), 1.0);
}

#[test]
fn macrospin_ladder_tracks_better_as_eps_shrinks() {
    let rep = run_asymptotics(&rotating_sphere_plan(vec![0.1, 0.05, 0.025], 0.3)).unwrap();
    assert!(rep.runs.iter().all(|r| r.error.is_none()));
    assert!(rep.sup_ratios.iter().all(|q| *q < 0.9), "{:?}", rep.sup_ratios);
    assert!(rep.layer_band.1 <= 3.0 * rep.layer_band.0, "{:?}", rep.layer_band);
}

#[test]
fn unperturbed_start_stays_on_the_slow_manifold() {
    let rep = run_asymptotics(&rotating_sphere_plan(vec![0.02], 0.0)).unwrap();
    let run = &rep.runs[0];
    // quasi-static lag of the rotating field is O(eps)
    let worst = run.record.dist_h2.iter().copied().fold(0.0, f64::max);
    assert!(worst < 0.5 * 0.02, "{worst}");
}

#[test]
fn prolate_loop_is_symmetric_and_encloses_area() {
    let plan = HysteresisPlan {
        demag: DemagSource::Ellipsoid(EllipsoidSpec::new(2.0, 1.0, 1.0).unwrap()),
        volume: 1.0,
        amplitude: 0.5,
        period: 8.0,
        cycles: 2,
        epsilon: 2e-4,
        alpha: 1.0,
        misalignment: 1e-3,
        dt_factor: 0.1,
        sample_every: 10,
    };
    let r = run_hysteresis(&plan).unwrap();
    assert!(r.area > 0.0);
    assert!(r.closure_gap < 1e-3);
    assert!((r.switch_up + r.switch_down).abs() <= 0.02 * r.switch_up.abs());
    assert!((r.switch_up / r.gap() - 1.0).abs() < 0.05, "{} vs {}", r.switch_up, r.gap());
    let (down, up) = r.branches();
    assert!(down.len() > 10 && up.len() > 10);
}
