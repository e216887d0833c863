use dradar::config::{ScenarioConfig, TargetConfig, TransportConfig, TransportKind};
use dradar::runtime::{run_distributed, StdClock};
use dradar_core::admm::{run, Hyperparams, Mode, NoClock, Problem};
use dradar_core::dist::run_lockstep;
use dradar_core::forward::SceneGrid;
use dradar_core::scene::{demo_targets, simulate_measurements};

/// 8x8 demo scene, two receivers per sensor, oversampled twice. Unlike
/// the desk preset, the primal residual settles before the dual one here, so
/// screening gets to run.
fn small_problem() -> Problem {
    let mut cfg = ScenarioConfig::desk();
    cfg.grid.nx = 8;
    cfg.grid.ny = 8;
    cfg.waveform.sample_rate = 8e9;
    for s in &mut cfg.sensors {
        s.rx = s.rx[1..3].to_vec();
    }
    let grid = SceneGrid::centered(8, 8, cfg.grid.cell_size).unwrap();
    cfg.targets = demo_targets(&grid)
        .unwrap()
        .into_iter()
        .map(|t| TargetConfig {
            pixels: t.shape.iter().map(|&n| grid.coords(n).map(|(x, y)| [x, y]).unwrap()).collect(),
            amplitude: t.base_amplitude,
            aspect: t.aspect_profile,
        })
        .collect();
    let s = cfg.build().unwrap();
    let ys = s
        .ops
        .iter()
        .zip(&s.truth.per_sensor)
        .map(|(op, x)| simulate_measurements(op, x, 3.0, 21).unwrap().y)
        .collect();
    Problem::new(s.ops, ys).unwrap()
}

fn transport(kind: TransportKind) -> TransportConfig {
    TransportConfig { kind, ..TransportConfig::default() }
}

#[test]
fn threaded_runs_match_the_engine_bitwise() {
    let problem = small_problem();
    // a loose eps_p lets screening fire on this scene
    for eps_p in [1e-5, 1e-3] {
        let h = Hyperparams { eps_p, ..Hyperparams::default() };
        for mode in [Mode::Sadmm, Mode::Asadmm] {
            let reference = run(&problem, h, mode).unwrap();
            let (lock, lock_comm) = run_lockstep(&problem, h, mode, &mut NoClock).unwrap();
            for kind in [TransportKind::Inproc, TransportKind::Tcp] {
                let (out, comm) = run_distributed(&problem, h, mode, &transport(kind), &mut StdClock::start()).unwrap();
                assert_eq!(out.global, reference.global, "{mode:?} {kind:?} eps_p {eps_p}");
                assert_eq!(out.sensor_images, reference.sensor_images);
                assert_eq!(out.report.iterations(), reference.report.iterations());
                assert_eq!(out.report.active_pixel_solves(), reference.report.active_pixel_solves());
                assert_eq!(out.global, lock.global);
                assert_eq!(comm, lock_comm);
            }
        }
    }
}

#[test]
fn screening_shows_up_in_the_traffic() {
    let problem = small_problem();
    let h = Hyperparams { eps_p: 1e-3, ..Hyperparams::default() };
    let (out, comm) = run_distributed(&problem, h, Mode::Asadmm, &transport(TransportKind::Inproc), &mut StdClock::start()).unwrap();
    assert!(out.report.records.last().unwrap().active_frac < 1.0, "screening never fired");
    assert!(comm.rounds.iter().any(|r| r.notice_bytes.iter().any(|b| *b > 0)));
    for q in 0..problem.sensors() {
        let bytes: Vec<u64> = comm.rounds.iter().map(|r| r.contribution_bytes[q]).collect();
        assert!(bytes.windows(2).all(|w| w[1] <= w[0]), "sensor {q}: {bytes:?}");
    }
}

#[test]
fn wall_clock_feeds_the_report() {
    let problem = small_problem();
    let (out, _) =
        run_distributed(&problem, Hyperparams::default(), Mode::Sadmm, &transport(TransportKind::Inproc), &mut StdClock::start())
            .unwrap();
    let ms: Vec<f64> = out.report.records.iter().map(|r| r.ms_elapsed).collect();
    assert!(ms.windows(2).all(|w| w[1] >= w[0]));
    assert!(ms[ms.len() - 1] > 0.0);
}

