//! Self-convergence and front-speed band of the direct simulation, on a
//! strip one transverse period wide.

use std::f64::consts::PI;

use shfront::pde::{run_experiment, FrontSpeedReport, PdeConfig};

fn narrow(eps: f64) -> PdeConfig {
    // relaxation time scales like 1/eps^2; stretch horizon, window and domain with it
    let s = (0.3 / eps).powi(2);
    let base = PdeConfig::appendix_b_theta0();
    PdeConfig {
        eps,
        ly: 4.0 * PI / 3f64.sqrt(),
        ny: 32,
        t_end: 80.0 * s,
        fit_window: (20.0 * s, 80.0 * s),
        lx: if s > 1.0 { 64.0 * PI } else { 40.0 * PI },
        nx: if s > 1.0 { 1600 } else { 1024 },
        ..base
    }
}

fn run(cfg: &PdeConfig) -> FrontSpeedReport {
    cfg.validate().unwrap();
    run_experiment(cfg, &[]).unwrap().report
}

#[test]
fn speed_is_converged_in_time_and_space_and_sits_below_the_prediction() {
    let base_cfg = narrow(0.3);
    let base = run(&base_cfg);
    let half_dt = run(&PdeConfig { dt: base_cfg.dt / 2.0, ..base_cfg.clone() });
    let fine = run(&PdeConfig { nx: 2 * base_cfg.nx, ..base_cfg.clone() });
    let dt_change = (half_dt.fitted_speed - base.fitted_speed).abs() / base.fitted_speed;
    let dx_change = (fine.fitted_speed - base.fitted_speed).abs() / base.fitted_speed;
    println!("eps 0.3: fitted {} (dt/2 {}, 2nx {})", base.fitted_speed, half_dt.fitted_speed, fine.fitted_speed);
    assert!(dt_change <= 0.005, "dt halved changes the speed by {dt_change}");
    assert!(dx_change <= 0.01, "grid refinement changes the speed by {dx_change}");

    let slow = run(&narrow(0.2));
    println!("eps 0.2: fitted {} of {}", slow.fitted_speed, slow.c_pred);
    for r in [&base, &slow] {
        let ratio = r.fitted_speed / r.c_pred;
        assert!((0.8..=1.0).contains(&ratio), "ratio {ratio}");
    }
    assert!(slow.relative_error < base.relative_error);
}
