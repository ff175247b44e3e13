use twohop_core::*;

fn sim_point(policy: SelectionPolicy, lambda_r: f64, lambda_s: f64, link: f64, trials: u64, half: f64, margin: f64) -> EstimateRecord {
    let config = SimulationConfig {
        source_intensity: lambda_s,
        relay_intensity: lambda_r,
        link_distance: link,
        sir_threshold: 3.0,
        path_loss: PathLossModel::default_power_law(),
        window: Window::new(half, margin).unwrap(),
        policy,
        n_trials: trials,
        master_seed: 777,
    };
    estimate(&config).unwrap()
}

fn main() {
    env_logger::init();
    let ls = 0.5;
    for link in [2.0f64, 4.0] {
        let b = sim_point(SelectionPolicy::CenterBaseline, 0.0, ls, link, 150, 15.0, 6.0);
        println!("R={link} ls={ls} baseline: ps={:.4}±{:.4} (p1={:.5} p2={:.4})", b.ps_composed, b.se_ps_composed, b.p1, b.p2);
        for frac in [0.0625f64, 0.125, 0.25] {
            let th = frac * std::f64::consts::PI;
            for lr in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
                let e = sim_point(SelectionPolicy::Sectorized { half_angle: th }, lr, ls, link, 80, 15.0, 6.0);
                print!("  t={frac:.3}pi lr={lr:<4}: ps={:.4}±{:.4}", e.ps_composed, e.se_ps_composed);
                if e.ps_composed > b.ps_composed { print!("  <-- beats baseline"); }
                println!();
            }
        }
    }
}
