use tpmr_core::fitting::{auto_prominence, detect_peaks, estimate_noise, fit_gaussians, select_model};
use tpmr_core::frames::DriveTone;
use tpmr_core::spectrum::{linear_grid, power_to_rabi, synth_spectrum, SynthOptions};
use tpmr_core::spin_model::NvParams;

fn main() {
    let p = NvParams { t2_star: 1.0 / (std::f64::consts::PI * 0.71), ..NvParams::default() };
    for power in [1e-9f64, 2.0, 10.0, 31.6, 63.0] {
        let opts = SynthOptions { noise_sigma: 2.5e-4, ..SynthOptions::default() };
        let pump = DriveTone::pump(power_to_rabi(power, 0.19), 5.3);
        let grid = linear_grid(-9.0, 9.0, 0.02).unwrap();
        let s = synth_spectrum(&p, &pump, &opts, &grid, 3).unwrap();
        let noise = estimate_noise(&s);
        let prom = auto_prominence(&s);
        let cands = detect_peaks(&s, prom);
        let pick = select_model(&s).unwrap();
        println!(
            "power {power:8.3}: noise_est {noise:.2e} prom {prom:.2e} cands {} -> n_peaks {} (rss {:.3e}, score {:.1}, conv {})",
            cands.len(), pick.n_peaks, pick.rss, pick.score, pick.converged
        );
        if power == 2.0 {
            println!("  candidates: {cands:?}");
            let f3 = fit_gaussians(&s, 3, &cands).unwrap();
            println!("  fit3 score {:.2} rss {:.4e}", f3.score, f3.rss);
        }
    }
}
