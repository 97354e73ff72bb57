//! Engraves the full-band comb with the default schedule and reports its
//! figures of merit. A narrower comb is then burned with and without a
//! drifting laser to show the teeth washing out.

use std::time::Instant;

use afc_sim::config::ScenarioConfig;
use afc_sim::engrave::{absorption_spectrum, comb_metrics, evolve, EngraveSchedule};
use afc_sim::scenario::blank_medium;

fn main() -> afc_sim::Result<()> {
    let cfg = ScenarioConfig::default();
    let nu_m = cfg.fm.nu_m_hz;

    let t = Instant::now();
    let full = blank_medium(&cfg)?;
    let state = evolve(&full.medium, &full.pump, &cfg.schedule, &full.material)?;
    let window = cfg.grid.analysis(full.band())?;
    let c = comb_metrics(&absorption_spectrum(&state, &window, &full.material), &window, nu_m)?;
    println!(
        "{} lines over {} classes ({:.1?})",
        full.pump.len(),
        state.grid.n,
        t.elapsed()
    );
    println!(
        "full band: contrast {:.3}  d_comb {:.3}  d0 {:.3}  finesse {:.2}",
        c.contrast, c.d_comb, c.d0, c.finesse
    );

    // 20 MHz deviation, pumped per line as hard as the full band.
    let narrow_cfg = ScenarioConfig {
        fm: cfg.fm.with_deviation(20e6),
        ..cfg.clone()
    };
    let narrow = blank_medium(&narrow_cfg)?;
    let window = narrow_cfg.grid.analysis(narrow.band())?;
    for drift in [0.0, 2e6, 20e6] {
        let sched = EngraveSchedule {
            drift_rate: drift,
            cycles: 10,
            pump_rate: cfg.servo.pump_rate_per_s,
            ..cfg.schedule
        };
        let s = evolve(&narrow.medium, &narrow.pump, &sched, &narrow.material)?;
        let c = comb_metrics(&absorption_spectrum(&s, &window, &narrow.material), &window, nu_m)?;
        println!(
            "20 MHz comb, drift {:>4.0} MHz/s: contrast {:.3}",
            drift / 1e6,
            c.contrast
        );
    }
    Ok(())
}
