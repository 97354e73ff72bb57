//! Monochromatic hole burning: holes and antiholes around the pump
//! frequency, compared with the positions expected from the level scheme.

use afc_sim::engrave::{absorption_spectrum, evolve, EngraveSchedule, MediumState};
use afc_sim::material::{shb_pattern, MaterialParams};
use afc_sim::spectrum::LineSpectrum;
use afc_sim::FrequencyGrid;

fn main() -> afc_sim::Result<()> {
    let m = MaterialParams {
        gamma_laser: 0.0,
        gamma_h: 20e3,
        ..Default::default()
    };
    let pump = LineSpectrum::monochromatic(0.0);
    let grid = MediumState::grid_for(&pump, &m, 10e3, 4e6)?;
    let sched = EngraveSchedule {
        pump_rate: 200.0,
        cycles: 5,
        ..Default::default()
    };
    let state = evolve(&MediumState::unpumped(grid), &pump, &sched, &m)?;
    let probe = FrequencyGrid::spanning(-3.5e6, 3.5e6, 10e3)?;
    let d = absorption_spectrum(&state, &probe, &m);

    let pattern = shb_pattern(&m);
    println!(
        "expected holes (MHz):     {:?}",
        pattern.holes.iter().map(|h| h.0 / 1e6).collect::<Vec<_>>()
    );
    println!(
        "expected antiholes (MHz): {:?}",
        pattern.antiholes.iter().map(|h| h.0 / 1e6).collect::<Vec<_>>()
    );

    println!("\nlocal extrema of the probe spectrum:");
    for i in 3..d.len() - 3 {
        let w = &d[i - 3..=i + 3];
        let kind = if w.iter().all(|&v| v >= d[i]) && d[i] < m.d_peak - 1e-3 {
            "hole"
        } else if w.iter().all(|&v| v <= d[i]) && d[i] > m.d_peak + 1e-3 {
            "antihole"
        } else {
            continue;
        };
        println!("{:>8.3} MHz  d = {:.4}  {kind}", probe.freq(i) / 1e6, d[i]);
    }
    Ok(())
}
