//! Stores a single 5 ns pulse in the engraved comb and measures the echo.

use afc_sim::config::ScenarioConfig;
use afc_sim::engrave::comb_metrics;
use afc_sim::propagation::{afc_efficiency_analytic, IntensityTrace, PeakShape};
use afc_sim::scenario::{prepare_medium, storage};

fn main() -> afc_sim::Result<()> {
    let cfg = ScenarioConfig::default();
    let prepared = prepare_medium(&cfg)?;
    let st = storage(&cfg, &prepared)?;

    let window = cfg.grid.analysis(prepared.band())?;
    let d = afc_sim::engrave::absorption_spectrum(&prepared.medium, &window, &prepared.material);
    let c = comb_metrics(&d, &window, cfg.fm.nu_m_hz)?;
    let analytic = afc_efficiency_analytic(c.d_comb, c.finesse, c.d0, PeakShape::Gaussian);

    println!(
        "echo delay       {:.5} us (1/nu_m = {:.5} us)",
        st.pulse.delay * 1e6,
        1e6 / cfg.fm.nu_m_hz
    );
    println!("efficiency       {:.3} %", 100.0 * st.pulse.efficiency);
    println!("analytic         {:.3} %", 100.0 * analytic);
    println!("transmitted      {:.3}", st.pulse.transmitted_fraction);

    // Coarse view of the output intensity, 50 ns bins.
    let tr = IntensityTrace::of(&st.pulse_out);
    let bin = (50e-9 / tr.dt) as usize;
    let peak = tr.values.iter().cloned().fold(0.0, f64::max);
    for (k, chunk) in tr.values.chunks(bin).enumerate().take(80) {
        let m = chunk.iter().cloned().fold(0.0, f64::max);
        if m > 1e-4 * peak {
            println!("{:>7.3} us  {:.3e}", k as f64 * 50e-3, m);
        }
    }
    Ok(())
}
