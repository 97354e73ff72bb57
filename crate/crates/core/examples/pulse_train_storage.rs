//! Stores the 800 MHz Mach-Zehnder pulse train and counts the retrieved
//! temporal modes after a 1 GHz detector.

use afc_sim::config::ScenarioConfig;
use afc_sim::scenario::{prepare_medium, storage};

fn main() -> afc_sim::Result<()> {
    let cfg = ScenarioConfig::default();
    let train = &cfg.storage.train;
    println!(
        "train: {} MHz for {:.3} us = {:.0} pulses",
        train.f_mod / 1e6,
        train.duration * 1e6,
        train.periods()
    );
    let prepared = prepare_medium(&cfg)?;
    let st = storage(&cfg, &prepared)?;
    println!("echo delay          {:.4} us", st.train.delay * 1e6);
    println!(
        "echo window         {:.4} .. {:.4} us",
        st.train.echo_window.0 * 1e6,
        st.train.echo_window.1 * 1e6
    );
    println!("retrieved modes     {}", st.train.mode_count);
    println!("train efficiency    {:.3} %", 100.0 * st.train.efficiency);
    println!(
        "detected contrast   input {:.3}, echo {:.4} ({} input slots)",
        st.input_modes.mean_contrast, st.echo_modes.mean_contrast, st.input_modes.mode_count
    );
    Ok(())
}
