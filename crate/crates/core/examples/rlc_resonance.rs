//! Frequency response of the series RLC circuit driving the electro-optic
//! prism, and the drive needed for a given comb bandwidth.

use afc_sim::spectrum::{drive_to_deviation, rlc_gain, RlcParams};

fn main() -> afc_sim::Result<()> {
    let rlc = RlcParams::default();
    println!(
        "R = {} ohm, L = {} uH, C = {} pF",
        rlc.resistance,
        rlc.inductance * 1e6,
        rlc.capacitance * 1e12
    );
    println!(
        "f0 = {:.1} kHz, Q = {:.1}",
        rlc.resonance_frequency() / 1e3,
        rlc.quality_factor()
    );

    let (mut best_f, mut best_g) = (0.0, 0.0);
    for k in 0..=2000 {
        let f = 400e3 + k as f64 * 200.0;
        let g = rlc_gain(&rlc, f)?.norm();
        if g > best_g {
            (best_f, best_g) = (f, g);
        }
        if k % 200 == 0 {
            println!("{:>8.1} kHz  |H| = {:6.2}", f / 1e3, g);
        }
    }
    println!("sweep peak at {:.1} kHz (|H| = {:.1})", best_f / 1e3, best_g);

    // Tuning rate that turns 10.8 Vpp at 626 kHz into a 465 MHz deviation.
    let cal = rlc.calibrated(626e3, 465e6)?;
    println!("\ncalibrated tuning rate {:.3} MHz/V", cal.tuning_rate / 1e6);
    for vpp in [2.0, 5.0, 10.8] {
        let p = RlcParams { drive_vpp: vpp, ..cal };
        println!(
            "{vpp:>5} Vpp -> deviation {:.0} MHz",
            drive_to_deviation(&p, 626e3)? / 1e6
        );
    }
    Ok(())
}
