//! Sideband weights of the frequency-modulated pump.
//!
//! ```text
//! cargo run --release --example fm_spectrum -- [nu_m_hz] [deviation_hz]
//! ```

use afc_sim::spectrum::{carson_bandwidth, fm_sidebands, fm_sidebands_jittered, FmParams};

fn main() -> afc_sim::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let nu_m = args.first().copied().unwrap_or(626e3);
    let deviation = args.get(1).copied().unwrap_or(465e6);

    let fm = FmParams::new(nu_m, deviation)?;
    let ideal = fm_sidebands(&fm, fm.default_truncation())?;
    let smooth = fm_sidebands_jittered(&fm, fm.truncation_for_jitter(1.5), 1.5)?;
    let carson = carson_bandwidth(&fm);

    println!("modulation index  {:.2}", fm.index());
    println!("lines kept        {}", ideal.len());
    println!("Carson bandwidth  {:.1} MHz", carson / 1e6);
    println!(
        "power inside      {:.4}",
        ideal.power_within(0.5 * carson) / ideal.normalization()
    );

    println!("\n order   ideal w^2    jittered w^2");
    for k in [0i64, 1, 2, 3, 100, 500, (fm.index() as i64) - 2, fm.index() as i64 + 5] {
        let f = k as f64 * nu_m;
        let a = ideal.weight_at(f, 1.0).unwrap_or(0.0);
        let b = smooth.weight_at(f, 1.0).unwrap_or(0.0);
        println!("{k:>6}   {:.3e}    {:.3e}", a * a, b * b);
    }
    Ok(())
}
