//! Relative excitation of the six crystallographic sites of Tm:YAG for a
//! few pump polarizations.

use afc_sim::material::{site_couplings, SiteGeometry};

fn main() -> afc_sim::Result<()> {
    let geometry = SiteGeometry::tm_yag();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let t = 1.0 / 3f64.sqrt();
    let cases = [
        ("[001]", [0.0, 0.0, 1.0]),
        ("[1-10]", [s, -s, 0.0]),
        ("[110]", [s, s, 0.0]),
        ("[111]", [t, t, t]),
    ];
    println!("polarization   site1  site2  site3  site4  site5  site6");
    for (name, e) in cases {
        let c = site_couplings(e, &geometry)?;
        print!("{name:<12}");
        for v in c {
            print!("  {v:5.2}");
        }
        println!();
    }
    Ok(())
}
