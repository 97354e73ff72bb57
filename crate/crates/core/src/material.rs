//! Tm:YAG medium model: Zeeman level scheme, site-selective polarization
//! couplings and the spectral hole-burning geometry.
//!
//! Level and frequency conventions used throughout the crate, for an ion
//! class whose `g1 -> e1` line sits at detuning `delta`:
//!
//! | transition | frequency             | strength          |
//! |------------|-----------------------|-------------------|
//! | g1 -> e1   | `delta`               | `cross_strength`  |
//! | g1 -> e2   | `delta + Δe`          | 1                 |
//! | g2 -> e1   | `delta + Δg`          | 1                 |
//! | g2 -> e2   | `delta + Δg + Δe`     | `cross_strength`  |
//!
//! The strong lines connect the ground and excited sublevels with the same
//! nuclear spin projection; the weak (spin-flip) lines are the other two.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Magnetic field (gauss) below which no persistent hole burning is seen.
pub const FIELD_THRESHOLD_GAUSS: f64 = 95.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialParams {
    /// Ground-state Zeeman splitting (Hz).
    #[serde(rename = "delta_g_hz")]
    pub delta_g: f64,
    /// Excited-state Zeeman splitting (Hz).
    #[serde(rename = "delta_e_hz")]
    pub delta_e: f64,
    #[serde(rename = "t_zeeman_s")]
    pub t_zeeman: f64,
    #[serde(rename = "t_excited_s")]
    pub t_excited: f64,
    #[serde(rename = "t_bottleneck_s")]
    pub t_bottleneck: f64,
    /// Homogeneous linewidth, FWHM (Hz).
    #[serde(rename = "gamma_h_hz")]
    pub gamma_h: f64,
    /// Effective pump laser linewidth, FWHM (Hz).
    #[serde(rename = "gamma_laser_hz")]
    pub gamma_laser: f64,
    /// Optical depth of the unpumped medium.
    pub d_peak: f64,
    /// Inhomogeneous FWHM (Hz). The profile is flat over simulated windows.
    #[serde(rename = "inhom_width_hz")]
    pub inhom_width: f64,
    pub cross_strength: f64,
    pub branching_spinflip: f64,
    /// Extra line broadening (Hz) added to the pump line shape; stands in
    /// for instantaneous spectral diffusion, which is not modelled.
    #[serde(rename = "extra_broadening_hz")]
    pub extra_broadening: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            delta_g: 2.7e6,
            delta_e: 0.57e6,
            t_zeeman: 7.0,
            t_excited: 800e-6,
            t_bottleneck: 10e-3,
            gamma_h: 10e3,
            gamma_laser: 350e3,
            d_peak: 2.0,
            inhom_width: 10e9,
            cross_strength: 0.05,
            branching_spinflip: 0.5,
            extra_broadening: 0.0,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t_zeeman", self.t_zeeman),
            ("t_excited", self.t_excited),
            ("t_bottleneck", self.t_bottleneck),
            ("gamma_h", self.gamma_h),
            ("inhom_width", self.inhom_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.delta_e >= 0.0) || !(self.delta_g > self.delta_e) || !self.delta_g.is_finite() {
            return Err(Error::param(
                "delta_g",
                format!("need delta_g > delta_e >= 0, got {} and {}", self.delta_g, self.delta_e),
            ));
        }
        if !(self.gamma_laser >= 0.0) || !(self.extra_broadening >= 0.0) {
            return Err(Error::param("gamma_laser", "widths must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.cross_strength) {
            return Err(Error::param("cross_strength", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.branching_spinflip) {
            return Err(Error::param("branching_spinflip", "must lie in [0, 1]"));
        }
        if !(self.d_peak >= 0.0) || !self.d_peak.is_finite() {
            return Err(Error::param("d_peak", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// FWHM of a single pump line as seen by one ion class.
    pub fn pump_linewidth(&self) -> f64 {
        self.gamma_h + self.gamma_laser + self.extra_broadening
    }

    /// The four optical transitions of a class, see the module table.
    pub fn transitions(&self) -> [Transition; 4] {
        let c = self.cross_strength;
        [
            Transition {
                ground: Ground::G1,
                offset: 0.0,
                strength: c,
            },
            Transition {
                ground: Ground::G1,
                offset: self.delta_e,
                strength: 1.0,
            },
            Transition {
                ground: Ground::G2,
                offset: self.delta_g,
                strength: 1.0,
            },
            Transition {
                ground: Ground::G2,
                offset: self.delta_g + self.delta_e,
                strength: c,
            },
        ]
    }

    /// Summed oscillator strength out of one ground sublevel.
    pub fn strength_per_level(&self) -> f64 {
        1.0 + self.cross_strength
    }

    /// Copy with the shelving lifetime gated by the applied field.
    pub fn at_field(&self, b_gauss: f64) -> Self {
        MaterialParams {
            t_zeeman: zeeman_field_gate(b_gauss, self),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ground {
    G1,
    G2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub ground: Ground,
    /// Frequency relative to the class detuning (Hz).
    pub offset: f64,
    pub strength: f64,
}

/// Lorentzian with unit peak and full width `fwhm`.
#[inline]
pub fn lorentzian(x: f64, fwhm: f64) -> f64 {
    let u = 2.0 * x / fwhm;
    1.0 / (1.0 + u * u)
}

/// Effective Zeeman shelving lifetime: step model at 95 G. Below the
/// threshold the sublevels thermalize within the excited-state lifetime.
pub fn zeeman_field_gate(b_gauss: f64, m: &MaterialParams) -> f64 {
    if b_gauss >= FIELD_THRESHOLD_GAUSS {
        m.t_zeeman
    } else {
        m.t_excited.min(m.t_bottleneck)
    }
}

/// Orientations of the transition dipoles of the six inequivalent sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteGeometry {
    pub dipoles: [[f64; 3]; 6],
}

impl SiteGeometry {
    /// Tm:YAG table: dipoles along the six <110> directions, ordered as
    /// sites 1..=6 = [-110], [110], [101], [10-1], [011], [01-1].
    pub fn tm_yag() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        SiteGeometry {
            dipoles: [
                [-s, s, 0.0],
                [s, s, 0.0],
                [s, 0.0, s],
                [s, 0.0, -s],
                [0.0, s, s],
                [0.0, s, -s],
            ],
        }
    }

    /// Site index each dipole lands on under the rotation `op`
    /// (dipoles are axes, so sign flips are ignored).
    pub fn permutation(&self, op: &[[f64; 3]; 3]) -> Option<[usize; 6]> {
        let mut perm = [0usize; 6];
        for (i, d) in self.dipoles.iter().enumerate() {
            let r = mat_vec(op, d);
            let j = self
                .dipoles
                .iter()
                .position(|e| (dot(&r, e).abs() - 1.0).abs() < 1e-9)?;
            perm[i] = j;
        }
        Some(perm)
    }
}

impl Default for SiteGeometry {
    fn default() -> Self {
        SiteGeometry::tm_yag()
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn mat_vec(m: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

/// Relative excitation `|d_i . e|^2` of each site, normalized to max 1.
pub fn site_couplings(polarization: [f64; 3], geometry: &SiteGeometry) -> Result<[f64; 6]> {
    let norm = dot(&polarization, &polarization).sqrt();
    if !((norm - 1.0).abs() <= 1e-9) {
        return Err(Error::param(
            "polarization",
            format!("must be a unit vector, |e| = {norm}"),
        ));
    }
    let mut out = [0.0; 6];
    for (o, d) in out.iter_mut().zip(&geometry.dipoles) {
        let p = dot(d, &polarization);
        *o = p * p;
    }
    let max = out.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        for o in out.iter_mut() {
            *o /= max;
        }
    }
    Ok(out)
}

/// Holes and antiholes burned by a weak monochromatic pump, normalized so
/// the hole weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShbPattern {
    pub holes: Vec<(f64, f64)>,
    pub antiholes: Vec<(f64, f64)>,
}

impl ShbPattern {
    pub fn hole_weight_at(&self, offset: f64) -> f64 {
        weight_at(&self.holes, offset)
    }

    pub fn antihole_weight_at(&self, offset: f64) -> f64 {
        weight_at(&self.antiholes, offset)
    }
}

fn weight_at(list: &[(f64, f64)], offset: f64) -> f64 {
    list.iter()
        .filter(|(o, _)| (o - offset).abs() < 1e-3)
        .map(|(_, w)| w)
        .sum()
}

/// SHB geometry from the level scheme: a class pumped on transition `p`
/// loses population from `p`'s ground level and gains it in the other one.
/// The probe sees the change on every transition `q`, at `q - p`.
pub fn shb_pattern(m: &MaterialParams) -> ShbPattern {
    let tr = m.transitions();
    let mut holes: Vec<(f64, f64)> = Vec::new();
    let mut antiholes: Vec<(f64, f64)> = Vec::new();
    for p in &tr {
        for q in &tr {
            let w = p.strength * q.strength;
            if w == 0.0 {
                continue;
            }
            let offset = q.offset - p.offset;
            let list = if p.ground == q.ground {
                &mut holes
            } else {
                &mut antiholes
            };
            match list.iter_mut().find(|(o, _)| (*o - offset).abs() < 1e-6) {
                Some(entry) => entry.1 += w,
                None => list.push((offset, w)),
            }
        }
    }
    let total: f64 = holes.iter().map(|(_, w)| w).sum();
    for (_, w) in holes.iter_mut().chain(antiholes.iter_mut()) {
        *w /= total;
    }
    holes.sort_by(|a, b| a.0.total_cmp(&b.0));
    antiholes.sort_by(|a, b| a.0.total_cmp(&b.0));
    ShbPattern { holes, antiholes }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn probe_polarization_selects_sites_3_to_6() {
        let c = site_couplings([0.0, 0.0, 1.0], &SiteGeometry::tm_yag()).unwrap();
        assert_eq!(c[0], 0.0);
        assert_eq!(c[1], 0.0);
        for v in &c[2..] {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pump_polarization_favours_site_1() {
        let c = site_couplings([-S, S, 0.0], &SiteGeometry::tm_yag()).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12);
        assert!(c[1].abs() < 1e-12);
        for v in &c[2..] {
            assert!(*v > 0.0 && *v < c[0]);
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_unit_polarization() {
        assert!(site_couplings([1.0, 1.0, 0.0], &SiteGeometry::tm_yag()).is_err());
    }

    #[test]
    fn pattern_geometry() {
        let m = MaterialParams::default();
        let p = shb_pattern(&m);
        let hole_offsets: Vec<f64> = p.holes.iter().map(|h| h.0).collect();
        assert_eq!(hole_offsets.len(), 3);
        for (o, e) in hole_offsets.iter().zip([-0.57e6, 0.0, 0.57e6]) {
            assert!((o - e).abs() < 1e-3);
        }
        // Direct-direct antiholes dominate, the spin-flip ones follow.
        let main = p.antihole_weight_at(2.13e6);
        let side = p.antihole_weight_at(2.7e6);
        let far = p.antihole_weight_at(3.27e6);
        assert!(main > side && side > far && far > 0.0);
        assert!((p.antihole_weight_at(-2.13e6) - main).abs() < 1e-15);
    }

    #[test]
    fn degenerate_excited_splitting() {
        let m = MaterialParams {
            delta_e: 0.0,
            ..Default::default()
        };
        let p = shb_pattern(&m);
        assert_eq!(p.holes.len(), 1);
        assert!(p.holes[0].0.abs() < 1e-9);
        let offs: Vec<f64> = p.antiholes.iter().map(|a| a.0).collect();
        assert_eq!(offs.len(), 2);
        assert!((offs[0] + 2.7e6).abs() < 1e-3 && (offs[1] - 2.7e6).abs() < 1e-3);
    }

    #[test]
    fn crossed_antihole_switches_off() {
        let off = shb_pattern(&MaterialParams {
            cross_strength: 0.0,
            ..Default::default()
        });
        let on = shb_pattern(&MaterialParams {
            cross_strength: 0.05,
            ..Default::default()
        });
        assert_eq!(off.antihole_weight_at(3.27e6), 0.0);
        assert!(on.antihole_weight_at(3.27e6) > 0.0);
    }

    #[test]
    fn field_gate_steps_at_threshold() {
        let m = MaterialParams::default();
        assert_eq!(zeeman_field_gate(95.0, &m), 7.0);
        assert_eq!(zeeman_field_gate(200.0, &m), 7.0);
        assert!(zeeman_field_gate(0.0, &m) <= m.t_bottleneck);
        assert!(zeeman_field_gate(94.9, &m) <= m.t_bottleneck);
    }

    #[test]
    fn validation() {
        assert!(MaterialParams::default().validate().is_ok());
        let bad = MaterialParams {
            delta_e: 3.0e6,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MaterialParams {
            cross_strength: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
