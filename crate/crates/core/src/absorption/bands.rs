//! Overtone absorption bands with Gaussian lineshapes and transparency
//! windows between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Si-OH stretch fundamental.
pub const SI_OH_FUNDAMENTAL_NM: f64 = 2760.0;
/// Si-OD stretch fundamental, twice its first-overtone position.
pub const SI_OD_FUNDAMENTAL_NM: f64 = 3720.0;
/// Default band FWHM.
pub const DEFAULT_BAND_WIDTH_NM: f64 = 60.0;
/// Default span searched for the edges of a transparency window.
pub const DEFAULT_SCAN_SPAN_NM: [f64; 2] = [1000.0, 2000.0];

const HARMONIC_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Species {
    #[serde(rename = "Si-OH")]
    SiOh,
    #[serde(rename = "Si-OD")]
    SiOd,
    #[serde(rename = "custom")]
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionBand {
    pub species: Species,
    pub fundamental_wavelength_nm: f64,
    pub overtone_order: u32,
    pub center_wavelength_nm: f64,
    /// Full width at half maximum.
    pub width_nm: f64,
    /// Loss fraction per pass at the band center.
    pub peak_loss: f64,
}

/// Harmonic overtone position λ/(order + 1); order 0 is the fundamental.
pub fn overtone_center(fundamental_nm: f64, order: u32) -> Result<f64> {
    if !(fundamental_nm > 0.0 && fundamental_nm.is_finite()) {
        return Err(Error::domain(format!(
            "fundamental wavelength must be positive, got {fundamental_nm} nm"
        )));
    }
    Ok(fundamental_nm / f64::from(order + 1))
}

impl AbsorptionBand {
    /// Band with an explicit center, which may sit up to 1% from the
    /// harmonic position to allow for anharmonicity.
    pub fn new(
        species: Species,
        fundamental_wavelength_nm: f64,
        overtone_order: u32,
        center_wavelength_nm: f64,
        width_nm: f64,
        peak_loss: f64,
    ) -> Result<Self> {
        let band = Self {
            species,
            fundamental_wavelength_nm,
            overtone_order,
            center_wavelength_nm,
            width_nm,
            peak_loss,
        };
        band.validate()?;
        Ok(band)
    }

    /// First overtone at the harmonic position.
    pub fn first_overtone(species: Species, fundamental_nm: f64, width_nm: f64, peak_loss: f64) -> Result<Self> {
        let center = overtone_center(fundamental_nm, 1)?;
        Self::new(species, fundamental_nm, 1, center, width_nm, peak_loss)
    }

    pub fn si_oh(peak_loss: f64) -> Self {
        Self::first_overtone(Species::SiOh, SI_OH_FUNDAMENTAL_NM, DEFAULT_BAND_WIDTH_NM, peak_loss)
            .expect("valid default band")
    }

    pub fn si_od(peak_loss: f64) -> Self {
        Self::first_overtone(Species::SiOd, SI_OD_FUNDAMENTAL_NM, DEFAULT_BAND_WIDTH_NM, peak_loss)
            .expect("valid default band")
    }

    pub fn validate(&self) -> Result<()> {
        if self.overtone_order < 1 {
            return Err(Error::domain("overtone order must be at least 1"));
        }
        let harmonic = overtone_center(self.fundamental_wavelength_nm, self.overtone_order)?;
        if ((self.center_wavelength_nm - harmonic) / harmonic).abs() > HARMONIC_TOLERANCE {
            return Err(Error::domain(format!(
                "band center {} nm is more than 1% from the harmonic position {harmonic} nm",
                self.center_wavelength_nm
            )));
        }
        if !(self.width_nm > 0.0 && self.width_nm.is_finite()) {
            return Err(Error::domain(format!("band width must be positive, got {} nm", self.width_nm)));
        }
        if !(self.peak_loss >= 0.0 && self.peak_loss.is_finite()) {
            return Err(Error::domain(format!("peak loss must be non-negative, got {}", self.peak_loss)));
        }
        Ok(())
    }

    /// Unit-peak Gaussian lineshape at `wavelength_nm`.
    pub fn lineshape(&self, wavelength_nm: f64) -> f64 {
        let sigma = self.width_nm / (8.0 * std::f64::consts::LN_2).sqrt();
        let z = (wavelength_nm - self.center_wavelength_nm) / sigma;
        (-0.5 * z * z).exp()
    }
}

/// Summed loss of all bands at a wavelength.
pub fn band_absorption(bands: &[AbsorptionBand], wavelength_nm: f64) -> f64 {
    bands.iter().map(|b| b.peak_loss * b.lineshape(wavelength_nm)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransparencyCheck {
    pub clear: bool,
    /// Threshold minus absorption; negative when not clear.
    pub margin: f64,
    /// Contiguous clear interval around the wavelength, limited to the
    /// scanned span. `None` when not clear.
    pub window_nm: Option<[f64; 2]>,
}

/// [`transparency_check_in`] over [`DEFAULT_SCAN_SPAN_NM`].
pub fn transparency_check(bands: &[AbsorptionBand], wavelength_nm: f64, threshold: f64) -> Result<TransparencyCheck> {
    transparency_check_in(bands, wavelength_nm, threshold, DEFAULT_SCAN_SPAN_NM)
}

/// Whether the bands absorb less than `threshold` at the wavelength, and
/// the clear window around it within `span_nm`.
pub fn transparency_check_in(
    bands: &[AbsorptionBand],
    wavelength_nm: f64,
    threshold: f64,
    span_nm: [f64; 2],
) -> Result<TransparencyCheck> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::domain(format!("threshold must be positive, got {threshold}")));
    }
    if !(wavelength_nm > 0.0) {
        return Err(Error::domain("wavelength must be positive"));
    }
    let clear_at = |l: f64| band_absorption(bands, l) < threshold;
    let margin = threshold - band_absorption(bands, wavelength_nm);
    if !clear_at(wavelength_nm) {
        return Ok(TransparencyCheck {
            clear: false,
            margin,
            window_nm: None,
        });
    }
    let lo_span = span_nm[0].min(wavelength_nm);
    let hi_span = span_nm[1].max(wavelength_nm);
    let edge = |direction: f64, limit: f64| {
        let step = 0.5;
        let mut inside = wavelength_nm;
        loop {
            let next = inside + direction * step;
            if (direction < 0.0 && next <= limit) || (direction > 0.0 && next >= limit) {
                return if clear_at(limit) { limit } else { bisect_edge(&clear_at, inside, limit) };
            }
            if !clear_at(next) {
                return bisect_edge(&clear_at, inside, next);
            }
            inside = next;
        }
    };
    Ok(TransparencyCheck {
        clear: true,
        margin,
        window_nm: Some([edge(-1.0, lo_span), edge(1.0, hi_span)]),
    })
}

fn bisect_edge(clear: &dyn Fn(f64) -> bool, mut inside: f64, mut outside: f64) -> f64 {
    while (outside - inside).abs() > 1e-6 {
        let mid = 0.5 * (inside + outside);
        if clear(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overtone_positions() {
        assert_eq!(overtone_center(2760.0, 1).unwrap(), 1380.0);
        assert_eq!(overtone_center(1234.5, 0).unwrap(), 1234.5);
        assert_eq!(overtone_center(3720.0, 1).unwrap(), 1860.0);
        assert!(overtone_center(0.0, 1).is_err());
        for l in [700.0, 1389.0, 1e4 / 3.0] {
            assert!((overtone_center(2.0 * l, 1).unwrap() - l).abs() < 1e-12 * l);
        }
    }

    #[test]
    fn band_validation() {
        assert!(AbsorptionBand::new(Species::Custom, 2000.0, 1, 1015.0, 50.0, 0.1).is_err());
        assert!(AbsorptionBand::new(Species::Custom, 2000.0, 1, 1005.0, 50.0, 0.1).is_ok());
        assert!(AbsorptionBand::new(Species::Custom, 2000.0, 1, 1000.0, 0.0, 0.1).is_err());
        assert!(AbsorptionBand::new(Species::Custom, 2000.0, 0, 2000.0, 10.0, 0.1).is_err());
    }

    #[test]
    fn absorption_values() {
        let oh = AbsorptionBand::si_oh(0.3);
        assert_eq!(band_absorption(std::slice::from_ref(&oh), 1380.0), 0.3);
        let od = AbsorptionBand::si_od(1.0);
        assert!(band_absorption(&[od], 1389.0) < 1e-10);
        assert_eq!(band_absorption(&[], 1389.0), 0.0);
        let half_width = band_absorption(&[oh], 1410.0);
        assert!((half_width - 0.15).abs() < 1e-12);
    }

    #[test]
    fn od_window() {
        let bands = [AbsorptionBand::si_od(1.0)];
        for l in [1389.0, 1480.0, 1539.0] {
            let c = transparency_check(&bands, l, 1e-3).unwrap();
            assert!(c.clear);
            let [lo, hi] = c.window_nm.unwrap();
            assert!(lo <= 1260.0 && hi >= 1660.0, "[{lo}, {hi}]");
            assert!(band_absorption(&bands, hi) < 1e-3);
            assert!(band_absorption(&bands, hi + 1e-5) >= 1e-3);
        }
        let oh = [AbsorptionBand::si_oh(1.0)];
        let c = transparency_check(&oh, 1380.0, 1e-3).unwrap();
        assert!(!c.clear && c.window_nm.is_none() && c.margin < 0.0);
    }
}
