//! Two-mirror monolithic cavity around an absorbing medium.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_medium::{self, AbsorptionSpectrum, FrequencyGrid};

/// Speed of light in cm/s.
pub const SPEED_OF_LIGHT_CM: f64 = 2.997_924_58e10;

/// Coated crystal forming a planar cavity.
///
/// `resonance_detuning` places one longitudinal resonance of the empty
/// cavity on the detuning axis; the geometric round-trip phase vanishes
/// there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityConfig {
    pub r1: f64,
    pub r2: f64,
    pub length_cm: f64,
    pub refractive_index: f64,
    /// Intensity lost per round trip in addition to the medium absorption.
    pub excess_round_trip_loss: f64,
    pub resonance_detuning: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl CavityConfig {
    /// 4 mm crystal with 40 % / 99 % facets, resonance 4 GHz below line center.
    pub fn reference() -> Self {
        Self {
            r1: 0.40,
            r2: 0.99,
            length_cm: 0.4,
            refractive_index: 1.82,
            excess_round_trip_loss: 0.0,
            resonance_detuning: -4e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(0.0..=1.0).contains(&self.r1) {
            problems.push(format!("R1 in [0,1] violated: {}", self.r1));
        }
        if !(0.0..=1.0).contains(&self.r2) {
            problems.push(format!("R2 in [0,1] violated: {}", self.r2));
        }
        if !(self.length_cm > 0.0 && self.length_cm.is_finite()) {
            problems.push(format!("length > 0 violated: {}", self.length_cm));
        }
        if !(self.refractive_index >= 1.0 && self.refractive_index.is_finite()) {
            problems.push(format!("index >= 1 violated: {}", self.refractive_index));
        }
        if !(0.0..1.0).contains(&self.excess_round_trip_loss) {
            problems.push(format!(
                "excess loss in [0,1) violated: {}",
                self.excess_round_trip_loss
            ));
        }
        if !self.resonance_detuning.is_finite() {
            problems.push("resonance detuning must be finite".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::config(problems.join("; ")))
        }
    }

    pub fn free_spectral_range(&self) -> f64 {
        SPEED_OF_LIGHT_CM / (2.0 * self.refractive_index * self.length_cm)
    }

    pub fn round_trip_time(&self) -> f64 {
        1.0 / self.free_spectral_range()
    }

    /// Round-trip field amplitude factor with uniform absorption `mean_alpha`.
    pub fn round_trip_amplitude(&self, mean_alpha: f64) -> f64 {
        (self.r1 * self.r2).sqrt()
            * (-mean_alpha * self.length_cm).exp()
            * (1.0 - self.excess_round_trip_loss).sqrt()
    }

    /// Coefficient finesse `π√ρ/(1-ρ)`; zero when there is no resonator.
    pub fn finesse(&self, mean_alpha: f64) -> Result<f64> {
        let rho = self.round_trip_amplitude(mean_alpha);
        if rho >= 1.0 {
            return Err(Error::domain(format!(
                "round-trip amplitude {rho} >= 1 has no finite finesse"
            )));
        }
        if rho == 0.0 {
            return Ok(0.0);
        }
        Ok(PI * rho.sqrt() / (1.0 - rho))
    }

    /// Uniform absorption that satisfies `R1 = R2·exp(-2αl)`.
    pub fn solve_matched_alpha(&self) -> Result<f64> {
        if self.r1 == 0.0 {
            return Err(Error::NoSolution(
                "R1 = 0 requires infinite absorption for matching".into(),
            ));
        }
        if self.r1 > self.r2 {
            return Err(Error::NoSolution(format!(
                "R1 = {} > R2 = {} needs gain, not absorption",
                self.r1, self.r2
            )));
        }
        Ok((self.r2 / self.r1).ln() / (2.0 * self.length_cm))
    }

    /// Single-pass factor with the geometric phase and the excess loss share.
    fn internal_single_pass(&self, medium: Complex64, detuning: f64) -> Complex64 {
        let geometric = 2.0 * PI * (detuning - self.resonance_detuning) * self.refractive_index
            * self.length_cm
            / SPEED_OF_LIGHT_CM;
        medium * Complex64::from_polar((1.0 - self.excess_round_trip_loss).powf(0.25), geometric)
    }
}

/// Complex response of the cavity per grid bin.
#[derive(Debug, Clone)]
pub struct CavityResponse {
    pub grid: FrequencyGrid,
    pub reflection: Vec<Complex64>,
    /// Forward field just inside the front facet, per unit input field.
    pub intracavity: Vec<Complex64>,
    /// Field leaving through the rear facet.
    pub transmission: Vec<Complex64>,
}

impl CavityResponse {
    pub fn reflectance(&self) -> Vec<f64> {
        self.reflection.iter().map(|r| r.norm_sqr()).collect()
    }

    /// Fraction of input power dissipated inside the cavity, per bin.
    pub fn dissipated(&self) -> Vec<f64> {
        self.reflection
            .iter()
            .zip(&self.transmission)
            .map(|(r, t)| 1.0 - r.norm_sqr() - t.norm_sqr())
            .collect()
    }
}

/// Front-facet reflection `r = (-√R1 + √R2·a²)/(1 - √(R1R2)·a²)` with the
/// internal single-pass amplitude `a` built from `medium_transfer`.
pub fn reflection_spectrum(
    cfg: &CavityConfig,
    medium_transfer: &[Complex64],
    grid: &FrequencyGrid,
) -> Result<CavityResponse> {
    cfg.validate()?;
    if medium_transfer.len() != grid.bin_count() {
        return Err(Error::config("medium transfer is not on the cavity grid"));
    }
    let (s1, s2) = (cfg.r1.sqrt(), cfg.r2.sqrt());
    let (t1, t2) = ((1.0 - cfg.r1).sqrt(), (1.0 - cfg.r2).sqrt());
    let n = grid.bin_count();
    let mut reflection = Vec::with_capacity(n);
    let mut intracavity = Vec::with_capacity(n);
    let mut transmission = Vec::with_capacity(n);
    for (j, &m) in medium_transfer.iter().enumerate() {
        let a = cfg.internal_single_pass(m, grid.detuning(j));
        let a2 = a * a;
        let denom = Complex64::new(1.0, 0.0) - s1 * s2 * a2;
        reflection.push((-s1 + s2 * a2) / denom);
        intracavity.push(t1 / denom);
        transmission.push(t1 * t2 * a / denom);
    }
    Ok(CavityResponse {
        grid: grid.clone(),
        reflection,
        intracavity,
        transmission,
    })
}

/// Cavity response for an absorption spectrum held in the crystal.
pub fn response_for(cfg: &CavityConfig, spectrum: &AbsorptionSpectrum) -> Result<CavityResponse> {
    let t = spectral_medium::medium_transfer(spectrum, cfg.length_cm)?;
    reflection_spectrum(cfg, &t, spectrum.grid())
}

/// Normalized reflected power of a probe tuned across the cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<(f64, f64)>,
}

impl SweepTable {
    /// `(detuning, value)` of the smallest reflected power.
    pub fn minimum(&self) -> Option<(f64, f64)> {
        self.rows
            .iter()
            .cloned()
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "detuning_Hz,reflected_power_norm")?;
        for (d, p) in &self.rows {
            writeln!(out, "{:.6e},{:.9e}", d, p)?;
        }
        Ok(())
    }
}

/// Reflected energy of a transform-limited Gaussian probe (intensity FWHM
/// `probe_fwhm` in seconds) at each probe detuning, divided by its input
/// energy. `f64::INFINITY` gives the CW limit.
pub fn reflection_sweep(
    cfg: &CavityConfig,
    background: &AbsorptionSpectrum,
    probe_fwhm: f64,
    probe_detunings: &[f64],
) -> Result<SweepTable> {
    let response = response_for(cfg, background)?;
    sweep_response(&response, probe_fwhm, probe_detunings)
}

/// As [`reflection_sweep`] for a precomputed response.
pub fn sweep_response(
    response: &CavityResponse,
    probe_fwhm: f64,
    probe_detunings: &[f64],
) -> Result<SweepTable> {
    if !(probe_fwhm > 0.0) {
        return Err(Error::config("probe duration must be positive"));
    }
    let grid = &response.grid;
    // spectral intensity FWHM of a transform-limited Gaussian
    let spectral_fwhm = 2.0 * LN_2 / (PI * probe_fwhm);
    if spectral_fwhm > grid.span() {
        return Err(Error::config(format!(
            "probe bandwidth {:.3e} Hz exceeds grid span {:.3e} Hz",
            spectral_fwhm,
            grid.span()
        )));
    }
    let reflectance = response.reflectance();
    let detunings = grid.detunings();
    let rows = probe_detunings
        .iter()
        .map(|&p| {
            if spectral_fwhm < grid.bin_width() {
                let j = grid
                    .bin_of(p)
                    .ok_or_else(|| Error::config(format!("probe detuning {p} Hz off grid")))?;
                return Ok((p, reflectance[j]));
            }
            if p < grid.min_detuning() || p > grid.max_detuning() {
                return Err(Error::config(format!("probe detuning {p} Hz off grid")));
            }
            let mut num = 0.0;
            let mut den = 0.0;
            for (d, r) in detunings.iter().zip(&reflectance) {
                let x = (d - p) / spectral_fwhm;
                let w = (-4.0 * LN_2 * x * x).exp();
                num += w * r;
                den += w;
            }
            Ok((p, num / den))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::new(0.0, 80e9, 16384).unwrap()
    }

    #[test]
    fn free_spectral_range_examples() {
        let cfg = CavityConfig::reference();
        assert!((cfg.free_spectral_range() - 20.59e9).abs() < 0.01e9);
        let unit = CavityConfig {
            refractive_index: 1.0,
            length_cm: 1.0,
            ..cfg.clone()
        };
        assert!((unit.free_spectral_range() - 14.99e9).abs() < 0.005e9);
        let double = CavityConfig {
            length_cm: 0.8,
            ..cfg.clone()
        };
        assert!((double.free_spectral_range() * 2.0 - cfg.free_spectral_range()).abs() < 1.0);
    }

    #[test]
    fn finesse_examples() {
        let cfg = CavityConfig::reference();
        assert!((cfg.finesse(0.0).unwrap() - 6.72).abs() < 0.005);
        let alpha = cfg.solve_matched_alpha().unwrap();
        assert!((cfg.round_trip_amplitude(alpha) - 0.4).abs() < 1e-12);
        assert!((cfg.finesse(alpha).unwrap() - 3.31).abs() < 0.005);
        let none = CavityConfig {
            r1: 0.0,
            r2: 0.0,
            ..cfg
        };
        assert_eq!(none.finesse(0.0).unwrap(), 0.0);
    }

    #[test]
    fn finesse_rejects_lossless_closed_cavity() {
        let cfg = CavityConfig {
            r1: 1.0,
            r2: 1.0,
            ..CavityConfig::reference()
        };
        assert!(matches!(cfg.finesse(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn matched_alpha_examples() {
        let cfg = CavityConfig::reference();
        assert!((cfg.solve_matched_alpha().unwrap() - 1.133).abs() < 5e-4);
        let equal = CavityConfig {
            r1: 0.9,
            r2: 0.9,
            ..cfg.clone()
        };
        assert_eq!(equal.solve_matched_alpha().unwrap(), 0.0);
        let built = CavityConfig {
            r1: 0.9 * (-2.0f64).exp(),
            r2: 0.9,
            length_cm: 1.0,
            ..cfg.clone()
        };
        assert!((built.solve_matched_alpha().unwrap() - 1.0).abs() < 1e-12);
        let gain = CavityConfig { r1: 0.995, ..cfg.clone() };
        assert!(matches!(gain.solve_matched_alpha(), Err(Error::NoSolution(_))));
        let open = CavityConfig { r1: 0.0, ..cfg };
        assert!(matches!(open.solve_matched_alpha(), Err(Error::NoSolution(_))));
    }

    #[test]
    fn perfect_front_mirror_reflects_everything() {
        let cfg = CavityConfig {
            r1: 1.0,
            ..CavityConfig::reference()
        };
        let bg = AbsorptionSpectrum::uniform(grid(), 1.0).unwrap();
        let resp = response_for(&cfg, &bg).unwrap();
        assert!(resp.reflectance().iter().all(|r| (r - 1.0).abs() < 1e-12));
    }

    #[test]
    fn matched_cavity_on_resonance_is_dark() {
        let cfg = CavityConfig::reference();
        let alpha = cfg.solve_matched_alpha().unwrap();
        let t = vec![Complex64::new((-alpha * cfg.length_cm / 2.0).exp(), 0.0); 16384];
        let resp = reflection_spectrum(&cfg, &t, &grid()).unwrap();
        let j = grid().bin_of(cfg.resonance_detuning).unwrap();
        assert!(resp.reflectance()[j] < 1e-6);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = CavityConfig {
            r1: 1.4,
            ..CavityConfig::reference()
        };
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("R1 in [0,1]"));
    }

    #[test]
    fn cw_sweep_is_point_sampling() {
        let cfg = CavityConfig::reference();
        let bg = AbsorptionSpectrum::uniform(grid(), 0.5).unwrap();
        let resp = response_for(&cfg, &bg).unwrap();
        let probes = [-4e9, -1e9, 3.3e9];
        let table = sweep_response(&resp, f64::INFINITY, &probes).unwrap();
        for (d, p) in table.rows {
            let j = grid().bin_of(d).unwrap();
            assert_eq!(p, resp.reflectance()[j]);
        }
        // a long but finite probe converges to the same values
        let long = sweep_response(&resp, 2e-6, &probes).unwrap();
        let cw = sweep_response(&resp, f64::INFINITY, &probes).unwrap();
        for (a, b) in long.rows.iter().zip(&cw.rows) {
            assert!((a.1 - b.1).abs() < 1e-3);
        }
    }

    #[test]
    fn probe_broader_than_grid_rejected() {
        let cfg = CavityConfig::reference();
        let bg = AbsorptionSpectrum::zeros(grid());
        assert!(reflection_sweep(&cfg, &bg, 1e-12, &[0.0]).is_err());
    }
}
