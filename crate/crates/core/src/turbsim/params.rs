use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Result, TurbError};

/// Parameters of the warp-blur-gain turbulence model. Lengths are in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurbulenceParams {
    /// Per-axis standard deviation of the tilt field.
    pub tilt_std: f64,
    /// Distance at which the spatial correlation of every field falls to
    /// `exp(-1/2)`. Never effectively finer than the lattice spacing.
    pub coherence_length: f64,
    /// `[min, max]` of the local Gaussian blur sigma.
    pub blur_sigma_range: [f64; 2],
    /// Standard deviation of the log-gain field; zero disables scintillation.
    pub scint_log_std: f64,
    /// Frame-to-frame correlation coefficient of the latent chain.
    pub ar_coeff: f64,
    /// Lattice nodes per axis for the coarse fields.
    pub grid_res: usize,
    pub seed: u64,
}

impl Default for TurbulenceParams {
    fn default() -> Self {
        TurbulencePreset::Medium.params(0)
    }
}

impl TurbulenceParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TurbError::InvalidParams(m));
        if !(self.tilt_std >= 0.0 && self.tilt_std.is_finite()) {
            return bad(format!("tilt_std must be finite and >= 0, got {}", self.tilt_std));
        }
        if !(self.coherence_length >= 0.0 && self.coherence_length.is_finite()) {
            return bad(format!("coherence_length must be finite and >= 0, got {}", self.coherence_length));
        }
        let [lo, hi] = self.blur_sigma_range;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("blur_sigma_range must satisfy 0 <= min <= max, got [{lo}, {hi}]"));
        }
        if !(self.scint_log_std >= 0.0 && self.scint_log_std.is_finite()) {
            return bad(format!("scint_log_std must be finite and >= 0, got {}", self.scint_log_std));
        }
        if !(0.0..1.0).contains(&self.ar_coeff) {
            return bad(format!("ar_coeff must lie in [0, 1), got {}", self.ar_coeff));
        }
        if self.grid_res < 2 {
            return bad(format!("grid_res must be at least 2, got {}", self.grid_res));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p: Self = toml::from_str(text).map_err(|e| TurbError::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("params serialize")
    }

    /// Parameters with turbulence switched off.
    pub fn disabled(seed: u64) -> Self {
        Self {
            tilt_std: 0.0,
            coherence_length: 0.0,
            blur_sigma_range: [0.0, 0.0],
            scint_log_std: 0.0,
            ar_coeff: 0.0,
            grid_res: 2,
            seed,
        }
    }
}

/// Severity presets for a 256 px working resolution. The values are
/// approximations chosen to give visibly weak, medium and strong degradation;
/// they are not calibrated against any measured turbulence distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurbulencePreset {
    Weak,
    Medium,
    Strong,
}

impl TurbulencePreset {
    /// Dataset mixture: 10% weak, 30% medium, 60% strong.
    pub const MIXTURE: [(TurbulencePreset, f64); 3] =
        [(TurbulencePreset::Weak, 0.1), (TurbulencePreset::Medium, 0.3), (TurbulencePreset::Strong, 0.6)];

    pub fn params(self, seed: u64) -> TurbulenceParams {
        let (tilt_std, blur_sigma_range, scint_log_std, coherence_length) = match self {
            TurbulencePreset::Weak => (0.5, [0.3, 0.8], 0.03, 48.0),
            TurbulencePreset::Medium => (1.5, [0.5, 1.5], 0.08, 32.0),
            TurbulencePreset::Strong => (3.0, [1.0, 2.5], 0.15, 24.0),
        };
        TurbulenceParams {
            tilt_std,
            coherence_length,
            blur_sigma_range,
            scint_log_std,
            ar_coeff: 0.8,
            grid_res: 16,
            seed,
        }
    }

    /// Draws a preset from [`Self::MIXTURE`].
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (preset, w) in Self::MIXTURE {
            acc += w;
            if u < acc {
                return preset;
            }
        }
        TurbulencePreset::Strong
    }

    pub fn name(self) -> &'static str {
        match self {
            TurbulencePreset::Weak => "weak",
            TurbulencePreset::Medium => "medium",
            TurbulencePreset::Strong => "strong",
        }
    }
}

/// Imaging geometry used to convert angular turbulence statistics to pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalSetup {
    /// Focal length in meters.
    pub focal_length: f64,
    /// Width of the imaged scene at the target plane, meters.
    pub scene_width: f64,
    /// Propagation distance, meters.
    pub distance: f64,
    /// Image width in pixels.
    pub image_px: usize,
}

impl OpticalSetup {
    /// Pixel pitch on the sensor (meters) implied by the geometry.
    pub fn pixel_pitch(&self) -> f64 {
        self.focal_length * self.scene_width / (self.distance * self.image_px as f64)
    }

    /// Converts an angle in radians to a displacement in pixels (`angle * f / p`).
    pub fn angle_to_pixels(&self, angle: f64) -> f64 {
        angle * self.focal_length / self.pixel_pitch()
    }
}

/// Angular turbulence statistics, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularStrength {
    pub tilt_std: f64,
    pub blur_sigma_range: [f64; 2],
}

/// Rescales `base` so its tilt and blur match `strength` under `setup`.
pub fn params_from_optics(strength: AngularStrength, setup: OpticalSetup, base: &TurbulenceParams) -> Result<TurbulenceParams> {
    if !(setup.focal_length > 0.0 && setup.scene_width > 0.0 && setup.distance > 0.0 && setup.image_px > 0) {
        return Err(TurbError::InvalidParams("optical setup values must be positive".into()));
    }
    let p = TurbulenceParams {
        tilt_std: setup.angle_to_pixels(strength.tilt_std),
        blur_sigma_range: strength.blur_sigma_range.map(|s| setup.angle_to_pixels(s)),
        ..base.clone()
    };
    p.validate()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn presets_validate() {
        for (p, _) in TurbulencePreset::MIXTURE {
            p.params(1).validate().unwrap();
        }
        TurbulenceParams::disabled(0).validate().unwrap();
    }

    #[test]
    fn invalid_params_rejected() {
        let base = TurbulenceParams::default();
        for p in [
            TurbulenceParams { tilt_std: -1.0, ..base.clone() },
            TurbulenceParams { blur_sigma_range: [2.0, 1.0], ..base.clone() },
            TurbulenceParams { ar_coeff: 1.0, ..base.clone() },
            TurbulenceParams { ar_coeff: -0.1, ..base.clone() },
            TurbulenceParams { grid_res: 1, ..base.clone() },
        ] {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let p = TurbulencePreset::Strong.params(99);
        assert_eq!(TurbulenceParams::from_toml_str(&p.to_toml_string()).unwrap(), p);
        assert!(TurbulenceParams::from_toml_str("tilt_std = 1.0").is_err());
    }

    #[test]
    fn mixture_frequencies() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 3];
        for _ in 0..20_000 {
            counts[TurbulencePreset::sample(&mut rng) as usize] += 1;
        }
        let f: Vec<f64> = counts.iter().map(|&c| c as f64 / 20_000.0).collect();
        assert!((f[0] - 0.1).abs() < 0.01 && (f[1] - 0.3).abs() < 0.015 && (f[2] - 0.6).abs() < 0.015, "{f:?}");
    }

    #[test]
    fn tilt_scales_with_focal_over_pitch() {
        let setup = OpticalSetup { focal_length: 0.3, scene_width: 1.0, distance: 100.0, image_px: 256 };
        // p = 0.3 * 1 / (100 * 256); f / p = 100 * 256 / 1 = 25600 px per radian.
        assert!((setup.angle_to_pixels(1e-4) - 2.56).abs() < 1e-12);
        let s = AngularStrength { tilt_std: 1e-4, blur_sigma_range: [2e-5, 6e-5] };
        let p = params_from_optics(s, setup, &TurbulenceParams::default()).unwrap();
        assert!((p.tilt_std - 2.56).abs() < 1e-12);
        assert!((p.blur_sigma_range[1] - 1.536).abs() < 1e-12);
    }
}
