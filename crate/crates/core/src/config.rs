//! TOML run configuration.
//!
//! ```toml
//! scheme = "sope"          # rope | rope3d | sope
//! d = 128
//! base = 10000.0
//! ratio = [24, 2, 3, 3]    # t : r : theta : phi  (t : x : y : z for rope3d)
//! wrap_azimuth = false
//! seed = 0
//!
//! [scale]
//! enabled = true
//! periods = [1024.0, 10.0, 3.141592653589793, 6.283185307179586]  # t, r, theta, phi
//! bases = [10000.0, 10000.0, 10000.0]                               # optional: lin, log, per
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::bands::DEFAULT_BASE;
use crate::error::{Error, Result};
use crate::multiscale::{ScaleConfig, DEFAULT_PERIODS};
use crate::sope::{EncodingConfig, Scheme};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scheme: Option<String>,
    d: Option<usize>,
    base: Option<f64>,
    ratio: Option<Vec<usize>>,
    wrap_azimuth: Option<bool>,
    seed: Option<u64>,
    scale: Option<RawScale>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScale {
    enabled: Option<bool>,
    periods: Option<Vec<f64>>,
    bases: Option<Vec<f64>>,
}

/// Validated run settings. The ratio, when given, belongs to `scheme`;
/// other schemes built from the same settings use their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub scheme: Scheme,
    pub d: usize,
    pub base: f64,
    pub ratio: Option<[usize; 4]>,
    pub scale: ScaleConfig,
    pub wrap_azimuth: bool,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            scheme: Scheme::Sope,
            d: 128,
            base: DEFAULT_BASE,
            ratio: None,
            scale: ScaleConfig::default(),
            wrap_azimuth: false,
            seed: 0,
        }
    }
}

impl Settings {
    pub fn encoding(&self) -> Result<EncodingConfig> {
        self.encoding_for(self.scheme)
    }

    /// Config for `scheme`, reusing the shared settings.
    pub fn encoding_for(&self, scheme: Scheme) -> Result<EncodingConfig> {
        let ratio = if scheme == self.scheme { self.ratio } else { None };
        self.build(scheme, ratio)
    }

    /// SoPE config with an explicit ratio.
    pub fn sope_with_ratio(&self, ratio: [usize; 4]) -> Result<EncodingConfig> {
        self.build(Scheme::Sope, Some(ratio))
    }

    fn build(&self, scheme: Scheme, ratio: Option<[usize; 4]>) -> Result<EncodingConfig> {
        let wrap = scheme == Scheme::Sope && self.wrap_azimuth;
        EncodingConfig::new(scheme, self.d, self.base, ratio, self.scale.clone(), wrap)
    }

    /// Settings that are accepted but have no effect.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.scheme == Scheme::Rope && self.ratio.is_some() {
            out.push("ratio is ignored for scheme rope".to_string());
        }
        if self.scheme != Scheme::Sope && self.wrap_azimuth {
            out.push(format!("wrap_azimuth is ignored for scheme {}", self.scheme));
        }
        out
    }
}

fn fixed<const N: usize, T: Copy>(v: Vec<T>, key: &str) -> Result<[T; N]> {
    let n = v.len();
    v.try_into()
        .map_err(|_| Error::Config(format!("{key} needs {N} entries, got {n}")))
}

pub fn parse_config(text: &str) -> Result<Settings> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let defaults = Settings::default();
    let scale = raw.scale.unwrap_or_default();
    let settings = Settings {
        scheme: match raw.scheme {
            Some(s) => s.parse()?,
            None => defaults.scheme,
        },
        d: raw.d.unwrap_or(defaults.d),
        base: raw.base.unwrap_or(defaults.base),
        ratio: raw.ratio.map(|r| fixed(r, "ratio")).transpose()?,
        scale: ScaleConfig {
            enabled: scale.enabled.unwrap_or(true),
            periods: match scale.periods {
                Some(p) => fixed(p, "scale.periods")?,
                None => DEFAULT_PERIODS,
            },
            bases: scale.bases.map(|b| fixed(b, "scale.bases")).transpose()?,
        },
        wrap_azimuth: raw.wrap_azimuth.unwrap_or(false),
        seed: raw.seed.unwrap_or(0),
    };
    settings.encoding()?;
    Ok(settings)
}

pub fn load_config(path: &Path) -> Result<Settings> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Parses `"8:6:9:9"` into a `(t, r, theta, phi)` ratio.
pub fn parse_ratio(s: &str) -> Result<[usize; 4]> {
    let parts = s
        .trim()
        .split(':')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("invalid ratio {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    fixed(parts, "ratio")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_defaults() {
        let s = parse_config("").unwrap();
        assert_eq!(s, Settings::default());
        let cfg = s.encoding().unwrap();
        assert_eq!(cfg.scheme(), Scheme::Sope);
        assert_eq!(cfg.d(), 128);
        assert_eq!(cfg.allocation().ratio(), [24, 2, 3, 3]);
        assert!(cfg.scale().enabled);
        assert!(!cfg.wrap_azimuth());
    }

    #[test]
    fn angular_biased_ratio() {
        let s = parse_config("ratio = [8, 6, 9, 9]").unwrap();
        assert_eq!(s.encoding().unwrap().allocation().counts(), [16, 12, 18, 18]);
    }

    #[test]
    fn rope_ignores_ratio_with_warning() {
        let s = parse_config("scheme = \"rope\"\nratio = [3, 2, 2, 2]").unwrap();
        assert_eq!(s.warnings(), vec!["ratio is ignored for scheme rope".to_string()]);
        assert_eq!(s.encoding().unwrap().scheme(), Scheme::Rope);
    }

    #[test]
    fn full_schema() {
        let s = parse_config(
            "scheme = \"sope\"\nd = 16\nbase = 500.0\nratio = [1, 1, 1, 1]\nwrap_azimuth = true\nseed = 9\n[scale]\nenabled = false\nperiods = [10.0, 2.0, 3.0, 6.0]\nbases = [100.0, 200.0, 300.0]\n",
        )
        .unwrap();
        assert_eq!(s.d, 16);
        assert_eq!(s.seed, 9);
        assert_eq!(s.scale.periods, [10.0, 2.0, 3.0, 6.0]);
        assert_eq!(s.scale.bases, Some([100.0, 200.0, 300.0]));
        assert!(s.encoding().unwrap().wrap_azimuth());
    }

    #[test]
    fn rejections() {
        assert!(matches!(parse_config("colour = 1"), Err(Error::Config(_))));
        assert!(matches!(parse_config("[scale]\nspeed = 2"), Err(Error::Config(_))));
        assert!(matches!(
            parse_config("ratio = [3, 2, 2, 2]"),
            Err(Error::IndivisibleRatio { .. })
        ));
        assert!(matches!(parse_config("ratio = [1, 1, 1]"), Err(Error::Config(_))));
        assert!(matches!(parse_config("d = 7"), Err(Error::InvalidDimension(7))));
        assert!(matches!(parse_config("scheme = \"alibi\""), Err(Error::Config(_))));
        assert!(matches!(
            parse_config("[scale]\nperiods = [1.0, 0.0, 1.0, 1.0]"),
            Err(Error::InvalidPeriod(_))
        ));
        assert!(matches!(parse_config("wrap_azimuth = true"), Err(Error::Config(_))));
    }

    #[test]
    fn ratio_strings() {
        assert_eq!(parse_ratio("8:6:9:9").unwrap(), [8, 6, 9, 9]);
        assert_eq!(parse_ratio(" 24 : 2 : 3 : 3 ").unwrap(), [24, 2, 3, 3]);
        assert!(parse_ratio("1:1:1").is_err());
        assert!(parse_ratio("a:1:1:1").is_err());
    }

    #[test]
    fn other_schemes_use_their_defaults() {
        let s = parse_config("ratio = [1, 1, 1, 1]").unwrap();
        assert_eq!(s.encoding_for(Scheme::Rope3d).unwrap().allocation().ratio(), [5, 1, 1, 1]);
        assert_eq!(s.encoding_for(Scheme::Sope).unwrap().allocation().ratio(), [1, 1, 1, 1]);
    }
}
