//! Multi-scale phase mixing.
//!
//! Each coordinate `u` is passed through a linear, a log-compressed and a
//! periodic transform; the rotation phase of pair `k` is the equal-weight
//! average of the three, each scaled by that pair's frequency. All three
//! transforms are odd, vanish at zero and have unit slope there, so mixing
//! perturbs small coordinates only at second order.

use std::f64::consts::{PI, TAU};

use crate::bands::{BaseAngles, Component};
use crate::error::{Error, Result};

/// Default periods ordered `(t, r, theta, phi)`.
pub const DEFAULT_PERIODS: [f64; 4] = [1024.0, 10.0, PI, TAU];

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleConfig {
    pub enabled: bool,
    /// Periods for the periodic transform, ordered `(t, r, theta, phi)`.
    pub periods: [f64; 4],
    /// Optional distinct ladder bases for the `(lin, log, per)` scales. When
    /// unset every scale shares the encoder's ladder.
    pub bases: Option<[f64; 3]>,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            periods: DEFAULT_PERIODS,
            bases: None,
        }
    }
}

impl ScaleConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &p in &self.periods {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::InvalidPeriod(p));
            }
        }
        if let Some(bases) = self.bases {
            for b in bases {
                if !(b > 1.0) || !b.is_finite() {
                    return Err(Error::InvalidBase(b));
                }
            }
        }
        Ok(())
    }

    pub fn period(&self, c: Component) -> f64 {
        self.periods[c.ratio_slot()]
    }
}

pub fn g_lin(u: f64) -> f64 {
    u
}

/// `sign(u) * ln(1 + |u|)`.
pub fn g_log(u: f64) -> f64 {
    u.signum() * u.abs().ln_1p()
}

/// `(P / 2pi) * sin(2pi u / P)`.
pub fn g_per(u: f64, period: f64) -> Result<f64> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::InvalidPeriod(period));
    }
    Ok(periodic(u, period))
}

fn periodic(u: f64, period: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    period / TAU * (TAU * u / period).sin()
}

/// Phase of pair `k` for coordinate `u` owned by `component`.
///
/// Disabled mixing falls back to the plain linear phase `angles[k] * u`.
/// The config is assumed validated.
pub fn mixed_phase(
    u: f64,
    k: usize,
    angles: &BaseAngles,
    cfg: &ScaleConfig,
    component: Component,
) -> f64 {
    let w = angles.get(k);
    if !cfg.enabled {
        return w * u;
    }
    let per = periodic(u, cfg.period(component));
    match cfg.bases {
        None => w * (g_lin(u) + g_log(u) + per) / 3.0,
        Some([b_lin, b_log, b_per]) => {
            let e = -2.0 * k as f64 / angles.d() as f64;
            (b_lin.powf(e) * g_lin(u) + b_log.powf(e) * g_log(u) + b_per.powf(e) * per) / 3.0
        }
    }
}
