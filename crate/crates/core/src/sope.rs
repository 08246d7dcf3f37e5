//! Band-routed rotary encodings: SoPE over `(t, r, theta, phi)` and RoPE-3D
//! over `(t, x, y, z)`, plus the vanilla RoPE scheme behind one config type.
//!
//! Every token is rotated independently by an absolute-phase plan. Because
//! rotations compose, the dot product of a rotated query and a rotated key
//! equals the relative block-diagonal form, which [`relative_score`]
//! evaluates directly from a [`Displacement`].

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bands::{
    allocate_bands, base_angles, BandAllocation, BaseAngles, Component, ROPE3D_DEFAULT_RATIO,
    SOPE_DEFAULT_RATIO,
};
use crate::error::{Error, Result};
use crate::multiscale::{mixed_phase, ScaleConfig};
use crate::position::{displacement, Displacement, Modality, PositionIndex};
use crate::rope::{apply_rotation, apply_rotation_in_place, dot, rope_phases, RotationPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Rope,
    Rope3d,
    Sope,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Rope, Scheme::Rope3d, Scheme::Sope];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Rope => "rope",
            Scheme::Rope3d => "rope3d",
            Scheme::Sope => "sope",
        }
    }

    pub fn default_ratio(self) -> [usize; 4] {
        match self {
            Scheme::Rope => [1, 0, 0, 0],
            Scheme::Rope3d => ROPE3D_DEFAULT_RATIO,
            Scheme::Sope => SOPE_DEFAULT_RATIO,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rope" => Ok(Scheme::Rope),
            "rope3d" => Ok(Scheme::Rope3d),
            "sope" => Ok(Scheme::Sope),
            other => Err(Error::Config(format!(
                "unknown scheme {other:?} (expected rope, rope3d or sope)"
            ))),
        }
    }
}

/// Everything needed to turn a positional index into a rotation plan.
///
/// Under [`Scheme::Rope`] the allocation is pinned to all-`t`; `scale` is
/// also ignored under [`Scheme::Rope3d`]. `wrap_azimuth` only affects SoPE
/// scoring and requires mixing to be off.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingConfig {
    scheme: Scheme,
    angles: BaseAngles,
    allocation: BandAllocation,
    scale: ScaleConfig,
    wrap_azimuth: bool,
}

impl EncodingConfig {
    pub fn new(
        scheme: Scheme,
        d: usize,
        base: f64,
        ratio: Option<[usize; 4]>,
        scale: ScaleConfig,
        wrap_azimuth: bool,
    ) -> Result<Self> {
        let angles = base_angles(d, base)?;
        let ratio = match scheme {
            Scheme::Rope => Scheme::Rope.default_ratio(),
            _ => ratio.unwrap_or(scheme.default_ratio()),
        };
        let allocation = allocate_bands(ratio, d)?;
        scale.validate()?;
        if scheme == Scheme::Sope && wrap_azimuth && scale.enabled {
            return Err(Error::Config(
                "wrap_azimuth needs scale.enabled = false (mixed phases have no relative form)"
                    .into(),
            ));
        }
        Ok(Self {
            scheme,
            angles,
            allocation,
            scale,
            wrap_azimuth,
        })
    }

    /// Scheme defaults at head dimension `d` and base 10000.
    pub fn with_defaults(scheme: Scheme, d: usize) -> Result<Self> {
        Self::new(
            scheme,
            d,
            crate::bands::DEFAULT_BASE,
            None,
            ScaleConfig::default(),
            false,
        )
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn d(&self) -> usize {
        self.angles.d()
    }

    pub fn angles(&self) -> &BaseAngles {
        &self.angles
    }

    pub fn allocation(&self) -> &BandAllocation {
        &self.allocation
    }

    pub fn scale(&self) -> &ScaleConfig {
        &self.scale
    }

    pub fn wrap_azimuth(&self) -> bool {
        self.wrap_azimuth
    }

    fn mixing(&self) -> bool {
        self.scheme == Scheme::Sope && self.scale.enabled
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Query,
    Key,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub index: PositionIndex,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
    /// Set by [`encode`].
    pub role: Option<Role>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Self { tokens, role: None }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn modalities(&self) -> Vec<Modality> {
        self.tokens.iter().map(|t| t.index.modality).collect()
    }
}

/// Coordinate that drives `component`'s band under `scheme`.
fn band_coordinate(idx: &PositionIndex, scheme: Scheme, component: Component) -> f64 {
    match (scheme, component) {
        (_, Component::T) => idx.t,
        (Scheme::Rope3d, Component::R) => idx.x,
        (Scheme::Rope3d, Component::Theta) => idx.y,
        (Scheme::Rope3d, Component::Phi) => idx.z,
        (_, Component::R) => idx.r,
        (_, Component::Theta) => idx.theta,
        (_, Component::Phi) => idx.phi,
    }
}

fn band_phases(idx: &PositionIndex, cfg: &EncodingConfig) -> RotationPlan {
    let mut phases = vec![0.0; cfg.angles.pairs()];
    let scale = if cfg.mixing() {
        cfg.scale.clone()
    } else {
        ScaleConfig::disabled()
    };
    for c in Component::BAND_ORDER {
        let u = band_coordinate(idx, cfg.scheme, c);
        for k in cfg.allocation.range(c) {
            phases[k] = mixed_phase(u, k, &cfg.angles, &scale, c);
        }
    }
    RotationPlan::new(phases)
}

fn expect_scheme(cfg: &EncodingConfig, scheme: Scheme) -> Result<()> {
    if cfg.scheme != scheme {
        return Err(Error::Config(format!(
            "expected a {scheme} config, got {}",
            cfg.scheme
        )));
    }
    Ok(())
}

/// SoPE plan: pair `k` in component `c`'s band turns by the (optionally
/// mixed) phase of that component's coordinate.
pub fn sope_phases(idx: &PositionIndex, cfg: &EncodingConfig) -> Result<RotationPlan> {
    expect_scheme(cfg, Scheme::Sope)?;
    Ok(band_phases(idx, cfg))
}

/// RoPE-3D plan: same band machinery over Cartesian `(t, x, y, z)`, no mixing.
pub fn rope3d_phases(idx: &PositionIndex, cfg: &EncodingConfig) -> Result<RotationPlan> {
    expect_scheme(cfg, Scheme::Rope3d)?;
    Ok(band_phases(idx, cfg))
}

/// Plan for `idx` under whichever scheme `cfg` selects.
pub fn phases_for(idx: &PositionIndex, cfg: &EncodingConfig) -> RotationPlan {
    match cfg.scheme {
        Scheme::Rope => rope_phases(idx.t, &cfg.angles),
        Scheme::Rope3d | Scheme::Sope => band_phases(idx, cfg),
    }
}

/// Rotates every token's features by its own plan.
pub fn encode(tokens: &TokenSequence, cfg: &EncodingConfig, role: Role) -> Result<TokenSequence> {
    let d = cfg.d();
    if let Some(bad) = tokens.tokens.iter().find(|t| t.features.len() != d) {
        return Err(Error::Shape {
            expected: d,
            got: bad.features.len(),
        });
    }
    let encoded = tokens
        .tokens
        .par_iter()
        .map(|tok| {
            let mut features = tok.features.clone();
            apply_rotation_in_place(&mut features, &phases_for(&tok.index, cfg))?;
            Ok(Token {
                index: tok.index,
                features,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TokenSequence {
        tokens: encoded,
        role: Some(role),
    })
}

fn check_pair(q: &[f64], k: &[f64], cfg: &EncodingConfig) -> Result<()> {
    for v in [q, k] {
        if v.len() != cfg.d() {
            return Err(Error::Shape {
                expected: cfg.d(),
                got: v.len(),
            });
        }
    }
    Ok(())
}

/// Attention logit between `q` at `idx1` and `k` at `idx2` under any scheme.
///
/// SoPE with `wrap_azimuth` is evaluated through [`relative_score`] with the
/// azimuth difference reduced into `(-pi, pi]`; every other case is the dot
/// product of the independently rotated vectors.
pub fn score(
    q: &[f64],
    k: &[f64],
    idx1: &PositionIndex,
    idx2: &PositionIndex,
    cfg: &EncodingConfig,
) -> Result<f64> {
    check_pair(q, k, cfg)?;
    if cfg.scheme == Scheme::Sope && cfg.wrap_azimuth {
        return relative_score(q, k, &displacement(idx2, idx1, true), cfg);
    }
    let rq = apply_rotation(q, &phases_for(idx1, cfg))?;
    let rk = apply_rotation(k, &phases_for(idx2, cfg))?;
    Ok(dot(&rq, &rk))
}

/// [`score`] restricted to SoPE configs.
pub fn sope_score(
    q: &[f64],
    k: &[f64],
    idx1: &PositionIndex,
    idx2: &PositionIndex,
    cfg: &EncodingConfig,
) -> Result<f64> {
    expect_scheme(cfg, Scheme::Sope)?;
    score(q, k, idx1, idx2, cfg)
}

/// Block-diagonal relative form: pair `k` in component `c`'s band is rotated
/// by `angles[k] * delta_c`, with `delta = idx2 - idx1`.
///
/// Only defined without mixing.
pub fn relative_score(q: &[f64], k: &[f64], delta: &Displacement, cfg: &EncodingConfig) -> Result<f64> {
    check_pair(q, k, cfg)?;
    if cfg.mixing() {
        return Err(Error::Config(
            "relative form is undefined with multi-scale mixing".into(),
        ));
    }
    let mut phases = vec![0.0; cfg.angles.pairs()];
    let alloc = &cfg.allocation;
    for c in Component::BAND_ORDER {
        let du = match c {
            Component::T => delta.dt,
            Component::R => delta.dr,
            Component::Theta => delta.dtheta,
            Component::Phi => delta.dphi,
        };
        for p in alloc.range(c) {
            phases[p] = cfg.angles.get(p) * du;
        }
    }
    let rk = apply_rotation(k, &RotationPlan::new(phases))?;
    Ok(dot(q, &rk))
}

/// Score contribution of each component's band, ordered `(t, r, theta, phi)`.
/// Under RoPE-3D the spatial slots hold `(x, y, z)`.
pub fn component_scores(
    q: &[f64],
    k: &[f64],
    idx1: &PositionIndex,
    idx2: &PositionIndex,
    cfg: &EncodingConfig,
) -> Result<[f64; 4]> {
    check_pair(q, k, cfg)?;
    let rq = apply_rotation(q, &phases_for(idx1, cfg))?;
    let rk = apply_rotation(k, &phases_for(idx2, cfg))?;
    let mut out = [0.0; 4];
    let alloc = &cfg.allocation;
    for c in Component::BAND_ORDER {
        let dims = 2 * alloc.range(c).start..2 * alloc.range(c).end;
        out[c.ratio_slot()] = dot(&rq[dims.clone()], &rk[dims]);
    }
    Ok(out)
}
