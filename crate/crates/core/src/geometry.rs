//! Cartesian to spherical reparameterization of token coordinates.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::position::{Modality, PositionIndex};

/// Maps `(x, y, z)` to `(r, theta, phi)` with `theta in [0, pi]` and
/// `phi in (-pi, pi]`.
///
/// The origin maps to `(0, 0, 0)`; points on the z axis get `phi = 0`. The
/// negative-x seam (`y = +-0`, `x < 0`) returns `phi = +pi`.
pub fn cart_to_sph(x: f64, y: f64, z: f64) -> Result<(f64, f64, f64)> {
    if !(x.is_finite() && y.is_finite() && z.is_finite()) {
        return Err(Error::InvalidCoordinate(format!(
            "non-finite point ({x}, {y}, {z})"
        )));
    }
    let r = (x * x + y * y + z * z).sqrt();
    if r == 0.0 {
        return Ok((0.0, 0.0, 0.0));
    }
    // atan2(rho, z) equals acos(z / r) but stays well conditioned near the poles.
    let theta = (x * x + y * y).sqrt().atan2(z);
    let phi = if x == 0.0 && y == 0.0 {
        0.0
    } else if y == 0.0 {
        if x < 0.0 {
            PI
        } else {
            0.0
        }
    } else {
        y.atan2(x)
    };
    Ok((r, theta, phi))
}

/// Inverse of [`cart_to_sph`].
pub fn sph_to_cart(r: f64, theta: f64, phi: f64) -> Result<(f64, f64, f64)> {
    if !(r >= 0.0) || !r.is_finite() || !theta.is_finite() || !phi.is_finite() {
        return Err(Error::InvalidCoordinate(format!(
            "invalid spherical point (r={r}, theta={theta}, phi={phi})"
        )));
    }
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Ok((r * st * cp, r * st * sp, r * ct))
}

/// Builds a positional index from a sequence position and Cartesian point.
///
/// Text tokens must sit at the origin.
pub fn index_from_cartesian(
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    modality: Modality,
) -> Result<PositionIndex> {
    if !t.is_finite() {
        return Err(Error::InvalidCoordinate(format!("non-finite position t={t}")));
    }
    if modality == Modality::Text && (x != 0.0 || y != 0.0 || z != 0.0) {
        return Err(Error::InvalidCoordinate(format!(
            "text token at t={t} has nonzero coordinates ({x}, {y}, {z})"
        )));
    }
    let (r, theta, phi) = cart_to_sph(x, y, z)?;
    Ok(PositionIndex {
        t,
        x,
        y,
        z,
        r,
        theta,
        phi,
        modality,
    })
}
