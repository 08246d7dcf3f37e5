use std::f64::consts::{PI, TAU};
use std::fmt;

/// Token modality. Text tokens sit at the spatial origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    PointCloud,
    Text,
}

impl Modality {
    pub fn tag(self) -> char {
        match self {
            Modality::PointCloud => 'p',
            Modality::Text => 't',
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "p" => Some(Modality::PointCloud),
            "t" => Some(Modality::Text),
            _ => None,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::PointCloud => "point_cloud",
            Modality::Text => "text",
        })
    }
}

/// Four-component positional index carried in both Cartesian `(t, x, y, z)`
/// and spherical `(t, r, theta, phi)` form.
///
/// Build through [`crate::geometry::index_from_cartesian`] or
/// [`PositionIndex::from_spherical`] to keep the two forms consistent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionIndex {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub modality: Modality,
}

impl PositionIndex {
    /// A text token at sequence position `t`.
    pub fn text(t: f64) -> Self {
        Self {
            t,
            x: 0.0,
            y: 0.0,
            z: 0.0,
            r: 0.0,
            theta: 0.0,
            phi: 0.0,
            modality: Modality::Text,
        }
    }

    /// Builds an index from spherical components; Cartesian fields are
    /// derived. Angles are stored as given, so values outside the canonical
    /// ranges are allowed here (useful for testing raw displacements).
    pub fn from_spherical(t: f64, r: f64, theta: f64, phi: f64, modality: Modality) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            t,
            x: r * st * cp,
            y: r * st * sp,
            z: r * ct,
            r,
            theta,
            phi,
            modality,
        }
    }
}

/// Component-wise difference of two indices, `(dt, dr, dtheta, dphi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    pub dt: f64,
    pub dr: f64,
    pub dtheta: f64,
    pub dphi: f64,
}

/// Returns `a - b` per component.
///
/// With `wrap_azimuth`, `dphi` is reduced into `(-pi, pi]`. At the seam
/// `|dphi| = pi` both orderings map to `+pi`, so antisymmetry holds everywhere
/// except that tie.
pub fn displacement(a: &PositionIndex, b: &PositionIndex, wrap_azimuth: bool) -> Displacement {
    let dphi = a.phi - b.phi;
    Displacement {
        dt: a.t - b.t,
        dr: a.r - b.r,
        dtheta: a.theta - b.theta,
        dphi: if wrap_azimuth { wrap_angle(dphi) } else { dphi },
    }
}

/// Reduces an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(t: f64, r: f64, theta: f64, phi: f64) -> PositionIndex {
        PositionIndex::from_spherical(t, r, theta, phi, Modality::PointCloud)
    }

    #[test]
    fn self_difference_is_zero() {
        let a = idx(5.0, 2.0, 1.0, 3.0);
        let d = displacement(&a, &a, true);
        assert_eq!((d.dt, d.dr, d.dtheta, d.dphi), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn literal_and_wrapped() {
        let a = idx(5.0, 2.0, 1.0, 3.0);
        let b = idx(3.0, 1.0, 0.5, -3.0);
        let d = displacement(&a, &b, false);
        assert_eq!((d.dt, d.dr, d.dtheta, d.dphi), (2.0, 1.0, 0.5, 6.0));
        let w = displacement(&a, &b, true);
        assert_eq!((w.dt, w.dr, w.dtheta), (2.0, 1.0, 0.5));
        assert!((w.dphi - (6.0 - TAU)).abs() < 1e-12);
        assert!((w.dphi + 0.283_185_307_179_586_2).abs() < 1e-12);
    }

    #[test]
    fn seam_tie() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        let a = idx(0.0, 1.0, 1.0, PI / 2.0);
        let b = idx(0.0, 1.0, 1.0, -PI / 2.0);
        assert_eq!(displacement(&a, &b, true).dphi, PI);
        assert_eq!(displacement(&b, &a, true).dphi, PI);
    }

    #[test]
    fn text_token_is_origin() {
        let t = PositionIndex::text(4.0);
        assert_eq!((t.x, t.y, t.z, t.r, t.theta, t.phi), (0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(t.modality, Modality::Text);
    }

    proptest::proptest! {
        #[test]
        fn antisymmetry(v in proptest::array::uniform8(-10.0f64..10.0)) {
            let a = idx(v[0], v[1], v[2], v[3]);
            let b = idx(v[4], v[5], v[6], v[7]);
            let ab = displacement(&a, &b, false);
            let ba = displacement(&b, &a, false);
            proptest::prop_assert_eq!(ab.dt, -ba.dt);
            proptest::prop_assert_eq!(ab.dr, -ba.dr);
            proptest::prop_assert_eq!(ab.dtheta, -ba.dtheta);
            proptest::prop_assert_eq!(ab.dphi, -ba.dphi);

            let wab = displacement(&a, &b, true).dphi;
            let wba = displacement(&b, &a, true).dphi;
            proptest::prop_assert!(wab > -PI && wab <= PI);
            if (wab.abs() - PI).abs() > 1e-9 {
                proptest::prop_assert!((wab + wba).abs() < 1e-12);
            }
        }
    }
}
