//! Base-angle ladder and frequency-band allocation.
//!
//! Rotation pair `i` acts on feature dims `(2i, 2i+1)` and turns at base angle
//! `base^(-2i/d)`. Low pair indices are the high-frequency end of the ladder.
//! An allocation hands contiguous runs of pairs to the four positional
//! components, spatial components first and the sequence index last.

use std::ops::Range;

use crate::error::{Error, Result};

pub const DEFAULT_BASE: f64 = 10_000.0;

/// Default SoPE ratio, ordered `(t, r, theta, phi)`.
pub const SOPE_DEFAULT_RATIO: [usize; 4] = [24, 2, 3, 3];

/// Default RoPE-3D ratio, ordered `(t, x, y, z)`. At d = 128 this is 40/8/8/8 pairs.
pub const ROPE3D_DEFAULT_RATIO: [usize; 4] = [5, 1, 1, 1];

/// Zero-based ladder of rotary base angles, `angles[i] = base^(-2i/d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseAngles {
    d: usize,
    base: f64,
    angles: Vec<f64>,
}

impl BaseAngles {
    pub fn new(d: usize, base: f64) -> Result<Self> {
        if d < 2 || !d.is_multiple_of(2) {
            return Err(Error::InvalidDimension(d));
        }
        if !(base > 1.0) || !base.is_finite() {
            return Err(Error::InvalidBase(base));
        }
        let angles = (0..d / 2)
            .map(|i| base.powf(-2.0 * i as f64 / d as f64))
            .collect();
        Ok(Self { d, base, angles })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// Number of rotation pairs, `d / 2`.
    pub fn pairs(&self) -> usize {
        self.angles.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }

    pub fn get(&self, i: usize) -> f64 {
        self.angles[i]
    }
}

/// Builds the base-angle ladder for head dimension `d`.
pub fn base_angles(d: usize, base: f64) -> Result<BaseAngles> {
    BaseAngles::new(d, base)
}

/// One of the four positional components that own a frequency band.
///
/// Under RoPE-3D the three spatial slots carry Cartesian `x`, `y`, `z` in place
/// of `r`, `theta`, `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    T,
    R,
    Theta,
    Phi,
}

impl Component {
    /// Pair-range order: spatial bands at the high-frequency end, `t` last.
    pub const BAND_ORDER: [Component; 4] =
        [Component::R, Component::Theta, Component::Phi, Component::T];

    /// Position of this component inside a `(t, r, theta, phi)` ratio tuple.
    pub fn ratio_slot(self) -> usize {
        match self {
            Component::T => 0,
            Component::R => 1,
            Component::Theta => 2,
            Component::Phi => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::T => "t",
            Component::R => "r",
            Component::Theta => "theta",
            Component::Phi => "phi",
        }
    }
}

/// Partition of the `d/2` rotation pairs into component sub-bands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandAllocation {
    ratio: [usize; 4],
    ranges: [Range<usize>; 4],
}

impl BandAllocation {
    /// The ratio this allocation was built from, ordered `(t, r, theta, phi)`.
    pub fn ratio(&self) -> [usize; 4] {
        self.ratio
    }

    pub fn range(&self, c: Component) -> Range<usize> {
        self.ranges[c.ratio_slot()].clone()
    }

    /// Pair counts ordered `(t, r, theta, phi)`.
    pub fn counts(&self) -> [usize; 4] {
        [
            self.ranges[0].len(),
            self.ranges[1].len(),
            self.ranges[2].len(),
            self.ranges[3].len(),
        ]
    }

    pub fn pairs(&self) -> usize {
        self.ranges.iter().map(|r| r.len()).sum()
    }

    /// Component owning pair `k`, or `None` when `k` is out of range.
    pub fn component_of(&self, k: usize) -> Option<Component> {
        Component::BAND_ORDER
            .into_iter()
            .find(|c| self.ranges[c.ratio_slot()].contains(&k))
    }

    /// `t:r:theta:phi` rendering used as a table key.
    pub fn ratio_label(&self) -> String {
        ratio_label(self.ratio)
    }
}

pub fn ratio_label(ratio: [usize; 4]) -> String {
    format!("{}:{}:{}:{}", ratio[0], ratio[1], ratio[2], ratio[3])
}

/// Splits `d/2` pairs according to `ratio = (t, r, theta, phi)`.
///
/// The sum of the ratio must divide `d/2` exactly; nothing is rounded.
pub fn allocate_bands(ratio: [usize; 4], d: usize) -> Result<BandAllocation> {
    if d < 2 || !d.is_multiple_of(2) {
        return Err(Error::InvalidDimension(d));
    }
    let pairs = d / 2;
    let sum: usize = ratio.iter().sum();
    if sum == 0 {
        return Err(Error::InvalidRatio(ratio));
    }
    if !pairs.is_multiple_of(sum) {
        return Err(Error::IndivisibleRatio {
            ratio,
            sum,
            pairs,
            remainder: pairs % sum,
        });
    }
    let scale = pairs / sum;
    let mut ranges: [Range<usize>; 4] = Default::default();
    let mut start = 0;
    for c in Component::BAND_ORDER {
        let len = ratio[c.ratio_slot()] * scale;
        ranges[c.ratio_slot()] = start..start + len;
        start += len;
    }
    debug_assert_eq!(start, pairs);
    Ok(BandAllocation { ratio, ranges })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn ladder_values() {
        let a = base_angles(128, 10_000.0).unwrap();
        assert_eq!(a.pairs(), 64);
        assert_eq!(a.get(0), 1.0);
        // 10000^(-32/128) = 10^-1 and 10000^(-64/128) = 10^-2
        assert!(rel(a.get(16), 10f64.powi(-1)) < 1e-15);
        assert!(rel(a.get(32), 10f64.powi(-2)) < 1e-15);
    }

    #[test]
    fn ladder_is_geometric_and_decreasing() {
        let a = base_angles(128, 10_000.0).unwrap();
        let s = a.as_slice();
        assert!(s.windows(2).all(|w| w[0] > w[1]));
        for (i, &v) in s.iter().enumerate() {
            assert!(rel(v, s[1].powi(i as i32)) < 1e-12, "pair {i}");
        }
    }

    #[test]
    fn ladder_errors() {
        assert!(matches!(base_angles(7, 10.0), Err(Error::InvalidDimension(7))));
        assert!(matches!(base_angles(0, 10.0), Err(Error::InvalidDimension(0))));
        assert!(matches!(base_angles(8, 1.0), Err(Error::InvalidBase(_))));
        assert!(matches!(base_angles(8, f64::NAN), Err(Error::InvalidBase(_))));
    }

    #[test]
    fn default_ratio_blocks() {
        let b = allocate_bands([24, 2, 3, 3], 128).unwrap();
        assert_eq!(b.range(Component::R), 0..4);
        assert_eq!(b.range(Component::Theta), 4..10);
        assert_eq!(b.range(Component::Phi), 10..16);
        assert_eq!(b.range(Component::T), 16..64);
        assert_eq!(b.counts(), [48, 4, 6, 6]);
    }

    #[test]
    fn table_ratios() {
        assert_eq!(allocate_bands([1, 1, 1, 1], 128).unwrap().counts(), [16; 4]);
        assert_eq!(
            allocate_bands([8, 6, 9, 9], 128).unwrap().counts(),
            [16, 12, 18, 18]
        );
        assert_eq!(
            allocate_bands([5, 1, 1, 1], 128).unwrap().counts(),
            [40, 8, 8, 8]
        );
    }

    #[test]
    fn allocation_errors() {
        match allocate_bands([3, 2, 2, 2], 128) {
            Err(Error::IndivisibleRatio {
                sum, remainder, ..
            }) => {
                assert_eq!(sum, 9);
                assert_eq!(remainder, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            allocate_bands([0, 0, 0, 0], 128),
            Err(Error::InvalidRatio(_))
        ));
        assert!(matches!(
            allocate_bands([1, 1, 1, 1], 9),
            Err(Error::InvalidDimension(9))
        ));
    }

    #[test]
    fn zero_components_get_empty_ranges() {
        let b = allocate_bands([1, 0, 0, 0], 16).unwrap();
        assert_eq!(b.range(Component::T), 0..8);
        assert!(b.range(Component::R).is_empty());
        assert_eq!(b.component_of(3), Some(Component::T));
        assert_eq!(b.component_of(8), None);
    }

    proptest::proptest! {
        #[test]
        fn allocation_is_total(ratio in proptest::array::uniform4(0usize..6), scale in 1usize..4) {
            let sum: usize = ratio.iter().sum();
            proptest::prop_assume!(sum > 0);
            let d = 2 * sum * scale;
            let b = allocate_bands(ratio, d).unwrap();
            proptest::prop_assert_eq!(b.pairs(), d / 2);
            for k in 0..d / 2 {
                let owners = Component::BAND_ORDER
                    .iter()
                    .filter(|c| b.range(**c).contains(&k))
                    .count();
                proptest::prop_assert_eq!(owners, 1);
            }
        }
    }
}
