//! Reference phase construction written directly from the formulas, sharing
//! no code with the library's band or mixing modules.

#![allow(dead_code)]

use std::f64::consts::PI;

use sope_kernel::synthetic::SeededStream;
use sope_kernel::{PositionIndex, RotationPlan, Scheme};

pub fn ladder(d: usize, base: f64) -> Vec<f64> {
    (0..d / 2).map(|i| base.powf(-(2.0 * i as f64) / d as f64)).collect()
}

/// Pair ranges `(r, theta, phi, t)` for a `(t, r, theta, phi)` ratio.
pub fn ranges(ratio: [usize; 4], d: usize) -> [std::ops::Range<usize>; 4] {
    let unit = d / 2 / ratio.iter().sum::<usize>();
    let n = [ratio[1] * unit, ratio[2] * unit, ratio[3] * unit, ratio[0] * unit];
    let mut start = 0;
    let mut out: [std::ops::Range<usize>; 4] = Default::default();
    for (slot, len) in out.iter_mut().zip(n) {
        *slot = start..start + len;
        start += len;
    }
    out
}

/// Per-pair phases; `periods` is `(t, r, theta, phi)` and `None` means no mixing.
pub fn reference_phases(
    idx: &PositionIndex,
    scheme: Scheme,
    d: usize,
    ratio: [usize; 4],
    periods: Option<[f64; 4]>,
) -> RotationPlan {
    let w = ladder(d, 10_000.0);
    if scheme == Scheme::Rope {
        return RotationPlan::new(w.iter().map(|wi| wi * idx.t).collect());
    }
    let coords = match scheme {
        Scheme::Rope3d => [idx.x, idx.y, idx.z, idx.t],
        _ => [idx.r, idx.theta, idx.phi, idx.t],
    };
    let period_for = |band: usize| periods.map(|p| p[(band + 1) % 4]);
    let mut phases = vec![0.0; d / 2];
    for (band, range) in ranges(ratio, d).into_iter().enumerate() {
        let u = coords[band];
        for k in range {
            phases[k] = match (scheme, period_for(band)) {
                (Scheme::Sope, Some(p)) => {
                    let log = if u == 0.0 { 0.0 } else { u.signum() * (1.0 + u.abs()).ln() };
                    let per = p / (2.0 * PI) * (2.0 * PI * u / p).sin();
                    w[k] * (u + log + per) / 3.0
                }
                _ => w[k] * u,
            };
        }
    }
    RotationPlan::new(phases)
}

pub fn rel_err(fast: f64, reference: f64, q: &[f64], k: &[f64]) -> f64 {
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = reference.abs().max(n(q) * n(k));
    (fast - reference).abs() / if scale == 0.0 { 1.0 } else { scale }
}

pub struct Rng(SeededStream);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(SeededStream::new(seed, 11))
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.uniform()
    }

    pub fn normal_vec(&mut self, d: usize) -> Vec<f64> {
        (0..d).map(|_| self.0.normal()).collect()
    }

    pub fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        xs[((self.0.uniform() * xs.len() as f64) as usize).min(xs.len() - 1)]
    }
}
