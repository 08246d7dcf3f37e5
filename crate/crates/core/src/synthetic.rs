//! Seeded synthetic inputs.
//!
//! All randomness comes from ChaCha20 (RFC 8439 block function, 64-bit block
//! counter) keyed with the seed as 8 little-endian bytes followed by 24 zero
//! bytes. Independent draws use separate stream ids. A uniform in `[0, 1)` is
//! `(word >> 11) * 2^-53` for one 64-bit output word; standard normals come in
//! pairs from Box-Muller:
//!
//! ```text
//! u1 = 1 - uniform()          // (0, 1]
//! u2 = uniform()
//! z0 = sqrt(-2 ln u1) * cos(2 pi u2)
//! z1 = sqrt(-2 ln u1) * sin(2 pi u2)
//! ```
//!
//! These steps are enough to reproduce the CLI's outputs in another language.

use std::f64::consts::TAU;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::Result;
use crate::geometry::index_from_cartesian;
use crate::position::{Modality, PositionIndex};

pub const STREAM_SCENE: u64 = 0;
pub const STREAM_QUERIES: u64 = 1;
pub const STREAM_KEYS: u64 = 2;

pub struct SeededStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl SeededStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(radius * s);
        radius * c
    }
}

/// `n` feature vectors of length `d`, standard normal, from one stream.
pub fn gaussian_features(n: usize, d: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = SeededStream::new(seed, stream);
    (0..n)
        .map(|_| (0..d).map(|_| rng.normal()).collect())
        .collect()
}

/// Half-extents of the synthetic room in meters, centered on the sensor.
pub const ROOM_HALF_EXTENT: [f64; 3] = [4.0, 4.0, 1.5];

/// A toy indoor scene: point-cloud tokens sampled uniformly in a box around
/// the origin and numbered in raster order (z, then y, then x), followed by
/// text tokens at the origin. One token in eight is text, at least one when
/// `n >= 2`.
pub fn synthetic_scene(n: usize, seed: u64) -> Result<Vec<PositionIndex>> {
    let n_text = if n >= 2 { (n / 8).max(1) } else { 0 };
    let n_points = n - n_text;
    let mut rng = SeededStream::new(seed, STREAM_SCENE);
    let mut points: Vec<[f64; 3]> = (0..n_points)
        .map(|_| {
            let mut p = [0.0; 3];
            for (v, h) in p.iter_mut().zip(ROOM_HALF_EXTENT) {
                *v = (2.0 * rng.uniform() - 1.0) * h;
            }
            p
        })
        .collect();
    points.sort_by(|a, b| {
        a[2].total_cmp(&b[2])
            .then(a[1].total_cmp(&b[1]))
            .then(a[0].total_cmp(&b[0]))
    });
    let mut out = Vec::with_capacity(n);
    for (t, p) in points.iter().enumerate() {
        out.push(index_from_cartesian(t as f64, p[0], p[1], p[2], Modality::PointCloud)?);
    }
    for t in n_points..n {
        out.push(PositionIndex::text(t as f64));
    }
    Ok(out)
}
