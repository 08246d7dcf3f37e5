//! Vanilla rotary position embedding over consecutive feature pairs.

use crate::bands::BaseAngles;
use crate::error::{Error, Result};

/// Per-pair rotation phases. Pair `i` rotates feature dims `(2i, 2i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationPlan {
    phases: Vec<f64>,
}

impl RotationPlan {
    pub fn new(phases: Vec<f64>) -> Self {
        Self { phases }
    }

    pub fn identity(pairs: usize) -> Self {
        Self {
            phases: vec![0.0; pairs],
        }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn pairs(&self) -> usize {
        self.phases.len()
    }

    /// Feature dimension this plan applies to.
    pub fn d(&self) -> usize {
        2 * self.phases.len()
    }

    /// Plan whose phases are the pairwise sums of `self` and `other`.
    pub fn compose(&self, other: &RotationPlan) -> Result<RotationPlan> {
        if self.pairs() != other.pairs() {
            return Err(Error::Shape {
                expected: self.pairs(),
                got: other.pairs(),
            });
        }
        Ok(RotationPlan::new(
            self.phases
                .iter()
                .zip(&other.phases)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn into_phases(self) -> Vec<f64> {
        self.phases
    }
}

/// Phases of a token at scalar position `t`: `angles[i] * t`.
pub fn rope_phases(t: f64, angles: &BaseAngles) -> RotationPlan {
    RotationPlan::new(angles.as_slice().iter().map(|a| a * t).collect())
}

/// Rotates each consecutive pair of `v` by the plan's phase.
pub fn apply_rotation(v: &[f64], plan: &RotationPlan) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    apply_rotation_in_place(&mut out, plan)?;
    Ok(out)
}

pub fn apply_rotation_in_place(v: &mut [f64], plan: &RotationPlan) -> Result<()> {
    if v.len() != plan.d() {
        return Err(Error::Shape {
            expected: plan.d(),
            got: v.len(),
        });
    }
    for (pair, &phase) in v.chunks_exact_mut(2).zip(&plan.phases) {
        let (s, c) = phase.sin_cos();
        let (a, b) = (pair[0], pair[1]);
        pair[0] = a * c - b * s;
        pair[1] = a * s + b * c;
    }
    Ok(())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// RoPE attention logit between a query at `t1` and a key at `t2`.
///
/// Equal to `q^T R(t2 - t1) k`, so the score depends on positions only
/// through their difference.
pub fn rope_score(q: &[f64], k: &[f64], t1: f64, t2: f64, angles: &BaseAngles) -> Result<f64> {
    if q.len() != k.len() {
        return Err(Error::Shape {
            expected: q.len(),
            got: k.len(),
        });
    }
    if t1 == t2 {
        return Ok(dot(q, k));
    }
    let rq = apply_rotation(q, &rope_phases(t1, angles))?;
    let rk = apply_rotation(k, &rope_phases(t2, angles))?;
    Ok(dot(&rq, &rk))
}
