//! Dense reference evaluation.
//!
//! Materializes full `d x d` block-diagonal rotation matrices and scores by
//! plain matrix products. Slow on purpose; it exists to check the pairwise
//! fast path and is used by the test suite and `sope-kernel verify`.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::rope::RotationPlan;

pub const MAX_ORACLE_DIM: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseRotation {
    pub d: usize,
    pub m: Array2<f64>,
}

impl DenseRotation {
    /// Largest entry of `m^T m - I`.
    pub fn orthogonality_error(&self) -> f64 {
        let mtm = self.m.t().dot(&self.m);
        let mut worst = 0.0f64;
        for ((i, j), v) in mtm.indexed_iter() {
            let e = if i == j { v - 1.0 } else { *v };
            worst = worst.max(e.abs());
        }
        worst
    }
}

/// Places a 2x2 rotation block for every phase on the diagonal.
pub fn build_dense(plan: &RotationPlan) -> DenseRotation {
    let d = plan.d();
    let mut m = Array2::<f64>::zeros((d, d));
    for (i, &phase) in plan.phases().iter().enumerate() {
        let (s, c) = (phase.sin(), phase.cos());
        let a = 2 * i;
        m[[a, a]] = c;
        m[[a, a + 1]] = -s;
        m[[a + 1, a]] = s;
        m[[a + 1, a + 1]] = c;
    }
    DenseRotation { d, m }
}

/// `q^T M_q^T M_k k` with both matrices built densely.
pub fn dense_score(q: &[f64], k: &[f64], plan_q: &RotationPlan, plan_k: &RotationPlan) -> Result<f64> {
    let d = plan_q.d();
    if d > MAX_ORACLE_DIM {
        return Err(Error::Shape {
            expected: MAX_ORACLE_DIM,
            got: d,
        });
    }
    for n in [q.len(), k.len(), plan_k.d()] {
        if n != d {
            return Err(Error::Shape { expected: d, got: n });
        }
    }
    // (M_q q) . (M_k k), which is q^T M_q^T M_k k without the d^3 product.
    let rq: Array1<f64> = build_dense(plan_q).m.dot(&ArrayView1::from(q));
    let rk: Array1<f64> = build_dense(plan_k).m.dot(&ArrayView1::from(k));
    Ok(rq.dot(&rk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bands::base_angles;
    use crate::rope::{rope_phases, rope_score};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn identity_and_half_turn() {
        let id = build_dense(&RotationPlan::identity(3));
        assert_eq!(id.m, Array2::<f64>::eye(6));

        let half = build_dense(&RotationPlan::new(vec![PI]));
        let want = array![[-1.0, 0.0], [0.0, -1.0]];
        for (a, b) in half.m.iter().zip(want.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn quarter_turn_block() {
        let m = build_dense(&RotationPlan::new(vec![FRAC_PI_2, 0.0])).m;
        let want = array![
            [0.0, -1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0]
        ];
        for (a, b) in m.iter().zip(want.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn dense_score_identities() {
        let q = [0.3, -1.0, 2.0, 0.5];
        let k = [1.5, 0.25, -0.75, 2.0];
        let dot: f64 = q.iter().zip(&k).map(|(a, b)| a * b).sum();
        let id = RotationPlan::identity(2);
        assert_abs_diff_eq!(dense_score(&q, &k, &id, &id).unwrap(), dot, epsilon = 1e-15);
        let p = RotationPlan::new(vec![1.3, -0.4]);
        assert_abs_diff_eq!(dense_score(&q, &k, &p, &p).unwrap(), dot, epsilon = 1e-14);
        assert!(dense_score(&q, &k[..2], &p, &p).is_err());
    }

    #[test]
    fn random_instance_matches_fast_path() {
        let a = base_angles(8, 10_000.0).unwrap();
        let q = [0.61, -1.22, 0.05, 0.97, -0.43, 1.8, 0.33, -0.7];
        let k = [-0.29, 0.44, 1.1, -0.63, 0.8, 0.12, -1.5, 0.21];
        let dense = dense_score(&q, &k, &rope_phases(2.0, &a), &rope_phases(5.0, &a)).unwrap();
        let fast = rope_score(&q, &k, 2.0, 5.0, &a).unwrap();
        assert_abs_diff_eq!(dense, fast, epsilon = 1e-12);
    }

    #[test]
    fn relative_matrix_identity() {
        let a = base_angles(16, 10_000.0).unwrap();
        for (t1, t2) in [(0.0, 3.0), (-4.5, 7.25), (9.0, -9.0)] {
            let lhs = build_dense(&rope_phases(t1, &a)).m.t().dot(&build_dense(&rope_phases(t2, &a)).m);
            let rel = build_dense(&rope_phases(t2 - t1, &a));
            for (x, y) in lhs.iter().zip(rel.m.iter()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
            assert!(rel.orthogonality_error() < 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn orthogonal(phases in proptest::collection::vec(-100.0f64..100.0, 1..16)) {
            let m = build_dense(&RotationPlan::new(phases));
            proptest::prop_assert!(m.orthogonality_error() <= 1e-12);
        }
    }
}
