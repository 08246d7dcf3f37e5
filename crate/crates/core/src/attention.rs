//! Attention-score matrices over encoded tokens and the metrics used to
//! quantify how concentrated attention is.
//!
//! Rows may be computed in parallel. Every reduction inside a row runs
//! sequentially left to right, so results are bit-identical for any thread
//! count.

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::position::Modality;
use crate::rope::dot;
use crate::sope::{encode, score, EncodingConfig, Role, Scheme, TokenSequence};

pub const DEFAULT_TOPK_FRAC: f64 = 0.05;

/// Tolerance on softmax row sums.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionOptions {
    pub scale_by_sqrt_d: bool,
    pub causal: bool,
    pub topk_frac: f64,
}

impl Default for AttentionOptions {
    fn default() -> Self {
        Self {
            scale_by_sqrt_d: true,
            causal: false,
            topk_frac: DEFAULT_TOPK_FRAC,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionReport {
    /// Row-stochastic attention matrix.
    pub scores: Array2<f64>,
    /// Per-row entropy in nats.
    pub row_entropy: Vec<f64>,
    /// Per-row mass on the `topk` largest entries.
    pub topk_mass: Vec<f64>,
    pub topk: usize,
    /// Mass flowing from text queries to point-cloud keys, averaged over
    /// text rows. Zero when there are no text rows.
    pub cross_modal_mass: f64,
}

impl AttentionReport {
    pub fn mean_row_entropy(&self) -> f64 {
        mean(&self.row_entropy)
    }

    pub fn mean_topk_mass(&self) -> f64 {
        mean(&self.topk_mass)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Raw logits `S[i][j] = score(q_i, k_j)`, optionally divided by `sqrt(d)`.
/// With `causal`, entries above the diagonal are `-inf`.
pub fn score_matrix(
    queries: &TokenSequence,
    keys: &TokenSequence,
    cfg: &EncodingConfig,
    scale_by_sqrt_d: bool,
    causal: bool,
) -> Result<Array2<f64>> {
    let (nq, nk) = (queries.len(), keys.len());
    if causal && nq != nk {
        return Err(Error::Shape {
            expected: nq,
            got: nk,
        });
    }
    let scale = if scale_by_sqrt_d {
        1.0 / (cfg.d() as f64).sqrt()
    } else {
        1.0
    };

    // The wrapped-azimuth SoPE score has no absolute-phase form.
    let relative = cfg.scheme() == Scheme::Sope && cfg.wrap_azimuth();
    let (eq, ek) = if relative {
        for t in queries.tokens.iter().chain(&keys.tokens) {
            if t.features.len() != cfg.d() {
                return Err(Error::Shape {
                    expected: cfg.d(),
                    got: t.features.len(),
                });
            }
        }
        (queries.clone(), keys.clone())
    } else {
        (encode(queries, cfg, Role::Query)?, encode(keys, cfg, Role::Key)?)
    };

    let rows = (0..nq)
        .into_par_iter()
        .map(|i| {
            let q = &eq.tokens[i];
            (0..nk)
                .map(|j| {
                    if causal && j > i {
                        return Ok(f64::NEG_INFINITY);
                    }
                    let k = &ek.tokens[j];
                    let s = if relative {
                        score(&q.features, &k.features, &q.index, &k.index, cfg)?
                    } else {
                        dot(&q.features, &k.features)
                    };
                    Ok(s * scale)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((nq, nk), flat).map_err(|e| Error::Invariant(e.to_string()))
}

/// Numerically stable row softmax. `-inf` entries are masked and get 0.
pub fn softmax_rows(s: &Array2<f64>) -> Result<Array2<f64>> {
    let mut out = Array2::<f64>::zeros(s.raw_dim());
    for (i, (row, mut dst)) in s.rows().into_iter().zip(out.rows_mut()).enumerate() {
        if let Some(bad) = row.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
            return Err(Error::Invariant(format!("row {i} has non-finite score {bad}")));
        }
        let max = row
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            if row.is_empty() {
                continue;
            }
            return Err(Error::AllMaskedRow(i));
        }
        let mut total = 0.0;
        for (d, &v) in dst.iter_mut().zip(row.iter()) {
            *d = if v == f64::NEG_INFINITY { 0.0 } else { (v - max).exp() };
            total += *d;
        }
        dst.mapv_inplace(|v| v / total);
    }
    Ok(out)
}

fn row_entropy(row: ArrayView1<f64>) -> f64 {
    let mut h = 0.0;
    for &p in row.iter() {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h
}

fn topk_mass(row: ArrayView1<f64>, k: usize) -> f64 {
    let mut sorted: Vec<f64> = row.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.iter().take(k).sum()
}

/// Entropy, top-k mass and cross-modal mass of a row-stochastic matrix.
///
/// `k = ceil(topk_frac * n_keys)`, at least 1.
pub fn bias_metrics(
    p: &Array2<f64>,
    query_modalities: &[Modality],
    key_modalities: &[Modality],
    topk_frac: f64,
) -> Result<AttentionReport> {
    let (nq, nk) = p.dim();
    if query_modalities.len() != nq {
        return Err(Error::Shape {
            expected: nq,
            got: query_modalities.len(),
        });
    }
    if key_modalities.len() != nk {
        return Err(Error::Shape {
            expected: nk,
            got: key_modalities.len(),
        });
    }
    if !(topk_frac > 0.0 && topk_frac <= 1.0) {
        return Err(Error::Config(format!(
            "top-k fraction must be in (0, 1], got {topk_frac}"
        )));
    }
    for (i, row) in p.rows().into_iter().enumerate() {
        let sum: f64 = row.iter().sum();
        let in_range = row.iter().all(|v| (0.0..=1.0).contains(v));
        if !in_range || (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NonStochastic { row: i, sum });
        }
    }

    let topk = ((topk_frac * nk as f64).ceil() as usize).clamp(1, nk.max(1));
    let row_entropy = p.rows().into_iter().map(row_entropy).collect();
    let topk_mass = p.rows().into_iter().map(|r| topk_mass(r, topk)).collect();

    let mut text_rows = 0usize;
    let mut flow = 0.0;
    for (row, m) in p.rows().into_iter().zip(query_modalities) {
        if *m != Modality::Text {
            continue;
        }
        text_rows += 1;
        for (&v, km) in row.iter().zip(key_modalities) {
            if *km == Modality::PointCloud {
                flow += v;
            }
        }
    }
    let cross_modal_mass = if text_rows == 0 {
        0.0
    } else {
        flow / text_rows as f64
    };

    Ok(AttentionReport {
        scores: p.clone(),
        row_entropy,
        topk_mass,
        topk,
        cross_modal_mass,
    })
}

/// Scores, softmax and metrics in one pass. Returns the raw logits alongside
/// the report.
pub fn attend(
    queries: &TokenSequence,
    keys: &TokenSequence,
    cfg: &EncodingConfig,
    opts: &AttentionOptions,
) -> Result<(Array2<f64>, AttentionReport)> {
    let raw = score_matrix(queries, keys, cfg, opts.scale_by_sqrt_d, opts.causal)?;
    let p = softmax_rows(&raw)?;
    let report = bias_metrics(&p, &queries.modalities(), &keys.modalities(), opts.topk_frac)?;
    Ok((raw, report))
}
