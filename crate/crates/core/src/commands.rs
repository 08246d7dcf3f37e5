//! The CLI subcommands as library functions returning their text output.

use std::fmt::Write as _;

use crate::attention::{attend, AttentionOptions, AttentionReport};
use crate::config::Settings;
use crate::error::{Error, Result};
use crate::geometry::index_from_cartesian;
use crate::oracle::{dense_score, MAX_ORACLE_DIM};
use crate::position::Modality;
use crate::report::{fmt_num, matrix_csv, ReportBuilder};
use crate::rope::dot;
use crate::sope::{encode, phases_for, score, EncodingConfig, Role, Scheme, Token, TokenSequence};
use crate::synthetic::{gaussian_features, SeededStream, STREAM_KEYS, STREAM_QUERIES};

/// The four ratios compared in the allocation ablation, `t:r:theta:phi`.
pub const ABLATION_RATIOS: [&str; 4] = ["8:6:9:9", "1:1:1:1", "5:1:1:1", "24:2:3:3"];

/// Query and key sequences for a token file.
///
/// Tokens with inline features use them as both query and key. Otherwise
/// queries and keys are drawn from separate seeded normal streams.
pub fn prepare_inputs(seq: &TokenSequence, d: usize, seed: u64) -> Result<(TokenSequence, TokenSequence)> {
    let has_features = seq.tokens.first().is_some_and(|t| !t.features.is_empty());
    if has_features {
        if let Some(bad) = seq.tokens.iter().find(|t| t.features.len() != d) {
            return Err(Error::Shape {
                expected: d,
                got: bad.features.len(),
            });
        }
        return Ok((seq.clone(), seq.clone()));
    }
    let with = |stream| {
        let feats = gaussian_features(seq.len(), d, seed, stream);
        TokenSequence::new(
            seq.tokens
                .iter()
                .zip(feats)
                .map(|(t, features)| Token {
                    index: t.index,
                    features,
                })
                .collect(),
        )
    };
    Ok((with(STREAM_QUERIES), with(STREAM_KEYS)))
}

/// One row per token: `token,t,modality,f0..` and, with `with_phases`,
/// the per-pair rotation phases `p0..`.
pub fn cmd_encode(seq: &TokenSequence, settings: &Settings, role: Role, with_phases: bool) -> Result<String> {
    let cfg = settings.encoding()?;
    let (q, k) = prepare_inputs(seq, cfg.d(), settings.seed)?;
    let input = match role {
        Role::Query => q,
        Role::Key => k,
    };
    let encoded = encode(&input, &cfg, role)?;

    let mut out = String::from("token,t,modality");
    for i in 0..cfg.d() {
        let _ = write!(out, ",f{i}");
    }
    if with_phases {
        for i in 0..cfg.d() / 2 {
            let _ = write!(out, ",p{i}");
        }
    }
    out.push('\n');
    for (n, tok) in encoded.tokens.iter().enumerate() {
        let _ = write!(out, "{n},{},{}", fmt_num(tok.index.t), tok.index.modality.tag());
        for v in &tok.features {
            out.push(',');
            out.push_str(&fmt_num(*v));
        }
        if with_phases {
            for p in phases_for(&tok.index, &cfg).phases() {
                out.push(',');
                out.push_str(&fmt_num(*p));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug)]
pub struct ScoreOutput {
    pub raw_csv: String,
    pub attention_csv: String,
    pub report: String,
    pub attention: AttentionReport,
}

fn describe(b: &mut ReportBuilder, cfg: &EncodingConfig, seq: &TokenSequence, settings: &Settings, opts: &AttentionOptions) {
    let text = seq.tokens.iter().filter(|t| t.index.modality == Modality::Text).count();
    b.field("scheme", cfg.scheme())
        .field("d", cfg.d())
        .field("base", fmt_num(cfg.angles().base()))
        .field(
            "ratio",
            match cfg.scheme() {
                Scheme::Rope => "n/a".to_string(),
                _ => cfg.allocation().ratio_label(),
            },
        )
        .field("mixing", if cfg.scheme() == Scheme::Sope && cfg.scale().enabled { "on" } else { "off" })
        .field("wrap_azimuth", cfg.wrap_azimuth())
        .field("tokens", seq.len())
        .field("text_tokens", text)
        .field("seed", settings.seed)
        .field("causal", opts.causal)
        .field("scaled", opts.scale_by_sqrt_d)
        .num("topk_frac", opts.topk_frac);
}

pub fn cmd_score(seq: &TokenSequence, settings: &Settings, opts: &AttentionOptions) -> Result<ScoreOutput> {
    let cfg = settings.encoding()?;
    let (q, k) = prepare_inputs(seq, cfg.d(), settings.seed)?;
    let (raw, rep) = attend(&q, &k, &cfg, opts)?;

    let mut b = ReportBuilder::new();
    describe(&mut b, &cfg, seq, settings, opts);
    b.field("topk", rep.topk)
        .num("mean_row_entropy", rep.mean_row_entropy())
        .num("mean_topk_mass", rep.mean_topk_mass())
        .num("cross_modal_mass", rep.cross_modal_mass)
        .blank()
        .line("row,modality,entropy,topk_mass");
    for (i, tok) in seq.tokens.iter().enumerate() {
        b.line(&format!(
            "{i},{},{},{}",
            tok.index.modality.tag(),
            fmt_num(rep.row_entropy[i]),
            fmt_num(rep.topk_mass[i])
        ));
    }
    Ok(ScoreOutput {
        raw_csv: matrix_csv(&raw),
        attention_csv: matrix_csv(&rep.scores),
        report: b.finish(),
        attention: rep,
    })
}

fn metric_row(key: &str, rep: &AttentionReport) -> String {
    format!(
        "{key},{},{},{}",
        fmt_num(rep.mean_row_entropy()),
        fmt_num(rep.mean_topk_mass()),
        fmt_num(rep.cross_modal_mass)
    )
}

fn common_header(b: &mut ReportBuilder, seq: &TokenSequence, settings: &Settings, opts: &AttentionOptions) {
    let text = seq.tokens.iter().filter(|t| t.index.modality == Modality::Text).count();
    b.field("d", settings.d)
        .field("base", fmt_num(settings.base))
        .field("mixing", if settings.scale.enabled { "on" } else { "off" })
        .field("tokens", seq.len())
        .field("text_tokens", text)
        .field("seed", settings.seed)
        .field("causal", opts.causal)
        .field("scaled", opts.scale_by_sqrt_d)
        .num("topk_frac", opts.topk_frac)
        .blank();
}

/// Metric table for rope, rope3d and sope on the same tokens and features.
pub fn cmd_analyze(seq: &TokenSequence, settings: &Settings, opts: &AttentionOptions) -> Result<String> {
    let (q, k) = prepare_inputs(seq, settings.d, settings.seed)?;
    let mut b = ReportBuilder::new();
    common_header(&mut b, seq, settings, opts);
    b.line("scheme,ratio,mean_row_entropy,mean_topk_mass,cross_modal_mass");
    for scheme in Scheme::ALL {
        let cfg = settings.encoding_for(scheme)?;
        let (_, rep) = attend(&q, &k, &cfg, opts)?;
        let ratio = match scheme {
            Scheme::Rope => "n/a".to_string(),
            _ => cfg.allocation().ratio_label(),
        };
        b.line(&metric_row(&format!("{scheme},{ratio}"), &rep));
    }
    Ok(b.finish())
}

/// SoPE metric table keyed by allocation ratio. Every ratio is validated
/// before any scoring runs.
pub fn cmd_ablate(seq: &TokenSequence, settings: &Settings, ratios: &[String], opts: &AttentionOptions) -> Result<String> {
    let configs = ratios
        .iter()
        .map(|r| {
            let ratio = crate::config::parse_ratio(r)?;
            Ok((r.trim().to_string(), settings.sope_with_ratio(ratio)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (q, k) = prepare_inputs(seq, settings.d, settings.seed)?;
    let mut b = ReportBuilder::new();
    b.field("scheme", Scheme::Sope);
    common_header(&mut b, seq, settings, opts);
    b.line("ratio,mean_row_entropy,mean_topk_mass,cross_modal_mass");
    for (label, cfg) in &configs {
        let (_, rep) = attend(&q, &k, cfg, opts)?;
        b.line(&metric_row(label, &rep));
    }
    Ok(b.finish())
}

/// Relative disagreement between a fast-path score and its reference,
/// normalized by `max(|reference|, |q| |k|)`. The Cauchy-Schwarz bound keeps
/// the measure meaningful when the score itself cancels to near zero.
pub fn score_relative_error(fast: f64, reference: f64, q: &[f64], k: &[f64]) -> f64 {
    let scale = reference.abs().max(dot(q, q).sqrt() * dot(k, k).sqrt());
    if scale == 0.0 {
        (fast - reference).abs()
    } else {
        (fast - reference).abs() / scale
    }
}

/// Checks the pairwise fast path against the dense oracle on random
/// instances. Returns the report and the worst relative error seen.
pub fn cmd_verify(settings: &Settings, trials: usize) -> Result<(String, f64)> {
    if settings.d > MAX_ORACLE_DIM {
        return Err(Error::Config(format!(
            "verify needs d <= {MAX_ORACLE_DIM}, got {}",
            settings.d
        )));
    }
    let mut rng = SeededStream::new(settings.seed, 7);
    let mut b = ReportBuilder::new();
    b.field("d", settings.d)
        .field("trials", trials)
        .field("seed", settings.seed)
        .blank()
        .line("scheme,max_relative_error");
    let mut worst_all = 0.0f64;
    for scheme in Scheme::ALL {
        let cfg = settings.encoding_for(scheme)?;
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let mut idx = || -> Result<_> {
                let mut c = [0.0; 4];
                for v in &mut c {
                    *v = 20.0 * rng.uniform() - 10.0;
                }
                index_from_cartesian(c[0], c[1], c[2], c[3], Modality::PointCloud)
            };
            let (i1, i2) = (idx()?, idx()?);
            let q: Vec<f64> = (0..cfg.d()).map(|_| rng.normal()).collect();
            let k: Vec<f64> = (0..cfg.d()).map(|_| rng.normal()).collect();
            let fast = score(&q, &k, &i1, &i2, &cfg)?;
            let dense = dense_score(&q, &k, &phases_for(&i1, &cfg), &phases_for(&i2, &cfg))?;
            worst = worst.max(score_relative_error(fast, dense, &q, &k));
        }
        worst_all = worst_all.max(worst);
        b.line(&format!("{scheme},{worst:e}"));
    }
    Ok((b.finish(), worst_all))
}

pub fn default_ablation_ratios() -> Vec<String> {
    ABLATION_RATIOS.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_xyz_tokens;
    use crate::synthetic::synthetic_scene;
    use std::path::Path;

    fn scene(n: usize, seed: u64) -> TokenSequence {
        TokenSequence::new(
            synthetic_scene(n, seed)
                .unwrap()
                .into_iter()
                .map(|index| Token { index, features: vec![] })
                .collect(),
        )
    }

    #[test]
    fn single_token_softmax_is_one() {
        let seq = parse_xyz_tokens("0 1 2 3 p\n", Path::new("x")).unwrap();
        let out = cmd_score(&seq, &Settings::default(), &AttentionOptions::default()).unwrap();
        assert_eq!(out.attention_csv, "1.00000000000\n");
    }

    #[test]
    fn inline_features_must_match_d() {
        let seq = parse_xyz_tokens("0 1 2 3 p 1 2 3\n", Path::new("x")).unwrap();
        let err = cmd_score(&seq, &Settings::default(), &AttentionOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Shape { expected: 128, got: 3 }));
    }

    #[test]
    fn encode_csv_shape() {
        let settings = Settings { d: 4, ratio: Some([1, 0, 1, 0]), ..Settings::default() };
        let csv = cmd_encode(&scene(3, 1), &settings, Role::Query, true).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "token,t,modality,f0,f1,f2,f3,p0,p1");
        assert_eq!(lines.len(), 4);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 9));
    }

    #[test]
    fn ablate_echoes_ratios() {
        let out = cmd_ablate(&scene(16, 3), &Settings::default(), &default_ablation_ratios(), &AttentionOptions::default()).unwrap();
        let table: Vec<&str> = out.lines().skip_while(|l| !l.starts_with("ratio,")).skip(1).collect();
        assert_eq!(table.len(), 4);
        for (row, ratio) in table.iter().zip(ABLATION_RATIOS) {
            assert!(row.starts_with(&format!("{ratio},")));
        }
    }

    #[test]
    fn ablate_rejects_indivisible_before_scoring() {
        let ratios = vec!["24:2:3:3".to_string(), "3:2:2:2".to_string()];
        let err = cmd_ablate(&scene(4, 3), &Settings::default(), &ratios, &AttentionOptions::default()).unwrap_err();
        assert!(matches!(err, Error::IndivisibleRatio { sum: 9, .. }));
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
    }

    #[test]
    fn verify_passes() {
        let settings = Settings { d: 16, ratio: Some([1, 1, 1, 1]), ..Settings::default() };
        let (_, worst) = cmd_verify(&settings, 50).unwrap();
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn relative_error_scale() {
        assert_eq!(score_relative_error(1.0, 1.0, &[1.0], &[1.0]), 0.0);
        assert!((score_relative_error(1e-13, 0.0, &[1.0, 0.0], &[0.0, 1.0]) - 1e-13).abs() < 1e-20);
    }
}
