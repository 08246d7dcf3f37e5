//! Token file readers.
//!
//! `xyz_tokens`: one token per line, `t x y z m [f0 .. f(d-1)]` separated by
//! whitespace, `m` is `p` (point cloud) or `t` (text). Blank lines and lines
//! starting with `#` are skipped. Feature vectors are optional but, when
//! present, must have the same length on every line.
//!
//! `ply`: ASCII PLY with a `vertex` element carrying float/double `x`, `y`,
//! `z` properties. Vertices become point-cloud tokens with `t` equal to their
//! read index.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::index_from_cartesian;
use crate::position::{Modality, PositionIndex};
use crate::sope::{Token, TokenSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenFormat {
    XyzTokens,
    PlyAscii,
}

impl FromStr for TokenFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xyz" | "xyz_tokens" => Ok(TokenFormat::XyzTokens),
            "ply" | "ply_ascii" => Ok(TokenFormat::PlyAscii),
            other => Err(Error::Config(format!("unknown token format {other:?}"))),
        }
    }
}

pub fn load_tokens(path: &Path, format: TokenFormat) -> Result<TokenSequence> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        TokenFormat::XyzTokens => parse_xyz_tokens(&text, path),
        TokenFormat::PlyAscii => parse_ply_ascii(&text, path),
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_f64(field: &str, what: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid {what} {field:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite {what} {field:?}")));
    }
    Ok(v)
}

pub fn parse_xyz_tokens(text: &str, path: &Path) -> Result<TokenSequence> {
    let mut tokens = Vec::new();
    let mut width: Option<usize> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 5 {
            return Err(parse_err(
                path,
                line,
                format!("expected at least 5 fields (t x y z modality), got {}", fields.len()),
            ));
        }
        let t = parse_f64(fields[0], "t", path, line)?;
        let x = parse_f64(fields[1], "x", path, line)?;
        let y = parse_f64(fields[2], "y", path, line)?;
        let z = parse_f64(fields[3], "z", path, line)?;
        let modality = Modality::from_tag(fields[4]).ok_or_else(|| {
            parse_err(path, line, format!("modality must be 'p' or 't', got {:?}", fields[4]))
        })?;
        let features = fields[5..]
            .iter()
            .map(|f| parse_f64(f, "feature", path, line))
            .collect::<Result<Vec<_>>>()?;
        match width {
            None => width = Some(features.len()),
            Some(w) if w != features.len() => {
                return Err(parse_err(
                    path,
                    line,
                    format!("feature length {} differs from earlier lines ({w})", features.len()),
                ));
            }
            _ => {}
        }
        let index = index_from_cartesian(t, x, y, z, modality)
            .map_err(|e| parse_err(path, line, e.to_string()))?;
        tokens.push(Token { index, features });
    }
    Ok(TokenSequence::new(tokens))
}

#[derive(Debug)]
struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<(String, String)>,
    has_list: bool,
}

const PLY_SCALARS: [&str; 16] = [
    "char", "uchar", "short", "ushort", "int", "uint", "float", "double", "int8", "uint8",
    "int16", "uint16", "int32", "uint32", "float32", "float64",
];
const PLY_FLOATS: [&str; 4] = ["float", "double", "float32", "float64"];

pub fn parse_ply_ascii(text: &str, path: &Path) -> Result<TokenSequence> {
    let format_err = |msg: String| Error::Format {
        path: PathBuf::from(path),
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(format_err("missing 'ply' magic line".into())),
    }

    let mut elements: Vec<PlyElement> = Vec::new();
    let mut saw_format = false;
    let mut body_start = None;
    for (n, raw) in lines.by_ref() {
        let line = n + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        match fields.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", kind, _version] => {
                if *kind != "ascii" {
                    return Err(format_err(format!("only ASCII PLY is supported, found {kind}")));
                }
                saw_format = true;
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| parse_err(path, line, format!("invalid element count {count:?}")))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                    has_list: false,
                });
            }
            ["property", "list", ..] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, line, "property before any element"))?;
                el.has_list = true;
            }
            ["property", ty, name] => {
                if !PLY_SCALARS.contains(ty) {
                    return Err(format_err(format!("unsupported property type {ty}")));
                }
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, line, "property before any element"))?;
                el.properties.push((ty.to_string(), name.to_string()));
            }
            ["end_header"] => {
                body_start = Some(line);
                break;
            }
            _ => return Err(parse_err(path, line, format!("unrecognized header line {raw:?}"))),
        }
    }
    if !saw_format {
        return Err(format_err("missing format line".into()));
    }
    if body_start.is_none() {
        return Err(format_err("missing end_header".into()));
    }

    let vertex_pos = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| format_err("no vertex element".into()))?;
    let vertex = &elements[vertex_pos];
    if vertex.has_list {
        return Err(format_err("list properties on vertex are not supported".into()));
    }
    let mut columns = [0usize; 3];
    for (slot, axis) in columns.iter_mut().zip(["x", "y", "z"]) {
        let (col, (ty, _)) = vertex
            .properties
            .iter()
            .enumerate()
            .find(|(_, (_, name))| name == axis)
            .ok_or_else(|| format_err(format!("vertex has no {axis} property")))?;
        if !PLY_FLOATS.contains(&ty.as_str()) {
            return Err(format_err(format!("vertex {axis} must be float or double, found {ty}")));
        }
        *slot = col;
    }

    // Skip body lines of elements declared before the vertices.
    let skip: usize = elements[..vertex_pos].iter().map(|e| e.count).sum();
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty()).skip(skip);
    let mut tokens = Vec::with_capacity(vertex.count);
    for i in 0..vertex.count {
        let (n, raw) = body.next().ok_or_else(|| {
            format_err(format!("expected {} vertices, file ends after {i}", vertex.count))
        })?;
        let line = n + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != vertex.properties.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} values, got {}", vertex.properties.len(), fields.len()),
            ));
        }
        let x = parse_f64(fields[columns[0]], "x", path, line)?;
        let y = parse_f64(fields[columns[1]], "y", path, line)?;
        let z = parse_f64(fields[columns[2]], "z", path, line)?;
        let index: PositionIndex = index_from_cartesian(i as f64, x, y, z, Modality::PointCloud)?;
        tokens.push(Token {
            index,
            features: Vec::new(),
        });
    }
    Ok(TokenSequence::new(tokens))
}

/// How point-cloud coordinates are shifted before the spherical mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Center {
    #[default]
    None,
    Centroid,
}

impl FromStr for Center {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Center::None),
            "centroid" => Ok(Center::Centroid),
            other => Err(Error::Config(format!(
                "unknown centering {other:?} (expected none or centroid)"
            ))),
        }
    }
}

/// Recenters point-cloud tokens on their centroid. Text tokens stay at the
/// origin.
pub fn recenter(seq: &TokenSequence, center: Center) -> Result<TokenSequence> {
    if center == Center::None {
        return Ok(seq.clone());
    }
    let pcs: Vec<&PositionIndex> = seq
        .tokens
        .iter()
        .map(|t| &t.index)
        .filter(|i| i.modality == Modality::PointCloud)
        .collect();
    if pcs.is_empty() {
        return Ok(seq.clone());
    }
    let n = pcs.len() as f64;
    let c = [
        pcs.iter().map(|i| i.x).sum::<f64>() / n,
        pcs.iter().map(|i| i.y).sum::<f64>() / n,
        pcs.iter().map(|i| i.z).sum::<f64>() / n,
    ];
    let tokens = seq
        .tokens
        .iter()
        .map(|tok| {
            let i = tok.index;
            let index = if i.modality == Modality::PointCloud {
                index_from_cartesian(i.t, i.x - c[0], i.y - c[1], i.z - c[2], i.modality)?
            } else {
                i
            };
            Ok(Token {
                index,
                features: tok.features.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TokenSequence {
        tokens,
        role: seq.role,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test")
    }

    #[test]
    fn empty_file() {
        assert!(parse_xyz_tokens("", p()).unwrap().is_empty());
        assert!(parse_xyz_tokens("# only a comment\n\n", p()).unwrap().is_empty());
    }

    #[test]
    fn three_lines() {
        let s = parse_xyz_tokens("0 0 0 0 t\n1 1 0 0 p\n2 0 1 0 p\n", p()).unwrap();
        assert_eq!(s.len(), 3);
        let i = &s.tokens[0].index;
        assert_eq!((i.t, i.modality), (0.0, Modality::Text));
        let i = &s.tokens[1].index;
        assert_eq!((i.t, i.x, i.y, i.z, i.modality), (1.0, 1.0, 0.0, 0.0, Modality::PointCloud));
        let i = &s.tokens[2].index;
        assert_eq!((i.t, i.x, i.y, i.z), (2.0, 0.0, 1.0, 0.0));
        assert!(s.tokens.iter().all(|t| t.features.is_empty()));
    }

    #[test]
    fn inline_features() {
        let s = parse_xyz_tokens("0 1 2 3 p 0.5 -1\n1 0 0 0 t 2 3\n", p()).unwrap();
        assert_eq!(s.tokens[0].features, vec![0.5, -1.0]);
        let err = parse_xyz_tokens("0 1 2 3 p 0.5 -1\n1 0 0 0 t 2\n", p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        for (text, line) in [
            ("0 0 0 0 t\n\n1 1 0\n", 3),
            ("0 0 0 0 q\n", 1),
            ("# c\n0 0 0 0 t\n1 a 0 0 p\n", 3),
            ("0 1 0 0 t\n", 1),
            ("0 nan 0 0 p\n", 1),
        ] {
            match parse_xyz_tokens(text, p()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    const PLY: &str = "ply\nformat ascii 1.0\ncomment two points\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nend_header\n1.0 0.0 0.0 255\n0.0 2.0 0.5 0\n";

    #[test]
    fn minimal_ply() {
        let s = parse_ply_ascii(PLY, p()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.tokens[0].index.t, 0.0);
        assert_eq!(s.tokens[1].index.t, 1.0);
        assert_eq!((s.tokens[1].index.y, s.tokens[1].index.z), (2.0, 0.5));
        assert!(s.tokens.iter().all(|t| t.index.modality == Modality::PointCloud));
    }

    #[test]
    fn ply_with_faces_after_vertices() {
        let text = PLY.replace("property uchar red\n", "property uchar red\nelement face 1\nproperty list uchar int vertex_indices\n")
            + "3 0 1 1\n";
        assert_eq!(parse_ply_ascii(&text, p()).unwrap().len(), 2);
    }

    #[test]
    fn ply_format_errors() {
        let bin = PLY.replace("ascii", "binary_little_endian");
        assert!(matches!(parse_ply_ascii(&bin, p()), Err(Error::Format { .. })));
        let ints = PLY.replace("property float x", "property int x");
        assert!(matches!(parse_ply_ascii(&ints, p()), Err(Error::Format { .. })));
        let odd = PLY.replace("property uchar red", "property half red");
        assert!(matches!(parse_ply_ascii(&odd, p()), Err(Error::Format { .. })));
        let noz = PLY.replace("property float z\n", "");
        assert!(matches!(parse_ply_ascii(&noz, p()), Err(Error::Format { .. })));
        let short = PLY.replace("element vertex 2", "element vertex 3");
        assert!(matches!(parse_ply_ascii(&short, p()), Err(Error::Format { .. })));
        assert!(matches!(parse_ply_ascii("xyz\n", p()), Err(Error::Format { .. })));
        let bad = PLY.replace("0.0 2.0 0.5 0", "0.0 2.0 0");
        assert!(matches!(parse_ply_ascii(&bad, p()), Err(Error::Parse { line: 11, .. })));
    }

    #[test]
    fn centroid_recentering() {
        let s = parse_xyz_tokens("0 1 0 0 p\n1 3 2 0 p\n2 0 0 0 t\n", p()).unwrap();
        let c = recenter(&s, Center::Centroid).unwrap();
        assert_eq!((c.tokens[0].index.x, c.tokens[0].index.y), (-1.0, -1.0));
        assert_eq!((c.tokens[1].index.x, c.tokens[1].index.y), (1.0, 1.0));
        assert_eq!(c.tokens[2].index, s.tokens[2].index);
        assert_eq!(recenter(&s, Center::None).unwrap(), s);
    }
}
