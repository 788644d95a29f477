//! Line-oriented text formats.
//!
//! Feature files carry labeled vectors: optional `#` comment header lines,
//! then one `label,v1,...,vD` row per sample. Model files carry a header
//! line `kind input_dim embed_dim hidden_dim normalize` followed by the
//! weight matrices row by row and each bias on its own line. History files
//! carry one loss value per line.
//!
//! All values are written in scientific notation with 17 significant digits
//! ([`fmt_f64`]), so `parse(serialize(x))` reproduces every `f64` bit-exactly
//! and repeated runs produce byte-identical files.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sampling::LabeledDataset;
use crate::training::{EncoderKind, EncoderModel};

/// 17 significant digits: enough to reconstruct any finite `f64` exactly.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

fn parse_f64(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("'{token}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("'{token}' is not finite"),
        });
    }
    Ok(v)
}

fn parse_usize(token: &str, line: usize, what: &str) -> Result<usize> {
    token.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("'{token}' is not a valid {what}"),
    })
}

/// Serializes a dataset as a feature file, prefixing the given comment lines.
pub fn serialize_dataset(data: &LabeledDataset<f64>, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    for i in 0..data.len() {
        out.push_str(&data.label(i).to_string());
        for v in data.vector(i) {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// Parses a feature file; `#` lines and a trailing blank line are skipped.
pub fn parse_dataset(text: &str) -> Result<LabeledDataset<f64>> {
    let mut samples = Vec::new();
    let mut columns: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let label_token = fields.next().expect("split yields at least one field");
        let label = parse_usize(label_token, line_no, "label (nonnegative integer)")?;
        let values: Vec<f64> = fields
            .map(|f| parse_f64(f, line_no))
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "row has a label but no feature values".into(),
            });
        }
        match columns {
            None => columns = Some(values.len()),
            Some(c) if c != values.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("row has {} values, expected {c}", values.len()),
                })
            }
            _ => {}
        }
        samples.push((values, label));
    }
    if samples.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "file contains no data rows".into(),
        });
    }
    LabeledDataset::new(samples)
}

pub fn write_feature_file(
    path: &Path,
    data: &LabeledDataset<f64>,
    comments: &[String],
) -> Result<()> {
    fs::write(path, serialize_dataset(data, comments))?;
    Ok(())
}

pub fn read_feature_file(path: &Path) -> Result<LabeledDataset<f64>> {
    parse_dataset(&fs::read_to_string(path)?)
}

fn kind_token(kind: EncoderKind) -> &'static str {
    match kind {
        EncoderKind::Identity => "identity",
        EncoderKind::Linear => "linear",
        EncoderKind::OneHidden => "one-hidden",
    }
}

pub fn parse_kind_token(token: &str) -> Result<EncoderKind> {
    match token {
        "identity" => Ok(EncoderKind::Identity),
        "linear" => Ok(EncoderKind::Linear),
        "one-hidden" => Ok(EncoderKind::OneHidden),
        _ => Err(Error::invalid(format!(
            "unknown encoder kind '{token}' (expected identity, linear or one-hidden)"
        ))),
    }
}

fn matrix_lines(out: &mut String, values: &[f64], cols: usize) {
    for row in values.chunks(cols.max(1)) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            out.push_str(&fmt_f64(*v));
            first = false;
        }
        out.push('\n');
    }
}

/// Serializes a model: header `kind input_dim embed_dim hidden_dim
/// normalize`, then w1 rows, b1, and for one-hidden encoders w2 rows and b2.
pub fn serialize_model(model: &EncoderModel<f64>) -> String {
    let mut out = format!(
        "{} {} {} {} {}\n",
        kind_token(model.kind()),
        model.input_dim(),
        model.embed_dim(),
        model.hidden_dim(),
        u8::from(model.normalize_output()),
    );
    match model.kind() {
        EncoderKind::Identity => {}
        EncoderKind::Linear => {
            matrix_lines(&mut out, model.weights1(), model.input_dim());
            matrix_lines(&mut out, model.bias1(), model.embed_dim());
        }
        EncoderKind::OneHidden => {
            matrix_lines(&mut out, model.weights1(), model.input_dim());
            matrix_lines(&mut out, model.bias1(), model.hidden_dim());
            matrix_lines(&mut out, model.weights2(), model.hidden_dim());
            matrix_lines(&mut out, model.bias2(), model.embed_dim());
        }
    }
    out
}

pub fn parse_model(text: &str) -> Result<EncoderModel<f64>> {
    let mut lines = text.lines().enumerate();
    let (idx, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 0,
        message: "empty model file".into(),
    })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 5 {
        return Err(Error::Parse {
            line: idx + 1,
            message: "header must be 'kind input_dim embed_dim hidden_dim normalize'".into(),
        });
    }
    let kind = parse_kind_token(tokens[0])?;
    let input_dim = parse_usize(tokens[1], idx + 1, "input dimension")?;
    let embed_dim = parse_usize(tokens[2], idx + 1, "embedding dimension")?;
    let hidden_dim = parse_usize(tokens[3], idx + 1, "hidden dimension")?;
    let normalize = match tokens[4] {
        "0" => false,
        "1" => true,
        other => {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("normalize flag must be 0 or 1, got '{other}'"),
            })
        }
    };

    let mut read_rows = |rows: usize, cols: usize| -> Result<Vec<f64>> {
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (idx, line) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                message: "model file ends before all parameters were read".into(),
            })?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| parse_f64(t, idx + 1))
                .collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {cols} values in this row, got {}", row.len()),
                });
            }
            values.extend(row);
        }
        Ok(values)
    };

    let (w1, b1, w2, b2) = match kind {
        EncoderKind::Identity => (Vec::new(), Vec::new(), Vec::new(), Vec::new()),
        EncoderKind::Linear => {
            let w1 = read_rows(embed_dim, input_dim)?;
            let b1 = read_rows(1, embed_dim)?;
            (w1, b1, Vec::new(), Vec::new())
        }
        EncoderKind::OneHidden => {
            let w1 = read_rows(hidden_dim, input_dim)?;
            let b1 = read_rows(1, hidden_dim)?;
            let w2 = read_rows(embed_dim, hidden_dim)?;
            let b2 = read_rows(1, embed_dim)?;
            (w1, b1, w2, b2)
        }
    };
    EncoderModel::from_raw_parts(
        kind, input_dim, embed_dim, hidden_dim, normalize, w1, b1, w2, b2,
    )
}

pub fn write_model_file(path: &Path, model: &EncoderModel<f64>) -> Result<()> {
    fs::write(path, serialize_model(model))?;
    Ok(())
}

pub fn read_model_file(path: &Path) -> Result<EncoderModel<f64>> {
    parse_model(&fs::read_to_string(path)?)
}

/// One loss value per line, in writing order.
pub fn serialize_history(history: &[f64]) -> String {
    let mut out = String::new();
    for v in history {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

pub fn write_history_file(path: &Path, history: &[f64]) -> Result<()> {
    fs::write(path, serialize_history(history))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::test_rng;
    use rand::Rng;

    #[test]
    fn feature_file_round_trips_randomized_datasets() {
        let mut rng = test_rng(1);
        for _ in 0..20 {
            let n = rng.random_range(1..40);
            let dim = rng.random_range(1..6);
            let samples: Vec<(Vec<f64>, usize)> = (0..n)
                .map(|_| {
                    let v: Vec<f64> = (0..dim)
                        .map(|_| (rng.random::<f64>() - 0.5) * 10f64.powi(rng.random_range(-8..8)))
                        .collect();
                    (v, rng.random_range(0..12))
                })
                .collect();
            let data = LabeledDataset::new(samples).unwrap();
            let text = serialize_dataset(&data, &["synthetic".into()]);
            let parsed = parse_dataset(&text).unwrap();
            assert_eq!(parsed.labels(), data.labels());
            assert_eq!(parsed.vectors(), data.vectors());
            // Serialization is a fixed point after one round trip.
            assert_eq!(serialize_dataset(&parsed, &["synthetic".into()]), text);
        }
    }

    #[test]
    fn feature_file_rejects_malformed_rows() {
        assert!(matches!(
            parse_dataset("0,1.0\n1,2.0,3.0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_dataset("-1,1.0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_dataset("0,abc\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_dataset("0,inf\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse_dataset("0\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_dataset("# only a comment\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let data = parse_dataset("# header\n\n3,1.5,-2.5\n# tail comment\n7,0.0,4.25\n").unwrap();
        assert_eq!(data.labels(), &[3, 7]);
        assert_eq!(data.vector(0), &[1.5, -2.5]);
    }

    #[test]
    fn model_files_round_trip_bit_exactly() {
        let mut rng = test_rng(5);
        for (kind, hidden) in [
            (EncoderKind::Identity, 0usize),
            (EncoderKind::Linear, 0),
            (EncoderKind::OneHidden, 7),
        ] {
            let dims = if kind == EncoderKind::Identity {
                (4, 4)
            } else {
                (5, 3)
            };
            let model =
                EncoderModel::<f64>::init(kind, dims.0, dims.1, hidden, true, &mut rng).unwrap();
            let text = serialize_model(&model);
            let parsed = parse_model(&text).unwrap();
            assert_eq!(parsed, model);
            assert_eq!(serialize_model(&parsed), text);
        }
    }

    #[test]
    fn model_parse_rejects_malformed_files() {
        assert!(parse_model("").is_err());
        assert!(parse_model("linear 3 2\n").is_err());
        assert!(parse_model("mystery 3 2 0 0\n").is_err());
        assert!(parse_model("linear 3 2 0 2\n").is_err());
        // Truncated parameter block.
        assert!(parse_model("linear 3 2 0 0\n1.0 2.0 3.0\n").is_err());
        // Ragged row.
        assert!(parse_model("linear 2 1 0 0\n1.0\n0.0 0.0\n").is_err());
    }

    #[test]
    fn fmt_f64_reconstructs_extremes() {
        for v in [
            0.0,
            -0.0,
            1.0,
            -1.0,
            0.1,
            std::f64::consts::PI,
            1e-300,
            -1e300,
            f64::MIN_POSITIVE,
            2.2250738585072014e-308,
        ] {
            let parsed: f64 = fmt_f64(v).parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits(), "value {v}");
        }
    }

    #[test]
    fn history_serialization_is_line_per_value() {
        let text = serialize_history(&[1.0, 0.5]);
        assert_eq!(text.lines().count(), 2);
        let values: Vec<f64> = text.lines().map(|l| l.parse().unwrap()).collect();
        assert_eq!(values, vec![1.0, 0.5]);
    }
}
