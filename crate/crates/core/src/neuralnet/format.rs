//! The `KICKCAST-DNN v1` text weight format.
//!
//! ```text
//! KICKCAST-DNN v1
//! task classification 3
//! standardize 794          (optional, followed by a means line and a stds line)
//! layer 794 128 relu       (then 128 weight rows of 794 values and one bias line)
//! ...
//! ```
//!
//! Values are whitespace-separated and written in shortest round-trip form,
//! so saving and loading reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{Activation, DenseLayer, DenseNetwork, Standardizer, Task};
use crate::error::{Error, ModelFormatError, Result};

pub const MODEL_MAGIC: &str = "KICKCAST-DNN";
pub const MODEL_VERSION: &str = "v1";

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v}").expect("writing to a String");
    }
    out.push('\n');
}

pub fn to_text(net: &DenseNetwork) -> String {
    let mut out = String::new();
    writeln!(out, "{MODEL_MAGIC} {MODEL_VERSION}").unwrap();
    writeln!(out, "task {}", net.task).unwrap();
    if let Some(s) = &net.standardizer {
        writeln!(out, "standardize {}", s.width()).unwrap();
        push_row(&mut out, &s.means);
        push_row(&mut out, &s.stds);
    }
    for l in &net.layers {
        writeln!(out, "layer {} {} {}", l.in_dim, l.out_dim, l.activation.name()).unwrap();
        for o in 0..l.out_dim {
            push_row(&mut out, l.row(o));
        }
        push_row(&mut out, &l.biases);
    }
    out
}

pub fn save_text(net: &DenseNetwork, path: &Path) -> Result<()> {
    net.validate()?;
    std::fs::write(path, to_text(net)).map_err(|e| Error::io(path, e))
}

pub fn load_text(path: &Path) -> Result<DenseNetwork> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> std::result::Result<(usize, &'a str), ModelFormatError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l))
            }
            None => Err(ModelFormatError::UnexpectedEof { line: self.last + 1 }),
        }
    }

    fn numbers(&mut self, expected: usize, what: &str) -> std::result::Result<Vec<f64>, ModelFormatError> {
        let (line, text) = self.next()?;
        let values = text
            .split_whitespace()
            .map(|t| match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(ModelFormatError::BadNumber { line, token: t.to_string() }),
            })
            .collect::<std::result::Result<Vec<f64>, _>>()?;
        if values.len() != expected {
            return Err(ModelFormatError::Dimension {
                line,
                message: format!("{what} has {} values, expected {expected}", values.len()),
            });
        }
        Ok(values)
    }
}

fn parse_count(line: usize, token: Option<&str>, what: &str) -> std::result::Result<usize, ModelFormatError> {
    let token = token.ok_or_else(|| ModelFormatError::Syntax { line, message: format!("missing {what}") })?;
    match token.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(ModelFormatError::BadNumber { line, token: token.to_string() }),
    }
}

fn parse(text: &str) -> std::result::Result<DenseNetwork, ModelFormatError> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };

    let (line, header) = lines.next()?;
    let mut tokens = header.split_whitespace();
    let magic = tokens.next().unwrap_or("");
    if magic != MODEL_MAGIC {
        return Err(ModelFormatError::Magic { line, found: header.to_string() });
    }
    let version = tokens.next().unwrap_or("");
    if version != MODEL_VERSION || tokens.next().is_some() {
        return Err(ModelFormatError::Version {
            line,
            found: header[magic.len()..].trim().to_string(),
            expected: MODEL_VERSION,
        });
    }

    let (line, task_line) = lines.next()?;
    let t: Vec<&str> = task_line.split_whitespace().collect();
    let task = match t.as_slice() {
        ["task", kind, n] => {
            let n = parse_count(line, Some(n), "task width")?;
            match *kind {
                "classification" => Task::Classification(n),
                "regression" => Task::Regression(n),
                other => {
                    return Err(ModelFormatError::Syntax { line, message: format!("unknown task kind {other:?}") })
                }
            }
        }
        _ => return Err(ModelFormatError::Syntax { line, message: "expected `task <kind> <width>`".into() }),
    };

    let mut standardizer = None;
    let mut layers: Vec<DenseLayer> = Vec::new();
    while let Some((i, raw)) = lines.inner.next() {
        let line = i + 1;
        lines.last = line;
        let t: Vec<&str> = raw.split_whitespace().collect();
        match t.as_slice() {
            [] => continue,
            ["standardize", w] => {
                if standardizer.is_some() || !layers.is_empty() {
                    return Err(ModelFormatError::Syntax { line, message: "misplaced standardize block".into() });
                }
                let w = parse_count(line, Some(w), "standardize width")?;
                let means = lines.numbers(w, "means line")?;
                let stds = lines.numbers(w, "stds line")?;
                if let Some(s) = stds.iter().find(|s| **s <= 0.0) {
                    return Err(ModelFormatError::Syntax {
                        line: lines.last,
                        message: format!("non-positive spread {s}"),
                    });
                }
                standardizer = Some(Standardizer { means, stds });
            }
            ["layer", i_dim, o_dim, act] => {
                let in_dim = parse_count(line, Some(i_dim), "input width")?;
                let out_dim = parse_count(line, Some(o_dim), "output width")?;
                let activation = Activation::parse(act).ok_or_else(|| ModelFormatError::Syntax {
                    line,
                    message: format!("unknown activation {act:?}"),
                })?;
                let expected_in = match (layers.last(), &standardizer) {
                    (Some(prev), _) => Some(prev.out_dim),
                    (None, Some(s)) => Some(s.width()),
                    (None, None) => None,
                };
                if let Some(e) = expected_in.filter(|e| *e != in_dim) {
                    return Err(ModelFormatError::Dimension {
                        line,
                        message: format!("layer takes {in_dim} inputs but {e} are provided"),
                    });
                }
                if layers.last().is_some_and(|l| l.activation == Activation::Softmax) {
                    return Err(ModelFormatError::Syntax { line, message: "layer after a softmax layer".into() });
                }
                let mut weights = Vec::with_capacity(in_dim * out_dim);
                for _ in 0..out_dim {
                    weights.extend(lines.numbers(in_dim, "weight row")?);
                }
                let biases = lines.numbers(out_dim, "bias line")?;
                layers.push(DenseLayer { in_dim, out_dim, weights, biases, activation });
            }
            _ => {
                return Err(ModelFormatError::Syntax {
                    line,
                    message: format!("expected a layer header, found {:?}", raw.trim()),
                })
            }
        }
    }

    let end = lines.last;
    let Some(last) = layers.last() else {
        return Err(ModelFormatError::UnexpectedEof { line: end + 1 });
    };
    if last.out_dim != task.width() {
        return Err(ModelFormatError::Dimension {
            line: end,
            message: format!("final layer has {} outputs but task declares {}", last.out_dim, task.width()),
        });
    }
    let net = DenseNetwork { layers, task, standardizer };
    net.validate().map_err(|e| ModelFormatError::Syntax { line: end, message: e.to_string() })?;
    Ok(net)
}

/// Parses a model from its text form.
pub fn from_text(text: &str) -> Result<DenseNetwork> {
    parse(text).map_err(Error::from)
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::super::testnet::random_net;
    use super::*;
    use crate::seed;

    fn sample_net() -> DenseNetwork {
        let mut rng = seed::rng(8);
        let mut net = random_net(&mut rng, &[6, 5, 3], Activation::Softmax, Task::Classification(3));
        net.standardizer = Some(Standardizer {
            means: (0..6).map(|i| i as f64 * 0.1).collect(),
            stds: vec![0.5, 1.0, 2.0, 1.0 / 3.0, 7.0, 1e-3],
        });
        net
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let net = sample_net();
        let text = to_text(&net);
        let back = from_text(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(to_text(&back), text);
        assert!(text.starts_with("KICKCAST-DNN v1\ntask classification 3\nstandardize 6\n"));
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let net = sample_net();
        let back = from_text(&to_text(&net)).unwrap();
        let mut rng = seed::rng(2);
        for _ in 0..100 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-5.0..5.0)).collect();
            let (a, b) = (net.predict(&x).unwrap(), back.predict(&x).unwrap());
            assert!(a.outputs.iter().zip(&b.outputs).all(|(p, q)| (p - q).abs() < 1e-6));
        }
    }

    fn format_err(text: &str) -> ModelFormatError {
        match from_text(text) {
            Err(Error::Model(e)) => e,
            other => panic!("expected a format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_reports_line() {
        let text = to_text(&sample_net());
        let cut: Vec<&str> = text.lines().take(7).collect();
        let e = format_err(&cut.join("\n"));
        assert!(matches!(e, ModelFormatError::UnexpectedEof { line: 8 }), "{e}");
    }

    #[test]
    fn version_and_magic_errors() {
        let text = to_text(&sample_net());
        let e = format_err(&text.replacen("v1", "v2", 1));
        assert!(matches!(e, ModelFormatError::Version { line: 1, .. }), "{e}");
        assert!(matches!(format_err("HELLO\n"), ModelFormatError::Magic { line: 1, .. }));
        assert!(matches!(format_err(""), ModelFormatError::UnexpectedEof { line: 1 }));
    }

    #[test]
    fn dimension_and_number_errors_name_lines() {
        let text = to_text(&sample_net());
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        // Line 7 is the first weight row of the first layer.
        let mut short = lines.clone();
        short[6] = short[6].rsplit_once(' ').unwrap().0.to_string();
        let e = format_err(&short.join("\n"));
        assert!(matches!(e, ModelFormatError::Dimension { line: 7, .. }), "{e}");

        lines[7] = lines[7].replacen(' ', " nope ", 1);
        let e = format_err(&lines.join("\n"));
        assert!(matches!(e, ModelFormatError::BadNumber { line: 8, ref token } if token == "nope"), "{e}");
    }

    #[test]
    fn unchained_layers_rejected() {
        let text = "KICKCAST-DNN v1\ntask regression 1\nlayer 2 2 relu\n1 0\n0 1\n0 0\nlayer 3 1 linear\n1 1 1\n0\n";
        assert!(matches!(format_err(text), ModelFormatError::Dimension { line: 7, .. }));
    }
}
