//! Text model files.
//!
//! ```text
//! ripplefeed-mlp 1
//! input_dim 1
//! hidden 100 80 60 40 40 20
//! activation relu identity
//! weights 0 1 100
//! <one line per matrix row, 17 significant digits>
//! biases 0 100
//! <one line>
//! ...
//! end
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::network::{Dense, LayerSpec, RegressionModel};
use crate::error::{Error, Result};

pub const MAGIC: &str = "ripplefeed-mlp";
pub const FORMAT_VERSION: u32 = 1;
const ACTIVATION: &str = "relu identity";

fn fmt_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v:.16e}").unwrap();
    }
    out.push('\n');
}

pub fn model_to_string(model: &RegressionModel) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {FORMAT_VERSION}").unwrap();
    writeln!(out, "input_dim {}", model.spec.input_dim).unwrap();
    let hidden: Vec<String> = model
        .spec
        .hidden_sizes
        .iter()
        .map(|h| h.to_string())
        .collect();
    writeln!(out, "hidden {}", hidden.join(" ")).unwrap();
    writeln!(out, "activation {ACTIVATION}").unwrap();
    for (k, l) in model.layers.iter().enumerate() {
        writeln!(out, "weights {k} {} {}", l.in_dim, l.out_dim).unwrap();
        for row in l.weights.chunks(l.out_dim) {
            fmt_row(&mut out, row);
        }
        writeln!(out, "biases {k} {}", l.out_dim).unwrap();
        fmt_row(&mut out, &l.biases);
    }
    out.push_str("end\n");
    out
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Reader<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or_else(|| Error::Parse {
                line: 0,
                message: "unexpected end of model file".into(),
            })
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.next_line()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::Parse {
                line: n,
                message: format!("expected `{key}`, found {line:?}"),
            });
        }
        Ok((n, parts.collect()))
    }

    fn floats(&mut self, count: usize) -> Result<Vec<f64>> {
        let (n, line) = self.next_line()?;
        let values = line
            .split_whitespace()
            .map(|t| parse_num::<f64>(t, n))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != count {
            return Err(Error::Parse {
                line: n,
                message: format!("expected {count} values, found {}", values.len()),
            });
        }
        Ok(values)
    }
}

fn parse_num<T: std::str::FromStr>(token: &str, line: usize) -> Result<T> {
    token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad number {token:?}"),
    })
}

pub fn model_from_str(text: &str) -> Result<RegressionModel> {
    let mut r = Reader {
        lines: text.lines().enumerate(),
    };
    let (n, header) = r.keyed(MAGIC)?;
    let version: u32 = parse_num(header.first().copied().unwrap_or(""), n)?;
    if version != FORMAT_VERSION {
        return Err(Error::Parse {
            line: n,
            message: format!("unsupported model format version {version}"),
        });
    }
    let (n, dim) = r.keyed("input_dim")?;
    let input_dim: usize = parse_num(dim.first().copied().unwrap_or(""), n)?;
    let (n, hidden) = r.keyed("hidden")?;
    let hidden_sizes = hidden
        .iter()
        .map(|t| parse_num::<usize>(t, n))
        .collect::<Result<Vec<_>>>()?;
    let (n, act) = r.keyed("activation")?;
    if act.join(" ") != ACTIVATION {
        return Err(Error::Parse {
            line: n,
            message: format!("unsupported activation {:?}", act.join(" ")),
        });
    }
    let spec = LayerSpec::new(input_dim, hidden_sizes)?;

    let mut layers = Vec::new();
    for (k, w) in spec.widths().windows(2).enumerate() {
        let (n, head) = r.keyed("weights")?;
        let dims = head
            .iter()
            .map(|t| parse_num::<usize>(t, n))
            .collect::<Result<Vec<_>>>()?;
        if dims != [k, w[0], w[1]] {
            return Err(Error::shape(format!(
                "line {n}: weights header {dims:?}, expected [{k}, {}, {}]",
                w[0], w[1]
            )));
        }
        let mut weights = Vec::with_capacity(w[0] * w[1]);
        for _ in 0..w[0] {
            weights.extend(r.floats(w[1])?);
        }
        let (n, head) = r.keyed("biases")?;
        let dims = head
            .iter()
            .map(|t| parse_num::<usize>(t, n))
            .collect::<Result<Vec<_>>>()?;
        if dims != [k, w[1]] {
            return Err(Error::shape(format!("line {n}: biases header {dims:?}")));
        }
        let biases = r.floats(w[1])?;
        layers.push(Dense {
            in_dim: w[0],
            out_dim: w[1],
            weights,
            biases,
        });
    }
    r.keyed("end")?;
    RegressionModel::from_layers(spec, layers)
}

pub fn save_model(model: &RegressionModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<RegressionModel> {
    model_from_str(&std::fs::read_to_string(path)?)
}
