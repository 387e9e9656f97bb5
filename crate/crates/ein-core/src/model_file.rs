//! Canonical text serialization of a trained model.
//!
//! The format is line oriented with a fixed field order and floats printed
//! to 17 significant digits, so loading a file and saving it again is
//! byte-identical. Only the selected subgraphs (nonzero weight groups) are
//! stored, sorted by code; every stored code must be canonical.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::dfs_code::{is_min_code, DfsCode};
use crate::error::{EinError, Result};
use crate::model::{Activation, AffineLayer, EinModel, Ffn};

const FORMAT_LINE: &str = "ein-model 1";

/// A trained model plus the configuration echo and provenance needed to
/// reproduce or audit it.
#[derive(Clone, Debug)]
pub struct ModelFile {
    pub model: EinModel,
    pub maxpat: usize,
    pub seed: u64,
    /// Regularization value of the selected snapshot.
    pub lambda: f64,
    pub dataset: String,
    pub split_seed: u64,
    /// Label dictionaries of the training dataset; prediction inputs must
    /// match them exactly for dense ids to mean the same thing.
    pub node_label_names: Vec<String>,
    pub edge_label_names: Vec<String>,
    pub class_names: Vec<String>,
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse()
        .map_err(|_| EinError::ModelFile(format!("line {line}: bad float '{tok}'")))
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| EinError::ModelFile(format!("line {line}: bad integer '{tok}'")))
}

impl ModelFile {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_LINE}");
        let _ = writeln!(out, "k {}", self.model.k());
        let _ = writeln!(out, "maxpat {}", self.maxpat);
        match self.model.activation {
            Activation::Sigmoid => {
                let _ = writeln!(out, "activation sigmoid");
            }
            Activation::LeakyRelu { slope } => {
                let _ = writeln!(out, "activation leakyrelu {}", fmt_f64(slope));
            }
        }
        let _ = writeln!(
            out,
            "classes {}",
            self.model
                .classes
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        let _ = writeln!(out, "class_names {}", self.class_names.join(" "));
        let _ = writeln!(out, "node_labels {}", self.node_label_names.join(" "));
        let _ = writeln!(out, "edge_labels {}", self.edge_label_names.join(" "));
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "lambda {}", fmt_f64(self.lambda));
        let _ = writeln!(out, "dataset {}", self.dataset);
        let _ = writeln!(out, "split_seed {}", self.split_seed);

        let mut selected: Vec<(&DfsCode, &[f64])> = self.model.selected();
        selected.sort_by(|a, b| a.0.cmp(b.0));
        let _ = writeln!(out, "patterns {}", selected.len());
        for (code, beta) in selected {
            let floats: Vec<String> = beta.iter().map(|&b| fmt_f64(b)).collect();
            let _ = writeln!(out, "pattern {code} {}", floats.join(" "));
        }
        let floats: Vec<String> = self.model.bias.iter().map(|&b| fmt_f64(b)).collect();
        let _ = writeln!(out, "bias {}", floats.join(" "));
        let _ = writeln!(out, "ffn {}", self.model.ffn.layers.len());
        for layer in &self.model.ffn.layers {
            let _ = writeln!(out, "layer {} {}", layer.weight.nrows(), layer.weight.ncols());
            for row in layer.weight.rows() {
                let floats: Vec<String> = row.iter().map(|&w| fmt_f64(w)).collect();
                let _ = writeln!(out, "w {}", floats.join(" "));
            }
            let floats: Vec<String> = layer.bias.iter().map(|&b| fmt_f64(b)).collect();
            let _ = writeln!(out, "b {}", floats.join(" "));
        }
        let _ = writeln!(out, "end");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = || {
            lines
                .next()
                .ok_or_else(|| EinError::ModelFile("unexpected end of file".into()))
        };
        let expect_key = |line: (usize, &str), key: &str| -> Result<Vec<String>> {
            let (no, l) = line;
            let mut toks = l.split_whitespace();
            match toks.next() {
                Some(k) if k == key => Ok(toks.map(str::to_string).collect()),
                other => Err(EinError::ModelFile(format!(
                    "line {no}: expected '{key}', got '{}'",
                    other.unwrap_or("")
                ))),
            }
        };

        let (no, header) = next()?;
        if header != FORMAT_LINE {
            return Err(EinError::ModelFile(format!(
                "line {no}: unsupported header '{header}'"
            )));
        }
        let k = parse_usize(&expect_key(next()?, "k")?[0], 2)?;
        let maxpat = parse_usize(&expect_key(next()?, "maxpat")?[0], 3)?;
        let act_toks = expect_key(next()?, "activation")?;
        let activation = match act_toks.first().map(String::as_str) {
            Some("sigmoid") => Activation::Sigmoid,
            Some("leakyrelu") => Activation::LeakyRelu {
                slope: parse_f64(
                    act_toks
                        .get(1)
                        .ok_or_else(|| EinError::ModelFile("leakyrelu needs a slope".into()))?,
                    4,
                )?,
            },
            other => {
                return Err(EinError::ModelFile(format!(
                    "unknown activation '{}'",
                    other.unwrap_or("")
                )))
            }
        };
        let classes: Vec<u32> = expect_key(next()?, "classes")?
            .iter()
            .map(|t| {
                t.parse()
                    .map_err(|_| EinError::ModelFile(format!("bad class id '{t}'")))
            })
            .collect::<Result<_>>()?;
        let class_names = expect_key(next()?, "class_names")?;
        let node_label_names = expect_key(next()?, "node_labels")?;
        let edge_label_names = expect_key(next()?, "edge_labels")?;
        let seed = parse_usize(&expect_key(next()?, "seed")?[0], 0)? as u64;
        let lambda = parse_f64(&expect_key(next()?, "lambda")?[0], 0)?;
        let dataset = expect_key(next()?, "dataset")?.join(" ");
        let split_seed = parse_usize(&expect_key(next()?, "split_seed")?[0], 0)? as u64;

        let n_patterns = parse_usize(&expect_key(next()?, "patterns")?[0], 0)?;
        let mut active = Vec::with_capacity(n_patterns);
        for _ in 0..n_patterns {
            let toks = expect_key(next()?, "pattern")?;
            if toks.len() != k + 1 {
                return Err(EinError::ModelFile(format!(
                    "pattern line has {} fields, expected code plus {k} weights",
                    toks.len()
                )));
            }
            let code: DfsCode = toks[0].parse()?;
            if !is_min_code(&code)? {
                return Err(EinError::ModelFile(format!(
                    "stored pattern '{}' is not a canonical code",
                    toks[0]
                )));
            }
            let beta: Vec<f64> = toks[1..]
                .iter()
                .map(|t| parse_f64(t, 0))
                .collect::<Result<_>>()?;
            active.push((code, beta));
        }

        let bias_toks = expect_key(next()?, "bias")?;
        if bias_toks.len() != k {
            return Err(EinError::ModelFile(format!(
                "bias has {} entries, expected {k}",
                bias_toks.len()
            )));
        }
        let bias = Array1::from_vec(
            bias_toks
                .iter()
                .map(|t| parse_f64(t, 0))
                .collect::<Result<Vec<_>>>()?,
        );

        let n_layers = parse_usize(&expect_key(next()?, "ffn")?[0], 0)?;
        if n_layers == 0 {
            return Err(EinError::ModelFile("model needs at least one layer".into()));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let dims = expect_key(next()?, "layer")?;
            let rows = parse_usize(&dims[0], 0)?;
            let cols = parse_usize(&dims[1], 0)?;
            let mut weight = Array2::zeros((rows, cols));
            for r in 0..rows {
                let toks = expect_key(next()?, "w")?;
                if toks.len() != cols {
                    return Err(EinError::ModelFile(format!(
                        "weight row has {} entries, expected {cols}",
                        toks.len()
                    )));
                }
                for (c, t) in toks.iter().enumerate() {
                    weight[[r, c]] = parse_f64(t, 0)?;
                }
            }
            let btoks = expect_key(next()?, "b")?;
            if btoks.len() != rows {
                return Err(EinError::ModelFile(format!(
                    "layer bias has {} entries, expected {rows}",
                    btoks.len()
                )));
            }
            let lbias = Array1::from_vec(
                btoks
                    .iter()
                    .map(|t| parse_f64(t, 0))
                    .collect::<Result<Vec<_>>>()?,
            );
            layers.push(AffineLayer {
                weight,
                bias: lbias,
            });
        }
        expect_key(next()?, "end")?;

        let ffn = Ffn { layers };
        if ffn.input_width() != k {
            return Err(EinError::ModelFile(format!(
                "FFN input width {} does not match k = {k}",
                ffn.input_width()
            )));
        }
        if ffn.output_width() != classes.len() || classes.len() != class_names.len() {
            return Err(EinError::ModelFile(
                "class list, class names and FFN output width disagree".into(),
            ));
        }
        Ok(ModelFile {
            model: EinModel {
                active,
                bias,
                activation,
                ffn,
                classes,
            },
            maxpat,
            seed,
            lambda,
            dataset,
            split_seed,
            node_label_names,
            edge_label_names,
            class_names,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
