//! Command implementations: dataset loading, training orchestration (with
//! the optional hyperparameter grid), CSV outputs and pattern listing.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ein_core::dataset::{self, GraphDataset};
use ein_core::error::{EinError, Result};
use ein_core::miner::MiningForest;
use ein_core::model::{self, Activation};
use ein_core::model_file::ModelFile;
use ein_core::optimizer::TrainConfig;

use crate::{ActivationChoice, DataArgs, Format, MineArgs, PredictArgs, TrainArgs};

/// key=value defaults loaded from --config; explicit flags override.
pub(crate) struct ConfigFile(HashMap<String, String>);

impl ConfigFile {
    fn load(path: Option<&str>) -> Result<Self> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(EinError::Parse {
                        file: path.to_string(),
                        line: i + 1,
                        msg: "expected key=value".into(),
                    });
                };
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(ConfigFile(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                EinError::Dataset(format!("config key '{key}' has unusable value '{v}'"))
            }),
        }
    }

    fn get_str(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

fn resolve<T>(flag: Option<T>, config: Result<Option<T>>, default: T) -> Result<T> {
    Ok(flag.or(config?).unwrap_or(default))
}

fn parse_format(s: &str) -> Result<Format> {
    match s {
        "tud" => Ok(Format::Tud),
        "gspan" => Ok(Format::Gspan),
        "gen" => Ok(Format::Gen),
        other => Err(EinError::Dataset(format!("unknown format '{other}'"))),
    }
}

fn load_dataset(args: &DataArgs, config: &ConfigFile, seed: u64) -> Result<GraphDataset> {
    let data = match (&args.data, config.get_str("data")) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => d.to_string(),
        (None, None) => {
            return Err(EinError::Dataset(
                "missing dataset: pass --data (and --format)".into(),
            ))
        }
    };
    let format = match (args.format, config.get_str("format")) {
        (Some(f), _) => f,
        (None, Some(f)) => parse_format(f)?,
        (None, None) => {
            return Err(EinError::Dataset(
                "missing --format (tud, gspan or gen)".into(),
            ))
        }
    };
    match format {
        Format::Tud => dataset::parse_tud(Path::new(&data)),
        Format::Gspan => dataset::parse_gspan(Path::new(&data)),
        Format::Gen => generate(&data, seed),
    }
}

/// Generator specs: "cycle:<n per class>" or "cycle_xor:<n per quadrant>".
fn generate(spec: &str, seed: u64) -> Result<GraphDataset> {
    let (kind, count) = spec.split_once(':').ok_or_else(|| {
        EinError::Dataset(format!(
            "generator spec '{spec}' should look like cycle:100 or cycle_xor:50"
        ))
    })?;
    let count: usize = count
        .parse()
        .map_err(|_| EinError::Dataset(format!("bad instance count in '{spec}'")))?;
    if count == 0 {
        return Err(EinError::Dataset("instance count must be at least 1".into()));
    }
    match kind {
        "cycle" => Ok(dataset::gen_cycle(count, seed)),
        "cycle_xor" | "cycle-xor" => Ok(dataset::gen_cycle_xor(count, seed)),
        other => Err(EinError::Dataset(format!("unknown generator '{other}'"))),
    }
}

fn parse_lambdas(csv: &str) -> Result<Vec<f64>> {
    csv.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| EinError::Dataset(format!("bad lambda value '{t}'")))
        })
        .collect()
}

fn activation_of(choice: ActivationChoice) -> Activation {
    match choice {
        ActivationChoice::Sigmoid => Activation::Sigmoid,
        ActivationChoice::Leakyrelu => Activation::leaky_relu(),
    }
}

pub(crate) fn train(args: TrainArgs) -> Result<()> {
    let config = ConfigFile::load(args.config.as_deref())?;
    let seed = resolve(args.seed, config.get("seed"), 0)?;
    let ds = load_dataset(&args.data, &config, seed)?;
    let (train_split, valid_split, test_split) = dataset::split(&ds, seed)?;

    let lambda_csv = args
        .lambda_values
        .clone()
        .or_else(|| config.get_str("lambda-values").map(str::to_string));
    let auto_path = args.auto_path || config.get_str("auto-path").is_some();
    let lambdas = match (&lambda_csv, auto_path) {
        (Some(csv), false) => Some(parse_lambdas(csv)?),
        _ => None,
    };

    let base = TrainConfig {
        lambdas,
        maxpat: resolve(args.maxpat, config.get("maxpat"), 10)?,
        k: resolve(args.k, config.get("k"), 2)?,
        activation: match (args.activation, config.get_str("activation")) {
            (Some(a), _) => activation_of(a),
            (None, Some("sigmoid")) => Activation::Sigmoid,
            (None, Some("leakyrelu")) => Activation::leaky_relu(),
            (None, Some(other)) => {
                return Err(EinError::Dataset(format!("unknown activation '{other}'")))
            }
            (None, None) => Activation::Sigmoid,
        },
        ffn_depth: resolve(None, config.get("ffn-depth"), 1)?,
        seed,
        node_cap: resolve(args.node_cap, config.get("node-cap"), 5_000_000)?,
        count_all_patterns: args.count_all,
        ..TrainConfig::default()
    };

    let grid = args.grid || config.get_str("grid").is_some();
    let configs: Vec<TrainConfig> = if grid {
        let mut out = Vec::new();
        for maxpat in [5, 10] {
            for k in [2, 6, 10] {
                for activation in [Activation::Sigmoid, Activation::leaky_relu()] {
                    out.push(TrainConfig {
                        maxpat,
                        k,
                        activation,
                        ..base.clone()
                    });
                }
            }
        }
        out
    } else {
        vec![base]
    };

    let mut best: Option<(ein_core::model::EinModel, ein_core::report::TrainReport, TrainConfig)> =
        None;
    for cfg in configs {
        let (model, report) = ein_core::optimizer::train(&train_split, &valid_split, &cfg)?;
        if best
            .as_ref()
            .is_none_or(|(_, r, _)| report.best_valid_loss < r.best_valid_loss)
        {
            best = Some((model, report, cfg));
        }
    }
    let (model, mut report, cfg) = best.expect("at least one configuration");

    let (preds, _) = model::predict_batch(&model, &test_split.graphs)?;
    let correct = preds
        .iter()
        .zip(&test_split.labels)
        .filter(|((c, _), &y)| *c == y)
        .count();
    report.test_accuracy = Some(correct as f64 / test_split.len().max(1) as f64);

    let out_dir = PathBuf::from(resolve(
        args.out,
        Ok(config.get_str("out").map(str::to_string)),
        ".".into(),
    )?);
    std::fs::create_dir_all(&out_dir)?;
    let model_file = ModelFile {
        model,
        maxpat: cfg.maxpat,
        seed,
        lambda: report.best_lambda,
        dataset: ds.name.clone(),
        split_seed: seed,
        node_label_names: ds.node_label_names.clone(),
        edge_label_names: ds.edge_label_names.clone(),
        class_names: ds.class_names.clone(),
    };
    model_file.save(&out_dir.join("model.txt"))?;
    std::fs::write(out_dir.join("report.txt"), report.to_string())?;
    print!("{report}");
    Ok(())
}

fn open_output(out: &Option<String>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout()),
    })
}

/// Shared CSV path for `predict` (per-graph class, probabilities and
/// selected-pattern bits) and `export-features` (feature matrix plus the
/// model output and the true label).
pub(crate) fn predict(args: PredictArgs, features: bool) -> Result<()> {
    let config = ConfigFile::load(args.config.as_deref())?;
    let seed = resolve(args.seed, config.get("seed"), 0)?;
    let mf = ModelFile::load(Path::new(&args.model))?;
    let ds = load_dataset(&args.data, &config, seed)?;

    if ds.node_label_names != mf.node_label_names
        || ds.edge_label_names != mf.edge_label_names
        || ds.class_names != mf.class_names
    {
        return Err(EinError::Dataset(format!(
            "label dictionary mismatch between dataset '{}' and model trained on '{}'",
            ds.name, mf.dataset
        )));
    }

    let selected: Vec<String> = {
        let mut s: Vec<_> = mf.model.selected();
        s.sort_by(|a, b| a.0.cmp(b.0));
        s.iter().map(|(code, _)| code.to_string()).collect()
    };
    let (preds, supports) = model::predict_batch(&mf.model, &ds.graphs)?;
    // predict_batch reports supports in EinModel::selected order; align
    // them with the sorted header order.
    let order: Vec<usize> = {
        let unsorted: Vec<String> = mf
            .model
            .selected()
            .iter()
            .map(|(c, _)| c.to_string())
            .collect();
        selected
            .iter()
            .map(|code| unsorted.iter().position(|c| c == code).expect("same set"))
            .collect()
    };

    let mut writer = csv::Writer::from_writer(open_output(&args.out)?);
    let mut header = vec!["graph_id".to_string()];
    if features {
        header.extend(selected.iter().cloned());
        header.push("f".into());
        header.push("y".into());
    } else {
        header.push("predicted_class".into());
        for c in &mf.model.classes {
            header.push(format!("prob_{c}"));
        }
        header.extend(selected.iter().cloned());
    }
    writer
        .write_record(&header)
        .map_err(|e| EinError::Dataset(format!("csv: {e}")))?;

    for (i, (class, probs)) in preds.iter().enumerate() {
        let mut row = vec![i.to_string()];
        if features {
            for &s in &order {
                row.push(u8::from(supports[s].get(i)).to_string());
            }
            row.push(class.to_string());
            row.push(ds.labels[i].to_string());
        } else {
            row.push(class.to_string());
            for p in probs {
                row.push(format!("{p:.17e}"));
            }
            for &s in &order {
                row.push(u8::from(supports[s].get(i)).to_string());
            }
        }
        writer
            .write_record(&row)
            .map_err(|e| EinError::Dataset(format!("csv: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| EinError::Dataset(format!("csv: {e}")))?;
    Ok(())
}

pub(crate) fn mine(args: MineArgs) -> Result<()> {
    let config = ConfigFile::load(args.config.as_deref())?;
    let seed = resolve(args.seed, config.get("seed"), 0)?;
    let ds = load_dataset(&args.data, &config, seed)?;
    let maxpat = resolve(args.maxpat, config.get("maxpat"), 10)?;
    let node_cap = resolve(args.node_cap, config.get("node-cap"), 5_000_000)?;

    let mut forest =
        MiningForest::build_roots(ds.graphs.clone(), maxpat)?.with_node_cap(node_cap);
    let all = forest.enumerate_all()?;
    let mut listing: Vec<(usize, ein_core::dfs_code::DfsCode, usize)> = all
        .into_iter()
        .map(|id| {
            let node = forest.node(id);
            (
                node.code.len(),
                node.code.clone(),
                node.support.count_ones(),
            )
        })
        .collect();
    listing.sort();

    let mut out = open_output(&args.out)?;
    for (_, code, support) in &listing {
        writeln!(out, "pattern {code} support {support}")?;
    }
    writeln!(out, "total {}", listing.len())?;
    Ok(())
}
