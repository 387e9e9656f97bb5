//! Training report: per-lambda statistics mirroring the quantities the
//! training path is judged on (working-set size, traversal effort, pruning
//! rate, losses, accuracies), serialized as readable structured text.

use std::fmt;

/// Statistics for one value of the regularization parameter.
#[derive(Clone, Debug)]
pub struct LambdaRow {
    pub lambda: f64,
    /// Working-set size at the end of this lambda.
    pub working_set: usize,
    /// Patterns with a nonzero weight group at the end of this lambda.
    pub nonzero_groups: usize,
    /// Mean nodes visited per traversal call.
    pub mean_traversed: f64,
    /// Total candidate-set size, when measured.
    pub total_patterns: Option<usize>,
    /// 1 - mean_traversed / total_patterns, when measured.
    pub pruning_rate: Option<f64>,
    pub train_loss: f64,
    pub valid_loss: f64,
    pub train_accuracy: f64,
    pub valid_accuracy: f64,
    pub outer_iterations: usize,
}

/// Full record of one training run.
#[derive(Clone, Debug, Default)]
pub struct TrainReport {
    pub dataset: String,
    pub seed: u64,
    pub maxpat: usize,
    pub k: usize,
    pub activation: String,
    pub rows: Vec<LambdaRow>,
    pub lambda_max: f64,
    /// Lambda of the snapshot with the best validation loss.
    pub best_lambda: f64,
    pub best_valid_loss: f64,
    /// Size of the selected-subgraph set of the returned model.
    pub selected_count: usize,
    pub train_accuracy: f64,
    pub valid_accuracy: f64,
    /// Filled by callers that evaluate a held-out split.
    pub test_accuracy: Option<f64>,
    pub wall_seconds: f64,
    /// Flattened (beta, bias, ffn) parameter vector after every outer
    /// iteration, recorded only when requested.
    pub trajectory: Option<Vec<Vec<f64>>>,
}

impl TrainReport {
    /// Mean working-set size across the path.
    pub fn mean_working_set(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.working_set as f64).sum::<f64>() / self.rows.len() as f64
    }

    /// Mean traversal size across the path.
    pub fn mean_traversed(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.mean_traversed).sum::<f64>() / self.rows.len() as f64
    }

    /// Overall pruning rate against the measured candidate-set size.
    pub fn pruning_rate(&self) -> Option<f64> {
        let total = self.rows.iter().find_map(|r| r.total_patterns)?;
        Some(1.0 - self.mean_traversed() / total as f64)
    }
}

impl fmt::Display for TrainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ein-train-report")?;
        writeln!(f, "dataset {}", self.dataset)?;
        writeln!(f, "seed {}", self.seed)?;
        writeln!(f, "maxpat {}", self.maxpat)?;
        writeln!(f, "k {}", self.k)?;
        writeln!(f, "activation {}", self.activation)?;
        writeln!(f, "lambda_max {:.6e}", self.lambda_max)?;
        writeln!(
            f,
            "columns lambda working_set nonzero traversed total_patterns pruning_rate train_loss valid_loss train_acc valid_acc iters"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "row {:.6e} {} {} {:.1} {} {} {:.6e} {:.6e} {:.4} {:.4} {}",
                r.lambda,
                r.working_set,
                r.nonzero_groups,
                r.mean_traversed,
                r.total_patterns.map_or("-".into(), |t| t.to_string()),
                r.pruning_rate
                    .map_or("-".into(), |p| format!("{:.4}", p)),
                r.train_loss,
                r.valid_loss,
                r.train_accuracy,
                r.valid_accuracy,
                r.outer_iterations,
            )?;
        }
        writeln!(f, "best_lambda {:.6e}", self.best_lambda)?;
        writeln!(f, "best_valid_loss {:.6e}", self.best_valid_loss)?;
        writeln!(f, "selected_subgraphs {}", self.selected_count)?;
        writeln!(f, "mean_working_set {:.1}", self.mean_working_set())?;
        writeln!(f, "mean_traversed {:.1}", self.mean_traversed())?;
        if let Some(p) = self.pruning_rate() {
            writeln!(f, "pruning_rate {:.4}", p)?;
        }
        writeln!(f, "train_accuracy {:.4}", self.train_accuracy)?;
        writeln!(f, "valid_accuracy {:.4}", self.valid_accuracy)?;
        if let Some(t) = self.test_accuracy {
            writeln!(f, "test_accuracy {:.4}", t)?;
        }
        writeln!(f, "wall_seconds {:.1}", self.wall_seconds)?;
        Ok(())
    }
}
