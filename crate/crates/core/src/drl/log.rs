use serde::{Deserialize, Serialize};

/// One environment step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub episode: usize,
    /// Global step counter, starting at 1.
    pub step: usize,
    /// Name of the probe the pre-action state coincides with, if any.
    pub state_id: String,
    pub alpha: Vec<bool>,
    pub beta: Vec<bool>,
    pub reward: f64,
    /// Joint-network loss for the centralized learner.
    pub loss_device: Option<f64>,
    pub loss_attacker: Option<f64>,
    /// Probe Q-values, present every `q_log_period` steps.
    pub q: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub rows: Vec<LogRow>,
    /// Names of the probe Q columns, matching each `LogRow::q`.
    pub q_columns: Vec<String>,
    /// Step at which the convergence test fired.
    pub converged_at: Option<usize>,
    pub episodes: usize,
    /// Q-cells visited by greedy selection, summed over all steps.
    pub argext_cells: u64,
}

impl EpisodeLog {
    pub fn steps(&self) -> usize {
        self.rows.len()
    }

    /// Average number of Q-cells scanned per greedy selection.
    pub fn argext_cells_per_step(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.argext_cells as f64 / self.rows.len() as f64
        }
    }

    pub fn device_losses(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.loss_device).collect()
    }

    pub fn attacker_losses(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.loss_attacker).collect()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.reward).collect()
    }
}

/// Mean of the first and last `window` entries.
pub fn head_tail_means(series: &[f64], window: usize) -> Option<(f64, f64)> {
    if series.is_empty() || window == 0 {
        return None;
    }
    let w = window.min(series.len());
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Some((mean(&series[..w]), mean(&series[series.len() - w..])))
}
