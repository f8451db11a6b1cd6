/// One solver iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub cost: f64,
    pub grad_sq_norm: f64,
    /// Step taken from this iterate to the next one (0 for the final iterate).
    pub step_size: f64,
    pub feasibility_residual: f64,
    pub pmp_residual: f64,
    /// Seconds since the solver started.
    pub wall_time: f64,
    /// Line-search trials from this iterate whose rollout tripped the
    /// divergence guard (each counted as a rejection).
    pub diverged_trials: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterateLog {
    records: Vec<IterateRecord>,
}

impl IterateLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn push(&mut self, record: IterateRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.k < record.k));
        self.records.push(record);
    }

    pub(crate) fn set_last_step(&mut self, step: f64, diverged_trials: usize) {
        if let Some(r) = self.records.last_mut() {
            r.step_size = step;
            r.diverged_trials = diverged_trials;
        }
    }

    pub fn records(&self) -> &[IterateRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterateRecord> {
        self.records.last()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cost).collect()
    }

    pub fn grad_sq_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.grad_sq_norm).collect()
    }

    /// First iteration whose squared gradient norm is at most `threshold`.
    pub fn iterations_to(&self, threshold: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.grad_sq_norm <= threshold)
            .map(|r| r.k)
    }

    pub fn total_diverged_trials(&self) -> usize {
        self.records.iter().map(|r| r.diverged_trials).sum()
    }

    pub fn max_feasibility_residual(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.feasibility_residual)
            .fold(0.0, f64::max)
    }
}
