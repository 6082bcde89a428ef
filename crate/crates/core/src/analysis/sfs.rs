use serde::Serialize;

use super::stats::mean_and_se;
use crate::trajectory::Trajectory;

/// τ^{n,r} for one path, integrated up to absorption or the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SfsValue {
    pub value: f64,
    /// The path had not reached a single block by its horizon.
    pub truncated: bool,
}

/// ∫ #{blocks of size r} ds over [0, T_MRCA), or over [0, horizon) when not absorbed.
pub fn sfs_functional(path: &Trajectory, r: usize) -> SfsValue {
    let end = path.absorption_time().unwrap_or(path.horizon);
    let mut value = 0.0;
    for (i, state) in path.states.iter().enumerate() {
        let start = path.times[i];
        if start >= end {
            break;
        }
        let stop = path.times.get(i + 1).copied().unwrap_or(end).min(end);
        let count = state.block_sizes().iter().filter(|&&s| s == r).count();
        value += count as f64 * (stop - start);
    }
    SfsValue { value, truncated: path.absorption_time().is_none() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SfsSummary {
    pub r: usize,
    pub mean: f64,
    pub std_error: f64,
    /// Share of paths not absorbed by their horizon; their integrals are lower bounds.
    pub truncated_fraction: f64,
}

pub fn sfs_summary(paths: &[Trajectory], r: usize) -> SfsSummary {
    let values: Vec<SfsValue> = paths.iter().map(|p| sfs_functional(p, r)).collect();
    let (mean, std_error) = mean_and_se(&values.iter().map(|v| v.value).collect::<Vec<_>>());
    let truncated_fraction = values.iter().filter(|v| v.truncated).count() as f64 / values.len().max(1) as f64;
    SfsSummary { r, mean, std_error, truncated_fraction }
}
