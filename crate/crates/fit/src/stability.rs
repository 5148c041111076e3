use serde::{Deserialize, Serialize};

use crate::scaling::{fit_scaling, FitResult};
use crate::{distinct_count, DataPoint, FitError, Result};

/// Scaling fits restricted to every window `[l_min, l_max]` of two grids.
/// `cells[i][j]` belongs to `l_min_grid[i]` and `l_max_grid[j]`; windows that
/// are empty or hold too few sizes are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySweep {
    pub l_min_grid: Vec<f64>,
    pub l_max_grid: Vec<f64>,
    pub cells: Vec<Vec<Option<FitResult>>>,
}

impl StabilitySweep {
    /// Fitted exponent per cell.
    pub fn b_surface(&self) -> Vec<Vec<Option<f64>>> {
        self.cells.iter().map(|row| row.iter().map(|c| c.as_ref().map(|f| f.b)).collect()).collect()
    }

    pub fn cell(&self, l_min: f64, l_max: f64) -> Option<&FitResult> {
        let i = self.l_min_grid.iter().position(|&x| x == l_min)?;
        let j = self.l_max_grid.iter().position(|&x| x == l_max)?;
        self.cells[i][j].as_ref()
    }
}

pub fn stability_sweep(
    points: &[DataPoint],
    l_min_grid: &[f64],
    l_max_grid: &[f64],
    fix_b: Option<f64>,
) -> Result<StabilitySweep> {
    let lo = points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    if l_min_grid.iter().chain(l_max_grid).any(|&l| l < lo || l > hi) {
        return Err(FitError::InvalidData(format!("window grid leaves the data range [{lo}, {hi}]")));
    }
    let needed = if fix_b.is_some() { 3 } else { 4 };
    let mut cells = Vec::with_capacity(l_min_grid.len());
    for &l_min in l_min_grid {
        let mut row = Vec::with_capacity(l_max_grid.len());
        for &l_max in l_max_grid {
            let window: Vec<DataPoint> = points.iter().filter(|p| p.x >= l_min && p.x <= l_max).copied().collect();
            if distinct_count(window.iter().map(|p| p.x)) < needed {
                row.push(None);
            } else {
                row.push(Some(fit_scaling(&window, fix_b)?));
            }
        }
        cells.push(row);
    }
    Ok(StabilitySweep { l_min_grid: l_min_grid.to_vec(), l_max_grid: l_max_grid.to_vec(), cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_window_matches_plain_fit() {
        let pts: Vec<DataPoint> =
            (1..=8).map(|k| 16.0 * k as f64).map(|l| DataPoint::new(l, 2.0 * l / (1.0 + 0.1 * l.powf(0.8)), 0.0)).collect();
        let sweep = stability_sweep(&pts, &[16.0, 64.0, 112.0], &[64.0, 128.0], None).unwrap();
        assert_eq!(sweep.cell(16.0, 128.0), Some(&fit_scaling(&pts, None).unwrap()));
        assert!(sweep.cell(112.0, 64.0).is_none());
        assert!(sweep.cell(112.0, 128.0).is_none());
        assert!(stability_sweep(&pts, &[8.0], &[128.0], None).is_err());
    }
}
