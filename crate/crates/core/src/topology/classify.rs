//! Cell-by-cell orbit classification and the aperiodic area fraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fixed_points::FixedPointScan;
use super::orbit::{trace_orbit, OrbitKind, TraceCaps};
use crate::field::StreamField;
use crate::tolerances::Scales;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellLabel {
    Fixed,
    Periodic,
    Aperiodic,
    Unresolved,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationGrid {
    pub n: usize,
    pub cell_area: f64,
    /// Row-major labels; `None` for cells whose centre lies outside the domain.
    pub labels: Vec<Option<CellLabel>>,
}

impl ClassificationGrid {
    pub fn fraction(&self, label: CellLabel) -> f64 {
        let inside = self.labels.iter().flatten().count();
        if inside == 0 {
            return 0.0;
        }
        self.labels.iter().flatten().filter(|&&l| l == label).count() as f64 / inside as f64
    }
}

/// Classify the centre of every cell of an `n x n` grid over the bounding
/// box. Cells centred within one cell size of a saddle are unresolved.
pub fn classify_cells(field: &StreamField, fps: &FixedPointScan, n: usize, scales: &Scales) -> ClassificationGrid {
    let [x0, x1, y0, y1] = field.domain.bounding_box();
    let (hx, hy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
    let h = hx.max(hy);
    let zones = fps.saddle_zones(h);
    let mut caps = TraceCaps::from_scales(scales);
    caps.rtol = scales.tol.classify_rtol;
    caps.record_polyline = false;
    caps.saddle_zones = zones.clone();
    let guard = scales.fixed_point_guard();
    let labels = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let p = [x0 + (k % n) as f64 * hx + 0.5 * hx, y0 + (k / n) as f64 * hy + 0.5 * hy];
            if !field.domain.contains(p) {
                return None;
            }
            if zones.iter().any(|(c, r)| field.domain.distance(*c, p) < *r) {
                return Some(CellLabel::Unresolved);
            }
            let g = field.grad(p);
            if g[0].hypot(g[1]) <= guard {
                return Some(CellLabel::Fixed);
            }
            Some(match trace_orbit(field, p, &caps, scales) {
                Ok(t) if t.kind == OrbitKind::Periodic => CellLabel::Periodic,
                Ok(t) if t.diagnostic.as_deref().is_some_and(|d| d.contains("underflow")) => CellLabel::Unresolved,
                Ok(_) => CellLabel::Aperiodic,
                Err(_) => CellLabel::Unresolved,
            })
        })
        .collect();
    ClassificationGrid { n, cell_area: hx * hy, labels }
}

/// Area fraction labelled aperiodic or unresolved.
pub fn aperiodic_measure(grid: &ClassificationGrid) -> f64 {
    grid.fraction(CellLabel::Aperiodic) + grid.fraction(CellLabel::Unresolved)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub n: usize,
    pub n_refined: usize,
    pub fraction: f64,
    pub refined_fraction: f64,
    pub satisfied: bool,
}

/// Compare the aperiodic fraction at `n` and `2n` cells per axis. Satisfied
/// when the refined fraction is below 2% and either shrank or both are 0.
pub fn hypothesis_h(field: &StreamField, fps: &FixedPointScan, n: usize, scales: &Scales) -> HypothesisReport {
    let coarse = aperiodic_measure(&classify_cells(field, fps, n, scales));
    let fine = aperiodic_measure(&classify_cells(field, fps, 2 * n, scales));
    let satisfied = fine < 0.02 && (fine < coarse || (fine == 0.0 && coarse == 0.0));
    HypothesisReport { n, n_refined: 2 * n, fraction: coarse, refined_fraction: fine, satisfied }
}
