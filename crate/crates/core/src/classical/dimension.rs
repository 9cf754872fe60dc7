use serde::Serialize;

use super::{survives, MapSpec, PhasePoint};
use crate::torus::OpeningStrip;
use crate::{Error, Result};

/// Seeds per box side when sampling the trapped set.
const SEEDS_PER_BOX: usize = 4;

/// Occupied-box count at one depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxCount {
    pub depth: u32,
    /// Boxes per torus side.
    pub boxes_per_side: usize,
    /// Iterations checked in each time direction.
    pub horizon: u32,
    pub occupied: usize,
}

/// Occupied boxes of the finite-time trapped set at each depth.
///
/// Depth `k` uses `b_k = round(e^{λ k})` boxes per side, so one box matches the
/// width of the strips that survive `k` iterations. Each box is seeded with a
/// uniform `4 × 4` grid and a seed counts when it avoids the opening for
/// `min(k, horizon)` forward and backward steps.
pub fn box_counts(
    map: &MapSpec,
    strip: &OpeningStrip,
    horizon: u32,
    depths: &[u32],
) -> Result<Vec<BoxCount>> {
    let growth = map.lyapunov().exp();
    depths
        .iter()
        .map(|&depth| {
            let boxes = growth.powi(depth as i32).round().max(1.0) as usize;
            let steps = depth.min(horizon);
            let side = boxes * SEEDS_PER_BOX;
            if side > 20_000 {
                return Err(Error::InvalidArgument(format!(
                    "depth {depth} needs a {side}x{side} seed grid"
                )));
            }
            let mut occupied = vec![false; boxes * boxes];
            for i in 0..side {
                let q = (i as f64 + 0.5) / side as f64;
                for j in 0..side {
                    let cell = (i / SEEDS_PER_BOX) * boxes + j / SEEDS_PER_BOX;
                    if occupied[cell] {
                        continue;
                    }
                    let p = (j as f64 + 0.5) / side as f64;
                    if survives(map, strip, PhasePoint { q, p }, steps, steps) {
                        occupied[cell] = true;
                    }
                }
            }
            let occupied = occupied.iter().filter(|&&b| b).count();
            if occupied == 0 {
                return Err(Error::InsufficientSamples { depth });
            }
            Ok(BoxCount {
                depth,
                boxes_per_side: boxes,
                horizon: steps,
                occupied,
            })
        })
        .collect()
}

/// Box-counting dimension of the trapped set: least-squares slope of
/// `ln(occupied)` against `ln(boxes per side)`.
pub fn box_counting_dimension(
    map: &MapSpec,
    strip: &OpeningStrip,
    horizon: u32,
    depths: &[u32],
) -> Result<f64> {
    if horizon < 4 {
        return Err(Error::InvalidArgument(format!("horizon {horizon} < 4")));
    }
    if depths.len() < 3 {
        return Err(Error::InvalidArgument(
            "box counting needs at least three depths".into(),
        ));
    }
    Ok(dimension_from_counts(&box_counts(
        map, strip, horizon, depths,
    )?))
}

/// Least-squares slope of `ln(occupied)` against `ln(boxes per side)`.
pub fn dimension_from_counts(counts: &[BoxCount]) -> f64 {
    let xs: Vec<f64> = counts
        .iter()
        .map(|c| (c.boxes_per_side as f64).ln())
        .collect();
    let ys: Vec<f64> = counts.iter().map(|c| (c.occupied as f64).ln()).collect();
    least_squares(&xs, &ys).0
}

/// Slope and intercept of the least-squares line through `(xs, ys)`.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
