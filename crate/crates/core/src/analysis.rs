//! Phase-space pictures of states and resonance counting.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::least_squares;
use crate::linalg::{inner, norm};
use crate::scar::coherent_amplitudes;
use crate::spectral::count_above;
use crate::torus::TorusSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Raw,
    UnitMean,
}

/// Non-negative field sampled at cell centres `((i+½)/n_q, (j+½)/n_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub n_q: usize,
    pub n_p: usize,
    /// Row-major, `values[i * n_p + j]` at `q_i`, `p_j`.
    pub values: Vec<f64>,
    pub spec: TorusSpec,
    pub normalization: Normalization,
}

impl HusimiGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_p + j]
    }

    pub fn centre(&self, i: usize, j: usize) -> (f64, f64) {
        (
            (i as f64 + 0.5) / self.n_q as f64,
            (j as f64 + 0.5) / self.n_p as f64,
        )
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Cell `(i, j)` holding the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let k = (0..self.values.len())
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .unwrap_or(0);
        (k / self.n_p, k % self.n_p)
    }

    /// Rescaled copy with mean one.
    pub fn unit_mean(&self) -> HusimiGrid {
        let m = self.mean();
        let values = if m > 0.0 {
            self.values.iter().map(|v| v / m).collect()
        } else {
            self.values.clone()
        };
        HusimiGrid {
            values,
            normalization: Normalization::UnitMean,
            ..self.clone()
        }
    }

    /// Share of the total held by cells whose centre satisfies `region(q, p)`.
    pub fn mass_fraction(&self, region: impl Fn(f64, f64) -> bool) -> f64 {
        let total = self.total();
        if total == 0.0 {
            return 0.0;
        }
        let mut inside = 0.0;
        for i in 0..self.n_q {
            for j in 0..self.n_p {
                let (q, p) = self.centre(i, j);
                if region(q, p) {
                    inside += self.at(i, j);
                }
            }
        }
        inside / total
    }
}

/// `(max(64, 2⌈√N⌉), same)`.
pub fn default_resolution(n: usize) -> (usize, usize) {
    let side = 64.max(2 * (n as f64).sqrt().ceil() as usize);
    (side, side)
}

/// `⟨q_i, p_j|ψ⟩` over the grid, row-major.
fn amplitudes(
    state: &[Complex64],
    spec: &TorusSpec,
    (n_q, n_p): (usize, usize),
) -> Result<Vec<Complex64>> {
    if state.len() != spec.dim() {
        return Err(Error::SpecMismatch {
            expected: spec.dim(),
            actual: state.len(),
        });
    }
    if n_q == 0 || n_p == 0 {
        return Err(Error::InvalidArgument(
            "grid resolution must be positive".into(),
        ));
    }
    if norm(state) == 0.0 {
        return Err(Error::ZeroState);
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n_q * n_p];
    let row = |i: usize, dst: &mut [Complex64]| {
        let q = (i as f64 + 0.5) / n_q as f64;
        for (j, a) in dst.iter_mut().enumerate() {
            let p = (j as f64 + 0.5) / n_p as f64;
            let mut c = coherent_amplitudes(spec, q, p);
            let nrm = norm(&c);
            c.iter_mut().for_each(|x| *x /= nrm);
            *a = inner(&c, state);
        }
    };
    // rows are independent; each thread owns a contiguous block of them
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(n_q);
    let rows_per = n_q.div_ceil(threads);
    std::thread::scope(|s| {
        for (b, block) in out.chunks_mut(rows_per * n_p).enumerate() {
            let row = &row;
            s.spawn(move || {
                for (r, dst) in block.chunks_mut(n_p).enumerate() {
                    row(b * rows_per + r, dst);
                }
            });
        }
    });
    Ok(out)
}

/// `|⟨q,p|ψ⟩|²` on a grid of coherent-state centres; the state is not renormalized.
pub fn husimi(
    state: &[Complex64],
    spec: &TorusSpec,
    resolution: (usize, usize),
) -> Result<HusimiGrid> {
    let values = amplitudes(state, spec, resolution)?
        .iter()
        .map(|a| a.norm_sqr())
        .collect();
    Ok(HusimiGrid {
        n_q: resolution.0,
        n_p: resolution.1,
        values,
        spec: *spec,
        normalization: Normalization::Raw,
    })
}

/// `h(q,p) = |⟨q,p|R⟩ ⟨L|q,p⟩|²` for a biorthonormal pair.
pub fn mixed_representation(
    right: &[Complex64],
    left: &[Complex64],
    spec: &TorusSpec,
    resolution: (usize, usize),
) -> Result<HusimiGrid> {
    if right.len() != left.len() {
        return Err(Error::SpecMismatch {
            expected: right.len(),
            actual: left.len(),
        });
    }
    let defect = (inner(left, right) - Complex64::new(1.0, 0.0)).norm();
    if !(defect <= 1e-6) {
        return Err(Error::NotBiorthonormal(defect));
    }
    let ar = amplitudes(right, spec, resolution)?;
    let al = amplitudes(left, spec, resolution)?;
    let values = ar
        .iter()
        .zip(&al)
        .map(|(r, l)| (r * l.conj()).norm_sqr())
        .collect();
    Ok(HusimiGrid {
        n_q: resolution.0,
        n_p: resolution.1,
        values,
        spec: *spec,
        normalization: Normalization::Raw,
    })
}

/// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn state_overlap(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SpecMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok((inner(a, b).norm() / (na * nb)).powi(2).min(1.0))
}

/// Pearson correlation of two equally sized grids.
pub fn grid_correlation(a: &HusimiGrid, b: &HusimiGrid) -> Result<f64> {
    if (a.n_q, a.n_p) != (b.n_q, b.n_p) {
        return Err(Error::SpecMismatch {
            expected: a.values.len(),
            actual: b.values.len(),
        });
    }
    Ok(pearson(&a.values, &b.values))
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// True when the first `depth` ternary digits of `x` avoid the digit 1.
pub fn in_cantor_cell(x: f64, depth: u32) -> bool {
    let mut y = x;
    for _ in 0..depth {
        y *= 3.0;
        let d = y.floor();
        if d == 1.0 {
            return false;
        }
        y -= d;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylFit {
    pub sizes: Vec<usize>,
    pub counts: Vec<usize>,
    pub nu_c: f64,
    pub slope: f64,
    pub intercept: f64,
    pub repeller_dimension: f64,
    /// `d / 2`, the slope the fractal Weyl law predicts.
    pub reference_slope: f64,
    /// `ln n − (slope ln N + intercept)` per size.
    pub residuals: Vec<f64>,
    /// False when some count decreases with growing `N`.
    pub monotone: bool,
}

/// Least-squares power law `n(N) ∝ N^slope` for `n = #{|z| ≥ nu_c}`.
pub fn weyl_fit(spectra: &[(usize, &[Complex64])], nu_c: f64, d: f64) -> Result<WeylFit> {
    if !(nu_c > 0.0 && nu_c < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "nu_c {nu_c} outside (0, 1)"
        )));
    }
    let mut rows: Vec<(usize, usize)> = spectra
        .iter()
        .map(|(n, z)| (*n, count_above(z, nu_c)))
        .collect();
    rows.sort();
    let mut distinct: Vec<usize> = rows.iter().map(|r| r.0).collect();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::TooFewSizes(distinct.len()));
    }
    if let Some(&(n, _)) = rows.iter().find(|r| r.1 == 0) {
        return Err(Error::InvalidArgument(format!(
            "no resonance above {nu_c} at N = {n}"
        )));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.0 as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.1 as f64).ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let residuals = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (slope * x + intercept))
        .collect();
    let monotone = rows.windows(2).all(|w| w[1].1 >= w[0].1);
    Ok(WeylFit {
        sizes: rows.iter().map(|r| r.0).collect(),
        counts: rows.iter().map(|r| r.1).collect(),
        nu_c,
        slope,
        intercept,
        repeller_dimension: d,
        reference_slope: d / 2.0,
        residuals,
        monotone,
    })
}
