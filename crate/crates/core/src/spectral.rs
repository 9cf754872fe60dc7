//! Resonance spectra of open maps: exact dense diagonalization, the
//! scar-basis generalized eigenproblem and one-to-one spectrum matching.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::linalg::{self, inner, norm, ZERO};
use crate::scar::ScarBasis;
use crate::torus::OpenMapOperator;
use crate::{ComplexMatrix, Error, Result};

/// Pairs whose `1/|<L|R>|` (for unit vectors) exceeds this are flagged, not rescaled.
pub const CONDITION_CAP: f64 = 1e12;

/// An eigenvalue is known to within `RESOLUTION_FACTOR · ε · κ` (`‖Ũ‖ ≤ 1`).
/// Eigenvalues whose discs overlap form one numerically degenerate cluster.
pub const RESOLUTION_FACTOR: f64 = 100.0;

/// Eigenvalues with right/left vectors, biorthonormalized pairwise.
#[derive(Debug, Clone)]
pub struct ResonanceSet {
    values: Vec<Complex64>,
    right: ComplexMatrix,
    left: ComplexMatrix,
    residuals: Vec<f64>,
    condition: Vec<f64>,
    defective: Vec<usize>,
}

impl ResonanceSet {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn right(&self) -> &ComplexMatrix {
        &self.right
    }

    pub fn left(&self) -> &ComplexMatrix {
        &self.left
    }

    pub fn right_vector(&self, n: usize) -> Vec<Complex64> {
        linalg::column(&self.right, n)
    }

    pub fn left_vector(&self, n: usize) -> Vec<Complex64> {
        linalg::column(&self.left, n)
    }

    /// `‖Ũ Ψ^R − z Ψ^R‖ / ‖Ψ^R‖`.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// `‖Ψ^R‖ ‖Ψ^L‖ / |<Ψ^L|Ψ^R>|` before rescaling.
    pub fn condition(&self) -> &[f64] {
        &self.condition
    }

    /// Indices whose pair could not be biorthonormalized.
    pub fn defective(&self) -> &[usize] {
        &self.defective
    }

    /// `Err(DefectiveMatrix)` listing the flagged indices, if any.
    pub fn check_defective(&self) -> Result<()> {
        if self.defective.is_empty() {
            Ok(())
        } else {
            Err(Error::DefectiveMatrix(self.defective.clone()))
        }
    }

    /// Index of the eigenvalue whose modulus is closest to `target`.
    pub fn nearest_modulus(&self, target: f64) -> Option<usize> {
        (0..self.len()).min_by(|&a, &b| {
            let da = (self.values[a].norm() - target).abs();
            let db = (self.values[b].norm() - target).abs();
            da.total_cmp(&db)
        })
    }

    /// Number of eigenvalues with `|z| ≥ nu_c`.
    pub fn count_above(&self, nu_c: f64) -> usize {
        count_above(&self.values, nu_c)
    }

    /// Unflagged indices whose eigenvalue is resolved from every other one.
    pub fn simple(&self) -> Vec<usize> {
        let radius = |i: usize| RESOLUTION_FACTOR * f64::EPSILON * self.condition[i];
        (0..self.len())
            .filter(|i| !self.defective.contains(i))
            .filter(|&i| {
                (0..self.len()).all(|j| {
                    j == i || (self.values[i] - self.values[j]).norm() > radius(i) + radius(j)
                })
            })
            .collect()
    }

    /// Largest `|<Ψ_n^L|Ψ_m^R> − δ_nm|` over the simple indices.
    pub fn biorthogonality_defect(&self) -> f64 {
        let keep = self.simple();
        let l = Mat::from_fn(self.left.nrows(), keep.len(), |i, j| {
            self.left[(i, keep[j])]
        });
        let r = Mat::from_fn(self.right.nrows(), keep.len(), |i, j| {
            self.right[(i, keep[j])]
        });
        let g = l.adjoint() * &r;
        let mut worst = 0.0f64;
        for i in 0..keep.len() {
            for j in 0..keep.len() {
                let d = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    ZERO
                };
                worst = worst.max((g[(i, j)] - d).norm());
            }
        }
        worst
    }
}

pub fn count_above(values: &[Complex64], nu_c: f64) -> usize {
    values.iter().filter(|z| z.norm() >= nu_c).count()
}

/// Descending modulus, then ascending phase in `[0, 2π)`.
pub fn spectral_order(a: &Complex64, b: &Complex64) -> Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then_with(|| a.arg().rem_euclid(TAU).total_cmp(&b.arg().rem_euclid(TAU)))
}

fn sorted_order(values: &[Complex64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| spectral_order(&values[a], &values[b]).then(a.cmp(&b)));
    idx
}

/// Eigenvalues only, in spectral order. Opened positions contribute exact zeros.
pub fn exact_eigenvalues(u: &OpenMapOperator) -> Result<Vec<Complex64>> {
    let kept = u.kept_indices();
    let block = submatrix(u.matrix(), &kept);
    let mut values = linalg::eigen(&block, false)?.values;
    values.resize(u.spec().dim(), ZERO);
    values.sort_by(spectral_order);
    Ok(values)
}

fn submatrix(m: &ComplexMatrix, idx: &[usize]) -> ComplexMatrix {
    Mat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Rescales unit-norm columns pairwise to `<L|R> = 1` with equal norms; the
/// phase of `<L|R>` is removed from the right vector. Returns the condition
/// numbers and the indices left untouched because they exceed the cap.
fn biorthonormalize(right: &mut ComplexMatrix, left: &mut ComplexMatrix) -> (Vec<f64>, Vec<usize>) {
    let mut condition = Vec::with_capacity(right.ncols());
    let mut defective = Vec::new();
    for j in 0..right.ncols() {
        let nr = norm(right.col_as_slice(j));
        let nl = norm(left.col_as_slice(j));
        let c = inner(left.col_as_slice(j), right.col_as_slice(j));
        let cond = if c.norm() > 0.0 {
            nr * nl / c.norm()
        } else {
            f64::INFINITY
        };
        condition.push(cond);
        if !(cond <= CONDITION_CAP) {
            defective.push(j);
            continue;
        }
        let rs = Complex64::from_polar((nl / (nr * c.norm())).sqrt(), -c.arg());
        let ls = (nr / (nl * c.norm())).sqrt();
        right.col_as_slice_mut(j).iter_mut().for_each(|x| *x *= rs);
        left.col_as_slice_mut(j).iter_mut().for_each(|x| *x *= ls);
    }
    (condition, defective)
}

fn residuals(u: &ComplexMatrix, right: &ComplexMatrix, values: &[Complex64]) -> Vec<f64> {
    let ur = u * right;
    (0..values.len())
        .map(|j| {
            let r = right.col_as_slice(j);
            let nr = norm(r);
            if nr == 0.0 {
                return 0.0;
            }
            let d: f64 = ur
                .col_as_slice(j)
                .iter()
                .zip(r)
                .map(|(a, b)| (a - values[j] * b).norm_sqr())
                .sum();
            d.sqrt() / nr
        })
        .collect()
}

fn assemble(
    u: &ComplexMatrix,
    values: Vec<Complex64>,
    mut right: ComplexMatrix,
    mut left: ComplexMatrix,
) -> ResonanceSet {
    let order = sorted_order(&values);
    let values: Vec<Complex64> = order.iter().map(|&i| values[i]).collect();
    right = Mat::from_fn(right.nrows(), order.len(), |i, j| right[(i, order[j])]);
    left = Mat::from_fn(left.nrows(), order.len(), |i, j| left[(i, order[j])]);
    let (condition, defective) = biorthonormalize(&mut right, &mut left);
    let residuals = residuals(u, &right, &values);
    ResonanceSet {
        values,
        right,
        left,
        residuals,
        condition,
        defective,
    }
}

/// Full non-Hermitian eigendecomposition of `Ũ`.
///
/// Only the block on positions outside the opening is diagonalized; every
/// opened position `j` contributes the eigenvalue 0 with `Ψ^R = Ψ^L = e_j`.
/// Pairs that cannot be biorthonormalized are listed in `defective()`.
pub fn exact_resonances(u: &OpenMapOperator) -> Result<ResonanceSet> {
    let n = u.spec().dim();
    let kept = u.kept_indices();
    let block = submatrix(u.matrix(), &kept);
    let eig = linalg::eigen(&block, true)?;
    let (br, bl) = (eig.right.unwrap(), eig.left.unwrap());
    let mut values = eig.values;
    let mut right = Mat::<Complex64>::zeros(n, n);
    let mut left = Mat::<Complex64>::zeros(n, n);
    for j in 0..kept.len() {
        for (i, &row) in kept.iter().enumerate() {
            right[(row, j)] = br[(i, j)];
            left[(row, j)] = bl[(i, j)];
        }
    }
    let opened: Vec<usize> = (0..n).filter(|j| kept.binary_search(j).is_err()).collect();
    for (c, &row) in opened.iter().enumerate() {
        let j = kept.len() + c;
        right[(row, j)] = Complex64::new(1.0, 0.0);
        left[(row, j)] = Complex64::new(1.0, 0.0);
        values.push(ZERO);
    }
    Ok(assemble(u.matrix(), values, right, left))
}

/// Projections of `Ũ` and of the identity onto a scar basis.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    /// `H[a][b] = <ψ_a^L|Ũ|ψ_b^R>`.
    pub h: ComplexMatrix,
    /// `S[a][b] = <ψ_a^L|ψ_b^R>`.
    pub s: ComplexMatrix,
    pub svd_tol: f64,
}

pub fn reduced_problem(
    basis: &ScarBasis,
    u: &OpenMapOperator,
    svd_tol: f64,
) -> Result<ReducedProblem> {
    if basis.is_empty() {
        return Err(Error::InvalidArgument("empty scar basis".into()));
    }
    if basis.spec().dim() != u.spec().dim() {
        return Err(Error::SpecMismatch {
            expected: u.spec().dim(),
            actual: basis.spec().dim(),
        });
    }
    if !(0.0..1.0).contains(&svd_tol) {
        return Err(Error::InvalidArgument(format!(
            "svd_tol {svd_tol} outside [0, 1)"
        )));
    }
    let ur = u.matrix() * basis.right();
    let h = basis.left().adjoint() * &ur;
    let s = basis.left().adjoint() * basis.right();
    Ok(ReducedProblem { h, s, svd_tol })
}

/// Eigenpairs of the reduced problem, as coefficient columns over the basis.
#[derive(Debug, Clone)]
pub struct ReducedSolution {
    pub values: Vec<Complex64>,
    /// `Ψ^R = R_basis · right_coefficients[:, n]`.
    pub right_coefficients: ComplexMatrix,
    /// `Ψ^L = L_basis · left_coefficients[:, n]` (as kets).
    pub left_coefficients: ComplexMatrix,
    /// Retained rank of `S`.
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

/// Solves `H c = z S c` in the span of the singular vectors of `S` above
/// `svd_tol · σ_max`: with `S ≈ W Σ V†`, the retained problem is
/// `M = Σ⁻¹ W† H V`. Right coefficients are `V y` and left ones `W Σ⁻¹ w`
/// for right/left eigenvectors `y`, `w` of `M`.
pub fn solve_generalized(prob: &ReducedProblem) -> Result<ReducedSolution> {
    let ns = prob.s.nrows();
    if ns == 0 {
        return Err(Error::RankZero);
    }
    let svd = linalg::svd(&prob.s)?;
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let rank = svd
        .s
        .iter()
        .take_while(|&&x| x > 0.0 && x > prob.svd_tol * smax)
        .count();
    if rank == 0 || !smax.is_finite() {
        return Err(Error::RankZero);
    }
    let w = svd.u.subcols(0, rank).to_owned();
    let v = svd.v.subcols(0, rank).to_owned();
    let mut m = w.adjoint() * &prob.h * &v;
    for i in 0..rank {
        let inv = 1.0 / svd.s[i];
        for j in 0..rank {
            m[(i, j)] *= inv;
        }
    }
    let eig = linalg::eigen(&m, true)?;
    let right_coefficients = &v * eig.right.as_ref().unwrap();
    let mut scaled_w = w;
    for j in 0..rank {
        let inv = 1.0 / svd.s[j];
        scaled_w
            .col_as_slice_mut(j)
            .iter_mut()
            .for_each(|x| *x *= inv);
    }
    let left_coefficients = &scaled_w * eig.left.as_ref().unwrap();
    Ok(ReducedSolution {
        values: eig.values,
        right_coefficients,
        left_coefficients,
        rank,
        singular_values: svd.s,
    })
}

impl ReducedSolution {
    /// Lifts the coefficient vectors to the torus and biorthonormalizes them.
    pub fn lift(&self, basis: &ScarBasis, u: &OpenMapOperator) -> Result<ResonanceSet> {
        if basis.len() != self.right_coefficients.nrows() {
            return Err(Error::SpecMismatch {
                expected: basis.len(),
                actual: self.right_coefficients.nrows(),
            });
        }
        let mut right = basis.right() * &self.right_coefficients;
        let mut left = basis.left() * &self.left_coefficients;
        for m in [&mut right, &mut left] {
            for j in 0..m.ncols() {
                let col = m.col_as_slice_mut(j);
                let nrm = norm(col);
                if nrm > 0.0 {
                    col.iter_mut().for_each(|x| *x /= nrm);
                }
            }
        }
        Ok(assemble(u.matrix(), self.values.clone(), right, left))
    }
}

/// Scar-method resonances: reduced problem, truncated solve and lift.
pub fn scar_resonances(
    basis: &ScarBasis,
    u: &OpenMapOperator,
    svd_tol: f64,
) -> Result<ResonanceSet> {
    let prob = reduced_problem(basis, u, svd_tol)?;
    solve_generalized(&prob)?.lift(basis, u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedPair {
    pub exact: usize,
    pub approx: usize,
    pub distance: f64,
}

/// One-to-one assignment between long-lived exact eigenvalues and approximate ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    /// Sorted by ascending distance.
    pub pairs: Vec<MatchedPair>,
    /// Exact eigenvalues with `|z| ≥ cutoff` left without a partner.
    pub unmatched_exact: Vec<usize>,
    pub unmatched_approx: Vec<usize>,
    pub cutoff: f64,
}

impl MatchReport {
    /// Number of exact eigenvalues above the cutoff.
    pub fn long_lived(&self) -> usize {
        self.pairs.len() + self.unmatched_exact.len()
    }

    pub fn mean_distance(&self) -> f64 {
        if self.pairs.is_empty() {
            return 0.0;
        }
        self.pairs.iter().map(|p| p.distance).sum::<f64>() / self.pairs.len() as f64
    }

    pub fn max_distance(&self) -> f64 {
        self.pairs.iter().map(|p| p.distance).fold(0.0, f64::max)
    }

    /// Fraction of long-lived exact eigenvalues matched within `tol`.
    pub fn fraction_within(&self, tol: f64) -> f64 {
        let total = self.long_lived();
        if total == 0 {
            return 1.0;
        }
        self.pairs.iter().filter(|p| p.distance <= tol).count() as f64 / total as f64
    }
}

/// Minimum-total-distance assignment of the exact eigenvalues with
/// `|z| ≥ nu_c` to approximate eigenvalues.
pub fn match_spectra(exact: &[Complex64], approx: &[Complex64], nu_c: f64) -> Result<MatchReport> {
    if !(nu_c > 0.0 && nu_c < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "nu_c {nu_c} outside (0, 1)"
        )));
    }
    let rows: Vec<usize> = (0..exact.len())
        .filter(|&i| exact[i].norm() >= nu_c)
        .collect();
    let cols: Vec<usize> = (0..approx.len()).collect();
    let mut pairs = Vec::new();
    if !rows.is_empty() && !cols.is_empty() {
        let transpose = rows.len() > cols.len();
        let (a, b) = if transpose {
            (&cols, &rows)
        } else {
            (&rows, &cols)
        };
        let cost = |i: usize, j: usize| {
            let (e, x) = if transpose {
                (b[j], a[i])
            } else {
                (a[i], b[j])
            };
            (exact[e] - approx[x]).norm()
        };
        for (i, j) in hungarian(a.len(), b.len(), cost) {
            let (e, x) = if transpose {
                (b[j], a[i])
            } else {
                (a[i], b[j])
            };
            pairs.push(MatchedPair {
                exact: e,
                approx: x,
                distance: (exact[e] - approx[x]).norm(),
            });
        }
    }
    pairs.sort_by(|p, q| {
        p.distance
            .total_cmp(&q.distance)
            .then(p.exact.cmp(&q.exact))
    });
    let unmatched_exact = rows
        .iter()
        .copied()
        .filter(|e| !pairs.iter().any(|p| p.exact == *e))
        .collect();
    let unmatched_approx = cols
        .iter()
        .copied()
        .filter(|x| !pairs.iter().any(|p| p.approx == *x))
        .collect();
    Ok(MatchReport {
        pairs,
        unmatched_exact,
        unmatched_approx,
        cutoff: nu_c,
    })
}

/// Rectangular assignment problem with `n ≤ m`: every row gets a distinct
/// column minimizing the total cost (shortest augmenting paths with potentials).
fn hungarian(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    debug_assert!(n <= m);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::enumerate_baker_orbits;
    use crate::scar::build_scar_basis;
    use crate::torus::{closed_propagator, open_map, MapKind, OpeningStrip, TorusSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn anchors() {
        let strip = OpeningStrip::middle_third();
        let baker = exact_eigenvalues(&open_map(MapKind::Baker, 243, &strip).unwrap()).unwrap();
        assert!(baker.iter().any(|z| (z.norm() - 0.895).abs() <= 0.005));
        let cat = exact_eigenvalues(&open_map(MapKind::Cat, 100, &strip).unwrap()).unwrap();
        assert!(cat.iter().any(|z| (z.norm() - 0.722).abs() <= 0.005));
    }

    #[test]
    fn closed_spectrum_is_unimodular() {
        let spec = TorusSpec::antiperiodic(81).unwrap();
        let u = closed_propagator(MapKind::Baker, &spec).unwrap();
        for z in exact_eigenvalues(&u).unwrap() {
            assert!((z.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_set_invariants() {
        for (kind, n) in [(MapKind::Baker, 81), (MapKind::Cat, 60)] {
            let u = open_map(kind, n, &OpeningStrip::middle_third()).unwrap();
            let set = exact_resonances(&u).unwrap();
            assert_eq!(set.len(), n);
            let unorm = linalg::frobenius_norm(u.matrix()).max(1.0);
            for w in set.values().windows(2) {
                assert_ne!(spectral_order(&w[0], &w[1]), Ordering::Greater);
            }
            assert!(set.values().iter().all(|z| z.norm() < 1.0));
            assert!(set.residuals().iter().all(|&r| r <= 1e-8 * unorm));
            assert!(set.defective().is_empty());
            assert!(set.biorthogonality_defect() < 1e-8);
            let simple = set.simple();
            assert!((0..set.count_above(0.5)).all(|i| simple.contains(&i)));
            // opened positions share the exact eigenvalue 0
            assert!(!simple.contains(&(n - 1)));
            for j in 0..n {
                let (r, l) = (set.right_vector(j), set.left_vector(j));
                assert!((norm(&r) - norm(&l)).abs() < 1e-8 * norm(&r));
            }
        }
    }

    #[test]
    fn left_vectors_are_adjoint_right_vectors() {
        let u = open_map(MapKind::Baker, 27, &OpeningStrip::middle_third()).unwrap();
        let set = exact_resonances(&u).unwrap();
        let ud = u.matrix().adjoint().to_owned();
        for j in 0..set.len() {
            let z = set.values()[j];
            if z.norm() < 1e-6 {
                continue;
            }
            let l = set.left_vector(j);
            let res: f64 = linalg::matvec(&ud, &l)
                .iter()
                .zip(&l)
                .map(|(a, b)| (a - z.conj() * b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-8 * norm(&l), "{j}: {res}");
        }
    }

    #[test]
    fn perfect_pair_gives_one_by_one_problem() {
        let u = open_map(MapKind::Baker, 27, &OpeningStrip::middle_third()).unwrap();
        let set = exact_resonances(&u).unwrap();
        let r = Mat::from_fn(27, 1, |i, _| set.right()[(i, 0)]);
        let l = Mat::from_fn(27, 1, |i, _| set.left()[(i, 0)]);
        let basis = ScarBasis::from_columns(*u.spec(), r, l).unwrap();
        let prob = reduced_problem(&basis, &u, 1e-8).unwrap();
        assert!((prob.h[(0, 0)] - set.values()[0]).norm() < 1e-12);
        assert!((prob.s[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn exact_eigenpairs_are_recovered() {
        let u = open_map(MapKind::Baker, 81, &OpeningStrip::middle_third()).unwrap();
        let set = exact_resonances(&u).unwrap();
        let r_count = 12;
        let r = Mat::from_fn(81, r_count, |i, j| set.right()[(i, j)]);
        let l = Mat::from_fn(81, r_count, |i, j| set.left()[(i, j)]);
        let basis = ScarBasis::from_columns(*u.spec(), r, l).unwrap();
        let prob = reduced_problem(&basis, &u, 1e-8).unwrap();
        let sol = solve_generalized(&prob).unwrap();
        assert_eq!(sol.rank, r_count);
        let mut got = sol.values.clone();
        got.sort_by(spectral_order);
        for (a, b) in got.iter().zip(&set.values()[..r_count]) {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn identity_overlap_reduces_to_standard_problem() {
        let h = Mat::from_fn(3, 3, |i, j| {
            c((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64) * 0.05)
        });
        let prob = ReducedProblem {
            h: h.clone(),
            s: Mat::identity(3, 3),
            svd_tol: 1e-8,
        };
        let mut got = solve_generalized(&prob).unwrap().values;
        let mut want = linalg::eigen(&h, false).unwrap().values;
        got.sort_by(spectral_order);
        want.sort_by(spectral_order);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_overlap() {
        // S of rank 3 in 5 dimensions
        let b = Mat::from_fn(5, 3, |i, j| {
            c(((i * 3 + j * 5) % 7) as f64 - 3.0, (i + j) as f64 * 0.3)
        });
        let s = &b * b.adjoint();
        let h = Mat::from_fn(5, 5, |i, j| c(((i + j) % 4) as f64 * 0.2, 0.1 * i as f64));
        let prob = ReducedProblem {
            h,
            s,
            svd_tol: 1e-8,
        };
        let sol = solve_generalized(&prob).unwrap();
        assert_eq!(sol.rank, 3);
        assert_eq!(sol.values.len(), 3);
        let zero = ReducedProblem {
            h: Mat::zeros(2, 2),
            s: Mat::zeros(2, 2),
            svd_tol: 1e-8,
        };
        assert!(matches!(solve_generalized(&zero), Err(Error::RankZero)));
    }

    #[test]
    fn baker_81_overlap_is_ill_conditioned_and_rank_monotone() {
        let strip = OpeningStrip::middle_third();
        let u = open_map(MapKind::Baker, 81, &strip).unwrap();
        let orbits = enumerate_baker_orbits(5, &strip).unwrap();
        let basis = build_scar_basis(&orbits, 51, &u, 4).unwrap();
        let prob = reduced_problem(&basis, &u, 1e-8).unwrap();
        assert_eq!((prob.h.nrows(), prob.s.ncols()), (51, 51));
        for i in 0..51 {
            assert!((prob.s[(i, i)] - c(1.0, 0.0)).norm() < 1e-10);
        }
        let sv = linalg::singular_values(&prob.s).unwrap();
        // measured spread is about 4e3 for this construction
        assert!(sv[0] / sv[50] >= 1e3, "spread {:e}", sv[0] / sv[50]);
        let mut last = usize::MAX;
        for tol in [1e-14, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2] {
            let mut p = prob.clone();
            p.svd_tol = tol;
            let r = solve_generalized(&p).unwrap().rank;
            assert!(r <= last);
            last = r;
        }
    }

    #[test]
    fn mismatched_spec() {
        let strip = OpeningStrip::middle_third();
        let u81 = open_map(MapKind::Baker, 81, &strip).unwrap();
        let u27 = open_map(MapKind::Baker, 27, &strip).unwrap();
        let orbits = enumerate_baker_orbits(3, &strip).unwrap();
        let basis = build_scar_basis(&orbits, 5, &u81, 3).unwrap();
        assert!(matches!(
            reduced_problem(&basis, &u27, 1e-8),
            Err(Error::SpecMismatch {
                expected: 27,
                actual: 81
            })
        ));
    }

    #[test]
    fn matching_examples() {
        let exact = [c(0.9, 0.0), c(0.0, 0.1)];
        let report = match_spectra(&exact, &[c(0.89, 0.0)], 0.5).unwrap();
        assert_eq!(report.pairs.len(), 1);
        assert!((report.pairs[0].distance - 0.01).abs() < 1e-12);
        assert!(report.unmatched_exact.is_empty() && report.unmatched_approx.is_empty());

        let same = [c(0.9, 0.1), c(-0.6, 0.2), c(0.1, 0.7)];
        let report = match_spectra(&same, &same, 0.5).unwrap();
        assert!(report
            .pairs
            .iter()
            .all(|p| p.distance == 0.0 && p.exact == p.approx));
        assert!(report.unmatched_exact.is_empty() && report.unmatched_approx.is_empty());
        assert!(match_spectra(&same, &same, 1.0).is_err());
    }

    #[test]
    fn assignment_beats_greedy() {
        // closest-pair-first would take 0.88 ~ 0.87 and leave 0.80 ~ 0.99 (total 0.20)
        let exact = [c(0.80, 0.0), c(0.88, 0.0)];
        let approx = [c(0.87, 0.0), c(0.99, 0.0)];
        let report = match_spectra(&exact, &approx, 0.5).unwrap();
        let total: f64 = report.pairs.iter().map(|p| p.distance).sum();
        assert!((total - 0.18).abs() < 1e-12);
    }

    #[test]
    fn more_exact_than_approx() {
        let exact = [c(0.9, 0.0), c(0.7, 0.0), c(0.6, 0.0)];
        let approx = [c(0.69, 0.0)];
        let report = match_spectra(&exact, &approx, 0.5).unwrap();
        assert_eq!(
            report.pairs,
            vec![MatchedPair {
                exact: 1,
                approx: 0,
                distance: (0.7f64 - 0.69).abs()
            }]
        );
        assert_eq!(report.unmatched_exact, vec![0, 2]);
    }
}
