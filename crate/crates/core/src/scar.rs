//! Coherent states, periodic-orbit modes and right/left scar functions.
//!
//! A mode superposes the coherent states sitting on the `L` points of an
//! orbit with Bohr–Sommerfeld phases, so that the closed map sends it to
//! itself up to the factor `e^{2πi A}` with `A = (N S_γ + k)/L`. Scar
//! functions spread a mode along the invariant manifolds by propagating it
//! under the open map with a cosine-tapered filter of length `τ`:
//!
//! ```text
//! |ψ^R> ∝ Σ_{t=0}^{τ} cos(πt/2τ) e^{-2πi A t} Ũ^t |φ>
//! <ψ^L| ∝ Σ_{t=0}^{τ} cos(πt/2τ) e^{-2πi A t} <φ| Ũ^t
//! ```
//!
//! Left functions are stored as kets, `<ψ^L|x> = left† x`.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::{enumerate_orbits, MapSpec, PeriodicOrbit, PhasePoint, Rational};
use crate::linalg::{self, inner, ZERO};
use crate::torus::{OpenMapOperator, TorusSpec};
use crate::{ComplexMatrix, Error, Result};

/// Periodic images kept on each side when wrapping the Gaussian around the torus.
const IMAGES: i64 = 4;
/// Gaussian tails below `e^{-TAIL}` of the peak are dropped.
const TAIL: f64 = 42.0;

#[derive(Debug, Clone)]
pub struct CoherentState {
    pub spec: TorusSpec,
    pub center: PhasePoint,
    pub vector: Vec<Complex64>,
}

/// Unnormalized periodized Gaussian of width `1/(2πN)` centred at `(q0, p0)`:
///
/// `ψ_j = Σ_ν exp(−πN d² + 2πi N p0 d − 2πi ν χ_p)`, `d = x_j − q0 + ν`.
///
/// The state is real and positive at its centre for `p0 = 0`.
pub(crate) fn coherent_amplitudes(spec: &TorusSpec, q0: f64, p0: f64) -> Vec<Complex64> {
    let n = spec.dim();
    let nf = n as f64;
    let reach = (TAIL / (PI * nf)).sqrt();
    let mut out = vec![ZERO; n];
    for nu in -IMAGES..=IMAGES {
        let shift = q0 - nu as f64;
        // grid indices with |x_j - shift| <= reach
        let lo = ((shift - reach) * nf - spec.chi_q()).ceil().max(0.0);
        let hi = ((shift + reach) * nf - spec.chi_q()).floor().min(nf - 1.0);
        if lo > hi {
            continue;
        }
        for j in lo as usize..=hi as usize {
            let d = spec.position(j) - shift;
            let phase = (nf * p0 * d - nu as f64 * spec.chi_p()).rem_euclid(1.0);
            out[j] += Complex64::from_polar((-PI * nf * d * d).exp(), 2.0 * PI * phase);
        }
    }
    out
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let nrm = linalg::norm(v);
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

pub fn coherent_state(spec: &TorusSpec, center: PhasePoint) -> CoherentState {
    let mut vector = coherent_amplitudes(spec, center.q, center.p);
    normalize(&mut vector);
    CoherentState {
        spec: *spec,
        center,
        vector,
    }
}

/// Periodic-orbit mode `|φ_γ^k>`.
#[derive(Debug, Clone)]
pub struct OrbitMode {
    pub label: String,
    pub period: usize,
    pub k: usize,
    /// `A = (N S_γ + k)/L`.
    pub a: f64,
    /// `A mod 1`, computed exactly.
    pub a_frac: f64,
    /// Smallest distance between orbit points, for the near-orthogonality band.
    pub min_separation: f64,
    pub vector: Vec<Complex64>,
}

impl OrbitMode {
    /// Allowed deviation of the norm from one: `10 e^{−πN d_min²}`.
    pub fn norm_tolerance(&self) -> f64 {
        let n = self.vector.len() as f64;
        // round-off floor for well-separated points
        if self.min_separation.is_infinite() {
            1e-12
        } else {
            (10.0 * (-PI * n * self.min_separation.powi(2)).exp()).max(1e-12)
        }
    }
}

pub fn orbit_mode(orbit: &PeriodicOrbit, k: usize, spec: &TorusSpec) -> Result<OrbitMode> {
    if k >= orbit.period() {
        return Err(Error::BadModeIndex {
            k,
            period: orbit.period(),
        });
    }
    let states = orbit_coherent_states(orbit, spec)?;
    Ok(mode_from_states(orbit, k as i64, spec, &states))
}

fn orbit_coherent_states(orbit: &PeriodicOrbit, spec: &TorusSpec) -> Result<Vec<Vec<Complex64>>> {
    if !orbit.has_actions() {
        return Err(Error::InvalidArgument(format!(
            "orbit {} has no actions",
            orbit.label()
        )));
    }
    Ok(orbit
        .points()
        .iter()
        .map(|&x| coherent_state(spec, x).vector)
        .collect())
}

/// Exact `A` for any integer `k`; `A(k + L) = A(k) + 1`.
fn mode_phase(orbit: &PeriodicOrbit, k: i64, n: usize) -> Rational {
    let len = orbit.period() as i128;
    (orbit.exact_total_action() * n as i128 + Rational::from(k as i128)) / len
}

pub(crate) fn mode_from_states(
    orbit: &PeriodicOrbit,
    k: i64,
    spec: &TorusSpec,
    states: &[Vec<Complex64>],
) -> OrbitMode {
    let n = spec.dim();
    let len = orbit.period();
    let a = mode_phase(orbit, k, n);
    let a_frac_exact = a - a.floor();
    let a_frac = to_f64(&a_frac_exact);
    let mut vector = vec![ZERO; n];
    let scale = 1.0 / (len as f64).sqrt();
    for (j, state) in states.iter().enumerate() {
        // j A mod 1 from the exact fraction, then subtract N θ_j mod 1
        let ja = to_f64(&{
            let x = a_frac_exact * j as i128;
            x - x.floor()
        });
        let phase = ja - orbit.scaled_partial_action(n, j);
        let c = Complex64::from_polar(scale, -2.0 * PI * phase);
        for (v, s) in vector.iter_mut().zip(state) {
            *v += c * s;
        }
    }
    OrbitMode {
        label: orbit.label().to_string(),
        period: len,
        k: k.rem_euclid(len as i64) as usize,
        a: to_f64(&a),
        a_frac,
        min_separation: orbit.min_pairwise_distance(),
        vector,
    }
}

fn to_f64(x: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap()
}

/// `τ = max(1, round(factor · ln N / λ))`.
pub fn ehrenfest_cutoff(spec: &TorusSpec, map: &MapSpec, factor: f64) -> Result<usize> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tau factor {factor} must be positive"
        )));
    }
    let t = factor * (spec.dim() as f64).ln() / map.lyapunov();
    Ok((t.round() as usize).max(1))
}

/// Right/left scar functions of one `(orbit, k)` with `<L|R> = 1` and equal norms.
#[derive(Debug, Clone)]
pub struct ScarPair {
    pub label: String,
    pub k: usize,
    pub a: f64,
    pub tau: usize,
    pub right: Vec<Complex64>,
    pub left: Vec<Complex64>,
}

/// Metadata of one basis column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScarLabel {
    pub orbit: String,
    pub period: usize,
    pub k: usize,
    pub a: f64,
}

/// Column-stacked scar pairs sharing one torus.
#[derive(Debug, Clone)]
pub struct ScarBasis {
    spec: TorusSpec,
    tau: usize,
    labels: Vec<ScarLabel>,
    right: ComplexMatrix,
    left: ComplexMatrix,
}

impl ScarBasis {
    /// Basis from arbitrary right/left columns, normalized pairwise like scar functions.
    pub fn from_columns(
        spec: TorusSpec,
        right: ComplexMatrix,
        left: ComplexMatrix,
    ) -> Result<Self> {
        check_rows(&spec, &right)?;
        check_rows(&spec, &left)?;
        if right.ncols() != left.ncols() {
            return Err(Error::SpecMismatch {
                expected: right.ncols(),
                actual: left.ncols(),
            });
        }
        let labels = (0..right.ncols())
            .map(|i| ScarLabel {
                orbit: format!("column-{i}"),
                period: 1,
                k: 0,
                a: 0.0,
            })
            .collect();
        let mut basis = Self {
            spec,
            tau: 0,
            labels,
            right,
            left,
        };
        for i in 0..basis.len() {
            basis.balance_column(i).map_err(|_| Error::DegeneratePair {
                label: format!("column-{i}"),
                k: 0,
            })?;
        }
        Ok(basis)
    }

    /// Reassembles a basis from stored parts. Columns must already be balanced.
    pub fn from_parts(
        spec: TorusSpec,
        tau: usize,
        labels: Vec<ScarLabel>,
        right: ComplexMatrix,
        left: ComplexMatrix,
    ) -> Result<Self> {
        check_rows(&spec, &right)?;
        check_rows(&spec, &left)?;
        for m in [&right, &left] {
            if m.ncols() != labels.len() {
                return Err(Error::SpecMismatch {
                    expected: labels.len(),
                    actual: m.ncols(),
                });
            }
        }
        for (i, l) in labels.iter().enumerate() {
            let c = inner(left.col_as_slice(i), right.col_as_slice(i));
            if (c - Complex64::new(1.0, 0.0)).norm() > 1e-8 {
                return Err(Error::DegeneratePair {
                    label: l.orbit.clone(),
                    k: l.k,
                });
            }
        }
        Ok(Self {
            spec,
            tau,
            labels,
            right,
            left,
        })
    }

    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[ScarLabel] {
        &self.labels
    }

    pub fn right(&self) -> &ComplexMatrix {
        &self.right
    }

    pub fn left(&self) -> &ComplexMatrix {
        &self.left
    }

    pub fn pair(&self, i: usize) -> ScarPair {
        let l = &self.labels[i];
        ScarPair {
            label: l.orbit.clone(),
            k: l.k,
            a: l.a,
            tau: self.tau,
            right: linalg::column(&self.right, i),
            left: linalg::column(&self.left, i),
        }
    }

    /// Rescales column `i` so that `<L|R> = 1` and `|R| = |L|`; the phase goes on the right.
    fn balance_column(&mut self, i: usize) -> std::result::Result<(), ()> {
        let c = inner(self.left.col_as_slice(i), self.right.col_as_slice(i));
        let nr = linalg::norm(self.right.col_as_slice(i));
        let nl = linalg::norm(self.left.col_as_slice(i));
        if !(c.norm() >= 1e-12 * nr * nl) || nr == 0.0 {
            return Err(());
        }
        let right_scale = Complex64::from_polar((nl / (nr * c.norm())).sqrt(), -c.arg());
        let left_scale = (nr / (nl * c.norm())).sqrt();
        self.right
            .col_as_slice_mut(i)
            .iter_mut()
            .for_each(|x| *x *= right_scale);
        self.left
            .col_as_slice_mut(i)
            .iter_mut()
            .for_each(|x| *x *= left_scale);
        Ok(())
    }
}

fn check_rows(spec: &TorusSpec, m: &ComplexMatrix) -> Result<()> {
    if m.nrows() != spec.dim() {
        return Err(Error::SpecMismatch {
            expected: spec.dim(),
            actual: m.nrows(),
        });
    }
    Ok(())
}

/// Propagates all mode columns at once and returns the balanced basis.
fn propagate_modes(modes: &[OrbitMode], u_open: &OpenMapOperator, tau: usize) -> Result<ScarBasis> {
    let spec = *u_open.spec();
    let n = spec.dim();
    if tau == 0 {
        return Err(Error::InvalidArgument("tau must be at least 1".into()));
    }
    if !u_open.is_open() {
        return Err(Error::InvalidArgument(
            "scar functions need the open propagator".into(),
        ));
    }
    for m in modes {
        if m.vector.len() != n {
            return Err(Error::SpecMismatch {
                expected: n,
                actual: m.vector.len(),
            });
        }
    }
    let cols = modes.len();
    let phi = Mat::from_fn(n, cols, |i, b| modes[b].vector[i]);
    let u = u_open.matrix();
    let mut right = Mat::<Complex64>::zeros(n, cols);
    let mut left = Mat::<Complex64>::zeros(n, cols);
    let mut fwd = phi.clone();
    let mut bwd = phi;
    // the t = τ term carries weight cos(π/2) = 0
    for t in 0..tau {
        if t > 0 {
            fwd = u * &fwd;
            bwd = u.adjoint() * &bwd;
        }
        let taper = (PI * t as f64 / (2.0 * tau as f64)).cos();
        for (b, mode) in modes.iter().enumerate() {
            let turn = (mode.a_frac * t as f64).rem_euclid(1.0);
            let w = Complex64::from_polar(taper, -2.0 * PI * turn);
            let wl = w.conj();
            let (f, r) = (fwd.col_as_slice(b), right.col_as_slice_mut(b));
            r.iter_mut().zip(f).for_each(|(r, f)| *r += w * f);
            let (g, l) = (bwd.col_as_slice(b), left.col_as_slice_mut(b));
            l.iter_mut().zip(g).for_each(|(l, g)| *l += wl * g);
        }
    }
    let labels = modes
        .iter()
        .map(|m| ScarLabel {
            orbit: m.label.clone(),
            period: m.period,
            k: m.k,
            a: m.a,
        })
        .collect();
    let mut basis = ScarBasis {
        spec,
        tau,
        labels,
        right,
        left,
    };
    for (i, m) in modes.iter().enumerate() {
        basis.balance_column(i).map_err(|_| Error::DegeneratePair {
            label: m.label.clone(),
            k: m.k,
        })?;
    }
    Ok(basis)
}

/// Right and left scar functions of one mode.
pub fn scar_pair(mode: &OrbitMode, u_open: &OpenMapOperator, tau: usize) -> Result<ScarPair> {
    Ok(propagate_modes(std::slice::from_ref(mode), u_open, tau)?.pair(0))
}

/// Scar basis of exactly `n_s` pairs: orbits in (period, label) order, every
/// `k` of each orbit, truncated at `n_s`. Orbits identified with an earlier
/// one are skipped.
pub fn build_scar_basis(
    orbits: &[PeriodicOrbit],
    n_s: usize,
    u_open: &OpenMapOperator,
    tau: usize,
) -> Result<ScarBasis> {
    let spec = *u_open.spec();
    if n_s == 0 {
        return Err(Error::InvalidArgument("N_s must be positive".into()));
    }
    let mut ordered: Vec<&PeriodicOrbit> = orbits
        .iter()
        .filter(|o| o.identified_with().is_none())
        .collect();
    ordered.sort_by(|a, b| (a.period(), a.label()).cmp(&(b.period(), b.label())));
    let available: usize = ordered.iter().map(|o| o.period()).sum();
    if available < n_s {
        return Err(Error::InsufficientOrbits {
            available,
            required: n_s,
            l_max: ordered.iter().map(|o| o.period()).max().unwrap_or(0),
        });
    }
    let mut modes = Vec::with_capacity(n_s);
    'outer: for orbit in ordered {
        let states = orbit_coherent_states(orbit, &spec)?;
        for k in 0..orbit.period() {
            if modes.len() == n_s {
                break 'outer;
            }
            modes.push(mode_from_states(orbit, k as i64, &spec, &states));
        }
    }
    propagate_modes(&modes, u_open, tau)
}

/// Smallest `L_max` whose non-duplicate orbits provide at least `n_s` modes.
pub fn orbits_for_basis(
    map: &MapSpec,
    strip: &crate::torus::OpeningStrip,
    n_s: usize,
    l_cap: usize,
) -> Result<Vec<PeriodicOrbit>> {
    let mut last = 0;
    for l_max in 1..=l_cap {
        let orbits = enumerate_orbits(map, l_max, strip)?;
        last = orbits
            .iter()
            .filter(|o| o.identified_with().is_none())
            .map(|o| o.period())
            .sum();
        if last >= n_s {
            return Ok(orbits);
        }
    }
    Err(Error::InsufficientOrbits {
        available: last,
        required: n_s,
        l_max: l_cap,
    })
}

/// `round(c · N^{d/2})`.
pub fn auto_basis_size(n: usize, dimension: f64, c: f64) -> usize {
    (c * (n as f64).powf(dimension / 2.0)).round().max(1.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{enumerate_baker_orbits, enumerate_cat_orbits};
    use crate::linalg::{matvec, norm};
    use crate::torus::{baker_propagator, open_map, open_propagator, MapKind, OpeningStrip};

    fn strip() -> OpeningStrip {
        OpeningStrip::middle_third()
    }

    #[test]
    fn coherent_state_is_normalized_and_peaked() {
        let spec = TorusSpec::periodic(100).unwrap();
        let c = coherent_state(&spec, PhasePoint::new(0.2, 0.3));
        assert!((norm(&c.vector) - 1.0).abs() < 1e-12);
        let argmax = (0..100)
            .max_by(|&a, &b| c.vector[a].norm().partial_cmp(&c.vector[b].norm()).unwrap())
            .unwrap();
        let nearest = (0..100)
            .min_by(|&a, &b| {
                let da = (spec.position(a) - 0.2).abs();
                let db = (spec.position(b) - 0.2).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        assert_eq!(argmax, nearest);
    }

    #[test]
    fn coherent_state_is_torus_periodic() {
        for spec in [
            TorusSpec::periodic(60).unwrap(),
            TorusSpec::antiperiodic(60).unwrap(),
        ] {
            let a = coherent_state(&spec, PhasePoint { q: 0.37, p: 0.81 });
            let b = coherent_state(&spec, PhasePoint { q: 1.37, p: 0.81 });
            let ov = inner(&a.vector, &b.vector);
            assert!((ov.norm() - 1.0).abs() < 1e-12);
            let c = coherent_state(&spec, PhasePoint { q: 0.37, p: 1.81 });
            assert!((inner(&a.vector, &c.vector).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coherent_state_real_at_centre_for_zero_momentum() {
        let spec = TorusSpec::periodic(50).unwrap();
        let c = coherent_state(&spec, PhasePoint::new(0.4, 0.0));
        let j = 20; // position 0.4
        assert!(c.vector[j].im.abs() < 1e-14 && c.vector[j].re > 0.0);
    }

    #[test]
    fn coherent_state_follows_the_cat_action() {
        // <x'|U|x> ≈ K e^{2πiN S} with one constant K for every point
        let n = 120;
        let spec = TorusSpec::periodic(n).unwrap();
        let u = crate::torus::cat_propagator(&spec).unwrap();
        let map = MapSpec::cat();
        let expected = 2.0 * PI * map.metaplectic_phase();
        for (q, p) in [(0.1, 0.2), (0.43, 0.71), (0.82, 0.33)] {
            let x = PhasePoint::new(q, p);
            let (y, (m, nn)) = crate::classical::cat_step(x);
            let qbar = y.q + m as f64;
            let s = q * q - q * qbar + qbar * qbar - nn as f64 * y.q;
            let a = coherent_state(&spec, x).vector;
            let b = coherent_state(&spec, y).vector;
            let ov = inner(&b, &matvec(u.matrix(), &a));
            let rel = (ov * Complex64::from_polar(1.0, -2.0 * PI * n as f64 * s)).arg();
            assert!((rel - expected).abs() < 1e-6, "{rel} vs {expected}");
            assert!((ov.norm() - 5f64.powf(-0.25)).abs() < 1e-3);
        }
    }

    #[test]
    fn coherent_state_follows_the_baker_action() {
        let n = 243;
        let spec = TorusSpec::antiperiodic(n).unwrap();
        let u = baker_propagator(&spec).unwrap();
        for (q, p) in [(0.1, 0.2), (0.4, 0.7), (0.8, 0.3)] {
            let x = PhasePoint::new(q, p);
            let (y, e) = crate::classical::baker_step(x);
            let s = e as f64 * q;
            let a = coherent_state(&spec, x).vector;
            let b = coherent_state(&spec, y).vector;
            let ov = inner(&b, &matvec(u.matrix(), &a));
            let rel = (ov * Complex64::from_polar(1.0, -2.0 * PI * n as f64 * s)).arg();
            assert!(rel.abs() < 1e-6, "phase offset {rel}");
        }
    }

    #[test]
    fn fixed_point_mode_is_a_phased_coherent_state() {
        let spec = TorusSpec::antiperiodic(81).unwrap();
        let orbits = enumerate_baker_orbits(1, &strip()).unwrap();
        let mode = orbit_mode(&orbits[0], 0, &spec).unwrap();
        let c = coherent_state(&spec, orbits[0].points()[0]);
        assert!((inner(&c.vector, &mode.vector).norm() - 1.0).abs() < 1e-12);
        assert!(matches!(
            orbit_mode(&orbits[0], 1, &spec),
            Err(Error::BadModeIndex { k: 1, period: 1 })
        ));
    }

    #[test]
    fn mode_norm_band_and_phase() {
        let spec = TorusSpec::antiperiodic(81).unwrap();
        let orbits = enumerate_baker_orbits(2, &strip()).unwrap();
        let o = orbits.iter().find(|o| o.label() == "02").unwrap();
        let mode = orbit_mode(o, 0, &spec).unwrap();
        let delta = mode.norm_tolerance();
        assert!((norm(&mode.vector) - 1.0).abs() <= delta, "band {delta}");
        let expected_a = (81.0 * o.total_action() + 0.0) / 2.0;
        assert!((mode.a - expected_a).abs() < 1e-12);
    }

    #[test]
    fn mode_index_shift_by_period() {
        let spec = TorusSpec::antiperiodic(81).unwrap();
        let orbits = enumerate_baker_orbits(4, &strip()).unwrap();
        for o in orbits.iter().filter(|o| o.period() > 1) {
            let states = orbit_coherent_states(o, &spec).unwrap();
            for k in 0..o.period() as i64 {
                let m0 = mode_from_states(o, k, &spec, &states);
                let m1 = mode_from_states(o, k + o.period() as i64, &spec, &states);
                assert!((m1.a - m0.a - 1.0).abs() < 1e-9);
                assert_eq!(m0.vector, m1.vector);
            }
        }
    }

    #[test]
    fn closed_map_quasi_eigenmode() {
        let spec = TorusSpec::antiperiodic(243).unwrap();
        let u = baker_propagator(&spec).unwrap();
        let orbits = enumerate_baker_orbits(2, &strip()).unwrap();
        let o = orbits.iter().find(|o| o.label() == "02").unwrap();
        for k in 0..2 {
            let mode = orbit_mode(o, k, &spec).unwrap();
            let ev = inner(&mode.vector, &matvec(u.matrix(), &mode.vector));
            assert!(ev.norm() >= 0.7, "|<φ|U|φ>| = {}", ev.norm());
            // and the phase is the Bohr–Sommerfeld one
            let expected = Complex64::from_polar(1.0, 2.0 * PI * mode.a_frac);
            assert!((ev / ev.norm() - expected).norm() < 1e-6);
        }
    }

    #[test]
    fn ehrenfest_examples() {
        let baker = MapSpec::baker();
        let cat = MapSpec::cat();
        assert_eq!(
            ehrenfest_cutoff(&TorusSpec::antiperiodic(243).unwrap(), &baker, 1.0).unwrap(),
            5
        );
        assert_eq!(
            ehrenfest_cutoff(&TorusSpec::periodic(100).unwrap(), &cat, 1.0).unwrap(),
            3
        );
        assert_eq!(
            ehrenfest_cutoff(&TorusSpec::antiperiodic(3).unwrap(), &baker, 0.5).unwrap(),
            1
        );
        assert!(ehrenfest_cutoff(&TorusSpec::antiperiodic(3).unwrap(), &baker, 0.0).is_err());
    }

    #[test]
    fn tau_one_gives_the_mode_itself() {
        let u = open_map(MapKind::Baker, 81, &strip()).unwrap();
        let orbits = enumerate_baker_orbits(2, &strip()).unwrap();
        let mode = orbit_mode(&orbits[2], 1, u.spec()).unwrap();
        let pair = scar_pair(&mode, &u, 1).unwrap();
        let ov = inner(&mode.vector, &pair.right).norm() / (norm(&mode.vector) * norm(&pair.right));
        assert!((ov - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scar_pair_normalization() {
        let u = open_map(MapKind::Baker, 81, &strip()).unwrap();
        let orbits = enumerate_baker_orbits(4, &strip()).unwrap();
        let basis = build_scar_basis(&orbits, 21, &u, 4).unwrap();
        for i in 0..basis.len() {
            let p = basis.pair(i);
            assert!((inner(&p.left, &p.right) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert!((norm(&p.right) - norm(&p.left)).abs() < 1e-10);
        }
    }

    #[test]
    fn scar_pair_is_linear_in_the_mode() {
        let u = open_map(MapKind::Cat, 60, &strip()).unwrap();
        let orbits = enumerate_cat_orbits(3, &strip()).unwrap();
        let a = orbit_mode(&orbits[1], 0, u.spec()).unwrap();
        let mut b = a.clone();
        let factor = Complex64::new(0.3, -1.7);
        b.vector.iter_mut().for_each(|x| *x *= factor);
        let pa = propagate_raw(&a, &u, 3);
        let pb = propagate_raw(&b, &u, 3);
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x * factor - y).norm() < 1e-12);
        }
    }

    fn propagate_raw(mode: &OrbitMode, u: &OpenMapOperator, tau: usize) -> Vec<Complex64> {
        let mut acc = vec![ZERO; mode.vector.len()];
        let mut v = mode.vector.clone();
        for t in 0..tau {
            if t > 0 {
                v = matvec(u.matrix(), &v);
            }
            let w = Complex64::from_polar(
                (PI * t as f64 / (2.0 * tau as f64)).cos(),
                -2.0 * PI * mode.a_frac * t as f64,
            );
            acc.iter_mut().zip(&v).for_each(|(a, x)| *a += w * x);
        }
        acc
    }

    #[test]
    fn batched_right_scar_matches_direct_sum() {
        let u = open_map(MapKind::Baker, 81, &strip()).unwrap();
        let orbits = enumerate_baker_orbits(3, &strip()).unwrap();
        let mode = orbit_mode(&orbits[3], 2, u.spec()).unwrap();
        let pair = scar_pair(&mode, &u, 4).unwrap();
        let direct = propagate_raw(&mode, &u, 4);
        let ov = inner(&direct, &pair.right).norm() / (norm(&direct) * norm(&pair.right));
        assert!((ov - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_selection_rules() {
        let u = open_map(MapKind::Baker, 81, &strip()).unwrap();
        let orbits = enumerate_baker_orbits(5, &strip()).unwrap();
        let basis = build_scar_basis(&orbits, 51, &u, 4).unwrap();
        assert_eq!(basis.len(), 51);
        assert!(basis.labels().iter().all(|l| l.orbit != "2"));
        let err = build_scar_basis(&orbits, 52, &u, 4).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientOrbits {
                available: 51,
                required: 52,
                l_max: 5
            }
        ));

        // a single period-3 orbit provides k = 0, 1, 2
        let three: Vec<_> = enumerate_baker_orbits(3, &strip())
            .unwrap()
            .into_iter()
            .filter(|o| o.label() == "002")
            .collect();
        let b = build_scar_basis(&three, 3, &u, 4).unwrap();
        let ks: Vec<usize> = b.labels().iter().map(|l| l.k).collect();
        assert_eq!(ks, vec![0, 1, 2]);
    }

    #[test]
    fn stored_parts_round_trip() {
        let u = open_map(MapKind::Baker, 27, &strip()).unwrap();
        let orbits = enumerate_baker_orbits(3, &strip()).unwrap();
        let b = build_scar_basis(&orbits, 5, &u, 3).unwrap();
        let again = ScarBasis::from_parts(
            *b.spec(),
            b.tau(),
            b.labels().to_vec(),
            b.right().clone(),
            b.left().clone(),
        )
        .unwrap();
        assert_eq!(again.labels(), b.labels());
        assert_eq!(again.tau(), 3);
        assert!(ScarBasis::from_parts(
            *b.spec(),
            3,
            b.labels()[..4].to_vec(),
            b.right().clone(),
            b.left().clone()
        )
        .is_err());
        // an unbalanced column is refused
        let mut left = b.left().clone();
        left.col_as_slice_mut(0).iter_mut().for_each(|x| *x *= 2.0);
        assert!(matches!(
            ScarBasis::from_parts(*b.spec(), 3, b.labels().to_vec(), b.right().clone(), left),
            Err(Error::DegeneratePair { .. })
        ));
    }

    #[test]
    fn right_scars_avoid_the_opening() {
        let u = open_map(MapKind::Baker, 81, &strip()).unwrap();
        let orbits = enumerate_baker_orbits(4, &strip()).unwrap();
        let basis = build_scar_basis(&orbits, 21, &u, 4).unwrap();
        let res = (64, 64);
        for i in 0..basis.len() {
            let grid = crate::analysis::husimi(&basis.pair(i).right, u.spec(), res).unwrap();
            let inside = grid.mass_fraction(|q, _| strip().contains(q));
            assert!(inside <= 0.2, "pair {i}: {inside}");
        }
    }

    #[test]
    fn open_operator_required() {
        let spec = TorusSpec::antiperiodic(27).unwrap();
        let closed = baker_propagator(&spec).unwrap();
        let orbits = enumerate_baker_orbits(2, &strip()).unwrap();
        let mode = orbit_mode(&orbits[0], 0, &spec).unwrap();
        assert!(scar_pair(&mode, &closed, 2).is_err());
        let open = open_propagator(&closed, &strip()).unwrap();
        assert!(scar_pair(&mode, &open, 2).is_ok());
    }

    #[test]
    fn auto_size_rule() {
        let d = 2.0 * 2f64.ln() / 3f64.ln();
        assert_eq!(auto_basis_size(243, d, 4.0), 128);
    }
}
