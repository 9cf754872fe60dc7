//! Classical tri-baker and cat dynamics on the unit torus.

mod dimension;
mod orbits;

pub(crate) use dimension::least_squares;
pub use dimension::{box_counting_dimension, box_counts, dimension_from_counts, BoxCount};
pub use orbits::{
    enumerate_baker_orbits, enumerate_cat_orbits, enumerate_orbits, orbit_actions, OrbitPoint,
    OrbitRecord, PeriodicOrbit, Rational, StepSymbol,
};

use serde::{Deserialize, Serialize};

use crate::torus::{MapKind, OpeningStrip};

/// A point of the unit torus, both coordinates reduced into `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Self {
        Self {
            q: reduce(q),
            p: reduce(p),
        }
    }

    /// Distance on the torus (minimum image).
    pub fn torus_distance(&self, other: &PhasePoint) -> f64 {
        let dq = wrap(self.q - other.q);
        let dp = wrap(self.p - other.p);
        (dq * dq + dp * dp).sqrt()
    }
}

fn reduce(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn wrap(d: f64) -> f64 {
    d - d.round()
}

/// Cat matrix `C = [[2,1],[3,2]]`.
pub const CAT_MATRIX: [[i64; 2]; 2] = [[2, 1], [3, 2]];

/// Classical map description: kind plus derived hyperbolic data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    kind: MapKind,
}

impl MapSpec {
    pub fn new(kind: MapKind) -> Self {
        Self { kind }
    }

    pub fn baker() -> Self {
        Self::new(MapKind::Baker)
    }

    pub fn cat() -> Self {
        Self::new(MapKind::Cat)
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn cat_matrix(&self) -> [[i64; 2]; 2] {
        CAT_MATRIX
    }

    /// `ln 3` for the baker, `ln(2 + √3)` for the cat.
    pub fn lyapunov(&self) -> f64 {
        match self.kind {
            MapKind::Baker => 3f64.ln(),
            MapKind::Cat => (2.0 + 3f64.sqrt()).ln(),
        }
    }

    /// Unstable direction (unnormalized).
    pub fn unstable_direction(&self) -> (f64, f64) {
        match self.kind {
            MapKind::Baker => (1.0, 0.0),
            MapKind::Cat => (1.0, 3f64.sqrt()),
        }
    }

    /// Stable direction (unnormalized).
    pub fn stable_direction(&self) -> (f64, f64) {
        match self.kind {
            MapKind::Baker => (0.0, 1.0),
            MapKind::Cat => (1.0, -(3f64.sqrt())),
        }
    }

    /// Phase (in cycles) that a minimal coherent state picks up per step from
    /// the linearized dynamics, on top of the classical action.
    ///
    /// For the baker the squeezed image overlaps the target coherent state with
    /// a real positive amplitude; for the cat the overlap is `sqrt((2+i)/5)`.
    pub fn metaplectic_phase(&self) -> f64 {
        match self.kind {
            MapKind::Baker => 0.0,
            MapKind::Cat => 0.5f64.atan() / (4.0 * std::f64::consts::PI),
        }
    }

    pub fn step(&self, x: PhasePoint) -> PhasePoint {
        match self.kind {
            MapKind::Baker => baker_step(x).0,
            MapKind::Cat => cat_step(x).0,
        }
    }

    pub fn inverse_step(&self, x: PhasePoint) -> PhasePoint {
        match self.kind {
            MapKind::Baker => baker_inverse_step(x),
            MapKind::Cat => cat_inverse_step(x),
        }
    }

    /// Mixed generating function of one step.
    ///
    /// Baker branch `ε`: `F(q, p') = 3 q p' − ε (q + p')` with `p = ∂F/∂q`,
    /// `q' = ∂F/∂p'`. Cat: `F(q, q') = q² − q q' + q'²` on the unfolded plane
    /// with `p = −∂F/∂q`, `p' = ∂F/∂q'`. `branch` is ignored for the cat.
    pub fn generating_function(&self, first: f64, second: f64, branch: u8) -> f64 {
        match self.kind {
            MapKind::Baker => {
                let e = branch as f64;
                3.0 * first * second - e * (first + second)
            }
            MapKind::Cat => first * first - first * second + second * second,
        }
    }
}

/// One tri-baker step and its branch index `ε = ⌊3q⌋`.
pub fn baker_step(x: PhasePoint) -> (PhasePoint, u8) {
    let branch = ((3.0 * x.q).floor() as i64).clamp(0, 2) as u8;
    let e = branch as f64;
    (PhasePoint::new(3.0 * x.q - e, (x.p + e) / 3.0), branch)
}

pub fn baker_inverse_step(x: PhasePoint) -> PhasePoint {
    let e = ((3.0 * x.p).floor() as i64).clamp(0, 2) as f64;
    PhasePoint::new((x.q + e) / 3.0, 3.0 * x.p - e)
}

/// One cat step `C x − (m, n)` and the integers `(m, n)` removed by the reduction.
pub fn cat_step(x: PhasePoint) -> (PhasePoint, (i64, i64)) {
    let [[a, b], [c, d]] = CAT_MATRIX;
    let q = a as f64 * x.q + b as f64 * x.p;
    let p = c as f64 * x.q + d as f64 * x.p;
    let (m, n) = (q.floor(), p.floor());
    (
        PhasePoint {
            q: reduce(q - m),
            p: reduce(p - n),
        },
        (m as i64, n as i64),
    )
}

pub fn cat_inverse_step(x: PhasePoint) -> PhasePoint {
    PhasePoint::new(2.0 * x.q - x.p, -3.0 * x.q + 2.0 * x.p)
}

/// True when the trajectory of `x` avoids the strip for `forward` steps
/// (times `0..forward`) and `backward` inverse steps (times `-1..=-backward`).
pub fn survives(
    map: &MapSpec,
    strip: &OpeningStrip,
    x: PhasePoint,
    forward: u32,
    backward: u32,
) -> bool {
    let mut y = x;
    for _ in 0..forward {
        if strip.contains(y.q) {
            return false;
        }
        y = map.step(y);
    }
    let mut y = x;
    for _ in 0..backward {
        y = map.inverse_step(y);
        if strip.contains(y.q) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: PhasePoint, q: f64, p: f64) -> bool {
        (a.q - q).abs() < 1e-15 && (a.p - p).abs() < 1e-15
    }

    #[test]
    fn baker_step_examples() {
        let (x, e) = baker_step(PhasePoint::new(0.0, 0.0));
        assert!(close(x, 0.0, 0.0) && e == 0);
        let (x, e) = baker_step(PhasePoint::new(0.25, 0.75));
        assert!(close(x, 0.75, 0.25) && e == 0);
        let (x, e) = baker_step(PhasePoint::new(0.5, 0.5));
        assert!(close(x, 0.5, 0.5) && e == 1);
    }

    #[test]
    fn cat_step_examples() {
        assert_eq!(
            cat_step(PhasePoint::new(0.0, 0.0)),
            (PhasePoint::new(0.0, 0.0), (0, 0))
        );
        let (x, w) = cat_step(PhasePoint::new(0.5, 0.5));
        assert!(close(x, 0.5, 0.5));
        assert_eq!(w, (1, 2));
        let (x, w) = cat_step(PhasePoint::new(0.1, 0.2));
        assert!((x.q - 0.4).abs() < 1e-12 && (x.p - 0.7).abs() < 1e-12);
        assert_eq!(w, (0, 0));
    }

    #[test]
    fn inverse_steps_undo_steps() {
        for map in [MapSpec::baker(), MapSpec::cat()] {
            for i in 0..50 {
                let x = PhasePoint::new(0.013 + 0.0191 * i as f64, 0.977 - 0.0173 * i as f64);
                let y = map.inverse_step(map.step(x));
                assert!(x.torus_distance(&y) < 1e-12, "{map:?} {x:?} {y:?}");
            }
        }
    }

    #[test]
    fn map_spec_invariants() {
        let [[a, b], [c, d]] = CAT_MATRIX;
        assert!(a + d > 2);
        assert_eq!(a * d - b * c, 1);
        assert!((MapSpec::baker().lyapunov() - 3f64.ln()).abs() < 1e-14);
        assert!((MapSpec::cat().lyapunov() - (2.0 + 3f64.sqrt()).ln()).abs() < 1e-14);
        // u and s are eigenvectors of C with eigenvalues 2 ± √3
        let (uq, up) = MapSpec::cat().unstable_direction();
        let lam = 2.0 + 3f64.sqrt();
        assert!(((2.0 * uq + up) - lam * uq).abs() < 1e-12);
        assert!(((3.0 * uq + 2.0 * up) - lam * up).abs() < 1e-12);
        let (sq, sp) = MapSpec::cat().stable_direction();
        assert!(((2.0 * sq + sp) - sq / lam).abs() < 1e-12);
    }

    #[test]
    fn generating_function_derivatives() {
        // both generating functions are quadratic, so central differences are exact up to rounding
        let h = 1e-3;
        let baker = MapSpec::baker();
        let cat = MapSpec::cat();
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for branch in 0..3u8 {
            for _ in 0..100 {
                let q = (branch as f64 + 0.02 + 0.96 * next()) / 3.0;
                let p = 0.02 + 0.96 * next();
                let (y, e) = baker_step(PhasePoint::new(q, p));
                assert_eq!(e, branch);
                let f = |a: f64, b: f64| baker.generating_function(a, b, branch);
                let dq = (f(q + h, y.p) - f(q - h, y.p)) / (2.0 * h);
                let dp = (f(q, y.p + h) - f(q, y.p - h)) / (2.0 * h);
                assert!((dq - p).abs() < 1e-9);
                assert!((dp - y.q).abs() < 1e-9);
            }
        }
        for _ in 0..100 {
            let (q, p) = (next(), next());
            let q1 = 2.0 * q + p;
            let p1 = 3.0 * q + 2.0 * p;
            let f = |a: f64, b: f64| cat.generating_function(a, b, 0);
            let dq = (f(q + h, q1) - f(q - h, q1)) / (2.0 * h);
            let dq1 = (f(q, q1 + h) - f(q, q1 - h)) / (2.0 * h);
            assert!((-dq - p).abs() < 1e-9);
            assert!((dq1 - p1).abs() < 1e-9);
        }
    }
}
