//! Periodic orbits of the open maps, with points kept in exact rational arithmetic.
//!
//! Baker orbits are labelled by primitive ternary necklaces; the periodic
//! point of the string `ε_0 … ε_{L−1}` has `q_0 = Σ ε_j 3^{L−1−j} / (3^L − 1)`
//! and `p_0` built from the reversed string. Cat orbits are the rational
//! solutions of `(C^L − I) x ∈ Z²`, enumerated as coset representatives of
//! `Z² / (C^L − I) Z²` and iterated with exact integer arithmetic.

use std::collections::HashMap;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::{MapSpec, PhasePoint, CAT_MATRIX};
use crate::torus::{MapKind, OpeningStrip};
use crate::{Error, Result};

pub type Rational = Ratio<i128>;

/// Symbolic data of one step: the baker branch or the cat winding pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StepSymbol {
    Branch(u8),
    Winding(i64, i64),
}

/// Exact orbit point. Baker corner points keep their unreduced value `1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrbitPoint {
    pub q: Rational,
    pub p: Rational,
}

impl OrbitPoint {
    fn reduced(&self) -> OrbitPoint {
        OrbitPoint {
            q: frac(&self.q),
            p: frac(&self.p),
        }
    }

    fn to_phase_point(&self) -> PhasePoint {
        let r = self.reduced();
        PhasePoint::new(to_f64(&r.q), to_f64(&r.p))
    }
}

fn frac(x: &Rational) -> Rational {
    x - x.floor()
}

fn to_f64(x: &Rational) -> f64 {
    x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap()
}

fn rat(n: i128, d: i128) -> Rational {
    Ratio::new(n, d)
}

#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    kind: MapKind,
    label: String,
    exact: Vec<OrbitPoint>,
    points: Vec<PhasePoint>,
    symbols: Vec<StepSymbol>,
    exact_actions: Vec<Rational>,
    identified_with: Option<String>,
}

/// JSON form of an orbit.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitRecord {
    pub kind: MapKind,
    #[serde(rename = "L")]
    pub period: usize,
    pub label: String,
    pub points: Vec<[f64; 2]>,
    pub actions: Vec<f64>,
    pub total_action: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identified_with: Option<String>,
}

impl PeriodicOrbit {
    fn new(kind: MapKind, label: String, exact: Vec<OrbitPoint>, symbols: Vec<StepSymbol>) -> Self {
        let points = exact.iter().map(OrbitPoint::to_phase_point).collect();
        Self {
            kind,
            label,
            exact,
            points,
            symbols,
            exact_actions: Vec::new(),
            identified_with: None,
        }
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn period(&self) -> usize {
        self.points.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn exact_points(&self) -> &[OrbitPoint] {
        &self.exact
    }

    pub fn symbols(&self) -> &[StepSymbol] {
        &self.symbols
    }

    /// Label of an earlier orbit occupying the same torus points, if any.
    pub fn identified_with(&self) -> Option<&str> {
        self.identified_with.as_deref()
    }

    pub fn has_actions(&self) -> bool {
        self.exact_actions.len() == self.period()
    }

    pub fn exact_actions(&self) -> &[Rational] {
        &self.exact_actions
    }

    pub fn actions(&self) -> Vec<f64> {
        self.exact_actions.iter().map(to_f64).collect()
    }

    pub fn exact_total_action(&self) -> Rational {
        self.exact_actions
            .iter()
            .fold(Rational::zero(), |acc, s| acc + s)
    }

    pub fn total_action(&self) -> f64 {
        to_f64(&self.exact_total_action())
    }

    /// Fractional part of `N θ_j`, with `θ_j = Σ_{l<j} S_l`.
    pub fn scaled_partial_action(&self, n: usize, j: usize) -> f64 {
        let theta = self.exact_actions[..j]
            .iter()
            .fold(Rational::zero(), |acc, s| acc + s);
        to_f64(&frac(&(theta * n as i128)))
    }

    /// Fractional part of `N S_γ`.
    pub fn scaled_total_action(&self, n: usize) -> f64 {
        to_f64(&frac(&(self.exact_total_action() * n as i128)))
    }

    /// Smallest torus distance between two distinct orbit points (infinite for `L = 1`).
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min(a.torus_distance(b));
            }
        }
        best
    }

    pub fn record(&self) -> OrbitRecord {
        OrbitRecord {
            kind: self.kind,
            period: self.period(),
            label: self.label.clone(),
            points: self.points.iter().map(|x| [x.q, x.p]).collect(),
            actions: self.actions(),
            total_action: self.total_action(),
            identified_with: self.identified_with.clone(),
        }
    }
}

/// Fills per-step actions after checking the orbit exactly against the map.
///
/// `S_l` is the phase (in units of `2π N`) a coherent state acquires when
/// carried from point `l` to point `l+1`:
///
/// - baker: `S = q' p' − F(q, p')`, the Legendre transform of the mixed
///   generating function, which reduces to `ε q`;
/// - cat: `S = F(q, q̄') − n q'`, with `q̄' = q' + m` the unfolded image and
///   `(m, n)` the winding removed by the reduction.
pub fn orbit_actions(orbit: &PeriodicOrbit, map: &MapSpec) -> Result<PeriodicOrbit> {
    if orbit.kind != map.kind() {
        return Err(Error::InvalidArgument(format!(
            "orbit of a {} map passed with a {} map spec",
            orbit.kind.name(),
            map.kind().name()
        )));
    }
    let len = orbit.period();
    let inconsistent = |step| Error::InconsistentOrbit {
        label: orbit.label.clone(),
        step,
    };
    let mut actions = Vec::with_capacity(len);
    for l in 0..len {
        let x = &orbit.exact[l];
        let y = &orbit.exact[(l + 1) % len];
        let action = match (map.kind(), orbit.symbols[l]) {
            (MapKind::Baker, StepSymbol::Branch(e)) => {
                let e = Rational::from(e as i128);
                let three = Rational::from(3);
                if three * x.q - e != y.q || (x.p + e) / three != y.p {
                    return Err(inconsistent(l));
                }
                let generating = three * x.q * y.p - e * (x.q + y.p);
                y.q * y.p - generating
            }
            (MapKind::Cat, StepSymbol::Winding(m, n)) => {
                let [[a, b], [c, d]] = CAT_MATRIX;
                let (m, n) = (Rational::from(m as i128), Rational::from(n as i128));
                let qn = x.q * a as i128 + x.p * b as i128 - m;
                let pn = x.q * c as i128 + x.p * d as i128 - n;
                if qn != y.q || pn != y.p {
                    return Err(inconsistent(l));
                }
                let unfolded = y.q + m;
                x.q * x.q - x.q * unfolded + unfolded * unfolded - n * y.q
            }
            _ => return Err(inconsistent(l)),
        };
        actions.push(action);
    }
    let mut out = orbit.clone();
    out.exact_actions = actions;
    Ok(out)
}

pub fn enumerate_orbits(
    map: &MapSpec,
    l_max: usize,
    strip: &OpeningStrip,
) -> Result<Vec<PeriodicOrbit>> {
    match map.kind() {
        MapKind::Baker => enumerate_baker_orbits(l_max, strip),
        MapKind::Cat => enumerate_cat_orbits(l_max, strip),
    }
}

/// Baker orbits of fundamental period `L ≤ l_max` avoiding the strip at every point,
/// ordered by period then label, actions filled.
pub fn enumerate_baker_orbits(l_max: usize, strip: &OpeningStrip) -> Result<Vec<PeriodicOrbit>> {
    if l_max == 0 {
        return Err(Error::InvalidArgument("L_max must be at least 1".into()));
    }
    if l_max > 30 {
        return Err(Error::InvalidArgument(format!(
            "L_max = {l_max} too large for exact enumeration"
        )));
    }
    let map = MapSpec::baker();
    let mut out = Vec::new();
    for len in 1..=l_max {
        let denom = 3i128.pow(len as u32) - 1;
        let total = 3usize.pow(len as u32);
        for code in 0..total {
            let digits = ternary_digits(code, len);
            if !is_primitive_necklace(&digits) {
                continue;
            }
            let exact: Vec<OrbitPoint> = (0..len)
                .map(|j| {
                    let q = (0..len).fold(0i128, |acc, i| acc * 3 + digits[(j + i) % len] as i128);
                    let p = (0..len).fold(0i128, |acc, i| {
                        acc * 3 + digits[(j + 2 * len - 1 - i) % len] as i128
                    });
                    OrbitPoint {
                        q: rat(q, denom),
                        p: rat(p, denom),
                    }
                })
                .collect();
            if exact.iter().any(|x| strip.contains(to_f64(&frac(&x.q)))) {
                continue;
            }
            let label: String = digits.iter().map(|d| char::from(b'0' + d)).collect();
            let symbols = digits.iter().map(|&d| StepSymbol::Branch(d)).collect();
            let orbit = PeriodicOrbit::new(MapKind::Baker, label, exact, symbols);
            out.push(orbit_actions(&orbit, &map)?);
        }
    }
    mark_identified(&mut out);
    Ok(out)
}

fn ternary_digits(mut code: usize, len: usize) -> Vec<u8> {
    let mut digits = vec![0u8; len];
    for slot in digits.iter_mut().rev() {
        *slot = (code % 3) as u8;
        code /= 3;
    }
    digits
}

/// Lexicographically smallest among its rotations and not a power of a shorter word.
fn is_primitive_necklace(word: &[u8]) -> bool {
    let len = word.len();
    (1..len).all(|r| {
        let rotated = word[r..].iter().chain(&word[..r]);
        matches!(word.iter().cmp(rotated), std::cmp::Ordering::Less)
    })
}

/// Cat orbits of fundamental period `L ≤ l_max` avoiding the strip, ordered by
/// period then label, actions filled.
pub fn enumerate_cat_orbits(l_max: usize, strip: &OpeningStrip) -> Result<Vec<PeriodicOrbit>> {
    if l_max == 0 {
        return Err(Error::InvalidArgument("L_max must be at least 1".into()));
    }
    if l_max > 24 {
        return Err(Error::InvalidArgument(format!(
            "L_max = {l_max} too large for exact enumeration"
        )));
    }
    let map = MapSpec::cat();
    let mut out = Vec::new();
    for len in 1..=l_max {
        for (label, exact, symbols) in cat_orbits_of_period(len) {
            if exact.iter().any(|x| strip.contains(to_f64(&x.q))) {
                continue;
            }
            let orbit = PeriodicOrbit::new(MapKind::Cat, label, exact, symbols);
            out.push(orbit_actions(&orbit, &map)?);
        }
    }
    mark_identified(&mut out);
    Ok(out)
}

pub(crate) fn cat_power(len: usize) -> [[i128; 2]; 2] {
    let c = CAT_MATRIX.map(|row| row.map(|v| v as i128));
    let mut m = [[1i128, 0], [0, 1]];
    for _ in 0..len {
        m = [
            [
                m[0][0] * c[0][0] + m[0][1] * c[1][0],
                m[0][0] * c[0][1] + m[0][1] * c[1][1],
            ],
            [
                m[1][0] * c[0][0] + m[1][1] * c[1][0],
                m[1][0] * c[0][1] + m[1][1] * c[1][1],
            ],
        ];
    }
    m
}

/// Every point of `A^{-1} Z² / Z²` for `A = C^L − I`, scaled by `D = |det A|`.
pub(crate) fn cat_periodic_points(len: usize) -> (i128, Vec<(i128, i128)>) {
    let cl = cat_power(len);
    let a = [[cl[0][0] - 1, cl[0][1]], [cl[1][0], cl[1][1] - 1]];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let d = det.abs();
    // column Hermite form A V = [[g, 0], [*, h]] with V unimodular; the box
    // [0, g) x [0, h) holds one representative of every coset of Z² / A Z²
    let g = a[0][0].gcd(&a[0][1]);
    let h = d / g;
    let adj = [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]];
    let sign = det.signum();
    let mut points = Vec::with_capacity(d as usize);
    for m0 in 0..g {
        for m1 in 0..h {
            // x = adj(A) m / det, scaled by D
            let xq = sign * (adj[0][0] * m0 + adj[0][1] * m1);
            let xp = sign * (adj[1][0] * m0 + adj[1][1] * m1);
            points.push((xq.rem_euclid(d), xp.rem_euclid(d)));
        }
    }
    (d, points)
}

type CatOrbitData = (String, Vec<OrbitPoint>, Vec<StepSymbol>);

fn cat_orbits_of_period(len: usize) -> Vec<CatOrbitData> {
    let (d, mut points) = cat_periodic_points(len);
    points.sort_unstable();
    points.dedup();
    let [[a, b], [c, dd]] = CAT_MATRIX.map(|row| row.map(|v| v as i128));
    let step = |(x, y): (i128, i128)| {
        let q = a * x + b * y;
        let p = c * x + dd * y;
        (
            (q.rem_euclid(d), p.rem_euclid(d)),
            (q.div_euclid(d), p.div_euclid(d)),
        )
    };
    let width = d.to_string().len();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for &start in &points {
        if seen.contains(&start) {
            continue;
        }
        let mut orbit = vec![start];
        let mut windings = Vec::new();
        let mut x = start;
        loop {
            let (next, w) = step(x);
            windings.push(w);
            if next == start {
                break;
            }
            orbit.push(next);
            x = next;
        }
        seen.extend(orbit.iter().copied());
        if orbit.len() != len {
            continue;
        }
        // `points` is sorted, so `start` is the smallest point of its orbit
        let exact = orbit
            .iter()
            .map(|&(x, y)| OrbitPoint {
                q: rat(x, d),
                p: rat(y, d),
            })
            .collect();
        let symbols = windings
            .iter()
            .map(|&(m, n)| StepSymbol::Winding(m as i64, n as i64))
            .collect();
        let label = format!("{:0w$}_{:0w$}/{}", start.0, start.1, d, w = width);
        out.push((label, exact, symbols));
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}

/// Flags orbits whose reduced point set repeats an earlier orbit's (the baker corner).
fn mark_identified(orbits: &mut [PeriodicOrbit]) {
    let mut first: HashMap<Vec<OrbitPoint>, String> = HashMap::new();
    for orbit in orbits.iter_mut() {
        let mut key: Vec<OrbitPoint> = orbit.exact.iter().map(OrbitPoint::reduced).collect();
        key.sort_by(|x, y| (&x.q, &x.p).cmp(&(&y.q, &y.p)));
        match first.get(&key) {
            Some(label) => orbit.identified_with = Some(label.clone()),
            None => {
                first.insert(key, orbit.label.clone());
            }
        }
    }
}

/// Number of aperiodic binary necklaces of length `len` (Moebius formula).
#[cfg(test)]
fn binary_lyndon_count(len: usize) -> usize {
    fn mobius(mut n: usize) -> i64 {
        let mut result = 1;
        let mut p = 2;
        while p * p <= n {
            if n.is_multiple_of(p) {
                n /= p;
                if n.is_multiple_of(p) {
                    return 0;
                }
                result = -result;
            }
            p += 1;
        }
        if n > 1 {
            result = -result;
        }
        result
    }
    let total: i64 = (1..=len)
        .filter(|d| len.is_multiple_of(*d))
        .map(|d| mobius(d) * 2i64.pow((len / d) as u32))
        .sum();
    (total / len as i64) as usize
}
