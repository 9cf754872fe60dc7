//! Quantum kinematics on the torus and the closed/open map propagators.
//!
//! A [`TorusSpec`] fixes the Hilbert dimension `N = 1/(2πħ)` and the Bloch
//! phases `(χ_q, χ_p)`. Position eigenstates sit at `(j + χ_q)/N`, momentum
//! eigenstates at `(k + χ_p)/N`, and the two bases are related by the phased
//! discrete Fourier transform returned by [`fourier_matrix`].

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::ZERO;
use crate::{ComplexMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusSpec {
    n: usize,
    chi_q: f64,
    chi_p: f64,
}

impl TorusSpec {
    pub fn new(n: usize, chi_q: f64, chi_p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("N must be positive".into()));
        }
        for (name, chi) in [("chi_q", chi_q), ("chi_p", chi_p)] {
            if !(0.0..1.0).contains(&chi) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {chi} outside [0, 1)"
                )));
            }
        }
        Ok(Self { n, chi_q, chi_p })
    }

    /// Antiperiodic torus used by the baker map.
    pub fn antiperiodic(n: usize) -> Result<Self> {
        Self::new(n, 0.5, 0.5)
    }

    /// Periodic torus used by the cat map.
    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(n, 0.0, 0.0)
    }

    /// Torus with the boundary phases a map kind requires.
    pub fn for_map(kind: MapKind, n: usize) -> Result<Self> {
        match kind {
            MapKind::Baker => Self::antiperiodic(n),
            MapKind::Cat => Self::periodic(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn chi_q(&self) -> f64 {
        self.chi_q
    }

    pub fn chi_p(&self) -> f64 {
        self.chi_p
    }

    pub fn position(&self, j: usize) -> f64 {
        (j as f64 + self.chi_q) / self.n as f64
    }

    pub fn momentum(&self, k: usize) -> f64 {
        (k as f64 + self.chi_p) / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Baker,
    Cat,
}

impl MapKind {
    pub fn name(self) -> &'static str {
        match self {
            MapKind::Baker => "baker",
            MapKind::Cat => "cat",
        }
    }
}

impl std::str::FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baker" => Ok(MapKind::Baker),
            "cat" => Ok(MapKind::Cat),
            other => Err(Error::InvalidArgument(format!(
                "unknown map kind {other:?}"
            ))),
        }
    }
}

/// Vertical strip `q_lo < q < q_hi` through which trajectories escape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpeningStrip {
    q_lo: f64,
    q_hi: f64,
}

impl OpeningStrip {
    pub fn new(q_lo: f64, q_hi: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q_lo) || !(q_hi > 0.0 && q_hi <= 1.0) || q_lo >= q_hi {
            return Err(Error::InvalidArgument(format!(
                "opening ({q_lo}, {q_hi}) must satisfy 0 <= q_lo < q_hi <= 1"
            )));
        }
        Ok(Self { q_lo, q_hi })
    }

    /// The middle third `1/3 < q < 2/3`, default for both maps.
    pub fn middle_third() -> Self {
        Self {
            q_lo: 1.0 / 3.0,
            q_hi: 2.0 / 3.0,
        }
    }

    pub fn q_lo(&self) -> f64 {
        self.q_lo
    }

    pub fn q_hi(&self) -> f64 {
        self.q_hi
    }

    pub fn width(&self) -> f64 {
        self.q_hi - self.q_lo
    }

    /// Strict membership; boundary points are kept.
    pub fn contains(&self, q: f64) -> bool {
        self.q_lo < q && q < self.q_hi
    }
}

/// A propagator on a given torus, closed or projected onto the complement of an opening.
#[derive(Debug, Clone)]
pub struct OpenMapOperator {
    spec: TorusSpec,
    kind: MapKind,
    opening: Option<OpeningStrip>,
    matrix: ComplexMatrix,
}

impl OpenMapOperator {
    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn opening(&self) -> Option<&OpeningStrip> {
        self.opening.as_ref()
    }

    pub fn is_open(&self) -> bool {
        self.opening.is_some()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Position indices outside the opening (all indices for a closed map).
    pub fn kept_indices(&self) -> Vec<usize> {
        match &self.opening {
            None => (0..self.spec.dim()).collect(),
            Some(strip) => kept_indices(&self.spec, strip),
        }
    }
}

pub(crate) fn kept_indices(spec: &TorusSpec, strip: &OpeningStrip) -> Vec<usize> {
    (0..spec.dim())
        .filter(|&j| !strip.contains(spec.position(j)))
        .collect()
}

/// `G[k][j] = N^{-1/2} exp(-2πi (j+χ_q)(k+χ_p)/N)`, mapping position to momentum amplitudes.
pub fn fourier_matrix(spec: &TorusSpec) -> ComplexMatrix {
    let n = spec.dim();
    let nf = n as f64;
    let scale = 1.0 / nf.sqrt();
    Mat::from_fn(n, n, |k, j| {
        // reduce the phase modulo N before scaling to keep large-N entries accurate
        let t = ((j as f64 + spec.chi_q) * (k as f64 + spec.chi_p)).rem_euclid(nf);
        Complex64::from_polar(scale, -2.0 * PI * t / nf)
    })
}

/// Closed quantum tri-baker `G_N^{-1} · diag(G_{N/3}, G_{N/3}, G_{N/3})` on the antiperiodic torus.
pub fn baker_propagator(spec: &TorusSpec) -> Result<OpenMapOperator> {
    check_phases(spec, "baker", 0.5)?;
    let n = spec.dim();
    if !n.is_multiple_of(3) {
        return Err(Error::NotDivisibleByThree(n));
    }
    let m = n / 3;
    let g_inv = fourier_matrix(spec).adjoint().to_owned();
    let block = fourier_matrix(&TorusSpec::antiperiodic(m)?);
    let mut u = Mat::<Complex64>::zeros(n, n);
    for e in 0..3 {
        let part = g_inv.as_ref().submatrix(0, e * m, n, m) * block.as_ref();
        u.as_mut().submatrix_mut(0, e * m, n, m).copy_from(&part);
    }
    Ok(OpenMapOperator {
        spec: *spec,
        kind: MapKind::Baker,
        opening: None,
        matrix: u,
    })
}

/// Closed quantum cat map for `C = [[2,1],[3,2]]` on the periodic torus,
/// `U(Q',Q) = sqrt(-i/N) exp(2πi (Q² - Q'Q + Q'²)/N)` with `sqrt(-i) = e^{-iπ/4}`.
pub fn cat_propagator(spec: &TorusSpec) -> Result<OpenMapOperator> {
    check_phases(spec, "cat", 0.0)?;
    let n = spec.dim();
    let prefactor = Complex64::from_polar(1.0 / (n as f64).sqrt(), -PI / 4.0);
    let modulus = n as i64;
    let u = Mat::from_fn(n, n, |row, col| {
        let (q, qp) = (col as i64, row as i64);
        let exponent = (q * q - qp * q + qp * qp).rem_euclid(modulus);
        prefactor * Complex64::from_polar(1.0, 2.0 * PI * exponent as f64 / n as f64)
    });
    Ok(OpenMapOperator {
        spec: *spec,
        kind: MapKind::Cat,
        opening: None,
        matrix: u,
    })
}

pub fn closed_propagator(kind: MapKind, spec: &TorusSpec) -> Result<OpenMapOperator> {
    match kind {
        MapKind::Baker => baker_propagator(spec),
        MapKind::Cat => cat_propagator(spec),
    }
}

fn check_phases(spec: &TorusSpec, map: &'static str, expected: f64) -> Result<()> {
    if spec.chi_q != expected || spec.chi_p != expected {
        return Err(Error::WrongBoundaryPhase {
            map,
            expected,
            chi_q: spec.chi_q,
            chi_p: spec.chi_p,
        });
    }
    Ok(())
}

/// Diagonal 0/1 projector onto positions outside the strip.
pub fn opening_projector(spec: &TorusSpec, strip: &OpeningStrip) -> ComplexMatrix {
    let n = spec.dim();
    let mut p = Mat::<Complex64>::zeros(n, n);
    for j in kept_indices(spec, strip) {
        p[(j, j)] = Complex64::new(1.0, 0.0);
    }
    p
}

/// `Ũ = P U P`, masking rows and columns of opened positions.
pub fn open_propagator(u: &OpenMapOperator, strip: &OpeningStrip) -> Result<OpenMapOperator> {
    if u.is_open() {
        return Err(Error::AlreadyOpen);
    }
    let n = u.spec.dim();
    let keep: Vec<bool> = (0..n)
        .map(|j| !strip.contains(u.spec.position(j)))
        .collect();
    let matrix = Mat::from_fn(n, n, |i, j| {
        if keep[i] && keep[j] {
            u.matrix[(i, j)]
        } else {
            ZERO
        }
    });
    Ok(OpenMapOperator {
        spec: u.spec,
        kind: u.kind,
        opening: Some(*strip),
        matrix,
    })
}

/// Convenience: closed propagator for `kind` on its torus, then opened.
pub fn open_map(kind: MapKind, n: usize, strip: &OpeningStrip) -> Result<OpenMapOperator> {
    let spec = TorusSpec::for_map(kind, n)?;
    open_propagator(&closed_propagator(kind, &spec)?, strip)
}
