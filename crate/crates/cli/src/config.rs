//! Experiment configuration: a JSON document overridden by command-line flags,
//! validated in full before any computation starts.

use std::path::{Path, PathBuf};

use clap::Args;
use omrl::torus::{MapKind, OpeningStrip};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Basis size for one run: a fixed count or `c · N^{d/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasisSize {
    Fixed(usize),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl BasisSize {
    pub const AUTO: BasisSize = BasisSize::Auto(AutoTag::Auto);

    fn parse(s: &str) -> Result<Self, CliError> {
        if s == "auto" {
            return Ok(Self::AUTO);
        }
        s.parse().map(BasisSize::Fixed).map_err(|_| {
            CliError::Config(format!("--Ns entry {s:?} is neither a count nor \"auto\""))
        })
    }
}

/// One value or a list; lets `"N": 81` and `"N": [81, 177]` both parse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> From<OneOrMany<T>> for Vec<T> {
    fn from(v: OneOrMany<T>) -> Self {
        match v {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

fn one_or_many<'de, D, T>(d: D) -> Result<Vec<T>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    OneOrMany::deserialize(d).map(Into::into)
}

/// Every field of an experiment. Unset optional fields take the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub map: MapKind,
    #[serde(rename = "N", deserialize_with = "one_or_many")]
    pub sizes: Vec<usize>,
    /// One entry per size, or a single entry applied to all of them.
    #[serde(rename = "Ns", deserialize_with = "one_or_many")]
    pub basis_sizes: Vec<BasisSize>,
    /// Constant `c` of the automatic rule `N_s = c N^{d/2}`.
    pub ns_constant: f64,
    /// Repeller dimension; box counting when unset.
    pub dimension: Option<f64>,
    /// `[q_lo, q_hi]`; `null` means the closed map.
    pub open: Option<[f64; 2]>,
    /// Longest orbit period admitted into the basis; smallest sufficient when unset.
    pub l_max: Option<usize>,
    pub tau_factor: f64,
    pub svd_tol: f64,
    pub nu_c: f64,
    /// Husimi grid `[n_q, n_p]`; `max(64, 2⌈√N⌉)` per side when unset.
    pub resolution: Option<[usize; 2]>,
    /// Eigenvalue modulus used to pick the state for Husimi panels.
    pub target: Option<f64>,
    /// Iteration horizon and depths for box counting.
    pub horizon: u32,
    pub depths: Vec<u32>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            map: MapKind::Baker,
            sizes: Vec::new(),
            basis_sizes: vec![BasisSize::AUTO],
            ns_constant: 4.0,
            dimension: None,
            open: Some([1.0 / 3.0, 2.0 / 3.0]),
            l_max: None,
            tau_factor: 1.0,
            svd_tol: 1e-8,
            nu_c: 0.5,
            resolution: None,
            target: None,
            horizon: 12,
            depths: vec![2, 3, 4, 5, 6],
            out: PathBuf::from("out"),
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("cannot parse {what} entry {x:?}")))
        })
        .collect()
}

/// Flags shared by every subcommand; each one overrides the matching config field.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// JSON configuration document.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// baker | cat
    #[arg(long, global = true)]
    pub map: Option<String>,
    /// Hilbert-space dimension(s), comma separated.
    #[arg(long = "N", global = true)]
    pub sizes: Option<String>,
    /// Scar-basis size(s) or "auto", comma separated.
    #[arg(long = "Ns", global = true)]
    pub basis_sizes: Option<String>,
    /// Constant of the automatic basis-size rule.
    #[arg(long, global = true)]
    pub ns_constant: Option<f64>,
    /// Repeller dimension used by the basis-size rule and Weyl fits.
    #[arg(long, global = true)]
    pub dimension: Option<f64>,
    /// Opening strip "q_lo,q_hi", or "none" for the closed map.
    #[arg(long, global = true)]
    pub open: Option<String>,
    /// Longest orbit period in the scar basis.
    #[arg(long, global = true)]
    pub l_max: Option<usize>,
    /// Scar propagation time in units of the Ehrenfest time.
    #[arg(long, global = true)]
    pub tau_factor: Option<f64>,
    /// Relative singular-value cutoff of the overlap matrix.
    #[arg(long, global = true)]
    pub svd_tol: Option<f64>,
    /// Modulus above which a resonance counts as long-lived.
    #[arg(long, global = true)]
    pub nu_c: Option<f64>,
    /// Husimi grid "n_q,n_p".
    #[arg(long, global = true)]
    pub resolution: Option<String>,
    /// Eigenvalue modulus selecting the Husimi state.
    #[arg(long, global = true)]
    pub target: Option<f64>,
    /// Survival steps for box counting.
    #[arg(long, global = true)]
    pub horizon: Option<u32>,
    /// Box-counting depths, comma separated.
    #[arg(long, global = true)]
    pub depths: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl ConfigFlags {
    /// Reads the config file (if any) and applies the flags on top.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(m) = &self.map {
            c.map = m
                .parse()
                .map_err(|_| CliError::Config(format!("unknown map {m:?}")))?;
        }
        if let Some(s) = &self.sizes {
            c.sizes = parse_list(s, "--N")?;
        }
        if let Some(s) = &self.basis_sizes {
            c.basis_sizes = s
                .split(',')
                .map(|x| BasisSize::parse(x.trim()))
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = self.ns_constant {
            c.ns_constant = v;
        }
        if let Some(v) = self.dimension {
            c.dimension = Some(v);
        }
        if let Some(s) = &self.open {
            c.open = if s == "none" {
                None
            } else {
                match parse_list::<f64>(s, "--open")?.as_slice() {
                    &[lo, hi] => Some([lo, hi]),
                    _ => {
                        return Err(CliError::Config(
                            "--open takes \"q_lo,q_hi\" or \"none\"".into(),
                        ))
                    }
                }
            };
        }
        if let Some(v) = self.l_max {
            c.l_max = Some(v);
        }
        if let Some(v) = self.tau_factor {
            c.tau_factor = v;
        }
        if let Some(v) = self.svd_tol {
            c.svd_tol = v;
        }
        if let Some(v) = self.nu_c {
            c.nu_c = v;
        }
        if let Some(s) = &self.resolution {
            c.resolution = match *parse_list::<usize>(s, "--resolution")?.as_slice() {
                [q, p] => Some([q, p]),
                [side] => Some([side, side]),
                _ => return Err(CliError::Config("--resolution takes \"n_q,n_p\"".into())),
            };
        }
        if let Some(v) = self.target {
            c.target = Some(v);
        }
        if let Some(v) = self.horizon {
            c.horizon = v;
        }
        if let Some(s) = &self.depths {
            c.depths = parse_list(s, "--depths")?;
        }
        if let Some(p) = &self.out {
            c.out = p.clone();
        }
        Ok(c)
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
}

impl ExperimentConfig {
    pub fn strip(&self) -> Option<OpeningStrip> {
        // validated in `check`
        self.open
            .map(|[lo, hi]| OpeningStrip::new(lo, hi).expect("opening validated"))
    }

    /// Basis size entry for the `i`-th dimension.
    pub fn basis_size(&self, i: usize) -> BasisSize {
        if self.basis_sizes.len() == 1 {
            self.basis_sizes[0]
        } else {
            self.basis_sizes[i]
        }
    }

    /// Ranges shared by all subcommands.
    pub fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if let Some([lo, hi]) = self.open {
            if let Err(e) = OpeningStrip::new(lo, hi) {
                return bad(format!("opening: {e}"));
            }
        }
        for &n in &self.sizes {
            if n == 0 {
                return bad("N must be positive".into());
            }
            if self.map == MapKind::Baker && n % 3 != 0 {
                return bad(omrl::Error::NotDivisibleByThree(n).to_string());
            }
        }
        if self.basis_sizes.is_empty() {
            return bad("Ns needs at least one entry".into());
        }
        if self.basis_sizes.len() != 1 && self.basis_sizes.len() != self.sizes.len() {
            return bad(format!(
                "{} Ns entries for {} sizes; give one entry or one per size",
                self.basis_sizes.len(),
                self.sizes.len()
            ));
        }
        if self.basis_sizes.contains(&BasisSize::Fixed(0)) {
            return bad("Ns must be positive".into());
        }
        if !(self.ns_constant > 0.0 && self.ns_constant.is_finite()) {
            return bad(format!("ns_constant {} must be positive", self.ns_constant));
        }
        if let Some(d) = self.dimension {
            if !(d > 0.0 && d <= 2.0) {
                return bad(format!("dimension {d} outside (0, 2]"));
            }
        }
        if self.l_max == Some(0) {
            return bad("l_max must be positive".into());
        }
        if !(self.tau_factor > 0.0 && self.tau_factor.is_finite()) {
            return bad(format!("tau_factor {} must be positive", self.tau_factor));
        }
        if !(self.svd_tol > 0.0 && self.svd_tol < 1.0) {
            return bad(format!("svd_tol {} outside (0, 1)", self.svd_tol));
        }
        if !(self.nu_c > 0.0 && self.nu_c < 1.0) {
            return bad(format!("nu_c {} outside (0, 1)", self.nu_c));
        }
        if let Some([q, p]) = self.resolution {
            if q == 0 || p == 0 {
                return bad("resolution must be positive".into());
            }
        }
        if let Some(t) = self.target {
            if !(0.0..=1.0).contains(&t) {
                return bad(format!("target {t} outside [0, 1]"));
            }
        }
        if self.horizon < 4 {
            return bad(format!("horizon {} < 4", self.horizon));
        }
        if self.depths.len() < 3 || self.depths.contains(&0) {
            return bad("box counting needs at least three positive depths".into());
        }
        Ok(())
    }

    pub fn require_sizes(&self, at_least: usize) -> Result<(), CliError> {
        if self.sizes.len() < at_least {
            return Err(CliError::Config(format!(
                "this command needs at least {at_least} value(s) of N, got {}",
                self.sizes.len()
            )));
        }
        Ok(())
    }

    pub fn require_opening(&self) -> Result<OpeningStrip, CliError> {
        self.strip().ok_or_else(|| {
            CliError::Config(
                "this command needs an opening; --open none is only valid for weyl".into(),
            )
        })
    }
}
