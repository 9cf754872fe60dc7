//! Output files of one run. Every file is written to a temporary name and
//! renamed into place; if the run fails, everything it wrote is removed.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use omrl::analysis::HusimiGrid;
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::CliError;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Artifacts {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Artifacts {
    /// Creates `dir` if needed and checks that files can be created in it.
    pub fn prepare(dir: &Path) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("output directory {}: {e}", dir.display())))?;
        NamedTempFile::new_in(dir).map_err(|e| {
            CliError::Config(format!(
                "output directory {} is not writable: {e}",
                dir.display()
            ))
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// File names written so far, in order.
    pub fn names(&self) -> Vec<String> {
        self.written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect()
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        atomic_write(&path, bytes)?;
        if !self.written.contains(&path) {
            self.written.push(path);
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("plain data serializes");
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::io(self.dir.join(name), e.into());
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::io(self.dir.join(name), e.into_error()))?;
        self.write_bytes(name, &bytes)
    }

    /// Grid as CSV: one line per `p` row, highest `p` first, `q` increasing along the line.
    pub fn write_grid_csv(&mut self, name: &str, grid: &HusimiGrid) -> Result<(), CliError> {
        let mut out = String::new();
        for j in (0..grid.n_p).rev() {
            let line: Vec<String> = (0..grid.n_q).map(|i| num(grid.at(i, j))).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        self.write_bytes(name, out.as_bytes())
    }

    /// 16-bit binary PGM scaled to the grid maximum, same orientation as the CSV.
    pub fn write_pgm(&mut self, name: &str, grid: &HusimiGrid) -> Result<(), CliError> {
        let max = grid.values.iter().cloned().fold(0.0f64, f64::max);
        let mut bytes = format!("P5\n{} {}\n65535\n", grid.n_q, grid.n_p).into_bytes();
        for j in (0..grid.n_p).rev() {
            for i in 0..grid.n_q {
                let v = if max > 0.0 {
                    (grid.at(i, j) / max * 65535.0).round() as u16
                } else {
                    0
                };
                bytes.extend_from_slice(&v.to_be_bytes());
            }
        }
        self.write_bytes(name, &bytes)
    }

    /// Removes everything this run wrote, and the directory if the run created it.
    pub fn discard(self) {
        for p in &self.written {
            let _ = std::fs::remove_file(p);
        }
        if self.created_dir {
            // only succeeds when nothing else is left inside
            let _ = std::fs::remove_dir(&self.dir);
        }
    }
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Spectrum table: `re, im, modulus, phase, residual`; phase in `[0, 2π)`.
pub fn spectrum_rows(values: &[Complex64], residuals: &[f64]) -> Vec<Vec<String>> {
    values
        .iter()
        .zip(residuals)
        .map(|(z, r)| {
            vec![
                num(z.re),
                num(z.im),
                num(z.norm()),
                num(z.arg().rem_euclid(std::f64::consts::TAU)),
                num(*r),
            ]
        })
        .collect()
}

pub const SPECTRUM_HEADER: [&str; 5] = ["re", "im", "modulus", "phase", "residual"];

/// Exact eigenvalues as circles, approximate ones as crosses, inside the unit
/// circle with the cutoff `nu_c` dashed.
pub fn overlay_svg(exact: &[Complex64], approx: &[Complex64], nu_c: f64, title: &str) -> String {
    const SIZE: f64 = 480.0;
    const PAD: f64 = 30.0;
    let scale = (SIZE - 2.0 * PAD) / 2.0;
    let c = SIZE / 2.0;
    let xy = |z: &Complex64| (c + scale * z.re, c - scale * z.im);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    );
    s += &format!("<rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>\n");
    s += &format!(
        "<text x=\"{PAD}\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">{title}</text>\n"
    );
    s += &format!("<circle cx=\"{c}\" cy=\"{c}\" r=\"{scale}\" fill=\"none\" stroke=\"#888\"/>\n");
    s += &format!(
        "<circle cx=\"{c}\" cy=\"{c}\" r=\"{:.3}\" fill=\"none\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>\n",
        scale * nu_c
    );
    for z in exact {
        let (x, y) = xy(z);
        s += &format!(
            "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"3.5\" fill=\"none\" stroke=\"#1f4e9c\"/>\n"
        );
    }
    for z in approx {
        let (x, y) = xy(z);
        s += &format!(
            "<path d=\"M{:.3} {:.3}L{:.3} {:.3}M{:.3} {:.3}L{:.3} {:.3}\" stroke=\"#c0392b\"/>\n",
            x - 3.0,
            y - 3.0,
            x + 3.0,
            y + 3.0,
            x - 3.0,
            y + 3.0,
            x + 3.0,
            y - 3.0
        );
    }
    s += "</svg>\n";
    s
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

/// Wall-clock stage timer for the manifest.
#[derive(Default)]
pub struct Timer {
    stages: Vec<Timing>,
}

impl Timer {
    pub fn time<T>(&mut self, stage: impl Into<String>, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push(Timing {
            stage: stage.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn into_stages(self) -> Vec<Timing> {
        self.stages
    }
}
