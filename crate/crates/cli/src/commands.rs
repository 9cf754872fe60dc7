//! The five subcommands. Each reads a validated config, computes through the
//! library and hands its files to `Artifacts`.

use clap::ValueEnum;
use log::{info, warn};
use num_complex::Complex64;
use omrl::analysis::{
    default_resolution, grid_correlation, husimi, mixed_representation, state_overlap, weyl_fit,
    HusimiGrid,
};
use omrl::classical::{
    box_counting_dimension, box_counts, dimension_from_counts, enumerate_orbits, MapSpec,
    OrbitRecord,
};
use omrl::scar::{
    auto_basis_size, build_scar_basis, ehrenfest_cutoff, orbits_for_basis, ScarBasis,
};
use omrl::spectral::{
    exact_eigenvalues, exact_resonances, match_spectra, reduced_problem, solve_generalized,
    ResonanceSet,
};
use omrl::torus::{closed_propagator, open_map, MapKind, OpenMapOperator, OpeningStrip, TorusSpec};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::artifacts::{num, overlay_svg, spectrum_rows, Artifacts, Timer, SPECTRUM_HEADER};
use crate::cache::Cache;
use crate::config::{BasisSize, ExperimentConfig};
use crate::error::CliError;

/// Longest period searched when the basis size decides `L_max`.
const L_MAX_CAP: usize = 30;

/// Shared state of one run.
pub struct Context {
    pub cache: Cache,
    pub out: Artifacts,
    pub timer: Timer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Exact,
    Scar,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
    Mixed,
    All,
}

fn stem(cfg: &ExperimentConfig, n: usize) -> String {
    format!("{}_N{n}", cfg.map.name())
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im, "modulus": z.norm() })
}

/// Repeller dimension from the config, 2 for the closed map, else box counting.
fn repeller_dimension(cfg: &ExperimentConfig, ctx: &mut Context) -> Result<f64, CliError> {
    if let Some(d) = cfg.dimension {
        return Ok(d);
    }
    let Some(strip) = cfg.strip() else {
        return Ok(2.0);
    };
    let params =
        json!({ "map": cfg.map, "open": cfg.open, "horizon": cfg.horizon, "depths": cfg.depths });
    let map = MapSpec::new(cfg.map);
    let timer = &mut ctx.timer;
    ctx.cache.json("box-counting-dimension", &params, || {
        timer.time("box counting", || {
            Ok(box_counting_dimension(
                &map,
                &strip,
                cfg.horizon,
                &cfg.depths,
            )?)
        })
    })
}

#[derive(Serialize, Deserialize)]
struct ExactTable {
    values: Vec<[f64; 2]>,
    residuals: Vec<f64>,
}

impl ExactTable {
    fn from_set(set: &ResonanceSet) -> Self {
        Self {
            values: set.values().iter().map(|z| [z.re, z.im]).collect(),
            residuals: set.residuals().to_vec(),
        }
    }

    fn values(&self) -> Vec<Complex64> {
        self.values
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect()
    }
}

fn report_defective(set: &ResonanceSet, what: &str) {
    if !set.defective().is_empty() {
        warn!(
            "{what}: {} eigenpairs exceed the condition cap and were left unnormalized",
            set.defective().len()
        );
    }
}

/// Exact spectrum with residuals, through the cache.
fn exact_table(
    cfg: &ExperimentConfig,
    ctx: &mut Context,
    u: &OpenMapOperator,
) -> Result<ExactTable, CliError> {
    let n = u.spec().dim();
    let params = json!({ "map": cfg.map, "N": n, "open": cfg.open });
    let timer = &mut ctx.timer;
    ctx.cache.json("exact-spectrum", &params, || {
        timer.time(format!("exact diagonalization N={n}"), || {
            let set = exact_resonances(u)?;
            report_defective(&set, &format!("exact N={n}"));
            Ok(ExactTable::from_set(&set))
        })
    })
}

struct BasisChoice {
    basis: ScarBasis,
    l_max: usize,
}

fn scar_basis(
    cfg: &ExperimentConfig,
    ctx: &mut Context,
    u: &OpenMapOperator,
    ns: usize,
) -> Result<BasisChoice, CliError> {
    let strip = cfg.require_opening()?;
    let map = MapSpec::new(cfg.map);
    let orbits = match cfg.l_max {
        Some(l) => enumerate_orbits(&map, l, &strip)?,
        None => orbits_for_basis(&map, &strip, ns, L_MAX_CAP)?,
    };
    let l_max = cfg
        .l_max
        .unwrap_or_else(|| orbits.iter().map(|o| o.period()).max().unwrap_or(0));
    let tau = ehrenfest_cutoff(u.spec(), &map, cfg.tau_factor)?;
    let n = u.spec().dim();
    let params = json!({
        "map": cfg.map, "N": n, "open": cfg.open, "l_max": l_max,
        "Ns": ns, "tau": tau, "tau_factor": cfg.tau_factor,
    });
    let timer = &mut ctx.timer;
    let basis = ctx.cache.scar_basis(&params, *u.spec(), || {
        timer.time(format!("scar basis N={n} Ns={ns}"), || {
            Ok(build_scar_basis(&orbits, ns, u, tau)?)
        })
    })?;
    Ok(BasisChoice { basis, l_max })
}

fn basis_size(cfg: &ExperimentConfig, i: usize, n: usize, d: Option<f64>) -> usize {
    match cfg.basis_size(i) {
        BasisSize::Fixed(ns) => ns,
        BasisSize::Auto(_) => auto_basis_size(
            n,
            d.expect("dimension resolved for auto sizes"),
            cfg.ns_constant,
        ),
    }
}

fn needs_dimension(cfg: &ExperimentConfig) -> bool {
    cfg.basis_sizes.contains(&BasisSize::AUTO)
}

/// Exact and scar-method spectra, their matching and an overlay plot per `(N, N_s)`.
pub fn spectrum(
    cfg: &ExperimentConfig,
    ctx: &mut Context,
    export_reduced: bool,
) -> Result<Value, CliError> {
    cfg.require_sizes(1)?;
    let strip = cfg.require_opening()?;
    let d = if needs_dimension(cfg) {
        Some(repeller_dimension(cfg, ctx)?)
    } else {
        None
    };
    let mut runs = Vec::new();
    for (i, &n) in cfg.sizes.iter().enumerate() {
        let ns = basis_size(cfg, i, n, d);
        info!("spectrum: {} N={n} Ns={ns}", cfg.map.name());
        let u = open_map(cfg.map, n, &strip)?;
        let exact = exact_table(cfg, ctx, &u)?;
        let choice = scar_basis(cfg, ctx, &u, ns)?;
        let (approx, rank, sigma) =
            ctx.timer.time(format!("scar spectrum N={n} Ns={ns}"), || {
                let prob = reduced_problem(&choice.basis, &u, cfg.svd_tol)?;
                if export_reduced {
                    write_reduced(
                        &mut ctx.out,
                        &format!("{}_Ns{ns}_reduced", stem(cfg, n)),
                        &prob,
                    )?;
                }
                let sol = solve_generalized(&prob)?;
                let set = sol.lift(&choice.basis, &u)?;
                Ok::<_, CliError>((set, sol.rank, sol.singular_values))
            })?;
        report_defective(&approx, &format!("scar N={n}"));
        let exact_values = exact.values();
        let report = match_spectra(&exact_values, approx.values(), cfg.nu_c)?;

        let name = format!("{}_Ns{ns}", stem(cfg, n));
        ctx.out.write_csv(
            &format!("{name}_exact.csv"),
            &SPECTRUM_HEADER,
            &spectrum_rows(&exact_values, &exact.residuals),
        )?;
        ctx.out.write_csv(
            &format!("{name}_scar.csv"),
            &SPECTRUM_HEADER,
            &spectrum_rows(approx.values(), approx.residuals()),
        )?;
        let pairs: Vec<Value> = report
            .pairs
            .iter()
            .map(|p| {
                json!({
                    "exact_index": p.exact, "scar_index": p.approx, "distance": p.distance,
                    "exact": complex_json(exact_values[p.exact]), "scar": complex_json(approx.values()[p.approx]),
                })
            })
            .collect();
        let summary = json!({
            "map": cfg.map, "N": n, "Ns": ns, "l_max": choice.l_max, "tau": choice.basis.tau(),
            "svd_tol": cfg.svd_tol, "rank": rank,
            "singular_value_spread": sigma.first().zip(sigma.last()).map(|(a, b)| a / b),
            "nu_c": cfg.nu_c, "long_lived": report.long_lived(),
            "mean_distance": report.mean_distance(), "max_distance": report.max_distance(),
            "within_0.05": report.fraction_within(0.05), "within_0.10": report.fraction_within(0.10),
            "unmatched_exact": report.unmatched_exact,
            "pairs": pairs,
        });
        ctx.out
            .write_json(&format!("{name}_match.json"), &summary)?;
        let title = format!(
            "{} N={n} Ns={ns}: exact (circles), scar method (crosses)",
            cfg.map.name()
        );
        ctx.out.write_bytes(
            &format!("{name}_overlay.svg"),
            overlay_svg(&exact_values, approx.values(), cfg.nu_c, &title).as_bytes(),
        )?;
        info!(
            "  {} long-lived, mean distance {:.4}, max {:.4}",
            report.long_lived(),
            report.mean_distance(),
            report.max_distance()
        );
        runs.push(json!({ "N": n, "Ns": ns, "long_lived": report.long_lived(), "mean_distance": report.mean_distance() }));
    }
    Ok(json!({ "dimension": d, "runs": runs }))
}

/// `H` and `S` as a JSON header plus interleaved little-endian re/im payload, `H` first, column-major.
fn write_reduced(
    out: &mut Artifacts,
    name: &str,
    prob: &omrl::spectral::ReducedProblem,
) -> Result<(), CliError> {
    let n = prob.h.nrows();
    let mut bytes = Vec::with_capacity(32 * n * n);
    for m in [&prob.h, &prob.s] {
        for j in 0..n {
            for z in m.col_as_slice(j) {
                bytes.extend_from_slice(&z.re.to_le_bytes());
                bytes.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    out.write_bytes(&format!("{name}.bin"), &bytes)?;
    out.write_json(
        &format!("{name}.json"),
        &json!({
            "rows": n, "cols": n, "matrices": ["H", "S"], "layout": "column-major, interleaved re/im, f64 little-endian",
            "svd_tol": prob.svd_tol, "payload": format!("{name}.bin"),
        }),
    )
}

/// Index of the eigenvalue above `nu_c` whose modulus is closest to `target`.
fn select_by_modulus(values: &[Complex64], nu_c: f64, target: f64) -> Option<usize> {
    (0..values.len())
        .filter(|&i| values[i].norm() >= nu_c)
        .min_by(|&a, &b| {
            (values[a].norm() - target)
                .abs()
                .total_cmp(&(values[b].norm() - target).abs())
        })
}

struct Panel {
    source: &'static str,
    side: &'static str,
    grid: HusimiGrid,
}

/// Husimi panels of the state nearest the target modulus, and overlaps between its exact and scar-method versions.
pub fn husimi_panels(
    cfg: &ExperimentConfig,
    ctx: &mut Context,
    source: Source,
    side: Side,
) -> Result<Value, CliError> {
    if cfg.sizes.len() != 1 {
        return Err(CliError::Config(format!(
            "husimi takes exactly one N, got {}",
            cfg.sizes.len()
        )));
    }
    let target = cfg
        .target
        .ok_or_else(|| CliError::Config("husimi needs --target".into()))?;
    let strip = cfg.require_opening()?;
    let n = cfg.sizes[0];
    let u = open_map(cfg.map, n, &strip)?;
    let spec = *u.spec();
    let resolution = cfg
        .resolution
        .map_or_else(|| default_resolution(n), |[q, p]| (q, p));

    let want_exact = source != Source::Scar;
    let want_scar = source != Source::Exact;
    let exact = ctx.timer.time(format!("exact diagonalization N={n}"), || {
        exact_resonances(&u)
    })?;
    let e = select_by_modulus(exact.values(), cfg.nu_c, target);
    if want_exact && e.is_none() {
        return Err(CliError::NoSuchState {
            spectrum: "exact",
            nu_c: cfg.nu_c,
        });
    }
    let mut selection = json!({});
    let mut scar = None;
    if want_scar {
        let d = if needs_dimension(cfg) {
            Some(repeller_dimension(cfg, ctx)?)
        } else {
            None
        };
        let ns = basis_size(cfg, 0, n, d);
        let choice = scar_basis(cfg, ctx, &u, ns)?;
        let set = ctx.timer.time(format!("scar spectrum N={n} Ns={ns}"), || {
            omrl::spectral::scar_resonances(&choice.basis, &u, cfg.svd_tol)
        })?;
        let a = match (want_exact, e) {
            // the partner assigned by the spectrum matching, else the closest value
            (true, Some(e)) => {
                let report = match_spectra(exact.values(), set.values(), cfg.nu_c)?;
                report
                    .pairs
                    .iter()
                    .find(|p| p.exact == e)
                    .map(|p| p.approx)
                    .or_else(|| {
                        (0..set.len()).min_by(|&x, &y| {
                            (set.values()[x] - exact.values()[e])
                                .norm()
                                .total_cmp(&(set.values()[y] - exact.values()[e]).norm())
                        })
                    })
            }
            _ => select_by_modulus(set.values(), cfg.nu_c, target),
        }
        .ok_or(CliError::NoSuchState {
            spectrum: "scar-method",
            nu_c: cfg.nu_c,
        })?;
        selection["scar"] = json!({ "index": a, "z": complex_json(set.values()[a]), "Ns": ns, "l_max": choice.l_max, "tau": choice.basis.tau() });
        scar = Some((set, a));
    }
    if let (true, Some(e)) = (want_exact, e) {
        selection["exact"] = json!({ "index": e, "z": complex_json(exact.values()[e]) });
    }

    let sides: &[Side] = match side {
        Side::All => &[Side::Right, Side::Left, Side::Mixed],
        s => std::slice::from_ref(match s {
            Side::Right => &Side::Right,
            Side::Left => &Side::Left,
            _ => &Side::Mixed,
        }),
    };
    let mut states: Vec<(&'static str, &ResonanceSet, usize)> = Vec::new();
    if let (true, Some(e)) = (want_exact, e) {
        states.push(("exact", &exact, e));
    }
    if let Some((set, a)) = &scar {
        states.push(("scar", set, *a));
    }
    let mut panels = Vec::new();
    for &(name, set, i) in &states {
        let (r, l) = (set.right_vector(i), set.left_vector(i));
        for s in sides {
            let (label, grid) = ctx.timer.time(format!("{name} {s:?} grid"), || match s {
                Side::Right => husimi(&r, &spec, resolution).map(|g| ("right", g)),
                Side::Left => husimi(&l, &spec, resolution).map(|g| ("left", g)),
                _ => mixed_representation(&r, &l, &spec, resolution).map(|g| ("mixed", g)),
            })?;
            panels.push(Panel {
                source: name,
                side: label,
                grid,
            });
        }
    }
    let base = stem(cfg, n);
    for p in &panels {
        let name = format!("{base}_{}_{}", p.source, p.side);
        ctx.out.write_grid_csv(&format!("{name}.csv"), &p.grid)?;
        ctx.out.write_pgm(&format!("{name}.pgm"), &p.grid)?;
    }

    let mut report = json!({
        "map": cfg.map, "N": n, "target": target, "nu_c": cfg.nu_c,
        "resolution": [resolution.0, resolution.1], "selection": selection,
    });
    if let (Some((set, a)), true, Some(e)) = (&scar, want_exact, e) {
        report["overlaps"] = json!({
            "right": state_overlap(&exact.right_vector(e), &set.right_vector(*a))?,
            "left": state_overlap(&exact.left_vector(e), &set.left_vector(*a))?,
        });
        let mut corr = serde_json::Map::new();
        for s in ["right", "left", "mixed"] {
            let find = |src: &str| panels.iter().find(|p| p.source == src && p.side == s);
            if let (Some(x), Some(y)) = (find("exact"), find("scar")) {
                corr.insert(s.into(), json!(grid_correlation(&x.grid, &y.grid)?));
            }
        }
        report["grid_correlations"] = Value::Object(corr);
    }
    ctx.out
        .write_json(&format!("{base}_overlaps.json"), &report)?;
    Ok(report)
}

/// Long-lived counts over a sweep of `N` and their power-law fit.
pub fn weyl(cfg: &ExperimentConfig, ctx: &mut Context) -> Result<Value, CliError> {
    let mut distinct = cfg.sizes.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(CliError::Config(
            omrl::Error::TooFewSizes(distinct.len()).to_string(),
        ));
    }
    let d = repeller_dimension(cfg, ctx)?;
    let mut spectra = Vec::new();
    for &n in &distinct {
        let params = json!({ "map": cfg.map, "N": n, "open": cfg.open });
        let timer = &mut ctx.timer;
        let values: Vec<[f64; 2]> = ctx.cache.json("exact-eigenvalues", &params, || {
            timer.time(format!("eigenvalues N={n}"), || {
                let u = match cfg.strip() {
                    Some(strip) => open_map(cfg.map, n, &strip)?,
                    None => closed_propagator(cfg.map, &TorusSpec::for_map(cfg.map, n)?)?,
                };
                Ok(exact_eigenvalues(&u)?
                    .iter()
                    .map(|z| [z.re, z.im])
                    .collect())
            })
        })?;
        spectra.push((
            n,
            values
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect::<Vec<_>>(),
        ));
        info!("weyl: N={n} done");
    }
    let borrowed: Vec<(usize, &[Complex64])> =
        spectra.iter().map(|(n, v)| (*n, v.as_slice())).collect();
    let fit = weyl_fit(&borrowed, cfg.nu_c, d)?;
    let name = cfg.map.name();
    let rows: Vec<Vec<String>> = fit
        .sizes
        .iter()
        .zip(&fit.counts)
        .zip(&fit.residuals)
        .map(|((n, c), r)| vec![n.to_string(), c.to_string(), num(*r)])
        .collect();
    ctx.out.write_csv(
        &format!("{name}_weyl_counts.csv"),
        &["N", "count", "residual"],
        &rows,
    )?;
    let report = json!({ "map": cfg.map, "open": cfg.open, "fit": fit });
    ctx.out
        .write_json(&format!("{name}_weyl_fit.json"), &report)?;
    info!(
        "weyl: slope {:.4}, d/2 = {:.4}",
        fit.slope, fit.reference_slope
    );
    Ok(json!({ "slope": fit.slope, "reference_slope": fit.reference_slope }))
}

/// Periodic orbits avoiding the opening, up to `l_max`.
pub fn orbits(cfg: &ExperimentConfig, ctx: &mut Context) -> Result<Value, CliError> {
    let strip: OpeningStrip = cfg.require_opening()?;
    let l_max = cfg.l_max.unwrap_or(6);
    let orbits = ctx.timer.time("orbit enumeration", || {
        enumerate_orbits(&MapSpec::new(cfg.map), l_max, &strip)
    })?;
    let records: Vec<OrbitRecord> = orbits.iter().map(|o| o.record()).collect();
    let modes: usize = orbits
        .iter()
        .filter(|o| o.identified_with().is_none())
        .map(|o| o.period())
        .sum();
    ctx.out.write_json(
        &format!("{}_orbits_L{l_max}.json", cfg.map.name()),
        &records,
    )?;
    Ok(json!({ "l_max": l_max, "orbits": records.len(), "modes": modes }))
}

/// Box counts of the trapped set and the fitted dimension.
pub fn dimension(cfg: &ExperimentConfig, ctx: &mut Context) -> Result<Value, CliError> {
    let strip = cfg.require_opening()?;
    let map = MapSpec::new(cfg.map);
    let counts = ctx.timer.time("box counting", || {
        box_counts(&map, &strip, cfg.horizon, &cfg.depths)
    })?;
    let d = dimension_from_counts(&counts);
    let mut report = json!({
        "map": cfg.map, "open": cfg.open, "horizon": cfg.horizon, "counts": counts, "dimension": d,
    });
    if cfg.map == MapKind::Baker {
        report["cantor_product_dimension"] = json!(2.0 * 2f64.ln() / 3f64.ln());
    }
    ctx.out
        .write_json(&format!("{}_dimension.json", cfg.map.name()), &report)?;
    Ok(json!({ "dimension": d }))
}
