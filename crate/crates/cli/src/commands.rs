use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use tandyn_core::family::{critical_point, multiplier, normalize_lambda, HalfPlane};
use tandyn_core::plane::{grid_metadata, render_pgm};
use tandyn_core::{
    classify_grid, critical_points, iterate, render_ppm, run_all, write_report, Alpha, ClassifiedGrid, ComplexValue,
    GridSpec, MapParams, OrbitStatus, ScenarioSpec, Verdict,
};

use crate::config::{MapInput, RunConfig};
use crate::error::{CliError, Result};

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn cnum(z: ComplexValue) -> String {
    format!("{} {}", num(z.re), num(z.im))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(CliError::io(path))
}

pub fn cmd_points(cfg: &RunConfig, k_max: i64, as_json: bool) -> Result<String> {
    let p = cfg.params()?;
    let lattice = p.lattice().ok();
    let ks = -k_max..=k_max;
    let fixed: Option<Vec<(i64, ComplexValue)>> = lattice.map(|l| ks.clone().map(|k| (k, l.point(k))).collect());
    let crit = critical_points(&p, ks);
    let is_critical = |z: ComplexValue| crit.iter().any(|c| (c.point - z).norm() < 1e-12);

    if as_json {
        let value = json!({
            "lambda": [p.lambda().re, p.lambda().im],
            "m": p.m(),
            "regime": p.regime().to_string(),
            "multiplier": [multiplier(p.lambda()).re, multiplier(p.lambda()).im],
            "fixed_points": fixed.as_ref().map(|f| f.iter().map(|&(k, z)| json!({
                "k": k, "point": [z.re, z.im], "critical": is_critical(z),
            })).collect::<Vec<_>>()),
            "critical_points": crit.iter().map(|c| json!({
                "k": c.k,
                "half_plane": format!("{:?}", c.half_plane),
                "point": [c.point.re, c.point.im],
                "value": [c.value.re, c.value.im],
            })).collect::<Vec<_>>(),
        });
        return Ok(serde_json::to_string_pretty(&value)? + "\n");
    }

    let mut out = String::new();
    let _ = writeln!(out, "lambda {}", cnum(p.lambda()));
    let _ = writeln!(out, "m {}", p.m());
    let _ = writeln!(out, "regime {}", p.regime());
    let _ = writeln!(out, "multiplier {}", cnum(multiplier(p.lambda())));
    match &fixed {
        Some(points) => {
            let _ = writeln!(out, "fixed points");
            for &(k, z) in points {
                let mark = if is_critical(z) { " critical" } else { "" };
                let _ = writeln!(out, "  {k:>3} {}{mark}", cnum(z));
            }
        }
        None => {
            let _ = writeln!(out, "fixed points none");
        }
    }
    let _ = writeln!(out, "critical points and values");
    for c in &crit {
        let half = match c.half_plane {
            HalfPlane::Lower => "lower",
            HalfPlane::Upper => "upper",
        };
        let _ = writeln!(out, "  {:>3} {half} {} -> {}", c.k, cnum(c.point), cnum(c.value));
    }
    Ok(out)
}

pub fn cmd_orbit(cfg: &RunConfig, z0: ComplexValue, csv: Option<&Path>) -> Result<String> {
    let p = cfg.params()?;
    let b = cfg.budget(&p)?;
    let t = iterate(&p, z0, &b);
    if let Some(path) = csv {
        let mut text = String::from("n,raw_re,raw_im,det_re,det_im\n");
        for (n, (r, d)) in t.raw.iter().zip(&t.detrended).enumerate() {
            let _ = writeln!(text, "{n},{},{},{},{}", num(r.re), num(r.im), num(d.re), num(d.im));
        }
        write_file(path, text.as_bytes())?;
    }
    let mut out = String::new();
    let _ = writeln!(out, "status {:?}", t.status);
    let _ = writeln!(out, "steps {}", t.steps_used);
    let _ = writeln!(out, "seed {}", cnum(z0));
    let _ = writeln!(out, "last_raw {}", cnum(*t.raw.last().unwrap()));
    let _ = writeln!(out, "last_detrended {}", cnum(t.last_detrended()));
    Ok(out)
}

/// Three lattice columns of the lower half-plane, starting half a period
/// left of the principal fixed point.
pub fn default_window(p: &MapParams) -> GridSpec {
    let left = p.lattice().map(|l| l.point(0).re - FRAC_PI_2).unwrap_or(-FRAC_PI_2);
    GridSpec {
        re_min: left,
        re_max: left + 3.0 * PI,
        im_min: -3.0,
        im_max: 0.0,
        nx: 1000,
        ny: 1000,
    }
}

pub fn render_grid(cfg: &RunConfig, p: &MapParams, g: &GridSpec) -> Result<ClassifiedGrid> {
    let b = cfg.budget(p)?;
    Ok(classify_grid(p, g, &b, cfg.workers)?)
}

pub fn cmd_render(cfg: &RunConfig, name: &str, kmap: bool) -> Result<String> {
    let p = cfg.params()?;
    let g = cfg.grid.unwrap_or_else(|| default_window(&p));
    let cg = render_grid(cfg, &p, &g)?;
    let dir = cfg.create_out()?;
    let ppm = dir.join(format!("{name}.ppm"));
    write_file(&ppm, &render_ppm(&cg, cfg.palette))?;
    let meta = dir.join(format!("{name}.json"));
    let mut sidecar = serde_json::to_vec_pretty(&grid_metadata(&cg, cfg.palette))?;
    sidecar.push(b'\n');
    write_file(&meta, &sidecar)?;
    let mut out = format!("wrote {}\nwrote {}\n", ppm.display(), meta.display());
    if kmap {
        let pgm = dir.join(format!("{name}_k.pgm"));
        write_file(&pgm, &render_pgm(&cg))?;
        let _ = writeln!(out, "wrote {}", pgm.display());
    }
    Ok(out)
}

#[derive(Serialize)]
struct IndexEntry {
    name: String,
    file: String,
    overall: Verdict,
}

/// Scenario list: a spec file, or the defaults filtered by `theorem`, with
/// map inputs, budget and grid overridden from the config.
pub fn scenarios(cfg: &RunConfig, spec_file: Option<&Path>, theorem: Option<u8>) -> Result<Vec<ScenarioSpec>> {
    let mut specs = match spec_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(CliError::io(path))?;
            serde_json::from_str::<Vec<ScenarioSpec>>(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => {
            // Default windows are built around the requested shift and
            // rational rotation number.
            let m = cfg.m.unwrap_or(1);
            let alpha = match cfg.map {
                Some(MapInput::Alpha(a @ Alpha::Rational { .. })) => a,
                _ => Alpha::rational(1, 8)?,
            };
            vec![
                ScenarioSpec::theorem1(m),
                ScenarioSpec::theorem2(m),
                ScenarioSpec::theorem3(alpha, m),
                ScenarioSpec::theorem4(m),
            ]
        }
    };
    if let Some(t) = theorem {
        if !(1..=4).contains(&t) {
            return Err(CliError::Usage(format!("theorem must be 1 to 4, got {t}")));
        }
        specs.retain(|s| s.theorem as u8 + 1 == t);
    }
    for s in &mut specs {
        if let Some(m) = cfg.m {
            s.m = m;
        }
        match cfg.map {
            Some(MapInput::Lambda(l)) => {
                let (l, m) = normalize_lambda(l, s.m)?;
                s.lambda = Some([l.re, l.im]);
                s.alpha = None;
                s.m = m;
            }
            Some(MapInput::Alpha(a)) => {
                s.lambda = None;
                s.alpha = Some(a);
            }
            None => {}
        }
        if let Some(n) = cfg.max_iter {
            s.budget.max_iter = n;
        }
        if let Some(g) = cfg.grid {
            s.grid = g;
        }
    }
    Ok(specs)
}

/// Returns the printed summary and whether every report passed.
pub fn cmd_verify(cfg: &RunConfig, specs: &[ScenarioSpec]) -> Result<(String, bool)> {
    let reports = run_all(specs)?;
    let dir = cfg.create_out()?;
    let mut out = String::new();
    let mut index = Vec::new();
    for r in &reports {
        let file = format!("{}.json", r.scenario.name);
        write_file(&dir.join(&file), &write_report(r)?)?;
        let _ = writeln!(out, "{} {:?}", r.scenario.name, r.overall);
        for c in &r.checks {
            let _ = writeln!(out, "  {} {:?}", c.name, c.verdict);
        }
        index.push(IndexEntry {
            name: r.scenario.name.clone(),
            file,
            overall: r.overall,
        });
    }
    let generated = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut text = serde_json::to_vec_pretty(&json!({ "generated_unix": generated, "reports": index }))?;
    text.push(b'\n');
    write_file(&dir.join("index.json"), &text)?;
    let all_pass = reports.iter().all(|r| r.overall == Verdict::Pass);
    Ok((out, all_pass))
}

/// Parameter samples of an atlas sweep.
pub fn atlas_samples(radii: &[f64], args: usize, alphas: &[Alpha], m: i64) -> Result<Vec<MapParams>> {
    let mut out = Vec::new();
    for &r in radii {
        for j in 0..args {
            let theta = 2.0 * PI * j as f64 / args as f64;
            let l = (Complex64::from_polar(r, theta) - 2.0).sqrt();
            let (l, m) = normalize_lambda(l, m)?;
            out.push(MapParams::new(l, m, None)?);
        }
    }
    for &a in alphas {
        out.push(MapParams::from_alpha(a, m)?);
    }
    Ok(out)
}

fn status_label(s: &OrbitStatus) -> String {
    match *s {
        OrbitStatus::ConvergedInterior { k } => format!("ConvergedInterior(k={k})"),
        OrbitStatus::ParabolicBoundary { k } => format!("ParabolicBoundary(k={k})"),
        OrbitStatus::PoleAdjacent { step } => format!("PoleAdjacent(step={step})"),
        other => format!("{other:?}"),
    }
}

/// One CSV row per sample; the verdict is the fate of the lower critical
/// orbit.
pub fn cmd_atlas(cfg: &RunConfig, samples: &[MapParams], thumbnails: Option<usize>) -> Result<String> {
    let dir = cfg.create_out()?;
    let mut csv = String::from("lambda_re,lambda_im,m,regime,fp_re,fp_im,verdict\n");
    for (i, p) in samples.iter().enumerate() {
        let b = cfg.budget(p)?;
        let status = iterate(p, critical_point(0, HalfPlane::Lower), &b).status;
        let (fp_re, fp_im) = match p.lattice() {
            Ok(l) => (num(l.point(0).re), num(l.point(0).im)),
            Err(_) => ("none".into(), "none".into()),
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{fp_re},{fp_im},{}",
            num(p.lambda().re),
            num(p.lambda().im),
            p.m(),
            p.regime().name(),
            status_label(&status),
        );
        if let Some(n) = thumbnails {
            let g = GridSpec {
                nx: n,
                ny: n,
                ..default_window(p)
            };
            let cg = render_grid(cfg, p, &g)?;
            write_file(&dir.join(format!("atlas_{i:03}.ppm")), &render_ppm(&cg, cfg.palette))?;
        }
    }
    let path = dir.join("atlas.csv");
    write_file(&path, csv.as_bytes())?;
    Ok(format!("wrote {} ({} rows)\n", path.display(), samples.len()))
}
