//! Report files and plot series. Every CSV starts with a header row; nothing
//! is rendered.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use eulerspec_core::spectrum::Shape;
use eulerspec_core::SpectrumSet;

use crate::error::CliResult;
use crate::report::RunReport;

fn write(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> CliResult<()> {
    let p = dir.join(name);
    fs::write(&p, text)?;
    files.push(p);
    Ok(())
}

/// `family,rho,T,method,err_est,flagged`, both methods per sampled level.
pub fn periods_csv(report: &RunReport) -> String {
    let mut s = String::from("family,rho,T,method,err_est,flagged\n");
    for pf in report.period_functions.iter().flatten() {
        for l in &pf.levels {
            for p in [&l.ode, &l.contour] {
                let _ = writeln!(
                    s,
                    "{},{:.17e},{:.17e},{},{:.6e},{}",
                    pf.family,
                    p.rho,
                    p.period,
                    p.method.as_str(),
                    p.err_est,
                    l.flagged
                );
            }
        }
    }
    s
}

/// `kind,lo,hi,contributors` with contributors as `family:k` joined by `;`.
/// A full-line spectrum is a single sentinel row.
pub fn bands_csv(spec: Option<&SpectrumSet>) -> String {
    let mut s = String::from("kind,lo,hi,contributors\n");
    let Some(spec) = spec else { return s };
    let kind = match spec.shape {
        Shape::FullLine => {
            let _ = writeln!(s, "full_line,{:.17e},{:.17e},", -spec.window, spec.window);
            return s;
        }
        Shape::Lattice { .. } => "lattice",
        Shape::Bands => "band",
    };
    for b in &spec.bands {
        let c: Vec<String> = b.contributors.iter().map(|c| format!("{}:{}", c.family, c.k)).collect();
        let _ = writeln!(s, "{kind},{:.17e},{:.17e},{}", b.lo, b.hi, c.join(";"));
    }
    s
}

/// `lo,hi` of the gaps within the window.
pub fn gaps_csv(report: &RunReport) -> String {
    let mut s = String::from("lo,hi\n");
    for g in report.gap_report.iter().flat_map(|g| &g.gaps) {
        let _ = writeln!(s, "{:.17e},{:.17e}", g.lo, g.hi);
    }
    s
}

/// `report.json`, `periods.csv`, `bands.csv`, `gaps.csv`.
pub fn write_outputs(report: &RunReport, dir: &Path) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    write(dir, "report.json", &(serde_json::to_string_pretty(report)? + "\n"), &mut files)?;
    write(dir, "periods.csv", &periods_csv(report), &mut files)?;
    write(dir, "bands.csv", &bands_csv(report.spectrum.as_ref()), &mut files)?;
    write(dir, "gaps.csv", &gaps_csv(report), &mut files)?;
    Ok(files)
}

/// Plot series from a finished report:
///
/// - `period_family<i>.csv`: `rho,T_ode,T_contour,T_interp,flagged`
/// - `band_segments.csv`: `family,k,lo,hi`, one unmerged segment per `(family, k)`
/// - `gaps.csv`: `lo,hi`
/// - `weyl_residuals.csv`: `family,rho,k,delta,residual,lambda`
/// - `eigenvalues.csv`: `operator,re,im`
pub fn emit_plot_data(report: &RunReport, dir: &Path) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for pf in report.period_functions.iter().flatten() {
        let mut s = String::from("rho,T_ode,T_contour,T_interp,flagged\n");
        for l in &pf.levels {
            let _ = writeln!(
                s,
                "{:.17e},{:.17e},{:.17e},{:.17e},{}",
                l.rho,
                l.ode.period,
                l.contour.period,
                pf.period_at(l.rho),
                l.flagged
            );
        }
        write(dir, &format!("period_family{}.csv", pf.family), &s, &mut files)?;
    }

    let mut s = String::from("family,k,lo,hi\n");
    if let Some(spec) = &report.spectrum {
        let w = spec.window;
        for f in &spec.families {
            let Some(t_hi) = f.t_hi else {
                let _ = writeln!(s, "{},*,{:.17e},{:.17e}", f.family, -w, w);
                continue;
            };
            let mut k = 1i64;
            while TAU * k as f64 / t_hi <= w {
                let lo = TAU * k as f64 / t_hi;
                let hi = (TAU * k as f64 / f.t_lo).min(w);
                let _ = writeln!(s, "{},{},{:.17e},{:.17e}", f.family, -k, -hi, -lo);
                let _ = writeln!(s, "{},{},{:.17e},{:.17e}", f.family, k, lo, hi);
                k += 1;
            }
            let _ = writeln!(s, "{},0,0,0", f.family);
        }
    }
    write(dir, "band_segments.csv", &s, &mut files)?;
    write(dir, "gaps.csv", &gaps_csv(report), &mut files)?;

    let mut s = String::from("family,rho,k,delta,residual,lambda\n");
    let mut e = String::from("operator,re,im\n");
    if let Some(op) = &report.operator_report {
        for r in &op.weyl_residuals {
            let _ = writeln!(s, "{},{:.17e},{},{:.17e},{:.17e},{:.17e}", r.family, r.rho, r.k, r.delta, r.residual, r.lambda);
        }
        for (name, list) in [("L0", &op.eig_samples), ("L0+K", &op.eig_samples_full)] {
            for z in list {
                let _ = writeln!(e, "{name},{:.17e},{:.17e}", z.re, z.im);
            }
        }
    }
    write(dir, "weyl_residuals.csv", &s, &mut files)?;
    write(dir, "eigenvalues.csv", &e, &mut files)?;
    Ok(files)
}

/// Read a `report.json` written by [`write_outputs`].
pub fn read_report(path: &Path) -> CliResult<RunReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
