//! Stage orchestration: field, fixed points, families, the aperiodic-area test,
//! periods, spectrum, then optional validation.

use std::time::Instant;

use eulerspec_core::field::load_grid_file;
use eulerspec_core::lab::{
    bounded_regions, coarea_check, discretize_k, discretize_l0, operator_diagnostics, weyl_residual,
    DiagnosticsOptions, Grid2D, OperatorReport, TestFunction, WeylPacket, WeylResult, DIMENSION_CAP,
};
use eulerspec_core::period::sample_period_function;
use eulerspec_core::spectrum::{assemble_spectrum, gap_report, unit_circle_predicate, Shape, SpectrumOptions};
use eulerspec_core::topology::{build_index_set, find_fixed_points, hypothesis_h};
use eulerspec_core::{make_builtin_flow, DomainSpec, PeriodFunction, Scales, StreamField};

use crate::config::{FlowSpec, RunConfig, Validation};
use crate::error::{CliError, CliResult};
use crate::report::{Check, FieldSummary, Provenance, RunReport, RunStatus, StageRecord, StageStatus, Warning};

pub const SKEW_TOL: f64 = 1e-10;
/// Masked cells at curved boundaries.
pub const SKEW_TOL_CURVED: f64 = 1e-6;
pub const ZERO_MEAN_TOL: f64 = 1e-8;
pub const REAL_PART_TOL: f64 = 1e-8;
pub const COAREA_TOL: f64 = 1e-3;
pub const WEYL_DECAY: f64 = 0.7;
pub const WEYL_CERTIFY: f64 = 0.05;
pub const WEYL_EXACT: f64 = 1e-8;
pub const HYPOTHESIS_FRACTION: f64 = 0.02;
pub const PROBES: usize = 100;
/// Tube centres as fractions of the region and their wavenumbers.
const WEYL_PAIRS: [(f64, i64); 5] = [(0.2, 1), (0.4, 1), (0.5, 1), (0.6, 2), (0.8, 2)];

pub fn build_field(flow: &FlowSpec) -> CliResult<StreamField> {
    Ok(match flow {
        FlowSpec::Catalog { id, params } => make_builtin_flow(id, params)?,
        FlowSpec::Grid { path, domain } => load_grid_file(path, domain.clone())?,
    })
}

struct Runner {
    report: RunReport,
    failed: bool,
}

impl Runner {
    /// Run `f` as a named stage unless an earlier stage failed.
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> CliResult<T>) -> Option<T> {
        if self.failed {
            self.report.stages.push(StageRecord {
                name: name.into(),
                status: StageStatus::Skipped,
                seconds: 0.0,
                error: None,
            });
            return None;
        }
        let t = Instant::now();
        let out = f();
        let seconds = t.elapsed().as_secs_f64();
        match out {
            Ok(v) => {
                self.report.stages.push(StageRecord { name: name.into(), status: StageStatus::Ok, seconds, error: None });
                Some(v)
            }
            Err(e) => {
                self.failed = true;
                self.report.stages.push(StageRecord {
                    name: name.into(),
                    status: StageStatus::Failed,
                    seconds,
                    error: Some(e.to_string()),
                });
                None
            }
        }
    }

    fn warn(&mut self, stage: &str, message: impl Into<String>) {
        self.report.warnings.push(Warning { stage: stage.into(), message: message.into() });
    }
}

fn empty_report(cfg: &RunConfig) -> RunReport {
    RunReport {
        provenance: Provenance {
            tool: "eulerspec".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash(),
            config: RunConfig { output_dir: None, ..cfg.clone() },
        },
        status: RunStatus::Failure,
        stages: Vec::new(),
        field: None,
        fixed_points: None,
        index_set: None,
        hypothesis_h: None,
        period_functions: None,
        spectrum: None,
        gap_report: None,
        unit_circle: None,
        operator_report: None,
        checks: Vec::new(),
        warnings: Vec::new(),
    }
}

/// Field through spectrum. Writes the output files when the config names a
/// directory.
pub fn run_analyze(cfg: &RunConfig) -> CliResult<RunReport> {
    let report = run(cfg, false)?;
    write_if_requested(cfg, &report)?;
    Ok(report)
}

/// Analysis plus the validation checks at `cfg.validation`.
pub fn run_validate(cfg: &RunConfig) -> CliResult<RunReport> {
    if cfg.validation == Validation::Off {
        return Err(CliError::Config("validation level is off".into()));
    }
    let report = run(cfg, true)?;
    write_if_requested(cfg, &report)?;
    Ok(report)
}

fn write_if_requested(cfg: &RunConfig, report: &RunReport) -> CliResult<()> {
    if let Some(dir) = &cfg.output_dir {
        crate::output::write_outputs(report, dir)?;
    }
    Ok(())
}

fn run(cfg: &RunConfig, validate: bool) -> CliResult<RunReport> {
    cfg.validate()?;
    // Dense kernels run sequentially so results do not depend on the
    // worker count.
    faer::set_global_parallelism(faer::Par::Seq);
    let tol = cfg.resolved_tolerances()?;
    let res = cfg.resolution;
    let mut r = Runner { report: empty_report(cfg), failed: false };

    let field = r.stage("field", || {
        let f = build_field(&cfg.flow)?;
        let scales = f.scales(&tol);
        let tangency = if f.domain.has_boundary() { Some(f.boundary_tangency_residual(256)?) } else { None };
        Ok((f, scales, tangency))
    });
    if let Some((f, s, t)) = &field {
        r.report.field = Some(summary(&f.domain, s, *t));
    }

    let fps = r.stage("fixed_points", || {
        let (f, ..) = field.as_ref().expect("field stage succeeded");
        Ok(find_fixed_points(f, res.scan, &tol)?)
    });
    if let Some(fps) = &fps {
        if !fps.unresolved_cells.is_empty() {
            r.warn("fixed_points", format!("{} scan cells unresolved", fps.unresolved_cells.len()));
        }
    }

    let index = r.stage("index_set", || {
        let (f, s, _) = field.as_ref().expect("field stage succeeded");
        Ok(build_index_set(f, fps.as_ref().expect("scan succeeded"), res.index, s)?)
    });
    if let Some(ix) = &index {
        for d in ix.diagnostics.clone() {
            r.warn("index_set", d);
        }
    }

    let hyp = r.stage("hypothesis_h", || {
        let (f, s, _) = field.as_ref().expect("field stage succeeded");
        Ok(hypothesis_h(f, fps.as_ref().expect("scan succeeded"), res.hypothesis, s))
    });

    let pfs = r.stage("periods", || {
        let (f, s, _) = field.as_ref().expect("field stage succeeded");
        let ix = index.as_ref().expect("index stage succeeded");
        if ix.families.is_empty() {
            return Err(CliError::Core(eulerspec_core::Error::Empty("no periodic-orbit families".into())));
        }
        ix.families
            .iter()
            .map(|fam| sample_period_function(f, fam, res.period_samples, s).map_err(CliError::from))
            .collect::<CliResult<Vec<PeriodFunction>>>()
    });
    if let Some(pfs) = &pfs {
        for pf in pfs {
            for n in &pf.notes {
                r.warn("periods", format!("family {}: {n}", pf.family));
            }
        }
    }

    let spectrum_opts = SpectrumOptions {
        isochronous_tol: tol.isochronous_tol,
        aperiodic_positive_measure: hyp.as_ref().is_some_and(|h| !h.satisfied),
    };
    let spec = r.stage("spectrum", || {
        let pfs = pfs.as_ref().expect("period stage succeeded");
        let spec = assemble_spectrum(pfs, cfg.window, &spectrum_opts)?;
        let gaps = match spec.shape {
            Shape::FullLine => None,
            _ => Some(gap_report(&spec, &spectrum_opts)?),
        };
        let unit = unit_circle_predicate(pfs, tol.isochronous_tol)?;
        Ok((spec, gaps, unit))
    });
    if let Some((s, _, _)) = &spec {
        for n in s.notes.clone() {
            r.warn("spectrum", n);
        }
    }

    if validate {
        let out = r.stage("validation", || {
            let (f, s, _) = field.as_ref().expect("field stage succeeded");
            let ix = index.as_ref().expect("index stage succeeded");
            let pfs = pfs.as_ref().expect("period stage succeeded");
            Ok(validation(cfg, f, s, &ix.families, pfs, hyp.as_ref()))
        });
        if let Some((op, checks, notices)) = out {
            r.report.operator_report = Some(op);
            r.report.checks = checks;
            for n in notices {
                r.warn("validation", n);
            }
        }
    }

    let Runner { mut report, failed } = r;
    report.fixed_points = fps;
    report.index_set = index;
    report.hypothesis_h = hyp;
    if let Some((s, g, u)) = spec {
        report.spectrum = Some(s);
        report.gap_report = g;
        report.unit_circle = Some(u);
    }
    report.period_functions = pfs;
    report.status = if failed {
        RunStatus::Failure
    } else if report.flagged_samples() > 0 || report.checks.iter().any(|c| !c.passed) {
        RunStatus::Partial
    } else {
        RunStatus::Success
    };
    if report.flagged_samples() > 0 {
        report.warnings.push(Warning {
            stage: "periods".into(),
            message: format!("{} period samples failed the method cross-check", report.flagged_samples()),
        });
    }
    Ok(report)
}

fn summary(domain: &DomainSpec, s: &Scales, tangency: Option<f64>) -> FieldSummary {
    FieldSummary {
        domain: domain.clone(),
        area: domain.area(),
        diameter: s.diameter,
        oscillation: s.oscillation,
        median_speed: s.median_speed,
        boundary_tangency_residual: tangency,
    }
}

fn curved(domain: &DomainSpec) -> bool {
    matches!(domain, DomainSpec::Disk { .. } | DomainSpec::Annulus { .. })
}

/// Operator checks, co-area identity, the aperiodic-area test and, at the full
/// level, spectra and Weyl packets. Failures become failed checks; nothing
/// here aborts the run.
fn validation(
    cfg: &RunConfig,
    field: &StreamField,
    scales: &Scales,
    families: &[eulerspec_core::OrbitFamily],
    pfs: &[PeriodFunction],
    hyp: Option<&eulerspec_core::topology::HypothesisReport>,
) -> (OperatorReport, Vec<Check>, Vec<String>) {
    let mut checks = Vec::new();
    let mut notices = Vec::new();
    let mut op = OperatorReport::default();
    let n = cfg.resolution.operator_grid;
    let full = cfg.validation == Validation::Full;

    if let Some(h) = hyp {
        checks.push(Check {
            name: "hypothesis_h".into(),
            value: h.refined_fraction,
            threshold: HYPOTHESIS_FRACTION,
            passed: h.satisfied,
            detail: format!("aperiodic fraction {:.3e} at {}, {:.3e} at {}", h.fraction, h.n, h.refined_fraction, h.n_refined),
        });
    }

    match Grid2D::new(&field.domain, n, n) {
        Ok(grid) if grid.dimension() <= DIMENSION_CAP => {
            let ops = discretize_l0(field, &grid).and_then(|l0| Ok((l0, discretize_k(field, &grid)?)));
            match ops {
                Ok((l0, k)) => {
                    notices.extend(l0.notes.iter().map(|s| format!("L0: {s}")));
                    notices.extend(k.notes.iter().map(|s| format!("K: {s}")));
                    let opts = DiagnosticsOptions {
                        seed: cfg.seed,
                        probes: PROBES,
                        eigenvalues: full,
                        singular_values: if full { 64 } else { 0 },
                    };
                    op = operator_diagnostics(&l0, &k, &grid, &opts);
                    notices.extend(op.errors.iter().cloned());
                    operator_checks(&op, &field.domain, full, &mut checks);
                }
                Err(e) => checks.push(failed("operators", e.to_string())),
            }
        }
        Ok(grid) => notices.push(format!(
            "operator grid {n}x{n} has {} unknowns, above the cap {DIMENSION_CAP}: only the co-area check runs",
            grid.dimension()
        )),
        Err(e) => checks.push(failed("operators", e.to_string())),
    }

    let regions = bounded_regions(pfs);
    if regions.is_empty() {
        notices.push("no family with bounded periods: co-area check skipped".into());
    } else {
        for tf in TestFunction::ALL {
            match coarea_check(field, families, &regions, tf, cfg.resolution.coarea_grid, scales) {
                Ok(c) => {
                    checks.push(Check::below(
                        &format!("coarea_{}", tf.name()),
                        c.rel_error,
                        COAREA_TOL,
                        format!("lhs {:.10e}, rhs {:.10e}", c.lhs, c.rhs),
                    ));
                    op.coarea_error.push(c);
                }
                Err(e) => checks.push(failed(&format!("coarea_{}", tf.name()), e.to_string())),
            }
        }
    }

    if full {
        if let Some(region) = regions.first() {
            let pf = pfs.iter().find(|p| p.family == region.family).expect("region comes from a period function");
            let fam = &families[region.family];
            weyl_checks(field, fam, pf, (region.lo, region.hi), scales, &mut op.weyl_residuals, &mut checks);
        } else {
            notices.push("no family with bounded periods: Weyl packets skipped".into());
        }
    }
    (op, checks, notices)
}

fn failed(name: &str, detail: String) -> Check {
    Check { name: name.into(), value: f64::NAN, threshold: f64::NAN, passed: false, detail }
}

fn operator_checks(op: &OperatorReport, domain: &DomainSpec, full: bool, checks: &mut Vec<Check>) {
    let skew_tol = if curved(domain) { SKEW_TOL_CURVED } else { SKEW_TOL };
    checks.push(Check::below("l0_skewness", op.skewness_norm, skew_tol, format!("dimension {}", op.dimension)));
    checks.push(Check::below(
        "k_zero_mean",
        op.zero_mean_residual,
        ZERO_MEAN_TOL,
        format!("max over {} probes", op.probes),
    ));
    if !full {
        return;
    }
    match op.max_real_part {
        Some(re) => checks.push(Check::below("l0_real_parts", re, REAL_PART_TOL, "max |Re lambda| of L0")),
        None => checks.push(failed("l0_real_parts", "no eigenvalues".into())),
    }
    match op.k_tail_ratio {
        Some(t) => checks.push(Check {
            name: "k_singular_decay".into(),
            value: t,
            threshold: 1.0,
            passed: t < 1.0 && op.k_singular_values_monotone,
            detail: "sigma_32 / sigma_8 of K".into(),
        }),
        None if op.k_singular_values.first().is_some_and(|&s| s == 0.0) => checks.push(Check {
            name: "k_singular_decay".into(),
            value: 0.0,
            threshold: 1.0,
            passed: true,
            detail: "K = 0".into(),
        }),
        None => checks.push(failed("k_singular_decay", "fewer than 32 singular values".into())),
    }
}

/// Packets at five levels of the region with three tube widths each.
fn weyl_checks(
    field: &StreamField,
    fam: &eulerspec_core::OrbitFamily,
    pf: &PeriodFunction,
    (lo, hi): (f64, f64),
    scales: &Scales,
    out: &mut Vec<WeylResult>,
    checks: &mut Vec<Check>,
) {
    let isochronous = pf.t_hi.is_some_and(|h| (h - pf.t_lo) / pf.t_lo < scales.tol.isochronous_tol);
    for (frac, k) in WEYL_PAIRS {
        let rho = lo + frac * (hi - lo);
        let (a, b) = fam.psi_range;
        let delta0 = ((hi - lo) / 30.0).min(0.45 * (rho - a).min(b - rho));
        let name = format!("weyl_rho{rho:.6}_k{k}");
        let curve: Result<Vec<WeylResult>, _> = [1.0, 0.5, 0.25]
            .iter()
            .map(|s| weyl_residual(field, fam, &WeylPacket { family: pf.family, rho, k, delta: delta0 * s }, pf, scales))
            .collect();
        let curve = match curve {
            Ok(c) => c,
            Err(e) => {
                checks.push(failed(&name, e.to_string()));
                continue;
            }
        };
        out.extend(curve.iter().copied());
        if isochronous {
            let worst = curve.iter().map(|w| w.residual).fold(0.0, f64::max);
            checks.push(Check::below(&name, worst, WEYL_EXACT, "isochronous family: exact eigenfunctions"));
        } else {
            let ratio = curve.windows(2).map(|w| w[1].residual / w[0].residual).fold(0.0, f64::max);
            let finest = curve[2].residual / curve[2].lambda.abs();
            checks.push(Check {
                name,
                value: ratio,
                threshold: WEYL_DECAY,
                passed: ratio <= WEYL_DECAY && finest < WEYL_CERTIFY,
                detail: format!("worst halving ratio {ratio:.4}; finest residual / |lambda| {finest:.3e}"),
            });
        }
    }
}
