//! `verify`: run the solver self-checks end to end on one configuration
//! and archive the reports. A failing check exits with code 5 after the
//! report is written, so CI can both gate on and inspect the result.

use crate::config::{default_probe, ResolvedProblem};
use crate::error::AppError;
use crate::manifest::{create_out_dir, write_artifact, RunManifest, Stopwatch};
use corrobem::diagnostics::{
    check_monotonicity, check_range_dichotomy, check_representation, check_selfadjoint_at,
    DiagnosticReport,
};
use corrobem::geometry::{CollocationNode, GammaCoeff, Point, ProblemSpec, RegionLabel};
use corrobem::ntd::{assemble_gap_matrix, assemble_rhs_table, gap_svd, FourierBasis};
use std::path::Path;

pub fn run(resolved: &ResolvedProblem, nb: Option<usize>, out: &Path) -> Result<(), AppError> {
    let spec = &resolved.spec;
    let vcfg = &resolved.cfg.verify;
    let order = nb.unwrap_or(resolved.cfg.basis.order);
    let basis = FourierBasis::for_spec(spec, order);
    let k = basis.multiplier();
    let mut watch = Stopwatch::start();
    let mut reports: Vec<DiagnosticReport> = Vec::new();

    let ladder = refinement_ladder(spec.n_f);
    reports.push(check_selfadjoint_at(spec, &basis, &ladder)?);
    watch.lap("selfadjoint");

    let probe = vcfg
        .probe
        .map(|[x, y]| Point::new(x, y))
        .or_else(|| default_probe(resolved.example))
        .ok_or_else(|| {
            AppError::Config("custom geometry needs [verify].probe in the config file".into())
        })?;
    let mode = resolved.cfg.current.mode.max(1) as f64;
    reports.push(check_representation(spec, |n| (k * mode * n.theta).cos(), &probe)?);
    watch.lap("representation");

    let [lo, hi] = vcfg.gamma_pair;
    let spec_lo = spec.clone().with_gamma(GammaCoeff::Constant(lo))?;
    let spec_hi = spec.clone().with_gamma(GammaCoeff::Constant(hi))?;
    let currents: Vec<_> = (1..=vcfg.currents.max(1))
        .map(|n| move |node: &CollocationNode| (k * n as f64 * node.theta).cos())
        .collect();
    reports.push(check_monotonicity(&spec_hi, &spec_lo, &currents)?);
    reports.push(check_monotonicity(&spec_lo, &spec_hi, &currents)?);
    watch.lap("monotonicity");

    let (inside, outside) = dichotomy_probes(spec, vcfg.probes_per_class.max(1));
    if inside.is_empty() || outside.is_empty() {
        return Err(AppError::Config(
            "region test yields no probes for the range dichotomy".into(),
        ));
    }
    let gap = assemble_gap_matrix(spec, &basis)?;
    let svd = gap_svd(&gap);
    let all: Vec<Point> = inside.iter().chain(&outside).copied().collect();
    let rhs = assemble_rhs_table(spec, &basis, &all)?;
    let t0 = 3.min(basis.len().saturating_sub(1)).max(1);
    reports.push(check_range_dichotomy(&svd, &rhs, &inside, &outside, &[t0, basis.len()])?);
    watch.lap("dichotomy");

    let all_pass = reports.iter().all(|r| r.pass);
    let report_json = serde_json::to_vec_pretty(&serde_json::json!({
        "pass": all_pass,
        "checks": reports,
    }))?;

    create_out_dir(out)?;
    let mut manifest = RunManifest::new("verify", spec.fingerprint(), spec.descriptor());
    manifest.artifacts.push(write_artifact(out, "verify.json", &report_json)?);
    manifest.parameters = serde_json::json!({
        "order": order,
        "nf": spec.n_f,
        "resolutions": ladder,
        "gamma_pair": vcfg.gamma_pair,
        "currents": vcfg.currents,
        "probe": [probe.x, probe.y],
        "dichotomy_probes": [inside.len(), outside.len()],
    });
    manifest.timings_ms = watch.timings;
    manifest.write(out)?;

    for r in &reports {
        let status = if r.pass { "pass" } else { "FAIL" };
        println!("{:16} {} defect={:.3e} tol={:.1e}", r.check, status, r.defect, r.tolerance);
    }
    if all_pass {
        Ok(())
    } else {
        let failed: Vec<&str> =
            reports.iter().filter(|r| !r.pass).map(|r| r.check).collect();
        Err(AppError::Diagnostics(failed.join(", ")))
    }
}

/// Quarter, half and full resolution, deduplicated, floored so the coarse
/// pass still resolves every corner.
fn refinement_ladder(n_f: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = vec![(n_f / 4).max(12), (n_f / 2).max(12), n_f.max(12)];
    steps.dedup();
    steps
}

/// Cell centers of a coarse scan classified by the region test, thinned to
/// `per_class` spread picks per class.
fn dichotomy_probes(spec: &ProblemSpec, per_class: usize) -> (Vec<Point>, Vec<Point>) {
    let bounds = spec.imaging_bounds();
    let n = 21;
    let mut corroded = Vec::new();
    let mut healthy = Vec::new();
    for iy in 0..n {
        for ix in 0..n {
            let fx = (ix as f64 + 0.5) / n as f64;
            let fy = (iy as f64 + 0.5) / n as f64;
            let p = Point::new(
                bounds[0][0] + (bounds[0][1] - bounds[0][0]) * fx,
                bounds[1][0] + (bounds[1][1] - bounds[1][0]) * fy,
            );
            match spec.region_test.classify(&p) {
                RegionLabel::Corroded => corroded.push(p),
                RegionLabel::Healthy => healthy.push(p),
                _ => {}
            }
        }
    }
    (thin(corroded, per_class), thin(healthy, per_class))
}

fn thin(points: Vec<Point>, take: usize) -> Vec<Point> {
    if points.len() <= take {
        return points;
    }
    let step = points.len() as f64 / take as f64;
    (0..take).map(|i| points[(i as f64 * step) as usize]).collect()
}
