//! `forward`: solve the healthy and corroded problems for one injected
//! current and write the accessible-arc traces side by side.

use crate::config::ResolvedProblem;
use crate::error::AppError;
use crate::manifest::{create_out_dir, write_artifact, RunManifest, Stopwatch};
use corrobem::bem::{Discretization, ForwardSystem};
use corrobem::ntd::FourierBasis;
use std::io::Write;
use std::path::Path;

pub fn run(resolved: &ResolvedProblem, mode: Option<usize>, out: &Path) -> Result<(), AppError> {
    let spec = &resolved.spec;
    let mode = mode.unwrap_or(resolved.cfg.current.mode);
    let basis = FourierBasis::for_spec(spec, mode.max(1));
    let mut watch = Stopwatch::start();

    let disc = Discretization::new(spec)?;
    let healthy = ForwardSystem::healthy(&disc)?;
    let corroded = ForwardSystem::corroded(&disc)?;
    watch.lap("assemble");

    let g: Vec<f64> = disc.arc_n.nodes().iter().map(|n| basis.eval(mode, n.theta)).collect();
    let (_, trace_healthy) = healthy.solve_nodal(&g, None);
    let (_, trace_corroded) = corroded.solve_nodal(&g, None);
    watch.lap("solve");

    let mut csv = Vec::new();
    writeln!(csv, "theta,x,y,g,healthy,corroded,gap")?;
    for (i, node) in disc.arc_n.nodes().iter().enumerate() {
        let u0 = trace_healthy.values[i];
        let u = trace_corroded.values[i];
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            node.theta,
            node.point.x,
            node.point.y,
            g[i],
            u0,
            u,
            u - u0
        )?;
    }

    create_out_dir(out)?;
    let mut manifest = RunManifest::new("forward", spec.fingerprint(), spec.descriptor());
    manifest.artifacts.push(write_artifact(out, "traces.csv", &csv)?);
    watch.lap("write");
    manifest.parameters = serde_json::json!({
        "mode": mode,
        "nf": spec.n_f,
        "basis_multiplier": basis.multiplier(),
        "condition_healthy": healthy.condition,
        "condition_corroded": corroded.condition,
        "rows": disc.arc_n.n_nodes(),
    });
    manifest.timings_ms = watch.timings;
    manifest.write(out)?;
    Ok(())
}
