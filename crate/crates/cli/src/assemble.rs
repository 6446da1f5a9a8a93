//! `assemble`: build the Galerkin gap matrix between the healthy and
//! corroded Neumann-to-Dirichlet maps, archive it with provenance headers,
//! and dump the singular spectrum of its symmetric part.

use crate::config::ResolvedProblem;
use crate::error::AppError;
use crate::manifest::{create_out_dir, write_artifact, RunManifest, Stopwatch};
use corrobem::ntd::{assemble_gap_matrix, gap_svd, FourierBasis};
use std::io::Write;
use std::path::Path;

pub fn run(resolved: &ResolvedProblem, nb: Option<usize>, out: &Path) -> Result<(), AppError> {
    let spec = &resolved.spec;
    let order = nb.unwrap_or(resolved.cfg.basis.order);
    let basis = FourierBasis::for_spec(spec, order);
    let mut watch = Stopwatch::start();

    let gap = assemble_gap_matrix(spec, &basis)?;
    watch.lap("assemble");
    let svd = gap_svd(&gap);
    watch.lap("svd");

    let mut matrix_csv = Vec::new();
    gap.write_csv(&mut matrix_csv)?;
    let mut spectrum_csv = Vec::new();
    writeln!(spectrum_csv, "j,sigma")?;
    for (j, s) in svd.sigma.iter().enumerate() {
        writeln!(spectrum_csv, "{j},{s}")?;
    }

    create_out_dir(out)?;
    let mut manifest = RunManifest::new("assemble", spec.fingerprint(), spec.descriptor());
    manifest.artifacts.push(write_artifact(out, "gap_matrix.csv", &matrix_csv)?);
    manifest.artifacts.push(write_artifact(out, "spectrum.csv", &spectrum_csv)?);
    watch.lap("write");
    manifest.parameters = serde_json::json!({
        "order": order,
        "size": basis.len(),
        "nf": spec.n_f,
        "basis_multiplier": basis.multiplier(),
        "symmetry_defect": gap.symmetry_defect(),
        "spectrum_span": svd.spectrum_span(),
    });
    manifest.timings_ms = watch.timings;
    manifest.write(out)?;
    Ok(())
}
