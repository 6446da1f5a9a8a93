//! `image`: sweep the sampling indicator over a grid, cut it at a level,
//! and write the field, the mask contour, the reconstruction scores and a
//! gnuplot script that renders them.

use crate::config::{default_level, MethodName, ResolvedProblem};
use crate::error::AppError;
use crate::manifest::{create_out_dir, write_artifact, RunManifest, Stopwatch};
use corrobem::imaging::{
    extract_mask, fm_indicator, lsm_indicator, score_reconstruction, ImagingGrid, IndicatorMethod,
    Regularization,
};
use corrobem::ntd::{assemble_gap_matrix, assemble_rhs_table, gap_svd, FourierBasis};
use std::path::Path;

pub struct ImageArgsResolved {
    pub nb: Option<usize>,
    pub method: Option<MethodName>,
    pub sv_threshold: Option<f64>,
    pub alpha: Option<f64>,
    pub level: Option<f64>,
    pub grid: Option<(usize, usize)>,
}

pub fn run(resolved: &ResolvedProblem, args: &ImageArgsResolved, out: &Path) -> Result<(), AppError> {
    let spec = &resolved.spec;
    let cfg = &resolved.cfg.imaging;
    let order = args.nb.unwrap_or(resolved.cfg.basis.order);
    let method = args
        .method
        .or(cfg.method)
        .map(MethodName::to_method)
        .unwrap_or(IndicatorMethod::FmReg);
    let (nx, ny) = args.grid.unwrap_or((cfg.grid[0], cfg.grid[1]));
    let sv_threshold = args.sv_threshold.unwrap_or(cfg.sv_threshold);
    let alpha = args.alpha.unwrap_or(cfg.alpha);
    let level = args
        .level
        .or(cfg.level)
        .or_else(|| default_level(resolved.example, method, spec));

    let basis = FourierBasis::for_spec(spec, order);
    let mut watch = Stopwatch::start();

    let gap = assemble_gap_matrix(spec, &basis)?;
    watch.lap("assemble");
    let grid = ImagingGrid::for_spec(spec, nx, ny)?;
    let rhs = assemble_rhs_table(spec, &basis, grid.points())?;
    watch.lap("rhs_table");

    let field = match method {
        IndicatorMethod::FmReg => {
            let svd = gap_svd(&gap);
            fm_indicator(&svd, &rhs, &grid, sv_threshold)
        }
        IndicatorMethod::LsmReg => lsm_indicator(&gap, &rhs, &grid, alpha),
    };
    let field = extract_mask(field, level.unwrap_or(f64::NEG_INFINITY));
    watch.lap("indicator");
    let score = score_reconstruction(&field, spec);

    let mut field_csv = Vec::new();
    field.write_csv(&mut field_csv)?;
    let mut contour_csv = Vec::new();
    field.write_contour_csv(&mut contour_csv)?;
    let metadata = field.metadata(&spec.fingerprint());
    let score_json =
        serde_json::to_vec_pretty(&serde_json::json!({ "score": score, "metadata": metadata }))?;
    let plot = plot_script(method, &field.regularization, level, resolved.example);

    create_out_dir(out)?;
    let mut manifest = RunManifest::new("image", spec.fingerprint(), spec.descriptor());
    manifest.artifacts.push(write_artifact(out, "field.csv", &field_csv)?);
    manifest.artifacts.push(write_artifact(out, "contours.csv", &contour_csv)?);
    manifest.artifacts.push(write_artifact(out, "score.json", &score_json)?);
    manifest.artifacts.push(write_artifact(out, "plot.gp", plot.as_bytes())?);
    watch.lap("write");
    manifest.parameters = serde_json::json!({
        "method": method.as_str(),
        "order": order,
        "grid": [nx, ny],
        "regularization": field.regularization,
        "level": level,
        "nf": spec.n_f,
        "auc": score.auc,
        "jaccard": score.jaccard,
    });
    manifest.timings_ms = watch.timings;
    manifest.write(out)?;
    Ok(())
}

fn plot_script(
    method: IndicatorMethod,
    reg: &Regularization,
    level: Option<f64>,
    example: Option<u8>,
) -> String {
    let reg_label = match reg {
        Regularization::SvThreshold(t) => format!("tau = {t:.1e}"),
        Regularization::Tikhonov(a) => format!("alpha = {a:.1e}"),
    };
    let level_label = match level {
        Some(l) => format!("level = {l}"),
        None => "no level cut".into(),
    };
    let example_label = match example {
        Some(id) => format!("example {id}"),
        None => "custom geometry".into(),
    };
    let mut s = String::new();
    s.push_str("# render with: gnuplot plot.gp\n");
    s.push_str("set terminal pngcairo size 900,800\n");
    s.push_str("set output 'field.png'\n");
    s.push_str("set datafile separator \",\"\n");
    s.push_str("set size ratio -1\n");
    s.push_str("set xlabel \"x\"\nset ylabel \"y\"\n");
    s.push_str(&format!(
        "set title \"{} indicator, {example_label}, {reg_label}, {level_label}\"\n",
        method.as_str()
    ));
    s.push_str("set palette defined (0 \"#2166ac\", 0.5 \"#f7f7f7\", 1 \"#b2182b\")\n");
    s.push_str(
        "plot \"field.csv\" skip 1 using 1:2:3 with image notitle, \\\n     \
         \"contours.csv\" skip 1 using 1:2 with lines lc rgb \"black\" lw 2 title \"mask\"\n",
    );
    s
}
