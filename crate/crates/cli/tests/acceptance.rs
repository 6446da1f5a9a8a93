//! Acceptance gate. One test per criterion; each prints a single
//! `criterion N: PASS/FAIL - ...` line (visible with `--nocapture`, or on
//! failure) and then asserts, so the suite both documents and enforces the
//! contract.
//!
//! Expensive spectral data is cached per example: the right-hand-side
//! table depends only on the healthy problem, so one table per example
//! serves every corrosion coefficient and both imaging methods.

use corrobem::bem::{Discretization, ForwardSystem, TraceField};
use corrobem::diagnostics::{
    check_monotonicity, check_range_dichotomy, check_representation, check_selfadjoint,
};
use corrobem::geometry::{
    make_example, BoundaryCurve, CollocationNode, CurveShape, GammaCoeff, Point, ProblemSpec,
    RegionLabel, RegionTest,
};
use corrobem::imaging::{
    extract_mask, fm_indicator, lsm_indicator, score_reconstruction, ImagingGrid, IndicatorField,
    RhsProvider,
};
use corrobem::ntd::{
    assemble_gap_matrix, assemble_rhs_table, gap_svd, FourierBasis, GapSVD, NtdGapMatrix, RhsTable,
};
use nalgebra::DVector;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

/// Panels per arc for the imaging-side criteria. The 100x100 grid is part
/// of the contract; the panel count is not, and 200 keeps every kit build
/// comfortably inside the runtime budget while matching the resolution the
/// Galerkin matrix is refinement-stable at.
const NF_IMAGING: usize = 200;
const BASIS_ORDER: usize = 16;
const GRID_N: usize = 100;

fn verdict(n: usize, pass: bool, detail: &str) -> String {
    let line = format!("criterion {n}: {} - {detail}", if pass { "PASS" } else { "FAIL" });
    println!("{line}");
    line
}

fn gamma_key(gamma: f64) -> u16 {
    (gamma * 10.0).round() as u16
}

/// Gap matrix and its singular system for one example and coefficient.
struct Kit {
    spec: ProblemSpec,
    gap: NtdGapMatrix,
    svd: GapSVD,
}

fn kit(example: u8, gamma: f64) -> Arc<Kit> {
    static CACHE: OnceLock<Mutex<HashMap<(u8, u16), Arc<Kit>>>> = OnceLock::new();
    let mut map = CACHE.get_or_init(|| Mutex::new(HashMap::new())).lock().unwrap();
    map.entry((example, gamma_key(gamma)))
        .or_insert_with(|| {
            let spec = make_example(example, NF_IMAGING)
                .unwrap()
                .with_gamma(GammaCoeff::Constant(gamma))
                .unwrap();
            let basis = FourierBasis::for_spec(&spec, BASIS_ORDER);
            let gap = assemble_gap_matrix(&spec, &basis).unwrap();
            let svd = gap_svd(&gap);
            Arc::new(Kit { spec, gap, svd })
        })
        .clone()
}

/// Imaging grid and coefficient-independent source table per example.
fn grid_rhs(example: u8) -> Arc<(ImagingGrid, RhsTable)> {
    static CACHE: OnceLock<Mutex<HashMap<u8, Arc<(ImagingGrid, RhsTable)>>>> = OnceLock::new();
    let mut map = CACHE.get_or_init(|| Mutex::new(HashMap::new())).lock().unwrap();
    map.entry(example)
        .or_insert_with(|| {
            let spec = make_example(example, NF_IMAGING).unwrap();
            let basis = FourierBasis::for_spec(&spec, BASIS_ORDER);
            let grid = ImagingGrid::for_spec(&spec, GRID_N, GRID_N).unwrap();
            let rhs = assemble_rhs_table(&spec, &basis, grid.points()).unwrap();
            Arc::new((grid, rhs))
        })
        .clone()
}

// --- criterion 1: manufactured forward solution ---------------------------

/// Disk of radius 2, upper semicircle accessible, lower buried; the
/// diameter stands in for the corroded arc and never enters a healthy
/// solve. u*(x,y) = xy is harmonic with known mixed data.
fn disk_spec(n_f: usize) -> ProblemSpec {
    let origin = Point::new(0.0, 0.0);
    let gn =
        BoundaryCurve::new(CurveShape::CircleArc { center: origin, radius: 2.0 }, (0.0, PI), n_f)
            .unwrap();
    let gd = BoundaryCurve::new(
        CurveShape::CircleArc { center: origin, radius: 2.0 },
        (PI, 2.0 * PI),
        n_f,
    )
    .unwrap();
    let gc =
        BoundaryCurve::polyline(vec![Point::new(-2.0, 0.0), Point::new(2.0, 0.0)], n_f).unwrap();
    let circle: Vec<Point> = (0..64)
        .map(|i| 2.0 * PI * i as f64 / 64.0)
        .map(|t| Point::new(2.0 * t.cos(), 2.0 * t.sin()))
        .collect();
    ProblemSpec::new(
        gn,
        gd,
        gc,
        GammaCoeff::Constant(1.0),
        RegionTest::Sampled { outer: circle.clone(), healthy: circle },
        n_f,
        "disk r=2".into(),
    )
    .unwrap()
}

fn disk_error(n_f: usize) -> f64 {
    let spec = disk_spec(n_f);
    let disc = Discretization::new(&spec).unwrap();
    let sys = ForwardSystem::healthy(&disc).unwrap();
    let g: Vec<f64> = disc
        .arc_n
        .nodes()
        .iter()
        .map(|n| n.point.y * n.normal.x + n.point.x * n.normal.y)
        .collect();
    let dirichlet: Vec<f64> = disc.arc_d.nodes().iter().map(|n| n.point.x * n.point.y).collect();
    let (_, trace) = sys.solve_nodal(&g, Some(&dirichlet));
    let exact: Vec<f64> = disc.arc_n.nodes().iter().map(|n| n.point.x * n.point.y).collect();
    let diff = TraceField {
        arc: trace.arc.clone(),
        values: trace.values.clone() - DVector::from_vec(exact.clone()),
    };
    let reference = TraceField { arc: trace.arc.clone(), values: DVector::from_vec(exact) };
    diff.norm() / reference.norm()
}

/// Least-squares slope of ln(error) against ln(n_f), negated.
fn fitted_order(resolutions: &[usize], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = resolutions.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let var: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    -cov / var
}

#[test]
fn criterion_1_manufactured_solution_accuracy_and_order() {
    let resolutions = [75usize, 150, 300];
    let mut errors = Vec::new();
    let mut slowest = 0.0f64;
    for &n_f in &resolutions {
        let t0 = Instant::now();
        errors.push(disk_error(n_f));
        slowest = slowest.max(t0.elapsed().as_secs_f64());
    }
    let order = fitted_order(&resolutions, &errors);
    let pass = errors[2] <= 1e-6 && order >= 2.0 && slowest <= 60.0;
    let detail = format!(
        "rel L2 error {:.3e} at nf=300 (tol 1e-6), order {:.2} over {{75,150,300}} (>= 2), slowest solve {:.1}s (<= 60s)",
        errors[2], order, slowest
    );
    let line = verdict(1, pass, &detail);
    assert!(pass, "{line}");
}

// --- criterion 2: gap matrix becomes symmetric under refinement -----------

#[test]
fn criterion_2_symmetry_defect_decreases_under_refinement() {
    let spec = make_example(3, 300).unwrap();
    let basis = FourierBasis::for_spec(&spec, BASIS_ORDER);
    let report = check_selfadjoint(&spec, &basis).unwrap();
    let defects: Vec<f64> = report.quantities.iter().map(|q| q.value).collect();
    let decreasing = defects.windows(2).all(|w| w[1] < w[0]);
    let pass = report.pass && decreasing && report.defect <= 1e-2;
    let detail = format!(
        "symmetry defect {:.3e} -> {:.3e} -> {:.3e} over nf {{75,150,300}}, strictly decreasing, final <= 1e-2",
        defects[0], defects[1], defects[2]
    );
    let line = verdict(2, pass, &detail);
    assert!(pass, "{line}");
}

// --- criterion 3: intact object yields a vanishing gap --------------------

#[test]
fn criterion_3_zero_gap_for_intact_object() {
    let spec = make_example(3, 60).unwrap().degenerate();
    let basis = FourierBasis::for_spec(&spec, BASIS_ORDER);
    let gap = assemble_gap_matrix(&spec, &basis).unwrap();
    let disc = Discretization::new(&spec).unwrap();
    let healthy = ForwardSystem::healthy(&disc).unwrap();
    let scale = (0..basis.len())
        .map(|n| {
            let (_, trace) = healthy.solve(|node| basis.eval(n, node.theta));
            trace.norm()
        })
        .fold(0.0, f64::max);
    let norm = gap.matrix.norm();
    let pass = norm <= 1e-6 * scale;
    let detail =
        format!("||B||_F = {:.3e} vs healthy trace scale {:.3e} (ratio {:.1e}, tol 1e-6)", norm, scale, norm / scale);
    let line = verdict(3, pass, &detail);
    assert!(pass, "{line}");
}

// --- criterion 4: boundary representation of the data gap -----------------

#[test]
fn criterion_4_representation_formula_converges() {
    let probes = [Point::new(0.0, 0.5), Point::new(-0.4, 0.3), Point::new(0.5, 0.55)];
    let modes = [1usize, 2, 3];
    let mut worst = HashMap::new();
    let mut all_gated = true;
    for n_f in [150usize, 300] {
        let spec = make_example(3, n_f).unwrap();
        let k = FourierBasis::for_spec(&spec, 1).multiplier();
        let mut max_defect = 0.0f64;
        for z in &probes {
            for &m in &modes {
                let report = check_representation(
                    &spec,
                    move |node: &CollocationNode| (k * m as f64 * node.theta).cos(),
                    z,
                )
                .unwrap();
                if n_f == 300 {
                    all_gated &= report.pass;
                }
                max_defect = max_defect.max(report.defect);
            }
        }
        worst.insert(n_f, max_defect);
    }
    let pass = all_gated && worst[&300] <= 1e-2 && worst[&300] < worst[&150];
    let detail = format!(
        "max rel defect over 3 probes x 3 currents: {:.3e} at nf=150 -> {:.3e} at nf=300 (tol 1e-2, decreasing)",
        worst[&150], worst[&300]
    );
    let line = verdict(4, pass, &detail);
    assert!(pass, "{line}");
}

// --- criterion 5: monotonicity sandwich ------------------------------------

#[test]
fn criterion_5_monotonicity_in_the_coefficient() {
    let mut min_slack = f64::INFINITY;
    let mut all_pass = true;
    for example in [1u8, 2, 3] {
        let base = make_example(example, 150).unwrap();
        let lo = base.clone().with_gamma(GammaCoeff::Constant(0.5)).unwrap();
        let hi = base.with_gamma(GammaCoeff::Constant(2.0)).unwrap();
        let k = FourierBasis::for_spec(&lo, 1).multiplier();
        let currents: Vec<_> = (1..=5)
            .map(|n| move |node: &CollocationNode| (k * n as f64 * node.theta).cos())
            .collect();
        for (a, b) in [(&hi, &lo), (&lo, &hi)] {
            let report = check_monotonicity(a, b, &currents).unwrap();
            min_slack = min_slack.min(report.defect);
            all_pass &= report.pass;
        }
    }
    let pass = all_pass && min_slack >= -1e-6;
    let detail = format!(
        "min slack {:.3e} over examples 1-3, gamma pair (1/2, 2) in both orderings, 5 currents (tol -1e-6)",
        min_slack
    );
    let line = verdict(5, pass, &detail);
    assert!(pass, "{line}");
}

// --- criterion 6: imaging separation and cross-example ranking ------------

#[test]
fn criterion_6_imaging_separates_and_ranks_examples() {
    let gammas = [0.5f64, 2.0];
    let mut fm_auc = HashMap::new();
    let mut lsm_auc = HashMap::new();
    let mut worst_field = 0.0f64;
    for example in [1u8, 2, 3] {
        let shared = grid_rhs(example);
        let (grid, rhs) = (&shared.0, &shared.1);
        for &gamma in &gammas {
            let kit = kit(example, gamma);
            let t0 = Instant::now();
            let fm = fm_indicator(&kit.svd, rhs, grid, 1e-5);
            let t1 = Instant::now();
            let lsm = lsm_indicator(&kit.gap, rhs, grid, 1e-5);
            let t2 = Instant::now();
            worst_field = worst_field
                .max((t1 - t0).as_secs_f64())
                .max((t2 - t1).as_secs_f64());
            let key = (example, gamma_key(gamma));
            fm_auc.insert(key, score_reconstruction(&fm, &kit.spec).auc.unwrap_or(f64::NAN));
            lsm_auc.insert(key, score_reconstruction(&lsm, &kit.spec).auc.unwrap_or(f64::NAN));
        }
    }
    let mut separation = true;
    for key in fm_auc.keys() {
        separation &= fm_auc[key] > 0.5 && lsm_auc[key] > 0.5;
    }
    let mut ranking = true;
    for gamma in gammas.map(gamma_key) {
        let (a1, a2, a3) = (fm_auc[&(1, gamma)], fm_auc[&(2, gamma)], fm_auc[&(3, gamma)]);
        ranking &= a3 > a2 && a3 > a1 && a2 > a1;
    }
    let pass = separation && ranking && worst_field <= 1800.0;
    let fmt = |m: &HashMap<(u8, u16), f64>, g: u16| {
        format!("{:.3}/{:.3}/{:.3}", m[&(1, g)], m[&(2, g)], m[&(3, g)])
    };
    let detail = format!(
        "AUC ex1/ex2/ex3 at 100x100: FM {} (g=1/2), {} (g=2); LSM {} (g=1/2), {} (g=2); all > 0.5, FM ranking ex3 > ex2 > ex1 at both g; worst field {:.0}s (<= 1800s)",
        fmt(&fm_auc, 5),
        fmt(&fm_auc, 20),
        fmt(&lsm_auc, 5),
        fmt(&lsm_auc, 20),
        worst_field
    );
    let line = verdict(6, pass, &detail);
    assert!(pass, "{line}");
}

// --- criterion 7: regularization monotonicity ------------------------------

fn pointwise_nondecreasing(weaker: &IndicatorField, stronger: &IndicatorField) -> bool {
    weaker
        .values
        .iter()
        .zip(&stronger.values)
        .all(|(lo, hi)| *hi >= *lo - 1e-12 || (lo.is_infinite() && hi.is_infinite()))
}

#[test]
fn criterion_7_regularization_and_level_monotonicity() {
    let shared = grid_rhs(3);
    let (grid, rhs) = (&shared.0, &shared.1);
    let kit = kit(3, 0.5);

    let fm: Vec<IndicatorField> =
        [1e-6, 1e-5, 1e-4].iter().map(|t| fm_indicator(&kit.svd, rhs, grid, *t)).collect();
    let fm_monotone = fm.windows(2).all(|w| pointwise_nondecreasing(&w[0], &w[1]));

    let lsm: Vec<IndicatorField> =
        [1e-6, 1e-5, 1e-4].iter().map(|a| lsm_indicator(&kit.gap, rhs, grid, *a)).collect();
    let lsm_monotone = lsm.windows(2).all(|w| pointwise_nondecreasing(&w[0], &w[1]));

    let cuts: Vec<IndicatorField> =
        [1.5, 2.5, 3.5].iter().map(|l| extract_mask(fm[1].clone(), *l)).collect();
    let counts: Vec<usize> =
        cuts.iter().map(|f| f.mask.iter().filter(|m| **m).count()).collect();
    let shrinking = cuts.windows(2).all(|w| {
        w[0].mask.iter().zip(&w[1].mask).all(|(lo, hi)| *lo || !*hi)
    }) && counts.windows(2).all(|w| w[1] <= w[0])
        && counts[0] > 0;

    let pass = fm_monotone && lsm_monotone && shrinking;
    let detail = format!(
        "FM field nondecreasing in sv threshold 1e-6 -> 1e-4: {fm_monotone}; LSM field nondecreasing in alpha 1e-6 -> 1e-4: {lsm_monotone}; mask {} -> {} -> {} cells shrinks as level rises 1.5 -> 3.5: {shrinking}",
        counts[0], counts[1], counts[2]
    );
    let line = verdict(7, pass, &detail);
    assert!(pass, "{line}");
}

// --- criterion 8: Picard growth dichotomy ----------------------------------

/// Routes a dichotomy probe list through the cached whole-grid table.
struct GridSubset<'a> {
    table: &'a RhsTable,
    grid_indices: Vec<usize>,
}

impl RhsProvider for GridSubset<'_> {
    fn rhs(&self, index: usize, z: &Point) -> Option<DVector<f64>> {
        self.table.rhs(self.grid_indices[index], z)
    }
}

fn thin(indices: Vec<usize>, max_n: usize) -> Vec<usize> {
    if indices.len() <= max_n {
        return indices;
    }
    let step = indices.len() as f64 / max_n as f64;
    (0..max_n).map(|i| indices[(i as f64 * step) as usize]).collect()
}

#[test]
fn criterion_8_range_dichotomy_separates_regions() {
    let shared = grid_rhs(3);
    let (grid, rhs) = (&shared.0, &shared.1);
    let labelled = |want: RegionLabel| -> Vec<usize> {
        grid.labels()
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == want)
            .map(|(i, _)| i)
            .collect()
    };
    let inside_idx = thin(labelled(RegionLabel::Corroded), 40);
    let outside_idx = thin(labelled(RegionLabel::Healthy), 40);
    let points = |idx: &[usize]| -> Vec<Point> { idx.iter().map(|i| grid.points()[*i]).collect() };
    let provider = GridSubset {
        table: rhs,
        grid_indices: inside_idx.iter().chain(&outside_idx).copied().collect(),
    };

    let mut pass = true;
    let mut parts = Vec::new();
    for gamma in [0.5f64, 2.0] {
        let kit = kit(3, gamma);
        let report = check_range_dichotomy(
            &kit.svd,
            &provider,
            &points(&inside_idx),
            &points(&outside_idx),
            &[3, BASIS_ORDER + 1],
        )
        .unwrap();
        // quantities: median growth inside, outside, skipped count
        let med_in = report.quantities[0].value;
        let med_out = report.quantities[1].value;
        pass &= report.pass && med_out > med_in;
        parts.push(format!("g={gamma}: median growth outside {med_out:.2e} > inside {med_in:.2e}"));
    }
    let detail = parts.join("; ");
    let line = verdict(8, pass, &detail);
    assert!(pass, "{line}");
}

// --- criterion 9: bitwise reproducible imaging runs ------------------------

#[test]
fn criterion_9_image_runs_are_deterministic() {
    let tmp = tempfile::TempDir::new().unwrap();
    let run = |dir: &std::path::Path| {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_corrobem"))
            .args([
                "image", "--example", "3", "--nf", "60", "--nb", "12", "--method", "fmreg",
                "--grid", "30x30", "--out",
            ])
            .arg(dir)
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    };
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run(&a);
    run(&b);
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["field.csv", "contours.csv", "score.json"] {
        let left = std::fs::read(a.join(name)).unwrap();
        let right = std::fs::read(b.join(name)).unwrap();
        let same = left == right;
        pass &= same;
        parts.push(format!("{name} {}", if same { "identical" } else { "DIFFERS" }));
    }
    let detail = format!("two identical image runs: {}", parts.join(", "));
    let line = verdict(9, pass, &detail);
    assert!(pass, "{line}");
}
