//! Galerkin discretization of the corrosion gap Λ − Λ₀ between the
//! Neumann-to-Dirichlet maps of the corroded and healthy configurations.
//!
//! Currents are expanded in a cosine family on the accessible arc. Each
//! basis function is pushed through both forward maps; the trace difference
//! is then paired against the same family, yielding a small dense matrix
//! whose spectrum drives the imaging indicators. Point-source right-hand
//! sides come from the mixed Green function traces.

use std::io::{self, BufRead, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::bem::{classify_source, Discretization, ForwardSystem, SolverError, SourceStatus, TraceField};
use crate::geometry::{PanelizedArc, Point, ProblemSpec};

#[derive(Debug, Error)]
pub enum NtdError {
    #[error("basis interval [{b0}, {b1}] does not match the accessible arc interval [{a0}, {a1}]")]
    IntervalMismatch { b0: f64, b1: f64, a0: f64, a1: f64 },
    #[error("forward solve for the gap matrix: {0}")]
    Forward(#[from] SolverError),
    #[error("gap entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("reading gap matrix: {0}")]
    Io(#[from] io::Error),
    #[error("gap matrix file malformed: {0}")]
    Format(String),
}

/// Cosine family φ_n(θ) = cos(k·n·θ) on a parameter interval.
///
/// The multiplier k stretches the n-th mode to complete n half-oscillation
/// pairs over the interval: k = 2π / (θ₂ − θ₁), so k = 1 on a full circle
/// parametrization, 4 on a quarter arc, 2 on a half arc.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierBasis {
    max_order: usize,
    k: f64,
    interval: (f64, f64),
}

impl FourierBasis {
    pub fn new(max_order: usize, k: f64, interval: (f64, f64)) -> Self {
        assert!(k > 0.0, "frequency multiplier must be positive");
        assert!(interval.1 > interval.0, "empty basis interval");
        FourierBasis { max_order, k, interval }
    }

    /// Multiplier matched to the interval length.
    pub fn for_interval(interval: (f64, f64), max_order: usize) -> Self {
        let k = 2.0 * std::f64::consts::PI / (interval.1 - interval.0);
        Self::new(max_order, k, interval)
    }

    /// Basis on the accessible arc of `spec`.
    pub fn for_spec(spec: &ProblemSpec, max_order: usize) -> Self {
        Self::for_interval(spec.gamma_n.interval, max_order)
    }

    /// Number of basis functions, `max_order + 1` (the constant counts).
    pub fn len(&self) -> usize {
        self.max_order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn multiplier(&self) -> f64 {
        self.k
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn eval(&self, n: usize, theta: f64) -> f64 {
        (self.k * n as f64 * theta).cos()
    }

    fn matches_arc(&self, arc: &PanelizedArc) -> Result<(), NtdError> {
        let (a0, a1) = arc.curve.interval;
        let tol = 1e-12 * (a1 - a0).abs().max(1.0);
        if (self.interval.0 - a0).abs() > tol || (self.interval.1 - a1).abs() > tol {
            return Err(NtdError::IntervalMismatch {
                b0: self.interval.0,
                b1: self.interval.1,
                a0,
                a1,
            });
        }
        Ok(())
    }
}

/// Pairing measure for the Galerkin integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GalerkinMeasure {
    /// ds = |x′(θ)| dθ, the L² pairing on the physical arc.
    #[default]
    ArcLength,
    /// Plain dθ, kept for comparison runs on non-unit-speed arcs.
    Parameter,
}

impl GalerkinMeasure {
    pub fn as_str(self) -> &'static str {
        match self {
            GalerkinMeasure::ArcLength => "arc-length",
            GalerkinMeasure::Parameter => "parameter",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "arc-length" => Some(GalerkinMeasure::ArcLength),
            "parameter" => Some(GalerkinMeasure::Parameter),
            _ => None,
        }
    }
}

/// Dense Galerkin matrix of the corrosion gap, with enough provenance to
/// tie an archived matrix back to the configuration that produced it.
#[derive(Clone, Debug)]
pub struct NtdGapMatrix {
    pub matrix: DMatrix<f64>,
    pub basis: FourierBasis,
    /// Fingerprint of the generating [`ProblemSpec`].
    pub spec_hash: String,
    pub n_f: usize,
    pub measure: GalerkinMeasure,
}

impl NtdGapMatrix {
    /// Relative symmetry defect ‖B − Bᵀ‖_F / ‖B‖_F; zero for the zero matrix.
    pub fn symmetry_defect(&self) -> f64 {
        let norm = self.matrix.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (&self.matrix - self.matrix.transpose()).norm() / norm
    }

    /// Symmetric part (B + Bᵀ)/2.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        (&self.matrix + self.matrix.transpose()) * 0.5
    }

    /// Writes the matrix as CSV rows behind a provenance header.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "# ntd-gap v1")?;
        writeln!(out, "# spec = {}", self.spec_hash)?;
        writeln!(out, "# n_f = {}", self.n_f)?;
        writeln!(out, "# n_b = {}", self.basis.max_order())?;
        writeln!(out, "# k = {}", self.basis.multiplier())?;
        writeln!(out, "# interval = {} {}", self.basis.interval.0, self.basis.interval.1)?;
        writeln!(out, "# measure = {}", self.measure.as_str())?;
        for i in 0..self.matrix.nrows() {
            let row: Vec<String> =
                (0..self.matrix.ncols()).map(|j| self.matrix[(i, j)].to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads a matrix produced by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, NtdError> {
        let mut spec_hash = None;
        let mut n_f = None;
        let mut n_b = None;
        let mut k = None;
        let mut interval = None;
        let mut measure = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some((key, value)) = rest.split_once('=') {
                    let (key, value) = (key.trim(), value.trim());
                    match key {
                        "spec" => spec_hash = Some(value.to_string()),
                        "n_f" => n_f = value.parse().ok(),
                        "n_b" => n_b = value.parse().ok(),
                        "k" => k = value.parse().ok(),
                        "interval" => {
                            let mut it = value.split_whitespace().map(str::parse::<f64>);
                            if let (Some(Ok(a)), Some(Ok(b))) = (it.next(), it.next()) {
                                interval = Some((a, b));
                            }
                        }
                        "measure" => measure = GalerkinMeasure::parse(value),
                        _ => {}
                    }
                }
                continue;
            }
            let row: Result<Vec<f64>, _> =
                line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|e| NtdError::Format(format!("bad entry: {e}")))?);
        }
        let spec_hash = spec_hash.ok_or_else(|| NtdError::Format("missing spec hash".into()))?;
        let n_f = n_f.ok_or_else(|| NtdError::Format("missing n_f".into()))?;
        let n_b: usize = n_b.ok_or_else(|| NtdError::Format("missing n_b".into()))?;
        let k = k.ok_or_else(|| NtdError::Format("missing k".into()))?;
        let interval = interval.ok_or_else(|| NtdError::Format("missing interval".into()))?;
        let measure = measure.ok_or_else(|| NtdError::Format("missing measure".into()))?;
        let size = n_b + 1;
        if rows.len() != size || rows.iter().any(|r| r.len() != size) {
            return Err(NtdError::Format(format!(
                "expected {size}x{size} entries, found {} rows",
                rows.len()
            )));
        }
        let matrix = DMatrix::from_fn(size, size, |i, j| rows[i][j]);
        Ok(NtdGapMatrix {
            matrix,
            basis: FourierBasis::new(n_b, k, interval),
            spec_hash,
            n_f,
            measure,
        })
    }
}

/// Pairing coefficients w_i (·J_i) for one arc under the chosen measure.
fn pairing_weights(arc: &PanelizedArc, measure: GalerkinMeasure) -> Vec<f64> {
    arc.nodes()
        .iter()
        .map(|n| match measure {
            GalerkinMeasure::ArcLength => n.weight * n.jacobian,
            GalerkinMeasure::Parameter => n.weight,
        })
        .collect()
}

/// Test matrix P with P[m, i] = w_i·φ_m(θ_i); one row per basis function.
fn test_matrix(basis: &FourierBasis, arc: &PanelizedArc, measure: GalerkinMeasure) -> DMatrix<f64> {
    let weights = pairing_weights(arc, measure);
    DMatrix::from_fn(basis.len(), arc.n_nodes(), |m, i| {
        weights[i] * basis.eval(m, arc.nodes()[i].theta)
    })
}

/// Galerkin matrix B with B_mn = ∫ φ_m · (Λ − Λ₀)φ_n over the accessible
/// arc, in the arc-length pairing.
pub fn assemble_gap_matrix(
    spec: &ProblemSpec,
    basis: &FourierBasis,
) -> Result<NtdGapMatrix, NtdError> {
    assemble_gap_matrix_with(spec, basis, GalerkinMeasure::ArcLength)
}

/// [`assemble_gap_matrix`] with an explicit pairing measure.
pub fn assemble_gap_matrix_with(
    spec: &ProblemSpec,
    basis: &FourierBasis,
    measure: GalerkinMeasure,
) -> Result<NtdGapMatrix, NtdError> {
    let disc = Discretization::new(spec).map_err(SolverError::from)?;
    basis.matches_arc(&disc.arc_n)?;
    let healthy = ForwardSystem::healthy(&disc)?;
    let corroded = ForwardSystem::corroded(&disc)?;
    let gap = gap_columns(&disc.arc_n, &healthy, &corroded, basis);
    let b = test_matrix(basis, &disc.arc_n, measure) * gap;
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            if !b[(i, j)].is_finite() {
                return Err(NtdError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(NtdGapMatrix {
        matrix: b,
        basis: basis.clone(),
        spec_hash: spec.fingerprint(),
        n_f: spec.n_f,
        measure,
    })
}

/// Trace differences (u − u₀)|Γ_N, one column per basis function. Both
/// factorizations are shared across the sweep; columns solve in parallel.
fn gap_columns(
    arc_n: &Arc<PanelizedArc>,
    healthy: &ForwardSystem,
    corroded: &ForwardSystem,
    basis: &FourierBasis,
) -> DMatrix<f64> {
    let columns: Vec<DVector<f64>> = (0..basis.len())
        .into_par_iter()
        .map(|n| {
            let g: Vec<f64> =
                arc_n.nodes().iter().map(|node| basis.eval(n, node.theta)).collect();
            let (_, healthy_trace) = healthy.solve_nodal(&g, None);
            let (_, corroded_trace) = corroded.solve_nodal(&g, None);
            corroded_trace.values - healthy_trace.values
        })
        .collect();
    DMatrix::from_columns(&columns)
}

/// Projection b_m = ∫ φ_m · f over the trace's arc.
pub fn project_trace(
    basis: &FourierBasis,
    trace: &TraceField,
    measure: GalerkinMeasure,
) -> DVector<f64> {
    &test_matrix(basis, &trace.arc, measure) * &trace.values
}

/// Right-hand side b^(z) from the mixed Green function trace, arc-length
/// pairing. Builds a fresh forward system; use [`assemble_rhs_table`] to
/// amortize over many source points.
pub fn assemble_rhs(
    spec: &ProblemSpec,
    basis: &FourierBasis,
    z: &Point,
) -> Result<DVector<f64>, NtdError> {
    let solution = crate::bem::solve_green(spec, z)?;
    basis.matches_arc(&solution.trace.arc)?;
    Ok(project_trace(basis, &solution.trace, GalerkinMeasure::ArcLength))
}

/// Admissibility of one source point in a batched right-hand-side sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhsStatus {
    /// Interior source; `near_boundary` mirrors the single-solve flag.
    Admissible { near_boundary: bool },
    Outside,
    OnBoundary,
}

impl RhsStatus {
    pub fn is_admissible(self) -> bool {
        matches!(self, RhsStatus::Admissible { .. })
    }
}

/// Right-hand sides for a batch of source points against one healthy
/// factorization. Column j belongs to `points[j]`; refused columns are
/// zero-filled and flagged through `status`.
#[derive(Clone, Debug)]
pub struct RhsTable {
    pub basis: FourierBasis,
    pub points: Vec<Point>,
    pub status: Vec<RhsStatus>,
    pub columns: DMatrix<f64>,
}

pub fn assemble_rhs_table(
    spec: &ProblemSpec,
    basis: &FourierBasis,
    points: &[Point],
) -> Result<RhsTable, NtdError> {
    let disc = Discretization::new(spec).map_err(SolverError::from)?;
    basis.matches_arc(&disc.arc_n)?;
    let system = ForwardSystem::healthy(&disc)?;
    let status: Vec<RhsStatus> = points
        .iter()
        .map(|z| match classify_source(spec, &disc, z) {
            SourceStatus::Interior { near_boundary } => RhsStatus::Admissible { near_boundary },
            SourceStatus::Outside => RhsStatus::Outside,
            SourceStatus::OnBoundary => RhsStatus::OnBoundary,
        })
        .collect();
    let admissible: Vec<Point> = points
        .iter()
        .zip(&status)
        .filter(|(_, s)| s.is_admissible())
        .map(|(z, _)| *z)
        .collect();
    let traces = system.green_trace_matrix(&admissible);
    let projected = test_matrix(basis, &disc.arc_n, GalerkinMeasure::ArcLength) * traces;
    let mut columns = DMatrix::zeros(basis.len(), points.len());
    let mut next = 0;
    for (j, s) in status.iter().enumerate() {
        if s.is_admissible() {
            columns.column_mut(j).copy_from(&projected.column(next));
            next += 1;
        }
    }
    Ok(RhsTable { basis: basis.clone(), points: points.to_vec(), status, columns })
}

/// Spectral factorization of the symmetrized gap matrix. The continuous
/// gap operator is self-adjoint, so the singular triplets of (B + Bᵀ)/2
/// stand in for the eigen-decomposition of its absolute value.
#[derive(Clone, Debug)]
pub struct GapSVD {
    /// Descending.
    pub sigma: DVector<f64>,
    pub u: DMatrix<f64>,
    pub v_t: DMatrix<f64>,
}

pub fn gap_svd(gap: &NtdGapMatrix) -> GapSVD {
    let sym = gap.symmetrized();
    let svd = sym.svd(true, true);
    GapSVD {
        sigma: svd.singular_values,
        u: svd.u.expect("u requested"),
        v_t: svd.v_t.expect("v_t requested"),
    }
}

impl GapSVD {
    pub fn reconstruction(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&self.sigma) * &self.v_t
    }

    /// σ_max / σ_min, infinite when the smallest singular value underflows.
    pub fn spectrum_span(&self) -> f64 {
        let max = self.sigma.max();
        let min = self.sigma.min();
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_example;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::io::BufReader;

    #[test]
    fn multiplier_matches_the_shipped_examples() {
        for (example, expected) in [(1, 1.0), (2, 4.0), (3, 2.0)] {
            let spec = make_example(example, 8).unwrap();
            let basis = FourierBasis::for_spec(&spec, 19);
            assert_relative_eq!(basis.multiplier(), expected, max_relative = 1e-12);
            assert_eq!(basis.len(), 20);
        }
    }

    #[test]
    fn constant_mode_is_identically_one() {
        let basis = FourierBasis::for_interval((0.0, 1.7), 4);
        for theta in [0.0, 0.3, 1.1, 1.7] {
            assert_eq!(basis.eval(0, theta), 1.0);
        }
    }

    #[test]
    fn degenerate_corrosion_yields_the_zero_matrix() {
        let spec = make_example(3, 12).unwrap().degenerate();
        let basis = FourierBasis::for_spec(&spec, 5);
        let gap = assemble_gap_matrix(&spec, &basis).unwrap();
        assert_eq!(gap.matrix.norm(), 0.0);
        assert_eq!(gap.symmetry_defect(), 0.0);
    }

    #[test]
    fn assembly_is_deterministic_and_carries_provenance() {
        let spec = make_example(2, 8).unwrap();
        let basis = FourierBasis::for_spec(&spec, 4);
        let a = assemble_gap_matrix(&spec, &basis).unwrap();
        let b = assemble_gap_matrix(&spec, &basis).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.spec_hash, spec.fingerprint());
        assert_eq!(a.n_f, 8);
        assert_eq!(a.matrix.nrows(), 5);
        assert_eq!(a.matrix.ncols(), 5);
        assert!(a.matrix.iter().all(|v| v.is_finite()));
        assert!(a.symmetry_defect() < 1.0);
    }

    #[test]
    fn mismatched_basis_interval_is_rejected() {
        let spec = make_example(2, 8).unwrap();
        let basis = FourierBasis::for_interval((0.0, 1.0), 4);
        assert!(matches!(
            assemble_gap_matrix(&spec, &basis),
            Err(NtdError::IntervalMismatch { .. })
        ));
    }

    #[test]
    fn symmetrization_is_idempotent() {
        let spec = make_example(2, 8).unwrap();
        let basis = FourierBasis::for_spec(&spec, 4);
        let mut gap = assemble_gap_matrix(&spec, &basis).unwrap();
        let sym = gap.symmetrized();
        gap.matrix = sym.clone();
        assert_eq!(gap.symmetrized(), sym);
        assert_eq!(gap.symmetry_defect(), 0.0);
    }

    #[test]
    fn rank_one_gap_has_a_single_singular_value() {
        let u = DVector::from_vec(vec![0.6, -0.3, 1.2, 0.9]);
        let gap = NtdGapMatrix {
            matrix: &u * u.transpose(),
            basis: FourierBasis::for_interval((0.0, 1.0), 3),
            spec_hash: "synthetic".into(),
            n_f: 0,
            measure: GalerkinMeasure::ArcLength,
        };
        let svd = gap_svd(&gap);
        assert_relative_eq!(svd.sigma[0], u.norm_squared(), max_relative = 1e-12);
        for j in 1..4 {
            assert_abs_diff_eq!(svd.sigma[j], 0.0, epsilon = 1e-12 * svd.sigma[0]);
        }
        let defect = (gap.symmetrized() - svd.reconstruction()).norm();
        assert!(defect <= 1e-12 * gap.matrix.norm());
    }

    #[test]
    fn gap_svd_reconstructs_and_sorts() {
        let spec = make_example(2, 8).unwrap();
        let basis = FourierBasis::for_spec(&spec, 6);
        let gap = assemble_gap_matrix(&spec, &basis).unwrap();
        let svd = gap_svd(&gap);
        for j in 1..svd.sigma.len() {
            assert!(svd.sigma[j] <= svd.sigma[j - 1]);
            assert!(svd.sigma[j] >= 0.0);
        }
        let err = (gap.symmetrized() - svd.reconstruction()).norm();
        assert!(err <= 1e-12 * gap.matrix.norm(), "reconstruction error {err:.3e}");
    }

    #[test]
    fn rhs_projection_is_linear_and_anchors_the_constant_mode() {
        let spec = make_example(2, 8).unwrap();
        let basis = FourierBasis::for_spec(&spec, 4);
        let z = Point::new(0.45, 0.3);
        let solution = crate::bem::solve_green(&spec, &z).unwrap();
        let b = project_trace(&basis, &solution.trace, GalerkinMeasure::ArcLength);
        assert_eq!(b, assemble_rhs(&spec, &basis, &z).unwrap());

        // m = 0 pairs against φ₀ ≡ 1: plain arc-length integral of the trace
        let direct = solution.trace.arc.integrate_nodal(solution.trace.values.as_slice());
        assert_relative_eq!(b[0], direct, max_relative = 1e-13);

        let mut scaled = solution.trace.clone();
        scaled.values *= 3.0;
        let b3 = project_trace(&basis, &scaled, GalerkinMeasure::ArcLength);
        assert_relative_eq!((b3 - 3.0 * &b).norm(), 0.0, epsilon = 1e-13 * b.norm());
    }

    #[test]
    fn rhs_table_matches_single_solves_and_flags_refusals() {
        let spec = make_example(2, 8).unwrap();
        let basis = FourierBasis::for_spec(&spec, 4);
        let z0 = Point::new(0.45, 0.3);
        let z1 = Point::new(0.2, 0.55);
        let outside = Point::new(2.0, 2.0);
        let table = assemble_rhs_table(&spec, &basis, &[z0, outside, z1]).unwrap();
        assert_eq!(table.status[0], RhsStatus::Admissible { near_boundary: false });
        assert_eq!(table.status[1], RhsStatus::Outside);
        assert!(table.status[2].is_admissible());
        assert_eq!(table.columns.column(1).norm(), 0.0);
        for (j, z) in [(0usize, z0), (2, z1)] {
            let single = assemble_rhs(&spec, &basis, &z).unwrap();
            assert_relative_eq!(
                (table.columns.column(j) - &single).norm(),
                0.0,
                epsilon = 1e-12 * single.norm()
            );
        }
    }

    #[test]
    fn rhs_depends_continuously_on_the_source() {
        let spec = make_example(2, 10).unwrap();
        let basis = FourierBasis::for_spec(&spec, 4);
        let z0 = Point::new(0.4, 0.35);
        let probes: Vec<Point> = std::iter::once(z0)
            .chain([0.12, 0.06, 0.03].iter().map(|d| Point::new(z0.x + d, z0.y)))
            .collect();
        let table = assemble_rhs_table(&spec, &basis, &probes).unwrap();
        assert!(table.status.iter().all(|s| s.is_admissible()));
        let base = table.columns.column(0);
        let gaps: Vec<f64> =
            (1..4).map(|j| (table.columns.column(j) - base).norm()).collect();
        assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "no monotone decay: {gaps:?}");
        assert!(gaps[2] < 0.5 * gaps[0]);
    }

    #[test]
    fn csv_round_trips_bitwise() {
        let spec = make_example(3, 8).unwrap();
        let basis = FourierBasis::for_spec(&spec, 3);
        let gap =
            assemble_gap_matrix_with(&spec, &basis, GalerkinMeasure::Parameter).unwrap();
        let mut buf = Vec::new();
        gap.write_csv(&mut buf).unwrap();
        let back = NtdGapMatrix::read_csv(BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(back.matrix, gap.matrix);
        assert_eq!(back.spec_hash, gap.spec_hash);
        assert_eq!(back.n_f, gap.n_f);
        assert_eq!(back.measure, gap.measure);
        assert_eq!(back.basis, gap.basis);
    }

    #[test]
    fn truncated_csv_is_rejected() {
        let text = "# ntd-gap v1\n# spec = abc\n# n_f = 8\n# n_b = 2\n# k = 1\n\
                    # interval = 0 6.283185307179586\n# measure = arc-length\n1,2,3\n4,5,6\n";
        assert!(matches!(
            NtdGapMatrix::read_csv(BufReader::new(text.as_bytes())),
            Err(NtdError::Format(_))
        ));
    }
}
