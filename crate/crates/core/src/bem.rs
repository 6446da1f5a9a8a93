//! Block collocation systems for the healthy, corroded and Green forward
//! problems, and evaluation of the resulting single-layer potentials.
//!
//! All three potentials use the single-layer ansatz over the two arcs that
//! bound their domain. The block rows follow the derivation order: first the
//! equation collocated on the buried (or corroded) arc, then the Neumann
//! equation on the accessible arc; the unknown density is stacked as
//! (φ|Γ_N, φ|other).

use crate::geometry::{
    CollocationNode, ConfigError, GammaCoeff, PanelizedArc, Point, ProblemSpec, RegionLabel,
};
use crate::kernels::{
    adaptive_panel_integral, dlp_self_panel_integral, dphi_dnu_raw, finite_or_zero, lagrange3,
    phi_raw, singular_panel_integral, PanelTarget,
};
use crate::linalg::{LinalgError, LuFactors};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::sync::Arc;
use thiserror::Error;

/// Solves fail above this condition estimate instead of returning noise.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemTag {
    Healthy,
    Corroded,
    Green,
}

impl SystemTag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Healthy => "healthy",
            Self::Corroded => "corroded",
            Self::Green => "green",
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{system} block system is singular: {source}")]
    Singular {
        system: &'static str,
        #[source]
        source: LinalgError,
    },
    #[error("{system} block system condition estimate {cond:.3e} exceeds {CONDITION_LIMIT:.0e}")]
    IllConditioned { system: &'static str, cond: f64 },
    #[error(transparent)]
    Geometry(#[from] ConfigError),
    #[error("source point ({x}, {y}) lies outside the object")]
    SourceOutside { x: f64, y: f64 },
    #[error("source point ({x}, {y}) is too close to the boundary to resolve")]
    SourceOnBoundary { x: f64, y: f64 },
}

/// The two arcs of a problem, panelized once and shared by every system.
#[derive(Clone)]
pub struct Discretization {
    pub spec: ProblemSpec,
    pub arc_n: Arc<PanelizedArc>,
    pub arc_d: Arc<PanelizedArc>,
    pub arc_c: Arc<PanelizedArc>,
}

impl Discretization {
    pub fn new(spec: &ProblemSpec) -> Result<Self, ConfigError> {
        Ok(Self {
            spec: spec.clone(),
            arc_n: Arc::new(PanelizedArc::new(spec.gamma_n.clone())?),
            arc_d: Arc::new(PanelizedArc::new(spec.gamma_d.clone())?),
            arc_c: Arc::new(PanelizedArc::new(spec.gamma_c.clone())?),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    SingleLayer,
    DoubleLayer,
}

/// One dense block: the layer operator from the source arc's density to
/// values at the target arc's collocation nodes, basis-resolved.
///
/// Entry (i, 3p+j) integrates kernel × (j-th Lagrange function on source
/// panel p) × jacobian. Far pairs reduce to the plain panel rule; pairs
/// within one panel arc length use adaptive refinement; the self panel uses
/// the log-splitting (single layer) or split-Gauss (double layer) rule.
/// Distance below which the plain panel rule is replaced by adaptive
/// quadrature. At the band edge the composite rule's error is
/// ~h·(h/dist)⁶, so growing the edge like h·n^{1/3} keeps that term at
/// O(h³) and out of the way of the collocation rate.
fn near_band(panel_len: f64, n_panels: usize) -> f64 {
    panel_len * (n_panels as f64).cbrt()
}

pub fn assemble_block(
    target: &PanelizedArc,
    source: &PanelizedArc,
    kind: OperatorKind,
    same_arc: bool,
) -> DMatrix<f64> {
    let ns = source.n_nodes();
    let band = near_band(
        source.quad.panels.iter().map(|p| p.arc_length).fold(0.0, f64::max),
        source.quad.panels.len(),
    );
    let rows: Vec<Vec<f64>> = target
        .nodes()
        .par_iter()
        .map(|tn| {
            let mut row = vec![0.0; ns];
            for (p, panel) in source.quad.panels.iter().enumerate() {
                let col = 3 * p;
                if same_arc && tn.panel == p {
                    for j in 0..3 {
                        row[col + j] = match kind {
                            OperatorKind::SingleLayer => singular_panel_integral(
                                &source.curve,
                                panel,
                                &PanelTarget::OnPanel { theta: tn.theta },
                                |t| lagrange3(&panel.thetas, j, t),
                            ),
                            OperatorKind::DoubleLayer => {
                                dlp_self_panel_integral(&source.curve, panel, tn.theta, |t| {
                                    lagrange3(&panel.thetas, j, t)
                                })
                            }
                        };
                    }
                    continue;
                }
                let dist = source.nodes()[col..col + 3]
                    .iter()
                    .map(|sn| (sn.point - tn.point).norm())
                    .fold(f64::INFINITY, f64::min);
                if dist < band {
                    for j in 0..3 {
                        row[col + j] = match kind {
                            OperatorKind::SingleLayer => singular_panel_integral(
                                &source.curve,
                                panel,
                                &PanelTarget::Near { point: tn.point },
                                |t| lagrange3(&panel.thetas, j, t),
                            ),
                            OperatorKind::DoubleLayer => {
                                let f = |t: f64| {
                                    finite_or_zero(dphi_dnu_raw(
                                        &tn.point,
                                        &source.curve.point(t),
                                        &tn.normal,
                                    )) * lagrange3(&panel.thetas, j, t)
                                        * source.curve.jacobian(t)
                                };
                                adaptive_panel_integral(&f, panel.a, panel.b)
                            }
                        };
                    }
                } else {
                    // the Lagrange basis is cardinal at the panel nodes, so
                    // the plain rule leaves one kernel sample per entry
                    for j in 0..3 {
                        let sn = &source.nodes()[col + j];
                        let k = match kind {
                            OperatorKind::SingleLayer => phi_raw(&tn.point, &sn.point),
                            OperatorKind::DoubleLayer => {
                                dphi_dnu_raw(&tn.point, &sn.point, &tn.normal)
                            }
                        };
                        row[col + j] = sn.weight * sn.jacobian * k;
                    }
                }
            }
            row
        })
        .collect();
    DMatrix::from_fn(target.n_nodes(), ns, |i, j| rows[i][j])
}

#[derive(Clone, Debug)]
pub enum SourceData {
    /// Samples of the Neumann current g at the Γ_N collocation nodes.
    NeumannData(Vec<f64>),
    /// Green source location z.
    PointSource(Point),
}

/// Single-layer density over the two arcs of one solve.
#[derive(Clone, Debug)]
pub struct DensitySolution {
    pub tag: SystemTag,
    /// [Γ_N arc, second arc]; `values` stacks (φ|Γ_N, φ|second).
    pub arcs: [Arc<PanelizedArc>; 2],
    pub values: DVector<f64>,
    pub source: SourceData,
}

/// Nodal values of a potential trace on Γ_N.
#[derive(Clone, Debug)]
pub struct TraceField {
    pub arc: Arc<PanelizedArc>,
    pub values: DVector<f64>,
}

impl TraceField {
    /// Arc-length inner product ∫_{Γ_N} f·g ds by the panel rule.
    pub fn inner(&self, other: &TraceField) -> f64 {
        self.arc
            .nodes()
            .iter()
            .zip(self.values.iter().zip(other.values.iter()))
            .map(|(n, (a, b))| n.weight * n.jacobian * a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Piecewise-quadratic interpolation through the panel nodes.
    pub fn eval_at(&self, theta: f64) -> f64 {
        let p = self.arc.panel_containing(theta);
        let panel = &self.arc.quad.panels[p];
        (0..3).map(|j| self.values[3 * p + j] * lagrange3(&panel.thetas, j, theta)).sum()
    }
}

/// Assembled, factorized block system for one forward problem, reusable
/// across right-hand sides.
#[derive(Debug)]
pub struct ForwardSystem {
    pub tag: SystemTag,
    pub arc_n: Arc<PanelizedArc>,
    pub arc_x: Arc<PanelizedArc>,
    pub condition: f64,
    lu: LuFactors,
    trace_n: DMatrix<f64>,
    trace_x: DMatrix<f64>,
}

impl ForwardSystem {
    pub fn healthy(disc: &Discretization) -> Result<Self, SolverError> {
        Self::build(SystemTag::Healthy, &disc.arc_n, &disc.arc_d, None)
    }

    pub fn corroded(disc: &Discretization) -> Result<Self, SolverError> {
        let robin =
            if disc.spec.gamma_c_dirichlet { None } else { Some(&disc.spec.gamma_coeff) };
        Self::build(SystemTag::Corroded, &disc.arc_n, &disc.arc_c, robin)
    }

    fn build(
        tag: SystemTag,
        arc_n: &Arc<PanelizedArc>,
        arc_x: &Arc<PanelizedArc>,
        robin: Option<&GammaCoeff>,
    ) -> Result<Self, SolverError> {
        let n_n = arc_n.n_nodes();
        let n_x = arc_x.n_nodes();
        let mut t_nn = assemble_block(arc_n, arc_n, OperatorKind::DoubleLayer, true);
        for i in 0..n_n {
            t_nn[(i, i)] += 0.5;
        }
        let t_xn = assemble_block(arc_n, arc_x, OperatorKind::DoubleLayer, false);

        let (k_nx, k_xx) = match robin {
            // Dirichlet condition on the second arc: plain single-layer rows
            None => (
                assemble_block(arc_x, arc_n, OperatorKind::SingleLayer, false),
                assemble_block(arc_x, arc_x, OperatorKind::SingleLayer, true),
            ),
            // Robin rows: ∂_ν + γ(x)·id collocated at the Γ_C nodes
            Some(gamma) => {
                let mut t_nx = assemble_block(arc_x, arc_n, OperatorKind::DoubleLayer, false);
                let mut t_xx = assemble_block(arc_x, arc_x, OperatorKind::DoubleLayer, true);
                let s_nx = assemble_block(arc_x, arc_n, OperatorKind::SingleLayer, false);
                let s_xx = assemble_block(arc_x, arc_x, OperatorKind::SingleLayer, true);
                for (i, node) in arc_x.nodes().iter().enumerate() {
                    let gi = gamma.eval(node.theta);
                    for j in 0..n_n {
                        t_nx[(i, j)] += gi * s_nx[(i, j)];
                    }
                    for j in 0..n_x {
                        t_xx[(i, j)] += gi * s_xx[(i, j)];
                    }
                }
                for i in 0..n_x {
                    t_xx[(i, i)] += 0.5;
                }
                (t_nx, t_xx)
            }
        };

        let m = n_n + n_x;
        let mut full = DMatrix::zeros(m, m);
        full.view_mut((0, 0), (n_x, n_n)).copy_from(&k_nx);
        full.view_mut((0, n_n), (n_x, n_x)).copy_from(&k_xx);
        full.view_mut((n_x, 0), (n_n, n_n)).copy_from(&t_nn);
        full.view_mut((n_x, n_n), (n_n, n_x)).copy_from(&t_xn);

        let lu = LuFactors::factor(full)
            .map_err(|source| SolverError::Singular { system: tag.as_str(), source })?;
        let condition = lu.condition_estimate();
        if !condition.is_finite() || condition >= CONDITION_LIMIT {
            return Err(SolverError::IllConditioned { system: tag.as_str(), cond: condition });
        }

        let trace_n = assemble_block(arc_n, arc_n, OperatorKind::SingleLayer, true);
        let trace_x = assemble_block(arc_n, arc_x, OperatorKind::SingleLayer, false);
        Ok(Self {
            tag,
            arc_n: arc_n.clone(),
            arc_x: arc_x.clone(),
            condition,
            lu,
            trace_n,
            trace_x,
        })
    }

    /// Solve with nodal Neumann data and optional inhomogeneous data for the
    /// first block row (Dirichlet values, or Robin data on Γ_C).
    pub fn solve_nodal(
        &self,
        g: &[f64],
        first_row_data: Option<&[f64]>,
    ) -> (DensitySolution, TraceField) {
        let n_n = self.arc_n.n_nodes();
        let n_x = self.arc_x.n_nodes();
        assert_eq!(g.len(), n_n);
        let mut rhs = vec![0.0; n_n + n_x];
        if let Some(d) = first_row_data {
            assert_eq!(d.len(), n_x);
            rhs[..n_x].copy_from_slice(d);
        }
        rhs[n_x..].copy_from_slice(g);
        self.lu.solve_in_place(&mut rhs);
        let values = DVector::from_vec(rhs);
        let trace = &self.trace_n * values.rows(0, n_n) + &self.trace_x * values.rows(n_n, n_x);
        (
            DensitySolution {
                tag: self.tag,
                arcs: [self.arc_n.clone(), self.arc_x.clone()],
                values,
                source: SourceData::NeumannData(g.to_vec()),
            },
            TraceField { arc: self.arc_n.clone(), values: trace },
        )
    }

    pub fn solve<F: Fn(&CollocationNode) -> f64>(&self, g: F) -> (DensitySolution, TraceField) {
        let gv: Vec<f64> = self.arc_n.nodes().iter().map(g).collect();
        self.solve_nodal(&gv, None)
    }

    /// Right-hand side of the Green system for source z: −Φ(·,z) collocated
    /// on the buried arc, −∂_νΦ(·,z) on the accessible arc.
    fn green_rhs(&self, z: &Point) -> Vec<f64> {
        let n_x = self.arc_x.n_nodes();
        let mut rhs = vec![0.0; self.arc_n.n_nodes() + n_x];
        for (i, node) in self.arc_x.nodes().iter().enumerate() {
            rhs[i] = -phi_raw(&node.point, z);
        }
        for (i, node) in self.arc_n.nodes().iter().enumerate() {
            rhs[n_x + i] = -dphi_dnu_raw(&node.point, z, &node.normal);
        }
        rhs
    }

    /// Γ_N trace of the Zaremba function 𝔾(·,z) = w(·,z) + Φ(·,z), without
    /// domain checks (imaging probes every grid point).
    pub fn green_nodal(&self, z: &Point) -> (DensitySolution, TraceField) {
        debug_assert_eq!(self.tag, SystemTag::Healthy);
        let n_n = self.arc_n.n_nodes();
        let n_x = self.arc_x.n_nodes();
        let mut rhs = self.green_rhs(z);
        self.lu.solve_in_place(&mut rhs);
        let values = DVector::from_vec(rhs);
        let mut trace =
            &self.trace_n * values.rows(0, n_n) + &self.trace_x * values.rows(n_n, n_x);
        for (i, node) in self.arc_n.nodes().iter().enumerate() {
            trace[i] += phi_raw(&node.point, z);
        }
        (
            DensitySolution {
                tag: SystemTag::Green,
                arcs: [self.arc_n.clone(), self.arc_x.clone()],
                values,
                source: SourceData::PointSource(*z),
            },
            TraceField { arc: self.arc_n.clone(), values: trace },
        )
    }

    /// Γ_N traces of 𝔾(·,z) for a batch of sources against one
    /// factorization; column k holds the trace for zs[k].
    pub fn green_trace_matrix(&self, zs: &[Point]) -> DMatrix<f64> {
        let n_n = self.arc_n.n_nodes();
        let n_x = self.arc_x.n_nodes();
        let m = n_n + n_x;
        let mut out = DMatrix::zeros(n_n, zs.len());
        // chunked so the stacked rhs block stays small
        for (chunk_idx, chunk) in zs.chunks(256).enumerate() {
            let mut rhs = DMatrix::zeros(m, chunk.len());
            for (k, z) in chunk.iter().enumerate() {
                rhs.column_mut(k).copy_from_slice(&self.green_rhs(z));
            }
            self.lu.solve_matrix_in_place(&mut rhs);
            let traces =
                &self.trace_n * rhs.rows(0, n_n) + &self.trace_x * rhs.rows(n_n, n_x);
            let base = 256 * chunk_idx;
            for (k, z) in chunk.iter().enumerate() {
                for (i, node) in self.arc_n.nodes().iter().enumerate() {
                    out[(i, base + k)] = traces[(i, k)] + phi_raw(&node.point, z);
                }
            }
        }
        out
    }

    pub fn n_unknowns(&self) -> usize {
        self.arc_n.n_nodes() + self.arc_x.n_nodes()
    }
}

/// One-shot healthy solve; build a [`ForwardSystem`] to amortize over many g.
pub fn solve_healthy<F: Fn(&CollocationNode) -> f64>(
    spec: &ProblemSpec,
    g: F,
) -> Result<(DensitySolution, TraceField), SolverError> {
    let disc = Discretization::new(spec)?;
    Ok(ForwardSystem::healthy(&disc)?.solve(g))
}

/// One-shot corroded solve.
pub fn solve_corroded<F: Fn(&CollocationNode) -> f64>(
    spec: &ProblemSpec,
    g: F,
) -> Result<(DensitySolution, TraceField), SolverError> {
    let disc = Discretization::new(spec)?;
    Ok(ForwardSystem::corroded(&disc)?.solve(g))
}

/// Green solve with the z-in-D contract enforced.
pub struct GreenSolution {
    pub density: DensitySolution,
    pub trace: TraceField,
    /// Source closer to ∂D than one panel length; values degrade there.
    pub near_boundary: bool,
}

pub fn solve_green(spec: &ProblemSpec, z: &Point) -> Result<GreenSolution, SolverError> {
    let disc = Discretization::new(spec)?;
    let near_boundary = match classify_source(spec, &disc, z) {
        SourceStatus::Outside => return Err(SolverError::SourceOutside { x: z.x, y: z.y }),
        SourceStatus::OnBoundary => {
            return Err(SolverError::SourceOnBoundary { x: z.x, y: z.y })
        }
        SourceStatus::Interior { near_boundary } => near_boundary,
    };
    let sys = ForwardSystem::healthy(&disc)?;
    let (density, trace) = sys.green_nodal(z);
    Ok(GreenSolution { density, trace, near_boundary })
}

/// Position of a candidate source point relative to the healthy domain and
/// its discretized boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceStatus {
    /// Strictly inside; `near_boundary` warns when the nearest collocation
    /// node is within one panel arc length.
    Interior { near_boundary: bool },
    Outside,
    /// Inside but within one percent of a panel length of a node, too close
    /// for the trace quadrature to mean anything.
    OnBoundary,
}

pub fn classify_source(spec: &ProblemSpec, disc: &Discretization, z: &Point) -> SourceStatus {
    if spec.region_test.classify(z) == RegionLabel::Outside {
        return SourceStatus::Outside;
    }
    let panel_len = disc
        .arc_n
        .quad
        .panels
        .iter()
        .chain(disc.arc_d.quad.panels.iter())
        .map(|p| p.arc_length)
        .fold(0.0f64, f64::max);
    let dist = disc
        .arc_n
        .nodes()
        .iter()
        .chain(disc.arc_d.nodes().iter())
        .map(|n| (n.point - z).norm())
        .fold(f64::INFINITY, f64::min);
    if dist < 0.01 * panel_len {
        SourceStatus::OnBoundary
    } else {
        SourceStatus::Interior { near_boundary: dist < panel_len }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct InteriorEval {
    pub value: f64,
    /// Point was within one panel arc length of a panel; adaptive quadrature
    /// was used there.
    pub refined: bool,
}

/// Single-layer representation evaluated at an interior point.
pub fn evaluate_interior(density: &DensitySolution, x: &Point) -> InteriorEval {
    let mut value = 0.0;
    let mut refined = false;
    let mut offset = 0;
    for arc in &density.arcs {
        let band = near_band(
            arc.quad.panels.iter().map(|p| p.arc_length).fold(0.0, f64::max),
            arc.quad.panels.len(),
        );
        for (p, panel) in arc.quad.panels.iter().enumerate() {
            let base = offset + 3 * p;
            let vals = [
                density.values[base],
                density.values[base + 1],
                density.values[base + 2],
            ];
            let nodes = &arc.nodes()[3 * p..3 * p + 3];
            let dist =
                nodes.iter().map(|n| (n.point - x).norm()).fold(f64::INFINITY, f64::min);
            if dist < band {
                refined = true;
                let f = |t: f64| {
                    let dens: f64 =
                        (0..3).map(|j| vals[j] * lagrange3(&panel.thetas, j, t)).sum();
                    finite_or_zero(phi_raw(x, &arc.curve.point(t))) * dens * arc.curve.jacobian(t)
                };
                value += adaptive_panel_integral(&f, panel.a, panel.b);
            } else {
                for (j, node) in nodes.iter().enumerate() {
                    value += node.weight * node.jacobian * phi_raw(x, &node.point) * vals[j];
                }
            }
        }
        offset += arc.n_nodes();
    }
    InteriorEval { value, refined }
}
