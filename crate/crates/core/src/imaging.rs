//! Sampling-grid indicators that image the corroded patch from the
//! spectral data of the gap matrix.
//!
//! Two regularized indicators are provided: a Picard-series test driven by
//! the singular system of the symmetrized gap matrix, and a Tikhonov-
//! regularized sampling functional. Both are "large inside": grid points
//! over the corroded region carry larger logarithmic indicator values, so a
//! level cut of the field reconstructs the region. Scoring helpers compare
//! a reconstruction mask against the generating region labels.

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Point, ProblemSpec, RegionLabel};
use crate::ntd::{GapSVD, NtdGapMatrix, RhsTable};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("imaging grid must be at least 2x2, requested {nx}x{ny}")]
    Resolution { nx: usize, ny: usize },
    #[error("imaging rectangle is empty: x {x0}..{x1}, y {y0}..{y1}")]
    EmptyBounds { x0: f64, x1: f64, y0: f64, y1: f64 },
}

/// Rectangular sampling grid of cell centers.
///
/// Points sit at z_ij = lo + (i + 1/2)Δ so every sample lies strictly
/// inside the stated rectangle. Region labels are recorded at build time
/// for scoring only; the inversion never reads them.
#[derive(Clone, Debug)]
pub struct ImagingGrid {
    /// [[x_lo, x_hi], [y_lo, y_hi]].
    pub bounds: [[f64; 2]; 2],
    pub nx: usize,
    pub ny: usize,
    points: Vec<Point>,
    labels: Vec<RegionLabel>,
}

impl ImagingGrid {
    /// Grid over an explicit rectangle, labeled through `spec`.
    pub fn new(
        spec: &ProblemSpec,
        bounds: [[f64; 2]; 2],
        nx: usize,
        ny: usize,
    ) -> Result<Self, ImagingError> {
        if nx < 2 || ny < 2 {
            return Err(ImagingError::Resolution { nx, ny });
        }
        if bounds[0][1] <= bounds[0][0] || bounds[1][1] <= bounds[1][0] {
            return Err(ImagingError::EmptyBounds {
                x0: bounds[0][0],
                x1: bounds[0][1],
                y0: bounds[1][0],
                y1: bounds[1][1],
            });
        }
        let dx = (bounds[0][1] - bounds[0][0]) / nx as f64;
        let dy = (bounds[1][1] - bounds[1][0]) / ny as f64;
        let mut points = Vec::with_capacity(nx * ny);
        let mut labels = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let z = Point::new(
                    bounds[0][0] + (ix as f64 + 0.5) * dx,
                    bounds[1][0] + (iy as f64 + 0.5) * dy,
                );
                labels.push(spec.region_test.classify(&z));
                points.push(z);
            }
        }
        Ok(ImagingGrid { bounds, nx, ny, points, labels })
    }

    /// Grid over the spec's canonical imaging rectangle.
    pub fn for_spec(spec: &ProblemSpec, nx: usize, ny: usize) -> Result<Self, ImagingError> {
        Self::new(spec, spec.imaging_bounds(), nx, ny)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &[RegionLabel] {
        &self.labels
    }

    /// Row-major index of the sample in column ix, row iy.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.nx && iy < self.ny);
        iy * self.nx + ix
    }
}

/// Source of right-hand-side vectors b^(z) for grid points.
pub trait RhsProvider: Sync {
    /// b^(z) for the grid point at `index`; `None` when the point is not an
    /// admissible source (outside the object, or grazing the boundary).
    fn rhs(&self, index: usize, z: &Point) -> Option<DVector<f64>>;
}

impl RhsProvider for RhsTable {
    fn rhs(&self, index: usize, z: &Point) -> Option<DVector<f64>> {
        let stored = &self.points[index];
        assert!(
            (stored - z).norm() <= 1e-12 * (1.0 + z.coords.norm()),
            "rhs table was built for a different grid"
        );
        self.status[index]
            .is_admissible()
            .then(|| self.columns.column(index).into_owned())
    }
}

impl<F: Fn(&Point) -> Option<DVector<f64>> + Sync> RhsProvider for F {
    fn rhs(&self, _index: usize, z: &Point) -> Option<DVector<f64>> {
        self(z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IndicatorMethod {
    FmReg,
    LsmReg,
}

impl IndicatorMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            IndicatorMethod::FmReg => "fmreg",
            IndicatorMethod::LsmReg => "lsmreg",
        }
    }
}

/// Regularization that produced an indicator field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Regularization {
    /// Picard series truncated at singular values above this threshold.
    SvThreshold(f64),
    /// Tikhonov parameter α of the sampling solve.
    Tikhonov(f64),
}

/// Logarithmic indicator field over a grid, with its level-cut mask.
///
/// `values[i]` is W^log at grid point i; points with no usable indicator
/// (inadmissible source, empty Picard sum, zero data) hold a +∞ sentinel
/// and are `flagged`. The mask is `!flagged && value >= level`; flagged
/// points never enter the mask, medians, or ranking scores.
#[derive(Clone, Debug)]
pub struct IndicatorField {
    pub method: IndicatorMethod,
    pub grid: ImagingGrid,
    pub values: Vec<f64>,
    pub flagged: Vec<bool>,
    pub regularization: Regularization,
    pub level: f64,
    pub mask: Vec<bool>,
    /// Level-curve polylines of the current mask, from [`extract_mask`].
    pub contours: Vec<Vec<Point>>,
}

fn mask_of(values: &[f64], flagged: &[bool], level: f64) -> Vec<bool> {
    values.iter().zip(flagged).map(|(v, f)| !f && *v >= level).collect()
}

fn field_from_values(
    method: IndicatorMethod,
    grid: &ImagingGrid,
    data: Vec<(f64, bool)>,
    regularization: Regularization,
) -> IndicatorField {
    let (values, flagged): (Vec<f64>, Vec<bool>) = data.into_iter().unzip();
    let mask = mask_of(&values, &flagged, f64::NEG_INFINITY);
    IndicatorField {
        method,
        grid: grid.clone(),
        values,
        flagged,
        regularization,
        level: f64::NEG_INFINITY,
        mask,
        contours: Vec::new(),
    }
}

/// Picard-series indicator from the singular system of the symmetrized gap
/// matrix: P(z) = Σ_{σ_j > τ} σ_j⁻¹ ⟨b^(z), g_j⟩², W^log(z) = −ln P(z).
pub fn fm_indicator<R: RhsProvider>(
    svd: &GapSVD,
    rhs: &R,
    grid: &ImagingGrid,
    sv_threshold: f64,
) -> IndicatorField {
    assert!(sv_threshold > 0.0, "singular value threshold must be positive");
    let retained: Vec<(f64, DVector<f64>)> = svd
        .sigma
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > sv_threshold)
        .map(|(j, s)| (*s, svd.u.column(j).into_owned()))
        .collect();
    let data: Vec<(f64, bool)> = grid
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, z)| match rhs.rhs(i, z) {
            None => (f64::INFINITY, true),
            Some(b) => {
                let p: f64 =
                    retained.iter().map(|(s, g)| g.dot(&b).powi(2) / s).sum();
                if p > 0.0 {
                    (-p.ln(), false)
                } else {
                    (f64::INFINITY, true)
                }
            }
        })
        .collect();
    field_from_values(IndicatorMethod::FmReg, grid, data, Regularization::SvThreshold(sv_threshold))
}

/// Tikhonov-regularized sampling indicator: solve (BᵀB + αI)g = Bᵀb^(z)
/// once per point against a shared factorization, W^log(z) = −ln ‖g‖.
pub fn lsm_indicator<R: RhsProvider>(
    gap: &NtdGapMatrix,
    rhs: &R,
    grid: &ImagingGrid,
    alpha: f64,
) -> IndicatorField {
    assert!(alpha > 0.0, "Tikhonov parameter must be positive");
    let b = &gap.matrix;
    let normal = b.transpose() * b + DMatrix::identity(b.ncols(), b.ncols()) * alpha;
    let chol = Cholesky::new(normal).expect("BᵀB + αI is positive definite for α > 0");
    let data: Vec<(f64, bool)> = grid
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, z)| match rhs.rhs(i, z) {
            None => (f64::INFINITY, true),
            Some(bz) => {
                let g = chol.solve(&(b.transpose() * bz));
                let norm = g.norm();
                if norm > 0.0 {
                    (-norm.ln(), false)
                } else {
                    (f64::INFINITY, true)
                }
            }
        })
        .collect();
    field_from_values(IndicatorMethod::LsmReg, grid, data, Regularization::Tikhonov(alpha))
}

/// Re-cuts the field at `level`: recomputes the mask and traces its
/// level-curve polylines.
pub fn extract_mask(mut field: IndicatorField, level: f64) -> IndicatorField {
    field.mask = mask_of(&field.values, &field.flagged, level);
    field.contours = if level.is_finite() {
        trace_contours(&field.grid, &field.values, &field.flagged, level)
    } else {
        Vec::new()
    };
    field.level = level;
    field
}

/// Marching-squares contour of the set {W^log >= level}. Flagged points are
/// pushed below the level so the curve agrees with the mask everywhere.
fn trace_contours(
    grid: &ImagingGrid,
    values: &[f64],
    flagged: &[bool],
    level: f64,
) -> Vec<Vec<Point>> {
    let low = level - 1.0;
    let value = |ix: usize, iy: usize| -> f64 {
        let i = grid.index(ix, iy);
        if flagged[i] {
            low
        } else {
            values[i].clamp(low, f64::MAX)
        }
    };
    let mut segments: Vec<(Point, Point)> = Vec::new();
    for iy in 0..grid.ny - 1 {
        for ix in 0..grid.nx - 1 {
            let corners = [
                (grid.points()[grid.index(ix, iy)], value(ix, iy)),
                (grid.points()[grid.index(ix + 1, iy)], value(ix + 1, iy)),
                (grid.points()[grid.index(ix + 1, iy + 1)], value(ix + 1, iy + 1)),
                (grid.points()[grid.index(ix, iy + 1)], value(ix, iy + 1)),
            ];
            cell_segments(&corners, level, &mut segments);
        }
    }
    chain_segments(segments)
}

/// Point at the level crossing of the edge a–b (linear in the values).
/// Corners are put in a canonical order first so the two cells sharing an
/// edge compute bit-identical crossings.
fn edge_crossing(a: (Point, f64), b: (Point, f64), level: f64) -> Point {
    let (a, b) = if (b.0.x, b.0.y) < (a.0.x, a.0.y) { (b, a) } else { (a, b) };
    let denom = b.1 - a.1;
    let t = if denom == 0.0 { 0.5 } else { ((level - a.1) / denom).clamp(0.0, 1.0) };
    Point::new(a.0.x + t * (b.0.x - a.0.x), a.0.y + t * (b.0.y - a.0.y))
}

/// Emits 0, 1, or 2 contour segments for one cell; corners in the order
/// bottom-left, bottom-right, top-right, top-left.
fn cell_segments(corners: &[(Point, f64); 4], level: f64, out: &mut Vec<(Point, Point)>) {
    let mut case = 0usize;
    for (bit, c) in corners.iter().enumerate() {
        if c.1 >= level {
            case |= 1 << bit;
        }
    }
    // edges: 0 bottom, 1 right, 2 top, 3 left
    let cross = |e: usize| -> Point {
        let (i, j) = [(0, 1), (1, 2), (2, 3), (3, 0)][e];
        edge_crossing(corners[i], corners[j], level)
    };
    let mut emit = |e0: usize, e1: usize| out.push((cross(e0), cross(e1)));
    match case {
        0 | 15 => {}
        1 | 14 => emit(3, 0),
        2 | 13 => emit(0, 1),
        3 | 12 => emit(3, 1),
        4 | 11 => emit(1, 2),
        6 | 9 => emit(0, 2),
        7 | 8 => emit(2, 3),
        5 | 10 => {
            // saddle: the cell-center average picks the pairing
            let center = corners.iter().map(|c| c.1).sum::<f64>() / 4.0;
            let joined = (center >= level) == (case == 5);
            if joined {
                emit(3, 0);
                emit(1, 2);
            } else {
                emit(0, 1);
                emit(2, 3);
            }
        }
        _ => unreachable!(),
    }
}

/// Joins segments sharing endpoints into polylines. Shared cell edges
/// produce bit-identical crossing points, so exact keys suffice.
fn chain_segments(segments: Vec<(Point, Point)>) -> Vec<Vec<Point>> {
    use std::collections::HashMap;
    let key = |p: &Point| (p.x.to_bits(), p.y.to_bits());
    let mut adjacency: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(key(a)).or_default().push(i);
        adjacency.entry(key(b)).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut chain = vec![a, b];
        // extend forward from the tail, then backward from the head
        for head in [false, true] {
            loop {
                let tip = if head { chain[0] } else { *chain.last().unwrap() };
                let next = adjacency
                    .get(&key(&tip))
                    .and_then(|ids| ids.iter().find(|i| !used[**i]).copied());
                let Some(i) = next else { break };
                used[i] = true;
                let (a, b) = segments[i];
                let other = if key(&a) == key(&tip) { b } else { a };
                if head {
                    chain.insert(0, other);
                } else {
                    chain.push(other);
                }
            }
        }
        chains.push(chain);
    }
    chains
}

/// Reconstruction quality of a field against the generating region labels.
#[derive(Clone, Debug, Serialize)]
pub struct ScoreReport {
    pub method: IndicatorMethod,
    pub level: f64,
    /// |mask ∩ Ω| / |mask ∪ Ω| over scored points; 1.0 when both are empty.
    pub jaccard: f64,
    pub median_inside: Option<f64>,
    pub median_outside: Option<f64>,
    /// median_inside − median_outside.
    pub separation: Option<f64>,
    /// Rank-based probability that an inside point outranks an outside one;
    /// `None` when either class is empty.
    pub auc: Option<f64>,
    pub n_corroded: usize,
    pub n_healthy: usize,
    pub n_outside: usize,
    pub n_flagged: usize,
}

fn median(sorted: &[f64]) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let m = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 { sorted[m] } else { 0.5 * (sorted[m - 1] + sorted[m]) })
}

/// Mann-Whitney AUC with average ranks for ties.
fn rank_auc(inside: &[f64], outside: &[f64]) -> Option<f64> {
    if inside.is_empty() || outside.is_empty() {
        return None;
    }
    let mut pool: Vec<(f64, bool)> = inside
        .iter()
        .map(|v| (*v, true))
        .chain(outside.iter().map(|v| (*v, false)))
        .collect();
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum_inside = 0.0;
    let mut i = 0;
    while i < pool.len() {
        let mut j = i;
        while j < pool.len() && pool[j].0 == pool[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j averaged over the tie block
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for item in &pool[i..j] {
            if item.1 {
                rank_sum_inside += avg_rank;
            }
        }
        i = j;
    }
    let n_in = inside.len() as f64;
    let n_out = outside.len() as f64;
    Some((rank_sum_inside - n_in * (n_in + 1.0) / 2.0) / (n_in * n_out))
}

/// Scores the current mask and field against `spec`'s region test. Grid
/// points outside the object and flagged points are excluded throughout.
pub fn score_reconstruction(field: &IndicatorField, spec: &ProblemSpec) -> ScoreReport {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    let mut n_outside = 0;
    let mut n_flagged = 0;
    let mut intersection = 0usize;
    let mut union = 0usize;
    for (i, z) in field.grid.points().iter().enumerate() {
        let label = spec.region_test.classify(z);
        if label == RegionLabel::Outside {
            n_outside += 1;
            continue;
        }
        if field.flagged[i] {
            n_flagged += 1;
            continue;
        }
        let truth = label == RegionLabel::Corroded;
        if truth {
            inside.push(field.values[i]);
        } else {
            outside.push(field.values[i]);
        }
        if field.mask[i] && truth {
            intersection += 1;
        }
        if field.mask[i] || truth {
            union += 1;
        }
    }
    inside.sort_by(f64::total_cmp);
    outside.sort_by(f64::total_cmp);
    let median_inside = median(&inside);
    let median_outside = median(&outside);
    ScoreReport {
        method: field.method,
        level: field.level,
        jaccard: if union == 0 { 1.0 } else { intersection as f64 / union as f64 },
        median_inside,
        median_outside,
        separation: median_inside.zip(median_outside).map(|(a, b)| a - b),
        auc: rank_auc(&inside, &outside),
        n_corroded: inside.len(),
        n_healthy: outside.len(),
        n_outside,
        n_flagged,
    }
}

/// Serializable run metadata for archived fields.
#[derive(Clone, Debug, Serialize)]
pub struct FieldMetadata {
    pub method: IndicatorMethod,
    pub regularization: Regularization,
    pub level: f64,
    pub nx: usize,
    pub ny: usize,
    pub bounds: [[f64; 2]; 2],
    pub spec_hash: String,
    pub n_flagged: usize,
}

impl IndicatorField {
    pub fn metadata(&self, spec_hash: &str) -> FieldMetadata {
        FieldMetadata {
            method: self.method,
            regularization: self.regularization,
            level: self.level,
            nx: self.grid.nx,
            ny: self.grid.ny,
            bounds: self.grid.bounds,
            spec_hash: spec_hash.to_string(),
            n_flagged: self.flagged.iter().filter(|f| **f).count(),
        }
    }

    /// One CSV row per grid point: x, y, W^log, mask, label.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "x,y,w_log,mask,label")?;
        for (i, z) in self.grid.points().iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                z.x,
                z.y,
                self.values[i],
                self.mask[i] as u8,
                self.grid.labels()[i].as_str()
            )?;
        }
        Ok(())
    }

    /// Contour polylines as CSV; blank line between polylines (gnuplot
    /// segment convention).
    pub fn write_contour_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "x,y")?;
        for (k, chain) in self.contours.iter().enumerate() {
            if k > 0 {
                writeln!(out)?;
            }
            for p in chain {
                writeln!(out, "{},{}", p.x, p.y)?;
            }
        }
        Ok(())
    }
}
