//! Parametrized boundary arcs, panel quadrature and the example domains.
//!
//! Arcs are always parametrized with the physical domain they bound on the
//! left of the direction of travel; the outward unit normal is then the
//! clockwise rotation of the unit tangent. On the corrosion interface the
//! "physical domain" is the healthy remainder, so its normal points into the
//! corroded part.

use nalgebra::{Point2, Vector2};
use sha2::{Digest, Sha256};
use thiserror::Error;

mod config;
pub use config::{load_spec, ArcConfig, GammaConfig, SpecConfig};

pub type Point = Point2<f64>;
pub type Vec2 = Vector2<f64>;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown example id {0} (expected 1, 2 or 3)")]
    UnknownExample(u8),
    #[error("invalid curve: {0}")]
    BadCurve(String),
    #[error("panel count {n_panels} too small for {n_corners} corners on one arc")]
    CornerDensity { n_panels: usize, n_corners: usize },
    #[error("corrosion coefficient must be positive everywhere, got {0}")]
    NonPositiveGamma(f64),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid problem spec: {0}")]
    Validation(String),
}

/// Shape of an arc; the parameter interval lives on [`BoundaryCurve`].
#[derive(Clone, Debug)]
pub enum CurveShape {
    /// Unit-speed polyline; the parameter is arc length from the first vertex.
    Polyline { vertices: Vec<Point>, cumulative: Vec<f64> },
    /// x(θ) = center + (a·cos θ, b·sin θ).
    EllipseArc { center: Point, a: f64, b: f64 },
    /// x(θ) = center + r·(cos θ, sin θ).
    CircleArc { center: Point, radius: f64 },
}

impl CurveShape {
    pub fn polyline(vertices: Vec<Point>) -> Result<Self, ConfigError> {
        if vertices.len() < 2 {
            return Err(ConfigError::BadCurve("polyline needs at least 2 vertices".into()));
        }
        let mut cumulative = vec![0.0];
        for w in vertices.windows(2) {
            let len = (w[1] - w[0]).norm();
            if len == 0.0 {
                return Err(ConfigError::BadCurve("polyline has a zero-length segment".into()));
            }
            cumulative.push(cumulative.last().unwrap() + len);
        }
        Ok(Self::Polyline { vertices, cumulative })
    }

    fn segment_index(cumulative: &[f64], theta: f64) -> usize {
        // index i with cumulative[i] <= theta < cumulative[i+1]; clamp at ends
        let n_seg = cumulative.len() - 1;
        let i = cumulative.partition_point(|c| *c <= theta);
        i.saturating_sub(1).min(n_seg - 1)
    }

    fn point(&self, theta: f64) -> Point {
        match self {
            Self::Polyline { vertices, cumulative } => {
                let i = Self::segment_index(cumulative, theta);
                let dir = (vertices[i + 1] - vertices[i]) / (cumulative[i + 1] - cumulative[i]);
                vertices[i] + dir * (theta - cumulative[i])
            }
            Self::EllipseArc { center, a, b } => {
                Point::new(center.x + a * theta.cos(), center.y + b * theta.sin())
            }
            Self::CircleArc { center, radius } => {
                Point::new(center.x + radius * theta.cos(), center.y + radius * theta.sin())
            }
        }
    }

    fn velocity(&self, theta: f64) -> Vec2 {
        match self {
            Self::Polyline { vertices, cumulative } => {
                let i = Self::segment_index(cumulative, theta);
                (vertices[i + 1] - vertices[i]) / (cumulative[i + 1] - cumulative[i])
            }
            Self::EllipseArc { a, b, .. } => Vec2::new(-a * theta.sin(), b * theta.cos()),
            Self::CircleArc { radius, .. } => {
                Vec2::new(-radius * theta.sin(), radius * theta.cos())
            }
        }
    }

    /// Interior corner parameters (polyline vertices); empty for smooth shapes.
    fn corners(&self) -> Vec<f64> {
        match self {
            Self::Polyline { cumulative, .. } => cumulative[1..cumulative.len() - 1].to_vec(),
            _ => Vec::new(),
        }
    }

    fn describe(&self) -> String {
        match self {
            Self::Polyline { vertices, .. } => {
                let vs: Vec<String> = vertices.iter().map(|v| format!("({:?},{:?})", v.x, v.y)).collect();
                format!("polyline[{}]", vs.join(";"))
            }
            Self::EllipseArc { center, a, b } => {
                format!("ellipse[c=({:?},{:?}),a={a:?},b={b:?}]", center.x, center.y)
            }
            Self::CircleArc { center, radius } => {
                format!("circle[c=({:?},{:?}),r={radius:?}]", center.x, center.y)
            }
        }
    }
}

/// An open parametrized arc with its panel count and normal convention.
#[derive(Clone, Debug)]
pub struct BoundaryCurve {
    pub shape: CurveShape,
    pub interval: (f64, f64),
    pub n_panels: usize,
    /// When true the normal is the counterclockwise rotation of the tangent
    /// instead of the default clockwise one (domain on the right).
    pub flip_normal: bool,
}

impl BoundaryCurve {
    pub fn new(shape: CurveShape, interval: (f64, f64), n_panels: usize) -> Result<Self, ConfigError> {
        if !(interval.1 > interval.0) {
            return Err(ConfigError::BadCurve(format!(
                "parameter interval [{}, {}] is empty",
                interval.0, interval.1
            )));
        }
        Ok(Self { shape, interval, n_panels, flip_normal: false })
    }

    /// Unit-speed polyline over [0, total length].
    pub fn polyline(vertices: Vec<Point>, n_panels: usize) -> Result<Self, ConfigError> {
        let shape = CurveShape::polyline(vertices)?;
        let total = match &shape {
            CurveShape::Polyline { cumulative, .. } => *cumulative.last().unwrap(),
            _ => unreachable!(),
        };
        Self::new(shape, (0.0, total), n_panels)
    }

    pub fn point(&self, theta: f64) -> Point {
        self.shape.point(theta)
    }

    pub fn velocity(&self, theta: f64) -> Vec2 {
        self.shape.velocity(theta)
    }

    pub fn jacobian(&self, theta: f64) -> f64 {
        self.velocity(theta).norm()
    }

    pub fn unit_normal(&self, theta: f64) -> Vec2 {
        let v = self.velocity(theta);
        let t = v / v.norm();
        let n = Vec2::new(t.y, -t.x);
        if self.flip_normal {
            -n
        } else {
            n
        }
    }

    pub fn corner_params(&self) -> Vec<f64> {
        self.shape.corners()
    }

    pub fn start(&self) -> Point {
        self.point(self.interval.0)
    }

    pub fn end(&self) -> Point {
        self.point(self.interval.1)
    }

    pub fn with_n_panels(mut self, n_panels: usize) -> Self {
        self.n_panels = n_panels;
        self
    }

    /// Points at `n` equidistant parameters (both ends included).
    pub fn sample(&self, n: usize) -> Vec<Point> {
        let (t0, t1) = self.interval;
        (0..n)
            .map(|i| self.point(t0 + (t1 - t0) * i as f64 / (n - 1) as f64))
            .collect()
    }

    fn describe(&self) -> String {
        format!(
            "{}@[{:?},{:?}]x{}{}",
            self.shape.describe(),
            self.interval.0,
            self.interval.1,
            self.n_panels,
            if self.flip_normal { "!" } else { "" }
        )
    }
}

/// Relative Gauss–Legendre offsets within a panel; the first one is the
/// collocation offset α = (1−√(3/5))/2.
pub fn collocation_offset() -> f64 {
    (1.0 - (3.0f64 / 5.0).sqrt()) / 2.0
}

pub fn panel_offsets() -> [f64; 3] {
    let a = collocation_offset();
    [a, 0.5, 1.0 - a]
}

pub const PANEL_WEIGHTS: [f64; 3] = [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0];

/// One parameter panel with its three Gauss–Legendre nodes.
#[derive(Clone, Debug)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    /// Parameter values of the three nodes.
    pub thetas: [f64; 3],
    /// Parameter-measure weights, summing to b−a.
    pub weights: [f64; 3],
    /// ‖x′‖ at the nodes.
    pub jacobians: [f64; 3],
    /// Arc length of the panel by the panel rule itself.
    pub arc_length: f64,
}

/// Node data shared by quadrature and collocation.
#[derive(Clone, Debug)]
pub struct CollocationNode {
    pub panel: usize,
    pub slot: usize,
    pub theta: f64,
    pub point: Point,
    pub normal: Vec2,
    pub jacobian: f64,
    /// Parameter-measure quadrature weight.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct PanelQuadrature {
    pub panels: Vec<Panel>,
    pub nodes: Vec<CollocationNode>,
    pub collocation_offset: f64,
}

/// Split the curve into `n_panels` near-equidistant parameter panels with
/// corners snapped to panel boundaries, and attach the 3-node rule.
pub fn build_panels(curve: &BoundaryCurve) -> Result<PanelQuadrature, ConfigError> {
    let (t0, t1) = curve.interval;
    let nf = curve.n_panels;
    let corners = curve.corner_params();
    if nf < corners.len() + 1 {
        return Err(ConfigError::CornerDensity { n_panels: nf, n_corners: corners.len() });
    }
    let h = (t1 - t0) / nf as f64;

    // snap each corner to its nearest interior panel boundary
    let mut snap_idx: Vec<usize> = Vec::with_capacity(corners.len());
    for c in &corners {
        let idx = (((c - t0) / h).round() as usize).clamp(1, nf - 1);
        if let Some(prev) = snap_idx.last() {
            if idx <= *prev {
                return Err(ConfigError::CornerDensity { n_panels: nf, n_corners: corners.len() });
            }
        }
        snap_idx.push(idx);
    }

    // re-equidistribute panels within each smooth piece
    let mut boundaries = Vec::with_capacity(nf + 1);
    let mut piece_start = t0;
    let mut idx_start = 0usize;
    for (c, idx) in corners.iter().zip(snap_idx.iter()).chain(std::iter::once((&t1, &nf))) {
        let count = idx - idx_start;
        let width = (c - piece_start) / count as f64;
        for j in 0..count {
            boundaries.push(piece_start + width * j as f64);
        }
        piece_start = *c;
        idx_start = *idx;
    }
    boundaries.push(t1);

    let offs = panel_offsets();
    let mut panels = Vec::with_capacity(nf);
    let mut nodes = Vec::with_capacity(3 * nf);
    for p in 0..nf {
        let (a, b) = (boundaries[p], boundaries[p + 1]);
        let len = b - a;
        let thetas = [a + offs[0] * len, a + offs[1] * len, a + offs[2] * len];
        let weights = [PANEL_WEIGHTS[0] * len, PANEL_WEIGHTS[1] * len, PANEL_WEIGHTS[2] * len];
        let mut jacobians = [0.0; 3];
        let mut arc_length = 0.0;
        for s in 0..3 {
            jacobians[s] = curve.jacobian(thetas[s]);
            arc_length += weights[s] * jacobians[s];
            nodes.push(CollocationNode {
                panel: p,
                slot: s,
                theta: thetas[s],
                point: curve.point(thetas[s]),
                normal: curve.unit_normal(thetas[s]),
                jacobian: jacobians[s],
                weight: weights[s],
            });
        }
        panels.push(Panel { a, b, thetas, weights, jacobians, arc_length });
    }
    Ok(PanelQuadrature { panels, nodes, collocation_offset: collocation_offset() })
}

/// An arc together with its panel decomposition; the unit all solvers consume.
#[derive(Clone, Debug)]
pub struct PanelizedArc {
    pub curve: BoundaryCurve,
    pub quad: PanelQuadrature,
}

impl PanelizedArc {
    pub fn new(curve: BoundaryCurve) -> Result<Self, ConfigError> {
        let quad = build_panels(&curve)?;
        Ok(Self { curve, quad })
    }

    pub fn n_nodes(&self) -> usize {
        self.quad.nodes.len()
    }

    pub fn nodes(&self) -> &[CollocationNode] {
        &self.quad.nodes
    }

    /// Arc-length quadrature of node samples: Σ wᵢ·Jᵢ·vᵢ.
    pub fn integrate_nodal(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.n_nodes());
        self.quad
            .nodes
            .iter()
            .zip(values)
            .map(|(n, v)| n.weight * n.jacobian * v)
            .sum()
    }

    pub fn arc_length(&self) -> f64 {
        self.quad.panels.iter().map(|p| p.arc_length).sum()
    }

    /// Index of the panel whose parameter range contains theta (clamped).
    pub fn panel_containing(&self, theta: f64) -> usize {
        let i = self.quad.panels.partition_point(|p| p.b <= theta);
        i.min(self.quad.panels.len() - 1)
    }
}

/// Corrosion coefficient γ on the corroded arc, as a function of parameter.
#[derive(Clone, Debug)]
pub enum GammaCoeff {
    Constant(f64),
    /// Piecewise constant in parameter: value[i] on [breaks[i], breaks[i+1]].
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
}

impl GammaCoeff {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Piecewise { breaks, values } => {
                let i = breaks.partition_point(|b| *b <= theta);
                values[i.saturating_sub(1).min(values.len() - 1)]
            }
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Self::Constant(v) => (*v, *v),
            Self::Piecewise { values, .. } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v))),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let (lo, _) = self.bounds();
        if !(lo > 0.0) {
            return Err(ConfigError::NonPositiveGamma(lo));
        }
        if let Self::Piecewise { breaks, values } = self {
            if breaks.len() != values.len() + 1 || values.is_empty() {
                return Err(ConfigError::Validation(
                    "piecewise gamma needs len(breaks) = len(values)+1".into(),
                ));
            }
        }
        Ok(())
    }

    fn describe(&self) -> String {
        match self {
            Self::Constant(v) => format!("const:{v:?}"),
            Self::Piecewise { breaks, values } => format!("pw:{breaks:?}:{values:?}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionLabel {
    /// Inside the corroded part Ω.
    Corroded,
    /// Inside the healthy remainder D∖Ω̄.
    Healthy,
    /// Outside the object D.
    Outside,
}

impl RegionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Corroded => "corroded",
            Self::Healthy => "healthy",
            Self::Outside => "outside",
        }
    }
}

/// Point classifier used for scoring reconstructions (never by the inversion).
#[derive(Clone, Debug)]
pub enum RegionTest {
    Example1,
    Example2,
    Example3,
    /// Same object, corrosion removed: everything inside D is healthy.
    DomainOnly(Box<RegionTest>),
    /// Point-in-polygon tests on sampled arc loops (custom geometries):
    /// `outer` bounds D, `healthy` bounds D∖Ω̄.
    Sampled { outer: Vec<Point>, healthy: Vec<Point> },
}

impl RegionTest {
    pub fn classify(&self, p: &Point) -> RegionLabel {
        match self {
            Self::Example1 => {
                let two_pi = 2.0 * std::f64::consts::PI;
                if !(p.x > 0.0 && p.x < two_pi && p.y > -two_pi && p.y < 0.0) {
                    return RegionLabel::Outside;
                }
                let in_corroded =
                    p.y < -1.5 * std::f64::consts::PI || p.x < -p.y / 3.0 || p.x > two_pi + p.y / 3.0;
                if in_corroded {
                    RegionLabel::Corroded
                } else {
                    RegionLabel::Healthy
                }
            }
            Self::Example2 => {
                if !(p.x > 0.0 && p.y > 0.0 && p.x * p.x + p.y * p.y < 1.0) {
                    return RegionLabel::Outside;
                }
                if p.x + p.y < 1.0 {
                    RegionLabel::Corroded
                } else {
                    RegionLabel::Healthy
                }
            }
            Self::Example3 => {
                let xr = p.x / 1.1;
                if xr * xr + p.y * p.y >= 1.0 {
                    return RegionLabel::Outside;
                }
                let yr = p.y / 0.5;
                if p.y < 0.0 && xr * xr + yr * yr > 1.0 {
                    RegionLabel::Corroded
                } else {
                    RegionLabel::Healthy
                }
            }
            Self::DomainOnly(inner) => match inner.classify(p) {
                RegionLabel::Outside => RegionLabel::Outside,
                _ => RegionLabel::Healthy,
            },
            Self::Sampled { outer, healthy } => {
                if !point_in_polygon(outer, p) {
                    RegionLabel::Outside
                } else if point_in_polygon(healthy, p) {
                    RegionLabel::Healthy
                } else {
                    RegionLabel::Corroded
                }
            }
        }
    }
}

/// Even-odd ray-crossing test on a closed polygon.
pub fn point_in_polygon(poly: &[Point], p: &Point) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (&poly[i], &poly[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let x_cross = pi.x + (p.y - pi.y) / (pj.y - pi.y) * (pj.x - pi.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Signed winding number of a sampled closed loop around `p`.
pub fn winding_number(samples: &[Point], p: &Point) -> f64 {
    let mut total = 0.0;
    for i in 0..samples.len() {
        let a = samples[i] - p;
        let b = samples[(i + 1) % samples.len()] - p;
        total += (a.x * b.y - a.y * b.x).atan2(a.x * b.x + a.y * b.y);
    }
    total / (2.0 * std::f64::consts::PI)
}

/// Full forward-problem description: the three arcs, γ, and the region
/// classifier for scoring.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub gamma_n: BoundaryCurve,
    pub gamma_d: BoundaryCurve,
    pub gamma_c: BoundaryCurve,
    pub gamma_coeff: GammaCoeff,
    pub region_test: RegionTest,
    /// Degenerate pathway (no corrosion): the corroded arc aliases the buried
    /// one and the corroded solver imposes a Dirichlet instead of a Robin
    /// condition there. Only meaningful for the zero-gap oracle.
    pub gamma_c_dirichlet: bool,
    pub n_f: usize,
    source: String,
}

impl ProblemSpec {
    pub fn new(
        gamma_n: BoundaryCurve,
        gamma_d: BoundaryCurve,
        gamma_c: BoundaryCurve,
        gamma_coeff: GammaCoeff,
        region_test: RegionTest,
        n_f: usize,
        source: String,
    ) -> Result<Self, ConfigError> {
        let spec = Self {
            gamma_n,
            gamma_d,
            gamma_c,
            gamma_coeff,
            region_test,
            gamma_c_dirichlet: false,
            n_f,
            source,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.gamma_coeff.validate()?;
        if self.n_f < 4 {
            return Err(ConfigError::Validation(format!("n_f must be at least 4, got {}", self.n_f)));
        }
        let diam = self.diameter_estimate();
        let tol = 1e-9 * diam;
        let chain = |a: Point, b: Point, what: &str| -> Result<(), ConfigError> {
            if (a - b).norm() > tol {
                Err(ConfigError::Validation(format!(
                    "{what} endpoints do not meet: ({}, {}) vs ({}, {})",
                    a.x, a.y, b.x, b.y
                )))
            } else {
                Ok(())
            }
        };
        chain(self.gamma_n.end(), self.gamma_d.start(), "gamma_n/gamma_d")?;
        chain(self.gamma_d.end(), self.gamma_n.start(), "gamma_d/gamma_n")?;
        chain(self.gamma_n.end(), self.gamma_c.start(), "gamma_n/gamma_c")?;
        chain(self.gamma_c.end(), self.gamma_n.start(), "gamma_c/gamma_n")?;
        if !self.gamma_c_dirichlet {
            self.check_disjoint(&self.gamma_n, &self.gamma_d, "gamma_n/gamma_d", tol)?;
            self.check_disjoint(&self.gamma_n, &self.gamma_c, "gamma_n/gamma_c", tol)?;
        }
        Ok(())
    }

    fn check_disjoint(
        &self,
        a: &BoundaryCurve,
        b: &BoundaryCurve,
        what: &str,
        tol: f64,
    ) -> Result<(), ConfigError> {
        // interior samples only; shared endpoints are expected
        let sa: Vec<Point> = (1..32).map(|i| a.point(lerp(a.interval, i as f64 / 32.0))).collect();
        let sb: Vec<Point> = (1..32).map(|i| b.point(lerp(b.interval, i as f64 / 32.0))).collect();
        for p in &sa {
            for q in &sb {
                if (p - q).norm() < tol {
                    return Err(ConfigError::Validation(format!("arcs {what} overlap near ({}, {})", p.x, p.y)));
                }
            }
        }
        Ok(())
    }

    pub fn diameter_estimate(&self) -> f64 {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for curve in [&self.gamma_n, &self.gamma_d, &self.gamma_c] {
            for p in curve.sample(16) {
                lo.x = lo.x.min(p.x);
                lo.y = lo.y.min(p.y);
                hi.x = hi.x.max(p.x);
                hi.y = hi.y.max(p.y);
            }
        }
        (hi - lo).norm()
    }

    pub fn with_gamma(mut self, gamma: GammaCoeff) -> Result<Self, ConfigError> {
        gamma.validate()?;
        self.gamma_coeff = gamma;
        Ok(self)
    }

    pub fn with_n_f(mut self, n_f: usize) -> Self {
        self.gamma_n.n_panels = n_f;
        self.gamma_d.n_panels = n_f;
        self.gamma_c.n_panels = n_f;
        self.n_f = n_f;
        self
    }

    /// Degenerate no-corrosion variant: Γ_C aliases Γ_D and the corroded
    /// solver imposes the Dirichlet condition there, so both forward maps
    /// coincide exactly.
    pub fn degenerate(mut self) -> Self {
        self.gamma_c = self.gamma_d.clone();
        self.gamma_c_dirichlet = true;
        self.region_test = RegionTest::DomainOnly(Box::new(self.region_test.clone()));
        self
    }

    /// Canonical description of the resolved spec; feeds the provenance hash.
    pub fn descriptor(&self) -> String {
        format!(
            "{};nf={};gamma={};gn={};gd={};gc={};degenerate={}",
            self.source,
            self.n_f,
            self.gamma_coeff.describe(),
            self.gamma_n.describe(),
            self.gamma_d.describe(),
            self.gamma_c.describe(),
            self.gamma_c_dirichlet,
        )
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.descriptor().as_bytes());
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Default imaging rectangle: [[xmin, xmax], [ymin, ymax]].
    pub fn imaging_bounds(&self) -> [[f64; 2]; 2] {
        let pi = std::f64::consts::PI;
        match self.region_test {
            RegionTest::Example1 => [[0.0, 2.0 * pi], [-2.0 * pi, 0.0]],
            RegionTest::Example2 => [[0.0, 1.0], [0.0, 1.0]],
            RegionTest::Example3 => [[-1.1, 1.1], [-1.1, 1.1]],
            _ => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for curve in [&self.gamma_n, &self.gamma_d, &self.gamma_c] {
                    for p in curve.sample(64) {
                        lo[0] = lo[0].min(p.x);
                        lo[1] = lo[1].min(p.y);
                        hi[0] = hi[0].max(p.x);
                        hi[1] = hi[1].max(p.y);
                    }
                }
                [[lo[0], hi[0]], [lo[1], hi[1]]]
            }
        }
    }
}

fn lerp(interval: (f64, f64), t: f64) -> f64 {
    interval.0 + (interval.1 - interval.0) * t
}

/// The three built-in experiment domains.
pub fn make_example(id: u8, n_f: usize) -> Result<ProblemSpec, ConfigError> {
    let pi = std::f64::consts::PI;
    let two_pi = 2.0 * pi;
    let gamma = GammaCoeff::Constant(0.5);
    match id {
        1 => {
            // square D = [0,2π]×[−2π,0]; accessible top edge; buried left,
            // bottom and right edges; corrosion interface = lower three edges
            // of the healthy trapezoid
            let gn = BoundaryCurve::polyline(
                vec![Point::new(two_pi, 0.0), Point::new(0.0, 0.0)],
                n_f,
            )?;
            let gd = BoundaryCurve::polyline(
                vec![
                    Point::new(0.0, 0.0),
                    Point::new(0.0, -two_pi),
                    Point::new(two_pi, -two_pi),
                    Point::new(two_pi, 0.0),
                ],
                n_f,
            )?;
            let gc = BoundaryCurve::polyline(
                vec![
                    Point::new(0.0, 0.0),
                    Point::new(pi / 2.0, -1.5 * pi),
                    Point::new(1.5 * pi, -1.5 * pi),
                    Point::new(two_pi, 0.0),
                ],
                n_f,
            )?;
            ProblemSpec::new(gn, gd, gc, gamma, RegionTest::Example1, n_f, "example=1".into())
        }
        2 => {
            // quarter disk of radius 1; accessible arc, buried axis legs,
            // corrosion along the chord from (0,1) to (1,0)
            let origin = Point::new(0.0, 0.0);
            let gn = BoundaryCurve::new(
                CurveShape::CircleArc { center: origin, radius: 1.0 },
                (0.0, pi / 2.0),
                n_f,
            )?;
            let gd = BoundaryCurve::polyline(
                vec![Point::new(0.0, 1.0), origin, Point::new(1.0, 0.0)],
                n_f,
            )?;
            let gc = BoundaryCurve::polyline(
                vec![Point::new(0.0, 1.0), Point::new(1.0, 0.0)],
                n_f,
            )?;
            ProblemSpec::new(gn, gd, gc, gamma, RegionTest::Example2, n_f, "example=2".into())
        }
        3 => {
            // ellipse with half-axes 1.1 and 1; upper half accessible, lower
            // half buried; corrosion interface = lower half of the flattened
            // ellipse with half-axes 1.1 and 0.5
            let origin = Point::new(0.0, 0.0);
            let gn = BoundaryCurve::new(
                CurveShape::EllipseArc { center: origin, a: 1.1, b: 1.0 },
                (0.0, pi),
                n_f,
            )?;
            let gd = BoundaryCurve::new(
                CurveShape::EllipseArc { center: origin, a: 1.1, b: 1.0 },
                (pi, two_pi),
                n_f,
            )?;
            let gc = BoundaryCurve::new(
                CurveShape::EllipseArc { center: origin, a: 1.1, b: 0.5 },
                (pi, two_pi),
                n_f,
            )?;
            ProblemSpec::new(gn, gd, gc, gamma, RegionTest::Example3, n_f, "example=3".into())
        }
        other => Err(ConfigError::UnknownExample(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn example3_marker_points() {
        let spec = make_example(3, 300).unwrap();
        let p = spec.gamma_n.point(0.0);
        assert_abs_diff_eq!(p.x, 1.1, epsilon = 1e-14);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-14);
        let q = spec.gamma_c.point(1.5 * std::f64::consts::PI);
        assert_abs_diff_eq!(q.x, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.y, -0.5, epsilon = 1e-14);
        // outward normal of the healthy region at the bottom of the interface
        let n = spec.gamma_c.unit_normal(1.5 * std::f64::consts::PI);
        assert_abs_diff_eq!(n.x, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(n.y, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn example1_interface_vertices() {
        let spec = make_example(1, 300).unwrap();
        match &spec.gamma_c.shape {
            CurveShape::Polyline { vertices, .. } => {
                let pi = std::f64::consts::PI;
                assert!(vertices
                    .iter()
                    .any(|v| (v - Point::new(pi / 2.0, -1.5 * pi)).norm() < 1e-14));
            }
            _ => panic!("expected a polyline"),
        }
    }

    #[test]
    fn unknown_example_rejected() {
        assert!(matches!(make_example(4, 100), Err(ConfigError::UnknownExample(4))));
    }

    #[test]
    fn single_panel_nodes_at_gauss_offsets() {
        let curve =
            BoundaryCurve::polyline(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)], 1).unwrap();
        let quad = build_panels(&curve).unwrap();
        let alpha = collocation_offset();
        let got: Vec<f64> = quad.nodes.iter().map(|n| n.theta).collect();
        assert_abs_diff_eq!(got[0], alpha, epsilon = 1e-15);
        assert_abs_diff_eq!(got[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(got[2], 1.0 - alpha, epsilon = 1e-15);
    }

    #[test]
    fn circle_arc_length_exact() {
        let curve = BoundaryCurve::new(
            CurveShape::CircleArc { center: Point::new(0.3, -0.2), radius: 1.3 },
            (0.2, 1.9),
            2,
        )
        .unwrap();
        let arc = PanelizedArc::new(curve).unwrap();
        assert_relative_eq!(arc.arc_length(), 1.3 * 1.7, max_relative = 1e-10);
    }

    #[test]
    fn ellipse_arc_length_matches_reference() {
        // reference value: independent high-precision quadrature
        let curve = BoundaryCurve::new(
            CurveShape::EllipseArc { center: Point::new(0.0, 0.0), a: 1.1, b: 1.0 },
            (0.0, std::f64::consts::PI),
            100,
        )
        .unwrap();
        let arc = PanelizedArc::new(curve).unwrap();
        assert_relative_eq!(arc.arc_length(), 3.3005425470688482, max_relative = 1e-12);
    }

    #[test]
    fn corners_snap_to_panel_boundaries() {
        for nf in [7, 150, 300] {
            let spec = make_example(1, nf).unwrap();
            let quad = build_panels(&spec.gamma_d).unwrap();
            for c in spec.gamma_d.corner_params() {
                let on_boundary = quad
                    .panels
                    .iter()
                    .any(|p| (p.a - c).abs() < 1e-12 || (p.b - c).abs() < 1e-12);
                assert!(on_boundary, "corner {c} not on a panel boundary at nf={nf}");
            }
            assert_eq!(quad.panels.len(), nf);
        }
    }

    #[test]
    fn too_many_corners_rejected() {
        let pts: Vec<Point> = (0..9).map(|i| Point::new(i as f64, (i % 2) as f64)).collect();
        let curve = BoundaryCurve::polyline(pts, 4).unwrap();
        assert!(matches!(build_panels(&curve), Err(ConfigError::CornerDensity { .. })));
    }

    #[test]
    fn smooth_quadrature_order_at_least_four() {
        let f = |p: Point| (p.x * 1.7).sin() * (p.y + 0.3).cos();
        let errs: Vec<f64> = [8usize, 16, 32]
            .iter()
            .map(|nf| {
                let curve = BoundaryCurve::new(
                    CurveShape::EllipseArc { center: Point::new(0.0, 0.0), a: 1.1, b: 1.0 },
                    (0.0, 2.3),
                    *nf,
                )
                .unwrap();
                let arc = PanelizedArc::new(curve).unwrap();
                let vals: Vec<f64> = arc.nodes().iter().map(|n| f(n.point)).collect();
                arc.integrate_nodal(&vals)
            })
            .collect();
        let fine = {
            let curve = BoundaryCurve::new(
                CurveShape::EllipseArc { center: Point::new(0.0, 0.0), a: 1.1, b: 1.0 },
                (0.0, 2.3),
                512,
            )
            .unwrap();
            let arc = PanelizedArc::new(curve).unwrap();
            let vals: Vec<f64> = arc.nodes().iter().map(|n| f(n.point)).collect();
            arc.integrate_nodal(&vals)
        };
        let e8 = (errs[0] - fine).abs();
        let e16 = (errs[1] - fine).abs();
        let e32 = (errs[2] - fine).abs();
        assert!(e8 / e16 > 16.0, "refinement 8->16 only gained {}", e8 / e16);
        assert!(e16 / e32 > 16.0, "refinement 16->32 only gained {}", e16 / e32);
    }

    #[test]
    fn normals_point_into_corrosion() {
        for id in [1u8, 2, 3] {
            let spec = make_example(id, 64).unwrap();
            let eps = 1e-6 * spec.diameter_estimate();
            let arc = PanelizedArc::new(spec.gamma_c.clone()).unwrap();
            for node in arc.nodes() {
                let inward = node.point + node.normal * eps;
                let outward = node.point - node.normal * eps;
                assert_eq!(
                    spec.region_test.classify(&inward),
                    RegionLabel::Corroded,
                    "example {id}: normal at theta={} does not enter the corroded part",
                    node.theta
                );
                assert_eq!(
                    spec.region_test.classify(&outward),
                    RegionLabel::Healthy,
                    "example {id}: normal at theta={} does not leave the healthy part",
                    node.theta
                );
            }
        }
    }

    #[test]
    fn object_boundary_winds_once_counterclockwise() {
        let probes = [
            Point::new(std::f64::consts::PI, -std::f64::consts::PI),
            Point::new(0.3, 0.3),
            Point::new(0.0, 0.2),
        ];
        for (id, probe) in [1u8, 2, 3].iter().zip(probes.iter()) {
            let spec = make_example(*id, 64).unwrap();
            let mut loop_pts = spec.gamma_n.sample(400);
            loop_pts.extend(spec.gamma_d.sample(400));
            let w = winding_number(&loop_pts, probe);
            assert_relative_eq!(w, 1.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn region_spot_checks() {
        let pi = std::f64::consts::PI;
        let r1 = RegionTest::Example1;
        assert_eq!(r1.classify(&Point::new(pi, -1.75 * pi)), RegionLabel::Corroded);
        assert_eq!(r1.classify(&Point::new(pi, -1.0)), RegionLabel::Healthy);
        assert_eq!(r1.classify(&Point::new(6.0, -1.0)), RegionLabel::Corroded);
        assert_eq!(r1.classify(&Point::new(7.0, -1.0)), RegionLabel::Outside);
        let r2 = RegionTest::Example2;
        assert_eq!(r2.classify(&Point::new(0.2, 0.2)), RegionLabel::Corroded);
        assert_eq!(r2.classify(&Point::new(0.8, 0.55)), RegionLabel::Healthy);
        assert_eq!(r2.classify(&Point::new(0.9, 0.9)), RegionLabel::Outside);
        let r3 = RegionTest::Example3;
        assert_eq!(r3.classify(&Point::new(0.0, -0.9)), RegionLabel::Corroded);
        assert_eq!(r3.classify(&Point::new(0.0, -0.3)), RegionLabel::Healthy);
        assert_eq!(r3.classify(&Point::new(0.0, 1.2)), RegionLabel::Outside);
    }

    #[test]
    fn degenerate_spec_has_no_corrosion() {
        let spec = make_example(3, 32).unwrap().degenerate();
        assert!(spec.gamma_c_dirichlet);
        assert_eq!(spec.region_test.classify(&Point::new(0.0, -0.9)), RegionLabel::Healthy);
        assert_eq!(spec.region_test.classify(&Point::new(0.0, 1.2)), RegionLabel::Outside);
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let a = make_example(3, 300).unwrap();
        let b = make_example(3, 300).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = make_example(3, 150).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
        let d = a.clone().with_gamma(GammaCoeff::Constant(2.0)).unwrap();
        assert_ne!(d.fingerprint(), b.fingerprint());
    }

    proptest! {
        #[test]
        fn panel_weights_sum_to_panel_length(nf in 1usize..60, t0 in -3.0f64..3.0, len in 0.1f64..8.0) {
            let curve = BoundaryCurve::new(
                CurveShape::CircleArc { center: Point::new(0.0, 0.0), radius: 2.0 },
                (t0, t0 + len),
                nf,
            ).unwrap();
            let quad = build_panels(&curve).unwrap();
            for p in &quad.panels {
                let s: f64 = p.weights.iter().sum();
                prop_assert!((s - (p.b - p.a)).abs() < 1e-12 * len);
                prop_assert!(p.weights.iter().all(|w| *w > 0.0));
            }
            let total: f64 = quad.panels.iter().map(|p| p.b - p.a).sum();
            prop_assert!((total - len).abs() < 1e-9 * len);
        }

        #[test]
        fn piecewise_gamma_evaluates_within_bounds(vals in proptest::collection::vec(0.1f64..5.0, 1..6), theta in 0.0f64..1.0) {
            let n = vals.len();
            let breaks: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let g = GammaCoeff::Piecewise { breaks, values: vals.clone() };
            g.validate().unwrap();
            let v = g.eval(theta);
            let (lo, hi) = g.bounds();
            prop_assert!(v >= lo && v <= hi);
        }
    }
}
