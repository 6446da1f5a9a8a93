//! TOML problem descriptions: either a built-in example id with overrides or
//! a fully custom trio of arcs.

use super::{
    make_example, BoundaryCurve, ConfigError, CurveShape, GammaCoeff, Point, ProblemSpec,
    RegionTest,
};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    /// Built-in example id (1..3). Mutually exclusive with explicit arcs.
    pub example: Option<u8>,
    /// Panels per arc; defaults to 300.
    pub nf: Option<usize>,
    pub gamma: Option<GammaConfig>,
    pub gamma_n: Option<ArcConfig>,
    pub gamma_d: Option<ArcConfig>,
    pub gamma_c: Option<ArcConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum GammaConfig {
    Constant(f64),
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
}

impl GammaConfig {
    fn into_coeff(self) -> GammaCoeff {
        match self {
            Self::Constant(v) => GammaCoeff::Constant(v),
            Self::Piecewise { breaks, values } => GammaCoeff::Piecewise { breaks, values },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ArcConfig {
    /// "points" declares tabulated samples joined by straight segments,
    /// which is the same thing as a polyline.
    #[serde(alias = "points")]
    Polyline {
        vertices: Vec<[f64; 2]>,
        #[serde(default)]
        flip_normal: bool,
    },
    EllipseArc {
        center: [f64; 2],
        a: f64,
        b: f64,
        interval: [f64; 2],
        #[serde(default)]
        flip_normal: bool,
    },
    CircleArc {
        center: [f64; 2],
        radius: f64,
        interval: [f64; 2],
        #[serde(default)]
        flip_normal: bool,
    },
}

impl ArcConfig {
    fn into_curve(self, n_panels: usize) -> Result<BoundaryCurve, ConfigError> {
        let (mut curve, flip) = match self {
            Self::Polyline { vertices, flip_normal } => {
                let pts = vertices.into_iter().map(|[x, y]| Point::new(x, y)).collect();
                (BoundaryCurve::polyline(pts, n_panels)?, flip_normal)
            }
            Self::EllipseArc { center, a, b, interval, flip_normal } => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(ConfigError::BadCurve(format!(
                        "ellipse half-axes must be positive, got a={a}, b={b}"
                    )));
                }
                let shape = CurveShape::EllipseArc { center: Point::new(center[0], center[1]), a, b };
                (BoundaryCurve::new(shape, (interval[0], interval[1]), n_panels)?, flip_normal)
            }
            Self::CircleArc { center, radius, interval, flip_normal } => {
                if !(radius > 0.0) {
                    return Err(ConfigError::BadCurve(format!(
                        "circle radius must be positive, got {radius}"
                    )));
                }
                let shape = CurveShape::CircleArc { center: Point::new(center[0], center[1]), radius };
                (BoundaryCurve::new(shape, (interval[0], interval[1]), n_panels)?, flip_normal)
            }
        };
        curve.flip_normal = flip;
        Ok(curve)
    }
}

impl SpecConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn into_spec(self) -> Result<ProblemSpec, ConfigError> {
        let n_f = self.nf.unwrap_or(300);
        let custom = self.gamma_n.is_some() || self.gamma_d.is_some() || self.gamma_c.is_some();
        if let Some(id) = self.example {
            if custom {
                return Err(ConfigError::Validation(
                    "give either an example id or explicit arcs, not both".into(),
                ));
            }
            let mut spec = make_example(id, n_f)?;
            if let Some(g) = self.gamma {
                spec = spec.with_gamma(g.into_coeff())?;
            }
            return Ok(spec);
        }
        let (Some(gn), Some(gd), Some(gc)) = (self.gamma_n, self.gamma_d, self.gamma_c) else {
            return Err(ConfigError::Validation(
                "custom specs need all of gamma_n, gamma_d and gamma_c".into(),
            ));
        };
        let gn = gn.into_curve(n_f)?;
        let gd = gd.into_curve(n_f)?;
        let gc = gc.into_curve(n_f)?;
        let gamma = self.gamma.map(GammaConfig::into_coeff).unwrap_or(GammaCoeff::Constant(0.5));
        let region = sampled_region(&gn, &gd, &gc);
        ProblemSpec::new(gn, gd, gc, gamma, region, n_f, "custom".into())
    }
}

fn sampled_region(gn: &BoundaryCurve, gd: &BoundaryCurve, gc: &BoundaryCurve) -> RegionTest {
    let loop_of = |a: &BoundaryCurve, b: &BoundaryCurve| {
        let mut pts = a.sample(601);
        pts.pop();
        let mut tail = b.sample(601);
        tail.pop();
        pts.extend(tail);
        pts
    };
    RegionTest::Sampled { outer: loop_of(gn, gd), healthy: loop_of(gn, gc) }
}

pub fn load_spec(path: &std::path::Path) -> Result<ProblemSpec, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
    SpecConfig::from_toml_str(&text)?.into_spec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RegionLabel;

    #[test]
    fn example_shorthand_with_overrides() {
        let cfg = SpecConfig::from_toml_str("example = 2\nnf = 64\ngamma = 2.0\n").unwrap();
        let spec = cfg.into_spec().unwrap();
        assert_eq!(spec.n_f, 64);
        assert_eq!(spec.gamma_coeff.bounds(), (2.0, 2.0));
        assert!(matches!(spec.region_test, RegionTest::Example2));
    }

    #[test]
    fn custom_spec_builds_and_classifies() {
        let text = r#"
nf = 32
gamma = { breaks = [0.0, 1.5707963267948966], values = [0.5] }

[gamma_n]
kind = "circle-arc"
center = [0.0, 0.0]
radius = 1.0
interval = [0.0, 1.5707963267948966]

[gamma_d]
kind = "polyline"
vertices = [[0.0, 1.0], [0.0, 0.0], [1.0, 0.0]]

[gamma_c]
kind = "polyline"
vertices = [[0.0, 1.0], [1.0, 0.0]]
"#;
        let spec = SpecConfig::from_toml_str(text).unwrap().into_spec().unwrap();
        assert_eq!(spec.region_test.classify(&Point::new(0.2, 0.2)), RegionLabel::Corroded);
        assert_eq!(spec.region_test.classify(&Point::new(0.8, 0.55)), RegionLabel::Healthy);
        assert_eq!(spec.region_test.classify(&Point::new(0.9, 0.9)), RegionLabel::Outside);
    }

    #[test]
    fn nonpositive_gamma_rejected() {
        let cfg = SpecConfig::from_toml_str("example = 1\ngamma = -0.5\n").unwrap();
        assert!(matches!(cfg.into_spec(), Err(ConfigError::NonPositiveGamma(_))));
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(SpecConfig::from_toml_str("example = 1\nbogus = 3\n").is_err());
    }

    #[test]
    fn example_plus_custom_arcs_rejected() {
        let text = "example = 1\n[gamma_c]\nkind = \"polyline\"\nvertices = [[0.0,0.0],[1.0,0.0]]\n";
        let cfg = SpecConfig::from_toml_str(text).unwrap();
        assert!(matches!(cfg.into_spec(), Err(ConfigError::Validation(_))));
    }

    #[test]
    fn missing_arc_rejected() {
        let text = "[gamma_n]\nkind = \"circle-arc\"\ncenter = [0.0,0.0]\nradius = 1.0\ninterval = [0.0, 1.0]\n";
        let cfg = SpecConfig::from_toml_str(text).unwrap();
        assert!(matches!(cfg.into_spec(), Err(ConfigError::Validation(_))));
    }
}
