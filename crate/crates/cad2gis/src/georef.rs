//! Global 2D transform estimation from control-point pairs, application to
//! feature sets, and residual diagnostics.
//!
//! The default model is a similarity transform (uniform scale, rotation,
//! translation), the programmatic counterpart of manually shifting, rotating
//! and scaling a drawing until it sits on the reference map. An affine model
//! is available for distorted drawings.

use std::io::Read;

use crate::error::Error;
use crate::features::FeatureSet;
use crate::geom::Point2;
use crate::profile::Crs;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ControlPointPair {
    /// Drawing-space location.
    pub source: Point2,
    /// Target-CRS location.
    pub target: Point2,
    pub label: Option<String>,
}

/// Maps (x, y) -> s * R(theta) * (x, y) + t. No reflection: the fit
/// constrains the determinant positive, so mirrored control points surface
/// as a large RMS instead of silently flipping the drawing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    /// Radians, counterclockwise.
    pub rotation: f64,
    pub translation: Point2,
}

impl SimilarityTransform {
    pub fn apply(&self, p: Point2) -> Point2 {
        let (sin, cos) = self.rotation.sin_cos();
        Point2::new(
            self.scale * (cos * p.x - sin * p.y) + self.translation.x,
            self.scale * (sin * p.x + cos * p.y) + self.translation.y,
        )
    }
}

/// Maps (x, y) -> (a*x + b*y + c, d*x + e*y + f).
#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(clippy::many_single_char_names)]
pub struct AffineTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl AffineTransform {
    pub fn apply(&self, p: Point2) -> Point2 {
        Point2::new(
            self.a * p.x + self.b * p.y + self.c,
            self.d * p.x + self.e * p.y + self.f,
        )
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Similarity(SimilarityTransform),
    Affine(AffineTransform),
}

impl Transform {
    pub fn apply(&self, p: Point2) -> Point2 {
        match self {
            Transform::Similarity(t) => t.apply(p),
            Transform::Affine(t) => t.apply(p),
        }
    }

    pub fn model_name(&self) -> &'static str {
        match self {
            Transform::Similarity(_) => "similarity",
            Transform::Affine(_) => "affine",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Per-pair distance |T(source) - target|, in input order.
    pub residuals: Vec<f64>,
    pub rms: f64,
    pub max: f64,
}

/// Least-squares similarity fit via centroid-centered cross-correlation:
/// theta = atan2(sum(sx*ty - sy*tx), sum(sx*tx + sy*ty)) over centered
/// coordinates, scale = |correlation| / source second moment, translation
/// from the centroids. Closed form; the global minimizer of the squared
/// residual sum over transforms with positive determinant.
pub fn estimate_similarity(pairs: &[ControlPointPair]) -> Result<SimilarityTransform> {
    if pairs.len() < 2 {
        return Err(Error::Estimation(format!(
            "similarity fit needs at least 2 control point pairs, got {}",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;
    let mu_s = centroid(pairs.iter().map(|p| p.source), n);
    let mu_t = centroid(pairs.iter().map(|p| p.target), n);
    let mut sxx = 0.0; // sum sx*tx + sy*ty
    let mut sxy = 0.0; // sum sx*ty - sy*tx
    let mut sigma_s = 0.0; // sum |s|^2
    for p in pairs {
        let sx = p.source.x - mu_s.x;
        let sy = p.source.y - mu_s.y;
        let tx = p.target.x - mu_t.x;
        let ty = p.target.y - mu_t.y;
        sxx += sx * tx + sy * ty;
        sxy += sx * ty - sy * tx;
        sigma_s += sx * sx + sy * sy;
    }
    if sigma_s == 0.0 {
        return Err(Error::Estimation(
            "all source control points coincide".into(),
        ));
    }
    let rotation = sxy.atan2(sxx);
    let scale = (sxx * sxx + sxy * sxy).sqrt() / sigma_s;
    if scale <= 0.0 {
        return Err(Error::Estimation(
            "all target control points coincide (zero scale)".into(),
        ));
    }
    let (sin, cos) = rotation.sin_cos();
    let translation = Point2::new(
        mu_t.x - scale * (cos * mu_s.x - sin * mu_s.y),
        mu_t.y - scale * (sin * mu_s.x + cos * mu_s.y),
    );
    Ok(SimilarityTransform {
        scale,
        rotation,
        translation,
    })
}

/// Least-squares affine fit: two independent 3-unknown normal-equation
/// systems sharing the same source-moment matrix.
pub fn estimate_affine(pairs: &[ControlPointPair]) -> Result<AffineTransform> {
    if pairs.len() < 3 {
        return Err(Error::Estimation(format!(
            "affine fit needs at least 3 control point pairs, got {}",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut rhs_x = [0.0; 3];
    let mut rhs_y = [0.0; 3];
    for p in pairs {
        let (x, y) = (p.source.x, p.source.y);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        rhs_x[0] += x * p.target.x;
        rhs_x[1] += y * p.target.x;
        rhs_x[2] += p.target.x;
        rhs_y[0] += x * p.target.y;
        rhs_y[1] += y * p.target.y;
        rhs_y[2] += p.target.y;
    }
    let m = [[sxx, sxy, sx], [sxy, syy, sy], [sx, sy, n]];
    let row_x = solve3(m, rhs_x).ok_or_else(|| {
        Error::Estimation("source control points are collinear or coincident".into())
    })?;
    let row_y = solve3(m, rhs_y).ok_or_else(|| {
        Error::Estimation("source control points are collinear or coincident".into())
    })?;
    let t = AffineTransform {
        a: row_x[0],
        b: row_x[1],
        c: row_x[2],
        d: row_y[0],
        e: row_y[1],
        f: row_y[2],
    };
    if t.determinant() == 0.0 {
        return Err(Error::Estimation(
            "fitted affine transform is degenerate (zero determinant)".into(),
        ));
    }
    Ok(t)
}

/// Applies the transform to every coordinate and stamps the CRS. Refuses a
/// second application: a double transform silently corrupts coordinates.
pub fn apply_transform(fs: FeatureSet, transform: &Transform, crs: &Crs) -> Result<FeatureSet> {
    if fs.georeferenced {
        return Err(Error::Transform(
            "feature set is already georeferenced".into(),
        ));
    }
    let features = fs
        .features
        .into_iter()
        .map(|mut f| {
            f.geometry = f.geometry.map_points(|p| transform.apply(p));
            f
        })
        .collect();
    Ok(FeatureSet {
        features,
        crs: Some(crs.clone()),
        georeferenced: true,
    })
}

/// Per-pair residuals of the fitted transform over its control points.
pub fn residuals(transform: &Transform, pairs: &[ControlPointPair]) -> Result<ResidualReport> {
    if pairs.is_empty() {
        return Err(Error::Estimation(
            "cannot compute residuals of an empty control point list".into(),
        ));
    }
    let residuals: Vec<f64> = pairs
        .iter()
        .map(|p| transform.apply(p.source).distance(&p.target))
        .collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    let max = residuals.iter().copied().fold(0.0, f64::max);
    Ok(ResidualReport {
        residuals,
        rms,
        max,
    })
}

/// Reads control points from CSV with header
/// `src_x,src_y,dst_x,dst_y[,label]`. LF or CRLF.
pub fn read_control_points<R: Read>(reader: R) -> Result<Vec<ControlPointPair>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    {
        let headers = csv_reader
            .headers()
            .map_err(|e| csv_error(&e, "cannot read header"))?;
        let names: Vec<&str> = headers.iter().collect();
        let ok = names.len() >= 4
            && names[..4] == ["src_x", "src_y", "dst_x", "dst_y"]
            && (names.len() == 4 || (names.len() == 5 && names[4] == "label"));
        if !ok {
            return Err(Error::ControlPoints {
                line: 1,
                message: format!(
                    "expected header src_x,src_y,dst_x,dst_y[,label], got {:?}",
                    names.join(",")
                ),
            });
        }
    }
    let mut pairs = Vec::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| csv_error(&e, "malformed row"))?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(0);
        if record.len() < 4 || record.len() > 5 {
            return Err(Error::ControlPoints {
                line,
                message: format!("expected 4 or 5 fields, got {}", record.len()),
            });
        }
        let mut nums = [0.0f64; 4];
        for (i, v) in nums.iter_mut().enumerate() {
            let field = record.get(i).unwrap_or("");
            *v = field.parse().map_err(|_| Error::ControlPoints {
                line,
                message: format!("field {} is not a number: {:?}", i + 1, field),
            })?;
            if !v.is_finite() {
                return Err(Error::ControlPoints {
                    line,
                    message: format!("field {} is not finite: {:?}", i + 1, field),
                });
            }
        }
        let label = record
            .get(4)
            .filter(|s| !s.is_empty())
            .map(|s| s.to_string());
        pairs.push(ControlPointPair {
            source: Point2::new(nums[0], nums[1]),
            target: Point2::new(nums[2], nums[3]),
            label,
        });
    }
    Ok(pairs)
}

fn csv_error(e: &csv::Error, context: &str) -> Error {
    let line = match e.position() {
        Some(p) => p.line() as usize,
        None => 0,
    };
    Error::ControlPoints {
        line,
        message: format!("{context}: {e}"),
    }
}

fn centroid<I: Iterator<Item = Point2>>(points: I, n: f64) -> Point2 {
    let (sx, sy) = points.fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point2::new(sx / n, sy / n)
}

/// Solves a symmetric 3x3 system by Gaussian elimination with partial
/// pivoting. `None` when singular (collinear sources).
fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0f64; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3] = rhs[i];
    }
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot_row][col].abs() < 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot_row);
        for row in 0..3 {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}
