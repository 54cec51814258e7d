//! Small 2D geometry primitives shared across the pipeline.

use serde::Serialize;

/// A 2D coordinate, in drawing units before georeferencing and in target CRS
/// units after.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        self.distance_squared(other).sqrt()
    }

    pub fn distance_squared(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn midpoint(&self, other: &Point2) -> Point2 {
        Point2::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn from_point(p: Point2) -> Self {
        BoundingBox {
            min_x: p.x,
            min_y: p.y,
            max_x: p.x,
            max_y: p.y,
        }
    }

    pub fn extend(&mut self, p: Point2) {
        self.min_x = self.min_x.min(p.x);
        self.min_y = self.min_y.min(p.y);
        self.max_x = self.max_x.max(p.x);
        self.max_y = self.max_y.max(p.y);
    }

    /// Hull of a point sequence; `None` when empty.
    pub fn of_points<'a, I: IntoIterator<Item = &'a Point2>>(points: I) -> Option<Self> {
        let mut iter = points.into_iter();
        let first = iter.next()?;
        let mut bbox = BoundingBox::from_point(*first);
        for p in iter {
            bbox.extend(*p);
        }
        Some(bbox)
    }
}

/// Distance from `p` to the segment `a`-`b`.
pub fn point_segment_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len_sq = abx * abx + aby * aby;
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let t = ((p.x - a.x) * abx + (p.y - a.y) * aby) / len_sq;
    let t = t.clamp(0.0, 1.0);
    // Affine combination, not a + t*ab: exact at both clamp ends, so the
    // distance to a segment endpoint equals the point-to-point distance bit
    // for bit and downstream tie-breaks stay deterministic.
    let proj = Point2::new(a.x * (1.0 - t) + b.x * t, a.y * (1.0 - t) + b.y * t);
    p.distance(&proj)
}

/// Perpendicular distance from `p` to the infinite line through `a`-`b`.
/// Falls back to point distance when the segment is degenerate.
pub fn point_line_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len = (abx * abx + aby * aby).sqrt();
    if len == 0.0 {
        return p.distance(a);
    }
    ((p.x - a.x) * aby - (p.y - a.y) * abx).abs() / len
}

/// Distance from `p` to a polyline (minimum over its segments).
pub fn point_polyline_distance(p: &Point2, vertices: &[Point2]) -> f64 {
    if vertices.len() == 1 {
        return p.distance(&vertices[0]);
    }
    vertices
        .windows(2)
        .map(|w| point_segment_distance(p, &w[0], &w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Even-odd test against a closed ring (first == last).
pub fn point_in_ring(p: &Point2, ring: &[Point2]) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Distance from `p` to a polygon given by its closed ring: zero inside,
/// boundary distance outside.
pub fn point_ring_distance(p: &Point2, ring: &[Point2]) -> f64 {
    if point_in_ring(p, ring) {
        0.0
    } else {
        point_polyline_distance(p, ring)
    }
}

/// Signed area of a closed ring (first == last). Positive for
/// counterclockwise winding.
pub fn ring_signed_area(ring: &[Point2]) -> f64 {
    let mut sum = 0.0;
    for w in ring.windows(2) {
        sum += w[0].x * w[1].y - w[1].x * w[0].y;
    }
    sum / 2.0
}

/// Area-weighted centroid of a closed ring. Returns `None` for
/// (near-)zero-area rings, where the formula degenerates.
pub fn ring_centroid(ring: &[Point2]) -> Option<Point2> {
    let area = ring_signed_area(ring);
    if area.abs() < 1e-12 {
        return None;
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    for w in ring.windows(2) {
        let cross = w[0].x * w[1].y - w[1].x * w[0].y;
        cx += (w[0].x + w[1].x) * cross;
        cy += (w[0].y + w[1].y) * cross;
    }
    Some(Point2::new(cx / (6.0 * area), cy / (6.0 * area)))
}

/// Arithmetic mean of a point set.
pub fn vertex_mean(points: &[Point2]) -> Point2 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point2::new(sx / n, sy / n)
}
