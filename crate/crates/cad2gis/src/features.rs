//! GIS-side feature model: point / linestring / polygon geometry plus flat
//! string attributes, grouped into ordered feature sets.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::Error;
use crate::geom::{ring_signed_area, BoundingBox, Point2};
use crate::profile::Crs;
use crate::Result;

/// Feature identifier, unique across one conversion run (main and reference
/// sets share the counter).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId(pub u64);

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureClass {
    Point,
    Line,
    Polygon,
    Annotation,
}

impl FeatureClass {
    pub const ALL: [FeatureClass; 4] = [
        FeatureClass::Point,
        FeatureClass::Line,
        FeatureClass::Polygon,
        FeatureClass::Annotation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureClass::Point => "point",
            FeatureClass::Line => "line",
            FeatureClass::Polygon => "polygon",
            FeatureClass::Annotation => "annotation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Point2),
    /// At least 2 vertices, nonzero total length.
    LineString(Vec<Point2>),
    /// Closed outer ring: first == last, at least 4 vertices, clockwise.
    Polygon(Vec<Point2>),
}

impl Geometry {
    /// Builds a polygon from a closed ring, canonicalizing winding to
    /// clockwise. Shapefile polygons require clockwise outer rings; using
    /// the same ring everywhere keeps all output formats coordinate-equal.
    pub fn polygon(mut ring: Vec<Point2>) -> Result<Geometry> {
        if ring.len() < 4 {
            return Err(Error::Geometry(format!(
                "polygon ring needs at least 4 vertices, got {}",
                ring.len()
            )));
        }
        if ring.first() != ring.last() {
            return Err(Error::Geometry(
                "polygon ring is not closed (first != last)".into(),
            ));
        }
        if ring_signed_area(&ring) > 0.0 {
            ring.reverse();
        }
        Ok(Geometry::Polygon(ring))
    }

    pub fn points(&self) -> &[Point2] {
        match self {
            Geometry::Point(p) => std::slice::from_ref(p),
            Geometry::LineString(v) | Geometry::Polygon(v) => v,
        }
    }

    /// Applies `f` to every coordinate. Polygon winding is re-canonicalized
    /// afterwards: an affine map with negative determinant flips it.
    pub fn map_points(&self, f: impl Fn(Point2) -> Point2) -> Geometry {
        match self {
            Geometry::Point(p) => Geometry::Point(f(*p)),
            Geometry::LineString(v) => Geometry::LineString(v.iter().map(|p| f(*p)).collect()),
            Geometry::Polygon(v) => {
                let mut ring: Vec<Point2> = v.iter().map(|p| f(*p)).collect();
                if ring_signed_area(&ring) > 0.0 {
                    ring.reverse();
                }
                Geometry::Polygon(ring)
            }
        }
    }

    pub fn bbox(&self) -> BoundingBox {
        BoundingBox::of_points(self.points()).expect("geometry is never empty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub id: FeatureId,
    pub klass: FeatureClass,
    pub geometry: Geometry,
    /// Always includes "layer" and "handle"; annotations add "label".
    pub attributes: BTreeMap<String, String>,
    /// Open linestring drawn where the profile expects a polygon; the GIS
    /// cleaning stage tries to close it.
    pub ring_candidate: bool,
}

impl Feature {
    pub fn new(
        id: FeatureId,
        klass: FeatureClass,
        geometry: Geometry,
        attributes: BTreeMap<String, String>,
    ) -> Self {
        Feature {
            id,
            klass,
            geometry,
            attributes,
            ring_candidate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    /// Conversion order == source entity order; ids are unique.
    pub features: Vec<Feature>,
    pub crs: Option<Crs>,
    pub georeferenced: bool,
}

impl FeatureSet {
    /// A new set in drawing space, before georeferencing.
    pub fn new() -> Self {
        FeatureSet {
            features: Vec::new(),
            crs: None,
            georeferenced: false,
        }
    }

    pub fn of_class(&self, klass: FeatureClass) -> impl Iterator<Item = &Feature> {
        self.features.iter().filter(move |f| f.klass == klass)
    }

    pub fn count_of(&self, klass: FeatureClass) -> usize {
        self.of_class(klass).count()
    }
}

impl Default for FeatureSet {
    fn default() -> Self {
        FeatureSet::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ccw_square() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.0, 0.0),
        ]
    }

    #[test]
    fn polygon_canonicalizes_to_clockwise() {
        let g = Geometry::polygon(ccw_square()).unwrap();
        let Geometry::Polygon(ring) = &g else {
            panic!()
        };
        assert!(ring_signed_area(ring) < 0.0);
        assert_eq!(ring.first(), ring.last());
        // A clockwise input stays as given.
        let mut cw = ccw_square();
        cw.reverse();
        let g2 = Geometry::polygon(cw.clone()).unwrap();
        assert_eq!(g2, Geometry::Polygon(cw));
    }

    #[test]
    fn polygon_rejects_open_or_short_rings() {
        let open = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.5, 0.5),
        ];
        assert!(Geometry::polygon(open).is_err());
        let short = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 0.0),
        ];
        assert!(Geometry::polygon(short).is_err());
    }

    #[test]
    fn map_points_restores_polygon_winding() {
        let g = Geometry::polygon(ccw_square()).unwrap();
        // Mirror across the Y axis flips winding; the map must restore it.
        let mirrored = g.map_points(|p| Point2::new(-p.x, p.y));
        let Geometry::Polygon(ring) = &mirrored else {
            panic!()
        };
        assert!(ring_signed_area(ring) < 0.0);
    }
}
