//! Typed in-memory CAD document and layer inventory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::geom::{BoundingBox, Point2};

/// Entity identifier, stable within one document. Synthesized sequentially
/// in source order by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Handle(pub u64);

impl fmt::Display for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    Line,
    Polyline,
    Circle,
    Arc,
    Text,
    Unsupported,
}

impl EntityKind {
    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Line => "Line",
            EntityKind::Polyline => "Polyline",
            EntityKind::Circle => "Circle",
            EntityKind::Arc => "Arc",
            EntityKind::Text => "Text",
            EntityKind::Unsupported => "Unsupported",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EntityGeometry {
    Line {
        start: Point2,
        end: Point2,
    },
    Polyline {
        vertices: Vec<Point2>,
        closed: bool,
    },
    Circle {
        center: Point2,
        radius: f64,
    },
    /// Angles in degrees, counterclockwise from +X.
    Arc {
        center: Point2,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
    },
    Text {
        insert: Point2,
        content: String,
    },
    /// Entity types outside the supported subset, and supported types whose
    /// payload violates a geometric invariant (zero-length line, nonpositive
    /// radius). Never dropped, so conservation counts stay honest.
    Unsupported {
        type_name: String,
    },
}

impl EntityGeometry {
    pub fn kind(&self) -> EntityKind {
        match self {
            EntityGeometry::Line { .. } => EntityKind::Line,
            EntityGeometry::Polyline { .. } => EntityKind::Polyline,
            EntityGeometry::Circle { .. } => EntityKind::Circle,
            EntityGeometry::Arc { .. } => EntityKind::Arc,
            EntityGeometry::Text { .. } => EntityKind::Text,
            EntityGeometry::Unsupported { .. } => EntityKind::Unsupported,
        }
    }

    /// Every coordinate stored on the entity, in definition order. Circle and
    /// arc extents are not expanded; the center is the stored coordinate.
    pub fn coordinates(&self) -> Vec<Point2> {
        match self {
            EntityGeometry::Line { start, end } => vec![*start, *end],
            EntityGeometry::Polyline { vertices, .. } => vertices.clone(),
            EntityGeometry::Circle { center, .. } => vec![*center],
            EntityGeometry::Arc { center, .. } => vec![*center],
            EntityGeometry::Text { insert, .. } => vec![*insert],
            EntityGeometry::Unsupported { .. } => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CadEntity {
    pub handle: Handle,
    pub layer: String,
    pub geometry: EntityGeometry,
    /// Set by the cleaning stage for reference-only layers: kept through
    /// georeferencing as visual anchors, excluded from exported output.
    pub reference: bool,
}

impl CadEntity {
    pub fn new(handle: Handle, layer: impl Into<String>, geometry: EntityGeometry) -> Self {
        CadEntity {
            handle,
            layer: layer.into(),
            geometry,
            reference: false,
        }
    }

    pub fn kind(&self) -> EntityKind {
        self.geometry.kind()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CadDocument {
    /// Source order; handles are unique and ascending.
    pub entities: Vec<CadEntity>,
    pub source_name: String,
    /// Z coordinates (group codes 30/31) read and discarded; the pipeline is
    /// strictly 2D.
    pub z_discarded: u64,
}

impl CadDocument {
    pub fn empty(source_name: impl Into<String>) -> Self {
        CadDocument {
            entities: Vec::new(),
            source_name: source_name.into(),
            z_discarded: 0,
        }
    }

    /// Layer names present, lexicographic. Derived rather than stored so it
    /// cannot drift from the entity list.
    pub fn layers(&self) -> BTreeSet<String> {
        self.entities.iter().map(|e| e.layer.clone()).collect()
    }

    pub fn inventory(&self) -> LayerInventory {
        inventory(self)
    }
}

/// Per-layer entity counts, drawing-unit bounding box, unsupported tally.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerInventory {
    /// Layer name -> kind tally, both in deterministic order.
    pub layers: BTreeMap<String, BTreeMap<EntityKind, u64>>,
    /// Hull of all stored coordinates; None for an empty document.
    pub bbox: Option<BoundingBox>,
    /// Unsupported DXF type name -> occurrence count.
    pub unsupported_types: BTreeMap<String, u64>,
    pub total_entities: u64,
    pub z_discarded: u64,
}

impl LayerInventory {
    pub fn unsupported_total(&self) -> u64 {
        self.unsupported_types.values().sum()
    }
}

pub fn inventory(doc: &CadDocument) -> LayerInventory {
    let mut layers: BTreeMap<String, BTreeMap<EntityKind, u64>> = BTreeMap::new();
    let mut unsupported_types: BTreeMap<String, u64> = BTreeMap::new();
    let mut bbox: Option<BoundingBox> = None;
    for entity in &doc.entities {
        *layers
            .entry(entity.layer.clone())
            .or_default()
            .entry(entity.kind())
            .or_insert(0) += 1;
        if let EntityGeometry::Unsupported { type_name } = &entity.geometry {
            *unsupported_types.entry(type_name.clone()).or_insert(0) += 1;
        }
        for p in entity.geometry.coordinates() {
            match &mut bbox {
                Some(b) => b.extend(p),
                None => bbox = Some(BoundingBox::from_point(p)),
            }
        }
    }
    LayerInventory {
        layers,
        bbox,
        unsupported_types,
        total_entities: doc.entities.len() as u64,
        z_discarded: doc.z_discarded,
    }
}
