//! Entity-to-feature conversion: cleaned CAD entities become point /
//! linestring / polygon / annotation features per the profile's layer rules.

use std::collections::BTreeMap;

use crate::cad::{CadDocument, CadEntity, EntityGeometry};
use crate::error::Error;
use crate::features::{Feature, FeatureClass, FeatureId, FeatureSet, Geometry};
use crate::geom::Point2;
use crate::profile::{ConversionProfile, LayerAction, LayerRule};
use crate::Result;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvertCounts {
    pub points: u64,
    pub lines: u64,
    pub polygons: u64,
    pub annotations: u64,
    pub reference: u64,
    pub unsupported: u64,
    /// Entities on drop-action or unmapped layers reaching conversion; zero
    /// when the cleaning stage ran first.
    pub dropped: u64,
    /// Circles emitted directly as points under a point-action rule.
    pub circle_collapses: u64,
    /// Open chains under a polygon action whose ends were too far apart to
    /// close here; flagged for the GIS cleaning stage.
    pub ring_candidates: u64,
}

impl ConvertCounts {
    /// Features produced, including reference features.
    pub fn converted_total(&self) -> u64 {
        self.points + self.lines + self.polygons + self.annotations + self.reference
    }
}

#[derive(Debug, Clone)]
pub struct ConvertOutcome {
    pub main: FeatureSet,
    /// Reference-only layers: carried through georeferencing as visual
    /// anchors, never exported.
    pub reference: FeatureSet,
    pub counts: ConvertCounts,
    pub warnings: Vec<String>,
}

/// Converts every non-dropped entity into exactly one feature, in entity
/// order. Feature ids are sequential across the main and reference sets.
pub fn convert_document(doc: &CadDocument, profile: &ConversionProfile) -> Result<ConvertOutcome> {
    let mut cv = Converter {
        profile,
        main: FeatureSet::new(),
        reference: FeatureSet::new(),
        counts: ConvertCounts::default(),
        warnings: Vec::new(),
        next_id: 1,
    };
    for entity in &doc.entities {
        cv.convert_entity(entity)?;
    }
    Ok(ConvertOutcome {
        main: cv.main,
        reference: cv.reference,
        counts: cv.counts,
        warnings: cv.warnings,
    })
}

struct Converter<'a> {
    profile: &'a ConversionProfile,
    main: FeatureSet,
    reference: FeatureSet,
    counts: ConvertCounts,
    warnings: Vec<String>,
    next_id: u64,
}

impl Converter<'_> {
    fn convert_entity(&mut self, entity: &CadEntity) -> Result<()> {
        if matches!(entity.geometry, EntityGeometry::Unsupported { .. }) {
            self.counts.unsupported += 1;
            return Ok(());
        }
        let Some(rule) = self.profile.matching_rule(&entity.layer) else {
            self.counts.dropped += 1;
            return Ok(());
        };
        if rule.action == LayerAction::Drop {
            self.counts.dropped += 1;
            return Ok(());
        }
        if entity.reference || rule.action == LayerAction::ReferenceOnly {
            return self.convert_reference(entity, rule);
        }

        let attrs = base_attributes(entity, rule);
        let chord = self.profile.tolerances.arc_chord;
        match &entity.geometry {
            // Text is an annotation regardless of the rule's action: labels
            // must survive to the attribute-transfer pass.
            EntityGeometry::Text { insert, content } => {
                let mut attrs = attrs;
                attrs.insert("label".into(), content.clone());
                self.push_main(FeatureClass::Annotation, Geometry::Point(*insert), attrs, false);
            }
            EntityGeometry::Circle { center, radius } => match rule.action {
                LayerAction::Point => {
                    let mut attrs = attrs;
                    attrs.insert("radius".into(), format!("{}", radius));
                    self.push_main(FeatureClass::Point, Geometry::Point(*center), attrs, false);
                    self.counts.circle_collapses += 1;
                }
                LayerAction::Polygon => {
                    let ring = tessellate_arc(&entity.geometry, chord)?;
                    self.push_main(FeatureClass::Polygon, Geometry::polygon(ring)?, attrs, false);
                }
                _ => {
                    let ring = tessellate_arc(&entity.geometry, chord)?;
                    self.push_main(FeatureClass::Line, Geometry::LineString(ring), attrs, false);
                }
            },
            EntityGeometry::Arc { .. } => {
                let chain = tessellate_arc(&entity.geometry, chord)?;
                match rule.action {
                    LayerAction::Polygon => self.polygon_action_chain(entity, chain, attrs)?,
                    LayerAction::Line => {
                        self.push_main(FeatureClass::Line, Geometry::LineString(chain), attrs, false)
                    }
                    other => {
                        self.warn_mismatch(entity, other);
                        self.push_main(FeatureClass::Line, Geometry::LineString(chain), attrs, false)
                    }
                }
            }
            EntityGeometry::Line { start, end } => {
                let chain = vec![*start, *end];
                match rule.action {
                    LayerAction::Polygon => self.polygon_action_chain(entity, chain, attrs)?,
                    LayerAction::Line => {
                        self.push_main(FeatureClass::Line, Geometry::LineString(chain), attrs, false)
                    }
                    other => {
                        self.warn_mismatch(entity, other);
                        self.push_main(FeatureClass::Line, Geometry::LineString(chain), attrs, false)
                    }
                }
            }
            EntityGeometry::Polyline { vertices, closed } => {
                let closed_chain = || {
                    let mut v = vertices.clone();
                    if v.first() != v.last() {
                        v.push(v[0]);
                    }
                    v
                };
                let wants_polygon = rule.action == LayerAction::Polygon
                    || (rule.action == LayerAction::Point && rule.collapse.is_some());
                if *closed {
                    if wants_polygon {
                        let ring = closed_chain();
                        if ring.len() >= 4 {
                            self.push_main(
                                FeatureClass::Polygon,
                                Geometry::polygon(ring)?,
                                attrs,
                                false,
                            );
                        } else {
                            self.warnings.push(format!(
                                "entity {}: closed polyline too short for a ring, kept as line",
                                entity.handle
                            ));
                            self.push_main(
                                FeatureClass::Line,
                                Geometry::LineString(ring),
                                attrs,
                                false,
                            );
                        }
                    } else {
                        if !matches!(rule.action, LayerAction::Line) {
                            self.warn_mismatch(entity, rule.action);
                        }
                        self.push_main(
                            FeatureClass::Line,
                            Geometry::LineString(closed_chain()),
                            attrs,
                            false,
                        );
                    }
                } else if wants_polygon {
                    self.polygon_action_chain(entity, vertices.clone(), attrs)?;
                } else {
                    if !matches!(rule.action, LayerAction::Line) {
                        self.warn_mismatch(entity, rule.action);
                    }
                    self.push_main(
                        FeatureClass::Line,
                        Geometry::LineString(vertices.clone()),
                        attrs,
                        false,
                    );
                }
            }
            EntityGeometry::Unsupported { .. } => unreachable!("handled above"),
        }
        Ok(())
    }

    /// Open chain under a polygon-producing rule: close now when the end gap
    /// is within ring-close, otherwise emit a flagged linestring for the GIS
    /// cleaning stage.
    fn polygon_action_chain(
        &mut self,
        entity: &CadEntity,
        chain: Vec<Point2>,
        attrs: BTreeMap<String, String>,
    ) -> Result<()> {
        let gap = chain[0].distance(chain.last().unwrap());
        if chain.len() < 4 {
            self.warnings.push(format!(
                "entity {}: {} vertices cannot form a ring, kept as line",
                entity.handle,
                chain.len()
            ));
            self.push_main(FeatureClass::Line, Geometry::LineString(chain), attrs, false);
        } else if gap <= self.profile.tolerances.ring_close {
            let mut ring = chain;
            *ring.last_mut().unwrap() = ring[0];
            self.push_main(FeatureClass::Polygon, Geometry::polygon(ring)?, attrs, false);
        } else {
            self.warnings.push(format!(
                "entity {}: unclosed ring candidate (end gap {:.6})",
                entity.handle, gap
            ));
            self.counts.ring_candidates += 1;
            self.push_main(FeatureClass::Line, Geometry::LineString(chain), attrs, true);
        }
        Ok(())
    }

    /// Reference-only entities become linestring (or annotation) features in
    /// the parallel reference set.
    fn convert_reference(&mut self, entity: &CadEntity, rule: &LayerRule) -> Result<()> {
        let mut attrs = base_attributes(entity, rule);
        let chord = self.profile.tolerances.arc_chord;
        let (klass, geometry) = match &entity.geometry {
            EntityGeometry::Text { insert, content } => {
                attrs.insert("label".into(), content.clone());
                (FeatureClass::Annotation, Geometry::Point(*insert))
            }
            EntityGeometry::Line { start, end } => {
                (FeatureClass::Line, Geometry::LineString(vec![*start, *end]))
            }
            EntityGeometry::Polyline { vertices, closed } => {
                let mut v = vertices.clone();
                if *closed && v.first() != v.last() {
                    v.push(v[0]);
                }
                (FeatureClass::Line, Geometry::LineString(v))
            }
            EntityGeometry::Circle { .. } | EntityGeometry::Arc { .. } => (
                FeatureClass::Line,
                Geometry::LineString(tessellate_arc(&entity.geometry, chord)?),
            ),
            EntityGeometry::Unsupported { .. } => unreachable!("handled by caller"),
        };
        let id = FeatureId(self.next_id);
        self.next_id += 1;
        self.reference
            .features
            .push(Feature::new(id, klass, geometry, attrs));
        self.counts.reference += 1;
        Ok(())
    }

    fn push_main(
        &mut self,
        klass: FeatureClass,
        geometry: Geometry,
        attributes: BTreeMap<String, String>,
        ring_candidate: bool,
    ) {
        match klass {
            FeatureClass::Point => self.counts.points += 1,
            FeatureClass::Line => self.counts.lines += 1,
            FeatureClass::Polygon => self.counts.polygons += 1,
            FeatureClass::Annotation => self.counts.annotations += 1,
        }
        let id = FeatureId(self.next_id);
        self.next_id += 1;
        let mut feature = Feature::new(id, klass, geometry, attributes);
        feature.ring_candidate = ring_candidate;
        self.main.features.push(feature);
    }

    fn warn_mismatch(&mut self, entity: &CadEntity, action: LayerAction) {
        self.warnings.push(format!(
            "entity {}: {} entity under action \"{}\", converted as line",
            entity.handle,
            entity.kind().name(),
            action.name()
        ));
    }
}

/// Rule statics plus the mandatory source attributes. Built-ins win on name
/// collision so "layer" and "handle" always reflect the source entity.
fn base_attributes(entity: &CadEntity, rule: &LayerRule) -> BTreeMap<String, String> {
    let mut attrs = rule.attributes.clone();
    attrs.insert("layer".into(), entity.layer.clone());
    attrs.insert("handle".into(), entity.handle.to_string());
    attrs
}

/// Tessellates an arc or circle into a vertex chain with every segment's
/// sagitta bounded by `chord_tol`. Vertices are equally spaced in angle;
/// segment count n = ceil(sweep / (2*acos(1 - min(chord_tol, r)/r))), at
/// least 2 per arc and 8 per full circle. Arc endpoints are exact; full
/// circles repeat the first vertex exactly so the chain closes bit-for-bit.
pub fn tessellate_arc(geometry: &EntityGeometry, chord_tol: f64) -> Result<Vec<Point2>> {
    match geometry {
        EntityGeometry::Circle { center, radius } => {
            tessellate(*center, *radius, 0.0, 360.0, chord_tol)
        }
        EntityGeometry::Arc {
            center,
            radius,
            start_angle,
            end_angle,
        } => {
            let sweep = (end_angle - start_angle).rem_euclid(360.0);
            if sweep == 0.0 {
                return Err(Error::Geometry(format!(
                    "arc from {start_angle} to {end_angle} degrees has zero sweep"
                )));
            }
            tessellate(*center, *radius, *start_angle, sweep, chord_tol)
        }
        other => Err(Error::Geometry(format!(
            "tessellation requires a circle or arc, got {}",
            other.kind().name()
        ))),
    }
}

fn tessellate(
    center: Point2,
    radius: f64,
    start_deg: f64,
    sweep_deg: f64,
    chord_tol: f64,
) -> Result<Vec<Point2>> {
    if radius <= 0.0 {
        return Err(Error::Geometry(format!("nonpositive radius {radius}")));
    }
    if chord_tol <= 0.0 {
        return Err(Error::Geometry(format!(
            "chord tolerance must be > 0, got {chord_tol}"
        )));
    }
    let max_step = 2.0 * (1.0 - chord_tol.min(radius) / radius).acos();
    let mut n = (sweep_deg.to_radians() / max_step).ceil() as usize;
    n = n.max(2);
    let full_circle = sweep_deg >= 360.0;
    if full_circle {
        n = n.max(8);
    }
    let mut vertices = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let deg = start_deg + sweep_deg * (i as f64) / (n as f64);
        let rad = deg.to_radians();
        vertices.push(Point2::new(
            center.x + radius * rad.cos(),
            center.y + radius * rad.sin(),
        ));
    }
    if full_circle {
        *vertices.last_mut().unwrap() = vertices[0];
    }
    Ok(vertices)
}
