//! CAD-side cleaning: drop irrelevant layers, remove double-drawn geometry,
//! and bridge line gaps created by inline text.
//!
//! Passes run drop -> dedupe -> bridge. Deduplication before bridging keeps
//! double-drawn segments from producing double merges.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::cad::{CadDocument, CadEntity, EntityGeometry, Handle};
use crate::grid::PointGrid;
use crate::profile::{ConversionProfile, LayerAction, Tolerances};
use crate::union_find::UnionFind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CleanFixKind {
    DroppedEntity,
    BridgedGap,
    Deduped,
}

impl CleanFixKind {
    pub fn name(self) -> &'static str {
        match self {
            CleanFixKind::DroppedEntity => "dropped-entity",
            CleanFixKind::BridgedGap => "bridged-gap",
            CleanFixKind::Deduped => "deduped",
        }
    }
}

/// One recorded repair or removal; handles identify the entities involved.
#[derive(Debug, Clone)]
pub struct CleanFix {
    pub kind: CleanFixKind,
    pub handles: Vec<Handle>,
    pub detail: String,
}

impl CleanFix {
    fn new(kind: CleanFixKind, handles: Vec<Handle>, detail: String) -> Self {
        debug_assert!(!handles.is_empty());
        CleanFix {
            kind,
            handles,
            detail,
        }
    }
}

/// Removes entities on drop-action and unmapped layers; flags reference-only
/// layers. One fix per removed entity.
pub fn drop_irrelevant(
    doc: CadDocument,
    profile: &ConversionProfile,
) -> (CadDocument, Vec<CleanFix>) {
    let CadDocument {
        entities,
        source_name,
        z_discarded,
    } = doc;
    let mut kept = Vec::with_capacity(entities.len());
    let mut fixes = Vec::new();
    for mut e in entities {
        match profile.matching_rule(&e.layer) {
            None => fixes.push(CleanFix::new(
                CleanFixKind::DroppedEntity,
                vec![e.handle],
                format!("unmapped layer {:?}", e.layer),
            )),
            Some(rule) if rule.action == LayerAction::Drop => fixes.push(CleanFix::new(
                CleanFixKind::DroppedEntity,
                vec![e.handle],
                format!("layer {:?} matched drop rule {:?}", e.layer, rule.pattern),
            )),
            Some(rule) => {
                e.reference = rule.action == LayerAction::ReferenceOnly;
                kept.push(e);
            }
        }
    }
    (
        CadDocument {
            entities: kept,
            source_name,
            z_discarded,
        },
        fixes,
    )
}

/// Coordinate-exact identity of an entity's geometry within its layer.
/// Bitwise on coordinates: only genuinely double-drawn geometry matches.
#[derive(Hash, PartialEq, Eq)]
struct GeomKey {
    layer: String,
    tag: u8,
    bits: Vec<u64>,
    text: String,
    closed: bool,
}

fn geom_key(e: &CadEntity) -> GeomKey {
    let mut key = GeomKey {
        layer: e.layer.clone(),
        tag: 0,
        bits: Vec::new(),
        text: String::new(),
        closed: false,
    };
    let push = |bits: &mut Vec<u64>, v: f64| bits.push(v.to_bits());
    match &e.geometry {
        EntityGeometry::Line { start, end } => {
            key.tag = 0;
            for v in [start.x, start.y, end.x, end.y] {
                push(&mut key.bits, v);
            }
        }
        EntityGeometry::Polyline { vertices, closed } => {
            key.tag = 1;
            key.closed = *closed;
            for p in vertices {
                push(&mut key.bits, p.x);
                push(&mut key.bits, p.y);
            }
        }
        EntityGeometry::Circle { center, radius } => {
            key.tag = 2;
            for v in [center.x, center.y, *radius] {
                push(&mut key.bits, v);
            }
        }
        EntityGeometry::Arc {
            center,
            radius,
            start_angle,
            end_angle,
        } => {
            key.tag = 3;
            for v in [center.x, center.y, *radius, *start_angle, *end_angle] {
                push(&mut key.bits, v);
            }
        }
        EntityGeometry::Text { insert, content } => {
            key.tag = 4;
            push(&mut key.bits, insert.x);
            push(&mut key.bits, insert.y);
            key.text = content.clone();
        }
        EntityGeometry::Unsupported { .. } => unreachable!("unsupported entities are not keyed"),
    }
    key
}

/// Removes exact duplicates (same kind, layer, geometry), keeping the first
/// occurrence. Unsupported records are never deduplicated: their payload is
/// unknown, so two of them cannot be proven identical.
pub fn dedupe_entities(doc: CadDocument) -> (CadDocument, Vec<CleanFix>) {
    let CadDocument {
        entities,
        source_name,
        z_discarded,
    } = doc;
    let mut seen: HashMap<GeomKey, Handle> = HashMap::new();
    let mut kept = Vec::with_capacity(entities.len());
    let mut fixes = Vec::new();
    for e in entities {
        if matches!(e.geometry, EntityGeometry::Unsupported { .. }) {
            kept.push(e);
            continue;
        }
        match seen.entry(geom_key(&e)) {
            Entry::Occupied(survivor) => fixes.push(CleanFix::new(
                CleanFixKind::Deduped,
                vec![e.handle, *survivor.get()],
                format!("duplicate of entity {}", survivor.get()),
            )),
            Entry::Vacant(slot) => {
                slot.insert(e.handle);
                kept.push(e);
            }
        }
    }
    (
        CadDocument {
            entities: kept,
            source_name,
            z_discarded,
        },
        fixes,
    )
}

/// An open end of a line or open polyline: the endpoint plus its interior
/// neighbor, which defines the end segment.
struct OpenEnd {
    entity: usize,
    point: crate::geom::Point2,
    inward: crate::geom::Point2,
}

/// Merges same-layer line/polyline pairs whose open ends face each other
/// across a small gap occupied by text (pipe-diameter labels drawn on the
/// line break the line in CAD). Conditions per pair of ends:
/// endpoint-to-endpoint gap in (0, gap-bridge]; each endpoint within
/// lateral-offset of the other end segment's infinite line; the gap extends
/// outward from both ends; some text insert within gap-bridge of the gap
/// midpoint. Merges are transitive via union-find; one fix per merge.
///
/// Original vertices are never moved or dropped: the merged polyline is the
/// concatenation of the member chains ordered along the shared direction, so
/// a second application finds nothing left to merge.
pub fn bridge_text_gaps(doc: CadDocument, tol: &Tolerances) -> (CadDocument, Vec<CleanFix>) {
    use crate::geom::{point_line_distance, Point2};

    let CadDocument {
        entities,
        source_name,
        z_discarded,
    } = doc;

    // Text witnesses, any layer: labels commonly live on their own layer.
    let texts: Vec<(Point2, &str)> = entities
        .iter()
        .filter_map(|e| match &e.geometry {
            EntityGeometry::Text { insert, content } => Some((*insert, content.as_str())),
            _ => None,
        })
        .collect();
    let mut text_grid = PointGrid::new(tol.gap_bridge);
    for (i, (p, _)) in texts.iter().enumerate() {
        text_grid.insert(*p, i);
    }
    let nearest_text = |mid: Point2| -> Option<(f64, &str)> {
        let mut best: Option<(f64, usize)> = None;
        for i in text_grid.neighborhood(mid) {
            let d = texts[i].0.distance(&mid);
            if d <= tol.gap_bridge && best.map_or(true, |(bd, bi)| d < bd || (d == bd && i < bi)) {
                best = Some((d, i));
            }
        }
        best.map(|(d, i)| (d, texts[i].1))
    };

    let mut ends: Vec<OpenEnd> = Vec::new();
    for (i, e) in entities.iter().enumerate() {
        match &e.geometry {
            EntityGeometry::Line { start, end } => {
                ends.push(OpenEnd {
                    entity: i,
                    point: *start,
                    inward: *end,
                });
                ends.push(OpenEnd {
                    entity: i,
                    point: *end,
                    inward: *start,
                });
            }
            EntityGeometry::Polyline { vertices, closed } if !closed && vertices.len() >= 2 => {
                ends.push(OpenEnd {
                    entity: i,
                    point: vertices[0],
                    inward: vertices[1],
                });
                ends.push(OpenEnd {
                    entity: i,
                    point: vertices[vertices.len() - 1],
                    inward: vertices[vertices.len() - 2],
                });
            }
            _ => {}
        }
    }
    let mut end_grid = PointGrid::new(tol.gap_bridge);
    for (i, end) in ends.iter().enumerate() {
        end_grid.insert(end.point, i);
    }

    let mut uf = UnionFind::new(entities.len());
    let mut fixes = Vec::new();
    for (i, a) in ends.iter().enumerate() {
        for j in end_grid.neighborhood(a.point) {
            if j <= i {
                continue;
            }
            let b = &ends[j];
            if a.entity == b.entity || entities[a.entity].layer != entities[b.entity].layer {
                continue;
            }
            let gap = a.point.distance(&b.point);
            if !(gap > 0.0 && gap <= tol.gap_bridge) {
                continue;
            }
            if point_line_distance(&b.point, &a.inward, &a.point) > tol.lateral_offset
                || point_line_distance(&a.point, &b.inward, &b.point) > tol.lateral_offset
            {
                continue;
            }
            // The gap must lie ahead of both ends, not behind (overlapping
            // or doubling-back segments are not text gaps).
            let outward_a = (a.point.x - a.inward.x, a.point.y - a.inward.y);
            let outward_b = (b.point.x - b.inward.x, b.point.y - b.inward.y);
            let gap_ab = (b.point.x - a.point.x, b.point.y - a.point.y);
            if gap_ab.0 * outward_a.0 + gap_ab.1 * outward_a.1 <= 0.0
                || -gap_ab.0 * outward_b.0 - gap_ab.1 * outward_b.1 <= 0.0
            {
                continue;
            }
            let Some((_, text)) = nearest_text(a.point.midpoint(&b.point)) else {
                continue;
            };
            if uf.union(a.entity, b.entity) {
                fixes.push(CleanFix::new(
                    CleanFixKind::BridgedGap,
                    vec![entities[a.entity].handle, entities[b.entity].handle],
                    format!("gap {:.6} spanned by text {:?}", gap, text),
                ));
            }
        }
    }

    if fixes.is_empty() {
        return (
            CadDocument {
                entities,
                source_name,
                z_discarded,
            },
            fixes,
        );
    }

    // Component index -> merged entity, keyed by the component's first
    // member position so output order stays source order.
    let groups = uf.groups();
    let mut merged_at: HashMap<usize, CadEntity> = HashMap::new();
    let mut skip: Vec<bool> = vec![false; entities.len()];
    for group in groups.into_iter().filter(|g| g.len() >= 2) {
        let merged = merge_chains(&entities, &group);
        for &m in &group[1..] {
            skip[m] = true;
        }
        merged_at.insert(group[0], merged);
    }
    let mut kept = Vec::with_capacity(entities.len());
    for (i, e) in entities.into_iter().enumerate() {
        if let Some(m) = merged_at.remove(&i) {
            kept.push(m);
        } else if !skip[i] {
            kept.push(e);
        }
    }
    (
        CadDocument {
            entities: kept,
            source_name,
            z_discarded,
        },
        fixes,
    )
}

/// Concatenates the member chains of one merged component into a single open
/// polyline. Orientation and order are taken from the component's own
/// geometry (projection onto the extreme-endpoint direction, lexicographic
/// tie-break), so the result is independent of input entity order.
fn merge_chains(entities: &[CadEntity], group: &[usize]) -> CadEntity {
    use crate::geom::Point2;

    let mut chains: Vec<Vec<Point2>> = group
        .iter()
        .map(|&i| match &entities[i].geometry {
            EntityGeometry::Line { start, end } => vec![*start, *end],
            EntityGeometry::Polyline { vertices, .. } => vertices.clone(),
            _ => unreachable!("only lines and open polylines have open ends"),
        })
        .collect();

    let lex = |p: &Point2, q: &Point2| (p.x, p.y).partial_cmp(&(q.x, q.y)).unwrap();
    let endpoints: Vec<Point2> = chains
        .iter()
        .flat_map(|c| [c[0], c[c.len() - 1]])
        .collect();
    let vmin = *endpoints
        .iter()
        .min_by(|a, b| lex(a, b))
        .expect("nonempty component");
    let vmax = *endpoints.iter().max_by(|a, b| lex(a, b)).unwrap();
    let dir = (vmax.x - vmin.x, vmax.y - vmin.y);
    let proj = |p: &Point2| p.x * dir.0 + p.y * dir.1;

    for chain in &mut chains {
        let first = chain[0];
        let last = chain[chain.len() - 1];
        let fk = (proj(&first), first.x, first.y);
        let lk = (proj(&last), last.x, last.y);
        if fk > lk {
            chain.reverse();
        }
    }
    chains.sort_by(|a, b| {
        let ka = (proj(&a[0]), a[0].x, a[0].y);
        let kb = (proj(&b[0]), b[0].x, b[0].y);
        ka.partial_cmp(&kb).unwrap()
    });

    let mut vertices: Vec<Point2> = Vec::new();
    for chain in chains {
        for p in chain {
            if vertices.last() != Some(&p) {
                vertices.push(p);
            }
        }
    }

    let handle = group.iter().map(|&i| entities[i].handle).min().unwrap();
    let base = &entities[group[0]];
    CadEntity {
        handle,
        layer: base.layer.clone(),
        geometry: EntityGeometry::Polyline {
            vertices,
            closed: false,
        },
        reference: base.reference,
    }
}
