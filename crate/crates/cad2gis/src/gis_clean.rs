//! GIS-side topology repair, run after georeferencing in fixed order:
//! snap -> close -> collapse -> attach -> validate.
//!
//! Ring closure benefits from snapped vertices, annotation distances are
//! measured against final geometry, and validation must see everything, so
//! the order is not configurable (passes can only be skipped).

use std::collections::BTreeMap;

use crate::features::{Feature, FeatureClass, FeatureId, FeatureSet, Geometry};
use crate::geom::{point_polyline_distance, point_ring_distance, BoundingBox, Point2};
use crate::grid::PointGrid;
use crate::profile::{ConversionProfile, LayerAction};
use crate::union_find::UnionFind;

/// Aggregated result of the cleaning passes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopologyReport {
    pub snapped_clusters: u64,
    pub snap_moved_nodes: u64,
    pub snap_max_move: f64,
    pub snap_mean_move: f64,
    pub closed_rings: u64,
    /// Ring candidates whose end gap exceeded the tolerance: (id, gap).
    pub unclosed_candidates: Vec<(FeatureId, f64)>,
    pub collapsed_polygons: u64,
    /// Zero-area rings collapsed to the vertex mean instead of the area
    /// centroid.
    pub degenerate_collapses: u64,
    pub attached_annotations: u64,
    pub orphan_annotations: u64,
    pub dangles: Vec<Dangle>,
}

/// A line endpoint not coincident with any network node.
#[derive(Debug, Clone, PartialEq)]
pub struct Dangle {
    pub feature: FeatureId,
    pub endpoint: Point2,
    /// Distance to the nearest other node; `None` when the network has no
    /// other node at all.
    pub nearest: Option<f64>,
}

/// Which passes to run; order is fixed regardless.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassSelection {
    pub snap: bool,
    pub close: bool,
    pub collapse: bool,
    pub attach: bool,
    pub validate: bool,
}

impl Default for PassSelection {
    fn default() -> Self {
        PassSelection {
            snap: true,
            close: true,
            collapse: true,
            attach: true,
            validate: true,
        }
    }
}

/// Runs the selected passes in canonical order and aggregates the report.
pub fn clean_features(
    fs: FeatureSet,
    profile: &ConversionProfile,
    passes: &PassSelection,
) -> (FeatureSet, TopologyReport) {
    let tol = &profile.tolerances;
    let mut report = TopologyReport::default();
    let mut fs = fs;
    if passes.snap {
        let (next, frag) = snap_endpoints(fs, tol.snap);
        fs = next;
        report.snapped_clusters = frag.clusters;
        report.snap_moved_nodes = frag.moved_nodes;
        report.snap_max_move = frag.max_move;
        report.snap_mean_move = frag.mean_move;
    }
    if passes.close {
        let (next, frag) = close_polygons(fs, tol.ring_close);
        fs = next;
        report.closed_rings = frag.closed;
        report.unclosed_candidates = frag.unclosed;
    }
    if passes.collapse {
        let (next, frag) = collapse_redundant_polygons(fs, profile);
        fs = next;
        report.collapsed_polygons = frag.collapsed;
        report.degenerate_collapses = frag.degenerate;
    }
    if passes.attach {
        let (next, frag) = attach_annotations(fs, tol.annotation_attach);
        fs = next;
        report.attached_annotations = frag.attached;
        report.orphan_annotations = frag.orphans;
    }
    if passes.validate {
        report.dangles = validate_network(&fs, tol.dangle);
    }
    (fs, report)
}

/// One snappable node: a linestring end or a point feature's location.
#[derive(Clone, Copy)]
enum NodeRole {
    Start,
    End,
    PointGeom,
}

#[derive(Clone, Copy)]
struct NodeRef {
    feature: usize,
    role: NodeRole,
}

fn node_position(features: &[Feature], node: NodeRef) -> Point2 {
    let f = &features[node.feature];
    match (node.role, &f.geometry) {
        (NodeRole::PointGeom, Geometry::Point(p)) => *p,
        (NodeRole::Start, Geometry::LineString(v)) => v[0],
        (NodeRole::End, Geometry::LineString(v)) => *v.last().unwrap(),
        _ => unreachable!("node refers to wrong geometry"),
    }
}

fn set_node_position(features: &mut [Feature], node: NodeRef, p: Point2) {
    let f = &mut features[node.feature];
    match (node.role, &mut f.geometry) {
        (NodeRole::PointGeom, Geometry::Point(q)) => *q = p,
        (NodeRole::Start, Geometry::LineString(v)) => v[0] = p,
        (NodeRole::End, Geometry::LineString(v)) => *v.last_mut().unwrap() = p,
        _ => unreachable!("node refers to wrong geometry"),
    }
}

fn snappable_nodes(features: &[Feature]) -> Vec<NodeRef> {
    let mut nodes = Vec::new();
    for (i, f) in features.iter().enumerate() {
        match (&f.geometry, f.klass) {
            // Annotations keep their insert position: they are labels, not
            // network nodes.
            (Geometry::Point(_), FeatureClass::Point) => nodes.push(NodeRef {
                feature: i,
                role: NodeRole::PointGeom,
            }),
            (Geometry::LineString(_), _) => {
                nodes.push(NodeRef {
                    feature: i,
                    role: NodeRole::Start,
                });
                nodes.push(NodeRef {
                    feature: i,
                    role: NodeRole::End,
                });
            }
            _ => {}
        }
    }
    nodes
}

/// Single-linkage partition of `positions`: indices connected by chains of
/// gaps <= tol share a group. This is the clustering the snapping pass
/// applies; exposed for oracle comparison in tests.
pub fn single_linkage_clusters(positions: &[Point2], tol: f64) -> Vec<Vec<usize>> {
    let mut grid = PointGrid::new(tol);
    for (i, p) in positions.iter().enumerate() {
        grid.insert(*p, i);
    }
    let mut uf = UnionFind::new(positions.len());
    for (i, p) in positions.iter().enumerate() {
        for j in grid.neighborhood(*p) {
            if j > i && positions[j].distance(p) <= tol {
                uf.union(i, j);
            }
        }
    }
    uf.groups()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SnapFragment {
    /// Clusters that actually moved something (positive diameter).
    pub clusters: u64,
    pub moved_nodes: u64,
    pub max_move: f64,
    pub mean_move: f64,
}

/// Moves linestring endpoints and point features in each single-linkage
/// cluster to the cluster centroid. Interior vertices are untouched; no node
/// moves farther than its cluster's diameter (the centroid lies in the
/// cluster's hull).
///
/// Moving nodes to centroids can place two previously-separate clusters
/// within tolerance of each other, so the pass iterates to a fixpoint;
/// applying it again is then a no-op by construction. Reported cluster and
/// move counts accumulate over all rounds.
pub fn snap_endpoints(fs: FeatureSet, snap_tol: f64) -> (FeatureSet, SnapFragment) {
    let mut fs = fs;
    let mut frag = SnapFragment::default();
    let mut total_move = 0.0f64;
    let nodes = snappable_nodes(&fs.features);
    loop {
        let positions: Vec<Point2> = nodes
            .iter()
            .map(|&n| node_position(&fs.features, n))
            .collect();
        let mut moved_this_round = false;
        for group in single_linkage_clusters(&positions, snap_tol) {
            if group.len() < 2 {
                continue;
            }
            let centroid = crate::geom::vertex_mean(
                &group.iter().map(|&i| positions[i]).collect::<Vec<_>>(),
            );
            let mut any_move = false;
            for &i in &group {
                let d = positions[i].distance(&centroid);
                if d > 0.0 {
                    any_move = true;
                    frag.moved_nodes += 1;
                    total_move += d;
                    frag.max_move = frag.max_move.max(d);
                }
                set_node_position(&mut fs.features, nodes[i], centroid);
            }
            if any_move {
                frag.clusters += 1;
                moved_this_round = true;
            }
        }
        if !moved_this_round {
            break;
        }
    }
    frag.mean_move = if frag.moved_nodes > 0 {
        total_move / frag.moved_nodes as f64
    } else {
        0.0
    };
    (fs, frag)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CloseFragment {
    pub closed: u64,
    pub unclosed: Vec<(FeatureId, f64)>,
}

/// Turns flagged ring candidates into polygons when the end gap is within
/// tolerance, replacing the last vertex with the first. Candidates beyond
/// tolerance stay linestrings and are reported.
pub fn close_polygons(fs: FeatureSet, ring_close: f64) -> (FeatureSet, CloseFragment) {
    let mut fs = fs;
    let mut frag = CloseFragment::default();
    for f in &mut fs.features {
        if !f.ring_candidate {
            continue;
        }
        let Geometry::LineString(v) = &f.geometry else {
            continue;
        };
        let gap = v[0].distance(v.last().unwrap());
        if v.len() >= 4 && gap <= ring_close {
            let mut ring = v.clone();
            *ring.last_mut().unwrap() = ring[0];
            // The ring was validated at conversion time (length, closure by
            // construction); canonicalization cannot fail here.
            f.geometry = Geometry::polygon(ring).expect("ring candidate closes into a polygon");
            f.klass = FeatureClass::Polygon;
            f.ring_candidate = false;
            frag.closed += 1;
        } else {
            frag.unclosed.push((f.id, gap));
        }
    }
    (fs, frag)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CollapseFragment {
    pub collapsed: u64,
    pub degenerate: u64,
}

/// Replaces polygons on point+centroid layers with points at the ring's
/// area-weighted centroid, preserving id and attributes. Zero-area rings
/// fall back to the vertex mean.
pub fn collapse_redundant_polygons(
    fs: FeatureSet,
    profile: &ConversionProfile,
) -> (FeatureSet, CollapseFragment) {
    let mut fs = fs;
    let mut frag = CollapseFragment::default();
    for f in &mut fs.features {
        if f.klass != FeatureClass::Polygon {
            continue;
        }
        let Some(layer) = f.attributes.get("layer") else {
            continue;
        };
        let Some(rule) = profile.matching_rule(layer) else {
            continue;
        };
        if rule.action != LayerAction::Point || rule.collapse.is_none() {
            continue;
        }
        let Geometry::Polygon(ring) = &f.geometry else {
            continue;
        };
        let center = match crate::geom::ring_centroid(ring) {
            Some(c) => c,
            None => {
                frag.degenerate += 1;
                crate::geom::vertex_mean(&ring[..ring.len() - 1])
            }
        };
        f.geometry = Geometry::Point(center);
        f.klass = FeatureClass::Point;
        frag.collapsed += 1;
    }
    (fs, frag)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AttachFragment {
    pub attached: u64,
    pub orphans: u64,
}

/// Transfers each annotation's label onto the nearest non-annotation feature
/// within tolerance (true point-to-geometry distance, ties to the smaller
/// id). Attribute key "label", suffixed "_2", "_3", ... on collision.
/// Attached annotations are marked with an "attached_to" attribute naming
/// the target id, which also makes the pass idempotent; the annotation
/// features themselves always survive as their own output layer.
pub fn attach_annotations(fs: FeatureSet, attach_tol: f64) -> (FeatureSet, AttachFragment) {
    let mut fs = fs;
    let mut frag = AttachFragment::default();

    // Candidate targets with a bbox prefilter for the distance scan.
    struct Target {
        index: usize,
        id: FeatureId,
        bbox: BoundingBox,
    }
    let targets: Vec<Target> = fs
        .features
        .iter()
        .enumerate()
        .filter(|(_, f)| f.klass != FeatureClass::Annotation)
        .map(|(i, f)| Target {
            index: i,
            id: f.id,
            bbox: f.geometry.bbox(),
        })
        .collect();

    let annotations: Vec<usize> = fs
        .features
        .iter()
        .enumerate()
        .filter(|(_, f)| {
            f.klass == FeatureClass::Annotation && !f.attributes.contains_key("attached_to")
        })
        .map(|(i, _)| i)
        .collect();

    for ai in annotations {
        let Geometry::Point(p) = fs.features[ai].geometry else {
            continue;
        };
        let mut best: Option<(f64, FeatureId, usize)> = None;
        for t in &targets {
            if bbox_distance_lower_bound(&t.bbox, &p) > attach_tol {
                continue;
            }
            let d = feature_distance(&fs.features[t.index].geometry, &p);
            if d > attach_tol {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bid, _)) => d < bd || (d == bd && t.id < bid),
            };
            if better {
                best = Some((d, t.id, t.index));
            }
        }
        match best {
            Some((_, target_id, target_index)) => {
                let label = fs.features[ai]
                    .attributes
                    .get("label")
                    .cloned()
                    .unwrap_or_default();
                insert_with_suffix(&mut fs.features[target_index].attributes, "label", label);
                fs.features[ai]
                    .attributes
                    .insert("attached_to".into(), target_id.to_string());
                frag.attached += 1;
            }
            None => frag.orphans += 1,
        }
    }
    (fs, frag)
}

fn bbox_distance_lower_bound(b: &BoundingBox, p: &Point2) -> f64 {
    let dx = (b.min_x - p.x).max(p.x - b.max_x).max(0.0);
    let dy = (b.min_y - p.y).max(p.y - b.max_y).max(0.0);
    (dx * dx + dy * dy).sqrt()
}

fn feature_distance(geometry: &Geometry, p: &Point2) -> f64 {
    match geometry {
        Geometry::Point(q) => p.distance(q),
        Geometry::LineString(v) => point_polyline_distance(p, v),
        Geometry::Polygon(ring) => point_ring_distance(p, ring),
    }
}

/// First free key among `key`, `key_2`, `key_3`, ... Existing values are
/// never overwritten.
fn insert_with_suffix(attrs: &mut BTreeMap<String, String>, key: &str, value: String) {
    if !attrs.contains_key(key) {
        attrs.insert(key.to_string(), value);
        return;
    }
    let mut n = 2;
    loop {
        let candidate = format!("{key}_{n}");
        if !attrs.contains_key(&candidate) {
            attrs.insert(candidate, value);
            return;
        }
        n += 1;
    }
}

/// Lists linestring endpoints not within `dangle_tol` of any point feature
/// or any other linestring endpoint.
pub fn validate_network(fs: &FeatureSet, dangle_tol: f64) -> Vec<Dangle> {
    // Node instances: (owning line feature or None for point features,
    // endpoint index for lines, position).
    struct Node {
        line: Option<(usize, u8)>,
        pos: Point2,
    }
    let mut nodes: Vec<Node> = Vec::new();
    for (i, f) in fs.features.iter().enumerate() {
        match (&f.geometry, f.klass) {
            (Geometry::Point(p), FeatureClass::Point) => nodes.push(Node {
                line: None,
                pos: *p,
            }),
            (Geometry::LineString(v), _) => {
                nodes.push(Node {
                    line: Some((i, 0)),
                    pos: v[0],
                });
                nodes.push(Node {
                    line: Some((i, 1)),
                    pos: *v.last().unwrap(),
                });
            }
            _ => {}
        }
    }
    let mut grid = PointGrid::new(dangle_tol);
    for (i, n) in nodes.iter().enumerate() {
        grid.insert(n.pos, i);
    }
    let mut dangles = Vec::new();
    for (i, n) in nodes.iter().enumerate() {
        let Some((feature_index, _)) = n.line else {
            continue;
        };
        let connected = grid.neighborhood(n.pos).into_iter().any(|j| {
            j != i && nodes[j].pos.distance(&n.pos) <= dangle_tol
        });
        if connected {
            continue;
        }
        let nearest = nodes
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, m)| m.pos.distance(&n.pos))
            .min_by(|a, b| a.partial_cmp(b).unwrap());
        dangles.push(Dangle {
            feature: fs.features[feature_index].id,
            endpoint: n.pos,
            nearest,
        });
    }
    dangles
}
