//! QA report: one section per pipeline step plus the entity-conservation
//! ledger. Serialized as JSON with stable key order so identical runs
//! produce identical bytes.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cad::LayerInventory;
use crate::cad_clean::{CleanFix, CleanFixKind};
use crate::convert::ConvertCounts;
use crate::georef::{ControlPointPair, ResidualReport, Transform};
use crate::gis_clean::TopologyReport;
use crate::profile::ConversionProfile;

pub const REPORT_VERSION: &str = "1";

#[derive(Debug, Clone, Serialize)]
pub struct QaReport {
    pub report_version: &'static str,
    pub source: String,
    pub inventory: InventorySummary,
    pub cad_cleaning: CadCleaningSummary,
    pub conversion: ConversionSummary,
    pub georeferencing: GeoreferencingSummary,
    pub topology: TopologySummary,
    pub export: ExportSummary,
    /// Headline defect-repair counts, duplicated out of the per-step
    /// sections for operator scanning.
    pub repairs: RepairTotals,
    pub conservation: ConservationLedger,
}

#[derive(Debug, Clone, Serialize)]
pub struct InventorySummary {
    pub total_entities: u64,
    /// layer -> entity kind -> count.
    pub layers: BTreeMap<String, BTreeMap<&'static str, u64>>,
    /// [min_x, min_y, max_x, max_y] over all stored coordinates.
    pub bbox: Option<[f64; 4]>,
    pub unsupported_types: BTreeMap<String, u64>,
    pub z_coordinates_discarded: u64,
}

impl InventorySummary {
    pub fn from_inventory(inv: &LayerInventory) -> Self {
        InventorySummary {
            total_entities: inv.total_entities,
            layers: inv
                .layers
                .iter()
                .map(|(layer, kinds)| {
                    (
                        layer.clone(),
                        kinds.iter().map(|(k, n)| (k.name(), *n)).collect(),
                    )
                })
                .collect(),
            bbox: inv
                .bbox
                .as_ref()
                .map(|b| [b.min_x, b.min_y, b.max_x, b.max_y]),
            unsupported_types: inv.unsupported_types.clone(),
            z_coordinates_discarded: inv.z_discarded,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixRecord {
    pub kind: &'static str,
    pub handles: Vec<String>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct CadCleaningSummary {
    pub dropped_entities: u64,
    pub deduplicated: u64,
    pub bridged_gaps: u64,
    /// Layers matching no profile rule, with how many entities each lost.
    pub unmapped_layers: BTreeMap<String, u64>,
    pub fixes: Vec<FixRecord>,
}

impl CadCleaningSummary {
    pub fn from_fixes(
        fixes: &[CleanFix],
        inventory: &LayerInventory,
        profile: &ConversionProfile,
    ) -> Self {
        let mut s = CadCleaningSummary::default();
        for fix in fixes {
            match fix.kind {
                CleanFixKind::DroppedEntity => s.dropped_entities += 1,
                CleanFixKind::Deduped => s.deduplicated += 1,
                CleanFixKind::BridgedGap => s.bridged_gaps += 1,
            }
            s.fixes.push(FixRecord {
                kind: fix.kind.name(),
                handles: fix.handles.iter().map(|h| h.to_string()).collect(),
                detail: fix.detail.clone(),
            });
        }
        for (layer, kinds) in &inventory.layers {
            if profile.matching_rule(layer).is_none() {
                s.unmapped_layers
                    .insert(layer.clone(), kinds.values().sum());
            }
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct ConversionSummary {
    pub points: u64,
    pub lines: u64,
    pub polygons: u64,
    pub annotations: u64,
    pub reference_features: u64,
    pub circle_collapses: u64,
    pub ring_candidates: u64,
    pub warnings: Vec<String>,
}

impl ConversionSummary {
    pub fn from_counts(counts: &ConvertCounts, warnings: &[String]) -> Self {
        ConversionSummary {
            points: counts.points,
            lines: counts.lines,
            polygons: counts.polygons,
            annotations: counts.annotations,
            reference_features: counts.reference,
            circle_collapses: counts.circle_collapses,
            ring_candidates: counts.ring_candidates,
            warnings: warnings.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuspectPair {
    /// Zero-based index into the control-point file order.
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeoreferencingSummary {
    pub model: &'static str,
    /// Flat parameter map; similarity: scale/rotation-radians/tx/ty,
    /// affine: a..f of [a b c; d e f].
    pub parameters: BTreeMap<&'static str, f64>,
    pub control_points: usize,
    pub residuals: Vec<f64>,
    pub rms: f64,
    pub max_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual_threshold: Option<f64>,
    /// Pairs whose residual exceeds the threshold, when one was given.
    pub suspect_pairs: Vec<SuspectPair>,
    pub epsg: i64,
}

impl GeoreferencingSummary {
    pub fn from_fit(
        transform: &Transform,
        pairs: &[ControlPointPair],
        residuals: &ResidualReport,
        threshold: Option<f64>,
        epsg: i64,
    ) -> Self {
        let mut parameters = BTreeMap::new();
        match transform {
            Transform::Similarity(s) => {
                parameters.insert("scale", s.scale);
                parameters.insert("rotation-radians", s.rotation);
                parameters.insert("tx", s.translation.x);
                parameters.insert("ty", s.translation.y);
            }
            Transform::Affine(a) => {
                parameters.insert("a", a.a);
                parameters.insert("b", a.b);
                parameters.insert("c", a.c);
                parameters.insert("d", a.d);
                parameters.insert("e", a.e);
                parameters.insert("f", a.f);
            }
        }
        let suspect_pairs = match threshold {
            Some(t) => residuals
                .residuals
                .iter()
                .enumerate()
                .filter(|(_, r)| **r > t)
                .map(|(i, r)| SuspectPair {
                    index: i,
                    label: pairs[i].label.clone(),
                    residual: *r,
                })
                .collect(),
            None => Vec::new(),
        };
        GeoreferencingSummary {
            model: transform.model_name(),
            parameters,
            control_points: pairs.len(),
            residuals: residuals.residuals.clone(),
            rms: residuals.rms,
            max_residual: residuals.max,
            max_residual_threshold: threshold,
            suspect_pairs,
            epsg,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UnclosedRing {
    pub feature: u64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DangleRecord {
    pub feature: u64,
    pub x: f64,
    pub y: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nearest_node: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct TopologySummary {
    pub snapped_clusters: u64,
    pub snap_moved_nodes: u64,
    pub snap_max_move: f64,
    pub snap_mean_move: f64,
    pub closed_rings: u64,
    pub unclosed_ring_candidates: Vec<UnclosedRing>,
    pub collapsed_polygons: u64,
    pub degenerate_collapses: u64,
    pub attached_annotations: u64,
    pub orphan_annotations: u64,
    pub dangles: Vec<DangleRecord>,
    pub skipped_passes: Vec<String>,
}

impl TopologySummary {
    pub fn from_report(r: &TopologyReport, skipped_passes: &[String]) -> Self {
        TopologySummary {
            snapped_clusters: r.snapped_clusters,
            snap_moved_nodes: r.snap_moved_nodes,
            snap_max_move: r.snap_max_move,
            snap_mean_move: r.snap_mean_move,
            closed_rings: r.closed_rings,
            unclosed_ring_candidates: r
                .unclosed_candidates
                .iter()
                .map(|(id, gap)| UnclosedRing {
                    feature: id.0,
                    gap: *gap,
                })
                .collect(),
            collapsed_polygons: r.collapsed_polygons,
            degenerate_collapses: r.degenerate_collapses,
            attached_annotations: r.attached_annotations,
            orphan_annotations: r.orphan_annotations,
            dangles: r
                .dangles
                .iter()
                .map(|d| DangleRecord {
                    feature: d.feature.0,
                    x: d.endpoint.x,
                    y: d.endpoint.y,
                    nearest_node: d.nearest,
                })
                .collect(),
            skipped_passes: skipped_passes.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct ExportSummary {
    pub formats: Vec<String>,
    /// File names relative to the output directory, in write order.
    pub files: Vec<String>,
    /// class -> attribute key -> DBF field name (10-byte limit, suffixed on
    /// collision).
    pub dbf_field_names: BTreeMap<String, BTreeMap<String, String>>,
    /// Attribute values longer than the 254-byte DBF field width.
    pub truncated_attribute_values: u64,
    /// True when the profile supplied no WKT and .prj files are empty.
    pub prj_missing: bool,
}

/// Headline Table-3 style repair counts.
#[derive(Debug, Clone, Serialize, Default)]
pub struct RepairTotals {
    pub bridged_gaps: u64,
    pub closed_rings: u64,
    /// Circles collapsed at conversion plus polygons collapsed in cleaning.
    pub collapsed: u64,
    pub attached_annotations: u64,
    pub dangles: u64,
}

/// total == converted + dropped + merged + unsupported, always.
#[derive(Debug, Clone, Serialize, Default)]
pub struct ConservationLedger {
    pub total_entities: u64,
    pub converted: u64,
    pub dropped: u64,
    pub merged: u64,
    pub unsupported: u64,
    pub balanced: bool,
}

impl ConservationLedger {
    pub fn new(total_entities: u64, converted: u64, dropped: u64, merged: u64, unsupported: u64) -> Self {
        ConservationLedger {
            total_entities,
            converted,
            dropped,
            merged,
            unsupported,
            balanced: total_entities == converted + dropped + merged + unsupported,
        }
    }
}

/// Stable-key JSON text, trailing newline included.
pub fn write_report(report: &QaReport) -> String {
    let mut text = serde_json::to_string_pretty(report)
        .expect("report serialization cannot fail: no maps with non-string keys, no NaN");
    text.push('\n');
    text
}
