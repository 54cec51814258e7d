//! End-to-end orchestration: parse -> inventory -> CAD cleaning -> convert
//! -> georeference -> GIS cleaning -> writers -> QA report.

use std::fs;
use std::path::{Path, PathBuf};

use crate::cad_clean::{bridge_text_gaps, dedupe_entities, drop_irrelevant, CleanFix, CleanFixKind};
use crate::convert::convert_document;
use crate::dxf::parse_dxf;
use crate::error::Error;
use crate::features::{FeatureClass, FeatureSet};
use crate::geojson::write_geojson_class;
use crate::georef::{
    apply_transform, estimate_affine, estimate_similarity, read_control_points, residuals,
    Transform,
};
use crate::gis_clean::{clean_features, PassSelection};
use crate::profile::{load_profile, TransformModel};
use crate::report::{
    write_report, CadCleaningSummary, ConservationLedger, ConversionSummary, ExportSummary,
    GeoreferencingSummary, InventorySummary, QaReport, RepairTotals, TopologySummary,
    REPORT_VERSION,
};
use crate::shapefile::write_shapefile;
use crate::Result;

/// Output formats; at least one must be enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Formats {
    pub geojson: bool,
    pub shapefile: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub dxf_path: PathBuf,
    pub profile_path: PathBuf,
    pub control_points_path: PathBuf,
    pub out_dir: PathBuf,
    pub formats: Formats,
    pub report_path: PathBuf,
    pub passes: PassSelection,
    /// Exit-1 threshold on the worst control-point residual, when given.
    pub max_residual: Option<f64>,
}

/// Exit-code carrier: Clean -> 0, Warnings -> 1. Hard failures are `Err`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineStatus {
    Clean,
    Warnings,
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub status: PipelineStatus,
    pub report: QaReport,
    /// Operator-facing warning lines, one per condition behind exit 1.
    pub warnings: Vec<String>,
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn class_stem(klass: FeatureClass) -> &'static str {
    match klass {
        FeatureClass::Point => "points",
        FeatureClass::Line => "lines",
        FeatureClass::Polygon => "polygons",
        FeatureClass::Annotation => "annotations",
    }
}

impl PassSelection {
    /// Names of disabled passes, canonical order; mirrors --skip-pass input.
    pub fn skipped_names(&self) -> Vec<String> {
        [
            ("snap", self.snap),
            ("close", self.close),
            ("collapse", self.collapse),
            ("attach", self.attach),
            ("validate", self.validate),
        ]
        .iter()
        .filter(|(_, enabled)| !enabled)
        .map(|(name, _)| name.to_string())
        .collect()
    }
}

fn estimate(model: TransformModel, pairs: &[crate::georef::ControlPointPair]) -> Result<Transform> {
    match model {
        TransformModel::Similarity => Ok(Transform::Similarity(estimate_similarity(pairs)?)),
        TransformModel::Affine => Ok(Transform::Affine(estimate_affine(pairs)?)),
    }
}

fn export(
    fs: &FeatureSet,
    cfg: &PipelineConfig,
) -> Result<ExportSummary> {
    let mut summary = ExportSummary::default();
    if cfg.formats.geojson {
        summary.formats.push("geojson".into());
    }
    if cfg.formats.shapefile {
        summary.formats.push("shapefile".into());
    }
    fs::create_dir_all(&cfg.out_dir)?;
    if cfg.formats.geojson {
        for klass in FeatureClass::ALL {
            let name = format!("{}.geojson", class_stem(klass));
            write_file(&cfg.out_dir.join(&name), write_geojson_class(fs, klass)?.as_bytes())?;
            summary.files.push(name);
        }
    }
    if cfg.formats.shapefile {
        for klass in FeatureClass::ALL {
            let bundle = write_shapefile(fs, klass)?;
            let stem = class_stem(klass);
            for (ext, bytes) in [
                ("shp", &bundle.shp),
                ("shx", &bundle.shx),
                ("dbf", &bundle.dbf),
            ] {
                let name = format!("{stem}.{ext}");
                write_file(&cfg.out_dir.join(&name), bytes)?;
                summary.files.push(name);
            }
            let name = format!("{stem}.prj");
            write_file(&cfg.out_dir.join(&name), bundle.prj.as_bytes())?;
            summary.files.push(name);
            summary
                .dbf_field_names
                .insert(klass.name().to_string(), bundle.field_names);
            summary.truncated_attribute_values += bundle.truncated_values;
            summary.prj_missing = bundle.prj_missing;
        }
    }
    Ok(summary)
}

/// Runs the whole conversion. `Ok` means the report and outputs are on
/// disk; the status distinguishes clean runs from runs with residual
/// defects (dangles, orphans, unclosed rings, residual over threshold).
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    if !cfg.formats.geojson && !cfg.formats.shapefile {
        return Err(Error::Export("no output formats selected".into()));
    }

    // Step 1: parse + inventory.
    let source_name = cfg
        .dxf_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| cfg.dxf_path.display().to_string());
    let doc = parse_dxf(&read_text(&cfg.dxf_path)?, &source_name)?;
    let inventory = doc.inventory();

    let profile = load_profile(&read_text(&cfg.profile_path)?)?;
    let pairs = read_control_points(fs::File::open(&cfg.control_points_path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", cfg.control_points_path.display()),
        ))
    })?)?;

    // Step 2: CAD-side cleaning.
    let (doc, mut fixes) = drop_irrelevant(doc, &profile);
    let (doc, dedupe_fixes) = dedupe_entities(doc);
    fixes.extend(dedupe_fixes);
    let (doc, bridge_fixes) = bridge_text_gaps(doc, &profile.tolerances);
    fixes.extend(bridge_fixes);

    // Step 3: conversion to features.
    let converted = convert_document(&doc, &profile)?;
    let convert_counts = converted.counts;
    let convert_warnings = converted.warnings;

    // Step 4: georeference. The reference overlay is transformed too (it
    // exists as a visual anchor in target space) but is never exported.
    let transform = estimate(profile.transform_model, &pairs)?;
    let fit = residuals(&transform, &pairs)?;
    let main = apply_transform(converted.main, &transform, &profile.crs)?;
    let _reference = apply_transform(converted.reference, &transform, &profile.crs)?;

    // Step 5: GIS-side cleaning.
    let (main, topology) = clean_features(main, &profile, &cfg.passes);

    let export_summary = export(&main, cfg)?;

    let dropped: u64 = fixes
        .iter()
        .filter(|f| matches!(f.kind, CleanFixKind::DroppedEntity | CleanFixKind::Deduped))
        .count() as u64
        + convert_counts.dropped;
    let merged = fixes
        .iter()
        .filter(|f| f.kind == CleanFixKind::BridgedGap)
        .count() as u64;
    let conservation = ConservationLedger::new(
        inventory.total_entities,
        convert_counts.converted_total(),
        dropped,
        merged,
        convert_counts.unsupported,
    );

    let remaining_ring_candidates =
        main.features.iter().filter(|f| f.ring_candidate).count() as u64;
    let mut warnings = Vec::new();
    if !topology.dangles.is_empty() {
        warnings.push(format!("{} dangling line endpoint(s)", topology.dangles.len()));
    }
    if topology.orphan_annotations > 0 {
        warnings.push(format!(
            "{} annotation(s) found no feature to attach to",
            topology.orphan_annotations
        ));
    }
    if remaining_ring_candidates > 0 {
        warnings.push(format!(
            "{remaining_ring_candidates} ring candidate(s) still open"
        ));
    }
    if let Some(limit) = cfg.max_residual {
        if fit.max > limit {
            warnings.push(format!(
                "worst control-point residual {} exceeds --max-residual {limit}",
                fit.max
            ));
        }
    }

    let repairs = RepairTotals {
        bridged_gaps: merged,
        closed_rings: topology.closed_rings,
        collapsed: convert_counts.circle_collapses + topology.collapsed_polygons,
        attached_annotations: topology.attached_annotations,
        dangles: topology.dangles.len() as u64,
    };
    let report = QaReport {
        report_version: REPORT_VERSION,
        source: source_name,
        inventory: InventorySummary::from_inventory(&inventory),
        cad_cleaning: summarize_fixes(&fixes, &inventory, &profile),
        conversion: ConversionSummary::from_counts(&convert_counts, &convert_warnings),
        georeferencing: GeoreferencingSummary::from_fit(
            &transform,
            &pairs,
            &fit,
            cfg.max_residual,
            profile.crs.epsg,
        ),
        topology: TopologySummary::from_report(&topology, &cfg.passes.skipped_names()),
        export: export_summary,
        repairs,
        conservation,
    };
    if let Some(parent) = cfg.report_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    write_file(&cfg.report_path, write_report(&report).as_bytes())?;

    let status = if warnings.is_empty() {
        PipelineStatus::Clean
    } else {
        PipelineStatus::Warnings
    };
    Ok(PipelineOutcome {
        status,
        report,
        warnings,
    })
}

fn summarize_fixes(
    fixes: &[CleanFix],
    inventory: &crate::cad::LayerInventory,
    profile: &crate::profile::ConversionProfile,
) -> CadCleaningSummary {
    CadCleaningSummary::from_fixes(fixes, inventory, profile)
}
