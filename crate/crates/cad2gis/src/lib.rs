//! Batch conversion of infrastructure drawings from ASCII DXF into cleaned,
//! georeferenced GIS feature data.
//!
//! The pipeline runs in fixed stages:
//!
//! 1. parse the drawing ([`dxf::parse_dxf`]) and take a per-layer inventory,
//! 2. clean the CAD document in place: drop irrelevant layers, remove
//!    double-drawn geometry, and bridge line gaps left by inline text
//!    ([`cad_clean`]),
//! 3. convert entities into point / line / polygon / annotation features per a
//!    declarative [`profile::ConversionProfile`] ([`convert`]),
//! 4. fit a similarity (or affine) transform from control-point pairs and move
//!    everything into the target coordinate system ([`georef`]),
//! 5. repair GIS-side topology: endpoint snapping, ring closure, polygon
//!    collapse, annotation attachment, and dangle validation ([`gis_clean`]),
//!
//! then serialize the results as GeoJSON and minimal ESRI shapefiles together
//! with a QA report that accounts for every input entity
//! ([`geojson`], [`shapefile`], [`report`]).
//!
//! [`pipeline::run_pipeline`] wires the stages together; the `cad2gis` binary
//! is a thin CLI wrapper around it.

pub mod cad;
pub mod cad_clean;
pub mod convert;
pub mod dxf;
pub mod error;
pub mod features;
pub mod geojson;
pub mod geom;
pub mod georef;
pub mod gis_clean;
pub mod pipeline;
pub mod profile;
pub mod report;
pub mod shapefile;

mod grid;
mod union_find;

pub use cad::{CadDocument, CadEntity, EntityGeometry, EntityKind, Handle, LayerInventory};
pub use error::Error;
pub use features::{Feature, FeatureClass, FeatureId, FeatureSet, Geometry};
pub use geom::{BoundingBox, Point2};
pub use gis_clean::{PassSelection, TopologyReport};
pub use pipeline::{run_pipeline, Formats, PipelineConfig, PipelineOutcome, PipelineStatus};
pub use profile::{ConversionProfile, LayerAction, LayerRule, Tolerances};
pub use report::QaReport;

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
