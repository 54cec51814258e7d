//! Minimal ESRI shapefile writer: 2D shape types 1 (Point), 3 (PolyLine),
//! 5 (Polygon), single-part records, dBASE III string attributes.
//!
//! File-level invariants (from the published format): .shp and .shx headers
//! are 100 bytes with big-endian lengths in 16-bit words; record headers are
//! big-endian, record contents little-endian; an empty .shp is exactly the
//! header with length field 50. The .dbf date bytes are pinned so identical
//! inputs yield identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use byteorder::{BigEndian, LittleEndian, WriteBytesExt};

use crate::error::Error;
use crate::features::{Feature, FeatureClass, FeatureSet, Geometry};
use crate::geom::BoundingBox;
use crate::Result;

const HEADER_LEN: usize = 100;
const FILE_CODE: i32 = 9994;
const VERSION: i32 = 1000;
const DBF_FIELD_WIDTH: usize = 254;
const DBF_NAME_LEN: usize = 10;

/// The four sidecar files for one feature class, plus bookkeeping the QA
/// report records.
pub struct ShapefileBundle {
    pub shp: Vec<u8>,
    pub shx: Vec<u8>,
    pub dbf: Vec<u8>,
    pub prj: String,
    /// attribute key -> DBF field name after 10-byte truncation/suffixing.
    pub field_names: BTreeMap<String, String>,
    /// Attribute values cut at the 254-byte field width.
    pub truncated_values: u64,
    /// Profile supplied no WKT; .prj is empty.
    pub prj_missing: bool,
}

fn shape_type(klass: FeatureClass) -> i32 {
    match klass {
        FeatureClass::Point | FeatureClass::Annotation => 1,
        FeatureClass::Line => 3,
        FeatureClass::Polygon => 5,
    }
}

fn expect_geometry(f: &Feature, klass: FeatureClass) -> Result<()> {
    let ok = match (klass, &f.geometry) {
        (FeatureClass::Point | FeatureClass::Annotation, Geometry::Point(_)) => true,
        (FeatureClass::Line, Geometry::LineString(_)) => true,
        (FeatureClass::Polygon, Geometry::Polygon(_)) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Export(format!(
            "feature {} has {} geometry, cannot mix into a {} shapefile",
            f.id,
            match f.geometry {
                Geometry::Point(_) => "point",
                Geometry::LineString(_) => "linestring",
                Geometry::Polygon(_) => "polygon",
            },
            klass.name()
        )))
    }
}

fn write_main_header(out: &mut Vec<u8>, length_words: i32, shape: i32, bbox: &Option<BoundingBox>) {
    out.write_i32::<BigEndian>(FILE_CODE).unwrap();
    for _ in 0..5 {
        out.write_i32::<BigEndian>(0).unwrap();
    }
    out.write_i32::<BigEndian>(length_words).unwrap();
    out.write_i32::<LittleEndian>(VERSION).unwrap();
    out.write_i32::<LittleEndian>(shape).unwrap();
    let (x0, y0, x1, y1) = match bbox {
        Some(b) => (b.min_x, b.min_y, b.max_x, b.max_y),
        None => (0.0, 0.0, 0.0, 0.0),
    };
    for v in [x0, y0, x1, y1] {
        out.write_f64::<LittleEndian>(v).unwrap();
    }
    // Z and M ranges: unused in 2D files.
    for _ in 0..4 {
        out.write_f64::<LittleEndian>(0.0).unwrap();
    }
    debug_assert_eq!(out.len() % HEADER_LEN, 0);
}

fn record_content(f: &Feature, shape: i32) -> Vec<u8> {
    let mut c = Vec::new();
    c.write_i32::<LittleEndian>(shape).unwrap();
    match &f.geometry {
        Geometry::Point(p) => {
            c.write_f64::<LittleEndian>(p.x).unwrap();
            c.write_f64::<LittleEndian>(p.y).unwrap();
        }
        Geometry::LineString(pts) | Geometry::Polygon(pts) => {
            let b = BoundingBox::of_points(pts).expect("geometry is never empty");
            for v in [b.min_x, b.min_y, b.max_x, b.max_y] {
                c.write_f64::<LittleEndian>(v).unwrap();
            }
            c.write_i32::<LittleEndian>(1).unwrap();
            c.write_i32::<LittleEndian>(pts.len() as i32).unwrap();
            c.write_i32::<LittleEndian>(0).unwrap();
            for p in pts {
                c.write_f64::<LittleEndian>(p.x).unwrap();
                c.write_f64::<LittleEndian>(p.y).unwrap();
            }
        }
    }
    c
}

/// Truncate to `limit` bytes without splitting a UTF-8 sequence.
fn truncate_utf8(s: &str, limit: usize) -> &str {
    if s.len() <= limit {
        return s;
    }
    let mut end = limit;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    &s[..end]
}

/// 10-byte DBF names; collisions get `_2`, `_3`, ... carved into the tail.
fn dbf_field_names(keys: &BTreeSet<String>) -> BTreeMap<String, String> {
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut names = BTreeMap::new();
    for key in keys {
        let base = truncate_utf8(key, DBF_NAME_LEN).to_string();
        let mut name = base.clone();
        let mut n = 1;
        while used.contains(&name) {
            n += 1;
            let suffix = format!("_{n}");
            name = format!(
                "{}{}",
                truncate_utf8(&base, DBF_NAME_LEN - suffix.len()),
                suffix
            );
        }
        used.insert(name.clone());
        names.insert(key.clone(), name);
    }
    names
}

struct DbfOutput {
    bytes: Vec<u8>,
    field_names: BTreeMap<String, String>,
    truncated: u64,
}

fn write_dbf(features: &[&Feature]) -> DbfOutput {
    let keys: BTreeSet<String> = features
        .iter()
        .flat_map(|f| f.attributes.keys().cloned())
        .collect();
    let field_names = dbf_field_names(&keys);
    let n_fields = keys.len();
    let header_len = 32 + 32 * n_fields + 1;
    let record_len = 1 + DBF_FIELD_WIDTH * n_fields;
    let mut out = Vec::new();
    out.push(0x03);
    // Fixed date (1900-01-01): real modification dates would break
    // byte-determinism between runs.
    out.extend_from_slice(&[0, 1, 1]);
    out.write_u32::<LittleEndian>(features.len() as u32).unwrap();
    out.write_u16::<LittleEndian>(header_len as u16).unwrap();
    out.write_u16::<LittleEndian>(record_len as u16).unwrap();
    out.extend_from_slice(&[0u8; 20]);
    for key in &keys {
        let name = &field_names[key];
        let mut name_bytes = [0u8; 11];
        name_bytes[..name.len()].copy_from_slice(name.as_bytes());
        out.extend_from_slice(&name_bytes);
        out.push(b'C');
        out.extend_from_slice(&[0u8; 4]);
        out.push(DBF_FIELD_WIDTH as u8);
        out.push(0);
        out.extend_from_slice(&[0u8; 14]);
    }
    out.push(0x0D);
    let mut truncated = 0;
    for f in features {
        out.push(b' ');
        for key in &keys {
            let value = f.attributes.get(key).map(String::as_str).unwrap_or("");
            let cut = truncate_utf8(value, DBF_FIELD_WIDTH);
            if cut.len() < value.len() {
                truncated += 1;
            }
            let mut cell = vec![b' '; DBF_FIELD_WIDTH];
            cell[..cut.len()].copy_from_slice(cut.as_bytes());
            out.extend_from_slice(&cell);
        }
    }
    out.push(0x1A);
    DbfOutput {
        bytes: out,
        field_names,
        truncated,
    }
}

/// Serializes `fs`'s features of `klass`, in id order, into the four
/// shapefile sidecars. Refuses drawing-space sets and geometry that does not
/// match the class.
pub fn write_shapefile(fs: &FeatureSet, klass: FeatureClass) -> Result<ShapefileBundle> {
    if !fs.georeferenced {
        return Err(Error::Export(
            "refusing to export drawing-space coordinates; georeference first".into(),
        ));
    }
    let mut features: Vec<&Feature> = fs.of_class(klass).collect();
    features.sort_by_key(|f| f.id);
    for f in &features {
        expect_geometry(f, klass)?;
    }
    let shape = shape_type(klass);
    let bbox = BoundingBox::of_points(
        &features
            .iter()
            .flat_map(|f| f.geometry.points().iter().copied())
            .collect::<Vec<_>>(),
    );

    let contents: Vec<Vec<u8>> = features.iter().map(|f| record_content(f, shape)).collect();
    let total_record_bytes: usize = contents.iter().map(|c| c.len() + 8).sum();
    let shp_len_words = ((HEADER_LEN + total_record_bytes) / 2) as i32;
    let shx_len_words = ((HEADER_LEN + 8 * contents.len()) / 2) as i32;

    let mut shp = Vec::with_capacity(HEADER_LEN + total_record_bytes);
    write_main_header(&mut shp, shp_len_words, shape, &bbox);
    let mut shx = Vec::with_capacity(HEADER_LEN + 8 * contents.len());
    write_main_header(&mut shx, shx_len_words, shape, &bbox);

    let mut offset_words = (HEADER_LEN / 2) as i32;
    for (i, content) in contents.iter().enumerate() {
        let content_words = (content.len() / 2) as i32;
        shx.write_i32::<BigEndian>(offset_words).unwrap();
        shx.write_i32::<BigEndian>(content_words).unwrap();
        shp.write_i32::<BigEndian>(i as i32 + 1).unwrap();
        shp.write_i32::<BigEndian>(content_words).unwrap();
        shp.write_all(content).unwrap();
        offset_words += 4 + content_words;
    }

    let dbf = write_dbf(&features);
    let crs = fs.crs.as_ref();
    let prj = crs.and_then(|c| c.wkt.clone()).unwrap_or_default();
    let prj_missing = prj.is_empty();
    Ok(ShapefileBundle {
        shp,
        shx,
        dbf: dbf.bytes,
        prj,
        field_names: dbf.field_names,
        truncated_values: dbf.truncated,
        prj_missing,
    })
}
