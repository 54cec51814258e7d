//! GeoJSON output, one FeatureCollection per feature class, and a reader
//! for the validate subcommand.
//!
//! The writer formats every coordinate with exactly 9 fractional digits and
//! emits keys in a fixed order, so identical feature sets serialize to
//! identical bytes. Two foreign members extend RFC 7946: "epsg" (the target
//! CRS code) and "class" (which of the four per-class files this is).

use serde_json::Value;

use crate::error::Error;
use crate::features::{Feature, FeatureClass, FeatureId, FeatureSet, Geometry};
use crate::geom::Point2;
use crate::profile::Crs;
use crate::Result;

fn coord(p: &Point2) -> String {
    format!("[{:.9},{:.9}]", p.x, p.y)
}

fn coord_seq(points: &[Point2]) -> String {
    let parts: Vec<String> = points.iter().map(coord).collect();
    format!("[{}]", parts.join(","))
}

fn geometry_json(g: &Geometry) -> String {
    match g {
        Geometry::Point(p) => format!(r#"{{"type":"Point","coordinates":{}}}"#, coord(p)),
        Geometry::LineString(v) => format!(
            r#"{{"type":"LineString","coordinates":{}}}"#,
            coord_seq(v)
        ),
        Geometry::Polygon(ring) => format!(
            r#"{{"type":"Polygon","coordinates":[{}]}}"#,
            coord_seq(ring)
        ),
    }
}

fn feature_json(f: &Feature) -> String {
    // BTreeMap iteration gives sorted property keys; serde_json handles
    // string escaping.
    let props: Vec<String> = f
        .attributes
        .iter()
        .map(|(k, v)| {
            format!(
                "{}:{}",
                serde_json::to_string(k).unwrap(),
                serde_json::to_string(v).unwrap()
            )
        })
        .collect();
    format!(
        r#"{{"type":"Feature","id":{},"geometry":{},"properties":{{{}}}}}"#,
        f.id,
        geometry_json(&f.geometry),
        props.join(",")
    )
}

/// One FeatureCollection holding `fs`'s features of class `klass`, in id
/// order. Refuses drawing-space coordinates.
pub fn write_geojson_class(fs: &FeatureSet, klass: FeatureClass) -> Result<String> {
    if !fs.georeferenced {
        return Err(Error::Export(
            "refusing to export drawing-space coordinates; georeference first".into(),
        ));
    }
    let crs = fs
        .crs
        .as_ref()
        .ok_or_else(|| Error::Export("georeferenced set has no CRS".into()))?;
    let mut features: Vec<&Feature> = fs.of_class(klass).collect();
    features.sort_by_key(|f| f.id);
    let mut out = String::new();
    out.push_str(&format!(
        r#"{{"type":"FeatureCollection","epsg":{},"class":"{}","features":["#,
        crs.epsg,
        klass.name()
    ));
    for (i, f) in features.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str(&feature_json(f));
    }
    if !features.is_empty() {
        out.push('\n');
    }
    out.push_str("]}\n");
    Ok(out)
}

/// All four class collections, keyed by class name in class order.
pub fn write_geojson(fs: &FeatureSet) -> Result<Vec<(FeatureClass, String)>> {
    FeatureClass::ALL
        .iter()
        .map(|&klass| Ok((klass, write_geojson_class(fs, klass)?)))
        .collect()
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Export(format!("geojson read: {}", msg.into()))
}

fn read_position(v: &Value) -> Result<Point2> {
    let arr = v.as_array().ok_or_else(|| bad("position is not an array"))?;
    if arr.len() < 2 {
        return Err(bad("position has fewer than 2 ordinates"));
    }
    let x = arr[0].as_f64().ok_or_else(|| bad("non-numeric ordinate"))?;
    let y = arr[1].as_f64().ok_or_else(|| bad("non-numeric ordinate"))?;
    Ok(Point2::new(x, y))
}

fn read_positions(v: &Value) -> Result<Vec<Point2>> {
    v.as_array()
        .ok_or_else(|| bad("coordinate sequence is not an array"))?
        .iter()
        .map(read_position)
        .collect()
}

fn read_geometry(v: &Value) -> Result<Geometry> {
    let t = v["type"].as_str().ok_or_else(|| bad("geometry has no type"))?;
    let coords = &v["coordinates"];
    match t {
        "Point" => Ok(Geometry::Point(read_position(coords)?)),
        "LineString" => {
            let pts = read_positions(coords)?;
            if pts.len() < 2 {
                return Err(bad("LineString with fewer than 2 positions"));
            }
            Ok(Geometry::LineString(pts))
        }
        "Polygon" => {
            let rings = coords
                .as_array()
                .ok_or_else(|| bad("Polygon coordinates not an array"))?;
            let outer = rings.first().ok_or_else(|| bad("Polygon with no rings"))?;
            Geometry::polygon(read_positions(outer)?)
        }
        other => Err(bad(format!("unsupported geometry type {other:?}"))),
    }
}

/// Parses one FeatureCollection as written by this tool (or anything
/// structurally equivalent). The "class" foreign member wins; without it the
/// class is inferred from the geometry type, treating labeled points
/// ("label" property, no other hint) as plain points.
pub fn read_geojson(text: &str) -> Result<FeatureSet> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| bad(format!("invalid JSON: {e}")))?;
    if doc["type"].as_str() != Some("FeatureCollection") {
        return Err(bad("not a FeatureCollection"));
    }
    let class_hint = doc["class"].as_str().and_then(|name| {
        FeatureClass::ALL.iter().copied().find(|k| k.name() == name)
    });
    let epsg = doc["epsg"].as_i64();
    let features_json = doc["features"]
        .as_array()
        .ok_or_else(|| bad("missing features array"))?;
    let mut fs = FeatureSet::new();
    fs.georeferenced = true;
    fs.crs = Some(Crs {
        epsg: epsg.unwrap_or(0),
        wkt: None,
    });
    for (i, fj) in features_json.iter().enumerate() {
        if fj["type"].as_str() != Some("Feature") {
            return Err(bad(format!("features[{i}] is not a Feature")));
        }
        let geometry = read_geometry(&fj["geometry"])?;
        let klass = class_hint.unwrap_or(match geometry {
            Geometry::Point(_) => FeatureClass::Point,
            Geometry::LineString(_) => FeatureClass::Line,
            Geometry::Polygon(_) => FeatureClass::Polygon,
        });
        let id = FeatureId(fj["id"].as_u64().unwrap_or(i as u64 + 1));
        let mut feature = Feature::new(id, klass, geometry, Default::default());
        if let Some(props) = fj["properties"].as_object() {
            for (k, v) in props {
                let text = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                feature.attributes.insert(k.clone(), text);
            }
        }
        fs.features.push(feature);
    }
    Ok(fs)
}

/// Merges per-class collections into one set; ids must not collide across
/// inputs (they never do for this tool's own output).
pub fn read_geojson_many<'a>(texts: impl IntoIterator<Item = &'a str>) -> Result<FeatureSet> {
    let mut merged = FeatureSet::new();
    merged.georeferenced = true;
    for text in texts {
        let fs = read_geojson(text)?;
        if merged.crs.is_none() {
            merged.crs = fs.crs.clone();
        }
        merged.features.extend(fs.features);
    }
    merged.features.sort_by_key(|f| f.id);
    Ok(merged)
}
