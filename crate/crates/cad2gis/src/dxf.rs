//! ASCII DXF parser for the supported entity subset.
//!
//! DXF is a sequence of group-code/value line pairs. Only the ENTITIES
//! section is read; header, tables and blocks are skipped wholesale. Honored
//! group codes: 0 entity type, 8 layer, 10/20 and 11/21 coordinates, 40
//! radius, 50/51 angles, 1 text content (plus 3 for MTEXT continuation
//! chunks), 70 bit 1 polyline closed flag. Z coordinates (30/31) are read and
//! discarded with a per-document count; the pipeline is strictly 2D.

use crate::cad::{CadDocument, CadEntity, EntityGeometry, Handle};
use crate::error::Error;
use crate::geom::Point2;
use crate::Result;

const BINARY_SENTINEL: &str = "AutoCAD Binary DXF";

/// One group-code/value pair. `line` is the 1-based line number of the code
/// line; the value sits on `line + 1`.
struct Pair<'a> {
    code: i32,
    value: &'a str,
    line: usize,
}

/// Parses ASCII DXF text into a typed document. Supported entities: LINE,
/// LWPOLYLINE, POLYLINE (with VERTEX/SEQEND), CIRCLE, ARC, TEXT, MTEXT.
/// Everything else, including INSERT block references, is recorded as
/// `Unsupported` so no input record is ever silently dropped. Supported
/// entities whose payload is degenerate (zero-length line, nonpositive
/// radius, zero-sweep arc, short polyline) are likewise recorded as
/// `Unsupported` with a reason in the type name, which keeps downstream
/// geometry invariants unconditional.
pub fn parse_dxf(text: &str, source_name: &str) -> Result<CadDocument> {
    if text.starts_with(BINARY_SENTINEL) {
        return Err(Error::DxfStructure(
            "binary DXF is not supported; export as ASCII DXF".into(),
        ));
    }
    let pairs = collect_pairs(text)?;
    let (start, end) = find_entities_section(&pairs)?;

    let mut entities = Vec::new();
    let mut z_discarded = 0u64;
    let mut next_handle = 1u64;
    let mut i = start;
    while i < end {
        if pairs[i].code != 0 {
            // Stray pair before the first entity record; nothing to attach
            // it to.
            return Err(Error::DxfParse {
                line: pairs[i].line,
                message: format!(
                    "expected an entity record (group code 0), got group code {}",
                    pairs[i].code
                ),
            });
        }
        let type_name = pairs[i].value.trim();
        let body_end = scan_body(&pairs, i + 1, end);
        let body = &pairs[i + 1..body_end];
        let mut fields = EntityFields::read(body)?;
        i = body_end;

        let geometry = match type_name {
            "LINE" => line_geometry(&fields),
            "LWPOLYLINE" => polyline_geometry(&fields, "LWPOLYLINE")?,
            "POLYLINE" => {
                // Vertices follow as VERTEX sub-records, closed by SEQEND.
                while i < end && pairs[i].code == 0 {
                    let sub = pairs[i].value.trim();
                    if sub == "VERTEX" {
                        let sub_end = scan_body(&pairs, i + 1, end);
                        let vf = EntityFields::read(&pairs[i + 1..sub_end])?;
                        fields.xs.extend(vf.xs);
                        fields.ys.extend(vf.ys);
                        fields.z_count += vf.z_count;
                        i = sub_end;
                    } else if sub == "SEQEND" {
                        i = scan_body(&pairs, i + 1, end);
                        break;
                    } else {
                        break;
                    }
                }
                polyline_geometry(&fields, "POLYLINE")?
            }
            "CIRCLE" => circle_geometry(&fields),
            "ARC" => arc_geometry(&fields),
            "TEXT" => EntityGeometry::Text {
                insert: fields.first_point(),
                content: fields.text.clone(),
            },
            "MTEXT" => EntityGeometry::Text {
                insert: fields.first_point(),
                // Long MTEXT bodies arrive as code-3 chunks followed by a
                // final code-1 chunk, in order.
                content: format!("{}{}", fields.text_chunks, fields.text),
            },
            other => EntityGeometry::Unsupported {
                type_name: other.to_string(),
            },
        };
        z_discarded += fields.z_count;
        entities.push(CadEntity::new(Handle(next_handle), fields.layer, geometry));
        next_handle += 1;
    }

    Ok(CadDocument {
        entities,
        source_name: source_name.to_string(),
        z_discarded,
    })
}

/// Splits the text into (code, value) pairs, validating pairing and numeric
/// codes. Accepts LF and CRLF line endings.
fn collect_pairs(text: &str) -> Result<Vec<Pair<'_>>> {
    let mut pairs = Vec::new();
    let mut lines = text.lines().enumerate();
    while let Some((idx, code_line)) = lines.next() {
        let line = idx + 1;
        let trimmed = code_line.trim();
        let code: i32 = trimmed.parse().map_err(|_| Error::DxfParse {
            line,
            message: format!("group code is not an integer: {:?}", trimmed),
        })?;
        let Some((_, value)) = lines.next() else {
            return Err(Error::DxfParse {
                line,
                message: "group code at end of file has no value line".into(),
            });
        };
        pairs.push(Pair { code, value, line });
    }
    Ok(pairs)
}

/// Locates the pairs strictly inside SECTION/ENTITIES, excluding the (2,
/// ENTITIES) name pair and the closing ENDSEC.
fn find_entities_section(pairs: &[Pair<'_>]) -> Result<(usize, usize)> {
    let mut i = 0;
    while i < pairs.len() {
        let is_section = pairs[i].code == 0 && pairs[i].value.trim() == "SECTION";
        if !is_section {
            i += 1;
            continue;
        }
        let name = if i + 1 < pairs.len() && pairs[i + 1].code == 2 {
            pairs[i + 1].value.trim()
        } else {
            ""
        };
        let mut j = i + 1;
        while j < pairs.len() {
            let v = pairs[j].value.trim();
            if pairs[j].code == 0 && (v == "ENDSEC" || v == "EOF") {
                break;
            }
            j += 1;
        }
        if name == "ENTITIES" {
            return Ok((i + 2, j));
        }
        i = j + 1;
    }
    Err(Error::DxfStructure("no ENTITIES section found".into()))
}

/// Index just past the last non-zero-code pair starting at `from`.
fn scan_body(pairs: &[Pair<'_>], from: usize, end: usize) -> usize {
    let mut j = from;
    while j < end && pairs[j].code != 0 {
        j += 1;
    }
    j
}

/// Accumulated fields of one entity record. Unknown group codes are skipped;
/// DXF files carry many stylistic codes (color, linetype, handles) the
/// pipeline does not use.
#[derive(Default)]
struct EntityFields {
    layer: String,
    /// Repeated 10/20 values in order; one pair for LINE/CIRCLE/ARC/TEXT,
    /// one per vertex for LWPOLYLINE.
    xs: Vec<f64>,
    ys: Vec<f64>,
    x2: Option<f64>,
    y2: Option<f64>,
    radius: Option<f64>,
    start_angle: Option<f64>,
    end_angle: Option<f64>,
    text: String,
    text_chunks: String,
    flags: i64,
    z_count: u64,
    first_line: usize,
}

impl EntityFields {
    fn read(body: &[Pair<'_>]) -> Result<EntityFields> {
        let mut f = EntityFields {
            layer: "0".to_string(),
            first_line: body.first().map(|p| p.line).unwrap_or(0),
            ..EntityFields::default()
        };
        for p in body {
            match p.code {
                8 => f.layer = p.value.trim().to_string(),
                10 => f.xs.push(parse_f64(p)?),
                20 => f.ys.push(parse_f64(p)?),
                11 => f.x2 = Some(parse_f64(p)?),
                21 => f.y2 = Some(parse_f64(p)?),
                40 => f.radius = Some(parse_f64(p)?),
                50 => f.start_angle = Some(parse_f64(p)?),
                51 => f.end_angle = Some(parse_f64(p)?),
                1 => f.text = p.value.to_string(),
                3 => f.text_chunks.push_str(p.value),
                70 => f.flags = parse_i64(p)?,
                30 | 31 => {
                    parse_f64(p)?;
                    f.z_count += 1;
                }
                _ => {}
            }
        }
        Ok(f)
    }

    /// First 10/20 coordinate; DXF defaults omitted ordinates to 0.
    fn first_point(&self) -> Point2 {
        Point2::new(
            self.xs.first().copied().unwrap_or(0.0),
            self.ys.first().copied().unwrap_or(0.0),
        )
    }

    fn second_point(&self) -> Point2 {
        Point2::new(self.x2.unwrap_or(0.0), self.y2.unwrap_or(0.0))
    }

    fn closed(&self) -> bool {
        self.flags & 1 == 1
    }

    fn vertices(&self, type_name: &str) -> Result<Vec<Point2>> {
        if self.xs.len() != self.ys.len() {
            return Err(Error::DxfParse {
                line: self.first_line,
                message: format!(
                    "{}: {} x ordinates (code 10) but {} y ordinates (code 20)",
                    type_name,
                    self.xs.len(),
                    self.ys.len()
                ),
            });
        }
        Ok(self
            .xs
            .iter()
            .zip(&self.ys)
            .map(|(&x, &y)| Point2::new(x, y))
            .collect())
    }
}

fn parse_f64(p: &Pair<'_>) -> Result<f64> {
    let trimmed = p.value.trim();
    let v: f64 = trimmed.parse().map_err(|_| Error::DxfParse {
        line: p.line + 1,
        message: format!("group code {} value is not a number: {:?}", p.code, trimmed),
    })?;
    if !v.is_finite() {
        return Err(Error::DxfParse {
            line: p.line + 1,
            message: format!("group code {} value is not finite: {:?}", p.code, trimmed),
        });
    }
    Ok(v)
}

fn parse_i64(p: &Pair<'_>) -> Result<i64> {
    let trimmed = p.value.trim();
    trimmed.parse().map_err(|_| Error::DxfParse {
        line: p.line + 1,
        message: format!(
            "group code {} value is not an integer: {:?}",
            p.code, trimmed
        ),
    })
}

fn line_geometry(f: &EntityFields) -> EntityGeometry {
    let start = f.first_point();
    let end = f.second_point();
    if start == end {
        return EntityGeometry::Unsupported {
            type_name: "LINE(zero-length)".into(),
        };
    }
    EntityGeometry::Line { start, end }
}

fn polyline_geometry(f: &EntityFields, type_name: &str) -> Result<EntityGeometry> {
    let vertices = f.vertices(type_name)?;
    if vertices.len() < 2 {
        return Ok(EntityGeometry::Unsupported {
            type_name: format!("{}(fewer than 2 vertices)", type_name),
        });
    }
    if vertices.iter().all(|v| *v == vertices[0]) {
        return Ok(EntityGeometry::Unsupported {
            type_name: format!("{}(zero-length)", type_name),
        });
    }
    Ok(EntityGeometry::Polyline {
        vertices,
        closed: f.closed(),
    })
}

fn circle_geometry(f: &EntityFields) -> EntityGeometry {
    let radius = f.radius.unwrap_or(0.0);
    if radius <= 0.0 {
        return EntityGeometry::Unsupported {
            type_name: "CIRCLE(nonpositive radius)".into(),
        };
    }
    EntityGeometry::Circle {
        center: f.first_point(),
        radius,
    }
}

fn arc_geometry(f: &EntityFields) -> EntityGeometry {
    let radius = f.radius.unwrap_or(0.0);
    if radius <= 0.0 {
        return EntityGeometry::Unsupported {
            type_name: "ARC(nonpositive radius)".into(),
        };
    }
    let start_angle = f.start_angle.unwrap_or(0.0);
    let end_angle = f.end_angle.unwrap_or(0.0);
    // CCW sweep; equal angles (mod 360) have nothing to draw. Full circles
    // arrive as CIRCLE entities, not 0..360 arcs.
    if (end_angle - start_angle).rem_euclid(360.0) == 0.0 {
        return EntityGeometry::Unsupported {
            type_name: "ARC(zero sweep)".into(),
        };
    }
    EntityGeometry::Arc {
        center: f.first_point(),
        radius,
        start_angle,
        end_angle,
    }
}
