//! Shared integration-test machinery: the synthetic campus fixture
//! generator (whose construction doubles as the expected-count oracle) and
//! independent implementations of the numeric and geometric algorithms used
//! to cross-check the library.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use cad2gis::geom::Point2;

/// Campus drawing layout, drawing units. Every coordinate is a multiple of
/// 0.25 and the control transform is scale 0.5 / rotation 0 / integer
/// translation, so every exported coordinate is an exact binary decimal and
/// byte-level determinism assertions are meaningful.
///
/// Layout: a rectangular conduit loop along y in [-10, 0] whose top edge is
/// `top_segments` spans of 10 units; catch-basin rings at y = 20; sidewalk /
/// building / scratch layers stacked above.
#[derive(Debug, Clone, Copy)]
pub struct FixtureSpec {
    /// K1: top-edge spans split in two with a text label in the gap.
    pub gaps: usize,
    /// K2: open catch-basin rings (0.25-unit closing gap).
    pub rings: usize,
    /// K3: manhole circles centered on conduit nodes.
    pub circles: usize,
    /// K4: total text entities (gap labels count); all must attach.
    pub annotations: usize,
    /// K5: conduit stubs whose far end touches nothing.
    pub dangles: usize,
    /// Top-edge span count; must cover circles/dangles/annotation columns.
    pub top_segments: usize,
    pub sidewalk_lines: usize,
    pub building_lines: usize,
    pub splines: usize,
    pub duplicate_lines: usize,
    pub scratch_lines: usize,
    /// Split the left loop edge by 0.25 units to exercise endpoint snapping.
    pub split_node: bool,
}

impl FixtureSpec {
    pub fn campus() -> Self {
        FixtureSpec {
            gaps: 3,
            rings: 2,
            circles: 4,
            annotations: 6,
            dangles: 0,
            top_segments: 8,
            sidewalk_lines: 1,
            building_lines: 1,
            splines: 1,
            duplicate_lines: 1,
            scratch_lines: 1,
            split_node: true,
        }
    }

    pub fn campus_with_dangles(n: usize) -> Self {
        FixtureSpec {
            dangles: n,
            ..FixtureSpec::campus()
        }
    }

    /// Exactly 10,000 entities (see `total_entities`).
    pub fn large() -> Self {
        FixtureSpec {
            gaps: 1000,
            rings: 500,
            circles: 1500,
            annotations: 2500,
            dangles: 200,
            top_segments: 4000,
            sidewalk_lines: 150,
            building_lines: 100,
            splines: 30,
            duplicate_lines: 10,
            scratch_lines: 6,
            split_node: true,
        }
    }

    pub fn conduit_lines(&self) -> u64 {
        (self.top_segments + self.gaps + 3 + usize::from(self.split_node) + self.dangles) as u64
    }

    pub fn total_entities(&self) -> u64 {
        self.conduit_lines()
            + (self.circles
                + self.rings
                + self.annotations
                + self.sidewalk_lines
                + self.building_lines
                + self.splines
                + self.duplicate_lines
                + self.scratch_lines) as u64
    }

    pub fn expected_dropped(&self) -> u64 {
        (self.sidewalk_lines + self.scratch_lines + self.duplicate_lines) as u64
    }
}

pub struct Fixture {
    pub dxf: String,
    pub profile: String,
    pub control_points: String,
    pub spec: FixtureSpec,
}

fn line(out: &mut String, layer: &str, a: (f64, f64), b: (f64, f64)) {
    writeln!(
        out,
        "0\nLINE\n8\n{layer}\n10\n{}\n20\n{}\n11\n{}\n21\n{}",
        a.0, a.1, b.0, b.1
    )
    .unwrap();
}

fn text(out: &mut String, layer: &str, at: (f64, f64), content: &str) {
    writeln!(
        out,
        "0\nTEXT\n8\n{layer}\n10\n{}\n20\n{}\n1\n{content}",
        at.0, at.1
    )
    .unwrap();
}

fn circle(out: &mut String, layer: &str, center: (f64, f64), r: f64) {
    writeln!(
        out,
        "0\nCIRCLE\n8\n{layer}\n10\n{}\n20\n{}\n40\n{r}",
        center.0, center.1
    )
    .unwrap();
}

fn open_polyline(out: &mut String, layer: &str, vertices: &[(f64, f64)]) {
    writeln!(out, "0\nLWPOLYLINE\n8\n{layer}\n70\n0").unwrap();
    for v in vertices {
        writeln!(out, "10\n{}\n20\n{}", v.0, v.1).unwrap();
    }
}

/// Builds the campus drawing. The injected defect counts are exact by
/// construction:
/// - each gap bridges into one merge (gap 1.0 <= gap-bridge 2.0, label at
///   0.25 off the midpoint),
/// - each ring's 0.25-unit gap (0.125 in CRS units) survives conversion
///   (ring-close 0.2 < 0.25 drawing units) and closes in cleaning,
/// - each circle collapses to a point at a conduit node,
/// - every text lands within the attach tolerance of a conduit,
/// - each dangle stub starts on a node and ends in open space.
pub fn generate(spec: FixtureSpec) -> Fixture {
    assert!(spec.annotations >= spec.gaps, "gap labels count as annotations");
    assert!(spec.circles <= spec.top_segments);
    assert!(spec.dangles <= spec.top_segments);
    assert!(spec.annotations - spec.gaps <= spec.top_segments);
    assert!(spec.gaps <= spec.top_segments);
    assert!(spec.duplicate_lines <= spec.top_segments - spec.gaps);

    let s = spec.top_segments;
    let right = 10.0 * s as f64;
    let mut d = String::from("0\nSECTION\n2\nENTITIES\n");

    // Conduit loop. Top spans first; the first `gaps` spans are split.
    for i in 0..s {
        let x0 = 10.0 * i as f64;
        if i < spec.gaps {
            line(&mut d, "CONDUIT", (x0, 0.0), (x0 + 4.5, 0.0));
            line(&mut d, "CONDUIT", (x0 + 5.5, 0.0), (x0 + 10.0, 0.0));
        } else {
            line(&mut d, "CONDUIT", (x0, 0.0), (x0 + 10.0, 0.0));
        }
    }
    line(&mut d, "CONDUIT", (right, 0.0), (right, -10.0));
    line(&mut d, "CONDUIT", (right, -10.0), (0.0, -10.0));
    if spec.split_node {
        line(&mut d, "CONDUIT", (0.0, -10.0), (0.0, -5.125));
        line(&mut d, "CONDUIT", (0.0, -4.875), (0.0, 0.0));
    } else {
        line(&mut d, "CONDUIT", (0.0, -10.0), (0.0, 0.0));
    }
    for j in 1..=spec.dangles {
        let x = 10.0 * j as f64;
        line(&mut d, "CONDUIT", (x, 0.0), (x, 7.75));
    }

    // Gap labels, then the remaining annotations along the top edge.
    for i in 0..spec.gaps {
        text(&mut d, "ANNO", (10.0 * i as f64 + 5.0, 0.25), "8\"");
    }
    for n in 0..(spec.annotations - spec.gaps) {
        text(
            &mut d,
            "ANNO",
            (10.0 * n as f64 + 0.5, 0.5),
            &format!("MH-{n}"),
        );
    }

    for i in 1..=spec.circles {
        circle(&mut d, "MH", (10.0 * i as f64, 0.0), 0.5);
    }

    for r in 0..spec.rings {
        let x = 10.0 * r as f64;
        open_polyline(
            &mut d,
            "CB",
            &[
                (x, 20.0),
                (x + 2.0, 20.0),
                (x + 2.0, 22.0),
                (x, 22.0),
                (x, 20.25),
            ],
        );
    }

    for k in 0..spec.sidewalk_lines {
        let x = 10.0 * k as f64;
        line(&mut d, "SIDEWALK", (x, 30.0), (x + 5.0, 30.0));
    }
    for k in 0..spec.building_lines {
        let x = 10.0 * k as f64;
        line(&mut d, "BLDG", (x, 40.0), (x + 5.0, 40.0));
    }
    for _ in 0..spec.splines {
        d.push_str("0\nSPLINE\n8\nCONDUIT\n");
    }
    // Exact duplicates of unsplit top spans.
    for k in 0..spec.duplicate_lines {
        let x0 = 10.0 * (spec.gaps + k) as f64;
        line(&mut d, "CONDUIT", (x0, 0.0), (x0 + 10.0, 0.0));
    }
    for k in 0..spec.scratch_lines {
        let x = 10.0 * k as f64;
        line(&mut d, "SCRATCH", (x, 50.0), (x + 5.0, 50.0));
    }
    d.push_str("0\nENDSEC\n0\nEOF\n");

    let profile = r#"{
  "rules": [
    {"match": "CONDUIT", "action": "line"},
    {"match": "MH", "action": "point", "collapse": "centroid", "attributes": {"kind": "manhole"}},
    {"match": "CB", "action": "polygon"},
    {"match": "ANNO", "action": "annotation"},
    {"match": "SIDEWALK", "action": "drop"},
    {"match": "BLDG", "action": "reference-only"}
  ],
  "tolerances": {"snap": 0.15, "ring-close": 0.2},
  "crs": {"epsg": 3435, "wkt": "PROJCS[\"campus-grid\"]"},
  "transform_model": "similarity"
}
"#
    .to_string();

    // Scale 0.5, rotation 0, translation (1000, 2000); exact in binary.
    let control_points = "src_x,src_y,dst_x,dst_y,label\n\
                          0,0,1000,2000,sw\n\
                          80,0,1040,2000,se\n\
                          80,40,1040,2020,ne\n\
                          0,40,1000,2020,nw\n"
        .to_string();

    Fixture {
        dxf: d,
        profile,
        control_points,
        spec,
    }
}

/// Writes fixture inputs into `dir` and returns a ready pipeline config.
pub fn write_fixture(dir: &Path, fixture: &Fixture) -> cad2gis::PipelineConfig {
    std::fs::write(dir.join("campus.dxf"), &fixture.dxf).unwrap();
    std::fs::write(dir.join("profile.json"), &fixture.profile).unwrap();
    std::fs::write(dir.join("control.csv"), &fixture.control_points).unwrap();
    cad2gis::PipelineConfig {
        dxf_path: dir.join("campus.dxf"),
        profile_path: dir.join("profile.json"),
        control_points_path: dir.join("control.csv"),
        out_dir: dir.join("out"),
        formats: cad2gis::Formats {
            geojson: true,
            shapefile: true,
        },
        report_path: dir.join("report.json"),
        passes: cad2gis::PassSelection::default(),
        max_residual: None,
    }
}

pub mod oracle {
    use super::Point2;
    use cad2gis::georef::ControlPointPair;
    use cad2gis::{CadDocument, EntityGeometry, FeatureClass, FeatureSet, Geometry, Tolerances};

    /// Dense n x n Gaussian elimination with partial pivoting.
    pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = b.len();
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| {
                a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
            })?;
            if a[pivot][col].abs() < 1e-12 {
                return None;
            }
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in (col + 1)..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut acc = b[row];
            for k in (row + 1)..n {
                acc -= a[row][k] * x[k];
            }
            x[row] = acc / a[row][row];
        }
        Some(x)
    }

    /// Linear least squares by normal equations over rows (coeffs, rhs).
    pub fn least_squares(rows: &[(Vec<f64>, f64)], unknowns: usize) -> Option<Vec<f64>> {
        let mut ata = vec![vec![0.0; unknowns]; unknowns];
        let mut atb = vec![0.0; unknowns];
        for (row, rhs) in rows {
            for i in 0..unknowns {
                for j in 0..unknowns {
                    ata[i][j] += row[i] * row[j];
                }
                atb[i] += row[i] * rhs;
            }
        }
        gauss_solve(ata, atb)
    }

    pub struct SimilarityFit {
        pub scale: f64,
        pub rotation: f64,
        pub tx: f64,
        pub ty: f64,
        pub rms: f64,
    }

    /// Similarity fit as a generic linear problem in (a, b, tx, ty) where
    /// x' = a x - b y + tx, y' = b x + a y + ty. Entirely separate from the
    /// production centered-moment formulation.
    pub fn fit_similarity(pairs: &[ControlPointPair]) -> SimilarityFit {
        let mut rows = Vec::new();
        for p in pairs {
            rows.push((vec![p.source.x, -p.source.y, 1.0, 0.0], p.target.x));
            rows.push((vec![p.source.y, p.source.x, 0.0, 1.0], p.target.y));
        }
        let x = least_squares(&rows, 4).expect("oracle similarity fit is nondegenerate");
        let (a, b, tx, ty) = (x[0], x[1], x[2], x[3]);
        let mut sq = 0.0;
        for p in pairs {
            let px = a * p.source.x - b * p.source.y + tx;
            let py = b * p.source.x + a * p.source.y + ty;
            sq += (px - p.target.x).powi(2) + (py - p.target.y).powi(2);
        }
        SimilarityFit {
            scale: a.hypot(b),
            rotation: b.atan2(a),
            tx,
            ty,
            rms: (sq / pairs.len() as f64).sqrt(),
        }
    }

    pub struct AffineFit {
        pub coefficients: [f64; 6],
        pub rms: f64,
    }

    pub fn fit_affine(pairs: &[ControlPointPair]) -> AffineFit {
        let mut rows = Vec::new();
        for p in pairs {
            rows.push((
                vec![p.source.x, p.source.y, 1.0, 0.0, 0.0, 0.0],
                p.target.x,
            ));
            rows.push((
                vec![0.0, 0.0, 0.0, p.source.x, p.source.y, 1.0],
                p.target.y,
            ));
        }
        let x = least_squares(&rows, 6).expect("oracle affine fit is nondegenerate");
        let c: [f64; 6] = [x[0], x[1], x[2], x[3], x[4], x[5]];
        let mut sq = 0.0;
        for p in pairs {
            let px = c[0] * p.source.x + c[1] * p.source.y + c[2];
            let py = c[3] * p.source.x + c[4] * p.source.y + c[5];
            sq += (px - p.target.x).powi(2) + (py - p.target.y).powi(2);
        }
        AffineFit {
            coefficients: c,
            rms: (sq / pairs.len() as f64).sqrt(),
        }
    }

    /// Canonical form: members ascending inside groups, groups ordered by
    /// first member.
    pub fn canonical(mut groups: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
        for g in &mut groups {
            g.sort_unstable();
        }
        groups.sort_by_key(|g| g[0]);
        groups
    }

    /// O(n^2) single-linkage clustering: BFS over the "within tol" graph.
    pub fn brute_force_clusters(points: &[Point2], tol: f64) -> Vec<Vec<usize>> {
        let n = points.len();
        let mut seen = vec![false; n];
        let mut groups = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut queue = vec![start];
            let mut group = Vec::new();
            seen[start] = true;
            while let Some(i) = queue.pop() {
                group.push(i);
                for j in 0..n {
                    if !seen[j] && points[i].distance(&points[j]) <= tol {
                        seen[j] = true;
                        queue.push(j);
                    }
                }
            }
            groups.push(group);
        }
        canonical(groups)
    }

    /// O(n^2) reimplementation of the text-gap merge predicate, returning
    /// the partition of entity indices.
    pub fn brute_force_bridge_partition(doc: &CadDocument, tol: &Tolerances) -> Vec<Vec<usize>> {
        struct End {
            entity: usize,
            point: Point2,
            inward: Point2,
        }
        let mut ends = Vec::new();
        for (i, e) in doc.entities.iter().enumerate() {
            match &e.geometry {
                EntityGeometry::Line { start, end } => {
                    ends.push(End {
                        entity: i,
                        point: *start,
                        inward: *end,
                    });
                    ends.push(End {
                        entity: i,
                        point: *end,
                        inward: *start,
                    });
                }
                EntityGeometry::Polyline { vertices, closed } if !closed && vertices.len() >= 2 => {
                    ends.push(End {
                        entity: i,
                        point: vertices[0],
                        inward: vertices[1],
                    });
                    ends.push(End {
                        entity: i,
                        point: vertices[vertices.len() - 1],
                        inward: vertices[vertices.len() - 2],
                    });
                }
                _ => {}
            }
        }
        let texts: Vec<Point2> = doc
            .entities
            .iter()
            .filter_map(|e| match &e.geometry {
                EntityGeometry::Text { insert, .. } => Some(*insert),
                _ => None,
            })
            .collect();

        let mut labels: Vec<usize> = (0..doc.entities.len()).collect();
        let merge = |labels: &mut Vec<usize>, a: usize, b: usize| {
            let (la, lb) = (labels[a], labels[b]);
            if la != lb {
                for l in labels.iter_mut() {
                    if *l == lb {
                        *l = la;
                    }
                }
            }
        };
        for a in &ends {
            for b in &ends {
                if a.entity >= b.entity
                    || doc.entities[a.entity].layer != doc.entities[b.entity].layer
                {
                    continue;
                }
                let gap = a.point.distance(&b.point);
                if !(gap > 0.0 && gap <= tol.gap_bridge) {
                    continue;
                }
                let lateral_ok = cad2gis::geom::point_line_distance(&b.point, &a.inward, &a.point)
                    <= tol.lateral_offset
                    && cad2gis::geom::point_line_distance(&a.point, &b.inward, &b.point)
                        <= tol.lateral_offset;
                if !lateral_ok {
                    continue;
                }
                let out_a = (a.point.x - a.inward.x) * (b.point.x - a.point.x)
                    + (a.point.y - a.inward.y) * (b.point.y - a.point.y);
                let out_b = (b.point.x - b.inward.x) * (a.point.x - b.point.x)
                    + (b.point.y - b.inward.y) * (a.point.y - b.point.y);
                if out_a <= 0.0 || out_b <= 0.0 {
                    continue;
                }
                let mid = a.point.midpoint(&b.point);
                if !texts.iter().any(|t| t.distance(&mid) <= tol.gap_bridge) {
                    continue;
                }
                merge(&mut labels, a.entity, b.entity);
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (i, l) in labels.iter().enumerate() {
            groups.entry(*l).or_default().push(i);
        }
        canonical(groups.into_values().collect())
    }

    /// O(n^2) dangle scan: every linestring endpoint must have another node
    /// (point feature or other endpoint instance) within tol.
    pub fn brute_force_dangles(fs: &FeatureSet, tol: f64) -> Vec<(u64, u64, u64)> {
        let mut nodes: Vec<(Option<(usize, u8)>, Point2)> = Vec::new();
        for (i, f) in fs.features.iter().enumerate() {
            match (&f.geometry, f.klass) {
                (Geometry::Point(p), FeatureClass::Point) => nodes.push((None, *p)),
                (Geometry::LineString(v), _) => {
                    nodes.push((Some((i, 0)), v[0]));
                    nodes.push((Some((i, 1)), *v.last().unwrap()));
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        for (i, (owner, p)) in nodes.iter().enumerate() {
            let Some((feature_index, _)) = owner else {
                continue;
            };
            let connected = nodes
                .iter()
                .enumerate()
                .any(|(j, (_, q))| j != i && p.distance(q) <= tol);
            if !connected {
                out.push((
                    fs.features[*feature_index].id.0,
                    p.x.to_bits(),
                    p.y.to_bits(),
                ));
            }
        }
        out.sort_unstable();
        out
    }
}

/// Minimal independent shapefile reader for round-trip checks. Plain slice
/// arithmetic; deliberately shares no code with the writer.
pub mod shp_reader {
    fn be_i32(b: &[u8], at: usize) -> i32 {
        i32::from_be_bytes(b[at..at + 4].try_into().unwrap())
    }
    fn le_i32(b: &[u8], at: usize) -> i32 {
        i32::from_le_bytes(b[at..at + 4].try_into().unwrap())
    }
    fn le_f64(b: &[u8], at: usize) -> f64 {
        f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
    }

    pub struct ShpHeader {
        pub file_code: i32,
        pub length_words: i32,
        pub version: i32,
        pub shape_type: i32,
        pub bbox: [f64; 4],
    }

    pub struct ShpRecord {
        pub number: i32,
        pub shape_type: i32,
        pub points: Vec<(f64, f64)>,
    }

    pub fn read_shp(bytes: &[u8]) -> (ShpHeader, Vec<ShpRecord>) {
        assert!(bytes.len() >= 100, "truncated .shp header");
        let header = ShpHeader {
            file_code: be_i32(bytes, 0),
            length_words: be_i32(bytes, 24),
            version: le_i32(bytes, 28),
            shape_type: le_i32(bytes, 32),
            bbox: [
                le_f64(bytes, 36),
                le_f64(bytes, 44),
                le_f64(bytes, 52),
                le_f64(bytes, 60),
            ],
        };
        assert_eq!(header.length_words as usize * 2, bytes.len());
        let mut records = Vec::new();
        let mut at = 100;
        while at < bytes.len() {
            let number = be_i32(bytes, at);
            let content_words = be_i32(bytes, at + 4) as usize;
            let content = &bytes[at + 8..at + 8 + content_words * 2];
            let shape_type = le_i32(content, 0);
            let points = match shape_type {
                1 => vec![(le_f64(content, 4), le_f64(content, 12))],
                3 | 5 => {
                    let num_parts = le_i32(content, 36) as usize;
                    assert_eq!(num_parts, 1, "single-part records only");
                    let num_points = le_i32(content, 40) as usize;
                    let first_point = 44 + 4 * num_parts;
                    (0..num_points)
                        .map(|i| {
                            (
                                le_f64(content, first_point + 16 * i),
                                le_f64(content, first_point + 16 * i + 8),
                            )
                        })
                        .collect()
                }
                other => panic!("unexpected shape type {other}"),
            };
            records.push(ShpRecord {
                number,
                shape_type,
                points,
            });
            at += 8 + content_words * 2;
        }
        (header, records)
    }

    /// (offset_words, content_words) per record.
    pub fn read_shx(bytes: &[u8]) -> Vec<(i32, i32)> {
        assert!(bytes.len() >= 100);
        assert_eq!(be_i32(bytes, 24) as usize * 2, bytes.len());
        (100..bytes.len())
            .step_by(8)
            .map(|at| (be_i32(bytes, at), be_i32(bytes, at + 4)))
            .collect()
    }

    pub struct DbfTable {
        pub fields: Vec<String>,
        /// Records as trimmed strings, field order matching `fields`.
        pub records: Vec<Vec<String>>,
    }

    pub fn read_dbf(bytes: &[u8]) -> DbfTable {
        assert_eq!(bytes[0], 0x03);
        let record_count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let header_len = u16::from_le_bytes(bytes[8..10].try_into().unwrap()) as usize;
        let record_len = u16::from_le_bytes(bytes[10..12].try_into().unwrap()) as usize;
        let field_count = (header_len - 33) / 32;
        let mut fields = Vec::new();
        let mut widths = Vec::new();
        for i in 0..field_count {
            let at = 32 + 32 * i;
            let name_bytes = &bytes[at..at + 11];
            let end = name_bytes.iter().position(|&b| b == 0).unwrap_or(11);
            fields.push(String::from_utf8(name_bytes[..end].to_vec()).unwrap());
            assert_eq!(bytes[at + 11], b'C');
            widths.push(bytes[at + 16] as usize);
        }
        assert_eq!(bytes[header_len - 1], 0x0D);
        let mut records = Vec::new();
        for r in 0..record_count {
            let at = header_len + r * record_len;
            assert_eq!(bytes[at], b' ', "deleted records are never written");
            let mut row = Vec::new();
            let mut cell_at = at + 1;
            for w in &widths {
                let cell = &bytes[cell_at..cell_at + w];
                row.push(
                    String::from_utf8(cell.to_vec())
                        .unwrap()
                        .trim_end()
                        .to_string(),
                );
                cell_at += w;
            }
            records.push(row);
        }
        assert_eq!(bytes[header_len + record_count * record_len], 0x1A);
        DbfTable { fields, records }
    }
}
